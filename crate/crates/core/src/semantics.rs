//! Truth of conditional formulas on fixed random streams, and probabilities.
//!
//! Every conditional atom of a formula is evaluated on the *same* stream.
//! A stream prefix settles an atom once its intervened machine halts without
//! reading past the prefix; the truth value then holds on every extension.
//! [`prob_interval`] walks the binary tree of prefixes and sums the dyadic
//! measure of the settled leaves, giving exact bounds `lo <= P <= hi`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::limits::Limits;
use crate::par::{self, Strategy};
use crate::syntax::{CondAtom, InterventionSpec, LinearAtom, NonProbFormula, ProbFormula};
use crate::tri::Tri;
use crate::vm::{intervene, run, RunOutcome, SimProgram};

/// Prefix-tree levels below which branches are forked onto the thread pool.
const PAR_DEPTH: usize = 10;

/// Hard ceiling for the configurable bit budget (leaf weights are `u128`).
const ABSOLUTE_MAX_BITS: u32 = 120;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("bit budget {requested} exceeds the configured maximum {max}")]
    BitBudget { requested: u32, max: u32 },
}

/// Exact bounds on a probability.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProbInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl ProbInterval {
    pub fn point(p: BigRational) -> Self {
        ProbInterval {
            lo: p.clone(),
            hi: p,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, p: &BigRational) -> bool {
        &self.lo <= p && p <= &self.hi
    }

    /// `[1 - hi, 1 - lo]`.
    pub fn complement(&self) -> Self {
        let one = BigRational::one();
        ProbInterval {
            lo: &one - &self.hi,
            hi: one - &self.lo,
        }
    }

    /// `[lo', hi'] ⊆ [lo, hi]`.
    pub fn within(&self, outer: &ProbInterval) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The intervened machines of a formula, one per distinct antecedent.
struct Machines {
    by_antecedent: BTreeMap<InterventionSpec, SimProgram>,
}

impl Machines {
    fn new(p: &SimProgram, formulas: &[&NonProbFormula]) -> Self {
        let mut by_antecedent = BTreeMap::new();
        for f in formulas {
            for atom in f.cond_atoms() {
                by_antecedent
                    .entry(atom.antecedent.clone())
                    .or_insert_with(|| intervene(p, &atom.antecedent));
            }
        }
        Machines { by_antecedent }
    }

    /// Evaluates `f` on `prefix`. The flag reports whether some run that was
    /// consulted asked for a bit beyond the prefix.
    fn eval(&self, f: &NonProbFormula, prefix: &[bool], fuel: u64) -> (Tri, bool) {
        let mut runs: BTreeMap<&InterventionSpec, RunOutcome> = BTreeMap::new();
        let mut demand = false;
        let truth = f.eval_tri(&mut |atom: &CondAtom| {
            let (spec, machine) = self
                .by_antecedent
                .get_key_value(&atom.antecedent)
                .expect("antecedent registered");
            let outcome = runs
                .entry(spec)
                .or_insert_with(|| run(machine, prefix, fuel));
            match outcome {
                RunOutcome::Halted { tape, .. } => {
                    Tri::from_bool(atom.consequent.eval(&|i| tape.get(i)))
                }
                RunOutcome::FuelExhausted { .. } => Tri::Unknown,
                RunOutcome::BitDemand { .. } => {
                    demand = true;
                    Tri::Unknown
                }
            }
        });
        (truth, demand)
    }
}

/// Truth of `f` on every stream extending `prefix`, or `Unknown` when some
/// needed run exhausts its fuel or reads past the prefix.
pub fn eval_fixed(p: &SimProgram, f: &NonProbFormula, prefix: &[bool], fuel: u64) -> Tri {
    Machines::new(p, &[f]).eval(f, prefix, fuel).0
}

/// Bounded evaluator for probabilities and inequality formulas.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub bit_budget: u32,
    pub fuel: u64,
    pub max_bit_budget: u32,
    pub strategy: Strategy,
}

impl Evaluator {
    pub fn new(bit_budget: u32, fuel: u64) -> Self {
        Evaluator {
            bit_budget,
            fuel,
            max_bit_budget: Limits::default().max_bit_budget,
            strategy: Strategy::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_limits(mut self, limits: &Limits) -> Self {
        self.max_bit_budget = limits.max_bit_budget;
        self
    }

    fn check_budget(&self) -> Result<(), EvalError> {
        let max = self.max_bit_budget.min(ABSOLUTE_MAX_BITS);
        if self.bit_budget > max {
            return Err(EvalError::BitBudget {
                requested: self.bit_budget,
                max,
            });
        }
        Ok(())
    }

    pub fn prob_interval(
        &self,
        p: &SimProgram,
        f: &NonProbFormula,
    ) -> Result<ProbInterval, EvalError> {
        self.check_budget()?;
        let machines = Machines::new(p, &[f]);
        let mut prefix = Vec::with_capacity(self.bit_budget as usize);
        let (t, fl) = self.explore(&machines, f, &mut prefix);
        let scale = BigInt::one() << self.bit_budget;
        let lo = BigRational::new(BigInt::from(t), scale.clone());
        let hi = BigRational::one() - BigRational::new(BigInt::from(fl), scale);
        Ok(ProbInterval { lo, hi })
    }

    /// Measure of True and False leaves below `prefix`, in units of
    /// `2^-bit_budget`.
    fn explore(&self, m: &Machines, f: &NonProbFormula, prefix: &mut Vec<bool>) -> (u128, u128) {
        let depth = prefix.len();
        let weight = 1u128 << (self.bit_budget as usize - depth);
        let (truth, demand) = m.eval(f, prefix, self.fuel);
        match truth {
            Tri::True => return (weight, 0),
            Tri::False => return (0, weight),
            Tri::Unknown => {}
        }
        if !demand || depth >= self.bit_budget as usize {
            return (0, 0);
        }
        let (a, b) = if self.strategy.is_parallel() && depth < PAR_DEPTH {
            let mut left = prefix.clone();
            let mut right = prefix.clone();
            left.push(false);
            right.push(true);
            par::join(
                self.strategy,
                || self.explore(m, f, &mut left),
                || self.explore(m, f, &mut right),
            )
        } else {
            prefix.push(false);
            let a = self.explore(m, f, prefix);
            prefix.pop();
            prefix.push(true);
            let b = self.explore(m, f, prefix);
            prefix.pop();
            (a, b)
        };
        (a.0 + b.0, a.1 + b.1)
    }

    /// Checks an inequality formula against the program.
    pub fn models(&self, p: &SimProgram, f: &ProbFormula) -> Result<ModelCheck, EvalError> {
        self.check_budget()?;
        let terms: Vec<&NonProbFormula> = f.prob_terms();
        let intervals: Vec<ProbInterval> = terms
            .iter()
            .map(|phi| self.prob_interval(p, phi))
            .collect::<Result<_, _>>()?;
        let lookup = |phi: &NonProbFormula| {
            let k = terms
                .iter()
                .position(|t| *t == phi)
                .expect("term registered");
            &intervals[k]
        };
        let verdict = f.eval_tri(&mut |atom| decide_linear(atom, &lookup));
        Ok(ModelCheck {
            verdict,
            intervals: terms.into_iter().cloned().zip(intervals.clone()).collect(),
        })
    }
}

/// Verdict of [`Evaluator::models`] with the interval of every probability term.
#[derive(Clone, Debug)]
pub struct ModelCheck {
    pub verdict: Tri,
    pub intervals: Vec<(NonProbFormula, ProbInterval)>,
}

/// Decides `sum a_i P(phi_i) <= c` when the inequality holds (or fails) for
/// every choice of values inside the term intervals. Repeated formulas are
/// merged first; distinct terms are treated independently.
pub fn decide_linear<'a>(
    atom: &LinearAtom,
    interval: &impl Fn(&NonProbFormula) -> &'a ProbInterval,
) -> Tri {
    let mut merged: Vec<(BigInt, &NonProbFormula)> = Vec::new();
    for (a, phi) in &atom.terms {
        match merged.iter_mut().find(|(_, g)| *g == phi) {
            Some(slot) => slot.0 += a,
            None => merged.push((a.clone(), phi)),
        }
    }
    let mut min = BigRational::zero();
    let mut max = BigRational::zero();
    for (a, phi) in merged {
        if a.is_zero() {
            continue;
        }
        let iv = interval(phi);
        let a = BigRational::from_integer(a);
        if a.is_positive() {
            min += &a * &iv.lo;
            max += &a * &iv.hi;
        } else {
            min += &a * &iv.hi;
            max += &a * &iv.lo;
        }
    }
    let c = BigRational::from_integer(atom.bound.clone());
    if max <= c {
        Tri::True
    } else if min > c {
        Tri::False
    } else {
        Tri::Unknown
    }
}

/// Exact probability interval with the default bit-budget cap.
pub fn prob_interval(
    p: &SimProgram,
    f: &NonProbFormula,
    bit_budget: u32,
    fuel: u64,
) -> Result<ProbInterval, EvalError> {
    Evaluator::new(bit_budget, fuel).prob_interval(p, f)
}

/// Truth of an inequality formula in the program, sound for `True`/`False`.
pub fn models(
    p: &SimProgram,
    f: &ProbFormula,
    bit_budget: u32,
    fuel: u64,
) -> Result<Tri, EvalError> {
    Ok(Evaluator::new(bit_budget, fuel).models(p, f)?.verdict)
}

#[derive(Clone, Debug)]
pub struct McConfig {
    pub samples: u64,
    pub fuel: u64,
    /// Longest stream prefix drawn for one sample.
    pub bit_cap: u32,
    pub seed: u64,
    pub strategy: Strategy,
}

impl McConfig {
    pub fn new(samples: u64, fuel: u64, bit_cap: u32, seed: u64) -> Self {
        McConfig {
            samples,
            fuel,
            bit_cap,
            seed,
            strategy: Strategy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub samples: u64,
    pub true_count: u64,
    pub false_count: u64,
    pub unknown_count: u64,
    /// Fraction of samples on which the formula was true.
    pub p_hat: BigRational,
    /// Two-sided 95% Hoeffding half-width.
    pub half_width: f64,
}

impl McEstimate {
    /// An enclosure of the probability at 95% confidence, counting unknown
    /// samples as possibly true.
    pub fn interval(&self) -> (f64, f64) {
        let n = self.samples as f64;
        let p = self.true_count as f64 / n;
        let u = self.unknown_count as f64 / n;
        (
            (p - self.half_width).max(0.0),
            (p + u + self.half_width).min(1.0),
        )
    }
}

/// Hoeffding half-width for `n` samples at 95% two-sided confidence.
pub fn hoeffding_half_width(n: u64) -> f64 {
    ((2.0f64 / 0.05).ln() / (2.0 * n as f64)).sqrt()
}

const MC_CHUNK: usize = 8;

/// Monte-Carlo estimate of `P(f)`. Sample `i` uses stream `i` of a ChaCha8
/// generator seeded with `seed`, so results do not depend on the strategy.
pub fn mc_estimate(p: &SimProgram, f: &NonProbFormula, cfg: &McConfig) -> McEstimate {
    assert!(cfg.samples >= 1, "at least one sample");
    let machines = Machines::new(p, &[f]);
    let cap = cfg.bit_cap as usize;
    let outcomes = par::map_range(cfg.strategy, cfg.samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i);
        let mut prefix: Vec<bool> = Vec::new();
        loop {
            let (truth, demand) = machines.eval(f, &prefix, cfg.fuel);
            if truth.is_known() || !demand || prefix.len() >= cap {
                return truth;
            }
            let extra = MC_CHUNK.min(cap - prefix.len());
            prefix.extend((0..extra).map(|_| rng.gen::<bool>()));
        }
    });
    let count = |t: Tri| outcomes.iter().filter(|&&o| o == t).count() as u64;
    let true_count = count(Tri::True);
    McEstimate {
        samples: cfg.samples,
        true_count,
        false_count: count(Tri::False),
        unknown_count: count(Tri::Unknown),
        p_hat: BigRational::new(true_count.into(), cfg.samples.into()),
        half_width: hoeffding_half_width(cfg.samples),
    }
}

/// Decimal rendering of a rational, for reports.
pub fn approx(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
