//! Satisfiability of probability formulas, with witness programs.
//!
//! Each DNF clause is rewritten over the complete conjunctions ("deltas") of
//! its conditional atoms: every probability term becomes a sum of delta
//! probabilities, and unsatisfiable deltas are pinned to zero. An exact
//! feasible point of that linear system is turned into a program that draws
//! a block with the prescribed rational weights and then runs a deterministic
//! program realizing that block's delta.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::limits::Limits;
use crate::linarith::{self, Feasibility, LinError, LinearSystem, Row as LinRow};
use crate::nonprob::{world_program_body, NonProbError, NonProbSolver, WorldTable};
use crate::par::{self, Strategy};
use crate::semantics::{self, EvalError};
use crate::syntax::{
    cond_atoms_of, to_dnf_bounded, Clause, CondAtom, NonProbFormula, ProbFormula, Var,
};
use crate::tri::Tri;
use crate::vm::{Expr, SimProgram, Stmt};
use crate::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("clause has {found} distinct conditional atoms (cap {cap})")]
    TooManyCondAtoms { found: usize, cap: usize },
    #[error("formula expands to more than {cap} DNF clauses")]
    TooManyClauses { cap: usize },
    #[error(transparent)]
    NonProb(#[from] NonProbError),
    #[error(transparent)]
    Lin(#[from] LinError),
}

/// One complete conjunction over an ordered atom list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaAtom {
    /// `signs[i]` is true when atom `i` occurs positively.
    pub signs: Vec<bool>,
    /// Present iff the conjunction is satisfiable in the chosen mode.
    pub sat_witness: Option<WorldTable>,
}

impl DeltaAtom {
    /// Signs of delta number `j`: atom `i` is positive iff bit `n-1-i` of
    /// `j` is clear, so delta 0 is the all-positive conjunction.
    pub fn signs_of(j: usize, n: usize) -> Vec<bool> {
        (0..n).map(|i| (j >> (n - 1 - i)) & 1 == 0).collect()
    }

    pub fn formula(&self, atoms: &[CondAtom]) -> NonProbFormula {
        atoms
            .iter()
            .zip(&self.signs)
            .map(|(a, &s)| {
                let f = NonProbFormula::Cond(a.clone());
                if s {
                    f
                } else {
                    f.not()
                }
            })
            .reduce(NonProbFormula::and)
            .unwrap_or(NonProbFormula::Top)
    }

    /// Truth of a formula over `atoms` at this delta.
    pub fn decides(&self, atoms: &[CondAtom], f: &NonProbFormula) -> bool {
        f.eval_bool(&mut |a| {
            let i = atoms.iter().position(|b| b == a).expect("atom in list");
            self.signs[i]
        })
    }
}

/// A clause rewritten over delta probabilities.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub atoms: Vec<CondAtom>,
    pub deltas: Vec<DeltaAtom>,
    pub system: LinearSystem,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub table: WorldTable,
    pub weight: BigRational,
    /// The delta this block realizes, when known.
    pub label: Option<String>,
}

/// A program drawing block `i` with probability `weight_i`.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    pub blocks: Vec<Block>,
    /// Common denominator of the weights.
    pub denominator: BigInt,
    /// First square used by the sampler; block squares all lie below it.
    pub aux_base: Var,
    pub program: SimProgram,
}

impl MixtureModel {
    pub fn has_nonhalt_block(&self) -> bool {
        self.blocks.iter().any(|b| b.table.has_nonhalt())
    }

    pub fn weights_are_dyadic(&self) -> bool {
        let d = &self.denominator;
        d.is_positive() && (d & (d - BigInt::one())).is_zero()
    }
}

impl fmt::Display for MixtureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# mixture: {} block(s), denominator {}, sampler squares from X{}",
            self.blocks.len(),
            self.denominator,
            self.aux_base
        )?;
        for (i, b) in self.blocks.iter().enumerate() {
            writeln!(f, "# block {}: weight {}", i + 1, b.weight)?;
            if let Some(label) = &b.label {
                writeln!(f, "#   delta: {label}")?;
            }
            for line in b.table.to_string().lines() {
                writeln!(f, "#   {line}")?;
            }
        }
        write!(f, "{}", self.program)
    }
}

#[derive(Clone, Debug)]
pub enum SatResult {
    Sat(MixtureModel),
    Unsat,
}

impl SatResult {
    pub fn model(&self) -> Option<&MixtureModel> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

fn rational(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

#[derive(Clone, Debug, Default)]
pub struct SatSolver {
    pub limits: Limits,
    pub strategy: Strategy,
}

impl SatSolver {
    fn nonprob(&self) -> NonProbSolver {
        NonProbSolver {
            limits: self.limits.clone(),
            strategy: Strategy::Sequential,
        }
    }

    pub fn normalize_clause(&self, clause: &Clause, mode: Mode) -> Result<NormalForm, SatError> {
        let atoms = clause_atoms(clause);
        let n = atoms.len();
        if n > self.limits.max_cond_atoms {
            return Err(SatError::TooManyCondAtoms {
                found: n,
                cap: self.limits.max_cond_atoms,
            });
        }
        let count = 1usize << n;
        let solver = self.nonprob();
        let indices: Vec<usize> = (0..count).collect();
        let deltas = par::map(self.strategy, &indices, |&j| {
            let mut d = DeltaAtom {
                signs: DeltaAtom::signs_of(j, n),
                sat_witness: None,
            };
            d.sat_witness = solver.sat(&d.formula(&atoms), mode)?;
            Ok::<_, NonProbError>(d)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

        let zero = || BigRational::zero();
        let mut system = LinearSystem::new(count);
        for (atom, positive) in clause {
            let mut coeffs = vec![zero(); count];
            for (a, phi) in &atom.terms {
                for (j, d) in deltas.iter().enumerate() {
                    if d.decides(&atoms, phi) {
                        coeffs[j] += rational(a);
                    }
                }
            }
            let bound = rational(&atom.bound);
            system.push(if *positive {
                LinRow::le(coeffs, bound)
            } else {
                LinRow::lt(coeffs.into_iter().map(|c| -c).collect(), -bound)
            });
        }
        let unit = |j: usize, v: i64| {
            let mut c = vec![zero(); count];
            c[j] = BigRational::from_integer(v.into());
            c
        };
        for j in 0..count {
            system.push(LinRow::le(unit(j, -1), zero()));
        }
        let one = BigRational::one();
        system.push(LinRow::le(vec![one.clone(); count], one.clone()));
        system.push(LinRow::le(vec![-one.clone(); count], -one));
        for (j, d) in deltas.iter().enumerate() {
            if d.sat_witness.is_none() {
                system.push(LinRow::le(unit(j, 1), zero()));
            }
        }
        Ok(NormalForm {
            atoms,
            deltas,
            system,
        })
    }

    /// Feasible delta weights of one clause, if any. Unsatisfiable deltas
    /// are pinned to zero, so they are dropped before elimination.
    fn clause_weights(&self, nf: &NormalForm) -> Result<Option<Vec<BigRational>>, SatError> {
        let live: Vec<usize> = (0..nf.deltas.len())
            .filter(|&j| nf.deltas[j].sat_witness.is_some())
            .collect();
        let reduced = LinearSystem {
            n_vars: live.len(),
            rows: nf
                .system
                .rows
                .iter()
                .map(|r| LinRow {
                    coeffs: live.iter().map(|&j| r.coeffs[j].clone()).collect(),
                    ..r.clone()
                })
                .collect(),
        };
        Ok(match linarith::feasible_with(&reduced, &self.limits)? {
            Feasibility::Infeasible => None,
            Feasibility::Witness(x) => {
                let mut full = vec![BigRational::zero(); nf.deltas.len()];
                for (&j, v) in live.iter().zip(x) {
                    full[j] = v;
                }
                debug_assert!(nf.system.satisfied_by(&full));
                Some(full)
            }
        })
    }

    pub fn decide(&self, f: &ProbFormula, mode: Mode) -> Result<SatResult, SatError> {
        let clauses =
            to_dnf_bounded(f, self.limits.max_dnf_clauses).ok_or(SatError::TooManyClauses {
                cap: self.limits.max_dnf_clauses,
            })?;
        let inner = SatSolver {
            limits: self.limits.clone(),
            strategy: Strategy::Sequential,
        };
        let found = par::find_map_first(self.strategy, &clauses, |clause| {
            let step = inner
                .normalize_clause(clause, mode)
                .and_then(|nf| Ok(inner.clause_weights(&nf)?.map(|w| (nf, w))));
            match step {
                Ok(None) => None,
                Ok(Some(hit)) => Some(Ok(hit)),
                Err(e) => Some(Err(e)),
            }
        });
        let (nf, weights) = match found {
            None => return Ok(SatResult::Unsat),
            Some(r) => r?,
        };
        let mut blocks: Vec<Block> = nf
            .deltas
            .iter()
            .zip(weights)
            .filter(|(_, w)| w.is_positive())
            .map(|(d, w)| Block {
                table: d
                    .sat_witness
                    .clone()
                    .expect("positive weight on satisfiable delta"),
                weight: w,
                label: Some(d.formula(&nf.atoms).to_string()),
            })
            .collect();
        if blocks.is_empty() {
            // no atoms at all: any model will do
            blocks.push(Block {
                table: WorldTable::default(),
                weight: BigRational::one(),
                label: None,
            });
        }
        Ok(SatResult::Sat(synth_model(blocks)))
    }
}

fn clause_atoms(clause: &Clause) -> Vec<CondAtom> {
    let mut atoms: Vec<CondAtom> = clause
        .iter()
        .flat_map(|(a, _)| a.terms.iter().flat_map(|(_, phi)| cond_atoms_of(phi)))
        .collect();
    atoms.sort();
    atoms.dedup();
    atoms
}

pub fn normalize_clause(clause: &Clause, mode: Mode) -> Result<NormalForm, SatError> {
    SatSolver::default().normalize_clause(clause, mode)
}

pub fn decide_sat(f: &ProbFormula, mode: Mode) -> Result<SatResult, SatError> {
    SatSolver::default().decide(f, mode)
}

/// `value(bits) < c`, reading `bits` most significant first.
fn less_than(bits: &[Var], c: &BigInt) -> Expr {
    let k = bits.len();
    if c >= &(BigInt::one() << k) {
        return Expr::Const(true);
    }
    if !c.is_positive() {
        return Expr::Const(false);
    }
    let bit = |i: usize| c.bit((k - 1 - i) as u64);
    let mut disjuncts = Vec::new();
    for i in 0..k {
        if bit(i) {
            let prefix = (0..i).map(|j| {
                if bit(j) {
                    Expr::read(bits[j])
                } else {
                    Expr::read(bits[j]).not()
                }
            });
            disjuncts.push(Expr::all(
                prefix.chain(std::iter::once(Expr::read(bits[i]).not())),
            ));
        }
    }
    disjuncts
        .into_iter()
        .reduce(Expr::or)
        .unwrap_or(Expr::Const(false))
}

/// Builds the mixture program for blocks with positive weights summing to
/// one. A single block is emitted without a sampler.
pub fn synth_model(blocks: Vec<Block>) -> MixtureModel {
    assert!(!blocks.is_empty(), "a mixture needs at least one block");
    debug_assert_eq!(
        blocks
            .iter()
            .fold(BigRational::zero(), |acc, b| acc + &b.weight),
        BigRational::one()
    );
    let aux_base = blocks
        .iter()
        .filter_map(|b| b.table.relevant_vars().last().copied())
        .max()
        .map_or(0, |m| m + 1);
    let denominator = blocks
        .iter()
        .fold(BigInt::one(), |acc, b| acc.lcm(b.weight.denom()));
    let k = (denominator.clone() - BigInt::one()).bits() as usize;
    let sample_bits: Vec<Var> = (aux_base..aux_base + k).collect();
    let done = aux_base + k;
    let block_base = done + 1;

    let mut body = Vec::new();
    if k > 0 {
        let flips: Vec<Stmt> = sample_bits.iter().map(|&s| Stmt::Flip(s)).collect();
        if denominator == BigInt::one() << k {
            body.extend(flips);
        } else {
            let mut draw = flips;
            draw.push(Stmt::Write(done, less_than(&sample_bits, &denominator)));
            body.push(Stmt::While(Expr::read(done).not(), draw));
        }
    }
    let numerators: Vec<BigInt> = blocks
        .iter()
        .map(|b| (&b.weight * rational(&denominator)).to_integer())
        .collect();
    let mut cumulative = BigInt::zero();
    let mut thresholds = Vec::with_capacity(blocks.len());
    for a in &numerators {
        cumulative += a;
        thresholds.push(cumulative.clone());
    }
    let last = blocks.len() - 1;
    let chain = (0..last).rev().fold(
        world_program_body(&blocks[last].table, block_base),
        |otherwise, i| {
            vec![Stmt::If(
                less_than(&sample_bits, &thresholds[i]),
                world_program_body(&blocks[i].table, block_base),
                otherwise,
            )]
        },
    );
    body.extend(chain);
    MixtureModel {
        blocks,
        denominator,
        aux_base,
        program: SimProgram::new(body),
    }
}

/// Model-checks the witness program against the formula it was built for.
pub fn verify_witness(
    m: &MixtureModel,
    f: &ProbFormula,
    bit_budget: u32,
    fuel: u64,
) -> Result<Tri, EvalError> {
    semantics::models(&m.program, f, bit_budget, fuel)
}

/// Whether the mixture's weights, read off its blocks' tables, satisfy `f`
/// exactly. Rows that never halt make their atoms false.
pub fn weights_satisfy(blocks: &[Block], f: &ProbFormula) -> bool {
    f.eval_bool(&mut |atom| {
        let lhs = atom
            .terms
            .iter()
            .fold(BigRational::zero(), |acc, (a, phi)| {
                let mass = blocks
                    .iter()
                    .filter(|b| b.table.satisfies(phi))
                    .fold(BigRational::zero(), |m, b| m + &b.weight);
                acc + rational(a) * mass
            });
        lhs <= rational(&atom.bound)
    })
}
