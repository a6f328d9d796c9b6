//! Checker for line-oriented Hilbert derivations over probability formulas.
//!
//! A proof file starts with `mode: ax` (all models) or `mode: ax-down`
//! (almost-surely halting models), followed by lines
//!
//! ```text
//! 1. P(<>X0) >= 0 ; nonneg
//! 2. P(<>X0) >= 0 | P(<>X1) < 0 ; taut
//! ```
//!
//! Schemas are matched against the elaborated `<=` form of each line, so
//! `P(f) >= 0` is the atom `-1*P(f) <= 0` and `t = c` is the conjunction of
//! two opposite atoms. Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::limits::Limits;
use crate::nonprob::NonProbSolver;
use crate::syntax::{parse_prob_formula, LinearAtom, NonProbFormula, ProbFormula};
use crate::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Justification {
    Taut,
    /// Modus ponens from two earlier lines, in either order.
    Mp(usize, usize),
    NonNeg,
    Norm,
    Add,
    Dist,
    Zero,
    Perm,
    AddIneq,
    Mult,
    Dichotomy,
    Mono,
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Justification::Mp(i, j) => return write!(f, "mp {i} {j}"),
            Justification::Taut => "taut",
            Justification::NonNeg => "nonneg",
            Justification::Norm => "norm",
            Justification::Add => "add",
            Justification::Dist => "dist",
            Justification::Zero => "zero",
            Justification::Perm => "perm",
            Justification::AddIneq => "addineq",
            Justification::Mult => "mult",
            Justification::Dichotomy => "dichotomy",
            Justification::Mono => "mono",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofLine {
    pub number: usize,
    pub formula: ProbFormula,
    pub justification: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub mode: Mode,
    pub lines: Vec<ProofLine>,
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::All => "ax",
            Mode::Halting => "ax-down",
        };
        writeln!(f, "mode: {mode}")?;
        for l in &self.lines {
            writeln!(f, "{}. {} ; {}", l.number, l.formula, l.justification)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("proof file line {line}: {msg}")]
pub struct ProofParseError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_proof(text: &str) -> Result<Proof, ProofParseError> {
    let mut mode = None;
    let mut lines: Vec<ProofLine> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let err = |msg: String| ProofParseError { line: n + 1, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if mode.is_none() {
            let m = line
                .strip_prefix("mode:")
                .ok_or_else(|| err("expected header 'mode: ax' or 'mode: ax-down'".into()))?;
            mode = Some(match m.trim() {
                "ax" => Mode::All,
                "ax-down" => Mode::Halting,
                other => return Err(err(format!("unknown mode '{other}'"))),
            });
            continue;
        }
        let (num, rest) = line
            .split_once('.')
            .ok_or_else(|| err("expected '<n>. <formula> ; <justification>'".into()))?;
        let number: usize = num
            .trim()
            .parse()
            .map_err(|_| err(format!("bad line number '{}'", num.trim())))?;
        if lines.last().is_some_and(|l| l.number >= number) {
            return Err(err(format!("line number {number} does not increase")));
        }
        let (formula, just) = rest
            .rsplit_once(';')
            .ok_or_else(|| err("missing '; <justification>'".into()))?;
        let formula = parse_prob_formula(formula.trim()).map_err(|e| err(e.to_string()))?;
        let justification = parse_justification(just.trim())
            .ok_or_else(|| err(format!("unknown justification '{}'", just.trim())))?;
        lines.push(ProofLine {
            number,
            formula,
            justification,
        });
    }
    Ok(Proof {
        mode: mode.ok_or(ProofParseError {
            line: text.lines().count().max(1),
            msg: "missing mode header".into(),
        })?,
        lines,
    })
}

fn parse_justification(s: &str) -> Option<Justification> {
    let words: Vec<&str> = s.split_whitespace().collect();
    Some(match words.as_slice() {
        ["taut"] => Justification::Taut,
        ["mp", i, j] => Justification::Mp(i.parse().ok()?, j.parse().ok()?),
        ["nonneg"] => Justification::NonNeg,
        ["norm"] => Justification::Norm,
        ["add"] => Justification::Add,
        ["dist"] => Justification::Dist,
        ["zero"] => Justification::Zero,
        ["perm"] => Justification::Perm,
        ["addineq"] => Justification::AddIneq,
        ["mult"] => Justification::Mult,
        ["dichotomy"] => Justification::Dichotomy,
        ["mono"] => Justification::Mono,
        _ => return None,
    })
}

/// Machine-readable rejection codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reason {
    BadSchema,
    SideCondition,
    BadMp,
    NotTaut,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::BadSchema => "BAD_SCHEMA",
            Reason::SideCondition => "SIDE_CONDITION",
            Reason::BadMp => "BAD_MP",
            Reason::NotTaut => "NOT_TAUT",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("line {line}: {reason}: {detail}")]
    Rejected {
        line: usize,
        reason: Reason,
        detail: String,
    },
    #[error("line {line}: resource limit: {msg}")]
    Resource { line: usize, msg: String },
}

impl ProofError {
    pub fn line(&self) -> usize {
        match self {
            ProofError::Rejected { line, .. } | ProofError::Resource { line, .. } => *line,
        }
    }

    pub fn reason(&self) -> Option<Reason> {
        match self {
            ProofError::Rejected { reason, .. } => Some(*reason),
            ProofError::Resource { .. } => None,
        }
    }
}

enum Failure {
    Reject(Reason, String),
    Resource(String),
}

type Check = Result<(), Failure>;

fn bad_schema(what: &str) -> Failure {
    Failure::Reject(Reason::BadSchema, what.to_string())
}

fn side(what: String) -> Failure {
    Failure::Reject(Reason::SideCondition, what)
}

fn atom(f: &ProbFormula) -> Option<&LinearAtom> {
    match f {
        ProbFormula::Atom(a) => Some(a),
        _ => None,
    }
}

/// `a` and its negation, as produced by `t = c`.
fn as_equality(f: &ProbFormula) -> Option<&LinearAtom> {
    match f {
        ProbFormula::And(l, r) => {
            let a = atom(l)?;
            (atom(r)? == &a.negated()).then_some(a)
        }
        _ => None,
    }
}

fn implication_atoms(f: &ProbFormula) -> Option<(&ProbFormula, &LinearAtom)> {
    let (lhs, rhs) = f.as_implication()?;
    Some((lhs, atom(rhs)?))
}

fn biconditional_atoms(f: &ProbFormula) -> Option<(&LinearAtom, &LinearAtom)> {
    let (a, b) = f.as_biconditional()?;
    Some((atom(a)?, atom(b)?))
}

fn int(n: i64) -> BigInt {
    BigInt::from(n)
}

fn check_nonneg(f: &ProbFormula) -> Check {
    let a = atom(f).ok_or_else(|| bad_schema("expected P(f) >= 0"))?;
    match a.terms.as_slice() {
        [(c, _)] if *c == int(-1) && a.bound.is_zero() => Ok(()),
        _ => Err(bad_schema("expected P(f) >= 0")),
    }
}

fn check_norm(f: &ProbFormula) -> Check {
    let a = as_equality(f).ok_or_else(|| bad_schema("expected P(T) = 1"))?;
    match a.terms.as_slice() {
        [(c, NonProbFormula::Top)] if c.is_one() && a.bound.is_one() => Ok(()),
        _ => Err(bad_schema("expected P(T) = 1")),
    }
}

fn check_add(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected P(f & g) + P(f & !g) = P(f)";
    let a = as_equality(f).ok_or_else(|| bad_schema(SHAPE))?;
    let [(c1, both), (c2, but_not), (c3, whole)] = a.terms.as_slice() else {
        return Err(bad_schema(SHAPE));
    };
    if !(c1.is_one() && c2.is_one() && *c3 == int(-1) && a.bound.is_zero()) {
        return Err(bad_schema(SHAPE));
    }
    match (both, but_not) {
        (NonProbFormula::And(f1, g1), NonProbFormula::And(f2, not_g)) => match not_g.as_ref() {
            NonProbFormula::Not(g2) if f1 == f2 && f1.as_ref() == whole && g1 == g2 => Ok(()),
            _ => Err(bad_schema(SHAPE)),
        },
        _ => Err(bad_schema(SHAPE)),
    }
}

fn check_dist(f: &ProbFormula, solver: &NonProbSolver, mode: Mode) -> Check {
    const SHAPE: &str = "expected P(f) = P(g)";
    let a = as_equality(f).ok_or_else(|| bad_schema(SHAPE))?;
    let [(c1, phi), (c2, psi)] = a.terms.as_slice() else {
        return Err(bad_schema(SHAPE));
    };
    if !(c1.is_one() && *c2 == int(-1) && a.bound.is_zero()) {
        return Err(bad_schema(SHAPE));
    }
    match solver.equiv(phi, psi, mode) {
        Ok(true) => Ok(()),
        Ok(false) => Err(side(format!(
            "{phi} and {psi} are not equivalent in mode {mode}"
        ))),
        Err(e) => Err(Failure::Resource(e.to_string())),
    }
}

fn check_zero(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected A <-> A + 0*P(f)";
    let (a, b) = biconditional_atoms(f).ok_or_else(|| bad_schema(SHAPE))?;
    let Some(((extra, _), head)) = b.terms.split_last() else {
        return Err(bad_schema(SHAPE));
    };
    if head != a.terms.as_slice() || a.bound != b.bound {
        return Err(bad_schema(SHAPE));
    }
    if !extra.is_zero() {
        return Err(side(format!("appended coefficient is {extra}, not 0")));
    }
    Ok(())
}

fn check_perm(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected A <-> (A with its terms permuted)";
    let (a, b) = biconditional_atoms(f).ok_or_else(|| bad_schema(SHAPE))?;
    if a.terms.len() != b.terms.len() || a.bound != b.bound {
        return Err(bad_schema(SHAPE));
    }
    let mut used = vec![false; b.terms.len()];
    for t in &a.terms {
        match (0..b.terms.len()).find(|&j| !used[j] && b.terms[j] == *t) {
            Some(j) => used[j] = true,
            None => return Err(side("terms are not a permutation".into())),
        }
    }
    Ok(())
}

fn check_addineq(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected A & A' -> (A + A') over one formula list";
    let (lhs, sum) = implication_atoms(f).ok_or_else(|| bad_schema(SHAPE))?;
    let ProbFormula::And(l, r) = lhs else {
        return Err(bad_schema(SHAPE));
    };
    let (a, b) = (
        atom(l).ok_or_else(|| bad_schema(SHAPE))?,
        atom(r).ok_or_else(|| bad_schema(SHAPE))?,
    );
    let n = a.terms.len();
    if b.terms.len() != n || sum.terms.len() != n {
        return Err(bad_schema(SHAPE));
    }
    let ok = (0..n).all(|i| {
        let (x, fx) = &a.terms[i];
        let (y, fy) = &b.terms[i];
        let (z, fz) = &sum.terms[i];
        fx == fy && fy == fz && x + y == *z
    }) && &a.bound + &b.bound == sum.bound;
    ok.then_some(()).ok_or_else(|| bad_schema(SHAPE))
}

fn check_mult(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected A -> b*A";
    let (lhs, b) = implication_atoms(f).ok_or_else(|| bad_schema(SHAPE))?;
    let a = atom(lhs).ok_or_else(|| bad_schema(SHAPE))?;
    if a.terms.len() != b.terms.len() || a.terms.iter().zip(&b.terms).any(|((_, x), (_, y))| x != y)
    {
        return Err(bad_schema(SHAPE));
    }
    let pairs: Vec<(&BigInt, &BigInt)> = a
        .terms
        .iter()
        .zip(&b.terms)
        .map(|((x, _), (y, _))| (x, y))
        .chain(std::iter::once((&a.bound, &b.bound)))
        .collect();
    // the factor is read off the first nonzero entry of A
    let factor = match pairs.iter().find(|(x, _)| !x.is_zero()) {
        Some((x, y)) => BigRational::new((*y).clone(), (*x).clone()),
        None if pairs.iter().all(|(_, y)| y.is_zero()) => BigRational::one(),
        None => return Err(bad_schema(SHAPE)),
    };
    let consistent = pairs.iter().all(|(x, y)| {
        BigRational::from_integer((*x).clone()) * &factor == BigRational::from_integer((*y).clone())
    });
    if !consistent {
        return Err(bad_schema(SHAPE));
    }
    if !factor.is_positive() {
        return Err(side(format!("factor {factor} is not positive")));
    }
    Ok(())
}

fn check_dichotomy(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected A | (sum >= c)";
    match f {
        ProbFormula::Or(l, r) => match (atom(l), atom(r)) {
            (Some(a), Some(b)) if *b == a.negated() => Ok(()),
            _ => Err(bad_schema(SHAPE)),
        },
        _ => Err(bad_schema(SHAPE)),
    }
}

fn check_mono(f: &ProbFormula) -> Check {
    const SHAPE: &str = "expected (sum <= c) -> (sum < b)";
    let (lhs, rhs) = f.as_implication().ok_or_else(|| bad_schema(SHAPE))?;
    let a = atom(lhs).ok_or_else(|| bad_schema(SHAPE))?;
    let ProbFormula::Not(inner) = rhs else {
        return Err(bad_schema(SHAPE));
    };
    let n = atom(inner).ok_or_else(|| bad_schema(SHAPE))?;
    if n.terms != a.negated().terms {
        return Err(bad_schema(SHAPE));
    }
    let b = -&n.bound;
    if b > a.bound {
        Ok(())
    } else {
        Err(side(format!("{b} is not greater than {}", a.bound)))
    }
}

fn check_taut(f: &ProbFormula, max_atoms: usize) -> Check {
    let atoms = f.linear_atoms();
    if atoms.len() > max_atoms {
        return Err(Failure::Resource(format!(
            "{} distinct linear atoms (cap {max_atoms})",
            atoms.len()
        )));
    }
    let index: HashMap<&LinearAtom, usize> =
        atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    for row in 0u64..(1u64 << atoms.len()) {
        let holds = f.eval_bool(&mut |a| (row >> index[a]) & 1 == 1);
        if !holds {
            return Err(Failure::Reject(
                Reason::NotTaut,
                "falsified by a truth assignment".into(),
            ));
        }
    }
    Ok(())
}

/// Checks every line in order; the first failure is reported.
#[derive(Clone, Debug, Default)]
pub struct ProofChecker {
    pub limits: Limits,
}

impl ProofChecker {
    pub fn check(&self, p: &Proof) -> Result<(), ProofError> {
        let solver = NonProbSolver {
            limits: self.limits.clone(),
            ..NonProbSolver::default()
        };
        let mut proved: BTreeMap<usize, &ProbFormula> = BTreeMap::new();
        for line in &p.lines {
            let f = &line.formula;
            let result = match line.justification {
                Justification::Taut => check_taut(f, self.limits.max_taut_atoms),
                Justification::Mp(i, j) => check_mp(f, i, j, &proved),
                Justification::NonNeg => check_nonneg(f),
                Justification::Norm => check_norm(f),
                Justification::Add => check_add(f),
                Justification::Dist => check_dist(f, &solver, p.mode),
                Justification::Zero => check_zero(f),
                Justification::Perm => check_perm(f),
                Justification::AddIneq => check_addineq(f),
                Justification::Mult => check_mult(f),
                Justification::Dichotomy => check_dichotomy(f),
                Justification::Mono => check_mono(f),
            };
            match result {
                Ok(()) => {
                    proved.insert(line.number, f);
                }
                Err(Failure::Reject(reason, detail)) => {
                    return Err(ProofError::Rejected {
                        line: line.number,
                        reason,
                        detail,
                    })
                }
                Err(Failure::Resource(msg)) => {
                    return Err(ProofError::Resource {
                        line: line.number,
                        msg,
                    })
                }
            }
        }
        Ok(())
    }
}

fn check_mp(f: &ProbFormula, i: usize, j: usize, proved: &BTreeMap<usize, &ProbFormula>) -> Check {
    let fetch = |k: usize| {
        proved.get(&k).copied().ok_or_else(|| {
            Failure::Reject(Reason::BadMp, format!("line {k} is not an earlier line"))
        })
    };
    let (a, b) = (fetch(i)?, fetch(j)?);
    let fires = |premise: &ProbFormula, rule: &ProbFormula| {
        rule.as_implication()
            .is_some_and(|(lhs, rhs)| lhs == premise && rhs == f)
    };
    if fires(a, b) || fires(b, a) {
        Ok(())
    } else {
        Err(Failure::Reject(
            Reason::BadMp,
            format!("lines {i} and {j} do not yield this formula by modus ponens"),
        ))
    }
}

pub fn check_proof(p: &Proof) -> Result<(), ProofError> {
    ProofChecker::default().check(p)
}
