//! Formula languages over tape variables.
//!
//! Four layers, from the bottom up:
//!
//! * [`PropFormula`]: propositional formulas over tape squares `X<n>`.
//! * [`InterventionSpec`]: ordered conjunctions of unique literals, read as
//!   "hold these squares at these values".
//! * [`NonProbFormula`]: Boolean combinations of conditionals `<a>b`.
//! * [`ProbFormula`]: Boolean combinations of integer linear inequalities over
//!   probability terms `P(phi)`.
//!
//! All ASTs are immutable values. Surface sugar (`[a]b`, `->`, `<->`, `>=`,
//! `=`, `<`, `>` and rational constants) is elaborated by the parser, so the
//! core AST only carries `<=` atoms with integer coefficients.

mod dnf;
mod parse;
mod print;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use thiserror::Error;

use crate::tri::Tri;

pub use dnf::{to_dnf, to_dnf_bounded, Clause, Literal};
pub use parse::{
    parse_intervention, parse_nonprob_formula, parse_prob_formula, parse_prop_formula, ParseError,
    ParseErrorKind,
};

/// Index of a tape square.
pub type Var = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropFormula {
    Atom(Var),
    Top,
    Bottom,
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn atom(i: Var) -> Self {
        PropFormula::Atom(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        PropFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        PropFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        PropFormula::Or(Box::new(self), Box::new(other))
    }

    /// Truth value under an assignment of tape squares.
    pub fn eval(&self, value: &impl Fn(Var) -> bool) -> bool {
        match self {
            PropFormula::Atom(i) => value(*i),
            PropFormula::Top => true,
            PropFormula::Bottom => false,
            PropFormula::Not(f) => !f.eval(value),
            PropFormula::And(a, b) => a.eval(value) && b.eval(value),
            PropFormula::Or(a, b) => a.eval(value) || b.eval(value),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            PropFormula::Atom(i) => {
                out.insert(*i);
            }
            PropFormula::Top | PropFormula::Bottom => {}
            PropFormula::Not(f) => f.collect_vars(out),
            PropFormula::And(a, b) | PropFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// The conjunction of literals equivalent to an intervention (`T` when empty).
    pub fn from_spec(spec: &InterventionSpec) -> Self {
        let mut lits = spec.entries().iter().map(|&(i, v)| {
            let a = PropFormula::Atom(i);
            if v {
                a
            } else {
                a.not()
            }
        });
        match lits.next() {
            None => PropFormula::Top,
            Some(first) => lits.fold(first, PropFormula::and),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("duplicate index X{0} in intervention")]
pub struct DuplicateIndex(pub Var);

/// A finite set of squares held at fixed values, kept sorted by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InterventionSpec {
    entries: Vec<(Var, bool)>,
}

impl InterventionSpec {
    /// The empty intervention, written `<>`.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts the entries by index; any repeated index is rejected, even with
    /// the same value.
    pub fn new(entries: impl IntoIterator<Item = (Var, bool)>) -> Result<Self, DuplicateIndex> {
        let mut entries: Vec<(Var, bool)> = entries.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DuplicateIndex(w[0].0));
            }
        }
        Ok(InterventionSpec { entries })
    }

    pub fn entries(&self) -> &[(Var, bool)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: Var) -> Option<bool> {
        self.entries
            .binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|k| self.entries[k].1)
    }

    pub fn indices(&self) -> impl Iterator<Item = Var> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }
}

/// A conditional `<antecedent> consequent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CondAtom {
    pub antecedent: InterventionSpec,
    pub consequent: PropFormula,
}

impl CondAtom {
    pub fn new(antecedent: InterventionSpec, consequent: PropFormula) -> Self {
        CondAtom {
            antecedent,
            consequent,
        }
    }

    fn sort_key(&self) -> (String, String) {
        (
            print::antecedent_string(&self.antecedent),
            self.consequent.to_string(),
        )
    }
}

// Atoms are ordered by their printed antecedent, then printed consequent.
// Printing is injective, so this agrees with structural equality.
impl Ord for CondAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for CondAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NonProbFormula {
    Cond(CondAtom),
    /// Satisfied by every stream, halting or not.
    Top,
    Bottom,
    Not(Box<NonProbFormula>),
    And(Box<NonProbFormula>, Box<NonProbFormula>),
    Or(Box<NonProbFormula>, Box<NonProbFormula>),
}

impl NonProbFormula {
    pub fn cond(antecedent: InterventionSpec, consequent: PropFormula) -> Self {
        NonProbFormula::Cond(CondAtom::new(antecedent, consequent))
    }

    /// `[a]b`, i.e. `!<a>!b`.
    pub fn box_cond(antecedent: InterventionSpec, consequent: PropFormula) -> Self {
        NonProbFormula::cond(antecedent, consequent.not()).not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        NonProbFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        NonProbFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        NonProbFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Self) -> Self {
        self.not().or(other)
    }

    pub fn iff(self, other: Self) -> Self {
        self.clone().implies(other.clone()).and(other.implies(self))
    }

    /// Kleene evaluation with the given valuation of conditional atoms.
    pub fn eval_tri(&self, atom: &mut impl FnMut(&CondAtom) -> Tri) -> Tri {
        match self {
            NonProbFormula::Cond(a) => atom(a),
            NonProbFormula::Top => Tri::True,
            NonProbFormula::Bottom => Tri::False,
            NonProbFormula::Not(f) => !f.eval_tri(atom),
            NonProbFormula::And(a, b) => {
                let l = a.eval_tri(atom);
                if l == Tri::False {
                    return Tri::False;
                }
                l & b.eval_tri(atom)
            }
            NonProbFormula::Or(a, b) => {
                let l = a.eval_tri(atom);
                if l == Tri::True {
                    return Tri::True;
                }
                l | b.eval_tri(atom)
            }
        }
    }

    pub fn eval_bool(&self, atom: &mut impl FnMut(&CondAtom) -> bool) -> bool {
        match self {
            NonProbFormula::Cond(a) => atom(a),
            NonProbFormula::Top => true,
            NonProbFormula::Bottom => false,
            NonProbFormula::Not(f) => !f.eval_bool(atom),
            NonProbFormula::And(a, b) => a.eval_bool(atom) && b.eval_bool(atom),
            NonProbFormula::Or(a, b) => a.eval_bool(atom) || b.eval_bool(atom),
        }
    }

    pub fn cond_atoms(&self) -> Vec<CondAtom> {
        cond_atoms_of(self)
    }
}

/// `sum(coeff * P(formula)) <= bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearAtom {
    pub terms: Vec<(BigInt, NonProbFormula)>,
    pub bound: BigInt,
}

impl LinearAtom {
    pub fn new(terms: Vec<(BigInt, NonProbFormula)>, bound: BigInt) -> Self {
        LinearAtom { terms, bound }
    }

    /// Coefficients and bound multiplied by -1: `sum >= c` as a `<=` atom.
    pub fn negated(&self) -> Self {
        LinearAtom {
            terms: self.terms.iter().map(|(a, f)| (-a, f.clone())).collect(),
            bound: -&self.bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProbFormula {
    Atom(LinearAtom),
    Not(Box<ProbFormula>),
    And(Box<ProbFormula>, Box<ProbFormula>),
    Or(Box<ProbFormula>, Box<ProbFormula>),
}

impl ProbFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        ProbFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        ProbFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        ProbFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Self) -> Self {
        self.not().or(other)
    }

    pub fn iff(self, other: Self) -> Self {
        self.clone().implies(other.clone()).and(other.implies(self))
    }

    /// Recognizes the elaborated shape of `a -> b`.
    pub fn as_implication(&self) -> Option<(&ProbFormula, &ProbFormula)> {
        match self {
            ProbFormula::Or(l, r) => match l.as_ref() {
                ProbFormula::Not(a) => Some((a, r)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Recognizes the elaborated shape of `a <-> b`.
    pub fn as_biconditional(&self) -> Option<(&ProbFormula, &ProbFormula)> {
        match self {
            ProbFormula::And(l, r) => {
                let (a, b) = l.as_implication()?;
                let (b2, a2) = r.as_implication()?;
                (a == a2 && b == b2).then_some((a, b))
            }
            _ => None,
        }
    }

    pub fn eval_tri(&self, atom: &mut impl FnMut(&LinearAtom) -> Tri) -> Tri {
        match self {
            ProbFormula::Atom(a) => atom(a),
            ProbFormula::Not(f) => !f.eval_tri(atom),
            ProbFormula::And(a, b) => {
                let l = a.eval_tri(atom);
                if l == Tri::False {
                    return Tri::False;
                }
                l & b.eval_tri(atom)
            }
            ProbFormula::Or(a, b) => {
                let l = a.eval_tri(atom);
                if l == Tri::True {
                    return Tri::True;
                }
                l | b.eval_tri(atom)
            }
        }
    }

    pub fn eval_bool(&self, atom: &mut impl FnMut(&LinearAtom) -> bool) -> bool {
        match self {
            ProbFormula::Atom(a) => atom(a),
            ProbFormula::Not(f) => !f.eval_bool(atom),
            ProbFormula::And(a, b) => a.eval_bool(atom) && b.eval_bool(atom),
            ProbFormula::Or(a, b) => a.eval_bool(atom) || b.eval_bool(atom),
        }
    }

    /// Distinct linear atoms in order of first occurrence.
    pub fn linear_atoms(&self) -> Vec<&LinearAtom> {
        fn go<'a>(f: &'a ProbFormula, out: &mut Vec<&'a LinearAtom>) {
            match f {
                ProbFormula::Atom(a) => {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
                ProbFormula::Not(g) => go(g, out),
                ProbFormula::And(a, b) | ProbFormula::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Distinct formulas under `P(..)` in order of first occurrence.
    pub fn prob_terms(&self) -> Vec<&NonProbFormula> {
        let mut out: Vec<&NonProbFormula> = Vec::new();
        for atom in self.linear_atoms() {
            for (_, f) in &atom.terms {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }

    pub fn cond_atoms(&self) -> Vec<CondAtom> {
        cond_atoms_of(self)
    }
}

/// Anything that mentions conditional atoms.
pub trait CondAtomSource {
    fn collect_cond_atoms(&self, out: &mut BTreeSet<CondAtom>);
}

impl CondAtomSource for NonProbFormula {
    fn collect_cond_atoms(&self, out: &mut BTreeSet<CondAtom>) {
        match self {
            NonProbFormula::Cond(a) => {
                out.insert(a.clone());
            }
            NonProbFormula::Top | NonProbFormula::Bottom => {}
            NonProbFormula::Not(f) => f.collect_cond_atoms(out),
            NonProbFormula::And(a, b) | NonProbFormula::Or(a, b) => {
                a.collect_cond_atoms(out);
                b.collect_cond_atoms(out);
            }
        }
    }
}

impl CondAtomSource for LinearAtom {
    fn collect_cond_atoms(&self, out: &mut BTreeSet<CondAtom>) {
        for (_, f) in &self.terms {
            f.collect_cond_atoms(out);
        }
    }
}

impl CondAtomSource for ProbFormula {
    fn collect_cond_atoms(&self, out: &mut BTreeSet<CondAtom>) {
        match self {
            ProbFormula::Atom(a) => a.collect_cond_atoms(out),
            ProbFormula::Not(f) => f.collect_cond_atoms(out),
            ProbFormula::And(a, b) | ProbFormula::Or(a, b) => {
                a.collect_cond_atoms(out);
                b.collect_cond_atoms(out);
            }
        }
    }
}

impl<T: CondAtomSource> CondAtomSource for [T] {
    fn collect_cond_atoms(&self, out: &mut BTreeSet<CondAtom>) {
        for x in self {
            x.collect_cond_atoms(out);
        }
    }
}

/// Sorted, deduplicated conditional atoms.
pub fn cond_atoms_of<F: CondAtomSource + ?Sized>(f: &F) -> Vec<CondAtom> {
    let mut set = BTreeSet::new();
    f.collect_cond_atoms(&mut set);
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn np(s: &str) -> NonProbFormula {
        parse_nonprob_formula(s).unwrap()
    }

    #[test]
    fn spec_sorts_and_rejects_duplicates() {
        let s = InterventionSpec::new([(3, true), (1, false)]).unwrap();
        assert_eq!(s.entries(), &[(1, false), (3, true)]);
        assert_eq!(s.get(3), Some(true));
        assert_eq!(s.get(2), None);
        assert_eq!(
            InterventionSpec::new([(0, true), (0, true)]),
            Err(DuplicateIndex(0))
        );
    }

    #[test]
    fn cond_atoms_collect_in_print_order() {
        let f = parse_prob_formula("P(<>X0) + P(<>X0 & <X1>X0) <= 1").unwrap();
        let atoms: Vec<String> = f.cond_atoms().iter().map(|a| a.to_string()).collect();
        assert_eq!(atoms, vec!["<>X0", "<X1>X0"]);

        let f = parse_prob_formula("0 <= 1").unwrap();
        assert!(f.cond_atoms().is_empty());

        let atoms = np("<>X0 | !<>X0").cond_atoms();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].to_string(), "<>X0");
    }

    #[test]
    fn biconditional_shape_is_recognized() {
        let a = parse_prob_formula("P(<>X0) <= 1").unwrap();
        let b = parse_prob_formula("P(<>X1) <= 1").unwrap();
        let f = a.clone().iff(b.clone());
        assert_eq!(f.as_biconditional(), Some((&a, &b)));
        assert_eq!(
            a.clone().implies(b.clone()).as_implication(),
            Some((&a, &b))
        );
        assert_eq!(a.clone().and(b).as_biconditional(), None);
    }

    #[test]
    fn prop_from_spec() {
        let s = InterventionSpec::new([(0, true), (2, false)]).unwrap();
        assert_eq!(PropFormula::from_spec(&s).to_string(), "X0 & !X2");
        assert_eq!(
            PropFormula::from_spec(&InterventionSpec::empty()),
            PropFormula::Top
        );
    }
}
