use super::{LinearAtom, ProbFormula};

/// A linear atom with its polarity (`false` means negated).
pub type Literal = (LinearAtom, bool);

/// A conjunction of literals.
pub type Clause = Vec<Literal>;

/// Disjunctive normal form over linear atoms, clauses in source order.
///
/// The result may be exponentially large; see [`to_dnf_bounded`].
pub fn to_dnf(f: &ProbFormula) -> Vec<Clause> {
    dnf(f, true, usize::MAX).expect("unbounded")
}

/// Like [`to_dnf`] but gives up (returns `None`) once an intermediate clause
/// list exceeds `max_clauses`.
pub fn to_dnf_bounded(f: &ProbFormula, max_clauses: usize) -> Option<Vec<Clause>> {
    dnf(f, true, max_clauses)
}

fn dnf(f: &ProbFormula, positive: bool, max: usize) -> Option<Vec<Clause>> {
    match f {
        ProbFormula::Atom(a) => Some(vec![vec![(a.clone(), positive)]]),
        ProbFormula::Not(g) => dnf(g, !positive, max),
        ProbFormula::And(a, b) | ProbFormula::Or(a, b) => {
            let conjunctive = matches!(f, ProbFormula::And(..)) == positive;
            let left = dnf(a, positive, max)?;
            let right = dnf(b, positive, max)?;
            if conjunctive {
                if left.len().saturating_mul(right.len()) > max {
                    return None;
                }
                let mut out = Vec::with_capacity(left.len() * right.len());
                for l in &left {
                    for r in &right {
                        let mut clause = l.clone();
                        clause.extend(r.iter().cloned());
                        out.push(clause);
                    }
                }
                Some(out)
            } else {
                if left.len() + right.len() > max {
                    return None;
                }
                let mut out = left;
                out.extend(right);
                Some(out)
            }
        }
    }
}
