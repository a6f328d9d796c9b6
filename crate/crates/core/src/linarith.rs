//! Exact feasibility of conjunctions of strict and non-strict linear
//! inequalities over the rationals.
//!
//! Variables are eliminated from the highest index down. A variable pinned by
//! an equality (a pair of opposite non-strict rows) is substituted away;
//! otherwise Fourier–Motzkin combines every lower bound with every upper
//! bound, and a derived row is strict when either parent is. The rows that
//! bounded each variable are kept so a witness can be rebuilt from `x0` up.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::limits::Limits;

/// `coeffs · x <= bound`, or `<` when `strict`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: Vec<BigRational>,
    pub bound: BigRational,
    pub strict: bool,
}

impl Row {
    pub fn le(coeffs: Vec<BigRational>, bound: BigRational) -> Self {
        Row {
            coeffs,
            bound,
            strict: false,
        }
    }

    pub fn lt(coeffs: Vec<BigRational>, bound: BigRational) -> Self {
        Row {
            coeffs,
            bound,
            strict: true,
        }
    }

    pub fn lhs(&self, x: &[BigRational]) -> BigRational {
        self.coeffs
            .iter()
            .zip(x)
            .fold(BigRational::zero(), |acc, (a, v)| acc + a * v)
    }

    pub fn holds(&self, x: &[BigRational]) -> bool {
        let lhs = self.lhs(x);
        if self.strict {
            lhs < self.bound
        } else {
            lhs <= self.bound
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Truth of a row with all coefficients zero.
    fn trivially_holds(&self) -> bool {
        if self.strict {
            self.bound.is_positive()
        } else {
            !self.bound.is_negative()
        }
    }

    fn scaled(&self, k: &BigRational) -> Row {
        debug_assert!(k.is_positive());
        Row {
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
            bound: &self.bound * k,
            strict: self.strict,
        }
    }

    /// Scales so the first nonzero coefficient has absolute value one.
    fn normalized(&self) -> Row {
        match self.coeffs.iter().find(|a| !a.is_zero()) {
            Some(a) => self.scaled(&a.abs().recip()),
            None => self.clone(),
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{a}*x{i}")?;
        }
        if first {
            f.write_str("0")?;
        }
        write!(
            f,
            " {} {}",
            if self.strict { "<" } else { "<=" },
            self.bound
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    pub n_vars: usize,
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn new(n_vars: usize) -> Self {
        LinearSystem {
            n_vars,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        assert_eq!(row.coeffs.len(), self.n_vars, "row width must match n_vars");
        self.rows.push(row);
    }

    pub fn satisfied_by(&self, x: &[BigRational]) -> bool {
        x.len() == self.n_vars && self.rows.iter().all(|r| r.holds(x))
    }

    /// The same system with variable `i` renamed to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> LinearSystem {
        assert_eq!(perm.len(), self.n_vars);
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut coeffs = vec![BigRational::zero(); self.n_vars];
                for (i, a) in r.coeffs.iter().enumerate() {
                    coeffs[perm[i]] = a.clone();
                }
                Row {
                    coeffs,
                    ..r.clone()
                }
            })
            .collect();
        LinearSystem {
            n_vars: self.n_vars,
            rows,
        }
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Witness(Vec<BigRational>),
    Infeasible,
}

impl Feasibility {
    pub fn witness(&self) -> Option<&[BigRational]> {
        match self {
            Feasibility::Witness(x) => Some(x),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinError {
    #[error("system has {found} variables (cap {cap})")]
    TooManyVars { found: usize, cap: usize },
    #[error("system has {found} rows (cap {cap})")]
    TooManyRows { found: usize, cap: usize },
    #[error("elimination produced {found} rows (cap {cap})")]
    TooManyDerivedRows { found: usize, cap: usize },
}

enum Stage {
    /// `row` is an equality `row.coeffs · x = row.bound` solved for `var`.
    Substitute { var: usize, row: Row },
    /// Rows that bounded `var` when it was eliminated.
    Project { var: usize, rows: Vec<Row> },
}

/// Removes trivial rows and keeps the tightest of rows sharing a direction.
/// `None` means a trivial row is false.
fn prune(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut best: BTreeMap<Vec<BigRational>, (BigRational, bool)> = BTreeMap::new();
    for r in rows {
        if r.is_trivial() {
            if !r.trivially_holds() {
                return None;
            }
            continue;
        }
        let n = r.normalized();
        match best.get_mut(&n.coeffs) {
            Some(slot) => {
                if n.bound < slot.0 || (n.bound == slot.0 && n.strict) {
                    *slot = (n.bound, n.strict);
                }
            }
            None => {
                best.insert(n.coeffs, (n.bound, n.strict));
            }
        }
    }
    Some(
        best.into_iter()
            .map(|(coeffs, (bound, strict))| Row {
                coeffs,
                bound,
                strict,
            })
            .collect(),
    )
}

/// Finds a non-strict row in `rows` whose exact opposite is also present.
fn equality_on(rows: &[Row], var: usize) -> Option<Row> {
    let scaled: Vec<Row> = rows
        .iter()
        .filter(|r| !r.strict)
        .map(|r| r.scaled(&r.coeffs[var].abs().recip()))
        .collect();
    scaled.iter().find_map(|r| {
        let opposite = scaled
            .iter()
            .any(|q| q.bound == -&r.bound && q.coeffs.iter().zip(&r.coeffs).all(|(a, b)| *a == -b));
        opposite.then(|| r.clone())
    })
}

/// `q` with `var` eliminated through the equality `eq`.
fn substitute(q: &Row, eq: &Row, var: usize) -> Row {
    let k = &q.coeffs[var] / &eq.coeffs[var];
    Row {
        coeffs: q
            .coeffs
            .iter()
            .zip(&eq.coeffs)
            .map(|(a, b)| a - &k * b)
            .collect(),
        bound: &q.bound - &k * &eq.bound,
        strict: q.strict,
    }
}

pub fn feasible(s: &LinearSystem) -> Result<Feasibility, LinError> {
    feasible_with(s, &Limits::default())
}

pub fn feasible_with(s: &LinearSystem, limits: &Limits) -> Result<Feasibility, LinError> {
    if s.n_vars > limits.max_lin_vars {
        return Err(LinError::TooManyVars {
            found: s.n_vars,
            cap: limits.max_lin_vars,
        });
    }
    if s.rows.len() > limits.max_lin_rows {
        return Err(LinError::TooManyRows {
            found: s.rows.len(),
            cap: limits.max_lin_rows,
        });
    }
    let Some(mut rows) = prune(s.rows.clone()) else {
        return Ok(Feasibility::Infeasible);
    };
    let mut stages = Vec::with_capacity(s.n_vars);
    for var in (0..s.n_vars).rev() {
        let (involved, rest): (Vec<Row>, Vec<Row>) =
            rows.into_iter().partition(|r| !r.coeffs[var].is_zero());
        let mut next = rest;
        if let Some(eq) = equality_on(&involved, var) {
            next.extend(involved.iter().map(|q| substitute(q, &eq, var)));
            stages.push(Stage::Substitute { var, row: eq });
        } else {
            let unit: Vec<Row> = involved
                .iter()
                .map(|r| r.scaled(&r.coeffs[var].abs().recip()))
                .collect();
            let (uppers, lowers): (Vec<&Row>, Vec<&Row>) =
                unit.iter().partition(|r| r.coeffs[var].is_positive());
            let derived = uppers.len() * lowers.len();
            if next.len() + derived > limits.max_derived_rows {
                return Err(LinError::TooManyDerivedRows {
                    found: next.len() + derived,
                    cap: limits.max_derived_rows,
                });
            }
            for u in &uppers {
                for l in &lowers {
                    next.push(Row {
                        coeffs: u.coeffs.iter().zip(&l.coeffs).map(|(a, b)| a + b).collect(),
                        bound: &u.bound + &l.bound,
                        strict: u.strict || l.strict,
                    });
                }
            }
            stages.push(Stage::Project { var, rows: unit });
        }
        rows = match prune(next) {
            Some(r) => r,
            None => return Ok(Feasibility::Infeasible),
        };
    }
    debug_assert!(rows.is_empty());

    let mut x = vec![BigRational::zero(); s.n_vars];
    for stage in stages.iter().rev() {
        match stage {
            Stage::Substitute { var, row } => {
                let rest = row.lhs(&x) - &row.coeffs[*var] * &x[*var];
                x[*var] = (&row.bound - rest) / &row.coeffs[*var];
            }
            Stage::Project { var, rows } => x[*var] = pick(rows, *var, &x),
        }
    }
    debug_assert!(s.satisfied_by(&x), "witness must satisfy the input");
    Ok(Feasibility::Witness(x))
}

/// A value for `var` inside the interval cut out by `rows` at the current
/// partial assignment (`x[var]` is still zero).
fn pick(rows: &[Row], var: usize, x: &[BigRational]) -> BigRational {
    // (value, strict), tightest first
    let mut lo: Option<(BigRational, bool)> = None;
    let mut hi: Option<(BigRational, bool)> = None;
    for r in rows {
        let unit = &r.coeffs[var];
        let rest = r.lhs(x) - unit * &x[var];
        if unit.is_positive() {
            let v = &r.bound - rest;
            let tighter = match &hi {
                None => true,
                Some((h, hs)) => v < *h || (v == *h && r.strict && !hs),
            };
            if tighter {
                hi = Some((v, r.strict));
            }
        } else {
            let v = rest - &r.bound;
            let tighter = match &lo {
                None => true,
                Some((l, ls)) => v > *l || (v == *l && r.strict && !ls),
            };
            if tighter {
                lo = Some((v, r.strict));
            }
        }
    }
    let two = BigRational::from_integer(2.into());
    match (lo, hi) {
        (None, None) => BigRational::zero(),
        (Some((l, false)), None) => l,
        (Some((l, true)), None) => l + BigRational::one(),
        (None, Some((h, false))) => h,
        (None, Some((h, true))) => h - BigRational::one(),
        (Some((l, false)), Some((_, true))) => l,
        (Some((_, true)), Some((h, false))) => h,
        (Some((l, _)), Some((h, _))) => (l + h) / two,
    }
}
