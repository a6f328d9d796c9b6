//! Canonical printing. The output re-parses to the same AST.

use std::fmt::{self, Display, Formatter, Write};

use num_traits::One;

use super::{CondAtom, InterventionSpec, LinearAtom, NonProbFormula, ProbFormula, PropFormula};

// Binding strength: `|` < `&` < prefix `!` and atoms.
const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;

fn open(f: &mut Formatter<'_>, needs: bool) -> fmt::Result {
    if needs {
        f.write_char('(')?;
    }
    Ok(())
}

fn close(f: &mut Formatter<'_>, needs: bool) -> fmt::Result {
    if needs {
        f.write_char(')')?;
    }
    Ok(())
}

fn fmt_prop(p: &PropFormula, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
    match p {
        PropFormula::Atom(i) => write!(f, "X{i}"),
        PropFormula::Top => f.write_char('T'),
        PropFormula::Bottom => f.write_char('F'),
        PropFormula::Not(a) => {
            f.write_char('!')?;
            fmt_prop(a, f, UNARY)
        }
        PropFormula::And(a, b) => {
            open(f, min > AND)?;
            fmt_prop(a, f, AND)?;
            f.write_str(" & ")?;
            fmt_prop(b, f, UNARY)?;
            close(f, min > AND)
        }
        PropFormula::Or(a, b) => {
            open(f, min > OR)?;
            fmt_prop(a, f, OR)?;
            f.write_str(" | ")?;
            fmt_prop(b, f, AND)?;
            close(f, min > OR)
        }
    }
}

impl Display for PropFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fmt_prop(self, f, 0)
    }
}

pub(super) fn antecedent_string(spec: &InterventionSpec) -> String {
    let mut s = String::new();
    for (k, &(i, v)) in spec.entries().iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        if !v {
            s.push('!');
        }
        let _ = write!(s, "X{i}");
    }
    s
}

impl Display for InterventionSpec {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&antecedent_string(self))
    }
}

impl Display for CondAtom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.antecedent)?;
        fmt_prop(&self.consequent, f, UNARY)
    }
}

fn fmt_nonprob(p: &NonProbFormula, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
    match p {
        NonProbFormula::Cond(a) => write!(f, "{a}"),
        NonProbFormula::Top => f.write_char('T'),
        NonProbFormula::Bottom => f.write_char('F'),
        NonProbFormula::Not(a) => {
            f.write_char('!')?;
            fmt_nonprob(a, f, UNARY)
        }
        NonProbFormula::And(a, b) => {
            open(f, min > AND)?;
            fmt_nonprob(a, f, AND)?;
            f.write_str(" & ")?;
            fmt_nonprob(b, f, UNARY)?;
            close(f, min > AND)
        }
        NonProbFormula::Or(a, b) => {
            open(f, min > OR)?;
            fmt_nonprob(a, f, OR)?;
            f.write_str(" | ")?;
            fmt_nonprob(b, f, AND)?;
            close(f, min > OR)
        }
    }
}

impl Display for NonProbFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fmt_nonprob(self, f, 0)
    }
}

impl Display for LinearAtom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            f.write_char('0')?;
        }
        for (k, (a, phi)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if a.is_one() {
                write!(f, "P({phi})")?;
            } else {
                write!(f, "{a}*P({phi})")?;
            }
        }
        write!(f, " <= {}", self.bound)
    }
}

fn fmt_prob(p: &ProbFormula, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
    match p {
        ProbFormula::Atom(a) => write!(f, "{a}"),
        ProbFormula::Not(a) => match a.as_ref() {
            ProbFormula::Atom(atom) => write!(f, "!({atom})"),
            _ => {
                f.write_char('!')?;
                fmt_prob(a, f, UNARY)
            }
        },
        ProbFormula::And(a, b) => {
            open(f, min > AND)?;
            fmt_prob(a, f, AND)?;
            f.write_str(" & ")?;
            fmt_prob(b, f, UNARY)?;
            close(f, min > AND)
        }
        ProbFormula::Or(a, b) => {
            open(f, min > OR)?;
            fmt_prob(a, f, OR)?;
            f.write_str(" | ")?;
            fmt_prob(b, f, AND)?;
            close(f, min > OR)
        }
    }
}

impl Display for ProbFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fmt_prob(self, f, 0)
    }
}
