//! Simulation programs and their bounded execution.
//!
//! A [`SimProgram`] is a structured program over binary tape squares with a
//! coin-flip statement. Random bits form a sequential stream: the k-th
//! executed `flip` reads stream bit k. An intervention holds squares at fixed
//! values for the whole run: reads see the held value and writes to held
//! squares are dropped.

mod exec;
mod text;

use std::collections::BTreeMap;

use crate::syntax::{InterventionSpec, Var};

pub use exec::{run, RunOutcome, Tape};
pub use text::{parse_program, ProgramParseError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(bool),
    Read(Var),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn read(i: Var) -> Self {
        Expr::Read(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Expr::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        Expr::Or(Box::new(self), Box::new(other))
    }

    pub fn xor(self, other: Self) -> Self {
        Expr::Xor(Box::new(self), Box::new(other))
    }

    /// Conjunction of all items; `1` when empty.
    pub fn all(items: impl IntoIterator<Item = Expr>) -> Self {
        items
            .into_iter()
            .reduce(Expr::and)
            .unwrap_or(Expr::Const(true))
    }

    pub fn eval(&self, read: &impl Fn(Var) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Read(i) => read(*i),
            Expr::Not(e) => !e.eval(read),
            Expr::And(a, b) => a.eval(read) && b.eval(read),
            Expr::Or(a, b) => a.eval(read) || b.eval(read),
            Expr::Xor(a, b) => a.eval(read) ^ b.eval(read),
        }
    }

    fn max_index(&self) -> Option<Var> {
        match self {
            Expr::Const(_) => None,
            Expr::Read(i) => Some(*i),
            Expr::Not(e) => e.max_index(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => a.max_index().max(b.max_index()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Write(Var, Expr),
    /// Writes the next stream bit to the square.
    Flip(Var),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    While(Expr, Vec<Stmt>),
    Halt,
    /// Never halts; behaves as `while 1 {}`.
    Loop,
}

impl Stmt {
    fn max_index(&self) -> Option<Var> {
        match self {
            Stmt::Write(i, e) => Some(*i).max(e.max_index()),
            Stmt::Flip(i) => Some(*i),
            Stmt::If(c, t, e) => c.max_index().max(block_max(t)).max(block_max(e)),
            Stmt::While(c, b) => c.max_index().max(block_max(b)),
            Stmt::Halt | Stmt::Loop => None,
        }
    }

    fn count(&self, pred: &impl Fn(&Stmt) -> bool) -> usize {
        let own = usize::from(pred(self));
        own + match self {
            Stmt::If(_, t, e) => block_count(t, pred) + block_count(e, pred),
            Stmt::While(_, b) => block_count(b, pred),
            _ => 0,
        }
    }
}

fn block_max(stmts: &[Stmt]) -> Option<Var> {
    stmts.iter().filter_map(Stmt::max_index).max()
}

fn block_count(stmts: &[Stmt], pred: &impl Fn(&Stmt) -> bool) -> usize {
    stmts.iter().map(|s| s.count(pred)).sum()
}

/// A program together with the squares currently held by interventions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SimProgram {
    pub holds: BTreeMap<Var, bool>,
    pub body: Vec<Stmt>,
}

impl SimProgram {
    pub fn new(body: Vec<Stmt>) -> Self {
        SimProgram {
            holds: BTreeMap::new(),
            body,
        }
    }

    /// Largest square index mentioned anywhere in the program or its holds.
    pub fn max_index(&self) -> Option<Var> {
        block_max(&self.body).max(self.holds.keys().next_back().copied())
    }

    pub fn count_statements(&self, pred: impl Fn(&Stmt) -> bool) -> usize {
        block_count(&self.body, &pred)
    }

    /// True when no `while` or `loop` occurs, so every run is finite.
    pub fn is_loop_free(&self) -> bool {
        self.count_statements(|s| matches!(s, Stmt::While(..) | Stmt::Loop)) == 0
    }
}

/// Applies an intervention: the listed squares are pre-set and write-masked
/// for the entire run. Holds already present are kept unless `spec` names the
/// same square, in which case `spec` wins.
pub fn intervene(p: &SimProgram, spec: &InterventionSpec) -> SimProgram {
    let mut out = p.clone();
    for &(i, v) in spec.entries() {
        out.holds.insert(i, v);
    }
    out
}

/// Statements that decide whether square `square` is currently held.
///
/// Afterwards `result` is 1 iff the square is held, and an unheld square has
/// its original value again. `scratch` and `result` must not be held.
pub fn toggle_test(square: Var, scratch: Var, result: Var) -> Vec<Stmt> {
    vec![
        Stmt::Write(scratch, Expr::read(square)),
        Stmt::Write(square, Expr::read(square).not()),
        Stmt::Write(result, Expr::read(square).xor(Expr::read(scratch)).not()),
        Stmt::Write(square, Expr::read(scratch)),
    ]
}
