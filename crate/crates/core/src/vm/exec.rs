use std::collections::BTreeMap;

use super::{Expr, SimProgram, Stmt};
use crate::syntax::Var;

/// Memory tape: sparse values (default 0) plus the held squares.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tape {
    values: BTreeMap<Var, bool>,
    held: BTreeMap<Var, bool>,
}

impl Tape {
    pub fn with_holds(held: BTreeMap<Var, bool>) -> Self {
        Tape {
            values: BTreeMap::new(),
            held,
        }
    }

    pub fn get(&self, i: Var) -> bool {
        self.held
            .get(&i)
            .or_else(|| self.values.get(&i))
            .copied()
            .unwrap_or(false)
    }

    pub fn is_held(&self, i: Var) -> bool {
        self.held.contains_key(&i)
    }

    /// Writes to held squares leave the tape unchanged.
    pub fn write(&mut self, i: Var, v: bool) {
        if !self.held.contains_key(&i) {
            self.values.insert(i, v);
        }
    }

    /// Every square that was held or written, with its current value.
    pub fn touched(&self) -> BTreeMap<Var, bool> {
        let mut out = self.values.clone();
        out.extend(self.held.iter().map(|(&i, &v)| (i, v)));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Halted {
        tape: Tape,
        bits_consumed: usize,
    },
    FuelExhausted {
        bits_consumed: usize,
    },
    /// A flip needed stream bit `position`, which is past the supplied prefix.
    BitDemand {
        position: usize,
    },
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

enum Flow {
    Next,
    Halt,
    OutOfFuel,
    Demand(usize),
}

struct Machine<'a> {
    tape: Tape,
    prefix: &'a [bool],
    next_bit: usize,
    fuel: u64,
}

impl Machine<'_> {
    fn eval(&self, e: &Expr) -> bool {
        e.eval(&|i| self.tape.get(i))
    }

    fn charge(&mut self) -> bool {
        if self.fuel == 0 {
            false
        } else {
            self.fuel -= 1;
            true
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow {
        for s in stmts {
            match self.stmt(s) {
                Flow::Next => {}
                other => return other,
            }
        }
        Flow::Next
    }

    fn stmt(&mut self, s: &Stmt) -> Flow {
        if !self.charge() {
            return Flow::OutOfFuel;
        }
        match s {
            Stmt::Write(i, e) => {
                let v = self.eval(e);
                self.tape.write(*i, v);
                Flow::Next
            }
            Stmt::Flip(i) => {
                let Some(&bit) = self.prefix.get(self.next_bit) else {
                    return Flow::Demand(self.next_bit);
                };
                self.next_bit += 1;
                self.tape.write(*i, bit);
                Flow::Next
            }
            Stmt::If(c, then, other) => {
                if self.eval(c) {
                    self.block(then)
                } else {
                    self.block(other)
                }
            }
            Stmt::While(c, body) => loop {
                if !self.eval(c) {
                    return Flow::Next;
                }
                match self.block(body) {
                    Flow::Next => {}
                    other => return other,
                }
                // each further test of the condition costs one unit
                if !self.charge() {
                    return Flow::OutOfFuel;
                }
            },
            Stmt::Halt => Flow::Halt,
            Stmt::Loop => {
                self.fuel = 0;
                Flow::OutOfFuel
            }
        }
    }
}

/// Runs `p` on the random-bit prefix with at most `fuel` executed statements.
///
/// The result is a pure function of the arguments. Expression evaluation is
/// free; every executed statement (and every repeated loop test) costs one.
pub fn run(p: &SimProgram, prefix: &[bool], fuel: u64) -> RunOutcome {
    let mut m = Machine {
        tape: Tape::with_holds(p.holds.clone()),
        prefix,
        next_bit: 0,
        fuel,
    };
    match m.block(&p.body) {
        Flow::Next | Flow::Halt => RunOutcome::Halted {
            tape: m.tape,
            bits_consumed: m.next_bit,
        },
        Flow::OutOfFuel => RunOutcome::FuelExhausted {
            bits_consumed: m.next_bit,
        },
        Flow::Demand(position) => RunOutcome::BitDemand { position },
    }
}
