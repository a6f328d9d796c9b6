//! Satisfiability and validity of conditional formulas over deterministic
//! models.
//!
//! A deterministic model under a fixed intervention either never halts or
//! halts with one tape, and different interventions are unconstrained
//! relative to each other. A [`WorldTable`] records exactly that, per
//! antecedent: `nonhalt`, or the final values of the mentioned squares. A
//! formula is satisfiable iff some table makes it true, and every table is
//! realized by the program built in [`synth_world_program`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::limits::Limits;
use crate::par::{self, Strategy};
use crate::syntax::{parse_intervention, CondAtom, InterventionSpec, NonProbFormula, Var};
use crate::tri::Tri;
use crate::vm::{toggle_test, Expr, SimProgram, Stmt};
use crate::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NonProbError {
    #[error("formula mentions {found} squares (cap {cap})")]
    TooManyVars { found: usize, cap: usize },
    #[error("formula has {found} distinct antecedents (cap {cap})")]
    TooManyAntecedents { found: usize, cap: usize },
}

/// Behavior of the model under one intervention.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Row {
    Nonhalt,
    Halts(BTreeMap<Var, bool>),
}

impl Row {
    fn truth_of(&self, atom: &CondAtom) -> bool {
        match self {
            Row::Nonhalt => false,
            Row::Halts(values) => atom
                .consequent
                .eval(&|i| values.get(&i).copied().unwrap_or(false)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorldTable {
    pub mentioned_vars: BTreeSet<Var>,
    pub rows: BTreeMap<InterventionSpec, Row>,
}

impl WorldTable {
    /// The row the synthesized program follows under `spec`: the listed row,
    /// or else the `<>` row (all zeros when absent) with the held squares
    /// overlaid.
    pub fn row_for(&self, spec: &InterventionSpec) -> Row {
        if let Some(row) = self.rows.get(spec) {
            return row.clone();
        }
        match self.rows.get(&InterventionSpec::empty()) {
            Some(Row::Nonhalt) => Row::Nonhalt,
            other => {
                let mut values = match other {
                    Some(Row::Halts(v)) => v.clone(),
                    _ => self.mentioned_vars.iter().map(|&i| (i, false)).collect(),
                };
                for &(i, v) in spec.entries() {
                    values.insert(i, v);
                }
                Row::Halts(values)
            }
        }
    }

    pub fn atom_truth(&self, atom: &CondAtom) -> bool {
        self.row_for(&atom.antecedent).truth_of(atom)
    }

    pub fn satisfies(&self, f: &NonProbFormula) -> bool {
        f.eval_bool(&mut |a| self.atom_truth(a))
    }

    /// Every halting row extends its antecedent, and in halting mode no row
    /// is `nonhalt`.
    pub fn is_consistent(&self, mode: Mode) -> bool {
        self.rows.iter().all(|(spec, row)| match row {
            Row::Nonhalt => mode == Mode::All,
            Row::Halts(values) => spec
                .entries()
                .iter()
                .all(|(i, v)| values.get(i).copied().unwrap_or(false) == *v),
        })
    }

    pub fn has_nonhalt(&self) -> bool {
        self.rows.values().any(|r| *r == Row::Nonhalt)
    }

    /// Squares the synthesized program inspects: mentioned squares plus all
    /// antecedent squares.
    pub fn relevant_vars(&self) -> BTreeSet<Var> {
        let mut out = self.mentioned_vars.clone();
        for spec in self.rows.keys() {
            out.extend(spec.indices());
        }
        for row in self.rows.values() {
            if let Row::Halts(values) = row {
                out.extend(values.keys().copied());
            }
        }
        out
    }
}

impl fmt::Display for WorldTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (spec, row) in &self.rows {
            write!(f, "<{spec}> =>")?;
            match row {
                Row::Nonhalt => f.write_str(" nonhalt")?,
                Row::Halts(values) => {
                    for (i, v) in values {
                        write!(f, " X{i}={}", u8::from(*v))?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("world table line {line}: {msg}")]
pub struct TableParseError {
    pub line: usize,
    pub msg: String,
}

/// Parses the text written by `WorldTable`'s `Display`.
pub fn parse_world_table(text: &str) -> Result<WorldTable, TableParseError> {
    let mut table = WorldTable::default();
    for (n, raw) in text.lines().enumerate() {
        let err = |msg: &str| TableParseError {
            line: n + 1,
            msg: msg.to_string(),
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once("=>").ok_or_else(|| err("missing '=>'"))?;
        let lhs = lhs.trim();
        let inner = lhs
            .strip_prefix('<')
            .and_then(|s| s.strip_suffix('>'))
            .ok_or_else(|| err("antecedent must be written <...>"))?;
        let spec = parse_intervention(inner).map_err(|e| err(&e.to_string()))?;
        table.mentioned_vars.extend(spec.indices());
        let rhs = rhs.trim();
        let row = if rhs == "nonhalt" {
            Row::Nonhalt
        } else {
            let mut values = BTreeMap::new();
            for item in rhs.split_whitespace() {
                let (x, v) = item
                    .split_once('=')
                    .ok_or_else(|| err("expected X<n>=<bit>"))?;
                let i: Var = x
                    .strip_prefix('X')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| err("expected X<n>"))?;
                let v = match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(err("value must be 0 or 1")),
                };
                values.insert(i, v);
                table.mentioned_vars.insert(i);
            }
            Row::Halts(values)
        };
        if table.rows.insert(spec, row).is_some() {
            return Err(err("duplicate antecedent"));
        }
    }
    Ok(table)
}

/// Antecedents and squares a formula talks about.
pub(crate) fn vocabulary(atoms: &[CondAtom]) -> (Vec<InterventionSpec>, BTreeSet<Var>) {
    let mut antecedents = BTreeSet::new();
    let mut vars = BTreeSet::new();
    for a in atoms {
        antecedents.insert(a.antecedent.clone());
        vars.extend(a.antecedent.indices());
        a.consequent.collect_vars(&mut vars);
    }
    (antecedents.into_iter().collect(), vars)
}

/// Candidate rows for one antecedent in tie-break order: `nonhalt` first
/// (all-models mode only), then assignments of the free squares counting in
/// binary with the lowest free index as the least significant bit.
pub(crate) fn candidate_rows<'a>(
    spec: &'a InterventionSpec,
    vars: &'a BTreeSet<Var>,
    mode: Mode,
) -> impl Iterator<Item = Row> + 'a {
    let free: Vec<Var> = vars
        .iter()
        .copied()
        .filter(|&i| spec.get(i).is_none())
        .collect();
    let nonhalt = (mode == Mode::All).then_some(Row::Nonhalt);
    let count = 1u64 << free.len();
    nonhalt.into_iter().chain((0..count).map(move |c| {
        let mut values: BTreeMap<Var, bool> = vars.iter().map(|&i| (i, false)).collect();
        for &(i, v) in spec.entries() {
            values.insert(i, v);
        }
        for (j, &i) in free.iter().enumerate() {
            values.insert(i, (c >> j) & 1 == 1);
        }
        Row::Halts(values)
    }))
}

/// Per antecedent: the distinct truth vectors of its atoms, each with the
/// first row that produces it.
struct Choices {
    antecedents: Vec<InterventionSpec>,
    /// `atoms[k]` are the atoms whose antecedent is `antecedents[k]`.
    atoms: Vec<Vec<CondAtom>>,
    options: Vec<Vec<(Row, Vec<bool>)>>,
}

impl Choices {
    fn build(
        f: &NonProbFormula,
        mode: Mode,
        limits: &Limits,
    ) -> Result<(Self, BTreeSet<Var>), NonProbError> {
        let all_atoms = f.cond_atoms();
        let (antecedents, vars) = vocabulary(&all_atoms);
        if vars.len() > limits.max_vars {
            return Err(NonProbError::TooManyVars {
                found: vars.len(),
                cap: limits.max_vars,
            });
        }
        if antecedents.len() > limits.max_antecedents {
            return Err(NonProbError::TooManyAntecedents {
                found: antecedents.len(),
                cap: limits.max_antecedents,
            });
        }
        let atoms: Vec<Vec<CondAtom>> = antecedents
            .iter()
            .map(|s| {
                all_atoms
                    .iter()
                    .filter(|a| &a.antecedent == s)
                    .cloned()
                    .collect()
            })
            .collect();
        let options = antecedents
            .iter()
            .zip(&atoms)
            .map(|(spec, spec_atoms)| {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for row in candidate_rows(spec, &vars, mode) {
                    let v: Vec<bool> = spec_atoms.iter().map(|a| row.truth_of(a)).collect();
                    if seen.insert(v.clone()) {
                        out.push((row, v));
                        if seen.len() == 1usize << spec_atoms.len().min(63) {
                            break;
                        }
                    }
                }
                out
            })
            .collect();
        Ok((
            Choices {
                antecedents,
                atoms,
                options,
            },
            vars,
        ))
    }

    /// Kleene value of `f` with the first `chosen.len()` antecedents fixed.
    fn partial_eval(&self, f: &NonProbFormula, chosen: &[usize]) -> Tri {
        f.eval_tri(&mut |atom| {
            let k = self
                .antecedents
                .binary_search(&atom.antecedent)
                .expect("antecedent registered");
            match chosen.get(k) {
                None => Tri::Unknown,
                Some(&opt) => {
                    let j = self.atoms[k]
                        .iter()
                        .position(|a| a == atom)
                        .expect("atom registered");
                    Tri::from_bool(self.options[k][opt].1[j])
                }
            }
        })
    }

    fn search(&self, f: &NonProbFormula, chosen: &mut Vec<usize>) -> bool {
        match self.partial_eval(f, chosen) {
            Tri::False => return false,
            Tri::True => {
                // remaining antecedents are irrelevant; take their first option
                while chosen.len() < self.antecedents.len() {
                    chosen.push(0);
                }
                return true;
            }
            Tri::Unknown => {}
        }
        let k = chosen.len();
        if k == self.antecedents.len() {
            return false;
        }
        for opt in 0..self.options[k].len() {
            chosen.push(opt);
            if self.search(f, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn table(&self, chosen: &[usize], vars: BTreeSet<Var>) -> WorldTable {
        WorldTable {
            mentioned_vars: vars,
            rows: self
                .antecedents
                .iter()
                .zip(chosen)
                .enumerate()
                .map(|(k, (spec, &opt))| (spec.clone(), self.options[k][opt].0.clone()))
                .collect(),
        }
    }
}

/// Configurable entry point for the decision procedures.
#[derive(Clone, Debug, Default)]
pub struct NonProbSolver {
    pub limits: Limits,
    pub strategy: Strategy,
}

impl NonProbSolver {
    /// The first satisfying table in tie-break order, or `None` when
    /// unsatisfiable.
    pub fn sat(&self, f: &NonProbFormula, mode: Mode) -> Result<Option<WorldTable>, NonProbError> {
        let (choices, vars) = Choices::build(f, mode, &self.limits)?;
        if choices.antecedents.is_empty() {
            return Ok(f
                .eval_bool(&mut |_| unreachable!("no atoms"))
                .then(|| choices.table(&[], vars)));
        }
        let firsts: Vec<usize> = (0..choices.options[0].len()).collect();
        let found = par::find_map_first(self.strategy, &firsts, |&opt| {
            let mut chosen = vec![opt];
            choices.search(f, &mut chosen).then_some(chosen)
        });
        Ok(found.map(|chosen| choices.table(&chosen, vars)))
    }

    pub fn valid(&self, f: &NonProbFormula, mode: Mode) -> Result<bool, NonProbError> {
        Ok(self.sat(&f.clone().not(), mode)?.is_none())
    }

    pub fn equiv(
        &self,
        f: &NonProbFormula,
        g: &NonProbFormula,
        mode: Mode,
    ) -> Result<bool, NonProbError> {
        self.valid(&f.clone().iff(g.clone()), mode)
    }
}

pub fn sat_nonprob(f: &NonProbFormula, mode: Mode) -> Result<Option<WorldTable>, NonProbError> {
    NonProbSolver::default().sat(f, mode)
}

pub fn valid_nonprob(f: &NonProbFormula, mode: Mode) -> Result<bool, NonProbError> {
    NonProbSolver::default().valid(f, mode)
}

pub fn equiv_nonprob(
    f: &NonProbFormula,
    g: &NonProbFormula,
    mode: Mode,
) -> Result<bool, NonProbError> {
    NonProbSolver::default().equiv(f, g, mode)
}

fn row_body(row: &Row) -> Vec<Stmt> {
    match row {
        Row::Nonhalt => vec![Stmt::Loop],
        Row::Halts(values) => values
            .iter()
            .map(|(&i, &v)| Stmt::Write(i, Expr::Const(v)))
            .chain(std::iter::once(Stmt::Halt))
            .collect(),
    }
}

/// Program statements realizing `t`, using squares from `scratch_base` on
/// for bookkeeping. `scratch_base` must exceed every relevant square.
pub fn world_program_body(t: &WorldTable, scratch_base: Var) -> Vec<Stmt> {
    let relevant: Vec<Var> = t.relevant_vars().into_iter().collect();
    debug_assert!(relevant.last().is_none_or(|&m| m < scratch_base));
    let top = InterventionSpec::empty();
    let default = row_body(&t.row_for(&top));
    let listed: Vec<(&InterventionSpec, &Row)> =
        t.rows.iter().filter(|(s, _)| **s != top).collect();
    if listed.is_empty() {
        return default;
    }
    let held_flag = |j: usize| scratch_base + 1 + j;
    let mut body = Vec::new();
    for (j, &i) in relevant.iter().enumerate() {
        body.extend(toggle_test(i, scratch_base, held_flag(j)));
    }
    let matches = |spec: &InterventionSpec| {
        Expr::all(relevant.iter().enumerate().map(|(j, &i)| {
            let held = Expr::read(held_flag(j));
            match spec.get(i) {
                Some(true) => held.and(Expr::read(i)),
                Some(false) => held.and(Expr::read(i).not()),
                None => held.not(),
            }
        }))
    };
    let chain = listed.iter().rev().fold(default, |otherwise, (spec, row)| {
        vec![Stmt::If(matches(spec), row_body(row), otherwise)]
    });
    body.extend(chain);
    body
}

/// A flip-free program whose behavior under every listed intervention is the
/// table's row. Emits `loop` only for `nonhalt` rows.
pub fn synth_world_program(t: &WorldTable) -> SimProgram {
    let base = t.relevant_vars().last().map_or(0, |&m| m + 1);
    SimProgram::new(world_program_body(t, base))
}
