//! Seeded generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use probsim::linarith::{LinearSystem, Row as LinRow};
use probsim::nonprob::{Row, WorldTable};
use probsim::proofcheck::{parse_proof, Proof, Reason};
use probsim::syntax::{
    CondAtom, InterventionSpec, LinearAtom, NonProbFormula, ProbFormula, PropFormula, Var,
};
use probsim::vm::{Expr, SimProgram, Stmt};
use probsim::Mode;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prop(r: &mut impl Rng, vars: usize, depth: u32) -> PropFormula {
    if depth == 0 || r.gen_bool(0.35) {
        return match r.gen_range(0..10) {
            0 => PropFormula::Top,
            1 => PropFormula::Bottom,
            _ => PropFormula::atom(r.gen_range(0..vars)),
        };
    }
    match r.gen_range(0..3) {
        0 => prop(r, vars, depth - 1).not(),
        1 => prop(r, vars, depth - 1).and(prop(r, vars, depth - 1)),
        _ => prop(r, vars, depth - 1).or(prop(r, vars, depth - 1)),
    }
}

pub fn spec(r: &mut impl Rng, vars: usize, max_len: usize) -> InterventionSpec {
    let mut idx: Vec<Var> = (0..vars).collect();
    idx.shuffle(r);
    let len = r.gen_range(0..=max_len.min(vars));
    InterventionSpec::new(idx[..len].iter().map(|&i| (i, r.gen_bool(0.5)))).unwrap()
}

/// A pool of distinct conditional atoms over `vars` squares using at most
/// `antecedents` distinct antecedents.
pub fn atom_pool(r: &mut impl Rng, vars: usize, antecedents: usize, size: usize) -> Vec<CondAtom> {
    let mut specs = BTreeSet::new();
    while specs.len() < antecedents {
        specs.insert(spec(r, vars, 2));
        if specs.len() < antecedents && r.gen_bool(0.2) {
            break;
        }
    }
    let specs: Vec<InterventionSpec> = specs.into_iter().collect();
    let mut out: Vec<CondAtom> = Vec::new();
    let mut tries = 0;
    while out.len() < size && tries < 100 {
        tries += 1;
        let a = CondAtom::new(specs.choose(r).unwrap().clone(), prop(r, vars, 2));
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// Boolean combination of atoms from the pool.
pub fn over_atoms(r: &mut impl Rng, atoms: &[CondAtom], depth: u32) -> NonProbFormula {
    if depth == 0 || r.gen_bool(0.3) {
        return match r.gen_range(0..12) {
            0 => NonProbFormula::Top,
            1 => NonProbFormula::Bottom,
            _ => NonProbFormula::Cond(atoms.choose(r).unwrap().clone()),
        };
    }
    match r.gen_range(0..3) {
        0 => over_atoms(r, atoms, depth - 1).not(),
        1 => over_atoms(r, atoms, depth - 1).and(over_atoms(r, atoms, depth - 1)),
        _ => over_atoms(r, atoms, depth - 1).or(over_atoms(r, atoms, depth - 1)),
    }
}

pub fn nonprob(r: &mut impl Rng, vars: usize, antecedents: usize, atoms: usize) -> NonProbFormula {
    let pool = atom_pool(r, vars, antecedents, atoms);
    over_atoms(r, &pool, 3)
}

fn expr(r: &mut impl Rng, vars: usize, depth: u32) -> Expr {
    if depth == 0 || r.gen_bool(0.4) {
        return if r.gen_bool(0.15) {
            Expr::Const(r.gen_bool(0.5))
        } else {
            Expr::read(r.gen_range(0..vars))
        };
    }
    match r.gen_range(0..4) {
        0 => expr(r, vars, depth - 1).not(),
        1 => expr(r, vars, depth - 1).and(expr(r, vars, depth - 1)),
        2 => expr(r, vars, depth - 1).or(expr(r, vars, depth - 1)),
        _ => expr(r, vars, depth - 1).xor(expr(r, vars, depth - 1)),
    }
}

fn block(r: &mut impl Rng, vars: usize, flips: &mut usize, len: usize, depth: u32) -> Vec<Stmt> {
    let mut out = Vec::new();
    for _ in 0..len {
        let s = match r.gen_range(0..10) {
            0..=3 if *flips > 0 => {
                *flips -= 1;
                Stmt::Flip(r.gen_range(0..vars))
            }
            4 | 5 if depth > 0 => {
                let n = r.gen_range(0..3);
                let m = r.gen_range(0..3);
                let t = block(r, vars, flips, n, depth - 1);
                let e = block(r, vars, flips, m, depth - 1);
                Stmt::If(expr(r, vars, 2), t, e)
            }
            6 if r.gen_bool(0.2) => Stmt::Halt,
            _ => Stmt::Write(r.gen_range(0..vars), expr(r, vars, 2)),
        };
        out.push(s);
    }
    out
}

/// A program without `while` or `loop` and at most `max_flips` flips.
pub fn loop_free_program(r: &mut impl Rng, vars: usize, max_flips: usize) -> SimProgram {
    let mut flips = max_flips;
    let len = r.gen_range(1..8);
    SimProgram::new(block(r, vars, &mut flips, len, 2))
}

/// Squares and antecedents mentioned by conditional atoms.
pub fn vocabulary(atoms: &[CondAtom]) -> (Vec<InterventionSpec>, BTreeSet<Var>) {
    let mut specs = BTreeSet::new();
    let mut vars = BTreeSet::new();
    for a in atoms {
        specs.insert(a.antecedent.clone());
        vars.extend(a.antecedent.indices());
        a.consequent.collect_vars(&mut vars);
    }
    (specs.into_iter().collect(), vars)
}

/// Every possible row for one antecedent, in the decider's tie-break order.
pub fn rows_for(spec: &InterventionSpec, vars: &BTreeSet<Var>, mode: Mode) -> Vec<Row> {
    let mut out = Vec::new();
    if mode == Mode::All {
        out.push(Row::Nonhalt);
    }
    let free: Vec<Var> = vars
        .iter()
        .copied()
        .filter(|&i| spec.get(i).is_none())
        .collect();
    for c in 0u32..(1 << free.len()) {
        let mut values: BTreeMap<Var, bool> = vars.iter().map(|&i| (i, false)).collect();
        values.extend(spec.entries().iter().copied());
        for (j, &i) in free.iter().enumerate() {
            values.insert(i, (c >> j) & 1 == 1);
        }
        out.push(Row::Halts(values));
    }
    out
}

/// All tables over the given antecedents, first antecedent most significant.
pub fn all_tables(specs: &[InterventionSpec], vars: &BTreeSet<Var>, mode: Mode) -> Vec<WorldTable> {
    let mut tables = vec![WorldTable {
        mentioned_vars: vars.clone(),
        rows: BTreeMap::new(),
    }];
    for s in specs {
        let rows = rows_for(s, vars, mode);
        tables = tables
            .into_iter()
            .flat_map(|t| {
                rows.iter().map(move |row| {
                    let mut t = t.clone();
                    t.rows.insert(s.clone(), row.clone());
                    t
                })
            })
            .collect();
    }
    tables
}

/// Truth of a conditional formula in a table, evaluated from scratch.
pub fn table_truth(t: &WorldTable, f: &NonProbFormula) -> bool {
    f.eval_bool(&mut |a| match &t.rows[&a.antecedent] {
        Row::Nonhalt => false,
        Row::Halts(v) => a.consequent.eval(&|i| v.get(&i).copied().unwrap_or(false)),
    })
}

/// Truth vectors of `atoms` realized by some table.
pub fn realizable_types(atoms: &[CondAtom], mode: Mode) -> BTreeSet<Vec<bool>> {
    let (specs, vars) = vocabulary(atoms);
    all_tables(&specs, &vars, mode)
        .iter()
        .map(|t| {
            atoms
                .iter()
                .map(|a| table_truth(t, &NonProbFormula::Cond(a.clone())))
                .collect()
        })
        .collect()
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// Exact truth of `f` when the atom-truth vectors `types` carry `weights`.
pub fn mixture_truth(
    f: &ProbFormula,
    atoms: &[CondAtom],
    types: &[Vec<bool>],
    weights: &[BigRational],
) -> bool {
    f.eval_bool(&mut |lin| {
        let mut lhs = BigRational::zero();
        for (a, phi) in &lin.terms {
            for (ty, w) in types.iter().zip(weights) {
                let holds = phi.eval_bool(&mut |c| ty[atoms.iter().position(|x| x == c).unwrap()]);
                if holds {
                    lhs += BigRational::from_integer(a.clone()) * w;
                }
            }
        }
        lhs <= BigRational::from_integer(lin.bound.clone())
    })
}

/// Search over mixtures of realizable types with weights k/d, d <= 4.
pub fn small_model_sat(f: &ProbFormula, mode: Mode) -> bool {
    let atoms = {
        let mut v = f.cond_atoms();
        v.sort();
        v.dedup();
        v
    };
    let types: Vec<Vec<bool>> = realizable_types(&atoms, mode).into_iter().collect();
    for d in 1..=4u32 {
        for c in compositions(d, types.len()) {
            let w: Vec<BigRational> = c
                .iter()
                .map(|&k| BigRational::new(BigInt::from(k), BigInt::from(d)))
                .collect();
            if mixture_truth(f, &atoms, &types, &w) {
                return true;
            }
        }
    }
    false
}

/// A random probability formula with at most `max_atoms` conditional atoms,
/// coefficients and bounds in -2..=2.
pub fn prob_formula(r: &mut impl Rng, max_atoms: usize) -> ProbFormula {
    let n = r.gen_range(1..=max_atoms);
    let pool = atom_pool(r, 2, 2, n);
    let lit = |r: &mut ChaCha8Rng| -> ProbFormula {
        let k = r.gen_range(1..=2);
        let terms = (0..k)
            .map(|_| (BigInt::from(r.gen_range(-2..=2)), over_atoms(r, &pool, 1)))
            .collect();
        let atom = ProbFormula::Atom(LinearAtom::new(terms, BigInt::from(r.gen_range(-2..=2))));
        if r.gen_bool(0.5) {
            atom.not()
        } else {
            atom
        }
    };
    let mut r2 = ChaCha8Rng::seed_from_u64(r.gen());
    let first = lit(&mut r2);
    match r2.gen_range(0..3) {
        0 => first,
        1 => first.and(lit(&mut r2)),
        _ => first.or(lit(&mut r2)),
    }
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

#[allow(clippy::needless_range_loop)]
/// Unique solution of the square system `a x = b`, if any.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let k = &a[r][col] / &a[col][col];
                for c in 0..n {
                    let d = &k * &a[col][c];
                    a[r][c] -= d;
                }
                let d = &k * &b[col];
                b[r] -= d;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Inside the box |x_i| <= 10^4 the closure of the system is a polytope. If
/// the strict system is feasible at all, the polytope's relative interior
/// satisfies every strict row, and the centroid of its vertices lies there.
pub fn oracle_feasible(s: &LinearSystem) -> bool {
    let n = s.n_vars;
    if n == 0 {
        return s.satisfied_by(&[]);
    }
    let mut closed: Vec<LinRow> = s
        .rows
        .iter()
        .map(|r| LinRow {
            strict: false,
            ..r.clone()
        })
        .collect();
    for i in 0..n {
        for sign in [1, -1] {
            let mut coeffs = vec![q(0); n];
            coeffs[i] = q(sign);
            closed.push(LinRow::le(coeffs, q(10_000)));
        }
    }
    let mut vertices = Vec::new();
    for idx in subsets(closed.len(), n) {
        let a = idx.iter().map(|&r| closed[r].coeffs.clone()).collect();
        let b = idx.iter().map(|&r| closed[r].bound.clone()).collect();
        if let Some(x) = solve(a, b) {
            if closed.iter().all(|r| r.holds(&x)) {
                vertices.push(x);
            }
        }
    }
    if vertices.is_empty() {
        return false;
    }
    let count = q(vertices.len() as i64);
    let centroid: Vec<BigRational> = (0..n)
        .map(|i| {
            vertices
                .iter()
                .fold(BigRational::zero(), |acc, v| acc + &v[i])
                / &count
        })
        .collect();
    s.satisfied_by(&centroid)
}

pub fn load(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn proof(name: &str) -> Proof {
    parse_proof(&load(name)).unwrap()
}

pub fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, y) in b.iter().enumerate() {
            cur.push(
                (prev[j] + usize::from(x != y))
                    .min(prev[j + 1] + 1)
                    .min(cur[j] + 1),
            );
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn reason(code: &str) -> Reason {
    [
        Reason::BadSchema,
        Reason::SideCondition,
        Reason::BadMp,
        Reason::NotTaut,
    ]
    .into_iter()
    .find(|r| r.code() == code)
    .unwrap_or_else(|| panic!("unknown code {code}"))
}

pub struct Mutation {
    pub line: usize,
    pub text: String,
    pub expected: Reason,
}

pub fn mutations() -> Vec<Mutation> {
    load("every_schema.mutations")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (line, rest) = l.split_once(" | ").unwrap();
            let (text, code) = rest.rsplit_once(" | ").unwrap();
            Mutation {
                line: line.trim().parse().unwrap(),
                text: text.trim().to_string(),
                expected: reason(code.trim()),
            }
        })
        .collect()
}

pub fn apply(base: &str, m: &Mutation) -> (String, String) {
    let prefix = format!("{}. ", m.line);
    let mut original = None;
    let text = base
        .lines()
        .map(|l| match l.strip_prefix(&prefix) {
            Some(rest) => {
                original = Some(rest.to_string());
                format!("{prefix}{}", m.text)
            }
            None => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    (text, original.expect("mutated line exists"))
}
