//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use probsim::linarith::{feasible, Feasibility, LinearSystem, Row as LinRow};
use probsim::nonprob::valid_nonprob;
use probsim::probsat::{decide_sat, verify_witness, weights_satisfy, MixtureModel};
use probsim::proofcheck::{check_proof, parse_proof, Reason};
use probsim::semantics::{eval_fixed, prob_interval};
use probsim::syntax::{
    parse_nonprob_formula, parse_prob_formula, InterventionSpec, LinearAtom, NonProbFormula,
    ProbFormula,
};
use probsim::vm::{parse_program, SimProgram, Stmt};
use probsim::{Mode, Tri};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn program(name: &str) -> SimProgram {
    parse_program(&load(name)).unwrap()
}

fn np(s: &str) -> NonProbFormula {
    parse_nonprob_formula(s).unwrap()
}

fn copy_program_example() -> Outcome {
    let p = program("copy.sim");
    for f in ["<>!X0", "<>!X1", "<X0>(X0 & X1)"] {
        let iv = prob_interval(&p, &np(f), 0, 100).map_err(|e| e.to_string())?;
        ensure!(iv.lo.is_one() && iv.hi.is_one(), "{f}: {iv}");
    }
    Ok("3 formulas at [1, 1]".into())
}

fn almost_sure_halting() -> Outcome {
    let p = program("geometric.sim");
    let halts = np("<>T");
    for b in 1..=12u32 {
        let iv = prob_interval(&p, &halts, b, 10_000).map_err(|e| e.to_string())?;
        let lo = BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(1u64 << b));
        ensure!(iv.lo == lo && iv.hi.is_one(), "budget {b}: {iv}");
    }
    for len in 0..=40 {
        let zeros = vec![false; len];
        for fuel in (0..=400).step_by(7) {
            ensure!(
                eval_fixed(&p, &halts, &zeros, fuel) != Tri::True,
                "True on {len} zeros at fuel {fuel}"
            );
        }
    }
    Ok("B = 1..12 exact, all-zeros prefixes never True".into())
}

fn flips(p: &SimProgram) -> u32 {
    p.count_statements(|s| matches!(s, Stmt::Flip(_))) as u32
}

fn coherence_suite() -> Outcome {
    let mut r = rng(3);
    let mut naturally_valid = 0;
    let mut implications = 0;
    for case in 0..500 {
        let p = loop_free_program(&mut r, 6, 8);
        let bits = flips(&p);
        let pool = atom_pool(&mut r, 6, 2, 3);
        let f = over_atoms(&mut r, &pool, 2);
        let g = over_atoms(&mut r, &pool, 2);
        let point = |phi: &NonProbFormula| -> Result<BigRational, String> {
            let iv = prob_interval(&p, phi, bits, 1_000).map_err(|e| e.to_string())?;
            ensure!(iv.is_point(), "case {case}: {phi} has {iv}");
            Ok(iv.lo)
        };
        let pf = point(&f)?;
        let split = point(&f.clone().and(g.clone()))? + point(&f.clone().and(g.clone().not()))?;
        ensure!(pf == split, "case {case}: additivity fails for {f} / {g}");
        let valid = [
            f.clone().or(f.clone().not()),
            np("<>T"),
            f.clone().and(g.clone()).implies(f.clone()),
            g.clone(),
        ];
        for v in &valid {
            if valid_nonprob(v, Mode::Halting).map_err(|e| e.to_string())? {
                ensure!(point(v)?.is_one(), "case {case}: valid {v} below 1");
                naturally_valid += 1;
            }
        }
        for (a, b) in [
            (f.clone().and(g.clone()), f.clone()),
            (f.clone(), g.clone()),
            (g.clone(), f.clone()),
        ] {
            if valid_nonprob(&a.clone().implies(b.clone()), Mode::Halting)
                .map_err(|e| e.to_string())?
            {
                ensure!(
                    point(&a)? <= point(&b)?,
                    "case {case}: monotonicity fails for {a} -> {b}"
                );
                implications += 1;
            }
        }
    }
    Ok(format!(
        "{naturally_valid} valid formulas, {implications} valid implications"
    ))
}

fn positive(phi: NonProbFormula) -> ProbFormula {
    ProbFormula::Atom(LinearAtom::new(vec![(BigInt::one(), phi)], BigInt::zero())).not()
}

fn hardness_reduction() -> Outcome {
    let mut r = rng(4);
    let mut sat = 0;
    for _ in 0..100 {
        let pi = prop(&mut r, 3, 3);
        let f = positive(NonProbFormula::cond(InterventionSpec::empty(), pi.clone()));
        let expected = (0u32..8).any(|m| pi.eval(&|i| (m >> i) & 1 == 1));
        sat += usize::from(expected);
        for mode in [Mode::All, Mode::Halting] {
            let got = decide_sat(&f, mode).map_err(|e| e.to_string())?.is_sat();
            ensure!(got == expected, "{pi} in {mode}: decided {got}");
        }
    }
    Ok(format!("{sat}/100 satisfiable"))
}

/// Exact left-hand side of `atom` under the mixture's weights.
fn exact_lhs(m: &MixtureModel, atom: &LinearAtom) -> BigRational {
    atom.terms
        .iter()
        .fold(BigRational::zero(), |acc, (a, phi)| {
            let mass = m
                .blocks
                .iter()
                .filter(|b| b.table.satisfies(phi))
                .fold(BigRational::zero(), |s, b| s + &b.weight);
            acc + BigRational::from_integer(a.clone()) * mass
        })
}

/// Width of the left-hand side's interval at the given caps.
fn lhs_width(
    m: &MixtureModel,
    atom: &LinearAtom,
    bits: u32,
    fuel: u64,
) -> Result<BigRational, String> {
    let mut w = BigRational::zero();
    for (a, phi) in &atom.terms {
        let iv = prob_interval(&m.program, phi, bits, fuel).map_err(|e| e.to_string())?;
        w += BigRational::from_integer(a.clone()).abs() * iv.width();
    }
    Ok(w)
}

fn sat_round_trip() -> Outcome {
    const BITS: u32 = 8;
    const FUEL: u64 = 10_000;
    let mut r = rng(5);
    let (mut sat, mut decided_true) = (0, 0);
    for case in 0..100 {
        let f = prob_formula(&mut r, 3);
        for mode in [Mode::All, Mode::Halting] {
            match decide_sat(&f, mode).map_err(|e| e.to_string())?.model() {
                Some(m) => {
                    sat += 1;
                    ensure!(
                        weights_satisfy(&m.blocks, &f),
                        "case {case} {mode}: weights miss {f}"
                    );
                    let verdict = verify_witness(m, &f, BITS, FUEL).map_err(|e| e.to_string())?;
                    ensure!(
                        verdict != Tri::False,
                        "case {case} {mode}: witness refutes {f}"
                    );
                    if m.weights_are_dyadic() {
                        let mut wide = false;
                        for atom in f.linear_atoms() {
                            let slack = (exact_lhs(m, atom)
                                - BigRational::from_integer(atom.bound.clone()))
                            .abs();
                            wide |= slack <= lhs_width(m, atom, BITS, FUEL)?;
                        }
                        if !wide {
                            ensure!(
                                verdict == Tri::True,
                                "case {case} {mode}: {f} left {verdict}"
                            );
                            decided_true += 1;
                        }
                    }
                }
                None => ensure!(
                    !small_model_sat(&f, mode),
                    "case {case} {mode}: small model satisfies {f}"
                ),
            }
        }
    }
    Ok(format!(
        "{sat}/200 SAT, {decided_true} decided True with slack"
    ))
}

fn mode_separation() -> Outcome {
    let f = parse_prob_formula("P([X0]X1) > P(<X0>X1)").map_err(|e| e.to_string())?;
    let all = decide_sat(&f, Mode::All).map_err(|e| e.to_string())?;
    let m = all.model().ok_or("UNSAT in m")?;
    ensure!(m.has_nonhalt_block(), "witness has no nonhalting block");
    ensure!(
        m.program.to_string().contains("loop"),
        "witness program has no loop"
    );
    ensure!(
        !decide_sat(&f, Mode::Halting)
            .map_err(|e| e.to_string())?
            .is_sat(),
        "SAT in m-down"
    );
    Ok("SAT in m with a loop block, UNSAT in m-down".into())
}

fn proof_checker() -> Outcome {
    let base = load("every_schema.prf");
    let p = parse_proof(&base).map_err(|e| e.to_string())?;
    ensure!(
        p.lines.len() == 10,
        "reference proof has {} lines",
        p.lines.len()
    );
    check_proof(&p).map_err(|e| format!("reference proof: {e}"))?;
    let ms = mutations();
    ensure!(ms.len() == 50, "{} mutations", ms.len());
    for m in &ms {
        let (text, _) = apply(&base, m);
        let mutated = parse_proof(&text).map_err(|e| format!("{}: {e}", m.text))?;
        match check_proof(&mutated) {
            Ok(()) => return Err(format!("accepted mutation {}", m.text)),
            Err(e) => ensure!(
                e.line() == m.line && e.reason() == Some(m.expected),
                "{}: got {e}, expected line {} {}",
                m.text,
                m.line,
                m.expected.code()
            ),
        }
    }
    check_proof(&proof("dist_ok.prf")).map_err(|e| format!("dist_ok: {e}"))?;
    for header in ["mode: ax", "mode: ax-down"] {
        let text = load("dist_bad.prf").replace("mode: ax", header);
        let err = check_proof(&parse_proof(&text).map_err(|e| e.to_string())?);
        ensure!(
            matches!(&err, Err(e) if e.reason() == Some(Reason::SideCondition)),
            "dist_bad under {header}: {err:?}"
        );
    }
    Ok("reference OK, 50/50 mutations rejected, Dist pair as specified".into())
}

fn linarith_oracle() -> Outcome {
    let mut r = rng(8);
    let mut feasible_count = 0;
    for case in 0..1000 {
        let n = r.gen_range(1..=3);
        let rows = (0..r.gen_range(0..=6))
            .map(|_| LinRow {
                coeffs: (0..n).map(|_| q(r.gen_range(-3..=3))).collect(),
                bound: q(r.gen_range(-3..=3)),
                strict: r.gen_bool(0.5),
            })
            .collect();
        let s = LinearSystem { n_vars: n, rows };
        let got = feasible(&s).map_err(|e| e.to_string())?;
        if let Feasibility::Witness(x) = &got {
            ensure!(s.satisfied_by(x), "case {case}: witness fails\n{s}");
            feasible_count += 1;
        }
        ensure!(
            got.witness().is_some() == oracle_feasible(&s),
            "case {case}: disagrees with oracle\n{s}"
        );
    }
    Ok(format!("{feasible_count}/1000 feasible"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "copy-program example",
            Duration::from_secs(1),
            copy_program_example,
        ),
        (
            "almost-sure halting",
            Duration::from_secs(5),
            almost_sure_halting,
        ),
        ("coherence suite", Duration::from_secs(120), coherence_suite),
        (
            "hardness reduction",
            Duration::from_secs(60),
            hardness_reduction,
        ),
        ("SAT round-trip", Duration::from_secs(300), sat_round_trip),
        ("mode separation", Duration::from_secs(1), mode_separation),
        ("proof checker", Duration::from_secs(10), proof_checker),
        ("linarith oracle", Duration::from_secs(60), linarith_oracle),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over the {limit:?} limit")),
            Err(e) => ("FAIL", e),
        };
        failed += usize::from(status == "FAIL");
        println!("{status} {} {name} ({:.2?}): {detail}", i + 1, took);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
