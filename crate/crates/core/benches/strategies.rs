//! Sequential versus parallel strategy on the data-parallel loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use probsim::nonprob::NonProbSolver;
use probsim::probsat::SatSolver;
use probsim::semantics::{mc_estimate, Evaluator, McConfig};
use probsim::syntax::{parse_nonprob_formula, parse_prob_formula};
use probsim::vm::parse_program;
use probsim::{Mode, Strategy};

const STRATEGIES: [Strategy; 2] = [Strategy::Sequential, Strategy::Parallel];

fn majority_program(n: usize) -> String {
    let mut src = String::new();
    for i in 0..n {
        src.push_str(&format!("flip X{i}\n"));
    }
    src.push_str("write X20 := X0 ^ X1 ^ X2 ^ X3\n");
    src.push_str("while !X4 {\n    flip X4\n}\n");
    src
}

fn exact_intervals(c: &mut Criterion) {
    let p = parse_program(&majority_program(14)).unwrap();
    let f = parse_nonprob_formula("<>(X20 | X13) & <X5:=1>(X6 -> X12)").unwrap();
    let mut g = c.benchmark_group("prob_interval");
    for s in STRATEGIES {
        let ev = Evaluator::new(16, 10_000).with_strategy(s);
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{s:?}")),
            &ev,
            |b, ev| b.iter(|| ev.prob_interval(&p, &f).unwrap()),
        );
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let p = parse_program(&majority_program(10)).unwrap();
    let f = parse_nonprob_formula("<>X20 & <X1:=0>!X9").unwrap();
    let mut g = c.benchmark_group("mc_estimate");
    for s in STRATEGIES {
        let mut cfg = McConfig::new(20_000, 10_000, 64, 1);
        cfg.strategy = s;
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{s:?}")),
            &cfg,
            |b, cfg| b.iter(|| mc_estimate(&p, &f, cfg)),
        );
    }
    g.finish();
}

fn deciders(c: &mut Criterion) {
    let np = parse_nonprob_formula(
        "(<X0:=1>(X1 & X2) | <X3:=0>!X4) & <X5:=1>(X0 <-> X3) & !<>(X1 & X4 & X6) & <X2:=1, X6:=0>X7",
    )
    .unwrap();
    let prob = parse_prob_formula(
        "P(<X0:=1>X1) - P(<>X1) >= 1/2 & P(<X0:=1>X1 & <>X2) + P([X3:=1]X2) < 3/4 & P(<X3:=1>X0) > 0",
    )
    .unwrap();
    let mut g = c.benchmark_group("deciders");
    for s in STRATEGIES {
        let ns = NonProbSolver {
            strategy: s,
            ..Default::default()
        };
        g.bench_with_input(
            BenchmarkId::new("sat_nonprob", format!("{s:?}")),
            &ns,
            |b, ns| b.iter(|| ns.sat(&np, Mode::All).unwrap()),
        );
        let ss = SatSolver {
            strategy: s,
            ..Default::default()
        };
        g.bench_with_input(
            BenchmarkId::new("decide_sat", format!("{s:?}")),
            &ss,
            |b, ss| b.iter(|| ss.decide(&prob, Mode::All).unwrap()),
        );
    }
    g.finish();
}

criterion_group!(benches, exact_intervals, sampling, deciders);
criterion_main!(benches);
