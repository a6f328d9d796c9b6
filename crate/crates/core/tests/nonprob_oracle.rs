mod common;

use common::*;
use probsim::nonprob::{sat_nonprob, synth_world_program, valid_nonprob, Row, WorldTable};
use probsim::semantics::eval_fixed;
use probsim::syntax::{NonProbFormula, PropFormula};
use probsim::{Mode, Tri};
use proptest::prelude::*;
use rand::Rng;

fn modes() -> [Mode; 2] {
    [Mode::All, Mode::Halting]
}

/// Evaluates `f` in the program built from `t`, deciding atoms whose row is
/// `nonhalt` from the table since non-halting is not finitely observable.
fn bridge(t: &WorldTable, f: &NonProbFormula) -> Tri {
    let p = synth_world_program(t);
    let vars = t.relevant_vars().len();
    let fuel = 64 * (t.rows.len() as u64 + 1) * (vars as u64 + 1);
    f.eval_tri(&mut |a| match t.rows.get(&a.antecedent) {
        Some(Row::Nonhalt) => Tri::False,
        _ => eval_fixed(&p, &NonProbFormula::Cond(a.clone()), &[], fuel),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn first_hit_matches_brute_force(seed in any::<u64>(), vars in 1usize..=2, ants in 1usize..=2) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let f = nonprob(&mut r, vars, ants, n);
        let atoms = f.cond_atoms();
        let (specs, vs) = vocabulary(&atoms);
        for mode in modes() {
            let expected = all_tables(&specs, &vs, mode).into_iter().find(|t| table_truth(t, &f));
            let got = sat_nonprob(&f, mode).unwrap();
            prop_assert_eq!(got.as_ref().map(|t| &t.rows), expected.as_ref().map(|t| &t.rows), "{} in {}", f, mode);
        }
    }

    #[test]
    fn soundness_bridge(seed in any::<u64>(), vars in 1usize..=4, ants in 1usize..=3) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let f = nonprob(&mut r, vars, ants, n);
        for mode in modes() {
            if let Some(t) = sat_nonprob(&f, mode).unwrap() {
                prop_assert!(t.is_consistent(mode));
                prop_assert!(t.satisfies(&f));
                prop_assert_eq!(bridge(&t, &f), Tri::True, "{} in {}\n{}", f, mode, t);
                if !t.has_nonhalt() {
                    let p = synth_world_program(&t);
                    prop_assert_eq!(eval_fixed(&p, &f, &[], 100_000), Tri::True);
                }
            }
        }
    }

    #[test]
    fn mode_monotonicity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = nonprob(&mut r, 3, 2, 3);
        if sat_nonprob(&f, Mode::All).unwrap().is_none() {
            prop_assert!(sat_nonprob(&f, Mode::Halting).unwrap().is_none());
        }
        if valid_nonprob(&f, Mode::All).unwrap() {
            prop_assert!(valid_nonprob(&f, Mode::Halting).unwrap());
        }
    }

    #[test]
    fn one_row_per_antecedent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pool = atom_pool(&mut r, 3, 1, 2);
        if pool.len() == 2 {
            let (a, b) = (NonProbFormula::Cond(pool[0].clone()), NonProbFormula::Cond(pool[1].clone()));
            let both = NonProbFormula::cond(
                pool[0].antecedent.clone(),
                pool[0].consequent.clone().and(pool[1].consequent.clone()),
            );
            for mode in modes() {
                prop_assert!(valid_nonprob(&a.clone().and(b.clone()).implies(both.clone()), mode).unwrap());
                if let Some(t) = sat_nonprob(&a.clone().and(b.clone()), mode).unwrap() {
                    prop_assert!(t.satisfies(&both));
                }
            }
        }
    }

    #[test]
    fn intervention_fixpoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = spec(&mut r, 3, 3);
        let beta = prop(&mut r, 3, 2);
        let f = NonProbFormula::cond(s.clone(), beta).implies(NonProbFormula::cond(s.clone(), PropFormula::from_spec(&s)));
        for mode in modes() {
            prop_assert!(valid_nonprob(&f, mode).unwrap());
        }
    }
}

#[test]
fn random_tables_through_synthesis() {
    let mut r = rng(7);
    for _ in 0..100 {
        let vars = r.gen_range(1..=3);
        let mode = if r.gen_bool(0.5) {
            Mode::All
        } else {
            Mode::Halting
        };
        let ants = r.gen_range(1..=3);
        let mut specs: Vec<_> = (0..ants).map(|_| spec(&mut r, vars, 2)).collect();
        specs.sort();
        specs.dedup();
        let vs = (0..vars).collect();
        let tables = all_tables(&specs, &vs, mode);
        let t = &tables[r.gen_range(0..tables.len())];
        let p = synth_world_program(t);
        assert_eq!(
            p.count_statements(|s| matches!(s, probsim::vm::Stmt::Flip(_))),
            0
        );
        for (s, row) in &t.rows {
            for i in 0..vars {
                let atom = NonProbFormula::cond(s.clone(), PropFormula::atom(i));
                let got = eval_fixed(&p, &atom, &[], 10_000);
                match row {
                    Row::Nonhalt => assert_eq!(got, Tri::Unknown),
                    Row::Halts(v) => assert_eq!(got, Tri::from_bool(v[&i]), "{t}\n{p}"),
                }
            }
        }
    }
}
