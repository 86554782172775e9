mod support;

use maintgame::milp::{brute_force_milp, solve_lp, solve_milp, MilpModel, Sense, SolveLimits, SolveStatus};
use proptest::prelude::*;
use support::{random_lp, random_milp, vertex_lp_oracle};

#[test]
fn seeded_lps_match_vertex_oracle() {
    let mut feasible = 0;
    for seed in 0..20 {
        let m = random_lp(seed);
        let s = solve_lp(&m).unwrap();
        match vertex_lp_oracle(&m) {
            Some(obj) => {
                feasible += 1;
                assert_eq!(s.status, SolveStatus::Optimal, "seed {seed}");
                assert!((s.objective - obj).abs() <= 1e-6, "seed {seed}: {} vs {obj}", s.objective);
            }
            None => assert_eq!(s.status, SolveStatus::Infeasible, "seed {seed}"),
        }
    }
    assert!(feasible >= 15);
}

#[test]
fn seeded_milps_match_brute_force() {
    for seed in 0..50 {
        let m = random_milp(seed);
        let bb = solve_milp(&m, SolveLimits::default()).unwrap();
        let bf = brute_force_milp(&m).unwrap();
        assert_eq!(bb.status, bf.status, "seed {seed}");
        if bb.status == SolveStatus::Optimal {
            assert!((bb.objective - bf.objective).abs() <= 1e-6, "seed {seed}: {} vs {}", bb.objective, bf.objective);
            assert!(m.max_violation(&bb.values) <= 1e-7, "seed {seed}");
            assert!(m.max_integrality_gap(&bb.values) <= 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn lp_integral_instance_matches_lp() {
    // Totally unimodular assignment problem: the relaxation is integral.
    let mut m = MilpModel::new("assign");
    let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
    let mut x = Vec::new();
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            let v = m.add_binary(format!("x{i}{j}"));
            m.objective.push((v, c));
            x.push(v);
        }
    }
    for i in 0..3 {
        m.add_constraint(format!("r{i}"), (0..3).map(|j| (x[3 * i + j], 1.0)).collect(), Sense::Eq, 1.0);
        m.add_constraint(format!("c{i}"), (0..3).map(|j| (x[3 * j + i], 1.0)).collect(), Sense::Eq, 1.0);
    }
    let lp = solve_lp(&m).unwrap();
    let ip = solve_milp(&m, SolveLimits::default()).unwrap();
    assert_eq!(ip.stats.nodes, 1);
    assert!((lp.objective - ip.objective).abs() < 1e-12);
    assert_eq!(lp.values, ip.values);
}

#[test]
fn solves_are_deterministic() {
    for seed in [3, 17, 41] {
        let m = random_milp(seed);
        let a = solve_milp(&m, SolveLimits::default()).unwrap();
        let b = solve_milp(&m, SolveLimits::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.stats.nodes, b.stats.nodes);
        assert_eq!(a.stats.incumbent_history, b.stats.incumbent_history);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_duality_gap_closes(seed in 0u64..10_000) {
        let m = random_lp(seed);
        let s = solve_lp(&m).unwrap();
        if s.status == SolveStatus::Optimal {
            let d = s.dual_bound.unwrap();
            prop_assert!((s.objective - d).abs() <= 1e-6 * s.objective.abs().max(1.0));
            prop_assert!(m.max_violation(&s.values) <= 1e-7);
        }
    }

    #[test]
    fn milp_incumbents_only_improve(seed in 0u64..10_000) {
        let m = random_milp(seed);
        let s = solve_milp(&m, SolveLimits::default()).unwrap();
        let h = &s.stats.incumbent_history;
        prop_assert!(h.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 >= w[0].0));
        if s.status == SolveStatus::Optimal {
            prop_assert!(m.max_violation(&s.values) <= 1e-7);
            prop_assert_eq!(h.last().unwrap().1, s.objective);
        }
    }
}
