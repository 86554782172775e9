mod support;

use maintgame::dispatch::{DispatchOptions, MaintenanceCost};
use maintgame::game::*;
use maintgame::milp::SolveLimits;
use maintgame::network::{CaseData, Owner};
use maintgame::report::to_json;
use maintgame::schedule::{owner_options, OwnerSchedule};
use proptest::prelude::*;
use support::feasibility::residuals;
use support::spne::{is_subgame_perfect, oracle_spne, tree};
use support::{bundled, window};

const PICK: [usize; 3] = [0, 2, 5];

fn subset(case: &CaseData, owner: Owner) -> Vec<OwnerSchedule> {
    let all = owner_options(case, owner).unwrap();
    PICK.iter().map(|&i| all[i].clone()).collect()
}

fn toy3_subset() -> (CaseData, LeafMatrix) {
    let case = bundled("toy3");
    let cfg = EvalConfig { segments: 3, ..EvalConfig::default() };
    let m = evaluate_leaves(&case, &subset(&case, Owner::Power), &subset(&case, Owner::Gas), &cfg).unwrap();
    (case, m)
}

fn fixture_path() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy3_subset_k3.csv")
}

#[test]
fn toy3_subset_tree() {
    let (case, m) = toy3_subset();
    assert_eq!(m.leaves.len(), 3);
    assert!(m.leaves.iter().all(|r| r.len() == 3));
    let pwl = pipeline_segments(&case, 3).unwrap();
    for (i, row) in m.leaves.iter().enumerate() {
        for (j, leaf) in row.iter().enumerate() {
            let v = m.indicator(&case, i, j);
            let r = residuals(&case, &v, &pwl, &leaf.solution, false);
            assert!(r.violations().is_empty(), "({i},{j}): {:?}", r.violations());
        }
    }

    let tree = GameTree::from_matrix(&m, Owner::Power);
    let csv = surface_csv(&payoff_surface(&tree));
    assert_eq!(csv.lines().count(), 1 + 9);
    if std::env::var_os("MAINTGAME_BLESS").is_some() {
        std::fs::write(fixture_path(), &csv).unwrap();
    }
    let frozen = std::fs::read_to_string(fixture_path()).expect("fixture present");
    assert_eq!(frozen.lines().count(), csv.lines().count());
    for (got, want) in csv.lines().zip(frozen.lines()).skip(1) {
        let g: Vec<&str> = got.split(',').collect();
        let w: Vec<&str> = want.split(',').collect();
        assert_eq!(g[..2], w[..2]);
        for c in 2..4 {
            let (a, b): (f64, f64) = (g[c].parse().unwrap(), w[c].parse().unwrap());
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{got} vs {want}");
        }
    }

    for leader in [Owner::Power, Owner::Gas] {
        let t = GameTree::from_matrix(&m, leader);
        let r = backward_induction(&t, TieBreak::LowestIndex);
        let (choice, strategy) = oracle_spne(&t);
        assert_eq!((r.leader_choice, r.follower_best_response.clone()), (choice, strategy));
        for i in 0..3 {
            assert_eq!(best_response(&t, i, TieBreak::LowestIndex), r.follower_best_response[i]);
        }
    }

    // convention swap with the constant-cost variant of the case
    let mut flat = case.clone();
    for task in &mut flat.maintenance {
        let c = task.cost_per_period[0];
        task.cost_per_period.iter_mut().for_each(|x| *x = c);
    }
    let out = m.reprice(&flat, &DispatchOptions::default());
    let inn = m.reprice(&flat, &DispatchOptions { maintenance_cost: MaintenanceCost::InService, ..Default::default() });
    for leader in [Owner::Power, Owner::Gas] {
        let a = backward_induction(&GameTree::from_matrix(&out, leader), TieBreak::LowestIndex);
        let b = backward_induction(&GameTree::from_matrix(&inn, leader), TieBreak::LowestIndex);
        assert_eq!((a.leader_choice, &a.follower_best_response), (b.leader_choice, &b.follower_best_response));
    }
}

/// Four periods with two-period tasks: three options each.
fn small_case() -> CaseData {
    let mut c = window(&bundled("toy3"), 5, 4);
    c.maintenance.iter_mut().for_each(|t| t.duration = 2);
    c
}

#[test]
fn leaf_matrices_are_transpose_equal_across_orders() {
    let case = small_case();
    let cfg = EvalConfig { segments: 3, ..EvalConfig::default() };
    let (p, g) = (owner_options(&case, Owner::Power).unwrap(), owner_options(&case, Owner::Gas).unwrap());
    let power_led = build_game_tree(&case, Owner::Power, &p, &g, &cfg).unwrap();
    let gas_led = build_game_tree(&case, Owner::Gas, &p, &g, &cfg).unwrap();
    for i in 0..p.len() {
        for j in 0..g.len() {
            assert_eq!(power_led.leaves[i][j].power_payoff, gas_led.leaves[j][i].power_payoff);
            assert_eq!(power_led.leaves[i][j].gas_payoff, gas_led.leaves[j][i].gas_payoff);
        }
    }
}

#[test]
fn parallel_evaluation_is_deterministic() {
    let case = small_case();
    let serial = evaluate_case(&case, &EvalConfig { segments: 3, ..EvalConfig::default() }).unwrap();
    let parallel = evaluate_case(&case, &EvalConfig { segments: 3, workers: 3, ..EvalConfig::default() }).unwrap();
    assert_eq!(to_json(&serial).unwrap(), to_json(&parallel).unwrap());
    let again = evaluate_case(&case, &EvalConfig { segments: 3, ..EvalConfig::default() }).unwrap();
    assert_eq!(to_json(&serial).unwrap(), to_json(&again).unwrap());
    let spne =
        |m: &LeafMatrix| to_json(&backward_induction(&GameTree::from_matrix(m, Owner::Gas), TieBreak::LowestIndex));
    assert_eq!(spne(&serial).unwrap(), spne(&again).unwrap());
}

#[test]
fn single_option_each_is_one_leaf() {
    let mut case = window(&bundled("toy3"), 5, 4);
    case.maintenance.iter_mut().for_each(|t| t.duration = 4);
    let m = evaluate_case(&case, &EvalConfig { segments: 3, ..EvalConfig::default() }).unwrap();
    assert_eq!((m.leaves.len(), m.leaves[0].len()), (1, 1));
    for leader in [Owner::Power, Owner::Gas] {
        let r = backward_induction(&GameTree::from_matrix(&m, leader), TieBreak::LowestIndex);
        assert_eq!((r.leader_choice, r.follower_choice()), (0, 0));
        assert_eq!((r.power_payoff, r.gas_payoff), (m.leaves[0][0].power_payoff, m.leaves[0][0].gas_payoff));
    }
}

#[test]
fn node_cap_aborts_with_the_leaf_index() {
    let case = small_case();
    let limits = SolveLimits { node_cap: Some(1), ..SolveLimits::default() };
    let cfg =
        EvalConfig { segments: 3, dispatch: DispatchOptions { limits, ..Default::default() }, ..Default::default() };
    let err = evaluate_case(&case, &cfg).unwrap_err();
    assert!(err.is_limit(), "{err}");
    assert!(matches!(err, GameError::Leaf { power: 0, gas: 0, .. }));
}

#[test]
fn sixbus_tree_shape() {
    let case = bundled("sixbus");
    let p = owner_options(&case, Owner::Power).unwrap();
    let g = owner_options(&case, Owner::Gas).unwrap();
    assert_eq!((p.len(), g.len(), p.len() * g.len()), (12, 18, 216));
}

#[test]
fn duration_sweep_rows() {
    let case = small_case();
    let cfg = EvalConfig { segments: 3, ..EvalConfig::default() };
    let rows = run_duration_sweep(&case, "l13", &[4, 5, 2], &cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].payoffs.is_some() && rows[0].error.is_none());
    assert!(rows[1].payoffs.is_none() && rows[1].error.as_deref().unwrap().contains("exceeds horizon"));
    assert!(rows[2].payoffs.is_some());
    let csv = duration_csv(&rows);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(2).unwrap().starts_with("5,,,,,"));
    assert!(run_duration_sweep(&case, "l13", &[], &cfg).is_err());
    assert!(run_duration_sweep(&case, "nope", &[2], &cfg).is_err());
}

#[test]
fn segment_sweep_reference_rules() {
    let case = window(&bundled("toy3"), 5, 3);
    let cfg = EvalConfig::default();
    let s = run_segment_sweep(&case, &[15], &cfg).unwrap();
    assert_eq!(s.reference_k, Some(15));
    assert_eq!(s.rows[0].relative_error, Some(0.0));
    let s = run_segment_sweep(&case, &[3], &cfg).unwrap();
    assert_eq!(s.reference_k, None);
    assert_eq!(s.rows[0].relative_error, None);
    assert!(segment_csv(&s).lines().nth(1).unwrap().ends_with(",undefined"));
    assert!(run_segment_sweep(&case, &[], &cfg).is_err());
}

#[test]
fn hand_checked_two_by_two() {
    let t = tree(Owner::Power, &[vec![(5.0, 1.0), (6.0, 9.0)], vec![(7.0, 2.0), (4.0, 8.0)]]);
    let r = backward_induction(&t, TieBreak::LowestIndex);
    assert_eq!((r.leader_choice, r.follower_best_response.clone()), (0, vec![1, 1]));
    assert_eq!((r.power_payoff, r.gas_payoff), (6.0, 9.0));
    assert_eq!(best_response(&t, 0, TieBreak::LowestIndex), 1);

    let flat = tree(Owner::Gas, &vec![vec![(1.0, 1.0); 3]; 3]);
    let r = backward_induction(&flat, TieBreak::LowestIndex);
    assert_eq!((r.leader_choice, r.follower_choice()), (0, 0));

    let s = payoff_surface(&t);
    assert_eq!(s.power, vec![vec![5.0, 6.0], vec![7.0, 4.0]]);
    assert_eq!(s.gas, vec![vec![1.0, 9.0], vec![2.0, 8.0]]);
}

#[test]
fn symmetric_payoffs_give_transposed_surfaces() {
    let cells: Vec<Vec<(f64, f64)>> =
        (0..3).map(|i| (0..3).map(|j| ((i * 3 + j) as f64, (j * 3 + i) as f64)).collect()).collect();
    let s = payoff_surface(&tree(Owner::Power, &cells));
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(s.power[i][j], s.gas[j][i]);
        }
    }
}

fn payoffs(max: usize) -> impl Strategy<Value = Vec<Vec<(f64, f64)>>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        proptest::collection::vec(
            proptest::collection::vec((0i32..6, 0i32..6).prop_map(|(a, b)| (a as f64, b as f64)), c),
            r,
        )
    })
}

proptest! {
    #[test]
    fn backward_induction_matches_exhaustive_oracle(cells in payoffs(5), gas_leads in any::<bool>()) {
        let t = tree(if gas_leads { Owner::Gas } else { Owner::Power }, &cells);
        let r = backward_induction(&t, TieBreak::LowestIndex);
        prop_assert!(is_subgame_perfect(&t, r.leader_choice, &r.follower_best_response));
        prop_assert_eq!((r.leader_choice, r.follower_best_response), oracle_spne(&t));
    }

    #[test]
    fn constant_shift_keeps_the_equilibrium(cells in payoffs(5), c in -1e6f64..1e6, shift_gas in any::<bool>()) {
        for leader in [Owner::Power, Owner::Gas] {
            let base = backward_induction(&tree(leader, &cells), TieBreak::LowestIndex);
            let shifted: Vec<Vec<(f64, f64)>> = cells
                .iter()
                .map(|r| r.iter().map(|&(p, g)| if shift_gas { (p, g + c) } else { (p + c, g) }).collect())
                .collect();
            let moved = backward_induction(&tree(leader, &shifted), TieBreak::LowestIndex);
            prop_assert_eq!(base.leader_choice, moved.leader_choice);
            prop_assert_eq!(base.follower_best_response, moved.follower_best_response);
        }
    }

    #[test]
    fn highest_index_rule_is_also_subgame_perfect(cells in payoffs(5)) {
        let t = tree(Owner::Power, &cells);
        let r = backward_induction(&t, TieBreak::HighestIndex);
        prop_assert!(is_subgame_perfect(&t, r.leader_choice, &r.follower_best_response));
    }

    #[test]
    fn peaks_include_the_global_maximum(cells in payoffs(6)) {
        let grid: Vec<Vec<f64>> = cells.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
        let peaks = local_peaks(&grid);
        let max = grid.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, row) in grid.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x == max {
                    prop_assert!(peaks[i][j]);
                }
            }
        }
    }
}
