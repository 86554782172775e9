//! Exhaustive subgame-perfection oracle over every pure strategy profile.

use std::time::Duration;

use maintgame::dispatch::DispatchSolution;
use maintgame::game::{GameTree, Leaf, TreeMeta};
use maintgame::network::Owner;
use maintgame::schedule::OwnerSchedule;

pub fn leaf(power: f64, gas: f64) -> Leaf {
    Leaf {
        power_payoff: power,
        gas_payoff: gas,
        power_shed: 0.0,
        gas_shed: 0.0,
        shed_penalty: 0.0,
        production_cost: 0.0,
        nodes: 0,
        simplex_iterations: 0,
        wall_time: Duration::ZERO,
        solution: DispatchSolution::default(),
    }
}

/// Tree over `(power, gas)` payoff pairs laid out `[leader][follower]`.
pub fn tree(leader: Owner, cells: &[Vec<(f64, f64)>]) -> GameTree {
    let blank = |owner: Owner, n: usize| (0..n).map(|_| OwnerSchedule { owner, tasks: vec![] }).collect();
    GameTree {
        leader,
        leader_options: blank(leader, cells.len()),
        follower_options: blank(leader.other(), cells.first().map_or(0, Vec::len)),
        leaves: cells.iter().map(|r| r.iter().map(|&(p, g)| leaf(p, g)).collect()).collect(),
        meta: TreeMeta { segments: 0, integrality_tol: 0.0, feasibility_tol: 0.0 },
    }
}

/// True when no player gains by deviating at any decision node.
pub fn is_subgame_perfect(t: &GameTree, choice: usize, strategy: &[usize]) -> bool {
    let (lead, follow) = (t.leader, t.follower());
    for (i, &j) in strategy.iter().enumerate() {
        if (0..t.follower_options.len()).any(|d| t.payoff(follow, i, d) > t.payoff(follow, i, j)) {
            return false;
        }
    }
    let here = t.payoff(lead, choice, strategy[choice]);
    (0..t.leader_options.len()).all(|d| t.payoff(lead, d, strategy[d]) <= here)
}

/// Every subgame-perfect profile `(leader choice, follower strategy)`,
/// found by walking all `|F|^|L| * |L|` pure profiles.
pub fn all_spne(t: &GameTree) -> Vec<(usize, Vec<usize>)> {
    let (nl, nf) = (t.leader_options.len(), t.follower_options.len());
    let total = (nf as u64).pow(nl as u32);
    assert!(total <= 5_000_000, "oracle would enumerate {total} strategies");
    let mut out = Vec::new();
    let mut strategy = vec![0usize; nl];
    for code in 0..total {
        let mut c = code;
        for s in strategy.iter_mut().rev() {
            *s = (c % nf as u64) as usize;
            c /= nf as u64;
        }
        for choice in 0..nl {
            if is_subgame_perfect(t, choice, &strategy) {
                out.push((choice, strategy.clone()));
            }
        }
    }
    out
}

/// The profile selected by lowest-index tie-breaking: the lexicographically
/// smallest follower strategy, then the smallest leader choice under it.
pub fn oracle_spne(t: &GameTree) -> (usize, Vec<usize>) {
    let all = all_spne(t);
    let strategy = all.iter().map(|(_, s)| s.clone()).min().expect("a finite game has an SPNE");
    let choice = all.iter().filter(|(_, s)| *s == strategy).map(|(c, _)| *c).min().unwrap();
    (choice, strategy)
}
