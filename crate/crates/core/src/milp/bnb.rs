use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{self, Basis, LpProblem, LpStatus};
use super::{MilpError, MilpModel, MilpSolution, SolveLimits, SolveStats, SolveStatus, INTEGRALITY_TOL};

struct Node {
    /// LP bound quantized by [`BoundGrid`]; equal buckets are ties.
    bucket: i64,
    bound: f64,
    depth: usize,
    id: usize,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the maximum: lowest bound bucket, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bucket.cmp(&self.bucket).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

/// Best-first branch-and-bound over the model's binaries.
pub fn solve_milp(model: &MilpModel, limits: SolveLimits) -> Result<MilpSolution, MilpError> {
    solve_milp_with_incumbent(model, limits, None)
}

/// As [`solve_milp`], seeded with a known feasible point. The seed is
/// ignored if it violates the model.
pub fn solve_milp_with_incumbent(
    model: &MilpModel,
    limits: SolveLimits,
    seed: Option<&[f64]>,
) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let lp = LpProblem::from_model(model);
    let binaries: Vec<usize> = model.binaries().into_iter().map(|v| v.0).collect();
    let mut stats = SolveStats::default();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(x) = seed {
        if x.len() == model.num_vars()
            && model.max_violation(x) <= 1e-6
            && model.max_integrality_gap(x) <= INTEGRALITY_TOL
        {
            incumbent = Some((model.objective_value(x) - model.objective_offset, x.to_vec()));
        }
    }
    if let Some((obj, _)) = &incumbent {
        stats.incumbent_history.push((0, *obj + model.objective_offset));
    }

    let mut queue = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut grid: Option<BoundGrid> = None;
    queue.push(Node {
        bucket: i64::MIN,
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: next_id,
        fixings: Vec::new(),
        basis: None,
    });
    next_id += 1;

    let mut lower = lp.col_lower.clone();
    let mut upper = lp.col_upper.clone();
    let mut limited = false;

    while let Some(node) = queue.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - prune_tol(*inc) {
                continue;
            }
        }
        let over_nodes = limits.node_cap.is_some_and(|cap| stats.nodes >= cap);
        let over_time = limits.time_cap.is_some_and(|cap| start.elapsed() >= cap);
        if over_nodes || over_time {
            limited = true;
            break;
        }

        lower.copy_from_slice(&lp.col_lower);
        upper.copy_from_slice(&lp.col_upper);
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let res = simplex::solve(&lp, &lower, &upper, node.basis.as_ref())?;
        stats.nodes += 1;
        stats.simplex_iterations += res.iterations;
        match res.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                stats.wall_time = start.elapsed();
                return Ok(MilpSolution::without_point(SolveStatus::Unbounded, stats));
            }
            LpStatus::Optimal => {}
        }
        if let Some((inc, _)) = &incumbent {
            if res.objective >= inc - prune_tol(*inc) {
                continue;
            }
        }

        let grid = *grid.get_or_insert_with(|| BoundGrid::new(res.objective));

        // Most fractional binary, ties by lowest id.
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let frac = (res.x[j] - res.x[j].floor()).min(res.x[j].ceil() - res.x[j]);
            if frac > INTEGRALITY_TOL && branch.is_none_or(|(_, bf)| frac > bf + 1e-12) {
                branch = Some((j, frac));
            }
        }
        let Some((j, _)) = branch else {
            stats.incumbent_history.push((stats.nodes, res.objective + model.objective_offset));
            incumbent = Some((res.objective, res.x));
            continue;
        };

        for v in [1.0, 0.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            queue.push(Node {
                bucket: grid.bucket(res.objective),
                bound: res.objective,
                depth: node.depth + 1,
                id: next_id,
                fixings,
                basis: Some(res.basis.clone()),
            });
            next_id += 1;
        }
    }

    stats.wall_time = start.elapsed();
    let status = if limited {
        SolveStatus::LimitReached
    } else if incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    Ok(match incumbent {
        Some((obj, x)) => {
            MilpSolution { status, values: x, objective: obj + model.objective_offset, dual_bound: None, stats }
        }
        None => MilpSolution::without_point(status, stats),
    })
}

/// Bounds closer than the LP tolerances are not meaningfully ordered, so
/// the queue compares them on a grid sized from the root bound.
#[derive(Clone, Copy)]
struct BoundGrid {
    origin: f64,
    step: f64,
}

impl BoundGrid {
    /// Centred on the root bound so that its LP noise never straddles a cell edge.
    fn new(root: f64) -> Self {
        BoundGrid { origin: root, step: 1e-7 * root.abs().max(1.0) }
    }

    fn bucket(self, bound: f64) -> i64 {
        ((bound - self.origin) / self.step).round() as i64
    }
}

fn prune_tol(incumbent: f64) -> f64 {
    1e-9 * incumbent.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    #[test]
    fn picks_one_of_two_exclusive_binaries() {
        let mut m = MilpModel::new("pair");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.add_constraint("c", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        m.objective = vec![(a, -1.0), (b, -1.0)];
        let s = solve_milp(&m, SolveLimits::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!((s.value(a) + s.value(b) - 1.0).abs() < 1e-9);
        assert!(s.value(a).round() != s.value(b).round());
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 4 -> a = c = 1, value 8
        let mut m = MilpModel::new("knap");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let c = m.add_binary("c");
        m.add_constraint("w", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 4.0);
        m.objective = vec![(a, -5.0), (b, -4.0), (c, -3.0)];
        let s = solve_milp(&m, SolveLimits::default()).unwrap();
        assert!((s.objective + 8.0).abs() < 1e-9);
        let hist = &s.stats.incumbent_history;
        assert!(hist.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn node_cap_reports_limit() {
        let mut m = MilpModel::new("frac");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.add_constraint("c", vec![(a, 2.0), (b, 2.0)], Sense::Le, 3.0);
        m.objective = vec![(a, -1.0), (b, -1.0)];
        let limits = SolveLimits { node_cap: Some(1), time_cap: None };
        let s = solve_milp(&m, limits).unwrap();
        assert_eq!(s.status, SolveStatus::LimitReached);
        assert_eq!(s.stats.nodes, 1);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut m = MilpModel::new("inf");
        let a = m.add_binary("a");
        m.add_constraint("lo", vec![(a, 1.0)], Sense::Ge, 0.3);
        m.add_constraint("hi", vec![(a, 1.0)], Sense::Le, 0.7);
        let s = solve_milp(&m, SolveLimits::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(!s.has_point());
    }
}
