use std::time::Instant;

use super::simplex::{self, Basis, LpProblem, LpStatus};
use super::{MilpError, MilpModel, MilpSolution, SolveStats, SolveStatus};

pub const BRUTE_FORCE_MAX_BINARIES: usize = 20;

/// Enumerate every binary assignment, solve the remaining LP for each, and
/// keep the first best. Ground truth for small instances.
pub fn brute_force_milp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let binaries: Vec<usize> = model.binaries().into_iter().map(|v| v.0).collect();
    if binaries.len() > BRUTE_FORCE_MAX_BINARIES {
        return Err(MilpError::TooLarge { binaries: binaries.len(), max: BRUTE_FORCE_MAX_BINARIES });
    }
    let start = Instant::now();
    let lp = LpProblem::from_model(model);
    let mut stats = SolveStats::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lower = lp.col_lower.clone();
    let mut upper = lp.col_upper.clone();
    let mut basis: Option<Basis> = None;

    for mask in 0u64..(1u64 << binaries.len()) {
        let mut skip = false;
        for (bit, &j) in binaries.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            if v < lp.col_lower[j] || v > lp.col_upper[j] {
                skip = true;
            }
            lower[j] = v;
            upper[j] = v;
        }
        if skip {
            continue;
        }
        let res = simplex::solve(&lp, &lower, &upper, basis.as_ref())?;
        stats.nodes += 1;
        stats.simplex_iterations += res.iterations;
        match res.status {
            LpStatus::Unbounded => {
                stats.wall_time = start.elapsed();
                return Ok(MilpSolution::without_point(SolveStatus::Unbounded, stats));
            }
            LpStatus::Infeasible => continue,
            LpStatus::Optimal => {}
        }
        if best.as_ref().is_none_or(|(b, _)| res.objective < b - 1e-9 * b.abs().max(1.0)) {
            stats.incumbent_history.push((stats.nodes, res.objective + model.objective_offset));
            best = Some((res.objective, res.x.clone()));
        }
        basis = Some(res.basis);
    }
    stats.wall_time = start.elapsed();
    Ok(match best {
        Some((obj, x)) => MilpSolution {
            status: SolveStatus::Optimal,
            values: x,
            objective: obj + model.objective_offset,
            dual_bound: None,
            stats,
        },
        None => MilpSolution::without_point(SolveStatus::Infeasible, stats),
    })
}
