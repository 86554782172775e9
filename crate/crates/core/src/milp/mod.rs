//! Exact MILP solving for the leaf dispatch models.
//!
//! [`solve_lp`] runs the bounded revised simplex on the continuous
//! relaxation, [`solve_milp`] wraps it in best-first branch-and-bound, and
//! [`brute_force_milp`] enumerates binary assignments as a ground-truth
//! oracle for small instances.

mod bnb;
mod brute;
pub mod dump;
pub mod external;
mod lu;
mod model;
mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_milp, solve_milp_with_incumbent};
pub use brute::{brute_force_milp, BRUTE_FORCE_MAX_BINARIES};
pub use dump::{export_external, import_dump};
pub use model::{Constraint, MilpModel, Sense, VarId, VarKind, Variable};

/// Integrality tolerance for binaries.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Primal feasibility tolerance for rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("model has {binaries} binaries; brute force supports at most {max}")]
    TooLarge { binaries: usize, max: usize },
    #[error("malformed dump at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("external solver: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub node_cap: Option<usize>,
    pub time_cap: Option<Duration>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub simplex_iterations: usize,
    #[serde(skip)]
    pub wall_time: Duration,
    /// (node count, objective) every time the incumbent improved.
    pub incumbent_history: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Indexed by [`VarId`]; empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Dual bound from the final basis (pure LP solves only).
    pub dual_bound: Option<f64>,
    pub stats: SolveStats,
}

impl MilpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }

    pub(crate) fn without_point(status: SolveStatus, stats: SolveStats) -> Self {
        MilpSolution {
            status,
            values: Vec::new(),
            objective: if status == SolveStatus::Unbounded { f64::NEG_INFINITY } else { f64::INFINITY },
            dual_bound: None,
            stats,
        }
    }
}

/// Solve the continuous relaxation (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = std::time::Instant::now();
    let lp = simplex::LpProblem::from_model(model);
    let res = simplex::solve(&lp, &lp.col_lower, &lp.col_upper, None)?;
    let stats = SolveStats {
        nodes: 0,
        simplex_iterations: res.iterations,
        wall_time: start.elapsed(),
        incumbent_history: Vec::new(),
    };
    Ok(match res.status {
        simplex::LpStatus::Optimal => MilpSolution {
            status: SolveStatus::Optimal,
            objective: res.objective + model.objective_offset,
            dual_bound: Some(res.dual_bound + model.objective_offset),
            values: res.x,
            stats,
        },
        simplex::LpStatus::Infeasible => MilpSolution::without_point(SolveStatus::Infeasible, stats),
        simplex::LpStatus::Unbounded => MilpSolution::without_point(SolveStatus::Unbounded, stats),
    })
}
