//! Lower-level ISO dispatch: model assembly, the two-stage solve, solution
//! extraction and owner payoffs.
//!
//! The ISO objective is the shed penalty alone. Many dispatches usually
//! reach the same penalty, and the owners' revenues differ between them, so
//! a second solve minimizes operating cost with the penalty held at its
//! optimum. Payoffs are evaluated on that second solution.

mod build;

use serde::{Deserialize, Serialize};

pub use build::{build_lower_model, LowerModel, VarIndex};

use crate::milp::{self, MilpError, MilpModel, MilpSolution, Sense, SolveLimits, SolveStats, SolveStatus};
use crate::network::{AssetKind, BigMSet, CaseData};
use crate::pwl::PwlSegmentSet;
use crate::schedule::IndicatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageRevenue {
    /// `C_s` on period-wise withdrawal.
    Withdrawal,
    /// `C_s` on inventory held each period.
    Inventory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceCost {
    /// `C^M` charged for each period the asset is out of service.
    OutOfService,
    /// `C^M` multiplied by the in-service indicator.
    InService,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchOptions {
    /// Gas balance consumes `EF * fuel` instead of `fuel`.
    pub literal_coupling: bool,
    pub storage_revenue: StorageRevenue,
    pub maintenance_cost: MaintenanceCost,
    pub limits: SolveLimits,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        DispatchOptions {
            literal_coupling: false,
            storage_revenue: StorageRevenue::Withdrawal,
            maintenance_cost: MaintenanceCost::OutOfService,
            limits: SolveLimits::default(),
        }
    }
}

impl DispatchOptions {
    /// Literal coupling with storage revenue on held inventory.
    pub fn literal_variant(self) -> Self {
        DispatchOptions { literal_coupling: true, storage_revenue: StorageRevenue::Inventory, ..self }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DispatchError {
    #[error("model error: {0}")]
    Model(String),
    #[error("solver returned {0:?}")]
    Status(SolveStatus),
    #[error("solver limit reached")]
    Limit,
    #[error(transparent)]
    Solver(#[from] MilpError),
}

/// Every dispatch quantity, `[entity][period - 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub gen_output: Vec<Vec<f64>>,
    /// Commitment: the indicator for maintained units, the UC binary otherwise.
    pub commitment: Vec<Vec<f64>>,
    /// Zero for maintained units.
    pub startup: Vec<Vec<f64>>,
    pub fuel: Vec<Vec<f64>>,
    pub line_flow: Vec<Vec<f64>>,
    pub angle: Vec<Vec<f64>>,
    pub power_shed: Vec<Vec<f64>>,
    pub well_output: Vec<Vec<f64>>,
    pub well_on: Vec<Vec<f64>>,
    pub inventory: Vec<Vec<f64>>,
    pub withdrawal: Vec<Vec<f64>>,
    pub pipe_flow: Vec<Vec<f64>>,
    pub segment_flow: Vec<Vec<Vec<f64>>>,
    pub segment_on: Vec<Vec<Vec<f64>>>,
    pub sq_pressure: Vec<Vec<f64>>,
    pub gas_shed: Vec<Vec<f64>>,
    /// Proven optimal lower-level objective (shed penalty), $.
    pub objective: f64,
    /// Operating cost of the selected dispatch, $.
    pub production_cost: f64,
}

/// Read the domain quantities out of a raw solution.
pub fn extract_solution(
    lower: &LowerModel,
    v: &IndicatorMatrix,
    raw: &MilpSolution,
) -> Result<DispatchSolution, DispatchError> {
    if raw.status != SolveStatus::Optimal {
        return Err(DispatchError::Status(raw.status));
    }
    let x = &raw.values;
    let ix = &lower.index;
    let grid = |m: &Vec<Vec<milp::VarId>>| -> Vec<Vec<f64>> {
        m.iter().map(|r| r.iter().map(|id| x[id.0]).collect()).collect()
    };
    let cube = |m: &Vec<Vec<Vec<milp::VarId>>>| -> Vec<Vec<Vec<f64>>> {
        m.iter().map(|r| r.iter().map(|c| c.iter().map(|id| x[id.0]).collect()).collect()).collect()
    };
    let t_len = ix.gen_output.first().map_or(v.v_line.first().map_or(0, Vec::len), Vec::len);
    let commitment = ix
        .commit
        .iter()
        .enumerate()
        .map(|(u, c)| match c {
            Some(ids) => ids.iter().map(|id| x[id.0]).collect(),
            None => v.v_gen[u].iter().map(|&b| b as f64).collect(),
        })
        .collect();
    let opt_grid = |m: &Vec<Option<Vec<milp::VarId>>>| -> Vec<Vec<f64>> {
        m.iter()
            .map(|c| match c {
                Some(ids) => ids.iter().map(|id| x[id.0]).collect(),
                None => vec![0.0; t_len],
            })
            .collect()
    };
    Ok(DispatchSolution {
        gen_output: grid(&ix.gen_output),
        commitment,
        startup: opt_grid(&ix.startup),
        fuel: opt_grid(&ix.fuel),
        line_flow: grid(&ix.line_flow),
        angle: grid(&ix.angle),
        power_shed: grid(&ix.power_shed),
        well_output: grid(&ix.well_output),
        well_on: grid(&ix.well_on),
        inventory: grid(&ix.inventory),
        withdrawal: grid(&ix.withdrawal),
        pipe_flow: grid(&ix.pipe_flow),
        segment_flow: cube(&ix.segment_flow),
        segment_on: cube(&ix.segment_on),
        sq_pressure: grid(&ix.sq_pressure),
        gas_shed: grid(&ix.gas_shed),
        objective: lower.model.objective_value(x),
        production_cost: lower.production_offset
            + lower.production_cost.iter().map(|&(id, c)| c * x[id.0]).sum::<f64>(),
    })
}

fn maintenance_charge(case: &CaseData, v: &IndicatorMatrix, kinds: &[AssetKind], conv: MaintenanceCost) -> f64 {
    let mut total = 0.0;
    for task in case.maintenance.iter().filter(|m| kinds.contains(&m.kind)) {
        let row = &v.rows(task.kind)[task.asset];
        for (t, &on) in row.iter().enumerate() {
            let factor = match conv {
                MaintenanceCost::OutOfService => 1.0 - on as f64,
                MaintenanceCost::InService => on as f64,
            };
            total += task.cost_per_period[t] * factor;
        }
    }
    total
}

/// Power owner revenue: energy sales less maintenance, operating and shed cost.
pub fn compute_power_payoff(
    case: &CaseData,
    v: &IndicatorMatrix,
    sol: &DispatchSolution,
    conv: MaintenanceCost,
) -> f64 {
    let p = &case.power;
    let mut total = 0.0;
    for (ui, u) in p.generators.iter().enumerate() {
        for t in 0..case.periods() {
            let out = sol.gen_output[ui][t];
            total += u.energy_price[t] * out;
            total -= u.fixed_cost * sol.commitment[ui][t] + u.linear_cost * out;
            if u.maintenance.is_none() {
                total -= u.startup_cost * sol.startup[ui][t];
            }
        }
    }
    total -= maintenance_charge(case, v, &[AssetKind::Line, AssetKind::Generator], conv);
    for (bi, row) in p.shed_cost.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            total -= c * sol.power_shed[bi][t];
        }
    }
    total
}

/// Gas owner revenue: well and storage sales less maintenance and shed cost.
pub fn compute_gas_payoff(
    case: &CaseData,
    v: &IndicatorMatrix,
    sol: &DispatchSolution,
    conv: MaintenanceCost,
    storage: StorageRevenue,
) -> f64 {
    let g = &case.gas;
    let mut total = 0.0;
    for (wi, w) in g.wells.iter().enumerate() {
        for t in 0..case.periods() {
            total += w.price[t] * sol.well_output[wi][t];
        }
    }
    for (si, s) in g.storages.iter().enumerate() {
        for t in 0..case.periods() {
            let q = match storage {
                StorageRevenue::Withdrawal => {
                    let prev = if t == 0 { s.initial_inventory } else { sol.inventory[si][t - 1] };
                    (prev - sol.inventory[si][t]).max(0.0)
                }
                StorageRevenue::Inventory => sol.inventory[si][t],
            };
            total += s.price[t] * q;
        }
    }
    total -= maintenance_charge(case, v, &[AssetKind::Pipeline], conv);
    for (ni, row) in g.shed_cost.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            total -= c * sol.gas_shed[ni][t];
        }
    }
    total
}

/// Outcome of one leaf evaluation.
#[derive(Debug, Clone)]
pub struct LeafDispatch {
    pub lower: LowerModel,
    /// Final (operating-cost) stage; `values` index `lower.model`.
    pub raw: MilpSolution,
    pub solution: DispatchSolution,
    pub shed_stats: SolveStats,
    pub cost_stats: SolveStats,
}

/// Stage two: same feasible set, shed penalty capped at its optimum,
/// operating cost as objective.
fn cost_stage_model(lower: &LowerModel, shed_opt: f64) -> MilpModel {
    let mut m = lower.model.clone();
    let tol = 1e-9 * shed_opt.abs().max(1.0);
    let shed_terms = std::mem::take(&mut m.objective);
    m.add_constraint("shed_optimal", shed_terms, Sense::Le, shed_opt - m.objective_offset + tol);
    m.objective = lower.production_cost.clone();
    m.objective_offset = lower.production_offset;
    m
}

/// Build and solve the leaf model for one joint indicator.
pub fn solve_dispatch(
    case: &CaseData,
    v: &IndicatorMatrix,
    pwl: &[PwlSegmentSet],
    bigm: &BigMSet,
    opts: &DispatchOptions,
) -> Result<LeafDispatch, DispatchError> {
    let lower = build_lower_model(case, v, pwl, bigm, opts)?;
    let first = milp::solve_milp(&lower.model, opts.limits)?;
    check_status(first.status)?;
    let shed_opt = first.objective;

    let stage2 = cost_stage_model(&lower, shed_opt);
    let second = milp::solve_milp_with_incumbent(&stage2, opts.limits, Some(&first.values))?;
    check_status(second.status)?;

    let mut raw = second;
    let mut solution = extract_solution(&lower, v, &raw)?;
    // The selected dispatch may exceed this by the cap tolerance.
    solution.objective = shed_opt;
    raw.objective = solution.production_cost;
    let cost_stats = raw.stats.clone();
    Ok(LeafDispatch { lower, raw, solution, shed_stats: first.stats, cost_stats })
}

fn check_status(s: SolveStatus) -> Result<(), DispatchError> {
    match s {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::LimitReached => Err(DispatchError::Limit),
        other => Err(DispatchError::Status(other)),
    }
}
