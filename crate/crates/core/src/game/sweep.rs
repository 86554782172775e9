//! Parameter sweeps over maintenance duration and segment count.

use serde::{Deserialize, Serialize};

use super::{backward_induction, evaluate_leaves, EvalConfig, GameError, GameTree, LeafMatrix, TieBreak};
use crate::network::{CaseData, Owner};
use crate::pwl::approx_error;
use crate::report::{csv, fmt_float};
use crate::schedule::owner_options;

/// Reference resolution for segment-sweep relative errors.
pub const REFERENCE_SEGMENTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpneSummary {
    pub leader_choice: usize,
    pub follower_choice: usize,
    pub power_payoff: f64,
    pub gas_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderPayoffs {
    pub power_leads: SpneSummary,
    pub gas_leads: SpneSummary,
}

impl OrderPayoffs {
    pub fn from_matrix(m: &LeafMatrix) -> Self {
        let summary = |leader: Owner| {
            let r = backward_induction(&GameTree::from_matrix(m, leader), TieBreak::default());
            SpneSummary {
                leader_choice: r.leader_choice,
                follower_choice: r.follower_choice(),
                power_payoff: r.power_payoff,
                gas_payoff: r.gas_payoff,
            }
        };
        OrderPayoffs { power_leads: summary(Owner::Power), gas_leads: summary(Owner::Gas) }
    }

    /// (power, gas) payoffs of the power-led then gas-led equilibrium.
    pub fn values(&self) -> [f64; 4] {
        [
            self.power_leads.power_payoff,
            self.power_leads.gas_payoff,
            self.gas_leads.power_payoff,
            self.gas_leads.gas_payoff,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationRow {
    pub duration: usize,
    pub payoffs: Option<OrderPayoffs>,
    /// Why the row could not be evaluated.
    pub error: Option<String>,
}

/// Re-run the game with the maintenance on `asset` set to each duration.
pub fn run_duration_sweep(
    case: &CaseData,
    asset: &str,
    durations: &[usize],
    cfg: &EvalConfig,
) -> Result<Vec<DurationRow>, GameError> {
    let task = case
        .maintenance
        .iter()
        .position(|m| m.asset_id == asset)
        .ok_or_else(|| GameError::InvalidArgument(format!("no maintenance task on '{asset}'")))?;
    if durations.is_empty() {
        return Err(GameError::InvalidArgument("empty duration list".into()));
    }
    let mut rows = Vec::with_capacity(durations.len());
    for &d in durations {
        let mut c = case.clone();
        c.maintenance[task].duration = d;
        let options = owner_options(&c, Owner::Power).and_then(|p| Ok((p, owner_options(&c, Owner::Gas)?)));
        let (p, g) = match options {
            Ok(x) => x,
            Err(e) => {
                rows.push(DurationRow { duration: d, payoffs: None, error: Some(e.to_string()) });
                continue;
            }
        };
        let m = evaluate_leaves(&c, &p, &g, cfg)?;
        rows.push(DurationRow { duration: d, payoffs: Some(OrderPayoffs::from_matrix(&m)), error: None });
    }
    Ok(rows)
}

const ORDER_COLUMNS: [&str; 4] =
    ["power_leads_power_payoff", "power_leads_gas_payoff", "gas_leads_power_payoff", "gas_leads_gas_payoff"];

fn payoff_cells(p: Option<&OrderPayoffs>) -> Vec<String> {
    match p {
        Some(p) => p.values().iter().map(|&x| fmt_float(x)).collect(),
        None => vec![String::new(); 4],
    }
}

pub fn duration_csv(rows: &[DurationRow]) -> String {
    let mut header = vec!["duration"];
    header.extend(ORDER_COLUMNS);
    header.push("error");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.duration.to_string()];
            cells.extend(payoff_cells(r.payoffs.as_ref()));
            cells.push(r.error.clone().unwrap_or_default());
            cells
        })
        .collect();
    csv(&header, &body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub k: usize,
    /// Largest chord error over all pipelines.
    pub approx_error: f64,
    pub payoffs: OrderPayoffs,
    /// Largest relative deviation of the four equilibrium payoffs from the
    /// reference row; `None` when there is no reference.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSweep {
    /// The largest `k`, if it reaches [`REFERENCE_SEGMENTS`].
    pub reference_k: Option<usize>,
    pub rows: Vec<SegmentRow>,
}

fn relative(x: f64, reference: f64) -> f64 {
    let diff = (x - reference).abs();
    if reference == 0.0 {
        diff
    } else {
        diff / reference.abs()
    }
}

/// Re-run the game at each segment count and compare with the finest.
pub fn run_segment_sweep(case: &CaseData, ks: &[usize], cfg: &EvalConfig) -> Result<SegmentSweep, GameError> {
    if ks.is_empty() {
        return Err(GameError::InvalidArgument("empty segment list".into()));
    }
    if let Some(&k) = ks.iter().find(|&&k| k < 1) {
        return Err(GameError::InvalidArgument(format!("segment count must be at least 1, got {k}")));
    }
    let p = owner_options(case, Owner::Power)?;
    let g = owner_options(case, Owner::Gas)?;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let m = evaluate_leaves(case, &p, &g, &EvalConfig { segments: k, ..*cfg })?;
        let err = super::pipeline_segments(case, k)?.iter().map(approx_error).fold(0.0, f64::max);
        rows.push(SegmentRow { k, approx_error: err, payoffs: OrderPayoffs::from_matrix(&m), relative_error: None });
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let reference_k = (max_k >= REFERENCE_SEGMENTS).then_some(max_k);
    if let Some(rk) = reference_k {
        let reference = rows.iter().find(|r| r.k == rk).map(|r| r.payoffs.values()).unwrap_or_default();
        for r in &mut rows {
            let v = r.payoffs.values();
            r.relative_error = Some((0..4).map(|i| relative(v[i], reference[i])).fold(0.0, f64::max));
        }
    }
    Ok(SegmentSweep { reference_k, rows })
}

pub fn segment_csv(s: &SegmentSweep) -> String {
    let mut header = vec!["k", "approx_error"];
    header.extend(ORDER_COLUMNS);
    header.push("relative_error");
    let body: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.k.to_string(), fmt_float(r.approx_error)];
            cells.extend(payoff_cells(Some(&r.payoffs)));
            cells.push(r.relative_error.map_or_else(|| "undefined".to_string(), fmt_float));
            cells
        })
        .collect();
    csv(&header, &body)
}
