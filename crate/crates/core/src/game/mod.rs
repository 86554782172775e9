//! The two-stage maintenance game: leaf evaluation, tree assembly and
//! backward induction.
//!
//! Leaf payoffs depend only on the joint schedule, so leaves are evaluated
//! once into a [`LeafMatrix`] indexed `[power option][gas option]` and each
//! move order is a view of it.

mod sweep;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sweep::{
    duration_csv, run_duration_sweep, run_segment_sweep, segment_csv, DurationRow, OrderPayoffs, SegmentRow,
    SegmentSweep, SpneSummary, REFERENCE_SEGMENTS,
};

use crate::dispatch::{
    compute_gas_payoff, compute_power_payoff, solve_dispatch, DispatchError, DispatchOptions, DispatchSolution,
};
use crate::milp::{FEASIBILITY_TOL, INTEGRALITY_TOL};
use crate::network::{derive_big_m, BigMSet, CaseData, CaseError, Owner};
use crate::pwl::{build_segments, PwlError, PwlSegmentSet, DEFAULT_SEGMENTS};
use crate::schedule::{joint_indicator, owner_options, IndicatorMatrix, OwnerSchedule, ScheduleError};

/// Which move orders to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leader {
    Power,
    Gas,
    Both,
}

impl Leader {
    pub fn orders(self) -> Vec<Owner> {
        match self {
            Leader::Power => vec![Owner::Power],
            Leader::Gas => vec![Owner::Gas],
            Leader::Both => vec![Owner::Power, Owner::Gas],
        }
    }
}

impl std::str::FromStr for Leader {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "power" => Ok(Leader::Power),
            "gas" => Ok(Leader::Gas),
            "both" => Ok(Leader::Both),
            other => Err(format!("unknown leader '{other}' (expected power, gas or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub segments: usize,
    /// Multiplier on every derived big-M value.
    pub bigm_scale: f64,
    pub dispatch: DispatchOptions,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { segments: DEFAULT_SEGMENTS, bigm_scale: 1.0, dispatch: DispatchOptions::default(), workers: 1 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error("leaf (power option {power}, gas option {gas}): {source}")]
    Leaf {
        power: usize,
        gas: usize,
        #[source]
        source: DispatchError,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl GameError {
    /// True when a leaf failed because a node or time cap was hit.
    pub fn is_limit(&self) -> bool {
        matches!(self, GameError::Leaf { source: DispatchError::Limit, .. })
    }
}

/// One evaluated joint schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub power_payoff: f64,
    pub gas_payoff: f64,
    /// Total curtailed power (MW summed over buses and periods).
    pub power_shed: f64,
    /// Total curtailed gas.
    pub gas_shed: f64,
    pub shed_penalty: f64,
    pub production_cost: f64,
    pub nodes: usize,
    pub simplex_iterations: usize,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub solution: DispatchSolution,
}

impl Leaf {
    pub fn payoff(&self, owner: Owner) -> f64 {
        match owner {
            Owner::Power => self.power_payoff,
            Owner::Gas => self.gas_payoff,
        }
    }
}

/// Evaluated leaves in canonical orientation `[power option][gas option]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafMatrix {
    pub power_options: Vec<OwnerSchedule>,
    pub gas_options: Vec<OwnerSchedule>,
    pub leaves: Vec<Vec<Leaf>>,
    pub segments: usize,
    pub bigm: BigMSet,
}

impl LeafMatrix {
    pub fn indicator(&self, case: &CaseData, power: usize, gas: usize) -> IndicatorMatrix {
        joint_indicator(case, &[&self.power_options[power], &self.gas_options[gas]])
    }

    /// Payoffs recomputed from the stored dispatches with `case`'s price and
    /// maintenance data and the given conventions. The dispatch itself is
    /// reused, so `case` must share the network of the evaluated case.
    pub fn reprice(&self, case: &CaseData, opts: &DispatchOptions) -> LeafMatrix {
        let mut out = self.clone();
        for (i, row) in out.leaves.iter_mut().enumerate() {
            for (j, leaf) in row.iter_mut().enumerate() {
                let v = joint_indicator(case, &[&self.power_options[i], &self.gas_options[j]]);
                leaf.power_payoff = compute_power_payoff(case, &v, &leaf.solution, opts.maintenance_cost);
                leaf.gas_payoff =
                    compute_gas_payoff(case, &v, &leaf.solution, opts.maintenance_cost, opts.storage_revenue);
            }
        }
        out
    }

    pub fn total_wall_time(&self) -> Duration {
        self.leaves.iter().flatten().map(|l| l.wall_time).sum()
    }
}

/// Segment sets for every pipeline at `k` segments.
pub fn pipeline_segments(case: &CaseData, k: usize) -> Result<Vec<PwlSegmentSet>, PwlError> {
    case.gas.pipelines.iter().map(|p| build_segments(p.flow_cap, k)).collect()
}

/// Evaluate one joint schedule.
pub fn evaluate_leaf(
    case: &CaseData,
    v: &IndicatorMatrix,
    pwl: &[PwlSegmentSet],
    bigm: &BigMSet,
    opts: &DispatchOptions,
) -> Result<Leaf, DispatchError> {
    let start = Instant::now();
    let d = solve_dispatch(case, v, pwl, bigm, opts)?;
    let sol = d.solution;
    let total = |m: &Vec<Vec<f64>>| m.iter().flatten().sum::<f64>();
    Ok(Leaf {
        power_payoff: compute_power_payoff(case, v, &sol, opts.maintenance_cost),
        gas_payoff: compute_gas_payoff(case, v, &sol, opts.maintenance_cost, opts.storage_revenue),
        power_shed: total(&sol.power_shed),
        gas_shed: total(&sol.gas_shed),
        shed_penalty: sol.objective,
        production_cost: sol.production_cost,
        nodes: d.shed_stats.nodes + d.cost_stats.nodes,
        simplex_iterations: d.shed_stats.simplex_iterations + d.cost_stats.simplex_iterations,
        wall_time: start.elapsed(),
        solution: sol,
    })
}

/// Solve every joint schedule, using up to `cfg.workers` threads. Results
/// are placed by index; the first failing leaf in row-major order is
/// reported.
pub fn evaluate_leaves(
    case: &CaseData,
    power_options: &[OwnerSchedule],
    gas_options: &[OwnerSchedule],
    cfg: &EvalConfig,
) -> Result<LeafMatrix, GameError> {
    if power_options.is_empty() || gas_options.is_empty() {
        return Err(GameError::InvalidArgument("both owners need at least one option".into()));
    }
    if cfg.workers < 1 {
        return Err(GameError::InvalidArgument("worker count must be at least 1".into()));
    }
    let pwl = pipeline_segments(case, cfg.segments)?;
    let bigm = derive_big_m(case)?.scaled(cfg.bigm_scale);
    let (np, ng) = (power_options.len(), gas_options.len());

    let run = |idx: usize| {
        let (i, j) = (idx / ng, idx % ng);
        let v = joint_indicator(case, &[&power_options[i], &gas_options[j]]);
        let leaf = evaluate_leaf(case, &v, &pwl, &bigm, &cfg.dispatch);
        if let Ok(l) = &leaf {
            log::debug!("leaf ({i},{j}): {} nodes in {:.3}s", l.nodes, l.wall_time.as_secs_f64());
        }
        leaf
    };
    let results: Vec<Result<Leaf, DispatchError>> = if cfg.workers == 1 {
        (0..np * ng).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| GameError::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..np * ng).into_par_iter().map(run).collect())
    };

    let mut leaves: Vec<Vec<Leaf>> = (0..np).map(|_| Vec::with_capacity(ng)).collect();
    for (idx, r) in results.into_iter().enumerate() {
        let (i, j) = (idx / ng, idx % ng);
        leaves[i].push(r.map_err(|source| GameError::Leaf { power: i, gas: j, source })?);
    }
    Ok(LeafMatrix {
        power_options: power_options.to_vec(),
        gas_options: gas_options.to_vec(),
        leaves,
        segments: cfg.segments,
        bigm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeMeta {
    pub segments: usize,
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
}

/// A move order over a leaf matrix; `leaves[i][j]` is leader option `i`
/// against follower option `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTree {
    pub leader: Owner,
    pub leader_options: Vec<OwnerSchedule>,
    pub follower_options: Vec<OwnerSchedule>,
    pub leaves: Vec<Vec<Leaf>>,
    pub meta: TreeMeta,
}

impl GameTree {
    pub fn from_matrix(m: &LeafMatrix, leader: Owner) -> GameTree {
        let meta =
            TreeMeta { segments: m.segments, integrality_tol: INTEGRALITY_TOL, feasibility_tol: FEASIBILITY_TOL };
        match leader {
            Owner::Power => GameTree {
                leader,
                leader_options: m.power_options.clone(),
                follower_options: m.gas_options.clone(),
                leaves: m.leaves.clone(),
                meta,
            },
            Owner::Gas => GameTree {
                leader,
                leader_options: m.gas_options.clone(),
                follower_options: m.power_options.clone(),
                leaves: transpose(&m.leaves),
                meta,
            },
        }
    }

    pub fn follower(&self) -> Owner {
        self.leader.other()
    }

    pub fn payoff(&self, owner: Owner, i: usize, j: usize) -> f64 {
        self.leaves[i][j].payoff(owner)
    }

    /// Leaf `(i, j)` as (power option, gas option).
    pub fn canonical(&self, i: usize, j: usize) -> (usize, usize) {
        match self.leader {
            Owner::Power => (i, j),
            Owner::Gas => (j, i),
        }
    }

    /// The same leaves seen from the other move order.
    pub fn transposed(&self) -> GameTree {
        GameTree {
            leader: self.follower(),
            leader_options: self.follower_options.clone(),
            follower_options: self.leader_options.clone(),
            leaves: transpose(&self.leaves),
            meta: self.meta,
        }
    }
}

fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Evaluate all leaves and orient them for `leader`.
pub fn build_game_tree(
    case: &CaseData,
    leader: Owner,
    power_options: &[OwnerSchedule],
    gas_options: &[OwnerSchedule],
    cfg: &EvalConfig,
) -> Result<GameTree, GameError> {
    let m = evaluate_leaves(case, power_options, gas_options, cfg)?;
    Ok(GameTree::from_matrix(&m, leader))
}

/// Enumerate both owners' options from the case and evaluate all leaves.
pub fn evaluate_case(case: &CaseData, cfg: &EvalConfig) -> Result<LeafMatrix, GameError> {
    let p = owner_options(case, Owner::Power)?;
    let g = owner_options(case, Owner::Gas)?;
    evaluate_leaves(case, &p, &g, cfg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

fn argmax(values: impl Iterator<Item = f64>, tie: TieBreak) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        let take = match best {
            None => true,
            Some((_, b)) => match tie {
                TieBreak::LowestIndex => v > b,
                TieBreak::HighestIndex => v >= b,
            },
        };
        if take {
            best = Some((i, v));
        }
    }
    best.map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpneResult {
    pub leader: Owner,
    pub leader_choice: usize,
    /// Follower's best response to every leader option.
    pub follower_best_response: Vec<usize>,
    pub power_payoff: f64,
    pub gas_payoff: f64,
    /// Equilibrium schedules, leader first.
    pub path: [String; 2],
}

impl SpneResult {
    pub fn follower_choice(&self) -> usize {
        self.follower_best_response[self.leader_choice]
    }
}

pub fn best_response(tree: &GameTree, i: usize, tie: TieBreak) -> usize {
    let f = tree.follower();
    argmax(tree.leaves[i].iter().map(|l| l.payoff(f)), tie)
}

pub fn backward_induction(tree: &GameTree, tie: TieBreak) -> SpneResult {
    let br: Vec<usize> = (0..tree.leaves.len()).map(|i| best_response(tree, i, tie)).collect();
    let choice = argmax(br.iter().enumerate().map(|(i, &j)| tree.payoff(tree.leader, i, j)), tie);
    let leaf = &tree.leaves[choice][br[choice]];
    SpneResult {
        leader: tree.leader,
        leader_choice: choice,
        power_payoff: leaf.power_payoff,
        gas_payoff: leaf.gas_payoff,
        path: [tree.leader_options[choice].label(), tree.follower_options[br[choice]].label()],
        follower_best_response: br,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpneMarker {
    pub leader: Owner,
    /// In the surface's own (leader, follower) coordinates.
    pub leader_idx: usize,
    pub follower_idx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSurface {
    pub leader: Owner,
    /// `[leader option][follower option]`.
    pub power: Vec<Vec<f64>>,
    pub gas: Vec<Vec<f64>>,
    /// Equilibria of both move orders.
    pub spne: Vec<SpneMarker>,
}

pub fn payoff_surface(tree: &GameTree) -> PayoffSurface {
    let grid = |o: Owner| tree.leaves.iter().map(|r| r.iter().map(|l| l.payoff(o)).collect()).collect();
    let own = backward_induction(tree, TieBreak::default());
    let other = backward_induction(&tree.transposed(), TieBreak::default());
    PayoffSurface {
        leader: tree.leader,
        power: grid(Owner::Power),
        gas: grid(Owner::Gas),
        spne: vec![
            SpneMarker { leader: own.leader, leader_idx: own.leader_choice, follower_idx: own.follower_choice() },
            // The other order's (leader, follower) is this surface's (follower, leader).
            SpneMarker { leader: other.leader, leader_idx: other.follower_choice(), follower_idx: other.leader_choice },
        ],
    }
}

/// `leader_idx,follower_idx,power_payoff,gas_payoff`, one row per leaf.
pub fn surface_csv(s: &PayoffSurface) -> String {
    use crate::report::fmt_float;
    let mut rows = Vec::new();
    for (i, row) in s.power.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            rows.push(vec![i.to_string(), j.to_string(), fmt_float(p), fmt_float(s.gas[i][j])]);
        }
    }
    crate::report::csv(&["leader_idx", "follower_idx", "power_payoff", "gas_payoff"], &rows)
}

/// Cells no smaller than any of their four grid neighbours.
pub fn local_peaks(m: &[Vec<f64>]) -> Vec<Vec<bool>> {
    let rows = m.len();
    (0..rows)
        .map(|i| {
            let cols = m[i].len();
            (0..cols)
                .map(|j| {
                    let x = m[i][j];
                    let mut nb = Vec::with_capacity(4);
                    if i > 0 {
                        nb.push(m[i - 1][j]);
                    }
                    if i + 1 < rows {
                        nb.push(m[i + 1][j]);
                    }
                    if j > 0 {
                        nb.push(m[i][j - 1]);
                    }
                    if j + 1 < cols {
                        nb.push(m[i][j + 1]);
                    }
                    nb.into_iter().all(|y| x >= y)
                })
                .collect()
        })
        .collect()
}

/// Whether each SPNE sits on a local peak of the (power, gas) surfaces.
pub fn spne_local_peaks(s: &PayoffSurface) -> Vec<(bool, bool)> {
    let (pp, gp) = (local_peaks(&s.power), local_peaks(&s.gas));
    s.spne.iter().map(|m| (pp[m.leader_idx][m.follower_idx], gp[m.leader_idx][m.follower_idx])).collect()
}
