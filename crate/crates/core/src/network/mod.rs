//! Coupled power / gas network description.
//!
//! A [`CaseData`] is immutable once loaded. Cross references (line
//! endpoints, generator buses, gas links, maintenance targets) are stored as
//! indices into the owning lists; string ids are kept for reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod io;

use serde::{Deserialize, Serialize};

pub use io::{load_case, parse_case, to_json_string, write_case};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Power,
    Gas,
}

impl Owner {
    pub fn other(self) -> Owner {
        match self {
            Owner::Power => Owner::Gas,
            Owner::Gas => Owner::Power,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Owner::Power => "power",
            Owner::Gas => "gas",
        }
    }
}

impl std::fmt::Display for Owner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Line,
    Generator,
    Pipeline,
}

impl AssetKind {
    pub fn owner(self) -> Owner {
        match self {
            AssetKind::Line | AssetKind::Generator => Owner::Power,
            AssetKind::Pipeline => Owner::Gas,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub num_periods: usize,
    pub period_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub angle_min: f64,
    pub angle_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from_bus: usize,
    pub to_bus: usize,
    pub susceptance: f64,
    pub capacity: f64,
    /// Index into [`CaseData::maintenance`].
    pub maintenance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasLink {
    pub node: usize,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub min_on: usize,
    pub min_off: usize,
    pub fixed_cost: f64,
    pub linear_cost: f64,
    pub startup_cost: f64,
    /// Per period.
    pub energy_price: Vec<f64>,
    pub gas_link: Option<GasLink>,
    pub maintenance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    /// [bus][period], MW.
    pub load: Vec<Vec<f64>>,
    /// [bus][period], $/MW.
    pub shed_cost: Vec<Vec<f64>>,
    pub angle_diff_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasNode {
    pub id: String,
    pub sq_pressure_min: f64,
    pub sq_pressure_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub id: String,
    pub from_node: usize,
    pub to_node: usize,
    pub weymouth_c: f64,
    pub flow_cap: f64,
    /// Compression factor.
    pub compressor: Option<f64>,
    pub maintenance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Well {
    pub id: String,
    pub node: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub min_on: usize,
    pub min_off: usize,
    pub price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Storage {
    pub id: String,
    pub node: usize,
    pub inv_min: f64,
    pub inv_max: f64,
    pub rate_out_max: f64,
    pub rate_in_max: f64,
    pub initial_inventory: f64,
    pub price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasNetwork {
    pub nodes: Vec<GasNode>,
    pub pipelines: Vec<Pipeline>,
    pub wells: Vec<Well>,
    pub storages: Vec<Storage>,
    /// [node][period], non gas-fired demand.
    pub load: Vec<Vec<f64>>,
    pub shed_cost: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceTask {
    pub kind: AssetKind,
    /// Index into the list for `kind`.
    pub asset: usize,
    pub asset_id: String,
    pub duration: usize,
    /// Per period.
    pub cost_per_period: Vec<f64>,
}

impl MaintenanceTask {
    pub fn owner(&self) -> Owner {
        self.kind.owner()
    }
}

/// Per-period outage caps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrencyCaps {
    pub max_lines_per_period: Vec<usize>,
    pub max_gens_per_period: Vec<usize>,
    pub max_pipes_per_period: Vec<usize>,
}

impl ConcurrencyCaps {
    pub fn for_kind(&self, kind: AssetKind) -> &[usize] {
        match kind {
            AssetKind::Line => &self.max_lines_per_period,
            AssetKind::Generator => &self.max_gens_per_period,
            AssetKind::Pipeline => &self.max_pipes_per_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    pub name: String,
    pub horizon: Horizon,
    pub power: PowerNetwork,
    pub gas: GasNetwork,
    pub maintenance: Vec<MaintenanceTask>,
    pub caps: ConcurrencyCaps,
}

impl CaseData {
    pub fn periods(&self) -> usize {
        self.horizon.num_periods
    }

    pub fn tasks_of(&self, owner: Owner) -> Vec<usize> {
        (0..self.maintenance.len()).filter(|&i| self.maintenance[i].owner() == owner).collect()
    }

    pub fn asset_id(&self, kind: AssetKind, idx: usize) -> &str {
        match kind {
            AssetKind::Line => &self.power.lines[idx].id,
            AssetKind::Generator => &self.power.generators[idx].id,
            AssetKind::Pipeline => &self.gas.pipelines[idx].id,
        }
    }

    fn maintenance_slot(&self, kind: AssetKind, idx: usize) -> Option<Option<usize>> {
        match kind {
            AssetKind::Line => self.power.lines.get(idx).map(|l| l.maintenance),
            AssetKind::Generator => self.power.generators.get(idx).map(|g| g.maintenance),
            AssetKind::Pipeline => self.gas.pipelines.get(idx).map(|p| p.maintenance),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown reference: {0}")]
    Reference(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid case: {0}")]
    InvalidCase(String),
}

/// Every violated invariant, one human-readable line each.
pub fn validate_case(case: &CaseData) -> Vec<String> {
    let mut out = Vec::new();
    let t = case.horizon.num_periods;
    if t < 1 {
        out.push("horizon: num_periods must be at least 1".to_string());
    }
    let p = &case.power;
    let g = &case.gas;
    let nb = p.buses.len();
    let nn = g.nodes.len();

    check_matrix(&mut out, "power load", &p.load, nb, t, |x| x >= 0.0);
    check_matrix(&mut out, "power shed_cost", &p.shed_cost, nb, t, |x| x >= 0.0);
    check_matrix(&mut out, "gas load", &g.load, nn, t, |x| x >= 0.0);
    check_matrix(&mut out, "gas shed_cost", &g.shed_cost, nn, t, |x| x >= 0.0);

    for b in &p.buses {
        if !(b.angle_min.is_finite() && b.angle_max.is_finite() && b.angle_min <= b.angle_max) {
            out.push(format!("bus {}: angle bounds [{}, {}] are not an interval", b.id, b.angle_min, b.angle_max));
        }
    }
    if !(p.angle_diff_limit >= 0.0 && p.angle_diff_limit.is_finite()) {
        out.push(format!("power: angle_diff_limit {} must be finite and non-negative", p.angle_diff_limit));
    }
    for l in &p.lines {
        if l.from_bus >= nb || l.to_bus >= nb {
            out.push(format!("line {}: endpoint is not a declared bus", l.id));
        }
        if !(l.susceptance > 0.0) {
            out.push(format!("line {}: susceptance {} must be positive", l.id, l.susceptance));
        }
        if !(l.capacity > 0.0) {
            out.push(format!("line {}: capacity {} must be positive", l.id, l.capacity));
        }
    }
    for u in &p.generators {
        if u.bus >= nb {
            out.push(format!("generator {}: bus is not declared", u.id));
        }
        if !(0.0 <= u.p_min && u.p_min <= u.p_max) {
            out.push(format!("generator {}: need 0 <= p_min ({}) <= p_max ({})", u.id, u.p_min, u.p_max));
        }
        if !(u.ramp_up > 0.0 && u.ramp_down > 0.0) {
            out.push(format!("generator {}: ramp rates must be positive", u.id));
        }
        if let Some(link) = &u.gas_link {
            if link.node >= nn {
                out.push(format!("generator {}: gas node is not declared", u.id));
            }
            if !(link.efficiency > 0.0) {
                out.push(format!("generator {}: efficiency {} must be positive", u.id, link.efficiency));
            }
        }
        check_series(&mut out, &format!("generator {} energy_price", u.id), &u.energy_price, t);
        for (name, c) in [("fixed", u.fixed_cost), ("linear", u.linear_cost), ("startup", u.startup_cost)] {
            if !c.is_finite() {
                out.push(format!("generator {}: {name} cost is not finite", u.id));
            }
        }
    }
    for n in &g.nodes {
        if !(n.sq_pressure_min >= 0.0) {
            out.push(format!("gas node {}: minimum squared pressure {} is negative", n.id, n.sq_pressure_min));
        }
        if !(n.sq_pressure_min < n.sq_pressure_max) || !n.sq_pressure_max.is_finite() {
            out.push(format!(
                "gas node {}: need finite sq_pressure_min ({}) < sq_pressure_max ({})",
                n.id, n.sq_pressure_min, n.sq_pressure_max
            ));
        }
    }
    for pl in &g.pipelines {
        if pl.from_node >= nn || pl.to_node >= nn {
            out.push(format!("pipeline {}: endpoint is not a declared node", pl.id));
        }
        if !(pl.weymouth_c > 0.0) {
            out.push(format!("pipeline {}: weymouth_c {} must be positive", pl.id, pl.weymouth_c));
        }
        if !(pl.flow_cap > 0.0 && pl.flow_cap.is_finite()) {
            out.push(format!("pipeline {}: flow_cap {} must be positive", pl.id, pl.flow_cap));
        }
        if let Some(lambda) = pl.compressor {
            if !(lambda >= 1.0) {
                out.push(format!("pipeline {}: compression factor {lambda} must be at least 1", pl.id));
            }
        }
    }
    for w in &g.wells {
        if w.node >= nn {
            out.push(format!("well {}: node is not declared", w.id));
        }
        if !(0.0 <= w.g_min && w.g_min <= w.g_max && w.g_max.is_finite()) {
            out.push(format!("well {}: need 0 <= g_min ({}) <= g_max ({})", w.id, w.g_min, w.g_max));
        }
        check_series(&mut out, &format!("well {} price", w.id), &w.price, t);
    }
    for s in &g.storages {
        if s.node >= nn {
            out.push(format!("storage {}: node is not declared", s.id));
        }
        if !(s.inv_min <= s.initial_inventory && s.initial_inventory <= s.inv_max) {
            out.push(format!(
                "storage {}: need inv_min ({}) <= initial_inventory ({}) <= inv_max ({})",
                s.id, s.inv_min, s.initial_inventory, s.inv_max
            ));
        }
        if !(s.rate_in_max >= 0.0 && s.rate_out_max >= 0.0) {
            out.push(format!("storage {}: rates must be non-negative", s.id));
        }
        check_series(&mut out, &format!("storage {} price", s.id), &s.price, t);
    }
    for (i, task) in case.maintenance.iter().enumerate() {
        let label = format!("maintenance task {} ({:?} {})", i, task.kind, task.asset_id);
        if task.duration < 1 || task.duration > t {
            out.push(format!("{label}: duration {} must lie in 1..={t}", task.duration));
        }
        match case.maintenance_slot(task.kind, task.asset) {
            None => out.push(format!("{label}: asset index {} out of range", task.asset)),
            Some(slot) if slot != Some(i) => out.push(format!("{label}: asset does not point back at this task")),
            _ => {}
        }
        check_series(&mut out, &format!("{label} cost_per_period"), &task.cost_per_period, t);
    }
    for (name, caps) in [
        ("max_lines_per_period", &case.caps.max_lines_per_period),
        ("max_gens_per_period", &case.caps.max_gens_per_period),
        ("max_pipes_per_period", &case.caps.max_pipes_per_period),
    ] {
        if caps.len() != t {
            out.push(format!("caps {name}: expected {t} periods, found {}", caps.len()));
        }
    }
    out
}

fn check_matrix(out: &mut Vec<String>, what: &str, m: &[Vec<f64>], rows: usize, cols: usize, ok: impl Fn(f64) -> bool) {
    if m.len() != rows {
        out.push(format!("{what}: expected {rows} rows, found {}", m.len()));
        return;
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            out.push(format!("{what}: row {r} has {} periods, expected {cols}", row.len()));
        } else if let Some(t) = row.iter().position(|&x| !ok(x) || !x.is_finite()) {
            out.push(format!("{what}: row {r} period {} has invalid value {}", t + 1, row[t]));
        }
    }
}

fn check_series(out: &mut Vec<String>, what: &str, s: &[f64], t: usize) {
    if s.len() != t {
        out.push(format!("{what}: expected {t} periods, found {}", s.len()));
    } else if s.iter().any(|x| !x.is_finite()) {
        out.push(format!("{what}: values must be finite"));
    }
}

/// Big-M constants for the maintained-asset relaxations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMSet {
    pub m_line: f64,
    pub m_pipe: f64,
    pub m_angle: f64,
}

impl BigMSet {
    pub fn scaled(self, factor: f64) -> BigMSet {
        BigMSet { m_line: self.m_line * factor, m_pipe: self.m_pipe * factor, m_angle: self.m_angle * factor }
    }
}

/// Smallest constants that keep every relaxed row slack when its asset is
/// out of service.
///
/// With `v = 0` the line flow is zero, so the DC row needs
/// `M^L >= B * max|dtheta|`; the extra `P^L` cap term covers the flow when
/// the relaxation is evaluated at any in-bounds point. The pipeline row
/// compares a chord value (at most `cap^2` in magnitude) against
/// `C^2 (pi_n - pi_n')`.
pub fn derive_big_m(case: &CaseData) -> Result<BigMSet, CaseError> {
    let buses = &case.power.buses;
    if buses.is_empty() {
        return Err(CaseError::InvalidCase("no buses, angle bounds undefined".into()));
    }
    let hi = buses.iter().map(|b| b.angle_max).fold(f64::NEG_INFINITY, f64::max);
    let lo = buses.iter().map(|b| b.angle_min).fold(f64::INFINITY, f64::min);
    if !(hi.is_finite() && lo.is_finite()) {
        return Err(CaseError::InvalidCase("angle bounds must be finite".into()));
    }
    let m_angle = hi - lo;

    let mut m_line: f64 = 0.0;
    for l in case.power.lines.iter().filter(|l| l.maintenance.is_some()) {
        m_line = m_line.max(l.susceptance * m_angle + l.capacity);
    }
    let mut m_pipe: f64 = 0.0;
    for p in case.gas.pipelines.iter().filter(|p| p.maintenance.is_some()) {
        let (a, b) = (&case.gas.nodes[p.from_node], &case.gas.nodes[p.to_node]);
        let spread = (a.sq_pressure_max - b.sq_pressure_min).max(b.sq_pressure_max - a.sq_pressure_min);
        if !spread.is_finite() {
            return Err(CaseError::InvalidCase(format!("pipeline {}: pressure bounds must be finite", p.id)));
        }
        m_pipe = m_pipe.max(p.weymouth_c * p.weymouth_c * spread + p.flow_cap * p.flow_cap);
    }
    Ok(BigMSet { m_line, m_pipe, m_angle })
}
