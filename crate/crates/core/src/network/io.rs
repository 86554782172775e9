//! JSON case files.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PerPeriod<T> {
    Scalar(T),
    Series(Vec<T>),
}

impl<T: Clone> PerPeriod<T> {
    fn resolve(&self, what: &str, t: usize) -> Result<Vec<T>, CaseError> {
        match self {
            PerPeriod::Scalar(x) => Ok(vec![x.clone(); t]),
            PerPeriod::Series(v) if v.len() == t => Ok(v.clone()),
            PerPeriod::Series(v) => Err(CaseError::Schema(format!("{what}: expected {t} periods, found {}", v.len()))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    #[serde(default)]
    name: String,
    horizon: Horizon,
    power: RawPower,
    gas: RawGas,
    #[serde(default)]
    coupling: Vec<RawCoupling>,
    #[serde(default)]
    maintenance: Vec<RawTask>,
    caps: RawCaps,
    costs: RawCosts,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    buses: Vec<RawBus>,
    lines: Vec<RawLine>,
    generators: Vec<RawGenerator>,
    load: Vec<Vec<f64>>,
    angle_diff_limit: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    id: String,
    angle_min: f64,
    angle_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    id: String,
    from: String,
    to: String,
    susceptance: f64,
    capacity: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    id: String,
    bus: String,
    p_min: f64,
    p_max: f64,
    ramp_up: f64,
    ramp_down: f64,
    min_on: usize,
    min_off: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    nodes: Vec<RawNode>,
    pipelines: Vec<RawPipeline>,
    #[serde(default)]
    wells: Vec<RawWell>,
    #[serde(default)]
    storages: Vec<RawStorage>,
    load: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    sq_pressure_min: f64,
    sq_pressure_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipeline {
    id: String,
    from: String,
    to: String,
    weymouth_c: f64,
    flow_cap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compressor: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWell {
    id: String,
    node: String,
    g_min: f64,
    g_max: f64,
    min_on: usize,
    min_off: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStorage {
    id: String,
    node: String,
    inv_min: f64,
    inv_max: f64,
    rate_out_max: f64,
    rate_in_max: f64,
    initial_inventory: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    generator: String,
    gas_node: String,
    efficiency: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    kind: AssetKind,
    asset: String,
    duration: usize,
    cost_per_period: PerPeriod<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCaps {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_lines_per_period: Option<PerPeriod<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_gens_per_period: Option<PerPeriod<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_pipes_per_period: Option<PerPeriod<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenCost {
    fixed: f64,
    linear: f64,
    startup: f64,
    energy_price: PerPeriod<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    generators: BTreeMap<String, RawGenCost>,
    #[serde(default)]
    wells: BTreeMap<String, PerPeriod<f64>>,
    #[serde(default)]
    storages: BTreeMap<String, PerPeriod<f64>>,
    power_shed: Vec<Vec<f64>>,
    gas_shed: Vec<Vec<f64>>,
}

fn index_of(ids: impl Iterator<Item = String>, what: &str) -> Result<HashMap<String, usize>, CaseError> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(CaseError::Reference(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(map)
}

fn lookup(map: &HashMap<String, usize>, id: &str, what: &str, from: &str) -> Result<usize, CaseError> {
    map.get(id).copied().ok_or_else(|| CaseError::Reference(format!("{from} refers to unknown {what} {id:?}")))
}

fn take_cost<T>(map: &mut BTreeMap<String, T>, id: &str, what: &str) -> Result<T, CaseError> {
    map.remove(id).ok_or_else(|| CaseError::Schema(format!("costs.{what} has no entry for {id:?}")))
}

fn reject_leftovers<T>(map: &BTreeMap<String, T>, what: &str) -> Result<(), CaseError> {
    match map.keys().next() {
        Some(id) => Err(CaseError::Reference(format!("costs.{what} names unknown id {id:?}"))),
        None => Ok(()),
    }
}

fn matrix_shape(m: &[Vec<f64>], rows: usize, t: usize, what: &str) -> Result<(), CaseError> {
    if m.len() != rows || m.iter().any(|r| r.len() != t) {
        return Err(CaseError::Schema(format!("{what}: expected a {rows} x {t} matrix")));
    }
    Ok(())
}

fn resolve(raw: RawCase) -> Result<CaseData, CaseError> {
    let t = raw.horizon.num_periods;
    let RawCosts {
        generators: mut gen_costs,
        wells: mut well_costs,
        storages: mut storage_costs,
        power_shed,
        gas_shed,
    } = raw.costs;

    let bus_ix = index_of(raw.power.buses.iter().map(|b| b.id.clone()), "bus")?;
    let node_ix = index_of(raw.gas.nodes.iter().map(|n| n.id.clone()), "gas node")?;
    let line_ix = index_of(raw.power.lines.iter().map(|l| l.id.clone()), "line")?;
    let gen_ix = index_of(raw.power.generators.iter().map(|g| g.id.clone()), "generator")?;
    let pipe_ix = index_of(raw.gas.pipelines.iter().map(|p| p.id.clone()), "pipeline")?;
    index_of(raw.gas.wells.iter().map(|w| w.id.clone()), "well")?;
    index_of(raw.gas.storages.iter().map(|s| s.id.clone()), "storage")?;

    matrix_shape(&raw.power.load, bus_ix.len(), t, "power.load")?;
    matrix_shape(&power_shed, bus_ix.len(), t, "costs.power_shed")?;
    matrix_shape(&raw.gas.load, node_ix.len(), t, "gas.load")?;
    matrix_shape(&gas_shed, node_ix.len(), t, "costs.gas_shed")?;

    let buses =
        raw.power.buses.into_iter().map(|b| Bus { id: b.id, angle_min: b.angle_min, angle_max: b.angle_max }).collect();
    let mut lines = Vec::new();
    for l in raw.power.lines {
        let from = format!("line {}", l.id);
        lines.push(Line {
            from_bus: lookup(&bus_ix, &l.from, "bus", &from)?,
            to_bus: lookup(&bus_ix, &l.to, "bus", &from)?,
            id: l.id,
            susceptance: l.susceptance,
            capacity: l.capacity,
            maintenance: None,
        });
    }
    let mut generators = Vec::new();
    for g in raw.power.generators {
        let c = take_cost(&mut gen_costs, &g.id, "generators")?;
        generators.push(Generator {
            bus: lookup(&bus_ix, &g.bus, "bus", &format!("generator {}", g.id))?,
            p_min: g.p_min,
            p_max: g.p_max,
            ramp_up: g.ramp_up,
            ramp_down: g.ramp_down,
            min_on: g.min_on,
            min_off: g.min_off,
            fixed_cost: c.fixed,
            linear_cost: c.linear,
            startup_cost: c.startup,
            energy_price: c.energy_price.resolve(&format!("costs.generators.{}.energy_price", g.id), t)?,
            gas_link: None,
            maintenance: None,
            id: g.id,
        });
    }
    reject_leftovers(&gen_costs, "generators")?;

    let nodes = raw
        .gas
        .nodes
        .into_iter()
        .map(|n| GasNode { id: n.id, sq_pressure_min: n.sq_pressure_min, sq_pressure_max: n.sq_pressure_max })
        .collect();
    let mut pipelines = Vec::new();
    for p in raw.gas.pipelines {
        let from = format!("pipeline {}", p.id);
        pipelines.push(Pipeline {
            from_node: lookup(&node_ix, &p.from, "gas node", &from)?,
            to_node: lookup(&node_ix, &p.to, "gas node", &from)?,
            id: p.id,
            weymouth_c: p.weymouth_c,
            flow_cap: p.flow_cap,
            compressor: p.compressor,
            maintenance: None,
        });
    }
    let mut wells = Vec::new();
    for w in raw.gas.wells {
        let price = take_cost(&mut well_costs, &w.id, "wells")?;
        wells.push(Well {
            node: lookup(&node_ix, &w.node, "gas node", &format!("well {}", w.id))?,
            g_min: w.g_min,
            g_max: w.g_max,
            min_on: w.min_on,
            min_off: w.min_off,
            price: price.resolve(&format!("costs.wells.{}", w.id), t)?,
            id: w.id,
        });
    }
    reject_leftovers(&well_costs, "wells")?;
    let mut storages = Vec::new();
    for s in raw.gas.storages {
        let price = take_cost(&mut storage_costs, &s.id, "storages")?;
        storages.push(Storage {
            node: lookup(&node_ix, &s.node, "gas node", &format!("storage {}", s.id))?,
            inv_min: s.inv_min,
            inv_max: s.inv_max,
            rate_out_max: s.rate_out_max,
            rate_in_max: s.rate_in_max,
            initial_inventory: s.initial_inventory,
            price: price.resolve(&format!("costs.storages.{}", s.id), t)?,
            id: s.id,
        });
    }
    reject_leftovers(&storage_costs, "storages")?;

    for c in raw.coupling {
        let from = format!("coupling for {}", c.generator);
        let u = lookup(&gen_ix, &c.generator, "generator", &from)?;
        let node = lookup(&node_ix, &c.gas_node, "gas node", &from)?;
        if generators[u].gas_link.is_some() {
            return Err(CaseError::Schema(format!("generator {} is coupled twice", c.generator)));
        }
        generators[u].gas_link = Some(GasLink { node, efficiency: c.efficiency });
    }

    let mut maintenance = Vec::new();
    for (i, task) in raw.maintenance.into_iter().enumerate() {
        let from = format!("maintenance task {}", i);
        let slot = match task.kind {
            AssetKind::Line => {
                let a = lookup(&line_ix, &task.asset, "line", &from)?;
                (a, &mut lines[a].maintenance)
            }
            AssetKind::Generator => {
                let a = lookup(&gen_ix, &task.asset, "generator", &from)?;
                (a, &mut generators[a].maintenance)
            }
            AssetKind::Pipeline => {
                let a = lookup(&pipe_ix, &task.asset, "pipeline", &from)?;
                (a, &mut pipelines[a].maintenance)
            }
        };
        if slot.1.is_some() {
            return Err(CaseError::Schema(format!("asset {} has more than one maintenance task", task.asset)));
        }
        *slot.1 = Some(i);
        maintenance.push(MaintenanceTask {
            kind: task.kind,
            asset: slot.0,
            cost_per_period: task.cost_per_period.resolve(&format!("{from} cost_per_period"), t)?,
            asset_id: task.asset,
            duration: task.duration,
        });
    }

    let cap = |c: &Option<PerPeriod<usize>>, what: &str| match c {
        Some(c) => c.resolve(&format!("caps.{what}"), t),
        None => Ok(vec![usize::MAX; t]),
    };
    let caps = ConcurrencyCaps {
        max_lines_per_period: cap(&raw.caps.max_lines_per_period, "max_lines_per_period")?,
        max_gens_per_period: cap(&raw.caps.max_gens_per_period, "max_gens_per_period")?,
        max_pipes_per_period: cap(&raw.caps.max_pipes_per_period, "max_pipes_per_period")?,
    };

    Ok(CaseData {
        name: raw.name,
        horizon: raw.horizon,
        power: PowerNetwork {
            buses,
            lines,
            generators,
            load: raw.power.load,
            shed_cost: power_shed,
            angle_diff_limit: raw.power.angle_diff_limit,
        },
        gas: GasNetwork { nodes, pipelines, wells, storages, load: raw.gas.load, shed_cost: gas_shed },
        maintenance,
        caps,
    })
}

fn to_raw(case: &CaseData) -> RawCase {
    let p = &case.power;
    let g = &case.gas;
    let bus = |i: usize| p.buses[i].id.clone();
    let node = |i: usize| g.nodes[i].id.clone();
    let series = |v: &[f64]| PerPeriod::Series(v.to_vec());
    let caps = |v: &[usize]| {
        if v.iter().all(|&c| c == usize::MAX) {
            None
        } else {
            Some(PerPeriod::Series(v.to_vec()))
        }
    };
    RawCase {
        name: case.name.clone(),
        horizon: case.horizon.clone(),
        power: RawPower {
            buses: p
                .buses
                .iter()
                .map(|b| RawBus { id: b.id.clone(), angle_min: b.angle_min, angle_max: b.angle_max })
                .collect(),
            lines: p
                .lines
                .iter()
                .map(|l| RawLine {
                    id: l.id.clone(),
                    from: bus(l.from_bus),
                    to: bus(l.to_bus),
                    susceptance: l.susceptance,
                    capacity: l.capacity,
                })
                .collect(),
            generators: p
                .generators
                .iter()
                .map(|u| RawGenerator {
                    id: u.id.clone(),
                    bus: bus(u.bus),
                    p_min: u.p_min,
                    p_max: u.p_max,
                    ramp_up: u.ramp_up,
                    ramp_down: u.ramp_down,
                    min_on: u.min_on,
                    min_off: u.min_off,
                })
                .collect(),
            load: p.load.clone(),
            angle_diff_limit: p.angle_diff_limit,
        },
        gas: RawGas {
            nodes: g
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id.clone(),
                    sq_pressure_min: n.sq_pressure_min,
                    sq_pressure_max: n.sq_pressure_max,
                })
                .collect(),
            pipelines: g
                .pipelines
                .iter()
                .map(|pl| RawPipeline {
                    id: pl.id.clone(),
                    from: node(pl.from_node),
                    to: node(pl.to_node),
                    weymouth_c: pl.weymouth_c,
                    flow_cap: pl.flow_cap,
                    compressor: pl.compressor,
                })
                .collect(),
            wells: g
                .wells
                .iter()
                .map(|w| RawWell {
                    id: w.id.clone(),
                    node: node(w.node),
                    g_min: w.g_min,
                    g_max: w.g_max,
                    min_on: w.min_on,
                    min_off: w.min_off,
                })
                .collect(),
            storages: g
                .storages
                .iter()
                .map(|s| RawStorage {
                    id: s.id.clone(),
                    node: node(s.node),
                    inv_min: s.inv_min,
                    inv_max: s.inv_max,
                    rate_out_max: s.rate_out_max,
                    rate_in_max: s.rate_in_max,
                    initial_inventory: s.initial_inventory,
                })
                .collect(),
            load: g.load.clone(),
        },
        coupling: p
            .generators
            .iter()
            .filter_map(|u| {
                u.gas_link.as_ref().map(|l| RawCoupling {
                    generator: u.id.clone(),
                    gas_node: node(l.node),
                    efficiency: l.efficiency,
                })
            })
            .collect(),
        maintenance: case
            .maintenance
            .iter()
            .map(|m| RawTask {
                kind: m.kind,
                asset: m.asset_id.clone(),
                duration: m.duration,
                cost_per_period: series(&m.cost_per_period),
            })
            .collect(),
        caps: RawCaps {
            max_lines_per_period: caps(&case.caps.max_lines_per_period),
            max_gens_per_period: caps(&case.caps.max_gens_per_period),
            max_pipes_per_period: caps(&case.caps.max_pipes_per_period),
        },
        costs: RawCosts {
            generators: p
                .generators
                .iter()
                .map(|u| {
                    (
                        u.id.clone(),
                        RawGenCost {
                            fixed: u.fixed_cost,
                            linear: u.linear_cost,
                            startup: u.startup_cost,
                            energy_price: series(&u.energy_price),
                        },
                    )
                })
                .collect(),
            wells: g.wells.iter().map(|w| (w.id.clone(), series(&w.price))).collect(),
            storages: g.storages.iter().map(|s| (s.id.clone(), series(&s.price))).collect(),
            power_shed: p.shed_cost.clone(),
            gas_shed: g.shed_cost.clone(),
        },
    }
}

/// Parse a case document. Maintenance tasks are listed in file order.
pub fn parse_case(text: &str) -> Result<CaseData, CaseError> {
    let raw: RawCase = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => CaseError::Schema(e.to_string()),
            _ => CaseError::Parse(e.to_string()),
        }
    })?;
    resolve(raw)
}

pub fn load_case(path: &Path) -> Result<CaseData, CaseError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CaseError::Io { path: path.display().to_string(), source })?;
    parse_case(&text)
}

/// Pretty-printed case document; [`parse_case`] reads it back unchanged.
pub fn to_json_string(case: &CaseData) -> String {
    let mut s = serde_json::to_string_pretty(&to_raw(case)).expect("case serializes");
    s.push('\n');
    s
}

pub fn write_case(case: &CaseData, path: &Path) -> std::io::Result<()> {
    crate::report::write_atomic(path, to_json_string(case).as_bytes())
}
