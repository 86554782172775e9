use crate::milp::{MilpModel, Sense, VarId};
use crate::network::{BigMSet, CaseData};
use crate::pwl::PwlSegmentSet;
use crate::schedule::IndicatorMatrix;

use super::{DispatchError, DispatchOptions};

/// Variable ids of every domain quantity, `[entity][period - 1]`.
#[derive(Debug, Clone, Default)]
pub struct VarIndex {
    pub gen_output: Vec<Vec<VarId>>,
    /// Generators without a maintenance task take part in commitment.
    pub commit: Vec<Option<Vec<VarId>>>,
    pub startup: Vec<Option<Vec<VarId>>>,
    /// Fuel volume of gas-fired units.
    pub fuel: Vec<Option<Vec<VarId>>>,
    pub line_flow: Vec<Vec<VarId>>,
    pub angle: Vec<Vec<VarId>>,
    pub power_shed: Vec<Vec<VarId>>,
    pub well_output: Vec<Vec<VarId>>,
    pub well_on: Vec<Vec<VarId>>,
    pub inventory: Vec<Vec<VarId>>,
    pub withdrawal: Vec<Vec<VarId>>,
    pub pipe_flow: Vec<Vec<VarId>>,
    /// `[pipe][period - 1][segment]`.
    pub segment_flow: Vec<Vec<Vec<VarId>>>,
    pub segment_on: Vec<Vec<Vec<VarId>>>,
    pub sq_pressure: Vec<Vec<VarId>>,
    pub gas_shed: Vec<Vec<VarId>>,
}

/// The leaf MILP together with its name map.
#[derive(Debug, Clone)]
pub struct LowerModel {
    /// Objective is the shed penalty only.
    pub model: MilpModel,
    pub index: VarIndex,
    /// Operating cost used to pick one dispatch among the shed-minimal ones.
    pub production_cost: Vec<(VarId, f64)>,
    pub production_offset: f64,
}

struct Builder<'a> {
    v: &'a IndicatorMatrix,
    m: MilpModel,
}

impl Builder<'_> {
    fn var(&mut self, name: String, lo: f64, hi: f64) -> VarId {
        self.m.add_continuous(name, lo, hi)
    }

    fn row(&mut self, name: String, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.m.add_constraint(name, terms, sense, rhs);
    }

    /// Minimum up / down rows on a binary status series whose state before
    /// period 1 is "on". Rows with `t' = t` are identities and are skipped.
    fn min_up_down(&mut self, tag: &str, on: &[VarId], min_on: usize, min_off: usize) {
        let t_len = on.len();
        for t in 1..=t_len {
            let prev = if t >= 2 { Some(on[t - 2]) } else { None };
            // -v[t-1] + v[t] - v[t'] <= 0; with v[0] = 1 this never binds.
            if let Some(p) = prev {
                for tp in t + 1..=(t + min_on - 1).min(t_len) {
                    self.row(
                        format!("minup[{tag},{t},{tp}]"),
                        vec![(p, -1.0), (on[t - 1], 1.0), (on[tp - 1], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
            // v[t-1] - v[t] + v[t'] <= 1
            for tp in t + 1..=(t + min_off - 1).min(t_len) {
                let mut terms = vec![(on[t - 1], -1.0), (on[tp - 1], 1.0)];
                let rhs = match prev {
                    Some(p) => {
                        terms.insert(0, (p, 1.0));
                        1.0
                    }
                    None => 0.0,
                };
                self.row(format!("mindown[{tag},{t},{tp}]"), terms, Sense::Le, rhs);
            }
        }
    }
}

/// Assemble the lower-level dispatch MILP for one joint schedule.
pub fn build_lower_model(
    case: &CaseData,
    v: &IndicatorMatrix,
    pwl: &[PwlSegmentSet],
    bigm: &BigMSet,
    opts: &DispatchOptions,
) -> Result<LowerModel, DispatchError> {
    let t_len = case.periods();
    let p = &case.power;
    let g = &case.gas;
    if pwl.len() != g.pipelines.len() {
        return Err(DispatchError::Model(format!("{} segment sets for {} pipelines", pwl.len(), g.pipelines.len())));
    }
    for (pl, set) in g.pipelines.iter().zip(pwl) {
        if set.is_empty() || (set.flow_cap - pl.flow_cap).abs() > 1e-12 * pl.flow_cap {
            return Err(DispatchError::Model(format!("segment set does not cover pipeline {}", pl.id)));
        }
    }
    let shape_ok = |rows: &Vec<Vec<u8>>, n: usize| rows.len() == n && rows.iter().all(|r| r.len() == t_len);
    if !shape_ok(&v.v_line, p.lines.len())
        || !shape_ok(&v.v_gen, p.generators.len())
        || !shape_ok(&v.v_pipe, g.pipelines.len())
    {
        return Err(DispatchError::Model("indicator matrix does not match the case".into()));
    }

    let mut b = Builder { v, m: MilpModel::new(format!("dispatch[{}]", case.name)) };
    let mut ix = VarIndex::default();
    let mut prod: Vec<(VarId, f64)> = Vec::new();
    let mut prod_offset = 0.0;
    let periods = 1..=t_len;

    // Power side variables.
    for a in &p.buses {
        ix.angle
            .push(periods.clone().map(|t| b.var(format!("theta[{},{t}]", a.id), a.angle_min, a.angle_max)).collect());
    }
    for (bi, a) in p.buses.iter().enumerate() {
        ix.power_shed
            .push(periods.clone().map(|t| b.var(format!("shed_p[{},{t}]", a.id), 0.0, p.load[bi][t - 1])).collect());
    }
    for (ui, u) in p.generators.iter().enumerate() {
        let maintained = u.maintenance.is_some();
        let out: Vec<VarId> = periods
            .clone()
            .map(|t| {
                let (lo, hi) = if maintained {
                    let on = b.v.v_gen[ui][t - 1] as f64;
                    (u.p_min * on, u.p_max * on)
                } else {
                    (0.0, u.p_max)
                };
                b.var(format!("P[{},{t}]", u.id), lo, hi)
            })
            .collect();
        for (t, &x) in out.iter().enumerate() {
            prod.push((x, u.linear_cost));
            if maintained {
                prod_offset += u.fixed_cost * b.v.v_gen[ui][t] as f64;
            }
        }
        ix.gen_output.push(out);
        if maintained {
            ix.commit.push(None);
            ix.startup.push(None);
        } else {
            let on: Vec<VarId> = periods.clone().map(|t| b.m.add_binary(format!("u[{},{t}]", u.id))).collect();
            let st: Vec<VarId> = periods.clone().map(|t| b.var(format!("o[{},{t}]", u.id), 0.0, 1.0)).collect();
            for t in 0..t_len {
                prod.push((on[t], u.fixed_cost));
                prod.push((st[t], u.startup_cost));
            }
            ix.commit.push(Some(on));
            ix.startup.push(Some(st));
        }
        ix.fuel.push(u.gas_link.as_ref().map(|link| {
            periods.clone().map(|t| b.var(format!("fuel[{},{t}]", u.id), 0.0, u.p_max / link.efficiency)).collect()
        }));
    }
    for (li, l) in p.lines.iter().enumerate() {
        ix.line_flow.push(
            periods
                .clone()
                .map(|t| {
                    let cap = match l.maintenance {
                        Some(_) => l.capacity * b.v.v_line[li][t - 1] as f64,
                        None => l.capacity,
                    };
                    b.var(format!("PL[{},{t}]", l.id), -cap, cap)
                })
                .collect(),
        );
    }

    // Gas side variables.
    for (ni, n) in g.nodes.iter().enumerate() {
        ix.sq_pressure.push(
            periods.clone().map(|t| b.var(format!("pi[{},{t}]", n.id), n.sq_pressure_min, n.sq_pressure_max)).collect(),
        );
        ix.gas_shed
            .push(periods.clone().map(|t| b.var(format!("shed_g[{},{t}]", n.id), 0.0, g.load[ni][t - 1])).collect());
    }
    for w in &g.wells {
        let out: Vec<VarId> = periods.clone().map(|t| b.var(format!("G[{},{t}]", w.id), 0.0, w.g_max)).collect();
        let on: Vec<VarId> = periods.clone().map(|t| b.m.add_binary(format!("w[{},{t}]", w.id))).collect();
        for t in 0..t_len {
            prod.push((out[t], w.price[t]));
        }
        ix.well_output.push(out);
        ix.well_on.push(on);
    }
    for s in &g.storages {
        let inv: Vec<VarId> =
            periods.clone().map(|t| b.var(format!("S[{},{t}]", s.id), s.inv_min, s.inv_max)).collect();
        let wd: Vec<VarId> =
            periods.clone().map(|t| b.var(format!("withdraw[{},{t}]", s.id), 0.0, s.rate_out_max)).collect();
        for t in 0..t_len {
            prod.push((wd[t], s.price[t]));
        }
        ix.inventory.push(inv);
        ix.withdrawal.push(wd);
    }
    for (pi, pl) in g.pipelines.iter().enumerate() {
        let set = &pwl[pi];
        // An out-of-service period has every selector, and so every flow, at zero.
        let on = |t: usize| pl.maintenance.is_none() || b.v.v_pipe[pi][t - 1] == 1;
        let on_t: Vec<bool> = periods.clone().map(on).collect();
        ix.pipe_flow.push(
            periods
                .clone()
                .map(|t| {
                    let cap = if on_t[t - 1] { pl.flow_cap } else { 0.0 };
                    b.var(format!("F[{},{t}]", pl.id), -cap, cap)
                })
                .collect(),
        );
        let mut fs = Vec::new();
        let mut etas = Vec::new();
        for t in periods.clone() {
            let mut f_t = Vec::new();
            let mut e_t = Vec::new();
            let scale = if on_t[t - 1] { 1.0 } else { 0.0 };
            for (k, seg) in set.segments.iter().enumerate() {
                let name = format!("f[{},{t},{}]", pl.id, k + 1);
                f_t.push(b.var(name, scale * seg.f_lo.min(0.0), scale * seg.f_hi.max(0.0)));
                e_t.push(b.m.add_var(
                    format!("eta[{},{t},{}]", pl.id, k + 1),
                    crate::milp::VarKind::Binary,
                    0.0,
                    scale,
                ));
            }
            fs.push(f_t);
            etas.push(e_t);
        }
        ix.segment_flow.push(fs);
        ix.segment_on.push(etas);
    }

    // Objective: shed penalty.
    let mut shed_obj = Vec::new();
    for bi in 0..p.buses.len() {
        for t in 0..t_len {
            shed_obj.push((ix.power_shed[bi][t], p.shed_cost[bi][t]));
        }
    }
    for ni in 0..g.nodes.len() {
        for t in 0..t_len {
            shed_obj.push((ix.gas_shed[ni][t], g.shed_cost[ni][t]));
        }
    }
    b.m.objective = shed_obj;

    // Wells: output bounds by status, minimum up / down.
    for (wi, w) in g.wells.iter().enumerate() {
        let (out, on) = (ix.well_output[wi].clone(), ix.well_on[wi].clone());
        for t in 0..t_len {
            b.row(format!("well_max[{},{}]", w.id, t + 1), vec![(out[t], 1.0), (on[t], -w.g_max)], Sense::Le, 0.0);
            b.row(format!("well_min[{},{}]", w.id, t + 1), vec![(out[t], 1.0), (on[t], -w.g_min)], Sense::Ge, 0.0);
        }
        b.min_up_down(&w.id, &on, w.min_on, w.min_off);
    }

    // Storage rates; inventory before period 1 is the initial inventory.
    for (si, s) in g.storages.iter().enumerate() {
        let (inv, wd) = (ix.inventory[si].clone(), ix.withdrawal[si].clone());
        for t in 0..t_len {
            let (mut terms, c) = if t == 0 { (vec![], s.initial_inventory) } else { (vec![(inv[t - 1], 1.0)], 0.0) };
            terms.push((inv[t], -1.0));
            let name = format!("{},{}", s.id, t + 1);
            b.row(format!("store_out[{name}]"), terms.clone(), Sense::Le, s.rate_out_max - c);
            b.row(format!("store_in[{name}]"), terms.clone(), Sense::Ge, -s.rate_in_max - c);
            terms.push((wd[t], -1.0));
            b.row(format!("withdraw_def[{name}]"), terms, Sense::Le, -c);
        }
    }

    // Pipelines: segment selection, PWL Weymouth, flow definition.
    for (pi, pl) in g.pipelines.iter().enumerate() {
        let set = &pwl[pi];
        let c2 = pl.weymouth_c * pl.weymouth_c;
        for t in 0..t_len {
            let name = format!("{},{}", pl.id, t + 1);
            let (fs, etas) = (ix.segment_flow[pi][t].clone(), ix.segment_on[pi][t].clone());
            for (k, seg) in set.segments.iter().enumerate() {
                b.row(format!("seg_lo[{name},{}]", k + 1), vec![(fs[k], 1.0), (etas[k], -seg.f_lo)], Sense::Ge, 0.0);
                b.row(format!("seg_hi[{name},{}]", k + 1), vec![(fs[k], 1.0), (etas[k], -seg.f_hi)], Sense::Le, 0.0);
            }
            let mut flow_def: Vec<(VarId, f64)> = vec![(ix.pipe_flow[pi][t], 1.0)];
            flow_def.extend(fs.iter().map(|&f| (f, -1.0)));
            b.row(format!("flow_def[{name}]"), flow_def, Sense::Eq, 0.0);

            let mut wey: Vec<(VarId, f64)> = Vec::new();
            for (k, seg) in set.segments.iter().enumerate() {
                wey.push((fs[k], seg.slope));
                wey.push((etas[k], seg.intercept));
            }
            wey.push((ix.sq_pressure[pl.from_node][t], -c2));
            wey.push((ix.sq_pressure[pl.to_node][t], c2));
            let sel: Vec<(VarId, f64)> = etas.iter().map(|&e| (e, 1.0)).collect();
            match pl.maintenance {
                None => {
                    b.row(format!("weymouth[{name}]"), wey, Sense::Eq, 0.0);
                    b.row(format!("select[{name}]"), sel, Sense::Eq, 1.0);
                }
                Some(_) => {
                    let on = b.v.v_pipe[pi][t] as f64;
                    let slack = (1.0 - on) * bigm.m_pipe;
                    b.row(format!("weymouth_hi[{name}]"), wey.clone(), Sense::Le, slack);
                    b.row(format!("weymouth_lo[{name}]"), wey, Sense::Ge, -slack);
                    b.row(format!("select[{name}]"), sel, Sense::Eq, on);
                }
            }
            if let Some(lambda) = pl.compressor {
                b.row(
                    format!("compressor[{name}]"),
                    vec![(ix.sq_pressure[pl.to_node][t], 1.0), (ix.sq_pressure[pl.from_node][t], -lambda)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    // Gas node balance: supply + net inflow - fuel + shed = load.
    for (ni, n) in g.nodes.iter().enumerate() {
        for t in 0..t_len {
            let mut terms: Vec<(VarId, f64)> = Vec::new();
            let mut rhs = g.load[ni][t];
            for (wi, w) in g.wells.iter().enumerate() {
                if w.node == ni {
                    terms.push((ix.well_output[wi][t], 1.0));
                }
            }
            for (si, s) in g.storages.iter().enumerate() {
                if s.node == ni {
                    if t == 0 {
                        rhs -= s.initial_inventory;
                    } else {
                        terms.push((ix.inventory[si][t - 1], 1.0));
                    }
                    terms.push((ix.inventory[si][t], -1.0));
                }
            }
            for (pi, pl) in g.pipelines.iter().enumerate() {
                if pl.from_node == ni {
                    terms.push((ix.pipe_flow[pi][t], -1.0));
                }
                if pl.to_node == ni {
                    terms.push((ix.pipe_flow[pi][t], 1.0));
                }
            }
            for (ui, u) in p.generators.iter().enumerate() {
                if let (Some(link), Some(fuel)) = (&u.gas_link, &ix.fuel[ui]) {
                    if link.node == ni {
                        let coef = if opts.literal_coupling { link.efficiency } else { 1.0 };
                        terms.push((fuel[t], -coef));
                    }
                }
            }
            terms.push((ix.gas_shed[ni][t], 1.0));
            b.row(format!("gas_balance[{},{}]", n.id, t + 1), terms, Sense::Eq, rhs);
        }
    }

    // DC flow and angle-difference limits.
    let theta_max = p.angle_diff_limit;
    for (li, l) in p.lines.iter().enumerate() {
        for t in 0..t_len {
            let name = format!("{},{}", l.id, t + 1);
            let (ta, tb) = (ix.angle[l.from_bus][t], ix.angle[l.to_bus][t]);
            let dc = vec![(ta, l.susceptance), (tb, -l.susceptance), (ix.line_flow[li][t], -1.0)];
            let (slack, limit) = match l.maintenance {
                None => (None, theta_max),
                Some(_) => {
                    let on = b.v.v_line[li][t] as f64;
                    (Some((1.0 - on) * bigm.m_line), on * theta_max + (1.0 - on) * bigm.m_angle)
                }
            };
            match slack {
                None => b.row(format!("dc[{name}]"), dc, Sense::Eq, 0.0),
                Some(s) => {
                    b.row(format!("dc_lo[{name}]"), dc.clone(), Sense::Ge, -s);
                    b.row(format!("dc_hi[{name}]"), dc, Sense::Le, s);
                }
            }
            b.row(format!("angle_hi[{name}]"), vec![(ta, 1.0), (tb, -1.0)], Sense::Le, limit);
            b.row(format!("angle_lo[{name}]"), vec![(ta, 1.0), (tb, -1.0)], Sense::Ge, -limit);
        }
    }

    // Bus balance: generation + net inflow + shed = load.
    for (bi, a) in p.buses.iter().enumerate() {
        for t in 0..t_len {
            let mut terms: Vec<(VarId, f64)> = Vec::new();
            for (ui, u) in p.generators.iter().enumerate() {
                if u.bus == bi {
                    terms.push((ix.gen_output[ui][t], 1.0));
                }
            }
            for (li, l) in p.lines.iter().enumerate() {
                if l.from_bus == bi {
                    terms.push((ix.line_flow[li][t], -1.0));
                }
                if l.to_bus == bi {
                    terms.push((ix.line_flow[li][t], 1.0));
                }
            }
            terms.push((ix.power_shed[bi][t], 1.0));
            b.row(format!("bus_balance[{},{}]", a.id, t + 1), terms, Sense::Eq, p.load[bi][t]);
        }
    }

    // Generators: coupling, capacity by commitment, UC logic, ramping.
    for (ui, u) in p.generators.iter().enumerate() {
        let out = ix.gen_output[ui].clone();
        if let (Some(link), Some(fuel)) = (&u.gas_link, ix.fuel[ui].clone()) {
            for t in 0..t_len {
                b.row(
                    format!("gas_fired[{},{}]", u.id, t + 1),
                    vec![(out[t], 1.0), (fuel[t], -link.efficiency)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        match (&ix.commit[ui].clone(), &ix.startup[ui].clone()) {
            (Some(on), Some(st)) => {
                for t in 0..t_len {
                    let name = format!("{},{}", u.id, t + 1);
                    b.row(format!("pmax[{name}]"), vec![(out[t], 1.0), (on[t], -u.p_max)], Sense::Le, 0.0);
                    b.row(format!("pmin[{name}]"), vec![(out[t], 1.0), (on[t], -u.p_min)], Sense::Ge, 0.0);
                    // -v[t-1] + v[t] - o[t] <= 0
                    if t == 0 {
                        b.row(format!("startup[{name}]"), vec![(on[t], 1.0), (st[t], -1.0)], Sense::Le, 1.0);
                    } else {
                        b.row(
                            format!("startup[{name}]"),
                            vec![(on[t - 1], -1.0), (on[t], 1.0), (st[t], -1.0)],
                            Sense::Le,
                            0.0,
                        );
                    }
                }
                b.min_up_down(&u.id, on, u.min_on, u.min_off);
                for t in 1..t_len {
                    let name = format!("{},{}", u.id, t + 1);
                    b.row(
                        format!("ramp_up[{name}]"),
                        vec![
                            (out[t], 1.0),
                            (out[t - 1], -1.0),
                            (on[t - 1], u.p_min - u.ramp_up),
                            (on[t], u.p_min + u.ramp_up),
                        ],
                        Sense::Le,
                        2.0 * u.p_min + u.ramp_up,
                    );
                    b.row(
                        format!("ramp_down[{name}]"),
                        vec![
                            (out[t - 1], 1.0),
                            (out[t], -1.0),
                            (on[t - 1], u.p_min + u.ramp_down),
                            (on[t], u.p_min - u.ramp_down),
                        ],
                        Sense::Le,
                        2.0 * u.p_min + u.ramp_down,
                    );
                }
            }
            _ => {
                for t in 1..t_len {
                    let name = format!("{},{}", u.id, t + 1);
                    let (a, c) = (b.v.v_gen[ui][t - 1] as f64, b.v.v_gen[ui][t] as f64);
                    b.row(
                        format!("ramp_up[{name}]"),
                        vec![(out[t], 1.0), (out[t - 1], -1.0)],
                        Sense::Le,
                        (2.0 - a - c) * u.p_min + (1.0 + a - c) * u.ramp_up,
                    );
                    b.row(
                        format!("ramp_down[{name}]"),
                        vec![(out[t - 1], 1.0), (out[t], -1.0)],
                        Sense::Le,
                        (2.0 - a - c) * u.p_min + (1.0 - a + c) * u.ramp_down,
                    );
                }
            }
        }
    }

    Ok(LowerModel { model: b.m, index: ix, production_cost: prod, production_offset: prod_offset })
}
