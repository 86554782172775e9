//! Dispatch checks recomputed from case data, independent of the model rows.

use maintgame::dispatch::DispatchSolution;
use maintgame::network::CaseData;
use maintgame::pwl::PwlSegmentSet;
use maintgame::schedule::IndicatorMatrix;

pub const BALANCE_TOL: f64 = 1e-6;
pub const BOUND_TOL: f64 = 1e-7;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const OUTAGE_FLOW_TOL: f64 = 1e-9;

#[derive(Debug, Default, Clone, Copy)]
pub struct Residuals {
    pub power_balance: f64,
    pub gas_balance: f64,
    pub bound: f64,
    pub selector: f64,
    pub outage_flow: f64,
    pub weymouth: f64,
    pub dc_flow: f64,
    pub coupling: f64,
}

impl Residuals {
    pub fn merge(&mut self, o: &Residuals) {
        self.power_balance = self.power_balance.max(o.power_balance);
        self.gas_balance = self.gas_balance.max(o.gas_balance);
        self.bound = self.bound.max(o.bound);
        self.selector = self.selector.max(o.selector);
        self.outage_flow = self.outage_flow.max(o.outage_flow);
        self.weymouth = self.weymouth.max(o.weymouth);
        self.dc_flow = self.dc_flow.max(o.dc_flow);
        self.coupling = self.coupling.max(o.coupling);
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |what: &str, x: f64, tol: f64| {
            if !(x <= tol) {
                out.push(format!("{what} {x:e} exceeds {tol:e}"));
            }
        };
        check("power balance residual", self.power_balance, BALANCE_TOL);
        check("gas balance residual", self.gas_balance, BALANCE_TOL);
        check("bound violation", self.bound, BOUND_TOL);
        check("selector sum error", self.selector, INTEGRALITY_TOL);
        check("out-of-service flow", self.outage_flow, OUTAGE_FLOW_TOL);
        check("pwl weymouth residual", self.weymouth, BALANCE_TOL);
        check("dc flow residual", self.dc_flow, BALANCE_TOL);
        check("gas-fired coupling residual", self.coupling, BALANCE_TOL);
        out
    }
}

fn below(x: f64, hi: f64) -> f64 {
    (x - hi).max(0.0)
}

fn within(x: f64, lo: f64, hi: f64) -> f64 {
    below(x, hi).max(lo - x)
}

pub fn residuals(
    case: &CaseData,
    v: &IndicatorMatrix,
    pwl: &[PwlSegmentSet],
    sol: &DispatchSolution,
    literal_coupling: bool,
) -> Residuals {
    let p = &case.power;
    let g = &case.gas;
    let mut r = Residuals::default();
    for t in 0..case.periods() {
        for b in 0..p.buses.len() {
            let mut net = sol.power_shed[b][t] - p.load[b][t];
            for (u, gen) in p.generators.iter().enumerate() {
                if gen.bus == b {
                    net += sol.gen_output[u][t];
                }
            }
            for (l, line) in p.lines.iter().enumerate() {
                if line.from_bus == b {
                    net -= sol.line_flow[l][t];
                }
                if line.to_bus == b {
                    net += sol.line_flow[l][t];
                }
            }
            r.power_balance = r.power_balance.max(net.abs());
            r.bound = r.bound.max(within(sol.power_shed[b][t], 0.0, p.load[b][t]));
            r.bound = r.bound.max(within(sol.angle[b][t], p.buses[b].angle_min, p.buses[b].angle_max));
        }
        for n in 0..g.nodes.len() {
            let mut net = sol.gas_shed[n][t] - g.load[n][t];
            for (w, well) in g.wells.iter().enumerate() {
                if well.node == n {
                    net += sol.well_output[w][t];
                }
            }
            for (s, st) in g.storages.iter().enumerate() {
                if st.node == n {
                    let prev = if t == 0 { st.initial_inventory } else { sol.inventory[s][t - 1] };
                    net += prev - sol.inventory[s][t];
                }
            }
            for (pi, pl) in g.pipelines.iter().enumerate() {
                if pl.from_node == n {
                    net -= sol.pipe_flow[pi][t];
                }
                if pl.to_node == n {
                    net += sol.pipe_flow[pi][t];
                }
            }
            for (u, gen) in p.generators.iter().enumerate() {
                if let Some(link) = &gen.gas_link {
                    if link.node == n {
                        let fuel = sol.gen_output[u][t] / link.efficiency;
                        net -= if literal_coupling { link.efficiency * fuel } else { fuel };
                    }
                }
            }
            r.gas_balance = r.gas_balance.max(net.abs());
            let node = &g.nodes[n];
            r.bound = r.bound.max(within(sol.sq_pressure[n][t], node.sq_pressure_min, node.sq_pressure_max));
            r.bound = r.bound.max(within(sol.gas_shed[n][t], 0.0, g.load[n][t]));
        }
        for (u, gen) in p.generators.iter().enumerate() {
            let on = sol.commitment[u][t];
            if gen.maintenance.is_some() {
                r.selector = r.selector.max((on - v.v_gen[u][t] as f64).abs());
            } else {
                r.selector = r.selector.max(on.min(1.0 - on).max(0.0));
            }
            r.bound = r.bound.max(within(sol.gen_output[u][t], gen.p_min * on, gen.p_max * on));
            if let Some(link) = &gen.gas_link {
                r.coupling = r.coupling.max((sol.gen_output[u][t] - link.efficiency * sol.fuel[u][t]).abs());
            }
            if t > 0 {
                let d = sol.gen_output[u][t] - sol.gen_output[u][t - 1];
                r.bound = r.bound.max(below(d, gen.ramp_up)).max(below(-d, gen.ramp_down));
            }
        }
        for (l, line) in p.lines.iter().enumerate() {
            let f = sol.line_flow[l][t];
            let on = v.v_line[l][t] == 1;
            r.bound = r.bound.max(below(f.abs(), line.capacity));
            let dtheta = sol.angle[line.from_bus][t] - sol.angle[line.to_bus][t];
            if on {
                r.dc_flow = r.dc_flow.max((f - line.susceptance * dtheta).abs());
                r.bound = r.bound.max(below(dtheta.abs(), p.angle_diff_limit));
            } else {
                r.outage_flow = r.outage_flow.max(f.abs());
            }
        }
        for (w, well) in g.wells.iter().enumerate() {
            let on = sol.well_on[w][t];
            r.selector = r.selector.max(on.min(1.0 - on).max(0.0));
            r.bound = r.bound.max(within(sol.well_output[w][t], well.g_min * on, well.g_max * on));
        }
        for (s, st) in g.storages.iter().enumerate() {
            let prev = if t == 0 { st.initial_inventory } else { sol.inventory[s][t - 1] };
            let out = prev - sol.inventory[s][t];
            r.bound = r.bound.max(within(sol.inventory[s][t], st.inv_min, st.inv_max));
            r.bound = r.bound.max(within(out, -st.rate_in_max, st.rate_out_max));
        }
        for (pi, pl) in g.pipelines.iter().enumerate() {
            let on = v.v_pipe[pi][t] as f64;
            let etas = &sol.segment_on[pi][t];
            let fs = &sol.segment_flow[pi][t];
            let sum: f64 = etas.iter().sum();
            r.selector = r.selector.max((sum - on).abs());
            for e in etas {
                r.selector = r.selector.max(e.min(1.0 - e).max(0.0));
            }
            let flow = sol.pipe_flow[pi][t];
            r.bound = r.bound.max(below(flow.abs(), pl.flow_cap));
            r.dc_flow = r.dc_flow.max((flow - fs.iter().sum::<f64>()).abs());
            if on == 0.0 {
                r.outage_flow = r.outage_flow.max(flow.abs());
                for f in fs {
                    r.outage_flow = r.outage_flow.max(f.abs());
                }
            } else {
                let set = &pwl[pi];
                let approx: f64 =
                    set.segments.iter().enumerate().map(|(k, s)| s.slope * fs[k] + s.intercept * etas[k]).sum();
                let c2 = pl.weymouth_c * pl.weymouth_c;
                let drop = c2 * (sol.sq_pressure[pl.from_node][t] - sol.sq_pressure[pl.to_node][t]);
                r.weymouth = r.weymouth.max((approx - drop).abs());
                for (k, s) in set.segments.iter().enumerate() {
                    r.bound = r.bound.max(within(fs[k], s.f_lo * etas[k], s.f_hi * etas[k]));
                }
                if let Some(lambda) = pl.compressor {
                    let up = sol.sq_pressure[pl.to_node][t] - lambda * sol.sq_pressure[pl.from_node][t];
                    r.bound = r.bound.max(up.max(0.0));
                }
            }
        }
    }
    r
}
