//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

pub mod feasibility;
pub mod spne;

use std::path::PathBuf;

use maintgame::milp::{MilpModel, Sense, VarId};
use maintgame::network::{load_case, CaseData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bundled case file; also resolves from sibling crates' test targets.
pub fn case_path(name: &str) -> PathBuf {
    let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = if here.join("cases").is_dir() { here.join("cases") } else { here.join("../core/cases") };
    dir.join(format!("{name}.json"))
}

pub fn bundled(name: &str) -> CaseData {
    load_case(&case_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Periods `first..first + len` (1-based) of `case`, with maintenance
/// durations clipped to the new horizon.
pub fn window(case: &CaseData, first: usize, len: usize) -> CaseData {
    let cut = |v: &Vec<f64>| v[first - 1..first - 1 + len].to_vec();
    let cut_all = |m: &mut Vec<Vec<f64>>| m.iter_mut().for_each(|r| *r = cut(r));
    let mut c = case.clone();
    c.horizon.num_periods = len;
    cut_all(&mut c.power.load);
    cut_all(&mut c.power.shed_cost);
    cut_all(&mut c.gas.load);
    cut_all(&mut c.gas.shed_cost);
    for u in &mut c.power.generators {
        u.energy_price = cut(&u.energy_price);
    }
    for w in &mut c.gas.wells {
        w.price = cut(&w.price);
    }
    for s in &mut c.gas.storages {
        s.price = cut(&s.price);
    }
    for m in &mut c.maintenance {
        m.cost_per_period = cut(&m.cost_per_period);
        m.duration = m.duration.min(len);
    }
    for caps in [&mut c.caps.max_lines_per_period, &mut c.caps.max_gens_per_period, &mut c.caps.max_pipes_per_period] {
        *caps = caps[first - 1..first - 1 + len].to_vec();
    }
    c
}

/// Small boxed LP with dense random rows. Rhs values are set around a
/// random interior point, so most instances are feasible.
pub fn random_lp(seed: u64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=6);
    let mut model = MilpModel::new(format!("lp{seed}"));
    let mut point = Vec::new();
    let vars: Vec<VarId> = (0..n)
        .map(|j| {
            let lo = rng.gen_range(-5.0..0.0);
            let hi = rng.gen_range(0.5..6.0);
            point.push(rng.gen_range(lo..hi));
            model.add_continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    for r in 0..m {
        let terms: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, rng.gen_range(-4.0..4.0))).collect();
        let act: f64 = terms.iter().map(|&(v, a)| a * point[v.0]).sum();
        let sense = match rng.gen_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Le,
            _ => Sense::Ge,
        };
        let rhs = match sense {
            Sense::Eq => act,
            Sense::Le => act + rng.gen_range(0.0..3.0),
            Sense::Ge => act - rng.gen_range(0.0..3.0),
        };
        model.add_constraint(format!("r{r}"), terms, sense, rhs);
    }
    model.objective = vars.iter().map(|&v| (v, rng.gen_range(-3.0..3.0))).collect();
    model
}

/// Enumerate every vertex of a boxed LP (choose `n` tight hyperplanes among
/// rows and bounds, solve, keep feasible points) and return the best
/// objective, or `None` when no vertex is feasible.
pub fn vertex_lp_oracle(model: &MilpModel) -> Option<f64> {
    let n = model.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &model.constraints {
        let mut a = vec![0.0; n];
        for &(v, coef) in &c.terms {
            a[v.0] += coef;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in model.variables.iter().enumerate() {
        assert!(v.lower.is_finite() && v.upper.is_finite(), "oracle needs boxed variables");
        for b in [v.lower, v.upper] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, b));
        }
    }
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let mut mat: Vec<Vec<f64>> = pick.iter().map(|&p| planes[p].0.clone()).collect();
        let mut rhs: Vec<f64> = pick.iter().map(|&p| planes[p].1).collect();
        if let Some(x) = gauss_solve(&mut mat, &mut rhs) {
            if model.max_violation(&x) <= 1e-9 {
                let obj = model.objective_value(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < planes.len() - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Random MILP with up to 10 binaries and 20 continuous variables,
/// including indicator-style rows `x <= U z`.
pub fn random_milp(seed: u64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(1..=10);
    let nc = rng.gen_range(1..=20);
    let mut model = MilpModel::new(format!("milp{seed}"));
    let zs: Vec<VarId> = (0..nb).map(|i| model.add_binary(format!("z{i}"))).collect();
    let xs: Vec<VarId> = (0..nc)
        .map(|j| {
            let hi = rng.gen_range(1.0..10.0);
            let lo = if rng.gen_bool(0.3) { -rng.gen_range(0.0..5.0) } else { 0.0 };
            model.add_continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    let zpoint: Vec<f64> = zs.iter().map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let xpoint: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let v = &model.variables[x.0];
            rng.gen_range(v.lower..=v.upper)
        })
        .collect();
    let value = |v: VarId| {
        if v.0 < nb {
            zpoint[v.0]
        } else {
            xpoint[v.0 - nb]
        }
    };

    let m = rng.gen_range(2..=12);
    for r in 0..m {
        let k = rng.gen_range(2..=6.min(nb + nc).max(2));
        let mut terms = Vec::new();
        for _ in 0..k {
            let v = if rng.gen_bool(0.4) { zs[rng.gen_range(0..nb)] } else { xs[rng.gen_range(0..nc)] };
            terms.push((v, rng.gen_range(-5.0..5.0f64).round()));
        }
        let act: f64 = terms.iter().map(|&(v, a)| a * value(v)).sum();
        let (sense, rhs) = match rng.gen_range(0..6) {
            0 => (Sense::Eq, act),
            1..=3 => (Sense::Le, act + rng.gen_range(0.0..2.0)),
            _ => (Sense::Ge, act - rng.gen_range(0.0..2.0)),
        };
        model.add_constraint(format!("r{r}"), terms, sense, rhs);
    }
    for (j, &x) in xs.iter().enumerate().take(nb.min(nc)) {
        let up = model.variables[x.0].upper;
        if zpoint[j] == 1.0 || xpoint[j] <= 0.0 {
            model.add_constraint(format!("ind{j}"), vec![(x, 1.0), (zs[j], -up)], Sense::Le, 0.0);
        }
    }
    for &z in &zs {
        model.objective.push((z, rng.gen_range(-6.0..6.0)));
    }
    for &x in &xs {
        model.objective.push((x, rng.gen_range(-2.0..2.0)));
    }
    model
}
