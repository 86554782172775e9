//! Bounded-variable revised primal simplex.
//!
//! Every row `i` gets a logical variable `r_i = a_i x` whose bounds encode the
//! row sense, so the working system is `[A | -I] (x, r) = 0` with box bounds
//! on all `n + m` columns. Phase 1 minimizes the sum of bound violations of
//! the basic variables; once the basis is feasible the true costs take over.
//! Pricing is Dantzig's rule with a Harris ratio test, falling back to
//! Bland's rule while the method is stalling on degenerate pivots.

use super::lu::{EtaFile, SparseLu};
use super::model::{MilpModel, Sense};
use super::MilpError;

const PRIMAL_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 80;
const STALL_BEFORE_BLAND: usize = 60;

/// Column-major LP data derived from a [`MilpModel`] (binaries relaxed).
#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub n: usize,
    pub m: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

impl LpProblem {
    pub(crate) fn from_model(model: &MilpModel) -> Self {
        let n = model.variables.len();
        let m = model.constraints.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut row_lower = Vec::with_capacity(m);
        let mut row_upper = Vec::with_capacity(m);
        let mut merged: Vec<f64> = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        for (i, c) in model.constraints.iter().enumerate() {
            for &(v, a) in &c.terms {
                if !seen[v.0] {
                    seen[v.0] = true;
                    touched.push(v.0);
                }
                merged[v.0] += a;
            }
            touched.sort_unstable();
            for &j in &touched {
                if merged[j] != 0.0 {
                    cols[j].push((i, merged[j]));
                }
                merged[j] = 0.0;
                seen[j] = false;
            }
            touched.clear();
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            row_lower.push(lo);
            row_upper.push(hi);
        }
        let mut cost = vec![0.0; n];
        for &(v, c) in &model.objective {
            cost[v.0] += c;
        }
        LpProblem {
            n,
            m,
            cols,
            cost,
            col_lower: model.variables.iter().map(|v| v.lower).collect(),
            col_upper: model.variables.iter().map(|v| v.upper).collect(),
            row_lower,
            row_upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// A simplex basis over the `n + m` structural and logical columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Basis {
    pub head: Vec<usize>,
    pub state: Vec<VarState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpResult {
    pub status: LpStatus,
    /// Structural values (length `n`).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Lagrangian bound from the final basis duals (Optimal only).
    pub dual_bound: f64,
    pub iterations: usize,
    pub basis: Basis,
}

struct Simplex<'a> {
    lp: &'a LpProblem,
    n: usize,
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    state: Vec<VarState>,
    lu: SparseLu,
    etas: EtaFile,
    iterations: usize,
    cost_scale: f64,
}

/// Solve the LP with structural bounds `col_lower`/`col_upper`, optionally
/// starting from a previous basis of the same problem.
pub(crate) fn solve(
    lp: &LpProblem,
    col_lower: &[f64],
    col_upper: &[f64],
    warm: Option<&Basis>,
) -> Result<LpResult, MilpError> {
    let n = lp.n;
    let m = lp.m;
    for j in 0..n {
        if col_lower[j] > col_upper[j] + FEAS_TOL {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::INFINITY,
                dual_bound: f64::INFINITY,
                iterations: 0,
                basis: slack_basis(n, m, col_lower, col_upper),
            });
        }
    }
    let mut lower = col_lower.to_vec();
    lower.extend_from_slice(&lp.row_lower);
    let mut upper = col_upper.to_vec();
    upper.extend_from_slice(&lp.row_upper);

    let basis = match warm {
        Some(b) if b.head.len() == m && b.state.len() == n + m => b.clone(),
        _ => slack_basis(n, m, col_lower, col_upper),
    };
    let cost_scale = lp.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let mut s = Simplex {
        lp,
        n,
        m,
        lower,
        upper,
        x: vec![0.0; n + m],
        head: basis.head,
        state: basis.state,
        lu: SparseLu::factor(0, &[]).expect("empty factorization"),
        etas: EtaFile::default(),
        iterations: 0,
        cost_scale,
    };
    s.normalize_nonbasic();
    s.refactor()?;
    s.run()
}

fn slack_basis(n: usize, m: usize, col_lower: &[f64], col_upper: &[f64]) -> Basis {
    let mut state = Vec::with_capacity(n + m);
    for j in 0..n {
        state.push(resting_state(col_lower[j], col_upper[j]));
    }
    state.extend(std::iter::repeat_n(VarState::Basic, m));
    Basis { head: (n..n + m).collect(), state }
}

fn resting_state(lo: f64, hi: f64) -> VarState {
    if lo.is_finite() {
        VarState::AtLower
    } else if hi.is_finite() {
        VarState::AtUpper
    } else {
        VarState::Free
    }
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> ColIter<'_> {
        if j < self.n {
            ColIter::Structural(self.lp.cols[j].iter())
        } else {
            ColIter::Logical(Some(j - self.n))
        }
    }

    fn normalize_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let st = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower if lo.is_finite() => VarState::AtLower,
                VarState::AtUpper if hi.is_finite() => VarState::AtUpper,
                VarState::Free if !lo.is_finite() && !hi.is_finite() => VarState::Free,
                _ => resting_state(lo, hi),
            };
            self.state[j] = st;
            self.x[j] = match st {
                VarState::AtLower => lo,
                VarState::AtUpper => hi,
                _ => 0.0,
            };
        }
    }

    /// Refactor the current basis, repairing rank deficiency with logicals,
    /// then recompute the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), MilpError> {
        for _attempt in 0..=self.m + 1 {
            let cols: Vec<Vec<(usize, f64)>> = self.head.iter().map(|&j| self.column(j).collect()).collect();
            match SparseLu::factor(self.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    self.etas.clear();
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let st = resting_state(self.lower[out], self.upper[out]);
                        self.state[out] = st;
                        self.x[out] = match st {
                            VarState::AtLower => self.lower[out],
                            VarState::AtUpper => self.upper[out],
                            _ => 0.0,
                        };
                        let logical = self.n + r;
                        self.head[p] = logical;
                        self.state[logical] = VarState::Basic;
                    }
                }
            }
        }
        Err(MilpError::Numerical("basis repair did not converge".into()))
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for (r, v) in self.column(j) {
                    rhs[r] -= v * xj;
                }
            }
        }
        let xb = self.ftran_dense(rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn ftran_dense(&self, mut b: Vec<f64>) -> Vec<f64> {
        let mut x = self.lu.solve(&mut b);
        self.etas.apply(&mut x);
        x
    }

    fn ftran_column(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        for (r, v) in self.column(j) {
            b[r] += v;
        }
        self.ftran_dense(b)
    }

    fn btran(&self, mut c: Vec<f64>) -> Vec<f64> {
        self.etas.apply_transpose(&mut c);
        self.lu.solve_transpose(&mut c)
    }

    fn cost_of(&self, j: usize) -> f64 {
        if j < self.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost_of(j) };
        let mut d = c;
        for (r, v) in self.column(j) {
            d -= y[r] * v;
        }
        d
    }

    /// Phase-1 cost of basic position `p`: -1 below lower, +1 above upper.
    fn infeasibility_cost(&self, j: usize) -> f64 {
        let xj = self.x[j];
        if xj < self.lower[j] - FEAS_TOL {
            -1.0
        } else if xj > self.upper[j] + FEAS_TOL {
            1.0
        } else {
            0.0
        }
    }

    fn run(mut self) -> Result<LpResult, MilpError> {
        let limit = 50_000 + 50 * (self.n + self.m);
        let mut stall = 0usize;
        let mut verified = false;
        loop {
            if self.iterations > limit {
                return Err(MilpError::Numerical(format!("simplex iteration limit ({limit}) exceeded")));
            }
            let cb: Vec<f64> = self.head.iter().map(|&j| self.infeasibility_cost(j)).collect();
            let phase1 = cb.iter().any(|&c| c != 0.0);
            let cb = if phase1 { cb } else { self.head.iter().map(|&j| self.cost_of(j)).collect() };
            let y = self.btran(cb);
            let bland = stall >= STALL_BEFORE_BLAND;
            let dtol = if phase1 { DUAL_TOL } else { DUAL_TOL * self.cost_scale };

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + self.m {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y, phase1);
                let dir = match st {
                    VarState::AtLower if d < -dtol => 1.0,
                    VarState::AtUpper if d > dtol => -1.0,
                    VarState::Free if d.abs() > dtol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.is_none_or(|(_, _, bd)| d.abs() > bd.abs()) {
                    entering = Some((j, dir, d));
                }
            }

            let Some((q, dir, _)) = entering else {
                if !verified && self.etas.len() > 0 {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                if phase1 {
                    return Ok(self.finish(LpStatus::Infeasible));
                }
                return Ok(self.finish(LpStatus::Optimal));
            };
            verified = false;

            let alpha = self.ftran_column(q);
            let step = self.ratio_test(q, dir, &alpha, bland);
            let Some((theta, leave)) = step else {
                if phase1 {
                    return Err(MilpError::Numerical("unbounded phase-1 direction".into()));
                }
                return Ok(self.finish(LpStatus::Unbounded));
            };

            self.iterations += 1;
            if theta <= PRIMAL_TOL {
                stall += 1;
            } else {
                stall = 0;
            }
            if theta != 0.0 {
                for (p, &j) in self.head.iter().enumerate() {
                    self.x[j] -= dir * alpha[p] * theta;
                }
                self.x[q] += dir * theta;
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((p, to_upper)) => {
                    let out = self.head[p];
                    if to_upper {
                        self.state[out] = VarState::AtUpper;
                        self.x[out] = self.upper[out];
                    } else {
                        self.state[out] = VarState::AtLower;
                        self.x[out] = self.lower[out];
                    }
                    self.etas.push(p, &alpha);
                    self.head[p] = q;
                    self.state[q] = VarState::Basic;
                    if self.etas.len() >= REFACTOR_EVERY || alpha[p].abs() < 1e-7 {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    /// Returns the step length and the leaving (position, leaves-at-upper),
    /// or `None` leaving for a bound flip of the entering variable. `None`
    /// overall means the ray is unbounded.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Option<(f64, Option<(usize, bool)>)> {
        let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ptol = PIVOT_TOL * amax.max(1.0);
        // (position, relaxed ratio, exact ratio, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (p, &j) in self.head.iter().enumerate() {
            let a = alpha[p];
            if a.abs() <= ptol {
                continue;
            }
            let rate = -dir * a;
            let xj = self.x[j];
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if xj < lo - FEAS_TOL {
                if rate > 0.0 {
                    let r = (lo - xj) / rate;
                    cands.push((p, r + PRIMAL_TOL / rate, r, false));
                }
            } else if xj > hi + FEAS_TOL {
                if rate < 0.0 {
                    let r = (xj - hi) / -rate;
                    cands.push((p, r + PRIMAL_TOL / -rate, r, true));
                }
            } else if rate < 0.0 && lo.is_finite() {
                let gap = (xj - lo).max(0.0);
                cands.push((p, (gap + PRIMAL_TOL) / -rate, gap / -rate, false));
            } else if rate > 0.0 && hi.is_finite() {
                let gap = (hi - xj).max(0.0);
                cands.push((p, (gap + PRIMAL_TOL) / rate, gap / rate, true));
            }
        }
        let span = self.upper[q] - self.lower[q];

        if bland {
            let min_r = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            if span.is_finite() && span <= min_r {
                return Some((span, None));
            }
            if !min_r.is_finite() {
                return None;
            }
            let tie = min_r + PRIMAL_TOL;
            let pick = cands.iter().filter(|c| c.2 <= tie).min_by_key(|c| self.head[c.0]).copied()?;
            return Some((pick.2, Some((pick.0, pick.3))));
        }

        let theta_max = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        if span.is_finite() && span <= theta_max {
            return Some((span, None));
        }
        if !theta_max.is_finite() {
            return None;
        }
        let mut pick: Option<(usize, f64, f64, bool)> = None;
        for &c in &cands {
            if c.2 > theta_max {
                continue;
            }
            let better = match pick {
                None => true,
                Some(b) => {
                    let (ac, ab) = (alpha[c.0].abs(), alpha[b.0].abs());
                    ac > ab || (ac == ab && self.head[c.0] < self.head[b.0])
                }
            };
            if better {
                pick = Some(c);
            }
        }
        let pick = pick?;
        Some((pick.2.max(0.0), Some((pick.0, pick.3))))
    }

    fn finish(self, status: LpStatus) -> LpResult {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective: f64 = x.iter().zip(&self.lp.cost).map(|(a, c)| a * c).sum();
        let dual_bound = if status == LpStatus::Optimal {
            let cb: Vec<f64> = self.head.iter().map(|&j| self.cost_of(j)).collect();
            let y = self.btran(cb);
            let tol = DUAL_TOL * self.cost_scale * 10.0;
            let mut bound = 0.0;
            for j in 0..self.n + self.m {
                let d = if self.state[j] == VarState::Basic { 0.0 } else { self.reduced_cost(j, &y, false) };
                if d.abs() <= tol {
                    continue;
                }
                let b = if d > 0.0 { self.lower[j] } else { self.upper[j] };
                bound += d * b;
            }
            bound
        } else {
            f64::NEG_INFINITY
        };
        LpResult {
            status,
            x,
            objective: if status == LpStatus::Optimal { objective } else { f64::INFINITY },
            dual_bound,
            iterations: self.iterations,
            basis: Basis { head: self.head, state: self.state },
        }
    }
}

enum ColIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColIter::Structural(it) => it.next().copied(),
            ColIter::Logical(slot) => slot.take().map(|r| (r, -1.0)),
        }
    }
}
