//! Sparse LU factorization of simplex basis matrices.
//!
//! Right-looking Gaussian elimination with a column-count-first Markowitz
//! pivot choice and a relative threshold test. The factors are kept as a
//! sequence of row-elimination etas (`L`) and pivot rows (`U`), which is all
//! the solves need. Basis updates between refactorizations are handled by
//! the product-form etas in [`EtaFile`].

/// Entries with magnitude below this are dropped during elimination.
const DROP_TOL: f64 = 1e-14;
/// A column whose largest active entry is below this is numerically empty.
const SINGULAR_TOL: f64 = 1e-11;
/// Relative threshold for pivot acceptance within a column.
const THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
struct LowerEta {
    pivot_row: usize,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct UpperRow {
    row: usize,
    pos: usize,
    pivot: f64,
    /// (basis position, value) for positions pivoted later.
    entries: Vec<(usize, f64)>,
}

/// Rows and basis positions left without a pivot by a rank-deficient basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    pub rows: Vec<usize>,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct SparseLu {
    m: usize,
    lower: Vec<LowerEta>,
    upper: Vec<UpperRow>,
}

impl SparseLu {
    /// Factor the `m x m` matrix whose column `p` is `columns[p]` (row, value).
    pub(crate) fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut col_count = vec![0usize; m];
        for (p, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v.abs() > DROP_TOL {
                    rows[r].push((p, v));
                    col_rows[p].push(r);
                    col_count[p] += 1;
                }
            }
        }

        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut dead_cols = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::with_capacity(m);
        let mut work = vec![0.0f64; m];
        let mut mark = vec![usize::MAX; m];
        let mut stamp = 0usize;

        loop {
            // Column with the fewest active entries; ties by lowest position.
            let mut best: Option<(usize, usize)> = None;
            for p in 0..m {
                if !col_active[p] {
                    continue;
                }
                let c = col_count[p];
                if best.is_none_or(|(_, bc)| c < bc) {
                    best = Some((p, c));
                    if c <= 1 {
                        break;
                    }
                }
            }
            let Some((pc, count)) = best else { break };
            if count == 0 {
                col_active[pc] = false;
                dead_cols.push(pc);
                continue;
            }

            // Candidate rows in this column.
            let mut max_abs = 0.0f64;
            let mut cands: Vec<(usize, f64)> = Vec::with_capacity(count);
            for &r in &col_rows[pc] {
                if !row_active[r] {
                    continue;
                }
                if let Some(&(_, v)) = rows[r].iter().find(|e| e.0 == pc) {
                    max_abs = max_abs.max(v.abs());
                    cands.push((r, v));
                }
            }
            if max_abs < SINGULAR_TOL {
                col_active[pc] = false;
                dead_cols.push(pc);
                continue;
            }
            let mut pick: Option<(usize, f64, usize)> = None;
            for &(r, v) in &cands {
                if v.abs() < THRESHOLD * max_abs {
                    continue;
                }
                let len = rows[r].len();
                let better = match pick {
                    None => true,
                    Some((br, bv, bl)) => {
                        len < bl || (len == bl && v.abs() > bv.abs()) || (len == bl && v.abs() == bv.abs() && r < br)
                    }
                };
                if better {
                    pick = Some((r, v, len));
                }
            }
            let (pr, pv, _) = pick.expect("threshold admits the column maximum");

            let pivot_entries: Vec<(usize, f64)> = rows[pr].iter().copied().filter(|e| e.0 != pc).collect();

            let mut eta = LowerEta { pivot_row: pr, entries: Vec::new() };
            for &(r2, a) in &cands {
                if r2 == pr {
                    continue;
                }
                let mult = a / pv;
                eta.entries.push((r2, mult));

                stamp += 1;
                for &(p, v) in &rows[r2] {
                    if p != pc {
                        work[p] = v;
                        mark[p] = stamp;
                    }
                }
                let mut fills = Vec::new();
                for &(p, v) in &pivot_entries {
                    if mark[p] == stamp {
                        work[p] -= mult * v;
                    } else {
                        work[p] = -mult * v;
                        mark[p] = stamp;
                        fills.push(p);
                    }
                }
                let old = std::mem::take(&mut rows[r2]);
                let mut new_row = Vec::with_capacity(old.len() + fills.len());
                for (p, _) in old {
                    if p == pc {
                        continue;
                    }
                    let v = work[p];
                    if v.abs() > DROP_TOL {
                        new_row.push((p, v));
                    } else {
                        col_rows[p].retain(|&r| r != r2);
                        col_count[p] -= 1;
                    }
                }
                for p in fills {
                    let v = work[p];
                    if v.abs() > DROP_TOL {
                        new_row.push((p, v));
                        col_rows[p].push(r2);
                        col_count[p] += 1;
                    }
                }
                rows[r2] = new_row;
            }
            if !eta.entries.is_empty() {
                lower.push(eta);
            }

            for &(p, _) in &pivot_entries {
                col_count[p] -= 1;
            }
            row_active[pr] = false;
            col_active[pc] = false;
            col_rows[pc].clear();
            rows[pr].clear();
            upper.push(UpperRow { row: pr, pos: pc, pivot: pv, entries: pivot_entries });
        }

        if upper.len() < m {
            let rows_left: Vec<usize> = (0..m).filter(|&r| row_active[r]).collect();
            dead_cols.sort_unstable();
            return Err(Singular { rows: rows_left, positions: dead_cols });
        }
        Ok(SparseLu { m, lower, upper })
    }

    /// Solve `B x = b`. Input indexed by row, output by basis position.
    pub(crate) fn solve(&self, b: &mut [f64]) -> Vec<f64> {
        for eta in &self.lower {
            let xp = b[eta.pivot_row];
            if xp != 0.0 {
                for &(r, mult) in &eta.entries {
                    b[r] -= mult * xp;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for u in self.upper.iter().rev() {
            let mut acc = b[u.row];
            for &(p, v) in &u.entries {
                acc -= v * x[p];
            }
            x[u.pos] = acc / u.pivot;
        }
        x
    }

    /// Solve `B^T y = c`. Input indexed by basis position, output by row.
    pub(crate) fn solve_transpose(&self, c: &mut [f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for u in &self.upper {
            let w = c[u.pos] / u.pivot;
            y[u.row] = w;
            if w != 0.0 {
                for &(p, v) in &u.entries {
                    c[p] -= v * w;
                }
            }
        }
        for eta in self.lower.iter().rev() {
            let mut acc = 0.0;
            for &(r, mult) in &eta.entries {
                acc += mult * y[r];
            }
            y[eta.pivot_row] -= acc;
        }
        y
    }
}

/// Product-form updates applied on top of a factorization.
#[derive(Debug, Clone, Default)]
pub(crate) struct EtaFile {
    etas: Vec<(usize, f64, Vec<(usize, f64)>)>,
}

impl EtaFile {
    pub(crate) fn len(&self) -> usize {
        self.etas.len()
    }

    pub(crate) fn clear(&mut self) {
        self.etas.clear();
    }

    /// Record that basis position `p` was replaced by a column whose
    /// representation in the previous basis is `alpha` (dense, by position).
    pub(crate) fn push(&mut self, p: usize, alpha: &[f64]) {
        let entries =
            alpha.iter().enumerate().filter(|&(i, v)| i != p && v.abs() > DROP_TOL).map(|(i, &v)| (i, v)).collect();
        self.etas.push((p, alpha[p], entries));
    }

    pub(crate) fn apply(&self, x: &mut [f64]) {
        for (p, piv, entries) in &self.etas {
            let xp = x[*p] / piv;
            x[*p] = xp;
            if xp != 0.0 {
                for &(i, a) in entries {
                    x[i] -= a * xp;
                }
            }
        }
    }

    pub(crate) fn apply_transpose(&self, c: &mut [f64]) {
        for (p, piv, entries) in self.etas.iter().rev() {
            let mut acc = c[*p];
            for &(i, a) in entries {
                acc -= a * c[i];
            }
            c[*p] = acc / piv;
        }
    }
}
