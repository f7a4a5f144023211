//! Small dense revised simplex for column-generated programs
//!
//! ```text
//! minimize  c·λ   subject to  Σ_k λ_k a_k = b,  λ ≥ 0
//! ```
//!
//! with few rows (at most a dozen) and possibly thousands of columns. The
//! basis inverse is recomputed from scratch at every pivot, which is cheap at
//! this size and keeps round-off from accumulating. A previous optimal basis
//! can be passed back in: since reduced costs do not depend on `b`, it stays
//! dual feasible and the dual simplex repairs it in a few pivots. This is what
//! makes per-point convex envelopes on 2D grids affordable.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const MAX_ITER: usize = 50_000;

/// A linear program in column form. Columns are stored contiguously, `m`
/// entries each.
#[derive(Debug, Clone)]
pub struct ColumnLp {
    m: usize,
    cols: Vec<f64>,
    costs: Vec<f64>,
}

/// Optimal solution. `basis` holds column indices; indices `>= n` denote
/// artificial columns that stayed basic on redundant rows.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub basis: Vec<usize>,
    pub weights: Vec<f64>,
}

impl LpSolution {
    /// Basic columns carrying positive weight, as `(column, weight)`.
    pub fn support(&self, n: usize) -> Vec<(usize, f64)> {
        self.basis
            .iter()
            .zip(&self.weights)
            .filter(|(&k, &w)| k < n && w > 0.0)
            .map(|(&k, &w)| (k, w))
            .collect()
    }
}

impl ColumnLp {
    pub fn new(m: usize) -> Self {
        ColumnLp { m, cols: Vec::new(), costs: Vec::new() }
    }

    pub fn push(&mut self, column: &[f64], cost: f64) {
        assert_eq!(column.len(), self.m, "column length must equal row count");
        self.cols.extend_from_slice(column);
        self.costs.push(cost);
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.m..(k + 1) * self.m]
    }

    /// Solve for right-hand side `b`, optionally starting from `warm`.
    pub fn solve(&self, b: &[f64], warm: Option<&[usize]>) -> Result<LpSolution> {
        assert_eq!(b.len(), self.m);
        if let Some(basis) = warm {
            if basis.len() == self.m && basis.iter().all(|&k| k < self.len()) {
                if let Some(mut st) = State::new(self, b, basis.to_vec(), false)? {
                    if st.dual_feasible() {
                        if let Ok(true) = st.dual_simplex() {
                            return Ok(st.solution());
                        }
                    } else if st.primal_feasible() && st.primal_simplex(false).is_ok() {
                        return Ok(st.solution());
                    }
                }
            }
        }
        self.cold(b)
    }

    fn cold(&self, b: &[f64]) -> Result<LpSolution> {
        let n = self.len();
        let basis: Vec<usize> = (0..self.m).map(|i| n + i).collect();
        let mut st = State::new(self, b, basis, true)?
            .ok_or_else(|| Error::Lp("singular artificial basis".into()))?;
        st.phase_one = true;
        st.primal_simplex(true)?;
        let infeas: f64 = st
            .basis
            .iter()
            .zip(&st.x)
            .filter(|(&k, _)| k >= n)
            .map(|(_, &v)| v.abs())
            .sum();
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > 1e-9 * scale {
            return Err(Error::Lp(format!("infeasible (residual {infeas:e})")));
        }
        st.drive_out_artificials();
        st.phase_one = false;
        st.primal_simplex(false)?;
        Ok(st.solution())
    }
}

struct State<'a> {
    lp: &'a ColumnLp,
    b: Vec<f64>,
    sign: Vec<f64>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    x: Vec<f64>,
    phase_one: bool,
}

impl<'a> State<'a> {
    fn new(lp: &'a ColumnLp, b: &[f64], basis: Vec<usize>, artificial: bool) -> Result<Option<Self>> {
        let sign = if artificial {
            b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect()
        } else {
            vec![1.0; lp.m]
        };
        let mut st = State {
            lp,
            b: b.to_vec(),
            sign,
            basis,
            binv: vec![0.0; lp.m * lp.m],
            x: vec![0.0; lp.m],
            phase_one: false,
        };
        if !st.refactor() {
            return Ok(None);
        }
        Ok(Some(st))
    }

    fn n(&self) -> usize {
        self.lp.len()
    }

    fn column(&self, k: usize, out: &mut [f64]) {
        let n = self.n();
        if k < n {
            out.copy_from_slice(self.lp.col(k));
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[k - n] = self.sign[k - n];
        }
    }

    fn cost(&self, k: usize) -> f64 {
        let n = self.n();
        if self.phase_one {
            if k >= n {
                1.0
            } else {
                0.0
            }
        } else if k >= n {
            0.0
        } else {
            self.lp.costs[k]
        }
    }

    /// Recompute the basis inverse and basic values. Returns false if singular.
    fn refactor(&mut self) -> bool {
        let m = self.lp.m;
        let mut a = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (j, &k) in self.basis.iter().enumerate() {
            self.column(k, &mut col);
            for i in 0..m {
                a[i * m + j] = col[i];
            }
        }
        match invert(&a, m) {
            Some(inv) => {
                self.binv = inv;
                for i in 0..m {
                    self.x[i] = (0..m).map(|j| self.binv[i * m + j] * self.b[j]).sum();
                }
                true
            }
            None => false,
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.lp.m;
        let mut pi = vec![0.0; m];
        for (i, &k) in self.basis.iter().enumerate() {
            let c = self.cost(k);
            if c != 0.0 {
                for j in 0..m {
                    pi[j] += c * self.binv[i * m + j];
                }
            }
        }
        pi
    }

    fn cost_scale(&self) -> f64 {
        1.0 + self.lp.costs.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    fn reduced(&self, pi: &[f64], k: usize) -> f64 {
        let col = self.lp.col(k);
        self.lp.costs[k] - col.iter().zip(pi).map(|(a, p)| a * p).sum::<f64>()
    }

    fn dual_feasible(&self) -> bool {
        let pi = self.duals();
        let tol = 1e-10 * self.cost_scale();
        (0..self.n()).all(|k| self.reduced(&pi, k) >= -tol)
    }

    fn primal_feasible(&self) -> bool {
        let tol = 1e-10 * (1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        self.x.iter().all(|&v| v >= -tol)
    }

    fn pivot(&mut self, row: usize, entering: usize) -> Result<()> {
        let old = self.basis[row];
        self.basis[row] = entering;
        if !self.refactor() {
            self.basis[row] = old;
            self.refactor();
            return Err(Error::Lp("pivot produced a singular basis".into()));
        }
        Ok(())
    }

    /// Primal simplex from a primal feasible basis. Artificial columns never
    /// enter.
    fn primal_simplex(&mut self, _phase_one: bool) -> Result<()> {
        let m = self.lp.m;
        let n = self.n();
        let mut col = vec![0.0; m];
        let mut degenerate_run = 0usize;
        for _ in 0..MAX_ITER {
            let pi = self.duals();
            let scale = if self.phase_one { 1.0 } else { self.cost_scale() };
            let tol = 1e-10 * scale;
            let bland = degenerate_run > 50;
            let mut entering = None;
            let mut best = -tol;
            for k in 0..n {
                if self.basis.contains(&k) {
                    continue;
                }
                let c = self.cost(k) - self.lp.col(k).iter().zip(&pi).map(|(a, p)| a * p).sum::<f64>();
                if c < best {
                    entering = Some(k);
                    if bland {
                        break;
                    }
                    best = c;
                }
            }
            let Some(q) = entering else { return Ok(()) };
            self.column(q, &mut col);
            let u: Vec<f64> = (0..m)
                .map(|i| (0..m).map(|j| self.binv[i * m + j] * col[j]).sum())
                .collect();
            let mut leave = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                // Artificial columns left on redundant rows must not move.
                let art_stuck = !self.phase_one && self.basis[i] >= n;
                if art_stuck && u[i].abs() > PIVOT_TOL {
                    leave = Some(i);
                    best_ratio = 0.0;
                    break;
                }
                if u[i] > PIVOT_TOL {
                    let r = self.x[i].max(0.0) / u[i];
                    let better = match leave {
                        None => true,
                        Some(l) => r < best_ratio || (r == best_ratio && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        best_ratio = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Lp("unbounded".into()));
            };
            if best_ratio == 0.0 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q)?;
        }
        Err(Error::Lp("iteration limit".into()))
    }

    /// Dual simplex from a dual feasible basis. Returns false when the method
    /// stalls and the caller should restart cold.
    fn dual_simplex(&mut self) -> Result<bool> {
        let m = self.lp.m;
        let n = self.n();
        let tol_x = 1e-10 * (1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        for _ in 0..MAX_ITER {
            let mut row = None;
            let mut worst = -tol_x;
            for i in 0..m {
                if self.x[i] < worst {
                    worst = self.x[i];
                    row = Some(i);
                }
            }
            let Some(r) = row else { return Ok(true) };
            let rho: Vec<f64> = (0..m).map(|j| self.binv[r * m + j]).collect();
            let pi = self.duals();
            let mut entering = None;
            let mut best = f64::INFINITY;
            for k in 0..n {
                if self.basis.contains(&k) {
                    continue;
                }
                let alpha: f64 = self.lp.col(k).iter().zip(&rho).map(|(a, p)| a * p).sum();
                if alpha < -PIVOT_TOL {
                    let d = self.reduced(&pi, k).max(0.0);
                    let ratio = d / -alpha;
                    if ratio < best {
                        best = ratio;
                        entering = Some(k);
                    }
                }
            }
            let Some(q) = entering else {
                return Err(Error::Lp("infeasible".into()));
            };
            if self.pivot(r, q).is_err() {
                return Ok(false);
            }
        }
        Ok(false)
    }

    fn drive_out_artificials(&mut self) {
        let m = self.lp.m;
        let n = self.n();
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            let rho: Vec<f64> = (0..m).map(|j| self.binv[r * m + j]).collect();
            let cand = (0..n).filter(|k| !self.basis.contains(k)).find(|&k| {
                let alpha: f64 = self.lp.col(k).iter().zip(&rho).map(|(a, p)| a * p).sum();
                alpha.abs() > 1e-9
            });
            if let Some(q) = cand {
                let _ = self.pivot(r, q);
            }
        }
    }

    fn solution(&self) -> LpSolution {
        let n = self.n();
        let weights: Vec<f64> = self.x.iter().map(|&v| v.max(0.0)).collect();
        let value = self
            .basis
            .iter()
            .zip(&weights)
            .filter(|(&k, _)| k < n)
            .map(|(&k, &w)| self.lp.costs[k] * w)
            .sum();
        LpSolution { value, basis: self.basis.clone(), weights }
    }
}

/// Gauss–Jordan inverse with partial pivoting; `None` if singular.
pub(crate) fn invert(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut aug = vec![0.0; m * 2 * m];
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for i in 0..m {
        for j in 0..m {
            aug[i * 2 * m + j] = a[i * m + j];
        }
        aug[i * 2 * m + m + i] = 1.0;
    }
    for c in 0..m {
        let p = (c..m).max_by(|&x, &y| aug[x * 2 * m + c].abs().total_cmp(&aug[y * 2 * m + c].abs()))?;
        if aug[p * 2 * m + c].abs() <= 1e-13 * scale {
            return None;
        }
        if p != c {
            for j in 0..2 * m {
                aug.swap(p * 2 * m + j, c * 2 * m + j);
            }
        }
        let d = aug[c * 2 * m + c];
        for j in 0..2 * m {
            aug[c * 2 * m + j] /= d;
        }
        for i in 0..m {
            if i != c {
                let f = aug[i * 2 * m + c];
                if f != 0.0 {
                    for j in 0..2 * m {
                        aug[i * 2 * m + j] -= f * aug[c * 2 * m + j];
                    }
                }
            }
        }
    }
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            inv[i * m + j] = aug[i * 2 * m + m + j];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_combination_minimum() {
        // min over combinations of points 0,1,2,3 (values 0,10,10,0) reproducing 1.5
        let mut lp = ColumnLp::new(2);
        for (x, f) in [(0.0, 0.0), (1.0, 10.0), (2.0, 10.0), (3.0, 0.0)] {
            lp.push(&[1.0, x], f);
        }
        let s = lp.solve(&[1.0, 1.5], None).unwrap();
        assert!(s.value.abs() < 1e-12);
        let warm = s.basis.clone();
        let s2 = lp.solve(&[1.0, 2.0], Some(&warm)).unwrap();
        assert!(s2.value.abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut lp = ColumnLp::new(2);
        lp.push(&[1.0, 0.0], 1.0);
        lp.push(&[1.0, 1.0], 1.0);
        assert!(lp.solve(&[1.0, 2.0], None).is_err());
    }

    #[test]
    fn warm_start_matches_cold() {
        let mut lp = ColumnLp::new(3);
        let pts: Vec<(f64, f64)> = (0..7).flat_map(|i| (0..7).map(move |j| (i as f64, j as f64))).collect();
        for &(x, y) in &pts {
            let f = ((x - 3.0).powi(2) - 2.0).abs() + (y - 3.0).powi(2);
            lp.push(&[1.0, x, y], f);
        }
        let mut warm: Option<Vec<usize>> = None;
        for &(x, y) in &pts {
            let cold = lp.solve(&[1.0, x, y], None).unwrap();
            let hot = lp.solve(&[1.0, x, y], warm.as_deref()).unwrap();
            assert!((cold.value - hot.value).abs() < 1e-9, "{x} {y}");
            warm = Some(hot.basis);
        }
    }
}
