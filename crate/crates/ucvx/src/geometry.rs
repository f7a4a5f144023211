//! Planar hulls and gauges (Minkowski functionals) of finite point clouds.

use crate::error::{invalid, precondition, Result};
use crate::lp::ColumnLp;

/// Cross product of `(b − a)` and `(c − a)`.
pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Counter-clockwise convex hull by Andrew's monotone chain, collinear points
/// dropped. Returns indices into `pts`.
pub fn hull_2d(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i][0].total_cmp(&pts[j][0]).then(pts[i][1].total_cmp(&pts[j][1])));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && orient(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && orient(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minkowski functional of the convex hull of a finite point cloud that
/// contains the origin in its interior.
#[derive(Debug, Clone)]
pub struct Gauge {
    dim: usize,
    kind: GaugeKind,
}

#[derive(Debug, Clone)]
enum GaugeKind {
    /// Rows `a` with hull = {x : a·x ≤ 1}.
    Facets(Vec<[f64; 3]>),
    /// Generic evaluation by linear programming (3D clouds).
    Lp(ColumnLp),
}

impl Gauge {
    /// Build the gauge of `conv(points)`. Fails if the origin is not an
    /// interior point.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Gauge> {
        let Some(first) = points.first() else {
            return invalid("gauge of an empty point set");
        };
        let dim = first.len();
        if points.iter().any(|p| p.len() != dim) {
            return invalid("gauge points have mixed dimensions");
        }
        match dim {
            1 => {
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                if !(hi > 0.0 && lo < 0.0) {
                    return precondition("origin is not interior to the point hull");
                }
                Ok(Gauge { dim, kind: GaugeKind::Facets(vec![[1.0 / hi, 0.0, 0.0], [1.0 / lo, 0.0, 0.0]]) })
            }
            2 => {
                let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
                let h = hull_2d(&pts);
                if h.len() < 3 {
                    return precondition("degenerate point hull");
                }
                let scale = pts.iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs()));
                let mut rows = Vec::with_capacity(h.len());
                for k in 0..h.len() {
                    let a = pts[h[k]];
                    let b = pts[h[(k + 1) % h.len()]];
                    // outward normal of a counter-clockwise edge
                    let n = [b[1] - a[1], a[0] - b[0]];
                    let off = n[0] * a[0] + n[1] * a[1];
                    let nn = (n[0] * n[0] + n[1] * n[1]).sqrt();
                    if off <= 1e-12 * nn * scale.max(1.0) {
                        return precondition("origin is not interior to the point hull");
                    }
                    rows.push([n[0] / off, n[1] / off, 0.0]);
                }
                Ok(Gauge { dim, kind: GaugeKind::Facets(rows) })
            }
            3 => {
                let mut lp = ColumnLp::new(3);
                for p in points {
                    lp.push(p, 1.0);
                }
                let g = Gauge { dim, kind: GaugeKind::Lp(lp) };
                for e in 0..3 {
                    for s in [1.0, -1.0] {
                        let mut x = [0.0; 3];
                        x[e] = s;
                        if !g.eval(&x).is_finite() {
                            return precondition("origin is not interior to the point hull");
                        }
                    }
                }
                Ok(g)
            }
            _ => invalid("dimension above 3"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `min{t ≥ 0 : x ∈ t·conv(points)}`; `+∞` only if the LP is infeasible.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Facets(rows) => rows
                .iter()
                .map(|a| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>())
                .fold(0.0, f64::max),
            GaugeKind::Lp(lp) => {
                if x.iter().all(|&v| v == 0.0) {
                    return 0.0;
                }
                lp.solve(x, None).map(|s| s.value).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Facet rows `a` (hull = {a·x ≤ 1}) when available.
    pub fn facets(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            GaugeKind::Facets(rows) => Some(rows.iter().map(|r| r[..self.dim].to_vec()).collect()),
            GaugeKind::Lp(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gauge_is_sup_norm() {
        let v = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]];
        let g = Gauge::from_points(&v).unwrap();
        assert_eq!(g.eval(&[2.0, 0.0]), 2.0);
        assert_eq!(g.eval(&[3.0, -4.0]), 4.0);
    }

    #[test]
    fn octahedron_gauge_is_l1() {
        let mut v = Vec::new();
        for e in 0..3 {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; 3];
                p[e] = s;
                v.push(p);
            }
        }
        let g = Gauge::from_points(&v).unwrap();
        assert!((g.eval(&[1.0, -2.0, 0.5]) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn origin_on_boundary_rejected() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(Gauge::from_points(&v).is_err());
    }
}
