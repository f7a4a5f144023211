//! Difference-of-convex approximation through the Cepedello kernel.
//!
//! For a function `f` on a symmetric set `C` the pipeline builds `Φ` from
//! the half-derivation of the pullback metric `|f(x) − f(y)|`, renorms `Φ`
//! into a composite norm `|||·|||` with constant `ζ`, and sets
//!
//! ```text
//! g(x) = min_{y ∈ C} f(y) + c·Δ_{|||·|||²}(x, y),   c = 2M/ζ,
//! ```
//!
//! with `M = osc_C f`. Then `g = u − v` with `u = (c/2)|||x|||²` and
//! `v(x) = max_y c|||(x+y)/2|||² − (c/2)|||y|||² − f(y)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dentability::{dz_index, uc_function_from_derivation, Dz, HalfMode};
use crate::domain::{NormSpec, PseudometricSpec, Support, TabFunc};
use crate::error::{invalid, precondition, Error, Result};
use crate::moduli::midpoint_convexity_gap;
use crate::renorming::{renorm_from_function, CompositeNorm, ImplicationScan};

#[derive(Debug, Clone)]
pub struct DcDecomp {
    pub u: TabFunc,
    pub v: TabFunc,
    /// `u − v`, as stored.
    pub g: TabFunc,
}

#[derive(Debug, Clone, Serialize)]
pub struct DcReport {
    pub eps: f64,
    /// `max_C |f − g|`.
    pub err: f64,
    pub c: f64,
    /// Implication constant used for `c`: the smallest `Δ_{|||·|||²}` over
    /// scanned pairs with `Δ_Φ ≥ δ`, or `zeta_theory` when none trigger.
    pub zeta: f64,
    pub zeta_theory: f64,
    pub phi_delta: f64,
    pub half_dz: usize,
    pub components: usize,
    pub renorm_scan: ImplicationScan,
    /// Most negative midpoint gaps of `u` and `v`.
    pub u_convexity_gap: f64,
    pub v_convexity_gap: f64,
    /// Pairs `y ∈ A(x)` checked, and those with `f(x) − f(y) ∉ [0, eps]`.
    pub waypoint_pairs: u64,
    pub waypoint_violations: u64,
    /// Largest `|min over A(x) − min over C|`; zero by construction.
    pub restricted_min_gap: f64,
    /// Largest `|(u − v) − direct minimum|`.
    pub split_roundoff: f64,
}

#[derive(Debug, Clone)]
pub struct DcResult {
    pub decomp: DcDecomp,
    pub norm: CompositeNorm,
    pub report: DcReport,
}

/// Midpoint-convexity check tolerance, relative to the function scale.
fn convexity_gap(f: &TabFunc) -> f64 {
    let (gap, _) = midpoint_convexity_gap(f);
    gap / (1.0 + f.values().iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Runs the Cepedello-kernel pipeline on `f` restricted to `c` (all finite
/// points when empty). `C` must be symmetric about the origin.
pub fn cepedello_approx(f: &TabFunc, c: &[usize], eps: f64, dict: &[Vec<f64>], cap: usize, mode: HalfMode) -> Result<DcResult> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let c: Vec<usize> = if c.is_empty() { f.dom() } else { c.to_vec() };
    let fc = f.restrict(&c)?;
    let sc = fc.support().clone();
    if (0..sc.len()).any(|i| sc.negation(i).is_none()) {
        return precondition("C must be symmetric about the origin");
    }
    let dprime = PseudometricSpec::pullback_fn(&fc)?;
    let all: Vec<usize> = (0..sc.len()).collect();
    let uc = match uc_function_from_derivation(&sc, &all, &dprime, eps, dict, cap, mode) {
        Err(Error::CapExceeded(m)) => return Err(Error::CapExceeded(format!("not finitely dentable at requested scale: {m}"))),
        r => r?,
    };
    // positions of the derivation's support coincide with `all`
    debug_assert_eq!(uc.positions, all);
    let phi_delta = if uc.delta.is_finite() { uc.delta.get() } else { 1.0 };
    let r = renorm_from_function(&uc.phi, &[], phi_delta, &NormSpec::L2)?;
    let m = fc.osc();
    let zeta_theory = r.norm.zeta;
    let zeta = if r.scan.violations == 0 && r.scan.triggered > 0 { r.scan.min_norm_gap.max(zeta_theory) } else { zeta_theory };
    let cc = if m > 0.0 { 2.0 * m / zeta } else { 1.0 };
    let n = sc.len();
    let q: Vec<f64> = (0..n).map(|i| r.norm.square(sc.point(i))).collect();
    let fv = fc.values();
    let dim = sc.dim();
    struct Row {
        u: f64,
        v: f64,
        direct: f64,
        restricted: f64,
        pairs: u64,
        viol: u64,
    }
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = sc.point(i);
            let mut v = f64::NEG_INFINITY;
            let mut direct = f64::INFINITY;
            let mut restricted = f64::INFINITY;
            let (mut pairs, mut viol) = (0u64, 0u64);
            let mut mid = vec![0.0; dim];
            for j in 0..n {
                let y = sc.point(j);
                for a in 0..dim {
                    mid[a] = 0.5 * (x[a] + y[a]);
                }
                let qm = r.norm.square(&mid);
                v = v.max(cc * qm - 0.5 * cc * q[j] - fv[j]);
                let val = fv[j] + cc * (0.5 * (q[i] + q[j]) - qm);
                direct = direct.min(val);
                if val <= fv[i] {
                    restricted = restricted.min(val);
                    pairs += 1;
                    let drop = fv[i] - fv[j];
                    if !(drop >= -1e-12 && drop <= eps + 1e-9) {
                        viol += 1;
                    }
                }
            }
            Row { u: 0.5 * cc * q[i], v, direct, restricted, pairs, viol }
        })
        .collect();
    let u = TabFunc::new(sc.clone(), rows.iter().map(|r| r.u).collect(), "u")?;
    let v = TabFunc::new(sc.clone(), rows.iter().map(|r| r.v).collect(), "v")?;
    let g = TabFunc::new(sc.clone(), rows.iter().map(|r| r.u - r.v).collect(), "g")?;
    let err = dc_error_report(&fc, &g)?;
    let report = DcReport {
        eps,
        err,
        c: cc,
        zeta,
        zeta_theory,
        phi_delta,
        half_dz: uc.half_dz,
        components: r.norm.components.len(),
        renorm_scan: r.scan.clone(),
        u_convexity_gap: convexity_gap(&u),
        v_convexity_gap: convexity_gap(&v),
        waypoint_pairs: rows.iter().map(|r| r.pairs).sum(),
        waypoint_violations: rows.iter().map(|r| r.viol).sum(),
        restricted_min_gap: rows.iter().map(|r| (r.restricted - r.direct).abs()).fold(0.0, f64::max),
        split_roundoff: rows.iter().zip(g.values()).map(|(r, gv)| (gv - r.direct).abs()).fold(0.0, f64::max),
    };
    Ok(DcResult { decomp: DcDecomp { u, v, g }, norm: r.norm, report })
}

/// `max |f − g|` over the common support.
pub fn dc_error_report(f: &TabFunc, g: &TabFunc) -> Result<f64> {
    if !f.support().same_as(g.support()) {
        return invalid("f and g must share a support");
    }
    Ok(f.values().iter().zip(g.values()).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DcBounds {
    /// Threshold for `Dz(f, ε)` within the cap.
    pub eps1: Bracket,
    /// `[0, smallest achieved error]` over pipeline runs.
    pub eps2: Bracket,
    /// Requested `eps` at which the pipeline was run, with the error achieved
    /// or `None` when the dentability stage exceeded the cap.
    pub runs: Vec<(f64, Option<f64>)>,
    /// Some `e1 ∈ eps1`, `e2 ∈ eps2` satisfy `e1/2 ≤ e2 ≤ 2·e1`.
    pub holds: bool,
}

/// Brackets `ε₁` (finite dentability index within `cap`) and `ε₂`
/// (achieved DC approximation error) by `steps` bisection steps on
/// `[0, osc f]`, and checks `ε₁/2 ≤ ε₂ ≤ 2ε₁` on the brackets.
pub fn dc_bounds_check(f: &TabFunc, c: &[usize], dict: &[Vec<f64>], cap: usize, steps: usize) -> Result<DcBounds> {
    let c: Vec<usize> = if c.is_empty() { f.dom() } else { c.to_vec() };
    let fc = f.restrict(&c)?;
    let sc: Arc<Support> = fc.support().clone();
    let d = PseudometricSpec::pullback_fn(&fc)?;
    let all: Vec<usize> = (0..sc.len()).collect();
    let osc = fc.osc();
    let finite = |e: f64| -> Result<bool> { Ok(matches!(dz_index(&sc, &all, &d, e, dict, cap)?.dz, Dz::Finite(_))) };
    let eps1 = if osc == 0.0 || finite(0.0)? {
        Bracket { lo: 0.0, hi: 0.0 }
    } else {
        let (mut lo, mut hi) = (0.0, osc);
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            if finite(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Bracket { lo, hi }
    };
    let mut runs = Vec::new();
    let mut best = f64::INFINITY;
    if osc == 0.0 {
        best = 0.0;
    } else {
        let (mut lo, mut hi) = (0.0, osc);
        let probe = |e: f64, runs: &mut Vec<(f64, Option<f64>)>| -> Result<Option<f64>> {
            let r = match cepedello_approx(&fc, &[], e, dict, cap, HalfMode::Prose) {
                Ok(r) => Some(r.report.err),
                Err(Error::CapExceeded(_)) => None,
                Err(e) => return Err(e),
            };
            runs.push((e, r));
            Ok(r)
        };
        if let Some(e) = probe(hi, &mut runs)? {
            best = best.min(e);
        }
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            match probe(mid, &mut runs)? {
                Some(e) => {
                    best = best.min(e);
                    hi = mid;
                }
                None => lo = mid,
            }
        }
    }
    let eps2 = Bracket { lo: 0.0, hi: best };
    let holds = eps1.lo / 2.0 <= eps2.hi + 1e-12 && eps2.lo <= 2.0 * eps1.hi + 1e-12;
    Ok(DcBounds { eps1, eps2, runs, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_dyadic_grid;

    fn line() -> Arc<Support> {
        Arc::new(Support::grid(&make_dyadic_grid(&[-1.0], 1.0 / 32.0, &[65]).unwrap()))
    }

    #[test]
    fn constant_is_reproduced() {
        let f = TabFunc::from_fn(line(), "one", |_| 1.0).unwrap();
        let r = cepedello_approx(&f, &[], 0.2, &[vec![1.0], vec![-1.0]], 64, HalfMode::Prose).unwrap();
        assert!(r.report.err <= 1e-12, "{}", r.report.err);
    }

    #[test]
    fn example_function_within_eps() {
        let f = TabFunc::from_fn(line(), "ex", |x| (x[0] * x[0] - 1.0 / 9.0).abs()).unwrap();
        let r = cepedello_approx(&f, &[], 0.2, &[vec![1.0], vec![-1.0]], 64, HalfMode::Prose).unwrap();
        assert!(r.report.err <= 0.2 + 1e-6, "{:?}", r.report);
        assert_eq!(r.report.waypoint_violations, 0);
        assert!(r.report.u_convexity_gap >= -1e-9 && r.report.v_convexity_gap >= -1e-9);
        for i in 0..f.len() {
            assert_eq!(r.decomp.g.value(i), r.decomp.u.value(i) - r.decomp.v.value(i));
        }
    }

    #[test]
    fn bounds_sandwich() {
        let f = TabFunc::from_fn(line(), "ex", |x| (x[0] * x[0] - 1.0 / 9.0).abs()).unwrap();
        let b = dc_bounds_check(&f, &[], &[vec![1.0], vec![-1.0]], 64, 4).unwrap();
        assert!(b.holds);
    }
}
