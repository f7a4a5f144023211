//! Two-point convexity gaps and the moduli built from them.
//!
//! All infima range over support pairs `(x, y)` with both values finite,
//! `d(x, y) ≥ ε` and `(x + y)/2` in the support. Pairs whose midpoint value
//! is `+∞` are skipped and counted separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{ExtReal, LpExp, NormSpec, PseudometricSpec, Support, TabFunc, MAX_DIM};
use crate::error::{invalid, precondition, Error, Result};

/// Tolerance used by convexity preconditions.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport {
    pub epsilon: f64,
    pub delta: ExtReal,
    /// Support positions of the minimizing pair.
    pub witness: Option<[usize; 2]>,
    pub witness_points: Option<[Vec<f64>; 2]>,
    pub pair_count: u64,
    /// Separated pairs skipped because the midpoint value is `+∞`.
    pub off_domain_midpoints: u64,
}

#[derive(Clone, Copy)]
struct Acc {
    best: f64,
    at: Option<(usize, usize)>,
    count: u64,
    off: u64,
}

impl Acc {
    const EMPTY: Acc = Acc { best: f64::INFINITY, at: None, count: 0, off: 0 };

    fn merge(self, o: Acc) -> Acc {
        let take_other = match (self.at, o.at) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => o.best < self.best || (o.best == self.best && b < a),
        };
        let (best, at) = if take_other { (o.best, o.at) } else { (self.best, self.at) };
        Acc { best, at, count: self.count + o.count, off: self.off + o.off }
    }
}

/// Minimum of `gap(f(x), f(y), f(m))` over admissible pairs, with a
/// deterministic first-minimum witness.
fn scan(f: &TabFunc, eps: f64, d: &PseudometricSpec, gap: impl Fn(f64, f64, f64) -> f64 + Sync) -> Acc {
    let s = f.support();
    let n = s.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = Acc::EMPTY;
            let fi = f.value(i);
            if !fi.is_finite() {
                return acc;
            }
            for j in i + 1..n {
                let fj = f.value(j);
                if !fj.is_finite() {
                    continue;
                }
                let Some(m) = s.midpoint(i, j) else { continue };
                if d.dist(s, i, j) < eps {
                    continue;
                }
                let fm = f.value(m);
                if !fm.is_finite() {
                    acc.off += 1;
                    continue;
                }
                acc.count += 1;
                let g = gap(fi, fj, fm);
                if acc.at.is_none() || g < acc.best {
                    acc.best = g;
                    acc.at = Some((i, j));
                }
            }
            acc
        })
        .reduce(|| Acc::EMPTY, Acc::merge)
}

fn report(f: &TabFunc, eps: f64, acc: Acc) -> ModulusReport {
    let s = f.support();
    ModulusReport {
        epsilon: eps,
        delta: if acc.at.is_some() { ExtReal::of(acc.best) } else { ExtReal::INF },
        witness: acc.at.map(|(i, j)| [i, j]),
        witness_points: acc.at.map(|(i, j)| [s.point(i).to_vec(), s.point(j).to_vec()]),
        pair_count: acc.count,
        off_domain_midpoints: acc.off,
    }
}

fn check_inputs(f: &TabFunc, eps: f64, d: &PseudometricSpec) -> Result<()> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    d.check_support(f.support())
}

/// `δ_f(ε)`: infimum of `(f(x) + f(y))/2 − f((x+y)/2)` over `d(x, y) ≥ ε`.
pub fn delta_modulus(f: &TabFunc, eps: f64, d: &PseudometricSpec) -> Result<ModulusReport> {
    check_inputs(f, eps, d)?;
    Ok(report(f, eps, scan(f, eps, d, |a, b, m| (a + b) / 2.0 - m)))
}

/// Quasi-convexity modulus: infimum of `max{f(x), f(y)} − f((x+y)/2)`.
pub fn quasi_modulus(f: &TabFunc, eps: f64, d: &PseudometricSpec) -> Result<ModulusReport> {
    check_inputs(f, eps, d)?;
    Ok(report(f, eps, scan(f, eps, d, |a, b, m| a.max(b) - m)))
}

/// Most negative midpoint gap over all pairs (any distance), with its
/// midpoint position. `(+∞, None)` if no pair has a midpoint.
pub fn midpoint_convexity_gap(f: &TabFunc) -> (f64, Option<usize>) {
    let d = PseudometricSpec::norm(NormSpec::LINF);
    let acc = scan(f, 0.0, &d, |a, b, m| (a + b) / 2.0 - m);
    let at = acc.at.and_then(|(i, j)| f.support().midpoint(i, j));
    (acc.best, at)
}

/// Error unless `f` is midpoint-convex within `tol` (relative to its scale).
pub fn require_convex(f: &TabFunc, tol: f64) -> Result<()> {
    let (gap, at) = midpoint_convexity_gap(f);
    let scale = 1.0 + f.values().iter().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs()));
    if gap < -tol * scale {
        return Err(Error::NotConvex { gap, at: at.unwrap_or(0) });
    }
    Ok(())
}

fn two_adic_gcd(k: &[i64; MAX_DIM]) -> u32 {
    k.iter().filter(|&&v| v != 0).map(|v| v.trailing_zeros()).min().unwrap_or(0)
}

/// Dyadic interior points of the segment `[x_i, x_j]` that are support
/// points: `(t, position)` with `t = k/2^v`.
fn dyadic_interior(s: &Support, i: usize, j: usize, out: &mut Vec<(f64, usize)>) {
    out.clear();
    let (a, b) = (s.index(i), s.index(j));
    let mut diff = [0i64; MAX_DIM];
    for t in 0..MAX_DIM {
        diff[t] = b[t] - a[t];
    }
    let v = two_adic_gcd(&diff).min(20);
    let steps = 1i64 << v;
    let mut step = [0i64; MAX_DIM];
    for t in 0..MAX_DIM {
        step[t] = diff[t] / steps;
    }
    for k in 1..steps {
        let mut p = [0i64; MAX_DIM];
        for t in 0..MAX_DIM {
            p[t] = a[t] + k * step[t];
        }
        if let Some(m) = s.find(&p) {
            out.push((k as f64 / steps as f64, m));
        }
    }
}

/// Gage `p_f(ε)` over dyadic `t` for which `(1−t)x + ty` is a support point.
/// Requires `f` midpoint-convex.
pub fn gage(f: &TabFunc, eps: f64, n: &NormSpec) -> Result<ExtReal> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    require_convex(f, CONVEXITY_TOL)?;
    Ok(ExtReal::of(gage_value(f, eps, n)))
}

/// Shared triple enumeration for the gage and the interpolation check:
/// minimum of `h(t, gap_t)` where `gap_t = (1−t)f(x) + tf(y) − f((1−t)x + ty)`.
fn gage_scan(f: &TabFunc, eps: f64, n: &NormSpec, h: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let s = f.support();
    let len = s.len();
    (0..len)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut buf = Vec::new();
            let fi = f.value(i);
            if !fi.is_finite() {
                return best;
            }
            for j in i + 1..len {
                let fj = f.value(j);
                if !fj.is_finite() {
                    continue;
                }
                let dx = s.diff(i, j);
                if n.eval(&dx[..s.dim()]) < eps {
                    continue;
                }
                dyadic_interior(s, i, j, &mut buf);
                for &(t, m) in &buf {
                    let fm = f.value(m);
                    if !fm.is_finite() {
                        continue;
                    }
                    let g = (1.0 - t) * fi + t * fj - fm;
                    best = best.min(h(t, g));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Gage with the `t(1−t)` normalization.
fn gage_value(f: &TabFunc, eps: f64, n: &NormSpec) -> f64 {
    gage_scan(f, eps, n, |t, g| g / (t * (1.0 - t)))
}

/// `Δ_Φ(x, y) = (Φ(x) + Φ(y))/2 − Φ((x+y)/2)` by coordinates.
pub fn delta_phi(phi: &TabFunc, x: &[f64], y: &[f64]) -> Result<ExtReal> {
    let s = phi.support();
    let (Some(i), Some(j)) = (s.locate(x), s.locate(y)) else {
        return precondition("points are not in the support");
    };
    delta_phi_at(phi, i, j)
}

/// `Δ_Φ` by support positions.
pub fn delta_phi_at(phi: &TabFunc, i: usize, j: usize) -> Result<ExtReal> {
    let Some(m) = phi.support().midpoint(i, j) else {
        return precondition("midpoint is not in the support");
    };
    let (a, b, c) = (phi.value(i), phi.value(j), phi.value(m));
    if !a.is_finite() || !b.is_finite() {
        return Ok(ExtReal::INF);
    }
    if !c.is_finite() {
        return precondition("midpoint value is +inf");
    }
    Ok(ExtReal::of((a + b) / 2.0 - c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub delta: ExtReal,
    pub holds: bool,
    /// `min (gap_t − 2δ·min{t, 1−t})`.
    pub worst_slack: ExtReal,
}

/// Checks `(1−t)f(x) + tf(y) − f((1−t)x + ty) ≥ 2δ_f(ε)·min{t, 1−t}` on all
/// representable dyadic triples.
pub fn check_t_interpolation(f: &TabFunc, eps: f64, n: &NormSpec) -> Result<InterpolationReport> {
    let d = PseudometricSpec::norm(n.clone());
    let delta = delta_modulus(f, eps, &d)?.delta;
    let dv = if delta.is_finite() { delta.get() } else { 0.0 };
    let slack = gage_scan(f, eps, n, |t, g| g - 2.0 * dv * t.min(1.0 - t));
    Ok(InterpolationReport { delta, holds: slack >= -CONVEXITY_TOL, worst_slack: ExtReal::of(slack) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub gage_eps: ExtReal,
    pub gage_scaled: ExtReal,
    pub holds: bool,
}

/// Checks `p_f(λε) ≥ λ²p_f(ε)` for each `λ ≥ 1`.
pub fn check_gage_scaling(f: &TabFunc, eps: f64, lambdas: &[f64], n: &NormSpec) -> Result<Vec<ScalingRow>> {
    if lambdas.iter().any(|&l| !(l >= 1.0)) {
        return invalid("every lambda must be at least 1");
    }
    let base = gage(f, eps, n)?.get();
    Ok(lambdas
        .iter()
        .map(|&l| {
            let p = gage_value(f, l * eps, n);
            let holds = p.is_infinite() || p >= l * l * base - CONVEXITY_TOL * (1.0 + p.abs());
            ScalingRow { lambda: l, gage_eps: ExtReal::of(base), gage_scaled: ExtReal::of(p), holds }
        })
        .collect())
}

/// `(r, min{f(x)/‖x‖² : ‖x‖ ≥ r})` for each radius.
pub fn coercivity_profile(f: &TabFunc, n: &NormSpec, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = f.support();
    let norms: Vec<f64> = (0..s.len()).map(|i| n.eval(s.point(i))).collect();
    let extent = norms.iter().copied().fold(0.0, f64::max);
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) || r > extent {
                return invalid(format!("radius {r} outside (0, {extent}]"));
            }
            let m = (0..s.len())
                .filter(|&i| norms[i] >= r && f.value(i).is_finite())
                .map(|i| f.value(i) / (norms[i] * norms[i]))
                .fold(f64::INFINITY, f64::min);
            Ok((r, m))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub x0: Vec<f64>,
    pub eta: f64,
    pub trials: usize,
    pub max_distance: f64,
    pub eps_prime: f64,
    pub within: bool,
}

fn argmin_tilted(f: &TabFunc, xs: &[f64]) -> usize {
    let s = f.support();
    (0..s.len())
        .filter(|&i| f.value(i).is_finite())
        .map(|i| (f.value(i) + s.point(i).iter().zip(xs).map(|(a, b)| a * b).sum::<f64>(), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|p| p.1)
        .expect("proper function")
}

fn dual(n: &NormSpec) -> Result<NormSpec> {
    match n {
        NormSpec::Lp(LpExp::One) => Ok(NormSpec::LINF),
        NormSpec::Lp(LpExp::Two) => Ok(NormSpec::L2),
        NormSpec::Lp(LpExp::Inf) => Ok(NormSpec::L1),
        _ => precondition("stability probe supports lp norms only"),
    }
}

/// Minimizes `f + x*` for `trials` seeded functionals with `‖x* − x0*‖ < η`
/// and reports the largest distance to the minimizer `x0` of `f + x0*`.
pub fn minimizer_stability_probe(
    f: &TabFunc,
    x0star: &[f64],
    eta: f64,
    trials: usize,
    seed: u64,
    eps_prime: f64,
    n: &NormSpec,
) -> Result<StabilityReport> {
    let s = f.support();
    if x0star.len() != s.dim() {
        return invalid("functional dimension differs from support dimension");
    }
    let dn = dual(n)?;
    let i0 = argmin_tilted(f, x0star);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut dir: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dn.eval(&dir);
        let r = eta * rng.gen::<f64>();
        if len > 0.0 {
            dir.iter_mut().for_each(|v| *v *= r / len);
        }
        let xs: Vec<f64> = x0star.iter().zip(&dir).map(|(a, b)| a + b).collect();
        let i = argmin_tilted(f, &xs);
        let dx = s.diff(i, i0);
        worst = worst.max(n.eval(&dx[..s.dim()]));
    }
    Ok(StabilityReport { x0: s.point(i0).to_vec(), eta, trials, max_distance: worst, eps_prime, within: worst <= eps_prime + 1e-12 })
}

/// The perturbation radius of the coercivity/stability recipe: with
/// `δ = δ_f̆(ε′)`, `x0` the minimizer of `f + x0*` and `R` the smallest
/// radius beyond which `f̆(x) − f̆(x0) ≥ ‖x − x0‖`, returns `η = δ/R`.
pub fn stability_eta(f: &TabFunc, x0star: &[f64], eps_prime: f64, n: &NormSpec) -> Result<f64> {
    let s = f.support();
    let tilt = TabFunc::from_fn(s.clone(), "tilted", |x| x.iter().zip(x0star).map(|(a, b)| a * b).sum())?;
    let values = f.values().iter().zip(tilt.values()).map(|(a, b)| a + b).collect();
    let g = TabFunc::new(s.clone(), values, "tilted")?;
    let env = crate::envelope::convex_envelope(&g)?.envelope;
    let delta = delta_modulus(&env, eps_prime, &PseudometricSpec::norm(n.clone()))?.delta.get();
    if !(delta > 0.0) {
        return precondition("envelope modulus at eps' is not positive");
    }
    let i0 = argmin_tilted(&env, &vec![0.0; s.dim()]);
    let mut r: f64 = 0.0;
    let mut step = f64::INFINITY;
    for i in 0..s.len() {
        if i == i0 || !env.value(i).is_finite() {
            continue;
        }
        let dx = s.diff(i, i0);
        let dist = n.eval(&dx[..s.dim()]);
        step = step.min(dist);
        if env.value(i) - env.value(i0) < dist {
            r = r.max(dist);
        }
    }
    let r = if r > 0.0 { r } else { step };
    Ok(delta / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_dyadic_grid;
    use std::sync::Arc;

    fn line(lo: f64, hi: f64, step: f64) -> Arc<Support> {
        let n = ((hi - lo) / step).round() as usize + 1;
        Arc::new(Support::grid(&make_dyadic_grid(&[lo], step, &[n]).unwrap()))
    }

    fn l2() -> PseudometricSpec {
        PseudometricSpec::norm(NormSpec::L2)
    }

    #[test]
    fn square_modulus_is_quarter_eps_squared() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 64.0), "sq", |x| x[0] * x[0]).unwrap();
        let r = delta_modulus(&f, 0.5, &l2()).unwrap();
        assert!((r.delta.get() - 1.0 / 16.0).abs() < 1e-12);
        let [i, j] = r.witness.unwrap();
        assert!((f.support().point(i)[0] - f.support().point(j)[0]).abs() >= 0.5);
    }

    #[test]
    fn linear_modulus_is_zero() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 16.0), "lin", |x| x[0]).unwrap();
        assert_eq!(delta_modulus(&f, 0.25, &l2()).unwrap().delta.get(), 0.0);
        assert_eq!(quasi_modulus(&TabFunc::from_fn(line(0.0, 1.0, 0.25), "c", |_| 1.0).unwrap(), 0.5, &l2()).unwrap().delta.get(), 0.0);
    }

    #[test]
    fn empty_pair_set_gives_infinity() {
        let f = TabFunc::from_fn(line(0.0, 1.0, 0.25), "sq", |x| x[0] * x[0]).unwrap();
        let r = delta_modulus(&f, 3.0, &l2()).unwrap();
        assert_eq!(r.delta, ExtReal::INF);
        assert_eq!(r.pair_count, 0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn gage_of_square_and_linear() {
        let s = line(-2.0, 2.0, 1.0 / 8.0);
        let sq = TabFunc::from_fn(s.clone(), "sq", |x| x[0] * x[0]).unwrap();
        let p = gage(&sq, 1.0, &NormSpec::L2).unwrap().get();
        assert!((p - 1.0).abs() < 1e-9, "{p}");
        let lin = TabFunc::from_fn(s, "lin", |x| 2.0 * x[0]).unwrap();
        assert!(gage(&lin, 1.0, &NormSpec::L2).unwrap().get().abs() < 1e-12);
    }

    #[test]
    fn gage_rejects_nonconvex() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 0.125), "bump", |x| (x[0] * x[0] - 0.25).abs()).unwrap();
        assert!(matches!(gage(&f, 0.5, &NormSpec::L2), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn delta_phi_examples() {
        let f = TabFunc::from_fn(line(0.0, 1.0, 0.5), "sq", |x| x[0] * x[0]).unwrap();
        assert_eq!(delta_phi(&f, &[0.0], &[1.0]).unwrap().get(), 0.25);
        assert_eq!(delta_phi(&f, &[0.5], &[0.5]).unwrap().get(), 0.0);
        let g = make_dyadic_grid(&[0.0, 0.0], 0.5, &[3, 3]).unwrap();
        let phi = TabFunc::from_fn(Arc::new(Support::grid(&g)), "linf2", |x| NormSpec::LINF.eval(x).powi(2)).unwrap();
        assert_eq!(delta_phi(&phi, &[1.0, 0.0], &[0.0, 1.0]).unwrap().get(), 0.75);
    }

    #[test]
    fn interpolation_and_scaling_for_square() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 32.0), "sq", |x| x[0] * x[0]).unwrap();
        assert!(check_t_interpolation(&f, 0.5, &NormSpec::L2).unwrap().holds);
        let rows = check_gage_scaling(&f, 0.5, &[1.0, 2.0], &NormSpec::L2).unwrap();
        assert!(rows.iter().all(|r| r.holds));
        assert!((rows[1].gage_scaled.get() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coercivity_of_quadratics() {
        let s = line(-8.0, 8.0, 0.25);
        let sq = TabFunc::from_fn(s.clone(), "sq", |x| x[0] * x[0]).unwrap();
        for (_, v) in coercivity_profile(&sq, &NormSpec::L2, &[1.0, 4.0, 8.0]).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let lin = TabFunc::from_fn(s, "lin", |x| x[0]).unwrap();
        let p = coercivity_profile(&lin, &NormSpec::L2, &[8.0]).unwrap();
        assert!(p[0].1 < 0.0);
        assert!(coercivity_profile(&sq, &NormSpec::L2, &[9.0]).is_err());
    }

    #[test]
    fn stability_for_square() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 64.0), "sq", |x| x[0] * x[0]).unwrap();
        let r = minimizer_stability_probe(&f, &[0.0], 0.1, 200, 7, 0.1, &NormSpec::L2).unwrap();
        assert!(r.max_distance <= 0.05 + 1.0 / 64.0);
        let r0 = minimizer_stability_probe(&f, &[0.0], 0.0, 5, 7, 0.1, &NormSpec::L2).unwrap();
        assert_eq!(r0.max_distance, 0.0);
    }
}
