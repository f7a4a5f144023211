//! Sublevel-set renormings.
//!
//! A convex function `f ≥ 0` with a strong minimum at the origin yields a
//! family of gauges `‖·‖_r` of its sublevel sets `{f ≤ r}`. Summing the
//! squares of finitely many of them gives a norm whose square has a
//! quantitative midpoint gap wherever `f` does.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{DyadicGrid, Norm, NormSpec, PseudometricSpec, Support, TabFunc};
use crate::envelope::convex_envelope;
use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{hull_2d, Gauge};
use crate::moduli::{delta_modulus, require_convex, CONVEXITY_TOL};
use crate::transforms::{exp_transform, lipschitz_regularization, series_combine};
use crate::trees::height_function;

const BISECT_STEPS: usize = 48;

/// Boundary point of the unit ball of `n` in direction `cos θ·a + sin θ·b`.
fn sphere_point<N: Norm + ?Sized>(n: &N, a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| c * x + s * y).collect();
    let r = n.norm(&v);
    v.iter().map(|t| t / r).collect()
}

fn gap_at<N: Norm + ?Sized>(n: &N, x: &[f64], y: &[f64]) -> f64 {
    let m: Vec<f64> = x.iter().zip(y).map(|(u, v)| 0.5 * (u + v)).collect();
    1.0 - n.norm(&m)
}

/// Smallest midpoint gap in the plane through `a` and `b` at separation
/// `eps`, starting from the sphere point along `a`. In a normed plane the
/// distance from a fixed sphere point grows monotonically along the sphere
/// up to the antipode, so the crossing is found by bisection in both
/// directions.
fn plane_gap<N: Norm + ?Sized>(n: &N, a: &[f64], b: &[f64], eps: f64) -> f64 {
    let x = sphere_point(n, a, b, 0.0);
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (lo + hi);
            let y = sphere_point(n, a, b, sign * mid);
            let d: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u - v).collect();
            if n.norm(&d) >= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let y = sphere_point(n, a, b, sign * hi);
        best = best.min(gap_at(n, &x, &y));
    }
    best
}

/// Sampled estimate of the modulus of convexity
/// `inf{1 − ‖(x+y)/2‖ : ‖x‖ = ‖y‖ = 1, ‖x − y‖ ≥ eps}`.
///
/// In the plane, `samples` rotated equally spaced directions serve as base
/// points; in 3D they are the points of a Fibonacci sphere, each combined
/// with 16 tangent directions. The rotation is drawn from `seed`.
pub fn norm_modulus<N: Norm + Sync + ?Sized>(n: &N, dim: usize, eps: f64, samples: usize, seed: u64) -> f64 {
    if !(eps > 0.0) {
        return 0.0;
    }
    if eps > 2.0 {
        return f64::INFINITY;
    }
    let samples = samples.max(8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dim {
        1 => 1.0,
        2 => {
            let rot: f64 = rng.gen_range(0.0..2.0 * PI / samples as f64);
            let tangent = (0..samples)
                .into_par_iter()
                .map(|k| {
                    let t = rot + 2.0 * PI * k as f64 / samples as f64;
                    plane_gap(n, &[t.cos(), t.sin()], &[-t.sin(), t.cos()], eps)
                })
                .reduce(|| f64::INFINITY, f64::min);
            // A coarse all-pairs pass guards against non-monotone round-off.
            let m = samples.min(256);
            let pts: Vec<Vec<f64>> = (0..m).map(|k| sphere_point(n, &[1.0, 0.0], &[0.0, 1.0], rot + 2.0 * PI * k as f64 / m as f64)).collect();
            let pairs = (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut b = f64::INFINITY;
                    for j in i + 1..m {
                        let d = [pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]];
                        if n.norm(&d) >= eps {
                            b = b.min(gap_at(n, &pts[i], &pts[j]));
                        }
                    }
                    b
                })
                .reduce(|| f64::INFINITY, f64::min);
            tangent.min(pairs).max(0.0)
        }
        3 => {
            let spin: f64 = rng.gen_range(0.0..2.0 * PI);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..samples)
                .into_par_iter()
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / samples as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = spin + golden * k as f64;
                    let a = [r * phi.cos(), r * phi.sin(), z];
                    // orthonormal tangent frame at a
                    let h = if a[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
                    let mut u = [a[1] * h[2] - a[2] * h[1], a[2] * h[0] - a[0] * h[2], a[0] * h[1] - a[1] * h[0]];
                    let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                    u.iter_mut().for_each(|t| *t /= un);
                    let v = [a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]];
                    (0..16)
                        .map(|j| {
                            let t = PI * j as f64 / 16.0;
                            let b: Vec<f64> = (0..3).map(|c| t.cos() * u[c] + t.sin() * v[c]).collect();
                            plane_gap(n, &a, &b, eps)
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .reduce(|| f64::INFINITY, f64::min)
                .max(0.0)
        }
        _ => f64::NAN,
    }
}

/// Deterministic directions on the unit sphere of `n`.
pub fn sphere_samples<N: Norm + ?Sized>(n: &N, dim: usize, count: usize) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count).map(|k| 2.0 * PI * (k as f64 + 0.5) / count as f64).map(|t| vec![t.cos(), t.sin()]).collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let p = golden * k as f64;
                    vec![r * p.cos(), r * p.sin(), z]
                })
                .collect()
        }
    };
    raw.into_iter()
        .map(|v| {
            let r = n.norm(&v);
            v.into_iter().map(|t| t / r).collect()
        })
        .collect()
}

/// Gauge of the hull of a sublevel set `{f ≤ level}`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetGauge {
    pub level: f64,
    /// Points spanning the hull (hull vertices in 1D and 2D).
    pub vertices: Vec<Vec<f64>>,
    #[serde(skip)]
    gauge: Gauge,
}

impl LevelSetGauge {
    /// Gauge of the hull of `points`; fails if the origin is not interior.
    pub fn from_points(level: f64, points: Vec<Vec<f64>>) -> Result<LevelSetGauge> {
        let gauge = Gauge::from_points(&points)?;
        let vertices = match points.first().map(Vec::len) {
            Some(1) => {
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                vec![vec![lo], vec![hi]]
            }
            Some(2) => {
                let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
                hull_2d(&pts).into_iter().map(|i| points[i].clone()).collect()
            }
            _ => points,
        };
        Ok(LevelSetGauge { level, vertices, gauge })
    }

    /// Gauge of `{f ≤ level}` over the finite part of `f`.
    pub fn of_sublevel(f: &TabFunc, level: f64) -> Result<LevelSetGauge> {
        let s = f.support();
        let pts: Vec<Vec<f64>> = (0..s.len()).filter(|&i| f.value(i) <= level).map(|i| s.point(i).to_vec()).collect();
        if pts.is_empty() {
            return precondition(format!("sublevel set at {level} is empty"));
        }
        LevelSetGauge::from_points(level, pts)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.gauge.eval(x)
    }
}

impl Norm for LevelSetGauge {
    fn norm(&self, x: &[f64]) -> f64 {
        self.gauge.eval(x)
    }
}

/// `|||x|||² = w_0·N(x)² + Σ_j w_j ‖x‖_j²`.
#[derive(Debug, Clone, Serialize)]
pub struct CompositeNorm {
    pub dim: usize,
    pub components: Vec<LevelSetGauge>,
    pub weights: Vec<f64>,
    /// Ambient norm term and its weight.
    #[serde(serialize_with = "ser_base")]
    pub base: Option<(NormSpec, f64)>,
    pub lambda: f64,
    pub zeta: f64,
    /// `(min, max)` of `|||x||| / N(x)` over sampled directions.
    pub equivalence: (f64, f64),
}

fn ser_base<S: serde::Serializer>(b: &Option<(NormSpec, f64)>, s: S) -> std::result::Result<S::Ok, S::Error> {
    b.as_ref().map(|(n, w)| serde_json::json!({"norm": n.to_json(), "weight": w})).serialize(s)
}

impl CompositeNorm {
    pub fn square(&self, x: &[f64]) -> f64 {
        let mut q: f64 = self.components.iter().zip(&self.weights).map(|(g, w)| w * g.eval(x).powi(2)).sum();
        if let Some((n, w)) = &self.base {
            q += w * n.eval(x).powi(2);
        }
        q
    }

    /// Norm with a single gauge component.
    pub fn single(g: LevelSetGauge, reference: &NormSpec) -> CompositeNorm {
        let dim = g.gauge.dim();
        let mut c = CompositeNorm { dim, components: vec![g], weights: vec![1.0], base: None, lambda: f64::NAN, zeta: f64::NAN, equivalence: (0.0, 0.0) };
        c.equivalence = equivalence(&c, reference, dim);
        c
    }

    /// Sup of `| |||x||| − N(x) |` over sampled `N`-unit directions.
    pub fn distance_to(&self, n: &NormSpec, samples: usize) -> f64 {
        sphere_samples(n, self.dim, samples).iter().map(|x| (self.norm(x) - 1.0).abs()).fold(0.0, f64::max)
    }
}

impl Norm for CompositeNorm {
    fn norm(&self, x: &[f64]) -> f64 {
        self.square(x).sqrt()
    }
}

fn equivalence<N: Norm + ?Sized>(c: &N, n: &NormSpec, dim: usize) -> (f64, f64) {
    sphere_samples(n, dim, 512).iter().map(|x| c.norm(x)).fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `ζ = (λ^{1/2} − λ)²/4`.
pub fn zeta_of(lambda: f64) -> f64 {
    (lambda.sqrt() - lambda).powi(2) / 4.0
}

/// Result of the pairwise implication scan
/// `Δ_f(x, y) ≥ δ ⇒ Δ_{|||·|||²}(x, y) ≥ ζ`.
#[derive(Debug, Clone, Serialize)]
pub struct ImplicationScan {
    pub pairs: u64,
    /// Pairs with `Δ_f ≥ δ`.
    pub triggered: u64,
    /// Triggered pairs with `Δ_{|||·|||²} < ζ`.
    pub violations: u64,
    /// Smallest `Δ_{|||·|||²}` over triggered pairs.
    pub min_norm_gap: f64,
    /// Triggered pairs with no component `j` such that both points have
    /// gauge `≤ 1` and the midpoint has gauge `≤ λ`.
    pub core_lemma_failures: u64,
    pub witness: Option<[Vec<f64>; 2]>,
}

impl ImplicationScan {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormResult {
    pub norm: CompositeNorm,
    pub delta: f64,
    /// Pairwise Lipschitz constant of the symmetrized function on `C ∩ −C`.
    pub lipschitz: f64,
    pub eta: f64,
    /// `sup N` over `C ∩ −C`.
    pub n_c: f64,
    /// `(1 + η/N_C)^{-1}`.
    pub lambda_lipschitz: f64,
    /// Largest `‖x‖_r` over `f_s(x) ≤ r − δ` and partition levels `r`.
    pub lambda_containment: f64,
    /// First partition level of each component; levels with equal sublevel
    /// sets are merged into one component weighted by their count.
    pub levels: Vec<f64>,
    pub partition_len: usize,
    /// The partition stopped at `MAX_LEVELS` before reaching `sup f_s`.
    pub truncated: bool,
    /// Scan for the input function on `C ∩ −C`.
    pub scan: ImplicationScan,
    /// Scan for the symmetrized function.
    pub scan_symmetrized: ImplicationScan,
}

/// Thresholds strictly below which two floats count as "less".
const SCAN_TOL: f64 = 1e-12;

fn implication_scan(s: &Support, fvals: &[f64], gauges: &[Vec<f64>], q: &[f64], delta: f64, lambda: f64, zeta: f64) -> ImplicationScan {
    let n = s.len();
    #[derive(Clone)]
    struct Acc {
        pairs: u64,
        trig: u64,
        viol: u64,
        min_gap: f64,
        core: u64,
        wit: Option<(usize, usize)>,
    }
    let empty = Acc { pairs: 0, trig: 0, viol: 0, min_gap: f64::INFINITY, core: 0, wit: None };
    let acc = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut a = empty.clone();
            for j in i + 1..n {
                let Some(m) = s.midpoint(i, j) else { continue };
                a.pairs += 1;
                let df = 0.5 * (fvals[i] + fvals[j]) - fvals[m];
                if df < delta - SCAN_TOL * (1.0 + delta) {
                    continue;
                }
                a.trig += 1;
                let dq = 0.5 * (q[i] + q[j]) - q[m];
                a.min_gap = a.min_gap.min(dq);
                if dq < zeta - SCAN_TOL {
                    a.viol += 1;
                    if a.wit.is_none() {
                        a.wit = Some((i, j));
                    }
                }
                let lemma = gauges.iter().any(|g| g[i] <= 1.0 + 1e-10 && g[j] <= 1.0 + 1e-10 && g[m] <= lambda + 1e-10);
                if !lemma {
                    a.core += 1;
                }
            }
            a
        })
        .reduce(
            || empty.clone(),
            |a, b| Acc {
                pairs: a.pairs + b.pairs,
                trig: a.trig + b.trig,
                viol: a.viol + b.viol,
                min_gap: a.min_gap.min(b.min_gap),
                core: a.core + b.core,
                wit: a.wit.or(b.wit),
            },
        );
    ImplicationScan {
        pairs: acc.pairs,
        triggered: acc.trig,
        violations: acc.viol,
        min_norm_gap: acc.min_gap,
        core_lemma_failures: acc.core,
        witness: acc.wit.map(|(i, j)| [s.point(i).to_vec(), s.point(j).to_vec()]),
    }
}

/// Shifted geometric partition: `b_1 = start`, `b_{j+1} = b_j/√λ`, the last
/// value clipped to `top`; returned as levels `f0 + b_j`.
pub const MAX_LEVELS: usize = 1 << 22;

fn partition(f0: f64, start: f64, top: f64, lambda: f64) -> Vec<f64> {
    let ratio = lambda.sqrt();
    let mut b = vec![start.min(top)];
    while *b.last().expect("nonempty") < top && b.len() < MAX_LEVELS {
        let next = b.last().expect("nonempty") / ratio;
        b.push(next.min(top));
    }
    b.into_iter().map(|v| f0 + v).collect()
}

/// Builds the composite sublevel-set norm for a nonnegative convex `f` on the
/// positions `c_set` (the whole finite part when empty).
///
/// The function is first replaced by `f_s(x) = f(x) + f(−x) + N(x)` on
/// `C ∩ −C`. Levels start at `min f_s + δ/2` (raised to the first level
/// whose hull has the origin in its interior) and grow geometrically in
/// `f_s − min f_s` with ratio `λ^{-1/2}` up to `sup f_s`.
pub fn renorm_from_function(f: &TabFunc, c_set: &[usize], delta: f64, n: &NormSpec) -> Result<RenormResult> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let s = f.support();
    let dim = s.dim();
    let c: Vec<usize> = if c_set.is_empty() { f.dom() } else { c_set.to_vec() };
    if c.iter().any(|&i| i >= s.len() || !f.value(i).is_finite()) {
        return precondition("f must be finite on C");
    }
    if c.iter().any(|&i| f.value(i) < -CONVEXITY_TOL) {
        return precondition("f must be nonnegative on C");
    }
    let mut in_c = vec![false; s.len()];
    c.iter().for_each(|&i| in_c[i] = true);
    let cs: Vec<usize> = c.iter().copied().filter(|&i| s.negation(i).is_some_and(|j| in_c[j])).collect();
    let sub = Arc::new(s.subset(&cs));
    let fc = TabFunc::new(sub.clone(), cs.iter().map(|&i| f.value(i)).collect(), f.name())?;
    require_convex(&fc, CONVEXITY_TOL * (1.0 + fc.sup().abs()))?;
    let fs_vals: Vec<f64> = cs.iter().map(|&i| f.value(i) + f.value(s.negation(i).expect("symmetric")) + n.eval(s.point(i))).collect();
    let fs = TabFunc::new(sub.clone(), fs_vals, "symmetrized")?;
    let origin = sub.locate(&vec![0.0; dim]).ok_or_else(|| Error::Precondition("C ∩ −C does not contain the origin".into()))?;
    let f0 = fs.value(origin);
    let top = fs.sup();

    let m = sub.len();
    let lipschitz = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut l = 0.0f64;
            for j in i + 1..m {
                let d = sub.diff(i, j);
                let r = n.eval(&d[..dim]);
                if r > 0.0 {
                    l = l.max((fs.value(i) - fs.value(j)).abs() / r);
                }
            }
            l
        })
        .reduce(|| 0.0, f64::max);
    let n_c = (0..m).map(|i| n.eval(sub.point(i))).fold(0.0, f64::max);
    if !(lipschitz.is_finite() && lipschitz > 0.0 && n_c > 0.0) {
        return precondition("symmetrized function has no usable Lipschitz bound");
    }
    let eta = delta / lipschitz;
    let lambda_lipschitz = 1.0 / (1.0 + eta / n_c);

    // First level with a nondegenerate hull.
    let mut cand: Vec<f64> = fs.values().iter().copied().filter(|&v| v >= f0 + delta / 2.0).collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    if cand.is_empty() {
        cand.push(top);
    }
    let mut start = None;
    for &v in &cand {
        if LevelSetGauge::of_sublevel(&fs, v).is_ok() {
            start = Some(v - f0);
            break;
        }
    }
    let start = start.ok_or_else(|| Error::Precondition("no sublevel hull contains the origin in its interior".into()))?;

    let mut sorted = fs.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut lambda = lambda_lipschitz;
    let mut lambda_containment = 0.0f64;
    let mut groups;
    let mut gauges;
    let mut partition_len;
    let mut rounds = 0;
    loop {
        let levels = partition(f0, start, top - f0, lambda);
        partition_len = levels.len();
        // Consecutive levels with the same sublevel set share one gauge.
        groups = Vec::<(f64, f64, usize)>::new();
        let mut last_count = usize::MAX;
        for &r in &levels {
            let count = sorted.partition_point(|&v| v <= r);
            match groups.last_mut() {
                Some(g) if count == last_count => {
                    g.1 = r;
                    g.2 += 1;
                }
                _ => groups.push((r, r, 1)),
            }
            last_count = count;
        }
        gauges = groups.iter().map(|&(r, _, _)| LevelSetGauge::of_sublevel(&fs, r)).collect::<Result<Vec<_>>>()?;
        lambda_containment = gauges
            .par_iter()
            .zip(groups.par_iter())
            .map(|(g, &(_, hi, _))| (0..m).filter(|&i| fs.value(i) <= hi - delta).map(|i| g.eval(sub.point(i))).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
            .max(lambda_containment);
        rounds += 1;
        if lambda_containment <= lambda || rounds >= 6 || lambda_containment >= 1.0 {
            break;
        }
        lambda = lambda_containment;
    }
    let zeta = zeta_of(lambda);
    let weights = groups.iter().map(|g| g.2 as f64).collect();
    let levels = groups.iter().map(|g| g.0).collect();
    let truncated = partition_len >= MAX_LEVELS;
    let mut norm = CompositeNorm { dim, weights, components: gauges, base: None, lambda, zeta, equivalence: (0.0, 0.0) };
    norm.equivalence = equivalence(&norm, n, dim);

    let table: Vec<Vec<f64>> = norm.components.iter().map(|g| (0..m).map(|i| g.eval(sub.point(i))).collect()).collect();
    let q: Vec<f64> = (0..m).map(|i| table.iter().zip(&norm.weights).map(|(g, w)| w * g[i] * g[i]).sum()).collect();
    let scan = implication_scan(&sub, fc.values(), &table, &q, delta, lambda, zeta);
    let scan_symmetrized = implication_scan(&sub, fs.values(), &table, &q, delta, lambda, zeta);
    Ok(RenormResult { norm, delta, lipschitz, eta, n_c, lambda_lipschitz, lambda_containment, levels, partition_len, truncated, scan, scan_symmetrized })
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalLevel {
    /// `C_n = {f ≤ inf f + n}`.
    pub n: usize,
    pub points: usize,
    pub delta: f64,
    pub weight: f64,
    pub components: usize,
    pub zeta: f64,
    pub implication_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalRenorm {
    pub norm: CompositeNorm,
    pub alpha: f64,
    pub levels: Vec<GlobalLevel>,
    /// Sup of `| |||x||| − N(x) |` on sampled `N`-unit directions.
    pub distance_to_base: f64,
}

/// Global renorming: `|||x|||² = N(x)² + α Σ_n α_n |||x|||_n²`, where
/// `|||·|||_n` is the sublevel-set norm of a Lipschitz regularization of `f`
/// on `C_n = {f ≤ inf f + n}` and `α_n = 2^{-n}/sup_{N(x)=1} |||x|||_n²`.
pub fn renorm_global(f: &TabFunc, n: &NormSpec, alpha: f64, eps: f64, max_levels: usize) -> Result<GlobalRenorm> {
    if !(alpha > 0.0) || !(eps > 0.0) {
        return invalid("alpha and eps must be positive");
    }
    let s = f.support();
    let dim = s.dim();
    let lo = f.inf();
    let levels_needed = ((f.sup() - lo).ceil() as usize).clamp(1, max_levels.max(1));
    let d = PseudometricSpec::norm(n.clone());
    let all: Vec<usize> = f.dom();
    let eta = 2.0 * s.spacing();
    let mut comps = Vec::new();
    let mut weights = Vec::new();
    let mut report = Vec::new();
    for k in 1..=levels_needed {
        let cn: Vec<usize> = all.iter().copied().filter(|&i| f.value(i) <= lo + k as f64).collect();
        if cn.len() < 3 {
            continue;
        }
        let osc = cn.iter().map(|&i| f.value(i)).fold(f64::NEG_INFINITY, f64::max) - cn.iter().map(|&i| f.value(i)).fold(f64::INFINITY, f64::min);
        let c = (osc / eta).max(1e-9);
        let g = lipschitz_regularization(f, &cn, c, n)?;
        let g = g.map("shifted", |v| v - lo)?;
        let gc = g.restrict(&cn)?;
        let delta = delta_modulus(&gc, eps, &d)?.delta.get();
        if !(delta.is_finite() && delta > 0.0) {
            continue;
        }
        let r = renorm_from_function(&g, &cn, delta, n)?;
        let sup_sq = sphere_samples(n, dim, 256).iter().map(|x| r.norm.square(x)).fold(0.0, f64::max);
        let w = 0.5f64.powi(k as i32) / sup_sq;
        report.push(GlobalLevel {
            n: k,
            points: cn.len(),
            delta,
            weight: w,
            components: r.norm.components.len(),
            zeta: r.norm.zeta,
            implication_holds: r.scan.holds(),
        });
        for (g, wj) in r.norm.components.into_iter().zip(r.norm.weights) {
            comps.push(g);
            weights.push(alpha * w * wj);
        }
    }
    if comps.is_empty() {
        return precondition("no level produced a usable norm");
    }
    let mut norm = CompositeNorm { dim, components: comps, weights, base: Some((n.clone(), 1.0)), lambda: f64::NAN, zeta: f64::NAN, equivalence: (0.0, 0.0) };
    norm.equivalence = equivalence(&norm, n, dim);
    let distance_to_base = norm.distance_to(n, 512);
    Ok(GlobalRenorm { norm, alpha, levels: report, distance_to_base })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginRow {
    pub radius: f64,
    /// `min{F(x) − F(0) : N(x) ≥ radius}`.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnfloStage {
    pub eps: f64,
    pub max_height: usize,
    pub height_at_origin: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnfloReport {
    #[serde(skip)]
    pub f: TabFunc,
    pub stages: Vec<EnfloStage>,
    /// Points of `B = {F ≤ min F + 1/2}`.
    pub ball_size: usize,
    pub norm: CompositeNorm,
    pub f_at_origin: f64,
    pub origin_is_min: bool,
    /// `max |F(x) − F(−x)|`.
    pub symmetry_defect: f64,
    /// `min F` over grid points with `N(x) = 1`.
    pub min_on_sphere: f64,
    /// `min (F − N)`; nonnegative when `F ≥ N`.
    pub min_excess_over_norm: f64,
    pub margins: Vec<MarginRow>,
    /// `(eps, input modulus, output modulus)`.
    pub moduli: Vec<(f64, f64, f64)>,
}

/// The tree-height route to a uniformly convex norm on a grid ball.
///
/// For each `ε`: tree heights `h` on the ball, `g = 3^{-h}`, `f = ğ`. Then
/// `F = N + Σ_n 2^{-n} f_n`, and the output norm is the gauge of
/// `B = {F ≤ min F + 1/2}`.
pub fn enflo_pipeline(n: &NormSpec, grid: &DyadicGrid, eps_list: &[f64], cap: usize) -> Result<EnfloReport> {
    if eps_list.is_empty() {
        return invalid("eps_list is empty");
    }
    let full = Support::grid(grid);
    let dim = full.dim();
    if eps_list.iter().any(|&e| !(e >= 2.0 * full.spacing())) {
        return precondition("every eps must be at least twice the grid spacing");
    }
    let keep: Vec<usize> = (0..full.len()).filter(|&i| n.eval(full.point(i)) <= 1.0 + 1e-12).collect();
    let ball = Arc::new(full.subset(&keep));
    if (0..ball.len()).any(|i| ball.negation(i).is_none()) {
        return precondition("grid ball is not symmetric");
    }
    let origin = ball.locate(&vec![0.0; dim]).ok_or_else(|| Error::Precondition("grid does not contain the origin".into()))?;
    let d = PseudometricSpec::norm(n.clone());
    let base = TabFunc::from_fn(ball.clone(), "norm", |x| n.eval(x))?;
    let mut parts = vec![base.clone()];
    let mut weights = vec![1.0];
    let mut stages = Vec::new();
    for (k, &eps) in eps_list.iter().enumerate() {
        let h = height_function(&ball, eps, &d, cap)?;
        let g = exp_transform(&h, 1.0)?;
        let fe = convex_envelope(&g)?.envelope;
        let w = 0.5f64.powi(k as i32 + 1);
        stages.push(EnfloStage { eps, max_height: (-h.inf()) as usize, height_at_origin: (-h.value(origin)) as usize, weight: w });
        parts.push(fe);
        weights.push(w);
    }
    let f = series_combine(&parts, &weights)?.with_name("F");
    let fmin = f.inf();
    let f0 = f.value(origin);
    let symmetry_defect = (0..ball.len()).map(|i| (f.value(i) - f.value(ball.negation(i).expect("symmetric"))).abs()).fold(0.0, f64::max);
    let min_on_sphere = (0..ball.len()).filter(|&i| (base.value(i) - 1.0).abs() < 1e-12).map(|i| f.value(i)).fold(f64::INFINITY, f64::min);
    let min_excess_over_norm = (0..ball.len()).map(|i| f.value(i) - base.value(i)).fold(f64::INFINITY, f64::min);
    let margins = [0.125, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&r| MarginRow {
            radius: r,
            margin: (0..ball.len()).filter(|&i| base.value(i) >= r - 1e-12).map(|i| f.value(i) - f0).fold(f64::INFINITY, f64::min),
        })
        .collect();
    let g = LevelSetGauge::of_sublevel(&f, fmin + 0.5)?;
    let ball_size = (0..ball.len()).filter(|&i| f.value(i) <= fmin + 0.5).count();
    let norm = CompositeNorm::single(g, n);
    let moduli = eps_list.iter().map(|&e| (e, norm_modulus(n, dim, e, 2048, 0), norm_modulus(&norm, dim, e, 2048, 0))).collect();
    Ok(EnfloReport {
        f,
        stages,
        ball_size,
        norm,
        f_at_origin: f0,
        origin_is_min: f0 <= fmin,
        symmetry_defect,
        min_on_sphere,
        min_excess_over_norm,
        margins,
        moduli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_dyadic_grid;

    #[test]
    fn modulus_examples() {
        let l2 = norm_modulus(&NormSpec::L2, 2, 1.0, 2048, 0);
        assert!((l2 - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-4, "{l2}");
        assert!(norm_modulus(&NormSpec::L1, 2, 1.0, 2048, 0).abs() < 1e-6);
        assert_eq!(norm_modulus(&NormSpec::L2, 2, 0.0, 2048, 0), 0.0);
        let l3 = norm_modulus(&NormSpec::L2, 3, 1.0, 512, 1);
        assert!((l3 - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-4, "{l3}");
    }

    #[test]
    fn zeta_half() {
        assert!((zeta_of(0.5) - 0.010723).abs() < 1e-6);
    }

    #[test]
    fn disc_square_renorm() {
        let g = make_dyadic_grid(&[-1.0, -1.0], 0.125, &[17, 17]).unwrap();
        let s = Arc::new(Support::grid(&g));
        let f = TabFunc::from_fn(s.clone(), "sq", |x| {
            let r = x[0] * x[0] + x[1] * x[1];
            if r <= 1.0 {
                r
            } else {
                f64::INFINITY
            }
        })
        .unwrap();
        let r = renorm_from_function(&f, &[], 0.1, &NormSpec::L2).unwrap();
        assert!(r.scan.holds(), "{:?}", r.scan);
        assert!(r.scan.triggered > 0);
        for x in sphere_samples(&NormSpec::L2, 2, 64) {
            let y: Vec<f64> = x.iter().map(|v| -v).collect();
            assert!((r.norm.norm(&x) - r.norm.norm(&y)).abs() < 1e-12);
        }
    }
}
