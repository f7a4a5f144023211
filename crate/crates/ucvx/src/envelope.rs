//! Convex envelopes on finite supports, the local reduction, the slice
//! criterion and the Jensen inequality with gap.
//!
//! In one dimension the envelope is the lower hull of the graph. In two and
//! three dimensions every support point solves
//!
//! ```text
//! minimize Σ λ_k f(x_k)  subject to  Σ λ_k = 1,  Σ λ_k x_k = x,  λ ≥ 0
//! ```
//!
//! over the domain columns. Consecutive points reuse the previous optimal
//! basis, so each solve is a handful of dual simplex pivots.

use serde::Serialize;

use crate::domain::{ExtReal, PseudometricSpec, Support, TabFunc};
use crate::error::{invalid, precondition, Result};
use crate::lp::ColumnLp;
use crate::moduli::delta_modulus;

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub envelope: TabFunc,
    /// Per support point, `(position, weight)` pairs reproducing the point and
    /// the envelope value. Empty where the envelope is `+∞`.
    pub active_sets: Vec<Vec<(usize, f64)>>,
}

/// Lower semicontinuous convex envelope `f̆`.
pub fn convex_envelope(f: &TabFunc) -> Result<EnvelopeResult> {
    if f.support().dim() == 1 {
        Ok(envelope_1d(f))
    } else {
        envelope_lp(f)
    }
}

fn envelope_1d(f: &TabFunc) -> EnvelopeResult {
    let s = f.support();
    let mut order: Vec<usize> = f.dom();
    order.sort_by_key(|&i| s.index(i)[0]);
    let key = |i: usize| s.index(i)[0] as f64;
    let mut hull: Vec<usize> = Vec::new();
    for &c in &order {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (xa, xb, xc) = (key(a), key(b), key(c));
            let (fa, fb, fc) = (f.value(a), f.value(b), f.value(c));
            let l = (xb - xa) * (fc - fa);
            let r = (fb - fa) * (xc - xa);
            // b is dropped unless it lies strictly below the chord from a to c
            if l - r <= 1e-13 * (l.abs() + r.abs()) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    let mut values = vec![f64::INFINITY; s.len()];
    let mut active = vec![Vec::new(); s.len()];
    for i in 0..s.len() {
        let x = key(i);
        let k = hull.partition_point(|&h| key(h) < x);
        if k < hull.len() && key(hull[k]) == x {
            values[i] = f.value(hull[k]);
            active[i] = vec![(hull[k], 1.0)];
        } else if k > 0 && k < hull.len() {
            let (a, b) = (hull[k - 1], hull[k]);
            let w = (x - key(a)) / (key(b) - key(a));
            values[i] = f.value(a) + (f.value(b) - f.value(a)) * w;
            active[i] = vec![(a, 1.0 - w), (b, w)];
        }
    }
    let envelope = TabFunc::new(s.clone(), values, format!("env({})", f.name())).expect("hull vertices are finite");
    EnvelopeResult { envelope, active_sets: active }
}

fn envelope_lp(f: &TabFunc) -> Result<EnvelopeResult> {
    let s = f.support();
    let d = s.dim();
    let dom = f.dom();
    let centre = s.index(dom[0]);
    let rel = |i: usize| -> Vec<f64> {
        let k = s.index(i);
        let mut col = vec![1.0];
        col.extend((0..d).map(|a| (k[a] - centre[a]) as f64));
        col
    };
    let mut lp = ColumnLp::new(d + 1);
    for &i in &dom {
        lp.push(&rel(i), f.value(i));
    }
    let mut values = vec![f64::INFINITY; s.len()];
    let mut active = vec![Vec::new(); s.len()];
    let mut warm: Option<Vec<usize>> = None;
    for i in 0..s.len() {
        let b = rel(i);
        let Ok(sol) = lp.solve(&b, warm.as_deref()) else { continue };
        let v = sol.value.min(f.value(i));
        values[i] = v;
        active[i] = if v == f.value(i) && sol.value >= v {
            vec![(i, 1.0)]
        } else {
            sol.support(dom.len()).into_iter().map(|(k, w)| (dom[k], w)).collect()
        };
        if sol.basis.iter().all(|&k| k < dom.len()) {
            warm = Some(sol.basis);
        }
    }
    let envelope = TabFunc::new(s.clone(), values, format!("env({})", f.name()))?;
    Ok(EnvelopeResult { envelope, active_sets: active })
}

/// `ğ(x)` for `g = f` restricted to the open ball `B(x, ε)` of the norm.
pub fn local_envelope_reduction(f: &TabFunc, x: &[f64], eps: f64, n: &crate::domain::NormSpec) -> Result<ExtReal> {
    let s = f.support();
    let Some(c) = s.locate(x) else {
        return precondition("point is not in the support");
    };
    if !f.value(c).is_finite() {
        return precondition("point is not in the domain");
    }
    let keep: Vec<usize> = (0..s.len())
        .filter(|&i| {
            let dx = s.diff(i, c);
            n.eval(&dx[..s.dim()]) < eps
        })
        .collect();
    let g = f.restrict(&keep)?;
    let pos = keep.iter().position(|&i| i == c).expect("centre is in its own ball");
    Ok(convex_envelope(&g)?.envelope.ext(pos))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub delta: ExtReal,
    pub holds: bool,
}

/// Checks `f(x) ≤ Σ λ_k f(x_k) − δ_f(ε)` for a convex combination with
/// `d(x, x_k) ≥ ε`.
pub fn jensen_gap_check(f: &TabFunc, x: &[f64], combo: &[(Vec<f64>, f64)], eps: f64, d: &PseudometricSpec) -> Result<JensenCheck> {
    let s = f.support();
    let Some(c) = s.locate(x) else {
        return precondition("point is not in the support");
    };
    if combo.is_empty() {
        return invalid("empty combination");
    }
    let total: f64 = combo.iter().map(|p| p.1).sum();
    if combo.iter().any(|p| p.1 < 0.0) || (total - 1.0).abs() > 1e-12 {
        return invalid("weights must be nonnegative and sum to 1");
    }
    let mut bary = vec![0.0; s.dim()];
    let mut rhs = 0.0;
    for (p, w) in combo {
        let Some(k) = s.locate(p) else {
            return precondition("combination point is not in the support");
        };
        if d.dist(s, c, k) < eps {
            return precondition("combination point closer than eps");
        }
        bary.iter_mut().zip(p).for_each(|(b, v)| *b += w * v);
        rhs += w * f.value(k);
    }
    if bary.iter().zip(x).any(|(a, b)| (a - b).abs() > 1e-12) {
        return invalid("combination does not sum to the point");
    }
    let delta = delta_modulus(f, eps, d)?.delta;
    let lhs = f.value(c);
    let dv = if delta.is_finite() { delta.get() } else { 0.0 };
    Ok(JensenCheck { lhs, rhs, delta, holds: lhs <= rhs - dv + 1e-9 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceWitness {
    pub functional: Vec<f64>,
    pub slope: f64,
    pub members: Vec<usize>,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceVerdict {
    pub delta: f64,
    pub delta_f: ExtReal,
    pub slices_checked: usize,
    /// Every checked slice disjoint from `epi(f + δ)` has diameter `< ε`.
    pub all_small: bool,
    /// Direction one: `δ ≤ δ_f(ε)` implies small slices.
    pub direction1: bool,
    /// Direction two: small slices imply `δ_f(ε) ≥ δ/2`.
    pub direction2: bool,
    pub witness: Option<SliceWitness>,
}

/// Largest `d` over pairs of `members` whose midpoint is a support point.
fn midpoint_diameter(s: &Support, d: &PseudometricSpec, members: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if s.midpoint(i, j).is_some() {
                best = best.max(d.dist(s, i, j));
            }
        }
    }
    best
}

/// Candidate slopes for `s·w − f`: edge slopes of the lower hull of
/// `(⟨w, x⟩, f(x))` and values between and beyond them.
fn candidate_slopes(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = u.iter().copied().zip(v.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let slopes: Vec<f64> = hull.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let mut out = vec![0.0];
    if let (Some(&lo), Some(&hi)) = (slopes.first(), slopes.last()) {
        out.push(lo - 1.0);
        out.push(hi + 1.0);
    }
    for (k, &sl) in slopes.iter().enumerate() {
        out.push(sl);
        if k + 1 < slopes.len() {
            out.push((sl + slopes[k + 1]) / 2.0);
        }
    }
    out
}

/// Both directions of the slice criterion, restricted to slices cut by
/// `s·w` for `w` in the dictionary.
pub fn slice_diameter_criterion(f: &TabFunc, delta: f64, eps: f64, d: &PseudometricSpec, dict: &[Vec<f64>]) -> Result<SliceVerdict> {
    if dict.is_empty() {
        return invalid("empty dictionary");
    }
    let s = f.support();
    if dict.iter().any(|w| w.len() != s.dim()) {
        return invalid("dictionary dimension differs from support dimension");
    }
    d.check_support(s)?;
    let dom = f.dom();
    let mut checked = 0;
    let mut witness: Option<SliceWitness> = None;
    for w in dict {
        let u: Vec<f64> = dom.iter().map(|&i| s.point(i).iter().zip(w).map(|(a, b)| a * b).sum()).collect();
        let fv: Vec<f64> = dom.iter().map(|&i| f.value(i)).collect();
        for slope in candidate_slopes(&u, &fv) {
            checked += 1;
            let h: Vec<f64> = u.iter().zip(&fv).map(|(a, b)| slope * a - b).collect();
            let top = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let members: Vec<usize> = dom.iter().zip(&h).filter(|(_, &v)| v > top - delta).map(|(&i, _)| i).collect();
            let diam = midpoint_diameter(s, d, &members);
            if diam >= eps && witness.as_ref().map_or(true, |wt| diam > wt.diameter) {
                witness = Some(SliceWitness { functional: w.clone(), slope, members, diameter: diam });
            }
        }
    }
    let delta_f = delta_modulus(f, eps, d)?.delta;
    let all_small = witness.is_none();
    let direction1 = !(delta <= delta_f.get()) || all_small;
    let direction2 = !all_small || delta_f.get() >= delta / 2.0 - 1e-12;
    Ok(SliceVerdict { delta, delta_f, slices_checked: checked, all_small, direction1, direction2, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperReport {
    pub envelope_proper: bool,
    pub bounded_below: bool,
    pub minimizer: Vec<f64>,
    /// Affine minorant `x ↦ slope·x + offset`.
    pub slope: Vec<f64>,
    pub offset: f64,
    pub minorant_verified: bool,
}

/// Affine minorant from the horizontal supporting hyperplane of `f̆` at its
/// minimizer.
pub fn properness_check(f: &TabFunc) -> Result<ProperReport> {
    let env = convex_envelope(f)?.envelope;
    let s = f.support();
    let (i, m) = (0..s.len())
        .map(|i| (i, env.value(i)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty support");
    let minorant_verified = (0..s.len()).all(|k| f.value(k) >= m);
    Ok(ProperReport {
        envelope_proper: m.is_finite(),
        bounded_below: m.is_finite(),
        minimizer: s.point(i).to_vec(),
        slope: vec![0.0; s.dim()],
        offset: m,
        minorant_verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_dyadic_grid, NormSpec};
    use std::sync::Arc;

    fn line(lo: f64, hi: f64, step: f64) -> Arc<Support> {
        let n = ((hi - lo) / step).round() as usize + 1;
        Arc::new(Support::grid(&make_dyadic_grid(&[lo], step, &[n]).unwrap()))
    }

    #[test]
    fn chord_between_zero_endpoints() {
        let s = Arc::new(Support::from_points(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap());
        let f = TabFunc::new(s, vec![0.0, 10.0, 10.0, 0.0], "w").unwrap();
        let e = convex_envelope(&f).unwrap();
        assert!(e.envelope.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convex_input_is_fixed() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 16.0), "sq", |x| x[0] * x[0]).unwrap();
        assert_eq!(convex_envelope(&f).unwrap().envelope.values(), f.values());
        let g = make_dyadic_grid(&[-1.0, -1.0], 0.25, &[9, 9]).unwrap();
        let f2 = TabFunc::from_fn(Arc::new(Support::grid(&g)), "q", |x| x[0] * x[0] + 2.0 * x[1] * x[1]).unwrap();
        let e2 = convex_envelope(&f2).unwrap();
        for (a, b) in e2.envelope.values().iter().zip(f2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_active_sets_reproduce_points() {
        let g = make_dyadic_grid(&[-1.0, -1.0], 0.25, &[9, 9]).unwrap();
        let s = Arc::new(Support::grid(&g));
        let f = TabFunc::from_fn(s.clone(), "bump", |x| (x[0] * x[0] + x[1] * x[1] - 0.3).abs()).unwrap();
        let e = convex_envelope(&f).unwrap();
        for i in 0..s.len() {
            let set = &e.active_sets[i];
            assert!(set.len() <= 3);
            let mut p = [0.0; 2];
            let mut v = 0.0;
            for &(k, w) in set {
                p[0] += w * s.point(k)[0];
                p[1] += w * s.point(k)[1];
                v += w * f.value(k);
            }
            assert!((p[0] - s.point(i)[0]).abs() < 1e-9 && (p[1] - s.point(i)[1]).abs() < 1e-9);
            assert!((v - e.envelope.value(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn jensen_examples() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 0.25), "sq", |x| x[0] * x[0]).unwrap();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let ok = jensen_gap_check(&f, &[0.0], &[(vec![-1.0], 0.5), (vec![1.0], 0.5)], 1.0, &d).unwrap();
        assert!(ok.holds);
        assert!(jensen_gap_check(&f, &[0.0], &[(vec![0.0], 1.0)], 1.0, &d).is_err());
    }

    #[test]
    fn slice_criterion_square_and_linear() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 32.0), "sq", |x| x[0] * x[0]).unwrap();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let dict = vec![vec![1.0], vec![-1.0]];
        let v = slice_diameter_criterion(&f, 1.0 / 16.0, 0.5, &d, &dict).unwrap();
        assert!(v.all_small && v.direction1 && v.direction2);
        let lin = TabFunc::from_fn(line(-1.0, 1.0, 1.0 / 32.0), "lin", |x| x[0]).unwrap();
        let v = slice_diameter_criterion(&lin, 0.01, 0.5, &d, &dict).unwrap();
        assert!(!v.all_small);
    }

    #[test]
    fn properness_gives_minorant() {
        let f = TabFunc::from_fn(line(-1.0, 1.0, 0.125), "bump", |x| (x[0] * x[0] - 0.25).abs()).unwrap();
        let r = properness_check(&f).unwrap();
        assert!(r.minorant_verified && r.envelope_proper);
        assert_eq!(r.offset, 0.0);
    }
}
