//! Combinators on tabulated functions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::{FunctionSpec, Idx, LpExp, NormSpec, Support, TabFunc, MAX_DIM};
use crate::error::{invalid, precondition, Result};

/// Provenance of a derived function.
#[derive(Debug, Clone, Serialize)]
pub struct TransformRecord {
    pub inputs: Vec<String>,
    pub kind: String,
    pub params: BTreeMap<String, f64>,
    pub output: FunctionSpec,
}

impl TransformRecord {
    pub fn new(inputs: &[&TabFunc], kind: &str, params: &[(&str, f64)], output: &TabFunc) -> TransformRecord {
        TransformRecord {
            inputs: inputs.iter().map(|f| f.name().to_string()).collect(),
            kind: kind.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            output: output.to_spec(),
        }
    }
}

fn require_same(a: &TabFunc, b: &TabFunc) -> Result<()> {
    if !a.support().same_as(b.support()) {
        return invalid("functions live on different supports");
    }
    Ok(())
}

/// `(f1 □ f2)(x) = min_y f1(x − y) + f2(y)` on the Minkowski sum of the
/// supports.
pub fn inf_convolution(f1: &TabFunc, f2: &TabFunc) -> Result<TabFunc> {
    let h = f1.support().spacing().min(f2.support().spacing());
    let (Some(s1), Some(s2)) = (f1.support().with_spacing(h), f2.support().with_spacing(h)) else {
        return invalid("support spacings are not commensurable");
    };
    if s1.dim() != s2.dim() {
        return invalid("supports have different dimensions");
    }
    let dim = s1.dim();
    let origin: Vec<f64> = s1.origin().iter().zip(s2.origin()).map(|(a, b)| a + b).collect();
    let sum_idx = |a: Idx, b: Idx| -> Idx {
        let mut k = [0i64; MAX_DIM];
        for t in 0..MAX_DIM {
            k[t] = a[t] + b[t];
        }
        k
    };
    let support = match (s1.as_grid(), s2.as_grid()) {
        (Some(g1), Some(g2)) => {
            let shape: Vec<usize> = g1.shape.iter().zip(&g2.shape).map(|(a, b)| a + b - 1).collect();
            Support::grid(&crate::domain::make_dyadic_grid(&origin, s1.spacing(), &shape)?)
        }
        _ => {
            let mut idx: Vec<Idx> = Vec::new();
            for i in 0..s1.len() {
                for j in 0..s2.len() {
                    idx.push(sum_idx(s1.index(i), s2.index(j)));
                }
            }
            idx.sort();
            idx.dedup();
            Support::from_lattice(&origin, s1.spacing(), idx)?
        }
    };
    let mut values = vec![f64::INFINITY; support.len()];
    let d1 = f1.dom();
    let d2 = f2.dom();
    for &i in &d1 {
        for &j in &d2 {
            let k = support.find(&sum_idx(s1.index(i), s2.index(j))).expect("sum lies in the Minkowski sum");
            let v = f1.value(i) + f2.value(j);
            if v < values[k] {
                values[k] = v;
            }
        }
    }
    debug_assert_eq!(support.dim(), dim);
    TabFunc::new(Arc::new(support), values, format!("{}□{}", f1.name(), f2.name()))
}

/// `3^{f/δ}` pointwise.
pub fn exp_transform(f: &TabFunc, delta: f64) -> Result<TabFunc> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    f.map(format!("3^({}/{delta})", f.name()), |v| 3f64.powf(v / delta))
}

/// Convex-gap lower bound `3^{inf f/δ}/2` guaranteed by the exponential
/// transform of a `δ`-quasi-convex function.
pub fn exp_gap_bound(inf_f: f64, delta: f64) -> f64 {
    3f64.powf(inf_f / delta) / 2.0
}

/// `g(x) = min{f(y) + c·N(x − y) : y ∈ C}` over the whole support of `f`.
pub fn lipschitz_regularization(f: &TabFunc, c_set: &[usize], c: f64, n: &NormSpec) -> Result<TabFunc> {
    if !(c > 0.0) {
        return invalid("c must be positive");
    }
    let s = f.support();
    let ys: Vec<usize> = c_set.iter().copied().filter(|&i| f.value(i).is_finite()).collect();
    if ys.is_empty() {
        return precondition("C does not meet the domain");
    }
    let values = (0..s.len())
        .map(|x| {
            ys.iter()
                .map(|&y| {
                    let dx = s.diff(x, y);
                    f.value(y) + c * n.eval(&dx[..s.dim()])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    TabFunc::new(s.clone(), values, format!("lip({}, {c})", f.name()))
}

/// Largest `c·N(x − y) − |g(x) − g(y)|` violation; nonpositive when `g` is
/// `c`-Lipschitz on its domain.
pub fn lipschitz_excess(g: &TabFunc, c: f64, n: &NormSpec) -> f64 {
    let s = g.support();
    let dom = g.dom();
    let mut worst = f64::NEG_INFINITY;
    for (a, &i) in dom.iter().enumerate() {
        for &j in &dom[a + 1..] {
            let dx = s.diff(i, j);
            worst = worst.max((g.value(i) - g.value(j)).abs() - c * n.eval(&dx[..s.dim()]));
        }
    }
    worst
}

/// `g(x) = inf{f(y) : N(y − x) < η}` on the support of `f`.
pub fn domain_enlargement(f: &TabFunc, eta: f64, n: &NormSpec) -> Result<TabFunc> {
    if !(eta > 0.0) {
        return invalid("eta must be positive");
    }
    let s = f.support();
    let dom = f.dom();
    let values = (0..s.len())
        .map(|x| {
            dom.iter()
                .filter(|&&y| {
                    let dx = s.diff(x, y);
                    n.eval(&dx[..s.dim()]) < eta
                })
                .map(|&y| f.value(y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    TabFunc::new(s.clone(), values, format!("enlarge({}, {eta})", f.name()))
}

/// `f²` for `f ≥ 0`.
pub fn square_transform(f: &TabFunc) -> Result<TabFunc> {
    if f.values().iter().any(|&v| v < 0.0) {
        return precondition("square transform needs f >= 0");
    }
    f.map(format!("({})^2", f.name()), |v| v * v)
}

/// `f + g` on a common support.
pub fn add_convex(f: &TabFunc, g: &TabFunc) -> Result<TabFunc> {
    require_same(f, g)?;
    let values = f.values().iter().zip(g.values()).map(|(a, b)| a + b).collect();
    TabFunc::new(f.support().clone(), values, format!("{}+{}", f.name(), g.name()))
}

/// Pointwise maximum of finitely many functions on a common support.
pub fn sup_finite(fs: &[TabFunc]) -> Result<TabFunc> {
    let Some(first) = fs.first() else {
        return invalid("empty family");
    };
    for g in &fs[1..] {
        require_same(first, g)?;
    }
    let values = (0..first.len()).map(|i| fs.iter().map(|g| g.value(i)).fold(f64::NEG_INFINITY, f64::max)).collect();
    TabFunc::new(first.support().clone(), values, "sup")
}

/// `Σ w_k f_k` on a common support; `+∞` propagates.
pub fn series_combine(fs: &[TabFunc], weights: &[f64]) -> Result<TabFunc> {
    let Some(first) = fs.first() else {
        return invalid("empty series");
    };
    if fs.len() != weights.len() {
        return invalid("one weight per term is required");
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return invalid("weights must be positive and finite");
    }
    for g in &fs[1..] {
        require_same(first, g)?;
    }
    let values = (0..first.len()).map(|i| fs.iter().zip(weights).map(|(g, w)| w * g.value(i)).sum()).collect();
    TabFunc::new(first.support().clone(), values, "series")
}

/// Default series weights `2^{-n}/(1 + sup f_n)`, `n ≥ 1`.
pub fn default_series_weights(fs: &[TabFunc]) -> Vec<f64> {
    fs.iter().enumerate().map(|(k, f)| 0.5f64.powi(k as i32 + 1) / (1.0 + f.sup().abs())).collect()
}

/// Radii `a_1 < a_2 < …` with `a_1 = ε/2` and
/// `a_{n−1} = (1 − δ_X(ε/a_n))·a_n`, and the step function `f(x) = n` for
/// `a_{n−1} < N(x) ≤ a_n` (`f(0) = 0`, `+∞` beyond `a_levels`).
pub fn radial_uc(n: &NormSpec, eps: f64, levels: usize, support: Arc<Support>) -> Result<(Vec<f64>, TabFunc)> {
    if !(eps > 0.0) || levels == 0 {
        return invalid("eps must be positive and levels at least 1");
    }
    let dim = support.dim();
    let modulus = |t: f64| -> f64 {
        match n {
            NormSpec::Lp(LpExp::Two) => 1.0 - (1.0 - (t * t / 4.0).min(1.0)).sqrt(),
            _ => crate::renorming::norm_modulus(n, dim, t, 2048, 0),
        }
    };
    if matches!(n, NormSpec::Lp(LpExp::One | LpExp::Inf)) && dim > 1 {
        return precondition("norm not uniformly convex");
    }
    let mut a = vec![eps / 2.0];
    while a.len() < levels {
        let prev = *a.last().expect("nonempty");
        let phi = |r: f64| (1.0 - modulus(eps / r)) * r;
        let mut hi = prev * 2.0;
        while phi(hi) < prev {
            if modulus(eps / hi) <= 1e-6 {
                return precondition("norm not uniformly convex");
            }
            hi *= 2.0;
        }
        let mut lo = prev;
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < prev {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        a.push(0.5 * (lo + hi));
    }
    let values = (0..support.len())
        .map(|i| {
            let r = n.eval(support.point(i));
            if r == 0.0 {
                0.0
            } else {
                a.iter().position(|&ak| r <= ak).map_or(f64::INFINITY, |k| (k + 1) as f64)
            }
        })
        .collect();
    let f = TabFunc::new(support, values, format!("radial({eps})"))?;
    Ok((a, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_dyadic_grid, PseudometricSpec};
    use crate::moduli::{delta_modulus, quasi_modulus};

    fn line(lo: f64, hi: f64, step: f64) -> Arc<Support> {
        let n = ((hi - lo) / step).round() as usize + 1;
        Arc::new(Support::grid(&make_dyadic_grid(&[lo], step, &[n]).unwrap()))
    }

    #[test]
    fn infconv_of_squares_halves() {
        let s = line(-2.0, 2.0, 1.0 / 16.0);
        let f = TabFunc::from_fn(s, "sq", |x| x[0] * x[0]).unwrap();
        let h = inf_convolution(&f, &f).unwrap();
        let hs = h.support();
        for i in 0..hs.len() {
            let x = hs.point(i)[0];
            if hs.index(i)[0] % 2 == 0 && x.abs() <= 2.0 {
                assert!((h.value(i) - x * x / 2.0).abs() < 1e-12, "{x}");
            }
        }
    }

    #[test]
    fn infconv_identity_element() {
        let s = line(-1.0, 1.0, 0.125);
        let f = TabFunc::from_fn(s.clone(), "f", |x| (x[0] - 0.25).powi(2)).unwrap();
        let ind = TabFunc::new(Arc::new(Support::from_points(&[vec![0.0]]).unwrap()), vec![0.0], "ind0").unwrap();
        let h = inf_convolution(&f, &ind).unwrap();
        for i in 0..s.len() {
            assert_eq!(h.eval(s.point(i)).get(), f.value(i));
        }
    }

    #[test]
    fn exp_transform_examples() {
        let s = line(0.0, 1.0, 0.25);
        let z = TabFunc::from_fn(s.clone(), "z", |_| 0.0).unwrap();
        assert!(exp_transform(&z, 1.0).unwrap().values().iter().all(|&v| v == 1.0));
        assert!(exp_transform(&z, 0.0).is_err());
        assert!((exp_gap_bound(-3.0, 1.0) - 1.0 / 54.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_regularization_fills_domain() {
        let s = line(-1.0, 1.0, 0.25);
        let f = TabFunc::from_fn(s.clone(), "f", |x| if x[0] > 0.5 { f64::INFINITY } else { x[0] * x[0] }).unwrap();
        let all: Vec<usize> = (0..s.len()).collect();
        let g = lipschitz_regularization(&f, &all, 3.0, &NormSpec::L2).unwrap();
        assert!(g.values().iter().all(|v| v.is_finite()));
        assert!(lipschitz_excess(&g, 3.0, &NormSpec::L2) <= 1e-12);
        for i in f.dom() {
            assert!(g.value(i) <= f.value(i));
        }
    }

    #[test]
    fn enlargement_examples() {
        let s = line(-2.0, 2.0, 0.25);
        let f = TabFunc::from_fn(s.clone(), "pt", |x| if x[0] == 0.0 { 0.0 } else { f64::INFINITY }).unwrap();
        let g = domain_enlargement(&f, 1.0, &NormSpec::L2).unwrap();
        for i in 0..s.len() {
            let x = s.point(i)[0];
            assert_eq!(g.value(i).is_finite(), x.abs() < 1.0);
        }
        let h = domain_enlargement(&f, 0.125, &NormSpec::L2).unwrap();
        assert_eq!(h.values(), f.values());
    }

    #[test]
    fn square_of_abs() {
        let s = line(-2.0, 2.0, 1.0 / 16.0);
        let f = TabFunc::from_fn(s, "abs", |x| x[0].abs()).unwrap();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let q = quasi_modulus(&f, 1.0, &d).unwrap().delta.get();
        let sq = square_transform(&f).unwrap();
        let dsq = delta_modulus(&sq, 1.0, &d).unwrap().delta.get();
        assert!((q - 0.5).abs() < 1e-12);
        assert!(dsq >= 0.25 - 1e-12 && dsq >= q * q / 4.0);
        assert!(square_transform(&f.map("neg", |v| -v - 1.0).unwrap()).is_err());
    }

    #[test]
    fn radial_l2_second_radius() {
        let g = make_dyadic_grid(&[-2.0, -2.0], 0.125, &[33, 33]).unwrap();
        let (a, f) = radial_uc(&NormSpec::L2, 1.0, 3, Arc::new(Support::grid(&g))).unwrap();
        assert_eq!(a[0], 0.5);
        assert!((a[1] - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(a[2] > a[1]);
        let q = quasi_modulus(&f, 1.0, &PseudometricSpec::norm(NormSpec::L2)).unwrap().delta.get();
        assert!(q >= 1.0);
        assert!(radial_uc(&NormSpec::LINF, 1.0, 2, f.support().clone()).is_err());
    }

    #[test]
    fn series_and_sup() {
        let s = line(-1.0, 1.0, 0.25);
        let a = TabFunc::from_fn(s.clone(), "a", |x| x[0] * x[0]).unwrap();
        let b = TabFunc::from_fn(s.clone(), "b", |x| 2.0 * x[0] * x[0]).unwrap();
        let avg = series_combine(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        for i in 0..s.len() {
            assert!((avg.value(i) - 1.5 * a.value(i)).abs() < 1e-15);
        }
        assert_eq!(series_combine(&[a.clone()], &[1.0]).unwrap().values(), a.values());
        assert_eq!(sup_finite(&[a.clone(), b.clone()]).unwrap().values(), b.values());
        assert!(series_combine(&[], &[]).is_err());
    }
}
