//! Slice derivations relative to a map into a pseudometric space.
//!
//! Point subsets are sorted lists of support positions. The map `F` enters
//! only through the pseudometric `d'(x, y) = d(F(x), F(y))`, given as a
//! [`PseudometricSpec`] on the support. Halfspaces are drawn from a finite
//! dictionary of functionals, with thresholds at the distinct functional
//! values of the current set.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::domain::{ExtReal, PseudometricSpec, Support, TabFunc, MAX_DIM};
use crate::envelope::convex_envelope;
use crate::error::{invalid, precondition, Error, Result};
use crate::transforms::exp_transform;

/// Slice `{x ∈ base : ⟨w, x⟩ > sup⟨w, base⟩ − alpha}`.
#[derive(Debug, Clone, Serialize)]
pub struct SliceSpec {
    pub functional: Vec<f64>,
    pub alpha: f64,
    pub base: Vec<usize>,
}

impl SliceSpec {
    pub fn members(&self, s: &Support) -> Vec<usize> {
        let vals: Vec<f64> = self.base.iter().map(|&i| dot(&self.functional, s.point(i))).collect();
        let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.base.iter().zip(vals).filter(|(_, v)| *v > sup - self.alpha).map(|(&i, _)| i).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `±e_k` axes plus `extra` spread directions: equally spaced angles in 2D,
/// a Fibonacci sphere in 3D.
pub fn default_dictionary(dim: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for a in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[a] = s;
            out.push(v);
        }
    }
    let spread: Vec<Vec<f64>> = match dim {
        2 => (0..extra).map(|k| 2.0 * PI * k as f64 / extra as f64).map(|t| vec![t.cos(), t.sin()]).collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..extra)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / extra as f64;
                    let r = (1.0 - z * z).sqrt();
                    vec![r * (golden * k as f64).cos(), r * (golden * k as f64).sin(), z]
                })
                .collect()
        }
        _ => Vec::new(),
    };
    for v in spread {
        if !out.iter().any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12)) {
            out.push(v);
        }
    }
    out
}

/// Default dictionary size per dimension.
pub fn default_extra(dim: usize) -> usize {
    match dim {
        2 => 64,
        3 => 146,
        _ => 0,
    }
}

/// Members of `set` grouped by decreasing `⟨w, x⟩`, with the group values.
fn layers(s: &Support, set: &[usize], w: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut v: Vec<(f64, usize)> = set.iter().map(|&i| (dot(w, s.point(i)), i)).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (val, i) in v {
        match out.last_mut() {
            Some((last, members)) if *last == val => members.push(i),
            _ => out.push((val, vec![i])),
        }
    }
    out
}

/// Number of leading layers whose union has `d`-diameter accepted by `small`.
fn small_prefix(s: &Support, d: &PseudometricSpec, ls: &[(f64, Vec<usize>)], small: impl Fn(f64) -> bool) -> usize {
    let mut seen: Vec<usize> = Vec::new();
    let mut diam = 0.0f64;
    for (k, (_, layer)) in ls.iter().enumerate() {
        for &i in layer {
            for &j in &seen {
                diam = diam.max(d.dist(s, i, j));
            }
            seen.push(i);
        }
        if !small(diam) {
            return k;
        }
    }
    ls.len()
}

fn check(set: &[usize], s: &Support, d: &PseudometricSpec, dict: &[Vec<f64>]) -> Result<()> {
    d.check_support(s)?;
    if dict.is_empty() {
        return invalid("dictionary is empty");
    }
    if dict.iter().any(|w| w.len() != s.dim()) {
        return invalid("dictionary functional has the wrong dimension");
    }
    if set.iter().any(|&i| i >= s.len()) {
        return invalid("subset position outside the support");
    }
    Ok(())
}

fn remove(set: &[usize], removed: &[bool]) -> Vec<usize> {
    set.iter().copied().filter(|&i| !removed[i]).collect()
}

/// `[D]'_ε`: removes every point lying in a dictionary slice of `D` whose
/// `d`-diameter is at most `eps`.
pub fn derive_once(s: &Support, set: &[usize], d: &PseudometricSpec, eps: f64, dict: &[Vec<f64>]) -> Result<Vec<usize>> {
    check(set, s, d, dict)?;
    let drops: Vec<Vec<usize>> = dict
        .par_iter()
        .map(|w| {
            let ls = layers(s, set, w);
            let k = small_prefix(s, d, &ls, |diam| diam <= eps);
            ls[..k].iter().flat_map(|(_, m)| m.iter().copied()).collect()
        })
        .collect();
    let mut removed = vec![false; s.len()];
    drops.iter().flatten().for_each(|&i| removed[i] = true);
    Ok(remove(set, &removed))
}

/// Reading of the half-derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HalfMode {
    /// Remove the outer half-width of every slice of diameter `< ε`.
    #[default]
    Prose,
    /// Keep `x` iff `⟨w, x⟩ ≤ α` for all `(w, α > 0)` with
    /// `diam S(D, w, 2α) > ε`, taken literally.
    Formula,
}

/// Half-derivation `⟨D⟩'_ε`.
pub fn half_derive(s: &Support, set: &[usize], d: &PseudometricSpec, eps: f64, dict: &[Vec<f64>], mode: HalfMode) -> Result<Vec<usize>> {
    check(set, s, d, dict)?;
    if set.is_empty() {
        return Ok(Vec::new());
    }
    let drops: Vec<Vec<usize>> = dict
        .par_iter()
        .map(|w| {
            let ls = layers(s, set, w);
            let sup = ls[0].0;
            match mode {
                HalfMode::Prose => {
                    let k = small_prefix(s, d, &ls, |diam| diam < eps);
                    if k == 0 {
                        return Vec::new();
                    }
                    if k == ls.len() {
                        return set.to_vec();
                    }
                    // largest 2α with S(D, w, 2α) = first k layers
                    let cut = 0.5 * (sup + ls[k].0);
                    ls[..k].iter().flat_map(|(v, m)| if *v > cut { m.clone() } else { Vec::new() }).collect()
                }
                HalfMode::Formula => {
                    let k = small_prefix(s, d, &ls, |diam| diam <= eps);
                    if k == ls.len() {
                        return Vec::new();
                    }
                    let alpha = (0.5 * (sup - ls[k].0)).max(0.0);
                    ls.iter().filter(|(v, _)| *v > alpha).flat_map(|(_, m)| m.iter().copied()).collect()
                }
            }
        })
        .collect();
    let mut removed = vec![false; s.len()];
    drops.iter().flatten().for_each(|&i| removed[i] = true);
    Ok(remove(set, &removed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dz {
    Finite(usize),
    CapExceeded,
}

impl Serialize for Dz {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Dz::Finite(n) => ser.serialize_u64(*n as u64),
            Dz::CapExceeded => ser.serialize_str("cap-exceeded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivationKind {
    Full,
    Half,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivationTrace {
    /// `C = C⁰ ⊇ C¹ ⊇ …`, as support positions.
    pub stages: Vec<Vec<usize>>,
    pub eps: f64,
    pub dictionary: Vec<Vec<f64>>,
    pub dz: Dz,
    pub kind: DerivationKind,
}

/// Iterates `[·]'_ε` from `c` until the empty set or `cap` derivations.
pub fn dz_index(s: &Support, c: &[usize], d: &PseudometricSpec, eps: f64, dict: &[Vec<f64>], cap: usize) -> Result<DerivationTrace> {
    iterate(c, eps, dict, cap, DerivationKind::Full, |set| derive_once(s, set, d, eps, dict))
}

/// Iterates the half-derivation from `c`.
pub fn half_trace(s: &Support, c: &[usize], d: &PseudometricSpec, eps: f64, dict: &[Vec<f64>], cap: usize, mode: HalfMode) -> Result<DerivationTrace> {
    iterate(c, eps, dict, cap, DerivationKind::Half, |set| half_derive(s, set, d, eps, dict, mode))
}

fn iterate(
    c: &[usize],
    eps: f64,
    dict: &[Vec<f64>],
    cap: usize,
    kind: DerivationKind,
    step: impl Fn(&[usize]) -> Result<Vec<usize>>,
) -> Result<DerivationTrace> {
    if cap == 0 {
        return invalid("cap must be at least 1");
    }
    let mut c = c.to_vec();
    c.sort_unstable();
    c.dedup();
    let mut stages = vec![c];
    let mut dz = Dz::CapExceeded;
    for n in 1..=cap {
        let last = stages.last().expect("nonempty");
        if last.is_empty() {
            dz = Dz::Finite(n - 1);
            break;
        }
        let next = step(last)?;
        let stuck = next.len() == last.len();
        stages.push(next);
        if stuck {
            break;
        }
        if stages.last().expect("nonempty").is_empty() {
            dz = Dz::Finite(n);
            break;
        }
    }
    Ok(DerivationTrace { stages, eps, dictionary: dict.to_vec(), dz, kind })
}

/// Positions of the lattice points on the segment `[x, y]`, in order.
pub fn grid_segment(s: &Support, x: usize, y: usize) -> Result<Vec<usize>> {
    let (a, b) = (s.index(x), s.index(y));
    let mut step = [0i64; MAX_DIM];
    let mut g = 0i64;
    for t in 0..MAX_DIM {
        step[t] = b[t] - a[t];
        g = gcd(g, step[t].abs());
    }
    if g == 0 {
        return Ok(vec![x]);
    }
    let mut out = Vec::with_capacity(g as usize + 1);
    for k in 0..=g {
        let mut p = a;
        for t in 0..MAX_DIM {
            p[t] += k * step[t] / g;
        }
        out.push(s.find(&p).ok_or_else(|| Error::Precondition("segment leaves the support".into()))?);
    }
    Ok(out)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lancien's midpoint bound: if the grid segment `[x, y]` lies in `D` and
/// misses `derived`, then `d(x, y) ≤ 2ε`.
pub fn lancien_check(s: &Support, x: usize, y: usize, set: &[usize], derived: &[usize], d: &PseudometricSpec, eps: f64) -> Result<bool> {
    let seg = grid_segment(s, x, y)?;
    let mut in_set = vec![false; s.len()];
    set.iter().for_each(|&i| in_set[i] = true);
    let mut in_der = vec![false; s.len()];
    derived.iter().for_each(|&i| in_der[i] = true);
    if seg.iter().any(|&i| !in_set[i] || in_der[i]) {
        return precondition("segment must lie in D and miss the derived set");
    }
    Ok(d.dist(s, x, y) <= 2.0 * eps + 1e-9)
}

/// `inf{Δ_Φ(x, y) : d(x, y) > eps}` over pairs of `phi`'s support with the
/// midpoint in the support; `+∞` when no pair qualifies. `positions` maps
/// `phi`'s support to the support `d` is defined on.
pub fn implication_delta(phi: &TabFunc, d: &PseudometricSpec, s: &Support, positions: &[usize], eps: f64) -> ExtReal {
    let sp = phi.support();
    let n = sp.len();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut b = f64::INFINITY;
            for j in i + 1..n {
                let Some(m) = sp.midpoint(i, j) else { continue };
                if d.dist(s, positions[i], positions[j]) <= eps {
                    continue;
                }
                b = b.min(0.5 * (phi.value(i) + phi.value(j)) - phi.value(m));
            }
            b
        })
        .reduce(|| f64::INFINITY, f64::min);
    ExtReal::of(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivedUc {
    /// Convex envelope of `3^g` on the sub-support `C`.
    #[serde(skip)]
    pub phi: TabFunc,
    /// `g(x) = −n` on `⟨C⟩ⁿ ∖ ⟨C⟩ⁿ⁺¹`.
    #[serde(skip)]
    pub g: TabFunc,
    /// `C` as support positions, in the order of `phi`'s support.
    pub positions: Vec<usize>,
    /// Half of the smallest `Δ_Φ` over pairs with `d' > ε'`; `+∞` if there
    /// are none. Positive means the implication `Δ_Φ ≤ δ ⇒ d' ≤ ε'` holds.
    pub delta: ExtReal,
    pub half_dz: usize,
    pub mode: HalfMode,
}

/// Uniformly convex `Φ` from a finite half-derivation at `eps_prime`.
pub fn uc_function_from_derivation(
    s: &Support,
    c: &[usize],
    d: &PseudometricSpec,
    eps_prime: f64,
    dict: &[Vec<f64>],
    cap: usize,
    mode: HalfMode,
) -> Result<DerivedUc> {
    if c.is_empty() {
        return invalid("empty set");
    }
    let tr = half_trace(s, c, d, eps_prime, dict, cap, mode)?;
    let Dz::Finite(levels) = tr.dz else {
        return Err(Error::CapExceeded(format!("half-derivation did not empty within {cap} steps")));
    };
    let positions = tr.stages[0].clone();
    let mut level = vec![0usize; s.len()];
    for (n, st) in tr.stages.iter().enumerate() {
        st.iter().for_each(|&i| level[i] = n);
    }
    let sub = Arc::new(s.subset(&positions));
    let g = TabFunc::new(sub, positions.iter().map(|&i| -(level[i] as f64)).collect(), format!("half-level({eps_prime})"))?;
    let f = exp_transform(&g, 1.0)?;
    let phi = convex_envelope(&f)?.envelope.with_name("phi");
    let dstar = implication_delta(&phi, d, s, &positions, eps_prime);
    let delta = if dstar.is_finite() { ExtReal::of(dstar.get() / 2.0) } else { ExtReal::INF };
    Ok(DerivedUc { phi, g, positions, delta, half_dz: levels, mode })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesStage {
    pub eps: f64,
    pub weight: f64,
    pub stage_delta: ExtReal,
    /// Implication constant of the combined `Φ` at this `eps`.
    pub combined_delta: ExtReal,
}

#[derive(Debug, Clone, Serialize)]
pub struct DentableSeries {
    #[serde(skip)]
    pub phi: TabFunc,
    pub positions: Vec<usize>,
    pub stages: Vec<SeriesStage>,
}

/// `Φ = Σ_n w_n Φ_n`, `w_n = 2^{-n}/(1 + sup Φ_n)`, one stage per `eps`.
pub fn finitely_dentable_series(
    s: &Support,
    c: &[usize],
    d: &PseudometricSpec,
    eps_list: &[f64],
    dict: &[Vec<f64>],
    cap: usize,
    mode: HalfMode,
) -> Result<DentableSeries> {
    if eps_list.is_empty() {
        return invalid("eps_list is empty");
    }
    let stages = eps_list.iter().map(|&e| uc_function_from_derivation(s, c, d, e, dict, cap, mode)).collect::<Result<Vec<_>>>()?;
    let positions = stages[0].positions.clone();
    let weights: Vec<f64> = stages.iter().enumerate().map(|(k, st)| 0.5f64.powi(k as i32 + 1) / (1.0 + st.phi.sup())).collect();
    let n = positions.len();
    let values = (0..n).map(|i| stages.iter().zip(&weights).map(|(st, w)| w * st.phi.value(i)).sum()).collect();
    let phi = TabFunc::new(stages[0].phi.support().clone(), values, "phi-series")?;
    let report = stages
        .iter()
        .zip(eps_list)
        .zip(&weights)
        .map(|((st, &eps), &w)| {
            let dstar = implication_delta(&phi, d, s, &positions, eps);
            SeriesStage { eps, weight: w, stage_delta: st.delta, combined_delta: if dstar.is_finite() { ExtReal::of(dstar.get() / 2.0) } else { ExtReal::INF } }
        })
        .collect();
    Ok(DentableSeries { phi, positions, stages: report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_dyadic_grid, NormSpec};

    fn unit() -> Support {
        Support::grid(&make_dyadic_grid(&[0.0], 1.0 / 64.0, &[65]).unwrap())
    }

    fn pm() -> Vec<Vec<f64>> {
        vec![vec![1.0], vec![-1.0]]
    }

    fn coords(s: &Support, set: &[usize]) -> Vec<f64> {
        set.iter().map(|&i| s.point(i)[0]).collect()
    }

    #[test]
    fn derivation_on_interval() {
        let s = unit();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let all: Vec<usize> = (0..s.len()).collect();
        let once = derive_once(&s, &all, &d, 0.3, &pm()).unwrap();
        let xs = coords(&s, &once);
        assert!(xs.iter().all(|&x| x > 0.3 && x < 0.7));
        assert_eq!(xs.len(), (0..65).filter(|k| *k as f64 / 64.0 > 0.3 && (*k as f64 / 64.0) < 0.7).count());
        let tr = dz_index(&s, &all, &d, 0.3, &pm(), 64).unwrap();
        assert_eq!(tr.dz, Dz::Finite(2));
        assert_eq!(dz_index(&s, &all, &d, 1.0, &pm(), 64).unwrap().dz, Dz::Finite(1));
    }

    #[test]
    fn half_derivation_trims_outer_half() {
        let s = unit();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let all: Vec<usize> = (0..s.len()).collect();
        let h = half_derive(&s, &all, &d, 0.3, &pm(), HalfMode::Prose).unwrap();
        let xs = coords(&s, &h);
        let hi = xs.iter().copied().fold(0.0, f64::max);
        assert_eq!(hi, 0.84375);
        assert_eq!(half_derive(&s, &all, &d, 0.0, &pm(), HalfMode::Prose).unwrap().len(), s.len());
        let tr = half_trace(&s, &all, &d, 0.3, &pm(), 64, HalfMode::Prose).unwrap();
        assert!(matches!(tr.dz, Dz::Finite(_)));
    }

    #[test]
    fn lancien_examples() {
        let s = unit();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let all: Vec<usize> = (0..s.len()).collect();
        let der = derive_once(&s, &all, &d, 0.3, &pm()).unwrap();
        assert!(lancien_check(&s, 0, 16, &all, &der, &d, 0.3).unwrap());
        assert!(lancien_check(&s, 3, 3, &all, &der, &d, 0.3).unwrap());
        assert!(lancien_check(&s, 0, 40, &all, &der, &d, 0.3).is_err());
    }

    #[test]
    fn phi_from_derivation() {
        let s = unit();
        let d = PseudometricSpec::norm(NormSpec::L2);
        let all: Vec<usize> = (0..s.len()).collect();
        let r = uc_function_from_derivation(&s, &all, &d, 0.7, &pm(), 64, HalfMode::Prose).unwrap();
        assert!(r.delta.get() > 0.0);
        let k = PseudometricSpec::pullback(vec![vec![1.0]; s.len()], NormSpec::L2).unwrap();
        let r = uc_function_from_derivation(&s, &all, &k, 0.7, &pm(), 64, HalfMode::Prose).unwrap();
        assert_eq!(r.delta, ExtReal::INF);
    }
}
