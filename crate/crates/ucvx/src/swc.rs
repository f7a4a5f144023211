//! Fixed-resolution proxies for the super weak noncompactness measures
//! `μ1`, `μ2`, `μ5`, `μ6` of a finite body, and their comparison chain.
//!
//! Each proxy is the threshold `inf{ε : index(ε) < K}` for a common cap `K`:
//!
//! - `μ1`: no sequence of length `K + 1` with convexly `ε`-separated splits;
//! - `μ2`: every `ε`-separated dyadic tree has height `< K`;
//! - `μ5`: `Dz(C, ε) < K` (at most `K − 1` derivations empty `C`);
//! - `μ6`: a convex function with `δ(ε) > 0` is built within cap `K`, from
//!   tree heights through `3^{−h}` and the envelope, or from half-derivations.
//!
//! Thresholds are bracketed by a sweep over `eps_grid` and bisection.
//! `μ3` and `μ4` are ultrapower quantities and have no proxy.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dentability::{default_dictionary, default_extra, dz_index, uc_function_from_derivation, Dz, HalfMode};
use crate::domain::{ExtReal, NormSpec, PseudometricSpec, Support};
use crate::envelope::convex_envelope;
use crate::error::{invalid, Error, Result};
use crate::moduli::delta_modulus;
use crate::transforms::exp_transform;
use crate::trees::{convex_separation_sequence, height_function, max_separated_tree_height, SeqSearch};

pub const ABSENT_NOTE: &str = "mu3 and mu4 are defined through ultrapowers and have no finite proxy";

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct SwcCaps {
    /// Common index cap `K`; sequence searches use length `K + 1 ≤ 12`.
    pub index_cap: usize,
    /// Prefix checks allowed per separated-sequence search.
    pub seq_budget: usize,
    pub bisect_steps: usize,
}

impl Default for SwcCaps {
    fn default() -> SwcCaps {
        SwcCaps { index_cap: 4, seq_budget: 200_000, bisect_steps: 3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MuBracket {
    pub lo: f64,
    pub hi: ExtReal,
    /// Some probe was undecided (search budget) or the sweep was not
    /// monotone in `ε`; the bracket is correspondingly wider.
    pub flagged: bool,
    /// `(ε, outcome)`; `None` is undecided.
    pub probes: Vec<(f64, Option<bool>)>,
}

impl MuBracket {
    fn zero() -> MuBracket {
        MuBracket { lo: 0.0, hi: ExtReal::ZERO, flagged: false, probes: Vec::new() }
    }

    pub fn width(&self) -> f64 {
        self.hi.get() - self.lo
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MuReport {
    pub fixture: String,
    pub dictionary: String,
    pub norm: serde_json::Value,
    pub spacing: f64,
    pub points: usize,
    pub caps: SwcCaps,
    pub eps_grid: Vec<f64>,
    pub mu1: MuBracket,
    pub mu2: MuBracket,
    pub mu3: Option<MuBracket>,
    pub mu4: Option<MuBracket>,
    pub mu5: MuBracket,
    pub mu6: MuBracket,
    pub note: String,
}

type Probe<'a> = dyn Fn(f64) -> Result<Option<bool>> + Sync + 'a;

fn threshold(grid: &[f64], steps: usize, p: &Probe) -> Result<MuBracket> {
    let outcomes = grid.par_iter().map(|&e| p(e)).collect::<Result<Vec<_>>>()?;
    let mut probes: Vec<(f64, Option<bool>)> = grid.iter().copied().zip(outcomes).collect();
    let mut flagged = false;
    let hi_pos = probes.iter().position(|&(_, o)| o == Some(true));
    let (mut lo, mut hi) = match hi_pos {
        Some(k) => (probes[..k].iter().rev().find(|&&(_, o)| o == Some(false)).map_or(0.0, |&(e, _)| e), probes[k].0),
        None => (probes.iter().rev().find(|&&(_, o)| o == Some(false)).map_or(0.0, |&(e, _)| e), f64::INFINITY),
    };
    if probes.iter().any(|&(e, o)| (o.is_none() && e > lo && e < hi) || (o == Some(false) && e > hi)) {
        flagged = true;
    }
    if hi.is_finite() {
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            let o = p(mid)?;
            probes.push((mid, o));
            match o {
                Some(true) => hi = mid,
                Some(false) => lo = mid,
                None => {
                    flagged = true;
                    break;
                }
            }
        }
    } else {
        flagged = true;
    }
    Ok(MuBracket { lo, hi: ExtReal::of(hi), flagged, probes })
}

/// Brackets the four proxies on the points `c` of `s` (all when empty).
pub fn measure_suite(s: &Support, c: &[usize], n: &NormSpec, eps_grid: &[f64], caps: &SwcCaps, fixture: &str) -> Result<MuReport> {
    let k = caps.index_cap;
    if k == 0 || k > 11 {
        return invalid("index cap must be between 1 and 11");
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return invalid("eps grid must be nonempty and positive");
    }
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let keep: Vec<usize> = if c.is_empty() { (0..s.len()).collect() } else { c.to_vec() };
    let sub = Arc::new(s.subset(&keep));
    let dim = sub.dim();
    let extra = default_extra(dim);
    let dict = default_dictionary(dim, extra);
    let d = PseudometricSpec::norm(n.clone());
    let all: Vec<usize> = (0..sub.len()).collect();
    let pts = sub.points();
    let diam = (0..sub.len()).flat_map(|i| (i + 1..sub.len()).map(move |j| (i, j))).map(|(i, j)| d.dist(&sub, i, j)).fold(0.0, f64::max);
    let mut report = MuReport {
        fixture: fixture.to_string(),
        dictionary: format!("default:{extra}"),
        norm: n.to_json(),
        spacing: sub.spacing(),
        points: sub.len(),
        caps: *caps,
        eps_grid: grid.clone(),
        mu1: MuBracket::zero(),
        mu2: MuBracket::zero(),
        mu3: None,
        mu4: None,
        mu5: MuBracket::zero(),
        mu6: MuBracket::zero(),
        note: ABSENT_NOTE.to_string(),
    };
    if diam == 0.0 {
        return Ok(report);
    }
    let p1 = |e: f64| -> Result<Option<bool>> {
        Ok(match convex_separation_sequence(&pts, e, k + 1, n, caps.seq_budget)? {
            SeqSearch::Found(_) => Some(false),
            SeqSearch::None => Some(true),
            SeqSearch::Budget => None,
        })
    };
    let p2 = |e: f64| -> Result<Option<bool>> { Ok(Some(max_separated_tree_height(&sub, e, &d, None, k)?.height < k)) };
    let p5 = |e: f64| -> Result<Option<bool>> { Ok(Some(matches!(dz_index(&sub, &all, &d, e, &dict, k)?.dz, Dz::Finite(m) if m < k))) };
    let p6 = |e: f64| -> Result<Option<bool>> {
        match height_function(&sub, e, &d, k) {
            Ok(h) => {
                let env = convex_envelope(&exp_transform(&h, 1.0)?)?.envelope;
                if delta_modulus(&env, e, &d)?.delta.get() > 0.0 {
                    return Ok(Some(true));
                }
            }
            Err(Error::CapExceeded(_)) => {}
            Err(err) => return Err(err),
        }
        match uc_function_from_derivation(&sub, &all, &d, e, &dict, k, HalfMode::Prose) {
            Ok(u) => Ok(Some(u.half_dz < k && delta_modulus(&u.phi, e, &d)?.delta.get() > 0.0)),
            Err(Error::CapExceeded(_)) => Ok(Some(false)),
            Err(err) => Err(err),
        }
    };
    report.mu1 = threshold(&grid, caps.bisect_steps, &p1)?;
    report.mu2 = threshold(&grid, caps.bisect_steps, &p2)?;
    report.mu5 = threshold(&grid, caps.bisect_steps, &p5)?;
    report.mu6 = threshold(&grid, caps.bisect_steps, &p6)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainVerdict {
    pub links: Vec<ChainLink>,
    /// The `μ2` and `μ6` brackets overlap.
    pub mu2_mu6_overlap: bool,
    pub holds: bool,
}

/// `a ≤ k·b` for some values inside the brackets.
fn le(a: &MuBracket, k: f64, b: &MuBracket) -> bool {
    a.lo <= k * b.hi.get() + 1e-12
}

/// Checks `μ1 ≤ μ2`, `μ6 ≤ μ2`, `μ2 ≤ 2μ5` and `μ6 ≤ μ5` up to bracket
/// slack.
pub fn chain_check(r: &MuReport) -> ChainVerdict {
    let links = vec![
        ChainLink { relation: "mu1 <= mu2".into(), holds: le(&r.mu1, 1.0, &r.mu2) },
        ChainLink { relation: "mu6 <= mu2".into(), holds: le(&r.mu6, 1.0, &r.mu2) },
        ChainLink { relation: "mu2 <= 2 mu5".into(), holds: le(&r.mu2, 2.0, &r.mu5) },
        ChainLink { relation: "mu6 <= mu5".into(), holds: le(&r.mu6, 1.0, &r.mu5) },
    ];
    let holds = links.iter().all(|l| l.holds);
    ChainVerdict { links, mu2_mu6_overlap: le(&r.mu2, 1.0, &r.mu6) && le(&r.mu6, 1.0, &r.mu2), holds }
}

/// Per measure, whether the upper end does not increase from `coarse` to
/// `fine`.
pub fn brackets_shrink(coarse: &MuReport, fine: &MuReport) -> Vec<(&'static str, bool)> {
    [("mu1", &coarse.mu1, &fine.mu1), ("mu2", &coarse.mu2, &fine.mu2), ("mu5", &coarse.mu5, &fine.mu5), ("mu6", &coarse.mu6, &fine.mu6)]
        .iter()
        .map(|&(name, a, b)| (name, b.hi.get() <= a.hi.get() + 1e-12))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_dyadic_grid;

    #[test]
    fn single_point_is_zero() {
        let s = Support::from_points(&[vec![0.0, 0.0]]).unwrap();
        let r = measure_suite(&s, &[], &NormSpec::LINF, &[0.5, 1.0], &SwcCaps::default(), "point").unwrap();
        assert_eq!((r.mu1.hi.get(), r.mu2.hi.get(), r.mu5.hi.get(), r.mu6.hi.get()), (0.0, 0.0, 0.0, 0.0));
        assert!(chain_check(&r).holds);
    }

    #[test]
    fn segment_brackets() {
        let s = Support::grid(&make_dyadic_grid(&[0.0], 1.0 / 16.0, &[17]).unwrap());
        let r = measure_suite(&s, &[], &NormSpec::L2, &[0.25, 0.5, 1.0], &SwcCaps { index_cap: 2, seq_budget: 100_000, bisect_steps: 2 }, "segment").unwrap();
        for m in [&r.mu1, &r.mu2, &r.mu5, &r.mu6] {
            assert!(m.lo <= m.hi.get());
        }
        assert!(chain_check(&r).holds);
        let mut bad = r.clone();
        bad.mu1.lo = 10.0;
        assert!(!chain_check(&bad).holds);
    }
}
