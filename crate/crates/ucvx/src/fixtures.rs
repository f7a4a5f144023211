//! Deterministic fixture catalog.
//!
//! Ids: `ex26`, `ex26-unit`, `ex211`, `interval`, `square`, `linf-ball`,
//! `l1-ball`, `rand-convex:<seed>`, `rand-uc:<seed>`. Randomized fixtures are
//! generated from a ChaCha8 stream keyed by the seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{DyadicGrid, NormSpec, Support, TabFunc};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FixtureInfo {
    pub id: &'static str,
    pub description: &'static str,
    /// Scale the fixture is meant to be probed at.
    pub eps: f64,
}

pub fn catalog() -> Vec<FixtureInfo> {
    vec![
        FixtureInfo { id: "ex26", description: "|x^2 - 1/9| on [-2, 2], step 2^-10; delta(1) = 1/36", eps: 1.0 },
        FixtureInfo { id: "ex26-unit", description: "|x^2 - 1/9| on [-1, 1], step 2^-6", eps: 0.2 },
        FixtureInfo { id: "ex211", description: "x for x < 0, x/2 for x >= 0 on [-2, 2], step 2^-6; concave and uniformly quasi-convex", eps: 1.0 },
        FixtureInfo { id: "interval", description: "zero function on [0, 1], step 2^-6", eps: 0.5 },
        FixtureInfo { id: "square", description: "zero function on [0, 1]^2, step 2^-4", eps: 0.7 },
        FixtureInfo { id: "linf-ball", description: "l-infinity norm on the unit l-infinity ball of R^2, step 2^-3", eps: 0.5 },
        FixtureInfo { id: "l1-ball", description: "l1 norm on the unit l1 ball of R^2, step 2^-3", eps: 0.5 },
        FixtureInfo { id: "rand-convex:<seed>", description: "max of 2..=129 random affine functions on [-1, 1], step 2^-6", eps: 0.5 },
        FixtureInfo {
            id: "rand-uc:<seed>",
            description: "a|x|^2 plus a random perturbation in [0, a eps^2/8] on [-1, 1] (even seeds) or [-1, 1]^2 (odd seeds); not convex, delta(eps) >= a eps^2/8",
            eps: 0.5,
        },
    ]
}

fn grid(dim: usize, lo: f64, hi: f64, step: f64) -> Arc<Support> {
    Arc::new(Support::grid(&DyadicGrid::cube(dim, lo, hi, step).expect("fixture grids are valid")))
}

/// Points of the cube `[-1, 1]^dim` at `step` inside the closed `n`-ball.
pub fn ball(n: &NormSpec, dim: usize, step: f64) -> Result<Arc<Support>> {
    let full = Support::grid(&DyadicGrid::cube(dim, -1.0, 1.0, step)?);
    let keep: Vec<usize> = (0..full.len()).filter(|&i| n.eval(full.point(i)) <= 1.0 + 1e-12).collect();
    Ok(Arc::new(full.subset(&keep)))
}

pub fn ex26(lo: f64, hi: f64, step: f64) -> TabFunc {
    TabFunc::from_fn(grid(1, lo, hi, step), "ex26", |x| (x[0] * x[0] - 1.0 / 9.0).abs()).expect("finite")
}

pub fn rand_convex(seed: u64) -> TabFunc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=129);
    let pieces: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0))).collect();
    TabFunc::from_fn(grid(1, -1.0, 1.0, 1.0 / 64.0), format!("rand-convex:{seed}"), |x| {
        pieces.iter().map(|&(a, b)| a * x[0] + b).fold(f64::NEG_INFINITY, f64::max)
    })
    .expect("finite")
}

/// `a|x|² + p(x)` with `p ∈ [0, a·eps²/8]`, so that `δ(eps) ≥ a·eps²/8`.
pub fn rand_uc(seed: u64, eps: f64) -> TabFunc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, step) = if seed % 2 == 0 { (1, 1.0 / 32.0) } else { (2, 1.0 / 8.0) };
    let s = grid(dim, -1.0, 1.0, step);
    let a = rng.gen_range(0.5..2.0);
    let amp = a * eps * eps / 8.0;
    let values = (0..s.len()).map(|i| a * s.point(i).iter().map(|v| v * v).sum::<f64>() + amp * rng.gen::<f64>()).collect();
    TabFunc::new(s, values, format!("rand-uc:{seed}")).expect("finite")
}

pub fn fixture(id: &str) -> Result<TabFunc> {
    let seeded = |prefix: &str| id.strip_prefix(prefix).map(|s| s.parse::<u64>());
    if let Some(seed) = seeded("rand-convex:") {
        return Ok(rand_convex(seed.map_err(|_| crate::Error::Invalid(format!("bad seed in {id}")))?));
    }
    if let Some(seed) = seeded("rand-uc:") {
        return Ok(rand_uc(seed.map_err(|_| crate::Error::Invalid(format!("bad seed in {id}")))?, 0.5));
    }
    let f = match id {
        "ex26" => ex26(-2.0, 2.0, 1.0 / 1024.0),
        "ex26-unit" => ex26(-1.0, 1.0, 1.0 / 64.0),
        "ex211" => TabFunc::from_fn(grid(1, -2.0, 2.0, 1.0 / 64.0), "ex211", |x| if x[0] < 0.0 { x[0] } else { x[0] / 2.0 })?,
        "interval" => TabFunc::from_fn(grid(1, 0.0, 1.0, 1.0 / 64.0), "interval", |_| 0.0)?,
        "square" => TabFunc::from_fn(grid(2, 0.0, 1.0, 1.0 / 16.0), "square", |_| 0.0)?,
        "linf-ball" => TabFunc::from_fn(ball(&NormSpec::LINF, 2, 1.0 / 8.0)?, "linf-ball", |x| NormSpec::LINF.eval(x))?,
        "l1-ball" => TabFunc::from_fn(ball(&NormSpec::L1, 2, 1.0 / 8.0)?, "l1-ball", |x| NormSpec::L1.eval(x))?,
        _ => return invalid(format!("unknown fixture {id}")),
    };
    Ok(f.with_name(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_resolve_and_are_deterministic() {
        for id in ["ex26", "ex26-unit", "ex211", "interval", "square", "linf-ball", "l1-ball", "rand-convex:7", "rand-uc:3"] {
            let a = fixture(id).unwrap();
            let b = fixture(id).unwrap();
            assert_eq!(a.values(), b.values(), "{id}");
        }
        assert_eq!(fixture("ex26").unwrap().len(), 4097);
        assert_eq!(fixture("linf-ball").unwrap().len(), 289);
        assert_eq!(fixture("l1-ball").unwrap().len(), 145);
        assert!(fixture("nope").is_err());
        assert!(fixture("rand-uc:x").is_err());
    }
}
