//! Planar envelopes, derivations and specs against direct computations.

use std::sync::Arc;

use proptest::prelude::*;
use ucvx::dentability::{default_dictionary, default_extra, dz_index, DerivationTrace, Dz};
use ucvx::envelope::convex_envelope;
use ucvx::moduli::midpoint_convexity_gap;
use ucvx::{make_dyadic_grid, NormSpec, PseudometricSpec, Support, TabFunc};

const H: f64 = 0.25;

fn rect(nx: usize, ny: usize) -> Arc<Support> {
    Arc::new(Support::grid(&make_dyadic_grid(&[0.0, 0.0], H, &[nx, ny]).unwrap()))
}

/// Barycentric weights of `x` in the triangle `abc`, if it lies inside.
fn barycentric(x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> Option<[f64; 3]> {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det.abs() < 1e-12 {
        return None;
    }
    let u = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let v = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    let w = 1.0 - u - v;
    (u >= -1e-12 && v >= -1e-12 && w >= -1e-12).then_some([w, u, v])
}

/// Lower envelope by minimizing over every triangle containing the point.
/// Degenerate triangles are covered by non-degenerate ones on a full grid.
fn triangle_envelope(f: &TabFunc) -> Vec<f64> {
    let s = f.support();
    let n = s.len();
    (0..n)
        .map(|m| {
            let x = s.point(m);
            let mut best = f.value(m);
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        if let Some(w) = barycentric(x, s.point(i), s.point(j), s.point(k)) {
                            best = best.min(w[0] * f.value(i) + w[1] * f.value(j) + w[2] * f.value(k));
                        }
                    }
                }
            }
            best
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelope_matches_triangle_oracle(nx in 2usize..5, ny in 2usize..4, seed in prop::collection::vec(-1.0f64..1.0, 12)) {
        let s = rect(nx, ny);
        let f = TabFunc::new(s.clone(), seed[..s.len()].to_vec(), "f").unwrap();
        let r = convex_envelope(&f).unwrap();
        let oracle = triangle_envelope(&f);
        for (i, (a, b)) in r.envelope.values().iter().zip(&oracle).enumerate() {
            prop_assert!((a - b).abs() <= 1e-9, "point {i}: {a} vs {b}");
        }
        for (i, set) in r.active_sets.iter().enumerate() {
            let w: f64 = set.iter().map(|&(_, t)| t).sum();
            prop_assert!((w - 1.0).abs() <= 1e-9);
            for axis in 0..2 {
                let x: f64 = set.iter().map(|&(p, t)| t * s.point(p)[axis]).sum();
                prop_assert!((x - s.point(i)[axis]).abs() <= 1e-9);
            }
            let v: f64 = set.iter().map(|&(p, t)| t * f.value(p)).sum();
            prop_assert!((v - r.envelope.value(i)).abs() <= 1e-9);
        }
    }

    #[test]
    fn envelope_is_convex_and_idempotent(values in prop::collection::vec(-1.0f64..1.0, 25)) {
        let f = TabFunc::new(rect(5, 5), values, "f").unwrap();
        let env = convex_envelope(&f).unwrap().envelope;
        prop_assert!(env.values().iter().zip(f.values()).all(|(e, v)| e <= &(v + 1e-12)));
        prop_assert!(midpoint_convexity_gap(&env).0 >= -1e-9);
        let again = convex_envelope(&env).unwrap().envelope;
        for (a, b) in again.values().iter().zip(env.values()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn specs_roundtrip_through_json(values in prop::collection::vec(-4.0f64..4.0, 12)) {
        let f = TabFunc::new(rect(4, 3), values, "g").unwrap();
        let text = serde_json::to_string(&f.to_spec()).unwrap();
        let back = TabFunc::from_json(&text).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.support().points(), f.support().points());
    }
}

fn trace(s: &Support, eps: f64, extra: usize) -> DerivationTrace {
    let all: Vec<usize> = (0..s.len()).collect();
    let d = PseudometricSpec::norm(NormSpec::L2);
    dz_index(s, &all, &d, eps, &default_dictionary(s.dim(), extra), 64).unwrap()
}

#[test]
fn derivations_are_nested_and_monotone_in_eps() {
    let s = rect(5, 5);
    let mut last = usize::MAX;
    for eps in [0.3, 0.6, 0.9, 1.2] {
        let tr = trace(&s, eps, default_extra(2));
        for w in tr.stages.windows(2) {
            assert!(w[1].iter().all(|i| w[0].contains(i)));
            assert!(w[1].len() < w[0].len());
        }
        let Dz::Finite(n) = tr.dz else { panic!("square should be dentable at {eps}") };
        assert!(tr.stages[n].is_empty());
        assert!(n <= last);
        last = n;
    }
}

#[test]
fn axis_slices_cannot_dent_the_square() {
    // Every axis strip of the unit square has diameter at least 1.
    let tr = trace(&rect(5, 5), 0.6, 0);
    assert!(matches!(tr.dz, Dz::CapExceeded));
    assert_eq!(tr.stages.len(), 2);
    assert_eq!(tr.stages[0], tr.stages[1]);
}

#[test]
fn unit_interval_index() {
    let s = Support::grid(&make_dyadic_grid(&[0.0], 1.0 / 64.0, &[65]).unwrap());
    let all: Vec<usize> = (0..s.len()).collect();
    let d = PseudometricSpec::norm(NormSpec::L2);
    let tr = dz_index(&s, &all, &d, 0.3, &default_dictionary(1, 0), 64).unwrap();
    assert!(matches!(tr.dz, Dz::Finite(2)));
    let tr = dz_index(&s, &all, &d, 0.01, &default_dictionary(1, 0), 2).unwrap();
    assert!(matches!(tr.dz, Dz::CapExceeded));
}
