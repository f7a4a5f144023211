//! One-dimensional operations against brute-force oracles.

use std::sync::Arc;

use proptest::prelude::*;
use ucvx::envelope::convex_envelope;
use ucvx::moduli::{delta_modulus, gage, quasi_modulus};
use ucvx::transforms::{exp_transform, inf_convolution};
use ucvx::trees::{height_function, max_separated_tree_height, tree_separation_check};
use ucvx::{make_dyadic_grid, NormSpec, PseudometricSpec, Support, TabFunc};

const H: f64 = 1.0 / 16.0;

fn line(n: usize) -> Arc<Support> {
    Arc::new(Support::grid(&make_dyadic_grid(&[-0.5], H, &[n]).unwrap()))
}

fn func(values: Vec<f64>) -> TabFunc {
    TabFunc::new(line(values.len()), values, "f").unwrap()
}

fn l2() -> PseudometricSpec {
    PseudometricSpec::norm(NormSpec::L2)
}

fn brute_gap(v: &[f64], eps: f64, gap: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (j - i) % 2 == 0 && (j - i) as f64 * H >= eps - 1e-12 {
                best = best.min(gap(v[i], v[j], v[(i + j) / 2]));
            }
        }
    }
    best
}

/// Lower convex envelope by the largest affine combination of two samples
/// below each point, over all bracketing pairs.
fn bracket_envelope(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|m| {
            let mut best = v[m];
            for a in 0..=m {
                for b in m..n {
                    if a < b {
                        let t = (m - a) as f64 / (b - a) as f64;
                        best = best.min((1.0 - t) * v[a] + t * v[b]);
                    }
                }
            }
            best
        })
        .collect()
}

fn convex_values() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec((-2.0f64..2.0, -1.0f64..1.0), 1..6), 3usize..24)
        .prop_map(|(pieces, n)| (0..n).map(|i| pieces.iter().map(|&(a, b)| a * (i as f64 * H - 0.5) + b).fold(f64::NEG_INFINITY, f64::max)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulus_matches_pair_scan(v in prop::collection::vec(-1.0f64..1.0, 2..28), k in 1usize..8) {
        let eps = k as f64 * H;
        let f = func(v.clone());
        let d = delta_modulus(&f, eps, &l2()).unwrap().delta.get();
        let q = quasi_modulus(&f, eps, &l2()).unwrap().delta.get();
        prop_assert_eq!(d, brute_gap(&v, eps, |a, b, m| (a + b) / 2.0 - m));
        prop_assert_eq!(q, brute_gap(&v, eps, |a, b, m| a.max(b) - m));
        prop_assert!(q >= d || d.is_infinite());
    }

    #[test]
    fn modulus_is_monotone_in_eps(v in prop::collection::vec(-1.0f64..1.0, 3..28), k in 1usize..6) {
        let f = func(v);
        let small = delta_modulus(&f, k as f64 * H, &l2()).unwrap().delta.get();
        let large = delta_modulus(&f, (k + 2) as f64 * H, &l2()).unwrap().delta.get();
        prop_assert!(large >= small);
    }

    #[test]
    fn envelope_matches_bracket_oracle(v in prop::collection::vec(-1.0f64..1.0, 2..40)) {
        let f = func(v.clone());
        let env = convex_envelope(&f).unwrap().envelope;
        let oracle = bracket_envelope(&v);
        for (a, b) in env.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn gage_sandwich_on_convex_functions(v in convex_values(), k in 1usize..6) {
        let eps = 2.0 * k as f64 * H;
        let f = func(v);
        let d = delta_modulus(&f, eps, &l2()).unwrap().delta.get();
        let p = gage(&f, eps, &NormSpec::L2).unwrap().get();
        if d.is_finite() {
            prop_assert!(2.0 * d <= p + 1e-9 && p <= 4.0 * d + 1e-9, "delta {d} gage {p}");
        }
    }

    #[test]
    fn inf_convolution_matches_direct_minimum(a in prop::collection::vec(-1.0f64..1.0, 2..16), b in prop::collection::vec(-1.0f64..1.0, 2..16)) {
        let (f, g) = (func(a.clone()), func(b.clone()));
        let h = inf_convolution(&f, &g).unwrap();
        prop_assert_eq!(h.len(), a.len() + b.len() - 1);
        for k in 0..h.len() {
            let direct = (0..a.len()).filter(|&i| k >= i && k - i < b.len()).map(|i| a[i] + b[k - i]).fold(f64::INFINITY, f64::min);
            prop_assert!((h.value(k) - direct).abs() <= 1e-12);
            prop_assert!((h.support().point(k)[0] - (-1.0 + k as f64 * H)).abs() <= 1e-12);
        }
    }

    #[test]
    fn exp_transform_of_height_functions(n in 3usize..40, k in 1usize..8) {
        let eps = k as f64 * H;
        let f = height_function(&line(n), eps, &l2(), 64).unwrap();
        let q = quasi_modulus(&f, eps, &l2()).unwrap().delta.get();
        prop_assert!(q >= 1.0);
        let g = exp_transform(&f, 1.0).unwrap();
        let dg = delta_modulus(&g, eps, &l2()).unwrap().delta.get();
        prop_assert!(dg >= 3f64.powf(f.inf()) / 2.0 - 1e-9);
    }
}

/// Tree heights on a 1D grid from level sets of midpoints.
fn level_heights(n: usize, eps: f64) -> usize {
    let mut level = vec![true; n];
    let mut h = 0;
    loop {
        let next: Vec<bool> = (0..n).map(|m| (1..=m.min(n - 1 - m)).any(|k| 2.0 * k as f64 * H >= eps - 1e-12 && level[m - k] && level[m + k])).collect();
        if !next.contains(&true) {
            return h;
        }
        h += 1;
        level = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tree_height_matches_level_sets(n in 2usize..40, k in 1usize..12) {
        let eps = k as f64 * H;
        let s = line(n);
        let r = max_separated_tree_height(&s, eps, &l2(), None, 64).unwrap();
        prop_assert_eq!(r.height, level_heights(n, eps));
        if let Some(t) = &r.witness {
            t.check_consistency().unwrap();
            prop_assert!(tree_separation_check(t, eps, &l2(), &s).unwrap());
        }
    }
}

#[test]
fn example_modulus_and_envelope() {
    let s = Arc::new(Support::grid(&make_dyadic_grid(&[-2.0], 1.0 / 256.0, &[1025]).unwrap()));
    let f = TabFunc::from_fn(s, "ex", |x| (x[0] * x[0] - 1.0 / 9.0).abs()).unwrap();
    assert!((delta_modulus(&f, 1.0, &l2()).unwrap().delta.get() - 1.0 / 36.0).abs() < 1e-3);
    let env = convex_envelope(&f).unwrap().envelope;
    assert!(env.values().iter().zip(f.values()).all(|(e, v)| e <= v));
    assert!(env.eval(&[0.0]).get().abs() < 1e-3);
}
