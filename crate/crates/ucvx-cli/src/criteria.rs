//! Acceptance criteria A1–A15, each runnable end to end.
//!
//! Every criterion returns an [`Outcome`] whose JSON is deterministic; the
//! reference values are recomputed here by small independent oracles
//! (brute-force scans, the iterative Jensen fixpoint, direct inf-convolution,
//! exhaustive tree levels) rather than read back from the library.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use ucvx::dc_approx::{cepedello_approx, dc_bounds_check};
use ucvx::dentability::{default_dictionary, default_extra, dz_index, uc_function_from_derivation, Dz, HalfMode};
use ucvx::envelope::{convex_envelope, local_envelope_reduction};
use ucvx::fixtures::{ex26, fixture, rand_convex, rand_uc};
use ucvx::moduli::{coercivity_profile, delta_modulus, gage, midpoint_convexity_gap, minimizer_stability_probe, quasi_modulus, stability_eta};
use ucvx::renorming::enflo_pipeline;
use ucvx::swc::{brackets_shrink, chain_check, measure_suite, SwcCaps};
use ucvx::transforms::{exp_transform, inf_convolution};
use ucvx::trees::{height_function, max_separated_tree_height};
use ucvx::{DyadicGrid, NormSpec, PseudometricSpec, Result, Support, TabFunc};

pub const IDS: [&str; 15] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11", "A12", "A13", "A14", "A15"];

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
}

fn outcome(id: &str, title: &str, pass: bool, summary: String, details: Value) -> Outcome {
    Outcome { id: id.into(), title: title.into(), pass, summary, details }
}

fn l2() -> PseudometricSpec {
    PseudometricSpec::norm(NormSpec::L2)
}

const TREE_CAP: usize = 64;

pub fn run(id: &str) -> Result<Outcome> {
    match id {
        "A1" => a1(),
        "A2" => a2(),
        "A3" => a3(),
        "A4" => a4(),
        "A5" => a5(),
        "A6" => a6(),
        "A7" => a7(),
        "A8" => a8(),
        "A9" => a9(),
        "A10" => a10(),
        "A11" => a11(),
        "A12" => a12(),
        "A13" => a13(),
        "A14" => a14(),
        "A15" => {
            let first = IDS[..14].iter().map(|id| Ok((id.to_string(), serde_json::to_vec(&run(id)?)?))).collect::<Result<Vec<_>>>()?;
            determinism(&first)
        }
        _ => Err(ucvx::Error::Invalid(format!("unknown criterion {id}; expected one of {}", IDS.join(", ")))),
    }
}

/// Reruns each criterion in a 3-thread pool and compares its JSON bytes with
/// `first`.
pub fn determinism(first: &[(String, Vec<u8>)]) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().map_err(|e| ucvx::Error::Invalid(e.to_string()))?;
    let mut rows = Vec::new();
    for (id, bytes) in first {
        let again = pool.install(|| run(id))?;
        let same = serde_json::to_vec(&again)? == *bytes;
        rows.push(json!({ "criterion": id, "identical": same, "bytes": bytes.len() }));
    }
    let bad: Vec<&str> = rows.iter().filter(|r| r["identical"] == false).map(|r| r["criterion"].as_str().unwrap_or("")).collect();
    Ok(outcome(
        "A15",
        "determinism",
        bad.is_empty(),
        if bad.is_empty() { format!("{} criteria byte-identical across runs and thread counts", rows.len()) } else { format!("outputs differ for {}", bad.join(", ")) },
        json!({ "rows": rows }),
    ))
}

/// `min (f(x) + f(y))/2 − f(m)` over 1D grid pairs with `|x − y| ≥ eps`.
fn brute_delta_1d(v: &[f64], h: f64, eps: f64) -> f64 {
    let n = v.len();
    let mut best = f64::INFINITY;
    for m in 0..n {
        for k in 1..=m.min(n - 1 - m) {
            if 2.0 * k as f64 * h >= eps - 1e-12 {
                best = best.min(0.5 * (v[m - k] + v[m + k]) - v[m]);
            }
        }
    }
    best
}

/// Largest midpoint-convex minorant on a 1D grid by Gauss–Seidel Jensen
/// sweeps. On a 1D grid it is the restriction of the convex envelope.
fn jensen_fixpoint_1d(v: &[f64]) -> (Vec<f64>, usize) {
    let n = v.len();
    let mut g = v.to_vec();
    for sweep in 1..=100_000 {
        let mut moved = 0.0f64;
        for m in 1..n.saturating_sub(1) {
            let mut best = g[m];
            for k in 1..=m.min(n - 1 - m) {
                best = best.min(0.5 * (g[m - k] + g[m + k]));
            }
            moved = moved.max(g[m] - best);
            g[m] = best;
        }
        if moved < 1e-15 {
            return (g, sweep);
        }
    }
    (g, 100_000)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn a1() -> Result<Outcome> {
    let f = fixture("ex26")?;
    let r = delta_modulus(&f, 1.0, &l2())?;
    let got = r.delta.get();
    let oracle = brute_delta_1d(f.values(), f.support().spacing(), 1.0);
    let pass = (got - 1.0 / 36.0).abs() <= 1e-3 && (got - oracle).abs() <= 1e-12;
    Ok(outcome(
        "A1",
        "modulus of |x^2 - 1/9| at eps = 1",
        pass,
        format!("delta = {got:.6} (1/36 = {:.6}, brute force {oracle:.6})", 1.0 / 36.0),
        json!({ "delta": got, "target": 1.0 / 36.0, "tolerance": 1e-3, "brute_force": oracle, "witness": r.witness_points, "pairs": r.pair_count }),
    ))
}

fn a2() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut fails = 0;
    for seed in 0..50u64 {
        let f = rand_convex(seed);
        for eps in [0.25, 0.5, 1.0] {
            let d = delta_modulus(&f, eps, &l2())?.delta.get();
            let p = gage(&f, eps, &NormSpec::L2)?.get();
            let oracle = brute_delta_1d(f.values(), f.support().spacing(), eps);
            let ok = 2.0 * d <= p + 1e-9 && p <= 4.0 * d + 1e-9 && (d - oracle).abs() <= 1e-12;
            if !ok {
                fails += 1;
            }
            rows.push(json!({ "seed": seed, "eps": eps, "delta": d, "gage": p, "ok": ok }));
        }
    }
    Ok(outcome(
        "A2",
        "2 delta <= gage <= 4 delta on random convex functions",
        fails == 0,
        format!("{} of {} (seed, eps) cases inside the sandwich", rows.len() - fails, rows.len()),
        json!({ "tolerance": 1e-9, "rows": rows }),
    ))
}

fn a3() -> Result<Outcome> {
    // ±1/3 are nodes at spacing 1/768, so the envelope is exactly max(0, x² − 1/9) there.
    let f = ex26(-2.0, 2.0, 1.0 / 768.0);
    let env = convex_envelope(&f)?.envelope;
    let s = f.support();
    let formula: Vec<f64> = (0..s.len()).map(|i| (s.point(i)[0].powi(2) - 1.0 / 9.0).max(0.0)).collect();
    let (jensen, sweeps) = jensen_fixpoint_1d(f.values());
    let dev_formula = max_abs_diff(env.values(), &formula);
    let dev_jensen = max_abs_diff(env.values(), &jensen);

    let fd = fixture("ex26")?;
    let env_d = convex_envelope(&fd)?.envelope;
    let sd = fd.support();
    let (jensen_d, sweeps_d) = jensen_fixpoint_1d(fd.values());
    let dev_jensen_d = max_abs_diff(env_d.values(), &jensen_d);
    let formula_d: Vec<f64> = (0..sd.len()).map(|i| (sd.point(i)[0].powi(2) - 1.0 / 9.0).max(0.0)).collect();
    let dev_formula_d = max_abs_diff(env_d.values(), &formula_d);
    let delta_ex = delta_modulus(&env_d, 1.01, &l2())?.delta.get();

    let mut rows = Vec::new();
    let mut uc_ok = delta_ex > 0.0;
    for seed in 0..20u64 {
        let g = rand_uc(seed, 0.5);
        let din = delta_modulus(&g, 0.5, &l2())?.delta.get();
        let (gap, _) = midpoint_convexity_gap(&g);
        let denv = delta_modulus(&convex_envelope(&g)?.envelope, 1.01 * 0.5, &l2())?.delta.get();
        let ok = din > 0.0 && denv > 0.0;
        uc_ok &= ok;
        rows.push(json!({ "seed": seed, "dim": g.support().dim(), "delta_f": din, "convexity_gap_f": gap, "delta_envelope": denv, "ok": ok }));
    }
    let shape_ok = dev_formula <= 1e-9 && dev_jensen <= 1e-9 && dev_jensen_d <= 1e-9;
    Ok(outcome(
        "A3",
        "envelopes of uniformly convex functions",
        shape_ok && uc_ok,
        format!("formula dev {dev_formula:.1e}, Jensen dev {dev_jensen:.1e} (dyadic grid {dev_jensen_d:.1e}); {} of 21 envelope moduli positive", rows.iter().filter(|r| r["ok"] == true).count() + usize::from(delta_ex > 0.0)),
        json!({
            "tolerance": 1e-9,
            "third_grid": { "spacing": 1.0 / 768.0, "points": s.len(), "dev_formula": dev_formula, "dev_jensen": dev_jensen, "jensen_sweeps": sweeps },
            "dyadic_grid": { "spacing": sd.spacing(), "points": sd.len(), "dev_jensen": dev_jensen_d, "jensen_sweeps": sweeps_d, "dev_formula_informative": dev_formula_d, "delta_envelope_1_01": delta_ex },
            "random": rows,
        }),
    ))
}

fn a4() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for seed in 100..140u64 {
        let f = rand_uc(seed, 0.5);
        let env = convex_envelope(&f)?.envelope;
        let s = f.support();
        let n = NormSpec::L2;
        let local = (0..s.len()).map(|i| local_envelope_reduction(&f, s.point(i), 0.5, &n).map(|v| v.get())).collect::<Result<Vec<_>>>()?;
        let dev = max_abs_diff(env.values(), &local);
        worst = worst.max(dev);
        rows.push(json!({ "seed": seed, "dim": s.dim(), "points": s.len(), "max_deviation": dev }));
    }
    Ok(outcome(
        "A4",
        "local envelope reduction agrees with the global envelope",
        worst <= 1e-9,
        format!("40 fixtures (20 per dimension), worst deviation {worst:.1e}"),
        json!({ "eps": 0.5, "tolerance": 1e-9, "rows": rows }),
    ))
}

fn tree_fixtures() -> Result<Vec<(&'static str, TabFunc, NormSpec, f64)>> {
    let mut out = Vec::new();
    for (id, n, eps_list) in [
        ("interval", NormSpec::L2, vec![0.25, 0.5, 1.0]),
        ("square", NormSpec::L2, vec![0.5, 0.7]),
        ("linf-ball", NormSpec::LINF, vec![0.5, 1.0]),
        ("l1-ball", NormSpec::L1, vec![0.5, 1.0]),
    ] {
        let s = fixture(id)?.support().clone();
        for eps in eps_list {
            let h = height_function(&s, eps, &PseudometricSpec::norm(n.clone()), TREE_CAP)?;
            out.push((id, h, n.clone(), eps));
        }
    }
    Ok(out)
}

fn a5() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut ok_all = true;
    for (id, h, n, eps) in tree_fixtures()? {
        let d = PseudometricSpec::norm(n);
        let q = quasi_modulus(&h, eps, &d)?.delta.get();
        let g = exp_transform(&h, 1.0)?;
        let delta = delta_modulus(&g, eps, &d)?.delta.get();
        let bound = 3f64.powf(h.inf()) / 2.0;
        let ok = q >= 1.0 && delta >= bound - 1e-9;
        ok_all &= ok;
        rows.push(json!({ "fixture": id, "eps": eps, "inf_f": h.inf(), "quasi_modulus": q, "delta_exp": delta, "bound": bound, "ok": ok }));
    }
    Ok(outcome(
        "A5",
        "exponential transform of tree-height functions",
        ok_all,
        format!("{} of {} cases meet 3^inf f / 2", rows.iter().filter(|r| r["ok"] == true).count(), rows.len()),
        json!({ "delta": 1.0, "tolerance": 1e-9, "rows": rows }),
    ))
}

fn a6() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut ok_all = true;
    for (id, n, eps) in [("interval", NormSpec::L2, 0.5), ("linf-ball", NormSpec::LINF, 0.5)] {
        let s = fixture(id)?.support().clone();
        let d = PseudometricSpec::norm(n);
        let h = height_function(&s, eps, &d, TREE_CAP)?;
        let phi = convex_envelope(&exp_transform(&h, 1.0)?)?.envelope;
        let (a, b) = (phi.inf(), phi.sup());
        let mut found = None;
        for k in [1.0, 1.01, 2.0, 3.0] {
            let delta = delta_modulus(&phi, k * eps, &d)?.delta.get();
            if delta > 0.0 {
                found = Some((k * eps, delta));
                break;
            }
        }
        let Some((scale, delta)) = found else {
            ok_all = false;
            rows.push(json!({ "fixture": id, "eps": eps, "ok": false, "note": "envelope modulus vanishes up to 3 eps" }));
            continue;
        };
        let height = max_separated_tree_height(&s, scale, &d, None, TREE_CAP)?.height;
        let bound = (b - a) / delta;
        let ok = height as f64 <= bound + 1e-9;
        ok_all &= ok;
        rows.push(json!({ "fixture": id, "eps": eps, "scale": scale, "inf": a, "sup": b, "delta": delta, "max_height": height, "bound": bound, "ok": ok }));
    }
    Ok(outcome(
        "A6",
        "tree height bounded by oscillation over modulus",
        ok_all,
        rows.iter().map(|r| format!("{}: height {} <= {:.3}", r["fixture"].as_str().unwrap_or(""), r["max_height"], r["bound"].as_f64().unwrap_or(f64::NAN))).collect::<Vec<_>>().join("; "),
        json!({ "rows": rows }),
    ))
}

/// Tree heights on a 1D grid by level sets: `L₀ = S`, `L_{k+1}` = midpoints
/// of `eps`-separated pairs in `L_k`.
fn exhaustive_height_1d(n: usize, h: f64, eps: f64) -> usize {
    let mut level = vec![true; n];
    let mut height = 0;
    loop {
        let next: Vec<bool> = (0..n).map(|m| (1..=m.min(n - 1 - m)).any(|k| 2.0 * k as f64 * h >= eps - 1e-12 && level[m - k] && level[m + k])).collect();
        if !next.iter().any(|&b| b) {
            return height;
        }
        height += 1;
        level = next;
    }
}

fn a7() -> Result<Outcome> {
    let f = fixture("interval")?;
    let s = f.support();
    let mut rows = Vec::new();
    let mut ok_all = true;
    for (eps, want) in [(1.0, 1usize), (0.5, 2), (1.0 + 1.0 / 64.0, 0), (1.5, 0)] {
        let got = max_separated_tree_height(s, eps, &l2(), None, TREE_CAP)?;
        let oracle = exhaustive_height_1d(s.len(), s.spacing(), eps);
        let ok = got.height == want && oracle == want && !got.at_least;
        ok_all &= ok;
        rows.push(json!({ "eps": eps, "expected": want, "height": got.height, "exhaustive": oracle, "root": got.root, "ok": ok }));
    }
    Ok(outcome(
        "A7",
        "tree heights on the unit interval",
        ok_all,
        rows.iter().map(|r| format!("h({}) = {}", r["eps"], r["height"])).collect::<Vec<_>>().join(", "),
        json!({ "spacing": s.spacing(), "rows": rows }),
    ))
}

fn a8() -> Result<Outcome> {
    let f = fixture("interval")?;
    let s = f.support();
    let all: Vec<usize> = (0..s.len()).collect();
    let tr = dz_index(s, &all, &l2(), 0.3, &default_dictionary(1, 0), TREE_CAP)?;
    let middle: Vec<usize> = (0..s.len()).filter(|&i| (0.3..=0.7).contains(&s.point(i)[0])).collect();
    let expected = vec![all.clone(), middle, Vec::new()];
    let pass = tr.dz == Dz::Finite(2) && tr.stages == expected;
    let ranges: Vec<Value> = tr.stages.iter().map(|st| if st.is_empty() { json!(null) } else { json!([s.point(st[0])[0], s.point(*st.last().unwrap())[0]]) }).collect();
    Ok(outcome(
        "A8",
        "dentability index of [0, 1] at eps = 0.3",
        pass,
        format!("Dz = {:?}, stage ranges {}", tr.dz, Value::Array(ranges.clone())),
        json!({ "dz": tr.dz, "stage_sizes": tr.stages.iter().map(Vec::len).collect::<Vec<_>>(), "stage_ranges": ranges }),
    ))
}

fn a9() -> Result<Outcome> {
    let f = fixture("square")?;
    let s = f.support();
    let d = l2();
    let all: Vec<usize> = (0..s.len()).collect();
    let dict = default_dictionary(2, default_extra(2));
    let dz_small = dz_index(s, &all, &d, 0.3, &dict, TREE_CAP)?.dz;
    let u = uc_function_from_derivation(s, &all, &d, 0.7, &dict, TREE_CAP, HalfMode::Prose)?;
    let delta = u.delta.get();
    let phi = &u.phi;
    let ps = phi.support();
    let mut checked = 0u64;
    let mut violations = 0u64;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let Some(m) = ps.midpoint(i, j) else { continue };
            let gap = 0.5 * (phi.value(i) + phi.value(j)) - phi.value(m);
            if gap <= delta {
                checked += 1;
                let dx = ps.diff(i, j);
                if NormSpec::L2.eval(&dx[..2]) > 0.7 + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    let dz = dz_index(s, &all, &d, 0.7, &dict, TREE_CAP)?.dz;
    let bound = phi.osc() / delta + 1.0;
    let dz_ok = matches!(dz, Dz::Finite(k) if k as f64 <= bound + 1e-9);
    let pass = matches!(dz_small, Dz::Finite(_)) && delta > 0.0 && violations == 0 && dz_ok;
    Ok(outcome(
        "A9",
        "uniformly convex function from a finite derivation and back",
        pass,
        format!("delta = {delta:.3e}, {violations} violations over {checked} triggered pairs, dz = {dz:?} <= {bound:.3}"),
        json!({ "dz_at_0_3": dz_small, "eps_prime": 0.7, "delta": u.delta, "half_dz": u.half_dz, "triggered_pairs": checked, "violations": violations, "osc_phi": phi.osc(), "dz": dz, "bound": bound }),
    ))
}

fn a10() -> Result<Outcome> {
    let f = fixture("ex26-unit")?;
    let dict = default_dictionary(1, 0);
    let r = cepedello_approx(&f, &[], 0.2, &dict, TREE_CAP, HalfMode::Prose)?;
    let (gu, _) = midpoint_convexity_gap(&r.decomp.u);
    let (gv, _) = midpoint_convexity_gap(&r.decomp.v);
    let bounds = dc_bounds_check(&f, &[], &dict, TREE_CAP, 6)?;
    let pass = r.report.err <= 0.2 + 1e-6 && gu >= -1e-9 && gv >= -1e-9 && bounds.holds;
    Ok(outcome(
        "A10",
        "DC approximation of |x^2 - 1/9| on [-1, 1]",
        pass,
        format!("err {:.2e}, convexity gaps {gu:.1e}/{gv:.1e}, eps1 in [{:.3}, {:.3}], eps2 in [{:.3}, {:.3}]", r.report.err, bounds.eps1.lo, bounds.eps1.hi, bounds.eps2.lo, bounds.eps2.hi),
        json!({ "report": r.report, "u_gap": gu, "v_gap": gv, "bounds": bounds }),
    ))
}

fn a11() -> Result<Outcome> {
    let grid = DyadicGrid::cube(2, -1.0, 1.0, 1.0 / 32.0)?;
    let r = enflo_pipeline(&NormSpec::LINF, &grid, &[0.5], TREE_CAP)?;
    let (_, din, dout) = r.moduli[0];
    let pass = din.abs() <= 1e-6 && dout > 0.0 && r.symmetry_defect <= 1e-9 && r.min_on_sphere >= 1.0 - 1e-9;
    let fine = enflo_pipeline(&NormSpec::LINF, &DyadicGrid::cube(2, -1.0, 1.0, 1.0 / 64.0)?, &[0.5], TREE_CAP)?;
    let trend = json!([
        { "step": 1.0 / 32.0, "f_at_origin": r.f_at_origin, "le_1_17": r.f_at_origin <= 1.0 / 17.0 },
        { "step": 1.0 / 64.0, "f_at_origin": fine.f_at_origin, "le_1_17": fine.f_at_origin <= 1.0 / 17.0 },
    ]);
    Ok(outcome(
        "A11",
        "tree-height renorming of the l-infinity plane",
        pass,
        format!(
            "input modulus {din:.1e}, output modulus {dout:.3e}, symmetry defect {:.1e}, min on sphere {:.4}; F(0) = {:.4} / {:.4} (informative)",
            r.symmetry_defect, r.min_on_sphere, r.f_at_origin, fine.f_at_origin
        ),
        json!({ "report": r, "informative_f_at_origin": trend }),
    ))
}

/// `min_y f1(x − y) + f2(y)` by direct enumeration on two 1D grids of equal
/// spacing.
fn direct_inf_conv_1d(f1: &TabFunc, f2: &TabFunc) -> Vec<f64> {
    let (n1, n2) = (f1.len(), f2.len());
    let mut out = vec![f64::INFINITY; n1 + n2 - 1];
    for i in 0..n1 {
        for j in 0..n2 {
            out[i + j] = out[i + j].min(f1.value(i) + f2.value(j));
        }
    }
    out
}

fn a12() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut rows = Vec::new();
    let mut ok_all = true;
    let (e1, e2) = (0.25, 0.5);
    for k in 0..20u64 {
        let quad = |f: TabFunc, a: f64| -> Result<TabFunc> {
            let s: Arc<Support> = f.support().clone();
            let v = (0..s.len()).map(|i| f.value(i) + a * s.point(i)[0].powi(2)).collect();
            TabFunc::new(s, v, format!("{}+{a:.3}x^2", f.name()))
        };
        let f1 = quad(rand_convex(2 * k), rng.gen_range(0.25..2.0))?;
        let f2 = quad(rand_convex(2 * k + 1), rng.gen_range(0.25..2.0))?;
        let h = inf_convolution(&f1, &f2)?;
        let direct = direct_inf_conv_1d(&f1, &f2);
        let conv_dev = max_abs_diff(h.values(), &direct);
        let d1 = delta_modulus(&f1, e1, &l2())?.delta.get();
        let d2 = delta_modulus(&f2, e2, &l2())?.delta.get();
        let dh = delta_modulus(&h, e1 + e2, &l2())?.delta.get();
        let ok = dh >= d1.min(d2) - 1e-9 && conv_dev <= 1e-12;
        ok_all &= ok;
        rows.push(json!({ "pair": [2 * k, 2 * k + 1], "delta1": d1, "delta2": d2, "delta_conv": dh, "direct_deviation": conv_dev, "ok": ok }));
    }
    Ok(outcome(
        "A12",
        "modulus of an inf-convolution",
        ok_all,
        format!("{} of 20 pairs satisfy delta(e1 + e2) >= min(delta1, delta2)", rows.iter().filter(|r| r["ok"] == true).count()),
        json!({ "eps1": e1, "eps2": e2, "tolerance": 1e-9, "rows": rows }),
    ))
}

fn a13() -> Result<Outcome> {
    let mut cases: Vec<(String, TabFunc, f64)> = vec![("ex26".into(), fixture("ex26")?, 1.0)];
    for seed in 0..20u64 {
        cases.push((format!("rand-uc:{seed}"), rand_uc(seed, 0.5), 0.5));
    }
    let mut rows = Vec::new();
    let mut ok_all = true;
    for (id, f, eps) in &cases {
        let n = NormSpec::L2;
        let extent = (0..f.len()).map(|i| n.eval(f.support().point(i))).fold(0.0, f64::max);
        let radii: Vec<f64> = [0.5, 0.75, 1.0].iter().map(|t| t * extent).collect();
        let profile = coercivity_profile(f, &n, &radii)?;
        let env = convex_envelope(f)?.envelope;
        let p = gage(&env, 1.01 * eps, &n)?.get();
        let floor = p / (eps * eps) / 4.0;
        let tail = profile.last().map_or(f64::NAN, |&(_, m)| m);
        let ok = floor > 0.0 && tail >= floor;
        ok_all &= ok;
        rows.push(json!({ "fixture": id, "eps": eps, "gage_envelope": p, "floor": floor, "profile": profile, "ok": ok }));
    }
    let env = convex_envelope(&fixture("ex26")?)?.envelope;
    let eps_prime = 1.01;
    let eta = stability_eta(&env, &[0.0], eps_prime, &NormSpec::L2)?;
    let st = minimizer_stability_probe(&env, &[0.0], eta, 200, 7, eps_prime, &NormSpec::L2)?;
    ok_all &= st.within;
    Ok(outcome(
        "A13",
        "coercivity and stability of minimizers",
        ok_all,
        format!(
            "{} of {} profiles above the floor; stability max distance {:.4} <= {eps_prime} at eta {eta:.3e}",
            rows.iter().filter(|r| r["ok"] == true).count(),
            rows.len(),
            st.max_distance
        ),
        json!({ "coercivity": rows, "stability": st }),
    ))
}

fn a14() -> Result<Outcome> {
    let grid = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
    let mut runs = Vec::new();
    let mut ok_all = true;
    for (id, n) in [("linf-ball", NormSpec::LINF), ("l1-ball", NormSpec::L1)] {
        let mut reports = Vec::new();
        for (step, k) in [(0.25, 4), (0.125, 8)] {
            let s = ucvx::fixtures::ball(&n, 2, step)?;
            let caps = SwcCaps { index_cap: k, ..SwcCaps::default() };
            reports.push(measure_suite(&s, &[], &n, &grid, &caps, &format!("{id}@{step}"))?);
        }
        let verdicts: Vec<_> = reports.iter().map(chain_check).collect();
        let shrink = brackets_shrink(&reports[0], &reports[1]);
        let ok = verdicts.iter().all(|v| v.holds) && shrink.iter().all(|&(_, b)| b);
        ok_all &= ok;
        runs.push(json!({ "fixture": id, "reports": reports, "chains": verdicts, "shrink": shrink, "ok": ok }));
    }
    let failing: Vec<String> = runs
        .iter()
        .flat_map(|r| {
            let id = r["fixture"].as_str().unwrap_or("").to_string();
            let mut out: Vec<String> = Vec::new();
            for (res, ch) in ["coarse", "fine"].iter().zip(r["chains"].as_array().into_iter().flatten()) {
                for l in ch["links"].as_array().into_iter().flatten().filter(|l| l["holds"] == false) {
                    out.push(format!("{id} {res}: {}", l["relation"].as_str().unwrap_or("")));
                }
            }
            for s in r["shrink"].as_array().into_iter().flatten().filter(|s| s[1] == false) {
                out.push(format!("{id}: {} does not shrink", s[0].as_str().unwrap_or("")));
            }
            out
        })
        .collect();
    Ok(outcome(
        "A14",
        "comparison chain of the noncompactness proxies",
        ok_all,
        if failing.is_empty() { "all links hold and brackets shrink".into() } else { format!("failing: {}", failing.join("; ")) },
        json!({ "eps_grid": grid, "runs": runs }),
    ))
}
