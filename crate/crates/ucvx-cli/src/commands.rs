//! Subcommand bodies. Each produces a JSON report, an optional plot and
//! optional extra files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use serde_json::{json, Value};
use ucvx::dc_approx::{cepedello_approx, dc_bounds_check};
use ucvx::dentability::{default_dictionary, default_extra, dz_index, uc_function_from_derivation, Dz, HalfMode};
use ucvx::envelope::{convex_envelope, local_envelope_reduction};
use ucvx::fixtures::{catalog, fixture};
use ucvx::moduli::{delta_modulus, gage, midpoint_convexity_gap, quasi_modulus};
use ucvx::renorming::{enflo_pipeline, renorm_from_function, sphere_samples};
use ucvx::swc::{chain_check, measure_suite, SwcCaps};
use ucvx::transforms::{default_series_weights, exp_transform, inf_convolution, lipschitz_regularization, series_combine, square_transform, TransformRecord};
use ucvx::trees::{height_function, max_separated_tree_height, DyadicTree};
use ucvx::{DyadicGrid, NormSpec, PseudometricSpec, TabFunc};

use crate::args::{Command, FnArgs, HalfArg, ModulusKind, NormArg, TransformOp};
use crate::criteria;
use crate::manifest::Hashed;
use crate::svg::{function_layer, graph, Layer, Plot};

/// A reproduced criterion that did not pass; maps to exit code 1.
#[derive(Debug)]
pub struct CriterionFailed(pub Vec<String>);

impl std::fmt::Display for CriterionFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "criteria failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for CriterionFailed {}

#[derive(Default)]
pub struct Output {
    pub report: Value,
    pub plot: Option<Plot>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub inputs: Vec<Hashed>,
    /// Error returned after the report is written: a failing criterion or
    /// a search that reached its cap.
    pub deferred: Option<anyhow::Error>,
}

impl Output {
    fn load(&mut self, src: &str) -> Result<TabFunc> {
        let (f, bytes) = load_function(src)?;
        self.inputs.push(Hashed::new(src, &bytes));
        Ok(f)
    }

    fn write_spec(&mut self, path: &Path, f: &TabFunc) -> Result<()> {
        self.files.push((path.to_path_buf(), to_pretty(&f.to_spec())?));
        Ok(())
    }
}

pub fn to_pretty<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// A function spec from a JSON path or `fixture:<id>`, with the bytes that
/// identify it.
pub fn load_function(src: &str) -> Result<(TabFunc, Vec<u8>)> {
    if let Some(id) = src.strip_prefix("fixture:") {
        let f = fixture(id)?;
        let bytes = serde_json::to_vec(&f.to_spec())?;
        return Ok((f, bytes));
    }
    let bytes = std::fs::read(src).with_context(|| format!("reading {src}"))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{src} is not UTF-8"))?;
    Ok((TabFunc::from_json(text)?, bytes))
}

fn norm_of(n: NormArg) -> NormSpec {
    match n {
        NormArg::L1 => NormSpec::L1,
        NormArg::L2 => NormSpec::L2,
        NormArg::Linf => NormSpec::LINF,
    }
}

fn metric(out: &mut Output, a: &FnArgs, f: &TabFunc) -> Result<PseudometricSpec> {
    let d = if a.metric == "norm" {
        PseudometricSpec::norm(norm_of(a.norm))
    } else if let Some(src) = a.metric.strip_prefix("pullback:") {
        let map = out.load(src)?;
        if !map.support().same_as(f.support()) {
            return Err(ucvx::Error::Invalid("pullback map must live on the support of --fn".into()).into());
        }
        PseudometricSpec::pullback_fn(&map)?
    } else if let Some(path) = a.metric.strip_prefix("table:") {
        let bytes = std::fs::read(path).with_context(|| format!("reading {path}"))?;
        out.inputs.push(Hashed::new(path, &bytes));
        let rows: Vec<Vec<f64>> = serde_json::from_slice(&bytes)?;
        let n = rows.len();
        PseudometricSpec::table(n, rows.into_iter().flatten().collect())?
    } else {
        return Err(ucvx::Error::Invalid(format!("unknown metric {}; expected norm, pullback:<fn> or table:<path>", a.metric)).into());
    };
    d.check_support(f.support())?;
    Ok(d)
}

fn dictionary(spec: Option<&str>, dim: usize) -> Result<Vec<Vec<f64>>> {
    match spec {
        None => Ok(default_dictionary(dim, default_extra(dim))),
        Some("axes") => Ok(default_dictionary(dim, 0)),
        Some(s) => match s.strip_prefix("dirs:").map(str::parse::<usize>) {
            Some(Ok(n)) => Ok(default_dictionary(dim, n)),
            _ => Err(ucvx::Error::Invalid(format!("unknown dictionary {s}; expected axes or dirs:<n>")).into()),
        },
    }
}

fn half_mode(h: HalfArg) -> HalfMode {
    match h {
        HalfArg::Prose => HalfMode::Prose,
        HalfArg::Formula => HalfMode::Formula,
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!(ucvx::Error::Invalid(format!("bad coordinate {t:?}"))))).collect()
}

fn plot_of(title: String, f: &TabFunc) -> Option<Plot> {
    function_layer(f.name(), f).map(|l| Plot::new(title).with(l))
}

fn points_layer(label: &str, pts: &[Vec<f64>]) -> Layer {
    let pts = pts.iter().map(|p| if p.len() == 1 { [p[0], 0.0] } else { [p[0], p[1]] }).collect();
    Layer::Dots { label: label.into(), pts, values: None }
}

/// Parent–child edges; 1D trees are drawn with depth on the vertical axis.
fn tree_layer(t: &DyadicTree) -> Layer {
    let at = |key: &str| -> [f64; 2] {
        let p = &t.nodes[key];
        if p.len() == 1 {
            [p[0], -(key.len() as f64)]
        } else {
            [p[0], p[1]]
        }
    };
    let segs = t.nodes.keys().filter(|k| !k.is_empty()).map(|k| [at(&k[..k.len() - 1]), at(k)]).collect();
    Layer::Segments { label: format!("tree, height {}", t.height), segs }
}

pub fn execute(cmd: &Command) -> Result<Output> {
    let mut out = Output::default();
    match cmd {
        Command::Modulus { input, eps, kind } => {
            let f = out.load(&input.function)?;
            let d = metric(&mut out, input, &f)?;
            out.report = match kind {
                ModulusKind::Delta | ModulusKind::Quasi => {
                    let r = if matches!(kind, ModulusKind::Delta) { delta_modulus(&f, *eps, &d)? } else { quasi_modulus(&f, *eps, &d)? };
                    if let (Some(mut p), Some(w)) = (plot_of(format!("{} at eps = {eps}", f.name()), &f), &r.witness_points) {
                        let pts: Vec<Vec<f64>> = w.iter().map(|x| if x.len() == 1 { vec![x[0], f.eval(x).get()] } else { x.clone() }).collect();
                        p = p.with(points_layer("witness", &pts));
                        out.plot = Some(p);
                    }
                    json!({ "function": f.name(), "kind": kind, "result": r })
                }
                ModulusKind::Gage => {
                    let n = d.as_norm().ok_or_else(|| ucvx::Error::Precondition("the gage needs a norm metric".into()))?;
                    json!({ "function": f.name(), "kind": kind, "epsilon": eps, "gage": gage(&f, *eps, n)? })
                }
            };
        }
        Command::Envelope { input, at, eps, out: spec_out } => {
            let f = out.load(&input.function)?;
            let r = convex_envelope(&f)?;
            let env = &r.envelope;
            let dev = f.values().iter().zip(env.values()).filter(|(a, _)| a.is_finite()).map(|(a, b)| a - b).fold(0.0, f64::max);
            let mut report = json!({
                "function": f.name(),
                "points": f.len(),
                "min": env.inf(),
                "max_gap_to_function": dev,
                "envelope_convexity_gap": midpoint_convexity_gap(env).0,
                "envelope": env.to_spec(),
            });
            if let (Some(x), Some(e)) = (at, eps) {
                let x = parse_point(x)?;
                let local = local_envelope_reduction(&f, &x, *e, &norm_of(input.norm))?;
                report["local"] = json!({ "at": x, "eps": e, "local_value": local, "global_value": env.eval(&x) });
            }
            if let Some(p) = spec_out {
                out.write_spec(p, env)?;
            }
            out.plot = match f.support().dim() {
                1 => Some(Plot::new(format!("envelope of {}", f.name())).with(graph("f", &f)).with(graph("envelope", env))),
                _ => plot_of(format!("envelope of {}", f.name()), env),
            };
            out.report = report;
        }
        Command::Transform { input, op, delta, with, c, out: spec_out } => {
            let f = out.load(&input.function)?;
            let n = norm_of(input.norm);
            let (g, record) = match op {
                TransformOp::Exp => {
                    let g = exp_transform(&f, *delta)?;
                    let r = TransformRecord::new(&[&f], "exp", &[("delta", *delta)], &g);
                    (g, r)
                }
                TransformOp::Square => {
                    let g = square_transform(&f)?;
                    let r = TransformRecord::new(&[&f], "square", &[], &g);
                    (g, r)
                }
                TransformOp::InfConv => {
                    let [src] = with.as_slice() else { bail!(ucvx::Error::Invalid("inf-conv needs exactly one --with".into())) };
                    let h = out.load(src)?;
                    let g = inf_convolution(&f, &h)?;
                    let r = TransformRecord::new(&[&f, &h], "inf-conv", &[], &g);
                    (g, r)
                }
                TransformOp::Lipschitz => {
                    let c = c.ok_or_else(|| ucvx::Error::Invalid("lipschitz needs --c".into()))?;
                    let g = lipschitz_regularization(&f, &f.dom(), c, &n)?;
                    let r = TransformRecord::new(&[&f], "lipschitz", &[("c", c)], &g);
                    (g, r)
                }
                TransformOp::Series => {
                    let mut fs = vec![f.clone()];
                    for src in with {
                        fs.push(out.load(src)?);
                    }
                    let w = default_series_weights(&fs);
                    let g = series_combine(&fs, &w)?;
                    let refs: Vec<&TabFunc> = fs.iter().collect();
                    let params: Vec<(String, f64)> = w.iter().enumerate().map(|(k, &v)| (format!("w{}", k + 1), v)).collect();
                    let params: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                    let r = TransformRecord::new(&refs, "series", &params, &g);
                    (g, r)
                }
            };
            if let Some(p) = spec_out {
                out.write_spec(p, &g)?;
            }
            out.plot = match g.support().dim() {
                1 if g.support().same_as(f.support()) => Some(Plot::new(record.kind.clone()).with(graph("input", &f)).with(graph("output", &g))),
                _ => plot_of(record.kind.clone(), &g),
            };
            out.report = serde_json::to_value(&record)?;
        }
        Command::Tree { input, eps, cap, root, heights } => {
            let f = out.load(&input.function)?;
            let d = metric(&mut out, input, &f)?;
            let s = f.support().clone();
            let root = root.as_deref().map(parse_point).transpose()?;
            let r = max_separated_tree_height(&s, *eps, &d, root.as_deref(), *cap)?;
            if r.at_least {
                out.deferred = Some(ucvx::Error::CapExceeded(format!("tree height reaches cap {cap}")).into());
            }
            let mut report = json!({ "eps": eps, "cap": cap, "search": r });
            if *heights {
                let h = height_function(&s, *eps, &d, *cap)?;
                report["height_function"] = serde_json::to_value(h.to_spec())?;
            }
            if let Some(t) = &r.witness {
                let mut p = Plot::new(format!("{eps}-separated tree"));
                if s.dim() == 2 {
                    p = p.with(points_layer("support", &s.points()));
                }
                out.plot = Some(p.with(tree_layer(t)));
            }
            out.report = report;
        }
        Command::Dent { input, eps, dict, cap, uc } => {
            let f = out.load(&input.function)?;
            let d = metric(&mut out, input, &f)?;
            let s = f.support();
            let dict = dictionary(dict.as_deref(), s.dim())?;
            let all: Vec<usize> = (0..s.len()).collect();
            let tr = dz_index(s, &all, &d, *eps, &dict, *cap)?;
            if tr.dz == Dz::CapExceeded {
                out.deferred = Some(ucvx::Error::CapExceeded(format!("derivations do not empty the set within {cap} steps")).into());
            }
            let mut report = json!({
                "eps": eps,
                "dz": tr.dz,
                "dictionary_size": dict.len(),
                "stage_sizes": tr.stages.iter().map(Vec::len).collect::<Vec<_>>(),
                "stages": tr.stages.iter().map(|st| st.iter().map(|&i| s.point(i).to_vec()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            if let Some(mode) = uc {
                let u = uc_function_from_derivation(s, &all, &d, *eps, &dict, *cap, half_mode(*mode))?;
                report["uc"] = json!({ "summary": u, "osc_phi": u.phi.osc(), "phi": u.phi.to_spec() });
            }
            let mut level = vec![0.0; s.len()];
            for (k, st) in tr.stages.iter().enumerate() {
                st.iter().for_each(|&i| level[i] = k as f64);
            }
            out.plot = plot_of(format!("derivation stages at eps = {eps}"), &TabFunc::new(s.clone(), level, "stage")?);
            out.report = report;
        }
        Command::Renorm { input, delta } => {
            let f = out.load(&input.function)?;
            let n = norm_of(input.norm);
            let r = renorm_from_function(&f, &[], *delta, &n)?;
            if f.support().dim() == 2 {
                let mut pts: Vec<[f64; 2]> = sphere_samples(&r.norm, 2, 256).into_iter().map(|v| [v[0], v[1]]).collect();
                pts.dedup();
                out.plot = Some(Plot::new("unit sphere of the renorming").with(Layer::Polygon { label: "|||x||| = 1".into(), pts }));
            }
            out.report = serde_json::to_value(&r)?;
        }
        Command::Enflo { norm, step, eps, cap } => {
            let grid = DyadicGrid::cube(2, -1.0, 1.0, *step)?;
            let r = enflo_pipeline(&norm_of(*norm), &grid, eps, *cap)?;
            let sphere: Vec<[f64; 2]> = sphere_samples(&r.norm, 2, 256).into_iter().map(|v| [v[0], v[1]]).collect();
            let mut p = Plot::new("tree-height renorming");
            if let Some(l) = function_layer("F", &r.f) {
                p = p.with(l);
            }
            out.plot = Some(p.with(Layer::Polygon { label: "output unit sphere".into(), pts: sphere }));
            out.report = json!({ "grid": { "lo": -1.0, "hi": 1.0, "step": step }, "result": r });
        }
        Command::DcApprox { input, eps, dict, cap, half, bounds, out: spec_out } => {
            let f = out.load(&input.function)?;
            let dict = dictionary(dict.as_deref(), f.support().dim())?;
            let r = cepedello_approx(&f, &[], *eps, &dict, *cap, half_mode(*half))?;
            let mut report = json!({ "function": f.name(), "report": r.report, "norm": r.norm, "g": r.decomp.g.to_spec() });
            if *bounds {
                report["bounds"] = serde_json::to_value(dc_bounds_check(&f, &[], &dict, *cap, 6)?)?;
            }
            if let Some(p) = spec_out {
                out.write_spec(p, &r.decomp.g)?;
            }
            if f.support().dim() == 1 {
                out.plot = Some(Plot::new(format!("DC approximation at eps = {eps}")).with(graph("f", &f)).with(graph("u", &r.decomp.u)).with(graph("v", &r.decomp.v)).with(graph("u - v", &r.decomp.g)));
            }
            out.report = report;
        }
        Command::Swc { input, eps_grid, cap, budget, bisect } => {
            let f = out.load(&input.function)?;
            let n = norm_of(input.norm);
            let caps = SwcCaps { index_cap: *cap, seq_budget: *budget, bisect_steps: *bisect };
            let r = measure_suite(f.support(), &f.dom(), &n, eps_grid, &caps, f.name())?;
            let chain = chain_check(&r);
            if f.support().dim() == 2 {
                out.plot = Some(Plot::new("body").with(points_layer("points", &f.support().points())));
            }
            out.report = json!({ "measures": r, "chain": chain });
        }
        Command::Reproduce { criterion, fixtures, list } => {
            let mut report = json!({});
            if *list {
                report["catalog"] = serde_json::to_value(catalog())?;
            }
            if let Some(dir) = fixtures {
                let mut written = Vec::new();
                for info in catalog().iter().filter(|i| !i.id.contains('<')) {
                    let path = dir.join(format!("{}.json", info.id));
                    out.write_spec(&path, &fixture(info.id)?)?;
                    written.push(path.display().to_string());
                }
                report["fixtures"] = json!(written);
            }
            if let Some(c) = criterion {
                let c = c.to_ascii_uppercase();
                let ids: Vec<&str> = if c == "ALL" { criteria::IDS.to_vec() } else { vec![c.as_str()] };
                let mut results = Vec::new();
                let mut first = Vec::new();
                for id in ids {
                    let o = if id == "A15" && !first.is_empty() { criteria::determinism(&first)? } else { criteria::run(id)? };
                    first.push((o.id.clone(), serde_json::to_vec(&o)?));
                    results.push(o);
                }
                let bad: Vec<String> = results.iter().filter(|o| !o.pass).map(|o| o.id.clone()).collect();
                if !bad.is_empty() {
                    out.deferred = Some(CriterionFailed(bad).into());
                }
                report["criteria"] = serde_json::to_value(&results)?;
            }
            if criterion.is_none() && fixtures.is_none() && !list {
                bail!(ucvx::Error::Invalid("reproduce needs --criterion, --fixtures or --list".into()));
            }
            out.report = report;
        }
    }
    Ok(out)
}
