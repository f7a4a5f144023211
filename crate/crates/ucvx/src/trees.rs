//! Separated dyadic trees and bushes on finite supports.
//!
//! Tree heights are computed by level sets: `A_0 = S` and `x ∈ A_k` iff some
//! pair `y, z ∈ A_{k−1}` with `(y + z)/2 = x` has `d(y, z) ≥ ε`. The height
//! at `x` is the largest `k` with `x ∈ A_k`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{NormSpec, PseudometricSpec, Support, TabFunc, MAX_DIM};
use crate::error::{invalid, precondition, Error, Result};
use crate::lp::ColumnLp;
use crate::moduli::delta_modulus;

/// Dyadic tree keyed by binary strings (`""` is the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicTree {
    pub height: usize,
    pub nodes: BTreeMap<String, Vec<f64>>,
}

impl DyadicTree {
    pub fn leaf(x: &[f64]) -> DyadicTree {
        DyadicTree { height: 0, nodes: BTreeMap::from([(String::new(), x.to_vec())]) }
    }

    pub fn root(&self) -> &[f64] {
        &self.nodes[""]
    }

    /// Checks that every node of length `< height` is the exact midpoint of
    /// its two children.
    pub fn check_consistency(&self) -> Result<()> {
        for (key, x) in &self.nodes {
            if key.len() > self.height || key.chars().any(|c| c != '0' && c != '1') {
                return invalid(format!("bad tree node key {key:?}"));
            }
            if key.len() == self.height {
                continue;
            }
            let (Some(a), Some(b)) = (self.nodes.get(&format!("{key}0")), self.nodes.get(&format!("{key}1"))) else {
                return invalid(format!("tree node {key:?} is missing a child"));
            };
            if a.len() != x.len() || b.len() != x.len() {
                return invalid("tree nodes have mixed dimensions");
            }
            if x.iter().zip(a.iter().zip(b)).any(|(m, (u, v))| 2.0 * m != u + v) {
                return invalid(format!("tree node {key:?} is not the midpoint of its children"));
            }
        }
        if !self.nodes.contains_key("") {
            return invalid("tree has no root");
        }
        Ok(())
    }

    /// Subtree rooted at `key`, truncated to `height` levels.
    fn subtree(&self, key: &str, height: usize) -> DyadicTree {
        let nodes = self
            .nodes
            .iter()
            .filter(|(k, _)| k.starts_with(key) && k.len() - key.len() <= height)
            .map(|(k, v)| (k[key.len()..].to_string(), v.clone()))
            .collect();
        DyadicTree { height, nodes }
    }
}

/// Distance between two explicit points. Norm-induced metrics work on
/// coordinates; index-based metrics need the points on the support.
fn point_dist(d: &PseudometricSpec, s: &Support, x: &[f64], y: &[f64]) -> Result<f64> {
    if let Some(n) = d.as_norm() {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        return Ok(n.eval(&diff));
    }
    match (s.locate(x), s.locate(y)) {
        (Some(i), Some(j)) => Ok(d.dist(s, i, j)),
        _ => precondition("tree node is not a support point"),
    }
}

/// True iff every sibling pair is `eps`-separated under `d`.
pub fn tree_separation_check(t: &DyadicTree, eps: f64, d: &PseudometricSpec, s: &Support) -> Result<bool> {
    t.check_consistency()?;
    for (key, _) in t.nodes.iter().filter(|(k, _)| k.len() < t.height) {
        let a = &t.nodes[&format!("{key}0")];
        let b = &t.nodes[&format!("{key}1")];
        if point_dist(d, s, a, b)? < eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Level sets of the tree-height function.
#[derive(Debug, Clone)]
pub struct TreeLevels {
    /// Maximal height rooted at each support point, at most `cap`.
    pub heights: Vec<usize>,
    /// Some point reached `cap`; its true height may be larger.
    pub capped: bool,
    /// `pairs[k−1][x]`: children of `x` certifying `x ∈ A_k`.
    pairs: Vec<Vec<Option<(u32, u32)>>>,
}

impl TreeLevels {
    /// Witness tree of height `heights[x]` rooted at `x`.
    pub fn witness(&self, s: &Support, x: usize) -> DyadicTree {
        let mut nodes = BTreeMap::new();
        self.grow(s, x, self.heights[x], String::new(), &mut nodes);
        DyadicTree { height: self.heights[x], nodes }
    }

    fn grow(&self, s: &Support, x: usize, k: usize, key: String, nodes: &mut BTreeMap<String, Vec<f64>>) {
        if k > 0 {
            let (y, z) = self.pairs[k - 1][x].expect("level member has a certifying pair");
            self.grow(s, y as usize, k - 1, format!("{key}0"), nodes);
            self.grow(s, z as usize, k - 1, format!("{key}1"), nodes);
        }
        nodes.insert(key, s.point(x).to_vec());
    }
}

/// Computes tree heights on `s` up to `cap`. With `stop_at`, iteration ends
/// as soon as that point leaves the level set.
pub fn tree_levels(s: &Support, eps: f64, d: &PseudometricSpec, cap: usize, stop_at: Option<usize>) -> Result<TreeLevels> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if cap == 0 {
        return invalid("cap must be at least 1");
    }
    d.check_support(s)?;
    let n = s.len();
    let mut alive = vec![true; n];
    let mut members: Vec<usize> = (0..n).collect();
    let mut heights = vec![0usize; n];
    let mut pairs = Vec::new();
    let mut capped = false;
    for k in 1..=cap {
        let found: Vec<Option<(u32, u32)>> = members
            .par_iter()
            .map(|&x| {
                let c = s.index(x);
                for &y in &members {
                    let ky = s.index(y);
                    let mut kz = [0i64; MAX_DIM];
                    for a in 0..MAX_DIM {
                        kz[a] = 2 * c[a] - ky[a];
                    }
                    let Some(z) = s.find(&kz) else { continue };
                    if z < y || !alive[z] {
                        continue;
                    }
                    if d.dist(s, y, z) >= eps {
                        return Some((y as u32, z as u32));
                    }
                }
                None
            })
            .collect();
        let mut level = vec![None; n];
        let mut next = Vec::new();
        for (&x, p) in members.iter().zip(found) {
            if p.is_some() {
                level[x] = p;
                next.push(x);
            }
        }
        if next.is_empty() {
            break;
        }
        for a in alive.iter_mut() {
            *a = false;
        }
        for &x in &next {
            alive[x] = true;
            heights[x] = k;
        }
        pairs.push(level);
        members = next;
        if k == cap {
            capped = true;
        }
        if let Some(r) = stop_at {
            if !alive[r] {
                break;
            }
        }
    }
    Ok(TreeLevels { heights, capped, pairs })
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSearch {
    pub height: usize,
    /// `height` equals the cap, so the true value is at least `height`.
    pub at_least: bool,
    pub root: Vec<f64>,
    /// Explicit tree, kept up to height `WITNESS_MAX_HEIGHT`.
    pub witness: Option<DyadicTree>,
}

pub const WITNESS_MAX_HEIGHT: usize = 16;

/// Maximal height of an `eps`-separated tree with nodes in `s`, rooted at
/// `root` or anywhere.
pub fn max_separated_tree_height(s: &Support, eps: f64, d: &PseudometricSpec, root: Option<&[f64]>, cap: usize) -> Result<TreeSearch> {
    let r = match root {
        Some(x) => Some(s.locate(x).ok_or_else(|| Error::Precondition("root is not a support point".into()))?),
        None => None,
    };
    let lv = tree_levels(s, eps, d, cap, r)?;
    let x = match r {
        Some(x) => x,
        None => (0..s.len()).fold(0, |b, i| if lv.heights[i] > lv.heights[b] { i } else { b }),
    };
    let height = lv.heights[x];
    Ok(TreeSearch { height, at_least: height == cap, root: s.point(x).to_vec(), witness: (height <= WITNESS_MAX_HEIGHT).then(|| lv.witness(s, x)) })
}

/// `f(x) = −(maximal height of an eps-separated tree rooted at x)`.
pub fn height_function(s: &std::sync::Arc<Support>, eps: f64, d: &PseudometricSpec, cap: usize) -> Result<TabFunc> {
    let lv = tree_levels(s, eps, d, cap, None)?;
    if lv.capped {
        let at = lv.heights.iter().position(|&h| h == cap).expect("capped level is nonempty");
        return Err(Error::CapExceeded(format!("tree height reaches cap {cap} at {:?}", s.point(at))));
    }
    TabFunc::new(s.clone(), lv.heights.iter().map(|&h| -(h as f64)).collect(), format!("height({eps})"))
}

/// Tree rooted at `(x + y)/2` with subtrees `tx` and `ty`, both truncated to
/// the smaller height.
pub fn glue_trees(x: &[f64], y: &[f64], tx: &DyadicTree, ty: &DyadicTree, eps: f64, d: &PseudometricSpec, s: &Support) -> Result<DyadicTree> {
    tx.check_consistency()?;
    ty.check_consistency()?;
    if tx.root() != x || ty.root() != y {
        return precondition("trees are not rooted at the given points");
    }
    if point_dist(d, s, x, y)? < eps {
        return precondition("roots are closer than eps");
    }
    let h = tx.height.min(ty.height);
    let mut nodes = BTreeMap::new();
    nodes.insert(String::new(), x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<f64>>());
    for (tag, t) in [("0", tx), ("1", ty)] {
        for (k, v) in t.subtree("", h).nodes {
            nodes.insert(format!("{tag}{k}"), v);
        }
    }
    let t = DyadicTree { height: h + 1, nodes };
    t.check_consistency()?;
    Ok(t)
}

/// Bush keyed by dot-separated child indices (`""` is the root, `"0.2"` the
/// third child of the first child). `weights[key]` is the weight of the edge
/// into `key`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bush {
    pub height: usize,
    pub nodes: BTreeMap<String, Vec<f64>>,
    pub weights: BTreeMap<String, f64>,
}

fn bush_depth(key: &str) -> usize {
    if key.is_empty() {
        0
    } else {
        key.split('.').count()
    }
}

impl Bush {
    /// A tree read as a bush with weights 1/2; an `ε`-separated tree becomes
    /// an `ε/2`-separated bush.
    pub fn from_tree(t: &DyadicTree) -> Bush {
        let key = |k: &str| k.chars().map(|c| c.to_string()).collect::<Vec<_>>().join(".");
        let nodes = t.nodes.iter().map(|(k, v)| (key(k), v.clone())).collect();
        let weights = t.nodes.keys().filter(|k| !k.is_empty()).map(|k| (key(k), 0.5)).collect();
        Bush { height: t.height, nodes, weights }
    }

    /// Children of `key` as `(child key, weight)`.
    pub fn children(&self, key: &str) -> Vec<(String, f64)> {
        let d = bush_depth(key) + 1;
        self.nodes
            .keys()
            .filter(|k| bush_depth(k) == d && (key.is_empty() || k.starts_with(&format!("{key}."))))
            .map(|k| (k.clone(), self.weights.get(k).copied().unwrap_or(0.0)))
            .collect()
    }

    /// Checks weights (nonnegative, summing to 1) and the barycentric
    /// identity at every inner node, to `1e-12` relative.
    pub fn check_consistency(&self) -> Result<()> {
        if !self.nodes.contains_key("") {
            return invalid("bush has no root");
        }
        for (key, x) in &self.nodes {
            if key.split('.').any(|p| !key.is_empty() && p.parse::<usize>().is_err()) {
                return invalid(format!("bad bush node key {key:?}"));
            }
            if bush_depth(key) > self.height {
                return invalid(format!("bush node {key:?} is deeper than the height"));
            }
            if bush_depth(key) == self.height {
                continue;
            }
            let ch = self.children(key);
            if ch.is_empty() {
                return invalid(format!("bush node {key:?} has no children"));
            }
            if ch.iter().any(|(_, w)| !(*w >= 0.0)) {
                return invalid("bush weights must be nonnegative");
            }
            let total: f64 = ch.iter().map(|(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return invalid(format!("weights below {key:?} sum to {total}"));
            }
            let scale = 1.0 + ch.iter().flat_map(|(k, _)| self.nodes[k].iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, &xa) in x.iter().enumerate() {
                let c: f64 = ch.iter().map(|(k, w)| w * self.nodes[k][a]).sum();
                if (c - xa).abs() > 1e-12 * scale {
                    return invalid(format!("bush node {key:?} is not the barycenter of its children"));
                }
            }
        }
        Ok(())
    }
}

/// True iff `d(x_{s⌢k}, x_s) ≥ eps` for every child with positive weight.
pub fn bush_separation_check(b: &Bush, eps: f64, d: &PseudometricSpec, s: &Support) -> Result<bool> {
    b.check_consistency()?;
    for (key, x) in b.nodes.iter().filter(|(k, _)| bush_depth(k) < b.height) {
        for (c, w) in b.children(key) {
            if w > 0.0 && point_dist(d, s, &b.nodes[&c], x)? < eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct BushBound {
    pub height: usize,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// `(b − a)/δ`.
    pub bound: f64,
    /// `f(x_s) ≤ Σ_k λ_{s⌢k} f(x_{s⌢k}) − δ` at every inner node.
    pub recursion_ok: bool,
    pub holds: bool,
}

/// Height bound `(b − a)/δ_f(ε)` for a separated bush, where `[a, b]` is the
/// range of `f` on the nodes. `delta` overrides the computed modulus.
pub fn bush_height_bound_check(bush: &Bush, f: &TabFunc, eps: f64, d: &PseudometricSpec, delta: Option<f64>) -> Result<BushBound> {
    bush.check_consistency()?;
    let s = f.support();
    let mut val = BTreeMap::new();
    for (k, x) in &bush.nodes {
        let v = f.eval(x);
        if s.locate(x).is_none() || !v.is_finite() {
            return precondition(format!("bush node {k:?} is off the support of f"));
        }
        val.insert(k.clone(), v.get());
    }
    let delta = match delta {
        Some(v) => v,
        None => delta_modulus(f, eps, d)?.delta.get(),
    };
    let a = val.values().copied().fold(f64::INFINITY, f64::min);
    let b = val.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + b.abs().max(a.abs()));
    let recursion_ok = bush.nodes.keys().filter(|k| bush_depth(k) < bush.height).all(|k| {
        let avg: f64 = bush.children(k).iter().map(|(c, w)| w * val[c]).sum();
        val[k] <= avg - delta + tol
    });
    let bound = if delta > 0.0 { (b - a) / delta } else { f64::INFINITY };
    let holds = recursion_ok && bush.height as f64 <= bound + 1e-9;
    Ok(BushBound { height: bush.height, a, b, delta, bound, recursion_ok, holds })
}

/// Distance between `conv(p)` and `conv(q)` in `n`, or a certified
/// comparison with `eps` for `ℓ2`.
fn hull_separated(p: &[&[f64]], q: &[&[f64]], eps: f64, n: &NormSpec) -> Result<bool> {
    let dim = p[0].len();
    match n {
        NormSpec::Lp(crate::domain::LpExp::Two) => Ok(l2_hull_distance_at_least(p, q, eps)),
        _ => Ok(polytopal_hull_distance(p, q, n, dim)? >= eps - 1e-12),
    }
}

/// Exact distance between two hulls for a polytopal norm, by linear
/// programming.
pub fn polytopal_hull_distance(p: &[&[f64]], q: &[&[f64]], n: &NormSpec, dim: usize) -> Result<f64> {
    if let Some(verts) = n.unit_ball_vertices(dim) {
        // Σa p − Σb q = Σμ v, Σa = Σb = 1, minimize Σμ.
        let mut lp = ColumnLp::new(dim + 2);
        for x in p {
            let mut c = x.to_vec();
            c.extend([1.0, 0.0]);
            lp.push(&c, 0.0);
        }
        for x in q {
            let mut c: Vec<f64> = x.iter().map(|v| -v).collect();
            c.extend([0.0, 1.0]);
            lp.push(&c, 0.0);
        }
        for v in &verts {
            let mut c: Vec<f64> = v.iter().map(|t| -t).collect();
            c.extend([0.0, 0.0]);
            lp.push(&c, 1.0);
        }
        let mut b = vec![0.0; dim];
        b.extend([1.0, 1.0]);
        return Ok(lp.solve(&b, None)?.value);
    }
    let NormSpec::Dictionary(fs) = n else {
        return invalid("hull distance needs a polytopal norm");
    };
    // Rows: ±⟨φ_k, z⟩ − t + slack = 0 for each functional, then Σa = Σb = 1.
    let k = fs.len();
    let m = 2 * k + 2;
    let mut lp = ColumnLp::new(m);
    let col = |x: &[f64], sign: f64, tail: usize| {
        let mut c = vec![0.0; m];
        for (r, phi) in fs.iter().enumerate() {
            let v: f64 = phi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * sign;
            c[2 * r] = v;
            c[2 * r + 1] = -v;
        }
        c[tail] = 1.0;
        c
    };
    for x in p {
        lp.push(&col(x, 1.0, 2 * k), 0.0);
    }
    for x in q {
        lp.push(&col(x, -1.0, 2 * k + 1), 0.0);
    }
    lp.push(&(0..m).map(|r| if r < 2 * k { -1.0 } else { 0.0 }).collect::<Vec<f64>>(), 1.0);
    for r in 0..2 * k {
        let mut c = vec![0.0; m];
        c[r] = 1.0;
        lp.push(&c, 0.0);
    }
    let mut b = vec![0.0; m];
    b[2 * k] = 1.0;
    b[2 * k + 1] = 1.0;
    Ok(lp.solve(&b, None)?.value)
}

/// Gilbert iteration on the difference body `conv(p) − conv(q)`, stopped once
/// the certified bracket decides the comparison with `eps` or narrows to
/// `1e-8`.
fn l2_hull_distance_at_least(p: &[&[f64]], q: &[&[f64]], eps: f64) -> bool {
    let (lo, hi) = l2_hull_distance(p, q, Some(eps));
    if lo >= eps - 1e-12 {
        return true;
    }
    if hi < eps - 1e-12 {
        return false;
    }
    lo >= eps - 1e-8
}

/// Certified bracket `[lo, hi]` for the `ℓ2` distance between two hulls.
pub fn l2_hull_distance(p: &[&[f64]], q: &[&[f64]], eps: Option<f64>) -> (f64, f64) {
    let dim = p[0].len();
    let verts: Vec<Vec<f64>> = p.iter().flat_map(|x| q.iter().map(move |y| x.iter().zip(y.iter()).map(|(a, b)| a - b).collect())).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut z = verts[0].clone();
    let (mut lo, mut hi) = (0.0f64, dot(&z, &z).sqrt());
    for _ in 0..100_000 {
        hi = hi.min(dot(&z, &z).sqrt());
        if hi == 0.0 {
            return (0.0, 0.0);
        }
        let (v, sv) = verts.iter().map(|v| (v, dot(&z, v))).fold((&verts[0], f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        lo = lo.max(sv / hi);
        if hi - lo <= 1e-8 || eps.is_some_and(|e| lo >= e || hi < e) {
            break;
        }
        let dvec: Vec<f64> = (0..dim).map(|a| v[a] - z[a]).collect();
        let dd = dot(&dvec, &dvec);
        if dd == 0.0 {
            break;
        }
        let t = (-dot(&z, &dvec) / dd).clamp(0.0, 1.0);
        for a in 0..dim {
            z[a] += t * dvec[a];
        }
    }
    (lo.max(0.0), hi)
}

/// Outcome of a bounded search for a convexly separated sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SeqSearch {
    Found(Vec<Vec<f64>>),
    /// The search space was exhausted: no such sequence exists in `s`.
    None,
    /// The budget ran out first.
    Budget,
}

/// Sequence `x_1..x_n` of points of `s` with
/// `dist(conv{x_1..x_k}, conv{x_{k+1}..x_n}) ≥ eps` for every split, found by
/// depth-first search with prefix pruning, limited to `budget` prefix checks.
pub fn convex_separation_sequence(points: &[Vec<f64>], eps: f64, n: usize, norm: &NormSpec, budget: usize) -> Result<SeqSearch> {
    if n == 0 || n > 12 {
        return invalid("sequence length must be between 1 and 12");
    }
    if points.is_empty() {
        return Ok(SeqSearch::None);
    }
    let mut seq: Vec<usize> = Vec::with_capacity(n);
    let mut spent = 0usize;
    fn ok(points: &[Vec<f64>], seq: &[usize], eps: f64, norm: &NormSpec) -> Result<bool> {
        let m = seq.len();
        let (last, head) = seq.split_last().expect("nonempty");
        let x = &points[*last];
        if head.iter().any(|&i| norm.eval(&points[i].iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()) < eps - 1e-12) {
            return Ok(false);
        }
        for k in (1..m).rev() {
            let p: Vec<&[f64]> = seq[..k].iter().map(|&i| points[i].as_slice()).collect();
            let q: Vec<&[f64]> = seq[k..].iter().map(|&i| points[i].as_slice()).collect();
            if !hull_separated(&p, &q, eps, norm)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    // Some(true): found; Some(false): subtree exhausted; None: out of budget.
    fn dfs(points: &[Vec<f64>], seq: &mut Vec<usize>, n: usize, eps: f64, norm: &NormSpec, spent: &mut usize, budget: usize) -> Result<Option<bool>> {
        if seq.len() == n {
            return Ok(Some(true));
        }
        for i in 0..points.len() {
            if *spent >= budget {
                return Ok(None);
            }
            if seq.contains(&i) {
                continue;
            }
            *spent += 1;
            seq.push(i);
            if ok(points, seq, eps, norm)? {
                match dfs(points, seq, n, eps, norm, spent, budget)? {
                    Some(true) => return Ok(Some(true)),
                    None => return Ok(None),
                    Some(false) => {}
                }
            }
            seq.pop();
        }
        Ok(Some(false))
    }
    Ok(match dfs(points, &mut seq, n, eps, norm, &mut spent, budget)? {
        Some(true) => SeqSearch::Found(seq.iter().map(|&i| points[i].clone()).collect()),
        Some(false) => SeqSearch::None,
        None => SeqSearch::Budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_dyadic_grid;
    use std::sync::Arc;

    fn unit(step: f64) -> Arc<Support> {
        let n = (1.0 / step).round() as usize + 1;
        Arc::new(Support::grid(&make_dyadic_grid(&[0.0], step, &[n]).unwrap()))
    }

    fn l2() -> PseudometricSpec {
        PseudometricSpec::norm(NormSpec::L2)
    }

    #[test]
    fn small_tree_checks() {
        let s = unit(0.25);
        let t = DyadicTree {
            height: 1,
            nodes: BTreeMap::from([("".into(), vec![0.5]), ("0".into(), vec![0.0]), ("1".into(), vec![1.0])]),
        };
        assert!(tree_separation_check(&t, 1.0, &l2(), &s).unwrap());
        assert!(!tree_separation_check(&t, 1.5, &l2(), &s).unwrap());
        let mut bad = t.clone();
        bad.nodes.insert("".into(), vec![0.25]);
        assert!(tree_separation_check(&bad, 1.0, &l2(), &s).is_err());
    }

    #[test]
    fn heights_on_unit_interval() {
        let s = unit(1.0 / 64.0);
        assert_eq!(max_separated_tree_height(&s, 1.0, &l2(), None, 16).unwrap().height, 1);
        let r = max_separated_tree_height(&s, 0.5, &l2(), None, 16).unwrap();
        assert_eq!(r.height, 2);
        assert!(tree_separation_check(r.witness.as_ref().unwrap(), 0.5, &l2(), &s).unwrap());
        assert_eq!(max_separated_tree_height(&s, 1.5, &l2(), None, 16).unwrap().height, 0);
        let h = height_function(&s, 0.5, &l2(), 16).unwrap();
        assert_eq!(h.eval(&[0.5]).get(), -2.0);
        assert_eq!(h.eval(&[0.0]).get(), 0.0);
        assert!(height_function(&s, 0.5, &l2(), 1).is_err());
    }

    #[test]
    fn gluing() {
        let s = unit(0.25);
        let t = glue_trees(&[0.0], &[1.0], &DyadicTree::leaf(&[0.0]), &DyadicTree::leaf(&[1.0]), 1.0, &l2(), &s).unwrap();
        assert_eq!((t.height, t.root()), (1, &[0.5][..]));
        let a = DyadicTree { height: 1, nodes: BTreeMap::from([("".into(), vec![0.25]), ("0".into(), vec![0.0]), ("1".into(), vec![0.5])]) };
        let b = DyadicTree { height: 1, nodes: BTreeMap::from([("".into(), vec![0.75]), ("0".into(), vec![0.5]), ("1".into(), vec![1.0])]) };
        let g = glue_trees(&[0.25], &[0.75], &a, &b, 0.5, &l2(), &s).unwrap();
        assert_eq!(g.height, 2);
        assert!(tree_separation_check(&g, 0.5, &l2(), &s).unwrap());
        assert!(glue_trees(&[0.25], &[0.5], &a, &DyadicTree::leaf(&[0.5]), 0.5, &l2(), &s).is_err());
    }

    #[test]
    fn tree_as_bush() {
        let s = unit(1.0 / 16.0);
        let r = max_separated_tree_height(&s, 0.5, &l2(), None, 8).unwrap();
        let b = Bush::from_tree(r.witness.as_ref().unwrap());
        b.check_consistency().unwrap();
        assert!(bush_separation_check(&b, 0.25, &l2(), &s).unwrap());
    }

    #[test]
    fn hull_distances() {
        let a = [0.0, 0.0];
        let b = [2.0, 0.0];
        let c = [0.0, 1.0];
        let d = polytopal_hull_distance(&[&a, &c], &[&b], &NormSpec::LINF, 2).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let d1 = polytopal_hull_distance(&[&a], &[&[1.0, 1.0][..]], &NormSpec::L1, 2).unwrap();
        assert!((d1 - 2.0).abs() < 1e-12);
        let dict = NormSpec::dictionary(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let dd = polytopal_hull_distance(&[&a], &[&[1.0, 3.0][..]], &dict, 2).unwrap();
        assert!((dd - 3.0).abs() < 1e-12);
        let (lo, hi) = l2_hull_distance(&[&[0.0, -1.0][..], &[0.0, 1.0][..]], &[&[3.0, 0.0][..]], None);
        assert!(lo <= 3.0 + 1e-12 && hi >= 3.0 - 1e-12 && hi - lo <= 1e-8);
    }
}
