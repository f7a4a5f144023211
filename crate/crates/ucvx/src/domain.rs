//! Finite representations shared by every other module: extended reals,
//! dyadic grids, tabulated functions, norms and pseudometrics.
//!
//! Points of a [`Support`] live on an integer lattice `origin + spacing·k`.
//! Midpoints are computed on the integer indices, so a pair `(y, z)` has a
//! midpoint in the support exactly when `k_y + k_z` is even in every
//! coordinate and the halved index is present. No floating-point comparison
//! is involved.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::Gauge;

/// Maximum ambient dimension.
pub const MAX_DIM: usize = 3;

/// A real number or `+∞`. `−∞` and NaN are unrepresentable.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// `None` for NaN and `−∞`.
    pub fn new(v: f64) -> Option<ExtReal> {
        if v.is_nan() || v == f64::NEG_INFINITY {
            None
        } else {
            Some(ExtReal(v))
        }
    }

    /// Panics on NaN or `−∞`.
    pub fn of(v: f64) -> ExtReal {
        ExtReal::new(v).unwrap_or_else(|| panic!("{v} is not an extended real"))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// `c·self` for `c > 0`.
    pub fn scale(self, c: f64) -> ExtReal {
        assert!(c > 0.0, "scaling an extended real needs c > 0");
        ExtReal(self.0 * c)
    }

    /// Arithmetic mean; `+∞` if either argument is.
    pub fn avg(self, other: ExtReal) -> ExtReal {
        ExtReal((self.0 + other.0) / 2.0)
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl std::ops::Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: f64) -> ExtReal {
        assert!(rhs.is_finite());
        ExtReal(self.0 + rhs)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => ExtReal::new(v).ok_or_else(|| serde::de::Error::custom("not an extended real")),
            Raw::Str(s) if s == "inf" || s == "+inf" => Ok(ExtReal::INF),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Axis-aligned box of lattice points `origin + spacing·k`, `0 ≤ k_i < shape_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
}

/// Validated grid constructor.
pub fn make_dyadic_grid(origin: &[f64], spacing: f64, shape: &[usize]) -> Result<DyadicGrid> {
    if shape.is_empty() || origin.len() != shape.len() {
        return invalid("origin and shape must have the same positive length");
    }
    if shape.len() > MAX_DIM {
        return invalid(format!("dimension {} exceeds the cap of {MAX_DIM}", shape.len()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return invalid("spacing must be positive and finite");
    }
    if origin.iter().any(|v| !v.is_finite()) {
        return invalid("origin must be finite");
    }
    if shape.iter().any(|&s| s < 2) {
        return invalid("every shape entry must be at least 2");
    }
    let total: usize = shape.iter().product();
    if total > 1 << 22 {
        return invalid("grid has more than 2^22 points");
    }
    Ok(DyadicGrid { origin: origin.to_vec(), spacing, shape: shape.to_vec() })
}

impl DyadicGrid {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cube `[lo, hi]^d` with the given step; `hi − lo` must be a multiple of it.
    pub fn cube(dim: usize, lo: f64, hi: f64, step: f64) -> Result<DyadicGrid> {
        let n = (hi - lo) / step;
        if (n - n.round()).abs() > 1e-9 || n < 1.0 {
            return invalid("cube side is not a positive multiple of the step");
        }
        let k = n.round() as usize + 1;
        make_dyadic_grid(&vec![lo; dim], step, &vec![k; dim])
    }
}

/// Integer lattice coordinates, padded with zeros past the dimension.
pub type Idx = [i64; MAX_DIM];

#[derive(Debug, Clone)]
enum Lookup {
    Box { shape: Idx },
    Map(HashMap<Idx, usize>),
}

/// Finite point set on a lattice, with exact index arithmetic.
#[derive(Debug, Clone)]
pub struct Support {
    dim: usize,
    origin: [f64; MAX_DIM],
    spacing: f64,
    idx: Vec<Idx>,
    coords: Vec<f64>,
    lookup: Lookup,
    grid: Option<DyadicGrid>,
}

impl Support {
    /// All grid points in row-major order (last axis fastest).
    pub fn grid(g: &DyadicGrid) -> Support {
        let dim = g.dim();
        let mut shape = [1i64; MAX_DIM];
        for (s, &v) in shape.iter_mut().zip(&g.shape) {
            *s = v as i64;
        }
        let mut origin = [0.0; MAX_DIM];
        origin[..dim].copy_from_slice(&g.origin);
        let mut idx = Vec::with_capacity(g.len());
        for a in 0..shape[0] {
            for b in 0..shape[1] {
                for c in 0..shape[2] {
                    idx.push([a, b, c]);
                }
            }
        }
        let mut s = Support { dim, origin, spacing: g.spacing, idx, coords: Vec::new(), lookup: Lookup::Box { shape }, grid: Some(g.clone()) };
        s.fill_coords();
        s
    }

    /// Explicit points. Coordinates must be dyadic rationals so that they
    /// share a lattice `2^-k·ℤ^d`.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Support> {
        let Some(first) = points.first() else {
            return invalid("empty point set");
        };
        let dim = first.len();
        if dim == 0 || dim > MAX_DIM {
            return invalid(format!("point dimension must be between 1 and {MAX_DIM}"));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return invalid("points must be finite and of equal dimension");
        }
        let k = (0..=60)
            .find(|&k| {
                let s = (k as f64).exp2();
                points.iter().flatten().all(|&v| {
                    let w = v * s;
                    w == w.trunc() && w.abs() < 9.0e15
                })
            })
            .ok_or_else(|| Error::Invalid("coordinates are not dyadic rationals".into()))?;
        let spacing = (-(k as f64)).exp2();
        let mut map = HashMap::with_capacity(points.len());
        let mut idx = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let mut id = [0i64; MAX_DIM];
            for (a, &v) in p.iter().enumerate() {
                id[a] = (v / spacing) as i64;
            }
            if map.insert(id, i).is_some() {
                return invalid("duplicate point");
            }
            idx.push(id);
        }
        let mut s = Support { dim, origin: [0.0; MAX_DIM], spacing, idx, coords: Vec::new(), lookup: Lookup::Map(map), grid: None };
        s.fill_coords();
        Ok(s)
    }

    /// Sub-support on the same lattice, keeping the given order.
    pub fn subset(&self, keep: &[usize]) -> Support {
        let idx: Vec<Idx> = keep.iter().map(|&i| self.idx[i]).collect();
        let map = idx.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut s = Support { dim: self.dim, origin: self.origin, spacing: self.spacing, idx, coords: Vec::new(), lookup: Lookup::Map(map), grid: None };
        s.fill_coords();
        s
    }

    /// Support built from lattice indices of `self`'s lattice.
    pub fn from_indices(&self, idx: Vec<Idx>) -> Result<Support> {
        let mut map = HashMap::with_capacity(idx.len());
        for (i, &k) in idx.iter().enumerate() {
            if map.insert(k, i).is_some() {
                return invalid("duplicate lattice index");
            }
        }
        if idx.is_empty() {
            return invalid("empty support");
        }
        let mut s = Support { dim: self.dim, origin: self.origin, spacing: self.spacing, idx, coords: Vec::new(), lookup: Lookup::Map(map), grid: None };
        s.fill_coords();
        Ok(s)
    }

    /// Support on the lattice `origin + spacing·ℤ^d` with the given indices.
    pub fn from_lattice(origin: &[f64], spacing: f64, idx: Vec<Idx>) -> Result<Support> {
        let dim = origin.len();
        if dim == 0 || dim > MAX_DIM || !(spacing > 0.0) {
            return invalid("bad lattice");
        }
        let mut o = [0.0; MAX_DIM];
        o[..dim].copy_from_slice(origin);
        let base = Support { dim, origin: o, spacing, idx: Vec::new(), coords: Vec::new(), lookup: Lookup::Map(HashMap::new()), grid: None };
        base.from_indices(idx)
    }

    /// The same points indexed on the finer lattice `origin + h·ℤ^d`, when
    /// the current spacing is an integer multiple of `h`.
    pub fn with_spacing(&self, h: f64) -> Option<Support> {
        let r = self.spacing / h;
        if !(r >= 1.0) || r != r.trunc() {
            return None;
        }
        if r == 1.0 {
            return Some(self.clone());
        }
        let r = r as i64;
        let idx = self.idx.iter().map(|k| [k[0] * r, k[1] * r, k[2] * r]).collect();
        let base = Support { dim: self.dim, origin: self.origin, spacing: h, idx: Vec::new(), coords: Vec::new(), lookup: Lookup::Map(HashMap::new()), grid: None };
        base.from_indices(idx).ok()
    }

    /// Same lattice and same points in the same order.
    pub fn same_as(&self, other: &Support) -> bool {
        std::ptr::eq(self, other) || (self.dim == other.dim && self.spacing == other.spacing && self.origin == other.origin && self.idx == other.idx)
    }

    fn fill_coords(&mut self) {
        let d = self.dim;
        self.coords = Vec::with_capacity(self.idx.len() * d);
        for id in &self.idx {
            for a in 0..d {
                self.coords.push(self.origin[a] + self.spacing * id[a] as f64);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn as_grid(&self) -> Option<&DyadicGrid> {
        self.grid.as_ref()
    }

    /// Lattice index of support point `i`.
    pub fn index(&self, i: usize) -> Idx {
        self.idx[i]
    }

    /// Coordinates of support point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// Support position of a lattice index.
    pub fn find(&self, k: &Idx) -> Option<usize> {
        match &self.lookup {
            Lookup::Box { shape } => {
                let mut lin = 0i64;
                for a in 0..MAX_DIM {
                    if k[a] < 0 || k[a] >= shape[a] {
                        return None;
                    }
                    lin = lin * shape[a] + k[a];
                }
                Some(lin as usize)
            }
            Lookup::Map(m) => m.get(k).copied(),
        }
    }

    /// Lattice index of arbitrary coordinates, if they lie exactly on the lattice.
    pub fn lattice_index(&self, x: &[f64]) -> Option<Idx> {
        if x.len() != self.dim {
            return None;
        }
        let mut k = [0i64; MAX_DIM];
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.spacing;
            let r = t.round();
            if (t - r).abs() > 1e-9 {
                return None;
            }
            k[a] = r as i64;
        }
        Some(k)
    }

    /// Support position of coordinates `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        self.lattice_index(x).and_then(|k| self.find(&k))
    }

    /// Position of `(x_i + x_j)/2` if it is a support point.
    #[inline]
    pub fn midpoint(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.idx[i], self.idx[j]);
        let mut m = [0i64; MAX_DIM];
        for t in 0..MAX_DIM {
            let s = a[t] + b[t];
            if s & 1 != 0 {
                return None;
            }
            m[t] = s >> 1;
        }
        self.find(&m)
    }

    /// `x_i − x_j` written into a fixed-size buffer.
    #[inline]
    pub fn diff(&self, i: usize, j: usize) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for (a, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.spacing * (self.idx[i][a] - self.idx[j][a]) as f64;
        }
        out
    }

    /// Integer shift `s` with `origin(other) = origin(self) + spacing·s`, if
    /// both supports share a lattice.
    pub fn lattice_shift(&self, other: &Support) -> Option<Idx> {
        if self.dim != other.dim || self.spacing != other.spacing {
            return None;
        }
        let mut s = [0i64; MAX_DIM];
        for a in 0..self.dim {
            let t = (other.origin[a] - self.origin[a]) / self.spacing;
            if (t - t.round()).abs() > 1e-9 {
                return None;
            }
            s[a] = t.round() as i64;
        }
        Some(s)
    }

    /// Position of `−x_i` in the support.
    pub fn negation(&self, i: usize) -> Option<usize> {
        let x: Vec<f64> = self.point(i).iter().map(|v| -v).collect();
        self.locate(&x)
    }

    pub fn domain_spec(&self) -> DomainSpec {
        match &self.grid {
            Some(g) => DomainSpec::Grid { origin: g.origin.clone(), spacing: g.spacing, shape: g.shape.clone() },
            None => DomainSpec::Points { coords: self.points() },
        }
    }
}

/// Unordered pairs `{y, z}` of support points with `(y + z)/2 = x_i`, the
/// pair `(x_i, x_i)` included.
pub fn midpoint_pairs(s: &Support, i: usize) -> Vec<(usize, usize)> {
    let c = s.index(i);
    let mut out = Vec::new();
    for y in 0..s.len() {
        let ky = s.index(y);
        let mut kz = [0i64; MAX_DIM];
        for a in 0..MAX_DIM {
            kz[a] = 2 * c[a] - ky[a];
        }
        if let Some(z) = s.find(&kz) {
            if y <= z {
                out.push((y, z));
            }
        }
    }
    out
}

/// JSON domain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Grid { origin: Vec<f64>, spacing: f64, shape: Vec<usize> },
    Points { coords: Vec<Vec<f64>> },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Support> {
        match self {
            DomainSpec::Grid { origin, spacing, shape } => Ok(Support::grid(&make_dyadic_grid(origin, *spacing, shape)?)),
            DomainSpec::Points { coords } => Support::from_points(coords),
        }
    }
}

/// JSON function description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub domain: DomainSpec,
    pub values: Vec<ExtReal>,
    #[serde(default)]
    pub name: String,
}

/// Extended-real function on a finite support; `+∞` off the support.
#[derive(Debug, Clone)]
pub struct TabFunc {
    support: Arc<Support>,
    values: Vec<f64>,
    name: String,
}

impl TabFunc {
    /// Checks lengths, rejects NaN and `−∞`, and requires a nonempty domain.
    pub fn new(support: Arc<Support>, values: Vec<f64>, name: impl Into<String>) -> Result<TabFunc> {
        if values.len() != support.len() {
            return invalid(format!("{} values for {} support points", values.len(), support.len()));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return invalid("values must be finite or +inf");
        }
        if values.iter().all(|v| v.is_infinite()) {
            return invalid("function is not proper: every value is +inf");
        }
        Ok(TabFunc { support, values, name: name.into() })
    }

    pub fn from_fn(support: Arc<Support>, name: impl Into<String>, f: impl Fn(&[f64]) -> f64) -> Result<TabFunc> {
        let values = (0..support.len()).map(|i| f(support.point(i))).collect();
        TabFunc::new(support, values, name)
    }

    pub fn from_spec(spec: &FunctionSpec) -> Result<TabFunc> {
        let s = Arc::new(spec.domain.build()?);
        TabFunc::new(s, spec.values.iter().map(|v| v.get()).collect(), spec.name.clone())
    }

    pub fn from_json(text: &str) -> Result<TabFunc> {
        let spec: FunctionSpec = serde_json::from_str(text)?;
        TabFunc::from_spec(&spec)
    }

    pub fn to_spec(&self) -> FunctionSpec {
        FunctionSpec { domain: self.support.domain_spec(), values: self.values.iter().map(|&v| ExtReal::of(v)).collect(), name: self.name.clone() }
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn ext(&self, i: usize) -> ExtReal {
        ExtReal(self.values[i])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> TabFunc {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at arbitrary coordinates; `+∞` off the support.
    pub fn eval(&self, x: &[f64]) -> ExtReal {
        self.support.locate(x).map_or(ExtReal::INF, |i| ExtReal(self.values[i]))
    }

    /// Support positions where the value is finite.
    pub fn dom(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i].is_finite()).collect()
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Supremum over the domain.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup − inf` over the domain.
    pub fn osc(&self) -> f64 {
        self.sup() - self.inf()
    }

    /// Pointwise map on finite values; `+∞` is preserved.
    pub fn map(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<TabFunc> {
        let values = self.values.iter().map(|&v| if v.is_finite() { f(v) } else { v }).collect();
        TabFunc::new(self.support.clone(), values, name)
    }

    /// Same support, `+∞` wherever `keep` is false.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Result<TabFunc> {
        let values = (0..self.len()).map(|i| if keep(i) { self.values[i] } else { f64::INFINITY }).collect();
        TabFunc::new(self.support.clone(), values, self.name.clone())
    }

    /// Restriction to a sub-support listed by positions.
    pub fn restrict(&self, keep: &[usize]) -> Result<TabFunc> {
        let s = Arc::new(self.support.subset(keep));
        TabFunc::new(s, keep.iter().map(|&i| self.values[i]).collect(), self.name.clone())
    }
}

/// Evaluable norm on `ℝ^d`.
pub trait Norm {
    fn norm(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpExp {
    One,
    Two,
    Inf,
}

/// Norm specification.
#[derive(Debug, Clone)]
pub enum NormSpec {
    Lp(LpExp),
    /// Gauge of the convex hull of symmetric vertices.
    Polytope { vertices: Vec<Vec<f64>>, gauge: Gauge },
    /// `max_k |⟨φ_k, x⟩|`.
    Dictionary(Vec<Vec<f64>>),
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec::Lp(LpExp::One);
    pub const L2: NormSpec = NormSpec::Lp(LpExp::Two);
    pub const LINF: NormSpec = NormSpec::Lp(LpExp::Inf);

    /// Fails unless the vertex set is symmetric and the origin is interior.
    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<NormSpec> {
        let gauge = Gauge::from_points(&vertices)?;
        for v in &vertices {
            let neg: Vec<f64> = v.iter().map(|t| -t).collect();
            if (gauge.eval(&neg) - gauge.eval(v)).abs() > 1e-9 * (1.0 + gauge.eval(v)) {
                return precondition("polytope is not centrally symmetric");
            }
        }
        Ok(NormSpec::Polytope { vertices, gauge })
    }

    /// Fails unless the functionals span `ℝ^d`.
    pub fn dictionary(functionals: Vec<Vec<f64>>) -> Result<NormSpec> {
        let Some(d) = functionals.first().map(|f| f.len()) else {
            return invalid("empty dictionary");
        };
        if d == 0 || d > MAX_DIM || functionals.iter().any(|f| f.len() != d) {
            return invalid("dictionary functionals must share a dimension between 1 and 3");
        }
        if rank(&functionals, d) < d {
            return precondition("dictionary is not norming (functionals do not span)");
        }
        Ok(NormSpec::Dictionary(functionals))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::Lp(LpExp::One) => x.iter().map(|v| v.abs()).sum(),
            NormSpec::Lp(LpExp::Two) => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormSpec::Lp(LpExp::Inf) => x.iter().fold(0.0, |a, v| a.max(v.abs())),
            NormSpec::Polytope { gauge, .. } => gauge.eval(x),
            NormSpec::Dictionary(fs) => fs.iter().map(|f| f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max),
        }
    }

    /// Dimension the norm is tied to, if any (ℓp norms work in every dimension).
    pub fn dim(&self) -> Option<usize> {
        match self {
            NormSpec::Lp(_) => None,
            NormSpec::Polytope { gauge, .. } => Some(gauge.dim()),
            NormSpec::Dictionary(fs) => Some(fs[0].len()),
        }
    }

    /// Vertices of the unit ball when it is a polytope (`ℓ1`, `ℓ∞`, polytope gauges).
    pub fn unit_ball_vertices(&self, dim: usize) -> Option<Vec<Vec<f64>>> {
        match self {
            NormSpec::Lp(LpExp::One) => Some(
                (0..dim)
                    .flat_map(|a| {
                        [1.0, -1.0].into_iter().map(move |s| {
                            let mut v = vec![0.0; dim];
                            v[a] = s;
                            v
                        })
                    })
                    .collect(),
            ),
            NormSpec::Lp(LpExp::Inf) => Some(
                (0..1usize << dim)
                    .map(|m| (0..dim).map(|a| if m >> a & 1 == 1 { -1.0 } else { 1.0 }).collect())
                    .collect(),
            ),
            NormSpec::Polytope { vertices, .. } => Some(vertices.clone()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            NormSpec::Lp(LpExp::One) => serde_json::json!({"kind": "lp", "p": 1}),
            NormSpec::Lp(LpExp::Two) => serde_json::json!({"kind": "lp", "p": 2}),
            NormSpec::Lp(LpExp::Inf) => serde_json::json!({"kind": "lp", "p": "inf"}),
            NormSpec::Polytope { vertices, .. } => serde_json::json!({"kind": "polytope", "vertices": vertices}),
            NormSpec::Dictionary(fs) => serde_json::json!({"kind": "dictionary", "functionals": fs}),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<NormSpec> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum P {
            Num(u32),
            Str(String),
        }
        #[derive(Deserialize)]
        #[serde(tag = "kind", rename_all = "lowercase")]
        enum Raw {
            Lp { p: P },
            Polytope { vertices: Vec<Vec<f64>> },
            Dictionary { functionals: Vec<Vec<f64>> },
        }
        match Raw::deserialize(v)? {
            Raw::Lp { p: P::Num(1) } => Ok(NormSpec::L1),
            Raw::Lp { p: P::Num(2) } => Ok(NormSpec::L2),
            Raw::Lp { p: P::Str(s) } if s == "inf" => Ok(NormSpec::LINF),
            Raw::Lp { .. } => invalid("p must be 1, 2 or \"inf\""),
            Raw::Polytope { vertices } => NormSpec::polytope(vertices),
            Raw::Dictionary { functionals } => NormSpec::dictionary(functionals),
        }
    }
}

impl Norm for NormSpec {
    fn norm(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl Norm for Gauge {
    fn norm(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Free-function form of [`NormSpec::eval`].
pub fn eval_norm(n: &NormSpec, x: &[f64]) -> Result<f64> {
    if let Some(d) = n.dim() {
        if d != x.len() {
            return invalid(format!("norm of dimension {d} applied to a point of dimension {}", x.len()));
        }
    }
    Ok(n.eval(x))
}

fn rank(rows: &[Vec<f64>], d: usize) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut r = 0;
    for c in 0..d {
        let Some(p) = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else { break };
        if m[p][c].abs() < 1e-12 {
            continue;
        }
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                for j in 0..d {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

/// Piecewise-linear nondecreasing concave modulus with `ϖ(0) = 0`,
/// continued with slope `tail` after its last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Varpi {
    pub knots: Vec<(f64, f64)>,
    pub tail: f64,
}

impl Varpi {
    pub fn identity() -> Varpi {
        Varpi { knots: vec![(0.0, 0.0)], tail: 1.0 }
    }

    /// `t ↦ L·t`.
    pub fn linear(l: f64) -> Varpi {
        Varpi { knots: vec![(0.0, 0.0)], tail: l }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        for w in self.knots.windows(2) {
            let (a, fa) = w[0];
            let (b, fb) = w[1];
            if t <= b {
                return fa + (fb - fa) * (t - a) / (b - a);
            }
        }
        let (a, fa) = *self.knots.last().expect("varpi has a knot at 0");
        fa + self.tail * (t - a)
    }
}

/// Map-valued data attached to support positions, measured in a target norm.
#[derive(Debug, Clone)]
pub enum MetricKind {
    Norm(NormSpec),
    Pullback { images: Vec<Vec<f64>>, target: NormSpec },
    Table { n: usize, values: Vec<f64> },
}

/// Pseudometric on a support with an optional modulus of uniform continuity.
#[derive(Debug, Clone)]
pub struct PseudometricSpec {
    kind: MetricKind,
    varpi: Option<Varpi>,
}

impl PseudometricSpec {
    pub fn norm(n: NormSpec) -> PseudometricSpec {
        PseudometricSpec { kind: MetricKind::Norm(n), varpi: Some(Varpi::identity()) }
    }

    /// `d(x_i, x_j) = N(F_i − F_j)` for images `F_i` listed per support position.
    pub fn pullback(images: Vec<Vec<f64>>, target: NormSpec) -> Result<PseudometricSpec> {
        if images.is_empty() {
            return invalid("pullback with no images");
        }
        let d = images[0].len();
        if images.iter().any(|v| v.len() != d || v.iter().any(|t| !t.is_finite())) {
            return invalid("pullback images must be finite and of equal dimension");
        }
        Ok(PseudometricSpec { kind: MetricKind::Pullback { images, target }, varpi: None })
    }

    /// `d(x, y) = |f(x) − f(y)|`; requires `f` finite on its support.
    pub fn pullback_fn(f: &TabFunc) -> Result<PseudometricSpec> {
        if f.values().iter().any(|v| !v.is_finite()) {
            return precondition("pullback function must be finite on its support");
        }
        PseudometricSpec::pullback(f.values().iter().map(|&v| vec![v]).collect(), NormSpec::LINF)
    }

    /// Row-major `n×n` table. Symmetry, zero diagonal and the triangle
    /// inequality are checked.
    pub fn table(n: usize, values: Vec<f64>) -> Result<PseudometricSpec> {
        if values.len() != n * n {
            return invalid("table metric needs n*n entries");
        }
        let at = |i: usize, j: usize| values[i * n + j];
        for i in 0..n {
            if at(i, i) != 0.0 {
                return precondition("table metric has a nonzero diagonal");
            }
            for j in 0..n {
                let v = at(i, j);
                if !(v >= 0.0 && v.is_finite()) || v != at(j, i) {
                    return precondition("table metric must be finite, nonnegative and symmetric");
                }
                for k in 0..n {
                    if v > at(i, k) + at(k, j) + 1e-12 {
                        return precondition(format!("triangle inequality fails at ({i}, {j}) via {k}"));
                    }
                }
            }
        }
        Ok(PseudometricSpec { kind: MetricKind::Table { n, values }, varpi: None })
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn varpi(&self) -> Option<&Varpi> {
        self.varpi.as_ref()
    }

    pub fn with_varpi(mut self, v: Varpi) -> PseudometricSpec {
        self.varpi = Some(v);
        self
    }

    /// Norm when the pseudometric is norm-induced.
    pub fn as_norm(&self) -> Option<&NormSpec> {
        match &self.kind {
            MetricKind::Norm(n) => Some(n),
            _ => None,
        }
    }

    /// Checks that index-based data covers the support.
    pub fn check_support(&self, s: &Support) -> Result<()> {
        let n = match &self.kind {
            MetricKind::Norm(nrm) => {
                if let Some(d) = nrm.dim() {
                    if d != s.dim() {
                        return invalid("norm dimension differs from support dimension");
                    }
                }
                return Ok(());
            }
            MetricKind::Pullback { images, .. } => images.len(),
            MetricKind::Table { n, .. } => *n,
        };
        if n != s.len() {
            return invalid(format!("pseudometric covers {n} points, support has {}", s.len()));
        }
        Ok(())
    }

    #[inline]
    pub fn dist(&self, s: &Support, i: usize, j: usize) -> f64 {
        match &self.kind {
            MetricKind::Norm(n) => {
                let d = s.diff(i, j);
                match n {
                    NormSpec::Lp(LpExp::Inf) => d.iter().fold(0.0, |a, v| a.max(v.abs())),
                    NormSpec::Lp(LpExp::One) => d.iter().map(|v| v.abs()).sum(),
                    NormSpec::Lp(LpExp::Two) => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    _ => n.eval(&d[..s.dim()]),
                }
            }
            MetricKind::Pullback { images, target } => {
                let (a, b) = (&images[i], &images[j]);
                if a.len() == 1 {
                    return (a[0] - b[0]).abs();
                }
                let diff: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
                target.eval(&diff)
            }
            MetricKind::Table { n, values } => values[i * n + j],
        }
    }

    /// Restriction of index-based data to a sub-support listed by positions.
    pub fn restrict(&self, keep: &[usize]) -> PseudometricSpec {
        let kind = match &self.kind {
            MetricKind::Norm(n) => MetricKind::Norm(n.clone()),
            MetricKind::Pullback { images, target } => MetricKind::Pullback { images: keep.iter().map(|&i| images[i].clone()).collect(), target: target.clone() },
            MetricKind::Table { n, values } => {
                let m = keep.len();
                let mut v = Vec::with_capacity(m * m);
                for &i in keep {
                    for &j in keep {
                        v.push(values[i * n + j]);
                    }
                }
                MetricKind::Table { n: m, values: v }
            }
        };
        PseudometricSpec { kind, varpi: self.varpi.clone() }
    }
}

/// Least concave nondecreasing majorant of `{(N(x − y), d(x, y))}` over all
/// support pairs, with value 0 at 0.
pub fn estimate_varpi(d: &PseudometricSpec, s: &Support, n: &NormSpec) -> Result<Varpi> {
    d.check_support(s)?;
    let mut best: HashMap<u64, f64> = HashMap::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let dx = s.diff(i, j);
            let t = n.eval(&dx[..s.dim()]);
            let v = d.dist(s, i, j);
            let e = best.entry(t.to_bits()).or_insert(v);
            if v > *e {
                *e = v;
            }
        }
    }
    let mut pts: Vec<(f64, f64)> = best.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect();
    pts.push((0.0, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let top = hull.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let cut = hull.iter().position(|p| p.1 == top).unwrap_or(0);
    hull.truncate(cut + 1);
    Ok(Varpi { knots: hull, tail: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(lo: f64, step: f64, n: usize) -> Arc<Support> {
        Arc::new(Support::grid(&make_dyadic_grid(&[lo], step, &[n]).unwrap()))
    }

    #[test]
    fn grid_construction() {
        let g = make_dyadic_grid(&[0.0], 1.0 / 64.0, &[129]).unwrap();
        let s = Support::grid(&g);
        assert_eq!(s.len(), 129);
        assert_eq!(s.point(128), &[2.0]);
        let g2 = make_dyadic_grid(&[-1.0, -1.0], 1.0 / 16.0, &[33, 33]).unwrap();
        let s2 = Support::grid(&g2);
        assert_eq!(s2.len(), 1089);
        assert_eq!(s2.point(1), &[-1.0, -1.0 + 1.0 / 16.0]);
        assert!(make_dyadic_grid(&[0.0], 0.0, &[3]).is_err());
        assert!(make_dyadic_grid(&[0.0; 4], 1.0, &[2; 4]).is_err());
    }

    #[test]
    fn midpoint_pair_examples() {
        let s = Support::from_points(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let mut p = midpoint_pairs(&s, 1);
        p.sort();
        assert_eq!(p, vec![(0, 2), (1, 1)]);
        let s2 = Support::from_points(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(midpoint_pairs(&s2, 0), vec![(0, 0)]);
        let g = line(0.0, 1.0 / 64.0, 129);
        assert_eq!(midpoint_pairs(&g, 64).len(), 65);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(NormSpec::LINF.eval(&[3.0, -4.0]), 4.0);
        assert_eq!(NormSpec::L1.eval(&[3.0, -4.0]), 7.0);
        let sq = NormSpec::polytope(vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(sq.eval(&[2.0, 0.0]), 2.0);
        assert!(NormSpec::polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]]).is_err());
        assert!(NormSpec::dictionary(vec![vec![1.0, 1.0], vec![2.0, 2.0]]).is_err());
    }

    #[test]
    fn ext_real_arithmetic() {
        let a = ExtReal::of(2.0);
        assert_eq!((ExtReal::INF + a).get(), f64::INFINITY);
        assert_eq!(ExtReal::INF.min(a), a);
        assert_eq!(ExtReal::INF.scale(3.0), ExtReal::INF);
        assert_eq!(ExtReal::INF.avg(a), ExtReal::INF);
        assert!(ExtReal::new(f64::NEG_INFINITY).is_none());
        let j = serde_json::to_string(&vec![a, ExtReal::INF]).unwrap();
        assert_eq!(j, "[2.0,\"inf\"]");
        let back: Vec<ExtReal> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![a, ExtReal::INF]);
    }

    #[test]
    fn function_json_roundtrip() {
        let text = r#"{"domain":{"kind":"grid","origin":[0],"spacing":0.5,"shape":[3]},"values":[1,"inf",2],"name":"f"}"#;
        let f = TabFunc::from_json(text).unwrap();
        assert_eq!(f.dom(), vec![0, 2]);
        let back = serde_json::to_string(&f.to_spec()).unwrap();
        assert_eq!(TabFunc::from_json(&back).unwrap().values(), f.values());
        assert!(TabFunc::from_json(r#"{"domain":{"kind":"points","coords":[[0]]},"values":["inf"]}"#).is_err());
    }

    #[test]
    fn varpi_of_norm_metric_is_identity_on_range() {
        let s = line(0.0, 0.25, 5);
        let d = PseudometricSpec::norm(NormSpec::L2);
        let v = estimate_varpi(&d, &s, &NormSpec::L2).unwrap();
        for t in [0.25, 0.5, 1.0] {
            assert!((v.eval(t) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn table_metric_triangle_checked() {
        assert!(PseudometricSpec::table(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]).is_err());
        assert!(PseudometricSpec::table(3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).is_ok());
    }
}
