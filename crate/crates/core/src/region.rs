//! King's-criterion inequalities for zero-block shapes and exact solution of
//! the resulting polarization regions.
//!
//! A shape counts the rows (per target type) and columns (per source type) of a
//! potential zero block. Its margin `sum_rows mu - sum_{other columns} lambda` is
//! positive exactly when the block destabilizes.

use crate::bundle::MorphismType;
use crate::rat::{fmt_q, primitive_integer_vector, q, row_echelon, Q};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("expected {expected} weights on the {side} side, got {found}")]
    Arity { side: &'static str, expected: usize, found: usize },
    #[error("weights must be positive")]
    NonPositive,
    #[error("weights on the {0} side do not sum to 1")]
    NotNormalized(&'static str),
    #[error("shape {0} does not fit the morphism type")]
    BadShape(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("plot coordinates {0:?} do not form a basis of the free weights")]
    DegeneratePlot(Vec<String>),
    #[error("malformed shape `{0}`")]
    ParseShape(String),
}

/// Positive weights per source type (`lambdas`) and target type (`mus`),
/// normalized by `sum m_i lambda_i = 1 = sum n_l mu_l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polarization {
    pub lambdas: Vec<Q>,
    pub mus: Vec<Q>,
}

impl Polarization {
    pub fn new(t: &MorphismType, lambdas: Vec<Q>, mus: Vec<Q>) -> Result<Self, RegionError> {
        let p = Self { lambdas, mus };
        p.validate(t)?;
        Ok(p)
    }

    pub fn validate(&self, t: &MorphismType) -> Result<(), RegionError> {
        for (side, sum, w) in [("source", &t.source, &self.lambdas), ("target", &t.target, &self.mus)] {
            if w.len() != sum.len() {
                return Err(RegionError::Arity { side, expected: sum.len(), found: w.len() });
            }
            if w.iter().any(|x| !x.is_positive()) {
                return Err(RegionError::NonPositive);
            }
            let total: Q = sum.mults().iter().zip(w).map(|(&m, x)| q(m as i64) * x).sum();
            if !total.is_one() {
                return Err(RegionError::NotNormalized(side));
            }
        }
        Ok(())
    }

    /// Full weight vector with the eliminated coordinates recovered from normalization.
    pub fn from_free(t: &MorphismType, free: &[Q]) -> Self {
        let (s, r) = (t.source.len(), t.target.len());
        let complete = |given: &[Q], mults: Vec<u32>| -> Vec<Q> {
            let used: Q = given.iter().zip(&mults).map(|(x, &m)| x * q(m as i64)).sum();
            let mut v = given.to_vec();
            v.push((Q::one() - used) / q(*mults.last().expect("nonempty") as i64));
            v
        };
        Self {
            lambdas: complete(&free[..s - 1], t.source.mults()),
            mus: complete(&free[s - 1..s - 1 + r - 1], t.target.mults()),
        }
    }

    pub fn free_coords(&self) -> Vec<Q> {
        let mut v = self.lambdas[..self.lambdas.len() - 1].to_vec();
        v.extend_from_slice(&self.mus[..self.mus.len() - 1]);
        v
    }

    pub fn get(&self, w: Weight) -> &Q {
        match w {
            Weight::Lambda(i) => &self.lambdas[i],
            Weight::Mu(l) => &self.mus[l],
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<String> = self.lambdas.iter().map(fmt_q).collect();
        let m: Vec<String> = self.mus.iter().map(fmt_q).collect();
        write!(f, "{};{}", l.join(","), m.join(","))
    }
}

/// Counts of rows per target type and columns per source type of a zero block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

impl Shape {
    pub fn new(rows: Vec<u32>, cols: Vec<u32>) -> Self {
        Self { rows, cols }
    }

    pub fn validate(&self, t: &MorphismType) -> Result<(), RegionError> {
        let fits = |counts: &[u32], mults: Vec<u32>| {
            counts.len() == mults.len()
                && counts.iter().zip(&mults).all(|(c, m)| c <= m)
                && counts.iter().any(|&c| c > 0)
        };
        if fits(&self.rows, t.target.mults()) && fits(&self.cols, t.source.mults()) {
            Ok(())
        } else {
            Err(RegionError::BadShape(self.to_string()))
        }
    }

    pub fn size(&self) -> u32 {
        self.rows.iter().sum::<u32>() + self.cols.iter().sum::<u32>()
    }

    /// `true` if every count is at most the other shape's count.
    pub fn within(&self, other: &Self) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a <= b) && self.cols.iter().zip(&other.cols).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        write!(f, "rows=({}) cols=({})", j(&self.rows), j(&self.cols))
    }
}

impl FromStr for Shape {
    type Err = RegionError;
    fn from_str(s: &str) -> Result<Self, RegionError> {
        let bad = || RegionError::ParseShape(s.to_string());
        let mut rows = None;
        let mut cols = None;
        for part in s.split_whitespace() {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let inner = v.strip_prefix('(').and_then(|v| v.strip_suffix(')')).ok_or_else(bad)?;
            let nums: Result<Vec<u32>, _> = inner.split(',').map(|x| x.trim().parse()).collect();
            match k {
                "rows" => rows = Some(nums.map_err(|_| bad())?),
                "cols" => cols = Some(nums.map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        Ok(Self { rows: rows.ok_or_else(bad)?, cols: cols.ok_or_else(bad)? })
    }
}

fn count_vectors(mults: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &m in mults {
        out = out.into_iter().flat_map(|v| (0..=m).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&k| k > 0));
    out
}

/// All shapes with at least one row and one column, rows varying slowest.
pub fn enumerate_shapes(t: &MorphismType) -> Vec<Shape> {
    let rows = count_vectors(&t.target.mults());
    let cols = count_vectors(&t.source.mults());
    rows.iter().flat_map(|r| cols.iter().map(move |c| Shape::new(r.clone(), c.clone()))).collect()
}

/// Names one weight: `Lambda(i)` for source type `i`, `Mu(l)` for target type `l` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Lambda(usize),
    Mu(usize),
}

impl Weight {
    pub fn parse(name: &str, t: &MorphismType) -> Result<Self, RegionError> {
        let bad = || RegionError::UnknownCoordinate(name.to_string());
        let (kind, idx) = name.split_at(1);
        let idx: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "l" if (1..=t.source.len()).contains(&idx) => Ok(Self::Lambda(idx - 1)),
            "m" if (1..=t.target.len()).contains(&idx) => Ok(Self::Mu(idx - 1)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lambda(i) => write!(f, "l{}", i + 1),
            Self::Mu(l) => write!(f, "m{}", l + 1),
        }
    }
}

/// Affine form in all weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightForm {
    pub lambda: Vec<Q>,
    pub mu: Vec<Q>,
    pub constant: Q,
}

impl WeightForm {
    fn zero(t: &MorphismType) -> Self {
        Self { lambda: vec![Q::zero(); t.source.len()], mu: vec![Q::zero(); t.target.len()], constant: Q::zero() }
    }

    pub fn single(t: &MorphismType, w: Weight) -> Self {
        let mut f = Self::zero(t);
        match w {
            Weight::Lambda(i) => f.lambda[i] = Q::one(),
            Weight::Mu(l) => f.mu[l] = Q::one(),
        }
        f
    }

    pub fn eval(&self, p: &Polarization) -> Q {
        let dot = |a: &[Q], b: &[Q]| -> Q { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        dot(&self.lambda, &p.lambdas) + dot(&self.mu, &p.mus) + &self.constant
    }

    pub fn neg(&self) -> Self {
        Self {
            lambda: self.lambda.iter().map(|x| -x).collect(),
            mu: self.mu.iter().map(|x| -x).collect(),
            constant: -&self.constant,
        }
    }

    /// Rewrites the form in the free coordinates, solving out the last lambda and the last mu.
    pub fn restrict(&self, t: &MorphismType) -> Affine {
        let (s, r) = (t.source.len(), t.target.len());
        let ms = t.source.mults();
        let ns = t.target.mults();
        let mut coeffs = vec![Q::zero(); s - 1 + r - 1];
        let mut constant = self.constant.clone();
        let last_l = &self.lambda[s - 1] / q(ms[s - 1] as i64);
        constant += &last_l;
        for i in 0..s - 1 {
            coeffs[i] = &self.lambda[i] - &last_l * q(ms[i] as i64);
        }
        let last_m = &self.mu[r - 1] / q(ns[r - 1] as i64);
        constant += &last_m;
        for l in 0..r - 1 {
            coeffs[s - 1 + l] = &self.mu[l] - &last_m * q(ns[l] as i64);
        }
        Affine { coeffs, constant }
    }
}

/// `sum_rows mu - sum_{columns outside the block} lambda`.
pub fn shape_margin(s: &Shape, t: &MorphismType) -> WeightForm {
    WeightForm {
        lambda: t.source.mults().iter().zip(&s.cols).map(|(&m, &c)| -q((m - c) as i64)).collect(),
        mu: s.rows.iter().map(|&b| q(b as i64)).collect(),
        constant: Q::zero(),
    }
}

/// Constraint `form > 0` (strict) or `form >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightConstraint {
    pub form: WeightForm,
    pub strict: bool,
}

impl WeightConstraint {
    pub fn holds(&self, p: &Polarization) -> bool {
        let v = self.form.eval(p);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }
}

/// The King inequality `sum_rows mu (<|<=) sum_{other columns} lambda` for one zero block.
///
/// A shape destabilizes under a polarization exactly when this constraint fails.
pub fn shape_inequality(s: &Shape, t: &MorphismType, strict: bool) -> WeightConstraint {
    WeightConstraint { form: shape_margin(s, t).neg(), strict }
}

/// Labels each shape as destabilizing (`true`: margin strictly positive) or not.
pub fn classify_shapes(t: &MorphismType, p: &Polarization) -> Vec<(Shape, bool)> {
    enumerate_shapes(t)
        .into_iter()
        .map(|s| {
            let m = shape_margin(&s, t).eval(p);
            (s, m.is_positive())
        })
        .collect()
}

/// Smallest shape containing `s` such that every forced-zero block adjacent to it is absorbed:
/// a whole target type joins when all columns of the block already map to it through zeroed
/// blocks, and symmetrically for source types.
pub fn closure(t: &MorphismType, s: &Shape) -> Shape {
    let (mut r, mut c) = (s.rows.clone(), s.cols.clone());
    let (nt, ns) = (t.target.mults(), t.source.mults());
    loop {
        let mut changed = false;
        for l in 0..r.len() {
            if r[l] < nt[l] && (0..c.len()).filter(|&i| c[i] > 0).all(|i| t.is_zeroed(i, l)) {
                r[l] = nt[l];
                changed = true;
            }
        }
        for i in 0..c.len() {
            if c[i] < ns[i] && (0..r.len()).filter(|&l| r[l] > 0).all(|l| t.is_zeroed(i, l)) {
                c[i] = ns[i];
                changed = true;
            }
        }
        if !changed {
            return Shape::new(r, c);
        }
    }
}

/// Whether a block of shape `pattern` fits inside the zero pattern of `s` together with the forced zeros.
pub fn contains_pattern(t: &MorphismType, pattern: &Shape, s: &Shape) -> bool {
    for (l, &fr) in pattern.rows.iter().enumerate().filter(|(_, &x)| x > 0) {
        for (i, &fc) in pattern.cols.iter().enumerate().filter(|(_, &x)| x > 0) {
            if !t.is_zeroed(i, l) && (fr > s.rows[l] || fc > s.cols[i]) {
                return false;
            }
        }
    }
    true
}

/// How shapes outside the forbidden list are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AllowedMode {
    /// Every closed shape of size at most the target rank that avoids all forbidden patterns.
    Rest,
    /// No allowed shapes beyond positivity.
    None,
}

/// Shapes that must not destabilize, given the forbidden list.
pub fn allowed_shapes(t: &MorphismType, forbidden: &[Shape], mode: AllowedMode) -> Vec<Shape> {
    if mode == AllowedMode::None {
        return Vec::new();
    }
    let limit = t.rows() as u32;
    enumerate_shapes(t)
        .into_iter()
        .filter(|s| closure(t, s) == *s && s.size() <= limit)
        .filter(|s| !forbidden.iter().any(|f| contains_pattern(t, f, s)))
        .collect()
}

/// Affine function of the free coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Affine {
    pub coeffs: Vec<Q>,
    pub constant: Q,
}

impl Affine {
    pub fn eval(&self, x: &[Q]) -> Q {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<Q>() + &self.constant
    }

    /// Positive rescaling to coprime integers.
    fn normalized(&self) -> Self {
        let mut all = self.coeffs.clone();
        all.push(self.constant.clone());
        if all.iter().all(Zero::is_zero) {
            return self.clone();
        }
        let ints = primitive_integer_vector(&all);
        let mut v: Vec<Q> = ints.into_iter().map(Q::from_integer).collect();
        let constant = v.pop().expect("constant");
        Self { coeffs: v, constant }
    }
}

/// `expr > 0` when strict, `expr >= 0` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Facet {
    pub expr: Affine,
    pub strict: bool,
}

impl Facet {
    pub fn holds(&self, x: &[Q]) -> bool {
        let v = self.expr.eval(x);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }
}

/// Exact solution set of the polarization inequalities, in plot coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub free_vars: Vec<String>,
    pub facets: Vec<Facet>,
    /// Vertices of the closure, sorted lexicographically.
    pub vertices: Vec<Vec<Q>>,
    /// `None` for the empty region.
    pub affine_dim: Option<usize>,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.affine_dim.is_none()
    }

    /// Membership via the listed facets.
    pub fn contains(&self, y: &[Q]) -> bool {
        !self.is_empty() && self.facets.iter().all(|f| f.holds(y))
    }

    pub fn barycenter(&self) -> Option<Vec<Q>> {
        let n = self.vertices.len();
        if n == 0 {
            return None;
        }
        let k = self.free_vars.len();
        Some((0..k).map(|j| self.vertices.iter().map(|v| &v[j]).sum::<Q>() / q(n as i64)).collect())
    }

    /// Barycenter plus points pulled from it towards each vertex; all lie in the relative interior.
    pub fn interior_samples(&self) -> Vec<Vec<Q>> {
        let Some(b) = self.barycenter() else { return Vec::new() };
        let mut out = vec![b.clone()];
        for v in &self.vertices {
            out.push(b.iter().zip(v).map(|(x, y)| (x * q(3) + y) / q(4)).collect());
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let facets: Vec<Value> = self
            .facets
            .iter()
            .map(|f| json!({"expr": format_affine(&f.expr, &self.free_vars), "strict": f.strict}))
            .collect();
        let vertices: Vec<Vec<String>> = self.vertices.iter().map(|v| v.iter().map(fmt_q).collect()).collect();
        json!({
            "free_vars": self.free_vars,
            "facets": facets,
            "vertices": vertices,
            "affine_dim": self.affine_dim,
            "empty": self.is_empty(),
        })
    }

    /// Short human-readable form, e.g. `[1/8, 1/4)` or `polygon (0,0) (1/4,1/4) (1/8,1/4)`.
    pub fn describe(&self) -> String {
        let pt = |v: &[Q]| format!("({})", v.iter().map(fmt_q).collect::<Vec<_>>().join(","));
        match self.affine_dim {
            None => "empty".into(),
            Some(0) => format!("point {}", pt(&self.vertices[0])),
            Some(1) if self.free_vars.len() == 1 => {
                let (a, b) = (&self.vertices[0][0], &self.vertices[1][0]);
                let closed = |x: &Q| self.contains(std::slice::from_ref(x));
                format!(
                    "{}{}, {}{}",
                    if closed(a) { "[" } else { "(" },
                    fmt_q(a),
                    fmt_q(b),
                    if closed(b) { "]" } else { ")" }
                )
            }
            Some(1) => format!("segment {}", self.vertices.iter().map(|v| pt(v)).collect::<Vec<_>>().join(" ")),
            Some(_) => format!("polygon {}", self.vertices.iter().map(|v| pt(v)).collect::<Vec<_>>().join(" ")),
        }
    }
}

/// Formats `sum c_j*v_j + c` with integer-normalized coefficients.
pub fn format_affine(a: &Affine, vars: &[String]) -> String {
    let mut parts: Vec<String> = a.coeffs.iter().zip(vars).map(|(c, v)| format!("{}*{}", fmt_q(c), v)).collect();
    parts.push(fmt_q(&a.constant));
    parts.join(" + ")
}

/// Names of the coordinates left after normalization: `l1..` then `m1..`, last of each side omitted.
pub fn free_names(t: &MorphismType) -> Vec<String> {
    let l = (1..t.source.len()).map(|i| format!("l{i}"));
    let m = (1..t.target.len()).map(|i| format!("m{i}"));
    l.chain(m).collect()
}

/// Builds the free-coordinate constraint system for a case.
pub fn region_constraints(t: &MorphismType, forbidden: &[Shape], allowed: &[Shape]) -> Vec<Facet> {
    let mut out = Vec::new();
    for i in 0..t.source.len() {
        out.push(Facet { expr: WeightForm::single(t, Weight::Lambda(i)).restrict(t), strict: true });
    }
    for l in 0..t.target.len() {
        out.push(Facet { expr: WeightForm::single(t, Weight::Mu(l)).restrict(t), strict: true });
    }
    for f in forbidden {
        out.push(Facet { expr: shape_margin(f, t).restrict(t), strict: true });
    }
    for a in allowed {
        out.push(Facet { expr: shape_margin(a, t).neg().restrict(t), strict: false });
    }
    out
}

/// Solves for the polarizations making every `forbidden` shape destabilizing and no
/// `allowed` shape destabilizing, reported in the coordinates named by `plot`.
pub fn admissible_region(
    t: &MorphismType,
    forbidden: &[Shape],
    allowed: &[Shape],
    plot: &[String],
) -> Result<Region, RegionError> {
    for s in forbidden.iter().chain(allowed) {
        s.validate(t)?;
    }
    solve(t, region_constraints(t, forbidden, allowed), plot)
}

/// Solves a constraint system given in free coordinates.
pub fn solve(t: &MorphismType, constraints: Vec<Facet>, plot: &[String]) -> Result<Region, RegionError> {
    let k = t.source.len() - 1 + t.target.len() - 1;
    let change = PlotChange::new(t, plot)?;
    if k > 2 {
        return Err(RegionError::DegeneratePlot(plot.to_vec()));
    }
    let closure_pts = closure_vertices(k, &constraints);
    let empty = Region { free_vars: plot.to_vec(), facets: Vec::new(), vertices: Vec::new(), affine_dim: None };
    if closure_pts.is_empty() {
        return Ok(empty);
    }
    let n = closure_pts.len();
    let bary: Vec<Q> = (0..k).map(|j| closure_pts.iter().map(|v| &v[j]).sum::<Q>() / q(n as i64)).collect();
    if constraints.iter().any(|c| c.strict && c.expr.eval(&bary).is_zero()) {
        return Ok(empty);
    }
    let dim = affine_dim(&closure_pts);
    let mut facets: Vec<Facet> = Vec::new();
    for c in &constraints {
        let tight: Vec<&Vec<Q>> = closure_pts.iter().filter(|v| c.expr.eval(v).is_zero()).collect();
        let identically = tight.len() == closure_pts.len();
        let supports_face = dim > 0 && !identically && !tight.is_empty() && affine_dim_refs(&tight) + 1 == dim;
        if identically || supports_face {
            let expr = change.to_plot(&c.expr).normalized();
            if let Some(existing) = facets.iter_mut().find(|f| f.expr == expr) {
                existing.strict |= c.strict;
            } else {
                facets.push(Facet { expr, strict: c.strict });
            }
        }
    }
    facets.sort_by(|a, b| {
        (&a.expr.coeffs, &a.expr.constant, a.strict).cmp(&(&b.expr.coeffs, &b.expr.constant, b.strict))
    });
    let mut vertices: Vec<Vec<Q>> = closure_pts.iter().map(|v| change.point(v)).collect();
    vertices.sort();
    vertices.dedup();
    Ok(Region { free_vars: plot.to_vec(), facets, vertices, affine_dim: Some(dim) })
}

/// Affine map from free coordinates to plot coordinates.
struct PlotChange {
    rows: Vec<Affine>,
    inverse: Vec<Vec<Q>>,
}

impl PlotChange {
    fn new(t: &MorphismType, plot: &[String]) -> Result<Self, RegionError> {
        let k = t.source.len() - 1 + t.target.len() - 1;
        let rows: Vec<Affine> = plot
            .iter()
            .map(|name| Weight::parse(name, t).map(|w| WeightForm::single(t, w).restrict(t)))
            .collect::<Result<_, _>>()?;
        if k == 0 {
            return Ok(Self { rows, inverse: Vec::new() });
        }
        if rows.len() != k {
            return Err(RegionError::DegeneratePlot(plot.to_vec()));
        }
        let aug: Vec<Vec<Q>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v = r.coeffs.clone();
                v.extend((0..k).map(|j| if i == j { Q::one() } else { Q::zero() }));
                v
            })
            .collect();
        let rref = row_echelon(aug);
        if rref.len() < k || (0..k).any(|i| !rref[i][i].is_one()) {
            return Err(RegionError::DegeneratePlot(plot.to_vec()));
        }
        let inverse = rref.iter().map(|r| r[k..].to_vec()).collect();
        Ok(Self { rows, inverse })
    }

    fn point(&self, x: &[Q]) -> Vec<Q> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    /// Rewrites `a . x + c` with `x = A^{-1} (y - b)`.
    fn to_plot(&self, a: &Affine) -> Affine {
        let k = self.inverse.len();
        if k == 0 {
            return Affine { coeffs: vec![Q::zero(); self.rows.len()], constant: a.constant.clone() };
        }
        let coeffs: Vec<Q> = (0..k).map(|j| (0..k).map(|i| &a.coeffs[i] * &self.inverse[i][j]).sum()).collect();
        let offsets: Vec<Q> = self.rows.iter().map(|r| r.constant.clone()).collect();
        let shift: Q = coeffs.iter().zip(&offsets).map(|(c, b)| c * b).sum();
        Affine { coeffs, constant: &a.constant - shift }
    }
}

fn affine_dim(pts: &[Vec<Q>]) -> usize {
    affine_dim_refs(&pts.iter().collect::<Vec<_>>())
}

fn affine_dim_refs(pts: &[&Vec<Q>]) -> usize {
    let Some(first) = pts.first() else { return 0 };
    let diffs: Vec<Vec<Q>> =
        pts[1..].iter().map(|p| p.iter().zip(first.iter()).map(|(a, b)| a - b).collect()).collect();
    if diffs.is_empty() {
        return 0;
    }
    row_echelon(diffs).len()
}

/// Vertices of `{x : expr >= 0 for every constraint}`, inside the box `[-1, 2]^k`.
fn closure_vertices(k: usize, cons: &[Facet]) -> Vec<Vec<Q>> {
    match k {
        0 => {
            if cons.iter().all(|c| !c.expr.constant.is_negative()) {
                vec![Vec::new()]
            } else {
                Vec::new()
            }
        }
        1 => {
            let (mut lo, mut hi) = (q(-1), q(2));
            for c in cons {
                let (a, b) = (&c.expr.coeffs[0], &c.expr.constant);
                if a.is_zero() {
                    if b.is_negative() {
                        return Vec::new();
                    }
                    continue;
                }
                let root = -b / a;
                if a.is_positive() {
                    lo = lo.max(root);
                } else {
                    hi = hi.min(root);
                }
            }
            match lo.cmp(&hi) {
                std::cmp::Ordering::Greater => Vec::new(),
                std::cmp::Ordering::Equal => vec![vec![lo]],
                std::cmp::Ordering::Less => vec![vec![lo], vec![hi]],
            }
        }
        _ => {
            let mut poly: Vec<[Q; 2]> = vec![[q(-1), q(-1)], [q(2), q(-1)], [q(2), q(2)], [q(-1), q(2)]];
            for c in cons {
                poly = clip(&poly, &c.expr);
                if poly.is_empty() {
                    return Vec::new();
                }
            }
            let mut pts: Vec<Vec<Q>> = extreme_points(&poly).into_iter().map(|p| p.to_vec()).collect();
            pts.sort();
            pts.dedup();
            pts
        }
    }
}

fn clip(poly: &[[Q; 2]], h: &Affine) -> Vec<[Q; 2]> {
    let f = |p: &[Q; 2]| &h.coeffs[0] * &p[0] + &h.coeffs[1] * &p[1] + &h.constant;
    let mut out: Vec<[Q; 2]> = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (p, r) = (&poly[i], &poly[(i + 1) % n]);
        let (fp, fr) = (f(p), f(r));
        if !fp.is_negative() {
            out.push(p.clone());
        }
        if (fp.is_positive() && fr.is_negative()) || (fp.is_negative() && fr.is_positive()) {
            let s = &fp / (&fp - &fr);
            out.push([&p[0] + &s * (&r[0] - &p[0]), &p[1] + &s * (&r[1] - &p[1])]);
        }
    }
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Drops repeated and collinear-middle vertices of a convex polygon (possibly degenerate).
fn extreme_points(poly: &[[Q; 2]]) -> Vec<[Q; 2]> {
    let mut pts: Vec<[Q; 2]> = Vec::new();
    for p in poly {
        if !pts.contains(p) {
            pts.push(p.clone());
        }
    }
    if pts.len() <= 2 {
        return pts;
    }
    let cross =
        |a: &[Q; 2], b: &[Q; 2], c: &[Q; 2]| (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0]);
    if pts.windows(3).all(|w| cross(&w[0], &w[1], &w[2]).is_zero()) {
        let min = pts.iter().min().cloned().expect("nonempty");
        let max = pts.iter().max().cloned().expect("nonempty");
        return vec![min, max];
    }
    let n = pts.len();
    (0..n)
        .filter(|&i| !cross(&pts[(i + n - 1) % n], &pts[i], &pts[(i + 1) % n]).is_zero())
        .map(|i| pts[i].clone())
        .collect()
}

/// Dual polarization on the dual type: both weight lists reversed and exchanged.
pub fn dual_polarization(p: &Polarization, t: &MorphismType) -> Result<Polarization, RegionError> {
    p.validate(t)?;
    let lambdas = p.mus.iter().rev().cloned().collect();
    let mus = p.lambdas.iter().rev().cloned().collect();
    Polarization::new(&t.dual(), lambdas, mus)
}
