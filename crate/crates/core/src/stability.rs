//! Semistability of concrete morphisms: exact zero-block decisions where the geometry is a
//! single projective vector or nothing at all, seeded random search everywhere else.

use crate::bundle::{BundleSum, MorphismType};
use crate::mpoly::{no_common_zero, rank_mod_p, reduce_mod_p, MPoly};
use crate::poly::{poly_gcd_all, HomogeneousPoly};
use crate::polymatrix::{determinant, linearly_independent, PolyMatrix};
use crate::rat::{left_null_space, null_space, q, rank, Q};
use crate::region::{enumerate_shapes, shape_margin, Polarization, Shape};
use crate::ring::{self, Ring};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

const PRIMES: [u64; 5] = [10007, 10009, 10037, 10039, 10061];
const MAX_MINORS: usize = 4000;
const MAX_MACAULAY_COLS: usize = 1200;

/// Constant row and column vectors whose transform of the matrix vanishes identically.
///
/// Every row vector lies inside one target type and every column vector inside one source type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub shape: Shape,
    pub rows: Vec<Vec<Q>>,
    pub cols: Vec<Vec<Q>>,
}

fn kind_of(v: &[Q], sum: &BundleSum) -> Option<usize> {
    let kinds = sum.kinds();
    let mut found = None;
    for (k, x) in kinds.iter().zip(v) {
        if !x.is_zero() {
            match found {
                None => found = Some(*k),
                Some(f) if f != *k => return None,
                _ => {}
            }
        }
    }
    found
}

fn counts_match(vecs: &[Vec<Q>], sum: &BundleSum, want: &[u32]) -> bool {
    (0..sum.len()).all(|t| {
        let of_kind: Vec<Vec<Q>> = vecs.iter().filter(|v| kind_of(v, sum) == Some(t)).cloned().collect();
        of_kind.len() == want[t] as usize && rank(&of_kind) == of_kind.len()
    }) && vecs.iter().all(|v| v.len() == sum.rank() && kind_of(v, sum).is_some())
}

impl Witness {
    /// Checks supports, independence, counts and that `U * M * K` is identically zero.
    pub fn verify(&self, m: &PolyMatrix) -> bool {
        let t = m.ty();
        counts_match(&self.rows, &t.target, &self.shape.rows)
            && counts_match(&self.cols, &t.source, &self.shape.cols)
            && m.transform(&self.rows, &self.cols).iter().flatten().all(HomogeneousPoly::is_zero)
    }
}

/// Outcome of deciding a single shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockDecision {
    Found(Witness),
    /// A zero block exists over the algebraic closure but no rational witness was located.
    Algebraic,
    Absent,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Destabilized,
    CertifiedSemistable,
    Undetermined,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Destabilized => "destabilized",
            Self::CertifiedSemistable => "certified-semistable",
            Self::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
    /// Destabilizing shape that was shown to occur, with or without a rational witness.
    pub shape: Option<Shape>,
    /// Minimal destabilizing shapes that neither exact test nor search settled.
    pub undecided: Vec<Shape>,
    pub trials: u64,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(s) = &self.shape {
            write!(f, " shape {s}")?;
            if self.witness.is_none() {
                write!(f, " (algebraic witness only)")?;
            }
        }
        if !self.undecided.is_empty() {
            write!(f, " undecided={}", self.undecided.len())?;
        }
        write!(f, " trials={}", self.trials)
    }
}

fn unit(len: usize, at: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); len];
    v[at] = Q::one();
    v
}

fn embed(local: &[Q], len: usize, start: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); len];
    for (k, x) in local.iter().enumerate() {
        v[start + k] = x.clone();
    }
    v
}

fn lin_comb(vecs: &[&Vec<Q>], weights: &[Q]) -> Vec<Q> {
    let mut acc = vec![Q::zero(); vecs.first().map_or(0, |v| v.len())];
    for (v, w) in vecs.iter().zip(weights).filter(|(_, w)| !w.is_zero()) {
        for (a, b) in acc.iter_mut().zip(v.iter()) {
            *a += b * w;
        }
    }
    acc
}

/// Coefficient slices of every entry, plus their reductions modulo the search primes.
struct Slices<'a> {
    ty: &'a MorphismType,
    coef: Vec<Vec<Vec<Q>>>,
    coef_p: Vec<Option<Vec<Vec<Vec<u64>>>>>,
    row_kind: Vec<usize>,
    col_kind: Vec<usize>,
}

impl<'a> Slices<'a> {
    fn new(m: &'a PolyMatrix) -> Self {
        let ty = m.ty();
        let row_kind = ty.target.kinds();
        let col_kind = ty.source.kinds();
        let coef: Vec<Vec<Vec<Q>>> = (0..m.rows())
            .map(|r| {
                (0..m.cols())
                    .map(|c| match ty.block_degree(col_kind[c], row_kind[r]) {
                        Some(d) if !ty.is_zeroed(col_kind[c], row_kind[r]) => m.entry(r, c).coefficient_vector(d),
                        _ => Vec::new(),
                    })
                    .collect()
            })
            .collect();
        let coef_p = PRIMES
            .iter()
            .map(|&p| {
                coef.iter()
                    .map(|row| {
                        row.iter().map(|v| v.iter().map(|x| reduce_mod_p(x, p)).collect::<Option<Vec<_>>>()).collect()
                    })
                    .collect::<Option<Vec<Vec<Vec<u64>>>>>()
            })
            .collect();
        Self { ty, coef, coef_p, row_kind, col_kind }
    }

    fn slice_len(&self, i: usize, l: usize) -> usize {
        self.coef[self.ty.target.range(l).start][self.ty.source.range(i).start].len()
    }

    /// Row vectors, `need[l]` per target type, annihilating `M * k` for every `k` in `cols`.
    fn rows_for(&self, cols: &[Vec<Q>], need: &[u32]) -> Option<Vec<Vec<Q>>> {
        let n = self.ty.rows();
        let mut out = Vec::new();
        for (l, &b) in need.iter().enumerate().filter(|(_, &b)| b > 0) {
            let range = self.ty.target.range(l);
            let mat: Vec<Vec<Q>> = range
                .clone()
                .map(|r| {
                    cols.iter()
                        .flat_map(|k| {
                            let i = kind_of(k, &self.ty.source).expect("typed vector");
                            let cs: Vec<&Vec<Q>> = self.ty.source.range(i).map(|c| &self.coef[r][c]).collect();
                            let w: Vec<Q> = self.ty.source.range(i).map(|c| k[c].clone()).collect();
                            if cs[0].is_empty() {
                                Vec::new()
                            } else {
                                lin_comb(&cs, &w)
                            }
                        })
                        .collect()
                })
                .collect();
            let kernel = left_null_space(&mat, range.len());
            if kernel.len() < b as usize {
                return None;
            }
            out.extend(kernel.iter().take(b as usize).map(|v| embed(v, n, range.start)));
        }
        Some(out)
    }

    /// Column vectors, `need[i]` per source type, killed by every row vector in `rows`.
    fn cols_for(&self, rows: &[Vec<Q>], need: &[u32]) -> Option<Vec<Vec<Q>>> {
        let c_total = self.ty.cols();
        let mut out = Vec::new();
        for (i, &a) in need.iter().enumerate().filter(|(_, &a)| a > 0) {
            let range = self.ty.source.range(i);
            let mut mat: Vec<Vec<Q>> = Vec::new();
            for u in rows {
                let l = kind_of(u, &self.ty.target).expect("typed vector");
                let w: Vec<Q> = self.ty.target.range(l).map(|r| u[r].clone()).collect();
                for j in 0..self.slice_len(i, l) {
                    mat.push(
                        range
                            .clone()
                            .map(|c| self.ty.target.range(l).zip(&w).map(|(r, x)| &self.coef[r][c][j] * x).sum())
                            .collect(),
                    );
                }
            }
            let kernel = null_space(&mat, range.len());
            if kernel.len() < a as usize {
                return None;
            }
            out.extend(kernel.iter().take(a as usize).map(|v| embed(v, c_total, range.start)));
        }
        Some(out)
    }

    /// Modular screen of `rows_for`: `false` proves no rows exist for these columns.
    fn rows_possible_mod(&self, cols: &[Vec<i64>], need: &[u32], pi: usize) -> bool {
        let (p, Some(cp)) = (PRIMES[pi], &self.coef_p[pi]) else { return true };
        need.iter().enumerate().filter(|(_, &b)| b > 0).all(|(l, &b)| {
            let range = self.ty.target.range(l);
            let mat: Vec<Vec<u64>> = range
                .clone()
                .map(|r| {
                    let mut row = Vec::new();
                    for k in cols {
                        let i = self.col_kind[k.iter().position(|x| *x != 0).expect("nonzero")];
                        for j in 0..self.slice_len(i, l) {
                            let s = self
                                .ty
                                .source
                                .range(i)
                                .fold(0u64, |acc, c| (acc + cp[r][c][j] * k[c].rem_euclid(p as i64) as u64) % p);
                            row.push(s);
                        }
                    }
                    row
                })
                .collect();
            range.len() - rank_mod_p(mat, p) >= b as usize
        })
    }

    fn cols_possible_mod(&self, rows: &[Vec<i64>], need: &[u32], pi: usize) -> bool {
        let (p, Some(cp)) = (PRIMES[pi], &self.coef_p[pi]) else { return true };
        need.iter().enumerate().filter(|(_, &a)| a > 0).all(|(i, &a)| {
            let range = self.ty.source.range(i);
            let mut mat = Vec::new();
            for u in rows {
                let l = self.row_kind[u.iter().position(|x| *x != 0).expect("nonzero")];
                for j in 0..self.slice_len(i, l) {
                    mat.push(
                        range
                            .clone()
                            .map(|c| {
                                self.ty
                                    .target
                                    .range(l)
                                    .fold(0u64, |acc, r| (acc + cp[r][c][j] * u[r].rem_euclid(p as i64) as u64) % p)
                            })
                            .collect(),
                    );
                }
            }
            range.len() - rank_mod_p(mat, p) >= a as usize
        })
    }

    /// Determinantal conditions on a single column vector of source type `i`.
    fn column_pencil(&self, i: usize, need_rows: &[u32]) -> Option<Vec<MPoly>> {
        let vars: Vec<usize> = self.ty.source.range(i).collect();
        let mut forms = Vec::new();
        for (l, &b) in need_rows.iter().enumerate().filter(|(_, &b)| b > 0) {
            let len = self.slice_len(i, l);
            let mat: Vec<Vec<MPoly>> = self
                .ty
                .target
                .range(l)
                .map(|r| {
                    (0..len)
                        .map(|j| MPoly::linear(&vars.iter().map(|&c| self.coef[r][c][j].clone()).collect::<Vec<_>>()))
                        .collect()
                })
                .collect();
            forms.extend(rank_at_most(&mat, mat.len() - b as usize)?);
        }
        Some(forms)
    }

    fn row_pencil(&self, l: usize, need_cols: &[u32]) -> Option<Vec<MPoly>> {
        let vars: Vec<usize> = self.ty.target.range(l).collect();
        let mut forms = Vec::new();
        for (i, &a) in need_cols.iter().enumerate().filter(|(_, &a)| a > 0) {
            let len = self.slice_len(i, l);
            let mat: Vec<Vec<MPoly>> = (0..len)
                .map(|j| {
                    self.ty
                        .source
                        .range(i)
                        .map(|c| MPoly::linear(&vars.iter().map(|&r| self.coef[r][c][j].clone()).collect::<Vec<_>>()))
                        .collect()
                })
                .collect();
            let width = self.ty.source.range(i).len();
            forms.extend(rank_at_most(&mat, width - a as usize)?);
        }
        Some(forms)
    }

    /// Determinantal conditions on the normal vector `w` of a hyperplane of source type `i`,
    /// the other source types in `full` being taken whole.
    fn column_hyperplane_pencil(&self, i: usize, full: &[usize], need_rows: &[u32]) -> Option<Vec<MPoly>> {
        let span: Vec<usize> = self.ty.source.range(i).collect();
        let mut forms = Vec::new();
        for (l, &b) in need_rows.iter().enumerate().filter(|(_, &b)| b > 0) {
            let rows: Vec<usize> = self.ty.target.range(l).collect();
            let fixed: Vec<Vec<Q>> = rows
                .iter()
                .map(|&r| {
                    full.iter()
                        .flat_map(|&f| self.ty.source.range(f).flat_map(move |c| self.coef[r][c].iter().cloned()))
                        .collect()
                })
                .collect();
            let basis = left_null_space(&fixed, rows.len());
            if basis.len() < b as usize {
                return Some(every_variable(span.len()));
            }
            let mat: Vec<Vec<MPoly>> = basis
                .iter()
                .map(|y| {
                    let pull =
                        |c: usize, j: usize| -> Q { rows.iter().zip(y).map(|(&r, x)| &self.coef[r][c][j] * x).sum() };
                    wedge_entries(&span, self.slice_len(i, l), pull)
                })
                .collect();
            forms.extend(rank_at_most(&mat, basis.len() - b as usize)?);
        }
        Some(forms)
    }

    /// Row-side counterpart of `column_hyperplane_pencil`.
    fn row_hyperplane_pencil(&self, l: usize, full: &[usize], need_cols: &[u32]) -> Option<Vec<MPoly>> {
        let span: Vec<usize> = self.ty.target.range(l).collect();
        let mut forms = Vec::new();
        for (i, &a) in need_cols.iter().enumerate().filter(|(_, &a)| a > 0) {
            let cols: Vec<usize> = self.ty.source.range(i).collect();
            let mut fixed: Vec<Vec<Q>> = Vec::new();
            for &f in full {
                for r in self.ty.target.range(f) {
                    for j in 0..self.slice_len(i, f) {
                        fixed.push(cols.iter().map(|&c| self.coef[r][c][j].clone()).collect());
                    }
                }
            }
            let basis = null_space(&fixed, cols.len());
            if basis.len() < a as usize {
                return Some(every_variable(span.len()));
            }
            let mat: Vec<Vec<MPoly>> = basis
                .iter()
                .map(|k| {
                    let push =
                        |r: usize, j: usize| -> Q { cols.iter().zip(k).map(|(&c, x)| &self.coef[r][c][j] * x).sum() };
                    wedge_entries(&span, self.slice_len(i, l), push)
                })
                .collect();
            forms.extend(rank_at_most(&mat, basis.len() - a as usize)?);
        }
        Some(forms)
    }
}

/// Entries of `v_j ^ w` for every coefficient slice `j`, linear in the unknown `w`,
/// where `v_j[a] = value(span[a], j)`.
fn wedge_entries(span: &[usize], slices: usize, value: impl Fn(usize, usize) -> Q) -> Vec<MPoly> {
    let n = span.len();
    let mut out = Vec::new();
    for j in 0..slices {
        let v: Vec<Q> = span.iter().map(|&s| value(s, j)).collect();
        for a in 0..n {
            for b in a + 1..n {
                let mut lin = vec![Q::zero(); n];
                lin[b] = v[a].clone();
                lin[a] = -v[b].clone();
                out.push(MPoly::linear(&lin));
            }
        }
    }
    out
}

/// Forms with no common projective zero, standing for an impossible condition.
fn every_variable(n: usize) -> Vec<MPoly> {
    (0..n).map(|k| MPoly::linear(&unit(n, k))).collect()
}

/// Minors of size `bound + 1`; `None` when there would be too many to handle.
fn rank_at_most(mat: &[Vec<MPoly>], bound: usize) -> Option<Vec<MPoly>> {
    let size = bound + 1;
    let mat = distinct_columns(mat);
    let (nr, nc) = (mat.len(), mat.first().map_or(0, Vec::len));
    if size > nr || size > nc {
        return Some(Vec::new());
    }
    let row_sets = ring::subsets(nr, size);
    let col_sets = ring::subsets(nc, size);
    if row_sets.len() * col_sets.len() > MAX_MINORS {
        return None;
    }
    let mut out = Vec::new();
    for rs in &row_sets {
        for cs in &col_sets {
            let d = ring::determinant(&ring::submatrix(&mat, rs, cs));
            if !d.is_zero() {
                out.push(d);
            }
        }
    }
    Some(out)
}

/// Drops zero columns and constant multiples of earlier columns; the rank at every point is unchanged.
fn distinct_columns(mat: &[Vec<MPoly>]) -> Vec<Vec<MPoly>> {
    let nc = mat.first().map_or(0, Vec::len);
    let mut kept: Vec<Vec<MPoly>> = Vec::new();
    for c in 0..nc {
        let Some(lead) = mat.iter().find_map(|row| row[c].leading_coefficient()) else { continue };
        let inv = lead.recip();
        let col: Vec<MPoly> = mat.iter().map(|row| row[c].scale(&inv)).collect();
        if !kept.contains(&col) {
            kept.push(col);
        }
    }
    (0..mat.len()).map(|r| kept.iter().map(|col| col[r].clone()).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Freedom {
    Fixed,
    Single(usize),
    /// One type short of full by exactly one vector, all others empty or full.
    Hyperplane(usize),
    Multi,
}

fn freedom(counts: &[u32], mults: &[u32]) -> Freedom {
    if counts.iter().zip(mults).all(|(c, m)| *c == 0 || c == m) {
        return Freedom::Fixed;
    }
    if counts.iter().sum::<u32>() == 1 {
        return Freedom::Single(counts.iter().position(|&c| c == 1).expect("one vector"));
    }
    let partial: Vec<usize> = (0..counts.len()).filter(|&t| counts[t] != 0 && counts[t] != mults[t]).collect();
    if let [t] = partial[..] {
        if counts[t] + 1 == mults[t] {
            return Freedom::Hyperplane(t);
        }
    }
    Freedom::Multi
}

fn full_units(counts: &[u32], sum: &BundleSum) -> Vec<Vec<Q>> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .flat_map(|(t, _)| sum.range(t).map(|k| unit(sum.rank(), k)))
        .collect()
}

fn full_types(counts: &[u32], mults: &[u32], skip: usize) -> Vec<usize> {
    (0..counts.len()).filter(|&t| t != skip && counts[t] > 0 && counts[t] == mults[t]).collect()
}

/// A rational common zero of the forms, found by rational roots on a line or small search.
fn rational_zero(forms: &[MPoly], n: usize) -> Option<Vec<Q>> {
    let vanish = |x: &[Q]| forms.iter().all(|f| f.eval(x).is_zero());
    if forms.iter().all(|f| f.degree() == Some(1)) {
        let rows: Vec<Vec<Q>> = forms.iter().map(|f| f.coefficient_vector(n, 1)).collect();
        return null_space(&rows, n).into_iter().next();
    }
    if n == 2 {
        let tail = vec![Q::zero(), Q::one()];
        if vanish(&[Q::one(), Q::zero()]) {
            return Some(vec![Q::one(), Q::zero()]);
        }
        let g =
            forms.iter().map(MPoly::univariate_in_first).fold(crate::upoly::UPoly::new(Vec::new()), |a, b| a.gcd(&b));
        if g.degree().is_none() {
            return Some(tail);
        }
        return g.rational_roots().into_iter().next().map(|t| vec![t, Q::one()]);
    }
    let span = 5i64.pow(n as u32);
    (1..span)
        .map(|code| (0..n).map(|k| q((code / 5i64.pow(k as u32)) % 5 - 2)).collect::<Vec<Q>>())
        .find(|x| x.iter().any(|v| !v.is_zero()) && vanish(x))
}

/// Single-shape decision engine with a seeded search behind the exact tests.
struct Searcher<'a> {
    m: &'a PolyMatrix,
    slices: Slices<'a>,
}

impl<'a> Searcher<'a> {
    fn new(m: &'a PolyMatrix) -> Self {
        Self { m, slices: Slices::new(m) }
    }

    fn finish(&self, shape: &Shape, rows: Vec<Vec<Q>>, cols: Vec<Vec<Q>>) -> BlockDecision {
        let w = Witness { shape: shape.clone(), rows, cols };
        if w.verify(self.m) {
            BlockDecision::Found(w)
        } else {
            BlockDecision::Unknown
        }
    }

    fn pencil(
        &self,
        shape: &Shape,
        forms: Option<Vec<MPoly>>,
        n: usize,
        lift: impl Fn(&[Q]) -> BlockDecision,
    ) -> BlockDecision {
        let Some(forms) = forms else { return BlockDecision::Unknown };
        if forms.is_empty() {
            return lift(&unit(n, 0));
        }
        let d = forms.iter().filter_map(MPoly::degree).max().expect("nonzero forms");
        let padded: Vec<MPoly> = forms
            .iter()
            .flat_map(|f| {
                let e = d - f.degree().expect("nonzero");
                crate::mpoly::monomials(n, e).into_iter().map(move |mono| {
                    let mut shift = MPoly::one();
                    for (k, &p) in mono.iter().enumerate() {
                        for _ in 0..p {
                            shift = shift.mul(&MPoly::linear(&unit(k + 1, k)));
                        }
                    }
                    shift.mul(f)
                })
            })
            .collect();
        match no_common_zero(&padded, n, d, MAX_MACAULAY_COLS) {
            None => BlockDecision::Unknown,
            Some(true) => BlockDecision::Absent,
            Some(false) => match rational_zero(&forms, n) {
                Some(x) => match lift(&x) {
                    BlockDecision::Found(w) => BlockDecision::Found(w),
                    _ => BlockDecision::Algebraic,
                },
                None => {
                    let _ = shape;
                    BlockDecision::Algebraic
                }
            },
        }
    }

    fn decide_exact(&self, shape: &Shape) -> BlockDecision {
        let t = self.m.ty();
        let (nt, ns) = (t.target.mults(), t.source.mults());
        match (freedom(&shape.cols, &ns), freedom(&shape.rows, &nt)) {
            (Freedom::Fixed, _) => {
                let cols = full_units(&shape.cols, &t.source);
                match self.slices.rows_for(&cols, &shape.rows) {
                    Some(rows) => self.finish(shape, rows, cols),
                    None => BlockDecision::Absent,
                }
            }
            (_, Freedom::Fixed) => {
                let rows = full_units(&shape.rows, &t.target);
                match self.slices.cols_for(&rows, &shape.cols) {
                    Some(cols) => self.finish(shape, rows, cols),
                    None => BlockDecision::Absent,
                }
            }
            (Freedom::Single(i), _) => {
                let range = t.source.range(i);
                let forms = self.slices.column_pencil(i, &shape.rows);
                self.pencil(shape, forms, range.len(), |x| {
                    let k = embed(x, t.cols(), range.start);
                    match self.slices.rows_for(std::slice::from_ref(&k), &shape.rows) {
                        Some(rows) => self.finish(shape, rows, vec![k]),
                        None => BlockDecision::Unknown,
                    }
                })
            }
            (_, Freedom::Single(l)) => {
                let range = t.target.range(l);
                let forms = self.slices.row_pencil(l, &shape.cols);
                self.pencil(shape, forms, range.len(), |x| {
                    let u = embed(x, t.rows(), range.start);
                    match self.slices.cols_for(std::slice::from_ref(&u), &shape.cols) {
                        Some(cols) => self.finish(shape, vec![u], cols),
                        None => BlockDecision::Unknown,
                    }
                })
            }
            (Freedom::Hyperplane(i), _) => {
                let range = t.source.range(i);
                let full = full_types(&shape.cols, &ns, i);
                let forms = self.slices.column_hyperplane_pencil(i, &full, &shape.rows);
                self.pencil(shape, forms, range.len(), |w| {
                    let mut cols: Vec<Vec<Q>> = null_space(&[w.to_vec()], range.len())
                        .iter()
                        .map(|k| embed(k, t.cols(), range.start))
                        .collect();
                    cols.extend(full.iter().flat_map(|&f| t.source.range(f)).map(|c| unit(t.cols(), c)));
                    match self.slices.rows_for(&cols, &shape.rows) {
                        Some(rows) => self.finish(shape, rows, cols),
                        None => BlockDecision::Unknown,
                    }
                })
            }
            (_, Freedom::Hyperplane(l)) => {
                let range = t.target.range(l);
                let full = full_types(&shape.rows, &nt, l);
                let forms = self.slices.row_hyperplane_pencil(l, &full, &shape.cols);
                self.pencil(shape, forms, range.len(), |v| {
                    let mut rows: Vec<Vec<Q>> = null_space(&[v.to_vec()], range.len())
                        .iter()
                        .map(|u| embed(u, t.rows(), range.start))
                        .collect();
                    rows.extend(full.iter().flat_map(|&f| t.target.range(f)).map(|r| unit(t.rows(), r)));
                    match self.slices.cols_for(&rows, &shape.cols) {
                        Some(cols) => self.finish(shape, rows, cols),
                        None => BlockDecision::Unknown,
                    }
                })
            }
            _ => BlockDecision::Unknown,
        }
    }

    /// Random small-integer subspaces on the cheaper side, screened modulo a prime.
    fn random_search(&self, shape: &Shape, trials: u64, rng: &mut ChaCha8Rng) -> (Option<Witness>, u64) {
        let t = self.m.ty();
        let cost = |counts: &[u32], mults: &[u32]| counts.iter().zip(mults).map(|(c, m)| c * (m - c)).sum::<u32>();
        let sample_cols = cost(&shape.cols, &t.source.mults()) <= cost(&shape.rows, &t.target.mults());
        let (counts, sum) = if sample_cols { (&shape.cols, &t.source) } else { (&shape.rows, &t.target) };
        for trial in 0..trials {
            let vecs = sample_subspaces(counts, sum, rng);
            let ints_ok = {
                let as_q: Vec<Vec<Q>> = vecs.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect();
                counts_match(&as_q, sum, counts)
            };
            if !ints_ok {
                continue;
            }
            let pi = (trial % PRIMES.len() as u64) as usize;
            let screen = if sample_cols {
                self.slices.rows_possible_mod(&vecs, &shape.rows, pi)
            } else {
                self.slices.cols_possible_mod(&vecs, &shape.cols, pi)
            };
            if !screen {
                continue;
            }
            let exact: Vec<Vec<Q>> = vecs.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect();
            let found = if sample_cols {
                self.slices.rows_for(&exact, &shape.rows).map(|rows| (rows, exact))
            } else {
                self.slices.cols_for(&exact, &shape.cols).map(|cols| (exact, cols))
            };
            if let Some((rows, cols)) = found {
                if let BlockDecision::Found(w) = self.finish(shape, rows, cols) {
                    return (Some(w), trial + 1);
                }
            }
        }
        (None, trials)
    }
}

fn sample_subspaces(counts: &[u32], sum: &BundleSum, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for (k, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
        let range = sum.range(k);
        let full = c as usize == range.len();
        let sparse = full || rng.gen_bool(0.3);
        let mut picks: Vec<usize> = range.clone().collect();
        if sparse && !full {
            for j in (1..picks.len()).rev() {
                picks.swap(j, rng.gen_range(0..=j));
            }
        }
        for v in 0..c as usize {
            let mut vec = vec![0i64; sum.rank()];
            if sparse {
                vec[picks[v]] = 1;
            } else {
                for x in &mut vec[range.clone()] {
                    *x = rng.gen_range(-3..=3);
                }
            }
            if vec.iter().all(|&x| x == 0) {
                vec[range.start] = 1;
            }
            out.push(vec);
        }
    }
    out
}

/// Destabilizing shapes with no destabilizing proper sub-shape, in enumeration order.
pub fn minimal_destabilizing(t: &MorphismType, p: &Polarization) -> Vec<Shape> {
    let bad: Vec<Shape> = enumerate_shapes(t).into_iter().filter(|s| shape_margin(s, t).eval(p) > Q::zero()).collect();
    bad.iter().filter(|s| !bad.iter().any(|o| o != *s && o.within(s))).cloned().collect()
}

/// Decides whether a zero block of exactly this shape can be produced by constant
/// transformations within summand types, using only the exact tests.
pub fn decide_shape(m: &PolyMatrix, shape: &Shape) -> BlockDecision {
    Searcher::new(m).decide_exact(shape)
}

fn distributions(total: u32, mults: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &m in mults {
        out = out.into_iter().flat_map(|v: Vec<u32>| (0..=m).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out.retain(|v| v.iter().sum::<u32>() == total);
    out
}

fn first_of(m: &PolyMatrix, shapes: impl IntoIterator<Item = Shape>) -> BlockDecision {
    let searcher = Searcher::new(m);
    let mut best = BlockDecision::Absent;
    for s in shapes {
        match searcher.decide_exact(&s) {
            BlockDecision::Found(w) => return BlockDecision::Found(w),
            BlockDecision::Algebraic => best = BlockDecision::Algebraic,
            BlockDecision::Unknown if best == BlockDecision::Absent => best = BlockDecision::Unknown,
            _ => {}
        }
    }
    best
}

/// One column vector inside a source type and `p` independent row combinations annihilating it.
pub fn zero_block_exists_col1(m: &PolyMatrix, p: u32) -> BlockDecision {
    let t = m.ty();
    let (nt, ns) = (t.target.mults(), t.source.mults());
    let shapes = (0..ns.len()).flat_map(|i| {
        let cols: Vec<u32> = (0..ns.len()).map(|k| u32::from(k == i)).collect();
        distributions(p, &nt).into_iter().map(move |rows| Shape::new(rows, cols.clone()))
    });
    first_of(m, shapes.collect::<Vec<_>>())
}

/// One row vector inside a target type and `q` independent column combinations it annihilates.
pub fn zero_block_exists_row1(m: &PolyMatrix, q_cols: u32) -> BlockDecision {
    let t = m.ty();
    let (nt, ns) = (t.target.mults(), t.source.mults());
    let shapes = (0..nt.len()).flat_map(|l| {
        let rows: Vec<u32> = (0..nt.len()).map(|k| u32::from(k == l)).collect();
        distributions(q_cols, &ns).into_iter().map(move |cols| Shape::new(rows.clone(), cols))
    });
    first_of(m, shapes.collect::<Vec<_>>())
}

/// Looks for a zero block of some destabilizing shape under `p`.
///
/// Only minimal destabilizing shapes are examined, in enumeration order; each gets the exact
/// tests and, failing those, up to `budget` random trials seeded from `seed` and the shape index.
pub fn search_destabilizer(m: &PolyMatrix, p: &Polarization, budget: u64, seed: u64) -> Verdict {
    let searcher = Searcher::new(m);
    let mut undecided = Vec::new();
    let mut trials = 0;
    for (idx, shape) in minimal_destabilizing(m.ty(), p).into_iter().enumerate() {
        match searcher.decide_exact(&shape) {
            BlockDecision::Found(w) => {
                return Verdict {
                    kind: VerdictKind::Destabilized,
                    shape: Some(shape),
                    witness: Some(w),
                    undecided,
                    trials,
                };
            }
            BlockDecision::Algebraic => {
                return Verdict {
                    kind: VerdictKind::Destabilized,
                    shape: Some(shape),
                    witness: None,
                    undecided,
                    trials,
                };
            }
            BlockDecision::Absent => {}
            BlockDecision::Unknown => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let (found, used) = searcher.random_search(&shape, budget, &mut rng);
                trials += used;
                if let Some(w) = found {
                    return Verdict {
                        kind: VerdictKind::Destabilized,
                        shape: Some(shape),
                        witness: Some(w),
                        undecided,
                        trials,
                    };
                }
                undecided.push(shape);
            }
        }
    }
    let kind = if undecided.is_empty() { VerdictKind::CertifiedSemistable } else { VerdictKind::Undetermined };
    Verdict { kind, witness: None, shape: None, undecided, trials }
}

/// Classes of 3x3 matrices of linear forms up to constant row and column operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KoszulClass {
    /// Equivalent to the Koszul matrix; carries the primitive right kernel vector.
    Koszul(Vec<HomogeneousPoly>),
    Degenerate,
    FullRankDet,
    Other,
}

fn primitive(v: Vec<HomogeneousPoly>) -> Vec<HomogeneousPoly> {
    let g = poly_gcd_all(v.iter()).expect("nonzero vector");
    let mut out: Vec<HomogeneousPoly> = v.iter().map(|f| f.exact_div(&g).expect("gcd divides")).collect();
    let lead = out.iter().find(|f| !f.is_zero()).and_then(|f| f.leading().map(|(_, c)| c.clone())).expect("nonzero");
    if lead < Q::zero() {
        out = out.iter().map(HomogeneousPoly::neg).collect();
    }
    out
}

fn kernel_degenerate(v: &[HomogeneousPoly]) -> Option<bool> {
    let deg = v.iter().filter_map(HomogeneousPoly::degree).max()?;
    let nonzero: Vec<HomogeneousPoly> = v.iter().filter(|f| !f.is_zero()).cloned().collect();
    let span = linearly_independent(&nonzero).map(|(_, r)| r).unwrap_or(0);
    Some(deg == 0 || (deg == 1 && span < 3))
}

/// Sorts a 3x3 matrix of linear forms into the classes of the 3x3 normal-form list.
pub fn koszul_test(entries: &[Vec<HomogeneousPoly>]) -> KoszulClass {
    let det = ring::determinant(entries);
    if !det.is_zero() {
        return KoszulClass::FullRankDet;
    }
    let cof = |r: usize, c: usize| {
        let rs: Vec<usize> = (0..3).filter(|&k| k != r).collect();
        let cs: Vec<usize> = (0..3).filter(|&k| k != c).collect();
        let d = ring::determinant(&ring::submatrix(entries, &rs, &cs));
        if (r + c) % 2 == 1 {
            d.neg()
        } else {
            d
        }
    };
    let right = (0..3).map(|r| (0..3).map(|c| cof(r, c)).collect::<Vec<_>>()).find(|v| v.iter().any(|f| !f.is_zero()));
    let left = (0..3).map(|c| (0..3).map(|r| cof(r, c)).collect::<Vec<_>>()).find(|v| v.iter().any(|f| !f.is_zero()));
    let (Some(right), Some(left)) = (right, left) else { return KoszulClass::Degenerate };
    let (right, left) = (primitive(right), primitive(left));
    let (Some(rd), Some(ld)) = (kernel_degenerate(&right), kernel_degenerate(&left)) else {
        return KoszulClass::Degenerate;
    };
    if rd || ld {
        return KoszulClass::Degenerate;
    }
    let deg = |v: &[HomogeneousPoly]| v.iter().filter_map(HomogeneousPoly::degree).max();
    if deg(&right) == Some(1) && deg(&left) == Some(1) {
        KoszulClass::Koszul(right)
    } else {
        KoszulClass::Other
    }
}

/// Open conditions a morphism of a given case must satisfy besides semistability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Requirement {
    NonzeroDet,
    /// The block from the first source type to the first target type has entries spanning
    /// at least two dimensions of linear forms.
    Phi11Rank2,
    /// The 3x3 block from the last source type to the last target type is Koszul.
    KoszulPhi22,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonzeroDet => "nonzero-det",
            Self::Phi11Rank2 => "phi11-rank2",
            Self::KoszulPhi22 => "koszul-phi22",
        })
    }
}

fn block(m: &PolyMatrix, i: usize, l: usize) -> Vec<Vec<HomogeneousPoly>> {
    let t = m.ty();
    t.target.range(l).map(|r| t.source.range(i).map(|c| m.entry(r, c).clone()).collect()).collect()
}

/// Evaluates one requirement; `false` also covers inapplicable shapes.
pub fn requirement_holds(m: &PolyMatrix, req: Requirement) -> bool {
    let t = m.ty();
    match req {
        Requirement::NonzeroDet => determinant(m).map(|d| !d.is_zero()).unwrap_or(false),
        Requirement::Phi11Rank2 => {
            let forms: Vec<HomogeneousPoly> = block(m, 0, 0).into_iter().flatten().filter(|f| !f.is_zero()).collect();
            linearly_independent(&forms).map(|(_, r)| r >= 2).unwrap_or(false)
        }
        Requirement::KoszulPhi22 => {
            let b = block(m, t.source.len() - 1, t.target.len() - 1);
            b.len() == 3 && b[0].len() == 3 && matches!(koszul_test(&b), KoszulClass::Koszul(_))
        }
    }
}

/// Nonzero entries inside blocks the type forces to vanish, as 0-based (row, col).
pub fn zeroed_violations(m: &PolyMatrix, t: &MorphismType) -> Vec<(usize, usize)> {
    let (rk, ck) = (t.target.kinds(), t.source.kinds());
    rk.iter()
        .enumerate()
        .flat_map(|(r, &l)| ck.iter().enumerate().map(move |(c, &i)| (r, c, i, l)))
        .filter(|&(r, c, i, l)| t.is_zeroed(i, l) && !m.entry(r, c).is_zero())
        .map(|(r, c, _, _)| (r, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::frac;
    use proptest::prelude::*;
    use rand::Rng;

    fn mat(s: &str) -> PolyMatrix {
        s.parse().unwrap()
    }

    fn psi1() -> Vec<Vec<HomogeneousPoly>> {
        mat("type: src=(-1)x3 tgt=(0)x3\nX | Y | 0\nZ | 0 | Y\n0 | -Z | X\n").entries().to_vec()
    }

    #[test]
    fn single_column_blocks() {
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | X\nY | Y\n");
        let BlockDecision::Found(w) = zero_block_exists_col1(&m, 2) else { panic!() };
        assert!(w.verify(&m));
        assert_eq!(w.cols, vec![vec![q(-1), q(1)]]);
        // Rows differ by a sign after swapping columns, so (1,-1) and the row sum give a zero.
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | Y\nY | X\n");
        assert!(matches!(zero_block_exists_col1(&m, 1), BlockDecision::Found(_)));
        assert_eq!(zero_block_exists_col1(&m, 2), BlockDecision::Absent);
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | Y\nZ | X\n");
        assert_eq!(zero_block_exists_col1(&m, 1), BlockDecision::Absent);
    }

    #[test]
    fn single_row_blocks() {
        let m = mat("type: src=(-1)x3 tgt=(0)x3\n0 | 0 | X\n0 | 0 | Y\nX | Y | Z\n");
        let BlockDecision::Found(w) = zero_block_exists_row1(&m, 2) else { panic!() };
        assert!(w.verify(&m));
        let m = PolyMatrix::new("src=(-1)x3 tgt=(0)x3".parse().unwrap(), psi1()).unwrap();
        assert_eq!(zero_block_exists_row1(&m, 2), BlockDecision::Absent);
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | Y\n0 | 0\n");
        assert!(matches!(zero_block_exists_row1(&m, 2), BlockDecision::Found(_)));
    }

    #[test]
    fn hyperplane_blocks() {
        let shape: Shape = "rows=(2) cols=(2)".parse().unwrap();
        let m = mat("type: src=(-1)x3 tgt=(0)x3\nX | Y | X + Z\n0 | 0 | Y\nX | Y | Z\n");
        let BlockDecision::Found(w) = decide_shape(&m, &shape) else { panic!() };
        assert!(w.verify(&m));
        let m = PolyMatrix::new("src=(-1)x3 tgt=(0)x3".parse().unwrap(), psi1()).unwrap();
        assert_eq!(decide_shape(&m, &shape), BlockDecision::Absent);
    }

    #[test]
    fn irrational_zero_blocks_count() {
        // Column (t,1) with t^2 = 2 makes both entries proportional to the same row combination.
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | 2*Y\nY | X\n");
        assert_eq!(zero_block_exists_col1(&m, 1), BlockDecision::Algebraic);
    }

    #[test]
    fn koszul_classes() {
        match koszul_test(&psi1()) {
            KoszulClass::Koszul(v) => {
                let shown: Vec<String> = v.iter().map(ToString::to_string).collect();
                assert_eq!(shown, ["Y", "-X", "-Z"]);
            }
            other => panic!("{other:?}"),
        }
        let degenerate = mat("type: src=(-1)x3 tgt=(0)x3\nX | Y | 0\n0 | 0 | X\n0 | 0 | Y\n");
        assert_eq!(koszul_test(degenerate.entries()), KoszulClass::Degenerate);
        let full = mat("type: src=(-1)x3 tgt=(0)x3\nX | 0 | 0\n0 | Y | 0\n0 | 0 | Z\n");
        assert_eq!(koszul_test(full.entries()), KoszulClass::FullRankDet);
    }

    #[test]
    fn padded_literal_block_destabilizes() {
        let m = mat("type: src=(-1)x3 tgt=(0)x2\nX | Y | 0\n0 | X | 0\n");
        let p = Polarization::new(m.ty(), vec![frac(1, 3)], vec![frac(1, 2)]).unwrap();
        let v = search_destabilizer(&m, &p, 100, 7);
        assert_eq!(v.kind, VerdictKind::Destabilized);
        assert!(v.witness.unwrap().verify(&m));
    }

    #[test]
    fn semistable_with_zero_determinant() {
        let m = mat("type: src=(-2)x2 tgt=(0)x2\nX*Y | X*Z\nY^2 | Y*Z\n");
        let p = Polarization::new(m.ty(), vec![frac(1, 2)], vec![frac(1, 2)]).unwrap();
        let v = search_destabilizer(&m, &p, 0, 0);
        assert_eq!(v.kind, VerdictKind::CertifiedSemistable);
        assert!(!requirement_holds(&m, Requirement::NonzeroDet));
    }

    fn random_invertible(seed: u64) -> Vec<Vec<Q>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let g: Vec<Vec<Q>> = (0..3).map(|_| (0..3).map(|_| q(rng.gen_range(-3..=3))).collect()).collect();
            if rank(&g) == 3 {
                return g;
            }
        }
    }

    fn conj(g: &[Vec<Q>], m: &[Vec<HomogeneousPoly>], h: &[Vec<Q>]) -> Vec<Vec<HomogeneousPoly>> {
        (0..3)
            .map(|r| {
                (0..3)
                    .map(|c| {
                        let mut acc = HomogeneousPoly::zero();
                        for a in 0..3 {
                            for b in 0..3 {
                                acc = acc.add(&m[a][b].scale(&(&g[r][a] * &h[b][c])));
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn koszul_orbit_is_stable(seed in any::<u64>()) {
            let g = random_invertible(seed);
            let h = random_invertible(seed.wrapping_add(1));
            prop_assert!(matches!(koszul_test(&conj(&g, &psi1(), &h)), KoszulClass::Koszul(_)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        /// A literal zero block of a destabilizing shape never yields a semistable certificate.
        #[test]
        fn planted_blocks_are_never_certified(
            seed in any::<u64>(),
            rows in 1usize..=3,
            cols in 1usize..=3,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let forms = [HomogeneousPoly::x(), HomogeneousPoly::y(), HomogeneousPoly::z()];
            let entries: Vec<Vec<HomogeneousPoly>> = (0..3)
                .map(|r| {
                    (0..3)
                        .map(|c| {
                            if r < rows && c < cols {
                                HomogeneousPoly::zero()
                            } else {
                                let mut f = HomogeneousPoly::zero();
                                for v in &forms {
                                    f = f.add(&v.scale(&q(rng.gen_range(-2..=2))));
                                }
                                f
                            }
                        })
                        .collect()
                })
                .collect();
            let m = PolyMatrix::new("src=(-1)x3 tgt=(0)x3".parse().unwrap(), entries).unwrap();
            let p = Polarization::new(m.ty(), vec![frac(1, 3)], vec![frac(1, 3)]).unwrap();
            let planted = Shape::new(vec![rows as u32], vec![cols as u32]);
            if shape_margin(&planted, m.ty()).eval(&p) > Q::zero() {
                let v = search_destabilizer(&m, &p, 50, seed);
                prop_assert_ne!(v.kind, VerdictKind::CertifiedSemistable);
                if let Some(w) = v.witness {
                    prop_assert!(w.verify(&m));
                }
            }
        }
    }
}
