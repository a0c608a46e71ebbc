//! Matrices of forms typed by a morphism type: determinants, maximal minors,
//! the gcd-of-minors kernel line, and explicit section constructions.

use crate::bundle::{BundleSum, MorphismType, TypeError};
use crate::poly::{poly_gcd_all, HomogeneousPoly, PolyError};
use crate::rat::{rank, Q};
use crate::ring::{determinant as ring_det, submatrix, subsets, Ring};
use num_traits::{One, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}, column {col}: {msg}")]
    Entry { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("expected a {rows}x{cols} grid")]
    Shape { rows: usize, cols: usize },
    #[error("entry ({row},{col}) has degree {found}, expected {expected}")]
    Degree { row: usize, col: usize, found: u32, expected: String },
    #[error("entry ({row},{col}) lies in a zeroed block but is nonzero")]
    ZeroedBlock { row: usize, col: usize },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("forms have mixed degrees")]
    MixedDegrees,
    #[error("{0}")]
    Precondition(String),
}

/// A morphism of the given type, as a grid of forms (rows = target, columns = source).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    ty: MorphismType,
    entries: Vec<Vec<HomogeneousPoly>>,
}

impl PolyMatrix {
    pub fn new(ty: MorphismType, entries: Vec<Vec<HomogeneousPoly>>) -> Result<Self, MatrixError> {
        let (rows, cols) = (ty.rows(), ty.cols());
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::Shape { rows, cols });
        }
        let row_kind = ty.target.kinds();
        let col_kind = ty.source.kinds();
        for (r, row) in entries.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                let Some(found) = e.degree() else { continue };
                let (i, l) = (col_kind[c], row_kind[r]);
                if ty.is_zeroed(i, l) {
                    return Err(MatrixError::ZeroedBlock { row: r + 1, col: c + 1 });
                }
                match ty.block_degree(i, l) {
                    Some(d) if d == found => {}
                    other => {
                        return Err(MatrixError::Degree {
                            row: r + 1,
                            col: c + 1,
                            found,
                            expected: other.map_or("zero".into(), |d| d.to_string()),
                        })
                    }
                }
            }
        }
        Ok(Self { ty, entries })
    }

    pub fn ty(&self) -> &MorphismType {
        &self.ty
    }

    pub fn entries(&self) -> &[Vec<HomogeneousPoly>] {
        &self.entries
    }

    pub fn entry(&self, r: usize, c: usize) -> &HomogeneousPoly {
        &self.entries[r][c]
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.ty.cols()
    }

    /// `U * M * K` for constant matrices `U` (rows given as vectors) and `K` (columns given as vectors).
    pub fn transform(&self, row_vecs: &[Vec<Q>], col_vecs: &[Vec<Q>]) -> Vec<Vec<HomogeneousPoly>> {
        row_vecs
            .iter()
            .map(|u| {
                col_vecs
                    .iter()
                    .map(|k| {
                        let mut acc = HomogeneousPoly::zero();
                        for (r, ur) in u.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                            for (c, kc) in k.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                                acc = acc.add(&self.entries[r][c].scale(&(ur * kc)));
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "type: {}", self.ty)?;
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(HomogeneousPoly::to_string).collect();
            writeln!(f, "{}", cells.join(" | "))?;
        }
        Ok(())
    }
}

impl FromStr for PolyMatrix {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, MatrixError> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, head) = lines.next().ok_or(MatrixError::Parse { line: 1, msg: "missing type line".into() })?;
        let spec = head
            .trim()
            .strip_prefix("type:")
            .ok_or(MatrixError::Parse { line: 1, msg: "first line must start with `type:`".into() })?;
        let ty: MorphismType = spec.trim().parse()?;
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let mut row = Vec::new();
            let mut col = 1;
            for cell in line.split('|') {
                let e = cell.parse::<HomogeneousPoly>().map_err(|e| {
                    let (c, msg) = match e {
                        PolyError::Parse { col: c, msg } => (col + c - 1, msg),
                        other => (col, other.to_string()),
                    };
                    MatrixError::Entry { line: idx + 1, col: c, msg }
                })?;
                col += cell.chars().count() + 1;
                row.push(e);
            }
            entries.push(row);
        }
        Self::new(ty, entries)
    }
}

/// Exact determinant of a square matrix of forms.
pub fn determinant(m: &PolyMatrix) -> Result<HomogeneousPoly, MatrixError> {
    if m.rows() != m.cols() {
        return Err(MatrixError::NotSquare(m.rows(), m.cols()));
    }
    Ok(ring_det(m.entries()))
}

/// All maximal minors.
///
/// Wide matrices list minors by deleted column set in lexicographic order, so a
/// `k x (k+1)` matrix yields the minor omitting column 1 first. Tall matrices list
/// minors by kept row set in lexicographic order.
pub fn maximal_minors(m: &PolyMatrix) -> Vec<HomogeneousPoly> {
    minors_of(m.entries(), m.rows(), m.cols())
}

fn minors_of(e: &[Vec<HomogeneousPoly>], rows: usize, cols: usize) -> Vec<HomogeneousPoly> {
    let all_rows: Vec<usize> = (0..rows).collect();
    let all_cols: Vec<usize> = (0..cols).collect();
    if rows <= cols {
        subsets(cols, cols - rows)
            .into_iter()
            .map(|deleted| {
                let kept: Vec<usize> = all_cols.iter().copied().filter(|c| !deleted.contains(c)).collect();
                ring_det(&submatrix(e, &all_rows, &kept))
            })
            .collect()
    } else {
        subsets(rows, cols).into_iter().map(|kept| ring_det(&submatrix(e, &kept, &all_cols))).collect()
    }
}

/// Primitive generator of the kernel of a `k x (k+1)` matrix of forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelLine {
    pub beta: Vec<HomogeneousPoly>,
    /// Degree of the entries, measured in a column of the lowest source twist.
    pub degree: u32,
    /// The kernel is `O(twist)`.
    pub twist: i64,
}

impl fmt::Display for KernelLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.beta.iter().map(HomogeneousPoly::to_string).collect();
        write!(f, "({}), d={}", cells.join(" | "), self.degree)
    }
}

/// `beta_i = (-1)^i * minor_i / gcd` (0-based), or `None` when every maximal minor vanishes.
pub fn kernel_line(m: &PolyMatrix) -> Result<Option<KernelLine>, MatrixError> {
    if m.cols() != m.rows() + 1 {
        return Err(MatrixError::Precondition(format!(
            "kernel line needs a k x (k+1) matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let minors = maximal_minors(m);
    let Some(g) = poly_gcd_all(&minors) else {
        return Ok(None);
    };
    let beta: Vec<HomogeneousPoly> = minors
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let b = a.exact_div(&g).expect("gcd divides every minor");
            if i % 2 == 1 {
                b.neg()
            } else {
                b
            }
        })
        .collect();
    let twists: Vec<i64> = m.ty.source.kinds().iter().map(|&i| m.ty.source.summands()[i].twist).collect();
    let (j, deg) =
        beta.iter().enumerate().find_map(|(j, b)| b.degree().map(|d| (j, d))).expect("some minor is nonzero");
    let twist = twists[j] - deg as i64;
    let lowest = *twists.iter().min().expect("nonempty source");
    Ok(Some(KernelLine { beta, degree: (lowest - twist) as u32, twist }))
}

/// Rank of the coefficient matrix of forms of a common degree.
pub fn linearly_independent(forms: &[HomogeneousPoly]) -> Result<(bool, usize), MatrixError> {
    let mut degs = forms.iter().filter_map(HomogeneousPoly::degree);
    let d = degs.next();
    if degs.any(|x| Some(x) != d) {
        return Err(MatrixError::MixedDegrees);
    }
    let Some(d) = d else {
        return Ok((forms.is_empty(), 0));
    };
    let rows: Vec<Vec<Q>> = forms.iter().map(|f| f.coefficient_vector(d)).collect();
    let r = rank(&rows);
    Ok((r == forms.len(), r))
}

fn block_reversed(sum: &BundleSum) -> Vec<usize> {
    (0..sum.len()).rev().flat_map(|i| sum.range(i)).collect()
}

/// Transpose together with the dual type; summand blocks are listed in reversed order
/// so that twists stay increasing, while order inside each block is kept.
pub fn transpose_dual(m: &PolyMatrix) -> PolyMatrix {
    let new_rows = block_reversed(&m.ty.source);
    let new_cols = block_reversed(&m.ty.target);
    let entries = new_rows.iter().map(|&c| new_cols.iter().map(|&r| m.entries[r][c].clone()).collect()).collect();
    PolyMatrix { ty: m.ty.dual(), entries }
}

/// An invertible change of coordinates `X_i -> sum_j frame[i][j] X_j`.
pub type Frame = [[Q; 3]; 3];

fn identity_frame() -> Frame {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { Q::one() } else { Q::zero() }))
}

fn det3(a: &Frame) -> Q {
    &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1]) - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
        + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0])
}

fn inverse3(a: &Frame) -> Frame {
    let d = det3(a);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            (&a[r0][c0] * &a[r1][c1] - &a[r0][c1] * &a[r1][c0]) / &d
        })
    })
}

/// Determinantal presentation of a cubic through a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicSection {
    /// `[[q1, X], [q2, Y]]` in the adapted coordinates.
    pub matrix: PolyMatrix,
    /// The cubic in adapted coordinates; equals the determinant.
    pub adapted: HomogeneousPoly,
    /// Substitution taking original coordinates to adapted ones, sending the point to `(0:0:1)`.
    pub frame: Frame,
}

/// Writes a cubic vanishing at `point` as `q1 Y - q2 X` after moving the point to `(0:0:1)`.
pub fn cubic_section(point: &[Q; 3], f: &HomogeneousPoly) -> Result<CubicSection, MatrixError> {
    if f.degree() != Some(3) {
        return Err(MatrixError::Precondition("cubic section needs a form of degree 3".into()));
    }
    if point.iter().all(Zero::is_zero) {
        return Err(MatrixError::Precondition("the zero vector is not a projective point".into()));
    }
    if !f.eval(point).is_zero() {
        return Err(MatrixError::Precondition("the cubic does not vanish at the point".into()));
    }
    let e = identity_frame();
    let frame = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .map(|(a, b)| std::array::from_fn(|i| [e[i][a].clone(), e[i][b].clone(), point[i].clone()]))
        .find(|fr: &Frame| !det3(fr).is_zero())
        .expect("some pair of axes completes the point");
    let adapted = f.substitute(&frame);
    let (with_y, rest) = adapted.split_by_var(1);
    let q1 = with_y.strip_var(1).unwrap_or_default();
    let q2 =
        rest.strip_var(0).ok_or_else(|| MatrixError::Precondition("Y-free part is not divisible by X".into()))?.neg();
    let ty: MorphismType = "src=(-2)x1,(-1)x1 tgt=(0)x2".parse()?;
    let matrix = PolyMatrix::new(ty, vec![vec![q1, HomogeneousPoly::x()], vec![q2, HomogeneousPoly::y()]])?;
    Ok(CubicSection { matrix, adapted, frame })
}

/// The `4 x 5` presentation of a quartic through the point cut out by two linear forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarticSection {
    pub matrix: PolyMatrix,
    /// The linear forms `(X1, X2, X3)`, the third completing the given pair to a basis.
    pub basis: [HomogeneousPoly; 3],
}

impl QuarticSection {
    /// `[X3, -X2, X1] * phi21 * (-X2, X1)^T`, which equals the quartic.
    pub fn reconstruct(&self) -> HomogeneousPoly {
        let [x1, x2, x3] = &self.basis;
        let e = self.matrix.entries();
        let left = [x3.clone(), x2.neg(), x1.clone()];
        let right = [x2.neg(), x1.clone()];
        let mut acc = HomogeneousPoly::zero();
        for (j, l) in left.iter().enumerate() {
            for (i, r) in right.iter().enumerate() {
                acc = acc.add(&l.mul(&e[j + 1][i]).mul(r));
            }
        }
        acc
    }
}

/// Builds the quartic presentation for `f` in the ideal of two independent linear forms.
pub fn quartic_section(span: [&HomogeneousPoly; 2], f: &HomogeneousPoly) -> Result<QuarticSection, MatrixError> {
    if f.degree() != Some(4) {
        return Err(MatrixError::Precondition("quartic section needs a form of degree 4".into()));
    }
    if span.iter().any(|l| l.degree() != Some(1)) {
        return Err(MatrixError::Precondition("span must consist of two linear forms".into()));
    }
    let row = |l: &HomogeneousPoly| -> [Q; 3] { std::array::from_fn(|j| l.coefficient_vector(1)[j].clone()) };
    let (r1, r2) = (row(span[0]), row(span[1]));
    let basis_rows: Frame = (0..3)
        .map(|k| {
            let mut r3: [Q; 3] = std::array::from_fn(|_| Q::zero());
            r3[k] = Q::one();
            [r1.clone(), r2.clone(), r3]
        })
        .find(|fr: &Frame| !det3(fr).is_zero())
        .ok_or_else(|| MatrixError::Precondition("the two linear forms are dependent".into()))?;
    // u = L x; g(u) = f(L^{-1} u).
    let g = f.substitute(&inverse3(&basis_rows));
    let (with_y, rest) = g.split_by_var(1);
    let f1 = with_y.strip_var(1).unwrap_or_default().neg();
    let f2 = rest
        .strip_var(0)
        .ok_or_else(|| MatrixError::Precondition("the quartic is not in the ideal of the two forms".into()))?;
    let split = |fi: &HomogeneousPoly| -> [HomogeneousPoly; 3] {
        let (with_z, rest) = fi.split_by_var(2);
        let (with_y, pure_x) = rest.split_by_var(1);
        [
            with_z.strip_var(2).unwrap_or_default(),
            with_y.strip_var(1).unwrap_or_default().neg(),
            pure_x.strip_var(0).unwrap_or_default(),
        ]
    };
    let (c1, c2) = (split(&f1), split(&f2));
    let (x, y, z) = (HomogeneousPoly::x(), HomogeneousPoly::y(), HomogeneousPoly::z());
    let zero = HomogeneousPoly::zero;
    let grid = [
        vec![x.clone(), y.clone(), zero(), zero(), zero()],
        vec![c1[0].clone(), c2[0].clone(), y.neg(), x.clone(), zero()],
        vec![c1[1].clone(), c2[1].clone(), z.neg(), zero(), x.clone()],
        vec![c1[2].clone(), c2[2].clone(), zero(), z.neg(), y.clone()],
    ];
    let back: Vec<Vec<HomogeneousPoly>> =
        grid.iter().map(|r| r.iter().map(|e| e.substitute(&basis_rows)).collect()).collect();
    let ty: MorphismType = "src=(-2)x2,(-1)x3 tgt=(-1)x1,(0)x3 zero=(2,1)".parse()?;
    let basis = [x.substitute(&basis_rows), y.substitute(&basis_rows), z.substitute(&basis_rows)];
    Ok(QuarticSection { matrix: PolyMatrix::new(ty, back)?, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn mat(s: &str) -> PolyMatrix {
        s.parse().unwrap()
    }

    fn p(s: &str) -> HomogeneousPoly {
        s.parse().unwrap()
    }

    #[test]
    fn determinants() {
        let psi1 = mat("type: src=(-1)x3 tgt=(0)x3\nX | Y | 0\nZ | 0 | Y\n0 | -Z | X\n");
        assert!(determinant(&psi1).unwrap().is_zero());
        let m = mat("type: src=(-2)x1,(-1)x2 tgt=(0)x3\n0 | X | Y\nX*Y | Z | 0\n-X^2 | 0 | Z\n");
        assert!(determinant(&m).unwrap().is_zero());
        let m = mat("type: src=(-2)x2 tgt=(0)x2\nX*Y | X*Z\nY^2 | Y*Z\n");
        assert!(determinant(&m).unwrap().is_zero());
        let m = mat("type: src=(-1)x2 tgt=(0)x2\nX | Y\n-Y | X\n");
        assert_eq!(determinant(&m).unwrap(), p("X^2 + Y^2"));
    }

    #[test]
    fn minors() {
        let m = mat("type: src=(-1)x3 tgt=(0)x2\nX | Y | 0\n0 | X | Y\n");
        assert_eq!(maximal_minors(&m), vec![p("Y^2"), p("X*Y"), p("X^2")]);
        let m = mat("type: src=(-1)x2 tgt=(0)x3\nX | Y\nY | Z\nZ | X\n");
        assert_eq!(maximal_minors(&m), vec![p("X*Z - Y^2"), p("X^2 - Y*Z"), p("X*Y - Z^2")]);
        let m = mat("type: src=(0)x2 tgt=(0)x3\n1 | 0\n0 | 1\n0 | 0\n");
        assert_eq!(maximal_minors(&m), vec![p("1"), p("0"), p("0")]);
    }

    #[test]
    fn kernel_lines() {
        let m = mat("type: src=(-1)x3 tgt=(0)x2\nX | Y | 0\n0 | X | Y\n");
        let k = kernel_line(&m).unwrap().unwrap();
        assert_eq!(k.to_string(), "(Y^2 | -X*Y | X^2), d=2");
        let m = mat("type: src=(0)x2 tgt=(1)x1\nX | Y\n");
        assert_eq!(kernel_line(&m).unwrap().unwrap().to_string(), "(Y | -X), d=1");
        let m = mat("type: src=(-1)x2 tgt=(1)x1\nX*Z | Y*Z\n");
        assert_eq!(kernel_line(&m).unwrap().unwrap().to_string(), "(Y | -X), d=1");
        let m = mat("type: src=(-1)x3 tgt=(0)x2\nX | Y | 0\n2*X | 2*Y | 0\n");
        assert_eq!(kernel_line(&m).unwrap(), None);
    }

    #[test]
    fn independence() {
        assert_eq!(linearly_independent(&[p("X"), p("Y")]).unwrap(), (true, 2));
        assert_eq!(linearly_independent(&[p("X*Y - Z^2"), p("Y*Z - X^2"), p("X*Z - Y^2")]).unwrap(), (true, 3));
        assert_eq!(linearly_independent(&[p("X"), p("Y"), p("X + Y")]).unwrap(), (false, 2));
        assert!(linearly_independent(&[p("X"), p("Y^2")]).is_err());
    }

    #[test]
    fn duals() {
        let m = mat("type: src=(-2)x1,(-1)x2 tgt=(0)x3\nX^2 | X | Y\nY^2 | Z | 0\nZ^2 | 0 | Z\n");
        let d = transpose_dual(&m);
        assert_eq!(d.ty().to_string(), "src=(-2)x3 tgt=(-1)x2,(0)x1");
        assert_eq!(d.entry(0, 0), &p("X"));
        assert_eq!(d.entry(2, 1), &p("Y^2"));
        assert_eq!(transpose_dual(&d), m);
    }

    #[test]
    fn cubic_sections() {
        let origin = [q(0), q(0), q(1)];
        let s = cubic_section(&origin, &p("X^2*Z")).unwrap();
        assert_eq!(s.matrix.to_string(), "type: src=(-2)x1,(-1)x1 tgt=(0)x2\n0 | X\n-X*Z | Y\n");
        let s = cubic_section(&origin, &p("Y^3 - X^2*Z")).unwrap();
        assert_eq!(s.matrix.entries()[0][0], p("Y^2"));
        assert_eq!(s.matrix.entries()[1][0], p("X*Z"));
        let s = cubic_section(&origin, &p("X*Y*Z")).unwrap();
        assert_eq!(s.matrix.entries()[0][0], p("X*Z"));
        assert!(s.matrix.entries()[1][0].is_zero());
        assert!(cubic_section(&origin, &p("Z^3")).is_err());
        let pt = [q(1), q(2), q(3)];
        let f = p("X*Y*Z - 2*X^2*Z + 3*X^3 - Y^3 + 5*X^2*Y");
        let f = f.sub(&HomogeneousPoly::constant(f.eval(&pt)).mul(&p("X^3")));
        let s = cubic_section(&pt, &f).unwrap();
        assert_eq!(determinant(&s.matrix).unwrap(), s.adapted);
    }

    #[test]
    fn quartic_sections() {
        let (x, y) = (p("X"), p("Y"));
        let s = quartic_section([&x, &y], &p("X^4")).unwrap();
        let e = s.matrix.entries();
        assert_eq!(e[3][1], p("X^2"));
        assert!(e[1][0].is_zero() && e[1][1].is_zero() && e[2][0].is_zero() && e[2][1].is_zero() && e[3][0].is_zero());
        assert_eq!(s.reconstruct(), p("X^4"));
        let s = quartic_section([&x, &y], &p("X^3*Y")).unwrap();
        assert_eq!(s.matrix.entries()[3][0], p("-X^2"));
        assert_eq!(s.reconstruct(), p("X^3*Y"));
        assert!(quartic_section([&x, &y], &p("Z^4")).is_err());
        let (a, b) = (p("X + Z"), p("Y - 2*Z"));
        let f = a.mul(&p("X^3 + Y*Z^2")).add(&b.mul(&p("Z^3 - X*Y*Z")));
        assert_eq!(quartic_section([&a, &b], &f).unwrap().reconstruct(), f);
    }
}
