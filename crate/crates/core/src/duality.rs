//! Cohomology tables, the Beilinson complex built from them, and the duality
//! `F -> F^D` on tables, strata, resolution types and polarizations.

use crate::bundle::{BundleSum, MorphismType, ResolutionSpec, TypeError};
use crate::hilbert::{hilbert_of_twist, HilbertPolynomial, LinearClass};
use crate::rat::q;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub use crate::polymatrix::transpose_dual;
pub use crate::region::dual_polarization;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DualityError {
    #[error("pair {0} is underdetermined")]
    Underdetermined(&'static str),
    #[error("pair {0} contradicts the Euler characteristic")]
    Inconsistent(&'static str),
    #[error("pair {0} would need a negative dimension")]
    Negative(&'static str),
    #[error("cannot reduce the Beilinson complex: {0}")]
    Irreducible(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Dimensions of `H^0`, `H^1` of `F(-1)`, `F` and `F (x) Omega^1(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CohomologyTable {
    pub klass: LinearClass,
    pub h0m1: u64,
    pub h1m1: u64,
    pub h0: u64,
    pub h1: u64,
    pub h0om: u64,
    pub h1om: u64,
}

/// Known entries of a cohomology table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartialTable {
    pub h0m1: Option<u64>,
    pub h1m1: Option<u64>,
    pub h0: Option<u64>,
    pub h1: Option<u64>,
    pub h0om: Option<u64>,
    pub h1om: Option<u64>,
}

fn complete_pair(name: &'static str, h0: Option<u64>, h1: Option<u64>, diff: i64) -> Result<(u64, u64), DualityError> {
    let (a, b) = match (h0, h1) {
        (Some(a), Some(b)) if a as i64 - b as i64 == diff => (a as i64, b as i64),
        (Some(_), Some(_)) => return Err(DualityError::Inconsistent(name)),
        (Some(a), None) => (a as i64, a as i64 - diff),
        (None, Some(b)) => (b as i64 + diff, b as i64),
        (None, None) => return Err(DualityError::Underdetermined(name)),
    };
    if a < 0 || b < 0 {
        return Err(DualityError::Negative(name));
    }
    Ok((a as u64, b as u64))
}

/// Fills in a table from one entry per pair, using `h0 - h1 = chi` for each twist;
/// for `F (x) Omega^1(1)` the difference is `2 chi - r`, from the restricted Euler sequence.
pub fn complete_table(klass: LinearClass, known: &PartialTable) -> Result<CohomologyTable, DualityError> {
    let (r, chi) = (klass.r, klass.chi);
    let (h0m1, h1m1) = complete_pair("F(-1)", known.h0m1, known.h1m1, chi - r)?;
    let (h0, h1) = complete_pair("F", known.h0, known.h1, chi)?;
    let (h0om, h1om) = complete_pair("F(x)Omega(1)", known.h0om, known.h1om, 2 * chi - r)?;
    Ok(CohomologyTable { klass, h0m1, h1m1, h0, h1, h0om, h1om })
}

impl CohomologyTable {
    pub fn is_consistent(&self) -> bool {
        let (r, chi) = (self.klass.r, self.klass.chi);
        self.h0m1 as i64 - self.h1m1 as i64 == chi - r
            && self.h0 as i64 - self.h1 as i64 == chi
            && self.h0om as i64 - self.h1om as i64 == 2 * chi - r
    }
}

impl fmt::Display for CohomologyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "class {}", self.klass)?;
        writeln!(f, "{:<14}{:>4}{:>4}", "", "h0", "h1")?;
        writeln!(f, "{:<14}{:>4}{:>4}", "F(-1)", self.h0m1, self.h1m1)?;
        writeln!(f, "{:<14}{:>4}{:>4}", "F", self.h0, self.h1)?;
        write!(f, "{:<14}{:>4}{:>4}", "F(x)Omega(1)", self.h0om, self.h1om)
    }
}

/// Terms of the four-term Beilinson complex whose middle cohomology is `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeilinsonTerms {
    pub c_minus2: BundleSum,
    pub c_minus1: BundleSum,
    pub c0: BundleSum,
    pub c1: BundleSum,
}

fn sum(parts: &[(i64, u64)]) -> BundleSum {
    BundleSum::collect(parts.iter().map(|&(t, m)| (t, m as i64)))
}

pub fn beilinson_terms(t: &CohomologyTable) -> BeilinsonTerms {
    BeilinsonTerms {
        c_minus2: sum(&[(-2, t.h0m1)]),
        c_minus1: sum(&[(-2, t.h1m1), (-1, t.h0om)]),
        c0: sum(&[(-1, t.h1om), (0, t.h0)]),
        c1: sum(&[(0, t.h1)]),
    }
}

fn poly_of(s: &BundleSum) -> HilbertPolynomial {
    s.summands()
        .iter()
        .fold(HilbertPolynomial::zero(), |acc, x| &acc + &scaled(&hilbert_of_twist(x.twist), x.mult as i64))
}

fn scaled(p: &HilbertPolynomial, k: i64) -> HilbertPolynomial {
    HilbertPolynomial::new(p.coeffs().iter().map(|c| c * q(k)).collect()).expect("same degree")
}

/// `P(C0) - P(C-1) + P(C-2) - P(C1) = r t + chi`.
pub fn euler_consistency(terms: &BeilinsonTerms, klass: LinearClass) -> bool {
    let p = &(&poly_of(&terms.c0) - &poly_of(&terms.c_minus1)) + &(&poly_of(&terms.c_minus2) - &poly_of(&terms.c1));
    p == klass.polynomial()
}

pub fn serre_dual_table(t: &CohomologyTable) -> CohomologyTable {
    CohomologyTable {
        klass: t.klass.dual(),
        h0m1: t.h1,
        h1m1: t.h0,
        h0: t.h1m1,
        h1: t.h0m1,
        h0om: t.h1om,
        h1om: t.h0om,
    }
}

pub fn dual_type(t: &MorphismType) -> MorphismType {
    t.dual()
}

/// Locally closed strata of a moduli space cut out by three cohomology dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    /// `h0(F(-1)) = a`, `h0(F) = b`, `h0(F (x) Omega^1(1)) = c`.
    Sections { a: Option<u64>, b: Option<u64>, c: Option<u64> },
    /// `h1(F) = a`, `h1(F(-1)) = b`, `h1(F (x) Omega^1(1)) = c`.
    Obstructions { a: Option<u64>, b: Option<u64>, c: Option<u64> },
}

/// The stratum of dual sheaves: section conditions become obstruction conditions and back.
pub fn dual_stratum(s: Stratum) -> Stratum {
    match s {
        Stratum::Sections { a, b, c } => Stratum::Obstructions { a, b, c },
        Stratum::Obstructions { a, b, c } => Stratum::Sections { a, b, c },
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &Option<u64>| x.map_or("*".to_string(), |n| n.to_string());
        match self {
            Self::Sections { a, b, c } => write!(f, "h0(F(-1))={} h0(F)={} h0(F(x)Omega(1))={}", v(a), v(b), v(c)),
            Self::Obstructions { a, b, c } => write!(f, "h1(F)={} h1(F(-1))={} h1(F(x)Omega(1))={}", v(a), v(b), v(c)),
        }
    }
}

type Counts = BTreeMap<i64, i64>;

fn counts(s: &BundleSum) -> Counts {
    s.summands().iter().map(|x| (x.twist, x.mult as i64)).collect()
}

fn to_sum(c: &Counts) -> Result<BundleSum, DualityError> {
    if let Some((t, m)) = c.iter().find(|(_, &m)| m < 0) {
        return Err(DualityError::Irreducible(format!("{m} copies of O({t})")));
    }
    Ok(BundleSum::collect(c.iter().map(|(&t, &m)| (t, m))))
}

/// Reads off a resolution from the Beilinson complex.
///
/// A nonzero `C1 = k O` is absorbed through the Koszul complex
/// `O(-3) -> 3 O(-2) -> 3 O(-1) -> O`; only the summands it introduces cancel, since
/// the remaining constant blocks vanish on a minimal resolution. A nonzero `C-2` is kept as the kernel when `keep_kernel` is set, and is
/// otherwise removed by passing to the dual table and dualizing back.
pub fn resolution_from_table(t: &CohomologyTable, keep_kernel: bool) -> Result<ResolutionSpec, DualityError> {
    if t.h0m1 > 0 && t.h1 > 0 {
        return Err(DualityError::Irreducible("both ends of the complex are nonzero".into()));
    }
    if t.h0m1 > 0 && !keep_kernel {
        let dual = resolution_from_table(&serre_dual_table(t), false)?;
        return Ok(ResolutionSpec { ty: dual.ty.dual(), kernel: None });
    }
    if t.h0m1 > 1 {
        return Err(DualityError::Irreducible(format!("kernel {} O(-2) is not a line bundle", t.h0m1)));
    }
    let terms = beilinson_terms(t);
    let mut src = counts(&terms.c_minus1);
    let mut tgt = counts(&terms.c0);
    let k = t.h1 as i64;
    if k > 0 {
        *src.entry(-3).or_default() += k;
        *tgt.entry(-1).or_default() -= 3 * k;
        *tgt.entry(-2).or_default() += 3 * k;
    }
    if k > 0 {
        let s = src.entry(-2).or_default();
        let m = tgt.entry(-2).or_default();
        let common = (*s).min(*m);
        *s -= common;
        *m -= common;
    }
    for (twist, m) in tgt.iter_mut().filter(|(_, m)| **m < 0) {
        *src.entry(*twist).or_default() += *m;
        *m = 0;
    }
    let ty = MorphismType::new(to_sum(&src)?, to_sum(&tgt)?, [])?;
    Ok(ResolutionSpec { ty, kernel: (t.h0m1 == 1).then_some(-2) })
}
