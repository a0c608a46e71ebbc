//! Hilbert polynomials of sheaves on the projective plane and the slope
//! comparisons behind Gieseker semistability.

use crate::bundle::MorphismType;
use crate::rat::{fmt_q, frac, q, Q};
use num_integer::Integer;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HilbertError {
    #[error("polynomial degree {0} exceeds 2")]
    DegreeTooLarge(usize),
    #[error("multiplicity must be positive, got {0}")]
    NonPositiveMultiplicity(i64),
    #[error("quotient needs n >= d >= 3, got n={n}, d={d}")]
    EmptyQuotient { n: i64, d: i64 },
}

/// Polynomial in `t` with rational coefficients; `coeffs[i]` multiplies `t^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct HilbertPolynomial {
    coeffs: Vec<Q>,
}

impl HilbertPolynomial {
    pub fn new(mut coeffs: Vec<Q>) -> Result<Self, HilbertError> {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.len() > 3 {
            return Err(HilbertError::DegreeTooLarge(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn linear(r: i64, chi: i64) -> Self {
        Self::new(vec![q(chi), q(r)]).expect("degree one")
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.coeffs.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, t: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * t + c)
    }

    pub fn eval_int(&self, t: i64) -> Q {
        self.eval(&q(t))
    }

    /// The class `(r, chi)` when the polynomial is `r t + chi` with integer data.
    pub fn as_linear(&self) -> Option<LinearClass> {
        if self.coeffs.len() != 2 || !self.coeffs.iter().all(|c| c.is_integer()) {
            return None;
        }
        let r = crate::rat::to_i64(&self.coeffs[1])?;
        let chi = crate::rat::to_i64(&self.coeffs[0])?;
        LinearClass::new(r, chi).ok()
    }

    /// Coefficients `b_i` with `P(t) = sum b_i * C(t + i, i)`.
    pub fn to_binomial(&self) -> Vec<Q> {
        // Peel off the top binomial term repeatedly.
        let mut rest = self.clone();
        let mut out = vec![Q::zero(); self.coeffs.len()];
        while let Some(d) = rest.degree() {
            let top = rest.coeff(d);
            let scale = top * factorial(d);
            rest = &rest - &binomial_basis(d).scaled(&scale);
            out[d] = scale;
        }
        out
    }

    fn scaled(&self, s: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect()).expect("same degree")
    }
}

fn factorial(d: usize) -> Q {
    (1..=d as i64).map(q).fold(Q::one(), |a, b| a * b)
}

/// `C(t + d, d)` as a polynomial in `t`, for `d <= 2`.
fn binomial_basis(d: usize) -> HilbertPolynomial {
    match d {
        0 => HilbertPolynomial::new(vec![q(1)]),
        1 => HilbertPolynomial::new(vec![q(1), q(1)]),
        _ => HilbertPolynomial::new(vec![q(1), frac(3, 2), frac(1, 2)]),
    }
    .expect("degree at most two")
}

impl Add for &HilbertPolynomial {
    type Output = HilbertPolynomial;
    fn add(self, rhs: Self) -> HilbertPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        HilbertPolynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect()).expect("sum keeps degree bound")
    }
}

impl Sub for &HilbertPolynomial {
    type Output = HilbertPolynomial;
    fn sub(self, rhs: Self) -> HilbertPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &HilbertPolynomial {
    type Output = HilbertPolynomial;
    fn neg(self) -> HilbertPolynomial {
        HilbertPolynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for HilbertPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(usize, &Q)> = self.coeffs.iter().enumerate().rev().filter(|(_, c)| !c.is_zero()).collect();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, c)) in terms.into_iter().enumerate() {
            let neg = *c < Q::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            match i {
                0 => write!(f, "{}", fmt_q(&mag))?,
                1 => write!(f, "{}*t", fmt_q(&mag))?,
                _ => write!(f, "{}*t^{}", fmt_q(&mag), i)?,
            }
        }
        Ok(())
    }
}

/// Numerical class of a one-dimensional sheaf with Hilbert polynomial `r t + chi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearClass {
    pub r: i64,
    pub chi: i64,
}

impl LinearClass {
    pub fn new(r: i64, chi: i64) -> Result<Self, HilbertError> {
        if r < 1 {
            return Err(HilbertError::NonPositiveMultiplicity(r));
        }
        Ok(Self { r, chi })
    }

    pub fn polynomial(&self) -> HilbertPolynomial {
        HilbertPolynomial::linear(self.r, self.chi)
    }

    /// The class `(r, r - chi)` of the dual sheaf.
    pub fn dual(&self) -> Self {
        Self { r: self.r, chi: self.r - self.chi }
    }
}

impl fmt::Display for LinearClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r, self.chi)
    }
}

/// `P_{O(d)}(t) = (t + d + 2)(t + d + 1) / 2`.
pub fn hilbert_of_twist(d: i64) -> HilbertPolynomial {
    let a = q(d + 2);
    let b = q(d + 1);
    HilbertPolynomial::new(vec![&a * &b / q(2), (a + b) / q(2), frac(1, 2)]).expect("quadratic")
}

/// Alternating sum `target - source (+ kernel)` over a resolution.
pub fn hilbert_of_resolution(res: &MorphismType, kernel_twist: Option<i64>) -> HilbertPolynomial {
    let mut p = HilbertPolynomial::zero();
    for s in res.target.summands() {
        p = &p + &hilbert_of_twist(s.twist).scaled(&q(s.mult as i64));
    }
    for s in res.source.summands() {
        p = &p - &hilbert_of_twist(s.twist).scaled(&q(s.mult as i64));
    }
    if let Some(k) = kernel_twist {
        p = &p + &hilbert_of_twist(k);
    }
    p
}

/// Quotient by a curve of degree `d` inside a support of degree `n`: `(n-d) t + (d-2)(d-3)/2`.
pub fn quotient_from_minors_kernel(n: i64, d: i64) -> Result<HilbertPolynomial, HilbertError> {
    if d < 3 || n < d {
        return Err(HilbertError::EmptyQuotient { n, d });
    }
    HilbertPolynomial::new(vec![q((d - 2) * (d - 3) / 2), q(n - d)])
}

/// Hilbert polynomial of the structure sheaf of a plane curve of degree `r`.
pub fn structure_sheaf_poly(r: i64) -> Result<HilbertPolynomial, HilbertError> {
    if r < 1 {
        return Err(HilbertError::NonPositiveMultiplicity(r));
    }
    Ok(HilbertPolynomial::linear(r, -r * (r - 3) / 2))
}

/// Degree of a line bundle on a smooth curve of degree `r` with Euler characteristic `chi`.
pub fn line_bundle_degree(r: i64, chi: i64) -> Result<i64, HilbertError> {
    if r < 1 {
        return Err(HilbertError::NonPositiveMultiplicity(r));
    }
    Ok(r * (r - 3) / 2 + chi)
}

/// Whether `sub` has larger slope than `parent` (or equal, when not strict).
pub fn slope_violates(sub: LinearClass, parent: LinearClass, strict: bool) -> bool {
    let lhs = sub.chi as i128 * parent.r as i128;
    let rhs = parent.chi as i128 * sub.r as i128;
    if strict {
        lhs > rhs
    } else {
        lhs >= rhs
    }
}

/// A universal family exists when `gcd(r, chi) = 1`.
pub fn is_fine(r: i64, chi: i64) -> bool {
    r.gcd(&chi) == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::MorphismType;
    use proptest::prelude::*;

    #[test]
    fn twists() {
        assert_eq!(hilbert_of_twist(0).to_string(), "1/2*t^2 + 3/2*t + 1");
        assert_eq!(hilbert_of_twist(-1).to_string(), "1/2*t^2 + 1/2*t");
        assert_eq!(hilbert_of_twist(-2).to_string(), "1/2*t^2 - 1/2*t");
    }

    #[test]
    fn resolutions() {
        let t: MorphismType = "src=(-2)x1,(-1)x2 tgt=(0)x3".parse().unwrap();
        assert_eq!(hilbert_of_resolution(&t, None), HilbertPolynomial::linear(4, 3));
        let t: MorphismType = "src=(-2)x2 tgt=(0)x2".parse().unwrap();
        assert_eq!(hilbert_of_resolution(&t, None), HilbertPolynomial::linear(4, 2));
        let t: MorphismType = "src=(-2)x4,(-1)x3 tgt=(-1)x3,(0)x3".parse().unwrap();
        assert_eq!(hilbert_of_resolution(&t, Some(-2)), HilbertPolynomial::linear(6, 3));
    }

    #[test]
    fn quotients_and_curves() {
        assert_eq!(quotient_from_minors_kernel(6, 4).unwrap(), HilbertPolynomial::linear(2, 1));
        assert_eq!(quotient_from_minors_kernel(5, 5).unwrap().to_string(), "3");
        assert_eq!(quotient_from_minors_kernel(8, 5).unwrap(), HilbertPolynomial::linear(3, 3));
        assert!(quotient_from_minors_kernel(4, 5).is_err());
        assert_eq!(structure_sheaf_poly(2).unwrap(), HilbertPolynomial::linear(2, 1));
        assert_eq!(structure_sheaf_poly(3).unwrap(), HilbertPolynomial::linear(3, 0));
        assert_eq!(structure_sheaf_poly(4).unwrap().to_string(), "4*t - 2");
        assert_eq!(line_bundle_degree(4, 3).unwrap(), 5);
        assert_eq!(line_bundle_degree(3, 0).unwrap(), 0);
        assert_eq!(line_bundle_degree(6, 3).unwrap(), 12);
    }

    #[test]
    fn slopes_and_fineness() {
        let c = |r, chi| LinearClass::new(r, chi).unwrap();
        assert!(slope_violates(c(3, 3), c(4, 3), true));
        assert!(!slope_violates(c(2, 1), c(4, 2), true));
        assert!(slope_violates(c(2, 1), c(4, 2), false));
        assert!(!slope_violates(c(1, 0), c(6, 3), true));
        assert!(is_fine(4, 3));
        assert!(!is_fine(4, 2));
        assert!(is_fine(1, 0));
    }

    #[test]
    fn binomial_conversion_round_trips() {
        let p = hilbert_of_twist(0);
        assert_eq!(p.to_binomial(), vec![q(0), q(0), q(1)]);
        let p = HilbertPolynomial::linear(4, 3);
        assert_eq!(p.to_binomial(), vec![q(-1), q(4)]);
    }

    proptest! {
        #[test]
        fn twist_values_are_integers(d in -8i64..8, t in -10i64..=10) {
            prop_assert!(hilbert_of_twist(d).eval_int(t).is_integer());
        }

        #[test]
        fn resolution_is_additive(a in 0u32..4, b in 0u32..4, c in 1u32..4, e in 0u32..4) {
            let spec = |s: u32, u: u32| {
                let mut src = vec![];
                if s > 0 { src.push(format!("(-2)x{s}")); }
                if u > 0 { src.push(format!("(-1)x{u}")); }
                src.join(",")
            };
            prop_assume!(a + b > 0 && c + e > 0);
            let t1: MorphismType = format!("src={} tgt=(0)x{}", spec(a, b), c).parse().unwrap();
            let t2: MorphismType = format!("src={} tgt=(0)x{}", spec(c, e), a + 1).parse().unwrap();
            let joined: MorphismType = format!("src={} tgt=(0)x{}", spec(a + c, b + e), c + a + 1).parse().unwrap();
            let sum = &hilbert_of_resolution(&t1, None) + &hilbert_of_resolution(&t2, None);
            prop_assert_eq!(hilbert_of_resolution(&joined, None), sum);
        }

        #[test]
        fn slope_antisymmetry(r1 in 1i64..20, c1 in -20i64..20, r2 in 1i64..20, c2 in -20i64..20) {
            let a = LinearClass::new(r1, c1).unwrap();
            let b = LinearClass::new(r2, c2).unwrap();
            prop_assert!(!(slope_violates(a, b, true) && slope_violates(b, a, true)));
        }

        #[test]
        fn fineness_symmetric(r in 1i64..40, chi in -40i64..40) {
            prop_assert_eq!(is_fine(r, chi), is_fine(r, r - chi));
        }
    }

    #[test]
    fn structure_sheaf_shape() {
        for r in 2..=8 {
            let p = structure_sheaf_poly(r).unwrap();
            assert_eq!(p.eval_int(0), q(-r * (r - 3) / 2));
            assert_eq!(p.coeff(1), q(r));
        }
    }
}
