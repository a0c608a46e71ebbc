//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::str::FromStr;
use thiserror::Error;

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational `{0}`")]
pub struct ParseRationalError(pub String);

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Prints `p/q` in lowest terms with positive denominator, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Q::new(n, d))
        }
        None => BigInt::from_str(s).map(Q::from_integer).map_err(|_| err()),
    }
}

pub fn to_i64(x: &Q) -> Option<i64> {
    if !x.is_integer() {
        return None;
    }
    i64::try_from(x.numer()).ok()
}

/// Scales a nonzero rational vector to coprime integers, preserving sign.
pub fn primitive_integer_vector(v: &[Q]) -> Vec<BigInt> {
    use num_integer::Integer;
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Rank of a rational matrix by Gaussian elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    row_echelon(rows.to_vec()).len()
}

/// Reduced row echelon form, returning only the nonzero rows.
pub fn row_echelon(mut m: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivot_row = 0;
    for col in 0..ncols {
        let Some(p) = (pivot_row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].recip();
        for x in m[pivot_row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != pivot_row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..ncols {
                    let sub = &f * &m[pivot_row][c];
                    m[r][c] -= sub;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == m.len() {
            break;
        }
    }
    m.truncate(pivot_row);
    m
}

/// Basis of the right null space `{x : m x = 0}`.
pub fn null_space(m: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let rref = row_echelon(m.to_vec());
    let mut pivots = Vec::new();
    for row in &rref {
        if let Some(c) = row.iter().position(|x| !x.is_zero()) {
            pivots.push(c);
        }
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (row, &pc) in rref.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Basis of the left null space `{y : y m = 0}`.
pub fn left_null_space(m: &[Vec<Q>], nrows: usize) -> Vec<Vec<Q>> {
    let ncols = m.first().map_or(0, |r| r.len());
    let t: Vec<Vec<Q>> = (0..ncols).map(|c| m.iter().map(|r| r[c].clone()).collect()).collect();
    null_space(&t, nrows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_lowest_terms() {
        assert_eq!(fmt_q(&frac(2, -4)), "-1/2");
        assert_eq!(fmt_q(&q(3)), "3");
        assert_eq!(parse_q(" 6/8 ").unwrap(), frac(3, 4));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn null_space_annihilates() {
        let m = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        let ns = null_space(&m, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            for row in &m {
                let s: Q = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                assert!(s.is_zero());
            }
        }
        assert_eq!(rank(&m), 1);
    }
}
