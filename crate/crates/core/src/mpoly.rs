//! Sparse polynomials in any number of variables, used for the determinantal
//! conditions of the stability search.

use crate::rat::{primitive_integer_vector, Q};
use crate::ring::Ring;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Exponent vectors carry no trailing zeros, so `one()` needs no variable count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MPoly {
    terms: BTreeMap<Vec<u32>, Q>,
}

fn trimmed(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl MPoly {
    /// `sum_j c_j x_j`.
    pub fn linear(coeffs: &[Q]) -> Self {
        let mut terms = BTreeMap::new();
        for (j, c) in coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            let mut e = vec![0; j + 1];
            e[j] = 1;
            terms.insert(e, c.clone());
        }
        Self { terms }
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c.clone();
                for (k, &p) in e.iter().enumerate() {
                    for _ in 0..p {
                        v *= &x[k];
                    }
                }
                v
            })
            .sum()
    }

    /// Coefficients against the degree-`d` monomials in `n` variables.
    pub fn coefficient_vector(&self, n: usize, d: u32) -> Vec<Q> {
        monomials(n, d).into_iter().map(|m| self.terms.get(&trimmed(m)).cloned().unwrap_or_else(Q::zero)).collect()
    }

    /// Coefficient of the greatest exponent vector in the internal order.
    pub fn leading_coefficient(&self) -> Option<&Q> {
        self.terms.values().next_back()
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::default();
        }
        Self { terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    /// Sets `x_last = 1`, leaving a univariate polynomial in `x_0` when `n = 2`.
    pub fn univariate_in_first(&self) -> crate::upoly::UPoly {
        let deg = self.terms.keys().map(|e| e.first().copied().unwrap_or(0)).max().unwrap_or(0) as usize;
        let mut c = vec![Q::zero(); deg + 1];
        for (e, v) in &self.terms {
            c[e.first().copied().unwrap_or(0) as usize] += v;
        }
        crate::upoly::UPoly::new(c)
    }
}

/// Monomials of degree `d` in `n` variables, lexicographically descending.
pub fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if d == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if n == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for mut rest in monomials(n - 1, d - a) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

impl Ring for MPoly {
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), Q::one());
        Self { terms }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let v = terms.entry(e.clone()).or_insert_with(Q::zero);
            *v += c;
            if v.is_zero() {
                terms.remove(e);
            }
        }
        Self { terms }
    }
    fn sub(&self, other: &Self) -> Self {
        let neg = Self { terms: other.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() };
        self.add(&neg)
    }
    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let n = a.len().max(b.len());
                let e: Vec<u32> = (0..n).map(|k| a.get(k).unwrap_or(&0) + b.get(k).unwrap_or(&0)).collect();
                *terms.entry(trimmed(e)).or_insert_with(Q::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { terms }
    }
}

/// Rank of an integer matrix modulo a prime.
pub fn rank_mod_p(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_multiple_of(p)) else { continue };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][col], p - 2, p);
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, y) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Reduces a rational modulo `p`, or `None` when `p` divides the denominator.
pub fn reduce_mod_p(x: &Q, p: u64) -> Option<u64> {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    let pb = BigInt::from(p);
    let n = ((x.numer() % &pb) + &pb) % &pb;
    let d = ((x.denom() % &pb) + &pb) % &pb;
    let d = d.to_u64()?;
    if d == 0 {
        return None;
    }
    Some(n.to_u64()? * pow_mod(d, p - 2, p) % p)
}

/// Whether homogeneous forms of degree `d` in `n` variables have no common zero over the
/// algebraic closure, by the Macaulay criterion: the ideal contains every form of degree
/// `n (d - 1) + 1` exactly when the zero set is empty.
///
/// Returns `None` when the Macaulay matrix would exceed `max_cols` columns.
pub fn no_common_zero(forms: &[MPoly], n: usize, d: u32, max_cols: usize) -> Option<bool> {
    let rows: Vec<Vec<Q>> = forms.iter().map(|f| f.coefficient_vector(n, d)).collect();
    let basis = crate::rat::row_echelon(rows);
    if basis.is_empty() {
        return Some(false);
    }
    if d == 0 {
        return Some(true);
    }
    let big = n as u32 * (d - 1) + 1;
    let target = monomials(n, big);
    if target.len() > max_cols {
        return None;
    }
    let index: BTreeMap<Vec<u32>, usize> = target.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let dm = monomials(n, d);
    let mut mac: Vec<Vec<Q>> = Vec::new();
    for shift in monomials(n, big - d) {
        for f in &basis {
            let mut row = vec![Q::zero(); target.len()];
            for (m, c) in dm.iter().zip(f).filter(|(_, c)| !c.is_zero()) {
                let e: Vec<u32> = m.iter().zip(&shift).map(|(a, b)| a + b).collect();
                row[index[&e]] = c.clone();
            }
            mac.push(row);
        }
    }
    const P: u64 = 2_147_483_647;
    let ints: Vec<Vec<u64>> = mac
        .iter()
        .map(|r| {
            primitive_integer_vector(r)
                .iter()
                .map(|x| {
                    let pb = num_bigint::BigInt::from(P);
                    num_traits::ToPrimitive::to_u64(&(((x % &pb) + &pb) % &pb)).expect("reduced")
                })
                .collect()
        })
        .collect();
    if rank_mod_p(ints, P) == target.len() {
        return Some(true);
    }
    Some(crate::rat::rank(&mac) == target.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn macaulay_detects_common_zeros() {
        let x = MPoly::linear(&[q(1)]);
        let y = MPoly::linear(&[q(0), q(1)]);
        let z = MPoly::linear(&[q(0), q(0), q(1)]);
        // x*y and y*z share the line y = 0.
        assert_eq!(no_common_zero(&[x.mul(&y), y.mul(&z)], 3, 2, 1000), Some(false));
        // x^2, y^2, z^2 have no common zero.
        assert_eq!(no_common_zero(&[x.mul(&x), y.mul(&y), z.mul(&z)], 3, 2, 1000), Some(true));
        // x^2 - y^2, y^2 - z^2, x*y meet nowhere? (1,1,1) kills the first two but not x*y.
        let f = x.mul(&x).sub(&y.mul(&y));
        let g = y.mul(&y).sub(&z.mul(&z));
        assert_eq!(no_common_zero(&[f.clone(), g.clone(), x.mul(&y)], 3, 2, 1000), Some(true));
        assert_eq!(no_common_zero(&[f, g], 3, 2, 1000), Some(false));
        assert_eq!(monomials(3, 2).len(), 6);
        assert_eq!(rank_mod_p(vec![vec![1, 2], vec![2, 4]], 10007), 1);
    }
}
