//! A minimal commutative-ring interface and division-free determinants over it.

use std::collections::HashMap;

pub trait Ring: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
}

/// Determinant of a square matrix by Laplace expansion with memoized column subsets.
///
/// Costs `O(k 2^k)` ring operations, which is fine for the small sizes handled here.
pub fn determinant<R: Ring>(m: &[Vec<R>]) -> R {
    let k = m.len();
    assert!(m.iter().all(|r| r.len() == k), "determinant of a non-square matrix");
    assert!(k < 32, "matrix too large for subset expansion");
    let mut memo: HashMap<u32, R> = HashMap::new();
    expand(m, 0, (1u32 << k) - 1, &mut memo)
}

fn expand<R: Ring>(m: &[Vec<R>], row: usize, mask: u32, memo: &mut HashMap<u32, R>) -> R {
    if mask == 0 {
        return R::one();
    }
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let mut acc = R::zero();
    let mut seen = 0;
    for c in 0..m.len() {
        if mask & (1 << c) == 0 {
            continue;
        }
        let entry = &m[row][c];
        if !entry.is_zero() {
            let term = entry.mul(&expand(m, row + 1, mask & !(1 << c), memo));
            acc = if seen % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        seen += 1;
    }
    memo.insert(mask, acc.clone());
    acc
}

/// Submatrix keeping the listed rows and columns.
pub fn submatrix<R: Ring>(m: &[Vec<R>], rows: &[usize], cols: &[usize]) -> Vec<Vec<R>> {
    rows.iter().map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect()).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}
