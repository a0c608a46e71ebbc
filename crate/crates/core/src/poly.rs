//! Homogeneous polynomials in `X, Y, Z` over the rationals.

use crate::rat::{fmt_q, parse_q, Q};
use crate::ring::Ring;
use crate::upoly::UPoly;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Exponents of `X`, `Y`, `Z`.
pub type Monomial = [u32; 3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error("mixed degrees {0} and {1} in one form")]
    MixedDegree(u32, u32),
    #[error("gcd of two zero polynomials is undefined")]
    ZeroGcd,
}

/// A form: every stored monomial has the same total degree and a nonzero coefficient.
///
/// Keys are ordered so that the last entry is the graded-lex leading term (`X > Y > Z`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct HomogeneousPoly {
    terms: BTreeMap<Monomial, Q>,
}

fn mono_degree(m: &Monomial) -> u32 {
    m[0] + m[1] + m[2]
}

impl HomogeneousPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::term([0, 0, 0], c)
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn var(i: usize) -> Self {
        let mut m = [0; 3];
        m[i] = 1;
        Self::term(m, Q::one())
    }

    pub fn x() -> Self {
        Self::var(0)
    }

    pub fn y() -> Self {
        Self::var(1)
    }

    pub fn z() -> Self {
        Self::var(2)
    }

    /// Builds a form from terms, rejecting mixed degrees.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Q)>) -> Result<Self, PolyError> {
        let mut map: BTreeMap<Monomial, Q> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert_with(Q::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        let mut degs = map.keys().map(mono_degree);
        if let Some(d0) = degs.next() {
            if let Some(d1) = degs.find(|&d| d != d0) {
                return Err(PolyError::MixedDegree(d0, d1));
            }
        }
        Ok(Self { terms: map })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next().map(mono_degree)
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn leading(&self) -> Option<(&Monomial, &Q)> {
        self.terms.iter().next_back()
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect() }
    }

    /// Scales so that the graded-lex leading coefficient is 1.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some((_, c)) => self.scale(&c.recip()),
            None => Self::zero(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, p: &[Q; 3]) -> Q {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.clone();
                for (e, x) in m.iter().zip(p) {
                    for _ in 0..*e {
                        v *= x;
                    }
                }
                v
            })
            .sum()
    }

    /// Substitutes `X_i -> sum_j a[i][j] X_j`.
    pub fn substitute(&self, a: &[[Q; 3]; 3]) -> Self {
        let images: Vec<Self> =
            (0..3).map(|i| Self::from_terms((0..3).map(|j| (unit(j), a[i][j].clone()))).expect("linear")).collect();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for (i, e) in m.iter().enumerate() {
                t = t.mul(&images[i].pow(*e));
            }
            out = out.add(&t);
        }
        out
    }

    /// Exact quotient by `d`, or `None` if `d` does not divide `self`.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (dm, dc) = d.leading().map(|(m, c)| (*m, c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some((m, c)) = rem.leading().map(|(m, c)| (*m, c.clone())) {
            if (0..3).any(|i| m[i] < dm[i]) {
                return None;
            }
            let t = Self::term([m[0] - dm[0], m[1] - dm[1], m[2] - dm[2]], c / &dc);
            rem = rem.sub(&t.mul(d));
            quot = quot.add(&t);
        }
        Some(quot)
    }

    /// Part of the form made of monomials where variable `v` has exponent at least 1.
    pub fn split_by_var(&self, v: usize) -> (Self, Self) {
        let (with, without): (Vec<_>, Vec<_>) =
            self.terms.iter().map(|(m, c)| (*m, c.clone())).partition(|(m, _)| m[v] > 0);
        (Self { terms: with.into_iter().collect() }, Self { terms: without.into_iter().collect() })
    }

    /// Divides every monomial by `X_v`, assuming each contains it.
    pub fn strip_var(&self, v: usize) -> Option<Self> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m[v] == 0 {
                return None;
            }
            let mut m = *m;
            m[v] -= 1;
            terms.insert(m, c.clone());
        }
        Some(Self { terms })
    }

    /// Coefficients against `monomials(d)`.
    pub fn coefficient_vector(&self, d: u32) -> Vec<Q> {
        monomials(d).iter().map(|m| self.coeff(m)).collect()
    }

    /// Highest power of `Z` dividing every term.
    fn z_valuation(&self) -> u32 {
        self.terms.keys().map(|m| m[2]).min().unwrap_or(0)
    }

    /// Sets `Z = 1` after removing the `Z`-content, giving a polynomial in `X` over `Q[Y]`.
    fn dehomogenize(&self) -> Vec<UPoly> {
        let deg_x = self.terms.keys().map(|m| m[0]).max().unwrap_or(0) as usize;
        let mut rows = vec![Vec::<Q>::new(); deg_x + 1];
        for (m, c) in &self.terms {
            let row = &mut rows[m[0] as usize];
            let j = m[1] as usize;
            if row.len() <= j {
                row.resize(j + 1, Q::zero());
            }
            row[j] += c;
        }
        trim(rows.into_iter().map(UPoly::new).collect())
    }

    fn homogenize(b: &[UPoly]) -> Self {
        let deg = b.iter().enumerate().filter_map(|(i, u)| u.degree().map(|d| i + d)).max().unwrap_or(0) as u32;
        let mut terms = Vec::new();
        for (i, u) in b.iter().enumerate() {
            for (j, c) in u.coeffs().iter().enumerate() {
                let (i, j) = (i as u32, j as u32);
                terms.push(([i, j, deg - i - j], c.clone()));
            }
        }
        Self::from_terms(terms).expect("homogenization is homogeneous")
    }
}

fn unit(j: usize) -> Monomial {
    let mut m = [0; 3];
    m[j] = 1;
    m
}

/// All monomials of degree `d` in descending graded-lex order.
pub fn monomials(d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for b in (0..=d - a).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

impl Ring for HomogeneousPoly {
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        Self::constant(Q::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    /// Panics when both operands are nonzero of different degrees.
    fn add(&self, other: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.degree(), other.degree()) {
            assert_eq!(a, b, "adding forms of different degrees");
        }
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let e = terms.entry(*m).or_insert_with(Q::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(m);
            }
        }
        Self { terms }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Monomial, Q> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                *terms.entry([a[0] + b[0], a[1] + b[1], a[2] + b[2]]).or_insert_with(Q::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { terms }
    }
}

impl fmt::Display for HomogeneousPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = *c < Q::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = ["X", "Y", "Z"]
                .iter()
                .zip(m)
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_q(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_q(&mag), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for HomogeneousPoly {
    type Err = PolyError;

    fn from_str(s: &str) -> Result<Self, PolyError> {
        let err = |col: usize, msg: &str| PolyError::Parse { col: col + 1, msg: msg.to_string() };
        let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(err(0, "empty polynomial"));
        }
        // Split into signed terms at top-level `+`/`-`.
        let mut terms: Vec<(bool, Vec<(usize, char)>)> = Vec::new();
        let mut neg = false;
        let mut cur: Vec<(usize, char)> = Vec::new();
        for (i, &(pos, ch)) in chars.iter().enumerate() {
            if (ch == '+' || ch == '-') && (i == 0 || !cur.is_empty()) {
                if !cur.is_empty() {
                    terms.push((neg, std::mem::take(&mut cur)));
                }
                neg = ch == '-';
                continue;
            }
            if ch == '+' || ch == '-' {
                return Err(err(pos, "dangling sign"));
            }
            cur.push((pos, ch));
        }
        match cur.last() {
            Some(_) => terms.push((neg, cur)),
            None => return Err(err(chars.last().map_or(0, |c| c.0), "dangling sign")),
        }
        let mut out = Vec::new();
        for (neg, toks) in terms {
            let mut coeff = if neg { -Q::one() } else { Q::one() };
            let mut mono = [0u32; 3];
            let text: String = toks.iter().map(|(_, c)| *c).collect();
            let mut offset = 0;
            for factor in text.split('*') {
                let col = toks.get(offset).map_or(0, |t| t.0);
                offset += factor.chars().count() + 1;
                if factor.is_empty() {
                    return Err(err(col, "empty factor"));
                }
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (b, e.parse::<u32>().map_err(|_| err(col, "bad exponent"))?),
                    None => (factor, 1),
                };
                match base {
                    "X" | "x" => mono[0] += exp,
                    "Y" | "y" => mono[1] += exp,
                    "Z" | "z" => mono[2] += exp,
                    _ => {
                        let v = parse_q(base).map_err(|_| err(col, "expected X, Y, Z or a rational"))?;
                        for _ in 0..exp {
                            coeff *= &v;
                        }
                    }
                }
            }
            out.push((mono, coeff));
        }
        Self::from_terms(out)
    }
}

fn trim(mut v: Vec<UPoly>) -> Vec<UPoly> {
    while v.last().is_some_and(|u| u.is_zero()) {
        v.pop();
    }
    v
}

fn bdeg(a: &[UPoly]) -> usize {
    a.len() - 1
}

fn content(a: &[UPoly]) -> UPoly {
    a.iter().fold(UPoly::zero(), |g, c| g.gcd(c))
}

fn bdiv(a: &[UPoly], d: &UPoly) -> Vec<UPoly> {
    a.iter().map(|c| c.exact_div(d).expect("exact division in Q[Y]")).collect()
}

fn bscale(a: &[UPoly], s: &UPoly) -> Vec<UPoly> {
    trim(a.iter().map(|c| c.mul(s)).collect())
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) a mod b` over `Q[Y][X]`.
fn prem(a: &[UPoly], b: &[UPoly]) -> Vec<UPoly> {
    let db = bdeg(b);
    let lb = b[db].clone();
    let mut r = a.to_vec();
    let mut steps = bdeg(a) + 1 - db;
    while !r.is_empty() && bdeg(&r) >= db {
        let dr = bdeg(&r);
        let lr = r[dr].clone();
        let mut next: Vec<UPoly> = r.iter().map(|c| c.mul(&lb)).collect();
        for (i, c) in b.iter().enumerate() {
            next[i + dr - db] = next[i + dr - db].sub(&c.mul(&lr));
        }
        r = trim(next);
        steps -= 1;
    }
    bscale(&r, &lb.pow(steps))
}

/// Gcd in `Q[Y][X]` by the subresultant remainder sequence.
fn bivariate_gcd(a: &[UPoly], b: &[UPoly]) -> Vec<UPoly> {
    let (mut a, mut b) = if bdeg(a) >= bdeg(b) { (a.to_vec(), b.to_vec()) } else { (b.to_vec(), a.to_vec()) };
    let (ca, cb) = (content(&a), content(&b));
    let d = ca.gcd(&cb);
    a = bdiv(&a, &ca);
    b = bdiv(&b, &cb);
    let (mut g, mut h) = (UPoly::one(), UPoly::one());
    loop {
        let delta = bdeg(&a) - bdeg(&b);
        let r = prem(&a, &b);
        if r.is_empty() {
            break;
        }
        if bdeg(&r) == 0 {
            b = vec![UPoly::one()];
            break;
        }
        a = std::mem::replace(&mut b, bdiv(&r, &g.mul(&h.pow(delta))));
        g = a[bdeg(&a)].clone();
        h = match delta {
            0 => h,
            1 => g.clone(),
            _ => g.pow(delta).exact_div(&h.pow(delta - 1)).expect("subresultant division"),
        };
    }
    let cb = content(&b);
    bscale(&bdiv(&b, &cb), &d)
}

/// Lines `(s : 1 : a s + b)` used to certify coprimality cheaply.
const PROBE_LINES: [(i64, i64); 3] = [(2, 3), (-3, 5), (7, -2)];

/// Restriction of `p` to the line `(s : 1 : a s + b)`, as a polynomial in `s`.
fn restrict_to_line(p: &HomogeneousPoly, a: &Q, b: &Q) -> UPoly {
    let s = UPoly::new(vec![Q::zero(), Q::one()]);
    let z = UPoly::new(vec![b.clone(), a.clone()]);
    p.terms.iter().fold(UPoly::zero(), |acc, (m, c)| acc.add(&s.pow(m[0] as usize).mul(&z.pow(m[2] as usize)).scale(c)))
}

/// True when coprime restrictions to some probe line prove the forms coprime:
/// a nonconstant common factor restricts to a nonconstant common factor.
fn coprime_on_a_line(f: &HomogeneousPoly, g: &HomogeneousPoly) -> bool {
    PROBE_LINES.iter().any(|&(a, b)| {
        let (a, b) = (Q::from_integer(a.into()), Q::from_integer(b.into()));
        let at_infinity = [Q::one(), Q::zero(), a.clone()];
        let both_vanish_at_infinity = f.eval(&at_infinity).is_zero() && g.eval(&at_infinity).is_zero();
        !both_vanish_at_infinity && restrict_to_line(f, &a, &b).gcd(&restrict_to_line(g, &a, &b)).degree() == Some(0)
    })
}

/// Monic gcd of two forms.
pub fn poly_gcd(a: &HomogeneousPoly, b: &HomogeneousPoly) -> Result<HomogeneousPoly, PolyError> {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Err(PolyError::ZeroGcd),
        (true, false) => return Ok(b.monic()),
        (false, true) => return Ok(a.monic()),
        _ => {}
    }
    if coprime_on_a_line(a, b) {
        return Ok(HomogeneousPoly::one());
    }
    let vz = a.z_valuation().min(b.z_valuation());
    let strip = |p: &HomogeneousPoly| {
        let v = p.z_valuation();
        HomogeneousPoly { terms: p.terms.iter().map(|(m, c)| ([m[0], m[1], m[2] - v], c.clone())).collect() }
    };
    let g = bivariate_gcd(&strip(a).dehomogenize(), &strip(b).dehomogenize());
    let g = HomogeneousPoly::homogenize(&g).mul(&HomogeneousPoly::term([0, 0, vz], Q::one()));
    Ok(g.monic())
}

/// Gcd of a list, ignoring zeros; `None` if all are zero.
pub fn poly_gcd_all<'a>(forms: impl IntoIterator<Item = &'a HomogeneousPoly>) -> Option<HomogeneousPoly> {
    let mut nonzero: Vec<&HomogeneousPoly> = forms.into_iter().filter(|f| !f.is_zero()).collect();
    nonzero.sort_by_key(|f| (f.degree(), f.terms.len()));
    let (first, rest) = nonzero.split_first()?;
    let mut acc = first.monic();
    for f in rest {
        if acc.degree() == Some(0) {
            break;
        }
        acc = poly_gcd(&acc, f).expect("nonzero");
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> HomogeneousPoly {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(p("X^2*Z").to_string(), "X^2*Z");
        assert_eq!(p("- x*y + 3/2*X^2").to_string(), "3/2*X^2 - X*Y");
        assert_eq!(p("0").to_string(), "0");
        assert_eq!(p("2*X*3").to_string(), "6*X");
        assert_eq!(p("Y - Y").to_string(), "0");
        assert!(matches!("X + Y^2".parse::<HomogeneousPoly>(), Err(PolyError::MixedDegree(..))));
        assert!(matches!("X + W".parse::<HomogeneousPoly>(), Err(PolyError::Parse { col: 5, .. })));
        assert!("X +".parse::<HomogeneousPoly>().is_err());
    }

    #[test]
    fn gcds() {
        assert_eq!(poly_gcd(&p("X*Z"), &p("Y*Z")).unwrap(), p("Z"));
        assert_eq!(poly_gcd(&p("X^2"), &p("X")).unwrap(), p("X"));
        assert_eq!(poly_gcd(&p("X*Y - Z^2"), &p("X^2 - Y*Z")).unwrap(), p("1"));
        assert_eq!(poly_gcd(&p("2*X^2 - 2*Y^2"), &p("X*Z + Y*Z")).unwrap(), p("X + Y"));
        let common = p("X*Y + Z^2 - 3*Y*Z");
        let a = common.mul(&p("X^2 + Y*Z"));
        let b = common.mul(&p("Y - 2*Z"));
        assert_eq!(poly_gcd(&a, &b).unwrap(), common.monic());
        assert!(poly_gcd(&p("0"), &p("0")).is_err());
    }

    #[test]
    fn monomial_order() {
        assert_eq!(monomials(1), vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(monomials(2).len(), 6);
        assert_eq!(p("Y^2 + X*Z").leading().unwrap().0, &[1, 0, 1]);
    }

    #[test]
    fn division_and_substitution() {
        let f = p("X^2 - Y^2");
        assert_eq!(f.exact_div(&p("X + Y")).unwrap(), p("X - Y"));
        assert!(f.exact_div(&p("X + Z")).is_none());
        let one = Q::one();
        let zero = Q::zero();
        let swap = [
            [zero.clone(), one.clone(), zero.clone()],
            [one.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), one.clone()],
        ];
        assert_eq!(p("X^2*Z").substitute(&swap), p("Y^2*Z"));
    }

    fn arb_form(deg: u32) -> impl Strategy<Value = HomogeneousPoly> {
        let ms = monomials(deg);
        proptest::collection::vec(-3i64..=3, ms.len()).prop_map(move |cs| {
            HomogeneousPoly::from_terms(ms.iter().zip(cs).map(|(m, c)| (*m, crate::rat::q(c)))).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gcd_divides_and_cofactors_coprime(a in arb_form(2), b in arb_form(1), c in arb_form(1)) {
            prop_assume!(!a.is_zero() && !b.is_zero() && !c.is_zero());
            let f = a.mul(&c);
            let g = b.mul(&c);
            let d = poly_gcd(&f, &g).unwrap();
            let fa = f.exact_div(&d);
            let gb = g.exact_div(&d);
            prop_assert!(fa.is_some() && gb.is_some());
            prop_assert_eq!(poly_gcd(&fa.unwrap(), &gb.unwrap()).unwrap(), HomogeneousPoly::one());
            prop_assert!(d.exact_div(&c.monic()).is_some());
        }

        #[test]
        fn display_round_trips(a in arb_form(3)) {
            prop_assert_eq!(a.to_string().parse::<HomogeneousPoly>().unwrap(), a);
        }
    }
}
