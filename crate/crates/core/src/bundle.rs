//! Direct sums of line bundles on the plane, morphism types between them,
//! and the Hom/Aut dimension counts that feed stratum codimensions.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("twists must be strictly increasing, got {0} after {1}")]
    UnorderedTwists(i64, i64),
    #[error("malformed summand `{0}`; expected `(d)xm`")]
    BadSummand(String),
    #[error("malformed resolution spec `{0}`")]
    BadSpec(String),
    #[error("zeroed block ({0},{1}) is out of range")]
    ZeroOutOfRange(usize, usize),
    #[error("zeroed block ({0},{1}) maps a twist down, so it is zero anyway")]
    ZeroBelowDiagonal(usize, usize),
    #[error("morphism type needs a nonempty {0}")]
    EmptySide(&'static str),
    #[error("stabilizer rule `{0}` is unknown")]
    UnknownRule(String),
    #[error("stabilizer rule {rule} is negative at n={n}")]
    NegativeStabilizer { rule: StabilizerRule, n: i64 },
}

/// `mult` copies of `O(twist)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Summand {
    pub twist: i64,
    pub mult: u32,
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})x{}", self.twist, self.mult)
    }
}

/// Sum of line bundles with strictly increasing twists and positive multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BundleSum(Vec<Summand>);

impl BundleSum {
    /// Builds a sum, dropping zero multiplicities.
    pub fn new(parts: impl IntoIterator<Item = (i64, u32)>) -> Result<Self, TypeError> {
        let mut out: Vec<Summand> = Vec::new();
        for (twist, mult) in parts {
            if let Some(prev) = out.last() {
                if twist <= prev.twist {
                    return Err(TypeError::UnorderedTwists(twist, prev.twist));
                }
            }
            if mult > 0 {
                out.push(Summand { twist, mult });
            }
        }
        Ok(Self(out))
    }

    /// Builds a sum from unordered parts, merging equal twists.
    pub fn collect(parts: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut map = std::collections::BTreeMap::<i64, i64>::new();
        for (t, m) in parts {
            *map.entry(t).or_default() += m;
        }
        Self(map.into_iter().filter(|&(_, m)| m > 0).map(|(twist, m)| Summand { twist, mult: m as u32 }).collect())
    }

    pub fn summands(&self) -> &[Summand] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.iter().map(|s| s.mult as usize).sum()
    }

    pub fn mults(&self) -> Vec<u32> {
        self.0.iter().map(|s| s.mult).collect()
    }

    pub fn mult_of(&self, twist: i64) -> u32 {
        self.0.iter().find(|s| s.twist == twist).map_or(0, |s| s.mult)
    }

    pub fn index_of(&self, twist: i64) -> Option<usize> {
        self.0.iter().position(|s| s.twist == twist)
    }

    /// Index range of summand `i` inside the flattened rank.
    pub fn range(&self, i: usize) -> Range<usize> {
        let start: usize = self.0[..i].iter().map(|s| s.mult as usize).sum();
        start..start + self.0[i].mult as usize
    }

    /// Summand index of each flattened position.
    pub fn kinds(&self) -> Vec<usize> {
        self.0.iter().enumerate().flat_map(|(i, s)| std::iter::repeat_n(i, s.mult as usize)).collect()
    }

    /// Twist map `d -> -d - 2`, reversing order so twists stay increasing.
    pub fn dual(&self) -> Self {
        Self(self.0.iter().rev().map(|s| Summand { twist: -s.twist - 2, mult: s.mult }).collect())
    }
}

impl fmt::Display for BundleSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(Summand::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn parse_sum(s: &str) -> Result<Vec<(i64, u32)>, TypeError> {
    if s == "0" || s.is_empty() {
        return Ok(Vec::new());
    }
    split_groups(s)
        .into_iter()
        .map(|part| {
            let bad = || TypeError::BadSummand(part.to_string());
            let rest = part.strip_prefix('(').ok_or_else(bad)?;
            let (twist, mult) = rest.split_once(")x").ok_or_else(bad)?;
            Ok((twist.trim().parse().map_err(|_| bad())?, mult.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Splits `a,(b,c),d` on commas outside parentheses.
fn split_groups(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

impl FromStr for BundleSum {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, TypeError> {
        Self::new(parse_sum(s.trim())?)
    }
}

/// Morphisms `source -> target` with some scalar blocks forced to vanish.
///
/// `zeroed` holds `(source index, target index)` pairs of summand types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MorphismType {
    pub source: BundleSum,
    pub target: BundleSum,
    zeroed: BTreeSet<(usize, usize)>,
}

impl MorphismType {
    pub fn new(
        source: BundleSum,
        target: BundleSum,
        zeroed: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TypeError> {
        if source.is_empty() {
            return Err(TypeError::EmptySide("source"));
        }
        if target.is_empty() {
            return Err(TypeError::EmptySide("target"));
        }
        let zeroed: BTreeSet<_> = zeroed.into_iter().collect();
        for &(i, l) in &zeroed {
            if i >= source.len() || l >= target.len() {
                return Err(TypeError::ZeroOutOfRange(i + 1, l + 1));
            }
            if target.summands()[l].twist < source.summands()[i].twist {
                return Err(TypeError::ZeroBelowDiagonal(i + 1, l + 1));
            }
        }
        Ok(Self { source, target, zeroed })
    }

    /// Parses raw summand lists (possibly with zero multiplicities) and 1-based zero pairs.
    pub fn from_parts(src: &[(i64, u32)], tgt: &[(i64, u32)], zero: &[(usize, usize)]) -> Result<Self, TypeError> {
        let remap = |parts: &[(i64, u32)]| -> Vec<Option<usize>> {
            let mut k = 0;
            parts
                .iter()
                .map(|&(_, m)| {
                    (m > 0).then(|| {
                        k += 1;
                        k - 1
                    })
                })
                .collect()
        };
        let (sm, tm) = (remap(src), remap(tgt));
        let mut zeroed = Vec::new();
        for &(i, l) in zero {
            if i == 0 || l == 0 || i > src.len() || l > tgt.len() {
                return Err(TypeError::ZeroOutOfRange(i, l));
            }
            if let (Some(a), Some(b)) = (sm[i - 1], tm[l - 1]) {
                zeroed.push((a, b));
            }
        }
        Self::new(BundleSum::new(src.iter().copied())?, BundleSum::new(tgt.iter().copied())?, zeroed)
    }

    pub fn zeroed(&self) -> &BTreeSet<(usize, usize)> {
        &self.zeroed
    }

    pub fn is_zeroed(&self, src: usize, tgt: usize) -> bool {
        self.zeroed.contains(&(src, tgt))
    }

    /// Number of rows (total target rank).
    pub fn rows(&self) -> usize {
        self.target.rank()
    }

    /// Number of columns (total source rank).
    pub fn cols(&self) -> usize {
        self.source.rank()
    }

    /// Degree of the forms in the block from source type `i` to target type `l`, if any.
    pub fn block_degree(&self, i: usize, l: usize) -> Option<u32> {
        let d = self.target.summands()[l].twist - self.source.summands()[i].twist;
        (d >= 0).then_some(d as u32)
    }

    /// Serre-dual type: swap sides, apply `d -> -d - 2`, transport zero blocks.
    pub fn dual(&self) -> Self {
        let (s, t) = (self.source.len(), self.target.len());
        Self {
            source: self.target.dual(),
            target: self.source.dual(),
            zeroed: self.zeroed.iter().map(|&(i, l)| (t - 1 - l, s - 1 - i)).collect(),
        }
    }
}

impl fmt::Display for MorphismType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "src={} tgt={}", self.source, self.target)?;
        if !self.zeroed.is_empty() {
            let z: Vec<String> = self.zeroed.iter().map(|(i, l)| format!("({},{})", i + 1, l + 1)).collect();
            write!(f, " zero={}", z.join(","))?;
        }
        Ok(())
    }
}

/// A resolution spec: a morphism type plus an optional kernel twist `ker=(k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionSpec {
    pub ty: MorphismType,
    pub kernel: Option<i64>,
}

impl FromStr for ResolutionSpec {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, TypeError> {
        let bad = || TypeError::BadSpec(s.to_string());
        let (mut src, mut tgt, mut zero, mut kernel) = (None, None, Vec::new(), None);
        for field in s.split_whitespace() {
            let (key, val) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "src" => src = Some(parse_sum(val)?),
                "tgt" => tgt = Some(parse_sum(val)?),
                "zero" => {
                    for pair in split_groups(val) {
                        let inner = pair.strip_prefix('(').and_then(|p| p.strip_suffix(')')).ok_or_else(bad)?;
                        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
                        zero.push((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?));
                    }
                }
                "ker" => {
                    let inner = val.strip_prefix('(').and_then(|p| p.strip_suffix(')')).ok_or_else(bad)?;
                    kernel = Some(inner.trim().parse().map_err(|_| bad())?);
                }
                _ => return Err(bad()),
            }
        }
        let ty = MorphismType::from_parts(&src.ok_or_else(bad)?, &tgt.ok_or_else(bad)?, &zero)?;
        Ok(Self { ty, kernel })
    }
}

impl FromStr for MorphismType {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, TypeError> {
        let spec: ResolutionSpec = s.parse()?;
        if spec.kernel.is_some() {
            return Err(TypeError::BadSpec(s.to_string()));
        }
        Ok(spec.ty)
    }
}

/// `dim Hom(O(a), O(b)) = h0(O(b - a))`.
pub fn hom_dim(a: i64, b: i64) -> u64 {
    if b < a {
        return 0;
    }
    let k = (b - a) as u64;
    (k + 1) * (k + 2) / 2
}

/// Dimension of the space of morphisms of type `t`, zeroed blocks excluded.
pub fn hom_space_dim(t: &MorphismType) -> u64 {
    let mut total = 0;
    for (i, s) in t.source.summands().iter().enumerate() {
        for (l, g) in t.target.summands().iter().enumerate() {
            if !t.is_zeroed(i, l) {
                total += s.mult as u64 * g.mult as u64 * hom_dim(s.twist, g.twist);
            }
        }
    }
    total
}

fn aut_dim(sum: &BundleSum) -> u64 {
    let s = sum.summands();
    let diag: u64 = s.iter().map(|x| (x.mult as u64).pow(2)).sum();
    let upper: u64 = (0..s.len())
        .flat_map(|i| (i + 1..s.len()).map(move |j| (i, j)))
        .map(|(i, j)| s[i].mult as u64 * s[j].mult as u64 * hom_dim(s[i].twist, s[j].twist))
        .sum();
    diag + upper
}

/// Dimension of `Aut(source) x Aut(target)` modulo the common homotheties.
pub fn aut_group_dim(t: &MorphismType) -> u64 {
    aut_dim(&t.source) + aut_dim(&t.target) - 1
}

/// Dimension of the generic stabilizer along a stratum, as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilizerRule {
    Trivial,
    NMinus1,
    NMinus2,
    TwoNMinus2,
    FourNMinus11,
}

impl StabilizerRule {
    pub fn eval(self, n: i64) -> i64 {
        match self {
            Self::Trivial => 0,
            Self::NMinus1 => n - 1,
            Self::NMinus2 => n - 2,
            Self::TwoNMinus2 => 2 * n - 2,
            Self::FourNMinus11 => 4 * n - 11,
        }
    }
}

impl fmt::Display for StabilizerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Trivial => "trivial",
            Self::NMinus1 => "n-1",
            Self::NMinus2 => "n-2",
            Self::TwoNMinus2 => "2n-2",
            Self::FourNMinus11 => "4n-11",
        })
    }
}

impl FromStr for StabilizerRule {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, TypeError> {
        Ok(match s.trim() {
            "trivial" => Self::Trivial,
            "n-1" => Self::NMinus1,
            "n-2" => Self::NMinus2,
            "2n-2" => Self::TwoNMinus2,
            "4n-11" => Self::FourNMinus11,
            other => return Err(TypeError::UnknownRule(other.to_string())),
        })
    }
}

pub fn stabilizer_dim(rule: StabilizerRule, n: i64) -> Result<u64, TypeError> {
    let v = rule.eval(n);
    u64::try_from(v).map_err(|_| TypeError::NegativeStabilizer { rule, n })
}

/// `r^2 + 1 - (dim W - constraints - dim G + dim Stab)`.
pub fn codimension(r: i64, t: &MorphismType, extra_constraints: u64, stabilizer: u64) -> i64 {
    let stratum = hom_space_dim(t) as i64 - extra_constraints as i64 - aut_group_dim(t) as i64 + stabilizer as i64;
    r * r + 1 - stratum
}

/// Quotient families whose dimension is known as a projective bundle over a base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotientFamily {
    /// `O(-2) + (n-1) O(-1) -> n O`: fiber `P^{3n+2}` over a base of dimension `n^2 - n`.
    Cokernel,
    /// `O(-3) + n O(-1) -> (n+1) O`: fiber `P^{4n+9}` over a base of dimension `n^2 + n`.
    CubicTwist,
}

impl QuotientFamily {
    pub fn morphism_type(self, n: u32) -> MorphismType {
        let (src, tgt) = match self {
            Self::Cokernel => (vec![(-2, 1), (-1, n - 1)], vec![(0, n)]),
            Self::CubicTwist => (vec![(-3, 1), (-1, n)], vec![(0, n + 1)]),
        };
        MorphismType::from_parts(&src, &tgt, &[]).expect("well-formed family")
    }

    pub fn fiber_dim(self, n: u64) -> u64 {
        match self {
            Self::Cokernel => 3 * n + 2,
            Self::CubicTwist => 4 * n + 9,
        }
    }

    pub fn base_dim(self, n: u64) -> u64 {
        match self {
            Self::Cokernel => n * n - n,
            Self::CubicTwist => n * n + n,
        }
    }
}

impl FromStr for QuotientFamily {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, TypeError> {
        match s {
            "cokernel" => Ok(Self::Cokernel),
            "cubic-twist" => Ok(Self::CubicTwist),
            other => Err(TypeError::BadSpec(other.to_string())),
        }
    }
}

/// Compares the fiber-bundle dimension with `dim W - dim G`.
pub fn quotient_dim_crosscheck(family: QuotientFamily, n: u32) -> bool {
    let t = family.morphism_type(n);
    let lhs = family.fiber_dim(n as u64) + family.base_dim(n as u64);
    lhs as i64 == hom_space_dim(&t) as i64 - aut_group_dim(&t) as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ty(s: &str) -> MorphismType {
        s.parse().unwrap()
    }

    #[test]
    fn hom_dims() {
        assert_eq!(hom_dim(-2, 0), 6);
        assert_eq!(hom_dim(-1, -1), 1);
        assert_eq!(hom_dim(0, -1), 0);
        assert_eq!(hom_space_dim(&ty("src=(-2)x1,(-1)x2 tgt=(0)x3")), 36);
        assert_eq!(hom_space_dim(&ty("src=(-2)x2,(-1)x2 tgt=(-1)x1,(0)x3 zero=(2,1)")), 60);
        assert_eq!(hom_space_dim(&ty("src=(-2)x4 tgt=(-1)x3,(1)x1")), 76);
    }

    #[test]
    fn aut_dims() {
        assert_eq!(aut_group_dim(&ty("src=(-2)x1,(-1)x2 tgt=(0)x3")), 19);
        assert_eq!(aut_group_dim(&ty("src=(-2)x3,(-1)x3 tgt=(-1)x2,(0)x4")), 88);
        assert_eq!(aut_group_dim(&ty("src=(-2)x4 tgt=(-1)x3,(1)x1")), 43);
        assert_eq!(aut_group_dim(&ty("src=(-2)x3 tgt=(0)x5")), 9 + 25 - 1);
    }

    #[test]
    fn stabilizers() {
        assert_eq!(stabilizer_dim(StabilizerRule::NMinus1, 5).unwrap(), 4);
        assert_eq!(stabilizer_dim(StabilizerRule::Trivial, 9).unwrap(), 0);
        assert_eq!(stabilizer_dim(StabilizerRule::FourNMinus11, 10).unwrap(), 29);
        assert!(stabilizer_dim(StabilizerRule::FourNMinus11, 2).is_err());
        for r in ["trivial", "n-1", "n-2", "2n-2", "4n-11"] {
            assert_eq!(r.parse::<StabilizerRule>().unwrap().to_string(), r);
        }
    }

    #[test]
    fn crosschecks() {
        for n in 1..=10 {
            assert!(quotient_dim_crosscheck(QuotientFamily::Cokernel, n));
        }
        for n in 1..=3 {
            assert!(quotient_dim_crosscheck(QuotientFamily::CubicTwist, n));
        }
    }

    #[test]
    fn parsing_drops_empty_summands() {
        let t = ty("src=(-2)x2,(-1)x0 tgt=(-1)x1,(0)x3 zero=(2,1)");
        assert_eq!(t.to_string(), "src=(-2)x2 tgt=(-1)x1,(0)x3");
        let t = ty("src=(-2)x2,(-1)x3 tgt=(-1)x0,(0)x3 zero=(2,1)");
        assert!(t.zeroed().is_empty());
        assert!("src=(-1)x1,(-2)x1 tgt=(0)x1".parse::<MorphismType>().is_err());
        assert!("src=(0)x1 tgt=(-1)x1 zero=(1,1)".parse::<MorphismType>().is_err());
        let spec: ResolutionSpec = "src=(-2)x1 tgt=(0)x1 ker=(-3)".parse().unwrap();
        assert_eq!(spec.kernel, Some(-3));
    }

    #[test]
    fn dual_types() {
        let t = ty("src=(-2)x1,(-1)x2 tgt=(0)x3");
        assert_eq!(t.dual().to_string(), "src=(-2)x3 tgt=(-1)x2,(0)x1");
        let t = ty("src=(-2)x4 tgt=(-1)x3,(1)x1");
        assert_eq!(t.dual().to_string(), "src=(-3)x1,(-1)x3 tgt=(0)x4");
        let t = ty("src=(-2)x3,(-1)x2 tgt=(-1)x2,(0)x3 zero=(2,1)");
        assert_eq!(t.dual().to_string(), "src=(-2)x3,(-1)x2 tgt=(-1)x2,(0)x3 zero=(2,1)");
    }

    #[test]
    fn single_summand_aut() {
        for (k, m) in [(1u32, 1u32), (2, 3), (4, 2)] {
            let t = MorphismType::from_parts(&[(-2, k)], &[(0, m)], &[]).unwrap();
            assert_eq!(aut_group_dim(&t), (k * k + m * m - 1) as u64);
        }
    }

    proptest! {
        #[test]
        fn hom_dim_twist_invariant(a in -10i64..10, b in -10i64..10, k in -10i64..10) {
            prop_assert_eq!(hom_dim(a, b), hom_dim(a + k, b + k));
        }

        #[test]
        fn dual_is_involution(m1 in 0u32..4, m2 in 1u32..4, n1 in 0u32..3, n2 in 1u32..4, z in any::<bool>()) {
            let zero = if z { vec![(2, 1)] } else { vec![] };
            let t = MorphismType::from_parts(&[(-2, m1), (-1, m2)], &[(-1, n1), (0, n2)], &zero).unwrap();
            prop_assert_eq!(t.dual().dual(), t);
        }
    }
}
