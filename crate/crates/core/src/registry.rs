//! Registry of strata: one record per block of the summary table, expanded per admitted `n`.

use crate::bundle::{codimension, stabilizer_dim, ResolutionSpec, StabilizerRule, TypeError};
use crate::duality::{complete_table, CohomologyTable, DualityError, PartialTable};
use crate::expr::{eval, eval_bool, eval_int, substitute, ExprError};
use crate::hilbert::{HilbertError, LinearClass};
use crate::rat::{fmt_q, Q};
use crate::region::{
    admissible_region, allowed_shapes, free_names, AllowedMode, Polarization, Region, RegionError, Shape,
};
use crate::stability::Requirement;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Environment variable naming a registry file to use instead of the built-in one.
pub const REGISTRY_ENV: &str = "SHEAFMOD_REGISTRY";

/// Largest `n` examined for families without an upper bound.
pub const UNBOUNDED_LIMIT: i64 = 10;

const BUILTIN: &str = include_str!("../data/registry.toml");
const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed registry: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("registry version {0} is not supported")]
    Version(u32),
    #[error("duplicate case id `{0}`")]
    Duplicate(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("case `{id}` admits n in {min}..={max}, not {n}")]
    OutOfRange { id: String, n: i64, min: i64, max: i64 },
    #[error("case `{id}` needs --n")]
    MissingN { id: String },
    #[error("case `{id}`: {msg}")]
    Case { id: String, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Duality(#[from] DualityError),
}

/// A family of forbidden zero blocks, possibly indexed by `m`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRecord {
    pub rows: String,
    pub cols: String,
    #[serde(default)]
    pub m: Option<[String; 2]>,
    #[serde(default)]
    pub when: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenRecord {
    #[serde(default)]
    pub n: Option<i64>,
    pub vertices: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRecord {
    pub id: String,
    pub moduli: String,
    pub r: String,
    pub chi: String,
    pub n_min: i64,
    #[serde(default)]
    pub n_max: Option<i64>,
    #[serde(default)]
    pub catalog_incomplete_from: Option<i64>,
    pub conditions: BTreeMap<String, String>,
    #[serde(default)]
    pub derived: BTreeMap<String, String>,
    pub resolution: String,
    pub stabilizer: String,
    #[serde(default)]
    pub inferred: Option<String>,
    #[serde(default)]
    pub extra: Option<String>,
    pub codim: String,
    pub quotient: String,
    pub plot: Vec<String>,
    #[serde(default)]
    pub requirements: Vec<Requirement>,
    #[serde(default = "default_allowed")]
    pub allowed: AllowedMode,
    #[serde(default)]
    pub dual: Option<String>,
    pub forbidden: Vec<FamilyRecord>,
    pub golden: Vec<GoldenRecord>,
}

fn default_allowed() -> AllowedMode {
    AllowedMode::Rest
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    version: u32,
    case: Vec<CaseRecord>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    cases: Vec<CaseRecord>,
}

impl Registry {
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = toml::from_str(text)?;
        if file.version != SUPPORTED_VERSION {
            return Err(RegistryError::Version(file.version));
        }
        for (k, c) in file.case.iter().enumerate() {
            if file.case[..k].iter().any(|o| o.id == c.id) {
                return Err(RegistryError::Duplicate(c.id.clone()));
            }
        }
        Ok(Self { cases: file.case })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in registry is valid")
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| RegistryError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// The file named by `SHEAFMOD_REGISTRY`, or the built-in registry.
    pub fn from_env() -> Result<Self, RegistryError> {
        match std::env::var_os(REGISTRY_ENV) {
            Some(p) => Self::load(Path::new(&p)),
            None => Ok(Self::builtin()),
        }
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn get(&self, id: &str) -> Result<&CaseRecord, RegistryError> {
        self.cases.iter().find(|c| c.id == id).ok_or_else(|| RegistryError::UnknownCase(id.to_string()))
    }

    /// Every `(case, n)` pair the registry admits, in file order.
    pub fn expand(&self) -> Result<Vec<CaseSpec>, RegistryError> {
        let mut out = Vec::new();
        for c in &self.cases {
            for n in c.ns() {
                out.push(c.instantiate(n)?);
            }
        }
        Ok(out)
    }
}

fn partial(id: &str, map: &BTreeMap<String, String>, vars: &[(&str, i64)]) -> Result<PartialTable, RegistryError> {
    let mut t = PartialTable::default();
    for (k, v) in map {
        let value = eval_int(v, vars)?;
        let value = u64::try_from(value)
            .map_err(|_| RegistryError::Case { id: id.into(), msg: format!("{k} = {value} is negative") })?;
        let slot = match k.as_str() {
            "h0m1" => &mut t.h0m1,
            "h1m1" => &mut t.h1m1,
            "h0" => &mut t.h0,
            "h1" => &mut t.h1,
            "h0om" => &mut t.h0om,
            "h1om" => &mut t.h1om,
            _ => return Err(RegistryError::Case { id: id.into(), msg: format!("unknown cohomology entry `{k}`") }),
        };
        *slot = Some(value);
    }
    Ok(t)
}

fn merge(a: PartialTable, b: PartialTable) -> PartialTable {
    PartialTable {
        h0m1: a.h0m1.or(b.h0m1),
        h1m1: a.h1m1.or(b.h1m1),
        h0: a.h0.or(b.h0),
        h1: a.h1.or(b.h1),
        h0om: a.h0om.or(b.h0om),
        h1om: a.h1om.or(b.h1om),
    }
}

/// Parses `twist:count,...` into per-type counts, ignoring zero counts of absent twists.
fn counts(id: &str, spec: &str, twists: &[i64]) -> Result<Vec<u32>, RegistryError> {
    let bad = |msg: String| RegistryError::Case { id: id.into(), msg };
    let mut out = vec![0; twists.len()];
    for part in spec.split(',') {
        let (t, c) = part.split_once(':').ok_or_else(|| bad(format!("malformed block `{spec}`")))?;
        let t: i64 = t.trim().parse().map_err(|_| bad(format!("malformed twist in `{spec}`")))?;
        let c: u32 = c.trim().parse().map_err(|_| bad(format!("malformed count in `{spec}`")))?;
        match twists.iter().position(|&x| x == t) {
            Some(k) => out[k] += c,
            None if c == 0 => {}
            None => return Err(bad(format!("twist {t} is not in the resolution"))),
        }
    }
    Ok(out)
}

impl CaseRecord {
    /// Upper end of the admitted range, capped for unbounded families.
    pub fn n_max_effective(&self) -> i64 {
        self.n_max.unwrap_or(UNBOUNDED_LIMIT)
    }

    pub fn ns(&self) -> Vec<i64> {
        (self.n_min..=self.n_max_effective()).collect()
    }

    pub fn is_family(&self) -> bool {
        self.n_max != Some(self.n_min)
    }

    pub fn instantiate(&self, n: i64) -> Result<CaseSpec, RegistryError> {
        if n < self.n_min || self.n_max.is_some_and(|hi| n > hi) {
            return Err(RegistryError::OutOfRange {
                id: self.id.clone(),
                n,
                min: self.n_min,
                max: self.n_max_effective(),
            });
        }
        let vars = [("n", n)];
        let id = &self.id;
        let klass = LinearClass::new(eval_int(&self.r, &vars)?, eval_int(&self.chi, &vars)?)?;
        let resolution: ResolutionSpec = substitute(&self.resolution, &vars)?.parse()?;
        let ty = &resolution.ty;
        let src: Vec<i64> = ty.source.summands().iter().map(|s| s.twist).collect();
        let tgt: Vec<i64> = ty.target.summands().iter().map(|s| s.twist).collect();
        let mut forbidden = Vec::new();
        for fam in &self.forbidden {
            let ms: Vec<i64> = match &fam.m {
                Some([lo, hi]) => (eval_int(lo, &vars)?..=eval_int(hi, &vars)?).collect(),
                None => vec![0],
            };
            for m in ms {
                let vars = [("n", n), ("m", m)];
                if let Some(w) = &fam.when {
                    if !eval_bool(w, &vars)? {
                        continue;
                    }
                }
                let shape = Shape::new(
                    counts(id, &substitute(&fam.rows, &vars)?, &tgt)?,
                    counts(id, &substitute(&fam.cols, &vars)?, &src)?,
                );
                shape.validate(ty)?;
                if !forbidden.contains(&shape) {
                    forbidden.push(shape);
                }
            }
        }
        let stabilizer: StabilizerRule = self.stabilizer.parse()?;
        let extra = match &self.extra {
            Some(e) => u64::try_from(eval_int(e, &vars)?)
                .map_err(|_| RegistryError::Case { id: id.clone(), msg: "negative constraint count".into() })?,
            None => 0,
        };
        let golden = self
            .golden
            .iter()
            .find(|g| g.n == Some(n))
            .or_else(|| self.golden.iter().find(|g| g.n.is_none()))
            .map(|g| {
                let mut v = g
                    .vertices
                    .iter()
                    .map(|p| p.iter().map(|x| eval(x, &vars)).collect::<Result<Vec<Q>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                v.sort();
                Ok::<_, RegistryError>(v)
            })
            .transpose()?;
        Ok(CaseSpec {
            id: id.clone(),
            n,
            family: self.is_family(),
            moduli: substitute(&self.moduli, &vars)?,
            klass,
            stated: partial(id, &self.conditions, &vars)?,
            derived: partial(id, &self.derived, &vars)?,
            resolution,
            stabilizer,
            extra,
            expected_codim: eval_int(&self.codim, &vars)?,
            inferred: match &self.inferred {
                Some(w) => eval_bool(w, &vars)?,
                None => false,
            },
            catalog_incomplete: self.catalog_incomplete_from.is_some_and(|k| n >= k),
            quotient: self.quotient.clone(),
            plot: self.plot.clone(),
            allowed: self.allowed,
            forbidden,
            golden,
            requirements: self.requirements.clone(),
            dual: self.dual.clone(),
        })
    }
}

/// One block of the table at a fixed `n`.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub id: String,
    pub n: i64,
    /// The record admits more than one `n`.
    pub family: bool,
    pub moduli: String,
    pub klass: LinearClass,
    /// Cohomology conditions that define the stratum.
    pub stated: PartialTable,
    /// Further entries forced by the resolution, needed to complete the table.
    pub derived: PartialTable,
    pub resolution: ResolutionSpec,
    pub stabilizer: StabilizerRule,
    pub extra: u64,
    pub expected_codim: i64,
    /// The stabilizer rule is inferred from the codimension rather than proven.
    pub inferred: bool,
    pub catalog_incomplete: bool,
    pub quotient: String,
    pub plot: Vec<String>,
    pub allowed: AllowedMode,
    pub forbidden: Vec<Shape>,
    pub golden: Option<Vec<Vec<Q>>>,
    pub requirements: Vec<Requirement>,
    pub dual: Option<String>,
}

/// Result of comparing a computed region with the reference vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub expected: Vec<Vec<Q>>,
    pub found: Vec<Vec<Q>>,
}

impl GoldenCheck {
    pub fn matches(&self) -> bool {
        self.expected == self.found
    }
}

pub fn format_points(points: &[Vec<Q>]) -> String {
    points
        .iter()
        .map(|p| format!("({})", p.iter().map(fmt_q).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

impl CaseSpec {
    /// Label used in listings: the id, plus `n` for families.
    pub fn label(&self) -> String {
        if self.family {
            format!("{} n={}", self.id, self.n)
        } else {
            self.id.clone()
        }
    }

    pub fn table(&self) -> Result<CohomologyTable, RegistryError> {
        Ok(complete_table(self.klass, &merge(self.stated, self.derived))?)
    }

    pub fn stabilizer_dim(&self) -> Result<u64, RegistryError> {
        Ok(stabilizer_dim(self.stabilizer, self.n)?)
    }

    pub fn allowed_shapes(&self) -> Vec<Shape> {
        allowed_shapes(&self.resolution.ty, &self.forbidden, self.allowed)
    }

    /// The admissible region in the case's plot coordinates.
    pub fn region(&self) -> Result<Region, RegistryError> {
        self.region_in(&self.plot)
    }

    pub fn region_in(&self, coords: &[String]) -> Result<Region, RegistryError> {
        Ok(admissible_region(&self.resolution.ty, &self.forbidden, &self.allowed_shapes(), coords)?)
    }

    /// The barycenter of the admissible region, as a full polarization.
    pub fn interior_polarization(&self) -> Result<Polarization, RegistryError> {
        let t = &self.resolution.ty;
        let names = free_names(t);
        let region = self.region_in(&names)?;
        let point = region
            .barycenter()
            .ok_or_else(|| RegistryError::Case { id: self.id.clone(), msg: "empty admissible region".into() })?;
        Ok(Polarization::from_free(t, &point))
    }

    pub fn golden_check(&self, region: &Region) -> Option<GoldenCheck> {
        self.golden.clone().map(|expected| GoldenCheck { expected, found: region.vertices.clone() })
    }
}

/// `r^2 + 1 - (dim W_o - dim G + dim Stab)`; a negative value means the record is wrong.
pub fn stratum_codim(case: &CaseSpec) -> Result<u64, RegistryError> {
    let c = codimension(case.klass.r, &case.resolution.ty, case.extra, case.stabilizer_dim()?);
    u64::try_from(c).map_err(|_| RegistryError::Case { id: case.id.clone(), msg: format!("negative codimension {c}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::frac;

    #[test]
    fn builtin_registry_expands() {
        let reg = Registry::builtin();
        assert_eq!(reg.cases().len(), 16);
        let all = reg.expand().unwrap();
        assert!(all.iter().all(|c| c.forbidden.iter().all(|s| s.validate(&c.resolution.ty).is_ok())));
        let c = reg.get("M(n+2,n):omega1").unwrap().instantiate(3).unwrap();
        assert_eq!(c.resolution.ty.to_string(), "src=(-2)x2,(-1)x2 tgt=(-1)x1,(0)x3 zero=(2,1)");
        assert_eq!(stratum_codim(&c).unwrap(), 2);
        assert_eq!(c.golden.clone().unwrap()[1], vec![frac(1, 8), frac(1, 4)]);
        assert!(reg.get("M(n+2,n):omega0").unwrap().instantiate(4).unwrap().inferred);
        assert!(matches!(reg.get("M(7,4):omega2").unwrap().instantiate(5), Err(RegistryError::OutOfRange { .. })));
    }

    #[test]
    fn interior_polarization_lies_inside() {
        let c = Registry::builtin().get("M(n+2,n):omega1").unwrap().instantiate(3).unwrap();
        let p = c.interior_polarization().unwrap();
        assert!(p.validate(&c.resolution.ty).is_ok());
        let t = &c.resolution.ty;
        for s in &c.forbidden {
            assert!(crate::region::shape_margin(s, t).eval(&p) > Q::from_integer(0.into()));
        }
    }

    #[test]
    fn rejects_bad_records() {
        assert!(matches!(Registry::parse("version = 2\ncase = []"), Err(RegistryError::Version(2))));
        assert!(Registry::parse("version = 1\n[[case]]\nid = 3").is_err());
    }
}
