//! Command-line front end.

use crate::bundle::{MorphismType, ResolutionSpec};
use crate::duality::{complete_table, dual_type, serre_dual_table, PartialTable};
use crate::hilbert::{hilbert_of_resolution, is_fine, LinearClass};
use crate::poly::HomogeneousPoly;
use crate::polymatrix::{cubic_section, determinant, kernel_line, quartic_section, transpose_dual, PolyMatrix};
use crate::rat::{fmt_q, parse_q, Q};
use crate::region::{classify_shapes, dual_polarization, Polarization};
use crate::registry::{format_points, stratum_codim, CaseSpec, Registry, RegistryError};
use crate::stability::{requirement_holds, search_destabilizer, zeroed_violations, Verdict};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "sheafmod",
    version,
    about = "Polarization regions, stability checks and duality for plane sheaf resolutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Case id, e.g. `M(n+2,n):omega1`.
    #[arg(long)]
    pub case: String,
    /// Parameter for families; defaults to the only admitted value of single blocks.
    #[arg(long)]
    pub n: Option<i64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regenerate the summary table and compare it with the reference data.
    Table {
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        json: bool,
    },
    /// Admissible polarization region of a case.
    Region {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        json: bool,
    },
    /// Codimension of a stratum.
    Codim {
        #[command(flatten)]
        case: CaseArgs,
    },
    /// Check a matrix file against a case's conditions.
    Check {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        /// Write the witness here instead of standard output.
        #[arg(long)]
        witness: Option<PathBuf>,
        file: PathBuf,
    },
    /// Hilbert polynomial of a resolution or of a class `r,chi`.
    Hilbert {
        #[arg(long, conflicts_with = "class")]
        resolution: Option<String>,
        #[arg(long)]
        class: Option<String>,
    },
    /// Kernel line bundle of a k x (k+1) matrix.
    Kernel { file: PathBuf },
    /// Serre-dual of a type, polarization, matrix, cohomology table or case.
    Dual {
        #[arg(long = "type")]
        ty: Option<String>,
        /// Weights `l1,..;m1,..`, either all of them or all but the last on each side; needs `--type`.
        #[arg(long, requires = "ty")]
        polarization: Option<String>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// `r,chi,h0(F(-1)),h1(F),h1(F(x)Omega(1))`.
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        n: Option<i64>,
    },
    /// Matrix presentations of plane curves with a marked point or a marked pencil.
    Section {
        #[arg(long, conflicts_with = "quartic", requires = "point")]
        cubic: bool,
        #[arg(long, requires_all = ["l1", "l2"])]
        quartic: bool,
        /// Point `a,b,c` on the cubic.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        l1: Option<String>,
        #[arg(long)]
        l2: Option<String>,
        #[arg(long)]
        f: String,
    },
    /// Which zero-block shapes destabilize under a polarization.
    Classify {
        #[command(flatten)]
        case: CaseArgs,
        /// Weights `l1,..;m1,..`, full or free; defaults to the region's barycenter.
        #[arg(long)]
        polarization: Option<String>,
    },
}

/// Failure of a subcommand; all map to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{0}")]
    Domain(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn read_matrix(path: &Path) -> Result<PolyMatrix, CliError> {
    read(path)?.parse::<PolyMatrix>().map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str) -> Result<Vec<Q>, CliError> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| parse_q(x.trim()).map_err(domain)).collect()
}

pub fn parse_polarization(s: &str, t: &MorphismType) -> Result<Polarization, CliError> {
    let (l, m) =
        s.split_once(';').ok_or_else(|| CliError::Domain(format!("polarization `{s}` needs `;` between sides")))?;
    let (l, m) = (parse_list(l)?, parse_list(m)?);
    if l.len() + 1 == t.source.len() && m.len() + 1 == t.target.len() {
        let free: Vec<Q> = l.into_iter().chain(m).collect();
        let p = Polarization::from_free(t, &free);
        p.validate(t).map_err(domain)?;
        return Ok(p);
    }
    Polarization::new(t, l, m).map_err(domain)
}

fn instantiate(reg: &Registry, id: &str, n: Option<i64>) -> Result<CaseSpec, CliError> {
    let rec = reg.get(id)?;
    let n = match n {
        Some(n) => n,
        None if !rec.is_family() => rec.n_min,
        None => return Err(RegistryError::MissingN { id: id.into() }.into()),
    };
    Ok(rec.instantiate(n)?)
}

/// One rendered table row plus any disagreement with the reference data.
pub struct TableRow {
    pub case: CaseSpec,
    pub codim: u64,
    pub region: crate::region::Region,
    pub diffs: Vec<String>,
}

pub fn table_rows(reg: &Registry, only: Option<&str>, n: Option<i64>) -> Result<Vec<TableRow>, CliError> {
    let cases = match only {
        Some(id) => match n {
            Some(_) => vec![instantiate(reg, id, n)?],
            None => {
                let rec = reg.get(id)?;
                rec.ns().into_iter().map(|k| rec.instantiate(k)).collect::<Result<_, _>>()?
            }
        },
        None => reg.expand()?,
    };
    let mut rows = Vec::new();
    for case in cases {
        let codim = stratum_codim(&case)?;
        let region = case.region()?;
        let mut diffs = Vec::new();
        if codim as i64 != case.expected_codim {
            diffs.push(format!("codim: expected {}, computed {codim}", case.expected_codim));
        }
        if let Some(g) = case.golden_check(&region) {
            if !g.matches() {
                diffs.push(format!(
                    "region: expected {}, computed {}",
                    format_points(&g.expected),
                    format_points(&g.found)
                ));
            }
        }
        rows.push(TableRow { case, codim, region, diffs });
    }
    Ok(rows)
}

fn row_json(r: &TableRow) -> Value {
    json!({
        "id": r.case.id,
        "n": r.case.n,
        "moduli": r.case.moduli,
        "codim": r.codim,
        "region": r.region.to_json(),
        "resolution": r.case.resolution.ty.to_string(),
        "kernel": r.case.resolution.kernel,
        "quotient": r.case.quotient,
        "stabilizer_inferred": r.case.inferred,
        "matches_reference": r.diffs.is_empty(),
        "diffs": r.diffs,
    })
}

fn render_table(rows: &[TableRow], as_json: bool) -> String {
    if as_json {
        let v: Vec<Value> = rows.iter().map(row_json).collect();
        return serde_json::to_string_pretty(&v).expect("serializable") + "\n";
    }
    let mut out = String::new();
    for r in rows {
        let kernel = r.case.resolution.kernel.map(|k| format!(" ker=({k})")).unwrap_or_default();
        let status = if r.diffs.is_empty() { "ok" } else { "MISMATCH" };
        let _ = writeln!(
            out,
            "{:<24} {:<8} codim {:<3} {:<48} {}{}  [{}]",
            r.case.label(),
            r.case.moduli,
            r.codim,
            format!("{} {}", r.region.free_vars.join(","), r.region.describe()),
            r.case.resolution.ty,
            kernel,
            status
        );
        for d in &r.diffs {
            let _ = writeln!(out, "    - {d}");
        }
    }
    out
}

fn verdict_report(m: &PolyMatrix, v: &Verdict) -> Option<String> {
    let w = v.witness.as_ref()?;
    let vec_line = |x: &Vec<Q>| x.iter().map(fmt_q).collect::<Vec<_>>().join(" | ");
    let mut out = m.to_string();
    out.push_str("row-transform:\n");
    for u in &w.rows {
        out.push_str(&vec_line(u));
        out.push('\n');
    }
    out.push_str("column-transform:\n");
    for k in &w.cols {
        out.push_str(&vec_line(k));
        out.push('\n');
    }
    Some(out)
}

fn table_from_flag(s: &str) -> Result<crate::duality::CohomologyTable, CliError> {
    let v: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::Domain(format!("bad table entry `{x}`"))))
        .collect::<Result<_, _>>()?;
    let [r, chi, h0m1, h1, h1om] = v[..] else {
        return Err(CliError::Domain("table needs r,chi,h0(F(-1)),h1(F),h1(F(x)Omega(1))".into()));
    };
    let nonneg = |x: i64| u64::try_from(x).map_err(|_| CliError::Domain("cohomology must be nonnegative".into()));
    let known = PartialTable {
        h0m1: Some(nonneg(h0m1)?),
        h1: Some(nonneg(h1)?),
        h1om: Some(nonneg(h1om)?),
        ..Default::default()
    };
    complete_table(LinearClass::new(r, chi).map_err(domain)?, &known).map_err(domain)
}

fn parse_form(s: &str) -> Result<HomogeneousPoly, CliError> {
    s.parse().map_err(|e| CliError::Domain(format!("`{s}`: {e}")))
}

/// Runs one command, returning its standard output or the failure.
pub fn run(cmd: Command) -> Result<(String, bool), CliError> {
    let reg = Registry::from_env()?;
    let mut out = String::new();
    let mut ok = true;
    match cmd {
        Command::Table { case, n, json } => {
            let rows = table_rows(&reg, case.as_deref(), n)?;
            ok = rows.iter().all(|r| r.diffs.is_empty());
            out = render_table(&rows, json);
        }
        Command::Region { case, json } => {
            let c = instantiate(&reg, &case.case, case.n)?;
            let region = c.region()?;
            if json {
                out = serde_json::to_string_pretty(&region.to_json()).expect("serializable") + "\n";
            } else {
                let _ = writeln!(out, "{} ({}): {}", c.label(), region.free_vars.join(","), region.describe());
                for f in &region.facets {
                    let rel = if f.strict { "> 0" } else { ">= 0" };
                    let _ = writeln!(out, "  {} {rel}", crate::region::format_affine(&f.expr, &region.free_vars));
                }
                if c.catalog_incomplete {
                    let _ = writeln!(out, "  note: conditions beyond semistability are not modeled for this n");
                }
            }
        }
        Command::Codim { case } => {
            let c = instantiate(&reg, &case.case, case.n)?;
            let _ = writeln!(out, "{}", stratum_codim(&c)?);
        }
        Command::Check { case, seed, budget, witness, file } => {
            let c = instantiate(&reg, &case.case, case.n)?;
            let m = read_matrix(&file)?;
            let want = &c.resolution.ty;
            if m.ty().source != want.source || m.ty().target != want.target {
                return Err(CliError::Domain(format!("matrix type {} does not match case type {want}", m.ty())));
            }
            let zero_ok = zeroed_violations(&m, want).is_empty();
            let _ = writeln!(out, "zeroed-blocks: {}", if zero_ok { "ok" } else { "violated" });
            ok &= zero_ok;
            for req in &c.requirements {
                let holds = requirement_holds(&m, *req);
                ok &= holds;
                let _ = writeln!(out, "{req}: {}", if holds { "ok" } else { "violated" });
            }
            let p = c.interior_polarization()?;
            let v = search_destabilizer(&m, &p, budget, seed);
            let _ = writeln!(out, "polarization: {p}");
            let _ = writeln!(out, "verdict: {v}");
            if let Some(report) = verdict_report(&m, &v) {
                match witness {
                    Some(path) => std::fs::write(&path, report)
                        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?,
                    None => out.push_str(&report),
                }
            }
        }
        Command::Hilbert { resolution, class } => match (resolution, class) {
            (Some(spec), _) => {
                let spec: ResolutionSpec = spec.parse().map_err(domain)?;
                let p = hilbert_of_resolution(&spec.ty, spec.kernel);
                let _ = writeln!(out, "P(t) = {p}");
                if let Some(c) = p.as_linear() {
                    let _ = writeln!(out, "r = {}, chi = {}, fine = {}", c.r, c.chi, is_fine(c.r, c.chi));
                }
            }
            (None, Some(class)) => {
                let v = parse_list(&class)?;
                let [r, chi] = &v[..] else { return Err(CliError::Domain("class needs r,chi".into())) };
                let (r, chi) = (crate::rat::to_i64(r), crate::rat::to_i64(chi));
                let (Some(r), Some(chi)) = (r, chi) else {
                    return Err(CliError::Domain("class needs integers".into()));
                };
                let c = LinearClass::new(r, chi).map_err(domain)?;
                let _ = writeln!(out, "P(t) = {}", c.polynomial());
                let _ = writeln!(out, "dual: {}", c.dual().polynomial());
                let _ = writeln!(out, "fine = {}", is_fine(r, chi));
            }
            (None, None) => return Err(CliError::Domain("hilbert needs --resolution or --class".into())),
        },
        Command::Kernel { file } => {
            let m = read_matrix(&file)?;
            match kernel_line(&m).map_err(domain)? {
                Some(k) => {
                    let _ = writeln!(out, "{k}");
                }
                None => return Err(CliError::Domain("all maximal minors vanish".into())),
            }
        }
        Command::Dual { ty, polarization, matrix, table, case, n } => {
            let mut any = false;
            if let Some(ty) = ty {
                any = true;
                let t: MorphismType = ty.parse().map_err(domain)?;
                let _ = writeln!(out, "type: {}", dual_type(&t));
                if let Some(p) = polarization {
                    let p = parse_polarization(&p, &t)?;
                    let _ = writeln!(out, "polarization: {}", dual_polarization(&p, &t).map_err(domain)?);
                }
            }
            if let Some(path) = matrix {
                any = true;
                out.push_str(&transpose_dual(&read_matrix(&path)?).to_string());
            }
            if let Some(spec) = table {
                any = true;
                let _ = writeln!(out, "{}", serre_dual_table(&table_from_flag(&spec)?));
            }
            if let Some(id) = case {
                any = true;
                let c = instantiate(&reg, &id, n)?;
                let t = &c.resolution.ty;
                let _ = writeln!(out, "type: {}", dual_type(t));
                let _ = writeln!(out, "{}", serre_dual_table(&c.table()?));
                let p = c.interior_polarization()?;
                let _ = writeln!(out, "polarization: {p} -> {}", dual_polarization(&p, t).map_err(domain)?);
                if let Some(d) = &c.dual {
                    let _ = writeln!(out, "dual case: {d}");
                }
            }
            if !any {
                return Err(CliError::Domain("dual needs --type, --matrix, --table or --case".into()));
            }
        }
        Command::Section { cubic, quartic, point, l1, l2, f } => {
            let f = parse_form(&f)?;
            if cubic {
                let v = parse_list(point.as_deref().unwrap_or_default())?;
                let [a, b, c] = &v[..] else { return Err(CliError::Domain("point needs three coordinates".into())) };
                let s = cubic_section(&[a.clone(), b.clone(), c.clone()], &f).map_err(domain)?;
                out.push_str(&s.matrix.to_string());
                let det = determinant(&s.matrix).map_err(domain)?;
                let _ = writeln!(out, "det = {det}");
                let _ = writeln!(out, "det equals adapted cubic: {}", det == s.adapted);
            } else if quartic {
                let (l1, l2) =
                    (parse_form(l1.as_deref().unwrap_or_default())?, parse_form(l2.as_deref().unwrap_or_default())?);
                let s = quartic_section([&l1, &l2], &f).map_err(domain)?;
                out.push_str(&s.matrix.to_string());
                let _ = writeln!(out, "reconstruction equals f: {}", s.reconstruct() == f);
            } else {
                return Err(CliError::Domain("section needs --cubic or --quartic".into()));
            }
        }
        Command::Classify { case, polarization } => {
            let c = instantiate(&reg, &case.case, case.n)?;
            let t = &c.resolution.ty;
            let p = match polarization {
                Some(s) => parse_polarization(&s, t)?,
                None => c.interior_polarization()?,
            };
            let _ = writeln!(out, "polarization: {p}");
            for (s, bad) in classify_shapes(t, &p) {
                let _ = writeln!(out, "{s} {}", if bad { "destabilizing" } else { "allowed" });
            }
        }
    }
    Ok((out, ok))
}

/// Parses arguments, runs, prints; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
