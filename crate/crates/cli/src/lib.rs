//! Argument parsing, subcommand dispatch and output types of the `causticlab` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use causticlab::caustic::{caustic_frame, CausticFrame, FrameConfig};
use causticlab::frobenius::{random_points, AxiomReport};
use causticlab::isocheck::{flat_levelt_t0, isocheck, CausticCurve, ConstancyReport, IsocheckConfig};
use causticlab::linalg::{CVec, C64};
use causticlab::monodromy::{compute_monodromy, MonodromyConfig, MonodromyData};
use causticlab::specfile::SpecFile;
use causticlab::{Error, FrobeniusManifold};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(
    name = "causticlab",
    version,
    about = "Caustics, Stokes data and isomonodromy of polynomial Frobenius manifolds"
)]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "CAUSTICLAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Frobenius axioms at seeded random points.
    Verify(VerifyArgs),
    /// Caustic frame, |V12| and Hertling m at a point of a caustic curve.
    Frame(PointArgs),
    /// Formal, Stokes, Levelt and connection data at a caustic point.
    Monodromy(MonodromyArgs),
    /// Constancy of the monodromy data along a caustic curve.
    Isocheck(IsocheckArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub spec: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    pub spec: PathBuf,
    /// Caustic curve name from the spec file.
    #[arg(long, requires = "s", conflicts_with = "point")]
    pub curve: Option<String>,
    /// Curve parameter.
    #[arg(long)]
    pub s: Option<f64>,
    /// Explicit point: comma-separated coordinates, each `re` or `re:im`.
    #[arg(long, required_unless_present = "curve")]
    pub point: Option<String>,
}

#[derive(Debug, Args)]
pub struct MonodromyArgs {
    #[command(flatten)]
    pub at: PointArgs,
    /// Truncation order of the formal solution.
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Write the JSON document here instead of stdout.
    #[arg(long = "json")]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IsocheckArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub curve: String,
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
}

/// Output of `frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub curve: Option<String>,
    pub s: Option<f64>,
    pub point: Vec<C64>,
    pub eigenvalues: Vec<C64>,
    #[serde(rename = "|V12|")]
    pub v12_abs: f64,
    pub m: f64,
    pub frame: CausticFrame,
}

/// Output of `monodromy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyOutput {
    pub curve: Option<String>,
    pub s: Option<f64>,
    pub point: Vec<C64>,
    pub m: f64,
    pub b_exp: Vec<C64>,
    /// Eigenvalues of the monodromy at the origin.
    pub spectrum: Vec<C64>,
    pub data: MonodromyData,
}

/// Output of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub seed: u64,
    pub samples: usize,
    pub report: AxiomReport,
}

/// Error document printed on stdout when a command fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorOutput {
    pub kind: String,
    pub message: String,
    /// Curve parameter of the failing sample.
    pub sample: Option<f64>,
    pub exit_code: i32,
}

/// Text for stdout and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_degeneracy() {
        EXIT_DEGENERATE
    } else {
        EXIT_USAGE
    }
}

pub fn error_output(e: &Error) -> ErrorOutput {
    ErrorOutput {
        kind: e.root().kind().to_string(),
        message: e.to_string(),
        sample: e.sample(),
        exit_code: exit_code_for(e),
    }
}

/// Configures the global rayon pool; a pool that already exists is kept.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a, cli.format),
        Command::Frame(a) => cmd_frame(a, cli.format),
        Command::Monodromy(a) => cmd_monodromy(a, cli.format),
        Command::Isocheck(a) => cmd_isocheck(a, cli.format),
    };
    result.unwrap_or_else(|e| Outcome { stdout: to_json(&error_output(&e)), code: exit_code_for(&e) })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<(SpecFile, FrobeniusManifold), Error> {
    let file = SpecFile::from_path(path)?;
    let (spec, _) = file.build()?;
    Ok((file, FrobeniusManifold::new(spec)?))
}

fn parse_coordinate(text: &str) -> Result<C64, Error> {
    let bad = || Error::InvalidSpec(format!("bad coordinate '{text}'"));
    let mut parts = text.trim().splitn(2, ':');
    let re: f64 = parts.next().unwrap_or("").trim().parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(t) => t.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    Ok(C64::new(re, im))
}

pub fn parse_point(text: &str, dim: usize) -> Result<Vec<C64>, Error> {
    let p: Vec<C64> = text.split(',').map(parse_coordinate).collect::<Result<_, _>>()?;
    if p.len() != dim {
        return Err(Error::ArityMismatch { expected: dim, found: p.len() });
    }
    Ok(p)
}

struct Located {
    curve: Option<String>,
    s: Option<f64>,
    point: Vec<C64>,
    tangents: Vec<CVec>,
}

fn locate(file: &SpecFile, m: &FrobeniusManifold, at: &PointArgs) -> Result<Located, Error> {
    match (&at.curve, at.s, &at.point) {
        (Some(name), Some(s), _) => {
            let curve: CausticCurve = file.curve(name)?;
            Ok(Located {
                curve: Some(name.clone()),
                s: Some(s),
                point: curve.point(s).map_err(|e| e.at_sample(s))?,
                tangents: curve.tangents(s).map_err(|e| e.at_sample(s))?,
            })
        }
        (_, _, Some(text)) => {
            Ok(Located { curve: None, s: None, point: parse_point(text, m.dim())?, tangents: vec![m.unit()] })
        }
        _ => Err(Error::InvalidSpec("either --curve with --s or --point is required".into())),
    }
}

fn frame_at(m: &FrobeniusManifold, loc: &Located) -> Result<CausticFrame, Error> {
    let r = caustic_frame(m, &loc.point, &loc.tangents, &FrameConfig::default());
    match loc.s {
        Some(s) => r.map_err(|e| e.at_sample(s)),
        None => r,
    }
}

pub fn cmd_verify(a: &VerifyArgs, format: Format) -> Result<Outcome, Error> {
    let (_, m) = load(&a.spec)?;
    let points = random_points(m.dim(), a.samples, a.seed);
    let report = m.verify_axioms(&points, a.tol)?;
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    let out = VerifyOutput { seed: a.seed, samples: a.samples, report };
    let stdout = match format {
        Format::Json => to_json(&out),
        Format::Table => verify_table(&out),
    };
    Ok(Outcome { stdout, code })
}

pub fn cmd_frame(a: &PointArgs, format: Format) -> Result<Outcome, Error> {
    let (file, m) = load(&a.spec)?;
    let loc = locate(&file, &m, a)?;
    let frame = frame_at(&m, &loc)?;
    let out = FrameOutput {
        curve: loc.curve,
        s: loc.s,
        point: loc.point,
        eigenvalues: frame.u.clone(),
        v12_abs: frame.v12_abs,
        m: frame.m,
        frame,
    };
    let stdout = match format {
        Format::Json => to_json(&out),
        Format::Table => frame_table(&out),
    };
    Ok(Outcome { stdout, code: EXIT_OK })
}

pub fn cmd_monodromy(a: &MonodromyArgs, format: Format) -> Result<Outcome, Error> {
    let (file, m) = load(&a.at.spec)?;
    let loc = locate(&file, &m, &a.at)?;
    let frame = frame_at(&m, &loc)?;
    let cfg = MonodromyConfig { order: a.order, levelt_t0: Some(flat_levelt_t0(&m, &frame)), ..Default::default() };
    let compute = || -> Result<MonodromyOutput, Error> {
        let data = compute_monodromy(&frame.system(), &cfg)?;
        Ok(MonodromyOutput {
            curve: loc.curve.clone(),
            s: loc.s,
            point: loc.point.clone(),
            m: frame.m,
            b_exp: data.b_exp.clone(),
            spectrum: data.monodromy_spectrum()?,
            data,
        })
    };
    let out = match loc.s {
        Some(s) => compute().map_err(|e| e.at_sample(s))?,
        None => compute()?,
    };
    let json = to_json(&out);
    let stdout = match (&a.json_out, format) {
        (Some(path), f) => {
            std::fs::write(path, &json)?;
            if f == Format::Table {
                monodromy_table(&out)
            } else {
                String::new()
            }
        }
        (None, Format::Json) => json,
        (None, Format::Table) => monodromy_table(&out),
    };
    Ok(Outcome { stdout, code: EXIT_OK })
}

pub fn cmd_isocheck(a: &IsocheckArgs, format: Format) -> Result<Outcome, Error> {
    let (file, m) = load(&a.spec)?;
    let curve = file.curve(&a.curve)?;
    let cfg = IsocheckConfig { samples: a.samples, ..Default::default() };
    let report = isocheck(&m, &curve, &cfg, &FrameConfig::default())?;
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    let stdout = match format {
        Format::Json => to_json(&report),
        Format::Table => isocheck_table(&report),
    };
    Ok(Outcome { stdout, code })
}

fn fmt_c(z: &C64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

fn verify_table(out: &VerifyOutput) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "points {}  seed {}  tol {:e}", out.samples, out.seed, r.tol);
    for (name, v) in [
        ("commutativity", r.max.commutativity),
        ("associativity", r.max.associativity),
        ("compatibility", r.max.compatibility),
        ("unit", r.max.unit),
        ("quasi-homogeneity", r.max.quasi_homogeneity),
        ("U symmetry", r.max.u_symmetry),
        ("Euler metric", r.max.euler_metric),
    ] {
        let _ = writeln!(s, "{name:<20} {v:>12.3e}");
    }
    let _ = writeln!(s, "{:<20} {}", "passed", r.passed);
    s
}

fn frame_table(out: &FrameOutput) -> String {
    let mut s = String::new();
    let point: Vec<String> = out.point.iter().map(fmt_c).collect();
    let _ = writeln!(s, "point       ({})", point.join(", "));
    for (k, u) in out.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "u{}          {}", k + 1, fmt_c(u));
    }
    let _ = writeln!(s, "|V12|       {:.12}", out.v12_abs);
    let _ = writeln!(s, "m           {:.12}", out.m);
    let _ = writeln!(s, "frame (columns N, f2, ..., fn)");
    let f = &out.frame.frame;
    for i in 0..f.nrows() {
        let row: Vec<String> = (0..f.ncols()).map(|j| format!("{:>28}", fmt_c(&f[(i, j)]))).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
    s
}

fn monodromy_table(out: &MonodromyOutput) -> String {
    let d = &out.data;
    let mut s = String::new();
    let _ = writeln!(s, "m           {:.12}", out.m);
    let b: Vec<String> = out.b_exp.iter().map(fmt_c).collect();
    let _ = writeln!(s, "B_exp       ({})", b.join(", "));
    let sp: Vec<String> = out.spectrum.iter().map(fmt_c).collect();
    let _ = writeln!(s, "spec M~     {{{}}}", sp.join(", "));
    let _ = writeln!(s, "phi {:.6}  eps {:.6}", d.sectors.phi, d.sectors.eps);
    for st in &d.stokes {
        let _ = writeln!(s, "S_{}", st.nu);
        for i in 0..st.matrix.nrows() {
            let row: Vec<String> =
                (0..st.matrix.ncols()).map(|j| format!("{:>28}", fmt_c(&st.matrix[(i, j)]))).collect();
            let _ = writeln!(s, "  {}", row.join(" "));
        }
    }
    let _ = writeln!(s, "C");
    for i in 0..d.connection.nrows() {
        let row: Vec<String> =
            (0..d.connection.ncols()).map(|j| format!("{:>28}", fmt_c(&d.connection[(i, j)]))).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
    let g = &d.diagnostics;
    let _ = writeln!(
        s,
        "R_match {:.3}  tail {:.1e}  liouville {:.1e}  stokes consistency {:.1e}  levelt loop {:.1e}",
        g.r_match, g.tail_estimate, g.liouville, g.stokes_consistency, g.levelt_loop
    );
    s
}

fn isocheck_table(r: &ConstancyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "curve {}", r.curve);
    let _ = writeln!(s, "{:>10} {:>16} {:>16} {:>10}", "s", "m", "|V12|", "phi");
    for x in &r.samples {
        let _ = writeln!(s, "{:>10.5} {:>16.12} {:>16.12} {:>10.5}", x.s, x.m, x.v12.norm(), x.phi);
    }
    let d = &r.deviations;
    let _ = writeln!(
        s,
        "max deviation  m {:.1e}  B_exp {:.1e}  Stokes {:.1e}  C {:.1e}  M~ {:.1e}  spectrum {:.1e}",
        d.m, d.b_exp, d.stokes, d.connection, d.monodromy, d.spectrum
    );
    let _ = writeln!(s, "sub-ranges {}  passed {}", r.subranges.len(), r.passed);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_parse() {
        let p = parse_point("0, 1:-2, 3.5", 3).unwrap();
        assert_eq!(p, vec![C64::new(0.0, 0.0), C64::new(1.0, -2.0), C64::new(3.5, 0.0)]);
        assert!(parse_point("1,2", 3).is_err());
        assert!(parse_point("1,x,2", 3).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn degenerate_errors_map_to_three() {
        let e = Error::SmallDivisor { i: 0, j: 1, gap: 0.0 }.at_sample(0.0);
        let out = error_output(&e);
        assert_eq!(out.exit_code, EXIT_DEGENERATE);
        assert_eq!(out.kind, "SmallDivisor");
        assert_eq!(out.sample, Some(0.0));
        assert_eq!(exit_code_for(&Error::UnknownCurve("x".into())), EXIT_USAGE);
    }
}
