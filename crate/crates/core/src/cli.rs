//! `oschar` command-line front end.
//!
//! Exit codes: `0` success or consistent verdict, `1` failed check or
//! rejected verdict, `2` invalid configuration or runtime error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use crate::densities::{compare_densities, default_grid, grid_points};
use crate::engine::{characterize, residual_table, write_residual_csv, ResidualRow};
use crate::montecarlo::{equation_test, gof_exponentiality, parse_data, TestReport};
use crate::suite::{failures_csv, run_identity_suite, SuiteGrid};
use crate::taylor_jet::{exp_jet, parse_rational};
use crate::{Error, Jet, ParentModel, Result, ShiftEquationSpec, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "oschar",
    version,
    about = "Checks the random-shift characterization of the exponential law"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact identity checks over a grid, or residuals of a given jet.
    Verify(VerifyArgs),
    /// Solve the Maclaurin recursion from f(0) = lambda.
    Solve(SolveArgs),
    /// Tabulate both side densities on a grid.
    Density(DensityArgs),
    /// Simulate both sides and compare them with a two-sample KS test.
    Mc(McArgs),
    /// Permutation test of exponentiality for observed data.
    Gof(GofArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A parent law or a jet file (`jet:path`).
#[derive(Clone, Debug)]
pub enum ModelArg {
    Parent(ParentModel),
    JetFile(PathBuf),
}

impl FromStr for ModelArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("jet:") {
            Some(path) if !path.is_empty() => Ok(Self::JetFile(PathBuf::from(path))),
            Some(_) => Err(Error::Parse("jet: needs a file path".into())),
            None => s.parse().map(Self::Parent),
        }
    }
}

impl ModelArg {
    fn parent(&self) -> Result<&ParentModel> {
        match self {
            Self::Parent(m) => Ok(m),
            Self::JetFile(_) => Err(Error::InvalidArgument(
                "this subcommand needs a parent law, not a jet file".into(),
            )),
        }
    }

    /// Jet of the given order, from the file or the model's closed form.
    fn jet(&self, order: usize) -> Result<Jet> {
        match self {
            Self::JetFile(path) => std::fs::read_to_string(path)?.parse(),
            Self::Parent(m) => m.exact_jet(order).ok_or_else(|| {
                Error::InvalidArgument(format!("no exact jet for {m}; use exp, mixexp or jet:path"))
            }),
        }
    }
}

fn parse_model(s: &str) -> std::result::Result<ModelArg, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `a:b:m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, m] = parts.as_slice() else {
            return Err(format!("grid {s:?} is not of the form a:b:m"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad grid bound {v:?}"))
        };
        Ok(Self {
            a: num(a)?,
            b: num(b)?,
            count: m
                .trim()
                .parse()
                .map_err(|_| format!("bad grid count {m:?}"))?,
        })
    }
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value = "two-sided")]
    pub variant: Variant,
}

impl SpecArgs {
    fn spec(&self) -> Result<ShiftEquationSpec> {
        ShiftEquationSpec::with_variant(self.n, self.k, self.variant)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 6)]
    pub nmax: u32,
    #[arg(long, default_value_t = 6)]
    pub rmax: u32,
    /// Check only this order (jet mode).
    #[arg(long)]
    pub r: Option<u32>,
    /// Flip one sign in the final identity to exercise the failure path.
    #[arg(long)]
    pub tamper: bool,
    /// Residuals of a jet (`jet:path`, `exp:λ`, `mixexp:...`) instead of the identity grid.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelArg>,
    #[arg(long, requires = "model")]
    pub n: Option<u32>,
    #[arg(long, requires = "n")]
    pub k: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// f(0), as an integer or `num/den`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 10)]
    pub rmax: usize,
    /// Where to write the solved jet; the comparison table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelArg,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Default: 64 points up to a high quantile of the left side.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelArg,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 200_000)]
    pub count: usize,
    #[arg(long, env = "OSCHAR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    /// One positive observation per line.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 999)]
    pub permutations: usize,
    #[arg(long, env = "OSCHAR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pass_fail(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let Some(model) = &args.model else {
        let grid = SuiteGrid::from_bounds(args.nmax, args.rmax)?;
        let outcome = run_identity_suite(&grid, args.tamper)?;
        emit(args.out.as_deref(), &failures_csv(&outcome.failures))?;
        eprintln!(
            "checked={} failures={}",
            outcome.checked,
            outcome.failures.len()
        );
        return Ok(pass_fail(outcome.passed()));
    };
    if args.tamper {
        return Err(Error::InvalidArgument(
            "--tamper applies to the identity grid only".into(),
        ));
    }
    let pairs: Vec<(u32, u32)> = match (args.n, args.k) {
        (Some(n), Some(k)) => vec![(n, k)],
        (Some(n), None) => (1..n).map(|k| (n, k)).collect(),
        _ => {
            if args.nmax < 2 {
                return Err(Error::InvalidArgument(format!(
                    "need nmax >= 2, got {}",
                    args.nmax
                )));
            }
            (2..=args.nmax)
                .flat_map(|n| (1..n).map(move |k| (n, k)))
                .collect()
        }
    };
    let r_hi = args.r.unwrap_or(args.rmax);
    let r_lo = args.r.unwrap_or(0);
    let jet = model.jet((args.nmax.max(args.n.unwrap_or(0)) + r_hi) as usize)?;
    let mut rows: Vec<ResidualRow> = Vec::new();
    for (n, k) in pairs {
        let spec = ShiftEquationSpec::new(n, k)?;
        rows.extend(
            residual_table(&jet, &spec, r_hi)?
                .into_iter()
                .filter(|row| row.r >= r_lo),
        );
    }
    let mut csv = Vec::new();
    write_residual_csv(&mut csv, &rows)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&csv))?;
    let nonzero = rows.iter().filter(|row| !row.residual.is_zero()).count();
    eprintln!("rows={} nonzero={nonzero}", rows.len());
    Ok(pass_fail(nonzero == 0))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let lambda = parse_rational(&args.lambda)?;
    let spec = ShiftEquationSpec::new(args.n, args.k)?;
    let solved = characterize(&lambda, &spec, args.rmax)?;
    let reference = exp_jet(&lambda, args.rmax)?;
    if let Some(path) = &args.out {
        std::fs::write(path, solved.to_text())?;
    }
    let mut table = String::from("m,solved,exp_jet,equal\n");
    let mut identical = true;
    for (m, (a, b)) in solved.derivs().iter().zip(reference.derivs()).enumerate() {
        identical &= a == b;
        let _ = writeln!(table, "{m},{a},{b},{}", a == b);
    }
    print!("{table}");
    Ok(pass_fail(identical))
}

pub fn cmd_density(args: &DensityArgs) -> Result<i32> {
    let model = args.model.parent()?;
    let spec = args.spec.spec()?;
    if args.threshold.is_nan() || args.threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be positive, got {}",
            args.threshold
        )));
    }
    let points = match args.grid {
        Some(g) => grid_points(g.a, g.b, g.count)?,
        None => default_grid(model, &spec, 64)?,
    };
    let grid = compare_densities(model, &spec, &points, args.quad_tol)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => grid.write_csv(&mut buf)?,
        Format::Json => grid.write_json(&mut buf)?,
    }
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    eprintln!("max_abs_diff={:e}", grid.max_abs_diff);
    Ok(pass_fail(grid.max_abs_diff < args.threshold))
}

fn report_text(report: &TestReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => format!(
            "statistic,p_value,n_lhs,n_rhs,seed,n,k,variant,alpha,verdict\n{},{},{},{},{},{},{},{},{},{}\n",
            report.statistic,
            report.p_value,
            report.n_lhs,
            report.n_rhs,
            report.seed,
            report.spec.n(),
            report.spec.k(),
            report.spec.variant(),
            report.alpha,
            serde_json::to_value(report.verdict).expect("verdict serialises").as_str().unwrap_or_default(),
        ),
    }
}

fn verdict_code(report: &TestReport) -> i32 {
    pass_fail(report.verdict == crate::montecarlo::Verdict::Consistent)
}

pub fn cmd_mc(args: &McArgs) -> Result<i32> {
    let model = args.model.parent()?;
    let spec = args.spec.spec()?;
    let report = equation_test(model, &spec, args.count, args.seed, args.alpha)?;
    emit(args.out.as_deref(), &report_text(&report, args.format))?;
    Ok(verdict_code(&report))
}

pub fn cmd_gof(args: &GofArgs) -> Result<i32> {
    let spec = args.spec.spec()?;
    let data = parse_data(&std::fs::read_to_string(&args.data)?)?;
    let report = gof_exponentiality(&data, &spec, args.permutations, args.seed, args.alpha)?;
    if let Some(note) = &report.note {
        eprintln!("note: {note}");
    }
    emit(args.out.as_deref(), &report_text(&report, args.format))?;
    Ok(verdict_code(&report))
}

pub fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Density(a) => cmd_density(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Gof(a) => cmd_gof(a),
    }
}

/// Parses `args` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_ERROR;
        }
        pool = pool.num_threads(threads);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("oschar").chain(args.iter().copied()))
    }

    #[test]
    fn model_and_grid_arguments() {
        assert!(matches!(
            "jet:/tmp/f.txt".parse::<ModelArg>(),
            Ok(ModelArg::JetFile(_))
        ));
        assert!("jet:".parse::<ModelArg>().is_err());
        assert!(matches!(
            "exp:2".parse::<ModelArg>(),
            Ok(ModelArg::Parent(_))
        ));
        assert_eq!(
            "0:8:64".parse::<GridSpec>().unwrap(),
            GridSpec {
                a: 0.0,
                b: 8.0,
                count: 64
            }
        );
        assert!("0:8".parse::<GridSpec>().is_err());
    }

    #[test]
    fn invalid_configurations_exit_2() {
        assert_eq!(code(&["verify", "--nmax", "0"]), EXIT_ERROR);
        assert_eq!(
            code(&["solve", "--lambda", "-1", "--n", "3", "--k", "2"]),
            EXIT_ERROR
        );
        assert_eq!(
            code(&["solve", "--lambda", "1", "--n", "3", "--k", "3"]),
            EXIT_ERROR
        );
        assert_eq!(
            code(&["mc", "--model", "exp:1", "--n", "3", "--k", "2", "--alpha", "0"]),
            EXIT_ERROR
        );
        assert_eq!(
            code(&[
                "density",
                "--model",
                "exp:1",
                "--n",
                "3",
                "--k",
                "2",
                "--quad-tol",
                "0"
            ]),
            EXIT_ERROR
        );
        assert_eq!(code(&["bogus"]), EXIT_ERROR);
        assert_eq!(code(&["--threads", "0", "verify"]), EXIT_ERROR);
    }

    #[test]
    fn verify_and_solve_exit_codes() {
        assert_eq!(code(&["verify", "--nmax", "4", "--rmax", "3"]), EXIT_OK);
        assert_eq!(
            code(&["verify", "--nmax", "4", "--rmax", "3", "--tamper"]),
            EXIT_FAIL
        );
        assert_eq!(
            code(&["verify", "--model", "exp:2", "--nmax", "4", "--rmax", "3"]),
            EXIT_OK
        );
        assert_eq!(
            code(&[
                "verify",
                "--model",
                "mixexp:0.5,1,0.5,2",
                "--n",
                "3",
                "--k",
                "2",
                "--rmax",
                "3"
            ]),
            EXIT_FAIL
        );
        assert_eq!(
            code(&["solve", "--lambda", "1/3", "--n", "5", "--k", "2", "--rmax", "6"]),
            EXIT_OK
        );
    }
}
