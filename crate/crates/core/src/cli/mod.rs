//! Command-line front end: `screen`, `fit` and `simulate`.
//!
//! Reports are `key = value` lines followed by `## name` sections holding
//! tab-separated tables. Each report has a sidecar `<out>.manifest` with the
//! resolved parameters, input digests and warnings.

mod manifest;
mod table;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::data::{degenerate_columns, standardize, Dataset, EffectIndex, Family};
use crate::error::Error;
use crate::penalize::{
    check_sh, kappa_ebic, lambda_path_gic, logistic_select, prediction_deviance, CoefficientSet, Method,
};
use crate::screening::{screen_scores, AcorScores, shrunk_variable_set, ScreenSize, ShrunkSet};
use crate::simulate::{aggregate, coverage_table, hierarchy_table, run_scenario, selection_table, SimConfig};

pub use manifest::{sha256_hex, RunManifest};
pub use table::{parse_csv, read_csv, write_csv, Table};

pub const EXIT_OK: i32 = 0;
/// Bad flags or an unwritable output path.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CSV: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_SIZE: i32 = 4;
pub const EXIT_OPTIMIZER: i32 = 5;
pub const EXIT_CONFIG: i32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn csv(message: impl Into<String>) -> Self {
        Self::new(EXIT_CSV, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroVarianceColumn(_)
            | Error::ZeroVarianceResponse
            | Error::DegenerateBinaryResponse
            | Error::DegenerateColumn(_) => EXIT_DEGENERATE,
            Error::InvalidGamma(_) => EXIT_SIZE,
            Error::PathFailed | Error::MaxSweepsExceeded(_) | Error::AllReplicatesFailed => EXIT_OPTIMIZER,
            _ => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "acorsis", version, about = "Aggregated-correlation interaction screening and selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every variable and keep the top d.
    Screen(ScreenArgs),
    /// Screen, then select a hierarchical interaction model.
    Fit(FitArgs),
    /// Run a Monte-Carlo configuration and write summary tables.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct SizeArgs {
    /// Keep [gamma n] variables (default gamma = 1/ln n).
    #[arg(long)]
    gamma: Option<f64>,
    /// Keep exactly d variables.
    #[arg(long)]
    d: Option<usize>,
}

impl SizeArgs {
    fn size(&self, n: usize) -> ScreenSize {
        match (self.gamma, self.d) {
            (Some(g), _) => ScreenSize::Gamma(g),
            (None, Some(d)) => ScreenSize::Fixed(d),
            (None, None) => ScreenSize::conventional(n),
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    #[arg(long, default_value = "gaussian")]
    family: Family,
    #[command(flatten)]
    size: SizeArgs,
    /// Report path; the manifest goes to `<out>.manifest`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "ACORSIS_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "gresh")]
    method: Method,
    /// GIC weight: a nonnegative number or `auto` for ln p · ln ln n.
    #[arg(long, default_value = "auto")]
    kappa: String,
    /// Recorded in the manifest; fitting itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Held-out CSV with the same columns, scored with the fitted model.
    #[arg(long)]
    test_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "ACORSIS_THREADS")]
    threads: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::Screen(a) => cmd_screen(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn resolve_threads(t: Option<usize>) -> Result<usize, CliError> {
    match t {
        Some(0) => Err(CliError::io("--threads must be at least 1")),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Loaded, checked and standardised input.
struct Loaded {
    ds: Dataset,
    names: Vec<String>,
}

fn load(args: &DataArgs, m: &mut RunManifest) -> Result<Loaded, CliError> {
    let (table, bytes) = read_csv(&args.data)?;
    m.input(&args.data, &bytes);
    let (raw_y, raw_x, names) = table.split_response(&args.response)?;
    let n = raw_y.len();
    let bad = degenerate_columns(&raw_x, n);
    if !bad.is_empty() {
        let list: Vec<&str> = bad.iter().map(|&j| names[j - 1].as_str()).collect();
        return Err(CliError::new(
            EXIT_DEGENERATE,
            format!("columns with zero variance: {}", list.join(", ")),
        ));
    }
    let ds = standardize(&raw_y, &raw_x, names.len(), args.family).map_err(|e| {
        let mut c = CliError::from(e);
        c.message = format!("response '{}': {}", args.response, c.message);
        c
    })?;
    Ok(Loaded { ds, names })
}

fn screen_step(args: &DataArgs, ld: &Loaded, m: &mut RunManifest) -> Result<(AcorScores, ShrunkSet), CliError> {
    let threads = resolve_threads(args.threads)?;
    let (n, p) = (ld.ds.n(), ld.ds.p());
    let size = args.size.size(n);
    match size {
        ScreenSize::Gamma(g) => m.param("gamma", g),
        ScreenSize::Fixed(_) => {}
    }
    let d = size.resolve(n)?;
    m.param("d", d);
    m.param("threads", threads);
    if d > p {
        m.warn(format!("d = {d} exceeds p = {p}; keeping all {p} variables"));
    }
    let scores = screen_scores(&ld.ds, threads)?;
    if scores.zero_variance_count() > 0 {
        m.warn(format!("{} constant product columns scored 0", scores.zero_variance_count()));
    }
    let set = shrunk_variable_set(&scores, n, size)?;
    Ok((scores, set))
}

fn common_params(args: &DataArgs, ld: &Loaded, m: &mut RunManifest) {
    m.param("data", args.data.display());
    m.param("response", &args.response);
    m.param("family", args.family);
    m.param("n", ld.ds.n());
    m.param("p", ld.ds.p());
}

fn manifest_name(out: &Path) -> String {
    RunManifest::sidecar(out)
        .file_name()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn write_outputs(out: &Path, report: &str, m: &RunManifest) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(out, report).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    m.write(&RunManifest::sidecar(out))
}

fn var_name(names: &[String], j: usize) -> &str {
    if j == 0 {
        "(main)"
    } else {
        &names[j - 1]
    }
}

fn screen_report(ld: &Loaded, scores: &AcorScores, set: &ShrunkSet, out: &Path) -> String {
    let mut r = String::new();
    let _ = writeln!(r, "command = screen");
    let _ = writeln!(r, "manifest = {}", manifest_name(out));
    let _ = writeln!(r, "n = {}", ld.ds.n());
    let _ = writeln!(r, "p = {}", ld.ds.p());
    let _ = writeln!(r, "family = {}", ld.ds.family());
    let _ = writeln!(r, "d = {}", set.d);
    let _ = writeln!(r, "kept = {}", set.len());
    let kept: Vec<&str> = set.indices.iter().map(|&j| var_name(&ld.names, j)).collect();
    let _ = writeln!(r, "selected = {}", kept.join(","));
    let _ = writeln!(r, "\n## scores");
    let _ = writeln!(r, "rank\tvariable\tindex\tscore\tpartner\tkept");
    for (rank, j) in scores.ranking().into_iter().enumerate() {
        let _ = writeln!(
            r,
            "{}\t{}\t{}\t{:.10}\t{}\t{}",
            rank + 1,
            ld.names[j - 1],
            j,
            scores.score(j),
            var_name(&ld.names, scores.partner(j)),
            set.contains(j)
        );
    }
    r
}

fn cmd_screen(a: &ScreenArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut m = RunManifest::new("screen");
    let ld = load(&a.data, &mut m)?;
    common_params(&a.data, &ld, &mut m);
    let (scores, set) = screen_step(&a.data, &ld, &mut m)?;
    let report = screen_report(&ld, &scores, &set, &a.data.out);
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_outputs(&a.data.out, &report, &m)
}

fn parse_kappa(s: &str, p: usize, n: usize) -> Result<f64, CliError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(kappa_ebic(p, n));
    }
    match s.parse::<f64>() {
        Ok(k) if k >= 0.0 && k.is_finite() => Ok(k),
        _ => Err(CliError::io(format!("--kappa must be 'auto' or a nonnegative number, got '{s}'"))),
    }
}

fn term(names: &[String], e: EffectIndex) -> String {
    if e.is_main() {
        names[e.k - 1].clone()
    } else {
        format!("{}:{}", names[e.j - 1], names[e.k - 1])
    }
}

fn coefficient_block(r: &mut String, names: &[String], c: &CoefficientSet, p_values: Option<&std::collections::BTreeMap<EffectIndex, f64>>) {
    let _ = writeln!(r, "\n## coefficients");
    let _ = writeln!(r, "term\tj\tk\tcoefficient{}", if p_values.is_some() { "\tp_value" } else { "" });
    let _ = writeln!(r, "(intercept)\t0\t0\t{:.10}{}", c.beta0, if p_values.is_some() { "\tNA" } else { "" });
    let effects = c
        .selected_mains()
        .into_iter()
        .map(EffectIndex::main)
        .chain(c.selected_interactions());
    for e in effects {
        let b = if e.is_main() { c.main_coef(e.k) } else { c.inter_coef(e.j, e.k) };
        let _ = write!(r, "{}\t{}\t{}\t{:.10}", term(names, e), e.j, e.k, b);
        if let Some(pv) = p_values {
            match pv.get(&e) {
                Some(v) => {
                    let _ = write!(r, "\t{v:.6e}");
                }
                None => r.push_str("\tNA"),
            }
        }
        r.push('\n');
    }
}

fn test_set(path: &Path, args: &DataArgs, ld: &Loaded, m: &mut RunManifest) -> Result<Dataset, CliError> {
    let (table, bytes) = read_csv(path)?;
    m.input(path, &bytes);
    let (y, x, names) = table.split_response(&args.response)?;
    if names != ld.names {
        return Err(CliError::csv(format!(
            "{}: predictor columns differ from the training data",
            path.display()
        )));
    }
    Ok(ld.ds.standardize_like(&y, &x)?)
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut m = RunManifest::new("fit");
    m.seed = Some(a.seed);
    let ld = load(&a.data, &mut m)?;
    common_params(&a.data, &ld, &mut m);
    let (n, p) = (ld.ds.n(), ld.ds.p());
    let kappa = parse_kappa(&a.kappa, p, n)?;
    let (_, set) = screen_step(&a.data, &ld, &mut m)?;
    m.param("kappa", kappa);
    let test = a
        .test_data
        .as_ref()
        .map(|t| test_set(t, &a.data, &ld, &mut m))
        .transpose()?;

    let out = &a.data.out;
    let mut r = String::new();
    let _ = writeln!(r, "command = fit");
    let _ = writeln!(r, "manifest = {}", manifest_name(out));
    let _ = writeln!(r, "n = {n}");
    let _ = writeln!(r, "p = {p}");
    let _ = writeln!(r, "family = {}", a.data.family);
    let _ = writeln!(r, "d = {}", set.d);
    let kept: Vec<&str> = set.indices.iter().map(|&j| var_name(&ld.names, j)).collect();
    let _ = writeln!(r, "screened = {}", kept.join(","));
    let _ = writeln!(r, "kappa = {kappa}");
    let _ = writeln!(r, "coefficient_scale = standardized");

    match a.data.family {
        Family::Gaussian => {
            m.param("method", a.method);
            let res = lambda_path_gic(&ld.ds, &set.indices, a.method, kappa).map_err(|e| {
                let mut c = CliError::from(e);
                c.message = format!(
                    "{} path over {} screened variables: {}",
                    a.method,
                    set.len(),
                    c.message
                );
                c
            })?;
            let failed = res.records.iter().filter(|g| !g.converged).count();
            if failed > 0 {
                m.warn(format!("{failed} path points did not converge and were excluded"));
            }
            let rec = res.chosen_record();
            let sh = check_sh(&res.model);
            let _ = writeln!(r, "method = {}", a.method);
            let _ = writeln!(r, "lambda1 = {:.10}", rec.lambda1);
            let _ = writeln!(r, "lambda2 = {:.10}", rec.lambda2);
            let _ = writeln!(r, "gic = {:.10}", rec.gic);
            let _ = writeln!(r, "loglik = {:.10}", rec.loglik);
            let _ = writeln!(r, "sigma2_hat = {:.10}", rec.sigma2_hat);
            let _ = writeln!(r, "df = {}", rec.df);
            let _ = writeln!(r, "sh_satisfied = {}", sh.satisfied);
            if let Some(t) = &test {
                let eta = res.model.linear_predictor(t);
                let mse = t.y().iter().zip(&eta).map(|(y, e)| (y - e) * (y - e)).sum::<f64>() / t.n() as f64;
                let _ = writeln!(r, "test_mse = {mse:.10}");
            }
            coefficient_block(&mut r, &ld.names, &res.model, None);
            let _ = writeln!(r, "\n## gic_path");
            let _ = writeln!(r, "point\tlambda1\tlambda2\tdf\tsigma2_hat\tloglik\tgic\tconverged\teligible\tchosen");
            for (i, g) in res.records.iter().enumerate() {
                let _ = writeln!(
                    r,
                    "{}\t{:.10}\t{:.10}\t{}\t{:.10}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                    i + 1,
                    g.lambda1,
                    g.lambda2,
                    g.df,
                    g.sigma2_hat,
                    g.loglik,
                    g.gic,
                    g.converged,
                    g.eligible,
                    i == res.chosen
                );
            }
        }
        Family::Binomial => {
            m.param("method", "l1-logistic");
            let model = logistic_select(&ld.ds, &set.indices, kappa)?;
            for w in &model.warnings {
                m.warn(w.clone());
            }
            let sh = check_sh(&model.coefs);
            let _ = writeln!(r, "method = l1-logistic");
            let _ = writeln!(r, "lambda = {:.10}", model.lambda);
            let _ = writeln!(r, "gic = {:.10}", model.gic);
            let _ = writeln!(r, "df = {}", model.coefs.df());
            let _ = writeln!(r, "ridge_used = {}", model.ridge_used);
            let _ = writeln!(r, "sh_satisfied = {}", sh.satisfied);
            if let Some(t) = &test {
                let dev = prediction_deviance(&model.coefs, t)?;
                let _ = writeln!(r, "test_n = {}", t.n());
                let _ = writeln!(r, "test_deviance = {dev:.10}");
            }
            coefficient_block(&mut r, &ld.names, &model.coefs, Some(&model.p_values));
        }
    }
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_outputs(out, &r, &m)
}

pub const SIM_MANIFEST: &str = "manifest.txt";
pub const SIM_TABLES: [&str; 3] = ["coverage.tsv", "selection.tsv", "hierarchy.tsv"];

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut m = RunManifest::new("simulate");
    let text = std::fs::read(&a.config).map_err(|e| CliError::config(format!("{}: {e}", a.config.display())))?;
    m.input(&a.config, &text);
    let text = String::from_utf8(text).map_err(|_| CliError::config("config is not UTF-8"))?;
    let mut cfg = SimConfig::parse(&text).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let threads = resolve_threads(a.threads)?;
    let scenarios = cfg.scenarios();
    for sc in &scenarios {
        sc.validate().map_err(|e| CliError::config(e.to_string()))?;
    }
    m.seed = Some(cfg.seed);
    m.param("n", cfg.n);
    m.param("p", cfg.p);
    m.param("reps", cfg.reps);
    m.param("d", cfg.size.resolve(cfg.n)?);
    m.param("rho", cfg.rhos.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    m.param("cases", cfg.cases.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
    m.param("methods", cfg.methods.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
    m.param("threads", threads);

    let mut rows = Vec::new();
    for sc in &scenarios {
        for run in run_scenario(sc, &cfg.methods, threads)? {
            m.param(
                "failed_replicates",
                format!("{} rho={} case={} {}/{}", run.method, sc.rho, sc.case, run.failures.len(), sc.reps),
            );
            if let Some(first) = run.failures.first() {
                m.warn(format!("{} rho={} case={}: {first}", run.method, sc.rho, sc.case));
            }
            match aggregate(&run, sc.rho, sc.case) {
                Ok(row) => rows.push(row),
                Err(e) => m.warn(format!("{} rho={} case={}: {e}", run.method, sc.rho, sc.case)),
            }
        }
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(format!("{}: {e}", a.out.display())))?;
    let tables = [coverage_table(&rows), selection_table(&rows), hierarchy_table(&rows)];
    for (name, body) in SIM_TABLES.iter().zip(tables) {
        let path = a.out.join(name);
        let text = format!("# manifest = {SIM_MANIFEST}\n{body}");
        std::fs::write(&path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    }
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(&a.out.join(SIM_MANIFEST))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::ZeroVarianceColumn(2)).code, EXIT_DEGENERATE);
        assert_eq!(CliError::from(Error::DegenerateBinaryResponse).code, EXIT_DEGENERATE);
        assert_eq!(CliError::from(Error::InvalidGamma("x".into())).code, EXIT_SIZE);
        assert_eq!(CliError::from(Error::PathFailed).code, EXIT_OPTIMIZER);
    }

    #[test]
    fn kappa_flag() {
        assert!((parse_kappa("auto", 2000, 200).unwrap() - kappa_ebic(2000, 200)).abs() < 1e-15);
        assert_eq!(parse_kappa("0", 10, 10).unwrap(), 0.0);
        assert!(parse_kappa("-1", 10, 10).is_err());
        assert!(parse_kappa("x", 10, 10).is_err());
    }

    #[test]
    fn gamma_and_d_conflict() {
        let code = run(["acorsis", "screen", "--data", "a.csv", "--response", "y", "--out", "r", "--gamma", "0.1", "--d", "3"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn default_size_is_conventional() {
        let s = SizeArgs { gamma: None, d: None };
        assert_eq!(s.size(200).resolve(200).unwrap(), 37);
    }
}
