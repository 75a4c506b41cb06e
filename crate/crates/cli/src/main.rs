use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gvport::{simulate_arma, ArmaSpec, CovarianceForm, RngStream, StatisticKind};
use gvport_cli::asymptotic_cmd::{run_asymptotic, Query};
use gvport_cli::series::{format_series, read_series};
use gvport_cli::test_cmd::{run_test, TestOptions, DEFAULT_LAGS, DEFAULT_REPLICATES};
use gvport_cli::{exit_code, study_exit_code, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use gvport_studies::{RunOptions, StudyConfig};

#[derive(Parser)]
#[command(name = "gvport", version, about = "Generalized-variance portmanteau diagnostics for ARMA models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit ARMA(p, q) to a series and run the portmanteau tests.
    Test(TestArgs),
    /// Asymptotic null distribution of D_hat for a given ARMA model.
    Asymptotic(AsymptoticArgs),
    /// Run a simulation study described by a TOML config.
    Study(StudyArgs),
    /// Simulate a Gaussian ARMA series, one value per line.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Stat {
    Dhat,
    Lb,
    Bp,
}

impl From<Stat> for StatisticKind {
    fn from(s: Stat) -> Self {
        match s {
            Stat::Dhat => StatisticKind::DHat,
            Stat::Lb => StatisticKind::LjungBox,
            Stat::Bp => StatisticKind::BoxPierce,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Information,
    Projection,
}

impl From<Form> for CovarianceForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Information => CovarianceForm::Information,
            Form::Projection => CovarianceForm::Projection,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Series file: one value per line, or CSV with a header (see --column).
    #[arg(long)]
    file: PathBuf,
    /// Column name when the file is CSV with a header row.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Lags, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAGS)]
    m: Vec<usize>,
    /// Monte-Carlo replicates.
    #[arg(long = "N", default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    /// Statistic for the Monte-Carlo test.
    #[arg(long, value_enum, default_value_t = Stat::Dhat)]
    stat: Stat,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    phi: Vec<f64>,
    /// MA coefficients (minus-sign convention), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    #[arg(long)]
    m: usize,
    /// Evaluate F(x).
    #[arg(long, conflicts_with = "quantile")]
    x: Option<f64>,
    /// Evaluate the inverse of F at this probability.
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long, value_enum, default_value_t = Form::Information)]
    covariance: Form,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Divide the replication counts R and N by this factor.
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Output stem; writes <stem>.csv, <stem>.json and auxiliary tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    phi: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

fn cmd_test(a: TestArgs) -> i32 {
    let series = match read_series(&a.file, a.column.as_deref()) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_DATA, format!("{}: {e}", a.file.display())),
    };
    let opts = TestOptions {
        p: a.p,
        q: a.q,
        lags: a.m,
        replicates: a.replicates,
        statistic: a.stat.into(),
        seed: a.seed,
        threads: a.threads,
    };
    match run_test(&series, &opts) {
        Ok(report) => {
            if a.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            EXIT_OK
        }
        Err(e) => fail(exit_code(&e), e),
    }
}

fn cmd_asymptotic(a: AsymptoticArgs) -> i32 {
    if a.phi.len() != a.p || a.theta.len() != a.q {
        return fail(
            EXIT_USAGE,
            format!("--p {} needs {} --phi values and --q {} needs {} --theta values", a.p, a.p, a.q, a.q),
        );
    }
    let query = match (a.x, a.quantile) {
        (Some(x), _) => Query::Cdf(x),
        (None, Some(p)) => Query::Quantile(p),
        _ => Query::None,
    };
    match run_asymptotic(&a.phi, &a.theta, a.m, a.covariance.into(), query) {
        Ok(report) => {
            if a.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            EXIT_OK
        }
        Err(e) => fail(exit_code(&e), e),
    }
}

fn cmd_study(a: StudyArgs) -> i32 {
    if a.scale == 0 {
        return fail(EXIT_USAGE, "--scale must be at least 1");
    }
    let config = match StudyConfig::from_path(&a.config) {
        Ok(c) => c,
        Err(e) => return fail(study_exit_code(&e), e),
    };
    let Some(out) = a.out.clone().or_else(|| config.output.clone()) else {
        return fail(EXIT_USAGE, "no output path: pass --out or set `output` in the config");
    };
    let opts = RunOptions { threads: a.threads, scale: a.scale, progress: true };
    let report = match gvport_studies::run_study(&config, &opts) {
        Ok(r) => r,
        Err(e) => return fail(study_exit_code(&e), e),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match report.write(&out) {
        Ok(paths) => {
            eprintln!("wrote {} and {}", paths.csv.display(), paths.json.display());
            EXIT_OK
        }
        Err(e) => fail(study_exit_code(&e), e),
    }
}

fn cmd_simulate(a: SimulateArgs) -> i32 {
    let spec = match ArmaSpec::new(a.phi, a.theta, a.sigma2, a.mean) {
        Ok(s) => s,
        Err(e) => return fail(exit_code(&e), e),
    };
    let x = match simulate_arma(&spec, a.n, RngStream::new(a.seed, 0)) {
        Ok(x) => x,
        Err(e) => return fail(exit_code(&e), e),
    };
    let text = format_series(&x);
    match a.out {
        Some(path) => match std::fs::write(&path, text) {
            Ok(()) => EXIT_OK,
            Err(e) => fail(EXIT_DATA, format!("{}: {e}", path.display())),
        },
        None => {
            print!("{text}");
            EXIT_OK
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Asymptotic(a) => cmd_asymptotic(a),
        Command::Study(a) => cmd_study(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    ExitCode::from(code as u8)
}
