use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jpac::bench::{self, Algorithm, BenchConfig, InstanceConfig, OutputFormat};
use jpac::nlpd::{self, Alpha2Mode};
use jpac::{feasibility, pnmd, verify, Error, IpmParams, LinkNetwork, NlpdParams, NormalizedChannel, PnmdParams};

/// Joint power and admission control solvers and benchmark harness.
#[derive(Parser, Debug)]
#[command(name = "jpac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random network instance as JSON.
    Gen(GenArgs),
    /// Run one algorithm on one instance and print the result as JSON.
    Solve(SolveArgs),
    /// Run the Monte-Carlo sweep and write CSV files.
    Bench(BenchArgs),
    /// Run the built-in invariant and oracle checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct AlgoParams {
    /// Exponent of the ℓp surrogate, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.2)]
    c1: f64,
    #[arg(long, default_value_t = 0.2)]
    c2: f64,
    #[arg(long, default_value_t = 4.0)]
    c3: f64,
    /// `default` or `value:<x>`.
    #[arg(long, default_value = "default")]
    alpha2_mode: String,
    /// KKT tolerance of the ℓp solver.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

impl AlgoParams {
    fn build(&self) -> Result<(NlpdParams, PnmdParams), Error> {
        let alpha2: Alpha2Mode = self.alpha2_mode.parse()?;
        let nlpd = NlpdParams {
            c1: self.c1,
            c2: self.c2,
            alpha2,
        };
        let pnmd = PnmdParams {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            alpha2,
            ipm: IpmParams {
                p: self.p,
                epsilon: self.epsilon,
                ..IpmParams::default()
            },
        };
        pnmd.ipm.validate()?;
        Ok((nlpd, pnmd))
    }
}

#[derive(Args, Debug)]
struct InstanceArgs {
    #[arg(long, default_value_t = 2000.0)]
    area_side_m: f64,
    #[arg(long, default_value_t = 400.0)]
    rx_radius_m: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma_db: f64,
    #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
    eta_dbm: f64,
    #[arg(long, default_value_t = 2.0)]
    budget_multiplier: f64,
    #[arg(long, default_value_t = 4.0)]
    pathloss_exponent: f64,
}

impl InstanceArgs {
    fn config(&self, seed: u64) -> InstanceConfig {
        InstanceConfig {
            area_side_m: self.area_side_m,
            rx_radius_m: self.rx_radius_m,
            gamma_db: self.gamma_db,
            eta_dbm: self.eta_dbm,
            budget_multiplier: self.budget_multiplier,
            pathloss_exponent: self.pathloss_exponent,
            seed,
            ..InstanceConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Number of links.
    #[arg(long, short = 'k')]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON file.
    input: PathBuf,
    #[arg(long, default_value = "pnmd")]
    algo: Algorithm,
    #[command(flatten)]
    params: AlgoParams,
    /// Include per-iteration solver statistics.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated network sizes.
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "10")]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of nlpd, pnmd, oracle.
    #[arg(long, value_delimiter = ',', default_value = "nlpd,pnmd")]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    params: AlgoParams,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output directory.
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Also write report.json.
    #[arg(long)]
    json: bool,
    /// Record wall-clock times (makes the CSVs run-dependent).
    #[arg(long)]
    timing: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cases per check.
    #[arg(long, default_value_t = 200)]
    rounds: usize,
}

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::NonFinite(_) | Error::Singular { .. } | Error::NotPositiveDefinite | Error::NegativeEntry { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_USAGE,
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn read_network(path: &Path) -> Result<LinkNetwork, Error> {
    LinkNetwork::from_json_str(&std::fs::read_to_string(path)?)
}

fn gen(args: GenArgs) -> Result<u8, Error> {
    let net = bench::generate_instance(&args.instance.config(args.seed), args.k, args.seed)?;
    write_output(args.out.as_deref(), &net.to_json_string()?)?;
    Ok(0)
}

fn solve(args: SolveArgs) -> Result<u8, Error> {
    let net = read_network(&args.input)?;
    let (nlpd_params, pnmd_params) = args.params.build()?;
    let body = match args.algo {
        Algorithm::Oracle => {
            let chan = NormalizedChannel::from_network(&net)?;
            let alpha = args.params.c2 / chan.budget_w().iter().sum::<f64>();
            serde_json::to_string_pretty(&feasibility::brute_force_optimum(&chan, alpha)?)?
        }
        algo => {
            let mut result = if algo == Algorithm::Nlpd {
                nlpd::run_nlpd(&net, &nlpd_params)?
            } else {
                pnmd::run_pnmd(&net, &pnmd_params)?
            };
            if !args.trace {
                result.iterations.clear();
            }
            result.to_json_string()?
        }
    };
    write_output(args.out.as_deref(), &body)?;
    Ok(0)
}

fn run_bench(args: BenchArgs) -> Result<u8, Error> {
    let (nlpd, pnmd) = args.params.build()?;
    let cfg = BenchConfig {
        instance: args.instance.config(args.seed),
        k_list: args.k_list,
        trials: args.trials,
        algorithms: args.algos,
        nlpd,
        pnmd,
        timing: args.timing,
        jobs: args.jobs.max(1),
    };
    let report = bench::run_benchmark(&cfg, |row| {
        log::info!(
            "K={} {} trial {}: {} links, {:e} W",
            row.k,
            row.algorithm,
            row.trial,
            row.supported,
            row.total_power_w
        )
    })?;
    let format = if args.json {
        OutputFormat::CsvAndJson
    } else {
        OutputFormat::Csv
    };
    for path in bench::emit(&report, format, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<u8, Error> {
    let mut failed = false;
    for check in verify::run_checks(args.seed, args.rounds)? {
        let verdict = if check.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} ({} cases, {} failures)",
            check.name, check.cases, check.failures
        );
        if let Some(detail) = &check.detail {
            println!("     first failure: {detail}");
        }
        failed |= !check.passed();
    }
    Ok(if failed { EXIT_NUMERICAL } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Verify(a) => run_verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
