//! Monte-Carlo experiment harness.
//!
//! # Instance model
//!
//! Transmitters are uniform over an `area_side_m` square. Each receiver is
//! uniform (by area) in a disc of radius `rx_radius_m` around its transmitter.
//! Gains follow `g_kj = d_kj^-n` where `d_kj` is the distance from
//! transmitter `j` to receiver `k`, floored at `distance_floor_m`. Every link
//! gets the same SINR target and noise power, and a budget of
//! `budget_multiplier * gamma_k eta_k / g_kk`.
//!
//! # Random streams
//!
//! Reproducibility across platforms rests on two fixed algorithms:
//!
//! - per-trial seeds come from SplitMix64:
//!   `trial_seed = mix(mix(mix(master) ^ K) ^ trial)` where `mix(x)` is one
//!   SplitMix64 output for state `x`;
//! - each trial draws from ChaCha8 keyed by four consecutive SplitMix64
//!   outputs of `trial_seed` (little-endian, 32 bytes). A uniform draw is
//!   `(next_u64 >> 11) * 2^-53`.
//!
//! Links are drawn in order; for each link four uniforms `u1..u4` give the
//! transmitter `(side u1, side u2)` and the receiver offset at radius
//! `R sqrt(u3)`, angle `2 pi u4`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{self, ORACLE_MAX_LINKS};
use crate::model::{db_to_linear, dbm_to_watts, LinkNetwork, NormalizedChannel};
use crate::nlpd::{self, NlpdParams};
use crate::numerics::DenseMatrix;
use crate::pnmd::{self, PnmdParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceConfig {
    pub area_side_m: f64,
    pub rx_radius_m: f64,
    pub gamma_db: f64,
    pub eta_dbm: f64,
    pub budget_multiplier: f64,
    pub pathloss_exponent: f64,
    pub distance_floor_m: f64,
    /// Master seed from which per-trial seeds are derived.
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            area_side_m: 2000.0,
            rx_radius_m: 400.0,
            gamma_db: 2.0,
            eta_dbm: -90.0,
            budget_multiplier: 2.0,
            pathloss_exponent: 4.0,
            distance_floor_m: 1e-3,
            seed: 0,
        }
    }
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_side_m", self.area_side_m),
            ("rx_radius_m", self.rx_radius_m),
            ("pathloss_exponent", self.pathloss_exponent),
            ("distance_floor_m", self.distance_floor_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.budget_multiplier >= 1.0 && self.budget_multiplier.is_finite()) {
            return Err(Error::Config("budget_multiplier must be at least 1".into()));
        }
        if !self.gamma_db.is_finite() || !self.eta_dbm.is_finite() {
            return Err(Error::Config("gamma_db and eta_dbm must be finite".into()));
        }
        Ok(())
    }
}

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(x: u64) -> u64 {
    let mut s = x;
    splitmix64(&mut s)
}

/// Seed of trial `trial` at size `k` under master seed `master`.
pub fn trial_seed(master: u64, k: usize, trial: usize) -> u64 {
    mix(mix(mix(master) ^ k as u64) ^ trial as u64)
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self(ChaCha8Rng::from_seed(key))
    }

    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Draws a random network of `k` links.
pub fn generate_instance(cfg: &InstanceConfig, k: usize, seed: u64) -> Result<LinkNetwork> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::Config("an instance needs at least one link".into()));
    }
    let mut rng = Uniform::new(seed);
    let mut tx = Vec::with_capacity(k);
    let mut rx = Vec::with_capacity(k);
    for _ in 0..k {
        let (x, y) = (cfg.area_side_m * rng.next(), cfg.area_side_m * rng.next());
        let radius = cfg.rx_radius_m * rng.next().sqrt();
        let angle = 2.0 * std::f64::consts::PI * rng.next();
        tx.push((x, y));
        rx.push((x + radius * angle.cos(), y + radius * angle.sin()));
    }
    let mut gains = DenseMatrix::zeros(k, k);
    for (i, r) in rx.iter().enumerate() {
        for (j, t) in tx.iter().enumerate() {
            let d = ((r.0 - t.0).powi(2) + (r.1 - t.1).powi(2))
                .sqrt()
                .max(cfg.distance_floor_m);
            gains[(i, j)] = d.powf(-cfg.pathloss_exponent);
        }
    }
    let gamma = db_to_linear(cfg.gamma_db);
    let eta = dbm_to_watts(cfg.eta_dbm);
    let budget = (0..k)
        .map(|i| cfg.budget_multiplier * gamma * eta / gains[(i, i)])
        .collect();
    LinkNetwork::new(gains, vec![eta; k], vec![gamma; k], budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nlpd,
    Pnmd,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nlpd => "nlpd",
            Algorithm::Pnmd => "pnmd",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nlpd" => Ok(Algorithm::Nlpd),
            "pnmd" => Ok(Algorithm::Pnmd),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// What one algorithm achieved on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub supported: usize,
    pub total_power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub supported: usize,
    pub total_power_w: f64,
    pub wall_time_s: f64,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub algorithm: Algorithm,
    pub mean_supported: f64,
    pub mean_power_w: f64,
    pub mean_time_s: f64,
    /// Successful trials.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub k_list: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub rows: Vec<TrialRow>,
}

impl BenchReport {
    /// Means over successful trials, one row per `(K, algorithm)`.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out = Vec::new();
        for &k in &self.k_list {
            for &algorithm in &self.algorithms {
                let ok: Vec<&TrialRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.k == k && r.algorithm == algorithm && r.status == TrialStatus::Ok)
                    .collect();
                let n = ok.len();
                let mean = |f: &dyn Fn(&TrialRow) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / n as f64;
                out.push(SummaryRow {
                    k,
                    algorithm,
                    mean_supported: mean(&|r| r.supported as f64),
                    mean_power_w: mean(&|r| r.total_power_w),
                    mean_time_s: mean(&|r| r.wall_time_s),
                    n,
                });
            }
        }
        out
    }

    /// Rows for one `(K, algorithm)` pair in trial order.
    pub fn rows_for(&self, k: usize, algorithm: Algorithm) -> impl Iterator<Item = &TrialRow> {
        self.rows.iter().filter(move |r| r.k == k && r.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub instance: InstanceConfig,
    pub k_list: Vec<usize>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub nlpd: NlpdParams,
    pub pnmd: PnmdParams,
    /// Record wall-clock times; off keeps output byte-reproducible.
    pub timing: bool,
    /// Worker threads for trials (1 = run in the calling thread).
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            instance: InstanceConfig::default(),
            k_list: vec![10],
            trials: 200,
            algorithms: vec![Algorithm::Nlpd, Algorithm::Pnmd],
            nlpd: NlpdParams::default(),
            pnmd: PnmdParams::default(),
            timing: false,
            jobs: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.pnmd.ipm.validate()?;
        if self.k_list.contains(&0) {
            return Err(Error::Config("K values must be positive".into()));
        }
        if self.algorithms.contains(&Algorithm::Oracle) {
            if let Some(&k) = self.k_list.iter().find(|&&k| k > ORACLE_MAX_LINKS) {
                return Err(Error::TooManyLinks {
                    links: k,
                    cap: ORACLE_MAX_LINKS,
                });
            }
        }
        Ok(())
    }
}

/// Runs `algorithm` on `net` with the parameters in `cfg`.
pub fn run_algorithm(cfg: &BenchConfig, algorithm: Algorithm, net: &LinkNetwork) -> Result<Outcome> {
    match algorithm {
        Algorithm::Nlpd => {
            let r = nlpd::run_nlpd(net, &cfg.nlpd)?;
            Ok(Outcome {
                supported: r.supported.len(),
                total_power_w: r.total_power_w,
            })
        }
        Algorithm::Pnmd => {
            let r = pnmd::run_pnmd(net, &cfg.pnmd)?;
            Ok(Outcome {
                supported: r.supported.len(),
                total_power_w: r.total_power_w,
            })
        }
        Algorithm::Oracle => {
            let chan = NormalizedChannel::from_network(net)?;
            let alpha = cfg.nlpd.c2 / chan.budget_w().iter().sum::<f64>();
            let r = feasibility::brute_force_optimum(&chan, alpha)?;
            Ok(Outcome {
                supported: r.best_set.len(),
                total_power_w: r.total_power_w,
            })
        }
    }
}

/// Runs the sweep with the built-in algorithms.
pub fn run_benchmark(cfg: &BenchConfig, on_row: impl FnMut(&TrialRow)) -> Result<BenchReport> {
    run_benchmark_with(cfg, |alg, net| run_algorithm(cfg, alg, net), on_row)
}

/// Runs the sweep with a caller-supplied runner.
///
/// Every algorithm in a trial sees the same network. A runner error marks
/// that row as failed and the sweep continues. Rows reach `on_row` in
/// `(K, trial, algorithm)` order.
pub fn run_benchmark_with<R>(cfg: &BenchConfig, runner: R, mut on_row: impl FnMut(&TrialRow)) -> Result<BenchReport>
where
    R: Fn(Algorithm, &LinkNetwork) -> Result<Outcome> + Sync,
{
    cfg.validate()?;
    let one_trial = |k: usize, trial: usize| -> Result<Vec<TrialRow>> {
        let seed = trial_seed(cfg.instance.seed, k, trial);
        let net = generate_instance(&cfg.instance, k, seed)?;
        Ok(cfg
            .algorithms
            .iter()
            .map(|&algorithm| {
                let start = Instant::now();
                let result = runner(algorithm, &net);
                let elapsed = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
                match result {
                    Ok(o) => TrialRow {
                        k,
                        algorithm,
                        trial,
                        seed,
                        supported: o.supported,
                        total_power_w: o.total_power_w,
                        wall_time_s: elapsed,
                        status: TrialStatus::Ok,
                    },
                    Err(e) => {
                        log::warn!("{algorithm} failed on K = {k}, trial {trial}: {e}");
                        TrialRow {
                            k,
                            algorithm,
                            trial,
                            seed,
                            supported: 0,
                            total_power_w: 0.0,
                            wall_time_s: elapsed,
                            status: TrialStatus::Failed,
                        }
                    }
                }
            })
            .collect())
    };

    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        if cfg.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            let batches: Vec<Result<Vec<TrialRow>>> =
                pool.install(|| (0..cfg.trials).into_par_iter().map(|t| one_trial(k, t)).collect());
            for batch in batches {
                for row in batch? {
                    on_row(&row);
                    rows.push(row);
                }
            }
        } else {
            for t in 0..cfg.trials {
                for row in one_trial(k, t)? {
                    on_row(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(BenchReport {
        k_list: cfg.k_list.clone(),
        algorithms: cfg.algorithms.clone(),
        trials: cfg.trials,
        rows,
    })
}

/// Formats like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub const TRIALS_HEADER: &str = "K,algorithm,trial,seed,supported,total_power_w,wall_time_s,status";
pub const SUMMARY_HEADER: &str = "K,algorithm,mean_supported,mean_power_w,mean_time_s,n";

pub fn trials_csv(report: &BenchReport) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in &report.rows {
        let status = match r.status {
            TrialStatus::Ok => "ok",
            TrialStatus::Failed => "failed",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.algorithm,
            r.trial,
            r.seed,
            r.supported,
            fmt_g12(r.total_power_w),
            fmt_g12(r.wall_time_s),
            status
        )
        .expect("writing to a String");
    }
    out
}

pub fn summary_csv(report: &BenchReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in report.summary() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.k,
            s.algorithm,
            fmt_g12(s.mean_supported),
            fmt_g12(s.mean_power_w),
            fmt_g12(s.mean_time_s),
            s.n
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// CSV files plus a JSON mirror.
    CsvAndJson,
}

/// Writes `trials.csv` and `summary.csv` (and `report.json`) into `dir`.
pub fn emit(report: &BenchReport, format: OutputFormat, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &str| -> Result<()> {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(body.as_bytes())?;
        written.push(path);
        Ok(())
    };
    put("trials.csv", &trials_csv(report))?;
    put("summary.csv", &summary_csv(report))?;
    if format == OutputFormat::CsvAndJson {
        #[derive(Serialize)]
        struct Mirror<'a> {
            report: &'a BenchReport,
            summary: Vec<SummaryRow>,
        }
        let json = serde_json::to_string_pretty(&Mirror {
            report,
            summary: report.summary(),
        })?;
        put("report.json", &json)?;
    }
    Ok(written)
}
