//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 malformed configuration or
//! arguments, 3 a requested scheme cannot run on the configured network.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluation::{
    run_experiment_with_workers, ExperimentResult, ExperimentSpec, Scheme, SolverKnobs,
};
use crate::feasibility::{
    backhaul_rate, dof_upper_bound, is_proper, time_share_schedule, Coordination, IaMode,
    Topology,
};
use crate::network::NetworkConfig;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pcia", version, about = "Interference alignment with partially coordinated precoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo sum-rate experiment from a TOML config.
    Run(RunArgs),
    /// Properness table over a range of K.
    Feasibility(FeasibilityArgs),
    /// Uniform time-sharing schedule for K users sharing d_hat streams.
    Schedule {
        k: usize,
        d_hat: usize,
    },
    /// Backhaul CSI rate per link, in multiples of R.
    Backhaul {
        /// Range of K, e.g. `2..7` (inclusive).
        #[arg(long = "k", default_value = "2..7", value_parser = parse_range)]
        k: (usize, usize),
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML). Keys: users, tx_antennas, rx_antennas,
    /// dof | dof_total, tx_power [1.0], noise_power [1.0], schemes, snr_db,
    /// trials [100], seed [0], max_iters [1000], leakage_tol [1e-8],
    /// rank_tol [1e-9].
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path; JSON is written next to it with a `.json` extension.
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads (0 = all cores). Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    /// Scheme to run (repeatable); replaces the config's list.
    #[arg(long = "scheme")]
    pub schemes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FeasibilityArgs {
    /// Range of K, e.g. `2..6` (inclusive).
    #[arg(long = "k", default_value = "2..8", value_parser = parse_range)]
    pub k: (usize, usize),
    #[arg(long, short)]
    pub m: usize,
    #[arg(long, short)]
    pub n: usize,
    /// generic, partial or both.
    #[arg(long, default_value = "both")]
    pub mode: String,
}

pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    let (lo, hi) = if let Some((a, b)) = s.split_once("..") {
        (parse(a)?, parse(b.trim_start_matches('='))?)
    } else if let Some((a, b)) = s.split_once('-') {
        (parse(a)?, parse(b)?)
    } else {
        let v = parse(s)?;
        (v, v)
    };
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, field: &str, k: usize) -> Result<Vec<T>, CliError> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); k]),
            OneOrMany::Many(v) if v.len() == k => Ok(v.clone()),
            OneOrMany::Many(v) => Err(CliError::config(format!(
                "field `{field}`: {} entries, expected users = {k}",
                v.len()
            ))),
        }
    }
}

/// The on-disk experiment description.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub users: usize,
    pub tx_antennas: OneOrMany<usize>,
    pub rx_antennas: OneOrMany<usize>,
    pub dof: Option<OneOrMany<usize>>,
    pub dof_total: Option<usize>,
    pub tx_power: Option<OneOrMany<f64>>,
    pub noise_power: Option<f64>,
    pub schemes: Vec<String>,
    pub snr_db: Vec<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub leakage_tol: Option<f64>,
    pub rank_tol: Option<f64>,
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))
}

impl RunConfig {
    /// Build the experiment. Without `dof` or `dof_total` the DOF upper
    /// bound is time-shared across all users.
    pub fn to_spec(&self) -> Result<ExperimentSpec, CliError> {
        let k = self.users;
        if k < 2 {
            return Err(CliError::config("field `users`: need at least 2"));
        }
        if self.dof.is_some() && self.dof_total.is_some() {
            return Err(CliError::config("fields `dof` and `dof_total` are mutually exclusive"));
        }
        let tx = self.tx_antennas.expand("tx_antennas", k)?;
        let rx = self.rx_antennas.expand("rx_antennas", k)?;
        let tx_power = match &self.tx_power {
            Some(p) => p.expand("tx_power", k)?,
            None => vec![1.0; k],
        };
        let (dof, dof_total) = match (&self.dof, self.dof_total) {
            (Some(d), None) => (d.expand("dof", k)?, None),
            (None, total) => {
                let total = total.unwrap_or_else(|| dof_upper_bound(&rx, &tx));
                let first = time_share_schedule(k, total)
                    .map_err(|e| CliError::config(format!("field `dof_total`: {e}")))?
                    .slot_dof(0);
                (first, Some(total))
            }
            (Some(_), Some(_)) => unreachable!(),
        };
        let config = NetworkConfig::new(
            tx,
            rx,
            dof,
            tx_power,
            self.noise_power.unwrap_or(1.0),
        )
        .map_err(|e| CliError::config(format!("network: {e}")))?;
        let schemes = self
            .schemes
            .iter()
            .map(|s| s.parse::<Scheme>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::config(format!("field `schemes`: {e}")))?;
        let defaults = SolverKnobs::default();
        let spec = ExperimentSpec {
            config,
            dof_total,
            schemes,
            snr_grid_db: self.snr_db.clone(),
            trials: self.trials.unwrap_or(100),
            seed: self.seed.unwrap_or(0),
            knobs: SolverKnobs {
                max_iters: self.max_iters.unwrap_or(defaults.max_iters),
                leakage_tol: self.leakage_tol.unwrap_or(defaults.leakage_tol),
                rank_tol: self.rank_tol.unwrap_or(defaults.rank_tol),
            },
        };
        spec.validate()
            .map_err(|e| CliError::config(format!("experiment: {e}")))?;
        Ok(spec)
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..9).contains(&exp) {
        trim(format!("{:.*}", (8 - exp).max(0) as usize, x))
    } else {
        let s = format!("{x:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{e}", trim(mant.to_string()))
    }
}

fn list_label(v: &[usize]) -> String {
    if v.iter().all(|&x| x == v[0]) {
        v[0].to_string()
    } else {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "K",
    "m",
    "n",
    "dof_total",
    "snr_db",
    "trials",
    "mean_sum_rate",
    "std_err",
    "align_residual",
    "conv_frac",
];

pub fn render_csv(spec: &ExperimentSpec, result: &ExperimentResult) -> Result<String, CliError> {
    let cfg = &spec.config;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError {
        code: EXIT_IO,
        message: format!("csv: {e}"),
    };
    w.write_record(CSV_HEADER).map_err(io)?;
    for p in &result.points {
        w.write_record([
            p.scheme.as_str().to_string(),
            cfg.num_users().to_string(),
            list_label(&cfg.rx_antennas),
            list_label(&cfg.tx_antennas),
            fmt_sig9(p.mean_dof),
            fmt_sig9(p.snr_db),
            p.trials.to_string(),
            fmt_sig9(p.mean_sum_rate),
            fmt_sig9(p.std_err),
            fmt_sig9(p.align_residual),
            fmt_sig9(p.conv_frac),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("csv: {e}"),
    })?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[derive(Serialize)]
struct JsonReport<'a> {
    spec: &'a ExperimentSpec,
    results: &'a [crate::evaluation::ResultPoint],
}

pub fn render_summary(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>8} {:>12} {:>10} {:>12} {:>8} {:>6}",
        "scheme", "snr_db", "sum_rate", "std_err", "residual", "conv", "dof"
    );
    for p in &result.points {
        let _ = writeln!(
            out,
            "{:<20} {:>8.2} {:>12.4} {:>10.4} {:>12.3e} {:>8.3} {:>6.2}",
            p.scheme.as_str(),
            p.snr_db,
            p.mean_sum_rate,
            p.std_err,
            p.align_residual,
            p.conv_frac,
            p.mean_dof
        );
    }
    out
}

/// Load, override, check and run. Returns the printed summary.
pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut rc = parse_run_config(&text)?;
    if let Some(s) = args.seed {
        rc.seed = Some(s);
    }
    if let Some(t) = args.trials {
        rc.trials = Some(t);
    }
    if let Some(snr) = &args.snr {
        rc.snr_db = snr.clone();
    }
    if !args.schemes.is_empty() {
        rc.schemes = args.schemes.clone();
    }
    let spec = rc.to_spec()?;
    for &scheme in &spec.schemes {
        spec.check_scheme(scheme).map_err(|e| CliError {
            code: EXIT_INFEASIBLE,
            message: format!("scheme {scheme} cannot run on this network: {e}"),
        })?;
    }
    let result = run_experiment_with_workers(&spec, args.workers).map_err(|e| match e {
        Error::Config(_) | Error::Dimension { .. } | Error::Input(_) => CliError::config(e.to_string()),
        other => CliError {
            code: EXIT_INFEASIBLE,
            message: other.to_string(),
        },
    })?;
    let csv = render_csv(&spec, &result)?;
    write_file(&args.out, &csv)?;
    let json = serde_json::to_string_pretty(&JsonReport {
        spec: &spec,
        results: &result.points,
    })
    .map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("json: {e}"),
    })?;
    write_file(&args.out.with_extension("json"), &json)?;
    Ok(render_summary(&result))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn cmd_feasibility(k_range: (usize, usize), m: usize, n: usize, mode: &str) -> Result<String, CliError> {
    let modes: Vec<IaMode> = match mode {
        "generic" => vec![IaMode::Generic],
        "partial" => vec![IaMode::Partial],
        "both" => vec![IaMode::Generic, IaMode::Partial],
        other => return Err(CliError::config(format!("unknown mode '{other}'"))),
    };
    if m == 0 || n == 0 || k_range.0 == 0 {
        return Err(CliError::config("K, m and n must be positive"));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>3} {:>6} {:<18} {:>10} {:>10} {:>8}  verdict",
        "mode", "K", "d_hat", "system", "N_e", "N_v", "K_max"
    );
    for &mode in &modes {
        for k in k_range.0..=k_range.1 {
            match is_proper(mode, k, m, n) {
                Ok(v) => {
                    let _ = writeln!(
                        out,
                        "{:<8} {:>3} {:>6} {:<18} {:>10} {:>10} {:>8}  {}",
                        mode.to_string(),
                        k,
                        v.dof_total,
                        v.system_label,
                        v.num_equations.to_string(),
                        v.num_variables.to_string(),
                        v.bound_rhs.to_string(),
                        if v.proper { "proper" } else { "improper" }
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{:<8} {:>3}  {}", mode.to_string(), k, e);
                }
            }
        }
    }
    Ok(out)
}

pub fn cmd_schedule(k: usize, d_hat: usize) -> Result<String, CliError> {
    let s = time_share_schedule(k, d_hat).map_err(|e| CliError::config(e.to_string()))?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "K={k} d_hat={d_hat}: alpha={} tau={} theta={} (each user averages {}/{} DOF)",
        s.alpha, s.tau, s.theta, d_hat, k
    );
    for slot in 0..s.tau {
        let users: Vec<String> = s.slot_assignments[slot].iter().map(|u| (u + 1).to_string()).collect();
        let dof: Vec<String> = s.slot_dof(slot).iter().map(|d| d.to_string()).collect();
        let _ = writeln!(
            out,
            "slot {:>3}: extra stream to users {{{}}}  dof=[{}]",
            slot + 1,
            users.join(","),
            dof.join(",")
        );
    }
    Ok(out)
}

pub fn cmd_backhaul(k_range: (usize, usize)) -> Result<String, CliError> {
    if k_range.0 < 2 {
        return Err(CliError::config("backhaul needs K >= 2"));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>6} {:>13} {:>13} {:>10} {:>10}",
        "K", "none", "partial_ring", "partial_line", "full_ring", "full_line"
    );
    for k in k_range.0..=k_range.1 {
        let rate = |t, c| backhaul_rate(k, t, c).map(|r| r.rate_multiple);
        let row = (|| -> crate::error::Result<[usize; 5]> {
            Ok([
                rate(Topology::Ring, Coordination::None)?,
                rate(Topology::Ring, Coordination::Partial)?,
                rate(Topology::Line, Coordination::Partial)?,
                rate(Topology::Ring, Coordination::Full)?,
                rate(Topology::Line, Coordination::Full)?,
            ])
        })()
        .map_err(|e| CliError::config(e.to_string()))?;
        let _ = writeln!(
            out,
            "{:>3} {:>5}R {:>12}R {:>12}R {:>9}R {:>9}R",
            k, row[0], row[1], row[2], row[3], row[4]
        );
    }
    Ok(out)
}

/// Dispatch a parsed command line.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Feasibility(a) => cmd_feasibility(a.k, a.m, a.n, &a.mode),
        Command::Schedule { k, d_hat } => cmd_schedule(*k, *d_hat),
        Command::Backhaul { k } => cmd_backhaul(*k),
    }
}
