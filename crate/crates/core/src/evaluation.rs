//! Sum-rate evaluation, alignment diagnostics and the Monte-Carlo harness.
//!
//! Rates treat residual interference as Gaussian noise after receive
//! filtering:
//!
//! ```text
//! R_k = log2 det(I + Φ_k⁻¹ (P_k/d_k) U_kᴴ G_kk W_k W_kᴴ G_kkᴴ U_k)
//! Φ_k = U_kᴴ (Σ_{i≠k} (P_i/d_i) G_ki W_i W_iᴴ G_kiᴴ + σ² I) U_k
//! ```
//!
//! All beamformer designs used here are independent of the SNR (equal powers
//! scale every objective uniformly), so each trial solves once per scheme and
//! evaluates the whole SNR grid on that solution.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{bd_precoders, giant_bs_grid};
use crate::distributed::{iterate_distributed_ia, IaOptions, Initialization};
use crate::error::{Error, Result};
use crate::feasibility::time_share_schedule;
use crate::linalg::{c64, log_det_hpd, CMat, DEFAULT_RANK_TOL};
use crate::network::{
    equivalent_from_config, generate_channel, BeamformerSet, BlockGrid, NetworkConfig,
};
use crate::oneshot::{check_one_shot_bound, one_shot_on_equivalent, OneShotOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One-shot alignment with partial coordination.
    OneshotPartial,
    /// Iterative alignment on the equivalent (coordinated) channel.
    DistributedPartial,
    /// Iterative alignment on the uncoordinated channel.
    DistributedGeneric,
    /// Block-diagonalization zero-forcing with full coordination.
    BdzfFull,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::OneshotPartial,
        Scheme::DistributedPartial,
        Scheme::DistributedGeneric,
        Scheme::BdzfFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::OneshotPartial => "oneshot_partial",
            Scheme::DistributedPartial => "distributed_partial",
            Scheme::DistributedGeneric => "distributed_generic",
            Scheme::BdzfFull => "bdzf_full",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                Error::Input(format!(
                    "unknown scheme '{s}' (expected one of oneshot_partial, distributed_partial, \
                     distributed_generic, bdzf_full)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub total: f64,
}

/// Rates with explicit per-user powers and noise variance.
pub fn sum_rate_with(
    grid: &BlockGrid,
    bf: &BeamformerSet,
    powers: &[f64],
    noise_power: f64,
) -> Result<RateReport> {
    let k = grid.num_users();
    if bf.receive.len() != k || bf.transmit.len() != k || powers.len() != k {
        return Err(Error::Shape(format!(
            "beamformers/powers do not cover {k} users"
        )));
    }
    let mut per_user = Vec::with_capacity(k);
    for rx in 0..k {
        let u = &bf.receive[rx];
        let d = bf.transmit[rx].ncols();
        if d == 0 || u.ncols() == 0 {
            per_user.push(0.0);
            continue;
        }
        let mut phi = u.adjoint() * u * c64(noise_power, 0.0);
        for tx in 0..k {
            let di = bf.transmit[tx].ncols();
            if tx == rx || di == 0 {
                continue;
            }
            let a = u.adjoint() * grid.block(rx, tx) * &bf.transmit[tx];
            phi += &a * a.adjoint() * c64(powers[tx] / di as f64, 0.0);
        }
        let a = u.adjoint() * grid.block(rx, rx) * &bf.transmit[rx];
        let signal = &a * a.adjoint() * c64(powers[rx] / d as f64, 0.0);
        let with = log_det_hpd(&(&phi + signal))
            .map_err(|_| Error::Numerical(format!("user {rx}: singular covariance")))?;
        let without = log_det_hpd(&phi)
            .map_err(|_| Error::Numerical(format!("user {rx}: singular interference-plus-noise covariance")))?;
        per_user.push((with - without) / std::f64::consts::LN_2);
    }
    let total = per_user.iter().sum();
    Ok(RateReport { per_user, total })
}

pub fn sum_rate(grid: &BlockGrid, bf: &BeamformerSet, config: &NetworkConfig) -> Result<RateReport> {
    sum_rate_with(grid, bf, &config.tx_power, config.noise_power)
}

/// `max_{k≠i} ‖U_kᴴ G_ki W_i‖_F / (‖U_k‖_F ‖G_ki‖_F ‖W_i‖_F)` over active users.
pub fn alignment_residual(bf: &BeamformerSet, grid: &BlockGrid) -> f64 {
    let k = grid.num_users();
    let mut worst = 0.0_f64;
    for rx in 0..k {
        let u = &bf.receive[rx];
        if u.ncols() == 0 {
            continue;
        }
        for tx in 0..k {
            let w = &bf.transmit[tx];
            if tx == rx || w.ncols() == 0 {
                continue;
            }
            let g = grid.block(rx, tx);
            let denom = u.norm() * g.norm() * w.norm();
            if denom == 0.0 {
                continue;
            }
            worst = worst.max((u.adjoint() * g * w).norm() / denom);
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverKnobs {
    pub max_iters: usize,
    pub leakage_tol: f64,
    pub rank_tol: f64,
}

impl Default for SolverKnobs {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            leakage_tol: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSpec {
    /// Network template. Its `dof` is used unless `dof_total` is set.
    pub config: NetworkConfig,
    /// Total streams shared by uniform time-sharing across all users.
    pub dof_total: Option<usize>,
    pub schemes: Vec<Scheme>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub knobs: SolverKnobs,
}

impl ExperimentSpec {
    pub fn new(config: NetworkConfig, schemes: Vec<Scheme>, snr_grid_db: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            config,
            dof_total: None,
            schemes,
            snr_grid_db,
            trials,
            seed,
            knobs: SolverKnobs::default(),
        }
    }

    pub fn with_dof_total(mut self, dof_total: usize) -> Self {
        self.dof_total = Some(dof_total);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid has non-finite values".into()));
        }
        for slot in self.slot_dofs()? {
            self.config.with_dof(slot)?;
        }
        Ok(())
    }

    /// Stream allocation of every time slot (one slot without time-sharing).
    pub fn slot_dofs(&self) -> Result<Vec<Vec<usize>>> {
        match self.dof_total {
            None => Ok(vec![self.config.dof.clone()]),
            Some(0) => Err(Error::Config("dof_total must be positive".into())),
            Some(total) => Ok(time_share_schedule(self.config.num_users(), total)?.all_slot_dofs()),
        }
    }

    /// Static feasibility of one scheme on this network, independent of the
    /// channel draw.
    pub fn check_scheme(&self, scheme: Scheme) -> Result<()> {
        let cfg = &self.config;
        match scheme {
            Scheme::OneshotPartial => {
                for slot in self.slot_dofs()? {
                    check_one_shot_bound(&cfg.with_dof(slot)?)?;
                }
            }
            Scheme::DistributedPartial => {
                for slot in self.slot_dofs()? {
                    cfg.with_dof(slot)?;
                }
            }
            Scheme::DistributedGeneric => {
                for slot in self.slot_dofs()? {
                    for (user, &d) in slot.iter().enumerate() {
                        let available = cfg.rx_antennas[user].min(cfg.tx_antennas[user]);
                        if d > available {
                            return Err(Error::Dimension { user, dof: d, available });
                        }
                    }
                }
            }
            Scheme::BdzfFull => {
                let total_rx = cfg.total_rx();
                for user in 0..cfg.num_users() {
                    let others = total_rx - cfg.rx_antennas[user];
                    if others >= cfg.total_tx() {
                        return Err(Error::BdInfeasible {
                            user,
                            reason: format!(
                                "other users hold {others} receive antennas, only {} transmit antennas",
                                cfg.total_tx()
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultPoint {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub trials: usize,
    /// Trials in which the scheme produced beamformers.
    pub successes: usize,
    /// Mean sum rate over successful trials, bits/s/Hz.
    pub mean_sum_rate: f64,
    pub std_err: f64,
    pub align_residual: f64,
    /// Fraction of all trials that solved and (for iterative schemes) converged.
    pub conv_frac: f64,
    pub mean_dof: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentResult {
    pub points: Vec<ResultPoint>,
}

impl ExperimentResult {
    pub fn point(&self, scheme: Scheme, snr_db: f64) -> Option<&ResultPoint> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && (p.snr_db - snr_db).abs() < 1e-9)
    }

    pub fn curve(&self, scheme: Scheme) -> Vec<&ResultPoint> {
        self.points.iter().filter(|p| p.scheme == scheme).collect()
    }
}

/// Seed for trial `t`, derived from the master seed alone.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.random()
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    /// Slot-averaged sum rate per SNR point; `None` when the scheme failed.
    rates: Option<Vec<f64>>,
    residual: f64,
    converged: bool,
    dof: f64,
    iterations: f64,
}

impl TrialOutcome {
    fn failed() -> Self {
        Self {
            rates: None,
            residual: f64::NAN,
            converged: false,
            dof: 0.0,
            iterations: 0.0,
        }
    }
}

struct Solved {
    beamformers: BeamformerSet,
    converged: bool,
    iterations: usize,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn rates_over_grid(
    spec: &ExperimentSpec,
    grid: &BlockGrid,
    bf: &BeamformerSet,
    pooled: bool,
) -> Result<Vec<f64>> {
    let cfg = &spec.config;
    let k = cfg.num_users();
    let sigma2 = cfg.noise_power;
    spec.snr_grid_db
        .iter()
        .map(|&snr_db| {
            let p = db_to_linear(snr_db) * sigma2;
            let powers = if pooled {
                let total = p * k as f64;
                let streams: usize = bf.dof().iter().sum();
                bf.dof()
                    .iter()
                    .map(|&d| total * d as f64 / streams.max(1) as f64)
                    .collect()
            } else {
                vec![p; k]
            };
            sum_rate_with(grid, bf, &powers, sigma2).map(|r| r.total)
        })
        .collect()
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Vec<TrialOutcome> {
    let cfg = &spec.config;
    let seed = trial_seed(spec.seed, trial);
    let Ok(h) = generate_channel(cfg, seed) else {
        return spec.schemes.iter().map(|_| TrialOutcome::failed()).collect();
    };
    let g = equivalent_from_config(&h, cfg).ok();
    let slots = spec.slot_dofs().unwrap_or_default();
    let ia_opts = IaOptions {
        max_iters: spec.knobs.max_iters,
        leakage_tol: spec.knobs.leakage_tol,
        init: Initialization::DominantRight,
    };
    let os_opts = OneShotOptions {
        rank_tol: spec.knobs.rank_tol,
        ..OneShotOptions::default()
    };

    spec.schemes
        .iter()
        .map(|&scheme| {
            if scheme == Scheme::BdzfFull {
                let outcome = bd_precoders(&h, None).and_then(|bd| {
                    let grid = giant_bs_grid(&h)?;
                    let bf = bd.beamformers();
                    let rates = rates_over_grid(spec, &grid, &bf, true)?;
                    Ok(TrialOutcome {
                        rates: Some(rates),
                        residual: alignment_residual(&bf, &grid),
                        converged: true,
                        dof: bd.total_dof() as f64,
                        iterations: 0.0,
                    })
                });
                return outcome.unwrap_or_else(|_| TrialOutcome::failed());
            }

            let mut sums = vec![0.0; spec.snr_grid_db.len()];
            let mut residual = 0.0_f64;
            let mut converged = true;
            let mut dof = 0.0;
            let mut iterations = 0.0;
            for slot in &slots {
                let solved: Result<(Solved, &BlockGrid)> = (|| {
                    let slot_cfg = cfg.with_dof(slot.clone())?;
                    match scheme {
                        Scheme::OneshotPartial => {
                            let g = g.as_ref().ok_or_else(|| Error::Config("no equivalent channel".into()))?;
                            let sol = one_shot_on_equivalent(&slot_cfg, g, &os_opts)?;
                            Ok((
                                Solved {
                                    beamformers: sol.beamformers,
                                    converged: true,
                                    iterations: 0,
                                },
                                g.grid(),
                            ))
                        }
                        Scheme::DistributedPartial | Scheme::DistributedGeneric => {
                            let grid = if scheme == Scheme::DistributedPartial {
                                g.as_ref().ok_or_else(|| Error::Config("no equivalent channel".into()))?.grid()
                            } else {
                                h.grid()
                            };
                            let tr = iterate_distributed_ia(grid, slot, &slot_cfg.tx_power, &ia_opts)?;
                            Ok((
                                Solved {
                                    beamformers: tr.beamformers,
                                    converged: tr.converged,
                                    iterations: tr.iterations_used,
                                },
                                grid,
                            ))
                        }
                        Scheme::BdzfFull => unreachable!(),
                    }
                })();
                let Ok((solved, grid)) = solved else {
                    return TrialOutcome::failed();
                };
                let Ok(rates) = rates_over_grid(spec, grid, &solved.beamformers, false) else {
                    return TrialOutcome::failed();
                };
                sums.iter_mut().zip(&rates).for_each(|(s, r)| *s += r);
                residual = residual.max(alignment_residual(&solved.beamformers, grid));
                converged &= solved.converged;
                dof += slot.iter().sum::<usize>() as f64;
                iterations += solved.iterations as f64;
            }
            let n = slots.len().max(1) as f64;
            TrialOutcome {
                rates: Some(sums.into_iter().map(|s| s / n).collect()),
                residual,
                converged,
                dof: dof / n,
                iterations: iterations / n,
            }
        })
        .collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Run every trial and aggregate. `workers == 0` uses the global rayon pool.
///
/// Per-trial outcomes are gathered in trial order before aggregation, so the
/// result does not depend on the number of workers.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let work = || -> Vec<Vec<TrialOutcome>> {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t))
            .collect()
    };
    let outcomes = if workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Input(format!("cannot build worker pool: {e}")))?
            .install(work)
    };

    let mut points = Vec::new();
    for (si, &scheme) in spec.schemes.iter().enumerate() {
        let per_scheme: Vec<&TrialOutcome> = outcomes.iter().map(|o| &o[si]).collect();
        let ok: Vec<&TrialOutcome> = per_scheme.iter().copied().filter(|o| o.rates.is_some()).collect();
        let conv = per_scheme.iter().filter(|o| o.converged).count();
        let mean_of = |f: &dyn Fn(&TrialOutcome) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64
            }
        };
        let residual = mean_of(&|o| o.residual);
        let mean_dof = mean_of(&|o| o.dof);
        let mean_iterations = mean_of(&|o| o.iterations);
        for (pi, &snr_db) in spec.snr_grid_db.iter().enumerate() {
            let rates: Vec<f64> = ok.iter().map(|o| o.rates.as_ref().unwrap()[pi]).collect();
            let (mean, se) = mean_and_stderr(&rates);
            points.push(ResultPoint {
                scheme,
                snr_db,
                trials: spec.trials,
                successes: ok.len(),
                mean_sum_rate: mean,
                std_err: se,
                align_residual: residual,
                conv_frac: conv as f64 / spec.trials as f64,
                mean_dof,
                mean_iterations,
            });
        }
    }
    Ok(ExperimentResult { points })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with_workers(spec, 0)
}

/// High-SNR slope `(R(hi) - R(lo)) / log2(SNR_hi / SNR_lo)`, in streams.
pub fn multiplexing_gain_estimate(
    result: &ExperimentResult,
    scheme: Scheme,
    snr_lo_db: f64,
    snr_hi_db: f64,
) -> Result<f64> {
    let find = |snr: f64| {
        result.point(scheme, snr).ok_or_else(|| {
            Error::Input(format!("no {scheme} result at {snr} dB"))
        })
    };
    let lo = find(snr_lo_db)?;
    let hi = find(snr_hi_db)?;
    if snr_hi_db == snr_lo_db {
        return Err(Error::Input("SNR points must differ".into()));
    }
    let octaves = (snr_hi_db - snr_lo_db) / 10.0 * std::f64::consts::LOG2_10;
    Ok((hi.mean_sum_rate - lo.mean_sum_rate) / octaves)
}

/// Beamformer with explicit filters, for synthetic checks.
pub fn beamformer_set(receive: Vec<CMat>, transmit: Vec<CMat>) -> BeamformerSet {
    BeamformerSet {
        receive,
        transmit,
        split: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthonormal, sorted_svd};
    use crate::network::generate_channel;
    use crate::oneshot::one_shot_ia;

    fn random_set(grid: &BlockGrid, d: usize, seed: u64) -> BeamformerSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = grid.num_users();
        beamformer_set(
            (0..k).map(|i| random_orthonormal(grid.rows_of(i), d, &mut rng)).collect(),
            (0..k).map(|j| random_orthonormal(grid.cols_of(j), d, &mut rng)).collect(),
        )
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 1).unwrap();
        let bf = random_set(h.grid(), 1, 2);
        let r = sum_rate_with(h.grid(), &bf, &[0.0; 3], 1.0).unwrap();
        assert!(r.total.abs() < 1e-14);
    }

    #[test]
    fn aligned_single_stream_is_scalar_formula() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 3).unwrap();
        let g = equivalent_from_config(&h, &c).unwrap();
        let bf = one_shot_ia(&c, &h).unwrap();
        let snr = 100.0;
        let cfg = c.with_snr(snr);
        let r = sum_rate(g.grid(), &bf, &cfg).unwrap();
        for k in 0..3 {
            let gain = (bf.receive[k].adjoint() * g.block(k, k) * &bf.transmit[k])[(0, 0)].norm_sqr();
            let want = (1.0 + snr * gain).log2();
            assert!((r.per_user[k] - want).abs() < 1e-8, "{} vs {want}", r.per_user[k]);
        }
    }

    #[test]
    fn rate_invariant_to_receive_rotation() {
        let c = NetworkConfig::symmetric(3, 3, 3, 2).unwrap();
        let h = generate_channel(&c, 4).unwrap();
        let bf = random_set(h.grid(), 2, 5);
        let base = sum_rate_with(h.grid(), &bf, &[10.0; 3], 1.0).unwrap().total;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rotated = bf.clone();
        for u in rotated.receive.iter_mut() {
            *u = &*u * random_orthonormal(2, 2, &mut rng);
        }
        let r = sum_rate_with(h.grid(), &rotated, &[10.0; 3], 1.0).unwrap().total;
        assert!((r - base).abs() < 1e-9);
    }

    #[test]
    fn random_beamformers_are_misaligned() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 7).unwrap();
        let bf = random_set(h.grid(), 1, 8);
        assert!(alignment_residual(&bf, h.grid()) > 1e-3);
    }

    #[test]
    fn slope_of_synthetic_parallel_channel() {
        // four unit-gain streams, noise-limited: R = 4 log2(1 + snr)
        let snrs = [30.0, 40.0];
        let points = snrs
            .iter()
            .map(|&s| {
                let lin = db_to_linear(s);
                ResultPoint {
                    scheme: Scheme::OneshotPartial,
                    snr_db: s,
                    trials: 1,
                    successes: 1,
                    mean_sum_rate: 4.0 * lin.log2(),
                    std_err: 0.0,
                    align_residual: 0.0,
                    conv_frac: 1.0,
                    mean_dof: 4.0,
                    mean_iterations: 0.0,
                }
            })
            .collect();
        let res = ExperimentResult { points };
        let est = multiplexing_gain_estimate(&res, Scheme::OneshotPartial, 30.0, 40.0).unwrap();
        assert!((est - 4.0).abs() < 1e-12);
        assert!(multiplexing_gain_estimate(&res, Scheme::OneshotPartial, 30.0, 35.0).is_err());
        assert!(multiplexing_gain_estimate(&res, Scheme::BdzfFull, 30.0, 40.0).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("magic".parse::<Scheme>().is_err());
    }

    #[test]
    fn spec_validation() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let mut spec = ExperimentSpec::new(c, vec![Scheme::OneshotPartial], vec![10.0], 0, 1);
        assert!(spec.validate().is_err());
        spec.trials = 2;
        spec.snr_grid_db.clear();
        assert!(spec.validate().is_err());
        spec.snr_grid_db.push(0.0);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn bd_rates_equal_isolated_rates() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 12).unwrap();
        let bd = bd_precoders(&h, None).unwrap();
        let grid = giant_bs_grid(&h).unwrap();
        let powers = bd.pooled_powers(30.0);
        let r = sum_rate_with(&grid, &bd.beamformers(), &powers, 1.0).unwrap();
        for k in 0..3 {
            let eff = h.row_strip(k) * &bd.precoders[k];
            let s = sorted_svd(&eff).unwrap().singular_values;
            let per = powers[k] / bd.dof[k] as f64;
            let iso: f64 = s.iter().map(|x| (1.0 + per * x * x).log2()).sum();
            assert!((r.per_user[k] - iso).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_trials_are_recorded_not_fatal() {
        let c = NetworkConfig::symmetric(5, 2, 2, 1).unwrap();
        let spec = ExperimentSpec::new(c, vec![Scheme::OneshotPartial], vec![10.0], 3, 1);
        let res = run_experiment(&spec).unwrap();
        let p = res.point(Scheme::OneshotPartial, 10.0).unwrap();
        assert_eq!(p.successes, 0);
        assert_eq!(p.conv_frac, 0.0);
        assert!(spec.check_scheme(Scheme::OneshotPartial).is_err());
    }
}
