//! Iterative minimum-leakage interference alignment.
//!
//! Runs on any `K x K` block grid: the physical channel `H` (uncoordinated
//! network) or the equivalent channel `G` (partial coordination). Each sweep
//! updates every receive filter to the least-interfered subspace of its
//! forward interference covariance, then every precoder to the least-leaking
//! subspace of its reciprocal covariance.
//!
//! Both half-steps minimize the same objective
//! `Σ_k Σ_{j≠k} (P_j / d_j) ‖U_kᴴ H_kj V_j‖²_F`, so the recorded leakage never
//! increases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{c64, frob_sq, hermitian_eigen, random_orthonormal, sorted_svd, CMat};
use crate::network::{BeamformerSet, BlockGrid, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initialization {
    /// Dominant right singular vectors of each direct block.
    DominantRight,
    /// Seeded random orthonormal precoders.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct IaOptions {
    pub max_iters: usize,
    /// Convergence threshold relative to the initial desired signal power.
    pub leakage_tol: f64,
    pub init: Initialization,
}

impl Default for IaOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            leakage_tol: 1e-8,
            init: Initialization::DominantRight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// Total leakage after each sweep.
    pub leakage: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Desired signal power at initialization; the convergence reference.
    pub signal_scale: f64,
    pub beamformers: BeamformerSet,
}

impl IterationTrace {
    pub fn final_leakage(&self) -> f64 {
        self.leakage.last().copied().unwrap_or(0.0)
    }
}

/// `Σ_k Trace(U_kᴴ Q_k U_k)` with `Q_k = Σ_{j≠k} (P_j / d_j) H_kj V_j V_jᴴ H_kjᴴ`.
///
/// Stream counts are read from the precoder widths; users without streams
/// contribute nothing.
pub fn leakage(receive: &[CMat], grid: &BlockGrid, transmit: &[CMat], powers: &[f64]) -> f64 {
    let k = grid.num_users();
    let mut total = 0.0;
    for rx in 0..k {
        if receive[rx].ncols() == 0 {
            continue;
        }
        for tx in 0..k {
            let d = transmit[tx].ncols();
            if tx == rx || d == 0 {
                continue;
            }
            let a = receive[rx].adjoint() * grid.block(rx, tx) * &transmit[tx];
            total += powers[tx] / d as f64 * frob_sq(&a);
        }
    }
    total
}

fn smallest_eigvecs(q: &CMat, d: usize) -> CMat {
    let (_, vecs) = hermitian_eigen(q);
    vecs.columns(0, d).into_owned()
}

fn check_dims(grid: &BlockGrid, dof: &[usize], powers: &[f64]) -> Result<()> {
    let k = grid.num_users();
    if dof.len() != k || powers.len() != k {
        return Err(Error::Shape(format!(
            "{} dof entries and {} powers for {k} users",
            dof.len(),
            powers.len()
        )));
    }
    for (user, &d) in dof.iter().enumerate() {
        let available = grid.rows_of(user).min(grid.cols_of(user));
        if d > available {
            return Err(Error::Dimension {
                user,
                dof: d,
                available,
            });
        }
    }
    Ok(())
}

pub fn iterate_distributed_ia(
    grid: &BlockGrid,
    dof: &[usize],
    powers: &[f64],
    opts: &IaOptions,
) -> Result<IterationTrace> {
    check_dims(grid, dof, powers)?;
    let k = grid.num_users();

    let mut transmit: Vec<CMat> = match opts.init {
        Initialization::DominantRight => (0..k)
            .map(|j| sorted_svd(grid.block(j, j)).map(|s| s.right.columns(0, dof[j]).into_owned()))
            .collect::<Result<_>>()?,
        Initialization::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k)
                .map(|j| random_orthonormal(grid.cols_of(j), dof[j], &mut rng))
                .collect()
        }
    };
    let signal_scale: f64 = (0..k)
        .filter(|&j| dof[j] > 0)
        .map(|j| powers[j] / dof[j] as f64 * frob_sq(&(grid.block(j, j) * &transmit[j])))
        .sum();

    let mut receive: Vec<CMat> = (0..k).map(|i| CMat::zeros(grid.rows_of(i), dof[i])).collect();
    let mut history = Vec::with_capacity(opts.max_iters.min(4096));
    let threshold = opts.leakage_tol * signal_scale;
    let mut converged = false;

    for _ in 0..opts.max_iters {
        for rx in 0..k {
            if dof[rx] == 0 {
                continue;
            }
            let m = grid.rows_of(rx);
            let mut q = CMat::zeros(m, m);
            for tx in 0..k {
                let d = dof[tx];
                if tx == rx || d == 0 {
                    continue;
                }
                let a = grid.block(rx, tx) * &transmit[tx];
                q += &a * a.adjoint() * c64(powers[tx] / d as f64, 0.0);
            }
            receive[rx] = smallest_eigvecs(&q, dof[rx]);
        }
        for tx in 0..k {
            let d = dof[tx];
            if d == 0 {
                continue;
            }
            let n = grid.cols_of(tx);
            let mut q = CMat::zeros(n, n);
            for rx in 0..k {
                if rx == tx || dof[rx] == 0 {
                    continue;
                }
                let a = receive[rx].adjoint() * grid.block(rx, tx);
                q += a.adjoint() * a;
            }
            transmit[tx] = smallest_eigvecs(&q, d);
        }
        let current = leakage(&receive, grid, &transmit, powers);
        history.push(current);
        if current <= threshold {
            converged = true;
            break;
        }
    }

    Ok(IterationTrace {
        iterations_used: history.len(),
        leakage: history,
        converged,
        signal_scale,
        beamformers: BeamformerSet {
            receive,
            transmit,
            split: None,
        },
    })
}

/// Run on a grid using the streams and powers of `config`.
pub fn iterate_with_config(
    grid: &BlockGrid,
    config: &NetworkConfig,
    opts: &IaOptions,
) -> Result<IterationTrace> {
    iterate_distributed_ia(grid, &config.dof, &config.tx_power, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, random_orthonormal};
    use crate::network::generate_channel;

    #[test]
    fn single_user_has_no_leakage() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = BlockGrid::new(1, vec![random_matrix(2, 2, &mut rng)]).unwrap();
        let u = vec![random_orthonormal(2, 1, &mut rng)];
        let v = vec![random_orthonormal(2, 1, &mut rng)];
        assert_eq!(leakage(&u, &grid, &v, &[1.0]), 0.0);
    }

    #[test]
    fn leakage_matches_stream_double_sum() {
        let c = NetworkConfig::symmetric(3, 3, 3, 2).unwrap();
        let h = generate_channel(&c, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<CMat> = (0..3).map(|_| random_orthonormal(3, 2, &mut rng)).collect();
        let v: Vec<CMat> = (0..3).map(|_| random_orthonormal(3, 2, &mut rng)).collect();
        let p = [1.0, 2.0, 0.5];
        let mut expect = 0.0;
        for rx in 0..3 {
            for tx in 0..3 {
                if rx == tx {
                    continue;
                }
                for a in 0..2 {
                    for b in 0..2 {
                        let z = u[rx].column(a).adjoint() * h.block(rx, tx) * v[tx].column(b);
                        expect += p[tx] / 2.0 * z[(0, 0)].norm_sqr();
                    }
                }
            }
        }
        let got = leakage(&u, h.grid(), &v, &p);
        assert!((got - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn proper_k3_converges_monotonically() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 42).unwrap();
        let tr = iterate_with_config(h.grid(), &c, &IaOptions::default()).unwrap();
        assert!(tr.converged, "final leakage {}", tr.final_leakage());
        assert!(tr.leakage.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300));
    }

    #[test]
    fn random_init_is_seeded() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 3).unwrap();
        let opts = IaOptions {
            init: Initialization::Random(7),
            max_iters: 20,
            ..IaOptions::default()
        };
        let a = iterate_with_config(h.grid(), &c, &opts).unwrap();
        let b = iterate_with_config(h.grid(), &c, &opts).unwrap();
        assert_eq!(a.leakage, b.leakage);
    }

    #[test]
    fn rejects_oversized_dof() {
        let c = NetworkConfig::symmetric(3, 2, 2, 2).unwrap();
        let h = generate_channel(&c, 3).unwrap();
        assert!(iterate_distributed_ia(h.grid(), &[3, 1, 1], &[1.0; 3], &IaOptions::default()).is_err());
    }
}
