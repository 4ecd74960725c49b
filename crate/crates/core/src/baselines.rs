//! Block-diagonalization zero-forcing with full coordination: all stations
//! act as one `n̂`-antenna transmitter.

use crate::error::{Error, Result};
use crate::linalg::{null_space_basis, sorted_svd, vstack, CMat, DEFAULT_RANK_TOL};
use crate::network::{BeamformerSet, BlockGrid, ChannelSet, NetworkConfig};

#[derive(Debug, Clone)]
pub struct BdSolution {
    /// Per-user precoder over all `n̂` antennas (`n̂ x d_k`).
    pub precoders: Vec<CMat>,
    /// Per-user receive filter (`m_k x d_k`).
    pub receive: Vec<CMat>,
    pub dof: Vec<usize>,
    /// Dimension of each user's interference-free subspace.
    pub null_dims: Vec<usize>,
}

impl BdSolution {
    pub fn total_dof(&self) -> usize {
        self.dof.iter().sum()
    }

    pub fn beamformers(&self) -> BeamformerSet {
        BeamformerSet {
            receive: self.receive.clone(),
            transmit: self.precoders.clone(),
            split: None,
        }
    }

    /// Per-user powers under a pooled budget `total_power`, split equally
    /// across all streams.
    pub fn pooled_powers(&self, total_power: f64) -> Vec<f64> {
        let streams = self.total_dof().max(1) as f64;
        self.dof
            .iter()
            .map(|&d| total_power * d as f64 / streams)
            .collect()
    }
}

/// View the network as one giant transmitter: block `(k, j)` is the full row
/// strip `[H_k1 ... H_kK]` for every `j`, matching `n̂`-row precoders.
pub fn giant_bs_grid(channel: &ChannelSet) -> Result<BlockGrid> {
    let k = channel.num_users();
    let strips: Vec<CMat> = (0..k).map(|i| channel.row_strip(i)).collect();
    let blocks = (0..k)
        .flat_map(|i| (0..k).map(move |_| i))
        .map(|i| strips[i].clone())
        .collect();
    BlockGrid::new(k, blocks)
}

/// BD precoders with `requested[k]` streams per user, or the maximum
/// supportable `min(m_k, nullity_k)` when `requested` is `None`.
pub fn bd_precoders(channel: &ChannelSet, requested: Option<&[usize]>) -> Result<BdSolution> {
    let k = channel.num_users();
    let strips: Vec<CMat> = (0..k).map(|i| channel.row_strip(i)).collect();
    let total_tx = strips.first().map_or(0, |s| s.ncols());

    let mut precoders = Vec::with_capacity(k);
    let mut receive = Vec::with_capacity(k);
    let mut dof = Vec::with_capacity(k);
    let mut null_dims = Vec::with_capacity(k);
    for user in 0..k {
        let basis = if k == 1 {
            CMat::identity(total_tx, total_tx)
        } else {
            let others: Vec<&CMat> = (0..k).filter(|&l| l != user).map(|l| &strips[l]).collect();
            let stacked = vstack(&others);
            if stacked.nrows() >= total_tx {
                return Err(Error::BdInfeasible {
                    user,
                    reason: format!(
                        "other users hold {} receive antennas, only {total_tx} transmit antennas",
                        stacked.nrows()
                    ),
                });
            }
            null_space_basis(&(stacked.adjoint() * &stacked), DEFAULT_RANK_TOL)
        };
        if basis.ncols() == 0 {
            return Err(Error::BdInfeasible {
                user,
                reason: "empty null space".into(),
            });
        }
        let effective = &strips[user] * &basis;
        let svd = sorted_svd(&effective)?;
        let max_dof = strips[user].nrows().min(basis.ncols());
        let d = match requested {
            Some(r) => {
                if r[user] > max_dof {
                    return Err(Error::Dimension {
                        user,
                        dof: r[user],
                        available: max_dof,
                    });
                }
                r[user]
            }
            None => max_dof,
        };
        precoders.push(&basis * svd.right.columns(0, d));
        receive.push(svd.left.columns(0, d).into_owned());
        dof.push(d);
        null_dims.push(basis.ncols());
    }
    Ok(BdSolution {
        precoders,
        receive,
        dof,
        null_dims,
    })
}

pub fn bd_zero_forcing(channel: &ChannelSet, config: &NetworkConfig) -> Result<BdSolution> {
    channel.check_shapes(config)?;
    bd_precoders(channel, None)
}
