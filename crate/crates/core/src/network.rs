//! Multicell scenario description, random channels, and the mapping from the
//! partially coordinated downlink onto an equivalent K-user interference
//! channel.
//!
//! User `k` (0-based) is served by its own base station `k` (primary) and by
//! the predecessor station `k' = (k - 1) mod K` (secondary). Joint precoders
//! therefore span `n̄_k = n_k + n_{k'}` antennas. Block `(i, j)` of any channel
//! grid links transmitter `j` to receiver `i`.

use std::ops::Deref;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, hstack, vstack, CMat};

/// Index of the secondary (coordinating) base station for user `k`.
pub fn partner(k: usize, num_users: usize) -> usize {
    (k + num_users - 1) % num_users
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Transmit antennas `n_k` per base station.
    pub tx_antennas: Vec<usize>,
    /// Receive antennas `m_k` per user.
    pub rx_antennas: Vec<usize>,
    /// Streams `d_k` per user.
    pub dof: Vec<usize>,
    /// Message power `P_k` per user, linear.
    pub tx_power: Vec<f64>,
    /// Noise variance per receive antenna, linear.
    pub noise_power: f64,
}

impl NetworkConfig {
    pub fn new(
        tx_antennas: Vec<usize>,
        rx_antennas: Vec<usize>,
        dof: Vec<usize>,
        tx_power: Vec<f64>,
        noise_power: f64,
    ) -> Result<Self> {
        let cfg = Self {
            tx_antennas,
            rx_antennas,
            dof,
            tx_power,
            noise_power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `K` users with `m x n` links, `d` streams each, unit power and noise.
    pub fn symmetric(k: usize, m: usize, n: usize, d: usize) -> Result<Self> {
        Self::new(vec![n; k], vec![m; k], vec![d; k], vec![1.0; k], 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.tx_antennas.len();
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 cells, got {k}")));
        }
        for (name, len) in [
            ("rx_antennas", self.rx_antennas.len()),
            ("dof", self.dof.len()),
            ("tx_power", self.tx_power.len()),
        ] {
            if len != k {
                return Err(Error::Config(format!(
                    "{name} has {len} entries, expected K = {k}"
                )));
            }
        }
        if let Some(i) = self.tx_antennas.iter().position(|&n| n == 0) {
            return Err(Error::Config(format!("tx_antennas[{i}] must be >= 1")));
        }
        if let Some(i) = self.rx_antennas.iter().position(|&m| m == 0) {
            return Err(Error::Config(format!("rx_antennas[{i}] must be >= 1")));
        }
        if self.dof.iter().all(|&d| d == 0) {
            return Err(Error::Config("at least one user needs a positive dof".into()));
        }
        if let Some(i) = self
            .tx_power
            .iter()
            .position(|&p| !(p.is_finite() && p > 0.0))
        {
            return Err(Error::Config(format!("tx_power[{i}] must be positive")));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::Config("noise_power must be positive".into()));
        }
        for user in 0..k {
            let available = self.rx_antennas[user].min(self.joint_width(user));
            if self.dof[user] > available {
                return Err(Error::Dimension {
                    user,
                    dof: self.dof[user],
                    available,
                });
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.tx_antennas.len()
    }

    /// `n̄_k`: antennas of the primary and secondary station together.
    pub fn joint_width(&self, k: usize) -> usize {
        self.tx_antennas[k] + self.tx_antennas[partner(k, self.num_users())]
    }

    /// `n̄ = min_k n̄_k`.
    pub fn min_joint_width(&self) -> usize {
        (0..self.num_users())
            .map(|k| self.joint_width(k))
            .min()
            .unwrap_or(0)
    }

    pub fn total_tx(&self) -> usize {
        self.tx_antennas.iter().sum()
    }

    pub fn total_rx(&self) -> usize {
        self.rx_antennas.iter().sum()
    }

    pub fn total_dof(&self) -> usize {
        self.dof.iter().sum()
    }

    /// Same network with a different stream allocation.
    pub fn with_dof(&self, dof: Vec<usize>) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.dof = dof;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same network with every user's power set so that `P_k / σ² = snr`.
    pub fn with_snr(&self, snr_linear: f64) -> Self {
        let mut cfg = self.clone();
        let p = snr_linear * self.noise_power;
        cfg.tx_power.iter_mut().for_each(|x| *x = p);
        cfg
    }
}

/// `K x K` grid of complex blocks, block `(i, j)` from transmitter `j` to receiver `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    num_users: usize,
    blocks: Vec<CMat>,
}

impl BlockGrid {
    /// `blocks` is row-major: index `i * K + j` holds block `(i, j)`.
    pub fn new(num_users: usize, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != num_users * num_users {
            return Err(Error::Shape(format!(
                "{} blocks for a {num_users}x{num_users} grid",
                blocks.len()
            )));
        }
        for i in 0..num_users {
            for j in 0..num_users {
                let b = &blocks[i * num_users + j];
                if b.nrows() != blocks[i * num_users].nrows() || b.ncols() != blocks[j].ncols() {
                    return Err(Error::Shape(format!(
                        "block ({i},{j}) is {}x{}, inconsistent with its row/column",
                        b.nrows(),
                        b.ncols()
                    )));
                }
            }
        }
        Ok(Self { num_users, blocks })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn block(&self, i: usize, j: usize) -> &CMat {
        &self.blocks[i * self.num_users + j]
    }

    pub fn rows_of(&self, i: usize) -> usize {
        self.block(i, 0).nrows()
    }

    pub fn cols_of(&self, j: usize) -> usize {
        self.block(0, j).ncols()
    }

    /// All blocks of receiver `i` side by side.
    pub fn row_strip(&self, i: usize) -> CMat {
        let row: Vec<&CMat> = (0..self.num_users).map(|j| self.block(i, j)).collect();
        hstack(&row)
    }

    pub fn assemble(&self) -> CMat {
        let strips: Vec<CMat> = (0..self.num_users).map(|i| self.row_strip(i)).collect();
        let refs: Vec<&CMat> = strips.iter().collect();
        vstack(&refs)
    }
}

/// The physical channel `H`, block `(i, j)` of shape `m_i x n_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet(BlockGrid);

impl ChannelSet {
    pub fn from_grid(grid: BlockGrid) -> Self {
        Self(grid)
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.0
    }

    /// Check block shapes against a configuration.
    pub fn check_shapes(&self, config: &NetworkConfig) -> Result<()> {
        let k = config.num_users();
        if self.num_users() != k {
            return Err(Error::Shape(format!(
                "channel has {} users, config has {k}",
                self.num_users()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let want = (config.rx_antennas[i], config.tx_antennas[j]);
                if self.block(i, j).shape() != want {
                    return Err(Error::Shape(format!(
                        "H block ({i},{j}) is {:?}, expected {want:?}",
                        self.block(i, j).shape()
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Deref for ChannelSet {
    type Target = BlockGrid;
    fn deref(&self) -> &BlockGrid {
        &self.0
    }
}

/// The equivalent channel `G = HP`, block `(i, j)` of shape `m_i x n̄_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel(BlockGrid);

impl EquivalentChannel {
    pub fn grid(&self) -> &BlockGrid {
        &self.0
    }
}

impl Deref for EquivalentChannel {
    type Target = BlockGrid;
    fn deref(&self) -> &BlockGrid {
        &self.0
    }
}

/// Draw i.i.d. unit-variance circularly symmetric Gaussian channel blocks.
///
/// Entries are filled block by block (row-major over `(i, j)`), column-major
/// inside each block, from a ChaCha8 stream seeded with `seed`.
pub fn generate_channel(config: &NetworkConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = config.num_users();
    let mut blocks = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let (m, n) = (config.rx_antennas[i], config.tx_antennas[j]);
            let mut b = CMat::zeros(m, n);
            for c in 0..n {
                for r in 0..m {
                    b[(r, c)] = complex_gaussian(&mut rng);
                }
            }
            blocks.push(b);
        }
    }
    Ok(ChannelSet(BlockGrid::new(k, blocks)?))
}

/// Column selection realizing `P = [P_1 ... P_K]`.
///
/// Joint column `c` of the equivalent channel is original column
/// `column_order[c]`. Every original antenna appears exactly twice (once for
/// the user it serves as primary and once as secondary), so the dense `P`
/// is `n̂ x 2n̂` with `P Pᵀ = 2I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationMap {
    pub column_order: Vec<usize>,
    /// First joint column of each user's block.
    pub block_starts: Vec<usize>,
    /// `n̄_k` per user.
    pub block_widths: Vec<usize>,
    /// `n̂`.
    pub total_tx: usize,
}

impl PermutationMap {
    /// Dense 0/1 matrix `P` (`n̂ x Σ n̄_k`). Intended for checks on small systems.
    pub fn to_dense(&self) -> CMat {
        let mut p = CMat::zeros(self.total_tx, self.column_order.len());
        for (c, &orig) in self.column_order.iter().enumerate() {
            p[(orig, c)] = num_complex::Complex64::new(1.0, 0.0);
        }
        p
    }

    pub fn num_users(&self) -> usize {
        self.block_widths.len()
    }
}

pub fn build_permutation(config: &NetworkConfig) -> PermutationMap {
    let k = config.num_users();
    let mut offsets = Vec::with_capacity(k);
    let mut acc = 0;
    for &n in &config.tx_antennas {
        offsets.push(acc);
        acc += n;
    }
    let antennas = |bs: usize| offsets[bs]..offsets[bs] + config.tx_antennas[bs];

    let mut column_order = Vec::with_capacity(2 * acc);
    let mut block_starts = Vec::with_capacity(k);
    let mut block_widths = Vec::with_capacity(k);
    for user in 0..k {
        block_starts.push(column_order.len());
        let sec = partner(user, k);
        // First user stacks [own, partner]; the rest stack [partner, own].
        let (first, second) = if user == 0 { (user, sec) } else { (sec, user) };
        column_order.extend(antennas(first));
        column_order.extend(antennas(second));
        block_widths.push(config.joint_width(user));
    }
    PermutationMap {
        column_order,
        block_starts,
        block_widths,
        total_tx: acc,
    }
}

pub fn equivalent_channel(h: &ChannelSet, p: &PermutationMap) -> Result<EquivalentChannel> {
    let k = h.num_users();
    if p.num_users() != k {
        return Err(Error::Config(format!(
            "permutation built for {} users, channel has {k}",
            p.num_users()
        )));
    }
    let total: usize = (0..k).map(|j| h.cols_of(j)).sum();
    if total != p.total_tx || p.column_order.iter().any(|&c| c >= total) {
        return Err(Error::Config(format!(
            "permutation expects {} transmit antennas, channel has {total}",
            p.total_tx
        )));
    }
    let mut blocks = Vec::with_capacity(k * k);
    for i in 0..k {
        let strip = h.row_strip(i);
        for j in 0..k {
            let cols = &p.column_order[p.block_starts[j]..p.block_starts[j] + p.block_widths[j]];
            blocks.push(strip.select_columns(cols));
        }
    }
    Ok(EquivalentChannel(BlockGrid::new(k, blocks)?))
}

/// Convenience: `G` straight from `H` and the configuration.
pub fn equivalent_from_config(h: &ChannelSet, config: &NetworkConfig) -> Result<EquivalentChannel> {
    h.check_shapes(config)?;
    equivalent_channel(h, &build_permutation(config))
}

/// Primary part `V_k` and secondary part `Ṽ_k` of every joint precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSplit {
    pub primary: Vec<CMat>,
    pub secondary: Vec<CMat>,
}

/// Receive filters `U_k` and transmit precoders for every user.
///
/// For partially coordinated schemes `transmit[k]` is the joint `W_k`
/// (`n̄_k x d_k`) and `split` holds its per-station parts. For the
/// uncoordinated channel `transmit[k]` is `n_k x d_k` and `split` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub receive: Vec<CMat>,
    pub transmit: Vec<CMat>,
    pub split: Option<PrecoderSplit>,
}

impl BeamformerSet {
    pub fn num_users(&self) -> usize {
        self.receive.len()
    }

    pub fn dof(&self) -> Vec<usize> {
        self.transmit.iter().map(|w| w.ncols()).collect()
    }

    /// Worst deviation from orthonormal columns over all filters and precoders.
    pub fn orthonormality_error(&self) -> f64 {
        self.receive
            .iter()
            .chain(self.transmit.iter())
            .map(crate::linalg::orthonormality_error)
            .fold(0.0, f64::max)
    }
}

pub fn split_beamformer(w: &[CMat], config: &NetworkConfig) -> Result<PrecoderSplit> {
    let k = config.num_users();
    if w.len() != k {
        return Err(Error::Shape(format!("{} precoders for {k} users", w.len())));
    }
    let mut primary = Vec::with_capacity(k);
    let mut secondary = Vec::with_capacity(k);
    for (user, wk) in w.iter().enumerate() {
        let own = config.tx_antennas[user];
        let other = config.tx_antennas[partner(user, k)];
        if wk.nrows() != own + other {
            return Err(Error::Shape(format!(
                "W_{user} has {} rows, expected {}",
                wk.nrows(),
                own + other
            )));
        }
        let d = wk.ncols();
        if user == 0 {
            primary.push(wk.rows(0, own).into_owned());
            secondary.push(wk.rows(own, other).into_owned());
        } else {
            secondary.push(wk.rows(0, other).into_owned());
            primary.push(wk.rows(other, own).into_owned());
        }
        debug_assert_eq!(primary[user].ncols(), d);
    }
    Ok(PrecoderSplit { primary, secondary })
}

/// Inverse of [`split_beamformer`].
pub fn stack_beamformer(split: &PrecoderSplit, config: &NetworkConfig) -> Result<Vec<CMat>> {
    let k = config.num_users();
    if split.primary.len() != k || split.secondary.len() != k {
        return Err(Error::Shape("split does not match the number of users".into()));
    }
    (0..k)
        .map(|user| {
            let (v, vt) = (&split.primary[user], &split.secondary[user]);
            if v.nrows() != config.tx_antennas[user]
                || vt.nrows() != config.tx_antennas[partner(user, k)]
                || v.ncols() != vt.ncols()
            {
                return Err(Error::Shape(format!("user {user}: inconsistent V / Ṽ shapes")));
            }
            Ok(if user == 0 {
                vstack(&[v, vt])
            } else {
                vstack(&[vt, v])
            })
        })
        .collect()
}

/// Overall `n̂ x d̂` precoder `V` acting on the physical channel, so that
/// `G · Diag(W_k) = H · V`. Column block `k` is nonzero only on the antennas
/// of stations `k` and `k'`.
pub fn effective_overall_precoder(bf: &BeamformerSet, config: &NetworkConfig) -> Result<CMat> {
    let p = build_permutation(config);
    let total_dof: usize = bf.transmit.iter().map(|w| w.ncols()).sum();
    let mut v = CMat::zeros(p.total_tx, total_dof);
    let mut col0 = 0;
    for (user, w) in bf.transmit.iter().enumerate() {
        if w.nrows() != p.block_widths[user] {
            return Err(Error::Shape(format!(
                "W_{user} has {} rows, expected {}",
                w.nrows(),
                p.block_widths[user]
            )));
        }
        for r in 0..w.nrows() {
            let orig = p.column_order[p.block_starts[user] + r];
            for c in 0..w.ncols() {
                v[(orig, col0 + c)] += w[(r, c)];
            }
        }
        col0 += w.ncols();
    }
    Ok(v)
}
