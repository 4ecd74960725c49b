//! Interference alignment with partially coordinated transmit precoding for
//! the K-cell MIMO downlink.
//!
//! Each user is served jointly by its own base station and the preceding one
//! on a ring. The crate maps that network onto an equivalent interference
//! channel, checks properness, computes one-shot alignment beamformers and
//! compares them with iterative alignment and full-coordination
//! block-diagonalization in Monte-Carlo sum-rate experiments.

pub mod baselines;
pub mod cli;
pub mod distributed;
pub mod error;
pub mod evaluation;
pub mod feasibility;
pub mod linalg;
pub mod network;
pub mod oneshot;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use network::{
    build_permutation, equivalent_channel, generate_channel, BeamformerSet, BlockGrid,
    ChannelSet, EquivalentChannel, NetworkConfig, PermutationMap,
};
