//! Non-iterative interference alignment for the partially coordinated model.
//!
//! 1. Receive filters: the `d_k` dominant left singular vectors of the direct
//!    equivalent block `G_kk` (maximum desired power with `W_k` at the
//!    dominant right singular vectors).
//! 2. Reciprocal network: with those filters as transmitters, the interference
//!    covariance `Q̄_k` seen by joint transmitter `k` has rank `d̂ - d_k`. Its
//!    null space `T_k` carries no leakage to any other user.
//! 3. Among all `C(a_k, d_k)` column subsets of `T_k`, keep the one with the
//!    largest geometric SNR coefficient `Π |λ(U_kᴴ G_kk A)|`.
//! 4. Split `W_k` into the primary and secondary station parts.

use itertools::Itertools;
use num_integer::binomial;

use crate::error::{Error, Result};
use crate::linalg::{
    null_space_basis, singular_values, sorted_svd, CMat, DEFAULT_RANK_TOL,
};
use crate::network::{
    equivalent_from_config, split_beamformer, BeamformerSet, ChannelSet, EquivalentChannel,
    NetworkConfig,
};

/// Smallest singular value of `U_kᴴ G_kk W_k`, relative to `‖G_kk‖₂`, below
/// which the desired link is declared rank deficient.
pub const DESIRED_RANK_TOL: f64 = 1e-9;

/// SVD of one direct block `G_ii = F Σ Mᴴ`.
#[derive(Debug, Clone)]
pub struct SvdCache {
    /// `F_i`, left singular vectors.
    pub left: CMat,
    /// `σ⁽ⁱ⁾`, descending.
    pub singular_values: Vec<f64>,
    /// `M_i`, right singular vectors.
    pub right: CMat,
    pub dof: usize,
}

impl SvdCache {
    /// `F̃_i`
    pub fn left_truncated(&self) -> CMat {
        self.left.columns(0, self.dof).into_owned()
    }

    /// `M̃_i`
    pub fn right_truncated(&self) -> CMat {
        self.right.columns(0, self.dof).into_owned()
    }

    /// `Σ̃_i` as a list.
    pub fn singular_truncated(&self) -> &[f64] {
        &self.singular_values[..self.dof]
    }
}

#[derive(Debug, Clone)]
pub struct ReciprocalState {
    /// `Q̄_k`
    pub covariance: CMat,
    pub rank: usize,
    /// `a_k`
    pub nullity: usize,
    /// `T_k`, orthonormal basis of the null space.
    pub null_basis: CMat,
    /// `E_k = C(a_k, d_k)`
    pub selections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionCriterion {
    /// Maximize `Π |λ_j|` of `U_kᴴ G_kk A`.
    #[default]
    GeometricSnr,
    /// Maximize the received desired power `‖U_kᴴ G_kk A‖²_F`.
    ReceivedPower,
}

#[derive(Debug, Clone)]
pub struct OneShotOptions {
    pub rank_tol: f64,
    pub criterion: SelectionCriterion,
    /// Reverse-link powers `P̄_l`; `None` reuses the forward powers.
    pub reverse_powers: Option<Vec<f64>>,
}

impl Default for OneShotOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            criterion: SelectionCriterion::GeometricSnr,
            reverse_powers: None,
        }
    }
}

/// Outcome of the subset search for one user.
#[derive(Debug, Clone)]
pub struct Selection {
    pub precoder: CMat,
    /// Indices of the chosen columns of `T_k`.
    pub columns: Vec<usize>,
    /// Score of the chosen subset under the active criterion.
    pub score: f64,
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct OneShotSolution {
    pub beamformers: BeamformerSet,
    pub svd: Vec<SvdCache>,
    pub reciprocal: Vec<ReciprocalState>,
    pub selections: Vec<Selection>,
}

pub fn design_receive_beamformers(
    g: &EquivalentChannel,
    config: &NetworkConfig,
) -> Result<(Vec<CMat>, Vec<SvdCache>)> {
    let k = config.num_users();
    let mut filters = Vec::with_capacity(k);
    let mut caches = Vec::with_capacity(k);
    for user in 0..k {
        let gkk = g.block(user, user);
        let d = config.dof[user];
        let available = gkk.nrows().min(gkk.ncols());
        if d > available {
            return Err(Error::Dimension {
                user,
                dof: d,
                available,
            });
        }
        let svd = sorted_svd(gkk)?;
        let cache = SvdCache {
            left: svd.left,
            singular_values: svd.singular_values,
            right: svd.right,
            dof: d,
        };
        filters.push(cache.left_truncated());
        caches.push(cache);
    }
    Ok((filters, caches))
}

/// `Q̄_k = Σ_{l≠k} (P̄_l / d_l) G_lkᴴ U_l U_lᴴ G_lk` for every `k`.
pub fn reciprocal_interference_covariance(
    g: &EquivalentChannel,
    receive: &[CMat],
    config: &NetworkConfig,
    reverse_powers: &[f64],
) -> Result<Vec<CMat>> {
    let k = config.num_users();
    if receive.len() != k || reverse_powers.len() != k {
        return Err(Error::Shape(format!(
            "{} filters and {} reverse powers for {k} users",
            receive.len(),
            reverse_powers.len()
        )));
    }
    Ok((0..k)
        .map(|tx| {
            let width = g.cols_of(tx);
            let mut q = CMat::zeros(width, width);
            for (rx, u) in receive.iter().enumerate() {
                let d = u.ncols();
                if rx == tx || d == 0 {
                    continue;
                }
                let a = u.adjoint() * g.block(rx, tx);
                q += a.adjoint() * a * crate::linalg::c64(reverse_powers[rx] / d as f64, 0.0);
            }
            q
        })
        .collect())
}

pub fn reciprocal_state(covariance: CMat, dof: usize, rank_tol: f64) -> ReciprocalState {
    let null_basis = null_space_basis(&covariance, rank_tol);
    let nullity = null_basis.ncols();
    ReciprocalState {
        rank: covariance.nrows() - nullity,
        nullity,
        selections: if nullity >= dof { binomial(nullity, dof) } else { 0 },
        null_basis,
        covariance,
    }
}

/// Geometric SNR coefficient `Π |λ_j(B)|` of a square `B`.
///
/// The product of eigenvalue moduli equals `|det B|`, which is what is
/// evaluated here.
pub fn geometric_snr(b: &CMat) -> f64 {
    if b.nrows() == 0 {
        return 1.0;
    }
    b.clone().determinant().norm()
}

pub fn select_transmit_beamformer(
    user: usize,
    receive: &CMat,
    g_kk: &CMat,
    null_basis: &CMat,
    dof: usize,
    criterion: SelectionCriterion,
) -> Result<Selection> {
    let nullity = null_basis.ncols();
    if nullity < dof {
        return Err(Error::OneShotInfeasible {
            user,
            nullity: nullity as i64,
            dof,
        });
    }
    let effective = receive.adjoint() * g_kk * null_basis;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut candidates = 0;
    for cols in (0..nullity).combinations(dof) {
        candidates += 1;
        let b = effective.select_columns(&cols);
        let score = match criterion {
            SelectionCriterion::GeometricSnr => geometric_snr(&b),
            SelectionCriterion::ReceivedPower => crate::linalg::frob_sq(&b),
        };
        // strict: earlier (lexicographically smaller) subsets win ties
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((cols, score));
        }
    }
    let (columns, score) = best.expect("at least one subset");
    Ok(Selection {
        precoder: null_basis.select_columns(&columns),
        columns,
        score,
        candidates,
    })
}

/// `S_i = (P_i / d_i) Trace(U_iᴴ G_ii W_i W_iᴴ G_iiᴴ U_i)`.
pub fn received_signal_power(u: &CMat, g_ii: &CMat, w: &CMat, power: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    let a = u.adjoint() * g_ii * w;
    power / dof as f64 * crate::linalg::frob_sq(&a)
}

/// The same power written through the SVD of `G_ii` with `U_i = F̃_i`:
/// `(P_i / d_i) Σ_j σ_j² Σ_l |⟨m_j, w_l⟩|²`.
///
/// Returns the power and the per-stream degradation factors `Σ_l |⟨m_j, w_l⟩|²`.
pub fn received_signal_power_expanded(svd: &SvdCache, w: &CMat, power: f64) -> (f64, Vec<f64>) {
    let d = svd.dof;
    if d == 0 {
        return (0.0, Vec::new());
    }
    let factors: Vec<f64> = (0..d)
        .map(|j| {
            let mj = svd.right.column(j);
            w.column_iter().map(|wl| mj.dotc(&wl).norm_sqr()).sum()
        })
        .collect();
    let total = svd
        .singular_truncated()
        .iter()
        .zip(&factors)
        .map(|(s, f)| s * s * f)
        .sum::<f64>();
    (power / d as f64 * total, factors)
}

/// `S_i^max = (P_i / d_i) Σ_{j ≤ d_i} σ_j²`.
pub fn max_signal_power(svd: &SvdCache, power: f64) -> f64 {
    if svd.dof == 0 {
        return 0.0;
    }
    power / svd.dof as f64 * svd.singular_truncated().iter().map(|s| s * s).sum::<f64>()
}

/// Predicted null-space dimension `n̄_k - (d̂ - d_k)` for generic channels.
pub fn predicted_nullity(config: &NetworkConfig, user: usize) -> i64 {
    config.joint_width(user) as i64 - (config.total_dof() - config.dof[user]) as i64
}

/// Check the one-shot bound `d̂ ≤ n̄_k` for every active user.
pub fn check_one_shot_bound(config: &NetworkConfig) -> Result<()> {
    for user in 0..config.num_users() {
        let d = config.dof[user];
        if d == 0 {
            continue;
        }
        let nullity = predicted_nullity(config, user);
        if nullity < d as i64 {
            return Err(Error::OneShotInfeasible {
                user,
                nullity,
                dof: d,
            });
        }
    }
    Ok(())
}

pub fn one_shot_ia(config: &NetworkConfig, channel: &ChannelSet) -> Result<BeamformerSet> {
    one_shot_ia_with(config, channel, &OneShotOptions::default()).map(|s| s.beamformers)
}

pub fn one_shot_ia_with(
    config: &NetworkConfig,
    channel: &ChannelSet,
    opts: &OneShotOptions,
) -> Result<OneShotSolution> {
    config.validate()?;
    let g = equivalent_from_config(channel, config)?;
    one_shot_on_equivalent(config, &g, opts)
}

pub fn one_shot_on_equivalent(
    config: &NetworkConfig,
    g: &EquivalentChannel,
    opts: &OneShotOptions,
) -> Result<OneShotSolution> {
    check_one_shot_bound(config)?;
    let k = config.num_users();
    let (receive, svd) = design_receive_beamformers(g, config)?;
    let reverse = opts
        .reverse_powers
        .clone()
        .unwrap_or_else(|| config.tx_power.clone());
    let covariances = reciprocal_interference_covariance(g, &receive, config, &reverse)?;

    let mut reciprocal = Vec::with_capacity(k);
    let mut selections = Vec::with_capacity(k);
    let mut transmit = Vec::with_capacity(k);
    for (user, q) in covariances.into_iter().enumerate() {
        let d = config.dof[user];
        let state = reciprocal_state(q, d, opts.rank_tol);
        let gkk = g.block(user, user);
        let sel = select_transmit_beamformer(
            user,
            &receive[user],
            gkk,
            &state.null_basis,
            d,
            opts.criterion,
        )?;
        if d > 0 {
            let desired = receive[user].adjoint() * gkk * &sel.precoder;
            let s = singular_values(&desired);
            let min_sv = s.last().copied().unwrap_or(0.0);
            let scale = svd[user].singular_values.first().copied().unwrap_or(0.0);
            if min_sv <= DESIRED_RANK_TOL * scale {
                return Err(Error::RankDeficientDesired {
                    user,
                    min_singular: min_sv,
                });
            }
        }
        transmit.push(sel.precoder.clone());
        selections.push(sel);
        reciprocal.push(state);
    }
    let split = split_beamformer(&transmit, config)?;
    Ok(OneShotSolution {
        beamformers: BeamformerSet {
            receive,
            transmit,
            split: Some(split),
        },
        svd,
        reciprocal,
        selections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, orthonormality_error, random_matrix, random_orthonormal};
    use crate::network::generate_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_block_gives_standard_basis() {
        let mut g = CMat::zeros(2, 4);
        g[(0, 1)] = c64(1.0, 0.0);
        g[(1, 0)] = c64(3.0, 0.0);
        let svd = sorted_svd(&g).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
        let e1 = svd.left.column(0);
        assert!((e1[1].norm() - 1.0).abs() < 1e-14 && e1[0].norm() < 1e-14);
    }

    #[test]
    fn receive_filters_diagonalize_gram() {
        let c = NetworkConfig::symmetric(3, 2, 2, 2).unwrap();
        let h = generate_channel(&c, 17).unwrap();
        let g = equivalent_from_config(&h, &c).unwrap();
        let (u, svd) = design_receive_beamformers(&g, &c).unwrap();
        for k in 0..3 {
            let gkk = g.block(k, k);
            let m = u[k].adjoint() * gkk * gkk.adjoint() * &u[k];
            let s = &svd[k].singular_values;
            assert!((m[(0, 0)].re - s[0] * s[0]).abs() < 1e-10);
            assert!((m[(1, 1)].re - s[1] * s[1]).abs() < 1e-10);
            assert!(m[(0, 1)].norm() < 1e-10);
        }
    }

    #[test]
    fn single_term_covariance_has_rank_one() {
        let c = NetworkConfig::symmetric(2, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 3).unwrap();
        let g = equivalent_from_config(&h, &c).unwrap();
        let (u, _) = design_receive_beamformers(&g, &c).unwrap();
        let q = reciprocal_interference_covariance(&g, &u, &c, &[1.0, 2.0]).unwrap();
        let a = u[1].adjoint() * g.block(1, 0);
        let expect = a.adjoint() * a * c64(2.0, 0.0);
        assert!((&q[0] - expect).norm() < 1e-12);
        let st = reciprocal_state(q[0].clone(), 1, DEFAULT_RANK_TOL);
        assert_eq!((st.rank, st.nullity, st.selections), (1, 3, 3));
    }

    #[test]
    fn flexible_and_rigid_nullities() {
        let c = NetworkConfig::symmetric(3, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 21).unwrap();
        let sol = one_shot_ia_with(&c, &h, &OneShotOptions::default()).unwrap();
        for st in &sol.reciprocal {
            assert_eq!((st.rank, st.nullity, st.selections), (2, 2, 2));
        }
        let rigid = c.with_dof(vec![2, 1, 1]).unwrap();
        let sol = one_shot_ia_with(&rigid, &h, &OneShotOptions::default()).unwrap();
        for (k, st) in sol.reciprocal.iter().enumerate() {
            assert_eq!(st.nullity, rigid.dof[k]);
            assert_eq!(st.selections, 1);
            assert_eq!(sol.beamformers.transmit[k], st.null_basis);
        }
    }

    #[test]
    fn single_stream_choice_is_largest_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = random_orthonormal(2, 1, &mut rng);
        let g = random_matrix(2, 4, &mut rng);
        let t = random_orthonormal(4, 2, &mut rng);
        let sel =
            select_transmit_beamformer(0, &u, &g, &t, 1, SelectionCriterion::GeometricSnr).unwrap();
        let gains: Vec<f64> = (0..2)
            .map(|j| (u.adjoint() * &g * t.column(j))[(0, 0)].norm())
            .collect();
        let want = if gains[1] > gains[0] { 1 } else { 0 };
        assert_eq!(sel.columns, vec![want]);
        assert!((sel.score - gains[want]).abs() < 1e-12);
    }

    #[test]
    fn selection_rejects_small_null_space() {
        let t = CMat::zeros(4, 1);
        let u = CMat::zeros(2, 2);
        let g = CMat::zeros(2, 4);
        assert_eq!(
            select_transmit_beamformer(3, &u, &g, &t, 2, SelectionCriterion::GeometricSnr)
                .unwrap_err(),
            Error::OneShotInfeasible {
                user: 3,
                nullity: 1,
                dof: 2
            }
        );
    }

    #[test]
    fn infeasible_bound_k5() {
        let c = NetworkConfig::symmetric(5, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 1).unwrap();
        assert!(matches!(
            one_shot_ia(&c, &h),
            Err(Error::OneShotInfeasible { nullity: 0, dof: 1, .. })
        ));
    }

    #[test]
    fn max_power_at_dominant_precoder() {
        let c = NetworkConfig::symmetric(3, 2, 2, 2).unwrap();
        let h = generate_channel(&c, 4).unwrap();
        let g = equivalent_from_config(&h, &c).unwrap();
        let (u, svd) = design_receive_beamformers(&g, &c).unwrap();
        let w = svd[0].right_truncated();
        let s = received_signal_power(&u[0], g.block(0, 0), &w, 3.0, 2);
        let smax = max_signal_power(&svd[0], 3.0);
        assert!((s - smax).abs() <= 1e-10 * smax);
    }

    #[test]
    fn orthogonal_precoder_delivers_nothing() {
        let c = NetworkConfig::symmetric(3, 2, 2, 2).unwrap();
        let h = generate_channel(&c, 6).unwrap();
        let g = equivalent_from_config(&h, &c).unwrap();
        let (u, svd) = design_receive_beamformers(&g, &c).unwrap();
        // right singular vectors beyond the rank span the kernel of G_00
        let kernel = crate::linalg::null_space_basis(
            &(g.block(0, 0).adjoint() * g.block(0, 0)),
            DEFAULT_RANK_TOL,
        );
        assert_eq!(kernel.ncols(), 2);
        let s = received_signal_power(&u[0], g.block(0, 0), &kernel, 1.0, 2);
        assert!(s < 1e-20);
        let (s2, f) = received_signal_power_expanded(&svd[0], &kernel, 1.0);
        assert!(s2 < 1e-20 && f.iter().all(|x| *x < 1e-20));
    }

    #[test]
    fn solution_is_orthonormal_and_split() {
        let c = NetworkConfig::symmetric(4, 2, 2, 1).unwrap();
        let h = generate_channel(&c, 99).unwrap();
        let bf = one_shot_ia(&c, &h).unwrap();
        assert!(bf.orthonormality_error() < 1e-10);
        let split = bf.split.as_ref().unwrap();
        for k in 0..4 {
            assert_eq!(split.primary[k].nrows(), 2);
            assert!(orthonormality_error(&bf.transmit[k]) < 1e-10);
        }
    }

    #[test]
    fn silent_users_are_skipped() {
        let c = NetworkConfig::symmetric(5, 2, 2, 1).unwrap().with_dof(vec![1, 1, 0, 1, 1]).unwrap();
        let h = generate_channel(&c, 8).unwrap();
        let bf = one_shot_ia(&c, &h).unwrap();
        assert_eq!(bf.transmit[2].shape(), (4, 0));
        assert_eq!(bf.receive[2].shape(), (2, 0));
    }
}
