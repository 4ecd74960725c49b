//! DOF upper bounds, properness tests, uniform time-sharing of fractional DOF,
//! and backhaul overhead of CSI exchange.
//!
//! Properness is evaluated at the DOF upper bound with the per-user share
//! `d̃ = d̂ / K` kept as an exact rational, so equality cases are decided
//! without rounding.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_integer::binomial;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

fn rat(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// DOF upper bound `d̂ = ⌊Σ (c_k - rem(c_k, 2)) / 4⌋` with `c_k = m_k + n_k`.
///
/// For identical links this is `⌊K (c - rem(c, 2)) / 4⌋`.
pub fn dof_upper_bound(m: &[usize], n: &[usize]) -> usize {
    assert_eq!(m.len(), n.len(), "antenna lists differ in length");
    let total: usize = m
        .iter()
        .zip(n)
        .map(|(&mk, &nk)| {
            let c = mk + nk;
            c - c % 2
        })
        .sum();
    total / 4
}

/// Symmetric shorthand for [`dof_upper_bound`].
pub fn dof_upper_bound_symmetric(k: usize, m: usize, n: usize) -> usize {
    dof_upper_bound(&vec![m; k], &vec![n; k])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IaMode {
    /// Uncoordinated `(m x n, d)^K` interference channel.
    Generic,
    /// Partially coordinated system, equivalent to `(m x 2n, d)^K`.
    Partial,
}

impl fmt::Display for IaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IaMode::Generic => "generic",
            IaMode::Partial => "partial",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub mode: IaMode,
    /// `(m x n, d̂/K)^K` style descriptor.
    pub system_label: String,
    pub dof_total: usize,
    pub num_equations: Rational,
    pub num_variables: Rational,
    pub proper: bool,
    /// Largest proper `K` from the closed-form bound.
    pub bound_rhs: Rational,
}

fn verdict(mode: IaMode, k: usize, m: usize, n: usize) -> Result<FeasibilityVerdict> {
    if k == 0 || m == 0 || n == 0 {
        return Err(Error::Input("K, m and n must be positive".into()));
    }
    let dof_total = dof_upper_bound_symmetric(k, m, n);
    let required = dof_total.div_ceil(k);
    if m.min(n) < required {
        return Err(Error::AntennaFloor {
            min_antennas: m.min(n),
            required,
        });
    }
    let (ki, mi, ni) = (k as i64, m as i64, n as i64);
    let c = mi + ni;
    let r = c % 2;
    let share = Rational::new(dof_total as i64, ki);
    let num_equations = rat(ki) * share * share * rat(ki - 1);
    let (tx_width, bound_rhs) = match mode {
        IaMode::Generic => (ni, rat(3) + Rational::new(4 * r, c - r)),
        IaMode::Partial => (2 * ni, rat(3) + Rational::new(4 * (ni + r), c - r)),
    };
    // Σ_k d̃ (m + n̄ - 2 d̃)
    let num_variables = rat(ki) * share * (rat(mi + tx_width) - rat(2) * share);
    let share_label = if share.is_integer() {
        share.to_string()
    } else {
        format!("{}/{}", share.numer(), share.denom())
    };
    Ok(FeasibilityVerdict {
        mode,
        system_label: format!("({m} x {tx_width}, {share_label})^{k}"),
        dof_total,
        num_equations,
        num_variables,
        proper: num_equations <= num_variables,
        bound_rhs,
    })
}

/// Properness of the uncoordinated `(m x n)` K-user channel at its DOF bound.
pub fn is_proper_generic(k: usize, m: usize, n: usize) -> Result<FeasibilityVerdict> {
    verdict(IaMode::Generic, k, m, n)
}

/// Properness of the partially coordinated system (equivalent `(m x 2n)`
/// channel) at the DOF bound of the underlying `(m x n)` network.
pub fn is_proper_partial(k: usize, m: usize, n: usize) -> Result<FeasibilityVerdict> {
    verdict(IaMode::Partial, k, m, n)
}

pub fn is_proper(mode: IaMode, k: usize, m: usize, n: usize) -> Result<FeasibilityVerdict> {
    verdict(mode, k, m, n)
}

/// Rotation of fractional DOF so that every user averages `d̂ / K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeShareSchedule {
    pub num_users: usize,
    pub dof_total: usize,
    /// `τ`: number of slots.
    pub tau: usize,
    /// `θ`: slots in which a given user gets the larger share.
    pub theta: usize,
    /// `α = rem(d̂, K)`.
    pub alpha: usize,
    /// `⌊d̂ / K⌋`.
    pub base: usize,
    /// Per slot, the users receiving `⌈d̂ / K⌉` streams.
    pub slot_assignments: Vec<Vec<usize>>,
}

impl TimeShareSchedule {
    /// Per-user streams in one slot.
    pub fn slot_dof(&self, slot: usize) -> Vec<usize> {
        let mut dof = vec![self.base; self.num_users];
        for &u in &self.slot_assignments[slot] {
            dof[u] += 1;
        }
        dof
    }

    pub fn all_slot_dofs(&self) -> Vec<Vec<usize>> {
        (0..self.tau).map(|s| self.slot_dof(s)).collect()
    }

    /// Streams user `k` receives summed over all slots.
    pub fn user_total(&self, user: usize) -> usize {
        (0..self.tau).map(|s| self.slot_dof(s)[user]).sum()
    }

    pub fn user_average(&self, user: usize) -> Rational {
        Rational::new(self.user_total(user) as i64, self.tau as i64)
    }
}

pub fn time_share_schedule(k: usize, dof_total: usize) -> Result<TimeShareSchedule> {
    if k == 0 {
        return Err(Error::Input("K must be at least 1".into()));
    }
    let alpha = dof_total % k;
    let base = dof_total / k;
    let (tau, theta) = if alpha == 0 {
        (1, 0)
    } else {
        (binomial(k, alpha), binomial(k - 1, alpha - 1))
    };
    let slot_assignments: Vec<Vec<usize>> = if alpha == 0 {
        vec![Vec::new()]
    } else {
        (0..k).combinations(alpha).collect()
    };
    debug_assert_eq!(slot_assignments.len(), tau);
    Ok(TimeShareSchedule {
        num_users: k,
        dof_total,
        tau,
        theta,
        alpha,
        base,
        slot_assignments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Line,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordination {
    None,
    Partial,
    Full,
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line" => Ok(Topology::Line),
            "ring" => Ok(Topology::Ring),
            other => Err(Error::Input(format!("unknown topology '{other}'"))),
        }
    }
}

impl FromStr for Coordination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Coordination::None),
            "partial" => Ok(Coordination::Partial),
            "full" => Ok(Coordination::Full),
            other => Err(Error::Input(format!("unknown coordination '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BackhaulReport {
    pub num_users: usize,
    pub topology: Topology,
    pub coordination: Coordination,
    /// Required rate on each BS-to-BS link, in multiples of the single-link CSI rate `R`.
    pub rate_multiple: usize,
}

pub fn backhaul_rate(
    k: usize,
    topology: Topology,
    coordination: Coordination,
) -> Result<BackhaulReport> {
    if k < 2 {
        return Err(Error::Input(format!("backhaul needs K >= 2, got {k}")));
    }
    let rate_multiple = match (coordination, topology) {
        (Coordination::None, _) => 0,
        (Coordination::Partial, Topology::Ring) => k,
        (Coordination::Partial, Topology::Line) => 2 * k,
        (Coordination::Full, Topology::Line) => k * k,
        (Coordination::Full, Topology::Ring) => k * (k - 1),
    };
    Ok(BackhaulReport {
        num_users: k,
        topology,
        coordination,
        rate_multiple,
    })
}

/// Parse helper for the string forms used on the command line.
pub fn backhaul_rate_str(k: usize, topology: &str, coordination: &str) -> Result<BackhaulReport> {
    backhaul_rate(k, topology.parse()?, coordination.parse()?)
}
