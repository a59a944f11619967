//! Branch-side consensus: each branch reconciles the two flow opinions of its
//! endpoint buses, then projects the agreement onto the branch limit.
//!
//! The z-update is the proximal step for one branch and one scenario:
//! minimize `(z_ij - m_i)^2 + (z_ji - m_j)^2` subject to `z_ij + z_ji = 0`,
//! where `m` is the endpoint's flow-plus-dual message. Substituting the
//! anti-symmetry gives the closed form `z_ij = (m_i - m_j) / 2`. Projection
//! onto `|z| <= cap` is a magnitude clamp, and storing the to-side as the
//! exact negation keeps anti-symmetry bitwise, including for `cap = 0`,
//! which is how an outage is realized.

use serde::Serialize;
use thiserror::Error;

/// Which end of a branch an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    From,
    To,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::From => 0,
            Side::To => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("residual vectors must share one layout: p has {p}, z has {z}, previous z has {z_prev}")]
    ShapeMismatch { p: usize, z: usize, z_prev: usize },
}

/// Consensus variables for one branch: per scenario, the agreed flow seen
/// from each side, plus the previous iterate for the dual residual.
#[derive(Debug, Clone)]
pub struct BranchConsensusState {
    pub branch: usize,
    /// `[scenario][side]`, anti-symmetric in side.
    pub z: Vec<[f64; 2]>,
    pub z_prev: Vec<[f64; 2]>,
    /// Flow limit per scenario (pu); zero takes the branch out of service.
    pub caps: Vec<f64>,
}

impl BranchConsensusState {
    pub fn new(branch: usize, caps: Vec<f64>) -> Self {
        let n = caps.len();
        BranchConsensusState {
            branch,
            z: vec![[0.0; 2]; n],
            z_prev: vec![[0.0; 2]; n],
            caps,
        }
    }

    pub fn n_scenarios(&self) -> usize {
        self.caps.len()
    }

    pub fn value(&self, scenario: usize, side: Side) -> f64 {
        self.z[scenario][side.index()]
    }

    /// One consensus step for one scenario: average the endpoint messages,
    /// project onto the limit, remember the previous iterate.
    pub fn step(&mut self, scenario: usize, msg_from: f64, msg_to: f64) {
        self.z_prev[scenario] = self.z[scenario];
        let pair = project_branch(z_update(msg_from, msg_to), self.caps[scenario]);
        self.z[scenario] = [pair.0, pair.1];
    }
}

/// Closed-form consensus of the two endpoint messages on the anti-symmetry
/// line: `z_ij = (m_i - m_j) / 2`, `z_ji = -z_ij`.
pub fn z_update(msg_from: f64, msg_to: f64) -> (f64, f64) {
    let z = 0.5 * (msg_from - msg_to);
    (z, -z)
}

/// Euclidean projection of an anti-symmetric pair onto `|z| <= cap`. The
/// clamp acts on the from-side value and the to-side is its exact negation,
/// so the output is anti-symmetric bitwise; `cap = 0` maps everything to
/// `(0.0, 0.0)`.
pub fn project_branch(pair: (f64, f64), cap: f64) -> (f64, f64) {
    let z = pair.0.clamp(-cap, cap);
    if z == 0.0 {
        // normalize -0.0 on both sides so an outaged branch reports exactly
        // zero
        (0.0, 0.0)
    } else {
        (z, -z)
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub iter: usize,
    /// Squared primal residual `sum (p - z)^2` over every bus-side entry.
    pub primal_sq: f64,
    /// Squared dual residual `rho^2 * sum (z - z_prev)^2` over every
    /// branch-side entry.
    pub dual_sq: f64,
    /// Generation cost at this iterate, $/h.
    pub objective: f64,
}

/// Squared residual norms over flattened entry vectors. All three inputs
/// must share one layout and ordering; the caller fixes that ordering
/// (ascending branch id, scenario, side) so sums are reproducible.
pub fn residual_norms(
    p: &[f64],
    z: &[f64],
    z_prev: &[f64],
    rho: f64,
) -> Result<(f64, f64), ConsensusError> {
    if p.len() != z.len() || z.len() != z_prev.len() {
        return Err(ConsensusError::ShapeMismatch {
            p: p.len(),
            z: z.len(),
            z_prev: z_prev.len(),
        });
    }
    let mut primal_sq = 0.0;
    for (pi, zi) in p.iter().zip(z.iter()) {
        let d = pi - zi;
        primal_sq += d * d;
    }
    let mut dual_sq = 0.0;
    for (zi, zp) in z.iter().zip(z_prev.iter()) {
        let d = zi - zp;
        dual_sq += d * d;
    }
    Ok((primal_sq, rho * rho * dual_sq))
}
