//! Per-bus agent. Each bus owns its flow opinions, scaled duals, and the
//! dispatch of its local generators; nothing here touches another bus's
//! state, which is what makes the sweep embarrassingly parallel.
//!
//! The local problem for bus `i` at one iterate is
//!
//! ```text
//! min  c_i(G) + (rho/2) * sum_k sum_j (p_jk - w_jk)^2
//! s.t. sum_j p_jk = G - d_i      for every scenario k
//! ```
//!
//! with `w = z - u`. For fixed `G` the optimal flows are the hyperplane
//! projection `p_jk = w_jk + (G - d_i - S_k)/n`, which collapses the problem
//! to a one-dimensional convex minimization in `G`: closed form for a single
//! generator, derivative bisection with an inner equal-marginal-cost split
//! when the bus has several.

use crate::case::generator_cost;
use crate::consensus::{BranchConsensusState, Side};

/// Stop when the bracket on total generation is this tight (pu).
const TOTAL_TOL: f64 = 1e-10;
/// Stop when the equal-marginal split matches the target total this closely (pu).
const SPLIT_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 200;

/// One incident branch as seen from this bus.
#[derive(Debug, Clone, Copy)]
pub struct Incident {
    /// Index into the scheduler's branch array.
    pub branch: usize,
    pub side: Side,
}

/// Dispatchable unit in pu basis.
#[derive(Debug, Clone)]
pub struct Unit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub pmin: f64,
    pub pmax: f64,
}

impl Unit {
    fn marginal(&self, g: f64) -> f64 {
        2.0 * self.a * g + self.b
    }

    /// Output at price `lambda` (the inverse marginal, clamped to bounds).
    fn at_price(&self, lambda: f64) -> f64 {
        if self.a > 0.0 {
            ((lambda - self.b) / (2.0 * self.a)).clamp(self.pmin, self.pmax)
        } else if lambda > self.b {
            self.pmax
        } else {
            self.pmin
        }
    }
}

/// How a bus's net injection is determined.
#[derive(Debug, Clone)]
pub enum Generation {
    /// Injection pinned to a constant. Generator-less buses use zero; frozen
    /// screening runs pin every bus to its base dispatch.
    Fixed(f64),
    /// Units dispatched by this agent; the total is shared across scenarios.
    Units(Vec<Unit>),
}

/// Flow-plus-dual value for one (branch, scenario, side) slot. Exactly one
/// message per slot is emitted each iteration.
#[derive(Debug, Clone, Copy)]
pub struct NeighborMessage {
    pub branch: usize,
    pub scenario: usize,
    pub side: Side,
    pub sender: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct BusAgentState {
    pub bus: usize,
    /// Demand in pu.
    pub load: f64,
    pub incident: Vec<Incident>,
    pub generation: Generation,
    pub n_scenarios: usize,
    /// Flow opinion `p`, laid out `[scenario * incident.len() + j]`.
    pub flows: Vec<f64>,
    /// Scaled duals `u`, same layout as `flows`.
    pub duals: Vec<f64>,
    /// Per-unit outputs; empty for `Generation::Fixed`.
    pub split: Vec<f64>,
    /// Total generation `G` (pu).
    pub total: f64,
    /// Generation cost at the current split, $/h.
    pub cost: f64,
    scratch_s: Vec<f64>,
}

impl BusAgentState {
    pub fn new(
        bus: usize,
        load: f64,
        incident: Vec<Incident>,
        generation: Generation,
        n_scenarios: usize,
    ) -> Self {
        let entries = incident.len() * n_scenarios;
        let n_units = match &generation {
            Generation::Fixed(_) => 0,
            Generation::Units(us) => us.len(),
        };
        BusAgentState {
            bus,
            load,
            incident,
            generation,
            n_scenarios,
            flows: vec![0.0; entries],
            duals: vec![0.0; entries],
            split: vec![0.0; n_units],
            total: 0.0,
            cost: 0.0,
            scratch_s: vec![0.0; n_scenarios],
        }
    }

    /// Solve the bus's local subproblem against the current consensus state.
    /// Flows land exactly on the balance hyperplane by construction.
    pub fn local_solve(&mut self, branches: &[BranchConsensusState], rho: f64) {
        let n = self.incident.len();
        let ks = self.n_scenarios;

        // First pass: w = z - u, stored provisionally in `flows`, plus the
        // per-scenario sums S_k.
        for k in 0..ks {
            let mut s = 0.0;
            for (j, inc) in self.incident.iter().enumerate() {
                let w = branches[inc.branch].value(k, inc.side) - self.duals[k * n + j];
                self.flows[k * n + j] = w;
                s += w;
            }
            self.scratch_s[k] = s;
        }

        let total = self.choose_total(rho);
        self.total = total;

        let (split, cost) = match &self.generation {
            Generation::Fixed(_) => (None, 0.0),
            Generation::Units(units) => {
                let (split, _) = split_for_total(units, total);
                let cost = units
                    .iter()
                    .zip(split.iter())
                    .map(|(u, &g)| generator_cost(u.a, u.b, u.c, g))
                    .sum();
                (Some(split), cost)
            }
        };
        if let Some(split) = split {
            self.split = split;
        }
        self.cost = cost;

        // Second pass: shift w onto the balance hyperplane for each scenario.
        if n > 0 {
            let inv_n = 1.0 / n as f64;
            for k in 0..ks {
                let shift = (total - self.load - self.scratch_s[k]) * inv_n;
                for j in 0..n {
                    self.flows[k * n + j] += shift;
                }
            }
        }
    }

    /// Pick the total generation minimizing the reduced objective
    /// `c(G) + (rho/2) sum_k (G - d - S_k)^2 / n`.
    fn choose_total(&self, rho: f64) -> f64 {
        let n = self.incident.len();
        match &self.generation {
            Generation::Fixed(g) => *g,
            Generation::Units(units) => {
                let lo: f64 = units.iter().map(|u| u.pmin).sum();
                let hi: f64 = units.iter().map(|u| u.pmax).sum();
                if n == 0 {
                    // No branches: balance forces G = d, up to the box.
                    return self.load.clamp(lo, hi);
                }
                let ks = self.n_scenarios as f64;
                let inv_n = 1.0 / n as f64;
                let sum_s: f64 = self.scratch_s.iter().sum();
                // penalty'(G) = (rho/n) * (K*(G - d) - sum_k S_k)
                let pen_prime =
                    |g: f64| rho * inv_n * (ks * (g - self.load) - sum_s);

                if let [unit] = units.as_slice() {
                    // phi'(G) = 2aG + b + pen'(G) = 0 in closed form.
                    let denom = 2.0 * unit.a + rho * ks * inv_n;
                    let numer = rho * inv_n * (ks * self.load + sum_s) - unit.b;
                    return (numer / denom).clamp(unit.pmin, unit.pmax);
                }

                if hi - lo <= TOTAL_TOL {
                    return lo;
                }
                // Right derivative at the bottom of the box and left
                // derivative at the top decide the clamped cases.
                let lambda_at_lo = units
                    .iter()
                    .map(|u| u.marginal(u.pmin))
                    .fold(f64::INFINITY, f64::min);
                if lambda_at_lo + pen_prime(lo) >= 0.0 {
                    return lo;
                }
                let lambda_at_hi = units
                    .iter()
                    .map(|u| u.marginal(u.pmax))
                    .fold(f64::NEG_INFINITY, f64::max);
                if lambda_at_hi + pen_prime(hi) <= 0.0 {
                    return hi;
                }

                let (mut a, mut b) = (lo, hi);
                for _ in 0..MAX_HALVINGS {
                    if b - a <= TOTAL_TOL {
                        break;
                    }
                    let mid = 0.5 * (a + b);
                    let (_, lambda) = split_for_total(units, mid);
                    if lambda + pen_prime(mid) > 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            }
        }
    }

    /// u <- u + (p - z). At consensus (p == z) this is the identity bitwise.
    pub fn dual_update(&mut self, branches: &[BranchConsensusState]) {
        let n = self.incident.len();
        for k in 0..self.n_scenarios {
            for (j, inc) in self.incident.iter().enumerate() {
                let idx = k * n + j;
                self.duals[idx] += self.flows[idx] - branches[inc.branch].value(k, inc.side);
            }
        }
    }

    /// One message per (incident branch, scenario): the value `p + u` the
    /// branch needs for its consensus step.
    pub fn emit_messages(&self) -> Vec<NeighborMessage> {
        let n = self.incident.len();
        let mut out = Vec::with_capacity(n * self.n_scenarios);
        for k in 0..self.n_scenarios {
            for (j, inc) in self.incident.iter().enumerate() {
                let idx = k * n + j;
                out.push(NeighborMessage {
                    branch: inc.branch,
                    scenario: k,
                    side: inc.side,
                    sender: self.bus,
                    value: self.flows[idx] + self.duals[idx],
                });
            }
        }
        out
    }
}

/// Split a total across units at equal marginal cost: bisect the price until
/// the summed outputs hit the total, then push any leftover onto units with
/// slack so the split sums to the target within float round-off. Returns the
/// split and the clearing price (the derivative of the bus cost curve).
pub fn split_for_total(units: &[Unit], total: f64) -> (Vec<f64>, f64) {
    if units.is_empty() {
        return (Vec::new(), 0.0);
    }
    if let [unit] = units {
        let g = total.clamp(unit.pmin, unit.pmax);
        return (vec![g], unit.marginal(g));
    }

    let mut lo = units
        .iter()
        .map(|u| u.marginal(u.pmin))
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = units
        .iter()
        .map(|u| u.marginal(u.pmax))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..MAX_HALVINGS {
        let mid = 0.5 * (lo + hi);
        let sum: f64 = units.iter().map(|u| u.at_price(mid)).sum();
        if (sum - total).abs() <= SPLIT_TOL {
            lo = mid;
            hi = mid;
            break;
        }
        if sum < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut split: Vec<f64> = units.iter().map(|u| u.at_price(lambda)).collect();

    // Flat-cost units make the summed output jump in lambda; hand whatever
    // is left to units with room, in order.
    let mut residue = total - split.iter().sum::<f64>();
    for (g, u) in split.iter_mut().zip(units.iter()) {
        if residue == 0.0 {
            break;
        }
        let take = if residue > 0.0 {
            residue.min(u.pmax - *g)
        } else {
            residue.max(u.pmin - *g)
        };
        *g += take;
        residue -= take;
    }
    (split, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(a: f64, b: f64, pmin: f64, pmax: f64) -> Unit {
        Unit { a, b, c: 0.0, pmin, pmax }
    }

    fn one_branch_state(z: f64, cap: f64) -> Vec<BranchConsensusState> {
        let mut b = BranchConsensusState::new(0, vec![cap]);
        b.z[0] = [z, -z];
        vec![b]
    }

    fn single_gen_agent(pmax: f64) -> BusAgentState {
        BusAgentState::new(
            0,
            0.0,
            vec![Incident { branch: 0, side: Side::From }],
            Generation::Units(vec![unit(1.0, 0.0, 0.0, pmax)]),
            1,
        )
    }

    #[test]
    fn single_generator_closed_form() {
        // w = z - u = 4, rho = 2: min G^2 + (G - 4)^2 => G = 2, p = 2
        let branches = one_branch_state(4.0, 100.0);
        let mut agent = single_gen_agent(10.0);
        agent.local_solve(&branches, 2.0);
        assert!((agent.total - 2.0).abs() < 1e-12, "G = {}", agent.total);
        assert!((agent.flows[0] - 2.0).abs() < 1e-12, "p = {}", agent.flows[0]);
    }

    #[test]
    fn single_generator_clamped_to_bounds() {
        let branches = one_branch_state(4.0, 100.0);
        let mut agent = single_gen_agent(1.0);
        agent.local_solve(&branches, 2.0);
        assert_eq!(agent.total, 1.0);
        assert!((agent.flows[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_less_bus_is_pure_projection() {
        let mut b0 = BranchConsensusState::new(0, vec![10.0]);
        b0.z[0] = [0.2, -0.2];
        let mut b1 = BranchConsensusState::new(1, vec![10.0]);
        b1.z[0] = [0.2, -0.2];
        let branches = vec![b0, b1];
        let mut agent = BusAgentState::new(
            0,
            1.0,
            vec![
                Incident { branch: 0, side: Side::From },
                Incident { branch: 1, side: Side::From },
            ],
            Generation::Fixed(0.0),
            1,
        );
        agent.local_solve(&branches, 1.0);
        assert_eq!(agent.total, 0.0);
        // p_j = 0.2 + (0 - 1 - 0.4)/2 = -0.5
        assert!((agent.flows[0] + 0.5).abs() < 1e-12);
        assert!((agent.flows[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn local_balance_is_exact() {
        let mut b0 = BranchConsensusState::new(0, vec![10.0, 10.0]);
        b0.z[0] = [0.37, -0.37];
        b0.z[1] = [-0.11, 0.11];
        let mut b1 = BranchConsensusState::new(1, vec![10.0, 10.0]);
        b1.z[0] = [0.05, -0.05];
        b1.z[1] = [0.6, -0.6];
        let branches = vec![b0, b1];
        let mut agent = BusAgentState::new(
            0,
            0.73,
            vec![
                Incident { branch: 0, side: Side::From },
                Incident { branch: 1, side: Side::To },
            ],
            Generation::Units(vec![unit(1.3, 0.2, 0.0, 2.0), unit(0.7, 0.0, 0.1, 1.5)]),
            2,
        );
        agent.duals = vec![0.02, -0.3, 0.14, 0.09];
        agent.local_solve(&branches, 1.7);
        for k in 0..2 {
            let sum: f64 = agent.flows[k * 2..k * 2 + 2].iter().sum();
            let g: f64 = agent.split.iter().sum();
            assert!(
                (sum - (g - agent.load)).abs() < 1e-9,
                "scenario {k}: flows sum {sum} vs G - d {}",
                g - agent.load
            );
        }
    }

    #[test]
    fn two_units_match_equivalent_single_unit() {
        // units g^2 and 2g^2 aggregate to (2/3) G^2 while both are interior
        let branches = one_branch_state(1.0, 100.0);
        let mut twin = BusAgentState::new(
            0,
            0.0,
            vec![Incident { branch: 0, side: Side::From }],
            Generation::Units(vec![unit(1.0, 0.0, 0.0, 10.0), unit(2.0, 0.0, 0.0, 10.0)]),
            1,
        );
        twin.local_solve(&branches, 2.0);
        // min (2/3)G^2 + (G-1)^2 => G = 3/5
        assert!((twin.total - 0.6).abs() < 1e-8, "G = {}", twin.total);
        // split at equal marginal: g1 = 2 g2
        assert!((twin.split[0] - 0.4).abs() < 1e-8);
        assert!((twin.split[1] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn dual_update_fixed_point_at_consensus() {
        let branches = one_branch_state(0.42, 100.0);
        let mut agent = single_gen_agent(10.0);
        agent.flows[0] = 0.42; // p == z
        agent.duals[0] = -1.25;
        let before = agent.duals[0].to_bits();
        agent.dual_update(&branches);
        assert_eq!(agent.duals[0].to_bits(), before);
    }

    #[test]
    fn message_per_branch_scenario_pair() {
        let agent = BusAgentState::new(
            3,
            0.0,
            vec![
                Incident { branch: 0, side: Side::From },
                Incident { branch: 5, side: Side::To },
            ],
            Generation::Fixed(0.0),
            3,
        );
        let msgs = agent.emit_messages();
        assert_eq!(msgs.len(), 6);
        assert!(msgs.iter().all(|m| m.sender == 3));
    }

    #[test]
    fn split_respects_bounds() {
        let units = vec![unit(1.0, 0.0, 0.0, 1.0), unit(1.0, 0.0, 0.0, 10.0)];
        let (split, _) = split_for_total(&units, 3.0);
        assert!((split[0] - 1.0).abs() < 1e-9, "{split:?}");
        assert!((split[1] - 2.0).abs() < 1e-9, "{split:?}");
        let total: f64 = split.iter().sum();
        assert!((total - 3.0).abs() < 1e-10);
    }

    #[test]
    fn split_handles_flat_cost_units() {
        let units = vec![unit(0.0, 1.0, 0.0, 5.0), unit(1.0, 0.0, 0.0, 5.0)];
        let (split, lambda) = split_for_total(&units, 2.0);
        let total: f64 = split.iter().sum();
        assert!((total - 2.0).abs() < 1e-10);
        // at the flat unit's price, the quadratic unit produces lambda/2
        assert!((lambda - 1.0).abs() < 1e-6, "lambda = {lambda}");
        assert!((split[1] - 0.5).abs() < 1e-6, "{split:?}");
        assert!((split[0] - 1.5).abs() < 1e-6, "{split:?}");
    }

    #[test]
    fn isolated_bus_generation_follows_load() {
        let mut agent = BusAgentState::new(
            0,
            1.0,
            vec![],
            Generation::Units(vec![Unit { a: 1.0, b: 0.0, c: 5.0, pmin: 0.0, pmax: 10.0 }]),
            1,
        );
        agent.local_solve(&[], 1.0);
        assert_eq!(agent.total, 1.0);
        assert!((agent.cost - 6.0).abs() < 1e-12);
    }
}
