//! Synchronous ADMM sweep over bus agents and branch consensus states.
//!
//! Each iteration runs, with a barrier between steps: every bus's local
//! solve, message exchange, every branch's consensus step with projection,
//! every bus's dual update, then residuals and the scaled stopping check.
//! Agents and branches are updated by disjoint parallel maps and all
//! reductions run serially in ascending (branch id, scenario, side) order,
//! so the result is bitwise identical for any worker count.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::agent::{BusAgentState, Generation, Incident, Unit};
use crate::case::{CapacityMap, Case, ScenarioId};
use crate::consensus::{residual_norms, BranchConsensusState, ResidualSample, Side};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Penalty weight, > 0, in per-unit.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Worker threads for the parallel sweeps.
    pub workers: usize,
    /// Record every n-th iteration in the trace (the first and last are
    /// always kept).
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            max_iter: 20_000,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            trace_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidConfig(msg));
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return bad(format!("rho must be positive and finite, got {}", self.rho));
        }
        if self.eps_abs < 0.0 || !self.eps_abs.is_finite() {
            return bad(format!("eps_abs must be >= 0, got {}", self.eps_abs));
        }
        if self.eps_rel < 0.0 || !self.eps_rel.is_finite() {
            return bad(format!("eps_rel must be >= 0, got {}", self.eps_rel));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".to_string());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".to_string());
        }
        if self.trace_every == 0 {
            return bad("trace_every must be at least 1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("scenario set must include the base scenario")]
    MissingBaseScenario,
    #[error("scenario {scenario} has {got} capacities, case has {want} branches")]
    CapacityShape { scenario: String, got: usize, want: usize },
    #[error("warm start does not match this case: {0}")]
    WarmStartMismatch(String),
    #[error("internal: {0}")]
    Internal(String),
}

/// Norms entering the scaled stopping thresholds.
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    pub p: f64,
    pub z: f64,
    pub u: f64,
    /// Count of (bus-side, branch, scenario) entries.
    pub entries: usize,
}

/// Scaled stopping rule: converged when
/// `||r|| <= sqrt(m) eps_abs + eps_rel max(||p||, ||z||)` and
/// `||s|| <= sqrt(m) eps_abs + eps_rel rho ||u||`, both at <=.
pub fn stopping_check(
    primal_sq: f64,
    dual_sq: f64,
    norms: &Norms,
    config: &SolverConfig,
) -> bool {
    let root_m = (norms.entries as f64).sqrt();
    let eps_pri = root_m * config.eps_abs + config.eps_rel * norms.p.max(norms.z);
    let eps_dual = root_m * config.eps_abs + config.eps_rel * config.rho * norms.u;
    primal_sq.sqrt() <= eps_pri && dual_sq.sqrt() <= eps_dual
}

/// Converged (or stopped) ADMM iterate, in per-unit.
#[derive(Debug, Clone)]
pub struct AdmmSolution {
    pub converged: bool,
    pub iterations: usize,
    /// Generation cost, $/h, recomputed from `dispatch`.
    pub objective: f64,
    /// Per generator, case order.
    pub dispatch: Vec<f64>,
    /// Per bus, case order.
    pub bus_generation: Vec<f64>,
    /// Scenarios in ascending order (base first).
    pub scenario_ids: Vec<ScenarioId>,
    /// Branch ids in ascending order; all flow/dual layouts follow this.
    pub branch_ids: Vec<String>,
    /// Agreed from-side flow per `[scenario * branches + slot]`.
    pub flows: Vec<f64>,
    /// Scaled duals per `[(slot * scenarios + scenario) * 2 + side]`.
    pub duals: Vec<f64>,
    pub trace: Vec<ResidualSample>,
    /// Final squared residuals.
    pub primal_sq: f64,
    pub dual_sq: f64,
}

impl AdmmSolution {
    pub fn scenario_index(&self, id: &ScenarioId) -> Option<usize> {
        self.scenario_ids.iter().position(|s| s == id)
    }

    pub fn branch_slot(&self, id: &str) -> Option<usize> {
        self.branch_ids.binary_search_by(|b| b.as_str().cmp(id)).ok()
    }

    /// Agreed from-side flow (pu) for one scenario and branch id.
    pub fn flow(&self, scenario: &ScenarioId, branch_id: &str) -> Option<f64> {
        let k = self.scenario_index(scenario)?;
        let slot = self.branch_slot(branch_id)?;
        Some(self.flows[k * self.branch_ids.len() + slot])
    }
}

/// Solve the multi-scenario dispatch problem by consensus ADMM. The scenario
/// set must include the base scenario; `warm` restarts from an earlier
/// solution on the same case (scenarios absent from it fall back to its base
/// values projected onto the scenario's capacities).
pub fn run_admm(
    case: &Case,
    scenarios: &CapacityMap,
    config: &SolverConfig,
    warm: Option<&AdmmSolution>,
) -> Result<AdmmSolution, SolveError> {
    if scenarios.get(&ScenarioId::Base).is_none() {
        return Err(SolveError::MissingBaseScenario);
    }
    let scenario_list: Vec<(ScenarioId, Vec<f64>)> =
        scenarios.scenarios().map(|(id, caps)| (id.clone(), caps.clone())).collect();
    solve(case, scenario_list, config, warm, None)
}

/// Screening variant: every bus's injection is pinned to `bus_generation`
/// and the cost term is absent. Used to test whether a fixed dispatch can be
/// carried in the given scenarios.
pub fn run_admm_frozen(
    case: &Case,
    scenario_id: ScenarioId,
    caps: Vec<f64>,
    config: &SolverConfig,
    bus_generation: &[f64],
) -> Result<AdmmSolution, SolveError> {
    if bus_generation.len() != case.buses.len() {
        return Err(SolveError::Internal(format!(
            "frozen dispatch has {} entries, case has {} buses",
            bus_generation.len(),
            case.buses.len()
        )));
    }
    solve(case, vec![(scenario_id, caps)], config, None, Some(bus_generation))
}

fn solve(
    case: &Case,
    scenario_list: Vec<(ScenarioId, Vec<f64>)>,
    config: &SolverConfig,
    warm: Option<&AdmmSolution>,
    frozen: Option<&[f64]>,
) -> Result<AdmmSolution, SolveError> {
    config.validate()?;
    for (id, caps) in &scenario_list {
        if caps.len() != case.branches.len() {
            return Err(SolveError::CapacityShape {
                scenario: id.to_string(),
                got: caps.len(),
                want: case.branches.len(),
            });
        }
    }

    let n_buses = case.buses.len();
    let n_slots = case.branches.len();
    let n_scen = scenario_list.len();
    let scenario_ids: Vec<ScenarioId> = scenario_list.iter().map(|(id, _)| id.clone()).collect();

    // Canonical branch order: ascending id. Every flat layout and every
    // reduction follows it.
    let mut order: Vec<usize> = (0..n_slots).collect();
    order.sort_by(|&a, &b| case.branches[a].id.cmp(&case.branches[b].id));
    let branch_ids: Vec<String> = order.iter().map(|&i| case.branches[i].id.clone()).collect();

    let mut branches: Vec<BranchConsensusState> = order
        .iter()
        .enumerate()
        .map(|(slot, &ci)| {
            let caps = scenario_list.iter().map(|(_, caps)| caps[ci]).collect();
            BranchConsensusState::new(slot, caps)
        })
        .collect();

    // Who owns each (slot, side): (bus, position in that bus's incident list).
    let mut incident: Vec<Vec<Incident>> = vec![Vec::new(); n_buses];
    let mut side_owner: Vec<[(usize, usize); 2]> = vec![[(0, 0); 2]; n_slots];
    for (slot, &ci) in order.iter().enumerate() {
        let br = &case.branches[ci];
        side_owner[slot][Side::From.index()] = (br.from, incident[br.from].len());
        incident[br.from].push(Incident { branch: slot, side: Side::From });
        side_owner[slot][Side::To.index()] = (br.to, incident[br.to].len());
        incident[br.to].push(Incident { branch: slot, side: Side::To });
    }

    let mut gens_by_bus: Vec<Vec<usize>> = vec![Vec::new(); n_buses];
    for (gi, g) in case.generators.iter().enumerate() {
        gens_by_bus[g.bus].push(gi);
    }

    let mut agents: Vec<BusAgentState> = (0..n_buses)
        .map(|bi| {
            let generation = match frozen {
                Some(dispatch) => Generation::Fixed(dispatch[bi]),
                None => {
                    if gens_by_bus[bi].is_empty() {
                        Generation::Fixed(0.0)
                    } else {
                        Generation::Units(
                            gens_by_bus[bi]
                                .iter()
                                .map(|&gi| {
                                    let g = &case.generators[gi];
                                    Unit {
                                        a: g.a,
                                        b: g.b,
                                        c: g.c,
                                        pmin: g.pmin,
                                        pmax: g.pmax,
                                    }
                                })
                                .collect(),
                        )
                    }
                }
            };
            BusAgentState::new(
                bi,
                case.buses[bi].load,
                std::mem::take(&mut incident[bi]),
                generation,
                n_scen,
            )
        })
        .collect();

    if let Some(w) = warm {
        apply_warm_start(w, case, &scenario_ids, &mut branches, &mut agents)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| SolveError::Internal(format!("thread pool: {e}")))?;

    let entries = 2 * n_slots * n_scen;
    let slot_idx = |slot: usize, k: usize, side: usize| (slot * n_scen + k) * 2 + side;

    let mut msgs = vec![0.0f64; entries];
    let mut p_flat = vec![0.0f64; entries];
    let mut u_flat = vec![0.0f64; entries];
    let mut z_flat = vec![0.0f64; entries];
    let mut z_prev_flat = vec![0.0f64; entries];

    let mut trace: Vec<ResidualSample> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut primal_sq = 0.0;
    let mut dual_sq = 0.0;
    let rho = config.rho;

    pool.install(|| -> Result<(), SolveError> {
        for h in 1..=config.max_iter {
            iterations = h;

            // (a) local solves, then an implicit barrier
            agents
                .par_iter_mut()
                .for_each(|a| a.local_solve(&branches, rho));

            // (c) message exchange, one value per (slot, scenario, side)
            for a in &agents {
                for m in a.emit_messages() {
                    msgs[slot_idx(m.branch, m.scenario, m.side.index())] = m.value;
                }
            }

            // (d) consensus + projection per branch
            branches.par_iter_mut().for_each(|b| {
                for k in 0..n_scen {
                    let i = slot_idx(b.branch, k, 0);
                    b.step(k, msgs[i], msgs[i + 1]);
                }
            });

            // (e) dual updates
            agents.par_iter_mut().for_each(|a| a.dual_update(&branches));

            // (f) residuals: gather flat views in canonical order, reduce
            // serially
            for slot in 0..n_slots {
                for k in 0..n_scen {
                    for (side, &(bus, j)) in side_owner[slot].iter().enumerate() {
                        let idx = slot_idx(slot, k, side);
                        let local = k * agents[bus].incident.len() + j;
                        p_flat[idx] = agents[bus].flows[local];
                        u_flat[idx] = agents[bus].duals[local];
                        z_flat[idx] = branches[slot].z[k][side];
                        z_prev_flat[idx] = branches[slot].z_prev[k][side];
                    }
                }
            }
            let (r_sq, s_sq) = residual_norms(&p_flat, &z_flat, &z_prev_flat, rho)
                .map_err(|e| SolveError::Internal(e.to_string()))?;
            primal_sq = r_sq;
            dual_sq = s_sq;

            let objective: f64 = agents.iter().map(|a| a.cost).sum();
            let sample = ResidualSample { iter: h, primal_sq, dual_sq, objective };
            if h == 1 || h % config.trace_every == 0 {
                trace.push(sample);
            }

            // (g) stopping check on scaled thresholds
            let norms = Norms {
                p: dot(&p_flat).sqrt(),
                z: dot(&z_flat).sqrt(),
                u: dot(&u_flat).sqrt(),
                entries,
            };
            if stopping_check(primal_sq, dual_sq, &norms, config) {
                converged = true;
                if trace.last().map(|s| s.iter) != Some(h) {
                    trace.push(sample);
                }
                break;
            }
            if h == config.max_iter && trace.last().map(|s| s.iter) != Some(h) {
                trace.push(sample);
            }
        }
        Ok(())
    })?;

    // Scatter per-bus splits back to case generator order. Frozen runs
    // carry no per-unit splits; their dispatch is the pinned bus total.
    let mut dispatch = vec![0.0f64; case.generators.len()];
    if frozen.is_none() {
        for (bi, agent) in agents.iter().enumerate() {
            for (pos, &gi) in gens_by_bus[bi].iter().enumerate() {
                dispatch[gi] = agent.split[pos];
            }
        }
    }
    let bus_generation: Vec<f64> = agents.iter().map(|a| a.total).collect();
    let objective = match frozen {
        Some(_) => 0.0,
        None => dispatch
            .iter()
            .zip(case.generators.iter())
            .map(|(&g, spec)| crate::case::generator_cost(spec.a, spec.b, spec.c, g))
            .sum(),
    };

    let mut flows = vec![0.0f64; n_scen * n_slots];
    for (slot, b) in branches.iter().enumerate() {
        for k in 0..n_scen {
            flows[k * n_slots + slot] = b.z[k][Side::From.index()];
        }
    }

    Ok(AdmmSolution {
        converged,
        iterations,
        objective,
        dispatch,
        bus_generation,
        scenario_ids,
        branch_ids,
        flows,
        duals: u_flat,
        trace,
        primal_sq,
        dual_sq,
    })
}

fn dot(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Seed branches and duals from an earlier solution on the same case.
/// Scenarios the warm solution does not know fall back to its base-scenario
/// values, projected onto the new scenario's capacities.
fn apply_warm_start(
    warm: &AdmmSolution,
    case: &Case,
    scenario_ids: &[ScenarioId],
    branches: &mut [BranchConsensusState],
    agents: &mut [BusAgentState],
) -> Result<(), SolveError> {
    let n_slots = branches.len();
    if warm.branch_ids.len() != n_slots {
        return Err(SolveError::WarmStartMismatch(format!(
            "{} branches vs {}",
            warm.branch_ids.len(),
            n_slots
        )));
    }
    // Same case implies the same sorted branch ids, so slots line up.
    let mut sorted_ids: Vec<&str> = case.branches.iter().map(|b| b.id.as_str()).collect();
    sorted_ids.sort_unstable();
    for (slot, id) in warm.branch_ids.iter().enumerate() {
        if sorted_ids[slot] != id {
            return Err(SolveError::WarmStartMismatch(format!(
                "branch {} at slot {slot}, expected {}",
                id, sorted_ids[slot]
            )));
        }
    }

    let warm_k = warm.scenario_ids.len();
    let source_of: Vec<usize> = scenario_ids
        .iter()
        .map(|id| {
            warm.scenario_index(id)
                .or_else(|| warm.scenario_index(&ScenarioId::Base))
                .unwrap_or(0)
        })
        .collect();

    let mut u_init: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for (slot, br) in branches.iter_mut().enumerate() {
        for (k, &wk) in source_of.iter().enumerate() {
            let z = warm.flows[wk * n_slots + slot];
            let cap = br.caps[k];
            let z = z.clamp(-cap, cap);
            let z = if z == 0.0 { 0.0 } else { z };
            br.z[k] = [z, -z];
            br.z_prev[k] = [z, -z];
            for side in 0..2 {
                let value = warm.duals[(slot * warm_k + wk) * 2 + side];
                u_init.insert((slot, k, side), value);
            }
        }
    }
    for agent in agents.iter_mut() {
        let n = agent.incident.len();
        for k in 0..agent.n_scenarios {
            for (j, inc) in agent.incident.iter().enumerate() {
                if let Some(&v) = u_init.get(&(inc.branch, k, inc.side.index())) {
                    agent.duals[k * n + j] = v;
                }
            }
        }
    }
    Ok(())
}
