//! Security-constrained dispatch: base solve, contingency screening, and
//! preventive redispatch against the violated outages.
//!
//! The loop is screen-and-cut: solve the base case, screen every contingency
//! against the frozen base dispatch, pull the violated ones into a coupled
//! multi-scenario redispatch (warm-started from the previous solution), and
//! re-screen until no new violation appears. Outages that would split the
//! network are reported but excluded from the dispatch problem.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::case::{apply_contingency, CapacityMap, Case, CaseError, ScenarioId};
use crate::oracle::{flow_feasible, OracleError};
use crate::scheduler::{run_admm, run_admm_frozen, AdmmSolution, SolveError, SolverConfig};

/// Screening verdicts tolerate this much undeliverable surplus (pu) before a
/// contingency counts as violated. Redispatch leaves binding limits exactly
/// at capacity up to solver precision; an exact-zero threshold would flip
/// verdicts on that noise.
pub const SCREEN_DEFICIT_TOL: f64 = 1e-3;

/// How a contingency's post-outage feasibility is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreeningMode {
    /// Max-flow transport check of the frozen injections. Exact, and the
    /// min cut names the limiting branches.
    Exact,
    /// Re-run consensus with generation frozen; violation shows up as a
    /// primal residual that will not fall.
    Admm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Secure,
    Violated,
    /// Outage splits the network; no redispatch can cover it.
    Islanding,
}

#[derive(Debug, Clone)]
pub struct ScreeningResult {
    pub contingency: String,
    pub verdict: Verdict,
    /// Branches limiting delivery, ascending id; empty unless violated.
    pub cut: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timing {
    pub base_ms: u64,
    pub screening_ms: u64,
    pub redispatch_ms: u64,
    pub total_ms: u64,
}

/// Outcome of the full screen-and-redispatch run.
#[derive(Debug, Clone)]
pub struct ScopfReport {
    /// Base-case-only solution the screening started from.
    pub base: AdmmSolution,
    /// Final verdict per requested contingency, input order.
    pub screening: Vec<ScreeningResult>,
    /// Contingencies the final dispatch was secured against, ascending.
    pub active: Vec<String>,
    /// Final (possibly redispatched) solution.
    pub solution: AdmmSolution,
    /// True when the final dispatch converged and no screened contingency
    /// is still violated. Islanding outages do not count against this.
    pub secure: bool,
    /// Screening rounds performed.
    pub rounds: usize,
    pub timing: Timing,
}

/// Redispatch rounds before giving up on a fixed point of screen-and-cut.
const MAX_ROUNDS: usize = 5;

/// Solve the base case alone.
pub fn solve_base(case: &Case, config: &SolverConfig) -> Result<AdmmSolution, SolveError> {
    run_admm(case, &CapacityMap::base_only(case), config, None)
}

/// Test one contingency against a fixed dispatch.
pub fn screen_contingency(
    case: &Case,
    solution: &AdmmSolution,
    contingency_id: &str,
    mode: ScreeningMode,
    config: &SolverConfig,
) -> Result<ScreeningResult, DriverError> {
    let caps = match apply_contingency(case, contingency_id) {
        Ok(caps) => caps,
        Err(CaseError::Islanding { .. }) => {
            return Ok(ScreeningResult {
                contingency: contingency_id.to_string(),
                verdict: Verdict::Islanding,
                cut: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    match mode {
        ScreeningMode::Exact => {
            let mut injections: Vec<f64> = case
                .buses
                .iter()
                .enumerate()
                .map(|(i, b)| solution.bus_generation[i] - b.load)
                .collect();
            // The dispatch balances only to solver precision; absorb the
            // residual where it is relatively smallest so the transport
            // check sees an exactly balanced system.
            let residual: f64 = injections.iter().sum();
            if residual != 0.0 {
                let at = injections
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                injections[at] -= residual;
            }
            let feas = flow_feasible(case, &caps, &injections)?;
            let deficit = feas.required - feas.delivered;
            if deficit > SCREEN_DEFICIT_TOL {
                Ok(ScreeningResult {
                    contingency: contingency_id.to_string(),
                    verdict: Verdict::Violated,
                    cut: feas.cut,
                })
            } else {
                Ok(ScreeningResult {
                    contingency: contingency_id.to_string(),
                    verdict: Verdict::Secure,
                    cut: Vec::new(),
                })
            }
        }
        ScreeningMode::Admm => {
            let scenario = ScenarioId::Outage(contingency_id.to_string());
            let frozen =
                run_admm_frozen(case, scenario, caps.clone(), config, &solution.bus_generation)?;
            let violated = !frozen.converged && frozen.primal_sq > 1e-6;
            let cut = if violated {
                // The saturated branches play the role of the cut.
                let mut ids: Vec<String> = frozen
                    .branch_ids
                    .iter()
                    .enumerate()
                    .filter(|(slot, id)| {
                        let ci = case.branch_index(id).expect("solution branch in case");
                        let cap = caps[ci];
                        cap > 0.0 && frozen.flows[*slot].abs() >= cap - 1e-6
                    })
                    .map(|(_, id)| id.clone())
                    .collect();
                ids.sort_unstable();
                ids
            } else {
                Vec::new()
            };
            Ok(ScreeningResult {
                contingency: contingency_id.to_string(),
                verdict: if violated { Verdict::Violated } else { Verdict::Secure },
                cut,
            })
        }
    }
}

fn screen_all(
    case: &Case,
    solution: &AdmmSolution,
    contingency_ids: &[String],
    mode: ScreeningMode,
    config: &SolverConfig,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ScreeningResult>, DriverError> {
    match mode {
        // Each exact check is cheap and serial, so fan the contingencies
        // out; collected order follows input order regardless of workers.
        ScreeningMode::Exact => pool.install(|| {
            contingency_ids
                .par_iter()
                .map(|id| screen_contingency(case, solution, id, mode, config))
                .collect()
        }),
        // Each frozen run parallelizes internally; keep the outer loop
        // serial rather than nesting pools.
        ScreeningMode::Admm => contingency_ids
            .iter()
            .map(|id| screen_contingency(case, solution, id, mode, config))
            .collect(),
    }
}

/// Full preventive run: base solve, screening, redispatch against violated
/// contingencies, re-screening to a fixed point.
pub fn solve_scopf(
    case: &Case,
    contingency_ids: &[String],
    mode: ScreeningMode,
    config: &SolverConfig,
) -> Result<ScopfReport, DriverError> {
    let started = Instant::now();
    for id in contingency_ids {
        if case.contingency(id).is_none() {
            return Err(CaseError::UnknownContingency(id.clone()).into());
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| SolveError::Internal(format!("thread pool: {e}")))?;

    let base_started = Instant::now();
    let base = solve_base(case, config)?;
    let base_ms = base_started.elapsed().as_millis() as u64;

    let mut screening_ms = 0u64;
    let mut redispatch_ms = 0u64;
    let mut active: BTreeSet<String> = BTreeSet::new();
    let mut solution = base.clone();
    let mut rounds = 0;

    let screening = loop {
        rounds += 1;
        let t = Instant::now();
        let round = screen_all(case, &solution, contingency_ids, mode, config, &pool)?;
        screening_ms += t.elapsed().as_millis() as u64;

        let fresh: Vec<String> = round
            .iter()
            .filter(|r| r.verdict == Verdict::Violated && !active.contains(&r.contingency))
            .map(|r| r.contingency.clone())
            .collect();
        if fresh.is_empty() || rounds >= MAX_ROUNDS {
            break round;
        }
        active.extend(fresh);

        let ids: Vec<&String> = active.iter().collect();
        let caps = CapacityMap::with_contingencies(case, &ids)?;
        let t = Instant::now();
        solution = run_admm(case, &caps, config, Some(&solution))?;
        redispatch_ms += t.elapsed().as_millis() as u64;
    };

    let secure = solution.converged
        && screening.iter().all(|r| r.verdict != Verdict::Violated);
    Ok(ScopfReport {
        base,
        screening,
        active: active.into_iter().collect(),
        solution,
        secure,
        rounds,
        timing: Timing {
            base_ms,
            screening_ms,
            redispatch_ms,
            total_ms: started.elapsed().as_millis() as u64,
        },
    })
}
