//! Report files written by the front end: solution/screening JSON, KVL audit
//! JSON, oracle JSON, and the residual trace CSV.
//!
//! Everything here converts back from per-unit to MW. Maps are BTreeMaps and
//! vectors follow input order, so two runs of the same invocation produce
//! byte-identical files except for `timing_ms`, which is kept as the last
//! field so consumers can diff around it.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::case::Case;
use crate::consensus::ResidualSample;
use crate::driver::{ScopfReport, ScreeningResult, Timing, Verdict};
use crate::oracle::{KvlReport, OracleSolution};
use crate::scheduler::AdmmSolution;

#[derive(Debug, Clone, Serialize)]
pub struct ScreeningEntry {
    pub contingency: String,
    pub verdict: Verdict,
    pub cut: Vec<String>,
}

impl From<&ScreeningResult> for ScreeningEntry {
    fn from(r: &ScreeningResult) -> Self {
        ScreeningEntry {
            contingency: r.contingency.clone(),
            verdict: r.verdict,
            cut: r.cut.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimingReport {
    pub base: u64,
    pub screening: u64,
    pub redispatch: u64,
    pub total: u64,
}

impl From<Timing> for TimingReport {
    fn from(t: Timing) -> Self {
        TimingReport {
            base: t.base_ms,
            screening: t.screening_ms,
            redispatch: t.redispatch_ms,
            total: t.total_ms,
        }
    }
}

/// Report written by `solve` and `scopf`. Field order is the file's key
/// order; `timing_ms` stays last.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub converged: bool,
    /// No screened contingency still violated (for a plain solve, equal to
    /// `converged`: the only solved scenario is the base case).
    pub secure: bool,
    pub iterations: usize,
    pub cost_dollars_per_hour: f64,
    /// MW per generator id.
    pub dispatch_mw: BTreeMap<String, f64>,
    /// MW per scenario id, then branch id.
    pub flows_mw: BTreeMap<String, BTreeMap<String, f64>>,
    pub screening: Vec<ScreeningEntry>,
    pub timing_ms: TimingReport,
}

fn dispatch_mw(case: &Case, dispatch: &[f64]) -> BTreeMap<String, f64> {
    case.generators
        .iter()
        .zip(dispatch)
        .map(|(g, &p)| (g.id.clone(), p * case.base_mva))
        .collect()
}

fn flows_mw(case: &Case, sol: &AdmmSolution) -> BTreeMap<String, BTreeMap<String, f64>> {
    let n = sol.branch_ids.len();
    sol.scenario_ids
        .iter()
        .enumerate()
        .map(|(k, sid)| {
            let per_branch = sol
                .branch_ids
                .iter()
                .enumerate()
                .map(|(slot, id)| (id.clone(), sol.flows[k * n + slot] * case.base_mva))
                .collect();
            (sid.to_string(), per_branch)
        })
        .collect()
}

/// Report for a base-case-only solve.
pub fn solve_report(case: &Case, sol: &AdmmSolution, elapsed_ms: u64) -> SolutionReport {
    SolutionReport {
        converged: sol.converged,
        secure: sol.converged,
        iterations: sol.iterations,
        cost_dollars_per_hour: sol.objective,
        dispatch_mw: dispatch_mw(case, &sol.dispatch),
        flows_mw: flows_mw(case, sol),
        screening: Vec::new(),
        timing_ms: TimingReport {
            base: elapsed_ms,
            screening: 0,
            redispatch: 0,
            total: elapsed_ms,
        },
    }
}

/// Report for a full screen-and-redispatch run.
pub fn scopf_report(case: &Case, report: &ScopfReport) -> SolutionReport {
    SolutionReport {
        converged: report.solution.converged,
        secure: report.secure,
        iterations: report.solution.iterations,
        cost_dollars_per_hour: report.solution.objective,
        dispatch_mw: dispatch_mw(case, &report.solution.dispatch),
        flows_mw: flows_mw(case, &report.solution),
        screening: report.screening.iter().map(ScreeningEntry::from).collect(),
        timing_ms: report.timing.into(),
    }
}

/// Report written by `audit-kvl`.
#[derive(Debug, Clone, Serialize)]
pub struct KvlFileReport {
    pub reference_bus: String,
    /// Radians per bus id.
    pub angles_rad: BTreeMap<String, f64>,
    /// Radians per non-tree branch id.
    pub cycle_mismatches: BTreeMap<String, f64>,
    pub max_mismatch_rad: f64,
}

pub fn kvl_report(case: &Case, audit: &KvlReport) -> KvlFileReport {
    KvlFileReport {
        reference_bus: audit.reference_bus.clone(),
        angles_rad: case
            .buses
            .iter()
            .zip(&audit.angles)
            .map(|(b, &a)| (b.id.clone(), a))
            .collect(),
        cycle_mismatches: audit.cycle_mismatches.iter().cloned().collect(),
        max_mismatch_rad: audit.max_mismatch,
    }
}

/// Report written by `oracle`.
#[derive(Debug, Clone, Serialize)]
pub struct OracleFileReport {
    pub feasible: bool,
    pub cost_dollars_per_hour: f64,
    pub dispatch_mw: BTreeMap<String, f64>,
    pub grid_step_mw: f64,
    pub evaluated: usize,
}

pub fn oracle_report(case: &Case, sol: &OracleSolution) -> OracleFileReport {
    OracleFileReport {
        feasible: sol.feasible,
        cost_dollars_per_hour: sol.cost,
        dispatch_mw: if sol.feasible {
            dispatch_mw(case, &sol.dispatch)
        } else {
            BTreeMap::new()
        },
        grid_step_mw: sol.grid_step * case.base_mva,
        evaluated: sol.evaluated,
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    body.push('\n');
    std::fs::write(path, body)
}

/// Residual trace as CSV: header `iter,primal_sq,dual_sq,objective`, floats
/// in scientific notation.
pub fn write_trace_csv(path: &Path, trace: &[ResidualSample]) -> std::io::Result<()> {
    let mut out = Vec::with_capacity(64 * (trace.len() + 1));
    writeln!(out, "iter,primal_sq,dual_sq,objective")?;
    for s in trace {
        writeln!(out, "{},{:e},{:e},{:e}", s.iter, s.primal_sq, s.dual_sq, s.objective)?;
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{parse_case, CapacityMap};
    use crate::driver::{solve_scopf, ScreeningMode};
    use crate::scheduler::{run_admm, SolverConfig};

    fn case() -> Case {
        parse_case(
            r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": "1", "load_mw": 0.0},
                {"id": "2", "load_mw": 100.0}
            ],
            "generators": [
                {"id": "g1", "bus": "1", "a": 0.0001, "b": 0.0, "c": 0.0, "pmin_mw": 0.0, "pmax_mw": 1000.0},
                {"id": "g2", "bus": "2", "a": 0.0002, "b": 0.0, "c": 0.0, "pmin_mw": 0.0, "pmax_mw": 1000.0}
            ],
            "branches": [
                {"id": "1-2", "from": "1", "to": "2", "capacity_mw": 1000.0, "reactance_pu": 0.1}
            ],
            "contingencies": []
        }"#,
        )
        .unwrap()
    }

    fn config() -> SolverConfig {
        SolverConfig { eps_abs: 1e-9, eps_rel: 1e-7, workers: 1, ..SolverConfig::default() }
    }

    #[test]
    fn solve_report_converts_to_mw() {
        let case = case();
        let sol = run_admm(&case, &CapacityMap::base_only(&case), &config(), None).unwrap();
        let report = solve_report(&case, &sol, 7);
        assert!(report.converged && report.secure);
        // per-unit cost basis keeps $/h: 0.0001*(200/3)^2*100^2/100^2 ...
        // hand value: g1 = 200/3 MW, cost = 0.0001*(200/3)^2 + 0.0002*(100/3)^2
        let g1 = report.dispatch_mw["g1"];
        assert!((g1 - 200.0 / 3.0).abs() < 1e-3, "g1 {g1}");
        let want = 0.0001 * (200.0f64 / 3.0).powi(2) + 0.0002 * (100.0f64 / 3.0).powi(2);
        assert!((report.cost_dollars_per_hour - want).abs() < 1e-6);
        let flow = report.flows_mw["base"]["1-2"];
        assert!((flow - 200.0 / 3.0).abs() < 1e-3, "flow {flow}");
        assert_eq!(report.timing_ms.total, 7);
    }

    #[test]
    fn report_json_is_stable_apart_from_timing() {
        let case = case();
        let sol = run_admm(&case, &CapacityMap::base_only(&case), &config(), None).unwrap();
        let a = serde_json::to_value(solve_report(&case, &sol, 3)).unwrap();
        let b = serde_json::to_value(solve_report(&case, &sol, 9)).unwrap();
        let strip = |mut v: serde_json::Value| {
            v.as_object_mut().unwrap().remove("timing_ms");
            v
        };
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn timing_is_last_key_in_the_file() {
        let case = case();
        let sol = run_admm(&case, &CapacityMap::base_only(&case), &config(), None).unwrap();
        let text = serde_json::to_string_pretty(&solve_report(&case, &sol, 1)).unwrap();
        let timing_at = text.find("\"timing_ms\"").unwrap();
        for key in ["\"converged\"", "\"secure\"", "\"dispatch_mw\"", "\"flows_mw\"", "\"screening\""] {
            assert!(text.find(key).unwrap() < timing_at, "{key} after timing_ms");
        }
    }

    #[test]
    fn trace_csv_has_contract_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = vec![
            ResidualSample { iter: 1, primal_sq: 0.5, dual_sq: 0.25, objective: 10.0 },
            ResidualSample { iter: 2, primal_sq: 0.05, dual_sq: 0.025, objective: 9.5 },
        ];
        write_trace_csv(&path, &trace).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next(), Some("iter,primal_sq,dual_sq,objective"));
        assert_eq!(lines.next(), Some("1,5e-1,2.5e-1,1e1"));
        assert_eq!(lines.next(), Some("2,5e-2,2.5e-2,9.5e0"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn scopf_report_carries_screening_entries() {
        let case = parse_case(
            r#"{
            "base_mva": 1.0,
            "buses": [
                {"id": "1", "load_mw": 0.0},
                {"id": "2", "load_mw": 0.0},
                {"id": "3", "load_mw": 1.0}
            ],
            "generators": [
                {"id": "g1", "bus": "1", "a": 1.0, "b": 0.0, "c": 0.0, "pmin_mw": 0.0, "pmax_mw": 2.0},
                {"id": "g2", "bus": "2", "a": 2.0, "b": 0.0, "c": 0.0, "pmin_mw": 0.0, "pmax_mw": 2.0}
            ],
            "branches": [
                {"id": "1-2", "from": "1", "to": "2", "capacity_mw": 0.4, "reactance_pu": 0.1},
                {"id": "1-3", "from": "1", "to": "3", "capacity_mw": 0.5, "reactance_pu": 0.1},
                {"id": "2-3", "from": "2", "to": "3", "capacity_mw": 1.2, "reactance_pu": 0.1}
            ],
            "contingencies": [{"id": "out-1-3", "branch": "1-3"}]
        }"#,
        )
        .unwrap();
        let run = solve_scopf(&case, &["out-1-3".to_string()], ScreeningMode::Exact, &config())
            .unwrap();
        let report = scopf_report(&case, &run);
        assert!(report.secure);
        assert_eq!(report.screening.len(), 1);
        assert_eq!(report.screening[0].contingency, "out-1-3");
        assert!(report.flows_mw.contains_key("base"));
        assert!(report.flows_mw.contains_key("out-1-3"));
        assert!((report.cost_dollars_per_hour - 0.88).abs() < 1e-3);
    }
}
