//! Distributed DC dispatch with N-1 contingency screening.
//!
//! The solver splits a security-constrained economic dispatch across the
//! network: every bus runs a small local quadratic solve over its generation
//! and incident line flows, every branch reconciles the two ends and clamps
//! the agreed flow to its limit, and scaled dual updates pull the two views
//! together until the primal and dual residuals are inside tolerance. Line
//! outages enter as extra scenarios that share one preventive dispatch, so
//! securing a case never needs anything beyond more consensus variables.
//!
//! The model is the transport relaxation of DC power flow: flow conservation
//! and thermal limits, no angle coupling. [`oracle::kvl_audit`] quantifies
//! the gap to an angle-consistent solution instead of pretending it is zero.
//!
//! Entry points, bottom up:
//!
//! - [`case`]: case files (JSON or MATPOWER), validation, per-unit
//!   normalization, contingency capacity maps.
//! - [`agent`] and [`consensus`]: the per-bus local solve and the per-branch
//!   agreement-plus-projection step.
//! - [`scheduler::run_admm`]: the synchronous sweep; deterministic for any
//!   worker count.
//! - [`driver::solve_scopf`]: base solve, contingency screening, preventive
//!   redispatch to a secure dispatch.
//! - [`oracle`]: independent checks (grid-enumeration dispatch, max-flow
//!   feasibility with cut certificates, KVL audit).
//! - [`report`] and [`cli`]: report files and the `scopf` binary.
//!
//! The `examples/` directory exercises each capability end to end:
//!
//! - `parse_validate`: load a case, list violations, round-trip the file.
//! - `economic_dispatch`: two-bus dispatch against hand KKT values.
//! - `n1_scopf`: three-bus screening and redispatch walkthrough.
//! - `residual_trace`: 14-bus convergence trace written as CSV.
//! - `oracle_crosscheck`: solver cost vs brute-force enumeration.
//! - `kvl_audit`: angle reconstruction and loop mismatch on the 14-bus case.
//! - `matpower_import`: parse a MATPOWER `.m` file and solve it.
//! - `chain_scaling`: per-iteration cost across growing chain networks.

pub mod agent;
pub mod case;
pub mod cli;
pub mod consensus;
pub mod driver;
pub mod oracle;
pub mod report;
pub mod scheduler;

pub use case::{parse_case, Case, CaseError, ScenarioId};
pub use driver::{solve_scopf, ScopfReport, ScreeningMode};
pub use oracle::{brute_force_opf, flow_feasible, kvl_audit};
pub use scheduler::{run_admm, AdmmSolution, SolverConfig};

/// Bundled cases, ready to parse. The capacities and contingency list of
/// the 14-bus case are chosen so the base case is comfortably feasible,
/// two outages force a redispatch, and one outage islands a bus.
pub mod cases {
    /// IEEE 14-bus test system (MATPOWER loads and generator data).
    pub const CASE14: &str = include_str!("../cases/case14.json");
    /// Three buses, two generators, one securable outage.
    pub const CASE3: &str = include_str!("../cases/case3.json");
    /// Two buses with a slack line limit.
    pub const CASE2_UNCONSTRAINED: &str = include_str!("../cases/case2_unconstrained.json");
    /// Two buses with a binding line limit.
    pub const CASE2_CAPPED: &str = include_str!("../cases/case2_capped.json");
}
