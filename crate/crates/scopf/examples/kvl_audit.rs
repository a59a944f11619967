//! Quantify the model gap: the solver enforces flow conservation and line
//! limits but not the voltage-angle coupling, so its flows generally cannot
//! be produced by any set of bus angles. The audit reconstructs angles over
//! a spanning tree and reports the loop closure error on every remaining
//! branch. Zero everywhere means the flows happen to be DC-consistent; on a
//! meshed network expect real mismatches.
//!
//!     cargo run -p scopf --example kvl_audit

use scopf::case::{CapacityMap, ScenarioId};
use scopf::{kvl_audit, parse_case, run_admm, SolverConfig};

fn main() {
    let case = parse_case(scopf::cases::CASE14).unwrap();
    let config = SolverConfig {
        rho: 300.0,
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        ..SolverConfig::default()
    };
    let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None).unwrap();
    assert!(sol.converged);

    let flows: Vec<f64> = case
        .branches
        .iter()
        .map(|b| sol.flow(&ScenarioId::Base, &b.id).unwrap())
        .collect();
    let audit = kvl_audit(&case, &flows).unwrap();

    println!("reference bus {} at angle 0", audit.reference_bus);
    println!("{} buses angled over the spanning tree", audit.angles.len());
    println!("{} loop-closing branches:", audit.cycle_mismatches.len());
    for (id, mismatch) in &audit.cycle_mismatches {
        println!("  {id}: |closure error| = {mismatch:.4e} rad");
    }
    println!("worst: {:.4e} rad", audit.max_mismatch);

    // radial networks close exactly: drop the loop branches and re-audit
    let radial = parse_case(scopf::cases::CASE2_CAPPED).unwrap();
    let rsol = run_admm(
        &radial,
        &CapacityMap::base_only(&radial),
        &SolverConfig { eps_abs: 1e-9, eps_rel: 1e-7, ..SolverConfig::default() },
        None,
    )
    .unwrap();
    let rflows: Vec<f64> = radial
        .branches
        .iter()
        .map(|b| rsol.flow(&ScenarioId::Base, &b.id).unwrap())
        .collect();
    let raudit = kvl_audit(&radial, &rflows).unwrap();
    assert_eq!(raudit.cycle_mismatches.len(), 0);
    println!("radial 2-bus case: no loops, mismatch exactly {}", raudit.max_mismatch);
}
