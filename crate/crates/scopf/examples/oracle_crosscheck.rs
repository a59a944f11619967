//! Check the consensus solver against two independent references: the
//! grid-enumeration dispatch (ground truth for tiny cases) and the max-flow
//! feasibility certificate for the returned flows.
//!
//!     cargo run -p scopf --example oracle_crosscheck

use scopf::case::CapacityMap;
use scopf::{brute_force_opf, flow_feasible, parse_case, run_admm, SolverConfig};

fn main() {
    let config = SolverConfig {
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        ..SolverConfig::default()
    };

    for (name, text, contingencies) in [
        ("2-bus slack", scopf::cases::CASE2_UNCONSTRAINED, vec![]),
        ("2-bus capped", scopf::cases::CASE2_CAPPED, vec![]),
        ("3-bus secured", scopf::cases::CASE3, vec!["out-1-2", "out-1-3"]),
    ] {
        let case = parse_case(text).unwrap();
        let scenarios = CapacityMap::with_contingencies(&case, &contingencies).unwrap();

        let admm = run_admm(&case, &scenarios, &config, None).unwrap();
        assert!(admm.converged);
        let oracle = brute_force_opf(&case, &scenarios, 1000).unwrap();
        assert!(oracle.feasible);
        println!(
            "{name}: solver {:.6} $/h vs enumeration {:.6} $/h (grid step {:.1e}, {} candidates)",
            admm.objective, oracle.cost, oracle.grid_step, oracle.evaluated
        );
        assert!((admm.objective - oracle.cost).abs() < 5e-3);

        // certify every scenario's flows: net injections must be routable
        // within that scenario's limits
        for (sid, caps) in scenarios.scenarios() {
            let mut inj: Vec<f64> = case
                .buses
                .iter()
                .enumerate()
                .map(|(i, b)| admm.bus_generation[i] - b.load)
                .collect();
            let drift: f64 = inj.iter().sum();
            inj[0] -= drift; // consensus balances only to tolerance
            let feas = flow_feasible(&case, caps, &inj).unwrap();
            // a limit that binds at the optimum can sit a solver tolerance
            // past its cap, so certify up to that tolerance
            let deficit = feas.required - feas.delivered;
            assert!(deficit <= 1e-6, "{name}/{sid}: {deficit:.3e} pu short");
        }
        println!("  all {} scenario flows certified routable", scenarios.len());
    }
}
