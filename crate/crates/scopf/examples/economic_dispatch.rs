//! Two-bus dispatch, with and without a binding line limit, checked against
//! the values the optimality conditions give by hand.
//!
//! Unconstrained: costs g1^2 and 2*g2^2 serving 1 pu of load split at equal
//! marginal cost, 2*g1 = 4*g2, so (2/3, 1/3) at cost 2/3. Capping the line
//! at 0.3 pins g1 to what it can export: (0.3, 0.7) at cost 1.07.
//!
//!     cargo run -p scopf --example economic_dispatch

use scopf::case::CapacityMap;
use scopf::{parse_case, run_admm, SolverConfig};

fn main() {
    let config = SolverConfig {
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        ..SolverConfig::default()
    };

    for (name, text, want_cost, want_dispatch) in [
        ("slack line", scopf::cases::CASE2_UNCONSTRAINED, 2.0 / 3.0, [2.0 / 3.0, 1.0 / 3.0]),
        ("binding line", scopf::cases::CASE2_CAPPED, 1.07, [0.3, 0.7]),
    ] {
        let case = parse_case(text).unwrap();
        let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None).unwrap();
        assert!(sol.converged);
        println!(
            "{name}: g1 = {:.6}, g2 = {:.6}, cost = {:.6} $/h ({} iterations)",
            sol.dispatch[0], sol.dispatch[1], sol.objective, sol.iterations
        );
        println!(
            "  hand values: g1 = {:.6}, g2 = {:.6}, cost = {:.6}",
            want_dispatch[0], want_dispatch[1], want_cost
        );
        assert!((sol.objective - want_cost).abs() < 1e-4);
        assert!((sol.dispatch[0] - want_dispatch[0]).abs() < 1e-4);
        assert!((sol.dispatch[1] - want_dispatch[1]).abs() < 1e-4);
    }
}
