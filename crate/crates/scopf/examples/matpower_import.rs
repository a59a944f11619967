//! Parse a MATPOWER-format `.m` case and solve it. The parser reads the
//! `mpc.bus`, `mpc.gen`, `mpc.branch`, and `mpc.gencost` matrices, keeps
//! in-service rows, and treats a zero RATE_A as unlimited.
//!
//!     cargo run -p scopf --example matpower_import

use scopf::case::CapacityMap;
use scopf::{parse_case, run_admm, SolverConfig};

// Three buses in a ring, two generators, one load. Quadratic gencost rows
// are (2, startup, shutdown, n, a, b, c).
const CASE_M: &str = r#"
function mpc = case3ring
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.1	0.9;
	2	1	0	0	0	0	1	1	0	135	1	1.1	0.9;
	3	1	100	35	0	0	1	1	0	135	1	1.1	0.9;
];

%% generator data
%	bus	Pg	Qg	Qmax	Qmin	Vg	mBase	status	Pmax	Pmin
mpc.gen = [
	1	0	0	50	-50	1	100	1	200	0;
	2	0	0	50	-50	1	100	1	200	0;
];

%% branch data
%	fbus	tbus	r	x	b	rateA	rateB	rateC	ratio	angle	status	angmin	angmax
mpc.branch = [
	1	2	0.01	0.1	0	40	0	0	0	0	1	-360	360;
	1	3	0.01	0.1	0	50	0	0	0	0	1	-360	360;
	2	3	0.01	0.1	0	120	0	0	0	0	1	-360	360;
];

%% generator cost data
%	2	startup	shutdown	n	c2	c1	c0
mpc.gencost = [
	2	0	0	3	0.01	10	0;
	2	0	0	3	0.02	10	0;
];
"#;

fn main() {
    let case = parse_case(CASE_M).unwrap();
    println!(
        "imported: {} buses, {} branches, {} generators, base {} MVA",
        case.buses.len(),
        case.branches.len(),
        case.generators.len(),
        case.base_mva
    );
    for br in &case.branches {
        println!(
            "  branch {}: cap {:.0} MW, x {:.2} pu",
            br.id,
            br.capacity * case.base_mva,
            br.reactance
        );
    }

    let config = SolverConfig {
        rho: 100.0,
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        ..SolverConfig::default()
    };
    let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None).unwrap();
    assert!(sol.converged);
    for (g, p) in case.generators.iter().zip(&sol.dispatch) {
        println!("  {}: {:.2} MW", g.id, p * case.base_mva);
    }
    println!("cost {:.2} $/h in {} iterations", sol.objective, sol.iterations);
}
