//! Per-iteration cost on growing chain networks. Each iteration is a fixed
//! amount of work per bus and per branch, so wall time per iteration should
//! grow about linearly with network size.
//!
//!     cargo run --release -p scopf --example chain_scaling

use std::time::Instant;

use scopf::case::{BranchFile, BusFile, CapacityMap, CaseFile, GeneratorFile};
use scopf::{run_admm, SolverConfig};

/// A chain of `n` buses: generation at every 14th bus, a little load
/// everywhere else, generous line limits.
fn chain(n: usize) -> CaseFile {
    let mut buses = Vec::with_capacity(n);
    let mut generators = Vec::new();
    for i in 1..=n {
        let gen_bus = (i - 1) % 14 == 0;
        buses.push(BusFile {
            id: i.to_string(),
            load_mw: if gen_bus { 0.0 } else { 1.0 },
        });
        if gen_bus {
            generators.push(GeneratorFile {
                id: format!("g{i}"),
                bus: i.to_string(),
                a: 0.5,
                b: 1.0,
                c: 0.0,
                pmin_mw: 0.0,
                pmax_mw: 30.0,
            });
        }
    }
    let branches = (1..n)
        .map(|i| BranchFile {
            id: format!("{i}-{}", i + 1),
            from: i.to_string(),
            to: (i + 1).to_string(),
            capacity_mw: 40.0,
            reactance_pu: 0.1,
        })
        .collect();
    CaseFile { base_mva: 1.0, buses, generators, branches, contingencies: vec![] }
}

fn main() {
    let mut per_bus = Vec::new();
    for (n, iters) in [(14, 4000), (140, 1000), (1400, 200)] {
        let case = chain(n).into_case().unwrap();
        let config = SolverConfig {
            max_iter: iters,
            eps_abs: 0.0,
            eps_rel: 0.0, // run the full budget; this measures cost, not convergence
            workers: 2,
            ..SolverConfig::default()
        };
        let t = Instant::now();
        let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None).unwrap();
        let per_iter = t.elapsed().as_secs_f64() / sol.iterations as f64;
        per_bus.push(per_iter / n as f64);
        println!(
            "{n:>5} buses: {:>9.3} us/iteration, {:>7.4} us/iteration/bus",
            per_iter * 1e6,
            per_iter * 1e6 / n as f64
        );
    }
    println!(
        "per-bus cost ratio, 1400 vs 14: {:.2}x",
        per_bus[2] / per_bus[0]
    );
}
