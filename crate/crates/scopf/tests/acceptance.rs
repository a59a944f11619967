//! End-to-end checks of the advertised behavior, one test per claim:
//! hand-verified dispatches through the binary, agreement with the
//! enumeration oracle on randomized cases, residual decay on the bundled
//! network, N-1 security of the redispatch, the solver's algebraic
//! invariants, and linear per-iteration scaling.
//!
//! Run `cargo test --test acceptance -- --nocapture` to see one PASS line
//! per claim.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scopf::agent::{split_for_total, BusAgentState, Generation, Incident, Unit};
use scopf::case::{
    generator_cost, BranchFile, BusFile, CapacityMap, Case, CaseFile, ContingencyFile,
    GeneratorFile, ScenarioId,
};
use scopf::consensus::{project_branch, z_update, BranchConsensusState, Side};
use scopf::driver::Verdict;
use scopf::{
    brute_force_opf, flow_feasible, parse_case, run_admm, solve_scopf, ScreeningMode, SolverConfig,
};

fn bundled(name: &str) -> String {
    format!("{}/cases/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn read_report(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("report file");
    serde_json::from_str(&text).expect("report JSON")
}

/// Run the binary, assert exit 0, and return (report, wall time).
fn run_binary(args: &[&str], report_path: &Path) -> (serde_json::Value, Duration) {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_scopf"))
        .args(args)
        .arg("--solution")
        .arg(report_path)
        .output()
        .expect("spawn scopf");
    let elapsed = started.elapsed();
    assert!(
        out.status.success(),
        "scopf {:?} failed: {}\n{}",
        args,
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    (read_report(report_path), elapsed)
}

fn dispatch_close(report: &serde_json::Value, want: &[(&str, f64)], tol: f64) {
    for (id, mw) in want {
        let got = report["dispatch_mw"][id].as_f64().expect("dispatch entry");
        assert!(
            (got - mw).abs() <= tol,
            "generator {id}: dispatch {got} MW, expected {mw} MW"
        );
    }
}

// Three cases small enough to solve by hand from the optimality conditions,
// reproduced through the actual command-line entry points.
#[test]
fn hand_verified_dispatches() {
    let dir = tempfile::tempdir().unwrap();
    let tight = ["--eps-abs", "1e-9", "--eps-rel", "1e-7"];

    // Two units at one bus, ample line: equal marginal cost at total 1.0
    // gives (2/3, 1/3) and cost 2/3.
    let out = dir.path().join("a.json");
    let case = bundled("case2_unconstrained");
    let mut args = vec!["solve", &*case];
    args.extend_from_slice(&tight);
    let (report, took) = run_binary(&args, &out);
    assert!((report["cost_dollars_per_hour"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-3);
    dispatch_close(&report, &[("g1", 2.0 / 3.0), ("g2", 1.0 / 3.0)], 1e-2);
    assert!(took < Duration::from_secs(1), "2-bus solve took {took:?}");

    // Same pair behind a 0.3 pu line: the limit binds, cost rises to 1.07.
    let case = bundled("case2_capped");
    let mut args = vec!["solve", &*case];
    args.extend_from_slice(&tight);
    let (report, took) = run_binary(&args, &out);
    assert!((report["cost_dollars_per_hour"].as_f64().unwrap() - 1.07).abs() < 1e-3);
    dispatch_close(&report, &[("g1", 0.3), ("g2", 0.7)], 1e-2);
    assert!(took < Duration::from_secs(1), "capped solve took {took:?}");

    // Three buses: cheap base dispatch at 0.6667, then securing both line
    // outages forces (0.4, 0.6) at 0.88.
    let case = bundled("case3");
    let mut args = vec!["solve", &*case];
    args.extend_from_slice(&tight);
    let (report, took) = run_binary(&args, &out);
    assert!((report["cost_dollars_per_hour"].as_f64().unwrap() - 0.6667).abs() < 1e-3);
    assert!(took < Duration::from_secs(1), "3-bus solve took {took:?}");

    let mut args = vec!["scopf", &*case, "--contingencies", "all"];
    args.extend_from_slice(&tight);
    let (report, took) = run_binary(&args, &out);
    assert_eq!(report["secure"], serde_json::Value::Bool(true));
    assert!((report["cost_dollars_per_hour"].as_f64().unwrap() - 0.88).abs() < 1e-3);
    dispatch_close(&report, &[("g1", 0.4), ("g2", 0.6)], 1e-2);
    assert!(took < Duration::from_secs(1), "3-bus scopf took {took:?}");

    println!("PASS hand-verified dispatches: 2/3, 1.07, and 0.6667 -> 0.88 all within 1e-3");
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Random connected 3- or 4-bus case with 2 or 3 generators and one declared
/// branch outage. Loads and limits are drawn so that a fair share of draws
/// are feasible; the oracle decides which.
fn random_small_case(rng: &mut ChaCha8Rng) -> (Case, String) {
    loop {
        let n = if rng.random_bool(0.5) { 3 } else { 4 };
        let buses: Vec<BusFile> = (1..=n)
            .map(|i| BusFile { id: i.to_string(), load_mw: round2(rng.random_range(0.2..1.0)) })
            .collect();

        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for i in 1..n {
            edges.insert((rng.random_range(0..i), i));
        }
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.4) {
                    edges.insert((a, b));
                }
            }
        }
        let branches: Vec<BranchFile> = edges
            .iter()
            .map(|&(a, b)| BranchFile {
                id: format!("{}-{}", a + 1, b + 1),
                from: (a + 1).to_string(),
                to: (b + 1).to_string(),
                capacity_mw: round2(rng.random_range(0.4..1.6)),
                reactance_pu: 0.1,
            })
            .collect();

        let ng = if rng.random_bool(0.5) { 2 } else { 3 };
        let mut sites: Vec<usize> = (1..=n).collect();
        sites.shuffle(rng);
        let generators: Vec<GeneratorFile> = sites[..ng]
            .iter()
            .map(|&i| GeneratorFile {
                id: format!("g{i}"),
                bus: i.to_string(),
                a: round2(rng.random_range(0.2..1.0)),
                b: round2(rng.random_range(0.1..0.5)),
                c: 0.0,
                pmin_mw: 0.0,
                pmax_mw: round2(rng.random_range(0.8..2.0)),
            })
            .collect();

        let outaged = branches[rng.random_range(0..branches.len())].id.clone();
        let ctg_id = format!("out-{outaged}");
        let contingencies = vec![ContingencyFile { id: ctg_id.clone(), branch: outaged }];

        let file = CaseFile { base_mva: 1.0, buses, generators, branches, contingencies };
        match file.into_case() {
            Ok(case) => return (case, ctg_id),
            Err(_) => continue,
        }
    }
}

/// Net injections of a dispatch, with the solver's residual balance error
/// pushed onto the largest entry so the max-flow check's exact-balance
/// precondition holds.
fn balanced_injections(case: &Case, bus_generation: &[f64]) -> Vec<f64> {
    let mut inj: Vec<f64> =
        case.buses.iter().enumerate().map(|(i, b)| bus_generation[i] - b.load).collect();
    let resid: f64 = inj.iter().sum();
    if resid != 0.0 {
        let idx = inj
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        inj[idx] -= resid;
    }
    inj
}

// Consensus solutions agree with exhaustive enumeration on 50 randomized
// small cases, and every returned flow profile is routable.
#[test]
fn oracle_equivalence_on_random_cases() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c0f);
    let config = SolverConfig {
        rho: 1.0,
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        max_iter: 60_000,
        workers: 2,
        trace_every: 1_000_000,
    };

    let mut solved = 0usize;
    let mut attempts = 0usize;
    while solved < 50 {
        attempts += 1;
        assert!(attempts <= 1_000, "only {solved} feasible draws in {attempts} attempts");

        let (case, ctg_id) = random_small_case(&mut rng);
        let scenarios = if rng.random_bool(0.5) {
            match CapacityMap::with_contingencies(&case, &[ctg_id.as_str()]) {
                Ok(map) => map,
                Err(_) => CapacityMap::base_only(&case), // outage would island
            }
        } else {
            CapacityMap::base_only(&case)
        };

        let grid = if case.generators.len() == 2 { 600 } else { 150 };
        let oracle = brute_force_opf(&case, &scenarios, grid).unwrap();
        if !oracle.feasible {
            continue;
        }

        let admm = run_admm(&case, &scenarios, &config, None).unwrap();
        assert!(admm.converged, "draw {attempts}: no convergence");

        // The enumeration is only optimal to its grid; convert the step to a
        // cost bound through each unit's steepest marginal cost.
        let grid_cost: f64 = case
            .generators
            .iter()
            .map(|g| (2.0 * g.a * g.pmax + g.b.abs()) * oracle.grid_step)
            .sum();
        let tol = (0.005 * oracle.cost).max(grid_cost);
        assert!(
            (admm.objective - oracle.cost).abs() <= tol,
            "draw {attempts}: consensus {} vs enumeration {} (tol {tol})",
            admm.objective,
            oracle.cost
        );

        let inj = balanced_injections(&case, &admm.bus_generation);
        for (sid, caps) in scenarios.scenarios() {
            let feas = flow_feasible(&case, caps, &inj).unwrap();
            let deficit = feas.required - feas.delivered;
            assert!(
                deficit <= 1e-6,
                "draw {attempts}, scenario {sid}: {deficit:.3e} pu unroutable"
            );
        }
        solved += 1;
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "50 cases took {elapsed:?}");
    println!(
        "PASS oracle equivalence: 50 random cases agree within max(0.5%, grid step) \
         and all flows route ({attempts} draws, {elapsed:?})"
    );
}

// Both squared residual norms fall at least six orders of magnitude on the
// bundled 14-bus case and finish below 1e-8, with the trace written out.
#[test]
fn residuals_decay_on_bundled_network() {
    let case = parse_case(scopf::cases::CASE14).unwrap();
    let config = SolverConfig {
        rho: 300.0,
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        workers: 2,
        ..SolverConfig::default()
    };
    let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None).unwrap();
    assert!(sol.converged, "no convergence in {} iterations", sol.iterations);

    let first = &sol.trace[0];
    let last = sol.trace.last().unwrap();
    assert_eq!(first.iter, 1);
    assert!(
        last.primal_sq <= first.primal_sq * 1e-6,
        "primal^2 {} -> {}: less than 6 decades",
        first.primal_sq,
        last.primal_sq
    );
    assert!(
        last.dual_sq <= first.dual_sq * 1e-6,
        "dual^2 {} -> {}: less than 6 decades",
        first.dual_sq,
        last.dual_sq
    );
    assert!(last.primal_sq < 1e-8 && last.dual_sq < 1e-8);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    scopf::report::write_trace_csv(&path, &sol.trace).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,primal_sq,dual_sq,objective"));
    assert_eq!(lines.count(), sol.trace.len());

    println!(
        "PASS residual decay: primal^2 {:.1e} -> {:.1e}, dual^2 {:.1e} -> {:.1e} over {} iterations",
        first.primal_sq, last.primal_sq, first.dual_sq, last.dual_sq, sol.iterations
    );
}

// Screening the two designed line outages and redispatching leaves every
// scenario inside its limits, at a cost no lower than the base case.
#[test]
fn redispatch_secures_bundled_network() {
    let case = parse_case(scopf::cases::CASE14).unwrap();
    let config = SolverConfig {
        rho: 300.0,
        eps_abs: 1e-9,
        eps_rel: 1e-7,
        workers: 2,
        ..SolverConfig::default()
    };

    let started = Instant::now();
    let ids = vec!["br4-5".to_string(), "br5-6".to_string()];
    let run = solve_scopf(&case, &ids, ScreeningMode::Exact, &config).unwrap();
    let elapsed = started.elapsed();

    assert!(run.base.converged);
    assert!(run.solution.converged);
    assert!(run.secure, "screening verdicts: {:?}", run.screening);
    for entry in &run.screening {
        assert_ne!(entry.verdict, Verdict::Violated, "{} still violated", entry.contingency);
    }
    assert!(
        run.solution.objective >= run.base.objective - 1e-9,
        "secured cost {} below base {}",
        run.solution.objective,
        run.base.objective
    );

    // every scenario's agreed flows inside that scenario's limits
    let base_caps: Vec<f64> = case.branches.iter().map(|b| b.capacity).collect();
    for (k, sid) in run.solution.scenario_ids.iter().enumerate() {
        let caps = match sid {
            ScenarioId::Base => base_caps.clone(),
            ScenarioId::Outage(id) => scopf::case::apply_contingency(&case, id).unwrap(),
        };
        for (slot, bid) in run.solution.branch_ids.iter().enumerate() {
            let flow = run.solution.flows[k * run.solution.branch_ids.len() + slot];
            let cap = caps[case.branch_index(bid).unwrap()];
            assert!(
                flow.abs() <= cap + 1e-6,
                "{sid}/{bid}: |{flow}| above limit {cap}"
            );
        }
    }

    assert!(run.timing.base_ms < 5_000, "base solve took {} ms", run.timing.base_ms);
    assert!(elapsed < Duration::from_secs(30), "full run took {elapsed:?}");
    println!(
        "PASS n-1 security: cost {:.2} >= base {:.2}, all scenario flows within limits \
         ({} ms base, {} ms total)",
        run.solution.objective, run.base.objective, run.timing.base_ms, run.timing.total_ms
    );
}

fn assert_bits(a: &[f64], b: &[f64], what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length mismatch");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert_eq!(x.to_bits(), y.to_bits(), "{what}[{i}]: {x} vs {y}");
    }
}

// The algebraic contracts the convergence argument rests on, checked with
// exact comparisons: no epsilons anywhere in this test.
#[test]
fn solver_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);

    // Projection onto a limit is idempotent bitwise and never moves a pair
    // of points further apart. Inputs are consensus pairs (v, -v), which is
    // the projection's entire domain.
    let caps = [0.0, 1e-3, 0.3, 1.0, 250.0];
    for trial in 0..1000 {
        let cap = caps[trial % caps.len()];
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            match rng.random_range(0..8u32) {
                0 => 0.0,
                1 => -0.0,
                2 => cap,
                3 => -cap,
                4 => cap * (1.0 + 1e-15),
                _ => rng.random_range(-3.0..3.0) * (cap + 1.0),
            }
        };
        let v = draw(&mut rng);
        let w = draw(&mut rng);

        let p = project_branch((v, -v), cap);
        let pp = project_branch(p, cap);
        assert_eq!(p.0.to_bits(), pp.0.to_bits(), "idempotence at v={v}, cap={cap}");
        assert_eq!(p.1.to_bits(), pp.1.to_bits(), "idempotence at v={v}, cap={cap}");
        assert!(p.0.abs() <= cap);
        assert!(p.0 + p.1 == 0.0, "pair sum at v={v}, cap={cap}");

        let q = project_branch((w, -w), cap);
        let dist = |a: (f64, f64), b: (f64, f64)| {
            let (dx, dy) = (a.0 - b.0, a.1 - b.1);
            (dx * dx + dy * dy).sqrt()
        };
        assert!(
            dist(p, q) <= dist((v, -v), (w, -w)),
            "expansion at v={v}, w={w}, cap={cap}"
        );
    }

    // The consensus variable stays exactly anti-symmetric through every
    // update, whatever the messages.
    let mut state = BranchConsensusState::new(0, vec![0.0, 0.4, 2.0]);
    for _ in 0..500 {
        for k in 0..3 {
            let mf = rng.random_range(-3.0..3.0);
            let mt = rng.random_range(-3.0..3.0);
            let pre = z_update(mf, mt);
            assert_eq!(pre.1.to_bits(), (-pre.0).to_bits());
            state.step(k, mf, mt);
            let zf = state.value(k, Side::From);
            let zt = state.value(k, Side::To);
            assert!(zf + zt == 0.0, "z pair sum {zf} + {zt}");
            assert!(zt == -zf, "z pair {zf}, {zt}");
        }
    }

    // At consensus (local flow equal to the agreed flow) the dual update is
    // the identity, bit for bit.
    let mut branch = BranchConsensusState::new(0, vec![10.0, 10.0]);
    branch.step(0, 1.25, -0.75);
    branch.step(1, -2.5, 0.5);
    let incident = vec![Incident { branch: 0, side: Side::From }];
    let mut agent = BusAgentState::new(0, 0.3, incident, Generation::Fixed(0.0), 2);
    for k in 0..2 {
        agent.flows[k] = branch.value(k, Side::From);
        agent.duals[k] = rng.random_range(0.1..2.0) * if k == 0 { 1.0 } else { -1.0 };
    }
    let before = agent.duals.clone();
    agent.dual_update(std::slice::from_ref(&branch));
    assert_bits(&agent.duals, &before, "dual fixed point");

    // Identical bits from 1 worker and 4 workers on the bundled case.
    let case = parse_case(scopf::cases::CASE14).unwrap();
    let scenarios = CapacityMap::with_contingencies(&case, &["br4-5"]).unwrap();
    let mut config = SolverConfig {
        rho: 300.0,
        max_iter: 300,
        trace_every: 1,
        workers: 1,
        ..SolverConfig::default()
    };
    let one = run_admm(&case, &scenarios, &config, None).unwrap();
    config.workers = 4;
    let four = run_admm(&case, &scenarios, &config, None).unwrap();
    assert_eq!(one.iterations, four.iterations);
    assert_bits(&one.dispatch, &four.dispatch, "dispatch");
    assert_bits(&one.bus_generation, &four.bus_generation, "bus generation");
    assert_bits(&one.flows, &four.flows, "flows");
    assert_bits(&one.duals, &four.duals, "duals");
    for (a, b) in one.trace.iter().zip(&four.trace) {
        assert_eq!(a.iter, b.iter);
        assert_eq!(a.primal_sq.to_bits(), b.primal_sq.to_bits());
        assert_eq!(a.dual_sq.to_bits(), b.dual_sq.to_bits());
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    // The total each local solve picks minimizes its reduced objective: a
    // finite-difference probe never finds a meaningfully lower point.
    let delta = 1e-4;
    for _ in 0..200 {
        let n_units = rng.random_range(1..=3usize);
        let units: Vec<Unit> = (0..n_units)
            .map(|_| Unit {
                a: rng.random_range(0.1..1.0),
                b: rng.random_range(0.0..1.0),
                c: 0.0,
                pmin: 0.0,
                pmax: rng.random_range(0.5..1.5),
            })
            .collect();
        let load = rng.random_range(0.0..1.0);
        let rho = [0.5, 1.0, 5.0][rng.random_range(0..3usize)];

        let mut branches = vec![
            BranchConsensusState::new(0, vec![50.0, 50.0]),
            BranchConsensusState::new(1, vec![50.0, 50.0]),
        ];
        for b in &mut branches {
            for k in 0..2 {
                let v = rng.random_range(-1.5..1.5);
                b.step(k, v, -v);
            }
        }
        let incident = vec![
            Incident { branch: 0, side: Side::From },
            Incident { branch: 1, side: Side::To },
        ];
        let mut agent =
            BusAgentState::new(0, load, incident.clone(), Generation::Units(units.clone()), 2);
        for d in agent.duals.iter_mut() {
            *d = rng.random_range(-1.0..1.0);
        }
        let duals = agent.duals.clone();
        agent.local_solve(&branches, rho);

        // reduced objective: unit costs at the equal-marginal split plus the
        // penalty at the hyperplane projection
        let reduced = |g: f64| -> f64 {
            let (split, _) = split_for_total(&units, g);
            let cost: f64 = units
                .iter()
                .zip(&split)
                .map(|(u, &p)| generator_cost(u.a, u.b, u.c, p))
                .sum();
            let n = incident.len() as f64;
            let mut penalty = 0.0;
            for k in 0..2 {
                let s: f64 = incident
                    .iter()
                    .enumerate()
                    .map(|(j, inc)| branches[inc.branch].value(k, inc.side) - duals[k * 2 + j])
                    .sum();
                penalty += (g - load - s) * (g - load - s) / n;
            }
            cost + 0.5 * rho * penalty
        };

        let lo: f64 = units.iter().map(|u| u.pmin).sum();
        let hi: f64 = units.iter().map(|u| u.pmax).sum();
        let g_star = agent.total;
        let f_star = reduced(g_star);
        let bound = 10.0 * delta * delta;
        if g_star + delta <= hi {
            assert!(
                f_star <= reduced(g_star + delta) + bound,
                "probe above beats the solve: f({g_star}) = {f_star}"
            );
        }
        if g_star - delta >= lo {
            assert!(
                f_star <= reduced(g_star - delta) + bound,
                "probe below beats the solve: f({g_star}) = {f_star}"
            );
        }
    }

    println!(
        "PASS invariants: projection, anti-symmetry, dual fixed point, worker determinism, \
         local optimality"
    );
}

fn chain_case(n: usize) -> Case {
    let buses: Vec<BusFile> =
        (1..=n).map(|i| BusFile { id: i.to_string(), load_mw: 1.0 }).collect();
    let generators: Vec<GeneratorFile> = (1..=n)
        .step_by(14)
        .map(|i| GeneratorFile {
            id: format!("g{i}"),
            bus: i.to_string(),
            a: 0.5,
            b: 1.0,
            c: 0.0,
            pmin_mw: 0.0,
            pmax_mw: 30.0,
        })
        .collect();
    let branches: Vec<BranchFile> = (1..n)
        .map(|i| BranchFile {
            id: format!("{i}-{}", i + 1),
            from: i.to_string(),
            to: (i + 1).to_string(),
            capacity_mw: 40.0,
            reactance_pu: 0.1,
        })
        .collect();
    CaseFile { base_mva: 1.0, buses, generators, branches, contingencies: vec![] }
        .into_case()
        .unwrap()
}

// Iteration cost on chain networks of 14, 140 and 1400 buses grows no worse
// than 1.5x linear in the bus count.
#[test]
fn per_iteration_cost_scales_linearly() {
    let iters = 40;
    let config = SolverConfig {
        rho: 1.0,
        eps_abs: 0.0, // run the full budget; this measures time, not quality
        eps_rel: 0.0,
        max_iter: iters,
        workers: 2,
        trace_every: iters,
    };

    let mut per_bus = Vec::new();
    for n in [14usize, 140, 1400] {
        let case = chain_case(n);
        let scenarios = CapacityMap::base_only(&case);
        run_admm(&case, &scenarios, &config, None).unwrap(); // warm the allocator

        let mut best = Duration::MAX;
        for _ in 0..3 {
            let started = Instant::now();
            let sol = run_admm(&case, &scenarios, &config, None).unwrap();
            assert_eq!(sol.iterations, iters);
            best = best.min(started.elapsed());
        }
        per_bus.push(best.as_secs_f64() / iters as f64 / n as f64);
    }

    let ratio = per_bus[2] / per_bus[0];
    assert!(
        ratio <= 1.5,
        "per-bus iteration cost grew {ratio:.2}x from 14 to 1400 buses"
    );
    println!(
        "PASS scaling: {:.3} / {:.3} / {:.3} us per iteration per bus at 14/140/1400 buses \
         ({ratio:.2}x)",
        per_bus[0] * 1e6,
        per_bus[1] * 1e6,
        per_bus[2] * 1e6
    );
}
