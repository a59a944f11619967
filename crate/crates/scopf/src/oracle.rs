//! Desk-scale verification tools, independent of the ADMM solve path.
//!
//! Three instruments: an exact transport-feasibility check (max-flow with a
//! min-cut certificate), a brute-force OPF by dispatch enumeration over a
//! grid, and an audit that measures how far a transport flow pattern is from
//! an angle-consistent DC flow. None of them share code with the solver
//! beyond the case model, so they can referee it.

use std::collections::VecDeque;

use thiserror::Error;

use crate::case::{generator_cost, CapacityMap, Case};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("injections must sum to zero, got residual {0:e}")]
    Unbalanced(f64),
    #[error("capacity vector has {got} entries, case has {want} branches")]
    CapacityShape { got: usize, want: usize },
    #[error("injection vector has {got} entries, case has {want} buses")]
    InjectionShape { got: usize, want: usize },
    #[error("flow vector has {got} entries, case has {want} branches")]
    FlowShape { got: usize, want: usize },
    #[error("too large for oracle: {0} generators exceeds the enumeration guard of 4")]
    TooManyGenerators(usize),
    #[error("grid_steps must be at least 10, got {0}")]
    GridTooCoarse(usize),
}

/// Verdict of the exact transport-feasibility check.
#[derive(Debug, Clone)]
pub struct FlowFeasibility {
    pub feasible: bool,
    /// Max-flow value actually deliverable (pu).
    pub delivered: f64,
    /// Total surplus that had to be delivered (pu).
    pub required: f64,
    /// Saturated original branches crossing the min cut; empty when feasible.
    pub cut: Vec<String>,
    /// Witness net flow per branch (case order, positive from -> to, pu).
    pub flows: Vec<f64>,
}

/// Decide whether the given bus injections can be carried by the network
/// under the given per-branch capacities, ignoring voltage angles.
///
/// Reduction: a super-source feeds every surplus bus, every deficit bus
/// drains to a super-sink, each branch becomes two directed arcs of the
/// branch capacity. The injections are feasible exactly when the max flow
/// equals the total surplus; otherwise the min cut names the limiting
/// branches.
pub fn flow_feasible(
    case: &Case,
    caps: &[f64],
    injections: &[f64],
) -> Result<FlowFeasibility, OracleError> {
    let nb = case.buses.len();
    if injections.len() != nb {
        return Err(OracleError::InjectionShape { got: injections.len(), want: nb });
    }
    if caps.len() != case.branches.len() {
        return Err(OracleError::CapacityShape { got: caps.len(), want: case.branches.len() });
    }
    let residual: f64 = injections.iter().sum();
    if residual.abs() > 1e-9 {
        return Err(OracleError::Unbalanced(residual));
    }

    let source = nb;
    let sink = nb + 1;
    let mut net = Dinic::new(nb + 2);
    let mut required = 0.0;
    for (i, &inj) in injections.iter().enumerate() {
        if inj > 0.0 {
            net.add_edge(source, i, inj);
            required += inj;
        } else if inj < 0.0 {
            net.add_edge(i, sink, -inj);
        }
    }
    let mut arcs = Vec::with_capacity(case.branches.len());
    for (bi, br) in case.branches.iter().enumerate() {
        let fwd = net.add_edge(br.from, br.to, caps[bi]);
        let bwd = net.add_edge(br.to, br.from, caps[bi]);
        arcs.push((fwd, bwd));
    }

    let delivered = net.max_flow(source, sink);
    let feasible = required - delivered <= 1e-9;

    let flows: Vec<f64> = arcs
        .iter()
        .map(|&(fwd, bwd)| net.flow_on(fwd) - net.flow_on(bwd))
        .collect();

    let mut cut = Vec::new();
    if !feasible {
        let reach = net.residual_reachable(source);
        for (bi, br) in case.branches.iter().enumerate() {
            // An out-of-service branch (zero cap) crosses cuts vacuously;
            // only branches actually carrying their limit are binding.
            if caps[bi] > 0.0 && reach[br.from] != reach[br.to] {
                cut.push(case.branches[bi].id.clone());
            }
        }
        cut.sort();
    }

    Ok(FlowFeasibility { feasible, delivered, required, cut, flows })
}

/// Result of the brute-force dispatch enumeration.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub feasible: bool,
    /// Best cost found, $/h. Infinity when infeasible.
    pub cost: f64,
    /// Best dispatch per generator (case order, pu). Empty when infeasible.
    pub dispatch: Vec<f64>,
    /// Final per-dimension grid step after refinement (pu); the dispatch is
    /// optimal only up to this resolution.
    pub grid_step: f64,
    /// Number of candidate dispatches evaluated.
    pub evaluated: usize,
}

/// Ground-truth OPF by exhaustive enumeration: all but the last generator
/// sweep a uniform grid over their bounds, the last absorbs the balance
/// residue, and a candidate survives only if its injections pass
/// [`flow_feasible`] in every scenario of `scenarios`. One refinement pass
/// re-sweeps a 10x finer grid around the incumbent.
///
/// Guards: at most 4 generators, at least 10 grid steps.
pub fn brute_force_opf(
    case: &Case,
    scenarios: &CapacityMap,
    grid_steps: usize,
) -> Result<OracleSolution, OracleError> {
    let ng = case.generators.len();
    if ng > 4 {
        return Err(OracleError::TooManyGenerators(ng));
    }
    if grid_steps < 10 {
        return Err(OracleError::GridTooCoarse(grid_steps));
    }

    let demand = case.total_load();
    let mut evaluated = 0usize;

    if ng == 0 {
        // Nothing to dispatch; feasible only if the loads balance themselves.
        let injections: Vec<f64> = case.buses.iter().map(|b| -b.load).collect();
        let ok = demand.abs() <= 1e-9
            && scenarios.scenarios().all(|(_, caps)| {
                flow_feasible(case, caps, &injections).map(|r| r.feasible).unwrap_or(false)
            });
        return Ok(OracleSolution {
            feasible: ok,
            cost: if ok { 0.0 } else { f64::INFINITY },
            dispatch: vec![],
            grid_step: 0.0,
            evaluated: 1,
        });
    }

    let free = ng - 1;
    let steps: Vec<f64> = case.generators[..free]
        .iter()
        .map(|g| (g.pmax - g.pmin) / grid_steps as f64)
        .collect();

    let evaluate = |point: &[f64], best: &mut Option<(f64, Vec<f64>)>, evaluated: &mut usize| {
        let partial: f64 = point.iter().sum();
        let last = &case.generators[free];
        let mut g_last = demand - partial;
        // Absorb grid round-off at the bounds, reject anything larger.
        if g_last < last.pmin {
            if last.pmin - g_last > 1e-9 {
                return;
            }
            g_last = last.pmin;
        }
        if g_last > last.pmax {
            if g_last - last.pmax > 1e-9 {
                return;
            }
            g_last = last.pmax;
        }
        *evaluated += 1;

        let mut injections: Vec<f64> = case.buses.iter().map(|b| -b.load).collect();
        for (gi, g) in case.generators.iter().enumerate() {
            let output = if gi < free { point[gi] } else { g_last };
            injections[g.bus] += output;
        }
        // The last generator absorbed the residue, so the sum is zero up to
        // float round-off; push that round-off onto the largest entry.
        let resid: f64 = injections.iter().sum();
        if resid != 0.0 {
            let idx = injections
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            injections[idx] -= resid;
        }

        for (_, caps) in scenarios.scenarios() {
            match flow_feasible(case, caps, &injections) {
                Ok(r) if r.feasible => {}
                _ => return,
            }
        }

        let mut cost = 0.0;
        for (gi, g) in case.generators.iter().enumerate() {
            let output = if gi < free { point[gi] } else { g_last };
            cost += generator_cost(g.a, g.b, g.c, output);
        }
        if best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
            let mut dispatch: Vec<f64> = point.to_vec();
            dispatch.push(g_last);
            *best = Some((cost, dispatch));
        }
    };

    let sweep = |centers: &[(f64, f64)], // (lo, hi) per free dim
                 counts: &[usize],
                 best: &mut Option<(f64, Vec<f64>)>,
                 evaluated: &mut usize| {
        let mut idx = vec![0usize; free];
        let mut point = vec![0.0; free];
        loop {
            for d in 0..free {
                let (lo, hi) = centers[d];
                let n = counts[d];
                point[d] = if n == 0 { lo } else { lo + (hi - lo) * idx[d] as f64 / n as f64 };
            }
            evaluate(&point, best, evaluated);
            // odometer increment
            let mut d = 0;
            loop {
                if d == free {
                    return;
                }
                idx[d] += 1;
                if idx[d] <= counts[d] {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let coarse: Vec<(f64, f64)> =
        case.generators[..free].iter().map(|g| (g.pmin, g.pmax)).collect();
    let coarse_counts = vec![grid_steps; free];
    sweep(&coarse, &coarse_counts, &mut best, &mut evaluated);

    let mut grid_step = steps.iter().cloned().fold(0.0, f64::max);
    if let Some((_, incumbent)) = best.clone() {
        // One 10x refinement around the incumbent: +-1 coarse step per dim.
        let fine: Vec<(f64, f64)> = (0..free)
            .map(|d| {
                let g = &case.generators[d];
                let lo = (incumbent[d] - steps[d]).max(g.pmin);
                let hi = (incumbent[d] + steps[d]).min(g.pmax);
                (lo, hi)
            })
            .collect();
        let fine_counts = vec![20usize; free];
        sweep(&fine, &fine_counts, &mut best, &mut evaluated);
        grid_step = (0..free)
            .map(|d| (fine[d].1 - fine[d].0) / 20.0)
            .fold(0.0, f64::max);
    }

    Ok(match best {
        Some((cost, dispatch)) => OracleSolution {
            feasible: true,
            cost,
            dispatch,
            grid_step,
            evaluated,
        },
        None => OracleSolution {
            feasible: false,
            cost: f64::INFINITY,
            dispatch: vec![],
            grid_step,
            evaluated,
        },
    })
}

/// Angle-consistency audit of a transport flow pattern.
#[derive(Debug, Clone)]
pub struct KvlReport {
    pub reference_bus: String,
    /// Bus angles in radians (case order), reference at zero.
    pub angles: Vec<f64>,
    /// Mismatch per non-tree branch, sorted by branch id.
    pub cycle_mismatches: Vec<(String, f64)>,
    pub max_mismatch: f64,
}

/// Reconstruct bus angles from the flows over a spanning tree and report, for
/// every remaining branch, how far the flow is from the angle difference a DC
/// power flow would require: `|theta_i - theta_j - x_ij * p_ij|`.
///
/// The tree is grown breadth-first from the lowest-id bus, visiting incident
/// branches in ascending branch-id order, so the audit is deterministic. Tree
/// branches have zero mismatch by construction; on a radial network the
/// report is all zeros.
pub fn kvl_audit(case: &Case, flows: &[f64]) -> Result<KvlReport, OracleError> {
    if flows.len() != case.branches.len() {
        return Err(OracleError::FlowShape { got: flows.len(), want: case.branches.len() });
    }

    let nb = case.buses.len();
    let reference = (0..nb)
        .min_by(|&a, &b| case.buses[a].id.cmp(&case.buses[b].id))
        .expect("validated case has buses");

    // Incident branches per bus, ascending branch id for a stable traversal.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nb];
    let mut order: Vec<usize> = (0..case.branches.len()).collect();
    order.sort_by(|&a, &b| case.branches[a].id.cmp(&case.branches[b].id));
    for &bi in &order {
        let br = &case.branches[bi];
        incident[br.from].push(bi);
        incident[br.to].push(bi);
    }

    let mut angles = vec![0.0f64; nb];
    let mut visited = vec![false; nb];
    let mut in_tree = vec![false; case.branches.len()];
    visited[reference] = true;
    let mut queue = VecDeque::from([reference]);
    while let Some(u) = queue.pop_front() {
        for &bi in &incident[u] {
            let br = &case.branches[bi];
            let (other, theta) = if br.from == u {
                // theta_from - theta_to = x * p  =>  theta_to = theta_from - x p
                (br.to, angles[u] - br.reactance * flows[bi])
            } else {
                (br.from, angles[u] + br.reactance * flows[bi])
            };
            if !visited[other] {
                visited[other] = true;
                in_tree[bi] = true;
                angles[other] = theta;
                queue.push_back(other);
            }
        }
    }

    let mut cycle_mismatches = Vec::new();
    let mut max_mismatch = 0.0f64;
    for &bi in &order {
        if in_tree[bi] {
            continue;
        }
        let br = &case.branches[bi];
        let mismatch = (angles[br.from] - angles[br.to] - br.reactance * flows[bi]).abs();
        max_mismatch = max_mismatch.max(mismatch);
        cycle_mismatches.push((br.id.clone(), mismatch));
    }

    Ok(KvlReport {
        reference_bus: case.buses[reference].id.clone(),
        angles,
        cycle_mismatches,
        max_mismatch,
    })
}

/// Dinic max-flow on f64 capacities. Graphs here are tiny (tens of nodes), so
/// the epsilon guard on residuals is enough for exactness at the 1e-9 scale
/// the feasibility check works to.
struct Dinic {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    orig: Vec<f64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const EPS: f64 = 1e-12;

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    /// Returns the forward arc index; the paired reverse arc is `idx ^ 1`.
    fn add_edge(&mut self, u: usize, v: usize, c: f64) -> usize {
        let idx = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.orig.push(c);
        self.adj[u].push(idx);
        self.to.push(u);
        self.cap.push(0.0);
        self.orig.push(0.0);
        self.adj[v].push(idx + 1);
        idx
    }

    fn flow_on(&self, arc: usize) -> f64 {
        self.orig[arc] - self.cap[arc]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] < self.adj[u].len() {
            let e = self.adj[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > EPS && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, pushed.min(self.cap[e]));
                if d > EPS {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= EPS {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph (the source side of the
    /// min cut once max_flow has run).
    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > EPS && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}
