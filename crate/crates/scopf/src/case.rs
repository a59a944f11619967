//! Network case model: buses, generators, branches, contingencies.
//!
//! Files carry MW-basis quantities; a validated [`Case`] holds the same data
//! normalized to per-unit on `base_mva` (cost curves become $/h per pu via
//! `a_pu = a_mw * base^2`, `b_pu = b_mw * base`). The original file image is
//! retained so serialization round-trips exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw case file: the on-disk JSON layout, MW basis throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFile {
    pub base_mva: f64,
    pub buses: Vec<BusFile>,
    pub generators: Vec<GeneratorFile>,
    pub branches: Vec<BranchFile>,
    #[serde(default)]
    pub contingencies: Vec<ContingencyFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusFile {
    pub id: String,
    pub load_mw: f64,
}

/// Quadratic cost `a*g^2 + b*g + c` in $/h with `g` in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub id: String,
    pub bus: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFile {
    pub id: String,
    pub from: String,
    pub to: String,
    pub capacity_mw: f64,
    pub reactance_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyFile {
    pub id: String,
    /// Branch taken out of service in this scenario.
    pub branch: String,
}

/// A single violated case invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid case: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown contingency id {0:?}")]
    UnknownContingency(String),
    #[error("contingency {id:?}: removing branch {branch:?} islands the network")]
    Islanding { id: String, branch: String },
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Validated, per-unit-normalized network. Endpoint and branch references are
/// resolved to vector indices; string ids are kept for reporting.
#[derive(Debug, Clone)]
pub struct Case {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
    pub contingencies: Vec<Contingency>,
    raw: CaseFile,
}

#[derive(Debug, Clone)]
pub struct Bus {
    pub id: String,
    /// Demand in pu.
    pub load: f64,
}

/// Cost curve `a*g^2 + b*g + c` in $/h with `g` in pu.
#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub bus: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub pmin: f64,
    pub pmax: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Flow magnitude limit in pu.
    pub capacity: f64,
    pub reactance: f64,
}

#[derive(Debug, Clone)]
pub struct Contingency {
    pub id: String,
    pub branch: usize,
}

/// Evaluate a generator cost curve; shared so that reported objectives and any
/// recomputation from dispatch agree bit-for-bit.
pub fn generator_cost(a: f64, b: f64, c: f64, g: f64) -> f64 {
    a * g * g + b * g + c
}

impl Case {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn branch_index(&self, id: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn contingency(&self, id: &str) -> Option<&Contingency> {
        self.contingencies.iter().find(|c| c.id == id)
    }

    /// The file image this case was built from (exact MW-basis values).
    pub fn file(&self) -> &CaseFile {
        &self.raw
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load).sum()
    }

    /// True if every bus is reachable when `skip` (a branch index) is removed.
    pub fn connected_without(&self, skip: Option<usize>) -> bool {
        if self.buses.is_empty() {
            return false;
        }
        let mut adj = vec![Vec::new(); self.buses.len()];
        for (bi, br) in self.branches.iter().enumerate() {
            if Some(bi) == skip {
                continue;
            }
            adj[br.from].push(br.to);
            adj[br.to].push(br.from);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Contingencies whose outage would split the network. These are excluded
    /// from security screening and reported as such, never solved.
    pub fn islanding_contingency_ids(&self) -> Vec<String> {
        self.contingencies
            .iter()
            .filter(|c| !self.connected_without(Some(c.branch)))
            .map(|c| c.id.clone())
            .collect()
    }
}

/// Check every case invariant; empty result means the file is admissible.
pub fn validate_case(file: &CaseFile) -> Vec<Violation> {
    fn push(out: &mut Vec<Violation>, entity: &str, rule: String) {
        out.push(Violation { entity: entity.to_string(), rule });
    }
    let mut out = Vec::new();

    if !(file.base_mva.is_finite() && file.base_mva > 0.0) {
        push(&mut out, "case", format!("base_mva must be positive and finite, got {}", file.base_mva));
    }
    if file.buses.is_empty() {
        push(&mut out, "case", "no buses".to_string());
    }

    let mut bus_ids = HashSet::new();
    for b in &file.buses {
        if !bus_ids.insert(b.id.as_str()) {
            push(&mut out, &format!("bus {}", b.id), "duplicate bus id".to_string());
        }
        if !b.load_mw.is_finite() {
            push(&mut out, &format!("bus {}", b.id), format!("load must be finite, got {}", b.load_mw));
        }
    }

    let mut gen_ids = HashSet::new();
    for g in &file.generators {
        let entity = format!("generator {}", g.id);
        if !gen_ids.insert(g.id.as_str()) {
            push(&mut out, &entity, "duplicate generator id".to_string());
        }
        if !bus_ids.contains(g.bus.as_str()) {
            push(&mut out, &entity, format!("unknown bus {:?}", g.bus));
        }
        if g.a < 0.0 || !g.a.is_finite() {
            push(&mut out, &entity, format!("quadratic coefficient must be >= 0, got {}", g.a));
        }
        if !g.b.is_finite() || !g.c.is_finite() {
            push(&mut out, &entity, "cost coefficients must be finite".to_string());
        }
        if g.pmin_mw > g.pmax_mw {
            push(&mut out, &entity, "p_min > p_max".to_string());
        }
        if !g.pmin_mw.is_finite() || !g.pmax_mw.is_finite() {
            push(&mut out, &entity, "generation bounds must be finite".to_string());
        }
    }

    let mut branch_ids = HashSet::new();
    for br in &file.branches {
        let entity = format!("branch {}", br.id);
        if !branch_ids.insert(br.id.as_str()) {
            push(&mut out, &entity, "duplicate branch id".to_string());
        }
        if !bus_ids.contains(br.from.as_str()) {
            push(&mut out, &entity, format!("unknown bus {:?}", br.from));
        }
        if !bus_ids.contains(br.to.as_str()) {
            push(&mut out, &entity, format!("unknown bus {:?}", br.to));
        }
        if br.from == br.to {
            push(&mut out, &entity, "endpoints must differ".to_string());
        }
        if br.capacity_mw < 0.0 || !br.capacity_mw.is_finite() {
            push(&mut out, &entity, format!("capacity must be >= 0, got {}", br.capacity_mw));
        }
        if !(br.reactance_pu.is_finite() && br.reactance_pu > 0.0) {
            push(&mut out, &entity, format!("reactance must be > 0, got {}", br.reactance_pu));
        }
    }

    let mut cont_ids = HashSet::new();
    for c in &file.contingencies {
        let entity = format!("contingency {}", c.id);
        if !cont_ids.insert(c.id.as_str()) {
            push(&mut out, &entity, "duplicate contingency id".to_string());
        }
        if !branch_ids.contains(c.branch.as_str()) {
            push(&mut out, &entity, format!("unknown branch {:?}", c.branch));
        }
    }

    // Connectivity only once referential integrity holds, otherwise index
    // resolution below would be partial.
    if out.is_empty() && !file.buses.is_empty() {
        let index: HashMap<&str, usize> =
            file.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); file.buses.len()];
        for br in &file.branches {
            let f = index[br.from.as_str()];
            let t = index[br.to.as_str()];
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; file.buses.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                push(&mut out, "case", format!("network not connected: bus {} unreachable", file.buses[i].id));
            }
        }
    }

    out
}

impl CaseFile {
    /// Validate and normalize to per-unit. Violations are returned together,
    /// not one at a time.
    pub fn into_case(self) -> Result<Case, CaseError> {
        let violations = validate_case(&self);
        if !violations.is_empty() {
            return Err(CaseError::Invalid(violations));
        }
        let base = self.base_mva;
        let bus_index: HashMap<String, usize> = self
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let branch_index: HashMap<String, usize> = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();

        let buses = self
            .buses
            .iter()
            .map(|b| Bus { id: b.id.clone(), load: b.load_mw / base })
            .collect();
        let generators = self
            .generators
            .iter()
            .map(|g| Generator {
                id: g.id.clone(),
                bus: bus_index[&g.bus],
                a: g.a * base * base,
                b: g.b * base,
                c: g.c,
                pmin: g.pmin_mw / base,
                pmax: g.pmax_mw / base,
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .map(|br| Branch {
                id: br.id.clone(),
                from: bus_index[&br.from],
                to: bus_index[&br.to],
                capacity: br.capacity_mw / base,
                reactance: br.reactance_pu,
            })
            .collect();
        let contingencies = self
            .contingencies
            .iter()
            .map(|c| Contingency { id: c.id.clone(), branch: branch_index[&c.branch] })
            .collect();

        Ok(Case { base_mva: base, buses, generators, branches, contingencies, raw: self })
    }
}

/// Parse a case from text. Accepts the native JSON layout, or a matrix-style
/// table file (detected by the `mpc.` section markers) as a best-effort
/// import.
pub fn parse_case(text: &str) -> Result<Case, CaseError> {
    let file = parse_case_file(text)?;
    file.into_case()
}

/// Parse to the raw file representation without validating.
pub fn parse_case_file(text: &str) -> Result<CaseFile, CaseError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str(text).map_err(|e| CaseError::Parse(e.to_string()))
    } else if text.contains("mpc.") {
        parse_matpower(text)
    } else {
        Err(CaseError::Parse(
            "unrecognized case format: expected a JSON object or matrix-style tables".to_string(),
        ))
    }
}

/// Serialize back to the native JSON layout. Together with [`parse_case`]
/// this is the identity on `Case`: the original file image is emitted, so no
/// unit conversion is re-applied.
pub fn serialize_case(case: &Case) -> String {
    let mut s = serde_json::to_string_pretty(case.file()).expect("case file serializes");
    s.push('\n');
    s
}

/// Best-effort import of the common matrix-style case layout (`mpc.baseMVA`,
/// `mpc.bus`, `mpc.gen`, `mpc.branch`, `mpc.gencost` tables).
///
/// Out-of-service rows are dropped, a zero rating means unlimited and maps to
/// 1e6 MW, and a missing or non-polynomial cost row falls back to a flat
/// 1 $/MWh curve. No contingencies are imported.
pub fn parse_matpower(text: &str) -> Result<CaseFile, CaseError> {
    let mut base_mva = None;
    let mut tables: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
    let mut current: Option<(String, Vec<Vec<f64>>)> = None;

    for raw_line in text.lines() {
        let line = raw_line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((name, rows)) = current.as_mut() {
            let closing = line.contains("];");
            let data = line.trim_end_matches("];").trim_end_matches(';');
            let nums: Vec<f64> = data
                .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CaseError::Parse(format!("mpc.{name}: bad number: {e}")))?;
            if !nums.is_empty() {
                rows.push(nums);
            }
            if closing {
                let (name, rows) = current.take().unwrap();
                tables.insert(name, rows);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("mpc.") {
            if let Some((name, value)) = rest.split_once('=') {
                let name = name.trim().to_string();
                let value = value.trim();
                if name == "baseMVA" {
                    let v = value.trim_end_matches(';').trim();
                    base_mva = Some(
                        v.parse::<f64>()
                            .map_err(|e| CaseError::Parse(format!("mpc.baseMVA: {e}")))?,
                    );
                } else if value.starts_with('[') {
                    let tail = value.trim_start_matches('[').trim();
                    let mut rows = Vec::new();
                    if tail.contains("];") {
                        // single-line table
                        let data = tail.trim_end_matches("];").trim_end_matches(';');
                        let nums: Vec<f64> = data
                            .split(|c: char| c.is_whitespace() || c == ',')
                            .filter(|t| !t.is_empty())
                            .map(|t| t.parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|e| CaseError::Parse(format!("mpc.{name}: bad number: {e}")))?;
                        if !nums.is_empty() {
                            rows.push(nums);
                        }
                        tables.insert(name, rows);
                    } else {
                        current = Some((name, rows));
                    }
                }
            }
        }
    }

    let base_mva = base_mva.ok_or_else(|| CaseError::Parse("missing mpc.baseMVA".to_string()))?;
    let bus_rows = tables
        .get("bus")
        .ok_or_else(|| CaseError::Parse("missing mpc.bus table".to_string()))?;
    let gen_rows = tables.get("gen").cloned().unwrap_or_default();
    let branch_rows = tables
        .get("branch")
        .ok_or_else(|| CaseError::Parse("missing mpc.branch table".to_string()))?;
    let cost_rows = tables.get("gencost").cloned().unwrap_or_default();

    let fmt_id = |v: f64| {
        if v.fract() == 0.0 { format!("{}", v as i64) } else { format!("{v}") }
    };

    let mut buses = Vec::new();
    for row in bus_rows {
        if row.len() < 3 {
            return Err(CaseError::Parse("mpc.bus row too short".to_string()));
        }
        buses.push(BusFile { id: fmt_id(row[0]), load_mw: row[2] });
    }

    let mut generators = Vec::new();
    let mut gen_count: HashMap<String, usize> = HashMap::new();
    for (i, row) in gen_rows.iter().enumerate() {
        if row.len() < 10 {
            return Err(CaseError::Parse("mpc.gen row too short".to_string()));
        }
        let status = row.get(7).copied().unwrap_or(1.0);
        if status == 0.0 {
            continue;
        }
        let bus = fmt_id(row[0]);
        let n = gen_count.entry(bus.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { format!("g{bus}") } else { format!("g{bus}-{n}") };
        let (a, b, c) = cost_rows
            .get(i)
            .map(|cr| polynomial_cost(cr))
            .unwrap_or((0.0, 1.0, 0.0));
        generators.push(GeneratorFile {
            id,
            bus,
            a,
            b,
            c,
            pmin_mw: row[9],
            pmax_mw: row[8],
        });
    }

    let mut branches = Vec::new();
    let mut branch_count: HashMap<String, usize> = HashMap::new();
    for row in branch_rows {
        if row.len() < 6 {
            return Err(CaseError::Parse("mpc.branch row too short".to_string()));
        }
        let status = row.get(10).copied().unwrap_or(1.0);
        if status == 0.0 {
            continue;
        }
        let from = fmt_id(row[0]);
        let to = fmt_id(row[1]);
        let key = format!("{from}-{to}");
        let n = branch_count.entry(key.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { key } else { format!("{key}-{n}") };
        let rate = row[5];
        let capacity_mw = if rate > 0.0 { rate } else { 1e6 };
        let x = row[3].abs();
        let reactance_pu = if x > 0.0 { x } else { 1e-4 };
        branches.push(BranchFile { id, from, to, capacity_mw, reactance_pu });
    }

    Ok(CaseFile { base_mva, buses, generators, branches, contingencies: Vec::new() })
}

/// Polynomial gencost row -> (a, b, c), quadratic or lower order.
fn polynomial_cost(row: &[f64]) -> (f64, f64, f64) {
    if row.len() < 4 || row[0] != 2.0 {
        return (0.0, 1.0, 0.0);
    }
    let n = row[3] as usize;
    let coeffs = &row[4..];
    if coeffs.len() < n {
        return (0.0, 1.0, 0.0);
    }
    match n {
        0 => (0.0, 0.0, 0.0),
        1 => (0.0, 0.0, coeffs[0]),
        2 => (0.0, coeffs[0], coeffs[1]),
        _ => (coeffs[n - 3], coeffs[n - 2], coeffs[n - 1]),
    }
}

/// Scenario label: the intact network, or a named contingency outage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioId {
    Base,
    Outage(String),
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::Base => write!(f, "base"),
            ScenarioId::Outage(id) => write!(f, "{id}"),
        }
    }
}

/// Per-scenario branch capacities (pu), aligned with `case.branches`.
/// Scenarios are kept sorted: base first, then outages by id.
#[derive(Debug, Clone)]
pub struct CapacityMap {
    entries: BTreeMap<ScenarioId, Vec<f64>>,
}

impl CapacityMap {
    /// Just the intact-network scenario.
    pub fn base_only(case: &Case) -> Self {
        let caps = case.branches.iter().map(|b| b.capacity).collect();
        let mut entries = BTreeMap::new();
        entries.insert(ScenarioId::Base, caps);
        CapacityMap { entries }
    }

    /// Base plus one scenario per listed contingency id. Islanding
    /// contingencies are rejected, they have no solvable scenario.
    pub fn with_contingencies<S: AsRef<str>>(case: &Case, ids: &[S]) -> Result<Self, CaseError> {
        let mut map = Self::base_only(case);
        let unique: BTreeSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        for id in unique {
            let caps = apply_contingency(case, id)?;
            map.entries.insert(ScenarioId::Outage(id.to_string()), caps);
        }
        Ok(map)
    }

    /// Insert or replace a scenario with explicit capacities.
    pub fn insert(&mut self, id: ScenarioId, caps: Vec<f64>) {
        self.entries.insert(id, caps);
    }

    pub fn scenarios(&self) -> impl Iterator<Item = (&ScenarioId, &Vec<f64>)> {
        self.entries.iter()
    }

    pub fn ids(&self) -> Vec<ScenarioId> {
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, id: &ScenarioId) -> Option<&Vec<f64>> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Capacities for the named contingency's scenario: the outaged branch drops
/// to exactly zero, every other entry is the base capacity unchanged. The
/// zero capacity is what takes the branch out of service; no topology edit
/// happens anywhere downstream.
pub fn apply_contingency(case: &Case, id: &str) -> Result<Vec<f64>, CaseError> {
    let cont = case
        .contingency(id)
        .ok_or_else(|| CaseError::UnknownContingency(id.to_string()))?;
    if !case.connected_without(Some(cont.branch)) {
        return Err(CaseError::Islanding {
            id: id.to_string(),
            branch: case.branches[cont.branch].id.clone(),
        });
    }
    let mut caps: Vec<f64> = case.branches.iter().map(|b| b.capacity).collect();
    caps[cont.branch] = 0.0;
    Ok(caps)
}
