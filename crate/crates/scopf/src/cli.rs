//! Command-line front end. Parsing and dispatch only; all solving stays in
//! the library modules.
//!
//! Exit codes: 0 success, 1 internal error, 2 infeasible or not securable,
//! 3 input error (bad file, bad flags, bad case), 4 iteration limit hit
//! without convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::case::{parse_case, CapacityMap, Case, CaseError, ScenarioId};
use crate::driver::{solve_scopf, DriverError, ScreeningMode};
use crate::oracle::{brute_force_opf, kvl_audit, OracleError};
use crate::report;
use crate::scheduler::{run_admm, AdmmSolution, SolveError, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_MAX_ITER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "scopf",
    version,
    about = "Distributed DC dispatch with N-1 contingency screening"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse a case file and report every validation violation.
    Validate {
        /// Case file (JSON, or a MATPOWER .m file).
        case: PathBuf,
    },
    /// Solve the base-case dispatch.
    Solve {
        case: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the residual trace CSV here.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Write the solution report JSON here.
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Screen contingencies and redispatch preventively until secure.
    Scopf {
        case: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// `all`, or a comma-separated list of contingency ids.
        #[arg(long, default_value = "all")]
        contingencies: String,
        /// How screening decides a violation.
        #[arg(long, value_enum, default_value_t = ScreenArg::Exact)]
        screen: ScreenArg,
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Brute-force reference dispatch by grid enumeration (small cases).
    Oracle {
        case: PathBuf,
        /// Grid points per free generator dimension.
        #[arg(long, default_value_t = 100)]
        grid_steps: usize,
        /// `all` (excluding islanding outages), or a comma-separated list.
        #[arg(long, default_value = "all")]
        contingencies: String,
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Solve the base case, rebuild bus angles from the flows, and report
    /// how far each loop is from satisfying Kirchhoff's voltage law.
    AuditKvl {
        case: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct SolverArgs {
    /// Penalty weight (> 0).
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Absolute stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub eps_abs: f64,
    /// Relative stopping tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub eps_rel: f64,
    /// Iteration limit.
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    /// Worker threads (default: available cores).
    #[arg(long, env = "OPF_WORKERS")]
    pub workers: Option<usize>,
    /// Iterations between residual trace rows.
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
}

impl SolverArgs {
    pub fn to_config(&self) -> SolverConfig {
        let defaults = SolverConfig::default();
        SolverConfig {
            rho: self.rho,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            workers: self.workers.unwrap_or(defaults.workers),
            trace_every: self.trace_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScreenArg {
    /// Max-flow transport check (exact, names the limiting cut).
    Exact,
    /// Frozen-generation consensus re-run.
    Admm,
}

impl From<ScreenArg> for ScreeningMode {
    fn from(s: ScreenArg) -> Self {
        match s {
            ScreenArg::Exact => ScreeningMode::Exact,
            ScreenArg::Admm => ScreeningMode::Admm,
        }
    }
}

/// Parse argv and run. This is the whole binary.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            // clap renders help to stdout and errors to stderr on print()
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Case(CaseError),
    Solve(SolveError),
    Driver(DriverError),
    Oracle(OracleError),
    Write(PathBuf, std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Case(e) => write!(f, "{e}"),
            CliError::Solve(e) => write!(f, "{e}"),
            CliError::Driver(e) => write!(f, "{e}"),
            CliError::Oracle(e) => write!(f, "{e}"),
            CliError::Write(p, e) => write!(f, "writing {}: {e}", p.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) => EXIT_INPUT,
            CliError::Case(_) => EXIT_INPUT,
            CliError::Solve(SolveError::InvalidConfig(_)) => EXIT_INPUT,
            CliError::Solve(_) => EXIT_INTERNAL,
            CliError::Driver(DriverError::Case(_)) => EXIT_INPUT,
            CliError::Driver(DriverError::Solve(SolveError::InvalidConfig(_))) => EXIT_INPUT,
            CliError::Driver(_) => EXIT_INTERNAL,
            CliError::Oracle(OracleError::TooManyGenerators(_))
            | CliError::Oracle(OracleError::GridTooCoarse(_)) => EXIT_INPUT,
            CliError::Oracle(_) => EXIT_INTERNAL,
            CliError::Write(..) => EXIT_INTERNAL,
        }
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::Case(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Solve(e)
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        CliError::Driver(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e)
    }
}

fn load_case(path: &Path) -> Result<Case, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(parse_case(&text)?)
}

fn selected_contingencies(case: &Case, spec: &str) -> Vec<String> {
    if spec == "all" {
        case.contingencies.iter().map(|c| c.id.clone()).collect()
    } else {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    }
}

fn write_outputs(
    trace: &Option<PathBuf>,
    solution: &Option<PathBuf>,
    sol: &AdmmSolution,
    report_value: &report::SolutionReport,
) -> Result<(), CliError> {
    if let Some(path) = trace {
        report::write_trace_csv(path, &sol.trace)
            .map_err(|e| CliError::Write(path.clone(), e))?;
    }
    if let Some(path) = solution {
        report::write_json(path, report_value).map_err(|e| CliError::Write(path.clone(), e))?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Validate { case } => {
            // parse_case already rejects invalid cases; reaching Ok means
            // zero violations.
            let case = load_case(&case)?;
            println!(
                "ok: {} buses, {} branches, {} generators, {} contingencies (base {} MVA)",
                case.buses.len(),
                case.branches.len(),
                case.generators.len(),
                case.contingencies.len(),
                case.base_mva
            );
            Ok(EXIT_OK)
        }
        Command::Solve { case, solver, trace, solution } => {
            let case = load_case(&case)?;
            let config = solver.to_config();
            config.validate()?;
            let started = Instant::now();
            let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None)?;
            let elapsed = started.elapsed();
            let rep = report::solve_report(&case, &sol, elapsed.as_millis() as u64);
            write_outputs(&trace, &solution, &sol, &rep)?;
            if sol.converged {
                println!(
                    "converged in {} iterations: cost {:.2} $/h ({} ms)",
                    sol.iterations,
                    sol.objective,
                    elapsed.as_millis()
                );
                Ok(EXIT_OK)
            } else {
                println!(
                    "no convergence after {} iterations (primal^2 {:.3e}, dual^2 {:.3e}, {} ms)",
                    sol.iterations,
                    sol.primal_sq,
                    sol.dual_sq,
                    elapsed.as_millis()
                );
                Ok(EXIT_MAX_ITER)
            }
        }
        Command::Scopf { case, solver, contingencies, screen, trace, solution } => {
            let case = load_case(&case)?;
            let config = solver.to_config();
            config.validate()?;
            let ids = selected_contingencies(&case, &contingencies);
            let run = solve_scopf(&case, &ids, screen.into(), &config)?;
            let rep = report::scopf_report(&case, &run);
            write_outputs(&trace, &solution, &run.solution, &rep)?;
            let status = if run.secure { "secure" } else { "NOT secure" };
            println!(
                "{status}: cost {:.2} $/h (base {:.2}), {} contingencies screened, {} active, {} rounds ({} ms)",
                run.solution.objective,
                run.base.objective,
                run.screening.len(),
                run.active.len(),
                run.rounds,
                run.timing.total_ms
            );
            if run.secure {
                Ok(EXIT_OK)
            } else if !run.solution.converged {
                Ok(EXIT_MAX_ITER)
            } else {
                Ok(EXIT_INFEASIBLE)
            }
        }
        Command::Oracle { case, grid_steps, contingencies, solution } => {
            let case = load_case(&case)?;
            let ids: Vec<String> = match contingencies.as_str() {
                "all" => {
                    let islanding = case.islanding_contingency_ids();
                    for id in &islanding {
                        eprintln!("note: excluding islanding contingency {id}");
                    }
                    case.contingencies
                        .iter()
                        .filter(|c| !islanding.contains(&c.id))
                        .map(|c| c.id.clone())
                        .collect()
                }
                other => selected_contingencies(&case, other),
            };
            let scenarios = CapacityMap::with_contingencies(&case, &ids)?;
            let started = Instant::now();
            let sol = brute_force_opf(&case, &scenarios, grid_steps)?;
            let rep = report::oracle_report(&case, &sol);
            if let Some(path) = &solution {
                report::write_json(path, &rep).map_err(|e| CliError::Write(path.clone(), e))?;
            }
            if sol.feasible {
                println!(
                    "oracle: cost {:.4} $/h, grid step {:.4} MW, {} candidates ({} ms)",
                    sol.cost,
                    sol.grid_step * case.base_mva,
                    sol.evaluated,
                    started.elapsed().as_millis()
                );
                Ok(EXIT_OK)
            } else {
                println!(
                    "oracle: infeasible at every grid point ({} candidates, {} ms)",
                    sol.evaluated,
                    started.elapsed().as_millis()
                );
                Ok(EXIT_INFEASIBLE)
            }
        }
        Command::AuditKvl { case, solver, solution } => {
            let case = load_case(&case)?;
            let config = solver.to_config();
            config.validate()?;
            let sol = run_admm(&case, &CapacityMap::base_only(&case), &config, None)?;
            if !sol.converged {
                println!("no convergence after {} iterations; not auditing", sol.iterations);
                return Ok(EXIT_MAX_ITER);
            }
            let flows: Vec<f64> = case
                .branches
                .iter()
                .map(|b| sol.flow(&ScenarioId::Base, &b.id).unwrap_or(0.0))
                .collect();
            let audit = kvl_audit(&case, &flows)?;
            let rep = report::kvl_report(&case, &audit);
            if let Some(path) = &solution {
                report::write_json(path, &rep).map_err(|e| CliError::Write(path.clone(), e))?;
            }
            println!(
                "max KVL mismatch {:.6e} rad across {} non-tree branches (reference bus {})",
                audit.max_mismatch,
                audit.cycle_mismatches.len(),
                audit.reference_bus
            );
            Ok(EXIT_OK)
        }
    }
}
