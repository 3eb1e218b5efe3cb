//! Command-line front end. Exit codes: 0 success, 1 bad input, 2 infeasible, 3 numerical
//! failure, 4 failed validation checks.

use crate::costs::CostModel;
use crate::dual::{conical_potential, dual_value, dual_value_conical};
use crate::io::{self, IoError};
use crate::order::{brenier_check, check_phc_order, project_phc, OrderError, OrderVerdict};
use crate::primal::{eval_bar_i, primal_objective, solve_primal, solve_transport_lp, CouplingPlan, Method, SolveError};
use crate::validate::{self, Suite};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "uwot", version, about = "Unnormalized weak optimal transport between discrete measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the primal problem; prints a JSON report.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        /// Write the report here as well.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Kernel CSV: `mu,N,S_0..,q_0..`.
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Dual potential CSV: `atom,value`.
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Dual value of a potential (read from CSV, or extracted from a fresh solve).
    Dual {
        problem: PathBuf,
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide μ ≤ ν in the positively 1-homogeneous convex order.
    Order {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Kernel CSV when dominated.
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Witness JSON (directions of φ) when not dominated.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare I_c with the transport cost to the barycenter image of μ.
    Project {
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quadratic cost: check that x − S(x) is a projection onto a convex set.
    Brenier {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the golden examples and/or the randomized property suites.
    Validate {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Replace every check tolerance by this value.
        #[arg(long)]
        tol_override: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-atom table for plotting.
    ///
    /// Columns: x_0..x_{d-1},mu,N,S_0..S_{d-1},T_0..T_{d-1},argmax, where N is the kernel
    /// mass, S the barycenter, T = S/N (empty when N = 0) and argmax the index of the
    /// heaviest Y-atom in the row.
    Plotdata {
        problem: PathBuf,
        /// Use this kernel CSV instead of solving.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the relaxed functional on a coupling CSV (`pi_0..`, one row per X-atom).
    Bareval {
        problem: PathBuf,
        #[arg(long)]
        coupling: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Infeasible(String),
    Numerical(String),
    Checks(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Checks(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Checks(m) => write!(f, "checks failed: {m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Unbalanced { .. } | SolveError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            SolveError::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<OrderError> for CliError {
    fn from(e: OrderError) -> Self {
        match e {
            OrderError::Solve(s) => s.into(),
            OrderError::Breach(_) | OrderError::Lp(_) | OrderError::Dual(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(report: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn path_str(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| Value::String(p.display().to_string()))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

/// Sizes the global rayon pool from `UWOT_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("UWOT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { problem, method, out, kernel, potential, tol } => {
            let p = io::load_problem(&problem)?;
            let mut opts = p.spec.options();
            if let Some(m) = method {
                opts.method = m;
            }
            if let Some(t) = tol {
                opts.tol = t;
            }
            let t0 = Instant::now();
            let rep = solve_primal(&p.cost, &p.mu, &p.nu, &opts)?;
            let secs = t0.elapsed().as_secs_f64();
            if let Some(k) = &kernel {
                write_file(k, &io::kernel_csv(&p.mu, &rep.plan))?;
            }
            if let (Some(path), Some(f)) = (&potential, &rep.potential) {
                write_file(path, &io::potential_csv(f))?;
            }
            let within = rep.gap <= opts.tol * (1.0 + rep.primal.abs());
            let report = json!({
                "status": if within { "success" } else { "gap_exceeds_tol" },
                "method": rep.method,
                "primal": rep.primal,
                "dual": rep.dual,
                "gap": rep.gap,
                "tol": opts.tol,
                "iterations": rep.iterations,
                "artifacts": { "report": path_str(&out), "kernel": path_str(&kernel), "potential": path_str(&potential) },
                "timings": { "solve_seconds": secs },
            });
            emit(&report, out.as_deref())?;
            if !within {
                return Err(CliError::Numerical(format!("duality gap {:.3e} above tolerance", rep.gap)));
            }
            Ok(())
        }
        Command::Dual { problem, potential, out } => {
            let p = io::load_problem(&problem)?;
            let report = match potential {
                Some(path) => {
                    let f = io::load_potential(&path)?;
                    let v = dual_value(&p.cost, &f, &p.mu, &p.nu).map_err(|e| CliError::Input(e.to_string()))?;
                    json!({ "dual": finite_or_string(v), "potential": path.display().to_string() })
                }
                None => {
                    let rep = solve_primal(&p.cost, &p.mu, &p.nu, &p.spec.options())?;
                    let conical = conical_dual(&p.cost, &p.mu, &p.nu, &rep.plan)?;
                    json!({
                        "primal": rep.primal,
                        "dual": rep.dual.map(finite_or_string),
                        "potential": rep.potential.map(|f| f.f),
                        "conical_dual": conical,
                    })
                }
            };
            emit(&report, out.as_deref())
        }
        Command::Order { mu, nu, tol, kernel, witness, out } => {
            let (m, n) = (io::load_measure(&mu)?, io::load_measure(&nu)?);
            let w = check_phc_order(&m, &n, tol)?;
            if let (Some(path), Some(k)) = (&kernel, &w.kernel) {
                write_file(path, &io::kernel_csv(&m, k))?;
            }
            if let (Some(path), Some(phi)) = (&witness, &w.potential) {
                write_file(path, &(serde_json::to_string_pretty(&json!({ "directions": phi.directions, "margin": w.margin })).unwrap() + "\n"))?;
            }
            let report = json!({
                "verdict": w.verdict,
                "margin": w.margin,
                "nu1": w.nu1,
                "nu2": w.nu2,
                "directions": w.potential.as_ref().map(|p| &p.directions),
            });
            emit(&report, out.as_deref())?;
            if w.verdict == OrderVerdict::Uncertified {
                return Err(CliError::Numerical("infeasible, no certified witness".into()));
            }
            Ok(())
        }
        Command::Project { problem, tol, out } => {
            let p = io::load_problem(&problem)?;
            let r = project_phc(&p.cost, &p.mu, &p.nu, tol)?;
            emit(&to_value(&r), out.as_deref())?;
            if !r.matches {
                return Err(CliError::Numerical(format!("|I_c − T_F| = {:.3e}", (r.ic_value - r.transport_value).abs())));
            }
            Ok(())
        }
        Command::Brenier { mu, nu, tol, out } => {
            let (m, n) = (io::load_measure(&mu)?, io::load_measure(&nu)?);
            let r = brenier_check(&m, &n, tol)?;
            emit(&to_value(&r), out.as_deref())?;
            if !r.pass {
                return Err(CliError::Checks(format!("violation {:.3e}", r.max_violation)));
            }
            Ok(())
        }
        Command::Validate { suite, seed, tol_override, out } => {
            let checks = validate::run(suite, seed, tol_override);
            for c in &checks {
                eprintln!("{} {} ({:.2}s): {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
            }
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            let report = json!({ "suite": suite, "seed": seed, "tol_override": tol_override, "checks": checks, "pass": failed.is_empty() });
            emit(&report, out.as_deref())?;
            if !failed.is_empty() {
                return Err(CliError::Checks(failed.join(", ")));
            }
            Ok(())
        }
        Command::Plotdata { problem, plan, out } => {
            let p = io::load_problem(&problem)?;
            let plan = match plan {
                Some(path) => io::load_kernel(&path, p.nu.atoms())?,
                None => solve_primal(&p.cost, &p.mu, &p.nu, &p.spec.options())?.plan,
            };
            if plan.rows() != p.mu.len() {
                return Err(CliError::Input(format!("plan has {} rows, μ has {} atoms", plan.rows(), p.mu.len())));
            }
            let text = io::plot_csv(&p.mu, &plan);
            match out {
                Some(path) => write_file(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Bareval { problem, coupling, out } => {
            let p = io::load_problem(&problem)?;
            let pi = CouplingPlan { pi: io::load_coupling(&coupling)? };
            if pi.pi.len() != p.mu.len() || pi.pi.iter().any(|r| r.len() != p.nu.len()) {
                return Err(CliError::Input("coupling shape does not match the problem".into()));
            }
            let v = eval_bar_i(&p.cost, &p.mu, &pi).map_err(|e| CliError::Input(e.to_string()))?;
            emit(&json!({ "bar_i": finite_or_string(v) }), out.as_deref())
        }
    }
}

/// JSON has no infinities; they are spelled out.
fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn conical_dual(
    cost: &CostModel,
    mu: &crate::measures::DiscreteMeasure,
    nu: &crate::measures::DiscreteMeasure,
    plan: &crate::primal::KernelPlan,
) -> Result<Value, CliError> {
    let Some(c) = cost.as_conical() else { return Ok(Value::Null) };
    let lp = if cost.is_polyhedral() { Some(solve_transport_lp(cost, mu, nu)?) } else { None };
    let (phi, plan) = match &lp {
        Some((tlp, sol)) => {
            let plan = tlp.plan(sol, nu.atoms());
            (conical_potential(c, mu, &plan, Some((tlp, sol))), plan)
        }
        None => (conical_potential(c, mu, plan, None), plan.clone()),
    };
    let phi = phi.map_err(|e| CliError::Numerical(e.to_string()))?;
    let v = dual_value_conical(c, &phi, mu, nu).map_err(|e| CliError::Numerical(e.to_string()))?;
    let p = primal_objective(cost, mu, &plan).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(json!({ "value": finite_or_string(v), "gap": finite_or_string((p - v).abs()), "directions": phi.directions }))
}

pub fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
