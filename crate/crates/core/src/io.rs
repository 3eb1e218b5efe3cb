//! Problem files (JSON) and plan/potential tables (CSV).
//!
//! Numbers are written with Rust's `Display` for `f64`, the shortest string that parses back
//! to the same value.

use crate::costs::{AffinePiece, CostError, CostModel, LinearPiece, ScalarG};
use crate::dual::DualPotential;
use crate::measures::{DiscreteMeasure, MeasureError, Point};
use crate::primal::{KernelPlan, Method, SolveOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Json { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: line {line}: {msg}")]
    Csv { path: String, line: usize, msg: String },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Shorthand for the uniform midpoint grid on `[0, 1]` with this many cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint_grid: Option<usize>,
}

impl MeasureBlock {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self { atoms: Some(m.atoms().to_vec()), weights: Some(m.weights().to_vec()), midpoint_grid: None }
    }

    pub fn build(&self) -> Result<DiscreteMeasure, IoError> {
        match (&self.atoms, &self.weights, self.midpoint_grid) {
            (None, None, Some(n)) if n > 0 => Ok(DiscreteMeasure::midpoint_grid(n)),
            (Some(a), Some(w), None) => Ok(DiscreteMeasure::new(a.clone(), w.clone())?),
            (Some(a), None, None) => Ok(DiscreteMeasure::uniform(a.clone())?),
            _ => Err(IoError::Invalid("a measure needs `atoms` (+ optional `weights`) or a positive `midpoint_grid`".into())),
        }
    }
}

/// Standalone measure file, as taken by `order` and `brenier`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub version: u32,
    #[serde(flatten)]
    pub measure: MeasureBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    Power { coef: f64, p: f64 },
    Exp { coef: f64, rate: f64 },
    NegPower { coef: f64, p: f64 },
    Affine { slope: f64, intercept: f64 },
}

impl GSpec {
    pub fn build(&self) -> ScalarG {
        match *self {
            GSpec::Power { coef, p } => ScalarG::Power { coef, p },
            GSpec::Exp { coef, rate } => ScalarG::Exp { coef, rate },
            GSpec::NegPower { coef, p } => ScalarG::NegPower { coef, p },
            GSpec::Affine { slope, intercept } => ScalarG::Affine { slope, intercept },
        }
    }
}

/// Named tables `F(x, y)` for composite costs (1-d coordinates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `|y − x|`
    AbsDiff,
    /// `e^{−xy}`
    ExpNegProduct,
    /// `e^{xy}`
    ExpProduct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub u: Vec<f64>,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePieceSpec {
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Quadratic,
    Power { eta: f64 },
    SigmaNorm { eta: f64, sigma: f64, mats: Vec<Vec<Vec<f64>>> },
    PiecewiseLinear { pieces: Vec<Vec<PieceSpec>> },
    AffineSup { pieces: Vec<AffinePieceSpec> },
    /// `c(x, m) = Σⱼ table[i][j] mⱼ`.
    Linear { table: Vec<Vec<f64>> },
    Composite {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel: Option<Kernel>,
        g: GSpec,
    },
}

impl CostSpec {
    pub fn build(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<CostModel, IoError> {
        Ok(match self {
            CostSpec::Quadratic => CostModel::quadratic(mu, nu)?,
            CostSpec::Power { eta } => CostModel::power(mu, nu, *eta)?,
            CostSpec::SigmaNorm { eta, sigma, mats } => {
                let mats = mats
                    .iter()
                    .map(|rows| {
                        let r = rows.len();
                        let c = rows.first().map_or(0, |v| v.len());
                        if rows.iter().any(|v| v.len() != c) {
                            return Err(IoError::Invalid("ragged sigma_norm matrix".into()));
                        }
                        Ok(DMatrix::from_fn(r, c, |a, b| rows[a][b]))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                CostModel::sigma_norm(mu, nu, *eta, *sigma, mats)?
            }
            CostSpec::PiecewiseLinear { pieces } => CostModel::piecewise_linear(
                mu,
                nu,
                pieces.iter().map(|row| row.iter().map(|p| LinearPiece { u: p.u.clone(), a: p.a }).collect()).collect(),
            )?,
            CostSpec::AffineSup { pieces } => {
                CostModel::affine_sup(pieces.iter().map(|p| AffinePiece { a: p.a.clone(), b: p.b.clone() }).collect())?
            }
            CostSpec::Linear { table } => {
                CostModel::affine_sup(vec![AffinePiece { a: vec![0.0; table.len()], b: table.clone() }])?
            }
            CostSpec::Composite { f, kernel, g } => {
                let g = g.build();
                match (f, kernel) {
                    (Some(t), None) => CostModel::composite(t.clone(), g)?,
                    (None, Some(k)) => {
                        if mu.dim() != 1 || nu.dim() != 1 {
                            return Err(IoError::Invalid("named composite kernels need d = 1".into()));
                        }
                        let k = *k;
                        CostModel::composite_from(mu, nu, move |x, y| match k {
                            Kernel::AbsDiff => (y[0] - x[0]).abs(),
                            Kernel::ExpNegProduct => (-x[0] * y[0]).exp(),
                            Kernel::ExpProduct => (x[0] * y[0]).exp(),
                        }, g)?
                    }
                    _ => return Err(IoError::Invalid("composite cost needs exactly one of `f` and `kernel`".into())),
                }
            }
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub version: u32,
    pub mu: MeasureBlock,
    pub nu: MeasureBlock,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
}

/// A problem with its measures and cost materialised.
pub struct Problem {
    pub spec: ProblemSpec,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: CostModel,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, IoError> {
        if self.version != FORMAT_VERSION {
            return Err(IoError::Version(self.version));
        }
        let mu = self.mu.build()?;
        let nu = self.nu.build()?;
        let cost = self.cost.build(&mu, &nu)?;
        Ok(Problem { spec: self.clone(), mu, nu, cost })
    }

    pub fn options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        if let Some(s) = &self.solver {
            if let Some(m) = s.method {
                o.method = m;
            }
            if let Some(t) = s.tol {
                o.tol = t;
            }
            if let Some(k) = s.max_iters {
                o.max_iters = k;
            }
        }
        o
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem specs always serialize")
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read { path: path.display().to_string(), source: e })
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let msg = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m).to_string();
        IoError::Json { path: path.into(), line: e.line(), column: e.column(), msg }
    })
}

pub fn parse_problem(text: &str, path: &str) -> Result<ProblemSpec, IoError> {
    parse_json(text, path)
}

pub fn load_problem(path: &Path) -> Result<Problem, IoError> {
    parse_problem(&read(path)?, &path.display().to_string())?.build()
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure, IoError> {
    let f: MeasureFile = parse_json(&read(path)?, &path.display().to_string())?;
    if f.version != FORMAT_VERSION {
        return Err(IoError::Version(f.version));
    }
    f.measure.build()
}

/// Header `mu,N,S_0..S_{d−1},q_0..q_{m−1}`, one row per X-atom.
pub fn kernel_csv(mu: &DiscreteMeasure, plan: &KernelPlan) -> String {
    let d = plan.barycenters.first().map_or(0, |s| s.len());
    let m = plan.q.first().map_or(0, |r| r.len());
    let mut out = String::from("mu,N");
    for t in 0..d {
        let _ = write!(out, ",S_{t}");
    }
    for j in 0..m {
        let _ = write!(out, ",q_{j}");
    }
    out.push('\n');
    for i in 0..plan.rows() {
        let _ = write!(out, "{},{}", mu.weight(i), plan.sizes[i]);
        for v in &plan.barycenters[i] {
            let _ = write!(out, ",{v}");
        }
        for v in &plan.q[i] {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn csv_rows(text: &str, path: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| IoError::Csv { path: path.into(), line: 1, msg: "empty file".into() })?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, l) in lines {
        let row: Result<Vec<f64>, _> = l.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| IoError::Csv { path: path.into(), line: k + 1, msg: e.to_string() })?;
        if row.len() != header.len() {
            return Err(IoError::Csv { path: path.into(), line: k + 1, msg: format!("{} fields, header has {}", row.len(), header.len()) });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads the `q_j` columns of a kernel CSV; sizes and barycenters are recomputed from `y`.
pub fn parse_kernel_csv(text: &str, path: &str, y: &[Point]) -> Result<KernelPlan, IoError> {
    let (header, rows) = csv_rows(text, path)?;
    let cols: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("q_")).map(|(k, _)| k).collect();
    if cols.len() != y.len() {
        return Err(IoError::Csv { path: path.into(), line: 1, msg: format!("{} q-columns for {} Y-atoms", cols.len(), y.len()) });
    }
    let q = rows.iter().map(|r| cols.iter().map(|&k| r[k]).collect()).collect();
    Ok(KernelPlan::new(q, y))
}

pub fn load_kernel(path: &Path, y: &[Point]) -> Result<KernelPlan, IoError> {
    parse_kernel_csv(&read(path)?, &path.display().to_string(), y)
}

/// Header `atom,value`.
pub fn potential_csv(f: &DualPotential) -> String {
    let mut out = String::from("atom,value\n");
    for (j, v) in f.f.iter().enumerate() {
        let _ = writeln!(out, "{j},{v}");
    }
    out
}

pub fn parse_potential_csv(text: &str, path: &str) -> Result<DualPotential, IoError> {
    let (header, rows) = csv_rows(text, path)?;
    if header != ["atom", "value"] {
        return Err(IoError::Csv { path: path.into(), line: 1, msg: "expected header `atom,value`".into() });
    }
    let mut f = vec![f64::NAN; rows.len()];
    for (k, r) in rows.iter().enumerate() {
        let j = r[0] as usize;
        if r[0] != j as f64 || j >= f.len() {
            return Err(IoError::Csv { path: path.into(), line: k + 2, msg: format!("bad atom index {}", r[0]) });
        }
        f[j] = r[1];
    }
    Ok(DualPotential { f })
}

pub fn load_potential(path: &Path) -> Result<DualPotential, IoError> {
    parse_potential_csv(&read(path)?, &path.display().to_string())
}

/// Header `pi_0..pi_{m−1}`, one row per X-atom (zero-weight atoms included).
pub fn parse_coupling_csv(text: &str, path: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let (header, rows) = csv_rows(text, path)?;
    if !header.iter().all(|h| h.starts_with("pi_")) {
        return Err(IoError::Csv { path: path.into(), line: 1, msg: "expected header `pi_0,pi_1,…`".into() });
    }
    Ok(rows)
}

pub fn load_coupling(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    parse_coupling_csv(&read(path)?, &path.display().to_string())
}

/// Plot table: `x_0..x_{d−1},mu,N,S_0..S_{d−1},T_0..T_{d−1},argmax`, with `T = S/N` (empty
/// when `N = 0`) and `argmax` the index of the heaviest hired atom.
pub fn plot_csv(mu: &DiscreteMeasure, plan: &KernelPlan) -> String {
    let d = mu.dim();
    let mut out = String::new();
    let head: Vec<String> = (0..d)
        .map(|t| format!("x_{t}"))
        .chain(["mu".into(), "N".into()])
        .chain((0..d).map(|t| format!("S_{t}")))
        .chain((0..d).map(|t| format!("T_{t}")))
        .chain(["argmax".into()])
        .collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for i in 0..mu.len() {
        let mut cells: Vec<String> = mu.atom(i).iter().map(|v| v.to_string()).collect();
        cells.push(mu.weight(i).to_string());
        cells.push(plan.sizes[i].to_string());
        cells.extend(plan.barycenters[i].iter().map(|v| v.to_string()));
        let n = plan.sizes[i];
        cells.extend(plan.barycenters[i].iter().map(|v| if n > 0.0 { (v / n).to_string() } else { String::new() }));
        let arg = plan.q[i]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(String::new(), |(j, _)| j.to_string());
        cells.push(arg);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
