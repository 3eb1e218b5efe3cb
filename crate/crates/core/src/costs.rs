//! Cost functionals `c(x, m)` on nonnegative weight vectors over the Y-atoms.
//!
//! Every model is bound to a fixed list of X-atoms and Y-atoms; `x_index` and the entries
//! of `m` refer to those lists.

use crate::measures::{dot, zero_in_convex_hull, ConeModel, DiscreteMeasure, Point};
use crate::optim::scalar::{bracket_up, monotone_root};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("weight vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("X-atom index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("negative or non-finite weight at Y-atom {0}")]
    BadWeight(usize),
    #[error("outside the cost domain: {0}")]
    OutsideDomain(String),
    #[error("invalid cost parameters: {0}")]
    InvalidParameter(String),
}

/// `c(x, m) = maxₖ { Σⱼ bₖ(x, yⱼ) mⱼ + aₖ(x) }`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece {
    /// One entry per X-atom.
    pub a: Vec<f64>,
    /// `n × m` table.
    pub b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineSupCost {
    pub pieces: Vec<AffinePiece>,
}

/// One affine piece `u · z + a` of a piecewise-linear `F(x, ·)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPiece {
    pub u: Vec<f64>,
    pub a: f64,
}

/// User-supplied `F(x, z)`; must be convex in `z` on the cone.
pub trait ConicalOracle: Send + Sync {
    fn value(&self, x_index: usize, x: &[f64], z: &[f64]) -> f64;
    fn subgradient(&self, x_index: usize, x: &[f64], z: &[f64]) -> Vec<f64>;
    fn hessian(&self, _x_index: usize, _x: &[f64], _z: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Clone)]
pub enum ConicalF {
    /// `F(x, z) = maxₖ uₖ(x)·z + aₖ(x)`, pieces listed per X-atom.
    PiecewiseLinear(Vec<Vec<LinearPiece>>),
    /// `F(x, z) = ½‖x − z‖²`.
    Quadratic,
    /// `F(x, z) = −x z^η` on `R₊ × R₊`.
    Power { eta: f64 },
    /// `F(x, z) = −‖A(x) z‖_σ^η` with entrywise positive `A(x)`.
    SigmaNorm { eta: f64, sigma: f64, mats: Vec<DMatrix<f64>> },
    Oracle(Arc<dyn ConicalOracle>),
}

impl fmt::Debug for ConicalF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConicalF::PiecewiseLinear(p) => f.debug_tuple("PiecewiseLinear").field(p).finish(),
            ConicalF::Quadratic => f.write_str("Quadratic"),
            ConicalF::Power { eta } => f.debug_struct("Power").field("eta", eta).finish(),
            ConicalF::SigmaNorm { eta, sigma, .. } => {
                f.debug_struct("SigmaNorm").field("eta", eta).field("sigma", sigma).finish()
            }
            ConicalF::Oracle(_) => f.write_str("Oracle"),
        }
    }
}

/// `c(x, m) = F(x, Σⱼ mⱼ yⱼ)`.
#[derive(Clone, Debug)]
pub struct ConicalCost {
    pub x: Vec<Point>,
    pub y: Vec<Point>,
    pub f: ConicalF,
}

/// Convex scalar `G` on `[0, ∞)` with declared end slopes.
pub trait ConvexScalar: Send + Sync {
    fn value(&self, u: f64) -> f64;
    fn deriv(&self, u: f64) -> f64;
    fn second(&self, u: f64) -> f64;
    fn deriv_at_zero(&self) -> f64;
    fn deriv_at_infinity(&self) -> f64;
}

#[derive(Clone)]
pub enum ScalarG {
    /// `coef · u^p`, `p ≥ 1`.
    Power { coef: f64, p: f64 },
    /// `coef · e^{rate·u}`.
    Exp { coef: f64, rate: f64 },
    /// `−coef · u^p`, `0 < p < 1`.
    NegPower { coef: f64, p: f64 },
    /// `slope · u + intercept`.
    Affine { slope: f64, intercept: f64 },
    Custom(Arc<dyn ConvexScalar>),
}

impl fmt::Debug for ScalarG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarG::Power { coef, p } => write!(f, "Power({coef}·u^{p})"),
            ScalarG::Exp { coef, rate } => write!(f, "Exp({coef}·e^({rate}u))"),
            ScalarG::NegPower { coef, p } => write!(f, "NegPower(−{coef}·u^{p})"),
            ScalarG::Affine { slope, intercept } => write!(f, "Affine({slope}u + {intercept})"),
            ScalarG::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl ScalarG {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            ScalarG::Power { coef, p } => coef * u.powf(*p),
            ScalarG::Exp { coef, rate } => coef * (rate * u).exp(),
            ScalarG::NegPower { coef, p } => -coef * u.powf(*p),
            ScalarG::Affine { slope, intercept } => slope * u + intercept,
            ScalarG::Custom(g) => g.value(u),
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            ScalarG::Power { coef, p } => {
                if *p == 1.0 {
                    *coef
                } else {
                    coef * p * u.powf(p - 1.0)
                }
            }
            ScalarG::Exp { coef, rate } => coef * rate * (rate * u).exp(),
            ScalarG::NegPower { coef, p } => -coef * p * u.powf(p - 1.0),
            ScalarG::Affine { slope, .. } => *slope,
            ScalarG::Custom(g) => g.deriv(u),
        }
    }

    pub fn second(&self, u: f64) -> f64 {
        match self {
            ScalarG::Power { coef, p } => {
                if *p == 1.0 {
                    0.0
                } else if *p == 2.0 {
                    2.0 * coef
                } else {
                    coef * p * (p - 1.0) * u.powf(p - 2.0)
                }
            }
            ScalarG::Exp { coef, rate } => coef * rate * rate * (rate * u).exp(),
            ScalarG::NegPower { coef, p } => -coef * p * (p - 1.0) * u.powf(p - 2.0),
            ScalarG::Affine { .. } => 0.0,
            ScalarG::Custom(g) => g.second(u),
        }
    }

    pub fn deriv_at_zero(&self) -> f64 {
        match self {
            ScalarG::Power { coef, p } => {
                if *p == 1.0 {
                    *coef
                } else {
                    0.0
                }
            }
            ScalarG::Exp { coef, rate } => coef * rate,
            ScalarG::NegPower { .. } => f64::NEG_INFINITY,
            ScalarG::Affine { slope, .. } => *slope,
            ScalarG::Custom(g) => g.deriv_at_zero(),
        }
    }

    pub fn deriv_at_infinity(&self) -> f64 {
        match self {
            ScalarG::Power { coef, p } => {
                if *p == 1.0 {
                    *coef
                } else {
                    f64::INFINITY
                }
            }
            ScalarG::Exp { .. } => f64::INFINITY,
            ScalarG::NegPower { .. } => 0.0,
            ScalarG::Affine { slope, .. } => *slope,
            ScalarG::Custom(g) => g.deriv_at_infinity(),
        }
    }

    /// Smallest `u ≥ 0` with `G'(u) ≥ s`; `None` when `s ≥ G'(∞)` (no such point or only
    /// asymptotically).
    pub fn deriv_inverse(&self, s: f64) -> Option<f64> {
        if s <= self.deriv_at_zero() {
            return Some(0.0);
        }
        if s >= self.deriv_at_infinity() {
            return None;
        }
        match self {
            ScalarG::Power { coef, p } if *p > 1.0 => Some((s / (coef * p)).powf(1.0 / (p - 1.0))),
            ScalarG::Exp { coef, rate } => Some(((s / (coef * rate)).ln() / rate).max(0.0)),
            ScalarG::NegPower { coef, p } => Some((-s / (coef * p)).powf(1.0 / (p - 1.0))),
            _ => {
                let h = |u: f64| self.deriv(u) - s;
                let hi = bracket_up(h, 1.0, 1e300)?;
                Some(monotone_root(h, 0.0, hi, 1e-15))
            }
        }
    }

    fn validate(&self) -> Result<(), CostError> {
        let ok = match self {
            ScalarG::Power { coef, p } => *coef > 0.0 && *p >= 1.0,
            ScalarG::Exp { coef, rate } => *coef > 0.0 && *rate > 0.0,
            ScalarG::NegPower { coef, p } => *coef > 0.0 && *p > 0.0 && *p < 1.0,
            ScalarG::Affine { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            ScalarG::Custom(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CostError::InvalidParameter(format!("{self:?}")))
        }
    }
}

/// `c(x, m) = G(Σⱼ F(x, yⱼ) mⱼ)`.
#[derive(Clone, Debug)]
pub struct CompositeCost {
    /// `n × m` table of positive values.
    pub f: Vec<Vec<f64>>,
    pub g: ScalarG,
}

#[derive(Clone, Debug)]
pub enum CostModel {
    AffineSup(AffineSupCost),
    Conical(ConicalCost),
    Composite(CompositeCost),
}

fn rect(table: &[Vec<f64>], n: usize, m: usize) -> bool {
    table.len() == n && table.iter().all(|r| r.len() == m && r.iter().all(|v| v.is_finite()))
}

impl CostModel {
    pub fn affine_sup(pieces: Vec<AffinePiece>) -> Result<Self, CostError> {
        let first = pieces.first().ok_or_else(|| CostError::InvalidParameter("no pieces".into()))?;
        let n = first.a.len();
        let m = first.b.first().map_or(0, |r| r.len());
        if pieces.iter().any(|p| p.a.len() != n || !rect(&p.b, n, m) || p.a.iter().any(|v| !v.is_finite())) {
            return Err(CostError::InvalidParameter("ragged or non-finite piece tables".into()));
        }
        Ok(CostModel::AffineSup(AffineSupCost { pieces }))
    }

    /// Single piece `a ≡ 0`, `b(x, y)` tabulated from a closure.
    pub fn linear(mu: &DiscreteMeasure, nu: &DiscreteMeasure, b: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        let table = mu.atoms().iter().map(|x| nu.atoms().iter().map(|y| b(x, y)).collect()).collect();
        CostModel::AffineSup(AffineSupCost {
            pieces: vec![AffinePiece { a: vec![0.0; mu.len()], b: table }],
        })
    }

    fn conical(mu: &DiscreteMeasure, nu: &DiscreteMeasure, f: ConicalF) -> Self {
        CostModel::Conical(ConicalCost { x: mu.atoms().to_vec(), y: nu.atoms().to_vec(), f })
    }

    pub fn quadratic(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self, CostError> {
        if mu.dim() != nu.dim() {
            return Err(CostError::InvalidParameter("X and Y dimensions differ".into()));
        }
        Ok(Self::conical(mu, nu, ConicalF::Quadratic))
    }

    pub fn power(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eta: f64) -> Result<Self, CostError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(CostError::InvalidParameter(format!("eta = {eta} not in (0,1)")));
        }
        if mu.dim() != 1 || nu.dim() != 1 {
            return Err(CostError::InvalidParameter("power cost needs d = 1".into()));
        }
        if mu.atoms().iter().chain(nu.atoms()).any(|a| a[0] < 0.0) {
            return Err(CostError::OutsideDomain("power cost needs atoms in R₊".into()));
        }
        Ok(Self::conical(mu, nu, ConicalF::Power { eta }))
    }

    pub fn piecewise_linear(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        pieces: Vec<Vec<LinearPiece>>,
    ) -> Result<Self, CostError> {
        if pieces.len() != mu.len()
            || pieces.iter().any(|p| p.is_empty() || p.iter().any(|l| l.u.len() != nu.dim() || !l.a.is_finite()))
        {
            return Err(CostError::InvalidParameter("need ≥ 1 piece per X-atom with d-vectors".into()));
        }
        Ok(Self::conical(mu, nu, ConicalF::PiecewiseLinear(pieces)))
    }

    pub fn sigma_norm(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        eta: f64,
        sigma: f64,
        mats: Vec<DMatrix<f64>>,
    ) -> Result<Self, CostError> {
        if !(eta > 0.0 && eta < 1.0) || !(sigma > 0.0 && sigma <= 1.0) {
            return Err(CostError::InvalidParameter(format!("eta = {eta}, sigma = {sigma}")));
        }
        if mats.len() != mu.len() || mats.iter().any(|a| a.ncols() != nu.dim() || a.iter().any(|v| !(*v > 0.0))) {
            return Err(CostError::InvalidParameter("one positive-entry matrix per X-atom".into()));
        }
        if nu.atoms().iter().any(|y| y.iter().any(|c| *c < 0.0)) {
            return Err(CostError::OutsideDomain("sigma-norm cost needs Y ⊂ R₊^d".into()));
        }
        Ok(Self::conical(mu, nu, ConicalF::SigmaNorm { eta, sigma, mats }))
    }

    pub fn oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, oracle: Arc<dyn ConicalOracle>) -> Self {
        Self::conical(mu, nu, ConicalF::Oracle(oracle))
    }

    pub fn composite(f: Vec<Vec<f64>>, g: ScalarG) -> Result<Self, CostError> {
        let n = f.len();
        let m = f.first().map_or(0, |r| r.len());
        if n == 0 || !rect(&f, n, m) || f.iter().flatten().any(|v| *v <= 0.0) {
            return Err(CostError::InvalidParameter("F table must be rectangular and positive".into()));
        }
        g.validate()?;
        let cost = CompositeCost { f, g };
        if !cost.g_is_convex(64) {
            return Err(CostError::InvalidParameter("G fails the sampled midpoint convexity test".into()));
        }
        Ok(CostModel::Composite(cost))
    }

    /// Composite cost with `F` tabulated from a closure.
    pub fn composite_from(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        f: impl Fn(&[f64], &[f64]) -> f64,
        g: ScalarG,
    ) -> Result<Self, CostError> {
        let table = mu.atoms().iter().map(|x| nu.atoms().iter().map(|y| f(x, y)).collect()).collect();
        Self::composite(table, g)
    }

    pub fn n_x(&self) -> usize {
        match self {
            CostModel::AffineSup(c) => c.pieces[0].a.len(),
            CostModel::Conical(c) => c.x.len(),
            CostModel::Composite(c) => c.f.len(),
        }
    }

    pub fn n_y(&self) -> usize {
        match self {
            CostModel::AffineSup(c) => c.pieces[0].b.first().map_or(0, |r| r.len()),
            CostModel::Conical(c) => c.y.len(),
            CostModel::Composite(c) => c.f[0].len(),
        }
    }

    pub fn as_conical(&self) -> Option<&ConicalCost> {
        match self {
            CostModel::Conical(c) => Some(c),
            _ => None,
        }
    }

    /// Whether `eval_cost` is piecewise linear in `m` (LP-representable).
    pub fn is_polyhedral(&self) -> bool {
        matches!(
            self,
            CostModel::AffineSup(_)
                | CostModel::Conical(ConicalCost { f: ConicalF::PiecewiseLinear(_), .. })
        )
    }

    /// Pieces `(a, b)` of the polyhedral representation for row `i`: `c = maxₖ bₖ·m + aₖ`.
    pub fn affine_pieces(&self, i: usize) -> Option<Vec<(f64, Vec<f64>)>> {
        match self {
            CostModel::AffineSup(c) => Some(c.pieces.iter().map(|p| (p.a[i], p.b[i].clone())).collect()),
            CostModel::Conical(ConicalCost { f: ConicalF::PiecewiseLinear(pcs), y, .. }) => Some(
                pcs[i].iter().map(|l| (l.a, y.iter().map(|yj| dot(&l.u, yj)).collect())).collect(),
            ),
            _ => None,
        }
    }

    fn check(&self, i: usize, m: &[f64]) -> Result<(), CostError> {
        if i >= self.n_x() {
            return Err(CostError::IndexOutOfRange(i));
        }
        if m.len() != self.n_y() {
            return Err(CostError::LengthMismatch { expected: self.n_y(), got: m.len() });
        }
        if let Some(j) = m.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CostError::BadWeight(j));
        }
        Ok(())
    }
}

impl ConicalCost {
    pub fn dim(&self) -> usize {
        self.y[0].len()
    }

    /// `z = Σⱼ mⱼ yⱼ`.
    pub fn barycenter(&self, m: &[f64]) -> Point {
        let mut z = vec![0.0; self.dim()];
        for (w, y) in m.iter().zip(&self.y) {
            for t in 0..z.len() {
                z[t] += w * y[t];
            }
        }
        z
    }

    fn nonneg(z: &[f64], what: &str) -> Result<(), CostError> {
        if z.iter().any(|c| *c < 0.0) {
            Err(CostError::OutsideDomain(format!("{what} needs z in R₊^d, got {z:?}")))
        } else {
            Ok(())
        }
    }

    pub fn f_value(&self, i: usize, z: &[f64]) -> Result<f64, CostError> {
        let x = &self.x[i];
        Ok(match &self.f {
            ConicalF::PiecewiseLinear(p) => p[i].iter().map(|l| dot(&l.u, z) + l.a).fold(f64::NEG_INFINITY, f64::max),
            ConicalF::Quadratic => 0.5 * x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            ConicalF::Power { eta } => {
                Self::nonneg(z, "power cost")?;
                -x[0] * z[0].powf(*eta)
            }
            ConicalF::SigmaNorm { eta, sigma, mats } => {
                Self::nonneg(z, "sigma-norm cost")?;
                -sigma_norm(&(&mats[i] * nalgebra::DVector::from_column_slice(z)), *sigma).powf(*eta)
            }
            ConicalF::Oracle(o) => o.value(i, x, z),
        })
    }

    /// A subgradient of `F(xᵢ, ·)` at `z`. At `z = 0` the nonsmooth power-type families report
    /// the gradient at [`SUBGRADIENT_FLOOR`] instead of an infinite slope.
    pub fn f_gradient(&self, i: usize, z: &[f64]) -> Result<Vec<f64>, CostError> {
        let x = &self.x[i];
        Ok(match &self.f {
            ConicalF::PiecewiseLinear(p) => {
                let k = (0..p[i].len())
                    .max_by(|&a, &b| {
                        (dot(&p[i][a].u, z) + p[i][a].a).total_cmp(&(dot(&p[i][b].u, z) + p[i][b].a))
                    })
                    .unwrap();
                p[i][k].u.clone()
            }
            ConicalF::Quadratic => z.iter().zip(x).map(|(a, b)| a - b).collect(),
            ConicalF::Power { eta } => {
                Self::nonneg(z, "power cost")?;
                vec![-x[0] * eta * z[0].max(SUBGRADIENT_FLOOR).powf(eta - 1.0)]
            }
            ConicalF::SigmaNorm { eta, sigma, mats } => {
                Self::nonneg(z, "sigma-norm cost")?;
                let (g, _) = sigma_norm_derivs(&mats[i], z, *eta, *sigma, false);
                g
            }
            ConicalF::Oracle(o) => o.subgradient(i, x, z),
        })
    }

    /// Hessian of `F(xᵢ, ·)` in `z`, where it exists.
    pub fn f_hessian(&self, i: usize, z: &[f64]) -> Option<DMatrix<f64>> {
        let d = self.dim();
        match &self.f {
            ConicalF::PiecewiseLinear(_) => None,
            ConicalF::Quadratic => Some(DMatrix::identity(d, d)),
            ConicalF::Power { eta } => {
                let zz = z[0].max(SUBGRADIENT_FLOOR);
                Some(DMatrix::from_element(1, 1, -self.x[i][0] * eta * (eta - 1.0) * zz.powf(eta - 2.0)))
            }
            ConicalF::SigmaNorm { eta, sigma, mats } => sigma_norm_derivs(&mats[i], z, *eta, *sigma, true).1,
            ConicalF::Oracle(o) => o.hessian(i, &self.x[i], z),
        }
    }

    /// `F'_∞(xᵢ, z)`.
    pub fn f_recession(&self, i: usize, z: &[f64]) -> f64 {
        let zero = z.iter().all(|c| *c == 0.0);
        match &self.f {
            ConicalF::PiecewiseLinear(p) => p[i].iter().map(|l| dot(&l.u, z)).fold(f64::NEG_INFINITY, f64::max),
            ConicalF::Quadratic => {
                if zero {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConicalF::Power { .. } | ConicalF::SigmaNorm { .. } => 0.0,
            ConicalF::Oracle(o) => {
                if zero {
                    return 0.0;
                }
                let lam = 1e8;
                let zl: Vec<f64> = z.iter().map(|c| c * lam).collect();
                (o.value(i, &self.x[i], &zl) - o.value(i, &self.x[i], &vec![0.0; z.len()])) / lam
            }
        }
    }

    pub fn is_nonpositive_family(&self) -> bool {
        matches!(self.f, ConicalF::Power { .. } | ConicalF::SigmaNorm { .. })
    }
}

/// Where the power-type gradients are evaluated when `z = 0`.
pub const SUBGRADIENT_FLOOR: f64 = 1e-12;

fn sigma_norm(v: &nalgebra::DVector<f64>, sigma: f64) -> f64 {
    v.iter().map(|c| c.abs().powf(sigma)).sum::<f64>().powf(1.0 / sigma)
}

/// Gradient and (optionally) Hessian in `z` of `−‖A z‖_σ^η` for `A z > 0`.
fn sigma_norm_derivs(a: &DMatrix<f64>, z: &[f64], eta: f64, sigma: f64, hess: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let zz: Vec<f64> = z.iter().map(|c| c.max(0.0)).collect();
    let mut v = a * nalgebra::DVector::from_column_slice(&zz);
    for c in v.iter_mut() {
        *c = c.max(SUBGRADIENT_FLOOR);
    }
    let s: f64 = v.iter().map(|c| c.powf(sigma)).sum();
    let w = v.map(|c| c.powf(sigma - 1.0));
    let gv = &w * (-eta * s.powf(eta / sigma - 1.0));
    let g = a.tr_mul(&gv).iter().copied().collect();
    if !hess {
        return (g, None);
    }
    let k = v.len();
    let mut hv = &w * w.transpose() * (-eta * (eta - sigma) * s.powf(eta / sigma - 2.0));
    let diag = -eta * (sigma - 1.0) * s.powf(eta / sigma - 1.0);
    for t in 0..k {
        hv[(t, t)] += diag * v[t].powf(sigma - 2.0);
    }
    (g, Some(a.transpose() * hv * a))
}

impl CompositeCost {
    pub fn u(&self, i: usize, m: &[f64]) -> f64 {
        self.f[i].iter().zip(m).map(|(f, w)| f * w).sum()
    }

    fn f_range(&self) -> (f64, f64) {
        let it = self.f.iter().flatten();
        (it.clone().fold(f64::INFINITY, |a, b| a.min(*b)), it.fold(0.0, |a, b| a.max(*b)))
    }

    /// Sampled midpoint convexity of `G` on `[0, 4·max F]`.
    pub fn g_is_convex(&self, samples: usize) -> bool {
        let top = 4.0 * self.f_range().1.max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a09e667);
        (0..samples).all(|_| {
            let a = rng.gen::<f64>() * top;
            let b = rng.gen::<f64>() * top;
            let (ga, gb, gm) = (self.g.value(a), self.g.value(b), self.g.value(0.5 * (a + b)));
            gm <= 0.5 * (ga + gb) + 1e-10 * (1.0 + ga.abs() + gb.abs())
        })
    }
}

pub fn eval_cost(cost: &CostModel, x_index: usize, m: &[f64]) -> Result<f64, CostError> {
    cost.check(x_index, m)?;
    Ok(match cost {
        CostModel::AffineSup(c) => c
            .pieces
            .iter()
            .map(|p| dot(&p.b[x_index], m) + p.a[x_index])
            .fold(f64::NEG_INFINITY, f64::max),
        CostModel::Conical(c) => c.f_value(x_index, &c.barycenter(m))?,
        CostModel::Composite(c) => c.g.value(c.u(x_index, m)),
    })
}

/// `c'_∞(x, m) = lim_λ c(x, λm)/λ`, possibly `+∞`.
pub fn recession(cost: &CostModel, x_index: usize, m: &[f64]) -> Result<f64, CostError> {
    cost.check(x_index, m)?;
    if m.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    Ok(match cost {
        CostModel::AffineSup(c) => c.pieces.iter().map(|p| dot(&p.b[x_index], m)).fold(f64::NEG_INFINITY, f64::max),
        CostModel::Conical(c) => c.f_recession(x_index, &c.barycenter(m)),
        CostModel::Composite(c) => {
            let slope = c.g.deriv_at_infinity();
            if slope == f64::INFINITY {
                f64::INFINITY
            } else {
                slope * c.u(x_index, m)
            }
        }
    })
}

/// Gradient of `m ↦ c(x, m)` (a subgradient for the polyhedral models).
pub fn cost_gradient(cost: &CostModel, x_index: usize, m: &[f64]) -> Result<Vec<f64>, CostError> {
    cost.check(x_index, m)?;
    Ok(match cost {
        CostModel::AffineSup(c) => {
            let k = (0..c.pieces.len())
                .max_by(|&a, &b| {
                    let va = dot(&c.pieces[a].b[x_index], m) + c.pieces[a].a[x_index];
                    let vb = dot(&c.pieces[b].b[x_index], m) + c.pieces[b].a[x_index];
                    va.total_cmp(&vb)
                })
                .unwrap();
            c.pieces[k].b[x_index].clone()
        }
        CostModel::Conical(c) => {
            let gz = c.f_gradient(x_index, &c.barycenter(m))?;
            c.y.iter().map(|y| dot(&gz, y)).collect()
        }
        CostModel::Composite(c) => {
            let s = c.g.deriv(c.u(x_index, m));
            c.f[x_index].iter().map(|f| s * f).collect()
        }
    })
}

/// Hessian of `m ↦ c(x, m)` where the model is twice differentiable.
pub fn cost_hessian(cost: &CostModel, x_index: usize, m: &[f64]) -> Option<DMatrix<f64>> {
    match cost {
        CostModel::AffineSup(_) => None,
        CostModel::Conical(c) => {
            let hz = c.f_hessian(x_index, &c.barycenter(m))?;
            let ymat = DMatrix::from_fn(c.dim(), c.y.len(), |t, j| c.y[j][t]);
            Some(ymat.transpose() * hz * ymat)
        }
        CostModel::Composite(c) => {
            let s = c.g.second(c.u(x_index, m));
            let f = nalgebra::DVector::from_column_slice(&c.f[x_index]);
            Some(&f * f.transpose() * s)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

/// Which growth assumptions a cost satisfies, with the constants that certify them.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    /// `(r₀, r₁)` with `c(x, m) ≥ r₀ + r₁·m(Y)`.
    pub lb: Option<(f64, f64)>,
    pub holds_b: Verdict,
    pub holds_c: Verdict,
    /// `a` with `c'_∞(x, p) ≤ a` for probability vectors `p`.
    pub recession_bound: Option<f64>,
    /// `b = maxₓ c(x, 0)`, so that `c(x, m) ≤ b + a·m(Y)` when the recession cost is bounded.
    pub intercept: Option<f64>,
}

pub fn check_conditions(cost: &CostModel, sample_budget: usize) -> ConditionReport {
    let n = cost.n_x();
    let zero = vec![0.0; cost.n_y()];
    let intercept = (0..n).map(|i| eval_cost(cost, i, &zero).unwrap_or(f64::NAN)).fold(f64::NEG_INFINITY, f64::max);
    let flat = |t: &[Vec<f64>]| t.iter().flatten().copied().collect::<Vec<f64>>();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match cost {
        CostModel::AffineSup(c) => {
            let a = c.pieces.iter().map(|p| max(&flat(&p.b))).fold(f64::NEG_INFINITY, f64::max);
            // the piece with the largest slope floor gives the sharpest bound
            let lb = c
                .pieces
                .iter()
                .map(|p| (min(&p.a), min(&flat(&p.b))))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            ConditionReport {
                lb: Some(lb),
                holds_b: Verdict::No,
                holds_c: Verdict::Yes,
                recession_bound: Some(a),
                intercept: Some(intercept),
            }
        }
        CostModel::Conical(cc) => conical_conditions(cost, cc, sample_budget, intercept),
        CostModel::Composite(c) => {
            let (fmin, fmax) = c.f_range();
            let g1 = c.g.deriv(1.0);
            let r0 = c.g.value(1.0) - g1;
            let r1 = if g1 >= 0.0 { g1 * fmin } else { g1 * fmax };
            let inf = c.g.deriv_at_infinity();
            if inf == f64::INFINITY {
                ConditionReport {
                    lb: Some((r0, r1)),
                    holds_b: Verdict::Yes,
                    holds_c: Verdict::No,
                    recession_bound: None,
                    intercept: None,
                }
            } else {
                let a = if inf >= 0.0 { inf * fmax } else { inf * fmin };
                ConditionReport {
                    lb: Some((r0, r1)),
                    holds_b: Verdict::No,
                    holds_c: Verdict::Yes,
                    recession_bound: Some(a),
                    intercept: Some(intercept),
                }
            }
        }
    }
}

fn conical_conditions(cost: &CostModel, cc: &ConicalCost, sample_budget: usize, intercept: f64) -> ConditionReport {
    let y_max = |t: usize| cc.y.iter().map(|y| y[t]).fold(0.0, f64::max);
    match &cc.f {
        ConicalF::PiecewiseLinear(p) => {
            let slopes = |k_of: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
                (0..cc.x.len()).flat_map(k_of).collect()
            };
            let all = slopes(&|i| {
                p[i].iter().flat_map(|l| cc.y.iter().map(move |y| dot(&l.u, y))).collect()
            });
            let a = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // bound from the first piece of every row
            let r0 = (0..cc.x.len()).map(|i| p[i][0].a).fold(f64::INFINITY, f64::min);
            let r1 = (0..cc.x.len())
                .flat_map(|i| cc.y.iter().map(move |y| dot(&p[i][0].u, y)))
                .fold(f64::INFINITY, f64::min);
            ConditionReport {
                lb: Some((r0, r1)),
                holds_b: Verdict::No,
                holds_c: Verdict::Yes,
                recession_bound: Some(a),
                intercept: Some(intercept),
            }
        }
        ConicalF::Quadratic => {
            let cone = ConeModel::new(cc.y.clone()).expect("nonempty Y");
            let b = !zero_in_convex_hull(&cone, cone.default_tol());
            ConditionReport {
                lb: Some((0.0, 0.0)),
                holds_b: if b { Verdict::Yes } else { Verdict::No },
                holds_c: Verdict::No,
                recession_bound: None,
                intercept: None,
            }
        }
        ConicalF::Power { eta } => {
            let beta = cc.x.iter().map(|x| x[0]).fold(0.0, f64::max);
            let delta = y_max(0);
            ConditionReport {
                lb: Some((-beta * (1.0 - eta), -beta * eta * delta)),
                holds_b: Verdict::No,
                holds_c: Verdict::Yes,
                recession_bound: Some(0.0),
                intercept: Some(intercept),
            }
        }
        ConicalF::SigmaNorm { eta, sigma, mats } => {
            let mut k = 0.0f64;
            for a in mats {
                for y in &cc.y {
                    let v = a * nalgebra::DVector::from_column_slice(y);
                    let rows = v.len() as f64;
                    k = k.max(rows.powf(1.0 / sigma - 1.0) * v.iter().map(|c| c.abs()).sum::<f64>());
                }
            }
            ConditionReport {
                lb: Some((-(1.0 - eta), -eta * k)),
                holds_b: Verdict::No,
                holds_c: Verdict::Yes,
                recession_bound: Some(0.0),
                intercept: Some(intercept),
            }
        }
        ConicalF::Oracle(_) => {
            // sampled recession estimate only informs the bound; the verdicts stay unknown
            let mut rng = ChaCha8Rng::seed_from_u64(0xbb67ae85);
            let mut worst = f64::NEG_INFINITY;
            for s in 0..sample_budget {
                let i = s % cc.x.len();
                let mut p: Vec<f64> = (0..cc.y.len()).map(|_| rng.gen::<f64>()).collect();
                let tot: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= tot);
                if let Ok(r) = recession(cost, i, &p) {
                    worst = worst.max(r);
                }
            }
            ConditionReport {
                lb: None,
                holds_b: Verdict::Unknown,
                holds_c: Verdict::Unknown,
                recession_bound: if worst.is_finite() { Some(worst) } else { None },
                intercept: None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(a: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(a, w).unwrap()
    }

    #[test]
    fn spec_values() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![2.0, 0.0]).unwrap();
        let q = CostModel::quadratic(&mu, &nu).unwrap();
        assert_eq!(eval_cost(&q, 0, &[1.0]).unwrap(), 0.5);

        let p = CostModel::power(&m1(&[1.0], &[1.0]), &m1(&[0.25], &[1.0]), 0.5).unwrap();
        assert_eq!(eval_cost(&p, 0, &[1.0]).unwrap(), -0.5);

        let lin = CostModel::linear(&m1(&[0.0], &[1.0]), &m1(&[2.0], &[1.0]), |x, y| (x[0] - y[0]).powi(2));
        assert_eq!(eval_cost(&lin, 0, &[1.0]).unwrap(), 4.0);
    }

    #[test]
    fn recession_values() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![2.0, 0.0]).unwrap();
        let q = CostModel::quadratic(&mu, &nu).unwrap();
        assert_eq!(recession(&q, 0, &[1.0]).unwrap(), f64::INFINITY);
        let p = CostModel::power(&m1(&[1.0], &[1.0]), &m1(&[0.25], &[1.0]), 0.5).unwrap();
        assert_eq!(recession(&p, 0, &[3.0]).unwrap(), 0.0);
        // pieces b₁ = y, b₂ = 2y on Y = {1}
        let two = CostModel::affine_sup(vec![
            AffinePiece { a: vec![0.0], b: vec![vec![1.0]] },
            AffinePiece { a: vec![0.0], b: vec![vec![2.0]] },
        ])
        .unwrap();
        assert_eq!(recession(&two, 0, &[3.0]).unwrap(), 6.0);
    }

    #[test]
    fn conditions() {
        let mu = m1(&[0.5, 2.0], &[0.5, 0.5]);
        let nu = m1(&[1.0, 3.0], &[0.5, 0.5]);
        let q = check_conditions(&CostModel::quadratic(&mu, &nu).unwrap(), 0);
        assert_eq!(q.holds_b, Verdict::Yes);
        let p = check_conditions(&CostModel::power(&mu, &nu, 0.25).unwrap(), 0);
        assert_eq!(p.lb, Some((-2.0 * 0.75, -2.0 * 0.25 * 3.0)));
        assert_eq!(p.holds_c, Verdict::Yes);
        let lin = CostModel::linear(&mu, &nu, |x, y| x[0] * y[0]);
        let r = check_conditions(&lin, 0);
        assert_eq!((r.holds_c, r.recession_bound), (Verdict::Yes, Some(6.0)));
    }

    #[test]
    fn composite_slopes_and_inverse() {
        let g = ScalarG::Power { coef: 1.0, p: 2.0 };
        assert_eq!(g.deriv_at_zero(), 0.0);
        assert_eq!(g.deriv_at_infinity(), f64::INFINITY);
        assert!((g.deriv_inverse(3.0).unwrap() - 1.5).abs() < 1e-15);
        let e = ScalarG::Exp { coef: 2.0, rate: 0.5 };
        let u = e.deriv_inverse(5.0).unwrap();
        assert!((e.deriv(u) - 5.0).abs() < 1e-12);
        let a = ScalarG::Affine { slope: 2.0, intercept: 0.0 };
        assert_eq!(a.deriv_inverse(3.0), None);
        assert!(CostModel::composite(vec![vec![1.0]], ScalarG::Power { coef: 1.0, p: 0.5 }).is_err());
        assert!(CostModel::composite(vec![vec![0.0]], g).is_err());
    }

    #[test]
    fn sigma_norm_gradient_matches_differences() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![1.0, 0.5], vec![0.2, 1.5]]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 2.0, 1.2]);
        let c = CostModel::sigma_norm(&mu, &nu, 0.5, 0.7, vec![a]).unwrap();
        let m = [0.7, 0.4];
        let g = cost_gradient(&c, 0, &m).unwrap();
        let h = cost_hessian(&c, 0, &m).unwrap();
        let eps = 1e-6;
        for j in 0..2 {
            let mut up = m;
            up[j] += eps;
            let mut dn = m;
            dn[j] -= eps;
            let fd = (eval_cost(&c, 0, &up).unwrap() - eval_cost(&c, 0, &dn).unwrap()) / (2.0 * eps);
            assert!((fd - g[j]).abs() < 1e-7, "grad {j}");
            let gu = cost_gradient(&c, 0, &up).unwrap();
            let gd = cost_gradient(&c, 0, &dn).unwrap();
            for k in 0..2 {
                assert!(((gu[k] - gd[k]) / (2.0 * eps) - h[(k, j)]).abs() < 1e-5, "hess {k}{j}");
            }
        }
    }

    #[test]
    fn errors() {
        let p = CostModel::power(&m1(&[1.0], &[1.0]), &m1(&[0.25], &[1.0]), 0.5).unwrap();
        assert!(matches!(eval_cost(&p, 0, &[-1.0]), Err(CostError::BadWeight(0))));
        assert!(matches!(eval_cost(&p, 3, &[1.0]), Err(CostError::IndexOutOfRange(3))));
        assert!(matches!(eval_cost(&p, 0, &[1.0, 2.0]), Err(CostError::LengthMismatch { .. })));
        assert!(CostModel::power(&m1(&[-1.0], &[1.0]), &m1(&[0.25], &[1.0]), 0.5).is_err());
    }
}
