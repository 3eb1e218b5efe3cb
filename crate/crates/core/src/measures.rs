//! Discrete measures and the geometry of their supports.

use crate::optim::{min_norm_point, Bound, LinearProgram, RowKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("{atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("atom {0} has a negative weight")]
    NegativeWeight(usize),
    #[error("non-finite coordinate or weight at atom {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("atoms {0} and {1} coincide")]
    DuplicateAtom(usize, usize),
}

/// Weighted atoms in `R^d`. Zero weights are kept: they mark support points that carry no
/// mass under this measure but may still receive singular mass in a coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        if atoms.len() != weights.len() {
            return Err(MeasureError::LengthMismatch { atoms: atoms.len(), weights: weights.len() });
        }
        let d = atoms[0].len();
        if d == 0 {
            return Err(MeasureError::DimensionMismatch { expected: 1, got: 0 });
        }
        for (i, (a, w)) in atoms.iter().zip(&weights).enumerate() {
            if a.len() != d {
                return Err(MeasureError::DimensionMismatch { expected: d, got: a.len() });
            }
            if !w.is_finite() || a.iter().any(|c| !c.is_finite()) {
                return Err(MeasureError::NonFinite(i));
            }
            if *w < 0.0 {
                return Err(MeasureError::NegativeWeight(i));
            }
        }
        // sort-based duplicate detection keeps this O(n log n)
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&a, &b| {
            atoms[a]
                .iter()
                .zip(&atoms[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if atoms[w[0]] == atoms[w[1]] {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(MeasureError::DuplicateAtom(a, b));
            }
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(point: Point) -> Result<Self, MeasureError> {
        Self::new(vec![point], vec![1.0])
    }

    pub fn uniform(atoms: Vec<Point>) -> Result<Self, MeasureError> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let n = atoms.len();
        Self::new(atoms, vec![w; n])
    }

    /// Uniform weights on the midpoints `(k + ½)/n` of `[0, 1]`.
    pub fn midpoint_grid(n: usize) -> Self {
        let atoms = (0..n).map(|k| vec![(k as f64 + 0.5) / n as f64]).collect();
        Self::uniform(atoms).expect("grid atoms are distinct")
    }

    pub fn from_1d(atoms: &[f64], weights: &[f64]) -> Result<Self, MeasureError> {
        Self::new(atoms.iter().map(|a| vec![*a]).collect(), weights.to_vec())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (self.mass() - 1.0).abs() <= tol
    }

    /// Indices of atoms with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Same atoms with new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self, MeasureError> {
        Self::new(self.atoms.clone(), weights)
    }

    /// Largest Euclidean norm among atoms.
    pub fn max_norm(&self) -> f64 {
        self.atoms.iter().map(|a| norm(a)).fold(0.0, f64::max)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The cone `Z` generated by a finite set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeModel {
    generators: Vec<Point>,
    dim: usize,
}

impl ConeModel {
    pub fn new(generators: Vec<Point>) -> Result<Self, MeasureError> {
        let dim = generators.first().ok_or(MeasureError::Empty)?.len();
        if let Some(g) = generators.iter().find(|g| g.len() != dim) {
            return Err(MeasureError::DimensionMismatch { expected: dim, got: g.len() });
        }
        Ok(Self { generators, dim })
    }

    /// Cone over the positive-weight atoms of `m`.
    pub fn from_support(m: &DiscreteMeasure) -> Self {
        let gens = m.support().into_iter().map(|j| m.atom(j).to_vec()).collect();
        Self { generators: gens, dim: m.dim() }
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `1e-9 · (1 + max generator norm)`.
    pub fn default_tol(&self) -> f64 {
        1e-9 * (1.0 + self.generators.iter().map(|g| norm(g)).fold(0.0, f64::max))
    }

    /// Euclidean distance from the origin to `co(generators)`.
    pub fn hull_distance(&self) -> f64 {
        norm(&min_norm_point(&self.generators, 1e-15).point)
    }
}

/// `ℓ¹` distance from `z` to the cone, by LP.
fn cone_residual(cone: &ConeModel, z: &[f64], simplex: bool) -> f64 {
    let m = cone.generators.len();
    let d = cone.dim;
    // variables: w (m), then e⁺, e⁻ (d each)
    let mut lp = LinearProgram::new(m + 2 * d);
    for t in 0..d {
        lp.objective[m + t] = 1.0;
        lp.objective[m + d + t] = 1.0;
        let mut terms: Vec<(usize, f64)> = (0..m).map(|j| (j, cone.generators[j][t])).collect();
        terms.push((m + t, 1.0));
        terms.push((m + d + t, -1.0));
        lp.add_sparse_row(&terms, RowKind::Eq, z[t]);
    }
    if simplex {
        let terms: Vec<(usize, f64)> = (0..m).map(|j| (j, 1.0)).collect();
        lp.add_sparse_row(&terms, RowKind::Eq, 1.0);
    }
    debug_assert!(lp.bounds.iter().all(|b| *b == Bound::NonNegative));
    let sol = lp.solve();
    if sol.is_optimal() {
        sol.objective
    } else {
        f64::INFINITY
    }
}

/// Whether `z = Σⱼ wⱼ yⱼ` for some `w ≥ 0`, up to `tol` in `ℓ¹`.
pub fn cone_contains(cone: &ConeModel, z: &[f64], tol: f64) -> Result<bool, MeasureError> {
    if z.len() != cone.dim {
        return Err(MeasureError::DimensionMismatch { expected: cone.dim, got: z.len() });
    }
    Ok(cone_residual(cone, z, false) <= tol)
}

/// Whether the origin lies in `co(generators)` up to `tol`.
pub fn zero_in_convex_hull(cone: &ConeModel, tol: f64) -> bool {
    let origin = vec![0.0; cone.dim];
    cone_residual(cone, &origin, true) <= tol
}

#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mass: f64,
    /// `∫ x dm / mass`.
    pub mean: Point,
    /// `∫ [x]₊ dm` per coordinate.
    pub positive: Point,
    /// `∫ [x]₋ dm` per coordinate.
    pub negative: Point,
}

impl Moments {
    /// Unnormalized first moment `∫ x dm`.
    pub fn first(&self) -> Point {
        self.mean.iter().map(|v| v * self.mass).collect()
    }
}

pub fn moments(m: &DiscreteMeasure) -> Moments {
    let d = m.dim();
    let mass = m.mass();
    let mut first = vec![0.0; d];
    let mut positive = vec![0.0; d];
    let mut negative = vec![0.0; d];
    for (a, &w) in m.atoms().iter().zip(m.weights()) {
        for t in 0..d {
            first[t] += w * a[t];
            positive[t] += w * a[t].max(0.0);
            negative[t] += w * (-a[t]).max(0.0);
        }
    }
    let mean = first.iter().map(|v| if mass > 0.0 { v / mass } else { 0.0 }).collect();
    Moments { mass, mean, positive, negative }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(g: &[&[f64]]) -> ConeModel {
        ConeModel::new(g.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn cone_membership() {
        let c = cone(&[&[2.0, 0.0], &[0.0, 2.0]]);
        assert!(cone_contains(&c, &[1.0, 1.0], 1e-9).unwrap());
        assert!(!cone_contains(&c, &[-1.0, 0.0], 1e-9).unwrap());
        let line = cone(&[&[1.0], &[2.0]]);
        assert!(cone_contains(&line, &[0.0], 1e-9).unwrap());
        assert!(cone_contains(&c, &[1.0], 1e-9).is_err());
    }

    #[test]
    fn origin_in_hull() {
        assert!(!zero_in_convex_hull(&cone(&[&[1.0], &[2.0]]), 1e-9));
        assert!(zero_in_convex_hull(&cone(&[&[-1.0, 0.0], &[1.0, 0.0]]), 1e-9));
        assert!(!zero_in_convex_hull(&cone(&[&[2.0, 0.0], &[0.0, 2.0]]), 1e-9));
    }

    #[test]
    fn hull_distance_of_quadrant_pair() {
        // segment from (2,0) to (0,2) is at distance √2
        let c = cone(&[&[2.0, 0.0], &[0.0, 2.0]]);
        assert!((c.hull_distance() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let m = moments(&DiscreteMeasure::dirac(vec![2.0]).unwrap());
        assert_eq!((m.mass, m.mean[0], m.positive[0], m.negative[0]), (1.0, 2.0, 2.0, 0.0));
        let u = moments(&DiscreteMeasure::uniform(vec![vec![0.25], vec![0.75]]).unwrap());
        assert_eq!(u.mean[0], 0.5);
        let s = moments(&DiscreteMeasure::from_1d(&[-1.0, 3.0], &[0.5, 0.5]).unwrap());
        assert_eq!((s.mean[0], s.positive[0], s.negative[0]), (1.0, 1.5, 0.5));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(DiscreteMeasure::new(vec![], vec![]), Err(MeasureError::Empty));
        assert_eq!(
            DiscreteMeasure::from_1d(&[1.0, 1.0], &[0.5, 0.5]),
            Err(MeasureError::DuplicateAtom(0, 1))
        );
        assert_eq!(DiscreteMeasure::from_1d(&[1.0], &[-1.0]), Err(MeasureError::NegativeWeight(0)));
        assert!(DiscreteMeasure::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_weights_are_kept() {
        let m = DiscreteMeasure::from_1d(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.support(), vec![0]);
    }
}
