//! Objectives on the product of spheres and the Burer-Monteiro loss
//! `F(x) = -<x, A x>` for a symmetric cost matrix `A`.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

use crate::geometry::{
    dot, project_to_tangent, GeometryError, ManifoldShape, PointOnM, TangentVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("matrix size must be positive")]
    EmptyMatrix,
    #[error("entry ({i}, {j}) out of range for n = {n}")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("duplicate entry ({i}, {j})")]
    Duplicate { i: usize, j: usize },
    #[error("non-finite weight at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("matrix has n = {matrix}, point has n = {point}")]
    SizeMismatch { matrix: usize, point: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Sparse symmetric `n x n` matrix stored as its upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCostMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    /// Both orientations of every entry, grouped by row.
    #[serde(skip)]
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymmetricCostMatrix {
    /// Entries may be given in either orientation; each unordered pair may
    /// appear once.
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, ObjectiveError> {
        if n == 0 {
            return Err(ObjectiveError::EmptyMatrix);
        }
        let mut seen = HashSet::new();
        let mut upper = Vec::new();
        let mut rows = vec![Vec::new(); n];
        for (i, j, w) in entries {
            if i >= n || j >= n {
                return Err(ObjectiveError::OutOfRange { i, j, n });
            }
            if !w.is_finite() {
                return Err(ObjectiveError::NonFinite { i, j });
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            if !seen.insert((i, j)) {
                return Err(ObjectiveError::Duplicate { i, j });
            }
            upper.push((i, j, w));
            rows[i].push((j, w));
            if i != j {
                rows[j].push((i, w));
            }
        }
        Ok(Self {
            n,
            entries: upper,
            rows,
        })
    }

    pub fn zeros(n: usize) -> Result<Self, ObjectiveError> {
        Self::from_entries(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Upper-triangle entries `(i, j, w)` with `i <= j`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `-A`, used to switch between adjacency and cost conventions.
    pub fn negated(&self) -> Self {
        Self::from_entries(self.n, self.entries.iter().map(|&(i, j, w)| (i, j, -w)))
            .expect("negation keeps entries valid")
    }

    /// Upper bound on the operator norm: the largest absolute row sum.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, w)| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn check(&self, x: &PointOnM) -> Result<(), ObjectiveError> {
        if x.shape().n() != self.n {
            return Err(ObjectiveError::SizeMismatch {
                matrix: self.n,
                point: x.shape().n(),
            });
        }
        Ok(())
    }

    /// Row-major `A x` where `x` is viewed as an `n x (d+1)` matrix.
    pub fn apply(&self, x: &PointOnM) -> Result<Vec<f64>, ObjectiveError> {
        self.check(x)?;
        let a = x.shape().ambient();
        let mut out = vec![0.0; x.as_slice().len()];
        for (row, dst) in self.rows.iter().zip(out.chunks_mut(a)) {
            for &(j, w) in row {
                for (o, xj) in dst.iter_mut().zip(x.factor(j)) {
                    *o += w * xj;
                }
            }
        }
        Ok(out)
    }

    /// `<x, A x> = sum_{ij} A_ij <x_i, x_j>`.
    pub fn quadratic_form(&self, x: &PointOnM) -> Result<f64, ObjectiveError> {
        self.check(x)?;
        Ok(self
            .entries
            .iter()
            .map(|&(i, j, w)| {
                let c = dot(x.factor(i), x.factor(j));
                if i == j {
                    w * c
                } else {
                    2.0 * w * c
                }
            })
            .sum())
    }
}

/// A smooth function on the product manifold with its Riemannian gradient.
pub trait Objective: Sync {
    fn value(&self, x: &PointOnM) -> Result<f64, ObjectiveError>;

    fn riemannian_grad(&self, x: &PointOnM) -> Result<TangentVector, ObjectiveError>;

    /// Value and gradient together; override when they share work.
    fn value_and_grad(&self, x: &PointOnM) -> Result<(f64, TangentVector), ObjectiveError> {
        Ok((self.value(x)?, self.riemannian_grad(x)?))
    }
}

/// `F(x) = -<x, A x>`.
pub fn bm_value(a: &SymmetricCostMatrix, x: &PointOnM) -> Result<f64, ObjectiveError> {
    Ok(-a.quadratic_form(x)?)
}

/// Tangent projection of the ambient gradient `-2 A x`.
pub fn bm_riemannian_grad(
    a: &SymmetricCostMatrix,
    x: &PointOnM,
) -> Result<TangentVector, ObjectiveError> {
    let ax = a.apply(x)?;
    let ambient: Vec<f64> = ax.iter().map(|v| -2.0 * v).collect();
    Ok(project_to_tangent(x, &ambient)?)
}

/// The Burer-Monteiro objective. Values are reported without the unknown
/// offset `max_y <y, A y>`; `offset_bound` is an upper bound on it used only
/// for normalizing suboptimality targets.
#[derive(Debug, Clone)]
pub struct BurerMonteiro {
    a: SymmetricCostMatrix,
    offset_bound: f64,
}

impl BurerMonteiro {
    /// Uses the default offset bound `n * sigma_max(A)`.
    pub fn new(a: SymmetricCostMatrix) -> Self {
        let offset_bound = a.n() as f64 * a.max_abs_row_sum();
        Self { a, offset_bound }
    }

    pub fn with_offset_bound(a: SymmetricCostMatrix, offset_bound: f64) -> Self {
        Self { a, offset_bound }
    }

    pub fn matrix(&self) -> &SymmetricCostMatrix {
        &self.a
    }

    pub fn offset_bound(&self) -> f64 {
        self.offset_bound
    }
}

impl Objective for BurerMonteiro {
    fn value(&self, x: &PointOnM) -> Result<f64, ObjectiveError> {
        bm_value(&self.a, x)
    }

    fn riemannian_grad(&self, x: &PointOnM) -> Result<TangentVector, ObjectiveError> {
        bm_riemannian_grad(&self.a, x)
    }

    fn value_and_grad(&self, x: &PointOnM) -> Result<(f64, TangentVector), ObjectiveError> {
        let ax = self.a.apply(x)?;
        // <x, Ax> = sum_i <x_i, (Ax)_i>
        let value = -dot(x.as_slice(), &ax);
        let ambient: Vec<f64> = ax.iter().map(|v| -2.0 * v).collect();
        Ok((value, project_to_tangent(x, &ambient)?))
    }
}

/// Conservative Lipschitz constants of `F`, its gradient and its Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimates {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Operator-norm bound used for all three.
    pub sigma_max: f64,
}

pub fn lipschitz_estimates(a: &SymmetricCostMatrix, shape: ManifoldShape) -> LipschitzEstimates {
    let sigma = a.max_abs_row_sum();
    let n = shape.n() as f64;
    LipschitzEstimates {
        k1: (2.0 * sigma * n.sqrt()).max(1.0),
        k2: (4.0 * sigma).max(1.0),
        k3: (6.0 * sigma).max(1.0),
        sigma_max: sigma,
    }
}
