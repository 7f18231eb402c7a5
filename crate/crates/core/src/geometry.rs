//! Geometry of the product manifold `M = S^d x ... x S^d` (n factors).
//!
//! Points and tangent vectors are stored as dense row-major `n x (d+1)`
//! buffers; row `i` is the ambient representation of factor `i`. Every
//! operation here is closed form on spheres.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `| |x_i| - 1 |` accepted when constructing a point.
pub const UNIT_TOL: f64 = 1e-10;
/// Tolerance on `<v_i, x_i>` accepted when constructing a tangent vector.
pub const TANGENT_TOL: f64 = 1e-10;
/// Inner products at or below `-1 + CUT_LOCUS_TOL` are treated as antipodal.
pub const CUT_LOCUS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid manifold shape n={n}, d={d} (need n >= 1, d >= 1)")]
    InvalidShape { n: usize, d: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("buffer of length {len} does not fit shape n={n}, d={d}")]
    BufferLength { len: usize, n: usize, d: usize },
    #[error("factor {factor} has norm {norm}, expected 1")]
    NotUnit { factor: usize, norm: f64 },
    #[error("factor {factor} is not tangent: <v, x> = {inner}")]
    NotTangent { factor: usize, inner: f64 },
    #[error("factor {factor} is antipodal to the base point (cut locus)")]
    CutLocus { factor: usize },
    #[error("step length must be non-negative and finite, got {0}")]
    InvalidTime(f64),
}

/// Number of spheres `n` and sphere dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldShape {
    n: usize,
    d: usize,
}

impl ManifoldShape {
    pub fn new(n: usize, d: usize) -> Result<Self, GeometryError> {
        if n == 0 || d == 0 {
            return Err(GeometryError::InvalidShape { n, d });
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Ambient dimension of a single factor, `d + 1`.
    pub fn ambient(&self) -> usize {
        self.d + 1
    }

    /// Length of the flat row-major buffer, `n * (d + 1)`.
    pub fn len(&self) -> usize {
        self.n * (self.d + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_buffer(&self, len: usize) -> Result<(), GeometryError> {
        if len != self.len() {
            return Err(GeometryError::BufferLength {
                len,
                n: self.n,
                d: self.d,
            });
        }
        Ok(())
    }

    fn check_same(&self, other: &ManifoldShape) -> Result<(), GeometryError> {
        if self != other {
            return Err(GeometryError::ShapeMismatch {
                expected: (self.n, self.d),
                found: (other.n, other.d),
            });
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A configuration `x = (x_1, ..., x_n)` with every factor on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOnM {
    shape: ManifoldShape,
    data: Vec<f64>,
}

impl PointOnM {
    /// Builds a point from a flat row-major buffer, checking unit norms.
    pub fn new(shape: ManifoldShape, data: Vec<f64>) -> Result<Self, GeometryError> {
        shape.check_buffer(data.len())?;
        let point = Self { shape, data };
        for (i, row) in point.factors().enumerate() {
            let nrm = norm(row);
            if !nrm.is_finite() || (nrm - 1.0).abs() > UNIT_TOL {
                return Err(GeometryError::NotUnit {
                    factor: i,
                    norm: nrm,
                });
            }
        }
        Ok(point)
    }

    /// Builds a point from rows, checking unit norms.
    pub fn from_factors(factors: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let n = factors.len();
        let ambient = factors.first().map_or(0, Vec::len);
        let shape = ManifoldShape::new(n, ambient.saturating_sub(1))?;
        let mut data = Vec::with_capacity(shape.len());
        for row in factors {
            if row.len() != ambient {
                return Err(GeometryError::BufferLength {
                    len: row.len(),
                    n,
                    d: shape.d,
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(shape, data)
    }

    /// Normalizes every row of `data` onto the sphere. Zero rows are rejected.
    pub fn normalized(shape: ManifoldShape, mut data: Vec<f64>) -> Result<Self, GeometryError> {
        shape.check_buffer(data.len())?;
        for (i, row) in data.chunks_mut(shape.ambient()).enumerate() {
            let nrm = norm(row);
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(GeometryError::NotUnit {
                    factor: i,
                    norm: nrm,
                });
            }
            row.iter_mut().for_each(|c| *c /= nrm);
        }
        Ok(Self { shape, data })
    }

    /// Every factor set to the first basis vector `e_0`.
    pub fn north(shape: ManifoldShape) -> Self {
        let mut data = vec![0.0; shape.len()];
        for row in data.chunks_mut(shape.ambient()) {
            row[0] = 1.0;
        }
        Self { shape, data }
    }

    pub(crate) fn from_raw(shape: ManifoldShape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> ManifoldShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn factor(&self, i: usize) -> &[f64] {
        let a = self.shape.ambient();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn factors(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.shape.ambient())
    }

    /// Largest deviation `| |x_i| - 1 |` over all factors.
    pub fn max_norm_error(&self) -> f64 {
        self.factors()
            .map(|row| (norm(row) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Rescales every factor to exact unit norm and returns the largest
    /// correction that was applied.
    pub fn renormalize(&mut self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in self.data.chunks_mut(self.shape.ambient()) {
            let nrm = norm(row);
            worst = worst.max((nrm - 1.0).abs());
            row.iter_mut().for_each(|c| *c /= nrm);
        }
        worst
    }

    /// Applies a common linear map `y_i = x_i R` (row vector times matrix) to
    /// every factor. `r` is row-major `(d+1) x (d+1)`.
    pub fn right_multiply(&self, r: &[f64]) -> Vec<f64> {
        let a = self.shape.ambient();
        assert_eq!(r.len(), a * a);
        let mut out = vec![0.0; self.data.len()];
        for (row, dst) in self.factors().zip(out.chunks_mut(a)) {
            for (k, &xk) in row.iter().enumerate() {
                for (j, dj) in dst.iter_mut().enumerate() {
                    *dj += xk * r[k * a + j];
                }
            }
        }
        out
    }
}

/// A tangent vector `v` at `base`, one ambient vector per factor with
/// `<v_i, x_i> = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    base: PointOnM,
    data: Vec<f64>,
}

impl TangentVector {
    /// Checks tangency factor by factor.
    pub fn new(base: PointOnM, data: Vec<f64>) -> Result<Self, GeometryError> {
        base.shape.check_buffer(data.len())?;
        let a = base.shape.ambient();
        for (i, (v, x)) in data.chunks(a).zip(base.factors()).enumerate() {
            let inner = dot(v, x);
            let scale = norm(v).max(1.0);
            if !inner.is_finite() || inner.abs() > TANGENT_TOL * scale {
                return Err(GeometryError::NotTangent { factor: i, inner });
            }
        }
        Ok(Self { base, data })
    }

    pub fn zero(base: &PointOnM) -> Self {
        Self {
            data: vec![0.0; base.data.len()],
            base: base.clone(),
        }
    }

    pub fn base(&self) -> &PointOnM {
        &self.base
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn factor(&self, i: usize) -> &[f64] {
        let a = self.base.shape.ambient();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn factors(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.base.shape.ambient())
    }

    /// Product-metric inner product `sum_i <u_i, v_i>`.
    pub fn inner(&self, other: &TangentVector) -> Result<f64, GeometryError> {
        self.base.shape.check_same(&other.base.shape)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            data: self.data.iter().map(|c| c * s).collect(),
        }
    }
}

fn exp_factor(x: &[f64], v: &[f64], t: f64, out: &mut [f64]) {
    let speed = norm(v);
    let angle = t * speed;
    if speed == 0.0 || angle == 0.0 {
        out.copy_from_slice(x);
        return;
    }
    let (s, c) = angle.sin_cos();
    for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
        *o = xi * c + (vi / speed) * s;
    }
}

/// `exp(x, t v)`, factor by factor: `x_i cos(t|v_i|) + (v_i/|v_i|) sin(t|v_i|)`.
pub fn exp_map(x: &PointOnM, v: &TangentVector, t: f64) -> Result<PointOnM, GeometryError> {
    x.shape.check_same(&v.base.shape)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(GeometryError::InvalidTime(t));
    }
    let a = x.shape.ambient();
    let mut out = vec![0.0; x.data.len()];
    for ((xi, vi), oi) in x.factors().zip(v.factors()).zip(out.chunks_mut(a)) {
        exp_factor(xi, vi, t, oi);
    }
    Ok(PointOnM::from_raw(x.shape, out))
}

/// Inverse of [`exp_map`] at `x`. Errors if any factor pair is antipodal.
pub fn log_map(x: &PointOnM, y: &PointOnM) -> Result<TangentVector, GeometryError> {
    x.shape.check_same(&y.shape)?;
    let a = x.shape.ambient();
    let mut out = vec![0.0; x.data.len()];
    for (i, ((xi, yi), oi)) in x
        .factors()
        .zip(y.factors())
        .zip(out.chunks_mut(a))
        .enumerate()
    {
        let c = dot(xi, yi).clamp(-1.0, 1.0);
        if c <= -1.0 + CUT_LOCUS_TOL {
            return Err(GeometryError::CutLocus { factor: i });
        }
        // Component of y orthogonal to x, whose norm is sin(angle).
        for ((o, &xv), &yv) in oi.iter_mut().zip(xi).zip(yi) {
            *o = yv - c * xv;
        }
        let s = norm(oi);
        if s == 0.0 {
            oi.iter_mut().for_each(|o| *o = 0.0);
            continue;
        }
        // atan2 is accurate at both small and moderate angles.
        let angle = s.atan2(c);
        oi.iter_mut().for_each(|o| *o *= angle / s);
    }
    Ok(TangentVector {
        base: x.clone(),
        data: out,
    })
}

/// Product-metric geodesic distance `sqrt(sum_i arccos^2 <x_i, y_i>)`.
pub fn geodesic_distance(x: &PointOnM, y: &PointOnM) -> Result<f64, GeometryError> {
    x.shape.check_same(&y.shape)?;
    Ok(x.factors()
        .zip(y.factors())
        .map(|(xi, yi)| {
            let r = factor_angle(xi, yi);
            r * r
        })
        .sum::<f64>()
        .sqrt())
}

/// Angle between two unit vectors. Uses `atan2(|x ^ y|, <x, y>)` so that
/// nearby points keep full relative precision.
pub fn factor_angle(x: &[f64], y: &[f64]) -> f64 {
    let c = dot(x, y);
    let s2: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - c * xi;
            r * r
        })
        .sum();
    let angle = s2.sqrt().atan2(c);
    // Fall back to the clamped arccos when the inputs drifted off the sphere.
    if angle.is_finite() {
        angle
    } else {
        c.clamp(-1.0, 1.0).acos()
    }
}

/// Orthogonal projection of ambient vectors onto the tangent space at `x`:
/// `w_i - <w_i, x_i> x_i`.
pub fn project_to_tangent(x: &PointOnM, w: &[f64]) -> Result<TangentVector, GeometryError> {
    x.shape.check_buffer(w.len())?;
    let a = x.shape.ambient();
    let mut out = w.to_vec();
    for (oi, xi) in out.chunks_mut(a).zip(x.factors()) {
        let c = dot(oi, xi);
        for (o, &xv) in oi.iter_mut().zip(xi) {
            *o -= c * xv;
        }
        // A second pass removes the residual left by cancellation.
        let c2 = dot(oi, xi);
        for (o, &xv) in oi.iter_mut().zip(xi) {
            *o -= c2 * xv;
        }
    }
    Ok(TangentVector {
        base: x.clone(),
        data: out,
    })
}

/// Uniform draw on the unit sphere in `R^dim` (normalized standard Gaussian).
pub fn uniform_on_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = norm(&v);
        if nrm > 1e-300 {
            return v.into_iter().map(|c| c / nrm).collect();
        }
    }
}

/// Independent uniform factors: a draw from the uniform law on `M`.
pub fn random_point<R: Rng + ?Sized>(shape: ManifoldShape, rng: &mut R) -> PointOnM {
    let mut data = Vec::with_capacity(shape.len());
    for _ in 0..shape.n {
        data.extend(uniform_on_sphere(shape.ambient(), rng));
    }
    PointOnM::from_raw(shape, data)
}

/// A random tangent vector at `x` with i.i.d. `N(0, scale^2)` ambient
/// coordinates projected onto the tangent space.
pub fn random_tangent<R: Rng + ?Sized>(x: &PointOnM, scale: f64, rng: &mut R) -> TangentVector {
    let w: Vec<f64> = (0..x.shape.len())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    project_to_tangent(x, &w).expect("buffer sized from shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn single(v: &[f64]) -> PointOnM {
        PointOnM::from_factors(&[v.to_vec()]).unwrap()
    }

    fn tangent(x: &PointOnM, v: &[f64]) -> TangentVector {
        TangentVector::new(x.clone(), v.to_vec()).unwrap()
    }

    #[test]
    fn shape_rejects_zero() {
        assert!(ManifoldShape::new(0, 2).is_err());
        assert!(ManifoldShape::new(2, 0).is_err());
    }

    #[test]
    fn point_rejects_non_unit() {
        let shape = ManifoldShape::new(1, 2).unwrap();
        assert!(matches!(
            PointOnM::new(shape, vec![1.0, 1.0, 0.0]),
            Err(GeometryError::NotUnit { factor: 0, .. })
        ));
    }

    #[test]
    fn exp_quarter_circle_and_antipode() {
        let x = single(&[1.0, 0.0, 0.0]);
        let v = tangent(&x, &[0.0, 1.0, 0.0]);
        let y = exp_map(&x, &v, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(y.as_slice(), &[0.0, 1.0, 0.0][..], epsilon = 1e-15);
        let y = exp_map(&x, &v, PI).unwrap();
        assert_abs_diff_eq!(y.as_slice(), &[-1.0, 0.0, 0.0][..], epsilon = 1e-15);
        let y = exp_map(&x, &v, 0.0).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn exp_zero_factor_unchanged() {
        let x = PointOnM::from_factors(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let v = tangent(&x, &[0.0, 0.3, 0.0, 0.0, 0.0, 0.0]);
        let y = exp_map(&x, &v, 2.0).unwrap();
        assert_eq!(y.factor(1), x.factor(1));
    }

    #[test]
    fn exp_rejects_negative_time_and_mismatch() {
        let x = single(&[1.0, 0.0, 0.0]);
        let v = TangentVector::zero(&x);
        assert!(exp_map(&x, &v, -1.0).is_err());
        let x2 = PointOnM::north(ManifoldShape::new(2, 2).unwrap());
        assert!(matches!(
            exp_map(&x2, &v, 1.0),
            Err(GeometryError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn log_examples() {
        let x = single(&[1.0, 0.0, 0.0]);
        let v = log_map(&x, &x).unwrap();
        assert!(v.as_slice().iter().all(|&c| c == 0.0));
        let y = single(&[0.0, 1.0, 0.0]);
        let v = log_map(&x, &y).unwrap();
        assert_abs_diff_eq!(v.as_slice(), &[0.0, FRAC_PI_2, 0.0][..], epsilon = 1e-15);
    }

    #[test]
    fn log_antipodal_errors() {
        let x = single(&[1.0, 0.0, 0.0]);
        let y = single(&[-1.0, 0.0, 0.0]);
        assert_eq!(
            log_map(&x, &y).unwrap_err(),
            GeometryError::CutLocus { factor: 0 }
        );
    }

    #[test]
    fn log_inverts_small_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = ManifoldShape::new(4, 3).unwrap();
        for _ in 0..200 {
            let x = random_point(shape, &mut rng);
            let v = random_tangent(&x, 0.3, &mut rng);
            let y = exp_map(&x, &v, 1.0).unwrap();
            let back = log_map(&x, &y).unwrap();
            for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let x = single(&[1.0, 0.0, 0.0]);
        assert_eq!(geodesic_distance(&x, &x).unwrap(), 0.0);
        let y = single(&[-1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(geodesic_distance(&x, &y).unwrap(), PI, epsilon = 1e-15);
        let a = PointOnM::from_factors(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let b = PointOnM::from_factors(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(
            geodesic_distance(&a, &b).unwrap(),
            2f64.sqrt() * FRAC_PI_2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn projection_examples() {
        let x = single(&[1.0, 0.0, 0.0]);
        let p = project_to_tangent(&x, &[1.0, 0.0, 0.0]).unwrap();
        assert!(p.as_slice().iter().all(|&c| c == 0.0));
        let p = project_to_tangent(&x, &[2.0, 3.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 3.0, 0.0]);
        let p = project_to_tangent(&x, &[0.0, -1.5, 4.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, -1.5, 4.0]);
        assert!(project_to_tangent(&x, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn random_point_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = ManifoldShape::new(1, 3).unwrap();
        let draws = 100_000;
        let mut mean = [0.0; 4];
        let mut sq = Vec::with_capacity(draws);
        for _ in 0..draws {
            let x = random_point(shape, &mut rng);
            assert!(x.max_norm_error() < UNIT_TOL);
            for (m, c) in mean.iter_mut().zip(x.as_slice()) {
                *m += c;
            }
            sq.push(x.as_slice()[0].powi(2));
        }
        // Each coordinate has variance 1/(d+1) = 1/4 under the uniform law.
        let se = (0.25 / draws as f64).sqrt();
        for m in mean {
            assert!((m / draws as f64).abs() < 3.0 * se);
        }
        let sq_mean = sq.iter().sum::<f64>() / draws as f64;
        let sq_var = sq.iter().map(|s| (s - sq_mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let sq_se = (sq_var / draws as f64).sqrt();
        assert!((sq_mean - 0.25).abs() < 3.0 * sq_se);
    }
}
