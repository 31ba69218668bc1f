//! Local and global phase spaces of (strain, stress) pairs and the metrics
//! that make closest-point projections well defined.
//!
//! Each element carries a symmetric positive-definite modulus `C`; the local
//! squared norm of `z = (eps, sig)` is `C eps . eps + C^-1 sig . sig`, and the
//! global squared norm is the volume-weighted sum over elements.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-10;

/// One element's (strain, stress) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPhasePoint {
    pub strain: Vec<f64>,
    pub stress: Vec<f64>,
}

impl LocalPhasePoint {
    pub fn new(strain: Vec<f64>, stress: Vec<f64>) -> Result<Self> {
        if strain.len() != stress.len() || strain.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "strain has {} components, stress has {}",
                strain.len(),
                stress.len()
            )));
        }
        if strain.iter().chain(&stress).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase point".into()));
        }
        Ok(Self { strain, stress })
    }

    /// Uniaxial point, the only kind a truss bar carries.
    pub fn scalar(strain: f64, stress: f64) -> Self {
        Self {
            strain: vec![strain],
            stress: vec![stress],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            strain: vec![0.0; dim],
            stress: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.strain.len()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {}-dimensional point from {}-dimensional point",
                other.dim(),
                self.dim()
            )));
        }
        Ok(Self {
            strain: self
                .strain
                .iter()
                .zip(&other.strain)
                .map(|(a, b)| a - b)
                .collect(),
            stress: self
                .stress
                .iter()
                .zip(&other.stress)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// Symmetric positive-definite modulus metrizing one local phase space.
///
/// The Cholesky factor `C = L L^T` is cached so that points can be mapped
/// into coordinates where the local norm is Euclidean: `(L^T eps, L^-1 sig)`.
#[derive(Clone, Debug)]
pub struct LocalMetric {
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    lower_t: DMatrix<f64>,
    lower_inv: DMatrix<f64>,
}

impl LocalMetric {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        let n = c.nrows();
        if n == 0 || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "metric must be square and nonempty, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metric".into()));
        }
        let scale = c.amax().max(f64::MIN_POSITIVE);
        if (&c - c.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        let chol = c
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let lower = chol.l();
        if lower.diagonal().iter().any(|d| *d <= 0.0) {
            return Err(Error::NotPositiveDefinite("nonpositive pivot".into()));
        }
        let c_inv = chol.inverse();
        let residual = (&c * &c_inv - DMatrix::identity(n, n)).amax();
        if residual > INVERSE_TOL * (1.0 + c.amax() * c_inv.amax()) {
            return Err(Error::NotPositiveDefinite(format!(
                "ill-conditioned metric, C C^-1 deviates from identity by {residual:e}"
            )));
        }
        let lower_inv = lower
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
        Ok(Self {
            c,
            c_inv,
            lower_t: lower.transpose(),
            lower_inv,
        })
    }

    pub fn scalar(modulus: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, modulus))
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.c_inv
    }

    /// The modulus when the metric is 1x1.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.dim() == 1).then(|| self.c[(0, 0)])
    }

    /// Writes the Euclidean-equivalent coordinates of `(strain, stress)` into
    /// `out`, which must hold `2 * dim` values.
    pub fn lift(&self, strain: &[f64], stress: &[f64], out: &mut [f64]) {
        let m = self.dim();
        if m == 1 {
            let root = self.lower_t[(0, 0)];
            out[0] = root * strain[0];
            out[1] = stress[0] / root;
            return;
        }
        for i in 0..m {
            let mut e = 0.0;
            let mut s = 0.0;
            for j in 0..m {
                e += self.lower_t[(i, j)] * strain[j];
                s += self.lower_inv[(i, j)] * stress[j];
            }
            out[i] = e;
            out[m + i] = s;
        }
    }

    /// Stress-like action `C v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.c * DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect()
    }
}

/// Squared local norm `C eps . eps + C^-1 sig . sig`.
pub fn local_norm_sq(z: &LocalPhasePoint, metric: &LocalMetric) -> Result<f64> {
    let m = metric.dim();
    if z.strain.len() != m || z.stress.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "point of dimension {} against metric of dimension {m}",
            z.dim()
        )));
    }
    if let Some(c) = metric.as_scalar() {
        let (e, s) = (z.strain[0], z.stress[0]);
        return Ok(c * e * e + s * s / c);
    }
    let eps = DVector::from_column_slice(&z.strain);
    let sig = DVector::from_column_slice(&z.stress);
    Ok(eps.dot(&(metric.matrix() * &eps)) + sig.dot(&(metric.inverse() * &sig)))
}

/// Element volumes and local metrics for a whole mesh.
#[derive(Clone, Debug)]
pub struct GlobalMetric {
    locals: Vec<LocalMetric>,
    weights: Vec<f64>,
}

impl GlobalMetric {
    pub fn new(locals: Vec<LocalMetric>, weights: Vec<f64>) -> Result<Self> {
        if locals.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} local metrics but {} weights",
                locals.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "element weight must be positive, got {w}"
            )));
        }
        Ok(Self { locals, weights })
    }

    /// Same scalar modulus on every element.
    pub fn uniform_scalar(modulus: f64, weights: Vec<f64>) -> Result<Self> {
        let local = LocalMetric::scalar(modulus)?;
        Self::new(vec![local; weights.len()], weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn local(&self, e: usize) -> &LocalMetric {
        &self.locals[e]
    }

    pub fn locals(&self) -> &[LocalMetric] {
        &self.locals
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A point of the global phase space, one local point per element.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalState {
    pub points: Vec<LocalPhasePoint>,
}

impl GlobalState {
    pub fn new(points: Vec<LocalPhasePoint>) -> Self {
        Self { points }
    }

    pub fn zeros(elements: usize, dim: usize) -> Self {
        Self {
            points: vec![LocalPhasePoint::zero(dim); elements],
        }
    }

    pub fn from_scalars(strains: &[f64], stresses: &[f64]) -> Self {
        Self {
            points: strains
                .iter()
                .zip(stresses)
                .map(|(e, s)| LocalPhasePoint::scalar(*e, *s))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// First strain component of every element.
    pub fn strains(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.strain[0]).collect()
    }

    pub fn stresses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stress[0]).collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "states have {} and {} elements",
                self.len(),
                other.len()
            )));
        }
        let points = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points })
    }
}

/// Squared global norm `sum_e w_e |z_e|_e^2`.
pub fn global_norm_sq(z: &GlobalState, gm: &GlobalMetric) -> Result<f64> {
    if z.len() != gm.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} elements, metric has {}",
            z.len(),
            gm.len()
        )));
    }
    z.points.iter().enumerate().try_fold(0.0, |acc, (e, p)| {
        Ok(acc + gm.weight(e) * local_norm_sq(p, gm.local(e))?)
    })
}

pub fn global_distance_sq(a: &GlobalState, b: &GlobalState, gm: &GlobalMetric) -> Result<f64> {
    if a.len() != gm.len() || b.len() != gm.len() {
        return Err(Error::DimensionMismatch(format!(
            "states have {} and {} elements, metric has {}",
            a.len(),
            b.len(),
            gm.len()
        )));
    }
    let mut total = 0.0;
    for (e, (pa, pb)) in a.points.iter().zip(&b.points).enumerate() {
        total += gm.weight(e) * local_norm_sq(&pa.sub(pb)?, gm.local(e))?;
    }
    Ok(total)
}
