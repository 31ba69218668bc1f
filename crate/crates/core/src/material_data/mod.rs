//! Evolving local material data sets and the projection onto them.
//!
//! A [`LocalDataSet`] is a finite cloud of (strain, stress) pairs, each with
//! an optional nonnegative fidelity cost. Points are stored together with
//! their coordinates in the Cholesky-lifted frame of the element metric, in
//! which the local phase-space norm is Euclidean; a nonzero cost becomes one
//! extra coordinate `sqrt(cost)` against a query value of zero. Nearest-point
//! queries therefore reduce to exact Euclidean search.

mod generator;
mod history;
mod io;
mod search;

pub use generator::{generate_plastic_set, generate_sls_set, GeneratorSpec, Sampling, WindowRule};
pub use history::{nearest_history, HistoryEntry, HistoryRepository, HistoryWeights};
pub use io::{read_data_sets_csv, write_data_sets_csv, DataSetCsvWriter, DATA_SET_HEADER};
pub use search::{scan_nearest, KdTree, SCAN_THRESHOLD};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materials::PlasticParams;
use crate::phase_space::{local_norm_sq, GlobalMetric, GlobalState, LocalMetric, LocalPhasePoint};

/// Per-element state that parametrizes the next data set: the previous
/// converged (strain, stress) and the accumulated plastic strain.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConditioningState {
    pub strain: f64,
    pub stress: f64,
    pub q_acc: f64,
}

impl ConditioningState {
    pub fn new(strain: f64, stress: f64, q_acc: f64) -> Self {
        Self {
            strain,
            stress,
            q_acc,
        }
    }

    pub fn point(&self) -> LocalPhasePoint {
        LocalPhasePoint::scalar(self.strain, self.stress)
    }
}

/// One material data point with its fidelity cost.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint {
    pub strain: Vec<f64>,
    pub stress: Vec<f64>,
    pub fidelity_cost: f64,
}

impl DataPoint {
    pub fn scalar(strain: f64, stress: f64) -> Self {
        Self {
            strain: vec![strain],
            stress: vec![stress],
            fidelity_cost: 0.0,
        }
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.fidelity_cost = cost;
        self
    }

    pub fn phase_point(&self) -> LocalPhasePoint {
        LocalPhasePoint {
            strain: self.strain.clone(),
            stress: self.stress.clone(),
        }
    }
}

/// Queries answered by scanning before a set builds its tree.
pub const LAZY_SCANS: usize = 8;

/// Finite point cloud in one local phase space with an exact search index.
/// The tree is built on demand once a large set has served
/// [`LAZY_SCANS`] queries.
#[derive(Debug)]
pub struct LocalDataSet {
    dim: usize,
    strains: Vec<f64>,
    stresses: Vec<f64>,
    costs: Option<Vec<f64>>,
    lifted: Vec<f64>,
    kdim: usize,
    tree: OnceLock<KdTree>,
    scans: AtomicUsize,
    metric: LocalMetric,
}

impl Clone for LocalDataSet {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            strains: self.strains.clone(),
            stresses: self.stresses.clone(),
            costs: self.costs.clone(),
            lifted: self.lifted.clone(),
            kdim: self.kdim,
            tree: self.tree.clone(),
            scans: AtomicUsize::new(self.scans.load(Ordering::Relaxed)),
            metric: self.metric.clone(),
        }
    }
}

impl LocalDataSet {
    pub fn new(points: &[DataPoint], metric: &LocalMetric) -> Result<Self> {
        let dim = metric.dim();
        let mut strains = Vec::with_capacity(points.len() * dim);
        let mut stresses = Vec::with_capacity(points.len() * dim);
        let mut costs = Vec::with_capacity(points.len());
        for p in points {
            if p.strain.len() != dim || p.stress.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "data point of dimension {} in a {dim}-dimensional set",
                    p.strain.len()
                )));
            }
            strains.extend_from_slice(&p.strain);
            stresses.extend_from_slice(&p.stress);
            costs.push(p.fidelity_cost);
        }
        Self::from_flat(dim, strains, stresses, Some(costs), metric)
    }

    /// Uniaxial set from parallel strain and stress columns.
    pub fn from_scalars(
        strains: Vec<f64>,
        stresses: Vec<f64>,
        costs: Option<Vec<f64>>,
        metric: &LocalMetric,
    ) -> Result<Self> {
        if metric.dim() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "scalar data against a {}-dimensional metric",
                metric.dim()
            )));
        }
        Self::from_flat(1, strains, stresses, costs, metric)
    }

    fn from_flat(
        dim: usize,
        strains: Vec<f64>,
        stresses: Vec<f64>,
        costs: Option<Vec<f64>>,
        metric: &LocalMetric,
    ) -> Result<Self> {
        let n = strains.len() / dim;
        if n == 0 {
            return Err(Error::InvalidInput(
                "a data set needs at least one point".into(),
            ));
        }
        if strains.len() != stresses.len() || strains.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} strain and {} stress values for dimension {dim}",
                strains.len(),
                stresses.len()
            )));
        }
        if strains.iter().chain(&stresses).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data point".into()));
        }
        let costs = match costs {
            Some(c) => {
                if c.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} costs for {n} points",
                        c.len()
                    )));
                }
                if let Some(bad) = c.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "fidelity cost must be nonnegative, got {bad}"
                    )));
                }
                c.iter().any(|&v| v > 0.0).then_some(c)
            }
            None => None,
        };
        let kdim = 2 * dim + usize::from(costs.is_some());
        let mut lifted = vec![0.0; n * kdim];
        for i in 0..n {
            let out = &mut lifted[i * kdim..(i + 1) * kdim];
            metric.lift(
                &strains[i * dim..(i + 1) * dim],
                &stresses[i * dim..(i + 1) * dim],
                &mut out[..2 * dim],
            );
            if let Some(c) = &costs {
                out[2 * dim] = c[i].sqrt();
            }
        }
        Ok(Self {
            dim,
            strains,
            stresses,
            costs,
            lifted,
            kdim,
            tree: OnceLock::new(),
            scans: AtomicUsize::new(0),
            metric: metric.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.strains.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.strains.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &LocalMetric {
        &self.metric
    }

    pub fn strain(&self, i: usize) -> &[f64] {
        &self.strains[i * self.dim..(i + 1) * self.dim]
    }

    pub fn stress(&self, i: usize) -> &[f64] {
        &self.stresses[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.costs.as_ref().map_or(0.0, |c| c[i])
    }

    pub fn point(&self, i: usize) -> DataPoint {
        DataPoint {
            strain: self.strain(i).to_vec(),
            stress: self.stress(i).to_vec(),
            fidelity_cost: self.cost(i),
        }
    }

    pub fn phase_point(&self, i: usize) -> LocalPhasePoint {
        LocalPhasePoint {
            strain: self.strain(i).to_vec(),
            stress: self.stress(i).to_vec(),
        }
    }

    fn lift_query(&self, z: &LocalPhasePoint, buf: &mut [f64]) -> Result<()> {
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "query of dimension {} against a {}-dimensional set",
                z.dim(),
                self.dim
            )));
        }
        self.metric
            .lift(&z.strain, &z.stress, &mut buf[..2 * self.dim]);
        buf[2 * self.dim..].fill(0.0);
        Ok(())
    }

    /// Index minimizing `|z - y|^2 + cost(y)` and that value; ties go to the
    /// lowest index.
    pub fn nearest(&self, z: &LocalPhasePoint) -> Result<(usize, f64)> {
        let mut small = [0.0; 8];
        let mut large;
        let buf: &mut [f64] = if self.kdim <= small.len() {
            &mut small[..self.kdim]
        } else {
            large = vec![0.0; self.kdim];
            &mut large
        };
        self.lift_query(z, buf)?;
        if let Some(tree) = self.tree.get() {
            return Ok(tree.nearest(&self.lifted, self.kdim, buf));
        }
        if self.len() < SCAN_THRESHOLD || self.scans.fetch_add(1, Ordering::Relaxed) < LAZY_SCANS {
            return Ok(scan_nearest(&self.lifted, self.kdim, buf));
        }
        let tree = self
            .tree
            .get_or_init(|| KdTree::build(&self.lifted, self.kdim));
        Ok(tree.nearest(&self.lifted, self.kdim, buf))
    }

    /// Exhaustive scan in the lifted frame; same result as [`Self::nearest`].
    pub fn nearest_scan(&self, z: &LocalPhasePoint) -> Result<(usize, f64)> {
        let mut buf = vec![0.0; self.kdim];
        self.lift_query(z, &mut buf)?;
        Ok(scan_nearest(&self.lifted, self.kdim, &buf))
    }

    /// `|z - y_i|^2 + cost_i` evaluated directly from the metric.
    pub fn objective(&self, z: &LocalPhasePoint, i: usize) -> Result<f64> {
        Ok(local_norm_sq(&z.sub(&self.phase_point(i))?, &self.metric)? + self.cost(i))
    }
}

/// Nearest data point to `z` under the set's metric plus fidelity cost.
pub fn nearest_point(z: &LocalPhasePoint, d: &LocalDataSet) -> Result<(usize, DataPoint)> {
    let (i, _) = d.nearest(z)?;
    Ok((i, d.point(i)))
}

/// Outcome of the projection onto the product of local data sets.
#[derive(Clone, Debug, PartialEq)]
pub struct DataProjection {
    pub assignment: Vec<usize>,
    pub y: GlobalState,
    /// `sum_e w_e (|z_e - y_e|^2 + cost(y_e))`.
    pub objective: f64,
}

/// Element-wise nearest-point search; the global objective is the weighted
/// sum of the local minima.
pub fn project_onto_d(
    z: &GlobalState,
    sets: &[LocalDataSet],
    gm: &GlobalMetric,
) -> Result<DataProjection> {
    let m = gm.len();
    if z.len() != m || sets.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "state has {} elements and {} data sets, metric has {m}",
            z.len(),
            sets.len()
        )));
    }
    let local: Vec<(usize, f64)> = sets
        .par_iter()
        .zip(z.points.par_iter())
        .enumerate()
        .map(|(e, (set, p))| {
            if set.metric().matrix() != gm.local(e).matrix() {
                return Err(Error::DimensionMismatch(format!(
                    "data set {e} carries a different metric"
                )));
            }
            set.nearest(p)
        })
        .collect::<Result<_>>()?;
    let mut objective = 0.0;
    let mut assignment = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for (e, &(i, d)) in local.iter().enumerate() {
        objective += gm.weight(e) * d;
        assignment.push(i);
        points.push(sets[e].phase_point(i));
    }
    Ok(DataProjection {
        assignment,
        y: GlobalState::new(points),
        objective,
    })
}

/// Data points selected by `assignment`.
pub fn assigned_state(sets: &[LocalDataSet], assignment: &[usize]) -> Result<GlobalState> {
    if sets.len() != assignment.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments for {} data sets",
            assignment.len(),
            sets.len()
        )));
    }
    let mut points = Vec::with_capacity(sets.len());
    for (e, (set, &i)) in sets.iter().zip(assignment).enumerate() {
        if i >= set.len() {
            return Err(Error::InvalidInput(format!(
                "assignment {i} out of range for data set {e}"
            )));
        }
        points.push(set.phase_point(i));
    }
    Ok(GlobalState::new(points))
}

/// `sum_e w_e cost(y_e)` of an assignment.
pub fn assignment_cost(sets: &[LocalDataSet], assignment: &[usize], gm: &GlobalMetric) -> f64 {
    sets.iter()
        .zip(assignment)
        .enumerate()
        .map(|(e, (s, &i))| gm.weight(e) * s.cost(i))
        .sum()
}

/// Accumulated plastic strain after moving from `cond` to `z_new`:
/// `q_acc + |((E0+E1) d_eps - d_sig) / E1|`.
pub fn update_history_variable(
    cond: &ConditioningState,
    z_new: &LocalPhasePoint,
    p: &PlasticParams,
) -> f64 {
    let d_eps = z_new.strain[0] - cond.strain;
    let d_sig = z_new.stress[0] - cond.stress;
    cond.q_acc + ((p.instantaneous_modulus() * d_eps - d_sig) / p.e1).abs()
}

/// Fidelity cost of data with Gaussian scatter: `sum_e 2 m_e s_e^2`.
pub fn gaussian_fidelity_cost(std_devs: &[f64], dims: &[usize]) -> Result<f64> {
    if std_devs.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} standard deviations for {} elements",
            std_devs.len(),
            dims.len()
        )));
    }
    let mut total = 0.0;
    for (&s, &m) in std_devs.iter().zip(dims) {
        if !(s >= 0.0) {
            return Err(Error::NegativeStdDev(s));
        }
        total += 2.0 * m as f64 * s * s;
    }
    Ok(total)
}
