//! Repositories of measured two-time histories.
//!
//! Matching a two-time history `(z_k, z_{k+1})` against entries
//! `(y_prior, y_current)` with weights `(C0, C1)` minimizes
//! `C0 |z_{k+1} - y_current|^2 + C1 |z_k - y_prior|^2`. With `z_k` already
//! fixed this is the current-slot search with a fidelity cost
//! `(C1 / C0) |z_k - y_prior|^2` attached to each entry.
//!
//! The first step of a march has no prior slot: it is the instantaneous
//! response from the virgin state, which a repository may carry as separate
//! one-time data.

use super::{DataPoint, LocalDataSet};
use crate::error::{Error, Result};
use crate::phase_space::{local_norm_sq, LocalMetric, LocalPhasePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub prior: LocalPhasePoint,
    pub current: LocalPhasePoint,
}

/// Weights of the current and prior history slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryWeights {
    pub current: f64,
    pub prior: f64,
}

impl Default for HistoryWeights {
    fn default() -> Self {
        Self {
            current: 1.0,
            prior: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HistoryRepository {
    entries: Vec<Vec<HistoryEntry>>,
    weights: HistoryWeights,
    initial: Option<Vec<Vec<LocalPhasePoint>>>,
}

impl HistoryRepository {
    /// One entry list per element. The current-slot weight must be positive;
    /// a zero prior weight ignores the prior slot.
    pub fn new(entries: Vec<Vec<HistoryEntry>>, weights: HistoryWeights) -> Result<Self> {
        if !(weights.current > 0.0)
            || !(weights.prior >= 0.0)
            || !weights.current.is_finite()
            || !weights.prior.is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "history weights must be positive (current) and nonnegative (prior), got {:?}",
                weights
            )));
        }
        if entries.is_empty() {
            return Err(Error::EmptyRepository { element: 0 });
        }
        if let Some(e) = entries.iter().position(|v| v.is_empty()) {
            return Err(Error::EmptyRepository { element: e });
        }
        Ok(Self {
            entries,
            weights,
            initial: None,
        })
    }

    /// Attaches instantaneous-response data, one nonempty list per element,
    /// used for the first step of a march.
    pub fn with_initial(mut self, initial: Vec<Vec<LocalPhasePoint>>) -> Result<Self> {
        if initial.len() != self.entries.len() {
            return Err(Error::DimensionMismatch(format!(
                "initial data covers {} elements, repository has {}",
                initial.len(),
                self.entries.len()
            )));
        }
        if let Some(e) = initial.iter().position(|v| v.is_empty()) {
            return Err(Error::EmptyRepository { element: e });
        }
        self.initial = Some(initial);
        Ok(self)
    }

    pub fn initial(&self, element: usize) -> Option<&[LocalPhasePoint]> {
        self.initial.as_ref().map(|v| v[element].as_slice())
    }

    pub fn elements(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self, element: usize) -> &[HistoryEntry] {
        &self.entries[element]
    }

    pub fn weights(&self) -> HistoryWeights {
        self.weights
    }

    pub fn with_weights(mut self, weights: HistoryWeights) -> Result<Self> {
        let entries = std::mem::take(&mut self.entries);
        Ok(Self {
            initial: self.initial.take(),
            ..Self::new(entries, weights)?
        })
    }

    /// Current-slot data of `element` with the prior-slot mismatch to
    /// `prior` as fidelity cost.
    pub fn data_set(
        &self,
        element: usize,
        prior: &LocalPhasePoint,
        metric: &LocalMetric,
    ) -> Result<LocalDataSet> {
        let entries = self
            .entries
            .get(element)
            .ok_or(Error::EmptyRepository { element })?;
        let ratio = self.weights.prior / self.weights.current;
        let points = entries
            .iter()
            .map(|h| {
                let cost = if ratio > 0.0 {
                    ratio * local_norm_sq(&prior.sub(&h.prior)?, metric)?
                } else {
                    0.0
                };
                Ok(DataPoint {
                    strain: h.current.strain.clone(),
                    stress: h.current.stress.clone(),
                    fidelity_cost: cost,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LocalDataSet::new(&points, metric)
    }

    /// Data for the first step: the instantaneous-response data when
    /// present, otherwise the two-time entries matched against `virgin`.
    pub fn initial_data_set(
        &self,
        element: usize,
        virgin: &LocalPhasePoint,
        metric: &LocalMetric,
    ) -> Result<LocalDataSet> {
        match self.initial(element) {
            Some(points) => {
                let points: Vec<DataPoint> = points
                    .iter()
                    .map(|p| DataPoint {
                        strain: p.strain.clone(),
                        stress: p.stress.clone(),
                        fidelity_cost: 0.0,
                    })
                    .collect();
                LocalDataSet::new(&points, metric)
            }
            None => self.data_set(element, virgin, metric),
        }
    }
}

/// Entry minimizing the weighted two-time distance, by exhaustive scan.
/// Ties go to the lowest index.
pub fn nearest_history(
    current: &LocalPhasePoint,
    prior: &LocalPhasePoint,
    entries: &[HistoryEntry],
    weights: &HistoryWeights,
    metric: &LocalMetric,
) -> Result<(usize, f64)> {
    if entries.is_empty() {
        return Err(Error::EmptyRepository { element: 0 });
    }
    let mut best = (0, f64::INFINITY);
    for (i, h) in entries.iter().enumerate() {
        let d = weights.current * local_norm_sq(&current.sub(&h.current)?, metric)?
            + weights.prior * local_norm_sq(&prior.sub(&h.prior)?, metric)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}
