//! Quality indicators, normalization and operator scoring.

mod hypervolume;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::{Category, ObjectiveBounds, ObjectiveVector, ProblemInstance};

pub use hypervolume::hypervolume;

/// Reference-front resolution used for CMOP IGD.
pub const REFERENCE_POINTS: usize = 1000;

/// Upper clamp applied to normalized objectives.
pub const NORMALIZED_CLAMP: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("point dimension {found} differs from {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} must be nonempty")]
    Empty(&'static str),
    #[error("hypervolume supports 2 or 3 objectives, got {0}")]
    UnsupportedDimension(usize),
    #[error("degenerate bounds on objective {0}")]
    DegenerateBounds(usize),
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<(), MetricError> {
    match points.iter().find(|p| p.len() != dim) {
        Some(p) => Err(MetricError::DimensionMismatch {
            expected: dim,
            found: p.len(),
        }),
        None => Ok(()),
    }
}

/// Indices of the points not dominated by any other point, in input order.
pub fn nondominated_indices(points: &[Vec<f64>]) -> Result<Vec<usize>, MetricError> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    check_dims(points, first.len())?;
    Ok((0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect())
}

/// Nondominated subset of `points`; duplicates are all kept.
pub fn nondominated_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    nondominated_indices(points)
        .expect("uniform dimension")
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

pub fn nondominated_filter(points: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>, MetricError> {
    let mins: Vec<Vec<f64>> = points.iter().map(ObjectiveVector::to_minimization).collect();
    Ok(nondominated_indices(&mins)?
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

/// Mean distance from each reference point to its nearest approximation point.
pub fn igd(reference: &[Vec<f64>], approx: &[Vec<f64>]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::Empty("reference set"));
    }
    if approx.is_empty() {
        return Err(MetricError::Empty("approximation set"));
    }
    let dim = reference[0].len();
    check_dims(reference, dim)?;
    check_dims(approx, dim)?;
    let total: f64 = reference
        .iter()
        .map(|r| {
            approx
                .iter()
                .map(|a| r.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(total / reference.len() as f64)
}

/// Affine map of minimization-oriented points onto the bounds box.
///
/// Components are clamped to `[0, NORMALIZED_CLAMP]`.
pub fn normalize(points: &[Vec<f64>], bounds: &ObjectiveBounds) -> Result<Vec<Vec<f64>>, MetricError> {
    let dim = bounds.ideal.len();
    for i in 0..dim {
        if !(bounds.ideal[i] < bounds.nadir[i]) {
            return Err(MetricError::DegenerateBounds(i));
        }
    }
    check_dims(points, dim)?;
    Ok(points
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, v)| ((v - bounds.ideal[i]) / (bounds.nadir[i] - bounds.ideal[i])).clamp(0.0, NORMALIZED_CLAMP))
                .collect()
        })
        .collect())
}

/// Per-problem score from the category indicator value.
pub fn problem_score(category: Category, metric_value: f64) -> f64 {
    match category {
        Category::Cmop | Category::Mokp => 1.0 - metric_value,
        Category::Motsp => metric_value,
    }
}

/// Mean minus population standard deviation.
pub fn aggregate_score(per_problem: &[f64]) -> Result<f64, MetricError> {
    if per_problem.is_empty() {
        return Err(MetricError::Empty("score list"));
    }
    let n = per_problem.len() as f64;
    let mean = per_problem.iter().sum::<f64>() / n;
    let var = per_problem.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(mean - var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_problem: BTreeMap<String, f64>,
    pub aggregate: f64,
}

impl ScoreReport {
    pub fn new(per_problem: BTreeMap<String, f64>) -> Result<Self, MetricError> {
        let values: Vec<f64> = per_problem.values().copied().collect();
        let aggregate = aggregate_score(&values)?;
        Ok(ScoreReport { per_problem, aggregate })
    }

    /// True when `aggregate` matches a recomputation from `per_problem`.
    pub fn is_consistent(&self) -> bool {
        let values: Vec<f64> = self.per_problem.values().copied().collect();
        aggregate_score(&values).map(|a| a == self.aggregate).unwrap_or(false)
    }
}

/// Final nondominated set of a run, in minimization orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontApproximation {
    pub instance_id: String,
    pub points: Vec<Vec<f64>>,
}

impl FrontApproximation {
    /// Keeps the nondominated subset of the given minimization-oriented points.
    pub fn from_points(instance_id: impl Into<String>, points: &[Vec<f64>]) -> Self {
        FrontApproximation {
            instance_id: instance_id.into(),
            points: nondominated_points(points),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    Igd,
    Hv,
}

/// Precomputed per-instance context for the category indicator.
///
/// CMOP uses IGD against the analytic front on the raw objective scale.
/// MOKP reports the normalized volume the front leaves unattained, so that
/// lower is better and `1 - value` rewards larger dominated volume.
/// MOTSP reports the normalized dominated hypervolume.
#[derive(Debug, Clone)]
pub struct MetricContext {
    category: Category,
    bounds: ObjectiveBounds,
    reference: Vec<Vec<f64>>,
}

impl MetricContext {
    pub fn new(instance: &ProblemInstance) -> Self {
        let reference = match instance.family() {
            Some(family) => family.reference_front(instance.n_var, REFERENCE_POINTS),
            None => Vec::new(),
        };
        MetricContext {
            category: instance.category,
            bounds: instance.bounds.clone(),
            reference,
        }
    }

    pub fn indicator(&self) -> Indicator {
        match self.category {
            Category::Cmop => Indicator::Igd,
            _ => Indicator::Hv,
        }
    }

    /// Indicator value of a set of minimization-oriented objective vectors.
    pub fn measure(&self, points: &[Vec<f64>]) -> Result<f64, MetricError> {
        let front = nondominated_points(points);
        match self.category {
            Category::Cmop => igd(&self.reference, &front),
            Category::Mokp => Ok(1.0 - self.normalized_hv(&front)?),
            Category::Motsp => self.normalized_hv(&front),
        }
    }

    pub fn score(&self, points: &[Vec<f64>]) -> Result<f64, MetricError> {
        Ok(problem_score(self.category, self.measure(points)?))
    }

    fn normalized_hv(&self, front: &[Vec<f64>]) -> Result<f64, MetricError> {
        if front.is_empty() {
            return Err(MetricError::Empty("approximation set"));
        }
        let normalized = normalize(front, &self.bounds)?;
        hypervolume(&normalized, &vec![1.0; self.bounds.ideal.len()])
    }
}
