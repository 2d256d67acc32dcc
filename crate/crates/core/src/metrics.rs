//! Pairwise comparison metrics on equal-length real vectors.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Above this length, sums are accumulated with Neumaier compensation.
pub const COMPENSATED_SUM_THRESHOLD: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("similarity undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("vector must have at least one coordinate")]
    Empty,
    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A non-empty vector of finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self, MetricError> {
        if coords.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(MetricError::NonFinite { index, value });
        }
        Ok(Vector(coords))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = MetricError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CosineConvention {
    /// `|a·b| / (‖a‖‖b‖)`, in `[0, 1]`.
    Unsigned,
    /// `a·b / (‖a‖‖b‖)`, in `[-1, 1]`.
    Signed,
}

impl CosineConvention {
    fn clamp(self, c: f64) -> f64 {
        match self {
            CosineConvention::Unsigned => c.abs().min(1.0),
            CosineConvention::Signed => c.clamp(-1.0, 1.0),
        }
    }
}

fn sum_terms<I: Iterator<Item = f64>>(len: usize, terms: I) -> f64 {
    if len > COMPENSATED_SUM_THRESHOLD {
        neumaier_sum(terms)
    } else {
        terms.sum()
    }
}

/// Neumaier's improved Kahan summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum_terms(a.len(), a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm(a: &[f64]) -> f64 {
    sum_terms(a.len(), a.iter().map(|x| x * x)).sqrt()
}

pub fn cosine_similarity(
    a: &[f64],
    b: &[f64],
    convention: CosineConvention,
) -> Result<f64, MetricError> {
    check_lengths(a, b)?;
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return Err(MetricError::ZeroNorm);
    }
    Ok(convention.clamp(dot(a, b) / denom))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_lengths(a, b)?;
    Ok(euclidean_unchecked(a, b))
}

/// Euclidean distance without the length check; callers guarantee equal lengths.
pub(crate) fn euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    sum_terms(
        a.len(),
        a.iter().zip(b).map(|(x, y)| {
            let d = x - y;
            d * d
        }),
    )
    .sqrt()
}

/// Distance between the unit-length projections of `a` and `b`, in `[0, 2]`.
pub fn normalized_euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_lengths(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::ZeroNorm);
    }
    let d = sum_terms(
        a.len(),
        a.iter().zip(b).map(|(x, y)| {
            let d = x / na - y / nb;
            d * d
        }),
    )
    .sqrt();
    Ok(d.min(2.0))
}

pub fn manhattan_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_lengths(a, b)?;
    Ok(sum_terms(
        a.len(),
        a.iter().zip(b).map(|(x, y)| (x - y).abs()),
    ))
}

/// Cosine similarity recovered from a Euclidean distance and the two norms:
/// `(‖a‖² + ‖b‖² − d²) / (2‖a‖‖b‖)`, absolute value for the unsigned form.
pub fn cosine_from_distance(
    d: f64,
    norm_a: f64,
    norm_b: f64,
    convention: CosineConvention,
) -> Result<f64, MetricError> {
    if !(norm_a > 0.0 && norm_b > 0.0) {
        return Err(MetricError::ZeroNorm);
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(MetricError::InvalidArgument(format!(
            "distance must be finite and non-negative, got {d}"
        )));
    }
    let c = (norm_a * norm_a + norm_b * norm_b - d * d) / (2.0 * norm_a * norm_b);
    Ok(convention.clamp(c))
}
