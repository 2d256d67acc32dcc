//! Monte Carlo dimension sweeps.
//!
//! For every dimension in a grid, draw independent random pairs, evaluate a
//! metric and summarize the resulting distribution. Pair `t` at dimension `n`
//! always uses vector trials `2t` and `2t + 1` of the sweep seed, so the
//! output does not depend on how rayon schedules the work.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diem::{self, DiemCalibration, DiemError, DEFAULT_CALIBRATION_TRIALS};
use crate::metrics::{self, CosineConvention, MetricError};
use crate::stats::{self, DistributionSummary, StatsError, TestResult};
use crate::vecgen::{self, DomainSpec, SamplingDistribution, SeedSpec, VecGenError};

pub const DEFAULT_TRIALS_PER_DIM: usize = 10_000;
pub const MIN_TRIALS_PER_DIM: usize = 100;
pub const DEFAULT_KS_TRIALS: usize = 10_000;

const SWEEP_CALIBRATION_STREAM: u64 = 0x5357_4545_5043_414c;

/// `2, 12, 22, …, 102`.
pub fn default_dims() -> Vec<usize> {
    std::iter::once(2).chain((12..=102).step_by(10)).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension {dim}: observed maximum {observed} exceeds bound {bound}")]
    BoundViolated {
        dim: usize,
        observed: f64,
        bound: f64,
    },
    #[error(transparent)]
    VecGen(#[from] VecGenError),
    #[error(transparent)]
    Diem(#[from] DiemError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepMetric {
    CosineUnsigned,
    CosineSigned,
    Euclidean,
    NormalizedEuclidean,
    Manhattan,
    Diem,
}

impl SweepMetric {
    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::CosineUnsigned => "cosine",
            SweepMetric::CosineSigned => "cosine-signed",
            SweepMetric::Euclidean => "euclid",
            SweepMetric::NormalizedEuclidean => "norm-euclid",
            SweepMetric::Manhattan => "manhattan",
            SweepMetric::Diem => "diem",
        }
    }
}

impl fmt::Display for SweepMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMetric {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "cosine" | "cos" | "cosine-unsigned" => SweepMetric::CosineUnsigned,
            "cosine-signed" | "cos-signed" => SweepMetric::CosineSigned,
            "euclid" | "euclidean" => SweepMetric::Euclidean,
            "norm-euclid" | "normalized-euclidean" => SweepMetric::NormalizedEuclidean,
            "manhattan" => SweepMetric::Manhattan,
            "diem" => SweepMetric::Diem,
            other => {
                return Err(SimulationError::InvalidConfig(format!(
                    "unknown metric `{other}`"
                )))
            }
        })
    }
}

/// Evaluate `metric` on one pair. `cal` is required for [`SweepMetric::Diem`].
pub fn evaluate(
    metric: SweepMetric,
    a: &[f64],
    b: &[f64],
    cal: Option<&DiemCalibration>,
) -> Result<f64, DiemError> {
    Ok(match metric {
        SweepMetric::CosineUnsigned => {
            metrics::cosine_similarity(a, b, CosineConvention::Unsigned)?
        }
        SweepMetric::CosineSigned => metrics::cosine_similarity(a, b, CosineConvention::Signed)?,
        SweepMetric::Euclidean => metrics::euclidean_distance(a, b)?,
        SweepMetric::NormalizedEuclidean => metrics::normalized_euclidean_distance(a, b)?,
        SweepMetric::Manhattan => metrics::manhattan_distance(a, b)?,
        SweepMetric::Diem => {
            let cal = cal.ok_or_else(|| {
                DiemError::InvalidCalibration("DIEM requires a calibration".into())
            })?;
            diem::diem_value(a, b, cal)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub metric: SweepMetric,
    pub domain: DomainSpec,
    pub sampling: SamplingDistribution,
    pub dims: Vec<usize>,
    pub trials_per_dim: usize,
    pub seed: SeedSpec,
    /// Keep raw per-dimension samples in the result.
    pub retain_samples: bool,
    /// Trials for the per-dimension calibration of DIEM sweeps.
    pub calibration_trials: usize,
}

impl SweepConfig {
    pub fn new(metric: SweepMetric, domain: DomainSpec, sampling: SamplingDistribution) -> Self {
        SweepConfig {
            metric,
            domain,
            sampling,
            dims: default_dims(),
            trials_per_dim: DEFAULT_TRIALS_PER_DIM,
            seed: SeedSpec::default(),
            retain_samples: false,
            calibration_trials: DEFAULT_CALIBRATION_TRIALS,
        }
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Self {
        self.dims = dims;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials_per_dim = trials;
        self
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn retaining_samples(mut self) -> Self {
        self.retain_samples = true;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        validate_dims(&self.dims, 2)?;
        if self.trials_per_dim < MIN_TRIALS_PER_DIM {
            return Err(SimulationError::InvalidConfig(format!(
                "trials_per_dim must be ≥ {MIN_TRIALS_PER_DIM}, got {}",
                self.trials_per_dim
            )));
        }
        self.sampling.validate()?;
        Ok(())
    }
}

/// Dimensions must be non-empty, each `≥ min`, strictly increasing.
pub fn validate_dims(dims: &[usize], min: usize) -> Result<(), SimulationError> {
    if dims.is_empty() {
        return Err(SimulationError::InvalidConfig(
            "dimension list is empty".into(),
        ));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < min) {
        return Err(SimulationError::InvalidConfig(format!(
            "dimension {d} is below the minimum {min}"
        )));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimulationError::InvalidConfig(
            "dimensions must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub per_dim: BTreeMap<usize, DistributionSummary>,
    /// Pairs dropped because the metric is undefined for them (zero vectors).
    pub skipped: BTreeMap<usize, usize>,
    pub per_dim_samples: Option<BTreeMap<usize, Vec<f64>>>,
    /// Per-dimension calibrations used by DIEM sweeps.
    pub calibrations: BTreeMap<usize, DiemCalibration>,
}

/// Raw metric values for one dimension; `None` marks an undefined pair.
fn pair_values(
    metric: SweepMetric,
    dim: usize,
    sampling: &SamplingDistribution,
    domain: &DomainSpec,
    trials: usize,
    seed: SeedSpec,
    cal: Option<&DiemCalibration>,
) -> Result<Vec<Option<f64>>, SimulationError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let a = vecgen::sample(dim, sampling, domain, seed, 2 * t)?;
            let b = vecgen::sample(dim, sampling, domain, seed, 2 * t + 1)?;
            match evaluate(metric, &a, &b, cal) {
                Ok(v) => Ok(Some(v)),
                Err(DiemError::Metric(MetricError::ZeroNorm)) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

fn defined_values(
    metric: SweepMetric,
    dim: usize,
    sampling: &SamplingDistribution,
    domain: &DomainSpec,
    trials: usize,
    seed: SeedSpec,
    cal: Option<&DiemCalibration>,
) -> Result<(Vec<f64>, usize), SimulationError> {
    let raw = pair_values(metric, dim, sampling, domain, trials, seed, cal)?;
    let skipped = raw.iter().filter(|v| v.is_none()).count();
    Ok((raw.into_iter().flatten().collect(), skipped))
}

/// Run the sweep described by `config`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SimulationError> {
    config.validate()?;
    let mut per_dim = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    let mut samples = BTreeMap::new();
    let mut calibrations = BTreeMap::new();
    let cal_seed = config.seed.derive(SWEEP_CALIBRATION_STREAM);

    for &dim in &config.dims {
        let cal = if config.metric == SweepMetric::Diem {
            let cal = diem::calibrate(dim, &config.domain, config.calibration_trials, cal_seed)?;
            calibrations.insert(dim, cal.clone());
            Some(cal)
        } else {
            None
        };
        let (values, dropped) = defined_values(
            config.metric,
            dim,
            &config.sampling,
            &config.domain,
            config.trials_per_dim,
            config.seed,
            cal.as_ref(),
        )?;
        if values.is_empty() {
            return Err(SimulationError::InsufficientData(format!(
                "every pair at dimension {dim} was undefined for {}",
                config.metric
            )));
        }
        per_dim.insert(dim, stats::summarize(&values)?);
        skipped.insert(dim, dropped);
        if config.retain_samples {
            samples.insert(dim, values);
        }
    }

    Ok(SweepResult {
        config: config.clone(),
        per_dim,
        skipped,
        per_dim_samples: config.retain_samples.then_some(samples),
        calibrations,
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, SimulationError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SimulationError::InsufficientData(
            "linear fit needs at least two (x, y) points".into(),
        ));
    }
    let mx = stats::mean(xs);
    let my = stats::mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SimulationError::InsufficientData(
            "x values are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dim: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Fit of `ln(std)` against `ln(n)`.
    pub std_decay: LinearFit,
}

/// Per-dimension mean and spread plus the power-law exponent of the spread.
pub fn convergence_check(
    metric: SweepMetric,
    domain: &DomainSpec,
    sampling: &SamplingDistribution,
    dims: &[usize],
    trials: usize,
    seed: SeedSpec,
) -> Result<ConvergenceReport, SimulationError> {
    if dims.len() < 3 {
        return Err(SimulationError::InsufficientData(format!(
            "need at least 3 dimensions, got {}",
            dims.len()
        )));
    }
    validate_dims(dims, 2)?;
    if dims[dims.len() - 1] < 10 * dims[0] {
        return Err(SimulationError::InsufficientData(
            "dimensions must span at least a decade".into(),
        ));
    }
    let config = SweepConfig {
        dims: dims.to_vec(),
        trials_per_dim: trials,
        seed,
        ..SweepConfig::new(metric, *domain, *sampling)
    };
    let sweep = run_sweep(&config)?;
    let rows: Vec<ConvergenceRow> = sweep
        .per_dim
        .iter()
        .map(|(&dim, s)| ConvergenceRow {
            dim,
            mean: s.mean,
            std: s.std,
        })
        .collect();
    if rows.iter().any(|r| !(r.std > 0.0)) {
        return Err(SimulationError::InsufficientData(
            "zero spread at some dimension; cannot fit a power law".into(),
        ));
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.dim as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.std.ln()).collect();
    Ok(ConvergenceReport {
        std_decay: linear_fit(&lx, &ly)?,
        rows,
    })
}

/// Distances of random pairs at one dimension.
pub fn euclidean_samples(
    dim: usize,
    domain: &DomainSpec,
    sampling: &SamplingDistribution,
    trials: usize,
    seed: SeedSpec,
) -> Result<Vec<f64>, SimulationError> {
    Ok(defined_values(
        SweepMetric::Euclidean,
        dim,
        sampling,
        domain,
        trials,
        seed,
        None,
    )?
    .0)
}

/// KS normality test of the Euclidean distance distribution at each dimension.
pub fn normality_transition(
    domain: &DomainSpec,
    sampling: &SamplingDistribution,
    dims: &[usize],
    trials: usize,
    alpha: f64,
    seed: SeedSpec,
) -> Result<BTreeMap<usize, TestResult>, SimulationError> {
    validate_dims(dims, 2)?;
    if let Some(&d) = dims.iter().find(|&&d| d > 12) {
        return Err(SimulationError::InvalidConfig(format!(
            "normality transition covers dimensions 2..=12, got {d}"
        )));
    }
    if trials < 1000 {
        return Err(SimulationError::InvalidConfig(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    sampling.validate()?;
    dims.iter()
        .map(|&dim| {
            let d = euclidean_samples(dim, domain, sampling, trials, seed)?;
            Ok((dim, stats::ks_normal_test(&d, alpha)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManhattanRow {
    pub dim: usize,
    pub mean: f64,
    pub std: f64,
    /// `n·(v_max − v_min)`.
    pub max_bound: f64,
    pub observed_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManhattanGrowth {
    pub rows: Vec<ManhattanRow>,
    pub std_strictly_increasing: bool,
    /// Fit of the mean against the dimension.
    pub mean_fit: LinearFit,
}

/// Manhattan distance statistics over a dimension grid (uniform sampling).
pub fn manhattan_growth_check(
    domain: &DomainSpec,
    dims: &[usize],
    trials: usize,
    seed: SeedSpec,
) -> Result<ManhattanGrowth, SimulationError> {
    let config = SweepConfig {
        dims: dims.to_vec(),
        trials_per_dim: trials,
        seed,
        ..SweepConfig::new(
            SweepMetric::Manhattan,
            *domain,
            SamplingDistribution::Uniform,
        )
    };
    let sweep = run_sweep(&config)?;
    let mut rows = Vec::with_capacity(dims.len());
    for (&dim, s) in &sweep.per_dim {
        let max_bound = dim as f64 * domain.range();
        if s.max > max_bound {
            return Err(SimulationError::BoundViolated {
                dim,
                observed: s.max,
                bound: max_bound,
            });
        }
        rows.push(ManhattanRow {
            dim,
            mean: s.mean,
            std: s.std,
            max_bound,
            observed_max: s.max,
        });
    }
    let std_strictly_increasing = rows.windows(2).all(|w| w[0].std < w[1].std);
    let xs: Vec<f64> = rows.iter().map(|r| r.dim as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let mean_fit = if rows.len() >= 2 {
        linear_fit(&xs, &ys)?
    } else {
        LinearFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
        }
    };
    Ok(ManhattanGrowth {
        rows,
        std_strictly_increasing,
        mean_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecgen::SignDomain;

    fn uniform(metric: SweepMetric, domain: DomainSpec) -> SweepConfig {
        SweepConfig::new(metric, domain, SamplingDistribution::Uniform).with_seed(SeedSpec::new(10))
    }

    #[test]
    fn default_grid() {
        assert_eq!(
            default_dims(),
            vec![2, 12, 22, 32, 42, 52, 62, 72, 82, 92, 102]
        );
    }

    #[test]
    fn config_validation() {
        let base = uniform(SweepMetric::Euclidean, DomainSpec::positive());
        assert!(base.clone().with_dims(vec![]).validate().is_err());
        assert!(base.clone().with_dims(vec![1, 5]).validate().is_err());
        assert!(base.clone().with_dims(vec![5, 5]).validate().is_err());
        assert!(base.clone().with_dims(vec![12, 2]).validate().is_err());
        assert!(base.clone().with_trials(99).validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn positive_cosine_converges_to_three_quarters() {
        let cfg = uniform(SweepMetric::CosineUnsigned, DomainSpec::positive()).with_dims(vec![102]);
        let r = run_sweep(&cfg).unwrap();
        let m = r.per_dim[&102].mean;
        assert!((m - 0.75).abs() < 0.05, "{m}");
        assert_eq!(r.per_dim[&102].count, DEFAULT_TRIALS_PER_DIM);
    }

    #[test]
    fn normalized_euclidean_converges_to_sqrt_two() {
        let cfg =
            uniform(SweepMetric::NormalizedEuclidean, DomainSpec::all_real()).with_dims(vec![102]);
        let r = run_sweep(&cfg).unwrap();
        assert!((r.per_dim[&102].median - 1.41).abs() < 0.05);
    }

    #[test]
    fn euclidean_spread_is_flat() {
        for domain in [
            DomainSpec::positive(),
            DomainSpec::negative(),
            DomainSpec::all_real(),
        ] {
            let cfg =
                uniform(SweepMetric::Euclidean, domain).with_dims((22..=102).step_by(10).collect());
            let r = run_sweep(&cfg).unwrap();
            let stds: Vec<f64> = r.per_dim.values().map(|s| s.std).collect();
            let (lo, hi) = stds
                .iter()
                .fold((f64::MAX, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
            assert!(hi / lo < 1.25, "{domain:?}: {stds:?}");
        }
    }

    #[test]
    fn all_real_cosine_concentrates_at_zero() {
        let cfg =
            uniform(SweepMetric::CosineSigned, DomainSpec::all_real()).with_dims(vec![12, 102]);
        let r = run_sweep(&cfg).unwrap();
        assert!(r.per_dim[&102].std < r.per_dim[&12].std);
        let cfg = uniform(SweepMetric::CosineUnsigned, DomainSpec::all_real()).with_dims(vec![102]);
        assert!(run_sweep(&cfg).unwrap().per_dim[&102].mean < 0.1);
    }

    #[test]
    fn sweeps_are_reproducible() {
        let cfg = uniform(SweepMetric::Manhattan, DomainSpec::all_real())
            .with_dims(vec![2, 7])
            .with_trials(500)
            .retaining_samples();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let samples = a.per_dim_samples.as_ref().unwrap();
        assert_eq!(samples[&7].len(), 500);
    }

    #[test]
    fn sphere_and_box_agree_for_positive_cosine() {
        let box_cfg =
            uniform(SweepMetric::CosineUnsigned, DomainSpec::positive()).with_dims(vec![102]);
        let sphere_cfg = SweepConfig {
            sampling: SamplingDistribution::UnitSphere,
            ..box_cfg.clone()
        };
        let a = run_sweep(&box_cfg).unwrap().per_dim[&102].mean;
        let b = run_sweep(&sphere_cfg).unwrap().per_dim[&102].mean;
        assert!((a - b).abs() < 0.05);
    }

    #[test]
    fn gaussian_cosine_follows_the_same_trend() {
        let cfg = SweepConfig::new(
            SweepMetric::CosineUnsigned,
            DomainSpec::all_real(),
            SamplingDistribution::gaussian_default(SignDomain::AllReal),
        )
        .with_dims(vec![2, 102])
        .with_seed(SeedSpec::new(3));
        let r = run_sweep(&cfg).unwrap();
        assert!(r.per_dim[&102].std < r.per_dim[&2].std);
        assert!(r.per_dim[&102].mean < 0.1);
    }

    #[test]
    fn sphere_cosine_variance_law() {
        let r = convergence_check(
            SweepMetric::CosineSigned,
            &DomainSpec::all_real(),
            &SamplingDistribution::UnitSphere,
            &[10, 20, 50, 100],
            DEFAULT_TRIALS_PER_DIM,
            SeedSpec::new(1),
        )
        .unwrap();
        assert!((r.std_decay.slope + 0.5).abs() < 0.1, "{:?}", r.std_decay);
    }

    #[test]
    fn convergence_check_preconditions() {
        let d = DomainSpec::positive();
        let u = SamplingDistribution::Uniform;
        assert!(matches!(
            convergence_check(
                SweepMetric::Euclidean,
                &d,
                &u,
                &[10, 100],
                200,
                SeedSpec::new(0)
            ),
            Err(SimulationError::InsufficientData(_))
        ));
        assert!(matches!(
            convergence_check(
                SweepMetric::Euclidean,
                &d,
                &u,
                &[10, 20, 50],
                200,
                SeedSpec::new(0)
            ),
            Err(SimulationError::InsufficientData(_))
        ));
    }

    #[test]
    fn positive_cosine_limit_via_convergence_check() {
        let r = convergence_check(
            SweepMetric::CosineUnsigned,
            &DomainSpec::positive(),
            &SamplingDistribution::Uniform,
            &[10, 50, 100],
            DEFAULT_TRIALS_PER_DIM,
            SeedSpec::new(2),
        )
        .unwrap();
        assert!((r.rows[2].mean - 0.75).abs() < 0.03);
    }

    #[test]
    fn euclidean_mean_tracks_analytic_bound() {
        // The Jensen gap exceeds 1.5% up to n ≈ 12, so only larger n are held
        // to that tolerance.
        let d = DomainSpec::all_real();
        let r = convergence_check(
            SweepMetric::Euclidean,
            &d,
            &SamplingDistribution::Uniform,
            &[22, 52, 102, 220],
            DEFAULT_TRIALS_PER_DIM,
            SeedSpec::new(4),
        )
        .unwrap();
        for row in &r.rows {
            let bound = diem::expected_distance_analytic(row.dim, &d).unwrap();
            assert!(row.mean < bound);
            assert!((row.mean / bound - 1.0).abs() < 0.015, "{row:?}");
        }
    }

    #[test]
    fn normality_transition_regimes() {
        let r = normality_transition(
            &DomainSpec::positive(),
            &SamplingDistribution::Uniform,
            &[2, 12],
            DEFAULT_KS_TRIALS,
            0.05,
            SeedSpec::new(0),
        )
        .unwrap();
        assert!(r[&2].rejected);
        assert!(!r[&12].rejected);
        assert!(normality_transition(
            &DomainSpec::positive(),
            &SamplingDistribution::Uniform,
            &[2, 13],
            1000,
            0.05,
            SeedSpec::new(0)
        )
        .is_err());
    }

    #[test]
    fn manhattan_growth() {
        let g = manhattan_growth_check(
            &DomainSpec::positive(),
            &(12..=102).step_by(10).collect::<Vec<_>>(),
            DEFAULT_TRIALS_PER_DIM,
            SeedSpec::new(6),
        )
        .unwrap();
        assert!(g.std_strictly_increasing);
        assert!(g.mean_fit.r_squared > 0.999);
        // E|a − b| = (v_max − v_min)/3 for independent uniforms
        assert!((g.mean_fit.slope - 1.0 / 3.0).abs() < 0.01);
        let g10 =
            manhattan_growth_check(&DomainSpec::positive(), &[10], 200, SeedSpec::new(0)).unwrap();
        assert_eq!(g10.rows[0].max_bound, 10.0);
    }

    #[test]
    fn diem_sweep_is_flat() {
        let mut cfg = uniform(SweepMetric::Diem, DomainSpec::all_real())
            .with_dims(vec![22, 62, 102])
            .with_trials(5_000);
        cfg.calibration_trials = 20_000;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.calibrations.len(), 3);
        for s in r.per_dim.values() {
            assert!(s.mean.abs() < 0.5);
        }
    }

    #[test]
    fn linear_fit_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn metric_names_parse() {
        for m in [
            SweepMetric::CosineUnsigned,
            SweepMetric::CosineSigned,
            SweepMetric::Euclidean,
            SweepMetric::NormalizedEuclidean,
            SweepMetric::Manhattan,
            SweepMetric::Diem,
        ] {
            assert_eq!(m.name().parse::<SweepMetric>().unwrap(), m);
        }
        assert!("chebyshev".parse::<SweepMetric>().is_err());
    }
}
