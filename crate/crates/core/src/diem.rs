//! The Dimension Insensitive Euclidean Metric and its calibration.
//!
//! DIEM detrends the Euclidean distance by its expected value under random
//! uniform sampling and rescales it by `range / variance`:
//!
//! ```text
//! DIEM(a, b) = (v_max − v_min) / σ²_ed · (‖a − b‖ − E[d(n)])
//! ```
//!
//! `E[d(n)]` and `σ²_ed` depend on the dimension and the element range, so
//! every DIEM value is taken relative to a [`DiemCalibration`] estimated by
//! Monte Carlo for that `(n, domain)` pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kvdoc::{KvDocument, KvError, KvWriter};
use crate::metrics::{self, CosineConvention, MetricError};
use crate::stats;
use crate::vecgen::{self, DomainSpec, SeedSpec, SignDomain, VecGenError};

pub const DEFAULT_CALIBRATION_TRIALS: usize = 100_000;
pub const MIN_CALIBRATION_TRIALS: usize = 1_000;

/// Orthogonal pairs are accepted only below this |cos|.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

const RANDOM_PAIRS_STREAM: u64 = 0x01;
const ORTHOGONAL_PAIRS_STREAM: u64 = 0x02;

/// Keys of the calibration file, in the order they are written.
pub const CALIBRATION_KEYS: [&str; 13] = [
    "n",
    "v_min",
    "v_max",
    "sign_domain",
    "trials",
    "master_seed",
    "expected_d",
    "expected_d_analytic",
    "var_ed",
    "diem_min",
    "diem_max",
    "diem_orth",
    "sigma_diem",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiemError {
    #[error("need at least {needed} trials, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("calibration is for n={expected}, vectors have n={got}")]
    CalibrationMismatch { expected: usize, got: usize },
    #[error("strategy {strategy:?} is incompatible with domain: {reason}")]
    IncompatibleStrategy {
        strategy: OrthogonalStrategy,
        reason: String,
    },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error(transparent)]
    Domain(#[from] VecGenError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("calibration file: {0}")]
    Format(#[from] KvError),
}

/// Construction used for the orthogonal reference pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrthogonalStrategy {
    /// Split the indices at random; each vector is uniform on its half and
    /// zero on the other. Needs a zero bound so both stay in the box.
    SupportPartition,
    /// Project the second uniform sample onto the orthogonal complement of
    /// the first and restore its original norm.
    GramSchmidt,
}

impl OrthogonalStrategy {
    /// `SupportPartition` when zero is a bound of the domain, else `GramSchmidt`.
    pub fn default_for(domain: &DomainSpec) -> Self {
        if domain.has_zero_bound() {
            OrthogonalStrategy::SupportPartition
        } else {
            OrthogonalStrategy::GramSchmidt
        }
    }
}

/// `√(n/6)·(v_max − v_min)`: upper bound (Jensen) on the expected distance
/// between two uniform random vectors.
pub fn expected_distance_analytic(n: usize, domain: &DomainSpec) -> Result<f64, DiemError> {
    if n == 0 {
        return Err(VecGenError::DimensionTooSmall { got: 0, min: 1 }.into());
    }
    DomainSpec::new(domain.v_min(), domain.v_max(), domain.sign_domain())?;
    Ok((n as f64 / 6.0).sqrt() * domain.range())
}

/// Just the affine map from distance to DIEM: what a calibration needs
/// before its reference values are known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiemScale {
    pub n: usize,
    pub domain: DomainSpec,
    pub expected_d: f64,
    pub var_ed: f64,
}

impl DiemScale {
    /// `(v_max − v_min) / σ²_ed`.
    pub fn factor(&self) -> f64 {
        self.domain.range() / self.var_ed
    }

    pub fn from_distance(&self, d: f64) -> f64 {
        self.factor() * (d - self.expected_d)
    }

    pub fn d_max(&self) -> f64 {
        (self.n as f64).sqrt() * self.domain.range()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiemCalibration {
    n: usize,
    domain: DomainSpec,
    expected_d: f64,
    expected_d_analytic: f64,
    var_ed: f64,
    diem_min: f64,
    diem_max: f64,
    diem_orth: f64,
    sigma_diem: f64,
    trials: usize,
    seed: SeedSpec,
}

fn random_pair_distances(n: usize, domain: &DomainSpec, trials: usize, seed: SeedSpec) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let a = vecgen::sample_uniform(n, domain, seed, 2 * t).expect("n ≥ 1 checked");
            let b = vecgen::sample_uniform(n, domain, seed, 2 * t + 1).expect("n ≥ 1 checked");
            metrics::euclidean_unchecked(&a, &b)
        })
        .collect()
}

/// Estimate the calibration for `(n, domain)` from `trials` random uniform pairs.
pub fn calibrate(
    n: usize,
    domain: &DomainSpec,
    trials: usize,
    seed: SeedSpec,
) -> Result<DiemCalibration, DiemError> {
    calibrate_with_strategy(
        n,
        domain,
        trials,
        seed,
        OrthogonalStrategy::default_for(domain),
    )
}

pub fn calibrate_with_strategy(
    n: usize,
    domain: &DomainSpec,
    trials: usize,
    seed: SeedSpec,
    strategy: OrthogonalStrategy,
) -> Result<DiemCalibration, DiemError> {
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(DiemError::InsufficientSamples {
            needed: MIN_CALIBRATION_TRIALS,
            got: trials,
        });
    }
    let expected_d_analytic = expected_distance_analytic(n, domain)?;

    let distances = random_pair_distances(n, domain, trials, seed.derive(RANDOM_PAIRS_STREAM));
    let expected_d = stats::mean(&distances);
    let var_ed = stats::sample_variance(&distances);
    if !(var_ed > 0.0) {
        return Err(DiemError::InvalidCalibration(
            "distance variance is zero".into(),
        ));
    }
    let scale = DiemScale {
        n,
        domain: *domain,
        expected_d,
        var_ed,
    };
    let diem_samples: Vec<f64> = distances.iter().map(|&d| scale.from_distance(d)).collect();
    let sigma_diem = stats::sample_std(&diem_samples);

    // A single coordinate admits no pair of nonzero orthogonal vectors.
    let diem_orth = if n >= 2 {
        orthogonal_reference(
            &scale,
            strategy,
            trials,
            seed.derive(ORTHOGONAL_PAIRS_STREAM),
        )?
    } else {
        f64::NAN
    };

    Ok(DiemCalibration {
        n,
        domain: *domain,
        expected_d,
        expected_d_analytic,
        var_ed,
        diem_min: -scale.factor() * expected_d,
        diem_max: scale.factor() * (scale.d_max() - expected_d),
        diem_orth,
        sigma_diem,
        trials,
        seed,
    })
}

/// One orthogonal pair for `trial`. Retries internally until
/// `|cos| < ORTHOGONALITY_TOLERANCE` and both vectors are nonzero.
pub fn orthogonal_pair(
    n: usize,
    domain: &DomainSpec,
    strategy: OrthogonalStrategy,
    seed: SeedSpec,
    trial: u64,
) -> Result<(Vec<f64>, Vec<f64>), DiemError> {
    check_strategy(n, domain, strategy)?;
    let mut attempt = 0u64;
    loop {
        // Each retry gets its own substream so results stay order independent.
        let s = seed.derive(attempt);
        let mut rng = s.rng(n, trial);
        let pair = match strategy {
            OrthogonalStrategy::SupportPartition => {
                use rand::Rng;
                let mask: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
                if mask.iter().all(|&m| m) || mask.iter().all(|&m| !m) {
                    attempt += 1;
                    continue;
                }
                let a0 = vecgen::fill_uniform(&mut rng, n, domain);
                let b0 = vecgen::fill_uniform(&mut rng, n, domain);
                let a = a0
                    .iter()
                    .zip(&mask)
                    .map(|(&x, &m)| if m { x } else { 0.0 })
                    .collect();
                let b = b0
                    .iter()
                    .zip(&mask)
                    .map(|(&x, &m)| if m { 0.0 } else { x })
                    .collect();
                (a, b)
            }
            OrthogonalStrategy::GramSchmidt => {
                let a = vecgen::fill_uniform(&mut rng, n, domain);
                let b = vecgen::fill_uniform(&mut rng, n, domain);
                let target = metrics::norm(&b);
                let mut c = b;
                // two passes for numerical orthogonality
                for _ in 0..2 {
                    let aa = metrics::dot(&a, &a);
                    if aa == 0.0 {
                        break;
                    }
                    let proj = metrics::dot(&a, &c) / aa;
                    c.iter_mut().zip(&a).for_each(|(ci, ai)| *ci -= proj * ai);
                }
                let cn = metrics::norm(&c);
                if cn > 0.0 {
                    let k = target / cn;
                    c.iter_mut().for_each(|x| *x *= k);
                }
                (a, c)
            }
        };
        match metrics::cosine_similarity(&pair.0, &pair.1, CosineConvention::Unsigned) {
            Ok(cos) if cos < ORTHOGONALITY_TOLERANCE => return Ok(pair),
            _ => attempt += 1,
        }
    }
}

fn check_strategy(
    n: usize,
    domain: &DomainSpec,
    strategy: OrthogonalStrategy,
) -> Result<(), DiemError> {
    if n < 2 {
        return Err(DiemError::IncompatibleStrategy {
            strategy,
            reason: "orthogonal nonzero pairs need n ≥ 2".into(),
        });
    }
    if strategy == OrthogonalStrategy::SupportPartition && !domain.has_zero_bound() {
        return Err(DiemError::IncompatibleStrategy {
            strategy,
            reason: format!(
                "support partition needs v_min = 0 or v_max = 0, got [{}, {}]",
                domain.v_min(),
                domain.v_max()
            ),
        });
    }
    Ok(())
}

/// Mean DIEM over `trials` orthogonal pairs.
pub fn orthogonal_reference(
    scale: &DiemScale,
    strategy: OrthogonalStrategy,
    trials: usize,
    seed: SeedSpec,
) -> Result<f64, DiemError> {
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(DiemError::InsufficientSamples {
            needed: MIN_CALIBRATION_TRIALS,
            got: trials,
        });
    }
    check_strategy(scale.n, &scale.domain, strategy)?;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (a, b) = orthogonal_pair(scale.n, &scale.domain, strategy, seed, t)?;
            Ok(scale.from_distance(metrics::euclidean_unchecked(&a, &b)))
        })
        .collect::<Result<Vec<f64>, DiemError>>()?;
    Ok(stats::mean(&values))
}

/// DIEM between `a` and `b` under `cal`.
pub fn diem_value(a: &[f64], b: &[f64], cal: &DiemCalibration) -> Result<f64, DiemError> {
    for v in [a, b] {
        if v.len() != cal.n {
            return Err(DiemError::CalibrationMismatch {
                expected: cal.n,
                got: v.len(),
            });
        }
    }
    Ok(cal.from_distance(metrics::euclidean_distance(a, b)?))
}

impl DiemCalibration {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Empirical mean distance between random uniform pairs.
    pub fn expected_d(&self) -> f64 {
        self.expected_d
    }

    pub fn expected_d_analytic(&self) -> f64 {
        self.expected_d_analytic
    }

    pub fn var_ed(&self) -> f64 {
        self.var_ed
    }

    pub fn diem_min(&self) -> f64 {
        self.diem_min
    }

    pub fn diem_max(&self) -> f64 {
        self.diem_max
    }

    /// Mean DIEM of orthogonal pairs; NaN for n = 1.
    pub fn diem_orth(&self) -> f64 {
        self.diem_orth
    }

    pub fn sigma_diem(&self) -> f64 {
        self.sigma_diem
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    pub fn scale(&self) -> DiemScale {
        DiemScale {
            n: self.n,
            domain: self.domain,
            expected_d: self.expected_d,
            var_ed: self.var_ed,
        }
    }

    pub fn from_distance(&self, d: f64) -> f64 {
        self.scale().from_distance(d)
    }

    /// Recompute the bounds from the stored `expected_d` and `var_ed` and
    /// compare against the stored bounds at `rel_tol`.
    pub fn check_bounds(&self, rel_tol: f64) -> Result<(), DiemError> {
        let scale = self.scale();
        let min = -scale.factor() * self.expected_d;
        let max = scale.factor() * (scale.d_max() - self.expected_d);
        for (name, stored, recomputed) in [
            ("diem_min", self.diem_min, min),
            ("diem_max", self.diem_max, max),
        ] {
            if (stored - recomputed).abs() > rel_tol * recomputed.abs() {
                return Err(DiemError::InvalidCalibration(format!(
                    "{name} = {stored} but fields imply {recomputed}"
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), DiemError> {
        let bad = |msg: String| Err(DiemError::InvalidCalibration(msg));
        if self.n == 0 {
            return bad("n must be ≥ 1".into());
        }
        if !(self.var_ed > 0.0) || !self.var_ed.is_finite() {
            return bad(format!("var_ed must be > 0, got {}", self.var_ed));
        }
        let d_max = (self.n as f64).sqrt() * self.domain.range();
        if !(self.expected_d > 0.0 && self.expected_d <= d_max) {
            return bad(format!(
                "expected_d = {} outside (0, {d_max}]",
                self.expected_d
            ));
        }
        if !(self.diem_min < 0.0 && self.diem_max > 0.0) {
            return bad("need diem_min < 0 < diem_max".into());
        }
        if !(self.sigma_diem > 0.0) {
            return bad(format!("sigma_diem must be > 0, got {}", self.sigma_diem));
        }
        self.check_bounds(1e-9)
    }

    /// Serialize as the flat calibration document.
    pub fn to_kv_string(&self) -> String {
        let mut w = KvWriter::new();
        w.str("n", self.n)
            .real("v_min", self.domain.v_min())
            .real("v_max", self.domain.v_max())
            .str("sign_domain", self.domain.sign_domain())
            .str("trials", self.trials)
            .str("master_seed", self.seed.master_seed)
            .real("expected_d", self.expected_d)
            .real("expected_d_analytic", self.expected_d_analytic)
            .real("var_ed", self.var_ed)
            .real("diem_min", self.diem_min)
            .real("diem_max", self.diem_max)
            .real("diem_orth", self.diem_orth)
            .real("sigma_diem", self.sigma_diem);
        w.finish()
    }

    pub fn from_kv_str(text: &str) -> Result<Self, DiemError> {
        let doc = KvDocument::parse(text)?;
        let sign: SignDomain = doc.require("sign_domain")?.parse()?;
        let domain = DomainSpec::new(doc.parse_value("v_min")?, doc.parse_value("v_max")?, sign)?;
        let cal = DiemCalibration {
            n: doc.parse_value("n")?,
            domain,
            expected_d: doc.parse_value("expected_d")?,
            expected_d_analytic: doc.parse_value("expected_d_analytic")?,
            var_ed: doc.parse_value("var_ed")?,
            diem_min: doc.parse_value("diem_min")?,
            diem_max: doc.parse_value("diem_max")?,
            diem_orth: doc.parse_value("diem_orth")?,
            sigma_diem: doc.parse_value("sigma_diem")?,
            trials: doc.parse_value("trials")?,
            seed: SeedSpec::new(doc.parse_value("master_seed")?),
        };
        cal.validate()?;
        Ok(cal)
    }
}
