//! Seedable random vector generation.
//!
//! Every vector is a pure function of `(master_seed, dimension, trial)`: the
//! triple is used directly as the key of a ChaCha8 stream, so trials can be
//! evaluated in any order, on any number of threads, and still reproduce
//! bit-for-bit.

use std::fmt;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VecGenError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid sampling distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension {got} is below the minimum of {min} for this sampler")]
    DimensionTooSmall { got: usize, min: usize },
}

/// Sign region of the sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignDomain {
    RealPositive,
    RealNegative,
    AllReal,
}

impl SignDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            SignDomain::RealPositive => "positive",
            SignDomain::RealNegative => "negative",
            SignDomain::AllReal => "all",
        }
    }

    /// Default element bounds for this sign region: `(0,1)`, `(-1,0)` or `(-1,1)`.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            SignDomain::RealPositive => (0.0, 1.0),
            SignDomain::RealNegative => (-1.0, 0.0),
            SignDomain::AllReal => (-1.0, 1.0),
        }
    }

    /// Classify a coordinate range by sign.
    pub fn classify(v_min: f64, v_max: f64) -> SignDomain {
        if v_min >= 0.0 {
            SignDomain::RealPositive
        } else if v_max <= 0.0 {
            SignDomain::RealNegative
        } else {
            SignDomain::AllReal
        }
    }
}

impl fmt::Display for SignDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignDomain {
    type Err = VecGenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "+" => Ok(SignDomain::RealPositive),
            "negative" | "neg" | "-" => Ok(SignDomain::RealNegative),
            "all" | "real" | "allreal" => Ok(SignDomain::AllReal),
            other => Err(VecGenError::InvalidDomain(format!(
                "unknown sign domain `{other}` (expected positive, negative or all)"
            ))),
        }
    }
}

/// Element bounds `[v_min, v_max]` together with their sign region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    v_min: f64,
    v_max: f64,
    sign_domain: SignDomain,
}

impl DomainSpec {
    pub fn new(v_min: f64, v_max: f64, sign_domain: SignDomain) -> Result<Self, VecGenError> {
        if !v_min.is_finite() || !v_max.is_finite() {
            return Err(VecGenError::InvalidDomain(format!(
                "bounds must be finite, got [{v_min}, {v_max}]"
            )));
        }
        if v_max <= v_min {
            return Err(VecGenError::InvalidDomain(format!(
                "v_max ({v_max}) must exceed v_min ({v_min})"
            )));
        }
        let ok = match sign_domain {
            SignDomain::RealPositive => v_min >= 0.0,
            SignDomain::RealNegative => v_max <= 0.0,
            SignDomain::AllReal => v_min < 0.0 && v_max > 0.0,
        };
        if !ok {
            return Err(VecGenError::InvalidDomain(format!(
                "bounds [{v_min}, {v_max}] are inconsistent with sign domain `{sign_domain}`"
            )));
        }
        Ok(DomainSpec {
            v_min,
            v_max,
            sign_domain,
        })
    }

    /// The standard box for a sign region.
    pub fn standard(sign_domain: SignDomain) -> Self {
        let (lo, hi) = sign_domain.default_bounds();
        DomainSpec {
            v_min: lo,
            v_max: hi,
            sign_domain,
        }
    }

    pub fn positive() -> Self {
        Self::standard(SignDomain::RealPositive)
    }

    pub fn negative() -> Self {
        Self::standard(SignDomain::RealNegative)
    }

    pub fn all_real() -> Self {
        Self::standard(SignDomain::AllReal)
    }

    /// Domain spanning `[v_min, v_max]` with the sign tag inferred from the bounds.
    pub fn from_bounds(v_min: f64, v_max: f64) -> Result<Self, VecGenError> {
        Self::new(v_min, v_max, SignDomain::classify(v_min, v_max))
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn sign_domain(&self) -> SignDomain {
        self.sign_domain
    }

    /// `v_max - v_min`.
    pub fn range(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// Whether zero is one of the bounds, so vectors may carry exact zeros
    /// without leaving the box.
    pub fn has_zero_bound(&self) -> bool {
        self.v_min == 0.0 || self.v_max == 0.0
    }
}

/// Law of the individual coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplingDistribution {
    Uniform,
    Gaussian { mean: f64, std: f64 },
    UnitSphere,
}

impl SamplingDistribution {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self, VecGenError> {
        if !(std > 0.0 && std.is_finite()) || !mean.is_finite() {
            return Err(VecGenError::InvalidDistribution(format!(
                "gaussian requires finite mean and std > 0, got mean={mean}, std={std}"
            )));
        }
        Ok(SamplingDistribution::Gaussian { mean, std })
    }

    /// Gaussian parameters matched to a sign region: `N(0.5, 0.3)`,
    /// `N(-0.5, 0.3)` and `N(0, 0.6)`.
    pub fn gaussian_default(sign_domain: SignDomain) -> Self {
        match sign_domain {
            SignDomain::RealPositive => SamplingDistribution::Gaussian {
                mean: 0.5,
                std: 0.3,
            },
            SignDomain::RealNegative => SamplingDistribution::Gaussian {
                mean: -0.5,
                std: 0.3,
            },
            SignDomain::AllReal => SamplingDistribution::Gaussian {
                mean: 0.0,
                std: 0.6,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplingDistribution::Uniform => "uniform",
            SamplingDistribution::Gaussian { .. } => "gaussian",
            SamplingDistribution::UnitSphere => "sphere",
        }
    }

    pub fn validate(&self) -> Result<(), VecGenError> {
        if let SamplingDistribution::Gaussian { mean, std } = *self {
            Self::gaussian(mean, std)?;
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed plus the rule deriving one generator per `(dimension, trial)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// Generator for one `(dimension, trial)` cell. The three integers form
    /// the ChaCha key directly, so distinct cells never share a stream.
    pub fn rng(&self, dim: usize, trial: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(dim as u64).to_le_bytes());
        key[16..24].copy_from_slice(&trial.to_le_bytes());
        key[24..].copy_from_slice(b"diemvgen");
        ChaCha8Rng::from_seed(key)
    }

    /// Independent seed for a sub-computation identified by `purpose`.
    pub fn derive(&self, purpose: u64) -> SeedSpec {
        SeedSpec::new(splitmix64(self.master_seed ^ splitmix64(purpose)))
    }
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::new(0)
    }
}

fn check_dim(n: usize, min: usize) -> Result<(), VecGenError> {
    if n < min {
        Err(VecGenError::DimensionTooSmall { got: n, min })
    } else {
        Ok(())
    }
}

/// `n` uniform coordinates drawn from an existing generator.
pub fn fill_uniform<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, domain: &DomainSpec) -> Vec<f64> {
    let dist = Uniform::new_inclusive(domain.v_min, domain.v_max)
        .expect("DomainSpec guarantees finite, ordered bounds");
    (0..n)
        .map(|_| dist.sample(rng).clamp(domain.v_min, domain.v_max))
        .collect()
}

/// Coordinates i.i.d. `U(v_min, v_max)`.
pub fn sample_uniform(
    n: usize,
    domain: &DomainSpec,
    seed: SeedSpec,
    trial: u64,
) -> Result<Vec<f64>, VecGenError> {
    check_dim(n, 1)?;
    Ok(fill_uniform(&mut seed.rng(n, trial), n, domain))
}

/// Coordinates i.i.d. normal. The domain is a label only; samples are not clipped.
pub fn sample_gaussian(
    n: usize,
    params: SamplingDistribution,
    _domain: &DomainSpec,
    seed: SeedSpec,
    trial: u64,
) -> Result<Vec<f64>, VecGenError> {
    check_dim(n, 1)?;
    let (mean, std) = match params {
        SamplingDistribution::Gaussian { mean, std } => (mean, std),
        other => {
            return Err(VecGenError::InvalidDistribution(format!(
                "sample_gaussian called with {}",
                other.name()
            )))
        }
    };
    SamplingDistribution::gaussian(mean, std)?;
    let normal =
        Normal::new(mean, std).map_err(|e| VecGenError::InvalidDistribution(e.to_string()))?;
    let mut rng = seed.rng(n, trial);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Point on the unit `(n-1)`-sphere.
///
/// For `AllReal` this is the Muller construction (normalized standard normal
/// vector), which is uniform on the sphere. Sign-restricted domains draw
/// from the uniform box first and normalize, keeping every coordinate's sign.
pub fn sample_unit_sphere(
    n: usize,
    domain: &DomainSpec,
    seed: SeedSpec,
    trial: u64,
) -> Result<Vec<f64>, VecGenError> {
    check_dim(n, 2)?;
    let mut rng = seed.rng(n, trial);
    loop {
        let mut v: Vec<f64> = match domain.sign_domain {
            SignDomain::AllReal => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
            SignDomain::RealPositive | SignDomain::RealNegative => {
                fill_uniform(&mut rng, n, domain)
            }
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Zero (or subnormal) draws cannot be projected; redraw from the same stream.
        if norm > f64::MIN_POSITIVE && norm.is_finite() {
            v.iter_mut().for_each(|x| *x /= norm);
            return Ok(v);
        }
    }
}

/// Dispatch on the sampling distribution.
pub fn sample(
    n: usize,
    dist: &SamplingDistribution,
    domain: &DomainSpec,
    seed: SeedSpec,
    trial: u64,
) -> Result<Vec<f64>, VecGenError> {
    match dist {
        SamplingDistribution::Uniform => sample_uniform(n, domain, seed, trial),
        SamplingDistribution::Gaussian { .. } => sample_gaussian(n, *dist, domain, seed, trial),
        SamplingDistribution::UnitSphere => sample_unit_sphere(n, domain, seed, trial),
    }
}
