//! Boxplot summaries, histograms and the hypothesis tests used on simulated
//! metric distributions.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    Empty,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Boxplot-style description of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n − 1) standard deviation; 0 for a single sample.
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl DistributionSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample variance. Zero for fewer than two samples.
pub fn sample_variance(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let m = mean(samples);
    samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (samples.len() - 1) as f64
}

pub fn sample_std(samples: &[f64]) -> f64 {
    sample_variance(samples).sqrt()
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `p·(n−1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn summarize(samples: &[f64]) -> Result<DistributionSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(StatsError::InvalidParameter("sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(summarize_sorted(&sorted))
}

fn summarize_sorted(sorted: &[f64]) -> DistributionSummary {
    let q1 = quantile_sorted(sorted, 0.25);
    let median = quantile_sorted(sorted, 0.5);
    let q3 = quantile_sorted(sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);

    let whisker_low = sorted
        .iter()
        .copied()
        .find(|&x| x >= lo_fence)
        .unwrap_or(sorted[0]);
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&x| x <= hi_fence)
        .unwrap_or(sorted[sorted.len() - 1]);
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&x| x < whisker_low || x > whisker_high)
        .collect();

    DistributionSummary {
        count: sorted.len(),
        mean: mean(sorted),
        std: sample_std(sorted),
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    }
}

/// Equal-width histogram with a density normalized to unit area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub normalized_density: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    /// Center of the most populated bin (first one on ties).
    pub fn mode(&self) -> f64 {
        let (k, _) =
            self.counts.iter().enumerate().fold(
                (0, 0),
                |best, (k, &c)| if c > best.1 { (k, c) } else { best },
            );
        0.5 * (self.bin_edges[k] + self.bin_edges[k + 1])
    }

    /// Quantile estimated by linear interpolation inside the bins.
    pub fn quantile(&self, p: f64) -> f64 {
        let total = self.total() as f64;
        if total == 0.0 {
            return f64::NAN;
        }
        let target = p.clamp(0.0, 1.0) * total;
        let mut acc = 0.0;
        for (k, &c) in self.counts.iter().enumerate() {
            let c = c as f64;
            if c > 0.0 && acc + c >= target {
                let frac = (target - acc) / c;
                return self.bin_edges[k] + frac * (self.bin_edges[k + 1] - self.bin_edges[k]);
            }
            acc += c;
        }
        self.bin_edges[self.bin_edges.len() - 1]
    }
}

/// Streaming counter over a fixed range. Values outside the range are
/// clamped into the edge bins and tallied in `clamped`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCounter {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    clamped: u64,
}

impl BinCounter {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, StatsError> {
        if bins == 0 {
            return Err(StatsError::InvalidParameter("bin count must be ≥ 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(StatsError::InvalidParameter(format!(
                "histogram range must be finite, got [{lo}, {hi}]"
            )));
        }
        let (lo, hi) = widen_degenerate(lo, hi);
        if hi <= lo {
            return Err(StatsError::InvalidParameter(format!(
                "histogram range [{lo}, {hi}] is empty"
            )));
        }
        Ok(BinCounter {
            lo,
            hi,
            counts: vec![0; bins],
            clamped: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn bin_index(&self, x: f64) -> usize {
        let k = self.counts.len();
        if x <= self.lo {
            return 0;
        }
        if x >= self.hi {
            return k - 1;
        }
        let idx = ((x - self.lo) / (self.hi - self.lo) * k as f64) as usize;
        idx.min(k - 1)
    }

    pub fn insert(&mut self, x: f64) {
        if x < self.lo || x > self.hi || x.is_nan() {
            self.clamped += 1;
        }
        let k = self.bin_index(x);
        self.counts[k] += 1;
    }

    pub fn merge(&mut self, other: &BinCounter) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.clamped += other.clamped;
    }

    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn finish(&self) -> Histogram {
        let k = self.counts.len();
        let width = (self.hi - self.lo) / k as f64;
        let mut bin_edges: Vec<f64> = (0..=k).map(|i| self.lo + i as f64 * width).collect();
        bin_edges[k] = self.hi;
        let total = self.total() as f64;
        let normalized_density = self
            .counts
            .iter()
            .zip(bin_edges.windows(2))
            .map(|(&c, e)| {
                if total == 0.0 {
                    0.0
                } else {
                    c as f64 / (total * (e[1] - e[0]))
                }
            })
            .collect();
        Histogram {
            bin_edges,
            counts: self.counts.clone(),
            normalized_density,
        }
    }
}

fn widen_degenerate(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let pad = (1e-9 * lo.abs()).max(0.5);
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Equal-width histogram over `[min, max]` of the sample; the last bin is closed.
pub fn histogram(samples: &[f64], bin_count: usize) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::InvalidParameter(
            "histogram samples must be finite".into(),
        ));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let mut counter = BinCounter::new(lo, hi, bin_count)?;
    samples.iter().for_each(|&x| counter.insert(x));
    Ok(counter.finish())
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at: f64,
    pub rejected: bool,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, reject_at: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            statistic,
            p_value,
            reject_at,
            rejected: p_value < reject_at,
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
///
/// Below λ = 1.18 the alternating series converges slowly with heavy
/// cancellation, so the equivalent Jacobi theta form of the CDF is summed
/// instead. Both series stop once a term falls under 1e-10.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    const TOL: f64 = 1e-10;
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = -std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1.. {
            let odd = (2 * k - 1) as f64;
            let term = (odd * odd * y).exp();
            cdf += term;
            if term < TOL {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        let mut sign = 1.0;
        for k in 1.. {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            q += sign * term;
            if term < TOL {
                break;
            }
            sign = -sign;
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test against `N(mean, std)` fitted to the
/// sample itself; asymptotic p-value at `√n · D`.
pub fn ks_normal_test(samples: &[f64], alpha: f64) -> Result<TestResult, StatsError> {
    if samples.len() < 8 {
        return Err(StatsError::TooFewSamples {
            needed: 8,
            got: samples.len(),
        });
    }
    check_alpha(alpha)?;
    let mu = mean(samples);
    let sigma = sample_std(samples);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(StatsError::Degenerate(format!(
            "standard deviation is {sigma}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf((x - mu) / sigma);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0f64, f64::max);
    Ok(TestResult::new(d, kolmogorov_survival(n.sqrt() * d), alpha))
}

fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Two-sided one-sample z-test of the sample mean against `N(mu0, sigma0²)`.
/// The returned result is evaluated at `alpha = 0.05`; use
/// [`z_test_at`] to choose another level.
pub fn z_test(samples: &[f64], mu0: f64, sigma0: f64) -> Result<TestResult, StatsError> {
    z_test_at(samples, mu0, sigma0, 0.05)
}

pub fn z_test_at(
    samples: &[f64],
    mu0: f64,
    sigma0: f64,
    alpha: f64,
) -> Result<TestResult, StatsError> {
    z_test_from_mean(mean_or_empty(samples)?, samples.len(), mu0, sigma0, alpha)
}

fn mean_or_empty(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        Err(StatsError::Empty)
    } else {
        Ok(mean(samples))
    }
}

/// z-test from a precomputed sample mean, for streaming callers.
pub fn z_test_from_mean(
    sample_mean: f64,
    count: usize,
    mu0: f64,
    sigma0: f64,
    alpha: f64,
) -> Result<TestResult, StatsError> {
    if count < 30 {
        return Err(StatsError::TooFewSamples {
            needed: 30,
            got: count,
        });
    }
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(StatsError::InvalidParameter(format!(
            "reference sigma must be > 0, got {sigma0}"
        )));
    }
    check_alpha(alpha)?;
    let z = (sample_mean - mu0) / (sigma0 / (count as f64).sqrt());
    let p = erfc(z.abs() / std::f64::consts::SQRT_2);
    Ok(TestResult::new(z, p, alpha))
}
