//! Embedding collections: loading, writing and batch comparison.
//!
//! Two input layouts are accepted:
//!
//! - `CsvRows`: one record per line, `id,v1,v2,…,vn`
//! - `JsonLines`: one object per line, `{"id": "...", "vec": [v1, …, vn]}`
//!
//! Vectors are compared exactly as stored. Nothing here normalizes them.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diem::{self, DiemCalibration, DiemError};
use crate::kvdoc::{fmt_real, KvWriter};
use crate::metrics::{self, CosineConvention, MetricError, Vector};
use crate::stats::{self, BinCounter, DistributionSummary, Histogram, StatsError, TestResult};
use crate::vecgen::{DomainSpec, SeedSpec, VecGenError};

pub const DEFAULT_BINS: usize = 100;
/// All-pairs runs up to this many values also keep them for exact quartiles.
pub const DEFAULT_EXACT_SUMMARY_LIMIT: usize = 2_000_000;

const ROW_BLOCK: usize = 16;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: expected {expected} coordinates, found {got}")]
    DimensionMismatch {
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("collection is empty")]
    Empty,
    #[error("collections differ: {0}")]
    SizeMismatch(String),
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Diem(#[from] DiemError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Domain(#[from] VecGenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingFormat {
    CsvRows,
    JsonLines,
}

impl EmbeddingFormat {
    /// `.jsonl`, `.ndjson` and `.json` are JSON lines; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("jsonl") | Some("ndjson") | Some("json") => EmbeddingFormat::JsonLines,
            _ => EmbeddingFormat::CsvRows,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EmbeddingFormat::CsvRows),
            "jsonl" | "json" => Ok(EmbeddingFormat::JsonLines),
            other => Err(EmbedError::Parse {
                line: 0,
                message: format!("unknown format `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vec: Vector,
}

/// Ordered records sharing one dimension, ids unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    records: Vec<EmbeddingRecord>,
    dim: usize,
}

impl Collection {
    pub fn new(records: Vec<EmbeddingRecord>) -> Result<Self, EmbedError> {
        let mut builder = CollectionBuilder::default();
        for (i, r) in records.into_iter().enumerate() {
            builder.push(i as u64 + 1, r.id, r.vec)?;
        }
        builder.finish()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest and largest coordinate over all records.
    pub fn coordinate_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .flat_map(|r| r.vec.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            })
    }

    /// Copy with every vector scaled to unit norm.
    pub fn normalized(&self) -> Result<Collection, EmbedError> {
        let records = self
            .records
            .iter()
            .map(|r| {
                let n = r.vec.norm();
                if n == 0.0 {
                    return Err(EmbedError::Metric(MetricError::ZeroNorm));
                }
                Ok(EmbeddingRecord {
                    id: r.id.clone(),
                    vec: Vector::new(r.vec.iter().map(|x| x / n).collect())?,
                })
            })
            .collect::<Result<Vec<_>, EmbedError>>()?;
        Ok(Collection {
            records,
            dim: self.dim,
        })
    }
}

#[derive(Default)]
struct CollectionBuilder {
    records: Vec<EmbeddingRecord>,
    ids: std::collections::HashSet<String>,
    dim: Option<usize>,
}

impl CollectionBuilder {
    fn push(&mut self, line: u64, id: String, vec: Vector) -> Result<(), EmbedError> {
        if id.contains(['\n', '\r']) {
            return Err(EmbedError::Parse {
                line,
                message: "id contains a line break".into(),
            });
        }
        match self.dim {
            None => self.dim = Some(vec.len()),
            Some(expected) if expected != vec.len() => {
                return Err(EmbedError::DimensionMismatch {
                    line,
                    expected,
                    got: vec.len(),
                })
            }
            _ => {}
        }
        if !self.ids.insert(id.clone()) {
            return Err(EmbedError::DuplicateId { line, id });
        }
        self.records.push(EmbeddingRecord { id, vec });
        Ok(())
    }

    fn finish(self) -> Result<Collection, EmbedError> {
        match self.dim {
            Some(dim) => Ok(Collection {
                records: self.records,
                dim,
            }),
            None => Err(EmbedError::Empty),
        }
    }
}

fn vector_at(line: u64, coords: Vec<f64>) -> Result<Vector, EmbedError> {
    Vector::new(coords).map_err(|e| EmbedError::Parse {
        line,
        message: match e {
            MetricError::NonFinite { index, value } => {
                format!("non-finite value {value} in coordinate {}", index + 1)
            }
            other => other.to_string(),
        },
    })
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    vec: Vec<f64>,
}

#[derive(Serialize)]
struct JsonRecordRef<'a> {
    id: &'a str,
    vec: &'a [f64],
}

/// Parse a collection from any reader.
pub fn read_collection<R: Read>(
    reader: R,
    format: EmbeddingFormat,
) -> Result<Collection, EmbedError> {
    let mut builder = CollectionBuilder::default();
    match format {
        EmbeddingFormat::CsvRows => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(reader);
            for row in rdr.records() {
                let row = row.map_err(|e| EmbedError::Parse {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })?;
                let line = row.position().map_or(0, |p| p.line());
                let mut fields = row.iter();
                let id = fields.next().unwrap_or_default().to_string();
                let coords = fields
                    .enumerate()
                    .map(|(k, f)| {
                        f.parse::<f64>().map_err(|_| EmbedError::Parse {
                            line,
                            message: format!("cannot parse `{f}` in coordinate {}", k + 1),
                        })
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                builder.push(line, id, vector_at(line, coords)?)?;
            }
        }
        EmbeddingFormat::JsonLines => {
            for (i, text) in BufReader::new(reader).lines().enumerate() {
                let line = i as u64 + 1;
                let text = text.map_err(|e| EmbedError::Parse {
                    line,
                    message: e.to_string(),
                })?;
                if text.trim().is_empty() {
                    continue;
                }
                let rec: JsonRecord =
                    serde_json::from_str(&text).map_err(|e| EmbedError::Parse {
                        line,
                        message: e.to_string(),
                    })?;
                builder.push(line, rec.id, vector_at(line, rec.vec)?)?;
            }
        }
    }
    builder.finish()
}

pub fn load_collection(path: &Path, format: EmbeddingFormat) -> Result<Collection, EmbedError> {
    let file = File::open(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_collection(file, format)
}

/// Write a collection with reals at 17 significant digits.
pub fn write_collection_to<W: Write>(
    writer: W,
    collection: &Collection,
    format: EmbeddingFormat,
) -> std::io::Result<()> {
    match format {
        EmbeddingFormat::CsvRows => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
            for r in collection.records() {
                let mut row = Vec::with_capacity(r.vec.len() + 1);
                row.push(r.id.clone());
                row.extend(r.vec.iter().map(|&x| fmt_real(x)));
                w.write_record(&row)?;
            }
            w.flush()
        }
        EmbeddingFormat::JsonLines => {
            let mut w = BufWriter::new(writer);
            for r in collection.records() {
                let line = serde_json::to_string(&JsonRecordRef {
                    id: &r.id,
                    vec: r.vec.as_slice(),
                })?;
                writeln!(w, "{line}")?;
            }
            w.flush()
        }
    }
}

pub fn write_collection(
    path: &Path,
    collection: &Collection,
    format: EmbeddingFormat,
) -> Result<(), EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_collection_to(file, collection, format).map_err(io_err)
}

/// Calibration over the collections' observed coordinate range.
pub fn calibrate_for(
    collections: &[&Collection],
    trials: usize,
    seed: SeedSpec,
) -> Result<DiemCalibration, EmbedError> {
    let first = collections.first().ok_or(EmbedError::Empty)?;
    let (lo, hi) = collections
        .iter()
        .map(|c| c.coordinate_range())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        });
    let domain = DomainSpec::from_bounds(lo, hi)?;
    Ok(diem::calibrate(first.dim(), &domain, trials, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonMode {
    Pairwise,
    AllPairs,
}

impl ComparisonMode {
    pub fn name(self) -> &'static str {
        match self {
            ComparisonMode::Pairwise => "pairwise",
            ComparisonMode::AllPairs => "allpairs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonMetric {
    CosineUnsigned,
    Diem,
}

impl ComparisonMetric {
    pub fn name(self) -> &'static str {
        match self {
            ComparisonMetric::CosineUnsigned => "cosine",
            ComparisonMetric::Diem => "diem",
        }
    }

    /// Lower DIEM means more similar; higher cosine means more similar.
    fn more_similar(self, a: f64, b: f64) -> bool {
        match self {
            ComparisonMetric::CosineUnsigned => a > b,
            ComparisonMetric::Diem => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub left_id: String,
    pub right_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub most_similar: Extreme,
    pub most_dissimilar: Extreme,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub bins: usize,
    pub exact_summary_limit: usize,
    /// `(mu0, sigma0)` of the reference distribution for the z-test.
    pub z_reference: Option<(f64, f64)>,
    pub alpha: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            bins: DEFAULT_BINS,
            exact_summary_limit: DEFAULT_EXACT_SUMMARY_LIMIT,
            z_reference: None,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub mode: ComparisonMode,
    pub metric: ComparisonMetric,
    pub count: u64,
    pub histogram: Histogram,
    pub summary: DistributionSummary,
    /// False when quartiles and whiskers were estimated from the histogram.
    pub summary_exact: bool,
    pub extremes: Extremes,
    pub z_reference: Option<(f64, f64)>,
    pub z: Option<TestResult>,
    /// Values that fell outside the histogram range.
    pub clamped: u64,
    pub calibration: Option<DiemCalibration>,
}

/// Pair position plus value; positions break ties toward the earliest pair.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PairValue {
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Debug, Clone)]
struct Accumulator {
    metric: ComparisonMetric,
    bins: BinCounter,
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
    most_similar: Option<PairValue>,
    most_dissimilar: Option<PairValue>,
    values: Option<Vec<f64>>,
}

impl Accumulator {
    fn new(metric: ComparisonMetric, bins: &BinCounter, keep_values: bool) -> Self {
        Accumulator {
            metric,
            bins: bins.clone(),
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            most_similar: None,
            most_dissimilar: None,
            values: keep_values.then(Vec::new),
        }
    }

    fn push(&mut self, pv: PairValue) {
        let x = pv.value;
        self.bins.insert(x);
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        if self
            .most_similar
            .is_none_or(|b| self.metric.more_similar(x, b.value))
        {
            self.most_similar = Some(pv);
        }
        if self
            .most_dissimilar
            .is_none_or(|b| self.metric.more_similar(b.value, x))
        {
            self.most_dissimilar = Some(pv);
        }
        if let Some(v) = self.values.as_mut() {
            v.push(x);
        }
    }

    /// Merge `other`, which covers pairs strictly after those in `self`.
    fn merge(&mut self, other: Accumulator) {
        if other.count == 0 {
            return;
        }
        self.bins.merge(&other.bins);
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n as f64;
        self.count = n;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        if let Some(o) = other.most_similar {
            if self
                .most_similar
                .is_none_or(|b| self.metric.more_similar(o.value, b.value))
            {
                self.most_similar = Some(o);
            }
        }
        if let Some(o) = other.most_dissimilar {
            if self
                .most_dissimilar
                .is_none_or(|b| self.metric.more_similar(b.value, o.value))
            {
                self.most_dissimilar = Some(o);
            }
        }
        if let (Some(a), Some(b)) = (self.values.as_mut(), other.values) {
            a.extend(b);
        }
    }
}

fn metric_range(metric: ComparisonMetric, cal: Option<&DiemCalibration>) -> (f64, f64) {
    match (metric, cal) {
        (ComparisonMetric::Diem, Some(c)) => (c.diem_min(), c.diem_max()),
        _ => (0.0, 1.0),
    }
}

fn check_calibration(
    metric: ComparisonMetric,
    dim: usize,
    cal: Option<&DiemCalibration>,
) -> Result<(), EmbedError> {
    if metric == ComparisonMetric::Diem {
        let cal = cal.ok_or_else(|| {
            DiemError::InvalidCalibration("DIEM comparison requires a calibration".into())
        })?;
        if cal.n() != dim {
            return Err(DiemError::CalibrationMismatch {
                expected: cal.n(),
                got: dim,
            }
            .into());
        }
    }
    Ok(())
}

fn pair_metric(
    metric: ComparisonMetric,
    a: &[f64],
    b: &[f64],
    cal: Option<&DiemCalibration>,
) -> Result<f64, EmbedError> {
    Ok(match metric {
        ComparisonMetric::CosineUnsigned => {
            metrics::cosine_similarity(a, b, CosineConvention::Unsigned)?
        }
        ComparisonMetric::Diem => diem::diem_value(a, b, cal.expect("checked"))?,
    })
}

fn assemble(
    mode: ComparisonMode,
    metric: ComparisonMetric,
    acc: Accumulator,
    id_of: impl Fn(usize, usize) -> (String, String),
    options: &CompareOptions,
    cal: Option<&DiemCalibration>,
) -> Result<ComparisonReport, EmbedError> {
    let histogram = acc.bins.finish();
    let std = if acc.count > 1 {
        (acc.m2 / (acc.count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let (summary, summary_exact) = match acc.values {
        Some(values) => {
            let mut s = stats::summarize(&values)?;
            // keep the streamed moments so both paths agree bit for bit
            s.mean = acc.mean;
            s.std = std;
            (s, true)
        }
        None => (
            approximate_summary(&histogram, acc.count, acc.mean, std, acc.min, acc.max),
            false,
        ),
    };
    let extreme = |pv: PairValue| {
        let (left_id, right_id) = id_of(pv.i, pv.j);
        Extreme {
            left_id,
            right_id,
            value: pv.value,
        }
    };
    let extremes = Extremes {
        most_similar: extreme(acc.most_similar.ok_or(EmbedError::Empty)?),
        most_dissimilar: extreme(acc.most_dissimilar.ok_or(EmbedError::Empty)?),
    };
    let z = options
        .z_reference
        .map(|(mu0, sigma0)| {
            stats::z_test_from_mean(acc.mean, acc.count as usize, mu0, sigma0, options.alpha)
        })
        .transpose()?;
    Ok(ComparisonReport {
        mode,
        metric,
        count: acc.count,
        clamped: acc.bins.clamped(),
        histogram,
        summary,
        summary_exact,
        extremes,
        z_reference: options.z_reference,
        z,
        calibration: cal.cloned(),
    })
}

fn approximate_summary(
    h: &Histogram,
    count: u64,
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
) -> DistributionSummary {
    let q1 = h.quantile(0.25).clamp(min, max);
    let median = h.quantile(0.5).clamp(min, max);
    let q3 = h.quantile(0.75).clamp(min, max);
    let iqr = q3 - q1;
    DistributionSummary {
        count: count as usize,
        mean,
        std,
        median,
        q1,
        q3,
        whisker_low: (q1 - 1.5 * iqr).max(min),
        whisker_high: (q3 + 1.5 * iqr).min(max),
        outliers: Vec::new(),
        min,
        max,
    }
}

/// Compare `left[k]` with `right[k]` for every index.
pub fn compare_pairwise(
    left: &Collection,
    right: &Collection,
    metric: ComparisonMetric,
    cal: Option<&DiemCalibration>,
    options: &CompareOptions,
) -> Result<ComparisonReport, EmbedError> {
    if left.len() != right.len() {
        return Err(EmbedError::SizeMismatch(format!(
            "{} records vs {}",
            left.len(),
            right.len()
        )));
    }
    if left.dim() != right.dim() {
        return Err(EmbedError::SizeMismatch(format!(
            "dimension {} vs {}",
            left.dim(),
            right.dim()
        )));
    }
    check_calibration(metric, left.dim(), cal)?;
    let (lo, hi) = metric_range(metric, cal);
    let bins = BinCounter::new(lo, hi, options.bins)?;

    let values = left
        .records()
        .par_iter()
        .zip(right.records().par_iter())
        .map(|(a, b)| pair_metric(metric, &a.vec, &b.vec, cal))
        .collect::<Result<Vec<f64>, EmbedError>>()?;
    let mut acc = Accumulator::new(metric, &bins, true);
    for (k, &value) in values.iter().enumerate() {
        acc.push(PairValue { i: k, j: k, value });
    }
    assemble(
        ComparisonMode::Pairwise,
        metric,
        acc,
        |i, j| (left.records()[i].id.clone(), right.records()[j].id.clone()),
        options,
        cal,
    )
}

/// Compare every unordered pair `(i, j)`, `i < j`. Memory is O(bins) unless
/// the pair count is within `options.exact_summary_limit`.
pub fn compare_all_pairs(
    records: &Collection,
    metric: ComparisonMetric,
    cal: Option<&DiemCalibration>,
    options: &CompareOptions,
) -> Result<ComparisonReport, EmbedError> {
    let m = records.len();
    if m < 2 {
        return Err(EmbedError::TooFewRecords { needed: 2, got: m });
    }
    check_calibration(metric, records.dim(), cal)?;
    let (lo, hi) = metric_range(metric, cal);
    let bins = BinCounter::new(lo, hi, options.bins)?;
    let total = m * (m - 1) / 2;
    let keep = total <= options.exact_summary_limit;
    let recs = records.records();

    let blocks: Vec<Accumulator> = (0..m.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|blk| {
            let mut acc = Accumulator::new(metric, &bins, keep);
            for i in blk * ROW_BLOCK..((blk + 1) * ROW_BLOCK).min(m) {
                for j in i + 1..m {
                    let value = pair_metric(metric, &recs[i].vec, &recs[j].vec, cal)?;
                    acc.push(PairValue { i, j, value });
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, EmbedError>>()?;

    // Sequential merge in row order keeps the result schedule independent.
    let mut acc = Accumulator::new(metric, &bins, keep);
    for b in blocks {
        acc.merge(b);
    }
    assemble(
        ComparisonMode::AllPairs,
        metric,
        acc,
        |i, j| (recs[i].id.clone(), recs[j].id.clone()),
        options,
        cal,
    )
}

/// All-pairs values in `(i, j)` lexicographic order, fully materialized.
pub fn all_pair_values(
    records: &Collection,
    metric: ComparisonMetric,
    cal: Option<&DiemCalibration>,
) -> Result<Vec<f64>, EmbedError> {
    check_calibration(metric, records.dim(), cal)?;
    let recs = records.records();
    let mut out = Vec::with_capacity(recs.len() * recs.len().saturating_sub(1) / 2);
    for i in 0..recs.len() {
        for j in i + 1..recs.len() {
            out.push(pair_metric(metric, &recs[i].vec, &recs[j].vec, cal)?);
        }
    }
    Ok(out)
}

impl ComparisonReport {
    /// Serialize as a flat key-value document.
    pub fn to_kv_string(&self) -> String {
        let mut w = KvWriter::new();
        let s = &self.summary;
        w.str("mode", self.mode.name())
            .str("metric", self.metric.name())
            .str("count", self.count)
            .str("clamped", self.clamped)
            .str("summary_exact", self.summary_exact)
            .real("mean", s.mean)
            .real("std", s.std)
            .real("median", s.median)
            .real("q1", s.q1)
            .real("q3", s.q3)
            .real("whisker_low", s.whisker_low)
            .real("whisker_high", s.whisker_high)
            .real("min", s.min)
            .real("max", s.max)
            .str("outlier_count", s.outliers.len())
            .str("most_similar_left", &self.extremes.most_similar.left_id)
            .str("most_similar_right", &self.extremes.most_similar.right_id)
            .real("most_similar_value", self.extremes.most_similar.value)
            .str(
                "most_dissimilar_left",
                &self.extremes.most_dissimilar.left_id,
            )
            .str(
                "most_dissimilar_right",
                &self.extremes.most_dissimilar.right_id,
            )
            .real("most_dissimilar_value", self.extremes.most_dissimilar.value)
            .real("histogram_mode", self.histogram.mode());
        if let Some(cal) = &self.calibration {
            w.str("calibration_n", cal.n())
                .real("calibration_v_min", cal.domain().v_min())
                .real("calibration_v_max", cal.domain().v_max())
                .real("calibration_expected_d", cal.expected_d())
                .real("calibration_var_ed", cal.var_ed())
                .real("calibration_sigma_diem", cal.sigma_diem());
        }
        if let (Some((mu0, sigma0)), Some(z)) = (self.z_reference, self.z) {
            w.real("z_mu0", mu0)
                .real("z_sigma0", sigma0)
                .real("z_statistic", z.statistic)
                .real("z_p_value", z.p_value)
                .real("z_alpha", z.reject_at)
                .str("z_rejected", z.rejected);
        }
        w.reals("bin_edges", &self.histogram.bin_edges)
            .ints("counts", &self.histogram.counts)
            .reals("density", &self.histogram.normalized_density);
        w.finish()
    }
}
