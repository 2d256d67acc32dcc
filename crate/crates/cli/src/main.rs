use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use diem_core::diem::{self, DEFAULT_CALIBRATION_TRIALS};
use diem_core::embedio::{
    self, Collection, CompareOptions, ComparisonMetric, EmbedError, EmbeddingFormat,
};
use diem_core::kvdoc::fmt_real;
use diem_core::simulation::{self, SimulationError, SweepConfig, SweepMetric};
use diem_core::{
    DiemCalibration, DiemError, DomainSpec, SamplingDistribution, SeedSpec, SignDomain,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<DiemError> for CliError {
    fn from(e: DiemError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diem",
    version,
    about = "Dimension-insensitive Euclidean metric toolkit"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "DIEM_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate E[d], variance and DIEM bounds for one dimension and range.
    Calibrate(CalibrateArgs),
    /// Compare records of two files index by index.
    Compare(CompareArgs),
    /// Metric distribution per dimension for random vector pairs.
    Sweep(SweepArgs),
    /// KS normality test of Euclidean distances for small dimensions.
    Normality(NormalityArgs),
    /// Pairwise or all-pairs comparison of embedding collections.
    Embeddings(EmbeddingsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Positive,
    Negative,
    All,
}

impl From<DomainArg> for SignDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Positive => SignDomain::RealPositive,
            DomainArg::Negative => SignDomain::RealNegative,
            DomainArg::All => SignDomain::AllReal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
    Sphere,
}

fn sampling(dist: DistArg, sign: SignDomain) -> SamplingDistribution {
    match dist {
        DistArg::Uniform => SamplingDistribution::Uniform,
        DistArg::Gaussian => SamplingDistribution::gaussian_default(sign),
        DistArg::Sphere => SamplingDistribution::UnitSphere,
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Pairwise,
    Allpairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedMetricArg {
    Cosine,
    Diem,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_negative_numbers = true)]
    vmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    vmax: Option<f64>,
    #[arg(long, value_enum, default_value = "positive")]
    domain: DomainArg,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_TRIALS)]
    trials: usize,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// cosine, cosine-signed, euclid, norm-euclid, manhattan or diem.
    #[arg(long, default_value = "cosine")]
    metric: String,
    /// Calibration file, required for diem.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Input layout (default: from file extension).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// cosine, cosine-signed, euclid, norm-euclid, manhattan or diem.
    #[arg(long)]
    metric: String,
    #[arg(long, value_enum, default_value = "positive")]
    domain: DomainArg,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    /// `2,12,22`, `2..12` or `12..102:10`.
    #[arg(long, default_value = "2,12..102:10")]
    dims: String,
    #[arg(long, default_value_t = simulation::DEFAULT_TRIALS_PER_DIM)]
    trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NormalityArgs {
    #[arg(long, value_enum, default_value = "positive")]
    domain: DomainArg,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    #[arg(long, default_value = "2..12")]
    dims: String,
    #[arg(long, default_value_t = simulation::DEFAULT_KS_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbeddingsArgs {
    /// Collection file; give twice for pairwise mode.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "pairwise")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "cosine")]
    metric: EmbedMetricArg,
    /// Calibration file for diem; without one, the inputs' coordinate range is calibrated.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Calibration trials when no file is given.
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_TRIALS)]
    trials: usize,
    /// Reference `mu,sigma` for a z-test on the mean.
    #[arg(long, allow_hyphen_values = true)]
    zref: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = embedio::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `a,b,c`, `a..b` and `a..b:step` pieces, comma separated.
fn parse_dims(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = |p: &str| CliError::Usage(format!("invalid --dims element `{p}`"));
    let mut dims = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, step.parse::<usize>().map_err(|_| bad(part))?),
                None => (rest, 1),
            };
            let lo: usize = lo.parse().map_err(|_| bad(part))?;
            let hi: usize = hi.trim_start_matches('=').parse().map_err(|_| bad(part))?;
            if step == 0 || hi < lo {
                return Err(bad(part));
            }
            dims.extend((lo..=hi).step_by(step));
        } else {
            dims.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if dims.is_empty() {
        return Err(CliError::Usage("--dims is empty".into()));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--dims must be strictly increasing".into()));
    }
    Ok(dims)
}

fn parse_zref(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("--zref expects `mu,sigma`, got `{s}`"));
    let (mu, sigma) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        mu.trim().parse().map_err(|_| bad())?,
        sigma.trim().parse().map_err(|_| bad())?,
    ))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn load_calibration(path: &Path) -> Result<DiemCalibration, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    DiemCalibration::from_kv_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load(path: &Path, format: Option<FormatArg>) -> Result<Collection, CliError> {
    let format = match format {
        Some(FormatArg::Csv) => EmbeddingFormat::CsvRows,
        Some(FormatArg::Jsonl) => EmbeddingFormat::JsonLines,
        None => EmbeddingFormat::from_path(path),
    };
    embedio::load_collection(path, format)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn run_calibrate(args: &CalibrateArgs, seed: SeedSpec) -> Result<(), CliError> {
    let sign = SignDomain::from(args.domain);
    let (dlo, dhi) = sign.default_bounds();
    let domain = DomainSpec::new(args.vmin.unwrap_or(dlo), args.vmax.unwrap_or(dhi), sign)
        .map_err(DiemError::from)?;
    let cal = diem::calibrate(args.n, &domain, args.trials, seed)?;
    emit(args.out.as_deref(), &cal.to_kv_string())?;
    if let Some(path) = &args.out {
        eprintln!("wrote calibration for n={} to {}", args.n, path.display());
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let metric: SweepMetric = args
        .metric
        .parse()
        .map_err(|e: SimulationError| CliError::Usage(e.to_string()))?;
    let a = load(&args.a, args.format)?;
    let b = load(&args.b, args.format)?;
    if a.len() != b.len() {
        return Err(CliError::Data(format!(
            "--a has {} records, --b has {}",
            a.len(),
            b.len()
        )));
    }
    let cal = match (&args.calibration, metric) {
        (Some(path), _) => Some(load_calibration(path)?),
        (None, SweepMetric::Diem) => {
            return Err(CliError::Usage("metric diem requires --calibration".into()))
        }
        (None, _) => None,
    };
    let mut text = String::new();
    for (ra, rb) in a.records().iter().zip(b.records()) {
        let v = simulation::evaluate(metric, &ra.vec, &rb.vec, cal.as_ref())?;
        text.push_str(&fmt_real(v));
        text.push('\n');
    }
    emit(None, &text)
}

const SWEEP_HEADER: &str = "dim,count,mean,std,median,q1,q3,whisker_low,whisker_high,outlier_count";

fn run_sweep(args: &SweepArgs, seed: SeedSpec) -> Result<(), CliError> {
    let metric: SweepMetric = args
        .metric
        .parse()
        .map_err(|e: SimulationError| CliError::Usage(e.to_string()))?;
    let dims = parse_dims(&args.dims)?;
    let sign = SignDomain::from(args.domain);
    let config = SweepConfig::new(
        metric,
        DomainSpec::standard(sign),
        sampling(args.dist, sign),
    )
    .with_dims(dims)
    .with_trials(args.trials)
    .with_seed(seed);
    let result = simulation::run_sweep(&config)?;
    let mut text = format!("{SWEEP_HEADER}\n");
    for (dim, s) in &result.per_dim {
        let reals = [
            s.mean,
            s.std,
            s.median,
            s.q1,
            s.q3,
            s.whisker_low,
            s.whisker_high,
        ]
        .map(fmt_real)
        .join(",");
        text.push_str(&format!("{dim},{},{reals},{}\n", s.count, s.outliers.len()));
    }
    for (dim, n) in result.skipped.iter().filter(|(_, &n)| n > 0) {
        eprintln!("dim {dim}: skipped {n} zero-norm pairs");
    }
    emit(args.out.as_deref(), &text)
}

fn run_normality(args: &NormalityArgs, seed: SeedSpec) -> Result<(), CliError> {
    let dims = parse_dims(&args.dims)?;
    let sign = SignDomain::from(args.domain);
    let results = simulation::normality_transition(
        &DomainSpec::standard(sign),
        &sampling(args.dist, sign),
        &dims,
        args.trials,
        args.alpha,
        seed,
    )?;
    let mut text = String::from("dim,ks_stat,p_value,rejected\n");
    for (dim, r) in &results {
        text.push_str(&format!(
            "{dim},{},{},{}\n",
            fmt_real(r.statistic),
            fmt_real(r.p_value),
            r.rejected
        ));
    }
    emit(args.out.as_deref(), &text)
}

fn run_embeddings(args: &EmbeddingsArgs, seed: SeedSpec) -> Result<(), CliError> {
    let expected = match args.mode {
        ModeArg::Pairwise => 2,
        ModeArg::Allpairs => 1,
    };
    if args.input.len() != expected {
        return Err(CliError::Usage(format!(
            "{} mode takes {expected} --input file(s), got {}",
            if expected == 2 {
                "pairwise"
            } else {
                "allpairs"
            },
            args.input.len()
        )));
    }
    let collections = args
        .input
        .iter()
        .map(|p| load(p, args.format))
        .collect::<Result<Vec<_>, _>>()?;
    let metric = match args.metric {
        EmbedMetricArg::Cosine => ComparisonMetric::CosineUnsigned,
        EmbedMetricArg::Diem => ComparisonMetric::Diem,
    };
    let cal = match (&args.calibration, metric) {
        (Some(path), ComparisonMetric::Diem) => Some(load_calibration(path)?),
        (None, ComparisonMetric::Diem) => {
            let refs: Vec<&Collection> = collections.iter().collect();
            let cal = embedio::calibrate_for(&refs, args.trials, seed)?;
            eprintln!(
                "calibrated n={} over observed range [{}, {}]",
                cal.n(),
                cal.domain().v_min(),
                cal.domain().v_max()
            );
            Some(cal)
        }
        _ => None,
    };
    let options = CompareOptions {
        bins: args.bins,
        z_reference: args.zref.as_deref().map(parse_zref).transpose()?,
        alpha: args.alpha,
        ..Default::default()
    };
    let report = match args.mode {
        ModeArg::Pairwise => embedio::compare_pairwise(
            &collections[0],
            &collections[1],
            metric,
            cal.as_ref(),
            &options,
        )?,
        ModeArg::Allpairs => {
            embedio::compare_all_pairs(&collections[0], metric, cal.as_ref(), &options)?
        }
    };
    if report.clamped > 0 {
        eprintln!("{} values fell outside the histogram range", report.clamped);
    }
    emit(args.out.as_deref(), &report.to_kv_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let seed = SeedSpec::new(cli.seed);
    match &cli.command {
        Command::Calibrate(a) => run_calibrate(a, seed),
        Command::Compare(a) => run_compare(a),
        Command::Sweep(a) => run_sweep(a, seed),
        Command::Normality(a) => run_normality(a, seed),
        Command::Embeddings(a) => run_embeddings(a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_syntax() {
        assert_eq!(parse_dims("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_dims("2,12..32:10").unwrap(), vec![2, 12, 22, 32]);
        assert!(matches!(parse_dims("12,2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_dims("2,2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_dims("a"), Err(CliError::Usage(_))));
        assert!(matches!(parse_dims("5..2"), Err(CliError::Usage(_))));
    }

    #[test]
    fn zref_syntax() {
        assert_eq!(parse_zref("0,2.0248").unwrap(), (0.0, 2.0248));
        assert_eq!(parse_zref("-1, 3").unwrap(), (-1.0, 3.0));
        assert!(parse_zref("1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
