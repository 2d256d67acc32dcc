//! Acceptance criteria, one verdict line each. Run with
//! `cargo test -p diem-core --test acceptance`.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use diem_core::diem::{self, diem_value};
use diem_core::embedio::{self, Collection, CompareOptions, ComparisonMetric, EmbeddingRecord};
use diem_core::metrics::{self, CosineConvention, Vector};
use diem_core::simulation::{self, SweepConfig, SweepMetric};
use diem_core::stats::{self, BinCounter};
use diem_core::vecgen::{self, DomainSpec, SamplingDistribution, SeedSpec};
use rand::Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn sweep(
    metric: SweepMetric,
    domain: DomainSpec,
    dims: Vec<usize>,
    seed: u64,
) -> simulation::SweepResult {
    let config = SweepConfig::new(metric, domain, SamplingDistribution::Uniform)
        .with_dims(dims)
        .with_trials(10_000)
        .with_seed(SeedSpec::new(seed));
    simulation::run_sweep(&config).expect("sweep")
}

fn grid_22_102() -> Vec<usize> {
    (22..=102).step_by(10).collect()
}

fn grid_12_102() -> Vec<usize> {
    (12..=102).step_by(10).collect()
}

fn ratio(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    hi / lo
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn analytic_median() -> Verdict {
    let start = Instant::now();
    let r = sweep(
        SweepMetric::Euclidean,
        DomainSpec::positive(),
        vec![12, 52, 102],
        0,
    );
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(10);
    let mut detail = Vec::new();
    for (&n, s) in &r.per_dim {
        let bound = (n as f64 / 6.0).sqrt();
        let rel = (s.median - bound) / bound;
        ok &= rel.abs() <= 0.015;
        detail.push(format!("n={n} rel={rel:+.4}"));
    }
    detail.push(format!("{:.2}s", elapsed.as_secs_f64()));
    check(ok, detail.join(" "))
}

fn cosine_convergence() -> Verdict {
    let start = Instant::now();
    let pos = sweep(
        SweepMetric::CosineUnsigned,
        DomainSpec::positive(),
        simulation::default_dims(),
        0,
    );
    let all = sweep(
        SweepMetric::CosineUnsigned,
        DomainSpec::all_real(),
        simulation::default_dims(),
        0,
    );
    let elapsed = start.elapsed();
    let mp = pos.per_dim[&102].mean;
    let ma = all.per_dim[&102].mean;
    check(
        (0.70..=0.80).contains(&mp) && ma < 0.1 && elapsed < Duration::from_secs(30),
        format!(
            "positive mean={mp:.4} all-real mean|cos|={ma:.4} {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn normalized_euclidean() -> Verdict {
    let r = sweep(
        SweepMetric::NormalizedEuclidean,
        DomainSpec::all_real(),
        vec![102],
        0,
    );
    let m = r.per_dim[&102].median;
    check((1.36..=1.46).contains(&m), format!("median={m:.4}"))
}

fn sphere_variance_law() -> Verdict {
    let rep = simulation::convergence_check(
        SweepMetric::CosineSigned,
        &DomainSpec::all_real(),
        &SamplingDistribution::UnitSphere,
        &[10, 20, 50, 100],
        10_000,
        SeedSpec::new(0),
    )
    .map_err(|e| e.to_string())?;
    let s = rep.std_decay.slope;
    check((s + 0.5).abs() <= 0.1, format!("slope={s:.4}"))
}

fn calibration_constants() -> Verdict {
    let cal = diem::calibrate(12, &DomainSpec::positive(), 100_000, SeedSpec::new(0))
        .map_err(|e| e.to_string())?;
    let within = |x: f64, target: f64| ((x - target) / target).abs() <= 0.05;
    let consistent = cal.check_bounds(1e-9).is_ok();
    check(
        (cal.var_ed() - 0.06).abs() <= 0.01
            && (cal.sigma_diem() - 4.09).abs() <= 0.3
            && within(cal.diem_min(), -23.35)
            && within(cal.diem_max(), 34.61)
            && consistent,
        format!(
            "var={:.4} sigma={:.3} min={:.2} max={:.2} self-consistent={consistent}",
            cal.var_ed(),
            cal.sigma_diem(),
            cal.diem_min(),
            cal.diem_max()
        ),
    )
}

fn diem_insensitivity() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, domain) in [
        ("positive", DomainSpec::positive()),
        ("negative", DomainSpec::negative()),
        ("all", DomainSpec::all_real()),
    ] {
        let r = sweep(SweepMetric::Diem, domain, grid_22_102(), 0);
        let rho = ratio(r.per_dim.values().map(|s| s.std));
        let worst = r.per_dim.values().map(|s| s.mean.abs()).fold(0.0, f64::max);
        ok &= rho < 1.10 && worst < 0.5;
        detail.push(format!("{name}: std ratio={rho:.4} max|mean|={worst:.3}"));
    }
    check(ok, detail.join("; "))
}

fn normality_transition() -> Verdict {
    let dims = [2, 3, 4, 8, 9, 10, 11, 12];
    let mut agree = [0usize; 8];
    for run in 0..20 {
        let res = simulation::normality_transition(
            &DomainSpec::positive(),
            &SamplingDistribution::Uniform,
            &dims,
            10_000,
            0.05,
            SeedSpec::new(run),
        )
        .map_err(|e| e.to_string())?;
        for (k, &n) in dims.iter().enumerate() {
            if res[&n].rejected == (n <= 4) {
                agree[k] += 1;
            }
        }
    }
    let detail = dims
        .iter()
        .zip(agree)
        .map(|(n, a)| format!("n={n}:{a}/20"))
        .collect::<Vec<_>>()
        .join(" ");
    check(agree.iter().all(|&a| a >= 18), detail)
}

fn manhattan_contrast() -> Verdict {
    let m = simulation::manhattan_growth_check(
        &DomainSpec::positive(),
        &grid_12_102(),
        10_000,
        SeedSpec::new(0),
    )
    .map_err(|e| e.to_string())?;
    let e = sweep(
        SweepMetric::Euclidean,
        DomainSpec::positive(),
        grid_12_102(),
        0,
    );
    let rho = ratio(e.per_dim.values().map(|s| s.std));
    check(
        m.std_strictly_increasing && rho < 1.25,
        format!(
            "manhattan std {:.3}..{:.3} increasing={} euclid std ratio={rho:.4}",
            m.rows[0].std,
            m.rows[m.rows.len() - 1].std,
            m.std_strictly_increasing
        ),
    )
}

fn identity_suite() -> Verdict {
    let domain = DomainSpec::all_real();
    let mut worst_recon = 0.0f64;
    let mut failures = Vec::new();
    for n in [2usize, 10, 100] {
        let seed = SeedSpec::new(n as u64);
        let cal = diem::calibrate(n, &domain, 5_000, seed.derive(99)).map_err(|e| e.to_string())?;
        let mut rng = seed.derive(7).rng(n, 0);
        for t in 0..10_000u64 {
            let a = vecgen::sample_uniform(n, &domain, seed, 3 * t).unwrap();
            let b = vecgen::sample_uniform(n, &domain, seed, 3 * t + 1).unwrap();
            let c = vecgen::sample_uniform(n, &domain, seed, 3 * t + 2).unwrap();

            let d = metrics::euclidean_distance(&a, &b).unwrap();
            let cos = metrics::cosine_similarity(&a, &b, CosineConvention::Signed).unwrap();
            let rec = metrics::cosine_from_distance(
                d,
                metrics::norm(&a),
                metrics::norm(&b),
                CosineConvention::Signed,
            )
            .unwrap();
            worst_recon = worst_recon.max((rec - cos).abs());

            if d != metrics::euclidean_distance(&b, &a).unwrap()
                || cos != metrics::cosine_similarity(&b, &a, CosineConvention::Signed).unwrap()
                || metrics::manhattan_distance(&a, &b).unwrap()
                    != metrics::manhattan_distance(&b, &a).unwrap()
                || diem_value(&a, &b, &cal).unwrap() != diem_value(&b, &a, &cal).unwrap()
            {
                failures.push(format!("asymmetry n={n} t={t}"));
            }

            let k: f64 = rng.random_range(0.01..100.0);
            let scaled: Vec<f64> = a.iter().map(|x| k * x).collect();
            let cs = metrics::cosine_similarity(&scaled, &b, CosineConvention::Signed).unwrap();
            if (cs - cos).abs() > 1e-12 {
                failures.push(format!("scale n={n} t={t}"));
            }

            let tri = |f: fn(&[f64], &[f64]) -> Result<f64, metrics::MetricError>| {
                let ab = f(&a, &b).unwrap();
                let bc = f(&b, &c).unwrap();
                let ac = f(&a, &c).unwrap();
                ac <= ab + bc + 1e-12 * (ab + bc)
            };
            if !tri(metrics::euclidean_distance) || !tri(metrics::manhattan_distance) {
                failures.push(format!("triangle n={n} t={t}"));
            }
        }

        let a = vecgen::sample_uniform(n, &domain, seed, 1_000_000).unwrap();
        if diem_value(&a, &a, &cal).unwrap() != cal.diem_min() {
            failures.push(format!("diem_min n={n}"));
        }
        let lo = vec![domain.v_min(); n];
        let hi = vec![domain.v_max(); n];
        let top = diem_value(&lo, &hi, &cal).unwrap();
        if ((top - cal.diem_max()) / cal.diem_max()).abs() > 1e-12 {
            failures.push(format!("diem_max n={n}: {top} vs {}", cal.diem_max()));
        }
    }
    if worst_recon > 1e-10 {
        failures.push(format!("reconstruction error {worst_recon:e}"));
    }
    let summary = format!("max reconstruction error={worst_recon:.2e}");
    if failures.is_empty() {
        Ok(summary)
    } else {
        failures.truncate(5);
        Err(format!("{summary}; {}", failures.join(", ")))
    }
}

fn synthetic_collection(m: usize, n: usize, seed: u64) -> Collection {
    let domain = DomainSpec::positive();
    Collection::new(
        (0..m)
            .map(|i| EmbeddingRecord {
                id: format!("v{i}"),
                vec: Vector::new(
                    vecgen::sample_uniform(n, &domain, SeedSpec::new(seed), i as u64).unwrap(),
                )
                .unwrap(),
            })
            .collect(),
    )
    .unwrap()
}

fn streaming_matches_materialized(
    c: &Collection,
    cal: &diem::DiemCalibration,
) -> Result<(), String> {
    let metric = ComparisonMetric::Diem;
    let streamed = embedio::compare_all_pairs(c, metric, Some(cal), &CompareOptions::default())
        .map_err(|e| e.to_string())?;
    let values = embedio::all_pair_values(c, metric, Some(cal)).map_err(|e| e.to_string())?;

    let mut bins = BinCounter::new(cal.diem_min(), cal.diem_max(), embedio::DEFAULT_BINS).unwrap();
    values.iter().for_each(|&v| bins.insert(v));
    let hist = bins.finish();
    let summary = stats::summarize(&values).map_err(|e| e.to_string())?;

    let m = c.len();
    let pair = |k: usize| {
        let mut k = k;
        for i in 0..m {
            let row = m - i - 1;
            if k < row {
                return (c.records()[i].id.clone(), c.records()[i + 1 + k].id.clone());
            }
            k -= row;
        }
        unreachable!()
    };
    let argmin = (0..values.len()).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    let argmax = (0..values.len()).fold(0, |b, k| if values[k] > values[b] { k } else { b });

    let s = &streamed.summary;
    let checks = [
        ("count", streamed.count == values.len() as u64),
        ("histogram", streamed.histogram == hist),
        ("median", s.median == summary.median),
        ("quartiles", s.q1 == summary.q1 && s.q3 == summary.q3),
        (
            "whiskers",
            s.whisker_low == summary.whisker_low && s.whisker_high == summary.whisker_high,
        ),
        ("outliers", s.outliers == summary.outliers),
        ("range", s.min == summary.min && s.max == summary.max),
        (
            "moments",
            ((s.mean - summary.mean) / summary.std).abs() < 1e-12
                && ((s.std - summary.std) / summary.std).abs() < 1e-12,
        ),
        (
            "most similar",
            streamed.extremes.most_similar.value == values[argmin]
                && (
                    streamed.extremes.most_similar.left_id.clone(),
                    streamed.extremes.most_similar.right_id.clone(),
                ) == pair(argmin),
        ),
        (
            "most dissimilar",
            streamed.extremes.most_dissimilar.value == values[argmax]
                && (
                    streamed.extremes.most_dissimilar.left_id.clone(),
                    streamed.extremes.most_dissimilar.right_id.clone(),
                ) == pair(argmax),
        ),
    ];
    let bad: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(format!("mismatch in {}", bad.join(", ")))
    }
}

fn synthetic_embeddings() -> Verdict {
    let n = 384;
    let cal = diem::calibrate(n, &DomainSpec::positive(), 100_000, SeedSpec::new(1))
        .map_err(|e| e.to_string())?;
    let c = synthetic_collection(200, n, 0);
    let options = CompareOptions {
        z_reference: Some((0.0, cal.sigma_diem())),
        alpha: 0.01,
        ..Default::default()
    };
    let r = embedio::compare_all_pairs(&c, ComparisonMetric::Diem, Some(&cal), &options)
        .map_err(|e| e.to_string())?;
    let z = r.z.expect("z-test requested");
    let stream = streaming_matches_materialized(&synthetic_collection(500, n, 1), &cal);
    let detail = format!(
        "m=200 mean={:.4} z={:.3} p={:.3e} rejected={}; m=500 streaming {}",
        r.summary.mean,
        z.statistic,
        z.p_value,
        z.rejected,
        match &stream {
            Ok(()) => "equal".to_string(),
            Err(e) => e.clone(),
        }
    );
    check(!z.rejected && stream.is_ok(), detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("euclidean median tracks sqrt(n/6)", analytic_median),
        ("cosine convergence", cosine_convergence),
        ("normalized euclidean convergence", normalized_euclidean),
        ("sphere variance law", sphere_variance_law),
        ("calibration constants n=12", calibration_constants),
        ("diem dimension insensitivity", diem_insensitivity),
        ("normality transition", normality_transition),
        ("manhattan contrast", manhattan_contrast),
        ("identity suite", identity_suite),
        ("synthetic embeddings", synthetic_embeddings),
    ];
    // libtest-style filter: `cargo test --test acceptance -- <substring>`
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|p| !name.contains(p)) {
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        let _ = writeln!(
            out,
            "{tag} {name} [{:.1}s]: {detail}",
            start.elapsed().as_secs_f64()
        );
    }
    let _ = writeln!(out, "acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
