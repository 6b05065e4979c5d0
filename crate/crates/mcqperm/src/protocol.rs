//! Metric-assessment protocol: least-squares association of subset-computed
//! metrics with full-set fluctuation and original accuracy, plus the
//! permutation-choice stability analysis.
//!
//! Each regression point is one (model, benchmark) pair: the predictor is a
//! metric computed on a permutation subset, the responses are the full-set
//! fluctuation-rate complement and the original-order accuracy. Fits are
//! ordinary least squares with intercept; an undefined fit (constant
//! predictor or constant response) is reported as its own state rather than
//! as a fabricated value.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::{score_benchmark, MetricName, MetricTable, PrideOptions};
use crate::permutations::permutation_samples;
use crate::types::{Benchmark, ResponseRecord, SubsetKind};

/// Which response(s) a regression entry was fit against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TargetKind {
    FullFluctuation,
    OriginalAccuracy,
    Both,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [
        TargetKind::FullFluctuation,
        TargetKind::OriginalAccuracy,
        TargetKind::Both,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TargetKind::FullFluctuation => "full_fr",
            TargetKind::OriginalAccuracy => "orig_acc",
            TargetKind::Both => "both",
        }
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    R2(f64),
    /// The fit has no defined answer on this data; carries the reason.
    Undefined(String),
}

impl FitOutcome {
    pub fn r2(&self) -> Option<f64> {
        match self {
            FitOutcome::R2(v) => Some(*v),
            FitOutcome::Undefined(_) => None,
        }
    }
}

/// One cell of the association grid.
#[derive(Debug, Clone, PartialEq)]
pub struct R2Entry {
    pub subset: SubsetKind,
    pub metric: MetricName,
    pub target: TargetKind,
    pub outcome: FitOutcome,
}

/// One scatter point: a metric value with both regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPoint {
    pub model_id: String,
    pub benchmark_id: String,
    pub subset: SubsetKind,
    pub metric: MetricName,
    pub value: f64,
    /// `1 - FR` over the full permutation set.
    pub target_full_fr_complement: f64,
    /// Accuracy on the original option order.
    pub target_original_accuracy: f64,
}

/// Stability of one metric under re-sampled permutation subsets.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilityOutcome {
    /// Standard deviation across samples, averaged over models.
    MeanStd(f64),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEntry {
    pub benchmark_id: String,
    pub metric: MetricName,
    pub sample_size: usize,
    pub outcome: StabilityOutcome,
}

/// Everything the protocol emits: the R2 grid, the stability grid, and the
/// flat scatter table behind the grids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProtocolReport {
    pub r2: Vec<R2Entry>,
    pub stability: Vec<StabilityEntry>,
    pub scatter: Vec<ProtocolPoint>,
}

impl ProtocolReport {
    pub fn r2_value(
        &self,
        subset: SubsetKind,
        metric: MetricName,
        target: TargetKind,
    ) -> Option<&FitOutcome> {
        self.r2
            .iter()
            .find(|e| e.subset == subset && e.metric == metric && e.target == target)
            .map(|e| &e.outcome)
    }

    pub fn stability_value(
        &self,
        benchmark_id: &str,
        metric: MetricName,
        sample_size: usize,
    ) -> Option<&StabilityOutcome> {
        self.stability
            .iter()
            .find(|e| {
                e.benchmark_id == benchmark_id
                    && e.metric == metric
                    && e.sample_size == sample_size
            })
            .map(|e| &e.outcome)
    }
}

fn check_point_count(count: usize) -> Result<()> {
    if count < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: count,
        });
    }
    Ok(())
}

/// Residual and total sum of squares of the with-intercept least-squares line
/// through `(x, y)`.
fn ols_sse_sst(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let count = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let residual = y - (intercept + slope * x);
        sse += residual * residual;
        sst += (y - y_mean) * (y - y_mean);
    }
    (sse, sst)
}

fn all_identical(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Coefficient of determination of the least-squares line `y = a + b x`.
pub fn simple_r2(points: &[(f64, f64)]) -> Result<f64> {
    check_point_count(points.len())?;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    if all_identical(&xs) {
        return Err(Error::UndefinedFit("constant predictor".into()));
    }
    if all_identical(&ys) {
        return Err(Error::UndefinedFit("constant response".into()));
    }
    let (sse, sst) = ols_sse_sst(&xs, &ys);
    Ok(1.0 - sse / sst)
}

/// Pooled coefficient of determination of two independent least-squares lines
/// sharing the predictor: `1 - (SSE1 + SSE2) / (SST1 + SST2)`. Symmetric in
/// the responses and equal to [`simple_r2`] when they coincide.
pub fn dual_target_r2(points: &[(f64, f64, f64)]) -> Result<f64> {
    check_point_count(points.len())?;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y1: Vec<f64> = points.iter().map(|p| p.1).collect();
    let y2: Vec<f64> = points.iter().map(|p| p.2).collect();
    if all_identical(&xs) {
        return Err(Error::UndefinedFit("constant predictor".into()));
    }
    if all_identical(&y1) && all_identical(&y2) {
        return Err(Error::UndefinedFit("both responses constant".into()));
    }
    let (sse1, sst1) = if all_identical(&y1) {
        (0.0, 0.0)
    } else {
        ols_sse_sst(&xs, &y1)
    };
    let (sse2, sst2) = if all_identical(&y2) {
        (0.0, 0.0)
    } else {
        ols_sse_sst(&xs, &y2)
    };
    Ok(1.0 - (sse1 + sse2) / (sst1 + sst2))
}

/// Builds the full association grid from benchmark-level tables.
///
/// `subset_tables` holds the predictor cells (any mix of subset kinds);
/// `full_table` must carry the `fr_c` column on the full set and
/// `original_table` the `aacc` column on the original order, both for every
/// (model, benchmark) pair that appears in `subset_tables`.
pub fn run_protocol(
    subset_tables: &MetricTable,
    full_table: &MetricTable,
    original_table: &MetricTable,
) -> Result<ProtocolReport> {
    let pairs = subset_tables.model_benchmark_pairs();
    if pairs.is_empty() {
        return Err(Error::Usage("no predictor table rows supplied".into()));
    }
    let subsets = subset_tables.subsets();
    let metrics = subset_tables.metrics();

    let mut missing: Vec<String> = Vec::new();
    let mut targets: BTreeMap<&(String, String), (f64, f64)> = BTreeMap::new();
    for pair in &pairs {
        let (model, bench) = pair;
        let full_fr_c = full_table.get(model, bench, SubsetKind::Full, MetricName::FrComplement);
        let orig_acc =
            original_table.get(model, bench, SubsetKind::Original, MetricName::AvgAccuracy);
        match (full_fr_c, orig_acc) {
            (Some(f), Some(o)) => {
                for (name, value) in [("full fr", f), ("original accuracy", o)] {
                    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                        return Err(Error::Validation(format!(
                            "{name} target for ({model}, {bench}) is {value}, outside [0, 1]"
                        )));
                    }
                }
                targets.insert(pair, (f, o));
            }
            (f, o) => {
                if f.is_none() {
                    missing.push(format!("full_fr({model}, {bench})"));
                }
                if o.is_none() {
                    missing.push(format!("orig_acc({model}, {bench})"));
                }
            }
        }
    }

    let mut scatter = Vec::new();
    let mut grid: BTreeMap<(SubsetKind, MetricName), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for &subset in &subsets {
        for &metric in &metrics {
            let mut points = Vec::with_capacity(pairs.len());
            for pair in &pairs {
                let (model, bench) = pair;
                match subset_tables.get(model, bench, subset, metric) {
                    Some(value) => {
                        if let Some(&(full_fr_c, orig_acc)) = targets.get(pair) {
                            points.push((value, full_fr_c, orig_acc));
                            scatter.push(ProtocolPoint {
                                model_id: model.clone(),
                                benchmark_id: bench.clone(),
                                subset,
                                metric,
                                value,
                                target_full_fr_complement: full_fr_c,
                                target_original_accuracy: orig_acc,
                            });
                        }
                    }
                    None => missing.push(format!("{metric}({model}, {bench}, {subset})")),
                }
            }
            grid.insert((subset, metric), points);
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::TableCoverage { cells: missing });
    }

    let mut r2 = Vec::new();
    for ((subset, metric), points) in grid {
        check_point_count(points.len())?;
        for target in TargetKind::ALL {
            let outcome = match target {
                TargetKind::FullFluctuation => {
                    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
                    fit_outcome(simple_r2(&pts))?
                }
                TargetKind::OriginalAccuracy => {
                    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.2)).collect();
                    fit_outcome(simple_r2(&pts))?
                }
                TargetKind::Both => fit_outcome(dual_target_r2(&points))?,
            };
            r2.push(R2Entry {
                subset,
                metric,
                target,
                outcome,
            });
        }
    }

    Ok(ProtocolReport {
        r2,
        stability: Vec::new(),
        scatter,
    })
}

/// Undefined fits become report states; every other error propagates.
fn fit_outcome(result: Result<f64>) -> Result<FitOutcome> {
    match result {
        Ok(v) => Ok(FitOutcome::R2(v)),
        Err(Error::UndefinedFit(reason)) => Ok(FitOutcome::Undefined(reason)),
        Err(e) => Err(e),
    }
}

/// Configuration for [`stability_analysis`].
#[derive(Debug, Clone)]
pub struct StabilityOptions {
    /// Number of random subsets per sample size.
    pub count: usize,
    pub seed: u64,
    /// Metric columns to analyze.
    pub metrics: Vec<MetricName>,
    /// Prior-debiasing configuration; required if `metrics` includes `pride`.
    pub pride: Option<PrideOptions>,
}

impl StabilityOptions {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            metrics: MetricName::ALL.to_vec(),
            pride: Some(PrideOptions::new(seed)),
        }
    }
}

/// Re-scores every metric on `count` random pairs and `count` random
/// size-n tuples of permutations, then reports the per-model standard
/// deviation across samples, averaged over models.
///
/// `records` must cover the full permutation set for every model it contains.
/// A sample size that consumes every available permutation cannot vary and
/// yields explicit skip entries instead of numbers.
pub fn stability_analysis(
    records: &[ResponseRecord],
    benchmark: &Benchmark,
    opts: &StabilityOptions,
) -> Result<Vec<StabilityEntry>> {
    if opts.count == 0 {
        return Err(Error::Usage("stability analysis needs count >= 1".into()));
    }
    if opts.metrics.is_empty() {
        return Err(Error::Usage("stability analysis needs at least one metric".into()));
    }
    if opts.metrics.contains(&MetricName::Pride) && opts.pride.is_none() {
        return Err(Error::Config(
            "pride metric requested without prior-debiasing options".into(),
        ));
    }
    let mut by_model: BTreeMap<String, Vec<ResponseRecord>> = BTreeMap::new();
    for record in records {
        by_model
            .entry(record.model_id.clone())
            .or_default()
            .push(record.clone());
    }
    if by_model.is_empty() {
        return Err(Error::Usage("no response records supplied".into()));
    }

    let n = benchmark.option_count();
    let mut sizes = vec![2, n];
    sizes.dedup();

    let mut entries = Vec::new();
    for size in sizes {
        let samples = match permutation_samples(n, size, opts.count, opts.seed) {
            Ok(samples) => samples,
            Err(Error::DegenerateBenchmark { n, size, available }) => {
                let reason = format!(
                    "only {available} distinct display orders exist for {n} options; \
                     size-{size} samples cannot vary"
                );
                for &metric in &opts.metrics {
                    entries.push(StabilityEntry {
                        benchmark_id: benchmark.id.clone(),
                        metric,
                        sample_size: size,
                        outcome: StabilityOutcome::Skipped(reason.clone()),
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        // per metric: per model, the metric mean under each sampled subset
        let mut per_metric: BTreeMap<MetricName, Vec<Vec<f64>>> = BTreeMap::new();
        for (_, model_records) in &by_model {
            let mut means: BTreeMap<MetricName, Vec<f64>> = BTreeMap::new();
            for sample in &samples {
                let score = score_benchmark(model_records, benchmark, sample, opts.pride.as_ref())?;
                for &metric in &opts.metrics {
                    let value = score.mean(metric).ok_or_else(|| {
                        Error::Config(format!("metric {metric} unavailable on sampled subsets"))
                    })?;
                    means.entry(metric).or_default().push(value);
                }
            }
            for (metric, values) in means {
                per_metric.entry(metric).or_default().push(values);
            }
        }

        for &metric in &opts.metrics {
            let model_series = &per_metric[&metric];
            let mean_std = model_series
                .iter()
                .map(|values| population_std(values))
                .sum::<f64>()
                / model_series.len() as f64;
            entries.push(StabilityEntry {
                benchmark_id: benchmark.id.clone(),
                metric,
                sample_size: size,
                outcome: StabilityOutcome::MeanStd(mean_std),
            });
        }
    }
    Ok(entries)
}

fn population_std(values: &[f64]) -> f64 {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    variance.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutations::full_set;
    use crate::simulate::{generate_benchmark, generate_logs, SyntheticModelSpec};
    use proptest::prelude::*;

    #[test]
    fn perfect_fit_is_one() {
        let points: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(simple_r2(&points).unwrap(), 1.0);
    }

    // Expected values fixed from an independent closed-form least-squares
    // computation on these exact points.
    #[test]
    fn fixture_r2_matches_closed_form() {
        let points = [
            (1.0, 2.1),
            (2.0, 3.9),
            (3.0, 6.2),
            (4.0, 7.8),
            (5.0, 10.1),
        ];
        assert!((simple_r2(&points).unwrap() - 0.997_305_328_900_977_12).abs() < 1e-10);
    }

    #[test]
    fn noise_fixture_r2_is_near_zero() {
        let points = [
            (1.0, 0.52),
            (2.0, 0.47),
            (3.0, 0.50),
            (4.0, 0.53),
            (5.0, 0.48),
        ];
        assert!((simple_r2(&points).unwrap() - 0.015_384_615_384_615_219).abs() < 1e-10);
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(matches!(
            simple_r2(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn constant_predictor_is_undefined() {
        let points = [(0.5, 0.1), (0.5, 0.4), (0.5, 0.9)];
        assert!(matches!(simple_r2(&points), Err(Error::UndefinedFit(_))));
    }

    #[test]
    fn dual_with_equal_responses_matches_simple_exactly() {
        let points2: Vec<(f64, f64)> = vec![(1.0, 2.1), (2.0, 3.3), (3.0, 7.0), (4.0, 7.5)];
        let points3: Vec<(f64, f64, f64)> =
            points2.iter().map(|&(x, y)| (x, y, y)).collect();
        assert_eq!(dual_target_r2(&points3).unwrap(), simple_r2(&points2).unwrap());
    }

    // Pooled value fixed from the same independent computation; it must fall
    // strictly between the two single-response fits.
    #[test]
    fn dual_fixture_pools_residuals() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y2 = [0.52, 0.47, 0.50, 0.53, 0.48];
        let points: Vec<(f64, f64, f64)> =
            xs.iter().zip(&y2).map(|(&x, &b)| (x, x, b)).collect();
        let pooled = dual_target_r2(&points).unwrap();
        assert!((pooled - 0.999_744_066_542_698_87).abs() < 1e-10);
        let single2 = simple_r2(&xs.iter().zip(&y2).map(|(&x, &b)| (x, b)).collect::<Vec<_>>())
            .unwrap();
        assert!(single2 < pooled && pooled < 1.0);
    }

    proptest! {
        #[test]
        fn r2_is_affine_invariant_in_the_predictor(
            ys in proptest::collection::vec(0.0f64..1.0, 5..20),
            scale in prop_oneof![(-5.0f64..-0.1), (0.1f64..5.0)],
            shift in -10.0f64..10.0,
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let base: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(&x, &y)| (x, y)).collect();
            let mapped: Vec<(f64, f64)> = xs
                .iter()
                .zip(&ys)
                .map(|(&x, &y)| (scale * x + shift, y))
                .collect();
            match (simple_r2(&base), simple_r2(&mapped)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-10),
                (Err(Error::UndefinedFit(_)), Err(Error::UndefinedFit(_))) => {}
                (a, b) => prop_assert!(false, "mismatched outcomes {a:?} vs {b:?}"),
            }
        }

        #[test]
        fn self_regression_is_one(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..30)
        ) {
            prop_assume!(!xs.windows(2).all(|w| w[0] == w[1]));
            let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
            prop_assert!((simple_r2(&points).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    fn toy_cohort() -> (MetricTable, MetricTable, MetricTable) {
        // Three models x two benchmarks, one predictor subset and metric.
        let mut subset_tables = MetricTable::new();
        let mut full = MetricTable::new();
        let mut orig = MetricTable::new();
        let data = [
            ("m1", "b1", 0.9, 0.85, 0.8),
            ("m1", "b2", 0.7, 0.65, 0.6),
            ("m2", "b1", 0.5, 0.45, 0.5),
            ("m2", "b2", 0.3, 0.35, 0.4),
            ("m3", "b1", 0.8, 0.75, 0.7),
            ("m3", "b2", 0.4, 0.45, 0.45),
        ];
        for (model, bench, x, fr_c, acc) in data {
            subset_tables
                .push(crate::metrics::MetricRow {
                    model_id: model.into(),
                    benchmark_id: bench.into(),
                    subset: SubsetKind::Cyclic,
                    metric: MetricName::WorstAccuracy,
                    score: x,
                    question_count: 20,
                })
                .unwrap();
            full.push(crate::metrics::MetricRow {
                model_id: model.into(),
                benchmark_id: bench.into(),
                subset: SubsetKind::Full,
                metric: MetricName::FrComplement,
                score: fr_c,
                question_count: 20,
            })
            .unwrap();
            orig.push(crate::metrics::MetricRow {
                model_id: model.into(),
                benchmark_id: bench.into(),
                subset: SubsetKind::Original,
                metric: MetricName::AvgAccuracy,
                score: acc,
                question_count: 20,
            })
            .unwrap();
        }
        (subset_tables, full, orig)
    }

    #[test]
    fn run_protocol_builds_full_grid() {
        let (subset_tables, full, orig) = toy_cohort();
        let report = run_protocol(&subset_tables, &full, &orig).unwrap();
        assert_eq!(report.r2.len(), 3); // 1 subset x 1 metric x 3 targets
        assert_eq!(report.scatter.len(), 6);
        for entry in &report.r2 {
            assert!(entry.outcome.r2().is_some());
        }
    }

    #[test]
    fn run_protocol_names_missing_cells() {
        let (subset_tables, full, orig) = toy_cohort();
        let mut incomplete = MetricTable::new();
        for row in full.rows().iter().skip(1) {
            incomplete.push(row.clone()).unwrap();
        }
        match run_protocol(&subset_tables, &incomplete, &orig) {
            Err(Error::TableCoverage { cells }) => {
                assert_eq!(cells, vec!["full_fr(m1, b1)".to_string()]);
            }
            other => panic!("expected table coverage error, got {other:?}"),
        }
    }

    #[test]
    fn run_protocol_rejects_sparse_points() {
        let mut subset_tables = MetricTable::new();
        let mut full = MetricTable::new();
        let mut orig = MetricTable::new();
        for (model, bench) in [("m1", "b1"), ("m1", "b2")] {
            subset_tables
                .push(crate::metrics::MetricRow {
                    model_id: model.into(),
                    benchmark_id: bench.into(),
                    subset: SubsetKind::Oi,
                    metric: MetricName::AvgAccuracy,
                    score: 0.5,
                    question_count: 5,
                })
                .unwrap();
            full.push(crate::metrics::MetricRow {
                model_id: model.into(),
                benchmark_id: bench.into(),
                subset: SubsetKind::Full,
                metric: MetricName::FrComplement,
                score: 0.5,
                question_count: 5,
            })
            .unwrap();
            orig.push(crate::metrics::MetricRow {
                model_id: model.into(),
                benchmark_id: bench.into(),
                subset: SubsetKind::Original,
                metric: MetricName::AvgAccuracy,
                score: 0.5,
                question_count: 5,
            })
            .unwrap();
        }
        assert!(matches!(
            run_protocol(&subset_tables, &full, &orig),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn stability_fixture() -> (Vec<ResponseRecord>, Benchmark) {
        let benchmark = generate_benchmark(8, 4, 21).unwrap();
        let full = full_set(4).unwrap();
        let mut logs = Vec::new();
        for (i, knowledge) in [0.5f64, 2.0].iter().enumerate() {
            let spec = SyntheticModelSpec {
                model_id: format!("m{i}"),
                knowledge: *knowledge,
                position_bias: vec![0.4, 0.0, 0.0, -0.4],
                content_affinity: 0.5,
                noise: 1.0,
                seed: 9 + i as u64,
            };
            logs.extend(generate_logs(&spec, &benchmark, &full).unwrap());
        }
        (logs, benchmark)
    }

    #[test]
    fn stability_analysis_is_deterministic() {
        let (logs, benchmark) = stability_fixture();
        let opts = StabilityOptions::new(20, 5);
        let a = stability_analysis(&logs, &benchmark, &opts).unwrap();
        let b = stability_analysis(&logs, &benchmark, &opts).unwrap();
        assert_eq!(a, b);
        // 9 metrics x 2 sizes, all computed.
        assert_eq!(a.len(), 18);
        assert!(a
            .iter()
            .all(|e| matches!(e.outcome, StabilityOutcome::MeanStd(v) if v >= 0.0)));
    }

    #[test]
    fn stability_analysis_ignores_model_input_order() {
        let (logs, benchmark) = stability_fixture();
        let mut reversed: Vec<ResponseRecord> = logs.clone();
        reversed.reverse();
        let opts = StabilityOptions::new(10, 5);
        assert_eq!(
            stability_analysis(&logs, &benchmark, &opts).unwrap(),
            stability_analysis(&reversed, &benchmark, &opts).unwrap()
        );
    }

    #[test]
    fn stability_analysis_skips_two_option_benchmarks() {
        let benchmark = generate_benchmark(5, 2, 3).unwrap();
        let full = full_set(2).unwrap();
        let spec = SyntheticModelSpec {
            model_id: "m".into(),
            knowledge: 1.0,
            position_bias: vec![0.0, 0.0],
            content_affinity: 0.0,
            noise: 0.5,
            seed: 1,
        };
        let logs = generate_logs(&spec, &benchmark, &full).unwrap();
        let entries = stability_analysis(&logs, &benchmark, &StabilityOptions::new(10, 0)).unwrap();
        assert_eq!(entries.len(), 9);
        assert!(entries
            .iter()
            .all(|e| matches!(e.outcome, StabilityOutcome::Skipped(_)) && e.sample_size == 2));
    }

    #[test]
    fn constant_metric_has_zero_std() {
        // A model with overwhelming knowledge answers identically on every
        // sampled subset, so every answer-based metric is constant.
        let benchmark = generate_benchmark(5, 4, 17).unwrap();
        let full = full_set(4).unwrap();
        let spec = SyntheticModelSpec {
            model_id: "m".into(),
            knowledge: 50.0,
            position_bias: vec![0.0; 4],
            content_affinity: 0.0,
            noise: 0.0,
            seed: 2,
        };
        let logs = generate_logs(&spec, &benchmark, &full).unwrap();
        let mut opts = StabilityOptions::new(25, 11);
        opts.metrics = vec![MetricName::WorstAccuracy, MetricName::FrComplement];
        opts.pride = None;
        let entries = stability_analysis(&logs, &benchmark, &opts).unwrap();
        for entry in entries {
            match entry.outcome {
                StabilityOutcome::MeanStd(std) => assert_eq!(std, 0.0),
                other => panic!("unexpected outcome {other:?}"),
            }
        }
    }
}
