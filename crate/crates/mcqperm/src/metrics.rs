//! Per-question metrics over a permutation subset, and their aggregation to
//! benchmark level by unweighted mean across questions.
//!
//! Answer-based metrics take the per-permutation chosen options (original
//! option indices, first entry = anchor) plus the correct option index.
//! Probability-based metrics take the response records aligned with the
//! subset's member order. All scores are oriented so that 1 is best; the
//! fluctuation and Brier/entropy columns therefore carry complements.

use std::collections::BTreeSet;
use std::collections::HashMap;

use crate::error::{Error, MissingRecord, Result};
use crate::rng::{self, KeyPart};
use crate::types::{
    correct_label_position, extract_answer, Benchmark, PermutationSet, Question, ResponseRecord,
    SubsetKind,
};

/// Floor applied to prior components before dividing by them.
pub const PRIOR_FLOOR: f64 = 1e-9;

/// Default fraction of questions consumed for prior estimation.
pub const DEFAULT_ESTIMATION_FRACTION: f64 = 0.05;

fn ensure_answers(answers: &[usize]) -> Result<()> {
    if answers.is_empty() {
        return Err(Error::Usage("metric needs at least one answer".into()));
    }
    Ok(())
}

/// 1 if any answer differs from the first one, else 0.
pub fn fluctuation_rate(answers: &[usize]) -> Result<f64> {
    ensure_answers(answers)?;
    let anchor = answers[0];
    Ok(if answers.iter().all(|&m| m == anchor) {
        0.0
    } else {
        1.0
    })
}

/// Fraction of tested display orders answered correctly.
pub fn average_accuracy(answers: &[usize], correct: usize) -> Result<f64> {
    ensure_answers(answers)?;
    let hits = answers.iter().filter(|&&m| m == correct).count();
    Ok(hits as f64 / answers.len() as f64)
}

/// Correctness of the anchor answer scaled by how often the remaining display
/// orders keep it: `1[m_1 = a] * (1/(|R|-1)) * sum_{j>=2} 1[m_1 = m_j]`.
///
/// The pairwise sum runs over the anchor-vs-other pairs, so with exactly two
/// display orders this coincides with [`worst_accuracy`]; with a single order
/// it reduces to plain accuracy.
pub fn strong_accuracy(answers: &[usize], correct: usize) -> Result<f64> {
    ensure_answers(answers)?;
    let anchor = answers[0];
    if anchor != correct {
        return Ok(0.0);
    }
    if answers.len() == 1 {
        return Ok(1.0);
    }
    let kept = answers[1..].iter().filter(|&&m| m == anchor).count();
    Ok(kept as f64 / (answers.len() - 1) as f64)
}

/// 1 iff every tested display order yields the correct option.
pub fn worst_accuracy(answers: &[usize], correct: usize) -> Result<f64> {
    ensure_answers(answers)?;
    let anchor = answers[0];
    Ok(if anchor == correct && answers.iter().all(|&m| m == anchor) {
        1.0
    } else {
        0.0
    })
}

/// 1 iff at least one tested display order yields the correct option.
pub fn best_accuracy(answers: &[usize], correct: usize) -> Result<f64> {
    ensure_answers(answers)?;
    Ok(if answers.iter().any(|&m| m == correct) {
        1.0
    } else {
        0.0
    })
}

/// `1 - (best_accuracy - worst_accuracy)`; 1 means the answer set is stable
/// (whether stably right or stably wrong).
pub fn sensitivity_gap_complement(answers: &[usize], correct: usize) -> Result<f64> {
    ensure_answers(answers)?;
    Ok(1.0 - (best_accuracy(answers, correct)? - worst_accuracy(answers, correct)?))
}

fn check_alignment(
    question: &Question,
    subset: &PermutationSet,
    records: &[&ResponseRecord],
) -> Result<()> {
    if records.len() != subset.len() {
        return Err(Error::Usage(format!(
            "question {}: {} records for a subset of {} permutations",
            question.id,
            records.len(),
            subset.len()
        )));
    }
    if subset.option_count() != question.option_count() {
        return Err(Error::Usage(format!(
            "question {}: subset permutes {} positions but the question has {} options",
            question.id,
            subset.option_count(),
            question.option_count()
        )));
    }
    for (record, member) in records.iter().zip(subset.members()) {
        if record.question_id != question.id {
            return Err(Error::Usage(format!(
                "record for question {} supplied while scoring question {}",
                record.question_id, question.id
            )));
        }
        if record.permutation != *member {
            return Err(Error::Usage(format!(
                "question {}: record arrangement {:?} does not match subset member {:?}",
                question.id,
                record.permutation.arrangement(),
                member.arrangement()
            )));
        }
    }
    Ok(())
}

/// Mean probability assigned to the correct answer's label across the subset.
pub fn prob_mass(
    question: &Question,
    subset: &PermutationSet,
    records: &[&ResponseRecord],
) -> Result<f64> {
    check_alignment(question, subset, records)?;
    let mut sum = 0.0;
    for (record, member) in records.iter().zip(subset.members()) {
        sum += record.probs[correct_label_position(question, member)?];
    }
    Ok(sum / records.len() as f64)
}

/// One minus the mean squared error between the one-hot correct label and the
/// probability vector. Can be negative: a confidently wrong one-hot scores -1.
pub fn brier_complement(
    question: &Question,
    subset: &PermutationSet,
    records: &[&ResponseRecord],
) -> Result<f64> {
    check_alignment(question, subset, records)?;
    let mut sum = 0.0;
    for (record, member) in records.iter().zip(subset.members()) {
        let correct_pos = correct_label_position(question, member)?;
        for (p, &prob) in record.probs.iter().enumerate() {
            let target = if p == correct_pos { 1.0 } else { 0.0 };
            sum += (target - prob) * (target - prob);
        }
    }
    Ok(1.0 - sum / records.len() as f64)
}

/// One minus the mean log2-entropy of the probability vectors, normalized by
/// log2 of the option count; 1 for one-hot distributions, 0 for uniform ones.
pub fn entropy_complement(
    question: &Question,
    subset: &PermutationSet,
    records: &[&ResponseRecord],
) -> Result<f64> {
    check_alignment(question, subset, records)?;
    let n = question.option_count() as f64;
    let mut sum = 0.0;
    for record in records {
        let mut h = 0.0;
        for &prob in &record.probs {
            if prob > 0.0 {
                h -= prob * prob.log2();
            }
        }
        sum += h / n.log2();
    }
    Ok(1.0 - sum / records.len() as f64)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Prior-debiasing configuration.
#[derive(Debug, Clone, Copy)]
pub struct PrideOptions {
    /// Fraction of questions used to estimate the label-position prior,
    /// in (0, 1).
    pub estimation_fraction: f64,
    pub seed: u64,
}

impl PrideOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            estimation_fraction: DEFAULT_ESTIMATION_FRACTION,
            seed,
        }
    }
}

/// Prior-debiased accuracy over a subset.
///
/// A deterministic seed-keyed shuffle selects `ceil(fraction * Q)` estimation
/// questions. The label-position prior is the mean probability vector over
/// those questions and all subset permutations, normalized to sum 1 and
/// floored at [`PRIOR_FLOOR`]. Every remaining question is then scored with
/// probabilities divided by the prior and renormalized: the per-question value
/// is the fraction of subset permutations whose debiased argmax maps to the
/// correct option.
#[derive(Debug, Clone)]
pub struct PrideScores {
    /// Per-question debiased accuracy for test questions; estimation
    /// questions carry `None`.
    pub per_question: Vec<Option<f64>>,
}

fn pride_estimation_indices(question_count: usize, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "estimation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let est_count = (fraction * question_count as f64).ceil() as usize;
    if est_count == 0 {
        return Err(Error::Config(
            "estimation fraction selects no estimation questions".into(),
        ));
    }
    if est_count >= question_count {
        return Err(Error::Config(format!(
            "estimation would consume all {question_count} questions, leaving none to score"
        )));
    }
    let mut rng = rng::stream(
        "pride-estimation",
        &[KeyPart::Int(seed), KeyPart::Int(question_count as u64)],
    );
    let mut pool: Vec<usize> = (0..question_count).collect();
    for i in 0..est_count {
        let j = i + rng::uniform_index(&mut rng, (pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut mask = vec![false; question_count];
    for &i in &pool[..est_count] {
        mask[i] = true;
    }
    Ok(mask)
}

fn pride_scores(
    benchmark: &Benchmark,
    subset: &PermutationSet,
    aligned: &[Vec<&ResponseRecord>],
    opts: &PrideOptions,
) -> Result<PrideScores> {
    if subset.len() < 2 {
        return Err(Error::Usage(
            "prior estimation needs at least 2 permutations in the subset".into(),
        ));
    }
    let n = benchmark.option_count();
    let q_count = benchmark.questions.len();
    let is_estimation = pride_estimation_indices(q_count, opts.estimation_fraction, opts.seed)?;

    let mut prior = vec![0.0f64; n];
    let mut draws = 0usize;
    for (qi, records) in aligned.iter().enumerate() {
        if !is_estimation[qi] {
            continue;
        }
        for record in records {
            for (p, &prob) in record.probs.iter().enumerate() {
                prior[p] += prob;
            }
            draws += 1;
        }
    }
    let total: f64 = prior.iter().sum();
    debug_assert!(draws > 0);
    debug_assert!(total > 0.0);
    for p in prior.iter_mut() {
        *p /= total;
        if *p < PRIOR_FLOOR {
            *p = PRIOR_FLOOR;
        }
    }

    let mut per_question = Vec::with_capacity(q_count);
    for (qi, question) in benchmark.questions.iter().enumerate() {
        if is_estimation[qi] {
            per_question.push(None);
            continue;
        }
        let mut hits = 0usize;
        for (record, member) in aligned[qi].iter().zip(subset.members()) {
            let debiased: Vec<f64> = record
                .probs
                .iter()
                .zip(&prior)
                .map(|(&prob, &pr)| prob / pr)
                .collect();
            let chosen = member.option_at(argmax(&debiased));
            if chosen == question.correct_index {
                hits += 1;
            }
        }
        per_question.push(Some(hits as f64 / subset.len() as f64));
    }
    Ok(PrideScores { per_question })
}

/// All per-question metric values for one (model, question, subset).
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionMetrics {
    pub fr: f64,
    pub aacc: f64,
    pub sacc: f64,
    pub wacc: f64,
    pub bacc: f64,
    pub sensg_complement: f64,
    pub prob: f64,
    pub brier_complement: f64,
    pub entropy_complement: f64,
    /// Debiased accuracy; `None` when the metric is disabled or the question
    /// served prior estimation.
    pub pride: Option<f64>,
}

/// The nine benchmark-level metric columns, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum MetricName {
    AvgAccuracy,
    Pride,
    WorstAccuracy,
    StrongAccuracy,
    SensGapComplement,
    ProbMass,
    BrierComplement,
    EntropyComplement,
    FrComplement,
}

impl MetricName {
    pub const ALL: [MetricName; 9] = [
        MetricName::AvgAccuracy,
        MetricName::Pride,
        MetricName::WorstAccuracy,
        MetricName::StrongAccuracy,
        MetricName::SensGapComplement,
        MetricName::ProbMass,
        MetricName::BrierComplement,
        MetricName::EntropyComplement,
        MetricName::FrComplement,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::AvgAccuracy => "aacc",
            MetricName::Pride => "pride",
            MetricName::WorstAccuracy => "wacc",
            MetricName::StrongAccuracy => "sacc",
            MetricName::SensGapComplement => "sensg_c",
            MetricName::ProbMass => "prob_mass",
            MetricName::BrierComplement => "brier_c",
            MetricName::EntropyComplement => "entropy_c",
            MetricName::FrComplement => "fr_c",
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown metric name {s:?}")))
    }
}

impl QuestionMetrics {
    /// Per-question value of a benchmark-level metric column.
    pub fn value(&self, metric: MetricName) -> Option<f64> {
        match metric {
            MetricName::AvgAccuracy => Some(self.aacc),
            MetricName::Pride => self.pride,
            MetricName::WorstAccuracy => Some(self.wacc),
            MetricName::StrongAccuracy => Some(self.sacc),
            MetricName::SensGapComplement => Some(self.sensg_complement),
            MetricName::ProbMass => Some(self.prob),
            MetricName::BrierComplement => Some(self.brier_complement),
            MetricName::EntropyComplement => Some(self.entropy_complement),
            MetricName::FrComplement => Some(1.0 - self.fr),
        }
    }
}

/// One benchmark-level table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model_id: String,
    pub benchmark_id: String,
    pub subset: SubsetKind,
    pub metric: MetricName,
    pub score: f64,
    pub question_count: usize,
}

/// Benchmark-level scores keyed by (model, benchmark, subset, metric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTable {
    rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricRow) -> Result<()> {
        if self.get(&row.model_id, &row.benchmark_id, row.subset, row.metric).is_some() {
            return Err(Error::Validation(format!(
                "duplicate table row ({}, {}, {}, {})",
                row.model_id, row.benchmark_id, row.subset, row.metric
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = MetricRow>) -> Result<()> {
        for row in rows {
            self.push(row)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(
        &self,
        model_id: &str,
        benchmark_id: &str,
        subset: SubsetKind,
        metric: MetricName,
    ) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.model_id == model_id
                    && r.benchmark_id == benchmark_id
                    && r.subset == subset
                    && r.metric == metric
            })
            .map(|r| r.score)
    }

    /// Distinct (model, benchmark) pairs, sorted.
    pub fn model_benchmark_pairs(&self) -> BTreeSet<(String, String)> {
        self.rows
            .iter()
            .map(|r| (r.model_id.clone(), r.benchmark_id.clone()))
            .collect()
    }

    pub fn subsets(&self) -> BTreeSet<SubsetKind> {
        self.rows.iter().map(|r| r.subset).collect()
    }

    pub fn metrics(&self) -> BTreeSet<MetricName> {
        self.rows.iter().map(|r| r.metric).collect()
    }

    /// Canonical row order for emission: model, benchmark, subset, metric.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.model_id, &a.benchmark_id, a.subset, a.metric)
                .cmp(&(&b.model_id, &b.benchmark_id, b.subset, b.metric))
        });
    }
}

/// Per-question metrics plus their means for one (model, benchmark, subset).
#[derive(Debug, Clone)]
pub struct BenchmarkScore {
    pub model_id: String,
    pub benchmark_id: String,
    pub subset_kind: SubsetKind,
    /// One entry per benchmark question, in benchmark order.
    pub per_question: Vec<(String, QuestionMetrics)>,
}

impl BenchmarkScore {
    /// Unweighted mean of a metric over the questions that carry it.
    pub fn mean(&self, metric: MetricName) -> Option<f64> {
        let values: Vec<f64> = self
            .per_question
            .iter()
            .filter_map(|(_, m)| m.value(metric))
            .collect();
        if values.is_empty() {
            return None;
        }
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Number of questions contributing to a metric's mean.
    pub fn question_count(&self, metric: MetricName) -> usize {
        self.per_question
            .iter()
            .filter(|(_, m)| m.value(metric).is_some())
            .count()
    }

    /// Table rows for every metric this score carries.
    pub fn table_rows(&self) -> Vec<MetricRow> {
        MetricName::ALL
            .iter()
            .filter_map(|&metric| {
                self.mean(metric).map(|score| MetricRow {
                    model_id: self.model_id.clone(),
                    benchmark_id: self.benchmark_id.clone(),
                    subset: self.subset_kind,
                    metric,
                    score,
                    question_count: self.question_count(metric),
                })
            })
            .collect()
    }
}

/// Aligns one model's records with the subset and computes every metric per
/// question. `records` must all belong to one model and must cover every
/// `(question, permutation)` pair of the subset; records for permutations
/// outside the subset are ignored, so full-set logs can score any subset.
pub fn score_benchmark(
    records: &[ResponseRecord],
    benchmark: &Benchmark,
    subset: &PermutationSet,
    pride: Option<&PrideOptions>,
) -> Result<BenchmarkScore> {
    if records.is_empty() {
        return Err(Error::Usage("no response records supplied".into()));
    }
    let model_id = records[0].model_id.clone();
    if records.iter().any(|r| r.model_id != model_id) {
        return Err(Error::Schema(
            "score_benchmark takes records for a single model".into(),
        ));
    }
    if subset.option_count() != benchmark.option_count() {
        return Err(Error::Schema(format!(
            "subset permutes {} positions but benchmark {} has {} options",
            subset.option_count(),
            benchmark.id,
            benchmark.option_count()
        )));
    }

    let mut index: HashMap<(&str, &[usize]), &ResponseRecord> = HashMap::new();
    for record in records {
        if benchmark.question(&record.question_id).is_none() {
            return Err(Error::Validation(format!(
                "record references question {} absent from benchmark {}",
                record.question_id, benchmark.id
            )));
        }
        let key = (record.question_id.as_str(), record.permutation.arrangement());
        if index.insert(key, record).is_some() {
            return Err(Error::Validation(format!(
                "duplicate record for question {} and arrangement {:?}",
                record.question_id,
                record.permutation.arrangement()
            )));
        }
    }

    let mut aligned: Vec<Vec<&ResponseRecord>> = Vec::with_capacity(benchmark.questions.len());
    let mut missing = Vec::new();
    for question in &benchmark.questions {
        let mut row = Vec::with_capacity(subset.len());
        for member in subset.members() {
            match index.get(&(question.id.as_str(), member.arrangement())) {
                Some(record) => row.push(*record),
                None => missing.push(MissingRecord {
                    question_id: question.id.clone(),
                    arrangement: member.arrangement().to_vec(),
                }),
            }
        }
        aligned.push(row);
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { missing });
    }

    let pride_scores = match pride {
        Some(opts) => Some(pride_scores(benchmark, subset, &aligned, opts)?),
        None => None,
    };

    let mut per_question = Vec::with_capacity(benchmark.questions.len());
    for (qi, question) in benchmark.questions.iter().enumerate() {
        let records_q = &aligned[qi];
        let answers: Vec<usize> = records_q
            .iter()
            .map(|r| extract_answer(r, question).map(|o| o.chosen_option))
            .collect::<Result<_>>()?;
        let correct = question.correct_index;
        let metrics = QuestionMetrics {
            fr: fluctuation_rate(&answers)?,
            aacc: average_accuracy(&answers, correct)?,
            sacc: strong_accuracy(&answers, correct)?,
            wacc: worst_accuracy(&answers, correct)?,
            bacc: best_accuracy(&answers, correct)?,
            sensg_complement: sensitivity_gap_complement(&answers, correct)?,
            prob: prob_mass(question, subset, records_q)?,
            brier_complement: brier_complement(question, subset, records_q)?,
            entropy_complement: entropy_complement(question, subset, records_q)?,
            pride: pride_scores
                .as_ref()
                .and_then(|s| s.per_question[qi]),
        };
        per_question.push((question.id.clone(), metrics));
    }

    Ok(BenchmarkScore {
        model_id,
        benchmark_id: benchmark.id.clone(),
        subset_kind: subset.kind(),
        per_question,
    })
}
