//! Seeded synthetic models that emit probability logs with controllable
//! knowledge, positional bias, content affinity, and order-sensitive noise.
//!
//! A response is a softmax over display positions of
//! `knowledge * 1[position holds the correct option] + position_bias[p]
//! + content_affinity * u(question, option) + noise * v(question, order, p)`,
//! where `u` and `v` are standard-normal draws from streams keyed by their
//! arguments and the model seed. Responses are pure functions of
//! `(spec, question, permutation)`: the same inputs always produce the same
//! record, while the per-(question, order) keying of `v` makes a model
//! deterministic yet order-sensitive, which is what creates measurable answer
//! fluctuation.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, KeyPart};
use crate::types::{Benchmark, LabelSet, Permutation, PermutationSet, Question, ResponseRecord};

/// Parameters of one synthetic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelSpec {
    pub model_id: String,
    /// Logit boost on the correct option, >= 0.
    pub knowledge: f64,
    /// Logit boost per display position; length must match the benchmark's
    /// option count.
    pub position_bias: Vec<f64>,
    /// Weight of the per-option stable preference, >= 0.
    pub content_affinity: f64,
    /// Scale of the per-(question, order, position) jitter, >= 0.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticModelSpec {
    fn validate(&self, option_count: usize) -> Result<()> {
        if self.knowledge < 0.0 || self.content_affinity < 0.0 || self.noise < 0.0 {
            return Err(Error::Config(format!(
                "model {}: knowledge, content_affinity and noise must be >= 0",
                self.model_id
            )));
        }
        if self.position_bias.len() != option_count {
            return Err(Error::Config(format!(
                "model {}: position_bias has length {}, benchmark has {} options",
                self.model_id,
                self.position_bias.len(),
                option_count
            )));
        }
        Ok(())
    }
}

/// Deterministic benchmark of placeholder questions with uniformly random
/// correct indices.
pub fn generate_benchmark(
    question_count: usize,
    option_count: usize,
    seed: u64,
) -> Result<Benchmark> {
    if !(2..=6).contains(&option_count) {
        return Err(Error::Config(format!(
            "synthetic benchmarks support 2..=6 options, got {option_count}"
        )));
    }
    if question_count < 1 {
        return Err(Error::Config("synthetic benchmarks need at least 1 question".into()));
    }
    let mut rng = rng::stream(
        "benchmark",
        &[
            KeyPart::Int(seed),
            KeyPart::Int(question_count as u64),
            KeyPart::Int(option_count as u64),
        ],
    );
    let width = question_count.to_string().len();
    let questions = (0..question_count)
        .map(|i| {
            let correct = rng::uniform_index(&mut rng, option_count as u64) as usize;
            Question::new(
                format!("q{:0width$}", i + 1),
                format!("synthetic question {}", i + 1),
                (0..option_count)
                    .map(|k| format!("synthetic option {}-{}", i + 1, k + 1))
                    .collect(),
                correct,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Benchmark::new(
        format!("synthetic-q{question_count}-n{option_count}-s{seed}"),
        LabelSet::alphabetic(option_count)?,
        questions,
        Some(crate::types::PromptParts {
            instruction: "Answer the following multiple-choice question with the letter of the best option.".into(),
            few_shot: String::new(),
        }),
    )
}

fn normals(rng: &mut rand_chacha::ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| StandardNormal.sample(rng)).collect()
}

/// Stable per-option preference draws for a question, indexed by original
/// option index.
fn affinity_draws(spec: &SyntheticModelSpec, question: &Question) -> Vec<f64> {
    let mut rng = rng::stream(
        "affinity",
        &[KeyPart::Int(spec.seed), KeyPart::Str(&question.id)],
    );
    normals(&mut rng, question.option_count())
}

/// Per-(question, display order) jitter draws, indexed by display position.
fn noise_draws(spec: &SyntheticModelSpec, question: &Question, perm: &Permutation) -> Vec<f64> {
    let mut parts = vec![KeyPart::Int(spec.seed), KeyPart::Str(&question.id)];
    parts.extend(perm.arrangement().iter().map(|&o| KeyPart::Int(o as u64)));
    let mut rng = rng::stream("noise", &parts);
    normals(&mut rng, perm.len())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// The model's probability vector for one question under one display order.
pub fn respond(
    spec: &SyntheticModelSpec,
    question: &Question,
    perm: &Permutation,
) -> Result<ResponseRecord> {
    spec.validate(question.option_count())?;
    if perm.len() != question.option_count() {
        return Err(Error::Schema(format!(
            "permutation of length {} paired with question {} of {} options",
            perm.len(),
            question.id,
            question.option_count()
        )));
    }
    let affinity = affinity_draws(spec, question);
    let jitter = noise_draws(spec, question, perm);
    let logits: Vec<f64> = (0..perm.len())
        .map(|p| {
            let option = perm.option_at(p);
            let knowledge = if option == question.correct_index {
                spec.knowledge
            } else {
                0.0
            };
            knowledge
                + spec.position_bias[p]
                + spec.content_affinity * affinity[option]
                + spec.noise * jitter[p]
        })
        .collect();
    ResponseRecord::new(
        spec.model_id.clone(),
        question.id.clone(),
        perm.clone(),
        softmax(&logits),
    )
}

/// One record per (question, permutation), ordered by question then by the
/// subset's member order.
pub fn generate_logs(
    spec: &SyntheticModelSpec,
    benchmark: &Benchmark,
    subset: &PermutationSet,
) -> Result<Vec<ResponseRecord>> {
    spec.validate(benchmark.option_count())?;
    let mut logs = Vec::with_capacity(benchmark.questions.len() * subset.len());
    for question in &benchmark.questions {
        for member in subset.members() {
            logs.push(respond(spec, question, member)?);
        }
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{self, MetricName};
    use crate::permutations::{full_set, original_set};
    use crate::types::extract_answer;

    fn spec(knowledge: f64, bias: Vec<f64>, affinity: f64, noise: f64) -> SyntheticModelSpec {
        SyntheticModelSpec {
            model_id: "sim".into(),
            knowledge,
            position_bias: bias,
            content_affinity: affinity,
            noise,
            seed: 42,
        }
    }

    #[test]
    fn generate_benchmark_is_deterministic() {
        let a = generate_benchmark(20, 4, 7).unwrap();
        let b = generate_benchmark(20, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.questions.len(), 20);
        assert_eq!(a.option_count(), 4);
    }

    #[test]
    fn generate_benchmark_shapes() {
        let two = generate_benchmark(100, 2, 0).unwrap();
        assert_eq!(two.questions.len(), 100);
        assert_eq!(two.option_count(), 2);
        let five = generate_benchmark(1, 5, 0).unwrap();
        assert_eq!(five.questions.len(), 1);
        assert_eq!(five.option_count(), 5);
        assert!(generate_benchmark(10, 7, 0).is_err());
        assert!(generate_benchmark(0, 4, 0).is_err());
    }

    #[test]
    fn dominant_knowledge_answers_correctly_everywhere() {
        let benchmark = generate_benchmark(5, 4, 1).unwrap();
        let s = spec(50.0, vec![0.0; 4], 0.0, 0.0);
        let full = full_set(4).unwrap();
        for q in &benchmark.questions {
            for member in full.members() {
                let record = respond(&s, q, member).unwrap();
                let out = extract_answer(&record, q).unwrap();
                assert!(out.is_correct);
                assert!(record.probs[out.chosen_position] > 0.99);
            }
        }
    }

    #[test]
    fn flat_logits_give_uniform_probabilities() {
        let benchmark = generate_benchmark(3, 4, 2).unwrap();
        let s = spec(0.0, vec![0.0; 4], 0.0, 0.0);
        let q = &benchmark.questions[0];
        let record = respond(&s, q, &Permutation::identity(4)).unwrap();
        for &p in &record.probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let subset = original_set(4).unwrap();
        let refs = vec![&record];
        assert!(metrics::entropy_complement(q, &subset, &refs).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_position_bias_fluctuates_under_full_set() {
        // A model that always answers display position 0 changes its chosen
        // option whenever a different option rotates into that position.
        let benchmark = generate_benchmark(4, 4, 3).unwrap();
        let s = spec(0.0, vec![5.0, 0.0, 0.0, 0.0], 0.0, 0.0);
        let full = full_set(4).unwrap();
        let logs = generate_logs(&s, &benchmark, &full).unwrap();
        let score = metrics::score_benchmark(&logs, &benchmark, &full, None).unwrap();
        for (qid, m) in &score.per_question {
            assert_eq!(m.fr, 1.0, "question {qid}");
        }
    }

    #[test]
    fn no_noise_no_bias_means_no_fluctuation() {
        let benchmark = generate_benchmark(6, 4, 4).unwrap();
        let s = spec(1.5, vec![0.0; 4], 0.0, 0.0);
        let full = full_set(4).unwrap();
        let logs = generate_logs(&s, &benchmark, &full).unwrap();
        let score = metrics::score_benchmark(&logs, &benchmark, &full, None).unwrap();
        for (qid, m) in &score.per_question {
            assert_eq!(m.fr, 0.0, "question {qid}");
        }
    }

    #[test]
    fn logs_are_deterministic_and_ordered() {
        let benchmark = generate_benchmark(20, 4, 5).unwrap();
        let s = spec(2.0, vec![0.3, 0.0, -0.1, 0.2], 0.5, 1.0);
        let full = full_set(4).unwrap();
        let a = generate_logs(&s, &benchmark, &full).unwrap();
        let b = generate_logs(&s, &benchmark, &full).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 480);
    }

    #[test]
    fn mean_fluctuation_nonincreasing_in_knowledge() {
        let benchmark = generate_benchmark(20, 4, 6).unwrap();
        let full = full_set(4).unwrap();
        let mut previous = f64::INFINITY;
        for knowledge in [0.0, 1.0, 2.0, 4.0, 8.0] {
            let s = spec(knowledge, vec![0.4, 0.0, 0.0, -0.4], 0.5, 1.0);
            let logs = generate_logs(&s, &benchmark, &full).unwrap();
            let score = metrics::score_benchmark(&logs, &benchmark, &full, None).unwrap();
            let mean_fr = 1.0 - score.mean(MetricName::FrComplement).unwrap();
            assert!(
                mean_fr <= previous + 1e-12,
                "mean FR rose from {previous} to {mean_fr} at knowledge {knowledge}"
            );
            previous = mean_fr;
        }
    }

    #[test]
    fn respond_rejects_bad_specs() {
        let benchmark = generate_benchmark(1, 4, 0).unwrap();
        let q = &benchmark.questions[0];
        let bad_len = spec(1.0, vec![0.0; 3], 0.0, 0.0);
        assert!(respond(&bad_len, q, &Permutation::identity(4)).is_err());
        let negative = spec(-1.0, vec![0.0; 4], 0.0, 0.0);
        assert!(respond(&negative, q, &Permutation::identity(4)).is_err());
    }
}
