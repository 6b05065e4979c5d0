//! Core domain types: benchmarks, questions, display-order permutations,
//! response records, and answer extraction.
//!
//! Everything here is immutable after construction and validated in the
//! constructor, so downstream code never re-checks invariants. Answers are
//! always compared by *option identity* (the original option index), never by
//! the displayed label: a label keeps its position while option texts move, so
//! only the option index is stable across reorderings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector. Accommodates
/// reduced-precision model outputs.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// The fixed, never-permuted label strings of a benchmark (e.g. `A/B/C/D`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidBenchmark(format!(
                "label set must have at least 2 labels, got {}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidBenchmark(format!("duplicate label {a:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// The first `n` letters `A`, `B`, `C`, ...
    pub fn alphabetic(n: usize) -> Result<Self> {
        if n > 26 {
            return Err(Error::InvalidBenchmark(format!(
                "alphabetic label set supports at most 26 labels, got {n}"
            )));
        }
        Self::new((0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }
}

/// One multiple-choice question: ordered option texts plus the index of the
/// correct option in the *original* order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    /// Question stem shown before the options. May be empty for logs-only work.
    #[serde(default)]
    pub text: String,
    pub options: Vec<String>,
    pub correct_index: usize,
}

impl Question {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        options: Vec<String>,
        correct_index: usize,
    ) -> Result<Self> {
        let id = id.into();
        if options.len() < 2 {
            return Err(Error::InvalidBenchmark(format!(
                "question {id}: needs at least 2 options, got {}",
                options.len()
            )));
        }
        if options.iter().any(|o| o.is_empty()) {
            return Err(Error::InvalidBenchmark(format!(
                "question {id}: option texts must be non-empty"
            )));
        }
        if correct_index >= options.len() {
            return Err(Error::InvalidBenchmark(format!(
                "question {id}: correct_index {correct_index} out of range for {} options",
                options.len()
            )));
        }
        Ok(Self {
            id,
            text: text.into(),
            options,
            correct_index,
        })
    }

    pub fn option_count(&self) -> usize {
        self.options.len()
    }
}

/// Instruction and few-shot block rendered ahead of every question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    pub instruction: String,
    pub few_shot: String,
}

/// A set of questions sharing one label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub id: String,
    pub label_set: LabelSet,
    pub questions: Vec<Question>,
    pub prompt_parts: Option<PromptParts>,
}

impl Benchmark {
    pub fn new(
        id: impl Into<String>,
        label_set: LabelSet,
        questions: Vec<Question>,
        prompt_parts: Option<PromptParts>,
    ) -> Result<Self> {
        let id = id.into();
        let n = label_set.size();
        for q in &questions {
            if q.option_count() != n {
                return Err(Error::InvalidBenchmark(format!(
                    "benchmark {id}: question {} has {} options, label set has {n}",
                    q.id,
                    q.option_count()
                )));
            }
        }
        for (i, q) in questions.iter().enumerate() {
            if questions[..i].iter().any(|p| p.id == q.id) {
                return Err(Error::InvalidBenchmark(format!(
                    "benchmark {id}: duplicate question id {}",
                    q.id
                )));
            }
        }
        Ok(Self {
            id,
            label_set,
            questions,
            prompt_parts,
        })
    }

    /// Option count shared by all questions.
    pub fn option_count(&self) -> usize {
        self.label_set.size()
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }
}

/// A display order for options. `arrangement[p]` is the original option index
/// shown at display position `p`; the identity arrangement is the original
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    arrangement: Vec<usize>,
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.arrangement.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let arrangement = Vec::<usize>::deserialize(deserializer)?;
        Permutation::new(arrangement).map_err(serde::de::Error::custom)
    }
}

impl Permutation {
    pub fn new(arrangement: Vec<usize>) -> Result<Self> {
        let n = arrangement.len();
        let mut seen = vec![false; n];
        for &v in &arrangement {
            if v >= n || seen[v] {
                return Err(Error::Validation(format!(
                    "arrangement {arrangement:?} is not a bijection on 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { arrangement })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            arrangement: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.arrangement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrangement.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.arrangement.iter().enumerate().all(|(p, &o)| p == o)
    }

    pub fn arrangement(&self) -> &[usize] {
        &self.arrangement
    }

    /// Original option index shown at display position `p`.
    pub fn option_at(&self, position: usize) -> usize {
        self.arrangement[position]
    }

    /// Display position at which original option `option` appears.
    pub fn position_of(&self, option: usize) -> Option<usize> {
        self.arrangement.iter().position(|&o| o == option)
    }
}

/// The named permutation-subset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubsetKind {
    Original,
    Oi,
    Random2,
    Cyclic,
    RandomL,
    Full,
}

impl SubsetKind {
    pub const ALL: [SubsetKind; 6] = [
        SubsetKind::Original,
        SubsetKind::Oi,
        SubsetKind::Random2,
        SubsetKind::Cyclic,
        SubsetKind::RandomL,
        SubsetKind::Full,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SubsetKind::Original => "original",
            SubsetKind::Oi => "oi",
            SubsetKind::Random2 => "random2",
            SubsetKind::Cyclic => "cyclic",
            SubsetKind::RandomL => "randomL",
            SubsetKind::Full => "full",
        }
    }
}

impl std::fmt::Display for SubsetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SubsetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(SubsetKind::Original),
            "oi" => Ok(SubsetKind::Oi),
            "random2" => Ok(SubsetKind::Random2),
            "cyclic" => Ok(SubsetKind::Cyclic),
            "randoml" => Ok(SubsetKind::RandomL),
            "full" => Ok(SubsetKind::Full),
            other => Err(Error::Usage(format!(
                "unknown subset kind {other:?}; expected one of original, oi, random2, cyclic, randomL, full"
            ))),
        }
    }
}

/// An ordered collection of distinct permutations of one size, tagged with the
/// family it was built as. The first member is the anchor `r_1` for
/// order-sensitive metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    kind: SubsetKind,
    members: Vec<Permutation>,
    seed: Option<u64>,
}

impl PermutationSet {
    pub fn new(kind: SubsetKind, members: Vec<Permutation>, seed: Option<u64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("permutation set must be non-empty".into()));
        }
        let n = members[0].len();
        if members.iter().any(|m| m.len() != n) {
            return Err(Error::Validation(
                "permutation set members must all have the same length".into(),
            ));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(Error::Validation(format!(
                    "permutation set members must be distinct; {:?} repeats",
                    m.arrangement()
                )));
            }
        }
        let expected = match kind {
            SubsetKind::Original => Some(1),
            SubsetKind::Oi | SubsetKind::Random2 => Some(2),
            SubsetKind::Cyclic | SubsetKind::RandomL => Some(n),
            SubsetKind::Full => None, // checked below against n!
        };
        if let Some(count) = expected {
            if members.len() != count {
                return Err(Error::Validation(format!(
                    "{kind} set of {n} options must have {count} members, got {}",
                    members.len()
                )));
            }
        }
        if kind == SubsetKind::Full {
            let total = factorial(n);
            if members.len() as u64 != total {
                return Err(Error::Validation(format!(
                    "full set of {n} options must have {total} members, got {}",
                    members.len()
                )));
            }
        }
        if matches!(kind, SubsetKind::Original | SubsetKind::Oi | SubsetKind::Cyclic)
            && !members[0].is_identity()
        {
            return Err(Error::Validation(format!(
                "{kind} set must start with the identity permutation"
            )));
        }
        Ok(Self { kind, members, seed })
    }

    pub fn kind(&self) -> SubsetKind {
        self.kind
    }

    pub fn members(&self) -> &[Permutation] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Option count the members permute.
    pub fn option_count(&self) -> usize {
        self.members[0].len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// n! as u64. Callers cap n well below the overflow point.
pub(crate) fn factorial(n: usize) -> u64 {
    (2..=n as u64).product()
}

/// Label-probability vector a model assigned under one display order.
/// `probs[p]` is the probability of the label at display position `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub model_id: String,
    pub question_id: String,
    #[serde(rename = "arrangement")]
    pub permutation: Permutation,
    pub probs: Vec<f64>,
}

impl ResponseRecord {
    pub fn new(
        model_id: impl Into<String>,
        question_id: impl Into<String>,
        permutation: Permutation,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let record = Self {
            model_id: model_id.into(),
            question_id: question_id.into(),
            permutation,
            probs,
        };
        record.validate()?;
        Ok(record)
    }

    /// Checks the probability-vector invariants; used both by `new` and by
    /// the log loader on deserialized records.
    pub fn validate(&self) -> Result<()> {
        if self.probs.len() != self.permutation.len() {
            return Err(Error::Validation(format!(
                "record ({}, {}): {} probabilities for {} display positions",
                self.model_id,
                self.question_id,
                self.probs.len(),
                self.permutation.len()
            )));
        }
        if self.probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Validation(format!(
                "record ({}, {}): probabilities must lie in [0, 1]",
                self.model_id, self.question_id
            )));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "record ({}, {}): probabilities sum to {sum}, outside 1 ± {PROB_SUM_TOLERANCE}",
                self.model_id, self.question_id
            )));
        }
        Ok(())
    }
}

/// The model's selected answer under one display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerOutcome {
    /// Display position holding the argmax probability.
    pub chosen_position: usize,
    /// Original option index shown at that position.
    pub chosen_option: usize,
    pub is_correct: bool,
}

/// Selects the most probable label and maps it back to the option it carried.
/// Ties break toward the lowest display position.
pub fn extract_answer(record: &ResponseRecord, question: &Question) -> Result<AnswerOutcome> {
    if record.permutation.len() != question.option_count()
        || record.probs.len() != question.option_count()
    {
        return Err(Error::Schema(format!(
            "record ({}, {}) has {} positions but question {} has {} options",
            record.model_id,
            record.question_id,
            record.permutation.len(),
            question.id,
            question.option_count()
        )));
    }
    let mut chosen_position = 0;
    for (p, &prob) in record.probs.iter().enumerate() {
        if prob > record.probs[chosen_position] {
            chosen_position = p;
        }
    }
    let chosen_option = record.permutation.option_at(chosen_position);
    Ok(AnswerOutcome {
        chosen_position,
        chosen_option,
        is_correct: chosen_option == question.correct_index,
    })
}

/// Display position at which the correct option appears under `perm`.
pub fn correct_label_position(question: &Question, perm: &Permutation) -> Result<usize> {
    if perm.len() != question.option_count() {
        return Err(Error::Schema(format!(
            "permutation of length {} paired with question {} of {} options",
            perm.len(),
            question.id,
            question.option_count()
        )));
    }
    // A bijection always holds correct_index somewhere.
    Ok(perm
        .position_of(question.correct_index)
        .expect("bijection covers every option index"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question4() -> Question {
        Question::new(
            "q1",
            "stem",
            vec!["w".into(), "x".into(), "y".into(), "z".into()],
            0,
        )
        .unwrap()
    }

    fn record(perm: Vec<usize>, probs: Vec<f64>) -> ResponseRecord {
        ResponseRecord::new("m", "q1", Permutation::new(perm).unwrap(), probs).unwrap()
    }

    #[test]
    fn extract_answer_identity() {
        let q = question4();
        let r = record(vec![0, 1, 2, 3], vec![0.7, 0.1, 0.1, 0.1]);
        let out = extract_answer(&r, &q).unwrap();
        assert_eq!(out.chosen_position, 0);
        assert_eq!(out.chosen_option, 0);
        assert!(out.is_correct);
    }

    #[test]
    fn extract_answer_maps_through_permutation() {
        // Cyclic shift: position 1 displays original option 0.
        let q = question4();
        let r = record(vec![3, 0, 1, 2], vec![0.1, 0.7, 0.1, 0.1]);
        let out = extract_answer(&r, &q).unwrap();
        assert_eq!(out.chosen_position, 1);
        assert_eq!(out.chosen_option, 0);
        assert!(out.is_correct);
    }

    #[test]
    fn extract_answer_uniform_tie_breaks_low() {
        let q = question4();
        let r = record(vec![0, 1, 2, 3], vec![0.25, 0.25, 0.25, 0.25]);
        let out = extract_answer(&r, &q).unwrap();
        assert_eq!(out.chosen_position, 0);
    }

    #[test]
    fn extract_answer_rejects_length_mismatch() {
        let q = question4();
        let r = ResponseRecord::new(
            "m",
            "q1",
            Permutation::new(vec![0, 1, 2]).unwrap(),
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        assert!(matches!(extract_answer(&r, &q), Err(Error::Schema(_))));
    }

    #[test]
    fn correct_label_position_cases() {
        let q = question4();
        let id = Permutation::identity(4);
        assert_eq!(correct_label_position(&q, &id).unwrap(), 0);
        let cyc = Permutation::new(vec![3, 0, 1, 2]).unwrap();
        assert_eq!(correct_label_position(&q, &cyc).unwrap(), 1);
        let q_last = Question::new(
            "q2",
            "",
            vec!["w".into(), "x".into(), "y".into(), "z".into()],
            3,
        )
        .unwrap();
        let rev = Permutation::new(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(correct_label_position(&q_last, &rev).unwrap(), 0);
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1, 4, 2]).is_err());
    }

    #[test]
    fn response_record_rejects_bad_probability_sums() {
        let perm = Permutation::identity(4);
        assert!(ResponseRecord::new("m", "q", perm.clone(), vec![0.2, 0.2, 0.2, 0.2]).is_err());
        assert!(ResponseRecord::new("m", "q", perm.clone(), vec![0.5, 0.5, 0.5, -0.5]).is_err());
        // Within tolerance passes.
        assert!(
            ResponseRecord::new("m", "q", perm, vec![0.25, 0.25, 0.25, 0.2500000005]).is_ok()
        );
    }

    #[test]
    fn label_set_invariants() {
        assert!(LabelSet::new(vec!["A".into()]).is_err());
        assert!(LabelSet::new(vec!["A".into(), "A".into()]).is_err());
        let ls = LabelSet::alphabetic(4).unwrap();
        assert_eq!(ls.labels(), ["A", "B", "C", "D"]);
    }

    #[test]
    fn benchmark_rejects_mixed_sizes_and_duplicate_ids() {
        let ls = LabelSet::alphabetic(4).unwrap();
        let q3 = Question::new("a", "", vec!["1".into(), "2".into(), "3".into()], 0).unwrap();
        assert!(Benchmark::new("b", ls.clone(), vec![q3], None).is_err());
        let qa = question4();
        let mut qb = question4();
        qb.options = vec!["p".into(), "q".into(), "r".into(), "s".into()];
        assert!(Benchmark::new("b", ls, vec![qa, qb], None).is_err());
    }
}
