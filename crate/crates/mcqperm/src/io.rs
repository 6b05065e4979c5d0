//! File formats, prompt rendering, and report emission.
//!
//! Formats are line-oriented and deterministic so outputs are greppable,
//! diffable, and byte-identical across runs:
//!
//! - benchmarks: JSONL; a header record `{benchmark_id, labels, instruction?,
//!   few_shot?}` followed by one `{id, text?, options, correct_index}` record
//!   per question;
//! - response logs: JSONL; `{model_id, question_id, arrangement, probs}` per
//!   record, floats serialized losslessly (shortest round-trip form);
//! - metric tables: TSV with a fixed column order
//!   `model_id benchmark_id subset metric score question_count`;
//! - protocol reports: sectioned TSV grids plus a flat scatter table.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricName, MetricRow, MetricTable};
use crate::protocol::{FitOutcome, ProtocolReport, StabilityOutcome, TargetKind};
use crate::types::{Benchmark, LabelSet, Permutation, PromptParts, Question, ResponseRecord, SubsetKind};

#[derive(Serialize, Deserialize)]
struct BenchmarkHeader {
    benchmark_id: String,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instruction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    few_shot: Option<String>,
}

fn parse_error(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

/// Numbered non-empty lines of a text file.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let content = fs::read_to_string(path)?;
    Ok(content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

/// Parses a benchmark file, enforcing every structural invariant.
pub fn load_benchmark(path: &Path) -> Result<Benchmark> {
    let lines = read_lines(path)?;
    let Some((header_line, header_text)) = lines.first() else {
        return Err(Error::Validation(format!(
            "empty benchmark file {}",
            path.display()
        )));
    };
    let header: BenchmarkHeader = serde_json::from_str(header_text)
        .map_err(|e| parse_error(path, *header_line, e))?;
    let label_set = LabelSet::new(header.labels)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let prompt_parts = match (header.instruction, header.few_shot) {
        (None, None) => None,
        (instruction, few_shot) => Some(PromptParts {
            instruction: instruction.unwrap_or_default(),
            few_shot: few_shot.unwrap_or_default(),
        }),
    };

    let mut questions = Vec::with_capacity(lines.len() - 1);
    for (line_no, text) in &lines[1..] {
        let raw: Question =
            serde_json::from_str(text).map_err(|e| parse_error(path, *line_no, e))?;
        let question = Question::new(raw.id.clone(), raw.text, raw.options, raw.correct_index)
            .map_err(|e| Error::Validation(format!("question {}: {e}", raw.id)))?;
        questions.push(question);
    }
    if questions.is_empty() {
        return Err(Error::Validation(format!(
            "benchmark file {} has a header but no questions",
            path.display()
        )));
    }
    Benchmark::new(header.benchmark_id, label_set, questions, prompt_parts)
        .map_err(|e| Error::Validation(e.to_string()))
}

/// Writes a benchmark in the format [`load_benchmark`] reads.
pub fn save_benchmark(benchmark: &Benchmark, path: &Path) -> Result<()> {
    let header = BenchmarkHeader {
        benchmark_id: benchmark.id.clone(),
        labels: benchmark.label_set.labels().to_vec(),
        instruction: benchmark.prompt_parts.as_ref().map(|p| p.instruction.clone()),
        few_shot: benchmark.prompt_parts.as_ref().map(|p| p.few_shot.clone()),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for question in &benchmark.questions {
        out.push_str(&serde_json::to_string(question).expect("question serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a response log, enforcing the record invariants.
pub fn load_logs(path: &Path) -> Result<Vec<ResponseRecord>> {
    let mut records = Vec::new();
    for (line_no, text) in read_lines(path)? {
        let record: ResponseRecord =
            serde_json::from_str(&text).map_err(|e| parse_error(path, line_no, e))?;
        record.validate().map_err(|e| {
            Error::Validation(format!("{}:{line_no}: {e}", path.display()))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records one JSON object per line; floats keep their exact value.
pub fn save_logs(records: &[ResponseRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads and concatenates every `*.jsonl` log in a directory, in filename
/// order.
pub fn load_logs_dir(dir: &Path) -> Result<Vec<ResponseRecord>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!(
            "no .jsonl log files under {}",
            dir.display()
        )));
    }
    let mut records = Vec::new();
    for path in paths {
        records.extend(load_logs(&path)?);
    }
    Ok(records)
}

const TABLE_HEADER: &str = "model_id\tbenchmark_id\tsubset\tmetric\tscore\tquestion_count";

/// Writes a metric table as TSV in canonical row order.
pub fn save_table(table: &MetricTable, path: &Path) -> Result<()> {
    let mut sorted = table.clone();
    sorted.sort();
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in sorted.rows() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.model_id, row.benchmark_id, row.subset, row.metric, row.score, row.question_count
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a TSV metric table written by [`save_table`].
pub fn load_table(path: &Path) -> Result<MetricTable> {
    let lines = read_lines(path)?;
    let Some((first_no, first)) = lines.first() else {
        return Err(Error::Validation(format!(
            "empty table file {}",
            path.display()
        )));
    };
    if first != TABLE_HEADER {
        return Err(parse_error(path, *first_no, "unrecognized table header"));
    }
    let mut table = MetricTable::new();
    for (line_no, text) in &lines[1..] {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 6 {
            return Err(parse_error(path, *line_no, "expected 6 tab-separated fields"));
        }
        let row = MetricRow {
            model_id: fields[0].to_string(),
            benchmark_id: fields[1].to_string(),
            subset: fields[2].parse::<SubsetKind>().map_err(|e| parse_error(path, *line_no, e))?,
            metric: fields[3].parse::<MetricName>().map_err(|e| parse_error(path, *line_no, e))?,
            score: fields[4].parse::<f64>().map_err(|e| parse_error(path, *line_no, e))?,
            question_count: fields[5].parse::<usize>().map_err(|e| parse_error(path, *line_no, e))?,
        };
        table.push(row).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    }
    Ok(table)
}

/// Loads and merges every `*.tsv` table in a directory.
pub fn load_tables_dir(dir: &Path) -> Result<MetricTable> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "tsv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!(
            "no .tsv table files under {}",
            dir.display()
        )));
    }
    let mut merged = MetricTable::new();
    for path in paths {
        let table = load_table(&path)?;
        merged
            .extend(table.rows().iter().cloned())
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    }
    Ok(merged)
}

/// Renders the evaluation prompt for one question under one display order:
/// instruction, few-shot block, and question stem (blank segments skipped),
/// then one `<label>. <option text>` line per display position with the
/// labels fixed and only the option texts permuted, terminated by
/// `"Answer: "`.
pub fn render_prompt(
    benchmark: &Benchmark,
    question: &Question,
    perm: &Permutation,
) -> Result<String> {
    let Some(parts) = &benchmark.prompt_parts else {
        return Err(Error::Config(format!(
            "benchmark {} carries no prompt parts",
            benchmark.id
        )));
    };
    if question.option_count() != benchmark.option_count()
        || perm.len() != benchmark.option_count()
    {
        return Err(Error::Schema(format!(
            "question {} or permutation does not match benchmark {} option count",
            question.id, benchmark.id
        )));
    }
    let mut out = String::new();
    for segment in [&parts.instruction, &parts.few_shot, &question.text] {
        if !segment.is_empty() {
            out.push_str(segment);
            out.push('\n');
        }
    }
    for (position, label) in benchmark.label_set.labels().iter().enumerate() {
        out.push_str(label);
        out.push_str(". ");
        out.push_str(&question.options[perm.option_at(position)]);
        out.push('\n');
    }
    out.push_str("Answer: ");
    Ok(out)
}

/// One rendered prompt, as emitted by the `render-prompts` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub question_id: String,
    pub arrangement: Vec<usize>,
    pub prompt: String,
}

pub fn save_prompts(prompts: &[PromptRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for prompt in prompts {
        out.push_str(&serde_json::to_string(prompt).expect("prompt serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Renders a protocol report as sectioned text: one R2 grid per target with a
/// per-row best-metric marker, one stability grid per sample size, and the
/// flat scatter table. Refuses to emit an R2 grid with holes.
pub fn save_report(report: &ProtocolReport, path: &Path) -> Result<()> {
    fs::write(path, render_report(report)?)?;
    Ok(())
}

pub fn render_report(report: &ProtocolReport) -> Result<String> {
    let subsets: Vec<SubsetKind> = report
        .r2
        .iter()
        .map(|e| e.subset)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let metrics: Vec<MetricName> = report
        .r2
        .iter()
        .map(|e| e.metric)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut missing = Vec::new();
    for &subset in &subsets {
        for &metric in &metrics {
            for target in TargetKind::ALL {
                if report.r2_value(subset, metric, target).is_none() {
                    missing.push(format!("r2({subset}, {metric}, {target})"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::TableCoverage { cells: missing });
    }

    let mut out = String::from("# mcqperm report\n");

    for target in TargetKind::ALL {
        if report.r2.is_empty() {
            break;
        }
        out.push_str(&format!("\n[r2 target={target}]\n"));
        out.push_str("subset");
        for metric in &metrics {
            out.push_str(&format!("\t{metric}"));
        }
        out.push_str("\tbest\n");
        for &subset in &subsets {
            out.push_str(subset.as_str());
            let mut best: Option<(MetricName, f64)> = None;
            for &metric in &metrics {
                let outcome = report
                    .r2_value(subset, metric, target)
                    .expect("grid checked complete");
                match outcome {
                    FitOutcome::R2(v) => {
                        out.push_str(&format!("\t{v:.6}"));
                        if best.is_none_or(|(_, b)| *v > b) {
                            best = Some((metric, *v));
                        }
                    }
                    FitOutcome::Undefined(_) => out.push_str("\tundefined"),
                }
            }
            match best {
                Some((metric, _)) => out.push_str(&format!("\t{metric}\n")),
                None => out.push_str("\t-\n"),
            }
        }
    }

    let sizes: Vec<usize> = report
        .stability
        .iter()
        .map(|e| e.sample_size)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for size in sizes {
        let entries: Vec<_> = report
            .stability
            .iter()
            .filter(|e| e.sample_size == size)
            .collect();
        let stability_metrics: Vec<MetricName> = entries
            .iter()
            .map(|e| e.metric)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let benchmarks: Vec<&str> = entries
            .iter()
            .map(|e| e.benchmark_id.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        out.push_str(&format!("\n[stability size={size}]\n"));
        out.push_str("benchmark");
        for metric in &stability_metrics {
            out.push_str(&format!("\t{metric}"));
        }
        out.push('\n');
        for bench in benchmarks {
            out.push_str(bench);
            for &metric in &stability_metrics {
                match report.stability_value(bench, metric, size) {
                    Some(StabilityOutcome::MeanStd(v)) => out.push_str(&format!("\t{v:.6}")),
                    Some(StabilityOutcome::Skipped(_)) => out.push_str("\tskipped"),
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
    }

    if !report.scatter.is_empty() {
        out.push_str("\n[scatter]\n");
        out.push_str("model_id\tbenchmark_id\tsubset\tmetric\tvalue\tfull_fr_c\torig_acc\n");
        for point in &report.scatter {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                point.model_id,
                point.benchmark_id,
                point.subset,
                point.metric,
                point.value,
                point.target_full_fr_complement,
                point.target_original_accuracy
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutations::{full_set, oi_set};
    use crate::protocol::{ProtocolPoint, R2Entry, StabilityEntry};
    use crate::simulate::{generate_benchmark, generate_logs, SyntheticModelSpec};
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn sample_benchmark() -> Benchmark {
        let questions = vec![
            Question::new(
                "soil-1",
                "Which surface weathers into soil the fastest?",
                vec![
                    "A log rotting under ferns.".to_string(),
                    "Water moving over gravel.".to_string(),
                    "A boulder in a courtyard.".to_string(),
                    "Surf pounding a headland.".to_string(),
                ],
                0,
            )
            .unwrap(),
        ];
        Benchmark::new(
            "sample",
            LabelSet::alphabetic(4).unwrap(),
            questions,
            Some(PromptParts {
                instruction: "Pick the best option.".into(),
                few_shot: String::new(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn benchmark_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bench.jsonl");
        let benchmark = sample_benchmark();
        save_benchmark(&benchmark, &path).unwrap();
        assert_eq!(load_benchmark(&path).unwrap(), benchmark);
    }

    #[test]
    fn load_benchmark_rejects_option_count_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bench.jsonl");
        fs::write(
            &path,
            concat!(
                "{\"benchmark_id\":\"b\",\"labels\":[\"A\",\"B\",\"C\",\"D\"]}\n",
                "{\"id\":\"q1\",\"options\":[\"x\",\"y\",\"z\"],\"correct_index\":0}\n"
            ),
        )
        .unwrap();
        match load_benchmark(&path) {
            Err(Error::Validation(msg)) => assert!(msg.contains("q1"), "message: {msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn load_benchmark_rejects_empty_and_malformed() {
        let dir = tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        fs::write(&empty, "").unwrap();
        assert!(matches!(load_benchmark(&empty), Err(Error::Validation(_))));

        let bad = dir.path().join("bad.jsonl");
        fs::write(&bad, "{not json\n").unwrap();
        match load_benchmark(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn logs_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("logs.jsonl");
        let benchmark = generate_benchmark(20, 4, 7).unwrap();
        let spec = SyntheticModelSpec {
            model_id: "sim".into(),
            knowledge: 1.3,
            position_bias: vec![0.2, 0.0, -0.1, 0.4],
            content_affinity: 0.6,
            noise: 0.8,
            seed: 11,
        };
        let logs = generate_logs(&spec, &benchmark, &full_set(4).unwrap()).unwrap();
        assert_eq!(logs.len(), 480);
        save_logs(&logs, &path).unwrap();
        assert_eq!(load_logs(&path).unwrap(), logs);
    }

    #[test]
    fn load_logs_rejects_invariant_violations() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("logs.jsonl");
        fs::write(
            &path,
            "{\"model_id\":\"m\",\"question_id\":\"q\",\"arrangement\":[0,1,2,3],\"probs\":[0.2,0.2,0.2,0.2]}\n",
        )
        .unwrap();
        match load_logs(&path) {
            Err(Error::Validation(msg)) => assert!(msg.contains(":1:"), "message: {msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }

        fs::write(
            &path,
            "{\"model_id\":\"m\",\"question_id\":\"q\",\"arrangement\":[0,0,1,2],\"probs\":[0.25,0.25,0.25,0.25]}\n",
        )
        .unwrap();
        assert!(load_logs(&path).is_err());
    }

    #[test]
    fn prompt_renders_fixed_labels_and_permuted_options() {
        let benchmark = sample_benchmark();
        let question = &benchmark.questions[0];
        let identity = Permutation::identity(4);
        let prompt = render_prompt(&benchmark, question, &identity).unwrap();
        assert!(prompt.starts_with("Pick the best option.\n"));
        assert!(prompt.contains("A. A log rotting under ferns.\n"));
        assert!(prompt.contains("D. Surf pounding a headland.\n"));
        assert!(prompt.ends_with("Answer: "));

        let reversed = Permutation::new(vec![3, 2, 1, 0]).unwrap();
        let prompt = render_prompt(&benchmark, question, &reversed).unwrap();
        assert!(prompt.contains("A. Surf pounding a headland.\n"));
        assert!(prompt.contains("D. A log rotting under ferns.\n"));
    }

    #[test]
    fn prompt_requires_prompt_parts() {
        let mut benchmark = sample_benchmark();
        benchmark.prompt_parts = None;
        let question = benchmark.questions[0].clone();
        assert!(matches!(
            render_prompt(&benchmark, &question, &Permutation::identity(4)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn two_option_prompt_has_two_option_lines() {
        let benchmark = Benchmark::new(
            "two",
            LabelSet::alphabetic(2).unwrap(),
            vec![Question::new("q", "Pick one.", vec!["yes".into(), "no".into()], 0).unwrap()],
            Some(PromptParts {
                instruction: String::new(),
                few_shot: String::new(),
            }),
        )
        .unwrap();
        let prompt =
            render_prompt(&benchmark, &benchmark.questions[0], &Permutation::identity(2)).unwrap();
        let option_lines = prompt.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_uppercase())).count();
        assert_eq!(option_lines, 2);
    }

    #[test]
    fn table_round_trip_and_duplicate_rejection() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("table.tsv");
        let mut table = MetricTable::new();
        table
            .push(MetricRow {
                model_id: "m".into(),
                benchmark_id: "b".into(),
                subset: SubsetKind::Cyclic,
                metric: MetricName::WorstAccuracy,
                score: 0.375,
                question_count: 16,
            })
            .unwrap();
        table
            .push(MetricRow {
                model_id: "m".into(),
                benchmark_id: "b".into(),
                subset: SubsetKind::Cyclic,
                metric: MetricName::ProbMass,
                score: 0.2812341234999,
                question_count: 16,
            })
            .unwrap();
        save_table(&table, &path).unwrap();
        let loaded = load_table(&path).unwrap();
        assert_eq!(
            loaded.get("m", "b", SubsetKind::Cyclic, MetricName::ProbMass),
            Some(0.2812341234999)
        );
        assert_eq!(loaded.rows().len(), 2);

        let content = fs::read_to_string(&path).unwrap();
        fs::write(&path, format!("{content}m\tb\tcyclic\twacc\t0.5\t16\n")).unwrap();
        assert!(load_table(&path).is_err());
    }

    #[test]
    fn report_refuses_grid_holes() {
        let report = ProtocolReport {
            r2: vec![R2Entry {
                subset: SubsetKind::Oi,
                metric: MetricName::AvgAccuracy,
                target: TargetKind::FullFluctuation,
                outcome: FitOutcome::R2(0.5),
            }],
            stability: Vec::new(),
            scatter: Vec::new(),
        };
        match render_report(&report) {
            Err(Error::TableCoverage { cells }) => assert_eq!(cells.len(), 2),
            other => panic!("expected coverage refusal, got {other:?}"),
        }
    }

    #[test]
    fn report_marks_row_best() {
        let mut r2 = Vec::new();
        for (metric, value) in [
            (MetricName::AvgAccuracy, 0.81),
            (MetricName::WorstAccuracy, 0.93),
        ] {
            for target in TargetKind::ALL {
                r2.push(R2Entry {
                    subset: SubsetKind::Cyclic,
                    metric,
                    target,
                    outcome: FitOutcome::R2(value),
                });
            }
        }
        let report = ProtocolReport {
            r2,
            stability: vec![StabilityEntry {
                benchmark_id: "b".into(),
                metric: MetricName::FrComplement,
                sample_size: 2,
                outcome: StabilityOutcome::Skipped("degenerate".into()),
            }],
            scatter: vec![ProtocolPoint {
                model_id: "m".into(),
                benchmark_id: "b".into(),
                subset: SubsetKind::Cyclic,
                metric: MetricName::WorstAccuracy,
                value: 0.5,
                target_full_fr_complement: 0.25,
                target_original_accuracy: 0.75,
            }],
        };
        let text = render_report(&report).unwrap();
        assert!(text.contains("[r2 target=full_fr]"));
        assert!(text.contains("\twacc\n"), "best marker column:\n{text}");
        assert!(text.contains("[stability size=2]"));
        assert!(text.contains("\tskipped"));
        assert!(text.contains("[scatter]"));
        assert!(text.contains("m\tb\tcyclic\twacc\t0.5\t0.25\t0.75"));
    }

    proptest! {
        // Log round-trip is the identity for arbitrary valid records.
        #[test]
        fn log_round_trip_identity(
            seed in 0u64..5000,
            knowledge in 0.0f64..5.0,
            noise in 0.0f64..2.0,
        ) {
            let benchmark = generate_benchmark(2, 4, seed).unwrap();
            let spec = SyntheticModelSpec {
                model_id: format!("m{seed}"),
                knowledge,
                position_bias: vec![0.1, -0.2, 0.0, 0.3],
                content_affinity: 0.4,
                noise,
                seed,
            };
            let logs = generate_logs(&spec, &benchmark, &oi_set(4).unwrap()).unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join("logs.jsonl");
            save_logs(&logs, &path).unwrap();
            prop_assert_eq!(load_logs(&path).unwrap(), logs);
        }
    }
}
