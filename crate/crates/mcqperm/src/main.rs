//! Command-line surface for the permutation-robustness toolkit.
//!
//! Subcommands mirror the pipeline: `simulate` emits synthetic response logs,
//! `render-prompts` produces harness-ready prompts, `score` turns logs into a
//! metric table, `protocol` regresses tables against the full-fluctuation and
//! original-accuracy targets, and `stddev` measures metric stability under
//! re-sampled permutations. Every output is deterministic given the flags.
//! Failures print a machine-readable JSON record on stderr and exit with a
//! kind-specific code (see the README).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcqperm::error::{Error, Result};
use mcqperm::metrics::{score_benchmark, MetricTable, PrideOptions, DEFAULT_ESTIMATION_FRACTION};
use mcqperm::permutations::build_subset;
use mcqperm::protocol::{run_protocol, stability_analysis, ProtocolReport, StabilityOptions};
use mcqperm::types::{Benchmark, ResponseRecord, SubsetKind};
use mcqperm::{io, simulate};

#[derive(Parser)]
#[command(name = "mcqperm", version, about = "Permutation-robustness metrics for multiple-choice evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate response logs from synthetic model specs.
    Simulate {
        /// JSONL file of synthetic model specs.
        #[arg(long)]
        models: PathBuf,
        /// Benchmark file, or `synthetic:questions=20,options=4,seed=7`.
        #[arg(long)]
        benchmark: String,
        /// Permutation subset kind: original, oi, random2, cyclic, randomL, full.
        #[arg(long)]
        subset: String,
        /// Seed for the random subset kinds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; one `<model_id>.jsonl` log per model.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render evaluation prompts for every (question, permutation) pair.
    RenderPrompts {
        #[arg(long)]
        benchmark: String,
        #[arg(long)]
        subset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for `prompts.jsonl`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the metric table for every model found in a log directory.
    Score {
        /// Directory of `*.jsonl` response logs.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        benchmark: String,
        #[arg(long)]
        subset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output TSV table file.
        #[arg(long)]
        out: PathBuf,
        /// Disable the prior-debiased accuracy column.
        #[arg(long)]
        no_pride: bool,
        /// Fraction of questions used for prior estimation.
        #[arg(long, default_value_t = DEFAULT_ESTIMATION_FRACTION)]
        pride_fraction: f64,
    },
    /// Regress subset metrics against full fluctuation and original accuracy.
    Protocol {
        /// Directory of predictor `*.tsv` tables.
        #[arg(long)]
        tables: PathBuf,
        /// Table carrying `fr_c` on the full subset.
        #[arg(long)]
        full_fr: PathBuf,
        /// Table carrying `aacc` on the original subset.
        #[arg(long)]
        orig_acc: PathBuf,
        /// Output report file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Standard deviation of each metric over re-sampled permutation subsets.
    Stddev {
        /// Directory of `*.jsonl` response logs covering the full subset.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        benchmark: String,
        /// Number of random subsets per sample size.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output report file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("{}", error_record(&error));
            ExitCode::from(error.exit_code().clamp(0, u8::MAX as i32) as u8)
        }
    }
}

/// JSON error record printed to stderr on failure.
fn error_record(error: &Error) -> String {
    let mut record = serde_json::json!({
        "error": error.kind(),
        "message": error.to_string(),
    });
    match error {
        Error::Coverage { missing } => {
            record["missing"] = serde_json::to_value(missing).expect("missing serializes");
        }
        Error::TableCoverage { cells } => {
            record["missing"] = serde_json::to_value(cells).expect("cells serializes");
        }
        _ => {}
    }
    record.to_string()
}

/// Either a file path or `synthetic:questions=<q>,options=<n>,seed=<s>`.
fn resolve_benchmark(arg: &str) -> Result<(Benchmark, bool)> {
    if let Some(params) = arg.strip_prefix("synthetic:") {
        let mut questions = None;
        let mut options = None;
        let mut seed = None;
        for pair in params.split(',') {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::Usage(format!("synthetic benchmark parameter {pair:?} is not key=value"))
            })?;
            let parsed: u64 = value
                .parse()
                .map_err(|_| Error::Usage(format!("synthetic parameter {key}={value:?} is not an integer")))?;
            match key {
                "questions" => questions = Some(parsed as usize),
                "options" => options = Some(parsed as usize),
                "seed" => seed = Some(parsed),
                other => {
                    return Err(Error::Usage(format!(
                        "unknown synthetic benchmark parameter {other:?}; expected questions, options, seed"
                    )))
                }
            }
        }
        let questions =
            questions.ok_or_else(|| Error::Usage("synthetic benchmark needs questions=<count>".into()))?;
        let options =
            options.ok_or_else(|| Error::Usage("synthetic benchmark needs options=<count>".into()))?;
        let benchmark = simulate::generate_benchmark(questions, options, seed.unwrap_or(0))?;
        Ok((benchmark, true))
    } else {
        Ok((io::load_benchmark(Path::new(arg))?, false))
    }
}

fn load_model_specs(path: &Path) -> Result<Vec<simulate::SyntheticModelSpec>> {
    let content = std::fs::read_to_string(path)?;
    let mut specs: Vec<simulate::SyntheticModelSpec> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let spec: simulate::SyntheticModelSpec = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if specs.iter().any(|s| s.model_id == spec.model_id) {
            return Err(Error::Validation(format!("duplicate model id {}", spec.model_id)));
        }
        if !spec
            .model_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || spec.model_id.is_empty()
        {
            return Err(Error::Validation(format!(
                "model id {:?} must be non-empty and contain only alphanumerics, '-', '_', '.'",
                spec.model_id
            )));
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(Error::Validation(format!("no model specs in {}", path.display())));
    }
    Ok(specs)
}

fn group_by_model(records: Vec<ResponseRecord>) -> BTreeMap<String, Vec<ResponseRecord>> {
    let mut by_model: BTreeMap<String, Vec<ResponseRecord>> = BTreeMap::new();
    for record in records {
        by_model.entry(record.model_id.clone()).or_default().push(record);
    }
    by_model
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            models,
            benchmark,
            subset,
            seed,
            out,
        } => {
            let specs = load_model_specs(&models)?;
            let (bench, synthetic) = resolve_benchmark(&benchmark)?;
            let kind: SubsetKind = subset.parse()?;
            let subset = build_subset(kind, bench.option_count(), seed)?;
            std::fs::create_dir_all(&out)?;
            if synthetic {
                io::save_benchmark(&bench, &out.join("benchmark.jsonl"))?;
            }
            for spec in &specs {
                let logs = simulate::generate_logs(spec, &bench, &subset)?;
                io::save_logs(&logs, &out.join(format!("{}.jsonl", spec.model_id)))?;
            }
            println!(
                "wrote {} log file(s) for subset {} ({} permutations) to {}",
                specs.len(),
                kind,
                subset.len(),
                out.display()
            );
            Ok(())
        }
        Command::RenderPrompts {
            benchmark,
            subset,
            seed,
            out,
        } => {
            let (bench, _) = resolve_benchmark(&benchmark)?;
            let kind: SubsetKind = subset.parse()?;
            let subset = build_subset(kind, bench.option_count(), seed)?;
            let mut prompts = Vec::with_capacity(bench.questions.len() * subset.len());
            for question in &bench.questions {
                for member in subset.members() {
                    prompts.push(io::PromptRecord {
                        question_id: question.id.clone(),
                        arrangement: member.arrangement().to_vec(),
                        prompt: io::render_prompt(&bench, question, member)?,
                    });
                }
            }
            std::fs::create_dir_all(&out)?;
            io::save_prompts(&prompts, &out.join("prompts.jsonl"))?;
            println!("wrote {} prompt(s) to {}", prompts.len(), out.display());
            Ok(())
        }
        Command::Score {
            logs,
            benchmark,
            subset,
            seed,
            out,
            no_pride,
            pride_fraction,
        } => {
            let (bench, _) = resolve_benchmark(&benchmark)?;
            let kind: SubsetKind = subset.parse()?;
            let subset = build_subset(kind, bench.option_count(), seed)?;
            let pride = if no_pride || subset.len() < 2 {
                None
            } else {
                Some(PrideOptions {
                    estimation_fraction: pride_fraction,
                    seed,
                })
            };
            let by_model = group_by_model(io::load_logs_dir(&logs)?);
            let mut table = MetricTable::new();
            for (_, records) in &by_model {
                let score = score_benchmark(records, &bench, &subset, pride.as_ref())?;
                table.extend(score.table_rows())?;
            }
            io::save_table(&table, &out)?;
            println!(
                "wrote {} table row(s) for {} model(s) to {}",
                table.rows().len(),
                by_model.len(),
                out.display()
            );
            Ok(())
        }
        Command::Protocol {
            tables,
            full_fr,
            orig_acc,
            out,
        } => {
            let subset_tables = io::load_tables_dir(&tables)?;
            let full_table = io::load_table(&full_fr)?;
            let orig_table = io::load_table(&orig_acc)?;
            let report = run_protocol(&subset_tables, &full_table, &orig_table)?;
            io::save_report(&report, &out)?;
            println!(
                "wrote {} r2 cell(s) and {} scatter point(s) to {}",
                report.r2.len(),
                report.scatter.len(),
                out.display()
            );
            Ok(())
        }
        Command::Stddev {
            logs,
            benchmark,
            count,
            seed,
            out,
        } => {
            let (bench, _) = resolve_benchmark(&benchmark)?;
            let records = io::load_logs_dir(&logs)?;
            let stability = stability_analysis(&records, &bench, &StabilityOptions::new(count, seed))?;
            let report = ProtocolReport {
                stability,
                ..ProtocolReport::default()
            };
            io::save_report(&report, &out)?;
            println!(
                "wrote {} stability entr(ies) to {}",
                report.stability.len(),
                out.display()
            );
            Ok(())
        }
    }
}
