//! Command-line front end: synthesize datasets, emit prompts, score
//! transcripts, and validate dataset files.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 validation found
//! violations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lns_cli::config::DatasetConfig;
use lns_cli::llm::LlmConfig;
use lns_cli::pipeline::{self, Synthesizer};
use lns_cli::{assets, prompt, record, report, validate};
use lns_core::nl::TemplateSet;

#[derive(Parser)]
#[command(
    name = "lns",
    version,
    about = "Synthesizes and scores logical-numerical reasoning tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset plus its exemplar companion file.
    Synth {
        /// Configuration file path, or the name of a stock configuration
        /// (el_en, el_hn, hl_en, hl_hn, exhl_hn, el_train, en_train).
        #[arg(long)]
        config: String,
        /// Output dataset path (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Rewrite sentences with the configured model, keeping only
        /// rewrites that preserve every protected token.
        #[arg(long)]
        refine: bool,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory of template banks overriding the built-in ones.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Write one prompt file per sample.
    Prompt {
        /// Dataset produced by `synth`.
        #[arg(long)]
        dataset: PathBuf,
        /// Worked exemplars per prompt, drawn from the companion file.
        #[arg(long, default_value_t = 0)]
        shots: usize,
        /// Output directory; prompts are written as `<id>.txt`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score model transcripts against a dataset.
    Eval {
        /// Dataset produced by `synth`.
        #[arg(long)]
        dataset: PathBuf,
        /// Directory of transcripts, one `<id>.txt` per sample.
        #[arg(long)]
        outputs: PathBuf,
        /// Restate unparseable transcripts with the configured model.
        #[arg(long)]
        llm_extract: bool,
        /// Where to write the JSON report.
        #[arg(long)]
        report: PathBuf,
    },
    /// Re-derive and check every invariant of a dataset file.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load_config(arg: &str) -> Result<DatasetConfig, String> {
    let text = if Path::new(arg).exists() {
        fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?
    } else {
        assets::builtin_config(arg)
            .ok_or_else(|| {
                format!(
                    "`{arg}` is neither a readable file nor a stock configuration ({})",
                    assets::BUILTIN_CONFIGS.join(", ")
                )
            })?
            .to_string()
    };
    DatasetConfig::parse(&text).map_err(|e| format!("{arg}: {e}"))
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Synth {
            config,
            out,
            seed,
            refine,
            jobs,
            templates,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.synthesis.seed = seed;
            }
            let pools = assets::bundled_pools();
            let templates = match templates {
                Some(dir) => assets::load_templates(&dir).map_err(|e| e.to_string())?,
                None => TemplateSet::builtin(),
            };
            let synthesizer = Synthesizer {
                config: &cfg,
                pools: &pools,
                templates: &templates,
            };
            let (mut records, mut exemplars) =
                synthesizer.synthesize(jobs.max(1)).map_err(|e| e.to_string())?;
            if refine {
                let client = LlmConfig::from_env().map_err(|e| e.to_string())?;
                let mut stats = pipeline::refine(&mut records, &client);
                let exemplar_stats = pipeline::refine(&mut exemplars, &client);
                stats.kept += exemplar_stats.kept;
                stats.rejected += exemplar_stats.rejected;
                stats.failed += exemplar_stats.failed;
                println!(
                    "refined: {} kept, {} rejected by re-validation, {} failed",
                    stats.kept, stats.rejected, stats.failed
                );
            }
            record::write_jsonl(&out, &records).map_err(|e| e.to_string())?;
            let exemplars_file = record::exemplars_path(&out);
            record::write_jsonl(&exemplars_file, &exemplars).map_err(|e| e.to_string())?;
            println!(
                "wrote {} records to {} and {} exemplars to {}",
                records.len(),
                out.display(),
                exemplars.len(),
                exemplars_file.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Prompt { dataset, shots, out } => {
            let records = record::read_jsonl(&dataset).map_err(|e| e.to_string())?;
            let exemplars_file = record::exemplars_path(&dataset);
            let exemplars = if exemplars_file.exists() {
                record::read_jsonl(&exemplars_file).map_err(|e| e.to_string())?
            } else {
                Vec::new()
            };
            fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for rec in &records {
                let text = prompt::build_prompt(rec, &exemplars, shots)
                    .map_err(|e| format!("sample {}: {e}", rec.id))?;
                let path = out.join(format!("{}.txt", rec.id));
                fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            println!("wrote {} prompts to {}", records.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            dataset,
            outputs,
            llm_extract,
            report: report_path,
        } => {
            let records = record::read_jsonl(&dataset).map_err(|e| e.to_string())?;
            let client = if llm_extract {
                Some(LlmConfig::from_env().map_err(|e| e.to_string())?)
            } else {
                None
            };
            let result = report::evaluate_dataset(
                &dataset.display().to_string(),
                &records,
                &outputs,
                client.as_ref(),
            );
            let json = serde_json::to_string_pretty(&result)
                .expect("reports always serialize");
            fs::write(&report_path, json + "\n")
                .map_err(|e| format!("{}: {e}", report_path.display()))?;
            println!("{}", result.summary_lines());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { dataset } => {
            let records = record::read_jsonl(&dataset).map_err(|e| e.to_string())?;
            let violations = validate::validate_records(&records);
            if violations.is_empty() {
                println!("ok: {} records", records.len());
                Ok(ExitCode::SUCCESS)
            } else {
                for violation in &violations {
                    eprintln!("{violation}");
                }
                eprintln!("{} violations", violations.len());
                Ok(ExitCode::from(2))
            }
        }
    }
}
