use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use selfhwdebug::corpus::{Role, RtlSample};
use selfhwdebug::pipeline::{
    load_run_dir, load_run_file, run, ExperimentConfig, InstructionSet, PipelineError, RunOptions, Session,
};
use selfhwdebug::prompt::DetailLevel;
use selfhwdebug::provider::UreqTransport;
use selfhwdebug::report::{aggregate, Format};
use selfhwdebug::rtlcheck::{evaluate_checks, load_checks, VerdictStatus};

#[derive(Parser)]
#[command(name = "selfhwdebug", version, about = "Self-instructed repair of RTL security weaknesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Md,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instruction for a CWE from its reference pairs.
    GenInstructions {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        cwe: String,
        #[arg(long, value_parser = parse_level)]
        level: DetailLevel,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        shots: u8,
        /// Experiment or suite file supplying models, templates and cache.
        #[arg(long)]
        config: PathBuf,
        /// Directory to write the instruction record into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair one vulnerable file with a stored instruction and validate it.
    Mitigate {
        #[arg(long)]
        instruction: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        /// Checks file; defaults to `<name>.checks.json` next to the sample.
        #[arg(long)]
        checks: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate security checks against an RTL file.
    Validate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        checks: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run an experiment or suite and write all artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Parent directory for the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Re-render the report of a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportFormat,
    },
}

fn parse_level(s: &str) -> Result<DetailLevel, String> {
    s.parse()
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::GenInstructions {
            corpus,
            cwe,
            level,
            shots,
            config,
            out,
        } => {
            let mut exp = first_experiment(&config)?;
            exp.corpus_root = corpus;
            exp.cwe_ids = vec![cwe.clone()];
            exp.levels = vec![level];
            exp.shots = shots;
            let session = open(exp)?;
            let inst = session.generate_instruction(&cwe, level)?;
            let text = serde_json::to_string_pretty(&inst)? + "\n";
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("{}.json", inst.instruction_id));
                std::fs::write(&path, &text)?;
                eprintln!("wrote {}", path.display());
            }
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Mitigate {
            instruction,
            sample,
            checks,
            config,
        } => {
            let inst: InstructionSet = serde_json::from_str(&read(&instruction)?)?;
            let code = read(&sample)?;
            let checks_path = checks.unwrap_or_else(|| default_checks_path(&sample));
            let checks = load_checks(&checks_path)?;
            let mut exp = first_experiment(&config)?;
            exp.cwe_ids = vec![inst.cwe_id.clone()];
            exp.levels = vec![inst.level];
            exp.shots = inst.shots;
            let session = open(exp)?;
            let sample_id = sample
                .file_name()
                .map(|n| n.to_string_lossy().trim_end_matches(".v").trim_end_matches(".vuln").to_string())
                .unwrap_or_default();
            let rtl = RtlSample {
                sample_id,
                cwe_id: inst.cwe_id.clone(),
                role: Role::Test,
                vulnerable_code: code,
                secure_code: None,
                annotations: None,
                checks,
                vulnerable_file: sample.display().to_string(),
            };
            let attempt = session.mitigate(&inst, &rtl)?;
            println!("{}", serde_json::to_string_pretty(&attempt)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { file, checks, json } => {
            let source = read(&file)?;
            let checks = load_checks(&checks)?;
            let verdict = evaluate_checks(&source, &checks);
            if json {
                println!("{}", serde_json::to_string_pretty(&verdict)?);
            } else {
                println!("{:?}", verdict.status);
                for f in &verdict.failed_checks {
                    println!("  {}: {}", f.check_id, f.explanation);
                }
                println!("  {}", verdict.notes);
            }
            Ok(if verdict.status == VerdictStatus::Pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Run { config, out, run_id } => {
            let run_file = load_run_file(&config)?;
            let outcome = run(
                &run_file,
                &RunOptions {
                    output_dir: out,
                    run_id,
                    ..RunOptions::default()
                },
            )?;
            print!("{}", outcome.report.render(Format::Markdown));
            eprintln!(
                "{} instructions, {} attempts written to {}",
                outcome.instructions.len(),
                outcome.attempts.len(),
                outcome.run_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { run, json, format } => {
            let (_, attempts) = load_run_dir(&run)?;
            let report = aggregate(&attempts, |a| a.config_label.clone());
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                let format = match format {
                    ReportFormat::Md => Format::Markdown,
                    ReportFormat::Csv => Format::Csv,
                };
                print!("{}", report.render(format));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn first_experiment(config: &Path) -> Result<ExperimentConfig, PipelineError> {
    Ok(load_run_file(config)?.experiments.remove(0))
}

fn open(exp: ExperimentConfig) -> Result<Session, PipelineError> {
    Session::open(
        exp,
        Arc::new(UreqTransport::default()),
        Arc::new(|name| std::env::var(name).ok()),
    )
}

/// `dir/x.vuln.v` or `dir/x.v` -> `dir/x.checks.json`.
fn default_checks_path(sample: &Path) -> PathBuf {
    let name = sample.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.trim_end_matches(".v");
    let stem = stem
        .strip_suffix(".vuln")
        .or_else(|| stem.strip_suffix(".secure"))
        .unwrap_or(stem);
    sample.with_file_name(format!("{stem}.checks.json"))
}
