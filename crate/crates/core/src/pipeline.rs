//! Two-stage orchestration: generate one instruction per (CWE, level) cell
//! from the reference pairs, then apply it to every test sample of the CWE
//! and validate each repair.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{load_corpus, Corpus, CorpusError, Role, RtlSample};
use crate::prompt::{instruction_prompt, mitigation_prompt, DetailLevel, PromptError, TemplateSet};
use crate::provider::{
    resolve_cache_dir, ModelConfig, Provider, ProviderError, ProviderMode, Transport, UreqTransport,
};
use crate::report::{aggregate, EfficacyReport, Format};
use crate::rtlcheck::{evaluate_checks, Verdict};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config not found: {0}")]
    ConfigNotFound(PathBuf),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("model returned a blank instruction for {cwe_id} ({level})")]
    EmptyInstruction { cwe_id: String, level: DetailLevel },
    #[error("sample `{0}` is not a test sample")]
    NotATestSample(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Json { path: PathBuf, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn default_shots() -> u8 {
    1
}
fn default_corpus() -> PathBuf {
    "corpus".into()
}
fn default_templates() -> PathBuf {
    "templates".into()
}
fn default_cache() -> PathBuf {
    "cache".into()
}
fn default_output() -> PathBuf {
    "runs".into()
}
fn default_in_flight() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Column name in the report; defaults to the level name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub cwe_ids: Vec<String>,
    pub levels: Vec<DetailLevel>,
    #[serde(default = "default_shots")]
    pub shots: u8,
    pub instruction_model: ModelConfig,
    pub repair_model: ModelConfig,
    pub provider_mode: ProviderMode,
    #[serde(default = "default_corpus")]
    pub corpus_root: PathBuf,
    #[serde(default = "default_templates")]
    pub templates_dir: PathBuf,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl ExperimentConfig {
    /// Checks that need no file system access.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.cwe_ids.is_empty() {
            return bad("cwe_ids is empty".into());
        }
        if self.levels.is_empty() {
            return bad("levels is empty".into());
        }
        if !(1..=2).contains(&self.shots) {
            return bad(format!("shots must be 1 or 2, got {}", self.shots));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be positive".into());
        }
        for (i, c) in self.cwe_ids.iter().enumerate() {
            if self.cwe_ids[..i].contains(c) {
                return bad(format!("duplicate cwe id {c}"));
            }
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return bad(format!("duplicate level {l}"));
            }
        }
        if let Some(label) = &self.label {
            if label.trim().is_empty() {
                return bad("empty label".into());
            }
        }
        self.instruction_model
            .validate()
            .and_then(|_| self.repair_model.validate())
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }

    pub fn column_label(&self, level: DetailLevel) -> String {
        match &self.label {
            None => level.to_string(),
            Some(l) if self.levels.len() == 1 => l.clone(),
            Some(l) => format!("{l}/{level}"),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.corpus_root,
            &mut self.templates_dir,
            &mut self.cache_dir,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// A parsed run file: either one experiment or a suite sharing one output
/// directory and one report.
#[derive(Clone, Debug)]
pub struct RunFile {
    pub path: PathBuf,
    pub source: String,
    pub output_dir: PathBuf,
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteRepr {
    #[serde(default)]
    output_dir: Option<PathBuf>,
    experiments: Vec<ExperimentConfig>,
}

pub fn load_run_file(path: &Path) -> Result<RunFile, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::ConfigNotFound(path.to_path_buf()));
    }
    let source = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_run_file(path, &source)
}

/// Parses run-file text; relative paths resolve against the file's directory.
pub fn parse_run_file(path: &Path, source: &str) -> Result<RunFile, PipelineError> {
    let json_err = |e: serde_json::Error| PipelineError::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let value: Value = serde_json::from_str(source).map_err(json_err)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let (mut experiments, suite_out) = if value.get("experiments").is_some() {
        let suite: SuiteRepr = serde_json::from_value(value).map_err(json_err)?;
        (suite.experiments, suite.output_dir)
    } else {
        (vec![serde_json::from_value::<ExperimentConfig>(value).map_err(json_err)?], None)
    };
    if experiments.is_empty() {
        return Err(PipelineError::InvalidConfig("experiments is empty".into()));
    }
    for e in &mut experiments {
        e.validate()?;
        e.resolve_paths(&base);
    }
    let output_dir = match suite_out {
        Some(p) if p.is_relative() => base.join(p),
        Some(p) => p,
        None => experiments[0].output_dir.clone(),
    };
    let mut labels: Vec<String> = Vec::new();
    for e in &experiments {
        for l in &e.levels {
            let label = e.column_label(*l);
            if labels.contains(&label) {
                return Err(PipelineError::InvalidConfig(format!("column label `{label}` used twice")));
            }
            labels.push(label);
        }
    }
    Ok(RunFile {
        path: path.to_path_buf(),
        source: source.to_string(),
        output_dir,
        experiments,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionSet {
    pub instruction_id: String,
    pub config_label: String,
    pub cwe_id: String,
    pub level: DetailLevel,
    pub shots: u8,
    pub generator_model: String,
    pub reference_ids: Vec<String>,
    pub prompt: String,
    pub prompt_fingerprint: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairAttempt {
    pub config_label: String,
    pub cwe_id: String,
    pub sample_id: String,
    pub instruction_id: String,
    pub instruction_fingerprint: String,
    pub repair_model: String,
    pub prompt_fingerprint: String,
    pub raw_response: String,
    pub extracted_code: Option<String>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_error: Option<String>,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Byte offsets of `word` where it stands as a whole identifier.
fn word_positions(text: &str, word: &str) -> Vec<usize> {
    let bytes = text.as_bytes();
    text.match_indices(word)
        .map(|(i, _)| i)
        .filter(|&i| {
            let before = i == 0 || !is_ident_byte(bytes[i - 1]);
            let end = i + word.len();
            let after = end >= bytes.len() || !is_ident_byte(bytes[end]);
            before && after
        })
        .collect()
}

fn fence_of(line: &str) -> Option<(u8, usize)> {
    let t = line.trim_start();
    let ch = *t.as_bytes().first()?;
    if ch != b'`' && ch != b'~' {
        return None;
    }
    let n = t.bytes().take_while(|&b| b == ch).count();
    (n >= 3).then_some((ch, n))
}

/// Repaired code from a model reply: the last closed fenced block that
/// contains the `module` keyword; failing that, the text from the first
/// line-initial `module` through the last `endmodule`.
pub fn extract_code(raw_response: &str) -> Option<String> {
    let lines: Vec<&str> = raw_response.lines().collect();
    let mut blocks: Vec<String> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if let Some((ch, n)) = fence_of(lines[i]) {
            let close = (i + 1..lines.len()).find(|&j| {
                let t = lines[j].trim();
                t.len() >= n && t.bytes().all(|b| b == ch)
            });
            match close {
                Some(j) => {
                    blocks.push(lines[i + 1..j].join("\n"));
                    i = j + 1;
                    continue;
                }
                None => break,
            }
        }
        i += 1;
    }
    if let Some(code) = blocks.into_iter().rev().find(|b| !word_positions(b, "module").is_empty()) {
        return Some(code);
    }
    let start = word_positions(raw_response, "module").into_iter().find(|&p| {
        let line_start = raw_response[..p].rfind('\n').map_or(0, |n| n + 1);
        raw_response[line_start..p].trim().is_empty()
    })?;
    let end = word_positions(raw_response, "endmodule")
        .into_iter()
        .rfind(|&p| p > start)?;
    Some(raw_response[start..end + "endmodule".len()].to_string())
}

/// One experiment's loaded inputs and provider.
pub struct Session {
    pub config: ExperimentConfig,
    pub corpus: Corpus,
    pub templates: TemplateSet,
    pub provider: Provider,
}

pub type KeyLookup = Arc<dyn Fn(&str) -> Option<String> + Send + Sync>;

impl Session {
    /// Loads corpus and templates and checks that every cell can run.
    pub fn open(config: ExperimentConfig, transport: Arc<dyn Transport>, key_lookup: KeyLookup) -> Result<Self, PipelineError> {
        config.validate()?;
        let corpus = load_corpus(&config.corpus_root)?;
        let templates = TemplateSet::load(&config.templates_dir)?;
        for cwe in &config.cwe_ids {
            corpus.category(cwe)?;
            if !corpus.is_experiment_eligible(cwe) {
                return Err(PipelineError::InvalidConfig(format!(
                    "{cwe} needs at least one reference and one test sample"
                )));
            }
            corpus.select_references(cwe, config.shots as usize)?;
            for level in &config.levels {
                templates.get(cwe, *level, config.shots)?;
            }
        }
        let provider = Provider::new(config.provider_mode, resolve_cache_dir(&config.cache_dir))
            .with_transport(transport)
            .with_max_in_flight(config.max_in_flight)
            .with_key_lookup(move |name| key_lookup(name));
        Ok(Session {
            config,
            corpus,
            templates,
            provider,
        })
    }

    /// CWE ids in corpus manifest order.
    pub fn ordered_cwes(&self) -> Vec<String> {
        self.corpus
            .categories
            .iter()
            .filter(|c| self.config.cwe_ids.contains(&c.id))
            .map(|c| c.id.clone())
            .collect()
    }

    pub fn ordered_levels(&self) -> Vec<DetailLevel> {
        let mut levels = self.config.levels.clone();
        levels.sort();
        levels
    }

    pub fn generate_instruction(&self, cwe_id: &str, level: DetailLevel) -> Result<InstructionSet, PipelineError> {
        let shots = self.config.shots;
        let template = self.templates.get(cwe_id, level, shots)?;
        let refs = self.corpus.select_references(cwe_id, shots as usize)?;
        let prompt = instruction_prompt(template, &refs, self.corpus.category(cwe_id)?)?;
        let completion = match self.provider.complete(&self.config.instruction_model, &prompt.text) {
            Err(ProviderError::EmptyResponse) => {
                return Err(PipelineError::EmptyInstruction {
                    cwe_id: cwe_id.to_string(),
                    level,
                })
            }
            other => other?,
        };
        let label = self.config.column_label(level);
        Ok(InstructionSet {
            instruction_id: format!("{}-{cwe_id}", slug(&label)),
            config_label: label,
            cwe_id: cwe_id.to_string(),
            level,
            shots,
            generator_model: self.config.instruction_model.model_name.clone(),
            reference_ids: refs.into_iter().map(|r| r.sample_id).collect(),
            prompt: prompt.text,
            prompt_fingerprint: completion.request_fingerprint,
            text: completion.text,
        })
    }

    /// Provider failures are returned as errors; content problems become
    /// Indeterminate verdicts.
    pub fn mitigate(&self, instruction: &InstructionSet, sample: &RtlSample) -> Result<RepairAttempt, PipelineError> {
        if sample.role != Role::Test {
            return Err(PipelineError::NotATestSample(sample.sample_id.clone()));
        }
        let prompt = mitigation_prompt(&self.templates.general_task, &instruction.text, &sample.vulnerable_code)?;
        let completion = self.provider.complete(&self.config.repair_model, &prompt.text)?;
        let extracted = extract_code(&completion.text);
        let verdict = match &extracted {
            Some(code) => evaluate_checks(code, &sample.checks),
            None => Verdict::indeterminate("no Verilog module found in the response"),
        };
        Ok(RepairAttempt {
            config_label: instruction.config_label.clone(),
            cwe_id: sample.cwe_id.clone(),
            sample_id: sample.sample_id.clone(),
            instruction_id: instruction.instruction_id.clone(),
            instruction_fingerprint: instruction.prompt_fingerprint.clone(),
            repair_model: self.config.repair_model.model_name.clone(),
            prompt_fingerprint: completion.request_fingerprint,
            raw_response: completion.text,
            extracted_code: extracted,
            verdict,
            provider_error: None,
        })
    }

    /// Attempt record for a repair whose model call failed.
    fn failed_attempt(&self, instruction: &InstructionSet, sample: &RtlSample, err: &ProviderError) -> RepairAttempt {
        let prompt = mitigation_prompt(&self.templates.general_task, &instruction.text, &sample.vulnerable_code)
            .map(|p| crate::provider::config_fingerprint(&self.config.repair_model, &p.text))
            .unwrap_or_default();
        RepairAttempt {
            config_label: instruction.config_label.clone(),
            cwe_id: sample.cwe_id.clone(),
            sample_id: sample.sample_id.clone(),
            instruction_id: instruction.instruction_id.clone(),
            instruction_fingerprint: instruction.prompt_fingerprint.clone(),
            repair_model: self.config.repair_model.model_name.clone(),
            prompt_fingerprint: prompt,
            raw_response: String::new(),
            extracted_code: None,
            verdict: Verdict::indeterminate(format!("model call failed: {err}")),
            provider_error: Some(err.to_string()),
        }
    }

    /// Repairs every sample with one instruction using up to `workers`
    /// threads. Results keep sample order.
    pub fn mitigate_all(
        &self,
        instruction: &InstructionSet,
        samples: &[&RtlSample],
        workers: usize,
    ) -> Result<Vec<RepairAttempt>, PipelineError> {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<RepairAttempt, PipelineError>>>> =
            Mutex::new((0..samples.len()).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..workers.clamp(1, samples.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(sample) = samples.get(i) else { break };
                    let result = match self.mitigate(instruction, sample) {
                        Err(PipelineError::Provider(e)) => {
                            log::warn!("{} {}: {e}", instruction.instruction_id, sample.sample_id);
                            Ok(self.failed_attempt(instruction, sample, &e))
                        }
                        other => other,
                    };
                    slots.lock().unwrap()[i] = Some(result);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every index is filled"))
            .collect()
    }
}

/// Lowercase file-name-safe form of a label.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

pub struct RunOptions {
    pub transport: Arc<dyn Transport>,
    pub key_lookup: KeyLookup,
    /// Run directory name; default is `<UTC timestamp>-<config hash>`.
    pub run_id: Option<String>,
    /// Overrides the run file's output directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            transport: Arc::new(UreqTransport::default()),
            key_lookup: Arc::new(|name| std::env::var(name).ok()),
            run_id: None,
            output_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub instructions: Vec<InstructionSet>,
    pub attempts: Vec<RepairAttempt>,
    pub report: EfficacyReport,
}

pub const INSTRUCTIONS_DIR: &str = "instructions";
pub const ATTEMPTS_DIR: &str = "attempts";
pub const CONFIG_COPY: &str = "config.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn create_run_dir(parent: &Path, run_id: Option<&str>, source: &str) -> Result<PathBuf, PipelineError> {
    std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    let base = match run_id {
        Some(id) => {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(PipelineError::InvalidConfig(format!("bad run id `{id}`")));
            }
            id.to_string()
        }
        None => {
            let hash = hex::encode(Sha256::digest(source.as_bytes()));
            format!("{}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S"), &hash[..8])
        }
    };
    let mut dir = parent.join(&base);
    let mut n = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => break,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && run_id.is_none() => {
                n += 1;
                dir = parent.join(format!("{base}-{n}"));
            }
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    for sub in [INSTRUCTIONS_DIR, ATTEMPTS_DIR] {
        let p = dir.join(sub);
        std::fs::create_dir(&p).map_err(io_err(&p))?;
    }
    Ok(dir)
}

/// Runs every experiment of a run file and writes all artifacts plus the
/// combined report under a fresh run directory.
pub fn run(run_file: &RunFile, opts: &RunOptions) -> Result<RunOutcome, PipelineError> {
    let sessions = run_file
        .experiments
        .iter()
        .map(|e| Session::open(e.clone(), opts.transport.clone(), opts.key_lookup.clone()))
        .collect::<Result<Vec<_>, _>>()?;

    let parent = opts.output_dir.as_deref().unwrap_or(&run_file.output_dir);
    let run_dir = create_run_dir(parent, opts.run_id.as_deref(), &run_file.source)?;
    let copy = run_dir.join(CONFIG_COPY);
    std::fs::write(&copy, &run_file.source).map_err(io_err(&copy))?;

    let mut instructions = Vec::new();
    let mut attempts = Vec::new();
    for session in &sessions {
        for cwe in session.ordered_cwes() {
            for level in session.ordered_levels() {
                let mut inst = session.generate_instruction(&cwe, level)?;
                inst.instruction_id = format!("{:04}-{}", instructions.len() + 1, inst.instruction_id);
                write_json(&run_dir.join(INSTRUCTIONS_DIR).join(format!("{}.json", inst.instruction_id)), &inst)?;
                log::info!("instruction {} ready", inst.instruction_id);

                let samples = session.corpus.test_samples(&cwe)?;
                for a in session.mitigate_all(&inst, &samples, session.config.max_in_flight)? {
                    let name = format!(
                        "{:04}-{}-{}-{}.json",
                        attempts.len() + 1,
                        slug(&a.config_label),
                        a.cwe_id,
                        a.sample_id
                    );
                    write_json(&run_dir.join(ATTEMPTS_DIR).join(name), &a)?;
                    attempts.push(a);
                }
                instructions.push(inst);
            }
        }
    }

    let report = aggregate(&attempts, |a| a.config_label.clone());
    write_report(&run_dir, &report)?;
    Ok(RunOutcome {
        run_dir,
        instructions,
        attempts,
        report,
    })
}

pub fn write_report(run_dir: &Path, report: &EfficacyReport) -> Result<(), PipelineError> {
    for (name, format) in [("report.md", Format::Markdown), ("report.csv", Format::Csv)] {
        let p = run_dir.join(name);
        std::fs::write(&p, report.render(format)).map_err(io_err(&p))?;
    }
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(dir: &Path) -> Result<Vec<T>, PipelineError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Json {
                path: p.clone(),
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Instruction and attempt records of a finished run, in file-name order.
pub fn load_run_dir(run_dir: &Path) -> Result<(Vec<InstructionSet>, Vec<RepairAttempt>), PipelineError> {
    if !run_dir.join(ATTEMPTS_DIR).is_dir() {
        return Err(PipelineError::Io {
            path: run_dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a run directory"),
        });
    }
    let inst_dir = run_dir.join(INSTRUCTIONS_DIR);
    let instructions = if inst_dir.is_dir() { read_records(&inst_dir)? } else { Vec::new() };
    Ok((instructions, read_records(&run_dir.join(ATTEMPTS_DIR))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_examples() {
        assert_eq!(
            extract_code("Here is the fix:\n```\nmodule m; endmodule\n```").as_deref(),
            Some("module m; endmodule")
        );
        assert_eq!(extract_code("I cannot repair this."), None);
        let two = "```text\nnotes only\n```\n\n```verilog\nmodule a;\nendmodule\n```\n";
        assert_eq!(extract_code(two).as_deref(), Some("module a;\nendmodule"));
    }

    #[test]
    fn word_boundaries() {
        assert_eq!(word_positions("endmodule module modules _module", "module"), vec![10]);
        assert!(extract_code("```\nendmodule only\n```").is_none());
    }

    #[test]
    fn labels() {
        let mut c: ExperimentConfig = serde_json::from_str(
            r#"{"cwe_ids": ["CWE-1"], "levels": ["Basic"], "instruction_model": {"model_name": "a"},
                "repair_model": {"model_name": "a"}, "provider_mode": "Replay"}"#,
        )
        .unwrap();
        assert_eq!(c.column_label(DetailLevel::Basic), "Basic");
        c.label = Some("GPT-4".into());
        assert_eq!(c.column_label(DetailLevel::Basic), "GPT-4");
        c.levels.push(DetailLevel::Advanced);
        assert_eq!(c.column_label(DetailLevel::Advanced), "GPT-4/Advanced");
        assert_eq!(slug("GPT-4/Advanced"), "gpt-4-advanced");
        assert_eq!(slug("Two-shot"), "two-shot");
    }

    #[test]
    fn config_validation() {
        let parse = |s: &str| parse_run_file(Path::new("/x/run.json"), s);
        let base = r#""instruction_model": {"model_name": "a"}, "repair_model": {"model_name": "a"}, "provider_mode": "Replay""#;
        assert!(matches!(
            parse(&format!(r#"{{"cwe_ids": [], "levels": ["Basic"], {base}}}"#)),
            Err(PipelineError::InvalidConfig(_))
        ));
        assert!(matches!(
            parse(&format!(r#"{{"cwe_ids": ["CWE-1"], "levels": ["Basic"], "shots": 3, {base}}}"#)),
            Err(PipelineError::InvalidConfig(_))
        ));
        let ok = parse(&format!(r#"{{"cwe_ids": ["CWE-1"], "levels": ["Basic"], {base}}}"#)).unwrap();
        assert_eq!(ok.experiments[0].corpus_root, Path::new("/x/corpus"));
        assert_eq!(ok.output_dir, Path::new("/x/runs"));
        let dup = format!(
            r#"{{"experiments": [{{"cwe_ids": ["CWE-1"], "levels": ["Basic"], {base}}}, {{"cwe_ids": ["CWE-1"], "levels": ["Basic"], {base}}}]}}"#
        );
        assert!(matches!(parse(&dup), Err(PipelineError::InvalidConfig(m)) if m.contains("twice")));
        assert!(matches!(
            load_run_file(Path::new("/definitely/missing.json")),
            Err(PipelineError::ConfigNotFound(_))
        ));
    }
}
