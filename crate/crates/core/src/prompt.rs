//! Prompt assembly: task templates per CWE and detail level, the
//! instruction-generation prompt and the general mitigation prompt.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{CweCategory, ReferencePair};

pub const GENERAL_TASK_FILE: &str = "general_task.txt";

/// Separator placed between rendered parts.
pub const PART_SEPARATOR: &str = "\n\n";

/// Appended to a general task that does not already ask for a fenced reply.
pub const FENCE_REQUEST: &str =
    "Reply with the complete repaired module inside a single ```verilog fenced code block.";

// Phrases that mark each request clause in a template body.
pub const OVERVIEW_CLAUSE: &str = "high-level overview";
pub const STEPS_CLAUSE: &str = "step-by-step checklist";
pub const EXAMPLE_PAIR_CLAUSE: &str = "additional example pair";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template expects {expected} reference pair(s), got {got}")]
    ShotMismatch { expected: usize, got: usize },
    #[error("placeholder `{{{0}}}` has no value")]
    UnresolvedPlaceholder(String),
    #[error("{0} is empty")]
    EmptyInput(&'static str),
    #[error("{file}: unknown placeholder `{{{name}}}`")]
    UnknownPlaceholder { file: String, name: String },
    #[error("{file}: {reason}")]
    BadTemplate { file: String, reason: String },
    #[error("no template for {cwe_id} at level {level} with {shots} shot(s)")]
    MissingTemplate {
        cwe_id: String,
        level: DetailLevel,
        shots: u8,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DetailLevel {
    Basic,
    Intermediate,
    Advanced,
}

impl DetailLevel {
    pub const ALL: [DetailLevel; 3] = [Self::Basic, Self::Intermediate, Self::Advanced];

    /// 1-based index.
    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::Intermediate => "intermediate",
            Self::Advanced => "advanced",
        }
    }
}

impl fmt::Display for DetailLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Basic => "Basic",
            Self::Intermediate => "Intermediate",
            Self::Advanced => "Advanced",
        })
    }
}

impl FromStr for DetailLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.file_stem().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown detail level `{s}` (basic, intermediate, advanced)"))
    }
}

/// Which request clauses a template body contains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Clauses {
    pub overview: bool,
    pub steps: bool,
    pub example_pair: bool,
}

impl Clauses {
    pub fn of(body: &str) -> Self {
        let lower = body.to_lowercase();
        Clauses {
            overview: lower.contains(OVERVIEW_CLAUSE),
            steps: lower.contains(STEPS_CLAUSE),
            example_pair: lower.contains(EXAMPLE_PAIR_CLAUSE),
        }
    }

    fn as_array(self) -> [bool; 3] {
        [self.overview, self.steps, self.example_pair]
    }

    /// Strict superset of requests.
    pub fn strictly_contains(self, other: Clauses) -> bool {
        let (a, b) = (self.as_array(), other.as_array());
        a.iter().zip(&b).all(|(x, y)| *x || !*y) && a != b
    }
}

const PROSE_SLOTS: [&str; 2] = ["cwe_id", "cwe_description"];
const CODE_SLOTS: [&str; 4] = [
    "vulnerable_code",
    "secure_code",
    "vulnerable_code_2",
    "secure_code_2",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskTemplate {
    pub cwe_id: String,
    pub level: DetailLevel,
    pub shots: u8,
    pub body: String,
    /// Body text before the first code slot.
    prose: String,
}

#[derive(Debug, PartialEq, Eq)]
struct Placeholder<'a> {
    name: &'a str,
    start: usize,
    end: usize,
}

/// `{name}` occurrences where name is `[a-z0-9_]+`. Other braces are literal.
fn placeholders(text: &str) -> Vec<Placeholder<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_') {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b'}' {
                out.push(Placeholder {
                    name: &text[i + 1..j],
                    start: i,
                    end: j + 1,
                });
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

impl TaskTemplate {
    /// Validates placeholder use. Code slots must close the body, in
    /// canonical order, separated only by whitespace.
    pub fn new(cwe_id: &str, level: DetailLevel, shots: u8, body: &str, file: &str) -> Result<Self, PromptError> {
        let bad = |reason: String| PromptError::BadTemplate {
            file: file.to_string(),
            reason,
        };
        if !(1..=2).contains(&shots) {
            return Err(bad(format!("shot count {shots} is not 1 or 2")));
        }
        let found = placeholders(body);
        for p in &found {
            if !PROSE_SLOTS.contains(&p.name) && !CODE_SLOTS.contains(&p.name) {
                return Err(PromptError::UnknownPlaceholder {
                    file: file.to_string(),
                    name: p.name.to_string(),
                });
            }
        }
        let code: Vec<&Placeholder<'_>> = found.iter().filter(|p| CODE_SLOTS.contains(&p.name)).collect();
        let expected = &CODE_SLOTS[..2 * shots as usize];
        let names: Vec<&str> = code.iter().map(|p| p.name).collect();
        if names != expected {
            return Err(bad(format!(
                "code placeholders {names:?} do not match the {shots}-shot layout {expected:?}"
            )));
        }
        let first = code[0].start;
        let mut cursor = first;
        for p in &code {
            if !body[cursor..p.start].trim().is_empty() {
                return Err(bad("text between code placeholders".into()));
            }
            cursor = p.end;
        }
        if !body[cursor..].trim().is_empty() {
            return Err(bad("text after the code placeholders".into()));
        }
        let prose = body[..first].trim_end().to_string();
        if prose.trim().is_empty() {
            return Err(bad("empty task text".into()));
        }
        Ok(TaskTemplate {
            cwe_id: cwe_id.to_string(),
            level,
            shots,
            body: body.to_string(),
            prose,
        })
    }

    pub fn clauses(&self) -> Clauses {
        Clauses::of(&self.prose)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartKind {
    Task,
    Vulnerable(u8),
    Secure(u8),
    Instruction,
    CodeToRepair,
}

impl PartKind {
    pub fn header(self) -> String {
        match self {
            Self::Task => "### TASK".into(),
            Self::Vulnerable(n) => format!("### VULNERABLE EXAMPLE {n}"),
            Self::Secure(n) => format!("### SECURE EXAMPLE {n}"),
            Self::Instruction => "### INSTRUCTION".into(),
            Self::CodeToRepair => "### CODE TO REPAIR".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPart {
    pub kind: PartKind,
    pub content: String,
}

impl PromptPart {
    pub fn render(&self) -> String {
        format!("{}\n{}", self.kind.header(), self.content)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledPrompt {
    pub text: String,
    pub parts: Vec<PromptPart>,
}

impl AssembledPrompt {
    fn from_parts(parts: Vec<PromptPart>) -> Self {
        let text = parts
            .iter()
            .map(PromptPart::render)
            .collect::<Vec<_>>()
            .join(PART_SEPARATOR);
        AssembledPrompt { text, parts }
    }
}

/// Recovers part contents from assembled text given the expected headers.
/// Returns `None` if a header is missing or out of order. Contents must not
/// themselves contain a later part's header line.
pub fn split_parts(text: &str, kinds: &[PartKind]) -> Option<Vec<String>> {
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0;
    for (i, kind) in kinds.iter().enumerate() {
        let header = format!("{}\n", kind.header());
        let bound = if i == 0 {
            text.starts_with(&header).then_some((0, header.len()))?
        } else {
            let needle = format!("{PART_SEPARATOR}{header}");
            let at = pos + text[pos..].find(&needle)?;
            (at, at + needle.len())
        };
        pos = bound.1;
        bounds.push(bound);
    }
    Some(
        bounds
            .iter()
            .enumerate()
            .map(|(i, &(_, content))| {
                let end = bounds.get(i + 1).map_or(text.len(), |next| next.0);
                text[content..end].to_string()
            })
            .collect(),
    )
}

fn fill_prose(prose: &str, category: &CweCategory) -> Result<String, PromptError> {
    let mut out = String::with_capacity(prose.len());
    let mut last = 0;
    for p in placeholders(prose) {
        out.push_str(&prose[last..p.start]);
        let value = match p.name {
            "cwe_id" => &category.id,
            "cwe_description" => &category.description,
            other => return Err(PromptError::UnresolvedPlaceholder(other.to_string())),
        };
        if value.trim().is_empty() {
            return Err(PromptError::UnresolvedPlaceholder(p.name.to_string()));
        }
        out.push_str(value);
        last = p.end;
    }
    out.push_str(&prose[last..]);
    Ok(out)
}

/// Instruction-generation prompt: task, then each reference pair in order.
pub fn instruction_prompt(
    template: &TaskTemplate,
    refs: &[ReferencePair],
    category: &CweCategory,
) -> Result<AssembledPrompt, PromptError> {
    if refs.len() != template.shots as usize {
        return Err(PromptError::ShotMismatch {
            expected: template.shots as usize,
            got: refs.len(),
        });
    }
    let mut parts = vec![PromptPart {
        kind: PartKind::Task,
        content: fill_prose(&template.prose, category)?,
    }];
    for (i, pair) in refs.iter().enumerate() {
        let n = i as u8 + 1;
        let suffix = if n == 1 { String::new() } else { format!("_{n}") };
        for (kind, code, slot) in [
            (PartKind::Vulnerable(n), &pair.vulnerable, "vulnerable_code"),
            (PartKind::Secure(n), &pair.secure, "secure_code"),
        ] {
            if code.trim().is_empty() {
                return Err(PromptError::UnresolvedPlaceholder(format!("{slot}{suffix}")));
            }
            parts.push(PromptPart {
                kind,
                content: code.trim_end().to_string(),
            });
        }
    }
    Ok(AssembledPrompt::from_parts(parts))
}

/// Mitigation prompt: general task, instruction, code to repair.
pub fn mitigation_prompt(
    general_task: &str,
    instruction: &str,
    vulnerable_code: &str,
) -> Result<AssembledPrompt, PromptError> {
    for (value, which) in [
        (general_task, "general_task"),
        (instruction, "instruction"),
        (vulnerable_code, "vulnerable_code"),
    ] {
        if value.trim().is_empty() {
            return Err(PromptError::EmptyInput(which));
        }
    }
    let mut task = general_task.trim_end().to_string();
    if !task.to_lowercase().contains("fenced code block") {
        task.push_str("\n\n");
        task.push_str(FENCE_REQUEST);
    }
    Ok(AssembledPrompt::from_parts(vec![
        PromptPart {
            kind: PartKind::Task,
            content: task,
        },
        PromptPart {
            kind: PartKind::Instruction,
            content: instruction.trim_end().to_string(),
        },
        PromptPart {
            kind: PartKind::CodeToRepair,
            content: vulnerable_code.trim_end().to_string(),
        },
    ]))
}

/// All templates of a template directory, validated at load.
#[derive(Clone, Debug)]
pub struct TemplateSet {
    pub general_task: String,
    templates: BTreeMap<(String, DetailLevel, u8), TaskTemplate>,
    digest: String,
}

fn read(path: &Path) -> Result<String, PromptError> {
    std::fs::read_to_string(path).map_err(|source| PromptError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl TemplateSet {
    /// Layout: `general_task.txt`, and per CWE directory `basic.txt`,
    /// `intermediate.txt`, `advanced.txt` (one-shot), `twoshot.txt`
    /// (two-shot, Intermediate) and optionally `twoshot-<level>.txt`.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let general_path = dir.join(GENERAL_TASK_FILE);
        let general_task = read(&general_path)?;
        if general_task.trim().is_empty() {
            return Err(PromptError::EmptyInput("general_task"));
        }
        let mut hasher = Sha256::new();
        hasher.update(GENERAL_TASK_FILE.as_bytes());
        hasher.update([0]);
        hasher.update(general_task.as_bytes());
        hasher.update([0]);

        let mut cwe_dirs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|source| PromptError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        cwe_dirs.sort();

        let mut templates = BTreeMap::new();
        for cwe_dir in cwe_dirs {
            let cwe_id = cwe_dir.file_name().unwrap().to_string_lossy().into_owned();
            let mut files: Vec<PathBuf> = std::fs::read_dir(&cwe_dir)
                .map_err(|source| PromptError::Io {
                    path: cwe_dir.clone(),
                    source,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            for path in files {
                let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
                let (level, shots) = match stem.as_str() {
                    "twoshot" => (DetailLevel::Intermediate, 2),
                    s => match s.strip_prefix("twoshot-") {
                        Some(l) => (parse_level(l, &path)?, 2),
                        None => (parse_level(s, &path)?, 1),
                    },
                };
                let body = read(&path)?;
                let name = format!("{cwe_id}/{stem}.txt");
                hasher.update(name.as_bytes());
                hasher.update([0]);
                hasher.update(body.as_bytes());
                hasher.update([0]);
                let t = TaskTemplate::new(&cwe_id, level, shots, &body, &name)?;
                templates.insert((cwe_id.clone(), level, shots), t);
            }
        }
        Ok(TemplateSet {
            general_task,
            templates,
            digest: hex::encode(hasher.finalize()),
        })
    }

    pub fn get(&self, cwe_id: &str, level: DetailLevel, shots: u8) -> Result<&TaskTemplate, PromptError> {
        self.templates
            .get(&(cwe_id.to_string(), level, shots))
            .ok_or_else(|| PromptError::MissingTemplate {
                cwe_id: cwe_id.to_string(),
                level,
                shots,
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskTemplate> {
        self.templates.values()
    }

    /// SHA-256 over every template file name and body, for pinning.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

fn parse_level(s: &str, path: &Path) -> Result<DetailLevel, PromptError> {
    s.parse().map_err(|reason| PromptError::BadTemplate {
        file: path.display().to_string(),
        reason,
    })
}
