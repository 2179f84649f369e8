//! On-disk database of CWE-tagged vulnerable/secure RTL samples.
//!
//! Layout: `corpus.json` at the root lists categories and their samples; the
//! sample sources and checks files it references are paths relative to the
//! root. Loading validates every invariant up front (including that all RTL
//! parses), so queries never fail on content.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rtlcheck::{self, ChecksFileError, RtlError, SecurityCheck};

pub const MANIFEST_FILE: &str = "corpus.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no {MANIFEST_FILE} found in {0}")]
    MissingManifest(PathBuf),
    #[error("malformed manifest at {location}: {reason}")]
    MalformedManifest { location: String, reason: String },
    #[error("sample `{sample_id}` references unknown CWE `{cwe_id}`")]
    DanglingCweReference { sample_id: String, cwe_id: String },
    #[error("sample `{sample_id}` ({file}) does not parse: {error}")]
    UnparseableSample {
        sample_id: String,
        file: String,
        error: RtlError,
    },
    #[error("duplicate sample id `{sample_id}` in {cwe_id}")]
    DuplicateSampleId { cwe_id: String, sample_id: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("checks for sample `{sample_id}`: {source}")]
    Checks {
        sample_id: String,
        source: ChecksFileError,
    },
    #[error("unknown CWE `{0}`")]
    UnknownCwe(String),
    #[error("{cwe_id} has {have} reference sample(s), {want} requested")]
    NotEnoughReferences {
        cwe_id: String,
        have: usize,
        want: usize,
    },
    #[error("shot count must be at least 1")]
    ZeroShots,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweCategory {
    pub id: String,
    pub title: String,
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Reference,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtlSample {
    pub sample_id: String,
    pub cwe_id: String,
    pub role: Role,
    pub vulnerable_code: String,
    /// Required for references; optional (and unused by the pipeline) for tests.
    pub secure_code: Option<String>,
    pub annotations: Option<String>,
    pub checks: Vec<SecurityCheck>,
    /// Manifest-relative path of the vulnerable source.
    pub vulnerable_file: String,
}

impl RtlSample {
    /// Vulnerable source with the designer's annotations prepended as comments.
    pub fn annotated_vulnerable_code(&self) -> String {
        match self.annotations.as_deref().map(str::trim) {
            Some(note) if !note.is_empty() => {
                let mut out = String::new();
                for line in note.lines() {
                    out.push_str("// ");
                    out.push_str(line.trim_end());
                    out.push('\n');
                }
                out.push_str(&self.vulnerable_code);
                out
            }
            _ => self.vulnerable_code.clone(),
        }
    }
}

/// A (vulnerable, secure) reference pair used to elicit instructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferencePair {
    pub sample_id: String,
    pub vulnerable: String,
    pub secure: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub categories: Vec<CweCategory>,
    pub samples: IndexMap<String, Vec<RtlSample>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestCategory {
    id: String,
    title: String,
    description: String,
    samples: Vec<ManifestSample>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestSample {
    sample_id: String,
    #[serde(default)]
    cwe_id: Option<String>,
    role: Role,
    vulnerable_file: String,
    #[serde(default)]
    secure_file: Option<String>,
    checks_file: String,
    #[serde(default)]
    annotations: Option<String>,
}

fn malformed(location: impl Into<String>, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedManifest {
        location: location.into(),
        reason: reason.into(),
    }
}

fn is_cwe_id(id: &str) -> bool {
    id.strip_prefix("CWE-").is_some_and(|digits| {
        !digits.is_empty()
            && digits.chars().all(|c| c.is_ascii_digit())
            && digits.parse::<u64>().is_ok_and(|n| n > 0)
    })
}

pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    let manifest_path = root.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(CorpusError::MissingManifest(root.to_path_buf()));
    }
    let text = read(&manifest_path)?;
    let manifest: Vec<ManifestCategory> = serde_json::from_str(&text).map_err(|e| {
        malformed(
            format!("{MANIFEST_FILE} line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;

    let known: HashSet<&str> = manifest.iter().map(|c| c.id.as_str()).collect();
    let mut categories = Vec::new();
    let mut samples = IndexMap::new();
    for (ci, cat) in manifest.iter().enumerate() {
        let at = |field: &str| format!("[{ci}].{field}");
        if !is_cwe_id(&cat.id) {
            return Err(malformed(at("id"), format!("`{}` is not of the form CWE-<n>", cat.id)));
        }
        if samples.contains_key(&cat.id) {
            return Err(malformed(at("id"), format!("duplicate category `{}`", cat.id)));
        }
        if cat.description.trim().is_empty() {
            return Err(malformed(at("description"), "empty description"));
        }
        if cat.title.trim().is_empty() {
            return Err(malformed(at("title"), "empty title"));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (si, s) in cat.samples.iter().enumerate() {
            let at = |field: &str| format!("[{ci}].samples[{si}].{field}");
            if let Some(other) = &s.cwe_id {
                if !known.contains(other.as_str()) || *other != cat.id {
                    return Err(CorpusError::DanglingCweReference {
                        sample_id: s.sample_id.clone(),
                        cwe_id: other.clone(),
                    });
                }
            }
            if s.sample_id.trim().is_empty() {
                return Err(malformed(at("sample_id"), "empty sample id"));
            }
            if !seen.insert(s.sample_id.clone()) {
                return Err(CorpusError::DuplicateSampleId {
                    cwe_id: cat.id.clone(),
                    sample_id: s.sample_id.clone(),
                });
            }
            list.push(load_sample(root, &cat.id, s, &at)?);
        }
        categories.push(CweCategory {
            id: cat.id.clone(),
            title: cat.title.clone(),
            description: cat.description.clone(),
        });
        samples.insert(cat.id.clone(), list);
    }
    Ok(Corpus {
        categories,
        samples,
    })
}

fn load_sample(
    root: &Path,
    cwe_id: &str,
    s: &ManifestSample,
    at: &dyn Fn(&str) -> String,
) -> Result<RtlSample, CorpusError> {
    let vulnerable_code = read_rtl(root, &s.vulnerable_file, &s.sample_id)?;
    if vulnerable_code.trim().is_empty() {
        return Err(malformed(at("vulnerable_file"), "empty source"));
    }
    let secure_code = match &s.secure_file {
        Some(f) => {
            let code = read_rtl(root, f, &s.sample_id)?;
            if code.trim().is_empty() {
                return Err(malformed(at("secure_file"), "empty source"));
            }
            Some(code)
        }
        None if s.role == Role::Reference => {
            return Err(malformed(at("secure_file"), "reference samples need a secure file"));
        }
        None => None,
    };
    let checks = rtlcheck::load_checks(&root.join(&s.checks_file)).map_err(|source| {
        CorpusError::Checks {
            sample_id: s.sample_id.clone(),
            source,
        }
    })?;
    if s.role == Role::Test && checks.is_empty() {
        return Err(malformed(at("checks_file"), "test samples need at least one check"));
    }
    Ok(RtlSample {
        sample_id: s.sample_id.clone(),
        cwe_id: cwe_id.to_string(),
        role: s.role,
        vulnerable_code,
        secure_code,
        annotations: s.annotations.clone(),
        checks,
        vulnerable_file: s.vulnerable_file.clone(),
    })
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rtl(root: &Path, rel: &str, sample_id: &str) -> Result<String, CorpusError> {
    let code = read(&root.join(rel))?;
    rtlcheck::parse(&code).map_err(|error| CorpusError::UnparseableSample {
        sample_id: sample_id.to_string(),
        file: rel.to_string(),
        error,
    })?;
    Ok(code)
}

impl Corpus {
    pub fn category(&self, cwe_id: &str) -> Result<&CweCategory, CorpusError> {
        self.categories
            .iter()
            .find(|c| c.id == cwe_id)
            .ok_or_else(|| CorpusError::UnknownCwe(cwe_id.to_string()))
    }

    fn samples_of(&self, cwe_id: &str) -> Result<&[RtlSample], CorpusError> {
        self.samples
            .get(cwe_id)
            .map(Vec::as_slice)
            .ok_or_else(|| CorpusError::UnknownCwe(cwe_id.to_string()))
    }

    pub fn sample_count(&self) -> usize {
        self.samples.values().map(Vec::len).sum()
    }

    /// The first `shots` reference pairs of a category, in manifest order.
    pub fn select_references(
        &self,
        cwe_id: &str,
        shots: usize,
    ) -> Result<Vec<ReferencePair>, CorpusError> {
        if shots == 0 {
            return Err(CorpusError::ZeroShots);
        }
        let refs: Vec<&RtlSample> = self
            .samples_of(cwe_id)?
            .iter()
            .filter(|s| s.role == Role::Reference)
            .collect();
        if refs.len() < shots {
            return Err(CorpusError::NotEnoughReferences {
                cwe_id: cwe_id.to_string(),
                have: refs.len(),
                want: shots,
            });
        }
        Ok(refs
            .into_iter()
            .take(shots)
            .map(|s| ReferencePair {
                sample_id: s.sample_id.clone(),
                vulnerable: s.annotated_vulnerable_code(),
                secure: s.secure_code.clone().expect("validated at load"),
            })
            .collect())
    }

    pub fn test_samples(&self, cwe_id: &str) -> Result<Vec<&RtlSample>, CorpusError> {
        Ok(self
            .samples_of(cwe_id)?
            .iter()
            .filter(|s| s.role == Role::Test)
            .collect())
    }

    pub fn references(&self, cwe_id: &str) -> Result<Vec<&RtlSample>, CorpusError> {
        Ok(self
            .samples_of(cwe_id)?
            .iter()
            .filter(|s| s.role == Role::Reference)
            .collect())
    }

    /// Categories with at least one reference and one test sample.
    pub fn is_experiment_eligible(&self, cwe_id: &str) -> bool {
        self.samples.get(cwe_id).is_some_and(|list| {
            list.iter().any(|s| s.role == Role::Reference) && list.iter().any(|s| s.role == Role::Test)
        })
    }
}
