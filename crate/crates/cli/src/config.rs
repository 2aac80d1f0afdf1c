//! JSON pipeline configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use hetblock::learner::LearnerConfig;
use hetblock::matcher::MatcherConfig;
use hetblock::rdf::{parse_ntriples, triples_to_property_table, SUBJECT_FIELD};
use hetblock::table::{load_csv, CsvOptions, Dataset};
use hetblock::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Ntriples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent (`.nt` is N-Triples).
    #[serde(default)]
    pub format: Option<Format>,
    /// CSV column with record ids; `subject` marks a property table.
    #[serde(default)]
    pub id_column: Option<String>,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        InputSpec {
            path: path.into(),
            format: None,
            id_column: None,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.path.extension().and_then(|e| e.to_str()) {
            Some("nt") => Format::Ntriples,
            _ => Format::Csv,
        })
    }

    pub fn load(&self, name: &str) -> Result<Dataset> {
        match self.format() {
            Format::Ntriples => triples_to_property_table(&parse_ntriples(&self.path)?, name),
            Format::Csv => load_csv(&self.path, &csv_options(self.id_column.as_deref().unwrap_or("id"))),
        }
    }
}

pub fn csv_options(id_column: &str) -> CsvOptions {
    if id_column == SUBJECT_FIELD {
        CsvOptions::property_table()
    } else {
        CsvOptions::default().with_id_column(id_column)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub left: Option<InputSpec>,
    pub right: Option<InputSpec>,
    /// Ground-truth pairs CSV, enabling evaluation.
    pub truth: Option<PathBuf>,
    /// True mappings JSON, enabling mapping precision/recall.
    pub truth_mapping: Option<PathBuf>,
    pub matcher: MatcherConfig,
    pub learner: LearnerConfig,
    /// User mapping file; skips the matcher.
    pub mappings: Option<PathBuf>,
    /// Use every field pair as a mapping; skips the matcher.
    pub exhaustive: bool,
    pub block_cap: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| match Error::from(e) {
            Error::Parse { line, message, .. } => Error::Parse {
                source_name: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    /// Exactly one of matcher, user file or exhaustive.
    pub fn validate(&self) -> Result<()> {
        if self.mappings.is_some() && self.exhaustive {
            return Err(Error::Argument(
                "choose one mapping source: a mapping file or --exhaustive, not both".into(),
            ));
        }
        self.matcher.validate()?;
        self.learner.validate()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}
