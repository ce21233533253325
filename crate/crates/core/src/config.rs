//! Pipeline configuration.
//!
//! The file format is TOML with one table per stage:
//!
//! ```toml
//! seed = 7
//! out = "report"
//!
//! [corpus_ingest]
//! input = "records.csv"
//! format = "csv"
//! phrase = "data science"
//!
//! [text_pipeline]
//! vocab_size = 1000
//!
//! [lsa]
//! dims = 2
//!
//! [lda]
//! topics = 6
//!
//! [bigrams]
//! threshold = 150
//! ```
//!
//! Unknown keys are rejected. Command-line flags override file values
//! through [`Overrides`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bigrams::GraphFormat;
use crate::corpus::RecordFormat;
use crate::error::{Error, Result};
use crate::lda::{Estimate, LdaConfig};
use crate::text::{FieldSelection, Stoplist};

/// Environment variable naming a stoplist file to use instead of the bundled
/// list when neither the config nor the command line names one.
pub const STOPLIST_ENV: &str = "CORPUS_SCOPE_STOPLIST";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub country: Option<String>,
    pub corpus_ingest: IngestSection,
    pub text_pipeline: TextSection,
    pub eda: EdaSection,
    pub lsa: LsaSection,
    pub lda: LdaSection,
    pub bigrams: BigramSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("corpus-scope-out"),
            threads: None,
            country: None,
            corpus_ingest: IngestSection::default(),
            text_pipeline: TextSection::default(),
            eda: EdaSection::default(),
            lsa: LsaSection::default(),
            lda: LdaSection::default(),
            bigrams: BigramSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub input: Option<PathBuf>,
    /// `csv` or `jsonl`; inferred from the input extension when absent.
    pub format: Option<String>,
    /// Empty string disables the phrase filter.
    pub phrase: String,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            input: None,
            format: None,
            phrase: "data science".into(),
            year_from: None,
            year_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextSection {
    pub stoplist: Option<PathBuf>,
    pub vocab_size: usize,
    pub use_title: bool,
    pub use_abstract: bool,
    pub use_keywords: bool,
}

impl Default for TextSection {
    fn default() -> Self {
        TextSection {
            stoplist: None,
            vocab_size: 1000,
            use_title: true,
            use_abstract: true,
            use_keywords: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdaSection {
    pub top_terms: usize,
    /// Defaults to the two years after the last observed year.
    pub forecast_years: Option<Vec<i32>>,
    pub allow_extrapolation: bool,
}

impl Default for EdaSection {
    fn default() -> Self {
        EdaSection {
            top_terms: 30,
            forecast_years: None,
            allow_extrapolation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsaSection {
    pub dims: usize,
    /// Documents labelled in the map and ranked in the coordinates table.
    pub top_documents: usize,
}

impl Default for LsaSection {
    fn default() -> Self {
        LsaSection {
            dims: 2,
            top_documents: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LdaVocabulary {
    /// The capped vocabulary shared with the document-term matrix.
    Capped,
    /// Every term left after stopword removal.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSection {
    pub topics: usize,
    /// Defaults to `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub estimate: Estimate,
    pub top_words: usize,
    pub vocabulary: LdaVocabulary,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSection {
            topics: d.k,
            alpha: None,
            beta: d.beta,
            iterations: d.iterations,
            burn_in: d.burn_in,
            estimate: d.estimate,
            top_words: 10,
            vocabulary: LdaVocabulary::Capped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BigramSection {
    pub threshold: u64,
    pub formats: Vec<String>,
    pub undirected: bool,
}

impl Default for BigramSection {
    fn default() -> Self {
        BigramSection {
            threshold: 150,
            formats: vec!["edgecsv".into(), "dot".into()],
            undirected: false,
        }
    }
}

/// Values supplied on the command line; each replaces its config key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub format: Option<String>,
    pub phrase: Option<String>,
    pub stoplist: Option<PathBuf>,
    pub vocab_size: Option<usize>,
    pub dims: Option<usize>,
    pub topics: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub bigram_threshold: Option<u64>,
    pub country: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        set_opt(&mut self.corpus_ingest.input, &o.input);
        set_opt(&mut self.corpus_ingest.format, &o.format);
        set(&mut self.corpus_ingest.phrase, &o.phrase);
        set_opt(&mut self.text_pipeline.stoplist, &o.stoplist);
        set(&mut self.text_pipeline.vocab_size, &o.vocab_size);
        set(&mut self.lsa.dims, &o.dims);
        set(&mut self.lda.topics, &o.topics);
        set_opt(&mut self.lda.alpha, &o.alpha);
        set(&mut self.lda.beta, &o.beta);
        set(&mut self.lda.iterations, &o.iterations);
        set(&mut self.seed, &o.seed);
        set(&mut self.bigrams.threshold, &o.bigram_threshold);
        set_opt(&mut self.country, &o.country);
        set(&mut self.out, &o.out);
        set_opt(&mut self.threads, &o.threads);
        // keep burn-in meaningful when only the sweep count was overridden
        if o.iterations.is_some() && self.lda.burn_in >= self.lda.iterations {
            self.lda.burn_in = self.lda.iterations / 5;
        }
    }

    pub fn input(&self) -> Result<&Path> {
        self.corpus_ingest
            .input
            .as_deref()
            .ok_or_else(|| Error::Config("no input file given".into()))
    }

    pub fn record_format(&self) -> Result<RecordFormat> {
        if let Some(f) = &self.corpus_ingest.format {
            return f.parse();
        }
        let ext = self
            .input()?
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "jsonl" | "ndjson" => Ok(RecordFormat::JsonLines),
            _ => Ok(RecordFormat::Csv),
        }
    }

    pub fn fields(&self) -> FieldSelection {
        FieldSelection {
            title: self.text_pipeline.use_title,
            abstract_text: self.text_pipeline.use_abstract,
            keywords: self.text_pipeline.use_keywords,
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        let k = self.lda.topics;
        LdaConfig {
            k,
            alpha: self.lda.alpha.unwrap_or(50.0 / k.max(1) as f64),
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            burn_in: self.lda.burn_in,
            seed: self.seed,
            estimate: self.lda.estimate,
        }
    }

    pub fn graph_formats(&self) -> Result<Vec<GraphFormat>> {
        self.bigrams.formats.iter().map(|f| f.parse()).collect()
    }

    /// Command line or config key, then [`STOPLIST_ENV`], then the bundled list.
    pub fn stoplist(&self) -> Result<(Stoplist, String)> {
        if let Some(p) = &self.text_pipeline.stoplist {
            return Ok((Stoplist::from_file(p)?, p.display().to_string()));
        }
        if let Some(p) = std::env::var_os(STOPLIST_ENV).filter(|p| !p.is_empty()) {
            let p = PathBuf::from(p);
            return Ok((Stoplist::from_file(&p)?, p.display().to_string()));
        }
        Ok((Stoplist::english(), "bundled:stopwords_en.txt".into()))
    }

    /// Checks every parameter against the preconditions of its stage.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.text_pipeline.vocab_size == 0 {
            return bad("vocab_size must be at least 1".into());
        }
        if !(self.text_pipeline.use_title || self.text_pipeline.use_abstract || self.text_pipeline.use_keywords) {
            return bad("at least one text field must be enabled".into());
        }
        if self.lsa.dims == 0 {
            return bad("dims must be at least 1".into());
        }
        if self.eda.top_terms == 0 || self.lda.top_words == 0 {
            return bad("top_terms and top_words must be at least 1".into());
        }
        if self.bigrams.threshold == 0 {
            return bad("bigram threshold must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if let (Some(a), Some(b)) = (self.corpus_ingest.year_from, self.corpus_ingest.year_to) {
            if a > b {
                return bad(format!("year_from {a} is after year_to {b}"));
            }
        }
        if let Some(c) = &self.country {
            if c.trim().is_empty() {
                return bad("country must be non-empty".into());
            }
        }
        self.graph_formats()?;
        if self.corpus_ingest.format.is_some() {
            self.record_format()?;
        }
        self.lda_config().validate()
    }
}
