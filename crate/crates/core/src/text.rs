//! Tokenization, stopword removal, vocabulary selection and the sparse
//! document-term matrix.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// The bundled English stoplist.
pub const DEFAULT_STOPLIST: &str = include_str!("../data/stopwords_en.txt");

/// Lowercased UAX #29 words, numerals included. Used for phrase matching.
pub fn words(text: &str) -> Vec<String> {
    segments(text).map(str::to_lowercase).collect()
}

// A combining mark after a space stays glued to it under UAX #29, so
// segments are split on whitespace once more.
fn segments(text: &str) -> impl Iterator<Item = &str> {
    text.unicode_words()
        .flat_map(|w| w.split(char::is_whitespace))
        .filter(|w| !w.is_empty())
}

/// Splits text into lowercase terms.
///
/// Word boundaries follow UAX #29, so hyphenated compounds split into their
/// parts. Tokens without a single alphabetic character (numbers, punctuation) are
/// dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    segments(text)
        .filter(|w| w.chars().any(char::is_alphabetic))
        .map(str::to_lowercase)
        .collect()
}

/// A set of lowercase terms to drop before analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    terms: HashSet<String>,
}

impl Stoplist {
    /// Parses the stoplist file format: one term per line, `#` starts a
    /// comment, blank lines ignored. Terms are lowercased.
    pub fn parse(text: &str) -> Self {
        let terms = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Stoplist { terms }
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPLIST)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stoplist {
            terms: terms.into_iter().map(|t| t.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !t.is_empty() && !stoplist.contains(t))
        .cloned()
        .collect()
}

/// The token stream of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenSequence {
            doc_id: doc_id.into(),
            tokens,
        }
    }
}

/// Which document fields feed the token stream. They are concatenated in
/// the order title, abstract, keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSelection {
    pub title: bool,
    pub abstract_text: bool,
    pub keywords: bool,
}

impl Default for FieldSelection {
    fn default() -> Self {
        FieldSelection {
            title: true,
            abstract_text: true,
            keywords: true,
        }
    }
}

pub fn document_tokens(doc: &Document, fields: FieldSelection, stoplist: &Stoplist) -> TokenSequence {
    let mut tokens = Vec::new();
    if fields.title {
        tokens.extend(tokenize(&doc.title));
    }
    if fields.abstract_text {
        tokens.extend(tokenize(&doc.abstract_text));
    }
    if fields.keywords {
        for k in &doc.keywords {
            tokens.extend(tokenize(k));
        }
    }
    TokenSequence::new(doc.id.clone(), remove_stopwords(&tokens, stoplist))
}

/// Tokenizes every document in parallel; output order follows the corpus.
pub fn tokenize_corpus(corpus: &Corpus, fields: FieldSelection, stoplist: &Stoplist) -> Vec<TokenSequence> {
    corpus
        .documents()
        .par_iter()
        .map(|d| document_tokens(d, fields, stoplist))
        .collect()
}

/// The retained terms, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    frequencies: Vec<u64>,
    index: HashMap<String, usize>,
    cap: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit terms (frequencies unknown, set to 0).
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        let n = terms.len();
        Self::with_frequencies(terms, vec![0; n], n.max(1))
    }

    fn with_frequencies(terms: Vec<String>, frequencies: Vec<u64>, cap: usize) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Vocabulary {
            terms,
            frequencies,
            index,
            cap,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Corpus frequency of each retained term, aligned with [`Self::terms`].
    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Keeps the `cap` most frequent terms; ties go to the lexicographically
/// smaller term.
pub fn build_vocabulary(sequences: &[TokenSequence], cap: usize) -> Result<Vocabulary> {
    if cap == 0 {
        return Err(Error::Invalid("vocabulary cap must be at least 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sequences {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus("no tokens to build a vocabulary from".into()));
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    let (terms, freqs): (Vec<_>, Vec<_>) = ranked.into_iter().map(|(t, f)| (t.to_string(), f)).unzip();
    Vocabulary::with_frequencies(terms, freqs, cap)
}

/// Document-term count matrix in compressed sparse row form, with a
/// compressed column companion and exact integer marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseDtm {
    doc_ids: Vec<String>,
    terms: Vec<String>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<u64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_values: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl SparseDtm {
    /// Builds from per-row `(column, count)` lists. Duplicate columns within a
    /// row are summed and zero counts dropped.
    pub fn from_rows(doc_ids: Vec<String>, terms: Vec<String>, rows: Vec<Vec<(usize, u64)>>) -> Result<Self> {
        if doc_ids.len() != rows.len() {
            return Err(Error::Invalid(format!(
                "{} row labels for {} rows",
                doc_ids.len(),
                rows.len()
            )));
        }
        let n_cols = terms.len();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row_sums = Vec::with_capacity(rows.len());
        let mut col_sums = vec![0u64; n_cols];
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut sum = 0u64;
            for (c, v) in row {
                if c >= n_cols {
                    return Err(Error::Invalid(format!("column {c} out of range ({n_cols} columns)")));
                }
                if v == 0 {
                    continue;
                }
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
                sum += v;
                col_sums[c] += v;
            }
            row_sums.push(sum);
            row_ptr.push(col_idx.len());
        }
        let total = row_sums.iter().sum();

        // column-major companion
        let mut col_ptr = vec![0usize; n_cols + 1];
        for &c in &col_idx {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; col_idx.len()];
        let mut col_values = vec![0u64; col_idx.len()];
        for r in 0..row_sums.len() {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[k];
                row_idx[next[c]] = r;
                col_values[next[c]] = values[k];
                next[c] += 1;
            }
        }

        Ok(SparseDtm {
            doc_ids,
            terms,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            row_idx,
            col_values,
            row_sums,
            col_sums,
            total,
        })
    }

    /// Builds from a dense row-major table; handy for small examples.
    pub fn from_dense(doc_ids: Vec<String>, terms: Vec<String>, dense: &[Vec<u64>]) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v > 0).collect())
            .collect();
        Self::from_rows(doc_ids, terms, rows)
    }

    /// Unlabelled dense construction (rows `d0..`, columns `t0..`).
    pub fn from_dense_unlabelled(dense: &[Vec<u64>]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Invalid("ragged dense matrix".into()));
        }
        let docs = (0..dense.len()).map(|i| format!("d{i}")).collect();
        let terms = (0..n_cols).map(|j| format!("t{j}")).collect();
        Self::from_dense(docs, terms, dense)
    }

    pub fn n_rows(&self) -> usize {
        self.row_sums.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_sums.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Non-zero `(column, count)` entries of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Non-zero `(row, count)` entries of column `j`, ascending by row.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.col_values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; self.n_cols()]; self.n_rows()];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Sub-matrix keeping the given rows and columns (ascending indices).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<SparseDtm> {
        let mut remap = vec![usize::MAX; self.n_cols()];
        for (new, &old) in cols.iter().enumerate() {
            remap[old] = new;
        }
        let new_rows = rows
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter(|&(j, _)| remap[j] != usize::MAX)
                    .map(|(j, v)| (remap[j], v))
                    .collect()
            })
            .collect();
        SparseDtm::from_rows(
            rows.iter().map(|&i| self.doc_ids[i].clone()).collect(),
            cols.iter().map(|&j| self.terms[j].clone()).collect(),
            new_rows,
        )
    }

    /// Writes the MatrixMarket coordinate form (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut out: W, comment: Option<&str>) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate integer general")?;
        if let Some(c) = comment {
            for line in c.lines() {
                writeln!(out, "% {line}")?;
            }
        }
        writeln!(out, "{} {} {}", self.n_rows(), self.n_cols(), self.nnz())?;
        for i in 0..self.n_rows() {
            for (j, v) in self.row(i) {
                writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    /// Sidecar index: `axis,index,label` with 1-based indices matching the
    /// MatrixMarket file.
    pub fn write_index_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "index", "label"])?;
        for (i, d) in self.doc_ids.iter().enumerate() {
            w.write_record(["document", &(i + 1).to_string(), d])?;
        }
        for (j, t) in self.terms.iter().enumerate() {
            w.write_record(["term", &(j + 1).to_string(), t])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts vocabulary terms per document. Out-of-vocabulary tokens are
/// ignored; documents with no retained token become all-zero rows.
pub fn build_dtm(sequences: &[TokenSequence], vocab: &Vocabulary) -> Result<SparseDtm> {
    if vocab.is_empty() {
        return Err(Error::Invalid("vocabulary is empty".into()));
    }
    let rows: Vec<Vec<(usize, u64)>> = sequences
        .par_iter()
        .map(|s| {
            let mut counts: HashMap<usize, u64> = HashMap::new();
            for t in &s.tokens {
                if let Some(j) = vocab.index_of(t) {
                    *counts.entry(j).or_default() += 1;
                }
            }
            counts.into_iter().collect()
        })
        .collect();
    SparseDtm::from_rows(
        sequences.iter().map(|s| s.doc_id.clone()).collect(),
        vocab.terms().to_vec(),
        rows,
    )
}

/// Distinct terms across sequences, sorted.
pub fn distinct_terms(sequences: &[TokenSequence]) -> BTreeSet<&str> {
    sequences
        .iter()
        .flat_map(|s| s.tokens.iter().map(String::as_str))
        .collect()
}
