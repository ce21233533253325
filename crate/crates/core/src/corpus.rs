//! Bibliographic record ingestion and corpus selection.
//!
//! Records arrive either as CSV (RFC-4180 quoting) with the columns
//! `id,title,abstract,keywords,year,doc_type,countries` or as JSON-Lines
//! objects carrying the same field names. In CSV, `keywords` and `countries`
//! are semicolon-separated lists; in JSON-Lines they may be arrays or
//! semicolon-separated strings.
//!
//! Malformed rows never abort a parse: they are collected as
//! [`RecordError`]s and the remaining rows are kept.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::words;

/// Earliest accepted publication year.
pub const MIN_YEAR: i32 = 1900;
/// Latest accepted publication year.
pub const MAX_YEAR: i32 = 2100;

const REQUIRED_COLUMNS: [&str; 3] = ["id", "title", "year"];

/// Publication type, as reported by the bibliographic export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DocType {
    ConferenceProceeding,
    ResearchArticle,
    BookChapter,
    ConferenceReview,
    Book,
    Editorial,
    Other,
}

impl DocType {
    pub const ALL: [DocType; 7] = [
        DocType::ConferenceProceeding,
        DocType::ResearchArticle,
        DocType::BookChapter,
        DocType::ConferenceReview,
        DocType::Book,
        DocType::Editorial,
        DocType::Other,
    ];

    /// Case-insensitive lookup. Accepts the canonical names and the usual
    /// export spellings ("Conference Paper", "Article", ...). Anything
    /// unrecognized maps to [`DocType::Other`].
    pub fn parse_lenient(s: &str) -> DocType {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "conferenceproceeding"
            | "conferenceproceedings"
            | "conferencepaper"
            | "proceedings"
            | "proceedingspaper" => DocType::ConferenceProceeding,
            "researcharticle" | "article" | "journalarticle" => DocType::ResearchArticle,
            "bookchapter" | "chapter" => DocType::BookChapter,
            "conferencereview" => DocType::ConferenceReview,
            "book" => DocType::Book,
            "editorial" => DocType::Editorial,
            _ => DocType::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DocType::ConferenceProceeding => "ConferenceProceeding",
            DocType::ResearchArticle => "ResearchArticle",
            DocType::BookChapter => "BookChapter",
            DocType::ConferenceReview => "ConferenceReview",
            DocType::Book => "Book",
            DocType::Editorial => "Editorial",
            DocType::Other => "Other",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One bibliographic record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub abstract_text: String,
    pub keywords: Vec<String>,
    /// `None` when the export carried no year; such records are kept and
    /// reported separately by the per-year statistics.
    pub year: Option<i32>,
    pub doc_type: DocType,
    pub countries: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: title.into(),
            abstract_text: String::new(),
            keywords: Vec::new(),
            year: None,
            doc_type: DocType::Other,
            countries: Vec::new(),
        }
    }

    pub fn has_country(&self, country: &str) -> bool {
        let wanted = country.trim().to_lowercase();
        self.countries.iter().any(|c| c.trim().to_lowercase() == wanted)
    }
}

/// Where a corpus came from and which selections were applied to it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub filters: Vec<String>,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "source={}", self.source)?;
        if self.filters.is_empty() {
            write!(f, "; filters=none")
        } else {
            write!(f, "; filters={}", self.filters.join(" & "))
        }
    }
}

/// An ordered set of documents, sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    pub provenance: Provenance,
}

impl Corpus {
    /// Builds a corpus, sorting by id. Fails on empty or duplicate ids.
    pub fn new(mut documents: Vec<Document>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if d.id.is_empty() {
                return Err(Error::Invalid("document id must be non-empty".into()));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate document id {:?}", d.id)));
            }
        }
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Corpus { documents, provenance })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    fn derive(&self, documents: Vec<Document>, filter: String) -> Corpus {
        let mut provenance = self.provenance.clone();
        provenance.filters.push(filter);
        // order is inherited from an already sorted corpus
        Corpus { documents, provenance }
    }
}

/// A row that could not be turned into a [`Document`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    /// 1-based data row (CSV, header excluded) or line number (JSON-Lines).
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    JsonLines,
}

impl std::str::FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "jsonl" | "jsonlines" | "json-lines" | "ndjson" => Ok(RecordFormat::JsonLines),
            other => Err(Error::Config(format!("unknown record format {other:?}"))),
        }
    }
}

/// Parses a record export. Fatal errors are reserved for an unreadable or
/// non-UTF-8 stream and, for CSV, a header lacking a required column.
pub fn parse_records<R: Read>(mut input: R, format: RecordFormat, source: &str) -> Result<(Corpus, Vec<RecordError>)> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let text =
        String::from_utf8(raw).map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    let rows = match format {
        RecordFormat::Csv => parse_csv_rows(&text)?,
        RecordFormat::JsonLines => parse_jsonl_rows(&text),
    };

    let mut seen = HashSet::new();
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    for (row, parsed) in rows {
        match parsed {
            Ok(doc) => {
                if seen.insert(doc.id.clone()) {
                    documents.push(doc);
                } else {
                    errors.push(RecordError {
                        row,
                        reason: format!("duplicate id {:?}", doc.id),
                    });
                }
            }
            Err(reason) => errors.push(RecordError { row, reason }),
        }
    }
    let corpus = Corpus::new(
        documents,
        Provenance {
            source: source.to_string(),
            filters: Vec::new(),
        },
    )?;
    Ok((corpus, errors))
}

type RowResult = (usize, std::result::Result<Document, String>);

struct RawFields<'a> {
    id: Option<&'a str>,
    title: Option<&'a str>,
    abstract_text: Option<&'a str>,
    keywords: Vec<String>,
    year: Option<&'a str>,
    doc_type: Option<&'a str>,
    countries: Vec<String>,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_year(s: &str) -> std::result::Result<Option<i32>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let year: i32 = s.parse().map_err(|_| "unparseable year".to_string())?;
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(format!("year {year} outside [{MIN_YEAR}, {MAX_YEAR}]"));
    }
    Ok(Some(year))
}

fn build_document(raw: RawFields<'_>) -> std::result::Result<Document, String> {
    let id = raw.id.map(str::trim).unwrap_or("");
    if id.is_empty() {
        return Err("missing id".into());
    }
    let title = raw.title.ok_or_else(|| "missing title".to_string())?;
    let year = parse_year(raw.year.unwrap_or(""))?;
    Ok(Document {
        id: id.to_string(),
        title: title.to_string(),
        abstract_text: raw.abstract_text.unwrap_or("").to_string(),
        keywords: raw.keywords,
        year,
        doc_type: raw.doc_type.map(DocType::parse_lenient).unwrap_or(DocType::Other),
        countries: raw.countries,
    })
}

fn parse_csv_rows(text: &str) -> Result<Vec<RowResult>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
    };
    for required in REQUIRED_COLUMNS {
        if column(required).is_none() {
            return Err(Error::Schema(format!("header missing column {required:?}")));
        }
    }
    let id_col = column("id");
    let title_col = column("title");
    let abstract_col = column("abstract");
    let keywords_col = column("keywords");
    let year_col = column("year");
    let type_col = column("doc_type");
    let countries_col = column("countries");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rows.push((row, Err(format!("malformed CSV: {e}"))));
                continue;
            }
        };
        if record.len() != headers.len() {
            rows.push((
                row,
                Err(format!("expected {} fields, found {}", headers.len(), record.len())),
            ));
            continue;
        }
        let get = |c: Option<usize>| c.and_then(|c| record.get(c));
        let raw = RawFields {
            id: get(id_col),
            title: get(title_col),
            abstract_text: get(abstract_col),
            keywords: get(keywords_col).map(split_list).unwrap_or_default(),
            year: get(year_col),
            doc_type: get(type_col),
            countries: get(countries_col).map(split_list).unwrap_or_default(),
        };
        rows.push((row, build_document(raw)));
    }
    Ok(rows)
}

fn json_list(value: Option<&serde_json::Value>) -> std::result::Result<Vec<String>, String> {
    match value {
        None | Some(serde_json::Value::Null) => Ok(Vec::new()),
        Some(serde_json::Value::String(s)) => Ok(split_list(s)),
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => Ok(s.trim().to_string()),
                other => Err(format!("list entry is not a string: {other}")),
            })
            .filter(|r| r.as_ref().map_or(true, |s| !s.is_empty()))
            .collect(),
        Some(other) => Err(format!("expected list, found {other}")),
    }
}

fn parse_jsonl_rows(text: &str) -> Vec<RowResult> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                rows.push((row, Err(format!("malformed JSON: {e}"))));
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            rows.push((row, Err("record is not a JSON object".into())));
            continue;
        };
        let year_text;
        let year = match obj.get("year") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::Number(n)) => {
                year_text = n.to_string();
                Some(year_text.as_str())
            }
            Some(serde_json::Value::String(s)) => Some(s.as_str()),
            Some(_) => {
                rows.push((row, Err("unparseable year".into())));
                continue;
            }
        };
        let str_field = |k: &str| obj.get(k).and_then(|v| v.as_str());
        let keywords = json_list(obj.get("keywords"));
        let countries = json_list(obj.get("countries"));
        let parsed = match (keywords, countries) {
            (Ok(keywords), Ok(countries)) => build_document(RawFields {
                id: str_field("id"),
                title: str_field("title"),
                abstract_text: str_field("abstract"),
                keywords,
                year,
                doc_type: str_field("doc_type"),
                countries,
            }),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
        rows.push((row, parsed));
    }
    rows
}

/// Writes the corpus in the CSV record schema accepted by [`parse_records`].
pub fn write_csv<W: Write>(corpus: &Corpus, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "title", "abstract", "keywords", "year", "doc_type", "countries"])?;
    for d in corpus.documents() {
        let year = d.year.map(|y| y.to_string()).unwrap_or_default();
        w.write_record([
            d.id.as_str(),
            d.title.as_str(),
            d.abstract_text.as_str(),
            &d.keywords.join("; "),
            &year,
            d.doc_type.as_str(),
            &d.countries.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.len() >= needle.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Whether `phrase` occurs as a contiguous, case-insensitive word sequence in
/// the title, the abstract or any single keyword.
pub fn document_matches_phrase(doc: &Document, phrase: &[String]) -> bool {
    contains_phrase(&words(&doc.title), phrase)
        || contains_phrase(&words(&doc.abstract_text), phrase)
        || doc.keywords.iter().any(|k| contains_phrase(&words(k), phrase))
}

/// Keeps the documents mentioning `phrase` (see [`document_matches_phrase`]).
pub fn filter_by_phrase(corpus: &Corpus, phrase: &str) -> Result<Corpus> {
    let needle = words(phrase);
    if needle.is_empty() {
        return Err(Error::Invalid("phrase must contain at least one word".into()));
    }
    let kept = corpus
        .documents()
        .iter()
        .filter(|d| document_matches_phrase(d, &needle))
        .cloned()
        .collect();
    Ok(corpus.derive(kept, format!("phrase={:?}", needle.join(" "))))
}

/// Splits into (documents affiliated with `country`, everything else).
pub fn partition_by_country(corpus: &Corpus, country: &str) -> Result<(Corpus, Corpus)> {
    if country.trim().is_empty() {
        return Err(Error::Invalid("country must be non-empty".into()));
    }
    let (members, rest): (Vec<_>, Vec<_>) = corpus.documents().iter().cloned().partition(|d| d.has_country(country));
    Ok((
        corpus.derive(members, format!("country={:?}", country.trim())),
        corpus.derive(rest, format!("country!={:?}", country.trim())),
    ))
}

/// Restricts to documents whose year falls in `[from, to]`; documents without
/// a year are dropped.
pub fn filter_by_years(corpus: &Corpus, from: i32, to: i32) -> Corpus {
    let kept = corpus
        .documents()
        .iter()
        .filter(|d| d.year.is_some_and(|y| (from..=to).contains(&y)))
        .cloned()
        .collect();
    corpus.derive(kept, format!("years={from}..={to}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,title,abstract,keywords,year,doc_type,countries\n";

    fn parse(csv: &str) -> Result<(Corpus, Vec<RecordError>)> {
        parse_records(csv.as_bytes(), RecordFormat::Csv, "test")
    }

    #[test]
    fn three_valid_rows() {
        let input = format!(
            "{HEADER}b,Second,,,2021,Article,\na,First,Some text,ml; ai,2020,Conference Paper,Saudi Arabia\nc,Third,,,2022,Book Chapter,\n"
        );
        let (corpus, errors) = parse(&input).unwrap();
        assert!(errors.is_empty());
        assert_eq!(corpus.len(), 3);
        let ids: Vec<_> = corpus.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        let a = corpus.get("a").unwrap();
        assert_eq!(a.keywords, ["ml", "ai"]);
        assert_eq!(a.doc_type, DocType::ConferenceProceeding);
        assert_eq!(a.countries, ["Saudi Arabia"]);
    }

    #[test]
    fn bad_year_is_a_record_error() {
        let input = format!("{HEADER}a,A,,,2020,,\nb,B,,,2021,,\nc,C,,,n/a,,\n");
        let (corpus, errors) = parse(&input).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(
            errors,
            vec![RecordError {
                row: 3,
                reason: "unparseable year".into()
            }]
        );
    }

    #[test]
    fn empty_body_and_missing_year() {
        let (corpus, errors) = parse(HEADER).unwrap();
        assert!(corpus.is_empty() && errors.is_empty());

        let (corpus, errors) = parse(&format!("{HEADER}a,A,,,,,\n")).unwrap();
        assert!(errors.is_empty());
        assert_eq!(corpus.documents()[0].year, None);
    }

    #[test]
    fn out_of_range_year_and_duplicates() {
        let input = format!("{HEADER}a,A,,,1850,,\nb,B,,,2001,,\nb,B2,,,2002,,\n,X,,,2002,,\n");
        let (corpus, errors) = parse(&input).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents()[0].title, "B");
        let rows: Vec<_> = errors.iter().map(|e| e.row).collect();
        assert_eq!(rows, [1, 3, 4]);
    }

    #[test]
    fn schema_error_on_missing_column() {
        let err = parse("id,abstract,year\n1,x,2020\n").unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err:?}");
    }

    #[test]
    fn ragged_row_does_not_abort() {
        let input = format!("{HEADER}a,A,,,2020,,\nb,B\nc,C,,,2020,,\n");
        let (corpus, errors) = parse(&input).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].row, 2);
    }

    #[test]
    fn non_utf8_is_fatal() {
        let bytes: &[u8] = b"id,title,year\n\xff\xfe,x,2020\n";
        let err = parse_records(bytes, RecordFormat::Csv, "t").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn json_lines() {
        let input = r#"{"id":"x1","title":"Data Science","keywords":["a","b"],"year":2019,"doc_type":"article","countries":"Saudi Arabia; Egypt"}

{"id":"x2","title":"T","year":"oops"}
not json
{"id":"x3","title":"T3","year":null}
"#;
        let (corpus, errors) = parse_records(input.as_bytes(), RecordFormat::JsonLines, "j").unwrap();
        assert_eq!(corpus.len(), 2);
        let x1 = corpus.get("x1").unwrap();
        assert_eq!(x1.year, Some(2019));
        assert_eq!(x1.doc_type, DocType::ResearchArticle);
        assert_eq!(x1.countries, ["Saudi Arabia", "Egypt"]);
        assert_eq!(corpus.get("x3").unwrap().year, None);
        let rows: Vec<_> = errors.iter().map(|e| e.row).collect();
        assert_eq!(rows, [3, 4]);
    }

    #[test]
    fn doc_type_lookup() {
        assert_eq!(
            DocType::parse_lenient("conference proceeding"),
            DocType::ConferenceProceeding
        );
        assert_eq!(DocType::parse_lenient("BOOK"), DocType::Book);
        assert_eq!(DocType::parse_lenient("Conference Review"), DocType::ConferenceReview);
        assert_eq!(DocType::parse_lenient("Letter"), DocType::Other);
    }

    fn doc(id: &str, title: &str) -> Document {
        Document::new(id, title)
    }

    fn corpus_of(docs: Vec<Document>) -> Corpus {
        Corpus::new(docs, Provenance::default()).unwrap()
    }

    #[test]
    fn phrase_filter_cases() {
        let mut by_abstract = doc("2", "Unrelated");
        by_abstract.abstract_text = "the science of data".into();
        let mut by_keyword = doc("3", "Other");
        by_keyword.keywords = vec!["Data Science".into()];
        let mut substring = doc("4", "Database sciences");
        substring.abstract_text = "big-data science!".into();
        let c = corpus_of(vec![
            doc("1", "A Data Science Primer"),
            by_abstract,
            by_keyword,
            substring,
        ]);
        let f = filter_by_phrase(&c, "data science").unwrap();
        let ids: Vec<_> = f.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["1", "3", "4"]);
        assert_eq!(f.provenance.filters, ["phrase=\"data science\""]);
        assert!(filter_by_phrase(&c, "  ").is_err());
    }

    #[test]
    fn country_partition_cases() {
        let mut docs: Vec<_> = (0..5).map(|i| doc(&i.to_string(), "t")).collect();
        docs[1].countries = vec!["Saudi Arabia".into()];
        docs[3].countries = vec!["Egypt".into(), "Saudi Arabia".into()];
        let c = corpus_of(docs);
        let (yes, no) = partition_by_country(&c, "saudi arabia").unwrap();
        assert_eq!(yes.len(), 2);
        assert_eq!(no.len(), 3);

        let bare = corpus_of(vec![doc("a", "t"), doc("b", "t")]);
        let (yes, no) = partition_by_country(&bare, "Saudi Arabia").unwrap();
        assert!(yes.is_empty());
        assert_eq!(no.len(), 2);
    }

    #[test]
    fn year_window() {
        let mut a = doc("a", "t");
        a.year = Some(2008);
        let mut b = doc("b", "t");
        b.year = Some(2010);
        let c = corpus_of(vec![a, b, doc("c", "t")]);
        let f = filter_by_years(&c, 2009, 2022);
        assert_eq!(f.len(), 1);
        assert_eq!(f.documents()[0].id, "b");
    }
}
