//! End-to-end orchestration: ingest → text → eda → lsa → lda → bigrams.
//!
//! Every stage writes its files before the next stage starts. Output bytes
//! depend only on the configuration and the input, never on timing or
//! thread count; `run_report.json` is the one exception since it records
//! per-stage timings.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::bigrams::{count_bigrams, export_graph, threshold_graph, GraphFormat};
use crate::config::{LdaVocabulary, PipelineConfig};
use crate::corpus::{self, Corpus, RecordError};
use crate::eda;
use crate::error::{Error, Result};
use crate::lda;
use crate::lsa;
use crate::plot::{self, ScatterPoint};
use crate::svd::SvdOptions;
use crate::text::{self, SparseDtm, Stoplist, TokenSequence, Vocabulary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_FILE: &str = "run_report.json";
pub const COMPARISON_FILE: &str = "comparison.csv";
/// Terms listed per corpus in the comparison table.
pub const COMPARISON_TOP_TERMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Text,
    Eda,
    Lsa,
    Lda,
    Bigrams,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Text,
        Stage::Eda,
        Stage::Lsa,
        Stage::Lda,
        Stage::Bigrams,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Text => "text",
            Stage::Eda => "eda",
            Stage::Lsa => "lsa",
            Stage::Lda => "lda",
            Stage::Bigrams => "bigrams",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Which stages write their outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub write: BTreeSet<Stage>,
    /// Also export the normalized corpus and the record errors.
    pub export_corpus: bool,
}

impl RunOptions {
    pub fn full() -> Self {
        Self::from_stage(Stage::Ingest)
    }

    /// Stages before `from` are recomputed in memory but not written.
    pub fn from_stage(from: Stage) -> Self {
        RunOptions {
            write: Stage::ALL.into_iter().filter(|s| *s >= from).collect(),
            export_corpus: false,
        }
    }

    pub fn only(stage: Stage) -> Self {
        RunOptions {
            write: [stage].into_iter().collect(),
            export_corpus: stage == Stage::Ingest,
        }
    }
}

/// Files written by a full run, in order. `run_report.json` is not listed.
pub const FULL_RUN_OUTPUTS: [&str; 12] = [
    "dtm.mtx",
    "dtm_index.csv",
    "year_counts.csv",
    "top_terms.csv",
    "type_shares.csv",
    "year_counts.svg",
    "ca_coordinates.csv",
    "ca_map.svg",
    "lda_model.txt",
    "lda_topics.csv",
    "bigram_edges.csv",
    "bigram_graph.dot",
];

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub seconds: f64,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub stoplist: Option<String>,
    pub provenance: Option<String>,
    pub stages: Vec<StageReport>,
    /// Every file written, relative to the output directory.
    pub outputs: Vec<String>,
    pub record_errors: Vec<RecordError>,
    pub dropped: BTreeMap<String, Vec<String>>,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
}

impl RunReport {
    fn new(command: &str, config: &PipelineConfig) -> Self {
        RunReport {
            toolkit_version: VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            stoplist: None,
            provenance: None,
            stages: Vec::new(),
            outputs: Vec::new(),
            record_errors: Vec::new(),
            dropped: BTreeMap::new(),
            failed_stage: None,
            error: None,
        }
    }
}

/// A fatal error together with the report of what ran before it.
#[derive(Debug)]
pub struct PipelineFailure {
    pub error: Error,
    pub report: Box<RunReport>,
}

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.report.failed_stage {
            Some(s) => write!(f, "stage {} failed: {}", s.name(), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for PipelineFailure {}

/// Process exit code: 2 for bad input or configuration, 3 for an empty
/// result, 1 for anything else.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_)
        | Error::Csv(_)
        | Error::Schema(_)
        | Error::Config(_)
        | Error::Parse(_)
        | Error::Invalid(_)
        | Error::Extrapolation { .. } => 2,
        Error::EmptyCorpus(_) => 3,
        _ => 1,
    }
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn take(&mut self) -> Vec<String> {
        std::mem::take(&mut self.written)
    }
}

/// CSV bytes preceded by a `# provenance` comment line.
fn csv_bytes<F>(provenance: &str, header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = format!("# {provenance}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        fill(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

struct Ingested {
    corpus: Corpus,
    record_errors: Vec<RecordError>,
    parsed: usize,
}

fn ingest(config: &PipelineConfig) -> Result<Ingested> {
    let input = config.input()?;
    let file = File::open(input)?;
    let (parsed, record_errors) = corpus::parse_records(
        BufReader::new(file),
        config.record_format()?,
        &input.display().to_string(),
    )?;
    let n_parsed = parsed.len();
    let mut corpus = parsed;
    let ing = &config.corpus_ingest;
    if ing.year_from.is_some() || ing.year_to.is_some() {
        corpus = corpus::filter_by_years(
            &corpus,
            ing.year_from.unwrap_or(corpus::MIN_YEAR),
            ing.year_to.unwrap_or(corpus::MAX_YEAR),
        );
    }
    if !ing.phrase.trim().is_empty() {
        corpus = corpus::filter_by_phrase(&corpus, &ing.phrase)?;
    }
    Ok(Ingested {
        corpus,
        record_errors,
        parsed: n_parsed,
    })
}

struct TextArtifacts {
    sequences: Vec<TokenSequence>,
    vocab: Vocabulary,
    dtm: SparseDtm,
}

fn prepare_text(corpus: &Corpus, config: &PipelineConfig, stoplist: &Stoplist) -> Result<TextArtifacts> {
    let sequences = text::tokenize_corpus(corpus, config.fields(), stoplist);
    let vocab = text::build_vocabulary(&sequences, config.text_pipeline.vocab_size)?;
    let dtm = text::build_dtm(&sequences, &vocab)?;
    Ok(TextArtifacts { sequences, vocab, dtm })
}

fn lda_fit(art: &TextArtifacts, config: &PipelineConfig) -> Result<lda::LdaFit> {
    let cfg = config.lda_config();
    match config.lda.vocabulary {
        LdaVocabulary::Capped => lda::fit_lda(&art.sequences, &art.vocab, &cfg),
        LdaVocabulary::Full => {
            let full = text::build_vocabulary(&art.sequences, usize::MAX)?;
            lda::fit_lda(&art.sequences, &full, &cfg)
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn fail(error: Error, mut report: RunReport, stage: Option<Stage>, out_dir: Option<&Path>) -> PipelineFailure {
    report.failed_stage = stage;
    report.error = Some(error.to_string());
    if let Some(dir) = out_dir {
        if let Ok(bytes) = serde_json::to_vec_pretty(&report) {
            let _ = fs::write(dir.join(REPORT_FILE), bytes);
        }
    }
    PipelineFailure {
        error,
        report: Box::new(report),
    }
}

/// Checks that the configuration is valid and the input readable, before
/// anything is created on disk.
fn preflight(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    let input = config.input()?;
    File::open(input)?;
    if let Some(p) = &config.text_pipeline.stoplist {
        File::open(p)?;
    }
    Ok(())
}

pub fn run_pipeline(config: &PipelineConfig, opts: &RunOptions) -> std::result::Result<RunReport, PipelineFailure> {
    let command = if opts.write.len() == 1 {
        opts.write.iter().next().unwrap().name().to_string()
    } else {
        "run".to_string()
    };
    let report = RunReport::new(&command, config);
    if let Err(e) = preflight(config) {
        return Err(fail(e, report, None, None));
    }
    match with_threads(config.threads, || run_stages(config, opts, report)) {
        Ok(r) => r,
        Err(e) => Err(fail(e, RunReport::new(&command, config), None, None)),
    }
}

fn run_stages(
    config: &PipelineConfig,
    opts: &RunOptions,
    mut report: RunReport,
) -> std::result::Result<RunReport, PipelineFailure> {
    let dir = config.out.as_path();
    if let Err(e) = fs::create_dir_all(dir) {
        return Err(fail(e.into(), report, None, None));
    }
    let mut out = Output {
        dir,
        written: Vec::new(),
    };
    let last = opts.write.iter().next_back().copied().unwrap_or(Stage::Ingest);

    macro_rules! stage {
        ($stage:expr, $body:expr) => {{
            let started = Instant::now();
            let result: Result<_> = $body;
            match result {
                Ok((value, summary)) => {
                    let outputs = out.take();
                    report.outputs.extend(outputs.iter().cloned());
                    report.stages.push(StageReport {
                        stage: $stage,
                        seconds: started.elapsed().as_secs_f64(),
                        outputs,
                        summary,
                    });
                    value
                }
                Err(e) => {
                    report.outputs.extend(out.take());
                    return Err(fail(e, report, Some($stage), Some(dir)));
                }
            }
        }};
    }

    let write_ingest = opts.write.contains(&Stage::Ingest) && opts.export_corpus;
    let ingested = stage!(Stage::Ingest, {
        (|| {
            let ing = ingest(config)?;
            let prov = ing.corpus.provenance.to_string();
            if write_ingest {
                let mut buf = Vec::new();
                corpus::write_csv(&ing.corpus, &mut buf)?;
                out.write("corpus.csv", &buf)?;
                let errs = csv_bytes(&prov, &["row", "reason"], |w| {
                    for e in &ing.record_errors {
                        w.write_record([e.row.to_string(), e.reason.clone()])?;
                    }
                    Ok(())
                })?;
                out.write("record_errors.csv", &errs)?;
            }
            if ing.corpus.is_empty() {
                return Err(Error::EmptyCorpus(format!(
                    "no documents left after selection ({prov})"
                )));
            }
            let summary = json!({
                "records_parsed": ing.parsed,
                "record_errors": ing.record_errors.len(),
                "documents": ing.corpus.len(),
                "missing_year": ing.corpus.documents().iter().filter(|d| d.year.is_none()).count(),
            });
            Ok((ing, summary))
        })()
    });
    report.record_errors = ingested.record_errors.clone();
    let corpus = ingested.corpus;
    let provenance = corpus.provenance.to_string();
    report.provenance = Some(provenance.clone());
    if last == Stage::Ingest {
        return finish(report, dir);
    }

    let art = stage!(Stage::Text, {
        (|| {
            let (stoplist, stop_source) = config.stoplist()?;
            let art = prepare_text(&corpus, config, &stoplist)?;
            if opts.write.contains(&Stage::Text) {
                let comment = format!("{provenance}\nstoplist={stop_source}");
                let mut mtx = Vec::new();
                art.dtm.write_matrix_market(&mut mtx, Some(&comment))?;
                out.write("dtm.mtx", &mtx)?;
                let mut idx = format!("# {provenance}\n").into_bytes();
                art.dtm.write_index_csv(&mut idx)?;
                out.write("dtm_index.csv", &idx)?;
            }
            let summary = json!({
                "stoplist": stop_source,
                "stoplist_terms": stoplist.len(),
                "tokens": art.sequences.iter().map(|s| s.tokens.len()).sum::<usize>(),
                "distinct_terms": text::distinct_terms(&art.sequences).len(),
                "vocabulary": art.vocab.len(),
                "dtm_rows": art.dtm.n_rows(),
                "dtm_cols": art.dtm.n_cols(),
                "dtm_nonzeros": art.dtm.nnz(),
                "dtm_total": art.dtm.total(),
            });
            Ok(((art, stop_source), summary))
        })()
    });
    let (art, stop_source) = art;
    report.stoplist = Some(stop_source);

    if opts.write.contains(&Stage::Eda) {
        stage!(
            Stage::Eda,
            write_eda(config, &corpus, &art.dtm, &provenance, &mut out).map(|s| ((), s))
        );
    }
    if opts.write.contains(&Stage::Lsa) {
        let dropped = stage!(Stage::Lsa, write_lsa(config, &corpus, &art.dtm, &provenance, &mut out));
        report.dropped.insert("lsa_rows".into(), dropped.0);
        report.dropped.insert("lsa_columns".into(), dropped.1);
    }
    if opts.write.contains(&Stage::Lda) {
        let dropped = stage!(Stage::Lda, write_lda(config, &art, &provenance, &mut out));
        report.dropped.insert("lda_documents".into(), dropped);
    }
    if opts.write.contains(&Stage::Bigrams) {
        stage!(
            Stage::Bigrams,
            write_bigrams(config, &art.sequences, &provenance, &mut out).map(|s| ((), s))
        );
    }
    finish(report, dir)
}

fn finish(report: RunReport, dir: &Path) -> std::result::Result<RunReport, PipelineFailure> {
    match serde_json::to_vec_pretty(&report) {
        Ok(bytes) => match fs::write(dir.join(REPORT_FILE), bytes) {
            Ok(()) => Ok(report),
            Err(e) => Err(fail(e.into(), report, None, None)),
        },
        Err(e) => Err(fail(Error::Invalid(e.to_string()), report, None, None)),
    }
}

fn write_eda(
    config: &PipelineConfig,
    corpus: &Corpus,
    dtm: &SparseDtm,
    provenance: &str,
    out: &mut Output<'_>,
) -> Result<serde_json::Value> {
    let counts = eda::counts_per_year(corpus)?;
    let points = counts.series.points();
    let fit = match eda::fit_quadratic(&counts.series) {
        Ok(f) => Some(f),
        Err(e @ (Error::InsufficientData { .. } | Error::DegenerateDesign(_))) => {
            log::warn!("quadratic trend skipped: {e}");
            None
        }
        Err(e) => return Err(e),
    };
    let last_year = points.last().map(|p| p.0).unwrap_or_default();
    let years = config
        .eda
        .forecast_years
        .clone()
        .unwrap_or_else(|| vec![last_year + 1, last_year + 2]);
    let forecasts = match &fit {
        Some(f) => years
            .iter()
            .map(|&y| eda::forecast(f, y, config.eda.allow_extrapolation))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    let bytes = csv_bytes(provenance, &["year", "count", "fitted", "kind", "clamped"], |w| {
        for &(year, count) in points {
            let fitted = fit
                .as_ref()
                .map(|f| f.eval(f64::from(year)).to_string())
                .unwrap_or_default();
            w.write_record([
                year.to_string(),
                count.to_string(),
                fitted,
                "observed".into(),
                String::new(),
            ])?;
        }
        for f in &forecasts {
            w.write_record([
                f.year.to_string(),
                String::new(),
                f.value.to_string(),
                "forecast".into(),
                f.clamped.to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.write("year_counts.csv", &bytes)?;

    let top = eda::top_terms(dtm, config.eda.top_terms)?;
    let bytes = csv_bytes(provenance, &["rank", "term", "frequency", "cumulative_share"], |w| {
        for (i, t) in top.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                t.term.clone(),
                t.frequency.to_string(),
                t.cumulative_share.to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.write("top_terms.csv", &bytes)?;

    let shares = eda::type_shares(corpus)?;
    let bytes = csv_bytes(provenance, &["doc_type", "count", "percent", "exact_percent"], |w| {
        for s in &shares {
            w.write_record([
                s.doc_type.to_string(),
                s.count.to_string(),
                s.percent.to_string(),
                s.exact_percent.to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.write("type_shares.csv", &bytes)?;

    let observed: Vec<(f64, f64)> = points.iter().map(|&(y, c)| (f64::from(y), c as f64)).collect();
    let fitted: Vec<(f64, f64)> = match &fit {
        Some(f) => {
            let lo = points.first().map(|p| p.0).unwrap_or_default();
            let hi = forecasts
                .iter()
                .map(|f| f.year)
                .chain([last_year])
                .max()
                .unwrap_or(last_year);
            (lo..=hi)
                .map(|y| (f64::from(y), f.eval(f64::from(y)).max(0.0)))
                .collect()
        }
        None => Vec::new(),
    };
    let fc: Vec<(f64, f64)> = forecasts.iter().map(|f| (f64::from(f.year), f.value)).collect();
    let title = match &fit {
        Some(f) => format!(
            "Publications per year; y = {:.4e}x² {:+.4e}x {:+.4e} (R² = {:.3})",
            f.coefficients.0, f.coefficients.1, f.coefficients.2, f.r_squared
        ),
        None => "Publications per year".to_string(),
    };
    let svg = plot::trend_chart(&title, &observed, &fitted, &fc, Some(provenance));
    out.write("year_counts.svg", svg.as_bytes())?;

    Ok(json!({
        "years": points.len(),
        "missing_year": counts.missing_year,
        "fit": fit.as_ref().map(|f| json!({
            "a2": f.coefficients.0,
            "a1": f.coefficients.1,
            "a0": f.coefficients.2,
            "r_squared": f.r_squared,
            "p_value": f.p_value,
            "degenerate": f.degenerate,
            "x_encoding": f.x_encoding,
        })),
        "forecasts": forecasts,
        "top_terms_share": top.last().map(|t| t.cumulative_share),
    }))
}

/// Row and column labels removed before fitting.
type Dropped = (Vec<String>, Vec<String>);

fn write_lsa(
    config: &PipelineConfig,
    corpus: &Corpus,
    dtm: &SparseDtm,
    provenance: &str,
    out: &mut Output<'_>,
) -> Result<(Dropped, serde_json::Value)> {
    let opts = SvdOptions {
        seed: config.seed,
        ..SvdOptions::default()
    };
    let fit = lsa::fit_ca(dtm, config.lsa.dims, &opts)?;
    let model = &fit.model;

    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for id in &model.doc_ids {
        if let Some(y) = corpus.get(id).and_then(|d| d.year) {
            groups.entry(y.to_string()).or_default().push(id.clone());
        }
    }
    let years = lsa::project_supplementary(model, &groups)?;
    let ranking = lsa::representative_documents(model, model.doc_ids.len());
    let rank_of: BTreeMap<&str, (usize, f64)> = ranking
        .iter()
        .enumerate()
        .map(|(i, r)| (r.doc_id.as_str(), (i + 1, r.score)))
        .collect();

    let d = model.dims();
    let mut header = vec!["kind".to_string(), "label".to_string(), "mass".to_string()];
    header.extend((1..=d).map(|k| format!("dim{k}")));
    header.extend(["score".to_string(), "rank".to_string()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let bytes = csv_bytes(provenance, &header_refs, |w| {
        for (i, id) in model.doc_ids.iter().enumerate() {
            let (rank, score) = rank_of[id.as_str()];
            let mut rec = vec!["document".to_string(), id.clone(), model.row_masses[i].to_string()];
            rec.extend((0..d).map(|k| model.row_coords[(i, k)].to_string()));
            rec.extend([score.to_string(), rank.to_string()]);
            w.write_record(&rec)?;
        }
        for (j, term) in model.terms.iter().enumerate() {
            let mut rec = vec!["term".to_string(), term.clone(), model.col_masses[j].to_string()];
            rec.extend((0..d).map(|k| model.col_coords[(j, k)].to_string()));
            rec.extend([String::new(), String::new()]);
            w.write_record(&rec)?;
        }
        for (label, point) in &years.points {
            let mut rec = vec!["year".to_string(), label.clone(), String::new()];
            rec.extend(point.iter().map(f64::to_string));
            rec.extend([String::new(), String::new()]);
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    out.write("ca_coordinates.csv", &bytes)?;

    let top_n = config.lsa.top_documents;
    let labelled: BTreeSet<&str> = ranking.iter().take(top_n).map(|r| r.doc_id.as_str()).collect();
    let y_of = |coords: &nalgebra::DMatrix<f64>, i: usize| if d > 1 { coords[(i, 1)] } else { 0.0 };
    let mut points: Vec<ScatterPoint<'_>> = Vec::new();
    for j in 0..model.terms.len() {
        points.push(ScatterPoint {
            x: model.col_coords[(j, 0)],
            y: y_of(&model.col_coords, j),
            label: None,
            series: 1,
        });
    }
    for (i, id) in model.doc_ids.iter().enumerate() {
        points.push(ScatterPoint {
            x: model.row_coords[(i, 0)],
            y: y_of(&model.row_coords, i),
            label: labelled.contains(id.as_str()).then_some(id.as_str()),
            series: 0,
        });
    }
    for (label, p) in &years.points {
        points.push(ScatterPoint {
            x: p[0],
            y: p.get(1).copied().unwrap_or(0.0),
            label: Some(label),
            series: 2,
        });
    }
    let explained = model.explained_inertia();
    let svg = plot::scatter(
        "Correspondence analysis: documents, terms and years",
        &format!("dim 1 ({:.1}%)", 100.0 * explained[0]),
        &if d > 1 {
            format!("dim 2 ({:.1}%)", 100.0 * explained[1])
        } else {
            "dim 2".to_string()
        },
        &points,
        Some(provenance),
    );
    out.write("ca_map.svg", svg.as_bytes())?;

    let summary = json!({
        "rows": model.doc_ids.len(),
        "columns": model.terms.len(),
        "singular_values": model.singular_values,
        "explained_inertia": explained,
        "total_inertia": model.total_inertia,
        "svd_iterations": model.iterations,
        "representative_documents": ranking.iter().take(top_n).collect::<Vec<_>>(),
        "empty_year_groups": years.skipped,
    });
    Ok(((fit.dropped_rows.clone(), fit.dropped_cols.clone()), summary))
}

fn write_lda(
    config: &PipelineConfig,
    art: &TextArtifacts,
    provenance: &str,
    out: &mut Output<'_>,
) -> Result<(Vec<String>, serde_json::Value)> {
    let fit = lda_fit(art, config)?;
    let mut buf = Vec::new();
    fit.model.save(&mut buf, Some(provenance))?;
    out.write("lda_model.txt", &buf)?;

    let top = lda::top_words_per_topic(&fit.model, config.lda.top_words);
    let bytes = csv_bytes(provenance, &["topic", "rank", "term", "weight"], |w| {
        for (t, words) in top.iter().enumerate() {
            for (r, (term, weight)) in words.iter().enumerate() {
                w.write_record([t.to_string(), (r + 1).to_string(), term.clone(), weight.to_string()])?;
            }
        }
        Ok(())
    })?;
    out.write("lda_topics.csv", &bytes)?;

    let summary = json!({
        "documents": fit.model.doc_ids.len(),
        "vocabulary": fit.model.terms.len(),
        "config": fit.model.config,
        "final_log_likelihood": fit.log_likelihood.last(),
        "top_words": top
            .iter()
            .map(|ws| ws.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>(),
    });
    Ok((fit.dropped_docs, summary))
}

fn write_bigrams(
    config: &PipelineConfig,
    sequences: &[TokenSequence],
    provenance: &str,
    out: &mut Output<'_>,
) -> Result<serde_json::Value> {
    let table = count_bigrams(sequences);
    let mut graph = threshold_graph(&table, config.bigrams.threshold)?;
    if config.bigrams.undirected {
        graph = graph.undirected();
    }
    for format in config.graph_formats()? {
        let name = match format {
            GraphFormat::EdgeCsv => "bigram_edges.csv",
            GraphFormat::Dot => "bigram_graph.dot",
            GraphFormat::GraphMl => "bigram_graph.graphml",
        };
        out.write(name, &export_graph(&graph, format, Some(provenance))?)?;
    }
    let mut top: Vec<(&(String, String), &u64)> = table.pairs.iter().collect();
    top.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    Ok(json!({
        "total_bigrams": table.total_bigrams,
        "distinct_pairs": table.pairs.len(),
        "threshold": graph.threshold,
        "nodes": graph.nodes.len(),
        "edges": graph.edges.len(),
        "most_frequent": top
            .iter()
            .take(10)
            .map(|((a, b), f)| json!({"pair": format!("{a} {b}"), "frequency": f}))
            .collect::<Vec<_>>(),
    }))
}

struct SubsetProfile {
    documents: usize,
    years: BTreeMap<i32, u64>,
    types: BTreeMap<String, u32>,
    top_terms: Vec<(String, u64)>,
    topics: Vec<String>,
}

fn profile(corpus: &Corpus, config: &PipelineConfig, stoplist: &Stoplist) -> Result<SubsetProfile> {
    let years = eda::counts_per_year(corpus)?.series.points().iter().copied().collect();
    let types = eda::type_shares(corpus)?
        .into_iter()
        .map(|s| (s.doc_type.to_string(), s.percent))
        .collect();
    let art = prepare_text(corpus, config, stoplist)?;
    let top_terms = eda::top_terms(&art.dtm, COMPARISON_TOP_TERMS)?
        .into_iter()
        .map(|t| (t.term, t.frequency))
        .collect();
    let fit = lda_fit(&art, config)?;
    let topics = lda::top_words_per_topic(&fit.model, config.lda.top_words)
        .into_iter()
        .map(|ws| ws.into_iter().map(|(t, _)| t).collect::<Vec<_>>().join(" "))
        .collect();
    Ok(SubsetProfile {
        documents: corpus.len(),
        years,
        types,
        top_terms,
        topics,
    })
}

/// Profiles the documents affiliated with `country` next to the full corpus
/// and writes `comparison.csv` (`section,key,full,subset`).
pub fn compare_subsets(config: &PipelineConfig, country: &str) -> std::result::Result<RunReport, PipelineFailure> {
    let report = RunReport::new("compare", config);
    if let Err(e) = preflight(config) {
        return Err(fail(e, report, None, None));
    }
    match with_threads(config.threads, || compare_inner(config, country, report)) {
        Ok(r) => r,
        Err(e) => Err(fail(e, RunReport::new("compare", config), None, None)),
    }
}

fn compare_inner(
    config: &PipelineConfig,
    country: &str,
    mut report: RunReport,
) -> std::result::Result<RunReport, PipelineFailure> {
    let started = Instant::now();
    let result = (|| -> Result<(Vec<u8>, serde_json::Value, Vec<RecordError>, String)> {
        let ing = ingest(config)?;
        if ing.corpus.is_empty() {
            return Err(Error::EmptyCorpus("no documents left after selection".into()));
        }
        let (subset, _) = corpus::partition_by_country(&ing.corpus, country)?;
        if subset.is_empty() {
            return Err(Error::EmptyCorpus(format!(
                "no document is affiliated with {country:?}"
            )));
        }
        let (stoplist, _) = config.stoplist()?;
        let full = profile(&ing.corpus, config, &stoplist)?;
        let sub = profile(&subset, config, &stoplist)?;
        let provenance = subset.provenance.to_string();

        let bytes = csv_bytes(&provenance, &["section", "key", "full", "subset"], |w| {
            let mut row = |s: &str, k: &str, a: String, b: String| w.write_record([s, k, &a, &b]);
            row(
                "documents",
                "count",
                full.documents.to_string(),
                sub.documents.to_string(),
            )?;
            row(
                "documents",
                "share",
                "1".into(),
                (sub.documents as f64 / full.documents as f64).to_string(),
            )?;
            let years: BTreeSet<i32> = full.years.keys().chain(sub.years.keys()).copied().collect();
            for y in years {
                let get = |p: &SubsetProfile| p.years.get(&y).copied().unwrap_or(0).to_string();
                row("year_count", &y.to_string(), get(&full), get(&sub))?;
            }
            let types: BTreeSet<&String> = full.types.keys().chain(sub.types.keys()).collect();
            for t in types {
                let get = |p: &SubsetProfile| p.types.get(t).copied().unwrap_or(0).to_string();
                row("type_share_percent", t, get(&full), get(&sub))?;
            }
            for i in 0..COMPARISON_TOP_TERMS {
                let get = |p: &SubsetProfile| {
                    p.top_terms
                        .get(i)
                        .map(|(t, f)| format!("{t} ({f})"))
                        .unwrap_or_default()
                };
                row("top_term", &(i + 1).to_string(), get(&full), get(&sub))?;
            }
            for t in 0..full.topics.len().max(sub.topics.len()) {
                let get = |p: &SubsetProfile| p.topics.get(t).cloned().unwrap_or_default();
                row("lda_topic", &t.to_string(), get(&full), get(&sub))?;
            }
            Ok(())
        })?;
        let summary = json!({
            "country": country,
            "full_documents": full.documents,
            "subset_documents": sub.documents,
            "subset_share": sub.documents as f64 / full.documents as f64,
        });
        Ok((bytes, summary, ing.record_errors, provenance))
    })();

    let dir = config.out.as_path();
    match result {
        Ok((bytes, summary, record_errors, provenance)) => {
            let written = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join(COMPARISON_FILE), &bytes));
            if let Err(e) = written {
                return Err(fail(e.into(), report, None, None));
            }
            report.record_errors = record_errors;
            report.provenance = Some(provenance);
            report.outputs.push(COMPARISON_FILE.into());
            report.stages.push(StageReport {
                stage: Stage::Eda,
                seconds: started.elapsed().as_secs_f64(),
                outputs: vec![COMPARISON_FILE.into()],
                summary,
            });
            finish(report, dir)
        }
        Err(e) => Err(fail(e, report, None, None)),
    }
}

/// Lists the files a report claims to have written that are missing on disk.
pub fn missing_outputs(report: &RunReport, dir: &Path) -> Vec<PathBuf> {
    report
        .outputs
        .iter()
        .map(|o| dir.join(o))
        .filter(|p| !p.exists())
        .collect()
}
