//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! Randomness comes from a ChaCha8 stream seeded with `LdaConfig::seed`
//! (`rand_chacha`), so a chain reproduces bit for bit on every platform.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::text::{TokenSequence, Vocabulary};

const SIMPLEX_TOL: f64 = 1e-9;

/// Density of the Dirichlet distribution with concentration `alpha` at the
/// simplex point `theta`, evaluated in log space.
pub fn dirichlet_density(theta: &[f64], alpha: &[f64]) -> Result<f64> {
    Ok(dirichlet_log_density(theta, alpha)?.exp())
}

pub fn dirichlet_log_density(theta: &[f64], alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() || theta.len() != alpha.len() {
        return Err(Error::Domain(format!(
            "theta has {} entries, alpha has {}",
            theta.len(),
            alpha.len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::Domain(format!("alpha entries must be positive, got {a}")));
    }
    if theta.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Simplex("entries must be non-negative".into()));
    }
    let sum: f64 = theta.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Simplex(format!("entries sum to {sum}")));
    }
    let alpha_sum: f64 = alpha.iter().sum();
    let mut log = ln_gamma(alpha_sum) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    for (&t, &a) in theta.iter().zip(alpha) {
        if a == 1.0 {
            continue;
        }
        if t == 0.0 {
            return Ok(if a > 1.0 { f64::NEG_INFINITY } else { f64::INFINITY });
        }
        log += (a - 1.0) * t.ln();
    }
    Ok(log)
}

/// How `phi` and `theta` are estimated from the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimate {
    /// Posterior mean given the final state's counts.
    Final,
    /// Average of the per-sweep estimates after burn-in.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub estimate: Estimate,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(6)
    }
}

impl LdaConfig {
    /// Defaults for `k` topics: `alpha = 50/k`, `beta = 0.01`, 1000 sweeps,
    /// 200 of them burn-in.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 0,
            estimate: Estimate::Final,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("topic count k must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

/// Documents mapped onto vocabulary indices.
#[derive(Debug, Clone)]
pub struct LdaCorpus {
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<u32>>,
    pub terms: Vec<String>,
    /// Documents without any in-vocabulary token.
    pub dropped: Vec<String>,
}

impl LdaCorpus {
    pub fn new(sequences: &[TokenSequence], vocab: &Vocabulary) -> Result<Self> {
        let mut doc_ids = Vec::new();
        let mut docs = Vec::new();
        let mut dropped = Vec::new();
        for s in sequences {
            let words: Vec<u32> = s
                .tokens
                .iter()
                .filter_map(|t| vocab.index_of(t))
                .map(|j| j as u32)
                .collect();
            if words.is_empty() {
                dropped.push(s.doc_id.clone());
            } else {
                doc_ids.push(s.doc_id.clone());
                docs.push(words);
            }
        }
        if !dropped.is_empty() {
            log::warn!("LDA drops {} document(s) without vocabulary tokens", dropped.len());
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus("no document has an in-vocabulary token".into()));
        }
        Ok(LdaCorpus {
            doc_ids,
            docs,
            terms: vocab.terms().to_vec(),
            dropped,
        })
    }

    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// One collapsed Gibbs chain.
pub struct GibbsSampler<'a> {
    corpus: &'a LdaCorpus,
    config: LdaConfig,
    rng: ChaCha8Rng,
    assignments: Vec<Vec<u32>>,
    /// topic-major `k × V`
    topic_word: Vec<u64>,
    topic_totals: Vec<u64>,
    /// document-major `n × k`
    doc_topic: Vec<u64>,
    sweeps: usize,
    phi_sum: Vec<f64>,
    theta_sum: Vec<f64>,
    averaged_sweeps: usize,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// Starts a chain with topic labels drawn uniformly from the seeded stream.
    pub fn new(corpus: &'a LdaCorpus, config: LdaConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = config.k as u32;
        let assignments = corpus
            .docs
            .iter()
            .map(|d| d.iter().map(|_| rng.random_range(0..k)).collect())
            .collect();
        Self::assemble(corpus, config, rng, assignments)
    }

    /// Starts a chain from explicit labels; the random stream is seeded as
    /// in [`Self::new`] but not advanced by initialization.
    pub fn with_assignments(corpus: &'a LdaCorpus, config: LdaConfig, assignments: Vec<Vec<u32>>) -> Result<Self> {
        config.validate()?;
        if assignments.len() != corpus.docs.len()
            || assignments.iter().zip(&corpus.docs).any(|(z, d)| z.len() != d.len())
            || assignments.iter().flatten().any(|&t| t as usize >= config.k)
        {
            return Err(Error::Invalid("assignments do not match the corpus".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::assemble(corpus, config, rng, assignments)
    }

    /// The labels [`Self::new`] would draw for this corpus and seed.
    pub fn initial_assignments(corpus: &LdaCorpus, config: &LdaConfig) -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = config.k as u32;
        corpus
            .docs
            .iter()
            .map(|d| d.iter().map(|_| rng.random_range(0..k)).collect())
            .collect()
    }

    fn assemble(corpus: &'a LdaCorpus, config: LdaConfig, rng: ChaCha8Rng, assignments: Vec<Vec<u32>>) -> Result<Self> {
        let k = config.k;
        let v = corpus.terms.len();
        let mut topic_word = vec![0u64; k * v];
        let mut topic_totals = vec![0u64; k];
        let mut doc_topic = vec![0u64; corpus.docs.len() * k];
        for (d, (words, z)) in corpus.docs.iter().zip(&assignments).enumerate() {
            for (&w, &t) in words.iter().zip(z) {
                let t = t as usize;
                topic_word[t * v + w as usize] += 1;
                topic_totals[t] += 1;
                doc_topic[d * k + t] += 1;
            }
        }
        Ok(GibbsSampler {
            corpus,
            config,
            rng,
            assignments,
            topic_word,
            topic_totals,
            doc_topic,
            sweeps: 0,
            phi_sum: Vec::new(),
            theta_sum: Vec::new(),
            averaged_sweeps: 0,
            weights: vec![0.0; k],
        })
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    /// Resamples every token's topic once, in document then position order.
    pub fn sweep(&mut self) {
        let k = self.config.k;
        let v = self.corpus.terms.len();
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let v_beta = v as f64 * beta;
        for (d, words) in self.corpus.docs.iter().enumerate() {
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            for (i, &w) in words.iter().enumerate() {
                let w = w as usize;
                let old = self.assignments[d][i] as usize;
                dt[old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for (t, &d) in dt.iter().enumerate() {
                    let weight = (d as f64 + alpha) * (self.topic_word[t * v + w] as f64 + beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    total += weight;
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights[..k].iter().position(|&c| u < c).unwrap_or(k - 1);

                dt[new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][i] = new as u32;
            }
        }
        self.sweeps += 1;
        if self.config.estimate == Estimate::Averaged && self.sweeps > self.config.burn_in {
            let (phi, theta) = self.point_estimates();
            if self.phi_sum.is_empty() {
                self.phi_sum = vec![0.0; phi.len()];
                self.theta_sum = vec![0.0; theta.len()];
            }
            self.phi_sum.iter_mut().zip(&phi).for_each(|(s, x)| *s += x);
            self.theta_sum.iter_mut().zip(&theta).for_each(|(s, x)| *s += x);
            self.averaged_sweeps += 1;
        }
    }

    /// Whether the count tables agree with each other and with a recount
    /// from the current assignments.
    pub fn counts_conserved(&self) -> bool {
        let n_tokens = self.corpus.n_tokens() as u64;
        let tw: u64 = self.topic_word.iter().sum();
        let dt: u64 = self.doc_topic.iter().sum();
        let tt: u64 = self.topic_totals.iter().sum();
        if tw != n_tokens || dt != n_tokens || tt != n_tokens {
            return false;
        }
        let k = self.config.k;
        let v = self.corpus.terms.len();
        let mut topic_word = vec![0u64; k * v];
        let mut doc_topic = vec![0u64; self.corpus.docs.len() * k];
        for (d, (words, z)) in self.corpus.docs.iter().zip(&self.assignments).enumerate() {
            for (&w, &t) in words.iter().zip(z) {
                topic_word[t as usize * v + w as usize] += 1;
                doc_topic[d * k + t as usize] += 1;
            }
        }
        let totals_ok = (0..k).all(|t| topic_word[t * v..(t + 1) * v].iter().sum::<u64>() == self.topic_totals[t]);
        topic_word == self.topic_word && doc_topic == self.doc_topic && totals_ok
    }

    /// Joint log probability `log p(w, z)` of the current state.
    pub fn log_likelihood(&self) -> f64 {
        log_joint(
            &self.topic_word,
            &self.topic_totals,
            &self.doc_topic,
            self.corpus,
            &self.config,
        )
    }

    fn point_estimates(&self) -> (Vec<f64>, Vec<f64>) {
        estimates_from_counts(
            &self.topic_word,
            &self.doc_topic,
            self.config.k,
            self.corpus.terms.len(),
            self.config.alpha,
            self.config.beta,
        )
    }

    pub fn into_model(self) -> LdaModel {
        let k = self.config.k;
        let v = self.corpus.terms.len();
        let (phi, theta) = if self.config.estimate == Estimate::Averaged && self.averaged_sweeps > 0 {
            let s = self.averaged_sweeps as f64;
            (
                self.phi_sum.iter().map(|x| x / s).collect(),
                self.theta_sum.iter().map(|x| x / s).collect(),
            )
        } else {
            self.point_estimates()
        };
        LdaModel {
            config: self.config,
            terms: self.corpus.terms.clone(),
            doc_ids: self.corpus.doc_ids.clone(),
            topic_word_counts: self.topic_word.chunks(v).map(<[u64]>::to_vec).collect(),
            doc_topic_counts: self.doc_topic.chunks(k).map(<[u64]>::to_vec).collect(),
            assignments: self.assignments,
            phi: phi.chunks(v).map(<[f64]>::to_vec).collect(),
            theta: theta.chunks(k).map(<[f64]>::to_vec).collect(),
        }
    }
}

fn log_joint(topic_word: &[u64], topic_totals: &[u64], doc_topic: &[u64], corpus: &LdaCorpus, cfg: &LdaConfig) -> f64 {
    let k = cfg.k;
    let v = corpus.terms.len();
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let mut ll = k as f64 * (ln_gamma(v as f64 * beta) - v as f64 * ln_gamma(beta));
    for t in 0..k {
        ll += topic_word[t * v..(t + 1) * v]
            .iter()
            .map(|&c| ln_gamma(c as f64 + beta))
            .sum::<f64>();
        ll -= ln_gamma(topic_totals[t] as f64 + v as f64 * beta);
    }
    let n_docs = corpus.docs.len();
    ll += n_docs as f64 * (ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha));
    for (d, words) in corpus.docs.iter().enumerate() {
        ll += doc_topic[d * k..(d + 1) * k]
            .iter()
            .map(|&c| ln_gamma(c as f64 + alpha))
            .sum::<f64>();
        ll -= ln_gamma(words.len() as f64 + k as f64 * alpha);
    }
    ll
}

/// `phi_tw ∝ n_tw + β`, `theta_dt ∝ n_dt + α`, both flattened row-major.
fn estimates_from_counts(
    topic_word: &[u64],
    doc_topic: &[u64],
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut phi = Vec::with_capacity(topic_word.len());
    for row in topic_word.chunks(v) {
        let denom = row.iter().sum::<u64>() as f64 + v as f64 * beta;
        phi.extend(row.iter().map(|&c| (c as f64 + beta) / denom));
    }
    let mut theta = Vec::with_capacity(doc_topic.len());
    for row in doc_topic.chunks(k) {
        let denom = row.iter().sum::<u64>() as f64 + k as f64 * alpha;
        theta.extend(row.iter().map(|&c| (c as f64 + alpha) / denom));
    }
    (phi, theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub terms: Vec<String>,
    pub doc_ids: Vec<String>,
    /// `k × V`
    pub topic_word_counts: Vec<Vec<u64>>,
    /// `n × k`
    pub doc_topic_counts: Vec<Vec<u64>>,
    pub assignments: Vec<Vec<u32>>,
    /// `k × V` topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    /// `n × k` document-topic distributions.
    pub theta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LdaFit {
    pub model: LdaModel,
    pub dropped_docs: Vec<String>,
    /// Joint log likelihood after each sweep.
    pub log_likelihood: Vec<f64>,
}

pub fn fit_lda(sequences: &[TokenSequence], vocab: &Vocabulary, config: &LdaConfig) -> Result<LdaFit> {
    config.validate()?;
    let corpus = LdaCorpus::new(sequences, vocab)?;
    run_chain(&corpus, *config)
}

fn run_chain(corpus: &LdaCorpus, config: LdaConfig) -> Result<LdaFit> {
    let mut sampler = GibbsSampler::new(corpus, config)?;
    let mut trace = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        sampler.sweep();
        trace.push(sampler.log_likelihood());
    }
    Ok(LdaFit {
        model: sampler.into_model(),
        dropped_docs: corpus.dropped.clone(),
        log_likelihood: trace,
    })
}

/// Runs one chain per seed in parallel and keeps the one with the highest
/// final log likelihood (smaller seed on ties).
pub fn fit_lda_chains(
    sequences: &[TokenSequence],
    vocab: &Vocabulary,
    config: &LdaConfig,
    seeds: &[u64],
) -> Result<LdaFit> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let corpus = LdaCorpus::new(sequences, vocab)?;
    let fits: Vec<LdaFit> = seeds
        .par_iter()
        .map(|&seed| run_chain(&corpus, LdaConfig { seed, ..*config }))
        .collect::<Result<_>>()?;
    let best = fits
        .into_iter()
        .max_by(|a, b| {
            let la = *a.log_likelihood.last().unwrap();
            let lb = *b.log_likelihood.last().unwrap();
            la.total_cmp(&lb).then(b.model.config.seed.cmp(&a.model.config.seed))
        })
        .unwrap();
    Ok(best)
}

/// Top `m` terms per topic by `phi`, ties broken lexicographically.
pub fn top_words_per_topic(model: &LdaModel, m: usize) -> Vec<Vec<(String, f64)>> {
    model
        .phi
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .total_cmp(&row[a])
                    .then_with(|| model.terms[a].cmp(&model.terms[b]))
            });
            idx.into_iter()
                .take(m)
                .map(|j| (model.terms[j].clone(), row[j]))
                .collect()
        })
        .collect()
}

pub fn doc_topic_distribution<'m>(model: &'m LdaModel, doc_id: &str) -> Result<&'m [f64]> {
    model
        .doc_ids
        .iter()
        .position(|d| d == doc_id)
        .map(|i| model.theta[i].as_slice())
        .ok_or_else(|| Error::NotFound(format!("document {doc_id:?} is not in the model")))
}

const MODEL_MAGIC: &str = "corpus-scope lda model v1";

impl LdaModel {
    /// Writes the text model format: a `key=value` header followed by CSV
    /// tables, each introduced by a `[section]` line.
    pub fn save<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        let c = &self.config;
        let mut head = String::new();
        writeln!(head, "{MODEL_MAGIC}").unwrap();
        if let Some(p) = provenance {
            writeln!(head, "# {p}").unwrap();
        }
        let estimate = match c.estimate {
            Estimate::Final => "final",
            Estimate::Averaged => "averaged",
        };
        write!(
            head,
            "k={}\nalpha={}\nbeta={}\nseed={}\niterations={}\nburn_in={}\nestimate={}\n",
            c.k, c.alpha, c.beta, c.seed, c.iterations, c.burn_in, estimate
        )
        .unwrap();
        out.write_all(head.as_bytes())?;

        let topic_cols = || (0..c.k).map(|t| format!("topic{t}"));
        writeln!(out, "[topic_word_counts]")?;
        write_table(
            &mut out,
            std::iter::once("term".to_string()).chain(topic_cols()),
            self.terms.iter().enumerate().map(|(j, term)| {
                std::iter::once(term.clone())
                    .chain(self.topic_word_counts.iter().map(|row| row[j].to_string()))
                    .collect()
            }),
        )?;
        writeln!(out, "[doc_topic_counts]")?;
        write_table(
            &mut out,
            std::iter::once("doc_id".to_string()).chain(topic_cols()),
            self.doc_ids.iter().zip(&self.doc_topic_counts).map(|(d, row)| {
                std::iter::once(d.clone())
                    .chain(row.iter().map(u64::to_string))
                    .collect()
            }),
        )?;
        if c.estimate == Estimate::Averaged {
            writeln!(out, "[phi]")?;
            write_table(
                &mut out,
                std::iter::once("term".to_string()).chain(topic_cols()),
                self.terms.iter().enumerate().map(|(j, term)| {
                    std::iter::once(term.clone())
                        .chain(self.phi.iter().map(|row| row[j].to_string()))
                        .collect()
                }),
            )?;
            writeln!(out, "[theta]")?;
            write_table(
                &mut out,
                std::iter::once("doc_id".to_string()).chain(topic_cols()),
                self.doc_ids.iter().zip(&self.theta).map(|(d, row)| {
                    std::iter::once(d.clone())
                        .chain(row.iter().map(f64::to_string))
                        .collect()
                }),
            )?;
        }
        Ok(())
    }

    /// Reads a model written by [`Self::save`]. Token assignments are not
    /// persisted and come back empty.
    pub fn load<R: BufRead>(input: R) -> Result<LdaModel> {
        let mut lines = input.lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        if first.trim() != MODEL_MAGIC {
            return Err(Error::Parse(format!("not an LDA model file (header {first:?})")));
        }
        let mut header: HashMap<String, String> = HashMap::new();
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in lines {
            let line = line?;
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.push((name.to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(&line);
                body.push('\n');
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad header line {line:?}")))?;
                header.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let field = |key: &str| {
            header
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing header field {key:?}")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
        }
        let config = LdaConfig {
            k: num("k", field("k")?)?,
            alpha: num("alpha", field("alpha")?)?,
            beta: num("beta", field("beta")?)?,
            seed: num("seed", field("seed")?)?,
            iterations: num("iterations", field("iterations")?)?,
            burn_in: num("burn_in", field("burn_in")?)?,
            estimate: match field("estimate")?.as_str() {
                "final" => Estimate::Final,
                "averaged" => Estimate::Averaged,
                other => return Err(Error::Parse(format!("unknown estimate {other:?}"))),
            },
        };
        config.validate().map_err(|e| Error::Parse(e.to_string()))?;
        let section = |name: &str| -> Result<Vec<(String, Vec<String>)>> {
            let body = sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b.as_str())
                .ok_or_else(|| Error::Parse(format!("missing section [{name}]")))?;
            read_table(body, config.k)
        };
        let tw = section("topic_word_counts")?;
        let dt = section("doc_topic_counts")?;
        let terms: Vec<String> = tw.iter().map(|(t, _)| t.clone()).collect();
        let mut topic_word_counts = vec![vec![0u64; terms.len()]; config.k];
        for (j, (_, row)) in tw.iter().enumerate() {
            for (t, cell) in row.iter().enumerate() {
                topic_word_counts[t][j] = num("count", cell)?;
            }
        }
        let doc_ids: Vec<String> = dt.iter().map(|(d, _)| d.clone()).collect();
        let doc_topic_counts = dt
            .iter()
            .map(|(_, row)| row.iter().map(|c| num("count", c)).collect::<Result<Vec<u64>>>())
            .collect::<Result<Vec<_>>>()?;

        let (phi, theta) = if config.estimate == Estimate::Averaged {
            let phi_rows = section("phi")?;
            let mut phi = vec![vec![0.0; terms.len()]; config.k];
            for (j, (_, row)) in phi_rows.iter().enumerate() {
                for (t, cell) in row.iter().enumerate() {
                    phi[t][j] = num("phi", cell)?;
                }
            }
            let theta = section("theta")?
                .iter()
                .map(|(_, row)| row.iter().map(|c| num("theta", c)).collect::<Result<Vec<f64>>>())
                .collect::<Result<Vec<_>>>()?;
            (phi, theta)
        } else {
            let flat_tw: Vec<u64> = topic_word_counts.iter().flatten().copied().collect();
            let flat_dt: Vec<u64> = doc_topic_counts.iter().flatten().copied().collect();
            let v = terms.len();
            let (phi, theta) = estimates_from_counts(&flat_tw, &flat_dt, config.k, v, config.alpha, config.beta);
            (
                phi.chunks(v.max(1)).map(<[f64]>::to_vec).collect(),
                theta.chunks(config.k).map(<[f64]>::to_vec).collect(),
            )
        };
        Ok(LdaModel {
            config,
            terms,
            doc_ids,
            topic_word_counts,
            doc_topic_counts,
            assignments: Vec::new(),
            phi,
            theta,
        })
    }
}

fn write_table<W: Write>(
    out: &mut W,
    header: impl Iterator<Item = String>,
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.collect::<Vec<_>>())?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(body: &str, k: usize) -> Result<Vec<(String, Vec<String>)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != k + 1 {
            return Err(Error::Parse(format!("expected {} columns, found {}", k + 1, rec.len())));
        }
        rows.push((rec[0].to_string(), rec.iter().skip(1).map(str::to_string).collect()));
    }
    Ok(rows)
}
