//! Independent reference implementations used by the integration tests.
//! None of these call into the library's numerical code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use corpus_scope::text::TokenSequence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random count matrix with entries in `0..=max_entry` and no zero row or
/// column sum.
pub fn random_counts(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_entry: u64) -> Vec<Vec<u64>> {
    loop {
        let m: Vec<Vec<u64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0..=max_entry)).collect())
            .collect();
        let rows_ok = m.iter().all(|r| r.iter().sum::<u64>() > 0);
        let cols_ok = (0..cols).all(|j| m.iter().map(|r| r[j]).sum::<u64>() > 0);
        if rows_ok && cols_ok {
            return m;
        }
    }
}

/// The standardized residual matrix of a contingency table, built directly
/// from cell proportions.
pub fn standardized_residuals(x: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let n: f64 = x.iter().flatten().map(|&v| v as f64).sum();
    let rows: Vec<f64> = x.iter().map(|r| r.iter().map(|&v| v as f64).sum::<f64>() / n).collect();
    let cols: Vec<f64> = (0..x[0].len())
        .map(|j| x.iter().map(|r| r[j] as f64).sum::<f64>() / n)
        .collect();
    x.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| (v as f64 / n - rows[i] * cols[j]) / (rows[i] * cols[j]).sqrt())
                .collect()
        })
        .collect()
}

/// Pearson chi-square statistic divided by the grand total.
pub fn chi_square_over_n(x: &[Vec<u64>]) -> f64 {
    let n: f64 = x.iter().flatten().map(|&v| v as f64).sum();
    let rows: Vec<f64> = x.iter().map(|r| r.iter().map(|&v| v as f64).sum()).collect();
    let cols: Vec<f64> = (0..x[0].len()).map(|j| x.iter().map(|r| r[j] as f64).sum()).collect();
    let mut chi2 = 0.0;
    for (i, r) in x.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            chi2 += (v as f64 - e).powi(2) / e;
        }
    }
    chi2 / n
}

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let m = a.len();
    let n = a[0].len();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    for _ in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = cols.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv.truncate(m.min(n));
    sv
}

pub type PairCounts = Vec<((String, String), u64)>;

/// Nested-loop bigram counter over a flat list of `(pair, count)` entries.
pub fn naive_bigrams(seqs: &[TokenSequence]) -> (PairCounts, u64) {
    let mut entries: PairCounts = Vec::new();
    let mut total = 0;
    for s in seqs {
        let t = &s.tokens;
        let mut i = 0;
        while i + 1 < t.len() {
            total += 1;
            let mut found = false;
            for e in entries.iter_mut() {
                if e.0 .0 == t[i] && e.0 .1 == t[i + 1] {
                    e.1 += 1;
                    found = true;
                    break;
                }
            }
            if !found {
                entries.push(((t[i].clone(), t[i + 1].clone()), 1));
            }
            i += 1;
        }
    }
    entries.sort();
    (entries, total)
}

/// Random token sequences over a small alphabet of made-up words.
pub fn random_sequences(rng: &mut ChaCha8Rng, docs: usize, max_len: usize, alphabet: usize) -> Vec<TokenSequence> {
    (0..docs)
        .map(|d| {
            let len = rng.random_range(0..=max_len);
            let tokens = (0..len)
                .map(|_| format!("w{}", rng.random_range(0..alphabet)))
                .collect();
            TokenSequence::new(format!("doc{d:03}"), tokens)
        })
        .collect()
}

/// Exact least-squares quadratic through integer points by Cramer's rule
/// on the normal equations in 128-bit integers. Returns `(a2, a1, a0)`.
pub fn exact_quadratic(points: &[(i64, i64)]) -> (f64, f64, f64) {
    let mut s = [0i128; 5];
    let mut t = [0i128; 3];
    for &(x, y) in points {
        let (x, y) = (x as i128, y as i128);
        let mut p = 1i128;
        for k in 0..5 {
            s[k] += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= x;
        }
    }
    // rows: [s4 s3 s2 | t2], [s3 s2 s1 | t1], [s2 s1 s0 | t0]
    let m = [[s[4], s[3], s[2]], [s[3], s[2], s[1]], [s[2], s[1], s[0]]];
    let rhs = [t[2], t[1], t[0]];
    let det3 = |m: &[[i128; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    assert!(d != 0, "singular design");
    let solve = |c: usize| {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = rhs[r];
        }
        // exact rational num/d, rounded once
        let num = det3(&mc);
        let q = num / d;
        let r = num - q * d;
        q as f64 + r as f64 / d as f64
    };
    (solve(0), solve(1), solve(2))
}

/// Two topics with disjoint word supports; every document is drawn from a
/// single topic. Returns sequences, the true topic-word distributions and
/// each document's generating topic.
pub struct PlantedCorpus {
    pub sequences: Vec<TokenSequence>,
    pub phi: Vec<BTreeMap<String, f64>>,
    pub topic_of: BTreeMap<String, usize>,
}

pub fn planted_corpus(seed: u64, docs: usize, words_per_topic: usize, doc_len: usize) -> PlantedCorpus {
    let mut rng = rng(seed);
    let mut phi = Vec::new();
    for t in 0..2 {
        let weights: Vec<f64> = (0..words_per_topic).map(|_| rng.random_range(0.5..1.5)).collect();
        let z: f64 = weights.iter().sum();
        phi.push(
            weights
                .iter()
                .enumerate()
                .map(|(w, p)| (format!("t{t}w{w:02}"), p / z))
                .collect::<BTreeMap<_, _>>(),
        );
    }
    let mut sequences = Vec::new();
    let mut topic_of = BTreeMap::new();
    let mut order: Vec<usize> = (0..docs).map(|d| d % 2).collect();
    order.shuffle(&mut rng);
    for (d, &t) in order.iter().enumerate() {
        let words: Vec<(&String, &f64)> = phi[t].iter().collect();
        let tokens = (0..doc_len)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, p) in &words {
                    acc += **p;
                    if u < acc {
                        return (*w).clone();
                    }
                }
                words.last().unwrap().0.clone()
            })
            .collect();
        let id = format!("p{d:03}");
        topic_of.insert(id.clone(), t);
        sequences.push(TokenSequence::new(id, tokens));
    }
    PlantedCorpus {
        sequences,
        phi,
        topic_of,
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// SHA-256 of every regular file in `dir` except the run report.
pub fn hash_outputs(dir: &std::path::Path) -> BTreeMap<String, String> {
    use sha2::{Digest, Sha256};
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "run_report.json" {
            continue;
        }
        let digest = Sha256::digest(std::fs::read(entry.path()).unwrap());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(name, hex);
    }
    out
}

pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus.csv")
}
