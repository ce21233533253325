//! Adjacent word pairs and the thresholded bigram network.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::TokenSequence;

/// Ordered pair counts. Pairs never straddle two documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BigramTable {
    pub pairs: BTreeMap<(String, String), u64>,
    pub total_bigrams: u64,
}

impl BigramTable {
    fn merge(mut self, other: BigramTable) -> BigramTable {
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_default() += v;
        }
        self.total_bigrams += other.total_bigrams;
        self
    }
}

pub fn count_bigrams(sequences: &[TokenSequence]) -> BigramTable {
    sequences
        .par_iter()
        .map(|s| {
            let mut t = BigramTable::default();
            for w in s.tokens.windows(2) {
                *t.pairs.entry((w[0].clone(), w[1].clone())).or_default() += 1;
                t.total_bigrams += 1;
            }
            t
        })
        .reduce(BigramTable::default, BigramTable::merge)
}

/// Directed co-occurrence network. Edges are `(from, to) → weight`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BigramGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), u64>,
    pub threshold: u64,
    pub directed: bool,
}

/// Keeps pairs with frequency at least `min_freq`.
pub fn threshold_graph(table: &BigramTable, min_freq: u64) -> Result<BigramGraph> {
    if min_freq == 0 {
        return Err(Error::Invalid("bigram threshold must be at least 1".into()));
    }
    let edges: BTreeMap<(String, String), u64> = table
        .pairs
        .iter()
        .filter(|(_, &f)| f >= min_freq)
        .map(|(k, &f)| (k.clone(), f))
        .collect();
    Ok(BigramGraph {
        nodes: nodes_of(&edges),
        edges,
        threshold: min_freq,
        directed: true,
    })
}

fn nodes_of(edges: &BTreeMap<(String, String), u64>) -> BTreeSet<String> {
    edges.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
}

impl BigramGraph {
    /// Folds `a→b` and `b→a` into one edge keyed by the sorted pair, summing
    /// weights. Meant for drawing; the threshold is not re-applied.
    pub fn undirected(&self) -> BigramGraph {
        let mut edges: BTreeMap<(String, String), u64> = BTreeMap::new();
        for ((a, b), &w) in &self.edges {
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            *edges.entry(key).or_default() += w;
        }
        BigramGraph {
            nodes: self.nodes.clone(),
            edges,
            threshold: self.threshold,
            directed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
    EdgeCsv,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::GraphMl),
            "edgecsv" | "csv" | "edges" => Ok(GraphFormat::EdgeCsv),
            other => Err(Error::Config(format!("unknown graph format {other:?}"))),
        }
    }
}

impl GraphFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            GraphFormat::Dot => "dot",
            GraphFormat::GraphMl => "graphml",
            GraphFormat::EdgeCsv => "csv",
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Serializes the graph with nodes and edges in lexicographic order.
/// `comment` (e.g. provenance) is embedded where the format allows.
pub fn export_graph(graph: &BigramGraph, format: GraphFormat, comment: Option<&str>) -> Result<Vec<u8>> {
    let mut out = String::new();
    match format {
        GraphFormat::Dot => {
            if let Some(c) = comment {
                for line in c.lines() {
                    out.push_str(&format!("// {line}\n"));
                }
            }
            let (kw, arrow) = if graph.directed {
                ("digraph", "->")
            } else {
                ("graph", "--")
            };
            out.push_str(&format!("{kw} bigrams {{\n"));
            out.push_str(&format!("  // threshold={}\n", graph.threshold));
            for n in &graph.nodes {
                out.push_str(&format!("  \"{}\";\n", dot_escape(n)));
            }
            for ((a, b), w) in &graph.edges {
                out.push_str(&format!(
                    "  \"{}\" {arrow} \"{}\" [weight={w}];\n",
                    dot_escape(a),
                    dot_escape(b)
                ));
            }
            out.push_str("}\n");
        }
        GraphFormat::GraphMl => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            if let Some(c) = comment {
                out.push_str(&format!("<!-- {} -->\n", c.replace("--", "- -")));
            }
            out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n");
            let kind = if graph.directed { "directed" } else { "undirected" };
            out.push_str(&format!("  <graph id=\"bigrams\" edgedefault=\"{kind}\">\n"));
            for n in &graph.nodes {
                out.push_str(&format!("    <node id=\"{}\"/>\n", xml_escape(n)));
            }
            for (i, ((a, b), w)) in graph.edges.iter().enumerate() {
                out.push_str(&format!(
                    "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"><data key=\"weight\">{w}</data></edge>\n",
                    xml_escape(a),
                    xml_escape(b)
                ));
            }
            out.push_str("  </graph>\n</graphml>\n");
        }
        GraphFormat::EdgeCsv => {
            let mut buf = Vec::new();
            if let Some(c) = comment {
                for line in c.lines() {
                    buf.extend_from_slice(format!("# {line}\n").as_bytes());
                }
            }
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["source", "target", "weight"])?;
                for ((a, b), weight) in &graph.edges {
                    w.write_record([a.as_str(), b.as_str(), &weight.to_string()])?;
                }
                w.flush()?;
            }
            return Ok(buf);
        }
    }
    Ok(out.into_bytes())
}

/// Reads the edge CSV written by [`export_graph`] back into a directed graph.
/// `#` comment lines are skipped.
pub fn parse_edge_csv<R: Read>(input: R, threshold: u64) -> Result<BigramGraph> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(input);
    let mut edges = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!("expected 3 columns, found {}", rec.len())));
        }
        let w: u64 = rec[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad weight {:?}", &rec[2])))?;
        edges.insert((rec[0].to_string(), rec[1].to_string()), w);
    }
    Ok(BigramGraph {
        nodes: nodes_of(&edges),
        edges,
        threshold,
        directed: true,
    })
}
