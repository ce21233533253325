mod common;

use corpus_scope::bigrams::{count_bigrams, export_graph, parse_edge_csv, threshold_graph, GraphFormat};
use corpus_scope::text::TokenSequence;
use proptest::prelude::*;
use rand::seq::SliceRandom;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_match_nested_loop_oracle(seed in any::<u64>(), docs in 0usize..=50, alphabet in 1usize..40) {
        let seqs = common::random_sequences(&mut common::rng(seed), docs, 100, alphabet);
        let table = count_bigrams(&seqs);
        let (entries, total) = common::naive_bigrams(&seqs);
        prop_assert_eq!(table.pairs.into_iter().collect::<Vec<_>>(), entries);
        prop_assert_eq!(table.total_bigrams, total);
    }

    #[test]
    fn document_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let seqs = common::random_sequences(&mut rng, 20, 40, 8);
        let mut shuffled = seqs.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(count_bigrams(&seqs), count_bigrams(&shuffled));
    }

    #[test]
    fn thresholds_nest(seed in any::<u64>(), t1 in 1u64..10, dt in 0u64..10) {
        let seqs = common::random_sequences(&mut common::rng(seed), 30, 60, 6);
        let table = count_bigrams(&seqs);
        let low = threshold_graph(&table, t1).unwrap();
        let high = threshold_graph(&table, t1 + dt).unwrap();
        prop_assert!(high.edges.keys().all(|e| low.edges.contains_key(e)));
        prop_assert!(high.nodes.is_subset(&low.nodes));
    }

    #[test]
    fn edge_csv_round_trips(seed in any::<u64>(), t in 1u64..4) {
        let seqs = common::random_sequences(&mut common::rng(seed), 10, 30, 5);
        let graph = threshold_graph(&count_bigrams(&seqs), t).unwrap();
        let bytes = export_graph(&graph, GraphFormat::EdgeCsv, Some("source=test")).unwrap();
        let back = parse_edge_csv(bytes.as_slice(), t).unwrap();
        prop_assert_eq!(back.edges, graph.edges);
        prop_assert_eq!(back.nodes, graph.nodes);
    }
}

fn seq(id: &str, text: &str) -> TokenSequence {
    TokenSequence::new(id, text.split_whitespace().map(String::from).collect())
}

#[test]
fn pairs_are_ordered_and_do_not_cross_documents() {
    let table = count_bigrams(&[seq("a", "machine learning machine"), seq("b", "learning machine")]);
    let get = |x: &str, y: &str| table.pairs.get(&(x.to_string(), y.to_string())).copied();
    assert_eq!(get("machine", "learning"), Some(1));
    assert_eq!(get("learning", "machine"), Some(2));
    assert_eq!(get("machine", "machine"), None);
    assert_eq!(table.total_bigrams, 3);
}

#[test]
fn undirected_merge_sums_both_directions() {
    let table = count_bigrams(&[seq("a", "x y x y"), seq("b", "y x")]);
    let g = threshold_graph(&table, 1).unwrap().undirected();
    assert!(!g.directed);
    assert_eq!(g.edges.get(&("x".to_string(), "y".to_string())), Some(&4));
    assert_eq!(g.edges.len(), 1);
}

#[test]
fn exports_are_sorted_and_carry_weights() {
    let table = count_bigrams(&[seq("a", "data science data mining data science")]);
    let g = threshold_graph(&table, 1).unwrap();
    let dot = String::from_utf8(export_graph(&g, GraphFormat::Dot, None).unwrap()).unwrap();
    let first = dot.find("\"data\" -> \"mining\"").unwrap();
    let second = dot.find("\"data\" -> \"science\" [weight=2]").unwrap();
    assert!(first < second);
    let graphml = String::from_utf8(export_graph(&g, GraphFormat::GraphMl, None).unwrap()).unwrap();
    assert!(graphml.contains("<graphml") && graphml.contains("weight"));
    assert!("svg".parse::<GraphFormat>().is_err());
    assert!(threshold_graph(&table, 0).is_err());
}
