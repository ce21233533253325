mod common;

use corpus_scope::text::{build_dtm, build_vocabulary, remove_stopwords, tokenize, Stoplist, TokenSequence};
use proptest::prelude::*;

fn sequences() -> impl Strategy<Value = Vec<TokenSequence>> {
    prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 0..20), 1..12).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, t)| TokenSequence::new(format!("d{i:02}"), t))
            .collect()
    })
}

proptest! {
    #[test]
    fn tokenize_is_idempotent(s in "\\PC{0,60}") {
        let once = tokenize(&s);
        let twice = tokenize(&once.join(" "));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tokens_are_lowercase_and_alphabetic(s in "\\PC{0,60}") {
        for t in tokenize(&s) {
            prop_assert!(t.chars().any(char::is_alphabetic), "{t:?}");
            prop_assert_eq!(t.to_lowercase(), t.clone());
        }
    }

    #[test]
    fn vocabulary_ignores_document_order(seqs in sequences(), cap in 1usize..12, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = seqs.clone();
        shuffled.shuffle(&mut common::rng(seed));
        match (build_vocabulary(&seqs, cap), build_vocabulary(&shuffled, cap)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn dtm_marginals_match_recount(seqs in sequences(), cap in 1usize..12) {
        let Ok(vocab) = build_vocabulary(&seqs, cap) else { return Ok(()); };
        let dtm = build_dtm(&seqs, &vocab).unwrap();
        for (i, s) in seqs.iter().enumerate() {
            let in_vocab = s.tokens.iter().filter(|t| vocab.index_of(t).is_some()).count() as u64;
            prop_assert_eq!(dtm.row_sums()[i], in_vocab);
        }
        for (j, term) in vocab.terms().iter().enumerate() {
            let n = seqs.iter().flat_map(|s| &s.tokens).filter(|t| *t == term).count() as u64;
            prop_assert_eq!(dtm.col_sums()[j], n);
        }
        prop_assert_eq!(dtm.total(), dtm.row_sums().iter().sum::<u64>());
    }

    #[test]
    fn stopword_removal_keeps_order(tokens in prop::collection::vec("[a-c]", 0..20)) {
        let stop = Stoplist::from_terms(["b"]);
        let kept = remove_stopwords(&tokens, &stop);
        let expected: Vec<String> = tokens.iter().filter(|t| *t != "b").cloned().collect();
        prop_assert_eq!(kept, expected);
    }
}

#[test]
fn vocabulary_ties_break_lexicographically() {
    let seqs = vec![TokenSequence::new(
        "a",
        vec!["zeta".into(), "alpha".into(), "mid".into(), "mid".into()],
    )];
    let vocab = build_vocabulary(&seqs, 2).unwrap();
    assert_eq!(vocab.terms(), ["mid", "alpha"]);
    assert_eq!(vocab.frequencies(), [2, 1]);
}

#[test]
fn numbers_and_hyphens() {
    assert_eq!(
        tokenize("COVID-19 data-driven 2020 x2"),
        ["covid", "data", "driven", "x2"]
    );
}

#[test]
fn bundled_stoplist_is_versioned() {
    assert!(corpus_scope::text::DEFAULT_STOPLIST.starts_with("# corpus-scope English stoplist, version 1"));
    let stop = Stoplist::english();
    assert!(stop.contains("the") && !stop.contains("learning"));
}

#[test]
fn combining_mark_after_space_does_not_capture_the_space() {
    let tokens = tokenize("a \u{ac7}");
    assert!(tokens.iter().all(|t| !t.contains(' ')), "{tokens:?}");
    assert_eq!(tokenize(&tokens.join(" ")), tokens);
}
