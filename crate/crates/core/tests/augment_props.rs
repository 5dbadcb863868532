//! Contracts of the three augmentation strategies.

use std::collections::BTreeSet;

use captext::augment::{
    back_translate, correct, synonym_expand, BackTranslateOptions, CorrectionRules,
    IdentityTranslator, MockTranslator, Thesaurus, TranslationChain, DEFAULT_HOPS,
};
use captext::corpus::{Corpus, ImageRecord};
use captext::tokenize;
use proptest::prelude::*;

const DICTIONARY: [&str; 12] = [
    "a",
    "green",
    "tree",
    "trees",
    "near",
    "river",
    "many",
    "buildings",
    "road",
    "sea",
    "c-shaped",
    "pond",
];
const NOISE: [&str; 8] = [
    "c",
    "shape",
    "tre",
    "rivr",
    "bulidings",
    "xyzzy",
    "sea",
    "2nd",
];

fn rules() -> CorrectionRules {
    CorrectionRules::new(DICTIONARY)
        .with_merge("c", "shape", "c-shaped")
        .with_override("bulidings", "buildings")
}

fn caption() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(DICTIONARY.to_vec()),
            prop::sample::select(NOISE.to_vec())
        ],
        1..8,
    )
    .prop_map(|w| w.join(" "))
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    prop::collection::vec(prop::collection::vec(caption(), 1..5), 1..8).prop_map(|caps| {
        let records = caps
            .into_iter()
            .enumerate()
            .map(|(i, c)| ImageRecord::new(&format!("{i}.tif"), c))
            .collect();
        Corpus::new(records, "fixture").unwrap()
    })
}

fn vocabulary(corpus: &Corpus) -> BTreeSet<String> {
    corpus
        .captions()
        .flat_map(|c| tokenize::tokens(&c.raw))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn correction_is_idempotent(corpus in corpus_strategy(), prune: bool) {
        let once = correct(&corpus, &rules(), prune).unwrap();
        let twice = correct(&once.corpus, &rules(), prune).unwrap();
        prop_assert_eq!(twice.corpus.records(), once.corpus.records());
    }

    #[test]
    fn correction_never_adds_captions(corpus in corpus_strategy(), prune: bool) {
        let out = correct(&corpus, &rules(), prune).unwrap();
        prop_assert!(out.corpus.caption_count() <= corpus.caption_count());
        if !prune {
            prop_assert_eq!(out.corpus.caption_count(), corpus.caption_count());
        }
    }

    #[test]
    fn synonym_expansion_is_seeded(corpus in corpus_strategy(), seed: u64) {
        let thesaurus = Thesaurus::new()
            .with("many", &["numerous", "several", "plenty"]).unwrap()
            .with("tree", &["shrub", "bush"]).unwrap();
        let a = synonym_expand(&corpus, &thesaurus, 2, seed).unwrap();
        let b = synonym_expand(&corpus, &thesaurus, 2, seed).unwrap();
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    // Synonyms that do not occur in the corpus, so any covered token
    // introduces new vocabulary.
    #[test]
    fn synonym_expansion_grows_corpus(corpus in corpus_strategy(), seed: u64, n in 1usize..4) {
        let thesaurus = Thesaurus::new()
            .with("green", &["verdant", "emerald"]).unwrap()
            .with("sea", &["ocean"]).unwrap();
        let covered = corpus.captions().any(|c| {
            tokenize::tokens(&c.raw).iter().any(|t| thesaurus.get(t).is_some())
        });
        let out = synonym_expand(&corpus, &thesaurus, n, seed).unwrap();
        if covered {
            prop_assert!(out.caption_count() > corpus.caption_count());
            prop_assert!(vocabulary(&out).len() > vocabulary(&corpus).len());
        } else {
            prop_assert_eq!(out.caption_count(), corpus.caption_count());
        }
    }

    #[test]
    fn identity_round_trip_is_fixed_point(corpus in corpus_strategy()) {
        let chain = TranslationChain::new(&DEFAULT_HOPS, Box::new(IdentityTranslator)).unwrap();
        let out = back_translate(&corpus, &chain, &BackTranslateOptions::default()).unwrap();
        prop_assert_eq!(out.variants_added, 0);
        prop_assert_eq!(out.corpus.records(), corpus.records());
    }
}

#[test]
fn c_shape_repair() {
    let c = Corpus::new(
        vec![ImageRecord::new("a.tif", ["A c shape pond near a road."])],
        "x",
    )
    .unwrap();
    let out = correct(&c, &rules(), false).unwrap();
    assert_eq!(
        out.corpus.records()[0].captions[0].raw,
        "a c-shaped pond near a road"
    );
    assert_eq!(out.log.merges, 1);
}

#[test]
fn mock_chain_keeps_simple_caption() {
    let c = Corpus::new(
        vec![ImageRecord::new(
            "a.tif",
            ["Many trees behind a school bus"],
        )],
        "x",
    )
    .unwrap();
    let chain = TranslationChain::new(&DEFAULT_HOPS, Box::new(MockTranslator::default())).unwrap();
    let out = back_translate(&c, &chain, &BackTranslateOptions::default()).unwrap();
    assert_eq!(out.variants_added, 0);
    assert_eq!(out.corpus.caption_count(), 1);
}
