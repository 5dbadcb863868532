//! Vocabulary profile against brute force, and corpus serialization.

use captext::corpus::{self, Corpus, ImageRecord};
use captext::{tokenize, vocabstats};
use proptest::prelude::*;

const WORDS: [&str; 10] = [
    "a",
    "green",
    "tree",
    "Tree",
    "near",
    "river.",
    "many",
    "buildings",
    "road,",
    "sea",
];

fn caption() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..6).prop_map(|w| w.join(" "))
}

fn records() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(caption(), 1..6), 1..12)
}

fn build(caps: &[Vec<String>]) -> Corpus {
    let records = caps
        .iter()
        .enumerate()
        .map(|(i, c)| ImageRecord::new(&format!("{i}.jpg"), c.iter().cloned()))
        .collect();
    Corpus::new(records, "fixture").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn profile_matches_brute_force(caps in records(), k in 1usize..12) {
        let corpus = build(&caps);
        let p = vocabstats::profile(&corpus).unwrap();

        let all: Vec<String> = caps.iter().flatten().flat_map(|c| tokenize::tokens(c)).collect();
        let mut distinct = all.clone();
        distinct.sort();
        distinct.dedup();
        let count = |t: &String| all.iter().filter(|x| *x == t).count() as u64;
        let hapax = distinct.iter().filter(|t| count(t) == 1).count() as u64;

        prop_assert_eq!(p.total_tokens, all.len() as u64);
        prop_assert_eq!(p.unique_tokens, distinct.len() as u64);
        prop_assert_eq!(p.hapax_count, hapax);
        for t in &distinct {
            prop_assert_eq!(p.count(t), count(t));
        }

        let mut counts: Vec<u64> = distinct.iter().map(count).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let covered: u64 = counts.iter().take(k).sum();
        let coverage = p.top_k_coverage(k).unwrap();
        prop_assert_eq!(coverage.covered, covered);
        prop_assert_eq!(coverage.fraction, covered as f64 / all.len() as f64);

        let mut normalized: Vec<String> = caps.iter().flatten().map(|c| tokenize::normalize(c)).collect();
        let total = normalized.len() as u64;
        normalized.sort();
        normalized.dedup();
        prop_assert_eq!(p.duplicate_captions, total - normalized.len() as u64);
    }

    #[test]
    fn jsonl_round_trip(caps in records()) {
        let corpus = build(&caps);
        let text = corpus.to_jsonl();
        let back = corpus::parse_captions_jsonl(&text, "mem", "fixture".into()).unwrap();
        prop_assert_eq!(back.records(), corpus.records());
        prop_assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn statistics_ignore_record_order(caps in records()) {
        let forward = vocabstats::profile(&build(&caps)).unwrap();
        let mut reversed_caps = caps.clone();
        reversed_caps.reverse();
        let reversed = vocabstats::profile(&build(&reversed_caps)).unwrap();
        prop_assert_eq!(forward.freq, reversed.freq);
        prop_assert_eq!(forward.unique_captions, reversed.unique_captions);
    }
}

#[test]
fn five_identical_captions() {
    let c = build(&[vec!["a green tree".to_string(); 5]]);
    let p = vocabstats::profile(&c).unwrap();
    assert_eq!(p.duplicate_rate(), 0.8);
    assert_eq!(p.within_image_duplicates, 4);
    assert_eq!(p.images_with_duplicates, 1);
}

#[test]
fn rsicd_fixture_ingests() {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rsicd_sample.json");
    let c = corpus::ingest_captions(&path, corpus::CaptionFormat::from_path(&path)).unwrap();
    assert_eq!(c.len(), 8);
    assert_eq!(c.caption_count(), 40);
    assert!(corpus::validate(&c, true).is_empty());
    assert_eq!(c.get("port_4.jpg").unwrap().split, corpus::Split::Test);
    assert_eq!(c.get("stadium_8.jpg").unwrap().split, corpus::Split::Dev);
    assert_eq!(
        c.get("beach_3.jpg").unwrap().scene_class.as_deref(),
        Some("beach")
    );
}
