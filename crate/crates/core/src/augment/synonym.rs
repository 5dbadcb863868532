use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Caption, CaptionSource, Corpus, ImageRecord};
use crate::error::{Error, Result};
use crate::tokenize;

use crate::lines::{read_lines, split_tab};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thesaurus {
    entries: BTreeMap<String, Vec<String>>,
}

impl Thesaurus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `word` with its synonyms. Synonyms equal to the word itself are
    /// rejected, as are empty lists.
    pub fn insert(&mut self, word: &str, synonyms: &[&str]) -> Result<()> {
        let word = word.trim().to_lowercase();
        let synonyms: Vec<String> = synonyms
            .iter()
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(Error::Config(format!(
                "thesaurus key {word:?} must be one token"
            )));
        }
        if synonyms.is_empty() {
            return Err(Error::Config(format!("{word:?} has no synonyms")));
        }
        if synonyms.contains(&word) {
            return Err(Error::Config(format!("{word:?} lists itself as a synonym")));
        }
        self.entries.insert(word, synonyms);
        Ok(())
    }

    pub fn with(mut self, word: &str, synonyms: &[&str]) -> Result<Self> {
        self.insert(word, synonyms)?;
        Ok(self)
    }

    /// Reads `word<TAB>syn1,syn2,...` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let mut thesaurus = Thesaurus::new();
        for (lineno, line) in read_lines(path)? {
            let (word, synonyms) = split_tab(path, lineno, &line)?;
            let synonyms: Vec<&str> = synonyms.split(',').collect();
            thesaurus
                .insert(word, &synonyms)
                .map_err(|e| Error::format(path.display().to_string(), lineno, 0, e.to_string()))?;
        }
        Ok(thesaurus)
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Adds one synonym variant per distinct caption.
///
/// Up to `replacements_per_caption` thesaurus-covered positions are drawn
/// uniformly without replacement and each is swapped for a uniformly chosen
/// synonym. Variants are appended to their image after the originals, which
/// are kept. Captions with no covered token, or whose normalized form was
/// already expanded, produce nothing. Output depends only on the inputs and
/// `seed`.
pub fn synonym_expand(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    replacements_per_caption: usize,
    seed: u64,
) -> Result<Corpus> {
    if thesaurus.is_empty() {
        return Err(Error::Config("thesaurus is empty".into()));
    }
    if replacements_per_caption == 0 {
        return Err(Error::Config(
            "replacements per caption must be >= 1".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut expanded = HashSet::new();
    let mut records = Vec::with_capacity(corpus.len());

    for record in corpus.records() {
        let mut variants = Vec::new();
        for caption in &record.captions {
            let mut tokens = tokenize::tokens(&caption.raw);
            if !expanded.insert(tokens.join(" ")) {
                continue;
            }
            let covered: Vec<usize> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| thesaurus.get(t).is_some())
                .map(|(i, _)| i)
                .collect();
            if covered.is_empty() {
                continue;
            }
            let picks = replacements_per_caption.min(covered.len());
            let mut chosen = index::sample(&mut rng, covered.len(), picks).into_vec();
            chosen.sort_unstable();
            for slot in chosen {
                let pos = covered[slot];
                let synonyms = thesaurus.get(&tokens[pos]).expect("covered token");
                tokens[pos] = synonyms[rng.gen_range(0..synonyms.len())].clone();
            }
            variants.push(Caption {
                image_id: record.image_id.clone(),
                raw: tokens.join(" "),
                source: CaptionSource::Augmented,
            });
        }
        let mut captions = record.captions.clone();
        captions.extend(variants);
        records.push(ImageRecord {
            captions,
            ..record.clone()
        });
    }

    Corpus::new(records, format!("{}-synonym", corpus.provenance()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(captions: &[&str]) -> Corpus {
        Corpus::new(
            vec![ImageRecord::new("img", captions.iter().copied())],
            "rsicd",
        )
        .unwrap()
    }

    #[test]
    fn single_choice() {
        let t = Thesaurus::new().with("several", &["some"]).unwrap();
        let out = synonym_expand(&corpus(&["several buildings"]), &t, 1, 0).unwrap();
        let raws: Vec<_> = out.captions().map(|c| c.raw.as_str()).collect();
        assert_eq!(raws, ["several buildings", "some buildings"]);
        assert_eq!(
            out.captions().last().unwrap().source,
            CaptionSource::Augmented
        );
        assert_eq!(out.provenance(), "rsicd-synonym");
    }

    #[test]
    fn uncovered_caption_adds_nothing() {
        let t = Thesaurus::new().with("several", &["some"]).unwrap();
        let out = synonym_expand(&corpus(&["a beach"]), &t, 1, 0).unwrap();
        assert_eq!(out.caption_count(), 1);
    }

    #[test]
    fn duplicates_expand_once() {
        let t = Thesaurus::new().with("several", &["some"]).unwrap();
        let out = synonym_expand(&corpus(&["several trees", "Several trees."]), &t, 1, 0).unwrap();
        assert_eq!(out.caption_count(), 3);
    }

    #[test]
    fn replacement_budget() {
        let t = Thesaurus::new()
            .with("many", &["lots-of"])
            .unwrap()
            .with("green", &["verdant"])
            .unwrap()
            .with("trees", &["woods"])
            .unwrap();
        for seed in 0..20 {
            let out = synonym_expand(&corpus(&["many green trees"]), &t, 2, seed).unwrap();
            let variant = &out.records()[0].captions[1].raw;
            let changed = variant
                .split(' ')
                .zip("many green trees".split(' '))
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(changed, 2, "{variant}");
        }
    }

    #[test]
    fn seeded() {
        let t = Thesaurus::new()
            .with("many", &["numerous", "lots", "plenty"])
            .unwrap()
            .with("trees", &["woods", "forest"])
            .unwrap();
        let c = corpus(&["many trees", "many green trees near many roads"]);
        let a = synonym_expand(&c, &t, 1, 7).unwrap();
        let b = synonym_expand(&c, &t, 1, 7).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn bad_thesaurus_entries() {
        assert!(Thesaurus::new().with("sea", &["sea"]).is_err());
        assert!(Thesaurus::new().with("sea", &[]).is_err());
        assert!(synonym_expand(&corpus(&["x"]), &Thesaurus::new(), 1, 0).is_err());
        let t = Thesaurus::new().with("x", &["y"]).unwrap();
        assert!(synonym_expand(&corpus(&["x"]), &t, 0, 0).is_err());
    }
}
