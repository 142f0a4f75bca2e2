use std::collections::{BTreeMap, HashMap};

use super::Granularity;

const BOS: &str = "^";
const EOS: &str = "$";

/// Counts every n-gram for `n` in `lo..=hi`. Character n-grams are taken over
/// the token sequence wrapped in `^`/`$` markers and concatenated; word
/// n-grams are joined with single spaces and carry no markers.
pub fn ngram_counts<S: AsRef<str>>(
    tokens: &[S],
    lo: usize,
    hi: usize,
    granularity: Granularity,
) -> BTreeMap<String, usize> {
    assert!(lo >= 1 && lo <= hi, "n-gram range must satisfy 1 <= lo <= hi");
    let mut counts = BTreeMap::new();
    if tokens.is_empty() {
        return counts;
    }
    let (seq, sep): (Vec<&str>, &str) = match granularity {
        Granularity::Char => (
            std::iter::once(BOS)
                .chain(tokens.iter().map(AsRef::as_ref))
                .chain(std::iter::once(EOS))
                .collect(),
            "",
        ),
        Granularity::Word => (tokens.iter().map(AsRef::as_ref).collect(), " "),
    };
    for n in lo..=hi {
        for window in seq.windows(n) {
            *counts.entry(window.join(sep)).or_insert(0) += 1;
        }
    }
    counts
}

/// N-gram feature index built from a training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramVocab {
    pub granularity: Granularity,
    pub lo: usize,
    pub hi: usize,
    index: HashMap<String, usize>,
}

impl NgramVocab {
    /// N-grams occurring at least `min_count` times, most frequent first
    /// (ties lexicographic), capped at `max_features`.
    pub fn build<S: AsRef<str>>(
        docs: &[Vec<S>],
        lo: usize,
        hi: usize,
        granularity: Granularity,
        min_count: usize,
        max_features: usize,
    ) -> Self {
        let mut total: HashMap<String, usize> = HashMap::new();
        for d in docs {
            for (g, c) in ngram_counts(d, lo, hi, granularity) {
                *total.entry(g).or_default() += c;
            }
        }
        let mut ranked: Vec<_> = total.into_iter().filter(|(_, c)| *c >= min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_features);
        Self {
            granularity,
            lo,
            hi,
            index: ranked.into_iter().enumerate().map(|(i, (g, _))| (g, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn id(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseFeatures {
    pub weights: BTreeMap<usize, f64>,
    pub dim: usize,
}

/// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1` for every
/// feature of `vocab`.
pub fn build_idf<S: AsRef<str>>(docs: &[Vec<S>], vocab: &NgramVocab) -> Vec<f64> {
    let mut df = vec![0usize; vocab.len()];
    for d in docs {
        for g in ngram_counts(d, vocab.lo, vocab.hi, vocab.granularity).keys() {
            if let Some(i) = vocab.id(g) {
                df[i] += 1;
            }
        }
    }
    let n = docs.len() as f64;
    df.into_iter()
        .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect()
}

/// Counts of the in-vocabulary n-grams of `tokens`, optionally scaled by idf.
pub fn ngram_features<S: AsRef<str>>(tokens: &[S], vocab: &NgramVocab, idf: Option<&[f64]>) -> SparseFeatures {
    let mut weights = BTreeMap::new();
    for (g, c) in ngram_counts(tokens, vocab.lo, vocab.hi, vocab.granularity) {
        if let Some(i) = vocab.id(&g) {
            let scale = idf.map_or(1.0, |w| w[i]);
            weights.insert(i, c as f64 * scale);
        }
    }
    SparseFeatures {
        weights,
        dim: vocab.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn char_bigrams_with_markers() {
        let toks = tokenize("abi", Granularity::Char);
        let counts = ngram_counts(&toks, 2, 2, Granularity::Char);
        let expected: BTreeMap<String, usize> =
            [("^a", 1), ("ab", 1), ("bi", 1), ("i$", 1)].map(|(k, v)| (k.to_string(), v)).into();
        assert_eq!(counts, expected);
    }

    #[test]
    fn word_ngrams() {
        let toks = ["mie", "läksin", "mie"];
        let counts = ngram_counts(&toks, 1, 2, Granularity::Word);
        assert_eq!(counts["mie"], 2);
        assert_eq!(counts["mie läksin"], 1);
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn empty_input() {
        assert!(ngram_counts::<&str>(&[], 1, 3, Granularity::Char).is_empty());
        let vocab = NgramVocab::build(&[vec!["a"]], 1, 1, Granularity::Char, 1, 10);
        assert!(ngram_features::<&str>(&[], &vocab, None).weights.is_empty());
    }

    #[test]
    fn idf_of_ubiquitous_term_is_one() {
        let docs: Vec<Vec<String>> = ["ab", "ba", "aa"].iter().map(|s| tokenize(s, Granularity::Char)).collect();
        let vocab = NgramVocab::build(&docs, 1, 1, Granularity::Char, 1, 100);
        let idf = build_idf(&docs, &vocab);
        // "^" and "$" and "a" occur in every document
        assert_eq!(idf[vocab.id("a").unwrap()], 1.0);
        assert_eq!(idf[vocab.id("^").unwrap()], 1.0);
        let b = idf[vocab.id("b").unwrap()];
        assert!((b - ((4.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        let f = ngram_features(&docs[0], &vocab, Some(&idf));
        assert_eq!(f.weights[&vocab.id("b").unwrap()], b);
        assert_eq!(f.dim, vocab.len());
    }

    #[test]
    fn out_of_vocab_grams_are_dropped() {
        let vocab = NgramVocab::build(&[vec!["x", "y"]], 1, 1, Granularity::Word, 1, 10);
        let f = ngram_features(&["x", "z"], &vocab, None);
        assert_eq!(f.weights.len(), 1);
        assert!(f.weights.keys().all(|&k| k < f.dim));
    }
}
