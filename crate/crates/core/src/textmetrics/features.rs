//! Text-intrinsic inputs to the feature-based readability models (CAREC,
//! CAREC_M, CML2). Features that need external corpora (age of acquisition,
//! COCA/BNC n-grams, MRC imageability, SUBTLEXus frequencies) are not computed.
//!
//! Lemmas are approximated by lowercase surface forms, and nouns by content
//! words (non-stopwords); there is no tagger.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenize::{char_count, segment_sentences_with, tokenize_words_with, Abbreviations};
use crate::lexicons::{normalize_entry, WordList};

pub const LEMMA_NOTE: &str = "lemma≈lowercase";

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours", "ourselves",
    "they", "them", "their", "theirs", "themselves",
];

/// Optional word lists used by the features. Missing lists zero the
/// dependent features and are named in [`FeatureVector::missing_resources`].
#[derive(Debug, Clone, Default)]
pub struct FeatureResources {
    pub temporal_connectives: Option<WordList>,
    pub stopwords: Option<WordList>,
}

impl FeatureResources {
    pub fn bundled() -> Self {
        FeatureResources {
            temporal_connectives: Some(crate::lexicons::bundled::temporal_connectives()),
            stopwords: Some(crate::lexicons::bundled::stopwords()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sentence_count: f64,
    pub avg_word_length_stddev: f64,
    pub avg_char_entropy: f64,
    pub temporal_connective_ratio: f64,
    pub content_lemma_type_count: f64,
    pub content_lemma_type_ratio: f64,
    pub noun_pronoun_overlap_next2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_resources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature `{0}`")]
pub struct UnknownFeature(pub String);

impl FeatureVector {
    pub const NAMES: [&'static str; 7] = [
        "sentence_count",
        "avg_word_length_stddev",
        "avg_char_entropy",
        "temporal_connective_ratio",
        "content_lemma_type_count",
        "content_lemma_type_ratio",
        "noun_pronoun_overlap_next2",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "sentence_count" => self.sentence_count,
            "avg_word_length_stddev" => self.avg_word_length_stddev,
            "avg_char_entropy" => self.avg_char_entropy,
            "temporal_connective_ratio" => self.temporal_connective_ratio,
            "content_lemma_type_count" => self.content_lemma_type_count,
            "content_lemma_type_ratio" => self.content_lemma_type_ratio,
            "noun_pronoun_overlap_next2" => self.noun_pronoun_overlap_next2,
            _ => return None,
        })
    }
}

/// `intercept + Σ weight·feature`.
pub fn linear_combine(fv: &FeatureVector, weights: &BTreeMap<String, f64>, intercept: f64) -> Result<f64, UnknownFeature> {
    weights.iter().try_fold(intercept, |acc, (name, w)| {
        let value = fv.get(name).ok_or_else(|| UnknownFeature(name.clone()))?;
        Ok(acc + w * value)
    })
}

fn population_stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Shannon entropy (bits) of the lowercase letter/digit distribution.
pub fn char_entropy<'a>(tokens: impl IntoIterator<Item = &'a str>) -> f64 {
    let mut freq: HashMap<char, usize> = HashMap::new();
    let mut total = 0usize;
    for t in tokens {
        for c in t.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase) {
            *freq.entry(c).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h = freq
        .values()
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    // A single-symbol distribution yields -0.0.
    h.max(0.0)
}

pub fn extract_features_with(text: &str, resources: &FeatureResources, abbreviations: &Abbreviations) -> FeatureVector {
    let sentences: Vec<Vec<String>> = segment_sentences_with(text, abbreviations)
        .iter()
        .map(|s| tokenize_words_with(s, abbreviations))
        .filter(|words| !words.is_empty())
        .collect();
    let mut fv = FeatureVector::default();
    if resources.temporal_connectives.is_none() {
        fv.missing_resources.push("temporal_connectives".into());
    }
    if resources.stopwords.is_none() {
        fv.missing_resources.push("stopwords".into());
    }
    if sentences.is_empty() {
        return fv;
    }
    let all_words: Vec<&str> = sentences.iter().flatten().map(String::as_str).collect();
    let word_total = all_words.len() as f64;

    fv.sentence_count = sentences.len() as f64;
    fv.avg_word_length_stddev = sentences
        .iter()
        .map(|s| population_stddev(&s.iter().map(|w| char_count(w) as f64).collect::<Vec<_>>()))
        .sum::<f64>()
        / sentences.len() as f64;
    fv.avg_char_entropy = char_entropy(all_words.iter().copied());

    if let Some(connectives) = &resources.temporal_connectives {
        let hits = all_words.iter().filter(|w| connectives.contains(w)).count();
        fv.temporal_connective_ratio = hits as f64 / word_total;
    }

    if let Some(stop) = &resources.stopwords {
        let is_content = |w: &str| !stop.contains(w) && w.chars().any(char::is_alphabetic);
        let content: Vec<String> = all_words
            .iter()
            .filter(|w| is_content(w))
            .map(|w| normalize_entry(w))
            .collect();
        let types: HashSet<&str> = content.iter().map(String::as_str).collect();
        fv.content_lemma_type_count = types.len() as f64;
        fv.content_lemma_type_ratio = if content.is_empty() {
            0.0
        } else {
            types.len() as f64 / content.len() as f64
        };

        let referents: Vec<HashSet<String>> = sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|w| normalize_entry(w))
                    .filter(|w| PRONOUNS.contains(&w.as_str()) || is_content(w))
                    .collect()
            })
            .collect();
        if referents.len() >= 2 {
            let overlapping = (0..referents.len() - 1)
                .filter(|&i| {
                    referents[i + 1..referents.len().min(i + 3)]
                        .iter()
                        .any(|next| !referents[i].is_disjoint(next))
                })
                .count();
            fv.noun_pronoun_overlap_next2 = overlapping as f64 / (referents.len() - 1) as f64;
        }
    }
    fv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(text: &str, res: &FeatureResources) -> FeatureVector {
        extract_features_with(text, res, &Abbreviations::default())
    }

    #[test]
    fn single_symbol_entropy_is_zero() {
        let fv = extract("aaaa.", &FeatureResources::bundled());
        assert_eq!(fv.avg_char_entropy, 0.0);
        assert_eq!(fv.sentence_count, 1.0);
    }

    #[test]
    fn two_symbol_uniform_entropy_is_one_bit() {
        assert!((char_entropy(["abab"]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temporal_connective_ratio_hand_count() {
        let res = FeatureResources {
            temporal_connectives: Some(WordList::from_words("t", ["then"])),
            stopwords: None,
        };
        let fv = extract("He left. Then he returned.", &res);
        assert!((fv.temporal_connective_ratio - 1.0 / 5.0).abs() < 1e-12);
        assert_eq!(fv.missing_resources, vec!["stopwords".to_string()]);
        assert_eq!(fv.content_lemma_type_count, 0.0);
    }

    #[test]
    fn empty_text_is_all_zero() {
        let fv = extract("", &FeatureResources::bundled());
        assert_eq!(fv, FeatureVector::default());
    }

    #[test]
    fn missing_resources_are_flagged() {
        let fv = extract("Then it broke.", &FeatureResources::default());
        assert_eq!(fv.temporal_connective_ratio, 0.0);
        assert_eq!(fv.missing_resources.len(), 2);
    }

    #[test]
    fn word_length_stddev_per_sentence_average() {
        // Sentence 1 lengths [2, 4] → σ = 1; sentence 2 lengths [3, 3] → σ = 0.
        let fv = extract("ab abcd. abc abc.", &FeatureResources::default());
        assert!((fv.avg_word_length_stddev - 0.5).abs() < 1e-12);
    }

    #[test]
    fn content_types_and_overlap() {
        let stop = WordList::from_words("s", ["the", "is", "a", "it"]);
        let res = FeatureResources {
            temporal_connectives: None,
            stopwords: Some(stop),
        };
        // content: phone broken phone dead battery → 4 types / 5 tokens.
        // s1 {phone, broken} overlaps s2 {phone, dead, it}; s2 overlaps s3 {it, battery}.
        let fv = extract("The phone is broken. The phone is dead it. It is a battery.", &res);
        assert_eq!(fv.content_lemma_type_count, 4.0);
        assert!((fv.content_lemma_type_ratio - 0.8).abs() < 1e-12);
        assert!((fv.noun_pronoun_overlap_next2 - 1.0).abs() < 1e-12);

        let fv = extract("Cats purr. Dogs bark. Birds sing.", &res);
        assert_eq!(fv.noun_pronoun_overlap_next2, 0.0);
    }

    #[test]
    fn overlap_looks_two_sentences_ahead() {
        let res = FeatureResources {
            temporal_connectives: None,
            stopwords: Some(WordList::from_words("s", ["x"])),
        };
        // s1 shares "cat" with s3 only; s2 shares nothing ahead; s3 nothing left but s4; s4 last.
        let fv = extract("Cat one. Dog two. Cat three. Bird four.", &res);
        assert!((fv.noun_pronoun_overlap_next2 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn combiner_arithmetic() {
        let fv = FeatureVector {
            sentence_count: 7.0,
            avg_char_entropy: 4.0,
            ..FeatureVector::default()
        };
        let zero: BTreeMap<String, f64> = FeatureVector::NAMES.iter().map(|n| (n.to_string(), 0.0)).collect();
        assert_eq!(linear_combine(&fv, &zero, 0.5).unwrap(), 0.5);

        let pick = BTreeMap::from([("sentence_count".to_string(), 1.0)]);
        assert_eq!(linear_combine(&fv, &pick, 0.0).unwrap(), 7.0);

        // Hand dot product: 1.5 + 2·7 + (−0.25)·4 = 14.5
        let two = BTreeMap::from([
            ("sentence_count".to_string(), 2.0),
            ("avg_char_entropy".to_string(), -0.25),
        ]);
        assert!((linear_combine(&fv, &two, 1.5).unwrap() - 14.5).abs() < 1e-12);

        let bad = BTreeMap::from([("subtlex".to_string(), 1.0)]);
        assert_eq!(linear_combine(&fv, &bad, 0.0), Err(UnknownFeature("subtlex".into())));
    }

    proptest::proptest! {
        #[test]
        fn feature_bounds(text in "[a-eA-E .!?]{0,80}") {
            let fv = extract(&text, &FeatureResources::bundled());
            for r in [fv.temporal_connective_ratio, fv.content_lemma_type_ratio, fv.noun_pronoun_overlap_next2] {
                proptest::prop_assert!((0.0..=1.0).contains(&r));
            }
            proptest::prop_assert!(fv.avg_char_entropy >= 0.0);
            let alphabet: HashSet<char> = text.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
            if !alphabet.is_empty() {
                proptest::prop_assert!(fv.avg_char_entropy <= (alphabet.len() as f64).log2() + 1e-12);
            }
        }
    }
}
