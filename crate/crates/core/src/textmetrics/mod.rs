//! Readability scoring: tokenization, syllables, the ARI/FRE/FKGL/NDC
//! formulas and the text-intrinsic features of the feature-based models.

mod features;
mod formulas;
mod syllables;
mod tokenize;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use features::{
    char_entropy, extract_features_with, linear_combine, FeatureResources, FeatureVector, UnknownFeature, LEMMA_NOTE,
};
pub use formulas::{ari, coefficients, fkgl, fre, ndc, DegenerateText, TextCounts};
pub use syllables::{count_syllables, ExceptionTableError, SyllableCounter};
pub use tokenize::{char_count, segment_sentences_with, tokenize_words_with, Abbreviations};

use crate::lexicons::{bundled, WordList};

/// Optional model scores a combiner may be configured for.
pub const OPTIONAL_METRICS: [&str; 3] = ["carec", "carec_m", "cml2"];
/// Always reported as unavailable: needs a pretrained sentence encoder.
pub const SBERT: &str = "sbert";

pub fn segment_sentences(text: &str) -> Vec<String> {
    segment_sentences_with(text, &Abbreviations::default())
}

pub fn tokenize_words(text: &str) -> Vec<String> {
    tokenize_words_with(text, &Abbreviations::default())
}

/// Counts with the default abbreviations and syllable table.
pub fn compute_counts(text: &str, easy_words: &WordList) -> TextCounts {
    counts_with(text, easy_words, &Abbreviations::default(), &SyllableCounter::default())
}

fn is_easy(word: &str, easy: &WordList) -> bool {
    let lower = word.to_lowercase();
    if easy.contains(&lower) {
        return true;
    }
    ["s", "es", "ed", "ing"].iter().any(|suffix| {
        lower
            .strip_suffix(suffix)
            .is_some_and(|stem| !stem.is_empty() && easy.contains(stem))
    })
}

fn counts_with(text: &str, easy: &WordList, abbreviations: &Abbreviations, syllables: &SyllableCounter) -> TextCounts {
    let mut c = TextCounts::default();
    for sentence in segment_sentences_with(text, abbreviations) {
        let words = tokenize_words_with(&sentence, abbreviations);
        if words.is_empty() {
            continue;
        }
        c.sentences += 1;
        for (pos, w) in words.iter().enumerate() {
            c.words += 1;
            c.characters += char_count(w);
            c.syllables += syllables.count(w);
            let proper_noun = pos > 0 && w.chars().next().is_some_and(char::is_uppercase);
            if !proper_noun && !is_easy(w, easy) {
                c.difficult_words += 1;
            }
        }
    }
    c
}

/// A user-supplied linear model over [`FeatureVector`] fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ari: f64,
    pub fre: f64,
    pub fkgl: f64,
    pub ndc: f64,
    pub counts: TextCounts,
    #[serde(default)]
    pub optional_scores: BTreeMap<String, f64>,
    /// Metrics that could not be computed (always includes `sbert`).
    #[serde(default)]
    pub unavailable: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringConfigError {
    #[error("`{0}` is not a configurable metric (expected carec, carec_m or cml2)")]
    UnknownMetric(String),
    #[error(transparent)]
    UnknownFeature(#[from] UnknownFeature),
}

/// Scoring configuration; immutable once built and safe to share.
#[derive(Debug, Clone)]
pub struct TextAnalyzer {
    abbreviations: Abbreviations,
    syllables: SyllableCounter,
    easy_words: WordList,
    features: FeatureResources,
    combiners: BTreeMap<String, LinearModel>,
}

impl Default for TextAnalyzer {
    /// Bundled miniature easy-word list and feature resources, no combiners.
    fn default() -> Self {
        TextAnalyzer::new(bundled::easy_words_mini())
    }
}

impl TextAnalyzer {
    pub fn new(easy_words: WordList) -> Self {
        TextAnalyzer {
            abbreviations: Abbreviations::default(),
            syllables: SyllableCounter::default(),
            easy_words,
            features: FeatureResources::bundled(),
            combiners: BTreeMap::new(),
        }
    }

    pub fn with_abbreviations(mut self, a: Abbreviations) -> Self {
        self.abbreviations = a;
        self
    }

    pub fn with_syllables(mut self, s: SyllableCounter) -> Self {
        self.syllables = s;
        self
    }

    pub fn with_feature_resources(mut self, r: FeatureResources) -> Self {
        self.features = r;
        self
    }

    /// Registers weights for one of [`OPTIONAL_METRICS`].
    pub fn with_combiner(mut self, metric: &str, model: LinearModel) -> Result<Self, ScoringConfigError> {
        if !OPTIONAL_METRICS.contains(&metric) {
            return Err(ScoringConfigError::UnknownMetric(metric.to_string()));
        }
        if let Some(bad) = model.weights.keys().find(|k| FeatureVector::NAMES.iter().all(|n| n != k)) {
            return Err(UnknownFeature(bad.clone()).into());
        }
        self.combiners.insert(metric.to_string(), model);
        Ok(self)
    }

    pub fn abbreviations(&self) -> &Abbreviations {
        &self.abbreviations
    }

    pub fn sentences(&self, text: &str) -> Vec<String> {
        segment_sentences_with(text, &self.abbreviations)
    }

    pub fn words(&self, text: &str) -> Vec<String> {
        tokenize_words_with(text, &self.abbreviations)
    }

    pub fn word_count(&self, text: &str) -> usize {
        self.words(text).len()
    }

    pub fn counts(&self, text: &str) -> TextCounts {
        counts_with(text, &self.easy_words, &self.abbreviations, &self.syllables)
    }

    pub fn features(&self, text: &str) -> FeatureVector {
        extract_features_with(text, &self.features, &self.abbreviations)
    }

    pub fn fkgl(&self, text: &str) -> Result<f64, DegenerateText> {
        fkgl(&self.counts(text))
    }

    /// Full report for one text.
    pub fn score(&self, text: &str) -> Result<MetricReport, DegenerateText> {
        let counts = self.counts(text);
        let mut report = MetricReport {
            ari: ari(&counts)?,
            fre: fre(&counts)?,
            fkgl: fkgl(&counts)?,
            ndc: ndc(&counts)?,
            counts,
            optional_scores: BTreeMap::new(),
            unavailable: vec![SBERT.to_string()],
            notes: Vec::new(),
        };
        if !self.combiners.is_empty() {
            let fv = self.features(text);
            for (metric, model) in &self.combiners {
                let score = linear_combine(&fv, &model.weights, model.intercept)
                    .expect("combiner weights validated on registration");
                report.optional_scores.insert(metric.clone(), score);
            }
            report.notes.push(LEMMA_NOTE.to_string());
            for missing in &fv.missing_resources {
                report.notes.push(format!("resource_missing: {missing}"));
            }
            if self.combiners.contains_key("cml2") {
                report.notes.push("cml2: SUBTLEXus frequency feature omitted".to_string());
            }
        }
        Ok(report)
    }
}

/// Scores `text` with `config`.
pub fn score_text(text: &str, config: &TextAnalyzer) -> Result<MetricReport, DegenerateText> {
    config.score(text)
}

pub const METRIC_CSV_HEADER: [&str; 10] = [
    "text_id",
    "ari",
    "fre",
    "fkgl",
    "ndc",
    "sentences",
    "words",
    "syllables",
    "characters",
    "difficult",
];

/// Writes `text_id,ari,fre,fkgl,ndc,sentences,words,syllables,characters,difficult` rows.
pub fn write_metric_csv<'a, W, I>(out: W, rows: I) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a MetricReport)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRIC_CSV_HEADER)?;
    for (id, r) in rows {
        let c = &r.counts;
        w.write_record([
            id.to_string(),
            r.ari.to_string(),
            r.fre.to_string(),
            r.fkgl.to_string(),
            r.ndc.to_string(),
            c.sentences.to_string(),
            c.words.to_string(),
            c.syllables.to_string(),
            c.characters.to_string(),
            c.difficult_words.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
