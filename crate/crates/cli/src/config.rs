//! TOML configuration. Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emodial_core::curation::{CefrBandTable, CoherenceMode, GateContext};
use emodial_core::lexicons::{self, bundled, EmotionLexicon, WordList};
use emodial_core::textmetrics::{FeatureResources, LinearModel, SyllableCounter, TextAnalyzer};
use emodial_core::transcript::{BrandPattern, BrandRedactor};
use emodial_generator::ProviderConfig;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_STORE: &str = "corpus.jsonl";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    /// Directory of `<emotion>.txt` lists.
    pub emotions_dir: Option<PathBuf>,
    /// Easy-word list for the Dale-Chall formula.
    pub easy_words: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub temporal_connectives: Option<PathBuf>,
    pub brands: Option<PathBuf>,
    pub syllable_exceptions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSettings {
    pub coherence_mode: CoherenceMode,
    pub bands: Option<CefrBandTable>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSettings {
    /// Linear models for `carec`, `carec_m` or `cml2`.
    pub combiners: BTreeMap<String, LinearModel>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub listen: Option<String>,
    pub ui_dir: Option<PathBuf>,
    /// Environment variable holding the shared API token.
    pub token_env: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub lexicons: LexiconPaths,
    pub gates: GateSettings,
    pub scoring: ScoringSettings,
    pub service: ServiceSettings,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p.as_mut() {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn lexicon_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("lexicon: {e}"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.store);
        resolve(base, &mut cfg.provider.mock_dir);
        let l = &mut cfg.lexicons;
        for p in [
            &mut l.emotions_dir,
            &mut l.easy_words,
            &mut l.stopwords,
            &mut l.temporal_connectives,
            &mut l.brands,
            &mut l.syllable_exceptions,
        ] {
            resolve(base, p);
        }
        resolve(base, &mut cfg.service.ui_dir);
        cfg.provider
            .validate()
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn emotion_lexicon(&self) -> Result<EmotionLexicon, CliError> {
        match &self.lexicons.emotions_dir {
            Some(dir) => lexicons::load_emotion_lexicon(dir).map_err(lexicon_err),
            None => Ok(EmotionLexicon::bundled()),
        }
    }

    pub fn analyzer(&self) -> Result<TextAnalyzer, CliError> {
        let l = &self.lexicons;
        let easy = match &l.easy_words {
            Some(p) => lexicons::load_word_list(p, "easy_words").map_err(lexicon_err)?,
            None => bundled::easy_words_mini(),
        };
        let optional = |p: &Option<PathBuf>, name: &str, fallback: fn() -> WordList| -> Result<Option<WordList>, CliError> {
            match p {
                Some(p) => lexicons::load_word_list(p, name).map(Some).map_err(lexicon_err),
                None => Ok(Some(fallback())),
            }
        };
        let features = FeatureResources {
            temporal_connectives: optional(&l.temporal_connectives, "temporal_connectives", bundled::temporal_connectives)?,
            stopwords: optional(&l.stopwords, "stopwords", bundled::stopwords)?,
        };
        let mut analyzer = TextAnalyzer::new(easy).with_feature_resources(features);
        if let Some(p) = &l.syllable_exceptions {
            analyzer = analyzer.with_syllables(SyllableCounter::load(p).map_err(lexicon_err)?);
        }
        for (metric, model) in &self.scoring.combiners {
            analyzer = analyzer
                .with_combiner(metric, model.clone())
                .map_err(|e| CliError::Usage(format!("scoring: {e}")))?;
        }
        Ok(analyzer)
    }

    pub fn gate_context(&self) -> Result<GateContext, CliError> {
        Ok(GateContext {
            lexicon: self.emotion_lexicon()?,
            bands: self.gates.bands.unwrap_or_default(),
            analyzer: self.analyzer()?,
            coherence_mode: self.gates.coherence_mode,
        })
    }

    pub fn brand_redactor(&self) -> Result<BrandRedactor, CliError> {
        let list = match &self.lexicons.brands {
            Some(p) => lexicons::load_phrase_list(p, "brands").map_err(lexicon_err)?,
            None => bundled::brands(),
        };
        let patterns: Vec<BrandPattern> = list.iter().map(|b| BrandPattern::Words(b.to_string())).collect();
        BrandRedactor::new(&patterns).map_err(lexicon_err)
    }
}
