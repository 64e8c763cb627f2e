//! Word-list resources: easy words for Dale-Chall, per-emotion denylists,
//! temporal connectives, stopwords and brand names.
//!
//! File format: UTF-8, one entry per line, `#` starts a comment line.
//! Entries are lowercased and deduplicated on load.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::model::Emotion;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("word list `{name}` has no entries")]
    EmptyList { name: String },
    #[error("word list `{name}` line {line}: entry `{entry}` contains whitespace")]
    InvalidEntry { name: String, line: usize, entry: String },
    #[error("emotion lexicon is missing {0}.txt")]
    MissingEmotionFile(Emotion),
    #[error("`{word}` is listed under both {first} and {second}")]
    DuplicateAcrossEmotions {
        word: String,
        first: Emotion,
        second: Emotion,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    name: String,
    entries: BTreeSet<String>,
    source_path: String,
    checksum: String,
}

/// Lowercases and folds typographic apostrophes so lookups match list entries.
pub fn normalize_entry(word: &str) -> String {
    word.trim().to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

impl WordList {
    /// Parses list text. `allow_phrases` permits internal whitespace (brand lists).
    pub fn parse(name: &str, text: &str, source_path: &str, allow_phrases: bool) -> Result<WordList, LexiconError> {
        let mut entries = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = normalize_entry(line);
            if allow_phrases {
                entries.insert(entry.split_whitespace().collect::<Vec<_>>().join(" "));
            } else if entry.contains(char::is_whitespace) {
                return Err(LexiconError::InvalidEntry {
                    name: name.to_string(),
                    line: i + 1,
                    entry,
                });
            } else {
                entries.insert(entry);
            }
        }
        if entries.is_empty() {
            return Err(LexiconError::EmptyList { name: name.to_string() });
        }
        Ok(WordList {
            name: name.to_string(),
            entries,
            source_path: source_path.to_string(),
            checksum: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    /// In-memory list; the checksum covers the sorted entries.
    pub fn from_words<I, S>(name: &str, words: I) -> WordList
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries: BTreeSet<String> = words.into_iter().map(|w| normalize_entry(w.as_ref())).collect();
        let joined = entries.iter().map(String::as_str).collect::<Vec<_>>().join("\n");
        WordList {
            name: name.to_string(),
            checksum: hex::encode(Sha256::digest(joined.as_bytes())),
            entries,
            source_path: String::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Hex SHA-256 of the source bytes.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&normalize_entry(word))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

fn read_utf8(path: &Path) -> Result<String, LexiconError> {
    let bytes = std::fs::read(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| LexiconError::Encoding {
        path: path.to_path_buf(),
    })
}

pub fn load_word_list(path: impl AsRef<Path>, name: &str) -> Result<WordList, LexiconError> {
    let path = path.as_ref();
    WordList::parse(name, &read_utf8(path)?, &path.display().to_string(), false)
}

/// Like [`load_word_list`] but entries may contain spaces (brand denylists).
pub fn load_phrase_list(path: impl AsRef<Path>, name: &str) -> Result<WordList, LexiconError> {
    let path = path.as_ref();
    WordList::parse(name, &read_utf8(path)?, &path.display().to_string(), true)
}

/// Words that directly name each emotion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionLexicon {
    lists: BTreeMap<Emotion, WordList>,
}

impl EmotionLexicon {
    pub fn from_lists(lists: BTreeMap<Emotion, WordList>) -> Result<EmotionLexicon, LexiconError> {
        if let Some(missing) = Emotion::ALL.into_iter().find(|e| !lists.contains_key(e)) {
            return Err(LexiconError::MissingEmotionFile(missing));
        }
        let mut owner: BTreeMap<&str, Emotion> = BTreeMap::new();
        for (emotion, list) in &lists {
            for word in list.iter() {
                if let Some(first) = owner.insert(word, *emotion) {
                    return Err(LexiconError::DuplicateAcrossEmotions {
                        word: word.to_string(),
                        first,
                        second: *emotion,
                    });
                }
            }
        }
        Ok(EmotionLexicon { lists })
    }

    pub fn words(&self, emotion: Emotion) -> &WordList {
        &self.lists[&emotion]
    }

    /// The seed lexicon shipped with the crate.
    pub fn bundled() -> EmotionLexicon {
        let lists = Emotion::ALL
            .into_iter()
            .map(|e| {
                let text = bundled::emotion_text(e);
                let path = format!("lexicons/emotions/{e}.txt");
                (e, WordList::parse(e.as_str(), text, &path, false).expect("bundled lexicon is valid"))
            })
            .collect();
        EmotionLexicon::from_lists(lists).expect("bundled lexicon has no cross-emotion duplicates")
    }
}

/// Loads `<dir>/<emotion>.txt` for all six emotions.
pub fn load_emotion_lexicon(dir: impl AsRef<Path>) -> Result<EmotionLexicon, LexiconError> {
    let dir = dir.as_ref();
    let mut lists = BTreeMap::new();
    for emotion in Emotion::ALL {
        let path = dir.join(format!("{emotion}.txt"));
        if !path.is_file() {
            return Err(LexiconError::MissingEmotionFile(emotion));
        }
        lists.insert(emotion, load_word_list(&path, emotion.as_str())?);
    }
    EmotionLexicon::from_lists(lists)
}

/// Seed resources compiled into the binary.
pub mod bundled {
    use super::WordList;
    use crate::model::Emotion;

    pub(crate) fn emotion_text(e: Emotion) -> &'static str {
        match e {
            Emotion::Joy => include_str!("../../../lexicons/emotions/joy.txt"),
            Emotion::Sadness => include_str!("../../../lexicons/emotions/sadness.txt"),
            Emotion::Anger => include_str!("../../../lexicons/emotions/anger.txt"),
            Emotion::Fear => include_str!("../../../lexicons/emotions/fear.txt"),
            Emotion::Surprise => include_str!("../../../lexicons/emotions/surprise.txt"),
            Emotion::Disgust => include_str!("../../../lexicons/emotions/disgust.txt"),
        }
    }

    pub const EASY_WORDS_MINI: &str = include_str!("../../../lexicons/dale_chall_mini.txt");
    pub const TEMPORAL_CONNECTIVES: &str = include_str!("../../../lexicons/temporal_connectives.txt");
    pub const STOPWORDS: &str = include_str!("../../../lexicons/stopwords.txt");
    pub const BRANDS: &str = include_str!("../../../lexicons/brands.txt");
    pub const SYLLABLE_EXCEPTIONS: &str = include_str!("../../../lexicons/syllable_exceptions.tsv");

    /// 50-word miniature easy-word list. Real scoring should load the full list.
    pub fn easy_words_mini() -> WordList {
        WordList::parse("dale_chall_mini", EASY_WORDS_MINI, "lexicons/dale_chall_mini.txt", false).unwrap()
    }

    pub fn temporal_connectives() -> WordList {
        WordList::parse("temporal_connectives", TEMPORAL_CONNECTIVES, "lexicons/temporal_connectives.txt", false)
            .unwrap()
    }

    pub fn stopwords() -> WordList {
        WordList::parse("stopwords", STOPWORDS, "lexicons/stopwords.txt", false).unwrap()
    }

    pub fn brands() -> WordList {
        WordList::parse("brands", BRANDS, "lexicons/brands.txt", true).unwrap()
    }
}
