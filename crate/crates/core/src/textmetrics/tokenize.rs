//! Sentence segmentation and word tokenization.

use std::collections::BTreeSet;

/// Abbreviations that end in a period without ending a sentence.
///
/// Titles (`Mr.`, `Dr.`) never end a sentence. Other abbreviations (`p.m.`,
/// `etc.`) suppress the split unless the next word starts with a capital
/// letter, which is how "after 5 p.m. Thank you" still splits in two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations {
    titles: BTreeSet<String>,
    others: BTreeSet<String>,
}

impl Default for Abbreviations {
    fn default() -> Self {
        Abbreviations::new(
            ["mr.", "mrs.", "ms.", "dr.", "prof.", "st."],
            ["p.m.", "a.m.", "etc.", "e.g.", "i.e.", "vs.", "approx.", "no."],
        )
    }
}

impl Abbreviations {
    pub fn new<I, J, S, T>(titles: I, others: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |s: &str| {
            let s = s.trim().to_lowercase();
            if s.ends_with('.') {
                s
            } else {
                format!("{s}.")
            }
        };
        Abbreviations {
            titles: titles.into_iter().map(|s| norm(s.as_ref())).collect(),
            others: others.into_iter().map(|s| norm(s.as_ref())).collect(),
        }
    }

    /// No abbreviations at all; every `.` + space is a boundary.
    pub fn none() -> Self {
        Abbreviations {
            titles: BTreeSet::new(),
            others: BTreeSet::new(),
        }
    }

    fn is_title(&self, token: &str) -> bool {
        self.titles.contains(token)
    }

    fn is_other(&self, token: &str) -> bool {
        self.others.contains(token)
    }

    /// `token` includes its trailing period, e.g. `p.m.`.
    pub fn contains(&self, token: &str) -> bool {
        let t = token.to_lowercase();
        self.is_title(&t) || self.is_other(&t)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Splits text at `.`, `!` or `?` (plus any closing quotes) followed by
/// whitespace or end of text. Empty segments are dropped.
pub fn segment_sentences_with(text: &str, abbreviations: &Abbreviations) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (is_terminal(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        let at_end = j == chars.len();
        if !at_end && !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let end_byte = if at_end { text.len() } else { chars[j].0 };
        if !at_end && c == '.' && j == i + 1 && suppressed_by_abbreviation(text, &chars, i, j, abbreviations) {
            i = j;
            continue;
        }
        push_segment(&mut sentences, &text[start..end_byte]);
        start = end_byte;
        i = j;
    }
    push_segment(&mut sentences, &text[start..]);
    sentences
}

fn push_segment(out: &mut Vec<String>, segment: &str) {
    let s = segment.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

fn suppressed_by_abbreviation(
    text: &str,
    chars: &[(usize, char)],
    period: usize,
    after: usize,
    abbreviations: &Abbreviations,
) -> bool {
    let mut k = period;
    while k > 0 && !chars[k - 1].1.is_whitespace() {
        k -= 1;
    }
    let token_end = chars[period].0 + 1;
    let token = text[chars[k].0..token_end]
        .trim_start_matches(is_opener)
        .to_lowercase();
    if abbreviations.is_title(&token) {
        return true;
    }
    if !abbreviations.is_other(&token) {
        return false;
    }
    let next = chars[after..]
        .iter()
        .map(|&(_, c)| c)
        .find(|c| !c.is_whitespace() && !is_opener(*c));
    !next.is_some_and(char::is_uppercase)
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Maximal runs of letters and digits, joined across internal apostrophes
/// and hyphens. Listed abbreviations keep their internal periods (`p.m`).
pub fn tokenize_words_with(text: &str, abbreviations: &Abbreviations) -> Vec<String> {
    let mut words = Vec::new();
    for chunk in text.split_whitespace() {
        let core = chunk
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .trim_end_matches(|c: char| !c.is_alphanumeric() && c != '.');
        if core.ends_with('.') && core.len() > 1 && abbreviations.contains(core) {
            words.push(core[..core.len() - 1].to_string());
            continue;
        }
        split_runs(chunk, &mut words);
    }
    words
}

fn split_runs(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        let joins = (is_apostrophe(c) || c == '-')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if joins {
            current.push(c);
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
}

/// Letters and digits in a token; apostrophes, hyphens and periods excluded.
pub fn char_count(token: &str) -> usize {
    token.chars().filter(|c| c.is_alphanumeric()).count()
}
