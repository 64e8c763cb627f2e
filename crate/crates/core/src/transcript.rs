//! Dialogue data model and the line-oriented transcript format.
//!
//! The canonical text form puts one turn on each line:
//!
//! ```text
//! Client (angry): Hello, I'm calling about my phone, and I'm not happy at all!
//! Agent (calm): I'm sorry to hear that. Can you tell me what seems to be the problem?
//! ```
//!
//! Blank lines are ignored. Attitude labels are lowercased on the way in so that
//! chain mining does not depend on how the generator happened to case them.

use std::fmt;

use chrono::{DateTime, Utc};
use regex::{NoExpand, Regex};
use serde::{Deserialize, Serialize};

use crate::model::{CefrLevel, Emotion};

/// Replacement text for redacted brand and model names.
pub const BRAND_PLACEHOLDER: &str = "Brand Model";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranscriptError {
    #[error("line {line}: malformed turn ({reason}); expected `Speaker (attitude): text`")]
    MalformedLine { line: usize, reason: &'static str },
    #[error("line {line}: unknown speaker `{speaker}`")]
    UnknownSpeaker { line: usize, speaker: String },
    #[error("transcript contains no turns")]
    EmptyDialogue,
    #[error("dialogue opens with {found} but {expected} was required")]
    UnexpectedOpeningRole { expected: Role, found: Role },
    #[error("turn at position {position} carries index {index}")]
    NonContiguousIndex { position: usize, index: usize },
    #[error("invalid turn: {0}")]
    InvalidTurn(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Client,
    Agent,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Client => "Client",
            Role::Agent => "Agent",
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Client => Role::Agent,
            Role::Agent => Role::Client,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = crate::model::UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "client" | "user" => Ok(Role::Client),
            "agent" => Ok(Role::Agent),
            _ => Err(crate::model::UnknownLabel {
                kind: "role",
                value: s.to_string(),
            }),
        }
    }
}

/// One utterance with its speaker and attitude label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TurnWire", into = "TurnWire")]
pub struct Turn {
    index: usize,
    role: Role,
    attitude: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct TurnWire {
    role: Role,
    attitude: String,
    text: String,
}

impl TryFrom<TurnWire> for Turn {
    type Error = TranscriptError;

    fn try_from(w: TurnWire) -> Result<Self, Self::Error> {
        Turn::new(0, w.role, &w.attitude, &w.text)
    }
}

impl From<Turn> for TurnWire {
    fn from(t: Turn) -> Self {
        TurnWire {
            role: t.role,
            attitude: t.attitude,
            text: t.text,
        }
    }
}

impl Turn {
    /// Builds a turn, trimming the text and lowercasing the attitude.
    pub fn new(index: usize, role: Role, attitude: &str, text: &str) -> Result<Turn, TranscriptError> {
        let attitude = attitude.trim().to_lowercase();
        if attitude.is_empty() {
            return Err(TranscriptError::InvalidTurn("empty attitude label"));
        }
        if !attitude
            .chars()
            .all(|c| c.is_alphabetic() || c == ' ' || c == '-')
        {
            return Err(TranscriptError::InvalidTurn(
                "attitude may only contain letters, spaces and hyphens",
            ));
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(TranscriptError::InvalidTurn("empty utterance"));
        }
        if text.contains(['\n', '\r']) {
            return Err(TranscriptError::InvalidTurn("utterance spans several lines"));
        }
        Ok(Turn {
            index,
            role,
            attitude,
            text: text.to_string(),
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn attitude(&self) -> &str {
        &self.attitude
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn with_text(&self, text: String) -> Turn {
        Turn {
            text,
            ..self.clone()
        }
    }
}

/// Generation metadata attached to every stored dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueMeta {
    pub target_emotion: Emotion,
    pub cefr: CefrLevel,
    /// `true` for implicit-emotion dialogues, where the client may not name the emotion.
    pub implicit: bool,
    pub scenario: String,
    pub provider: String,
    pub created_at: DateTime<Utc>,
}

impl DialogueMeta {
    pub fn new(target_emotion: Emotion, cefr: CefrLevel, implicit: bool) -> Self {
        DialogueMeta {
            target_emotion,
            cefr,
            implicit,
            scenario: String::new(),
            provider: String::new(),
            created_at: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DialogueWire", into = "DialogueWire")]
pub struct Dialogue {
    id: String,
    turns: Vec<Turn>,
    meta: DialogueMeta,
}

#[derive(Serialize, Deserialize)]
struct DialogueWire {
    id: String,
    meta: DialogueMeta,
    turns: Vec<Turn>,
}

impl TryFrom<DialogueWire> for Dialogue {
    type Error = TranscriptError;

    fn try_from(w: DialogueWire) -> Result<Self, Self::Error> {
        let turns = w
            .turns
            .into_iter()
            .enumerate()
            .map(|(i, t)| Turn { index: i, ..t })
            .collect();
        Dialogue::new(w.id, turns, w.meta)
    }
}

impl From<Dialogue> for DialogueWire {
    fn from(d: Dialogue) -> Self {
        DialogueWire {
            id: d.id,
            meta: d.meta,
            turns: d.turns,
        }
    }
}

impl Dialogue {
    pub fn new(id: impl Into<String>, turns: Vec<Turn>, meta: DialogueMeta) -> Result<Dialogue, TranscriptError> {
        if turns.is_empty() {
            return Err(TranscriptError::EmptyDialogue);
        }
        if let Some((position, t)) = turns.iter().enumerate().find(|(i, t)| t.index != *i) {
            return Err(TranscriptError::NonContiguousIndex {
                position,
                index: t.index,
            });
        }
        Ok(Dialogue {
            id: id.into(),
            turns,
            meta,
        })
    }

    pub fn from_transcript(id: impl Into<String>, transcript: Transcript, meta: DialogueMeta) -> Dialogue {
        Dialogue {
            id: id.into(),
            turns: transcript.turns,
            meta,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn meta(&self) -> &DialogueMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut DialogueMeta {
        &mut self.meta
    }

    pub fn turns_by(&self, role: Role) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(move |t| t.role == role)
    }

    pub fn to_transcript(&self) -> String {
        serialize_transcript(&self.turns)
    }
}

/// Turns parsed from transcript text, before metadata is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    turns: Vec<Turn>,
}

impl Transcript {
    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn into_turns(self) -> Vec<Turn> {
        self.turns
    }
}

/// Speaker tokens accepted by [`parse_transcript`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    pub client_tokens: Vec<String>,
    pub agent_tokens: Vec<String>,
    /// Role the first turn must have, if any.
    pub opening_role: Option<Role>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            client_tokens: vec!["Client".to_string()],
            agent_tokens: vec!["Agent".to_string()],
            opening_role: Some(Role::Client),
        }
    }
}

impl ParseOptions {
    /// Also accepts `Customer` for the client side.
    pub fn with_customer_alias() -> Self {
        let mut opts = ParseOptions::default();
        opts.client_tokens.push("Customer".to_string());
        opts
    }

    fn role_for(&self, speaker: &str) -> Option<Role> {
        let matches = |tokens: &[String]| tokens.iter().any(|t| t.eq_ignore_ascii_case(speaker));
        if matches(&self.client_tokens) {
            Some(Role::Client)
        } else if matches(&self.agent_tokens) {
            Some(Role::Agent)
        } else {
            None
        }
    }
}

/// Parses `Speaker (attitude): text` lines into turns.
///
/// Line numbers in errors are 1-based physical lines.
pub fn parse_transcript(input: &str, options: &ParseOptions) -> Result<Transcript, TranscriptError> {
    let input = input.strip_prefix('\u{feff}').unwrap_or(input);
    let mut turns = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (speaker, attitude, text) = split_turn_line(line).map_err(|reason| TranscriptError::MalformedLine {
            line: line_no,
            reason,
        })?;
        let role = options
            .role_for(speaker)
            .ok_or_else(|| TranscriptError::UnknownSpeaker {
                line: line_no,
                speaker: speaker.to_string(),
            })?;
        let turn = Turn::new(turns.len(), role, attitude, text).map_err(|e| match e {
            TranscriptError::InvalidTurn(reason) => TranscriptError::MalformedLine { line: line_no, reason },
            other => other,
        })?;
        turns.push(turn);
    }
    let first = turns.first().ok_or(TranscriptError::EmptyDialogue)?;
    if let Some(expected) = options.opening_role {
        if first.role != expected {
            return Err(TranscriptError::UnexpectedOpeningRole {
                expected,
                found: first.role,
            });
        }
    }
    Ok(Transcript { turns })
}

fn split_turn_line(line: &str) -> Result<(&str, &str, &str), &'static str> {
    let open = line.find('(').ok_or("missing parenthesized attitude")?;
    let speaker = line[..open].trim();
    if speaker.is_empty() {
        return Err("missing speaker");
    }
    if speaker.contains(':') {
        return Err("missing parenthesized attitude");
    }
    let rest = &line[open + 1..];
    let close = rest.find(')').ok_or("unclosed attitude")?;
    let attitude = &rest[..close];
    let after = rest[close + 1..].trim_start();
    let text = after.strip_prefix(':').ok_or("missing `:` after attitude")?;
    Ok((speaker, attitude, text))
}

/// Writes turns in the canonical format, one newline-terminated line each.
pub fn serialize_transcript(turns: &[Turn]) -> String {
    let mut out = String::new();
    for t in turns {
        out.push_str(t.role.as_str());
        out.push_str(" (");
        out.push_str(&t.attitude);
        out.push_str("): ");
        out.push_str(&t.text);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainLink {
    pub role: Role,
    pub attitude: String,
}

impl ChainLink {
    pub fn new(role: Role, attitude: impl Into<String>) -> Self {
        ChainLink {
            role,
            attitude: attitude.into(),
        }
    }
}

impl fmt::Display for ChainLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.role, self.attitude)
    }
}

// Roles order by declaration (Client < Agent) when links are sorted.
impl PartialOrd for Role {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Role {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// Ordered (role, attitude) pairs mirroring a dialogue's turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttitudeChain {
    pub entries: Vec<ChainLink>,
}

impl AttitudeChain {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for AttitudeChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, link) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" → ")?;
            }
            write!(f, "{link}")?;
        }
        Ok(())
    }
}

pub fn extract_attitude_chain(d: &Dialogue) -> AttitudeChain {
    AttitudeChain {
        entries: d
            .turns
            .iter()
            .map(|t| ChainLink::new(t.role, t.attitude.clone()))
            .collect(),
    }
}

/// A brand denylist entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrandPattern {
    /// Case-sensitive substring.
    Literal(String),
    /// Case-insensitive sequence of words separated by any whitespace,
    /// matched on word boundaries.
    Words(String),
}

impl BrandPattern {
    fn to_regex_source(&self) -> Option<String> {
        match self {
            BrandPattern::Literal(s) if s.is_empty() => None,
            BrandPattern::Literal(s) => Some(format!("(?-i:{})", regex::escape(s))),
            BrandPattern::Words(s) => {
                let words: Vec<String> = s.split_whitespace().map(regex::escape).collect();
                if words.is_empty() {
                    return None;
                }
                let body = words.join(r"\s+");
                let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
                let trimmed = s.trim();
                let lead = if is_word(trimmed.chars().next()) { r"\b" } else { "" };
                let tail = if is_word(trimmed.chars().last()) { r"\b" } else { "" };
                Some(format!("(?i:{lead}{body}{tail})"))
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            BrandPattern::Literal(s) | BrandPattern::Words(s) => s.len(),
        }
    }
}

/// Compiled brand denylist.
#[derive(Debug, Clone)]
pub struct BrandRedactor {
    matcher: Option<Regex>,
}

impl BrandRedactor {
    pub fn new(patterns: &[BrandPattern]) -> Result<Self, regex::Error> {
        // Longest first so "samsung galaxy" wins over "samsung" at the same offset.
        let mut sorted: Vec<&BrandPattern> = patterns.iter().collect();
        sorted.sort_by_key(|p| std::cmp::Reverse(p.len()));
        let sources: Vec<String> = sorted.iter().filter_map(|p| p.to_regex_source()).collect();
        let matcher = if sources.is_empty() {
            None
        } else {
            Some(Regex::new(&sources.join("|"))?)
        };
        Ok(BrandRedactor { matcher })
    }

    /// Replaces every match with [`BRAND_PLACEHOLDER`]. Existing placeholders
    /// are left alone, which keeps redaction idempotent.
    pub fn redact_text(&self, text: &str) -> String {
        let Some(re) = &self.matcher else {
            return text.to_string();
        };
        text.split(BRAND_PLACEHOLDER)
            .map(|segment| re.replace_all(segment, NoExpand(BRAND_PLACEHOLDER)).into_owned())
            .collect::<Vec<_>>()
            .join(BRAND_PLACEHOLDER)
    }

    pub fn redact(&self, d: &Dialogue) -> Dialogue {
        let turns = d
            .turns
            .iter()
            .map(|t| t.with_text(self.redact_text(&t.text)))
            .collect();
        Dialogue {
            id: d.id.clone(),
            turns,
            meta: d.meta.clone(),
        }
    }
}

/// Replaces denylisted brand mentions in every utterance. Attitude labels are
/// never touched.
pub fn redact_brands(d: &Dialogue, denylist: &[BrandPattern]) -> Dialogue {
    BrandRedactor::new(denylist)
        .expect("escaped denylist patterns always compile")
        .redact(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ANGER_A2: &str = include_str!("../../../samples/anger_a2.txt");

    fn dialogue(text: &str) -> Dialogue {
        let t = parse_transcript(text, &ParseOptions::default()).unwrap();
        Dialogue::from_transcript("d1", t, DialogueMeta::new(Emotion::Anger, CefrLevel::A2, false))
    }

    #[test]
    fn parses_sample_client_line() {
        let t = parse_transcript(
            "Client (angry): Hello, I'm calling about my phone, and I'm not happy at all!",
            &ParseOptions::default(),
        )
        .unwrap();
        let turn = &t.turns()[0];
        assert_eq!(turn.role(), Role::Client);
        assert_eq!(turn.attitude(), "angry");
        assert_eq!(
            turn.text(),
            "Hello, I'm calling about my phone, and I'm not happy at all!"
        );
    }

    #[test]
    fn parses_agent_line_and_lowercases_attitude() {
        let t = parse_transcript(
            "Client (Angry): Hi!\nAgent (CALM): I'm sorry to hear that. Can you tell me what seems to be the problem?",
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(t.turns()[0].attitude(), "angry");
        assert_eq!(t.turns()[1].role(), Role::Agent);
        assert_eq!(t.turns()[1].attitude(), "calm");
        assert_eq!(t.turns()[1].index(), 1);
    }

    #[test]
    fn empty_input_is_empty_dialogue() {
        assert_eq!(
            parse_transcript("", &ParseOptions::default()),
            Err(TranscriptError::EmptyDialogue)
        );
        assert_eq!(
            parse_transcript("\n  \n", &ParseOptions::default()),
            Err(TranscriptError::EmptyDialogue)
        );
    }

    #[test]
    fn missing_attitude_is_malformed() {
        let err = parse_transcript("Client: no label here", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, TranscriptError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn errors_carry_physical_line_numbers() {
        let input = "Client (angry): Hi\n\nAgent (calm) no colon";
        let err = parse_transcript(input, &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, TranscriptError::MalformedLine { line: 3, .. }));

        let err = parse_transcript("Client (angry): Hi\nBot (calm): hello", &ParseOptions::default()).unwrap_err();
        assert_eq!(
            err,
            TranscriptError::UnknownSpeaker {
                line: 2,
                speaker: "Bot".into()
            }
        );
    }

    #[test]
    fn bad_attitude_and_empty_text_are_malformed() {
        for bad in ["Client (): hi", "Client (angry!): hi", "Client (angry):   ", "Client (an(gry)): x"] {
            let err = parse_transcript(bad, &ParseOptions::default()).unwrap_err();
            assert!(matches!(err, TranscriptError::MalformedLine { line: 1, .. }), "{bad}: {err:?}");
        }
    }

    #[test]
    fn opening_role_is_enforced_unless_disabled() {
        let input = "Agent (calm): Hello\nClient (angry): Hi";
        assert!(matches!(
            parse_transcript(input, &ParseOptions::default()),
            Err(TranscriptError::UnexpectedOpeningRole { .. })
        ));
        let opts = ParseOptions {
            opening_role: None,
            ..ParseOptions::default()
        };
        assert_eq!(parse_transcript(input, &opts).unwrap().turns().len(), 2);
    }

    #[test]
    fn customer_alias_maps_to_client() {
        let input = "Customer (angry): Hi\nAgent (calm): Hello";
        assert!(parse_transcript(input, &ParseOptions::default()).is_err());
        let t = parse_transcript(input, &ParseOptions::with_customer_alias()).unwrap();
        assert_eq!(t.turns()[0].role(), Role::Client);
        // Serialization always writes the canonical role name.
        assert!(serialize_transcript(t.turns()).starts_with("Client (angry): Hi\n"));
    }

    #[test]
    fn crlf_and_bom_are_tolerated() {
        let t = parse_transcript("\u{feff}Client (angry): Hi\r\nAgent (calm): Yes\r\n", &ParseOptions::default()).unwrap();
        assert_eq!(t.turns()[1].text(), "Yes");
    }

    #[test]
    fn serializes_single_turn() {
        let turn = Turn::new(0, Role::Client, "angry", "Hi!").unwrap();
        assert_eq!(serialize_transcript(&[turn]), "Client (angry): Hi!\n");
    }

    #[test]
    fn sample_dialogue_round_trips_byte_for_byte() {
        let d = dialogue(ANGER_A2);
        assert_eq!(d.turns().len(), 12);
        assert_eq!(d.to_transcript(), ANGER_A2);
        let again = parse_transcript(&d.to_transcript(), &ParseOptions::default()).unwrap();
        assert_eq!(again.turns(), d.turns());
    }

    #[test]
    fn chain_mirrors_turns() {
        let d = dialogue(ANGER_A2);
        let chain = extract_attitude_chain(&d);
        assert_eq!(chain.len(), 12);
        assert_eq!(chain.entries[0], ChainLink::new(Role::Client, "angry"));
        assert_eq!(chain.entries[10], ChainLink::new(Role::Client, "grudgingly"));
        assert_eq!(chain.entries[11], ChainLink::new(Role::Agent, "apologetic"));
        assert!(chain.to_string().starts_with("(Client, angry) → (Agent, calm)"));

        let single = dialogue("Client (angry): Hi!");
        assert_eq!(extract_attitude_chain(&single).len(), 1);
    }

    #[test]
    fn chain_does_not_smooth_repeated_roles() {
        let d = dialogue("Client (angry): a\nClient (angry): b\nAgent (calm): c");
        let roles: Vec<Role> = extract_attitude_chain(&d).entries.iter().map(|l| l.role).collect();
        assert_eq!(roles, vec![Role::Client, Role::Client, Role::Agent]);
    }

    #[test]
    fn json_interchange_shape() {
        let d = dialogue("Client (angry): Hi!\nAgent (calm): Hello.");
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["id"], "d1");
        assert_eq!(v["meta"]["target_emotion"], "anger");
        assert_eq!(v["meta"]["cefr"], "A2");
        assert_eq!(v["meta"]["implicit"], false);
        assert_eq!(v["turns"][1], serde_json::json!({"role": "Agent", "attitude": "calm", "text": "Hello."}));
        let back: Dialogue = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn json_with_invalid_turn_is_rejected() {
        let d = dialogue("Client (angry): Hi!");
        let mut v = serde_json::to_value(&d).unwrap();
        v["turns"][0]["attitude"] = "(angry)".into();
        assert!(serde_json::from_value::<Dialogue>(v.clone()).is_err());
        v["turns"] = serde_json::json!([]);
        assert!(serde_json::from_value::<Dialogue>(v).is_err());
    }

    #[test]
    fn redacts_literal_brand() {
        let d = dialogue("Client (agitated): It's a Acme X200.");
        let r = redact_brands(&d, &[BrandPattern::Words("Acme X200".into())]);
        assert_eq!(r.turns()[0].text(), "It's a Brand Model.");
        assert_eq!(r.turns()[0].attitude(), "agitated");
    }

    #[test]
    fn empty_denylist_is_identity() {
        let d = dialogue(ANGER_A2);
        assert_eq!(redact_brands(&d, &[]), d);
    }

    #[test]
    fn redacts_every_occurrence() {
        let d = dialogue("Client (agitated): my acme  x200 broke, the ACME X200 is bad, AcmeX200 is fine");
        let r = redact_brands(&d, &[BrandPattern::Words("Acme X200".into())]);
        let text = r.turns()[0].text();
        // Brute-force oracle: count case-insensitive whitespace-normalized hits.
        let normalized = d.turns()[0].text().to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
        let expected_hits = normalized.matches("acme x200").count();
        assert_eq!(expected_hits, 2);
        assert_eq!(text.matches(BRAND_PLACEHOLDER).count(), expected_hits);
        assert_eq!(text, "my Brand Model broke, the Brand Model is bad, AcmeX200 is fine");
    }

    #[test]
    fn literal_patterns_are_case_sensitive() {
        let d = dialogue("Client (agitated): ZX-9 and zx-9");
        let r = redact_brands(&d, &[BrandPattern::Literal("ZX-9".into())]);
        assert_eq!(r.turns()[0].text(), "Brand Model and zx-9");
    }

    #[test]
    fn longer_pattern_wins() {
        let d = dialogue("Client (agitated): a Samsung Galaxy phone");
        let r = redact_brands(
            &d,
            &[BrandPattern::Words("samsung".into()), BrandPattern::Words("samsung galaxy".into())],
        );
        assert_eq!(r.turns()[0].text(), "a Brand Model phone");
    }

    fn arb_turn() -> impl Strategy<Value = (bool, String, String)> {
        (
            any::<bool>(),
            "[a-zA-Z][a-zA-Z -]{0,12}",
            "[a-zA-Z0-9][ -~]{0,40}",
        )
    }

    proptest! {
        #[test]
        fn round_trip_preserves_turns(raw in proptest::collection::vec(arb_turn(), 1..15)) {
            let turns: Vec<Turn> = raw
                .iter()
                .enumerate()
                .map(|(i, (client, att, text))| {
                    let role = if i == 0 || *client { Role::Client } else { Role::Agent };
                    Turn::new(i, role, att, text).unwrap()
                })
                .collect();
            let text = serialize_transcript(&turns);
            let parsed = parse_transcript(&text, &ParseOptions::default()).unwrap();
            prop_assert_eq!(parsed.turns(), &turns[..]);
            prop_assert_eq!(serialize_transcript(parsed.turns()), text);
        }

        #[test]
        fn redaction_is_idempotent(
            text in "[a-cA-C BrandMol.]{1,40}",
            pats in proptest::collection::vec(("[a-cA-C]{1,3}( [a-c]{1,2})?", any::<bool>()), 0..4),
        ) {
            let text = text.trim().to_string();
            prop_assume!(!text.is_empty());
            let d = dialogue(&format!("Client (x): {text}"));
            let pats: Vec<BrandPattern> = pats
                .into_iter()
                .map(|(p, lit)| if lit { BrandPattern::Literal(p) } else { BrandPattern::Words(p) })
                .collect();
            let once = redact_brands(&d, &pats);
            let twice = redact_brands(&once, &pats);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn every_line_yields_turn_or_positioned_error(lines in proptest::collection::vec("[ -~]{0,30}", 1..8)) {
            let input = lines.join("\n");
            let opts = ParseOptions { opening_role: None, ..ParseOptions::default() };
            match parse_transcript(&input, &opts) {
                Ok(t) => {
                    let non_blank = lines.iter().filter(|l| !l.trim().is_empty()).count();
                    prop_assert_eq!(t.turns().len(), non_blank);
                }
                Err(TranscriptError::MalformedLine { line, .. }) | Err(TranscriptError::UnknownSpeaker { line, .. }) => {
                    prop_assert!(line >= 1 && line <= lines.len());
                    prop_assert!(!lines[line - 1].trim().is_empty());
                }
                Err(TranscriptError::EmptyDialogue) => {
                    prop_assert!(lines.iter().all(|l| l.trim().is_empty()));
                }
                Err(other) => prop_assert!(false, "unexpected error {other:?}"),
            }
        }
    }
}
