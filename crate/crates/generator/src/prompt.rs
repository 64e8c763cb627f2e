use std::fmt::Write;

use emodial_core::lexicons::WordList;
use emodial_core::{CefrLevel, Emotion};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SCENARIO: &str = "customer service of a hypothetical phone company";
pub const DEFAULT_TURNS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub target_emotion: Emotion,
    pub cefr: CefrLevel,
    pub implicit: bool,
    #[serde(default = "default_scenario")]
    pub scenario: String,
    /// Turns per speaker.
    #[serde(default = "default_turns")]
    pub target_turns: usize,
    #[serde(default = "default_true")]
    pub require_attitude_labels: bool,
}

fn default_scenario() -> String {
    DEFAULT_SCENARIO.to_string()
}

fn default_turns() -> usize {
    DEFAULT_TURNS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("target_turns must be at least 2, got {0}")]
    TooFewTurns(usize),
    #[error("scenario must not be empty")]
    EmptyScenario,
}

impl PromptSpec {
    pub fn new(target_emotion: Emotion, cefr: CefrLevel, implicit: bool) -> Self {
        PromptSpec {
            target_emotion,
            cefr,
            implicit,
            scenario: default_scenario(),
            target_turns: DEFAULT_TURNS,
            require_attitude_labels: true,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.target_turns < 2 {
            return Err(SpecError::TooFewTurns(self.target_turns));
        }
        if self.scenario.trim().is_empty() {
            return Err(SpecError::EmptyScenario);
        }
        Ok(())
    }
}

/// Every emotion × level × {explicit, implicit} cell, emotion-major.
pub fn grid(scenario: &str) -> Vec<PromptSpec> {
    let mut out = Vec::with_capacity(36);
    for e in Emotion::ALL {
        for c in CefrLevel::ALL {
            for implicit in [false, true] {
                let mut spec = PromptSpec::new(e, c, implicit);
                spec.scenario = scenario.to_string();
                out.push(spec);
            }
        }
    }
    out
}

fn level_description(cefr: CefrLevel) -> &'static str {
    match cefr {
        CefrLevel::A2 => "elementary: short sentences, everyday words, simple grammar",
        CefrLevel::B2 => "upper intermediate: clear, detailed sentences with some complex structures",
        CefrLevel::C2 => "proficient: sophisticated vocabulary, long and nuanced sentences",
    }
}

/// The user message sent to the chat model. `denylist` is listed verbatim
/// when the spec is implicit and ignored otherwise.
pub fn build_prompt(spec: &PromptSpec, denylist: &WordList) -> String {
    let mut p = String::new();
    let e = spec.target_emotion;
    let _ = writeln!(
        p,
        "Write a short, interactive dialogue set in the {}, between a Client and an Agent.",
        spec.scenario
    );
    let _ = writeln!(
        p,
        "The dialogue has about {n} turns for each speaker ({total} lines), starting with the Client.",
        n = spec.target_turns,
        total = spec.target_turns * 2
    );
    let _ = writeln!(p, "The Client expresses the emotion {e} throughout the conversation.");
    let _ = writeln!(
        p,
        "The Client writes at CEFR level {} ({}).",
        spec.cefr,
        level_description(spec.cefr)
    );
    if spec.require_attitude_labels {
        let _ = writeln!(p, "Label each turn with the speaker's attitude in parentheses.");
    }
    let _ = writeln!(p, "Use exactly one line per turn, in this format:");
    let _ = writeln!(p, "Client (attitude): ...");
    let _ = writeln!(p, "Agent (attitude): ...");
    let _ = writeln!(p, "Refer to any phone as \"Brand Model\" instead of a real brand.");
    if spec.implicit {
        let words: Vec<&str> = denylist.iter().collect();
        let _ = writeln!(
            p,
            "The Client must convey {e} only implicitly. In the Client's lines, do not use these words: {}.",
            words.join(", ")
        );
    }
    p.push_str("Output only the dialogue lines.\n");
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_prompt_mentions_emotion_and_level() {
        let p = build_prompt(&PromptSpec::new(Emotion::Anger, CefrLevel::A2, false), &WordList::from_words("x", ["angry"]));
        assert!(p.contains("anger"));
        assert!(p.contains("A2"));
        assert!(p.contains("Client (attitude): ..."));
        assert!(p.contains("attitude in parentheses"));
        assert!(p.contains(DEFAULT_SCENARIO));
        assert!(!p.contains("do not use"));
    }

    #[test]
    fn implicit_prompt_lists_denylist() {
        let deny = WordList::from_words("anger", ["angry", "furious"]);
        let spec = PromptSpec::new(Emotion::Anger, CefrLevel::A2, true);
        let p = build_prompt(&spec, &deny);
        assert!(p.contains("do not use"));
        assert!(p.contains("angry") && p.contains("furious"));
        assert_eq!(p, build_prompt(&spec.clone(), &deny));
    }

    #[test]
    fn grid_order_and_size() {
        let g = grid(DEFAULT_SCENARIO);
        assert_eq!(g.len(), 36);
        assert_eq!((g[0].target_emotion, g[0].cefr, g[0].implicit), (Emotion::Joy, CefrLevel::A2, false));
        assert!(g[1].implicit);
        assert_eq!(g[35].target_emotion, Emotion::Disgust);
    }

    #[test]
    fn spec_validation() {
        let mut s = PromptSpec::new(Emotion::Fear, CefrLevel::C2, false);
        assert!(s.validate().is_ok());
        s.target_turns = 1;
        assert_eq!(s.validate(), Err(SpecError::TooFewTurns(1)));
        let parsed: PromptSpec = serde_json::from_str(r#"{"target_emotion":"fear","cefr":"B2","implicit":true}"#).unwrap();
        assert_eq!(parsed.scenario, DEFAULT_SCENARIO);
        assert_eq!(parsed.target_turns, 5);
    }
}
