//! Quality gates for generated dialogues.
//!
//! Automatic checks pre-fill emotional coherence, language-complexity
//! coherence and implicit-emotion violations. A human reviewer then grades
//! the quality of interaction (S, A or F), which fixes the disposition for good.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::lexicons::EmotionLexicon;
use crate::model::CefrLevel;
use crate::textmetrics::{DegenerateText, TextAnalyzer};
use crate::transcript::{Dialogue, Role};

/// Quality-of-interaction grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qoi {
    /// Sufficient: natural, conveys the emotion and level.
    S,
    /// Adequate: less natural but acceptable.
    A,
    /// Fail: excluded from the corpus.
    F,
}

impl Qoi {
    pub const ALL: [Qoi; 3] = [Qoi::S, Qoi::A, Qoi::F];
}

impl fmt::Display for Qoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qoi::S => "S",
            Qoi::A => "A",
            Qoi::F => "F",
        })
    }
}

impl FromStr for Qoi {
    type Err = crate::model::UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "S" | "s" => Ok(Qoi::S),
            "A" | "a" => Ok(Qoi::A),
            "F" | "f" => Ok(Qoi::F),
            _ => Err(crate::model::UnknownLabel {
                kind: "QoI grade",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Pending,
    Accepted,
    Rejected,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Pending => "pending",
            Disposition::Accepted => "accepted",
            Disposition::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Disposition {
    type Err = crate::model::UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pending" => Ok(Disposition::Pending),
            "accepted" => Ok(Disposition::Accepted),
            "rejected" => Ok(Disposition::Rejected),
            _ => Err(crate::model::UnknownLabel {
                kind: "disposition",
                value: s.to_string(),
            }),
        }
    }
}

/// A client utterance that names the target emotion in an implicit dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IedViolation {
    pub turn: usize,
    pub word: String,
}

/// FKGL interval for one CEFR level. `None` bounds are open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkglBand {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Excludes `lo` itself, so adjacent bands can share a cut point.
    #[serde(default)]
    pub lo_exclusive: bool,
}

impl FkglBand {
    pub fn contains(&self, fkgl: f64) -> bool {
        let above = match self.lo {
            None => true,
            Some(lo) if self.lo_exclusive => fkgl > lo,
            Some(lo) => fkgl >= lo,
        };
        above && self.hi.is_none_or(|hi| fkgl <= hi)
    }
}

impl fmt::Display for FkglBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            None => f.write_str("(-inf")?,
            Some(lo) if self.lo_exclusive => write!(f, "({lo}")?,
            Some(lo) => write!(f, "[{lo}")?,
        }
        match self.hi {
            None => f.write_str(", inf)"),
            Some(hi) => write!(f, ", {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid CEFR band table: {0}")]
pub struct BandTableError(pub String);

/// Expected FKGL range per CEFR level. These are heuristics reported next
/// to the raw FKGL, not ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandTableWire", into = "BandTableWire")]
pub struct CefrBandTable {
    a2: FkglBand,
    b2: FkglBand,
    c2: FkglBand,
}

#[derive(Serialize, Deserialize)]
struct BandTableWire {
    #[serde(rename = "A2")]
    a2: FkglBand,
    #[serde(rename = "B2")]
    b2: FkglBand,
    #[serde(rename = "C2")]
    c2: FkglBand,
}

impl TryFrom<BandTableWire> for CefrBandTable {
    type Error = BandTableError;

    fn try_from(w: BandTableWire) -> Result<Self, Self::Error> {
        CefrBandTable::new(w.a2, w.b2, w.c2)
    }
}

impl From<CefrBandTable> for BandTableWire {
    fn from(t: CefrBandTable) -> Self {
        BandTableWire {
            a2: t.a2,
            b2: t.b2,
            c2: t.c2,
        }
    }
}

impl Default for CefrBandTable {
    /// A2 ≤ 5.0 < B2 ≤ 9.0 < C2.
    fn default() -> Self {
        CefrBandTable {
            a2: FkglBand {
                lo: None,
                hi: Some(5.0),
                lo_exclusive: false,
            },
            b2: FkglBand {
                lo: Some(5.0),
                hi: Some(9.0),
                lo_exclusive: true,
            },
            c2: FkglBand {
                lo: Some(9.0),
                hi: None,
                lo_exclusive: true,
            },
        }
    }
}

impl CefrBandTable {
    /// Bands must be ordered and must not overlap.
    pub fn new(a2: FkglBand, b2: FkglBand, c2: FkglBand) -> Result<Self, BandTableError> {
        for (name, b) in [("A2", &a2), ("B2", &b2), ("C2", &c2)] {
            if let (Some(lo), Some(hi)) = (b.lo, b.hi) {
                if lo > hi || !lo.is_finite() || !hi.is_finite() {
                    return Err(BandTableError(format!("{name} has lo > hi or a non-finite bound")));
                }
            }
        }
        let disjoint = |lower: &FkglBand, upper: &FkglBand| match (lower.hi, upper.lo) {
            (Some(hi), Some(lo)) => hi < lo || (hi == lo && upper.lo_exclusive),
            _ => false,
        };
        if !disjoint(&a2, &b2) {
            return Err(BandTableError("A2 must end before B2 starts".into()));
        }
        if !disjoint(&b2, &c2) {
            return Err(BandTableError("B2 must end before C2 starts".into()));
        }
        Ok(CefrBandTable { a2, b2, c2 })
    }

    pub fn band(&self, level: CefrLevel) -> FkglBand {
        match level {
            CefrLevel::A2 => self.a2,
            CefrLevel::B2 => self.b2,
            CefrLevel::C2 => self.c2,
        }
    }
}

/// Where emotional coherence looks for the target emotion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceMode {
    #[default]
    FirstClientTurn,
    AnyClientTurn,
}

/// Auto-check evidence shown to the reviewer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AutoEvidence {
    /// Attitude label (or word of it) that matched the target emotion.
    pub emotion_match: Option<String>,
    pub fkgl: Option<f64>,
    pub band: Option<FkglBand>,
    /// Set when FKGL could not be computed.
    pub complexity_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurationError {
    #[error("dialogue `{0}` has already been reviewed")]
    AlreadyDisposed(String),
    #[error("gate record violates invariant: {0}")]
    Invariant(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub dialogue_id: String,
    pub emotional_coherence: Option<bool>,
    pub complexity_coherence: Option<bool>,
    #[serde(default)]
    pub ied_violations: Vec<IedViolation>,
    pub qoi: Option<Qoi>,
    pub auto_checked_at: Option<DateTime<Utc>>,
    pub reviewed_at: Option<DateTime<Utc>>,
    pub reviewer: Option<String>,
    pub disposition: Disposition,
    #[serde(default)]
    pub evidence: AutoEvidence,
}

impl GateRecord {
    pub fn pending(dialogue_id: impl Into<String>) -> Self {
        GateRecord {
            dialogue_id: dialogue_id.into(),
            emotional_coherence: None,
            complexity_coherence: None,
            ied_violations: Vec::new(),
            qoi: None,
            auto_checked_at: None,
            reviewed_at: None,
            reviewer: None,
            disposition: Disposition::Pending,
            evidence: AutoEvidence::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        if self.qoi.is_some() != self.reviewed_at.is_some() {
            return Err(CurationError::Invariant("reviewed_at must be set exactly when qoi is"));
        }
        if self.qoi.is_some() == (self.disposition == Disposition::Pending) {
            return Err(CurationError::Invariant("only reviewed records leave pending"));
        }
        if let Some(qoi) = self.qoi {
            let expected = disposition_for(self.emotional_coherence, self.complexity_coherence, qoi);
            if expected != self.disposition {
                return Err(CurationError::Invariant("disposition disagrees with coherence and qoi"));
            }
        }
        Ok(())
    }

    /// Legal amendment: only a pending record may change, and the result must be valid.
    pub fn check_transition(&self, next: &GateRecord) -> Result<(), CurationError> {
        if next.dialogue_id != self.dialogue_id {
            return Err(CurationError::Invariant("gate amendment targets a different dialogue"));
        }
        if self.disposition != Disposition::Pending {
            return Err(CurationError::AlreadyDisposed(self.dialogue_id.clone()));
        }
        next.validate()
    }
}

/// Accepted only when both coherence checks hold and QoI is S or A.
/// An unset coherence value counts as not coherent.
pub fn disposition_for(emotional: Option<bool>, complexity: Option<bool>, qoi: Qoi) -> Disposition {
    match qoi {
        Qoi::F => Disposition::Rejected,
        Qoi::S | Qoi::A if emotional == Some(true) && complexity == Some(true) => Disposition::Accepted,
        _ => Disposition::Rejected,
    }
}

/// A reviewer's verdict, optionally overriding the automatic booleans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub qoi: Qoi,
    pub reviewer: String,
    #[serde(default)]
    pub emotional_coherence: Option<bool>,
    #[serde(default)]
    pub complexity_coherence: Option<bool>,
}

impl ReviewDecision {
    pub fn new(qoi: Qoi, reviewer: impl Into<String>) -> Self {
        ReviewDecision {
            qoi,
            reviewer: reviewer.into(),
            emotional_coherence: None,
            complexity_coherence: None,
        }
    }
}

pub fn record_review(rec: &GateRecord, decision: &ReviewDecision, now: DateTime<Utc>) -> Result<GateRecord, CurationError> {
    if rec.disposition != Disposition::Pending {
        return Err(CurationError::AlreadyDisposed(rec.dialogue_id.clone()));
    }
    let mut next = rec.clone();
    if let Some(v) = decision.emotional_coherence {
        next.emotional_coherence = Some(v);
    }
    if let Some(v) = decision.complexity_coherence {
        next.complexity_coherence = Some(v);
    }
    next.qoi = Some(decision.qoi);
    next.reviewer = Some(decision.reviewer.clone());
    next.reviewed_at = Some(now);
    next.disposition = disposition_for(next.emotional_coherence, next.complexity_coherence, decision.qoi);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionalCoherence {
    pub coherent: bool,
    pub evidence: Option<String>,
}

fn label_matches(label: &str, target: &str, lexicon: &crate::lexicons::WordList) -> Option<String> {
    if label == target || lexicon.contains(label) {
        return Some(label.to_string());
    }
    label
        .split([' ', '-'])
        .find(|w| *w == target || lexicon.contains(w))
        .map(str::to_string)
}

/// True when the client's attitude label names the target emotion or a word
/// from its lexicon list.
pub fn check_emotional_coherence(d: &Dialogue, lexicon: &EmotionLexicon, mode: CoherenceMode) -> EmotionalCoherence {
    let target = d.meta().target_emotion;
    let words = lexicon.words(target);
    let mut client = d.turns_by(Role::Client);
    let evidence = match mode {
        CoherenceMode::FirstClientTurn => client
            .next()
            .and_then(|t| label_matches(t.attitude(), target.as_str(), words)),
        CoherenceMode::AnyClientTurn => client.find_map(|t| label_matches(t.attitude(), target.as_str(), words)),
    };
    EmotionalCoherence {
        coherent: evidence.is_some(),
        evidence,
    }
}

/// Whole-word, case-insensitive hits of the target emotion's words in
/// client utterances. Attitude labels are exempt.
pub fn check_ied(d: &Dialogue, lexicon: &EmotionLexicon) -> Vec<IedViolation> {
    let words = lexicon.words(d.meta().target_emotion);
    d.turns_by(Role::Client)
        .flat_map(|t| {
            crate::textmetrics::tokenize_words(t.text())
                .into_iter()
                .filter(|w| words.contains(w))
                .map(move |w| IedViolation {
                    turn: t.index(),
                    word: w.to_lowercase(),
                })
        })
        .collect()
}

/// Joins utterances with single spaces, closing each with a period if it
/// lacks a terminal mark so sentence counts survive concatenation.
pub fn join_utterances<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for t in texts {
        let t = t.trim();
        if t.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(t);
        let closed = t
            .trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}'])
            .ends_with(['.', '!', '?']);
        if !closed {
            out.push('.');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityCoherence {
    pub coherent: bool,
    pub fkgl: f64,
    pub band: FkglBand,
}

pub fn check_complexity_coherence(
    d: &Dialogue,
    bands: &CefrBandTable,
    analyzer: &TextAnalyzer,
) -> Result<ComplexityCoherence, DegenerateText> {
    let text = join_utterances(d.turns_by(Role::Client).map(|t| t.text()));
    let fkgl = analyzer.fkgl(&text)?;
    let band = bands.band(d.meta().cefr);
    Ok(ComplexityCoherence {
        coherent: band.contains(fkgl),
        fkgl,
        band,
    })
}

/// Everything the automatic gates need; shared read-only.
#[derive(Debug, Clone)]
pub struct GateContext {
    pub lexicon: EmotionLexicon,
    pub bands: CefrBandTable,
    pub analyzer: TextAnalyzer,
    pub coherence_mode: CoherenceMode,
}

impl Default for GateContext {
    fn default() -> Self {
        GateContext {
            lexicon: EmotionLexicon::bundled(),
            bands: CefrBandTable::default(),
            analyzer: TextAnalyzer::default(),
            coherence_mode: CoherenceMode::default(),
        }
    }
}

/// Runs every automatic gate and returns a pending record with evidence.
pub fn auto_check(d: &Dialogue, ctx: &GateContext, now: DateTime<Utc>) -> GateRecord {
    let mut rec = GateRecord::pending(d.id());
    let emotional = check_emotional_coherence(d, &ctx.lexicon, ctx.coherence_mode);
    rec.emotional_coherence = Some(emotional.coherent);
    rec.evidence.emotion_match = emotional.evidence;
    match check_complexity_coherence(d, &ctx.bands, &ctx.analyzer) {
        Ok(c) => {
            rec.complexity_coherence = Some(c.coherent);
            rec.evidence.fkgl = Some(c.fkgl);
            rec.evidence.band = Some(c.band);
        }
        Err(e) => {
            rec.complexity_coherence = Some(false);
            rec.evidence.band = Some(ctx.bands.band(d.meta().cefr));
            rec.evidence.complexity_error = Some(e.to_string());
        }
    }
    if d.meta().implicit {
        rec.ied_violations = check_ied(d, &ctx.lexicon);
    }
    rec.auto_checked_at = Some(now);
    rec
}

/// Writes `dialogue_id,emotion,cefr,implicit,emotional_coherence,complexity_coherence,qoi,disposition`.
pub fn write_gate_csv<'a, W, I>(out: W, rows: I) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a Dialogue, &'a GateRecord)>,
{
    let opt_bool = |b: Option<bool>| b.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dialogue_id",
        "emotion",
        "cefr",
        "implicit",
        "emotional_coherence",
        "complexity_coherence",
        "qoi",
        "disposition",
    ])?;
    for (d, g) in rows {
        w.write_record([
            d.id().to_string(),
            d.meta().target_emotion.to_string(),
            d.meta().cefr.to_string(),
            d.meta().implicit.to_string(),
            opt_bool(g.emotional_coherence),
            opt_bool(g.complexity_coherence),
            g.qoi.map(|q| q.to_string()).unwrap_or_default(),
            g.disposition.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
