//! Randomized turn aggregation under a word cap, repeated per stratum.
//!
//! Turns of one role from accepted dialogues at one CEFR level are drawn
//! without replacement and appended until the next draw would overflow the
//! cap. The merged text is scored; repeated runs give mean and sample
//! standard deviation per metric.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curation::{join_utterances, Disposition};
use crate::model::CefrLevel;
use crate::store::CorpusRecord;
use crate::textmetrics::{MetricReport, TextAnalyzer};
use crate::transcript::Role;

pub const DEFAULT_CAP: usize = 1000;
pub const DEFAULT_RUNS: usize = 10;

/// Accepted turns of one role at one CEFR level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TurnStratum {
    pub cefr: CefrLevel,
    pub role: Role,
}

impl TurnStratum {
    /// The six (level, role) strata.
    pub fn all() -> Vec<TurnStratum> {
        CefrLevel::ALL
            .iter()
            .flat_map(|&cefr| [Role::Client, Role::Agent].map(|role| TurnStratum { cefr, role }))
            .collect()
    }
}

impl std::str::FromStr for TurnStratum {
    type Err = crate::model::UnknownLabel;

    /// Parses `A2/client` or `c2:agent`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || crate::model::UnknownLabel {
            kind: "stratum",
            value: s.to_string(),
        };
        let (cefr, role) = s.split_once(['/', ':']).ok_or_else(bad)?;
        Ok(TurnStratum {
            cefr: cefr.parse().map_err(|_| bad())?,
            role: role.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Explicit,
    Implicit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Explicit => "explicit",
            Mode::Implicit => "implicit",
        }
    }
}

/// Either kind of slice, for labels and errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stratum {
    Turns(TurnStratum),
    Mode { cefr: CefrLevel, mode: Mode },
}

impl From<TurnStratum> for Stratum {
    fn from(s: TurnStratum) -> Self {
        Stratum::Turns(s)
    }
}

impl fmt::Display for TurnStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.cefr, self.role.as_str().to_lowercase())
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::Turns(t) => t.fmt(f),
            Stratum::Mode { cefr, mode } => write!(f, "{cefr}/{}", mode.as_str()),
        }
    }
}

/// What to do with a draw that would overflow the cap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Exclude it and stop drawing.
    #[default]
    StopAtOverflow,
    /// Exclude it and keep drawing; for sensitivity analysis only.
    SkipAndContinue,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TurnRef {
    pub dialogue_id: String,
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub stratum: TurnStratum,
    pub seed: u64,
    pub cap: usize,
    pub stop_rule: StopRule,
    pub included: Vec<TurnRef>,
    pub word_count: usize,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplerError {
    #[error("no accepted material in stratum {0}")]
    EmptyStratum(Stratum),
    #[error("first drawn turn in {stratum} has {words} words, above the cap of {cap}")]
    CapTooSmall { stratum: Stratum, words: usize, cap: usize },
    #[error("sampled text in {0} has no scorable words")]
    Degenerate(Stratum),
    #[error("at least 2 runs per stratum are needed, got {0}")]
    TooFewRuns(usize),
}

struct Candidate<'a> {
    at: TurnRef,
    text: &'a str,
}

fn candidates<'a>(corpus: &'a [CorpusRecord], stratum: TurnStratum) -> Vec<Candidate<'a>> {
    let mut out: Vec<Candidate<'a>> = corpus
        .iter()
        .filter(|r| r.gate.disposition == Disposition::Accepted && r.dialogue.meta().cefr == stratum.cefr)
        .flat_map(|r| {
            r.dialogue.turns_by(stratum.role).map(move |t| Candidate {
                at: TurnRef {
                    dialogue_id: r.id().to_string(),
                    turn: t.index(),
                },
                text: t.text(),
            })
        })
        .collect();
    out.sort_by(|a, b| a.at.cmp(&b.at));
    out
}

/// Every candidate turn of the stratum in the order `seed` draws them.
pub fn draw_order(corpus: &[CorpusRecord], stratum: TurnStratum, seed: u64) -> Vec<TurnRef> {
    let mut c = candidates(corpus, stratum);
    c.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    c.into_iter().map(|c| c.at).collect()
}

/// Builds one capped sample and scores it.
pub fn build_sample(
    corpus: &[CorpusRecord],
    stratum: TurnStratum,
    seed: u64,
    cap: usize,
    rule: StopRule,
    analyzer: &TextAnalyzer,
) -> Result<SampleRun, SamplerError> {
    let mut pool = candidates(corpus, stratum);
    if pool.is_empty() {
        return Err(SamplerError::EmptyStratum(stratum.into()));
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut included = Vec::new();
    let mut texts = Vec::new();
    let mut total = 0usize;
    let mut first_overflow = None;
    for c in &pool {
        let words = analyzer.word_count(c.text);
        if total + words > cap {
            first_overflow.get_or_insert(words);
            match rule {
                StopRule::StopAtOverflow => break,
                StopRule::SkipAndContinue => continue,
            }
        }
        total += words;
        included.push(c.at.clone());
        texts.push(c.text);
    }
    if included.is_empty() {
        return Err(SamplerError::CapTooSmall {
            stratum: stratum.into(),
            words: first_overflow.unwrap_or(0),
            cap,
        });
    }
    let report = analyzer
        .score(&join_utterances(texts))
        .map_err(|_| SamplerError::Degenerate(stratum.into()))?;
    Ok(SampleRun {
        stratum,
        seed,
        cap,
        stop_rule: rule,
        included,
        word_count: total,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub stratum: Stratum,
    pub metric: String,
    pub run_count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub stddev: f64,
}

/// Mean and sample standard deviation; needs at least two values.
pub fn mean_stddev(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 {
        return None;
    }
    // Welford's update keeps identical inputs at exactly zero variance.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    Some((mean, (m2 / (values.len() - 1) as f64).sqrt()))
}

/// Metric values of a report by name: ari, fre, fkgl, ndc, then optional scores.
pub fn report_metrics(r: &MetricReport) -> Vec<(String, f64)> {
    let mut out = vec![
        ("ari".to_string(), r.ari),
        ("fre".to_string(), r.fre),
        ("fkgl".to_string(), r.fkgl),
        ("ndc".to_string(), r.ndc),
    ];
    out.extend(r.optional_scores.iter().map(|(k, v)| (k.clone(), *v)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub runs_per_stratum: usize,
    pub base_seed: u64,
    pub cap: usize,
    pub stop_rule: StopRule,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs_per_stratum: DEFAULT_RUNS,
            base_seed: 0,
            cap: DEFAULT_CAP,
            stop_rule: StopRule::StopAtOverflow,
        }
    }
}

impl ExperimentConfig {
    /// Run seeds, drawn from a ChaCha stream keyed by the base seed. Every
    /// stratum uses the same list.
    pub fn run_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        (0..self.runs_per_stratum).map(|_| rng.next_u64()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub stats: Vec<AggregateStats>,
    pub runs: Vec<SampleRun>,
    /// Strata that could not be sampled; the others still ran.
    pub errors: Vec<SamplerError>,
}

pub fn run_experiment(
    corpus: &[CorpusRecord],
    strata: &[TurnStratum],
    config: &ExperimentConfig,
    analyzer: &TextAnalyzer,
) -> Result<ExperimentOutcome, SamplerError> {
    if config.runs_per_stratum < 2 {
        return Err(SamplerError::TooFewRuns(config.runs_per_stratum));
    }
    let seeds = config.run_seeds();
    let mut out = ExperimentOutcome::default();
    'strata: for &stratum in strata {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in &seeds {
            match build_sample(corpus, stratum, seed, config.cap, config.stop_rule, analyzer) {
                Ok(run) => runs.push(run),
                Err(e) => {
                    out.errors.push(e);
                    continue 'strata;
                }
            }
        }
        runs.sort_by_key(|r| r.seed);
        let mut by_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut order = Vec::new();
        for run in &runs {
            for (name, v) in report_metrics(&run.report) {
                by_metric
                    .entry(name.clone())
                    .or_insert_with(|| {
                        order.push(name);
                        Vec::new()
                    })
                    .push(v);
            }
        }
        for name in order {
            let values = &by_metric[&name];
            if let Some((mean, stddev)) = mean_stddev(values) {
                out.stats.push(AggregateStats {
                    stratum: stratum.into(),
                    metric: name,
                    run_count: values.len(),
                    mean,
                    stddev,
                });
            }
        }
        out.runs.extend(runs);
    }
    Ok(out)
}

/// Writes `stratum,metric,run_count,mean,stddev`.
pub fn write_experiment_csv<W: Write>(out: W, stats: &[AggregateStats]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stratum", "metric", "run_count", "mean", "stddev"])?;
    for s in stats {
        w.write_record([
            s.stratum.to_string(),
            s.metric.clone(),
            s.run_count.to_string(),
            s.mean.to_string(),
            s.stddev.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// All accepted dialogues of one mode at one level, merged whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub cefr: CefrLevel,
    pub mode: Mode,
    pub dialogue_ids: Vec<String>,
    pub word_count: usize,
    pub report: MetricReport,
}

/// The merged text for one mode: both roles, dialogues in id order.
pub fn merged_mode_text(corpus: &[CorpusRecord], cefr: CefrLevel, mode: Mode) -> (Vec<String>, String) {
    let mut picked: Vec<&CorpusRecord> = corpus
        .iter()
        .filter(|r| {
            let m = r.dialogue.meta();
            r.gate.disposition == Disposition::Accepted && m.cefr == cefr && m.implicit == (mode == Mode::Implicit)
        })
        .collect();
    picked.sort_by(|a, b| a.id().cmp(b.id()));
    let ids = picked.iter().map(|r| r.id().to_string()).collect();
    let text = join_utterances(picked.iter().flat_map(|r| r.dialogue.turns().iter().map(|t| t.text())));
    (ids, text)
}

/// Scores the explicit and implicit merges at `cefr`, in that order.
pub fn run_explicit_vs_implicit(
    corpus: &[CorpusRecord],
    cefr: CefrLevel,
    analyzer: &TextAnalyzer,
) -> Result<[MergedReport; 2], SamplerError> {
    let one = |mode: Mode| {
        let stratum = Stratum::Mode { cefr, mode };
        let (dialogue_ids, text) = merged_mode_text(corpus, cefr, mode);
        if dialogue_ids.is_empty() {
            return Err(SamplerError::EmptyStratum(stratum));
        }
        let report = analyzer.score(&text).map_err(|_| SamplerError::Degenerate(stratum))?;
        Ok(MergedReport {
            cefr,
            mode,
            dialogue_ids,
            word_count: report.counts.words,
            report,
        })
    };
    Ok([one(Mode::Explicit)?, one(Mode::Implicit)?])
}

/// Writes `cefr,mode,metric,value`.
pub fn write_mode_csv<W: Write>(out: W, reports: &[MergedReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cefr", "mode", "metric", "value"])?;
    for r in reports {
        for (metric, value) in report_metrics(&r.report) {
            w.write_record([r.cefr.to_string(), r.mode.as_str().to_string(), metric, value.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::{GateRecord, Qoi};
    use crate::model::Emotion;
    use crate::transcript::{Dialogue, DialogueMeta, Turn};
    use proptest::prelude::*;

    fn accepted_gate(id: &str) -> GateRecord {
        GateRecord {
            emotional_coherence: Some(true),
            complexity_coherence: Some(true),
            qoi: Some(Qoi::S),
            reviewed_at: Some(chrono::DateTime::UNIX_EPOCH),
            reviewer: Some("t".into()),
            disposition: Disposition::Accepted,
            ..GateRecord::pending(id)
        }
    }

    /// A dialogue whose client turns have the given word counts.
    fn record(id: &str, cefr: CefrLevel, implicit: bool, client_words: &[usize], accepted: bool) -> CorpusRecord {
        let mut turns = Vec::new();
        for (i, &n) in client_words.iter().enumerate() {
            let text = format!("{}.", vec!["word"; n].join(" "));
            turns.push(Turn::new(2 * i, Role::Client, "calm", &text).unwrap());
            turns.push(Turn::new(2 * i + 1, Role::Agent, "polite", "Fine.").unwrap());
        }
        let d = Dialogue::new(id, turns, DialogueMeta::new(Emotion::Anger, cefr, implicit)).unwrap();
        let gate = if accepted { accepted_gate(id) } else { GateRecord::pending(id) };
        CorpusRecord::new(d, gate, None)
    }

    fn client(cefr: CefrLevel) -> TurnStratum {
        TurnStratum { cefr, role: Role::Client }
    }

    /// Finds a seed whose draw order follows `wanted`.
    fn seed_with_order(corpus: &[CorpusRecord], wanted: &[usize]) -> u64 {
        (0..10_000)
            .find(|&s| {
                draw_order(corpus, client(CefrLevel::B2), s)
                    .iter()
                    .map(|t| t.turn / 2)
                    .eq(wanted.iter().copied())
            })
            .unwrap()
    }

    #[test]
    fn stops_at_first_overflow() {
        let corpus = vec![record("d", CefrLevel::B2, false, &[400, 400, 300], true)];
        let a = TextAnalyzer::default();
        let seed = seed_with_order(&corpus, &[0, 1, 2]);
        let run = build_sample(&corpus, client(CefrLevel::B2), seed, 1000, StopRule::StopAtOverflow, &a).unwrap();
        assert_eq!(run.word_count, 800);
        assert_eq!(run.included.len(), 2);
        let seed = seed_with_order(&corpus, &[0, 2, 1]);
        let run = build_sample(&corpus, client(CefrLevel::B2), seed, 1000, StopRule::StopAtOverflow, &a).unwrap();
        assert_eq!(run.word_count, 700);
    }

    #[test]
    fn skip_and_continue_differs_from_stop() {
        let corpus = vec![record("d", CefrLevel::B2, false, &[600, 500, 300], true)];
        let a = TextAnalyzer::default();
        let seed = seed_with_order(&corpus, &[0, 1, 2]);
        let stop = build_sample(&corpus, client(CefrLevel::B2), seed, 1000, StopRule::StopAtOverflow, &a).unwrap();
        let skip = build_sample(&corpus, client(CefrLevel::B2), seed, 1000, StopRule::SkipAndContinue, &a).unwrap();
        assert_eq!(stop.word_count, 600);
        assert_eq!(skip.word_count, 900);
    }

    #[test]
    fn under_cap_exhaustion() {
        let corpus = vec![record("d", CefrLevel::A2, false, &[50], true)];
        let run = build_sample(&corpus, client(CefrLevel::A2), 7, 1000, StopRule::StopAtOverflow, &TextAnalyzer::default()).unwrap();
        assert_eq!(run.word_count, 50);
    }

    #[test]
    fn error_cases() {
        let a = TextAnalyzer::default();
        let corpus = vec![
            record("d", CefrLevel::A2, false, &[1200], true),
            record("p", CefrLevel::C2, false, &[10], false),
        ];
        assert!(matches!(
            build_sample(&corpus, client(CefrLevel::A2), 1, 1000, StopRule::StopAtOverflow, &a),
            Err(SamplerError::CapTooSmall { words: 1200, cap: 1000, .. })
        ));
        // Pending dialogues are not sampled.
        assert_eq!(
            build_sample(&corpus, client(CefrLevel::C2), 1, 1000, StopRule::StopAtOverflow, &a),
            Err(SamplerError::EmptyStratum(client(CefrLevel::C2).into()))
        );
    }

    #[test]
    fn same_seed_same_sample() {
        let corpus: Vec<_> = (0..5)
            .map(|i| record(&format!("d{i}"), CefrLevel::B2, false, &[30, 40, 120, 7], true))
            .collect();
        let a = TextAnalyzer::default();
        let x = build_sample(&corpus, client(CefrLevel::B2), 99, 300, StopRule::StopAtOverflow, &a).unwrap();
        let y = build_sample(&corpus, client(CefrLevel::B2), 99, 300, StopRule::StopAtOverflow, &a).unwrap();
        assert_eq!(x, y);
        // Input order does not matter.
        let mut rev = corpus.clone();
        rev.reverse();
        assert_eq!(build_sample(&rev, client(CefrLevel::B2), 99, 300, StopRule::StopAtOverflow, &a).unwrap(), x);
    }

    #[test]
    fn stratum_labels_round_trip() {
        for s in TurnStratum::all() {
            assert_eq!(s.to_string().parse::<TurnStratum>().unwrap(), s);
        }
        assert_eq!("b2:Agent".parse::<TurnStratum>().unwrap(), TurnStratum { cefr: CefrLevel::B2, role: Role::Agent });
        assert!("B2".parse::<TurnStratum>().is_err());
        assert!("X1/client".parse::<TurnStratum>().is_err());
    }

    #[test]
    fn stddev_arithmetic() {
        let (mean, sd) = mean_stddev(&[100.0, 102.0]).unwrap();
        assert_eq!(mean, 101.0);
        assert!((sd - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_stddev(&[5.0]), None);
        assert_eq!(mean_stddev(&[3.0, 3.0, 3.0]), Some((3.0, 0.0)));
    }

    #[test]
    fn experiment_cardinality_and_constant_text() {
        let corpus: Vec<_> = CefrLevel::ALL
            .iter()
            .map(|&c| record(&format!("d-{c}"), c, false, &[12], true))
            .collect();
        let strata: Vec<_> = CefrLevel::ALL.iter().map(|&c| client(c)).collect();
        let out = run_experiment(&corpus, &strata, &ExperimentConfig::default(), &TextAnalyzer::default()).unwrap();
        assert_eq!(out.stats.len(), 12);
        assert!(out.errors.is_empty());
        assert!(out.stats.iter().all(|s| s.stddev == 0.0 && s.run_count == 10));
    }

    #[test]
    fn experiment_continues_past_empty_strata() {
        let corpus = vec![record("d", CefrLevel::A2, false, &[12], true)];
        let strata = [client(CefrLevel::A2), client(CefrLevel::C2)];
        let out = run_experiment(&corpus, &strata, &ExperimentConfig::default(), &TextAnalyzer::default()).unwrap();
        assert_eq!(out.stats.len(), 4);
        assert_eq!(out.errors, vec![SamplerError::EmptyStratum(client(CefrLevel::C2).into())]);
        let one = ExperimentConfig {
            runs_per_stratum: 1,
            ..Default::default()
        };
        assert_eq!(
            run_experiment(&corpus, &strata, &one, &TextAnalyzer::default()),
            Err(SamplerError::TooFewRuns(1))
        );
    }

    #[test]
    fn explicit_vs_implicit() {
        let a = TextAnalyzer::default();
        let corpus = vec![
            record("b", CefrLevel::B2, false, &[5], true),
            record("a", CefrLevel::B2, false, &[6], true),
            record("c", CefrLevel::B2, true, &[7], true),
            record("d", CefrLevel::B2, true, &[8], true),
            record("e", CefrLevel::C2, false, &[8], true),
        ];
        let [exp, imp] = run_explicit_vs_implicit(&corpus, CefrLevel::B2, &a).unwrap();
        assert_eq!(exp.dialogue_ids, ["a", "b"]);
        assert_eq!(imp.mode, Mode::Implicit);
        // Each dialogue also has one one-word agent turn.
        assert_eq!(exp.word_count, 6 + 5 + 2);
        assert_eq!(
            run_explicit_vs_implicit(&corpus, CefrLevel::C2, &a),
            Err(SamplerError::EmptyStratum(Stratum::Mode {
                cefr: CefrLevel::C2,
                mode: Mode::Implicit
            }))
        );
        let mut buf = Vec::new();
        write_mode_csv(&mut buf, &[exp, imp]).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.starts_with("cefr,mode,metric,value\nB2,explicit,ari,"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn experiment_csv_header() {
        let stats = [AggregateStats {
            stratum: client(CefrLevel::A2).into(),
            metric: "fre".into(),
            run_count: 2,
            mean: 101.0,
            stddev: 0.5,
        }];
        let mut buf = Vec::new();
        write_experiment_csv(&mut buf, &stats).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "stratum,metric,run_count,mean,stddev\nA2/client,fre,2,101,0.5\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cap_purity_and_replay(
            dialogues in proptest::collection::vec(proptest::collection::vec(1usize..400, 1..6), 1..6),
            seed in any::<u64>(),
        ) {
            let corpus: Vec<_> = dialogues.iter().enumerate()
                .map(|(i, w)| record(&format!("d{i}"), CefrLevel::A2, false, w, true))
                .collect();
            let a = TextAnalyzer::default();
            let stratum = client(CefrLevel::A2);
            let run = build_sample(&corpus, stratum, seed, DEFAULT_CAP, StopRule::StopAtOverflow, &a).unwrap();
            prop_assert!(run.word_count <= DEFAULT_CAP);
            // Replaying the draw order reproduces the included prefix.
            let order = draw_order(&corpus, stratum, seed);
            prop_assert_eq!(&order[..run.included.len()], &run.included[..]);
            for t in &run.included {
                prop_assert_eq!(t.turn % 2, 0, "agent turn sampled");
            }
        }
    }
}
