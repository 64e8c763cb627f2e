//! Classic readability formulas over aggregate text counts.

use serde::{Deserialize, Serialize};

/// Published coefficients.
///
/// * ARI: Senter & Smith (1967), `4.71·c/w + 0.5·w/s − 21.43`.
/// * Flesch Reading Ease: Flesch (1948), `206.835 − 1.015·w/s − 84.6·syl/w`.
/// * Flesch-Kincaid Grade Level: Kincaid et al. (1975), `0.39·w/s + 11.8·syl/w − 15.59`.
/// * New Dale-Chall: Chall & Dale (1995) raw score `0.1579·pdw + 0.0496·w/s`,
///   plus `3.6365` when the difficult-word percentage exceeds 5.
pub mod coefficients {
    pub const ARI_CHARS_PER_WORD: f64 = 4.71;
    pub const ARI_WORDS_PER_SENTENCE: f64 = 0.5;
    pub const ARI_INTERCEPT: f64 = 21.43;

    pub const FRE_INTERCEPT: f64 = 206.835;
    pub const FRE_WORDS_PER_SENTENCE: f64 = 1.015;
    pub const FRE_SYLLABLES_PER_WORD: f64 = 84.6;

    pub const FKGL_WORDS_PER_SENTENCE: f64 = 0.39;
    pub const FKGL_SYLLABLES_PER_WORD: f64 = 11.8;
    pub const FKGL_INTERCEPT: f64 = 15.59;

    pub const NDC_DIFFICULT_PERCENT: f64 = 0.1579;
    pub const NDC_WORDS_PER_SENTENCE: f64 = 0.0496;
    pub const NDC_ADJUSTMENT: f64 = 3.6365;
    /// The adjustment applies strictly above this percentage.
    pub const NDC_ADJUSTMENT_THRESHOLD: f64 = 5.0;
}

use coefficients::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("text has no scorable words or sentences")]
pub struct DegenerateText;

/// Counts shared by every formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCounts {
    pub sentences: usize,
    pub words: usize,
    /// Letters and digits inside word tokens.
    pub characters: usize,
    pub syllables: usize,
    pub difficult_words: usize,
}

impl TextCounts {
    fn ratios(&self) -> Result<(f64, f64), DegenerateText> {
        if self.words == 0 || self.sentences == 0 {
            return Err(DegenerateText);
        }
        Ok((self.words as f64 / self.sentences as f64, self.words as f64))
    }

    pub fn difficult_percent(&self) -> Result<f64, DegenerateText> {
        let (_, w) = self.ratios()?;
        Ok(100.0 * self.difficult_words as f64 / w)
    }
}

pub fn ari(c: &TextCounts) -> Result<f64, DegenerateText> {
    let (wps, w) = c.ratios()?;
    Ok(ARI_CHARS_PER_WORD * (c.characters as f64 / w) + ARI_WORDS_PER_SENTENCE * wps - ARI_INTERCEPT)
}

pub fn fre(c: &TextCounts) -> Result<f64, DegenerateText> {
    let (wps, w) = c.ratios()?;
    Ok(FRE_INTERCEPT - FRE_WORDS_PER_SENTENCE * wps - FRE_SYLLABLES_PER_WORD * (c.syllables as f64 / w))
}

pub fn fkgl(c: &TextCounts) -> Result<f64, DegenerateText> {
    let (wps, w) = c.ratios()?;
    Ok(FKGL_WORDS_PER_SENTENCE * wps + FKGL_SYLLABLES_PER_WORD * (c.syllables as f64 / w) - FKGL_INTERCEPT)
}

pub fn ndc(c: &TextCounts) -> Result<f64, DegenerateText> {
    let (wps, _) = c.ratios()?;
    let pdw = c.difficult_percent()?;
    let raw = NDC_DIFFICULT_PERCENT * pdw + NDC_WORDS_PER_SENTENCE * wps;
    Ok(if pdw > NDC_ADJUSTMENT_THRESHOLD {
        raw + NDC_ADJUSTMENT
    } else {
        raw
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(s: usize, w: usize, syll: usize, ch: usize, diff: usize) -> TextCounts {
        TextCounts {
            sentences: s,
            words: w,
            characters: ch,
            syllables: syll,
            difficult_words: diff,
        }
    }

    #[test]
    fn the_cat_sat() {
        let c = counts(1, 3, 3, 9, 0);
        assert!((fre(&c).unwrap() - 119.19).abs() < 1e-9);
        assert!((fkgl(&c).unwrap() - -2.62).abs() < 1e-9);
        assert!((ari(&c).unwrap() - -5.80).abs() < 1e-9);
        assert!((ndc(&c).unwrap() - 0.1488).abs() < 1e-9);
    }

    #[test]
    fn twenty_one_syllable_words() {
        let c = counts(1, 20, 20, 80, 0);
        assert!((fre(&c).unwrap() - 101.935).abs() < 1e-9);
    }

    #[test]
    fn degenerate_counts() {
        assert_eq!(fre(&counts(1, 0, 0, 0, 0)), Err(DegenerateText));
        assert_eq!(ari(&counts(0, 3, 3, 9, 0)), Err(DegenerateText));
        assert_eq!(ndc(&TextCounts::default()), Err(DegenerateText));
    }

    #[test]
    fn ndc_threshold_is_strict() {
        // 1 of 20 words = exactly 5% → no adjustment.
        let at = counts(1, 20, 20, 80, 1);
        let expected = 0.1579 * 5.0 + 0.0496 * 20.0;
        assert!((ndc(&at).unwrap() - expected).abs() < 1e-12);
        // 2 of 20 = 10% → adjustment applied.
        let above = counts(1, 20, 20, 80, 2);
        let expected = 0.1579 * 10.0 + 0.0496 * 20.0 + 3.6365;
        assert!((ndc(&above).unwrap() - expected).abs() < 1e-12);
        // Just above 5%: 51 of 1000.
        let just = counts(50, 1000, 1000, 4000, 51);
        assert!(ndc(&just).unwrap() > 0.1579 * 5.1 + 0.0496 * 20.0 + 3.0);
    }

    proptest! {
        #[test]
        fn syllables_move_fre_down_and_fkgl_up(s in 1usize..50, w in 1usize..500, syll in 1usize..2000, extra in 1usize..50) {
            let a = counts(s, w, syll, 4 * w, 0);
            let b = counts(s, w, syll + extra, 4 * w, 0);
            prop_assert!(fre(&b).unwrap() < fre(&a).unwrap());
            prop_assert!(fkgl(&b).unwrap() > fkgl(&a).unwrap());
        }

        #[test]
        fn characters_move_ari_up(s in 1usize..50, w in 1usize..500, ch in 1usize..4000, extra in 1usize..50) {
            let a = counts(s, w, w, ch, 0);
            let b = counts(s, w, w, ch + extra, 0);
            prop_assert!(ari(&b).unwrap() > ari(&a).unwrap());
        }

        #[test]
        fn finite_whenever_non_degenerate(s in 1usize..100, w in 1usize..1000, syll in 0usize..5000, ch in 0usize..8000, d in 0usize..1000) {
            let c = counts(s, w, syll.max(w), ch, d.min(w));
            for v in [ari(&c), fre(&c), fkgl(&c), ndc(&c)] {
                prop_assert!(v.unwrap().is_finite());
            }
        }
    }
}
