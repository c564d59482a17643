//! Counting polar lexicon matches in a token stream.
//!
//! Both majority polling and the polarity-count features go through
//! [`PolarityMatcher`], so the two always agree on what a match is.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Lexicon, PolarityLabel};
use crate::segmenter::{segment_stream, SegmentationRules};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("lexicon entry `{key}` is labeled `{label}`; filter to polar entries first")]
pub struct UnfilteredLexicon {
    pub key: String,
    pub label: PolarityLabel,
}

/// Positive and negative match counts, with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub positive: usize,
    pub negative: usize,
}

impl MatchCounts {
    pub fn net(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative
    }
}

impl std::ops::Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, rhs: Self) -> Self {
        MatchCounts {
            positive: self.positive + rhs.positive,
            negative: self.negative + rhs.negative,
        }
    }
}

/// Lookup table from token sequences to polarity.
///
/// Without segmentation a unigram lexicon yields length-1 patterns and a bigram
/// lexicon length-2 patterns. With segmentation each key is segmented and matched
/// as a contiguous run of segments. Keys that segment to the same sequence with
/// opposite labels cancel out and are dropped.
#[derive(Debug, Clone, Default)]
pub struct PolarityMatcher {
    patterns: HashMap<Vec<String>, bool>,
    max_len: usize,
    conflicts: usize,
}

impl PolarityMatcher {
    pub fn new(
        lexicon: &Lexicon,
        segmentation: Option<&SegmentationRules>,
    ) -> Result<Self, UnfilteredLexicon> {
        let mut patterns: HashMap<Vec<String>, bool> = HashMap::new();
        let mut conflicted: Vec<Vec<String>> = Vec::new();
        for entry in lexicon.entries() {
            let positive = match entry.label {
                PolarityLabel::Positive => true,
                PolarityLabel::Negative => false,
                label => {
                    return Err(UnfilteredLexicon {
                        key: entry.ngram.key(),
                        label,
                    })
                }
            };
            let seq = match segmentation {
                Some(rules) => segment_stream(entry.ngram.tokens(), rules),
                None => entry.ngram.tokens().to_vec(),
            };
            if conflicted.contains(&seq) {
                continue;
            }
            match patterns.get(&seq) {
                Some(&p) if p != positive => {
                    patterns.remove(&seq);
                    conflicted.push(seq);
                }
                _ => {
                    patterns.insert(seq, positive);
                }
            }
        }
        let max_len = patterns.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            patterns,
            max_len,
            conflicts: conflicted.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Number of token sequences dropped because their keys disagreed.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    /// Counts every occurrence of every pattern; occurrences may overlap.
    pub fn count<S: AsRef<str>>(&self, tokens: &[S]) -> MatchCounts {
        let mut counts = MatchCounts::default();
        if self.patterns.is_empty() {
            return counts;
        }
        let mut probe: Vec<String> = Vec::with_capacity(self.max_len);
        for start in 0..tokens.len() {
            probe.clear();
            for token in tokens.iter().skip(start).take(self.max_len) {
                probe.push(token.as_ref().to_owned());
                match self.patterns.get(&probe) {
                    Some(true) => counts.positive += 1,
                    Some(false) => counts.negative += 1,
                    None => {}
                }
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PolarityLabel::*;

    #[test]
    fn counts_with_multiplicity() {
        let lex = Lexicon::new().with("good", Positive).with("bad", Negative);
        let m = PolarityMatcher::new(&lex, None).unwrap();
        let c = m.count(&["good", "bad", "good"]);
        assert_eq!((c.positive, c.negative), (2, 1));
    }

    #[test]
    fn rejects_unfiltered() {
        let lex = Lexicon::new().with("okay", Neutral);
        assert!(PolarityMatcher::new(&lex, None).is_err());
    }

    #[test]
    fn segmented_bigram_matches_contiguous_segments() {
        let rules = SegmentationRules::new([("lo", 2)]).unwrap();
        let lex = Lexicon::new().with("intilo santosham", Positive);
        let m = PolarityMatcher::new(&lex, Some(&rules)).unwrap();
        let review = segment_stream(&["intilo", "santosham"], &rules);
        assert_eq!(m.count(&review).positive, 1);
        assert_eq!(m.count(&["intilo", "santosham"]).positive, 0);
    }

    #[test]
    fn conflicting_segmented_keys_are_dropped() {
        let rules = SegmentationRules::new([("lo", 2)]).unwrap();
        let lex = Lexicon::new()
            .with("intilo", Positive)
            .with("inti lo", Negative);
        let m = PolarityMatcher::new(&lex, Some(&rules)).unwrap();
        assert_eq!(m.conflicts(), 1);
        assert!(m.is_empty());
    }
}
