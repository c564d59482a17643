//! Rule-based suffix segmentation.
//!
//! Each rule names a suffix and the minimum stem length (in characters) that must
//! remain after stripping it. Rules are tried in priority order; a rule without an
//! explicit priority takes its position in the rules file, so by default the file
//! order decides. Among rules of equal priority the longer suffix is tried first.
//!
//! Segmentation is lossless: concatenating the segments of a token yields the token.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("line {line}: {reason}")]
    MalformedRule { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    pub min_stem_length: usize,
    pub priority: i64,
}

impl SuffixRule {
    /// Returns the stem if the rule applies to `token`.
    fn strip<'a>(&self, token: &'a str) -> Option<&'a str> {
        let stem = token.strip_suffix(self.suffix.as_str())?;
        (stem.chars().count() >= self.min_stem_length).then_some(stem)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentationRules {
    rules: Vec<SuffixRule>,
    recursive: bool,
}

impl SegmentationRules {
    /// Builds a rule set from `(suffix, min_stem_length)` pairs in priority order.
    pub fn new<I, S>(rules: I) -> Result<Self, RulesError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let rules = rules
            .into_iter()
            .enumerate()
            .map(|(i, (suffix, min_stem_length))| SuffixRule {
                suffix: suffix.into(),
                min_stem_length,
                priority: i as i64,
            })
            .collect();
        Self::from_rules(rules)
    }

    pub fn from_rules(mut rules: Vec<SuffixRule>) -> Result<Self, RulesError> {
        for (i, rule) in rules.iter().enumerate() {
            if rule.suffix.is_empty() {
                return Err(RulesError::MalformedRule {
                    line: i + 1,
                    reason: "empty suffix".into(),
                });
            }
            if rule.min_stem_length == 0 {
                return Err(RulesError::MalformedRule {
                    line: i + 1,
                    reason: "min_stem_length must be positive".into(),
                });
            }
        }
        // Stable: equal (priority, length) keeps file order.
        rules.sort_by(|a, b| {
            a.priority
                .cmp(&b.priority)
                .then_with(|| b.suffix.chars().count().cmp(&a.suffix.chars().count()))
        });
        Ok(Self {
            rules,
            recursive: false,
        })
    }

    /// Strip suffixes repeatedly from the remaining stem instead of at most once.
    pub fn recursive(mut self, recursive: bool) -> Self {
        self.recursive = recursive;
        self
    }

    pub fn is_recursive(&self) -> bool {
        self.recursive
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Parses the TSV rules format: `suffix<TAB>min_stem_length[<TAB>priority]`,
    /// `#` comment lines and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let bad = |reason: &str| RulesError::MalformedRule {
                line,
                reason: reason.to_owned(),
            };
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad("expected suffix and min_stem_length columns"));
            }
            if fields[0].is_empty() {
                return Err(bad("empty suffix"));
            }
            let min_stem_length: usize = fields[1]
                .parse()
                .map_err(|_| bad("min_stem_length is not a non-negative integer"))?;
            if min_stem_length == 0 {
                return Err(bad("min_stem_length must be positive"));
            }
            let priority = match fields.get(2) {
                Some(p) => p.parse().map_err(|_| bad("priority is not an integer"))?,
                None => rules.len() as i64,
            };
            rules.push(SuffixRule {
                suffix: fields[0].to_owned(),
                min_stem_length,
                priority,
            });
        }
        Self::from_rules(rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RulesError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn strip_once<'a>(&self, token: &'a str) -> Option<(&'a str, &'a str)> {
        self.rules
            .iter()
            .find_map(|rule| rule.strip(token))
            .map(|stem| token.split_at(stem.len()))
    }
}

/// Splits `token` into a stem followed by the stripped suffixes in surface order.
/// A token no rule applies to comes back as a single segment.
pub fn segment_token(token: &str, rules: &SegmentationRules) -> Vec<String> {
    let mut suffixes = Vec::new();
    let mut stem = token;
    while let Some((rest, suffix)) = rules.strip_once(stem) {
        suffixes.push(suffix);
        stem = rest;
        if !rules.recursive {
            break;
        }
    }
    std::iter::once(stem)
        .chain(suffixes.into_iter().rev())
        .map(str::to_owned)
        .collect()
}

/// Replaces every token by its segments, preserving order.
pub fn segment_stream<S: AsRef<str>>(tokens: &[S], rules: &SegmentationRules) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|t| segment_token(t.as_ref(), rules))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_matching_rule_is_identity() {
        let rules = SegmentationRules::new([("lo", 2)]).unwrap();
        assert_eq!(segment_token("cinema", &rules), vec!["cinema"]);
    }

    #[test]
    fn strips_locative_suffix() {
        let rules = SegmentationRules::new([("lo", 2)]).unwrap();
        assert_eq!(segment_token("intilo", &rules), vec!["inti", "lo"]);
    }

    #[test]
    fn min_stem_guard() {
        let rules = SegmentationRules::new([("lo", 6)]).unwrap();
        assert_eq!(segment_token("intilo", &rules), vec!["intilo"]);
        // Exactly at the limit still applies.
        let rules = SegmentationRules::new([("lo", 4)]).unwrap();
        assert_eq!(segment_token("intilo", &rules), vec!["inti", "lo"]);
    }

    #[test]
    fn single_pass_vs_recursive() {
        let rules = SegmentationRules::new([("lu", 2), ("lo", 2)]).unwrap();
        assert_eq!(segment_token("pillalulo", &rules), vec!["pillalu", "lo"]);
        let rules = rules.recursive(true);
        assert_eq!(
            segment_token("pillalulo", &rules),
            vec!["pilla", "lu", "lo"]
        );
    }

    #[test]
    fn file_order_then_longest_match() {
        let rules = SegmentationRules::new([("o", 2), ("lo", 2)]).unwrap();
        assert_eq!(segment_token("intilo", &rules), vec!["intil", "o"]);

        let rules = SegmentationRules::parse("o\t2\t0\nlo\t2\t0\n").unwrap();
        assert_eq!(segment_token("intilo", &rules), vec!["inti", "lo"]);
    }

    #[test]
    fn stem_length_counts_characters() {
        let rules = SegmentationRules::new([("లో", 3)]).unwrap();
        // ఇంటి is 4 chars (12 bytes).
        assert_eq!(segment_token("ఇంటిలో", &rules), vec!["ఇంటి", "లో"]);
        let rules = SegmentationRules::new([("లో", 5)]).unwrap();
        assert_eq!(segment_token("ఇంటిలో", &rules), vec!["ఇంటిలో"]);
    }

    #[test]
    fn stream_examples() {
        let rules = SegmentationRules::new([("lo", 2)]).unwrap();
        assert!(segment_stream::<&str>(&[], &rules).is_empty());
        assert_eq!(
            segment_stream(&["a", "intilo"], &rules),
            vec!["a", "inti", "lo"]
        );
        assert_eq!(segment_stream(&["a", "b"], &rules), vec!["a", "b"]);
    }

    #[test]
    fn parses_rules_file() {
        let text = "# demo rules\nlo\t2\n\nki\t3\n";
        let rules = SegmentationRules::parse(text).unwrap();
        assert_eq!(rules.rules().len(), 2);
        assert_eq!(rules.rules()[1].suffix, "ki");
        assert!(matches!(
            SegmentationRules::parse("lo\tx\n"),
            Err(RulesError::MalformedRule { line: 1, .. })
        ));
        assert!(SegmentationRules::parse("lo\t0\n").is_err());
        assert!(SegmentationRules::parse("lo\n").is_err());
    }

    fn rules_strategy() -> impl Strategy<Value = SegmentationRules> {
        (
            prop::collection::vec(("[a-d]{1,3}", 1usize..4), 0..5),
            any::<bool>(),
        )
            .prop_map(|(rules, rec)| SegmentationRules::new(rules).unwrap().recursive(rec))
    }

    proptest! {
        #[test]
        fn segmentation_is_lossless(token in "[a-d]{1,10}", rules in rules_strategy()) {
            let segs = segment_token(&token, &rules);
            prop_assert_eq!(segs.concat(), token.clone());
            prop_assert!(segs.iter().all(|s| !s.is_empty()));
            prop_assert_eq!(segment_token(&token, &rules), segs);
        }

        #[test]
        fn empty_rules_leave_stream_unchanged(tokens in prop::collection::vec("[a-z]{1,6}", 0..10)) {
            let rules = SegmentationRules::default();
            prop_assert_eq!(segment_stream(&tokens, &rules), tokens);
        }
    }
}
