//! Bigram candidates for annotation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusSplit};
use crate::lexicon::Ngram;
use crate::segmenter::{segment_stream, SegmentationRules};

pub const CANDIDATES_HEADER: &str = "ngram\tcount";

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("min_count must be at least 1")]
    InvalidThreshold,
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which part of a corpus bigrams were counted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigramSource {
    FullCorpus,
    TrainSplit,
    Streams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigramCounts {
    pub counts: BTreeMap<(String, String), usize>,
    pub source: BigramSource,
}

impl BigramCounts {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, first: &str, second: &str) -> usize {
        self.counts
            .get(&(first.to_owned(), second.to_owned()))
            .copied()
            .unwrap_or(0)
    }
}

/// Counts adjacent token pairs within each stream. Pairs never span two streams.
pub fn count_bigrams<S: AsRef<[String]> + Sync>(streams: &[S]) -> BigramCounts {
    let counts = streams
        .par_iter()
        .map(|stream| {
            let mut local = BTreeMap::new();
            for pair in stream.as_ref().windows(2) {
                *local
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0usize) += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut acc, part| {
            for (k, v) in part {
                *acc.entry(k).or_insert(0) += v;
            }
            acc
        });
    BigramCounts {
        counts,
        source: BigramSource::Streams,
    }
}

/// Where to draw bigrams from: the whole corpus (building an annotation task) or
/// only the training side of a split (feeding experiments).
#[derive(Debug, Clone, Copy)]
pub enum ExtractionScope<'a> {
    FullCorpus,
    TrainOnly(&'a CorpusSplit),
}

pub fn corpus_bigrams(
    corpus: &Corpus,
    scope: ExtractionScope<'_>,
    segmentation: Option<&SegmentationRules>,
) -> BigramCounts {
    let streams: Vec<Vec<String>> = corpus
        .reviews()
        .iter()
        .filter(|r| match scope {
            ExtractionScope::FullCorpus => true,
            ExtractionScope::TrainOnly(split) => split.train_ids.contains(&r.id),
        })
        .map(|r| {
            let tokens = r.tokens();
            match segmentation {
                Some(rules) => segment_stream(&tokens, rules),
                None => tokens,
            }
        })
        .collect();
    let mut counts = count_bigrams(&streams);
    counts.source = match scope {
        ExtractionScope::FullCorpus => BigramSource::FullCorpus,
        ExtractionScope::TrainOnly(_) => BigramSource::TrainSplit,
    };
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigramCandidate {
    pub first: String,
    pub second: String,
    pub count: usize,
}

impl BigramCandidate {
    pub fn key(&self) -> String {
        format!("{} {}", self.first, self.second)
    }
}

/// Bigrams occurring at least `min_count` times, most frequent first, ties broken
/// by the (first, second) token pair.
pub fn threshold_bigrams(
    counts: &BigramCounts,
    min_count: usize,
) -> Result<Vec<BigramCandidate>, ExtractionError> {
    if min_count == 0 {
        return Err(ExtractionError::InvalidThreshold);
    }
    let mut out: Vec<BigramCandidate> = counts
        .counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|((a, b), &count)| BigramCandidate {
            first: a.clone(),
            second: b.clone(),
            count,
        })
        .collect();
    // BTreeMap order is already lexicographic; a stable sort keeps it within equal counts.
    out.sort_by_key(|c| std::cmp::Reverse(c.count));
    Ok(out)
}

pub fn render_candidates(candidates: &[BigramCandidate]) -> String {
    let mut out = String::from(CANDIDATES_HEADER);
    out.push('\n');
    for c in candidates {
        out.push_str(&format!("{}\t{}\n", c.key(), c.count));
    }
    out
}

pub fn export_candidates(
    candidates: &[BigramCandidate],
    path: impl AsRef<Path>,
) -> Result<(), ExtractionError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(render_candidates(candidates).as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Reads a candidate file back as `(n-gram, count)` rows in file order.
/// Unigram keys are accepted too, so hand-made word lists can use the same format.
/// `#` lines are comments only above the column header.
pub fn parse_candidates(text: &str) -> Result<Vec<(Ngram, usize)>, ExtractionError> {
    let lines: Vec<&str> = text.lines().collect();
    let preamble = lines.iter().take_while(|l| l.starts_with('#')).count();
    let start = match lines.get(preamble) {
        Some(&l) if l == CANDIDATES_HEADER => preamble + 1,
        _ if lines.first() == Some(&CANDIDATES_HEADER) => 1,
        _ => 0,
    };
    let mut rows = Vec::new();
    for (idx, raw) in lines.iter().enumerate().skip(start) {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| ExtractionError::MalformedRow { line, reason };
        let (key, count) = raw
            .split_once('\t')
            .ok_or_else(|| bad("expected ngram and count columns".into()))?;
        let ngram = Ngram::from_key(key).map_err(|e| bad(e.to_string()))?;
        let count = count
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid count `{count}`")))?;
        rows.push((ngram, count));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn counts_adjacent_pairs() {
        let counts = count_bigrams(&[toks("a b a b c")]);
        assert_eq!(counts.counts.len(), 3);
        assert_eq!(counts.get("a", "b"), 2);
        assert_eq!(counts.get("b", "a"), 1);
        assert_eq!(counts.get("b", "c"), 1);
    }

    #[test]
    fn no_pairs_across_streams() {
        assert!(count_bigrams(&[toks("a"), toks("b")]).counts.is_empty());
        assert!(count_bigrams(&[Vec::<String>::new()]).counts.is_empty());
    }

    #[test]
    fn threshold_examples() {
        let mut counts = count_bigrams(&[toks("a b a b c")]);
        let kept = threshold_bigrams(&counts, 2).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].key(), "a b");
        assert_eq!(threshold_bigrams(&counts, 1).unwrap().len(), 3);

        counts.counts.clear();
        counts.counts.insert(("c".into(), "d".into()), 3);
        counts.counts.insert(("a".into(), "b".into()), 3);
        counts.counts.insert(("e".into(), "f".into()), 4);
        let keys: Vec<_> = threshold_bigrams(&counts, 2)
            .unwrap()
            .iter()
            .map(BigramCandidate::key)
            .collect();
        assert_eq!(keys, ["e f", "a b", "c d"]);

        assert!(matches!(
            threshold_bigrams(&counts, 0),
            Err(ExtractionError::InvalidThreshold)
        ));
    }

    #[test]
    fn candidate_files() {
        assert_eq!(render_candidates(&[]), "ngram\tcount\n");
        let one = vec![BigramCandidate {
            first: "DhokA".into(),
            second: "ledu".into(),
            count: 3,
        }];
        let text = render_candidates(&one);
        assert_eq!(text.lines().count(), 2);
        let rows = parse_candidates(&text).unwrap();
        assert_eq!(rows[0].0.key(), "DhokA ledu");
        assert_eq!(rows[0].1, 3);
        assert!(parse_candidates("a b\tx\n").is_err());
        let with_header = format!("# polarlex 0.1.0\n# seed 7\n{text}");
        assert_eq!(parse_candidates(&with_header).unwrap(), rows);
        // Without a column header a leading `#` is an ordinary token.
        assert_eq!(parse_candidates("# x\t2\n").unwrap()[0].0.key(), "# x");
    }

    #[test]
    fn train_only_scope() {
        use crate::corpus::{Domain, Review, Sentiment};
        let reviews = vec![
            Review {
                id: "r1".into(),
                domain: Domain::Book,
                text: "a b".into(),
                gold: Sentiment::Positive,
            },
            Review {
                id: "r2".into(),
                domain: Domain::Book,
                text: "c d".into(),
                gold: Sentiment::Negative,
            },
        ];
        let corpus = Corpus::new(reviews).unwrap();
        let split = CorpusSplit {
            train_ids: ["r1".to_string()].into(),
            test_ids: ["r2".to_string()].into(),
            ratio: Default::default(),
            seed: 0,
            stratified: false,
        };
        let c = corpus_bigrams(&corpus, ExtractionScope::TrainOnly(&split), None);
        assert_eq!(c.source, BigramSource::TrainSplit);
        assert_eq!(c.get("a", "b"), 1);
        assert_eq!(c.get("c", "d"), 0);
        let full = corpus_bigrams(&corpus, ExtractionScope::FullCorpus, None);
        assert_eq!(full.total(), 2);
    }

    proptest! {
        #[test]
        fn total_matches_stream_lengths(streams in prop::collection::vec(
            prop::collection::vec("[a-c]", 0..12), 0..8)) {
            let counts = count_bigrams(&streams);
            let expected: usize = streams.iter().map(|s| s.len().saturating_sub(1)).sum();
            prop_assert_eq!(counts.total(), expected);
        }

        #[test]
        fn threshold_is_monotone(streams in prop::collection::vec(
            prop::collection::vec("[a-c]", 0..12), 0..8), lo in 1usize..4, step in 0usize..4) {
            let counts = count_bigrams(&streams);
            let low = threshold_bigrams(&counts, lo).unwrap();
            let high = threshold_bigrams(&counts, lo + step).unwrap();
            prop_assert!(high.len() <= low.len());
            prop_assert!(high.iter().all(|c| low.contains(c)));
        }
    }
}
