//! Majority polling: a review's polarity is the sign of its summed ±1 lexicon matches.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusSplit, Domain, Review, Sentiment};
use crate::extraction::{corpus_bigrams, ExtractionScope};
use crate::lexicon::Lexicon;
use crate::matching::{MatchCounts, PolarityMatcher, UnfilteredLexicon};
use crate::segmenter::{segment_stream, SegmentationRules};

#[derive(Debug, Error)]
pub enum PollingError {
    #[error(transparent)]
    UnfilteredLexicon(#[from] UnfilteredLexicon),
    #[error("the evaluation set is empty")]
    EmptyTestSet,
    #[error("{0} mode needs a train/test split: bigrams must come from training data only")]
    MissingSplit(PollingMode),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollingMode {
    Unigram,
    Bigram,
    UnigramPlusBigram,
}

impl PollingMode {
    pub const ALL: [PollingMode; 3] = [
        PollingMode::Unigram,
        PollingMode::Bigram,
        PollingMode::UnigramPlusBigram,
    ];

    pub fn uses_unigrams(self) -> bool {
        matches!(self, PollingMode::Unigram | PollingMode::UnigramPlusBigram)
    }

    pub fn uses_bigrams(self) -> bool {
        matches!(self, PollingMode::Bigram | PollingMode::UnigramPlusBigram)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PollingMode::Unigram => "unigram",
            PollingMode::Bigram => "bigram",
            PollingMode::UnigramPlusBigram => "unigram+bigram",
        }
    }
}

impl fmt::Display for PollingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PollingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unigram" | "uni" => Ok(PollingMode::Unigram),
            "bigram" | "bi" => Ok(PollingMode::Bigram),
            "unigram+bigram" | "uni+bi" | "combined" => Ok(PollingMode::UnigramPlusBigram),
            other => Err(format!(
                "unknown polling mode `{other}` (expected unigram, bigram or unigram+bigram)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Positive,
    Negative,
    Unclassified,
}

impl Verdict {
    pub fn from_score(score: i64) -> Self {
        match score.signum() {
            1 => Verdict::Positive,
            -1 => Verdict::Negative,
            _ => Verdict::Unclassified,
        }
    }

    pub fn sentiment(self) -> Option<Sentiment> {
        match self {
            Verdict::Positive => Some(Sentiment::Positive),
            Verdict::Negative => Some(Sentiment::Negative),
            Verdict::Unclassified => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollScore {
    pub score: i64,
    pub unigrams: MatchCounts,
    pub bigrams: MatchCounts,
}

impl PollScore {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_score(self.score)
    }
}

/// Prepared unigram and bigram matchers for repeated scoring.
#[derive(Debug, Clone)]
pub struct Poller {
    unigrams: PolarityMatcher,
    bigrams: PolarityMatcher,
    segmentation: Option<SegmentationRules>,
}

impl Poller {
    /// Fails if either lexicon holds Neutral or Ambiguous entries. When
    /// `segmentation` is given, lexicon keys are segmented here and review tokens in
    /// [`Poller::score`].
    pub fn new(
        unigrams: &Lexicon,
        bigrams: &Lexicon,
        segmentation: Option<&SegmentationRules>,
    ) -> Result<Self, UnfilteredLexicon> {
        Ok(Self {
            unigrams: PolarityMatcher::new(unigrams, segmentation)?,
            bigrams: PolarityMatcher::new(bigrams, segmentation)?,
            segmentation: segmentation.cloned(),
        })
    }

    pub fn score<S: AsRef<str>>(&self, tokens: &[S], mode: PollingMode) -> PollScore {
        let segmented;
        let stream: Vec<&str> = match &self.segmentation {
            Some(rules) => {
                segmented = segment_stream(tokens, rules);
                segmented.iter().map(String::as_str).collect()
            }
            None => tokens.iter().map(AsRef::as_ref).collect(),
        };
        let unigrams = if mode.uses_unigrams() {
            self.unigrams.count(&stream)
        } else {
            MatchCounts::default()
        };
        let bigrams = if mode.uses_bigrams() {
            self.bigrams.count(&stream)
        } else {
            MatchCounts::default()
        };
        PollScore {
            score: unigrams.net() + bigrams.net(),
            unigrams,
            bigrams,
        }
    }
}

/// Scores one token list. Unigram and bigram contributions are independent, so a
/// token can count once on its own and again inside a bigram.
pub fn poll_score<S: AsRef<str>>(
    tokens: &[S],
    unigrams: &Lexicon,
    bigrams: &Lexicon,
    mode: PollingMode,
) -> Result<PollScore, UnfilteredLexicon> {
    Ok(Poller::new(unigrams, bigrams, None)?.score(tokens, mode))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollingVerdict {
    pub review_id: String,
    pub domain: Domain,
    pub gold: Sentiment,
    pub score: i64,
    pub verdict: Verdict,
    pub matched_unigrams: MatchCounts,
    pub matched_bigrams: MatchCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub total: usize,
    pub correct: usize,
    pub unclassified: usize,
}

impl Tally {
    fn add(&mut self, verdict: &PollingVerdict) {
        self.total += 1;
        match verdict.verdict.sentiment() {
            None => self.unclassified += 1,
            Some(s) if s == verdict.gold => self.correct += 1,
            Some(_) => {}
        }
    }

    pub fn classified(&self) -> usize {
        self.total - self.unclassified
    }

    /// Accuracy over classified reviews only; `None` when nothing was classified.
    pub fn accuracy_pct(&self) -> Option<f64> {
        let classified = self.classified();
        (classified > 0).then(|| 100.0 * self.correct as f64 / classified as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollingReport {
    pub mode: PollingMode,
    pub segmentation: bool,
    pub evaluated_on: EvalScope,
    /// Absent when every review was unclassified.
    pub accuracy_pct: Option<f64>,
    pub unclassified: usize,
    pub total: usize,
    pub correct: usize,
    pub per_domain: BTreeMap<Domain, Tally>,
    pub verdicts: Vec<PollingVerdict>,
}

impl PollingReport {
    pub fn cell(&self) -> PollingCell {
        PollingCell {
            accuracy_pct: self.accuracy_pct,
            unclassified: self.unclassified,
            total: self.total,
        }
    }
}

/// Which reviews a polling run is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    /// Full corpus for pure unigram polling, test split whenever bigrams are used.
    #[default]
    Auto,
    TestSplit,
    FullCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PollingSetup<'a> {
    pub mode: PollingMode,
    pub scope: EvalScope,
    pub segmentation: Option<&'a SegmentationRules>,
}

impl<'a> PollingSetup<'a> {
    pub fn new(mode: PollingMode) -> Self {
        Self {
            mode,
            scope: EvalScope::Auto,
            segmentation: None,
        }
    }

    pub fn scope(mut self, scope: EvalScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn segmented(mut self, rules: Option<&'a SegmentationRules>) -> Self {
        self.segmentation = rules;
        self
    }
}

/// Restricts an annotated bigram lexicon to the bigrams that occur at least
/// `min_count` times in the training side of `split`.
pub fn training_bigram_lexicon(
    bigrams: &Lexicon,
    corpus: &Corpus,
    split: &CorpusSplit,
    min_count: usize,
) -> Lexicon {
    let counts = corpus_bigrams(corpus, ExtractionScope::TrainOnly(split), None);
    bigrams
        .entries()
        .filter(|e| {
            let t = e.ngram.tokens();
            e.ngram.is_bigram() && counts.get(&t[0], &t[1]) >= min_count.max(1)
        })
        .cloned()
        .collect()
}

/// Polls every review in the evaluation set and aggregates accuracy.
///
/// In bigram modes `bigrams` must already be limited to training-split bigrams
/// (see [`training_bigram_lexicon`]) and evaluation runs on the test split.
pub fn evaluate_polling(
    corpus: &Corpus,
    split: Option<&CorpusSplit>,
    unigrams: &Lexicon,
    bigrams: &Lexicon,
    setup: PollingSetup<'_>,
) -> Result<PollingReport, PollingError> {
    let scope = match setup.scope {
        EvalScope::Auto if setup.mode == PollingMode::Unigram => EvalScope::FullCorpus,
        EvalScope::Auto => EvalScope::TestSplit,
        s => s,
    };
    if setup.mode.uses_bigrams() && split.is_none() {
        return Err(PollingError::MissingSplit(setup.mode));
    }
    let reviews: Vec<&Review> = match (scope, split) {
        (EvalScope::TestSplit, Some(split)) => corpus.subset(&split.test_ids).collect(),
        (EvalScope::TestSplit, None) => return Err(PollingError::MissingSplit(setup.mode)),
        _ => corpus.reviews().iter().collect(),
    };
    if reviews.is_empty() {
        return Err(PollingError::EmptyTestSet);
    }

    let poller = Poller::new(unigrams, bigrams, setup.segmentation)?;
    let verdicts: Vec<PollingVerdict> = reviews
        .par_iter()
        .map(|review| {
            let s = poller.score(&review.tokens(), setup.mode);
            PollingVerdict {
                review_id: review.id.clone(),
                domain: review.domain,
                gold: review.gold,
                score: s.score,
                verdict: s.verdict(),
                matched_unigrams: s.unigrams,
                matched_bigrams: s.bigrams,
            }
        })
        .collect();

    let mut overall = Tally::default();
    let mut per_domain: BTreeMap<Domain, Tally> = BTreeMap::new();
    for v in &verdicts {
        overall.add(v);
        per_domain.entry(v.domain).or_default().add(v);
    }
    Ok(PollingReport {
        mode: setup.mode,
        segmentation: setup.segmentation.is_some(),
        evaluated_on: scope,
        accuracy_pct: overall.accuracy_pct(),
        unclassified: overall.unclassified,
        total: overall.total,
        correct: overall.correct,
        per_domain,
        verdicts,
    })
}

/// The four lexicon configurations laid out as table columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollingColumn {
    /// Unigram polling with the pre-existing reference lexicon.
    BaselineUnigram,
    /// Unigram polling with the newly annotated lexicon.
    ResourceUnigram,
    Bigram,
    UnigramPlusBigram,
}

impl PollingColumn {
    pub const ALL: [PollingColumn; 4] = [
        PollingColumn::BaselineUnigram,
        PollingColumn::ResourceUnigram,
        PollingColumn::Bigram,
        PollingColumn::UnigramPlusBigram,
    ];

    pub fn mode(self) -> PollingMode {
        match self {
            PollingColumn::BaselineUnigram | PollingColumn::ResourceUnigram => PollingMode::Unigram,
            PollingColumn::Bigram => PollingMode::Bigram,
            PollingColumn::UnigramPlusBigram => PollingMode::UnigramPlusBigram,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PollingCell {
    pub accuracy_pct: Option<f64>,
    pub unclassified: usize,
    pub total: usize,
}

/// Accuracy and unclassified counts for each column, before and after segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct PollingTable {
    column_names: [String; 4],
    cells: BTreeMap<(bool, PollingColumn), PollingCell>,
}

impl Default for PollingTable {
    fn default() -> Self {
        Self {
            column_names: [
                "Baseline lexicon".into(),
                "Resource lexicon".into(),
                "Bigram".into(),
                "Uni+Bigrams".into(),
            ],
            cells: BTreeMap::new(),
        }
    }
}

impl PollingTable {
    pub const MISSING: &'static str = "—";
    pub const UNDEFINED: &'static str = "n/a";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_column_names(mut self, names: [&str; 4]) -> Self {
        self.column_names = names.map(str::to_owned);
        self
    }

    pub fn insert(&mut self, column: PollingColumn, report: &PollingReport) {
        self.insert_cell(report.segmentation, column, report.cell());
    }

    pub fn insert_cell(&mut self, segmented: bool, column: PollingColumn, cell: PollingCell) {
        self.cells.insert((segmented, column), cell);
    }

    pub fn cell(&self, segmented: bool, column: PollingColumn) -> Option<&PollingCell> {
        self.cells.get(&(segmented, column))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Renders the grid as TSV. `header` lines are emitted first, each prefixed
    /// with `# `.
    pub fn render(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&format!("\t{}\n", self.column_names.join("\t")));
        for (segmented, title) in [(false, "Before Segmentation"), (true, "After Segmentation")] {
            let mut acc = vec![title.to_owned()];
            let mut unc = vec!["Unclassified reviews".to_owned()];
            for column in PollingColumn::ALL {
                match self.cell(segmented, column) {
                    Some(cell) => {
                        acc.push(match cell.accuracy_pct {
                            Some(a) => format!("{a:.2}"),
                            None => Self::UNDEFINED.into(),
                        });
                        unc.push(format!("{}/{}", cell.unclassified, cell.total));
                    }
                    None => {
                        acc.push(Self::MISSING.into());
                        unc.push(Self::MISSING.into());
                    }
                }
            }
            out.push_str(&acc.join("\t"));
            out.push('\n');
            out.push_str(&unc.join("\t"));
            out.push('\n');
        }
        out
    }
}

pub fn emit_polling_table(
    table: &PollingTable,
    header: &[String],
    path: impl AsRef<Path>,
) -> Result<(), PollingError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(table.render(header).as_bytes())?;
    out.flush()?;
    Ok(())
}
