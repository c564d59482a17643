//! Labeled review corpora: loading, tokenization and train/test partitioning.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate review id `{0}`")]
    DuplicateId(String),
    #[error("review `{0}` has empty text")]
    EmptyText(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid split ratio `{0}`: must lie strictly between 0 and 1")]
    InvalidRatio(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Document-level gold polarity. The corpora are binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Sentiment {
    pub fn flipped(self) -> Self {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "pos",
            Sentiment::Negative => "neg",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Movie,
    Product,
    Book,
    Other,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Movie => "movie",
            Domain::Product => "product",
            Domain::Book => "book",
            Domain::Other => "other",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled review. On disk this is a JSON object
/// `{"id", "domain", "text", "label"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Review {
    pub id: String,
    pub domain: Domain,
    pub text: String,
    #[serde(rename = "label")]
    pub gold: Sentiment,
}

impl Review {
    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

/// An ordered collection of reviews with unique ids and non-empty texts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    reviews: Vec<Review>,
    label_counts: BTreeMap<Sentiment, usize>,
}

impl Corpus {
    pub fn new(reviews: Vec<Review>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(reviews.len());
        let mut label_counts = BTreeMap::new();
        for review in &reviews {
            if !seen.insert(review.id.as_str()) {
                return Err(CorpusError::DuplicateId(review.id.clone()));
            }
            if review.text.trim().is_empty() {
                return Err(CorpusError::EmptyText(review.id.clone()));
            }
            *label_counts.entry(review.gold).or_insert(0) += 1;
        }
        Ok(Self {
            reviews,
            label_counts,
        })
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn label_counts(&self) -> &BTreeMap<Sentiment, usize> {
        &self.label_counts
    }

    pub fn count(&self, label: Sentiment) -> usize {
        self.label_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn get(&self, id: &str) -> Option<&Review> {
        self.reviews.iter().find(|r| r.id == id)
    }

    /// Reviews whose id is in `ids`, in corpus order.
    pub fn subset<'a>(
        &'a self,
        ids: &'a BTreeSet<String>,
    ) -> impl Iterator<Item = &'a Review> + 'a {
        self.reviews.iter().filter(move |r| ids.contains(&r.id))
    }
}

/// Reads a JSON Lines corpus. Blank lines are skipped; line numbers in errors are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut reviews = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let review: Review =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        if review.text.trim().is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: idx + 1,
                reason: "empty text".into(),
            });
        }
        reviews.push(review);
    }
    Corpus::new(reviews)
}

/// Writes a corpus as JSON Lines.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for review in corpus.reviews() {
        let line = serde_json::to_string(review).expect("review serializes");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Splits NFC-normalized text on whitespace and strips leading and trailing
/// punctuation from each run. Inner punctuation is kept; empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    normalized
        .split_whitespace()
        .map(|run| run.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Train fraction expressed as `train : test` parts, e.g. `7:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    train: u64,
    test: u64,
}

impl SplitRatio {
    pub fn new(train: u64, test: u64) -> Result<Self, CorpusError> {
        if train == 0 || test == 0 {
            return Err(CorpusError::InvalidRatio(format!("{train}:{test}")));
        }
        Ok(Self { train, test })
    }

    pub fn train_fraction(self) -> f64 {
        self.train as f64 / (self.train + self.test) as f64
    }

    /// Size of the training side for `n` items: the test side gets
    /// `floor(n * test / (train + test))` and the remainder goes to train.
    pub fn train_size(self, n: usize) -> usize {
        let whole = self.train + self.test;
        let test = (n as u128 * self.test as u128 / whole as u128) as usize;
        n - test
    }
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self { train: 7, test: 3 }
    }
}

impl fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.train, self.test)
    }
}

impl FromStr for SplitRatio {
    type Err = CorpusError;

    /// Accepts `7:3` or a decimal train fraction such as `0.7`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::InvalidRatio(s.to_owned());
        let s = s.trim();
        if let Some((a, b)) = s.split_once(':') {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Self::new(a, b).map_err(|_| bad());
        }
        let (int_part, frac_part) = s.split_once('.').ok_or_else(bad)?;
        if !int_part.trim_start_matches('0').is_empty()
            || frac_part.is_empty()
            || frac_part.len() > 9
        {
            return Err(bad());
        }
        let numerator: u64 = frac_part.parse().map_err(|_| bad())?;
        let denominator = 10u64.pow(frac_part.len() as u32);
        Self::new(numerator, denominator - numerator).map_err(|_| bad())
    }
}

/// A seeded partition of a corpus into training and test ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    pub ratio: SplitRatio,
    pub seed: u64,
    pub stratified: bool,
}

/// Partitions `corpus` into train and test ids.
///
/// The training side has `ratio.train_size(N)` items. When `stratified`, that
/// total is apportioned across gold labels by largest remainder, so each
/// label's training share is within one item of its proportional quota.
/// Within each group the items are chosen by a ChaCha8 shuffle seeded with `seed`.
pub fn split_corpus(
    corpus: &Corpus,
    ratio: SplitRatio,
    seed: u64,
    stratified: bool,
) -> Result<CorpusSplit, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let n = corpus.len();
    let train_total = ratio.train_size(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let groups: Vec<Vec<&str>> = if stratified {
        [Sentiment::Positive, Sentiment::Negative]
            .iter()
            .map(|label| {
                corpus
                    .reviews()
                    .iter()
                    .filter(|r| r.gold == *label)
                    .map(|r| r.id.as_str())
                    .collect::<Vec<_>>()
            })
            .filter(|g| !g.is_empty())
            .collect()
    } else {
        vec![corpus.reviews().iter().map(|r| r.id.as_str()).collect()]
    };

    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let quotas = apportion(train_total, &sizes, n);

    let mut train_ids = BTreeSet::new();
    let mut test_ids = BTreeSet::new();
    for (mut group, quota) in groups.into_iter().zip(quotas) {
        group.shuffle(&mut rng);
        let (train, test) = group.split_at(quota);
        train_ids.extend(train.iter().map(|s| s.to_string()));
        test_ids.extend(test.iter().map(|s| s.to_string()));
    }

    Ok(CorpusSplit {
        train_ids,
        test_ids,
        ratio,
        seed,
        stratified,
    })
}

/// Largest-remainder apportionment of `seats` over groups of the given sizes
/// (which sum to `population`). Ties go to the earlier group.
fn apportion(seats: usize, sizes: &[usize], population: usize) -> Vec<usize> {
    let pop = population as u128;
    let mut quotas: Vec<usize> = sizes
        .iter()
        .map(|&s| (seats as u128 * s as u128 / pop) as usize)
        .collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(seats as u128 * sizes[i] as u128 % pop));
    for &i in order.iter().take(seats - assigned) {
        quotas[i] += 1;
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn review(id: &str, gold: Sentiment) -> Review {
        Review {
            id: id.into(),
            domain: Domain::Product,
            text: format!("text of {id}"),
            gold,
        }
    }

    fn corpus_of(pos: usize, neg: usize) -> Corpus {
        let mut reviews = Vec::new();
        for i in 0..pos {
            reviews.push(review(&format!("p{i}"), Sentiment::Positive));
        }
        for i in 0..neg {
            reviews.push(review(&format!("n{i}"), Sentiment::Negative));
        }
        Corpus::new(reviews).unwrap()
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_two_line_file() {
        let f = write_lines(&[
            r#"{"id":"r1","domain":"movie","text":"bagundi","label":"pos"}"#,
            r#"{"id":"r2","domain":"book","text":"bagaledu","label":"neg"}"#,
        ]);
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.count(Sentiment::Positive), 1);
        assert_eq!(corpus.count(Sentiment::Negative), 1);
        assert_eq!(corpus.reviews()[0].id, "r1");
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let f = write_lines(&[
            r#"{"id":"r1","domain":"movie","text":"a","label":"pos"}"#,
            r#"{"id":"r1","domain":"movie","text":"b","label":"neg"}"#,
        ]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::DuplicateId(id)) if id == "r1"));
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write_lines(&[
            r#"{"id":"r1","domain":"movie","text":"a","label":"pos"}"#,
            r#"{"id":"r2","domain":"movie","text":"b","label":"neutral"}"#,
        ]);
        match load_corpus(f.path()) {
            Err(CorpusError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_lines(&[r#"{"id":"r1","domain":"movie","text":"  ","label":"pos"}"#]);
        assert!(matches!(
            load_corpus(f.path()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn sentiraama_composition_counts() {
        // 267 movie, 201 product and 200 book reviews; 337 positive and 331 negative.
        let plan = [
            (Domain::Movie, 136, 131),
            (Domain::Product, 101, 100),
            (Domain::Book, 100, 100),
        ];
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for (domain, pos, neg) in plan {
            for i in 0..pos + neg {
                let label = if i < pos { "pos" } else { "neg" };
                writeln!(
                    f,
                    r#"{{"id":"{domain}-{i}","domain":"{domain}","text":"review {i}","label":"{label}"}}"#
                )
                .unwrap();
            }
        }
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.len(), 668);
        assert_eq!(corpus.count(Sentiment::Positive), 337);
        assert_eq!(corpus.count(Sentiment::Negative), 331);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("DhokA ledu!"), vec!["DhokA", "ledu"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  a,  b  "), vec!["a", "b"]);
        assert_eq!(tokenize("\"quoted\" don't ... !"), vec!["quoted", "don't"]);
        // Telugu vowel signs are combining marks, not punctuation.
        assert_eq!(tokenize("బాగుంది।"), vec!["బాగుంది"]);
    }

    #[test]
    fn tokenize_normalizes_to_nfc() {
        let decomposed = "e\u{301}t\u{e9}";
        assert_eq!(tokenize(decomposed), vec!["\u{e9}t\u{e9}"]);
    }

    #[test]
    fn split_ten_items() {
        let corpus = corpus_of(5, 5);
        let split = split_corpus(&corpus, SplitRatio::default(), 1, false).unwrap();
        assert_eq!((split.train_ids.len(), split.test_ids.len()), (7, 3));
        let split = split_corpus(&corpus, SplitRatio::default(), 1, true).unwrap();
        assert_eq!((split.train_ids.len(), split.test_ids.len()), (7, 3));
    }

    #[test]
    fn split_201_items_gives_141_60() {
        let corpus = corpus_of(101, 100);
        for stratified in [false, true] {
            let split = split_corpus(&corpus, SplitRatio::default(), 42, stratified).unwrap();
            assert_eq!(split.train_ids.len(), 141);
            assert_eq!(split.test_ids.len(), 60);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = corpus_of(30, 20);
        let a = split_corpus(&corpus, SplitRatio::default(), 9, true).unwrap();
        let b = split_corpus(&corpus, SplitRatio::default(), 9, true).unwrap();
        assert_eq!(a, b);
        let c = split_corpus(&corpus, SplitRatio::default(), 10, true).unwrap();
        assert_ne!(a.train_ids, c.train_ids);
    }

    #[test]
    fn empty_corpus_cannot_be_split() {
        let corpus = Corpus::default();
        assert!(matches!(
            split_corpus(&corpus, SplitRatio::default(), 0, true),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("7:3".parse::<SplitRatio>().unwrap(), SplitRatio::default());
        assert_eq!("0.7".parse::<SplitRatio>().unwrap().train_size(201), 141);
        assert!("1:0".parse::<SplitRatio>().is_err());
        assert!("1.5".parse::<SplitRatio>().is_err());
        assert!("0.0".parse::<SplitRatio>().is_err());
        assert!("abc".parse::<SplitRatio>().is_err());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn split_partitions_corpus(pos in 0usize..40, neg in 0usize..40, seed in any::<u64>(),
                                   stratified in any::<bool>(), a in 1u64..10, b in 1u64..10) {
            prop_assume!(pos + neg > 0);
            let corpus = corpus_of(pos, neg);
            let ratio = SplitRatio::new(a, b).unwrap();
            let split = split_corpus(&corpus, ratio, seed, stratified).unwrap();
            prop_assert!(split.train_ids.is_disjoint(&split.test_ids));
            prop_assert_eq!(split.train_ids.len() + split.test_ids.len(), corpus.len());
            prop_assert_eq!(split.train_ids.len(), ratio.train_size(corpus.len()));
            if stratified && !split.train_ids.is_empty() {
                let train_pos = split.train_ids.iter().filter(|id| id.starts_with('p')).count();
                let t = split.train_ids.len() as f64;
                let diff = (train_pos as f64 / t - pos as f64 / corpus.len() as f64).abs();
                prop_assert!(diff <= 1.0 / t + 1e-12, "diff {} > 1/{}", diff, t);
            }
        }
    }
}
