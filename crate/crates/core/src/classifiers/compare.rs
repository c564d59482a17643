use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, train, ClassifierError, ClassifierKind, ClassifierSpec, Dataset};
use crate::corpus::{Corpus, CorpusSplit, Sentiment};
use crate::vectors::{doc_vector, Augmenter, EmbeddingTable};

/// Which polarity counts are appended to the averaged embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Plain,
    Unigram,
    Bigram,
    UnigramBigram,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Plain,
        FeatureSet::Unigram,
        FeatureSet::Bigram,
        FeatureSet::UnigramBigram,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Plain => "plain",
            FeatureSet::Unigram => "+uni",
            FeatureSet::Bigram => "+bi",
            FeatureSet::UnigramBigram => "+uni+bi",
        }
    }

    /// Indices into `[pos_uni, neg_uni, pos_bi, neg_bi]`.
    fn tail_columns(self) -> &'static [usize] {
        match self {
            FeatureSet::Plain => &[],
            FeatureSet::Unigram => &[0, 1],
            FeatureSet::Bigram => &[2, 3],
            FeatureSet::UnigramBigram => &[0, 1, 2, 3],
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| format!("unknown feature set `{s}`"))
    }
}

/// Averaged embedding and polarity counts for one review.
#[derive(Debug, Clone, PartialEq)]
pub struct ReviewFeatures {
    pub id: String,
    pub label: Sentiment,
    pub embedding: Vec<f64>,
    pub tail: [f64; 4],
}

impl ReviewFeatures {
    pub fn from_corpus(
        corpus: &Corpus,
        table: &EmbeddingTable,
        augmenter: &Augmenter,
    ) -> Vec<Self> {
        corpus
            .reviews()
            .par_iter()
            .map(|r| {
                let tokens = r.tokens();
                ReviewFeatures {
                    id: r.id.clone(),
                    label: r.gold,
                    embedding: doc_vector(&tokens, table).values,
                    tail: augmenter.tail(&tokens),
                }
            })
            .collect()
    }

    pub fn row(&self, set: FeatureSet) -> Vec<f64> {
        let mut v = self.embedding.clone();
        v.extend(set.tail_columns().iter().map(|&i| self.tail[i]));
        v
    }
}

fn dataset<'a>(
    rows: impl Iterator<Item = &'a ReviewFeatures>,
    set: FeatureSet,
) -> Result<Dataset, ClassifierError> {
    let (mut x, mut y, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        x.push(r.row(set));
        y.push(r.label);
        ids.push(r.id.clone());
    }
    Dataset::new(x, y, ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub accuracy_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn accuracy(&self, classifier: ClassifierKind, set: FeatureSet) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.classifier == classifier && r.feature_set == set)
            .map(|r| r.accuracy_pct)
    }
}

/// Trains every spec on every feature set over the training side of `split` and
/// scores it on the test side. Rows come out in spec order, then feature-set order.
pub fn compare_feature_sets(
    features: &[ReviewFeatures],
    split: &CorpusSplit,
    specs: &[ClassifierSpec],
) -> Result<ComparisonReport, ClassifierError> {
    let jobs: Vec<(&ClassifierSpec, FeatureSet)> = specs
        .iter()
        .flat_map(|s| FeatureSet::ALL.into_iter().map(move |f| (s, f)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(spec, set)| {
            let train_set = dataset(
                features.iter().filter(|r| split.train_ids.contains(&r.id)),
                set,
            )?;
            let test_set = dataset(
                features.iter().filter(|r| split.test_ids.contains(&r.id)),
                set,
            )?;
            let model = train(spec, &train_set)?;
            Ok(ComparisonRow {
                classifier: spec.kind(),
                feature_set: set,
                accuracy_pct: evaluate(&model, &test_set)?.accuracy_pct,
            })
        })
        .collect::<Result<Vec<_>, ClassifierError>>()?;
    Ok(ComparisonReport { rows })
}

pub const COMPARISON_CSV_HEADER: &str = "classifier,feature_set,accuracy_pct";

pub fn render_comparison_csv(report: &ComparisonReport) -> String {
    let mut out = format!("{COMPARISON_CSV_HEADER}\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{:.4}\n",
            r.classifier, r.feature_set, r.accuracy_pct
        ));
    }
    out
}
