//! Document vectors: averaged word embeddings plus polarity-count features.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::matching::{PolarityMatcher, UnfilteredLexicon};

/// Names of the four polarity-count features, in tail order.
pub const TAIL_FEATURES: [&str; 4] = ["pos_uni", "neg_uni", "pos_bi", "neg_bi"];

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number `{value}`")]
    InvalidNumber { line: usize, value: String },
    #[error("header declares {declared} vectors but the file holds {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    UnfilteredLexicon(#[from] UnfilteredLexicon),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Inserts a vector, returning the previous one for the token. Panics if the
    /// length differs from the table dimension.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Option<Vec<f64>> {
        assert_eq!(
            vector.len(),
            self.dim,
            "embedding length must equal table dim"
        );
        self.vectors.insert(token.into(), vector)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }
}

/// Result of reading an embedding file; `duplicates` lists tokens that appeared
/// more than once (the last occurrence is kept).
#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    pub duplicates: Vec<String>,
}

/// Parses the word2vec text format: a `count dim` header, then `token v1 .. v_dim` rows.
pub fn parse_embeddings(reader: impl BufRead) -> Result<LoadedEmbeddings, VectorError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| VectorError::MalformedHeader("empty file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match parts.as_slice() {
        [c, d] => (
            c.parse::<usize>()
                .map_err(|_| VectorError::MalformedHeader(header.clone()))?,
            d.parse::<usize>()
                .map_err(|_| VectorError::MalformedHeader(header.clone()))?,
        ),
        _ => return Err(VectorError::MalformedHeader(header.clone())),
    };
    if dim == 0 {
        return Err(VectorError::MalformedHeader(header));
    }

    let mut table = EmbeddingTable::new(dim);
    let mut duplicates = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-blank line has a field");
        let values = fields
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| VectorError::InvalidNumber {
                        line: lineno,
                        value: v.to_owned(),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dim {
            return Err(VectorError::DimensionMismatch {
                line: lineno,
                expected: dim,
                found: values.len(),
            });
        }
        rows += 1;
        if table.insert(token, values).is_some() {
            log::warn!("duplicate embedding for `{token}` on line {lineno}; keeping the last one");
            duplicates.push(token.to_owned());
        }
    }
    if rows != count {
        return Err(VectorError::CountMismatch {
            declared: count,
            found: rows,
        });
    }
    Ok(LoadedEmbeddings { table, duplicates })
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<LoadedEmbeddings, VectorError> {
    parse_embeddings(BufReader::new(File::open(path)?))
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<(), VectorError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{} {}", table.len(), table.dim())?;
    let mut tokens: Vec<&String> = table.vectors.keys().collect();
    tokens.sort();
    for token in tokens {
        write!(out, "{token}")?;
        for v in &table.vectors[token] {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub values: Vec<f64>,
    pub oov: usize,
}

/// Mean of the vectors of in-vocabulary tokens. Out-of-vocabulary tokens are
/// skipped and counted; a review with no known token maps to the zero vector.
pub fn doc_vector<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> DocVector {
    let mut sum = vec![0.0; table.dim()];
    let mut known = 0usize;
    for token in tokens {
        if let Some(v) = table.get(token.as_ref()) {
            known += 1;
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
    }
    if known > 0 {
        let n = known as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    DocVector {
        values: sum,
        oov: tokens.len() - known,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layout", content = "dim", rename_all = "snake_case")]
pub enum FeatureLayout {
    Plain(usize),
    /// Embedding head of the given dim followed by the four polarity counts.
    Augmented(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    pub fn plain(values: Vec<f64>) -> Self {
        let dim = values.len();
        Self {
            values,
            layout: FeatureLayout::Plain(dim),
        }
    }

    pub fn head(&self) -> &[f64] {
        match self.layout {
            FeatureLayout::Plain(d) | FeatureLayout::Augmented(d) => &self.values[..d],
        }
    }

    pub fn tail(&self) -> Option<&[f64]> {
        match self.layout {
            FeatureLayout::Plain(_) => None,
            FeatureLayout::Augmented(d) => Some(&self.values[d..]),
        }
    }
}

/// How the polarity counts are scaled before being appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailScaling {
    #[default]
    Raw,
    /// Divide each count by the number of tokens in the review.
    PerToken,
}

/// Precomputed matchers for augmenting many documents with the same lexicons.
#[derive(Debug, Clone)]
pub struct Augmenter {
    unigrams: PolarityMatcher,
    bigrams: PolarityMatcher,
    scaling: TailScaling,
}

impl Augmenter {
    pub fn new(unigrams: &Lexicon, bigrams: &Lexicon) -> Result<Self, UnfilteredLexicon> {
        Ok(Self {
            unigrams: PolarityMatcher::new(unigrams, None)?,
            bigrams: PolarityMatcher::new(bigrams, None)?,
            scaling: TailScaling::Raw,
        })
    }

    pub fn scaling(mut self, scaling: TailScaling) -> Self {
        self.scaling = scaling;
        self
    }

    /// `[pos_uni, neg_uni, pos_bi, neg_bi]` for a token list.
    pub fn tail<S: AsRef<str>>(&self, tokens: &[S]) -> [f64; 4] {
        let u = self.unigrams.count(tokens);
        let b = self.bigrams.count(tokens);
        let raw = [u.positive, u.negative, b.positive, b.negative].map(|c| c as f64);
        match self.scaling {
            TailScaling::Raw => raw,
            TailScaling::PerToken if tokens.is_empty() => raw,
            TailScaling::PerToken => raw.map(|c| c / tokens.len() as f64),
        }
    }

    pub fn augment<S: AsRef<str>>(&self, doc_vec: &[f64], tokens: &[S]) -> FeatureVector {
        let mut values = doc_vec.to_vec();
        values.extend(self.tail(tokens));
        FeatureVector {
            values,
            layout: FeatureLayout::Augmented(doc_vec.len()),
        }
    }
}

/// Appends the four polarity-match counts to a document vector. Counts use the
/// same matching rules as majority polling.
pub fn augment<S: AsRef<str>>(
    doc_vec: &[f64],
    tokens: &[S],
    unigrams: &Lexicon,
    bigrams: &Lexicon,
) -> Result<FeatureVector, UnfilteredLexicon> {
    Ok(Augmenter::new(unigrams, bigrams)?.augment(doc_vec, tokens))
}

/// Writes a feature matrix as TSV: `id`, `label`, `e0..e{d-1}` and, for augmented
/// rows, the four tail feature names.
pub fn write_feature_matrix(
    rows: &[(String, String, FeatureVector)],
    mut out: impl Write,
) -> Result<(), VectorError> {
    let Some((_, _, first)) = rows.first() else {
        writeln!(out, "id\tlabel")?;
        return Ok(());
    };
    let dim = first.head().len();
    let mut header = vec!["id".to_owned(), "label".to_owned()];
    header.extend((0..dim).map(|i| format!("e{i}")));
    if first.tail().is_some() {
        header.extend(TAIL_FEATURES.iter().map(|s| s.to_string()));
    }
    writeln!(out, "{}", header.join("\t"))?;
    for (id, label, fv) in rows {
        if fv.layout != first.layout {
            return Err(VectorError::DimensionMismatch {
                line: 0,
                expected: first.values.len(),
                found: fv.values.len(),
            });
        }
        write!(out, "{}\t{}", crate::tsv::escape(id), label)?;
        for v in &fv.values {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
