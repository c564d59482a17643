//! Four-label polarity lexicons over unigrams and bigrams.
//!
//! Also home to the annotation vocabulary ([`Judgment`], [`AnnotationRecord`]),
//! seniority-based adjudication and Cohen's kappa.

mod adjudication;
mod kappa;
mod records;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tsv;

pub use adjudication::{adjudicate, AdjudicationError, AdjudicationOutcome};
pub use kappa::{
    cohen_kappa, kappa_from_indices, CategoryOrder, ContingencyTable, KappaError, KappaOptions,
    KappaReport, Weighting,
};
pub use records::{
    dual_judgments, pair_sheets, parse_annotation_log, parse_judgment_sheet, render_annotation_log,
    DualJudgment, RecordsError,
};

pub const LEXICON_HEADER: &str = "ngram\tlabel\tprovenance\tgloss";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("unknown polarity label `{0}`")]
    UnknownLabel(String),
    #[error("unknown provenance `{0}`")]
    UnknownProvenance(String),
    #[error("invalid n-gram `{0}`: expected 1 or 2 non-empty whitespace-free tokens")]
    InvalidNgram(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown label `{label}`")]
    UnknownLabelAt { line: usize, label: String },
    #[error("line {line}: duplicate n-gram `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolarityLabel {
    Positive,
    Negative,
    Neutral,
    Ambiguous,
}

impl PolarityLabel {
    pub const ALL: [PolarityLabel; 4] = [
        PolarityLabel::Positive,
        PolarityLabel::Negative,
        PolarityLabel::Neutral,
        PolarityLabel::Ambiguous,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PolarityLabel::Positive => "pos",
            PolarityLabel::Negative => "neg",
            PolarityLabel::Neutral => "neu",
            PolarityLabel::Ambiguous => "amb",
        }
    }

    pub fn is_polar(self) -> bool {
        matches!(self, PolarityLabel::Positive | PolarityLabel::Negative)
    }

    /// Swaps Positive and Negative; Neutral and Ambiguous are fixed.
    pub fn inverted(self) -> Self {
        match self {
            PolarityLabel::Positive => PolarityLabel::Negative,
            PolarityLabel::Negative => PolarityLabel::Positive,
            other => other,
        }
    }
}

impl fmt::Display for PolarityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PolarityLabel {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos" => Ok(PolarityLabel::Positive),
            "neg" => Ok(PolarityLabel::Negative),
            "neu" => Ok(PolarityLabel::Neutral),
            "amb" => Ok(PolarityLabel::Ambiguous),
            other => Err(LexiconError::UnknownLabel(other.to_owned())),
        }
    }
}

impl Serialize for PolarityLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for PolarityLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a single annotator said about an item: a label, or that they could not decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Judgment {
    Label(PolarityLabel),
    Uncertain,
}

impl Judgment {
    pub fn code(self) -> &'static str {
        match self {
            Judgment::Label(l) => l.code(),
            Judgment::Uncertain => "uncertain",
        }
    }

    pub fn label(self) -> Option<PolarityLabel> {
        match self {
            Judgment::Label(l) => Some(l),
            Judgment::Uncertain => None,
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Judgment {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "uncertain" {
            Ok(Judgment::Uncertain)
        } else {
            s.parse().map(Judgment::Label)
        }
    }
}

impl Serialize for Judgment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Judgment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An annotator; a lower `experience_rank` means more senior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotator {
    pub id: String,
    pub experience_rank: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub annotator_id: String,
    pub judgment: Judgment,
    pub timestamp: i64,
    #[serde(default = "first_round")]
    pub round: u32,
}

fn first_round() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    SentiWordNet,
    OntoSenseNet,
    #[serde(rename = "bigram")]
    BigramExtraction,
    Manual,
}

impl Provenance {
    pub fn code(self) -> &'static str {
        match self {
            Provenance::SentiWordNet => "sentiwordnet",
            Provenance::OntoSenseNet => "ontosensenet",
            Provenance::BigramExtraction => "bigram",
            Provenance::Manual => "manual",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Provenance {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentiwordnet" => Ok(Provenance::SentiWordNet),
            "ontosensenet" => Ok(Provenance::OntoSenseNet),
            "bigram" => Ok(Provenance::BigramExtraction),
            "manual" => Ok(Provenance::Manual),
            other => Err(LexiconError::UnknownProvenance(other.to_owned())),
        }
    }
}

/// A unigram or bigram. Tokens are non-empty and contain no whitespace, so the
/// space-joined key round-trips to the tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ngram(Vec<String>);

impl Ngram {
    pub fn new<I, S>(tokens: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let valid = (1..=2).contains(&tokens.len())
            && tokens
                .iter()
                .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace));
        if valid {
            Ok(Self(tokens))
        } else {
            Err(LexiconError::InvalidNgram(tokens.join(" ")))
        }
    }

    /// Parses a key: tokens separated by single spaces.
    pub fn from_key(key: &str) -> Result<Self, LexiconError> {
        let tokens: Vec<&str> = key.split(' ').collect();
        Self::new(tokens).map_err(|_| LexiconError::InvalidNgram(key.to_owned()))
    }

    pub fn key(&self) -> String {
        self.0.join(" ")
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_bigram(&self) -> bool {
        self.0.len() == 2
    }
}

impl TryFrom<String> for Ngram {
    type Error = LexiconError;

    fn try_from(key: String) -> Result<Self, Self::Error> {
        Self::from_key(&key)
    }
}

impl From<Ngram> for String {
    fn from(ngram: Ngram) -> Self {
        ngram.key()
    }
}

impl fmt::Display for Ngram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub ngram: Ngram,
    pub label: PolarityLabel,
    pub provenance: Provenance,
    pub gloss: Option<String>,
}

impl LexiconEntry {
    /// An empty gloss is stored as `None`.
    pub fn new(
        ngram: Ngram,
        label: PolarityLabel,
        provenance: Provenance,
        gloss: Option<String>,
    ) -> Self {
        Self {
            ngram,
            label,
            provenance,
            gloss: gloss.filter(|g| !g.is_empty()),
        }
    }
}

/// Lexicon entries keyed by their space-joined n-gram.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry, replacing and returning any entry with the same key.
    pub fn insert(&mut self, entry: LexiconEntry) -> Option<LexiconEntry> {
        self.entries.insert(entry.ngram.key(), entry)
    }

    /// Convenience for building lexicons in code: `key` is a space-joined n-gram.
    pub fn with(mut self, key: &str, label: PolarityLabel) -> Self {
        let ngram = Ngram::from_key(key).expect("valid n-gram key");
        let provenance = if ngram.is_bigram() {
            Provenance::BigramExtraction
        } else {
            Provenance::Manual
        };
        self.insert(LexiconEntry::new(ngram, label, provenance, None));
        self
    }

    pub fn get(&self, key: &str) -> Option<&LexiconEntry> {
        self.entries.get(key)
    }

    pub fn label_of(&self, key: &str) -> Option<PolarityLabel> {
        self.entries.get(key).map(|e| e.label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn is_polar(&self) -> bool {
        self.entries().all(|e| e.label.is_polar())
    }

    /// Entries whose n-gram has `n` tokens.
    pub fn of_order(&self, n: usize) -> Lexicon {
        self.entries()
            .filter(|e| e.ngram.len() == n)
            .cloned()
            .collect()
    }

    /// Copy with Positive and Negative swapped on every entry.
    pub fn inverted(&self) -> Lexicon {
        self.entries()
            .map(|e| LexiconEntry {
                label: e.label.inverted(),
                ..e.clone()
            })
            .collect()
    }

    /// Union; entries of `other` win on key collisions.
    pub fn merged(&self, other: &Lexicon) -> Lexicon {
        let mut out = self.clone();
        for e in other.entries() {
            out.insert(e.clone());
        }
        out
    }
}

impl FromIterator<LexiconEntry> for Lexicon {
    fn from_iter<I: IntoIterator<Item = LexiconEntry>>(iter: I) -> Self {
        let mut lexicon = Lexicon::new();
        for e in iter {
            lexicon.insert(e);
        }
        lexicon
    }
}

/// Keeps only the Positive and Negative entries.
pub fn filter_polar(lexicon: &Lexicon) -> Lexicon {
    lexicon
        .entries()
        .filter(|e| e.label.is_polar())
        .cloned()
        .collect()
}

/// Label counts of a lexicon, laid out like a row of a label-distribution table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
    pub ambiguous: usize,
}

impl LabelDistribution {
    pub const HEADER: &'static str = "Resource\tPositive\tNegative\tNeutral\tAmbiguous\tTotal";

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral + self.ambiguous
    }

    pub fn count(&self, label: PolarityLabel) -> usize {
        match label {
            PolarityLabel::Positive => self.positive,
            PolarityLabel::Negative => self.negative,
            PolarityLabel::Neutral => self.neutral,
            PolarityLabel::Ambiguous => self.ambiguous,
        }
    }

    /// One tab-separated table row, prefixed with the resource name.
    pub fn row(&self, resource: &str) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            tsv::escape(resource),
            self.positive,
            self.negative,
            self.neutral,
            self.ambiguous,
            self.total()
        )
    }
}

pub fn lexicon_stats(lexicon: &Lexicon) -> LabelDistribution {
    let mut d = LabelDistribution::default();
    for e in lexicon.entries() {
        match e.label {
            PolarityLabel::Positive => d.positive += 1,
            PolarityLabel::Negative => d.negative += 1,
            PolarityLabel::Neutral => d.neutral += 1,
            PolarityLabel::Ambiguous => d.ambiguous += 1,
        }
    }
    d
}

/// Renders a label-distribution table: header plus one row per named resource.
pub fn render_stats_table(rows: &[(String, LabelDistribution)]) -> String {
    let mut out = String::from(LabelDistribution::HEADER);
    out.push('\n');
    for (name, dist) in rows {
        out.push_str(&dist.row(name));
        out.push('\n');
    }
    out
}

/// Parses lexicon TSV text. The header line is optional; blank lines are skipped.
pub fn parse_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    let mut lexicon = Lexicon::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || (idx == 0 && raw == LEXICON_HEADER) {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(LexiconError::MalformedRow {
                line,
                reason: format!("expected 3 or 4 columns, found {}", fields.len()),
            });
        }
        let ngram = Ngram::from_key(fields[0]).map_err(|e| LexiconError::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        let label: PolarityLabel = fields[1]
            .parse()
            .map_err(|_| LexiconError::UnknownLabelAt {
                line,
                label: fields[1].to_owned(),
            })?;
        let provenance: Provenance =
            fields[2]
                .parse()
                .map_err(|e: LexiconError| LexiconError::MalformedRow {
                    line,
                    reason: e.to_string(),
                })?;
        let gloss = fields.get(3).map(|g| tsv::unescape(g));
        let key = ngram.key();
        if lexicon
            .insert(LexiconEntry::new(ngram, label, provenance, gloss))
            .is_some()
        {
            return Err(LexiconError::DuplicateKey { line, key });
        }
    }
    Ok(lexicon)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let mut text = String::new();
    for line in BufReader::new(File::open(path)?).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_lexicon(&text)
}

/// Serializes to TSV with a header line, entries in key order.
pub fn render_lexicon(lexicon: &Lexicon) -> String {
    let mut out = String::from(LEXICON_HEADER);
    out.push('\n');
    for e in lexicon.entries() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            e.ngram.key(),
            e.label,
            e.provenance,
            e.gloss.as_deref().map(tsv::escape).unwrap_or_default()
        ));
    }
    out
}

pub fn save_lexicon(lexicon: &Lexicon, path: impl AsRef<Path>) -> Result<(), LexiconError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(render_lexicon(lexicon).as_bytes())?;
    out.flush()?;
    Ok(())
}
