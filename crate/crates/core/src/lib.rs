//! Word-level sentiment lexicons and the experiments built on them.
//!
//! The crate covers the full offline pipeline:
//!
//! * [`corpus`]: JSONL review corpora, tokenization and seeded train/test splits.
//! * [`segmenter`]: rule-based suffix segmentation for agglutinative word forms.
//! * [`lexicon`]: four-label polarity lexicons, dual-annotator adjudication and Cohen's kappa.
//! * [`extraction`]: bigram counting and frequency thresholding for annotation candidates.
//! * [`polling`]: majority-polling classification and its tabular report.
//! * [`vectors`]: averaged word embeddings augmented with polarity-count features.
//! * [`classifiers`]: linear SVM, RBF SVM, random forest, MLP and KNN behind one contract.
//! * [`synthetic`]: seeded generators for planted-signal corpora used in demos and tests.

pub mod classifiers;
pub mod corpus;
pub mod extraction;
pub mod lexicon;
pub mod matching;
pub mod polling;
pub mod segmenter;
pub mod synthetic;
pub mod tsv;
pub mod vectors;

pub use corpus::{Corpus, CorpusSplit, Domain, Review, Sentiment, SplitRatio};
pub use lexicon::{Lexicon, LexiconEntry, Ngram, PolarityLabel};
