//! Document classifiers over feature vectors.
//!
//! Every classifier standardizes features with statistics fit on the training
//! set only, draws all randomness from ChaCha8 streams derived from the spec seed,
//! and returns a serializable [`Model`].

mod compare;
mod forest;
mod kernel_svm;
mod knn;
mod linear_svm;
pub mod mlp;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentiment;

pub use compare::{
    compare_feature_sets, render_comparison_csv, ComparisonReport, ComparisonRow, FeatureSet,
    ReviewFeatures, COMPARISON_CSV_HEADER,
};
pub use forest::{ForestParams, RandomForest};
pub use kernel_svm::{KernelSvm, RbfSvmParams};
pub use knn::{Knn, KnnParams};
pub use linear_svm::{LinearSvm, LinearSvmParams};
pub use mlp::{Mlp, MlpParams};

pub const MODEL_FORMAT: &str = "polarlex-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("training data contains a single class; this classifier needs both labels")]
    SingleClassData,
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature ({row}, {col}) is not finite")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("features, labels and ids disagree on the number of rows")]
    InconsistentLengths,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),
    #[error("unsupported model file: {0}")]
    UnsupportedModel(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows of features with binary labels and review ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<Sentiment>,
    ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<Sentiment>,
        ids: Vec<String>,
    ) -> Result<Self, ClassifierError> {
        if features.len() != labels.len() || features.len() != ids.len() {
            return Err(ClassifierError::InconsistentLengths);
        }
        let dim = features.first().map_or(0, Vec::len);
        for (row, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(ClassifierError::DimensionMismatch {
                    expected: dim,
                    found: f.len(),
                });
            }
            if let Some(col) = f.iter().position(|x| !x.is_finite()) {
                return Err(ClassifierError::NonFiniteFeature { row, col });
            }
        }
        Ok(Self {
            features,
            labels,
            ids,
        })
    }

    /// Builds a dataset with ids `0..N`.
    pub fn unnamed(
        features: Vec<Vec<f64>>,
        labels: Vec<Sentiment>,
    ) -> Result<Self, ClassifierError> {
        let ids = (0..features.len()).map(|i| i.to_string()).collect();
        Self::new(features, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Sentiment] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn has_both_labels(&self) -> bool {
        self.labels.contains(&Sentiment::Positive) && self.labels.contains(&Sentiment::Negative)
    }

    /// Labels as ±1.
    fn signs(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| sign_of(l)).collect()
    }
}

fn sign_of(label: Sentiment) -> f64 {
    match label {
        Sentiment::Positive => 1.0,
        Sentiment::Negative => -1.0,
    }
}

fn label_of(decision: f64) -> Sentiment {
    if decision > 0.0 {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    }
}

/// Per-feature z-scoring. Zero-variance features use a divisor of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Self {
        let dim = features.first().map_or(0, Vec::len);
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in features {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in features {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvm,
    GaussianSvm,
    RandomForest,
    Mlp,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::GaussianSvm,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::GaussianSvm => "gaussian_svm",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Knn => "knn",
        }
    }

    fn needs_both_labels(self) -> bool {
        !matches!(self, ClassifierKind::Knn)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match normalized.as_str() {
            "linear_svm" | "linearsvm" | "svm" => Ok(ClassifierKind::LinearSvm),
            "gaussian_svm" | "gaussiansvm" | "rbf_svm" => Ok(ClassifierKind::GaussianSvm),
            "random_forest" | "randomforest" | "rf" => Ok(ClassifierKind::RandomForest),
            "mlp" | "neural_network" => Ok(ClassifierKind::Mlp),
            "knn" => Ok(ClassifierKind::Knn),
            _ => Err(ClassifierError::UnknownClassifier(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    LinearSvm(LinearSvmParams),
    GaussianSvm(RbfSvmParams),
    RandomForest(ForestParams),
    Mlp(MlpParams),
    Knn(KnnParams),
}

impl Hyperparameters {
    pub fn defaults(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm(Default::default()),
            ClassifierKind::GaussianSvm => Hyperparameters::GaussianSvm(Default::default()),
            ClassifierKind::RandomForest => Hyperparameters::RandomForest(Default::default()),
            ClassifierKind::Mlp => Hyperparameters::Mlp(Default::default()),
            ClassifierKind::Knn => Hyperparameters::Knn(Default::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::LinearSvm(_) => ClassifierKind::LinearSvm,
            Hyperparameters::GaussianSvm(_) => ClassifierKind::GaussianSvm,
            Hyperparameters::RandomForest(_) => ClassifierKind::RandomForest,
            Hyperparameters::Mlp(_) => ClassifierKind::Mlp,
            Hyperparameters::Knn(_) => ClassifierKind::Knn,
        }
    }

    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidHyperparameter(m.to_owned()));
        match self {
            Hyperparameters::LinearSvm(p) => {
                if !(p.lambda > 0.0 && p.lambda.is_finite()) {
                    return bad("linear_svm lambda must be positive");
                }
                if p.epochs == 0 {
                    return bad("linear_svm epochs must be at least 1");
                }
            }
            Hyperparameters::GaussianSvm(p) => {
                if !(p.c > 0.0 && p.c.is_finite()) {
                    return bad("gaussian_svm C must be positive");
                }
                if p.gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
                    return bad("gaussian_svm gamma must be positive");
                }
                if p.max_passes == 0 || p.tolerance.is_nan() || p.tolerance <= 0.0 {
                    return bad("gaussian_svm needs max_passes >= 1 and tolerance > 0");
                }
            }
            Hyperparameters::RandomForest(p) => {
                if p.trees == 0 {
                    return bad("random_forest trees must be at least 1");
                }
                if p.max_depth == 0 {
                    return bad("random_forest max_depth must be at least 1");
                }
                if p.max_features == Some(0) {
                    return bad("random_forest max_features must be at least 1");
                }
                if p.min_samples_split < 2 {
                    return bad("random_forest min_samples_split must be at least 2");
                }
            }
            Hyperparameters::Mlp(p) => {
                if p.hidden == 0 || p.epochs == 0 {
                    return bad("mlp hidden units and epochs must be at least 1");
                }
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return bad("mlp learning_rate must be positive");
                }
            }
            Hyperparameters::Knn(p) => {
                if p.k == 0 {
                    return bad("knn k must be at least 1");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            hyperparameters: Hyperparameters::defaults(kind),
            seed,
        }
    }

    pub fn with(hyperparameters: Hyperparameters, seed: u64) -> Self {
        Self {
            hyperparameters,
            seed,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.hyperparameters.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnedParameters {
    LinearSvm(LinearSvm),
    GaussianSvm(KernelSvm),
    RandomForest(RandomForest),
    Mlp(Mlp),
    Knn(Knn),
}

/// A trained classifier together with its training-set standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub standardizer: Standardizer,
    pub parameters: LearnedParameters,
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self.parameters {
            LearnedParameters::LinearSvm(_) => ClassifierKind::LinearSvm,
            LearnedParameters::GaussianSvm(_) => ClassifierKind::GaussianSvm,
            LearnedParameters::RandomForest(_) => ClassifierKind::RandomForest,
            LearnedParameters::Mlp(_) => ClassifierKind::Mlp,
            LearnedParameters::Knn(_) => ClassifierKind::Knn,
        }
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let model: Model = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(ClassifierError::UnsupportedModel(format!(
                "{} v{}",
                model.format, model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Fits a classifier. Deterministic for a fixed spec and dataset.
pub fn train(spec: &ClassifierSpec, data: &Dataset) -> Result<Model, ClassifierError> {
    spec.hyperparameters.validate()?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if spec.kind().needs_both_labels() && !data.has_both_labels() {
        return Err(ClassifierError::SingleClassData);
    }
    let standardizer = Standardizer::fit(data.features());
    let x: Vec<Vec<f64>> = data
        .features()
        .iter()
        .map(|row| standardizer.transform(row))
        .collect();
    let y = data.signs();
    let parameters = match &spec.hyperparameters {
        Hyperparameters::LinearSvm(p) => {
            LearnedParameters::LinearSvm(LinearSvm::fit(&x, &y, p, spec.seed))
        }
        Hyperparameters::GaussianSvm(p) => {
            LearnedParameters::GaussianSvm(KernelSvm::fit(&x, &y, p, spec.seed))
        }
        Hyperparameters::RandomForest(p) => {
            LearnedParameters::RandomForest(RandomForest::fit(&x, &y, p, spec.seed))
        }
        Hyperparameters::Mlp(p) => LearnedParameters::Mlp(Mlp::fit(&x, &y, p, spec.seed)),
        Hyperparameters::Knn(p) => LearnedParameters::Knn(Knn::fit(x, y, p)),
    };
    Ok(Model {
        format: MODEL_FORMAT.to_owned(),
        version: MODEL_VERSION,
        standardizer,
        parameters,
    })
}

pub fn predict(model: &Model, features: &[f64]) -> Result<Sentiment, ClassifierError> {
    if features.len() != model.dim() {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim(),
            found: features.len(),
        });
    }
    let x = model.standardizer.transform(features);
    Ok(match &model.parameters {
        LearnedParameters::LinearSvm(m) => label_of(m.decision(&x)),
        LearnedParameters::GaussianSvm(m) => label_of(m.decision(&x)),
        LearnedParameters::RandomForest(m) => m.predict(&x),
        LearnedParameters::Mlp(m) => label_of(m.logit(&x)),
        LearnedParameters::Knn(m) => m.predict(&x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassTally {
    pub total: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy_pct: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: BTreeMap<Sentiment, ClassTally>,
}

pub fn evaluate(model: &Model, test: &Dataset) -> Result<Evaluation, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    let mut per_class: BTreeMap<Sentiment, ClassTally> = BTreeMap::new();
    let mut correct = 0;
    for (x, &gold) in test.features().iter().zip(test.labels()) {
        let hit = predict(model, x)? == gold;
        let tally = per_class.entry(gold).or_default();
        tally.total += 1;
        if hit {
            tally.correct += 1;
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy_pct: 100.0 * correct as f64 / test.len() as f64,
        correct,
        total: test.len(),
        per_class,
    })
}
