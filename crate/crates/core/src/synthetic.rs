//! Seeded generators for corpora, lexicons and feature data with known structure.
//!
//! Used by the test suites and to build the bundled demo data. Token spellings are
//! ASCII transliterations so the output is easy to inspect.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::Dataset;
use crate::corpus::{Corpus, Domain, Review, Sentiment};
use crate::lexicon::{Lexicon, PolarityLabel};
use crate::vectors::EmbeddingTable;

const DOMAINS: [Domain; 3] = [Domain::Movie, Domain::Product, Domain::Book];

fn label_for(i: usize) -> Sentiment {
    if i.is_multiple_of(2) {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    }
}

fn filler_vocab(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("padam{i:03}")).collect()
}

fn review(id: usize, gold: Sentiment, tokens: &[String]) -> Review {
    Review {
        id: format!("r{id:04}"),
        domain: DOMAINS[id % DOMAINS.len()],
        text: tokens.join(" "),
        gold,
    }
}

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub reviews: usize,
    /// Half positive, half negative.
    pub planted_words: usize,
    /// Probability that a planted word agrees with the review label.
    pub consistency: f64,
    pub planted_per_review: usize,
    pub filler_vocab: usize,
    pub filler_per_review: usize,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            reviews: 200,
            planted_words: 20,
            consistency: 0.95,
            planted_per_review: 20,
            filler_vocab: 300,
            filler_per_review: 12,
        }
    }
}

/// A corpus whose only sentiment signal is a set of planted words, and the
/// lexicon listing exactly those words.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub lexicon: Lexicon,
}

pub fn planted_corpus(config: &PlantedConfig, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (config.planted_words / 2).max(1);
    let positive: Vec<String> = (0..half).map(|i| format!("manchi{i:02}")).collect();
    let negative: Vec<String> = (0..half).map(|i| format!("chedu{i:02}")).collect();
    let filler = filler_vocab(config.filler_vocab);
    let mut reviews = Vec::with_capacity(config.reviews);
    for i in 0..config.reviews {
        let gold = label_for(i);
        let mut tokens: Vec<String> = (0..config.filler_per_review)
            .map(|_| filler.choose(&mut rng).unwrap().clone())
            .collect();
        for _ in 0..config.planted_per_review {
            let agrees = rng.gen_bool(config.consistency);
            let positive_word = (gold == Sentiment::Positive) == agrees;
            let pool = if positive_word { &positive } else { &negative };
            let word = pool.choose(&mut rng).unwrap().clone();
            let at = rng.gen_range(0..=tokens.len());
            tokens.insert(at, word);
        }
        reviews.push(review(i, gold, &tokens));
    }
    let mut lexicon = Lexicon::new();
    for w in &positive {
        lexicon = lexicon.with(w, PolarityLabel::Positive);
    }
    for w in &negative {
        lexicon = lexicon.with(w, PolarityLabel::Negative);
    }
    PlantedCorpus {
        corpus: Corpus::new(reviews).expect("generated corpus is valid"),
        lexicon,
    }
}

/// Reviews whose polarity word is negated by a following particle about half of
/// the time, with unigram and bigram lexicons that know the flip.
#[derive(Debug, Clone)]
pub struct FlipCorpus {
    pub corpus: Corpus,
    pub unigrams: Lexicon,
    pub bigrams: Lexicon,
}

pub const NEGATOR: &str = "ledu";

pub fn bigram_flip_corpus(reviews: usize, flip_rate: f64, seed: u64) -> FlipCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive = ["bagundi", "adbhutam", "santosham", "nachindi"];
    let negative = ["DhokA", "worst", "boring", "kopam"];
    let filler = filler_vocab(120);
    let mut out = Vec::with_capacity(reviews);
    for i in 0..reviews {
        let gold = label_for(i);
        let flipped = rng.gen_bool(flip_rate);
        let surface_positive = (gold == Sentiment::Positive) != flipped;
        let pool: &[&str] = if surface_positive {
            &positive
        } else {
            &negative
        };
        let mut tokens: Vec<String> = (0..8)
            .map(|_| filler.choose(&mut rng).unwrap().clone())
            .collect();
        let at = rng.gen_range(0..=tokens.len());
        let mut phrase = vec![pool.choose(&mut rng).unwrap().to_string()];
        if flipped {
            phrase.push(NEGATOR.to_owned());
        }
        tokens.splice(at..at, phrase);
        out.push(review(i, gold, &tokens));
    }
    let mut unigrams = Lexicon::new();
    let mut bigrams = Lexicon::new();
    for w in positive {
        unigrams = unigrams.with(w, PolarityLabel::Positive);
        bigrams = bigrams.with(&format!("{w} {NEGATOR}"), PolarityLabel::Negative);
    }
    for w in negative {
        unigrams = unigrams.with(w, PolarityLabel::Negative);
        bigrams = bigrams.with(&format!("{w} {NEGATOR}"), PolarityLabel::Positive);
    }
    FlipCorpus {
        corpus: Corpus::new(out).expect("generated corpus is valid"),
        unigrams,
        bigrams,
    }
}

/// Reviews whose embedding average carries no label information while lexicon
/// matches do. Polar words are left out of the embedding table.
#[derive(Debug, Clone)]
pub struct TailSignalCorpus {
    pub corpus: Corpus,
    pub embeddings: EmbeddingTable,
    pub unigrams: Lexicon,
    pub bigrams: Lexicon,
}

pub fn tail_signal_corpus(reviews: usize, dim: usize, seed: u64) -> TailSignalCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = filler_vocab(200);
    let mut embeddings = EmbeddingTable::new(dim);
    for w in &filler {
        embeddings.insert(
            w.clone(),
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
    }
    let pos_words = ["bagundi", "adbhutam", "manchidi"];
    let neg_words = ["worst", "boring", "chettadi"];
    let pos_pair = ["chala", "istam"];
    let neg_pair = ["asalu", "baledu"];
    let mut out = Vec::with_capacity(reviews);
    for i in 0..reviews {
        let gold = label_for(i);
        let mut tokens: Vec<String> = (0..15)
            .map(|_| filler.choose(&mut rng).unwrap().clone())
            .collect();
        for _ in 0..2 {
            let agrees = rng.gen_bool(0.85);
            let positive = (gold == Sentiment::Positive) == agrees;
            let at = rng.gen_range(0..=tokens.len());
            let inserted: Vec<String> = if rng.gen_bool(0.5) {
                let pool = if positive { &pos_words } else { &neg_words };
                vec![pool.choose(&mut rng).unwrap().to_string()]
            } else {
                let pair = if positive { pos_pair } else { neg_pair };
                pair.iter().map(|s| s.to_string()).collect()
            };
            tokens.splice(at..at, inserted);
        }
        out.push(review(i, gold, &tokens));
    }
    let mut unigrams = Lexicon::new();
    for w in pos_words {
        unigrams = unigrams.with(w, PolarityLabel::Positive);
    }
    for w in neg_words {
        unigrams = unigrams.with(w, PolarityLabel::Negative);
    }
    let bigrams = Lexicon::new()
        .with(&pos_pair.join(" "), PolarityLabel::Positive)
        .with(&neg_pair.join(" "), PolarityLabel::Negative);
    TailSignalCorpus {
        corpus: Corpus::new(out).expect("generated corpus is valid"),
        embeddings,
        unigrams,
        bigrams,
    }
}

/// Romanized suffix rules matching the inflections used by [`demo_bundle`],
/// followed by the same case markers in Telugu script.
pub const DEMO_SUFFIX_RULES: &str = "# suffix\tmin_stem_length\tpriority
# romanized case markers
lonu\t3\t0
lo\t3\t1
ki\t3\t1
tho\t3\t1
ni\t3\t1
ga\t3\t1
# Telugu script
లోను\t2\t0
లో\t2\t1
కి\t2\t1
తో\t2\t1
ని\t2\t1
గా\t2\t1
";

const DEMO_SUFFIXES: [&str; 5] = ["lo", "ki", "tho", "ni", "ga"];

/// Everything the command-line pipeline needs: a corpus with inflected and
/// negated polar words, reference and annotated lexicons, embeddings and rules.
#[derive(Debug, Clone)]
pub struct DemoBundle {
    pub corpus: Corpus,
    pub baseline: Lexicon,
    pub lexicon: Lexicon,
    pub bigrams: Lexicon,
    pub embeddings: EmbeddingTable,
}

pub fn demo_bundle(reviews: usize, dim: usize, seed: u64) -> DemoBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive = [
        "bagundi",
        "adbhutam",
        "santosham",
        "nachindi",
        "manchidi",
        "andamaina",
    ];
    let negative = ["DhokA", "worst", "boring", "kopam", "chettadi", "kashtam"];
    let neutral = ["cinema", "pustakam", "vastuvu"];
    let ambiguous = ["tappakunda", "kotha"];
    let mut filler = filler_vocab(150);
    filler.extend(neutral.iter().chain(&ambiguous).map(|w| w.to_string()));

    let mut embeddings = EmbeddingTable::new(dim);
    for w in filler.iter().map(String::as_str).chain([NEGATOR]) {
        embeddings.insert(w, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }

    let mut out = Vec::with_capacity(reviews);
    for i in 0..reviews {
        let gold = label_for(i);
        let mut units: Vec<Vec<String>> = (0..10)
            .map(|_| {
                let w = filler.choose(&mut rng).unwrap().clone();
                if rng.gen_bool(0.2) {
                    vec![w + DEMO_SUFFIXES.choose(&mut rng).unwrap()]
                } else {
                    vec![w]
                }
            })
            .collect();
        for _ in 0..4 {
            let agrees = rng.gen_bool(0.85);
            let intended_positive = (gold == Sentiment::Positive) == agrees;
            let roll: f64 = rng.gen();
            let negated = roll < 0.25;
            let surface_positive = intended_positive != negated;
            let pool = if surface_positive {
                &positive
            } else {
                &negative
            };
            let stem = pool.choose(&mut rng).unwrap().to_string();
            units.push(if negated {
                vec![stem, NEGATOR.to_owned()]
            } else if roll < 0.6 {
                vec![stem + DEMO_SUFFIXES.choose(&mut rng).unwrap()]
            } else {
                vec![stem]
            });
        }
        units.shuffle(&mut rng);
        let tokens: Vec<String> = units.concat();
        out.push(review(i, gold, &tokens));
    }

    let mut lexicon = Lexicon::new();
    let mut bigrams = Lexicon::new();
    for w in positive {
        lexicon = lexicon.with(w, PolarityLabel::Positive);
        bigrams = bigrams.with(&format!("{w} {NEGATOR}"), PolarityLabel::Negative);
    }
    for w in negative {
        lexicon = lexicon.with(w, PolarityLabel::Negative);
        bigrams = bigrams.with(&format!("{w} {NEGATOR}"), PolarityLabel::Positive);
    }
    for w in neutral {
        lexicon = lexicon.with(w, PolarityLabel::Neutral);
    }
    for w in ambiguous {
        lexicon = lexicon.with(w, PolarityLabel::Ambiguous);
    }
    bigrams = bigrams.with("cinema ledu", PolarityLabel::Neutral);
    let baseline = Lexicon::new()
        .with(positive[0], PolarityLabel::Positive)
        .with(positive[1], PolarityLabel::Positive)
        .with(positive[2], PolarityLabel::Positive)
        .with(negative[0], PolarityLabel::Negative)
        .with(negative[1], PolarityLabel::Negative)
        .with(negative[2], PolarityLabel::Negative)
        .with(neutral[0], PolarityLabel::Neutral);
    DemoBundle {
        corpus: Corpus::new(out).expect("generated corpus is valid"),
        baseline,
        lexicon,
        bigrams,
        embeddings,
    }
}

pub const DEMO_REVIEWS: usize = 201;
pub const DEMO_DIM: usize = 16;
pub const DEMO_SEED: u64 = 2018;

pub const DEMO_CONFIG: &str = "# demo run over the bundled synthetic data
corpus = reviews.jsonl
baseline_lexicon = baseline_lexicon.tsv
lexicon = lexicon.tsv
bigram_lexicon = bigram_lexicon.tsv
embeddings = embeddings.txt
rules = telugu_suffixes.tsv
out_dir = ../out
split_ratio = 7:3
seed = 7
min_count = 2
";

/// Two annotators' sheets over the demo lexicon's unigrams: mostly in agreement,
/// with a few disagreements and uncertain judgments.
fn demo_sheets(lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> (String, String) {
    let mut a = String::from("item\tjudgment\n");
    let mut b = a.clone();
    for e in lexicon.entries().filter(|e| !e.ngram.is_bigram()) {
        let key = e.ngram.key();
        let truth = e.label.code();
        let first = if rng.gen_bool(0.1) {
            "uncertain"
        } else {
            truth
        };
        let second = match rng.gen_range(0..10) {
            0 => "uncertain",
            1 => match e.label {
                PolarityLabel::Positive => "neu",
                PolarityLabel::Negative => "amb",
                _ => "pos",
            },
            _ => truth,
        };
        a.push_str(&format!("{key}\t{first}\n"));
        b.push_str(&format!("{key}\t{second}\n"));
    }
    (a, b)
}

/// Writes the demo bundle, rules, judgment sheets and run config into `dir`.
pub fn write_demo_data(dir: &std::path::Path) -> Result<(), Box<dyn std::error::Error>> {
    use crate::corpus::save_corpus;
    use crate::lexicon::save_lexicon;
    use crate::vectors::save_embeddings;

    std::fs::create_dir_all(dir)?;
    let bundle = demo_bundle(DEMO_REVIEWS, DEMO_DIM, DEMO_SEED);
    save_corpus(&bundle.corpus, dir.join("reviews.jsonl"))?;
    save_lexicon(&bundle.baseline, dir.join("baseline_lexicon.tsv"))?;
    save_lexicon(&bundle.lexicon, dir.join("lexicon.tsv"))?;
    save_lexicon(&bundle.bigrams, dir.join("bigram_lexicon.tsv"))?;
    save_embeddings(&bundle.embeddings, dir.join("embeddings.txt"))?;
    std::fs::write(dir.join("telugu_suffixes.tsv"), DEMO_SUFFIX_RULES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEMO_SEED + 1);
    let (a, b) = demo_sheets(&bundle.lexicon, &mut rng);
    std::fs::write(dir.join("annotator_a.tsv"), a)?;
    std::fs::write(dir.join("annotator_b.tsv"), b)?;
    std::fs::write(dir.join("demo.conf"), DEMO_CONFIG)?;
    Ok(())
}

/// Points in `[-1, 1]^dim` labeled by a random hyperplane, keeping only points at
/// least `margin` away from it. Both labels are always present.
pub fn separable_dataset(n: usize, dim: usize, margin: f64, rng: &mut impl Rng) -> Dataset {
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
    let b = rng.gen_range(-0.2..0.2);
    let sample = |rng: &mut dyn rand::RngCore| loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = (x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b) / norm;
        if d.abs() >= margin {
            let label = if d > 0.0 {
                Sentiment::Positive
            } else {
                Sentiment::Negative
            };
            return (x, label);
        }
    };
    let (mut features, mut labels): (Vec<_>, Vec<_>) = (0..n.max(2)).map(|_| sample(rng)).unzip();
    for (slot, wanted) in [(0, Sentiment::Positive), (1, Sentiment::Negative)] {
        if !labels.contains(&wanted) {
            let (x, _) = std::iter::repeat_with(|| sample(rng))
                .find(|(_, l)| *l == wanted)
                .expect("unbounded search");
            features[slot] = x;
            labels[slot] = wanted;
        }
    }
    Dataset::unnamed(features, labels).expect("generated features are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_corpus_shape() {
        let p = planted_corpus(&PlantedConfig::default(), 1);
        assert_eq!(p.corpus.len(), 200);
        assert_eq!(p.lexicon.len(), 20);
        assert_eq!(p.corpus.count(Sentiment::Positive), 100);
        let again = planted_corpus(&PlantedConfig::default(), 1);
        assert_eq!(again.corpus, p.corpus);
    }

    #[test]
    fn separable_has_both_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3, 10] {
            let d = separable_dataset(n, 3, 0.1, &mut rng);
            assert!(d.len() >= n);
            assert!(d.has_both_labels());
        }
    }

    #[test]
    fn tail_signal_polar_words_are_oov() {
        let t = tail_signal_corpus(20, 8, 3);
        for e in t.unigrams.entries() {
            assert!(t.embeddings.get(&e.ngram.key()).is_none());
        }
        assert_eq!(t.embeddings.dim(), 8);
    }
}
