use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use polarlex_core::classifiers::{
    compare_feature_sets, render_comparison_csv, ClassifierKind, ClassifierSpec, ReviewFeatures,
};
use polarlex_core::corpus::{
    load_corpus, split_corpus, Corpus, CorpusSplit, Domain, Sentiment, SplitRatio,
};
use polarlex_core::extraction::{
    corpus_bigrams, render_candidates, threshold_bigrams, ExtractionScope,
};
use polarlex_core::lexicon::{
    cohen_kappa, dual_judgments, filter_polar, lexicon_stats, load_lexicon, pair_sheets,
    parse_annotation_log, parse_judgment_sheet, render_stats_table, AnnotationRecord, KappaOptions,
    KappaReport, Lexicon, Weighting,
};
use polarlex_core::polling::{
    evaluate_polling, training_bigram_lexicon, EvalScope, PollingColumn, PollingSetup, PollingTable,
};
use polarlex_core::segmenter::SegmentationRules;
use polarlex_core::vectors::{load_embeddings, Augmenter, TailScaling};
use serde_json::json;

use crate::config::{comment_block, RunConfig};

/// Exit status classes: bad configuration or usage (2) versus unusable input data (3).
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Data(e) => e,
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn config(self) -> Outcome<T>;
    fn data(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn data(self) -> Outcome<T> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn out_dir(cfg: &RunConfig) -> Outcome<PathBuf> {
    let dir = PathBuf::from(cfg.get("out_dir").unwrap_or("out"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .config()?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .data()
}

fn emit(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .context("cannot write to standard output")
        .data()
}

fn lexicon(path: &Path) -> Outcome<Lexicon> {
    load_lexicon(path)
        .with_context(|| format!("reading lexicon {}", path.display()))
        .data()
}

fn corpus(path: &Path) -> Outcome<Corpus> {
    load_corpus(path)
        .with_context(|| format!("reading corpus {}", path.display()))
        .data()
}

fn split_settings(cfg: &RunConfig) -> Outcome<(SplitRatio, u64, bool)> {
    let ratio = cfg
        .value::<SplitRatio>("split_ratio")
        .config()?
        .unwrap_or_default();
    let seed = cfg.seed().config()?;
    let stratified = cfg.flag("stratified", true).config()?;
    Ok((ratio, seed, stratified))
}

fn make_split(corpus: &Corpus, settings: (SplitRatio, u64, bool)) -> Outcome<CorpusSplit> {
    split_corpus(corpus, settings.0, settings.1, settings.2)
        .context("cannot split corpus")
        .data()
}

pub fn ingest(cfg: &RunConfig) -> Outcome {
    let path = cfg.required_path("corpus").config()?;
    let settings = split_settings(cfg)?;
    let dir = out_dir(cfg)?;
    let corpus = corpus(&path)?;
    let split = make_split(&corpus, settings)?;

    let mut report = comment_block(&cfg.provenance("ingest").config()?);
    report.push_str(&format!("reviews\t{}\n", corpus.len()));
    for label in [Sentiment::Positive, Sentiment::Negative] {
        report.push_str(&format!("{}\t{}\n", label, corpus.count(label)));
    }
    for domain in [Domain::Movie, Domain::Product, Domain::Book, Domain::Other] {
        let n = corpus
            .reviews()
            .iter()
            .filter(|r| r.domain == domain)
            .count();
        if n > 0 {
            report.push_str(&format!("{domain}\t{n}\n"));
        }
    }
    report.push_str(&format!("split\t{}\n", split.ratio));
    report.push_str(&format!("train\t{}\n", split.train_ids.len()));
    report.push_str(&format!("test\t{}\n", split.test_ids.len()));

    let json = serde_json::to_string_pretty(&split).expect("splits serialize");
    write_file(&dir.join("split.json"), &(json + "\n"))?;
    write_file(&dir.join("ingest.tsv"), &report)?;
    emit(&report)
}

pub fn extract(cfg: &RunConfig, out: Option<&Path>) -> Outcome {
    let path = cfg.required_path("corpus").config()?;
    let rules_path = cfg.existing_path("rules").config()?;
    let min_count = cfg.value::<usize>("min_count").config()?.unwrap_or(2);
    let train_only = match cfg.get("extract_scope").unwrap_or("full") {
        "full" => false,
        "train" => true,
        other => {
            return Err(Failure::Config(anyhow!(
                "invalid extract scope `{other}`: expected full or train"
            )))
        }
    };
    let settings = split_settings(cfg)?;
    let corpus = corpus(&path)?;
    let rules = rules_path.as_deref().map(load_rules).transpose()?;
    let split = if train_only {
        Some(make_split(&corpus, settings)?)
    } else {
        None
    };
    let scope = match &split {
        Some(s) => ExtractionScope::TrainOnly(s),
        None => ExtractionScope::FullCorpus,
    };
    let counts = corpus_bigrams(&corpus, scope, rules.as_ref());
    let candidates = threshold_bigrams(&counts, min_count).config()?;
    let text =
        comment_block(&cfg.provenance("extract").config()?) + &render_candidates(&candidates);
    match out {
        Some(p) => write_file(p, &text),
        None => emit(&text),
    }
}

fn load_rules(path: &Path) -> Outcome<SegmentationRules> {
    SegmentationRules::load(path)
        .with_context(|| format!("reading segmentation rules {}", path.display()))
        .data()
}

fn read_records(path: &Path, annotator: &str) -> Outcome<Vec<AnnotationRecord>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .data()?;
    let parsed = if text.trim_start().starts_with('{') {
        parse_annotation_log(&text).map_err(anyhow::Error::from)
    } else {
        parse_judgment_sheet(&text, annotator).map_err(anyhow::Error::from)
    };
    parsed
        .with_context(|| format!("reading annotations {}", path.display()))
        .data()
}

fn distinct_items(records: &[AnnotationRecord]) -> usize {
    records
        .iter()
        .map(|r| r.item_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len()
}

pub struct KappaArgs<'a> {
    pub files: &'a [PathBuf],
    pub weighting: Weighting,
    pub include_borderline: bool,
    pub json: bool,
}

pub fn kappa(cfg: &RunConfig, args: &KappaArgs<'_>) -> Outcome {
    for f in args.files {
        if !f.exists() {
            return Err(Failure::Config(anyhow!("{} does not exist", f.display())));
        }
    }
    let (pairs, items) = match args.files {
        [log] => {
            let records = read_records(log, "first")?;
            (
                dual_judgments(&records, None).data()?,
                distinct_items(&records),
            )
        }
        [a, b] => {
            let mut records = read_records(a, "first")?;
            let second = read_records(b, "second")?;
            let pairs = pair_sheets(&records, &second).data()?;
            records.extend(second);
            (pairs, distinct_items(&records))
        }
        _ => {
            return Err(Failure::Config(anyhow!(
                "pass one annotation log or two annotation files"
            )))
        }
    };
    if pairs.len() < items {
        log::warn!(
            "{} of {items} items lack a judgment from both annotators",
            items - pairs.len()
        );
    }
    let options = KappaOptions {
        weighting: args.weighting,
        include_borderline: args.include_borderline,
        ..Default::default()
    };
    let judgments: Vec<_> = pairs.iter().map(|p| (p.first, p.second)).collect();
    let report = cohen_kappa(&judgments, &options)
        .context("cannot compute kappa")
        .data()?;
    let header = cfg.provenance("kappa").config()?;
    let text = if args.json {
        let body = json!({ "provenance": header, "report": report });
        serde_json::to_string_pretty(&body).expect("reports serialize") + "\n"
    } else {
        comment_block(&header) + &render_kappa(&report)
    };
    emit(&text)
}

fn render_kappa(report: &KappaReport) -> String {
    let mut out = format!("kappa\t{:.4}\n", report.kappa);
    out.push_str(&format!(
        "weighting\t{}\n",
        weighting_name(report.weighting)
    ));
    out.push_str(&format!(
        "include_borderline\t{}\n",
        report.include_borderline
    ));
    out.push_str(&format!("items\t{}\n", report.items));
    out.push_str(&format!("excluded\t{}\n", report.excluded));
    let codes: Vec<String> = report.categories.iter().map(|c| c.to_string()).collect();
    out.push_str(&format!("table\t{}\n", codes.join("\t")));
    for (code, row) in codes.iter().zip(&report.table.counts) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&format!("{code}\t{}\n", cells.join("\t")));
    }
    out
}

fn weighting_name(w: Weighting) -> &'static str {
    match w {
        Weighting::Unweighted => "unweighted",
        Weighting::Linear => "linear",
    }
}

pub fn stats(cfg: &RunConfig, files: &[PathBuf], names: &[String]) -> Outcome {
    if files.is_empty() {
        return Err(Failure::Config(anyhow!("pass at least one lexicon file")));
    }
    if !names.is_empty() && names.len() != files.len() {
        return Err(Failure::Config(anyhow!(
            "{} names given for {} lexicons",
            names.len(),
            files.len()
        )));
    }
    for f in files {
        if !f.exists() {
            return Err(Failure::Config(anyhow!("{} does not exist", f.display())));
        }
    }
    let mut rows = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let name = names.get(i).cloned().unwrap_or_else(|| {
            f.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| f.display().to_string())
        });
        rows.push((name, lexicon_stats(&lexicon(f)?)));
    }
    emit(&(comment_block(&cfg.provenance("stats").config()?) + &render_stats_table(&rows)))
}

fn parse_column(s: &str) -> Option<PollingColumn> {
    match s.trim() {
        "baseline" => Some(PollingColumn::BaselineUnigram),
        "unigram" | "resource" => Some(PollingColumn::ResourceUnigram),
        "bigram" => Some(PollingColumn::Bigram),
        "unigram+bigram" | "uni+bi" => Some(PollingColumn::UnigramPlusBigram),
        _ => None,
    }
}

fn column_name(c: PollingColumn) -> &'static str {
    match c {
        PollingColumn::BaselineUnigram => "baseline",
        PollingColumn::ResourceUnigram => "unigram",
        PollingColumn::Bigram => "bigram",
        PollingColumn::UnigramPlusBigram => "unigram+bigram",
    }
}

pub fn poll(cfg: &RunConfig) -> Outcome {
    // Everything that can be checked without reading data is checked first.
    let corpus_path = cfg.required_path("corpus").config()?;
    let baseline_path = cfg.existing_path("baseline_lexicon").config()?;
    let lexicon_path = cfg.existing_path("lexicon").config()?;
    let bigram_path = cfg.existing_path("bigram_lexicon").config()?;
    let rules_path = cfg.existing_path("rules").config()?;
    let no_split = cfg.flag("no_split", false).config()?;
    let min_count = cfg.value::<usize>("min_count").config()?.unwrap_or(2);
    let settings = split_settings(cfg)?;
    let scope = match cfg.get("eval_scope").unwrap_or("auto") {
        "auto" => EvalScope::Auto,
        "test" => EvalScope::TestSplit,
        "full" => EvalScope::FullCorpus,
        other => {
            return Err(Failure::Config(anyhow!(
                "invalid eval scope `{other}`: expected auto, test or full"
            )))
        }
    };

    let available = |c: PollingColumn| match c {
        PollingColumn::BaselineUnigram => baseline_path.is_some(),
        PollingColumn::ResourceUnigram => lexicon_path.is_some(),
        PollingColumn::Bigram => bigram_path.is_some(),
        PollingColumn::UnigramPlusBigram => lexicon_path.is_some() && bigram_path.is_some(),
    };
    let columns: Vec<PollingColumn> = match cfg.get("modes") {
        Some(list) => {
            let mut cols = Vec::new();
            for m in list.split(',').filter(|m| !m.trim().is_empty()) {
                let c = parse_column(m).ok_or_else(|| {
                    Failure::Config(anyhow!(
                        "unknown polling mode `{}`: expected baseline, unigram, bigram or unigram+bigram",
                        m.trim()
                    ))
                })?;
                if !available(c) {
                    return Err(Failure::Config(anyhow!(
                        "polling mode `{}` needs a lexicon that was not given",
                        column_name(c)
                    )));
                }
                if !cols.contains(&c) {
                    cols.push(c);
                }
            }
            cols
        }
        None => PollingColumn::ALL
            .into_iter()
            .filter(|&c| available(c))
            .collect(),
    };
    if columns.is_empty() {
        return Err(Failure::Config(anyhow!(
            "no polar lexicon given; set lexicon, baseline_lexicon or bigram_lexicon"
        )));
    }
    if no_split {
        if let Some(c) = columns.iter().find(|c| c.mode().uses_bigrams()) {
            return Err(Failure::Config(anyhow!(
                "polling mode `{}` needs a training split to draw bigrams from; drop --no-split",
                column_name(*c)
            )));
        }
    }
    let segmentations: Vec<bool> = match (cfg.get("segmentation"), rules_path.is_some()) {
        (None, has_rules) => {
            if has_rules {
                vec![false, true]
            } else {
                vec![false]
            }
        }
        (Some("off"), _) => vec![false],
        (Some("on"), true) => vec![true],
        (Some("both"), true) => vec![false, true],
        (Some("on" | "both"), false) => {
            return Err(Failure::Config(anyhow!("segmentation needs a rules file")))
        }
        (Some(other), _) => {
            return Err(Failure::Config(anyhow!(
                "invalid segmentation `{other}`: expected off, on or both"
            )))
        }
    };
    let dir = out_dir(cfg)?;
    let header = cfg.provenance("poll").config()?;

    let corpus = corpus(&corpus_path)?;
    let load_polar = |p: &Option<PathBuf>| -> Outcome<Lexicon> {
        Ok(match p {
            Some(p) => filter_polar(&lexicon(p)?),
            None => Lexicon::new(),
        })
    };
    let baseline = load_polar(&baseline_path)?;
    let resource = load_polar(&lexicon_path)?;
    let bigrams_all = load_polar(&bigram_path)?;
    let rules = rules_path.as_deref().map(load_rules).transpose()?;
    let split = if no_split {
        None
    } else {
        Some(make_split(&corpus, settings)?)
    };
    let bigrams = match &split {
        Some(s) => training_bigram_lexicon(&bigrams_all, &corpus, s, min_count),
        None => Lexicon::new(),
    };

    let mut table = PollingTable::new();
    let mut reports = Vec::new();
    for &segmented in &segmentations {
        for &column in &columns {
            let uni = match column {
                PollingColumn::BaselineUnigram => &baseline,
                _ => &resource,
            };
            let setup = PollingSetup::new(column.mode())
                .scope(scope)
                .segmented(if segmented { rules.as_ref() } else { None });
            let report = evaluate_polling(&corpus, split.as_ref(), uni, &bigrams, setup)
                .with_context(|| format!("polling with `{}`", column_name(column)))
                .data()?;
            table.insert(column, &report);
            reports.push((column, report));
        }
    }
    let rendered = table.render(&header);
    write_file(&dir.join("polling_table.tsv"), &rendered)?;
    let entries: Vec<serde_json::Value> = reports
        .iter()
        .map(|(c, r)| json!({ "column": column_name(*c), "report": r }))
        .collect();
    let json = json!({ "provenance": header, "reports": entries });
    write_file(
        &dir.join("polling_reports.json"),
        &(serde_json::to_string_pretty(&json).expect("reports serialize") + "\n"),
    )?;
    emit(&rendered)
}

pub fn classify(cfg: &RunConfig) -> Outcome {
    let corpus_path = cfg.required_path("corpus").config()?;
    let embeddings_path = cfg.required_path("embeddings").config()?;
    let lexicon_path = cfg.existing_path("lexicon").config()?;
    let bigram_path = cfg.existing_path("bigram_lexicon").config()?;
    let settings = split_settings(cfg)?;
    let min_count = cfg.value::<usize>("min_count").config()?.unwrap_or(2);
    let scaling = match cfg.get("tail_scaling").unwrap_or("raw") {
        "raw" => TailScaling::Raw,
        "per_token" => TailScaling::PerToken,
        other => {
            return Err(Failure::Config(anyhow!(
                "invalid tail scaling `{other}`: expected raw or per_token"
            )))
        }
    };
    let kinds: Vec<ClassifierKind> = match cfg.get("classifiers") {
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<ClassifierKind>())
            .collect::<Result<_, _>>()
            .config()?,
        None => ClassifierKind::ALL.to_vec(),
    };
    if kinds.is_empty() {
        return Err(Failure::Config(anyhow!("no classifiers selected")));
    }
    let seed = settings.1;
    let specs: Vec<ClassifierSpec> = kinds
        .iter()
        .map(|&k| ClassifierSpec::new(k, seed))
        .collect();
    let dir = out_dir(cfg)?;
    let header = cfg.provenance("classify").config()?;

    let corpus = corpus(&corpus_path)?;
    let loaded = load_embeddings(&embeddings_path)
        .with_context(|| format!("reading embeddings {}", embeddings_path.display()))
        .data()?;
    let unigrams = match &lexicon_path {
        Some(p) => filter_polar(&lexicon(p)?),
        None => Lexicon::new(),
    };
    let split = make_split(&corpus, settings)?;
    let bigrams = match &bigram_path {
        Some(p) => training_bigram_lexicon(&filter_polar(&lexicon(p)?), &corpus, &split, min_count),
        None => Lexicon::new(),
    };
    let augmenter = Augmenter::new(&unigrams, &bigrams)
        .context("building polarity features")
        .data()?
        .scaling(scaling);
    let features = ReviewFeatures::from_corpus(&corpus, &loaded.table, &augmenter);
    let report = compare_feature_sets(&features, &split, &specs)
        .context("training classifiers")
        .data()?;

    let csv = comment_block(&header) + &render_comparison_csv(&report);
    write_file(&dir.join("feature_comparison.csv"), &csv)?;
    let oov: usize = corpus
        .reviews()
        .iter()
        .map(|r| {
            r.tokens()
                .iter()
                .filter(|t| loaded.table.get(t).is_none())
                .count()
        })
        .sum();
    let metrics = json!({
        "provenance": header,
        "train_reviews": split.train_ids.len(),
        "test_reviews": split.test_ids.len(),
        "embedding_dim": loaded.table.dim(),
        "oov_tokens": oov,
        "unigram_entries": unigrams.len(),
        "bigram_entries": bigrams.len(),
        "specs": specs,
        "rows": report.rows,
    });
    write_file(
        &dir.join("classify_metrics.json"),
        &(serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n"),
    )?;
    emit(&csv)
}

pub fn serve(host: &str, port: u16, data_dir: PathBuf, ui_dir: Option<PathBuf>) -> Outcome {
    let addr: std::net::SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("invalid address {host}:{port}"))
        .config()?;
    if let Some(ui) = &ui_dir {
        if !ui.is_dir() {
            return Err(Failure::Config(anyhow!(
                "UI directory {} does not exist",
                ui.display()
            )));
        }
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
        .data()?;
    runtime
        .block_on(polarlex_service::serve(addr, data_dir, ui_dir))
        .map_err(|e| anyhow!("{e}"))
        .data()
}
