use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polarlex"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn demo_config() -> PathBuf {
    data_dir().join("demo.conf")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for cmd in [
        "ingest", "extract", "kappa", "stats", "poll", "classify", "serve",
    ] {
        let out = run(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd}");
        assert!(stdout(&out).contains("Usage"), "{cmd}");
    }
}

#[test]
fn ingest_writes_split() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "--config",
        s(&demo_config()),
        "ingest",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("reviews\t201\n"));
    assert!(text.contains("train\t141\n"));
    assert!(text.contains("test\t60\n"));
    let split: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("split.json")).unwrap()).unwrap();
    assert_eq!(split["train_ids"].as_array().unwrap().len(), 141);
    assert_eq!(split["seed"], 7);
}

#[test]
fn poll_full_config_fills_eight_cells() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "--config",
        s(&demo_config()),
        "poll",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(tmp.path().join("polling_table.tsv")).unwrap();
    assert_eq!(table, stdout(&out));
    let rows = body(&table);
    assert_eq!(rows.len(), 5);
    let cells: Vec<&str> = rows[1..]
        .iter()
        .flat_map(|r| r.split('\t').skip(1))
        .collect();
    assert_eq!(cells.len(), 16);
    assert!(!cells.contains(&"—"));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("polling_reports.json")).unwrap())
            .unwrap();
    assert_eq!(reports["reports"].as_array().unwrap().len(), 8);
}

#[test]
fn poll_does_not_need_embeddings() {
    let tmp = TempDir::new().unwrap();
    let conf = fs::read_to_string(demo_config())
        .unwrap()
        .replace("embeddings = embeddings.txt\n", "");
    let data = data_dir().canonicalize().unwrap();
    let conf = conf.replace(" = ", &format!(" = {}/", data.display()));
    let conf = conf
        .lines()
        .filter(|l| {
            !l.starts_with("out_dir")
                && !l.starts_with("seed")
                && !l.starts_with("split")
                && !l.starts_with("min_count")
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = write(tmp.path(), "poll.conf", &conf);
    let out = run(&["--config", &path, "poll", "--out-dir", s(tmp.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn bigram_mode_without_split_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "--config",
        s(&demo_config()),
        "poll",
        "--mode",
        "bigram",
        "--no-split",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("split"), "{}", stderr(&out));
    assert!(!tmp.path().join("polling_table.tsv").exists());

    let unigram = run(&[
        "--config",
        s(&demo_config()),
        "poll",
        "--mode",
        "unigram",
        "--no-split",
        "--segmentation",
        "off",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert!(unigram.status.success(), "{}", stderr(&unigram));
    let rows = body(&fs::read_to_string(tmp.path().join("polling_table.tsv")).unwrap()).len();
    assert_eq!(rows, 5);
}

#[test]
fn missing_and_malformed_inputs() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.jsonl");
    let out = run(&[
        "ingest",
        "--corpus",
        s(&missing),
        "--out-dir",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));

    let bad = write(tmp.path(), "bad.jsonl", "{\"id\": 1}\n");
    let out = run(&["ingest", "--corpus", &bad, "--out-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let out = run(&["--config", s(&tmp.path().join("none.conf")), "stats", &bad]);
    assert_eq!(out.status.code(), Some(2));

    let conf = write(tmp.path(), "typo.conf", "corpos = x\n");
    let out = run(&["--config", &conf, "ingest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("corpos"));

    let out = run(&["poll", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_is_deterministic_with_twenty_rows() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = run(&[
            "--config",
            s(&demo_config()),
            "classify",
            "--out-dir",
            s(dir.path()),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let csv_a = fs::read(a.path().join("feature_comparison.csv")).unwrap();
    let csv_b = fs::read(b.path().join("feature_comparison.csv")).unwrap();
    // The out_dir override is part of the hashed config, so compare bodies.
    let text_a = String::from_utf8(csv_a).unwrap();
    let text_b = String::from_utf8(csv_b).unwrap();
    assert_eq!(body(&text_a), body(&text_b));
    let rows = body(&text_a);
    assert_eq!(rows[0], "classifier,feature_set,accuracy_pct");
    assert_eq!(rows.len(), 21);
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("classify_metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn rerun_in_place_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let conf = demo_config();
    let args = [
        "--config",
        s(&conf),
        "classify",
        "--classifiers",
        "linear_svm,knn",
        "--out-dir",
        s(tmp.path()),
    ];
    let first = run(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let csv = fs::read(tmp.path().join("feature_comparison.csv")).unwrap();
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(
        csv,
        fs::read(tmp.path().join("feature_comparison.csv")).unwrap()
    );
    assert_eq!(body(&stdout(&first)).len(), 9);
}

#[test]
fn unknown_classifier_names_the_offender() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "--config",
        s(&demo_config()),
        "classify",
        "--classifiers",
        "linear_svm,naive_bayes",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("naive_bayes"), "{}", stderr(&out));
}

#[test]
fn kappa_on_identical_files_is_one() {
    let a = data_dir().join("annotator_a.tsv");
    let out = run(&["kappa", s(&a), s(&a)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("kappa\t1.0000\n"));
}

#[test]
fn kappa_fixture_sheets() {
    let tmp = TempDir::new().unwrap();
    let a = write(
        tmp.path(),
        "a.tsv",
        "item\tjudgment\nw1\tpos\nw2\tneg\nw3\tpos\nw4\tneg\nw5\tpos\n",
    );
    let b = write(
        tmp.path(),
        "b.tsv",
        "w1\tpos\nw2\tneg\nw3\tpos\nw4\tneg\nw5\tneg\n",
    );
    let out = run(&["kappa", &a, &b, "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let k = v["report"]["kappa"].as_f64().unwrap();
    assert!((k - 0.6154).abs() < 1e-4, "{k}");

    let c = write(tmp.path(), "c.tsv", "w8\tpos\nw9\tneg\n");
    let out = run(&["kappa", &a, &c]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kappa_from_annotation_log() {
    let tmp = TempDir::new().unwrap();
    let mut log = String::new();
    for (item, a, b) in [
        ("x", "pos", "pos"),
        ("y", "neg", "pos"),
        ("z", "uncertain", "neg"),
    ] {
        for (who, j) in [("ann1", a), ("ann2", b)] {
            log.push_str(&format!(
                "{{\"item_id\":\"{item}\",\"annotator_id\":\"{who}\",\"judgment\":\"{j}\",\"timestamp\":0,\"round\":1}}\n"
            ));
        }
    }
    let path = write(tmp.path(), "log.jsonl", &log);
    let with = stdout(&run(&["kappa", &path]));
    let without = stdout(&run(&["kappa", &path, "--exclude-borderline"]));
    assert!(with.contains("items\t3\n"));
    assert!(without.contains("items\t2\n"));
    assert!(without.contains("excluded\t1\n"));
}

#[test]
fn stats_row_shape() {
    let tmp = TempDir::new().unwrap();
    let lex = write(
        tmp.path(),
        "tiny.tsv",
        "ngram\tlabel\tprovenance\tgloss\nmanchi\tpos\tmanual\t\nchedu\tneg\tmanual\t\nmari\tamb\tmanual\t\n",
    );
    let out = run(&["stats", &lex]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = body(std::str::from_utf8(&out.stdout).unwrap()).join("\n");
    assert_eq!(
        rows,
        "Resource\tPositive\tNegative\tNeutral\tAmbiguous\tTotal\ntiny\t1\t1\t0\t1\t3"
    );
}

#[test]
fn extract_single_candidate() {
    let tmp = TempDir::new().unwrap();
    let corpus = write(
        tmp.path(),
        "c.jsonl",
        "{\"id\":\"r1\",\"domain\":\"book\",\"text\":\"a b a b c\",\"label\":\"pos\"}\n",
    );
    let out_file = tmp.path().join("cands.tsv");
    let out = run(&[
        "extract",
        "--corpus",
        &corpus,
        "--min-count",
        "2",
        "--out",
        s(&out_file),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_file).unwrap();
    assert_eq!(body(&text), vec!["ngram\tcount", "a b\t2"]);
    assert!(text.starts_with("# polarlex "));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let a = stdout(&run(&[
        "--config",
        s(&demo_config()),
        "ingest",
        "--out-dir",
        s(tmp.path()),
    ]));
    let b = stdout(&run(&[
        "--config",
        s(&demo_config()),
        "--seed",
        "99",
        "ingest",
        "--out-dir",
        s(tmp.path()),
    ]));
    assert!(a.contains("# seed 7\n"));
    assert!(b.contains("# seed 99\n"));
    let hash = |t: &str| {
        t.lines()
            .find(|l| l.starts_with("# config_sha256"))
            .unwrap()
            .to_owned()
    };
    assert_ne!(hash(&a), hash(&b));
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    files.sort();
    files
}

#[test]
fn commands_leave_inputs_untouched() {
    let before = snapshot(&data_dir());
    let tmp = TempDir::new().unwrap();
    let conf = s(&demo_config()).to_owned();
    for args in [
        vec!["ingest"],
        vec!["poll"],
        vec!["extract", "--out", "cands.tsv"],
        vec!["classify", "--classifiers", "knn"],
    ] {
        let mut full = vec!["--config", &conf];
        full.extend(args.iter().copied());
        full.extend(["--out-dir", s(tmp.path())]);
        let out = bin().args(&full).current_dir(tmp.path()).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(before, snapshot(&data_dir()));
}

#[test]
fn bundled_data_matches_generator() {
    let tmp = TempDir::new().unwrap();
    polarlex_core::synthetic::write_demo_data(tmp.path()).unwrap();
    let fresh = snapshot(tmp.path());
    let bundled = snapshot(&data_dir());
    let names = |v: &[(PathBuf, Vec<u8>)]| -> Vec<String> {
        v.iter()
            .map(|(p, _)| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect()
    };
    assert_eq!(names(&fresh), names(&bundled));
    for ((p, a), (_, b)) in fresh.iter().zip(&bundled) {
        assert!(
            a == b,
            "{} is stale; rerun the demo_data example",
            p.display()
        );
    }
}

#[test]
fn serve_rejects_missing_ui_dir() {
    let out = run(&["serve", "--port", "0", "--ui-dir", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));
}
