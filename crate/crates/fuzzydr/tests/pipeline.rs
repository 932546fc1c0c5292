//! End-to-end CLI tests: the full build-dtm -> weight -> reduce ->
//! transform -> evaluate pipeline on a small synthetic corpus, plus exit
//! code and determinism checks.

use std::path::{Path, PathBuf};
use std::process::Output;

use fuzzydr::synth::{two_topic_corpus, SynthConfig};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fuzzydr")
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("spawn fuzzydr")
}

fn write_corpus(dir: &Path, n: usize) -> PathBuf {
    let docs = two_topic_corpus(&SynthConfig {
        n_docs: n,
        vocab_size: 120,
        shared_token_prob: 0.3,
        tokens_per_doc: 25,
        seed: 99,
    });
    let path = dir.join("corpus.jsonl");
    let mut lines = String::new();
    for d in &docs {
        lines.push_str(&format!(
            "{{\"id\":\"{}\",\"label\":\"{}\",\"text\":\"{}\"}}\n",
            d.id, d.label, d.text
        ));
    }
    std::fs::write(&path, lines).unwrap();
    path
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 60);
    let dtm = dir.path().join("dtm.mtx");
    let vocab = dir.path().join("dtm.mtx.vocab");

    let out = run(&[
        "build-dtm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dtm.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dtm.exists() && vocab.exists());

    let weighted = dir.path().join("weighted.mtx");
    let weights_csv = dir.path().join("weights.csv");
    let out = run(&[
        "weight",
        "--dtm",
        dtm.to_str().unwrap(),
        "--method",
        "idf",
        "--out",
        weighted.to_str().unwrap(),
        "--weights-csv",
        weights_csv.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&weights_csv).unwrap();
    assert!(csv.starts_with("term,method,weight"));

    let reduced = dir.path().join("reduced.csv");
    let model = dir.path().join("model.fzdm");
    let out = run(&[
        "reduce",
        "--dtm",
        weighted.to_str().unwrap(),
        "--method",
        "fc",
        "--k",
        "2",
        "--q",
        "2",
        "--out",
        reduced.to_str().unwrap(),
        "--model-out",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = std::fs::read_to_string(&reduced).unwrap();
    assert_eq!(rep.lines().count(), 61);
    assert!(rep.starts_with("doc_id,c_1,c_2"));

    // fold new documents into the saved model
    let transformed = dir.path().join("transformed.csv");
    let out = run(&[
        "transform",
        "--model",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        transformed.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tr = std::fs::read_to_string(&transformed).unwrap();
    assert_eq!(tr.lines().count(), 61);
    for line in tr.lines().skip(1) {
        let sum: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{line}");
    }

    // evaluate from a plan file
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        format!(
            "{{\"corpus\":{:?},\"dimensions\":[2,3],\"methods\":[\"svd\",\"fc\"],\
             \"fuzzifiers\":[2.0],\"folds\":2,\"adaboost_rounds\":10,\
             \"forest_trees\":10,\"forest_max_depth\":4}}",
            corpus.to_str().unwrap()
        ),
    )
    .unwrap();
    let report = dir.path().join("report.csv");
    let out = run(&[
        "evaluate",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rpt = std::fs::read_to_string(&report).unwrap();
    // 2 variants x 2 dims x 2 classifiers x 2 folds + header
    assert_eq!(rpt.lines().count(), 1 + 16, "{rpt}");
    assert!(rpt.starts_with("method,fuzzifier,weighting,dimension,classifier,fold,accuracy"));

    // markdown flavor of the same report
    let md = dir.path().join("report.md");
    let out = run(&[
        "evaluate",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        md.to_str().unwrap(),
        "--format",
        "markdown",
    ]);
    assert!(out.status.success());
    let md_text = std::fs::read_to_string(&md).unwrap();
    assert!(md_text.contains("| fc-2 |") && md_text.contains("| svd |"), "{md_text}");
}

#[test]
fn reduce_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 40);
    let dtm = dir.path().join("dtm.mtx");
    run(&[
        "build-dtm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dtm.to_str().unwrap(),
    ]);
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let res = run(&[
            "--seed",
            "7",
            "--threads",
            "1",
            "reduce",
            "--dtm",
            dtm.to_str().unwrap(),
            "--method",
            "fc",
            "--k",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_code_2_for_missing_path() {
    let out = run(&[
        "reduce",
        "--dtm",
        "/nonexistent/dtm.mtx",
        "--method",
        "svd",
        "--k",
        "2",
        "--out",
        "/tmp/ignored.csv",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_code_3_for_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "this is not a matrix market file\n").unwrap();
    let out = run(&[
        "reduce",
        "--dtm",
        bad.to_str().unwrap(),
        "--method",
        "svd",
        "--k",
        "2",
        "--out",
        dir.path().join("out.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_code_4_for_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 20);
    let dtm = dir.path().join("dtm.mtx");
    run(&[
        "build-dtm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dtm.to_str().unwrap(),
    ]);
    // q = 1.0 violates the fuzzifier precondition
    let out = run(&[
        "reduce",
        "--dtm",
        dtm.to_str().unwrap(),
        "--method",
        "fc",
        "--k",
        "2",
        "--q",
        "1.0",
        "--out",
        dir.path().join("out.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_emits_timing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--sizes",
        "50,100",
        "--methods",
        "svd",
        "--vocab-size",
        "80",
        "--k",
        "3",
        "--iterations",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("phase,wall_ms,peak_rss_bytes"));
    assert_eq!(text.lines().count(), 1 + 4); // (dtm + svd) x 2 sizes
}

#[test]
fn help_available_for_every_subcommand() {
    for sub in ["build-dtm", "weight", "reduce", "transform", "evaluate", "bench"] {
        let out = run(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
    }
}

#[test]
fn unknown_flag_rejected() {
    let out = run(&["reduce", "--bogus-flag"]);
    assert!(!out.status.success());
}
