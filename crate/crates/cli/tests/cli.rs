use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn corpus() -> String {
    fixtures().join("corpus").to_string_lossy().into_owned()
}

fn gold() -> String {
    fixtures()
        .join("corpus/annotations.json")
        .to_string_lossy()
        .into_owned()
}

fn webrec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_webrec"))
        .args(args)
        .current_dir(dir)
        .env_remove("WEBREC_API_KEY")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = webrec(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ingested() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ingest", "--input", &corpus()]);
    dir
}

#[test]
fn mdr_pipeline_is_deterministic() {
    let dir = ingested();
    let d = dir.path();
    ok(
        d,
        &[
            "extract", "--method", "mdr", "--out", "a.json", "--jobs", "1",
        ],
    );
    ok(
        d,
        &[
            "extract", "--method", "mdr", "--out", "b.json", "--jobs", "4",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("a.json")).unwrap(),
        std::fs::read(d.join("b.json")).unwrap()
    );
    let stdout = ok(
        d,
        &[
            "score",
            "--gold",
            &gold(),
            "--pred",
            "a.json",
            "--csv",
            "pages.csv",
        ],
    );
    assert!(stdout.starts_with("MDR / Slimmed HTML: "), "{stdout}");
    let report = json(d.join("report.json"));
    assert_eq!(report["method"], "MDR");
    assert_eq!(report["summary"]["pages_scored"], 5);
    assert_eq!(report["summary"]["hallucination_rate"], 0.0);
    let csv = std::fs::read_to_string(d.join("pages.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    let gold_pages = webrec::annotations::load_annotations(gold()).unwrap();
    let preds = webrec::annotations::load_predictions(d.join("a.json")).unwrap();
    let metrics = gold_pages
        .iter()
        .map(|ann| {
            let p = preds.iter().find(|p| p.page_id() == ann.page_id).unwrap();
            let webrec::annotations::PagePrediction::Available(set) = p else {
                panic!()
            };
            webrec::eval::page_metrics(set, ann).unwrap()
        })
        .collect();
    let expected = webrec::eval::aggregate_corpus(metrics, Vec::new());
    assert_eq!(
        report["summary"],
        serde_json::to_value(&expected.summary).unwrap()
    );

    let table = ok(d, &["report", "--in", "report.json"]);
    let header: Vec<&str> = table
        .lines()
        .next()
        .unwrap()
        .split("  ")
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    assert_eq!(
        header,
        [
            "Method",
            "Input Type",
            "Precision",
            "Recall",
            "F1 Score",
            "Hallucination Rate"
        ]
    );
    assert!(table.contains("MDR     Slimmed HTML"));

    ok(d, &["extract", "--mdr-input", "full", "--out", "full.json"]);
    ok(
        d,
        &[
            "score",
            "--gold",
            &gold(),
            "--pred",
            "full.json",
            "--out",
            "full-report.json",
        ],
    );
    let full = json(d.join("full-report.json"));
    assert_eq!(full["input_type"], "Full HTML");
    assert_eq!(full["summary"], report["summary"]);
}

#[test]
fn ingest_writes_store_layout() {
    let dir = ingested();
    let store = dir.path().join("store");
    let manifest = json(store.join("manifest.json"));
    let ids: Vec<&str> = manifest["pages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["page_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["fig1", "hotel", "listing", "product", "table"]);
    let meta = json(store.join("product/meta.json"));
    assert_eq!(meta["resource_count"], 2);
    assert_eq!(meta["source_url"], "https://example.test/product");
    let slim = std::fs::read_to_string(store.join("fig1/slim.html")).unwrap();
    assert!(!slim.contains("class="));
    assert!(std::fs::read_to_string(store.join("fig1/full.html"))
        .unwrap()
        .contains("class="));
    assert!(std::fs::read_to_string(store.join("product/full.html"))
        .unwrap()
        .contains("<title>"));

    ok(
        dir.path(),
        &[
            "ingest",
            "--input",
            &corpus(),
            "--out",
            "headless",
            "--drop-head",
        ],
    );
    let full = std::fs::read_to_string(dir.path().join("headless/product/full.html")).unwrap();
    assert!(
        !full.contains("<head>") && !full.contains("<title>"),
        "{full}"
    );
}

#[test]
fn represent_writes_payloads_and_token_counts() {
    let dir = ingested();
    let d = dir.path();
    ok(
        d,
        &[
            "represent",
            "--format",
            "slim,flat",
            "--tokenizer",
            "ws",
            "--style",
            "compact",
        ],
    );
    let flat = std::fs::read_to_string(d.join("reps/fig1.flat.json")).unwrap();
    assert_eq!(
        flat,
        "{\n  \"/html/body/ul/li[1]/span\": \"Sample Product\",\n  \"/html/body/ul/li[2]/span\": \"$999.00\"\n}"
    );
    assert!(d.join("reps/fig1.slim.html").exists());
    assert!(!d.join("reps/fig1.hier.json").exists());
    let csv = std::fs::read_to_string(d.join("reps/tokens.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "page_id,representation,tokenizer,tokens,chars"
    );
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn synth_store_scores_like_the_original() {
    let dir = ingested();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--gold",
            &gold(),
            "--seed",
            "3",
            "--ops",
            "rename_attributes,replace_text_category_preserving,shuffle_numeric_digits",
        ],
    );
    assert!(d.join("store-synth/annotations.json").exists());
    let log = json(d.join("store-synth/listing/transform_log.json"));
    assert!(log["page_seed"].is_u64());
    let synth_gold = d
        .join("store-synth/annotations.json")
        .to_string_lossy()
        .into_owned();
    ok(
        d,
        &[
            "extract",
            "--method",
            "mdr",
            "--store",
            "store",
            "--out",
            "orig.json",
        ],
    );
    ok(
        d,
        &[
            "extract",
            "--method",
            "mdr",
            "--store",
            "store-synth",
            "--out",
            "synth.json",
        ],
    );
    ok(
        d,
        &[
            "score",
            "--gold",
            &gold(),
            "--pred",
            "orig.json",
            "--out",
            "orig-report.json",
        ],
    );
    ok(
        d,
        &[
            "score",
            "--gold",
            &synth_gold,
            "--pred",
            "synth.json",
            "--out",
            "synth-report.json",
        ],
    );
    assert_eq!(
        json(d.join("orig-report.json"))["summary"],
        json(d.join("synth-report.json"))["summary"]
    );

    let again = tempfile::tempdir().unwrap();
    let store = d.join("store").to_string_lossy().into_owned();
    let out = again.path().join("s2").to_string_lossy().into_owned();
    ok(
        again.path(),
        &[
            "synth",
            "--store",
            &store,
            "--gold",
            &gold(),
            "--seed",
            "3",
            "--ops",
            "rename_attributes,replace_text_category_preserving,shuffle_numeric_digits",
            "--out",
            &out,
        ],
    );
    for page in ["fig1", "hotel", "listing", "product", "table"] {
        let a = std::fs::read(d.join(format!("store-synth/{page}/full.html"))).unwrap();
        let b = std::fs::read(again.path().join(format!("s2/{page}/full.html"))).unwrap();
        assert_eq!(a, b, "{page}");
    }
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["extract", "--help"]);
    for needle in [
        "[default: 0.7]",
        "[default: 10]",
        "[default: WEBREC_API_KEY]",
        "[default: 2]",
        "[default: flat]",
    ] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let help = ok(dir.path(), &["synth", "--help"]);
    assert!(help.contains("[default: 0.5]"));
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = ingested();
    let d = dir.path();
    std::fs::write(
        d.join("webrec.config.json"),
        r#"{"out": "ignored-top.json", "extract": {"out": "from-config.json", "mdr_k": 3}}"#,
    )
    .unwrap();
    ok(d, &["extract", "--method", "mdr"]);
    let preds = json(d.join("from-config.json"));
    assert_eq!(preds["pages"][0]["meta"]["params"]["max_gnode_len"], 3);
    ok(
        d,
        &[
            "extract", "--method", "mdr", "--out", "cli.json", "--mdr-k", "5",
        ],
    );
    assert_eq!(
        json(d.join("cli.json"))["pages"][0]["meta"]["params"]["max_gnode_len"],
        5
    );

    std::fs::write(d.join("bad.json"), "[1]").unwrap();
    assert_eq!(
        webrec(d, &["--config", "bad.json", "extract", "--method", "mdr"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        webrec(
            d,
            &["--config", "missing.json", "extract", "--method", "mdr"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        webrec(d, &["extract", "--method", "mdr"]).status.code(),
        Some(2),
        "missing store"
    );
    assert_eq!(
        webrec(d, &["extract", "--method", "bogus"]).status.code(),
        Some(2),
        "bad value"
    );
    assert_eq!(webrec(d, &["--version"]).status.code(), Some(0));

    let images = fixtures()
        .join("images_only.mhtml")
        .to_string_lossy()
        .into_owned();
    let out = webrec(d, &["ingest", "--input", &corpus(), "--input", &images]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = json(d.join("store/manifest.json"));
    assert_eq!(manifest["pages"].as_array().unwrap().len(), 5);
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 1);

    let out = webrec(d, &["extract", "--method", "llm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("WEBREC_API_KEY"));

    ok(d, &["extract", "--method", "mdr"]);
    let mut preds = json(d.join("preds.json"));
    preds["pages"]
        .as_array_mut()
        .unwrap()
        .retain(|p| p["page_id"] != "hotel");
    std::fs::write(d.join("partial.json"), preds.to_string()).unwrap();
    assert_eq!(
        webrec(d, &["score", "--gold", &gold(), "--pred", "partial.json"])
            .status
            .code(),
        Some(1)
    );
    let report = json(d.join("report.json"));
    assert_eq!(report["skipped_pages"][0]["page_id"], "hotel");
    assert_eq!(report["summary"]["pages_scored"], 4);
}

#[test]
fn unparseable_answers_skip_pages() {
    use webrec::extract::mock::{MockScript, MockServer};

    let text = std::fs::read_to_string(fixtures().join("corpus/mock_perfect.json")).unwrap();
    let mut script: MockScript = serde_json::from_str(&text).unwrap();
    script
        .responses
        .insert("hotel".into(), "I could not find any records.".into());
    let server = MockServer::start_local(script).unwrap();
    let dir = ingested();
    let d = dir.path();
    let url = server.url();
    let out = Command::new(env!("CARGO_BIN_EXE_webrec"))
        .args([
            "extract",
            "--method",
            "llm",
            "--endpoint",
            &url,
            "--format",
            "hier",
            "--runs",
            "2",
            "--backoff-ms",
            "1",
        ])
        .current_dir(d)
        .env("WEBREC_API_KEY", "k")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!d.join("preds.json").exists());
    let run2 = json(d.join("preds.run2.json"));
    let hotel = run2["pages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["page_id"] == "hotel")
        .unwrap();
    assert!(hotel["records"].is_null());
    assert_eq!(hotel["error"], "no JSON found in model response");
    assert_eq!(hotel["meta"]["representation_kind"], "hierarchical_json");
    assert_eq!(server.requests().len(), 10);

    let out = webrec(
        d,
        &[
            "score",
            "--gold",
            &gold(),
            "--pred",
            "preds.run1.json",
            "--pred",
            "preds.run2.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = json(d.join("report.json"));
    assert_eq!(report["input_type"], "Hierarchical JSON");
    assert_eq!(report["runs"], 2);
    assert_eq!(report["summary"]["pages_scored"], 4);
    assert_eq!(report["summary"]["avg_f1"], 1.0);
    assert_eq!(report["skipped_pages"].as_array().unwrap().len(), 1);
}
