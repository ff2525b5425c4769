use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn semtrace(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semtrace"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .output()
        .unwrap()
}

fn ok(data: &Path, args: &[&str]) -> String {
    let out = semtrace(data, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(data: &Path, args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    serde_json::from_str(&ok(data, &all)).unwrap()
}

#[test]
fn validate_reports_counts_and_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(
        ok(&data, &["ontology", "validate"]),
        "ok: 29 classes, 6 relations, 3 individuals, 9 axioms\n"
    );
    assert!(ok(&data, &["ontology", "validate", &fixture("railway.ont")]).starts_with("ok"));

    let bad = dir.path().join("bad.ont");
    std::fs::write(&bad, "class A\nsubclass A B\n").unwrap();
    let out = semtrace(&data, &["ontology", "validate", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[ontology]"), "{err}");
}

#[test]
fn ontology_tree_prints_indented_hierarchy() {
    let dir = tempfile::tempdir().unwrap();
    let tree = ok(dir.path(), &["ontology", "tree"]);
    assert!(tree.lines().any(|l| l.starts_with("OBU")), "{tree}");
    assert!(tree
        .lines()
        .any(|l| l.starts_with("  ") && l.contains("Position Report")));
}

#[test]
fn ingest_infers_kinds_and_ids_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let docs = dir.path().join("docs");
    std::fs::create_dir(&docs).unwrap();
    std::fs::copy(fixture("som_requirement.txt"), docs.join("som-req.req")).unwrap();
    std::fs::copy(fixture("som_script.ts"), docs.join("som.ts")).unwrap();
    std::fs::copy(fixture("som_failed.log"), docs.join("run1.log")).unwrap();
    std::fs::write(docs.join(".hidden.req"), "ignored").unwrap();
    ok(&data, &["ingest", docs.to_str().unwrap()]);

    let v = json(&data, &["search", "*:*", "--fl", "id,kind,result"]);
    let hits = v["hits"].as_array().unwrap();
    let kinds: Vec<(&str, &str)> = hits
        .iter()
        .map(|h| (h["id"].as_str().unwrap(), h["kind"].as_str().unwrap()))
        .collect();
    assert_eq!(kinds.len(), 3, "{kinds:?}");
    assert!(kinds.contains(&("som-req", "requirement")));
    assert!(kinds.contains(&("som", "test_script")));
    // Logs carry their own id header.
    let log = hits.iter().find(|h| h["kind"] == "log").unwrap();
    assert_eq!(log["result"], "failed");

    let again = semtrace(&data, &["ingest", docs.join("som.ts").to_str().unwrap()]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("duplicate_document"));
    ok(&data, &["ingest", docs.join("som.ts").to_str().unwrap(), "--replace"]);
}

#[test]
fn annotate_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_semtrace"))
        .arg("--data-dir")
        .arg(dir.path())
        .args(["--json", "annotate", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"The RBC shall send the MA to the OBU.")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = v["triples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect())
        .collect();
    assert!(rows.contains(&vec!["rbc", "send", "ma", "asserted"]), "{rows:?}");
}

#[test]
fn run_script_writes_a_parseable_failed_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out/som.log");
    ok(
        &data,
        &[
            "run-script",
            &fixture("som_script.ts"),
            "--fail",
            "RBC send MA",
            "--start",
            "1000",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let log = semtrace_core::testlang::parse_log(&text).unwrap().value;
    assert!(log.verdict.is_failed());
    assert!(text.ends_with("test failed\nTest Stopped\n"));
    // Nothing is stored without --ingest.
    let v = json(&data, &["search"]);
    assert_eq!(v["hits"].as_array().unwrap().len(), 0);
}

#[test]
fn errors_are_reported_with_their_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = semtrace(dir.path(), &["similar", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[unknown_document]"));

    let out = semtrace(dir.path(), &["--json", "similar", "nope"]);
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "unknown_document");

    let out = semtrace(dir.path(), &["search", "obu", "--facet", "colour"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[bad_query]"));
}

#[test]
fn trace_accepts_paths_and_ids_and_review_marks() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let e2e = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/e2e");
    let reqs = e2e.join("requirements");
    let scripts = e2e.join("scripts");
    let from_paths = ok(&data, &["trace", reqs.to_str().unwrap(), scripts.to_str().unwrap()]);
    assert!(from_paths.starts_with("requirement,brake,linking-list,linking-ssb,som,telegram\n"));
    // Paths are analysed on the side; the store stays empty.
    assert_eq!(json(&data, &["search"])["hits"].as_array().unwrap().len(), 0);

    ok(&data, &["ingest", reqs.to_str().unwrap(), scripts.to_str().unwrap()]);
    assert_eq!(ok(&data, &["trace"]), from_paths);
    assert_eq!(
        ok(&data, &["trace", "req-radio,req-som", "brake"]),
        "requirement,brake\nreq-radio,U\nreq-som,C\n"
    );

    ok(&data, &["review", "req-radio", "telegram"]);
    assert_eq!(
        ok(&data, &["trace", "req-radio", "telegram"]),
        "requirement,telegram\nreq-radio,R\n"
    );
    ok(&data, &["review", "req-radio", "telegram", "--clear"]);
    assert_eq!(
        ok(&data, &["trace", "req-radio", "telegram"]),
        "requirement,telegram\nreq-radio,U\n"
    );

    let out = dir.path().join("m.csv");
    ok(&data, &["trace", "--explicit", "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.lines().skip(1).all(|l| !l.contains(",C")), "{csv}");
    let v = json(&data, &["trace", "--explicit"]);
    assert_eq!(v["mode"], "explicit-links");
}

#[test]
fn config_file_sets_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("semtrace.toml");
    std::fs::write(
        &config,
        "data_dir = \"store\"\nport = 9000\nfacets = [\"kind\", \"result\"]\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_semtrace"))
        .arg("--config")
        .arg(&config)
        .args([
            "ingest",
            &fixture("som_requirement.txt"),
            "--kind",
            "requirement",
            "--id",
            "r1",
        ])
        .env_remove("SEMTRACE_DATA_DIR")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("store/documents.json").exists());

    std::fs::write(&config, "prot = 9000\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_semtrace"))
        .arg("--config")
        .arg(&config)
        .args(["search"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));
}
