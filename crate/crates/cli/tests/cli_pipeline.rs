//! End-to-end tests of the `prigen` binary: exit codes, stream discipline,
//! per-stage behavior, and cross-stage determinism.

use prigen_testutil::{build_apk, generate_corpus, AxmlBuilder, DexBuilder, InvokeKind, MethodKey};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn prigen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prigen"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawning prigen")
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = run(cmd);
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const DB_JSON: &str = r#"[
    {
        "class": "android.location.LocationManager",
        "method": "getLastKnownLocation",
        "descriptor": "(Ljava/lang/String;)Landroid/location/Location;",
        "description": "retrieves the last known device location",
        "sensitive_info": "the user's location",
        "permissions": ["android.permission.ACCESS_FINE_LOCATION"],
        "group": "LOCATION",
        "deprecated": false
    },
    {
        "class": "java.net.URL",
        "method": "openConnection",
        "descriptor": null,
        "description": "opens a network connection",
        "sensitive_info": "network traffic",
        "permissions": ["android.permission.INTERNET"],
        "group": "INTERNET",
        "deprecated": false
    }
]"#;

fn write_db(dir: &Path) -> PathBuf {
    let path = dir.join("api.json");
    std::fs::write(&path, DB_JSON).unwrap();
    path
}

fn location_key() -> MethodKey {
    MethodKey::new(
        "Landroid/location/LocationManager;",
        "getLastKnownLocation",
        &["Ljava/lang/String;"],
        "Landroid/location/Location;",
    )
}

fn url_key() -> MethodKey {
    MethodKey::new(
        "Ljava/net/URL;",
        "openConnection",
        &[],
        "Ljava/net/URLConnection;",
    )
}

/// Fixture APK: B.g → location API, A.f → B.g, Net.fetch → URL API. The
/// manifest declares only the location permission, so INTERNET use shows up
/// in the cross-check.
fn fixture_apk_bytes(package: &str) -> Vec<u8> {
    let mut b = DexBuilder::new();
    let a_f = MethodKey::new("Lcom/app/A;", "f", &[], "V");
    let b_g = MethodKey::new("Lcom/app/B;", "g", &[], "V");
    b.method_calling(a_f, &[(InvokeKind::Virtual, b_g.clone())]);
    b.method_calling(b_g, &[(InvokeKind::Virtual, location_key())]);
    b.method_calling(
        MethodKey::new("Lcom/app/Net;", "fetch", &[], "V"),
        &[(InvokeKind::Virtual, url_key())],
    );
    let (dex, _) = b.build();
    let manifest = AxmlBuilder::manifest(package, &["android.permission.ACCESS_FINE_LOCATION"]);
    build_apk(&[
        ("AndroidManifest.xml", manifest.as_slice()),
        ("classes.dex", dex.as_slice()),
    ])
}

fn write_fixture_apk(dir: &Path, name: &str, package: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, fixture_apk_bytes(package)).unwrap();
    path
}

fn read_jsonl_values(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

// ---------------------------------------------------------------- eval

#[test]
fn eval_identity_scores_100() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("h.txt");
    let reference = dir.path().join("r.txt");
    std::fs::write(&hyp, "sends a network request\nreads the location\n").unwrap();
    std::fs::write(&reference, "sends a network request\nreads the location\n").unwrap();
    let out = run_ok(prigen()
        .arg("eval")
        .arg("--hyp")
        .arg(&hyp)
        .arg("--ref")
        .arg(&reference));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"bleu4\": 100.00"), "stdout: {stdout}");
    assert!(stdout.contains("\"pairs\": 2"));
    let parsed: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(parsed["rouge_f1"], serde_json::json!(100.0));
}

#[test]
fn eval_rejects_mismatched_line_counts() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("h.txt");
    let reference = dir.path().join("r.txt");
    std::fs::write(&hyp, "a b\n").unwrap();
    std::fs::write(&reference, "a b\nc d\n").unwrap();
    let out = run(prigen()
        .arg("eval")
        .arg("--hyp")
        .arg(&hyp)
        .arg("--ref")
        .arg(&reference));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
}

// ---------------------------------------------------------------- usage

#[test]
fn unknown_subcommand_exits_1_with_usage() {
    let out = run(prigen().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("Usage"));
}

#[test]
fn help_exits_0() {
    let out = run(prigen().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
}

// ---------------------------------------------------------------- extract

#[test]
fn extract_missing_apk_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let out = run(prigen()
        .arg("extract")
        .arg(dir.path().join("missing.apk"))
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("missing.apk"));
}

#[test]
fn extract_fixture_apk_writes_expected_records() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let apk = write_fixture_apk(dir.path(), "app.apk", "com.app");
    let out_path = dir.path().join("prcs.jsonl");
    let out = run_ok(prigen()
        .arg("extract")
        .arg(&apk)
        .arg("--db")
        .arg(&db)
        .arg("--hops")
        .arg("1")
        .arg("--out")
        .arg(&out_path));
    assert!(stderr_of(&out).contains("apks_ok=1 apks_failed=0 prcs_total=2"));

    let records = read_jsonl_values(&out_path);
    assert_eq!(records.len(), 2);
    // Sorted by class: com.app.B before com.app.Net.
    assert_eq!(records[0]["class"], "com.app.B");
    assert_eq!(records[0]["method"], "g");
    assert_eq!(records[0]["hop"], 1);
    assert_eq!(
        records[0]["apis"][0]["class"],
        "android.location.LocationManager"
    );
    assert_eq!(records[1]["class"], "com.app.Net");
    assert_eq!(records[1]["apis"][0]["class"], "java.net.URL");
    assert_eq!(records[0]["apk_id"], "app");
}

#[test]
fn extract_hops_two_is_a_superset_of_hops_one() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let apk = write_fixture_apk(dir.path(), "app.apk", "com.app");
    let out1 = dir.path().join("h1.jsonl");
    let out2 = dir.path().join("h2.jsonl");
    for (hops, path) in [("1", &out1), ("2", &out2)] {
        run_ok(prigen()
            .arg("extract")
            .arg(&apk)
            .arg("--db")
            .arg(&db)
            .arg("--hops")
            .arg(hops)
            .arg("--out")
            .arg(path));
    }
    let ids = |path: &Path| -> Vec<(String, String, u64)> {
        read_jsonl_values(path)
            .iter()
            .map(|r| {
                (
                    r["class"].as_str().unwrap().to_string(),
                    r["method"].as_str().unwrap().to_string(),
                    r["hop"].as_u64().unwrap(),
                )
            })
            .collect()
    };
    let one = ids(&out1);
    let two = ids(&out2);
    assert_eq!(one.len(), 2);
    assert_eq!(two.len(), 3); // adds com.app.A.f at hop 2
    for record in &one {
        assert!(two.contains(record), "hop-1 record missing at hops=2");
    }
    assert!(two
        .iter()
        .any(|(class, method, hop)| class == "com.app.A" && method == "f" && *hop == 2));
}

#[test]
fn extract_cross_check_logs_undeclared_use_at_info() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let apk = write_fixture_apk(dir.path(), "app.apk", "com.app");
    let out_path = dir.path().join("prcs.jsonl");
    // The fixture manifest declares only location; INTERNET use must be
    // reported when PRIGEN_LOG=info, and stay silent at the default level.
    let noisy = run_ok(prigen()
        .env("PRIGEN_LOG", "info")
        .arg("extract")
        .arg(&apk)
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(&out_path));
    assert!(stderr_of(&noisy).contains("android.permission.INTERNET"));
    let quiet = run_ok(prigen()
        .arg("extract")
        .arg(&apk)
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(&out_path));
    assert!(!stderr_of(&quiet).contains("android.permission.INTERNET"));
}

#[test]
fn batch_extract_skips_corrupt_apks_and_is_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let batch = dir.path().join("apks");
    std::fs::create_dir(&batch).unwrap();
    write_fixture_apk(&batch, "aaa.apk", "com.aaa");
    write_fixture_apk(&batch, "bbb.apk", "com.bbb");
    std::fs::write(batch.join("corrupt.apk"), b"this is not a zip").unwrap();

    let out1 = dir.path().join("w1.jsonl");
    let out4 = dir.path().join("w4.jsonl");
    for (workers, path) in [("1", &out1), ("4", &out4)] {
        let out = run_ok(prigen()
            .arg("extract")
            .arg(&batch)
            .arg("--db")
            .arg(&db)
            .arg("--workers")
            .arg(workers)
            .arg("--out")
            .arg(path));
        assert!(
            stderr_of(&out).contains("apks_ok=2 apks_failed=1"),
            "stderr: {}",
            stderr_of(&out)
        );
    }
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes4 = std::fs::read(&out4).unwrap();
    assert_eq!(bytes1, bytes4, "worker count changed merged output");

    // Merged records arrive sorted by apk_id.
    let records = read_jsonl_values(&out1);
    let apk_ids: Vec<&str> = records.iter().map(|r| r["apk_id"].as_str().unwrap()).collect();
    let mut sorted = apk_ids.clone();
    sorted.sort();
    assert_eq!(apk_ids, sorted);
    assert!(apk_ids.contains(&"aaa") && apk_ids.contains(&"bbb"));
}

#[test]
fn batch_extract_rejects_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());
    let batch = dir.path().join("empty");
    std::fs::create_dir(&batch).unwrap();
    let out = run(prigen()
        .arg("extract")
        .arg(&batch)
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("no .apk files"));
}

// ------------------------------------------------- paths through caption

fn write_corpus_jsonl(path: &Path, n: usize, seed: u64) {
    let mut lines = String::new();
    for ex in generate_corpus(n, seed) {
        let record = serde_json::json!({
            "example_id": ex.id,
            "source_text": ex.source,
            "target_caption": ex.caption,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    // Plant an exact duplicate of the first example and one obfuscated
    // method, to give dedup and filter something to do.
    let first = generate_corpus(1, seed).remove(0);
    let dup = serde_json::json!({
        "example_id": "planted-duplicate",
        "source_text": first.source,
        "target_caption": first.caption,
    });
    lines.push_str(&dup.to_string());
    lines.push('\n');
    let obf = serde_json::json!({
        "example_id": "planted-obfuscated",
        "source_text": "int a(int b) {\n    int c = b + b;\n    return c;\n}\n",
        "target_caption": "does something",
    });
    lines.push_str(&obf.to_string());
    lines.push('\n');
    std::fs::write(path, lines).unwrap();
}

/// Run paths → dedup → filter → split → train → predict into `dir`,
/// returning the paths of every produced file.
fn run_pipeline(dir: &Path) -> Vec<PathBuf> {
    let corpus = dir.join("corpus.jsonl");
    write_corpus_jsonl(&corpus, 24, 11);

    let ctx = dir.join("ctx.jsonl");
    run_ok(prigen()
        .arg("paths")
        .arg("--in")
        .arg(&corpus)
        .arg("--out")
        .arg(&ctx));

    let kept = dir.join("kept.jsonl");
    let removed = dir.join("removed.jsonl");
    run_ok(prigen()
        .arg("dataset")
        .arg("dedup")
        .arg("--in")
        .arg(&ctx)
        .arg("--out")
        .arg(&kept)
        .arg("--removed")
        .arg(&removed));

    let filtered = dir.join("filtered.jsonl");
    run_ok(prigen()
        .arg("dataset")
        .arg("filter")
        .arg("--in")
        .arg(&kept)
        .arg("--out")
        .arg(&filtered));

    let splits = dir.join("splits");
    run_ok(prigen()
        .arg("dataset")
        .arg("split")
        .arg("--in")
        .arg(&filtered)
        .arg("--out-dir")
        .arg(&splits)
        .arg("--split")
        .arg("0.8,0.2,0.0")
        .arg("--seed")
        .arg("42"));

    let model = dir.join("model.json");
    run_ok(prigen()
        .arg("train")
        .arg("--data")
        .arg(&splits)
        .arg("--out")
        .arg(&model)
        .arg("--emb")
        .arg("12")
        .arg("--enc")
        .arg("12")
        .arg("--dec")
        .arg("24")
        .arg("--max-target")
        .arg("8")
        .arg("--epochs")
        .arg("6")
        .arg("--batch")
        .arg("8")
        .arg("--lr")
        .arg("0.01")
        .arg("--seed")
        .arg("7"));

    let hyp = dir.join("hyp.txt");
    let refs = dir.join("ref.txt");
    run_ok(prigen()
        .arg("predict")
        .arg("--model")
        .arg(&model)
        .arg("--in")
        .arg(splits.join("train.txt"))
        .arg("--out")
        .arg(&hyp)
        .arg("--refs-out")
        .arg(&refs)
        .arg("--beam")
        .arg("2"));

    vec![
        ctx,
        kept,
        removed,
        filtered,
        splits.join("train.txt"),
        splits.join("validation.txt"),
        splits.join("test.txt"),
        model,
        hyp,
        refs,
    ]
}

#[test]
fn pipeline_stages_chain_and_rerun_byte_identically() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let files_a = run_pipeline(dir_a.path());
    let files_b = run_pipeline(dir_b.path());

    // Stage sanity on the first run. The templated corpus contains natural
    // near-duplicates too, so assert on the planted records rather than
    // exact counts (the oracle-equality dedup tests live with the corpus
    // module).
    let removed = read_jsonl_values(&files_a[2]);
    assert!(
        removed.iter().any(|r| r["removed_id"] == "planted-duplicate"),
        "planted duplicate must be removed"
    );
    assert!(removed
        .iter()
        .all(|r| r["kept_id"].as_str().is_some_and(|w| !w.is_empty())));
    let kept = read_jsonl_values(&files_a[1]);
    assert!(kept.iter().all(|r| r["example_id"] != "planted-duplicate"));
    let filtered = read_jsonl_values(&files_a[3]);
    assert!(
        filtered.iter().all(|r| r["example_id"] != "planted-obfuscated"),
        "obfuscated example must be filtered out"
    );
    assert!(filtered
        .iter()
        .all(|r| r["obfuscation_score"].as_f64().unwrap() <= 0.5));
    assert!(!filtered.is_empty() && filtered.len() < kept.len());

    let hyp_lines = std::fs::read_to_string(&files_a[8]).unwrap();
    let ref_lines = std::fs::read_to_string(&files_a[9]).unwrap();
    assert_eq!(hyp_lines.lines().count(), ref_lines.lines().count());

    // Byte-identical rerun, file by file.
    for (a, b) in files_a.iter().zip(&files_b) {
        let bytes_a = std::fs::read(a).unwrap();
        let bytes_b = std::fs::read(b).unwrap();
        assert_eq!(
            bytes_a,
            bytes_b,
            "{} differs between identical runs",
            a.file_name().unwrap().to_string_lossy()
        );
    }
}

#[test]
fn caption_marks_bytecode_records_and_captions_source_records() {
    let dir = tempfile::tempdir().unwrap();
    let db = write_db(dir.path());

    // A real bytecode PRCS file from the fixture APK...
    let apk = write_fixture_apk(dir.path(), "app.apk", "com.app");
    let prcs_path = dir.path().join("prcs.jsonl");
    run_ok(prigen()
        .arg("extract")
        .arg(&apk)
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(&prcs_path));
    // ...plus one record whose code is a source-form rendering.
    let mut prcs_text = std::fs::read_to_string(&prcs_path).unwrap();
    let source_record = serde_json::json!({
        "apk_id": "source",
        "class": "com.app.Loc",
        "method": "getSpot",
        "descriptor": "()V",
        "hop": 1,
        "loc": 3,
        "apis": [{
            "class": "android.location.LocationManager",
            "method": "getLastKnownLocation",
            "permissions": ["android.permission.ACCESS_FINE_LOCATION"],
            "group": "LOCATION",
            "description": "retrieves the last known device location",
            "sensitive_info": "the user's location",
            "call_sites": 1
        }],
        "code": "public int getSpot() {\n    return spot;\n}\n"
    });
    prcs_text.push_str(&source_record.to_string());
    prcs_text.push('\n');
    std::fs::write(&prcs_path, prcs_text).unwrap();

    // A tiny model for decoding.
    let pipeline_dir = tempfile::tempdir().unwrap();
    let files = run_pipeline(pipeline_dir.path());
    let model = &files[7];

    let out_path = dir.path().join("captions.jsonl");
    let out = run_ok(prigen()
        .arg("caption")
        .arg("--model")
        .arg(model)
        .arg("--prcs")
        .arg(&prcs_path)
        .arg("--db")
        .arg(&db)
        .arg("--out")
        .arg(&out_path));
    assert!(stderr_of(&out).contains("captioned=1 no_source=2"));

    let records = read_jsonl_values(&out_path);
    assert_eq!(records.len(), 3);
    for record in &records {
        let privacy = record["privacy_caption"].as_str().unwrap();
        assert!(!privacy.is_empty());
        if record["apk_id"] == "source" {
            assert!(record.get("no_source").is_none());
            assert!(privacy.contains("This code accesses the user's location"));
        } else {
            assert_eq!(record["no_source"], true);
            assert_eq!(record["code_caption"], "");
            assert!(privacy.starts_with("No description was generated"));
        }
        // The PRCS fields are mirrored.
        assert!(record["class"].as_str().is_some());
        assert!(record["apis"].as_array().is_some());
    }
}
