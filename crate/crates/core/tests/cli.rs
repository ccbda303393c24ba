mod support;

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fuzzy_mcdm::workspace::to_versioned_json;
use fuzzy_mcdm::{Favored, Hierarchy, LinguisticTerm, ResponseSheet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

use support::{random_sheet, uniform_sheet};

fn fmcdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmcdm"))
        .args(args)
        .env_remove("FMCDM_WORKSPACE")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn init_preset(dir: &TempDir) -> PathBuf {
    let ws = dir.path().join("ws");
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(&ws),
        "--preset",
        "egov-security-v1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    ws
}

fn write_sheet(dir: &Path, sheet: &ResponseSheet) -> PathBuf {
    let path = dir.join(format!("{}.in.json", sheet.decision_maker_id));
    fs::write(&path, to_versioned_json(sheet)).unwrap();
    path
}

#[test]
fn init_preset_prints_counts() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path().join("ws");
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(&ws),
        "--preset",
        "egov-security-v1",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "15 comparison sets, 44 questions\n");
    assert!(ws.join("hierarchy.json").is_file());
}

#[test]
fn init_rejects_non_empty_directory() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("x"), "x").unwrap();
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(dir.path()),
        "--preset",
        "egov-security-v1",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn init_rejects_invalid_hierarchy_listing_violations() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("h.json");
    fs::write(
        &file,
        r#"{"goal":"g","criteria":[{"id":"A","label":"A"}],"subCriteria":{"A":[]},"alternatives":[{"id":"X","label":"X"}]}"#,
    )
    .unwrap();
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(&dir.path().join("ws")),
        "--hierarchy",
        s(&file),
    ]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("criteria count < 2"), "{err}");
    assert!(err.contains("alternatives"), "{err}");

    fs::write(&file, "not json").unwrap();
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(&dir.path().join("ws")),
        "--hierarchy",
        s(&file),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn init_from_hierarchy_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("h.json");
    fs::write(
        &file,
        serde_json::to_vec(&Hierarchy::preset_egov()).unwrap(),
    )
    .unwrap();
    let o = fmcdm(&[
        "init",
        "--workspace",
        s(&dir.path().join("ws")),
        "--hierarchy",
        s(&file),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "15 comparison sets, 44 questions\n");
}

#[test]
fn workspace_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let o = Command::new(env!("CARGO_BIN_EXE_fmcdm"))
        .args(["questions", "--format", "csv"])
        .env("FMCDM_WORKSPACE", &ws)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 45);
}

#[test]
fn questions_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let o = fmcdm(&["questions", "--workspace", s(&ws), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(reader.records().count(), 44);

    let o = fmcdm(&["questions", "--workspace", s(&ws), "--format", "json"]);
    let qs: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(qs.len(), 44);
    for (i, q) in qs.iter().enumerate() {
        assert_eq!(q["index"], i);
        assert_eq!(q["options"].as_array().unwrap().len(), 5);
    }
    assert_eq!(qs[0]["firstNode"]["id"], "M");
    assert_eq!(qs[0]["secondNode"]["id"], "T");
}

#[test]
fn questions_on_missing_workspace_fails() {
    let dir = TempDir::new().unwrap();
    let o = fmcdm(&[
        "questions",
        "--workspace",
        s(&dir.path().join("none")),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn import_reports_completeness_and_inconsistency() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let sheet = uniform_sheet(&h, "dm-01", LinguisticTerm::Important, Favored::First);
    let mut partial = uniform_sheet(&h, "dm-02", LinguisticTerm::Important, Favored::First);
    partial.answers.truncate(30);
    let a = write_sheet(dir.path(), &sheet);
    let b = write_sheet(dir.path(), &partial);
    let o = fmcdm(&["import", "--workspace", s(&ws), "--sheet", s(&a), s(&b)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("dm-01: 44/44 complete\n"), "{out}");
    assert!(out.contains("dm-02: 30/44 incomplete\n"), "{out}");
    assert!(out.contains("additive inconsistency"), "{out}");
    assert!(ws.join("sheets/dm-01.json").is_file());
    assert!(ws.join("sheets/dm-02.json").is_file());
}

#[test]
fn import_lists_every_unknown_term() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let sheet = uniform_sheet(&h, "dm-01", LinguisticTerm::Important, Favored::First);
    let mut value: Value = serde_json::from_slice(&to_versioned_json(&sheet)).unwrap();
    value["answers"][3]["term"] = "Okay".into();
    value["answers"][7]["term"] = "Critical".into();
    value["answers"][9]["favored"] = "left".into();
    let path = dir.path().join("bad.json");
    fs::write(&path, value.to_string()).unwrap();
    let o = fmcdm(&["import", "--workspace", s(&ws), "--sheet", s(&path)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("Okay") && err.contains("Critical") && err.contains("left"),
        "{err}"
    );
    assert!(!ws.join("sheets/dm-01.json").exists());
}

#[test]
fn import_rejects_foreign_hierarchy() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let mut sheet = uniform_sheet(&h, "dm-01", LinguisticTerm::Important, Favored::First);
    sheet.hierarchy_ref = "0".repeat(64);
    let path = write_sheet(dir.path(), &sheet);
    let o = fmcdm(&["import", "--workspace", s(&ws), "--sheet", s(&path)]);
    assert_eq!(code(&o), 4);
}

#[test]
fn import_rejects_structural_problems() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let mut sheet = uniform_sheet(&h, "dm-01", LinguisticTerm::Important, Favored::First);
    sheet.answers[0].second = "Z9".into();
    let dup = sheet.answers[5].clone();
    sheet.answers.push(dup);
    let path = write_sheet(dir.path(), &sheet);
    let o = fmcdm(&["import", "--workspace", s(&ws), "--sheet", s(&path)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("Z9") && err.contains("duplicate"), "{err}");
}

#[test]
fn compute_without_sheets_is_insufficient() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let o = fmcdm(&["compute", "--workspace", s(&ws)]);
    assert_eq!(code(&o), 5);
    let o = fmcdm(&["report", "--workspace", s(&ws), "--format", "csv"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn compute_and_report_all_formats() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let paths: Vec<PathBuf> = (1..=3)
        .map(|i| write_sheet(dir.path(), &random_sheet(&h, &format!("dm-0{i}"), &mut rng)))
        .collect();
    let mut args = vec!["import", "--workspace", s(&ws), "--sheet"];
    args.extend(paths.iter().map(|p| s(p)));
    assert_eq!(code(&fmcdm(&args)), 0);

    let o = fmcdm(&["compute", "--workspace", s(&ws)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first_line = stdout(&o).lines().next().unwrap().to_string();
    assert!(first_line.ends_with(": 3 decision makers"), "{first_line}");
    let id = first_line
        .trim_start_matches("report ")
        .split(':')
        .next()
        .unwrap()
        .to_string();
    assert!(ws.join(format!("reports/{id}.report.json")).is_file());
    assert!(ws.join(format!("reports/{id}.csv")).is_file());
    assert!(ws.join(format!("reports/{id}.md")).is_file());

    let o = fmcdm(&["report", "--workspace", s(&ws), "--format", "json"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["schemaVersion"], 1);
    assert_eq!(doc["metadata"]["panelSize"], 3);
    for mode in ["pessimistic", "normal", "optimistic"] {
        let total: f64 = doc["report"]["aggregate"]["alternativeScores"][mode]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_f64().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    let out = dir.path().join("r.md");
    let o = fmcdm(&[
        "report",
        "--workspace",
        s(&ws),
        "--format",
        "md",
        "--out",
        s(&out),
        "--id",
        &id,
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&out)
        .unwrap()
        .starts_with(&format!("# Decision report {id}")));

    let o = fmcdm(&[
        "report",
        "--workspace",
        s(&ws),
        "--format",
        "csv",
        "--id",
        "missing",
    ]);
    assert_eq!(code(&o), 2);
    let o = fmcdm(&["report", "--workspace", s(&ws), "--format", "xml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn uniform_panel_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let h = Hierarchy::preset_egov();
    let sheet = uniform_sheet(
        &h,
        "dm-01",
        LinguisticTerm::EquallyImportant,
        Favored::First,
    );
    let path = write_sheet(dir.path(), &sheet);
    assert_eq!(
        code(&fmcdm(&[
            "import",
            "--workspace",
            s(&ws),
            "--sheet",
            s(&path)
        ])),
        0
    );
    assert_eq!(code(&fmcdm(&["compute", "--workspace", s(&ws)])), 0);
    let o = fmcdm(&["report", "--workspace", s(&ws), "--format", "json"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let oracle = support::oracle::evaluate_workspace(&ws);
    for mode in support::oracle::MODES {
        for alt in ["ALT.C", "ALT.I", "ALT.A"] {
            let got = doc["report"]["aggregate"]["alternativeScores"][mode][alt]
                .as_f64()
                .unwrap();
            let want = oracle.aggregate[&(
                "alternatives".to_string(),
                mode.to_string(),
                alt.to_string(),
            )];
            assert!((got - want).abs() <= 1e-9, "{mode} {alt}: {got} vs {want}");
        }
    }
}

#[test]
fn serve_reports_bind_failure() {
    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = fmcdm(&["serve", "--workspace", s(&ws), "--listen", &addr]);
    assert_eq!(code(&o), 6);
    let o = fmcdm(&[
        "serve",
        "--workspace",
        s(&dir.path().join("none")),
        "--listen",
        &addr,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn serve_answers_panel_results() {
    use std::io::{Read, Write};
    use std::net::TcpStream;
    use std::time::{Duration, Instant};

    let dir = TempDir::new().unwrap();
    let ws = init_preset(&dir);
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_fmcdm"))
        .args(["serve", "--workspace", s(&ws), "--listen", &addr])
        .env("RUST_LOG", "warn")
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut stream = loop {
        match TcpStream::connect(&addr) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                let _ = child.kill();
                panic!("server did not start: {e}");
            }
        }
    };
    write!(
        stream,
        "GET /panel/results HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let _ = child.kill();
    let _ = child.wait();
    assert!(response.starts_with("HTTP/1.1 409"), "{response}");
    assert!(response.contains("no_complete_sheets"));
}
