use std::fs;

use brailleband::stats::READING_STUDY_CSV;
use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("brailleband").chain(args.iter().copied());
    let code = brailleband_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = cli(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&[]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
    assert_eq!(cli(&["ctr", "--gap", "1", "--bogus"]).0, 2);
    assert_eq!(cli(&["schedule", "abc"]).0, 2, "missing --gap");
    assert_eq!(cli(&["ctr", "--gap", "1", "--format", "xml"]).0, 2);
    assert_eq!(cli(&["encode", "a@b"]).0, 1);
    assert_eq!(cli(&["stats", "--summary", "/nonexistent.csv"]).0, 1);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("schedule"));
}

#[test]
fn encode_prints_cells() {
    assert_eq!(ok(&["encode", "a"]), "a: 1\n");
    assert_eq!(
        ok(&["encode", "A 10"]),
        "a: 1\nspace: -\n#: 3,4,5,6\n1: 1\n0: 2,4,5\n"
    );
    let v = json(&["encode", "q", "--format", "structured"]);
    assert_eq!(v[0]["dots"], serde_json::json!([1, 2, 3, 4, 5]));
}

#[test]
fn table_lists_every_symbol() {
    let t = ok(&["table"]);
    assert_eq!(t.lines().count(), 37);
    assert!(t.starts_with("a 1\n"));
    assert!(t.ends_with("# 3,4,5,6\n"));
}

#[test]
fn ctr_output() {
    assert_eq!(
        ok(&["ctr", "--gap", "1.0"]),
        "max 0.625 min 0.25 avg 0.4375\n"
    );
    // 1/(0.6+2) and 1/(3+2)
    assert_eq!(
        ok(&["ctr", "--gap", "2"]),
        "max 0.3846 min 0.2 avg 0.2923\n"
    );
    assert_eq!(cli(&["ctr", "--gap=-1"]).0, 1);
}

#[test]
fn schedule_for_q() {
    assert_eq!(
        ok(&["schedule", "q", "--gap", "1000"]),
        "event 1 0 300\nevent 2 600 300\nevent 3 1200 300\nevent 4 1800 300\nevent 5 2400 300\nchar q 0 4000\ntotal 4000\n"
    );
}

#[test]
fn schedule_and_emulate_agree() {
    for (text, gap) in [
        ("cat", "1000"),
        ("hello world 42", "400"),
        ("Zq9 x", "2000"),
        ("", "800"),
    ] {
        let s = json(&["schedule", text, "--gap", gap, "--format", "structured"]);
        let e = json(&["emulate", text, "--gap", gap, "--format", "structured"]);
        let scheduled: Vec<(u64, u64, u64)> = s["events"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| {
                let start = x["start_ms"].as_u64().unwrap();
                (
                    x["node"].as_u64().unwrap(),
                    start,
                    start + x["duration_ms"].as_u64().unwrap(),
                )
            })
            .collect();
        let emulated: Vec<(u64, u64, u64)> = e["events"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| {
                (
                    x["node"].as_u64().unwrap(),
                    x["on_ms"].as_u64().unwrap(),
                    x["off_ms"].as_u64().unwrap(),
                )
            })
            .collect();
        assert_eq!(scheduled, emulated, "{text:?}");
        assert_eq!(s["total_duration_ms"], e["horizon_ms"], "{text:?}");
    }
}

#[test]
fn transmit_shows_paced_bytes() {
    let out = ok(&["transmit", "ab", "--gap", "500"]);
    assert!(out.contains("byte 0 0x61 a\n"));
    // 'a' is one dot: 600 ms + 500 ms gap
    assert!(out.contains("byte 1100 0x62 b\n"));
    assert!(out.contains("select 1100 0\npulse 1100 300\n"));
    assert!(out.ends_with("end 2800\n"));
}

#[test]
fn custom_timing_flags() {
    let out = ok(&[
        "schedule",
        "b",
        "--gap",
        "100",
        "--dot-on",
        "50",
        "--dot-off",
        "25",
    ]);
    assert_eq!(
        out,
        "event 1 0 50\nevent 2 75 50\nchar b 0 250\ntotal 250\n"
    );
    assert_eq!(
        cli(&["schedule", "b", "--gap", "100", "--dot-on", "0"]).0,
        1
    );
}

#[test]
fn stats_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("table.csv");
    fs::write(&summary, READING_STUDY_CSV).unwrap();
    let embedded = ok(&["stats"]);
    assert_eq!(
        ok(&["stats", "--summary", summary.to_str().unwrap()]),
        embedded
    );
    assert!(embedded.contains("treatment      21168.37    6     3528.06     15.1252"));
    assert!(embedded.contains("1500 vs 800       3.07"));

    let raw = dir.path().join("raw.csv");
    fs::write(
        &raw,
        "subject,gap_ms,accuracy_pct\na,1000,90\nb,1000,80\na,500,60\nb,500,40\n",
    )
    .unwrap();
    let v = json(&[
        "stats",
        "--raw",
        raw.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert_eq!(v["reference_ms"], 1000);
    assert_eq!(v["anova"]["df_error"], 2);
    // group means 85 and 50, grand mean 67.5: ss_t = 2*(17.5^2)*2
    assert!((v["anova"]["ss_treatment"].as_f64().unwrap() - 1225.0).abs() < 1e-9);

    assert_eq!(cli(&["stats", "--summary", "x", "--raw", "y"]).0, 2);
}

#[test]
fn geometry_checks() {
    assert!(ok(&["geometry"]).ends_with("ok\n"));
    let (code, out, _) = cli(&["geometry", "--place", "4:0:30"]);
    assert_eq!(code, 1);
    assert!(out.contains("violation 1 4 30.00\n"));
    assert_eq!(cli(&["geometry", "--scale", "0"]).0, 1);
}

#[test]
fn session_workflow_through_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().to_str().unwrap();
    let created = json(&[
        "session",
        "create",
        "--store",
        store,
        "--subject",
        "s1",
        "--gap",
        "1000",
        "--seed",
        "42",
        "--format",
        "structured",
    ]);
    let id = created["id"].as_str().unwrap().to_string();
    assert_eq!(created["words"].as_array().unwrap().len(), 10);

    assert_eq!(
        ok(&["session", "transmit", &id, "cat", "--store", store]),
        "record 0\nsent_at 0\nduration 7200\n"
    );
    let timeline = ok(&["session", "timeline", &id, "0", "--store", store]);
    assert_eq!(
        timeline.lines().filter(|l| l.starts_with("node ")).count(),
        7
    );
    assert!(timeline.ends_with("horizon 7200\n"));

    let (code, _, err) = cli(&["session", "guess", &id, "0", "ca", "--store", store]);
    assert_eq!(code, 1);
    assert!(err.contains("guess has 2 characters"));
    assert_eq!(
        ok(&["session", "guess", &id, "0", "cbt", "--store", store]),
        "record 0 cat cbt +-+\naccuracy 66.67\nsession 66.67\n"
    );
    assert_eq!(
        ok(&["session", "rating", &id, "9", "--store", store]),
        "rating 9\n"
    );
    ok(&["session", "close", &id, "--store", store]);
    assert_eq!(
        cli(&["session", "transmit", &id, "dog", "--store", store]).0,
        1
    );

    let shown = ok(&["session", "show", &id, "--store", store]);
    assert!(shown.contains("status closed\n"));
    assert!(shown.contains("record 0 cat cbt 66.67\n"));
    assert!(shown.contains("rating 9\n"));

    // one session is not enough for statistics
    assert_eq!(cli(&["report", "--store", store]).0, 1);
    assert_eq!(cli(&["session", "show", &id]).0, 1, "store is required");
}

#[test]
fn report_over_cli_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().to_str().unwrap();
    for (gap, guess) in [
        ("1000", "cat"),
        ("1000", "cot"),
        ("500", "xat"),
        ("500", "xyt"),
    ] {
        let v = json(&[
            "session",
            "create",
            "--store",
            store,
            "--subject",
            "s",
            "--gap",
            gap,
            "--format",
            "structured",
        ]);
        let id = v["id"].as_str().unwrap();
        ok(&["session", "transmit", id, "cat", "--store", store]);
        ok(&["session", "guess", id, "0", guess, "--store", store]);
    }
    let text = ok(&["report", "--store", store, "--gaps", "1000,500"]);
    assert!(text.contains("Pairwise vs 1000 ms"));
    assert!(text.contains("Usability mean unavailable"));
    let v = json(&[
        "report",
        "--store",
        store,
        "--format",
        "structured",
        "--family",
        "selected-pairs",
    ]);
    assert_eq!(
        v["sessions_per_gap"],
        serde_json::json!([[1000, 2], [500, 2]])
    );
    assert_eq!(v["stats"]["pairwise"][0]["family_size"], 1);
}

#[test]
fn serve_answers_http() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpStream;
    use std::process::{Command, Stdio};

    let mut child = Command::new(env!("CARGO_BIN_EXE_brailleband"))
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .expect(&line)
        .to_string();

    let body = r#"{"subject":"s1","char_gap_ms":1000}"#;
    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "POST /sessions HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 201"), "{response}");
    assert!(response.contains(r#""id":"000001""#));
}
