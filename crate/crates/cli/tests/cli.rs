use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn certsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certsched"))
        .args(args)
        .current_dir(scenarios())
        .env_remove("CERTSCHED_PORT")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn solve_tiny_matches_oracle_objective() {
    let out = certsched(&["solve", "tiny2.json", "--weights", "tiny2.weights.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["objective_milli"], 14920);
    assert_eq!(v["n_scheduled"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 of 2 orders scheduled"));
}

#[test]
fn solve_writes_out_file() {
    let path = std::env::temp_dir().join(format!("certsched-cli-{}.json", std::process::id()));
    let out = certsched(&["solve", "canonical.json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(v["n_scheduled"], 1);
}

#[test]
fn verify_canonical_passes_every_check() {
    let out = certsched(&["verify", "canonical.json", "--seeds", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["counterfactual"]["passed"], 7);
    assert_eq!(v["soundness"]["passed"], v["soundness"]["total"]);
    assert_eq!(v["stability"]["min"], 1.0);
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("| counterfactual | 7/7 |"));
    assert!(summary.contains("min 1.000"));
}

#[test]
fn explain_single_kind_storage_certificate() {
    let out = certsched(&["explain", "canonical.json", "--order", "ORD-03", "--kind", "whynot"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["case"], "infeasibility");
    assert_eq!(v["kinds"], serde_json::json!(["storage_upper_bound"]));
}

#[test]
fn whatif_then_apply_schedules_order() {
    let out = certsched(&["explain", "canonical.json", "--order", "ORD-06", "--kind", "whatif"]);
    assert!(out.status.success());
    let w = json(&out);
    assert_eq!(w["validated"], true);

    let path = std::env::temp_dir().join(format!("certsched-atoms-{}.json", std::process::id()));
    std::fs::write(&path, w["chosen"].to_string()).unwrap();
    let out = certsched(&["apply", "canonical.json", "--atoms", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["diff"]["newly_scheduled"], serde_json::json!(["ORD-06"]));
}

#[test]
fn generate_is_deterministic() {
    let args = ["generate", "--orders", "12", "--satellites", "3", "--seed", "5"];
    let a = certsched(&args);
    let b = certsched(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["orders"].as_array().unwrap().len(), 12);
}

#[test]
fn bench_emits_csv_header() {
    let out = certsched(&["bench", "constellation", "--quick"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("axis,value,n_orders"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(certsched(&["bogus"]).status.code(), Some(2));
    assert_eq!(certsched(&["explain", "canonical.json", "--kind", "whynot"]).status.code(), Some(2));
    assert_eq!(certsched(&["solve", "missing.json"]).status.code(), Some(2));
}

#[test]
fn unknown_order_fails_with_exit_1() {
    let out = certsched(&["explain", "canonical.json", "--order", "ORD-99", "--kind", "why"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ORD-99"));
}

#[test]
fn serve_honours_port_env() {
    use std::io::{Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::time::{Duration, Instant};

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_certsched"))
        .arg("serve")
        .env("CERTSCHED_PORT", port.to_string())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let reply = loop {
        if let Ok(mut s) = TcpStream::connect(("127.0.0.1", port)) {
            s.write_all(b"GET /healthz HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
            let mut buf = String::new();
            s.read_to_string(&mut buf).unwrap();
            break buf;
        }
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains(r#"{"status":"ok"}"#));
}
