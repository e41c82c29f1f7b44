use serde_json::Value;
use std::process::{Command, Output};

fn ldl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldl")).args(args).env_remove("LDL_INJECT_FAULT").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn json_carries_schema_and_manifest() {
    let out = ldl(&["constants", "--name", "gamma_23"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["schema"], "ldl/1");
    assert_eq!(doc["command"], "constants");
    let row = &doc["result"]["rows"][0];
    assert_eq!(row["name"], "gamma_23");
    assert!((row["value"].as_f64().unwrap() - 1.4255554).abs() < 1e-6);
    let m = &doc["manifest"];
    for key in ["config_sha256", "output_sha256"] {
        let h = m[key].as_str().unwrap();
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    }
    assert!(m["argv"].as_array().unwrap().len() >= 3);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["truncations"][0], "p <= 3");
}

fn stable(doc: &Value) -> (Value, Value, Value) {
    (doc["result"].clone(), doc["manifest"]["output_sha256"].clone(), doc["manifest"]["config_sha256"].clone())
}

#[test]
fn output_independent_of_threads_and_run() {
    for args in [
        vec!["constants", "--name", "gamma_pnt", "--first-primes", "20000", "--method", "both"],
        vec!["explicit", "--family", "cm_b1_kappa2", "--logR", "50,80", "--counted-primes", "500"],
        vec!["family", "--family", "rank1_36t", "--prime-limit", "60", "--moments", "3"],
    ] {
        let run = |t: &str| {
            let mut a = args.clone();
            a.extend(["--threads", t]);
            let out = ldl(&a);
            assert_eq!(out.status.code(), Some(0), "{args:?}");
            stable(&json_of(&out))
        };
        let one = run("1");
        assert_eq!(one, run("2"), "{args:?}");
        assert_eq!(one, run("2"), "{args:?}");
    }
}

#[test]
fn constants_csv_lists_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.csv");
    let p = path.to_str().unwrap();
    let out = ldl(&["constants", "--name", "all", "--first-primes", "20000", "--format", "csv", "--out", p]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "name");
    assert!(header.iter().any(|h| h == "value"));
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 15, "{} rows", rows.len());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(format!("{p}.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["versions"]["schema"], "ldl/1");
}

#[test]
fn family_csv_rows_start_at_two() {
    let out = ldl(&["family", "--family", "cm_b1_kappa1", "--prime-limit", "30", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p,A0,A1,A2,A'0,A'1,A'2,bad_count,a_tilde"));
    let ps: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ps, ["2", "3", "5", "7", "11", "13", "17", "19", "23", "29"]);
    let manifest: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(manifest["output_sha256"].is_string());
}

#[test]
fn usage_errors_exit_2() {
    let out = ldl(&["constants", "--name", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_of(&out);
    assert_eq!(err["error"]["exit_code"], 2);
    assert!(err["error"]["detail"]["known"].as_array().unwrap().iter().any(|n| n == "gamma_pnt"));

    assert_eq!(ldl(&["explicit", "--family", "nope", "--logR", "50"]).status.code(), Some(2));
    assert_eq!(ldl(&["explicit", "--phi", "smooth:-1", "--logR", "50"]).status.code(), Some(2));
    assert_eq!(ldl(&["constants", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(ldl(&["constants", "--prime-limit", "10", "--first-primes", "10"]).status.code(), Some(2));
    assert_eq!(ldl(&["verify", "--suite", "nope"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fam.json");
    std::fs::write(&cfg, r#"{"name": "x", "A": [0], "B": [1, 6]}"#).unwrap();
    let arg = format!("@{}", cfg.display());
    assert_eq!(ldl(&["family", "--family", &arg]).status.code(), Some(2));
    assert_eq!(ldl(&["family", "--family", "@/nonexistent/fam.json"]).status.code(), Some(2));
}

#[test]
fn verification_failures_exit_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_ldl"))
        .args(["verify", "--suite", "identities"])
        .env("LDL_INJECT_FAULT", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["passed"], false);
    assert_eq!(doc["result"]["fault_injected"], true);

    assert_eq!(ldl(&["verify", "--suite", "identities"]).status.code(), Some(0));
    let printed =
        ["family", "--family", "noncm_3x12t", "--prime-limit", "40", "--verify-closed-forms", "--lemma", "printed"];
    assert_eq!(ldl(&printed).status.code(), Some(3));
    assert_eq!(ldl(&printed[..printed.len() - 2]).status.code(), Some(0));
}

#[test]
fn unreachable_truncations_exit_4() {
    let out = ldl(&["explicit", "--phi", "fejer:2.0", "--logR", "50"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(error_of(&out)["error"]["message"].as_str().unwrap().contains("beyond reach"));

    let out = ldl(&["explicit", "--family", "cm_b1_kappa1", "--logR", "100", "--prime-limit", "1000"]);
    assert_eq!(out.status.code(), Some(4));
    let detail = &error_of(&out)["error"]["detail"];
    assert_eq!(detail["prime_limit"], 1000);
    assert!(detail["required_prime_limit"].as_u64().unwrap() > 1000);
}
