use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reductionlab_cli::format::{export_model, parse_model};
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_reductionlab"));
    cmd.env_remove("REDUCTIONLAB_TOL");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: stdout={} stderr={}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn export_zoo(dir: &Path) -> Vec<PathBuf> {
    let out = run(&["export-zoo", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

fn close(v: &Value, expected: f64) -> bool {
    (v.as_f64().unwrap() - expected).abs() < 1e-12
}

#[test]
fn verify_reports_pass_and_classification() {
    let dir = tempfile::tempdir().unwrap();
    export_zoo(dir.path());
    let cnot = run(&[
        "--json",
        "verify",
        dir.path().join("cnot.json").to_str().unwrap(),
    ]);
    assert_eq!(cnot.status.code(), Some(0));
    let cnot = json(&cnot);
    assert_eq!(cnot["pass"], true);
    assert_eq!(cnot["classification"]["projective"], true);

    let swap = json(&run(&[
        "--json",
        "verify",
        dir.path().join("swap-plus.json").to_str().unwrap(),
    ]));
    assert_eq!(swap["pass"], true);
    assert_eq!(swap["classification"]["projective"], false);
    assert!(close(&swap["classification"]["witness"]["deviation"], 0.5));
    for check in swap["checks"].as_array().unwrap() {
        assert!(check.get("elapsed_ms").is_none());
    }
}

#[test]
fn round_trip_export_parse_verify_is_idempotent() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    for file in export_zoo(first.path()) {
        let text = std::fs::read_to_string(&file).unwrap();
        let loaded = parse_model(&text).unwrap();
        let again = export_model(&loaded.name, &loaded.notes, &loaded.model);
        assert_eq!(again, text, "{}", file.display());
        let copy = second.path().join(file.file_name().unwrap());
        std::fs::write(&copy, again).unwrap();
        let a = run(&["--json", "verify", file.to_str().unwrap()]);
        let b = run(&["--json", "verify", copy.to_str().unwrap()]);
        assert_eq!(
            a.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&a.stdout)
        );
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn sweep_json_is_byte_identical_for_a_fixed_seed() {
    let args = [
        "--json", "sweep", "--seed", "42", "--trials", "30", "--dims", "2..4",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    for check in report["checks"].as_array().unwrap() {
        assert!(check["max_deviation"].as_f64().unwrap() < 1e-9, "{check}");
    }
    let other = run(&[
        "--json", "sweep", "--seed", "43", "--trials", "30", "--dims", "2..4",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn reduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    export_zoo(dir.path());
    let cnot = dir.path().join("cnot.json");
    let out = run(&["--json", "reduce", cnot.to_str().unwrap(), "+", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(close(&r["probability"], 0.5));
    assert_eq!(
        r["state"],
        serde_json::json!([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]])
    );

    let swap = dir.path().join("swap-plus.json");
    for (state, outcome) in [("0", "1"), ("-i", "-1"), ("mixed", "1")] {
        let r = json(&run(&[
            "--json",
            "reduce",
            swap.to_str().unwrap(),
            state,
            outcome,
        ]));
        for row in r["state"].as_array().unwrap() {
            for entry in row.as_array().unwrap() {
                assert!(
                    close(&entry[0], 0.5) && close(&entry[1], 0.0),
                    "{state} {outcome}: {r}"
                );
            }
        }
    }
}

#[test]
fn entangled_fixtures() {
    let zz = json(&run(&["--json", "entangled", &fixture("bell_zz.json")]));
    assert_eq!(zz["pass"], true);
    assert_eq!(zz["independent"], false);
    for e in zz["formula_joint"].as_array().unwrap() {
        let expected = if e["a"] == e["x"] { 0.5 } else { 0.0 };
        assert!(close(&e["probability"], expected), "{e}");
    }
    let tv = zz["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "local_measurement")
        .unwrap();
    assert!(tv["max_deviation"].as_f64().unwrap() < 1e-9);

    let zx = json(&run(&["--json", "entangled", &fixture("bell_zx.json")]));
    for e in zx["formula_joint"]
        .as_array()
        .unwrap()
        .iter()
        .chain(zx["oracle_joint"].as_array().unwrap())
    {
        assert!(close(&e["probability"], 0.25), "{e}");
    }

    let product = run(&["entangled", &fixture("product.json")]);
    assert_eq!(product.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&product.stdout).contains("independent"));
}

#[test]
fn exit_code_table() {
    let dir = tempfile::tempdir().unwrap();
    export_zoo(dir.path());
    let cnot_path = dir.path().join("cnot.json");
    let cnot = cnot_path.to_str().unwrap();
    assert_eq!(run(&["verify", cnot]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(run(&["reduce", cnot]).status.code(), Some(1));
    assert_eq!(
        run(&["verify", "/nonexistent/model.json"]).status.code(),
        Some(2)
    );

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"format_version\": \"1\", ").unwrap();
    assert_eq!(
        run(&["verify", broken.to_str().unwrap()]).status.code(),
        Some(3)
    );

    let text = std::fs::read_to_string(&cnot_path).unwrap();
    let bad_u = dir.path().join("bad_u.json");
    std::fs::write(
        &bad_u,
        text.replacen("\"u\": [\n    [[1.0, 0.0]", "\"u\": [\n    [[0.5, 0.0]", 1),
    )
    .unwrap();
    let out = run(&["verify", bad_u.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("u: interaction is not unitary") && stderr.contains("line "),
        "{stderr}"
    );

    assert_eq!(run(&["reduce", cnot, "0", "2"]).status.code(), Some(4));
    assert_eq!(run(&["reduce", cnot, "0", "-1"]).status.code(), Some(5));

    // A model claiming to measure X while reading out Z fails the measuring condition.
    let wrong = dir.path().join("wrong_claim.json");
    let claim_x = text.replacen(
        "\"a_matrix\": [\n    [[1.0, 0.0], [0.0, 0.0]],\n    [[0.0, 0.0], [-1.0, 0.0]]\n  ]",
        "\"a_matrix\": [\n    [[0.0, 0.0], [1.0, 0.0]],\n    [[1.0, 0.0], [0.0, 0.0]]\n  ]",
        1,
    );
    assert_ne!(claim_x, text);
    std::fs::write(&wrong, claim_x).unwrap();
    let out = run(&["--json", "verify", wrong.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    assert_eq!(json(&out)["classification"]["projective"], Value::Null);
}

#[test]
fn tolerance_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    export_zoo(dir.path());
    let cnot = dir.path().join("cnot.json");
    let tolerance = |out: &Output| json(out)["checks"][0]["tolerance"].as_f64().unwrap();

    assert_eq!(
        tolerance(&run(&["--json", "verify", cnot.to_str().unwrap()])),
        1e-9
    );
    let env_only = bin()
        .env("REDUCTIONLAB_TOL", "1e-3")
        .args(["--json", "verify", cnot.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(tolerance(&env_only), 1e-3);
    let both = bin()
        .env("REDUCTIONLAB_TOL", "1e-3")
        .args([
            "--json",
            "--tolerance",
            "1e-6",
            "verify",
            cnot.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(tolerance(&both), 1e-6);
}

#[test]
fn timing_flag_adds_elapsed_milliseconds() {
    let dir = tempfile::tempdir().unwrap();
    export_zoo(dir.path());
    let out = json(&run(&[
        "--json",
        "--timing",
        "verify",
        dir.path().join("cnot.json").to_str().unwrap(),
    ]));
    assert!(out["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["elapsed_ms"].as_f64().unwrap() >= 0.0));
}
