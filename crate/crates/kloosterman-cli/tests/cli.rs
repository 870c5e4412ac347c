//! End-to-end checks of the command-line surface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kloosterman"))
}

fn strip_elapsed(s: &str) -> String {
    s.lines()
        .filter(|l| !l.contains("elapsed_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sum_classical_example() {
    let out = bin()
        .args(["sum", "--p", "3", "--blocks", "1,1", "--r", "1", "--psi", "1", "--psi-prime", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("magnitude: 1.0000"), "{text}");
    assert!(text.contains("representatives: 2"), "{text}");
}

#[test]
fn sum_trivial_exponent_vector() {
    let out = bin()
        .args(["sum", "--p", "2", "--blocks", "1,1,1", "--r", "0,0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("representatives: 1"), "{text}");
    assert!(text.contains("magnitude: 1.0000"), "{text}");
}

#[test]
fn sum_json_schema() {
    let out = bin()
        .args([
            "sum", "--p", "2", "--blocks", "2,3", "--r", "1,1,1,1", "--psi", "1,1,1,1",
            "--psi-prime", "1,1,1,1", "--format", "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["cell_count"], "8");
    assert_eq!(v["blocks"], serde_json::json!([2, 3]));
    assert!(v["value_coefficients"].is_array());
    assert!(v["elapsed_ms"].is_number());
}

#[test]
fn deterministic_output_across_runs_and_threads() {
    let run = |threads: &str| -> String {
        let out = bin()
            .env("KLOOSTERMAN_THREADS", threads)
            .args([
                "sum", "--p", "3", "--blocks", "1,2", "--r", "2,1", "--psi", "1,1",
                "--psi-prime", "1,1", "--format", "json",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        strip_elapsed(&String::from_utf8(out.stdout).unwrap())
    };
    let a = run("1");
    let b = run("1");
    let c = run("4");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn diagram_dot_output() {
    let out = bin().args(["diagram", "--blocks", "2,3"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("v1_2 -> v1_3 [label=\"3\"]"), "{text}");
    assert!(text.contains("style=dotted"), "{text}");
    // 6 vertex labels plus one label per directed edge (8 plain + 1 dotted)
    assert_eq!(text.matches("label=\"").count(), 6 + 9);
}

#[test]
fn exit_codes() {
    // configuration error
    let out = bin().args(["diagram", "--blocks", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // budget exceeded
    let out = bin()
        .args(["sum", "--p", "3", "--blocks", "1,1", "--r", "4", "--budget", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // success
    let out = bin()
        .args(["verify", "gl2", "--p", "2", "--max-r", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn gamma0_level_flag() {
    // r = 0 at level 1 gives the empty restricted sum
    let out = bin()
        .args([
            "sum", "--p", "3", "--blocks", "1,1", "--r", "0", "--psi", "1", "--psi-prime", "1",
            "--level", "1", "--format", "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cell_count"], "0");
    assert_eq!(v["level"], 1);
    assert_eq!(v["magnitude"], 0.0);
}

#[test]
fn bounds_flag_prints_table() {
    let out = bin()
        .args([
            "sum", "--p", "5", "--blocks", "1,1", "--r", "2", "--psi", "1", "--psi-prime", "1",
            "--bounds",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p,blocks,r,observed,trivial,weil"), "{text}");
}
