// SPDX-License-Identifier: Apache-2.0

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuelctrl")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn regimes_json_names_the_regime() {
    let o = run(&["regimes", "--alpha", "1", "--delta", "1", "--lambda", "0.7"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["regime"], "VShape");
    assert_eq!(v["classification"]["regime"], "VShape");
    let o = run(&["regimes", "--lambda", "0.56"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["regime"], "VLambdaShape");
    let o = run(&["regimes", "--lambda", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["regime"], "HighCost");
    assert!(v["constants"]["f0"].is_null());
}

#[test]
fn verify_passes_on_vshape() {
    let o = run(&["verify", "--lambda", "0.8172"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(code(&run(&["verify", "--no-such-flag"])), 2);
    assert_eq!(code(&run(&["regimes", "--alpha", "abc"])), 2);
    assert_eq!(code(&run(&["regimes", "--alpha=-1"])), 2);
    assert_eq!(code(&run(&["oracle", "--dx", "0.5"])), 2);
    assert_eq!(code(&run(&["simulate", "--point", "1"])), 2);
    assert_eq!(code(&run(&[])), 2);
}

#[test]
fn below_lambda_star_exits_3() {
    let o = run(&["boundaries", "--lambda", "0.3"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lambda*"), "{err}");
}

#[test]
fn boundaries_f_decreasing() {
    let o = run(&["boundaries", "--lambda", "0.8172", "--nc", "40"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "c,F,G,Fbar,Gbar,type_F,type_G");
    let f: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(f.len(), 40);
    assert!(f.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    std::fs::write(&cfg, r#"{"alpha": 1.0, "delta": 1.0, "lambda": 0.7}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["regimes", "--config", c]))).unwrap();
    assert_eq!(v["params"]["lambda"], 0.7);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["regimes", "--config", c, "--lambda", "0.56"]))).unwrap();
    assert_eq!(v["params"]["lambda"], 0.56);
    std::fs::write(&cfg, r#"{"lambda": 0.7, "typo": 1}"#).unwrap();
    assert_eq!(code(&run(&["regimes", "--config", c])), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--paths", "64", "--dt", "1e-3", "--seed", "7"],
        vec!["oracle", "--dx", "0.02", "--format", "json"],
        vec!["phase-diagram", "--nx", "40", "--nc", "20"],
        vec!["value", "--nx", "20", "--nc", "10", "--format", "json"],
    ];
    for (k, args) in cases.iter().enumerate() {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{k}-{rep}.out"));
            let mut a = args.clone();
            let p = path.to_str().unwrap().to_string();
            a.extend(["--out", p.as_str()]);
            let o = run(&a);
            assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(o.stdout.is_empty());
            outs.push(std::fs::read(&path).unwrap());
        }
        assert!(!outs[0].is_empty());
        assert_eq!(outs[0], outs[1], "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_simulation() {
    let args = ["simulate", "--paths", "48", "--dt", "1e-3", "--point", "0.6,0.2"];
    let one = Command::new(env!("CARGO_BIN_EXE_fuelctrl")).args(args).env("FUELCTRL_THREADS", "1").output().unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_fuelctrl")).args(args).env("FUELCTRL_THREADS", "3").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn simulate_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.jsonl");
    let o = run(&[
        "simulate", "--paths", "8", "--dt", "1e-3", "--point", "0.85,0.1", "--events", ev.to_str().unwrap(), "--record", "2",
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&ev).unwrap();
    assert!(text.lines().count() >= 2);
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["point"], 0);
        assert!(v["path"].as_u64().unwrap() < 2);
    }
}

#[test]
fn high_cost_boundaries_are_flat() {
    let o = run(&["boundaries", "--lambda", "2", "--nc", "3"]);
    assert_eq!(code(&o), 0);
    for l in stdout(&o).lines().skip(1) {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.5);
    }
}
