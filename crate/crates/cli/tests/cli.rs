use std::path::PathBuf;
use std::process::{Command, Output};

fn flagprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flagprep")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("flagprep-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gadget_reports_flags_and_gates() {
    let dir = scratch("gadget");
    let file = dir.join("g.txt");
    let o = flagprep(&["gadget", "--t", "2", "--r", "5", "--m", "2", "--out", file.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("2 flags, 9 CX"), "{}", stdout(&o));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("GADGET t=2 r=5 m=2 type=X"));
    let o = flagprep(&["gadget", "--t", "2", "--r", "5", "--m", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_exit_status_follows_the_verdict() {
    let dir = scratch("verify");
    let good = dir.join("good.circ");
    let bare = dir.join("bare.circ");
    let ok = flagprep(&["assemble", "--code", "steane", "--seed", "5", "--out", good.to_str().unwrap()]);
    assert!(ok.status.success());
    let ok = flagprep(&["assemble", "--code", "steane", "--seed", "5", "--no-x-gadgets", "--out", bare.to_str().unwrap()]);
    assert!(ok.status.success());
    let o = flagprep(&["verify", "--circuit", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = dir.join("report.json");
    let o = flagprep(&["verify", "--circuit", bare.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(std::fs::read_to_string(report).unwrap().contains("counterexample"));
}

#[test]
fn pipeline_is_reproducible() {
    let run = |tag: &str| {
        let dir = scratch(tag);
        let circ = dir.join("c.circ");
        let prefix = dir.join("sim");
        let dec = dir.join("dec.json");
        assert!(flagprep(&["assemble", "--code", "steane", "--seed", "9", "--shuffles", "50", "--out", circ.to_str().unwrap()])
            .status
            .success());
        let o = flagprep(&[
            "simulate", "--circuit", circ.to_str().unwrap(), "--p", "1e-3", "--samples", "20000", "--seed", "4",
            "--out", prefix.to_str().unwrap(), "--csv",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let train = format!("{}.train.bin", prefix.display());
        let test = format!("{}.test.bin", prefix.display());
        let o = flagprep(&["decode", "--code", "steane", "--train", &train, "--test", &test, "--out", dec.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let read = |p: PathBuf| std::fs::read(p).unwrap();
        (
            read(circ),
            read(PathBuf::from(format!("{}.test.csv", prefix.display()))),
            read(PathBuf::from(format!("{}.json", prefix.display()))),
            read(dec),
        )
    };
    assert_eq!(run("repro-a"), run("repro-b"));
}

#[test]
fn steane_experiment_writes_csv() {
    let dir = scratch("steane");
    let out = dir.join("s.csv");
    let o = flagprep(&[
        "steane", "--code", "steane", "--p", "1e-3,2e-3", "--mode", "full_ft,no_qec", "--samples", "2000", "--seed", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("code,p,mode,"));
}

#[test]
fn usage_errors_fail() {
    assert!(!flagprep(&["frobnicate"]).status.success());
    assert!(!flagprep(&["verify"]).status.success());
    assert_eq!(flagprep(&["lut-mw", "--code", "nope"]).status.code(), Some(2));
}
