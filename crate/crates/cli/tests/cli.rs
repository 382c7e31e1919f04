use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbr")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = tbr(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn pair_file(dir: &Path, text: &str) -> String {
    let p = dir.join("pair.nwk");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CATERPILLARS: &str = "((((((x,1),2),3),4),5),(6,y));\n((((((y,1),2),3),4),5),(6,x));\n";

#[test]
fn solve_caterpillars() {
    let dir = tempfile::tempdir().unwrap();
    let p = pair_file(dir.path(), CATERPILLARS);
    for extra in [&[][..], &["--ruleset", "none", "--clusters", "off", "--preserve-chains", "off"]] {
        let mut args = vec!["solve", p.as_str()];
        args.extend_from_slice(extra);
        let out = stdout(&args);
        assert!(out.lines().any(|l| l == "distance=2"), "{out}");
        assert!(out.contains("status=optimal"));
    }
}

#[test]
fn kernelize_collapses_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = pair_file(dir.path(), CATERPILLARS);
    let out = stdout(&["kernelize", &p, "--ruleset", "subtree-chain"]);
    assert!(out.contains("taxa=8->5 parameter_reduction=0"), "{out}");
    assert!(out.contains("rule=2"));
    let trees: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(trees.len(), 2);
}

#[test]
fn generate_is_seeded() {
    let a = stdout(&["generate", "-t", "15", "-k", "3", "--seed", "9"]);
    let b = stdout(&["generate", "-t", "15", "-k", "3", "--seed", "9"]);
    let c = stdout(&["generate", "-t", "15", "-k", "3", "--seed", "10"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 2);
    let same = stdout(&["generate", "-t", "15", "-k", "0"]);
    let lines: Vec<&str> = same.lines().collect();
    assert_eq!(lines[0], lines[1]);
}

#[test]
fn oracle_bound_and_lp() {
    let dir = tempfile::tempdir().unwrap();
    let p = pair_file(dir.path(), "((x,1),2,(3,y));\n((y,1),2,(3,x));\n");
    assert!(stdout(&["oracle", &p]).contains("distance=2"));
    let b = stdout(&["bound", &p, "--budget-samples", "300"]);
    assert!(b.starts_with("dmp_lower=1 samples=300"), "{b}");
    let out = dir.path().join("m.lp");
    stdout(&["export-lp", &p, "--preserve-chains", "off", "--out", out.to_str().unwrap()]);
    let lp = fs::read_to_string(out).unwrap();
    assert_eq!(lp.lines().filter(|l| l.trim_start().starts_with('q')).count(), 5);
    assert!(lp.contains("Binaries") && lp.trim_end().ends_with("End"));
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "experiment", "--taxa", "12", "--skew", "50", "--moves", "2,3", "--replicates", "2", "--budget-samples", "200",
            "--seed", "3", "--out", out.to_str().unwrap(),
        ];
        stdout(&args);
        fs::read_to_string(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
    let csv = dir.path().join("a.csv");
    let stats = stdout(&["stats", csv.to_str().unwrap()]);
    assert!(stats.contains("remaining taxa"), "{stats}");
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let p = pair_file(dir.path(), "((a,b),(c,d)\n((a,b),(c,d));\n");
    let o = tbr(&["solve", &p]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
    let p = pair_file(dir.path(), "((a,b),(c,d));\n");
    assert!(String::from_utf8_lossy(&tbr(&["solve", &p]).stderr).contains("expected 2 trees"));
    assert!(!tbr(&["solve", "--ruleset", "bogus", &p]).status.success());
}
