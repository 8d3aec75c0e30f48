use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn posetlim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posetlim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

struct Files {
    dir: TempDir,
    chain2: String,
    chain3: String,
}

fn files() -> Files {
    let dir = TempDir::new().unwrap();
    let chain2 = write(dir.path(), "chain2.json", r#"{"n":2,"relations":[[1,2]]}"#);
    let chain3 = write(
        dir.path(),
        "chain3.json",
        r#"{"n":3,"relations":[[1,2],[2,3]]}"#,
    );
    Files {
        dir,
        chain2,
        chain3,
    }
}

#[test]
fn every_subcommand_has_help() {
    for cmd in [
        "sample",
        "density",
        "kernel-density",
        "check-kernel",
        "classify",
        "cutdist",
        "converge",
        "gnp-order",
        "thin",
    ] {
        let o = posetlim(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
        assert!(stdout(&o).contains("Usage: posetlim"), "{cmd}");
    }
}

#[test]
fn density_exact() {
    let f = files();
    let o = posetlim(&[
        "density", "--q", &f.chain2, "--p", &f.chain3, "--mode", "exact",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "value,stderr,samples\n0.333333333333,0,9\n");
    let o = posetlim(&[
        "density", "--q", &f.chain2, "--p", &f.chain3, "--mode", "inj",
    ]);
    assert_eq!(stdout(&o), "value,stderr,samples\n0.5,0,6\n");
}

#[test]
fn density_mc_is_deterministic() {
    let f = files();
    let args = [
        "density",
        "--q",
        &f.chain2,
        "--p",
        &f.chain3,
        "--mode",
        "mc",
        "--samples",
        "20000",
        "--seed",
        "4",
    ];
    let a = posetlim(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_posetlim"))
        .args(args)
        .env("POSETLIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn check_kernel_two_point() {
    let o = posetlim(&[
        "check-kernel",
        "--kernel",
        "two_point:0.7",
        "--triples",
        "100000",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "PASS");
}

#[test]
fn classify_three_cycle() {
    let f = files();
    let c3 = write(
        f.dir.path(),
        "c3.json",
        r#"{"n":3,"edges":[[1,2],[2,3],[3,1]]}"#,
    );
    let o = posetlim(&["classify", "--digraph", &c3]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("NOT-POSET witness=C3"));
    let ok = write(
        f.dir.path(),
        "ok.json",
        r#"{"n":3,"edges":[[1,2],[2,3],[1,3]]}"#,
    );
    assert_eq!(
        stdout(&posetlim(&["classify", "--digraph", &ok])).trim(),
        "POSET"
    );
}

#[test]
fn kernel_density_exact_and_mc() {
    let f = files();
    let o = posetlim(&[
        "kernel-density",
        "--q",
        &f.chain2,
        "--kernel",
        "two_point:0.5",
        "--exact",
    ]);
    assert_eq!(
        stdout(&o)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap(),
        "0.125"
    );
    let o = posetlim(&[
        "kernel-density",
        "--q",
        &f.chain2,
        "--kernel",
        "total",
        "--samples",
        "1000",
    ]);
    assert!(o.status.success());
    let o = posetlim(&[
        "kernel-density",
        "--q",
        &f.chain2,
        "--kernel",
        "total",
        "--exact",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cutdist_of_permuted_copy() {
    let f = files();
    let a = write(
        f.dir.path(),
        "a.json",
        r#"{"mass":[0.5,0.5],"values":[[0,0.5],[0,0]]}"#,
    );
    let b = write(
        f.dir.path(),
        "b.json",
        r#"{"mass":[0.5,0.5],"values":[[0,0],[0.5,0]]}"#,
    );
    let o = posetlim(&[
        "cutdist",
        "--w1",
        &a,
        "--w2",
        &b,
        "--restarts",
        "4",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["upper"], 0.0);
    assert_eq!(v["lower"], 0.0);
    assert_eq!(v["coupling"], serde_json::json!([[0.0, 0.5], [0.5, 0.0]]));
}

#[test]
fn converge_writes_reproducible_csv() {
    let f = files();
    let run = |name: &str| {
        let csv = f.dir.path().join(name);
        let svg = f.dir.path().join(format!("{name}.svg"));
        let o = posetlim(&[
            "converge",
            "--kernel",
            "two_point:0.5",
            "--sizes",
            "8,16",
            "--reps",
            "2",
            "--seed",
            "3",
            "--csv",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        assert!(f.dir.path().join(format!("{name}.manifest.json")).exists());
        fs::read_to_string(csv).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "n,rep,t_inj_estimate,delta_upper,delta_lower");
    assert_eq!(lines.len(), 5);
}

#[test]
fn converge_with_no_sizes_is_header_only() {
    let f = files();
    let csv = f.dir.path().join("empty.csv");
    let o = posetlim(&[
        "converge",
        "--kernel",
        "trivial",
        "--reps",
        "0",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(csv).unwrap(),
        "n,rep,t_inj_estimate,delta_upper,delta_lower\n"
    );
}

#[test]
fn sample_writes_manifest() {
    let f = files();
    let out = f.dir.path().join("draws");
    let o = posetlim(&[
        "sample",
        "--kernel",
        "two_point:0.5",
        "--n",
        "5",
        "--reps",
        "3",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert!(manifest.starts_with("rep,file,relations,sha256\n"));
    assert_eq!(manifest.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 2);
    let first = fs::read_to_string(out.join("rep_0000.json")).unwrap();
    assert!(first.starts_with(r#"{"n":5,"#));
}

#[test]
fn gnp_order_extremes() {
    let o = posetlim(&["gnp-order", "--n", "4", "--p", "1", "--seed", "1"]);
    assert_eq!(
        stdout(&o).trim(),
        r#"{"n":4,"relations":[[1,2],[2,3],[3,4]],"closed":false}"#
    );
    let o = posetlim(&["gnp-order", "--n", "4", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thin_reports_prediction() {
    let f = files();
    let o = posetlim(&[
        "thin",
        "--kernel",
        "two_point:0.5",
        "--s",
        "0.3",
        "--q",
        &f.chain2,
        "--samples",
        "200000",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let (thinned, se, predicted) = (row[3], row[4], row[5]);
    assert!((thinned - predicted).abs() < 4.0 * se + 4.0 * row[2] * 0.09);
}

#[test]
fn errors_and_exit_codes() {
    let f = files();
    let o = posetlim(&["density", "--q", "missing.json", "--p", &f.chain3]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error: missing.json"));
    assert_eq!(err.lines().count(), 1);
    assert_eq!(posetlim(&["density", "--bogus"]).status.code(), Some(2));
    assert_eq!(posetlim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        posetlim(&["check-kernel", "--kernel", "nope"])
            .status
            .code(),
        Some(1)
    );
    let open = write(
        f.dir.path(),
        "open.json",
        r#"{"n":3,"relations":[[1,2],[2,3]]}"#,
    );
    let o = posetlim(&[
        "--require-closed",
        "density",
        "--q",
        &open,
        "--p",
        &f.chain3,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = posetlim(&["density", "--q", &open, "--p", &f.chain3]);
    assert!(o.status.success());
}
