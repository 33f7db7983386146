use std::path::PathBuf;
use std::process::{Command, Output};

fn rank3bd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rank3bd")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = rank3bd(&["validate", "builtin:example1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "ok\n");

    let bad = rank3bd(&["validate", &fixture("bad_divisibility.json")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("edge a2->a1"), "{}", stdout(&bad));

    let missing = rank3bd(&["validate", "/definitely/not/here.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"levels\": [").unwrap();
    let o = rank3bd(&["ktheory", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn invalid_diagram_refused_by_computations() {
    let o = rank3bd(&["ktheory", &fixture("bad_divisibility.json")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ktheory_summaries() {
    let o = rank3bd(&["ktheory", "builtin:example1", "--levels", "6"]);
    let s = stdout(&o);
    assert!(s.contains("level 3: vertices=1 weights=4 K0=(1/4)Z+θZ"), "{s}");
    assert!(s.contains("denominators: 1,2,4,8,16,32\n"));
    assert!(s.contains("intertwiner: ok"));
    assert!(s.ends_with("limit ≅ Z[1/2]+θZ\n"));

    let s = stdout(&rank3bd(&["ktheory", "builtin:example3", "--levels", "3"]));
    assert!(s.contains("limit ≅ Z[1/2]+Z[θ/2]"));
    assert!(s.contains("simplicity: Simple"));

    let s = stdout(&rank3bd(&["ktheory", "builtin:example2", "--levels", "3"]));
    assert!(s.contains("simplicity: NotSimple"));
    assert!(s.contains("(Z+θZ)^∞"));
}

#[test]
fn ktheory_csv_matches_matrices_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let o = rank3bd(&["ktheory", "builtin:example3", "--levels", "3", "--csv", path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let direct = stdout(&rank3bd(&["matrices", "builtin:example3", "--levels", "3"]));
    assert_eq!(csv, direct);
    assert!(csv.starts_with("# A'_1"));
}

#[test]
fn k0_and_k1_reports() {
    let s =
        stdout(&rank3bd(&["k0", "builtin:example1", "k0@1: v1=(1,0)", "--levels", "3", "--equal", "k0@2: v2=(2,0)"]));
    assert!(s.contains("push: k0@3: v3=(4,0)"), "{s}");
    assert!(s.contains("equality: Equal(2)"));
    assert!(s.contains("positivity: PositiveWitnessed(1)"));

    let s = stdout(&rank3bd(&["k1", "builtin:example3", "k1@1: top1=(1,2)"]));
    assert!(s.contains("naturality: ok"), "{s}");
    assert!(s.contains("theta_iso: k0@1: top1=(2,3); bot1=(0,0)"));

    let bad = rank3bd(&["k0", "builtin:example1", "k0@1: nope=(1,0)"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cocycle_reduction_passes() {
    let o = rank3bd(&["cocycle", "builtin:example1", "--reduce", "--count", "50", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("reduction: 50/50 pass"));
}

#[test]
fn corrupted_cocycle_is_reported() {
    let o = rank3bd(&["cocycle", "builtin:example1", "--reduce", "--corrupt", "--count", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("reduction: 4/5 pass"), "{s}");
    assert!(s.contains("sample 1: FAIL"));
}

#[test]
fn cocycle_dump_round_trips_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let o = rank3bd(&["cocycle", "builtin:example3", "--count", "2", "--dump", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = std::fs::read_to_string(&path).unwrap();
    assert!(dump.lines().all(|l| l.split('\t').count() == 2));
}

#[test]
fn traces_table() {
    let s = stdout(&rank3bd(&["traces", "builtin:example3", "--levels", "5", "--normalize"]));
    assert!(s.contains("free directions: 1"), "{s}");
    assert!(s.contains("determined through level: 4"));
    assert!(s.contains("top1\t1/4"));
    assert!(s.contains("bot4\t1/32"));
    assert!(!s.contains("top5"));
}

#[test]
fn dot_is_deterministic() {
    let a = rank3bd(&["dot", "builtin:example3", "--levels", "3", "--skeleton"]);
    let b = rank3bd(&["dot", "builtin:example3", "--levels", "3", "--skeleton"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("digraph"));
}

#[test]
fn golden_examples() {
    let o = rank3bd(&["examples"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn golden_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rank3bd(&["examples", "--golden-dir", dir.path().to_str().unwrap(), "--bless"]).status.success());
    let f = dir.path().join("example2.txt");
    let text = std::fs::read_to_string(&f).unwrap().replace("NotSimple", "Simple");
    std::fs::write(&f, text).unwrap();
    let o = rank3bd(&["examples", "--golden-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("example1: ok") && s.contains("example2: MISMATCH"), "{s}");
}
