use std::path::Path;
use std::process::{Command, Output};

fn rerand(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rerand"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const TOY: &str = "x1,x2\n0.0,1.0\n1.0,0.5\n2.0,-1.0\n3.5,0.2\n";

#[test]
fn sample_toy_lgr() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "toy.csv", TOY);
    let args = ["sample", "toy.csv", "--header", "--n1", "2", "--p-accept", "0.6", "--seed", "9", "--out", "z.csv"];
    let o = rerand(tmp.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("z.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("unit_index,assignment"));
    let z: Vec<u32> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(z.len(), 4);
    assert_eq!(z.iter().sum::<u32>(), 2);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("z.csv.manifest.json")).unwrap()).unwrap();
    let r = &m["result"];
    assert!(r["m_value"].as_f64().unwrap() <= r["threshold_a"].as_f64().unwrap());
    assert_eq!(m["master_seed"], 9);
    assert_eq!(m["command"], "sample");

    let again = rerand(tmp.path(), &[&args[..9], &["--out", "z2.csv"]].concat());
    assert!(again.status.success());
    assert_eq!(csv, std::fs::read_to_string(tmp.path().join("z2.csv")).unwrap());
}

#[test]
fn sample_cr_has_zero_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "toy.csv", TOY);
    let o = rerand(tmp.path(), &["sample", "toy.csv", "--header", "--method", "cr", "--seed", "1", "--out", "z.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("z.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["result"]["iterations"], 0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "bad.csv", "1,2\n3,x\n");
    write(dir, "dup.csv", "1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n");
    let o = rerand(dir, &["sample", "dup.csv", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("collinear"), "{}", stderr(&o));

    let o = rerand(dir, &["sample", "bad.csv", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 2"), "{}", stderr(&o));

    write(dir, "toy.csv", TOY);
    let o = rerand(
        dir,
        &["sample", "toy.csv", "--header", "--method", "arr", "--p-accept", "1e-9", "--max-draws", "3", "--seed", "1"],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("best M"), "{}", stderr(&o));

    let o = rerand(dir, &["sample", "toy.csv", "--header", "--p-accept", "0.5", "--max-iters", "500", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = rerand(dir, &["sample", "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "reps = 5\nrepz = 3\n[estimate]\nfoo = 1\n");
    let o = rerand(tmp.path(), &["estimate", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("repz") && e.contains("estimate.foo"), "{e}");
}

#[test]
fn config_file_sections_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "c.toml",
        "n = 40\ndims = [2]\nreps = 4\nmaster_seed = 5\np_accept = 0.1\n[benchmark]\nmethods = [\"cr\", \"lgr\"]\n",
    );
    let o = rerand(dir, &["benchmark", "--config", "c.toml", "--reps", "6", "--out", "b.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["reps"], 6);
    assert_eq!(m["config"]["methods"], serde_json::json!(["cr", "lgr"]));
    assert_eq!(m["seed_source"], "user");
    let csv = std::fs::read_to_string(dir.join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn infer_under_null_has_low_power() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = [
        "infer", "--n", "40", "--dims", "2", "--reps", "60", "--frt-reps", "19", "--tau", "0", "--p-accept", "0.1",
        "--seed", "3", "--out", "i.csv",
    ];
    let o = rerand(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("i.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "power").unwrap();
    for line in csv.lines().skip(1) {
        let power: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        let se = (0.05f64 * 0.95 / 60.0).sqrt();
        assert!(power <= 0.05 + 4.0 * se, "{line}");
    }
}
