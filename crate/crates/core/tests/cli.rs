use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_idla-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = lab(&[
            "simulate", "--sizes", "100", "--trials", "1", "--seed", "7", "--threads", threads,
            "--out", dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.contains_key("simulate_report.json"));
    assert!(ta.keys().any(|k| k.ends_with(".idla")));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs between runs");
    }
}

#[test]
fn simulate_then_analyze_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let out_dir = d.path().to_str().unwrap();
    let sim = lab(&["simulate", "--sizes", "200,400", "--trials", "2", "--out", out_dir]);
    assert_eq!(sim.status.code(), Some(0));
    let ana = lab(&["analyze", "--out", out_dir]);
    assert_eq!(ana.status.code(), Some(0), "{}", String::from_utf8_lossy(&ana.stderr));
    assert!(String::from_utf8_lossy(&ana.stdout).contains("PASS complement_identity"));
    let read = |name: &str| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(d.path().join(name)).unwrap()).unwrap()
    };
    assert_eq!(read("analyze_report.json")["pass"], true);
    let sim = read("simulate_report.json");
    assert_eq!(sim["config"]["sizes"], serde_json::json!([200, 400]));
    assert!(sim["config"].get("out_dir").is_none());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 3\nno_such_key = 1\n").unwrap();
    let out = lab(&["tower", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out_dir = d.path().to_str().unwrap();
    assert_eq!(lab(&["tower", "--out", out_dir]).status.code(), Some(0));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lab(&["kernel", "--seed", "minus-one"]).status.code(), Some(2));
    assert_eq!(lab(&["analyze", "--out", d.path().join("empty").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["tower", "--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
    // A table this small cannot pin down the additive constant.
    let cfg = d.path().join("tiny.cfg");
    std::fs::write(&cfg, "kernel_r0 = 4\n").unwrap();
    let out = lab(&["kernel", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
