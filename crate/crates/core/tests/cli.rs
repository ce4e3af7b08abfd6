use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oscitime"));
    c.env("OSCITIME_THREADS", "2");
    c
}

fn small_config(dir: &Path, suite: &str) -> std::path::PathBuf {
    let p = dir.join("exp.toml");
    let text = format!(
        "schema = 1\nsuite = \"{suite}\"\ndim = 32\nseries_dim = 512\nseeds = [3]\n\n[grid]\ngalapon_dims = [64, 128]\nevolution_points = 4\nt = [0.7]\n"
    );
    std::fs::write(&p, text).unwrap();
    p
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn classify_writes_table1_with_three_families() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "all");
    let out = tmp.path().join("out");
    let st = bin().args(["classify", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let t: serde_json::Value = serde_json::from_str(&read(&out.join("table1.json"))).unwrap();
    let fams = t["families"].as_array().unwrap();
    assert_eq!(fams.len(), 3);
    let bounded: Vec<bool> = fams.iter().map(|f| f["bounded"].as_bool().unwrap()).collect();
    assert_eq!(bounded, vec![false, false, true]);
    let domains: Vec<&str> = fams.iter().map(|f| f["ccr_domain"].as_str().unwrap()).collect();
    assert_eq!(domains, vec!["InfiniteDim", "FiniteDim", "Dense"]);
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["fail"], 0);
}

#[test]
fn verify_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "all");
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let st = bin()
            .env("OSCITIME_THREADS", threads)
            .args(["verify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        outputs.push(out);
    }
    for f in ["ccr.csv", "angle.csv", "evolution.csv", "norms.csv", "bridge.csv", "divergence.csv", "summary.json", "table1.json"] {
        assert_eq!(read(&outputs[0].join(f)), read(&outputs[1].join(f)), "{f}");
    }
    let norms = read(&outputs[0].join("norms.csv"));
    assert!(norms.starts_with("dim,norm,bound,verdict\n"));
}

#[test]
fn failing_tolerance_gives_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "bridge");
    let out = tmp.path().join("out");
    let st = bin().args(["verify", "--tol", "1e-300", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert!(summary["fail"].as_u64().unwrap() > 0);
}

#[test]
fn bad_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.toml");
    std::fs::write(&p, "schema = 9\n").unwrap();
    let o = bin().args(["verify", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
    let o = bin().env("OSCITIME_THREADS", "zero").args(["diverge", "--out"]).arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_prints_markdown() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "all");
    let o = bin().args(["report", "--config"]).arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("| |omega| = 1 | yes | dense |"), "{s}");
    assert!(tmp.path().join("table1.md").exists());
}
