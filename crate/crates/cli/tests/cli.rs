use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corners-lab")).args(args).env_remove("CORNERS_LAB_THREADS").output().unwrap()
}

fn with_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn enumerate_counts_ten() {
    let d = tempfile::tempdir().unwrap();
    let c = with_config(d.path(), "e.toml", "command = \"enumerate\"\n[measure]\nn = 2\nk = 1\nm = 2\n");
    let o = lab(&["--config", &c]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["results"]["count"], 10);
    assert_eq!(r["results"]["patterns"].as_array().unwrap().len(), 10);
}

#[test]
fn jack_defaults_pass() {
    let o = lab(&["verify-jack"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["passed"], true);
    assert_eq!(r["results"]["branching"].as_array().unwrap().len(), 4);
    assert!(!r["results"]["cauchy"].as_array().unwrap().is_empty());
}

#[test]
fn corrupted_family_fails() {
    let d = tempfile::tempdir().unwrap();
    let base = "[measure]\ntheta = 0.7\nn = 3\nk = 1\nm = 5\n";
    let good = with_config(d.path(), "g.toml", base);
    assert_eq!(lab(&["verify-nekrasov", "--config", &good]).status.code(), Some(0));
    let bad = with_config(d.path(), "b.toml", &format!("{base}[nekrasov]\ncorrupt = 1.01\n"));
    let o = lab(&["verify-nekrasov", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!report(&o)["failures"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("worst pole"));
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let unknown = with_config(d.path(), "u.toml", "[measure]\ntheta = 1\nn = 2\nm = 2\ncolour = 3\n");
    assert_eq!(lab(&["measure", "--config", &unknown]).status.code(), Some(2));
    let missing = with_config(d.path(), "m.toml", "[measure]\ntheta = 1\nn = 2\n");
    let o = lab(&["measure", "--config", &missing]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("measure.m"));
    let conflict = with_config(d.path(), "c.toml", "command = \"measure\"\n");
    assert_eq!(lab(&["enumerate", "--config", &conflict]).status.code(), Some(2));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lab(&[]).status.code(), Some(2));
    assert_eq!(lab(&["verify-jack", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(lab(&["verify-cumulants", "--format", "csv"]).status.code(), Some(2));
    let broken = with_config(d.path(), "x.toml", "[measure\n");
    assert_eq!(lab(&["measure", "--config", &broken]).status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let c = with_config(
        d.path(),
        "c.toml",
        "command = \"verify-continuous-loop\"\nseed = 11\n[continuous]\nn = 2\nsamples = 4000\nburn_in = 200\n[loop]\npoints = [[2, 3.5, 0]]\n",
    );
    let a = d.path().join("a.json");
    let b = d.path().join("b.json");
    let oa = lab(&["--config", &c, "--out", a.to_str().unwrap()]);
    let ob = lab(&["--config", &c, "--out", b.to_str().unwrap(), "--threads", "2"]);
    assert!(oa.status.code().unwrap() <= 1 && ob.status.code() == oa.status.code());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(d.path().join("a.json.meta.json").exists());
    let other = lab(&["--config", &c, "--seed", "12"]);
    assert_ne!(other.stdout, fs::read(&a).unwrap());
}

#[test]
fn sample_then_verify_from_batch() {
    let d = tempfile::tempdir().unwrap();
    let batch = d.path().join("s.bin");
    let c = with_config(
        d.path(),
        "s.toml",
        &format!(
            "[continuous]\ntheta = 1.0\nn = 2\nsamples = 20000\n[sample]\nbatch = {:?}\n",
            batch.display().to_string()
        ),
    );
    let o = lab(&["sample-continuous", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(batch.exists() && d.path().join("s.bin.json").exists());
    let v = with_config(
        d.path(),
        "v.toml",
        &format!("[continuous]\ntheta = 1.0\nn = 2\n[loop]\nbatch = {:?}\n", batch.display().to_string()),
    );
    let o = lab(&["verify-continuous-loop", "--config", &v]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["results"]["samples"], 20000);
}

#[test]
fn tabular_commands_write_csv() {
    let d = tempfile::tempdir().unwrap();
    let c = with_config(d.path(), "m.toml", "[measure]\ntheta = 0.5\nn = 2\nm = 2\n");
    let out = d.path().join("m.json");
    assert_eq!(lab(&["measure", "--config", &c, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let o = lab(&["measure", "--config", &c, "--format", "csv"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), csv);
}

#[test]
fn discrete_loop_and_cumulants_pass() {
    let d = tempfile::tempdir().unwrap();
    let c = with_config(
        d.path(),
        "l.toml",
        "[measure]\ntheta = 1.3\nn = 3\nm = 4\n[loop]\npoints = [[1, 5.5, 0], [3, 6.1, 0.2]]\n",
    );
    let o = lab(&["verify-discrete-loop", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(&o)["results"]["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(lab(&["verify-cumulants"]).status.code(), Some(0));
    let b = with_config(d.path(), "b.toml", "[measure]\ntheta = 0.7\nn = 3\nm = 4\n");
    assert_eq!(lab(&["verify-bijection", "--config", &b]).status.code(), Some(0));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (name, code) in
        [("enumerate", 0), ("nekrasov", 0), ("discrete-loop", 0), ("continuous-loop", 0), ("diffuse", 1)]
    {
        let path = dir.join(format!("{name}.toml"));
        let o = lab(&["--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
