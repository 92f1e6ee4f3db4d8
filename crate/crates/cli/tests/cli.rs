use std::fs;
use std::path::Path;
use std::process::Command;

fn wecarray() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wecarray"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("wecarray-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_STUDY: &str = r#"
seed = 3

[economics]
m_max_kg = 1.0e5

[mesh_study]
designs = 2
resolutions = [{ nr = 2, ntheta = 8, nx = 2 }, { nr = 3, ntheta = 12, nx = 3 }]
"#;

fn run_study(dir: &Path, out: &str) -> std::process::Output {
    wecarray()
        .args(["--config", dir.join("study.toml").to_str().unwrap(), "--out", dir.join(out).to_str().unwrap(), "mesh-study"])
        .output()
        .unwrap()
}

#[test]
fn missing_mass_cap_is_a_schema_error() {
    let dir = scratch("schema");
    fs::write(dir.join("bad.toml"), "seed = 1\n[economics]\ninterest_rate = 0.07\n").unwrap();
    let out = wecarray().args(["--config", dir.join("bad.toml").to_str().unwrap(), "--out", dir.join("o").to_str().unwrap(), "mesh-study"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("m_max_kg"), "{err}");
    assert!(!dir.join("o").exists());
}

#[test]
fn identical_seeds_give_identical_outputs() {
    let dir = scratch("determinism");
    fs::write(dir.join("study.toml"), SMALL_STUDY).unwrap();
    for out in ["a", "b"] {
        let o = run_study(&dir, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["mesh_convergence.csv", "mesh_study_manifest.toml", "config.toml"] {
        let (a, b) = (fs::read(dir.join("a").join(file)), fs::read(dir.join("b").join(file)));
        assert!(a.is_ok(), "{file} missing");
        assert_eq!(a.unwrap(), b.unwrap(), "{file} differs");
    }
    let table = fs::read_to_string(dir.join("a/mesh_convergence.csv")).unwrap();
    // Header plus two designs at two resolutions.
    assert_eq!(table.lines().count(), 5);
    let manifest = fs::read_to_string(dir.join("a/mesh_study_manifest.toml")).unwrap();
    assert!(manifest.contains("config_sha256") && manifest.contains("seed = 3"), "{manifest}");
}

#[test]
fn command_line_seed_overrides_the_config() {
    let dir = scratch("seed");
    fs::write(dir.join("study.toml"), SMALL_STUDY).unwrap();
    let o = wecarray()
        .args(["--config", dir.join("study.toml").to_str().unwrap(), "--seed", "9", "--out", dir.join("s").to_str().unwrap(), "mesh-study"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let saved = fs::read_to_string(dir.join("s/config.toml")).unwrap();
    assert!(saved.contains("seed = 9"), "{saved}");
    let base = run_study(&dir, "t");
    assert!(base.status.success());
    assert_ne!(fs::read(dir.join("s/mesh_convergence.csv")).unwrap(), fs::read(dir.join("t/mesh_convergence.csv")).unwrap());
}
