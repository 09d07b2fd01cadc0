use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn mpvel(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpvel"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Parses a CSV with a header row into columns of strings.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const SINGLE_SP1: &str = r#"
[[carrier]]
label = "f1"
carrier_freq_hz = 27.0e9
symbol_duration_s = 8.92e-6
n_slot = 60
pattern = "SP1"

[[target]]
velocity_mps = VELOCITY
"#;

fn top_bins(power: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..power.len()).collect();
    idx.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
    let mut top: Vec<usize> = idx.into_iter().take(n).collect();
    top.sort_unstable();
    top
}

#[test]
fn profile_reference_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(&scenario("reference.toml"), dir.path(), &["profile", "--echo"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p1 = column(&dir.path().join("profile_f1.csv"), "power");
    let p2 = column(&dir.path().join("profile_f2.csv"), "power");
    assert_eq!(p1.len(), 240);
    assert_eq!(top_bins(&p1, 4), [48, 108, 168, 228]);
    assert_eq!(top_bins(&p2, 4), [52, 112, 172, 232]);
    let (header, rows) = read_csv(&dir.path().join("echo_f1.csv"));
    assert_eq!(header, ["m", "global_symbol", "re", "im"]);
    assert_eq!(rows.len(), 240);
    assert_eq!(rows[239][1], "830");
}

#[test]
fn profile_zero_velocity_anchors_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &SINGLE_SP1.replace("VELOCITY", "0.0"));
    let o = mpvel(&cfg, dir.path(), &["profile"]);
    assert!(o.status.success());
    let p = column(&dir.path().join("profile_f1.csv"), "power");
    let max = p.iter().cloned().fold(0.0, f64::max);
    assert_eq!(p[0], max);
}

#[test]
fn decompose_matches_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("reference.toml");
    assert!(mpvel(&cfg, dir.path(), &["profile"]).status.success());
    assert!(mpvel(&cfg, dir.path(), &["decompose"]).status.success());
    for label in ["f1", "f2"] {
        let profile = column(&dir.path().join(format!("profile_{label}.csv")), "power");
        let factors = dir.path().join(format!("factors_{label}.csv"));
        let d1 = column(&factors, "d1_sq");
        let d2 = column(&factors, "d2_sq");
        let scale = profile.iter().cloned().fold(0.0, f64::max);
        for k in 0..profile.len() {
            assert!((d1[k] * d2[k] - profile[k]).abs() / scale < 1e-9, "{label} bin {k}");
        }
        let (header, rows) = read_csv(&dir.path().join(format!("components_{label}.csv")));
        assert_eq!(header, ["bin", "e1_re", "e2_re", "e3_re", "e4_re"]);
        assert_eq!(rows.len(), 240);
        let (_, params) = read_csv(&dir.path().join(format!("component_params_{label}.csv")));
        assert_eq!(params.len(), 4);
    }
    // SP1 keeps four equal periodic peaks in |D1|^2.
    let d1 = column(&dir.path().join("factors_f1.csv"), "d1_sq");
    let peaks = [48, 108, 168, 228].map(|k| d1[k]);
    for p in peaks {
        assert!((p - peaks[0]).abs() / peaks[0] < 1e-9);
    }
}

#[test]
fn decompose_needs_one_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(&scenario("two_targets.toml"), dir.path(), &["decompose"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exactly one target"));
}

#[test]
fn detect_weak_targets_trains() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(&scenario("weak_targets.toml"), dir.path(), &["detect"]);
    assert!(o.status.success());
    let anchors = column(&dir.path().join("trains_f1.csv"), "anchor_bin");
    assert_eq!(anchors, [15.0, 48.0]);
    let (header, rows) = read_csv(&dir.path().join("detections_f1.csv"));
    assert_eq!(header, ["bin", "velocity_mps", "power", "train_anchor"]);
    assert!(rows.iter().any(|r| r[3] == "none"), "noise detections are reported");
}

#[test]
fn detect_noiseless_gives_predicted_trains() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(&scenario("reference.toml"), dir.path(), &["detect"]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("trains_f1.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "48;108;168;228");
    let (_, rows) = read_csv(&dir.path().join("trains_f2.csv"));
    assert_eq!(rows[0][3], "52;112;172;232");
}

#[test]
fn resolve_single_and_two_targets() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mpvel(&scenario("reference.toml"), dir.path(), &["resolve"])
        .status
        .success());
    let v = column(&dir.path().join("estimates.csv"), "velocity_mps");
    assert_eq!(v.len(), 1);
    assert!((v[0] - 80.0).abs() < 0.5);

    assert!(mpvel(&scenario("two_targets.toml"), dir.path(), &["resolve"])
        .status
        .success());
    let mut v = column(&dir.path().join("estimates.csv"), "velocity_mps");
    v.sort_by(f64::total_cmp);
    assert_eq!(v.len(), 2);
    assert!((v[0] - 80.0).abs() < 1.0 && (v[1] - 169.0).abs() < 1.0);
}

#[test]
fn resolve_rejects_single_carrier() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(&scenario("weak_targets.toml"), dir.path(), &["resolve"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("two carriers"));
}

#[test]
fn montecarlo_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(
        &scenario("montecarlo.toml"),
        dir.path(),
        &["montecarlo", "--trials", "1", "--snr", "-30:-20:3", "--algo", "multi"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("metrics.csv"));
    assert_eq!(
        header,
        [
            "algorithm",
            "snr_db",
            "trials",
            "mean_abs_err_mps",
            "rmse_mps",
            "missed_rate",
            "false_alarms"
        ]
    );
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[0] == "multi" && r[2] == "1"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("master_seed = 20240601"));
    assert!(manifest.contains("[[scenario.carrier]]"));
}

#[test]
fn manifest_scenario_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(
        &scenario("montecarlo.toml"),
        dir.path(),
        &["montecarlo", "--trials", "1", "--snr", "-20:-20:1"],
    );
    assert!(o.status.success());
    let manifest: toml::Table = std::fs::read_to_string(dir.path().join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let text = toml::to_string(&manifest["scenario"]).unwrap();
    let reloaded = mpvel::scenario::ScenarioFile::parse(&text).unwrap();
    let original = mpvel::scenario::ScenarioFile::load(&scenario("montecarlo.toml")).unwrap();
    assert_eq!(reloaded, original);
}

#[test]
fn custom_pattern_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = SINGLE_SP1
        .replace("VELOCITY", "80.0")
        .replace("\"SP1\"", "[1, 5, 9, 13]");
    let parsed = mpvel::scenario::ScenarioFile::parse(&text).unwrap();
    let again = mpvel::scenario::ScenarioFile::parse(&parsed.to_toml()).unwrap();
    assert_eq!(parsed, again);
    let cfg = write_scenario(dir.path(), &parsed.to_toml());
    assert!(mpvel(&cfg, dir.path(), &["profile"]).status.success());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SINGLE_SP1.replace("VELOCITY", "80.0").replace("n_slot", "nslot"),
        SINGLE_SP1
            .replace("VELOCITY", "80.0")
            .replace("[[carrier]]", "[[carrier"),
        SINGLE_SP1.replace("[[target]]\nvelocity_mps = VELOCITY\n", ""),
    ];
    for text in &cases {
        let cfg = write_scenario(dir.path(), text);
        let o = mpvel(&cfg, dir.path(), &["profile"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    let cfg = write_scenario(dir.path(), &cases[0]);
    let stderr = String::from_utf8_lossy(&mpvel(&cfg, dir.path(), &["profile"]).stderr).to_string();
    assert!(stderr.contains("line"), "{stderr}");
    assert!(stderr.contains("nslot"), "{stderr}");

    let o = mpvel(&dir.path().join("missing.toml"), dir.path(), &["profile"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpvel(
        &scenario("montecarlo.toml"),
        dir.path(),
        &["montecarlo", "--snr", "-20:-40:3"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = mpvel(
        &scenario("montecarlo.toml"),
        dir.path(),
        &["montecarlo", "--algo", "fast"],
    );
    assert_eq!(o.status.code(), Some(2));
}
