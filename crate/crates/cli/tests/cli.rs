use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use levsim::damping::{DampingModel, OscillatorSpec};
use levsim::media::Media;
use serde_json::Value;

fn levsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of an emitted CSV as (header, rows of optional numbers).
fn csv(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse::<f64>().ok()).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<Option<f64>> {
    let (h, rows) = csv(path);
    let k = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[k]).collect()
}

fn slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xy.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn hash_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn damping_curve_default_has_50_rows_and_stamped_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = levsim(dir.path(), &["--out", "o", "--svg", "damping-curve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("o");
    let (header, rows) = csv(&out.join("damping_curve.csv"));
    assert_eq!(header.join(","), "T_K,tau_hydr_s,tau_ph_s,tau_rot_s,tau_imp_s,tau_vac_s,tau_total_s");
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0][0], Some(0.01));
    assert_eq!(rows[49][0], Some(2.1));

    let manifest = json(&out.join("manifest_damping-curve.json"));
    let h = manifest["manifest_sha256"].as_str().unwrap().to_string();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert!(hash_line(&out.join("damping_curve.csv")).contains(&h));
    assert_eq!(json(&out.join("damping_curve_meta.json"))["manifest_sha256"], h.as_str());
    let svg = fs::read_to_string(out.join("damping_curve.svg")).unwrap();
    assert!(svg.contains(&h));
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn impurity_segment_follows_inverse_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[damping]\nhe3_fraction = 4.2e-8\npoints = 60\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "damping-curve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = dir.path().join("o/damping_curve.csv");
    let t = column(&p, "T_K");
    let imp = column(&p, "tau_imp_s");
    let others: Vec<Vec<Option<f64>>> = ["tau_hydr_s", "tau_ph_s", "tau_rot_s", "tau_vac_s"]
        .iter()
        .map(|c| column(&p, c))
        .collect();
    let low: Vec<usize> = (0..t.len()).filter(|&i| t[i].unwrap() < 0.08).collect();
    assert!(low.len() >= 8);
    let s_imp = slope(&low.iter().map(|&i| (t[i].unwrap(), imp[i].unwrap())).collect::<Vec<_>>());
    assert!((s_imp + 0.5).abs() < 1e-9, "impurity slope {s_imp}");
    // the impurity channel is the fastest one below 80 mK
    for &i in &low {
        let fastest_other = others.iter().filter_map(|c| c[i]).fold(f64::INFINITY, f64::min);
        assert!(imp[i].unwrap() < fastest_other, "T {:?}", t[i]);
    }
}

#[test]
fn pure_helium_reaches_the_intrinsic_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[damping]\nhe3_fraction = 0.0\ntau_vacuum_s = 4.1e5\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "damping-curve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = dir.path().join("o/damping_curve.csv");
    let total = column(&p, "tau_total_s");
    assert!(column(&p, "tau_imp_s").iter().all(Option::is_none));
    let low_t = total[0].unwrap();
    assert!((low_t / 4.1e5 - 1.0).abs() < 0.01, "{low_t}");
    assert!(total.iter().all(|t| t.unwrap() <= 4.1e5));
}

#[test]
fn damping_domain_error_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[damping]\ntau_vacuum_s = -1.0\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "damping-curve"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("row 1 (T = 0.01 K)"), "{}", stderr(&o));
    let m = json(&dir.path().join("o/manifest_damping-curve.json"));
    assert_eq!(m["status"], "failed");
    assert_eq!(m["exit_code"], 3);
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad_toml = write(d, "bad.toml", "[damping\n");
    let unknown = write(d, "unknown.toml", "[damping]\nmass = 1.0\n");
    let empty_sweep = write(d, "empty.toml", "[detection]\ndistances_m = []\n");
    let bad_grid = write(d, "grid.toml", "[damping]\nt_min_k = 2.0\nt_max_k = 1.0\n");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--out", "o", "sensitivity", "--temperature-k", "0.005", "--tau-s", "4e4", "--velocity-m-per-s", "1e-5"], 0),
        (vec!["no-such-command"], 2),
        (vec!["--threads", "x", "damping-curve"], 2),
        (vec!["--out", "o", "--threads", "0", "damping-curve"], 2),
        (vec!["--out", "o", "--config", "missing.toml", "damping-curve"], 2),
        (vec!["--out", "o", "--config", bad_toml.to_str().unwrap(), "damping-curve"], 2),
        (vec!["--out", "o", "--config", unknown.to_str().unwrap(), "damping-curve"], 2),
        (vec!["--out", "o", "--config", bad_grid.to_str().unwrap(), "damping-curve"], 2),
        (vec!["--out", "o", "--config", empty_sweep.to_str().unwrap(), "detection-sweep"], 2),
        (vec!["--out", "o", "sensitivity", "--tau-s", "4e4"], 2),
        (vec!["--out", "o", "sensitivity", "--temperature-k", "0.005", "--tau-s=-1", "--velocity-m-per-s", "1e-5"], 3),
        (vec!["--out", "o", "ringdown", "analyze"], 2),
        (vec!["--out", "o", "ringdown", "analyze", "--input", "absent.csv"], 3),
        (vec!["--out", "o", "fit-he3"], 2),
        (vec!["--out", "o", "fit-he3", "absent.csv"], 3),
    ];
    for (args, expected) in cases {
        let o = levsim(d, &args);
        assert_eq!(code(&o), expected, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_still_writes_a_failed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = levsim(dir.path(), &["--out", "o", "--config", "nope.toml", "damping-curve"]);
    assert_eq!(code(&o), 2);
    let m = json(&dir.path().join("o/manifest_damping-curve.json"));
    assert_eq!(m["status"], "failed");
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("nope.toml"));
}

#[test]
fn coaxial_sweep_columns_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = levsim(dir.path(), &["--out", "o", "--svg", "detection-sweep"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = dir.path().join("o/detection_sweep.csv");
    let pos: Vec<f64> = column(&p, "position_m").into_iter().map(Option::unwrap).collect();
    let f: Vec<f64> = column(&p, "f_Hz").into_iter().map(Option::unwrap).collect();
    let v: Vec<f64> = column(&p, "V_amplitude_V").into_iter().map(Option::unwrap).collect();
    let dl: Vec<f64> = column(&p, "delta_L_H").into_iter().map(Option::unwrap).collect();
    assert_eq!(pos.len(), 18);
    assert!(pos.windows(2).all(|w| w[1] > w[0]));
    // flux exclusion: the sphere lowers the receiver inductance more the
    // closer it gets, so f falls and V rises as it recedes
    assert!(f.windows(2).all(|w| w[1] < w[0]));
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    assert!(dl.iter().all(|x| *x < 0.0));
    assert!(dl.windows(2).all(|w| w[1].abs() < w[0].abs()));
    assert!(dir.path().join("o/detection_sweep_voltage.svg").exists());
    assert!(dir.path().join("o/detection_sweep_frequency.svg").exists());
}

#[test]
fn oracle_column_agrees_within_15_percent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[detection]\ndistances_m = [0.004, 0.01, 0.019]\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "--oracle", "detection-sweep"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = dir.path().join("o/detection_sweep.csv");
    let rel = column(&p, "oracle_rel_diff");
    assert_eq!(rel.len(), 3);
    for r in rel {
        assert!(r.unwrap().abs() < 0.15, "{r:?}");
    }
    let (h, rows) = csv(&dir.path().join("o/oracle_field_map.csv"));
    assert_eq!(h.join(","), "rho_m,z_m,A_phi_T_m");
    assert_eq!(rows.len(), 129 * 129);
}

#[test]
fn oracle_rejects_an_off_axis_geometry() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.toml", "preset = \"three_d\"\n");
    let cfg = write(dir.path(), "c.toml", "[detection]\ngeometry_file = \"g.toml\"\ndistances_m = [0.005, 0.01]\n");
    let plain = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "detection-sweep"]);
    assert_eq!(code(&plain), 0, "{}", stderr(&plain));
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "--oracle", "detection-sweep"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("coaxial"), "{}", stderr(&o));
    let m = json(&dir.path().join("o/manifest_detection-sweep.json"));
    let inputs: Vec<&str> = m["inputs"].as_array().unwrap().iter().map(|i| i["path"].as_str().unwrap()).collect();
    assert!(inputs.iter().any(|p| p.ends_with("g.toml")));
}

#[test]
fn overlapping_coils_are_a_geometry_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "g.toml",
        r#"
[[coil]]
role = "transmitter"
center_m = [0.0, 0.0, 0.0]
axis = [0.0, 0.0, 1.0]
mean_radius_m = 0.005
turns = 10
cross_section_m2 = 1e-6

[[coil]]
role = "receiver"
center_m = [0.0, 0.0, 0.0005]
axis = [0.0, 0.0, 1.0]
mean_radius_m = 0.005
turns = 10
cross_section_m2 = 1e-6
"#,
    );
    let cfg = write(dir.path(), "c.toml", "[detection]\ngeometry_file = \"g.toml\"\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "detection-sweep"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("g.toml"), "{}", stderr(&o));
}

const SHORT_RINGDOWN: &str = "[ringdown]
tau_s = 40000.0
total_duration_s = 86400.0
noise_rms_m = 1e-7
";

fn simulate_and_analyze(format: &str) -> (Value, Value) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SHORT_RINGDOWN}format = \"{format}\"\n"));
    let c = cfg.to_str().unwrap();
    let o = levsim(dir.path(), &["--config", c, "--out", "o", "--seed", "11", "ringdown", "simulate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let truth = json(&dir.path().join("o/ringdown_truth.json"));
    let file = format!("o/{}", truth["block_file"].as_str().unwrap());
    let o = levsim(dir.path(), &["--config", c, "--out", "o", "--svg", "ringdown", "analyze", "--input", &file]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("o/ringdown_fit.svg").exists());
    assert!(dir.path().join("o/amplitude_series.csv").exists());
    (truth, json(&dir.path().join("o/decay_fit.json")))
}

#[test]
fn ringdown_round_trip_csv_and_binary() {
    for format in ["csv", "binary"] {
        let (truth, fit) = simulate_and_analyze(format);
        assert_eq!(truth["seed"], 11);
        assert_eq!(truth["blocks"], 24);
        let tau = fit["fit"]["tau"].as_f64().unwrap();
        let sigma = fit["fit"]["sigma_tau"].as_f64().unwrap();
        assert!((tau - 4e4).abs() < 4.0 * sigma + 1e-3 * 4e4, "{format}: tau {tau} ± {sigma}");
        assert_eq!(fit["blocks"], 24);
    }
}

#[test]
fn paper_scale_defaults_give_the_measured_linewidth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[ringdown]\nformat = \"binary\"\n");
    let c = cfg.to_str().unwrap();
    let o = levsim(dir.path(), &["--config", c, "--out", "o", "ringdown", "simulate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = levsim(dir.path(), &["--out", "o", "ringdown", "analyze", "--input", "o/ringdown_blocks.rngd"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = json(&dir.path().join("o/decay_fit.json"));
    let lw = fit["fit"]["linewidth"].as_f64().unwrap();
    assert!((lw / 0.776e-6 - 1.0).abs() < 0.02, "linewidth {lw}");
    let m = json(&dir.path().join("o/manifest_ringdown_simulate.json"));
    assert_eq!(m["outputs"][0]["path"], "ringdown_blocks.rngd");
}

#[test]
fn malformed_block_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "time_s,displacement\n0,1\n0.05,abc\n");
    let o = levsim(dir.path(), &["--out", "o", "ringdown", "analyze", "--input", "bad.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("bad.csv"), "{}", stderr(&o));
    let mut frame = b"RNGD".to_vec();
    frame.extend_from_slice(&1u32.to_le_bytes());
    frame.extend_from_slice(&20f64.to_le_bytes());
    frame.extend_from_slice(&0f64.to_le_bytes());
    frame.extend_from_slice(&100u64.to_le_bytes());
    frame.extend_from_slice(&[0u8; 16]);
    fs::write(dir.path().join("short.rngd"), frame).unwrap();
    let o = levsim(dir.path(), &["--out", "o", "ringdown", "analyze", "--input", "short.rngd"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("short.rngd") && stderr(&o).contains("truncated"), "{}", stderr(&o));
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let cfg = write(dir.path(), "c.toml", SHORT_RINGDOWN);
        let c = cfg.to_str().unwrap();
        for args in [
            vec!["--config", c, "--out", "o", "--seed", "5", "ringdown", "simulate"],
            vec!["--config", c, "--out", "o", "--seed", "5", "--svg", "damping-curve"],
            vec!["--config", c, "--out", "o", "--seed", "5", "detection-sweep"],
        ] {
            assert_eq!(code(&levsim(dir.path(), &args)), 0);
        }
    }
    for name in [
        "ringdown_blocks.csv",
        "ringdown_truth.json",
        "damping_curve.csv",
        "damping_curve.svg",
        "damping_curve_meta.json",
        "detection_sweep.csv",
    ] {
        let x = fs::read(a.path().join("o").join(name)).unwrap();
        let y = fs::read(b.path().join("o").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let cfg = a.path().join("c.toml");
    let o = levsim(a.path(), &["--config", cfg.to_str().unwrap(), "--out", "p", "--seed", "6", "ringdown", "simulate"]);
    assert_eq!(code(&o), 0);
    let x = csv(&a.path().join("o/ringdown_blocks.csv")).1;
    let y = csv(&a.path().join("p/ringdown_blocks.csv")).1;
    assert_ne!(x, y);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = levsim(dir.path(), &["--out", out, "--threads", threads, "detection-sweep"]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(
        fs::read(dir.path().join("a/detection_sweep.csv")).unwrap(),
        fs::read(dir.path().join("b/detection_sweep.csv")).unwrap()
    );
}

fn model(x3: f64) -> DampingModel {
    DampingModel::new(OscillatorSpec::default(), Media::default()).with_he3_fraction(x3)
}

fn tau_csv(x3: f64, temps: &[f64], noise: f64) -> String {
    let m = model(x3);
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut s = String::from("T_K,tau_s\n");
    for &t in temps {
        // xorshift, uniform in [-1, 1)
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let u = (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0;
        let tau = m.breakdown(t).unwrap().tau_total * (1.0 + noise * u);
        s.push_str(&format!("{t},{tau}\n"));
    }
    s
}

fn log_temps(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    levsim::damping::log_grid(lo, hi, n).unwrap()
}

#[test]
fn fit_recovers_generated_concentration() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exact.csv", &tau_csv(4.2e-8, &log_temps(0.01, 2.1, 40), 0.0));
    write(dir.path(), "noisy.csv", &tau_csv(4.2e-8, &log_temps(0.01, 2.1, 40), 0.05));
    let cfg = write(dir.path(), "c.toml", "[fit]\nadded_he3_fraction = 1e-7\n");
    let c = cfg.to_str().unwrap();

    let o = levsim(dir.path(), &["--config", c, "--out", "o", "--svg", "fit-he3", "exact.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("o/concentration_fit.json"));
    let x3 = r["fit"]["x3"].as_f64().unwrap();
    assert!((x3 / 4.2e-8 - 1.0).abs() < 1e-4, "{x3}");
    let ratio = r["contamination"]["impurity_regime_ratio"].as_f64().unwrap();
    assert!((ratio - 4.2 / 14.2).abs() < 1e-4, "{ratio}");
    assert_eq!(csv(&dir.path().join("o/fit_residuals.csv")).1.len(), 40);
    assert!(dir.path().join("o/contamination.csv").exists());
    assert!(dir.path().join("o/fit_he3.svg").exists());

    let o = levsim(dir.path(), &["--out", "o", "fit-he3", "noisy.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x3 = json(&dir.path().join("o/concentration_fit.json"))["fit"]["x3"].as_f64().unwrap();
    assert!((x3 / 4.2e-8 - 1.0).abs() < 0.10, "{x3}");
}

#[test]
fn fit_without_impurity_signature_is_a_bracket_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "hot.csv", &tau_csv(0.0, &log_temps(1.2, 2.1, 12), 0.0));
    let o = levsim(dir.path(), &["--out", "o", "fit-he3", "hot.csv"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("bracket"), "{}", stderr(&o));
}

#[test]
fn fit_rejects_malformed_data() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "T_K,tau_s\n0.1,100\n0.2\n");
    let o = levsim(dir.path(), &["--out", "o", "fit-he3", "bad.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("bad.csv"));
}

#[test]
fn sensitivity_reproduces_the_quoted_figures() {
    let dir = tempfile::tempdir().unwrap();
    let o = levsim(dir.path(), &["--out", "o", "sensitivity", "--temperature-k", "0.005", "--tau-s", "4e4", "--velocity-m-per-s", "1e-5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("o/sensitivity.json"));
    let f_d = r["f_d_n"].as_f64().unwrap();
    assert!((f_d - 3.165e-15).abs() < 1e-18, "{f_d}");

    let cfg = write(dir.path(), "c.toml", "[sensitivity]\ntemperature_k = 0.005\ntau_s = 4.1e5\nvelocity_m_per_s = 1e-5\n");
    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "sensitivity"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("o/sensitivity.json"));
    let t_over_tau = r["t_over_tau_k_per_s"].as_f64().unwrap();
    assert!((t_over_tau / 1.2195e-8 - 1.0).abs() < 1e-3, "{t_over_tau}");

    let o = levsim(dir.path(), &["--config", cfg.to_str().unwrap(), "--out", "o", "sensitivity", "--tau-s", "410400"]);
    assert_eq!(code(&o), 0);
    let lw = json(&dir.path().join("o/sensitivity.json"))["linewidth_hz"].as_f64().unwrap();
    assert!((lw - 0.7756e-6).abs() < 1e-10, "{lw}");
}
