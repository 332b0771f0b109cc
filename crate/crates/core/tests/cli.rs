use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinlattice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// toy-gen → phonons → zfs-derivs into `dir`.
fn derivatives(dir: &Path, variant: &str, n: &str) -> PathBuf {
    let d = p(dir);
    assert_eq!(code(&run(&["toy-gen", "--variant", variant, "--n", n, "--out", d])), 0);
    let fs_path = dir.join("forceset.json");
    assert_eq!(code(&run(&["phonons", "--forceset", p(&fs_path), "--out", d])), 0);
    let o = run(&[
        "zfs-derivs",
        "--samples",
        p(&dir.join("zfs_samples.json")),
        "--modes",
        p(&dir.join("modes.json")),
        "--out",
        d,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("zero-frequency modes skipped"));
    dir.join("derivatives.json")
}

fn rate_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["toy-gen", "--variant", "abc"])), 1);
    assert_eq!(code(&run(&["toy-gen", "--variant", "zigzag", "--n", "5"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn toy_gen_writes_two_files_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["toy-gen", "--variant", "monolayer", "--n", "6", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("71 atoms"), "{stdout}");
    assert!(stdout.trim_end().ends_with("toy-gen.manifest.json"), "{stdout}");
    let mut names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["forceset.json", "toy-gen.manifest.json", "zfs_samples.json"]);
}

#[test]
fn toy_gen_rejects_small_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["toy-gen", "--variant", "abc", "--n", "3", "--out", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("n >= 4"));
}

#[test]
fn repeated_toy_gen_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files = ["forceset.json", "zfs_samples.json", "toy-gen.manifest.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = run(&["toy-gen", "--variant", "aa_prime", "--n", "4", "--seed", "3", "--force-noise", "1e-5", "--out", p(dir.path())]);
        assert_eq!(code(&o), 0);
        runs.push(files.map(|f| fs::read(dir.path().join(f)).unwrap()));
    }
    for (f, (a, b)) in files.iter().zip(runs[0].iter().zip(&runs[1])) {
        assert!(a == b, "{f}");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = derivatives(a.path(), "abc", "4");
    derivatives(b.path(), "abc", "4");
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&["rates", "--derivatives", p(&da), "--threads", threads, "--out", p(dir.path())]);
        assert_eq!(code(&o), 0);
    }
    for f in ["modes.json", "dos.csv", "derivatives.json", "rates.csv", "spectral.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(code(&run(&["rates", "--derivatives", p(&da), "--threads", "0", "--out", p(a.path())])), 1);
}

#[test]
fn phonons_success_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    assert_eq!(code(&run(&["toy-gen", "--variant", "monolayer", "--n", "4", "--out", d])), 0);
    let set = dir.path().join("forceset.json");
    assert_eq!(code(&run(&["phonons", "--forceset", p(&set), "--out", d])), 0);
    let dos = fs::read_to_string(dir.path().join("dos.csv")).unwrap();
    assert!(dos.starts_with("energy_meV,dos_per_meV\n"));
    assert_eq!(code(&run(&["phonons", "--forceset", p(&set), "--sigma", "0.5", "--dos-grid", "0:120:0.05", "--out", d])), 0);

    // drop one displacement record
    let text = fs::read_to_string(&set).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["data"]["records"].as_array_mut().unwrap().remove(20);
    let broken = dir.path().join("broken.json");
    fs::write(&broken, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run(&["phonons", "--forceset", p(&broken), "--out", d]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("(atom 3, y, +)"), "{}", stderr(&o));
    assert_eq!(code(&run(&["phonons", "--forceset", p(&dir.path().join("nope.json")), "--out", d])), 1);
}

#[test]
fn zfs_derivs_missing_row_fails() {
    let dir = tempfile::tempdir().unwrap();
    derivatives(dir.path(), "monolayer", "4");
    let samples = dir.path().join("zfs_samples.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&samples).unwrap()).unwrap();
    doc["data"]["samples"][5].as_object_mut().unwrap().remove("minus");
    fs::write(&samples, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run(&[
        "zfs-derivs",
        "--samples",
        p(&samples),
        "--modes",
        p(&dir.path().join("modes.json")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mode 5 has no minus"), "{}", stderr(&o));
}

#[test]
fn zfs_derivs_step_override_halves_the_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "4");
    let base: serde_json::Value = serde_json::from_str(&fs::read_to_string(&derivs).unwrap()).unwrap();
    let o = run(&[
        "zfs-derivs",
        "--samples",
        p(&dir.path().join("zfs_samples.json")),
        "--modes",
        p(&dir.path().join("modes.json")),
        "--step",
        "0.2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("step override"));
    let doubled: serde_json::Value = serde_json::from_str(&fs::read_to_string(&derivs).unwrap()).unwrap();
    let second = |v: &serde_json::Value| -> Vec<f64> {
        let modes = v["data"]["modes"].as_array().unwrap();
        modes.iter().flat_map(|m| m["second"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap())).collect()
    };
    let (sa, sb) = (second(&base), second(&doubled));
    let k = (0..sa.len()).max_by(|&i, &j| sa[i].abs().total_cmp(&sa[j].abs())).unwrap();
    let (a, b) = (sa[k], sb[k]);
    assert!(a != 0.0 && (b / a - 0.25).abs() < 1e-12, "{a} {b}");
}

#[test]
fn monolayer_rates_have_no_single_quantum_column() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "6");
    assert_eq!(code(&run(&["rates", "--derivatives", p(&derivs), "--out", p(dir.path())])), 0);
    let rows = rate_rows(&dir.path().join("rates.csv"));
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r[2] == 0.0 && r[1] > 0.0));
    let header = fs::read_to_string(dir.path().join("spectral.csv")).unwrap();
    assert!(header.starts_with("energy_meV,F_double,F_single,F_dephase\n"));
}

#[test]
fn sigma_sweep_writes_one_pair_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "aa_prime", "4");
    let o = run(&["rates", "--derivatives", p(&derivs), "--sigma-sweep", "0.5,1,2", "--temps", "100:300:3:linear", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Vec<Vec<Vec<f64>>> =
        ["0.5", "1", "2"].iter().map(|s| rate_rows(&dir.path().join(format!("rates_sigma{s}.csv")))).collect();
    for k in 0..3 {
        // σ·Γ roughly constant when modes do not overlap much
        let scaled: Vec<f64> = [0.5, 1.0, 2.0].iter().zip(&r).map(|(s, rows)| s * rows[k][1]).collect();
        assert!((scaled[0] / scaled[1] - 1.0).abs() < 0.15, "{scaled:?}");
    }
}

#[test]
fn cutoff_below_every_mode_gives_zero_rates_and_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "4");
    let o = run(&["rates", "--derivatives", p(&derivs), "--cutoff", "0.1", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("no modes below"), "{}", stderr(&o));
    let rows = rate_rows(&dir.path().join("rates.csv"));
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0 && r[3] == 0.0 && r[4].is_infinite()));
}

#[test]
fn channel_selection_leaves_nan_columns() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "4");
    let o = run(&["rates", "--derivatives", p(&derivs), "--channel", "dephase", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    let rows = rate_rows(&dir.path().join("rates.csv"));
    assert!(rows.iter().all(|r| r[1].is_nan() && r[2].is_nan() && r[3] > 0.0 && r[4].is_nan()));
    assert_eq!(code(&run(&["rates", "--derivatives", p(&derivs), "--channel", "triple", "--out", p(dir.path())])), 1);
}

fn write_rates(path: &Path, temps: &[f64], f: impl Fn(f64) -> f64) {
    let mut s = String::from("T_K,gamma_double_Hz,gamma_single_Hz,gamma_dephase_Hz,T1_s\n");
    for &t in temps {
        let g = f(t);
        s += &format!("{t:.8e},{g:.8e},0.00000000e0,0.00000000e0,{:.8e}\n", 1.0 / g);
    }
    fs::write(path, s).unwrap();
}

#[test]
fn fit_reports_exponent_and_reference_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let rates = dir.path().join("t2.csv");
    let temps: Vec<f64> = (1..=40).map(|k| 10.0 * k as f64).collect();
    write_rates(&rates, &temps, |t| 0.7 * t * t);
    let reference = dir.path().join("exp.csv");
    fs::write(&reference, "T_K,gamma_Hz\n3.00000000e2,4.50000000e4\n").unwrap();
    let o = run(&["fit", "--rates", p(&rates), "--reference", p(&reference), "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("exponent 2.0000"), "{stdout}");
    assert!(stdout.contains("computed/reference = 1.4000"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit_report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "fit_report");
    assert!((report["data"]["power_law"]["exponent"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    // a pure power law has no finite-energy optimum
    assert!(report["data"]["effective_modes"].is_null());
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn fit_toy_monolayer_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "6");
    assert_eq!(code(&run(&["rates", "--derivatives", p(&derivs), "--out", p(dir.path())])), 0);
    let o = run(&["fit", "--rates", p(&dir.path().join("rates.csv")), "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit_report.json")).unwrap()).unwrap();
    let e = report["data"]["power_law"]["exponent"].as_f64().unwrap();
    assert!((1.9..=2.3).contains(&e), "{e}");
}

#[test]
fn fit_needs_enough_points() {
    let dir = tempfile::tempdir().unwrap();
    let rates = dir.path().join("few.csv");
    write_rates(&rates, &[100.0, 200.0, 300.0], |t| t * t);
    assert_ne!(code(&run(&["fit", "--rates", p(&rates), "--out", p(dir.path())])), 0);
}

#[test]
fn config_layering_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "4");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "sigma = 0.5\noutput_dir = \"cfg-out\"\n[temperatures]\nmin = 100\nmax = 200\npoints = 3\nspacing = \"linear\"\n[inputs]\nderivatives = \"derivatives.json\"\n").unwrap();
    // inputs and output_dir resolve against the config's directory
    let o = run(&["--config", p(&cfg), "rates"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = rate_rows(&dir.path().join("cfg-out/rates.csv"));
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [100.0, 150.0, 200.0]);
    // flags beat the config
    let o = run(&["--config", p(&cfg), "rates", "--derivatives", p(&derivs), "--temps", "10:20:2", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(rate_rows(&dir.path().join("rates.csv")).len(), 2);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rates.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["plan"]["rates"]["sigmas"][0].as_f64(), Some(0.5));

    fs::write(&cfg, "cutoff = 40\nsigma = -1\n").unwrap();
    let o = run(&["--config", p(&cfg), "rates", "--derivatives", p(&derivs)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sigma") && stderr(&o).contains("line 2"), "{}", stderr(&o));
    fs::write(&cfg, "sigmaa = 1\n").unwrap();
    assert_eq!(code(&run(&["--config", p(&cfg), "rates", "--derivatives", p(&derivs)])), 1);
}

#[test]
fn rerun_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let derivs = derivatives(dir.path(), "monolayer", "4");
    let manifest = dir.path().join("zfs-derivs.manifest.json");
    let other = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["rerun", p(&manifest), "--out", p(other.path())])), 0);
    assert_eq!(fs::read(&derivs).unwrap(), fs::read(other.path().join("derivatives.json")).unwrap());
    fs::write(dir.path().join("modes.json"), "{}").unwrap();
    let o = run(&["rerun", p(&manifest), "--out", p(other.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("inputs changed"));
}
