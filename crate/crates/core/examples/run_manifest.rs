//! Drive the CLI in-process with a config file, then replay its manifest.

use spinlattice::cli;

fn main() {
    let dir = std::env::temp_dir().join("spinlattice-manifest");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        "sigma = 0.5\noutput_dir = \"out\"\n\n[temperatures]\nmin = 50\nmax = 350\npoints = 7\nspacing = \"linear\"\n",
    )
    .unwrap();
    let out = dir.join("out");
    let cfg = config.to_str().unwrap();
    let o = out.to_str().unwrap();

    let steps: [Vec<String>; 4] = [
        vec!["toy-gen".into(), "--variant".into(), "abc".into(), "--n".into(), "5".into()],
        vec!["phonons".into(), "--forceset".into(), format!("{o}/forceset.json")],
        vec![
            "zfs-derivs".into(),
            "--samples".into(),
            format!("{o}/zfs_samples.json"),
            "--modes".into(),
            format!("{o}/modes.json"),
        ],
        vec!["rates".into(), "--derivatives".into(), format!("{o}/derivatives.json")],
    ];
    for step in steps {
        let mut argv = vec!["spinlattice".to_string(), "--config".into(), cfg.into()];
        argv.extend(step);
        assert_eq!(cli::run(&argv), 0, "{argv:?}");
    }
    let replay = dir.join("replay");
    let code = cli::run(["spinlattice", "rerun", &format!("{o}/rates.manifest.json"), "--out", replay.to_str().unwrap()]);
    println!("rerun exit code {code}");
    println!("{}", std::fs::read_to_string(out.join("rates.csv")).unwrap());
}
