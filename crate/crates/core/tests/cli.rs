use std::process::{Command, Output};

fn dmim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmim")).args(args).output().expect("spawn dmim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = stdout(o);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn dmim_values() {
    let o = dmim(&["dmim", "--exponential", "--lambda", "1"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&o);
    assert_eq!(header, ["value"]);
    assert_eq!(rows[0][0], 1.0 - (-1.0f64).exp());

    let (_, rows) = csv_rows(&dmim(&["dmim", "--uniform", "--a", "0", "--b", "1"]));
    assert_eq!(rows[0][0], (-1.0f64).exp());
}

#[test]
fn series_reports_certificate() {
    let o = dmim(&["dmim", "--normal", "--sigma", "1", "--method", "series"]);
    let (header, rows) = csv_rows(&o);
    assert_eq!(header, ["value", "truncation_bound", "terms_used"]);
    assert!((rows[0][0] - 0.758_997_778_271_017_1).abs() < 1e-14);
    assert!(rows[0][1] < 1e-15);

    let (_, approx) = csv_rows(&dmim(&["dmim", "--normal", "--sigma", "1", "--method", "approx-exp"]));
    assert!((approx[0][0] - rows[0][0]).abs() / rows[0][0] < 0.01);
}

#[test]
fn json_and_csv_agree() {
    for args in [
        vec!["plan", "--epsilon", "0.01", "--beta", "0.05", "--normal", "--sigma", "1"],
        vec!["curve", "fig2", "--points", "5"],
        vec!["dmim", "--normal", "--sigma", "3", "--method", "renyi-series", "--terms", "4"],
    ] {
        let (header, rows) = csv_rows(&dmim(&args));
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let o = dmim(&json_args);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["schema_version"], "1");
        assert_eq!(v["command"], args[0]);
        let cols: Vec<String> =
            v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_owned()).collect();
        assert_eq!(cols, header);
        let jrows = v["rows"].as_array().unwrap();
        assert_eq!(jrows.len(), rows.len());
        for (jr, r) in jrows.iter().zip(&rows) {
            let jr: Vec<f64> = jr.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert_eq!(&jr, r);
        }
    }
}

#[test]
fn plan_sample_counts() {
    let (header, rows) = csv_rows(&dmim(&["plan", "--epsilon", "0.01", "--beta", "0.05", "--normal", "--sigma", "1"]));
    assert_eq!(header, ["n", "d", "sigma", "epsilon", "beta", "l_x", "n_with_lx", "tail_bound"]);
    assert_eq!(rows[0][0], 788.0);
    assert!((rows[0][1] - 0.048_739_080_205_826_85).abs() < 1e-15);
    assert!(rows[0][6] >= rows[0][0]);
    assert!(rows[0][7] <= 0.05);

    let (_, half) = csv_rows(&dmim(&["plan", "--epsilon", "0.005", "--beta", "0.05", "--normal", "--sigma", "1"]));
    let ratio = half[0][0] / rows[0][0];
    assert!((ratio - 4.0).abs() < 0.05, "ratio = {ratio}");

    let (_, wide) = csv_rows(&dmim(&["plan", "--epsilon", "0.01", "--beta", "0.05", "--normal", "--sigma", "2"]));
    assert_eq!(wide[0][0], 197.0);
}

#[test]
fn curves_have_expected_shape() {
    let (header, rows) = csv_rows(&dmim(&["curve", "fig1"]));
    assert_eq!(header, ["sigma", "rel_err_exp", "rel_err_linear"]);
    assert_eq!(rows.len(), 100);
    let last = rows.last().unwrap();
    assert!((last[0] - 10.0).abs() < 1e-12);
    assert!(last[1] < 0.01 && last[2] < 0.01);

    let (header, rows) = csv_rows(&dmim(&["curve", "fig2"]));
    assert_eq!(header, ["variance", "l_uniform", "l_normal", "l_exponential"]);
    assert_eq!(rows.len(), 30);
    for r in &rows {
        assert!(r[2] > r[1] && r[1] > r[3]);
    }
    assert_eq!(dmim(&["curve", "fig1", "--min", "2", "--max", "1"]).status.code(), Some(2));
}

#[test]
fn ks_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("median.txt");
    std::fs::write(&path, "# one sample at the median\n0\n").unwrap();
    let o = dmim(&["ks", "--samples", path.to_str().unwrap(), "--normal", "--sigma", "1"]);
    let (header, rows) = csv_rows(&o);
    assert_eq!(header, ["n", "d_n", "p_value", "upper_bound"]);
    assert_eq!(rows[0][0], 1.0);
    assert_eq!(rows[0][1], 0.5);
    assert!(rows[0][3] >= rows[0][2]);

    let samples = dmim::montecarlo::sample(&dmim::DistributionSpec::normal(0.0, 1.0).unwrap(), 10_000, 7).unwrap();
    let text: String = samples.iter().map(|x| format!("{x:e}\n")).collect();
    std::fs::write(&path, text).unwrap();
    let (_, rows) = csv_rows(&dmim(&["ks", "--samples", path.to_str().unwrap(), "--normal", "--sigma", "1"]));
    assert!(rows[0][1] < 0.03);
    assert!(rows[0][3] >= rows[0][2]);
}

#[test]
fn exit_codes() {
    assert_eq!(dmim(&[]).status.code(), Some(2));
    assert_eq!(dmim(&["dmim", "--normal", "--uniform", "--sigma", "1"]).status.code(), Some(2));
    assert_eq!(dmim(&["dmim", "--normal", "--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(dmim(&["dmim", "--normal", "--sigma", "0.001", "--method", "series"]).status.code(), Some(3));
    assert_eq!(dmim(&["ks", "--samples", "/nonexistent/file", "--normal", "--sigma", "1"]).status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1.0\nnot-a-number\n").unwrap();
    let o = dmim(&["ks", "--samples", bad.to_str().unwrap(), "--normal", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(dmim(&["ks", "--samples", empty.to_str().unwrap(), "--normal", "--sigma", "1"]).status.code(), Some(4));
    assert_eq!(dmim(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--exponential", "--sigma", "1", "--trials", "1", "--seed", "42", "--points", "3"];
    let a = Command::new(env!("CARGO_BIN_EXE_dmim")).args(args).env("DMIM_THREADS", "1").output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_dmim")).args(args).env_remove("DMIM_THREADS").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (header, rows) = csv_rows(&a);
    assert_eq!(header, ["epsilon", "n", "d", "exceedance", "std_error", "trials", "seed"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[6] == 42.0 && r[5] == 1.0 && r[2] == 0.01));

    let o = Command::new(env!("CARGO_BIN_EXE_dmim")).args(args).env("DMIM_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_json_records_seed() {
    let o = dmim(&[
        "simulate",
        "--uniform",
        "--sigma",
        "1",
        "--trials",
        "5",
        "--points",
        "2",
        "--beta",
        "0.05",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["params"]["seed"], dmim::montecarlo::DEFAULT_SEED.to_string());
    assert_eq!(v["params"]["beta"], "0.05");
}
