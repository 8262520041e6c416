use std::path::Path;
use std::process::{Command, Output};

use fieldspec::io::read_csv_f64;
use serde_json::Value;
use tempfile::TempDir;

fn fieldspec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldspec"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FIELDSPEC_THREADS")
        .output()
        .expect("failed to launch fieldspec")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn gapped_reconstruction_reports_beta_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(dir.path(), &["reconstruct", "--M", "10", "--r", "26", "--support", "0:0.8", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("report.json"));
    assert!((report["beta"].as_f64().unwrap() - 0.807).abs() < 1e-3);
    assert_eq!(report["success"], true);
    assert!(report["rel_l2_error"].as_f64().unwrap() < 1e-6);
    assert!(report["kappa_unweighted"].is_number() && report["kappa_weighted"].is_number());

    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["seed"], 1);
    assert_eq!(manifest["config"]["command"]["name"], "reconstruct");
    assert_eq!(manifest["config"]["command"]["M"], 10);
    assert_eq!(manifest["derived"]["r"], 26);
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    for f in ["samples.csv", "reconstruction.csv", "report.json"] {
        assert!(files.contains(&f), "{f} missing from manifest");
        assert!(dir.path().join(f).exists());
    }

    let (header, rows) = read_csv_f64(&dir.path().join("reconstruction.csv")).unwrap();
    assert_eq!(header, ["t", "true_re", "recon_re"]);
    assert_eq!(rows.len(), 1000);
    for row in &rows {
        assert!((row[1] - row[2]).abs() < 1e-8);
    }
    let (header, rows) = read_csv_f64(&dir.path().join("samples.csv")).unwrap();
    assert_eq!(header, ["t", "value_re", "value_im"]);
    assert_eq!(rows.len(), 26);
    assert!(rows.iter().all(|r| r[0] < 0.8));
}

#[test]
fn regular_grid_is_exact() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(dir.path(), &["reconstruct", "--M", "4", "--regular", "--r", "10"]);
    assert_eq!(code(&o), 0);
    assert!(json(&dir.path().join("report.json"))["rel_l2_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn ill_conditioned_draw_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(dir.path(), &["reconstruct", "--M", "10", "--r", "21", "--seed", "2"]);
    assert_eq!(code(&o), 2);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["success"], false);
    assert!(report["kappa"].as_f64().is_none_or(|k| k > 1e12));
    assert_eq!(json(&dir.path().join("manifest.json"))["exit_code"], 2);
}

#[test]
fn malformed_samples_exit_with_line_number() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(&input, "t,value_re,value_im\n0.1,1,0\n0.2,oops,0\n").unwrap();
    let o = fieldspec(dir.path(), &["reconstruct", "--M", "1", "--samples", input.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&fieldspec(dir.path(), &["nonsense"])), 1);
    assert_eq!(code(&fieldspec(dir.path(), &["reconstruct", "--M", "4"])), 1);
    assert_eq!(code(&fieldspec(dir.path(), &["spectrum", "--M", "4"])), 1);
    assert_eq!(code(&fieldspec(dir.path(), &["moments", "--p-max", "13"])), 1);
}

#[test]
fn written_samples_reconstruct_identically() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    assert_eq!(code(&fieldspec(&first, &["reconstruct", "--M", "6", "--r", "30", "--seed", "9"])), 0);
    let second = dir.path().join("second");
    let samples = first.join("samples.csv");
    let o = fieldspec(&second, &["reconstruct", "--M", "6", "--samples", samples.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let a = json(&first.join("report.json"));
    let b = json(&second.join("report.json"));
    assert_eq!(a["coeffs_hat"], b["coeffs_hat"]);
    assert!(b["rel_l2_error"].is_null());
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["sweep", "--M-list", "3,5", "--r-list", "8,12", "--trials", "40", "--seed", "5"];
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--threads", threads]);
        assert_eq!(code(&fieldspec(&out, &full)), 0);
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap());
        assert_eq!(json(&out.join("manifest.json"))["threads"], threads.parse::<u64>().unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let (header, rows) = read_csv_f64(&dir.path().join("1").join("sweep.csv")).unwrap();
    assert_eq!(header, ["M", "r", "beta", "trials", "success_frac", "mean_kappa_success", "mean_delta"]);
    assert_eq!(rows.len(), 4);
    assert!(dir.path().join("1").join("sweep.json").exists());
}

#[test]
fn first_moment_is_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&fieldspec(dir.path(), &["moments", "--p-max", "1"])), 0);
    let v = json(&dir.path().join("moments.json"));
    for e in v["moments"][0]["evaluations"].as_array().unwrap() {
        assert_eq!(e["value"], 1.0);
    }
}

#[test]
fn moment_polynomials_up_to_five() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&fieldspec(dir.path(), &["moments", "--p-max", "5", "--betas", "1"])), 0);
    let v = json(&dir.path().join("moments.json"));
    let polys: Vec<&str> = v["moments"].as_array().unwrap().iter().map(|m| m["polynomial"].as_str().unwrap()).collect();
    assert_eq!(
        polys,
        ["1", "1 + β", "1 + 3β + β^2", "1 + 6β + (20/3)β^2 + β^3", "1 + 10β + (70/3)β^2 + (40/3)β^3 + β^4"]
    );
    // p = 5 at β = 1: 1 + 10 + 70/3 + 40/3 + 1
    let at_one = v["moments"][4]["evaluations"][0]["value"].as_f64().unwrap();
    assert!((at_one - (12.0 + 110.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn moment_table_without_simulation() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(dir.path(), &["moments", "--table1", "--M", "200", "--trials", "0"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = read_csv_f64(&dir.path().join("table1.csv")).unwrap();
    assert_eq!(header, ["beta", "p", "sim", "exact", "limit"]);
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[2].is_nan()));
    // β = 0.25, p = 3
    assert!((rows[2][3] - 1.810).abs() < 5e-4);
    assert!((rows[2][4] - 1.8125).abs() < 1e-12);
    let side = json(&dir.path().join("table1.json"));
    assert_eq!(side["ensembles"][2]["r"], 535);
}

#[test]
fn spectrum_writes_series_with_sidecars() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(
        dir.path(),
        &["spectrum", "--M", "1", "--beta", "0.25", "--trials", "1", "--eigenvalues", "--check-min-bound"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, eig) = read_csv_f64(&dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.len(), 3);
    assert!((eig.iter().map(|r| r[2]).sum::<f64>() - 3.0).abs() < 1e-10);
    for f in ["pdf", "pdf_log", "cdf", "min_eig_cdf", "ensemble", "min_bound"] {
        let side = json(&dir.path().join(format!("{f}.json")));
        assert_eq!(side["M"], 1);
        assert_eq!(side["r"], 12);
        assert_eq!(side["trials"], 1);
        assert!(dir.path().join(format!("{f}.csv")).exists());
    }
    assert_eq!(json(&dir.path().join("pdf.json"))["bins"]["width"], 0.1);
    let (header, _) = read_csv_f64(&dir.path().join("cdf.csv")).unwrap();
    assert_eq!(header, ["x", "F"]);
}

#[test]
fn spectrum_tail_fit_report() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(dir.path(), &["spectrum", "--M", "10", "--beta", "0.35", "--trials", "300", "--fit-tail"]);
    assert_eq!(code(&o), 0);
    let fit = json(&dir.path().join("tail_fit.json"));
    assert!(fit["a_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["anchor"], 0.01);
}

#[test]
fn preconditioning_bound_holds_under_its_hypothesis() {
    let dir = TempDir::new().unwrap();
    let o = fieldspec(
        dir.path(),
        &["precond-check", "--M", "4", "--r", "64", "--topologies", "40", "--require-hypothesis", "--seed", "3"],
    );
    assert_eq!(code(&o), 0);
    let side = json(&dir.path().join("precond.json"));
    assert_eq!(side["summary"]["hypothesis_held"], 40);
    assert_eq!(side["summary"]["violations"], 0);
    let (_, rows) = read_csv_f64(&dir.path().join("precond.csv")).unwrap();
    assert!(rows.iter().all(|r| r[1] < 1.0 / 8.0 && r[2] <= r[4]));
}
