use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context};
use fieldspec::field::{gap_profile, random_topology, regular_topology, sample_signal};
use fieldspec::io::{
    self, ensemble_sidecar, fmt_f64, sidecar_path, write_csv, write_json, write_series, FORMAT_VERSION,
};
use fieldspec::linsys::{build_system, eig_hermitian, precond_bound};
use fieldspec::moments::moment_polynomial;
use fieldspec::reconstruct::{self as recon, reconstruct as reconstruct_samples, SweepGrid, Topology};
use fieldspec::spectral::{
    check_min_eig_bound, empirical_cdf, fit_tail, kappa_mirror_check, kappa_union_check, log_grid, min_eig_log_offset,
    run_ensemble, Histogram, TAIL_FLOOR,
};
use fieldspec::validation::moment_comparison;
use fieldspec::{seed, BandlimitedSignal, Complex64, EnsembleSpec, ReconstructOptions, SampleSet};
use serde_json::{json, Value};
use tracing::{info, warn};

use crate::{MomentsArgs, Outcome, PrecondArgs, ReconstructArgs, SpectrumArgs, SweepArgs, EXIT_ILL_CONDITIONED};

/// Records written files relative to the output directory.
struct Files<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Files<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, names: Vec::new() }
    }

    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    /// Writes `value` as the sidecar of the data file `name`.
    fn sidecar(&mut self, name: &str, value: &Value) -> anyhow::Result<()> {
        let side = sidecar_path(Path::new(name));
        write_json(&self.path(&side.to_string_lossy()), value)?;
        Ok(())
    }
}

pub fn reconstruct(a: &ReconstructArgs, master: u64, out: &Path) -> anyhow::Result<Outcome> {
    let (samples, truth) = match &a.samples {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let samples = SampleSet::read_csv(file).with_context(|| format!("reading {}", path.display()))?;
            (samples, None)
        }
        None => {
            let Some(r) = a.r else { bail!("--r is required unless --samples is given") };
            let signal = BandlimitedSignal::random_real(a.harmonics, &mut seed::rng(seed::child(master, 0)));
            let positions =
                if a.regular { regular_topology(r)? } else { random_topology(r, a.support, seed::child(master, 1))? };
            (sample_signal(&signal, &positions)?, Some(signal))
        }
    };
    let options = ReconstructOptions { weighted: a.weighted, kappa_max: a.kappa_max };
    let report = reconstruct_samples(&samples, a.harmonics, options, truth.as_ref())?.with_both_kappas(&samples)?;
    let bound = if a.harmonics > 0 { precond_bound(report.delta, a.harmonics)? } else { f64::INFINITY };
    info!(kappa = report.kappa, beta = report.beta, success = report.success, "reconstructed");

    let mut files = Files::new(out);
    samples.write_csv(BufWriter::new(File::create(files.path("samples.csv"))?))?;
    let estimate = report.signal()?;
    if a.grid == 0 {
        bail!("--grid must be positive");
    }
    let mut rows = Vec::with_capacity(a.grid);
    for i in 0..a.grid {
        let t = i as f64 / a.grid as f64;
        let truth_re = match &truth {
            Some(s) => s.evaluate(t)?.re,
            None => f64::NAN,
        };
        rows.push(vec![fmt_f64(t), fmt_f64(truth_re), fmt_f64(estimate.evaluate(t)?.re)]);
    }
    write_csv(&files.path("reconstruction.csv"), &["t", "true_re", "recon_re"], rows)?;
    let mut value = serde_json::to_value(&report)?;
    value["format_version"] = json!(FORMAT_VERSION);
    value["precond_bound"] = json!(bound);
    write_json(&files.path("report.json"), &value)?;

    let exit = if report.success { 0 } else { EXIT_ILL_CONDITIONED };
    if !report.success {
        warn!(kappa = report.kappa, kappa_max = a.kappa_max, "system is ill-conditioned");
    }
    Ok(Outcome {
        exit,
        files: files.names,
        derived: json!({
            "r": report.r,
            "beta": report.beta,
            "delta": report.delta,
            "signal_seed": seed::child(master, 0),
            "topology_seed": seed::child(master, 1),
        }),
    })
}

pub fn sweep(a: &SweepArgs, master: u64, out: &Path) -> anyhow::Result<Outcome> {
    let grid = SweepGrid {
        harmonics: a.harmonics.clone(),
        samples: a.samples.clone(),
        topology: if a.regular { Topology::Regular } else { Topology::Random(a.support) },
        trials: a.trials,
        weighted: a.weighted,
        kappa_max: a.kappa_max,
    };
    let cells = recon::sweep(&grid, master)?;
    let mut files = Files::new(out);
    io::write_sweep(&files.path("sweep.csv"), &cells)?;
    files.sidecar(
        "sweep.csv",
        &json!({
            "format_version": FORMAT_VERSION,
            "file": "sweep.csv",
            "columns": ["M", "r", "beta", "trials", "success_frac", "mean_kappa_success", "mean_delta"],
            "grid": grid,
            "seed": master,
            "trial_seed": "child(child(seed, cell), trial); signal from child(s, 0), topology from child(s, 1)",
        }),
    )?;
    Ok(Outcome { exit: 0, files: files.names, derived: json!({ "cells": cells.len() }) })
}

pub fn spectrum(a: &SpectrumArgs, master: u64, out: &Path) -> anyhow::Result<Outcome> {
    let spec = match (a.beta, a.r) {
        (Some(beta), _) => EnsembleSpec::new(a.harmonics, beta, a.trials, master)?,
        (None, Some(r)) => EnsembleSpec::from_samples(a.harmonics, r, a.trials, master)?,
        (None, None) => bail!("one of --beta or --r is required"),
    };
    info!(M = spec.harmonics, r = spec.r, trials = spec.trials, "running ensemble");
    let ens = run_ensemble(&spec)?;
    if ens.failures > 0 {
        warn!(failures = ens.failures, "some trials failed to decompose and were skipped");
    }
    let mut files = Files::new(out);
    let per_decade = a.bins_per_decade;
    let linear = json!({"kind": "linear", "width": a.bin_width});
    let logarithmic = json!({"kind": "log10", "per_decade": per_decade});

    io::write_ensemble(&files.path("ensemble.csv"), &ens)?;
    files.sidecar(
        "ensemble.csv",
        &ensemble_sidecar(&spec, "ensemble.csv", &["trial", "min_eig", "kappa"], Value::Null),
    )?;
    if a.eigenvalues {
        io::write_eigenvalues(&files.path("eigenvalues.csv"), &ens)?;
        files.sidecar(
            "eigenvalues.csv",
            &ensemble_sidecar(&spec, "eigenvalues.csv", &["trial", "index", "lambda"], Value::Null),
        )?;
    }

    let series = |files: &mut Files, name: &str, cols: [&str; 2], pairs: &[(f64, f64)], bins: &Value| {
        write_series(&files.path(name), cols, pairs)?;
        files.sidecar(name, &ensemble_sidecar(&spec, name, &cols, bins.clone()))
    };
    let hist_pairs = |h: &Histogram| h.centers().into_iter().zip(h.densities()).collect::<Vec<_>>();

    let pdf = Histogram::linear(&ens.all_eigenvalues, a.bin_width)?;
    series(&mut files, "pdf.csv", ["x", "density"], &hist_pairs(&pdf), &linear)?;
    let pdf_log = Histogram::logarithmic(&ens.all_eigenvalues, per_decade)?;
    series(&mut files, "pdf_log.csv", ["x", "density"], &hist_pairs(&pdf_log), &logarithmic)?;

    let grid = log_grid(TAIL_FLOOR, 10.0, per_decade)?;
    let cdf = empirical_cdf(&ens.all_eigenvalues, &grid)?;
    series(&mut files, "cdf.csv", ["x", "F"], &cdf, &logarithmic)?;
    let min_cdf = empirical_cdf(&ens.min_eigs, &grid)?;
    series(&mut files, "min_eig_cdf.csv", ["x", "F"], &min_cdf, &logarithmic)?;
    let min_pdf = Histogram::logarithmic(&ens.min_eigs, per_decade)?;
    series(&mut files, "min_eig_pdf_log.csv", ["x", "density"], &hist_pairs(&min_pdf), &logarithmic)?;
    let finite: Vec<f64> = ens.kappas.iter().copied().filter(|k| k.is_finite()).collect();
    if !finite.is_empty() {
        let kappa_pdf = Histogram::logarithmic(&finite, per_decade)?;
        series(&mut files, "kappa_pdf_log.csv", ["x", "density"], &hist_pairs(&kappa_pdf), &logarithmic)?;
    }

    let mut derived = json!({
        "r": spec.r,
        "realized_beta": spec.realized_beta,
        "successful_trials": ens.successful_trials(),
        "failures": ens.failures,
    });

    if a.check_min_bound {
        let bound_grid = log_grid(1e-6, 1.0, per_decade)?;
        let rows = check_min_eig_bound(&ens, &bound_grid)?;
        let violated = rows.iter().filter(|r| !r.satisfied).count();
        io::write_min_bound(&files.path("min_bound.csv"), &rows)?;
        let mut side = ensemble_sidecar(
            &spec,
            "min_bound.csv",
            &["x", "F_min", "F", "bound", "sigma", "satisfied"],
            logarithmic.clone(),
        );
        side["all_satisfied"] = json!(violated == 0);
        side["violations"] = json!(violated);
        side["log_offset"] = json!(min_eig_log_offset(&ens, &rows, 0.1, 10).ok());
        files.sidecar("min_bound.csv", &side)?;
        info!(violations = violated, "minimum-eigenvalue bound checked");
        derived["min_bound_violations"] = json!(violated);
    }

    if a.fit_tail {
        let fit = fit_tail(&cdf, a.tail_anchor)?;
        info!(a_hat = fit.a_hat, b_hat = fit.b_hat, "tail fit");
        let mut value = serde_json::to_value(fit)?;
        value["format_version"] = json!(FORMAT_VERSION);
        value["anchor"] = json!(a.tail_anchor);
        value["spec"] = serde_json::to_value(spec)?;
        write_json(&files.path("tail_fit.json"), &value)?;
        derived["a_hat"] = json!(fit.a_hat);
    }

    if a.mirror {
        let report = |r: fieldspec::Result<fieldspec::spectral::MirrorReport>| match r {
            Ok(rep) => serde_json::to_value(rep).unwrap_or(Value::Null),
            Err(e) => json!({"error": e.to_string()}),
        };
        let value = json!({
            "format_version": FORMAT_VERSION,
            "spec": spec,
            "mirror": report(kappa_mirror_check(&ens, a.mirror_d)),
            "union": report(kappa_union_check(&ens, a.mirror_d)),
        });
        write_json(&files.path("mirror.json"), &value)?;
    }

    Ok(Outcome { exit: 0, files: files.names, derived })
}

pub fn moments(a: &MomentsArgs, master: u64, out: &Path) -> anyhow::Result<Outcome> {
    if !(1..=fieldspec::moments::MAX_ORDER).contains(&a.p_max) {
        bail!("--p-max must lie in 1..={}", fieldspec::moments::MAX_ORDER);
    }
    let mut polys = Vec::with_capacity(a.p_max);
    for p in 1..=a.p_max {
        let poly = moment_polynomial(p)?;
        info!(p, polynomial = %poly, "moment");
        polys.push(io::moments_json(&poly, &a.betas));
    }
    let mut files = Files::new(out);
    write_json(&files.path("moments.json"), &json!({"format_version": FORMAT_VERSION, "moments": polys}))?;

    let mut derived = json!({});
    if a.table1 {
        let mut rows = Vec::new();
        let mut realized = Vec::new();
        for (i, &beta) in a.betas.iter().enumerate() {
            let part = moment_comparison(a.harmonics, beta, a.p_max, a.trials, seed::child(master, i as u64))?;
            if let Some(first) = part.first() {
                realized.push(json!({"beta": beta, "r": first.r, "realized_beta": first.realized_beta}));
            }
            rows.extend(part);
        }
        io::write_table1(&files.path("table1.csv"), &rows)?;
        files.sidecar(
            "table1.csv",
            &json!({
                "format_version": FORMAT_VERSION,
                "file": "table1.csv",
                "columns": ["beta", "p", "sim", "exact", "limit"],
                "M": a.harmonics,
                "trials": a.trials,
                "seed": master,
                "per_beta_seed": "child(seed, index of beta)",
                "ensembles": realized,
                "sim_std_err": rows.iter().map(|r| r.sim_std_err).collect::<Vec<_>>(),
            }),
        )?;
        derived["ensembles"] = json!(realized);
    }
    Ok(Outcome { exit: 0, files: files.names, derived })
}

pub fn precond_check(a: &PrecondArgs, master: u64, out: &Path) -> anyhow::Result<Outcome> {
    if a.harmonics == 0 || a.r == 0 || a.topologies == 0 {
        bail!("--M, --r and --topologies must be positive");
    }
    let limit = 1.0 / (2.0 * a.harmonics as f64);
    let mut rows = Vec::with_capacity(a.topologies);
    let (mut violations, mut held) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    for i in 0..a.topologies {
        let base = seed::child(master, i as u64);
        let mut attempt = 0;
        let (positions, delta) = loop {
            let t = random_topology(a.r, a.support, seed::child(base, attempt))?;
            let delta = if a.r >= 2 { gap_profile(&t)?.delta } else { 1.0 };
            if !a.require_hypothesis || delta < limit {
                break (t, delta);
            }
            attempt += 1;
            if attempt == 100_000 {
                bail!("no topology with gap below 1/(2M) in {attempt} draws; increase --r");
            }
        };
        let samples = SampleSet::new(positions, vec![Complex64::new(0.0, 0.0); a.r])?;
        let kappa_w = eig_hermitian(&build_system(&samples, a.harmonics, true)?)?.kappa;
        let kappa_u = eig_hermitian(&build_system(&samples, a.harmonics, false)?)?.kappa;
        let bound = precond_bound(delta, a.harmonics)?;
        let satisfied = kappa_w <= bound;
        if delta < limit {
            held += 1;
            worst = worst.max(kappa_w / bound);
            if !satisfied {
                violations += 1;
            }
        }
        rows.push(vec![
            i.to_string(),
            fmt_f64(delta),
            fmt_f64(kappa_w),
            fmt_f64(kappa_u),
            fmt_f64(bound),
            u8::from(satisfied).to_string(),
        ]);
    }
    let mut files = Files::new(out);
    let columns = ["topology", "delta", "kappa_weighted", "kappa_unweighted", "bound", "satisfied"];
    write_csv(&files.path("precond.csv"), &columns, rows)?;
    let summary = json!({
        "hypothesis_held": held,
        "violations": violations,
        "max_ratio": worst,
    });
    files.sidecar(
        "precond.csv",
        &json!({
            "format_version": FORMAT_VERSION,
            "file": "precond.csv",
            "columns": columns,
            "M": a.harmonics,
            "r": a.r,
            "support": a.support,
            "topologies": a.topologies,
            "seed": master,
            "summary": summary,
        }),
    )?;
    info!(held, violations, max_ratio = worst, "preconditioning bound checked");
    Ok(Outcome { exit: 0, files: files.names, derived: summary })
}
