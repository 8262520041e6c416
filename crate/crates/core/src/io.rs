//! File schemas: CSV series at 17 significant digits and pretty-printed JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::moments::MomentPolynomial;
use crate::reconstruct::SweepCell;
use crate::spectral::{EnsembleSpec, MinBoundRow, SpectralEnsemble};
use crate::validation::MomentRow;

/// Version tag written into every manifest and sidecar.
pub const FORMAT_VERSION: &str = "1.0";

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV with the given header; every row must match its width.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line: 0, message: format!("{other:?}") },
    }
}

/// Reads a numeric CSV back: header and rows of `f64`.
pub fn read_csv_f64(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse { line, message: format!("{s:?}: {e}") }))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `<stem>.json` next to a data file.
pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

/// Sidecar describing the ensemble a series was computed from.
pub fn ensemble_sidecar(spec: &EnsembleSpec, file: &str, columns: &[&str], bins: Value) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "file": file,
        "columns": columns,
        "M": spec.harmonics,
        "beta": spec.beta,
        "realized_beta": spec.realized_beta,
        "r": spec.r,
        "trials": spec.trials,
        "seed": spec.seed,
        "bins": bins,
    })
}

pub fn write_sweep(path: &Path, cells: &[SweepCell]) -> Result<()> {
    write_csv(
        path,
        &["M", "r", "beta", "trials", "success_frac", "mean_kappa_success", "mean_delta"],
        cells.iter().map(|c| {
            vec![
                c.harmonics.to_string(),
                c.r.to_string(),
                fmt_f64(c.beta),
                c.trials.to_string(),
                fmt_f64(c.success_frac),
                fmt_f64(c.mean_kappa_success),
                fmt_f64(c.mean_delta),
            ]
        }),
    )
}

/// `trial,min_eig,kappa` per successful trial.
pub fn write_ensemble(path: &Path, ens: &SpectralEnsemble) -> Result<()> {
    write_csv(
        path,
        &["trial", "min_eig", "kappa"],
        ens.trial_ids
            .iter()
            .zip(ens.min_eigs.iter().zip(&ens.kappas))
            .map(|(t, (m, k))| vec![t.to_string(), fmt_f64(*m), fmt_f64(*k)]),
    )
}

/// `trial,index,lambda` for every eigenvalue.
pub fn write_eigenvalues(path: &Path, ens: &SpectralEnsemble) -> Result<()> {
    write_csv(
        path,
        &["trial", "index", "lambda"],
        ens.trial_ids.iter().zip(ens.trials()).flat_map(|(t, lams)| {
            lams.iter().enumerate().map(move |(i, l)| vec![t.to_string(), i.to_string(), fmt_f64(*l)])
        }),
    )
}

/// Two-column numeric series such as `x,density` or `x,F`.
pub fn write_series(path: &Path, columns: [&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    write_csv(path, &columns, pairs.iter().map(|(x, y)| vec![fmt_f64(*x), fmt_f64(*y)]))
}

pub fn write_min_bound(path: &Path, rows: &[MinBoundRow]) -> Result<()> {
    write_csv(
        path,
        &["x", "F_min", "F", "bound", "sigma", "satisfied"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.x),
                fmt_f64(r.f_min),
                fmt_f64(r.f_all),
                fmt_f64(r.bound),
                fmt_f64(r.sigma),
                u8::from(r.satisfied).to_string(),
            ]
        }),
    )
}

/// `beta,p,sim,exact,limit`; a missing simulation value is written as `NaN`.
pub fn write_table1(path: &Path, rows: &[MomentRow]) -> Result<()> {
    write_csv(
        path,
        &["beta", "p", "sim", "exact", "limit"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.beta),
                r.p.to_string(),
                fmt_f64(r.sim.unwrap_or(f64::NAN)),
                fmt_f64(r.exact),
                fmt_f64(r.limit),
            ]
        }),
    )
}

/// `{p, coefficients: [{k, numerator, denominator}], evaluations: [{beta, value}]}`.
///
/// Coefficient `k` multiplies `β^{p-k}`; integers are written as decimal strings so
/// that no precision is lost.
pub fn moments_json(poly: &MomentPolynomial, betas: &[f64]) -> Value {
    json!({
        "p": poly.p(),
        "polynomial": poly.to_string(),
        "coefficients": poly.coefficients().iter().enumerate().map(|(i, c)| json!({
            "k": i + 1,
            "numerator": c.numer().to_string(),
            "denominator": c.denom().to_string(),
        })).collect::<Vec<_>>(),
        "evaluations": betas.iter().map(|&b| json!({"beta": b, "value": poly.evaluate(b)})).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_at_full_precision() {
        let dir = std::env::temp_dir().join(format!("fieldspec-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("series.csv");
        let pairs = vec![(0.1, 1.0 / 3.0), (1e-300, f64::MAX), (2.5, f64::INFINITY), (7.0, -0.0)];
        write_series(&path, ["x", "F"], &pairs).unwrap();
        let (header, rows) = read_csv_f64(&path).unwrap();
        assert_eq!(header, vec!["x", "F"]);
        for (row, (x, y)) in rows.iter().zip(&pairs) {
            assert_eq!(row[0].to_bits(), x.to_bits());
            assert_eq!(row[1].to_bits(), y.to_bits());
        }
        std::fs::write(&path, "x,F\n1.0,2.0\n1.0,oops\n").unwrap();
        match read_csv_f64(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn formatting_has_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(sidecar_path(Path::new("out/pdf.csv")), PathBuf::from("out/pdf.json"));
    }

    #[test]
    fn moments_schema() {
        let poly = crate::moments::moment_polynomial(4).unwrap();
        let v = moments_json(&poly, &[0.5]);
        assert_eq!(v["p"], 4);
        assert_eq!(v["coefficients"][1]["numerator"], "20");
        assert_eq!(v["coefficients"][1]["denominator"], "3");
        assert_eq!(v["coefficients"][1]["k"], 2);
        let expect = 1.0 + 6.0 * 0.5 + 20.0 / 3.0 * 0.25 + 0.125;
        assert!((v["evaluations"][0]["value"].as_f64().unwrap() - expect).abs() < 1e-14);
    }
}
