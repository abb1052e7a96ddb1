//! Plots from a pipeline result directory.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hra_core::dataset::fmt_f64;
use hra_core::pipeline::{iteration_dir, write_atomic};
use hra_core::stats::normal_quantile;
use hra_core::Error;

use crate::commands::EXIT_OK;
use crate::svg::Scatter;

type Table = Vec<csv::StringRecord>;

fn read_table(path: &Path, columns: &[&str]) -> Result<(Table, Vec<usize>)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(Error::from)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header = rdr.headers().map_err(Error::from)?.clone();
    let idx = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::InvalidValue(format!("{} has no column {c:?}", path.display())))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(Error::from)?;
    Ok((rows, idx))
}

fn num(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<f64> {
    let s = rec.get(i).unwrap_or("");
    s.parse()
        .map_err(|_| Error::InvalidValue(format!("{}: {s:?} is not a number", path.display())).into())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(Error::from)?;
    for r in rows {
        w.write_record(r).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::from(e.into_error()))?;
    Ok(write_atomic(path, &bytes)?)
}

fn iterations(dir: &Path) -> Result<Vec<usize>> {
    let path = dir.join("summary.csv");
    let (rows, idx) = read_table(&path, &["iteration"])?;
    rows.iter()
        .map(|r| {
            r.get(idx[0])
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidValue(format!("{}: bad iteration index", path.display())).into())
        })
        .collect()
}

fn check_complete(dir: &Path) -> Result<Vec<usize>> {
    let summary = dir.join("summary.csv");
    if !summary.is_file() {
        return Err(Error::InvalidValue(format!("missing artifacts: {}", summary.display())).into());
    }
    let its = iterations(dir)?;
    let missing: Vec<String> = its
        .iter()
        .flat_map(|i| {
            let d = dir.join(iteration_dir(*i));
            ["metrics.csv", "fit.csv"].map(|f| d.join(f))
        })
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidValue(format!("missing artifacts: {}", missing.join(", "))).into());
    }
    Ok(its)
}

/// Ordered residuals against Blom normal scores, plus the line
/// `mean + sd * q` through them.
pub fn normal_scores(residuals: &[f64]) -> (Vec<(f64, f64)>, (f64, f64)) {
    let n = residuals.len();
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let sd = if n > 1 {
        (sorted.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    let pts = sorted
        .iter()
        .enumerate()
        .map(|(i, r)| (normal_quantile((i as f64 + 1.0 - 0.375) / (nf + 0.25)), *r))
        .collect();
    (pts, (mean, sd))
}

fn render(dir: &Path, name: &str, plot: &Scatter) -> Result<()> {
    Ok(write_atomic(
        &dir.join(format!("{name}.svg")),
        plot.render().as_bytes(),
    )?)
}

pub fn run(dir: &Path) -> Result<u8> {
    let its = check_complete(dir)?;
    let out = dir.join("report");
    fs::create_dir_all(&out)
        .map_err(Error::from)
        .with_context(|| format!("cannot create {}", out.display()))?;
    for i in its {
        let src = dir.join(iteration_dir(i));
        let tag = format!("{i:02}");

        let path = src.join("metrics.csv");
        let (rows, c) = read_table(&path, &["id", "observed_hep", "predicted_hep"])?;
        let mut pts = Vec::new();
        let mut table = Vec::new();
        for r in &rows {
            let (o, p) = (num(r, c[1], &path)?, num(r, c[2], &path)?);
            pts.push((o, p));
            table.push(vec![r.get(c[0]).unwrap_or("").to_string(), fmt_f64(o), fmt_f64(p)]);
        }
        write_csv(
            &out.join(format!("{tag}_hep.csv")),
            &["id", "observed_hep", "predicted_hep"],
            &table,
        )?;
        let hi = pts.iter().map(|p| p.0.max(p.1)).fold(0.0, f64::max);
        render(
            &out,
            &format!("{tag}_hep"),
            &Scatter {
                title: format!("Observed vs predicted HEP, iteration {i}"),
                x_label: "observed HEP".into(),
                y_label: "predicted HEP".into(),
                points: pts,
                lines: vec![((0.0, 0.0), (hi, hi))],
            },
        )?;

        let path = src.join("fit.csv");
        let (rows, c) = read_table(&path, &["run", "response", "fitted_response", "fitted", "residual"])?;
        let mut residuals = Vec::new();
        let mut vs_pred = Vec::new();
        let mut rel = Vec::new();
        let mut resid_table = Vec::new();
        let mut rel_table = Vec::new();
        for r in &rows {
            let run = r.get(c[0]).unwrap_or("").to_string();
            let (resp, fit_resp) = (num(r, c[1], &path)?, num(r, c[2], &path)?);
            let (fitted, resid) = (num(r, c[3], &path)?, num(r, c[4], &path)?);
            residuals.push(resid);
            vs_pred.push((fitted, resid));
            rel.push((resp, fit_resp));
            resid_table.push(vec![run.clone(), fmt_f64(fitted), fmt_f64(resid)]);
            rel_table.push(vec![run, fmt_f64(resp), fmt_f64(fit_resp)]);
        }

        let (scores, (mean, sd)) = normal_scores(&residuals);
        let normal_table: Vec<Vec<String>> = scores
            .iter()
            .enumerate()
            .map(|(k, (q, r))| vec![(k + 1).to_string(), fmt_f64(*r), fmt_f64(*q), fmt_f64(mean + sd * q)])
            .collect();
        write_csv(
            &out.join(format!("{tag}_residual_normal.csv")),
            &["rank", "residual", "normal_score", "reference"],
            &normal_table,
        )?;
        let (qlo, qhi) = (scores.first().map_or(-1.0, |p| p.0), scores.last().map_or(1.0, |p| p.0));
        render(
            &out,
            &format!("{tag}_residual_normal"),
            &Scatter {
                title: format!("Normal plot of residuals, iteration {i}"),
                x_label: "normal score".into(),
                y_label: "residual".into(),
                points: scores,
                lines: vec![((qlo, mean + sd * qlo), (qhi, mean + sd * qhi))],
            },
        )?;

        write_csv(
            &out.join(format!("{tag}_residual_vs_predicted.csv")),
            &["run", "fitted", "residual"],
            &resid_table,
        )?;
        let (flo, fhi) = vs_pred
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        render(
            &out,
            &format!("{tag}_residual_vs_predicted"),
            &Scatter {
                title: format!("Residuals vs predicted, iteration {i}"),
                x_label: "predicted (transformed response)".into(),
                y_label: "residual".into(),
                points: vs_pred,
                lines: if flo.is_finite() {
                    vec![((flo, 0.0), (fhi, 0.0))]
                } else {
                    vec![]
                },
            },
        )?;

        write_csv(
            &out.join(format!("{tag}_reliability.csv")),
            &["run", "observed_reliability", "predicted_reliability"],
            &rel_table,
        )?;
        let (rlo, rhi) = rel.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0.min(p.1)), b.max(p.0.max(p.1)))
        });
        render(
            &out,
            &format!("{tag}_reliability"),
            &Scatter {
                title: format!("Observed vs predicted reliability, iteration {i}"),
                x_label: "observed reliability (%)".into(),
                y_label: "predicted reliability (%)".into(),
                points: rel,
                lines: if rlo.is_finite() {
                    vec![((rlo, rlo), (rhi, rhi))]
                } else {
                    vec![]
                },
            },
        )?;
    }
    println!("report written to {}", out.display());
    Ok(EXIT_OK)
}
