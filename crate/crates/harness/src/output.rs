//! Files written into a result directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use svgd_core::engines::RunRecord;
use svgd_core::Particles;

use crate::error::{HarnessError, Result};

/// Two-sided 95% normal quantile used for every confidence interval.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Other(format!("csv error on {}: {other:?}", path.display())),
    }
}

pub fn run_csv_name(rep: usize) -> String {
    format!("run_{rep:03}.csv")
}

pub fn record_json_name(rep: usize) -> String {
    format!("record_{rep:03}.json")
}

pub fn write_run_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let header: Vec<&str> = RunRecord::csv_header().split(',').collect();
    write_csv(path, &header, record.csv_rows())
}

/// Particles as headerless CSV, one particle per line.
pub fn write_particles(path: &Path, particles: &Particles) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_io(path, e))?;
    for row in particles.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_particles(path: &Path) -> Result<Particles> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Config(format!("cannot read particles from {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| HarnessError::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::Config(format!("{} holds no particles", path.display())));
    }
    Particles::from_rows(&rows).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Mean and 95% half-width over repetitions of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    /// `None` with a single repetition.
    pub ci95: Option<f64>,
}

/// Normal-approximation interval: `mean ± 1.96 · s / √R` with the sample
/// standard deviation `s` over the `R` repetitions.
pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    if values.is_empty() {
        return None;
    }
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let ci95 = (values.len() > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        Z95 * (var / r).sqrt()
    });
    Some(MeanCi { mean, ci95 })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Steps at which metrics are evaluated: multiples of `cadence` and `T`.
pub fn metric_steps(t: usize, cadence: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=t).step_by(cadence).collect();
    if steps.last() != Some(&t) {
        steps.push(t);
    }
    steps
}

/// A named column extracted from each repetition at a given step.
pub type Column<'a, R> = (&'a str, &'a dyn Fn(&R, usize) -> Option<f64>);

/// Writes `step,<name>_mean,<name>_ci95,…` with one row per entry of `steps`.
/// A cell is empty unless every repetition has a value there.
pub fn write_aggregate<R>(path: &Path, steps: &[usize], reps: &[R], columns: &[Column<R>]) -> Result<()> {
    let mut header = vec!["step".to_string()];
    for (name, _) in columns {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_ci95"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = steps.iter().map(|&step| {
        let mut row = vec![step.to_string()];
        for (_, get) in columns {
            let values: Option<Vec<f64>> = reps.iter().map(|r| get(r, step)).collect();
            match values.and_then(|v| mean_ci(&v)) {
                Some(m) => {
                    row.push(m.mean.to_string());
                    row.push(fmt_opt(m.ci95));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        row
    });
    write_csv(path, &header_refs, rows)
}

/// Aggregate of per-step run records at the metric steps.
pub fn write_record_aggregate(path: &Path, records: &[RunRecord], cadence: usize) -> Result<()> {
    let t = records.first().map(|r| r.config.t).unwrap_or(0);
    let steps = metric_steps(t, cadence);
    let norm = |r: &RunRecord, s: usize| Some(r.steps[s].max_particle_norm);
    let ksd = |r: &RunRecord, s: usize| r.steps[s].ksd2;
    let mmd = |r: &RunRecord, s: usize| r.steps[s].mmd2;
    let columns: [Column<RunRecord>; 3] = [("max_particle_norm", &norm), ("ksd2", &ksd), ("mmd2", &mmd)];
    write_aggregate(path, &steps, records, &columns)
}

/// A matplotlib script plotting every `*_mean` column of `csv_name` against
/// its first column, with the `*_ci95` band where present.
pub fn plot_script(csv_name: &str, title: &str, log_x: bool) -> String {
    let xscale = if log_x { "log" } else { "linear" };
    format!(
        r#"#!/usr/bin/env python3
"""Plots {csv_name} from this directory. Usage: python3 plot.py [output.png]"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_name}"), newline="") as f:
    rows = list(csv.DictReader(f))
if not rows:
    sys.exit("no rows in {csv_name}")
x_name = list(rows[0].keys())[0]
names = [c[: -len("_mean")] for c in rows[0] if c.endswith("_mean")]
names = [n for n in names if any(r[n + "_mean"] for r in rows)]
fig, axes = plt.subplots(len(names), 1, figsize=(6, 3 * max(len(names), 1)), squeeze=False)
for ax, name in zip(axes[:, 0], names):
    pts = [(float(r[x_name]), float(r[name + "_mean"]), float(r[name + "_ci95"] or 0.0))
           for r in rows if r[name + "_mean"]]
    xs = [p[0] for p in pts]
    mean = [p[1] for p in pts]
    ax.plot(xs, mean, label=name)
    ax.fill_between(xs, [m - c for _, m, c in pts], [m + c for _, m, c in pts], alpha=0.25)
    ax.set_xscale("{xscale}")
    ax.set_xlabel(x_name)
    ax.set_ylabel(name)
axes[0, 0].set_title("{title}")
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "plot.png")
fig.savefig(out, dpi=120)
print("wrote", out)
"#
    )
}

pub fn write_plot_script(dir: &Path, csv_name: &str, title: &str, log_x: bool) -> Result<PathBuf> {
    let path = dir.join("plot.py");
    fs::write(&path, plot_script(csv_name, title, log_x)).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_uses_sample_deviation() {
        let m = mean_ci(&[1.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.ci95.unwrap() - Z95 * (2f64 / 2.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_ci(&[4.0]).unwrap().ci95, None);
        assert!(mean_ci(&[]).is_none());
    }

    #[test]
    fn metric_steps_cover_the_last_state() {
        assert_eq!(metric_steps(10, 5), vec![0, 5, 10]);
        assert_eq!(metric_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(metric_steps(0, 3), vec![0]);
    }

    #[test]
    fn particles_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = Particles::from_rows(&[vec![0.1, -2.5e-17], vec![3.0, 1.0 / 3.0]]).unwrap();
        write_particles(&path, &p).unwrap();
        assert_eq!(read_particles(&path).unwrap(), p);
    }
}
