//! CSV tables of an [`ExperimentReport`].
//!
//! Everything except `table_time.csv` and `fits.csv` is a function of the
//! plan alone, so two runs with the same seed write identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::harness::ExperimentReport;
use super::metrics::mean_sd;

fn cell(values: &[f64], digits: usize) -> String {
    match mean_sd(values) {
        Some((m, s)) => format!("{m:.digits$} ({s:.digits$})"),
        None => "n/a".into(),
    }
}

fn header(report: &ExperimentReport) -> String {
    let mut out = String::from("method");
    for r in &report.plan.recipes {
        write!(out, ",{}", r.label()).unwrap();
    }
    out.push('\n');
    out
}

/// Test ARE (percent) per method and dataset, as `mean (sd)` over repeats.
pub fn format_are_table(report: &ExperimentReport) -> String {
    let mut out = header(report);
    for &m in &report.plan.methods {
        out.push_str(m.label());
        for &r in &report.plan.recipes {
            let values: Vec<f64> = report.runs(r, m).filter_map(|run| run.test_are).collect();
            write!(out, ",{}", cell(&values, 2)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Seconds per fit, as `mean (sd)` over every successful grid cell and repeat.
pub fn format_time_table(report: &ExperimentReport) -> String {
    let mut out = header(report);
    for &m in &report.plan.methods {
        out.push_str(m.label());
        for &r in &report.plan.recipes {
            let values: Vec<f64> = report
                .fits_of(r, m)
                .filter(|f| f.error.is_none())
                .map(|f| f.seconds)
                .collect();
            write!(out, ",{}", cell(&values, 3)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Test ARE per view: `dataset,method,view,mean,sd`.
pub fn format_are_by_view(report: &ExperimentReport) -> String {
    let mut out = String::from("dataset,method,view,mean,sd\n");
    for &r in &report.plan.recipes {
        for &m in &report.plan.methods {
            let views = report.runs(r, m).map(|run| run.test_are_by_view.len()).max().unwrap_or(0);
            for v in 0..views {
                let values: Vec<f64> = report.runs(r, m).filter_map(|run| run.test_are_by_view[v]).collect();
                match mean_sd(&values) {
                    Some((mean, sd)) => writeln!(out, "{},{},{v},{mean:.4},{sd:.4}", r.label(), m.label()).unwrap(),
                    None => writeln!(out, "{},{},{v},n/a,n/a", r.label(), m.label()).unwrap(),
                }
            }
        }
    }
    out
}

/// Eigenvalues of `view` on repeat 0: one column for the truth and one per
/// method of every dataset, ranks down the rows.
pub fn format_spectra(report: &ExperimentReport, view: usize) -> String {
    let mut columns: Vec<(String, Option<&[f64]>)> = Vec::new();
    for (recipe, truth) in &report.truth_spectra {
        columns.push((format!("{}:truth", recipe.label()), truth.get(view).map(Vec::as_slice)));
        for &m in &report.plan.methods {
            let spectrum = report
                .runs(*recipe, m)
                .find(|run| run.repeat == 0)
                .and_then(|run| run.spectra.get(view))
                .map(Vec::as_slice);
            columns.push((format!("{}:{}", recipe.label(), m.label()), spectrum));
        }
    }
    let rows = columns.iter().filter_map(|(_, s)| s.map(<[f64]>::len)).max().unwrap_or(0);
    let mut out = String::from("rank");
    for (name, _) in &columns {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for i in 0..rows {
        write!(out, "{}", i + 1).unwrap();
        for (_, s) in &columns {
            match s.and_then(|s| s.get(i)) {
                Some(v) => write!(out, ",{v:.6e}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Every fit: `dataset,repeat,method,params,tuning_are,seconds,iterations,status`.
pub fn format_fits(report: &ExperimentReport) -> String {
    let mut out = String::from("dataset,repeat,method,params,tuning_are,seconds,iterations,status\n");
    for f in &report.fits {
        let tuning = f.tuning_are.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        let status = f.error.as_deref().map_or_else(|| "ok".to_string(), |e| e.replace([',', '\n'], ";"));
        writeln!(
            out,
            "{},{},{},{},{tuning},{:.4},{},{status}",
            f.recipe.label(),
            f.repeat,
            f.method.label(),
            f.hyper,
            f.seconds,
            f.iterations
        )
        .unwrap();
    }
    out
}

/// Writes every table into `dir` and returns the paths written.
pub fn write_tables(report: &ExperimentReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        ("table_are.csv".to_string(), format_are_table(report)),
        ("table_time.csv".to_string(), format_time_table(report)),
        ("are_by_view.csv".to_string(), format_are_by_view(report)),
        ("fits.csv".to_string(), format_fits(report)),
    ];
    let views = report.truth_spectra.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    for v in 0..views {
        files.push((format!("spectra_{v}.csv"), format_spectra(report, v)));
    }
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            fs::write(&path, text)?;
            Ok(path)
        })
        .collect()
}
