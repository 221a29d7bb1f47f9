use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::compare::{ComparisonReport, KineticReport, Outcome, Report};
use super::config::ExperimentConfig;
use super::svg::{heatmap, line_chart, Series};
use super::HarnessError;

pub const FLUCTUATIONS_HEADER: &str = "t,tau,K_x,K_y,F_mc,F_kin,abs_err,stderr";
pub const MODES_HEADER: &str = "t,i,j,k_x,k_y,F,stderr";
pub const KINETIC_HEADER: &str = "tau,m_x,m_y,f";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub threads: usize,
    pub files: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    files.push(path);
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn fluctuations_csv(outcome: &Outcome) -> String {
    let mut out = format!("{FLUCTUATIONS_HEADER}\n");
    if let Some(Report::Comparison(r)) = &outcome.report {
        for row in &r.rows {
            for c in &row.cells {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.t,
                    row.tau,
                    c.kx,
                    c.ky,
                    c.f_mc,
                    opt(c.f_ref),
                    opt(c.abs_err),
                    c.stderr
                );
            }
        }
    }
    out
}

pub fn modes_csv(outcome: &Outcome) -> String {
    let mut out = format!("{MODES_HEADER}\n");
    if let Some(s) = &outcome.series {
        let nf = s.n as f64;
        for (t, (f, se)) in s.save_times.iter().zip(s.mode_f.iter().zip(&s.mode_se)) {
            for (k, &(i, j)) in s.modes.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{t},{i},{j},{},{},{},{}",
                    i as f64 / nf,
                    j as f64 / nf,
                    f[k],
                    se[k]
                );
            }
        }
    }
    out
}

pub fn kinetic_csv(outcome: &Outcome) -> String {
    let mut out = format!("{KINETIC_HEADER}\n");
    if let Some(k) = &outcome.kinetic {
        for st in &k.states {
            for (&(x, y), v) in k.nodes.iter().zip(&st.values) {
                let _ = writeln!(out, "{},{x},{y},{v}", st.tau);
            }
        }
    }
    out
}

fn comparison_svgs(r: &ComparisonReport) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    if r.rows.is_empty() {
        return out;
    }
    let mut series = vec![
        Series { name: "sup_K error", points: r.rows.iter().map(|x| (x.t, x.sup_err)).collect() },
        Series { name: "max stderr", points: r.rows.iter().map(|x| (x.t, x.max_stderr)).collect() },
    ];
    if let Some(d) = &r.kinetic_drift {
        series.push(Series {
            name: "kinetic drift",
            points: r.rows.iter().zip(d).map(|(x, d)| (x.t, *d)).collect(),
        });
    }
    if let Some(e) = &r.resonant_sup_err {
        series.push(Series {
            name: "vs resonant",
            points: r.rows.iter().zip(e).map(|(x, e)| (x.t, *e)).collect(),
        });
    }
    out.push(("error_vs_time.svg", line_chart("Coarse-cell error", "t", "sup over cells", &series, false, false)));
    let last = r.rows.last().expect("nonempty");
    let cells: Vec<(f64, f64, f64)> = last.cells.iter().map(|c| (c.kx, c.ky, c.f_mc)).collect();
    out.push((
        "heatmap_F.svg",
        heatmap(&format!("F_K at t = {}", last.t), &cells, r.h),
    ));
    if last.cells.iter().any(|c| c.f_ref.is_some()) {
        let cells: Vec<(f64, f64, f64)> =
            last.cells.iter().map(|c| (c.kx, c.ky, c.f_ref.unwrap_or(f64::NAN))).collect();
        out.push((
            "heatmap_f.svg",
            heatmap(&format!("reference f_K at tau = {}", last.tau), &cells, r.h),
        ));
    }
    out
}

fn kinetic_svgs(r: &KineticReport) -> Vec<(&'static str, String)> {
    let mut out = vec![(
        "kinetic_sup.svg",
        line_chart(
            "Kinetic solution",
            "tau",
            "sup |f|",
            &[Series { name: "sup |f|", points: r.taus.iter().copied().zip(r.sup_norm.iter().copied()).collect() }],
            false,
            false,
        ),
    )];
    if !r.lambda_sweep.is_empty() {
        let pts: Vec<(f64, f64)> = r.lambda_sweep.clone();
        let c = pts.first().map(|p| p.1 / p.0.sqrt()).unwrap_or(1.0);
        let guide: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, c * p.0.sqrt())).collect();
        out.push((
            "lambda_convergence.svg",
            line_chart(
                "Quasi-resonant convergence",
                "lambda",
                "sup error vs resonant",
                &[Series { name: "measured", points: pts }, Series { name: "slope 1/2", points: guide }],
                true,
                true,
            ),
        ));
    }
    out
}

/// SVG files for a report; none for an empty report.
pub fn render_svgs(report: &Report) -> Vec<(&'static str, String)> {
    match report {
        Report::Comparison(r) => comparison_svgs(r),
        Report::Kinetic(r) => kinetic_svgs(r),
        Report::SampleCheck(_) => Vec::new(),
    }
}

/// Writes CSV tables, `report.json`, `manifest.json` and (optionally) SVG plots.
///
/// Everything except `manifest.json` is a pure function of the outcome.
pub fn emit_outputs(
    outcome: &Outcome,
    config: &ExperimentConfig,
    dir: &Path,
    svg: bool,
    wall_time_s: f64,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    write(dir, "fluctuations.csv", &fluctuations_csv(outcome), &mut files)?;
    write(dir, "modes.csv", &modes_csv(outcome), &mut files)?;
    write(dir, "kinetic.csv", &kinetic_csv(outcome), &mut files)?;
    let report = match &outcome.report {
        Some(r) => serde_json::to_string_pretty(r),
        None => Ok("{}".to_string()),
    }
    .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    write(dir, "report.json", &(report + "\n"), &mut files)?;
    if svg {
        if let Some(r) = &outcome.report {
            for (name, body) in render_svgs(r) {
                write(dir, name, &body, &mut files)?;
            }
        }
    }
    let manifest = Manifest {
        config,
        seed: config.run.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
        threads: rayon::current_num_threads(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    write(dir, "manifest.json", &(body + "\n"), &mut files)?;
    Ok(files)
}

/// Re-renders the SVG plots of a saved `report.json`.
pub fn plot_from_dir(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let report: Report = serde_json::from_str(&text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    let mut files = Vec::new();
    for (name, body) in render_svgs(&report) {
        write(dir, name, &body, &mut files)?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::compare::simulate;

    #[test]
    fn empty_outcome_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&Outcome::default(), &ExperimentConfig::default(), dir.path(), true, 0.0)
            .unwrap();
        assert!(files.iter().all(|f| f.extension().unwrap() != "svg"));
        let csv = fs::read_to_string(dir.path().join("fluctuations.csv")).unwrap();
        assert_eq!(csv, format!("{FLUCTUATIONS_HEADER}\n"));
        assert_eq!(fs::read_to_string(dir.path().join("kinetic.csv")).unwrap(), format!("{KINETIC_HEADER}\n"));
    }

    #[test]
    fn identical_config_gives_identical_bytes() {
        let mut c = ExperimentConfig::default();
        c.grid.n = 4;
        c.coarse.h = 0.5;
        c.run.ensemble = 20;
        c.run.t_max = Some(0.5);
        c.run.save_every = 5;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_outputs(&simulate(&c).unwrap(), &c, a.path(), true, 1.0).unwrap();
        c.run.workers = Some(3);
        let out = simulate(&c).unwrap();
        c.run.workers = None;
        emit_outputs(&out, &c, b.path(), true, 2.0).unwrap();
        for name in ["fluctuations.csv", "modes.csv", "kinetic.csv", "report.json", "error_vs_time.svg", "heatmap_F.svg"] {
            let x = fs::read(a.path().join(name)).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let header = fs::read_to_string(a.path().join("fluctuations.csv")).unwrap();
        assert!(header.starts_with(FLUCTUATIONS_HEADER));
        let replot = tempfile::tempdir().unwrap();
        fs::copy(a.path().join("report.json"), replot.path().join("report.json")).unwrap();
        let files = plot_from_dir(replot.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(
            fs::read(replot.path().join("heatmap_F.svg")).unwrap(),
            fs::read(a.path().join("heatmap_F.svg")).unwrap()
        );
    }
}
