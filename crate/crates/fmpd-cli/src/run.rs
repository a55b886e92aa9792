//! `fmpd run`: integrate one experiment and write its trajectory, monitors
//! and manifest.
//!
//! Trajectory columns are `tau, x0.., p0.., sIJ..` with `I < J` indexing the
//! upper components `S^{IJ}`. Monitor columns are `tau`, the constraint
//! scalars that the closure produces, `psi:<field>` for each Killing field,
//! and the closure's diagnostic scalars. A missing value leaves its cell empty.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use fmpd::dynamics::{Diagnostics, Monitors};
use fmpd::integrator::{integrate, Termination, TrajectoryRecord};
use serde_json::json;

use crate::catalog;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub struct RunOutcome {
    pub trajectory: PathBuf,
    pub monitors: PathBuf,
    pub manifest: PathBuf,
    pub termination: Termination,
}

type Channel = (&'static str, fn(&Monitors) -> Option<f64>);

const MONITOR_CHANNELS: &[Channel] = &[
    ("pp", |m| Some(m.pp)),
    ("s2", |m| Some(m.s2)),
    ("tulczyjew", |m| Some(m.tulczyjew)),
    ("pirani", |m| m.pirani),
    ("corinaldesi", |m| m.corinaldesi),
    ("p_dot_xdot", |m| m.p_dot_xdot),
    ("l_value", |m| Some(m.l_value)),
];

const DIAGNOSTIC_NAMES: &[&str] = &["sigma_tilde", "delta", "sigma", "r_s_s", "p_dot_t", "det_observer"];

fn diagnostic(d: &Diagnostics, name: &str) -> Option<f64> {
    d.entries().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v)
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["tau".to_string()];
    h.extend((0..n).map(|i| format!("x{i}")));
    h.extend((0..n).map(|i| format!("p{i}")));
    for i in 0..n {
        for j in i + 1..n {
            h.push(format!("s{i}{j}"));
        }
    }
    h
}

fn write_trajectory(path: &Path, rec: &TrajectoryRecord) -> Result<()> {
    let n = rec.dim();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(trajectory_header(n)).map_err(|e| csv_io(path, e))?;
    for sample in &rec.samples {
        let st = &sample.state;
        let s = st.s.upper_matrix();
        let mut row = vec![st.tau];
        row.extend(st.x.iter());
        row.extend(st.p.iter());
        for i in 0..n {
            for j in i + 1..n {
                row.push(s[(i, j)]);
            }
        }
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Monitor columns actually populated somewhere in `rec`.
pub fn monitor_header(rec: &TrajectoryRecord) -> (Vec<&'static Channel>, Vec<String>, Vec<&'static str>) {
    let channels: Vec<&Channel> = MONITOR_CHANNELS
        .iter()
        .filter(|(_, get)| rec.samples.iter().any(|s| get(&s.monitors).is_some()))
        .collect();
    let killing = rec.killing_names();
    let diags: Vec<&str> = DIAGNOSTIC_NAMES
        .iter()
        .copied()
        .filter(|d| rec.samples.iter().any(|s| diagnostic(&s.monitors.diagnostics, d).is_some()))
        .collect();
    (channels, killing, diags)
}

fn write_monitors(path: &Path, rec: &TrajectoryRecord) -> Result<Vec<String>> {
    let (channels, killing, diags) = monitor_header(rec);
    let mut header = vec!["tau".to_string()];
    header.extend(channels.iter().map(|(k, _)| k.to_string()));
    header.extend(killing.iter().map(|k| format!("psi:{k}")));
    header.extend(diags.iter().map(|d| d.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(&header).map_err(|e| csv_io(path, e))?;
    for sample in &rec.samples {
        let m = &sample.monitors;
        let mut row = vec![cell(Some(sample.state.tau))];
        row.extend(channels.iter().map(|(_, get)| cell(get(m))));
        row.extend(killing.iter().map(|k| {
            cell(sample.conserved.iter().find(|(name, _)| name == k).map(|(_, c)| c.value))
        }));
        row.extend(diags.iter().map(|d| cell(diagnostic(&m.diagnostics, d))));
        w.write_record(&row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(header)
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn termination_json(t: &Termination, last_tau: f64) -> serde_json::Value {
    let status = match t {
        Termination::Completed => "completed",
        Termination::Singularity { .. } => "singularity",
        Termination::Stiffness { .. } => "stiffness",
        Termination::MaxSteps { .. } => "max-steps",
    };
    json!({ "status": status, "detail": t.label(), "last_tau": last_tau })
}

/// Exit status for a finished run; `None` when it completed.
pub fn termination_code(t: &Termination) -> Option<u8> {
    match t {
        Termination::Completed => None,
        Termination::Singularity { .. } => Some(3),
        Termination::Stiffness { .. } | Termination::MaxSteps { .. } => Some(4),
    }
}

pub fn run(config_path: &Path, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let config = ExperimentConfig::load(config_path)?;
    let desc = catalog::resolve(&config.space.name, &config.space.params)?;
    let spec = config.closure_spec()?;
    let initial = config.initial_state(&desc.space, &spec)?;
    let rec = integrate(&desc.space, &spec, &initial, &config.integrator)?;

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir(config_path));
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let stem = &config.output.stem;
    let trajectory = dir.join(format!("{stem}.trajectory.csv"));
    let monitors = dir.join(format!("{stem}.monitors.csv"));
    let manifest = dir.join(format!("{stem}.manifest.json"));

    write_trajectory(&trajectory, &rec)?;
    let monitor_columns = write_monitors(&monitors, &rec)?;

    let file_name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
    let doc = json!({
        "manifest_version": 1,
        "versions": { "fmpd": fmpd::VERSION, "fmpd-cli": env!("CARGO_PKG_VERSION") },
        "config": config,
        "space": { "name": desc.name, "params": desc.params, "dim": desc.dim() },
        "termination": termination_json(&rec.termination, rec.final_state().tau),
        "steps": { "accepted": rec.steps.len(), "rejected": rec.rejected, "evaluations": rec.evaluations },
        "files": {
            "trajectory": file_name(&trajectory),
            "monitors": file_name(&monitors),
        },
        "columns": {
            "trajectory": trajectory_header(rec.dim()),
            "monitors": monitor_columns,
        },
    });
    let mut f = File::create(&manifest).map_err(CliError::io(&manifest))?;
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(f, "{text}").map_err(CliError::io(&manifest))?;

    Ok(RunOutcome {
        trajectory,
        monitors,
        manifest,
        termination: rec.termination,
    })
}
