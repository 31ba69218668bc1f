use std::io::Write;

use csv::{Terminator, WriterBuilder};

use super::study::{ConvergenceRow, RelaxationReport, RunRecord, StudyReport, StudySetup};
use crate::error::{Error, Result};
use crate::solver::Trajectory;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<W> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn g(x: f64) -> String {
    format!("{x:e}")
}

/// One row per (time, element). Reference trajectories leave `assignment`
/// empty.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<W> {
    let mut w = writer(out);
    w.write_record([
        "time",
        "element",
        "strain",
        "stress",
        "assignment",
        "iterations",
        "distance_sq",
    ])
    .map_err(csv_err)?;
    for (t, s) in traj.times.iter().zip(&traj.steps) {
        for (e, p) in s.z.points.iter().enumerate() {
            let a = s.assignment.get(e).map_or(String::new(), |a| a.to_string());
            w.write_record([
                g(*t),
                e.to_string(),
                g(p.strain[0]),
                g(p.stress[0]),
                a,
                s.iterations.to_string(),
                g(s.distance_sq),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn write_convergence_csv<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<W> {
    let mut w = writer(out);
    w.write_record([
        "n_points",
        "mean_error",
        "std_error",
        "runs",
        "nonconverged_steps",
        "mean_iterations",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n_points.to_string(),
            g(r.mean),
            g(r.std),
            r.errors.len().to_string(),
            r.nonconverged_steps.to_string(),
            g(r.mean_iterations),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_runs_csv<W: Write>(out: W, runs: &[RunRecord]) -> Result<W> {
    let mut w = writer(out);
    w.write_record([
        "n_points",
        "run",
        "seed",
        "error",
        "nonconverged_steps",
        "total_iterations",
    ])
    .map_err(csv_err)?;
    for r in runs {
        w.write_record([
            r.n_points.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            g(r.error),
            r.nonconverged_steps.to_string(),
            r.total_iterations.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_slope_csv<W: Write>(out: W, report: &StudyReport) -> Result<W> {
    let mut w = writer(out);
    w.write_record(["kind", "measure", "slope", "rate", "n_min", "n_max"])
        .map_err(csv_err)?;
    let n_min = report.rows.first().map_or(0, |r| r.n_points);
    let n_max = report.rows.last().map_or(0, |r| r.n_points);
    w.write_record([
        report.kind.to_string(),
        report.measure.name().to_string(),
        g(report.slope),
        g(report.rate),
        n_min.to_string(),
        n_max.to_string(),
    ])
    .map_err(csv_err)?;
    finish(w)
}

/// Probe deflection and bar force of a data-driven run next to the
/// reference run.
pub fn write_probes_csv<W: Write>(
    out: W,
    setup: &StudySetup,
    traj: &Trajectory,
    reference: &Trajectory,
) -> Result<W> {
    let mut w = writer(out);
    w.write_record([
        "time",
        "tip_deflection",
        "tip_deflection_ref",
        "bar_force",
        "bar_force_ref",
    ])
    .map_err(csv_err)?;
    for (a, b) in setup
        .probe_series(traj)
        .into_iter()
        .zip(setup.probe_series(reference))
    {
        w.write_record([g(a.0), g(a.1), g(b.1), g(a.2), g(b.2)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_relaxation_csv<W: Write>(out: W, report: &RelaxationReport) -> Result<W> {
    let mut w = writer(out);
    let hm = report.history.as_ref();
    let mut header = vec!["step", "time", "stress", "exact", "relative_deviation"];
    if hm.is_some() {
        header.push("stress_history_matching");
    }
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..report.times.len() {
        let (s, e) = (report.stress[k], report.exact[k]);
        let mut row = vec![
            k.to_string(),
            g(report.times[k]),
            g(s),
            g(e),
            g((s - e).abs() / e.abs()),
        ];
        if let Some(h) = hm {
            row.push(g(h.trajectory.state(k).points[0].stress[0]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}
