use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::study::{StudyConfig, StudyKind};
use crate::error::{Error, Result};
use crate::material_data::Sampling;
use crate::truss::PiecewiseLinear;

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value '{value}' for '{key}'"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid boolean '{value}' for '{key}'"),
        }),
    }
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(line, key, s))
        .collect()
}

/// `t:v, t:v, ...`
fn parse_schedule(line: usize, value: &str) -> Result<PiecewiseLinear> {
    let pts = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (t, v) = pair.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("schedule entry '{pair}' is not t:v"),
            })?;
            Ok((
                parse(line, "schedule", t.trim())?,
                parse(line, "schedule", v.trim())?,
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    PiecewiseLinear::new(pts).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

fn parse_sampling(line: usize, value: &str) -> Result<Sampling> {
    match value.to_ascii_lowercase().as_str() {
        "random" => Ok(Sampling::Random),
        "lattice" => Ok(Sampling::Lattice),
        _ => Err(Error::Parse {
            line,
            message: format!("unknown sampling '{value}'"),
        }),
    }
}

fn entries(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

/// Parses `key = value` lines over the defaults of the configured `kind`
/// (visco when absent). `#` starts a comment.
pub fn parse_study_config(text: &str) -> Result<StudyConfig> {
    let entries = entries(text)?;
    let kind = match entries.iter().rev().find(|(_, k, _)| *k == "kind") {
        Some((line, _, v)) => v.parse::<StudyKind>().map_err(|e| Error::Parse {
            line: *line,
            message: e.to_string(),
        })?,
        None => StudyKind::Visco,
    };
    let mut c = StudyConfig::for_kind(kind);
    for (line, key, v) in entries {
        match key {
            "kind" => {}
            "bays" => c.lattice.bays = parse(line, key, v)?,
            "width" => c.lattice.width = parse(line, key, v)?,
            "levels" => c.lattice.levels = parse(line, key, v)?,
            "spacing" => c.lattice.spacing = parse(line, key, v)?,
            "area" => c.lattice.area = parse(line, key, v)?,
            "face_diagonals" => c.lattice.face_diagonals = parse_bool(line, key, v)?,
            "body_diagonals" => c.lattice.body_diagonals = parse_bool(line, key, v)?,
            "mesh_file" => c.mesh_file = Some(PathBuf::from(v)),
            "load_dir" => {
                c.load_dir = v.parse().map_err(|e: Error| Error::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
            "load_per_node" => c.load_per_node = parse(line, key, v)?,
            "sls_e0" => c.sls.e0 = parse(line, key, v)?,
            "sls_e1" => c.sls.e1 = parse(line, key, v)?,
            "sls_tau1" => c.sls.tau1 = parse(line, key, v)?,
            "plastic_e0" => c.plastic.e0 = parse(line, key, v)?,
            "plastic_e1" => c.plastic.e1 = parse(line, key, v)?,
            "plastic_sigma1" => c.plastic.sigma1 = parse(line, key, v)?,
            "plastic_h" => c.plastic.h = parse(line, key, v)?,
            "schedule" => c.schedule = parse_schedule(line, v)?,
            "t_end" => c.t_end = parse(line, key, v)?,
            "dt" => c.dt = parse(line, key, v)?,
            "points" => c.points = parse_list(line, key, v)?,
            "band" => c.band = parse(line, key, v)?,
            "scatter" => c.scatter = parse(line, key, v)?,
            "sampling" => c.sampling = parse_sampling(line, v)?,
            "runs" => c.runs = parse(line, key, v)?,
            "seed" => c.seed = parse(line, key, v)?,
            "metric_modulus" => c.metric_modulus = Some(parse(line, key, v)?),
            "max_fixed_point_iters" => c.solver.max_fixed_point_iters = parse(line, key, v)?,
            "equilibrium_tol" => c.solver.equilibrium_tol = parse(line, key, v)?,
            "abort_on_nonconvergence" => {
                c.solver.abort_on_nonconvergence = parse_bool(line, key, v)?
            }
            "history_matching" => c.history_matching = parse_bool(line, key, v)?,
            "out_dir" => c.out_dir = Some(PathBuf::from(v)),
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    c.validate()?;
    Ok(c)
}

/// Reads a config file; relative paths inside it resolve against its
/// directory.
pub fn read_study_config(path: &Path) -> Result<StudyConfig> {
    let mut c = parse_study_config(&std::fs::read_to_string(path)?)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    for p in [&mut c.mesh_file, &mut c.out_dir].into_iter().flatten() {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
    Ok(c)
}
