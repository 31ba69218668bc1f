use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dd_inelastic::experiments::{
    oracle_check, read_study_config, run_convergence_study, run_relaxation, run_single,
    write_convergence_csv, write_probes_csv, write_relaxation_csv, write_runs_csv, write_slope_csv,
    write_trajectory_csv, OracleConfig, RelaxationConfig, StudyConfig, StudyKind,
};
use dd_inelastic::material_data::Sampling;

/// Data-driven viscoelastic and elastic-plastic truss solver
#[derive(Parser, Debug)]
#[command(name = "ddi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single bar held at constant strain, compared with the exact recurrence
    Relaxation(RelaxationArgs),
    /// One viscoelastic data-driven run on the lattice against the reference solid
    Visco(StudyArgs),
    /// One elastic-plastic data-driven run on the lattice against the reference solid
    Plastic(StudyArgs),
    /// Error statistics over data-set sizes and independent runs
    Convergence {
        #[arg(long, value_parser = parse_kind)]
        kind: StudyKind,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Exhaustive enumeration against the fixed-point iteration on small systems
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Key-value study configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh file replacing the generated lattice
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Data-set sizes; single runs use the last one
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<usize>>,
    /// Full strain-window width
    #[arg(long)]
    band: Option<f64>,
    /// Also solve against the recorded two-time histories
    #[arg(long)]
    history_matching: bool,
}

#[derive(Args, Debug)]
struct RelaxationArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Points per data set
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    band: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    strain: Option<f64>,
    /// Uniform random strains instead of an equispaced lattice
    #[arg(long)]
    random: bool,
    #[arg(long)]
    history_matching: bool,
}

fn parse_kind(s: &str) -> std::result::Result<StudyKind, String> {
    s.parse().map_err(|e: dd_inelastic::Error| e.to_string())
}

fn study_config(kind: StudyKind, a: &StudyArgs) -> Result<StudyConfig> {
    let mut c = match &a.config {
        Some(path) => {
            let c =
                read_study_config(path).with_context(|| format!("reading {}", path.display()))?;
            StudyConfig { kind, ..c }
        }
        None => StudyConfig::for_kind(kind),
    };
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(o) = &a.out {
        c.out_dir = Some(o.clone());
    }
    if let Some(m) = &a.mesh {
        c.mesh_file = Some(m.clone());
    }
    if let Some(r) = a.runs {
        c.runs = r;
    }
    if let Some(p) = &a.points {
        c.points = p.clone();
    }
    if let Some(b) = a.band {
        c.band = b;
    }
    c.history_matching |= a.history_matching;
    c.validate()?;
    Ok(c)
}

fn out_dir(dir: Option<&Path>) -> Result<PathBuf> {
    let dir = dir.map_or_else(|| PathBuf::from("out"), Path::to_path_buf);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn relaxation(a: &RelaxationArgs) -> Result<()> {
    let d = RelaxationConfig::default();
    let cfg = RelaxationConfig {
        seed: a.seed.unwrap_or(d.seed),
        n_points: a.points.unwrap_or(d.n_points),
        band: a.band.unwrap_or(d.band),
        steps: a.steps.unwrap_or(d.steps),
        strain: a.strain.unwrap_or(d.strain),
        sampling: if a.random {
            Sampling::Random
        } else {
            Sampling::Lattice
        },
        history_matching: a.history_matching,
        ..d
    };
    let report = run_relaxation(&cfg)?;
    let dir = out_dir(a.out.as_deref())?;
    write_relaxation_csv(create(&dir, "relaxation.csv")?, &report)?;
    println!("initial modulus      {:.6}", report.initial_modulus);
    println!("max relative dev     {:e}", report.max_rel_dev);
    if let Some(h) = &report.history {
        println!("history matching err {:e}", h.relative_error);
    }
    Ok(())
}

fn single(kind: StudyKind, a: &StudyArgs) -> Result<()> {
    let cfg = study_config(kind, a)?;
    let setup = cfg.setup()?;
    let reference = setup.reference(&cfg.law())?;
    let n = *cfg.points.last().expect("validated");
    let run = run_single(&cfg, &setup, &reference, n, 0)?;
    let dir = out_dir(cfg.out_dir.as_deref())?;
    write_trajectory_csv(
        create(&dir, &format!("{kind}_trajectory.csv"))?,
        &run.trajectory,
    )?;
    write_trajectory_csv(create(&dir, &format!("{kind}_reference.csv"))?, &reference)?;
    write_probes_csv(
        create(&dir, &format!("{kind}_probes.csv"))?,
        &setup,
        &run.trajectory,
        &reference,
    )?;
    println!("bars                 {}", setup.sys.elements());
    println!("points per set       {n}");
    println!("{:<20} {:e}", cfg.measure().name(), run.error);
    println!(
        "nonconverged steps   {}",
        run.trajectory.nonconverged_steps().len()
    );
    if let Some(h) = &run.history {
        write_trajectory_csv(
            create(&dir, &format!("{kind}_history_matching.csv"))?,
            &h.trajectory,
        )?;
        println!("history matching err {:e}", h.relative_error);
    }
    Ok(())
}

fn convergence(kind: StudyKind, a: &StudyArgs) -> Result<()> {
    let cfg = study_config(kind, a)?;
    let report = run_convergence_study(&cfg)?;
    let dir = out_dir(cfg.out_dir.as_deref())?;
    write_convergence_csv(
        create(&dir, &format!("convergence_{kind}.csv"))?,
        &report.rows,
    )?;
    write_runs_csv(create(&dir, &format!("runs_{kind}.csv"))?, &report.runs)?;
    write_slope_csv(create(&dir, &format!("slope_{kind}.csv"))?, &report)?;
    println!("{:>8} {:>14} {:>14}", "n_points", "mean", "std");
    for r in &report.rows {
        println!("{:>8} {:>14.6e} {:>14.6e}", r.n_points, r.mean, r.std);
    }
    println!("rate {:.4}", report.rate);
    Ok(())
}

fn oracle(instances: usize, seed: u64) -> Result<bool> {
    let report = oracle_check(&OracleConfig {
        instances,
        seed,
        ..Default::default()
    })?;
    println!("instances                 {}", report.instances);
    println!(
        "oracle above fixed point  {}",
        report.oracle_above_fixed_point
    );
    println!("oracle not stationary     {}", report.oracle_not_stationary);
    println!(
        "fixed point suboptimal    {}",
        report.fixed_point_suboptimal
    );
    println!("max objective gap         {:e}", report.max_gap);
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Relaxation(a) => relaxation(a).map(|_| true),
        Command::Visco(a) => single(StudyKind::Visco, a).map(|_| true),
        Command::Plastic(a) => single(StudyKind::Plastic, a).map(|_| true),
        Command::Convergence { kind, study } => convergence(*kind, study).map(|_| true),
        Command::OracleCheck { instances, seed } => oracle(*instances, *seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("oracle check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
