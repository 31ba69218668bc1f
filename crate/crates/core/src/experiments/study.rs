use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use super::{
    bv_error, fit_loglog_slope, reference_march, relative_trajectory_error, weighted_l2_error,
};
use crate::error::{Error, Result};
use crate::material_data::{
    GeneratorSpec, HistoryEntry, HistoryRepository, HistoryWeights, LocalDataSet, Sampling,
};
use crate::materials::{sls_relaxation_exact, MaterialLaw, PlasticParams, SlsParams};
use crate::phase_space::{GlobalMetric, LocalPhasePoint};
use crate::seeding::derive_seed;
use crate::solver::{history_matching_march, march, DataSource, SolverConfig, Trajectory};
use crate::truss::{
    assemble, generate_lattice_truss, read_mesh, ConstraintSystem, Dir, LatticeSpec, LoadProgram,
    PiecewiseLinear, TrussMesh,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Visco,
    Plastic,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Visco => "visco",
            StudyKind::Plastic => "plastic",
        })
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "visco" | "viscoelastic" | "sls" => Ok(StudyKind::Visco),
            "plastic" | "plasticity" => Ok(StudyKind::Plastic),
            other => Err(Error::InvalidInput(format!("unknown study kind '{other}'"))),
        }
    }
}

/// Trajectory error used by a study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorMeasure {
    /// Exponentially weighted l2 error with the given time constant.
    WeightedL2 { tau: f64 },
    /// Total variation of the difference of increments.
    BoundedVariation,
}

impl ErrorMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorMeasure::WeightedL2 { .. } => "weighted_l2",
            ErrorMeasure::BoundedVariation => "bounded_variation",
        }
    }

    pub fn eval(
        &self,
        traj: &Trajectory,
        reference: &Trajectory,
        gm: &GlobalMetric,
    ) -> Result<f64> {
        match *self {
            ErrorMeasure::WeightedL2 { tau } => weighted_l2_error(traj, reference, gm, tau),
            ErrorMeasure::BoundedVariation => bv_error(traj, reference, gm),
        }
    }
}

/// Everything a truss convergence study depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub lattice: LatticeSpec,
    /// Mesh file replacing the generated lattice; its LOADS are scaled by
    /// the schedule.
    pub mesh_file: Option<PathBuf>,
    pub load_dir: Dir,
    /// Force at every tip node of the generated lattice.
    pub load_per_node: f64,
    pub sls: SlsParams,
    pub plastic: PlasticParams,
    pub schedule: PiecewiseLinear,
    pub t_end: f64,
    pub dt: f64,
    /// Data-set sizes swept, strictly increasing.
    pub points: Vec<usize>,
    pub band: f64,
    pub scatter: f64,
    pub sampling: Sampling,
    pub runs: usize,
    pub seed: u64,
    /// Metric modulus; the instantaneous modulus of the law when unset.
    pub metric_modulus: Option<f64>,
    pub solver: SolverConfig,
    /// Also solve against a repository of the recorded two-time histories.
    pub history_matching: bool,
    pub out_dir: Option<PathBuf>,
}

pub const VISCO_LOAD_PER_NODE: f64 = -15.0;
pub const PLASTIC_LOAD_PER_NODE: f64 = -100.0;

impl StudyConfig {
    pub fn visco() -> Self {
        Self {
            kind: StudyKind::Visco,
            lattice: LatticeSpec::default(),
            mesh_file: None,
            load_dir: Dir::Z,
            load_per_node: VISCO_LOAD_PER_NODE,
            sls: SlsParams::default(),
            plastic: PlasticParams::default(),
            schedule: PiecewiseLinear::new(vec![
                (0.0, 0.0),
                (10.0, 1.0),
                (50.0, 1.0),
                (60.0, 0.0),
                (100.0, 0.0),
            ])
            .expect("static schedule"),
            t_end: 100.0,
            dt: 1.0,
            points: vec![64, 256, 1024, 4096],
            band: 0.030,
            scatter: 0.0,
            sampling: Sampling::Random,
            runs: 20,
            seed: 2018,
            metric_modulus: None,
            solver: SolverConfig::default(),
            history_matching: false,
            out_dir: None,
        }
    }

    pub fn plastic() -> Self {
        Self {
            kind: StudyKind::Plastic,
            load_per_node: PLASTIC_LOAD_PER_NODE,
            schedule: PiecewiseLinear::new(vec![
                (0.0, 0.0),
                (20.0, 0.8),
                (60.0, -0.9),
                (100.0, 1.0),
            ])
            .expect("static schedule"),
            band: 0.04,
            ..Self::visco()
        }
    }

    pub fn for_kind(kind: StudyKind) -> Self {
        match kind {
            StudyKind::Visco => Self::visco(),
            StudyKind::Plastic => Self::plastic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty()
            || self.points.windows(2).any(|w| w[1] <= w[0])
            || self.points[0] == 0
        {
            return Err(Error::InvalidInput(format!(
                "data sizes must be positive and strictly increasing, got {:?}",
                self.points
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidInput("at least one run is required".into()));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid time grid: t_end={}, dt={}",
                self.t_end, self.dt
            )));
        }
        if !(self.band >= 0.0) || !(self.scatter >= 0.0) {
            return Err(Error::InvalidInput(
                "band and scatter must be nonnegative".into(),
            ));
        }
        if let Some(c) = self.metric_modulus {
            if !(c > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "metric modulus must be positive, got {c}"
                )));
            }
        }
        match self.kind {
            StudyKind::Visco => {
                SlsParams::new(self.sls.e0, self.sls.e1, self.sls.tau1)?;
            }
            StudyKind::Plastic => {
                PlasticParams::new(
                    self.plastic.e0,
                    self.plastic.e1,
                    self.plastic.sigma1,
                    self.plastic.h,
                )?;
            }
        }
        Ok(())
    }

    pub fn law(&self) -> MaterialLaw {
        match self.kind {
            StudyKind::Visco => MaterialLaw::Sls(self.sls),
            StudyKind::Plastic => MaterialLaw::Plastic(self.plastic),
        }
    }

    pub fn measure(&self) -> ErrorMeasure {
        match self.kind {
            StudyKind::Visco => ErrorMeasure::WeightedL2 { tau: self.sls.tau1 },
            StudyKind::Plastic => ErrorMeasure::BoundedVariation,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_end / self.dt).round() as usize;
        (0..=steps).map(|k| k as f64 * self.dt).collect()
    }

    /// Seed of run `run` at size `n_points`.
    pub fn run_seed(&self, n_points: usize, run: usize) -> u64 {
        derive_seed(self.seed, &[n_points as u64, run as u64])
    }

    pub fn generator(&self, n_points: usize, seed: u64) -> Result<GeneratorSpec> {
        let spec = GeneratorSpec {
            scatter: self.scatter,
            sampling: self.sampling,
            rng_seed: seed,
            ..GeneratorSpec::new(self.law(), n_points, self.band)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn setup(&self) -> Result<StudySetup> {
        self.validate()?;
        let (mesh, probe) = match &self.mesh_file {
            Some(path) => {
                let mesh = read_mesh(path)?;
                let probe = match mesh.loads.first() {
                    Some(l) => Probe {
                        node: l.node,
                        dir: l.dir,
                        bar: 0,
                    },
                    None => Probe {
                        node: 0,
                        dir: self.load_dir,
                        bar: 0,
                    },
                };
                (mesh, probe)
            }
            None => {
                let mesh = generate_lattice_truss(&self.lattice)?.with_tip_loads(
                    &self.lattice,
                    self.load_dir,
                    self.load_per_node,
                );
                (
                    mesh,
                    Probe {
                        node: self.lattice.tip_corner(),
                        dir: self.load_dir,
                        bar: 0,
                    },
                )
            }
        };
        let modulus = self
            .metric_modulus
            .unwrap_or_else(|| self.law().instantaneous_modulus());
        let gm = GlobalMetric::uniform_scalar(modulus, mesh.element_volumes())?;
        let sys = assemble(&mesh, &gm)?;
        let loads = LoadProgram::from_mesh(&mesh, &sys, self.schedule.clone());
        Ok(StudySetup {
            times: self.times(),
            mesh,
            gm,
            sys,
            loads,
            probe,
        })
    }
}

/// Output location for the deflection and axial-force histories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub node: usize,
    pub dir: Dir,
    pub bar: usize,
}

/// Assembled structure, metric, loads and grid of a study.
#[derive(Clone, Debug)]
pub struct StudySetup {
    pub mesh: TrussMesh,
    pub gm: GlobalMetric,
    pub sys: ConstraintSystem,
    pub loads: LoadProgram,
    pub times: Vec<f64>,
    pub probe: Probe,
}

impl StudySetup {
    pub fn reference(&self, law: &MaterialLaw) -> Result<Trajectory> {
        reference_march(&self.sys, &self.gm, law, &self.loads, &self.times)
    }

    /// `(time, probe deflection, probe bar axial force)` along a trajectory.
    pub fn probe_series(&self, traj: &Trajectory) -> Vec<(f64, f64, f64)> {
        let area = self.mesh.bars.get(self.probe.bar).map_or(0.0, |b| b.area);
        traj.times
            .iter()
            .zip(&traj.steps)
            .map(|(&t, s)| {
                let u = self.sys.nodal_displacements(&s.displacements, t);
                let deflection = u
                    .get(self.probe.node)
                    .map_or(0.0, |n| n[self.probe.dir.index()]);
                let force =
                    s.z.points
                        .get(self.probe.bar)
                        .map_or(0.0, |p| area * p.stress[0]);
                (t, deflection, force)
            })
            .collect()
    }
}

/// Data-driven run against the two-time histories it recorded.
#[derive(Clone, Debug)]
pub struct HistoryComparison {
    pub trajectory: Trajectory,
    /// Relative trajectory error against the differential-mode run.
    pub relative_error: f64,
}

#[derive(Clone, Debug)]
pub struct SingleRun {
    pub seed: u64,
    pub trajectory: Trajectory,
    pub error: f64,
    pub history: Option<HistoryComparison>,
}

/// Marches the generated data and records it as a repository: the first
/// step's data become the instantaneous-response set, every later step's
/// data become two-time entries whose prior is the converged state the set
/// was sampled from.
pub fn record_history_repository(
    sys: &ConstraintSystem,
    gm: &GlobalMetric,
    generator: &GeneratorSpec,
    loads: &LoadProgram,
    times: &[f64],
    cfg: &SolverConfig,
    weights: HistoryWeights,
) -> Result<(Trajectory, HistoryRepository)> {
    if times.len() < 2 {
        return Err(Error::InvalidInput(
            "a history repository needs at least two time steps".into(),
        ));
    }
    let mut recorded: Vec<Vec<Vec<LocalPhasePoint>>> = Vec::new();
    let mut observer = |_k: usize, sets: &[LocalDataSet]| -> Result<()> {
        recorded.push(
            sets.iter()
                .map(|s| (0..s.len()).map(|i| s.phase_point(i)).collect())
                .collect(),
        );
        Ok(())
    };
    let traj = march(
        sys,
        gm,
        DataSource::Generated(generator),
        loads,
        times,
        cfg,
        Some(&mut observer),
    )?;
    let mut steps = recorded.into_iter();
    let initial = steps.next().expect("at least one step");
    let mut entries: Vec<Vec<HistoryEntry>> = vec![Vec::new(); sys.elements()];
    for (k, step_sets) in steps.enumerate() {
        for (e, points) in step_sets.into_iter().enumerate() {
            let prior = traj.conditioning[k][e].point();
            entries[e].extend(points.into_iter().map(|current| HistoryEntry {
                prior: prior.clone(),
                current,
            }));
        }
    }
    let repo = HistoryRepository::new(entries, weights)?.with_initial(initial)?;
    Ok((traj, repo))
}

/// One data-driven trajectory of the study at `n_points`, scored against
/// `reference`.
pub fn run_single(
    cfg: &StudyConfig,
    setup: &StudySetup,
    reference: &Trajectory,
    n_points: usize,
    run: usize,
) -> Result<SingleRun> {
    let seed = cfg.run_seed(n_points, run);
    let generator = cfg.generator(n_points, seed)?;
    let (trajectory, history) = if cfg.history_matching {
        let (traj, repo) = record_history_repository(
            &setup.sys,
            &setup.gm,
            &generator,
            &setup.loads,
            &setup.times,
            &cfg.solver,
            HistoryWeights::default(),
        )?;
        let hm = history_matching_march(
            &setup.sys,
            &setup.gm,
            &repo,
            &setup.loads,
            &setup.times,
            &cfg.solver,
        )?;
        let relative_error = relative_trajectory_error(&hm, &traj, &setup.gm)?;
        (
            traj,
            Some(HistoryComparison {
                trajectory: hm,
                relative_error,
            }),
        )
    } else {
        let traj = march(
            &setup.sys,
            &setup.gm,
            DataSource::Generated(&generator),
            &setup.loads,
            &setup.times,
            &cfg.solver,
            None,
        )?;
        (traj, None)
    };
    let error = cfg.measure().eval(&trajectory, reference, &setup.gm)?;
    Ok(SingleRun {
        seed,
        trajectory,
        error,
        history,
    })
}

/// Per-run summary of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub n_points: usize,
    pub run: usize,
    pub seed: u64,
    pub error: f64,
    pub nonconverged_steps: usize,
    pub total_iterations: usize,
}

/// Error statistics over the runs at one data size.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n_points: usize,
    pub mean: f64,
    /// Sample standard deviation over runs.
    pub std: f64,
    pub errors: Vec<f64>,
    pub nonconverged_steps: usize,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub measure: ErrorMeasure,
    pub rows: Vec<ConvergenceRow>,
    pub runs: Vec<RunRecord>,
    /// Least-squares slope of log mean error against log data size.
    pub slope: f64,
    /// `-slope`.
    pub rate: f64,
}

/// Sweeps the data size with independent runs at each size. Runs execute in
/// parallel; results are ordered by (size, run).
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let setup = cfg.setup()?;
    let reference = setup.reference(&cfg.law())?;
    let measure = cfg.measure();
    let jobs: Vec<(usize, usize)> = cfg
        .points
        .iter()
        .flat_map(|&n| (0..cfg.runs).map(move |r| (n, r)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let seed = cfg.run_seed(n, r);
            let wrap = |e: Error| Error::RunFailed {
                run: r,
                n_points: n,
                source: Box::new(e),
            };
            let generator = cfg.generator(n, seed).map_err(wrap)?;
            let traj = march(
                &setup.sys,
                &setup.gm,
                DataSource::Generated(&generator),
                &setup.loads,
                &setup.times,
                &cfg.solver,
                None,
            )
            .map_err(wrap)?;
            let error = measure.eval(&traj, &reference, &setup.gm).map_err(wrap)?;
            log::info!("n_points={n} run={r} error={error:e}");
            Ok(RunRecord {
                n_points: n,
                run: r,
                seed,
                error,
                nonconverged_steps: traj.nonconverged_steps().len(),
                total_iterations: traj.steps.iter().map(|s| s.iterations).sum(),
            })
        })
        .collect::<Result<_>>()?;

    let steps = setup.times.len() as f64;
    let rows: Vec<ConvergenceRow> = cfg
        .points
        .iter()
        .map(|&n| {
            let these: Vec<&RunRecord> = records.iter().filter(|r| r.n_points == n).collect();
            let errors: Vec<f64> = these.iter().map(|r| r.error).collect();
            let k = errors.len() as f64;
            let mean = errors.iter().sum::<f64>() / k;
            let std = if errors.len() > 1 {
                (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            ConvergenceRow {
                n_points: n,
                mean,
                std,
                errors,
                nonconverged_steps: these.iter().map(|r| r.nonconverged_steps).sum(),
                mean_iterations: these.iter().map(|r| r.total_iterations as f64).sum::<f64>()
                    / (k * steps),
            }
        })
        .collect();
    let (slope, rate) = if rows.len() >= 2 {
        let slope = fit_loglog_slope(
            &rows
                .iter()
                .map(|r| (r.n_points as f64, r.mean))
                .collect::<Vec<_>>(),
        )?;
        (slope, -slope)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(StudyReport {
        kind: cfg.kind,
        measure,
        rows,
        runs: records,
        slope,
        rate,
    })
}

/// Single bar held at a constant strain.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationConfig {
    pub sls: SlsParams,
    pub strain: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_points: usize,
    /// Full strain-window width; zero places every sample at the predicted
    /// strain.
    pub band: f64,
    pub sampling: Sampling,
    pub seed: u64,
    pub history_matching: bool,
    pub solver: SolverConfig,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            sls: SlsParams::default(),
            strain: 0.001,
            dt: 1.0,
            steps: 100,
            n_points: 1024,
            band: 0.0,
            sampling: Sampling::Lattice,
            seed: 2018,
            history_matching: false,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RelaxationReport {
    pub times: Vec<f64>,
    pub stress: Vec<f64>,
    pub exact: Vec<f64>,
    /// Largest `|stress - exact| / |exact|` over all steps.
    pub max_rel_dev: f64,
    /// First-step stress over the held strain.
    pub initial_modulus: f64,
    pub history: Option<HistoryComparison>,
}

pub fn run_relaxation(cfg: &RelaxationConfig) -> Result<RelaxationReport> {
    let p = SlsParams::new(cfg.sls.e0, cfg.sls.e1, cfg.sls.tau1)?;
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidTimeStep(cfg.dt));
    }
    if cfg.strain == 0.0 || !cfg.strain.is_finite() {
        return Err(Error::InvalidInput(
            "relaxation needs a finite nonzero strain".into(),
        ));
    }
    let mesh = TrussMesh::relaxation_bar(cfg.strain);
    let gm = GlobalMetric::uniform_scalar(p.instantaneous_modulus(), mesh.element_volumes())?;
    let sys = assemble(&mesh, &gm)?;
    let loads = LoadProgram::zero(sys.free_dofs());
    let times: Vec<f64> = (0..=cfg.steps).map(|k| k as f64 * cfg.dt).collect();
    let generator = GeneratorSpec {
        sampling: cfg.sampling,
        rng_seed: cfg.seed,
        ..GeneratorSpec::new(MaterialLaw::Sls(p), cfg.n_points, cfg.band)?
    };
    let (traj, history) = if cfg.history_matching {
        let (traj, repo) = record_history_repository(
            &sys,
            &gm,
            &generator,
            &loads,
            &times,
            &cfg.solver,
            HistoryWeights::default(),
        )?;
        let hm = history_matching_march(&sys, &gm, &repo, &loads, &times, &cfg.solver)?;
        let relative_error = relative_trajectory_error(&hm, &traj, &gm)?;
        (
            traj,
            Some(HistoryComparison {
                trajectory: hm,
                relative_error,
            }),
        )
    } else {
        (
            march(
                &sys,
                &gm,
                DataSource::Generated(&generator),
                &loads,
                &times,
                &cfg.solver,
                None,
            )?,
            None,
        )
    };
    let stress: Vec<f64> = traj.states().map(|z| z.points[0].stress[0]).collect();
    let exact: Vec<f64> = (0..times.len())
        .map(|k| sls_relaxation_exact(k, &p, cfg.strain, cfg.dt))
        .collect();
    let max_rel_dev = stress
        .iter()
        .zip(&exact)
        .map(|(s, e)| (s - e).abs() / e.abs())
        .fold(0.0, f64::max);
    Ok(RelaxationReport {
        initial_modulus: stress[0] / cfg.strain,
        times,
        stress,
        exact,
        max_rel_dev,
        history,
    })
}
