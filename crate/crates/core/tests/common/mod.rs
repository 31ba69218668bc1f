//! Invariant checks shared by the property suite and the acceptance run.
//! Each check draws its instance from a seed and reports the first
//! violation.

#![allow(dead_code)]

use dd_inelastic::experiments::{run_convergence_study, StudyConfig, StudyKind};
use dd_inelastic::material_data::{
    generate_plastic_set, ConditioningState, GeneratorSpec, LocalDataSet,
};
use dd_inelastic::materials::{plastic_return_map, MaterialLaw, PlasticParams};
use dd_inelastic::phase_space::{GlobalMetric, GlobalState, LocalMetric, LocalPhasePoint};
use dd_inelastic::seeding::stream;
use dd_inelastic::solver::{time_march, SolverConfig};
use dd_inelastic::truss::{assemble, generate_lattice_truss, Dir, LatticeSpec, LoadProgram};
use rand::Rng;

pub type Check = std::result::Result<(), String>;

pub const POWER_TOL: f64 = 1e-8;
pub const IDEMPOTENCE_TOL: f64 = 1e-10;
pub const KUHN_TUCKER_TOL: f64 = 1e-9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power identity `sum_e w_e sig_e eps_e = f . u` and idempotence of the
/// constraint projection on a random lattice and random state.
pub fn projection_invariants(seed: u64) -> Check {
    let mut rng = stream(seed, &[1]);
    let spec = LatticeSpec {
        bays: rng.gen_range(1..4),
        width: rng.gen_range(1..3),
        levels: rng.gen_range(1..3),
        face_diagonals: true,
        body_diagonals: rng.gen(),
        ..Default::default()
    };
    let mesh = generate_lattice_truss(&spec).map_err(|e| e.to_string())?;
    let c = rng.gen_range(1e3..2e5);
    let gm = GlobalMetric::uniform_scalar(c, mesh.element_volumes()).map_err(|e| e.to_string())?;
    let sys = assemble(&mesh, &gm).map_err(|e| e.to_string())?;
    let m = sys.elements();
    let strains: Vec<f64> = (0..m).map(|_| rng.gen_range(-2e-3..2e-3)).collect();
    let stresses: Vec<f64> = (0..m).map(|_| rng.gen_range(-200.0..200.0)).collect();
    let f: Vec<f64> = (0..sys.free_dofs())
        .map(|_| rng.gen_range(-50.0..50.0))
        .collect();
    let y = GlobalState::from_scalars(&strains, &stresses);
    let p = sys.project(&y, &f, 0.0).map_err(|e| e.to_string())?;

    let (eps, sig) = (p.z.strains(), p.z.stresses());
    let internal: f64 = (0..m).map(|e| sys.weights()[e] * sig[e] * eps[e]).sum();
    let external = dot(&f, &p.displacements);
    let scale: f64 = (0..m)
        .map(|e| (sys.weights()[e] * sig[e] * eps[e]).abs())
        .sum::<f64>()
        + external.abs();
    if (internal - external).abs() > POWER_TOL * scale {
        return Err(format!(
            "power identity: internal {internal} external {external}"
        ));
    }

    let q = sys.project(&p.z, &f, 0.0).map_err(|e| e.to_string())?;
    let eps_scale = eps.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sig_scale = sig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in p.z.points.iter().zip(&q.z.points) {
        if (a.strain[0] - b.strain[0]).abs() > IDEMPOTENCE_TOL * eps_scale
            || (a.stress[0] - b.stress[0]).abs() > IDEMPOTENCE_TOL * sig_scale
        {
            return Err(format!("projection not idempotent: {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

/// Return-map and generated-data Kuhn-Tucker conditions along a random
/// strain path.
pub fn kuhn_tucker(seed: u64) -> Check {
    let mut rng = stream(seed, &[2]);
    let p = PlasticParams {
        h: rng.gen_range(0.0..2e4),
        ..Default::default()
    };
    let (mut q, mut q_acc) = (0.0, 0.0);
    for _ in 0..60 {
        let eps = rng.gen_range(-0.03..0.03);
        let r = plastic_return_map(eps, q, q_acc, &p);
        let sy = p.yield_stress(r.q_acc);
        if r.yield_value > KUHN_TUCKER_TOL * sy
            || r.multiplier < 0.0
            || (r.multiplier * r.yield_value).abs() > KUHN_TUCKER_TOL * sy
        {
            return Err(format!("return map at eps={eps}: {r:?}"));
        }
        if r.q_acc < q_acc {
            return Err("accumulated plastic strain decreased".into());
        }
        q = r.q;
        q_acc = r.q_acc;
    }
    let stress = (p.e0 + p.e1) * 0.004 - p.e1 * q;
    let cond = ConditioningState::new(0.004, stress, q_acc);
    let g = GeneratorSpec::new(MaterialLaw::Plastic(p), 256, 0.04).map_err(|e| e.to_string())?;
    let metric = LocalMetric::scalar(p.instantaneous_modulus()).map_err(|e| e.to_string())?;
    let set = generate_plastic_set(&cond, rng.gen_range(-0.01..0.01), &g, &metric, &mut rng)
        .map_err(|e| e.to_string())?;
    let q_prev = p.internal_strain(cond.strain, cond.stress);
    for i in 0..set.len() {
        let r = plastic_return_map(set.strain(i)[0], q_prev, q_acc, &p);
        let sy = p.yield_stress(r.q_acc);
        if r.yield_value > KUHN_TUCKER_TOL * sy
            || (r.multiplier * r.yield_value).abs() > KUHN_TUCKER_TOL * sy
        {
            return Err(format!("data point {i} violates the yield condition"));
        }
        if (r.stress - set.stress(i)[0]).abs() > 1e-12 * sy {
            return Err(format!("data point {i} is off the one-step response"));
        }
    }
    Ok(())
}

fn small_march(
    kind: StudyKind,
    seed: u64,
    n_points: usize,
) -> std::result::Result<dd_inelastic::solver::Trajectory, String> {
    let spec = LatticeSpec {
        bays: 2,
        width: 1,
        levels: 1,
        ..Default::default()
    };
    let cfg = StudyConfig::for_kind(kind);
    let law = cfg.law();
    let per_node = match kind {
        StudyKind::Visco => -40.0,
        StudyKind::Plastic => -300.0,
    };
    let mesh = generate_lattice_truss(&spec)
        .map_err(|e| e.to_string())?
        .with_tip_loads(&spec, Dir::Z, per_node);
    let gm = GlobalMetric::uniform_scalar(law.instantaneous_modulus(), mesh.element_volumes())
        .map_err(|e| e.to_string())?;
    let sys = assemble(&mesh, &gm).map_err(|e| e.to_string())?;
    let loads = LoadProgram::from_mesh(&mesh, &sys, cfg.schedule.clone());
    let times: Vec<f64> = (0..=40).map(f64::from).collect();
    let g = GeneratorSpec {
        rng_seed: seed,
        ..GeneratorSpec::new(law, n_points, cfg.band).map_err(|e| e.to_string())?
    };
    time_march(&sys, &gm, &g, &loads, &times, &SolverConfig::default()).map_err(|e| e.to_string())
}

/// Accumulated plastic strain never decreases along a data-driven
/// elastic-plastic march.
pub fn q_acc_monotone(seed: u64) -> Check {
    let traj = small_march(StudyKind::Plastic, seed, 128)?;
    for (k, w) in traj.conditioning.windows(2).enumerate() {
        if let Some(e) = (0..w[0].len()).find(|&e| w[1][e].q_acc < w[0][e].q_acc) {
            return Err(format!("q_acc of element {e} decreased at step {}", k + 1));
        }
    }
    if !traj
        .conditioning
        .last()
        .unwrap()
        .iter()
        .any(|c| c.q_acc > 0.0)
    {
        return Err("no element yielded, the check is vacuous".into());
    }
    Ok(())
}

/// The fixed-point objective never increases within a step.
pub fn fixed_point_monotone(seed: u64) -> Check {
    for kind in [StudyKind::Visco, StudyKind::Plastic] {
        let traj = small_march(kind, seed, 256)?;
        for (k, s) in traj.steps.iter().enumerate() {
            for w in s.objective_history.windows(2) {
                if w[1] > w[0] * (1.0 + 1e-12) + 1e-300 {
                    return Err(format!(
                        "{kind} step {k}: objective rose from {} to {}",
                        w[0], w[1]
                    ));
                }
            }
        }
    }
    Ok(())
}

fn draw<R: Rng>(rng: &mut R, coarse: bool, scale: f64) -> f64 {
    if coarse {
        rng.gen_range(-8i32..8) as f64 * scale
    } else {
        rng.gen_range(-8.0..8.0) * scale
    }
}

/// Indexed nearest-point search returns the same index and value as the
/// linear scan, ties included.
pub fn index_matches_scan(seed: u64) -> Check {
    let mut rng = stream(seed, &[3]);
    let n = rng.gen_range(1..3000);
    let metric = LocalMetric::scalar(rng.gen_range(1.0..2e5)).unwrap();
    // coarse grids produce exact ties
    let coarse = rng.gen_bool(0.5);
    let strains: Vec<f64> = (0..n).map(|_| draw(&mut rng, coarse, 1e-3)).collect();
    let stresses: Vec<f64> = (0..n).map(|_| draw(&mut rng, coarse, 10.0)).collect();
    let costs = rng
        .gen_bool(0.3)
        .then(|| (0..n).map(|_| rng.gen_range(0i32..3) as f64).collect());
    let set =
        LocalDataSet::from_scalars(strains, stresses, costs, &metric).map_err(|e| e.to_string())?;
    for _ in 0..64 {
        let z = LocalPhasePoint::scalar(draw(&mut rng, coarse, 1e-3), draw(&mut rng, coarse, 10.0));
        let (a, b) = (set.nearest(&z).unwrap(), set.nearest_scan(&z).unwrap());
        if a != b {
            return Err(format!("index {a:?} vs scan {b:?} for {z:?}"));
        }
    }
    Ok(())
}

/// Identical seeds give bit-identical trajectories and study tables.
pub fn reproducible(seed: u64) -> Check {
    for kind in [StudyKind::Visco, StudyKind::Plastic] {
        if small_march(kind, seed, 64)? != small_march(kind, seed, 64)? {
            return Err(format!("{kind} march differs between identical runs"));
        }
    }
    let cfg = StudyConfig {
        lattice: LatticeSpec {
            bays: 2,
            width: 1,
            levels: 1,
            ..Default::default()
        },
        points: vec![16, 32],
        runs: 2,
        t_end: 10.0,
        seed,
        ..StudyConfig::plastic()
    };
    let a = run_convergence_study(&cfg).map_err(|e| e.to_string())?;
    let b = run_convergence_study(&cfg).map_err(|e| e.to_string())?;
    if a.rows != b.rows || a.runs != b.runs || a.slope.to_bits() != b.slope.to_bits() {
        return Err("study tables differ between identical runs".into());
    }
    Ok(())
}

pub const INVARIANTS: [(&str, fn(u64) -> Check); 6] = [
    (
        "power identity and projection idempotence",
        projection_invariants,
    ),
    ("Kuhn-Tucker residuals", kuhn_tucker),
    ("q_acc monotonicity", q_acc_monotone),
    ("fixed-point objective monotonicity", fixed_point_monotone),
    ("index-vs-scan search equality", index_matches_scan),
    ("bit-reproducibility", reproducible),
];
