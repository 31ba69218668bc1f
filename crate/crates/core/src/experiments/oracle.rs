use std::f64::consts::PI;

use rand::Rng;

use crate::error::Result;
use crate::material_data::LocalDataSet;
use crate::phase_space::{GlobalMetric, LocalMetric};
use crate::seeding::stream;
use crate::solver::{enumerate_global_min, fixed_point_solve, SolverConfig, Start};
use crate::truss::{assemble, Bar, ConstraintSystem, Dir, NodalLoad, TrussMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub instances: usize,
    pub max_bars: usize,
    pub max_points: usize,
    pub seed: u64,
    /// Slack allowed when comparing objectives.
    pub tolerance: f64,
    pub budget: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            max_bars: 3,
            max_points: 20,
            seed: 7,
            tolerance: 1e-9,
            budget: 1_000_000,
        }
    }
}

/// Planar star of 1 to 3 bars meeting at one free node, with random data.
#[derive(Clone, Debug)]
pub struct OracleInstance {
    pub mesh: TrussMesh,
    pub gm: GlobalMetric,
    pub sys: ConstraintSystem,
    pub sets: Vec<LocalDataSet>,
    pub forces: Vec<f64>,
}

pub fn random_small_instance<R: Rng>(
    rng: &mut R,
    max_bars: usize,
    max_points: usize,
) -> Result<OracleInstance> {
    let m = rng.gen_range(1..=max_bars.clamp(1, 3));
    let base = match m {
        1 => vec![0.0],
        2 => vec![0.0, 0.5 * PI],
        _ => vec![0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
    };
    let mut mesh = TrussMesh {
        nodes: vec![[0.0; 3]],
        ..Default::default()
    };
    mesh.supports.insert((0, Dir::Z));
    if m == 1 {
        mesh.supports.insert((0, Dir::Y));
    }
    for (i, b) in base.iter().enumerate() {
        let theta = b + rng.gen_range(-0.4..0.4);
        let len = rng.gen_range(0.5..2.0);
        mesh.nodes.push([len * theta.cos(), len * theta.sin(), 0.0]);
        let anchor = i + 1;
        for d in [Dir::X, Dir::Y, Dir::Z] {
            mesh.supports.insert((anchor, d));
        }
        mesh.bars.push(Bar {
            a: 0,
            b: anchor,
            area: rng.gen_range(0.5..2.0),
        });
    }
    let modulus = rng.gen_range(50.0..200.0);
    let scale = modulus * 1e-3;
    for d in [Dir::X, Dir::Y] {
        if !mesh.supports.contains(&(0, d)) {
            mesh.loads.push(NodalLoad {
                node: 0,
                dir: d,
                value: rng.gen_range(-2.0..2.0) * scale,
            });
        }
    }
    let gm = GlobalMetric::uniform_scalar(modulus, mesh.element_volumes())?;
    let sys = assemble(&mesh, &gm)?;
    let mut forces = vec![0.0; sys.free_dofs()];
    for l in &mesh.loads {
        if let Some(i) = sys.free_index(l.node, l.dir) {
            forces[i] += l.value;
        }
    }
    let metric = LocalMetric::scalar(modulus)?;
    let sets = (0..m)
        .map(|_| {
            let n = rng.gen_range(1..=max_points.max(1));
            let strains: Vec<f64> = (0..n).map(|_| rng.gen_range(-2e-3..2e-3)).collect();
            let stresses: Vec<f64> = strains
                .iter()
                .map(|e| modulus * e + rng.gen_range(-0.5..0.5) * scale)
                .collect();
            LocalDataSet::from_scalars(strains, stresses, None, &metric)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleInstance {
        mesh,
        gm,
        sys,
        sets,
        forces,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleReport {
    pub instances: usize,
    /// Instances where the oracle objective exceeded the fixed point's.
    pub oracle_above_fixed_point: usize,
    /// Instances where the fixed point started at the oracle's assignment
    /// moved away from it.
    pub oracle_not_stationary: usize,
    /// Instances where the fixed point from the zero state found a strictly
    /// worse local minimum.
    pub fixed_point_suboptimal: usize,
    /// Largest `fixed point - oracle` objective gap.
    pub max_gap: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.instances > 0 && self.oracle_above_fixed_point == 0 && self.oracle_not_stationary == 0
    }
}

/// Compares exhaustive enumeration with the fixed-point iteration on random
/// small instances.
pub fn oracle_check(cfg: &OracleConfig) -> Result<OracleReport> {
    let solver = SolverConfig::default();
    let mut report = OracleReport {
        instances: cfg.instances,
        ..Default::default()
    };
    for i in 0..cfg.instances {
        let mut rng = stream(cfg.seed, &[i as u64]);
        let inst = random_small_instance(&mut rng, cfg.max_bars, cfg.max_points)?;
        let oracle = enumerate_global_min(
            &inst.sys,
            &inst.sets,
            &inst.gm,
            &inst.forces,
            0.0,
            cfg.budget,
        )?;
        let m = inst.sets.len();
        let fp = fixed_point_solve(
            &inst.sys,
            &inst.sets,
            &inst.gm,
            &inst.forces,
            0.0,
            Start::Assignment(vec![0; m]),
            &solver,
        )?;
        let tol = cfg.tolerance * (1.0 + oracle.objective.abs());
        if oracle.objective > fp.objective + tol {
            report.oracle_above_fixed_point += 1;
        }
        if fp.objective > oracle.objective + tol {
            report.fixed_point_suboptimal += 1;
        }
        report.max_gap = report.max_gap.max(fp.objective - oracle.objective);
        let stay = fixed_point_solve(
            &inst.sys,
            &inst.sets,
            &inst.gm,
            &inst.forces,
            0.0,
            Start::Assignment(oracle.assignment.clone()),
            &solver,
        )?;
        if stay.assignment != oracle.assignment || !stay.converged || stay.iterations != 1 {
            log::warn!(
                "instance {i}: oracle assignment {:?} moved to {:?}",
                oracle.assignment,
                stay.assignment
            );
            report.oracle_not_stationary += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_well_posed() {
        let mut rng = stream(1, &[]);
        for _ in 0..50 {
            let inst = random_small_instance(&mut rng, 3, 20).unwrap();
            assert!((1..=3).contains(&inst.sets.len()));
            assert!(inst.sets.iter().all(|s| (1..=20).contains(&s.len())));
            assert_eq!(inst.sys.elements(), inst.sets.len());
        }
    }

    #[test]
    fn small_check_passes() {
        let r = oracle_check(&OracleConfig {
            instances: 30,
            ..Default::default()
        })
        .unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
