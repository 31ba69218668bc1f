use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::material_data::ConditioningState;
use crate::materials::MaterialLaw;
use crate::phase_space::{GlobalMetric, GlobalState, LocalPhasePoint};
use crate::solver::{validate_times, StepResult, Trajectory};
use crate::truss::{evaluate_load, ConstraintSystem, LoadProgram};

const NEWTON_TOL: f64 = 1e-11;
const MAX_NEWTON: usize = 60;
const MAX_HALVINGS: usize = 30;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Evaluation {
    strains: Vec<f64>,
    stresses: Vec<f64>,
    tangents: Vec<f64>,
    q_acc: Vec<f64>,
    residual: Vec<f64>,
}

fn evaluate(
    sys: &ConstraintSystem,
    law: &MaterialLaw,
    cond: &[ConditioningState],
    u: &[f64],
    affine: &[f64],
    f: &[f64],
    dt: Option<f64>,
) -> Result<Evaluation> {
    let bu = sys.strains_from(u);
    let m = sys.elements();
    let mut strains = Vec::with_capacity(m);
    let mut stresses = Vec::with_capacity(m);
    let mut tangents = Vec::with_capacity(m);
    let mut q_acc = Vec::with_capacity(m);
    for e in 0..m {
        let eps = bu[e] + affine[e];
        let r = law.update(eps, &cond[e], dt)?;
        strains.push(eps);
        stresses.push(r.stress);
        tangents.push(r.tangent);
        q_acc.push(r.q_acc);
    }
    let internal = sys.internal_forces(&stresses);
    let residual = f.iter().zip(&internal).map(|(a, b)| a - b).collect();
    Ok(Evaluation {
        strains,
        stresses,
        tangents,
        q_acc,
        residual,
    })
}

/// Trajectory of the reference law itself on the same structure, loads and
/// time grid, solved step by step with a damped Newton iteration on the
/// nodal equilibrium equations. Step 0 uses the instantaneous response.
pub fn reference_march(
    sys: &ConstraintSystem,
    gm: &GlobalMetric,
    law: &MaterialLaw,
    loads: &LoadProgram,
    times: &[f64],
) -> Result<Trajectory> {
    validate_times(times)?;
    let m = sys.elements();
    let n = sys.free_dofs();
    if gm.len() != m || loads.base_forces.len() != n {
        return Err(Error::DimensionMismatch(
            "reference march inputs do not match the system".into(),
        ));
    }
    let mut cond = vec![ConditioningState::default(); m];
    let mut u = vec![0.0; n];
    let mut traj = Trajectory {
        times: times.to_vec(),
        steps: Vec::new(),
        conditioning: Vec::new(),
    };

    for (k, &t) in times.iter().enumerate() {
        let dt = (k > 0).then(|| t - times[k - 1]);
        let f = evaluate_load(loads, t);
        let affine = sys.affine_strain(t);
        // residual stresses from earlier plastic flow set the round-off floor
        let force_scale = cond
            .iter()
            .zip(sys.weights())
            .map(|(c, w)| (c.stress * w).abs())
            .fold(0.0, f64::max);
        let tol = NEWTON_TOL * (1.0 + norm(&f) + force_scale);
        let mut ev = evaluate(sys, law, &cond, &u, &affine, &f, dt)?;
        let mut iterations = 0;
        while norm(&ev.residual) > tol {
            if iterations == MAX_NEWTON {
                return Err(Error::NonConvergent {
                    step: k,
                    time: t,
                    iterations,
                });
            }
            iterations += 1;
            let mut kt = DMatrix::<f64>::zeros(n, n);
            for e in 0..m {
                let row = sys.strain_row(e);
                let c = sys.weights()[e] * ev.tangents[e];
                for &(i, bi) in row {
                    for &(j, bj) in row {
                        kt[(i, j)] += c * bi * bj;
                    }
                }
            }
            let chol = kt.cholesky().ok_or_else(|| {
                Error::Mechanism(format!("tangent stiffness lost definiteness at step {k}"))
            })?;
            let du = chol.solve(&DVector::from_column_slice(&ev.residual));
            let r0 = norm(&ev.residual);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(du.iter())
                    .map(|(a, b)| a + alpha * b)
                    .collect();
                let tev = evaluate(sys, law, &cond, &trial, &affine, &f, dt)?;
                if norm(&tev.residual) < r0 || norm(&tev.residual) <= tol {
                    accepted = Some((trial, tev));
                    break;
                }
                alpha *= 0.5;
            }
            let (trial, tev) = accepted.ok_or(Error::NonConvergent {
                step: k,
                time: t,
                iterations,
            })?;
            u = trial;
            ev = tev;
        }
        let points: Vec<LocalPhasePoint> = ev
            .strains
            .iter()
            .zip(&ev.stresses)
            .map(|(&e, &s)| LocalPhasePoint::scalar(e, s))
            .collect();
        for e in 0..m {
            cond[e] = ConditioningState::new(ev.strains[e], ev.stresses[e], ev.q_acc[e]);
        }
        let z = GlobalState::new(points);
        traj.conditioning.push(cond.clone());
        traj.steps.push(StepResult {
            y: z.clone(),
            z,
            assignment: Vec::new(),
            iterations,
            distance_sq: 0.0,
            objective: 0.0,
            converged: true,
            displacements: u.clone(),
            residual: norm(&ev.residual),
            objective_history: Vec::new(),
        });
    }
    Ok(traj)
}
