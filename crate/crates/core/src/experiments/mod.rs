//! Reproduction harness: trajectory error measures, reference-law
//! trajectories, relaxation and convergence studies, the small-instance
//! oracle check, CSV outputs and the key-value study configuration.

mod config;
mod oracle;
mod output;
mod reference;
mod study;

pub use config::{parse_study_config, read_study_config};
pub use oracle::{oracle_check, random_small_instance, OracleConfig, OracleInstance, OracleReport};
pub use output::{
    write_convergence_csv, write_probes_csv, write_relaxation_csv, write_runs_csv, write_slope_csv,
    write_trajectory_csv,
};
pub use reference::reference_march;
pub use study::{
    record_history_repository, run_convergence_study, run_relaxation, run_single, ConvergenceRow,
    ErrorMeasure, Probe, RelaxationConfig, RelaxationReport, RunRecord, SingleRun, StudyConfig,
    StudyKind, StudyReport, StudySetup,
};

use crate::error::{Error, Result};
use crate::phase_space::{global_distance_sq, global_norm_sq, GlobalMetric};
use crate::solver::Trajectory;

fn check_grids(a: &Trajectory, b: &Trajectory, gm: &GlobalMetric) -> Result<()> {
    if a.times != b.times {
        return Err(Error::GridMismatch(format!(
            "trajectories have {} and {} steps on different grids",
            a.len(),
            b.len()
        )));
    }
    if a.len() != a.steps.len() || b.len() != b.steps.len() {
        return Err(Error::GridMismatch(
            "trajectory has fewer states than times".into(),
        ));
    }
    if a.states().chain(b.states()).any(|z| z.len() != gm.len()) {
        return Err(Error::DimensionMismatch(
            "trajectory state does not match the metric".into(),
        ));
    }
    Ok(())
}

/// `sqrt(sum_k |z_{k+1} - r_{k+1}|^2 exp(-t_{k+1}/tau) (t_{k+1} - t_k))`.
pub fn weighted_l2_error(
    traj: &Trajectory,
    reference: &Trajectory,
    gm: &GlobalMetric,
    tau: f64,
) -> Result<f64> {
    check_grids(traj, reference, gm)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!(
            "relaxation time must be positive, got {tau}"
        )));
    }
    let t = &traj.times;
    let mut sum = 0.0;
    for k in 1..t.len() {
        let d = global_distance_sq(traj.state(k), reference.state(k), gm)?;
        sum += d * (-t[k] / tau).exp() * (t[k] - t[k - 1]);
    }
    Ok(sum.sqrt())
}

/// Total variation of the difference: `sum_k |(z_{k+1} - z_k) - (r_{k+1} - r_k)|`.
pub fn bv_error(traj: &Trajectory, reference: &Trajectory, gm: &GlobalMetric) -> Result<f64> {
    check_grids(traj, reference, gm)?;
    let mut sum = 0.0;
    for k in 1..traj.len() {
        let dz = traj.state(k).sub(traj.state(k - 1))?;
        let dr = reference.state(k).sub(reference.state(k - 1))?;
        sum += global_norm_sq(&dz.sub(&dr)?, gm)?.sqrt();
    }
    Ok(sum)
}

/// `sqrt(sum_k |z_k - r_k|^2 / sum_k |r_k|^2)` over every state.
pub fn relative_trajectory_error(
    traj: &Trajectory,
    reference: &Trajectory,
    gm: &GlobalMetric,
) -> Result<f64> {
    check_grids(traj, reference, gm)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (z, r) in traj.states().zip(reference.states()) {
        num += global_distance_sq(z, r, gm)?;
        den += global_norm_sq(r, gm)?;
    }
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// Least-squares slope of `log(error)` against `log(n)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "a slope needs at least two points".into(),
        ));
    }
    if let Some(&(n, e)) = points.iter().find(|(n, e)| !(*n > 0.0) || !(*e > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "log-log fit needs positive values, got ({n}, {e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "log-log fit needs at least two distinct sizes".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Convergence rate `-slope` of the mean errors of `rows`.
pub fn convergence_rate(rows: &[ConvergenceRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n_points as f64, r.mean)).collect();
    Ok(-fit_loglog_slope(&pts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::GlobalState;
    use proptest::prelude::*;

    fn traj(times: &[f64], strains: &[f64]) -> Trajectory {
        let states = strains
            .iter()
            .map(|&e| GlobalState::from_scalars(&[e], &[0.0]))
            .collect();
        Trajectory::from_states(times.to_vec(), states).unwrap()
    }

    fn unit() -> GlobalMetric {
        GlobalMetric::uniform_scalar(1.0, vec![1.0]).unwrap()
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let a = traj(&[0.0, 1.0, 2.0], &[0.0, 0.5, 0.2]);
        assert_eq!(weighted_l2_error(&a, &a, &unit(), 5.0).unwrap(), 0.0);
        assert_eq!(bv_error(&a, &a, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn weighted_error_single_step() {
        let tau = 1.0;
        let a = traj(&[0.0, 1.0], &[0.0, 1.0]);
        let b = traj(&[0.0, 1.0], &[0.0, 0.0]);
        let e = weighted_l2_error(&a, &b, &unit(), tau).unwrap();
        assert!((e - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn weighted_error_is_homogeneous() {
        let times = [0.0, 1.0, 2.5, 3.0];
        let r = traj(&times, &[0.0, 0.1, 0.2, 0.3]);
        let a = traj(&times, &[0.0, 0.2, 0.1, 0.5]);
        let a3 = traj(
            &times,
            &[0.0, 0.1 + 3.0 * 0.1, 0.2 - 3.0 * 0.1, 0.3 + 3.0 * 0.2],
        );
        let e = weighted_l2_error(&a, &r, &unit(), 2.0).unwrap();
        let e3 = weighted_l2_error(&a3, &r, &unit(), 2.0).unwrap();
        assert!((e3 - 3.0 * e).abs() < 1e-12);
    }

    #[test]
    fn bv_error_counts_up_and_down_jumps() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let r = traj(&times, &[0.0; 4]);
        let a = traj(&times, &[0.0, 1.0, 1.0, 0.0]);
        assert!((bv_error(&a, &r, &unit()).unwrap() - 2.0).abs() < 1e-15);
        let b = traj(&times, &[0.0, 1.0, 1.0, 1.0]);
        assert!((bv_error(&b, &r, &unit()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bv_error_ignores_time_parametrization() {
        let r1 = traj(&[0.0, 1.0, 2.0], &[0.0, 0.3, 0.1]);
        let a1 = traj(&[0.0, 1.0, 2.0], &[0.0, 0.5, 0.0]);
        let r2 = traj(&[0.0, 0.1, 7.0], &[0.0, 0.3, 0.1]);
        let a2 = traj(&[0.0, 0.1, 7.0], &[0.0, 0.5, 0.0]);
        assert_eq!(
            bv_error(&a1, &r1, &unit()).unwrap(),
            bv_error(&a2, &r2, &unit()).unwrap()
        );
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = traj(&[0.0, 1.0], &[0.0, 1.0]);
        let b = traj(&[0.0, 2.0], &[0.0, 1.0]);
        assert!(matches!(
            bv_error(&a, &b, &unit()),
            Err(Error::GridMismatch(_))
        ));
        assert!(weighted_l2_error(&a, &b, &unit(), 1.0).is_err());
    }

    #[test]
    fn slope_fits() {
        assert!((fit_loglog_slope(&[(10.0, 1e-2), (100.0, 1e-4)]).unwrap() + 2.0).abs() < 1e-12);
        assert!((fit_loglog_slope(&[(10.0, 1e-2), (100.0, 1e-3)]).unwrap() + 1.0).abs() < 1e-12);
        assert!(
            fit_loglog_slope(&[(10.0, 0.3), (100.0, 0.3), (1000.0, 0.3)])
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(fit_loglog_slope(&[(10.0, 0.0), (100.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(10.0, 1.0)]).is_err());
    }

    #[test]
    fn rate_is_negated_slope() {
        let rows = [(10, 1e-2), (100, 1e-4)]
            .iter()
            .map(|&(n, m)| ConvergenceRow {
                n_points: n,
                mean: m,
                std: 0.0,
                errors: vec![m],
                nonconverged_steps: 0,
                mean_iterations: 1.0,
            })
            .collect::<Vec<_>>();
        assert!((convergence_rate(&rows).unwrap() - 2.0).abs() < 1e-12);
    }

    fn arb_traj() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)
    }

    fn build(v: &[(f64, f64)]) -> Trajectory {
        let times = vec![0.0, 0.5, 1.7, 2.0];
        let states = v
            .iter()
            .map(|&(e, s)| GlobalState::from_scalars(&[e, -e], &[s, 2.0 * s]))
            .collect();
        Trajectory::from_states(times, states).unwrap()
    }

    proptest! {
        #[test]
        fn error_measures_are_metrics(a in arb_traj(), b in arb_traj(), c in arb_traj()) {
            let gm = GlobalMetric::uniform_scalar(1.7, vec![1.0, 0.4]).unwrap();
            let (a, b, c) = (build(&a), build(&b), build(&c));
            type Measure = fn(&Trajectory, &Trajectory, &GlobalMetric) -> Result<f64>;
            let measures: [Measure; 2] = [|x, y, g| weighted_l2_error(x, y, g, 1.3), bv_error];
            for d in measures {
                let ab = d(&a, &b, &gm).unwrap();
                let bc = d(&b, &c, &gm).unwrap();
                let ac = d(&a, &c, &gm).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(d(&a, &a, &gm).unwrap(), 0.0);
                prop_assert!((ab - d(&b, &a, &gm).unwrap()).abs() <= 1e-12 * (1.0 + ab));
                prop_assert!(ac <= ab + bc + 1e-12);
            }
        }
    }
}
