//! Reference constitutive updates: the Standard Linear Solid (a spring in
//! parallel with a Maxwell unit) and a rate-independent solid with linear
//! kinematic hardening through the `E0` spring and optional isotropic
//! hardening. They generate material data and serve as convergence oracles.

use crate::error::{Error, Result};
use crate::material_data::ConditioningState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlsParams {
    pub e0: f64,
    pub e1: f64,
    pub tau1: f64,
}

impl SlsParams {
    pub fn new(e0: f64, e1: f64, tau1: f64) -> Result<Self> {
        if !(e0 > 0.0 && e1 > 0.0 && tau1 > 0.0) || ![e0, e1, tau1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "SLS parameters must be positive, got E0={e0}, E1={e1}, tau1={tau1}"
            )));
        }
        Ok(Self { e0, e1, tau1 })
    }

    pub fn instantaneous_modulus(&self) -> f64 {
        self.e0 + self.e1
    }

    /// Slope of the one-step data line, `d sig_{k+1} / d eps_{k+1}`.
    pub fn step_modulus(&self, dt: f64) -> f64 {
        let r = self.tau1 / dt;
        (self.e0 + self.instantaneous_modulus() * r) / (1.0 + r)
    }
}

impl Default for SlsParams {
    fn default() -> Self {
        Self {
            e0: 75_000.0,
            e1: 100_000.0,
            tau1: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticParams {
    pub e0: f64,
    pub e1: f64,
    pub sigma1: f64,
    /// Isotropic hardening slope of the yield stress in the accumulated
    /// plastic strain.
    pub h: f64,
}

impl PlasticParams {
    pub fn new(e0: f64, e1: f64, sigma1: f64, h: f64) -> Result<Self> {
        if !(e0 > 0.0 && e1 > 0.0 && sigma1 > 0.0 && h >= 0.0)
            || ![e0, e1, sigma1, h].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "plastic parameters out of range: E0={e0}, E1={e1}, sigma1={sigma1}, H={h}"
            )));
        }
        Ok(Self { e0, e1, sigma1, h })
    }

    pub fn instantaneous_modulus(&self) -> f64 {
        self.e0 + self.e1
    }

    pub fn yield_stress(&self, q_acc: f64) -> f64 {
        self.sigma1 + self.h * q_acc
    }

    /// Internal strain recovered from a (strain, stress) pair through
    /// `sig = E0 eps + E1 (eps - q)`.
    pub fn internal_strain(&self, strain: f64, stress: f64) -> f64 {
        (self.instantaneous_modulus() * strain - stress) / self.e1
    }
}

impl Default for PlasticParams {
    fn default() -> Self {
        Self {
            e0: 10_000.0,
            e1: 100_000.0,
            sigma1: 500.0,
            h: 0.0,
        }
    }
}

/// Reference law a data set is sampled from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaterialLaw {
    Sls(SlsParams),
    Plastic(PlasticParams),
}

impl MaterialLaw {
    pub fn instantaneous_modulus(&self) -> f64 {
        match self {
            MaterialLaw::Sls(p) => p.instantaneous_modulus(),
            MaterialLaw::Plastic(p) => p.instantaneous_modulus(),
        }
    }

    /// Stress and tangent at `strain` given the conditioning state. `dt` of
    /// `None` is the instantaneous response from the conditioning state.
    pub fn update(
        &self,
        strain: f64,
        cond: &ConditioningState,
        dt: Option<f64>,
    ) -> Result<LawUpdate> {
        match self {
            MaterialLaw::Sls(p) => {
                let (stress, tangent) = match dt {
                    Some(dt) => (sls_stress_update(strain, cond, p, dt)?, p.step_modulus(dt)),
                    None => (
                        sls_instantaneous_stress(strain, cond, p),
                        p.instantaneous_modulus(),
                    ),
                };
                Ok(LawUpdate {
                    stress,
                    tangent,
                    q_acc: cond.q_acc,
                })
            }
            MaterialLaw::Plastic(p) => {
                let q = p.internal_strain(cond.strain, cond.stress);
                let r = plastic_return_map(strain, q, cond.q_acc, p);
                Ok(LawUpdate {
                    stress: r.stress,
                    tangent: r.tangent,
                    q_acc: r.q_acc,
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawUpdate {
    pub stress: f64,
    pub tangent: f64,
    pub q_acc: f64,
}

/// Unique `sig_{k+1}` solving the backward-difference SLS constraint
/// `sig + tau (sig - sig_k)/dt - E0 eps - (E0+E1) tau (eps - eps_k)/dt = 0`.
pub fn sls_stress_update(
    eps_new: f64,
    cond: &ConditioningState,
    p: &SlsParams,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTimeStep(dt));
    }
    let r = p.tau1 / dt;
    Ok(
        (cond.stress * r
            + p.e0 * eps_new
            + p.instantaneous_modulus() * r * (eps_new - cond.strain))
            / (1.0 + r),
    )
}

/// Limit of [`sls_stress_update`] as `dt -> 0`: the Maxwell dashpot is rigid
/// and the solid responds with `E0 + E1`.
pub fn sls_instantaneous_stress(eps_new: f64, cond: &ConditioningState, p: &SlsParams) -> f64 {
    cond.stress + p.instantaneous_modulus() * (eps_new - cond.strain)
}

/// Left-hand side of the discrete SLS constraint; zero on the data line.
pub fn sls_residual(
    eps_new: f64,
    sig_new: f64,
    cond: &ConditioningState,
    p: &SlsParams,
    dt: f64,
) -> f64 {
    let r = p.tau1 / dt;
    sig_new + r * (sig_new - cond.stress)
        - p.e0 * eps_new
        - p.instantaneous_modulus() * r * (eps_new - cond.strain)
}

/// Stress after `k` steps of relaxation at held strain `eps_bar`, starting
/// from the instantaneous response `(E0+E1) eps_bar` at `k = 0`:
/// `sig_k = E0 eps_bar + E1 eps_bar (tau/(dt+tau))^k`.
pub fn sls_relaxation_exact(k: usize, p: &SlsParams, eps_bar: f64, dt: f64) -> f64 {
    let ratio = p.tau1 / (dt + p.tau1);
    p.e0 * eps_bar + p.e1 * eps_bar * ratio.powi(k as i32)
}

/// Result of one elastic-predictor / plastic-corrector update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnMap {
    pub stress: f64,
    /// Internal (plastic) strain.
    pub q: f64,
    /// Accumulated plastic strain.
    pub q_acc: f64,
    /// Plastic multiplier of the step, `|q - q_prev|`.
    pub multiplier: f64,
    /// Driving force `E1 (eps - q)` conjugate to `q`.
    pub driving_force: f64,
    /// Yield function `|p| - sigma_y(q_acc)` at the returned state.
    pub yield_value: f64,
    /// Algorithmic tangent `d sig / d eps`.
    pub tangent: f64,
}

impl ReturnMap {
    pub fn is_plastic(&self) -> bool {
        self.multiplier > 0.0
    }
}

pub fn plastic_return_map(
    eps_new: f64,
    q_prev: f64,
    qacc_prev: f64,
    p: &PlasticParams,
) -> ReturnMap {
    let trial = p.e1 * (eps_new - q_prev);
    let f_trial = trial.abs() - p.yield_stress(qacc_prev);
    let elastic = |yield_value| ReturnMap {
        stress: p.e0 * eps_new + trial,
        q: q_prev,
        q_acc: qacc_prev,
        multiplier: 0.0,
        driving_force: trial,
        yield_value,
        tangent: p.instantaneous_modulus(),
    };
    if f_trial <= 0.0 {
        return elastic(f_trial);
    }
    let gamma = f_trial / (p.e1 + p.h);
    let q = q_prev + gamma * trial.signum();
    let q_acc = qacc_prev + gamma;
    let driving_force = p.e1 * (eps_new - q);
    ReturnMap {
        stress: p.e0 * eps_new + driving_force,
        q,
        q_acc,
        multiplier: gamma,
        driving_force,
        yield_value: driving_force.abs() - p.yield_stress(q_acc),
        tangent: p.e0 + p.e1 * p.h / (p.e1 + p.h),
    }
}
