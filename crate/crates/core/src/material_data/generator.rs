//! On-the-fly sampling of the one-step material data sets of the reference
//! laws.
//!
//! Strains are drawn from a window around a center strain supplied by the
//! caller, stresses follow from the reference update conditioned on the
//! previous state, and an optional strain scatter moves points off the
//! reference graph.

use rand::Rng;

use super::{ConditioningState, LocalDataSet};
use crate::error::{Error, Result};
use crate::materials::{
    plastic_return_map, sls_instantaneous_stress, sls_stress_update, MaterialLaw,
};
use crate::phase_space::LocalMetric;

/// How strains are placed inside the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Independent uniform draws.
    Random,
    /// Equispaced points `c + h (j - n/2)`, `h = width / n`; the center
    /// itself is always a sample.
    Lattice,
}

/// Extent of the strain window around the center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowRule {
    /// Full width equal to the band width.
    Band,
    /// Explicit half width, independent of the band.
    HalfWidth(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub law: MaterialLaw,
    pub n_points: usize,
    /// Full width of the strain band the samples are spread over.
    pub band_width: f64,
    /// Full width of uniform strain noise added after the stress is
    /// evaluated; zero keeps every point on the reference graph.
    pub scatter: f64,
    pub window: WindowRule,
    pub sampling: Sampling,
    pub rng_seed: u64,
}

impl GeneratorSpec {
    pub fn new(law: MaterialLaw, n_points: usize, band_width: f64) -> Result<Self> {
        let spec = Self {
            law,
            n_points,
            band_width,
            scatter: 0.0,
            window: WindowRule::Band,
            sampling: Sampling::Random,
            rng_seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::InvalidInput(
                "data sets need at least one point".into(),
            ));
        }
        if !(self.band_width >= 0.0) || !self.band_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "band width must be nonnegative, got {}",
                self.band_width
            )));
        }
        if !(self.scatter >= 0.0) || !self.scatter.is_finite() {
            return Err(Error::InvalidInput(format!(
                "scatter must be nonnegative, got {}",
                self.scatter
            )));
        }
        if let WindowRule::HalfWidth(h) = self.window {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "window half width must be nonnegative, got {h}"
                )));
            }
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        match self.window {
            WindowRule::Band => 0.5 * self.band_width,
            WindowRule::HalfWidth(h) => h,
        }
    }

    /// Sampled strains around `center`.
    pub fn strain_samples<R: Rng + ?Sized>(&self, center: f64, rng: &mut R) -> Vec<f64> {
        let half = self.half_width();
        let n = self.n_points;
        match self.sampling {
            Sampling::Random => (0..n)
                .map(|_| center + half * (2.0 * rng.gen::<f64>() - 1.0))
                .collect(),
            Sampling::Lattice => {
                let h = 2.0 * half / n as f64;
                (0..n)
                    .map(|j| center + h * (j as f64 - (n / 2) as f64))
                    .collect()
            }
        }
    }

    fn scatter_strains<R: Rng + ?Sized>(&self, strains: &mut [f64], rng: &mut R) {
        if self.scatter > 0.0 {
            for e in strains {
                *e += self.scatter * (rng.gen::<f64>() - 0.5);
            }
        }
    }

    /// Data set of whichever law the generator carries. `dt` of `None` samples
    /// the instantaneous response.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        cond: &ConditioningState,
        center: f64,
        dt: Option<f64>,
        metric: &LocalMetric,
        rng: &mut R,
    ) -> Result<LocalDataSet> {
        match self.law {
            MaterialLaw::Sls(_) => generate_sls_set(cond, center, dt, self, metric, rng),
            MaterialLaw::Plastic(_) => generate_plastic_set(cond, center, self, metric, rng),
        }
    }
}

/// Points on the one-step viscoelastic data line through the conditioning
/// state, optionally scattered in strain.
pub fn generate_sls_set<R: Rng + ?Sized>(
    cond: &ConditioningState,
    center: f64,
    dt: Option<f64>,
    g: &GeneratorSpec,
    metric: &LocalMetric,
    rng: &mut R,
) -> Result<LocalDataSet> {
    let MaterialLaw::Sls(p) = g.law else {
        return Err(Error::InvalidLaw(
            "viscoelastic data requested from a plastic law".into(),
        ));
    };
    g.validate()?;
    let mut strains = g.strain_samples(center, rng);
    let stresses = strains
        .iter()
        .map(|&e| match dt {
            Some(dt) => sls_stress_update(e, cond, &p, dt),
            None => Ok(sls_instantaneous_stress(e, cond, &p)),
        })
        .collect::<Result<Vec<_>>>()?;
    g.scatter_strains(&mut strains, rng);
    LocalDataSet::from_scalars(strains, stresses, None, metric)
}

/// Points on the one-step elastic-plastic response from the conditioning
/// state, with the internal strain recovered from the previous (strain,
/// stress) pair.
pub fn generate_plastic_set<R: Rng + ?Sized>(
    cond: &ConditioningState,
    center: f64,
    g: &GeneratorSpec,
    metric: &LocalMetric,
    rng: &mut R,
) -> Result<LocalDataSet> {
    let MaterialLaw::Plastic(p) = g.law else {
        return Err(Error::InvalidLaw(
            "plastic data requested from a viscoelastic law".into(),
        ));
    };
    g.validate()?;
    let q = p.internal_strain(cond.strain, cond.stress);
    let mut strains = g.strain_samples(center, rng);
    let stresses = strains
        .iter()
        .map(|&e| plastic_return_map(e, q, cond.q_acc, &p).stress)
        .collect();
    g.scatter_strains(&mut strains, rng);
    LocalDataSet::from_scalars(strains, stresses, None, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{sls_residual, PlasticParams, SlsParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sls_spec(n: usize, band: f64) -> GeneratorSpec {
        GeneratorSpec::new(MaterialLaw::Sls(SlsParams::default()), n, band).unwrap()
    }

    fn plastic_spec(n: usize, band: f64) -> GeneratorSpec {
        GeneratorSpec::new(MaterialLaw::Plastic(PlasticParams::default()), n, band).unwrap()
    }

    fn metric() -> LocalMetric {
        LocalMetric::scalar(175_000.0).unwrap()
    }

    #[test]
    fn sls_points_lie_on_the_data_line() {
        let p = SlsParams::default();
        let cond = ConditioningState::new(0.001, 120.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = generate_sls_set(
            &cond,
            0.001,
            Some(1.0),
            &sls_spec(500, 0.01),
            &metric(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(d.len(), 500);
        for i in 0..d.len() {
            let r = sls_residual(d.strain(i)[0], d.stress(i)[0], &cond, &p, 1.0);
            assert!(r.abs() <= 1e-10 * (p.e0 + p.e1), "{r}");
            assert!((d.strain(i)[0] - 0.001).abs() <= 0.005);
        }
    }

    #[test]
    fn sls_virgin_first_step_value() {
        let g = GeneratorSpec {
            sampling: Sampling::Lattice,
            ..sls_spec(1, 0.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = generate_sls_set(
            &ConditioningState::default(),
            0.001,
            Some(1.0),
            &g,
            &metric(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(d.strain(0)[0], 0.001);
        assert!((d.stress(0)[0] - 950.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn instantaneous_sets_use_the_instantaneous_modulus() {
        let g = GeneratorSpec {
            sampling: Sampling::Lattice,
            ..sls_spec(8, 0.002)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = generate_sls_set(
            &ConditioningState::default(),
            0.001,
            None,
            &g,
            &metric(),
            &mut rng,
        )
        .unwrap();
        for i in 0..d.len() {
            assert!((d.stress(i)[0] - 175_000.0 * d.strain(i)[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cond = ConditioningState::new(0.002, 200.0, 0.0);
        let g = GeneratorSpec {
            scatter: 1e-4,
            ..sls_spec(300, 0.03)
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = generate_sls_set(&cond, 0.002, Some(1.0), &g, &metric(), &mut rng).unwrap();
            (0..d.len())
                .map(|i| (d.strain(i)[0], d.stress(i)[0]))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
        let gp = plastic_spec(100, 0.04);
        let runp = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = generate_plastic_set(&cond, 0.002, &gp, &metric(), &mut rng).unwrap();
            (0..d.len())
                .map(|i| (d.strain(i)[0], d.stress(i)[0]))
                .collect::<Vec<_>>()
        };
        assert_eq!(runp(9), runp(9));
    }

    #[test]
    fn lattice_sampling_contains_the_center() {
        let g = GeneratorSpec {
            sampling: Sampling::Lattice,
            ..sls_spec(1024, 0.004)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = g.strain_samples(0.0015, &mut rng);
        assert_eq!(s[512], 0.0015);
        assert!((s[1] - s[0] - 0.004 / 1024.0).abs() < 1e-18);
        assert!(s.iter().all(|e| (e - 0.0015).abs() <= 0.002));
    }

    #[test]
    fn scatter_moves_points_off_the_line() {
        let p = SlsParams::default();
        let cond = ConditioningState::default();
        let g = GeneratorSpec {
            scatter: 0.01,
            ..sls_spec(200, 0.01)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = generate_sls_set(&cond, 0.0, Some(1.0), &g, &metric(), &mut rng).unwrap();
        let off = (0..d.len())
            .filter(|&i| sls_residual(d.strain(i)[0], d.stress(i)[0], &cond, &p, 1.0).abs() > 1e-6)
            .count();
        assert!(off > 150);
    }

    #[test]
    fn elastic_plastic_points() {
        let p = PlasticParams::default();
        let cond = ConditioningState::new(0.001, 110.0, 0.0);
        let g = GeneratorSpec {
            sampling: Sampling::Lattice,
            ..plastic_spec(101, 0.004)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = generate_plastic_set(&cond, 0.001, &g, &metric(), &mut rng).unwrap();
        for i in 0..d.len() {
            // trial forces stay below 500 inside this window
            let expect = cond.stress + p.instantaneous_modulus() * (d.strain(i)[0] - cond.strain);
            assert!((d.stress(i)[0] - expect).abs() < 1e-9);
        }
        let g = GeneratorSpec {
            sampling: Sampling::Lattice,
            ..plastic_spec(1, 0.0)
        };
        let d = generate_plastic_set(&ConditioningState::default(), 0.01, &g, &metric(), &mut rng)
            .unwrap();
        assert!((d.stress(0)[0] - 600.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_plastic_points_satisfy_kuhn_tucker() {
        let p = PlasticParams::default();
        let cond = ConditioningState::new(0.012, 620.0, 0.004);
        let q = p.internal_strain(cond.strain, cond.stress);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = generate_plastic_set(&cond, 0.012, &plastic_spec(400, 0.04), &metric(), &mut rng)
            .unwrap();
        for i in 0..d.len() {
            let r = plastic_return_map(d.strain(i)[0], q, cond.q_acc, &p);
            assert!(
                r.yield_value <= 1e-9
                    && r.multiplier >= 0.0
                    && (r.yield_value * r.multiplier).abs() <= 1e-9
            );
            assert_eq!(r.stress, d.stress(i)[0]);
        }
    }

    #[test]
    fn wrong_law_and_bad_specs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cond = ConditioningState::default();
        assert!(matches!(
            generate_sls_set(
                &cond,
                0.0,
                Some(1.0),
                &plastic_spec(4, 0.1),
                &metric(),
                &mut rng
            ),
            Err(Error::InvalidLaw(_))
        ));
        assert!(matches!(
            generate_plastic_set(&cond, 0.0, &sls_spec(4, 0.1), &metric(), &mut rng),
            Err(Error::InvalidLaw(_))
        ));
        assert!(GeneratorSpec::new(MaterialLaw::Sls(SlsParams::default()), 0, 0.1).is_err());
        assert!(GeneratorSpec::new(MaterialLaw::Sls(SlsParams::default()), 4, -0.1).is_err());
        assert!(generate_sls_set(
            &cond,
            0.0,
            Some(0.0),
            &sls_spec(4, 0.1),
            &metric(),
            &mut rng
        )
        .is_err());
    }
}
