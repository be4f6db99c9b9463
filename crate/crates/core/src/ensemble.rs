//! Localized Poisson gas of filaments: every filament with `ℓ > η` starting in
//! `B(0, R)`, and the superposed velocity field.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::brownian::{sample_path, StepPolicy};
use crate::error::{Error, Result};
use crate::filament::{velocity_at_many, FilamentParams};
use crate::gamma::{LengthSampling, MultifractalMeasure};
use crate::kernel::{MollifierSpec, Vec3};

/// Means below this are drawn by inversion, above by a normal approximation.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Default cap on the expected number of filaments per realization.
pub const DEFAULT_MAX_EXPECTED_COUNT: f64 = 1e6;

pub fn ball_volume(radius: f64) -> f64 {
    4.0 * PI / 3.0 * radius * radius * radius
}

/// Uniform point in `B(center, radius)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(center: &Vec3, radius: f64, rng: &mut R) -> Vec3 {
    loop {
        let d = Vec3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = d.norm();
        if n > 0.0 {
            let r = radius * rng.random::<f64>().cbrt();
            return center + d * (r / n);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    Inversion,
    NormalApproximation,
}

impl PoissonMethod {
    pub fn for_mean(mean: f64) -> Self {
        if mean < POISSON_INVERSION_LIMIT {
            PoissonMethod::Inversion
        } else {
            PoissonMethod::NormalApproximation
        }
    }
}

/// Poisson draw: sequential inversion for small means, continuity-corrected
/// normal approximation above [`POISSON_INVERSION_LIMIT`].
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    match PoissonMethod::for_mean(mean) {
        PoissonMethod::Inversion => {
            let u: f64 = rng.random();
            let mut k = 0u64;
            let mut p = (-mean).exp();
            let mut cdf = p;
            while u > cdf {
                k += 1;
                p *= mean / k as f64;
                cdf += p;
                if p == 0.0 && cdf < u {
                    break;
                }
            }
            k
        }
        PoissonMethod::NormalApproximation => {
            let z: f64 = rng.sample(StandardNormal);
            (mean + mean.sqrt() * z + 0.5).floor().max(0.0) as u64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationWindow {
    pub eta: f64,
    pub radius: f64,
}

impl LocalizationWindow {
    pub fn new(eta: f64, radius: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "window needs 0 < η < 1 and R > 0, got η = {eta}, R = {radius}"
            )));
        }
        Ok(LocalizationWindow { eta, radius })
    }

    /// Default radius `|x|_max + 1 + 4√T_max + ε_max`.
    pub fn auto_radius(gamma: &MultifractalMeasure, max_probe_norm: f64, max_eps: f64) -> f64 {
        max_probe_norm + 1.0 + 4.0 * gamma.max_length().sqrt() + max_eps
    }

    /// Distance a probe must keep from the boundary, `ℓ_max + 4√T_max`.
    pub fn required_margin(gamma: &MultifractalMeasure) -> f64 {
        gamma.l_max() + 4.0 * gamma.max_length().sqrt()
    }

    pub fn check_probe(&self, gamma: &MultifractalMeasure, x: &Vec3) -> Result<()> {
        let margin = Self::required_margin(gamma);
        if x.norm() + margin > self.radius {
            return Err(Error::MarginViolation(format!(
                "probe at |x| = {:.4} needs R >= {:.4}, window has R = {}",
                x.norm(),
                x.norm() + margin,
                self.radius
            )));
        }
        Ok(())
    }
}

/// `ν(A_{η,R}) = Z(η) · |B(0,R)|`.
pub fn intensity_mass(gamma: &MultifractalMeasure, window: &LocalizationWindow) -> Result<f64> {
    Ok(gamma.total_mass(window.eta)? * ball_volume(window.radius))
}

/// One draw of the localized filament gas.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRealization {
    pub window: LocalizationWindow,
    pub filaments: Vec<FilamentParams>,
    pub expected_count: f64,
    pub method: PoissonMethod,
    pub stream_index: u64,
}

/// A filament drawn from `ν` restricted to the window: start uniform in the
/// ball, parameters from the truncated `γ`.
pub fn sample_filament<R: Rng + ?Sized>(
    gamma: &MultifractalMeasure,
    window: &LocalizationWindow,
    policy: &StepPolicy,
    rng: &mut R,
) -> Result<FilamentParams> {
    let x0 = uniform_in_ball(&Vec3::zeros(), window.radius, rng);
    let s = gamma.sample_params(window.eta, LengthSampling::Direct, rng)?;
    let dt = policy.dt(s.thickness, s.length);
    let path = sample_path(x0, s.length, dt, rng)?;
    FilamentParams::new(s.intensity, s.thickness, s.length, path)
}

pub fn sample_ensemble<R: Rng + ?Sized>(
    gamma: &MultifractalMeasure,
    window: &LocalizationWindow,
    policy: &StepPolicy,
    max_expected_count: f64,
    stream_index: u64,
    rng: &mut R,
) -> Result<EnsembleRealization> {
    let mass = intensity_mass(gamma, window)?;
    if !mass.is_finite() || mass > max_expected_count {
        return Err(Error::BudgetExceeded(format!(
            "expected filament count ν(A) = {mass:.3e} exceeds the cap {max_expected_count:.3e}; raise η or shrink R"
        )));
    }
    let n = sample_poisson(mass, rng);
    let filaments = (0..n)
        .map(|_| sample_filament(gamma, window, policy, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleRealization {
        window: *window,
        filaments,
        expected_count: mass,
        method: PoissonMethod::for_mean(mass),
        stream_index,
    })
}

/// Total field at every probe, summed over filaments in index order.
pub fn field_at_many(realization: &EnsembleRealization, spec: &MollifierSpec, points: &[Vec3]) -> Result<Vec<Vec3>> {
    let mut total = vec![Vec3::zeros(); points.len()];
    for f in &realization.filaments {
        for (t, v) in total.iter_mut().zip(velocity_at_many(f, spec, points)?) {
            *t += v;
        }
    }
    Ok(total)
}

pub fn field_at(realization: &EnsembleRealization, spec: &MollifierSpec, x: &Vec3) -> Result<Vec3> {
    Ok(field_at_many(realization, spec, std::slice::from_ref(x))?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::Atom;
    use crate::rng::StreamFactory;
    use approx::assert_relative_eq;

    fn uniform_gamma() -> MultifractalMeasure {
        MultifractalMeasure::new(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 2.0, b: 0.0 }], 1.0).unwrap()
    }

    #[test]
    fn intensity_examples() {
        let g = uniform_gamma();
        let w = LocalizationWindow::new(0.5, 1.0).unwrap();
        assert_relative_eq!(intensity_mass(&g, &w).unwrap(), 0.5 * 4.0 * PI / 3.0, max_relative = 1e-15);
        let w2 = LocalizationWindow::new(0.5, 2.0).unwrap();
        assert_relative_eq!(
            intensity_mass(&g, &w2).unwrap(),
            8.0 * intensity_mass(&g, &w).unwrap(),
            max_relative = 1e-14
        );
        let tiny = LocalizationWindow::new(0.5, 1e-6).unwrap();
        assert!(intensity_mass(&g, &tiny).unwrap() < 1e-17);
    }

    #[test]
    fn poisson_count_moments() {
        let g = uniform_gamma();
        let w = LocalizationWindow::new(0.5, 1.0).unwrap();
        let mass = intensity_mass(&g, &w).unwrap();
        let f = StreamFactory::new(21);
        let policy = StepPolicy { resolution_scale: 2.0, dt_min: 1e-6 };
        let counts: Vec<f64> = (0..1000)
            .map(|i| {
                let r = sample_ensemble(&g, &w, &policy, 1e6, i, &mut f.stream(i)).unwrap();
                for fl in &r.filaments {
                    assert!(fl.thickness > w.eta && fl.path.origin().norm() <= w.radius);
                }
                r.filaments.len() as f64
            })
            .collect();
        let m = counts.iter().sum::<f64>() / 1000.0;
        let v = counts.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / 999.0;
        assert!((m - mass).abs() <= 3.0 * (mass / 1000.0).sqrt(), "mean {m} vs {mass}");
        assert!((v / mass - 1.0).abs() <= 0.1, "variance {v} vs {mass}");
    }

    #[test]
    fn normal_branch_mean() {
        let mut rng = StreamFactory::new(22).stream(0);
        let n = 20_000;
        let m = (0..n).map(|_| sample_poisson(100.0, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((m - 100.0).abs() < 3.0 * (100.0f64 / n as f64).sqrt());
    }

    #[test]
    fn budget_cap_enforced() {
        let g = MultifractalMeasure::k41();
        let w = LocalizationWindow::new(0.001, 5.0).unwrap();
        let mut rng = StreamFactory::new(1).stream(0);
        assert!(matches!(
            sample_ensemble(&g, &w, &StepPolicy::default(), 1e6, 0, &mut rng),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn empty_and_singleton_sums() {
        let g = uniform_gamma();
        let w = LocalizationWindow::new(0.5, 0.5).unwrap();
        let mut rng = StreamFactory::new(3).stream(0);
        let policy = StepPolicy::default();
        let empty = EnsembleRealization {
            window: w,
            filaments: vec![],
            expected_count: 0.0,
            method: PoissonMethod::Inversion,
            stream_index: 0,
        };
        assert_eq!(field_at(&empty, &MollifierSpec::Indicator, &Vec3::zeros()).unwrap(), Vec3::zeros());
        let fl = sample_filament(&g, &w, &policy, &mut rng).unwrap();
        let single = EnsembleRealization { filaments: vec![fl.clone()], ..empty };
        let x = Vec3::new(0.1, 0.0, 0.0);
        assert_eq!(
            field_at(&single, &MollifierSpec::Indicator, &x).unwrap(),
            crate::filament::velocity_at(&fl, &MollifierSpec::Indicator, &x).unwrap()
        );
    }

    #[test]
    fn uniform_in_ball_stays_inside() {
        let mut rng = StreamFactory::new(4).stream(0);
        let c = Vec3::new(1.0, 2.0, 3.0);
        for _ in 0..10_000 {
            assert!((uniform_in_ball(&c, 0.7, &mut rng) - c).norm() <= 0.7);
        }
    }

    #[test]
    fn margin_check() {
        let g = MultifractalMeasure::k41();
        let w = LocalizationWindow::new(0.1, 5.0).unwrap();
        assert!(w.check_probe(&g, &Vec3::zeros()).is_ok());
        assert!(matches!(w.check_probe(&g, &Vec3::new(0.5, 0.0, 0.0)), Err(Error::MarginViolation(_))));
    }
}
