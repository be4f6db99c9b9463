//! Importance sampler for integrals against the intensity `ν = γ ⊗ W`.
//!
//! `ν[f] = ∫ dx₀ ∫ dγ W_{x₀}[f]` is estimated by drawing `(U, ℓ, T)` from the
//! truncated `γ`, a start `x₀` from a region around the probes, one Brownian
//! path, and weighting `f` by the importance weight times the inverse start
//! density. Multiplying the sample mean by `Z(η)` gives the estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brownian::{sample_path, StepPolicy};
use crate::ensemble::{ball_volume, uniform_in_ball};
use crate::error::{Error, Result};
use crate::filament::FilamentParams;
use crate::gamma::{LengthSampling, MultifractalMeasure};
use crate::Vec3;

/// Where filament starts are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplingRegion {
    /// Union of balls of radius `ℓ + sigmas·√T` around each probe.
    Adaptive { sigmas: f64 },
    /// One ball of fixed radius around the probes' centroid.
    Fixed { radius: f64 },
}

impl Default for SamplingRegion {
    fn default() -> Self {
        SamplingRegion::Adaptive { sigmas: 4.0 }
    }
}

#[derive(Clone, Debug)]
pub struct NuSampler<'a> {
    pub gamma: &'a MultifractalMeasure,
    pub eta: f64,
    pub policy: StepPolicy,
    pub region: SamplingRegion,
    pub lengths: LengthSampling,
}

impl<'a> NuSampler<'a> {
    pub fn validate(&self) -> Result<()> {
        self.gamma.total_mass(self.eta)?;
        self.policy.validate()?;
        match self.region {
            SamplingRegion::Adaptive { sigmas } if !(sigmas > 0.0) => {
                Err(Error::InvalidArgument(format!("sampling sigmas must be > 0, got {sigmas}")))
            }
            SamplingRegion::Fixed { radius } if !(radius > 0.0) => {
                Err(Error::InvalidArgument(format!("sampling radius must be > 0, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// `Z(η)`, the factor turning weighted sample means into `ν`-integrals.
    pub fn mass(&self) -> Result<f64> {
        self.gamma.total_mass(self.eta)
    }

    /// One filament and its weight relative to `ν / Z(η)`.
    pub fn sample<R: Rng + ?Sized>(&self, probes: &[Vec3], rng: &mut R) -> Result<(FilamentParams, f64)> {
        let s = self.gamma.sample_params(self.eta, self.lengths, rng)?;
        let (x0, region_weight) = match self.region {
            SamplingRegion::Adaptive { sigmas } => {
                let r = s.thickness + sigmas * s.length.sqrt();
                let pick = rng.random_range(0..probes.len());
                let x0 = uniform_in_ball(&probes[pick], r, rng);
                let r2 = r * r;
                let covering = probes.iter().filter(|c| (x0 - *c).norm_squared() <= r2).count();
                (x0, probes.len() as f64 * ball_volume(r) / covering.max(1) as f64)
            }
            SamplingRegion::Fixed { radius } => {
                let centre = probes.iter().fold(Vec3::zeros(), |a, p| a + p) / probes.len() as f64;
                (uniform_in_ball(&centre, radius, rng), ball_volume(radius))
            }
        };
        let dt = self.policy.dt(s.thickness, s.length);
        let path = sample_path(x0, s.length, dt, rng)?;
        let f = FilamentParams::new(s.intensity, s.thickness, s.length, path)?;
        Ok((f, s.importance_weight * region_weight))
    }
}
