//! Stratonovich minus Itô for the kernel integrand, and a non-gradient control.

use serde::{Deserialize, Serialize};

use crate::brownian::{ito_cross_integral, sample_path, stratonovich_cross_integral};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::kernel::{MollifierSpec, RadialKernel};
use crate::rng::StreamFactory;
use crate::stats::{batch_means, z_score, Summary};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorPoint {
    pub dt: f64,
    /// `|Strat − Itô|` for `f = K_ℓ(x − ·)`.
    pub gap: Summary,
    /// Components of `Strat − Itô` for the same integrand.
    pub components: [Summary; 3],
    /// z-component of `Strat − Itô` for `f(X) = (−X₂, X₁, 0)`.
    pub control: Summary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub dt: f64,
    pub mc: Summary,
    /// `−½ ∫₀ᵀ (curl f)_z dt = −T`.
    pub analytic: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorReport {
    pub thickness: f64,
    pub horizon: f64,
    pub points: Vec<CorrectorPoint>,
    pub control: NegativeControl,
}

impl CorrectorReport {
    /// Each halving lowers the mean gap, allowing `tolerance` joint standard errors.
    pub fn monotone(&self, tolerance: f64) -> bool {
        self.points.windows(2).all(|w| {
            w[1].gap.mean <= w[0].gap.mean + tolerance * w[0].gap.stderr.hypot(w[1].gap.stderr)
        })
    }

    /// Largest `|z|` of the gap components against 0 over all levels.
    pub fn max_component_z(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.components.iter().map(|c| z_score(c.mean, c.stderr).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorScan {
    pub thickness: f64,
    pub horizon: f64,
    pub base_dt: f64,
    pub halvings: u32,
    pub paths: u64,
}

impl Default for CorrectorScan {
    fn default() -> Self {
        CorrectorScan {
            thickness: 0.1,
            horizon: 0.01,
            base_dt: 1e-4,
            halvings: 3,
            paths: 1000,
        }
    }
}

/// Paths start at the probe, the worst place for the discretization.
/// Each dt level draws from its own stream family.
pub fn corrector_scan(
    scan: &CorrectorScan,
    spec: &MollifierSpec,
    batches: usize,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<CorrectorReport> {
    if !(scan.base_dt > 0.0) || !(scan.horizon > 0.0) || scan.base_dt > scan.horizon {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= T, got dt = {}, T = {}",
            scan.base_dt, scan.horizon
        )));
    }
    if scan.paths < 2 {
        return Err(Error::InvalidArgument("need at least 2 paths".into()));
    }
    let kernel = RadialKernel::new(spec, scan.thickness)?;
    let probe = Vec3::zeros();
    let rotation = |x: &Vec3| Vec3::new(-x.y, x.x, 0.0);
    let mut points = Vec::with_capacity(scan.halvings as usize + 1);
    for level in 0..=scan.halvings {
        let dt = scan.base_dt / f64::powi(2.0, level as i32);
        let sub = streams.derive_index(u64::from(level));
        let rows = exec.try_map(scan.paths, |i| {
            let mut rng = sub.stream(i);
            let path = sample_path(probe, scan.horizon, dt, &mut rng)?;
            let k = |x: &Vec3| kernel.eval(&(probe - x));
            let d = stratonovich_cross_integral(&path, k) - ito_cross_integral(&path, k);
            let c = stratonovich_cross_integral(&path, rotation) - ito_cross_integral(&path, rotation);
            Ok([d.norm(), d.x, d.y, d.z, c.z])
        })?;
        let col = |j: usize| batch_means(&rows.iter().map(|r| r[j]).collect::<Vec<_>>(), batches);
        points.push(CorrectorPoint {
            dt,
            gap: col(0),
            components: [col(1), col(2), col(3)],
            control: col(4),
        });
    }
    let finest = points[points.len() - 1];
    let analytic = -scan.horizon;
    Ok(CorrectorReport {
        thickness: scan.thickness,
        horizon: scan.horizon,
        control: NegativeControl {
            dt: finest.dt,
            mc: finest.control,
            analytic,
            z: z_score(finest.control.mean - analytic, finest.control.stderr),
        },
        points,
    })
}
