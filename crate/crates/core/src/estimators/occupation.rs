//! Space-integrated occupation moments `∫dx₀ E_{x₀}[(L_{B(0,ℓ)}^T)^{p/2}]`.
//!
//! A path started at `x₀` spends in `B(0, ℓ)` the time a path started at 0
//! spends in `B(−x₀, ℓ)`, so each sampled path is probed against several ball
//! centres drawn uniformly in `B(0, R₀)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, ScalingFit};
use crate::brownian::{sample_path, Ball, ChunkedBounds, StepPolicy};
use crate::ensemble::{ball_volume, uniform_in_ball};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rng::StreamFactory;
use crate::stats::{batch_means, Summary};
use crate::Vec3;

const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupationScan {
    pub thicknesses: Vec<f64>,
    pub horizons: Vec<f64>,
    pub orders: Vec<u32>,
    /// Sampling radius `R₀`; `None` means `ℓ + 4.5√T` per pair.
    pub radius: Option<f64>,
    pub paths: u64,
    pub offsets_per_path: u32,
    pub resolution_scale: f64,
}

impl Default for OccupationScan {
    fn default() -> Self {
        OccupationScan {
            thicknesses: vec![0.05, 0.1, 0.2],
            horizons: vec![0.5],
            orders: vec![2, 4],
            radius: None,
            paths: 20_000,
            offsets_per_path: 64,
            resolution_scale: 4.0,
        }
    }
}

impl OccupationScan {
    pub fn validate(&self) -> Result<()> {
        if self.thicknesses.is_empty() || self.horizons.is_empty() || self.orders.is_empty() {
            return Err(Error::InvalidArgument("occupation scan needs ℓ, T and p lists".into()));
        }
        for &v in self.thicknesses.iter().chain(&self.horizons) {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidArgument(format!("ℓ and T must lie in (0, 1], got {v}")));
            }
        }
        if self.orders.iter().any(|p| *p == 0) {
            return Err(Error::InvalidArgument("occupation orders must be positive".into()));
        }
        if self.paths < 2 || self.offsets_per_path == 0 {
            return Err(Error::InvalidArgument("need >= 2 paths and >= 1 offset per path".into()));
        }
        if !(self.resolution_scale > 0.0) {
            return Err(Error::InvalidArgument("resolution_scale must be > 0".into()));
        }
        for &l in &self.thicknesses {
            for &t in &self.horizons {
                self.radius_for(l, t)?;
            }
        }
        Ok(())
    }

    fn radius_for(&self, l: f64, t: f64) -> Result<f64> {
        let needed = l + 4.0 * t.sqrt();
        match self.radius {
            None => Ok(l + 4.5 * t.sqrt()),
            Some(r) if r >= needed => Ok(r),
            Some(r) => Err(Error::MarginViolation(format!(
                "R₀ = {r} is below ℓ + 4√T = {needed:.4} for ℓ = {l}, T = {t}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationRow {
    pub thickness: f64,
    pub horizon: f64,
    pub p: u32,
    pub radius: f64,
    pub dt: f64,
    pub estimate: Summary,
    /// `(4π/3) ℓ³ T` at `p = 2`.
    pub exact_mean: Option<f64>,
}

impl OccupationRow {
    pub fn relative_error(&self) -> Option<f64> {
        self.exact_mean.map(|m| (self.estimate.mean - m).abs() / m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    Thickness,
    Horizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationFit {
    pub p: u32,
    pub axis: ScanAxis,
    /// The value held fixed (T for a thickness fit, ℓ for a horizon fit).
    pub fixed: f64,
    pub fit: ScalingFit,
    /// `p + 1` in ℓ for `T ≥ ℓ²`, `p/2` in T for `T ≤ ℓ²/4`.
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    pub rows: Vec<OccupationRow>,
    pub fits: Vec<OccupationFit>,
}

/// Runs every `(ℓ, T)` pair and fits exponents wherever at least three
/// pairs lie in the diffusive (`T ≥ ℓ²`) or short-time (`T ≤ ℓ²/4`) regime.
pub fn occupation_moment_scan(
    scan: &OccupationScan,
    batches: usize,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<OccupationReport> {
    scan.validate()?;
    let policy = StepPolicy {
        resolution_scale: scan.resolution_scale,
        dt_min: 1e-9,
    };
    let mut rows = Vec::new();
    let mut pair = 0u64;
    for &l in &scan.thicknesses {
        for &t in &scan.horizons {
            let radius = scan.radius_for(l, t)?;
            let volume = ball_volume(radius);
            let dt = policy.dt(l.min(t.sqrt()), t);
            let sub = streams.derive_index(pair);
            pair += 1;
            let per_path = exec.try_map(scan.paths, |i| {
                let mut rng = sub.stream(i);
                let path = sample_path(Vec3::zeros(), t, dt, &mut rng)?;
                let bounds = ChunkedBounds::new(&path, CHUNK);
                let mut sums = vec![0.0; scan.orders.len()];
                for c in offset_centres(radius, scan.offsets_per_path, &mut rng) {
                    let occ = bounds.occupation_time(&path, &Ball { center: c, radius: l });
                    if occ > 0.0 {
                        for (s, p) in sums.iter_mut().zip(&scan.orders) {
                            *s += occ.powf(f64::from(*p) / 2.0);
                        }
                    }
                }
                let k = f64::from(scan.offsets_per_path);
                Ok(sums.into_iter().map(|s| volume * s / k).collect::<Vec<f64>>())
            })?;
            for (j, &p) in scan.orders.iter().enumerate() {
                let col: Vec<f64> = per_path.iter().map(|r| r[j]).collect();
                rows.push(OccupationRow {
                    thickness: l,
                    horizon: t,
                    p,
                    radius,
                    dt,
                    estimate: batch_means(&col, batches),
                    exact_mean: (p == 2).then(|| ball_volume(l) * t),
                });
            }
        }
    }
    let fits = fit_exponents(scan, &rows)?;
    Ok(OccupationReport { rows, fits })
}

fn fit_exponents(scan: &OccupationScan, rows: &[OccupationRow]) -> Result<Vec<OccupationFit>> {
    let mut fits = Vec::new();
    for &p in &scan.orders {
        for &t in &scan.horizons {
            let pts: Vec<&OccupationRow> = rows
                .iter()
                .filter(|r| r.p == p && r.horizon == t && t >= r.thickness * r.thickness)
                .collect();
            if let Some(fit) = fit_rows(&pts, |r| r.thickness)? {
                fits.push(OccupationFit { p, axis: ScanAxis::Thickness, fixed: t, fit, expected: f64::from(p) + 1.0 });
            }
        }
        for &l in &scan.thicknesses {
            let pts: Vec<&OccupationRow> = rows
                .iter()
                .filter(|r| r.p == p && r.thickness == l && r.horizon <= l * l / 4.0)
                .collect();
            if let Some(fit) = fit_rows(&pts, |r| r.horizon)? {
                fits.push(OccupationFit { p, axis: ScanAxis::Horizon, fixed: l, fit, expected: f64::from(p) / 2.0 });
            }
        }
    }
    Ok(fits)
}

fn fit_rows(pts: &[&OccupationRow], x: impl Fn(&OccupationRow) -> f64) -> Result<Option<ScalingFit>> {
    if pts.len() < 3 {
        return Ok(None);
    }
    let xs: Vec<f64> = pts.iter().map(|r| x(r)).collect();
    let ys: Vec<f64> = pts.iter().map(|r| r.estimate.mean).collect();
    let ses: Vec<f64> = pts.iter().map(|r| r.estimate.stderr).collect();
    fit_power_law(&xs, &ys, &ses).map(Some)
}

fn offset_centres<R: Rng + ?Sized>(radius: f64, count: u32, rng: &mut R) -> Vec<Vec3> {
    (0..count).map(|_| uniform_in_ball(&Vec3::zeros(), radius, rng)).collect()
}
