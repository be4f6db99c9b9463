//! Brownian paths and the path functionals built on them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Vec3;

/// Step-size rule `dt = max((ℓ/s)², dt_min)`, capped at the horizon.
///
/// The kernel varies on the thickness scale `ℓ`, and so does the difference
/// of kernels at two probes, whatever their separation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub resolution_scale: f64,
    pub dt_min: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            resolution_scale: 8.0,
            dt_min: 1e-6,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_scale > 0.0) || !(self.dt_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step policy needs positive scale and dt_min, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn dt(&self, scale: f64, horizon: f64) -> f64 {
        let s = scale / self.resolution_scale;
        (s * s).max(self.dt_min).min(horizon)
    }
}

/// Discretized 3d Brownian motion on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    horizon: f64,
    dt: f64,
    positions: Vec<Vec3>,
}

/// Number of grid steps covering `[0, T]` with step `dt` (last step may be partial).
pub fn step_count(horizon: f64, dt: f64) -> usize {
    // guard against T/dt landing a few ulps above an integer
    ((horizon / dt) * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0) as usize
}

pub fn sample_path<R: Rng + ?Sized>(origin: Vec3, horizon: f64, dt: f64, rng: &mut R) -> Result<BrownianPath> {
    if !(dt > 0.0) || !(horizon > 0.0) || !dt.is_finite() || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "path needs dt > 0 and T > 0, got dt = {dt}, T = {horizon}"
        )));
    }
    let dt = dt.min(horizon);
    let n = step_count(horizon, dt);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(origin);
    let mut x = origin;
    let full = dt.sqrt();
    for k in 0..n {
        let s = if k + 1 == n {
            (horizon - (n - 1) as f64 * dt).sqrt()
        } else {
            full
        };
        let z = Vec3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        x += z * s;
        positions.push(x);
    }
    Ok(BrownianPath { horizon, dt, positions })
}

impl BrownianPath {
    /// Builds a path from explicit grid positions at times `0, dt, …, T`.
    pub fn from_positions(positions: Vec<Vec3>, horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidArgument("path needs dt > 0 and T > 0".into()));
        }
        let dt = dt.min(horizon);
        if positions.len() != step_count(horizon, dt) + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} positions for T = {horizon}, dt = {dt}, got {}",
                step_count(horizon, dt) + 1,
                positions.len()
            )));
        }
        Ok(BrownianPath { horizon, dt, positions })
    }

    pub fn origin(&self) -> Vec3 {
        self.positions[0]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn endpoint(&self) -> Vec3 {
        self.positions[self.positions.len() - 1]
    }

    /// Length of step `k` (all equal to `dt` except possibly the last).
    #[inline]
    pub fn step_length(&self, k: usize) -> f64 {
        if k + 1 == self.steps() {
            self.horizon - (self.steps() - 1) as f64 * self.dt
        } else {
            self.dt
        }
    }

    /// The same path translated by `v`.
    pub fn translated(&self, v: &Vec3) -> BrownianPath {
        BrownianPath {
            horizon: self.horizon,
            dt: self.dt,
            positions: self.positions.iter().map(|p| p + v).collect(),
        }
    }

    /// The path mapped through a linear map (e.g. a rotation).
    pub fn transformed(&self, m: &nalgebra::Matrix3<f64>) -> BrownianPath {
        BrownianPath {
            horizon: self.horizon,
            dt: self.dt,
            positions: self.positions.iter().map(|p| m * p).collect(),
        }
    }

    /// Time reversal `t ↦ X_{T−t}`. Only well defined on a uniform grid, so a
    /// partial last step is rejected.
    pub fn reversed(&self) -> Result<BrownianPath> {
        let n = self.steps();
        if (self.step_length(n - 1) - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidArgument("reversal needs a uniform grid".into()));
        }
        let mut positions = self.positions.clone();
        positions.reverse();
        Ok(BrownianPath {
            horizon: self.horizon,
            dt: self.dt,
            positions,
        })
    }
}

/// `Σ_k f(X_{t_k}) ∧ (X_{t_{k+1}} − X_{t_k})`.
pub fn ito_cross_integral<F: Fn(&Vec3) -> Vec3>(path: &BrownianPath, f: F) -> Vec3 {
    let mut acc = Vec3::zeros();
    for w in path.positions.windows(2) {
        acc += f(&w[0]).cross(&(w[1] - w[0]));
    }
    acc
}

/// `Σ_k f((X_{t_k} + X_{t_{k+1}})/2) ∧ (X_{t_{k+1}} − X_{t_k})`.
pub fn stratonovich_cross_integral<F: Fn(&Vec3) -> Vec3>(path: &BrownianPath, f: F) -> Vec3 {
    let mut acc = Vec3::zeros();
    for w in path.positions.windows(2) {
        let mid = (w[0] + w[1]) * 0.5;
        acc += f(&mid).cross(&(w[1] - w[0]));
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    #[inline]
    pub fn contains(&self, x: &Vec3) -> bool {
        (x - self.center).norm_squared() < self.radius * self.radius
    }
}

/// Left-point Riemann sum of the time spent in `region` by the path.
pub fn occupation_time_in<F: Fn(&Vec3) -> bool>(path: &BrownianPath, region: F) -> f64 {
    let n = path.steps();
    let mut count = 0usize;
    for x in &path.positions[..n - 1] {
        if region(x) {
            count += 1;
        }
    }
    let mut total = count as f64 * path.dt;
    if region(&path.positions[n - 1]) {
        total += path.step_length(n - 1);
    }
    total
}

pub fn occupation_time(path: &BrownianPath, ball: &Ball) -> f64 {
    occupation_time_in(path, |x| ball.contains(x))
}

/// First grid time at which the path is inside the ball.
pub fn entrance_time(path: &BrownianPath, ball: &Ball) -> Option<f64> {
    path.positions
        .iter()
        .position(|x| ball.contains(x))
        .map(|k| if k == path.steps() { path.horizon } else { k as f64 * path.dt })
}

/// Per-chunk axis-aligned bounding boxes of a path, used to skip chunks that
/// cannot intersect a ball when the same path is probed many times.
#[derive(Clone, Debug)]
pub struct ChunkedBounds {
    chunk: usize,
    boxes: Vec<(Vec3, Vec3)>,
}

impl ChunkedBounds {
    pub fn new(path: &BrownianPath, chunk: usize) -> Self {
        let chunk = chunk.max(1);
        let boxes = path
            .positions
            .chunks(chunk)
            .map(|c| {
                c.iter().fold((c[0], c[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
            })
            .collect();
        ChunkedBounds { chunk, boxes }
    }

    /// Same value as [`occupation_time`], skipping chunks whose box misses the ball.
    pub fn occupation_time(&self, path: &BrownianPath, ball: &Ball) -> f64 {
        let n = path.steps();
        let r2 = ball.radius * ball.radius;
        let mut count = 0usize;
        let mut last = false;
        for (ci, (lo, hi)) in self.boxes.iter().enumerate() {
            let clamped = ball.center.sup(lo).inf(hi);
            if (clamped - ball.center).norm_squared() >= r2 {
                continue;
            }
            let start = ci * self.chunk;
            let end = ((ci + 1) * self.chunk).min(n);
            for k in start..end {
                if (path.positions[k] - ball.center).norm_squared() < r2 {
                    if k + 1 == n {
                        last = true;
                    } else {
                        count += 1;
                    }
                }
            }
        }
        let mut total = count as f64 * path.dt;
        if last {
            total += path.step_length(n - 1);
        }
        total
    }
}
