use serde::{Deserialize, Serialize};

use super::StructureFunctionEstimate;
use crate::error::{Error, Result};

/// Log-log least-squares fit `log S = intercept + ζ log ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub zeta_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_range: (f64, f64),
    pub points: usize,
}

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Weighted least squares of `ln y` on `ln x`.
///
/// Weights are inverse relative variances `(y/se)²` when every error bar is
/// positive, otherwise uniform (exact data), in which case the slope error
/// comes from the residuals.
pub fn fit_power_law(xs: &[f64], ys: &[f64], ses: &[f64]) -> Result<ScalingFit> {
    if xs.len() < 3 {
        return Err(Error::FitDomain(format!(
            "need at least 3 points in the fit range, got {}",
            xs.len()
        )));
    }
    if let Some(bad) = ys.iter().position(|y| !(*y > 0.0) || !y.is_finite()) {
        return Err(Error::FitDomain(format!(
            "non-positive mean {} at x = {}; increase the sample budget",
            ys[bad], xs[bad]
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let weighted = ses.iter().all(|s| *s > 0.0 && s.is_finite());
    let w: Vec<f64> = if weighted {
        ys.iter().zip(ses).map(|(y, s)| (y / s) * (y / s)).collect()
    } else {
        vec![1.0; xs.len()]
    };
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        s += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
        sxx += w[i] * lx[i] * lx[i];
        sxy += w[i] * lx[i] * ly[i];
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::FitDomain("degenerate abscissae".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    let ybar = sy / s;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..xs.len() {
        let r = ly[i] - intercept - slope * lx[i];
        ss_res += w[i] * r * r;
        ss_tot += w[i] * (ly[i] - ybar) * (ly[i] - ybar);
    }
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let stderr = if weighted {
        (s / det).sqrt()
    } else {
        (ss_res / (xs.len() - 2) as f64 * s / det).sqrt()
    };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        zeta_hat: slope,
        stderr,
        intercept,
        r_squared,
        fit_range: (lo, hi),
        points: xs.len(),
    })
}

/// Fit `ζ_p` on the grid points with `ε ∈ [range.0, range.1]`.
pub fn fit_zeta(estimate: &StructureFunctionEstimate, range: (f64, f64)) -> Result<ScalingFit> {
    let (lo, hi) = (range.0 * (1.0 - 1e-12), range.1 * (1.0 + 1e-12));
    let pts: Vec<_> = estimate.grid.iter().filter(|g| g.eps >= lo && g.eps <= hi).collect();
    let xs: Vec<f64> = pts.iter().map(|g| g.eps).collect();
    let ys: Vec<f64> = pts.iter().map(|g| g.mean).collect();
    let ses: Vec<f64> = pts.iter().map(|g| g.stderr).collect();
    fit_power_law(&xs, &ys, &ses)
}

/// Central decade of the grid, excluding `ε ≤ 2η` and `ε ≥ ℓ_max/2`.
pub fn default_fit_range(grid: &[f64], eta: f64, l_max: f64) -> Result<(f64, f64)> {
    let eligible: Vec<f64> = grid.iter().copied().filter(|&e| e > 2.0 * eta && e < 0.5 * l_max).collect();
    if eligible.len() < 3 {
        return Err(Error::FitDomain(format!(
            "only {} grid points lie in (2η, ℓ_max/2) = ({}, {})",
            eligible.len(),
            2.0 * eta,
            0.5 * l_max
        )));
    }
    let (first, last) = (eligible[0], eligible[eligible.len() - 1]);
    let centre = (first * last).sqrt();
    let half = 10f64.sqrt();
    let decade: Vec<f64> = eligible
        .iter()
        .copied()
        .filter(|&e| e >= centre / half * (1.0 - 1e-12) && e <= centre * half * (1.0 + 1e-12))
        .collect();
    if decade.len() < 3 {
        return Err(Error::FitDomain(format!(
            "only {} grid points in the central decade around ε = {centre:.3e}",
            decade.len()
        )));
    }
    Ok((decade[0], decade[decade.len() - 1]))
}
