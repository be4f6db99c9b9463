//! Statistical outputs: structure functions, scaling fits, Poisson moment
//! checks, occupation-moment scans and symmetry tests.

mod corrector;
mod fit;
mod moments;
mod occupation;
mod sampler;
mod structure;
mod symmetry;

use serde::{Deserialize, Serialize};

pub use corrector::{corrector_scan, CorrectorPoint, CorrectorReport, CorrectorScan, NegativeControl};
pub use fit::{default_fit_range, fit_power_law, fit_zeta, log_grid, ScalingFit};
pub use moments::{
    moments_by_compositions, poisson_moment_check, MomentPlan, MomentReport, MomentRow, PhiKind, PhiSpec,
};
pub use occupation::{
    occupation_moment_scan, OccupationFit, OccupationReport, OccupationRow, OccupationScan, ScanAxis,
};
pub use sampler::{NuSampler, SamplingRegion};
pub use structure::{
    ensemble_structure_function, single_filament_moment, single_filament_structure, StructurePlan, MIN_BUDGET,
};
pub use symmetry::{rotation_about, symmetry_suite, SymmetryPlan, SymmetryReport, SymmetryTest, TestKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// `⟨δ_ε u, e⟩^p`
    Longitudinal,
    /// `|δ_ε u|^p`
    Nondirectional,
}

impl StructureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StructureKind::Longitudinal => "longitudinal",
            StructureKind::Nondirectional => "nondirectional",
        }
    }

    pub(crate) fn value(&self, delta: &crate::Vec3, e: &crate::Vec3, p: u32) -> f64 {
        match self {
            StructureKind::Longitudinal => delta.dot(e).powi(p as i32),
            StructureKind::Nondirectional => delta.norm().powi(p as i32),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    FullField,
    SingleFilament,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::FullField => "full_field",
            EstimatorKind::SingleFilament => "single_filament",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eps: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Monte-Carlo moments of one order and kind on an ε-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFunctionEstimate {
    pub p: u32,
    pub kind: StructureKind,
    pub estimator: EstimatorKind,
    pub grid: Vec<GridPoint>,
}

impl StructureFunctionEstimate {
    pub fn epsilons(&self) -> Vec<f64> {
        self.grid.iter().map(|g| g.eps).collect()
    }
}

pub(crate) fn validate_orders(ps: &[u32], kinds: &[StructureKind]) -> crate::Result<()> {
    if ps.is_empty() || kinds.is_empty() {
        return Err(crate::Error::InvalidArgument("need at least one order and one kind".into()));
    }
    for &p in ps {
        if p == 0 {
            return Err(crate::Error::InvalidArgument("moment order must be positive".into()));
        }
        if p % 2 == 1 && kinds.contains(&StructureKind::Nondirectional) {
            return Err(crate::Error::InvalidArgument(format!(
                "odd order p = {p} is only defined for the longitudinal function"
            )));
        }
    }
    Ok(())
}

pub(crate) fn validate_grid(eps: &[f64]) -> crate::Result<()> {
    if eps.is_empty() {
        return Err(crate::Error::InvalidArgument("empty ε-grid".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(crate::Error::InvalidArgument("ε values must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::InvalidArgument("ε-grid must be strictly increasing".into()));
    }
    Ok(())
}
