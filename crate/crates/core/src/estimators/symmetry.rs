//! Homogeneity, isotropy and reflection checks on the localized field.

use nalgebra::{Matrix3, Rotation3, Unit};
use serde::{Deserialize, Serialize};

use crate::brownian::StepPolicy;
use crate::ensemble::{field_at_many, sample_ensemble, LocalizationWindow};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gamma::MultifractalMeasure;
use crate::kernel::MollifierSpec;
use crate::rng::StreamFactory;
use crate::stats::{batch_means, ks_critical_99, ks_two_sample, z_score};
use crate::Vec3;

/// Threshold on `|z|` for the moment comparisons.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct SymmetryPlan<'a> {
    pub gamma: &'a MultifractalMeasure,
    pub spec: &'a MollifierSpec,
    pub window: LocalizationWindow,
    pub policy: StepPolicy,
    pub max_expected_count: f64,
    pub probe: Vec3,
    /// Homogeneity compares the probe with `probe + shift`.
    pub shift: Vec3,
    pub direction: Vec3,
    pub rotation: Matrix3<f64>,
    /// Separation for the increment reflection test.
    pub separation: f64,
    pub batches: usize,
}

pub fn rotation_about(axis: &Vec3, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// `value` is a z-score, passing when `|z| ≤ threshold`.
    Z,
    /// `value` is a KS distance, passing below the 99% critical value.
    Ks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTest {
    pub name: String,
    pub kind: TestKind,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub realizations: u64,
    pub expected_count: f64,
    pub mean_count: f64,
    pub tests: Vec<SymmetryTest>,
}

impl SymmetryReport {
    pub fn all_pass(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }
}

impl SymmetryPlan<'_> {
    fn validate(&self) -> Result<()> {
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("direction must be a unit vector".into()));
        }
        let r = &self.rotation;
        if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("rotation must be orthogonal with determinant 1".into()));
        }
        if !(self.separation > 0.0) {
            return Err(Error::InvalidArgument("separation must be > 0".into()));
        }
        Ok(())
    }
}

/// Paired z-tests on per-realization statistics plus a KS comparison of
/// `⟨u, e⟩` against `⟨u, Re⟩` on disjoint halves of the realizations.
pub fn symmetry_suite(
    plan: &SymmetryPlan<'_>,
    realizations: u64,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<SymmetryReport> {
    plan.validate()?;
    if realizations < 2 * plan.batches as u64 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} realizations, got {realizations}",
            2 * plan.batches
        )));
    }
    let x = plan.probe;
    let probes = [x, x + plan.shift, x + plan.direction * plan.separation];
    for p in &probes {
        plan.window.check_probe(plan.gamma, p)?;
    }
    let e = plan.direction;
    let re = plan.rotation * e;
    let samples = exec.try_map(realizations, |i| {
        let mut rng = streams.stream(i);
        let r = sample_ensemble(plan.gamma, &plan.window, &plan.policy, plan.max_expected_count, i, &mut rng)?;
        let u = field_at_many(&r, plan.spec, &probes)?;
        Ok((u, r.filaments.len(), r.expected_count))
    })?;
    let expected_count = samples[0].2;
    let mean_count = samples.iter().map(|s| s.1 as f64).sum::<f64>() / samples.len() as f64;

    let mut tests = Vec::new();
    let mut z_test = |name: &str, f: &dyn Fn(&[Vec3]) -> f64| {
        let col: Vec<f64> = samples.iter().map(|s| f(&s.0)).collect();
        let s = batch_means(&col, plan.batches);
        let z = z_score(s.mean, s.stderr);
        tests.push(SymmetryTest {
            name: name.to_string(),
            kind: TestKind::Z,
            value: z,
            threshold: Z_THRESHOLD,
            pass: z.abs() <= Z_THRESHOLD,
        });
    };
    z_test("homogeneity_second_moment", &|u| u[0].norm_squared() - u[1].norm_squared());
    z_test("isotropy_rotated_component", &|u| u[0].dot(&e).powi(2) - u[0].dot(&re).powi(2));
    z_test("isotropy_diagonal_xy", &|u| u[0].x * u[0].x - u[0].y * u[0].y);
    z_test("isotropy_diagonal_yz", &|u| u[0].y * u[0].y - u[0].z * u[0].z);
    z_test("isotropy_offdiagonal_xy", &|u| u[0].x * u[0].y);
    z_test("isotropy_offdiagonal_xz", &|u| u[0].x * u[0].z);
    z_test("isotropy_offdiagonal_yz", &|u| u[0].y * u[0].z);
    z_test("reflection_first_moment", &|u| u[0].dot(&e));
    z_test("reflection_third_moment", &|u| u[0].dot(&e).powi(3));
    z_test("reflection_increment_third_moment", &|u| (u[2] - u[0]).dot(&e).powi(3));

    let half = samples.len() / 2;
    let a: Vec<f64> = samples[..half].iter().map(|s| s.0[0].dot(&e)).collect();
    let b: Vec<f64> = samples[half..].iter().map(|s| s.0[0].dot(&re)).collect();
    let d = ks_two_sample(&a, &b);
    let crit = ks_critical_99(a.len(), b.len());
    tests.push(SymmetryTest {
        name: "isotropy_ks".into(),
        kind: TestKind::Ks,
        value: d,
        threshold: crit,
        pass: d <= crit,
    });
    Ok(SymmetryReport {
        realizations,
        expected_count,
        mean_count,
        tests,
    })
}
