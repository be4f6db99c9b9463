//! Velocity field of a single Brownian vortex filament,
//! `u(x) = (U/ℓ²) ∫₀ᵀ K_ℓ(x − X_t) ∧ dX_t` (Itô, left-point sums).

use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::kernel::{MollifierSpec, RadialKernel, Vec3};

/// Relative slack when checking `ℓ ≤ √T ≤ 1` on values produced by powers.
const CONSTRAINT_SLACK: f64 = 1e-12;

/// One vortex: intensity `U`, thickness `ℓ`, length `T` and its Brownian path.
#[derive(Clone, Debug, PartialEq)]
pub struct FilamentParams {
    pub intensity: f64,
    pub thickness: f64,
    pub length: f64,
    pub path: BrownianPath,
}

impl FilamentParams {
    pub fn new(intensity: f64, thickness: f64, length: f64, path: BrownianPath) -> Result<Self> {
        let f = FilamentParams {
            intensity,
            thickness,
            length,
            path,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let (l, t) = (self.thickness, self.length);
        if !(l > 0.0) || !t.is_finite() || !self.intensity.is_finite() {
            return Err(Error::InvalidFilament(format!("bad parameters ℓ = {l}, T = {t}")));
        }
        if l * l > t * (1.0 + CONSTRAINT_SLACK) || t > 1.0 + CONSTRAINT_SLACK {
            return Err(Error::InvalidFilament(format!(
                "need 0 < ℓ ≤ √T ≤ 1, got ℓ = {l}, T = {t}"
            )));
        }
        if (self.path.horizon() - t).abs() > CONSTRAINT_SLACK * t {
            return Err(Error::InvalidFilament(format!(
                "path horizon {} differs from T = {t}",
                self.path.horizon()
            )));
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        self.intensity / (self.thickness * self.thickness)
    }
}

/// Velocity at every probe from a single traversal of the path.
pub fn velocity_at_many(xi: &FilamentParams, spec: &MollifierSpec, points: &[Vec3]) -> Result<Vec<Vec3>> {
    xi.validate()?;
    let kernel = RadialKernel::new(spec, xi.thickness)?;
    let mut acc = vec![Vec3::zeros(); points.len()];
    let positions = xi.path.positions();
    match kernel.support_radius() {
        Some(r) => {
            let r2 = r * r;
            for w in positions.windows(2) {
                let dx = w[1] - w[0];
                for (p, a) in points.iter().zip(acc.iter_mut()) {
                    let y = p - w[0];
                    if y.norm_squared() < r2 {
                        *a += kernel.eval(&y).cross(&dx);
                    }
                }
            }
        }
        None => {
            for w in positions.windows(2) {
                let dx = w[1] - w[0];
                for (p, a) in points.iter().zip(acc.iter_mut()) {
                    *a += kernel.eval(&(p - w[0])).cross(&dx);
                }
            }
        }
    }
    let c = xi.prefactor();
    Ok(acc.into_iter().map(|a| a * c).collect())
}

pub fn velocity_at(xi: &FilamentParams, spec: &MollifierSpec, x: &Vec3) -> Result<Vec3> {
    Ok(velocity_at_many(xi, spec, std::slice::from_ref(x))?[0])
}

/// Midpoint-rule counterpart of [`velocity_at`].
pub fn velocity_at_stratonovich(xi: &FilamentParams, spec: &MollifierSpec, x: &Vec3) -> Result<Vec3> {
    xi.validate()?;
    let kernel = RadialKernel::new(spec, xi.thickness)?;
    let v = crate::brownian::stratonovich_cross_integral(&xi.path, |p| kernel.eval(&(x - p)));
    Ok(v * xi.prefactor())
}

fn check_direction(e: &Vec3, eps: f64) -> Result<()> {
    if (e.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |e| = {}", e.norm())));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("separation must be >= 0, got {eps}")));
    }
    Ok(())
}

/// `u(x + εe) − u(x)` from one path pass.
pub fn increment(xi: &FilamentParams, spec: &MollifierSpec, x: &Vec3, e: &Vec3, eps: f64) -> Result<Vec3> {
    check_direction(e, eps)?;
    let v = velocity_at_many(xi, spec, &[x + e * eps, *x])?;
    Ok(v[0] - v[1])
}

/// `⟨u(x + εe) − u(x), e⟩`.
pub fn longitudinal_increment(
    xi: &FilamentParams,
    spec: &MollifierSpec,
    x: &Vec3,
    e: &Vec3,
    eps: f64,
) -> Result<f64> {
    Ok(increment(xi, spec, x, e, eps)?.dot(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;
    use crate::rng::StreamFactory;

    fn filament(seed: u64, origin: Vec3, l: f64, t: f64) -> FilamentParams {
        let mut rng = StreamFactory::new(seed).stream(0);
        let path = sample_path(origin, t, l * l / 64.0, &mut rng).unwrap();
        FilamentParams::new(l.powf(1.0 / 3.0), l, t, path).unwrap()
    }

    #[test]
    fn constraint_enforced() {
        let mut rng = StreamFactory::new(1).stream(0);
        let path = sample_path(Vec3::zeros(), 0.01, 1e-4, &mut rng).unwrap();
        assert!(matches!(
            FilamentParams::new(1.0, 0.2, 0.01, path.clone()),
            Err(Error::InvalidFilament(_))
        ));
        assert!(FilamentParams::new(1.0, 0.1, 0.02, path).is_err());
    }

    #[test]
    fn far_path_short_range_is_zero() {
        let f = filament(2, Vec3::new(50.0, 0.0, 0.0), 0.1, 0.01);
        let v = velocity_at(&f, &MollifierSpec::ZeroChargeQuadratic, &Vec3::zeros()).unwrap();
        assert_eq!(v, Vec3::zeros());
        let many = velocity_at_many(
            &f,
            &MollifierSpec::ZeroChargeQuadratic,
            &[Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(many, vec![Vec3::zeros(), Vec3::zeros()]);
    }

    #[test]
    fn many_probes_bitwise_equal_single_calls() {
        let f = filament(3, Vec3::zeros(), 0.2, 0.04);
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic] {
            let pts: Vec<Vec3> = (0..64)
                .map(|i| Vec3::new(0.01 * i as f64 - 0.3, 0.05 * ((i % 7) as f64) - 0.15, 0.02))
                .collect();
            let many = velocity_at_many(&f, &spec, &pts).unwrap();
            for (p, v) in pts.iter().zip(many.iter()) {
                assert_eq!(*v, velocity_at(&f, &spec, p).unwrap());
            }
        }
    }

    #[test]
    fn zero_separation_gives_zero_increment() {
        let f = filament(4, Vec3::zeros(), 0.2, 0.04);
        let e = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(
            longitudinal_increment(&f, &MollifierSpec::Indicator, &Vec3::zeros(), &e, 0.0).unwrap(),
            0.0
        );
        assert!(matches!(
            longitudinal_increment(&f, &MollifierSpec::Indicator, &Vec3::zeros(), &Vec3::new(1.0, 1.0, 0.0), 0.1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn translation_and_rotation_covariance() {
        let f = filament(5, Vec3::new(0.02, -0.01, 0.0), 0.2, 0.04);
        let x = Vec3::new(0.05, 0.03, -0.02);
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic] {
            let base = velocity_at(&f, &spec, &x).unwrap();
            let v = Vec3::new(0.375, -1.25, 2.5);
            let shifted = FilamentParams { path: f.path.translated(&v), ..f.clone() };
            let moved = velocity_at(&shifted, &spec, &(x + v)).unwrap();
            assert!((moved - base).norm() <= 1e-10 * base.norm().max(1e-300));

            let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
            let rotated = FilamentParams { path: f.path.transformed(rot.matrix()), ..f.clone() };
            let lhs = velocity_at(&rotated, &spec, &(rot * x)).unwrap();
            assert!((lhs - rot * base).norm() <= 1e-10 * base.norm().max(1e-300));
        }
    }

    #[test]
    fn reversal_negates_stratonovich_velocity() {
        let f = filament(6, Vec3::zeros(), 0.2, 0.04);
        let rev = FilamentParams { path: f.path.reversed().unwrap(), ..f.clone() };
        let x = Vec3::new(0.03, 0.0, 0.01);
        let a = velocity_at_stratonovich(&f, &MollifierSpec::Indicator, &x).unwrap();
        let b = velocity_at_stratonovich(&rev, &MollifierSpec::Indicator, &x).unwrap();
        assert!((a + b).norm() <= 1e-12 * a.norm());
    }
}
