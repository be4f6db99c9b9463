//! Radial Biot–Savart kernels `K_ℓ = ∇V_ℓ` for mollifiers supported in the
//! unit ball.
//!
//! For a radial profile `ρ` with charge `Q(r) = ∫_{B(0,r)} ρ`, Gauss' theorem
//! gives `K_1(y) = Q(|y|) y / (4π |y|³)`, and the thickened kernel satisfies
//! `K_ℓ(y) = ℓ K_1(y/ℓ)`. Every kernel is therefore `g(|y|/ℓ) · y` with the
//! radial factor `g(r) = Q(r) / (4π r³)`. Outside the unit ball `Q` is the
//! constant total charge: zero charge means the kernel vanishes identically
//! there (short range), non-zero charge leaves a Coulomb tail (long range).

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type Vec3 = Vector3<f64>;

/// Number of nodes of the radial charge table used by tabulated profiles.
pub const CHARGE_GRID_POINTS: usize = 1024;

/// Relative size of the total charge below which a tabulated profile is
/// treated as zero-charge.
const SHORT_RANGE_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Indicator,
    ZeroChargeQuadratic,
    Tabulated,
}

/// A radial profile given by `(r, ρ(r))` knots, linearly interpolated and
/// zero beyond the last knot (and beyond `r = 1`).
///
/// A table whose charge is nearly zero (interpolating a zero-charge profile)
/// is shifted by the constant on the unit ball that makes it exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedProfile {
    knots: Vec<(f64, f64)>,
    charge: Vec<f64>,
    slopes: Vec<f64>,
    sup_norm: f64,
    short_range: bool,
    offset: f64,
}

impl TabulatedProfile {
    pub fn new(table: &[(f64, f64)]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidSpec("empty mollifier table".into()));
        }
        for &(r, v) in table {
            if !r.is_finite() || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "non-finite table entry ({r}, {v})"
                )));
            }
            if r < 0.0 {
                return Err(Error::InvalidSpec(format!("negative radius {r}")));
            }
            if r > 1.0 && v != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "profile must vanish outside the unit ball, got ρ({r}) = {v}"
                )));
            }
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidSpec(
                "table radii must be strictly increasing".into(),
            ));
        }
        let knots: Vec<(f64, f64)> = table.iter().copied().filter(|k| k.0 <= 1.0).collect();
        let sup_norm = knots.iter().fold(0.0f64, |m, k| m.max(k.1.abs()));
        if sup_norm == 0.0 {
            return Err(Error::InvalidSpec("profile is identically zero".into()));
        }
        let mut p = TabulatedProfile {
            knots,
            charge: Vec::new(),
            slopes: Vec::new(),
            sup_norm,
            short_range: false,
            offset: 0.0,
        };
        p.build_charge_table();
        let total = *p.charge.last().expect("grid is non-empty");
        if total.abs() <= SHORT_RANGE_TOL * 4.0 * PI / 3.0 * sup_norm {
            p.offset = 3.0 * total / (4.0 * PI);
            p.short_range = true;
            let tail = if p.knots[p.knots.len() - 1].0 < 1.0 { p.offset.abs() } else { 0.0 };
            p.sup_norm = p.knots.iter().fold(tail, |m, k| m.max((k.1 - p.offset).abs()));
            p.build_charge_table();
        }
        Ok(p)
    }

    fn grid_step() -> f64 {
        1.0 / (CHARGE_GRID_POINTS - 1) as f64
    }

    pub fn density(&self, r: f64) -> f64 {
        if r > 1.0 {
            return 0.0;
        }
        self.raw_density(r) - self.offset
    }

    fn raw_density(&self, r: f64) -> f64 {
        let last = self.knots[self.knots.len() - 1];
        if r > last.0 {
            return 0.0;
        }
        let first = self.knots[0];
        if r <= first.0 {
            return first.1;
        }
        let i = self.knots.partition_point(|k| k.0 <= r);
        let (r0, v0) = self.knots[i - 1];
        if i == self.knots.len() {
            return v0;
        }
        let (r1, v1) = self.knots[i];
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }

    fn build_charge_table(&mut self) {
        let h = Self::grid_step();
        let tol = 1e-15 * self.sup_norm;
        let mut q = Vec::with_capacity(CHARGE_GRID_POINTS);
        q.push(0.0);
        for i in 1..CHARGE_GRID_POINTS {
            let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
            let piece = quad::integrate(|s| 4.0 * PI * self.density(s) * s * s, a, b, tol);
            q.push(q[i - 1] + piece);
        }
        self.slopes = pchip_slopes(&q, h);
        self.charge = q;
    }

    /// `Q(r)` from the monotone cubic interpolant of the charge table.
    pub fn charge(&self, r: f64) -> f64 {
        let h = Self::grid_step();
        if r >= 1.0 {
            return self.charge[CHARGE_GRID_POINTS - 1];
        }
        if r <= 0.0 {
            return 0.0;
        }
        if r < h {
            return 4.0 * PI * r * r * r * self.small_radius_factor(r);
        }
        let i = ((r / h) as usize).min(CHARGE_GRID_POINTS - 2);
        let t = (r - i as f64 * h) / h;
        let (q0, q1) = (self.charge[i], self.charge[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * q0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * q1
            + (t3 - t2) * m1
    }

    /// `Q(r)/(4π r³)` for `r` below the first grid node, from the linear
    /// density on `[0, h]`; tends to `ρ(0)/3` as `r → 0`.
    fn small_radius_factor(&self, r: f64) -> f64 {
        let h = Self::grid_step();
        let rho0 = self.density(0.0);
        let c = (self.density(h) - rho0) / h;
        rho0 / 3.0 + c * r / 4.0
    }

    fn radial_factor(&self, r: f64) -> f64 {
        if r < Self::grid_step() {
            self.small_radius_factor(r)
        } else {
            self.charge(r) / (4.0 * PI * r * r * r)
        }
    }
}

/// Fritsch–Carlson derivatives on a uniform grid.
fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (d[k - 1], d[k]);
        m[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
    }
    let edge = |d0: f64, d1: f64| {
        let m = 0.5 * (3.0 * d0 - d1);
        if m.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    };
    if n >= 3 {
        m[0] = edge(d[0], d[1]);
        m[n - 1] = edge(d[n - 2], d[n - 3]);
    } else {
        m[0] = d[0];
        m[n - 1] = d[0];
    }
    m
}

/// The mollifier `ρ`: a bounded radial profile supported in `B(0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum MollifierSpec {
    /// `ρ = 1` on the unit ball; total charge `4π/3`.
    Indicator,
    /// `ρ(r) = 1 − (5/3) r²`; total charge zero.
    ZeroChargeQuadratic,
    Tabulated(TabulatedProfile),
}

impl MollifierSpec {
    pub fn tabulated(table: &[(f64, f64)]) -> Result<Self> {
        TabulatedProfile::new(table).map(MollifierSpec::Tabulated)
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            MollifierSpec::Indicator => ProfileKind::Indicator,
            MollifierSpec::ZeroChargeQuadratic => ProfileKind::ZeroChargeQuadratic,
            MollifierSpec::Tabulated(_) => ProfileKind::Tabulated,
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        match self {
            MollifierSpec::Indicator => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            MollifierSpec::ZeroChargeQuadratic => {
                if r <= 1.0 {
                    1.0 - 5.0 / 3.0 * r * r
                } else {
                    0.0
                }
            }
            MollifierSpec::Tabulated(t) => t.density(r),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            MollifierSpec::Indicator => 1.0,
            MollifierSpec::ZeroChargeQuadratic => 1.0,
            MollifierSpec::Tabulated(t) => t.sup_norm,
        }
    }

    /// `Q(r) = ∫_{B(0, min(r,1))} ρ`.
    pub fn charge_profile(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
        }
        let s = r.min(1.0);
        Ok(match self {
            MollifierSpec::Indicator => 4.0 * PI / 3.0 * s * s * s,
            MollifierSpec::ZeroChargeQuadratic => 4.0 * PI / 3.0 * (s.powi(3) - s.powi(5)),
            MollifierSpec::Tabulated(t) => t.charge(s),
        })
    }

    pub fn total_charge(&self) -> f64 {
        self.charge_profile(1.0).expect("r = 1 is a valid radius")
    }

    pub fn is_short_range(&self) -> bool {
        match self {
            MollifierSpec::Indicator => false,
            MollifierSpec::ZeroChargeQuadratic => true,
            MollifierSpec::Tabulated(t) => t.short_range,
        }
    }

    /// `g(r)` with `K_1(y) = g(|y|) y`.
    #[inline]
    pub fn radial_factor(&self, r: f64) -> f64 {
        match self {
            MollifierSpec::Indicator => {
                if r < 1.0 {
                    1.0 / 3.0
                } else {
                    1.0 / (3.0 * r * r * r)
                }
            }
            MollifierSpec::ZeroChargeQuadratic => {
                if r < 1.0 {
                    (1.0 - r * r) / 3.0
                } else {
                    0.0
                }
            }
            MollifierSpec::Tabulated(t) => {
                if r <= 1.0 {
                    t.radial_factor(r)
                } else if t.short_range {
                    0.0
                } else {
                    t.charge[CHARGE_GRID_POINTS - 1] / (4.0 * PI * r * r * r)
                }
            }
        }
    }
}

/// `K_ℓ` for a given mollifier and thickness.
#[derive(Clone, Copy, Debug)]
pub struct RadialKernel<'a> {
    spec: &'a MollifierSpec,
    thickness: f64,
    inv_thickness: f64,
}

impl<'a> RadialKernel<'a> {
    pub fn new(spec: &'a MollifierSpec, thickness: f64) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel thickness must be positive, got {thickness}"
            )));
        }
        Ok(RadialKernel {
            spec,
            thickness,
            inv_thickness: 1.0 / thickness,
        })
    }

    pub fn spec(&self) -> &'a MollifierSpec {
        self.spec
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    /// Radius outside which the kernel is exactly zero, if any.
    pub fn support_radius(&self) -> Option<f64> {
        self.spec.is_short_range().then_some(self.thickness)
    }

    #[inline]
    pub fn eval(&self, y: &Vec3) -> Vec3 {
        let r = y.norm() * self.inv_thickness;
        y * self.spec.radial_factor(r)
    }

    /// Newtonian potential `V_ℓ` by radial quadrature of the profile.
    ///
    /// Shell theorem: `V_ℓ(x) = −ℓ³ ∫₀^{min(r,1)} ρ t² dt / |x| − ℓ² ∫_{min(r,1)}^1 ρ t dt`
    /// with `r = |x|/ℓ`. Computed independently of the closed-form charges so
    /// that it can serve as a differentiation oracle for [`RadialKernel::eval`].
    pub fn potential(&self, x: &Vec3) -> f64 {
        let l = self.thickness;
        let s = x.norm();
        let r = (s / l).min(1.0);
        let tol = 1e-16 * self.spec.sup_norm();
        let tail = self.piecewise(|t| self.spec.density(t) * t, r, 1.0, tol);
        if s == 0.0 {
            return -l * l * tail;
        }
        let inner = self.piecewise(|t| self.spec.density(t) * t * t, 0.0, r, tol);
        -l * l * l * inner / s - l * l * tail
    }

    /// Quadrature split at the profile's kinks.
    fn piecewise<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: f64) -> f64 {
        let mut cuts = vec![a];
        if let MollifierSpec::Tabulated(t) = self.spec {
            cuts.extend(t.knots.iter().map(|k| k.0).filter(|&r| r > a && r < b));
        }
        cuts.push(b);
        cuts.windows(2).map(|w| quad::integrate(&f, w[0], w[1], tol)).sum()
    }
}

/// Outcome of one kernel self-check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

pub fn jacobian(k: &RadialKernel<'_>, x: &Vec3, h: f64) -> nalgebra::Matrix3<f64> {
    let mut j = nalgebra::Matrix3::zeros();
    for c in 0..3 {
        let mut dx = Vec3::zeros();
        dx[c] = h;
        let col = (k.eval(&(x + dx)) - k.eval(&(x - dx))) / (2.0 * h);
        j.set_column(c, &col);
    }
    j
}

/// Runs the kernel invariant suite on deterministic pseudo-random points.
pub fn invariant_suite(spec: &MollifierSpec, seed: u64) -> Vec<CheckResult> {
    use rand::Rng;
    let mut rng = crate::rng::StreamFactory::new(seed).derive("kernel-check").stream(0);
    let unit_point = |scale: f64, rng: &mut crate::rng::Stream| {
        Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ) * scale
    };
    let mut out = Vec::new();
    let sup = spec.sup_norm();

    // rotation equivariance
    let mut worst: f64 = 0.0;
    for &l in &[0.05, 0.3, 1.0] {
        let k = RadialKernel::new(spec, l).expect("positive thickness");
        for _ in 0..100 {
            let axis = unit_point(1.0, &mut rng);
            let angle = rng.random_range(0.0..2.0 * PI);
            let rot = nalgebra::Rotation3::new(axis.normalize() * angle);
            let x = unit_point(2.0 * l, &mut rng);
            let lhs = k.eval(&(rot * x));
            let rhs = rot * k.eval(&x);
            worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1e-300));
        }
    }
    out.push(CheckResult::at_most("rotation_equivariance_rel", worst, 1e-12));

    // gradient consistency with the Newtonian potential
    let mut worst: f64 = 0.0;
    for &l in &[0.1, 1.0] {
        let k = RadialKernel::new(spec, l).expect("positive thickness");
        for x in [
            Vec3::new(0.3, 0.1, 0.0),
            Vec3::new(0.05, -0.02, 0.03),
            Vec3::new(1.5, 0.7, -0.4),
            Vec3::new(0.0, 0.0, 0.6 * l),
        ] {
            let h = 1e-4 * x.norm().min(l);
            let mut grad = Vec3::zeros();
            for c in 0..3 {
                let mut dx = Vec3::zeros();
                dx[c] = h;
                grad[c] = (k.potential(&(x + dx)) - k.potential(&(x - dx))) / (2.0 * h);
            }
            let kv = k.eval(&x);
            let scale = kv.norm().max(1e-3 * l * sup);
            worst = worst.max((grad - kv).norm() / scale);
        }
    }
    out.push(CheckResult::at_most("gradient_consistency_rel", worst, 1e-6));

    // curl-free and divergence
    let (mut curl_worst, mut div_worst): (f64, f64) = (0.0, 0.0);
    let k = RadialKernel::new(spec, 0.5).expect("positive thickness");
    let h = 1e-4;
    let mut count = 0;
    while count < 100 {
        let x = unit_point(1.0, &mut rng);
        let r = x.norm() / k.thickness();
        // stay away from the origin and the edge of the support where ρ may jump
        if r < 0.05 || (r - 1.0).abs() < 0.01 {
            continue;
        }
        count += 1;
        let j = jacobian(&k, &x, h);
        let curl = Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)]);
        curl_worst = curl_worst.max(curl.norm());
        div_worst = div_worst.max((j.trace() - spec.density(r)).abs());
    }
    out.push(CheckResult::at_most("curl_free_abs", curl_worst, 1e-4));
    out.push(CheckResult::at_most("divergence_equals_density_abs", div_worst, 1e-3));

    // near-field bound |K_ℓ(y)| ≤ ‖ρ‖∞ ℓ / 3 on |y| ≤ ℓ
    let mut worst: f64 = 0.0;
    for &l in &[0.01, 0.1, 1.0] {
        let k = RadialKernel::new(spec, l).expect("positive thickness");
        for i in 0..=200 {
            let y = Vec3::new(l * i as f64 / 200.0, 0.0, 0.0);
            worst = worst.max(k.eval(&y).norm() / l);
        }
    }
    out.push(CheckResult::at_most("near_field_bound", worst, sup / 3.0 * (1.0 + 1e-9)));

    // Lipschitz bound |∇K_1| ≤ (5/3)‖ρ‖∞
    let k1 = RadialKernel::new(spec, 1.0).expect("positive thickness");
    let mut worst: f64 = 0.0;
    for ix in 0..24 {
        for iy in 0..24 {
            let x = Vec3::new(-1.5 + 3.0 * ix as f64 / 23.0, -1.5 + 3.0 * iy as f64 / 23.0, 0.013);
            let r = x.norm();
            if (r - 1.0).abs() < 1e-3 {
                continue;
            }
            worst = worst.max(jacobian(&k1, &x, 1e-5).norm());
        }
    }
    out.push(CheckResult::at_most("lipschitz_bound", worst, 5.0 / 3.0 * sup));

    // charge confinement
    let q1 = spec.total_charge();
    let q2 = spec.charge_profile(2.0).expect("valid radius");
    out.push(CheckResult::at_most("charge_confinement_abs", (q2 - q1).abs(), 1e-12));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic_table() -> MollifierSpec {
        let table: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let r = i as f64 / 200.0;
                (r, 1.0 - 5.0 / 3.0 * r * r)
            })
            .collect();
        MollifierSpec::tabulated(&table).unwrap()
    }

    #[test]
    fn charge_profile_examples() {
        let ind = MollifierSpec::Indicator;
        assert_relative_eq!(ind.charge_profile(0.5).unwrap(), 4.0 * PI / 3.0 * 0.125, max_relative = 1e-15);
        assert_relative_eq!(ind.charge_profile(2.0).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_eq!(MollifierSpec::ZeroChargeQuadratic.charge_profile(1.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_charges_match_quadrature() {
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic] {
            for &r in &[0.1, 0.37, 0.8, 1.0] {
                let q = quad::integrate(|s| 4.0 * PI * spec.density(s) * s * s, 0.0, r, 1e-14);
                assert!((spec.charge_profile(r).unwrap() - q).abs() < 1e-12, "{spec:?} r={r}");
            }
        }
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(MollifierSpec::Indicator.charge_profile(-0.1).is_err());
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(matches!(
            MollifierSpec::tabulated(&[(0.0, 1.0), (0.5, f64::NAN)]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(MollifierSpec::tabulated(&[(0.0, 1.0), (1.5, 1.0)]).is_err());
        assert!(MollifierSpec::tabulated(&[(0.5, 1.0), (0.2, 1.0)]).is_err());
        assert!(MollifierSpec::tabulated(&[]).is_err());
    }

    #[test]
    fn tabulated_quadratic_matches_builtin() {
        let tab = quadratic_table();
        assert!(tab.is_short_range());
        for &r in &[0.0005, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0, 3.0] {
            let a = tab.charge_profile(r).unwrap();
            let b = MollifierSpec::ZeroChargeQuadratic.charge_profile(r).unwrap();
            assert!((a - b).abs() < 2e-5, "r={r}: {a} vs {b}");
        }
        let k1 = RadialKernel::new(&tab, 0.2).unwrap();
        let k2 = RadialKernel::new(&MollifierSpec::ZeroChargeQuadratic, 0.2).unwrap();
        for x in [Vec3::new(0.05, 0.01, 0.0), Vec3::new(0.0, 0.15, 0.1), Vec3::new(0.3, 0.0, 0.0)] {
            assert!((k1.eval(&x) - k2.eval(&x)).norm() < 1e-5);
        }
    }

    #[test]
    fn tabulated_indicator_is_long_range() {
        let tab = MollifierSpec::tabulated(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(!tab.is_short_range());
        assert_relative_eq!(tab.total_charge(), 4.0 * PI / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn far_field_indicator_example() {
        // Q ℓ³ x / (4π|x|³) with Q = 4π/3, ℓ = 0.1, |x| = 0.5 gives 1e-3 / (3 · 0.25)
        let k = RadialKernel::new(&MollifierSpec::Indicator, 0.1).unwrap();
        let v = k.eval(&Vec3::new(0.5, 0.0, 0.0));
        assert_relative_eq!(v.x, 1.0 / 750.0, max_relative = 1e-14);
        assert_eq!((v.y, v.z), (0.0, 0.0));
        // independent route: central difference of the quadrature potential
        let h = 1e-6;
        let dv = (k.potential(&Vec3::new(0.5 + h, 0.0, 0.0)) - k.potential(&Vec3::new(0.5 - h, 0.0, 0.0)))
            / (2.0 * h);
        assert_relative_eq!(dv, v.x, max_relative = 1e-6);
    }

    #[test]
    fn kernel_vanishes_at_origin() {
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic, quadratic_table()] {
            for &l in &[0.01, 0.5, 1.0] {
                assert_eq!(RadialKernel::new(&spec, l).unwrap().eval(&Vec3::zeros()), Vec3::zeros());
            }
        }
    }

    #[test]
    fn short_range_kernel_vanishes_outside_support() {
        let k = RadialKernel::new(&MollifierSpec::ZeroChargeQuadratic, 0.1).unwrap();
        assert_eq!(k.eval(&Vec3::new(0.2, 0.0, 0.0)), Vec3::zeros());
        assert_eq!(k.support_radius(), Some(0.1));
        assert_eq!(k.potential(&Vec3::new(0.2, 0.0, 0.0)).abs() < 1e-16, true);
        assert_eq!(RadialKernel::new(&MollifierSpec::Indicator, 0.1).unwrap().support_radius(), None);
    }

    #[test]
    fn potential_far_field_example() {
        let k = RadialKernel::new(&MollifierSpec::Indicator, 0.1).unwrap();
        assert_relative_eq!(k.potential(&Vec3::new(0.0, 0.5, 0.0)), -1.0 / 1500.0, max_relative = 1e-12);
    }

    #[test]
    fn finite_difference_gradient_matches_kernel() {
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic] {
            let k = RadialKernel::new(&spec, 1.0).unwrap();
            let x = Vec3::new(0.3, 0.1, 0.0);
            let h = 1e-5;
            let mut g = Vec3::zeros();
            for c in 0..3 {
                let mut d = Vec3::zeros();
                d[c] = h;
                g[c] = (k.potential(&(x + d)) - k.potential(&(x - d))) / (2.0 * h);
            }
            let kv = k.eval(&x);
            assert!((g - kv).norm() / kv.norm() < 1e-6, "{spec:?}: {g} vs {kv}");
        }
    }

    #[test]
    fn scaling_identity() {
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic] {
            let l = 0.07;
            let kl = RadialKernel::new(&spec, l).unwrap();
            let k1 = RadialKernel::new(&spec, 1.0).unwrap();
            for y in [Vec3::new(0.01, 0.02, -0.03), Vec3::new(0.2, 0.0, 0.1)] {
                let lhs = kl.eval(&y);
                let rhs = k1.eval(&(y / l)) * l;
                assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn invariant_suite_passes_for_builtins_and_tables() {
        for spec in [MollifierSpec::Indicator, MollifierSpec::ZeroChargeQuadratic, quadratic_table()] {
            for check in invariant_suite(&spec, 7) {
                assert!(check.pass, "{:?}: {:?}", spec.kind(), check);
            }
        }
    }
}
