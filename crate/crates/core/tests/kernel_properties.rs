use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use vortex_gas::kernel::{jacobian, MollifierSpec, RadialKernel};
use vortex_gas::Vec3;

fn smooth_bump() -> MollifierSpec {
    let table: Vec<(f64, f64)> = (0..=64)
        .map(|i| {
            let r = f64::from(i) / 64.0;
            (r, (1.0 - r * r).powi(2))
        })
        .collect();
    MollifierSpec::tabulated(&table).unwrap()
}

fn spec(i: usize) -> MollifierSpec {
    match i {
        0 => MollifierSpec::Indicator,
        1 => MollifierSpec::ZeroChargeQuadratic,
        _ => smooth_bump(),
    }
}

fn point() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-2.0f64..2.0).prop_map(Vec3::from)
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (prop::array::uniform3(-1.0f64..1.0), 0.0f64..std::f64::consts::TAU)
        .prop_filter("nonzero axis", |(a, _)| Vec3::from(*a).norm() > 1e-3)
        .prop_map(|(a, t)| Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::from(a)), t))
}

fn away_from_edge(x: &Vec3, l: f64, margin: f64) -> bool {
    let r = x.norm() / l;
    r > margin && (r - 1.0).abs() > margin
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_equivariance(i in 0usize..3, l in 0.01f64..1.0, x in point(), rot in rotation()) {
        let s = spec(i);
        let k = RadialKernel::new(&s, l).unwrap();
        let lhs = k.eval(&(rot * (x * l)));
        let rhs = rot * k.eval(&(x * l));
        prop_assert!((lhs - rhs).norm() <= 1e-14 * (l + rhs.norm()));
    }

    #[test]
    fn gradient_of_potential(i in 0usize..3, l in 0.05f64..1.0, x in point()) {
        let s = spec(i);
        let k = RadialKernel::new(&s, l).unwrap();
        let y = x * l;
        prop_assume!(away_from_edge(&y, l, 1e-3));
        let h = 1e-4 * l;
        let mut fd = Vec3::zeros();
        for c in 0..3 {
            let mut d = Vec3::zeros();
            d[c] = h;
            fd[c] = (k.potential(&(y + d)) - k.potential(&(y - d))) / (2.0 * h);
        }
        let want = k.eval(&y);
        prop_assert!((fd - want).norm() <= 1e-6 * want.norm() + 1e-12 * l, "{fd} vs {want}");
    }

    #[test]
    fn curl_free(i in 0usize..3, l in 0.01f64..1.0, x in point()) {
        let s = spec(i);
        let k = RadialKernel::new(&s, l).unwrap();
        let y = x * l;
        let h = 1e-4;
        prop_assume!(away_from_edge(&y, l, 3.0 * h / l));
        let j = jacobian(&k, &y, h);
        let curl = Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)]);
        prop_assert!(curl.norm() <= 1e-4, "{curl}");
    }

    #[test]
    fn divergence_is_the_density(i in 0usize..3, l in 0.05f64..1.0, x in point()) {
        let s = spec(i);
        let k = RadialKernel::new(&s, l).unwrap();
        let y = x * l;
        let h = 1e-4 * l;
        prop_assume!(away_from_edge(&y, l, 1e-2));
        let div = jacobian(&k, &y, h).trace();
        prop_assert!((div - s.density(y.norm() / l)).abs() <= 1e-3, "{div}");
    }

    #[test]
    fn near_field_bound_is_uniform_in_thickness(i in 0usize..3, x in prop::array::uniform3(-1.0f64..1.0)) {
        let s = spec(i);
        let x = Vec3::from(x);
        prop_assume!(x.norm() <= 1.0);
        let ratios: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&l| RadialKernel::new(&s, l).unwrap().eval(&(x * l)).norm() / l)
            .collect();
        // |K_1(y)| ≤ ‖ρ‖_∞ |y| / 3 inside the unit ball
        for r in &ratios {
            prop_assert!(*r <= s.sup_norm() / 3.0 + 1e-12);
            prop_assert!((r - ratios[2]).abs() <= 1e-12 * (1.0 + ratios[2]));
        }
    }

    #[test]
    fn charge_is_constant_outside_support(i in 0usize..3, r in 1.0f64..50.0) {
        let s = spec(i);
        prop_assert_eq!(s.charge_profile(r).unwrap(), s.total_charge());
    }

    #[test]
    fn lipschitz_bound(i in 0usize..3, x in prop::array::uniform3(-1.5f64..1.5)) {
        let s = spec(i);
        let k = RadialKernel::new(&s, 1.0).unwrap();
        let x = Vec3::from(x);
        prop_assume!(away_from_edge(&x, 1.0, 1e-3));
        let j = jacobian(&k, &x, 1e-5);
        // ∇K_1 is bounded by ‖ρ‖_∞ times a profile-independent constant
        prop_assert!(j.norm() <= 3.0 * s.sup_norm(), "{}", j.norm());
    }
}

#[test]
fn quadratic_profile_is_short_range_and_indicator_is_not() {
    assert!(MollifierSpec::ZeroChargeQuadratic.is_short_range());
    assert!(!MollifierSpec::Indicator.is_short_range());
    assert!(!smooth_bump().is_short_range());
    let k = RadialKernel::new(&MollifierSpec::ZeroChargeQuadratic, 0.2).unwrap();
    assert_eq!(k.eval(&Vec3::new(0.21, 0.0, 0.0)), Vec3::zeros());
}
