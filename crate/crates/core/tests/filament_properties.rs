use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use rand::Rng;
use vortex_gas::brownian::sample_path;
use vortex_gas::ensemble::{ball_volume, uniform_in_ball};
use vortex_gas::estimators::fit_power_law;
use vortex_gas::filament::{increment, velocity_at, FilamentParams};
use vortex_gas::kernel::MollifierSpec;
use vortex_gas::rng::StreamFactory;
use vortex_gas::stats::{batch_means, ks_critical_99, ks_two_sample};
use vortex_gas::Vec3;

fn filament(seed: u64, start: Vec3, l: f64, t: f64) -> FilamentParams {
    let mut rng = StreamFactory::new(seed).stream(0);
    let path = sample_path(start, t, (l / 8.0).powi(2).min(t), &mut rng).unwrap();
    FilamentParams::new(1.3, l, t, path).unwrap()
}

fn spec(i: usize) -> MollifierSpec {
    if i == 0 {
        MollifierSpec::Indicator
    } else {
        MollifierSpec::ZeroChargeQuadratic
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn translation_covariance(
        seed in any::<u64>(),
        i in 0usize..2,
        v in prop::array::uniform3(-1.0f64..1.0),
        x in prop::array::uniform3(-0.1f64..0.1),
    ) {
        let s = spec(i);
        let f = filament(seed, Vec3::zeros(), 0.05, 0.01);
        let v = Vec3::from(v);
        let x = Vec3::from(x);
        let moved = FilamentParams { path: f.path.translated(&v), ..f.clone() };
        let a = velocity_at(&f, &s, &x).unwrap();
        let b = velocity_at(&moved, &s, &(x + v)).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn rotation_covariance(
        seed in any::<u64>(),
        i in 0usize..2,
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
        x in prop::array::uniform3(-0.1f64..0.1),
    ) {
        prop_assume!(Vec3::from(axis).norm() > 1e-3);
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::from(axis)), angle).into_inner();
        let s = spec(i);
        let f = filament(seed, Vec3::new(0.02, 0.0, 0.0), 0.05, 0.01);
        let x = Vec3::from(x);
        let turned = FilamentParams { path: f.path.transformed(&r), ..f.clone() };
        let a = r * velocity_at(&f, &s, &x).unwrap();
        let b = velocity_at(&turned, &s, &(r * x)).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn zero_separation_is_zero(seed in any::<u64>(), i in 0usize..2) {
        let f = filament(seed, Vec3::zeros(), 0.1, 0.02);
        prop_assert_eq!(increment(&f, &spec(i), &Vec3::zeros(), &Vec3::x(), 0.0).unwrap(), Vec3::zeros());
    }
}

#[test]
fn ito_velocity_is_symmetric_under_reversal() {
    let s = MollifierSpec::ZeroChargeQuadratic;
    let (l, t): (f64, f64) = (0.05, 0.01);
    let r0 = l + 4.0 * t.sqrt();
    let f = StreamFactory::new(90);
    let draw = |tag: &str, reverse: bool| -> Vec<f64> {
        let g = f.derive(tag);
        (0..8000)
            .map(|i| {
                let mut rng = g.stream(i);
                let start = uniform_in_ball(&Vec3::zeros(), r0, &mut rng);
                let path = sample_path(start, t, (l / 8.0).powi(2), &mut rng).unwrap();
                let path = if reverse { path.reversed().unwrap() } else { path };
                let xi = FilamentParams::new(1.0, l, t, path).unwrap();
                let u = velocity_at(&xi, &s, &Vec3::zeros()).unwrap().x;
                if reverse {
                    -u
                } else {
                    u
                }
            })
            .collect()
    };
    let a = draw("forward", false);
    let b = draw("reversed", true);
    let d = ks_two_sample(&a, &b);
    assert!(d <= ks_critical_99(a.len(), b.len()), "KS {d}");
}

/// `∫ dx₀ W_{x₀}[⟨δ_ε u, e⟩²]` for fixed `(ℓ, T)`, starts drawn from an
/// equal mixture of balls around the two probes.
fn second_moment(eps: f64, seed: u64) -> (f64, f64) {
    let s = MollifierSpec::ZeroChargeQuadratic;
    let (l, t): (f64, f64) = (0.05, 0.0025);
    let r0 = l + 5.0 * t.sqrt();
    let probes = [Vec3::zeros(), Vec3::new(eps, 0.0, 0.0)];
    let vol = ball_volume(r0);
    let f = StreamFactory::new(seed);
    let xs: Vec<f64> = (0..40_000)
        .map(|i| {
            let mut rng = f.stream(i);
            let c = probes[rng.random_range(0..2)];
            let start = uniform_in_ball(&c, r0, &mut rng);
            let inside = probes.iter().filter(|p| (start - *p).norm() <= r0).count() as f64;
            let path = sample_path(start, t, (l / 8.0).powi(2), &mut rng).unwrap();
            let xi = FilamentParams::new(1.0, l, t, path).unwrap();
            let d = increment(&xi, &s, &Vec3::zeros(), &Vec3::x(), eps).unwrap().x;
            d * d * 2.0 * vol / inside
        })
        .collect();
    let m = batch_means(&xs, 16);
    (m.mean, m.stderr)
}

#[test]
fn increment_scaling_below_and_above_thickness() {
    let small: Vec<(f64, (f64, f64))> = [0.002, 0.004, 0.008].iter().map(|&e| (e, second_moment(e, 91))).collect();
    let xs: Vec<f64> = small.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = small.iter().map(|r| r.1 .0).collect();
    let ses: Vec<f64> = small.iter().map(|r| r.1 .1).collect();
    let fit = fit_power_law(&xs, &ys, &ses).unwrap();
    assert!((fit.zeta_hat - 2.0).abs() <= 0.2, "{fit:?}");

    let (a, sa) = second_moment(0.3, 92);
    let (b, sb) = second_moment(0.6, 93);
    assert!((a - b).abs() <= 3.0 * sa.hypot(sb), "{a}±{sa} vs {b}±{sb}");
}
