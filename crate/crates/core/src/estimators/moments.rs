//! Moments of a Poisson random measure against its intensity.
//!
//! For `μ` Poisson with intensity `ν` and a functional `φ`,
//!
//! ```text
//! E[μ(φ)^p] = Σ_{n=1}^{p} Σ_{k₁+…+kₙ=p, kᵢ≥1} p! / (n! k₁!⋯kₙ!) · ν(φ^{k₁})⋯ν(φ^{kₙ})
//! ```
//!
//! and for even `p`, `ν(φ^p) ≤ E[μ(φ)^p] ≤ e p^p ν(φ^p)` (lower bound when
//! the odd `ν`-moments below `p` vanish or `φ ≥ 0`).

use serde::{Deserialize, Serialize};

use crate::brownian::StepPolicy;
use crate::ensemble::{intensity_mass, sample_ensemble, sample_filament, LocalizationWindow};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::filament::{velocity_at, FilamentParams};
use crate::gamma::MultifractalMeasure;
use crate::kernel::MollifierSpec;
use crate::rng::StreamFactory;
use crate::stats::{batch_jackknife, batch_means, z_score, Summary};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    /// `clamp(⟨u(x), e⟩, −c, c)`
    Component,
    /// `|clamp(⟨u(x), e⟩, −c, c)|`
    AbsComponent,
    Zero,
}

/// A bounded functional of one filament: a clipped velocity component at a probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub kind: PhiKind,
    pub probe: Vec3,
    pub direction: Vec3,
    pub clip: f64,
}

impl PhiSpec {
    pub fn eval(&self, f: &FilamentParams, spec: &MollifierSpec) -> Result<f64> {
        if self.kind == PhiKind::Zero {
            return Ok(0.0);
        }
        let v = velocity_at(f, spec, &self.probe)?.dot(&self.direction).clamp(-self.clip, self.clip);
        Ok(match self.kind {
            PhiKind::AbsComponent => v.abs(),
            _ => v,
        })
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `E[μ(φ)^p]` for `p = 1..=nu.len()` from `nu[k−1] = ν(φ^k)`, summing over
/// compositions of `p`.
pub fn moments_by_compositions(nu: &[f64]) -> Vec<f64> {
    fn walk(rest: u32, parts: u32, acc: f64, nu: &[f64], p_fact: f64, out: &mut f64) {
        if rest == 0 {
            *out += p_fact / factorial(parts) * acc;
            return;
        }
        for k in 1..=rest {
            walk(rest - k, parts + 1, acc * nu[(k - 1) as usize] / factorial(k), nu, p_fact, out);
        }
    }
    (1..=nu.len() as u32)
        .map(|p| {
            let mut total = 0.0;
            walk(p, 0, 1.0, nu, factorial(p), &mut total);
            total
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: u32,
    /// Direct Monte Carlo of `E[μ(φ)^p]` over realizations.
    pub mc: Summary,
    /// Composition-sum prediction from estimated `ν(φ^k)`.
    pub predicted: f64,
    pub predicted_stderr: f64,
    pub z: f64,
    pub ratio: f64,
    /// `ν(φ^p)`.
    pub lower_bound: f64,
    /// `e p^p ν(|φ|^p)`, even `p` only.
    pub upper_bound: Option<f64>,
    /// `(E − ν(φ^p)) / se`, positive when the lower bound holds.
    pub lower_margin_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub intensity_mass: f64,
    pub nu_moments: Vec<Summary>,
    pub rows: Vec<MomentRow>,
}

#[derive(Clone, Debug)]
pub struct MomentPlan<'a> {
    pub gamma: &'a MultifractalMeasure,
    pub spec: &'a MollifierSpec,
    pub window: LocalizationWindow,
    pub phi: PhiSpec,
    pub p_max: u32,
    pub policy: StepPolicy,
    pub max_expected_count: f64,
    pub batches: usize,
}

/// Compares Monte-Carlo moments of `μ_{η,R}(φ)` with the composition formula
/// fed by independent single-filament estimates of `ν(φ^k)`.
pub fn poisson_moment_check(
    plan: &MomentPlan<'_>,
    intensity_budget: u64,
    realizations: u64,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<MomentReport> {
    if plan.p_max == 0 || plan.p_max > 6 {
        return Err(Error::InvalidArgument(format!("p_max must lie in 1..=6, got {}", plan.p_max)));
    }
    if !(plan.phi.clip > 0.0) || (plan.phi.direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("φ needs a positive clip and a unit direction".into()));
    }
    if intensity_budget < 2 || realizations < 2 {
        return Err(Error::InvalidArgument("budgets must be >= 2".into()));
    }
    let mass = intensity_mass(plan.gamma, &plan.window)?;
    let p_max = plan.p_max as usize;

    let single = streams.derive("intensity");
    let phis = exec.try_map(intensity_budget, |i| {
        let mut rng = single.stream(i);
        let f = sample_filament(plan.gamma, &plan.window, &plan.policy, &mut rng)?;
        plan.phi.eval(&f, plan.spec)
    })?;
    let columns: Vec<Vec<f64>> = (1..=p_max as i32)
        .map(|k| phis.iter().map(|v| mass * v.powi(k)).collect())
        .collect();
    let nu_moments: Vec<Summary> = columns.iter().map(|c| batch_means(c, plan.batches)).collect();

    let field = streams.derive("field");
    let sums = exec.try_map(realizations, |i| {
        let mut rng = field.stream(i);
        let r = sample_ensemble(plan.gamma, &plan.window, &plan.policy, plan.max_expected_count, i, &mut rng)?;
        let mut total = 0.0;
        for f in &r.filaments {
            total += plan.phi.eval(f, plan.spec)?;
        }
        Ok(total)
    })?;

    let rows = (1..=plan.p_max)
        .map(|p| {
            let powers: Vec<f64> = sums.iter().map(|s| s.powi(p as i32)).collect();
            let mc = batch_means(&powers, plan.batches);
            let (predicted, predicted_stderr) =
                batch_jackknife(&columns, plan.batches, |m| moments_by_compositions(m)[p as usize - 1]);
            let lower = nu_moments[p as usize - 1];
            let upper_bound = (p % 2 == 0).then(|| std::f64::consts::E * (p as f64).powi(p as i32) * lower.mean);
            MomentRow {
                p,
                mc,
                predicted,
                predicted_stderr,
                z: z_score(mc.mean - predicted, mc.stderr.hypot(predicted_stderr)),
                ratio: if predicted != 0.0 { mc.mean / predicted } else { f64::NAN },
                lower_bound: lower.mean,
                upper_bound,
                lower_margin_z: z_score(mc.mean - lower.mean, mc.stderr.hypot(lower.stderr)),
            }
        })
        .collect();
    Ok(MomentReport {
        intensity_mass: mass,
        nu_moments,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::Atom;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Moment–cumulant recursion `m_p = Σ_j C(p−1, j−1) κ_j m_{p−j}`.
    fn moments_by_recursion(kappa: &[f64]) -> Vec<f64> {
        let mut m = vec![1.0];
        for p in 1..=kappa.len() {
            let mut s = 0.0;
            let mut binom = 1.0;
            for j in 1..=p {
                s += binom * kappa[j - 1] * m[p - j];
                binom = binom * (p - j) as f64 / j as f64;
            }
            m.push(s);
        }
        m[1..].to_vec()
    }

    #[test]
    fn first_moments_closed_form() {
        let nu = [0.3, 1.7, -0.4, 2.2];
        let m = moments_by_compositions(&nu);
        assert_relative_eq!(m[0], 0.3);
        assert_relative_eq!(m[1], 0.3 * 0.3 + 1.7, max_relative = 1e-14);
        // centred: E[μ^4] = ν4 + 3 ν2²
        let c = moments_by_compositions(&[0.0, 1.7, 0.0, 2.2]);
        assert_relative_eq!(c[3], 2.2 + 3.0 * 1.7 * 1.7, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn compositions_match_cumulant_recursion(nu in proptest::collection::vec(-2.0f64..2.0, 1..7)) {
            let a = moments_by_compositions(&nu);
            let b = moments_by_recursion(&nu);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    fn plan<'a>(gamma: &'a MultifractalMeasure, kind: PhiKind) -> MomentPlan<'a> {
        MomentPlan {
            gamma,
            spec: &MollifierSpec::Indicator,
            window: LocalizationWindow::new(0.5, 0.8).unwrap(),
            phi: PhiSpec { kind, probe: Vec3::zeros(), direction: Vec3::z(), clip: 1.0 },
            p_max: 4,
            policy: StepPolicy { resolution_scale: 4.0, dt_min: 1e-6 },
            max_expected_count: 1e6,
            batches: 16,
        }
    }

    #[test]
    fn zero_functional_has_zero_moments() {
        let g = MultifractalMeasure::new(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 2.0, b: 0.0 }], 1.0).unwrap();
        let r = poisson_moment_check(&plan(&g, PhiKind::Zero), 200, 200, &Executor::default(), &StreamFactory::new(1)).unwrap();
        for row in r.rows {
            assert_eq!(row.mc.mean, 0.0);
            assert_eq!(row.predicted, 0.0);
        }
    }

    #[test]
    fn nonnegative_functional_respects_lower_bound() {
        let g = MultifractalMeasure::new(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 2.0, b: 0.0 }], 1.0).unwrap();
        let r = poisson_moment_check(&plan(&g, PhiKind::AbsComponent), 4000, 4000, &Executor::default(), &StreamFactory::new(2)).unwrap();
        for row in &r.rows {
            assert!(row.mc.mean >= row.lower_bound || row.lower_margin_z > -3.0, "{row:?}");
            if let Some(u) = row.upper_bound {
                assert!(row.mc.mean <= u);
            }
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let g = MultifractalMeasure::k41();
        let mut p = plan(&g, PhiKind::Component);
        p.p_max = 7;
        assert!(poisson_moment_check(&p, 10, 10, &Executor::default(), &StreamFactory::new(1)).is_err());
    }
}
