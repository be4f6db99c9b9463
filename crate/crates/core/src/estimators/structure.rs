use super::sampler::NuSampler;
use super::{validate_grid, validate_orders, EstimatorKind, GridPoint, StructureFunctionEstimate, StructureKind};
use crate::brownian::StepPolicy;
use crate::ensemble::{field_at_many, sample_ensemble, LocalizationWindow};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::filament::velocity_at_many;
use crate::gamma::MultifractalMeasure;
use crate::kernel::MollifierSpec;
use crate::rng::StreamFactory;
use crate::stats::batch_means;
use crate::Vec3;

/// Minimum number of samples per grid point.
pub const MIN_BUDGET: u64 = 100;

/// Everything both structure-function estimators need besides randomness.
#[derive(Clone, Debug)]
pub struct StructurePlan<'a> {
    pub spec: &'a MollifierSpec,
    pub probe: Vec3,
    pub direction: Vec3,
    pub epsilons: Vec<f64>,
    pub orders: Vec<u32>,
    pub kinds: Vec<StructureKind>,
    pub batches: usize,
}

impl StructurePlan<'_> {
    fn validate(&self) -> Result<()> {
        validate_orders(&self.orders, &self.kinds)?;
        validate_grid(&self.epsilons)?;
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("probe direction must be a unit vector".into()));
        }
        Ok(())
    }

    fn columns(&self) -> Vec<(StructureKind, u32)> {
        self.kinds
            .iter()
            .flat_map(|k| self.orders.iter().map(move |p| (*k, *p)))
            .collect()
    }

    fn assemble(
        &self,
        estimator: EstimatorKind,
        per_eps: Vec<Vec<Vec<f64>>>,
        scale: f64,
    ) -> Vec<StructureFunctionEstimate> {
        // per_eps[j][sample][column]
        self.columns()
            .into_iter()
            .enumerate()
            .map(|(c, (kind, p))| StructureFunctionEstimate {
                p,
                kind,
                estimator,
                grid: self
                    .epsilons
                    .iter()
                    .zip(per_eps.iter())
                    .map(|(&eps, samples)| {
                        let col: Vec<f64> = samples.iter().map(|s| s[c]).collect();
                        let s = batch_means(&col, self.batches).scaled(scale);
                        GridPoint { eps, mean: s.mean, stderr: s.stderr, n: s.n }
                    })
                    .collect(),
            })
            .collect()
    }
}

/// Single-filament estimator of `γ[W(⟨δ_ε u, e⟩^p)]` (and `|δ_ε u|^p`) on
/// the whole ε-grid, `budget` independent samples per grid point.
pub fn single_filament_structure(
    plan: &StructurePlan<'_>,
    sampler: &NuSampler<'_>,
    budget: u64,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<Vec<StructureFunctionEstimate>> {
    plan.validate()?;
    sampler.validate()?;
    if budget < MIN_BUDGET {
        return Err(Error::InvalidArgument(format!("budget must be >= {MIN_BUDGET}, got {budget}")));
    }
    let z = sampler.mass()?;
    let columns = plan.columns();
    for &eps in &plan.epsilons {
        if eps <= sampler.eta || eps >= sampler.gamma.l_max() {
            log::warn!("ε = {eps} lies outside (η, ℓ_max) = ({}, {})", sampler.eta, sampler.gamma.l_max());
        }
    }
    let mut per_eps = Vec::with_capacity(plan.epsilons.len());
    for (j, &eps) in plan.epsilons.iter().enumerate() {
        let sub = streams.derive_index(j as u64);
        let probes = [plan.probe, plan.probe + plan.direction * eps];
        let samples = exec.try_map(budget, |i| {
            let mut rng = sub.stream(i);
            let (f, w) = sampler.sample(&probes, &mut rng)?;
            let v = velocity_at_many(&f, plan.spec, &probes)?;
            let delta = v[1] - v[0];
            Ok(columns.iter().map(|(k, p)| w * k.value(&delta, &plan.direction, *p)).collect::<Vec<f64>>())
        })?;
        per_eps.push(samples);
    }
    Ok(plan.assemble(EstimatorKind::SingleFilament, per_eps, z))
}

/// One grid point of [`single_filament_structure`].
#[allow(clippy::too_many_arguments)]
pub fn single_filament_moment(
    spec: &MollifierSpec,
    sampler: &NuSampler<'_>,
    p: u32,
    eps: f64,
    direction: Vec3,
    kind: StructureKind,
    budget: u64,
    batches: usize,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<GridPoint> {
    let plan = StructurePlan {
        spec,
        probe: Vec3::zeros(),
        direction,
        epsilons: vec![eps],
        orders: vec![p],
        kinds: vec![kind],
        batches,
    };
    Ok(single_filament_structure(&plan, sampler, budget, exec, streams)?[0].grid[0])
}

/// Full-field estimator: moments of increments of the localized Poisson
/// field over independent realizations.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_structure_function(
    plan: &StructurePlan<'_>,
    gamma: &MultifractalMeasure,
    window: &LocalizationWindow,
    policy: &StepPolicy,
    max_expected_count: f64,
    realizations: u64,
    exec: &Executor,
    streams: &StreamFactory,
) -> Result<Vec<StructureFunctionEstimate>> {
    plan.validate()?;
    if realizations < MIN_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BUDGET} realizations, got {realizations}"
        )));
    }
    let mut probes = vec![plan.probe];
    probes.extend(plan.epsilons.iter().map(|e| plan.probe + plan.direction * *e));
    for x in &probes {
        window.check_probe(gamma, x)?;
    }
    let columns = plan.columns();
    let rows = exec.try_map(realizations, |i| {
        let mut rng = streams.stream(i);
        let r = sample_ensemble(gamma, window, policy, max_expected_count, i, &mut rng)?;
        let u = field_at_many(&r, plan.spec, &probes)?;
        Ok((1..probes.len())
            .map(|j| {
                let delta = u[j] - u[0];
                columns.iter().map(|(k, p)| k.value(&delta, &plan.direction, *p)).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>())
    })?;
    // transpose to [eps][realization][column]
    let per_eps = (0..plan.epsilons.len())
        .map(|j| rows.iter().map(|r| r[j].clone()).collect())
        .collect();
    Ok(plan.assemble(EstimatorKind::FullField, per_eps, 1.0))
}
