//! Subcommand dispatch and artifact emission.
//!
//! CSV artifacts start with `#` metadata lines (version, subcommand, seed,
//! config hash, timestamp, full config) followed by a header and data rows.
//! Data rows depend only on the config and seed, never on the worker count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{
    corrector_scan, default_fit_range, ensemble_structure_function, fit_zeta, occupation_moment_scan,
    poisson_moment_check, rotation_about, single_filament_structure, symmetry_suite, MomentPlan,
    NuSampler, PhiSpec, ScalingFit, StructureFunctionEstimate, StructurePlan, SymmetryPlan,
};
use crate::exec::Executor;
use crate::gamma::MultifractalMeasure;
use crate::kernel::invariant_suite;
use crate::rng::StreamFactory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SUBCOMMANDS: [&str; 8] = [
    "structure",
    "zeta",
    "occupation",
    "corrector",
    "validate-moments",
    "symmetry",
    "kernel-check",
    "analytic",
];

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    meta: Value,
    header: Vec<String>,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path, subcommand: &str, config: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let hash = config.hash();
        let header = vec![
            format!("# vortex-gas {VERSION}"),
            format!("# subcommand: {subcommand}"),
            format!("# seed: {}", config.mc.seed),
            format!("# config_hash: {hash}"),
            format!("# generated_unix: {now}"),
            format!("# config: {}", config.to_value()),
        ];
        let meta = json!({
            "version": VERSION,
            "subcommand": subcommand,
            "seed": config.mc.seed,
            "config_hash": hash,
            "generated_unix": now,
            "config": config.to_value(),
        });
        Ok(Artifacts { dir: dir.to_path_buf(), meta, header, written: Vec::new() })
    }

    fn csv(&mut self, name: &str, columns: &str, rows: &[String]) -> Result<()> {
        let mut text = self.header.join("\n");
        text.push('\n');
        text.push_str(columns);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let doc = json!({ "meta": self.meta, "data": body });
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&doc).expect("serializable") + "\n")?;
        self.written.push(path);
        Ok(())
    }

    fn finish(self, exit_code: i32) -> RunOutcome {
        RunOutcome { exit_code, artifacts: self.written }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Validates the config for `subcommand`, runs it and writes its artifacts
/// under `config.output.dir`.
pub fn run(subcommand: &str, config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate_for(subcommand)?;
    let exec = Executor::new(config.mc.workers)?;
    let streams = StreamFactory::new(config.mc.seed).derive(subcommand);
    let mut out = Artifacts::new(Path::new(&config.output.dir), subcommand, config)?;
    log::info!("running {subcommand} with seed {} on {} worker(s)", config.mc.seed, exec.workers());
    let code = match subcommand {
        "structure" => structure(config, &exec, &streams, &mut out)?,
        "zeta" => zeta(config, &exec, &streams, &mut out)?,
        "occupation" => occupation(config, &exec, &streams, &mut out)?,
        "corrector" => corrector(config, &exec, &streams, &mut out)?,
        "validate-moments" => moments(config, &exec, &streams, &mut out)?,
        "symmetry" => symmetry(config, &exec, &streams, &mut out)?,
        "kernel-check" => kernel_check(config, &mut out)?,
        "analytic" => analytic(config, &mut out)?,
        other => return Err(Error::Config(format!("unknown subcommand `{other}`"))),
    };
    Ok(out.finish(code))
}

fn structure_rows(estimates: &[StructureFunctionEstimate]) -> Vec<String> {
    estimates
        .iter()
        .flat_map(|e| {
            e.grid.iter().map(move |g| {
                format!(
                    "{},{},{},{:e},{:e},{:e},{}",
                    e.estimator.as_str(),
                    e.kind.as_str(),
                    e.p,
                    g.eps,
                    g.mean,
                    g.stderr,
                    g.n
                )
            })
        })
        .collect()
}

#[derive(Serialize)]
struct FitRecord {
    estimator: &'static str,
    kind: &'static str,
    p: u32,
    zeta_hat: f64,
    stderr: f64,
    r2: f64,
    fit_range: (f64, f64),
    zeta_theory: f64,
}

impl FitRecord {
    fn new(e: &StructureFunctionEstimate, f: &ScalingFit, gamma: &MultifractalMeasure) -> Self {
        FitRecord {
            estimator: e.estimator.as_str(),
            kind: e.kind.as_str(),
            p: e.p,
            zeta_hat: f.zeta_hat,
            stderr: f.stderr,
            r2: f.r_squared,
            fit_range: f.fit_range,
            zeta_theory: gamma.theoretical_zeta(f64::from(e.p)),
        }
    }
}

fn sampler<'a>(config: &ExperimentConfig, gamma: &'a MultifractalMeasure) -> NuSampler<'a> {
    NuSampler {
        gamma,
        eta: config.gamma.eta,
        policy: config.policy(),
        region: config.mc.sampling.region,
        lengths: config.mc.sampling.lengths,
    }
}

/// Fits of the single-filament estimates; odd orders have no scaling law.
fn fit_single(
    config: &ExperimentConfig,
    gamma: &MultifractalMeasure,
    estimates: &[StructureFunctionEstimate],
) -> Result<Vec<FitRecord>> {
    let eps = config.epsilons()?;
    let range = match config.probes.fit_range {
        Some(r) => r,
        None => default_fit_range(&eps, config.gamma.eta, gamma.l_max())?,
    };
    estimates
        .iter()
        .filter(|e| e.p % 2 == 0)
        .map(|e| Ok(FitRecord::new(e, &fit_zeta(e, range)?, gamma)))
        .collect()
}

fn structure(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let gamma = config.gamma()?;
    let spec = config.mollifier()?;
    let window = config.window()?;
    let plan = StructurePlan {
        spec: &spec,
        probe: config.probe(),
        direction: config.direction()?,
        epsilons: config.epsilons()?,
        orders: config.probes.p.clone(),
        kinds: config.probes.kinds.clone(),
        batches: config.mc.batches,
    };
    let mut estimates = single_filament_structure(&plan, &sampler(config, &gamma), config.mc.budget, exec, &streams.derive("single"))?;
    let full = ensemble_structure_function(
        &plan,
        &gamma,
        &window,
        &config.policy(),
        config.window.max_expected_count,
        config.mc.realizations,
        exec,
        &streams.derive("full"),
    )?;
    let mut fits = fit_single(config, &gamma, &estimates)?;
    let range = config.probes.fit_range.map(Ok).unwrap_or_else(|| default_fit_range(&plan.epsilons, window.eta, gamma.l_max()));
    for e in full.iter().filter(|e| e.p % 2 == 0) {
        match range.as_ref().map_err(|e| e.to_string()).and_then(|r| fit_zeta(e, *r).map_err(|x| x.to_string())) {
            Ok(f) => fits.push(FitRecord::new(e, &f, &gamma)),
            Err(msg) => log::warn!("no full-field fit for p = {} ({}): {msg}", e.p, e.kind.as_str()),
        }
    }
    estimates.extend(full);
    out.csv("structure.csv", "estimator,kind,p,epsilon,mean,stderr,n", &structure_rows(&estimates))?;
    out.json("fits.json", &fits)?;
    Ok(0)
}

fn zeta(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let gamma = config.gamma()?;
    let spec = config.mollifier()?;
    let plan = StructurePlan {
        spec: &spec,
        probe: config.probe(),
        direction: config.direction()?,
        epsilons: config.epsilons()?,
        orders: config.probes.p.clone(),
        kinds: config.probes.kinds.clone(),
        batches: config.mc.batches,
    };
    let estimates = single_filament_structure(&plan, &sampler(config, &gamma), config.mc.budget, exec, &streams.derive("single"))?;
    let fits = fit_single(config, &gamma, &estimates)?;
    let rows: Vec<String> = fits
        .iter()
        .map(|f| {
            format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                f.kind, f.p, f.zeta_hat, f.stderr, f.r2, f.fit_range.0, f.fit_range.1, f.zeta_theory
            )
        })
        .collect();
    out.csv("zeta.csv", "kind,p,zeta_hat,stderr,r2,fit_min,fit_max,zeta_theory", &rows)?;
    out.csv("structure.csv", "estimator,kind,p,epsilon,mean,stderr,n", &structure_rows(&estimates))?;
    out.json("fits.json", &fits)?;
    Ok(0)
}

fn occupation(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let report = occupation_moment_scan(&config.occupation, config.mc.batches, exec, streams)?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{:e},{:e},{},{:e},{:e},{:e},{:e},{},{}",
                r.thickness,
                r.horizon,
                r.p,
                r.radius,
                r.dt,
                r.estimate.mean,
                r.estimate.stderr,
                r.estimate.n,
                opt(r.exact_mean)
            )
        })
        .collect();
    out.csv("occupation.csv", "thickness,horizon,p,radius,dt,mean,stderr,n,exact_mean", &rows)?;
    out.json("occupation.json", &report)?;
    Ok(0)
}

fn corrector(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let spec = config.mollifier()?;
    let report = corrector_scan(&config.corrector, &spec, config.mc.batches, exec, streams)?;
    let rows: Vec<String> = report
        .points
        .iter()
        .map(|p| {
            format!(
                "{:e},{:e},{:e},{:e},{:e},{}",
                p.dt, p.gap.mean, p.gap.stderr, p.control.mean, p.control.stderr, p.gap.n
            )
        })
        .collect();
    out.csv("corrector.csv", "dt,gap_mean,gap_stderr,control_mean,control_stderr,n", &rows)?;
    out.json("corrector.json", &report)?;
    Ok(0)
}

fn moments(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let gamma = config.moments_gamma()?;
    let spec = config.mollifier()?;
    let m = &config.moments;
    let plan = MomentPlan {
        gamma: &gamma,
        spec: &spec,
        window: config.moments_window()?,
        phi: PhiSpec { kind: m.phi, probe: config.probe(), direction: config.direction()?, clip: m.clip },
        p_max: m.p_max,
        policy: config.policy(),
        max_expected_count: config.window.max_expected_count,
        batches: config.mc.batches,
    };
    let report = poisson_moment_check(&plan, m.intensity_budget, m.realizations, exec, streams)?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                r.p,
                r.mc.mean,
                r.mc.stderr,
                r.predicted,
                r.predicted_stderr,
                r.z,
                r.ratio,
                r.lower_bound,
                opt(r.upper_bound)
            )
        })
        .collect();
    out.csv("moments.csv", "p,mc_mean,mc_stderr,predicted,predicted_stderr,z,ratio,lower_bound,upper_bound", &rows)?;
    out.json("moments.json", &report)?;
    Ok(0)
}

fn symmetry(config: &ExperimentConfig, exec: &Executor, streams: &StreamFactory, out: &mut Artifacts) -> Result<i32> {
    let gamma = config.symmetry_gamma()?;
    let spec = config.mollifier()?;
    let s = &config.symmetry;
    let plan = SymmetryPlan {
        gamma: &gamma,
        spec: &spec,
        window: config.symmetry_window()?,
        policy: config.policy(),
        max_expected_count: config.window.max_expected_count,
        probe: config.probe(),
        shift: config.symmetry_shift(),
        direction: config.direction()?,
        rotation: rotation_about(&config.symmetry_axis()?, s.rotation_angle),
        separation: s.separation,
        batches: config.mc.batches,
    };
    let report = symmetry_suite(&plan, s.realizations, exec, streams)?;
    let rows: Vec<String> = report
        .tests
        .iter()
        .map(|t| format!("{},{:?},{:e},{:e},{}", t.name, t.kind, t.value, t.threshold, t.pass))
        .collect();
    out.csv("symmetry.csv", "name,kind,value,threshold,pass", &rows)?;
    out.json("symmetry.json", &report)?;
    Ok(0)
}

fn kernel_check(config: &ExperimentConfig, out: &mut Artifacts) -> Result<i32> {
    let spec = config.mollifier()?;
    let checks = invariant_suite(&spec, config.mc.seed);
    let rows: Vec<String> = checks
        .iter()
        .map(|c| format!("{},{:e},{:e},{}", c.name, c.value, c.threshold, c.pass))
        .collect();
    out.csv("kernel_check.csv", "name,value,threshold,pass", &rows)?;
    out.json("kernel_check.json", &checks)?;
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}

#[derive(Serialize)]
struct ZetaRow {
    p: u32,
    zeta_theory: f64,
    active_atom: usize,
}

fn analytic(config: &ExperimentConfig, out: &mut Artifacts) -> Result<i32> {
    let gamma = config.gamma()?;
    let eps = config.epsilons()?;
    let table: Vec<ZetaRow> = config
        .probes
        .p
        .iter()
        .map(|&p| ZetaRow {
            p,
            zeta_theory: gamma.theoretical_zeta(f64::from(p)),
            active_atom: gamma.active_atom(f64::from(p)),
        })
        .collect();
    let rows: Vec<String> = table.iter().map(|r| format!("{},{:e},{}", r.p, r.zeta_theory, r.active_atom)).collect();
    out.csv("analytic.csv", "p,zeta_theory,active_atom", &rows)?;
    let mut moment_rows = Vec::new();
    for &p in &config.probes.p {
        let pf = f64::from(p);
        for &e in &eps {
            let lower = gamma.analytic_moment_lower(pf, e).map(Some).or_else(divergent_as_none)?;
            let upper = gamma.analytic_moment_upper(pf, e).map(Some).or_else(divergent_as_none)?;
            moment_rows.push(format!("{p},{e:e},{},{}", opt(lower), opt(upper)));
        }
    }
    out.csv("analytic_moments.csv", "p,epsilon,lower,upper", &moment_rows)?;
    out.json("analytic.json", &json!({ "zeta": table, "crossovers": gamma.crossovers() }))?;
    Ok(0)
}

/// Divergent moments are left blank in the closed-form table.
fn divergent_as_none(e: Error) -> Result<Option<f64>> {
    match e {
        Error::DivergentMoment { .. } => Ok(None),
        other => Err(other),
    }
}

/// Data rows of a CSV artifact, without `#` metadata lines.
pub fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}
