//! JSON experiment configuration.
//!
//! Every section has defaults, so `{}` is a valid config. Unknown keys are
//! rejected. Overrides use dotted paths (`mc.budget=5000`); the value is parsed
//! as JSON when possible and taken as a string otherwise.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::brownian::StepPolicy;
use crate::ensemble::{intensity_mass, LocalizationWindow, DEFAULT_MAX_EXPECTED_COUNT};
use crate::error::{Error, Result};
use crate::estimators::{
    log_grid, validate_grid, validate_orders, CorrectorScan, OccupationScan, PhiKind, SamplingRegion, StructureKind,
};
use crate::gamma::{Atom, LengthSampling, MultifractalMeasure};
use crate::kernel::MollifierSpec;
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaConfig {
    /// `"k41"` or `"k41_thin"`; ignored when `atoms` is given.
    pub preset: Option<String>,
    pub atoms: Option<Vec<Atom>>,
    pub l_max: f64,
    /// Cutoff `η` of the single-filament estimators.
    pub eta: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            preset: Some("k41".into()),
            atoms: None,
            l_max: 1.0,
            eta: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    Indicator,
    #[default]
    ZeroChargeQuadratic,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MollifierConfig {
    pub kind: MollifierKind,
    /// `[r, ρ(r)]` pairs for `kind = "tabulated"`.
    pub table: Option<Vec<[f64; 2]>>,
}

/// `"auto"` or a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSetting {
    Value(f64),
    Keyword(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub eta: f64,
    #[serde(rename = "R")]
    pub radius: RadiusSetting,
    pub max_expected_count: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            eta: 0.2,
            radius: RadiusSetting::Keyword("auto".into()),
            max_expected_count: DEFAULT_MAX_EXPECTED_COUNT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub lengths: LengthSampling,
    pub region: SamplingRegion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub seed: u64,
    /// Single-filament samples per grid point.
    pub budget: u64,
    /// Full-field realizations.
    pub realizations: u64,
    pub dt_resolution_scale: f64,
    pub dt_min: f64,
    pub workers: usize,
    pub batches: usize,
    pub sampling: SamplingConfig,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 1,
            budget: 20_000,
            realizations: 100,
            dt_resolution_scale: 8.0,
            dt_min: 1e-6,
            workers: 1,
            batches: 16,
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { min: 0.02, max: 0.3, points: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub x: [f64; 3],
    pub e: [f64; 3],
    /// Explicit ε values; takes precedence over `grid`.
    pub epsilons: Option<Vec<f64>>,
    pub grid: GridConfig,
    pub p: Vec<u32>,
    pub kinds: Vec<StructureKind>,
    /// Fit range; the central decade of the grid when absent.
    pub fit_range: Option<(f64, f64)>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            x: [0.0; 3],
            e: [1.0, 0.0, 0.0],
            epsilons: None,
            grid: GridConfig::default(),
            p: vec![2, 4, 6],
            kinds: vec![StructureKind::Longitudinal, StructureKind::Nondirectional],
            fit_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsConfig {
    pub gamma: GammaConfig,
    pub window_eta: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub phi: PhiKind,
    pub clip: f64,
    pub p_max: u32,
    pub intensity_budget: u64,
    pub realizations: u64,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig {
            gamma: GammaConfig {
                preset: None,
                atoms: Some(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 2.0, b: 0.0 }]),
                l_max: 1.0,
                eta: 0.5,
            },
            window_eta: 0.5,
            radius: 1.336,
            phi: PhiKind::Component,
            clip: 1.0,
            p_max: 4,
            intensity_budget: 200_000,
            realizations: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetryConfig {
    pub gamma: GammaConfig,
    pub window_eta: f64,
    #[serde(rename = "R")]
    pub radius: RadiusSetting,
    pub shift: [f64; 3],
    pub rotation_axis: [f64; 3],
    pub rotation_angle: f64,
    pub separation: f64,
    pub realizations: u64,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        SymmetryConfig {
            gamma: GammaConfig { preset: Some("k41".into()), atoms: None, l_max: 0.3, eta: 0.15 },
            window_eta: 0.15,
            radius: RadiusSetting::Keyword("auto".into()),
            shift: [0.3, 0.2, 0.1],
            rotation_axis: [1.0, 1.0, 1.0],
            rotation_angle: 2.0 * std::f64::consts::PI / 3.0,
            separation: 0.1,
            realizations: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub gamma: GammaConfig,
    pub mollifier: MollifierConfig,
    pub window: WindowConfig,
    pub mc: McConfig,
    pub probes: ProbeConfig,
    pub occupation: OccupationScan,
    pub corrector: CorrectorScan,
    pub moments: MomentsConfig,
    pub symmetry: SymmetryConfig,
    pub output: OutputConfig,
}

/// Sets `path = value` inside a JSON object, creating intermediate objects.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        if !node.is_object() {
            return Err(Error::Config(format!("`{path}` descends into a non-object")));
        }
        node = node
            .as_object_mut()
            .expect("checked above")
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(format!("`{path}` descends into a non-object"))),
    }
}

impl GammaConfig {
    pub fn build(&self) -> Result<MultifractalMeasure> {
        let atoms = match (&self.atoms, &self.preset) {
            (Some(atoms), _) => atoms.clone(),
            (None, Some(name)) => MultifractalMeasure::preset(name)
                .ok_or_else(|| Error::Config(format!("unknown γ preset `{name}`")))?
                .atoms()
                .to_vec(),
            (None, None) => return Err(Error::Config("γ needs a preset or atoms".into())),
        };
        MultifractalMeasure::new(atoms, self.l_max)
    }
}

impl MollifierConfig {
    pub fn build(&self) -> Result<MollifierSpec> {
        match (self.kind, &self.table) {
            (MollifierKind::Indicator, _) => Ok(MollifierSpec::Indicator),
            (MollifierKind::ZeroChargeQuadratic, _) => Ok(MollifierSpec::ZeroChargeQuadratic),
            (MollifierKind::Tabulated, Some(t)) => {
                MollifierSpec::tabulated(&t.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())
            }
            (MollifierKind::Tabulated, None) => Err(Error::Config("tabulated mollifier needs `table`".into())),
        }
    }
}

impl RadiusSetting {
    fn resolve(&self, auto: f64) -> Result<f64> {
        match self {
            RadiusSetting::Value(r) => Ok(*r),
            RadiusSetting::Keyword(k) if k == "auto" => Ok(auto),
            RadiusSetting::Keyword(k) => Err(Error::Config(format!("window R must be a number or \"auto\", got `{k}`"))),
        }
    }
}

fn vec3(v: &[f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

impl ExperimentConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` (or the defaults when `None`) and applies overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, leaving out settings that cannot change
    /// results (worker count, output directory).
    pub fn hash(&self) -> String {
        let mut v = self.to_value();
        if let Some(mc) = v.get_mut("mc").and_then(Value::as_object_mut) {
            mc.remove("workers");
        }
        if let Some(map) = v.as_object_mut() {
            map.remove("output");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn gamma(&self) -> Result<MultifractalMeasure> {
        self.gamma.build()
    }

    pub fn mollifier(&self) -> Result<MollifierSpec> {
        self.mollifier.build()
    }

    pub fn policy(&self) -> StepPolicy {
        StepPolicy {
            resolution_scale: self.mc.dt_resolution_scale,
            dt_min: self.mc.dt_min,
        }
    }

    pub fn probe(&self) -> Vec3 {
        vec3(&self.probes.x)
    }

    pub fn direction(&self) -> Result<Vec3> {
        let e = vec3(&self.probes.e);
        if !(e.norm() > 0.0) {
            return Err(Error::Config("probes.e must be non-zero".into()));
        }
        Ok(e.normalize())
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        let eps = match &self.probes.epsilons {
            Some(e) => e.clone(),
            None => {
                let g = self.probes.grid;
                if g.points < 1 || !(g.min > 0.0) || !(g.max >= g.min) {
                    return Err(Error::Config(format!("bad ε-grid {g:?}")));
                }
                log_grid(g.min, g.max, g.points)
            }
        };
        validate_grid(&eps)?;
        Ok(eps)
    }

    /// Full-field window; `"auto"` covers every probe with the required margin.
    pub fn window(&self) -> Result<LocalizationWindow> {
        let gamma = self.gamma()?;
        let eps = self.epsilons()?;
        let max_eps = eps.iter().copied().fold(0.0, f64::max);
        let auto = LocalizationWindow::auto_radius(&gamma, self.probe().norm(), max_eps);
        LocalizationWindow::new(self.window.eta, self.window.radius.resolve(auto)?)
    }

    pub fn symmetry_gamma(&self) -> Result<MultifractalMeasure> {
        self.symmetry.gamma.build()
    }

    pub fn symmetry_window(&self) -> Result<LocalizationWindow> {
        let gamma = self.symmetry_gamma()?;
        let s = &self.symmetry;
        let reach = self.probe().norm() + vec3(&s.shift).norm().max(s.separation);
        let auto = reach + LocalizationWindow::required_margin(&gamma) + 0.05;
        LocalizationWindow::new(s.window_eta, s.radius.resolve(auto)?)
    }

    pub fn symmetry_shift(&self) -> Vec3 {
        vec3(&self.symmetry.shift)
    }

    pub fn symmetry_axis(&self) -> Result<Vec3> {
        let a = vec3(&self.symmetry.rotation_axis);
        if !(a.norm() > 0.0) {
            return Err(Error::Config("symmetry.rotation_axis must be non-zero".into()));
        }
        Ok(a)
    }

    pub fn moments_gamma(&self) -> Result<MultifractalMeasure> {
        self.moments.gamma.build()
    }

    pub fn moments_window(&self) -> Result<LocalizationWindow> {
        LocalizationWindow::new(self.moments.window_eta, self.moments.radius)
    }

    fn validate_mc(&self) -> Result<()> {
        self.policy().validate()?;
        if self.mc.workers == 0 {
            return Err(Error::Config("mc.workers must be >= 1".into()));
        }
        if self.mc.batches < 2 {
            return Err(Error::Config("mc.batches must be >= 2".into()));
        }
        Ok(())
    }

    fn check_cap(&self, gamma: &MultifractalMeasure, window: &LocalizationWindow) -> Result<()> {
        let mass = intensity_mass(gamma, window)?;
        if !(mass <= self.window.max_expected_count) {
            return Err(Error::BudgetExceeded(format!(
                "expected filament count ν(A) = {mass:.3e} exceeds window.max_expected_count = {:.3e}",
                self.window.max_expected_count
            )));
        }
        Ok(())
    }

    /// Checks every precondition of `subcommand` without drawing randomness.
    pub fn validate_for(&self, subcommand: &str) -> Result<()> {
        self.validate_mc()?;
        match subcommand {
            "structure" | "zeta" => {
                let gamma = self.gamma()?;
                self.mollifier()?;
                self.direction()?;
                let eps = self.epsilons()?;
                validate_orders(&self.probes.p, &self.probes.kinds)?;
                for &p in &self.probes.p {
                    gamma.analytic_moment_lower(f64::from(p), 1.0)?;
                }
                gamma.total_mass(self.gamma.eta)?;
                if self.mc.budget < crate::estimators::MIN_BUDGET {
                    return Err(Error::InvalidArgument(format!(
                        "mc.budget must be >= {}, got {}",
                        crate::estimators::MIN_BUDGET,
                        self.mc.budget
                    )));
                }
                if let Some((lo, hi)) = self.probes.fit_range {
                    if !(lo > 0.0 && hi > lo) {
                        return Err(Error::Config(format!("bad fit_range ({lo}, {hi})")));
                    }
                }
                if subcommand == "structure" {
                    if self.mc.realizations < crate::estimators::MIN_BUDGET {
                        return Err(Error::InvalidArgument(format!(
                            "mc.realizations must be >= {}, got {}",
                            crate::estimators::MIN_BUDGET,
                            self.mc.realizations
                        )));
                    }
                    let window = self.window()?;
                    let x = self.probe();
                    let e = self.direction()?;
                    window.check_probe(&gamma, &x)?;
                    for &h in &eps {
                        window.check_probe(&gamma, &(x + e * h))?;
                    }
                    self.check_cap(&gamma, &window)?;
                }
                Ok(())
            }
            "occupation" => self.occupation.validate(),
            "corrector" => {
                self.mollifier()?;
                let c = &self.corrector;
                if !(c.base_dt > 0.0 && c.base_dt <= c.horizon) || !(c.thickness > 0.0) || c.paths < 2 {
                    return Err(Error::Config(format!("bad corrector scan {c:?}")));
                }
                Ok(())
            }
            "validate-moments" => {
                let gamma = self.moments_gamma()?;
                self.mollifier()?;
                let window = self.moments_window()?;
                let m = &self.moments;
                if m.p_max == 0 || m.p_max > 6 {
                    return Err(Error::Config(format!("moments.p_max must lie in 1..=6, got {}", m.p_max)));
                }
                if !(m.clip > 0.0) || m.intensity_budget < 2 || m.realizations < 2 {
                    return Err(Error::Config("moments needs clip > 0 and budgets >= 2".into()));
                }
                self.check_cap(&gamma, &window)
            }
            "symmetry" => {
                let gamma = self.symmetry_gamma()?;
                self.mollifier()?;
                self.direction()?;
                self.symmetry_axis()?;
                let window = self.symmetry_window()?;
                let x = self.probe();
                for p in [x, x + self.symmetry_shift(), x + self.direction()? * self.symmetry.separation] {
                    window.check_probe(&gamma, &p)?;
                }
                if self.symmetry.realizations < 2 * self.mc.batches as u64 {
                    return Err(Error::Config("symmetry.realizations must be at least 2 × mc.batches".into()));
                }
                self.check_cap(&gamma, &window)
            }
            "kernel-check" => self.mollifier().map(|_| ()),
            "analytic" => {
                self.gamma()?;
                self.epsilons()?;
                if self.probes.p.is_empty() {
                    return Err(Error::Config("probes.p must not be empty".into()));
                }
                Ok(())
            }
            other => Err(Error::Config(format!("unknown subcommand `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::from_value(json!({})).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.epsilons().unwrap().len(), 8);
        for sub in ["structure", "zeta", "occupation", "corrector", "validate-moments", "symmetry", "kernel-check", "analytic"] {
            c.validate_for(sub).unwrap_or_else(|e| panic!("{sub}: {e}"));
        }
    }

    #[test]
    fn overrides_create_and_replace() {
        let mut v = json!({"mc": {"budget": 10}});
        apply_override(&mut v, "mc.budget=5000").unwrap();
        apply_override(&mut v, "gamma.preset=k41_thin").unwrap();
        apply_override(&mut v, "probes.p=[2,4]").unwrap();
        assert_eq!(v, json!({"mc": {"budget": 5000}, "gamma": {"preset": "k41_thin"}, "probes": {"p": [2, 4]}}));
        assert!(apply_override(&mut v, "mc.budget").is_err());
        assert!(apply_override(&mut v, "mc.budget.x=1").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::from_value(json!({"mcc": {}})), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_value(json!({"mc": {"sed": 1}})), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_workers_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.mc.workers = 8;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.mc.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation_catches_bad_settings() {
        let mut c = ExperimentConfig::default();
        c.mc.budget = 0;
        assert_eq!(c.validate_for("structure").unwrap_err().exit_code(), 2);
        let mut c = ExperimentConfig::default();
        c.gamma.atoms = Some(vec![Atom { h: 0.0, weight: 1.0, a: 0.0, b: 3.0 }]);
        assert!(matches!(c.validate_for("zeta"), Err(Error::DivergentMoment { .. })));
        let mut c = ExperimentConfig::default();
        c.window.eta = 0.01;
        assert_eq!(c.validate_for("structure").unwrap_err().exit_code(), 3);
        let mut c = ExperimentConfig::default();
        c.window.radius = RadiusSetting::Value(2.0);
        assert!(matches!(c.validate_for("structure"), Err(Error::MarginViolation(_))));
        assert!(ExperimentConfig::default().validate_for("plot").is_err());
    }
}
