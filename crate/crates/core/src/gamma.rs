//! The parameter measure `γ` of the multifractal family
//!
//! ```text
//! dγ(U, ℓ, T) = Σ_atoms w · δ_{ℓ^h}(U) δ_{ℓ^a}(T) ℓ^{−b} dℓ,   0 < ℓ ≤ ℓ_max
//! ```
//!
//! with closed-form moments, the Legendre-type exponent
//! `ζ_p = min_atoms (hp + 2 + a − b)`, and truncated sampling for Monte Carlo.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents closer than this to the logarithmic case use the log branch.
const LOG_SWITCH: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub h: f64,
    pub weight: f64,
    pub a: f64,
    pub b: f64,
}

impl Atom {
    /// Exponent `hp + 2 + a − b` of the small-ε moments of this atom.
    pub fn moment_exponent(&self, p: f64) -> f64 {
        self.h * p + 2.0 + self.a - self.b
    }

    /// `D(h) = b − a + 1`.
    pub fn dimension(&self) -> f64 {
        self.b - self.a + 1.0
    }
}

/// `∫_lo^hi ℓ^m dℓ`, with an explicit branch at `m = −1`.
pub fn power_integral(m: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let k = m + 1.0;
    if k.abs() < LOG_SWITCH {
        (hi / lo).ln()
    } else {
        (hi.powf(k) - lo.powf(k)) / k
    }
}

/// How `ℓ` is drawn by [`MultifractalMeasure::sample_params`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LengthSampling {
    /// Straight from the normalized truncated power law; unit weights.
    Direct,
    /// Log-uniform proposal on `[η, ℓ_max]` with likelihood-ratio weights.
    #[default]
    LogUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledParams {
    pub intensity: f64,
    pub thickness: f64,
    pub length: f64,
    pub atom: usize,
    pub h: f64,
    /// Density ratio to the normalized truncated measure; mean one.
    pub importance_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultifractalMeasure {
    atoms: Vec<Atom>,
    l_max: f64,
}

impl MultifractalMeasure {
    pub fn new(atoms: Vec<Atom>, l_max: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("γ needs at least one atom".into()));
        }
        if !(l_max > 0.0 && l_max <= 1.0) {
            return Err(Error::InvalidArgument(format!("ℓ_max must lie in (0, 1], got {l_max}")));
        }
        for (i, at) in atoms.iter().enumerate() {
            if ![at.h, at.weight, at.a, at.b].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!("atom {i} has non-finite fields")));
            }
            if !(at.weight > 0.0) {
                return Err(Error::InvalidArgument(format!("atom {i} has non-positive weight")));
            }
            if at.a > 2.0 || at.a < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "atom {i}: need 0 ≤ a ≤ 2 so that ℓ ≤ √T ≤ 1, got a = {}",
                    at.a
                )));
            }
            if at.h < 0.0 {
                return Err(Error::InvalidArgument(format!("atom {i}: h must be >= 0")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("atom weights must sum to 1, got {total}")));
        }
        Ok(MultifractalMeasure { atoms, l_max })
    }

    /// `h = 1/3, a = 2, b = 4`: blob-like eddies, `ζ_p = p/3`.
    pub fn k41() -> Self {
        Self::new(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 2.0, b: 4.0 }], 1.0).expect("valid preset")
    }

    /// `h = 1/3, a = 0, b = 2`: long thin filaments, also `ζ_p = p/3`.
    pub fn k41_thin() -> Self {
        Self::new(vec![Atom { h: 1.0 / 3.0, weight: 1.0, a: 0.0, b: 2.0 }], 1.0).expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "k41" => Some(Self::k41()),
            "k41_thin" => Some(Self::k41_thin()),
            _ => None,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    /// Largest filament length on the support.
    pub fn max_length(&self) -> f64 {
        self.atoms.iter().map(|a| self.l_max.powf(a.a)).fold(0.0, f64::max)
    }

    fn check_cutoff(&self, eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta < self.l_max) {
            return Err(Error::InvalidArgument(format!(
                "cutoff η must lie in (0, ℓ_max = {}), got {eta}",
                self.l_max
            )));
        }
        Ok(())
    }

    fn atom_mass(&self, atom: &Atom, eta: f64) -> f64 {
        atom.weight * power_integral(-atom.b, eta, self.l_max)
    }

    /// `Z(η) = γ(ℓ > η)`.
    pub fn total_mass(&self, eta: f64) -> Result<f64> {
        self.check_cutoff(eta)?;
        Ok(self.atoms.iter().map(|a| self.atom_mass(a, eta)).sum())
    }

    /// Draw `(U, ℓ, T)` from `γ` restricted to `ℓ > η`.
    pub fn sample_params<R: Rng + ?Sized>(
        &self,
        eta: f64,
        sampling: LengthSampling,
        rng: &mut R,
    ) -> Result<SampledParams> {
        let z = self.total_mass(eta)?;
        let mut pick = rng.random::<f64>() * z;
        let mut index = self.atoms.len() - 1;
        for (i, a) in self.atoms.iter().enumerate() {
            let m = self.atom_mass(a, eta);
            if pick < m {
                index = i;
                break;
            }
            pick -= m;
        }
        let atom = self.atoms[index];
        let u: f64 = rng.random();
        let (lo, hi) = (eta, self.l_max);
        let (thickness, importance_weight) = match sampling {
            LengthSampling::Direct => {
                let k = 1.0 - atom.b;
                let l = if k.abs() < LOG_SWITCH {
                    lo * (hi / lo).powf(u)
                } else {
                    (lo.powf(k) + u * (hi.powf(k) - lo.powf(k))).powf(1.0 / k)
                };
                (l.clamp(lo, hi), 1.0)
            }
            LengthSampling::LogUniform => {
                let span = (hi / lo).ln();
                let l = (lo * (hi / lo).powf(u)).clamp(lo, hi);
                let norm = power_integral(-atom.b, lo, hi);
                (l, l.powf(1.0 - atom.b) * span / norm)
            }
        };
        Ok(SampledParams {
            intensity: thickness.powf(atom.h),
            thickness,
            length: thickness.powf(atom.a),
            atom: index,
            h: atom.h,
            importance_weight,
        })
    }

    fn integrable(&self, p: f64) -> Result<()> {
        for (i, a) in self.atoms.iter().enumerate() {
            let k = a.moment_exponent(p);
            if !(k > 0.0) {
                return Err(Error::DivergentMoment { atom: i, exponent: k, what: "hp + 2 + a − b at ℓ → 0" });
            }
        }
        Ok(())
    }

    /// `γ[U^p ℓ T 1_{ℓ<ε}]` over the full support `0 < ℓ ≤ ℓ_max`.
    pub fn analytic_moment_lower(&self, p: f64, eps: f64) -> Result<f64> {
        self.integrable(p)?;
        let top = eps.min(self.l_max);
        if !(eps > 0.0) {
            return Ok(0.0);
        }
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                let k = a.moment_exponent(p);
                a.weight * top.powf(k) / k
            })
            .sum())
    }

    /// `γ[U^p ((ℓ∧ε)/ℓ)^p ℓ T]` over the full support.
    pub fn analytic_moment_upper(&self, p: f64, eps: f64) -> Result<f64> {
        let lower = self.analytic_moment_lower(p, eps)?;
        Ok(lower + self.upper_tail(p, eps, 0.0))
    }

    fn upper_tail(&self, p: f64, eps: f64, eta: f64) -> f64 {
        let lo = eps.max(eta);
        eps.powf(p)
            * self
                .atoms
                .iter()
                .map(|a| a.weight * power_integral((a.h - 1.0) * p + 1.0 + a.a - a.b, lo, self.l_max))
                .sum::<f64>()
    }

    /// [`Self::analytic_moment_lower`] restricted to `ℓ > η`, the part of
    /// `γ` that truncated sampling sees.
    pub fn truncated_moment_lower(&self, p: f64, eps: f64, eta: f64) -> Result<f64> {
        self.check_cutoff(eta)?;
        let top = eps.min(self.l_max);
        Ok(self
            .atoms
            .iter()
            .map(|a| a.weight * power_integral(a.moment_exponent(p) - 1.0, eta, top))
            .sum())
    }

    /// [`Self::analytic_moment_upper`] restricted to `ℓ > η`.
    pub fn truncated_moment_upper(&self, p: f64, eps: f64, eta: f64) -> Result<f64> {
        Ok(self.truncated_moment_lower(p, eps, eta)? + self.upper_tail(p, eps, eta))
    }

    /// `ζ_p = min_atoms (hp + 3 − D(h))`.
    pub fn theoretical_zeta(&self, p: f64) -> f64 {
        self.atoms.iter().map(|a| a.moment_exponent(p)).fold(f64::INFINITY, f64::min)
    }

    /// Index of the atom attaining the minimum in [`Self::theoretical_zeta`]
    /// (lowest index on ties).
    pub fn active_atom(&self, p: f64) -> usize {
        let mut best = 0;
        for (i, a) in self.atoms.iter().enumerate().skip(1) {
            if a.moment_exponent(p) < self.atoms[best].moment_exponent(p) {
                best = i;
            }
        }
        best
    }

    /// Orders `p` at which the exponent lines of two atoms intersect and the
    /// minimum switches between them, sorted ascending.
    pub fn crossovers(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                if a.h != b.h {
                    let p = ((2.0 + b.a - b.b) - (2.0 + a.a - a.b)) / (a.h - b.h);
                    let z = a.moment_exponent(p);
                    let others_below = self.atoms.iter().any(|c| c.moment_exponent(p) < z - 1e-12);
                    if !others_below {
                        out.push(p);
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}
