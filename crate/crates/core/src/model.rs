//! Atom and field parameters and the couplings derived from them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::bessel_j_table;
use crate::units::{ghz, hz, mhz};

/// Fixed atomic constants. All rates angular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    /// Ground hyperfine splitting ω_g.
    pub omega_g: f64,
    /// Excited hyperfine splitting ω_e.
    pub omega_e: f64,
    /// Homogeneous optical width Γ.
    pub gamma_opt: f64,
    /// Ground-state relaxation Γ_g.
    pub gamma_g: f64,
    /// Reduced excited-state decay γ (upper branch).
    pub gamma_decay: f64,
    /// d_d² / d_u².
    pub dipole_ratio_sq: f64,
    /// One-photon detuning Δ_L.
    pub detuning: f64,
}

impl AtomParams {
    /// ⁸⁷Rb D1 line in a buffer-gas cell.
    pub fn rb87() -> Self {
        AtomParams {
            omega_g: ghz(6.834_682_611),
            omega_e: mhz(817.0),
            gamma_opt: mhz(380.0),
            gamma_g: hz(200.0),
            gamma_decay: mhz(5.75),
            dipole_ratio_sq: 1.0 / 3.0,
            detuning: mhz(-28.0),
        }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    /// Sideband spacing for a field modulated at half the hyperfine splitting.
    pub fn half_splitting(&self) -> f64 {
        0.5 * self.omega_g
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_g,
            self.omega_e,
            self.gamma_opt,
            self.gamma_g,
            self.gamma_decay,
            self.dipole_ratio_sq,
            self.detuning,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("atom", "non-finite value"));
        }
        if self.gamma_opt <= 0.0 {
            return Err(Error::invalid("Gamma", "must be > 0"));
        }
        if self.gamma_g <= 0.0 {
            return Err(Error::invalid("Gamma_g", "must be > 0"));
        }
        if self.gamma_decay <= 0.0 {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if self.omega_g <= 0.0 {
            return Err(Error::invalid("omega_g", "must be > 0"));
        }
        if !(self.dipole_ratio_sq > 0.0 && self.dipole_ratio_sq <= 1.0) {
            return Err(Error::invalid("dipole_ratio_sq", "must lie in (0, 1]"));
        }
        let ratio = (self.gamma_opt / self.half_splitting()).powi(2);
        if ratio > 0.01 {
            log::warn!("(Gamma/Omega)^2 = {ratio:.3}; resonant-pair approximation is marginal");
        }
        Ok(())
    }
}

/// Sideband amplitude table. `E_k` is stored as the upper-branch Rabi
/// rate V_{k_u} in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    spacing: f64,
    components: BTreeMap<i32, f64>,
    total_power: f64,
}

impl FieldSpectrum {
    pub fn new(spacing: f64, components: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("Omega", "sideband spacing must be > 0"));
        }
        let mut map = BTreeMap::new();
        for (k, e) in components {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::invalid(
                    "components",
                    format!("amplitude E_{k} = {e} must be finite and >= 0"),
                ));
            }
            *map.entry(k).or_insert(0.0) = e;
        }
        let total_power = map.values().map(|e| e * e).sum();
        Ok(FieldSpectrum {
            spacing,
            components: map,
            total_power,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// E_k, zero when absent.
    pub fn amplitude(&self, k: i32) -> f64 {
        self.components.get(&k).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, k: i32) -> bool {
        self.components.contains_key(&k)
    }

    pub fn components(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.components.iter().map(|(&k, &e)| (k, e))
    }

    /// E² = Σ E_k².
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// σ_k = E_k² / E².
    pub fn fractions(&self) -> BTreeMap<i32, f64> {
        self.components
            .iter()
            .map(|(&k, &e)| {
                let s = if self.total_power > 0.0 {
                    e * e / self.total_power
                } else {
                    0.0
                };
                (k, s)
            })
            .collect()
    }

    /// Multiply every E_k² by `c`, keeping σ_k fixed.
    pub fn scale_power(&self, c: f64) -> FieldSpectrum {
        let f = c.sqrt();
        FieldSpectrum {
            spacing: self.spacing,
            components: self.components.iter().map(|(&k, &e)| (k, e * f)).collect(),
            total_power: self.total_power * c,
        }
    }

    /// Multiply E_{±1} by `factor`; everything else untouched.
    pub fn attenuate_resonant(&self, factor: f64) -> FieldSpectrum {
        let components: BTreeMap<i32, f64> = self
            .components
            .iter()
            .map(|(&k, &e)| (k, if k.abs() == 1 { e * factor } else { e }))
            .collect();
        let total_power = components.values().map(|e| e * e).sum();
        FieldSpectrum {
            spacing: self.spacing,
            components,
            total_power,
        }
    }

    /// Copy with the resonant sidebands replaced.
    pub fn with_resonant(&self, e_minus1: f64, e_plus1: f64) -> Result<FieldSpectrum> {
        let mut c = self.components.clone();
        c.insert(-1, e_minus1);
        c.insert(1, e_plus1);
        FieldSpectrum::new(self.spacing, c)
    }
}

/// Phase modulation of the sideband spacing and the detection phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationParams {
    /// Modulation index a.
    pub index: f64,
    /// ω_m.
    pub omega_m: f64,
    /// Detection phase α.
    pub phase: f64,
}

impl ModulationParams {
    pub fn new(index: f64, omega_m: f64, phase: f64) -> Result<Self> {
        let m = ModulationParams {
            index,
            omega_m,
            phase,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.index >= 0.0 && self.index.is_finite()) {
            return Err(Error::invalid("a", "modulation index must be >= 0"));
        }
        if !(self.omega_m > 0.0 && self.omega_m.is_finite()) {
            return Err(Error::invalid("omega_m", "must be > 0"));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(())
    }

    /// The truncated expansions lose accuracy above a ≈ 1/2.
    pub fn beyond_validity(&self) -> bool {
        self.index > 0.5
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_m
    }
}

/// Rates and shifts entering the reduced ground-state equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCouplings {
    /// V_L: pumping out of |2⟩.
    pub pump_l: f64,
    /// V_R: pumping out of |1⟩.
    pub pump_r: f64,
    /// V_LR: Raman drive of the ground coherence.
    pub raman: f64,
    /// 𝒦: L/R asymmetry coupling, vanishes at the symmetrizing detuning.
    pub asym: f64,
    /// Γ̃_g = Γ_g + V_L + V_R.
    pub width: f64,
    /// P: Lorentzian weight of both excited levels.
    pub lorentz_weight: f64,
    /// δ_r: resonant light shift.
    pub shift_res: f64,
    /// δ_nr: non-resonant light shift from all components.
    pub shift_nonres: f64,
    /// 𝒱_L = E_{-1}.
    pub rabi_l: f64,
    /// 𝒱_R = E_{+1}.
    pub rabi_r: f64,
    /// 2P/(γΓ), converts ground-state combinations to excited population.
    pub absorption_scale: f64,
    /// Γ_g, carried along for the population equations.
    pub gamma_g: f64,
}

impl DerivedCouplings {
    /// 2δ̃ for a given two-photon detuning δ.
    pub fn two_delta_tilde(&self, delta: f64) -> f64 {
        2.0 * delta + self.shift_res + self.shift_nonres
    }
}

/// Per-component contribution to δ_nr, in the order the spectrum lists them.
pub fn nonresonant_terms(atom: &AtomParams, spectrum: &FieldSpectrum) -> Vec<(i32, f64)> {
    let w = 1.0 + atom.dipole_ratio_sq;
    let om = spectrum.spacing();
    spectrum
        .components()
        .map(|(j, e)| {
            let e2 = e * e;
            let mut t = 0.0;
            if j != 1 {
                t += w * e2 / ((j - 1) as f64 * om);
            }
            if j != -1 {
                t -= w * e2 / ((j + 1) as f64 * om);
            }
            (j, t)
        })
        .collect()
}

pub fn derive_couplings(atom: &AtomParams, spectrum: &FieldSpectrum) -> Result<DerivedCouplings> {
    atom.validate()?;
    for k in [-1, 1] {
        if !spectrum.contains(k) {
            return Err(Error::MissingSideband(k));
        }
    }
    let g = atom.gamma_opt;
    let r2 = atom.dipole_ratio_sq;
    let du = atom.detuning.powi(2) + g * g;
    let dd_det = atom.detuning + atom.omega_e;
    let dd = dd_det.powi(2) + g * g;
    let l = spectrum.amplitude(-1);
    let r = spectrum.amplitude(1);

    let lor = g * (1.0 / du + r2 / dd);
    let disp = atom.detuning / du + r2 * dd_det / dd;
    let pump_l = l * l * lor;
    let pump_r = r * r * lor;
    let raman = l * r * lor;
    let asym = l * r * disp;
    let shift_res = -(l * l - r * r) * disp;
    let shift_nonres = nonresonant_terms(atom, spectrum).iter().map(|t| t.1).sum();
    let lorentz_weight = g * g / du + g * g / dd;

    Ok(DerivedCouplings {
        pump_l,
        pump_r,
        raman,
        asym,
        width: atom.gamma_g + pump_l + pump_r,
        lorentz_weight,
        shift_res,
        shift_nonres,
        rabi_l: l,
        rabi_r: r,
        absorption_scale: 2.0 * lorentz_weight / (atom.gamma_decay * g),
        gamma_g: atom.gamma_g,
    })
}

/// Normalized Bessel-type sideband family with an L/R imbalance.
pub fn bessel_spectrum(
    m: f64,
    epsilon: f64,
    k_max: usize,
    spacing: f64,
    total_power: f64,
) -> Result<FieldSpectrum> {
    SpectrumFamily::bessel(epsilon, k_max).spectrum(m, spacing, total_power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// E_k ∝ |J_k(m)|.
    Bessel,
    /// E_k² ∝ J_k(m)² + floor for |k| ≤ 1. The floor mimics the residual
    /// carrier and first sidebands of a real current-modulated laser and keeps
    /// the resonant pair alive through the J_1 zero.
    ResidualBessel { floor: f64 },
}

/// A one-parameter spectrum family swept over the depth `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumFamily {
    pub kind: FamilyKind,
    pub epsilon: f64,
    pub k_max: usize,
}

impl SpectrumFamily {
    pub fn bessel(epsilon: f64, k_max: usize) -> Self {
        SpectrumFamily {
            kind: FamilyKind::Bessel,
            epsilon,
            k_max,
        }
    }

    pub fn residual_bessel(epsilon: f64, k_max: usize, floor: f64) -> Self {
        SpectrumFamily {
            kind: FamilyKind::ResidualBessel { floor },
            epsilon,
            k_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(Error::invalid("k_max", "must be >= 2"));
        }
        if !(self.epsilon.abs() < 1.0) {
            return Err(Error::invalid("epsilon", "|epsilon| must be < 1"));
        }
        if let FamilyKind::ResidualBessel { floor } = self.kind {
            if !(floor >= 0.0 && floor.is_finite()) {
                return Err(Error::invalid("floor", "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn spectrum(&self, m: f64, spacing: f64, total_power: f64) -> Result<FieldSpectrum> {
        self.validate()?;
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid("m", "modulation depth must be >= 0"));
        }
        if !(total_power > 0.0 && total_power.is_finite()) {
            return Err(Error::invalid("total_power", "must be > 0"));
        }
        let j = bessel_j_table(self.k_max, m);
        let kmax = self.k_max as i32;
        let mut raw: Vec<(i32, f64)> = (-kmax..=kmax)
            .map(|k| {
                let jk = j[k.unsigned_abs() as usize];
                let mut e2 = jk * jk;
                if let FamilyKind::ResidualBessel { floor } = self.kind {
                    if k.abs() <= 1 {
                        e2 += floor;
                    }
                }
                let mut e = e2.sqrt();
                if k == -1 {
                    e *= 1.0 + self.epsilon;
                } else if k == 1 {
                    e *= 1.0 - self.epsilon;
                }
                (k, e)
            })
            .collect();
        let sum: f64 = raw.iter().map(|(_, e)| e * e).sum();
        let scale = (total_power / sum).sqrt();
        for (_, e) in raw.iter_mut() {
            *e *= scale;
        }
        FieldSpectrum::new(spacing, raw)
    }
}
