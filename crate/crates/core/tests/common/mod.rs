#![allow(dead_code)]

use cptshift_core::sweep::{power_for_broadening, width_at};
use cptshift_core::units::hz;
use cptshift_core::{AtomParams, FieldSpectrum, ModulationParams, SpectrumFamily};

/// Depth at which the power is calibrated.
pub const M_REF: f64 = 3.0;
/// Residual carrier/first-sideband level of the sweep family.
pub const FLOOR: f64 = 0.025;

/// Rb-87 cell with V_L + V_R = 3 Γ_g at the reference depth.
pub struct Reference {
    pub atom: AtomParams,
    pub power: f64,
    /// Γ̃_g at the reference depth, ε = 0.
    pub width: f64,
}

impl Reference {
    pub fn new() -> Self {
        Self::with_atom(AtomParams::rb87())
    }

    pub fn with_atom(atom: AtomParams) -> Self {
        let fam = Self::family_of(0.0);
        let power = power_for_broadening(&atom, &fam, M_REF, 3.0 * atom.gamma_g).unwrap();
        let width = width_at(&atom, &fam, M_REF, power).unwrap();
        Reference { atom, power, width }
    }

    pub fn family_of(eps: f64) -> SpectrumFamily {
        SpectrumFamily::residual_bessel(eps, 5, FLOOR)
    }

    pub fn family(&self, eps: f64) -> SpectrumFamily {
        Self::family_of(eps)
    }

    pub fn spectrum(&self, m: f64, eps: f64) -> FieldSpectrum {
        self.family(eps)
            .spectrum(m, self.atom.half_splitting(), self.power)
            .unwrap()
    }

    pub fn modulation(&self, a: f64, omega_ratio: f64) -> ModulationParams {
        ModulationParams::new(a, omega_ratio * self.width, 0.0).unwrap()
    }

    pub fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect()
    }
}

pub fn to_hz(x: f64) -> f64 {
    cptshift_core::units::to_hz(x)
}

pub fn hz_rate(x: f64) -> f64 {
    hz(x)
}
