//! Fourier-amplitude solution of the modulated ground-state equations and
//! its linearized closed form.
//!
//! With ρ21 = Σ C_k e^{−ikω_m t} and ρ22 = Σ G_k e^{−ikω_m t}, keeping
//! |k| ≤ 2 gives eight complex relations in C_{−2..2}, G_0, G_1, G_2. The
//! conjugate closure G_{−k} = G_k* makes the system real-linear, so it is
//! solved as a 16×16 real system.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_couplings, AtomParams, DerivedCouplings, FieldSpectrum, ModulationParams};
use crate::time_domain::LockInResult;

/// How the k = ±1 coherence rows couple to C_{±2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HarmonicClosure {
    /// Keep a·ω_m·C_{±2} in the k = ±1 rows; only C_{±3} is dropped.
    #[default]
    Consistent,
    /// Drop a·ω_m·C_{±2} from the k = ±1 rows (strict O(a²) bookkeeping).
    DropOuterCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierAmplitudes {
    /// C_k at index k + 2.
    pub c: [Complex64; 5],
    /// G_0 (real part of the solved value).
    pub g0: f64,
    pub g1: Complex64,
    pub g2: Complex64,
    /// Im G_0 from the solve; zero up to rounding.
    pub g0_imag_residual: f64,
}

impl FourierAmplitudes {
    pub fn coherence(&self, k: i32) -> Complex64 {
        self.c[(k + 2) as usize]
    }

    /// G_k with G_{−k} = G_k*.
    pub fn population(&self, k: i32) -> Complex64 {
        let g = match k.abs() {
            0 => Complex64::new(self.g0, 0.0),
            1 => self.g1,
            2 => self.g2,
            _ => Complex64::new(0.0, 0.0),
        };
        if k < 0 {
            g.conj()
        } else {
            g
        }
    }

    /// κ(t) rebuilt from the retained harmonics.
    pub fn kappa_at(&self, t: f64, omega_m: f64, c: &DerivedCouplings) -> f64 {
        let mut rho22 = 0.0;
        let mut rho21 = Complex64::new(0.0, 0.0);
        for k in -2..=2 {
            let e = Complex64::from_polar(1.0, -(k as f64) * omega_m * t);
            rho22 += (self.population(k) * e).re;
            rho21 += self.coherence(k) * e;
        }
        let rho11 = 1.0 - rho22;
        c.absorption_scale
            * (c.rabi_l * c.rabi_l * rho22 + c.rabi_r * c.rabi_r * rho11
                - 2.0 * c.rabi_l * c.rabi_r * rho21.re)
    }
}

type Sys = SMatrix<f64, 16, 16>;

struct Builder {
    m: Sys,
    b: SVector<f64, 16>,
}

impl Builder {
    /// Add coef·z_var (or coef·z̄_var) to complex equation `eq`.
    fn add(&mut self, eq: usize, var: usize, coef: Complex64, conj: bool) {
        let (re, im) = (2 * eq, 2 * eq + 1);
        let (x, y) = (2 * var, 2 * var + 1);
        let s = if conj { -1.0 } else { 1.0 };
        self.m[(re, x)] += coef.re;
        self.m[(re, y)] -= s * coef.im;
        self.m[(im, x)] += coef.im;
        self.m[(im, y)] += s * coef.re;
    }

    fn rhs(&mut self, eq: usize, v: Complex64) {
        self.b[2 * eq] += v.re;
        self.b[2 * eq + 1] += v.im;
    }
}

fn c_var(k: i32) -> usize {
    (k + 2) as usize
}

fn g_var(k: i32) -> usize {
    5 + k.unsigned_abs() as usize
}

/// Solve for the harmonics given couplings and 2δ̃.
pub fn solve_with_couplings(
    c: &DerivedCouplings,
    modulation: &ModulationParams,
    two_delta_tilde: f64,
    closure: HarmonicClosure,
) -> Result<FourierAmplitudes> {
    modulation.validate()?;
    let w = modulation.omega_m;
    let aw = modulation.index * w;
    let k2 = 2.0 * c.asym;
    let one = Complex64::new(1.0, 0.0);
    let mut sys = Builder {
        m: Sys::zeros(),
        b: SVector::zeros(),
    };

    // (2δ̃ + kω + iΓ̃) C_k + aω (C_{k−1} + C_{k+1}) − 2𝒦 G_k = iV_LR δ_k0 − 𝒦 δ_k0
    for k in -2i32..=2 {
        let eq = c_var(k);
        sys.add(eq, c_var(k), Complex64::new(two_delta_tilde + k as f64 * w, c.width), false);
        for n in [k - 1, k + 1] {
            if n.abs() > 2 {
                continue;
            }
            if closure == HarmonicClosure::DropOuterCoupling && k.abs() == 1 && n.abs() == 2 {
                continue;
            }
            sys.add(eq, c_var(n), aw * one, false);
        }
        sys.add(eq, g_var(k), -k2 * one, k < 0);
        if k == 0 {
            sys.rhs(eq, Complex64::new(-c.asym, c.raman));
        }
    }
    // (kω + iΓ̃) G_k − 𝒦 C_k + 𝒦 C*_{−k} = i(V_R + Γ_g/2) δ_k0
    for k in 0i32..=2 {
        let eq = g_var(k);
        sys.add(eq, g_var(k), Complex64::new(k as f64 * w, c.width), false);
        sys.add(eq, c_var(k), -c.asym * one, false);
        sys.add(eq, c_var(-k), c.asym * one, true);
        if k == 0 {
            sys.rhs(eq, Complex64::new(0.0, c.pump_r + 0.5 * c.gamma_g));
        }
    }

    let lu = sys.m.lu();
    let x = lu.solve(&sys.b).ok_or_else(|| {
        let u = lu.u();
        let d: Vec<f64> = (0..16).map(|i| u[(i, i)].abs()).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        Error::Singular {
            context: "Fourier amplitude system",
            pivot_ratio: if max > 0.0 { min / max } else { 0.0 },
        }
    })?;
    let z = |v: usize| Complex64::new(x[2 * v], x[2 * v + 1]);
    Ok(FourierAmplitudes {
        c: [z(0), z(1), z(2), z(3), z(4)],
        g0: z(5).re,
        g1: z(6),
        g2: z(7),
        g0_imag_residual: z(5).im,
    })
}

/// Harmonics of ρ21 and ρ22 at detuning δ from the unperturbed transition.
pub fn solve_fourier_amplitudes(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    delta: f64,
    closure: HarmonicClosure,
) -> Result<FourierAmplitudes> {
    let c = derive_couplings(atom, spectrum)?;
    if modulation.beyond_validity() {
        log::warn!("modulation index {} exceeds the truncation's range", modulation.index);
    }
    solve_with_couplings(&c, modulation, c.two_delta_tilde(delta), closure)
}

/// First-harmonic lock-in amplitudes from the Fourier solution, normalized
/// like [`crate::time_domain::lockin`].
pub fn signals_from_amplitudes(
    amps: &FourierAmplitudes,
    c: &DerivedCouplings,
    phase: f64,
) -> LockInResult {
    let dv2 = c.rabi_l * c.rabi_l - c.rabi_r * c.rabi_r;
    let vv = c.rabi_l * c.rabi_r;
    let sum = amps.coherence(1) + amps.coherence(-1);
    let diff = amps.coherence(1) - amps.coherence(-1);
    let pre = 2.0 * c.absorption_scale;
    LockInResult {
        in_phase: pre * (dv2 * amps.g1.re - vv * sum.re),
        quadrature: pre * (dv2 * amps.g1.im - vv * diff.im),
        phase: 0.0,
    }
    .rotated(phase)
}

/// Signals from the Fourier solve at detuning δ.
pub fn harmonic_signals(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    delta: f64,
    closure: HarmonicClosure,
) -> Result<LockInResult> {
    let c = derive_couplings(atom, spectrum)?;
    let amps = solve_with_couplings(&c, modulation, c.two_delta_tilde(delta), closure)?;
    Ok(signals_from_amplitudes(&amps, &c, modulation.phase))
}

/// Closed-form signals plus flags for violated small-parameter assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSignals {
    pub signals: LockInResult,
    /// |2δ̃| > 0.2 Γ̃_g.
    pub outside_window: bool,
    /// (Δ_L/Γ)² > 0.01.
    pub large_detuning: bool,
    /// 𝒦² > 0.01 Γ̃_g².
    pub strong_asymmetry: bool,
}

impl LinearizedSignals {
    pub fn trusted(&self) -> bool {
        !(self.outside_window || self.large_detuning || self.strong_asymmetry)
    }
}

/// Slope A of S in 2δ̃.
pub fn linear_slope(c: &DerivedCouplings, modulation: &ModulationParams) -> f64 {
    let g = c.width;
    let w = modulation.omega_m;
    let den = (g * g + w * w).powi(2);
    c.absorption_scale * 8.0 * modulation.index * w * c.raman * c.rabi_l * c.rabi_r * g / den
}

/// δ_as = 𝒦 (𝒱_L² − 𝒱_R²)/(𝒱_L𝒱_R) · (Γ̃_g² + ω_m²)/Γ̃_g².
pub fn asymmetry_term(c: &DerivedCouplings, modulation: &ModulationParams) -> f64 {
    let g2 = c.width * c.width;
    let w2 = modulation.omega_m * modulation.omega_m;
    let dv2 = c.rabi_l * c.rabi_l - c.rabi_r * c.rabi_r;
    c.asym * dv2 / (c.rabi_l * c.rabi_r) * (g2 + w2) / g2
}

pub fn linearized_with_couplings(
    atom: &AtomParams,
    c: &DerivedCouplings,
    modulation: &ModulationParams,
    delta: f64,
) -> LinearizedSignals {
    let g = c.width;
    let w = modulation.omega_m;
    let a = modulation.index;
    let tdt = c.two_delta_tilde(delta);
    let vv = c.rabi_l * c.rabi_r;
    let dv2 = c.rabi_l * c.rabi_l - c.rabi_r * c.rabi_r;
    let gw = g * g + w * w;
    let pre = c.absorption_scale * 8.0 * a * w * c.raman;
    let s = pre * (tdt * vv * g * g + c.asym * dv2 * gw) / (g * gw * gw);
    let q = pre * w * (0.5 * tdt * vv * (3.0 * g * g + w * w) + c.asym * dv2 * gw)
        / (g * g * gw * gw);
    LinearizedSignals {
        signals: LockInResult {
            in_phase: s,
            quadrature: q,
            phase: 0.0,
        }
        .rotated(modulation.phase),
        outside_window: tdt.abs() > 0.2 * g,
        large_detuning: (atom.detuning / atom.gamma_opt).powi(2) > 0.01,
        strong_asymmetry: c.asym * c.asym > 0.01 * g * g,
    }
}

/// Closed-form S and Q, valid near the line centre.
pub fn linearized_signals(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    delta: f64,
) -> Result<LinearizedSignals> {
    modulation.validate()?;
    let c = derive_couplings(atom, spectrum)?;
    Ok(linearized_with_couplings(atom, &c, modulation, delta))
}

/// Decomposition of the predicted zero crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBreakdown {
    pub delta_r: f64,
    pub delta_nr: f64,
    pub delta_as: f64,
    /// A in S = A(2δ + δ_r + δ_nr + δ_as).
    pub slope: f64,
    /// −(δ_r + δ_nr + δ_as)/2.
    pub delta_0_predicted: f64,
}

pub fn shift_breakdown(c: &DerivedCouplings, modulation: &ModulationParams) -> Result<ShiftBreakdown> {
    if !(c.rabi_l * c.rabi_r > 0.0) {
        return Err(Error::invalid("spectrum", "asymmetry shift needs both resonant sidebands"));
    }
    let delta_as = asymmetry_term(c, modulation);
    Ok(ShiftBreakdown {
        delta_r: c.shift_res,
        delta_nr: c.shift_nonres,
        delta_as,
        slope: linear_slope(c, modulation),
        delta_0_predicted: -0.5 * (c.shift_res + c.shift_nonres + delta_as),
    })
}

pub fn asymmetry_shift(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
) -> Result<ShiftBreakdown> {
    modulation.validate()?;
    let c = derive_couplings(atom, spectrum)?;
    shift_breakdown(&c, modulation)
}
