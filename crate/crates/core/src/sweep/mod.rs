//! Zero crossings, insensitivity points and points of zero displacement
//! over spectrum-family sweeps.

mod servo;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonic::{harmonic_signals, linearized_with_couplings, HarmonicClosure};
use crate::model::{derive_couplings, AtomParams, FieldSpectrum, ModulationParams, SpectrumFamily};
use crate::numerics::brent;
use crate::thick::{averaged_over, slab_couplings, CellParams, SlabModel};
use crate::time_domain::{integrate_ground_state, lockin, TimeDomainSettings};

pub use servo::{servo_lock_experiment, ServoScenario, ServoTrace};

/// Guaranteed accuracy of [`zero_crossing`], relative to Γ̃_g. The solver
/// actually converges far tighter so that power derivatives stay clean.
pub const ROOT_TOLERANCE: f64 = 1e-4;

const ROOT_XTOL: f64 = 1e-11;

/// Relative power step for ∂δ_0/∂E².
pub const POWER_STEP: f64 = 1e-3;

/// Route used to evaluate the in-phase signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalPath {
    TimeDomain(TimeDomainSettings),
    Harmonic(HarmonicClosure),
    Linearized,
    Thick { cell: CellParams, slab: SlabModel },
}

impl SignalPath {
    pub fn name(&self) -> &'static str {
        match self {
            SignalPath::TimeDomain(_) => "time-domain",
            SignalPath::Harmonic(_) => "harmonic",
            SignalPath::Linearized => "linearized",
            SignalPath::Thick { .. } => "thick",
        }
    }
}

/// S(δ) on the chosen path at the modulation's detection phase.
pub fn in_phase_signal(
    path: &SignalPath,
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    delta: f64,
) -> Result<f64> {
    match path {
        SignalPath::TimeDomain(settings) => {
            let tr = integrate_ground_state(atom, spectrum, modulation, delta, settings)?;
            Ok(lockin(&tr, modulation.omega_m, modulation.phase)?.in_phase)
        }
        SignalPath::Harmonic(closure) => {
            Ok(harmonic_signals(atom, spectrum, modulation, delta, *closure)?.in_phase)
        }
        SignalPath::Linearized => {
            let c = derive_couplings(atom, spectrum)?;
            Ok(linearized_with_couplings(atom, &c, modulation, delta).signals.in_phase)
        }
        SignalPath::Thick { cell, slab } => {
            let slabs = slab_couplings(atom, spectrum, cell)?;
            Ok(averaged_over(atom, &slabs, modulation, delta, *slab)?.in_phase)
        }
    }
}

/// Detuning δ_0 where S changes sign. The default bracket is ±Γ̃_g around
/// the light-shifted line centre −(δ_r + δ_nr)/2.
pub fn zero_crossing(
    path: &SignalPath,
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    bracket: Option<(f64, f64)>,
) -> Result<f64> {
    modulation.validate()?;
    let c = derive_couplings(atom, spectrum)?;
    let (lo, hi) = bracket.unwrap_or_else(|| {
        let centre = -0.5 * (c.shift_res + c.shift_nonres);
        (centre - c.width, centre + c.width)
    });
    let xtol = ROOT_XTOL * c.width;
    match path {
        SignalPath::Linearized => brent(
            |d| Ok(linearized_with_couplings(atom, &c, modulation, d).signals.in_phase),
            lo,
            hi,
            xtol,
            200,
        ),
        SignalPath::Thick { cell, slab } => {
            let slabs = slab_couplings(atom, spectrum, cell)?;
            brent(
                |d| Ok(averaged_over(atom, &slabs, modulation, d, *slab)?.in_phase),
                lo,
                hi,
                xtol,
                200,
            )
        }
        _ => brent(
            |d| in_phase_signal(path, atom, spectrum, modulation, d),
            lo,
            hi,
            xtol,
            200,
        ),
    }
}

/// Total power that gives V_L + V_R = `broadening` for the family at `m`.
pub fn power_for_broadening(
    atom: &AtomParams,
    family: &SpectrumFamily,
    m: f64,
    broadening: f64,
) -> Result<f64> {
    let s = family.spectrum(m, atom.half_splitting(), 1.0)?;
    let c = derive_couplings(atom, &s)?;
    let pump = c.pump_l + c.pump_r;
    if !(pump > 0.0) {
        return Err(Error::invalid("m", "resonant sidebands vanish at the reference depth"));
    }
    Ok(broadening / pump)
}

/// Γ̃_g of the family at depth `m` and power `total_power`.
pub fn width_at(atom: &AtomParams, family: &SpectrumFamily, m: f64, total_power: f64) -> Result<f64> {
    let s = family.spectrum(m, atom.half_splitting(), total_power)?;
    Ok(derive_couplings(atom, &s)?.width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordFlags {
    /// Nearest grid point to an IP root.
    pub ip: bool,
    /// Nearest grid point to a PZD root.
    pub pzd: bool,
    /// Halving the power step moved the derivative by more than 1%.
    pub derivative_unverified: bool,
}

impl RecordFlags {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.ip {
            parts.push("IP");
        }
        if self.pzd {
            parts.push("PZD");
        }
        if self.derivative_unverified {
            parts.push("DERIV?");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub m: f64,
    /// E², rad²/s².
    pub e2: f64,
    /// δ_0, rad/s.
    pub delta0: f64,
    /// ∂δ_0/∂E², (rad/s)/(rad²/s²).
    pub d_delta0_d_e2: f64,
    pub flags: RecordFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    Ip,
    Pzd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootLocation {
    pub kind: RootKind,
    pub m: f64,
    /// δ_0 at the root; for an IP this is its offset from the PZD frequency.
    pub delta0: f64,
    /// For IPs, signed m-distance to the nearest PZD root.
    pub pzd_gap_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// IPs in increasing m.
    pub ips: Vec<RootLocation>,
    /// PZDs in increasing m.
    pub pzds: Vec<RootLocation>,
    /// Set when a root list is empty: extrema seen on the grid.
    pub diagnostics: Option<String>,
}

struct Evaluator<'a> {
    atom: &'a AtomParams,
    modulation: &'a ModulationParams,
    family: &'a SpectrumFamily,
    total_power: f64,
    path: &'a SignalPath,
}

impl Evaluator<'_> {
    fn spectrum(&self, m: f64, scale: f64) -> Result<FieldSpectrum> {
        self.family
            .spectrum(m, self.atom.half_splitting(), self.total_power * scale)
    }

    fn delta0(&self, m: f64, scale: f64) -> Result<f64> {
        let s = self.spectrum(m, scale)?;
        zero_crossing(self.path, self.atom, &s, self.modulation, None)
            .map_err(|e| e.with_context(format!("zero crossing at m = {m}, power x{scale}")))
    }

    /// (δ_0, ∂δ_0/∂E², Richardson check passed)
    fn point(&self, m: f64) -> Result<(f64, f64, bool)> {
        let d0 = self.delta0(m, 1.0)?;
        let de2 = |h: f64| -> Result<f64> {
            let p = self.delta0(m, 1.0 + h)?;
            let q = self.delta0(m, 1.0 - h)?;
            Ok((p - q) / (2.0 * h * self.total_power))
        };
        let d1 = de2(POWER_STEP)?;
        let d2 = de2(0.5 * POWER_STEP)?;
        let c = derive_couplings(self.atom, &self.spectrum(m, 1.0)?)?;
        let scale = 0.5 * (c.shift_res.abs() + c.shift_nonres.abs()) / self.total_power;
        let ok = (d1 - d2).abs() <= 0.01 * d2.abs().max(1e-2 * scale);
        Ok((d0, d1, ok))
    }

    fn derivative(&self, m: f64) -> Result<f64> {
        let p = self.delta0(m, 1.0 + POWER_STEP)?;
        let q = self.delta0(m, 1.0 - POWER_STEP)?;
        Ok((p - q) / (2.0 * POWER_STEP * self.total_power))
    }
}

/// Evaluate δ_0 and ∂δ_0/∂E² on `m_grid` and refine every sign change.
pub fn find_ips_and_pzds(
    atom: &AtomParams,
    modulation: &ModulationParams,
    family: &SpectrumFamily,
    total_power: f64,
    m_grid: &[f64],
    path: &SignalPath,
) -> Result<SweepOutcome> {
    family.validate()?;
    modulation.validate()?;
    if m_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("m_grid", "must be strictly increasing"));
    }
    let ev = Evaluator {
        atom,
        modulation,
        family,
        total_power,
        path,
    };
    let points: Vec<(f64, f64, bool)> = m_grid
        .par_iter()
        .map(|&m| ev.point(m))
        .collect::<Result<_>>()?;
    let mut records: Vec<SweepRecord> = m_grid
        .iter()
        .zip(&points)
        .map(|(&m, &(d0, dd, ok))| SweepRecord {
            m,
            e2: total_power,
            delta0: d0,
            d_delta0_d_e2: dd,
            flags: RecordFlags {
                derivative_unverified: !ok,
                ..Default::default()
            },
        })
        .collect();

    let xtol = 1e-10 * m_grid.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
    let mut pzds = Vec::new();
    let mut ips = Vec::new();
    for i in 0..records.len().saturating_sub(1) {
        let (a, b) = (records[i], records[i + 1]);
        if a.delta0 == 0.0 || a.delta0.signum() != b.delta0.signum() {
            let m = brent(|m| ev.delta0(m, 1.0), a.m, b.m, xtol, 200)?;
            pzds.push(RootLocation {
                kind: RootKind::Pzd,
                m,
                delta0: ev.delta0(m, 1.0)?,
                pzd_gap_m: None,
            });
        }
        if a.d_delta0_d_e2 == 0.0 || a.d_delta0_d_e2.signum() != b.d_delta0_d_e2.signum() {
            let m = brent(|m| ev.derivative(m), a.m, b.m, xtol, 200)?;
            ips.push(RootLocation {
                kind: RootKind::Ip,
                m,
                delta0: ev.delta0(m, 1.0)?,
                pzd_gap_m: None,
            });
        }
    }
    for ip in ips.iter_mut() {
        ip.pzd_gap_m = pzds
            .iter()
            .map(|p| ip.m - p.m)
            .min_by(|x, y| x.abs().total_cmp(&y.abs()));
    }
    let nearest = |m: f64| -> Option<usize> {
        (0..m_grid.len()).min_by(|&i, &j| (m_grid[i] - m).abs().total_cmp(&(m_grid[j] - m).abs()))
    };
    for r in &ips {
        if let Some(i) = nearest(r.m) {
            records[i].flags.ip = true;
        }
    }
    for r in &pzds {
        if let Some(i) = nearest(r.m) {
            records[i].flags.pzd = true;
        }
    }

    let diagnostics = if (ips.is_empty() || pzds.is_empty()) && !records.is_empty() {
        let ext = |f: fn(&SweepRecord) -> f64| {
            records.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        };
        let (d_lo, d_hi) = ext(|r| r.delta0);
        let (g_lo, g_hi) = ext(|r| r.d_delta0_d_e2);
        Some(format!(
            "delta0 range [{d_lo:.6e}, {d_hi:.6e}] rad/s; dDelta0/dE2 range [{g_lo:.6e}, {g_hi:.6e}]"
        ))
    } else if records.is_empty() {
        Some("empty grid".into())
    } else {
        None
    };

    Ok(SweepOutcome {
        records,
        ips,
        pzds,
        diagnostics,
    })
}

/// Every root of Δ/(Δ²+Γ²)·(1/r²) + (Δ+ω_e)/((Δ+ω_e)²+Γ²) = 0 on
/// (−ω_e, 0), ascending. Up to three exist when Γ is well below ω_e.
pub fn symmetrizing_roots(gamma: f64, omega_e: f64, dipole_ratio_sq: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("Gamma", "must be > 0"));
    }
    if !(omega_e > 0.0) {
        return Err(Error::invalid("omega_e", "must be > 0"));
    }
    if !(dipole_ratio_sq > 0.0 && dipole_ratio_sq <= 1.0) {
        return Err(Error::invalid("dipole_ratio_sq", "must lie in (0, 1]"));
    }
    let f = |d: f64| {
        let e = d + omega_e;
        d / (d * d + gamma * gamma) / dipole_ratio_sq + e / (e * e + gamma * gamma)
    };
    // The features near the interval ends have width ~Γ; resolve them.
    let n = ((8.0 * omega_e / gamma).ceil() as usize).clamp(4096, 1 << 22);
    let x = |i: usize| -omega_e + omega_e * i as f64 / n as f64;
    let mut roots = Vec::new();
    let mut prev = f(x(0));
    for i in 1..=n {
        let cur = f(x(i));
        if prev == 0.0 {
            roots.push(x(i - 1));
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            roots.push(brent(|d| Ok(f(d)), x(i - 1), x(i), 1e-14 * omega_e, 500)?);
        }
        prev = cur;
    }
    Ok(roots)
}

/// One-photon detuning that nulls 𝒦. When several roots exist the one
/// farthest from both interval ends is returned; it tends to −3ω_e/4 for
/// r² = 1/3 as Γ → 0.
pub fn symmetrizing_detuning(gamma: f64, omega_e: f64, dipole_ratio_sq: f64) -> Result<f64> {
    let roots = symmetrizing_roots(gamma, omega_e, dipole_ratio_sq)?;
    let interior = |d: f64| (d + omega_e).min(-d);
    let best = roots
        .into_iter()
        .max_by(|a, b| interior(*a).total_cmp(&interior(*b)));
    assert!(best.is_some(), "sign change on (-omega_e, 0) is guaranteed");
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::asymmetry_shift;
    use crate::units::{hz, mhz, to_mhz};

    fn setup(eps: f64) -> (AtomParams, SpectrumFamily, f64) {
        let atom = AtomParams::rb87();
        let fam = SpectrumFamily::residual_bessel(eps, 5, 0.025);
        let p = power_for_broadening(&atom, &fam, 3.0, hz(600.0)).unwrap();
        (atom, fam, p)
    }

    #[test]
    fn linearized_root_is_predicted_shift() {
        let (atom, fam, p) = setup(0.2);
        let s = fam.spectrum(2.8, atom.half_splitting(), p).unwrap();
        let w = derive_couplings(&atom, &s).unwrap().width;
        let md = ModulationParams::new(0.2, 0.5 * w, 0.0).unwrap();
        let root = zero_crossing(&SignalPath::Linearized, &atom, &s, &md, None).unwrap();
        let b = asymmetry_shift(&atom, &s, &md).unwrap();
        assert!((root - b.delta_0_predicted).abs() <= 1e-10 * w);
    }

    #[test]
    fn symmetric_shiftless_crossing_at_origin() {
        let (mut atom, fam, p) = setup(0.0);
        atom.detuning = symmetrizing_detuning(atom.gamma_opt, atom.omega_e, atom.dipole_ratio_sq).unwrap();
        // only the resonant pair: no non-resonant shift at all
        let full = fam.spectrum(2.8, atom.half_splitting(), p).unwrap();
        let s = FieldSpectrum::new(full.spacing(), [(-1, full.amplitude(-1)), (1, full.amplitude(1))]).unwrap();
        let c = derive_couplings(&atom, &s).unwrap();
        let md = ModulationParams::new(0.2, 0.5 * c.width, 0.0).unwrap();
        for path in [SignalPath::Linearized, SignalPath::Harmonic(HarmonicClosure::Consistent)] {
            let root = zero_crossing(&path, &atom, &s, &md, None).unwrap();
            let pure = -0.5 * c.shift_nonres;
            assert!((root - pure).abs() <= ROOT_TOLERANCE * c.width, "{}", path.name());
        }
    }

    #[test]
    fn no_crossing_reports_endpoints() {
        let (atom, fam, p) = setup(0.0);
        let s = fam.spectrum(2.8, atom.half_splitting(), p).unwrap();
        let w = derive_couplings(&atom, &s).unwrap().width;
        let md = ModulationParams::new(0.2, 0.5 * w, 0.0).unwrap();
        let err = zero_crossing(&SignalPath::Linearized, &atom, &s, &md, Some((w, 2.0 * w))).unwrap_err();
        assert!(matches!(err, Error::NoCrossing { .. }));
    }

    #[test]
    fn symmetrizing_limits() {
        let we = mhz(817.0);
        let narrow = symmetrizing_detuning(mhz(1e-3), we, 1.0 / 3.0).unwrap();
        assert!((to_mhz(narrow) + 612.75).abs() < 1e-3);
        let wide = symmetrizing_detuning(mhz(1000.0), we, 1.0 / 3.0).unwrap();
        assert!((to_mhz(wide) + 157.0).abs() < 2.0, "{}", to_mhz(wide));
        let atom = AtomParams {
            gamma_opt: mhz(1000.0),
            ..AtomParams::rb87()
        }
        .with_detuning(wide);
        let s = FieldSpectrum::new(atom.half_splitting(), [(-1, 1e4), (1, 2e4)]).unwrap();
        let c = derive_couplings(&atom, &s).unwrap();
        let scale = c.rabi_l * c.rabi_r / atom.gamma_opt;
        assert!(c.asym.abs() <= 1e-9 * scale);
    }

    #[test]
    fn narrow_lines_have_three_roots() {
        let roots = symmetrizing_roots(mhz(50.0), mhz(817.0), 1.0 / 3.0).unwrap();
        assert_eq!(roots.len(), 3);
        let mid = symmetrizing_detuning(mhz(50.0), mhz(817.0), 1.0 / 3.0).unwrap();
        assert_eq!(mid, roots[1]);
    }

    #[test]
    fn symmetrizing_independent_bisection() {
        // plain bisection on the same equation in MHz
        let (g, we) = (1000.0f64, 817.0f64);
        let f = |d: f64| 3.0 * d / (d * d + g * g) + (d + we) / ((d + we).powi(2) + g * g);
        let (mut lo, mut hi) = (-we, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = to_mhz(symmetrizing_detuning(mhz(g), mhz(we), 1.0 / 3.0).unwrap());
        assert!((got - 0.5 * (lo + hi)).abs() < 1e-6 * we);
    }

    #[test]
    fn symmetric_weak_power_ips_are_pzds() {
        let atom = AtomParams::rb87();
        let fam = SpectrumFamily::residual_bessel(0.0, 5, 0.025);
        let p = power_for_broadening(&atom, &fam, 3.0, hz(2.0)).unwrap();
        let w = width_at(&atom, &fam, 3.0, p).unwrap();
        let md = ModulationParams::new(0.2, 0.5 * w, 0.0).unwrap();
        let grid: Vec<f64> = (0..=24).map(|i| 2.2 + 0.06 * i as f64).collect();
        let out = find_ips_and_pzds(&atom, &md, &fam, p, &grid, &SignalPath::Linearized).unwrap();
        assert!(!out.pzds.is_empty());
        assert_eq!(out.ips.len(), out.pzds.len());
        for (ip, pzd) in out.ips.iter().zip(&out.pzds) {
            assert!((ip.m - pzd.m).abs() < 1e-3, "{} vs {}", ip.m, pzd.m);
            assert!(ip.delta0.abs() <= ROOT_TOLERANCE * w);
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let (atom, fam, p) = setup(0.2);
        let w = width_at(&atom, &fam, 3.0, p).unwrap();
        let md = ModulationParams::new(0.2, w, 0.0).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| 2.4 + 0.12 * i as f64).collect();
        let path = SignalPath::Harmonic(HarmonicClosure::Consistent);
        let a = find_ips_and_pzds(&atom, &md, &fam, p, &grid, &path).unwrap();
        let b = find_ips_and_pzds(&atom, &md, &fam, p, &grid, &path).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unsorted_grid_rejected() {
        let (atom, fam, p) = setup(0.2);
        let md = ModulationParams::new(0.2, 1000.0, 0.0).unwrap();
        assert!(find_ips_and_pzds(&atom, &md, &fam, p, &[1.0, 0.5], &SignalPath::Linearized).is_err());
    }

    #[test]
    fn empty_range_gives_diagnostics() {
        let (atom, fam, p) = setup(0.0);
        let md = ModulationParams::new(0.2, 1000.0, 0.0).unwrap();
        let grid = [0.5, 0.6, 0.7];
        let out = find_ips_and_pzds(&atom, &md, &fam, p, &grid, &SignalPath::Linearized).unwrap();
        assert!(out.ips.is_empty() && out.pzds.is_empty());
        assert!(out.diagnostics.is_some());
    }
}
