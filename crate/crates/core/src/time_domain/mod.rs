//! Direct integration of the reduced ground-state equations under phase
//! modulation, absorption, and lock-in demodulation.

mod full_lambda;

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_couplings, AtomParams, DerivedCouplings, FieldSpectrum, ModulationParams};
use crate::numerics::rk4_step;

pub use full_lambda::{steady_state_full_lambda, FullDensityMatrix};

/// Ground-state block of the density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    pub rho22: f64,
    pub rho11: f64,
    pub rho21: Complex64,
}

impl GroundState {
    /// Unpolarized, incoherent start.
    pub fn equilibrium() -> Self {
        GroundState {
            rho22: 0.5,
            rho11: 0.5,
            rho21: Complex64::new(0.0, 0.0),
        }
    }

    fn from_vec(y: &[f64; 4]) -> Self {
        GroundState {
            rho22: y[0],
            rho11: y[1],
            rho21: Complex64::new(y[2], y[3]),
        }
    }

    fn to_vec(self) -> [f64; 4] {
        [self.rho22, self.rho11, self.rho21.re, self.rho21.im]
    }
}

/// Lock-in output at detection phase `phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInResult {
    pub in_phase: f64,
    pub quadrature: f64,
    pub phase: f64,
}

impl LockInResult {
    /// Re-project onto a different detection phase.
    pub fn rotated(&self, phase: f64) -> LockInResult {
        let d = phase - self.phase;
        let (s, c) = d.sin_cos();
        LockInResult {
            in_phase: self.in_phase * c - self.quadrature * s,
            quadrature: self.in_phase * s + self.quadrature * c,
            phase,
        }
    }
}

/// κ = (2P/γΓ)(𝒱_L²ρ22 + 𝒱_R²ρ11 − 2𝒱_L𝒱_R Re ρ21).
pub fn absorption(state: &GroundState, c: &DerivedCouplings) -> f64 {
    c.absorption_scale
        * (c.rabi_l * c.rabi_l * state.rho22 + c.rabi_r * c.rabi_r * state.rho11
            - 2.0 * c.rabi_l * c.rabi_r * state.rho21.re)
}

/// Integration grid controls. `None` picks the automatic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainSettings {
    pub steps_per_period: Option<usize>,
    /// Transient to discard, seconds. Rounded up to whole periods.
    pub transient: Option<f64>,
    /// Recorded periods after the transient.
    pub periods: usize,
}

impl Default for TimeDomainSettings {
    fn default() -> Self {
        TimeDomainSettings {
            steps_per_period: None,
            transient: None,
            periods: 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    steps_per_period: usize,
    transient_periods: usize,
    periods: usize,
}

impl TimeDomainSettings {
    fn resolve(&self, width: f64, period: f64) -> Result<Grid> {
        let min_steps = (period * width / 0.02).ceil().max(200.0) as usize;
        let steps_per_period = match self.steps_per_period {
            Some(n) if n < min_steps => {
                return Err(Error::TimeGrid(format!(
                    "{n} steps per period is below the required {min_steps}"
                )))
            }
            Some(n) => n,
            None => min_steps,
        };
        let min_transient = (10.0 / width).max(5.0 * period);
        let transient = match self.transient {
            Some(t) if t < min_transient * (1.0 - 1e-12) => {
                return Err(Error::TimeGrid(format!(
                    "transient {t:.3e} s is shorter than {min_transient:.3e} s"
                )))
            }
            Some(t) => t,
            None => (20.0 / width).max(5.0 * period),
        };
        if self.periods < 4 {
            return Err(Error::TimeGrid("at least 4 recorded periods required".into()));
        }
        Ok(Grid {
            steps_per_period,
            transient_periods: (transient / period - 1e-9).ceil() as usize,
            periods: self.periods,
        })
    }
}

/// Post-transient samples on a uniform grid spanning whole periods.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub states: Vec<GroundState>,
    pub kappa: Vec<f64>,
    pub step: f64,
}

impl TimeTrace {
    /// CSV dump: t, rho22, rho11, Re_rho21, Im_rho21, kappa.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,rho22,rho11,Re_rho21,Im_rho21,kappa")?;
        for ((t, s), k) in self.times.iter().zip(&self.states).zip(&self.kappa) {
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                t, s.rho22, s.rho11, s.rho21.re, s.rho21.im, k
            )?;
        }
        Ok(())
    }
}

fn rhs(
    c: &DerivedCouplings,
    two_dt: f64,
    a_omega: f64,
    omega_m: f64,
) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |t, y| {
        let theta = two_dt + 2.0 * a_omega * (omega_m * t).cos();
        let (p22, p11, x, yy) = (y[0], y[1], y[2], y[3]);
        let pump = 2.0 * c.asym * yy;
        [
            -c.pump_l * p22 + c.pump_r * p11 + pump - c.gamma_g * (p22 - 0.5),
            -c.pump_r * p11 + c.pump_l * p22 - pump - c.gamma_g * (p11 - 0.5),
            c.raman - theta * yy - c.width * x,
            -c.asym * (p22 - p11) + theta * x - c.width * yy,
        ]
    }
}

/// Integrate from equilibrium through the transient and record whole
/// modulation periods. δ is the detuning from the unperturbed 0-0
/// transition; light shifts are added internally.
pub fn integrate_ground_state(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    delta: f64,
    settings: &TimeDomainSettings,
) -> Result<TimeTrace> {
    modulation.validate()?;
    let c = derive_couplings(atom, spectrum)?;
    integrate_with_couplings(&c, modulation, c.two_delta_tilde(delta), settings)
}

/// Same as [`integrate_ground_state`] with couplings and 2δ̃ supplied.
pub fn integrate_with_couplings(
    c: &DerivedCouplings,
    modulation: &ModulationParams,
    two_delta_tilde: f64,
    settings: &TimeDomainSettings,
) -> Result<TimeTrace> {
    modulation.validate()?;
    let period = modulation.period();
    let grid = settings.resolve(c.width, period)?;
    let n = grid.steps_per_period;
    let h = period / n as f64;
    let f = rhs(c, two_delta_tilde, modulation.index * modulation.omega_m, modulation.omega_m);

    let mut y = GroundState::equilibrium().to_vec();
    let mut step = 0usize;
    for _ in 0..grid.transient_periods * n {
        y = rk4_step(&f, step as f64 * h, &y, h);
        step += 1;
    }
    let samples = grid.periods * n + 1;
    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    let mut kappa = Vec::with_capacity(samples);
    for i in 0..samples {
        if i > 0 {
            y = rk4_step(&f, step as f64 * h, &y, h);
            step += 1;
        }
        let s = GroundState::from_vec(&y);
        times.push(step as f64 * h);
        kappa.push(absorption(&s, c));
        states.push(s);
    }
    Ok(TimeTrace {
        times,
        states,
        kappa,
        step: h,
    })
}

/// Demodulate κ(t) with (2/T)∫κ cos(ω_m t + α) and (2/T)∫κ sin(ω_m t + α),
/// trapezoid rule over the whole trace.
pub fn lockin(trace: &TimeTrace, omega_m: f64, phase: f64) -> Result<LockInResult> {
    if !(omega_m > 0.0) {
        return Err(Error::invalid("omega_m", "must be > 0"));
    }
    let n = trace.times.len();
    if n < 2 {
        return Err(Error::TimeGrid("trace too short".into()));
    }
    let period = TAU / omega_m;
    let per_step = period / trace.step;
    if (per_step - per_step.round()).abs() > 1e-9 * per_step {
        return Err(Error::TimeGrid("step does not divide the modulation period".into()));
    }
    let span = trace.times[n - 1] - trace.times[0];
    let cycles = span / period;
    if (cycles - cycles.round()).abs() > 1e-9 * cycles.max(1.0) {
        return Err(Error::TimeGrid(format!(
            "trace spans {cycles:.6} periods, not an integer"
        )));
    }
    if cycles.round() < 4.0 {
        return Err(Error::TimeGrid("at least 4 periods required".into()));
    }
    let mut s = 0.0;
    let mut q = 0.0;
    for (i, (&t, &k)) in trace.times.iter().zip(&trace.kappa).enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let (sn, cs) = (omega_m * t + phase).sin_cos();
        s += w * k * cs;
        q += w * k * sn;
    }
    let norm = 2.0 * trace.step / span;
    Ok(LockInResult {
        in_phase: s * norm,
        quadrature: q * norm,
        phase,
    })
}

/// Stationary solution of the reduced equations without modulation.
pub fn reduced_steady_state(c: &DerivedCouplings, two_delta_tilde: f64) -> Result<GroundState> {
    let f = rhs(c, two_delta_tilde, 0.0, 1.0);
    let b = f(0.0, &[0.0; 4]);
    let mut m = Matrix4::zeros();
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let col = f(0.0, &e);
        for i in 0..4 {
            m[(i, j)] = col[i] - b[i];
        }
    }
    let rhs_vec = -Vector4::new(b[0], b[1], b[2], b[3]);
    let x = m.lu().solve(&rhs_vec).ok_or(Error::Singular {
        context: "reduced steady state",
        pivot_ratio: 0.0,
    })?;
    Ok(GroundState::from_vec(&[x[0], x[1], x[2], x[3]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bessel_spectrum;
    use crate::units::hz;
    use proptest::prelude::*;

    fn setup(eps: f64, power: f64) -> (AtomParams, FieldSpectrum) {
        let atom = AtomParams::rb87();
        let s = bessel_spectrum(1.8, eps, 5, atom.half_splitting(), power).unwrap();
        (atom, s)
    }

    fn power_for_broadening(atom: &AtomParams, s: &FieldSpectrum, target: f64) -> f64 {
        let c = derive_couplings(atom, s).unwrap();
        s.total_power() * target / (c.pump_l + c.pump_r)
    }

    #[test]
    fn dark_state_does_not_absorb() {
        let (atom, s) = setup(0.0, 1e8);
        let c = derive_couplings(&atom, &s).unwrap();
        let st = GroundState {
            rho22: 0.5,
            rho11: 0.5,
            rho21: Complex64::new(0.5, 0.0),
        };
        assert!(absorption(&st, &c).abs() < 1e-18 * c.absorption_scale * c.rabi_l.powi(2));
    }

    #[test]
    fn incoherent_absorption() {
        let (atom, s) = setup(0.3, 1e8);
        let c = derive_couplings(&atom, &s).unwrap();
        let st = GroundState {
            rho22: 0.7,
            rho11: 0.3,
            rho21: Complex64::new(0.0, 0.1),
        };
        let want = c.absorption_scale * (c.rabi_l.powi(2) * 0.7 + c.rabi_r.powi(2) * 0.3);
        assert!((absorption(&st, &c) - want).abs() < 1e-12 * want);
    }

    proptest! {
        #[test]
        fn absorption_term_by_term(p in 0.0f64..1.0, coh in 0.0f64..1.0, ph in 0.0f64..TAU, eps in -0.5f64..0.5) {
            let (atom, s) = setup(eps, 1e8);
            let c = derive_couplings(&atom, &s).unwrap();
            let r = coh * (p * (1.0 - p)).sqrt();
            let st = GroundState { rho22: p, rho11: 1.0 - p, rho21: Complex64::from_polar(r, ph) };
            // P from its definition, V_L, V_R straight from the spectrum
            let g = atom.gamma_opt;
            let pw = g * g / (atom.detuning.powi(2) + g * g)
                + g * g / ((atom.detuning + atom.omega_e).powi(2) + g * g);
            let l = s.amplitude(-1);
            let rr = s.amplitude(1);
            let want = 2.0 * pw / (atom.gamma_decay * g)
                * (l * l * p + rr * rr * (1.0 - p) - 2.0 * l * rr * st.rho21.re);
            let got = absorption(&st, &c);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-300);
            prop_assert!(got >= -1e-12 * c.absorption_scale * (l * l + rr * rr));
        }
    }

    fn synthetic_trace(omega: f64, f: impl Fn(f64) -> f64, periods: usize, n: usize) -> TimeTrace {
        let h = TAU / omega / n as f64;
        let times: Vec<f64> = (0..=periods * n).map(|i| 3.0 + i as f64 * h).collect();
        let kappa = times.iter().map(|&t| f(t)).collect();
        let states = vec![GroundState::equilibrium(); times.len()];
        TimeTrace {
            times,
            states,
            kappa,
            step: h,
        }
    }

    #[test]
    fn lockin_constant_gives_zero() {
        let w = 7.0;
        let tr = synthetic_trace(w, |_| 2.5, 4, 256);
        let r = lockin(&tr, w, 0.3).unwrap();
        assert!(r.in_phase.abs() < 1e-12 && r.quadrature.abs() < 1e-12);
    }

    #[test]
    fn lockin_projection_identity() {
        let w = 7.0;
        let tr = synthetic_trace(w, |t| 1.7 * (w * t).cos(), 5, 256);
        let r = lockin(&tr, w, 0.0).unwrap();
        assert!((r.in_phase - 1.7).abs() < 1e-12);
        assert!(r.quadrature.abs() < 1e-12);
    }

    #[test]
    fn lockin_rejects_fractional_periods() {
        let w = 7.0;
        let mut tr = synthetic_trace(w, |t| t.cos(), 5, 256);
        tr.times.pop();
        tr.kappa.pop();
        tr.states.pop();
        assert!(lockin(&tr, w, 0.0).is_err());
        let short = synthetic_trace(w, |t| t.cos(), 3, 256);
        assert!(lockin(&short, w, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn lockin_phase_rotation(alpha in -3.0f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let w = 3.0;
            let tr = synthetic_trace(w, |t| 0.4 + a * (w * t).cos() + b * (w * t).sin() + 0.3 * (2.0 * w * t).cos(), 4, 300);
            let r0 = lockin(&tr, w, 0.0).unwrap();
            let ra = lockin(&tr, w, alpha).unwrap();
            let rot = r0.rotated(alpha);
            prop_assert!((ra.in_phase - rot.in_phase).abs() < 1e-9);
            prop_assert!((ra.quadrature - rot.quadrature).abs() < 1e-9);
        }
    }

    #[test]
    fn settings_bounds_enforced() {
        let (atom, s) = setup(0.0, 1e8);
        let m = ModulationParams::new(0.2, hz(200.0), 0.0).unwrap();
        let coarse = TimeDomainSettings {
            steps_per_period: Some(100),
            ..Default::default()
        };
        assert!(integrate_ground_state(&atom, &s, &m, 0.0, &coarse).is_err());
        let short = TimeDomainSettings {
            transient: Some(1e-4),
            ..Default::default()
        };
        assert!(integrate_ground_state(&atom, &s, &m, 0.0, &short).is_err());
        let few = TimeDomainSettings {
            periods: 2,
            ..Default::default()
        };
        assert!(integrate_ground_state(&atom, &s, &m, 0.0, &few).is_err());
        assert!(ModulationParams::new(0.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn unmodulated_trace_is_stationary() {
        let (atom, s0) = setup(0.0, 1.0);
        let p = power_for_broadening(&atom, &s0, hz(400.0));
        let s = s0.scale_power(p);
        let m = ModulationParams::new(0.0, hz(100.0), 0.0).unwrap();
        let tr = integrate_ground_state(&atom, &s, &m, 0.0, &TimeDomainSettings::default()).unwrap();
        let k0 = tr.kappa[0];
        for k in &tr.kappa {
            assert!((k - k0).abs() <= 1e-9 * k0.abs());
        }
        let c = derive_couplings(&atom, &s).unwrap();
        let ss = reduced_steady_state(&c, c.two_delta_tilde(0.0)).unwrap();
        let last = tr.states.last().unwrap();
        assert!((last.rho21 - ss.rho21).norm() < 1e-8);
        assert!((last.rho22 - ss.rho22).abs() < 1e-8);
    }

    #[test]
    fn vanishing_power_stays_at_equilibrium() {
        let (atom, s0) = setup(0.2, 1.0);
        let s = s0.scale_power(1e-30);
        let m = ModulationParams::new(0.3, hz(50.0), 0.0).unwrap();
        let tr = integrate_ground_state(&atom, &s, &m, hz(10.0), &TimeDomainSettings::default()).unwrap();
        for st in &tr.states {
            assert!((st.rho22 - 0.5).abs() < 1e-14);
            assert!((st.rho11 - 0.5).abs() < 1e-14);
            assert!(st.rho21.norm() < 1e-12);
        }
    }

    #[test]
    fn post_transient_invariants() {
        let (atom, s0) = setup(0.2, 1.0);
        let p = power_for_broadening(&atom, &s0, hz(600.0));
        let s = s0.scale_power(p);
        let c = derive_couplings(&atom, &s).unwrap();
        let m = ModulationParams::new(0.3, 0.5 * c.width, 0.0).unwrap();
        let tr = integrate_ground_state(&atom, &s, &m, 0.1 * c.width, &TimeDomainSettings::default()).unwrap();
        let kmax = tr.kappa.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let n = (m.period() / tr.step).round() as usize;
        for (i, st) in tr.states.iter().enumerate() {
            assert!((st.rho22 + st.rho11 - 1.0).abs() <= 1e-6);
            assert!(st.rho22 >= 0.0 && st.rho22 <= 1.0);
            assert!(st.rho21.norm() <= (st.rho22 * st.rho11).sqrt() + 1e-9);
            if i + n < tr.kappa.len() {
                assert!((tr.kappa[i] - tr.kappa[i + n]).abs() <= 1e-6 * kmax);
            }
        }
    }

    #[test]
    fn transient_doubling_is_converged() {
        let (atom, s0) = setup(0.2, 1.0);
        let p = power_for_broadening(&atom, &s0, hz(600.0));
        let s = s0.scale_power(p);
        let c = derive_couplings(&atom, &s).unwrap();
        let m = ModulationParams::new(0.2, 0.5 * c.width, 0.0).unwrap();
        let base = TimeDomainSettings::default();
        let t0 = (20.0 / c.width).max(5.0 * m.period());
        let long = TimeDomainSettings {
            transient: Some(2.0 * t0),
            ..base
        };
        let delta = 0.05 * c.width;
        let r1 = lockin(&integrate_ground_state(&atom, &s, &m, delta, &base).unwrap(), m.omega_m, 0.0).unwrap();
        let r2 = lockin(&integrate_ground_state(&atom, &s, &m, delta, &long).unwrap(), m.omega_m, 0.0).unwrap();
        let scale = r1.in_phase.abs().max(r1.quadrature.abs());
        assert!((r1.in_phase - r2.in_phase).abs() < 1e-3 * scale);
        assert!((r1.quadrature - r2.quadrature).abs() < 1e-3 * scale);
    }

    #[test]
    fn trace_csv_layout() {
        let tr = synthetic_trace(1.0, |t| t, 4, 200);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,rho22,rho11,Re_rho21,Im_rho21,kappa"));
        assert_eq!(text.lines().count(), tr.times.len() + 1);
        assert!(text.ends_with('\n'));
    }
}
