//! Emulation of the IP search by intensity modulation: an integral servo
//! holds δ on the zero crossing of S while the light intensity is varied
//! harmonically and the depth m is ramped slowly. The locked frequency's
//! response at the intensity frequency vanishes at IPs.

use std::f64::consts::TAU;

use nalgebra::{Matrix4, Vector4};

use super::{in_phase_signal, zero_crossing, SignalPath};
use crate::error::{Error, Result};
use crate::model::{derive_couplings, AtomParams, ModulationParams, SpectrumFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoScenario {
    pub m_start: f64,
    pub m_stop: f64,
    /// Number of intensity periods; m advances one grid step per period.
    pub grid_steps: usize,
    /// Nominal E².
    pub total_power: f64,
    /// Relative depth of the intensity modulation.
    pub intensity_depth: f64,
    /// Closed-loop time constant in ω_m periods.
    pub tau_periods: f64,
    /// Intensity period in servo time constants.
    pub intensity_period_tau: f64,
    /// Multiplier on the nominal integral gain; 0 opens the loop.
    pub gain_scale: f64,
    /// Start this far from the initial zero crossing, rad/s.
    pub initial_offset: f64,
}

impl ServoScenario {
    pub fn ramp(m_start: f64, m_stop: f64, grid_steps: usize, total_power: f64) -> Self {
        ServoScenario {
            m_start,
            m_stop,
            grid_steps,
            total_power,
            intensity_depth: 0.3,
            tau_periods: 20.0,
            intensity_period_tau: 50.0,
            gain_scale: 1.0,
            initial_offset: 0.0,
        }
    }

    pub fn grid_step(&self) -> f64 {
        (self.m_stop - self.m_start) / self.grid_steps as f64
    }

    /// Depth at the centre of each intensity period.
    pub fn window_centres(&self) -> Vec<f64> {
        (0..self.grid_steps)
            .map(|j| self.m_start + (j as f64 + 0.5) * self.grid_step())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.grid_steps == 0 {
            return Err(Error::invalid("grid_steps", "must be >= 1"));
        }
        if !(self.total_power > 0.0) {
            return Err(Error::invalid("total_power", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.intensity_depth) {
            return Err(Error::invalid("intensity_depth", "must lie in [0, 1)"));
        }
        if !(self.tau_periods >= 1.0) {
            return Err(Error::invalid("tau_periods", "must be >= 1"));
        }
        if !(self.intensity_period_tau >= 5.0) {
            return Err(Error::invalid(
                "intensity_period_tau",
                "intensity period must be long against the servo time constant",
            ));
        }
        if !(self.gain_scale >= 0.0) {
            return Err(Error::invalid("gain_scale", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServoTrace {
    pub times: Vec<f64>,
    /// Locked two-photon detuning, rad/s.
    pub delta: Vec<f64>,
    pub intensity: Vec<f64>,
    pub m: Vec<f64>,
    /// Depth at the centre of each completed intensity period.
    pub window_m: Vec<f64>,
    /// Amplitude of the locked-frequency response at the intensity
    /// frequency, rad/s, one value per completed intensity period.
    pub response: Vec<f64>,
    pub lock_lost: bool,
}

impl ServoTrace {
    /// Depths of interior local minima of the response.
    pub fn response_minima(&self) -> Vec<f64> {
        let r = &self.response;
        (1..r.len().saturating_sub(1))
            .filter(|&i| r[i] < r[i - 1] && r[i] <= r[i + 1])
            .map(|i| self.window_m[i])
            .collect()
    }
}

/// First-harmonic amplitude of `y` over one period, fitted jointly with
/// an offset and a linear drift.
fn window_response(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for (i, v) in y.iter().enumerate() {
        let x = (i as f64 + 0.5) / n;
        let (s, c) = (TAU * x).sin_cos();
        let row = Vector4::new(1.0, x - 0.5, c, s);
        ata += row * row.transpose();
        atb += row * *v;
    }
    match ata.lu().solve(&atb) {
        Some(p) => p[2].hypot(p[3]),
        None => 0.0,
    }
}

pub fn servo_lock_experiment(
    atom: &AtomParams,
    modulation: &ModulationParams,
    family: &SpectrumFamily,
    path: &SignalPath,
    scenario: &ServoScenario,
) -> Result<ServoTrace> {
    scenario.validate()?;
    modulation.validate()?;
    let spacing = atom.half_splitting();
    let dt = modulation.period();
    let tau = scenario.tau_periods * dt;
    let steps_per_window = (scenario.intensity_period_tau * scenario.tau_periods).round() as usize;
    let window = steps_per_window as f64 * dt;
    let total = scenario.grid_steps * steps_per_window;
    let m_at = |t: f64| scenario.m_start + scenario.grid_step() * t / window;
    let scale_at = |t: f64| 1.0 + scenario.intensity_depth * (TAU * t / window).sin();

    let s0 = family.spectrum(scenario.m_start, spacing, scenario.total_power)?;
    let c0 = derive_couplings(atom, &s0)?;
    let start = zero_crossing(path, atom, &s0, modulation, None)?;
    let h = 1e-3 * c0.width;
    let slope = (in_phase_signal(path, atom, &s0, modulation, start + h)?
        - in_phase_signal(path, atom, &s0, modulation, start - h)?)
        / (2.0 * h);
    if !(slope > 0.0) {
        return Err(Error::invalid("servo", "error-signal slope at lock point is not positive"));
    }
    let gain = scenario.gain_scale * dt / (tau * slope);

    let mut trace = ServoTrace {
        times: Vec::with_capacity(total),
        delta: Vec::with_capacity(total),
        intensity: Vec::with_capacity(total),
        m: Vec::with_capacity(total),
        window_m: Vec::new(),
        response: Vec::new(),
        lock_lost: false,
    };
    let mut delta = start + scenario.initial_offset;
    for n in 0..total {
        let t = (n as f64 + 0.5) * dt;
        let m = m_at(t);
        let scale = scale_at(t);
        let spec = family.spectrum(m, spacing, scenario.total_power * scale)?;
        let c = derive_couplings(atom, &spec)?;
        let centre = -0.5 * (c.shift_res + c.shift_nonres);
        if (delta - centre).abs() > c.width {
            trace.lock_lost = true;
            log::warn!("servo lost lock at t = {t:.4e} s, m = {m:.4}");
            break;
        }
        trace.times.push(t);
        trace.delta.push(delta);
        trace.intensity.push(scale);
        trace.m.push(m);
        let err = in_phase_signal(path, atom, &spec, modulation, delta)?;
        delta -= gain * err;
    }
    for (j, chunk) in trace.delta.chunks_exact(steps_per_window).enumerate() {
        trace.window_m.push(m_at((j as f64 + 0.5) * window));
        trace.response.push(window_response(chunk));
    }
    Ok(trace)
}
