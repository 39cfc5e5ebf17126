//! Scenario files: TOML with one table per block.
//!
//! Frequencies accept a bare number (Hz) or a string with a unit, e.g.
//! `"380 MHz"`. Parsing collects every problem before giving up.

use std::fmt;

use cptshift_core::units;
use cptshift_core::{
    AtomParams, CellParams, FamilyKind, HarmonicClosure, ModulationParams, SlabModel,
    SpectrumFamily, TimeDomainSettings,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.errors.len())?;
        for e in &self.errors {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// A frequency in Hz (cyclic). Stored and serialized as a plain number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Frequency(pub f64);

impl Frequency {
    pub fn rad_per_s(self) -> f64 {
        units::hz(self.0)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let split = t
            .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
            .unwrap_or(t.len());
        let (num, unit) = t.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("cannot read a number from {text:?}"))?;
        let scale = match unit.trim().to_ascii_lowercase().as_str() {
            "" | "hz" => 1.0,
            "khz" => 1e3,
            "mhz" => 1e6,
            "ghz" => 1e9,
            other => return Err(format!("unknown frequency unit {other:?} (use Hz, kHz, MHz, GHz)")),
        };
        Ok(Frequency(value * scale))
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Frequency(v)),
            Raw::Int(v) => Ok(Frequency(v as f64)),
            Raw::Text(s) => Frequency::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Detuning {
    Fixed(Frequency),
    Named(NamedDetuning),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedDetuning {
    /// Root of the symmetrizing condition, 𝒦 = 0.
    Symmetrizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bessel,
    ResidualBessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Linearized,
    Harmonic,
    TimeDomain,
    Thick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    Consistent,
    DropOuter,
}

impl From<Closure> for HarmonicClosure {
    fn from(c: Closure) -> Self {
        match c {
            Closure::Consistent => HarmonicClosure::Consistent,
            Closure::DropOuter => HarmonicClosure::DropOuterCoupling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlabKind {
    Linearized,
    Harmonic,
}

/// Outer sweep axis. The inner axis is always m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Single m sweep, no outer loop.
    None,
    /// ω_m/2π in Hz.
    OmegaM,
    /// ω_m in units of Γ̃_g at m_ref.
    OmegaMRel,
    /// β in 1/m.
    Beta,
    Epsilon,
    /// Multiplier on the total power.
    PowerScale,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::None => "none",
            Axis::OmegaM => "omega_m",
            Axis::OmegaMRel => "omega_m_rel",
            Axis::Beta => "beta",
            Axis::Epsilon => "epsilon",
            Axis::PowerScale => "power_scale",
        }
    }
}

// Raw document: everything optional so that all problems can be reported.

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atom: Option<RawAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modulation: Option<RawModulation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectrum: Option<RawSpectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell: Option<RawCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<RawSolver>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawAtom {
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_g: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_e: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_g: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_decay: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dipole_ratio_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detuning: Option<Detuning>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawModulation {
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_m: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_m_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawSpectrum {
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    broadening: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_ref: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawCell {
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_slabs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slab: Option<SlabKind>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawSolver {
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closure: Option<Closure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps_per_period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    periods: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prefix: Option<String>,
}

// Resolved configuration.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomConfig {
    pub omega_g: Frequency,
    pub omega_e: Frequency,
    pub gamma: Frequency,
    pub gamma_g: Frequency,
    pub gamma_decay: Frequency,
    pub dipole_ratio_sq: f64,
    pub detuning: Detuning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModulationFrequency {
    Absolute(Frequency),
    /// Multiple of Γ̃_g at m_ref.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationConfig {
    pub index: f64,
    pub omega_m: ModulationFrequency,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PowerSpec {
    /// E² in rad²/s².
    Total(f64),
    /// V_L + V_R of the balanced spectrum at m_ref.
    Broadening(Frequency),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub family: Family,
    pub m_min: f64,
    pub m_max: f64,
    pub m_points: usize,
    pub epsilon: f64,
    pub k_max: usize,
    pub floor: f64,
    pub power: PowerSpec,
    pub m_ref: f64,
}

impl SpectrumConfig {
    pub fn family_with(&self, epsilon: f64) -> SpectrumFamily {
        let kind = match self.family {
            Family::Bessel => FamilyKind::Bessel,
            Family::ResidualBessel => FamilyKind::ResidualBessel { floor: self.floor },
        };
        SpectrumFamily {
            kind,
            epsilon,
            k_max: self.k_max,
        }
    }

    pub fn m_grid(&self) -> Vec<f64> {
        match self.m_points {
            0 => Vec::new(),
            1 => vec![self.m_min],
            n => (0..n)
                .map(|i| self.m_min + (self.m_max - self.m_min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellConfig {
    pub length: f64,
    pub beta: f64,
    pub n_slabs: usize,
    pub slab: SlabKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub path: PathKind,
    pub closure: Closure,
    pub steps_per_period: Option<usize>,
    pub transient: Option<f64>,
    pub periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: String,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub atom: AtomConfig,
    pub modulation: ModulationConfig,
    pub spectrum: SpectrumConfig,
    pub cell: Option<CellConfig>,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_K_MAX: usize = 5;
pub const DEFAULT_FLOOR: f64 = 0.025;
pub const DEFAULT_N_SLABS: usize = 64;

struct Collector(Vec<FieldError>);

impl Collector {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn require<T>(&mut self, field: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(field, "missing required value");
        }
        v
    }

    fn core(&mut self, block: &str, r: cptshift_core::Result<()>) {
        if let Err(e) = r {
            match e {
                cptshift_core::Error::InvalidParameter { field, reason } => {
                    self.push(&format!("{block}.{field}"), reason)
                }
                other => self.push(block, other.to_string()),
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut errs = Collector(Vec::new());
    let de = toml::Deserializer::new(text);
    let mut unknown = Vec::new();
    let raw: RawDoc = match serde_ignored::deserialize(de, |path| unknown.push(path.to_string().replace(".?", ""))) {
        Ok(r) => r,
        Err(e) => {
            errs.push("document", e.to_string().trim().to_string());
            return Err(ConfigError { errors: errs.0 });
        }
    };
    for key in unknown {
        errs.push(&key, "unknown key");
    }
    resolve(raw, errs)
}

fn resolve(raw: RawDoc, mut errs: Collector) -> Result<ScenarioConfig, ConfigError> {
    let rb = AtomParams::rb87();
    let a = raw.atom.unwrap_or_default();
    let hz = |v: f64| Frequency(units::to_hz(v));
    let atom = AtomConfig {
        omega_g: a.omega_g.unwrap_or(hz(rb.omega_g)),
        omega_e: a.omega_e.unwrap_or(hz(rb.omega_e)),
        gamma: a.gamma.unwrap_or(hz(rb.gamma_opt)),
        gamma_g: a.gamma_g.unwrap_or(hz(rb.gamma_g)),
        gamma_decay: a.gamma_decay.unwrap_or(hz(rb.gamma_decay)),
        dipole_ratio_sq: a.dipole_ratio_sq.unwrap_or(rb.dipole_ratio_sq),
        detuning: a.detuning.unwrap_or(Detuning::Fixed(hz(rb.detuning))),
    };
    let probe = AtomParams {
        detuning: 0.0,
        ..atom_params_with(&atom, 0.0)
    };
    errs.core("atom", probe.validate());

    let m = raw.modulation.unwrap_or_else(|| {
        errs.push("modulation", "missing required block");
        RawModulation::default()
    });
    let index = errs.require("modulation.index", m.index);
    let omega_m = match (m.omega_m, m.omega_m_rel) {
        (Some(f), None) => Some(ModulationFrequency::Absolute(f)),
        (None, Some(r)) => Some(ModulationFrequency::Relative(r)),
        (Some(_), Some(_)) => {
            errs.push("modulation", "give either omega_m or omega_m_rel, not both");
            None
        }
        (None, None) => {
            errs.push("modulation.omega_m", "missing required value (or omega_m_rel)");
            None
        }
    };
    let phase = m.phase.unwrap_or(0.0);
    if let (Some(index), Some(om)) = (index, &omega_m) {
        let w = match om {
            ModulationFrequency::Absolute(f) => f.rad_per_s(),
            ModulationFrequency::Relative(r) => *r,
        };
        errs.core("modulation", ModulationParams::new(index, w, phase).map(|_| ()));
        if index > 0.5 {
            log::warn!("modulation.index = {index} is past the a ≈ 1/2 accuracy limit");
        }
    }

    let s = raw.spectrum.unwrap_or_else(|| {
        errs.push("spectrum", "missing required block");
        RawSpectrum::default()
    });
    let m_min = errs.require("spectrum.m_min", s.m_min);
    let m_max = errs.require("spectrum.m_max", s.m_max);
    let m_points = errs.require("spectrum.m_points", s.m_points);
    if let (Some(lo), Some(hi)) = (m_min, m_max) {
        if !(lo >= 0.0 && hi.is_finite()) {
            errs.push("spectrum.m_min", "m range must be finite and >= 0");
        } else if m_points.unwrap_or(0) > 1 && !(hi > lo) {
            errs.push("spectrum.m_max", format!("must exceed m_min = {lo}"));
        }
    }
    let epsilon = s.epsilon.unwrap_or(0.0);
    if !(epsilon.abs() < 1.0) {
        errs.push("spectrum.epsilon", format!("must lie in (-1, 1), got {epsilon}"));
    }
    let power = match (s.total_power, s.broadening) {
        (Some(p), None) => {
            if !(p > 0.0 && p.is_finite()) {
                errs.push("spectrum.total_power", format!("must be > 0, got {p}"));
            }
            Some(PowerSpec::Total(p))
        }
        (None, Some(b)) => {
            if !(b.0 > 0.0 && b.0.is_finite()) {
                errs.push("spectrum.broadening", format!("must be > 0, got {} Hz", b.0));
            }
            Some(PowerSpec::Broadening(b))
        }
        (Some(_), Some(_)) => {
            errs.push("spectrum", "give either total_power or broadening, not both");
            None
        }
        (None, None) => {
            errs.push("spectrum.broadening", "missing required value (or total_power)");
            None
        }
    };
    let m_ref = s.m_ref.or(match (m_min, m_max) {
        (Some(lo), Some(hi)) => Some(0.5 * (lo + hi)),
        _ => None,
    });
    if let Some(r) = m_ref {
        if !(r >= 0.0 && r.is_finite()) {
            errs.push("spectrum.m_ref", format!("must be >= 0, got {r}"));
        }
    }
    let spectrum = SpectrumConfig {
        family: s.family.unwrap_or(Family::ResidualBessel),
        m_min: m_min.unwrap_or(0.0),
        m_max: m_max.unwrap_or(0.0),
        m_points: m_points.unwrap_or(0),
        epsilon,
        k_max: s.k_max.unwrap_or(DEFAULT_K_MAX),
        floor: s.floor.unwrap_or(DEFAULT_FLOOR),
        power: power.clone().unwrap_or(PowerSpec::Total(1.0)),
        m_ref: m_ref.unwrap_or(0.0),
    };
    if spectrum.epsilon.abs() < 1.0 {
        errs.core("spectrum", spectrum.family_with(epsilon).validate());
    }

    let cell = raw.cell.map(|c| {
        let cell = CellConfig {
            length: c.length.unwrap_or(1.0),
            beta: errs.require("cell.beta", c.beta).unwrap_or(0.0),
            n_slabs: c.n_slabs.unwrap_or(DEFAULT_N_SLABS),
            slab: c.slab.unwrap_or(SlabKind::Linearized),
        };
        errs.core("cell", cell_params(&cell).validate());
        cell
    });

    let so = raw.solver.unwrap_or_default();
    let solver = SolverConfig {
        path: so.path.unwrap_or(if cell.is_some() {
            PathKind::Thick
        } else {
            PathKind::Harmonic
        }),
        closure: so.closure.unwrap_or(Closure::Consistent),
        steps_per_period: so.steps_per_period,
        transient: so.transient,
        periods: so.periods.unwrap_or(4),
    };
    if solver.path == PathKind::Thick && cell.is_none() {
        errs.push("solver.path", "thick path needs a [cell] block");
    }
    if solver.path != PathKind::Thick && cell.is_some() {
        errs.push("cell", format!("only used by the thick path, solver.path is {:?}", solver.path));
    }
    if solver.periods < 4 {
        errs.push("solver.periods", format!("must be >= 4, got {}", solver.periods));
    }
    if let Some(t) = solver.transient {
        if !(t > 0.0 && t.is_finite()) {
            errs.push("solver.transient", format!("must be > 0 seconds, got {t}"));
        }
    }

    let sw = raw.sweep.unwrap_or_default();
    let axis = sw.axis.unwrap_or(Axis::None);
    let values = sw.values.unwrap_or_default();
    match axis {
        Axis::None if !values.is_empty() => errs.push("sweep.values", "axis = \"none\" takes no values"),
        Axis::None => {}
        _ if values.is_empty() => errs.push("sweep.values", format!("axis {} needs at least one value", axis.name())),
        _ => {}
    }
    for (i, &v) in values.iter().enumerate() {
        let field = format!("sweep.values[{i}]");
        let bad = match axis {
            Axis::OmegaM | Axis::OmegaMRel | Axis::PowerScale => !(v > 0.0 && v.is_finite()),
            Axis::Beta => !(v >= 0.0 && v.is_finite()),
            Axis::Epsilon => !(v.abs() < 1.0),
            Axis::None => false,
        };
        if bad {
            errs.push(&field, format!("{v} is out of range for axis {}", axis.name()));
        }
    }
    if axis == Axis::Beta && cell.is_none() {
        errs.push("sweep.axis", "beta sweep needs a [cell] block");
    }
    let sweep = SweepConfig { axis, values };

    let o = raw.output.unwrap_or_default();
    let output = OutputConfig {
        dir: o.dir.unwrap_or_else(|| "cptshift-out".into()),
        prefix: o.prefix.unwrap_or_else(|| "scenario".into()),
    };
    if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
        errs.push("output.prefix", "must be a non-empty file-name stem");
    }

    if !errs.0.is_empty() {
        return Err(ConfigError { errors: errs.0 });
    }
    Ok(ScenarioConfig {
        atom,
        modulation: ModulationConfig {
            index: index.unwrap_or_default(),
            omega_m: omega_m.unwrap_or(ModulationFrequency::Relative(1.0)),
            phase,
        },
        spectrum,
        cell,
        solver,
        sweep,
        output,
    })
}

/// Atom with the configured rates and the given one-photon detuning.
pub fn atom_params_with(a: &AtomConfig, detuning: f64) -> AtomParams {
    AtomParams {
        omega_g: a.omega_g.rad_per_s(),
        omega_e: a.omega_e.rad_per_s(),
        gamma_opt: a.gamma.rad_per_s(),
        gamma_g: a.gamma_g.rad_per_s(),
        gamma_decay: a.gamma_decay.rad_per_s(),
        dipole_ratio_sq: a.dipole_ratio_sq,
        detuning,
    }
}

pub fn cell_params(c: &CellConfig) -> CellParams {
    CellParams {
        length: c.length,
        beta: c.beta,
        n_slabs: c.n_slabs,
    }
}

pub fn slab_model(c: &CellConfig, closure: Closure) -> SlabModel {
    match c.slab {
        SlabKind::Linearized => SlabModel::Linearized,
        SlabKind::Harmonic => SlabModel::Harmonic(closure.into()),
    }
}

pub fn time_domain_settings(s: &SolverConfig) -> TimeDomainSettings {
    TimeDomainSettings {
        steps_per_period: s.steps_per_period,
        transient: s.transient,
        periods: s.periods,
    }
}

impl ScenarioConfig {
    /// TOML document that parses back to this configuration.
    pub fn to_toml(&self) -> String {
        let raw = RawDoc {
            atom: Some(RawAtom {
                omega_g: Some(self.atom.omega_g),
                omega_e: Some(self.atom.omega_e),
                gamma: Some(self.atom.gamma),
                gamma_g: Some(self.atom.gamma_g),
                gamma_decay: Some(self.atom.gamma_decay),
                dipole_ratio_sq: Some(self.atom.dipole_ratio_sq),
                detuning: Some(self.atom.detuning),
            }),
            modulation: Some(RawModulation {
                index: Some(self.modulation.index),
                omega_m: match self.modulation.omega_m {
                    ModulationFrequency::Absolute(f) => Some(f),
                    ModulationFrequency::Relative(_) => None,
                },
                omega_m_rel: match self.modulation.omega_m {
                    ModulationFrequency::Relative(r) => Some(r),
                    ModulationFrequency::Absolute(_) => None,
                },
                phase: Some(self.modulation.phase),
            }),
            spectrum: Some(RawSpectrum {
                family: Some(self.spectrum.family),
                m_min: Some(self.spectrum.m_min),
                m_max: Some(self.spectrum.m_max),
                m_points: Some(self.spectrum.m_points),
                epsilon: Some(self.spectrum.epsilon),
                k_max: Some(self.spectrum.k_max),
                floor: Some(self.spectrum.floor),
                total_power: match self.spectrum.power {
                    PowerSpec::Total(p) => Some(p),
                    PowerSpec::Broadening(_) => None,
                },
                broadening: match self.spectrum.power {
                    PowerSpec::Broadening(b) => Some(b),
                    PowerSpec::Total(_) => None,
                },
                m_ref: Some(self.spectrum.m_ref),
            }),
            cell: self.cell.as_ref().map(|c| RawCell {
                length: Some(c.length),
                beta: Some(c.beta),
                n_slabs: Some(c.n_slabs),
                slab: Some(c.slab),
            }),
            solver: Some(RawSolver {
                path: Some(self.solver.path),
                closure: Some(self.solver.closure),
                steps_per_period: self.solver.steps_per_period,
                transient: self.solver.transient,
                periods: Some(self.solver.periods),
            }),
            sweep: Some(RawSweep {
                axis: Some(self.sweep.axis),
                values: Some(self.sweep.values.clone()),
            }),
            output: Some(RawOutput {
                dir: Some(self.output.dir.clone()),
                prefix: Some(self.output.prefix.clone()),
            }),
        };
        toml::to_string(&raw).expect("configuration is always representable as TOML")
    }
}
