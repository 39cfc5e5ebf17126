//! Scenario orchestration: resolve physical inputs, sweep m for every
//! outer-axis value, write CSVs and a manifest.

use std::path::{Path, PathBuf};

use anyhow::Context;
use cptshift_core::sweep::{power_for_broadening, width_at};
use cptshift_core::units::to_hz;
use cptshift_core::{
    find_ips_and_pzds, symmetrizing_detuning, AtomParams, ModulationParams, SignalPath,
    SpectrumFamily, SweepOutcome,
};
use serde::Serialize;

use crate::config::{
    atom_params_with, cell_params, slab_model, time_domain_settings, Axis, CellConfig, Detuning,
    ModulationFrequency, NamedDetuning, PathKind, PowerSpec, ScenarioConfig,
};
use crate::output::{emit_csv, emit_roots, sha256_file, RootRow};

/// Overrides `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "CPTSHIFT_OUTPUT_DIR";

/// Physical quantities derived from the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub detuning_hz: f64,
    pub total_power: f64,
    /// Γ̃_g/2π at m_ref.
    pub width_ref_hz: f64,
    pub omega_m_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub axis_value: Option<f64>,
    pub file: String,
    pub ips: usize,
    pub pzds: usize,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ScenarioConfig,
    pub config_toml: String,
    pub resolved: Resolved,
    pub signal_path: &'static str,
    pub m_grid: Vec<f64>,
    pub sweeps: Vec<SweepSummary>,
    pub outputs: Vec<OutputFile>,
}

pub fn resolve(cfg: &ScenarioConfig) -> anyhow::Result<(AtomParams, Resolved)> {
    let detuning = match cfg.atom.detuning {
        Detuning::Fixed(f) => f.rad_per_s(),
        Detuning::Named(NamedDetuning::Symmetrizing) => {
            let a = &cfg.atom;
            symmetrizing_detuning(a.gamma.rad_per_s(), a.omega_e.rad_per_s(), a.dipole_ratio_sq)
                .context("symmetrizing detuning")?
        }
    };
    let atom = atom_params_with(&cfg.atom, detuning);
    let spec = &cfg.spectrum;
    let total_power = match spec.power {
        PowerSpec::Total(p) => p,
        PowerSpec::Broadening(b) => {
            power_for_broadening(&atom, &spec.family_with(0.0), spec.m_ref, b.rad_per_s())
                .context("power calibration at m_ref")?
        }
    };
    let width = width_at(&atom, &spec.family_with(spec.epsilon), spec.m_ref, total_power)
        .context("linewidth at m_ref")?;
    let omega_m = match cfg.modulation.omega_m {
        ModulationFrequency::Absolute(f) => f.rad_per_s(),
        ModulationFrequency::Relative(r) => r * width,
    };
    Ok((
        atom,
        Resolved {
            detuning_hz: to_hz(detuning),
            total_power,
            width_ref_hz: to_hz(width),
            omega_m_hz: to_hz(omega_m),
        },
    ))
}

struct Point {
    modulation: ModulationParams,
    family: SpectrumFamily,
    power: f64,
    path: SignalPath,
}

fn point_for(
    cfg: &ScenarioConfig,
    resolved: &Resolved,
    axis_value: Option<f64>,
) -> anyhow::Result<Point> {
    let width = cptshift_core::units::hz(resolved.width_ref_hz);
    let mut omega_m = cptshift_core::units::hz(resolved.omega_m_hz);
    let mut epsilon = cfg.spectrum.epsilon;
    let mut power = resolved.total_power;
    let mut cell: Option<CellConfig> = cfg.cell.clone();
    if let Some(v) = axis_value {
        match cfg.sweep.axis {
            Axis::None => {}
            Axis::OmegaM => omega_m = cptshift_core::units::hz(v),
            Axis::OmegaMRel => omega_m = v * width,
            Axis::Beta => {
                if let Some(c) = cell.as_mut() {
                    c.beta = v;
                }
            }
            Axis::Epsilon => epsilon = v,
            Axis::PowerScale => power *= v,
        }
    }
    let modulation = ModulationParams::new(cfg.modulation.index, omega_m, cfg.modulation.phase)?;
    let closure = cfg.solver.closure.into();
    let path = match cfg.solver.path {
        PathKind::Linearized => SignalPath::Linearized,
        PathKind::Harmonic => SignalPath::Harmonic(closure),
        PathKind::TimeDomain => SignalPath::TimeDomain(time_domain_settings(&cfg.solver)),
        PathKind::Thick => {
            let c = cell.as_ref().context("thick path without a cell")?;
            SignalPath::Thick {
                cell: cell_params(c),
                slab: slab_model(c, cfg.solver.closure),
            }
        }
    };
    Ok(Point {
        modulation,
        family: cfg.spectrum.family_with(epsilon),
        power,
        path,
    })
}

fn file_stem(cfg: &ScenarioConfig, axis_value: Option<f64>) -> String {
    match axis_value {
        None => format!("{}_sweep", cfg.output.prefix),
        Some(v) => format!("{}_{}_{}", cfg.output.prefix, cfg.sweep.axis.name(), v),
    }
}

/// Output directory after the environment override.
pub fn output_dir(cfg: &ScenarioConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> anyhow::Result<Manifest> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let (atom, resolved) = resolve(cfg)?;
    log::info!(
        "detuning {:.3} MHz, width at m_ref {:.3} Hz, omega_m {:.3} Hz",
        resolved.detuning_hz * 1e-6,
        resolved.width_ref_hz,
        resolved.omega_m_hz
    );
    let grid = cfg.spectrum.m_grid();
    let axis_values: Vec<Option<f64>> = match cfg.sweep.axis {
        Axis::None => vec![None],
        _ => cfg.sweep.values.iter().copied().map(Some).collect(),
    };

    let mut outcomes: Vec<(Option<f64>, SweepOutcome, String)> = Vec::new();
    let mut signal_path = "";
    for &v in &axis_values {
        let p = point_for(cfg, &resolved, v)?;
        signal_path = p.path.name();
        let label = v.map_or_else(String::new, |v| format!(" at {} = {v}", cfg.sweep.axis.name()));
        log::info!("sweeping {} m points{label}", grid.len());
        let out = find_ips_and_pzds(&atom, &p.modulation, &p.family, p.power, &grid, &p.path)
            .with_context(|| format!("m sweep{label}"))?;
        if let Some(d) = &out.diagnostics {
            log::warn!("no roots{label}: {d}");
        }
        outcomes.push((v, out, format!("{}.csv", file_stem(cfg, v))));
    }

    let mut outputs = Vec::new();
    let mut sweeps = Vec::new();
    let mut roots = Vec::new();
    for (v, out, name) in &outcomes {
        let path = out_dir.join(name);
        emit_csv(&out.records, &path)?;
        outputs.push(OutputFile {
            path: name.clone(),
            sha256: sha256_file(&path)?,
        });
        sweeps.push(SweepSummary {
            axis_value: *v,
            file: name.clone(),
            ips: out.ips.len(),
            pzds: out.pzds.len(),
            diagnostics: out.diagnostics.clone(),
        });
        for list in [&out.ips, &out.pzds] {
            for (i, r) in list.iter().enumerate() {
                roots.push(RootRow {
                    axis_value: *v,
                    root: r,
                    ordinal: i + 1,
                });
            }
        }
    }
    let roots_name = format!("{}_roots.csv", cfg.output.prefix);
    let roots_path = out_dir.join(&roots_name);
    emit_roots(&roots, &roots_path)?;
    outputs.push(OutputFile {
        sha256: sha256_file(&roots_path)?,
        path: roots_name,
    });

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        config_toml: cfg.to_toml(),
        resolved,
        signal_path,
        m_grid: grid,
        sweeps,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), text + "\n")
        .with_context(|| format!("writing manifest in {}", out_dir.display()))?;
    Ok(manifest)
}
