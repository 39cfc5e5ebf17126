//! Optically thick cells: the resonant sidebands decay as e^{−βz} in
//! intensity, and the detected signal is the average of slab-local signals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonic::{
    linear_slope, linearized_with_couplings, shift_breakdown, signals_from_amplitudes,
    solve_with_couplings, HarmonicClosure,
};
use crate::model::{derive_couplings, AtomParams, DerivedCouplings, FieldSpectrum, ModulationParams, SpectrumFamily};
use crate::time_domain::LockInResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Cell length l, m.
    pub length: f64,
    /// Intensity decay constant β of the resonant sidebands, 1/m.
    pub beta: f64,
    pub n_slabs: usize,
}

impl CellParams {
    /// Cell with optical depth β·l over unit length.
    pub fn with_depth(depth: f64, n_slabs: usize) -> Self {
        CellParams {
            length: 1.0,
            beta: depth,
            n_slabs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("length", "must be > 0"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be >= 0"));
        }
        if self.n_slabs < 8 {
            return Err(Error::invalid("n_slabs", "must be >= 8"));
        }
        Ok(())
    }

    pub fn optical_depth(&self) -> f64 {
        self.beta * self.length
    }

    /// Fraction of resonant power absorbed over the cell.
    pub fn absorption(&self) -> f64 {
        1.0 - (-self.optical_depth()).exp()
    }

    /// Midpoints z_i of the slabs.
    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let dz = self.length / self.n_slabs as f64;
        (0..self.n_slabs).map(move |i| (i as f64 + 0.5) * dz)
    }

    pub fn doubled(&self) -> Self {
        CellParams {
            n_slabs: 2 * self.n_slabs,
            ..*self
        }
    }
}

/// Which signal model each slab uses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SlabModel {
    #[default]
    Linearized,
    Harmonic(HarmonicClosure),
}

/// Couplings of every slab, in z order.
pub fn slab_couplings(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    cell: &CellParams,
) -> Result<Vec<DerivedCouplings>> {
    cell.validate()?;
    let zs: Vec<f64> = cell.midpoints().collect();
    zs.par_iter()
        .map(|&z| derive_couplings(atom, &spectrum.attenuate_resonant((-0.5 * cell.beta * z).exp())))
        .collect()
}

fn slab_signal(
    atom: &AtomParams,
    c: &DerivedCouplings,
    modulation: &ModulationParams,
    delta: f64,
    model: SlabModel,
) -> Result<LockInResult> {
    match model {
        SlabModel::Linearized => Ok(linearized_with_couplings(atom, c, modulation, delta).signals),
        SlabModel::Harmonic(closure) => {
            let amps = solve_with_couplings(c, modulation, c.two_delta_tilde(delta), closure)?;
            Ok(signals_from_amplitudes(&amps, c, modulation.phase))
        }
    }
}

/// Length-averaged S and Q by the composite midpoint rule.
pub fn averaged_signal(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    cell: &CellParams,
    delta: f64,
    model: SlabModel,
) -> Result<LockInResult> {
    modulation.validate()?;
    let slabs = slab_couplings(atom, spectrum, cell)?;
    averaged_over(atom, &slabs, modulation, delta, model)
}

pub(crate) fn averaged_over(
    atom: &AtomParams,
    slabs: &[DerivedCouplings],
    modulation: &ModulationParams,
    delta: f64,
    model: SlabModel,
) -> Result<LockInResult> {
    let parts: Vec<LockInResult> = slabs
        .par_iter()
        .map(|c| slab_signal(atom, c, modulation, delta, model))
        .collect::<Result<_>>()?;
    // ordered reduction keeps the result bit-stable
    let n = parts.len() as f64;
    let (s, q) = parts
        .iter()
        .fold((0.0, 0.0), |(s, q), r| (s + r.in_phase, q + r.quadrature));
    Ok(LockInResult {
        in_phase: s / n,
        quadrature: q / n,
        phase: modulation.phase,
    })
}

/// (∫A dz, ∫A·(δ_r + δ_nr + δ_as) dz) over the cell.
fn weighted_integrals(
    slabs: &[DerivedCouplings],
    modulation: &ModulationParams,
    dz: f64,
) -> Result<(f64, f64)> {
    let mut den = 0.0;
    let mut num = 0.0;
    for c in slabs {
        let b = shift_breakdown(c, modulation)?;
        den += b.slope * dz;
        num += b.slope * (b.delta_r + b.delta_nr + b.delta_as) * dz;
    }
    Ok((den, num))
}

/// 2δ_0 = −∫A(z)δ_nr(z)dz / ∫A(z)dz. For unequal sidebands the slab
/// shift also carries δ_r(z) and δ_as(z).
pub fn thick_zero_crossing(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    cell: &CellParams,
) -> Result<f64> {
    modulation.validate()?;
    let slabs = slab_couplings(atom, spectrum, cell)?;
    let dz = cell.length / cell.n_slabs as f64;
    let (den, num) = weighted_integrals(&slabs, modulation, dz)?;
    assert!(den > 0.0, "slab weights must integrate to a positive value");
    Ok(-0.5 * num / den)
}

/// ∫∂(Aδ)/∂E² dz · ∫A dz − ∫∂A/∂E² dz · ∫Aδ dz, with central differences
/// at relative power step 1e-3. Its zeros in m are the thick-cell IPs.
#[allow(clippy::too_many_arguments)]
pub fn thick_ip_residual(
    atom: &AtomParams,
    family: &SpectrumFamily,
    m: f64,
    total_power: f64,
    modulation: &ModulationParams,
    cell: &CellParams,
) -> Result<f64> {
    let h = 1e-3;
    let spectrum = family.spectrum(m, atom.half_splitting(), total_power)?;
    let dz = cell.length / cell.n_slabs as f64;
    let at = |c: f64| -> Result<(f64, f64)> {
        let slabs = slab_couplings(atom, &spectrum.scale_power(c), cell)?;
        weighted_integrals(&slabs, modulation, dz)
    };
    let (d0, n0) = at(1.0)?;
    let (dp, np) = at(1.0 + h)?;
    let (dm, nm) = at(1.0 - h)?;
    let de2 = 2.0 * h * total_power;
    let dn = (np - nm) / de2;
    let dd = (dp - dm) / de2;
    Ok(dn * d0 - dd * n0)
}

/// ∫A dz for the incident spectrum; handy normalization for the residual.
pub fn integrated_slope(
    atom: &AtomParams,
    spectrum: &FieldSpectrum,
    modulation: &ModulationParams,
    cell: &CellParams,
) -> Result<f64> {
    let slabs = slab_couplings(atom, spectrum, cell)?;
    let dz = cell.length / cell.n_slabs as f64;
    Ok(slabs.iter().map(|c| linear_slope(c, modulation) * dz).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{zero_crossing, SignalPath};
    use crate::units::hz;

    fn setup(eps: f64, m: f64) -> (AtomParams, FieldSpectrum, ModulationParams, f64) {
        let atom = AtomParams::rb87();
        let fam = SpectrumFamily::residual_bessel(eps, 5, 0.025);
        let s0 = fam.spectrum(3.0, atom.half_splitting(), 1.0).unwrap();
        let c0 = derive_couplings(&atom, &s0).unwrap();
        let p = hz(600.0) / (c0.pump_l + c0.pump_r);
        let s = fam.spectrum(m, atom.half_splitting(), p).unwrap();
        let c = derive_couplings(&atom, &s).unwrap();
        let md = ModulationParams::new(0.2, 0.5 * c.width, 0.0).unwrap();
        (atom, s, md, p)
    }

    #[test]
    fn transparent_cell_is_thin() {
        let (atom, s, md, _) = setup(0.0, 2.7);
        let cell = CellParams::with_depth(0.0, 16);
        let c = derive_couplings(&atom, &s).unwrap();
        for d in [-0.05, 0.0, 0.08] {
            let delta = d * c.width;
            let thin = linearized_with_couplings(&atom, &c, &md, delta).signals;
            let thick = averaged_signal(&atom, &s, &md, &cell, delta, SlabModel::Linearized).unwrap();
            assert!((thin.in_phase - thick.in_phase).abs() <= 1e-14 * thin.in_phase.abs().max(1e-300));
        }
        let z = thick_zero_crossing(&atom, &s, &md, &cell).unwrap();
        assert!((2.0 * z + c.shift_nonres).abs() <= 1e-12 * c.shift_nonres.abs());
    }

    #[test]
    fn invalid_cells_rejected() {
        let (atom, s, md, _) = setup(0.0, 2.7);
        for cell in [
            CellParams { length: 0.0, beta: 1.0, n_slabs: 16 },
            CellParams { length: 1.0, beta: -1.0, n_slabs: 16 },
            CellParams { length: 1.0, beta: 1.0, n_slabs: 4 },
        ] {
            assert!(averaged_signal(&atom, &s, &md, &cell, 0.0, SlabModel::Linearized).is_err());
        }
    }

    #[test]
    fn absorption_moves_the_crossing() {
        let (atom, s, md, _) = setup(0.0, 2.7);
        let thin = thick_zero_crossing(&atom, &s, &md, &CellParams::with_depth(0.0, 64)).unwrap();
        let thick = thick_zero_crossing(&atom, &s, &md, &CellParams::with_depth(0.163, 64)).unwrap();
        let width = derive_couplings(&atom, &s).unwrap().width;
        assert!((thick - thin).abs() > 1e-6 * width);
    }

    #[test]
    fn slab_count_convergence() {
        let (atom, s, md, _) = setup(0.0, 2.7);
        let c = derive_couplings(&atom, &s).unwrap();
        let delta = 0.05 * c.width;
        let coarse = averaged_signal(&atom, &s, &md, &CellParams::with_depth(0.43, 64), delta, SlabModel::Linearized).unwrap();
        let fine = averaged_signal(&atom, &s, &md, &CellParams::with_depth(0.43, 4096), delta, SlabModel::Linearized).unwrap();
        assert!((coarse.in_phase - fine.in_phase).abs() <= 1e-3 * fine.in_phase.abs());
    }

    #[test]
    fn formula_matches_root_of_average() {
        let (atom, s, md, _) = setup(0.0, 2.7);
        let cell = CellParams::with_depth(0.43, 64);
        let z = thick_zero_crossing(&atom, &s, &md, &cell).unwrap();
        let path = SignalPath::Thick { cell, slab: SlabModel::Linearized };
        let root = zero_crossing(&path, &atom, &s, &md, None).unwrap();
        let width = derive_couplings(&atom, &s).unwrap().width;
        assert!((z - root).abs() <= 2.0 * crate::sweep::ROOT_TOLERANCE * width);
    }

    #[test]
    fn crossing_is_a_convex_combination() {
        let (atom, s, md, _) = setup(0.0, 2.3);
        let cell = CellParams::with_depth(0.43, 64);
        let z = thick_zero_crossing(&atom, &s, &md, &cell).unwrap();
        let local: Vec<f64> = slab_couplings(&atom, &s, &cell)
            .unwrap()
            .iter()
            .map(|c| -0.5 * c.shift_nonres)
            .collect();
        let lo = local.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = local.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(z >= lo && z <= hi);
    }

    #[test]
    fn residual_matches_crossing_derivative() {
        let (atom, _, md, p) = setup(0.0, 2.7);
        let fam = SpectrumFamily::residual_bessel(0.0, 5, 0.025);
        let cell = CellParams::with_depth(0.43, 64);
        let m = 2.7;
        let res = thick_ip_residual(&atom, &fam, m, p, &md, &cell).unwrap();
        // residual = −2 (∫A)² ∂δ_0/∂E²
        let s = fam.spectrum(m, atom.half_splitting(), p).unwrap();
        let h = 1e-3;
        let zp = thick_zero_crossing(&atom, &s.scale_power(1.0 + h), &md, &cell).unwrap();
        let zm = thick_zero_crossing(&atom, &s.scale_power(1.0 - h), &md, &cell).unwrap();
        let dz = (zp - zm) / (2.0 * h * p);
        let a = integrated_slope(&atom, &s, &md, &cell).unwrap();
        let want = -2.0 * a * a * dz;
        assert!((res - want).abs() <= 1e-6 * want.abs(), "{res} vs {want}");
    }

    #[test]
    fn transparent_residual_follows_nonresonant_shift() {
        // β = 0: δ_0 ∝ E², so the residual is −(∫A)² δ_nr / E² and only
        // vanishes where δ_nr does.
        let (atom, s, md, p) = setup(0.0, 2.5);
        let fam = SpectrumFamily::residual_bessel(0.0, 5, 0.025);
        let cell = CellParams::with_depth(0.0, 8);
        let res = thick_ip_residual(&atom, &fam, 2.5, p, &md, &cell).unwrap();
        let c = derive_couplings(&atom, &s).unwrap();
        let a = integrated_slope(&atom, &s, &md, &cell).unwrap();
        let want = a * a * c.shift_nonres / p;
        assert!((res - want).abs() <= 1e-6 * want.abs(), "{res} vs {want}");
    }
}
