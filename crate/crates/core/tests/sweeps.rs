mod common;

use common::{Reference, M_REF};
use cptshift_core::sweep::power_for_broadening;
use cptshift_core::units::hz;
use cptshift_core::{
    find_ips_and_pzds, zero_crossing, AtomParams, HarmonicClosure, SignalPath, SpectrumFamily,
    ROOT_TOLERANCE,
};

fn delta0_at(r: &Reference, eps: f64, ratio: f64, m: f64, scale: f64) -> f64 {
    let s = r.spectrum(m, eps).scale_power(scale);
    zero_crossing(&SignalPath::Linearized, &r.atom, &s, &r.modulation(0.2, ratio), None).unwrap()
}

#[test]
fn ips_agree_with_brute_force_surface() {
    let r = Reference::new();
    let grid = Reference::grid(2.3, 3.7, 70);
    let md = r.modulation(0.2, 1.0);
    let out = find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &SignalPath::Linearized)
        .unwrap();
    assert_eq!(out.ips.len(), 2);
    let (f, s) = (out.ips[0], out.ips[1]);
    assert!(f.delta0 != s.delta0);
    let tol = ROOT_TOLERANCE * r.width;
    assert!(f.delta0.abs() > tol && s.delta0.abs() > tol);
    // ∂δ_0/∂E² on a coarse power grid changes sign across each IP
    for ip in [f, s] {
        let slope = |m: f64| delta0_at(&r, 0.2, 1.0, m, 1.05) - delta0_at(&r, 0.2, 1.0, m, 0.95);
        assert!(slope(ip.m - 0.01) * slope(ip.m + 0.01) < 0.0, "m = {}", ip.m);
    }
}

#[test]
fn ip_pair_closes_and_drops_with_modulation_frequency() {
    let r = Reference::new();
    let grid = Reference::grid(2.3, 3.7, 70);
    let mut rows = Vec::new();
    for ratio in [0.1, 0.5, 1.0] {
        let md = r.modulation(0.2, ratio);
        let out = find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &SignalPath::Linearized)
            .unwrap();
        assert_eq!(out.ips.len(), 2, "ratio {ratio}");
        rows.push((out.ips[1].m - out.ips[0].m, out.ips[0].delta0.abs(), out.ips[1].delta0.abs()));
    }
    for w in rows.windows(2) {
        assert!(w[1].0 < w[0].0);
        assert!(w[1].1 > w[0].1 && w[1].2 > w[0].2);
    }
}

#[test]
fn gap_vanishes_for_slow_modulation() {
    let r = Reference::new();
    let grid = Reference::grid(2.3, 3.7, 70);
    let gap = |ratio: f64| {
        let md = r.modulation(0.2, ratio);
        find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &SignalPath::Linearized)
            .unwrap()
            .ips[0]
            .delta0
            .abs()
    };
    assert!(gap(0.05) < gap(1.0) / 10.0);
}

#[test]
fn insensitivity_is_only_first_order_with_asymmetry() {
    let r = Reference::new();
    let grid = Reference::grid(2.3, 3.7, 70);
    let md = r.modulation(0.2, 1.0);
    let ip = find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &SignalPath::Linearized)
        .unwrap()
        .ips[0];
    let d = |c: f64| delta0_at(&r, 0.2, 1.0, ip.m, c);
    let first = (d(1.001) - d(0.999)) / 0.002;
    let curvature = (d(1.05) - 2.0 * d(1.0) + d(0.95)) / 0.05f64.powi(2);
    assert!(curvature.abs() > 100.0 * first.abs(), "{first:e} {curvature:e}");
}

#[test]
fn weak_power_symmetric_ips_are_fully_insensitive() {
    let atom = AtomParams::rb87();
    let fam = SpectrumFamily::residual_bessel(0.0, 5, common::FLOOR);
    let power = power_for_broadening(&atom, &fam, M_REF, hz(2.0)).unwrap();
    let grid = Reference::grid(2.3, 3.7, 70);
    let md = cptshift_core::ModulationParams::new(0.2, hz(100.0), 0.0).unwrap();
    let out = find_ips_and_pzds(&atom, &md, &fam, power, &grid, &SignalPath::Linearized).unwrap();
    let ip = out.ips[0];
    let d = |m: f64, c: f64| {
        let s = fam.spectrum(m, atom.half_splitting(), power * c).unwrap();
        zero_crossing(&SignalPath::Linearized, &atom, &s, &md, None).unwrap()
    };
    // shift ∝ E²·f(m), so at the PZD the whole power curve is flat
    let scale = d(ip.m + 0.1, 1.0).abs();
    let second = d(ip.m, 1.5) - 2.0 * d(ip.m, 1.0) + d(ip.m, 0.5);
    assert!(scale > 0.0);
    assert!(second.abs() <= 1e-6 * scale, "{second:e} vs {scale:e}");
    assert!(ip.pzd_gap_m.unwrap().abs() <= 1e-6);
}

#[test]
fn harmonic_sweep_is_bit_reproducible() {
    let r = Reference::new();
    let grid = Reference::grid(2.5, 2.9, 8);
    let md = r.modulation(0.2, 0.5);
    let path = SignalPath::Harmonic(HarmonicClosure::Consistent);
    let a = find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &path).unwrap();
    let b = find_ips_and_pzds(&r.atom, &md, &r.family(0.2), r.power, &grid, &path).unwrap();
    assert_eq!(a, b);
}
