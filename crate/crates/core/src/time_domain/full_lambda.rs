//! Steady state of the full four-level double-Λ system under a resonant
//! bichromatic drive, with the excited states kept explicitly.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::AtomParams;

const U: usize = 0;
const D: usize = 1;
const G2: usize = 2;
const G1: usize = 3;

type Liouvillian = SMatrix<Complex64, 16, 16>;

/// Full density matrix, levels ordered (u, d, 2, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullDensityMatrix {
    pub rho: [[Complex64; 4]; 4],
}

impl FullDensityMatrix {
    /// ρ_uu + ρ_dd.
    pub fn excited_population(&self) -> f64 {
        self.rho[U][U].re + self.rho[D][D].re
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[i][i].re).sum()
    }

    pub fn rho22(&self) -> f64 {
        self.rho[G2][G2].re
    }

    pub fn rho11(&self) -> f64 {
        self.rho[G1][G1].re
    }

    pub fn rho21(&self) -> Complex64 {
        self.rho[G2][G1]
    }
}

fn cx(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn idx(i: usize, j: usize) -> usize {
    4 * i + j
}

/// Solve dρ/dt = −i[H, ρ] − Γ̂ρ = 0 in the rotating frame, where the
/// ground levels sit at ∓δ and the excited levels at −Δ_L, −(Δ_L + ω_e).
pub fn steady_state_full_lambda(
    atom: &AtomParams,
    e_minus1: f64,
    e_plus1: f64,
    delta: f64,
) -> Result<FullDensityMatrix> {
    atom.validate()?;
    let r = atom.dipole_ratio_sq.sqrt();
    let mut h = [[0.0f64; 4]; 4];
    h[U][U] = -atom.detuning;
    h[D][D] = -(atom.detuning + atom.omega_e);
    h[G2][G2] = -delta;
    h[G1][G1] = delta;
    let couple = [
        (U, G2, e_minus1),
        (U, G1, -e_plus1),
        (D, G2, r * e_minus1),
        (D, G1, -r * e_plus1),
    ];
    for (a, b, v) in couple {
        h[a][b] = v;
        h[b][a] = v;
    }

    let gamma_u = atom.gamma_decay;
    let gamma_d = atom.dipole_ratio_sq * atom.gamma_decay;
    let im = Complex64::new(0.0, 1.0);
    let mut m = Liouvillian::zeros();
    let mut b = SVector::<Complex64, 16>::zeros();

    for i in 0..4 {
        for j in 0..4 {
            let row = idx(i, j);
            for k in 0..4 {
                // −i (H_ik ρ_kj − ρ_ik H_kj)
                m[(row, idx(k, j))] -= im * h[i][k];
                m[(row, idx(i, k))] += im * h[k][j];
            }
            let excited = |x: usize| x == U || x == D;
            match (i, j) {
                (U, U) => m[(row, row)] -= cx(gamma_u),
                (D, D) => m[(row, row)] -= cx(gamma_d),
                (U, D) | (D, U) => {}
                (G2, G2) | (G1, G1) => {
                    m[(row, row)] -= cx(atom.gamma_g);
                    m[(row, idx(U, U))] += cx(0.5 * gamma_u);
                    m[(row, idx(D, D))] += cx(0.5 * gamma_d);
                    b[row] -= cx(0.5 * atom.gamma_g);
                }
                (G2, G1) | (G1, G2) => m[(row, row)] -= cx(atom.gamma_g),
                _ if excited(i) != excited(j) => m[(row, row)] -= cx(atom.gamma_opt),
                _ => unreachable!(),
            }
        }
    }

    // Row equilibration; rates span Γ down to Γ_g.
    for row in 0..16 {
        let s = (0..16).map(|c| m[(row, c)].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            let inv = Complex64::from(1.0 / s);
            for c in 0..16 {
                m[(row, c)] *= inv;
            }
            b[row] *= inv;
        }
    }

    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..16).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let pivot_ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(pivot_ratio > 1e-15) {
        return Err(Error::Singular {
            context: "full double-lambda steady state",
            pivot_ratio,
        });
    }
    let x = lu.solve(&b).ok_or(Error::Singular {
        context: "full double-lambda steady state",
        pivot_ratio,
    })?;
    let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            rho[i][j] = x[idx(i, j)];
        }
    }
    Ok(FullDensityMatrix { rho })
}
