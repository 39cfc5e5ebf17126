//! Modulation spectroscopy of CPT dark resonances in a double-Λ atom.
//!
//! Three routes to the lock-in error signal are provided and cross-check
//! each other: direct integration of the reduced ground-state equations
//! ([`time_domain`]), a truncated Fourier-amplitude solve and its
//! linearized closed form ([`harmonic`]). On top of them sit z-averaging
//! for optically thick cells ([`thick`]) and the sweep machinery that
//! finds zero crossings, insensitivity points (IPs) and points of zero
//! displacement (PZDs) ([`sweep`]).
//!
//! Every frequency and rate is angular (rad/s). Use [`units`] to convert.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harmonic;
pub mod model;
pub mod numerics;
pub mod sweep;
pub mod thick;
pub mod time_domain;
pub mod units;

pub use error::{Error, Result};
pub use harmonic::{
    asymmetry_shift, linearized_signals, signals_from_amplitudes, solve_fourier_amplitudes,
    FourierAmplitudes, HarmonicClosure, LinearizedSignals, ShiftBreakdown,
};
pub use model::{
    bessel_spectrum, derive_couplings, AtomParams, DerivedCouplings, FamilyKind, FieldSpectrum,
    ModulationParams, SpectrumFamily,
};
pub use sweep::{
    find_ips_and_pzds, in_phase_signal, servo_lock_experiment, symmetrizing_detuning,
    symmetrizing_roots,
    zero_crossing, RootLocation, ServoScenario, ServoTrace, SignalPath, SweepOutcome, SweepRecord,
    ROOT_TOLERANCE,
};
pub use thick::{averaged_signal, thick_ip_residual, thick_zero_crossing, CellParams, SlabModel};
pub use time_domain::{
    absorption, integrate_ground_state, lockin, reduced_steady_state, steady_state_full_lambda,
    FullDensityMatrix, GroundState, LockInResult, TimeDomainSettings, TimeTrace,
};
