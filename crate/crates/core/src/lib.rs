//! Molecular hyperfine potentials and gate metrics for a pair of optically
//! trapped ⁸⁷Rb atoms interacting through laser-induced electric dipole-dipole
//! couplings.
//!
//! The crate is organized bottom-up:
//!
//! * [`angular`] — Clebsch-Gordan coefficients, Wigner 6j symbols and rotation
//!   matrices on exactly represented half-integers ([`half_int::HalfInt`]).
//! * [`threelevel`] — the two-atom, three-level toy model: dressed ground-state
//!   Hamiltonians from perturbation theory and from exact adiabatic
//!   elimination, plus the asymptotic figure of merit.
//! * [`molecular`] — the 128-state symmetrized S₁/₂+P₁/₂ hyperfine basis,
//!   dipole-dipole and cooperative-decay matrices, and Born-Oppenheimer
//!   spectra versus internuclear distance.
//! * [`dressed`] — the 4×4 dressed Hamiltonian on the logical two-qubit basis:
//!   frame rotations, molecular oscillator strengths and the Gaussian average
//!   over the relative coordinate of the two wavepackets.
//! * [`lattice`] — state-dependent lin-θ-lin lattice potentials, well
//!   parameters, displaced-oscillator overlaps and energy gaps.
//! * [`gate`] — CPHASE gate time, figure of merit κ, scattering and
//!   leakage-corrected fidelities, self-consistency constraints and
//!   (Δ, kΔz) fidelity surfaces.
//! * [`config`] / [`report`] — run configuration with explicit units and
//!   CSV/JSON emission for the command-line front end.
//!
//! All numerical kernels are generic over the scalar type through
//! [`float::Float`]; the concrete pipeline uses [`Real`] (= `f64`). Energies
//! and rates everywhere are in natural units ħ = 1, Γ = 1 unless a field says
//! otherwise; conversions to SI happen only at the CLI boundary.

pub mod angular;
pub mod config;
pub mod dressed;
pub mod float;
pub mod gate;
pub mod half_int;
pub mod lattice;
pub mod linalg;
pub mod molecular;
pub mod quadrature;
pub mod report;
pub mod threelevel;

/// Scalar type used by the concrete pipeline.
pub type Real = f64;

/// Complex scalar matching [`Real`].
pub type Complex = num_complex::Complex<Real>;

pub use half_int::HalfInt;
