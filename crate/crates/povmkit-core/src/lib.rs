//! Core toolkit for finite-outcome quantum measurements (POVMs): dense complex
//! linear algebra, measurement validation and structure analysis, quantum
//! channels in the Heisenberg picture, and decision procedures for the
//! post-processing / pre-processing orderings and for cleanness.
//!
//! Everything here is deterministic: identical inputs produce identical
//! outputs, including solver bases and randomized fixtures (seeded).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod channel;
pub mod fixtures;
pub mod mat;
pub mod order;
pub mod povm;
pub mod rng;
pub mod solver;
pub mod verdict;

/// Centralized numeric tolerances. One instance is threaded through every
/// decision procedure; tests and the CLI may override single fields.
#[derive(Clone, Debug)]
pub struct Tol {
    /// Hermiticity acceptance: ‖M − M†‖_max.
    pub herm: f64,
    /// Eigensolver contract: reconstruction and orthonormality residuals.
    pub eig: f64,
    /// Positive semidefiniteness: smallest eigenvalue ≥ −psd.
    pub psd: f64,
    /// Numerical rank cutoff, relative to the largest singular value.
    pub rank: f64,
    /// Feasibility tolerance of the numerical solvers and witness revalidation.
    pub feas: f64,
    /// Acceptance band for a unit peak eigenvalue, |λ_M − 1| ≤ unit_peak.
    pub unit_peak: f64,
    /// A violation must clear this margin before it is reported as a witness.
    pub witness: f64,
    /// Iteration cap of the alternating-projection solver.
    pub max_iter: usize,
    /// Plateau detection window (iterations) for the alternating projections.
    pub plateau_window: usize,
    /// Relative residual improvement under which the window counts as flat.
    pub plateau_rel: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            herm: 1e-9,
            eig: 1e-9,
            psd: 1e-8,
            rank: 1e-8,
            feas: 1e-7,
            unit_peak: 1e-6,
            witness: 1e-6,
            max_iter: 20_000,
            plateau_window: 500,
            plateau_rel: 1e-10,
        }
    }
}

impl Tol {
    /// Tolerances with a custom feasibility threshold, everything else default.
    pub fn with_feas(feas: f64) -> Self {
        Tol { feas, ..Tol::default() }
    }
}
