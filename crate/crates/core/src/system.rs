//! Pieces of the Λ-system model shared by the analytic builders and the
//! numerical oracle: coupling constant, the constant matrix W, and the
//! (ρ, H) state with its Rabi-frequency view.
//!
//! Units: ħ = 1. The Hamiltonian in the rotating frame is
//!
//! ```text
//!          ⎛ 0    0    Ω13* ⎞
//! H = −½ · ⎜ 0    0    Ω23* ⎟
//!          ⎝ Ω13  Ω23  −2Δ  ⎠
//! ```
//!
//! so H31 = −Ω13/2 and H32 = −Ω23/2.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMat3, I, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atom-field coupling μ (equal on both transitions).
    pub mu: f64,
}

impl SystemParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "mu must be positive and finite, got {mu}"
            )));
        }
        Ok(Self { mu })
    }

    /// Absorption coefficient κ = μτ/2 for a pulse of duration τ.
    pub fn kappa(&self, tau: f64) -> f64 {
        0.5 * self.mu * tau
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { mu: 2.0 }
    }
}

/// W = i|3⟩⟨3|.
pub fn w_matrix() -> ComplexMat3 {
    let mut w = ComplexMat3::zeros();
    w[(2, 2)] = I;
    w
}

/// Rotating-frame Hamiltonian for the given Rabi frequencies and common detuning.
pub fn hamiltonian_from_rabi(omega13: C64, omega23: C64, detuning: f64) -> ComplexMat3 {
    let h = ComplexMat3([
        [ZERO, ZERO, omega13.conj()],
        [ZERO, ZERO, omega23.conj()],
        [omega13, omega23, C64::new(-2.0 * detuning, 0.0)],
    ]);
    h.scale_real(-0.5)
}

/// (Ω13, Ω23) read off H31 and H32.
pub fn rabi_from_hamiltonian(h: &ComplexMat3) -> (C64, C64) {
    (h[(2, 0)] * -2.0, h[(2, 1)] * -2.0)
}

/// Density matrix and Hamiltonian at one (T, Z) point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionState {
    pub rho: ComplexMat3,
    pub h: ComplexMat3,
    pub omega13: C64,
    pub omega23: C64,
}

impl SolutionState {
    pub fn from_rho_h(rho: ComplexMat3, h: ComplexMat3) -> Self {
        let (omega13, omega23) = rabi_from_hamiltonian(&h);
        Self {
            rho,
            h,
            omega13,
            omega23,
        }
    }

    /// Quiescent medium: ρ = |1⟩⟨1|, no fields.
    pub fn seed() -> Self {
        Self::from_rho_h(ComplexMat3::basis_projector(0), ComplexMat3::zeros())
    }

    /// Largest of the density-matrix structural defects: hermiticity,
    /// |tr ρ − 1| and purity ‖ρ² − ρ‖∞.
    pub fn density_defects(&self) -> DensityDefects {
        DensityDefects {
            hermiticity: self.rho.hermiticity_defect(),
            trace: (self.rho.trace() - 1.0).norm(),
            purity: self.rho.idempotency_defect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityDefects {
    pub hermiticity: f64,
    pub trace: f64,
    pub purity: f64,
}

impl DensityDefects {
    pub fn max(&self) -> f64 {
        self.hermiticity.max(self.trace).max(self.purity)
    }

    pub fn merge(&mut self, other: &DensityDefects) {
        self.hermiticity = self.hermiticity.max(other.hermiticity);
        self.trace = self.trace.max(other.trace);
        self.purity = self.purity.max(other.purity);
    }
}
