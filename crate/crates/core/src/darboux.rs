//! First-order (single Darboux step) solutions over the quiescent seed
//! ρ⁰ = |1⟩⟨1|, H⁰ = 0, at zero detuning.
//!
//! With spectral parameter λ = i/τ the linear problem for |φ⟩ integrates to
//!
//! ```text
//! |φ⟩ = (a1·e^{−κZ}, a2, a3·e^{−T/τ}),   κ = μτ/2
//! ```
//!
//! and one step produces the involution M = 2P − I with P = |φ⟩⟨φ|/⟨φ|φ⟩,
//! the density matrix ρ = Mρ⁰M and the Hamiltonian H = H⁰ − iλ[M, W].
//!
//! Three families are distinguished by which integration constant vanishes:
//! Type 1 (none), Type 2 (a1 = 0, a control pulse decoupled from the
//! medium) and Type 3 (a2 = 0, the self-induced-transparency signal pulse).

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    commutator, involution_from_projector, projector_from_vector, ComplexMat3, ComplexVec3, I, ZERO,
};
use crate::error::{Error, Result};
use crate::system::w_matrix;
pub use crate::system::{SolutionState, SystemParams};
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonKind {
    Type1,
    Type2,
    Type3,
}

impl fmt::Display for SolitonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolitonKind::Type1 => "type1",
            SolitonKind::Type2 => "type2",
            SolitonKind::Type3 => "type3",
        })
    }
}

impl SolitonKind {
    /// Index of the integration constant that must vanish, if any.
    fn zero_index(self) -> Option<usize> {
        match self {
            SolitonKind::Type1 => None,
            SolitonKind::Type2 => Some(0),
            SolitonKind::Type3 => Some(1),
        }
    }
}

/// One Darboux step: family, duration and integration constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonSpec {
    kind: SolitonKind,
    tau: f64,
    a: [C64; 3],
}

impl SolitonSpec {
    /// Validates the duration and the zero pattern of the constants.
    ///
    /// A constant the family requires to vanish is accepted when its modulus
    /// is below [`tolerances::ZERO_CONSTANT`] relative to the largest one and
    /// is then stored as exactly zero. The remaining constants must be
    /// nonzero; their ratios are unrestricted, so pulses may be delayed by
    /// arbitrarily many durations.
    pub fn new(kind: SolitonKind, tau: f64, a: [C64; 3]) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidSoliton(format!(
                "tau must be positive and finite, got {tau}"
            )));
        }
        if a.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSoliton(
                "integration constants must be finite".into(),
            ));
        }
        let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::InvalidSoliton(
                "all integration constants are zero".into(),
            ));
        }
        let mut a = a;
        for (k, c) in a.iter_mut().enumerate() {
            let required_zero = kind.zero_index() == Some(k);
            let rel = c.norm() / scale;
            if required_zero {
                if rel >= tolerances::ZERO_CONSTANT {
                    return Err(Error::InvalidSoliton(format!(
                        "{kind} requires a{} = 0, got |a{}| = {:.3e}",
                        k + 1,
                        k + 1,
                        c.norm()
                    )));
                }
                *c = ZERO;
            } else if c.norm() == 0.0 {
                return Err(Error::InvalidSoliton(format!(
                    "{kind} requires a{} != 0",
                    k + 1
                )));
            }
        }
        Ok(Self { kind, tau, a })
    }

    /// Type 1 with a = (1, e^{−η12}, e^{−η13}).
    pub fn type1(tau: f64, eta12: f64, eta13: f64) -> Result<Self> {
        Self::new(
            SolitonKind::Type1,
            tau,
            [1.0.into(), (-eta12).exp().into(), (-eta13).exp().into()],
        )
    }

    /// Type 2 with a = (0, 1, e^{−η23}).
    pub fn type2(tau: f64, eta23: f64) -> Result<Self> {
        Self::new(
            SolitonKind::Type2,
            tau,
            [ZERO, 1.0.into(), (-eta23).exp().into()],
        )
    }

    /// Type 3 with a = (1, 0, e^{−η13}).
    pub fn type3(tau: f64, eta13: f64) -> Result<Self> {
        Self::new(
            SolitonKind::Type3,
            tau,
            [1.0.into(), ZERO, (-eta13).exp().into()],
        )
    }

    /// Multiplies each constant by e^{iθk}.
    pub fn with_phases(mut self, phases: [f64; 3]) -> Self {
        for (c, th) in self.a.iter_mut().zip(phases) {
            *c *= C64::from_polar(1.0, th);
        }
        self
    }

    pub fn kind(&self) -> SolitonKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn constants(&self) -> [C64; 3] {
        self.a
    }

    /// λ = i/τ.
    pub fn lambda(&self) -> C64 {
        I / self.tau
    }

    pub fn kappa(&self, sys: &SystemParams) -> f64 {
        sys.kappa(self.tau)
    }

    /// ln|a_j/a_k| with one-based level indices; ±∞ when a constant vanishes.
    pub fn eta(&self, j: usize, k: usize) -> f64 {
        (self.a[j - 1].norm() / self.a[k - 1].norm()).ln()
    }

    /// A_jk = a_j a_k* / |a_j a_k| with one-based level indices (0 if undefined).
    pub fn phase(&self, j: usize, k: usize) -> C64 {
        let p = self.a[j - 1] * self.a[k - 1].conj();
        let n = p.norm();
        if n == 0.0 {
            ZERO
        } else {
            p / n
        }
    }

    pub fn eta12(&self) -> f64 {
        self.eta(1, 2)
    }

    pub fn eta13(&self) -> f64 {
        self.eta(1, 3)
    }

    pub fn eta23(&self) -> f64 {
        self.eta(2, 3)
    }
}

/// Solution of the linear problem, scaled so its largest component has modulus 1.
///
/// Magnitudes are combined in log space so e^{±T/τ} never overflows.
pub fn phi_vector(spec: &SolitonSpec, sys: &SystemParams, t: f64, z: f64) -> ComplexVec3 {
    let exponents = [-spec.kappa(sys) * z, 0.0, -t / spec.tau];
    let mut logs = [f64::NEG_INFINITY; 3];
    for k in 0..3 {
        let n = spec.a[k].norm();
        if n > 0.0 {
            logs[k] = n.ln() + exponents[k];
        }
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut v = [ZERO; 3];
    for k in 0..3 {
        if logs[k] > f64::NEG_INFINITY {
            v[k] = C64::from_polar((logs[k] - top).exp(), spec.a[k].arg());
        }
    }
    ComplexVec3(v)
}

/// M^a = 2P − I at (T, Z).
pub fn involution_first(
    spec: &SolitonSpec,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<ComplexMat3> {
    let p = projector_from_vector(&phi_vector(spec, sys, t, z))?;
    involution_from_projector(&p)
}

/// H' = H − iλ[M, W].
pub fn darboux_update(h: &ComplexMat3, lambda: C64, m: &ComplexMat3) -> ComplexMat3 {
    *h - commutator(m, &w_matrix()).scale(I * lambda)
}

/// ρ' = N ρ N† for a (product of) involution(s) N.
pub fn dress_density(n: &ComplexMat3, rho: &ComplexMat3) -> ComplexMat3 {
    *n * *rho * n.adjoint()
}

/// (ρ, H, Ω13, Ω23) of the first-order solution.
pub fn state_first(
    spec: &SolitonSpec,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<SolutionState> {
    let m = involution_first(spec, sys, t, z)?;
    let seed = SolutionState::seed();
    let rho = m * seed.rho * m;
    let h = darboux_update(&seed.h, spec.lambda(), &m);
    Ok(SolutionState::from_rho_h(rho, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// T/τ ≪ −1 (Type 1 only).
    EarlyTime,
    /// T/τ ≫ 1 (Type 1 only).
    LateTime,
    /// Types 2 and 3, exact at every time.
    AllTimes,
}

fn check_regime(kind: SolitonKind, regime: Regime) -> Result<()> {
    let ok = match kind {
        SolitonKind::Type1 => regime != Regime::AllTimes,
        SolitonKind::Type2 | SolitonKind::Type3 => regime == Regime::AllTimes,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::RegimeMismatch {
            regime: format!("{regime:?}"),
            kind: kind.to_string(),
        })
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Closed-form involution in the asymptotic regimes (or exact for Types 2, 3).
pub fn involution_asymptote(
    spec: &SolitonSpec,
    regime: Regime,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<ComplexMat3> {
    check_regime(spec.kind, regime)?;
    let kz = spec.kappa(sys) * z;
    let tt = t / spec.tau;
    let mut m = ComplexMat3::zeros();
    // Early Type 1 and Type 3 share one limiting form.
    let signal_like = |m: &mut ComplexMat3| {
        let x = tt - kz + spec.eta13();
        m[(0, 0)] = x.tanh().into();
        m[(1, 1)] = (-1.0).into();
        m[(2, 2)] = (-x.tanh()).into();
        m[(0, 2)] = spec.phase(1, 3) * sech(x);
        m[(2, 0)] = m[(0, 2)].conj();
    };
    match (spec.kind, regime) {
        (SolitonKind::Type1, Regime::EarlyTime) | (SolitonKind::Type3, _) => signal_like(&mut m),
        (SolitonKind::Type1, _) => {
            let u = -kz + spec.eta12();
            m[(0, 0)] = u.tanh().into();
            m[(1, 1)] = (-u.tanh()).into();
            m[(2, 2)] = (-1.0).into();
            m[(0, 1)] = spec.phase(1, 2) * sech(u);
            m[(1, 0)] = m[(0, 1)].conj();
        }
        (SolitonKind::Type2, _) => {
            let y = tt + spec.eta23();
            m[(0, 0)] = (-1.0).into();
            m[(1, 1)] = y.tanh().into();
            m[(2, 2)] = (-y.tanh()).into();
            m[(1, 2)] = spec.phase(2, 3) * sech(y);
            m[(2, 1)] = m[(1, 2)].conj();
        }
    }
    Ok(m)
}

/// Log-ratio between the components kept by an asymptotic regime and the
/// one it neglects; `+∞` for the exact families. The deviation of the exact
/// involution from [`involution_asymptote`] is bounded by a few times e^{−slack}.
pub fn asymptotic_slack(
    spec: &SolitonSpec,
    regime: Regime,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<f64> {
    check_regime(spec.kind, regime)?;
    let v = phi_vector(spec, sys, t, z);
    let ln = |k: usize| v[k].norm().ln();
    Ok(match regime {
        Regime::AllTimes => f64::INFINITY,
        Regime::EarlyTime => ln(0).max(ln(2)) - ln(1),
        Regime::LateTime => ln(0).max(ln(1)) - ln(2),
    })
}
