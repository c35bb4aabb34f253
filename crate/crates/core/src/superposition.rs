//! Second- and third-order solutions from the nonlinear superposition rule.
//!
//! Commutativity of the Bianchi diagram, D^{ab}(λ)D^a(λ) = D^{ba}(λ)D^b(λ)
//! with D^x(λ) = λ + λ_x M^x, fixes the step-b involution applied on top of
//! solution a:
//!
//! ```text
//! M^{ab} = (λa M^a − λb M^b)(λa M^a M^b − λb I)⁻¹
//! ```
//!
//! Third order reuses the same rule on the two second-order involutions that
//! share step a: M^{abc} = (λb M^{ab} − λc M^{ac})(λb M^{ab} M^{ac} − λc I)⁻¹.
//!
//! The rule is algebraically the same as dressing the eigenvector of the new
//! step with the earlier ones, φ ← (λ − λ_s M^s)φ, and that is how solutions
//! are evaluated: the dressed-vector form needs no matrix inverse and stays
//! accurate when two durations nearly coincide, where the inverse loses up to
//! five digits. The explicit rule is kept for the permutability checks.
//!
//! The dressed state is ρ = N ρ⁰ N† with N = M^{abc} M^{ab} M^a (truncated to
//! the order), and the Hamiltonian follows by iterating the single-step update
//! H ← H − iλ[M, W] along the chain.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, inverse3, projector_from_vector, ComplexMat3, ComplexVec3};
use crate::darboux::{darboux_update, dress_density, involution_first, phi_vector, SolitonSpec};
use crate::error::{Error, Result};
use crate::system::{w_matrix, SolutionState, SystemParams};
use crate::tolerances;

/// Which closed form is used for the higher-order Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HFormula {
    /// H ← H − iλ[M, W] iterated along the involution chain.
    #[default]
    Compositional,
    /// H^{ab} = H⁰ − i(λa² − λb²)[(λa M^a − λb M^b), W] and its third-order
    /// analogue, taken literally. Does not solve the field equations.
    #[serde(rename = "paper-printed")]
    Bracket,
    /// The bracket form with the bracketed sum replaced by its inverse,
    /// (λa M^a − λb M^b)⁻¹; equal to the compositional form.
    InverseBracket,
}

fn check_distinct(lambda_a: C64, lambda_b: C64) -> Result<()> {
    let scale = lambda_a.norm().max(lambda_b.norm());
    if !(scale > 0.0) || (lambda_a - lambda_b).norm() / scale < tolerances::DEGENERATE_TAU_REL {
        return Err(Error::DegenerateSpectralParams {
            tau_a: 1.0 / lambda_a.im,
            tau_b: 1.0 / lambda_b.im,
        });
    }
    Ok(())
}

/// M^{ab} = (λa M^a − λb M^b)(λa M^a M^b − λb I)⁻¹.
pub fn superpose_involutions(
    lambda_a: C64,
    m_a: &ComplexMat3,
    lambda_b: C64,
    m_b: &ComplexMat3,
) -> Result<ComplexMat3> {
    check_distinct(lambda_a, lambda_b)?;
    let num = m_a.scale(lambda_a) - m_b.scale(lambda_b);
    let den = (*m_a * *m_b).scale(lambda_a) - ComplexMat3::identity().scale(lambda_b);
    Ok(num * inverse3(&den)?)
}

/// M^{abc} from the two second-order involutions M^{ab} and M^{ac}.
pub fn superpose_third(
    lambda_b: C64,
    m_ab: &ComplexMat3,
    lambda_c: C64,
    m_ac: &ComplexMat3,
) -> Result<ComplexMat3> {
    superpose_involutions(lambda_b, m_ab, lambda_c, m_ac)
}

/// Applies (λ − λ_s M^s) for each earlier step s = (τ_s, P^s) to `phi`.
///
/// With λ = i/τ the factor is i(1/τ + 1/τ_s) on the complement of P^s and
/// i(τ_s − τ)/(τ τ_s) on its range; the common i is dropped.
fn dress_vector(steps: &[(f64, ComplexMat3)], tau: f64, phi: ComplexVec3) -> ComplexVec3 {
    steps.iter().fold(phi, |v, (tau_s, p)| {
        let on_range = *p * v;
        let (outside, inside) = (1.0 / tau + 1.0 / tau_s, (tau_s - tau) / (tau * tau_s));
        let mut out = [C64::new(0.0, 0.0); 3];
        for k in 0..3 {
            out[k] = (v.0[k] - on_range.0[k]) * outside + on_range.0[k] * inside;
        }
        // Rescale so repeated steps cannot overflow.
        let top = out.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if top > 0.0 {
            for c in &mut out {
                *c /= top;
            }
        }
        ComplexVec3(out)
    })
}

fn involution_of(p: &ComplexMat3) -> ComplexMat3 {
    p.scale_real(2.0) - ComplexMat3::identity()
}

/// Everything computed at one (T, Z) point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// First-order involutions M^a, M^b, M^c in spec order.
    pub first: Vec<ComplexMat3>,
    /// Step chain applied to the seed: [M^a], [M^a, M^{ab}] or [M^a, M^{ab}, M^{abc}].
    pub chain: Vec<ComplexMat3>,
    /// Second-order involution M^{ac} (third order only).
    pub m_ac: Option<ComplexMat3>,
    pub state: SolutionState,
}

impl Evaluation {
    /// N = M^{abc} M^{ab} M^a (truncated to the order).
    pub fn dressing(&self) -> ComplexMat3 {
        self.chain
            .iter()
            .fold(ComplexMat3::identity(), |acc, m| *m * acc)
    }

    /// Largest ‖M² − I‖∞ / ‖M − M†‖∞ over every involution produced at this point.
    pub fn involution_defect(&self) -> f64 {
        self.first
            .iter()
            .chain(self.chain.iter())
            .chain(self.m_ac.iter())
            .map(|m| m.involution_defect().max(m.hermiticity_defect()))
            .fold(0.0, f64::max)
    }
}

/// An ordered list of one to three Darboux steps over the quiescent seed.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedSolution {
    specs: Vec<SolitonSpec>,
    sys: SystemParams,
}

impl OrderedSolution {
    pub fn new(specs: Vec<SolitonSpec>, sys: SystemParams) -> Result<Self> {
        if specs.is_empty() || specs.len() > 3 {
            return Err(Error::InvalidSoliton(format!(
                "between one and three solitons are supported, got {}",
                specs.len()
            )));
        }
        for i in 0..specs.len() {
            for j in i + 1..specs.len() {
                check_distinct(specs[i].lambda(), specs[j].lambda())?;
            }
        }
        Ok(Self { specs, sys })
    }

    pub fn specs(&self) -> &[SolitonSpec] {
        &self.specs
    }

    pub fn system(&self) -> &SystemParams {
        &self.sys
    }

    pub fn order(&self) -> usize {
        self.specs.len()
    }

    /// Same steps in another order (`perm[i]` is the index of the i-th step).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let specs = perm
            .iter()
            .map(|&i| {
                self.specs.get(i).copied().ok_or_else(|| {
                    Error::InvalidSoliton(format!("permutation index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(specs, self.sys)
    }

    pub fn evaluate(&self, t: f64, z: f64) -> Result<Evaluation> {
        self.evaluate_with(t, z, HFormula::Compositional)
    }

    pub fn state(&self, t: f64, z: f64) -> Result<SolutionState> {
        Ok(self.evaluate(t, z)?.state)
    }

    pub fn state_with(&self, t: f64, z: f64, formula: HFormula) -> Result<SolutionState> {
        Ok(self.evaluate_with(t, z, formula)?.state)
    }

    pub fn evaluate_with(&self, t: f64, z: f64, formula: HFormula) -> Result<Evaluation> {
        let taus: Vec<f64> = self.specs.iter().map(|s| s.tau()).collect();
        let phis: Vec<ComplexVec3> = self.specs.iter().map(|s| phi_vector(s, &self.sys, t, z)).collect();
        let projectors = phis.iter().map(projector_from_vector).collect::<Result<Vec<_>>>()?;
        let first: Vec<ComplexMat3> = projectors.iter().map(involution_of).collect();
        let lambdas: Vec<C64> = self.specs.iter().map(|s| s.lambda()).collect();
        let seed = SolutionState::seed();

        let mut chain = vec![first[0]];
        let mut m_ac = None;
        let h_a = darboux_update(&seed.h, lambdas[0], &first[0]);
        let step_a = [(taus[0], projectors[0])];
        let h = match self.order() {
            1 => h_a,
            2 => {
                let m_ab = involution_of(&projector_from_vector(&dress_vector(&step_a, taus[1], phis[1]))?);
                chain.push(m_ab);
                let pair = Pair {
                    lambda_x: lambdas[0],
                    m_x: first[0],
                    lambda_y: lambdas[1],
                    m_y: first[1],
                };
                match formula {
                    HFormula::Compositional => darboux_update(&h_a, lambdas[1], &m_ab),
                    other => pair.closed_form(&seed.h, other)?,
                }
            }
            _ => {
                let p_ab = projector_from_vector(&dress_vector(&step_a, taus[1], phis[1]))?;
                let p_ac = projector_from_vector(&dress_vector(&step_a, taus[2], phis[2]))?;
                let steps_ab = [step_a[0], (taus[1], p_ab)];
                let p_abc = projector_from_vector(&dress_vector(&steps_ab, taus[2], phis[2]))?;
                let (m_ab, m_ac_, m_abc) = (involution_of(&p_ab), involution_of(&p_ac), involution_of(&p_abc));
                chain.push(m_ab);
                chain.push(m_abc);
                m_ac = Some(m_ac_);
                let pair = Pair {
                    lambda_x: lambdas[1],
                    m_x: m_ab,
                    lambda_y: lambdas[2],
                    m_y: m_ac_,
                };
                match formula {
                    HFormula::Compositional => {
                        darboux_update(&darboux_update(&h_a, lambdas[1], &m_ab), lambdas[2], &m_abc)
                    }
                    other => pair.closed_form(&h_a, other)?,
                }
            }
        };
        let n = chain
            .iter()
            .fold(ComplexMat3::identity(), |acc, m| *m * acc);
        let rho = dress_density(&n, &seed.rho);
        Ok(Evaluation {
            first,
            chain,
            m_ac,
            state: SolutionState::from_rho_h(rho, h),
        })
    }
}

/// The two lower-order involutions entering one superposition step.
struct Pair {
    lambda_x: C64,
    m_x: ComplexMat3,
    lambda_y: C64,
    m_y: ComplexMat3,
}

impl Pair {
    /// H_base − i(λx² − λy²)[B, W] with B the bracket or its inverse.
    fn closed_form(&self, h_base: &ComplexMat3, formula: HFormula) -> Result<ComplexMat3> {
        let bracket = self.m_x.scale(self.lambda_x) - self.m_y.scale(self.lambda_y);
        let b = match formula {
            HFormula::Bracket => bracket,
            HFormula::InverseBracket => inverse3(&bracket)?,
            HFormula::Compositional => unreachable!("compositional H is built along the chain"),
        };
        let pref =
            crate::algebra::I * (self.lambda_x * self.lambda_x - self.lambda_y * self.lambda_y);
        Ok(*h_base - commutator(&b, &w_matrix()).scale(pref))
    }
}

/// ρ^{ab}, H^{ab} at (T, Z).
pub fn state_second(
    spec_a: &SolitonSpec,
    spec_b: &SolitonSpec,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<SolutionState> {
    OrderedSolution::new(vec![*spec_a, *spec_b], *sys)?.state(t, z)
}

/// ρ^{abc}, H^{abc} at (T, Z).
pub fn state_third(
    spec_a: &SolitonSpec,
    spec_b: &SolitonSpec,
    spec_c: &SolitonSpec,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<SolutionState> {
    OrderedSolution::new(vec![*spec_a, *spec_b, *spec_c], *sys)?.state(t, z)
}

/// Path-exchange comparison of the two routes around the Bianchi square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PermutabilityDefect {
    /// ‖M^{ab}M^a − M^{ba}M^b‖∞ (λ⁰ coefficient of D^{ab}D^a − D^{ba}D^b, up to λaλb).
    pub dressing: f64,
    /// ‖(λa M^a + λb M^{ab}) − (λb M^b + λa M^{ba})‖∞ / max|λ| (λ¹ coefficient).
    pub linear: f64,
    /// ‖M^{ab} − M^{ba}‖∞ taken literally; not expected to vanish, since
    /// M^{ba} = M^{ab} M^a M^b.
    pub literal: f64,
}

impl PermutabilityDefect {
    /// Largest of the two Bianchi-square coefficients.
    pub fn max(&self) -> f64 {
        self.dressing.max(self.linear)
    }
}

pub fn permutability_defect(
    spec_a: &SolitonSpec,
    spec_b: &SolitonSpec,
    sys: &SystemParams,
    t: f64,
    z: f64,
) -> Result<PermutabilityDefect> {
    let (la, lb) = (spec_a.lambda(), spec_b.lambda());
    let m_a = involution_first(spec_a, sys, t, z)?;
    let m_b = involution_first(spec_b, sys, t, z)?;
    let m_ab = superpose_involutions(la, &m_a, lb, &m_b)?;
    let m_ba = superpose_involutions(lb, &m_b, la, &m_a)?;
    let scale = la.norm().max(lb.norm());
    Ok(PermutabilityDefect {
        dressing: (m_ab * m_a - m_ba * m_b).norm_inf(),
        linear: ((m_a.scale(la) + m_ab.scale(lb)) - (m_b.scale(lb) + m_ba.scale(la))).norm_inf()
            / scale,
        literal: (m_ab - m_ba).norm_inf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{involution_from_projector, projector_from_vector, ComplexVec3};
    use crate::darboux::state_first;

    fn sys() -> SystemParams {
        SystemParams::new(2.0).unwrap()
    }

    fn lam(tau: f64) -> C64 {
        C64::new(0.0, 1.0 / tau)
    }

    fn involution(v: [(f64, f64); 3]) -> ComplexMat3 {
        let v = ComplexVec3([
            C64::new(v[0].0, v[0].1),
            C64::new(v[1].0, v[1].1),
            C64::new(v[2].0, v[2].1),
        ]);
        involution_from_projector(&projector_from_vector(&v).unwrap()).unwrap()
    }

    #[test]
    fn dressed_vectors_agree_with_the_superposition_rule() {
        let sys = sys();
        let specs = [
            SolitonSpec::type1(1.0, 0.3, -0.2).unwrap().with_phases([0.1, 0.7, -0.4]),
            SolitonSpec::type2(0.6, 0.5).unwrap().with_phases([0.0, 0.3, 1.1]),
            SolitonSpec::type3(1.7, -0.4).unwrap().with_phases([0.9, 0.0, -2.0]),
        ];
        let sol = OrderedSolution::new(specs.to_vec(), sys).unwrap();
        let l: Vec<C64> = specs.iter().map(|s| s.lambda()).collect();
        for (t, z) in [(0.4, 0.2), (-1.3, 0.9), (2.0, -0.7)] {
            let ev = sol.evaluate(t, z).unwrap();
            let m: Vec<ComplexMat3> = specs.iter().map(|s| involution_first(s, &sys, t, z).unwrap()).collect();
            let m_ab = superpose_involutions(l[0], &m[0], l[1], &m[1]).unwrap();
            let m_ac = superpose_involutions(l[0], &m[0], l[2], &m[2]).unwrap();
            let m_abc = superpose_third(l[1], &m_ab, l[2], &m_ac).unwrap();
            assert!((ev.chain[1] - m_ab).norm_inf() < 1e-12);
            assert!((ev.m_ac.unwrap() - m_ac).norm_inf() < 1e-12);
            assert!((ev.chain[2] - m_abc).norm_inf() < 1e-12);
        }
    }

    #[test]
    fn nearly_equal_durations_stay_exact() {
        // τ 9e-5 apart: the explicit rule's inverse loses about five digits here.
        let specs = [
            SolitonSpec::type1(1.0, 0.0, 20.0).unwrap(),
            SolitonSpec::type3(2.5f64.tanh(), -30.0 / 2.5f64.tanh()).unwrap(),
            SolitonSpec::type2(5f64.tanh(), -105.0 / 5f64.tanh()).unwrap(),
        ];
        let sol = OrderedSolution::new(specs.to_vec(), sys()).unwrap();
        let ev = sol.evaluate(-12.925, 0.078).unwrap();
        assert!(ev.involution_defect() < 1e-13);
        assert!(ev.state.density_defects().max() < 1e-13);
    }

    #[test]
    fn identical_involutions_collapse() {
        let m = involution([(0.3, 0.1), (-1.0, 0.4), (0.2, -0.7)]);
        let out = superpose_involutions(lam(1.0), &m, lam(0.4), &m).unwrap();
        assert!((out - m).norm_inf() < 1e-13);
        let out3 = superpose_third(lam(0.7), &m, lam(1.9), &m).unwrap();
        assert!((out3 - m).norm_inf() < 1e-13);
    }

    #[test]
    fn degenerate_tau_rejected() {
        let m = involution([(1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            superpose_involutions(lam(1.0), &m, lam(1.0), &m),
            Err(Error::DegenerateSpectralParams { .. })
        ));
        assert!(matches!(
            superpose_third(lam(0.5), &m, lam(0.5 * (1.0 + 1e-12)), &m),
            Err(Error::DegenerateSpectralParams { .. })
        ));
        let a = SolitonSpec::type1(1.0, 0.0, 0.0).unwrap();
        let b = SolitonSpec::type3(0.5, 0.0).unwrap();
        let c = SolitonSpec::type2(0.5, 0.0).unwrap();
        assert!(matches!(
            state_third(&a, &b, &c, &sys(), 0.0, 0.0),
            Err(Error::DegenerateSpectralParams { .. })
        ));
    }

    #[test]
    fn order_bounds() {
        assert!(OrderedSolution::new(vec![], sys()).is_err());
        let s: Vec<_> = (1..=4)
            .map(|k| SolitonSpec::type3(k as f64, 0.0).unwrap())
            .collect();
        assert!(OrderedSolution::new(s, sys()).is_err());
    }

    #[test]
    fn first_order_path_matches_darboux() {
        let s = SolitonSpec::type1(1.2, 0.3, -0.5).unwrap();
        let sol = OrderedSolution::new(vec![s], sys()).unwrap();
        for &(t, z) in &[(0.0, 0.0), (-2.0, 1.0), (3.0, -1.0)] {
            let a = sol.state(t, z).unwrap();
            let b = state_first(&s, &sys(), t, z).unwrap();
            assert!((a.rho - b.rho).norm_inf() < 1e-15);
            assert!((a.h - b.h).norm_inf() < 1e-15);
        }
    }

    #[test]
    fn second_order_swap_invariance() {
        let a = SolitonSpec::type1(1.0, 0.5, 2.0)
            .unwrap()
            .with_phases([0.0, 0.3, 0.0]);
        let b = SolitonSpec::type3(0.6, -3.0)
            .unwrap()
            .with_phases([0.2, 0.0, -0.4]);
        for &(t, z) in &[
            (-4.0, -1.0),
            (0.0, 0.0),
            (1.5, 2.0),
            (8.0, 0.5),
            (40.0, -3.0),
        ] {
            let ab = state_second(&a, &b, &sys(), t, z).unwrap();
            let ba = state_second(&b, &a, &sys(), t, z).unwrap();
            assert!((ab.rho - ba.rho).norm_inf() < 1e-10, "rho at ({t},{z})");
            assert!((ab.h - ba.h).norm_inf() < 1e-10, "h at ({t},{z})");
            let d = permutability_defect(&a, &b, &sys(), t, z).unwrap();
            assert!(d.max() < 1e-10);
        }
    }

    #[test]
    fn third_order_path_independence() {
        let a = SolitonSpec::type1(1.0, 0.0, 20.0).unwrap();
        let b = SolitonSpec::type3(0.8, -25.0).unwrap();
        let c = SolitonSpec::type2(0.55, -40.0).unwrap();
        let sol = OrderedSolution::new(vec![a, b, c], sys()).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
            let other = sol.permuted(&perm).unwrap();
            for &(t, z) in &[(-20.0, 0.0), (0.0, 1.0), (20.0, -2.0), (35.0, 3.0)] {
                let x = sol.evaluate(t, z).unwrap();
                let y = other.evaluate(t, z).unwrap();
                assert!((x.dressing() - y.dressing()).norm_inf() < 1e-10, "{perm:?}");
                assert!((x.state.rho - y.state.rho).norm_inf() < 1e-10);
                assert!((x.state.h - y.state.h).norm_inf() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_bracket_hamiltonian_matches_chain() {
        let a = SolitonSpec::type1(1.0, 0.2, 1.0).unwrap();
        let b = SolitonSpec::type3(0.7, -2.0).unwrap();
        let c = SolitonSpec::type2(0.4, -3.0).unwrap();
        for specs in [vec![a, b], vec![a, b, c]] {
            let sol = OrderedSolution::new(specs, sys()).unwrap();
            for &(t, z) in &[(-1.0, 0.0), (0.5, 0.7), (3.0, -0.4)] {
                let comp = sol.state_with(t, z, HFormula::Compositional).unwrap();
                let inv = sol.state_with(t, z, HFormula::InverseBracket).unwrap();
                let bracket = sol.state_with(t, z, HFormula::Bracket).unwrap();
                assert!((comp.h - inv.h).norm_inf() < 1e-12);
                assert!((comp.h - bracket.h).norm_inf() > 1e-3);
            }
        }
    }

    #[test]
    fn outputs_are_involutions() {
        let a = SolitonSpec::type1(1.0, 1.0, 0.0)
            .unwrap()
            .with_phases([0.5, 0.0, 0.1]);
        let b = SolitonSpec::type1(0.5, -1.0, -4.0).unwrap();
        let c = SolitonSpec::type3(0.75, -8.0).unwrap();
        let sol = OrderedSolution::new(vec![a, b, c], sys()).unwrap();
        for i in -10..=10 {
            let e = sol.evaluate(i as f64 * 1.7, i as f64 * 0.6).unwrap();
            assert!(e.involution_defect() < 1e-10);
            let d = e.state.density_defects();
            assert!(d.max() < 1e-10);
            assert!(e.state.h.is_hermitian(1e-10));
        }
    }
}
