//! Pulse areas, imprint detection on ground-state profiles, and the closed-form
//! predictions for where an imprint ends up after a sequence of pulses.
//!
//! Locations are dimensionless κ·x. A profile is sampled on a grid expressed
//! in κ_ref·Z; each imprint is reported in the units of the soliton that made
//! it, κ_s·x = (κ_s/κ_ref)·(κ_ref·x).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::darboux::{SolitonKind, SolitonSpec};
use crate::error::{Error, Result};
use crate::superposition::OrderedSolution;
use crate::system::{SolutionState, SystemParams};
use crate::tolerances;

/// ∫|Ω| dT by the trapezoidal rule on a uniform grid.
pub fn pulse_area(samples: &[C64], dt: f64) -> Result<f64> {
    if samples.len() < 2 || !(dt > 0.0) {
        return Err(Error::InvalidGrid("pulse area needs at least two samples and dt > 0".into()));
    }
    let mags: Vec<f64> = samples.iter().map(|c| c.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let edge = mags[0].max(mags[mags.len() - 1]);
    let limit = tolerances::AREA_TAIL_REL * peak;
    if edge > limit {
        return Err(Error::GridTooNarrow { edge, limit });
    }
    let interior: f64 = mags[1..mags.len() - 1].iter().sum();
    Ok(dt * (interior + 0.5 * (mags[0] + mags[mags.len() - 1])))
}

/// θ_tot = √(θ13² + θ23²).
pub fn total_area(theta13: f64, theta23: f64) -> f64 {
    theta13.hypot(theta23)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseAreaRecord {
    pub z: f64,
    pub theta13: f64,
    pub theta23: f64,
    pub theta_tot: f64,
}

/// Areas of both fields at each Z, integrating over `nt` uniform samples of [t_min, t_max].
pub fn area_profile(
    sol: &OrderedSolution,
    t_min: f64,
    t_max: f64,
    nt: usize,
    zs: &[f64],
) -> Result<Vec<PulseAreaRecord>> {
    area_profile_with(|t, z| sol.state(t, z), t_min, t_max, nt, zs)
}

/// [`area_profile`] for any state function.
pub fn area_profile_with<F>(state: F, t_min: f64, t_max: f64, nt: usize, zs: &[f64]) -> Result<Vec<PulseAreaRecord>>
where
    F: Fn(f64, f64) -> Result<SolutionState> + Sync,
{
    if nt < 2 || !(t_max > t_min) {
        return Err(Error::InvalidGrid("area profile needs t_max > t_min and nt >= 2".into()));
    }
    let dt = (t_max - t_min) / (nt - 1) as f64;
    zs.par_iter()
        .map(|&z| {
            let mut o13 = Vec::with_capacity(nt);
            let mut o23 = Vec::with_capacity(nt);
            for i in 0..nt {
                let st = state(t_min + dt * i as f64, z)?;
                o13.push(st.omega13);
                o23.push(st.omega23);
            }
            let theta13 = pulse_area(&o13, dt)?;
            let theta23 = pulse_area(&o23, dt)?;
            Ok(PulseAreaRecord { z, theta13, theta23, theta_tot: total_area(theta13, theta23) })
        })
        .collect()
}

/// δ^{ab} = ln|(τa + τb)/(τa − τb)|.
pub fn delta_lag(tau_a: f64, tau_b: f64) -> Result<f64> {
    let scale = tau_a.abs().max(tau_b.abs());
    if !(tau_a > 0.0 && tau_b > 0.0)
        || (tau_a - tau_b).abs() / scale < tolerances::DEGENERATE_TAU_REL
    {
        return Err(Error::DegenerateSpectralParams { tau_a, tau_b });
    }
    Ok(((tau_a + tau_b) / (tau_a - tau_b)).abs().ln())
}

/// Latest pulse-center time over the spatial window, plus the late-time margin
/// of 40 times the longest duration.
pub fn late_time(specs: &[SolitonSpec], sys: &SystemParams, z_min: f64, z_max: f64) -> f64 {
    let tau_max = specs.iter().map(|s| s.tau()).fold(0.0, f64::max);
    let last = specs
        .iter()
        .map(|s| {
            let tau = s.tau();
            let k = s.kappa(sys);
            let reach = (k * z_max).max(k * z_min);
            match s.kind() {
                SolitonKind::Type1 => tau * (reach.min(s.eta12()) - s.eta13()),
                SolitonKind::Type2 => -tau * s.eta23(),
                SolitonKind::Type3 => tau * (reach - s.eta13()),
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    last + tolerances::LATE_TIME_MARGIN * tau_max
}

/// Ground-state slice ρ22(Z), ρ12(Z) at one time, on a uniform κ_ref·Z grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ZProfile {
    pub t: f64,
    /// κ_ref·Z
    pub z: Vec<f64>,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
    pub rho12: Vec<C64>,
}

impl ZProfile {
    /// Samples `sol` at physical time `t` on `n` points of κ_ref·Z ∈ [z_min, z_max].
    pub fn sample(sol: &OrderedSolution, t: f64, kappa_ref: f64, z_min: f64, z_max: f64, n: usize) -> Result<Self> {
        Self::sample_with(|t, z| sol.state(t, z), t, kappa_ref, z_min, z_max, n)
    }

    /// [`ZProfile::sample`] for any state function of physical (T, Z).
    pub fn sample_with<F>(state: F, t: f64, kappa_ref: f64, z_min: f64, z_max: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<SolutionState> + Sync,
    {
        if n < 3 || !(z_max > z_min) {
            return Err(Error::InvalidGrid("profile needs z_max > z_min and at least 3 points".into()));
        }
        let z: Vec<f64> = (0..n).map(|i| z_min + (z_max - z_min) * i as f64 / (n - 1) as f64).collect();
        let states = z
            .par_iter()
            .map(|&zk| state(t, zk / kappa_ref))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            rho11: states.iter().map(|s| s.rho[(0, 0)].re).collect(),
            rho22: states.iter().map(|s| s.rho[(1, 1)].re).collect(),
            rho12: states.iter().map(|s| s.rho[(0, 1)]).collect(),
            z,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.z[1] - self.z[0]
    }
}

/// A detected local maximum of ρ22, in κ_ref units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprintPeak {
    pub index: usize,
    pub location: f64,
    pub rho22_peak: f64,
    /// dρ12/d(κ_ref·Z) at the peak.
    pub coherence_slope: C64,
    /// Full width at half maximum of ρ22, if both half-maximum crossings are on the grid.
    pub fwhm: Option<f64>,
}

/// Local maxima of ρ22 above the detection threshold, refined by a
/// three-point parabola.
pub fn find_imprints(profile: &ZProfile) -> Result<Vec<ImprintPeak>> {
    let r = &profile.rho22;
    let n = r.len();
    if n < 3 {
        return Err(Error::InvalidGrid("profile too short".into()));
    }
    let h = profile.spacing();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if r[i] > tolerances::IMPRINT_PEAK_THRESHOLD && r[i] >= r[i - 1] && r[i] > r[i + 1] {
            let denom = r[i - 1] - 2.0 * r[i] + r[i + 1];
            let offset = if denom < 0.0 { 0.5 * (r[i - 1] - r[i + 1]) / denom } else { 0.0 };
            let peak_value = r[i] - 0.25 * (r[i - 1] - r[i + 1]) * offset;
            let slope = (profile.rho12[i + 1] - profile.rho12[i - 1]) / (2.0 * h);
            peaks.push(ImprintPeak {
                index: i,
                location: profile.z[i] + offset * h,
                rho22_peak: peak_value.min(1.0),
                coherence_slope: slope,
                fwhm: fwhm(&profile.z, r, i),
            });
        }
    }
    if peaks.is_empty() {
        return Err(Error::NoImprintFound);
    }
    for w in peaks.windows(2) {
        if w[1].index - w[0].index < tolerances::MIN_PEAK_SEPARATION_CELLS {
            return Err(Error::OverlappingImprints(format!(
                "peaks at {:.4} and {:.4} are closer than {} cells",
                w[0].location,
                w[1].location,
                tolerances::MIN_PEAK_SEPARATION_CELLS
            )));
        }
    }
    Ok(peaks)
}

fn fwhm(z: &[f64], r: &[f64], i: usize) -> Option<f64> {
    let half = 0.5 * r[i];
    let cross = |j: usize, k: usize| z[j] + (half - r[j]) * (z[k] - z[j]) / (r[k] - r[j]);
    let left = (1..=i).rev().find(|&j| r[j - 1] < half).map(|j| cross(j - 1, j))?;
    let right = (i..r.len() - 1).find(|&j| r[j + 1] < half).map(|j| cross(j, j + 1))?;
    Some(right - left)
}

/// Closed-form expectation for one imprint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// κ_s·x in the imprinting soliton's own units.
    pub location: f64,
    /// −1 when the coherence ρ12 is predicted to carry a π phase flip.
    pub phase_sign: i8,
}

/// Which imprint to look for and how to read it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImprintTarget {
    pub soliton: usize,
    /// κ_s / κ_ref.
    pub kappa_ratio: f64,
    /// A12 of the imprinting soliton; the unflipped coherence is A12·sech·tanh.
    pub reference_phase: C64,
    pub prediction: Option<Prediction>,
}

impl ImprintTarget {
    pub fn for_soliton(specs: &[SolitonSpec], soliton: usize, tau_ref: f64) -> Result<Self> {
        let spec = specs
            .get(soliton)
            .ok_or_else(|| Error::UnsupportedSequence(format!("no soliton at index {soliton}")))?;
        Ok(Self {
            soliton,
            kappa_ratio: spec.tau() / tau_ref,
            reference_phase: spec.phase(1, 2),
            prediction: predict_location(specs, soliton).ok(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprintReport {
    pub which_soliton: usize,
    /// κ_s·x
    pub location_measured: f64,
    /// κ_s·x, when the sequence has a closed-form prediction.
    pub location_predicted: Option<f64>,
    pub rho22_peak: f64,
    pub phase_sign: i8,
    pub phase_sign_predicted: Option<i8>,
    /// FWHM of ρ22 in κ_s units.
    pub width_kappa: Option<f64>,
}

/// +1 when ρ12 crosses zero as A12·sech(u)·tanh(u) with u = −κZ + const,
/// −1 when it carries an extra π phase.
fn phase_sign(slope: C64, reference: C64) -> i8 {
    if (-slope * reference.conj()).re >= 0.0 {
        1
    } else {
        -1
    }
}

/// Detects imprints and pairs each target with the nearest detected peak.
pub fn locate_imprints(profile: &ZProfile, targets: &[ImprintTarget]) -> Result<Vec<ImprintReport>> {
    let peaks = find_imprints(profile)?;
    if peaks.len() < targets.len() {
        return Err(Error::OverlappingImprints(format!(
            "expected {} imprints, resolved {}",
            targets.len(),
            peaks.len()
        )));
    }
    let mut used = vec![false; peaks.len()];
    let mut reports = Vec::with_capacity(targets.len());
    for target in targets {
        // Without a prediction, targets take peaks left to right.
        let pick = match target.prediction {
            Some(p) => {
                let want = p.location / target.kappa_ratio;
                (0..peaks.len())
                    .filter(|&j| !used[j])
                    .min_by(|&x, &y| {
                        (peaks[x].location - want).abs().total_cmp(&(peaks[y].location - want).abs())
                    })
            }
            None => (0..peaks.len()).find(|&j| !used[j]),
        };
        let j = pick.ok_or_else(|| Error::OverlappingImprints("ran out of peaks".into()))?;
        if used[j] {
            return Err(Error::OverlappingImprints(format!("two targets matched the peak at {:.4}", peaks[j].location)));
        }
        used[j] = true;
        let p = &peaks[j];
        reports.push(ImprintReport {
            which_soliton: target.soliton,
            location_measured: p.location * target.kappa_ratio,
            location_predicted: target.prediction.map(|q| q.location),
            rho22_peak: p.rho22_peak,
            phase_sign: phase_sign(p.coherence_slope, target.reference_phase),
            phase_sign_predicted: target.prediction.map(|q| q.phase_sign),
            width_kappa: p.fwhm.map(|w| w * target.kappa_ratio),
        });
    }
    Ok(reports)
}

fn manipulation_sign(kind: SolitonKind) -> f64 {
    match kind {
        SolitonKind::Type2 => 1.0,
        SolitonKind::Type3 => -1.0,
        SolitonKind::Type1 => 0.0,
    }
}

fn flip_sign(imprint: &SolitonSpec, manipulators: impl Iterator<Item = SolitonSpec>) -> i8 {
    let shorter = manipulators.filter(|m| m.tau() < imprint.tau()).count();
    if shorter % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Closed-form location and phase of the imprint made by `sequence[target]`.
///
/// Covered shapes: one Type 1 with any number of Type 2/3 manipulation
/// pulses (each Type 2 pushes by +δ, each Type 3 by −δ); two Type 1 with at
/// most one extra Type 2/3 pulse, provided the extra pulse does not swap
/// the spatial order of the two imprints. The coherence picks up a π flip
/// for every other pulse shorter than the imprinting one.
pub fn predict_location(sequence: &[SolitonSpec], target: usize) -> Result<Prediction> {
    let spec = *sequence
        .get(target)
        .ok_or_else(|| Error::UnsupportedSequence(format!("no soliton at index {target}")))?;
    if spec.kind() != SolitonKind::Type1 {
        return Err(Error::UnsupportedSequence(format!("soliton {target} is {} and makes no imprint", spec.kind())));
    }
    let imprinting: Vec<usize> =
        (0..sequence.len()).filter(|&i| sequence[i].kind() == SolitonKind::Type1).collect();
    let others = || sequence.iter().enumerate().filter(move |(i, _)| *i != target).map(|(_, s)| *s);
    let phase = flip_sign(&spec, others());
    match imprinting.len() {
        1 => {
            let mut loc = spec.eta12();
            for m in others() {
                loc += manipulation_sign(m.kind()) * delta_lag(spec.tau(), m.tau())?;
            }
            Ok(Prediction { location: loc, phase_sign: phase })
        }
        2 if sequence.len() <= 3 => {
            let (ia, ib) = (imprinting[0], imprinting[1]);
            let (a, b) = (sequence[ia], sequence[ib]);
            let sigma = (a.eta12() - b.eta12()).signum();
            if a.eta12() == b.eta12() {
                return Err(Error::UnsupportedSequence("two imprints at the same location".into()));
            }
            let d_ab = delta_lag(a.tau(), b.tau())?;
            let mut loc_a = a.eta12() + sigma * d_ab;
            let mut loc_b = b.eta12() - sigma * d_ab;
            let before = (loc_a / a.tau() - loc_b / b.tau()).signum();
            if before != sigma {
                return Err(Error::UnsupportedSequence("imprint order differs from the eta12 ordering".into()));
            }
            if let Some(c) = sequence.iter().enumerate().find(|(i, _)| *i != ia && *i != ib).map(|(_, s)| *s) {
                let s = manipulation_sign(c.kind());
                loc_a += s * delta_lag(a.tau(), c.tau())?;
                loc_b += s * delta_lag(b.tau(), c.tau())?;
                let after = (loc_a / a.tau() - loc_b / b.tau()).signum();
                if after != before {
                    return Err(Error::UnsupportedSequence(
                        "manipulation pulse inverts the order of the imprints".into(),
                    ));
                }
            }
            let location = if target == ia { loc_a } else { loc_b };
            Ok(Prediction { location, phase_sign: phase })
        }
        n => Err(Error::UnsupportedSequence(format!(
            "{n} imprinting solitons in a sequence of {}",
            sequence.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sech_samples(amp: f64, tau: f64, t_min: f64, t_max: f64, n: usize) -> (Vec<C64>, f64) {
        let dt = (t_max - t_min) / (n - 1) as f64;
        let v = (0..n)
            .map(|i| {
                let t = t_min + dt * i as f64;
                C64::from_polar(amp / (t / tau).cosh(), 0.7)
            })
            .collect();
        (v, dt)
    }

    #[test]
    fn sech_area_is_two_pi() {
        let (v, dt) = sech_samples(2.0, 1.0, -60.0, 160.0, 4096);
        assert!((pulse_area(&v, dt).unwrap() - 2.0 * PI).abs() < 1e-6);
        let (v, dt) = sech_samples(1.0, 1.0, -60.0, 160.0, 4096);
        assert!((pulse_area(&v, dt).unwrap() - PI).abs() < 1e-6);
        let zeros = vec![C64::new(0.0, 0.0); 64];
        assert_eq!(pulse_area(&zeros, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn narrow_grid_rejected() {
        let (v, dt) = sech_samples(2.0, 1.0, -5.0, 5.0, 256);
        assert!(matches!(pulse_area(&v, dt), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn total_area_examples() {
        assert_eq!(total_area(2.0 * PI, 0.0), 2.0 * PI);
        assert_eq!(total_area(0.0, 2.0 * PI), 2.0 * PI);
        assert_eq!(total_area(1.3, 0.4), total_area(0.4, 1.3));
    }

    #[test]
    fn delta_examples() {
        assert!((delta_lag(1.0, 3.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((delta_lag(1.0, 2.5f64.tanh()).unwrap() - 5.0).abs() < 1e-12);
        assert!(delta_lag(1.0, 1.0).is_err());
        assert!(delta_lag(-1.0, 2.0).is_err());
    }

    #[test]
    fn prediction_shapes() {
        let a = SolitonSpec::type1(1.0, 0.0, 20.0).unwrap();
        let b = SolitonSpec::type3(2.5f64.tanh(), -30.0).unwrap();
        let c = SolitonSpec::type2(5f64.tanh(), -100.0).unwrap();
        let p = predict_location(&[a], 0).unwrap();
        assert_eq!((p.location, p.phase_sign), (0.0, 1));
        let p = predict_location(&[a, b], 0).unwrap();
        assert!((p.location + 5.0).abs() < 1e-12);
        assert_eq!(p.phase_sign, -1);
        let p = predict_location(&[a, b, c], 0).unwrap();
        assert!((p.location - 5.0).abs() < 1e-9);
        assert_eq!(p.phase_sign, 1);
        assert!(predict_location(&[a, b, c], 1).is_err());

        let a = SolitonSpec::type1(1.0, 6.0, 20.0).unwrap();
        let b = SolitonSpec::type1(0.5, -2.0, -30.0).unwrap();
        let d = 3f64.ln();
        let pa = predict_location(&[a, b], 0).unwrap();
        let pb = predict_location(&[a, b], 1).unwrap();
        assert!((pa.location - (6.0 + d)).abs() < 1e-12);
        assert!((pb.location - (-2.0 - d)).abs() < 1e-12);
        assert_eq!((pa.phase_sign, pb.phase_sign), (-1, 1));

        // A Type 3 pulse long enough to push the right imprint past the left one.
        let far = SolitonSpec::type1(1.0, 1.0, 20.0).unwrap();
        let near = SolitonSpec::type1(0.5, -0.2, -30.0).unwrap();
        let push = SolitonSpec::type3(1.0001, -60.0).unwrap();
        assert!(matches!(
            predict_location(&[far, near, push], 0),
            Err(Error::UnsupportedSequence(_))
        ));
        let three = [a, b, SolitonSpec::type1(0.3, 0.0, 0.0).unwrap()];
        assert!(predict_location(&three, 0).is_err());
    }

    #[test]
    fn flat_profile_has_no_imprint() {
        let n = 50;
        let p = ZProfile {
            t: 0.0,
            z: (0..n).map(|i| i as f64 * 0.1).collect(),
            rho11: vec![1.0; n],
            rho22: vec![0.0; n],
            rho12: vec![C64::new(0.0, 0.0); n],
        };
        assert!(matches!(find_imprints(&p), Err(Error::NoImprintFound)));
    }

    #[test]
    fn first_order_imprint_located() {
        let sys = SystemParams::new(2.0).unwrap();
        let s = SolitonSpec::type1(1.0, 0.0, 0.0).unwrap().with_phases([0.0, 0.8, 0.0]);
        let sol = OrderedSolution::new(vec![s], sys).unwrap();
        let t = late_time(&[s], &sys, -10.0, 15.0);
        let prof = ZProfile::sample(&sol, t, 1.0, -10.0, 15.0, 512).unwrap();
        let target = ImprintTarget::for_soliton(&[s], 0, 1.0).unwrap();
        let r = locate_imprints(&prof, &[target]).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].location_measured.abs() < 1.5 * prof.spacing());
        assert!((r[0].rho22_peak - 1.0).abs() < 1e-3);
        assert_eq!(r[0].phase_sign, 1);
        // sech² FWHM = 2·arcsech(1/√2) = 2·ln(1 + √2)
        let w = r[0].width_kappa.unwrap();
        assert!((w - 2.0 * (1.0 + 2f64.sqrt()).ln()).abs() < 0.01);
    }
}
