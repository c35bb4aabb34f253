//! Built-in scenarios: storing one imprint and moving it, storing two, and
//! moving two with a single control pulse.
//!
//! Durations fix where imprints end up; the η13/η23 offsets only set when each
//! pulse arrives. They keep successive pulses at least twenty durations apart
//! and are recorded in the annotations.

use std::fmt;
use std::str::FromStr;

use lambda_soliton::observables::{predict_location, Prediction};
use lambda_soliton::{Error, Result, SolitonKind, SolitonSpec, SystemParams};
use serde::{Deserialize, Serialize};

use crate::scenario::{GridConfig, OutputKind, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Single imprint: encode, push back with a signal pulse, push forward with a control pulse.
    Pulse1,
    /// Ground-state snapshots of the `Pulse1` sequence.
    Den1,
    /// Two signal pulses stored in either temporal order.
    Pulse2,
    /// Final imprints of the `Pulse2` runs.
    Den2,
    /// A control pulse moving two imprints at once.
    Pulse3,
    /// Imprints before and after the `Pulse3` control step.
    Den3,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Pulse1, Preset::Den1, Preset::Pulse2, Preset::Den2, Preset::Pulse3, Preset::Den3];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Pulse1 => "pulse1",
            Preset::Den1 => "den1",
            Preset::Pulse2 => "pulse2",
            Preset::Den2 => "den2",
            Preset::Pulse3 => "pulse3",
            Preset::Den3 => "den3",
        }
    }

    /// Field/density data (`pulse*`) or ground-state profiles (`den*`).
    pub fn is_profile(&self) -> bool {
        matches!(self, Preset::Den1 | Preset::Den2 | Preset::Den3)
    }

    pub fn plan(&self) -> Result<PresetPlan> {
        match self {
            Preset::Pulse1 | Preset::Den1 => single_imprint(*self),
            Preset::Pulse2 | Preset::Den2 => two_imprints(*self),
            Preset::Pulse3 | Preset::Den3 => simultaneous_control(*self),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// One scenario of a preset and the snapshots taken from it.
#[derive(Clone, Debug)]
pub struct PresetRun {
    pub label: String,
    pub scenario: Scenario,
    pub snapshots: Vec<Snapshot>,
}

/// A profile time (t/τ_ref) and the solitons that have acted on the medium by then.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub active: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PresetPlan {
    pub preset: Preset,
    pub runs: Vec<PresetRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonNote {
    pub kind: SolitonKind,
    pub tau: f64,
    pub eta12: Option<f64>,
    pub eta13: Option<f64>,
    pub eta23: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedImprint {
    pub soliton: usize,
    /// κ_s·x in the imprinting soliton's own units.
    pub location: f64,
    /// Same location in κ_ref·x.
    pub location_ref: f64,
    pub phase_sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNote {
    pub t: f64,
    pub expected: Vec<ExpectedImprint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunNote {
    pub label: String,
    pub tau_ref: f64,
    pub solitons: Vec<SolitonNote>,
    pub snapshots: Vec<SnapshotNote>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub preset: String,
    pub runs: Vec<RunNote>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl PresetRun {
    /// Expected imprints at a snapshot: closed-form predictions for the
    /// Type 1 solitons among those already active.
    pub fn expected(&self, snap: &Snapshot) -> Result<Vec<ExpectedImprint>> {
        let active: Vec<SolitonSpec> = snap.active.iter().map(|&i| self.scenario.specs[i]).collect();
        snap.active
            .iter()
            .enumerate()
            .filter(|(_, &i)| self.scenario.specs[i].kind() == SolitonKind::Type1)
            .map(|(pos, &i)| {
                let Prediction { location, phase_sign } = predict_location(&active, pos)?;
                let ratio = self.scenario.specs[i].tau() / self.scenario.tau_ref;
                Ok(ExpectedImprint { soliton: i, location, location_ref: location / ratio, phase_sign })
            })
            .collect()
    }

    pub fn note(&self) -> Result<RunNote> {
        Ok(RunNote {
            label: self.label.clone(),
            tau_ref: self.scenario.tau_ref,
            solitons: self
                .scenario
                .specs
                .iter()
                .map(|s| SolitonNote {
                    kind: s.kind(),
                    tau: s.tau(),
                    eta12: finite(s.eta12()),
                    eta13: finite(s.eta13()),
                    eta23: finite(s.eta23()),
                })
                .collect(),
            snapshots: self
                .snapshots
                .iter()
                .map(|s| Ok(SnapshotNote { t: s.t, expected: self.expected(s)? }))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

impl PresetPlan {
    pub fn annotations(&self) -> Result<Annotations> {
        Ok(Annotations {
            preset: self.preset.name().to_string(),
            runs: self.runs.iter().map(PresetRun::note).collect::<Result<Vec<_>>>()?,
        })
    }
}

fn run(preset: Preset, label: &str, specs: &[SolitonSpec], grid: GridConfig, snapshots: Vec<Snapshot>) -> Result<PresetRun> {
    let mut scenario = Scenario::from_specs(&format!("{preset}-{label}"), specs, SystemParams::default(), grid)?;
    scenario.config.csv_stride = [8, 4];
    scenario.config.snapshot_times = Some(snapshots.iter().map(|s| s.t).collect());
    scenario.config.outputs = if preset.is_profile() {
        vec![OutputKind::Imprints]
    } else {
        vec![OutputKind::Fields, OutputKind::Density]
    };
    Ok(PresetRun { label: label.to_string(), scenario, snapshots })
}

fn snap(t: f64, active: &[usize]) -> Snapshot {
    Snapshot { t, active: active.to_vec() }
}

/// Encode at 0, push back by δ(1, tanh 2.5) = 5, then forward by δ(1, tanh 5) = 10.
pub fn single_imprint_specs() -> Result<[SolitonSpec; 3]> {
    let tau_b = 2.5f64.tanh();
    let tau_c = 5f64.tanh();
    Ok([
        SolitonSpec::type1(1.0, 0.0, 20.0)?,
        SolitonSpec::type3(tau_b, -30.0 / tau_b)?,
        SolitonSpec::type2(tau_c, -105.0 / tau_c)?,
    ])
}

fn single_imprint(preset: Preset) -> Result<PresetPlan> {
    let specs = single_imprint_specs()?;
    let grid = GridConfig { t_min: -100.0, t_max: 200.0, nt: 6144, ..GridConfig::default() };
    let snapshots = vec![snap(0.0, &[0]), snap(60.0, &[0, 1]), snap(150.0, &[0, 1, 2])];
    Ok(PresetPlan { preset, runs: vec![run(preset, "abc", &specs, grid, snapshots)?] })
}

/// Type 1 pair stored with `a` first (`eta13` = 20, −30) and with `b` first (−10, 20).
pub fn two_imprint_specs(a_first: bool) -> Result<[SolitonSpec; 2]> {
    let (e_a, e_b) = if a_first { (20.0, -30.0) } else { (-10.0, 20.0) };
    Ok([SolitonSpec::type1(1.0, 6.0, e_a)?, SolitonSpec::type1(0.5, -2.0, e_b)?])
}

fn two_imprints(preset: Preset) -> Result<PresetPlan> {
    let grid = GridConfig { t_min: -60.0, t_max: 100.0, nt: 4096, ..GridConfig::default() };
    let late = vec![snap(40.0, &[0, 1])];
    Ok(PresetPlan {
        preset,
        runs: vec![
            run(preset, "a_first", &two_imprint_specs(true)?, grid, late.clone())?,
            run(preset, "b_first", &two_imprint_specs(false)?, grid, late)?,
        ],
    })
}

/// Two imprints (τa = 1 > τc = 0.75 > τb = 0.5) and a control pulse passing both.
pub fn simultaneous_control_specs() -> Result<[SolitonSpec; 3]> {
    Ok([
        SolitonSpec::type1(1.0, 7.0, 20.0)?,
        SolitonSpec::type1(0.5, -2.5, -30.0)?,
        SolitonSpec::type2(0.75, -150.0)?,
    ])
}

fn simultaneous_control(preset: Preset) -> Result<PresetPlan> {
    let specs = simultaneous_control_specs()?;
    let grid = GridConfig { t_min: -60.0, t_max: 200.0, nt: 4096, ..GridConfig::default() };
    let snapshots = vec![snap(60.0, &[0, 1]), snap(190.0, &[0, 1, 2])];
    Ok(PresetPlan { preset, runs: vec![run(preset, "abc", &specs, grid, snapshots)?] })
}
