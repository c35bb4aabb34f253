//! The `simulate` and `figure` pipelines.

use std::fs;
use std::path::Path;

use lambda_soliton::mbsolver::ResidualNorms;
use lambda_soliton::observables::{
    area_profile_with, late_time, locate_imprints, ImprintReport, ImprintTarget, PulseAreaRecord, ZProfile,
};
use lambda_soliton::{Result, SolitonKind};
use serde::{Deserialize, Serialize};

use crate::output::{write_grid_csv, write_json, write_profiles_csv, GridStats};
use crate::presets::{Preset, PresetRun, Snapshot};
use crate::scenario::{Model, OutputKind, Scenario};
use crate::verify::{residual_study, ResidualStudy};

/// Imprints found in one ground-state snapshot (t in units of τ_ref).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub t: f64,
    pub imprints: Vec<ImprintReport>,
    /// Why imprints could not be read, when they could not.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub name: String,
    pub order: usize,
    pub tau_ref: f64,
    pub kappa_ref: f64,
    pub grid: Option<GridStats>,
    pub snapshots: Vec<SnapshotReport>,
    pub areas: Vec<PulseAreaRecord>,
    pub residual: Option<ResidualNorms>,
    pub residual_study: Option<ResidualStudy>,
    pub wall_clock_s: f64,
}

/// Default snapshot: every pulse has left the window, in units of τ_ref.
pub fn default_snapshot(scenario: &Scenario) -> f64 {
    let g = scenario.physical_grid();
    let (z0, z1) = g.z_bounds();
    if scenario.specs.is_empty() {
        return scenario.config.grid.t_max;
    }
    late_time(&scenario.specs, &scenario.sys, z0, z1) / scenario.tau_ref
}

fn profile(scenario: &Scenario, model: &Model, t: f64) -> Result<ZProfile> {
    let cfg = &scenario.config.grid;
    ZProfile::sample_with(|t, z| model.state(t, z), t * scenario.tau_ref, scenario.kappa_ref, cfg.z_min, cfg.z_max, cfg.nz)
}

fn read_snapshot(profile: &ZProfile, targets: &[ImprintTarget]) -> SnapshotReport {
    let t = profile.t;
    match locate_imprints(profile, targets) {
        Ok(imprints) => SnapshotReport { t, imprints, error: None },
        Err(e) => SnapshotReport { t, imprints: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Evaluates a scenario and writes every requested output into `out`.
pub fn simulate(scenario: &Scenario, out: &Path) -> Result<SimulateReport> {
    let start = std::time::Instant::now();
    fs::create_dir_all(out)?;
    let model = scenario.solution()?;
    let formula = scenario.config.h_formula;
    let mut report = SimulateReport {
        name: scenario.config.name.clone(),
        order: model.order(),
        tau_ref: scenario.tau_ref,
        kappa_ref: scenario.kappa_ref,
        ..Default::default()
    };

    let fields = scenario.wants(OutputKind::Fields);
    let density = scenario.wants(OutputKind::Density);
    if fields || density {
        report.grid = Some(write_grid_csv(out, scenario, &model, formula, fields, density)?);
    }

    if scenario.wants(OutputKind::Imprints) {
        let times = scenario.config.snapshot_times.clone().unwrap_or_else(|| vec![default_snapshot(scenario)]);
        // Predictions refer to the completed sequence.
        let targets = scenario
            .specs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind() == SolitonKind::Type1)
            .map(|(i, _)| ImprintTarget::for_soliton(&scenario.specs, i, scenario.tau_ref))
            .collect::<Result<Vec<_>>>()?;
        let mut profiles = Vec::with_capacity(times.len());
        for &t in &times {
            let mut p = profile(scenario, &model, t)?;
            p.t = t;
            report.snapshots.push(read_snapshot(&p, &targets));
            profiles.push((t, p));
        }
        write_profiles_csv(&out.join("profiles.csv"), &profiles)?;
    }

    if scenario.wants(OutputKind::Areas) {
        let g = scenario.physical_grid();
        let (t0, t1) = g.t_bounds();
        let cfg = &scenario.config.grid;
        let zs: Vec<f64> = (0..cfg.nz).map(|k| g.z(k)).collect();
        let mut records = area_profile_with(|t, z| model.state(t, z), t0, t1, g.nt(), &zs)?;
        for r in &mut records {
            r.z *= scenario.kappa_ref;
        }
        report.areas = records;
    }

    if scenario.wants(OutputKind::Residuals) {
        let study = residual_study(scenario, &model, formula, 2)?;
        report.residual = study.norms.last().copied();
        report.residual_study = Some(study);
    }

    report.wall_clock_s = start.elapsed().as_secs_f64();
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureRunReport {
    pub label: String,
    pub simulate: SimulateReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub preset: String,
    pub runs: Vec<FigureRunReport>,
    /// For the storage-order preset: max |Δρ| between the two runs at
    /// T = 40·τ_max over the Z window.
    pub swap_density_difference: Option<f64>,
}

fn snapshot_targets(run: &PresetRun, snap: &Snapshot) -> Result<Vec<ImprintTarget>> {
    let expected = run.expected(snap)?;
    let specs = &run.scenario.specs;
    expected
        .iter()
        .map(|e| {
            let spec = &specs[e.soliton];
            Ok(ImprintTarget {
                soliton: e.soliton,
                kappa_ratio: spec.tau() / run.scenario.tau_ref,
                reference_phase: spec.phase(1, 2),
                prediction: Some(lambda_soliton::observables::Prediction {
                    location: e.location,
                    phase_sign: e.phase_sign,
                }),
            })
        })
        .collect()
}

fn figure_run(run: &PresetRun, preset: Preset, out: &Path) -> Result<SimulateReport> {
    if !preset.is_profile() {
        return simulate(&run.scenario, out);
    }
    let start = std::time::Instant::now();
    fs::create_dir_all(out)?;
    let scenario = &run.scenario;
    let model = scenario.solution()?;
    let mut report = SimulateReport {
        name: scenario.config.name.clone(),
        order: model.order(),
        tau_ref: scenario.tau_ref,
        kappa_ref: scenario.kappa_ref,
        ..Default::default()
    };
    let mut profiles = Vec::new();
    for snap in &run.snapshots {
        let mut p = profile(scenario, &model, snap.t)?;
        p.t = snap.t;
        report.snapshots.push(read_snapshot(&p, &snapshot_targets(run, snap)?));
        profiles.push((snap.t, p));
    }
    write_profiles_csv(&out.join("profiles.csv"), &profiles)?;
    report.wall_clock_s = start.elapsed().as_secs_f64();
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

/// Largest density difference between the two storage orders at T = 40·τ_max.
pub fn swap_density_difference(first: &Scenario, second: &Scenario) -> Result<f64> {
    let (a, b) = (first.solution()?, second.solution()?);
    let tau_max = first.specs.iter().map(|s| s.tau()).fold(0.0, f64::max);
    let t = 40.0 * tau_max;
    let g = first.physical_grid();
    let mut worst: f64 = 0.0;
    for k in 0..g.nz() {
        let z = g.z(k);
        worst = worst.max((a.state(t, z)?.rho - b.state(t, z)?.rho).norm_inf());
    }
    Ok(worst)
}

/// Runs a preset and writes its data, `annotations.json` and `report.json`.
/// Presets with several runs get one subdirectory per run.
pub fn figure(preset: Preset, out: &Path) -> Result<FigureReport> {
    fs::create_dir_all(out)?;
    let plan = preset.plan()?;
    write_json(&out.join("annotations.json"), &plan.annotations()?)?;
    let mut report = FigureReport { preset: preset.name().to_string(), ..Default::default() };
    let nested = plan.runs.len() > 1;
    for run in &plan.runs {
        let dir = if nested { out.join(&run.label) } else { out.to_path_buf() };
        let simulate = figure_run(run, preset, &dir)?;
        report.runs.push(FigureRunReport { label: run.label.clone(), simulate });
    }
    if matches!(preset, Preset::Pulse2 | Preset::Den2) && plan.runs.len() == 2 {
        report.swap_density_difference = Some(swap_density_difference(&plan.runs[0].scenario, &plan.runs[1].scenario)?);
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    const TYPE1: &str = r#"
name = "type1"
outputs = ["density", "imprints", "areas"]
csv_stride = [4, 2]

[grid]
t_min = -40.0
t_max = 40.0
nt = 512
z_min = -6.0
z_max = 6.0
nz = 128

[[solitons]]
kind = "type1"
tau = 1.0
a = [[1.0, 0.0], [1.0, 0.0], [1e-4, 0.0]]
"#;

    #[test]
    fn simulate_writes_requested_outputs() {
        let dir = std::env::temp_dir().join(format!("lambda-soliton-run-{}", std::process::id()));
        let scenario = Scenario::from_config(ScenarioConfig::from_toml_str(TYPE1).unwrap()).unwrap();
        let report = simulate(&scenario, &dir).unwrap();
        assert!(dir.join("density.csv").exists() && !dir.join("fields.csv").exists());
        assert!(dir.join("profiles.csv").exists() && dir.join("report.json").exists());
        assert_eq!(report.grid.unwrap().points, 128 * 64);
        assert_eq!(report.areas.len(), 128);
        let imprint = &report.snapshots[0].imprints[0];
        assert!(imprint.location_measured.abs() < 0.15, "{imprint:?}");
        assert_eq!(imprint.phase_sign, 1);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn default_snapshot_follows_the_last_pulse() {
        let scenario = Scenario::from_config(ScenarioConfig::from_toml_str(TYPE1).unwrap()).unwrap();
        // Type 1 centre is at t = τ(min(κz, η12) − η13) ≤ −ln 1e4, plus 40 durations.
        let t = default_snapshot(&scenario);
        assert!((t - (40.0 - 1e4f64.ln())).abs() < 1e-9, "{t}");
    }
}
