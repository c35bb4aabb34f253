//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances are fixed below.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use lambda_soliton::darboux::SolitonKind;
use lambda_soliton::observables::{area_profile, late_time, locate_imprints, ImprintReport, ImprintTarget, Prediction, ZProfile};
use lambda_soliton::superposition::permutability_defect;
use lambda_soliton::{HFormula, OrderedSolution, SolitonSpec, SystemParams};
use lambda_soliton_cli::presets::{Preset, PresetRun};
use lambda_soliton_cli::run::swap_density_difference;
use lambda_soliton_cli::scenario::{GridConfig, Scenario};
use lambda_soliton_cli::verify::{oracle_comparison_on, structural_check, verify, Level};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AREA_TOL: f64 = 1e-6;
const LOCATION_CELLS: f64 = 1.5;
const SWAP_TOL: f64 = 1e-8;
const PERMUTABILITY_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_HALVING_RATIO: f64 = 3.0;
const STRUCTURAL_TOL: f64 = 1e-10;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome { passed, summary: summary.into() }
}

/// Independent closed form of the imprint lag, kept separate from the library's.
fn lag(ta: f64, tb: f64) -> f64 {
    ((ta + tb) / (ta - tb)).abs().ln()
}

fn default_scenario(name: &str, specs: &[SolitonSpec]) -> Scenario {
    Scenario::from_specs(name, specs, SystemParams::default(), GridConfig::default()).unwrap()
}

/// Ground-state profile of a scenario at time `t` (units of τ_ref).
fn profile_at(s: &Scenario, sol: &OrderedSolution, t: f64) -> ZProfile {
    let g = &s.config.grid;
    ZProfile::sample(sol, t * s.tau_ref, s.kappa_ref, g.z_min, g.z_max, g.nz).unwrap()
}

fn cell(profile: &ZProfile, tau: f64, tau_ref: f64) -> f64 {
    profile.spacing() * tau / tau_ref
}

fn target(specs: &[SolitonSpec], i: usize, tau_ref: f64, location: f64, phase_sign: i8) -> ImprintTarget {
    ImprintTarget {
        soliton: i,
        kappa_ratio: specs[i].tau() / tau_ref,
        reference_phase: specs[i].phase(1, 2),
        prediction: Some(Prediction { location, phase_sign }),
    }
}

fn ac1_sit_area() -> Outcome {
    let spec = SolitonSpec::type3(1.0, 0.0).unwrap();
    let s = default_scenario("sit", &[spec]);
    let sol = OrderedSolution::new(vec![spec], s.sys).unwrap();
    let g = s.physical_grid();
    let (t0, t1) = g.t_bounds();
    let zs: Vec<f64> = (0..g.nz()).step_by(8).map(|k| g.z(k)).collect();
    let rec = area_profile(&sol, t0, t1, g.nt(), &zs).unwrap();
    let worst = rec.iter().map(|r| (r.theta_tot - 2.0 * PI).abs()).fold(0.0, f64::max);
    outcome(worst < AREA_TOL, format!("max |θ − 2π| = {worst:.2e} over {} Z slices (tol {AREA_TOL:.0e})", zs.len()))
}

fn ac2_total_area() -> Outcome {
    let spec = SolitonSpec::type1(1.0, 0.0, 20.0).unwrap();
    let s = default_scenario("type1", &[spec]);
    let sol = OrderedSolution::new(vec![spec], s.sys).unwrap();
    let g = s.physical_grid();
    let (t0, t1) = g.t_bounds();
    let zs: Vec<f64> = (0..=50).map(|k| (-10.0 + 0.5 * k as f64) / s.kappa_ref).collect();
    let rec = area_profile(&sol, t0, t1, g.nt(), &zs).unwrap();
    let worst = rec.iter().map(|r| (r.theta_tot - 2.0 * PI).abs()).fold(0.0, f64::max);
    // The energy moves between the two transitions; the total must not.
    let swing = rec.iter().map(|r| r.theta13).fold(f64::INFINITY, f64::min);
    outcome(
        worst < AREA_TOL,
        format!("max |θ_tot − 2π| = {worst:.2e} over κZ ∈ [−10, 15], min θ13 = {swing:.3} (tol {AREA_TOL:.0e})"),
    )
}

fn ac3_single_imprint() -> Outcome {
    let plan = Preset::Den1.plan().unwrap();
    let run = &plan.runs[0];
    let s = &run.scenario;
    let specs = &s.specs;
    // Durations chosen so that the lags are exactly 5 and 10.
    let (d_b, d_c) = (lag(1.0, specs[1].tau()), lag(1.0, specs[2].tau()));
    let sol = OrderedSolution::new(specs.clone(), s.sys).unwrap();
    let want = [(0.0, 1i8), (-d_b, -1), (-d_b + d_c, 1)];
    let mut passed = (d_b - 5.0).abs() < 1e-9 && (d_c - 10.0).abs() < 1e-9;
    let mut parts = Vec::new();
    for (snap, &(loc, sign)) in run.snapshots.iter().zip(&want) {
        let p = profile_at(s, &sol, snap.t);
        let tol = LOCATION_CELLS * cell(&p, 1.0, s.tau_ref);
        match locate_imprints(&p, &[target(specs, 0, s.tau_ref, loc, sign)]) {
            Ok(r) => {
                let ok = (r[0].location_measured - loc).abs() < tol && r[0].phase_sign == sign;
                passed &= ok;
                parts.push(format!("{:+.3}", r[0].location_measured));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("error: {e}"));
            }
        }
    }
    outcome(passed, format!("locations {} (want 0, −5, +5 within {LOCATION_CELLS} cells)", parts.join(", ")))
}

fn ac4_backward_transfer() -> Outcome {
    let pairs = [(1.0, 0.3), (1.0, 0.6), (1.0, 0.9), (1.0, 1.5), (1.0, 2.5), (0.7, 0.5), (0.5, 1.0)];
    let mut passed = true;
    let mut worst_cells: f64 = 0.0;
    let mut flips = 0;
    for &(ta, tb) in &pairs {
        let specs = [SolitonSpec::type1(ta, 0.0, 20.0).unwrap(), SolitonSpec::type3(tb, -30.0 / tb).unwrap()];
        let s = default_scenario("backward", &specs);
        let sol = OrderedSolution::new(specs.to_vec(), s.sys).unwrap();
        let (z0, z1) = s.physical_grid().z_bounds();
        let t = late_time(&specs, &s.sys, z0, z1) / s.tau_ref;
        let p = profile_at(&s, &sol, t);
        let want = -lag(ta, tb);
        let sign = if tb < ta { -1 } else { 1 };
        match locate_imprints(&p, &[target(&specs, 0, s.tau_ref, want, sign)]) {
            Ok(r) => {
                let cells = (r[0].location_measured - want).abs() / cell(&p, ta, s.tau_ref);
                worst_cells = worst_cells.max(cells);
                passed &= cells < LOCATION_CELLS && r[0].phase_sign == sign;
                flips += (r[0].phase_sign < 0) as usize;
            }
            Err(_) => passed = false,
        }
    }
    outcome(
        passed,
        format!(
            "{} pairs, worst shift error {worst_cells:.2} cells, {flips} flips (all with τb < τa)",
            pairs.len()
        ),
    )
}

fn ac5_two_imprints() -> Outcome {
    let plan = Preset::Den2.plan().unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for run in &plan.runs {
        let s = &run.scenario;
        let specs = &s.specs;
        let (ea, eb) = (specs[0].eta12(), specs[1].eta12());
        let sigma = (ea - eb).signum();
        let d = lag(specs[0].tau(), specs[1].tau());
        let sol = OrderedSolution::new(specs.clone(), s.sys).unwrap();
        let p = profile_at(s, &sol, run.snapshots[0].t);
        let want = [ea + sigma * d, eb - sigma * d];
        let targets: Vec<ImprintTarget> = (0..2).map(|i| target(specs, i, s.tau_ref, want[i], 1)).collect();
        match locate_imprints(&p, &targets) {
            Ok(r) => {
                for (i, rep) in r.iter().enumerate() {
                    let tol = LOCATION_CELLS * cell(&p, specs[i].tau(), s.tau_ref);
                    passed &= (rep.location_measured - want[i]).abs() < tol;
                }
                parts.push(format!("{}: {:+.3}, {:+.3}", run.label, r[0].location_measured, r[1].location_measured));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{}: {e}", run.label));
            }
        }
    }
    let swap = swap_density_difference(&plan.runs[0].scenario, &plan.runs[1].scenario).unwrap();
    passed &= swap < SWAP_TOL;
    outcome(passed, format!("{}; swap |Δρ| = {swap:.2e} (tol {SWAP_TOL:.0e})", parts.join("; ")))
}

fn measure(run: &PresetRun, sol: &OrderedSolution, snap: usize) -> Option<Vec<ImprintReport>> {
    let s = &run.scenario;
    let p = profile_at(s, sol, run.snapshots[snap].t);
    let targets: Vec<ImprintTarget> = run
        .expected(&run.snapshots[snap])
        .ok()?
        .iter()
        .map(|e| target(&s.specs, e.soliton, s.tau_ref, e.location, e.phase_sign))
        .collect();
    locate_imprints(&p, &targets).ok()
}

fn ac6_simultaneous_control() -> Outcome {
    let plan = Preset::Den3.plan().unwrap();
    let run = &plan.runs[0];
    let s = &run.scenario;
    let specs = &s.specs;
    let (ta, tb, tc) = (specs[0].tau(), specs[1].tau(), specs[2].tau());
    let ordered = ta > tc && tc > tb && specs[2].kind() == SolitonKind::Type2;
    let sol = OrderedSolution::new(specs.clone(), s.sys).unwrap();
    let (Some(before), Some(after)) = (measure(run, &sol, 0), measure(run, &sol, 1)) else {
        return outcome(false, "imprints not resolved");
    };
    let want = [lag(ta, tc), lag(tb, tc)];
    let cell_ref = (s.config.grid.z_max - s.config.grid.z_min) / (s.config.grid.nz - 1) as f64;
    let mut passed = ordered;
    let mut shifts = Vec::new();
    for i in 0..2 {
        let shift = after[i].location_measured - before[i].location_measured;
        let tol = LOCATION_CELLS * cell_ref * specs[i].tau() / s.tau_ref;
        passed &= (shift - want[i]).abs() < tol;
        shifts.push(shift);
    }
    let flips = (0..2).filter(|&i| before[i].phase_sign != after[i].phase_sign).count();
    passed &= flips == 1;
    outcome(
        passed,
        format!(
            "shifts {:.3}, {:.3} (want {:.3}, {:.3}), {flips} phase flip(s)",
            shifts[0], shifts[1], want[0], want[1]
        ),
    )
}

fn random_spec(rng: &mut ChaCha8Rng, tau: f64) -> SolitonSpec {
    let phases = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
    let spec = match rng.gen_range(0..3) {
        0 => SolitonSpec::type1(tau, rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
        1 => SolitonSpec::type2(tau, rng.gen_range(-4.0..4.0)),
        _ => SolitonSpec::type3(tau, rng.gen_range(-4.0..4.0)),
    };
    spec.unwrap().with_phases(phases)
}

fn ac7_permutability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let sys = SystemParams::default();
    let mut worst: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for _ in 0..10 {
        let ta = rng.gen_range(0.4..2.0);
        let tb = loop {
            let t: f64 = rng.gen_range(0.4..2.0);
            if (t - ta).abs() > 0.1 {
                break t;
            }
        };
        let (a, b) = (random_spec(&mut rng, ta), random_spec(&mut rng, tb));
        let (tm, km) = (ta.max(tb), sys.kappa(ta.min(tb)));
        for i in 0..50 {
            for j in 0..50 {
                let t = tm * (-15.0 + 30.0 * i as f64 / 49.0);
                let z = (-8.0 + 16.0 * j as f64 / 49.0) / km;
                let d = permutability_defect(&a, &b, &sys, t, z).unwrap();
                worst = worst.max(d.max());
                literal = literal.max(d.literal);
            }
        }
    }
    outcome(
        worst < PERMUTABILITY_TOL,
        format!(
            "max Bianchi-square defect {worst:.2e} over 10 pairs × 50×50 (tol {PERMUTABILITY_TOL:.0e}); \
             literal ‖M^ab − M^ba‖ up to {literal:.2}"
        ),
    )
}

fn oracle_scenarios() -> Vec<Scenario> {
    let pair = [SolitonSpec::type1(1.0, 6.0, 20.0).unwrap(), SolitonSpec::type1(0.5, -2.0, -30.0).unwrap()];
    let control = SolitonSpec::type2(0.75, -150.0).unwrap();
    let grid = |t_max| GridConfig { t_min: -60.0, t_max, nt: 4096, z_min: -10.0, z_max: 15.0, nz: 512 };
    let sys = SystemParams::default();
    vec![
        Scenario::from_specs("oracle-1", &[SolitonSpec::type3(1.0, 0.0).unwrap()], sys, grid(160.0)).unwrap(),
        Scenario::from_specs("oracle-2", &pair, sys, grid(100.0)).unwrap(),
        Scenario::from_specs("oracle-3", &[pair[0], pair[1], control], sys, grid(200.0)).unwrap(),
    ]
}

fn ac8_oracle() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for s in oracle_scenarios() {
        let model = s.solution().unwrap();
        let g = s.physical_grid();
        let coarse = oracle_comparison_on(&s, &model, &g);
        let fine = oracle_comparison_on(&s, &model, &g.refined());
        match (coarse, fine) {
            (Ok(c), Ok(f)) => {
                let ratio = c.error.relative / f.error.relative;
                passed &= c.error.relative < ORACLE_TOL && ratio >= ORACLE_HALVING_RATIO;
                parts.push(format!("order {}: {:.2e}, halved ×{ratio:.1}", model.order(), c.error.relative));
            }
            (c, f) => {
                passed = false;
                let e = c.err().or(f.err()).unwrap();
                parts.push(format!("order {}: {e}", model.order()));
            }
        }
    }
    outcome(passed, format!("{} (tol {ORACLE_TOL:.0e}, ratio ≥ {ORACLE_HALVING_RATIO})", parts.join("; ")))
}

fn ac9_structural() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0usize;
    let mut passed = true;
    for preset in [Preset::Pulse1, Preset::Pulse2, Preset::Pulse3] {
        for run in preset.plan().unwrap().runs {
            let s = &run.scenario;
            let model = s.solution().unwrap();
            let c = structural_check(s, &model, Level::Full);
            passed &= c.passed;
            worst = worst.max(c.value);
            points += s.config.grid.nt * s.config.grid.nz;
            // Profile points of the matching den preset.
            for snap in &run.snapshots {
                let g = &s.config.grid;
                for k in 0..g.nz {
                    let z = (g.z_min + (g.z_max - g.z_min) * k as f64 / (g.nz - 1) as f64) / s.kappa_ref;
                    let ev = model.evaluate_with(snap.t * s.tau_ref, z, HFormula::Compositional).unwrap();
                    worst = worst.max(ev.involution_defect()).max(ev.state.density_defects().max());
                    points += 1;
                }
            }
        }
    }
    passed &= worst < STRUCTURAL_TOL;
    outcome(passed, format!("max defect {worst:.2e} over {points} points (tol {STRUCTURAL_TOL:.0e})"))
}

fn ac10_h_formula() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    let pair = [SolitonSpec::type1(1.0, 6.0, 20.0).unwrap(), SolitonSpec::type1(0.5, -2.0, -30.0).unwrap()];
    let control = SolitonSpec::type2(0.75, -150.0).unwrap();
    for specs in [pair.to_vec(), vec![pair[0], pair[1], control]] {
        let s = default_scenario("adjudication", &specs);
        let report = verify(&s, Level::Fast).unwrap();
        let check = report.checks.iter().find(|c| c.name == "h-formula-adjudication");
        let d = report.formula_discrepancy.as_ref();
        match (check, d) {
            (Some(c), Some(d)) => {
                let exactly_one = d.compositional_converges != d.bracket_converges;
                passed &= c.passed && exactly_one && d.bracket > 1e-3 * d.reference;
                parts.push(format!(
                    "order {}: ‖ΔH‖ = {:.2e}, compositional {}, bracket {}",
                    specs.len(),
                    d.bracket,
                    if d.compositional_converges { "converges" } else { "diverges" },
                    if d.bracket_converges { "converges" } else { "diverges" },
                ));
            }
            _ => {
                passed = false;
                parts.push(format!("order {}: no adjudication", specs.len()));
            }
        }
    }
    outcome(passed, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1 SIT pulse area", ac1_sit_area),
        ("AC2 total area conservation", ac2_total_area),
        ("AC3 single-imprint locations", ac3_single_imprint),
        ("AC4 backward-transfer law", ac4_backward_transfer),
        ("AC5 two-imprint interaction", ac5_two_imprints),
        ("AC6 simultaneous control", ac6_simultaneous_control),
        ("AC7 permutability", ac7_permutability),
        ("AC8 oracle equivalence", ac8_oracle),
        ("AC9 structural invariants", ac9_structural),
        ("AC10 H-formula adjudication", ac10_h_formula),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let Outcome { passed, summary } = check();
        let mark = if passed { "PASS" } else { "FAIL" };
        println!("{mark} {name}: {summary} [{:.1} s]", start.elapsed().as_secs_f64());
        failures += (!passed) as usize;
    }
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
