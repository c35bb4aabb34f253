//! The invariant and convergence suite run by `lambda-soliton verify`.

use std::fmt;
use std::str::FromStr;

use lambda_soliton::darboux::{asymptotic_slack, involution_first, involution_asymptote, Regime};
use lambda_soliton::mbsolver::{self, BoundaryData, FieldError, Grid, ResidualNorms};
use lambda_soliton::observables::{area_profile_with, PulseAreaRecord};
use lambda_soliton::superposition::{permutability_defect, PermutabilityDefect};
use lambda_soliton::{tolerances, ComplexMat3, Error, HFormula, Result, SolitonKind, SolutionState};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{Model, Scenario};

/// Sample points per axis for the pointwise comparisons.
const PROBE_POINTS: usize = 50;
/// Successive residual norms must shrink by at least this factor per halving.
pub const CONVERGENCE_RATIO: f64 = 3.0;
/// Residuals below this are treated as exactly zero.
const RESIDUAL_FLOOR: f64 = 1e-12;
/// Absolute tolerance on 2π for the first-order pulse area.
pub const AREA_TOL: f64 = 1e-6;
/// L∞ relative field error allowed between the oracle and the analytic solution.
pub const ORACLE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn residual_grids(&self) -> usize {
        match self {
            Level::Fast => 2,
            Level::Full => 4,
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::Config(format!("level: expected `fast` or `full`, got `{other}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fast => "fast",
            Level::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value < tolerance, value, tolerance, detail: detail.into() }
    }

    fn failed(name: &str, err: &Error) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, tolerance: f64::NAN, detail: err.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPermutability {
    pub first: usize,
    pub second: usize,
    /// Worst values over the probe grid.
    pub defect: PermutabilityDefect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStudy {
    pub formula: HFormula,
    /// (nt, nz) of each grid, coarsest first.
    pub grids: Vec<[usize; 2]>,
    pub norms: Vec<ResidualNorms>,
    /// Ratios of successive max-L∞ residuals.
    pub ratios: Vec<f64>,
    pub converges: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaDiscrepancy {
    /// max ‖H_bracket − H_compositional‖∞ over the probe grid.
    pub bracket: f64,
    /// max ‖H_inverse-bracket − H_compositional‖∞ over the probe grid.
    pub inverse_bracket: f64,
    /// Scale for the above: max ‖H_compositional‖∞.
    pub reference: f64,
    pub compositional_converges: bool,
    pub bracket_converges: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub nt: usize,
    pub nz: usize,
    pub error: FieldError,
    /// max ‖ρ(t_min, Z) − ρ(t_min, z_min)‖∞ of the analytic solution; the
    /// oracle assumes a uniform initial medium.
    pub initial_medium_spread: f64,
    pub step_warnings: usize,
    pub max_trace_drift: f64,
    pub max_purity_defect: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub name: String,
    pub level: String,
    pub h_formula: HFormula,
    pub checks: Vec<Check>,
    pub permutability: Vec<PairPermutability>,
    pub areas: Vec<PulseAreaRecord>,
    pub residuals: Vec<ResidualStudy>,
    pub formula_discrepancy: Option<FormulaDiscrepancy>,
    pub oracle: Option<OracleRecord>,
    pub wall_clock_s: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn probe_points(grid: &Grid) -> Vec<(f64, f64)> {
    let (t0, t1) = grid.t_bounds();
    let (z0, z1) = grid.z_bounds();
    let ts = linspace(t0, t1, PROBE_POINTS);
    linspace(z0, z1, PROBE_POINTS)
        .into_iter()
        .flat_map(|z| ts.iter().map(move |&t| (t, z)))
        .collect()
}

/// Same bounds, at most `max_nt` × `max_nz` points.
fn capped(grid: &Grid, max_nt: usize, max_nz: usize) -> Grid {
    let (t0, t1) = grid.t_bounds();
    let (z0, z1) = grid.z_bounds();
    Grid::new(t0, t1, grid.nt().min(max_nt), z0, z1, grid.nz().min(max_nz)).expect("bounds already valid")
}

/// Coarsest grid of the residual study: about three samples per shortest
/// duration in T and per shortest absorption length in Z.
pub fn residual_base_grid(scenario: &Scenario) -> Grid {
    let g = scenario.physical_grid();
    let (t0, t1) = g.t_bounds();
    let (z0, z1) = g.z_bounds();
    let tau_min = scenario.specs.iter().map(|s| s.tau()).fold(scenario.tau_ref, f64::min);
    let kappa_max = scenario.specs.iter().map(|s| s.kappa(&scenario.sys)).fold(scenario.kappa_ref, f64::max);
    let nt = ((3.0 * (t1 - t0) / tau_min).ceil() as usize + 1).max(16);
    let nz = ((3.0 * (z1 - z0) * kappa_max).ceil() as usize + 1).max(16);
    Grid::new(t0, t1, nt, z0, z1, nz).expect("bounds already valid")
}

pub fn residual_study(scenario: &Scenario, model: &Model, formula: HFormula, levels: usize) -> Result<ResidualStudy> {
    let probe = C64::new(0.0, 0.7 / scenario.tau_ref);
    let mut grid = residual_base_grid(scenario);
    let mut grids = Vec::new();
    let mut norms = Vec::new();
    for _ in 0..levels {
        norms.push(mbsolver::residual(|t, z| model.state_with(t, z, formula), &grid, &scenario.sys, probe)?);
        grids.push([grid.nt(), grid.nz()]);
        grid = grid.refined();
    }
    let linf: Vec<f64> = norms.iter().map(|n| n.max_linf()).collect();
    let ratios: Vec<f64> = linf.windows(2).map(|w| w[0] / w[1]).collect();
    let finest = *linf.last().unwrap_or(&0.0);
    let converges = finest < RESIDUAL_FLOOR
        || (ratios.iter().all(|&r| r >= CONVERGENCE_RATIO) && !ratios.is_empty());
    Ok(ResidualStudy { formula, grids, norms, ratios, converges })
}

pub fn structural_check(scenario: &Scenario, model: &Model, level: Level) -> Check {
    let g = scenario.physical_grid();
    let g = match level {
        Level::Fast => capped(&g, 1024, 128),
        Level::Full => g,
    };
    let formula = scenario.config.h_formula;
    let worst = (0..g.nz())
        .into_par_iter()
        .map(|k| {
            let mut worst: f64 = 0.0;
            for i in 0..g.nt() {
                let ev = model.evaluate_with(g.t(i), g.z(k), formula)?;
                worst = worst.max(ev.involution_defect()).max(ev.state.density_defects().max());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    match worst {
        Ok(v) => Check::below(
            "structural",
            v,
            tolerances::STRUCTURAL,
            format!("max of ‖M²−I‖, ‖M−M†‖, ‖ρ−ρ†‖, |tr ρ−1|, ‖ρ²−ρ‖ over {}x{} points", g.nt(), g.nz()),
        ),
        Err(e) => Check::failed("structural", &e),
    }
}

fn permutability(scenario: &Scenario, report: &mut VerifyReport) -> Check {
    let g = scenario.physical_grid();
    let pts = probe_points(&g);
    let n = scenario.specs.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (scenario.specs[i], scenario.specs[j]);
            let found = pts
                .par_iter()
                .map(|&(t, z)| permutability_defect(&a, &b, &scenario.sys, t, z))
                .collect::<Result<Vec<_>>>();
            let defects = match found {
                Ok(d) => d,
                Err(e) => return Check::failed("permutability", &e),
            };
            let defect = defects.iter().fold(PermutabilityDefect::default(), |acc, d| PermutabilityDefect {
                dressing: acc.dressing.max(d.dressing),
                linear: acc.linear.max(d.linear),
                literal: acc.literal.max(d.literal),
            });
            worst = worst.max(defect.max());
            report.permutability.push(PairPermutability { first: i, second: j, defect });
        }
    }
    Check::below(
        "permutability",
        worst,
        tolerances::STRUCTURAL,
        format!("‖M^ab M^a − M^ba M^b‖ and linear coefficient over {PROBE_POINTS}x{PROBE_POINTS} points, every pair"),
    )
}

fn path_independence(scenario: &Scenario) -> Check {
    let g = scenario.physical_grid();
    let pts = probe_points(&g);
    let Ok(Model::Solitons(sol)) = scenario.solution() else {
        return Check::below("path-independence", 0.0, tolerances::STRUCTURAL, "no solitons");
    };
    let perms: &[&[usize]] = match sol.order() {
        2 => &[&[1, 0]],
        3 => &[&[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]],
        _ => &[],
    };
    let mut worst: f64 = 0.0;
    for perm in perms {
        let other = match sol.permuted(perm) {
            Ok(o) => o,
            Err(e) => return Check::failed("path-independence", &e),
        };
        let diff = pts
            .par_iter()
            .map(|&(t, z)| {
                let (x, y) = (sol.state(t, z)?, other.state(t, z)?);
                Ok((x.rho - y.rho).norm_inf().max((x.h - y.h).norm_inf() * scenario.tau_ref))
            })
            .collect::<Result<Vec<f64>>>();
        match diff {
            Ok(d) => worst = d.into_iter().fold(worst, f64::max),
            Err(e) => return Check::failed("path-independence", &e),
        }
    }
    Check::below(
        "path-independence",
        worst,
        tolerances::STRUCTURAL,
        "max ‖Δρ‖∞ and τ_ref‖ΔH‖∞ over every ordering of the solitons",
    )
}

/// Exact first-order involutions against their closed-form limits: Types 2 and 3
/// everywhere, Type 1 on the first and last time slices with the bound
/// 4·e^{−slack}.
fn table_check(scenario: &Scenario) -> Check {
    let g = scenario.physical_grid();
    let (t0, t1) = g.t_bounds();
    let zs = linspace(g.z_bounds().0, g.z_bounds().1, PROBE_POINTS);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for spec in &scenario.specs {
        let samples: Vec<(f64, f64, Regime)> = match spec.kind() {
            SolitonKind::Type1 => zs
                .iter()
                .flat_map(|&z| [(t0, z, Regime::EarlyTime), (t1, z, Regime::LateTime)])
                .collect(),
            _ => probe_points(&g).into_iter().map(|(t, z)| (t, z, Regime::AllTimes)).collect(),
        };
        for (t, z, regime) in samples {
            let eval = || -> Result<(f64, f64)> {
                let exact = involution_first(spec, &scenario.sys, t, z)?;
                let table = involution_asymptote(spec, regime, &scenario.sys, t, z)?;
                let slack = asymptotic_slack(spec, regime, &scenario.sys, t, z)?;
                let err = (exact - table).norm_inf();
                let bound = 4.0 * (-slack).exp() + 1e-12;
                Ok((err, err / bound))
            };
            match eval() {
                Ok((err, ratio)) => {
                    worst_abs = worst_abs.max(err);
                    worst_ratio = worst_ratio.max(ratio);
                }
                Err(e) => return Check::failed("asymptotes", &e),
            }
        }
    }
    Check::below(
        "asymptotes",
        worst_ratio,
        1.0,
        format!("worst error/bound ratio; largest absolute deviation {worst_abs:.3e}"),
    )
}

fn area_check(scenario: &Scenario, model: &Model, report: &mut VerifyReport) -> Option<Check> {
    if model.order() == 0 {
        return None;
    }
    let g = scenario.physical_grid();
    let (t0, t1) = g.t_bounds();
    let (z0, z1) = g.z_bounds();
    let zs = linspace(z0, z1, 26);
    let records = match area_profile_with(|t, z| model.state(t, z), t0, t1, g.nt(), &zs) {
        Ok(r) => r,
        Err(e) => return Some(Check::failed("area", &e)),
    };
    report.areas = records.clone();
    // Only a single soliton carries a closed-form area at every Z.
    if model.order() != 1 {
        return None;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let worst = records.iter().map(|r| (r.theta_tot - two_pi).abs()).fold(0.0, f64::max);
    Some(Check::below("area", worst, AREA_TOL, "max |θ_tot − 2π| over 26 Z slices"))
}

fn formula_discrepancy(scenario: &Scenario, model: &Model, level: Level) -> Result<FormulaDiscrepancy> {
    let pts = probe_points(&scenario.physical_grid());
    let worst = pts
        .par_iter()
        .map(|&(t, z)| {
            let c = model.state_with(t, z, HFormula::Compositional)?.h;
            let p = model.state_with(t, z, HFormula::Bracket)?.h;
            let i = model.state_with(t, z, HFormula::InverseBracket)?.h;
            Ok([(p - c).norm_inf(), (i - c).norm_inf(), c.norm_inf()])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0.0f64; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]);
    let levels = level.residual_grids();
    let compositional = residual_study(scenario, model, HFormula::Compositional, levels)?;
    let bracket = residual_study(scenario, model, HFormula::Bracket, levels)?;
    Ok(FormulaDiscrepancy {
        bracket: worst[0],
        inverse_bracket: worst[1],
        reference: worst[2],
        compositional_converges: compositional.converges,
        bracket_converges: bracket.converges,
    })
}

/// Injects the analytic fields at z_min and compares the integrated fields
/// over the whole scenario grid.
pub fn oracle_comparison(scenario: &Scenario, model: &Model) -> Result<OracleRecord> {
    oracle_comparison_on(scenario, model, &scenario.physical_grid())
}

/// [`oracle_comparison`] on an arbitrary physical grid.
pub fn oracle_comparison_on(scenario: &Scenario, model: &Model, g: &Grid) -> Result<OracleRecord> {
    let (t0, _) = g.t_bounds();
    let z0 = g.z(0);
    let medium = model.state(t0, z0)?.rho;
    let spread = (0..g.nz())
        .into_par_iter()
        .map(|k| Ok((model.state(t0, g.z(k))?.rho - medium).norm_inf()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let boundary_states = (0..g.nt())
        .into_par_iter()
        .map(|i| model.state(g.t(i), z0))
        .collect::<Result<Vec<SolutionState>>>()?;
    let boundary = BoundaryData {
        omega13_in: boundary_states.iter().map(|s| s.omega13).collect(),
        omega23_in: boundary_states.iter().map(|s| s.omega23).collect(),
        rho_initial: hermitian_part(&medium),
    };
    let run = mbsolver::integrate(&boundary, g, &scenario.sys, 0.0)?;
    let error = mbsolver::field_error(&run, |t, z| model.state(t, z).map(|s| (s.omega13, s.omega23)))?;
    Ok(OracleRecord {
        nt: g.nt(),
        nz: g.nz(),
        error,
        initial_medium_spread: spread,
        step_warnings: run.step_warnings.len(),
        max_trace_drift: run.defects.trace,
        max_purity_defect: run.defects.purity,
    })
}

fn hermitian_part(m: &ComplexMat3) -> ComplexMat3 {
    (*m + m.adjoint()).scale_real(0.5)
}

pub fn verify(scenario: &Scenario, level: Level) -> Result<VerifyReport> {
    let start = std::time::Instant::now();
    let model = scenario.solution()?;
    let mut report = VerifyReport {
        name: scenario.config.name.clone(),
        level: level.to_string(),
        h_formula: scenario.config.h_formula,
        ..Default::default()
    };

    report.checks.push(structural_check(scenario, &model, level));
    if model.order() >= 2 {
        let check = permutability(scenario, &mut report);
        report.checks.push(check);
        report.checks.push(path_independence(scenario));
    }
    if model.order() >= 1 {
        report.checks.push(table_check(scenario));
    }
    if let Some(check) = area_check(scenario, &model, &mut report) {
        report.checks.push(check);
    }

    let formula = scenario.config.h_formula;
    match residual_study(scenario, &model, formula, level.residual_grids()) {
        Ok(study) => {
            let last = study.norms.last().map_or(0.0, |n| n.max_linf());
            let worst_ratio = study.ratios.iter().copied().fold(f64::INFINITY, f64::min);
            // A residual that is already zero has nothing left to converge.
            let (value, tolerance) = if last < RESIDUAL_FLOOR {
                (last, RESIDUAL_FLOOR)
            } else {
                (worst_ratio, CONVERGENCE_RATIO)
            };
            report.checks.push(Check {
                name: "residual-convergence".into(),
                passed: study.converges,
                value,
                tolerance,
                detail: format!(
                    "{:?} H: smallest refinement ratio of the max-L∞ PDE residual; finest residual {last:.3e}",
                    formula
                ),
            });
            report.residuals.push(study);
        }
        Err(e) => report.checks.push(Check::failed("residual-convergence", &e)),
    }

    if model.order() >= 2 {
        match formula_discrepancy(scenario, &model, Level::Fast) {
            Ok(d) => {
                let exactly_one = d.compositional_converges != d.bracket_converges;
                report.checks.push(Check {
                    name: "h-formula-adjudication".into(),
                    passed: exactly_one && d.compositional_converges,
                    value: d.bracket,
                    tolerance: f64::NAN,
                    detail: format!(
                        "‖H_bracket − H_compositional‖∞ = {:.3e} (scale {:.3e}); inverse-bracket form differs by {:.3e}; \
                         residual converges: compositional {}, bracket {}",
                        d.bracket, d.reference, d.inverse_bracket, d.compositional_converges, d.bracket_converges
                    ),
                });
                report.formula_discrepancy = Some(d);
            }
            Err(e) => report.checks.push(Check::failed("h-formula-adjudication", &e)),
        }
    }

    if level == Level::Full {
        match oracle_comparison(scenario, &model) {
            Ok(rec) => {
                report.checks.push(Check::below(
                    "oracle",
                    rec.error.relative,
                    ORACLE_TOL,
                    format!("L∞ relative field error on {}x{}", rec.nt, rec.nz),
                ));
                report.oracle = Some(rec);
            }
            Err(e) => report.checks.push(Check::failed("oracle", &e)),
        }
    }

    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{GridConfig, ScenarioConfig};
    use lambda_soliton::{SolitonSpec, SystemParams};

    fn small_grid() -> GridConfig {
        GridConfig { t_min: -30.0, t_max: 30.0, nt: 384, z_min: -4.0, z_max: 4.0, nz: 32 }
    }

    #[test]
    fn levels_parse() {
        assert_eq!("fast".parse::<Level>().unwrap(), Level::Fast);
        assert_eq!(Level::Full.to_string(), "full");
        assert!(matches!("quick".parse::<Level>(), Err(Error::Config(_))));
    }

    #[test]
    fn seed_passes_every_check() {
        let cfg = ScenarioConfig::from_toml_str("name = \"seed\"").unwrap();
        let report = verify(&Scenario::from_config(cfg).unwrap(), Level::Fast).unwrap();
        assert!(report.passed(), "{:?}", report.first_failure());
    }

    #[test]
    fn base_grid_resolves_the_shortest_pulse() {
        let specs = [SolitonSpec::type1(1.0, 0.0, 0.0).unwrap(), SolitonSpec::type2(0.25, 0.0).unwrap()];
        let s = Scenario::from_specs("x", &specs, SystemParams::default(), small_grid()).unwrap();
        let g = residual_base_grid(&s);
        assert!(g.dt() <= 0.25 / 3.0 + 1e-12);
        assert!(g.dz() * s.specs[1].kappa(&s.sys) <= 1.0 / 3.0 + 1e-12);
    }

    #[test]
    fn single_soliton_report() {
        let s = Scenario::from_specs("sit", &[SolitonSpec::type3(1.0, 0.0).unwrap()], SystemParams::default(), small_grid())
            .unwrap();
        let report = verify(&s, Level::Fast).unwrap();
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["structural", "asymptotes", "area", "residual-convergence"]);
        assert!(report.passed(), "{:?}", report.first_failure());
    }
}
