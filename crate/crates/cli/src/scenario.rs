//! Scenario configuration files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "sit"
//! outputs = ["fields", "density", "areas"]
//!
//! [system]
//! mu = 2.0
//!
//! [grid]            # t in units of τ_ref, z in units of 1/κ_ref
//! t_min = -60.0
//! t_max = 160.0
//! nt = 4096
//! z_min = -10.0
//! z_max = 15.0
//! nz = 512
//!
//! [[solitons]]
//! kind = "type3"
//! tau = 1.0
//! a = [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
//! ```
//!
//! τ_ref is the duration of the first Type 1 soliton, or of the first soliton
//! when there is none. An empty `solitons` list describes the quiescent
//! medium alone (τ_ref = 1).

use std::path::Path;

use lambda_soliton::mbsolver::Grid;
use lambda_soliton::superposition::Evaluation;
use lambda_soliton::{Error, HFormula, OrderedSolution, Result, SolitonKind, SolitonSpec, SolutionState, SystemParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Fields,
    Density,
    Imprints,
    Areas,
    Residuals,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Fields, OutputKind::Density]
}

fn default_stride() -> [usize; 2] {
    [1, 1]
}

fn is_default_stride(s: &[usize; 2]) -> bool {
    *s == [1, 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub h_formula: HFormula,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    /// Times (t/τ_ref) at which ground-state profiles are scanned for imprints.
    /// Defaults to a single time after every pulse has left the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    /// Write every n-th T sample and every m-th Z slice to the CSV files.
    #[serde(default = "default_stride", skip_serializing_if = "is_default_stride")]
    pub csv_stride: [usize; 2],
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solitons: Vec<SolitonConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub mu: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { mu: SystemParams::default().mu }
    }
}

/// Grid in dimensionless units: t/τ_ref and κ_ref·Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { t_min: -60.0, t_max: 160.0, nt: 4096, z_min: -10.0, z_max: 15.0, nz: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonConfig {
    pub kind: SolitonKind,
    pub tau: f64,
    /// (a1, a2, a3) as [re, im] pairs.
    pub a: [[f64; 2]; 3],
}

impl SolitonConfig {
    pub fn from_spec(spec: &SolitonSpec) -> Self {
        let a = spec.constants().map(|c| [c.re, c.im]);
        Self { kind: spec.kind(), tau: spec.tau(), a }
    }

    fn to_spec(&self) -> Result<SolitonSpec> {
        SolitonSpec::new(self.kind, self.tau, self.a.map(|[re, im]| C64::new(re, im)))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// The analytic solution of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    /// Quiescent medium, no fields.
    Seed,
    Solitons(OrderedSolution),
}

impl Model {
    pub fn evaluate_with(&self, t: f64, z: f64, formula: HFormula) -> Result<Evaluation> {
        match self {
            Model::Seed => Ok(Evaluation { first: vec![], chain: vec![], m_ac: None, state: SolutionState::seed() }),
            Model::Solitons(sol) => sol.evaluate_with(t, z, formula),
        }
    }

    pub fn state_with(&self, t: f64, z: f64, formula: HFormula) -> Result<SolutionState> {
        Ok(self.evaluate_with(t, z, formula)?.state)
    }

    pub fn state(&self, t: f64, z: f64) -> Result<SolutionState> {
        self.state_with(t, z, HFormula::default())
    }

    pub fn order(&self) -> usize {
        match self {
            Model::Seed => 0,
            Model::Solitons(sol) => sol.order(),
        }
    }
}

/// A validated scenario with physical parameters resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sys: SystemParams,
    pub specs: Vec<SolitonSpec>,
    pub tau_ref: f64,
    pub kappa_ref: f64,
}

impl Scenario {
    /// Checks everything that can be checked without building the solution.
    /// Coinciding durations are left to [`Scenario::solution`], which reports
    /// them as a numerical degeneracy.
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        let sys = SystemParams::new(config.system.mu).map_err(|e| Error::Config(format!("system.mu: {e}")))?;
        let n = config.solitons.len();
        if n > 3 {
            return Err(Error::Config(format!("solitons: at most 3 entries are supported, got {n}")));
        }
        let specs = config
            .solitons
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_spec().map_err(|e| Error::Config(format!("solitons[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let g = &config.grid;
        Grid::new(g.t_min, g.t_max, g.nt, g.z_min, g.z_max, g.nz)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        if config.csv_stride.contains(&0) {
            return Err(Error::Config("csv_stride: entries must be at least 1".into()));
        }
        if let Some(times) = &config.snapshot_times {
            if let Some(t) = times.iter().find(|t| !t.is_finite()) {
                return Err(Error::Config(format!("snapshot_times: {t} is not finite")));
            }
        }
        let tau_ref = specs
            .iter()
            .find(|s| s.kind() == SolitonKind::Type1)
            .or(specs.first())
            .map_or(1.0, |s| s.tau());
        Ok(Self { kappa_ref: sys.kappa(tau_ref), sys, specs, tau_ref, config })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_config(ScenarioConfig::from_path(path)?)
    }

    pub fn from_specs(name: &str, specs: &[SolitonSpec], sys: SystemParams, grid: GridConfig) -> Result<Self> {
        Self::from_config(ScenarioConfig {
            name: name.to_string(),
            h_formula: HFormula::default(),
            outputs: default_outputs(),
            snapshot_times: None,
            csv_stride: default_stride(),
            system: SystemConfig { mu: sys.mu },
            grid,
            solitons: specs.iter().map(SolitonConfig::from_spec).collect(),
        })
    }

    pub fn solution(&self) -> Result<Model> {
        if self.specs.is_empty() {
            Ok(Model::Seed)
        } else {
            OrderedSolution::new(self.specs.clone(), self.sys).map(Model::Solitons)
        }
    }

    /// Grid in physical T and Z.
    pub fn physical_grid(&self) -> Grid {
        let g = &self.config.grid;
        Grid::new(
            g.t_min * self.tau_ref,
            g.t_max * self.tau_ref,
            g.nt,
            g.z_min / self.kappa_ref,
            g.z_max / self.kappa_ref,
            g.nz,
        )
        .expect("grid validated on construction")
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.config.outputs.contains(&kind)
    }

    /// Index pair and durations of the first two solitons with coinciding τ.
    pub fn degenerate_pair(&self) -> Option<(usize, usize)> {
        let n = self.specs.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| {
                let (a, b) = (self.specs[i].tau(), self.specs[j].tau());
                (a - b).abs() <= lambda_soliton::tolerances::DEGENERATE_TAU_REL * a.max(b)
            })
    }
}
