//! Long-form CSV writers. Rows run over T fastest, then Z; coordinates are
//! t/τ_ref and κ_ref·Z, fields are Ω·τ_ref. Numbers carry 13 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lambda_soliton::observables::ZProfile;
use lambda_soliton::system::DensityDefects;
use lambda_soliton::{HFormula, Result, SolutionState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{Model, Scenario};

pub const FIELDS_HEADER: &str = "t,z,abs_omega13,arg_omega13,abs_omega23,arg_omega23";
pub const DENSITY_HEADER: &str =
    "t,z,rho11,rho22,rho33,re_rho12,im_rho12,re_rho13,im_rho13,re_rho23,im_rho23";
pub const PROFILE_HEADER: &str = "t,z,rho11,rho22,re_rho12,im_rho12";

/// Z slices evaluated in parallel before each sequential write.
const SLICE_BATCH: usize = 32;

/// Worst structural defects seen while evaluating a grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub points: usize,
    pub involution: f64,
    pub density: DensityDefects,
}

impl GridStats {
    pub fn max(&self) -> f64 {
        self.involution.max(self.density.max())
    }

    fn merge(&mut self, other: &GridStats) {
        self.points += other.points;
        self.involution = self.involution.max(other.involution);
        self.density.merge(&other.density);
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn field_row(t: f64, z: f64, s: &SolutionState, tau_ref: f64) -> String {
    let (o13, o23) = (s.omega13 * tau_ref, s.omega23 * tau_ref);
    [t, z, o13.norm(), o13.arg(), o23.norm(), o23.arg()].map(fmt).join(",")
}

fn density_row(t: f64, z: f64, s: &SolutionState) -> String {
    let r = &s.rho;
    [
        t,
        z,
        r[(0, 0)].re,
        r[(1, 1)].re,
        r[(2, 2)].re,
        r[(0, 1)].re,
        r[(0, 1)].im,
        r[(0, 2)].re,
        r[(0, 2)].im,
        r[(1, 2)].re,
        r[(1, 2)].im,
    ]
    .map(fmt)
    .join(",")
}

/// Evaluates the analytic solution on the scenario grid (with the configured
/// CSV stride) and writes `fields.csv` and/or `density.csv` into `dir`.
pub fn write_grid_csv(
    dir: &Path,
    scenario: &Scenario,
    sol: &Model,
    formula: HFormula,
    fields: bool,
    density: bool,
) -> Result<GridStats> {
    let g = scenario.physical_grid();
    let cfg = &scenario.config.grid;
    let [st, sz] = scenario.config.csv_stride;
    let ts: Vec<usize> = (0..g.nt()).step_by(st).collect();
    let zs: Vec<usize> = (0..g.nz()).step_by(sz).collect();
    let dt_dimless = (cfg.t_max - cfg.t_min) / (cfg.nt - 1) as f64;
    let dz_dimless = (cfg.z_max - cfg.z_min) / (cfg.nz - 1) as f64;

    let open = |name: &str, header: &str, on: bool| -> Result<Option<BufWriter<File>>> {
        if !on {
            return Ok(None);
        }
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        writeln!(w, "{header}")?;
        Ok(Some(w))
    };
    let mut fw = open("fields.csv", FIELDS_HEADER, fields)?;
    let mut dw = open("density.csv", DENSITY_HEADER, density)?;

    let mut stats = GridStats::default();
    for batch in zs.chunks(SLICE_BATCH) {
        let slices = batch
            .par_iter()
            .map(|&k| {
                let zd = cfg.z_min + dz_dimless * k as f64;
                let mut f = String::new();
                let mut d = String::new();
                let mut s = GridStats::default();
                for &i in &ts {
                    let td = cfg.t_min + dt_dimless * i as f64;
                    let ev = sol.evaluate_with(g.t(i), g.z(k), formula)?;
                    s.points += 1;
                    s.involution = s.involution.max(ev.involution_defect());
                    s.density.merge(&ev.state.density_defects());
                    if fields {
                        f.push_str(&field_row(td, zd, &ev.state, scenario.tau_ref));
                        f.push('\n');
                    }
                    if density {
                        d.push_str(&density_row(td, zd, &ev.state));
                        d.push('\n');
                    }
                }
                Ok((f, d, s))
            })
            .collect::<Result<Vec<_>>>()?;
        for (f, d, s) in slices {
            if let Some(w) = fw.as_mut() {
                w.write_all(f.as_bytes())?;
            }
            if let Some(w) = dw.as_mut() {
                w.write_all(d.as_bytes())?;
            }
            stats.merge(&s);
        }
    }
    for w in [fw.as_mut(), dw.as_mut()].into_iter().flatten() {
        w.flush()?;
    }
    Ok(stats)
}

/// Ground-state profiles, one block of rows per snapshot, with t in units of
/// τ_ref and z in κ_ref·Z.
pub fn write_profiles_csv(path: &Path, profiles: &[(f64, ZProfile)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{PROFILE_HEADER}")?;
    for (t, p) in profiles {
        for k in 0..p.z.len() {
            let row = [*t, p.z[k], p.rho11[k], p.rho22[k], p.rho12[k].re, p.rho12[k].im].map(fmt).join(",");
            writeln!(w, "{row}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| lambda_soliton::Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
