//! Finite-difference Maxwell-Bloch integrator used as an independent oracle.
//!
//! Marches in Z from fields injected at `z_min`. On every Z slice the
//! von Neumann equation i∂_T ρ = [H, ρ] is integrated in T with RK4, taking
//! half-step fields from a four-point cubic interpolation. The fields are then
//! advanced in Z using ∂_Z Ω_j3 = iμ ρ_3j, either with Heun's predictor-corrector
//! or with classical RK4 (the default); every stage re-solves the T equation
//! with the stage fields.
//!
//! Nothing here knows about the exact solutions. T and Z are physical
//! (traveling-wave) coordinates; callers convert from κ units.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, ComplexMat3, I};
use crate::error::{Error, Result};
use crate::system::{hamiltonian_from_rabi, w_matrix, DensityDefects, SolutionState, SystemParams};
use crate::tolerances;

const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_min: f64,
    t_max: f64,
    nt: usize,
    z_min: f64,
    z_max: f64,
    nz: usize,
}

impl Grid {
    pub fn new(t_min: f64, t_max: f64, nt: usize, z_min: f64, z_max: f64, nz: usize) -> Result<Self> {
        if nt < MIN_POINTS || nz < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("nt and nz must be at least {MIN_POINTS}, got {nt} x {nz}")));
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ok(t_min, t_max) {
            return Err(Error::InvalidGrid(format!("t range [{t_min}, {t_max}] is not increasing")));
        }
        if !ok(z_min, z_max) {
            return Err(Error::InvalidGrid(format!("z range [{z_min}, {z_max}] is not increasing")));
        }
        Ok(Self { t_min, t_max, nt, z_min, z_max, nz })
    }

    /// Same bounds with both step sizes halved.
    pub fn refined(&self) -> Self {
        Self { nt: 2 * self.nt - 1, nz: 2 * self.nz - 1, ..*self }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn t_bounds(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn z_bounds(&self) -> (f64, f64) {
        (self.z_min, self.z_max)
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nz - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + self.dt() * i as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z_min + self.dz() * k as f64
    }
}

/// Injected fields over T at `z_min` and the medium state at `t_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub omega13_in: Vec<C64>,
    pub omega23_in: Vec<C64>,
    pub rho_initial: ComplexMat3,
}

impl BoundaryData {
    /// Fields sampled from `f(T)` on the grid's T axis, medium in |1⟩⟨1|.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> (C64, C64)) -> Self {
        let (omega13_in, omega23_in) = (0..grid.nt).map(|i| f(grid.t(i))).unzip();
        Self { omega13_in, omega23_in, rho_initial: ComplexMat3::basis_projector(0) }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if self.omega13_in.len() != grid.nt || self.omega23_in.len() != grid.nt {
            return Err(Error::InvalidGrid(format!(
                "boundary profiles have {} and {} samples, grid has nt = {}",
                self.omega13_in.len(),
                self.omega23_in.len(),
                grid.nt
            )));
        }
        let rho = &self.rho_initial;
        if !rho.is_finite()
            || rho.hermiticity_defect() > tolerances::STRUCTURAL
            || (rho.trace() - 1.0).norm() > tolerances::STRUCTURAL
            || (0..3).any(|i| rho[(i, i)].re < -tolerances::STRUCTURAL)
        {
            return Err(Error::NonPhysicalState("initial density matrix is not a hermitian unit-trace state".into()));
        }
        for profile in [&self.omega13_in, &self.omega23_in] {
            let peak = profile.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let edge = profile[0].norm().max(profile[grid.nt - 1].norm());
            let limit = tolerances::AREA_TAIL_REL * peak;
            if peak > 0.0 && edge > limit {
                return Err(Error::GridTooNarrow { edge, limit });
            }
        }
        Ok(())
    }
}

/// Integrator for the field advance in Z. Every stage re-solves the T equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZScheme {
    /// Second-order predictor-corrector, two T solves per step.
    Heun,
    /// Classical fourth-order Runge-Kutta, four T solves per step.
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrateOptions {
    pub scheme: ZScheme,
    /// Keep ρ on every `density_stride.0`-th T sample of every
    /// `density_stride.1`-th Z slice; `(0, _)` or `(_, 0)` keeps none.
    pub density_stride: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepWarning {
    pub z_index: usize,
    /// max_T |ΔΩ| over one Z step divided by the slice's peak |Ω|.
    pub relative_change: f64,
}

/// Fields on the full grid (row-major, one row of `nt` samples per Z slice)
/// and, optionally, a strided subset of density matrices.
#[derive(Clone, Debug)]
pub struct Integration {
    pub grid: Grid,
    pub omega13: Vec<C64>,
    pub omega23: Vec<C64>,
    pub density_stride: (usize, usize),
    /// Row-major over the kept (Z, T) samples.
    pub density: Vec<ComplexMat3>,
    /// Worst structural defects over every computed grid point.
    pub defects: DensityDefects,
    pub step_warnings: Vec<StepWarning>,
}

impl Integration {
    pub fn field(&self, k: usize, i: usize) -> (C64, C64) {
        let n = k * self.grid.nt + i;
        (self.omega13[n], self.omega23[n])
    }

    /// Indices into the grid for each kept density sample, row-major.
    pub fn density_indices(&self) -> Vec<(usize, usize)> {
        let (st, sz) = self.density_stride;
        if st == 0 || sz == 0 {
            return Vec::new();
        }
        (0..self.grid.nz)
            .step_by(sz)
            .flat_map(|k| (0..self.grid.nt).step_by(st).map(move |i| (k, i)))
            .collect()
    }
}

pub fn integrate(boundary: &BoundaryData, grid: &Grid, sys: &SystemParams, detuning: f64) -> Result<Integration> {
    integrate_with(boundary, grid, sys, detuning, IntegrateOptions::default())
}

pub fn integrate_with(
    boundary: &BoundaryData,
    grid: &Grid,
    sys: &SystemParams,
    detuning: f64,
    options: IntegrateOptions,
) -> Result<Integration> {
    boundary.validate(grid)?;
    if !detuning.is_finite() {
        return Err(Error::InvalidSystem("detuning must be finite".into()));
    }
    let (nt, nz) = (grid.nt, grid.nz);
    let dz = grid.dz();
    let (st, sz) = options.density_stride;
    let keep_density = st > 0 && sz > 0;

    let mut omega13 = Vec::with_capacity(nt * nz);
    let mut omega23 = Vec::with_capacity(nt * nz);
    let mut density = Vec::new();
    let mut defects = DensityDefects::default();
    let mut step_warnings = Vec::new();

    let mut f13 = boundary.omega13_in.clone();
    let mut f23 = boundary.omega23_in.clone();
    let mut slice = solve_slice(&f13, &f23, boundary.rho_initial, grid, detuning, &mut defects)?;

    for k in 0..nz {
        omega13.extend_from_slice(&f13);
        omega23.extend_from_slice(&f23);
        if keep_density && k % sz == 0 {
            density.extend(slice.iter().step_by(st).copied());
        }
        if k + 1 == nz {
            break;
        }

        let mut solve = |f13: &[C64], f23: &[C64]| {
            solve_slice(f13, f23, boundary.rho_initial, grid, detuning, &mut defects).map(|s| rate(&s, sys.mu))
        };
        let shifted = |f: &[C64], k: &[C64], h: f64| -> Vec<C64> { f.iter().zip(k).map(|(f, k)| f + h * k).collect() };
        let k1 = rate(&slice, sys.mu);
        let (d13, d23): (Vec<C64>, Vec<C64>) = match options.scheme {
            ZScheme::Heun => {
                let k2 = solve(&shifted(&f13, &k1.0, dz), &shifted(&f23, &k1.1, dz))?;
                let comb = |a: &[C64], b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(a, b)| 0.5 * dz * (a + b)).collect() };
                (comb(&k1.0, &k2.0), comb(&k1.1, &k2.1))
            }
            ZScheme::Rk4 => {
                let k2 = solve(&shifted(&f13, &k1.0, 0.5 * dz), &shifted(&f23, &k1.1, 0.5 * dz))?;
                let k3 = solve(&shifted(&f13, &k2.0, 0.5 * dz), &shifted(&f23, &k2.1, 0.5 * dz))?;
                let k4 = solve(&shifted(&f13, &k3.0, dz), &shifted(&f23, &k3.1, dz))?;
                let comb = |a: &[C64], b: &[C64], c: &[C64], d: &[C64]| -> Vec<C64> {
                    (0..a.len()).map(|i| dz / 6.0 * (a[i] + 2.0 * (b[i] + c[i]) + d[i])).collect()
                };
                (comb(&k1.0, &k2.0, &k3.0, &k4.0), comb(&k1.1, &k2.1, &k3.1, &k4.1))
            }
        };

        let mut change: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..nt {
            peak = peak.max(f13[i].norm()).max(f23[i].norm());
            change = change.max(d13[i].norm()).max(d23[i].norm());
            f13[i] += d13[i];
            f23[i] += d23[i];
        }
        if peak > 0.0 && change > tolerances::ORACLE_STEP_WARNING * peak {
            step_warnings.push(StepWarning { z_index: k, relative_change: change / peak });
        }
        slice = solve_slice(&f13, &f23, boundary.rho_initial, grid, detuning, &mut defects)?;
    }

    Ok(Integration {
        grid: *grid,
        omega13,
        omega23,
        density_stride: if keep_density { (st, sz) } else { (0, 0) },
        density,
        defects,
        step_warnings,
    })
}

/// Field growth rates iμρ_31, iμρ_32 along one slice.
fn rate(slice: &[ComplexMat3], mu: f64) -> (Vec<C64>, Vec<C64>) {
    slice.iter().map(|r| (I * mu * r[(2, 0)], I * mu * r[(2, 1)])).unzip()
}

/// Fields at the midpoints between samples from the four-point cubic; one-sided
/// quadratics in the first and last interval.
fn midpoints(f: &[C64]) -> Vec<C64> {
    let n = f.len();
    (0..n - 1)
        .map(|i| {
            if i == 0 {
                (3.0 * f[0] + 6.0 * f[1] - f[2]) / 8.0
            } else if i == n - 2 {
                (3.0 * f[n - 1] + 6.0 * f[n - 2] - f[n - 3]) / 8.0
            } else {
                (9.0 * (f[i] + f[i + 1]) - f[i - 1] - f[i + 2]) / 16.0
            }
        })
        .collect()
}

/// RK4 for dρ/dT = −i[H(T), ρ] over the whole T axis of one slice.
fn solve_slice(
    f13: &[C64],
    f23: &[C64],
    rho0: ComplexMat3,
    grid: &Grid,
    detuning: f64,
    defects: &mut DensityDefects,
) -> Result<Vec<ComplexMat3>> {
    let nt = grid.nt;
    let dt = grid.dt();
    let m13 = midpoints(f13);
    let m23 = midpoints(f23);
    let rhs = |h: &ComplexMat3, r: &ComplexMat3| commutator(h, r) * (-I);

    let mut out = Vec::with_capacity(nt);
    let mut rho = rho0;
    out.push(rho);
    let mut h0 = hamiltonian_from_rabi(f13[0], f23[0], detuning);
    for i in 0..nt - 1 {
        let hm = hamiltonian_from_rabi(m13[i], m23[i], detuning);
        let h1 = hamiltonian_from_rabi(f13[i + 1], f23[i + 1], detuning);
        let k1 = rhs(&h0, &rho);
        let k2 = rhs(&hm, &(rho + k1.scale_real(0.5 * dt)));
        let k3 = rhs(&hm, &(rho + k2.scale_real(0.5 * dt)));
        let k4 = rhs(&h1, &(rho + k3.scale_real(dt)));
        rho += (k1 + (k2 + k3).scale_real(2.0) + k4).scale_real(dt / 6.0);
        out.push(rho);
        h0 = h1;
    }

    let mut slice_defects = DensityDefects::default();
    for r in &out {
        slice_defects.merge(&SolutionState::from_rho_h(*r, ComplexMat3::zeros()).density_defects());
    }
    if !(slice_defects.trace <= tolerances::ORACLE_TRACE_DRIFT) {
        return Err(Error::NonPhysicalState(format!("trace drifted by {:.3e}", slice_defects.trace)));
    }
    defects.merge(&slice_defects);
    Ok(out)
}

/// Worst-case field mismatch between an integration and a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    /// max |Ω_num − Ω_ref| over both fields and the whole grid.
    pub max_abs: f64,
    /// max |Ω_ref| over both fields and the whole grid.
    pub reference_peak: f64,
    pub relative: f64,
}

/// Compares the integrated fields against `reference(T, Z) -> (Ω13, Ω23)`.
pub fn field_error<F>(run: &Integration, reference: F) -> Result<FieldError>
where
    F: Fn(f64, f64) -> Result<(C64, C64)> + Sync,
{
    let g = run.grid;
    let rows = (0..g.nz)
        .into_par_iter()
        .map(|k| {
            let z = g.z(k);
            let mut err: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for i in 0..g.nt {
                let (a13, a23) = reference(g.t(i), z)?;
                let (n13, n23) = run.field(k, i);
                err = err.max((n13 - a13).norm()).max((n23 - a23).norm());
                peak = peak.max(a13.norm()).max(a23.norm());
            }
            Ok((err, peak))
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_abs, reference_peak) = rows.iter().fold((0.0f64, 0.0f64), |(e, p), &(a, b)| (e.max(a), p.max(b)));
    let relative = if reference_peak > 0.0 { max_abs / reference_peak } else { max_abs };
    Ok(FieldError { max_abs, reference_peak, relative })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub linf: f64,
    /// Root mean square over interior points.
    pub l2: f64,
}

/// Discretized residuals of the Bloch equation, the field equation and the
/// zero-curvature condition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub bloch: Norms,
    pub maxwell: Norms,
    pub lax: Norms,
}

impl ResidualNorms {
    pub fn max_linf(&self) -> f64 {
        self.bloch.linf.max(self.maxwell.linf).max(self.lax.linf)
    }
}

/// Residuals of `state(T, Z)` on the interior of `grid`, using central differences:
///
/// * Bloch: ∂_T ρ + i[H, ρ]
/// * Maxwell: ∂_Z H + (μ/2)[W, ρ]
/// * Lax: ∂_Z U − ∂_T V + [U, V] with U = −iH − λW, V = (iμ/2λ)ρ
pub fn residual<F>(state: F, grid: &Grid, sys: &SystemParams, probe_lambda: C64) -> Result<ResidualNorms>
where
    F: Fn(f64, f64) -> Result<SolutionState> + Sync,
{
    if probe_lambda.norm() == 0.0 {
        return Err(Error::InvalidSystem("probe spectral parameter must be nonzero".into()));
    }
    let (nt, nz) = (grid.nt, grid.nz);
    let (dt, dz) = (grid.dt(), grid.dz());
    let w = w_matrix();
    let v_coef = I * sys.mu / (2.0 * probe_lambda);

    // Rolling window of three Z rows; each row is evaluated in parallel over T.
    let row = |k: usize| -> Result<Vec<SolutionState>> {
        let z = grid.z(k);
        (0..nt).into_par_iter().map(|i| state(grid.t(i), z)).collect()
    };
    let mut window = [row(0)?, row(1)?, Vec::new()];
    let mut per_row: Vec<[(f64, f64); 3]> = Vec::with_capacity(nz - 2);
    for k in 1..nz - 1 {
        window[2] = row(k + 1)?;
        let [below, here, above] = &window;
        let acc = (1..nt - 1)
            .into_par_iter()
            .map(|i| {
                let s = &here[i];
                let drho_dt = (here[i + 1].rho - here[i - 1].rho).scale_real(0.5 / dt);
                let dh_dz = (above[i].h - below[i].h).scale_real(0.5 / dz);
                let bloch = drho_dt + commutator(&s.h, &s.rho) * I;
                let maxwell = dh_dz + commutator(&w, &s.rho).scale_real(0.5 * sys.mu);
                let u = s.h * (-I) - w * probe_lambda;
                let v = s.rho * v_coef;
                let lax = dh_dz * (-I) - drho_dt * v_coef + commutator(&u, &v);
                [bloch, maxwell, lax].map(|r| (r.norm_inf(), r.norm_fro().powi(2)))
            })
            .reduce(
                || [(0.0, 0.0); 3],
                |a, b| [0, 1, 2].map(|j| (a[j].0.max(b[j].0), a[j].1 + b[j].1)),
            );
        per_row.push(acc);
        window.rotate_left(1);
    }

    let count = ((nt - 2) * (nz - 2)) as f64;
    let fold = |j: usize| {
        let linf = per_row.iter().map(|r| r[j].0).fold(0.0, f64::max);
        let sum: f64 = per_row.iter().map(|r| r[j].1).sum();
        Norms { linf, l2: (sum / count).sqrt() }
    };
    Ok(ResidualNorms { bloch: fold(0), maxwell: fold(1), lax: fold(2) })
}
