//! Leapfrog finite-difference time-domain solver on a voxel grid with
//! frequency-independent locally reacting boundaries.
//!
//! Boundary cells use a finite-volume form: an air cell with `K` solid face
//! neighbours and admittance `beta` updates as
//!
//! ```text
//! (1 + a) p+ = (2 - l2 * (6 - K)) p - (1 - a) p- + l2 * sum(neighbours)
//! a = lambda * beta * K / 2,   l2 = lambda^2
//! ```
//!
//! Solid cells hold zero pressure, so the neighbour sum never needs to know
//! which neighbours are air. With `beta = 0` the scheme conserves a discrete
//! energy exactly; with `beta > 0` that energy only decreases.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::scene::{CellState, VoxelGrid};
use crate::signal::{blackman, resample, sinc, ImpulseResponse, IrOrigin};

/// How often (in steps) the whole field is scanned for non-finite values.
const FULL_SCAN_INTERVAL: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum FdtdError {
    #[error("unstable: lambda*sqrt(3) = {0:.6} > 1")]
    Unstable(f64),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("grid spacing {grid} m does not match derived spacing {derived} m")]
    SpacingMismatch { grid: f64, derived: f64 },
    #[error("{what} at {pos:?} is not in an air cell")]
    NotInAir { what: &'static str, pos: [f64; 3] },
    #[error("non-finite pressure at step {0}")]
    NonFinite(usize),
    #[error("cutoff {cutoff} Hz must lie in (0, {nyquist}) Hz")]
    BadCutoff { cutoff: f64, nyquist: f64 },
}

pub type Result<T> = std::result::Result<T, FdtdError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdtdConfig {
    pub f_max: f64,
    pub points_per_wavelength: f64,
    pub duration: f64,
    pub c: f64,
    pub courant_fraction: f64,
    /// Resample recordings to this rate; `None` keeps the internal rate.
    pub output_sample_rate: Option<f64>,
}

impl Default for FdtdConfig {
    fn default() -> Self {
        Self {
            f_max: 1400.0,
            points_per_wavelength: 10.5,
            duration: 1.5,
            c: 343.0,
            courant_fraction: 0.99,
            output_sample_rate: None,
        }
    }
}

impl FdtdConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FdtdError::InvalidConfig(m.into()));
        if !(self.f_max > 0.0) {
            return bad("f_max must be positive");
        }
        if !(self.points_per_wavelength >= 4.0) {
            return bad("points_per_wavelength must be >= 4");
        }
        if !(self.duration > 0.0) || !(self.c > 0.0) {
            return bad("duration and c must be positive");
        }
        if !(self.courant_fraction > 0.0) {
            return bad("courant_fraction must be positive");
        }
        if self.output_sample_rate.is_some_and(|f| !(f > 0.0)) {
            return bad("output_sample_rate must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub dx: f64,
    pub dt: f64,
    pub sample_rate: f64,
    /// Courant number `c * dt / dx`.
    pub lambda: f64,
}

pub fn derive_grid_params(cfg: &FdtdConfig) -> GridParams {
    let dx = cfg.c / (cfg.f_max * cfg.points_per_wavelength);
    let dt = cfg.courant_fraction * dx / (cfg.c * 3f64.sqrt());
    GridParams {
        dx,
        dt,
        sample_rate: 1.0 / dt,
        lambda: cfg.c * dt / dx,
    }
}

/// Linear-phase low-pass used as the calibration excitation: a
/// Blackman-windowed sinc with `round_odd(4 fs / cutoff)` taps and unit DC
/// gain. The returned taps are the filter's response to a unit impulse.
pub fn band_limited_impulse(cutoff: f64, fs: f64) -> Result<Vec<f64>> {
    let nyquist = fs / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(FdtdError::BadCutoff { cutoff, nyquist });
    }
    let mut n = (4.0 * fs / cutoff).round() as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let m = (n / 2) as f64;
    let fc = cutoff / fs;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let d = i as f64 - m;
            let w = if m > 0.0 { blackman(d / m) } else { 1.0 };
            2.0 * fc * sinc(2.0 * fc * d) * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    Ok(h)
}

/// Group delay (samples) of [`band_limited_impulse`].
pub fn band_limited_delay(taps: &[f64]) -> f64 {
    (taps.len().saturating_sub(1)) as f64 / 2.0
}

/// Per-cell update coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coeffs {
    c1: f64,
    c2: f64,
    c3: f64,
    src: f64,
}

/// Time-stepping state for one simulation.
#[derive(Debug, Clone)]
pub struct Solver {
    dims: [usize; 3],
    params: GridParams,
    class: Vec<u16>,
    table: Vec<Coeffs>,
    p: Vec<f64>,
    p_prev: Vec<f64>,
    steps: usize,
}

impl Solver {
    pub fn new(grid: &VoxelGrid, cfg: &FdtdConfig) -> Result<Self> {
        cfg.validate()?;
        let params = derive_grid_params(cfg);
        if params.lambda * 3f64.sqrt() > 1.0 + 1e-12 {
            return Err(FdtdError::Unstable(params.lambda * 3f64.sqrt()));
        }
        if (grid.dx - params.dx).abs() > 1e-9 * params.dx {
            return Err(FdtdError::SpacingMismatch {
                grid: grid.dx,
                derived: params.dx,
            });
        }
        let [nx, ny, _] = grid.dims;
        let n = grid.len();
        let l2 = params.lambda * params.lambda;
        let mut table = vec![Coeffs {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            src: 0.0,
        }];
        let mut lookup: HashMap<(u8, u64), u16> = HashMap::new();
        let mut class = vec![0u16; n];
        for idx in 0..n {
            if grid.cell_state[idx] != CellState::Air {
                continue;
            }
            let [i, j, k] = grid.coords(idx);
            if grid.is_shell(i, j, k) {
                // outermost layer is kept at zero
                continue;
            }
            let solid = [idx - 1, idx + 1, idx - nx, idx + nx, idx - nx * ny, idx + nx * ny]
                .iter()
                .filter(|&&q| grid.cell_state[q] == CellState::Solid)
                .count() as u8;
            let beta = if solid > 0 { grid.admittance[idx] } else { 0.0 };
            let key = (solid, beta.to_bits());
            let id = *lookup.entry(key).or_insert_with(|| {
                let a = params.lambda * beta * solid as f64 / 2.0;
                table.push(Coeffs {
                    c1: (2.0 - l2 * (6 - solid) as f64) / (1.0 + a),
                    c2: (1.0 - a) / (1.0 + a),
                    c3: l2 / (1.0 + a),
                    src: 1.0 / (1.0 + a),
                });
                (table.len() - 1) as u16
            });
            class[idx] = id;
        }
        Ok(Self {
            dims: grid.dims,
            params,
            class,
            table,
            p: vec![0.0; n],
            p_prev: vec![0.0; n],
            steps: 0,
        })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn pressure(&self) -> &[f64] {
        &self.p
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_air(&self, idx: usize) -> bool {
        self.class[idx] != 0
    }

    /// Advances one step, adding `source_value` at `source` (a soft source).
    pub fn step(&mut self, source: Option<(usize, f64)>) {
        let [nx, ny, nz] = self.dims;
        let slab = nx * ny;
        let p = &self.p;
        let class = &self.class;
        let table = &self.table;
        self.p_prev
            .par_chunks_mut(slab)
            .enumerate()
            .filter(|(k, _)| *k > 0 && *k + 1 < nz)
            .for_each(|(k, out)| {
                let base = k * slab;
                let m = nx - 2;
                for j in 1..ny - 1 {
                    let a = base + j * nx + 1;
                    let centre = &p[a..a + m];
                    let west = &p[a - 1..a - 1 + m];
                    let east = &p[a + 1..a + 1 + m];
                    let south = &p[a - nx..a - nx + m];
                    let north = &p[a + nx..a + nx + m];
                    let below = &p[a - slab..a - slab + m];
                    let above = &p[a + slab..a + slab + m];
                    let cls = &class[a..a + m];
                    let o = &mut out[j * nx + 1..j * nx + 1 + m];
                    for i in 0..m {
                        let c = table[cls[i] as usize];
                        let sum = west[i] + east[i] + south[i] + north[i] + below[i] + above[i];
                        o[i] = c.c1 * centre[i] - c.c2 * o[i] + c.c3 * sum;
                    }
                }
            });
        std::mem::swap(&mut self.p, &mut self.p_prev);
        if let Some((idx, v)) = source {
            self.p[idx] += v * self.table[self.class[idx] as usize].src;
        }
        self.steps += 1;
    }

    /// Discrete energy between the two stored time levels (up to a constant
    /// factor). Conserved exactly by rigid boundaries.
    pub fn energy(&self) -> f64 {
        let [nx, ny, _] = self.dims;
        let l2 = self.params.lambda * self.params.lambda;
        let strides = [1, nx, nx * ny];
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for idx in 0..self.p.len() {
            if self.class[idx] == 0 {
                continue;
            }
            let dp = self.p[idx] - self.p_prev[idx];
            kinetic += dp * dp;
            for s in strides {
                let q = idx + s;
                if q < self.p.len() && self.class[q] != 0 {
                    potential += (self.p[idx] - self.p[q]) * (self.p_prev[idx] - self.p_prev[q]);
                }
            }
        }
        0.5 * kinetic + 0.5 * l2 * potential
    }

    fn all_finite(&self) -> bool {
        self.p.iter().all(|v| v.is_finite())
    }
}

fn air_cell(grid: &VoxelGrid, solver: &Solver, p: Vec3, what: &'static str) -> Result<usize> {
    grid.cell_of(p)
        .map(|[i, j, k]| grid.index(i, j, k))
        .filter(|&idx| solver.is_air(idx))
        .ok_or(FdtdError::NotInAir {
            what,
            pos: p.to_array(),
        })
}

/// Raw recordings at the internal rate: `rec[r][0]` is the initial state,
/// `rec[r][n + 1]` the pressure after step `n`, in which `signal[n]` was
/// injected.
pub fn run_raw(
    grid: &VoxelGrid,
    source: Vec3,
    receivers: &[Vec3],
    signal: &[f64],
    cfg: &FdtdConfig,
) -> Result<(Vec<Vec<f64>>, GridParams)> {
    let mut solver = Solver::new(grid, cfg)?;
    let params = solver.params();
    let src = air_cell(grid, &solver, source, "source")?;
    let rec = receivers
        .iter()
        .map(|&r| air_cell(grid, &solver, r, "receiver"))
        .collect::<Result<Vec<_>>>()?;
    let steps = (cfg.duration * params.sample_rate).ceil() as usize;
    let mut out: Vec<Vec<f64>> = rec
        .iter()
        .map(|_| {
            let mut v = Vec::with_capacity(steps + 1);
            v.push(0.0);
            v
        })
        .collect();
    for n in 0..steps {
        let s = signal.get(n).copied().unwrap_or(0.0);
        solver.step((s != 0.0).then_some((src, s)));
        for (o, &idx) in out.iter_mut().zip(&rec) {
            let v = solver.p[idx];
            if !v.is_finite() {
                return Err(FdtdError::NonFinite(n));
            }
            o.push(v);
        }
        if (n + 1) % FULL_SCAN_INTERVAL == 0 && !solver.all_finite() {
            return Err(FdtdError::NonFinite(n));
        }
    }
    Ok((out, params))
}

/// Runs the solver and returns one recording per receiver, resampled to
/// `cfg.output_sample_rate` when set. Sample 0 is the source onset.
pub fn run(
    grid: &VoxelGrid,
    source: Vec3,
    receivers: &[Vec3],
    signal: &[f64],
    cfg: &FdtdConfig,
) -> Result<Vec<ImpulseResponse>> {
    let (raw, params) = run_raw(grid, source, receivers, signal, cfg)?;
    Ok(raw
        .into_iter()
        .map(|r| match cfg.output_sample_rate {
            Some(fs) => ImpulseResponse::new(resample(&r, params.sample_rate, fs), fs, IrOrigin::Fdtd),
            None => ImpulseResponse::new(r, params.sample_rate, IrOrigin::Fdtd),
        })
        .collect())
}
