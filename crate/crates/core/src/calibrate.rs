//! Free-field energy calibration of the wave and geometric engines.
//!
//! Both engines radiate the same band-limited pulse into free field and are
//! recorded on an arc of receivers at a fixed distance. Each engine's gain is
//! the mean ratio between the pulse energy and the recorded (truncated)
//! energy; the wave branch is later scaled by the quotient of the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fdtd::{self, band_limited_delay, band_limited_impulse, derive_grid_params, FdtdConfig, FdtdError};
use crate::ga::{self, GaConfig, GaError};
use crate::geom::Vec3;
use crate::scene::{SceneError, VoxelGrid};
use crate::signal::{convolve, energy};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid calibration setup: {0}")]
    InvalidSetup(String),
    #[error("receiver {0} truncation window is empty")]
    EmptyWindow(usize),
    #[error("receiver {0} recorded no energy")]
    NoEnergy(usize),
    #[error("calibration gains must be positive (eta_w = {0}, eta_g = {1})")]
    NonPositive(f64, f64),
    #[error("no direct path in the free-field setup")]
    NoDirectPath,
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub type Result<T> = std::result::Result<T, CalibrationError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSetup {
    pub distance: f64,
    pub receiver_count: usize,
    /// Angular span of the receiver arc in degrees.
    pub arc: f64,
    pub cutoff: f64,
    /// Window length after onset, in units of the direct travel time.
    pub truncation_factor: f64,
    /// Half-width of the free-field domain; derived from the window when unset.
    pub domain_half_width: Option<f64>,
    /// Admittance of the free-field domain boundary.
    pub boundary_admittance: f64,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        Self {
            distance: 1.0,
            receiver_count: 90,
            arc: 90.0,
            cutoff: 255.0,
            truncation_factor: 2.0,
            domain_half_width: None,
            boundary_admittance: 1.0,
        }
    }
}

impl CalibrationSetup {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CalibrationError::InvalidSetup(m));
        if !(self.distance > 0.0) {
            return bad(format!("distance {} must be positive", self.distance));
        }
        if self.receiver_count == 0 {
            return bad("receiver_count must be >= 1".into());
        }
        if !(self.arc > 0.0 && self.arc <= 180.0) {
            return bad(format!("arc {} not in (0, 180]", self.arc));
        }
        if !(self.cutoff > 0.0) || !(self.truncation_factor > 0.0) {
            return bad("cutoff and truncation_factor must be positive".into());
        }
        if self.boundary_admittance < 0.0 {
            return bad("boundary_admittance must be >= 0".into());
        }
        Ok(())
    }

    /// Receiver directions, evenly spaced over the arc in the xy-plane.
    pub fn directions(&self) -> Vec<Vec3> {
        let n = self.receiver_count;
        (0..n)
            .map(|i| {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let th = (self.arc * frac).to_radians();
                Vec3::new(th.cos(), th.sin(), 0.0)
            })
            .collect()
    }
}

/// Per-engine calibration outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineCalibration {
    pub eta: f64,
    pub e_s: f64,
    pub e_r: Vec<f64>,
    /// Signed per-receiver error after applying `eta`.
    pub error_db: Vec<f64>,
    pub distances: Vec<f64>,
}

impl EngineCalibration {
    pub fn mean_abs_error_db(&self) -> f64 {
        self.error_db.iter().map(|e| e.abs()).sum::<f64>() / self.error_db.len() as f64
    }

    pub fn max_abs_error_db(&self) -> f64 {
        self.error_db.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub eta_w: f64,
    pub eta_g: f64,
    pub eta_combined: f64,
    pub per_receiver_error_db: Vec<f64>,
    pub mean_error_db: f64,
    pub max_error_db: f64,
    pub e_s: f64,
    pub e_r: Vec<f64>,
    pub receiver_distances: Vec<f64>,
}

impl CalibrationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

pub fn combined_eta(eta_w: f64, eta_g: f64) -> Result<f64> {
    if !(eta_w > 0.0 && eta_g > 0.0) {
        return Err(CalibrationError::NonPositive(eta_w, eta_g));
    }
    Ok(eta_w / eta_g)
}

/// Gain from recordings of `signal`: `E_r` sums `rec[..=end]`, the gain is
/// the mean of `sqrt(E_s / E_r)` and every receiver's residual is
/// `20 log10(eta sqrt(E_r) / sqrt(E_s))`.
pub fn calibrate_from_recordings(
    recordings: &[Vec<f64>],
    signal: &[f64],
    window_end: &[usize],
    distances: &[f64],
) -> Result<EngineCalibration> {
    let e_s = energy(signal);
    let mut e_r = Vec::with_capacity(recordings.len());
    for (i, (rec, &end)) in recordings.iter().zip(window_end).enumerate() {
        if rec.is_empty() {
            return Err(CalibrationError::EmptyWindow(i));
        }
        let e = energy(&rec[..=end.min(rec.len() - 1)]);
        if !(e > 0.0) {
            return Err(CalibrationError::NoEnergy(i));
        }
        e_r.push(e);
    }
    if e_r.is_empty() {
        return Err(CalibrationError::InvalidSetup("no recordings".into()));
    }
    let eta = e_r.iter().map(|e| (e_s / e).sqrt()).sum::<f64>() / e_r.len() as f64;
    let error_db = e_r
        .iter()
        .map(|e| 20.0 * (eta * e.sqrt() / e_s.sqrt()).log10())
        .collect();
    Ok(EngineCalibration {
        eta,
        e_s,
        e_r,
        error_db,
        distances: distances.to_vec(),
    })
}

/// Index of the last sample inside the window: pulse centre plus
/// `factor * r / c`.
fn window_end(delay_samples: f64, factor: f64, r: f64, c: f64, fs: f64) -> usize {
    (delay_samples + factor * r / c * fs).round() as usize
}

/// Free-field wave-solver layout: grid, snapped source and receivers.
#[derive(Debug, Clone)]
pub struct FreeFieldLayout {
    pub grid: VoxelGrid,
    pub source: Vec3,
    pub receivers: Vec<Vec3>,
    pub distances: Vec<f64>,
}

pub fn free_field_layout(setup: &CalibrationSetup, cfg: &FdtdConfig) -> Result<FreeFieldLayout> {
    setup.validate()?;
    let params = derive_grid_params(cfg);
    let dx = params.dx;
    let delay = 2.0 / setup.cutoff;
    let r = setup.distance;
    // first boundary reflection must start after the window closes
    let needed = (cfg.c * delay + (setup.truncation_factor + 1.0) * r) / 2.0 + 3.0 * dx;
    let half = setup.domain_half_width.unwrap_or(needed).max(r + 3.0 * dx);
    let n = 2 * (half / dx).ceil() as usize + 3;
    let grid = VoxelGrid::free_field(Vec3::ZERO, dx, [n, n, n], setup.boundary_admittance)?;
    let c = n / 2;
    let source = grid.cell_center(c, c, c);
    let mut receivers = Vec::with_capacity(setup.receiver_count);
    let mut distances = Vec::with_capacity(setup.receiver_count);
    for d in setup.directions() {
        let [i, j, k] = grid
            .cell_of(source + d * r)
            .ok_or_else(|| CalibrationError::InvalidSetup("receiver outside domain".into()))?;
        let p = grid.cell_center(i, j, k);
        distances.push(p.distance(source));
        receivers.push(p);
    }
    Ok(FreeFieldLayout {
        grid,
        source,
        receivers,
        distances,
    })
}

/// Wave-solver gain from a free-field run with the calibration pulse.
pub fn calibrate_fdtd(setup: &CalibrationSetup, cfg: &FdtdConfig) -> Result<EngineCalibration> {
    let layout = free_field_layout(setup, cfg)?;
    let params = derive_grid_params(cfg);
    let fs = params.sample_rate;
    let pulse = band_limited_impulse(setup.cutoff, fs)?;
    let delay = band_limited_delay(&pulse);
    let ends: Vec<usize> = layout
        .distances
        .iter()
        .map(|&r| window_end(delay, setup.truncation_factor, r, cfg.c, fs))
        .collect();
    let last = ends.iter().copied().max().unwrap_or(0);
    let run_cfg = FdtdConfig {
        duration: (last + 2) as f64 / fs,
        output_sample_rate: None,
        ..cfg.clone()
    };
    let (recordings, _) = fdtd::run_raw(&layout.grid, layout.source, &layout.receivers, &pulse, &run_cfg)?;
    calibrate_from_recordings(&recordings, &pulse, &ends, &layout.distances)
}

/// Geometric-engine gain: the free-field GA response (direct term only)
/// to the calibration pulse, truncated like the wave recordings.
pub fn calibrate_ga(setup: &CalibrationSetup, cfg: &GaConfig) -> Result<EngineCalibration> {
    setup.validate()?;
    let fs = cfg.sample_rate;
    let pulse = band_limited_impulse(setup.cutoff, fs).map_err(CalibrationError::Fdtd)?;
    let delay = band_limited_delay(&pulse);
    let r = setup.distance;
    let end = window_end(delay, setup.truncation_factor, r, cfg.speed_of_sound, fs);
    let short = GaConfig {
        duration: (end + 2) as f64 / fs,
        ..cfg.clone()
    };
    let source = Vec3::ZERO;
    let mut recordings = Vec::with_capacity(setup.receiver_count);
    for d in setup.directions() {
        let hist = ga::direct_only_histogram(source, d * r, &short)?;
        if hist.direct.is_none() {
            return Err(CalibrationError::NoDirectPath);
        }
        let ir = ga::synthesize_ir(&hist, &short, cfg.rng_seed);
        recordings.push(convolve(&ir.samples, &pulse));
    }
    let ends = vec![end; recordings.len()];
    calibrate_from_recordings(&recordings, &pulse, &ends, &vec![r; ends.len()])
}

/// Runs both calibrations and forms the combined wave-branch gain.
pub fn calibrate(setup: &CalibrationSetup, fdtd_cfg: &FdtdConfig, ga_cfg: &GaConfig) -> Result<CalibrationResult> {
    let w = calibrate_fdtd(setup, fdtd_cfg)?;
    let g = calibrate_ga(setup, ga_cfg)?;
    let eta_combined = combined_eta(w.eta, g.eta)?;
    Ok(CalibrationResult {
        eta_w: w.eta,
        eta_g: g.eta,
        eta_combined,
        mean_error_db: w.mean_abs_error_db(),
        max_error_db: w.max_abs_error_db(),
        per_receiver_error_db: w.error_db,
        e_s: w.e_s,
        e_r: w.e_r,
        receiver_distances: w.distances,
    })
}
