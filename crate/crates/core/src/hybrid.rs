//! IIR filter design and the crossover that fuses the wave and geometric
//! responses.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{ImpulseResponse, IrOrigin};

#[derive(Debug, Error, PartialEq)]
pub enum HybridError {
    #[error("cutoff {cutoff} Hz outside (0, {nyquist}) Hz")]
    CutoffOutOfRange { cutoff: f64, nyquist: f64 },
    #[error("filter order must be at least 1")]
    ZeroOrder,
    #[error("invalid crossover: {0}")]
    InvalidSpec(String),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),
    #[error("calibration gain must be positive, got {0}")]
    InvalidEta(f64),
}

pub type Result<T> = std::result::Result<T, HybridError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Low,
    High,
}

/// Normalized second-order section (`a0 = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Transfer function at `freq` Hz.
    pub fn response(&self, freq: f64, fs: f64) -> Complex<f64> {
        let w = 2.0 * PI * freq / fs;
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (1.0 + z1 * self.a[0] + z2 * self.a[1])
    }
}

/// Cascade of second-order sections.
pub type Sos = Vec<Biquad>;

pub fn sos_response(sos: &[Biquad], freq: f64, fs: f64) -> Complex<f64> {
    sos.iter()
        .fold(Complex::new(1.0, 0.0), |h, s| h * s.response(freq, fs))
}

pub fn sos_gain_db(sos: &[Biquad], freq: f64, fs: f64) -> f64 {
    20.0 * sos_response(sos, freq, fs).norm().log10()
}

/// Runs the cascade over `x` (direct form II transposed, zero initial state).
pub fn sos_filter(sos: &[Biquad], x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    sos_filter_in_place(sos, &mut y);
    y
}

pub fn sos_filter_in_place(sos: &[Biquad], y: &mut [f64]) {
    for s in sos {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let x = *v;
            let out = s.b[0] * x + z1;
            z1 = s.b[1] * x - s.a[0] * out + z2;
            z2 = s.b[2] * x - s.a[1] * out;
            *v = out;
        }
    }
}

/// Digital Butterworth filter (bilinear transform, prewarped at `cutoff`).
pub fn butterworth(kind: FilterKind, order: usize, cutoff: f64, fs: f64) -> Result<Sos> {
    if order == 0 {
        return Err(HybridError::ZeroOrder);
    }
    let nyquist = fs / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(HybridError::CutoffOutOfRange { cutoff, nyquist });
    }
    let k = (PI * cutoff / fs).tan();
    let mut sos = Vec::with_capacity(order.div_ceil(2));
    for i in 0..order / 2 {
        let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k * k);
        let a = [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm];
        let b = match kind {
            FilterKind::Low => {
                let b0 = k * k * norm;
                [b0, 2.0 * b0, b0]
            }
            FilterKind::High => [norm, -2.0 * norm, norm],
        };
        sos.push(Biquad { b, a });
    }
    if order % 2 == 1 {
        let a1 = (k - 1.0) / (k + 1.0);
        let b = match kind {
            FilterKind::Low => [k / (1.0 + k), k / (1.0 + k), 0.0],
            FilterKind::High => [1.0 / (1.0 + k), -1.0 / (1.0 + k), 0.0],
        };
        sos.push(Biquad { b, a: [a1, 0.0] });
    }
    Ok(sos)
}

/// Octave band-pass: 2nd-order high-pass at `center/sqrt2` times 2nd-order
/// low-pass at `center*sqrt2`. The low-pass is dropped when its edge is too
/// close to Nyquist.
pub fn octave_bandpass(center: f64, fs: f64) -> Result<Sos> {
    let lo = center / SQRT_2;
    let hi = center * SQRT_2;
    let mut sos = butterworth(FilterKind::High, 2, lo, fs)?;
    if hi < 0.49 * fs {
        sos.extend(butterworth(FilterKind::Low, 2, hi, fs)?);
    }
    Ok(sos)
}

/// Crossover between the wave (low) and geometric (high) branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossoverSpec {
    pub crossover_freq: f64,
    pub lr_order: usize,
    pub dc_cutoff: f64,
}

impl Default for CrossoverSpec {
    fn default() -> Self {
        Self {
            crossover_freq: 1400.0,
            lr_order: 4,
            dc_cutoff: 10.0,
        }
    }
}

impl CrossoverSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.dc_cutoff > 0.0 && self.dc_cutoff < self.crossover_freq && self.crossover_freq < fs / 2.0) {
            return Err(HybridError::InvalidSpec(format!(
                "need 0 < dc_cutoff ({}) < crossover ({}) < fs/2 ({})",
                self.dc_cutoff,
                self.crossover_freq,
                fs / 2.0
            )));
        }
        if self.lr_order < 2 || self.lr_order % 2 != 0 {
            return Err(HybridError::InvalidSpec(format!(
                "lr_order must be even and >= 2, got {}",
                self.lr_order
            )));
        }
        Ok(())
    }

    /// Sections of one crossover branch (a Butterworth filter applied twice).
    /// For odd Butterworth orders the high branch is polarity-inverted so the
    /// two branches still sum to an all-pass.
    pub fn branch(&self, branch: FilterKind, fs: f64) -> Result<(Sos, f64)> {
        self.validate(fs)?;
        let n = self.lr_order / 2;
        let half = butterworth(branch, n, self.crossover_freq, fs)?;
        let mut sos = half.clone();
        sos.extend(half);
        let sign = if branch == FilterKind::High && n % 2 == 1 { -1.0 } else { 1.0 };
        Ok((sos, sign))
    }
}

pub fn lr_crossover(signal: &[f64], spec: &CrossoverSpec, fs: f64, branch: FilterKind) -> Result<Vec<f64>> {
    let (sos, sign) = spec.branch(branch, fs)?;
    let mut y = sos_filter(&sos, signal);
    if sign < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(y)
}

/// Order of the DC-removal high-pass.
pub const DC_REMOVAL_ORDER: usize = 4;

pub fn dc_remove_sos(cutoff: f64, fs: f64) -> Result<Sos> {
    butterworth(FilterKind::High, DC_REMOVAL_ORDER, cutoff, fs)
}

/// Removes DC drift with a low-cutoff Butterworth high-pass.
pub fn dc_remove(signal: &[f64], cutoff: f64, fs: f64) -> Result<Vec<f64>> {
    Ok(sos_filter(&dc_remove_sos(cutoff, fs)?, signal))
}

/// Calibrates and low-passes the wave IR, high-passes the geometric IR and
/// sums them. Both inputs must share a sample rate and have t = 0 at the
/// source onset.
pub fn combine(
    ir_fdtd: &ImpulseResponse,
    ir_ga: &ImpulseResponse,
    eta: f64,
    spec: &CrossoverSpec,
) -> Result<ImpulseResponse> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(HybridError::InvalidEta(eta));
    }
    let fs = ir_fdtd.sample_rate;
    if (fs - ir_ga.sample_rate).abs() > 1e-9 * fs {
        return Err(HybridError::SampleRateMismatch(fs, ir_ga.sample_rate));
    }
    spec.validate(fs)?;
    let n = ir_fdtd.len().max(ir_ga.len());
    let mut low: Vec<f64> = ir_fdtd.samples.iter().map(|x| x * eta).collect();
    low.resize(n, 0.0);
    let low = dc_remove(&low, spec.dc_cutoff, fs)?;
    let low = lr_crossover(&low, spec, fs, FilterKind::Low)?;
    let mut high = ir_ga.samples.clone();
    high.resize(n, 0.0);
    let high = lr_crossover(&high, spec, fs, FilterKind::High)?;
    let samples = low.iter().zip(&high).map(|(a, b)| a + b).collect();
    Ok(ImpulseResponse {
        samples,
        sample_rate: fs,
        origin: IrOrigin::Hybrid,
        onset_index: ir_fdtd.onset_index.min(ir_ga.onset_index),
    })
}
