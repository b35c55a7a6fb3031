//! Sampled signals and the few generic DSP helpers shared by the engines.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// Which engine (or measurement) produced an impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IrOrigin {
    Ga,
    Fdtd,
    Hybrid,
    Measured,
}

impl std::fmt::Display for IrOrigin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IrOrigin::Ga => "ga",
            IrOrigin::Fdtd => "fdtd",
            IrOrigin::Hybrid => "hybrid",
            IrOrigin::Measured => "measured",
        })
    }
}

/// Uniformly sampled pressure signal. Sample 0 is the source onset unless
/// `onset_index` says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub origin: IrOrigin,
    pub onset_index: usize,
}

impl ImpulseResponse {
    pub fn new(samples: Vec<f64>, sample_rate: f64, origin: IrOrigin) -> Self {
        Self {
            samples,
            sample_rate,
            origin,
            onset_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * k).collect(),
            ..self.clone()
        }
    }

    /// Checks the type invariants; returns a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(format!("invalid sample rate {}", self.sample_rate));
        }
        if let Some(i) = self.samples.iter().position(|x| !x.is_finite()) {
            return Err(format!("non-finite sample at index {i}"));
        }
        if !self.samples.is_empty() && self.onset_index >= self.samples.len() {
            return Err(format!("onset index {} past end", self.onset_index));
        }
        Ok(())
    }
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Blackman window on `u` in `[-1, 1]` (zero outside).
pub fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let t = PI * (u + 1.0);
    0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos()
}

pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

pub(crate) fn plan(n: usize) -> FftPair {
    let mut planner = FftPlanner::new();
    FftPair {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

/// Complex spectrum of `x` zero-padded to `n` points.
pub fn spectrum(x: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().take(n).map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Full linear convolution (`len(a) + len(b) - 1` samples).
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return convolve_direct(a, b);
    }
    let n = out_len.next_power_of_two();
    let p = plan(n);
    let load = |x: &[f64]| {
        let mut v: Vec<Complex<f64>> = x.iter().map(|&s| Complex::new(s, 0.0)).collect();
        v.resize(n, Complex::new(0.0, 0.0));
        p.forward.process(&mut v);
        v
    };
    let fa = load(a);
    let mut fb = load(b);
    for (y, x) in fb.iter_mut().zip(&fa) {
        *y *= x;
    }
    p.inverse.process(&mut fb);
    let scale = 1.0 / n as f64;
    fb[..out_len].iter().map(|c| c.re * scale).collect()
}

pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Band-limited interpolation kernel: half-width in samples of the slower
/// rate.
const RESAMPLE_ZEROS: f64 = 24.0;
const RESAMPLE_BAND: f64 = 0.45;

/// Resamples `x` from `fs_in` to `fs_out` with a Blackman-windowed sinc
/// interpolator. Output sample `m` sits at time `m / fs_out`, so sample 0
/// stays at t = 0 (no latency). Amplitudes of in-band content are preserved.
pub fn resample(x: &[f64], fs_in: f64, fs_out: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    if (fs_in - fs_out).abs() < 1e-9 * fs_in {
        return x.to_vec();
    }
    let out_len = ((x.len() as f64) * fs_out / fs_in).ceil() as usize;
    let cutoff = RESAMPLE_BAND * fs_in.min(fs_out);
    let radius_t = RESAMPLE_ZEROS / fs_in.min(fs_out);
    let gain = 2.0 * cutoff / fs_in;
    let mut out = vec![0.0; out_len];
    for (m, y) in out.iter_mut().enumerate() {
        let t = m as f64 / fs_out;
        let lo = ((t - radius_t) * fs_in).ceil().max(0.0) as usize;
        let hi = (((t + radius_t) * fs_in).floor() as usize).min(x.len() - 1);
        let mut acc = 0.0;
        for (n, &xn) in x.iter().enumerate().take(hi + 1).skip(lo) {
            let dt = t - n as f64 / fs_in;
            acc += xn * sinc(2.0 * cutoff * dt) * blackman(dt / radius_t);
        }
        *y = acc * gain;
    }
    out
}

/// Adds a windowed-sinc interpolated impulse at fractional sample
/// `position`, scaled so that the added samples carry `pulse_energy`.
/// At integer positions this is a single sample.
pub fn add_fractional_pulse(buf: &mut [f64], position: f64, pulse_energy: f64) {
    const HALF: f64 = 16.0;
    const BAND: f64 = 0.5;
    if buf.is_empty() || pulse_energy <= 0.0 {
        return;
    }
    let lo = (position - HALF).ceil().max(0.0) as usize;
    let hi = ((position + HALF).floor().max(0.0) as usize).min(buf.len() - 1);
    if lo > hi {
        return;
    }
    let kernel: Vec<f64> = (lo..=hi)
        .map(|n| {
            let d = n as f64 - position;
            2.0 * BAND * sinc(2.0 * BAND * d) * blackman(d / HALF)
        })
        .collect();
    let e = energy(&kernel);
    if e <= 0.0 {
        return;
    }
    let k = (pulse_energy / e).sqrt();
    for (b, h) in buf[lo..=hi].iter_mut().zip(kernel) {
        *b += k * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..300).map(|i| ((i * 7 % 13) as f64 - 6.0) / 3.0).collect();
        let b: Vec<f64> = (0..77).map(|i| ((i * 5 % 11) as f64 - 5.0) / 7.0).collect();
        let f = convolve(&a, &b);
        let d = convolve_direct(&a, &b);
        assert_eq!(f.len(), d.len());
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn resample_preserves_sine_and_alignment() {
        let fs_in = 25_000.0;
        let fs_out = 48_000.0;
        let f = 300.0;
        let x: Vec<f64> = (0..5000)
            .map(|n| (2.0 * PI * f * n as f64 / fs_in).sin())
            .collect();
        let y = resample(&x, fs_in, fs_out);
        assert_eq!(y.len(), 9600);
        for m in 500..9000 {
            let t = m as f64 / fs_out;
            assert!((y[m] - (2.0 * PI * f * t).sin()).abs() < 2e-3, "m={m}");
        }
        // and back down
        let z = resample(&y, fs_out, fs_in);
        for n in 300..4500 {
            assert!((z[n] - x[n]).abs() < 3e-3);
        }
    }

    #[test]
    fn pulse_energy_and_center() {
        let mut buf = vec![0.0; 200];
        add_fractional_pulse(&mut buf, 100.3, 2.5);
        assert!((energy(&buf) - 2.5).abs() < 1e-12);
        let peak = buf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert_eq!(peak, 100);
    }
}
