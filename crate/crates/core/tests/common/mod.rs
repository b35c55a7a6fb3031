#![allow(dead_code)]

use std::path::PathBuf;

use roomwave::fdtd::{band_limited_impulse, derive_grid_params, run_raw, FdtdConfig};
use roomwave::geom::Vec3;
use roomwave::scene::voxelize;
use roomwave::signal::spectrum;
use roomwave::TriangleMesh;

pub fn shoebox(l: f64, w: f64, h: f64) -> TriangleMesh {
    let mut b = TriangleMesh::builder();
    b.add_box(Vec3::ZERO, Vec3::new(l, w, h), "wall", "room");
    b.build().unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Distance from an interior point to the surface of an axis-aligned box.
pub fn interior_box_distance(p: Vec3, min: Vec3, max: Vec3) -> f64 {
    (0..3)
        .map(|a| (p[a] - min[a]).min(max[a] - p[a]))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from an exterior point to an axis-aligned box.
pub fn exterior_box_distance(p: Vec3, min: Vec3, max: Vec3) -> f64 {
    let d: Vec<f64> = (0..3)
        .map(|a| (min[a] - p[a]).max(0.0).max(p[a] - max[a]))
        .collect();
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Spectral peak frequencies in `[lo, hi]` of a Hann-windowed recording.
pub fn spectral_peaks(x: &[f64], fs: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = x.len();
    // the soft source leaves a constant offset in a closed box
    let mean = x.iter().sum::<f64>() / n as f64;
    let w: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v - mean) * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let nfft = (4 * n).next_power_of_two();
    let mag: Vec<f64> = spectrum(&w, nfft)[..nfft / 2].iter().map(|c| c.norm()).collect();
    let df = fs / nfft as f64;
    let in_range = |k: &usize| (lo..=hi).contains(&(*k as f64 * df));
    let max = (0..mag.len()).filter(in_range).map(|k| mag[k]).fold(0.0, f64::max);
    let mut out = Vec::new();
    for k in 1..mag.len() - 1 {
        if !in_range(&k) {
            continue;
        }
        if mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > max * 0.01 {
            let (a, b, c) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
            out.push((k as f64 + 0.5 * (a - c) / (a - 2.0 * b + c)) * df);
        }
    }
    out
}

/// Rigid-box recording near opposite corners, at the solver's internal rate.
pub fn box_response(ext: Vec3, f_max: f64, duration: f64) -> (Vec<f64>, f64) {
    let c = FdtdConfig {
        f_max,
        duration,
        ..Default::default()
    };
    let p = derive_grid_params(&c);
    let g = voxelize(&shoebox(ext.x, ext.y, ext.z), p.dx).unwrap();
    let pulse = band_limited_impulse(200.0f64.min(0.5 * f_max), p.sample_rate).unwrap();
    let s = ext * 0.1 + Vec3::splat(0.03);
    let r = ext * 0.9 - Vec3::splat(0.03);
    (run_raw(&g, s, &[r], &pulse, &c).unwrap().0.remove(0), p.sample_rate)
}

/// Relative distance from `f` to the closest peak.
pub fn nearest(peaks: &[f64], f: f64) -> f64 {
    peaks.iter().map(|p| rel_err(*p, f)).fold(f64::INFINITY, f64::min)
}
