//! Acoustic metrics, comparison reports, dataset statistics and speech
//! augmentation.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::rng::stream;
use crate::signal::{convolve, energy, spectrum, ImpulseResponse, IrOrigin};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("impulse response is empty")]
    EmptyIr,
    #[error("impulse response is all zeros")]
    ZeroIr,
    #[error("need at least 2 impulse responses, got {0}")]
    TooFewIrs(usize),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("manifest has no usable entries")]
    EmptyManifest,
    #[error("invalid band specification: {0}")]
    InvalidBands(String),
    #[error("wav: {0}")]
    Wav(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Floor used for zero energy in dB curves.
pub const DB_FLOOR: f64 = -400.0;

fn db10(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// Backward-integrated energy in dB, 0 dB at the first sample.
    pub edc_db: Vec<f64>,
    pub sample_rate: f64,
    /// Reverberation time; `None` when the fit failed.
    pub rt60: Option<f64>,
    pub fit_range_db: (f64, f64),
    pub fit_failed: bool,
}

pub const T20_RANGE: (f64, f64) = (-5.0, -25.0);

/// Schroeder energy decay curve and RT60 from a least-squares line over
/// the -5..-25 dB part of the curve, extrapolated to 60 dB.
pub fn schroeder_edc(ir: &ImpulseResponse) -> Result<DecayCurve> {
    schroeder_edc_range(ir, T20_RANGE)
}

pub fn schroeder_edc_range(ir: &ImpulseResponse, range: (f64, f64)) -> Result<DecayCurve> {
    if ir.is_empty() {
        return Err(AnalysisError::EmptyIr);
    }
    let mut acc = vec![0.0; ir.len()];
    let mut sum = 0.0;
    for (a, h) in acc.iter_mut().zip(&ir.samples).rev() {
        sum += h * h;
        *a = sum;
    }
    if !(sum > 0.0) {
        return Err(AnalysisError::ZeroIr);
    }
    let total = acc[0];
    let edc_db: Vec<f64> = acc.iter().map(|&e| db10(e / total)).collect();
    let rt60 = fit_decay(&edc_db, ir.sample_rate, range);
    Ok(DecayCurve {
        edc_db,
        sample_rate: ir.sample_rate,
        rt60,
        fit_range_db: range,
        fit_failed: rt60.is_none(),
    })
}

fn fit_decay(edc_db: &[f64], fs: f64, (hi, lo): (f64, f64)) -> Option<f64> {
    if edc_db.iter().all(|&v| v > lo) {
        return None;
    }
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &y) in edc_db.iter().enumerate() {
        if y > hi {
            continue;
        }
        if y < lo {
            break;
        }
        let x = i as f64 / fs;
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if n < 3.0 {
        return None;
    }
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope < 0.0).then(|| -60.0 / slope)
}

/// One analysis band `[lo, hi)` in Hz with a display centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Exact third-octave centres `1000 * 2^(k/3)` whose nominal value lies in
/// `[f_lo, f_hi]` (so 50 Hz selects 49.6 Hz).
pub fn third_octave_centers(f_lo: f64, f_hi: f64) -> Vec<f64> {
    let k0 = (3.0 * (f_lo / 1000.0).log2() - 0.1).ceil() as i32;
    let k1 = (3.0 * (f_hi / 1000.0).log2() + 0.1).floor() as i32;
    (k0..=k1).map(|k| 1000.0 * 2f64.powf(k as f64 / 3.0)).collect()
}

pub fn third_octave_bands(centers: &[f64]) -> Vec<Band> {
    let r = 2f64.powf(1.0 / 6.0);
    centers
        .iter()
        .map(|&c| Band {
            center: c,
            lo: c / r,
            hi: c * r,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResponse {
    pub bands: Vec<Band>,
    /// Signal energy falling in each band.
    pub energy: Vec<f64>,
    /// Mean spectral power per frequency bin in dB; a unit impulse is 0 dB
    /// in every band.
    pub level_db: Vec<f64>,
}

/// Band energies from the FFT power spectrum; the energies of bands that
/// tile `[0, fs/2]` add up to the signal energy.
pub fn band_response(ir: &ImpulseResponse, bands: &[Band]) -> Result<BandResponse> {
    if ir.is_empty() {
        return Err(AnalysisError::EmptyIr);
    }
    if bands.iter().any(|b| !(b.lo >= 0.0 && b.hi > b.lo)) {
        return Err(AnalysisError::InvalidBands("every band needs 0 <= lo < hi".into()));
    }
    let fs = ir.sample_rate;
    let narrowest = bands.iter().map(|b| b.hi - b.lo).fold(f64::INFINITY, f64::min);
    let min_len = if narrowest.is_finite() { (8.0 * fs / narrowest).ceil() as usize } else { 0 };
    let n = ir.len().max(min_len).next_power_of_two();
    let spec = spectrum(&ir.samples, n);
    let df = fs / n as f64;
    let half = n / 2;
    let mut energy = vec![0.0; bands.len()];
    let mut level_db = vec![DB_FLOOR; bands.len()];
    for (bi, band) in bands.iter().enumerate() {
        let k0 = (band.lo / df).ceil() as usize;
        let k1 = ((band.hi / df).ceil() as usize).min(half + 1);
        let mut e = 0.0;
        let mut count = 0usize;
        for (k, x) in spec.iter().enumerate().take(k1).skip(k0) {
            let w = if k == 0 || k == half { 1.0 } else { 2.0 };
            e += w * x.norm_sqr();
            count += 1;
        }
        energy[bi] = e / n as f64;
        if count > 0 {
            level_db[bi] = db10(e / (2.0 * count as f64));
        }
    }
    Ok(BandResponse {
        bands: bands.to_vec(),
        energy,
        level_db,
    })
}

/// Per-band levels of several IRs with differences against the first and
/// pairwise mean absolute level differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub labels: Vec<String>,
    pub bands: Vec<Band>,
    /// `levels[i][b]`: level of IR `i` in band `b`.
    pub levels: Vec<Vec<f64>>,
    pub range: (f64, f64),
    /// `(i, j, mean |L_i - L_j|)` over bands whose centre lies in `range`.
    pub pairwise: Vec<(usize, usize, f64)>,
}

impl ComparisonReport {
    pub fn mean_abs_diff(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = self.range;
        let mut sum = 0.0;
        let mut n = 0;
        for (k, band) in self.bands.iter().enumerate() {
            if band.center >= lo && band.center <= hi {
                sum += (self.levels[a][k] - self.levels[b][k]).abs();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Level table: one row per band, one column per IR, then the level
    /// difference of every IR against the first.
    pub fn levels_csv(&self) -> String {
        let mut s = String::from("band_hz");
        for l in &self.labels {
            let _ = write!(s, ",{l}_db");
        }
        for l in self.labels.iter().skip(1) {
            let _ = write!(s, ",{l}_minus_{}_db", self.labels[0]);
        }
        s.push('\n');
        for (k, band) in self.bands.iter().enumerate() {
            let _ = write!(s, "{:.2}", band.center);
            for lv in &self.levels {
                let _ = write!(s, ",{:.4}", lv[k]);
            }
            for lv in self.levels.iter().skip(1) {
                let _ = write!(s, ",{:.4}", lv[k] - self.levels[0][k]);
            }
            s.push('\n');
        }
        s
    }

    pub fn pairwise_csv(&self) -> String {
        let mut s = String::from("a,b,mean_abs_diff_db\n");
        for &(i, j, d) in &self.pairwise {
            let _ = writeln!(s, "{},{},{:.4}", self.labels[i], self.labels[j], d);
        }
        s
    }
}

pub fn compare_report(irs: &[(String, ImpulseResponse)], bands: &[Band], range: (f64, f64)) -> Result<ComparisonReport> {
    if irs.len() < 2 {
        return Err(AnalysisError::TooFewIrs(irs.len()));
    }
    let fs = irs[0].1.sample_rate;
    if let Some((_, other)) = irs.iter().find(|(_, ir)| (ir.sample_rate - fs).abs() > 1e-9 * fs) {
        return Err(AnalysisError::SampleRateMismatch(fs, other.sample_rate));
    }
    let levels = irs
        .iter()
        .map(|(_, ir)| band_response(ir, bands).map(|r| r.level_db))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ComparisonReport {
        labels: irs.iter().map(|(l, _)| l.clone()).collect(),
        bands: bands.to_vec(),
        levels,
        range,
        pairwise: Vec::new(),
    };
    for i in 0..irs.len() {
        for j in i + 1..irs.len() {
            let d = report.mean_abs_diff(i, j);
            report.pairwise.push((i, j, d));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentOptions {
    /// Noise start index; drawn from `seed` when unset.
    pub offset: Option<usize>,
    /// Reverberant-signal to noise ratio.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            offset: None,
            snr_db: 20.0,
            seed: 0,
        }
    }
}

/// Reverberant noisy speech: `clean * ir` plus the noise segment starting
/// at the offset, scaled to the requested SNR. The noise wraps around when
/// it is shorter than the reverberant signal.
pub fn augment_speech(clean: &[f64], ir: &[f64], noise: &[f64], opts: &AugmentOptions) -> Result<Vec<f64>> {
    if clean.is_empty() {
        return Err(AnalysisError::EmptyInput("clean signal"));
    }
    if ir.is_empty() {
        return Err(AnalysisError::EmptyInput("impulse response"));
    }
    if noise.is_empty() {
        return Err(AnalysisError::EmptyInput("noise"));
    }
    let mut y = convolve(clean, ir);
    let p_noise = energy(noise) / noise.len() as f64;
    if p_noise == 0.0 {
        return Ok(y);
    }
    let offset = match opts.offset {
        Some(l) => l % noise.len(),
        None => {
            let span = noise.len().saturating_sub(y.len()) + 1;
            stream(opts.seed, 0).random_range(0..span.min(noise.len()))
        }
    };
    let seg_power = (0..y.len())
        .map(|t| noise[(offset + t) % noise.len()].powi(2))
        .sum::<f64>()
        / y.len() as f64;
    if seg_power == 0.0 {
        return Ok(y);
    }
    let p_y = energy(&y) / y.len() as f64;
    let gain = (p_y / (seg_power * 10f64.powf(opts.snr_db / 10.0))).sqrt();
    for (t, v) in y.iter_mut().enumerate() {
        *v += gain * noise[(offset + t) % noise.len()];
    }
    Ok(y)
}

/// Reads a mono WAV (integer PCM or 32-bit float) as a measured IR.
pub fn read_wav(path: impl AsRef<Path>) -> Result<ImpulseResponse> {
    let mut reader = hound::WavReader::open(path.as_ref()).map_err(|e| AnalysisError::Wav(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AnalysisError::Wav(format!("expected mono, got {} channels", spec.channels)));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| AnalysisError::Wav(e.to_string()))?;
    Ok(ImpulseResponse::new(samples, spec.sample_rate as f64, IrOrigin::Measured))
}

/// Input row for dataset statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub scene_id: String,
    pub source: Vec3,
    pub receiver: Vec3,
    pub scene_volume: Option<f64>,
    pub rt60: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// Left edge of the first bin.
    pub start: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub distances: Vec<f64>,
    pub histogram: DistanceHistogram,
    /// `(scene id, volume, rt60)` for pairs with both values.
    pub volume_rt60: Vec<(String, f64, f64)>,
}

/// Source-receiver distance histogram and volume vs. RT60 scatter.
pub fn dataset_stats(records: &[PairRecord], bin_width: f64) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyManifest);
    }
    if !(bin_width > 0.0) {
        return Err(AnalysisError::InvalidBands("histogram bin width must be positive".into()));
    }
    let distances: Vec<f64> = records.iter().map(|r| r.source.distance(r.receiver)).collect();
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = (lo / bin_width).floor() * bin_width;
    let nbins = (((hi - start) / bin_width).floor() as usize) + 1;
    let mut counts = vec![0; nbins];
    for &d in &distances {
        let b = (((d - start) / bin_width).floor() as usize).min(nbins - 1);
        counts[b] += 1;
    }
    let volume_rt60 = records
        .iter()
        .filter_map(|r| Some((r.scene_id.clone(), r.scene_volume?, r.rt60?)))
        .collect();
    Ok(DatasetStats {
        distances,
        histogram: DistanceHistogram {
            start,
            bin_width,
            counts,
        },
        volume_rt60,
    })
}

impl DatasetStats {
    pub fn histogram_csv(&self) -> String {
        let h = &self.histogram;
        let mut s = String::from("bin_start_m,bin_end_m,count\n");
        for (i, c) in h.counts.iter().enumerate() {
            let a = h.start + i as f64 * h.bin_width;
            let _ = writeln!(s, "{:.4},{:.4},{}", a, a + h.bin_width, c);
        }
        s
    }

    pub fn volume_rt60_csv(&self) -> String {
        let mut s = String::from("scene,volume_m3,rt60_s\n");
        for (id, v, t) in &self.volume_rt60 {
            let _ = writeln!(s, "{id},{v:.6},{t:.6}");
        }
        s
    }

    /// Minimal SVG: distance histogram on the left, volume vs. RT60 on the
    /// right.
    pub fn svg(&self) -> String {
        let (w, h, pad) = (400.0, 300.0, 30.0);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
            2.0 * w,
            h
        );
        let max_count = self.histogram.counts.iter().copied().max().unwrap_or(1).max(1) as f64;
        let n = self.histogram.counts.len().max(1) as f64;
        let bw = (w - 2.0 * pad) / n;
        for (i, &c) in self.histogram.counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * c as f64 / max_count;
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"steelblue\"/>",
                pad + i as f64 * bw,
                h - pad - bh,
                (bw - 1.0).max(0.5),
                bh
            );
        }
        let vmax = self.volume_rt60.iter().map(|p| p.1).fold(0.0, f64::max).max(1e-9);
        let tmax = self.volume_rt60.iter().map(|p| p.2).fold(0.0, f64::max).max(1e-9);
        for (_, v, t) in &self.volume_rt60 {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"darkred\"/>",
                w + pad + (w - 2.0 * pad) * v / vmax,
                h - pad - (h - 2.0 * pad) * t / tmax
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
