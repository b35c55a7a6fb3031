//! Stochastic geometric-acoustics path tracer and noise-shaping IR
//! synthesis.
//!
//! Histogram entries are per-band energy fluence arriving at the receiver
//! (source emits unit energy per band), so the deterministic direct term at
//! distance `d` is `1 / (4 pi d^2)`. Three estimators fill it:
//!
//! * diffuse rain: at every hit the scattered share of the reflected energy
//!   is sent straight to the receiver with a Lambert weight;
//! * specular paths of low order come from image sources found by the rays
//!   and validated geometrically;
//! * higher-order specular energy is caught by a receiver sphere.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::Bvh;
use crate::geom::{Triangle, Vec3};
use crate::hybrid::{butterworth, octave_bandpass, sos_filter_in_place, FilterKind, Sos};
use crate::materials::{Spectrum, Surface, NUM_BANDS, OCTAVE_BANDS};
use crate::rng::stream;
use crate::scene::{point_in_air, SceneError, TriangleMesh};
use crate::signal::{add_fractional_pulse, ImpulseResponse, IrOrigin};

const CHUNK: usize = 256;
const EPS: f64 = 1e-7;
/// Band whose scattering coefficient picks the specular/diffuse branch.
const BRANCH_BAND: usize = 4;
const WARMUP: usize = 8192;

#[derive(Debug, Error)]
pub enum GaError {
    #[error("scene has no triangles")]
    NoTriangles,
    #[error("{0} is outside the enclosed air region")]
    OutsideAir(&'static str),
    #[error("expected {expected} surfaces, got {got}")]
    SurfaceCount { expected: usize, got: usize },
    #[error("invalid ray-tracer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub type Result<T> = std::result::Result<T, GaError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub ray_count: usize,
    pub max_depth: usize,
    /// Rays stop once every band is below this fraction of their start energy.
    pub energy_floor: f64,
    pub bands: Spectrum,
    pub sample_rate: f64,
    pub duration: f64,
    pub speed_of_sound: f64,
    pub rng_seed: u64,
    pub receiver_radius: f64,
    pub bin_width: f64,
    /// Maximum reflection order handled by validated image sources.
    pub image_source_order: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            ray_count: 20_000,
            max_depth: 200,
            energy_floor: 1e-6,
            bands: OCTAVE_BANDS,
            sample_rate: 48_000.0,
            duration: 1.5,
            speed_of_sound: 343.0,
            rng_seed: 0,
            receiver_radius: 0.1,
            bin_width: 1e-3,
            image_source_order: 2,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GaError::InvalidConfig(m));
        if self.ray_count == 0 {
            return bad("ray_count must be >= 1".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.energy_floor > 0.0 && self.energy_floor < 1.0) {
            return bad(format!("energy_floor {} not in (0, 1)", self.energy_floor));
        }
        if !(self.duration > 0.0) || !(self.bin_width > 0.0) || !(self.sample_rate > 0.0) {
            return bad("duration, bin_width and sample_rate must be positive".into());
        }
        if !(self.speed_of_sound > 0.0) || !(self.receiver_radius > 0.0) {
            return bad("speed_of_sound and receiver_radius must be positive".into());
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        (self.duration / self.bin_width - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectArrival {
    pub time: f64,
    pub distance: f64,
    pub bin: usize,
    pub energy: Spectrum,
}

/// Per-band bookkeeping of where emitted energy went. For every band
/// `absorbed + escaped + terminated` equals 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub absorbed: Spectrum,
    pub escaped: Spectrum,
    pub terminated: Spectrum,
    pub escaped_rays: usize,
    pub hits: u64,
}

impl EnergyLedger {
    fn merge(&mut self, o: &EnergyLedger) {
        for b in 0..NUM_BANDS {
            self.absorbed[b] += o.absorbed[b];
            self.escaped[b] += o.escaped[b];
            self.terminated[b] += o.terminated[b];
        }
        self.escaped_rays += o.escaped_rays;
        self.hits += o.hits;
    }

    /// True when rays left the scene, which only happens with open meshes.
    pub fn open_mesh(&self) -> bool {
        self.escaped_rays > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyHistogram {
    /// `bins[t][b]`: energy of band `b` arriving in time bin `t`.
    pub bins: Vec<Spectrum>,
    pub bin_width: f64,
    pub direct: Option<DirectArrival>,
    pub ledger: EnergyLedger,
}

impl EnergyHistogram {
    pub fn zeros(bin_count: usize, bin_width: f64) -> Self {
        Self {
            bins: vec![[0.0; NUM_BANDS]; bin_count],
            bin_width,
            direct: None,
            ledger: EnergyLedger::default(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.bins.len() as f64 * self.bin_width
    }

    pub fn band_totals(&self) -> Spectrum {
        let mut t = [0.0; NUM_BANDS];
        for bin in &self.bins {
            for b in 0..NUM_BANDS {
                t[b] += bin[b];
            }
        }
        t
    }

    pub fn band(&self, b: usize) -> Vec<f64> {
        self.bins.iter().map(|e| e[b]).collect()
    }

    /// Energy in band `b` arriving at or after `t0` seconds.
    pub fn energy_after(&self, b: usize, t0: f64) -> f64 {
        let first = (t0 / self.bin_width).floor().max(0.0) as usize;
        self.bins.iter().skip(first).map(|e| e[b]).sum()
    }

    fn deposit(&mut self, time: f64, energy: impl Fn(usize) -> f64) {
        let bin = (time / self.bin_width).floor();
        if bin < 0.0 || bin >= self.bins.len() as f64 {
            return;
        }
        let slot = &mut self.bins[bin as usize];
        for (b, v) in slot.iter_mut().enumerate() {
            *v += energy(b);
        }
    }
}

/// Mesh, acceleration structure and per-triangle surface data.
#[derive(Debug, Clone)]
pub struct GaScene {
    bvh: Bvh,
    surfaces: Vec<Surface>,
}

impl GaScene {
    pub fn new(mesh: &TriangleMesh, surfaces: Vec<Surface>) -> Result<Self> {
        if mesh.is_empty() {
            return Err(GaError::NoTriangles);
        }
        if surfaces.len() != mesh.len() {
            return Err(GaError::SurfaceCount {
                expected: mesh.len(),
                got: surfaces.len(),
            });
        }
        Ok(Self {
            bvh: mesh.bvh(),
            surfaces,
        })
    }

    pub fn uniform(mesh: &TriangleMesh, surface: Surface) -> Result<Self> {
        Self::new(mesh, vec![surface; mesh.len()])
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    fn triangle(&self, i: u32) -> &Triangle {
        &self.bvh.triangles()[i as usize]
    }
}

/// Deterministic line-of-sight arrival, `None` when occluded.
pub fn direct_arrival(bvh: Option<&Bvh>, source: Vec3, receiver: Vec3, cfg: &GaConfig) -> Option<DirectArrival> {
    let d = source.distance(receiver);
    if d <= 0.0 || bvh.is_some_and(|b| b.occluded(source, receiver, EPS)) {
        return None;
    }
    let time = d / cfg.speed_of_sound;
    Some(DirectArrival {
        time,
        distance: d,
        bin: (time / cfg.bin_width).floor() as usize,
        energy: [1.0 / (4.0 * PI * d * d); NUM_BANDS],
    })
}

/// Histogram holding only the direct term (free field).
pub fn direct_only_histogram(source: Vec3, receiver: Vec3, cfg: &GaConfig) -> Result<EnergyHistogram> {
    cfg.validate()?;
    let mut hist = EnergyHistogram::zeros(cfg.bin_count(), cfg.bin_width);
    if let Some(d) = direct_arrival(None, source, receiver, cfg) {
        hist.deposit(d.time, |b| d.energy[b]);
        hist.direct = Some(d);
    }
    Ok(hist)
}

struct ChunkResult {
    hist: EnergyHistogram,
    sequences: BTreeSet<Vec<u32>>,
}

fn uniform_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

fn basis(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = n.cross(helper).normalized();
    (u, n.cross(u))
}

fn cosine_hemisphere(rng: &mut ChaCha8Rng, n: Vec3) -> Vec3 {
    let r2: f64 = rng.random();
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = r2.sqrt();
    let (u, v) = basis(n);
    (u * (r * phi.cos()) + v * (r * phi.sin()) + n * (1.0 - r2).max(0.0).sqrt()).normalized()
}

struct Tracer<'a> {
    scene: &'a GaScene,
    source: Vec3,
    receiver: Vec3,
    cfg: &'a GaConfig,
}

impl Tracer<'_> {
    fn ray(&self, index: usize, out: &mut ChunkResult) {
        let cfg = self.cfg;
        let c = cfg.speed_of_sound;
        let n_rays = cfg.ray_count as f64;
        let r2 = cfg.receiver_radius * cfg.receiver_radius;
        let mut rng = stream(cfg.rng_seed, index as u64);
        let mut origin = self.source;
        let mut dir = uniform_sphere(&mut rng);
        let mut e = [1.0 / n_rays; NUM_BANDS];
        let mut path = 0.0;
        let mut depth = 0usize;
        let mut after_specular = false;
        let mut detect_weight = [0.0; NUM_BANDS];
        let mut prefix: Vec<u32> = Vec::new();
        let mut prefix_alive = cfg.image_source_order > 0;
        let ledger_end = |ledger: &mut EnergyLedger, e: &Spectrum, escaped: bool| {
            for b in 0..NUM_BANDS {
                if escaped {
                    ledger.escaped[b] += e[b];
                } else {
                    ledger.terminated[b] += e[b];
                }
            }
        };
        loop {
            let hit = self.scene.bvh.intersect(origin, dir, EPS, f64::INFINITY);
            let seg_len = hit.map_or(f64::INFINITY, |h| h.t);

            let covered = prefix_alive && depth <= cfg.image_source_order;
            if after_specular && !covered {
                let w = self.receiver - origin;
                let tc = w.dot(dir);
                if tc > 0.0 && tc < seg_len && w.norm_squared() - tc * tc <= r2 {
                    let t = (path + tc) / c;
                    let area = PI * r2;
                    out.hist.deposit(t, |b| e[b] * detect_weight[b] / area);
                }
            }

            let Some(h) = hit else {
                ledger_end(&mut out.hist.ledger, &e, true);
                out.hist.ledger.escaped_rays += 1;
                return;
            };
            let x = origin + dir * h.t;
            path += h.t;
            if path / c >= cfg.duration {
                ledger_end(&mut out.hist.ledger, &e, false);
                return;
            }
            out.hist.ledger.hits += 1;
            let surf = &self.scene.surfaces[h.triangle as usize];
            let n = self.scene.triangle(h.triangle).normal();
            let nf = if n.dot(dir) < 0.0 { n } else { -n };
            for b in 0..NUM_BANDS {
                let a = surf.absorption[b];
                out.hist.ledger.absorbed[b] += e[b] * a;
                e[b] *= 1.0 - a;
            }
            self.rain(x, nf, path, &e, &surf.scattering, &mut out.hist);
            depth += 1;

            let s_k = surf.scattering[BRANCH_BAND];
            let specular = rng.random::<f64>() >= s_k;
            if specular {
                dir = (dir - nf * (2.0 * dir.dot(nf))).normalized();
                for b in 0..NUM_BANDS {
                    detect_weight[b] = (1.0 - surf.scattering[b]) / (1.0 - s_k);
                }
                if prefix_alive && depth <= cfg.image_source_order {
                    prefix.push(h.triangle);
                    out.sequences.insert(prefix.clone());
                }
            } else {
                dir = cosine_hemisphere(&mut rng, nf);
                prefix_alive = false;
            }
            after_specular = specular;
            origin = x + nf * EPS;

            let alive = e.iter().any(|&v| v * n_rays >= cfg.energy_floor);
            if depth >= cfg.max_depth || !alive {
                ledger_end(&mut out.hist.ledger, &e, false);
                return;
            }
        }
    }

    /// Lambert next-event estimate of the scattered share at hit point `x`.
    fn rain(&self, x: Vec3, nf: Vec3, path: f64, e: &Spectrum, s: &Spectrum, hist: &mut EnergyHistogram) {
        if s.iter().all(|&v| v <= 0.0) {
            return;
        }
        let to_r = self.receiver - x;
        let d = to_r.norm();
        let cos = nf.dot(to_r) / d;
        if cos <= 0.0 || self.scene.bvh.occluded(x + nf * EPS, self.receiver, EPS) {
            return;
        }
        let g = cos / (PI * d * d);
        hist.deposit((path + d) / self.cfg.speed_of_sound, |b| e[b] * s[b] * g);
    }

    fn mirror(&self, p: Vec3, tri: u32) -> Vec3 {
        let t = self.scene.triangle(tri);
        let n = t.normal();
        p - n * (2.0 * (p - t.a).dot(n))
    }

    /// Validates the specular path through `seq` and returns its length and
    /// the final image position.
    fn image_path(&self, seq: &[u32]) -> Option<(f64, Vec3)> {
        let mut images = Vec::with_capacity(seq.len());
        let mut img = self.source;
        for &t in seq {
            img = self.mirror(img, t);
            images.push(img);
        }
        let bvh = &self.scene.bvh;
        let mut p = self.receiver;
        for j in (0..seq.len()).rev() {
            let d = images[j] - p;
            let len = d.norm();
            let dir = d / len;
            let t = self.scene.triangle(seq[j]).intersect_ray(p, dir)?;
            if !(t > EPS && t < len - EPS) {
                return None;
            }
            let x = p + dir * t;
            if bvh.occluded(p, x, EPS) {
                return None;
            }
            p = x;
        }
        if bvh.occluded(p, self.source, EPS) {
            return None;
        }
        let last = *images.last()?;
        Some((self.receiver.distance(last), last))
    }

    fn image_sources(&self, sequences: &BTreeSet<Vec<u32>>, hist: &mut EnergyHistogram) {
        let quant = |v: f64| (v * 1e6).round() as i64;
        let mut seen: BTreeMap<[i64; 3], ()> = BTreeMap::new();
        for seq in sequences {
            let Some((len, img)) = self.image_path(seq) else {
                continue;
            };
            let key = [quant(img.x), quant(img.y), quant(img.z)];
            if seen.insert(key, ()).is_some() {
                continue;
            }
            let mut gain = [1.0 / (4.0 * PI * len * len); NUM_BANDS];
            for &t in seq {
                let s = &self.scene.surfaces[t as usize];
                for b in 0..NUM_BANDS {
                    gain[b] *= (1.0 - s.absorption[b]) * (1.0 - s.scattering[b]);
                }
            }
            hist.deposit(len / self.cfg.speed_of_sound, |b| gain[b]);
        }
    }
}

/// Traces `cfg.ray_count` rays from `source` and accumulates the energy
/// reaching `receiver`. Results depend only on the inputs, not on the
/// number of worker threads.
pub fn trace(scene: &GaScene, source: Vec3, receiver: Vec3, cfg: &GaConfig) -> Result<EnergyHistogram> {
    cfg.validate()?;
    if scene.bvh.is_empty() {
        return Err(GaError::NoTriangles);
    }
    if !point_in_air(&scene.bvh, source) {
        return Err(GaError::OutsideAir("source"));
    }
    if !point_in_air(&scene.bvh, receiver) {
        return Err(GaError::OutsideAir("receiver"));
    }
    let tracer = Tracer {
        scene,
        source,
        receiver,
        cfg,
    };
    let bins = cfg.bin_count();
    let chunks: Vec<ChunkResult> = (0..cfg.ray_count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut out = ChunkResult {
                hist: EnergyHistogram::zeros(bins, cfg.bin_width),
                sequences: BTreeSet::new(),
            };
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.ray_count) {
                tracer.ray(i, &mut out);
            }
            out
        })
        .collect();

    let mut hist = EnergyHistogram::zeros(bins, cfg.bin_width);
    let mut sequences = BTreeSet::new();
    for chunk in chunks {
        for (acc, v) in hist.bins.iter_mut().zip(&chunk.hist.bins) {
            for b in 0..NUM_BANDS {
                acc[b] += v[b];
            }
        }
        hist.ledger.merge(&chunk.hist.ledger);
        sequences.extend(chunk.sequences);
    }
    tracer.image_sources(&sequences, &mut hist);
    if let Some(d) = direct_arrival(Some(&scene.bvh), source, receiver, cfg) {
        hist.deposit(d.time, |b| d.energy[b]);
        hist.direct = Some(d);
    }
    if hist.ledger.open_mesh() {
        log::warn!("{} rays escaped the scene; mesh is open", hist.ledger.escaped_rays);
    }
    Ok(hist)
}

/// Synthesis filter for band `b`. The outermost bands extend to DC and to
/// Nyquist so the band filters together cover the whole spectrum.
pub fn synthesis_filter(bands: &Spectrum, b: usize, fs: f64) -> Option<Sos> {
    let fc = bands[b];
    let lo = fc / 2f64.sqrt();
    if lo >= 0.49 * fs {
        return None;
    }
    if b == 0 {
        return butterworth(FilterKind::Low, 2, (fc * 2f64.sqrt()).min(0.45 * fs), fs).ok();
    }
    let top = b == NUM_BANDS - 1 || bands[b + 1] / 2f64.sqrt() >= 0.49 * fs;
    if top {
        return butterworth(FilterKind::High, 2, lo, fs).ok();
    }
    octave_bandpass(fc, fs).ok()
}

/// White-noise power gain of a filter (energy of its impulse response).
pub fn noise_power_gain(sos: &[crate::hybrid::Biquad], fs: f64) -> f64 {
    let mut h = vec![0.0; (fs as usize).max(4096)];
    h[0] = 1.0;
    sos_filter_in_place(sos, &mut h);
    h.iter().map(|v| v * v).sum()
}

/// Turns an energy histogram into a pressure IR at `cfg.sample_rate`.
///
/// Each band is Gaussian noise through that band's filter, shaped by the
/// square root of the per-sample energy density. The direct arrival is a
/// band-limited pulse at its exact (fractional) delay instead of noise.
pub fn synthesize_ir(hist: &EnergyHistogram, cfg: &GaConfig, rng_seed: u64) -> ImpulseResponse {
    let fs = cfg.sample_rate;
    let n = (hist.duration() * fs).round() as usize;
    let mut out = vec![0.0; n];
    let spb = hist.bin_width * fs;
    for b in 0..NUM_BANDS {
        let mut env = hist.band(b);
        if let Some(d) = &hist.direct {
            if let Some(v) = env.get_mut(d.bin) {
                *v = (*v - d.energy[b]).max(0.0);
            }
        }
        if env.iter().all(|&v| v <= 0.0) {
            continue;
        }
        let Some(sos) = synthesis_filter(&cfg.bands, b, fs) else {
            continue;
        };
        let mut rng = stream(rng_seed, b as u64);
        let mut noise: Vec<f64> = (0..n + WARMUP).map(|_| rng.sample(StandardNormal)).collect();
        sos_filter_in_place(&sos, &mut noise);
        for (i, (o, z)) in out.iter_mut().zip(&noise[WARMUP..]).enumerate() {
            let bin = ((i as f64 + 0.5) / spb) as usize;
            if let Some(&e) = env.get(bin) {
                if e > 0.0 {
                    *o += z * (e / spb).sqrt();
                }
            }
        }
    }
    if let Some(d) = &hist.direct {
        let e = d.energy.iter().sum::<f64>() / NUM_BANDS as f64;
        add_fractional_pulse(&mut out, d.time * fs, e);
    }
    ImpulseResponse::new(out, fs, IrOrigin::Ga)
}

/// Sabine reverberation time for one band.
pub fn sabine_rt60(mesh: &TriangleMesh, surfaces: &[Surface], band: usize) -> Result<f64> {
    let (v, a, _) = room_absorption(mesh, surfaces, band)?;
    Ok(0.161 * v / a)
}

/// Eyring reverberation time for one band (area-weighted mean absorption).
pub fn eyring_rt60(mesh: &TriangleMesh, surfaces: &[Surface], band: usize) -> Result<f64> {
    let (v, a, s) = room_absorption(mesh, surfaces, band)?;
    let mean = (a / s).min(1.0 - 1e-12);
    Ok(0.161 * v / (-s * (1.0 - mean).ln()))
}

fn room_absorption(mesh: &TriangleMesh, surfaces: &[Surface], band: usize) -> Result<(f64, f64, f64)> {
    if surfaces.len() != mesh.len() {
        return Err(GaError::SurfaceCount {
            expected: mesh.len(),
            got: surfaces.len(),
        });
    }
    let v = mesh.volume()?;
    let mut a = 0.0;
    let mut s = 0.0;
    for (t, surf) in mesh.iter_triangles().zip(surfaces) {
        a += t.area() * surf.absorption[band];
        s += t.area();
    }
    Ok((v, a, s))
}
