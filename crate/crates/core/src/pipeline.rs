//! End-to-end dataset generation: materials, voxelization, placements,
//! calibration, per-pair simulation, fusion, WAV and manifest output.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{self, schroeder_edc, AnalysisError, PairRecord};
use crate::calibrate::{self, CalibrationError, CalibrationResult, CalibrationSetup};
use crate::fdtd::{self, derive_grid_params, FdtdConfig, FdtdError};
use crate::ga::{self, GaConfig, GaError, GaScene};
use crate::geom::Vec3;
use crate::hybrid::{self, CrossoverSpec, HybridError};
use crate::materials::{
    assign_mesh_materials, load_material_db, EmbeddingTable, MaterialError, MaterialRecord, MeshMaterials,
    ScatteringPrior, OCTAVE_BANDS,
};
use crate::rng::{derive_seed, stream};
use crate::scene::{self, SceneError, TriangleMesh, VoxelGrid, VoxelizeOptions};
use crate::signal::{resample, ImpulseResponse, IrOrigin};

pub const ENV_OUTPUT_DIR: &str = "ROOMWAVE_OUTPUT_DIR";
pub const ENV_JOBS: &str = "ROOMWAVE_JOBS";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CALIBRATION_FILE: &str = "calibration.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("wav: {0}")]
    Wav(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Materials(#[from] MaterialError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// OBJ scene files.
    pub scenes: Vec<PathBuf>,
    pub material_db: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Output rate of every WAV; also the GA synthesis rate.
    pub sample_rate: f64,
    pub ga: GaConfig,
    pub fdtd: FdtdConfig,
    pub crossover: CrossoverSpec,
    pub calibration: CalibrationSetup,
    pub scattering_prior: ScatteringPrior,
    pub grid_spacing: f64,
    pub clearance: f64,
    pub rng_seed: u64,
    /// Worker threads; all available cores when unset.
    pub jobs: Option<usize>,
    pub pair_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scenes: Vec::new(),
            material_db: PathBuf::from("materials.csv"),
            embeddings: None,
            output_dir: PathBuf::from("out"),
            sample_rate: 48_000.0,
            ga: GaConfig::default(),
            fdtd: FdtdConfig::default(),
            crossover: CrossoverSpec::default(),
            calibration: CalibrationSetup::default(),
            scattering_prior: ScatteringPrior::default(),
            grid_spacing: 1.0,
            clearance: 0.2,
            rng_seed: 0,
            jobs: None,
            pair_cap: 16,
        }
    }
}

impl PipelineConfig {
    /// Parses a JSON config; relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| PipelineError::Json {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.scenes.iter_mut().for_each(fix);
        fix(&mut self.material_db);
        if let Some(e) = self.embeddings.as_mut() {
            fix(e);
        }
        fix(&mut self.output_dir);
    }

    /// Applies `ROOMWAVE_OUTPUT_DIR` and `ROOMWAVE_JOBS` when set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
        if let Ok(jobs) = std::env::var(ENV_JOBS) {
            let n = jobs
                .trim()
                .parse()
                .map_err(|_| PipelineError::Config(format!("{ENV_JOBS}={jobs} is not a positive integer")))?;
            self.jobs = Some(n);
        }
        Ok(())
    }

    pub fn worker_count(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// GA settings as run by the pipeline: synthesis at the output rate.
    pub fn effective_ga(&self) -> GaConfig {
        GaConfig {
            sample_rate: self.sample_rate,
            ..self.ga.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let top_edge = OCTAVE_BANDS[OCTAVE_BANDS.len() - 1] * 2f64.sqrt();
        if !(self.sample_rate >= 2.0 * top_edge) {
            return bad(format!(
                "sample_rate {} Hz is below twice the top band edge ({:.0} Hz)",
                self.sample_rate,
                2.0 * top_edge
            ));
        }
        if self.pair_cap < 1 {
            return bad("pair_cap must be >= 1".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        if !(self.grid_spacing > 0.0) || !(self.clearance >= 0.0) {
            return bad("grid_spacing must be > 0 and clearance >= 0".into());
        }
        if self.crossover.crossover_freq > self.fdtd.f_max {
            return bad(format!(
                "crossover frequency {} Hz exceeds the wave solver band limit {} Hz",
                self.crossover.crossover_freq, self.fdtd.f_max
            ));
        }
        self.crossover.validate(self.sample_rate)?;
        self.effective_ga().validate()?;
        self.fdtd.validate()?;
        self.calibration.validate()?;
        self.scattering_prior.validate()?;
        if self.scenes.is_empty() {
            return bad("no scenes listed".into());
        }
        let mut ids = BTreeSet::new();
        for s in &self.scenes {
            if !s.is_file() {
                return bad(format!("scene {} does not exist", s.display()));
            }
            if !ids.insert(scene_id(s)) {
                return bad(format!("duplicate scene id {}", scene_id(s)));
            }
        }
        if !self.material_db.is_file() {
            return bad(format!("material database {} does not exist", self.material_db.display()));
        }
        if let Some(e) = &self.embeddings {
            if !e.is_file() {
                return bad(format!("embedding table {} does not exist", e.display()));
            }
        }
        Ok(())
    }
}

pub fn scene_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub ga: String,
    pub fdtd: String,
    pub hybrid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialChoice {
    pub label: String,
    pub material: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaValues {
    pub w: f64,
    pub g: f64,
    pub combined: f64,
}

/// One line of the JSONL manifest. File paths are relative to the output
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scene_id: String,
    pub pair_index: usize,
    pub source: Vec3,
    pub receiver: Vec3,
    pub distance: f64,
    pub files: Option<OutputFiles>,
    pub materials: Vec<MaterialChoice>,
    pub rt60: Option<f64>,
    pub eta: EtaValues,
    /// Gain that would bring the hybrid peak to 0.99; recorded, not applied.
    pub normalization_gain: Option<f64>,
    pub scene_volume: Option<f64>,
    pub error: Option<String>,
}

impl ManifestEntry {
    pub fn is_complete(&self) -> bool {
        self.error.is_none() && self.files.is_some()
    }
}

impl From<&ManifestEntry> for PairRecord {
    fn from(e: &ManifestEntry) -> Self {
        PairRecord {
            scene_id: e.scene_id.clone(),
            source: e.source,
            receiver: e.receiver,
            scene_volume: e.scene_volume,
            rt60: e.rt60,
        }
    }
}

/// Per-scene state shared read-only by its pair jobs.
#[derive(Debug)]
pub struct ScenePlan {
    pub id: String,
    pub index: usize,
    pub mesh: TriangleMesh,
    pub materials: MeshMaterials,
    pub grid: VoxelGrid,
    pub ga_scene: GaScene,
    pub pairs: Vec<(Vec3, Vec3)>,
    pub volume: Option<f64>,
}

impl ScenePlan {
    fn material_choices(&self) -> Vec<MaterialChoice> {
        self.materials
            .assignments
            .iter()
            .map(|a| MaterialChoice {
                label: a.label.clone(),
                material: a.material.clone(),
                seed: a.seed,
            })
            .collect()
    }
}

/// Loads, assigns materials, voxelizes and samples placements for one
/// scene. Pairs are shuffled with the scene seed and capped.
pub fn plan_scene(
    index: usize,
    path: &Path,
    cfg: &PipelineConfig,
    db: &[MaterialRecord],
    embeddings: Option<&EmbeddingTable>,
) -> Result<ScenePlan> {
    let mesh = scene::load_mesh(path)?.mesh;
    let scene_seed = derive_seed(cfg.rng_seed, index as u64);
    let materials = assign_mesh_materials(&mesh, db, embeddings, &cfg.scattering_prior, derive_seed(scene_seed, 0))?;
    let dx = derive_grid_params(&cfg.fdtd).dx;
    let grid = scene::voxelize_with(
        &mesh,
        dx,
        &VoxelizeOptions {
            triangle_admittance: Some(materials.triangle_admittance(db)),
            ..Default::default()
        },
    )?;
    let placements = scene::sample_placements(&mesh, cfg.grid_spacing, cfg.clearance)?;
    let mut pairs: Vec<(Vec3, Vec3)> = placements
        .pairs
        .iter()
        .map(|&(s, r)| (placements.sources[s], placements.receivers[r]))
        .collect();
    pairs.shuffle(&mut stream(scene_seed, 1));
    pairs.truncate(cfg.pair_cap);
    let ga_scene = GaScene::new(&mesh, materials.surfaces(db))?;
    Ok(ScenePlan {
        id: scene_id(path),
        index,
        volume: mesh.volume().ok(),
        mesh,
        materials,
        grid,
        ga_scene,
        pairs,
    })
}

pub fn load_materials(cfg: &PipelineConfig) -> Result<(Vec<MaterialRecord>, Option<EmbeddingTable>)> {
    let db = load_material_db(&cfg.material_db)?;
    let emb = cfg.embeddings.as_ref().map(EmbeddingTable::load).transpose()?;
    Ok((db, emb))
}

pub fn plan(cfg: &PipelineConfig) -> Result<Vec<ScenePlan>> {
    let (db, emb) = load_materials(cfg)?;
    cfg.scenes
        .iter()
        .enumerate()
        .map(|(i, p)| plan_scene(i, p, cfg, &db, emb.as_ref()))
        .collect()
}

/// Hash of everything the calibration depends on.
pub fn calibration_key(cfg: &PipelineConfig) -> String {
    let payload = serde_json::json!({
        "setup": cfg.calibration,
        "fdtd": cfg.fdtd,
        "ga": cfg.effective_ga(),
    });
    let digest = Sha256::digest(payload.to_string().as_bytes());
    hex::encode(&digest[..8])
}

/// Loads the calibration for `cfg` from `cache_dir`, computing and storing
/// it on a miss.
pub fn cached_calibration(cfg: &PipelineConfig, cache_dir: &Path) -> Result<CalibrationResult> {
    let path = cache_dir.join(format!("calibration-{}.json", calibration_key(cfg)));
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str(&text) {
            Ok(c) => {
                log::info!("calibration cache hit {}", path.display());
                return Ok(c);
            }
            Err(e) => log::warn!("ignoring unreadable calibration cache {}: {e}", path.display()),
        }
    }
    log::info!("calibrating (f_max {} Hz)", cfg.fdtd.f_max);
    let cal = calibrate::calibrate(&cfg.calibration, &cfg.fdtd, &cfg.effective_ga())?;
    fs::create_dir_all(cache_dir).map_err(io_err(cache_dir))?;
    fs::write(&path, cal.to_json()).map_err(io_err(&path))?;
    Ok(cal)
}

#[derive(Debug, Clone)]
pub struct PairIrs {
    /// Wave IR at the output rate, scaled by the combined gain.
    pub fdtd: ImpulseResponse,
    pub ga: ImpulseResponse,
    pub hybrid: ImpulseResponse,
}

/// Wave-solver IR for a unit impulse, resampled to `fs_out` and cut to
/// `cfg.duration`. The `fs_int / fs_out` factor keeps the response's
/// continuous-time gain.
pub fn fdtd_ir(grid: &VoxelGrid, source: Vec3, receiver: Vec3, cfg: &FdtdConfig, fs_out: f64) -> Result<ImpulseResponse> {
    let run_cfg = FdtdConfig {
        output_sample_rate: None,
        ..cfg.clone()
    };
    let (raw, params) = fdtd::run_raw(grid, source, &[receiver], &[1.0], &run_cfg)?;
    let scale = params.sample_rate / fs_out;
    let n = (cfg.duration * fs_out).round() as usize;
    let samples = resample(&raw[0], params.sample_rate, fs_out)
        .into_iter()
        .take(n)
        .map(|v| v * scale)
        .collect();
    Ok(ImpulseResponse::new(samples, fs_out, IrOrigin::Fdtd))
}

/// Runs both engines for one pair and fuses them.
pub fn simulate_pair(
    plan: &ScenePlan,
    source: Vec3,
    receiver: Vec3,
    cfg: &PipelineConfig,
    cal: &CalibrationResult,
    seed: u64,
) -> Result<PairIrs> {
    let fs = cfg.sample_rate;
    let wave = fdtd_ir(&plan.grid, source, receiver, &cfg.fdtd, fs)?;
    let ga_cfg = GaConfig {
        rng_seed: seed,
        ..cfg.effective_ga()
    };
    let hist = ga::trace(&plan.ga_scene, source, receiver, &ga_cfg)?;
    let geo = ga::synthesize_ir(&hist, &ga_cfg, seed);
    let hybrid = hybrid::combine(&wave, &geo, cal.eta_combined, &cfg.crossover)?;
    Ok(PairIrs {
        fdtd: wave.scaled(cal.eta_combined),
        ga: geo,
        hybrid,
    })
}

/// Writes a mono 32-bit float WAV.
pub fn write_wav(ir: &ImpulseResponse, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if ir.is_empty() {
        return Err(PipelineError::Wav(format!("{}: refusing to write an empty IR", path.display())));
    }
    if let Some(i) = ir.samples.iter().position(|v| !v.is_finite()) {
        return Err(PipelineError::Wav(format!("{}: non-finite sample {i}", path.display())));
    }
    let rate = ir.sample_rate.round();
    if !(rate >= 1.0 && rate <= u32::MAX as f64) {
        return Err(PipelineError::Wav(format!("unsupported sample rate {}", ir.sample_rate)));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wav_err = |e: hound::Error| PipelineError::Wav(format!("{}: {e}", path.display()));
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &v in &ir.samples {
        w.write_sample(v as f32).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

/// Runs `f` over `jobs` on at most `max_parallel` threads. Results keep
/// job order; a failing or panicking job yields an error message in its
/// slot and does not stop the others.
pub fn schedule<J, T, F>(jobs: &[J], max_parallel: usize, f: F) -> Result<Vec<std::result::Result<T, String>>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> std::result::Result<T, String> + Sync,
{
    if max_parallel < 1 {
        return Err(PipelineError::Config("max_parallel must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|j| match catch_unwind(AssertUnwindSafe(|| f(j))) {
                Ok(r) => r,
                Err(p) => Err(panic_message(p.as_ref())),
            })
            .collect()
    }))
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    format!("job panicked: {msg}")
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub entries: Vec<ManifestEntry>,
    pub calibration: CalibrationResult,
    pub manifest_path: PathBuf,
}

impl PipelineReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_some()).count()
    }
}

struct PairJob {
    scene: usize,
    pair: usize,
}

fn run_job(job: &PairJob, plans: &[ScenePlan], cfg: &PipelineConfig, cal: &CalibrationResult) -> Result<(OutputFiles, Option<f64>, Option<f64>)> {
    let plan = &plans[job.scene];
    let (src, rcv) = plan.pairs[job.pair];
    let seed = derive_seed(derive_seed(cfg.rng_seed, plan.index as u64), 1000 + job.pair as u64);
    let irs = simulate_pair(plan, src, rcv, cfg, cal, seed)?;
    let dir = cfg.output_dir.join(&plan.id);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let rel = |kind: &str| format!("{}/pair_{:04}_{kind}.wav", plan.id, job.pair);
    let files = OutputFiles {
        ga: rel("ga"),
        fdtd: rel("fdtd"),
        hybrid: rel("hybrid"),
    };
    write_wav(&irs.ga, cfg.output_dir.join(&files.ga))?;
    write_wav(&irs.fdtd, cfg.output_dir.join(&files.fdtd))?;
    write_wav(&irs.hybrid, cfg.output_dir.join(&files.hybrid))?;
    let rt60 = schroeder_edc(&irs.hybrid).ok().and_then(|d| d.rt60);
    let peak = irs.hybrid.peak();
    let gain = (peak > 0.0).then(|| 0.99 / peak);
    Ok((files, rt60, gain))
}

/// Full run: plans every scene, calibrates (cached), simulates all pairs on
/// `cfg.worker_count()` threads and writes WAVs, `calibration.json` and the
/// manifest. Pair failures are recorded in their manifest entry.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let plans = plan(cfg)?;
    let cal = cached_calibration(cfg, &cfg.output_dir.join("cache"))?;
    let cal_path = cfg.output_dir.join(CALIBRATION_FILE);
    fs::write(&cal_path, cal.to_json()).map_err(io_err(&cal_path))?;

    let jobs: Vec<PairJob> = plans
        .iter()
        .enumerate()
        .flat_map(|(s, p)| (0..p.pairs.len()).map(move |pair| PairJob { scene: s, pair }))
        .collect();
    log::info!("{} scenes, {} pairs, {} workers", plans.len(), jobs.len(), cfg.worker_count());
    let results = schedule(&jobs, cfg.worker_count(), |j| {
        run_job(j, &plans, cfg, &cal).map_err(|e| e.to_string())
    })?;

    let eta = EtaValues {
        w: cal.eta_w,
        g: cal.eta_g,
        combined: cal.eta_combined,
    };
    let entries: Vec<ManifestEntry> = jobs
        .iter()
        .zip(results)
        .map(|(j, r)| {
            let plan = &plans[j.scene];
            let (source, receiver) = plan.pairs[j.pair];
            let mut e = ManifestEntry {
                scene_id: plan.id.clone(),
                pair_index: j.pair,
                source,
                receiver,
                distance: source.distance(receiver),
                files: None,
                materials: plan.material_choices(),
                rt60: None,
                eta,
                normalization_gain: None,
                scene_volume: plan.volume,
                error: None,
            };
            match r {
                Ok((files, rt60, gain)) => {
                    e.files = Some(files);
                    e.rt60 = rt60;
                    e.normalization_gain = gain;
                }
                Err(msg) => {
                    log::warn!("{} pair {}: {msg}", plan.id, j.pair);
                    e.error = Some(msg);
                }
            }
            e
        })
        .collect();
    let manifest_path = cfg.output_dir.join(MANIFEST_FILE);
    write_manifest(&entries, &manifest_path)?;
    Ok(PipelineReport {
        entries,
        calibration: cal,
        manifest_path,
    })
}

pub fn manifest_text(entries: &[ManifestEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
        s.push('\n');
    }
    s
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(manifest_text(entries).as_bytes()).map_err(io_err(path))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| PipelineError::Json {
                path: path.display().to_string(),
                source,
            })
        })
        .collect()
}

/// Writes dataset statistics and per-pair engine comparisons for a
/// manifest into `report_dir`. Returns the files written.
pub fn analyze_manifest(manifest: impl AsRef<Path>, report_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let manifest = manifest.as_ref();
    let report_dir = report_dir.as_ref();
    let entries = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let complete: Vec<&ManifestEntry> = entries.iter().filter(|e| e.is_complete()).collect();
    let records: Vec<PairRecord> = complete.iter().map(|&e| e.into()).collect();
    let stats = analysis::dataset_stats(&records, 0.5)?;
    fs::create_dir_all(report_dir).map_err(io_err(report_dir))?;

    let bands = analysis::third_octave_bands(&analysis::third_octave_centers(50.0, 16_000.0));
    let mut cmp = String::from("scene,pair,a,b,mean_abs_diff_db\n");
    let mut rt = String::from("scene,pair,ga_rt60_s,fdtd_rt60_s,hybrid_rt60_s\n");
    let fmt_rt = |ir: &ImpulseResponse| {
        schroeder_edc(ir)
            .ok()
            .and_then(|d| d.rt60)
            .map_or_else(String::new, |t| format!("{t:.4}"))
    };
    for e in &complete {
        let files = e.files.as_ref().expect("complete entries have files");
        let load = |f: &str| analysis::read_wav(base.join(f));
        let irs = vec![
            ("ga".to_string(), load(&files.ga)?),
            ("fdtd".to_string(), load(&files.fdtd)?),
            ("hybrid".to_string(), load(&files.hybrid)?),
        ];
        let report = analysis::compare_report(&irs, &bands, (50.0, 16_000.0))?;
        for &(i, j, d) in &report.pairwise {
            cmp.push_str(&format!(
                "{},{},{},{},{d:.4}\n",
                e.scene_id, e.pair_index, report.labels[i], report.labels[j]
            ));
        }
        rt.push_str(&format!(
            "{},{},{},{},{}\n",
            e.scene_id,
            e.pair_index,
            fmt_rt(&irs[0].1),
            fmt_rt(&irs[1].1),
            fmt_rt(&irs[2].1)
        ));
    }
    let outputs = [
        ("distance_histogram.csv", stats.histogram_csv()),
        ("volume_rt60.csv", stats.volume_rt60_csv()),
        ("comparison.csv", cmp),
        ("rt60.csv", rt),
        ("stats.svg", stats.svg()),
    ];
    let mut written = Vec::new();
    for (name, body) in outputs {
        let p = report_dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}
