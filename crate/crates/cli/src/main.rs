use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use roomwave::materials::{assign_mesh_materials, assignment_distribution, load_material_db, ScatteringPrior};
use roomwave::pipeline::{self, PipelineConfig, PipelineError};
use roomwave::scene::load_mesh;
use roomwave::EmbeddingTable;
use serde_json::json;

#[derive(Parser)]
#[command(name = "roomwave", version, about = "Hybrid wave/geometric room impulse response generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every source/receiver pair listed by a config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (overrides ROOMWAVE_JOBS and the config).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides ROOMWAVE_OUTPUT_DIR and the config).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Validate and plan only; print the plan.
        #[arg(long)]
        dry_run: bool,
    },
    /// Dataset statistics and engine comparison for a manifest.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run (or load the cached) free-field calibration and print it.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the material chosen for every label of a mesh.
    AssignMaterials {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with its exit status: 2 for bad input, 1 for runtime errors.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Config(_) | PipelineError::Json { .. } => 2,
            _ => 1,
        };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

fn load_config(path: &Path, jobs: Option<usize>, seed: Option<u64>, output: Option<PathBuf>) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::load(path)?;
    cfg.apply_env_overrides()?;
    if let Some(j) = jobs {
        cfg.jobs = Some(j);
    }
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    if let Some(o) = output {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn generate(cfg: &PipelineConfig, dry_run: bool) -> Result<(), Failure> {
    if dry_run {
        let plans = pipeline::plan(cfg)?;
        let pairs: usize = plans.iter().map(|p| p.pairs.len()).sum();
        for p in &plans {
            println!(
                "{}: {} triangles, grid {:?}, {} pairs",
                p.id,
                p.mesh.len(),
                p.grid.dims,
                p.pairs.len()
            );
        }
        println!(
            "{} scenes, {pairs} pairs, {} workers, output {}",
            plans.len(),
            cfg.worker_count(),
            cfg.output_dir.display()
        );
        return Ok(());
    }
    let report = pipeline::run_pipeline(cfg)?;
    let failed = report.failures();
    println!(
        "{} pairs written, {failed} failed; manifest {}",
        report.entries.len() - failed,
        report.manifest_path.display()
    );
    if failed > 0 {
        return Err(anyhow::anyhow!("{failed} pair(s) failed; see the manifest error fields").into());
    }
    Ok(())
}

fn assign(scene: &Path, db: &Path, embeddings: Option<&Path>, seed: u64) -> anyhow::Result<()> {
    let mesh = load_mesh(scene).with_context(|| format!("loading {}", scene.display()))?.mesh;
    let db = load_material_db(db)?;
    let table = embeddings
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            EmbeddingTable::from_json(&text).map_err(anyhow::Error::from)
        })
        .transpose()?;
    let m = assign_mesh_materials(&mesh, &db, table.as_ref(), &ScatteringPrior::default(), seed)?;
    let mut out = Vec::new();
    for a in &m.assignments {
        let d = assignment_distribution(&a.label, &db, table.as_ref())?;
        let probs: serde_json::Map<String, serde_json::Value> = db
            .iter()
            .zip(&d.probabilities)
            .map(|(r, p)| (r.name.clone(), json!(p)))
            .collect();
        out.push(json!({
            "label": a.label,
            "material": a.material,
            "seed": a.seed,
            "scattering": a.scattering,
            "probabilities": probs,
        }));
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            jobs,
            seed,
            output,
            dry_run,
        } => {
            let cfg = load_config(&config, jobs, seed, output)?;
            generate(&cfg, dry_run)
        }
        Command::Analyze { manifest, report } => {
            for f in pipeline::analyze_manifest(&manifest, &report)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Calibrate { config } => {
            let cfg = load_config(&config, None, None, None)?;
            let cal = pipeline::cached_calibration(&cfg, &cfg.output_dir.join("cache"))?;
            println!("{}", cal.to_json());
            Ok(())
        }
        Command::AssignMaterials {
            scene,
            db,
            embeddings,
            seed,
        } => Ok(assign(&scene, &db, embeddings.as_deref(), seed)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            // Some error types already embed their source in the message.
            let mut msg = f.err.to_string();
            for cause in f.err.chain().skip(1).map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(f.code)
        }
    }
}
