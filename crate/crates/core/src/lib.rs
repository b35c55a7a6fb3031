//! Hybrid wave/geometric room impulse response generation.

pub mod accel;
pub mod analysis;
pub mod calibrate;
pub mod fdtd;
pub mod ga;
pub mod geom;
pub mod hybrid;
pub mod materials;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod signal;

pub use analysis::{AnalysisError, DecayCurve};
pub use calibrate::{CalibrationError, CalibrationResult, CalibrationSetup};
pub use fdtd::{FdtdConfig, FdtdError};
pub use ga::{GaConfig, GaError};
pub use geom::{Aabb, Triangle, Vec3};
pub use hybrid::{CrossoverSpec, HybridError};
pub use materials::{EmbeddingTable, MaterialError, MaterialRecord, Surface};
pub use pipeline::{ManifestEntry, PipelineConfig, PipelineError};
pub use scene::{SceneError, TriangleMesh, VoxelGrid};
pub use signal::{ImpulseResponse, IrOrigin};
