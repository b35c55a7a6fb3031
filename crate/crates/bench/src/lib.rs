//! Benchmark fixtures.

use roomwave::fdtd::{derive_grid_params, FdtdConfig};
use roomwave::ga::GaConfig;
use roomwave::scene::voxelize;
use roomwave::{TriangleMesh, Vec3, VoxelGrid};

pub const SOURCE: Vec3 = Vec3::new(1.1, 0.9, 1.2);
pub const RECEIVER: Vec3 = Vec3::new(2.7, 2.1, 1.5);

/// A 4 x 3 x 2.5 m closed room.
pub fn room() -> TriangleMesh {
    let mut b = TriangleMesh::builder();
    b.add_box(Vec3::ZERO, Vec3::new(4.0, 3.0, 2.5), "wall", "room");
    b.build().unwrap()
}

pub fn ga_config(rays: usize) -> GaConfig {
    GaConfig {
        ray_count: rays,
        duration: 0.5,
        ..Default::default()
    }
}

pub fn fdtd_config(f_max: f64, duration: f64) -> FdtdConfig {
    FdtdConfig {
        f_max,
        duration,
        ..Default::default()
    }
}

pub fn room_grid(cfg: &FdtdConfig) -> VoxelGrid {
    voxelize(&room(), derive_grid_params(cfg).dx).unwrap()
}
