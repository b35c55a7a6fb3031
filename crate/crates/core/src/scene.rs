//! Scene geometry: triangle meshes, voxel grids for the wave solver and
//! collision-free source/receiver placement.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::Bvh;
use crate::geom::{Aabb, Triangle, Vec3};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read mesh {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: face index {index} out of range ({vertices} vertices)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        vertices: usize,
    },
    #[error("mesh has no faces")]
    NoFaces,
    #[error("all {0} triangles are degenerate")]
    DegenerateOnly(usize),
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("voxel size {dx} m too large: must be below {limit} m (smallest extent / 3)")]
    DxTooLarge { dx: f64, limit: f64 },
    #[error("voxel grid {dims:?} needs {required} bytes, above the cap of {cap} bytes")]
    MemoryCap {
        dims: [usize; 3],
        required: u64,
        cap: u64,
    },
    #[error("no valid positions: every lattice point violates clearance or lies outside the air region")]
    NoValidPositions,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh is not closed")]
    OpenMesh,
}

pub type Result<T> = std::result::Result<T, SceneError>;

/// Indexed triangle mesh with per-triangle material slot and object label.
#[derive(Debug, Clone, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Index into `material_names` per triangle.
    pub triangle_material: Vec<u32>,
    pub material_names: Vec<String>,
    /// Index into `labels` per triangle.
    pub triangle_label: Vec<u32>,
    pub labels: Vec<String>,
}

impl TriangleMesh {
    pub fn builder() -> MeshBuilder {
        MeshBuilder::default()
    }

    /// Checks the mesh invariants: indices in range, non-degenerate
    /// triangles and a bounding box with positive extent on every axis.
    pub fn validate(&self) -> Result<()> {
        let n = self.triangles.len();
        if self.triangle_material.len() != n || self.triangle_label.len() != n {
            return Err(SceneError::InvalidMesh(
                "per-triangle attribute lengths differ from triangle count".into(),
            ));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= self.vertices.len()) {
                return Err(SceneError::InvalidMesh(format!(
                    "triangle {i} references a missing vertex"
                )));
            }
            if self.triangle(i).area() <= degenerate_area(self.scale()) {
                return Err(SceneError::InvalidMesh(format!("triangle {i} is degenerate")));
            }
            if self.triangle_material[i] as usize >= self.material_names.len()
                || self.triangle_label[i] as usize >= self.labels.len()
            {
                return Err(SceneError::InvalidMesh(format!(
                    "triangle {i} has a dangling material or label"
                )));
            }
        }
        if n > 0 {
            let e = self.bounds().extent();
            if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
                return Err(SceneError::InvalidMesh(format!(
                    "bounding box extent {:?} is flat",
                    e.to_array()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        Triangle::new(
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        )
    }

    pub fn iter_triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.triangles.len()).map(|i| self.triangle(i))
    }

    /// Bounding box of the referenced vertices.
    pub fn bounds(&self) -> Aabb {
        self.triangles
            .iter()
            .flatten()
            .fold(Aabb::EMPTY, |b, &v| b.grow(self.vertices[v as usize]))
    }

    fn scale(&self) -> f64 {
        let b = Aabb::from_points(&self.vertices);
        if b.min.x.is_finite() {
            b.extent().max_element()
        } else {
            1.0
        }
    }

    pub fn label_of(&self, tri: usize) -> &str {
        &self.labels[self.triangle_label[tri] as usize]
    }

    pub fn material_of(&self, tri: usize) -> &str {
        &self.material_names[self.triangle_material[tri] as usize]
    }

    pub fn surface_area(&self) -> f64 {
        self.iter_triangles().map(|t| t.area()).sum()
    }

    /// True when every edge is shared by exactly two triangles with opposite
    /// orientation. Vertices are matched by position.
    pub fn is_closed(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        let key = |v: Vec3| {
            let q = 1e-9 * self.scale().max(1e-12);
            (
                (v.x / q).round() as i64,
                (v.y / q).round() as i64,
                (v.z / q).round() as i64,
            )
        };
        let mut edges: HashMap<_, i32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = key(self.vertices[t[k] as usize]);
                let b = key(self.vertices[t[(k + 1) % 3] as usize]);
                if a < b {
                    *edges.entry((a, b)).or_default() += 1;
                } else {
                    *edges.entry((b, a)).or_default() -= 1;
                }
            }
        }
        edges.values().all(|&c| c == 0)
    }

    /// Enclosed volume via the divergence theorem. Requires a closed,
    /// consistently oriented mesh.
    pub fn volume(&self) -> Result<f64> {
        if !self.is_closed() {
            return Err(SceneError::OpenMesh);
        }
        let v: f64 = self
            .iter_triangles()
            .map(|t| t.a.dot(t.b.cross(t.c)) / 6.0)
            .sum();
        Ok(v.abs())
    }

    pub fn bvh(&self) -> Bvh {
        Bvh::new(self.iter_triangles().collect())
    }
}

fn degenerate_area(scale: f64) -> f64 {
    1e-12 * scale * scale
}

/// Incremental mesh construction for programmatic scenes.
#[derive(Debug, Default)]
pub struct MeshBuilder {
    mesh: TriangleMesh,
    materials: HashMap<String, u32>,
    labels: HashMap<String, u32>,
}

impl MeshBuilder {
    fn material_index(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.materials.get(name) {
            return i;
        }
        let i = self.mesh.material_names.len() as u32;
        self.mesh.material_names.push(name.to_string());
        self.materials.insert(name.to_string(), i);
        i
    }

    fn label_index(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.labels.get(name) {
            return i;
        }
        let i = self.mesh.labels.len() as u32;
        self.mesh.labels.push(name.to_string());
        self.labels.insert(name.to_string(), i);
        i
    }

    pub fn add_vertex(&mut self, v: Vec3) -> u32 {
        self.mesh.vertices.push(v);
        (self.mesh.vertices.len() - 1) as u32
    }

    pub fn add_triangle(&mut self, idx: [u32; 3], material: &str, label: &str) -> &mut Self {
        let m = self.material_index(material);
        let l = self.label_index(label);
        self.mesh.triangles.push(idx);
        self.mesh.triangle_material.push(m);
        self.mesh.triangle_label.push(l);
        self
    }

    /// Quad `a b c d` (counter-clockwise seen from the side the normal points to).
    pub fn add_quad(&mut self, corners: [Vec3; 4], material: &str, label: &str) -> &mut Self {
        let i = corners.map(|c| self.add_vertex(c));
        self.add_triangle([i[0], i[1], i[2]], material, label);
        self.add_triangle([i[0], i[2], i[3]], material, label);
        self
    }

    /// Axis-aligned box with outward-facing, shared-vertex triangles.
    pub fn add_box(&mut self, min: Vec3, max: Vec3, material: &str, label: &str) -> &mut Self {
        let c = |x: bool, y: bool, z: bool| {
            Vec3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let mut idx = [0u32; 8];
        for (k, slot) in idx.iter_mut().enumerate() {
            *slot = self.add_vertex(c(k & 1 != 0, k & 2 != 0, k & 4 != 0));
        }
        // faces as (v0, v1, v2, v3) counter-clockwise from outside
        const FACES: [[usize; 4]; 6] = [
            [0, 4, 6, 2], // x-
            [1, 3, 7, 5], // x+
            [0, 1, 5, 4], // y-
            [2, 6, 7, 3], // y+
            [0, 2, 3, 1], // z-
            [4, 5, 7, 6], // z+
        ];
        for f in FACES {
            self.add_triangle([idx[f[0]], idx[f[1]], idx[f[2]]], material, label);
            self.add_triangle([idx[f[0]], idx[f[2]], idx[f[3]]], material, label);
        }
        self
    }

    pub fn build(&mut self) -> Result<TriangleMesh> {
        let mesh = std::mem::take(&mut self.mesh);
        self.materials.clear();
        self.labels.clear();
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Mesh plus load diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    /// Zero-area triangles dropped during loading.
    pub degenerate_dropped: usize,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<LoadedMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_obj(&text)
}

/// Parses the OBJ subset used for scenes: `v`, `f`, `g`/`o` and `usemtl`.
/// Polygons are fan-triangulated; group names become object labels.
pub fn parse_obj(text: &str) -> Result<LoadedMesh> {
    let mut b = MeshBuilder::default();
    let mut label = String::from("default");
    let mut material = String::from("default");
    let mut faces: Vec<([u32; 3], String, String)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let raw = raw.split('#').next().unwrap_or("");
        let mut tok = raw.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        match kind {
            "v" => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| SceneError::Parse {
                        line,
                        msg: format!("bad vertex: {e}"),
                    })?;
                if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
                    return Err(SceneError::Parse {
                        line,
                        msg: "vertex needs three finite coordinates".into(),
                    });
                }
                b.add_vertex(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let nv = b.mesh.vertices.len();
                let mut idx = Vec::new();
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| SceneError::Parse {
                        line,
                        msg: format!("bad face index '{t}'"),
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        nv as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved >= nv as i64 {
                        return Err(SceneError::IndexOutOfRange {
                            line,
                            index: i,
                            vertices: nv,
                        });
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(SceneError::Parse {
                        line,
                        msg: "face needs at least three vertices".into(),
                    });
                }
                for k in 1..idx.len() - 1 {
                    faces.push(([idx[0], idx[k], idx[k + 1]], material.clone(), label.clone()));
                }
            }
            "g" | "o" => {
                let name: Vec<&str> = tok.collect();
                label = if name.is_empty() {
                    "default".into()
                } else {
                    name.join(" ")
                };
            }
            "usemtl" => {
                let name: Vec<&str> = tok.collect();
                material = if name.is_empty() {
                    "default".into()
                } else {
                    name.join(" ")
                };
            }
            _ => {}
        }
    }

    if faces.is_empty() {
        return Err(SceneError::NoFaces);
    }
    let total = faces.len();
    let tol = degenerate_area(Aabb::from_points(&b.mesh.vertices).extent().max_element());
    let mut dropped = 0;
    for (idx, m, l) in faces {
        let t = Triangle::new(
            b.mesh.vertices[idx[0] as usize],
            b.mesh.vertices[idx[1] as usize],
            b.mesh.vertices[idx[2] as usize],
        );
        if t.area() <= tol {
            dropped += 1;
            continue;
        }
        b.add_triangle(idx, &m, &l);
    }
    if dropped == total {
        return Err(SceneError::DegenerateOnly(total));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} degenerate triangle(s)");
    }
    let mesh = b.build()?;
    Ok(LoadedMesh {
        mesh,
        degenerate_dropped: dropped,
    })
}

/// Serializes a mesh back to OBJ text (one group per label/material run).
pub fn write_obj(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    let mut current: Option<(u32, u32)> = None;
    for (i, t) in mesh.triangles.iter().enumerate() {
        let key = (mesh.triangle_label[i], mesh.triangle_material[i]);
        if current != Some(key) {
            writeln!(out, "g {}", mesh.labels[key.0 as usize])?;
            writeln!(out, "usemtl {}", mesh.material_names[key.1 as usize])?;
            current = Some(key);
        }
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    Air = 0,
    Solid = 1,
}

/// Marker in `cell_material` for air cells and for padding-shell cells that
/// no triangle touches.
pub const NO_MATERIAL: u32 = u32::MAX;

/// Regular voxel grid. Cell `(i, j, k)` spans
/// `origin + dx * [i, i+1) x [j, j+1) x [k, k+1)`; x varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub origin: Vec3,
    pub dx: f64,
    pub dims: [usize; 3],
    pub cell_state: Vec<CellState>,
    /// Material slot (mesh `triangle_material`) of the nearest intersecting
    /// triangle for solid cells, `NO_MATERIAL` otherwise.
    pub cell_material: Vec<u32>,
    /// Boundary admittance for air cells next to solid cells (zero elsewhere).
    pub admittance: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VoxelizeOptions {
    /// Specific admittance per triangle; `None` means rigid everywhere.
    pub triangle_admittance: Option<Vec<f64>>,
    /// Admittance of the padding shell around the bounding box.
    pub shell_admittance: f64,
    pub memory_cap_bytes: u64,
}

impl Default for VoxelizeOptions {
    fn default() -> Self {
        Self {
            triangle_admittance: None,
            shell_admittance: 0.0,
            memory_cap_bytes: 8 << 30,
        }
    }
}

const BYTES_PER_CELL: u64 = 1 + 4 + 8;

impl VoxelGrid {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.dx
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let r = (p - self.origin) / self.dx;
        let c = [r.x.floor(), r.y.floor(), r.z.floor()];
        if c.iter().zip(self.dims).all(|(&v, d)| v >= 0.0 && v < d as f64) {
            Some([c[0] as usize, c[1] as usize, c[2] as usize])
        } else {
            None
        }
    }

    pub fn is_air(&self, idx: usize) -> bool {
        self.cell_state[idx] == CellState::Air
    }

    pub fn is_shell(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || j == 0
            || k == 0
            || i + 1 == self.dims[0]
            || j + 1 == self.dims[1]
            || k + 1 == self.dims[2]
    }

    pub fn air_count(&self) -> usize {
        self.cell_state.iter().filter(|&&s| s == CellState::Air).count()
    }

    /// Empty free-field domain: air everywhere except a one-cell shell of
    /// the given admittance.
    pub fn free_field(origin: Vec3, dx: f64, dims: [usize; 3], shell_admittance: f64) -> Result<VoxelGrid> {
        if dims.iter().any(|&d| d < 3) || dx <= 0.0 || shell_admittance < 0.0 {
            return Err(SceneError::InvalidParameter(
                "free-field grid needs dims >= 3, dx > 0 and admittance >= 0".into(),
            ));
        }
        let n = dims[0] * dims[1] * dims[2];
        let mut g = VoxelGrid {
            origin,
            dx,
            dims,
            cell_state: vec![CellState::Air; n],
            cell_material: vec![NO_MATERIAL; n],
            admittance: vec![0.0; n],
        };
        let solid_admittance = vec![shell_admittance; n];
        for idx in 0..n {
            let [i, j, k] = g.coords(idx);
            if g.is_shell(i, j, k) {
                g.cell_state[idx] = CellState::Solid;
            }
        }
        g.assign_boundary_admittance(&solid_admittance);
        Ok(g)
    }

    /// Air cells take the mean admittance of their solid face neighbours.
    fn assign_boundary_admittance(&mut self, solid_admittance: &[f64]) {
        let [nx, ny, nz] = self.dims;
        let stride = [1isize, nx as isize, (nx * ny) as isize];
        let out: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|idx| {
                if self.cell_state[idx] != CellState::Air {
                    return 0.0;
                }
                let c = self.coords(idx);
                let mut sum = 0.0;
                let mut n = 0;
                for axis in 0..3 {
                    for dir in [-1isize, 1] {
                        let q = c[axis] as isize + dir;
                        if q < 0 || q >= [nx, ny, nz][axis] as isize {
                            continue;
                        }
                        let nb = (idx as isize + dir * stride[axis]) as usize;
                        if self.cell_state[nb] == CellState::Solid {
                            sum += solid_admittance[nb];
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    sum / n as f64
                } else {
                    0.0
                }
            })
            .collect();
        self.admittance = out;
    }

    /// Debug dump: header `dims` (3 x i32 LE), `dx` (f64 LE), `origin`
    /// (3 x f64 LE), then one byte per cell (0 air, 1 solid), x fastest.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for d in self.dims {
            out.write_all(&(d as i32).to_le_bytes())?;
        }
        out.write_all(&self.dx.to_le_bytes())?;
        for c in self.origin.to_array() {
            out.write_all(&c.to_le_bytes())?;
        }
        let body: Vec<u8> = self.cell_state.iter().map(|&s| s as u8).collect();
        out.write_all(&body)
    }
}

/// Conservative surface voxelization with rigid boundaries.
pub fn voxelize(mesh: &TriangleMesh, dx: f64) -> Result<VoxelGrid> {
    voxelize_with(mesh, dx, &VoxelizeOptions::default())
}

/// Conservative surface voxelization: a cell is solid iff a triangle
/// overlaps its cube. The grid is anchored so that the bounding-box minimum
/// lies just inside cell 1; cell layer 0 and the last layer form a padding
/// shell that is always solid, closing the domain.
pub fn voxelize_with(mesh: &TriangleMesh, dx: f64, opts: &VoxelizeOptions) -> Result<VoxelGrid> {
    if mesh.is_empty() {
        return Err(SceneError::EmptyMesh);
    }
    let bb = mesh.bounds();
    let limit = bb.extent().min_element() / 3.0;
    if !(dx > 0.0) || dx >= limit {
        return Err(SceneError::DxTooLarge { dx, limit });
    }
    if let Some(a) = &opts.triangle_admittance {
        if a.len() != mesh.len() || a.iter().any(|&v| !(v >= 0.0)) {
            return Err(SceneError::InvalidParameter(
                "triangle admittance must be nonnegative, one per triangle".into(),
            ));
        }
    }
    if !(opts.shell_admittance >= 0.0) {
        return Err(SceneError::InvalidParameter("shell admittance must be >= 0".into()));
    }

    let delta = 1e-3 * dx;
    let origin = bb.min - Vec3::splat(2.0 * dx - delta);
    let ext = bb.extent();
    let dims = [ext.x, ext.y, ext.z].map(|e| ((e - delta) / dx).floor().max(0.0) as usize + 4);
    let cells = (dims[0] * dims[1] * dims[2]) as u64;
    let required = cells * BYTES_PER_CELL;
    if required > opts.memory_cap_bytes {
        return Err(SceneError::MemoryCap {
            dims,
            required,
            cap: opts.memory_cap_bytes,
        });
    }

    let n = cells as usize;
    let mut grid = VoxelGrid {
        origin,
        dx,
        dims,
        cell_state: vec![CellState::Air; n],
        cell_material: vec![NO_MATERIAL; n],
        admittance: vec![0.0; n],
    };

    // candidate hits per triangle, merged deterministically afterwards
    let half = Vec3::splat(0.5 * dx);
    let hits: Vec<Vec<(usize, f64)>> = (0..mesh.len())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangle(t);
            let tb = tri.bounds();
            let lo = ((tb.min - origin) / dx).to_array().map(|v| (v.floor() as isize - 1).max(0) as usize);
            let hi = ((tb.max - origin) / dx).to_array();
            let hi = [0, 1, 2].map(|a| (hi[a].floor() as usize + 1).min(dims[a] - 1));
            let mut out = Vec::new();
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let c = grid.cell_center(i, j, k);
                        if tri.overlaps_box(c, half) {
                            out.push((grid.index(i, j, k), tri.distance_squared(c)));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut best = vec![f64::INFINITY; n];
    let mut solid_adm = vec![opts.shell_admittance; n];
    for (t, list) in hits.iter().enumerate() {
        for &(idx, d2) in list {
            grid.cell_state[idx] = CellState::Solid;
            if d2 < best[idx] {
                best[idx] = d2;
                grid.cell_material[idx] = mesh.triangle_material[t];
                solid_adm[idx] = opts
                    .triangle_admittance
                    .as_ref()
                    .map_or(0.0, |a| a[t]);
            }
        }
    }
    for idx in 0..n {
        let [i, j, k] = grid.coords(idx);
        if grid.is_shell(i, j, k) {
            grid.cell_state[idx] = CellState::Solid;
        }
    }
    grid.assign_boundary_admittance(&solid_adm);
    Ok(grid)
}

/// Collision-free source/receiver positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementSet {
    pub sources: Vec<Vec3>,
    pub receivers: Vec<Vec3>,
    pub pairs: Vec<(usize, usize)>,
    pub clearance: f64,
}

/// Majority vote of three near-axis parity rays. The directions carry a
/// small irrational tilt so lattice points do not graze shared edges.
pub fn point_in_air(bvh: &Bvh, p: Vec3) -> bool {
    const DIRS: [Vec3; 3] = [
        Vec3::new(1.0, 1.414_213_562e-4, 1.732_050_808e-4),
        Vec3::new(2.236_067_977e-4, 1.0, 1.414_213_562e-4),
        Vec3::new(1.732_050_808e-4, 2.236_067_977e-4, 1.0),
    ];
    let odd = DIRS
        .iter()
        .filter(|d| bvh.count_crossings(p, d.normalized(), 1e-12) % 2 == 1)
        .count();
    odd >= 2
}

/// Lattice sampling with pitch `grid_spacing`: points `bbox_min + k*spacing`
/// (k >= 1) strictly inside the bounding box, kept iff inside the enclosed
/// air region and at least `clearance` from every triangle.
pub fn sample_placements(mesh: &TriangleMesh, grid_spacing: f64, clearance: f64) -> Result<PlacementSet> {
    if !(grid_spacing > 0.0) || !(clearance >= 0.0) {
        return Err(SceneError::InvalidParameter(
            "grid spacing must be > 0 and clearance >= 0".into(),
        ));
    }
    if mesh.is_empty() {
        return Err(SceneError::EmptyMesh);
    }
    let bb = mesh.bounds();
    let bvh = mesh.bvh();
    let axis_points = |a: usize| -> Vec<f64> {
        (1..)
            .map(|k| bb.min[a] + k as f64 * grid_spacing)
            .take_while(|&v| v < bb.max[a])
            .collect()
    };
    let (xs, ys, zs) = (axis_points(0), axis_points(1), axis_points(2));
    let mut candidates = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in &zs {
        for &y in &ys {
            candidates.extend(xs.iter().map(|&x| Vec3::new(x, y, z)));
        }
    }
    let kept: Vec<Vec3> = candidates
        .par_iter()
        .filter(|&&p| bb.contains_strict(p) && bvh.distance(p) >= clearance && point_in_air(&bvh, p))
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(SceneError::NoValidPositions);
    }
    let n = kept.len();
    let pairs = (0..n)
        .flat_map(|s| (0..n).filter(move |&r| r != s).map(move |r| (s, r)))
        .collect();
    Ok(PlacementSet {
        sources: kept.clone(),
        receivers: kept,
        pairs,
        clearance,
    })
}
