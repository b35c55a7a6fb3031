//! Bounding volume hierarchy over a triangle soup.
//!
//! Used for nearest-hit ray casts (ray tracer), occlusion queries
//! (direct sound, diffuse rain, image-source validation), hit counting
//! (inside/outside parity) and point-to-mesh distance (placement clearance).

use crate::geom::{Aabb, Triangle, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // leaf: start..start+count into `order`; inner: left child = self + 1, right = `right`
    start: u32,
    count: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<Triangle>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let centroids: Vec<Vec3> = triangles.iter().map(Triangle::centroid).collect();
        let bounds: Vec<Aabb> = triangles.iter().map(Triangle::bounds).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build(&mut nodes, &mut order, 0, &centroids, &bounds);
        }
        Self {
            triangles,
            order,
            nodes,
        }
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Visits every leaf whose box is hit by the ray within `[0, t_max]`.
    /// The visitor returns a new `t_max` (used for nearest-hit pruning).
    fn walk_ray(&self, origin: Vec3, dir: Vec3, mut t_max: f64, mut visit: impl FnMut(u32, f64) -> f64) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = Vec::with_capacity(64);
        stack.push(0u32);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if node.bounds.ray_entry(origin, inv, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &tri in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    t_max = visit(tri, t_max);
                }
            } else {
                stack.push(node.right);
                stack.push(idx + 1);
            }
        }
    }

    /// Nearest hit with `t > t_min`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        self.walk_ray(origin, dir, t_max, |tri, limit| {
            if let Some(t) = self.triangles[tri as usize].intersect_ray(origin, dir) {
                if t > t_min && t < limit {
                    best = Some(Hit { t, triangle: tri });
                    return t;
                }
            }
            limit
        });
        best
    }

    /// True if any triangle blocks the open segment between `a` and `b`
    /// (endpoints shrunk by `eps`).
    pub fn occluded(&self, a: Vec3, b: Vec3, eps: f64) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * eps {
            return false;
        }
        let dir = d / len;
        let mut blocked = false;
        self.walk_ray(a, dir, len - eps, |tri, limit| {
            if blocked {
                return limit;
            }
            if let Some(t) = self.triangles[tri as usize].intersect_ray(a, dir) {
                if t > eps && t < len - eps {
                    blocked = true;
                    return -1.0;
                }
            }
            limit
        });
        blocked
    }

    /// Number of triangles crossed by the half-line `origin + t*dir`, `t > eps`.
    pub fn count_crossings(&self, origin: Vec3, dir: Vec3, eps: f64) -> usize {
        let mut n = 0;
        self.walk_ray(origin, dir, f64::INFINITY, |tri, limit| {
            if let Some(t) = self.triangles[tri as usize].intersect_ray(origin, dir) {
                if t > eps {
                    n += 1;
                }
            }
            limit
        });
        n
    }

    /// Exact minimum distance from `p` to the mesh, with box pruning.
    pub fn distance(&self, p: Vec3) -> f64 {
        if self.nodes.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        let mut stack = vec![0u32];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if node.bounds.distance_squared(p) >= best {
                continue;
            }
            if node.count > 0 {
                for &tri in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    best = best.min(self.triangles[tri as usize].distance_squared(p));
                }
            } else {
                // nearer child last so it's popped first
                let l = idx + 1;
                let r = node.right;
                let dl = self.nodes[l as usize].bounds.distance_squared(p);
                let dr = self.nodes[r as usize].bounds.distance_squared(p);
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best.sqrt()
    }
}

fn build(nodes: &mut Vec<Node>, order: &mut [u32], offset: u32, centroids: &[Vec3], bounds: &[Aabb]) -> u32 {
    let idx = nodes.len() as u32;
    let bb = order
        .iter()
        .fold(Aabb::EMPTY, |b, &t| b.union(bounds[t as usize]));
    nodes.push(Node {
        bounds: bb,
        start: offset,
        count: order.len() as u32,
        right: 0,
    });
    if order.len() <= LEAF_SIZE {
        return idx;
    }
    let cb = order
        .iter()
        .fold(Aabb::EMPTY, |b, &t| b.grow(centroids[t as usize]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] <= 0.0 {
        return idx;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    nodes[idx as usize].count = 0;
    build(nodes, left, offset, centroids, bounds);
    let r = build(nodes, right, offset + mid as u32, centroids, bounds);
    nodes[idx as usize].right = r;
    idx
}
