//! Small 3D vector and triangle utilities shared by the voxelizer, the
//! placement sampler and the ray tracer.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; the zero vector maps to itself.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn min_element(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn max_element(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Aabb {
        points.into_iter().fold(Aabb::EMPTY, |b, &p| b.grow(p))
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn contains_strict(&self, p: Vec3) -> bool {
        p.x > self.min.x
            && p.y > self.min.y
            && p.z > self.min.z
            && p.x < self.max.x
            && p.y < self.max.y
            && p.z < self.max.z
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let d = (self.min - p).max(p - self.max).max(Vec3::ZERO);
        d.norm_squared()
    }

    /// Slab test; returns the entry parameter if the ray hits within `[0, t_max]`.
    pub fn ray_entry(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let ta = (self.min[a] - origin[a]) * inv_dir[a];
            let tb = (self.max[a] - origin[a]) * inv_dir[a];
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            // NaN from 0 * inf keeps the bound unchanged
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Triangle given by its three corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self { a, b, c }
    }

    /// Non-normalized normal (length = twice the area).
    pub fn scaled_normal(&self) -> Vec3 {
        (self.b - self.a).cross(self.c - self.a)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.scaled_normal().norm()
    }

    pub fn normal(&self) -> Vec3 {
        self.scaled_normal().normalized()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points([&self.a, &self.b, &self.c])
    }

    pub fn centroid(&self) -> Vec3 {
        (self.a + self.b + self.c) / 3.0
    }

    /// Moller-Trumbore intersection, two-sided. Returns the ray parameter.
    pub fn intersect_ray(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let p = dir.cross(e2);
        let det = e1.dot(p);
        if det.abs() < 1e-14 * e1.norm_squared().max(e2.norm_squared()) {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin - self.a;
        let u = s.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(e1);
        let v = dir.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some(e2.dot(q) * inv)
    }

    /// Closest point on the triangle to `p` (Ericson, Real-Time Collision Detection 5.1.5).
    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        let (a, b, c) = (self.a, self.b, self.c);
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(ap);
        let d2 = ac.dot(ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return a;
        }
        let bp = p - b;
        let d3 = ab.dot(bp);
        let d4 = ac.dot(bp);
        if d3 >= 0.0 && d4 <= d3 {
            return b;
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            return a + ab * (d1 / (d1 - d3));
        }
        let cp = p - c;
        let d5 = ab.dot(cp);
        let d6 = ac.dot(cp);
        if d6 >= 0.0 && d5 <= d6 {
            return c;
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            return a + ac * (d2 / (d2 - d6));
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
        }
        let denom = 1.0 / (va + vb + vc);
        a + ab * (vb * denom) + ac * (vc * denom)
    }

    pub fn distance_squared(&self, p: Vec3) -> f64 {
        (self.closest_point(p) - p).norm_squared()
    }

    /// Separating-axis overlap test against an axis-aligned cube (Akenine-Moller).
    /// Touching counts as overlapping.
    pub fn overlaps_box(&self, center: Vec3, half: Vec3) -> bool {
        let v0 = self.a - center;
        let v1 = self.b - center;
        let v2 = self.c - center;
        let edges = [v1 - v0, v2 - v1, v0 - v2];
        let axes = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];

        // nine edge cross products
        for e in edges {
            for u in axes {
                let axis = u.cross(e);
                if axis.norm_squared() < 1e-30 {
                    continue;
                }
                let p0 = v0.dot(axis);
                let p1 = v1.dot(axis);
                let p2 = v2.dot(axis);
                let r = half.x * axis.x.abs() + half.y * axis.y.abs() + half.z * axis.z.abs();
                let lo = p0.min(p1).min(p2);
                let hi = p0.max(p1).max(p2);
                if lo > r || hi < -r {
                    return false;
                }
            }
        }

        // box face normals
        for a in 0..3 {
            let lo = v0[a].min(v1[a]).min(v2[a]);
            let hi = v0[a].max(v1[a]).max(v2[a]);
            if lo > half[a] || hi < -half[a] {
                return false;
            }
        }

        // triangle plane
        let n = edges[0].cross(edges[1]);
        let d = n.dot(v0);
        let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
        d.abs() <= r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Triangle {
        Triangle::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        )
    }

    #[test]
    fn ray_hits_triangle_from_both_sides() {
        let t = tri();
        let down = t.intersect_ray(Vec3::new(0.2, 0.2, 1.0), Vec3::new(0.0, 0.0, -1.0));
        let up = t.intersect_ray(Vec3::new(0.2, 0.2, -2.0), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(down, Some(1.0));
        assert_eq!(up, Some(2.0));
        assert!(t
            .intersect_ray(Vec3::new(0.8, 0.8, 1.0), Vec3::new(0.0, 0.0, -1.0))
            .is_none());
    }

    #[test]
    fn closest_point_regions() {
        let t = tri();
        assert!((t.closest_point(Vec3::new(0.2, 0.2, 3.0)) - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-12);
        assert_eq!(t.closest_point(Vec3::new(-1.0, -1.0, 0.0)), Vec3::ZERO);
        let p = t.closest_point(Vec3::new(1.0, 1.0, 0.0));
        assert!((p - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn box_overlap_cases() {
        let t = tri();
        assert!(t.overlaps_box(Vec3::new(0.1, 0.1, 0.0), Vec3::splat(0.05)));
        assert!(!t.overlaps_box(Vec3::new(0.1, 0.1, 0.2), Vec3::splat(0.05)));
        // beyond the hypotenuse
        assert!(!t.overlaps_box(Vec3::new(0.7, 0.7, 0.0), Vec3::splat(0.1)));
        // touching face counts
        assert!(t.overlaps_box(Vec3::new(0.1, 0.1, 0.05), Vec3::splat(0.05)));
    }

    #[test]
    fn aabb_slab_test() {
        let b = Aabb {
            min: Vec3::ZERO,
            max: Vec3::splat(1.0),
        };
        let d = Vec3::new(1.0, 0.0, 0.0);
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        assert_eq!(b.ray_entry(Vec3::new(-1.0, 0.5, 0.5), inv, 10.0), Some(1.0));
        assert_eq!(b.ray_entry(Vec3::new(-1.0, 1.5, 0.5), inv, 10.0), None);
        assert_eq!(b.ray_entry(Vec3::new(-1.0, 0.5, 0.5), inv, 0.5), None);
    }
}
