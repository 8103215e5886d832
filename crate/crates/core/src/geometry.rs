//! Small geometric kernel shared by the mesh, cage and attenuation code.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

#[inline]
pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

#[inline]
pub fn to_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[inline]
pub fn from_array(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.extent().norm()
        }
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    pub fn overlaps(&self, other: &Aabb, slack: f64) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] + slack && other.min[k] <= self.max[k] + slack)
    }
}

/// Unnormalized face normal (length = twice the area).
#[inline]
pub fn triangle_cross(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    (b - a).cross(&(c - a))
}

#[inline]
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * triangle_cross(a, b, c).norm()
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[inline]
fn orient(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a))
}

fn sign_eps(x: f64, eps: f64) -> i32 {
    if x > eps {
        1
    } else if x < -eps {
        -1
    } else {
        0
    }
}

/// Does segment `pq` touch triangle `abc`? Non-coplanar configurations only.
fn segment_hits_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, eps: f64) -> bool {
    let sp = sign_eps(orient(a, b, c, p), eps);
    let sq = sign_eps(orient(a, b, c, q), eps);
    if sp == sq && sp != 0 {
        return false;
    }
    if sp == 0 && sq == 0 {
        return false;
    }
    let s1 = sign_eps(orient(p, q, a, b), eps);
    let s2 = sign_eps(orient(p, q, b, c), eps);
    let s3 = sign_eps(orient(p, q, c, a), eps);
    let pos = (s1 >= 0) && (s2 >= 0) && (s3 >= 0);
    let neg = (s1 <= 0) && (s2 <= 0) && (s3 <= 0);
    pos || neg
}

fn coplanar_overlap(t1: [&Vec3; 3], t2: [&Vec3; 3], normal: &Vec3) -> bool {
    // Project onto the dominant plane and run 2D separating-axis tests.
    let k = normal.iamax();
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let p1: Vec<(f64, f64)> = t1.iter().map(|v| (v[i], v[j])).collect();
    let p2: Vec<(f64, f64)> = t2.iter().map(|v| (v[i], v[j])).collect();
    for poly in [&p1, &p2] {
        for e in 0..3 {
            let (ax, ay) = poly[e];
            let (bx, by) = poly[(e + 1) % 3];
            let axis = (-(by - ay), bx - ax);
            let proj = |pts: &Vec<(f64, f64)>| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &(x, y) in pts {
                    let d = x * axis.0 + y * axis.1;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                (lo, hi)
            };
            let (lo1, hi1) = proj(&p1);
            let (lo2, hi2) = proj(&p2);
            if hi1 < lo2 || hi2 < lo1 {
                return false;
            }
        }
    }
    true
}

/// Triangle-triangle intersection test, touching counts as intersecting.
pub fn triangles_intersect(t1: [&Vec3; 3], t2: [&Vec3; 3]) -> bool {
    let scale = t1
        .iter()
        .chain(t2.iter())
        .map(|v| v.amax())
        .fold(1.0, f64::max);
    let eps = 1e-14 * scale * scale * scale;
    let n2 = triangle_cross(t2[0], t2[1], t2[2]);
    let d: Vec<i32> = t1
        .iter()
        .map(|p| sign_eps(orient(t2[0], t2[1], t2[2], p), eps))
        .collect();
    if d.iter().all(|&s| s > 0) || d.iter().all(|&s| s < 0) {
        return false;
    }
    let e: Vec<i32> = t2
        .iter()
        .map(|p| sign_eps(orient(t1[0], t1[1], t1[2], p), eps))
        .collect();
    if e.iter().all(|&s| s > 0) || e.iter().all(|&s| s < 0) {
        return false;
    }
    if d.iter().all(|&s| s == 0) {
        return coplanar_overlap(t1, t2, &n2);
    }
    for k in 0..3 {
        if segment_hits_triangle(t1[k], t1[(k + 1) % 3], t2[0], t2[1], t2[2], eps) {
            return true;
        }
        if segment_hits_triangle(t2[k], t2[(k + 1) % 3], t1[0], t1[1], t1[2], eps) {
            return true;
        }
    }
    false
}
