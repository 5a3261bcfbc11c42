//! Capsules (spherocylinders) and quadrature over them.
//!
//! A capsule with center `x`, radius `R`, half-length `L ≥ R` and unit
//! direction `e` is the open set of points within distance `R` of the core
//! segment `[x - (L-R)e, x + (L-R)e]`. When `L = R` it is the ball `B_R(x)`.

mod quadrature;

pub use quadrature::{average, integrate, integrate_vec, QuadratureRule, QuadratureSpec};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CapsuleRecord", into = "CapsuleRecord")]
pub struct Capsule {
    center: Vec3,
    radius: f64,
    half_length: f64,
    direction: Vec3,
}

/// Wire form: `{"center": [x, y, z], "R": .., "L": .., "e": [e1, e2, e3]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapsuleRecord {
    pub center: [f64; 3],
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub e: [f64; 3],
}

impl TryFrom<CapsuleRecord> for Capsule {
    type Error = Error;

    fn try_from(r: CapsuleRecord) -> Result<Self> {
        Capsule::new(r.center.into(), r.radius, r.half_length, r.e.into())
    }
}

impl From<Capsule> for CapsuleRecord {
    fn from(c: Capsule) -> Self {
        CapsuleRecord {
            center: c.center.into(),
            radius: c.radius,
            half_length: c.half_length,
            e: c.direction.into(),
        }
    }
}

impl Capsule {
    /// `direction` is normalised; it must be nonzero.
    pub fn new(center: Vec3, radius: f64, half_length: f64, direction: Vec3) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return param(format!("capsule radius must be positive, got {radius}"));
        }
        if !(half_length >= radius && half_length.is_finite()) {
            return param(format!(
                "capsule half-length {half_length} must be at least the radius {radius}"
            ));
        }
        if !center.iter().all(|v| v.is_finite()) {
            return param("capsule center must be finite");
        }
        let n = direction.norm();
        if !(n > 0.0 && n.is_finite()) {
            return param("capsule direction must be a nonzero vector");
        }
        Ok(Self {
            center,
            radius,
            half_length,
            direction: direction / n,
        })
    }

    pub fn ball(center: Vec3, radius: f64) -> Result<Self> {
        Self::new(center, radius, radius, Vec3::x())
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn is_ball(&self) -> bool {
        self.half_length == self.radius
    }

    /// Half-length of the core segment, `L - R`.
    pub fn core_half_length(&self) -> f64 {
        self.half_length - self.radius
    }

    pub fn segment(&self) -> (Vec3, Vec3) {
        let a = self.direction * self.core_half_length();
        (self.center - a, self.center + a)
    }

    pub fn distance_to_core(&self, y: &Vec3) -> f64 {
        let (p, q) = self.segment();
        point_segment_distance(y, &p, &q)
    }

    /// Strict membership: `dist(y, core) < R`.
    pub fn contains(&self, y: &Vec3) -> bool {
        self.distance_to_core(y) < self.radius
    }

    pub fn contains_closed(&self, y: &Vec3) -> bool {
        self.distance_to_core(y) <= self.radius
    }

    /// `λ C_{R,L,e}(x) = C_{λR, λL, e}(x)` for any `λ > 0`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return param(format!("scale factor must be positive, got {lambda}"));
        }
        Ok(Self {
            radius: lambda * self.radius,
            half_length: lambda * self.half_length,
            ..*self
        })
    }

    /// Dilation by `λ ≥ 1`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0) {
            return param(format!("dilation factor must be at least 1, got {lambda}"));
        }
        self.scale(lambda)
    }

    pub fn volume(&self) -> f64 {
        let r = self.radius;
        4.0 / 3.0 * PI * r.powi(3) + 2.0 * PI * r * r * self.core_half_length()
    }

    /// Exact test `dist(core_a, core_b) < R_a + R_b`.
    pub fn intersects(&self, other: &Capsule) -> bool {
        self.core_distance(other) < self.radius + other.radius
    }

    pub fn core_distance(&self, other: &Capsule) -> f64 {
        let (p1, q1) = self.segment();
        let (p2, q2) = other.segment();
        segment_segment_distance(&p1, &q1, &p2, &q2)
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let (p, q) = self.segment();
        let r = Vec3::repeat(self.radius);
        (p.inf(&q) - r, p.sup(&q) + r)
    }

    /// Rotation taking `e1` to the capsule direction. Columns are an
    /// orthonormal frame `(e, f1, f2)` that varies continuously with `e`
    /// away from `e = -e1`.
    pub fn frame(&self) -> Mat3 {
        rotation_from_e1(&self.direction)
    }

    /// Points `p + R d` for both core endpoints `p` and directions `d` on an
    /// `m × 2m` latitude-longitude grid in the capsule frame (poles included).
    /// Every extreme point of the capsule is within grid resolution of one.
    pub fn boundary_samples(&self, m: usize) -> Vec<Vec3> {
        let m = m.max(2);
        let frame = self.frame();
        let (p, q) = self.segment();
        let mut out = Vec::with_capacity(4 * (m + 1) * m);
        for i in 0..=m {
            let theta = PI * i as f64 / m as f64;
            let (ct, st) = (theta.cos(), theta.sin());
            let n_phi = if i == 0 || i == m { 1 } else { 2 * m };
            for j in 0..n_phi {
                let phi = PI * j as f64 / m as f64;
                let d = frame * Vec3::new(ct, st * phi.cos(), st * phi.sin());
                out.push(p + d * self.radius);
                out.push(q + d * self.radius);
            }
        }
        out
    }

    /// Smallest `K` with every boundary sample of `inner` in the closure of
    /// `K · self` (dilation about this capsule's center).
    pub fn containment_factor(&self, inner: &Capsule, m: usize) -> f64 {
        inner
            .boundary_samples(m)
            .iter()
            .map(|y| self.gauge(y))
            .fold(0.0, f64::max)
    }

    /// Smallest `λ ≥ 0` with `y` in the closure of `λC`; the gauge of the
    /// capsule about its center.
    pub fn gauge(&self, y: &Vec3) -> f64 {
        let d = y - self.center;
        let s = d.dot(&self.direction).abs();
        let rho = (d - self.direction * d.dot(&self.direction)).norm();
        let (r, a) = (self.radius, self.core_half_length());
        if a == 0.0 {
            return d.norm() / r;
        }
        if rho * a >= s * r {
            return rho / r;
        }
        // root of (R² - a²) λ² + 2 a s λ - (s² + ρ²) = 0 on [ρ/R, s/a)
        let num = s * s + rho * rho;
        let disc = (r * r * num - a * a * rho * rho).max(0.0);
        num / (a * s + disc.sqrt())
    }

    /// Parameter interval `t ≥ 0` on which `origin + t dir` is inside the
    /// capsule, or `None` when the ray misses it. `dir` must be a unit vector.
    pub fn ray_interval(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let e = self.direction;
        let a = self.core_half_length();
        let r2 = self.radius * self.radius;
        let o = origin - self.center;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut merge = |iv: Option<(f64, f64)>| {
            if let Some((t0, t1)) = iv {
                lo = lo.min(t0);
                hi = hi.max(t1);
            }
        };
        for sign in [-1.0, 1.0] {
            merge(ray_sphere(&(o - e * (sign * a)), dir, r2));
        }
        if a > 0.0 {
            let oe = o.dot(&e);
            let de = dir.dot(&e);
            let op = o - e * oe;
            let dp = dir - e * de;
            let qa = dp.norm_squared();
            let qb = 2.0 * op.dot(&dp);
            let qc = op.norm_squared() - r2;
            let radial = if qa == 0.0 {
                (qc < 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                (disc > 0.0).then(|| {
                    let sq = disc.sqrt();
                    ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa))
                })
            };
            let slab = if de == 0.0 {
                (oe.abs() <= a).then_some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                let t0 = (-a - oe) / de;
                let t1 = (a - oe) / de;
                Some((t0.min(t1), t0.max(t1)))
            };
            if let (Some(ra), Some(sl)) = (radial, slab) {
                let t0 = ra.0.max(sl.0);
                let t1 = ra.1.min(sl.1);
                if t0 < t1 {
                    merge(Some((t0, t1)));
                }
            }
        }
        let lo = lo.max(0.0);
        (lo < hi).then_some((lo, hi))
    }
}

fn ray_sphere(o: &Vec3, d: &Vec3, r2: f64) -> Option<(f64, f64)> {
    let b = o.dot(d);
    let c = o.norm_squared() - r2;
    let disc = b * b - c;
    (disc > 0.0).then(|| {
        let sq = disc.sqrt();
        (-b - sq, -b + sq)
    })
}

pub(crate) fn rotation_from_e1(e: &Vec3) -> Mat3 {
    let c = e.x;
    if c < -1.0 + 1e-12 {
        return Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0));
    }
    let v = Vec3::x().cross(e);
    let k = crate::fields::skew(&v);
    Mat3::identity() + k + k * k / (1.0 + c)
}

pub fn point_segment_distance(y: &Vec3, p: &Vec3, q: &Vec3) -> f64 {
    let d = q - p;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (y - p).norm();
    }
    let t = ((y - p).dot(&d) / len2).clamp(0.0, 1.0);
    (y - (p + d * t)).norm()
}

/// Minimum distance between segments `[p1, q1]` and `[p2, q2]` by clamped
/// minimisation of the squared-distance quadratic.
pub fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a == 0.0 && e == 0.0 {
        return r.norm();
    }
    if a == 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e == 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    let direct = (c1 - c2).norm();
    // parallel segments: the clamped solution above is exact only up to the
    // choice of s; the endpoint distances bound it from the other side
    if a > 0.0 && e > 0.0 && a * e - d1.dot(&d2).powi(2) <= 1e-14 * a * e {
        return direct
            .min(point_segment_distance(p1, p2, q2))
            .min(point_segment_distance(q1, p2, q2))
            .min(point_segment_distance(p2, p1, q1))
            .min(point_segment_distance(q2, p1, q1));
    }
    direct
}

/// Length of `{t ∈ [-l, l] : |x - t e1| < R}`:
/// `min{2√(R² - ρ²), (√(R² - ρ²) + l - |x1|)₊}` with `ρ² = x2² + x3²`, and `0`
/// once `ρ ≥ R`.
pub fn chord_length(radius: f64, l: f64, x: &Vec3) -> f64 {
    let rho2 = x.y * x.y + x.z * x.z;
    let r2 = radius * radius;
    if rho2 >= r2 {
        return 0.0;
    }
    let h = (r2 - rho2).sqrt();
    (2.0 * h).min((h + l - x.x.abs()).max(0.0))
}
