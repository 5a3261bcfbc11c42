use std::f64::consts::PI;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::geometry::Capsule;
use crate::quad::GaussLegendre;
use crate::{rng, Vec3};

/// How integrals over a capsule are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Rejection sampling in the bounding box.
    MonteCarlo { samples: usize, seed: u64 },
    /// Midpoints of the bounding-box cells whose center lies in the capsule.
    TensorGrid { resolution: usize },
    /// Product Gauss rule on the cylinder and the two hemispherical caps.
    Gauss { order: usize },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::MonteCarlo {
            samples: 100_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::MonteCarlo { samples, .. } if samples < 1 => {
                param("Monte Carlo sample count must be at least 1")
            }
            QuadratureSpec::TensorGrid { resolution } if resolution < 2 => {
                param("tensor-grid resolution must be at least 2")
            }
            QuadratureSpec::Gauss { order } if order < 1 => param("Gauss order must be at least 1"),
            _ => Ok(()),
        }
    }

    /// Same rule with the Monte Carlo seed replaced.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            QuadratureSpec::MonteCarlo { samples, .. } => {
                QuadratureSpec::MonteCarlo { samples, seed }
            }
            other => other,
        }
    }
}

/// Nodes and weights for integration over one capsule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

const CHUNK: usize = 2048;

impl QuadratureRule {
    pub fn new(c: &Capsule, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match *spec {
            QuadratureSpec::MonteCarlo { samples, seed } => monte_carlo(c, samples, seed),
            QuadratureSpec::TensorGrid { resolution } => tensor_grid(c, resolution),
            QuadratureSpec::Gauss { order } => gauss(c, order),
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of the weights: the rule's estimate of the volume.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted sum, evaluated in parallel over fixed-size chunks and reduced
    /// in chunk order so the result does not depend on thread scheduling.
    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Vec3) -> Result<f64> + Sync,
    {
        let partial: Vec<Result<f64>> = self
            .points
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(ps, ws)| {
                let mut s = 0.0;
                for (p, w) in ps.iter().zip(ws) {
                    s += w * f(p)?;
                }
                Ok(s)
            })
            .collect();
        let mut total = 0.0;
        for p in partial {
            total += p?;
        }
        Ok(total)
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        self.try_integrate(|y| Ok(f(y))).expect("infallible integrand")
    }

    /// `Σ w f / Σ w`. Exact for constants in every mode.
    pub fn try_average<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Vec3) -> Result<f64> + Sync,
    {
        let m = self.measure();
        if m == 0.0 {
            return param("quadrature rule has no points inside the capsule");
        }
        Ok(self.try_integrate(f)? / m)
    }

    pub fn average<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        self.try_average(|y| Ok(f(y)))
    }

    pub fn try_integrate_vec<F>(&self, f: F) -> Result<Vec3>
    where
        F: Fn(&Vec3) -> Result<Vec3> + Sync,
    {
        let partial: Vec<Result<Vec3>> = self
            .points
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(ps, ws)| {
                let mut s = Vec3::zeros();
                for (p, w) in ps.iter().zip(ws) {
                    s += f(p)? * *w;
                }
                Ok(s)
            })
            .collect();
        let mut total = Vec3::zeros();
        for p in partial {
            total += p?;
        }
        Ok(total)
    }
}

/// `∫_c f`.
pub fn integrate<F>(c: &Capsule, f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    Ok(QuadratureRule::new(c, spec)?.integrate(f))
}

/// `⨍_c f`.
pub fn average<F>(c: &Capsule, f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    QuadratureRule::new(c, spec)?.average(f)
}

pub fn integrate_vec<F>(c: &Capsule, f: F, spec: &QuadratureSpec) -> Result<Vec3>
where
    F: Fn(&Vec3) -> Vec3 + Sync,
{
    QuadratureRule::new(c, spec)?.try_integrate_vec(|y| Ok(f(y)))
}

fn monte_carlo(c: &Capsule, samples: usize, seed: u64) -> QuadratureRule {
    let (lo, hi) = c.bounding_box();
    let ext = hi - lo;
    let w = ext.x * ext.y * ext.z / samples as f64;
    let mut r = rng(seed);
    let mut points = Vec::new();
    for _ in 0..samples {
        let y = Vec3::new(
            lo.x + ext.x * r.random::<f64>(),
            lo.y + ext.y * r.random::<f64>(),
            lo.z + ext.z * r.random::<f64>(),
        );
        if c.contains(&y) {
            points.push(y);
        }
    }
    let weights = vec![w; points.len()];
    QuadratureRule { points, weights }
}

fn tensor_grid(c: &Capsule, n: usize) -> QuadratureRule {
    let (lo, hi) = c.bounding_box();
    let h = (hi - lo) / n as f64;
    let w = h.x * h.y * h.z;
    let mut points = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let y = lo + Vec3::new(
                    (i as f64 + 0.5) * h.x,
                    (j as f64 + 0.5) * h.y,
                    (k as f64 + 0.5) * h.z,
                );
                if c.contains(&y) {
                    points.push(y);
                }
            }
        }
    }
    let weights = vec![w; points.len()];
    QuadratureRule { points, weights }
}

fn gauss(c: &Capsule, n: usize) -> QuadratureRule {
    let gl = GaussLegendre::new(n);
    let frame = c.frame();
    let (r, a) = (c.radius(), c.core_half_length());
    let m = 2 * n;
    let dphi = 2.0 * PI / m as f64;
    let angles: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let phi = (k as f64 + 0.5) * dphi;
            (phi.cos(), phi.sin())
        })
        .collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |local: Vec3, w: f64| {
        points.push(c.center() + frame * local);
        weights.push(w);
    };
    if a > 0.0 {
        for (t, wt) in gl.on(-a, a) {
            for (rho, wr) in gl.on(0.0, r) {
                for &(cp, sp) in &angles {
                    push(Vec3::new(t, rho * cp, rho * sp), wt * wr * rho * dphi);
                }
            }
        }
    }
    for sign in [-1.0, 1.0] {
        for (s, ws) in gl.on(0.0, r) {
            for (mu, wm) in gl.on(0.0, 1.0) {
                let st = (1.0 - mu * mu).sqrt();
                for &(cp, sp) in &angles {
                    let local = Vec3::new(sign * (a + s * mu), s * st * cp, s * st * sp);
                    push(local, ws * s * s * wm * dphi);
                }
            }
        }
    }
    QuadratureRule { points, weights }
}
