use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::{Mat3, Vec3};

/// Closed-form smooth vector fields with analytic gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// `u(x) = v`.
    Constant { velocity: Vec3 },
    /// `u(x) = (rate * x2, 0, 0)`.
    Shear { rate: f64 },
    /// `u(x) = omega × x`.
    Rotation { omega: Vec3 },
    /// Arnold–Beltrami–Childress flow.
    Abc { a: f64, b: f64, c: f64 },
    /// `u = curl(A g k)` with `g = exp(-|x - x0|² / w²)`.
    CurlGaussian {
        amplitude: f64,
        width: f64,
        axis: Vec3,
        center: Vec3,
    },
    /// The vector potential `A g k` itself (not divergence-free).
    GaussianPotential {
        amplitude: f64,
        width: f64,
        axis: Vec3,
        center: Vec3,
    },
    /// `u = speed e1 + curl(eps g k)`, a drift with a small localized swirl.
    PerturbedDrift {
        speed: f64,
        epsilon: f64,
        width: f64,
        axis: Vec3,
    },
    /// `u_i(x) = c_i + (B x)_i + xᵀ Q_i x`.
    Polynomial(Quadratic),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub constant: Vec3,
    pub linear: Mat3,
    pub quadratic: [Mat3; 3],
}

impl Quadratic {
    pub fn affine(constant: Vec3, linear: Mat3) -> Self {
        Self {
            constant,
            linear,
            quadratic: [Mat3::zeros(); 3],
        }
    }

    fn evaluate(&self, x: &Vec3) -> Vec3 {
        let mut v = self.constant + self.linear * x;
        for i in 0..3 {
            v[i] += x.dot(&(self.quadratic[i] * x));
        }
        v
    }

    fn gradient(&self, x: &Vec3) -> Mat3 {
        let mut j = self.linear;
        for i in 0..3 {
            let q = &self.quadratic[i];
            let row = (q + q.transpose()) * x;
            for m in 0..3 {
                j[(i, m)] += row[m];
            }
        }
        j
    }

    fn is_divergence_free(&self) -> bool {
        // div u = tr B + sum_i ((Q_i + Q_iᵀ) x)_i, linear in x
        if self.linear.trace() != 0.0 {
            return false;
        }
        (0..3).all(|m| {
            (0..3)
                .map(|i| self.quadratic[i][(i, m)] + self.quadratic[i][(m, i)])
                .sum::<f64>()
                == 0.0
        })
    }
}

/// Skew matrix `[k]×` with `[k]× v = k × v`.
pub(crate) fn skew(k: &Vec3) -> Mat3 {
    Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0)
}

struct Gaussian {
    g: f64,
    grad: Vec3,
    hess: Mat3,
}

fn gaussian(x: &Vec3, center: &Vec3, width: f64) -> Gaussian {
    let d = x - center;
    let w2 = width * width;
    let g = (-d.norm_squared() / w2).exp();
    let grad = d * (-2.0 * g / w2);
    let hess = (d * d.transpose() * (4.0 / (w2 * w2)) - Mat3::identity() * (2.0 / w2)) * g;
    Gaussian { g, grad, hess }
}

impl Preset {
    pub fn evaluate(&self, x: &Vec3) -> Vec3 {
        match self {
            Preset::Constant { velocity } => *velocity,
            Preset::Shear { rate } => Vec3::new(rate * x.y, 0.0, 0.0),
            Preset::Rotation { omega } => omega.cross(x),
            Preset::Abc { a, b, c } => Vec3::new(
                a * x.z.sin() + c * x.y.cos(),
                b * x.x.sin() + a * x.z.cos(),
                c * x.y.sin() + b * x.x.cos(),
            ),
            Preset::CurlGaussian {
                amplitude,
                width,
                axis,
                center,
            } => gaussian(x, center, *width).grad.cross(axis) * *amplitude,
            Preset::GaussianPotential {
                amplitude,
                width,
                axis,
                center,
            } => axis * (amplitude * gaussian(x, center, *width).g),
            Preset::PerturbedDrift {
                speed,
                epsilon,
                width,
                axis,
            } => {
                Vec3::new(*speed, 0.0, 0.0)
                    + gaussian(x, &Vec3::zeros(), *width).grad.cross(axis) * *epsilon
            }
            Preset::Polynomial(p) => p.evaluate(x),
        }
    }

    /// Jacobian with `J[(i, j)] = ∂u_i/∂x_j`.
    pub fn gradient(&self, x: &Vec3) -> Mat3 {
        match self {
            Preset::Constant { .. } => Mat3::zeros(),
            Preset::Shear { rate } => {
                let mut j = Mat3::zeros();
                j[(0, 1)] = *rate;
                j
            }
            Preset::Rotation { omega } => skew(omega),
            Preset::Abc { a, b, c } => Matrix3::new(
                0.0,
                -c * x.y.sin(),
                a * x.z.cos(),
                b * x.x.cos(),
                0.0,
                -a * x.z.sin(),
                -b * x.x.sin(),
                c * x.y.cos(),
                0.0,
            ),
            // u = ∇g × k = -[k]× ∇g, so ∇u = -[k]× H
            Preset::CurlGaussian {
                amplitude,
                width,
                axis,
                center,
            } => -skew(axis) * gaussian(x, center, *width).hess * *amplitude,
            Preset::GaussianPotential {
                amplitude,
                width,
                axis,
                center,
            } => axis * gaussian(x, center, *width).grad.transpose() * *amplitude,
            Preset::PerturbedDrift {
                epsilon,
                width,
                axis,
                ..
            } => -skew(axis) * gaussian(x, &Vec3::zeros(), *width).hess * *epsilon,
            Preset::Polynomial(p) => p.gradient(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::Shear { .. } => "shear",
            Preset::Rotation { .. } => "rotation",
            Preset::Abc { .. } => "abc",
            Preset::CurlGaussian { .. } => "curl_gaussian",
            Preset::GaussianPotential { .. } => "gaussian_potential",
            Preset::PerturbedDrift { .. } => "perturbed_drift",
            Preset::Polynomial(_) => "polynomial",
        }
    }

    pub fn is_divergence_free(&self) -> bool {
        match self {
            Preset::GaussianPotential { .. } => false,
            Preset::Polynomial(p) => p.is_divergence_free(),
            _ => true,
        }
    }

    /// Global Lipschitz constant of `u` when one is known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Preset::Constant { .. } => Some(0.0),
            Preset::Shear { rate } => Some(rate.abs()),
            Preset::Rotation { omega } => Some(omega.norm()),
            Preset::Abc { a, b, c } => Some((2.0 * (a * a + b * b + c * c)).sqrt()),
            Preset::Polynomial(p) if p.quadratic.iter().all(|q| q.iter().all(|&v| v == 0.0)) => {
                Some(p.linear.norm())
            }
            _ => None,
        }
    }

    /// Builds a preset from a catalog name and a parameter map. Missing
    /// parameters take the catalog defaults.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
        let axis = || {
            let k = Vec3::new(get("kx", 0.0), get("ky", 0.0), get("kz", 1.0));
            if k.norm() == 0.0 {
                param("axis (kx, ky, kz) must be nonzero")
            } else {
                Ok(k)
            }
        };
        let center = || Vec3::new(get("cx", 0.0), get("cy", 0.0), get("cz", 0.0));
        let width = || {
            let w = get("width", 1.0);
            if w > 0.0 {
                Ok(w)
            } else {
                param("width must be positive")
            }
        };
        Ok(match name {
            "constant" => Preset::Constant {
                velocity: Vec3::new(get("U", 1.0), 0.0, 0.0),
            },
            "zero" => Preset::Constant {
                velocity: Vec3::zeros(),
            },
            "shear" => Preset::Shear {
                rate: get("rate", 1.0),
            },
            "rotation" => Preset::Rotation {
                omega: Vec3::new(get("wx", 0.0), get("wy", 0.0), get("wz", 1.0)),
            },
            "abc" => Preset::Abc {
                a: get("A", 1.0),
                b: get("B", 1.0),
                c: get("C", 1.0),
            },
            "curl_gaussian" => Preset::CurlGaussian {
                amplitude: get("amplitude", 1.0),
                width: width()?,
                axis: axis()?,
                center: center(),
            },
            "gaussian_potential" => Preset::GaussianPotential {
                amplitude: get("amplitude", 1.0),
                width: width()?,
                axis: axis()?,
                center: center(),
            },
            "perturbed_drift" => Preset::PerturbedDrift {
                speed: get("U", 1.0),
                epsilon: get("epsilon", 0.01),
                width: width()?,
                axis: axis()?,
            },
            "gradient_x1x2" => gradient_x1x2(),
            other => return param(format!("unknown field preset '{other}'")),
        })
    }
}

/// `u = ∇(x1 x2) = (x2, x1, 0)`.
pub fn gradient_x1x2() -> Preset {
    let mut b = Mat3::zeros();
    b[(0, 1)] = 1.0;
    b[(1, 0)] = 1.0;
    Preset::Polynomial(Quadratic::affine(Vec3::zeros(), b))
}

/// Catalog metadata describing a preset family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCatalogEntry {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub divergence_free: bool,
    pub decaying: bool,
    pub lipschitz: Option<f64>,
}

pub fn catalog() -> Vec<FieldCatalogEntry> {
    let entries: [(&str, &[(&str, f64)], bool); 8] = [
        ("constant", &[("U", 1.0)], false),
        ("shear", &[("rate", 1.0)], false),
        ("rotation", &[("wx", 0.0), ("wy", 0.0), ("wz", 1.0)], false),
        ("abc", &[("A", 1.0), ("B", 1.0), ("C", 1.0)], false),
        (
            "curl_gaussian",
            &[("amplitude", 1.0), ("width", 1.0), ("kz", 1.0)],
            true,
        ),
        (
            "gaussian_potential",
            &[("amplitude", 1.0), ("width", 1.0), ("kz", 1.0)],
            true,
        ),
        (
            "perturbed_drift",
            &[("U", 1.0), ("epsilon", 0.01), ("width", 1.0), ("kz", 1.0)],
            false,
        ),
        ("gradient_x1x2", &[], false),
    ];
    entries
        .iter()
        .map(|(name, params, decaying)| {
            let parameters: BTreeMap<String, f64> =
                params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            let preset = Preset::from_name(name, &parameters).expect("catalog defaults are valid");
            FieldCatalogEntry {
                name: name.to_string(),
                divergence_free: preset.is_divergence_free(),
                decaying: *decaying,
                lipschitz: preset.lipschitz(),
                parameters,
            }
        })
        .collect()
}
