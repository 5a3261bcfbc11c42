//! Smooth 3D vector fields: an analytic catalog, gridded samples, and the
//! flow map of a field.

mod flow;
mod grid;
mod presets;

pub use flow::FlowMap;
pub use grid::GridField;
pub use presets::{catalog, gradient_x1x2, FieldCatalogEntry, Preset, Quadratic};
pub(crate) use presets::skew;

use crate::error::Result;
use crate::{Mat3, Vec3};

/// A velocity field with point evaluation and gradient access.
///
/// Both variants are immutable; every accessor is a pure function of its
/// arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Analytic(Preset),
    Grid(GridField),
}

impl From<Preset> for VectorField {
    fn from(p: Preset) -> Self {
        VectorField::Analytic(p)
    }
}

impl From<GridField> for VectorField {
    fn from(g: GridField) -> Self {
        VectorField::Grid(g)
    }
}

impl VectorField {
    pub fn evaluate(&self, x: &Vec3) -> Result<Vec3> {
        match self {
            VectorField::Analytic(p) => Ok(p.evaluate(x)),
            VectorField::Grid(g) => g.evaluate(x),
        }
    }

    /// `J[(i, j)] = ∂u_i/∂x_j`.
    pub fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        match self {
            VectorField::Analytic(p) => Ok(p.gradient(x)),
            VectorField::Grid(g) => g.gradient(x),
        }
    }

    pub fn curl(&self, x: &Vec3) -> Result<Vec3> {
        Ok(curl_of(&self.gradient(x)?))
    }

    pub fn divergence(&self, x: &Vec3) -> Result<f64> {
        Ok(self.gradient(x)?.trace())
    }

    /// `|∇u(x)|²` (squared Frobenius norm).
    pub fn dirichlet_density(&self, x: &Vec3) -> Result<f64> {
        Ok(self.gradient(x)?.norm_squared())
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        match self {
            VectorField::Analytic(_) => x.iter().all(|v| v.is_finite()),
            VectorField::Grid(g) => g.contains(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VectorField::Analytic(p) => p.name(),
            VectorField::Grid(_) => "grid",
        }
    }

    pub fn is_divergence_free(&self) -> bool {
        match self {
            VectorField::Analytic(p) => p.is_divergence_free(),
            VectorField::Grid(_) => false,
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            VectorField::Analytic(p) => p.lipschitz(),
            VectorField::Grid(_) => None,
        }
    }
}

pub fn curl_of(j: &Mat3) -> Vec3 {
    Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn shear() -> VectorField {
        Preset::Shear { rate: 1.0 }.into()
    }

    fn rotation() -> VectorField {
        Preset::Rotation {
            omega: Vec3::new(0.0, 0.0, 1.0),
        }
        .into()
    }

    fn curl_gaussian() -> Preset {
        Preset::CurlGaussian {
            amplitude: 1.5,
            width: 0.8,
            axis: Vec3::new(0.3, -0.5, 1.0),
            center: Vec3::new(0.1, 0.0, -0.2),
        }
    }

    #[test]
    fn evaluate_examples() {
        let c: VectorField = Preset::Constant {
            velocity: Vec3::new(2.0, 0.0, 0.0),
        }
        .into();
        assert_eq!(
            c.evaluate(&Vec3::new(5.0, -1.0, 0.0)).unwrap(),
            Vec3::new(2.0, 0.0, 0.0)
        );
        assert_eq!(
            shear().evaluate(&Vec3::new(0.0, 3.0, 0.0)).unwrap(),
            Vec3::new(3.0, 0.0, 0.0)
        );
    }

    #[test]
    fn gridded_shear_is_exact_for_linear_fields() {
        let g = GridField::sample(
            &Preset::Shear { rate: 1.0 },
            [5, 7, 4],
            Vec3::new(-1.0, -1.0, -1.0),
            Vec3::new(1.0, 1.0, 1.0),
        )
        .unwrap();
        let v = g.evaluate(&Vec3::new(0.25, 0.5, 0.0)).unwrap();
        assert!((v - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn grid_rejects_outside_points() {
        let g = GridField::sample(
            &Preset::Shear { rate: 1.0 },
            [3, 3, 3],
            Vec3::new(-1.0, -1.0, -1.0),
            Vec3::new(1.0, 1.0, 1.0),
        )
        .unwrap();
        assert!(matches!(
            g.evaluate(&Vec3::new(1.5, 0.0, 0.0)),
            Err(crate::Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn grid_nodes_reproduce_preset_bit_exactly() {
        let p = Preset::Abc {
            a: 1.0,
            b: 0.7,
            c: 0.3,
        };
        let g = GridField::sample(
            &p,
            [6, 5, 7],
            Vec3::new(-1.3, -0.7, 0.0),
            Vec3::new(2.1, 0.9, 3.3),
        )
        .unwrap();
        for k in 0..7 {
            for j in 0..5 {
                for i in 0..6 {
                    let x = g.node(i, j, k);
                    assert_eq!(g.evaluate(&x).unwrap(), p.evaluate(&x));
                }
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let j = shear().gradient(&Vec3::new(3.0, -2.0, 7.0)).unwrap();
        let mut expected = Mat3::zeros();
        expected[(0, 1)] = 1.0;
        assert_eq!(j, expected);

        let j = rotation().gradient(&Vec3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(j[(0, 1)], -1.0);
        assert_eq!(j[(1, 0)], 1.0);
        assert_eq!(j, -j.transpose());
    }

    #[test]
    fn curl_gaussian_gradient_matches_finite_differences() {
        let p = curl_gaussian();
        let mut r = rng(11);
        let h = 1e-4;
        for _ in 0..50 {
            let x = Vec3::new(
                r.random_range(-1.5..1.5),
                r.random_range(-1.5..1.5),
                r.random_range(-1.5..1.5),
            );
            let mut fd = Mat3::zeros();
            for m in 0..3 {
                let mut e = Vec3::zeros();
                e[m] = h;
                fd.set_column(m, &((p.evaluate(&(x + e)) - p.evaluate(&(x - e))) / (2.0 * h)));
            }
            let an = p.gradient(&x);
            assert!((fd - an).norm() / an.norm() < 1e-5);
        }
    }

    #[test]
    fn curl_examples() {
        let w = rotation().curl(&Vec3::new(-4.0, 1.0, 2.5)).unwrap();
        assert_eq!(w, Vec3::new(0.0, 0.0, 2.0));
        let c: VectorField = Preset::Constant {
            velocity: Vec3::new(1.0, 2.0, 3.0),
        }
        .into();
        assert_eq!(c.curl(&Vec3::new(1.0, 1.0, 1.0)).unwrap(), Vec3::zeros());
    }

    /// Vorticity of `curl(A g k)` derived by hand: `A (H k - (Δg) k)`.
    #[test]
    fn curl_gaussian_vorticity_matches_closed_form() {
        let (amp, w, k, c) = (1.5, 0.8, Vec3::new(0.3, -0.5, 1.0), Vec3::new(0.1, 0.0, -0.2));
        let field: VectorField = curl_gaussian().into();
        let mut r = rng(12);
        for _ in 0..20 {
            let x = Vec3::new(
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            );
            let d = x - c;
            let g = (-d.norm_squared() / (w * w)).exp();
            let w2 = w * w;
            let hk = d * (4.0 * d.dot(&k) / (w2 * w2)) * g - k * (2.0 / w2) * g;
            let lap = g * (4.0 * d.norm_squared() / (w2 * w2) - 6.0 / w2);
            let expected = (hk - k * lap) * amp;
            let got = field.curl(&x).unwrap();
            assert!((got - expected).norm() / expected.norm() < 1e-5);
        }
    }

    #[test]
    fn divergence_free_presets_have_traceless_gradients() {
        let presets = [
            Preset::Shear { rate: 1.0 },
            Preset::Rotation {
                omega: Vec3::new(0.3, 0.2, -1.0),
            },
            Preset::Abc {
                a: 1.0,
                b: 0.5,
                c: 0.25,
            },
            curl_gaussian(),
            Preset::PerturbedDrift {
                speed: 1.0,
                epsilon: 0.3,
                width: 0.7,
                axis: Vec3::new(0.0, 1.0, 1.0),
            },
            gradient_x1x2(),
        ];
        let mut r = rng(13);
        for p in presets {
            assert!(p.is_divergence_free());
            for _ in 0..1000 {
                let x = Vec3::new(
                    r.random_range(-3.0..3.0),
                    r.random_range(-3.0..3.0),
                    r.random_range(-3.0..3.0),
                );
                let j = p.gradient(&x);
                assert!(j.trace().abs() <= 1e-10, "{} at {x:?}", p.name());
                assert!(j.trace().abs() <= 1e-8 * j.norm() + f64::MIN_POSITIVE);
            }
        }
    }

    #[test]
    fn catalog_lists_required_members() {
        let names: Vec<_> = catalog().into_iter().map(|e| e.name).collect();
        for n in ["constant", "shear", "rotation", "abc", "curl_gaussian"] {
            assert!(names.iter().any(|m| m == n), "missing {n}");
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let f: VectorField = curl_gaussian().into();
        let x = Vec3::new(0.123, -0.456, 0.789);
        assert_eq!(f.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        assert_eq!(f.gradient(&x).unwrap(), f.gradient(&x).unwrap());
    }

    #[test]
    fn grid_file_roundtrip() {
        let g = GridField::sample(
            &curl_gaussian(),
            [4, 3, 5],
            Vec3::new(-1.0, -2.0, -3.0),
            Vec3::new(1.0, 2.0, 3.0),
        )
        .unwrap();
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..4], b"VF3D");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 4 + 12 + 48 + 8 * 3 * 60);
        assert_eq!(GridField::from_bytes(&bytes).unwrap(), g);
        assert!(GridField::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
