use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::{Mat3, Vec3};

/// Flow map `Φ_s` of a velocity field, integrated with the classical
/// fixed-step fourth-order Runge–Kutta scheme.
#[derive(Debug, Clone, Copy)]
pub struct FlowMap<'a> {
    field: &'a VectorField,
    step: f64,
}

impl<'a> FlowMap<'a> {
    pub fn new(field: &'a VectorField, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Parameter(format!(
                "flow step must be positive, got {step}"
            )));
        }
        Ok(Self { field, step })
    }

    pub fn field(&self) -> &'a VectorField {
        self.field
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        self.field.evaluate(x).map_err(|e| match e {
            Error::OutOfDomain(p) => Error::DomainExit {
                time: t,
                position: p,
            },
            other => other,
        })
    }

    fn rk4(&self, x: &Vec3, t: f64, dt: f64) -> Result<Vec3> {
        let k1 = self.velocity(x, t)?;
        let k2 = self.velocity(&(x + k1 * (0.5 * dt)), t)?;
        let k3 = self.velocity(&(x + k2 * (0.5 * dt)), t)?;
        let k4 = self.velocity(&(x + k3 * dt), t)?;
        Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
    }

    /// `Φ_s(x)` using `⌈|s| / h⌉` equal steps. `Φ_0(x) = x` exactly.
    pub fn flow(&self, x: &Vec3, s: f64) -> Result<Vec3> {
        if !s.is_finite() {
            return Err(Error::Parameter(format!("flow time must be finite, got {s}")));
        }
        let steps = (s.abs() / self.step).ceil() as usize;
        if steps == 0 {
            return Ok(*x);
        }
        let dt = s / steps as f64;
        let mut y = *x;
        for k in 0..steps {
            y = self.rk4(&y, k as f64 * dt, dt)?;
        }
        Ok(y)
    }

    /// `Φ_s(x)` together with the variational Jacobian `∂Φ_s/∂x`, both
    /// advanced by the same Runge–Kutta stages.
    pub fn flow_with_jacobian(&self, x: &Vec3, s: f64) -> Result<(Vec3, Mat3)> {
        let steps = (s.abs() / self.step).ceil() as usize;
        let mut y = *x;
        let mut jac = Mat3::identity();
        if steps == 0 {
            return Ok((y, jac));
        }
        let dt = s / steps as f64;
        let grad = |p: &Vec3| self.field.gradient(p);
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = self.velocity(&y, t)?;
            let j1 = grad(&y)? * jac;
            let y2 = y + k1 * (0.5 * dt);
            let k2 = self.velocity(&y2, t)?;
            let j2 = grad(&y2)? * (jac + j1 * (0.5 * dt));
            let y3 = y + k2 * (0.5 * dt);
            let k3 = self.velocity(&y3, t)?;
            let j3 = grad(&y3)? * (jac + j2 * (0.5 * dt));
            let y4 = y + k3 * dt;
            let k4 = self.velocity(&y4, t)?;
            let j4 = grad(&y4)? * (jac + j3 * dt);
            y += (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
            jac += (j1 + (j2 + j3) * 2.0 + j4) * (dt / 6.0);
        }
        Ok((y, jac))
    }

    /// Trajectory nodes `Φ_{k T/n}(x)` for `k = 0..=n`, forward and backward.
    /// Both vectors start with `x` itself.
    pub fn trajectory(&self, x: &Vec3, horizon: f64, n: usize) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
        let dt = horizon / n as f64;
        let run = |sign: f64| -> Result<Vec<Vec3>> {
            let mut out = Vec::with_capacity(n + 1);
            let mut y = *x;
            out.push(y);
            for k in 0..n {
                y = self.rk4(&y, sign * k as f64 * dt, sign * dt)?;
                out.push(y);
            }
            Ok(out)
        };
        Ok((run(1.0)?, run(-1.0)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GridField, Preset};
    use crate::rng;
    use rand::Rng;

    #[test]
    fn zero_time_is_identity() {
        let f: VectorField = Preset::Abc {
            a: 1.0,
            b: 1.0,
            c: 1.0,
        }
        .into();
        let m = FlowMap::new(&f, 1e-3).unwrap();
        let x = Vec3::new(0.3, 0.2, 0.1);
        assert_eq!(m.flow(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn constant_drift_is_a_translation() {
        let f: VectorField = Preset::Constant {
            velocity: Vec3::new(1.0, 0.0, 0.0),
        }
        .into();
        let m = FlowMap::new(&f, 1e-3).unwrap();
        let y = m.flow(&Vec3::zeros(), 3.0).unwrap();
        assert!((y - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_preserves_radius() {
        let f: VectorField = Preset::Rotation {
            omega: Vec3::new(0.0, 0.0, 1.0),
        }
        .into();
        let m = FlowMap::new(&f, 1e-3).unwrap();
        let x = Vec3::new(1.0, 0.5, -0.2);
        for s in [-10.0, -3.3, 0.5, 10.0] {
            let y = m.flow(&x, s).unwrap();
            assert!((y.norm() - x.norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn abc_flow_preserves_volume() {
        let f: VectorField = Preset::Abc {
            a: 1.0,
            b: 0.8,
            c: 0.6,
        }
        .into();
        let m = FlowMap::new(&f, 1e-3).unwrap();
        let mut r = rng(5);
        for _ in 0..10 {
            let x = Vec3::new(r.random(), r.random(), r.random());
            let (_, jac) = m.flow_with_jacobian(&x, 1.0).unwrap();
            let det = jac.determinant();
            assert!((det - 1.0).abs() < 1e-6, "det = {det}");
        }
    }

    #[test]
    fn grid_exit_reports_time() {
        let g = GridField::sample(
            &Preset::Constant {
                velocity: Vec3::new(1.0, 0.0, 0.0),
            },
            [3, 3, 3],
            Vec3::new(-1.0, -1.0, -1.0),
            Vec3::new(1.0, 1.0, 1.0),
        )
        .unwrap();
        let f = VectorField::Grid(g);
        let m = FlowMap::new(&f, 0.01).unwrap();
        match m.flow(&Vec3::zeros(), 5.0) {
            Err(Error::DomainExit { time, .. }) => assert!(time > 0.9 && time < 1.01),
            other => panic!("expected domain exit, got {other:?}"),
        }
    }
}
