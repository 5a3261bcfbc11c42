//! The drift-Poisson (Oseen) fundamental solution, its bounds, a
//! Biot–Savart operator with a smooth cutoff, and a manufactured-solution
//! harness for the local `Lᵖ` estimate.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::VectorField;
use crate::geometry::{rotation_from_e1, Capsule, QuadratureRule, QuadratureSpec};
use crate::quad::GaussLegendre;
use crate::{Mat3, Vec3};

/// `Γ(x) = e^{-λ(r - x1)} / (4πνr)`, solving `b·∇Γ - νΔΓ = δ₀` with
/// `b = U e1` and `λ = U/(2ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseenKernel {
    nu: f64,
    speed: f64,
    lambda: f64,
}

/// Values of `Γ` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelJet {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
}

impl OseenKernel {
    pub fn new(nu: f64, speed: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return param(format!("viscosity must be positive, got {nu}"));
        }
        if !(speed >= 0.0 && speed.is_finite()) {
            return param(format!("drift speed must be nonnegative, got {speed}"));
        }
        Ok(Self {
            nu,
            speed,
            lambda: speed / (2.0 * nu),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn drift(&self) -> Vec3 {
        Vec3::new(self.speed, 0.0, 0.0)
    }

    fn polar(x: &Vec3) -> Result<(f64, f64)> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Singular);
        }
        // r - x1 without cancellation near the positive axis
        let gap = if x.x > 0.0 {
            (x.y * x.y + x.z * x.z) / (r + x.x)
        } else {
            r - x.x
        };
        Ok((r, gap))
    }

    pub fn gamma(&self, x: &Vec3) -> Result<f64> {
        let (r, gap) = Self::polar(x)?;
        Ok((-self.lambda * gap).exp() / (4.0 * PI * self.nu * r))
    }

    /// `∇ log Γ = -(1/r + λ) x̂ + λ e1`, written as `-x̂/r + λ(e1 - x̂)` with
    /// `1 - x̂1 = (r - x1)/r` so nothing cancels near the positive axis.
    fn log_gradient(&self, x: &Vec3, r: f64, gap: f64) -> Vec3 {
        let l = self.lambda / r;
        Vec3::new(-x.x / (r * r) + l * gap, -x.y * (1.0 / (r * r) + l), -x.z * (1.0 / (r * r) + l))
    }

    pub fn grad_gamma(&self, x: &Vec3) -> Result<Vec3> {
        let (r, gap) = Self::polar(x)?;
        Ok(self.log_gradient(x, r, gap) * self.gamma(x)?)
    }

    /// `Γ`, `∇Γ` and `∇²Γ = Γ (g gᵀ + ∇g)` with `g = ∇ log Γ`.
    pub fn jet(&self, x: &Vec3) -> Result<KernelJet> {
        let (r, gap) = Self::polar(x)?;
        let value = self.gamma(x)?;
        let g = self.log_gradient(x, r, gap);
        let xh = x / r;
        let outer = xh * xh.transpose();
        let dg = outer / (r * r) - (Mat3::identity() - outer) * ((1.0 / r + self.lambda) / r);
        Ok(KernelJet {
            value,
            gradient: g * value,
            hessian: (g * g.transpose() + dg) * value,
        })
    }

    /// `ΔΓ = 2λΓ (λ(r - x1)/r - x1/r²)`, the trace of the Hessian after the
    /// `1/r²` terms cancel analytically.
    pub fn laplacian(&self, x: &Vec3) -> Result<f64> {
        let (r, gap) = Self::polar(x)?;
        let l = self.lambda;
        Ok(2.0 * l * self.gamma(x)? * (l * gap / r - x.x / (r * r)))
    }

    /// `b·∇Γ - νΔΓ`.
    pub fn pde_residual(&self, x: &Vec3) -> Result<f64> {
        Ok(self.speed * self.grad_gamma(x)?.x - self.nu * self.laplacian(x)?)
    }

    /// `|b·∇Γ - νΔΓ| / (|b||∇Γ| + ν|ΔΓ|)`; zero where both terms underflow.
    pub fn relative_residual(&self, x: &Vec3) -> Result<f64> {
        let grad = self.grad_gamma(x)?;
        let lap = self.laplacian(x)?;
        let res = self.speed * grad.x - self.nu * lap;
        let scale = self.speed * grad.norm() + self.nu * lap.abs() + 1e-300;
        Ok(res.abs() / scale)
    }

    /// `(√2 / 4πν) r^{-3/2} (r - x1)^{-1/2}`, a pointwise bound for `|∇Γ|`
    /// off the positive `x1`-axis.
    pub fn gradient_bound(&self, x: &Vec3) -> Result<f64> {
        let (r, gap) = Self::polar(x)?;
        Ok(2f64.sqrt() / (4.0 * PI * self.nu) * r.powf(-1.5) / gap.sqrt())
    }

    /// `∫_{∂B_r} νΓ/r dσ`, which tends to 1 as `r → 0`. Gauss–Legendre in
    /// `μ = cos θ`; the azimuthal integral is exact by symmetry.
    pub fn delta_normalization(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return param(format!("sphere radius must be positive, got {r}"));
        }
        // νΓ/r · r² dΩ = e^{-λr(1-μ)} dμ dφ / 4π
        let gl = GaussLegendre::new(16);
        let k = self.lambda * r;
        Ok(0.5 * gl.integrate_composite(-1.0, 1.0, 16, |mu| (-k * (1.0 - mu)).exp()))
    }

    /// Closed form `(1 - e^{-2λr}) / (2λr)` of [`Self::delta_normalization`].
    pub fn delta_normalization_exact(&self, r: f64) -> f64 {
        let k = 2.0 * self.lambda * r;
        if k == 0.0 {
            1.0
        } else {
            -(-k).exp_m1() / k
        }
    }
}

/// `∫_{ℝ²} [r^{-3/2}(r - x1)^{-1/2}]^{3/2} dx2 dx3` by radial quadrature in
/// `ρ = |(x2, x3)|`. For `x1 > 0` the exact value is `8π/x1`.
pub fn mixed_norm_bound(x1: f64) -> Result<f64> {
    if x1 == 0.0 || !x1.is_finite() {
        return param("the mixed-norm integral diverges at x1 = 0");
    }
    let a = x1.abs();
    let integrand = |rho: f64| {
        let r = x1.hypot(rho);
        let gap = if x1 > 0.0 { rho * rho / (r + x1) } else { r - x1 };
        2.0 * PI * rho * r.powf(-2.25) * gap.powf(-0.75)
    };
    let gl = GaussLegendre::new(16);
    // ρ = a v² absorbs the ρ^{-1/2} behaviour at the axis, ρ = a/v the tail
    let near = gl.integrate_composite(0.0, 1.0, 32, |v| {
        if v == 0.0 {
            0.0
        } else {
            integrand(a * v * v) * 2.0 * a * v
        }
    });
    let far = gl.integrate_composite(0.0, 1.0, 32, |v| {
        if v == 0.0 {
            0.0
        } else {
            integrand(a / v) * a / (v * v)
        }
    });
    Ok(near + far)
}

/// The bound `4/|x1|` that [`mixed_norm_bound`] is compared against.
pub fn mixed_norm_claim(x1: f64) -> f64 {
    4.0 / x1.abs()
}

/// `∫_{3C} |y - x|^{-3/2} dy` for the capsule `C` of radius `R` and
/// half-length `L` centered at `x`. Spherical coordinates about the center
/// remove the singularity: the radial integral is `(2/3) ρ_max^{3/2}`.
pub fn capsule_kernel_norm(radius: f64, half_length: f64) -> Result<f64> {
    let c = Capsule::new(Vec3::zeros(), radius, half_length, Vec3::x())?.dilate(3.0)?;
    let gl = GaussLegendre::new(16);
    // axisymmetric: only the polar angle matters
    let v = gl.integrate_composite(-1.0, 1.0, 64, |mu| {
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let dir = Vec3::new(mu, s, 0.0);
        let exit = c.ray_interval(&Vec3::zeros(), &dir).map_or(0.0, |(_, t1)| t1);
        2.0 / 3.0 * exit.powf(1.5)
    });
    Ok(2.0 * PI * v)
}

fn smooth_step(t: f64) -> f64 {
    // 1 for t ≤ 0, 0 for t ≥ 1, C^∞ in between
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let psi = |s: f64| (-1.0 / s).exp();
    let (a, b) = (psi(1.0 - t), psi(t));
    a / (a + b)
}

/// Smooth cutoff equal to 1 on `1.5C` and 0 outside `2C`.
pub fn cutoff(support: &Capsule, y: &Vec3) -> f64 {
    smooth_step((support.gauge(y) - 1.5) / 0.5)
}

/// `v(x) = (1/4π) ∫ (φω)(y) × (x - y)/|x - y|³ dy` with `φ` the cutoff of
/// `support`.
///
/// `Gauss { order }` integrates in spherical coordinates about `x` (the
/// `r²` Jacobian cancels the kernel) when `x` is near the support and with a
/// volume rule on `2C` otherwise. `TensorGrid { resolution }` uses a grid of
/// cells centered on `x`, skipping the cell at `x`; its kernel integral over
/// the equal-volume ball vanishes by symmetry.
pub fn biot_savart(
    omega: &VectorField,
    support: &Capsule,
    x: &Vec3,
    q: &QuadratureSpec,
) -> Result<Vec3> {
    q.validate()?;
    let outer = support.dilate(2.0)?;
    let source = |y: &Vec3| -> Result<Vec3> {
        let phi = cutoff(support, y);
        if phi == 0.0 {
            Ok(Vec3::zeros())
        } else {
            Ok(omega.evaluate(y)? * phi)
        }
    };
    match *q {
        QuadratureSpec::MonteCarlo { .. } => {
            param("Biot–Savart needs a deterministic rule (gauss or tensor_grid)")
        }
        QuadratureSpec::Gauss { order } if support.gauge(x) >= 3.0 => {
            let rule = QuadratureRule::new(&outer, &QuadratureSpec::Gauss { order })?;
            let v = rule.try_integrate_vec(|y| {
                let d = x - y;
                Ok(source(y)?.cross(&d) / d.norm().powi(3))
            })?;
            Ok(v / (4.0 * PI))
        }
        QuadratureSpec::Gauss { order } => {
            let gl = GaussLegendre::new(order);
            let n_phi = 2 * order;
            let frame = rotation_from_e1(&support.direction());
            let mut total = Vec3::zeros();
            for (mu, wmu) in gl.on(-1.0, 1.0) {
                let s = (1.0 - mu * mu).max(0.0).sqrt();
                for k in 0..n_phi {
                    let ph = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    let n = frame * Vec3::new(mu, s * ph.cos(), s * ph.sin());
                    // y = x - t n, so (x - y)/|x - y|³ dy = n dt dΩ
                    let Some((t0, t1)) = outer.ray_interval(x, &-n) else {
                        continue;
                    };
                    let mut line = Vec3::zeros();
                    let h = (t1 - t0) / 4.0;
                    for p in 0..4 {
                        let a = t0 + p as f64 * h;
                        for (t, w) in gl.on(a, a + h) {
                            line += source(&(x - n * t))? * w;
                        }
                    }
                    total += line.cross(&n) * (wmu * 2.0 * PI / n_phi as f64);
                }
            }
            Ok(total / (4.0 * PI))
        }
        QuadratureSpec::TensorGrid { resolution } => {
            let (lo, hi) = outer.bounding_box();
            let h = (hi - lo).max() / resolution as f64;
            let range = |k: usize| {
                let a = ((lo[k] - x[k]) / h).floor() as i64;
                let b = ((hi[k] - x[k]) / h).ceil() as i64;
                a..=b
            };
            let mut total = Vec3::zeros();
            for i in range(0) {
                for j in range(1) {
                    for k in range(2) {
                        if i == 0 && j == 0 && k == 0 {
                            continue;
                        }
                        let d = Vec3::new(i as f64, j as f64, k as f64) * h;
                        let y = x - d;
                        if outer.gauge(&y) >= 1.0 {
                            continue;
                        }
                        total += source(&y)?.cross(&d) / d.norm().powi(3);
                    }
                }
            }
            Ok(total * (h * h * h / (4.0 * PI)))
        }
    }
}

/// [`biot_savart`] at many targets, in parallel, order preserved.
pub fn biot_savart_many(
    omega: &VectorField,
    support: &Capsule,
    xs: &[Vec3],
    q: &QuadratureSpec,
) -> Result<Vec<Vec3>> {
    xs.par_iter()
        .map(|x| biot_savart(omega, support, x, q))
        .collect()
}

/// Relative `L²` error between the central-difference curl of
/// [`biot_savart`] and `φω` on an `n³` grid spanning `center ± half_width`.
pub fn curl_inversion_error(
    omega: &VectorField,
    support: &Capsule,
    center: &Vec3,
    half_width: f64,
    n: usize,
    q: &QuadratureSpec,
) -> Result<f64> {
    if n < 2 || !(half_width > 0.0) {
        return param("curl check needs n ≥ 2 and a positive half-width");
    }
    let h = 2.0 * half_width / (n - 1) as f64;
    let m = n + 2;
    let node = |i: usize, j: usize, k: usize| {
        center + Vec3::new(i as f64 - 1.0, j as f64 - 1.0, k as f64 - 1.0) * h
            - Vec3::repeat(half_width)
    };
    let mut pts = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                pts.push(node(i, j, k));
            }
        }
    }
    let v = biot_savart_many(omega, support, &pts, q)?;
    let at = |i: usize, j: usize, k: usize| v[i + m * (j + m * k)];
    let (mut err, mut norm) = (0.0, 0.0);
    for k in 1..=n {
        for j in 1..=n {
            for i in 1..=n {
                let dx = (at(i + 1, j, k) - at(i - 1, j, k)) / (2.0 * h);
                let dy = (at(i, j + 1, k) - at(i, j - 1, k)) / (2.0 * h);
                let dz = (at(i, j, k + 1) - at(i, j, k - 1)) / (2.0 * h);
                let curl = Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x);
                let y = node(i, j, k);
                let want = omega.evaluate(&y)? * cutoff(support, &y);
                err += (curl - want).norm_squared();
                norm += want.norm_squared();
            }
        }
    }
    if norm == 0.0 {
        return Err(Error::Precondition("vorticity vanishes on the check grid".into()));
    }
    Ok((err / norm).sqrt())
}

/// Decay exponent of `|v|` along `direction`, fitted by least squares over
/// the dyadic distances `20·2^k · L` (`k = 0..4`) from the support center.
pub fn far_field_exponent(
    omega: &VectorField,
    support: &Capsule,
    direction: &Vec3,
    q: &QuadratureSpec,
) -> Result<f64> {
    let dir = direction.normalize();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 0..4 {
        let d = 20.0 * support.half_length() * 2f64.powi(k);
        let v = biot_savart(omega, support, &(support.center() + dir * d), q)?;
        if v.norm() == 0.0 {
            return Err(Error::Precondition("far field vanishes identically".into()));
        }
        xs.push(d.ln());
        ys.push(v.norm().ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Smooth scalar fields with analytic gradient and Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manufactured {
    Constant { value: f64 },
    /// `a exp(-|x - x0|²/w²)`.
    Gaussian { amplitude: f64, width: f64, center: Vec3 },
}

impl Manufactured {
    pub fn value(&self, x: &Vec3) -> f64 {
        match *self {
            Manufactured::Constant { value } => value,
            Manufactured::Gaussian {
                amplitude,
                width,
                center,
            } => amplitude * (-(x - center).norm_squared() / (width * width)).exp(),
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match *self {
            Manufactured::Constant { .. } => Vec3::zeros(),
            Manufactured::Gaussian { width, center, .. } => {
                (x - center) * (-2.0 * self.value(x) / (width * width))
            }
        }
    }

    pub fn laplacian(&self, x: &Vec3) -> f64 {
        match *self {
            Manufactured::Constant { .. } => 0.0,
            Manufactured::Gaussian { width, center, .. } => {
                let w2 = width * width;
                self.value(x) * (4.0 * (x - center).norm_squared() / (w2 * w2) - 6.0 / w2)
            }
        }
    }
}

/// Which side of `b·∇θ - νΔθ = f + div g` carries the manufactured forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// `f = b·∇θ - νΔθ`, `g = 0`.
    #[default]
    Source,
    /// `f = 0`, `g = bθ - ν∇θ`.
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimateReport {
    pub q: f64,
    /// `1/r = 1/q - 1/3`.
    pub r: f64,
    /// `‖θ‖_{L^r(½C)}`.
    pub lhs: f64,
    /// `R ‖f‖_{L^q(C)}`.
    pub source_term: f64,
    /// `‖g‖_{L^q(C)}`.
    pub divergence_term: f64,
    /// `(UR/L + 1/R) ‖θ‖_{L^q(C)}`.
    pub drift_term: f64,
    pub rhs: f64,
    /// `lhs / rhs`, the empirical constant.
    pub ratio: f64,
}

/// Measures the constant in `‖θ‖_{L^r(½C)} ≲ R‖f‖_q + ‖g‖_q + (UR/L + 1/R)‖θ‖_q`
/// for a manufactured `θ` with its forcing computed exactly.
pub fn local_estimate_check(
    k: &OseenKernel,
    c: &Capsule,
    theta: &Manufactured,
    q_exp: f64,
    forcing: Forcing,
    quad: &QuadratureSpec,
) -> Result<LocalEstimateReport> {
    if !(q_exp > 1.0 && q_exp < 3.0) {
        return param(format!("exponent q must lie in (1, 3), got {q_exp}"));
    }
    let r_exp = 1.0 / (1.0 / q_exp - 1.0 / 3.0);
    let b = k.drift();
    let norm = |rule: &QuadratureRule, p: f64, f: &(dyn Fn(&Vec3) -> f64 + Sync)| {
        rule.integrate(|y| f(y).abs().powf(p)).powf(1.0 / p)
    };
    let whole = QuadratureRule::new(c, quad)?;
    let half = QuadratureRule::new(&c.scale(0.5)?, quad)?;
    let f = |y: &Vec3| b.dot(&theta.gradient(y)) - k.nu() * theta.laplacian(y);
    let g = |y: &Vec3| (b * theta.value(y) - theta.gradient(y) * k.nu()).norm();
    let zero = |_: &Vec3| 0.0;
    let (f_norm, g_norm) = match forcing {
        Forcing::Source => (norm(&whole, q_exp, &f), norm(&whole, q_exp, &zero)),
        Forcing::Divergence => (norm(&whole, q_exp, &zero), norm(&whole, q_exp, &g)),
    };
    let (rr, l) = (c.radius(), c.half_length());
    let lhs = norm(&half, r_exp, &|y| theta.value(y));
    let source_term = rr * f_norm;
    let drift_term = (k.speed() * rr / l + 1.0 / rr) * norm(&whole, q_exp, &|y| theta.value(y));
    let rhs = source_term + g_norm + drift_term;
    Ok(LocalEstimateReport {
        q: q_exp,
        r: r_exp,
        lhs,
        source_term,
        divergence_term: g_norm,
        drift_term,
        rhs,
        ratio: lhs / rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Preset;
    use crate::rng;
    use rand::Rng;

    fn random_point(r: &mut crate::Rng, lo: f64, hi: f64) -> Vec3 {
        let d = Vec3::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        if d.norm() < 1e-3 {
            return Vec3::new(lo, 0.3 * lo, 0.0);
        }
        d.normalize() * r.random_range(lo..hi)
    }

    #[test]
    fn gamma_examples() {
        let k = OseenKernel::new(1.0, 0.0).unwrap();
        assert!((k.gamma(&Vec3::x()).unwrap() - 0.0795775).abs() < 1e-7);
        assert_eq!(k.gamma(&Vec3::zeros()), Err(Error::Singular));
        assert!(OseenKernel::new(0.0, 1.0).is_err());
        assert!(OseenKernel::new(1.0, -1.0).is_err());

        for u in [0.0, 1.0, 10.0, 1e3] {
            let k = OseenKernel::new(0.7, u).unwrap();
            assert_eq!(k.lambda(), u / 1.4);
            for x1 in [1e-3, 1.0, 50.0] {
                let want = 1.0 / (4.0 * PI * 0.7 * x1);
                assert!((k.gamma(&Vec3::new(x1, 0.0, 0.0)).unwrap() - want).abs() <= 1e-15 * want);
            }
        }
        let mut r = rng(60);
        for u in [0.0, 1.0, 10.0] {
            let k = OseenKernel::new(1.0, u).unwrap();
            for _ in 0..10_000 {
                let x = random_point(&mut r, 0.01, 10.0);
                let g = k.gamma(&x).unwrap();
                assert!(g > 0.0 || u > 0.0);
                assert!(g <= 1.0 / (4.0 * PI * x.norm()) * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn gamma_is_axially_symmetric_and_damped() {
        let k = OseenKernel::new(1.0, 3.0).unwrap();
        let (x1, rho) = (0.4, 1.3);
        let base = k.gamma(&Vec3::new(x1, rho, 0.0)).unwrap();
        for i in 0..32 {
            let p = 2.0 * PI * i as f64 / 32.0;
            let v = k.gamma(&Vec3::new(x1, rho * p.cos(), rho * p.sin())).unwrap();
            assert!((v - base).abs() <= 1e-14 * base);
        }
        let x = Vec3::new(-0.5, 0.8, 0.2);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let v = OseenKernel::new(1.0, 0.2 * i as f64).unwrap().gamma(&x).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn gradient_matches_laplace_and_differences() {
        let mut r = rng(61);
        let k0 = OseenKernel::new(1.0, 0.0).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut r, 0.1, 10.0);
            let want = -x / (4.0 * PI * x.norm().powi(3));
            assert!((k0.grad_gamma(&x).unwrap() - want).norm() <= 1e-12 * want.norm());
        }
        let h = 1e-6;
        for u in [0.0, 1.0, 10.0] {
            let k = OseenKernel::new(1.0, u).unwrap();
            for _ in 0..100 {
                let x = random_point(&mut r, 0.1, 2.0);
                let g = k.grad_gamma(&x).unwrap();
                let fd = Vec3::from_fn(|i, _| {
                    let mut e = Vec3::zeros();
                    e[i] = h;
                    (k.gamma(&(x + e)).unwrap() - k.gamma(&(x - e)).unwrap()) / (2.0 * h)
                });
                assert!((fd - g).norm() <= 1e-5 * g.norm(), "{x:?} {u}");
            }
        }
    }

    #[test]
    fn hessian_matches_differences_of_gradient() {
        let mut r = rng(62);
        let h = 1e-6;
        let k = OseenKernel::new(0.5, 2.0).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut r, 0.2, 3.0);
            let hess = k.jet(&x).unwrap().hessian;
            for j in 0..3 {
                let mut e = Vec3::zeros();
                e[j] = h;
                let col = (k.grad_gamma(&(x + e)).unwrap() - k.grad_gamma(&(x - e)).unwrap()) / (2.0 * h);
                assert!((col - hess.column(j)).norm() <= 1e-5 * hess.norm());
            }
            let lap = k.laplacian(&x).unwrap();
            assert!((hess.trace() - lap).abs() <= 1e-12 * hess.norm());
        }
    }

    #[test]
    fn gradient_bound_holds_off_axis() {
        let mut r = rng(63);
        for u in [0.0, 1.0, 10.0] {
            let k = OseenKernel::new(1.0, u).unwrap();
            for _ in 0..10_000 {
                let x = random_point(&mut r, 0.01, 10.0);
                if x.y == 0.0 && x.z == 0.0 {
                    continue;
                }
                let g = k.grad_gamma(&x).unwrap().norm();
                assert!(g <= k.gradient_bound(&x).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn residual_vanishes() {
        let mut r = rng(64);
        for (u, tol) in [(0.0, 1e-10), (1.0, 1e-8), (10.0, 1e-6)] {
            let k = OseenKernel::new(1.0, u).unwrap();
            for _ in 0..1000 {
                let x = random_point(&mut r, 0.1, 10.0);
                let rr = k.relative_residual(&x).unwrap();
                assert!(rr < tol, "{u} {x:?} {rr}");
            }
        }
        let k = OseenKernel::new(1.0, 0.0).unwrap();
        assert!(k.pde_residual(&Vec3::new(0.3, 0.2, -0.1)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn delta_normalization_examples() {
        let k0 = OseenKernel::new(1.0, 0.0).unwrap();
        for r in [1e-3, 1.0, 1e3] {
            assert!((k0.delta_normalization(r).unwrap() - 1.0).abs() < 1e-10);
        }
        let k = OseenKernel::new(1.0, 1.0).unwrap();
        assert!((k.delta_normalization(1e-3).unwrap() - 1.0).abs() < 1e-3);
        let vals: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&r| k.delta_normalization(r).unwrap())
            .collect();
        assert!((1.0 - vals[0]) > (1.0 - vals[1]) && (1.0 - vals[1]) > (1.0 - vals[2]));
        for r in [1e-3, 0.1, 1.0, 10.0] {
            let (a, b) = (k.delta_normalization(r).unwrap(), k.delta_normalization_exact(r));
            assert!((a - b).abs() < 1e-10 * b);
        }
        assert!(k.delta_normalization(0.0).is_err());
    }

    #[test]
    fn mixed_norm_matches_beta_integral() {
        // 2π ∫₀^∞ t^{-3/4}(t + x1)^{-5/4} dt = 2π B(1/4, 1)/x1 = 8π/x1
        for x1 in [0.1, 1.0, 2.0, 5.0, 10.0] {
            let v = mixed_norm_bound(x1).unwrap();
            assert!((v - 8.0 * PI / x1).abs() < 1e-6 * v, "{x1}: {v}");
        }
        let base = mixed_norm_bound(1.0).unwrap();
        for x1 in [2.0, 5.0] {
            assert!((mixed_norm_bound(x1).unwrap() * x1 / base - 1.0).abs() < 1e-6);
        }
        let neg = mixed_norm_bound(-1.0).unwrap();
        assert!(neg > 0.0 && neg < base);
        assert!((mixed_norm_bound(-4.0).unwrap() * 4.0 / neg - 1.0).abs() < 1e-6);
        assert!(mixed_norm_bound(0.0).is_err());
    }

    #[test]
    fn capsule_kernel_norm_examples() {
        let ball = capsule_kernel_norm(1.0, 1.0).unwrap();
        let exact = 8.0 * PI / 3.0 * 3f64.powf(1.5);
        assert!((ball - exact).abs() < 0.01 * exact);
        assert!((ball - 43.53).abs() < 0.01 * 43.53);
        for l in [10.0, 100.0] {
            let v = capsule_kernel_norm(1.0, l).unwrap();
            assert!(v >= ball && v <= 5.0 * ball, "{l}: {v}");
        }
        let ratio = capsule_kernel_norm(2.0, 20.0).unwrap() / capsule_kernel_norm(1.0, 10.0).unwrap();
        assert!((ratio / 2f64.powf(1.5) - 1.0).abs() < 0.02);
        assert!(capsule_kernel_norm(1.0, 0.5).is_err());
    }

    #[test]
    fn cutoff_profile() {
        let c = Capsule::new(Vec3::zeros(), 1.0, 3.0, Vec3::y()).unwrap();
        assert_eq!(cutoff(&c, &Vec3::new(1.4, 0.0, 0.0)), 1.0);
        assert_eq!(cutoff(&c, &Vec3::new(2.1, 0.0, 0.0)), 0.0);
        let mid = cutoff(&c, &Vec3::new(1.75, 0.0, 0.0));
        assert!((mid - 0.5).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = cutoff(&c, &Vec3::new(1.5 + 0.005 * i as f64, 0.0, 0.0));
            assert!(v <= prev);
            prev = v;
        }
    }

    fn blob(axis: Vec3) -> VectorField {
        Preset::GaussianPotential {
            amplitude: 1.0,
            width: 0.3,
            axis,
            center: Vec3::zeros(),
        }
        .into()
    }

    #[test]
    fn biot_savart_of_zero_is_zero() {
        let zero: VectorField = Preset::Constant {
            velocity: Vec3::zeros(),
        }
        .into();
        let c = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        for q in [QuadratureSpec::Gauss { order: 6 }, QuadratureSpec::TensorGrid { resolution: 10 }] {
            assert_eq!(biot_savart(&zero, &c, &Vec3::new(0.2, 0.1, 0.0), &q).unwrap(), Vec3::zeros());
        }
        let mc = QuadratureSpec::default();
        assert!(biot_savart(&zero, &c, &Vec3::zeros(), &mc).is_err());
    }

    #[test]
    fn biot_savart_matches_point_vortex_far_away() {
        // far from the support v ≈ (1/4π) (∫φω) × x/|x|³
        let c = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        let w = blob(Vec3::z());
        let total = PI.powf(1.5) * 0.3f64.powi(3);
        let x = Vec3::new(30.0, 0.0, 0.0);
        let want = Vec3::z().cross(&x) * (total / (4.0 * PI * 30f64.powi(3)));
        let v = biot_savart(&w, &c, &x, &QuadratureSpec::Gauss { order: 16 }).unwrap();
        assert!((v - want).norm() < 1e-3 * want.norm(), "{v:?} {want:?}");
    }

    #[test]
    fn biot_savart_rules_agree_near_support() {
        let c = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        let w = blob(Vec3::new(0.0, 0.6, 0.8));
        let x = Vec3::new(0.25, -0.1, 0.05);
        let g = biot_savart(&w, &c, &x, &QuadratureSpec::Gauss { order: 16 }).unwrap();
        let t = biot_savart(&w, &c, &x, &QuadratureSpec::TensorGrid { resolution: 80 }).unwrap();
        assert!((g - t).norm() < 0.02 * g.norm(), "{g:?} {t:?}");
    }

    #[test]
    fn biot_savart_inverts_curl_and_decays() {
        let c = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        let w: VectorField = Preset::CurlGaussian {
            amplitude: 1.0,
            width: 0.3,
            axis: Vec3::new(0.2, 0.3, 1.0).normalize(),
            center: Vec3::zeros(),
        }
        .into();
        let q = QuadratureSpec::Gauss { order: 12 };
        let err = curl_inversion_error(&w, &c, &Vec3::zeros(), 0.6, 16, &q).unwrap();
        assert!(err < 0.05, "{err}");
        let p = far_field_exponent(&blob(Vec3::z()), &c, &Vec3::new(1.0, 0.4, 0.2), &q).unwrap();
        assert!((1.8..=2.2).contains(&p), "{p}");
    }

    #[test]
    fn local_estimate_constant_theta() {
        let k = OseenKernel::new(1.0, 0.0).unwrap();
        let c = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        let rep = local_estimate_check(
            &k,
            &c,
            &Manufactured::Constant { value: 1.0 },
            1.5,
            Forcing::Source,
            &QuadratureSpec::Gauss { order: 6 },
        )
        .unwrap();
        assert!((rep.r - 3.0).abs() < 1e-12);
        let want = (PI / 6.0).powf(1.0 / 3.0) / (4.0 * PI / 3.0).powf(2.0 / 3.0);
        assert!((rep.ratio - want).abs() < 1e-10);
        assert!((rep.ratio - 0.309).abs() < 0.002);
        assert!(local_estimate_check(
            &k,
            &c,
            &Manufactured::Constant { value: 1.0 },
            3.0,
            Forcing::Source,
            &QuadratureSpec::Gauss { order: 6 },
        )
        .is_err());
    }

    #[test]
    fn manufactured_derivatives_match_differences() {
        let t = Manufactured::Gaussian {
            amplitude: 2.0,
            width: 0.4,
            center: Vec3::new(0.1, 0.0, -0.2),
        };
        let x = Vec3::new(0.3, -0.2, 0.1);
        let h = 1e-4;
        let mut lap = 0.0;
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            let d = (t.value(&(x + e)) - t.value(&(x - e))) / (2.0 * h);
            assert!((d - t.gradient(&x)[i]).abs() < 1e-6);
            lap += (t.value(&(x + e)) - 2.0 * t.value(&x) + t.value(&(x - e))) / (h * h);
        }
        assert!((lap - t.laplacian(&x)).abs() < 1e-4);
    }

    #[test]
    fn local_estimate_is_drift_uniform() {
        let q = QuadratureSpec::TensorGrid { resolution: 200 };
        let theta = Manufactured::Gaussian {
            amplitude: 1.0,
            width: 0.4,
            center: Vec3::zeros(),
        };
        let ball = Capsule::ball(Vec3::zeros(), 1.0).unwrap();
        let still = local_estimate_check(&OseenKernel::new(1.0, 0.0).unwrap(), &ball, &theta, 2.0, Forcing::Source, &q)
            .unwrap();
        assert!(still.ratio <= 10.0);
        let long = Capsule::new(Vec3::zeros(), 1.0, 10.0, Vec3::x()).unwrap();
        let fast = local_estimate_check(&OseenKernel::new(1.0, 10.0).unwrap(), &long, &theta, 2.0, Forcing::Source, &q)
            .unwrap();
        assert!(fast.ratio <= still.ratio * 2.0, "{} vs {}", fast.ratio, still.ratio);
        let div = local_estimate_check(&OseenKernel::new(1.0, 10.0).unwrap(), &long, &theta, 2.0, Forcing::Divergence, &q)
            .unwrap();
        assert_eq!(div.source_term, 0.0);
        assert!(div.divergence_term > 0.0 && div.ratio.is_finite());
    }
}
