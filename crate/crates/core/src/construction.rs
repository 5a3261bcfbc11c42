//! Per-point capsule construction.
//!
//! At a point `x` and radius `R` the ball average of `u` gives a drift
//! `b = U e`, the length rule gives `L(U, R)`, and the capsule
//! `C_{R, L, e}(x)` gives `Ξ̃_R(x)² = ⨍_C 𝓜_Φ[𝓜(|∇u|²)]`. The constructed
//! radius is the smallest root (on a log scan) of
//!
//! ```text
//! standard:     g(R) = Ξ̃_R L^{1-δ} R^{1+δ} - ε₀
//! alternative:  g(R) = Ξ̃_R L R^λ - ε₀
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::VectorField;
use crate::geometry::{Capsule, QuadratureRule, QuadratureSpec};
use crate::maximal::{xi_tilde_squared, MaximalConfig};
use crate::quad::log_grid;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `L = max{UR, 1}^{1/(1+σ)} R`.
    Standard,
    /// `L = max{U R^γ, 1} R`.
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapsuleParams {
    pub epsilon0: f64,
    pub epsilon1: f64,
    pub delta: f64,
    pub sigma: f64,
    pub mode: Mode,
    pub gamma: f64,
    pub lambda_exp: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub scan_points: usize,
    /// Bisection stops once `|g| ≤ root_tol · ε₀`.
    pub root_tol: f64,
    pub max_bisections: usize,
}

impl Default for CapsuleParams {
    fn default() -> Self {
        Self {
            epsilon0: 0.01,
            epsilon1: 1e-4,
            delta: 5.0 / 12.0,
            sigma: 5.0 / 12.0,
            mode: Mode::Standard,
            gamma: 1.0,
            lambda_exp: 1.0,
            r_lo: 1e-3,
            r_hi: 1e3,
            scan_points: 200,
            root_tol: 1e-6,
            max_bisections: 200,
        }
    }
}

impl CapsuleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0 && self.epsilon0 < 1.0) {
            return param(format!("ε₀ must lie in (0, 1), got {}", self.epsilon0));
        }
        if !(self.epsilon1 > 0.0 && self.epsilon1 < self.epsilon0) {
            return param("ε₁ must be positive and below ε₀");
        }
        if !(0.0..=5.0 / 12.0).contains(&self.delta) {
            return param(format!("δ must lie in [0, 5/12], got {}", self.delta));
        }
        if !(self.sigma >= self.delta) {
            return param("σ must be at least δ");
        }
        if !(self.lambda_exp >= 1.0 && self.gamma >= 0.0 && self.gamma <= self.lambda_exp) {
            return param("alternative exponents need λ ≥ 1 and 0 ≤ γ ≤ λ");
        }
        if !(self.r_lo > 0.0 && self.r_hi > self.r_lo) {
            return param("radius bracket needs 0 < R_lo < R_hi");
        }
        if self.scan_points < 2 {
            return param("scan needs at least 2 points");
        }
        if !(self.root_tol > 0.0) {
            return param("root tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Round,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    /// Bisection reached `|g| ≤ root_tol · ε₀`.
    Converged,
    /// The bracket collapsed before the tolerance was met (a jump in `g`).
    Stalled,
    /// `g < 0` on the whole scan; reported at `R_hi`.
    Unbounded,
    /// `g ≥ 0` already at `R_lo`; reported at `R_lo`.
    BelowBracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructedCapsule {
    pub capsule: Capsule,
    /// `U = |b|`.
    pub speed: f64,
    /// `b = ⨍_{B_R(x)} u`.
    pub drift: Vec3,
    pub xi_tilde: f64,
    pub classification: Classification,
    pub status: RootStatus,
    /// `|g(R*)|`.
    pub residual: f64,
    /// `Ξ̃ L R (R/L)^δ`, the `ε₁` this capsule realises.
    pub implied_epsilon1: f64,
    /// Streamwise horizon used for `Ξ̃`.
    pub horizon: f64,
}

impl ConstructedCapsule {
    pub fn is_long(&self) -> bool {
        self.classification == Classification::Long
    }

    pub fn radius(&self) -> f64 {
        self.capsule.radius()
    }
}

/// `(|b|, b/|b|)` for `b = ⨍_{B_R(x)} u`; `(0, e1)` when `b = 0`.
pub fn average_velocity(
    field: &VectorField,
    x: &Vec3,
    radius: f64,
    q: &QuadratureSpec,
) -> Result<(f64, Vec3)> {
    let ball = Capsule::ball(*x, radius)?;
    let rule = QuadratureRule::new(&ball, q)?;
    let m = rule.measure();
    if m == 0.0 {
        return param("ball quadrature has no points");
    }
    let b = rule.try_integrate_vec(|y| field.evaluate(y))? / m;
    let u = b.norm();
    if u == 0.0 {
        Ok((0.0, Vec3::x()))
    } else {
        Ok((u, b / u))
    }
}

pub fn length_rule(speed: f64, radius: f64, params: &CapsuleParams) -> f64 {
    match params.mode {
        Mode::Standard => (speed * radius).max(1.0).powf(1.0 / (1.0 + params.sigma)) * radius,
        Mode::Alternative => (speed * radius.powf(params.gamma)).max(1.0) * radius,
    }
}

/// Everything computed at one trial radius.
struct Trial {
    radius: f64,
    g: f64,
    capsule: Capsule,
    speed: f64,
    drift: Vec3,
    xi_tilde: f64,
    horizon: f64,
}

fn trial(
    field: &VectorField,
    x: &Vec3,
    radius: f64,
    params: &CapsuleParams,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
) -> Result<Trial> {
    let (speed, e) = average_velocity(field, x, radius, q)?;
    let length = length_rule(speed, radius, params);
    let capsule = Capsule::new(*x, radius, length, e)?;
    let horizon = if speed > 0.0 {
        (4.0 * length / speed).min(cfg.horizon_cap)
    } else {
        cfg.horizon_cap
    };
    let xi2 = xi_tilde_squared(field, &capsule, &cfg.with_horizon(horizon), q)?;
    let xi_tilde = xi2.max(0.0).sqrt();
    let g = match params.mode {
        Mode::Standard => {
            xi_tilde * length.powf(1.0 - params.delta) * radius.powf(1.0 + params.delta)
                - params.epsilon0
        }
        Mode::Alternative => {
            xi_tilde * length * radius.powf(params.lambda_exp) - params.epsilon0
        }
    };
    if !g.is_finite() {
        return Err(Error::NonFinite { radius, value: g });
    }
    Ok(Trial {
        radius,
        g,
        capsule,
        speed,
        drift: e * speed,
        xi_tilde,
        horizon,
    })
}

fn finish(t: Trial, status: RootStatus, params: &CapsuleParams) -> ConstructedCapsule {
    let (r, l) = (t.capsule.radius(), t.capsule.half_length());
    let classification = if t.capsule.is_ball() {
        Classification::Round
    } else {
        Classification::Long
    };
    ConstructedCapsule {
        capsule: t.capsule,
        speed: t.speed,
        drift: t.drift,
        xi_tilde: t.xi_tilde,
        classification,
        status,
        residual: t.g.abs(),
        implied_epsilon1: t.xi_tilde * l * r * (r / l).powf(params.delta),
        horizon: t.horizon,
    }
}

/// Scans `[R_lo, R_hi]` on a log grid, bisects the first cell where `g`
/// changes from negative to nonnegative and returns the capsule at the root.
pub fn find_capsule(
    field: &VectorField,
    x: &Vec3,
    params: &CapsuleParams,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
) -> Result<ConstructedCapsule> {
    params.validate()?;
    cfg.validate()?;
    let tol = params.root_tol * params.epsilon0;
    let grid = log_grid(params.r_lo, params.r_hi, params.scan_points);
    let mut prev = trial(field, x, grid[0], params, cfg, q)?;
    if prev.g >= 0.0 {
        let status = if prev.g <= tol {
            RootStatus::Converged
        } else {
            RootStatus::BelowBracket
        };
        return Ok(finish(prev, status, params));
    }
    for &r in &grid[1..] {
        let next = trial(field, x, r, params, cfg, q)?;
        if next.g >= 0.0 {
            return bisect(field, x, prev, next, params, cfg, q, tol);
        }
        prev = next;
    }
    Ok(finish(prev, RootStatus::Unbounded, params))
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    field: &VectorField,
    x: &Vec3,
    mut lo: Trial,
    mut hi: Trial,
    params: &CapsuleParams,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
    tol: f64,
) -> Result<ConstructedCapsule> {
    if hi.g <= tol {
        return Ok(finish(hi, RootStatus::Converged, params));
    }
    if -lo.g <= tol {
        return Ok(finish(lo, RootStatus::Converged, params));
    }
    for _ in 0..params.max_bisections {
        let mid = 0.5 * (lo.radius + hi.radius);
        if mid <= lo.radius || mid >= hi.radius {
            break;
        }
        let t = trial(field, x, mid, params, cfg, q)?;
        if t.g.abs() <= tol {
            return Ok(finish(t, RootStatus::Converged, params));
        }
        if t.g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    let best = if -lo.g <= hi.g { lo } else { hi };
    Ok(finish(best, RootStatus::Stalled, params))
}

/// `find_capsule` at every point, in input order. Per-point errors are kept
/// in place rather than aborting the batch.
pub fn classify_points(
    field: &VectorField,
    points: &[Vec3],
    params: &CapsuleParams,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
) -> Vec<Result<ConstructedCapsule>> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|x| find_capsule(field, x, params, cfg, q))
        .collect()
}

/// Indices of round points, long points and failed points.
pub fn partition(results: &[Result<ConstructedCapsule>]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (mut round, mut long, mut failed) = (Vec::new(), Vec::new(), Vec::new());
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(c) if c.is_long() => long.push(i),
            Ok(_) => round.push(i),
            Err(_) => failed.push(i),
        }
    }
    (round, long, failed)
}

/// The bound the oscillation `sup_C |u - b|` is compared against.
pub fn oscillation_scale(cc: &ConstructedCapsule, params: &CapsuleParams) -> f64 {
    let (r, l) = (cc.capsule.radius(), cc.capsule.half_length());
    match params.mode {
        Mode::Standard => match cc.classification {
            Classification::Long => params.epsilon0 * (r / l) * cc.speed,
            Classification::Round => 1.0 / r,
        },
        Mode::Alternative => {
            params.epsilon0 * (cc.speed * r / l + r.powf(-params.lambda_exp))
        }
    }
}

/// `sup |u - b|` over the quadrature points and boundary samples of the
/// capsule, divided by [`oscillation_scale`].
pub fn oscillation_check(
    field: &VectorField,
    cc: &ConstructedCapsule,
    params: &CapsuleParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    let rule = QuadratureRule::new(&cc.capsule, q)?;
    let mut sup = 0.0f64;
    for y in rule.points().iter().chain(&cc.capsule.boundary_samples(16)) {
        sup = sup.max((field.evaluate(y)? - cc.drift).norm());
    }
    Ok(sup / oscillation_scale(cc, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    /// Pairs of long capsules that intersect with `R(z) ≤ 2R(x)`.
    pub pairs: usize,
    /// Largest containment factor needed over those pairs.
    pub empirical_k: f64,
    /// Pairs needing more than the configured `K`.
    pub exceedances: usize,
    pub k: f64,
}

/// For long capsules `C_x`, `C_z` that intersect with `R(z) ≤ 2R(x)`,
/// measures the smallest `K` with `C_z ⊂ K C_x`.
pub fn containment_check(family: &[ConstructedCapsule], k: f64) -> ContainmentReport {
    let long: Vec<&Capsule> = family
        .iter()
        .filter(|c| c.is_long())
        .map(|c| &c.capsule)
        .collect();
    let mut report = ContainmentReport {
        pairs: 0,
        empirical_k: 0.0,
        exceedances: 0,
        k,
    };
    for (i, cx) in long.iter().enumerate() {
        for (j, cz) in long.iter().enumerate() {
            if i == j || cz.radius() > 2.0 * cx.radius() || !cx.intersects(cz) {
                continue;
            }
            let need = cx.containment_factor(cz, 8);
            report.pairs += 1;
            report.empirical_k = report.empirical_k.max(need);
            if need > k {
                report.exceedances += 1;
            }
        }
    }
    report
}
