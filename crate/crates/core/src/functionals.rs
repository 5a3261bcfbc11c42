//! Straight-line integrals, mean oscillation of a vector potential, stream
//! moments, and the exponent arithmetic of the two triviality criteria.

use std::f64::consts::PI;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::construction::ConstructedCapsule;
use crate::error::{param, Error, Result};
use crate::fields::VectorField;
use crate::geometry::{Capsule, QuadratureRule, QuadratureSpec};
use crate::quad::GaussLegendre;
use crate::Vec3;

pub const LINE_POINTS: usize = 8;
pub const LINE_PANELS: usize = 16;

/// `∫ u · dℓ` along the segment `x0 → x1`, composite Gauss–Legendre with
/// [`LINE_POINTS`] nodes per panel.
pub fn line_integral(field: &VectorField, x0: &Vec3, x1: &Vec3, panels: usize) -> Result<f64> {
    if panels < 2 {
        return param(format!("need at least 2 panels, got {panels}"));
    }
    let gl = GaussLegendre::new(LINE_POINTS);
    let d = x1 - x0;
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        for (t, w) in gl.on(a, a + h) {
            total += w * field.evaluate(&(x0 + d * t))?.dot(&d);
        }
    }
    Ok(total)
}

/// `(∫_{x-Le}^{x+Le} u · dℓ) / (2 L U)` for a long capsule with drift speed
/// `U` along its axis.
pub fn comparability_ratio(field: &VectorField, c: &Capsule, speed: f64) -> Result<f64> {
    if !(speed > 0.0) {
        return Err(Error::Precondition("drift speed must be positive".into()));
    }
    let a = c.direction() * c.half_length();
    let v = line_integral(field, &(c.center() - a), &(c.center() + a), LINE_PANELS)?;
    Ok(v / (2.0 * c.half_length() * speed))
}

pub fn line_integral_comparability(field: &VectorField, cc: &ConstructedCapsule) -> Result<f64> {
    if !cc.is_long() {
        return Err(Error::Precondition(
            "line-integral comparability needs a long capsule".into(),
        ));
    }
    comparability_ratio(field, &cc.capsule, cc.speed)
}

fn ball_rule(x0: &Vec3, radius: f64, q: &QuadratureSpec) -> Result<QuadratureRule> {
    QuadratureRule::new(&Capsule::ball(*x0, radius)?, q)
}

fn mean_of(psi: &VectorField, rule: &QuadratureRule) -> Result<Vec3> {
    Ok(rule.try_integrate_vec(|y| psi.evaluate(y))? / rule.measure())
}

/// `(⨍_{B_R(x0)} |ψ - ψ̄|^s)^{1/s}`, the mean `ψ̄` by the same rule.
pub fn mean_oscillation(
    psi: &VectorField,
    x0: &Vec3,
    radius: f64,
    s: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !(s >= 1.0) {
        return param(format!("oscillation exponent must be at least 1, got {s}"));
    }
    let rule = ball_rule(x0, radius, q)?;
    let mean = mean_of(psi, &rule)?;
    let v = rule.try_average(|y| Ok((psi.evaluate(y)? - mean).norm().powf(s)))?;
    Ok(v.powf(1.0 / s))
}

/// `∫_{B_R(x)} (ψ - ψ̄) · (e × (y - x)) dy`.
pub fn stream_moment(
    psi: &VectorField,
    x: &Vec3,
    radius: f64,
    e: &Vec3,
    q: &QuadratureSpec,
) -> Result<f64> {
    let rule = ball_rule(x, radius, q)?;
    let mean = mean_of(psi, &rule)?;
    rule.try_integrate(|y| Ok((psi.evaluate(y)? - mean).dot(&e.cross(&(y - x)))))
}

/// `∫_{B_R(x)} u · (e · (y - x)) (y - x) dy`, equal to [`stream_moment`] when
/// `u = curl ψ` (the boundary term vanishes because `(e·y) y` is normal on
/// the sphere).
pub fn stream_moment_volume_form(
    u: &VectorField,
    x: &Vec3,
    radius: f64,
    e: &Vec3,
    q: &QuadratureSpec,
) -> Result<f64> {
    let rule = ball_rule(x, radius, q)?;
    rule.try_integrate(|y| {
        let d = y - x;
        Ok(u.evaluate(y)?.dot(&d) * e.dot(&d))
    })
}

/// `∫_{B_R} U y1² dy = (4π/15) U R⁵`: the stream moment of a constant drift.
pub fn constant_drift_moment(speed: f64, radius: f64) -> f64 {
    4.0 * PI / 15.0 * speed * radius.powi(5)
}

/// Upper bound `R |B_R| (⨍|ψ - ψ̄|^s)^{1/s}` for the stream moment with a unit
/// `e`, from `|e × y| ≤ R` and Jensen.
pub fn moment_oscillation_bound(radius: f64, oscillation: f64) -> f64 {
    4.0 * PI / 3.0 * radius.powi(4) * oscillation
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `4 / (1 - α)`.
    pub p_alpha: Rational64,
    /// `(4 - 2β(δ+1)/(2+σ)) / (1 - β)`.
    pub p_beta: Rational64,
    /// The `α` with `p_alpha = 9/2`.
    pub alpha_crit: Rational64,
    /// The `β` with `p_beta = 9/2`.
    pub beta_crit: Rational64,
}

fn in_unit_interval(v: Rational64, name: &str) -> Result<()> {
    if v < Rational64::from_integer(0) || v >= Rational64::from_integer(1) {
        return param(format!("{name} must lie in [0, 1), got {v}"));
    }
    Ok(())
}

/// Exact threshold arithmetic for rational inputs.
pub fn thresholds(
    alpha: Rational64,
    beta: Rational64,
    delta: Rational64,
    sigma: Rational64,
) -> Result<Thresholds> {
    in_unit_interval(alpha, "α")?;
    in_unit_interval(beta, "β")?;
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    let four = Rational64::from_integer(4);
    let nine_halves = Rational64::new(9, 2);
    let k = two * (delta + one) / (two + sigma);
    let p_alpha = four / (one - alpha);
    let p_beta = (four - k * beta) / (one - beta);
    // 4/(1-α) = 9/2  and  (4 - kβ)/(1-β) = 9/2
    let alpha_crit = one - four / nine_halves;
    let beta_crit = (nine_halves - four) / (nine_halves - k);
    Ok(Thresholds {
        p_alpha,
        p_beta,
        alpha_crit,
        beta_crit,
    })
}

/// Floating-point version of [`thresholds`] (`p_alpha`, `p_beta`).
pub fn thresholds_f64(alpha: f64, beta: f64, delta: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&alpha) || !(0.0..1.0).contains(&beta) {
        return param("α and β must lie in [0, 1)");
    }
    let k = 2.0 * (delta + 1.0) / (2.0 + sigma);
    Ok((4.0 / (1.0 - alpha), (4.0 - k * beta) / (1.0 - beta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitorExponents {
    /// `(s - 3) / (6(s - 1))`.
    pub seregin: f64,
    /// `min{1/3 - 1/s, 1/6}`.
    pub chae_wolf: f64,
}

pub fn competitor_exponents(s: f64) -> Result<CompetitorExponents> {
    if !(s > 3.0) {
        return param(format!("competitor exponents need s > 3, got {s}"));
    }
    Ok(CompetitorExponents {
        seregin: (s - 3.0) / (6.0 * (s - 1.0)),
        chae_wolf: (1.0 / 3.0 - 1.0 / s).min(1.0 / 6.0),
    })
}

pub fn competitor_exponents_exact(s: Rational64) -> Result<(Rational64, Rational64)> {
    if s <= Rational64::from_integer(3) {
        return param(format!("competitor exponents need s > 3, got {s}"));
    }
    let one = Rational64::from_integer(1);
    let seregin = (s - 3) / ((s - one) * 6);
    let chae_wolf = (Rational64::new(1, 3) - one / s).min(Rational64::new(1, 6));
    Ok((seregin, chae_wolf))
}

/// The `s` with `(s - 3)/(6(s - 1)) = a`, i.e. `s = (3 - 6a)/(1 - 6a)`.
pub fn seregin_crossover(a: Rational64) -> Result<Rational64> {
    let six_a = a * 6;
    if a <= Rational64::from_integer(0) || six_a >= Rational64::from_integer(1) {
        return param("seregin exponent only reaches values in (0, 1/6)");
    }
    Ok((Rational64::from_integer(3) - six_a) / (Rational64::from_integer(1) - six_a))
}

/// The `s` with `min{1/3 - 1/s, 1/6} = a`, i.e. `s = 1/(1/3 - a)` for
/// `a < 1/6`.
pub fn chae_wolf_crossover(a: Rational64) -> Result<Rational64> {
    if a <= Rational64::from_integer(0) || a >= Rational64::new(1, 6) {
        return param("the crossover is unique only for a in (0, 1/6)");
    }
    Ok(Rational64::from_integer(1) / (Rational64::new(1, 3) - a))
}
