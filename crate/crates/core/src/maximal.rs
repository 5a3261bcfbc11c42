//! Classical and streamwise maximal functions, their composition over a
//! capsule, weak-Lᵖ estimates and streamline proximity.
//!
//! Suprema over `r > 0` and `s > 0` are taken over finite log-spaced grids,
//! so every value here is a lower estimate of the continuous supremum.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::{FlowMap, VectorField};
use crate::geometry::{Capsule, QuadratureRule, QuadratureSpec};
use crate::quad::log_grid;
use crate::{rng, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximalConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub s_min: f64,
    /// Streamwise horizon `T`; the s-grid ends here.
    pub horizon: f64,
    pub n_s: usize,
    /// Rule for the ball averages inside the classical maximal function.
    pub ball: QuadratureSpec,
    /// Runge–Kutta step `h_flow`.
    pub flow_step: f64,
    /// Fixed number of flow steps per direction over `[0, T]`. When unset the
    /// count is `⌈T / h_flow⌉`.
    pub flow_steps: Option<usize>,
    /// Upper limit on the construction horizon `4L/U`.
    pub horizon_cap: f64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e2,
            n_r: 60,
            s_min: 1e-3,
            horizon: 1.0,
            n_s: 60,
            ball: QuadratureSpec::Gauss { order: 4 },
            flow_step: 1e-2,
            flow_steps: None,
            horizon_cap: 10.0,
        }
    }
}

impl MaximalConfig {
    /// A cheap configuration for nested evaluations (construction, covering).
    pub fn coarse() -> Self {
        Self {
            r_min: 1e-2,
            r_max: 10.0,
            n_r: 8,
            s_min: 1e-2,
            n_s: 8,
            ball: QuadratureSpec::Gauss { order: 2 },
            flow_steps: Some(8),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.n_r >= 1) {
            return param("radius grid needs 0 < r_min <= r_max and n_r >= 1");
        }
        if !(self.s_min > 0.0 && self.n_s >= 1) {
            return param("s-grid needs s_min > 0 and n_s >= 1");
        }
        if !(self.horizon > 0.0 && self.horizon_cap > 0.0 && self.flow_step > 0.0) {
            return param("horizon, horizon cap and flow step must be positive");
        }
        if self.flow_steps == Some(0) {
            return param("flow_steps must be positive");
        }
        self.ball.validate()
    }

    pub fn radii(&self) -> Vec<f64> {
        log_grid(self.r_min, self.r_max, self.n_r)
    }

    /// `s`-grid ending at the horizon.
    pub fn s_grid(&self) -> Vec<f64> {
        if self.horizon <= self.s_min {
            return vec![self.horizon];
        }
        log_grid(self.s_min, self.horizon, self.n_s)
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    fn steps(&self) -> usize {
        self.flow_steps
            .unwrap_or_else(|| (self.horizon / self.flow_step).ceil().max(1.0) as usize)
    }
}

/// Precomputed unit-ball rule and radius grid for repeated classical maximal
/// evaluations.
struct BallMaximal {
    radii: Vec<f64>,
    offsets: Vec<Vec3>,
    weights: Vec<f64>,
    total: f64,
}

impl BallMaximal {
    fn new(cfg: &MaximalConfig) -> Result<Self> {
        let unit = Capsule::ball(Vec3::zeros(), 1.0)?;
        let rule = QuadratureRule::new(&unit, &cfg.ball)?;
        let total = rule.measure();
        if total == 0.0 {
            return param("ball quadrature has no points");
        }
        Ok(Self {
            radii: cfg.radii(),
            offsets: rule.points().to_vec(),
            weights: rule.weights().to_vec(),
            total,
        })
    }

    fn eval<F>(&self, f: &F, x: &Vec3) -> Result<f64>
    where
        F: Fn(&Vec3) -> Result<f64>,
    {
        let mut best = 0.0f64;
        for &r in &self.radii {
            let mut s = 0.0;
            for (o, w) in self.offsets.iter().zip(&self.weights) {
                s += w * f(&(x + o * r))?.abs();
            }
            best = best.max(s / self.total);
        }
        Ok(best)
    }
}

/// `max_r ⨍_{B_r(x)} |f|` over the configured radius grid.
pub fn classical_maximal<F>(f: F, x: &Vec3, cfg: &MaximalConfig) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    cfg.validate()?;
    BallMaximal::new(cfg)?.eval(&f, x)
}

/// Running integral of the piecewise-linear interpolant of `g` (spacing `dt`)
/// from `0` to `s`.
fn linear_integral(g: &[f64], cumulative: &[f64], dt: f64, s: f64) -> f64 {
    let n = g.len() - 1;
    let pos = s / dt;
    let k = (pos.floor() as usize).min(n.saturating_sub(1));
    let frac = (pos - k as f64).clamp(0.0, 1.0);
    if n == 0 {
        return 0.0;
    }
    cumulative[k] + dt * (frac * g[k] + 0.5 * frac * frac * (g[k + 1] - g[k]))
}

fn cumulative_trapezoid(g: &[f64], dt: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(g.len());
    c.push(0.0);
    for k in 1..g.len() {
        c.push(c[k - 1] + 0.5 * dt * (g[k - 1] + g[k]));
    }
    c
}

/// `max_s (1/2s) ∫_{-s}^{s} g(τ) dτ` for samples `g_±[k] = g(±k dt)`.
fn centered_maximal(forward: &[f64], backward: &[f64], dt: f64, s_grid: &[f64]) -> f64 {
    let cf = cumulative_trapezoid(forward, dt);
    let cb = cumulative_trapezoid(backward, dt);
    let mut best = 0.0f64;
    for &s in s_grid {
        let v = linear_integral(forward, &cf, dt, s) + linear_integral(backward, &cb, dt, s);
        best = best.max(v / (2.0 * s));
    }
    best
}

/// `max_s (1/2s) ∫_{-s}^{s} |f(Φ_τ x)| dτ` over the configured s-grid. The
/// trajectory is sampled on equal flow steps and `|f|` is integrated as its
/// piecewise-linear interpolant between them.
pub fn streamwise_maximal<F>(f: F, map: &FlowMap, x: &Vec3, cfg: &MaximalConfig) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    cfg.validate()?;
    streamwise_inner(&f, map, x, cfg, &cfg.s_grid())
}

fn streamwise_inner<F>(
    f: &F,
    map: &FlowMap,
    x: &Vec3,
    cfg: &MaximalConfig,
    s_grid: &[f64],
) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    let n = cfg.steps();
    let dt = cfg.horizon / n as f64;
    let (fw, bw) = map.trajectory(x, cfg.horizon, n)?;
    let eval = |pts: &[Vec3]| -> Result<Vec<f64>> { pts.iter().map(|p| Ok(f(p)?.abs())).collect() };
    Ok(centered_maximal(&eval(&fw)?, &eval(&bw)?, dt, s_grid))
}

/// `⨍_c 𝓜_Φ[𝓜(|∇u|²)]`, with `𝓜_Φ` on the horizon of `cfg`.
pub fn xi_tilde_squared(
    field: &VectorField,
    c: &Capsule,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
) -> Result<f64> {
    cfg.validate()?;
    let rule = QuadratureRule::new(c, q)?;
    let ball = BallMaximal::new(cfg)?;
    let map = FlowMap::new(field, cfg.flow_step)?;
    let s_grid = cfg.s_grid();
    let density = |y: &Vec3| field.dirichlet_density(y);
    let inner = |z: &Vec3| ball.eval(&density, z);
    rule.try_average(|y| streamwise_inner(&inner, &map, y, cfg, &s_grid))
}

/// Level-set measures on a threshold grid and the weak-Lᵖ estimate
/// `sup_α α |{f > α}|^{1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakNormEstimate {
    pub p: f64,
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
    pub estimate: f64,
}

impl WeakNormEstimate {
    /// From equally weighted samples of `f`, each carrying volume `weight`.
    /// `thresholds` must be nonempty and sorted ascending.
    pub fn from_samples(values: &[f64], weight: f64, p: f64, thresholds: &[f64]) -> Result<Self> {
        if thresholds.is_empty() {
            return param("threshold grid is empty");
        }
        if !(p > 0.0) {
            return param(format!("exponent must be positive, got {p}"));
        }
        if thresholds.windows(2).any(|w| w[1] < w[0]) {
            return param("threshold grid must be ascending");
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let measures: Vec<f64> = thresholds
            .iter()
            .map(|&a| {
                let below = sorted.partition_point(|&v| v <= a);
                (sorted.len() - below) as f64 * weight
            })
            .collect();
        let estimate = thresholds
            .iter()
            .zip(&measures)
            .map(|(&a, &m)| a * m.powf(1.0 / p))
            .fold(0.0, f64::max);
        Ok(Self {
            p,
            thresholds: thresholds.to_vec(),
            measures,
            estimate,
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.measures.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Monte Carlo weak-Lᵖ estimate of `f` on the box `[lo, hi]`.
pub fn weak_norm<F>(
    f: F,
    p: f64,
    lo: &Vec3,
    hi: &Vec3,
    thresholds: &[f64],
    samples: usize,
    seed: u64,
) -> Result<WeakNormEstimate>
where
    F: Fn(&Vec3) -> f64,
{
    if thresholds.is_empty() {
        return param("threshold grid is empty");
    }
    if samples == 0 {
        return param("sample count must be positive");
    }
    let ext = hi - lo;
    if ext.iter().any(|v| !(*v > 0.0)) {
        return param("sampling box is degenerate");
    }
    let mut r = rng(seed);
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let y = lo + ext.component_mul(&Vec3::new(r.random(), r.random(), r.random()));
            f(&y)
        })
        .collect();
    WeakNormEstimate::from_samples(&values, ext.x * ext.y * ext.z / samples as f64, p, thresholds)
}

/// `|Φ_{(t1-t0)/U}(B_R(t0 e1)) ∩ B_R(t1 e1)| / |B_R|` from `n` advected
/// uniform samples.
pub fn streamline_proximity(
    map: &FlowMap,
    radius: f64,
    t0: f64,
    t1: f64,
    speed: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if !(speed > 0.0) {
        return Err(Error::Precondition(format!(
            "streamline proximity needs U > 0, got {speed}"
        )));
    }
    if n < 1000 {
        return param(format!("need at least 1000 samples, got {n}"));
    }
    if !(radius > 0.0) {
        return param("radius must be positive");
    }
    let start = Vec3::new(t0, 0.0, 0.0);
    let target = Vec3::new(t1, 0.0, 0.0);
    let time = (t1 - t0) / speed;
    let mut r = rng(seed);
    let mut hits = 0usize;
    let mut exits = 0usize;
    let mut drawn = 0usize;
    while drawn < n {
        let d = Vec3::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        if d.norm_squared() >= 1.0 {
            continue;
        }
        drawn += 1;
        match map.flow(&(start + d * radius), time) {
            Ok(y) => {
                if (y - target).norm() < radius {
                    hits += 1;
                }
            }
            Err(Error::DomainExit { .. }) => exits += 1,
            Err(e) => return Err(e),
        }
    }
    if exits > 0 {
        return Err(Error::SampleExit {
            fraction: exits as f64 / n as f64,
        });
    }
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletComparison {
    /// `⨍_{2c} |∇u|²`.
    pub dirichlet: f64,
    /// `⨍_c 𝓜_Φ[𝓜(|∇u|²)]`.
    pub maximal: f64,
    /// `None` when both sides vanish (degenerate field).
    pub ratio: Option<f64>,
}

impl DirichletComparison {
    pub fn within(&self, bound: f64) -> bool {
        self.ratio.is_none_or(|r| r <= bound)
    }
}

pub fn dirichlet_comparison(
    field: &VectorField,
    c: &Capsule,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
) -> Result<DirichletComparison> {
    let doubled = c.scale(2.0)?;
    let dirichlet =
        QuadratureRule::new(&doubled, q)?.try_average(|y| field.dirichlet_density(y))?;
    let maximal = xi_tilde_squared(field, c, cfg, q)?;
    let ratio = if maximal > 0.0 {
        Some(dirichlet / maximal)
    } else if dirichlet == 0.0 {
        None
    } else {
        Some(f64::INFINITY)
    };
    Ok(DirichletComparison {
        dirichlet,
        maximal,
        ratio,
    })
}

/// `‖𝓜_Φ f‖_p / ‖f‖_p` with both norms by Monte Carlo on the box `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn streamwise_lp_ratio<F>(
    f: F,
    map: &FlowMap,
    lo: &Vec3,
    hi: &Vec3,
    p: f64,
    cfg: &MaximalConfig,
    samples: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    cfg.validate()?;
    if samples == 0 || !(p >= 1.0) {
        return param("need samples > 0 and p >= 1");
    }
    let ext = hi - lo;
    let mut r = rng(seed);
    let pts: Vec<Vec3> = (0..samples)
        .map(|_| lo + ext.component_mul(&Vec3::new(r.random(), r.random(), r.random())))
        .collect();
    let s_grid = cfg.s_grid();
    let pairs: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|y| {
            let m = streamwise_inner(&f, map, y, cfg, &s_grid)?;
            Ok((m.powf(p), f(y)?.abs().powf(p)))
        })
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for pr in pairs {
        let (a, b) = pr?;
        num += a;
        den += b;
    }
    if den == 0.0 {
        return param("f vanishes on the sampling box");
    }
    Ok((num / den).powf(1.0 / p))
}
