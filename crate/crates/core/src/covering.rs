//! Greedy Vitali-type selection over finite capsule families and the
//! coverage and measure certificates that go with it.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{find_capsule, CapsuleParams};
use crate::error::{param, Result};
use crate::fields::VectorField;
use crate::geometry::{Capsule, QuadratureSpec};
use crate::maximal::{MaximalConfig, WeakNormEstimate};
use crate::{rng, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSelection {
    /// Indices into the input family, in selection order.
    pub selected: Vec<usize>,
    pub iterations: usize,
    /// Selected capsules are pairwise disjoint under the exact predicate.
    pub disjoint: bool,
    /// Every input capsule meets a selected capsule of more than half its
    /// radius.
    pub attached: bool,
}

/// Repeatedly picks the lowest-index capsule of maximal radius among those
/// remaining (so its radius exceeds half the remaining supremum) and discards
/// everything it meets.
pub fn vitali_select(family: &[Capsule]) -> CoverSelection {
    let mut remaining: Vec<usize> = (0..family.len()).collect();
    let mut selected = Vec::new();
    let mut iterations = 0;
    while !remaining.is_empty() {
        iterations += 1;
        let sup = remaining
            .iter()
            .map(|&i| family[i].radius())
            .fold(f64::NEG_INFINITY, f64::max);
        let pick = *remaining
            .iter()
            .find(|&&i| family[i].radius() == sup)
            .expect("nonempty");
        selected.push(pick);
        let chosen = family[pick];
        remaining = remaining
            .par_iter()
            .copied()
            .filter(|&i| i != pick && !chosen.intersects(&family[i]))
            .collect();
    }
    let disjoint = selected.iter().enumerate().all(|(a, &i)| {
        selected[a + 1..]
            .iter()
            .all(|&j| !family[i].intersects(&family[j]))
    });
    let attached = family.iter().all(|c| {
        selected
            .iter()
            .any(|&j| family[j].radius() > 0.5 * c.radius() && family[j].intersects(c))
    });
    CoverSelection {
        selected,
        iterations,
        disjoint,
        attached,
    }
}

/// The center and 26 boundary points of a capsule: directions of the
/// 3 × 3 × 3 stencil in the capsule frame, attached to the nearer core end.
pub fn coverage_samples(c: &Capsule) -> Vec<Vec3> {
    let frame = c.frame();
    let (p, q) = c.segment();
    let mut out = vec![c.center()];
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let d = Vec3::new(i as f64, j as f64, k as f64).normalize();
                let base = match i {
                    -1 => p,
                    1 => q,
                    _ => c.center(),
                };
                out.push(base + frame * d * c.radius());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub k: f64,
    pub centers_covered: usize,
    pub samples_covered: usize,
    pub samples_total: usize,
    pub family_size: usize,
    /// Input capsules whose center is not covered.
    pub uncovered_indices: Vec<usize>,
    pub uncovered_samples: Vec<[f64; 3]>,
}

impl CoverageReport {
    pub fn center_fraction(&self) -> f64 {
        self.centers_covered as f64 / self.family_size.max(1) as f64
    }

    pub fn sample_fraction(&self) -> f64 {
        self.samples_covered as f64 / self.samples_total.max(1) as f64
    }

    pub fn fully_covered(&self) -> bool {
        self.samples_covered == self.samples_total
    }
}

/// Checks the center and 26 boundary samples of every input capsule against
/// the closed union of the `K`-dilated selection (dilation about each selected
/// capsule's own center).
pub fn coverage_check(
    selection: &CoverSelection,
    family: &[Capsule],
    k: f64,
) -> Result<CoverageReport> {
    if !(k >= 1.0) {
        return param(format!("coverage dilation K must be at least 1, got {k}"));
    }
    // boundary samples sit on the surface up to rounding, so membership in the
    // closed dilation is decided with a relative slack of 1e-9
    let limit = k * (1.0 + 1e-9);
    let covered = |y: &Vec3| {
        selection
            .selected
            .iter()
            .any(|&j| family[j].gauge(y) <= limit)
    };
    let mut report = CoverageReport {
        k,
        centers_covered: 0,
        samples_covered: 0,
        samples_total: 0,
        family_size: family.len(),
        uncovered_indices: Vec::new(),
        uncovered_samples: Vec::new(),
    };
    for (i, c) in family.iter().enumerate() {
        let samples = coverage_samples(c);
        for (s, y) in samples.iter().enumerate() {
            report.samples_total += 1;
            if covered(y) {
                report.samples_covered += 1;
                if s == 0 {
                    report.centers_covered += 1;
                }
            } else {
                if s == 0 {
                    report.uncovered_indices.push(i);
                }
                report.uncovered_samples.push([y.x, y.y, y.z]);
            }
        }
    }
    Ok(report)
}

/// Smallest `K` (over the coverage samples) for which every sample of every
/// input capsule lies in some `K`-dilated selected capsule.
pub fn empirical_k(selection: &CoverSelection, family: &[Capsule]) -> f64 {
    family
        .iter()
        .flat_map(coverage_samples)
        .map(|y| {
            selection
                .selected
                .iter()
                .map(|&j| family[j].gauge(&y))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(1.0, f64::max)
}

/// Monte Carlo volume of the union of the family.
pub fn union_volume(family: &[Capsule], samples: usize, seed: u64) -> Result<f64> {
    union_volume_with_error(family, samples, seed).map(|(v, _)| v)
}

/// Monte Carlo union volume together with its binomial standard error.
pub fn union_volume_with_error(family: &[Capsule], samples: usize, seed: u64) -> Result<(f64, f64)> {
    if family.is_empty() {
        return Ok((0.0, 0.0));
    }
    if samples == 0 {
        return param("sample count must be positive");
    }
    let (mut lo, mut hi) = family[0].bounding_box();
    for c in &family[1..] {
        let (a, b) = c.bounding_box();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    let ext = hi - lo;
    let mut r = rng(seed);
    let pts: Vec<Vec3> = (0..samples)
        .map(|_| lo + ext.component_mul(&Vec3::new(r.random(), r.random(), r.random())))
        .collect();
    let hits = pts
        .par_iter()
        .filter(|y| family.iter().any(|c| c.contains(y)))
        .count();
    let boxed = ext.x * ext.y * ext.z;
    let frac = hits as f64 / samples as f64;
    Ok((boxed * frac, boxed * (frac * (1.0 - frac) / samples as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureInequality {
    pub k: f64,
    pub union_volume: f64,
    /// Standard error of `union_volume`.
    pub std_error: f64,
    pub dilated_volume: f64,
    pub holds: bool,
}

/// `|⋃ C| ≤ Σ_selected |K C_i|`. The union is a Monte Carlo estimate, so the
/// inequality is accepted within three standard errors; for a disjoint
/// family with `K = 1` it is an equality.
pub fn measure_inequality(
    selection: &CoverSelection,
    family: &[Capsule],
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasureInequality> {
    let (union, err) = union_volume_with_error(family, samples, seed)?;
    let dilated: f64 = selection
        .selected
        .iter()
        .map(|&i| family[i].volume() * k.powi(3))
        .sum();
    Ok(MeasureInequality {
        k,
        union_volume: union,
        std_error: err,
        dilated_volume: dilated,
        holds: union - 3.0 * err <= dilated,
    })
}

/// Monte Carlo estimate of `|S_α| = |{Ξ̃² > α}|` on the box `[lo, hi]` and of
/// the weak-Lᵖ quasi-norm of `Ξ̃`, `sup_α √α |S_α|^{1/p}`, running the
/// construction at every sample.
#[allow(clippy::too_many_arguments)]
pub fn superlevel_weak_norm(
    field: &VectorField,
    params: &CapsuleParams,
    cfg: &MaximalConfig,
    q: &QuadratureSpec,
    lo: &Vec3,
    hi: &Vec3,
    p: f64,
    thresholds: &[f64],
    samples: usize,
    seed: u64,
) -> Result<WeakNormEstimate> {
    if samples == 0 {
        return param("sample count must be positive");
    }
    if thresholds.iter().any(|a| *a < 0.0) {
        return param("thresholds must be nonnegative");
    }
    let ext = hi - lo;
    let mut r = rng(seed);
    let pts: Vec<Vec3> = (0..samples)
        .map(|_| lo + ext.component_mul(&Vec3::new(r.random(), r.random(), r.random())))
        .collect();
    let xi: Vec<f64> = pts
        .par_iter()
        .map(|x| find_capsule(field, x, params, cfg, q).map(|c| c.xi_tilde))
        .collect::<Result<_>>()?;
    let roots: Vec<f64> = thresholds.iter().map(|a| a.sqrt()).collect();
    let weight = ext.x * ext.y * ext.z / samples as f64;
    let mut est = WeakNormEstimate::from_samples(&xi, weight, p, &roots)?;
    est.thresholds = thresholds.to_vec();
    Ok(est)
}
