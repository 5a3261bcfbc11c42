use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use caplab_core::construction::{classify_points, partition, RootStatus};
use caplab_core::covering::{coverage_check, empirical_k, measure_inequality, vitali_select};
use caplab_core::functionals::{
    chae_wolf_crossover, comparability_ratio, competitor_exponents, seregin_crossover, thresholds,
};
use caplab_core::quad::log_grid;
use caplab_core::{Capsule, ConstructedCapsule, OseenKernel, Vec3, WeakNormEstimate};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::checks::{run_suite, Ctx};
use crate::config::RunConfig;
use crate::report::{CheckRecord, Report};

pub fn run_verify(config: &RunConfig) -> Result<Report> {
    let records = run_suite(&Ctx::new(config));
    let report = Report::new("verify", config, records);
    report.write(&config.out, "verify")?;
    Ok(report)
}

/// One line of `capsules.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub point: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capsule: Option<ConstructedCapsule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn stats(xs: &[f64]) -> Value {
    if xs.is_empty() {
        return Value::Null;
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    serde_json::json!({"count": xs.len(), "min": min, "max": max, "mean": mean})
}

pub fn run_construct(config: &RunConfig) -> Result<Report> {
    let field = config.field.resolve()?;
    let points = config.points.load()?;
    let q = config.quadrature();
    let params = &config.capsule;
    let results = classify_points(&field, &points, params, &config.maximal, &q);
    let (round, long, failed) = partition(&results);

    let mut lines = Vec::with_capacity(points.len());
    let mut statuses = BTreeMap::<String, usize>::new();
    let (mut residuals, mut radii, mut xi) = (Vec::new(), Vec::new(), Vec::new());
    for (i, (p, res)) in points.iter().zip(&results).enumerate() {
        let (capsule, error) = match res {
            Ok(c) => {
                let key = serde_json::to_value(c.status)?.as_str().unwrap_or("").to_string();
                *statuses.entry(key).or_default() += 1;
                if c.status == RootStatus::Converged {
                    residuals.push(c.residual);
                }
                radii.push(c.radius());
                xi.push(c.xi_tilde);
                (Some(c.clone()), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        lines.push(PointResult {
            index: i,
            point: [p.x, p.y, p.z],
            capsule,
            error,
        });
    }
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(
        config.out.join("capsules.json"),
        serde_json::to_string_pretty(&lines)? + "\n",
    )?;
    write_capsule_csv(&config.out.join("capsules.csv"), &lines)?;

    let tol = config.tolerances.root_residual * params.epsilon0;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let mut records = vec![
        CheckRecord::new("classification", "construction.classification")
            .value("field", config.field.label())
            .value("points", points.len())
            .value("round", round.len())
            .value("long", long.len())
            .value("failed", failed.len())
            .value("statuses", &statuses)
            .value("radius", stats(&radii))
            .recorded(),
        CheckRecord::new("root_residual", "construction.root")
            .value("converged", residuals.len())
            .value("max_residual", worst)
            .value("residual", stats(&residuals))
            .bound(format!("≤ {tol:e}"))
            .check(worst <= tol),
    ];
    if !failed.is_empty() {
        records.push(
            CheckRecord::new("point_errors", "construction.root")
                .value("failed_indices", &failed)
                .note("per-point failures are listed in capsules.json")
                .recorded(),
        );
    }

    let weight = if config.points.csv.is_some() {
        1.0
    } else {
        config.points.lattice.cell_volume()
    };
    let top = xi.iter().copied().fold(0.0, f64::max);
    let floor = xi.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let rec = CheckRecord::new("xi_weak_norm", "maximal.weak_norm")
        .value("p", config.construct.weak_p)
        .value("sample_weight", weight);
    records.push(if top > 0.0 {
        let ts = log_grid(floor * (1.0 - 1e-9), top * (1.0 - 1e-9), config.construct.thresholds.max(1));
        let est = WeakNormEstimate::from_samples(&xi, weight, config.construct.weak_p, &ts)?;
        rec.value("estimate", est.estimate)
            .value("thresholds", &est.thresholds)
            .value("measures", &est.measures)
            .recorded()
    } else {
        rec.value("estimate", 0.0).recorded()
    });

    let report = Report::new("construct", config, records);
    report.write(&config.out, "construct")?;
    Ok(report)
}

fn write_capsule_csv(path: &Path, lines: &[PointResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "index", "x", "y", "z", "status", "classification", "R", "L", "e1", "e2", "e3", "U",
        "xi_tilde", "residual",
    ])?;
    for l in lines {
        let mut row = vec![
            l.index.to_string(),
            l.point[0].to_string(),
            l.point[1].to_string(),
            l.point[2].to_string(),
        ];
        match &l.capsule {
            Some(c) => {
                let e = c.capsule.direction();
                let status = serde_json::to_value(c.status)?;
                let class = serde_json::to_value(c.classification)?;
                row.extend([
                    status.as_str().unwrap_or("").to_string(),
                    class.as_str().unwrap_or("").to_string(),
                    c.capsule.radius().to_string(),
                    c.capsule.half_length().to_string(),
                    e.x.to_string(),
                    e.y.to_string(),
                    e.z.to_string(),
                    c.speed.to_string(),
                    c.xi_tilde.to_string(),
                    c.residual.to_string(),
                ]);
            }
            None => {
                row.push("error".into());
                row.extend(std::iter::repeat_n(String::new(), 9));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a capsule family: either a JSON array of capsules
/// (`{"center", "R", "L", "e"}`) or the `capsules.json` written by
/// `construct`, whose failed entries are skipped.
pub fn read_capsules(path: &Path) -> Result<Vec<Capsule>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Array(items) = value else {
        bail!("{}: expected a JSON array of capsules", path.display());
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let raw = match item.get("capsule") {
            Some(Value::Object(cc)) => cc.get("capsule").cloned().unwrap_or(Value::Null),
            Some(_) => continue,
            None if item.get("error").is_some() => continue,
            None => item,
        };
        let c: Capsule = serde_json::from_value(raw)
            .with_context(|| format!("{}: entry {i} is not a capsule", path.display()))?;
        out.push(c);
    }
    Ok(out)
}

pub fn run_cover(config: &RunConfig, capsules: &Path) -> Result<Report> {
    let family = read_capsules(capsules)?;
    if family.is_empty() {
        bail!("{}: no capsules to cover", capsules.display());
    }
    let sel = vitali_select(&family);
    let emp = empirical_k(&sel, &family);
    let k = config.cover.k.unwrap_or(emp.max(1.0));
    let cov = coverage_check(&sel, &family, k)?;
    let samples = config.cover.volume_samples.unwrap_or(200_000);
    let m = measure_inequality(&sel, &family, k, samples, config.seed)?;

    std::fs::create_dir_all(&config.out)?;
    std::fs::write(
        config.out.join("selection.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "selected": sel.selected,
            "iterations": sel.iterations,
            "empirical_k": emp,
        }))? + "\n",
    )?;

    let records = vec![
        CheckRecord::new("disjoint_selection", "covering.vitali")
            .value("family", family.len())
            .value("selected", sel.selected.len())
            .value("iterations", sel.iterations)
            .bound("selected capsules pairwise disjoint; iterations ≤ family size")
            .check(sel.disjoint && sel.iterations <= family.len()),
        CheckRecord::new("attached", "covering.vitali")
            .bound("each input meets a selected capsule of radius > half its own")
            .check(sel.attached),
        CheckRecord::new("empirical_k", "covering.coverage")
            .value("k", emp)
            .recorded(),
        CheckRecord::new("coverage", "covering.coverage")
            .value("k", k)
            .value("center_fraction", cov.center_fraction())
            .value("sample_fraction", cov.sample_fraction())
            .bound("every center and boundary sample inside the K-dilated selection")
            .check(cov.fully_covered()),
        CheckRecord::new("measure_inequality", "covering.coverage")
            .value("k", k)
            .value("union_volume", m.union_volume)
            .value("std_error", m.std_error)
            .value("dilated_volume", m.dilated_volume)
            .bound("|⋃C| - 3σ ≤ Σ|K C_i|")
            .check(m.holds),
    ];
    let report = Report::new("cover", config, records);
    report.write(&config.out, "cover")?;
    Ok(report)
}

fn rational(x: f64) -> Result<Rational64> {
    Rational64::approximate_float(x).with_context(|| format!("{x} has no rational approximation"))
}

pub fn run_functional(config: &RunConfig) -> Result<Report> {
    let p = &config.capsule;
    let (delta, sigma) = (rational(p.delta)?, rational(p.sigma)?);
    let ninth = Rational64::new(1, 9);
    let t = thresholds(ninth, Rational64::new(29, 193), delta, sigma)?;
    let mut records = vec![
        CheckRecord::new("thresholds", "functionals.thresholds")
            .value("delta", delta.to_string())
            .value("sigma", sigma.to_string())
            .value("p_alpha_at_1_9", t.p_alpha.to_string())
            .value("p_beta_at_29_193", t.p_beta.to_string())
            .value("alpha_crit", t.alpha_crit.to_string())
            .value("beta_crit", t.beta_crit.to_string())
            .recorded(),
        CheckRecord::new("crossovers", "functionals.competitors")
            .value("seregin_at_1_9", seregin_crossover(ninth)?.to_string())
            .value("chae_wolf_at_1_9", chae_wolf_crossover(ninth)?.to_string())
            .recorded(),
    ];

    std::fs::create_dir_all(&config.out)?;
    let mut w = csv::Writer::from_path(config.out.join("competitors.csv"))?;
    w.write_record(["s", "seregin", "chae_wolf"])?;
    for k in 0..=33 {
        let s = 3.5 + 0.5 * k as f64;
        let c = competitor_exponents(s)?;
        w.write_record([s.to_string(), c.seregin.to_string(), c.chae_wolf.to_string()])?;
    }
    w.flush()?;

    let field = config.field.resolve()?;
    let points = config.points.load()?;
    let results = classify_points(&field, &points, p, &config.maximal, &config.quadrature());
    let mut ratios = Vec::new();
    for c in results.iter().flatten().filter(|c| c.is_long()) {
        ratios.push(comparability_ratio(&field, &c.capsule, c.speed)?);
    }
    let inside = ratios.iter().filter(|r| (0.5..=1.5).contains(*r)).count();
    records.push(
        CheckRecord::new("line_integral_comparability", "functionals.line_integral")
            .value("field", config.field.label())
            .value("long_capsules", ratios.len())
            .value("within_half_to_three_halves", inside)
            .value("ratio", stats(&ratios))
            .recorded(),
    );
    let report = Report::new("functional", config, records);
    report.write(&config.out, "functional")?;
    Ok(report)
}

pub fn run_kernel(config: &RunConfig) -> Result<Report> {
    let ks = &config.kernel;
    if ks.samples < 2 {
        bail!("kernel table needs at least 2 samples per line");
    }
    std::fs::create_dir_all(&config.out)?;
    let mut w = csv::Writer::from_path(config.out.join("kernel_table.csv"))?;
    w.write_record([
        "U", "x1", "x2", "x3", "gamma", "grad1", "grad2", "grad3", "laplacian", "relative_residual",
    ])?;
    let tol = config.tolerances.pde_residual;
    let mut records = Vec::new();
    for &u in &ks.speeds {
        let k = OseenKernel::new(ks.nu, u)?;
        let mut worst = 0.0f64;
        for &rho in &ks.offsets {
            for i in 0..ks.samples {
                let x1 = -ks.extent + 2.0 * ks.extent * i as f64 / (ks.samples - 1) as f64;
                let x = Vec3::new(x1, rho, 0.0);
                let g = k.grad_gamma(&x)?;
                let rr = k.relative_residual(&x)?;
                worst = worst.max(rr);
                w.write_record([
                    u.to_string(),
                    x1.to_string(),
                    rho.to_string(),
                    "0".into(),
                    k.gamma(&x)?.to_string(),
                    g.x.to_string(),
                    g.y.to_string(),
                    g.z.to_string(),
                    k.laplacian(&x)?.to_string(),
                    rr.to_string(),
                ])?;
            }
        }
        let radii = log_grid(1e-3, 1.0, 7);
        let delta: Vec<f64> = radii
            .iter()
            .map(|&r| k.delta_normalization(r))
            .collect::<caplab_core::Result<_>>()?;
        records.push(
            CheckRecord::new(&format!("pde_residual_u{u}"), "oseen.residual")
                .value("nu", ks.nu)
                .value("speed", u)
                .value("max_relative_residual", worst)
                .bound(format!("< {tol:e}"))
                .check(worst < tol),
        );
        records.push(
            CheckRecord::new(&format!("delta_normalization_u{u}"), "oseen.delta")
                .value("radii", &radii)
                .value("values", &delta)
                .recorded(),
        );
    }
    w.flush()?;
    let report = Report::new("kernel", config, records);
    report.write(&config.out, "kernel")?;
    Ok(report)
}
