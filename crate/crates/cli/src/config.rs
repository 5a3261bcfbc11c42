use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use caplab_core::{CapsuleParams, GridField, MaximalConfig, Preset, QuadratureSpec, Vec3, VectorField};
use serde::{Deserialize, Serialize};

/// Everything a run needs. Every key is optional in the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub field: FieldSpec,
    pub capsule: CapsuleParams,
    pub maximal: MaximalConfig,
    pub quadrature: QuadratureSpec,
    pub points: PointSource,
    pub tolerances: Tolerances,
    pub verify: VerifySettings,
    pub construct: ConstructSettings,
    pub cover: CoverSettings,
    pub kernel: KernelSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("caplab-out"),
            field: FieldSpec::default(),
            capsule: CapsuleParams {
                r_lo: 1e-2,
                r_hi: 10.0,
                scan_points: 60,
                ..CapsuleParams::default()
            },
            maximal: MaximalConfig {
                n_r: 6,
                flow_steps: Some(4),
                ..MaximalConfig::coarse()
            },
            quadrature: QuadratureSpec::Gauss { order: 2 },
            points: PointSource::default(),
            tolerances: Tolerances::default(),
            verify: VerifySettings::default(),
            construct: ConstructSettings::default(),
            cover: CoverSettings::default(),
            kernel: KernelSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.capsule.validate()?;
        self.maximal.validate()?;
        self.quadrature.validate()?;
        if let Some(g) = &self.field.grid {
            if !g.exists() {
                bail!("grid file {} does not exist", g.display());
            }
        }
        if let Some(p) = &self.points.csv {
            if !p.exists() {
                bail!("points file {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// The quadrature rule with the run seed folded into Monte Carlo rules.
    pub fn quadrature(&self) -> QuadratureSpec {
        self.quadrature.with_seed(self.seed)
    }
}

/// A named preset with parameters, or a `.vf3d` grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    pub preset: Option<String>,
    pub grid: Option<PathBuf>,
    pub params: BTreeMap<String, f64>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            preset: Some("curl_gaussian".into()),
            grid: None,
            params: BTreeMap::new(),
        }
    }
}

impl FieldSpec {
    /// `--field` accepts either an existing file or a preset name.
    pub fn from_arg(arg: &str) -> Self {
        if Path::new(arg).is_file() {
            Self {
                preset: None,
                grid: Some(arg.into()),
                params: BTreeMap::new(),
            }
        } else {
            Self {
                preset: Some(arg.into()),
                grid: None,
                params: BTreeMap::new(),
            }
        }
    }

    pub fn resolve(&self) -> Result<VectorField> {
        match (&self.grid, &self.preset) {
            (Some(path), _) => Ok(GridField::read(path)
                .with_context(|| format!("loading grid {}", path.display()))?
                .into()),
            (None, Some(name)) => Ok(Preset::from_name(name, &self.params)?.into()),
            (None, None) => bail!("field needs a preset name or a grid file"),
        }
    }

    pub fn label(&self) -> String {
        match (&self.grid, &self.preset) {
            (Some(p), _) => p.display().to_string(),
            (None, Some(n)) => n.clone(),
            (None, None) => "none".into(),
        }
    }
}

/// Points from a CSV file with header `x,y,z`, or a regular lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointSource {
    pub csv: Option<PathBuf>,
    pub lattice: Lattice,
}

impl Default for PointSource {
    fn default() -> Self {
        Self {
            csv: None,
            lattice: Lattice {
                lo: [-1.0; 3],
                hi: [1.0; 3],
                n: [3; 3],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl Lattice {
    pub fn points(&self) -> Result<Vec<Vec3>> {
        if self.n.contains(&0) {
            bail!("lattice needs at least one node per axis");
        }
        let coord = |axis: usize, i: usize| {
            let (a, b, n) = (self.lo[axis], self.hi[axis], self.n[axis]);
            if n == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.n.iter().product());
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    out.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
        Ok(out)
    }

    /// Volume per node, used as the sample weight for level-set measures.
    pub fn cell_volume(&self) -> f64 {
        (0..3)
            .map(|a| (self.hi[a] - self.lo[a]).abs() / self.n[a] as f64)
            .product()
    }
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: f64,
}

impl PointSource {
    pub fn load(&self) -> Result<Vec<Vec3>> {
        match &self.csv {
            Some(path) => read_points(path),
            None => self.lattice.points(),
        }
    }
}

pub fn read_points(path: &Path) -> Result<Vec<Vec3>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening points {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PointRow>().enumerate() {
        let r = row.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        out.push(Vec3::new(r.x, r.y, r.z));
    }
    Ok(out)
}

/// Tolerances a run can tighten or loosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative `b·∇Γ - νΔΓ` residual.
    pub pde_residual: f64,
    /// Relative error of `∇Γ` against central differences.
    pub gradient_fd: f64,
    /// Relative error of curl-inverted Biot–Savart velocity.
    pub curl_inversion: f64,
    /// Slack on both sides of the capsule sandwich.
    pub sandwich_slack: f64,
    /// Root residual, as a multiple of `ε₀`.
    pub root_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pde_residual: 1e-8,
            gradient_fd: 1e-5,
            curl_inversion: 0.05,
            sandwich_slack: 0.02,
            root_residual: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Smaller sample counts everywhere; for smoke runs.
    pub quick: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructSettings {
    /// Exponent of the weak-Lᵖ estimate of `Ξ̃`.
    pub weak_p: f64,
    pub thresholds: usize,
}

impl Default for ConstructSettings {
    fn default() -> Self {
        Self {
            weak_p: 2.0,
            thresholds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverSettings {
    /// Dilation for the coverage check; the empirical one when unset.
    pub k: Option<f64>,
    pub volume_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSettings {
    pub nu: f64,
    pub speeds: Vec<f64>,
    /// Table rows: `x1` in `[-extent, extent]` at each off-axis distance.
    pub extent: f64,
    pub samples: usize,
    pub offsets: Vec<f64>,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self {
            nu: 1.0,
            speeds: vec![0.0, 1.0, 10.0],
            extent: 5.0,
            samples: 41,
            offsets: vec![0.1, 0.5, 1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_roundtrips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: RunConfig = toml::from_str(
            "seed = 7\n[field]\npreset = \"shear\"\n[quadrature]\nmode = \"monte_carlo\"\nsamples = 100\nseed = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.field.preset.as_deref(), Some("shear"));
        assert_eq!(cfg.quadrature(), QuadratureSpec::MonteCarlo { samples: 100, seed: 7 });
        assert_eq!(cfg.capsule, RunConfig::default().capsule);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn lattice_points() {
        let l = Lattice {
            lo: [0.0; 3],
            hi: [1.0; 3],
            n: [2, 1, 3],
        };
        let p = l.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], Vec3::new(0.0, 0.5, 0.0));
        assert_eq!(p[5], Vec3::new(1.0, 0.5, 1.0));
    }
}
