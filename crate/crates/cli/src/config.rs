//! Run configuration: JSON input with every omitted field materialized to
//! its default, so reports can echo the effective value of each tunable.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eigenacs_core::problems::{catalog_entry, ProblemName};
use eigenacs_core::{AcsConfig, GdConfig, LossWeights, PopulationConfig, ProblemSpec, ReferencePolicy};
use serde::{Deserialize, Serialize};

/// Either a catalog key or a full inline problem definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Name(String),
    Inline(Box<ProblemSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Single,
    Population,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisInput {
    pub width: Option<usize>,
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollocationInput {
    pub n_interior: Option<usize>,
    /// Boundary points per unit edge length; ignored for interval endpoints.
    pub boundary_density: Option<f64>,
    pub reference: Option<ReferencePolicy>,
    pub u_ref: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleInput {
    pub mu0: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputInput {
    pub dir: Option<PathBuf>,
    pub emit_fields: Option<bool>,
    /// Points per axis of the field sampling grid.
    pub grid: Option<usize>,
}

/// Config file as written by the user.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigInput {
    pub problem: ProblemRef,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub basis: BasisInput,
    #[serde(default)]
    pub collocation: CollocationInput,
    #[serde(default)]
    pub weights: Option<LossWeights>,
    #[serde(default)]
    pub acs: Option<AcsConfig>,
    #[serde(default)]
    pub single: SingleInput,
    #[serde(default)]
    pub population: Option<PopulationConfig>,
    #[serde(default)]
    pub gd: Option<GdConfig>,
    #[serde(default)]
    pub output: OutputInput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSettings {
    pub width: usize,
    pub bandwidth: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollocationSettings {
    pub n_interior: usize,
    pub boundary_density: f64,
    pub reference: ReferencePolicy,
    pub u_ref: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub emit_fields: bool,
    pub grid: usize,
}

/// Fully resolved configuration; this is what reports echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Catalog entry the problem came from, if any.
    pub catalog_name: Option<String>,
    pub mode: RunMode,
    pub seed: u64,
    pub basis: BasisSettings,
    pub collocation: CollocationSettings,
    pub weights: LossWeights,
    pub acs: AcsConfig,
    pub mu0: f64,
    pub population: PopulationConfig,
    pub gd: GdConfig,
    pub output: OutputSettings,
}

pub const DEFAULT_WIDTH: usize = 500;
const GENERIC_N_INTERIOR: usize = 1000;
const GENERIC_BOUNDARY_DENSITY: f64 = 20.0;
const DEFAULT_GRID: usize = 64;

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let input: RunConfigInput = serde_json::from_str(text)?;
        Self::resolve(input)
    }

    pub fn resolve(input: RunConfigInput) -> Result<Self> {
        let (spec, name) = match input.problem {
            ProblemRef::Name(n) => {
                let name: ProblemName = n.parse().context("problem")?;
                (catalog_entry(name), Some(name))
            }
            ProblemRef::Inline(spec) => (*spec, None),
        };
        spec.validate().context("problem")?;
        let rec = name.map(|n| n.recommended());

        let width = input.basis.width.unwrap_or(DEFAULT_WIDTH);
        if width == 0 {
            bail!("basis.width must be at least 1");
        }
        let bandwidth = match (input.basis.bandwidth, rec) {
            (Some(b), _) => b,
            (None, Some(r)) => r.bandwidth,
            (None, None) => bail!("basis.bandwidth is required for inline problems"),
        };
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            bail!("basis.bandwidth must be positive and finite, got {bandwidth}");
        }

        let c = input.collocation;
        let n_interior = c
            .n_interior
            .or(rec.map(|r| r.n_interior))
            .unwrap_or(GENERIC_N_INTERIOR);
        if n_interior == 0 {
            bail!("collocation.n_interior must be at least 1");
        }
        let boundary_density = c
            .boundary_density
            .or(rec.map(|r| r.boundary_density))
            .unwrap_or(GENERIC_BOUNDARY_DENSITY);
        if !(boundary_density > 0.0) || !boundary_density.is_finite() {
            bail!("collocation.boundary_density must be positive, got {boundary_density}");
        }
        // inline problems keep their own per-segment counts unless a density is given
        let spec = if name.is_some() || c.boundary_density.is_some() {
            spec.with_boundary_density(boundary_density)
        } else {
            spec
        };
        let u_ref = c.u_ref.unwrap_or(1.0);
        if u_ref == 0.0 || !u_ref.is_finite() {
            bail!("collocation.u_ref must be finite and nonzero");
        }
        let reference = c.reference.unwrap_or_default();
        if let ReferencePolicy::Fixed { point } = &reference {
            if point.len() != spec.dim() || !spec.domain.contains(point) {
                bail!("collocation.reference.point {point:?} is not inside the domain");
            }
        }
        if let ReferencePolicy::Random { margin } = reference {
            if !(0.0..0.5).contains(&margin) {
                bail!("collocation.reference.margin must lie in [0, 0.5), got {margin}");
            }
        }

        let weights = input.weights.unwrap_or_default();
        weights.validate().context("weights")?;
        let acs = input.acs.unwrap_or_default();
        acs.validate().context("acs")?;
        let mut population = input.population.unwrap_or_default();
        population.seed = input.seed;
        population.validate().context("population")?;
        let gd = input.gd.unwrap_or_default();
        gd.validate().context("gd")?;

        let mu0 = input.single.mu0.unwrap_or(spec.search_bounds.0);
        if !mu0.is_finite() {
            bail!("single.mu0 must be finite");
        }
        let grid = input.output.grid.unwrap_or(DEFAULT_GRID);
        if grid < 2 {
            bail!("output.grid must be at least 2");
        }
        let dir = std::env::var_os("EIGENACS_OUT")
            .map(PathBuf::from)
            .or(input.output.dir)
            .unwrap_or_else(|| PathBuf::from("out"));

        Ok(Self {
            catalog_name: name.map(|n| n.as_str().to_string()),
            problem: spec,
            mode: input.mode,
            seed: input.seed,
            basis: BasisSettings {
                width,
                bandwidth,
                seed: eigenacs_core::population::derive_seed(input.seed, 0, 0),
            },
            collocation: CollocationSettings {
                n_interior,
                boundary_density,
                reference,
                u_ref,
                seed: eigenacs_core::population::derive_seed(input.seed, 0, 1),
            },
            weights,
            acs,
            mu0,
            population,
            gd,
            output: OutputSettings {
                dir,
                emit_fields: input.output.emit_fields.unwrap_or(false),
                grid,
            },
        })
    }

    pub fn problem_name(&self) -> Option<ProblemName> {
        self.catalog_name.as_deref().and_then(|n| n.parse().ok())
    }

    pub fn basis_config(&self) -> eigenacs_core::BasisConfig {
        eigenacs_core::BasisConfig {
            width: self.basis.width,
            bandwidth: self.basis.bandwidth,
        }
    }

    pub fn collocation_config(&self) -> eigenacs_core::CollocationConfig {
        eigenacs_core::CollocationConfig {
            n_interior: self.collocation.n_interior,
            reference: self.collocation.reference.clone(),
            u_ref: self.collocation.u_ref,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_materialize() {
        let cfg = RunConfig::from_json(r#"{"problem": "buckling_pin_pin"}"#).unwrap();
        assert_eq!(cfg.basis.width, 500);
        assert_eq!(cfg.basis.bandwidth, 1.0);
        assert_eq!(cfg.collocation.n_interior, 300);
        assert_eq!(cfg.weights, LossWeights::default());
        assert_eq!(cfg.mu0, 1.0);
        assert_eq!(cfg.mode, RunMode::Single);
    }

    #[test]
    fn unknown_problem_lists_catalog() {
        let err = RunConfig::from_json(r#"{"problem": "drum"}"#).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("problem") && msg.contains("plate_ss"), "{msg}");
    }

    #[test]
    fn misspelled_field_is_named() {
        let err = RunConfig::from_json(r#"{"problem": "plate_ss", "basis": {"widht": 10}}"#).unwrap_err();
        assert!(format!("{err:#}").contains("widht"));
        let err = RunConfig::from_json(r#"{"problem": "plate_ss", "acs": {"max_iters": 0}}"#).unwrap_err();
        assert!(format!("{err:#}").contains("acs.max_iters"));
    }

    #[test]
    fn inline_problem_round_trips() {
        let spec = catalog_entry(ProblemName::HelmholtzSquare);
        let text = serde_json::json!({ "problem": spec, "basis": { "bandwidth": 6.0 } }).to_string();
        let cfg = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg.problem, spec);
        assert!(cfg.catalog_name.is_none());
        assert!(RunConfig::from_json(&serde_json::json!({ "problem": spec }).to_string()).is_err());
    }
}
