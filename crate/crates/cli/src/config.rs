//! TOML experiment configuration. Every section is optional and falls back
//! to the defaults below.

use anyhow::{bail, Context, Result};
use choquard::potentials::{thresholds, TabulatedPotential};
use choquard::solver::{Init, SolveOptions, SpreadingOptions};
use choquard::{Potential, ProblemParams, RadialGrid};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub solver: SolverSpec,
    pub sweep: SweepSpec,
    pub iv_scan: IvScanSpec,
    pub verify: VerifySpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub dim: usize,
    pub alpha: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self { dim: 3, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
    pub grading: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_max: 1000.0,
            n: 1000,
            grading: 3.0,
        }
    }
}

impl GridSpec {
    fn new(r_max: f64, n: usize, grading: f64) -> Self {
        Self { r_max, n, grading }
    }

    pub fn build(&self, params: ProblemParams) -> Result<RadialGrid> {
        RadialGrid::new(params, self.r_max, self.n, self.grading)
            .with_context(|| format!("grid r_max={} n={} grading={}", self.r_max, self.n, self.grading))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        c: f64,
    },
    Model {
        mu: f64,
    },
    Null {
        lambda: f64,
    },
    /// Two-column `r,V` CSV; relative paths resolve against the config file.
    Tabulated {
        path: PathBuf,
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Model { mu: 1.0 }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        let v = match self {
            PotentialSpec::Constant { c } => Potential::Constant { c: *c },
            PotentialSpec::Model { mu } => Potential::Model { mu: *mu },
            PotentialSpec::Null { lambda } => Potential::Null { lambda: *lambda },
            PotentialSpec::Tabulated { path } => Potential::Tabulated(
                TabulatedPotential::from_csv_path(path)
                    .with_context(|| format!("reading tabulated potential {}", path.display()))?,
            ),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn label(&self) -> String {
        match self {
            PotentialSpec::Constant { c } => format!("constant(c={c})"),
            PotentialSpec::Model { mu } => format!("model(mu={mu})"),
            PotentialSpec::Null { lambda } => format!("null(lambda={lambda})"),
            PotentialSpec::Tabulated { path } => format!("tabulated({})", path.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Hls,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub growth: f64,
    pub armijo: f64,
    pub min_step: f64,
    pub precond_shift: f64,
    pub init: InitKind,
    pub init_lambda: f64,
    pub init_sigma: f64,
    pub spreading_fraction: f64,
    pub spreading_consecutive: usize,
    pub spreading_check_every: usize,
    pub spreading_growth_tol: f64,
    pub stop_on_spreading: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolveOptions::default();
        let s = SpreadingOptions::default();
        Self {
            max_iters: o.max_iters,
            grad_tol: o.grad_tol,
            initial_step: o.initial_step,
            shrink: o.shrink,
            growth: o.growth,
            armijo: o.armijo,
            min_step: o.min_step,
            precond_shift: o.precond_shift,
            init: InitKind::Hls,
            init_lambda: 1.0,
            init_sigma: 1.0,
            spreading_fraction: s.radius_fraction,
            spreading_consecutive: s.consecutive,
            spreading_check_every: s.check_every,
            spreading_growth_tol: s.growth_tol,
            stop_on_spreading: o.stop_on_spreading,
        }
    }
}

impl SolverSpec {
    pub fn options(&self) -> Result<SolveOptions> {
        let init = match self.init {
            InitKind::Hls => Init::Hls {
                lambda: self.init_lambda,
            },
            InitKind::Gaussian => Init::Gaussian { sigma: self.init_sigma },
        };
        let opts = SolveOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            initial_step: self.initial_step,
            shrink: self.shrink,
            growth: self.growth,
            armijo: self.armijo,
            min_step: self.min_step,
            precond_shift: self.precond_shift,
            init,
            spreading: SpreadingOptions {
                radius_fraction: self.spreading_fraction,
                consecutive: self.spreading_consecutive,
                check_every: self.spreading_check_every,
                growth_tol: self.spreading_growth_tol,
            },
            stop_on_spreading: self.stop_on_spreading,
        };
        opts.validate()?;
        Ok(opts)
    }
}

/// Either explicit values or a log-spaced range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGrid {
    pub values: Option<Vec<f64>>,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            values: None,
            min: 1e-2,
            max: 1e4,
            points: 61,
        }
    }
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match &self.values {
            Some(v) => v.clone(),
            None => {
                if !(self.min > 0.0 && self.max > self.min && self.points >= 2) {
                    bail!("lambda range needs 0 < min < max and at least 2 points");
                }
                let (a, b) = (self.min.ln(), self.max.ln());
                let last = (self.points - 1) as f64;
                (0..self.points)
                    .map(|k| (a + (b - a) * k as f64 / last).exp())
                    .collect()
            }
        };
        if v.is_empty() || v.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            bail!("lambda values must be positive and finite");
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub mu: Vec<f64>,
    /// Minimum distance of every mu from both thresholds.
    pub margin: f64,
    pub lambda: LambdaGrid,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            mu: vec![0.1, 0.2, 0.4, 0.7, 1.0],
            margin: 0.05,
            lambda: LambdaGrid::default(),
        }
    }
}

impl SweepSpec {
    pub fn check(&self, dim: usize) -> Result<()> {
        if self.mu.is_empty() {
            bail!("sweep.mu is empty");
        }
        let t = thresholds(dim);
        for &mu in &self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                bail!("sweep mu = {mu} must be positive");
            }
            for (name, th) in [("nonexistence", t.nonexist), ("sufficient", t.sufficient)] {
                if th > 0.0 && (mu - th).abs() < self.margin * (1.0 - 1e-9) {
                    bail!("sweep mu = {mu} is within {} of the {name} threshold {th}", self.margin);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IvScanSpec {
    pub lambda: LambdaGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Grid for the Riesz profile oracle (also used by `riesz-selftest`).
    pub riesz: GridSpec,
    pub riesz_tol: f64,
    /// Dimensions for the gradient/Hardy ratio item.
    pub hardy_dims: Vec<usize>,
    pub gradient: GridSpec,
    pub gradient_samples: usize,
    pub gradient_mu: f64,
    pub null: GridSpec,
    pub null_alpha: f64,
    pub null_interior: f64,
    pub null_lambdas: Vec<f64>,
    pub c_infty_lambdas: Vec<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            riesz: GridSpec::new(40.0, 2000, 1.0),
            riesz_tol: 1e-3,
            hardy_dims: vec![2, 3, 4, 5, 6],
            gradient: GridSpec::new(30.0, 400, 1.5),
            gradient_samples: 10,
            gradient_mu: 0.8,
            null: GridSpec::new(80.0, 4000, 2.0),
            null_alpha: 2.0,
            null_interior: 20.0,
            null_lambdas: vec![0.5, 1.0, 2.0],
            c_infty_lambdas: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Kernel cache directory; `CHOQUARD_CACHE_DIR` takes precedence.
    pub cache_dir: Option<PathBuf>,
}

pub const CACHE_ENV: &str = "CHOQUARD_CACHE_DIR";

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let PotentialSpec::Tabulated { path: p } = &mut cfg.potential {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn problem_params(&self) -> Result<ProblemParams> {
        Ok(ProblemParams::new(self.params.dim, self.params.alpha)?)
    }

    /// Checks everything that does not require heavy computation.
    pub fn validate(&self) -> Result<()> {
        self.problem_params()?;
        self.grid.build(self.problem_params()?)?;
        self.potential.build()?;
        self.solver.options()?;
        self.iv_scan.lambda.values()?;
        self.sweep.lambda.values()?;
        Ok(())
    }

    pub fn cache_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => self.output.cache_dir.clone(),
        }
    }
}
