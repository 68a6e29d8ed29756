//! Run configuration: a versioned JSON file, unknown keys rejected.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lagflow::data::DataSpec;
use lagflow::dynamics::{Model, ModelKind};
use lagflow::grid::{GridSpec, InterpKind};
use lagflow::norms::NormParams;
use lagflow::solver::{Branch, SolverConfig};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Largest final time and data amplitude accepted without `out_of_range`.
pub const SMALL_TIME: f64 = 1.0;
pub const SMALL_AMPLITUDE: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelKind,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub norms: NormParams,
    #[serde(default)]
    pub data: DataSpec,
    /// Default output directory; `--out` takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Write per-frame field snapshots from `solve`.
    #[serde(default)]
    pub snapshots: bool,
    /// Accept final times or amplitudes above the small-data limits.
    #[serde(default)]
    pub out_of_range: bool,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub compare: CompareSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { d: 2, n: 32, length: TAU }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub final_time: f64,
    pub steps: usize,
    pub gamma: Option<f64>,
    pub tol_fp: f64,
    pub max_iter: usize,
    /// Defaults to the model's own branch.
    pub branch: Option<Branch>,
    pub nu: f64,
    pub delta: f64,
    pub interp: InterpKind,
    pub record_wall_time: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::new(Model::OldroydB, 0.1, 16);
        Self {
            final_time: c.final_time,
            steps: c.steps,
            gamma: c.gamma,
            tol_fp: c.tol_fp,
            max_iter: c.max_iter,
            branch: None,
            nu: c.nu,
            delta: c.delta,
            interp: c.interp,
            record_wall_time: c.record_wall_time,
        }
    }
}

/// Sweeps of the `verify` checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Final times of the operator and contraction sweeps.
    pub times: Vec<f64>,
    /// Time steps per final time in the operator sweeps.
    pub sweep_steps: usize,
    /// Perturbation sizes of the data-dependence check.
    pub epsilons: Vec<f64>,
    /// Resolutions of the steady-commutator study.
    pub steady_grids: Vec<usize>,
    /// Hoelder exponent of the steady-commutator study; below the envelope
    /// exponent `data.alpha`, where the sampled norm settles.
    pub steady_alpha: f64,
    pub chord_slack: f64,
    /// Supremum of the random states in the contraction check.
    pub perturbation_size: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            times: vec![0.2, 0.1, 0.05, 0.025],
            sweep_steps: 16,
            epsilons: vec![1e-2, 5e-3],
            steady_grids: vec![64, 128],
            steady_alpha: 0.3,
            chord_slack: 0.02,
            perturbation_size: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Number of simultaneous doublings of `n` and `steps`.
    pub refinements: usize,
}

impl RunConfig {
    pub fn example() -> Self {
        Self {
            version: CONFIG_VERSION,
            model: ModelKind::OldroydB,
            grid: GridSection::default(),
            solver: SolverSection::default(),
            norms: NormParams::default(),
            data: DataSpec::default(),
            out_dir: None,
            snapshots: false,
            out_of_range: false,
            verify: VerifySection::default(),
            compare: CompareSection::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", self.version);
        }
        self.grid_spec()?;
        self.solver_config()?.validate()?;
        if !self.out_of_range {
            if self.solver.final_time > SMALL_TIME {
                bail!(
                    "final_time {} exceeds {SMALL_TIME}; set \"out_of_range\": true to run it",
                    self.solver.final_time
                );
            }
            if self.data.amplitude.abs() > SMALL_AMPLITUDE {
                bail!(
                    "amplitude {} exceeds {SMALL_AMPLITUDE}; set \"out_of_range\": true to run it",
                    self.data.amplitude
                );
            }
        }
        let v = &self.verify;
        if v.times.is_empty() || v.times.iter().any(|t| !(*t > 0.0)) {
            bail!("verify.times must be nonempty and positive");
        }
        if v.epsilons.is_empty() || v.epsilons.iter().any(|e| !(*e > 0.0)) {
            bail!("verify.epsilons must be nonempty and positive");
        }
        if v.steady_grids.len() < 2 {
            bail!("verify.steady_grids needs at least two resolutions");
        }
        if !(v.steady_alpha > 0.0 && v.steady_alpha < 1.0) {
            bail!("verify.steady_alpha must lie in (0, 1)");
        }
        for &n in &v.steady_grids {
            GridSpec::new(self.grid.d, n, self.grid.length)?;
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid.d, self.grid.n, self.grid.length)?)
    }

    pub fn model(&self) -> Model {
        self.model.into()
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let model = self.model();
        let mut c = SolverConfig::new(model.clone(), s.final_time, s.steps);
        c.params = self.norms;
        c.gamma = s.gamma;
        c.tol_fp = s.tol_fp;
        c.max_iter = s.max_iter;
        c.branch = s.branch.unwrap_or(Branch::default_for(&model));
        c.nu = s.nu;
        c.delta = s.delta;
        c.interp = s.interp;
        c.record_wall_time = s.record_wall_time;
        Ok(c)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.data.seed = s;
        }
        self
    }

    /// Writes the resolved configuration next to the outputs.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.resolved.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
