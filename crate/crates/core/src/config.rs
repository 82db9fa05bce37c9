//! Experiment configuration, read from TOML (or JSON by file extension).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_stacked, stack_polytope_steps, LinearSystem, Polytope, PolytopeRows};
use crate::error::{Error, Result};
use crate::evaluation::{Method, Problem};
use crate::milp::{LpOptions, MilpOptions};
use crate::ocp::Variant;
use crate::reduction::ReduceOptions;
use crate::scenario::{generate_synthetic, load_scenarios, DistributionSpec, Format};

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

/// Per-step constraint set: an optional box, optional extra halfspaces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSet {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub halfspaces: Option<PolytopeRows>,
}

impl StepSet {
    pub fn polytope(&self, dim: usize, what: &str) -> Result<Polytope> {
        let lower = self.lower.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY; dim]);
        let upper = self.upper.clone().unwrap_or_else(|| vec![f64::INFINITY; dim]);
        if lower.len() != dim || upper.len() != dim {
            return cfg_err(format!("{what}: box bounds must have {dim} entries"));
        }
        let boxed = Polytope::from_box(&lower, &upper).map_err(|e| Error::Config(format!("{what}: {e}")))?;
        let Some(hs) = &self.halfspaces else {
            return Ok(boxed);
        };
        let extra = hs.to_polytope(dim).map_err(|e| Error::Config(format!("{what}.halfspaces: {e}")))?;
        let rows = boxed.rows() + extra.rows();
        let h_mat = nalgebra::DMatrix::from_fn(rows, dim, |i, j| {
            if i < boxed.rows() {
                boxed.h_mat[(i, j)]
            } else {
                extra.h_mat[(i - boxed.rows(), j)]
            }
        });
        let h_vec = DVector::from_iterator(rows, boxed.h_vec.iter().chain(extra.h_vec.iter()).copied());
        Polytope::new(h_mat, h_vec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConstraints {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub halfspaces: Option<PolytopeRows>,
    /// First and last constrained step, 1-based and inclusive; defaults to
    /// the whole horizon.
    pub steps: Option<[usize; 2]>,
}

impl StateConstraints {
    pub fn step_set(&self) -> StepSet {
        StepSet {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            halfspaces: self.halfspaces.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSource {
    /// CSV or JSON scenario file; relative paths resolve against the config.
    pub file: Option<PathBuf>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub distribution: DistributionSpec,
}

fn default_count() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub m_tilde: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Solve the full-scenario problem as a baseline.
    #[serde(default = "yes")]
    pub exact: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_tilde: Vec::new(),
            methods: default_methods(),
            variants: default_variants(),
            exact: true,
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::KMed, Method::KMns]
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::P1, Variant::P2]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        let d = ReduceOptions::default();
        Self {
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub node_limit: usize,
    pub abs_gap: f64,
    /// Per-LP pivot cap; defaults to 50·(rows + columns).
    pub max_pivots: Option<usize>,
    /// Node budget for the full-scenario baseline (defaults to `node_limit`).
    pub exact_node_limit: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            node_limit: 20_000,
            abs_gap: 0.0,
            max_pivots: None,
            exact_node_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn milp_options(&self) -> MilpOptions {
        MilpOptions {
            abs_gap: self.abs_gap,
            node_limit: self.node_limit,
            lp: LpOptions {
                max_pivots: self.max_pivots,
                ..LpOptions::default()
            },
            ..MilpOptions::default()
        }
    }

    pub fn exact_options(&self) -> MilpOptions {
        MilpOptions {
            node_limit: self.exact_node_limit.unwrap_or(self.node_limit),
            ..self.milp_options()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub system: SystemConfig,
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub min_satisfaction_prob: f64,
    pub state_constraints: StateConstraints,
    pub input_constraints: StepSet,
    pub scenarios: ScenarioSource,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub output: Option<PathBuf>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.min_satisfaction_prob;
        if !(p > 0.0 && p <= 1.0) {
            return cfg_err(format!("min_satisfaction_prob must lie in (0, 1], got {p}"));
        }
        if self.horizon == 0 {
            return cfg_err("horizon must be at least 1");
        }
        let sys = self.system()?;
        if self.x0.len() != sys.state_dim() {
            return cfg_err(format!("x0 has {} entries, the system has {} states", self.x0.len(), sys.state_dim()));
        }
        if let Some([first, last]) = self.state_constraints.steps {
            if first == 0 || first > last || last > self.horizon {
                return cfg_err(format!("state_constraints.steps [{first}, {last}] must lie within 1..={}", self.horizon));
            }
        }
        if self.scenarios.file.is_none() && self.scenarios.count == 0 {
            return cfg_err("scenarios.count must be at least 1");
        }
        if self.sweep.m_tilde.contains(&0) {
            return cfg_err("sweep.m_tilde entries must be at least 1");
        }
        if self.scenarios.file.is_none() {
            if let Some(&big) = self.sweep.m_tilde.iter().find(|&&m| m > self.scenarios.count) {
                return cfg_err(format!("sweep.m_tilde entry {big} exceeds the {} scenarios", self.scenarios.count));
            }
        }
        if self.reduction.max_iter == 0 || !(self.reduction.tol >= 0.0) {
            return cfg_err("reduction needs max_iter >= 1 and tol >= 0");
        }
        if !(self.solver.abs_gap >= 0.0) {
            return cfg_err("solver.abs_gap must be non-negative");
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LinearSystem> {
        LinearSystem::from_rows(&self.system.a, &self.system.b).map_err(|e| Error::Config(format!("system: {e}")))
    }

    pub fn epsilon(&self) -> f64 {
        1.0 - self.min_satisfaction_prob
    }

    pub fn reduce_options(&self) -> ReduceOptions {
        ReduceOptions {
            seed: self.seed,
            max_iter: self.reduction.max_iter,
            tol: self.reduction.tol,
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Assembles the full-scenario problem, loading or generating scenarios.
    pub fn problem(&self) -> Result<Problem> {
        self.validate()?;
        let system = self.system()?;
        let (n, m, horizon) = (system.state_dim(), system.input_dim(), self.horizon);
        let stacked = build_stacked(&system, horizon)?;
        let per_state = self.state_constraints.step_set().polytope(n, "state_constraints")?;
        let [first, last] = self.state_constraints.steps.unwrap_or([1, horizon]);
        let state_set = stack_polytope_steps(&per_state, horizon, first, last)?;
        let per_input = self.input_constraints.polytope(m, "input_constraints")?;
        let input_set = stack_polytope_steps(&per_input, horizon, 1, horizon)?;
        let scenarios = match &self.scenarios.file {
            Some(f) => {
                let path = self.resolve(f);
                let file = fs::File::open(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                load_scenarios(file, Format::from_path(&path), Some((n, horizon)))?
            }
            None => generate_synthetic(self.seed, self.scenarios.count, n, horizon, &self.scenarios.distribution)?,
        };
        if let Some(&big) = self.sweep.m_tilde.iter().find(|&&k| k > scenarios.len()) {
            return cfg_err(format!("sweep.m_tilde entry {big} exceeds the {} scenarios", scenarios.len()));
        }
        Ok(Problem {
            system,
            stacked,
            x0: DVector::from_column_slice(&self.x0),
            state_set,
            input_set,
            epsilon: self.epsilon(),
            scenarios,
        })
    }
}
