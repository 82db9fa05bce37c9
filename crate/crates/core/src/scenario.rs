//! Discrete scenario sets for the additive disturbance process.
//!
//! A scenario is a whole disturbance trajectory over the prediction horizon,
//! stored flat in time-major order: the `n` coordinates of step `k` occupy
//! `values[k*n .. (k+1)*n]`. This is the same stacking used by the prediction
//! matrices in [`crate::dynamics`], so no module ever transposes a scenario.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, invalid, Error, Result};

/// Tolerance on the total probability mass of a constructed set.
pub const MASS_TOL: f64 = 1e-9;
/// Tolerance on the total probability mass of a set read from a file. Within
/// it, the probabilities are renormalized; beyond it, the file is rejected.
pub const LOAD_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub p: f64,
    pub values: Vec<f64>,
}

impl Scenario {
    pub fn new(p: f64, values: Vec<f64>) -> Self {
        Self { p, values }
    }
}

/// An ordered, normalized collection of equally sized scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioSet")]
pub struct ScenarioSet {
    state_dim: usize,
    horizon: usize,
    scenarios: Vec<Scenario>,
}

#[derive(Deserialize)]
struct RawScenarioSet {
    state_dim: usize,
    horizon: usize,
    scenarios: Vec<Scenario>,
}

impl TryFrom<RawScenarioSet> for ScenarioSet {
    type Error = Error;

    fn try_from(raw: RawScenarioSet) -> Result<Self> {
        ScenarioSet::new(raw.state_dim, raw.horizon, raw.scenarios)
    }
}

impl ScenarioSet {
    /// Validates and wraps a list of scenarios.
    pub fn new(state_dim: usize, horizon: usize, scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return invalid("a scenario set needs at least one scenario");
        }
        if state_dim == 0 || horizon == 0 {
            return invalid("state dimension and horizon must be positive");
        }
        let len = state_dim * horizon;
        let mut mass = 0.0;
        for (j, s) in scenarios.iter().enumerate() {
            if s.values.len() != len {
                return dim_err(format!(
                    "scenario {j} has {} values, expected {len}",
                    s.values.len()
                ));
            }
            if !(s.p > 0.0 && s.p <= 1.0) {
                return invalid(format!("scenario {j} has probability {} outside (0, 1]", s.p));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return invalid(format!("scenario {j} has a non-finite value"));
            }
            mass += s.p;
        }
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized(mass));
        }
        Ok(Self {
            state_dim,
            horizon,
            scenarios,
        })
    }

    /// Like [`ScenarioSet::new`], but rescales probabilities whose sum is
    /// within [`LOAD_MASS_TOL`] of one.
    pub fn normalized(state_dim: usize, horizon: usize, mut scenarios: Vec<Scenario>) -> Result<Self> {
        let mass: f64 = scenarios.iter().map(|s| s.p).sum();
        if !mass.is_finite() || (mass - 1.0).abs() > LOAD_MASS_TOL {
            return Err(Error::NotNormalized(mass));
        }
        for s in &mut scenarios {
            s.p /= mass;
        }
        Self::new(state_dim, horizon, scenarios)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Length `n*N` of every trajectory.
    pub fn dim(&self) -> usize {
        self.state_dim * self.horizon
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn get(&self, j: usize) -> &Scenario {
        &self.scenarios[j]
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.p).collect()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario> {
        self.scenarios.iter()
    }

    pub fn into_scenarios(self) -> Vec<Scenario> {
        self.scenarios
    }
}

/// Per-step sampling law for synthetic scenarios. Each of the `n` disturbance
/// coordinates of each step is drawn independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Zero-mean Gaussian; `std` has one entry per coordinate, or a single
    /// entry shared by all coordinates.
    Gaussian { std: Vec<f64> },
    /// Uniform on the box `[lower, upper]`, broadcast the same way.
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Gaussian { std: vec![0.1] }
    }
}

fn broadcast(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => dim_err(format!("{what} has {k} entries, expected 1 or {n}")),
    }
}

enum Sampler {
    Gaussian(Vec<Normal<f64>>),
    Uniform(Vec<Option<Uniform<f64>>>, Vec<f64>),
}

impl DistributionSpec {
    fn sampler(&self, n: usize) -> Result<Sampler> {
        match self {
            DistributionSpec::Gaussian { std } => {
                let std = broadcast(std, n, "std")?;
                let mut laws = Vec::with_capacity(n);
                for s in std {
                    if !(s >= 0.0 && s.is_finite()) {
                        return invalid(format!("standard deviation {s} must be finite and non-negative"));
                    }
                    laws.push(Normal::new(0.0, s).map_err(|e| Error::Invalid(e.to_string()))?);
                }
                Ok(Sampler::Gaussian(laws))
            }
            DistributionSpec::Uniform { lower, upper } => {
                let lower = broadcast(lower, n, "lower")?;
                let upper = broadcast(upper, n, "upper")?;
                let mut laws = Vec::with_capacity(n);
                for (&lo, &hi) in lower.iter().zip(&upper) {
                    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                        return invalid(format!("empty or unbounded box [{lo}, {hi}]"));
                    }
                    // A degenerate interval is a point mass.
                    laws.push(if lo < hi {
                        Some(Uniform::new_inclusive(lo, hi).map_err(|e| Error::Invalid(e.to_string()))?)
                    } else {
                        None
                    });
                }
                Ok(Sampler::Uniform(laws, lower))
            }
        }
    }
}

/// Draws `count` i.i.d. trajectories with equal probabilities `1/count`.
pub fn generate_synthetic(
    seed: u64,
    count: usize,
    state_dim: usize,
    horizon: usize,
    spec: &DistributionSpec,
) -> Result<ScenarioSet> {
    if count == 0 {
        return invalid("scenario count must be at least 1");
    }
    if state_dim == 0 || horizon == 0 {
        return invalid("state dimension and horizon must be positive");
    }
    let sampler = spec.sampler(state_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 1.0 / count as f64;
    let scenarios = (0..count)
        .map(|_| {
            let mut values = Vec::with_capacity(state_dim * horizon);
            for _ in 0..horizon {
                for i in 0..state_dim {
                    values.push(match &sampler {
                        Sampler::Gaussian(laws) => laws[i].sample(&mut rng),
                        Sampler::Uniform(laws, lower) => match &laws[i] {
                            Some(u) => u.sample(&mut rng),
                            None => lower[i],
                        },
                    });
                }
            }
            Scenario::new(p, values)
        })
        .collect();
    ScenarioSet::normalized(state_dim, horizon, scenarios)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Picks the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => invalid(format!("unknown scenario format '{other}'")),
        }
    }
}

/// Reads a scenario set.
///
/// CSV files carry no shape information, so `dims = Some((n, N))` gives the
/// state dimension and horizon; with `None` every row is read as a single
/// step of dimension `n*N`. JSON files are self-describing and `dims`, when
/// given, must agree with them.
pub fn load_scenarios<R: Read>(source: R, format: Format, dims: Option<(usize, usize)>) -> Result<ScenarioSet> {
    match format {
        Format::Json => {
            let raw: RawScenarioSet = serde_json::from_reader(source)?;
            if let Some((n, horizon)) = dims {
                if (n, horizon) != (raw.state_dim, raw.horizon) {
                    return dim_err(format!(
                        "file has state_dim={} horizon={}, expected {n} and {horizon}",
                        raw.state_dim, raw.horizon
                    ));
                }
            }
            ScenarioSet::normalized(raw.state_dim, raw.horizon, raw.scenarios)
        }
        Format::Csv => load_csv(source, dims),
    }
}

fn load_csv<R: Read>(source: R, dims: Option<(usize, usize)>) -> Result<ScenarioSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("p") {
        return Err(Error::Parse("scenario CSV header must start with 'p'".into()));
    }
    let width = headers.len() - 1;
    for (k, name) in headers.iter().skip(1).enumerate() {
        if name != format!("v_{k}") {
            return Err(Error::Parse(format!("unexpected column '{name}', expected 'v_{k}'")));
        }
    }
    let (n, horizon) = dims.unwrap_or((width, 1));
    if n * horizon != width {
        return dim_err(format!("CSV has {width} value columns, expected {}", n * horizon));
    }
    let mut scenarios = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width + 1 {
            return dim_err(format!("row {} has {} fields, expected {}", row + 1, record.len(), width + 1));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: '{s}' is not a number", row + 1)))
        };
        let p = parse(&record[0])?;
        let values = record.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        scenarios.push(Scenario::new(p, values));
    }
    ScenarioSet::normalized(n, horizon, scenarios)
}

/// Writes a scenario set. Numbers use the shortest decimal text that reads
/// back to the identical `f64`.
pub fn save_scenarios<W: Write>(set: &ScenarioSet, format: Format, sink: W) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(sink, set)?;
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            let mut header = vec!["p".to_string()];
            header.extend((0..set.dim()).map(|k| format!("v_{k}")));
            writer.write_record(&header)?;
            for s in set.iter() {
                let mut row = Vec::with_capacity(s.values.len() + 1);
                row.push(s.p.to_string());
                row.extend(s.values.iter().map(f64::to_string));
                writer.write_record(&row)?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}
