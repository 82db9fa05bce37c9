//! Out-of-sample scoring against the full scenario set, and the sweep over
//! reduction methods, reduced sizes and problem variants.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dynamics::{LinearSystem, Polytope, StackedDynamics};
use crate::error::{dim_err, invalid, Error, Result};
use crate::guarantees::GuaranteePackage;
use crate::milp::{MilpOptions, MilpStatus};
use crate::ocp::{expected_cost, solve_instance, OcpInstance, Solution, Variant};
use crate::reduction::{reduce, Norm, ReduceOptions, ReducedSet};
use crate::scenario::ScenarioSet;

/// Row-wise tolerance of the out-of-sample constraint check.
pub const OOS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Weighted k-medians (1-norm).
    #[serde(rename = "kMED", alias = "kmed")]
    KMed,
    /// Weighted k-means (squared 2-norm).
    #[serde(rename = "kMNS", alias = "kmns")]
    KMns,
}

impl Method {
    pub fn norm(self) -> Norm {
        match self {
            Method::KMed => Norm::L1,
            Method::KMns => Norm::L2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::KMed => "kMED",
            Method::KMns => "kMNS",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmed" | "kmedians" | "l1" | "1" => Ok(Method::KMed),
            "kmns" | "kmeans" | "l2" | "2" => Ok(Method::KMns),
            _ => invalid(format!("unknown method '{s}' (expected kMED or kMNS)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OosReport {
    /// `Σ_h p_h 1{x̄_h ∈ X_N}` over every original scenario.
    pub satisfaction_prob: f64,
    /// Expected cost over the original scenarios.
    pub expected_cost: f64,
    pub satisfied: Vec<bool>,
}

/// Scores the input `u` on every scenario of `full`.
pub fn oos_evaluate(u: &[f64], full: &ScenarioSet, x0: &DVector<f64>, stacked: &StackedDynamics, state_set: &Polytope) -> Result<OosReport> {
    let mn = stacked.m * stacked.horizon;
    if u.len() != mn {
        return dim_err(format!("input has {} entries, expected {mn}", u.len()));
    }
    if full.dim() != stacked.n * stacked.horizon || state_set.dim() != full.dim() {
        return dim_err("scenario set, dynamics and state set disagree on n·N");
    }
    let base = &stacked.f * x0 + &stacked.g * DVector::from_column_slice(u);
    let satisfied: Vec<bool> = full
        .iter()
        .map(|s| {
            let x = &base + &stacked.gamma * DVector::from_column_slice(&s.values);
            state_set.contains(&x, OOS_TOL)
        })
        .collect();
    let satisfaction_prob = full.iter().zip(&satisfied).filter(|(_, ok)| **ok).map(|(s, _)| s.p).sum();
    Ok(OosReport {
        satisfaction_prob,
        expected_cost: expected_cost(stacked, x0, full, u),
        satisfied,
    })
}

/// The full-scenario control problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: LinearSystem,
    pub stacked: StackedDynamics,
    pub x0: DVector<f64>,
    pub state_set: Polytope,
    pub input_set: Polytope,
    pub epsilon: f64,
    pub scenarios: ScenarioSet,
}

impl Problem {
    pub fn exact_instance(&self) -> OcpInstance {
        OcpInstance {
            x0: self.x0.clone(),
            stacked: self.stacked.clone(),
            state_set: self.state_set.clone(),
            input_set: self.input_set.clone(),
            scenarios: self.scenarios.clone(),
            epsilon: self.epsilon,
            variant: Variant::Exact,
            guarantee: None,
        }
    }

    /// P1 or P2 instance over the centers of `reduced`.
    pub fn reduced_instance(&self, reduced: &ReducedSet, variant: Variant) -> Result<OcpInstance> {
        let guarantee = match variant {
            Variant::Exact => return invalid("the exact variant does not use a reduced set"),
            Variant::P1 => None,
            Variant::P2 => Some(GuaranteePackage::build(&self.scenarios, reduced, &self.stacked.gamma, &self.state_set)?),
        };
        Ok(OcpInstance {
            scenarios: reduced.centers.clone(),
            variant,
            guarantee,
            ..self.exact_instance()
        })
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<OosReport> {
        oos_evaluate(u, &self.scenarios, &self.x0, &self.stacked, &self.state_set)
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub variant: Variant,
    /// Empty for the full-scenario baseline.
    pub method: Option<Method>,
    #[serde(rename = "M_tilde")]
    pub m_tilde: usize,
    pub seed: u64,
    pub status: String,
    pub objective: Option<f64>,
    pub correction: Option<f64>,
    pub satisfaction_prob: Option<f64>,
    pub expected_cost_oos: Option<f64>,
    pub solver_time_s: Option<f64>,
    pub nodes: Option<usize>,
}

impl ExperimentRow {
    fn failed(variant: Variant, method: Option<Method>, m_tilde: usize, seed: u64, err: &Error) -> Self {
        Self {
            variant,
            method,
            m_tilde,
            seed,
            status: format!("error: {err}"),
            objective: None,
            correction: None,
            satisfaction_prob: None,
            expected_cost_oos: None,
            solver_time_s: None,
            nodes: None,
        }
    }

    fn from_solution(method: Option<Method>, m_tilde: usize, seed: u64, sol: &Solution, problem: &Problem) -> Result<Self> {
        let oos = if sol.has_inputs() { Some(problem.evaluate(&sol.u_star)?) } else { None };
        Ok(Self {
            variant: sol.variant,
            method,
            m_tilde,
            seed,
            status: status_name(sol.status).to_string(),
            objective: sol.has_inputs().then_some(sol.objective),
            correction: Some(sol.correction),
            satisfaction_prob: oos.as_ref().map(|r| r.satisfaction_prob),
            expected_cost_oos: oos.as_ref().map(|r| r.expected_cost),
            solver_time_s: Some(sol.solve_time_s),
            nodes: Some(sol.nodes),
        })
    }

    /// The row rendered without the timing column, for reproducibility checks.
    pub fn data_key(&self) -> String {
        let mut row = self.clone();
        row.solver_time_s = None;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(&row).expect("rows always serialize");
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
    }
}

pub fn status_name(s: MilpStatus) -> &'static str {
    match s {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::Unbounded => "unbounded",
        MilpStatus::Limit => "limit",
    }
}

pub const CSV_HEADER: &str = "variant,method,M_tilde,seed,status,objective,correction,satisfaction_prob,expected_cost_oos,solver_time_s,nodes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub epsilon: f64,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        w.write_record(CSV_HEADER.split(','))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn exact(&self) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.variant == Variant::Exact)
    }

    pub fn find(&self, variant: Variant, method: Method, m_tilde: usize) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.method == Some(method) && r.m_tilde == m_tilde)
    }
}

/// Progress callback: receives each row as soon as it is computed.
pub type Progress<'a> = &'a mut dyn FnMut(&ExperimentRow);

/// Runs the configured sweep: the exact baseline (if enabled) and then, for
/// each method and reduced size, every configured variant.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &mut |_| {})
}

pub fn run_experiment_with(cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<ExperimentResult> {
    let problem = cfg.problem()?;
    let seed = cfg.seed;
    let mut rows = Vec::new();
    let mut push = |row: ExperimentRow, rows: &mut Vec<ExperimentRow>| {
        progress(&row);
        rows.push(row);
    };
    let total = problem.scenarios.len();
    if cfg.sweep.exact {
        let row = solve_row(&problem, &problem.exact_instance(), None, total, seed, &cfg.solver.exact_options());
        push(row, &mut rows);
    }
    let opts = cfg.solver.milp_options();
    for &method in &cfg.sweep.methods {
        for &m_tilde in &cfg.sweep.m_tilde {
            let reduced = reduce(&problem.scenarios, m_tilde, method.norm(), &cfg.reduce_options());
            for &variant in &cfg.sweep.variants {
                let row = match &reduced {
                    Err(e) => ExperimentRow::failed(variant, Some(method), m_tilde, seed, e),
                    Ok(_) if variant == Variant::Exact => continue,
                    Ok(r) => match problem.reduced_instance(r, variant) {
                        Ok(inst) => solve_row(&problem, &inst, Some(method), m_tilde, seed, &opts),
                        Err(e) => ExperimentRow::failed(variant, Some(method), m_tilde, seed, &e),
                    },
                };
                push(row, &mut rows);
            }
        }
    }
    Ok(ExperimentResult {
        seed,
        epsilon: problem.epsilon,
        rows,
    })
}

fn solve_row(problem: &Problem, inst: &OcpInstance, method: Option<Method>, m_tilde: usize, seed: u64, opts: &MilpOptions) -> ExperimentRow {
    solve_instance(inst, opts)
        .and_then(|sol| ExperimentRow::from_solution(method, m_tilde, seed, &sol, problem))
        .unwrap_or_else(|e| ExperimentRow::failed(inst.variant, method, m_tilde, seed, &e))
}

/// Reduces with the method's norm and the given seed.
pub fn reduce_with(problem: &Problem, method: Method, m_tilde: usize, opts: &ReduceOptions) -> Result<ReducedSet> {
    reduce(&problem.scenarios, m_tilde, method.norm(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_stacked, stack_box_constraints};
    use crate::scenario::Scenario;

    fn setup() -> (StackedDynamics, Polytope) {
        let sys = LinearSystem::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.5]], &[vec![0.0], vec![1.0]]).unwrap();
        let st = build_stacked(&sys, 2).unwrap();
        let x = stack_box_constraints(&Polytope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(), 2).unwrap();
        (st, x)
    }

    #[test]
    fn zero_disturbance_inside_set() {
        let (st, x) = setup();
        let set = ScenarioSet::new(2, 2, vec![Scenario::new(1.0, vec![0.0; 4])]).unwrap();
        let r = oos_evaluate(&[0.0, 0.0], &set, &DVector::zeros(2), &st, &x).unwrap();
        assert_eq!(r.satisfaction_prob, 1.0);
        assert_eq!(r.expected_cost, 0.0);
    }

    #[test]
    fn large_input_violates_everywhere() {
        let (st, x) = setup();
        let set = ScenarioSet::new(
            2,
            2,
            vec![Scenario::new(0.5, vec![0.1, 0.0, 0.0, 0.0]), Scenario::new(0.5, vec![0.0, -0.1, 0.0, 0.0])],
        )
        .unwrap();
        let r = oos_evaluate(&[5.0, 0.0], &set, &DVector::zeros(2), &st, &x).unwrap();
        assert_eq!(r.satisfaction_prob, 0.0);
        assert!(oos_evaluate(&[5.0], &set, &DVector::zeros(2), &st, &x).is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("kMED".parse::<Method>().unwrap(), Method::KMed);
        assert_eq!("kmeans".parse::<Method>().unwrap().norm(), Norm::L2);
        assert!("kx".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::KMns).unwrap(), "\"kMNS\"");
    }
}
