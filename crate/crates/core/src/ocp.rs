//! The scenario-based chance-constrained control problem as an MILP.
//!
//! Cost is `Σ_j p_j (‖x̄_j‖₁ + ‖ū‖₁)` with `x̄_j = F x₀ + G ū + Γ η̄_j`; state
//! trajectories are substituted out so the decision variables are `ū`, the
//! epigraph variables of the absolute values, and one indicator `z_j` per
//! scenario. `z_j = 1` enforces scenario `j`'s state constraints through
//! big-M rows, and `Σ p_j z_j ≥ 1 − ε` is the chance constraint.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Polytope, StackedDynamics};
use crate::error::{dim_err, invalid, Error, Result};
use crate::guarantees::GuaranteePackage;
use crate::milp::{solve_lp, solve_milp, LpOptions, LpStatus, MilpModel, MilpOptions, MilpStatus, Sense};
use crate::scenario::ScenarioSet;

/// Tolerance used when reading indicator and feasibility information back
/// from a solution.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    /// All original scenarios.
    Exact,
    /// Reduced scenarios, untightened constraints, no correction.
    P1,
    /// Reduced scenarios with per-cluster tightening and the cost correction.
    P2,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exact => "EXACT",
            Variant::P1 => "P1",
            Variant::P2 => "P2",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Variant::Exact),
            "p1" => Ok(Variant::P1),
            "p2" => Ok(Variant::P2),
            _ => invalid(format!("unknown variant '{s}' (expected exact, p1 or p2)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OcpInstance {
    pub x0: DVector<f64>,
    pub stacked: StackedDynamics,
    /// Stacked state constraints over `x_1..x_N`.
    pub state_set: Polytope,
    /// Stacked input constraints over `u_0..u_{N-1}`; must be bounded.
    pub input_set: Polytope,
    pub scenarios: ScenarioSet,
    /// Risk tolerance: at least `1 − ε` of the mass must satisfy the state set.
    pub epsilon: f64,
    pub variant: Variant,
    pub guarantee: Option<GuaranteePackage>,
}

impl OcpInstance {
    pub fn validate(&self) -> Result<()> {
        let st = &self.stacked;
        let (nn, mn) = (st.n * st.horizon, st.m * st.horizon);
        if !(0.0..1.0).contains(&self.epsilon) {
            return invalid(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if self.x0.len() != st.n {
            return dim_err(format!("x0 has {} entries, the system has {} states", self.x0.len(), st.n));
        }
        if self.scenarios.dim() != nn {
            return dim_err(format!("scenarios have {} values, expected n·N = {nn}", self.scenarios.dim()));
        }
        if self.state_set.dim() != nn {
            return dim_err(format!("state set has dimension {}, expected {nn}", self.state_set.dim()));
        }
        if self.input_set.dim() != mn {
            return dim_err(format!("input set has dimension {}, expected {mn}", self.input_set.dim()));
        }
        if self.variant == Variant::P2 {
            let g = self
                .guarantee
                .as_ref()
                .ok_or_else(|| Error::Invalid("variant P2 needs a guarantee package".into()))?;
            if g.clusters() != self.scenarios.len() {
                return invalid(format!(
                    "guarantee package has {} clusters but there are {} scenarios",
                    g.clusters(),
                    self.scenarios.len()
                ));
            }
            if g.tightened_sets.iter().any(|p| p.dim() != nn || p.rows() != self.state_set.rows()) {
                return dim_err("tightened sets do not match the state set");
            }
        }
        Ok(())
    }

    /// Cost correction added to the objective (zero unless P2).
    pub fn correction(&self) -> f64 {
        match (self.variant, &self.guarantee) {
            (Variant::P2, Some(g)) => g.correction,
            _ => 0.0,
        }
    }

    /// State constraints imposed on scenario `j` when its indicator is set.
    pub fn scenario_set(&self, j: usize) -> &Polytope {
        match (self.variant, &self.guarantee) {
            (Variant::P2, Some(g)) => &g.tightened_sets[j],
            _ => &self.state_set,
        }
    }

    /// `F x₀ + Γ η̄_j`, the input-free part of scenario `j`'s trajectory.
    pub fn free_response(&self, j: usize) -> DVector<f64> {
        let eta = DVector::from_column_slice(&self.scenarios.get(j).values);
        &self.stacked.f * &self.x0 + &self.stacked.gamma * eta
    }
}

/// Where each variable group sits in the MILP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub u: Range<usize>,
    /// Epigraph of `|ū|`.
    pub u_abs: Range<usize>,
    /// Epigraph of `|x̄_j|`, scenario-major.
    pub x_abs: Range<usize>,
    pub z: Range<usize>,
}

/// Coordinate-wise bounds of a polytope. Rows with a single nonzero are read
/// directly; otherwise one LP per bound is solved.
pub fn box_hull(set: &Polytope) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = set.dim();
    let singleton = (0..set.rows()).all(|i| set.h_mat.row(i).iter().filter(|v| **v != 0.0).count() <= 1);
    let mut lo = vec![f64::NEG_INFINITY; d];
    let mut hi = vec![f64::INFINITY; d];
    if singleton {
        for i in 0..set.rows() {
            let b = set.h_vec[i];
            match set.h_mat.row(i).iter().position(|v| *v != 0.0) {
                Some(k) => {
                    let a = set.h_mat[(i, k)];
                    if a > 0.0 {
                        hi[k] = hi[k].min(b / a);
                    } else {
                        lo[k] = lo[k].max(b / a);
                    }
                }
                None if b < 0.0 => return invalid("input set is empty"),
                None => {}
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return invalid("input set is empty");
        }
        return Ok((lo, hi));
    }
    let mut model = MilpModel::new();
    for k in 0..d {
        model.add_var(format!("v{k}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
    }
    for i in 0..set.rows() {
        let coeffs = set.h_mat.row(i).iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(k, &a)| (k, a)).collect();
        model.add_constraint(format!("r{i}"), coeffs, Sense::Le, set.h_vec[i]);
    }
    for k in 0..d {
        for (sign, slot) in [(1.0, &mut lo), (-1.0, &mut hi)] {
            model.objective.iter_mut().for_each(|c| *c = 0.0);
            model.objective[k] = sign;
            let r = solve_lp(&model, &LpOptions::default());
            match r.status {
                LpStatus::Optimal => slot[k] = r.x[k],
                LpStatus::Infeasible => return invalid("input set is empty"),
                _ => return invalid("input set must be bounded"),
            }
        }
    }
    Ok((lo, hi))
}

/// Builds the MILP for `inst`.
pub fn build_milp(inst: &OcpInstance) -> Result<(MilpModel, Layout)> {
    inst.validate()?;
    let st = &inst.stacked;
    let (nn, mn) = (st.n * st.horizon, st.m * st.horizon);
    let ms = inst.scenarios.len();
    let (u_lo, u_hi) = box_hull(&inst.input_set)?;
    if u_lo.iter().chain(&u_hi).any(|v| !v.is_finite()) {
        return invalid("input set must be bounded");
    }
    let probs = inst.scenarios.probabilities();
    let mass: f64 = probs.iter().sum();

    let mut model = MilpModel::new();
    model.offset = inst.correction();
    let u0 = model.num_vars();
    for k in 0..mn {
        model.add_var(format!("u_{k}"), u_lo[k], u_hi[k], 0.0);
    }
    let t0 = model.num_vars();
    for k in 0..mn {
        model.add_var(format!("tu_{k}"), 0.0, f64::INFINITY, mass);
    }
    let s0 = model.num_vars();
    for j in 0..ms {
        for i in 0..nn {
            model.add_var(format!("tx_{j}_{i}"), 0.0, f64::INFINITY, probs[j]);
        }
    }
    let z0 = model.num_vars();
    for j in 0..ms {
        model.add_binary(format!("z_{j}"), 0.0);
    }
    let layout = Layout {
        u: u0..u0 + mn,
        u_abs: t0..t0 + mn,
        x_abs: s0..s0 + ms * nn,
        z: z0..z0 + ms,
    };

    // Hard input rows that the box bounds do not already express.
    for i in 0..inst.input_set.rows() {
        let row: Vec<(usize, f64)> = inst
            .input_set
            .h_mat
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, &a)| (u0 + k, a))
            .collect();
        if row.len() > 1 {
            model.add_constraint(format!("u_set_{i}"), row, Sense::Le, inst.input_set.h_vec[i]);
        }
    }
    for k in 0..mn {
        model.add_constraint(format!("tu_pos_{k}"), vec![(t0 + k, 1.0), (u0 + k, -1.0)], Sense::Ge, 0.0);
        model.add_constraint(format!("tu_neg_{k}"), vec![(t0 + k, 1.0), (u0 + k, 1.0)], Sense::Ge, 0.0);
    }

    let g_rows: Vec<Vec<(usize, f64)>> = (0..nn)
        .map(|i| st.g.row(i).iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(k, &a)| (k, a)).collect())
        .collect();
    for j in 0..ms {
        let c = inst.free_response(j);
        for i in 0..nn {
            let s = s0 + j * nn + i;
            let gu = |sign: f64| -> Vec<(usize, f64)> {
                std::iter::once((s, 1.0))
                    .chain(g_rows[i].iter().map(|&(k, a)| (u0 + k, sign * a)))
                    .collect()
            };
            model.add_constraint(format!("tx_pos_{j}_{i}"), gu(-1.0), Sense::Ge, c[i]);
            model.add_constraint(format!("tx_neg_{j}_{i}"), gu(1.0), Sense::Ge, -c[i]);
        }
    }

    // H (G ū) + M z_j ≤ h − H c_j + M, with M the largest possible violation
    // of the row over the input box. Rows that cannot be violated are dropped.
    for j in 0..ms {
        let set = inst.scenario_set(j);
        let hg: DMatrix<f64> = &set.h_mat * &st.g;
        let hc = &set.h_mat * inst.free_response(j);
        for r in 0..set.rows() {
            let coeffs: Vec<(usize, f64)> = hg
                .row(r)
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(k, &a)| (k, a))
                .collect();
            let reach: f64 = coeffs.iter().map(|&(k, a)| (a * u_lo[k]).max(a * u_hi[k])).sum();
            let rhs = set.h_vec[r] - hc[r];
            let big_m = reach - rhs;
            if !big_m.is_finite() {
                return Err(Error::Invalid(format!("big-M for scenario {j}, row {r} is not finite")));
            }
            if big_m <= 0.0 {
                continue;
            }
            let mut row: Vec<(usize, f64)> = coeffs.into_iter().map(|(k, a)| (u0 + k, a)).collect();
            row.push((z0 + j, big_m));
            model.add_constraint(format!("x_set_{j}_{r}"), row, Sense::Le, rhs + big_m);
        }
    }
    model.add_constraint(
        "chance",
        (0..ms).map(|j| (z0 + j, probs[j])).collect(),
        Sense::Ge,
        1.0 - inst.epsilon,
    );
    Ok((model, layout))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: MilpStatus,
    pub variant: Variant,
    /// Stacked inputs `u_0..u_{N-1}`; empty when no feasible point was found.
    pub u_star: Vec<f64>,
    /// Optimal value including the correction.
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub correction: f64,
    pub indicators: Vec<bool>,
    /// Predicted `x̄_j` per scenario of the instance.
    pub trajectories: Vec<Vec<f64>>,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Wall-clock time of the MILP solve only.
    pub solve_time_s: f64,
}

impl Solution {
    pub fn has_inputs(&self) -> bool {
        !self.u_star.is_empty()
    }
}

/// Builds and solves `inst`.
pub fn solve_instance(inst: &OcpInstance, opts: &MilpOptions) -> Result<Solution> {
    let (model, layout) = build_milp(inst)?;
    let start = Instant::now();
    let res = solve_milp(&model, opts)?;
    let solve_time_s = start.elapsed().as_secs_f64();
    let correction = inst.correction();
    let (u_star, indicators, trajectories) = if res.has_solution() {
        let u = res.x[layout.u.clone()].to_vec();
        let uv = DVector::from_column_slice(&u);
        let z = res.x[layout.z.clone()].iter().map(|v| *v > 0.5).collect();
        let traj = (0..inst.scenarios.len())
            .map(|j| (inst.free_response(j) + &inst.stacked.g * &uv).as_slice().to_vec())
            .collect();
        (u, z, traj)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    Ok(Solution {
        status: res.status,
        variant: inst.variant,
        u_star,
        objective: res.objective,
        bound: res.bound,
        gap: res.gap,
        correction,
        indicators,
        trajectories,
        nodes: res.nodes,
        lp_iterations: res.lp_iterations,
        solve_time_s,
    })
}

/// `Σ_j p_j (‖x̄_j‖₁ + ‖ū‖₁)` over the scenarios of `set` for a fixed input.
pub fn expected_cost(stacked: &StackedDynamics, x0: &DVector<f64>, set: &ScenarioSet, u: &[f64]) -> f64 {
    let uv = DVector::from_column_slice(u);
    let base = &stacked.f * x0 + &stacked.g * &uv;
    let u1: f64 = u.iter().map(|v| v.abs()).sum();
    set.iter()
        .map(|s| {
            let x = &base + &stacked.gamma * DVector::from_column_slice(&s.values);
            s.p * (x.lp_norm(1) + u1)
        })
        .sum()
}
