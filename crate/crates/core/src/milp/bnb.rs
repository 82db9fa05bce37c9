//! Best-first branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::model::MilpModel;
use super::simplex::{solve_lp_bounded, Basis, LpOptions, LpStatus};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or pivot budget exhausted; the incumbent (if any) and gap are reported.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub abs_gap: f64,
    pub node_limit: usize,
    pub int_tol: f64,
    pub lp: LpOptions,
    /// Keep a per-node log in the result.
    pub record_nodes: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            abs_gap: 0.0,
            node_limit: 100_000,
            int_tol: 1e-6,
            lp: LpOptions::default(),
            record_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    /// LP bound inherited from the parent (−∞ at the root).
    pub parent_bound: f64,
    /// This node's LP objective, `None` if the LP was infeasible.
    pub lp_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Best integer-feasible point; empty when none was found.
    pub x: Vec<f64>,
    /// Objective of `x` including the offset (`+inf` without incumbent).
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub node_log: Vec<NodeRecord>,
}

impl MilpResult {
    pub fn has_solution(&self) -> bool {
        !self.x.is_empty()
    }
}

struct Node {
    id: usize,
    parent: Option<usize>,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest id, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

fn prune_tol(incumbent: f64, abs_gap: f64) -> f64 {
    abs_gap.max(1e-9 * (1.0 + incumbent.abs()))
}

/// Solves `model` to within `opts.abs_gap` of optimality.
pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> Result<MilpResult> {
    model.validate()?;
    let binaries = model.binaries();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        parent: None,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
        basis: None,
    });
    let mut next_id = 1;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0;
    let mut lp_iterations = 0;
    let mut log = Vec::new();
    let mut incomplete_bound = f64::INFINITY;
    let mut hit_limit = false;
    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();

    while let Some(node) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - prune_tol(*best, opts.abs_gap) {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            hit_limit = true;
            heap.push(node);
            break;
        }
        nodes += 1;
        lower.copy_from_slice(&model.lower);
        upper.copy_from_slice(&model.upper);
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let lp = solve_lp_bounded(model, &lower, &upper, node.basis.as_deref(), &opts.lp);
        lp_iterations += lp.iterations;
        if opts.record_nodes {
            log.push(NodeRecord {
                id: node.id,
                parent: node.parent,
                parent_bound: node.bound,
                lp_bound: (lp.status == LpStatus::Optimal).then_some(lp.objective),
            });
        }
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(MilpResult {
                        status: MilpStatus::Unbounded,
                        x: Vec::new(),
                        objective: f64::NEG_INFINITY,
                        bound: f64::NEG_INFINITY,
                        gap: f64::INFINITY,
                        nodes,
                        lp_iterations,
                        node_log: log,
                    });
                }
                // A bounded root cannot have unbounded children; treat as lost.
                hit_limit = true;
                incomplete_bound = incomplete_bound.min(node.bound);
                continue;
            }
            LpStatus::IterationLimit => {
                hit_limit = true;
                incomplete_bound = incomplete_bound.min(node.bound);
                continue;
            }
            LpStatus::Optimal => {}
        }
        // Child LPs can only be tighter; the max guards against round-off.
        let bound = lp.objective.max(node.bound);
        if let Some((_, best)) = &incumbent {
            if bound >= best - prune_tol(*best, opts.abs_gap) {
                continue;
            }
        }
        let basis = lp.basis.map(Rc::new);

        // Most fractional binary, ties to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let f = (lp.x[j] - lp.x[j].floor()).min(lp.x[j].ceil() - lp.x[j]);
            if f > opts.int_tol && branch.is_none_or(|(_, b)| f > b) {
                branch = Some((j, f));
            }
        }
        match branch {
            None => {
                // Snap binaries and re-solve so continuous values match exactly.
                let mut fixed = node.fixings.clone();
                for &j in &binaries {
                    if lower[j] != upper[j] {
                        fixed.push((j, lp.x[j].round()));
                    }
                }
                let (x, obj) = if fixed.len() == node.fixings.len() {
                    (lp.x, lp.objective)
                } else {
                    for &(j, v) in &fixed[node.fixings.len()..] {
                        lower[j] = v;
                        upper[j] = v;
                    }
                    let snapped = solve_lp_bounded(model, &lower, &upper, basis.as_deref(), &opts.lp);
                    lp_iterations += snapped.iterations;
                    if snapped.status != LpStatus::Optimal {
                        continue;
                    }
                    (snapped.x, snapped.objective)
                };
                if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                    incumbent = Some((x, obj));
                }
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        id: next_id,
                        parent: Some(node.id),
                        bound,
                        fixings,
                        basis: basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(incomplete_bound, f64::min);
    Ok(match incumbent {
        Some((x, objective)) => {
            let bound = open_bound.min(objective);
            let gap = (objective - bound).max(0.0);
            let status = if hit_limit && gap > prune_tol(objective, opts.abs_gap) {
                MilpStatus::Limit
            } else {
                MilpStatus::Optimal
            };
            MilpResult {
                status,
                x,
                objective,
                bound,
                gap: if status == MilpStatus::Optimal { gap.min(opts.abs_gap) } else { gap },
                nodes,
                lp_iterations,
                node_log: log,
            }
        }
        None => MilpResult {
            status: if hit_limit { MilpStatus::Limit } else { MilpStatus::Infeasible },
            x: Vec::new(),
            objective: f64::INFINITY,
            bound: open_bound,
            gap: f64::INFINITY,
            nodes,
            lp_iterations,
            node_log: log,
        },
    })
}
