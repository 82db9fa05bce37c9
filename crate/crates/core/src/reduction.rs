//! Clustering-based scenario reduction.
//!
//! The reduced set minimizes the expected distance between each original
//! scenario and its nearest representative,
//! `L = Σ_h p_h min_j ‖η_h − η̃_j‖_l^l`, by alternating nearest-center
//! assignment with per-cluster center updates. With `l = 2` the update is the
//! probability-weighted mean (weighted k-means); with `l = 1` it is the
//! coordinate-wise weighted median (weighted k-medians).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, invalid, Error, Result};
use crate::scenario::{Scenario, ScenarioSet};

/// Which `l`-norm (raised to the `l`-th power) measures scenario distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn from_l(l: u32) -> Result<Self> {
        match l {
            1 => Ok(Norm::L1),
            2 => Ok(Norm::L2),
            _ => invalid(format!("l must be 1 or 2, got {l}")),
        }
    }

    pub fn l(self) -> u32 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }

    /// `‖a − b‖_l^l`.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        }
    }
}

/// Maps every original scenario to the index of its cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        let mut seen = vec![false; clusters];
        for &j in &labels {
            if j >= clusters {
                return invalid(format!("cluster index {j} out of range for {clusters} clusters"));
            }
            seen[j] = true;
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return invalid(format!("cluster {j} is empty"));
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, h: usize) -> usize {
        self.labels[h]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of every cluster, in increasing order.
    pub fn members(&self, clusters: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); clusters];
        for (h, &j) in self.labels.iter().enumerate() {
            out[j].push(h);
        }
        out
    }
}

/// Output of [`reduce`]: the representatives with aggregated probabilities,
/// the final clustering, and the loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSet {
    pub centers: ScenarioSet,
    pub assignment: ClusterAssignment,
    pub loss: f64,
    pub iterations: usize,
    pub loss_history: Vec<f64>,
    pub norm: Norm,
}

impl ReducedSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Checks that this reduced set was built from `original`.
    pub fn check_against(&self, original: &ScenarioSet) -> Result<()> {
        if self.assignment.len() != original.len() {
            return dim_err(format!(
                "assignment covers {} scenarios, original set has {}",
                self.assignment.len(),
                original.len()
            ));
        }
        if self.centers.dim() != original.dim() {
            return dim_err("centers and original scenarios differ in length");
        }
        let mut mass = vec![0.0; self.len()];
        for (h, s) in original.iter().enumerate() {
            mass[self.assignment.label(h)] += s.p;
        }
        for (j, c) in self.centers.iter().enumerate() {
            if (mass[j] - c.p).abs() > 1e-9 {
                return invalid(format!("cluster {j} probability {} does not match member mass {}", c.p, mass[j]));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ReducedSetFile {
    state_dim: usize,
    horizon: usize,
    scenarios: Vec<Scenario>,
    assignment: Vec<usize>,
    loss: f64,
    #[serde(default)]
    iterations: usize,
    #[serde(default)]
    loss_history: Vec<f64>,
    #[serde(default = "default_l")]
    l: u32,
}

fn default_l() -> u32 {
    1
}

impl Serialize for ReducedSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReducedSetFile {
            state_dim: self.centers.state_dim(),
            horizon: self.centers.horizon(),
            scenarios: self.centers.scenarios().to_vec(),
            assignment: self.assignment.labels().to_vec(),
            loss: self.loss,
            iterations: self.iterations,
            loss_history: self.loss_history.clone(),
            l: self.norm.l(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ReducedSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ReducedSetFile::deserialize(deserializer)?;
        let clusters = raw.scenarios.len();
        let centers = ScenarioSet::normalized(raw.state_dim, raw.horizon, raw.scenarios).map_err(D::Error::custom)?;
        let assignment = ClusterAssignment::new(raw.assignment, clusters).map_err(D::Error::custom)?;
        let norm = Norm::from_l(raw.l).map_err(D::Error::custom)?;
        Ok(ReducedSet {
            centers,
            assignment,
            loss: raw.loss,
            iterations: raw.iterations,
            loss_history: raw.loss_history,
            norm,
        })
    }
}

fn check_dims(centers: &[Vec<f64>], original: &ScenarioSet) -> Result<()> {
    if centers.is_empty() {
        return invalid("at least one center is required");
    }
    if let Some(c) = centers.iter().find(|c| c.len() != original.dim()) {
        return dim_err(format!("center has {} values, scenarios have {}", c.len(), original.dim()));
    }
    Ok(())
}

/// `Σ_h p_h min_j ‖η_h − c_j‖_l^l` over bare center points.
pub fn loss_of_points(centers: &[Vec<f64>], original: &ScenarioSet, norm: Norm) -> Result<f64> {
    check_dims(centers, original)?;
    Ok(original
        .iter()
        .map(|s| s.p * nearest(centers, &s.values, norm).1)
        .sum())
}

/// Reduction loss of a candidate reduced set; center probabilities are ignored.
pub fn evaluate_loss(centers: &ScenarioSet, original: &ScenarioSet, norm: Norm) -> Result<f64> {
    let points: Vec<Vec<f64>> = centers.iter().map(|c| c.values.clone()).collect();
    loss_of_points(&points, original, norm)
}

/// Nearest center and its distance; ties go to the lowest index.
fn nearest(centers: &[Vec<f64>], x: &[f64], norm: Norm) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = norm.distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Result of an assignment step.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub assignment: ClusterAssignment,
    /// True when an empty cluster was repaired by moving its center onto a
    /// scenario at positive distance from its previous representative.
    pub moved: bool,
}

/// Assigns every scenario to its nearest center (ties to the lowest index).
///
/// A center left without members is moved onto the scenario with the largest
/// weighted distance to its own center, taken from a cluster that keeps at
/// least one member. This never increases the loss and keeps all clusters
/// populated, so `centers` may be modified.
pub fn assign_clusters(original: &ScenarioSet, centers: &mut [Vec<f64>], norm: Norm) -> Result<Assignment> {
    check_dims(centers, original)?;
    if centers.len() > original.len() {
        return invalid(format!(
            "{} centers cannot all be populated by {} scenarios",
            centers.len(),
            original.len()
        ));
    }
    let mut labels = Vec::with_capacity(original.len());
    let mut dist = Vec::with_capacity(original.len());
    let mut sizes = vec![0usize; centers.len()];
    for s in original.iter() {
        let (j, d) = nearest(centers, &s.values, norm);
        labels.push(j);
        dist.push(d);
        sizes[j] += 1;
    }
    let mut moved = false;
    while let Some(empty) = sizes.iter().position(|&k| k == 0) {
        let mut pick: Option<(usize, f64)> = None;
        for (h, s) in original.iter().enumerate() {
            if sizes[labels[h]] < 2 {
                continue;
            }
            let w = s.p * dist[h];
            if pick.is_none_or(|(_, best)| w > best) {
                pick = Some((h, w));
            }
        }
        // Pigeonhole: with more scenarios than clusters and one cluster empty,
        // another cluster holds at least two members.
        let (h, w) = pick.expect("a cluster with two or more members exists");
        moved |= w > 0.0;
        sizes[labels[h]] -= 1;
        sizes[empty] += 1;
        labels[h] = empty;
        dist[h] = 0.0;
        centers[empty] = original.get(h).values.clone();
    }
    Ok(Assignment {
        assignment: ClusterAssignment::new(labels, centers.len())?,
        moved,
    })
}

/// Left weighted median: the smallest value at which the cumulative weight
/// reaches half of the total.
pub fn weighted_median(pairs: &mut [(f64, f64)]) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let half = 0.5 * total;
    let mut acc = 0.0;
    for &(v, w) in pairs.iter() {
        acc += w;
        if acc >= half {
            return v;
        }
    }
    pairs[pairs.len() - 1].0
}

/// Minimizer of `Σ_h p_h ‖η_h − c‖_l^l` over the cluster members.
pub fn update_center(members: &[&Scenario], norm: Norm) -> Result<Vec<f64>> {
    let first = members.first().ok_or_else(|| Error::Invalid("cannot update the center of an empty cluster".into()))?;
    let dim = first.values.len();
    if members.iter().any(|m| m.values.len() != dim) {
        return dim_err("cluster members differ in length");
    }
    if members.len() == 1 {
        return Ok(first.values.clone());
    }
    Ok(match norm {
        Norm::L2 => {
            let total: f64 = members.iter().map(|m| m.p).sum();
            let mut c = vec![0.0; dim];
            for m in members {
                for (ci, v) in c.iter_mut().zip(&m.values) {
                    *ci += m.p * v;
                }
            }
            c.iter_mut().for_each(|ci| *ci /= total);
            c
        }
        Norm::L1 => {
            let mut pairs = Vec::with_capacity(members.len());
            (0..dim)
                .map(|i| {
                    pairs.clear();
                    pairs.extend(members.iter().map(|m| (m.values[i], m.p)));
                    weighted_median(&mut pairs)
                })
                .collect()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReduceOptions {
    /// Seeds the tie-breaking during initialization.
    pub seed: u64,
    pub max_iter: usize,
    /// Minimum absolute loss decrease for another iteration.
    pub tol: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

/// Weighted farthest-point seeding: the most probable scenario first, then
/// repeatedly the scenario with the largest `p_h · distance-to-nearest-seed`.
/// The RNG only decides between exact ties.
fn initial_centers(original: &ScenarioSet, count: usize, norm: Norm, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = original.len();
    let mut chosen = Vec::with_capacity(count);
    let mut taken = vec![false; m];
    let pick = |scores: &[f64], taken: &[bool], rng: &mut ChaCha8Rng| -> usize {
        let best = (0..m)
            .filter(|&h| !taken[h])
            .map(|h| scores[h])
            .fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..m).filter(|&h| !taken[h] && scores[h] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        }
    };
    let probs = original.probabilities();
    let first = pick(&probs, &taken, rng);
    chosen.push(first);
    taken[first] = true;
    let mut near: Vec<f64> = original
        .iter()
        .map(|s| norm.distance(&s.values, &original.get(first).values))
        .collect();
    while chosen.len() < count {
        let scores: Vec<f64> = probs.iter().zip(&near).map(|(p, d)| p * d).collect();
        let next = pick(&scores, &taken, rng);
        chosen.push(next);
        taken[next] = true;
        let c = &original.get(next).values;
        for (h, s) in original.iter().enumerate() {
            near[h] = near[h].min(norm.distance(&s.values, c));
        }
    }
    chosen
}

fn updated_centers(original: &ScenarioSet, assignment: &ClusterAssignment, clusters: usize, norm: Norm) -> Result<Vec<Vec<f64>>> {
    assignment
        .members(clusters)
        .iter()
        .map(|idx| {
            let members: Vec<&Scenario> = idx.iter().map(|&h| original.get(h)).collect();
            update_center(&members, norm)
        })
        .collect()
}

/// Reduces `original` to `target` representatives.
pub fn reduce(original: &ScenarioSet, target: usize, norm: Norm, opts: &ReduceOptions) -> Result<ReducedSet> {
    if target == 0 {
        return invalid("the reduced set needs at least one scenario");
    }
    if target > original.len() {
        return invalid(format!(
            "cannot reduce {} scenarios to {target}",
            original.len()
        ));
    }
    if opts.max_iter == 0 {
        return invalid("max_iter must be at least 1");
    }
    if !(opts.tol >= 0.0) {
        return invalid("tol must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers: Vec<Vec<f64>> = initial_centers(original, target, norm, &mut rng)
        .into_iter()
        .map(|h| original.get(h).values.clone())
        .collect();
    let mut assignment = assign_clusters(original, &mut centers, norm)?.assignment;
    let mut loss = loss_of_points(&centers, original, norm)?;
    let mut history = vec![loss];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut next = updated_centers(original, &assignment, target, norm)?;
        let step = assign_clusters(original, &mut next, norm)?;
        let next_loss = loss_of_points(&next, original, norm)?;
        if next_loss > loss {
            // Rounding noise on an already converged clustering.
            break;
        }
        let unchanged = !step.moved && step.assignment == assignment;
        let decrease = loss - next_loss;
        centers = next;
        assignment = step.assignment;
        loss = next_loss;
        history.push(loss);
        if unchanged || (!step.moved && decrease < opts.tol) {
            break;
        }
    }
    let mut mass = vec![0.0; target];
    for (h, s) in original.iter().enumerate() {
        mass[assignment.label(h)] += s.p;
    }
    let reps = centers
        .into_iter()
        .zip(mass)
        // Summation can overshoot 1 by an ulp when one cluster takes everything.
        .map(|(values, p)| Scenario::new(p.min(1.0), values))
        .collect();
    Ok(ReducedSet {
        centers: ScenarioSet::new(original.state_dim(), original.horizon(), reps)?,
        assignment,
        loss,
        iterations,
        loss_history: history,
        norm,
    })
}
