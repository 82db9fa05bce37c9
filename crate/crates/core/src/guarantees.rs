//! Out-of-sample guarantee construction for a reduced scenario set.
//!
//! For each cluster `j`, the deviations `Γ(η_h − η̃_j)` of its members are
//! enclosed in an axis-aligned box `E_j`. Requiring the representative's
//! trajectory to lie in `X_N ⊖ E_j` makes every member trajectory lie in
//! `X_N`, and the expected deviation `Σ_j Σ_{h∈C_j} p_h ‖Γ(η_h − η̃_j)‖₁`
//! bounds how much the reduced cost can underestimate the full one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Polytope, PolytopeRows};
use crate::error::{dim_err, invalid, Result};
use crate::reduction::ReducedSet;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return dim_err("box bounds differ in length");
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return invalid("box lower bound exceeds upper bound");
        }
        Ok(Self { lower, upper })
    }

    pub fn point(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Grows the box to include `x`.
    pub fn extend(&mut self, x: &[f64]) {
        for ((l, u), &v) in self.lower.iter_mut().zip(self.upper.iter_mut()).zip(x) {
            *l = l.min(v);
            *u = u.max(v);
        }
    }

    /// `sup_{e ∈ box} a·e`.
    pub fn support(&self, a: impl IntoIterator<Item = f64>) -> f64 {
        a.into_iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(ai, (l, u))| ai.max(0.0) * u + ai.min(0.0) * l)
            .sum()
    }
}

/// Per-cluster deviation boxes, tightened state sets and the cost correction.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteePackage {
    pub deviation_boxes: Vec<HyperBox>,
    pub tightened_sets: Vec<Polytope>,
    pub correction: f64,
}

impl GuaranteePackage {
    pub fn build(original: &ScenarioSet, reduced: &ReducedSet, gamma: &DMatrix<f64>, state_set: &Polytope) -> Result<Self> {
        let deviation_boxes = compute_deviation_boxes(original, reduced, gamma)?;
        let tightened_sets = deviation_boxes
            .iter()
            .map(|b| tighten(state_set, b))
            .collect::<Result<Vec<_>>>()?;
        let correction = cost_correction(original, reduced, gamma)?;
        Ok(Self {
            deviation_boxes,
            tightened_sets,
            correction,
        })
    }

    pub fn clusters(&self) -> usize {
        self.deviation_boxes.len()
    }
}

#[derive(Serialize, Deserialize)]
struct PackageFile {
    deviation_boxes: Vec<HyperBox>,
    tightened_sets: Vec<PolytopeRows>,
    correction: f64,
}

impl Serialize for GuaranteePackage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PackageFile {
            deviation_boxes: self.deviation_boxes.clone(),
            tightened_sets: self.tightened_sets.iter().map(PolytopeRows::from).collect(),
            correction: self.correction,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GuaranteePackage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PackageFile::deserialize(d)?;
        let tightened_sets = raw
            .deviation_boxes
            .iter()
            .zip(&raw.tightened_sets)
            .map(|(b, p)| p.to_polytope(b.dim()))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Ok(Self {
            deviation_boxes: raw.deviation_boxes,
            tightened_sets,
            correction: raw.correction,
        })
    }
}

fn check_inputs(original: &ScenarioSet, reduced: &ReducedSet, gamma: &DMatrix<f64>) -> Result<()> {
    reduced.check_against(original)?;
    let d = original.dim();
    if gamma.nrows() != d || gamma.ncols() != d {
        return dim_err(format!("Γ must be {d}x{d}, got {}x{}", gamma.nrows(), gamma.ncols()));
    }
    Ok(())
}

/// `Γ(η_h − η̃_{j(h)})` for every original scenario.
fn deviations(original: &ScenarioSet, reduced: &ReducedSet, gamma: &DMatrix<f64>) -> Vec<DVector<f64>> {
    original
        .iter()
        .enumerate()
        .map(|(h, s)| {
            let c = &reduced.centers.get(reduced.assignment.label(h)).values;
            let diff = DVector::from_iterator(s.values.len(), s.values.iter().zip(c).map(|(a, b)| a - b));
            gamma * diff
        })
        .collect()
}

/// Interval hull of each cluster's deviation vectors.
pub fn compute_deviation_boxes(original: &ScenarioSet, reduced: &ReducedSet, gamma: &DMatrix<f64>) -> Result<Vec<HyperBox>> {
    check_inputs(original, reduced, gamma)?;
    let mut boxes: Vec<Option<HyperBox>> = vec![None; reduced.len()];
    for (h, dev) in deviations(original, reduced, gamma).iter().enumerate() {
        let slot = &mut boxes[reduced.assignment.label(h)];
        match slot {
            Some(b) => b.extend(dev.as_slice()),
            None => *slot = Some(HyperBox::point(dev.as_slice())),
        }
    }
    boxes
        .into_iter()
        .enumerate()
        .map(|(j, b)| b.ok_or_else(|| crate::Error::Invalid(format!("cluster {j} has no members"))))
        .collect()
}

/// Minkowski difference `X ⊖ E` of a halfspace polytope and a box: each row
/// keeps its normal and loses the support of the box along it.
pub fn tighten(set: &Polytope, bx: &HyperBox) -> Result<Polytope> {
    if set.dim() != bx.dim() {
        return dim_err(format!("polytope has dimension {}, box {}", set.dim(), bx.dim()));
    }
    let h_vec = DVector::from_iterator(
        set.rows(),
        (0..set.rows()).map(|i| set.h_vec[i] - bx.support(set.h_mat.row(i).iter().copied())),
    );
    Polytope::new(set.h_mat.clone(), h_vec)
}

/// The tightest admissible correction, `Σ_h p_h ‖Γ(η_h − η̃_{j(h)})‖₁`.
pub fn cost_correction(original: &ScenarioSet, reduced: &ReducedSet, gamma: &DMatrix<f64>) -> Result<f64> {
    check_inputs(original, reduced, gamma)?;
    Ok(deviations(original, reduced, gamma)
        .iter()
        .zip(original.iter())
        .map(|(dev, s)| s.p * dev.lp_norm(1))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{reduce, Norm, ReduceOptions};
    use crate::scenario::{generate_synthetic, DistributionSpec, Scenario};

    fn two_point_cluster() -> (ScenarioSet, ReducedSet) {
        let original = ScenarioSet::new(
            2,
            1,
            vec![Scenario::new(0.5, vec![1.0, 0.0]), Scenario::new(0.5, vec![-1.0, 0.0])],
        )
        .unwrap();
        let reduced = reduce(&original, 1, Norm::L2, &ReduceOptions::default()).unwrap();
        (original, reduced)
    }

    #[test]
    fn interval_hull_of_two_point_cluster() {
        let (original, reduced) = two_point_cluster();
        assert_eq!(reduced.centers.get(0).values, vec![0.0, 0.0]);
        let boxes = compute_deviation_boxes(&original, &reduced, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(boxes, vec![HyperBox::new(vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap()]);
        let c = cost_correction(&original, &reduced, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn singleton_clusters_have_zero_boxes_and_correction() {
        let original = generate_synthetic(1, 6, 2, 2, &DistributionSpec::default()).unwrap();
        let reduced = reduce(&original, 6, Norm::L1, &ReduceOptions::default()).unwrap();
        let gamma = DMatrix::from_fn(4, 4, |i, j| if i >= j { 1.0 } else { 0.0 });
        let boxes = compute_deviation_boxes(&original, &reduced, &gamma).unwrap();
        for b in &boxes {
            assert!(b.lower.iter().chain(&b.upper).all(|&v| v == 0.0));
        }
        assert_eq!(cost_correction(&original, &reduced, &gamma).unwrap(), 0.0);
    }

    #[test]
    fn zero_box_leaves_polytope_unchanged() {
        let p = Polytope::from_box(&[-1.0, -2.0], &[3.0, 4.0]).unwrap();
        let t = tighten(&p, &HyperBox::point(&[0.0, 0.0])).unwrap();
        assert_eq!(t, p);
    }

    #[test]
    fn lower_bound_tightening() {
        let p = Polytope::from_box(&[-1.0], &[f64::INFINITY]).unwrap();
        let t = tighten(&p, &HyperBox::new(vec![-0.3], vec![0.2]).unwrap()).unwrap();
        assert!((t.h_vec[0] - 0.7).abs() < 1e-15);
        assert_eq!(t.h_mat, p.h_mat);
    }

    #[test]
    fn tighten_rejects_dimension_mismatch() {
        let p = Polytope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!(tighten(&p, &HyperBox::point(&[0.0])).is_err());
        assert!(HyperBox::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn larger_box_never_loosens() {
        let p = Polytope::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -3.0]),
            DVector::from_column_slice(&[1.0, 2.0, 3.0]),
        )
        .unwrap();
        let small = HyperBox::new(vec![-0.1, -0.2], vec![0.3, 0.1]).unwrap();
        let big = HyperBox::new(vec![-0.2, -0.2], vec![0.3, 0.4]).unwrap();
        let a = tighten(&p, &small).unwrap();
        let b = tighten(&p, &big).unwrap();
        for i in 0..3 {
            assert!(b.h_vec[i] <= a.h_vec[i]);
            assert!(a.h_vec[i] <= p.h_vec[i]);
        }
    }

    #[test]
    fn package_json_round_trip() {
        let (original, reduced) = two_point_cluster();
        let x = Polytope::from_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        let pkg = GuaranteePackage::build(&original, &reduced, &DMatrix::identity(2, 2), &x).unwrap();
        let text = serde_json::to_string(&pkg).unwrap();
        let back: GuaranteePackage = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pkg);
    }
}
