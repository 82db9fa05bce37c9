//! Linear system model, condensed prediction matrices and polytopic sets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, invalid, Result};

/// `x_{k+1} = A x_k + B u_k + η_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return dim_err(format!("A must be square and nonempty, got {}x{}", a.nrows(), a.ncols()));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return dim_err(format!("B must have {} rows and at least one column, got {}x{}", a.nrows(), b.nrows(), b.ncols()));
        }
        Ok(Self { a, b })
    }

    /// Builds the system from row-major nested arrays.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(a)?, matrix_from_rows(b)?)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return dim_err("matrix rows differ in length");
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Condensed prediction `x̄ = F x₀ + G ū + Γ η̄` over `N` steps, where `x̄`
/// stacks `x_1..x_N`, `ū` stacks `u_0..u_{N-1}` and `η̄` stacks
/// `η_0..η_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDynamics {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
}

impl StackedDynamics {
    pub fn predict(&self, x0: &DVector<f64>, u: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        &self.f * x0 + &self.g * u + &self.gamma * eta
    }

    /// Prediction for a disturbance trajectory held as a slice.
    pub fn predict_slice(&self, x0: &DVector<f64>, u: &DVector<f64>, eta: &[f64]) -> DVector<f64> {
        self.predict(x0, u, &DVector::from_column_slice(eta))
    }

    /// Induced 1-norm of `Γ` (largest absolute column sum).
    pub fn gamma_norm1(&self) -> f64 {
        self.gamma
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_stacked(sys: &LinearSystem, horizon: usize) -> Result<StackedDynamics> {
    if horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    let (n, m) = (sys.state_dim(), sys.input_dim());
    // powers[k] = A^k
    let mut powers = Vec::with_capacity(horizon + 1);
    powers.push(DMatrix::<f64>::identity(n, n));
    for k in 1..=horizon {
        let next = sys.a() * &powers[k - 1];
        powers.push(next);
    }
    let mut f = DMatrix::zeros(n * horizon, n);
    let mut g = DMatrix::zeros(n * horizon, m * horizon);
    let mut gamma = DMatrix::zeros(n * horizon, n * horizon);
    for k in 0..horizon {
        f.view_mut((k * n, 0), (n, n)).copy_from(&powers[k + 1]);
        for i in 0..=k {
            let p = &powers[k - i];
            g.view_mut((k * n, i * m), (n, m)).copy_from(&(p * sys.b()));
            gamma.view_mut((k * n, i * n), (n, n)).copy_from(p);
        }
    }
    Ok(StackedDynamics {
        f,
        g,
        gamma,
        n,
        m,
        horizon,
    })
}

/// Step-by-step rollout; returns `x_1..x_N`.
pub fn simulate(sys: &LinearSystem, x0: &DVector<f64>, inputs: &[DVector<f64>], disturbances: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if inputs.len() != disturbances.len() {
        return dim_err(format!(
            "{} inputs but {} disturbances",
            inputs.len(),
            disturbances.len()
        ));
    }
    if x0.len() != sys.state_dim() {
        return dim_err("initial state has the wrong dimension");
    }
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(inputs.len());
    for (u, eta) in inputs.iter().zip(disturbances) {
        if u.len() != sys.input_dim() || eta.len() != sys.state_dim() {
            return dim_err("input or disturbance has the wrong dimension");
        }
        x = sys.a() * &x + sys.b() * u + eta;
        out.push(x.clone());
    }
    Ok(out)
}

/// Splits a stacked vector into consecutive blocks of `block` entries.
pub fn unstack(v: &[f64], block: usize) -> Vec<DVector<f64>> {
    v.chunks(block).map(DVector::from_column_slice).collect()
}

/// `{x : H x ≤ h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub h_mat: DMatrix<f64>,
    pub h_vec: DVector<f64>,
}

impl Polytope {
    pub fn new(h_mat: DMatrix<f64>, h_vec: DVector<f64>) -> Result<Self> {
        if h_mat.nrows() != h_vec.len() {
            return dim_err(format!("H has {} rows but h has {} entries", h_mat.nrows(), h_vec.len()));
        }
        Ok(Self { h_mat, h_vec })
    }

    /// Axis-aligned box; infinite bounds produce no row.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return dim_err("box bounds differ in length");
        }
        let d = lower.len();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..d {
            if lower[i] > upper[i] {
                return invalid(format!("empty box on coordinate {i}"));
            }
            if upper[i].is_finite() {
                let mut r = vec![0.0; d];
                r[i] = 1.0;
                rows.push((r, upper[i]));
            }
            if lower[i].is_finite() {
                let mut r = vec![0.0; d];
                r[i] = -1.0;
                rows.push((r, -lower[i]));
            }
        }
        Ok(Self {
            h_mat: DMatrix::from_fn(rows.len(), d, |i, j| rows[i].0[j]),
            h_vec: DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1)),
        })
    }

    pub fn dim(&self) -> usize {
        self.h_mat.ncols()
    }

    pub fn rows(&self) -> usize {
        self.h_mat.nrows()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (&self.h_mat * x - &self.h_vec).iter().all(|&r| r <= tol)
    }

    pub fn contains_slice(&self, x: &[f64], tol: f64) -> bool {
        (0..self.rows()).all(|i| {
            let lhs: f64 = self.h_mat.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
            lhs - self.h_vec[i] <= tol
        })
    }
}

/// Row-major form used in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRows {
    pub h: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl From<&Polytope> for PolytopeRows {
    fn from(p: &Polytope) -> Self {
        Self {
            h: matrix_to_rows(&p.h_mat),
            b: p.h_vec.iter().copied().collect(),
        }
    }
}

impl PolytopeRows {
    pub fn to_polytope(&self, dim: usize) -> Result<Polytope> {
        if self.h.iter().any(|r| r.len() != dim) {
            return dim_err(format!("halfspace rows must have {dim} entries"));
        }
        Polytope::new(
            DMatrix::from_fn(self.h.len(), dim, |i, j| self.h[i][j]),
            DVector::from_column_slice(&self.b),
        )
    }
}

/// Stacks a per-step polytope over the steps `first..=last` (1-based, within
/// `1..=horizon`) of a horizon-long trajectory: `diag(H, ..., H)` with the
/// repeated right-hand side. Steps outside the range get no rows.
pub fn stack_polytope_steps(per_step: &Polytope, horizon: usize, first: usize, last: usize) -> Result<Polytope> {
    if first == 0 || last > horizon || first > last {
        return invalid(format!("step range {first}..={last} is not within 1..={horizon}"));
    }
    let (q, d) = (per_step.rows(), per_step.dim());
    let steps = last - first + 1;
    let mut h_mat = DMatrix::zeros(q * steps, d * horizon);
    let mut h_vec = DVector::zeros(q * steps);
    for (s, k) in (first..=last).enumerate() {
        h_mat.view_mut((s * q, (k - 1) * d), (q, d)).copy_from(&per_step.h_mat);
        h_vec.rows_mut(s * q, q).copy_from(&per_step.h_vec);
    }
    Polytope::new(h_mat, h_vec)
}

/// Stacks a per-step polytope over every step of the horizon.
pub fn stack_box_constraints(per_step: &Polytope, horizon: usize) -> Result<Polytope> {
    stack_polytope_steps(per_step, horizon, 1, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_system() -> LinearSystem {
        LinearSystem::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.5]], &[vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn one_step_unrolling() {
        let sys = example_system();
        let st = build_stacked(&sys, 1).unwrap();
        assert_eq!(&st.f, sys.a());
        assert_eq!(&st.g, sys.b());
        assert_eq!(st.gamma, DMatrix::identity(2, 2));
    }

    #[test]
    fn second_block_row_is_a_squared() {
        let st = build_stacked(&example_system(), 2).unwrap();
        let a2 = st.f.view((2, 0), (2, 2)).clone_owned();
        assert_eq!(a2, DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 0.0, 0.25]));
        // G block (1,0) = A B
        assert_eq!(st.g[(2, 0)], 1.0);
        assert_eq!(st.g[(3, 0)], 0.5);
        assert_eq!(st.g[(0, 1)], 0.0);
    }

    #[test]
    fn gamma_is_unit_lower_block_triangular() {
        let st = build_stacked(&example_system(), 5).unwrap();
        for k in 0..5 {
            for i in 0..5 {
                let block = st.gamma.view((2 * k, 2 * i), (2, 2));
                if i == k {
                    assert_eq!(block.clone_owned(), DMatrix::identity(2, 2));
                } else if i > k {
                    assert!(block.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn single_step_of_example() {
        let sys = example_system();
        let x = simulate(&sys, &DVector::zeros(2), &[DVector::from_element(1, 1.0)], &[DVector::zeros(2)]).unwrap();
        assert_eq!(x[0], DVector::from_column_slice(&[0.0, 1.0]));
    }

    #[test]
    fn identity_system_stays_put() {
        let sys = LinearSystem::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 1)).unwrap();
        let x0 = DVector::from_column_slice(&[1.0, -2.0, 3.0]);
        let x = simulate(&sys, &x0, &vec![DVector::from_element(1, 5.0); 4], &vec![DVector::zeros(3); 4]).unwrap();
        assert!(x.iter().all(|xk| xk == &x0));
    }

    #[test]
    fn simulate_rejects_length_mismatch() {
        let sys = example_system();
        assert!(simulate(&sys, &DVector::zeros(2), &[DVector::zeros(1)], &[]).is_err());
        assert!(LinearSystem::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1)).is_err());
        assert!(LinearSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1)).is_err());
        assert!(build_stacked(&sys, 0).is_err());
    }

    #[test]
    fn stacked_state_lower_bound() {
        let x = Polytope::from_box(&[-1.0, -1.0], &[f64::INFINITY, f64::INFINITY]).unwrap();
        let xn = stack_box_constraints(&x, 2).unwrap();
        assert_eq!(xn.rows(), 4);
        assert_eq!(xn.h_mat, -DMatrix::<f64>::identity(4, 4));
        assert!(xn.h_vec.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn stacked_input_box() {
        let u = Polytope::from_box(&[-2.0], &[2.0]).unwrap();
        let un = stack_box_constraints(&u, 3).unwrap();
        assert_eq!(un.rows(), 6);
        assert_eq!(un.dim(), 3);
        assert_eq!(stack_box_constraints(&u, 1).unwrap(), u);
    }

    #[test]
    fn partial_step_range() {
        let x = Polytope::from_box(&[-1.0], &[f64::INFINITY]).unwrap();
        let xn = stack_polytope_steps(&x, 4, 1, 3).unwrap();
        assert_eq!(xn.rows(), 3);
        assert_eq!(xn.dim(), 4);
        assert!(xn.h_mat.column(3).iter().all(|&v| v == 0.0));
        assert!(stack_polytope_steps(&x, 4, 0, 3).is_err());
        assert!(stack_polytope_steps(&x, 4, 2, 5).is_err());
    }

    #[test]
    fn gamma_norm_of_identity() {
        let sys = LinearSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1)).unwrap();
        let st = build_stacked(&sys, 3).unwrap();
        assert_eq!(st.gamma_norm1(), 1.0);
    }
}
