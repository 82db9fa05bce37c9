use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A linear row `Σ coeffs · x  (sense)  rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// How far `x` is from satisfying the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimize `c·x + offset` subject to linear rows, variable bounds and
/// binary restrictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
    pub constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.binary.push(false);
        self.names.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.add_var(name, 0.0, 1.0, cost);
        self.binary[j] = true;
        j
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.num_vars()).filter(|&j| self.binary[j]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n || self.binary.len() != n {
            return invalid("variable arrays differ in length");
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return invalid(format!("objective coefficient of '{}' is not finite", self.names[j]));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return invalid(format!("variable '{}' has empty bounds", self.names[j]));
            }
            if self.binary[j] && (self.lower[j] < 0.0 || self.upper[j] > 1.0) {
                return invalid(format!("binary '{}' has bounds outside [0, 1]", self.names[j]));
            }
        }
        if !self.offset.is_finite() {
            return invalid("objective offset is not finite");
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return invalid(format!("row '{}' has a non-finite right-hand side", c.name));
            }
            if let Some(&(j, a)) = c.coeffs.iter().find(|&&(j, a)| j >= n || !a.is_finite()) {
                return invalid(format!("row '{}' has a bad entry ({j}, {a})", c.name));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let bounds = (0..self.num_vars())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Largest distance of a binary variable from {0, 1}.
    pub fn max_fractionality(&self, x: &[f64]) -> f64 {
        self.binaries()
            .into_iter()
            .map(|j| (x[j] - x[j].round()).abs())
            .fold(0.0, f64::max)
    }

    /// Lower bound on the LP optimum implied by row multipliers `y` (one per
    /// constraint, for rows written as `a·x + s = rhs`): the minimum of the
    /// Lagrangian over the variable bounds and the slack sign restrictions.
    /// Returns `-inf` when `y` leaves an unbounded direction.
    pub fn lagrangian_bound(&self, y: &[f64]) -> f64 {
        const ZERO: f64 = 1e-9;
        let mut reduced = self.objective.clone();
        let mut bound = self.offset;
        for (c, &yi) in self.constraints.iter().zip(y) {
            bound += yi * c.rhs;
            for &(j, a) in &c.coeffs {
                reduced[j] -= yi * a;
            }
            // Slack s = rhs − a·x enters the Lagrangian as −y·s.
            let ok = match c.sense {
                Sense::Eq => true,
                Sense::Le => yi <= ZERO,  // s ≥ 0
                Sense::Ge => yi >= -ZERO, // s ≤ 0
            };
            if !ok {
                return f64::NEG_INFINITY;
            }
        }
        for (j, d) in reduced.into_iter().enumerate() {
            if d > ZERO {
                if self.lower[j].is_infinite() {
                    return f64::NEG_INFINITY;
                }
                bound += d * self.lower[j];
            } else if d < -ZERO {
                if self.upper[j].is_infinite() {
                    return f64::NEG_INFINITY;
                }
                bound += d * self.upper[j];
            } else if d != 0.0 {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if lo.is_finite() && hi.is_finite() {
                    bound += (d * lo).min(d * hi);
                }
            }
        }
        bound
    }
}
