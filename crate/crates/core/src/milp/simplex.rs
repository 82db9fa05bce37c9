//! Bounded-variable primal simplex.
//!
//! Every row `a_i·x (sense) b_i` is rewritten as `a_i·x + s_i = b_i` with a
//! logical variable `s_i` whose bounds encode the sense, so the all-logical
//! basis is the identity. The basis inverse is kept in product form (a list
//! of eta columns) and rebuilt periodically. Phase one minimizes the sum of
//! bound violations of the basic variables; phase two the objective. Pricing
//! is Dantzig's rule with a Harris-style ratio test, falling back to Bland's
//! rule after a run of degenerate pivots.

use serde::{Deserialize, Serialize};

use super::model::{MilpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    /// Pivot budget; `None` means `50 · (rows + columns)`.
    pub max_pivots: Option<usize>,
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_pivots: None,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            bland_after: 50,
            refactor_every: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) enum VarStatus {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// A simplex basis that can seed another solve of a model with the same rows
/// and columns but different bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub(crate) head: Vec<usize>,
    pub(crate) status: Vec<VarStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Includes the model's objective offset.
    pub objective: f64,
    /// Row multipliers for `a·x + s = rhs`; see [`MilpModel::lagrangian_bound`].
    pub duals: Vec<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub basis: Option<Basis>,
}

/// Solves the LP relaxation of `model` (binaries relaxed to their bounds).
pub fn solve_lp(model: &MilpModel, opts: &LpOptions) -> LpResult {
    solve_lp_bounded(model, &model.lower, &model.upper, None, opts)
}

/// Solves the relaxation with overridden variable bounds, optionally starting
/// from a previous basis.
pub fn solve_lp_bounded(model: &MilpModel, lower: &[f64], upper: &[f64], warm: Option<&Basis>, opts: &LpOptions) -> LpResult {
    let mut lp = Simplex::new(model, lower, upper, *opts);
    match warm {
        Some(b) if b.head.len() == lp.m && b.status.len() == lp.n + lp.m => lp.load_basis(b),
        _ => lp.cold_start(),
    }
    let status = lp.run();
    lp.result(model, status)
}

struct Step {
    theta: f64,
    row: usize,
    to_upper: bool,
}

struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Simplex {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    status: Vec<VarStatus>,
    etas: Vec<Eta>,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iter: usize,
    opts: LpOptions,
}

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;

impl Simplex {
    fn new(model: &MilpModel, lower: &[f64], upper: &[f64], opts: LpOptions) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut counts = vec![0usize; n + 1];
        for c in &model.constraints {
            for &(j, _) in &c.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, c) in model.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    col_row[fill[j]] = i;
                    col_val[fill[j]] = a;
                    fill[j] += 1;
                }
            }
        }
        // Duplicate or zero entries leave gaps; compact each column.
        let mut start = vec![0usize; n + 1];
        let mut rows_c = Vec::with_capacity(nnz);
        let mut vals_c = Vec::with_capacity(nnz);
        for j in 0..n {
            let mut entries: Vec<(usize, f64)> = (col_start[j]..fill[j]).map(|k| (col_row[k], col_val[k])).collect();
            entries.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < entries.len() {
                let (r, mut v) = entries[k];
                k += 1;
                while k < entries.len() && entries[k].0 == r {
                    v += entries[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    rows_c.push(r);
                    vals_c.push(v);
                }
            }
            start[j + 1] = rows_c.len();
        }

        let mut cost = model.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        let mut b = Vec::with_capacity(m);
        for c in &model.constraints {
            b.push(c.rhs);
            let (l, h) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }
        let max_iter = opts.max_pivots.unwrap_or(50 * (n + m).max(1));
        Self {
            m,
            n,
            col_start: start,
            col_row: rows_c,
            col_val: vals_c,
            b,
            cost,
            lo,
            hi,
            x: vec![0.0; n + m],
            head: Vec::new(),
            status: Vec::new(),
            etas: Vec::new(),
            pivots_since_refactor: 0,
            iterations: 0,
            max_iter,
            opts,
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (rows, vals): (&[usize], &[f64]) = if j < self.n {
            let r = self.col_start[j]..self.col_start[j + 1];
            (&self.col_row[r.clone()], &self.col_val[r])
        } else {
            (&[], &[])
        };
        let logical = (j >= self.n).then(|| (j - self.n, 1.0));
        rows.iter().copied().zip(vals.iter().copied()).chain(logical)
    }

    fn column_len(&self, j: usize) -> usize {
        if j < self.n {
            self.col_start[j + 1] - self.col_start[j]
        } else {
            1
        }
    }

    /// Nonbasic resting status nearest to zero.
    fn rest_status(&self, j: usize) -> VarStatus {
        let (l, h) = (self.lo[j], self.hi[j]);
        match (l.is_finite(), h.is_finite()) {
            (false, false) => VarStatus::Zero,
            (true, false) => VarStatus::Lower,
            (false, true) => VarStatus::Upper,
            (true, true) => {
                if l.abs() <= h.abs() {
                    VarStatus::Lower
                } else {
                    VarStatus::Upper
                }
            }
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::Lower => self.lo[j],
            VarStatus::Upper => self.hi[j],
            VarStatus::Zero | VarStatus::Basic => 0.0,
        }
    }

    /// Keeps a nonbasic status consistent with the current bounds.
    fn fix_nonbasic_status(&mut self, j: usize) {
        let s = match self.status[j] {
            VarStatus::Basic => return,
            VarStatus::Lower if self.lo[j].is_finite() => VarStatus::Lower,
            VarStatus::Upper if self.hi[j].is_finite() => VarStatus::Upper,
            _ => self.rest_status(j),
        };
        self.status[j] = s;
        self.x[j] = self.nonbasic_value(j);
    }

    fn cold_start(&mut self) {
        let total = self.n + self.m;
        self.status = vec![VarStatus::Lower; total];
        self.head = (self.n..total).collect();
        for j in 0..self.n {
            self.status[j] = self.rest_status(j);
            self.x[j] = self.nonbasic_value(j);
        }
        for i in 0..self.m {
            self.status[self.n + i] = VarStatus::Basic;
        }
        self.crash();
        self.refactor();
    }

    /// Replaces logicals whose value violates their bounds by a column
    /// singleton in that row that can absorb the residual within its bounds.
    fn crash(&mut self) {
        let mut residual = self.b.clone();
        for j in 0..self.n {
            let v = self.x[j];
            if v != 0.0 {
                for (i, a) in self.column(j) {
                    residual[i] -= a * v;
                }
            }
        }
        let mut taken = vec![false; self.m];
        for j in 0..self.n {
            if self.column_len(j) != 1 || self.lo[j] == self.hi[j] {
                continue;
            }
            let (i, a) = self.column(j).next().unwrap();
            if taken[i] {
                continue;
            }
            let s = residual[i];
            let (sl, sh) = (self.lo[self.n + i], self.hi[self.n + i]);
            if s >= sl - self.opts.feas_tol && s <= sh + self.opts.feas_tol {
                continue;
            }
            let target = if s < sl { sl } else { sh };
            let value = self.x[j] + (s - target) / a;
            if value < self.lo[j] - self.opts.feas_tol || value > self.hi[j] + self.opts.feas_tol {
                continue;
            }
            taken[i] = true;
            self.head[i] = j;
            self.status[j] = VarStatus::Basic;
            self.status[self.n + i] = if target == sl { VarStatus::Lower } else { VarStatus::Upper };
            self.x[self.n + i] = target;
        }
    }

    fn load_basis(&mut self, basis: &Basis) {
        self.head = basis.head.clone();
        self.status = basis.status.clone();
        for j in 0..self.n + self.m {
            self.fix_nonbasic_status(j);
        }
        self.refactor();
    }

    fn ftran(&self, v: &mut [f64]) {
        for eta in &self.etas {
            let t = v[eta.row];
            if t == 0.0 {
                continue;
            }
            let t = t / eta.pivot;
            v[eta.row] = t;
            for &(i, e) in &eta.entries {
                v[i] -= e * t;
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.row];
            for &(i, e) in &eta.entries {
                s -= y[i] * e;
            }
            y[eta.row] = s / eta.pivot;
        }
    }

    fn push_eta(&mut self, row: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != row && v.abs() > DROP_TOL)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            row,
            pivot: alpha[row],
            entries,
        });
    }

    /// Rebuilds the product-form inverse for the current basic set. Columns
    /// that turn out dependent are dropped to a bound and replaced by the
    /// logical of the uncovered row.
    fn refactor(&mut self) {
        self.etas.clear();
        self.pivots_since_refactor = 0;
        let (n, m) = (self.n, self.m);
        // Row i is covered by its own logical when that logical is basic.
        let mut owner: Vec<Option<usize>> = vec![None; m];
        let mut structurals = Vec::new();
        for &j in &self.head {
            if j >= n {
                owner[j - n] = Some(j);
            } else {
                structurals.push(j);
            }
        }
        structurals.sort_by_key(|&j| (self.column_len(j), j));
        let mut work = vec![0.0; m];
        for j in structurals {
            work.iter_mut().for_each(|v| *v = 0.0);
            for (i, a) in self.column(j) {
                work[i] = a;
            }
            self.ftran(&mut work);
            let mut best: Option<(usize, f64)> = None;
            for (i, &v) in work.iter().enumerate() {
                if owner[i].is_none() && v.abs() > PIVOT_TOL && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((i, v.abs()));
                }
            }
            match best {
                Some((r, _)) => {
                    self.push_eta(r, &work);
                    owner[r] = Some(j);
                }
                None => {
                    self.status[j] = VarStatus::Lower;
                    self.fix_nonbasic_status(j);
                }
            }
        }
        for (i, o) in owner.iter().enumerate() {
            let j = o.unwrap_or(n + i);
            self.head[i] = j;
            self.status[j] = VarStatus::Basic;
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                let v = self.nonbasic_value(j);
                self.x[j] = v;
                if v != 0.0 {
                    for (i, a) in self.column(j) {
                        rhs[i] -= a * v;
                    }
                }
            }
        }
        self.ftran(&mut rhs);
        for (i, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[i];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] - self.opts.feas_tol {
            v - self.lo[j]
        } else if v > self.hi[j] + self.opts.feas_tol {
            v - self.hi[j]
        } else {
            0.0
        }
    }

    fn duals(&self, phase_one: bool) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if phase_one {
                    let inf = self.infeasibility(j);
                    if inf < 0.0 {
                        -1.0
                    } else if inf > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[j]
                }
            })
            .collect();
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[j] };
        c - self.column(j).map(|(i, a)| y[i] * a).sum::<f64>()
    }

    /// Entering variable and direction (+1 increase, −1 decrease).
    fn price(&self, y: &[f64], phase_one: bool, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            let dir = match self.status[j] {
                VarStatus::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                s => {
                    let d = self.reduced_cost(j, y, phase_one);
                    match s {
                        VarStatus::Lower if d < -tol => (1.0, -d),
                        VarStatus::Upper if d > tol => (-1.0, d),
                        VarStatus::Zero if d.abs() > tol => (-d.signum(), d.abs()),
                        _ => continue,
                    }
                }
            };
            if bland {
                return Some((j, dir.0));
            }
            if best.is_none_or(|(_, _, score)| dir.1 > score) {
                best = Some((j, dir.0, dir.1));
            }
        }
        best.map(|(j, d, _)| (j, d))
    }

    fn run(&mut self) -> LpStatus {
        let mut degenerate = 0usize;
        let mut alpha = vec![0.0; self.m];
        let mut verified = false;
        loop {
            if self.iterations >= self.max_iter {
                return LpStatus::IterationLimit;
            }
            if self.pivots_since_refactor >= self.opts.refactor_every {
                self.refactor();
            }
            let phase_one = self.head.iter().any(|&j| self.infeasibility(j) != 0.0);
            let y = self.duals(phase_one);
            let bland = degenerate >= self.opts.bland_after;
            let Some((q, dir)) = self.price(&y, phase_one, bland) else {
                // Confirm on a fresh factorization before concluding.
                if !verified && self.pivots_since_refactor > 0 {
                    self.refactor();
                    verified = true;
                    continue;
                }
                return if phase_one { LpStatus::Infeasible } else { LpStatus::Optimal };
            };
            verified = false;

            alpha.iter_mut().for_each(|v| *v = 0.0);
            for (i, a) in self.column(q) {
                alpha[i] = a;
            }
            self.ftran(&mut alpha);

            let step = self.ratio_test(&alpha, dir, bland);
            let flip = self.hi[q] - self.lo[q];
            let (theta, leave) = match step {
                Some(s) if s.theta < flip => (s.theta, Some(s)),
                _ if flip.is_finite() => (flip, None),
                Some(s) => (s.theta, Some(s)),
                None => {
                    if phase_one {
                        // Cannot happen with exact arithmetic; refactor and retry.
                        self.refactor();
                        self.iterations += 1;
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
            };
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            self.x[q] += dir * theta;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= dir * theta * a;
                }
            }
            match leave {
                None => {
                    self.status[q] = if dir > 0.0 { VarStatus::Upper } else { VarStatus::Lower };
                    self.x[q] = self.nonbasic_value(q);
                }
                Some(Step { row: r, to_upper, .. }) => {
                    let out = self.head[r];
                    self.status[out] = if to_upper { VarStatus::Upper } else { VarStatus::Lower };
                    if self.lo[out] == self.hi[out] {
                        self.status[out] = VarStatus::Lower;
                    }
                    if !self.lo[out].is_finite() && !self.hi[out].is_finite() {
                        self.status[out] = VarStatus::Zero;
                    }
                    self.x[out] = self.nonbasic_value(out);
                    self.head[r] = q;
                    self.status[q] = VarStatus::Basic;
                    self.push_eta(r, &alpha);
                    self.pivots_since_refactor += 1;
                }
            }
        }
    }

    /// Step length and leaving row for entering direction `dir`.
    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> Option<Step> {
        let tol = self.opts.feas_tol;
        // (row, exact ratio, relaxed ratio, |alpha|, leaves at upper bound)
        let mut cands: Vec<(usize, f64, f64, f64, bool)> = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.head[i];
            let rate = -dir * a;
            let (v, l, h) = (self.x[j], self.lo[j], self.hi[j]);
            let limit = if v < l - tol {
                // Below its lower bound: breakpoint when it becomes feasible.
                (rate > 0.0).then(|| ((l - v) / rate, (l - v) / rate, false))
            } else if v > h + tol {
                (rate < 0.0).then(|| ((v - h) / -rate, (v - h) / -rate, true))
            } else if rate < 0.0 {
                l.is_finite().then(|| (((v - l) / -rate).max(0.0), (v - l + tol) / -rate, false))
            } else {
                h.is_finite().then(|| (((h - v) / rate).max(0.0), (h - v + tol) / rate, true))
            };
            if let Some((exact, relaxed, upper)) = limit {
                cands.push((i, exact, relaxed, a.abs(), upper));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            return cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12)
                .min_by_key(|c| self.head[c.0])
                .map(|c| Step { theta: c.1, row: c.0, to_upper: c.4 });
        }
        let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let mut best: Option<(Step, f64)> = None;
        for &(row, theta, _, mag, to_upper) in &cands {
            if theta <= bound && best.as_ref().is_none_or(|(_, b)| mag > *b) {
                best = Some((Step { theta, row, to_upper }, mag));
            }
        }
        best.map(|(s, _)| s)
    }

    fn result(mut self, model: &MilpModel, status: LpStatus) -> LpResult {
        if status == LpStatus::Optimal {
            self.recompute_basics();
        }
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = model.objective_value(&x);
        let duals = if status == LpStatus::Optimal {
            self.duals(false)
        } else {
            Vec::new()
        };
        LpResult {
            status,
            objective,
            x,
            duals,
            iterations: self.iterations,
            basis: Some(Basis {
                head: self.head,
                status: self.status,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(model: &MilpModel) -> LpResult {
        solve_lp(model, &LpOptions::default())
    }

    #[test]
    fn single_lower_bound_row() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 3.0);
        let r = solve(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-12);
        assert!((r.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_vertex() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, -1.0);
        m.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let r = solve(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-12);
        assert!((r.x[0] + r.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve(&m).status, LpStatus::Infeasible);

        let mut m = MilpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 0.0);
        m.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 0.0);
        assert_eq!(solve(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // min |x - 2| + |y + 1| written with splits; x + y = 4 forces a trade-off.
        let mut m = MilpModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let y = m.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let xp = m.add_var("xp", 0.0, f64::INFINITY, 1.0);
        let xn = m.add_var("xn", 0.0, f64::INFINITY, 1.0);
        let yp = m.add_var("yp", 0.0, f64::INFINITY, 2.0);
        let yn = m.add_var("yn", 0.0, f64::INFINITY, 2.0);
        m.add_constraint("sx", vec![(x, 1.0), (xp, -1.0), (xn, 1.0)], Sense::Eq, 2.0);
        m.add_constraint("sy", vec![(y, 1.0), (yp, -1.0), (yn, 1.0)], Sense::Eq, -1.0);
        m.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        let r = solve(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        // Cheaper to move x: x = 5, y = -1, cost 3.
        assert!((r.objective - 3.0).abs() < 1e-9, "{}", r.objective);
        assert!((r.x[x] - 5.0).abs() < 1e-9);
        assert!(m.max_violation(&r.x) < 1e-9);
        assert!((m.lagrangian_bound(&r.duals) - r.objective).abs() < 1e-9);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 4.0, -1.0);
        let y = m.add_var("y", 0.0, 4.0, -2.0);
        m.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0);
        m.add_constraint("b", vec![(x, -1.0), (y, 2.0)], Sense::Le, 6.0);
        let first = solve(&m);
        assert_eq!(first.status, LpStatus::Optimal);
        let mut upper = m.upper.clone();
        upper[y] = 1.0;
        let warm = solve_lp_bounded(&m, &m.lower, &upper, first.basis.as_ref(), &LpOptions::default());
        let cold = solve_lp_bounded(&m, &m.lower, &upper, None, &LpOptions::default());
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - cold.objective).abs() < 1e-12);
        assert!((warm.objective + 6.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut m = MilpModel::new();
        let vars: Vec<usize> = (0..5).map(|k| m.add_var(format!("x{k}"), 0.0, 10.0, -1.0 - k as f64)).collect();
        for k in 0..4 {
            m.add_constraint(format!("c{k}"), vec![(vars[k], 1.0), (vars[k + 1], 1.0)], Sense::Le, 3.0);
        }
        let opts = LpOptions {
            max_pivots: Some(1),
            ..Default::default()
        };
        assert_eq!(solve_lp(&m, &opts).status, LpStatus::IterationLimit);
    }
}
