#![allow(dead_code)]

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenred::dynamics::{build_stacked, stack_polytope_steps, LinearSystem, Polytope};
use scenred::evaluation::Problem;
use scenred::scenario::{generate_synthetic, DistributionSpec};

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Dense two-phase tableau simplex with Bland's rule, for `min c·x` subject to
/// `rows` and `x ≥ 0`. Returns `None` when infeasible or unbounded.
pub fn dense_lp(c: &[f64], rows: &[(Vec<f64>, Cmp, f64)]) -> Option<f64> {
    const EPS: f64 = 1e-10;
    let n = c.len();
    let m = rows.len();
    // Normalize to b >= 0.
    let rows: Vec<(Vec<f64>, Cmp, f64)> = rows
        .iter()
        .map(|(a, s, b)| {
            if *b < 0.0 {
                let flip = match s {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
                (a.iter().map(|v| -v).collect(), flip, -b)
            } else {
                (a.clone(), *s, *b)
            }
        })
        .collect();
    let slacks = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let arts = rows.iter().filter(|r| r.1 != Cmp::Le).count();
    let width = n + slacks + arts;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut si, mut ai) = (n, n + slacks);
    for (i, (a, s, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][width] = *b;
        match s {
            Cmp::Le => {
                t[i][si] = 1.0;
                basis[i] = si;
                si += 1;
            }
            Cmp::Ge => {
                t[i][si] = -1.0;
                si += 1;
                t[i][ai] = 1.0;
                basis[i] = ai;
                ai += 1;
            }
            Cmp::Eq => {
                t[i][ai] = 1.0;
                basis[i] = ai;
                ai += 1;
            }
        }
    }

    fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
        let p = t[r][col];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                for (v, q) in row.iter_mut().zip(&pr) {
                    *v -= f * q;
                }
            }
        }
        basis[r] = col;
    }

    // Runs Bland's rule on cost vector `cost` over the allowed columns.
    fn optimize(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> bool {
        let width = t[0].len() - 1;
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - basis.iter().enumerate().map(|(i, &b)| cost[b] * t[i][j]).sum::<f64>();
                if d < -1e-9 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..t.len() {
                if t[i][col] > EPS {
                    let ratio = t[i][width] / t[i][col];
                    if best.is_none_or(|(r, k)| ratio < r - 1e-12 || (ratio <= r + 1e-12 && basis[i] < basis[k])) {
                        best = Some((ratio, i));
                    }
                }
            }
            let Some((_, r)) = best else { return false };
            pivot(t, basis, r, col);
        }
    }

    if m == 0 {
        return if c.iter().all(|v| *v >= 0.0) { Some(0.0) } else { None };
    }
    let mut phase1 = vec![0.0; width];
    for v in phase1.iter_mut().skip(n + slacks) {
        *v = 1.0;
    }
    optimize(&mut t, &mut basis, &phase1, width);
    let infeas: f64 = basis.iter().enumerate().filter(|(_, &b)| b >= n + slacks).map(|(i, _)| t[i][width]).sum();
    if infeas > 1e-7 {
        return None;
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n + slacks {
            if let Some(col) = (0..n + slacks).find(|&j| t[i][j].abs() > 1e-9 && !basis.contains(&j)) {
                pivot(&mut t, &mut basis, i, col);
            }
        }
    }
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(c);
    if !optimize(&mut t, &mut basis, &cost, n + slacks) {
        return None;
    }
    Some(basis.iter().enumerate().map(|(i, &b)| cost[b] * t[i][width]).sum())
}

#[derive(Clone, Debug)]
pub struct RandomOcp {
    pub problem: Problem,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    pub min_satisfaction: f64,
}

pub struct OcpShape {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub scenarios: usize,
    pub min_satisfaction: f64,
}

/// A random box-constrained instance: mildly stable dynamics, Gaussian
/// scenarios, state box around the origin, symmetric input box.
pub fn random_ocp(seed: u64, shape: &OcpShape) -> RandomOcp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, horizon) = (shape.n, shape.m, shape.horizon);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { rng.random_range(0.5..1.0) } else { rng.random_range(-0.4..0.4) }).collect())
        .collect();
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let system = LinearSystem::from_rows(&a, &b).unwrap();
    let stacked = build_stacked(&system, horizon).unwrap();
    let x0 = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-0.5..0.5)));
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.2..-0.3)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.2)).collect();
    let state_set = stack_polytope_steps(&Polytope::from_box(&lower, &upper).unwrap(), horizon, 1, horizon).unwrap();
    let umax: f64 = rng.random_range(0.5..2.0);
    let input_set = stack_polytope_steps(&Polytope::from_box(&vec![-umax; m], &vec![umax; m]).unwrap(), horizon, 1, horizon).unwrap();
    let std = rng.random_range(0.05..0.3);
    let scenarios = generate_synthetic(rng.random(), shape.scenarios, n, horizon, &DistributionSpec::Gaussian { std: vec![std] }).unwrap();
    RandomOcp {
        problem: Problem {
            system,
            stacked,
            x0,
            state_set,
            input_set,
            epsilon: 1.0 - shape.min_satisfaction,
            scenarios,
        },
        u_lower: vec![-umax; m * horizon],
        u_upper: vec![umax; m * horizon],
        min_satisfaction: shape.min_satisfaction,
    }
}

/// Optimal cost of the control problem when exactly the scenarios with
/// `pattern[j]` must satisfy the state set, solved with [`dense_lp`] on a
/// formulation written independently of the library's MILP builder.
pub fn pattern_lp(ocp: &RandomOcp, scen: &scenred::scenario::ScenarioSet, state_set: &[&Polytope], pattern: &[bool]) -> Option<f64> {
    let p = &ocp.problem;
    let st = &p.stacked;
    let (nn, mn) = (st.n * st.horizon, st.m * st.horizon);
    let ms = scen.len();
    // Variables: v = u − lower ∈ [0, upper − lower], t_u (mn), t_x (ms·nn).
    let nv = mn + mn + ms * nn;
    let (vo, to, so) = (0, mn, 2 * mn);
    let mut c = vec![0.0; nv];
    let mass: f64 = scen.iter().map(|s| s.p).sum();
    for k in 0..mn {
        c[to + k] = mass;
    }
    for (j, s) in scen.iter().enumerate() {
        for i in 0..nn {
            c[so + j * nn + i] = s.p;
        }
    }
    let mut rows = Vec::new();
    let unit = |k: usize| {
        let mut r = vec![0.0; nv];
        r[k] = 1.0;
        r
    };
    for k in 0..mn {
        rows.push((unit(vo + k), Cmp::Le, ocp.u_upper[k] - ocp.u_lower[k]));
        // t ≥ u and t ≥ −u with u = v + lower.
        let mut r = unit(to + k);
        r[vo + k] = -1.0;
        rows.push((r, Cmp::Ge, ocp.u_lower[k]));
        let mut r = unit(to + k);
        r[vo + k] = 1.0;
        rows.push((r, Cmp::Ge, -ocp.u_lower[k]));
    }
    let lower = DVector::from_column_slice(&ocp.u_lower);
    for (j, s) in scen.iter().enumerate() {
        // x = d + G v with d = F x0 + G lower + Γ η.
        let d = &st.f * &p.x0 + &st.g * &lower + &st.gamma * DVector::from_column_slice(&s.values);
        for i in 0..nn {
            let mut r = unit(so + j * nn + i);
            for k in 0..mn {
                r[vo + k] = -st.g[(i, k)];
            }
            rows.push((r, Cmp::Ge, d[i]));
            let mut r = unit(so + j * nn + i);
            for k in 0..mn {
                r[vo + k] = st.g[(i, k)];
            }
            rows.push((r, Cmp::Ge, -d[i]));
        }
        if pattern[j] {
            let set = state_set[j];
            let hg = &set.h_mat * &st.g;
            let hd = &set.h_mat * &d;
            for r in 0..set.rows() {
                let mut row = vec![0.0; nv];
                for k in 0..mn {
                    row[vo + k] = hg[(r, k)];
                }
                rows.push((row, Cmp::Le, set.h_vec[r] - hd[r]));
            }
        }
    }
    dense_lp(&c, &rows)
}

/// Minimum of [`pattern_lp`] over all indicator patterns meeting the chance
/// constraint.
pub fn enumerate_patterns(ocp: &RandomOcp, scen: &scenred::scenario::ScenarioSet, state_set: &[&Polytope]) -> Option<f64> {
    let ms = scen.len();
    let need = 1.0 - ocp.problem.epsilon;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << ms) {
        let pattern: Vec<bool> = (0..ms).map(|j| mask >> j & 1 == 1).collect();
        let mass: f64 = scen.iter().zip(&pattern).filter(|(_, z)| **z).map(|(s, _)| s.p).sum();
        if mass < need - 1e-9 {
            continue;
        }
        if let Some(v) = pattern_lp(ocp, scen, state_set, &pattern) {
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Textbook LPs with known answers.
pub fn self_check() {
    // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36
    let v = dense_lp(
        &[-3.0, -5.0],
        &[
            (vec![1.0, 0.0], Cmp::Le, 4.0),
            (vec![0.0, 2.0], Cmp::Le, 12.0),
            (vec![3.0, 2.0], Cmp::Le, 18.0),
        ],
    )
    .unwrap();
    assert!((v + 36.0).abs() < 1e-9);
    assert!(dense_lp(&[1.0], &[(vec![1.0], Cmp::Le, -1.0)]).is_none());
    assert!(dense_lp(&[-1.0], &[(vec![1.0], Cmp::Ge, 1.0)]).is_none());
    let v = dense_lp(&[1.0, 1.0], &[(vec![1.0, 1.0], Cmp::Eq, 2.0), (vec![1.0, -1.0], Cmp::Ge, 1.0)]).unwrap();
    assert!((v - 2.0).abs() < 1e-9);
}
