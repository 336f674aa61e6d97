//! LP relaxation of OWA-k-median.
//!
//! Variables are the openings `y_i` and assignments `x[i][j][l]` (copy `l` of
//! client `j` served by facility `i`). Rows:
//!
//! * cardinality: `sum_i y_i = k`;
//! * capacity, per `(i, j)`: `sum_l x[i][j][l] <= y_i`;
//! * demand, per `(j, l)`: `sum_i x[i][j][l] >= 1`;
//!
//! with every variable in `[0, 1]`. The objective is
//! `sum_{i,j,l} w_l c[j][i] x[i][j][l]`. Copies with zero weight carry no
//! cost and are left out of the program; [`solve_lp`] fills them back in.

pub mod export;
pub mod simplex;
pub mod waterfill;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::scalar::Scalar;

pub use simplex::{RowKind, SimplexOptions};
pub use waterfill::{waterfill_client_cost, waterfill_per_client, waterfill_total_cost};

/// Default cap on the number of LP variables.
pub const DEFAULT_VARIABLE_LIMIT: usize = 2_000_000;
/// Max-norm tolerance on the residuals of a returned solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFamily {
    Cardinality,
    Capacity { facility: usize, client: usize },
    Demand { client: usize, copy: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub family: RowFamily,
    pub kind: RowKind,
    pub rhs: f64,
    pub entries: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct LpProgram {
    m: usize,
    n: usize,
    k: usize,
    /// Copy indices (0-based) kept in the program, i.e. those with `w_l > 0`.
    copies: Vec<usize>,
    weights: Vec<f64>,
    costs: Vec<Vec<f64>>,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LpRow>,
}

#[derive(Clone, Debug)]
pub struct FractionalSolution {
    pub y: Vec<f64>,
    /// Full `n x k x m` tensor, entry `(j, l, i)` at `(j * k + l) * m + i`.
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub per_client_lp_cost: Vec<f64>,
    /// Basic column per row, for reproducibility.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl FractionalSolution {
    pub fn x_at(&self, facility: usize, client: usize, copy: usize, m: usize, k: usize) -> Option<f64> {
        self.x.as_ref().map(|x| x[(client * k + copy) * m + facility])
    }
}

pub fn build_lp<S: Scalar>(inst: &Instance<S>) -> Result<LpProgram> {
    build_lp_with_limit(inst, DEFAULT_VARIABLE_LIMIT)
}

pub fn build_lp_with_limit<S: Scalar>(inst: &Instance<S>, limit: usize) -> Result<LpProgram> {
    let (m, n, k) = (inst.num_facilities(), inst.num_clients(), inst.k());
    let weights: Vec<f64> = inst.weights().values().iter().map(Scalar::as_f64).collect();
    let copies: Vec<usize> = (0..k).filter(|&l| weights[l] > 0.0).collect();
    let kc = copies.len();
    let required = m as u128 + (n as u128) * (kc as u128) * (m as u128);
    if required > limit as u128 {
        return Err(Error::CapacityExceeded {
            what: "LP variables",
            required,
            limit: limit as u128,
        });
    }
    let costs: Vec<Vec<f64>> = inst
        .costs()
        .iter()
        .map(|row| row.iter().map(Scalar::as_f64).collect())
        .collect();
    let vars = required as usize;
    let mut objective = vec![0.0; vars];
    for j in 0..n {
        for (lc, &l) in copies.iter().enumerate() {
            for i in 0..m {
                objective[m + (j * kc + lc) * m + i] = weights[l] * costs[j][i];
            }
        }
    }
    let mut rows = Vec::with_capacity(1 + n * m + n * kc);
    rows.push(LpRow {
        family: RowFamily::Cardinality,
        kind: RowKind::Eq,
        rhs: k as f64,
        entries: (0..m).map(|i| (i, 1.0)).collect(),
    });
    for j in 0..n {
        for i in 0..m {
            let mut entries: Vec<(usize, f64)> = (0..kc).map(|lc| (m + (j * kc + lc) * m + i, 1.0)).collect();
            entries.push((i, -1.0));
            rows.push(LpRow {
                family: RowFamily::Capacity { facility: i, client: j },
                kind: RowKind::Le,
                rhs: 0.0,
                entries,
            });
        }
    }
    for j in 0..n {
        for (lc, &l) in copies.iter().enumerate() {
            rows.push(LpRow {
                family: RowFamily::Demand { client: j, copy: l },
                kind: RowKind::Ge,
                rhs: 1.0,
                entries: (0..m).map(|i| (m + (j * kc + lc) * m + i, 1.0)).collect(),
            });
        }
    }
    Ok(LpProgram {
        m,
        n,
        k,
        copies,
        weights,
        costs,
        objective,
        lower: vec![0.0; vars],
        upper: vec![1.0; vars],
        rows,
    })
}

impl LpProgram {
    pub fn num_facilities(&self) -> usize {
        self.m
    }

    pub fn num_clients(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    /// Copies kept in the program (0-based).
    pub fn kept_copies(&self) -> &[usize] {
        &self.copies
    }

    pub fn y_var(&self, facility: usize) -> usize {
        facility
    }

    /// Index of `x[i][j][l]`, or `None` when copy `l` was eliminated.
    pub fn x_var(&self, facility: usize, client: usize, copy: usize) -> Option<usize> {
        let lc = self.copies.iter().position(|&l| l == copy)?;
        Some(self.m + (client * self.copies.len() + lc) * self.m + facility)
    }

    pub fn variable_name(&self, var: usize) -> String {
        if var < self.m {
            return format!("Y{var}");
        }
        let kc = self.copies.len();
        let rest = var - self.m;
        let i = rest % self.m;
        let jl = rest / self.m;
        format!("X{}_{}_{}", i, jl / kc, self.copies[jl % kc])
    }

    /// Fixes `y` by collapsing its bounds (used to cross-check water-filling).
    pub fn pin_openings(&mut self, y: &[f64]) -> Result<()> {
        waterfill::check_openings(y, self.m, self.k)?;
        for (i, &v) in y.iter().enumerate() {
            let v = v.clamp(0.0, 1.0);
            self.lower[i] = v;
            self.upper[i] = v;
        }
        Ok(())
    }

    /// Objective at an assignment tensor in the `n x k x m` layout.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let (m, k) = (self.m, self.k);
        let mut total = 0.0;
        for j in 0..self.n {
            for l in 0..k {
                for i in 0..m {
                    total += self.weights[l] * self.costs[j][i] * x[(j * k + l) * m + i];
                }
            }
        }
        total
    }

    /// Max-norm violation of all rows and bounds at a full point, counting
    /// eliminated copies too.
    pub fn max_residual(&self, y: &[f64], x: &[f64]) -> f64 {
        let (m, n, k) = (self.m, self.n, self.k);
        let mut worst: f64 = 0.0;
        let sum: f64 = y.iter().sum();
        worst = worst.max((sum - k as f64).abs());
        for v in y.iter().chain(x) {
            worst = worst.max(-v).max(v - 1.0);
        }
        for j in 0..n {
            for i in 0..m {
                let used: f64 = (0..k).map(|l| x[(j * k + l) * m + i]).sum();
                worst = worst.max(used - y[i]);
            }
            for l in 0..k {
                let served: f64 = (0..m).map(|i| x[(j * k + l) * m + i]).sum();
                worst = worst.max(1.0 - served);
            }
        }
        worst
    }

    /// Full assignment tensor for an integral committee with greedy serving.
    pub fn greedy_point(&self, committee: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let (m, k) = (self.m, self.k);
        let mut y = vec![0.0; m];
        for &i in committee {
            y[i] = 1.0;
        }
        let mut x = vec![0.0; self.n * k * m];
        for j in 0..self.n {
            for (l, copy) in waterfill::waterfill_assignment(&self.costs[j], &y, k).into_iter().enumerate() {
                for (i, mass) in copy {
                    x[(j * k + l) * m + i] = mass;
                }
            }
        }
        (y, x)
    }
}

pub fn solve_lp(prog: &LpProgram) -> Result<FractionalSolution> {
    solve_lp_with(prog, &SimplexOptions::default())
}

pub fn solve_lp_with(prog: &LpProgram, opts: &SimplexOptions) -> Result<FractionalSolution> {
    let (m, n, k) = (prog.m, prog.n, prog.k);
    let kc = prog.copies.len();
    let mut columns = vec![Vec::new(); prog.num_variables()];
    for (r, row) in prog.rows.iter().enumerate() {
        for &(v, a) in &row.entries {
            columns[v].push((r, a));
        }
    }
    let kinds: Vec<RowKind> = prog.rows.iter().map(|r| r.kind).collect();
    let rhs: Vec<f64> = prog.rows.iter().map(|r| r.rhs).collect();
    let problem = simplex::Problem {
        columns: &columns,
        cost: &prog.objective,
        lower: &prog.lower,
        upper: &prog.upper,
        kinds: &kinds,
        rhs: &rhs,
    };
    let sol = simplex::solve(&problem, opts).map_err(|e| match e {
        Error::Infeasible(v) => Error::Domain(format!("LP relaxation reported infeasible (residual {v})")),
        other => other,
    })?;

    let y: Vec<f64> = sol.x[..m].to_vec();
    let mut x = vec![0.0; n * k * m];
    let mut per_client = vec![0.0; n];
    for j in 0..n {
        let mut used = vec![0.0; m];
        for (lc, &l) in prog.copies.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = (0..m)
                .map(|i| (i, sol.x[m + (j * kc + lc) * m + i]))
                .filter(|&(_, v)| v > 0.0)
                .collect();
            // Trim over-served copies from the most expensive facilities.
            let mut excess: f64 = entries.iter().map(|e| e.1).sum::<f64>() - 1.0;
            if excess > 0.0 {
                entries.sort_by(|a, b| prog.costs[j][b.0].total_cmp(&prog.costs[j][a.0]));
                for e in entries.iter_mut() {
                    let cut = e.1.min(excess);
                    e.1 -= cut;
                    excess -= cut;
                }
            }
            for (i, v) in entries {
                x[(j * k + l) * m + i] = v;
                used[i] += v;
                per_client[j] += prog.weights[l] * prog.costs[j][i] * v;
            }
        }
        let zero_copies: Vec<usize> = (0..k).filter(|l| !prog.copies.contains(l)).collect();
        if !zero_copies.is_empty() {
            let residual: Vec<f64> = (0..m).map(|i| (y[i] - used[i]).max(0.0)).collect();
            let fill = waterfill::waterfill_assignment(&prog.costs[j], &residual, zero_copies.len());
            for (copy, l) in fill.into_iter().zip(zero_copies) {
                for (i, mass) in copy {
                    x[(j * k + l) * m + i] = mass;
                }
            }
        }
    }
    let objective = per_client.iter().sum();
    Ok(FractionalSolution {
        y,
        x: Some(x),
        objective,
        per_client_lp_cost: per_client,
        basis: sol.basis,
        iterations: sol.iterations,
    })
}

/// Builds and solves the relaxation of `inst`.
pub fn solve_instance<S: Scalar>(inst: &Instance<S>) -> Result<FractionalSolution> {
    solve_lp(&build_lp(inst)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_solve;
    use crate::gen::{gen_random, CostMode};
    use crate::model::WeightVector;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        let w = WeightVector::<f64>::harmonic(1).unwrap();
        let inst = Instance::new(2, vec![vec![1.0, 2.0]], w, None).unwrap();
        assert_eq!(build_lp(&inst).unwrap().num_variables(), 4);
        let w = WeightVector::<f64>::harmonic(2).unwrap();
        let inst = Instance::new(3, vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]], w, None).unwrap();
        let p = build_lp(&inst).unwrap();
        assert_eq!(p.num_variables(), 15);
        assert_eq!(p.num_rows(), 11);
        assert!(p.objective().iter().all(|&c| c >= 0.0));
        assert_eq!(p.variable_name(3), "X0_0_0");
        assert_eq!(p.x_var(2, 1, 1), Some(14));
    }

    #[test]
    fn zero_weight_copies_are_eliminated() {
        let w = WeightVector::<f64>::top_r(1, 3).unwrap();
        let inst = gen_random(5, 4, w, CostMode::NonMetric, 3).unwrap();
        let p = build_lp(&inst).unwrap();
        assert_eq!(p.num_variables(), 5 + 4 * 5);
        assert_eq!(p.kept_copies(), &[0]);
        let sol = solve_lp(&p).unwrap();
        assert!(p.max_residual(&sol.y, sol.x.as_ref().unwrap()) <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn variable_limit() {
        let w = WeightVector::<f64>::harmonic(2).unwrap();
        let inst = Instance::new(3, vec![vec![1.0, 2.0, 3.0]; 4], w, None).unwrap();
        assert!(build_lp_with_limit(&inst, 10).unwrap_err().is_limit());
    }

    #[test]
    fn free_facility() {
        let w = WeightVector::<f64>::harmonic(1).unwrap();
        let inst = Instance::new(3, vec![vec![2.0, 0.0, 1.0], vec![5.0, 0.0, 3.0]], w, None).unwrap();
        let sol = solve_instance(&inst).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integral_points_match_owa_cost() {
        for seed in 0..20 {
            let w = WeightVector::<f64>::harmonic(2).unwrap();
            let inst = gen_random(4, 2, w, CostMode::Metric, seed).unwrap();
            let p = build_lp(&inst).unwrap();
            let (y, x) = p.greedy_point(&[0, 1]);
            assert!(p.max_residual(&y, &x) <= 1e-12);
            let com = inst.committee(vec![0, 1]).unwrap();
            assert!((p.objective_at(&x) - inst.total_cost(&com).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn pinned_openings_match_waterfill() {
        let w = WeightVector::custom(vec![1.0, 0.5]).unwrap();
        let inst = Instance::new(3, vec![vec![1.0, 2.0, 3.0]], w, None).unwrap();
        let mut p = build_lp(&inst).unwrap();
        p.pin_openings(&[0.5, 0.5, 1.0]).unwrap();
        let sol = solve_lp(&p).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn lp_lower_bounds_exact_and_agrees_with_waterfill(
            m in 2usize..6, n in 1usize..5, k_raw in 1usize..4, seed in any::<u64>(), metric in any::<bool>(),
        ) {
            let k = k_raw.min(m);
            let w = WeightVector::<f64>::harmonic(k).unwrap();
            let mode = if metric { CostMode::Metric } else { CostMode::NonMetric };
            let inst = gen_random(m, n, w, mode, seed).unwrap();
            let p = build_lp(&inst).unwrap();
            let sol = solve_lp(&p).unwrap();
            let x = sol.x.as_ref().unwrap();
            prop_assert!(p.max_residual(&sol.y, x) <= RESIDUAL_TOLERANCE);
            let sum: f64 = sol.per_client_lp_cost.iter().sum();
            prop_assert!((sum - sol.objective).abs() <= 1e-9);
            let (_, opt) = exact_solve(&inst).unwrap();
            prop_assert!(sol.objective <= opt + 1e-9);
            let wf = waterfill_per_client(&inst, &sol.y).unwrap();
            for (a, b) in wf.iter().zip(&sol.per_client_lp_cost) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }

        #[test]
        fn waterfill_is_midpoint_convex(m in 2usize..7, seed in any::<u64>(), a in 0.0f64..1.0) {
            let k = 2.min(m);
            let w = WeightVector::<f64>::harmonic(k).unwrap();
            let inst = gen_random(m, 1, w, CostMode::NonMetric, seed).unwrap();
            let y1: Vec<f64> = (0..m).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
            let y2 = vec![k as f64 / m as f64; m];
            let mid: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + (1.0 - a) * q).collect();
            let f = |y: &[f64]| waterfill_client_cost(&inst, y, 0).unwrap();
            prop_assert!(f(&mid) <= a * f(&y1) + (1.0 - a) * f(&y2) + 1e-9);
        }
    }
}
