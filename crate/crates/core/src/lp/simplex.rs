//! Dense revised simplex with bounded variables.
//!
//! Rows are `a·x {<=, =, >=} b`; every column has a finite lower bound and an
//! upper bound that may be infinite. Each row gets a slack; rows whose slack
//! cannot start feasible get an artificial and a phase-one objective. The
//! basis inverse is kept explicitly and refreshed by Gauss-Jordan
//! reinversion at a fixed pivot interval.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_interval: usize,
    pub max_rows: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-10,
            refactor_interval: 50,
            max_rows: 3000,
        }
    }
}

/// Column-major sparse problem `min cost·x`.
pub struct Problem<'a> {
    pub columns: &'a [Vec<(usize, f64)>],
    pub cost: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub kinds: &'a [RowKind],
    pub rhs: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic column per row; columns past the structural ones are slacks
    /// (`n + row`) and artificials (`n + rows + row`).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct State<'a> {
    p: &'a Problem<'a>,
    n: usize,
    rows: usize,
    slack_sign: Vec<f64>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    cost: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> State<'a> {
    fn column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(r, a) in &self.p.columns[j] {
                f(r, a);
            }
        } else if j < self.n + self.rows {
            f(j - self.n, self.slack_sign[j - self.n]);
        } else {
            let r = j - self.n - self.rows;
            f(r, self.art_sign[r]);
        }
    }

    fn total_columns(&self) -> usize {
        self.n + 2 * self.rows
    }

    fn duals(&self) -> Vec<f64> {
        let r = self.rows;
        let mut pi = vec![0.0; r];
        for (i, &b) in self.basis.iter().enumerate() {
            let c = self.cost[b];
            if c != 0.0 {
                let row = &self.binv[i * r..(i + 1) * r];
                for (p, v) in pi.iter_mut().zip(row) {
                    *p += c * v;
                }
            }
        }
        pi
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let r = self.rows;
        let mut alpha = vec![0.0; r];
        self.column(j, |row, a| {
            for (i, out) in alpha.iter_mut().enumerate() {
                *out += a * self.binv[i * r + row];
            }
        });
        alpha
    }

    fn reinvert(&mut self) -> Result<()> {
        let r = self.rows;
        let mut b = vec![0.0; r * r];
        for (pos, &j) in self.basis.iter().enumerate() {
            let mut entries = Vec::new();
            self.column(j, |row, a| entries.push((row, a)));
            for (row, a) in entries {
                b[row * r + pos] = a;
            }
        }
        let mut inv = vec![0.0; r * r];
        for i in 0..r {
            inv[i * r + i] = 1.0;
        }
        for col in 0..r {
            let piv = (col..r)
                .max_by(|&a, &c| b[a * r + col].abs().total_cmp(&b[c * r + col].abs()))
                .expect("non-empty");
            if b[piv * r + col].abs() < 1e-13 {
                return Err(Error::Domain("singular basis during reinversion".into()));
            }
            if piv != col {
                for k in 0..r {
                    b.swap(piv * r + k, col * r + k);
                    inv.swap(piv * r + k, col * r + k);
                }
            }
            let d = b[col * r + col];
            for k in 0..r {
                b[col * r + k] /= d;
                inv[col * r + k] /= d;
            }
            for i in 0..r {
                let f = b[i * r + col];
                if i != col && f != 0.0 {
                    for k in 0..r {
                        b[i * r + k] -= f * b[col * r + k];
                        inv[i * r + k] -= f * inv[col * r + k];
                    }
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    /// Recomputes basic values from the nonbasic ones.
    fn recompute_primal(&mut self) {
        let r = self.rows;
        let mut resid = self.p.rhs.to_vec();
        for j in 0..self.total_columns() {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.column(j, |row, a| resid[row] -= a * xj);
            }
        }
        for i in 0..r {
            let row = &self.binv[i * r..(i + 1) * r];
            let v: f64 = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, row: usize, alpha: &[f64]) {
        let r = self.rows;
        let d = alpha[row];
        for k in 0..r {
            self.binv[row * r + k] /= d;
        }
        let pivot_row: Vec<f64> = self.binv[row * r..(row + 1) * r].to_vec();
        for (i, &a) in alpha.iter().enumerate() {
            if i != row && a != 0.0 {
                for (k, &pv) in pivot_row.iter().enumerate() {
                    self.binv[i * r + k] -= a * pv;
                }
            }
        }
    }

    fn run(&mut self, opts: &SimplexOptions) -> Result<()> {
        let r = self.rows;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let pi = self.duals();
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.total_columns() {
                let st = self.status[j];
                if st == Status::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let mut d = self.cost[j];
                self.column(j, |row, a| d -= pi[row] * a);
                let eligible = (st == Status::AtLower && d < -opts.optimality_tol)
                    || (st == Status::AtUpper && d > opts.optimality_tol);
                if eligible {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };
            if self.iterations >= opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }
            self.iterations += 1;

            let alpha = self.ftran(q);
            let sigma = if self.status[q] == Status::AtLower { 1.0 } else { -1.0 };
            let mut t_best = self.up[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                let delta = sigma * a;
                let b = self.basis[i];
                let (limit, to_lower) = if delta > opts.pivot_tol {
                    ((self.x[b] - self.lo[b]) / delta, true)
                } else if delta < -opts.pivot_tol && self.up[b].is_finite() {
                    ((self.up[b] - self.x[b]) / -delta, false)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leave {
                    None => limit <= t_best,
                    Some((li, _)) => {
                        limit < t_best - 1e-12
                            || (limit <= t_best + 1e-12
                                && if bland {
                                    b < self.basis[li]
                                } else {
                                    a.abs() > alpha[li].abs()
                                })
                    }
                };
                if better {
                    t_best = limit;
                    leave = Some((i, to_lower));
                }
            }
            if !t_best.is_finite() {
                return Err(Error::Unbounded);
            }

            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= sigma * a * t_best;
                }
            }
            self.x[q] += sigma * t_best;

            match leave {
                None => {
                    self.status[q] = if sigma > 0.0 { Status::AtUpper } else { Status::AtLower };
                    self.x[q] = if sigma > 0.0 { self.up[q] } else { self.lo[q] };
                }
                Some((row, to_lower)) => {
                    let out = self.basis[row];
                    self.status[out] = if to_lower { Status::AtLower } else { Status::AtUpper };
                    self.x[out] = if to_lower { self.lo[out] } else { self.up[out] };
                    self.status[q] = Status::Basic;
                    self.basis[row] = q;
                    self.pivot(row, &alpha);
                    self.since_refactor += 1;
                }
            }

            if t_best <= opts.feasibility_tol {
                degenerate += 1;
                if degenerate > 10 * r {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            if self.since_refactor >= opts.refactor_interval {
                self.since_refactor = 0;
                if r <= 1000 {
                    self.reinvert()?;
                }
                self.recompute_primal();
            }
        }
    }
}

pub fn solve(p: &Problem<'_>, opts: &SimplexOptions) -> Result<Solution> {
    let n = p.columns.len();
    let rows = p.rhs.len();
    if rows > opts.max_rows {
        return Err(Error::CapacityExceeded {
            what: "simplex rows",
            required: rows as u128,
            limit: opts.max_rows as u128,
        });
    }
    if p.lower.iter().any(|l| !l.is_finite()) {
        return Err(Error::Domain("simplex needs finite lower bounds".into()));
    }

    let mut x: Vec<f64> = p.lower.to_vec();
    let mut resid = p.rhs.to_vec();
    for (j, col) in p.columns.iter().enumerate() {
        for &(row, a) in col {
            resid[row] -= a * x[j];
        }
    }

    let total = n + 2 * rows;
    let mut lo = p.lower.to_vec();
    let mut up = p.upper.to_vec();
    let mut status = vec![Status::AtLower; total];
    let mut slack_sign = vec![1.0; rows];
    let mut art_sign = vec![1.0; rows];
    let mut basis = vec![0; rows];
    let mut binv = vec![0.0; rows * rows];
    let mut phase_one = vec![0.0; total];
    let mut needs_phase_one = false;
    x.resize(total, 0.0);
    lo.resize(total, 0.0);
    up.resize(n, f64::INFINITY);
    for (row, &kind) in p.kinds.iter().enumerate() {
        up.push(if kind == RowKind::Eq { 0.0 } else { f64::INFINITY });
        if kind == RowKind::Ge {
            slack_sign[row] = -1.0;
        }
    }
    up.resize(total, f64::INFINITY);
    for row in 0..rows {
        let v = resid[row];
        let slack = n + row;
        let art = n + rows + row;
        let slack_ok = match p.kinds[row] {
            RowKind::Le => v >= 0.0,
            RowKind::Ge => v <= 0.0,
            RowKind::Eq => false,
        };
        if slack_ok {
            basis[row] = slack;
            status[slack] = Status::Basic;
            x[slack] = v * slack_sign[row];
            binv[row * rows + row] = slack_sign[row];
            // unused artificial stays fixed at zero
            up[art] = 0.0;
        } else {
            art_sign[row] = if v >= 0.0 { 1.0 } else { -1.0 };
            basis[row] = art;
            status[art] = Status::Basic;
            x[art] = v.abs();
            binv[row * rows + row] = art_sign[row];
            phase_one[art] = 1.0;
            needs_phase_one = true;
        }
    }

    let scale = p.cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
    let mut state = State {
        p,
        n,
        rows,
        slack_sign,
        art_sign,
        lo,
        up,
        x,
        status,
        basis,
        binv,
        cost: phase_one,
        iterations: 0,
        since_refactor: 0,
    };

    if needs_phase_one {
        state.run(opts)?;
        state.recompute_primal();
        let infeas: f64 = (n + rows..total).map(|j| state.x[j].max(0.0)).sum();
        let rhs_scale = p.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if infeas > 1e-7 * rhs_scale {
            return Err(Error::Infeasible(infeas));
        }
        for j in n + rows..total {
            state.up[j] = 0.0;
            if state.status[j] != Status::Basic {
                state.status[j] = Status::AtLower;
                state.x[j] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; total];
    for (c, &v) in cost.iter_mut().zip(p.cost) {
        *c = v / scale;
    }
    state.cost = cost;
    state.run(opts)?;
    if rows <= 1000 {
        state.reinvert()?;
    }
    state.recompute_primal();

    let mut xs: Vec<f64> = state.x[..n].to_vec();
    for (j, v) in xs.iter_mut().enumerate() {
        *v = v.clamp(p.lower[j], p.upper[j]);
    }
    let objective = xs.iter().zip(p.cost).map(|(a, c)| a * c).sum();
    Ok(Solution {
        x: xs,
        objective,
        basis: state.basis,
        iterations: state.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cols: Vec<Vec<(usize, f64)>>, cost: Vec<f64>, upper: Vec<f64>, kinds: Vec<RowKind>, rhs: Vec<f64>) -> Result<Solution> {
        let lower = vec![0.0; cols.len()];
        let p = Problem {
            columns: &cols,
            cost: &cost,
            lower: &lower,
            upper: &upper,
            kinds: &kinds,
            rhs: &rhs,
        };
        solve(&p, &SimplexOptions::default())
    }

    #[test]
    fn textbook_maximisation() {
        // max 3a + 5b s.t. a <= 4, 2b <= 12, 3a + 2b <= 18  ->  36 at (2, 6)
        let cols = vec![vec![(0, 1.0), (2, 3.0)], vec![(1, 2.0), (2, 2.0)]];
        let s = run(cols, vec![-3.0, -5.0], vec![f64::INFINITY; 2], vec![RowKind::Le; 3], vec![4.0, 12.0, 18.0]).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows_with_bounds() {
        // min a + 2b + 3c, a + b + c = 2, b + c >= 1, all in [0, 1] -> a = 1, b = 1
        let cols = vec![vec![(0, 1.0)], vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]];
        let s = run(cols, vec![1.0, 2.0, 3.0], vec![1.0; 3], vec![RowKind::Eq, RowKind::Ge], vec![2.0, 1.0]).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let cols = vec![vec![(0, 1.0)]];
        assert!(matches!(
            run(cols.clone(), vec![1.0], vec![1.0], vec![RowKind::Ge], vec![2.0]),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            run(cols, vec![-1.0], vec![f64::INFINITY], vec![RowKind::Ge], vec![1.0]),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn negative_rhs_uses_artificial() {
        // a - b <= -1, min a + b -> b = 1
        let cols = vec![vec![(0, 1.0)], vec![(0, -1.0)]];
        let s = run(cols, vec![1.0, 1.0], vec![f64::INFINITY; 2], vec![RowKind::Le], vec![-1.0]).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn row_limit() {
        let cols = vec![vec![(0, 1.0)]];
        let lower = vec![0.0];
        let upper = vec![1.0];
        let kinds = vec![RowKind::Le; 5];
        let rhs = vec![1.0; 5];
        let cost = vec![1.0];
        let p = Problem {
            columns: &cols,
            cost: &cost,
            lower: &lower,
            upper: &upper,
            kinds: &kinds,
            rhs: &rhs,
        };
        let opts = SimplexOptions {
            max_rows: 4,
            ..Default::default()
        };
        assert!(solve(&p, &opts).unwrap_err().is_limit());
    }
}
