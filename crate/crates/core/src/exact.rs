//! Brute-force optima by committee enumeration.
//!
//! Committees are visited in lexicographic order by a depth-first walk that
//! keeps, for every client, the sorted costs of the facilities chosen so far
//! (insertion into a length-k buffer). The first committee attaining the
//! minimum wins, so ties go to the lexicographically smallest index tuple.
//! With `parallel` the walk is split on the first chosen facility and the
//! partial minima are merged in index order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{cmp_scalar, Committee, Instance};
use crate::reduce::FtInstance;
use crate::scalar::Scalar;

pub const DEFAULT_COMMITTEE_LIMIT: u128 = 2_000_000;

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    pub max_committees: u128,
    pub parallel: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            max_committees: DEFAULT_COMMITTEE_LIMIT,
            parallel: false,
        }
    }
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_limit(m: usize, k: usize, limit: u128) -> Result<()> {
    let count = binomial(m, k);
    if count > limit {
        return Err(Error::CapacityExceeded {
            what: "committee enumeration",
            required: count,
            limit,
        });
    }
    Ok(())
}

/// Evaluates a committee from the per-client sorted buffers.
trait LeafCost<S> {
    fn leaf(&self, buffers: &[Vec<S>]) -> S;
}

struct OwaLeaf<'a, S>(&'a [S]);

impl<S: Scalar> LeafCost<S> for OwaLeaf<'_, S> {
    fn leaf(&self, buffers: &[Vec<S>]) -> S {
        buffers
            .iter()
            .fold(S::zero(), |acc, buf| acc + crate::model::dot(self.0, buf))
    }
}

struct FtLeaf<'a> {
    requirement: &'a [usize],
    multiplicity: &'a [BigRational],
}

impl LeafCost<BigRational> for FtLeaf<'_> {
    fn leaf(&self, buffers: &[Vec<BigRational>]) -> BigRational {
        let mut total = BigRational::zero();
        for ((buf, &r), mult) in buffers.iter().zip(self.requirement).zip(self.multiplicity) {
            let s = buf[..r].iter().fold(BigRational::zero(), |a, c| a + c);
            total += s * mult;
        }
        total
    }
}

struct Walk<'a, S, L> {
    costs: &'a [Vec<S>],
    m: usize,
    k: usize,
    leaf: &'a L,
    chosen: Vec<usize>,
    buffers: Vec<Vec<S>>,
    best: Option<(Vec<usize>, S)>,
}

impl<S: Scalar, L: LeafCost<S>> Walk<'_, S, L> {
    fn push(&mut self, facility: usize) {
        self.chosen.push(facility);
        for (buf, row) in self.buffers.iter_mut().zip(self.costs) {
            let c = &row[facility];
            // Stable by facility index: equal costs go after existing ones.
            let pos = buf.partition_point(|x| cmp_scalar(x, c) != std::cmp::Ordering::Greater);
            buf.insert(pos, c.clone());
        }
    }

    fn pop(&mut self) {
        let facility = self.chosen.pop().expect("non-empty");
        for (buf, row) in self.buffers.iter_mut().zip(self.costs) {
            let c = &row[facility];
            let pos = buf
                .iter()
                .rposition(|x| cmp_scalar(x, c) == std::cmp::Ordering::Equal)
                .expect("cost present");
            buf.remove(pos);
        }
    }

    fn run(&mut self, start: usize) {
        if self.chosen.len() == self.k {
            let value = self.leaf.leaf(&self.buffers);
            let better = match &self.best {
                None => true,
                Some((_, b)) => value < *b,
            };
            if better {
                self.best = Some((self.chosen.clone(), value));
            }
            return;
        }
        let remaining = self.k - self.chosen.len();
        for f in start..=(self.m - remaining) {
            self.push(f);
            self.run(f + 1);
            self.pop();
        }
    }
}

fn enumerate<S, L>(costs: &[Vec<S>], m: usize, k: usize, leaf: &L, parallel: bool) -> (Vec<usize>, S)
where
    S: Scalar,
    L: LeafCost<S> + Sync,
{
    let walk_from = |first: Option<usize>| {
        let mut w = Walk {
            costs,
            m,
            k,
            leaf,
            chosen: Vec::with_capacity(k),
            buffers: vec![Vec::with_capacity(k); costs.len()],
            best: None,
        };
        match first {
            None => w.run(0),
            Some(f) => {
                w.push(f);
                w.run(f + 1);
            }
        }
        w.best
    };
    let best = if parallel && k >= 1 {
        let partial: Vec<_> = (0..=(m - k)).into_par_iter().map(|f| walk_from(Some(f))).collect();
        partial.into_iter().flatten().fold(None, |acc: Option<(Vec<usize>, S)>, cand| match acc {
            Some(a) if a.1 <= cand.1 => Some(a),
            _ => Some(cand),
        })
    } else {
        walk_from(None)
    };
    best.expect("at least one committee")
}

/// Optimal committee and value of an OWA-k-median instance.
pub fn exact_solve<S: Scalar>(inst: &Instance<S>) -> Result<(Committee, S)> {
    exact_solve_with(inst, &ExactOptions::default())
}

pub fn exact_solve_with<S: Scalar>(inst: &Instance<S>, opts: &ExactOptions) -> Result<(Committee, S)> {
    let (m, k) = (inst.num_facilities(), inst.k());
    check_limit(m, k, opts.max_committees)?;
    let leaf = OwaLeaf(inst.weights().values());
    let (idx, value) = enumerate(inst.costs(), m, k, &leaf, opts.parallel);
    Ok((Committee::new(idx, m, k)?, value))
}

/// Optimal committee of a fault-tolerant k-median instance with
/// multiplicities: minimises `sum_j m_j * (sum of the r_j smallest committee costs)`.
pub fn exact_ft_solve(ft: &FtInstance) -> Result<(Committee, BigRational)> {
    exact_ft_solve_with(ft, &ExactOptions::default())
}

pub fn exact_ft_solve_with(ft: &FtInstance, opts: &ExactOptions) -> Result<(Committee, BigRational)> {
    let (m, k) = (ft.num_facilities(), ft.k());
    check_limit(m, k, opts.max_committees)?;
    let costs: Vec<Vec<BigRational>> = ft.clients().iter().map(|c| c.costs.clone()).collect();
    let requirement: Vec<usize> = ft.clients().iter().map(|c| c.requirement).collect();
    let multiplicity: Vec<BigRational> = ft
        .clients()
        .iter()
        .map(|c| BigRational::from_integer(BigInt::from(c.multiplicity.clone())))
        .collect();
    let leaf = FtLeaf {
        requirement: &requirement,
        multiplicity: &multiplicity,
    };
    let (idx, value) = enumerate(&costs, m, k, &leaf, opts.parallel);
    Ok((Committee::new(idx, m, k)?, value))
}
