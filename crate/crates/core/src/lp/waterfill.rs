//! Closed-form optimal assignment for a fixed opening vector.
//!
//! Sort the facilities by cost to the client and lay their openings end to
//! end on `[0, k]`; copy `l` (1-based) is served by the mass lying in
//! `[l-1, l]`. Since weights are non-increasing this is an optimal `x`.

use crate::error::{Error, Result};
use crate::model::{cmp_scalar, Instance};
use crate::scalar::Scalar;

/// Absolute tolerance on `sum(y) = k` and on `y` lying in `[0, 1]` for
/// inexact scalars.
pub const OPENING_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_openings<S: Scalar>(y: &[S], m: usize, k: usize) -> Result<()> {
    if y.len() != m {
        return Err(Error::Domain(format!("opening vector has {} entries, expected {m}", y.len())));
    }
    let tol = if S::EXACT { 0.0 } else { OPENING_TOLERANCE };
    let mut sum = S::zero();
    for (i, v) in y.iter().enumerate() {
        let f = v.as_f64();
        if !v.is_finite_value() || f < -tol || f > 1.0 + tol {
            return Err(Error::Domain(format!("opening y[{i}] = {f} outside [0, 1]")));
        }
        sum = sum + v.clone();
    }
    let ok = if S::EXACT {
        sum == S::from_usize(k)
    } else {
        (sum.as_f64() - k as f64).abs() <= OPENING_TOLERANCE
    };
    if !ok {
        return Err(Error::NonIntegralSum {
            sum: format!("{sum:?}"),
            expected: k.to_string(),
        });
    }
    Ok(())
}

/// Mass `x[l][i]` of facility `i` assigned to copy `l`, as sparse lists.
/// Assumes a validated `y`.
pub(crate) fn waterfill_assignment<S: Scalar>(costs: &[S], y: &[S], copies: usize) -> Vec<Vec<(usize, S)>> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| cmp_scalar(&costs[a], &costs[b]).then(a.cmp(&b)));
    let mut out = vec![Vec::new(); copies];
    let mut copy = 0;
    let mut room = S::one();
    for i in order {
        let mut mass = if y[i] < S::zero() { S::zero() } else { y[i].clone() };
        while copy < copies && mass > S::zero() {
            let take = if mass < room { mass.clone() } else { room.clone() };
            out[copy].push((i, take.clone()));
            mass = mass - take.clone();
            room = room - take;
            if room <= S::zero() {
                copy += 1;
                room = S::one();
            }
        }
        if copy >= copies {
            break;
        }
    }
    out
}

/// Minimum over feasible `x` of client `j`'s LP cost with openings fixed to `y`.
pub fn waterfill_client_cost<S: Scalar>(inst: &Instance<S>, y: &[S], j: usize) -> Result<S> {
    check_openings(y, inst.num_facilities(), inst.k())?;
    if j >= inst.num_clients() {
        return Err(Error::IndexOutOfRange {
            what: "client",
            index: j,
            len: inst.num_clients(),
        });
    }
    Ok(client_cost_unchecked(inst, y, j))
}

fn client_cost_unchecked<S: Scalar>(inst: &Instance<S>, y: &[S], j: usize) -> S {
    let costs = &inst.costs()[j];
    let weights = inst.weights().values();
    waterfill_assignment(costs, y, inst.k())
        .iter()
        .zip(weights)
        .fold(S::zero(), |acc, (copy, w)| {
            let served = copy
                .iter()
                .fold(S::zero(), |a, (i, mass)| a + costs[*i].clone() * mass.clone());
            acc + w.clone() * served
        })
}

pub fn waterfill_per_client<S: Scalar>(inst: &Instance<S>, y: &[S]) -> Result<Vec<S>> {
    check_openings(y, inst.num_facilities(), inst.k())?;
    Ok((0..inst.num_clients()).map(|j| client_cost_unchecked(inst, y, j)).collect())
}

pub fn waterfill_total_cost<S: Scalar>(inst: &Instance<S>, y: &[S]) -> Result<S> {
    Ok(waterfill_per_client(inst, y)?
        .into_iter()
        .fold(S::zero(), |a, b| a + b))
}
