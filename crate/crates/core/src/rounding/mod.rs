//! Dependent rounding (DR) of a fractional opening vector.
//!
//! A DR step takes two fractional values `a, b` and moves mass between them so
//! that the sum is unchanged, at least one becomes integral, and each keeps
//! its expectation:
//!
//! * `a + b < 1`: `a -> 0, b -> a+b` with probability `b/(a+b)`, otherwise
//!   `a -> a+b, b -> 0`;
//! * `a + b >= 1`: `a -> 1, b -> a+b-1` with probability `(1-b)/(2-a-b)`,
//!   otherwise `a -> a+b-1, b -> 1`.
//!
//! [`round_tree`] schedules the steps with a fixed [`TournamentTree`]: sibling
//! survivors play each other, the still-fractional one moves up, and an empty
//! slot (both sides settled) lets the other side through untouched. Pairing
//! by a fixed tree yields binary negative association; adaptive pairing
//! ([`adaptive`]) need not.
//!
//! All pairing arithmetic is exact ([`BigRational`]); float inputs are first
//! snapped with [`snap_openings`].

pub mod adaptive;
pub mod distribution;
pub mod tree;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{limit_denominator, Scalar};

pub use adaptive::{
    adaptive_adversary_distribution, adaptive_adversary_round, enumerate_with_policy, round_with_policy,
    PairingPolicy,
};
pub use distribution::{enumerate_distribution, BnaReport, ExactDistribution, MonotoneFn};
pub use tree::{TournamentTree, TreeNode, TreeShape};

/// Largest denominator used when snapping float openings to rationals.
pub const SNAP_DENOMINATOR: u64 = 1_000_000;
/// Tolerance on the integrality of `sum(y)` for float inputs.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Which of the two paired variables became integral in a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Settled {
    First,
    Second,
}

/// One of the two possible results of a DR step, with its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct StepBranch<S> {
    pub first: S,
    pub second: S,
    pub settled: Settled,
    pub probability: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub pair: (usize, usize),
    pub probability: f64,
    pub settled: Settled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingOutcome {
    pub bits: Vec<bool>,
    pub trace: Option<Vec<TraceRecord>>,
}

impl RoundingOutcome {
    pub fn count_open(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn open_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

pub(crate) fn is_fractional<S: Scalar>(x: &S) -> bool {
    *x > S::zero() && *x < S::one()
}

/// Both branches of a DR step on `(a, b)`. The first branch settles `a`.
pub fn dr_step_branches<S: Scalar>(a: &S, b: &S) -> Result<[StepBranch<S>; 2]> {
    if !is_fractional(a) || !is_fractional(b) {
        return Err(Error::NotFractional(format!("{a:?}"), format!("{b:?}")));
    }
    let sum = a.clone() + b.clone();
    let one = S::one();
    Ok(if sum < one {
        let p_first = b.clone() / sum.clone();
        [
            StepBranch {
                first: S::zero(),
                second: sum.clone(),
                settled: Settled::First,
                probability: p_first.clone(),
            },
            StepBranch {
                first: sum,
                second: S::zero(),
                settled: Settled::Second,
                probability: one - p_first,
            },
        ]
    } else {
        let denom = one.clone() + one.clone() - sum.clone();
        let p_first = (one.clone() - b.clone()) / denom;
        let rest = sum - one.clone();
        [
            StepBranch {
                first: one.clone(),
                second: rest.clone(),
                settled: Settled::First,
                probability: p_first.clone(),
            },
            StepBranch {
                first: rest,
                second: one.clone(),
                settled: Settled::Second,
                probability: one - p_first,
            },
        ]
    })
}

/// Samples one DR step.
pub fn dr_step<S: Scalar, R: Rng + ?Sized>(a: &S, b: &S, rng: &mut R) -> Result<StepBranch<S>> {
    let [first, second] = dr_step_branches(a, b)?;
    let u: f64 = rng.gen();
    Ok(if u < first.probability.as_f64() { first } else { second })
}

fn integral_sum(values: &[BigRational]) -> Result<usize> {
    let sum: BigRational = values.iter().fold(BigRational::zero(), |a, v| a + v);
    if !sum.is_integer() {
        return Err(Error::NonIntegralSum {
            sum: sum.to_string(),
            expected: sum.round().to_string(),
        });
    }
    sum.to_integer()
        .to_usize()
        .ok_or_else(|| Error::Domain("negative opening sum".into()))
}

/// Snaps float openings to the nearest rationals with denominator at most
/// [`SNAP_DENOMINATOR`], then rebalances so the vector sums exactly to the
/// nearest integer `k` by adjusting the largest fractional entries.
pub fn snap_openings(y: &[f64]) -> Result<(Vec<BigRational>, usize)> {
    let mut sum = 0.0;
    for (i, &v) in y.iter().enumerate() {
        if !v.is_finite() || !(-SUM_TOLERANCE..=1.0 + SUM_TOLERANCE).contains(&v) {
            return Err(Error::Domain(format!("opening y[{i}] = {v} outside [0, 1]")));
        }
        sum += v;
    }
    let k = sum.round();
    if (sum - k).abs() > SUM_TOLERANCE {
        return Err(Error::NonIntegralSum {
            sum: sum.to_string(),
            expected: k.to_string(),
        });
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut snapped: Vec<BigRational> = y
        .iter()
        .map(|&v| {
            let r = limit_denominator(v.clamp(0.0, 1.0), SNAP_DENOMINATOR).expect("finite");
            r.clamp(zero.clone(), one.clone())
        })
        .collect();
    let target = BigRational::from_integer(BigInt::from(k as u64));
    let mut diff = &target - snapped.iter().fold(BigRational::zero(), |a, v| a + v);
    if !diff.is_zero() {
        let mut order: Vec<usize> = (0..snapped.len()).collect();
        // Largest fractional entries first, then the integral ones.
        order.sort_by(|&i, &j| {
            let fi = is_fractional(&snapped[i]);
            let fj = is_fractional(&snapped[j]);
            fj.cmp(&fi).then(snapped[j].cmp(&snapped[i])).then(i.cmp(&j))
        });
        for i in order {
            if diff.is_zero() {
                break;
            }
            let moved = (&snapped[i] + &diff).clamp(zero.clone(), one.clone());
            diff -= &moved - &snapped[i];
            snapped[i] = moved;
        }
    }
    debug_assert!(diff.is_zero());
    Ok((snapped, k as usize))
}

/// Exact opening vector for any scalar input: exact types must sum to an
/// integer exactly, floats are snapped.
pub fn exact_openings<S: Scalar>(y: &[S]) -> Result<(Vec<BigRational>, usize)> {
    if S::EXACT {
        let values: Vec<BigRational> = y.iter().map(|v| v.to_rational().expect("exact")).collect();
        if values.iter().any(|v| v.is_negative() || *v > BigRational::one()) {
            return Err(Error::Domain("openings must lie in [0, 1]".into()));
        }
        let k = integral_sum(&values)?;
        Ok((values, k))
    } else {
        snap_openings(&y.iter().map(Scalar::as_f64).collect::<Vec<_>>())
    }
}

fn play<R: Rng + ?Sized>(
    node: &TreeNode,
    values: &mut [BigRational],
    rng: &mut R,
    trace: &mut Option<Vec<TraceRecord>>,
) -> Result<Option<usize>> {
    match node {
        TreeNode::Leaf(i) => Ok(is_fractional(&values[*i]).then_some(*i)),
        TreeNode::Pair(kids) => {
            let left = play(&kids[0], values, rng, trace)?;
            let right = play(&kids[1], values, rng, trace)?;
            match (left, right) {
                (None, x) | (x, None) => Ok(x),
                (Some(i), Some(j)) => {
                    let step = dr_step(&values[i], &values[j], rng)?;
                    if let Some(t) = trace.as_mut() {
                        t.push(TraceRecord {
                            pair: (i, j),
                            probability: step.probability.as_f64(),
                            settled: step.settled,
                        });
                    }
                    values[i] = step.first;
                    values[j] = step.second;
                    Ok(match step.settled {
                        Settled::First => is_fractional(&values[j]).then_some(j),
                        Settled::Second => is_fractional(&values[i]).then_some(i),
                    })
                }
            }
        }
    }
}

fn round_exact<R: Rng + ?Sized>(
    mut values: Vec<BigRational>,
    tree: &TournamentTree,
    rng: &mut R,
    record: bool,
) -> Result<RoundingOutcome> {
    if values.len() != tree.num_leaves() {
        return Err(Error::Domain(format!(
            "tree has {} leaves, vector has {} entries",
            tree.num_leaves(),
            values.len()
        )));
    }
    let mut trace = record.then(Vec::new);
    let survivor = play(tree.root(), &mut values, rng, &mut trace)?;
    debug_assert!(survivor.is_none(), "integral sum leaves no fractional survivor");
    let bits = values.iter().map(|v| v.is_one()).collect();
    Ok(RoundingOutcome { bits, trace })
}

/// Rounds `y` (summing to an integer) to a 0/1 vector with the same sum by
/// tournament-tree DR.
pub fn round_tree<S: Scalar, R: Rng + ?Sized>(y: &[S], tree: &TournamentTree, rng: &mut R) -> Result<RoundingOutcome> {
    let (values, _) = exact_openings(y)?;
    round_exact(values, tree, rng, false)
}

/// As [`round_tree`], also recording every step.
pub fn round_tree_traced<S: Scalar, R: Rng + ?Sized>(
    y: &[S],
    tree: &TournamentTree,
    rng: &mut R,
) -> Result<RoundingOutcome> {
    let (values, _) = exact_openings(y)?;
    round_exact(values, tree, rng, true)
}

/// Rounds an already-exact vector; skips re-validation of the sum.
pub(crate) fn round_snapped<R: Rng + ?Sized>(
    values: &[BigRational],
    tree: &TournamentTree,
    rng: &mut R,
) -> Result<RoundingOutcome> {
    round_exact(values.to_vec(), tree, rng, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn step_probabilities_from_worked_examples() {
        let [a, b] = dr_step_branches(&q(2, 5), &q(4, 5)).unwrap();
        assert_eq!((a.first.clone(), a.second.clone(), a.probability.clone()), (q(1, 1), q(1, 5), q(1, 4)));
        assert_eq!((b.first, b.second, b.probability), (q(1, 5), q(1, 1), q(3, 4)));

        let [a, b] = dr_step_branches(&q(3, 10), &q(1, 5)).unwrap();
        assert_eq!((a.first.clone(), a.second.clone(), a.probability.clone()), (q(0, 1), q(1, 2), q(2, 5)));
        assert_eq!((b.first, b.second, b.probability), (q(1, 2), q(0, 1), q(3, 5)));

        let [a, b] = dr_step_branches(&q(1, 2), &q(1, 2)).unwrap();
        assert_eq!((a.first, a.second, a.probability), (q(1, 1), q(0, 1), q(1, 2)));
        assert_eq!((b.first, b.second, b.probability), (q(0, 1), q(1, 1), q(1, 2)));
    }

    #[test]
    fn step_float_examples() {
        let [a, _] = dr_step_branches(&0.4f64, &0.8).unwrap();
        assert!((a.probability - 0.25).abs() < 1e-12);
        let [a, _] = dr_step_branches(&0.3f64, &0.2).unwrap();
        assert!((a.probability - 0.4).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_integral_input() {
        assert!(dr_step_branches(&0.0f64, &0.5).is_err());
        assert!(dr_step_branches(&0.5f64, &1.0).is_err());
    }

    #[test]
    fn step_preserves_sum_and_expectation_exactly() {
        for (a, b) in [(q(1, 3), q(1, 7)), (q(5, 6), q(2, 3)), (q(9, 10), q(1, 10))] {
            let br = dr_step_branches(&a, &b).unwrap();
            let mut ea = BigRational::zero();
            let mut eb = BigRational::zero();
            for x in &br {
                assert_eq!(&x.first + &x.second, &a + &b);
                assert!(!is_fractional(&x.first) || !is_fractional(&x.second));
                ea += &x.probability * &x.first;
                eb += &x.probability * &x.second;
            }
            assert_eq!(ea, a);
            assert_eq!(eb, b);
        }
    }

    #[test]
    fn sampled_step_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| dr_step(&0.4f64, &0.8, &mut rng).unwrap().settled == Settled::First)
            .count();
        let p = hits as f64 / n as f64;
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((p - 0.25).abs() < 4.0 * sigma);
    }

    #[test]
    fn integral_vector_unchanged() {
        let y = [1.0, 0.0, 1.0, 1.0, 0.0];
        let tree = TournamentTree::balanced(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let out = round_tree_traced(&y, &tree, &mut rng).unwrap();
            assert_eq!(out.bits, vec![true, false, true, true, false]);
            assert!(out.trace.unwrap().is_empty());
        }
    }

    #[test]
    fn rejects_non_integral_sum() {
        let tree = TournamentTree::balanced(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            round_tree(&[0.5, 0.4], &tree, &mut rng),
            Err(Error::NonIntegralSum { .. })
        ));
        assert!(round_tree(&[q(1, 2), q(1, 3)], &tree, &mut rng).is_err());
        let wrong = TournamentTree::balanced(3).unwrap();
        assert!(round_tree(&[0.5, 0.5], &wrong, &mut rng).is_err());
    }

    #[test]
    fn snapping_rebalances_to_exact_sum() {
        let y = [1.0 / 3.0 + 4e-10, 1.0 / 3.0, 1.0 / 3.0, 0.9999999999];
        let (snapped, k) = snap_openings(&y).unwrap();
        assert_eq!(k, 2);
        let sum = snapped.iter().fold(BigRational::zero(), |a, v| a + v);
        assert_eq!(sum, q(2, 1));
        assert!(snapped.iter().all(|v| v.denom() <= &BigInt::from(SNAP_DENOMINATOR)));
        assert!(snap_openings(&[0.5, 0.6]).is_err());
        assert!(snap_openings(&[1.5, 0.5]).is_err());

        // Awkward floats whose nearest rationals do not sum to k.
        let y = [0.1234567, 0.3765433, 0.5];
        let (snapped, k) = snap_openings(&y).unwrap();
        assert_eq!(k, 1);
        assert_eq!(snapped.iter().fold(BigRational::zero(), |a, v| a + v), q(1, 1));
    }

    #[test]
    fn sum_preserved_every_draw() {
        let y = [0.7, 0.5, 0.5, 0.5, 0.2, 0.6];
        let tree = TournamentTree::balanced(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            assert_eq!(round_tree(&y, &tree, &mut rng).unwrap().count_open(), 3);
        }
    }

    #[test]
    fn worked_run_can_be_replayed() {
        // Tree ((0,1),(2,3)),(4,5); with the right coin flips the trace is
        // (0,1) settles 1, (2,3) settles both, (4,5) settles 4, (0,5) settles 0.
        let y = [q(7, 10), q(1, 2), q(1, 2), q(1, 2), q(1, 5), q(3, 5)];
        let tree = TournamentTree::from_json("[[[0,1],[2,3]],[4,5]]").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let found = (0..5000).any(|_| {
            let out = round_tree_traced(&y, &tree, &mut rng).unwrap();
            out.bits == vec![false, true, true, false, false, true]
        });
        assert!(found);
    }
}
