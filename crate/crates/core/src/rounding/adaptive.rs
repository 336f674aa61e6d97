//! DR with pairings chosen on the fly from the current values.
//!
//! Any policy keeps the marginals, the sum and negative correlation, but an
//! adaptive one can break binary negative association. The canonical witness
//! is [`adaptive_adversary_distribution`]: eight variables at 1/2; pair
//! (0,4) and (1,5); if 0 and 1 rounded the same way pair (2,6),(3,7),
//! otherwise (2,3),(6,7).

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use super::distribution::{ExactDistribution, MonotoneFn, MAX_ENUM_VARS};
use super::{dr_step, dr_step_branches, exact_openings, is_fractional, RoundingOutcome, TraceRecord};
use crate::error::{Error, Result};

/// Chooses the next pair of fractional variables, or `None` when done.
pub trait PairingPolicy {
    fn next_pair(&self, values: &[BigRational]) -> Option<(usize, usize)>;
}

impl<F: Fn(&[BigRational]) -> Option<(usize, usize)>> PairingPolicy for F {
    fn next_pair(&self, values: &[BigRational]) -> Option<(usize, usize)> {
        self(values)
    }
}

fn validated_pair(values: &[BigRational], pair: (usize, usize)) -> Result<(usize, usize)> {
    let (i, j) = pair;
    if i == j || i >= values.len() || j >= values.len() {
        return Err(Error::Domain(format!("policy chose invalid pair ({i}, {j})")));
    }
    Ok(pair)
}

fn finish(values: &[BigRational]) -> Result<Vec<bool>> {
    if values.iter().any(is_fractional) {
        return Err(Error::Domain("policy stopped with fractional values left".into()));
    }
    Ok(values.iter().map(|v| v.is_one()).collect())
}

pub fn round_with_policy<R: Rng + ?Sized>(
    y: &[BigRational],
    policy: &impl PairingPolicy,
    rng: &mut R,
) -> Result<RoundingOutcome> {
    let (mut values, _) = exact_openings(y)?;
    let mut trace = Vec::new();
    while let Some(pair) = policy.next_pair(&values) {
        let (i, j) = validated_pair(&values, pair)?;
        let step = dr_step(&values[i], &values[j], rng)?;
        trace.push(TraceRecord {
            pair: (i, j),
            probability: crate::scalar::Scalar::as_f64(&step.probability),
            settled: step.settled,
        });
        values[i] = step.first;
        values[j] = step.second;
    }
    Ok(RoundingOutcome {
        bits: finish(&values)?,
        trace: Some(trace),
    })
}

/// Exact law of DR driven by `policy`, by exhaustive branching.
pub fn enumerate_with_policy(y: &[BigRational], policy: &impl PairingPolicy) -> Result<ExactDistribution> {
    if y.len() > MAX_ENUM_VARS {
        return Err(Error::CapacityExceeded {
            what: "enumerated variables",
            required: y.len() as u128,
            limit: MAX_ENUM_VARS as u128,
        });
    }
    let (values, _) = exact_openings(y)?;
    let mut law: BTreeMap<u32, BigRational> = BTreeMap::new();
    let mut stack = vec![(values, BigRational::one())];
    while let Some((values, prob)) = stack.pop() {
        match policy.next_pair(&values) {
            None => {
                let mask = finish(&values)?
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
                *law.entry(mask).or_insert_with(BigRational::zero) += prob;
            }
            Some(pair) => {
                let (i, j) = validated_pair(&values, pair)?;
                for br in dr_step_branches(&values[i], &values[j])? {
                    let mut next = values.clone();
                    next[i] = br.first;
                    next[j] = br.second;
                    stack.push((next, &prob * &br.probability));
                }
            }
        }
    }
    Ok(ExactDistribution::from_masks(y.len(), law))
}

/// Zero-based witness sets: `S = {1, 2, 3}`, `Q = {4}`.
pub const ADVERSARY_S: [usize; 3] = [1, 2, 3];
pub const ADVERSARY_Q: [usize; 1] = [4];

/// `f = [Y_1 + Y_2 + Y_3 >= 2]` and `g = Y_4`.
pub fn adversary_witness() -> (MonotoneFn, MonotoneFn) {
    (MonotoneFn::at_least(3, 2), MonotoneFn::at_least(1, 1))
}

fn adversary_policy(values: &[BigRational]) -> Option<(usize, usize)> {
    let frac = |i: usize| is_fractional(&values[i]);
    let plan: [(usize, usize); 2] = if frac(0) || frac(1) {
        [(0, 4), (1, 5)]
    } else if values[0] == values[1] {
        [(2, 6), (3, 7)]
    } else {
        [(2, 3), (6, 7)]
    };
    plan.into_iter().find(|&(i, j)| frac(i) && frac(j))
}

fn adversary_start() -> Vec<BigRational> {
    vec![BigRational::new(1.into(), 2.into()); 8]
}

pub fn adaptive_adversary_round<R: Rng + ?Sized>(rng: &mut R) -> Result<RoundingOutcome> {
    round_with_policy(&adversary_start(), &adversary_policy, rng)
}

pub fn adaptive_adversary_distribution() -> ExactDistribution {
    enumerate_with_policy(&adversary_start(), &adversary_policy).expect("fixed instance")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn alpha(mask: u32) -> bool {
        ADVERSARY_S.iter().filter(|&&i| mask >> i & 1 == 1).count() >= 2
    }

    fn beta(mask: u32) -> bool {
        mask >> 4 & 1 == 1
    }

    #[test]
    fn adversary_probabilities() {
        let d = adaptive_adversary_distribution();
        assert_eq!(d.prob(alpha), q(1, 2));
        assert_eq!(d.prob(beta), q(1, 2));
        assert_eq!(d.prob(|m| alpha(m) && beta(m)), q(5, 16));
        assert_eq!(d.marginals(), vec![q(1, 2); 8]);
        assert!(d.support_sums_to(4));
    }

    #[test]
    fn adversary_breaks_bna_not_nc() {
        let d = adaptive_adversary_distribution();
        let (f, g) = adversary_witness();
        assert!(!d.check_bna(&ADVERSARY_S, &ADVERSARY_Q, &f, &g).unwrap());
        assert!(d.nc_violations().is_empty());
    }

    #[test]
    fn sampled_adversary_keeps_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let out = adaptive_adversary_round(&mut rng).unwrap();
            assert_eq!(out.count_open(), 4);
            assert_eq!(out.trace.unwrap().len(), 4);
        }
    }

    #[test]
    fn bad_policies_are_reported() {
        let y = vec![q(1, 2), q(1, 2)];
        let stop = |_: &[BigRational]| None;
        assert!(enumerate_with_policy(&y, &stop).is_err());
        let same = |_: &[BigRational]| Some((0, 0));
        assert!(enumerate_with_policy(&y, &same).is_err());
    }
}
