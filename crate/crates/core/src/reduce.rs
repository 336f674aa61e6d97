//! Reduction to fault-tolerant k-median with multiplicities (FT).
//!
//! With rational weights `w_l = p_l / q_l` in lowest terms and
//! `Q = prod_l q_l`, client `j` becomes up to `k` FT clients sharing its cost
//! row: the one with requirement `l < k` has multiplicity
//! `(w_l - w_{l+1}) Q`, the one with requirement `k` has `w_k Q`. Serving a
//! requirement-`r` client costs the sum of its `r` cheapest open facilities,
//! so by telescoping the FT cost of any committee is exactly `Q` times its
//! OWA cost.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{cmp_scalar, Committee, Instance};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct FtClient {
    pub costs: Vec<BigRational>,
    /// Number of distinct open facilities the client connects to, in `1..=k`.
    pub requirement: usize,
    pub multiplicity: BigUint,
    /// Index of the OWA client this one came from, if any.
    pub origin: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FtInstance {
    num_facilities: usize,
    k: usize,
    clients: Vec<FtClient>,
    q: BigUint,
}

impl FtInstance {
    pub fn new(num_facilities: usize, k: usize, clients: Vec<FtClient>, q: BigUint) -> Result<Self> {
        if k == 0 || k > num_facilities {
            return Err(Error::InvalidInstance(format!("need 1 <= k <= m, got k = {k}, m = {num_facilities}")));
        }
        for (idx, c) in clients.iter().enumerate() {
            if c.costs.len() != num_facilities {
                return Err(Error::InvalidInstance(format!("FT client {idx} has {} costs", c.costs.len())));
            }
            if c.requirement == 0 || c.requirement > k {
                return Err(Error::InvalidInstance(format!("FT client {idx} has requirement {}", c.requirement)));
            }
            if c.multiplicity.is_zero() {
                return Err(Error::InvalidInstance(format!("FT client {idx} has zero multiplicity")));
            }
            if c.costs.iter().any(Signed::is_negative) {
                return Err(Error::InvalidInstance(format!("FT client {idx} has a negative cost")));
            }
        }
        Ok(Self {
            num_facilities,
            k,
            clients,
            q,
        })
    }

    pub fn num_facilities(&self) -> usize {
        self.num_facilities
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn clients(&self) -> &[FtClient] {
        &self.clients
    }

    /// Scale factor between FT and OWA costs.
    pub fn q(&self) -> &BigUint {
        &self.q
    }
}

fn to_biguint(r: &BigRational) -> Result<BigUint> {
    if !r.is_integer() || r.is_negative() {
        return Err(Error::Domain(format!("multiplicity {r} is not a natural number")));
    }
    Ok(r.to_integer().to_biguint().expect("nonnegative"))
}

pub fn reduce_owa_to_ft<S: Scalar>(inst: &Instance<S>) -> Result<FtInstance> {
    let w = inst.weights().exact().ok_or(Error::NonRationalWeights)?;
    let k = inst.k();
    let q: BigUint = w
        .iter()
        .map(|r| r.denom().to_biguint().expect("positive denominator"))
        .product();
    let q_rat = BigRational::from_integer(BigInt::from(q.clone()));
    let mults: Vec<BigUint> = (0..k)
        .map(|l| {
            let diff = if l + 1 < k { &w[l] - &w[l + 1] } else { w[l].clone() };
            to_biguint(&(diff * &q_rat))
        })
        .collect::<Result<_>>()?;
    let mut clients = Vec::new();
    for (j, row) in inst.costs().iter().enumerate() {
        let costs: Vec<BigRational> = row
            .iter()
            .map(|c| c.to_rational().ok_or_else(|| Error::InvalidInstance(format!("cost of client {j} is not finite"))))
            .collect::<Result<_>>()?;
        for (l, mult) in mults.iter().enumerate() {
            if !mult.is_zero() {
                clients.push(FtClient {
                    costs: costs.clone(),
                    requirement: l + 1,
                    multiplicity: mult.clone(),
                    origin: Some(j),
                });
            }
        }
    }
    FtInstance::new(inst.num_facilities(), k, clients, q)
}

pub fn ft_cost(ft: &FtInstance, com: &Committee) -> Result<BigRational> {
    if com.len() != ft.k || com.indices().iter().any(|&i| i >= ft.num_facilities) {
        return Err(Error::InvalidCommittee(format!("committee {com} does not fit the FT instance")));
    }
    let mut total = BigRational::zero();
    for c in &ft.clients {
        let mut open: Vec<&BigRational> = com.indices().iter().map(|&i| &c.costs[i]).collect();
        open.sort_by(cmp_scalar);
        let served: BigRational = open[..c.requirement].iter().fold(BigRational::zero(), |a, &v| a + v);
        total += served * BigRational::from_integer(BigInt::from(c.multiplicity.clone()));
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub q: BigUint,
    /// Largest `|ft_cost - Q * owa_cost|` over the sampled committees.
    pub max_deviation: BigRational,
    pub violations: usize,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `ft_cost = Q * owa_total_cost` exactly on `samples` random
/// committees drawn with `seed`.
pub fn verify_cost_identity<S: Scalar>(inst: &Instance<S>, samples: usize, seed: u64) -> Result<IdentityReport> {
    let exact = inst.to_exact()?;
    let ft = reduce_owa_to_ft(&exact)?;
    let q = BigRational::from_integer(BigInt::from(ft.q.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k) = (inst.num_facilities(), inst.k());
    let mut report = IdentityReport {
        samples,
        q: ft.q.clone(),
        max_deviation: BigRational::zero(),
        violations: 0,
    };
    for _ in 0..samples {
        let com = Committee::new(sample(&mut rng, m, k).into_vec(), m, k)?;
        let lhs = ft_cost(&ft, &com)?;
        let rhs = exact.total_cost(&com)? * &q;
        let dev = (lhs - rhs).abs();
        if !dev.is_zero() {
            report.violations += 1;
        }
        if dev > report.max_deviation {
            report.max_deviation = dev;
        }
    }
    Ok(report)
}

/// Total multiplicity of the FT clients coming from OWA client `j`.
pub fn multiplicity_of_origin(ft: &FtInstance, j: usize) -> BigUint {
    ft.clients
        .iter()
        .filter(|c| c.origin == Some(j))
        .map(|c| c.multiplicity.clone())
        .sum()
}

/// Number of clients an explicit expansion would need, saturating.
pub fn expanded_client_count(ft: &FtInstance) -> u128 {
    ft.clients
        .iter()
        .map(|c| c.multiplicity.to_u128().unwrap_or(u128::MAX))
        .fold(0u128, |a, b| a.saturating_add(b))
}
