//! Exact laws of rounding processes and certification of their correlation
//! properties: marginals, sum preservation, negative correlation (NC) and
//! binary negative association (BNA).

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::tree::{TournamentTree, TreeNode};
use super::{dr_step_branches, is_fractional, Settled};
use crate::error::{Error, Result};

/// Largest vector length accepted by the enumerators.
pub const MAX_ENUM_VARS: usize = 16;
/// Largest arity for which [`MonotoneFn::new`] verifies monotonicity.
pub const MONOTONE_CHECK_ARITY: usize = 12;

/// Finite law over 0/1 vectors of length `m`; outcome bit `i` is `Y_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    m: usize,
    law: BTreeMap<u32, BigRational>,
}

/// Boolean function on `arity` bits, stored as a truth table indexed by the
/// local bitmask (bit `t` = value of the `t`-th variable).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneFn {
    arity: usize,
    table: Vec<bool>,
}

/// `(S, Q, f table, g table)` of a violated inequality.
pub type BnaViolation = (Vec<usize>, Vec<usize>, Vec<bool>, Vec<bool>);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BnaReport {
    pub pairs: u64,
    pub checks: u64,
    pub violations: Vec<BnaViolation>,
}

fn project(mask: u32, vars: &[usize]) -> usize {
    vars.iter()
        .enumerate()
        .fold(0usize, |acc, (t, &v)| acc | ((((mask >> v) & 1) as usize) << t))
}

fn is_monotone(arity: usize, table: &[bool]) -> bool {
    (0..table.len()).all(|mask| {
        !table[mask] || (0..arity).all(|t| table[mask | (1 << t)])
    })
}

impl MonotoneFn {
    pub fn new(arity: usize, table: Vec<bool>) -> Result<Self> {
        if arity >= usize::BITS as usize || table.len() != 1 << arity {
            return Err(Error::Domain(format!("truth table for arity {arity} has wrong length")));
        }
        if arity <= MONOTONE_CHECK_ARITY && !is_monotone(arity, &table) {
            return Err(Error::NotMonotone);
        }
        Ok(Self { arity, table })
    }

    pub fn from_fn(arity: usize, f: impl Fn(&[bool]) -> bool) -> Result<Self> {
        let table = (0..1usize << arity)
            .map(|mask| {
                let bits: Vec<bool> = (0..arity).map(|t| mask >> t & 1 == 1).collect();
                f(&bits)
            })
            .collect();
        Self::new(arity, table)
    }

    /// `[sum of bits >= threshold]`.
    pub fn at_least(arity: usize, threshold: usize) -> Self {
        let table = (0..1usize << arity)
            .map(|mask| mask.count_ones() as usize >= threshold)
            .collect();
        Self { arity, table }
    }

    pub fn constant(arity: usize, value: bool) -> Self {
        Self {
            arity,
            table: vec![value; 1 << arity],
        }
    }

    /// Every monotone non-decreasing function of `arity` bits, built from
    /// pairs `f0 <= f1` of functions on one bit fewer.
    pub fn all(arity: usize) -> Vec<Self> {
        let mut level: Vec<Vec<bool>> = vec![vec![false], vec![true]];
        for a in 1..=arity {
            let half = 1usize << (a - 1);
            let mut next = Vec::new();
            for f0 in &level {
                for f1 in &level {
                    if f0.iter().zip(f1).all(|(x, y)| !x || *y) {
                        let mut table = Vec::with_capacity(2 * half);
                        table.extend_from_slice(f0);
                        table.extend_from_slice(f1);
                        next.push(table);
                    }
                }
            }
            level = next;
        }
        level.into_iter().map(|table| Self { arity, table }).collect()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, local_mask: usize) -> bool {
        self.table[local_mask]
    }
}

impl ExactDistribution {
    /// Builds a law from `(bits, probability)` pairs, merging repeats.
    /// Probabilities must be nonnegative and sum to one.
    pub fn from_outcomes(m: usize, outcomes: impl IntoIterator<Item = (Vec<bool>, BigRational)>) -> Result<Self> {
        if m > MAX_ENUM_VARS {
            return Err(Error::CapacityExceeded {
                what: "distribution variables",
                required: m as u128,
                limit: MAX_ENUM_VARS as u128,
            });
        }
        let mut law = BTreeMap::new();
        for (bits, p) in outcomes {
            if bits.len() != m || p < BigRational::zero() {
                return Err(Error::Domain("malformed outcome".into()));
            }
            let mask = bits.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
            *law.entry(mask).or_insert_with(BigRational::zero) += p;
        }
        let dist = Self { m, law };
        if !dist.total().is_one() {
            return Err(Error::Domain(format!("probabilities sum to {}", dist.total())));
        }
        Ok(dist)
    }

    pub(crate) fn from_masks(m: usize, law: BTreeMap<u32, BigRational>) -> Self {
        Self { m, law }
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn support_len(&self) -> usize {
        self.law.len()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (Vec<bool>, &BigRational)> + '_ {
        self.law
            .iter()
            .map(move |(&mask, p)| ((0..self.m).map(|i| mask >> i & 1 == 1).collect(), p))
    }

    pub fn probability_of(&self, bits: &[bool]) -> BigRational {
        let mask = bits.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
        self.law.get(&mask).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.law.values().fold(BigRational::zero(), |a, p| a + p)
    }

    /// `Pr[event]`, the event given on the outcome bitmask.
    pub fn prob(&self, event: impl Fn(u32) -> bool) -> BigRational {
        self.law
            .iter()
            .filter(|(&mask, _)| event(mask))
            .fold(BigRational::zero(), |a, (_, p)| a + p)
    }

    pub fn marginals(&self) -> Vec<BigRational> {
        (0..self.m).map(|i| self.prob(|mask| mask >> i & 1 == 1)).collect()
    }

    /// `true` iff every outcome in the support has exactly `k` ones.
    pub fn support_sums_to(&self, k: usize) -> bool {
        self.law.keys().all(|mask| mask.count_ones() as usize == k)
    }

    fn check_indices(&self, vars: &[usize]) -> Result<()> {
        match vars.iter().find(|&&v| v >= self.m) {
            Some(&v) => Err(Error::IndexOutOfRange {
                what: "variable",
                index: v,
                len: self.m,
            }),
            None => Ok(()),
        }
    }

    /// Negative correlation on `s`: both
    /// `Pr[all Y_i = 1] <= prod Pr[Y_i = 1]` and the all-zeros analogue.
    pub fn check_nc(&self, s: &[usize]) -> bool {
        if s.iter().any(|&v| v >= self.m) {
            return false;
        }
        let marg = self.marginals();
        let ones = self.prob(|mask| s.iter().all(|&i| mask >> i & 1 == 1));
        let zeros = self.prob(|mask| s.iter().all(|&i| mask >> i & 1 == 0));
        let prod_ones = s.iter().fold(BigRational::one(), |a, &i| a * &marg[i]);
        let prod_zeros = s
            .iter()
            .fold(BigRational::one(), |a, &i| a * (BigRational::one() - &marg[i]));
        ones <= prod_ones && zeros <= prod_zeros
    }

    /// Subsets (as bitmasks) violating NC; empty means NC holds everywhere.
    pub fn nc_violations(&self) -> Vec<u32> {
        let marg = self.marginals();
        let mut bad = Vec::new();
        for set in 1u32..(1u32 << self.m) {
            let ones = self.prob(|mask| mask & set == set);
            let zeros = self.prob(|mask| mask & set == 0);
            let (mut po, mut pz) = (BigRational::one(), BigRational::one());
            for (i, p) in marg.iter().enumerate() {
                if set >> i & 1 == 1 {
                    po *= p;
                    pz *= BigRational::one() - p;
                }
            }
            if ones > po || zeros > pz {
                bad.push(set);
            }
        }
        bad
    }

    /// `Pr[f = 1 and g = 1] <= Pr[f = 1] Pr[g = 1]` for monotone `f` on the
    /// variables `s` and `g` on the disjoint variables `q`.
    pub fn check_bna(&self, s: &[usize], q: &[usize], f: &MonotoneFn, g: &MonotoneFn) -> Result<bool> {
        self.check_indices(s)?;
        self.check_indices(q)?;
        if let Some(&v) = s.iter().find(|v| q.contains(v)) {
            return Err(Error::OverlappingSets(v));
        }
        if f.arity() != s.len() || g.arity() != q.len() {
            return Err(Error::Domain("function arity does not match its variable set".into()));
        }
        let pf = self.prob(|mask| f.eval(project(mask, s)));
        let pg = self.prob(|mask| g.eval(project(mask, q)));
        let pfg = self.prob(|mask| f.eval(project(mask, s)) && g.eval(project(mask, q)));
        Ok(pfg <= pf * pg)
    }

    /// Checks BNA for every pair of disjoint non-empty sets with
    /// `|S| + |Q| <= max_total` and every pair of monotone functions on them.
    pub fn certify_bna(&self, max_total: usize) -> BnaReport {
        let denom = self
            .law
            .values()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let numerators: Vec<(u32, BigInt)> = self
            .law
            .iter()
            .map(|(&mask, p)| (mask, p.numer() * (&denom / p.denom())))
            .collect();
        let fits = denom.bits() <= 62;
        if fits {
            let small: Vec<(u32, i128)> = numerators
                .iter()
                .map(|(m, n)| (*m, n.to_i128().expect("bounded by denominator")))
                .collect();
            certify_bna_with(self.m, &small, denom.to_i128().expect("fits"), max_total)
        } else {
            certify_bna_with(self.m, &numerators, denom, max_total)
        }
    }
}

fn certify_bna_with<T>(m: usize, law: &[(u32, T)], denom: T, max_total: usize) -> BnaReport
where
    T: Clone + Zero + Ord + Add<Output = T> + Mul<Output = T>,
{
    let mut report = BnaReport::default();
    if max_total < 2 {
        return report;
    }
    let fns: Vec<Vec<MonotoneFn>> = (0..max_total).map(MonotoneFn::all).collect();
    let vars_of = |set: u32| -> Vec<usize> { (0..m).filter(|&i| set >> i & 1 == 1).collect() };
    let full = (1u32 << m) - 1;
    for s_set in 1u32..=full {
        let s_size = s_set.count_ones() as usize;
        if s_size + 1 > max_total {
            continue;
        }
        let rest = full & !s_set;
        // Walk non-empty subsets of the complement; keep each unordered pair once.
        let mut q_set = rest;
        while q_set != 0 {
            let q_size = q_set.count_ones() as usize;
            if s_set < q_set && s_size + q_size <= max_total {
                report.pairs += 1;
                check_pair(&vars_of(s_set), &vars_of(q_set), law, &denom, &fns, &mut report);
            }
            q_set = (q_set - 1) & rest;
        }
    }
    report
}

fn check_pair<T>(s: &[usize], q: &[usize], law: &[(u32, T)], denom: &T, fns: &[Vec<MonotoneFn>], report: &mut BnaReport)
where
    T: Clone + Zero + Ord + Add<Output = T> + Mul<Output = T>,
{
    let (ns, nq) = (1usize << s.len(), 1usize << q.len());
    let mut joint = vec![T::zero(); ns * nq];
    for (mask, p) in law {
        let idx = project(*mask, s) * nq + project(*mask, q);
        joint[idx] = joint[idx].clone() + p.clone();
    }
    let mut q_marginal = vec![T::zero(); nq];
    for a in 0..ns {
        for b in 0..nq {
            q_marginal[b] = q_marginal[b].clone() + joint[a * nq + b].clone();
        }
    }
    let g_probs: Vec<T> = fns[q.len()]
        .iter()
        .map(|g| (0..nq).filter(|&b| g.eval(b)).fold(T::zero(), |acc, b| acc + q_marginal[b].clone()))
        .collect();
    for f in &fns[s.len()] {
        let mut by_q = vec![T::zero(); nq];
        for a in (0..ns).filter(|&a| f.eval(a)) {
            for b in 0..nq {
                by_q[b] = by_q[b].clone() + joint[a * nq + b].clone();
            }
        }
        let pf = by_q.iter().fold(T::zero(), |acc, x| acc + x.clone());
        for (g, pg) in fns[q.len()].iter().zip(&g_probs) {
            let pfg = (0..nq).filter(|&b| g.eval(b)).fold(T::zero(), |acc, b| acc + by_q[b].clone());
            report.checks += 1;
            if pfg * denom.clone() > pf.clone() * pg.clone() {
                report
                    .violations
                    .push((s.to_vec(), q.to_vec(), f.table().to_vec(), g.table().to_vec()));
            }
        }
    }
}

struct Partial {
    prob: BigRational,
    ones: u32,
    survivor: Option<(usize, BigRational)>,
}

fn settle(ones: &mut u32, index: usize, value: &BigRational) {
    if value.is_one() {
        *ones |= 1 << index;
    }
}

fn enumerate_node(node: &TreeNode, y: &[BigRational]) -> Result<Vec<Partial>> {
    match node {
        TreeNode::Leaf(i) => {
            let v = &y[*i];
            Ok(vec![if is_fractional(v) {
                Partial {
                    prob: BigRational::one(),
                    ones: 0,
                    survivor: Some((*i, v.clone())),
                }
            } else {
                Partial {
                    prob: BigRational::one(),
                    ones: if v.is_one() { 1 << i } else { 0 },
                    survivor: None,
                }
            }])
        }
        TreeNode::Pair(kids) => {
            let left = enumerate_node(&kids[0], y)?;
            let right = enumerate_node(&kids[1], y)?;
            let mut out = Vec::with_capacity(left.len() * right.len() * 2);
            for l in &left {
                for r in &right {
                    let prob = &l.prob * &r.prob;
                    let ones = l.ones | r.ones;
                    match (&l.survivor, &r.survivor) {
                        (None, s) | (s, None) => out.push(Partial {
                            prob,
                            ones,
                            survivor: s.clone(),
                        }),
                        (Some((i, a)), Some((j, b))) => {
                            for br in dr_step_branches(a, b)? {
                                let mut ones = ones;
                                let survivor = match br.settled {
                                    Settled::First => {
                                        settle(&mut ones, *i, &br.first);
                                        if is_fractional(&br.second) {
                                            Some((*j, br.second))
                                        } else {
                                            settle(&mut ones, *j, &br.second);
                                            None
                                        }
                                    }
                                    Settled::Second => {
                                        settle(&mut ones, *j, &br.second);
                                        if is_fractional(&br.first) {
                                            Some((*i, br.first))
                                        } else {
                                            settle(&mut ones, *i, &br.first);
                                            None
                                        }
                                    }
                                };
                                out.push(Partial {
                                    prob: &prob * &br.probability,
                                    ones,
                                    survivor,
                                });
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Exact law of tournament-tree DR on `y` (entries in `[0, 1]`, integral sum).
pub fn enumerate_distribution(y: &[BigRational], tree: &TournamentTree) -> Result<ExactDistribution> {
    if y.len() > MAX_ENUM_VARS {
        return Err(Error::CapacityExceeded {
            what: "enumerated variables",
            required: y.len() as u128,
            limit: MAX_ENUM_VARS as u128,
        });
    }
    if y.len() != tree.num_leaves() {
        return Err(Error::Domain(format!(
            "tree has {} leaves, vector has {} entries",
            tree.num_leaves(),
            y.len()
        )));
    }
    let (values, _) = super::exact_openings(y)?;
    let mut law = BTreeMap::new();
    for p in enumerate_node(tree.root(), &values)? {
        debug_assert!(p.survivor.is_none());
        *law.entry(p.ones).or_insert_with(BigRational::zero) += p.prob;
    }
    Ok(ExactDistribution::from_masks(values.len(), law))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn monotone_counts_match_brute_force() {
        // Dedekind numbers, and an independent filter over all truth tables.
        let dedekind = [2usize, 3, 6, 20, 168];
        for (arity, &want) in dedekind.iter().enumerate() {
            assert_eq!(MonotoneFn::all(arity).len(), want);
            let brute = (0u64..(1u64 << (1 << arity)))
                .filter(|bits| {
                    let table: Vec<bool> = (0..1 << arity).map(|i| bits >> i & 1 == 1).collect();
                    is_monotone(arity, &table)
                })
                .count();
            assert_eq!(brute, want);
        }
        assert!(MonotoneFn::all(3).iter().all(|f| is_monotone(3, f.table())));
    }

    #[test]
    fn monotone_constructor_checks() {
        assert!(MonotoneFn::new(1, vec![true, false]).is_err());
        assert!(MonotoneFn::new(1, vec![false]).is_err());
        assert!(MonotoneFn::from_fn(2, |b| b[0] || b[1]).is_ok());
        assert!(MonotoneFn::from_fn(2, |b| b[0] != b[1]).is_err());
        assert_eq!(MonotoneFn::at_least(3, 2).table(), MonotoneFn::from_fn(3, |b| b.iter().filter(|&&x| x).count() >= 2).unwrap().table());
    }

    #[test]
    fn two_halves_trivial_tree() {
        let tree = TournamentTree::balanced(2).unwrap();
        let d = enumerate_distribution(&[q(1, 2), q(1, 2)], &tree).unwrap();
        assert_eq!(d.probability_of(&[true, false]), q(1, 2));
        assert_eq!(d.probability_of(&[false, true]), q(1, 2));
        assert_eq!(d.support_len(), 2);
    }

    #[test]
    fn marginals_are_exact() {
        let y = [q(2, 5), q(4, 5), q(4, 5)];
        for tree in [TournamentTree::balanced(3).unwrap(), TournamentTree::linear(3).unwrap()] {
            let d = enumerate_distribution(&y, &tree).unwrap();
            assert_eq!(d.marginals(), y.to_vec());
            assert!(d.support_sums_to(2));
            assert!(d.total().is_one());
        }
        let halves = vec![q(1, 2); 8];
        let d = enumerate_distribution(&halves, &TournamentTree::balanced(8).unwrap()).unwrap();
        assert_eq!(d.marginals(), halves);
        assert!(d.support_sums_to(4));
    }

    #[test]
    fn worked_outcome_is_reachable() {
        let y = [q(7, 10), q(1, 2), q(1, 2), q(1, 2), q(1, 5), q(3, 5)];
        let tree = TournamentTree::from_json("[[[0,1],[2,3]],[4,5]]").unwrap();
        let d = enumerate_distribution(&y, &tree).unwrap();
        assert!(d.probability_of(&[false, true, true, false, false, true]) > BigRational::zero());
        assert_eq!(d.marginals(), y.to_vec());
    }

    #[test]
    fn nc_and_bna_on_small_tree() {
        let y = [q(1, 3), q(2, 3), q(1, 2), q(1, 2)];
        let d = enumerate_distribution(&y, &TournamentTree::balanced(4).unwrap()).unwrap();
        assert!(d.check_nc(&[0]));
        assert!(d.nc_violations().is_empty());
        let r = d.certify_bna(4);
        assert!(r.violations.is_empty());
        assert!(r.checks > 0);
    }

    #[test]
    fn bna_argument_errors() {
        let d = enumerate_distribution(&[q(1, 2), q(1, 2)], &TournamentTree::balanced(2).unwrap()).unwrap();
        let id = MonotoneFn::at_least(1, 1);
        assert!(matches!(d.check_bna(&[0], &[0], &id, &id), Err(Error::OverlappingSets(0))));
        assert!(d.check_bna(&[0], &[5], &id, &id).is_err());
        assert!(d.check_bna(&[0], &[1], &MonotoneFn::at_least(2, 1), &id).is_err());
        // constant f: covariance zero
        assert!(d.check_bna(&[0], &[1], &MonotoneFn::constant(1, true), &id).unwrap());
        // Y_0 and Y_1 are perfectly anti-correlated here
        assert!(d.check_bna(&[0], &[1], &id, &id).unwrap());
    }

    #[test]
    fn positively_correlated_law_fails_checks() {
        // Y_0 = Y_1 with probability one: violates both NC and BNA.
        let d = ExactDistribution::from_outcomes(
            2,
            vec![(vec![true, true], q(1, 2)), (vec![false, false], q(1, 2))],
        )
        .unwrap();
        assert!(!d.check_nc(&[0, 1]));
        let id = MonotoneFn::at_least(1, 1);
        assert!(!d.check_bna(&[0], &[1], &id, &id).unwrap());
        assert!(!d.certify_bna(2).violations.is_empty());
        assert!(ExactDistribution::from_outcomes(1, vec![(vec![true], q(1, 2))]).is_err());
    }

    #[test]
    fn size_limit() {
        let y = vec![q(1, 2); 18];
        let tree = TournamentTree::balanced(18).unwrap();
        assert!(enumerate_distribution(&y, &tree).unwrap_err().is_limit());
    }
}
