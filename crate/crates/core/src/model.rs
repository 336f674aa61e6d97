//! Problem representation: clients, facilities, cost matrix and the ordered
//! weight vector, plus exact evaluation of the OWA cost of a committee.
//!
//! A client's cost for a committee `C` is the dot product of the weights with
//! the ascending sort of its costs to the members of `C`; the heaviest weight
//! lands on the cheapest facility. Equal costs are ordered by facility index.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact-or-float parameter of a weight family.
#[derive(Clone, Debug, PartialEq)]
pub enum Parameter {
    Exact(BigRational),
    Float(f64),
}

impl Parameter {
    pub fn as_f64(&self) -> f64 {
        match self {
            Parameter::Exact(r) => r.as_f64(),
            Parameter::Float(x) => *x,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightFamily {
    /// `1, 1/2, ..., 1/k`.
    Harmonic,
    /// `1, p, p^2, ..., p^(k-1)` with `0 < p < 1`.
    Geometric(Parameter),
    /// `r` ones followed by `k - r` zeros.
    TopR(usize),
    Custom,
}

/// Non-increasing, nonnegative weights with a positive leading entry.
///
/// `exact` is populated whenever the family has rational weights (harmonic,
/// top-r, geometric with rational `p`, custom rationals); the reduction to
/// fault-tolerant k-median refuses vectors without it.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<S> {
    values: Vec<S>,
    family: WeightFamily,
    exact: Option<Vec<BigRational>>,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl<S: Scalar> WeightVector<S> {
    fn from_exact(exact: Vec<BigRational>, family: WeightFamily) -> Result<Self> {
        let values = exact.iter().map(S::from_rational).collect();
        let w = Self {
            values,
            family,
            exact: Some(exact),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn harmonic(k: usize) -> Result<Self> {
        let exact = (1..=k).map(|i| ratio(1, i as i64)).collect();
        Self::from_exact(exact, WeightFamily::Harmonic)
    }

    pub fn geometric(p: BigRational, k: usize) -> Result<Self> {
        if !(p.is_positive() && p < BigRational::one()) {
            return Err(Error::InvalidWeights(format!("geometric p = {p} not in (0, 1)")));
        }
        let mut exact = Vec::with_capacity(k);
        let mut cur = BigRational::one();
        for _ in 0..k {
            exact.push(cur.clone());
            cur *= &p;
        }
        Self::from_exact(exact, WeightFamily::Geometric(Parameter::Exact(p)))
    }

    /// Geometric weights from a float `p`; no exact form is retained.
    pub fn geometric_float(p: f64, k: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidWeights(format!("geometric p = {p} not in (0, 1)")));
        }
        let values = (0..k)
            .map(|i| S::from_rational(&BigRational::from_float(p.powi(i as i32)).unwrap()))
            .collect();
        let w = Self {
            values,
            family: WeightFamily::Geometric(Parameter::Float(p)),
            exact: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn top_r(r: usize, k: usize) -> Result<Self> {
        if r == 0 || r > k {
            return Err(Error::InvalidWeights(format!("top_r needs 1 <= r <= k, got r = {r}, k = {k}")));
        }
        let exact = (0..k)
            .map(|i| if i < r { BigRational::one() } else { BigRational::zero() })
            .collect();
        Self::from_exact(exact, WeightFamily::TopR(r))
    }

    /// Custom weights. Exact scalar types keep their exact form; floats do not.
    pub fn custom(values: Vec<S>) -> Result<Self> {
        let exact = if S::EXACT {
            values.iter().map(|v| v.to_rational()).collect()
        } else {
            None
        };
        let w = Self {
            values,
            family: WeightFamily::Custom,
            exact,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn custom_exact(values: Vec<BigRational>) -> Result<Self> {
        Self::from_exact(values, WeightFamily::Custom)
    }

    /// Example-2 failure model: facility failure probability `p` gives
    /// weights `(1-p), (1-p)p, ..., (1-p)p^(k-1)`.
    pub fn failure_model(p: BigRational, k: usize) -> Result<Self> {
        let geo = WeightVector::<BigRational>::geometric(p.clone(), k)?;
        let scale = BigRational::one() - p;
        let exact = geo.values.iter().map(|w| w * &scale).collect();
        Self::from_exact(exact, WeightFamily::Custom)
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.values.first() else {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        };
        if first.partial_cmp(&S::zero()) != Some(Ordering::Greater) {
            return Err(Error::InvalidWeights("leading weight must be positive".into()));
        }
        for (i, w) in self.values.iter().enumerate() {
            if !w.is_finite_value() || *w < S::zero() {
                return Err(Error::InvalidWeights(format!("weight {i} is negative or not finite")));
            }
            if i > 0 && *w > self.values[i - 1] {
                return Err(Error::InvalidWeights(format!("weights increase at position {i}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Number of leading positive weights.
    pub fn positive_len(&self) -> usize {
        self.values.iter().take_while(|w| **w > S::zero()).count()
    }

    pub fn convert<T: Scalar>(&self) -> WeightVector<T> {
        let values = match &self.exact {
            Some(exact) => exact.iter().map(T::from_rational).collect(),
            None => self
                .values
                .iter()
                .map(|v| T::from_rational(&v.to_rational().expect("finite weight")))
                .collect(),
        };
        WeightVector {
            values,
            family: self.family.clone(),
            exact: self.exact.clone(),
        }
    }
}

/// A set of exactly `k` distinct facility indices, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Committee(Vec<usize>);

impl Committee {
    pub fn new(mut indices: Vec<usize>, num_facilities: usize, k: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.len() != k {
            return Err(Error::InvalidCommittee(format!(
                "committee has {} members, expected {k}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCommittee("duplicate facility".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= num_facilities {
                return Err(Error::IndexOutOfRange {
                    what: "facility",
                    index: last,
                    len: num_facilities,
                });
            }
        }
        Ok(Self(indices))
    }

    /// Committee of the facilities whose indicator bit is set.
    pub fn from_indicator(bits: &[bool], k: usize) -> Result<Self> {
        let idx = bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Self::new(idx, bits.len(), k)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

impl std::fmt::Display for Committee {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// OWA-k-median instance. Row `j` of `costs` holds client `j`'s costs to
/// every facility.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S> {
    num_facilities: usize,
    costs: Vec<Vec<S>>,
    weights: WeightVector<S>,
    metric: Option<bool>,
}

pub(crate) fn cmp_scalar<S: PartialOrd>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

impl<S: Scalar> Instance<S> {
    pub fn new(
        num_facilities: usize,
        costs: Vec<Vec<S>>,
        weights: WeightVector<S>,
        metric: Option<bool>,
    ) -> Result<Self> {
        if num_facilities == 0 {
            return Err(Error::InvalidInstance("no facilities".into()));
        }
        if costs.is_empty() {
            return Err(Error::InvalidInstance("no clients".into()));
        }
        let k = weights.len();
        if k == 0 || k > num_facilities {
            return Err(Error::InvalidInstance(format!(
                "need 1 <= k <= m, got k = {k}, m = {num_facilities}"
            )));
        }
        for (j, row) in costs.iter().enumerate() {
            if row.len() != num_facilities {
                return Err(Error::InvalidInstance(format!(
                    "client {j} has {} costs, expected {num_facilities}",
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|c| !c.is_finite_value() || *c < S::zero()) {
                return Err(Error::InvalidInstance(format!(
                    "cost of client {j} to facility {i} is negative or not finite"
                )));
            }
        }
        Ok(Self {
            num_facilities,
            costs,
            weights,
            metric,
        })
    }

    /// Minimisation-PAV instance: `c_ij = 0` iff voter `j` approves candidate
    /// `i`, harmonic weights.
    pub fn from_approval_ballots(ballots: &[Vec<usize>], num_candidates: usize, k: usize) -> Result<Self> {
        let mut costs = Vec::with_capacity(ballots.len());
        for ballot in ballots {
            let mut row = vec![S::one(); num_candidates];
            for &c in ballot {
                if c >= num_candidates {
                    return Err(Error::IndexOutOfRange {
                        what: "candidate",
                        index: c,
                        len: num_candidates,
                    });
                }
                row[c] = S::zero();
            }
            costs.push(row);
        }
        Self::new(num_candidates, costs, WeightVector::harmonic(k)?, None)
    }

    pub fn num_facilities(&self) -> usize {
        self.num_facilities
    }

    pub fn num_clients(&self) -> usize {
        self.costs.len()
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn costs(&self) -> &[Vec<S>] {
        &self.costs
    }

    pub fn cost(&self, facility: usize, client: usize) -> &S {
        &self.costs[client][facility]
    }

    pub fn weights(&self) -> &WeightVector<S> {
        &self.weights
    }

    pub fn metric(&self) -> Option<bool> {
        self.metric
    }

    pub fn committee(&self, indices: Vec<usize>) -> Result<Committee> {
        Committee::new(indices, self.num_facilities, self.k())
    }

    fn check_committee(&self, com: &Committee) -> Result<()> {
        if com.len() != self.k() {
            return Err(Error::InvalidCommittee(format!(
                "committee has {} members, expected {}",
                com.len(),
                self.k()
            )));
        }
        if let Some(&i) = com.indices().last() {
            if i >= self.num_facilities {
                return Err(Error::IndexOutOfRange {
                    what: "facility",
                    index: i,
                    len: self.num_facilities,
                });
            }
        }
        Ok(())
    }

    /// Costs of client `j` to the committee members, ascending, ties by
    /// facility index.
    pub fn sorted_committee_costs(&self, com: &Committee, j: usize) -> Result<Vec<S>> {
        self.check_committee(com)?;
        let row = self.costs.get(j).ok_or(Error::IndexOutOfRange {
            what: "client",
            index: j,
            len: self.num_clients(),
        })?;
        let mut pairs: Vec<(&S, usize)> = com.indices().iter().map(|&i| (&row[i], i)).collect();
        pairs.sort_by(|a, b| cmp_scalar(a.0, b.0).then(a.1.cmp(&b.1)));
        Ok(pairs.into_iter().map(|(c, _)| c.clone()).collect())
    }

    /// `w(C, j)`: weights dotted with the ascending committee costs of client `j`.
    pub fn client_cost(&self, com: &Committee, j: usize) -> Result<S> {
        let sorted = self.sorted_committee_costs(com, j)?;
        Ok(dot(self.weights.values(), &sorted))
    }

    /// `w(C)`: sum of client costs.
    pub fn total_cost(&self, com: &Committee) -> Result<S> {
        let mut total = S::zero();
        for j in 0..self.num_clients() {
            total = total + self.client_cost(com, j)?;
        }
        Ok(total)
    }

    pub fn per_client_costs(&self, com: &Committee) -> Result<Vec<S>> {
        (0..self.num_clients()).map(|j| self.client_cost(com, j)).collect()
    }

    /// Same instance with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: &S) -> Result<Self> {
        let costs = self
            .costs
            .iter()
            .map(|row| row.iter().map(|c| c.clone() * factor.clone()).collect())
            .collect();
        Self::new(self.num_facilities, costs, self.weights.clone(), self.metric)
    }

    /// Same costs under a different weight vector.
    pub fn with_weights(&self, weights: WeightVector<S>) -> Result<Self> {
        Self::new(self.num_facilities, self.costs.clone(), weights, self.metric)
    }

    /// Converts every cost exactly; needs exact weights.
    pub fn to_exact(&self) -> Result<Instance<BigRational>> {
        if self.weights.exact().is_none() {
            return Err(Error::NonRationalWeights);
        }
        let costs = self
            .costs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.to_rational().expect("validated finite"))
                    .collect()
            })
            .collect();
        Ok(Instance {
            num_facilities: self.num_facilities,
            costs,
            weights: self.weights.convert(),
            metric: self.metric,
        })
    }

    pub fn to_f64(&self) -> Instance<f64> {
        let costs = self
            .costs
            .iter()
            .map(|row| row.iter().map(Scalar::as_f64).collect())
            .collect();
        Instance {
            num_facilities: self.num_facilities,
            costs,
            weights: self.weights.convert(),
            metric: self.metric,
        }
    }
}

pub(crate) fn dot<S: Scalar>(weights: &[S], sorted_costs: &[S]) -> S {
    weights
        .iter()
        .zip(sorted_costs)
        .fold(S::zero(), |acc, (w, c)| acc + w.clone() * c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(costs: Vec<Vec<f64>>, weights: WeightVector<f64>) -> Instance<f64> {
        let m = costs[0].len();
        Instance::new(m, costs, weights, None).unwrap()
    }

    #[test]
    fn top_one_picks_minimum() {
        let w = WeightVector::top_r(1, 3).unwrap();
        let i = inst(vec![vec![2.0, 5.0, 1.0]], w);
        let c = i.committee(vec![0, 1, 2]).unwrap();
        assert_eq!(i.client_cost(&c, 0).unwrap(), 1.0);
    }

    #[test]
    fn harmonic_on_zero_zero_one() {
        let w = WeightVector::<BigRational>::harmonic(3).unwrap();
        let zero = BigRational::zero;
        let i = Instance::new(3, vec![vec![zero(), BigRational::one(), zero()]], w, None).unwrap();
        let c = i.committee(vec![0, 1, 2]).unwrap();
        assert_eq!(i.client_cost(&c, 0).unwrap(), ratio(1, 3));
    }

    #[test]
    fn two_copies_hand_value() {
        let w = WeightVector::harmonic(2).unwrap();
        let i = inst(vec![vec![7.0, 3.0]], w);
        let c = i.committee(vec![0, 1]).unwrap();
        assert_eq!(i.client_cost(&c, 0).unwrap(), 6.5);
    }

    #[test]
    fn single_client_single_facility() {
        let i = inst(vec![vec![4.0]], WeightVector::harmonic(1).unwrap());
        let c = i.committee(vec![0]).unwrap();
        assert_eq!(i.total_cost(&c).unwrap(), 4.0);
    }

    #[test]
    fn zero_matrix_costs_nothing() {
        let i = inst(vec![vec![0.0; 4]; 3], WeightVector::harmonic(2).unwrap());
        for a in 0..4 {
            for b in a + 1..4 {
                let c = i.committee(vec![a, b]).unwrap();
                assert_eq!(i.total_cost(&c).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn weight_families() {
        let h = WeightVector::<f64>::harmonic(4).unwrap();
        assert_eq!(h.values(), &[1.0, 0.5, 1.0 / 3.0, 0.25]);
        assert_eq!(h.exact().unwrap()[2], ratio(1, 3));
        let g = WeightVector::<f64>::geometric(ratio(1, 2), 3).unwrap();
        assert_eq!(g.values(), &[1.0, 0.5, 0.25]);
        let t = WeightVector::<f64>::top_r(2, 4).unwrap();
        assert_eq!(t.values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(t.positive_len(), 2);
        assert!(WeightVector::<f64>::geometric(ratio(1, 1), 3).is_err());
        assert!(WeightVector::<f64>::top_r(0, 3).is_err());
        assert!(WeightVector::custom(vec![1.0, 2.0]).is_err());
        assert!(WeightVector::custom(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::<f64>::custom(vec![1.0, 0.5]).unwrap().exact().is_none());
        let f = WeightVector::<BigRational>::failure_model(ratio(1, 2), 2).unwrap();
        assert_eq!(f.values(), &[ratio(1, 2), ratio(1, 4)]);
    }

    #[test]
    fn rejects_bad_instances() {
        let w = || WeightVector::<f64>::harmonic(2).unwrap();
        assert!(Instance::new(2, vec![vec![1.0, -1.0]], w(), None).is_err());
        assert!(Instance::new(2, vec![vec![1.0, f64::NAN]], w(), None).is_err());
        assert!(Instance::new(1, vec![vec![1.0]], w(), None).is_err());
        assert!(Instance::new(2, vec![vec![1.0]], w(), None).is_err());
        assert!(Instance::new(2, vec![], w(), None).is_err());
    }

    #[test]
    fn committee_validation() {
        assert!(Committee::new(vec![0, 0], 3, 2).is_err());
        assert!(Committee::new(vec![0, 3], 3, 2).is_err());
        assert!(Committee::new(vec![0], 3, 2).is_err());
        assert_eq!(Committee::new(vec![2, 0], 3, 2).unwrap().indices(), &[0, 2]);
        let i = inst(vec![vec![1.0, 2.0]], WeightVector::harmonic(1).unwrap());
        let c = i.committee(vec![0]).unwrap();
        assert!(matches!(
            i.client_cost(&c, 1),
            Err(Error::IndexOutOfRange { what: "client", .. })
        ));
    }

    #[test]
    fn pav_ballots() {
        let i = Instance::<f64>::from_approval_ballots(&[vec![0, 2], vec![1]], 3, 2).unwrap();
        assert_eq!(i.costs(), &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);
        assert!(Instance::<f64>::from_approval_ballots(&[vec![3]], 3, 2).is_err());
    }

    fn small_instance() -> impl Strategy<Value = (Instance<f64>, Vec<usize>)> {
        (2usize..6, 1usize..4).prop_flat_map(|(m, n)| {
            (1..=m).prop_flat_map(move |k| {
                (
                    proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, m), n),
                    proptest::sample::subsequence((0..m).collect::<Vec<_>>(), k),
                    Just(k),
                    Just(m),
                )
            })
        })
        .prop_map(|(costs, com, k, m)| {
            (
                Instance::new(m, costs, WeightVector::harmonic(k).unwrap(), None).unwrap(),
                com,
            )
        })
    }

    proptest! {
        #[test]
        fn scaling_costs_scales_total((i, com) in small_instance(), lambda in 0.1f64..5.0) {
            let c = i.committee(com).unwrap();
            let base = i.total_cost(&c).unwrap();
            let scaled = i.scaled(&lambda).unwrap().total_cost(&c).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
        }

        #[test]
        fn top_one_is_k_median((i, com) in small_instance()) {
            let k = i.k();
            let i = i.with_weights(WeightVector::top_r(1, k).unwrap()).unwrap();
            let c = i.committee(com).unwrap();
            for j in 0..i.num_clients() {
                let min = c.indices().iter().map(|&f| *i.cost(f, j)).fold(f64::INFINITY, f64::min);
                prop_assert_eq!(i.client_cost(&c, j).unwrap(), min);
            }
        }

        #[test]
        fn cheaper_replacement_never_hurts((i, com) in small_instance(), pick in 0usize..8) {
            // Replace a member by a fresh facility whose cost is pointwise no larger.
            let m = i.num_facilities();
            let k = i.k();
            let out = com[pick % com.len()];
            let mut costs = i.costs().to_vec();
            for row in costs.iter_mut() {
                let v = row[out] * 0.5;
                row.push(v);
            }
            let bigger = Instance::new(m + 1, costs, i.weights().clone(), None).unwrap();
            let before = bigger.committee(com.clone()).unwrap();
            let mut swapped: Vec<usize> = com.iter().copied().filter(|&f| f != out).collect();
            swapped.push(m);
            let after = Committee::new(swapped, m + 1, k).unwrap();
            for j in 0..i.num_clients() {
                prop_assert!(bigger.client_cost(&after, j).unwrap() <= bigger.client_cost(&before, j).unwrap());
            }
        }

        #[test]
        fn column_permutation_invariance((i, com) in small_instance(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let m = i.num_facilities();
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            // new column perm[i] holds old column i
            let costs = i.costs().iter().map(|row| {
                let mut out = vec![0.0; m];
                for (old, &new) in perm.iter().enumerate() { out[new] = row[old]; }
                out
            }).collect();
            let p = Instance::new(m, costs, i.weights().clone(), None).unwrap();
            let c = i.committee(com.clone()).unwrap();
            let pc = p.committee(com.iter().map(|&f| perm[f]).collect()).unwrap();
            prop_assert!((i.total_cost(&c).unwrap() - p.total_cost(&pc).unwrap()).abs() < 1e-9);
        }
    }
}
