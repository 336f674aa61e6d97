//! Instance generators: seeded random instances, city instances, the
//! failure-probability model and hard instances built from exact cover by
//! 3-sets (X3C).

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Committee, Instance, WeightVector};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostMode {
    /// Facilities and clients uniform in the unit square, Euclidean costs.
    Metric,
    /// I.i.d. `U[0, 1]` costs.
    NonMetric,
    /// 0/1 costs: each client approves each facility with probability `density`.
    Approval { density: f64 },
}

fn from_f64<S: Scalar>(x: f64) -> S {
    S::from_rational(&BigRational::from_float(x).expect("finite"))
}

pub fn gen_random<S: Scalar>(m: usize, n: usize, weights: WeightVector<S>, mode: CostMode, seed: u64) -> Result<Instance<S>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInstance("need at least one facility and one client".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (costs, metric): (Vec<Vec<S>>, Option<bool>) = match mode {
        CostMode::NonMetric => (
            (0..n).map(|_| (0..m).map(|_| from_f64(rng.gen::<f64>())).collect()).collect(),
            Some(false),
        ),
        CostMode::Metric => {
            let fac: Vec<(f64, f64)> = (0..m).map(|_| (rng.gen(), rng.gen())).collect();
            let cli: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
            (
                cli.iter()
                    .map(|c| fac.iter().map(|f| from_f64((c.0 - f.0).hypot(c.1 - f.1))).collect())
                    .collect(),
                Some(true),
            )
        }
        CostMode::Approval { density } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::Domain(format!("approval density {density} not in [0, 1]")));
            }
            (
                (0..n)
                    .map(|_| {
                        (0..m)
                            .map(|_| if rng.gen_bool(density) { S::zero() } else { S::one() })
                            .collect()
                    })
                    .collect(),
                None,
            )
        }
    };
    Instance::new(m, costs, weights, metric)
}

#[derive(Clone, Debug)]
pub struct CityInstance<S> {
    pub instance: Instance<S>,
    /// City hosting each facility slot; city `c` owns slots `c*k..(c+1)*k`.
    pub city_of_facility: Vec<usize>,
    /// City of each client.
    pub city_of_client: Vec<usize>,
    /// `true` when every `k * population / n` is an integer.
    pub clean: bool,
}

impl<S: Scalar> CityInstance<S> {
    /// Number of open facilities per city.
    pub fn split(&self, com: &Committee) -> Vec<usize> {
        let cities = self.city_of_facility.iter().max().map_or(0, |c| c + 1);
        let mut out = vec![0; cities];
        for &i in com.indices() {
            out[self.city_of_facility[i]] += 1;
        }
        out
    }

    /// The proportional split `k * population / n` (floored).
    pub fn proportional_split(&self, populations: &[usize]) -> Vec<usize> {
        let n: usize = populations.iter().sum();
        let k = self.instance.k();
        populations.iter().map(|p| k * p / n).collect()
    }
}

/// Cities with the given populations; travel within a city is free, between
/// cities costs one. Each city offers `k` candidate slots.
pub fn gen_cities<S: Scalar>(populations: &[usize], k: usize, weights: WeightVector<S>) -> Result<CityInstance<S>> {
    if populations.is_empty() || populations.contains(&0) {
        return Err(Error::InvalidInstance("every city needs a positive population".into()));
    }
    if weights.len() != k {
        return Err(Error::InvalidWeights(format!("expected {k} weights, got {}", weights.len())));
    }
    let city_of_facility: Vec<usize> = (0..populations.len()).flat_map(|c| std::iter::repeat_n(c, k)).collect();
    let city_of_client: Vec<usize> = populations
        .iter()
        .enumerate()
        .flat_map(|(c, &p)| std::iter::repeat_n(c, p))
        .collect();
    let costs = city_of_client
        .iter()
        .map(|&cc| {
            city_of_facility
                .iter()
                .map(|&fc| if fc == cc { S::zero() } else { S::one() })
                .collect()
        })
        .collect();
    let clean = is_clean_split(populations, k);
    Ok(CityInstance {
        instance: Instance::new(city_of_facility.len(), costs, weights, Some(true))?,
        city_of_facility,
        city_of_client,
        clean,
    })
}

/// Expected cost of client `j` when each open facility fails independently
/// with probability `p` and the client uses its nearest working one. The
/// event that all `k` fail contributes cost zero.
pub fn geometric_failure_cost<S: Scalar>(inst: &Instance<S>, com: &Committee, j: usize, p: &S) -> Result<S> {
    if !(*p > S::zero() && *p < S::one()) {
        return Err(Error::Domain(format!("failure probability {p:?} not in (0, 1)")));
    }
    let sorted = inst.sorted_committee_costs(com, j)?;
    let mut reach = S::one();
    let mut total = S::zero();
    for c in sorted {
        total = total + reach.clone() * (S::one() - p.clone()) * c;
        reach = reach * p.clone();
    }
    Ok(total)
}

/// Monte Carlo estimate of [`geometric_failure_cost`]: `(mean, standard error)`.
pub fn simulate_failure_cost<S: Scalar>(
    inst: &Instance<S>,
    com: &Committee,
    j: usize,
    p: f64,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let sorted: Vec<f64> = inst.sorted_committee_costs(com, j)?.iter().map(Scalar::as_f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..draws {
        let cost = sorted.iter().find(|_| !rng.gen_bool(p)).copied().unwrap_or(0.0);
        sum += cost;
        sq += cost * cost;
    }
    let mean = sum / draws as f64;
    let var = (sq / draws as f64 - mean * mean).max(0.0);
    Ok((mean, (var / draws as f64).sqrt()))
}

/// Exact cover by 3-sets: a universe `0..3n` and candidate triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct X3c {
    pub universe: usize,
    pub triples: Vec<[usize; 3]>,
}

impl X3c {
    pub fn new(universe: usize, triples: Vec<[usize; 3]>) -> Result<Self> {
        if universe == 0 || !universe.is_multiple_of(3) {
            return Err(Error::Parse(format!("universe size {universe} is not a positive multiple of 3")));
        }
        for (t, tri) in triples.iter().enumerate() {
            if tri.iter().any(|&e| e >= universe) {
                return Err(Error::Parse(format!("triple {t} has an element outside 0..{universe}")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Parse(format!("triple {t} repeats an element")));
            }
        }
        Ok(Self { universe, triples })
    }

    /// First line `3n`, then one triple per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty X3C input".into()))?;
        let universe: usize = head.parse().map_err(|_| Error::Parse(format!("bad universe size {head:?}")))?;
        let mut triples = Vec::new();
        for (t, line) in lines.enumerate() {
            let items: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("triple {t}: bad element {s:?}"))))
                .collect::<Result<_>>()?;
            let tri: [usize; 3] = items
                .try_into()
                .map_err(|v: Vec<usize>| Error::Parse(format!("triple {t} has {} elements", v.len())))?;
            triples.push(tri);
        }
        Self::new(universe, triples)
    }

    pub fn n(&self) -> usize {
        self.universe / 3
    }
}

#[derive(Clone, Debug)]
pub struct X3cInstance<S> {
    pub instance: Instance<S>,
    pub k: usize,
    pub p: usize,
    /// Facilities `0..triples` are the triples, then `helpers` zero-cost
    /// facilities, then `dummies` facilities matched to the dummy clients.
    pub helpers: usize,
    pub dummies: usize,
}

/// Builds an instance with optimum 0 iff the X3C instance has an exact cover.
/// `k = ceil(n / (1 - lambda))` and top-`p` weights with `p <= lambda k`;
/// `p = None` takes `floor(lambda k)`.
pub fn gen_x3c<S: Scalar>(x3c: &X3c, lambda: &BigRational, p: Option<usize>) -> Result<X3cInstance<S>> {
    let one = BigRational::one();
    if !(lambda > &BigRational::zero() && lambda < &one) {
        return Err(Error::Domain(format!("lambda = {lambda} not in (0, 1)")));
    }
    let n = x3c.n();
    let nr = BigRational::from_integer(n.into());
    let k = (nr / (&one - lambda)).ceil().to_integer().to_usize().ok_or_else(|| Error::Domain("k overflows".into()))?;
    let lambda_k = lambda * BigRational::from_integer(k.into());
    let p = match p {
        Some(p) => p,
        None => lambda_k.floor().to_integer().to_usize().unwrap_or(0),
    };
    if p == 0 || BigRational::from_integer(p.into()) > lambda_k {
        return Err(Error::Domain(format!("need 1 <= p <= lambda k = {lambda_k}, got p = {p}")));
    }
    if k < n + p {
        return Err(Error::Domain(format!("k = {k} leaves no room for n = {n} triples and p = {p}")));
    }
    let helpers = p - 1;
    let dummies = k - n - p + 1;
    let t = x3c.triples.len();
    let m = t + helpers + dummies;
    if m < k {
        return Err(Error::InvalidInstance(format!("only {t} triples, need at least {n}")));
    }
    let mut costs: Vec<Vec<S>> = Vec::with_capacity(x3c.universe + dummies);
    for e in 0..x3c.universe {
        let mut row = vec![S::one(); m];
        for (i, tri) in x3c.triples.iter().enumerate() {
            if tri.contains(&e) {
                row[i] = S::zero();
            }
        }
        row[t..t + helpers].fill(S::zero());
        costs.push(row);
    }
    for d in 0..dummies {
        let mut row = vec![S::one(); m];
        row[t..t + helpers].fill(S::zero());
        row[t + helpers + d] = S::zero();
        costs.push(row);
    }
    Ok(X3cInstance {
        instance: Instance::new(m, costs, WeightVector::top_r(p, k)?, None)?,
        k,
        p,
        helpers,
        dummies,
    })
}

/// `true` when `k * population / n` is an integer for every city.
pub fn is_clean_split(populations: &[usize], k: usize) -> bool {
    let n: usize = populations.iter().sum();
    n > 0 && populations.iter().all(|p| (k * p).is_multiple_of(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_solve;
    use crate::lp::solve_instance;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn random_is_deterministic_and_shaped() {
        let w = || WeightVector::<f64>::harmonic(4).unwrap();
        let a = gen_random(10, 15, w(), CostMode::NonMetric, 7).unwrap();
        assert_eq!(a, gen_random(10, 15, w(), CostMode::NonMetric, 7).unwrap());
        assert_ne!(a, gen_random(10, 15, w(), CostMode::NonMetric, 8).unwrap());
        assert_eq!(a.costs().len(), 15);
        assert!(a.costs().iter().all(|r| r.len() == 10));
    }

    #[test]
    fn metric_mode_is_euclidean() {
        let inst = gen_random(6, 6, WeightVector::<f64>::harmonic(2).unwrap(), CostMode::Metric, 3).unwrap();
        // d(f, c) <= d(f, c') + d(c', f') + d(f', c) over client/facility paths
        let c = inst.costs();
        for f in 0..6 {
            for g in 0..6 {
                for a in 0..6 {
                    for b in 0..6 {
                        assert!(c[a][f] <= c[b][f] + c[b][g] + c[a][g] + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cities_example() {
        let city = gen_cities(&[4, 2], 3, WeightVector::<BigRational>::harmonic(3).unwrap()).unwrap();
        assert!(city.clean);
        let (com, _) = exact_solve(&city.instance).unwrap();
        assert_eq!(city.split(&com), vec![2, 1]);
        assert_eq!(city.proportional_split(&[4, 2]), vec![2, 1]);

        let city = gen_cities(&[3, 3], 2, WeightVector::<BigRational>::harmonic(2).unwrap()).unwrap();
        let (com, _) = exact_solve(&city.instance).unwrap();
        assert_eq!(city.split(&com), vec![1, 1]);

        let city = gen_cities(&[5], 3, WeightVector::<BigRational>::harmonic(3).unwrap()).unwrap();
        let (com, cost) = exact_solve(&city.instance).unwrap();
        assert!(cost.is_zero());
        assert_eq!(city.split(&com), vec![3]);
        assert!(!is_clean_split(&[2, 2, 3], 2));
    }

    #[test]
    fn cities_lp_is_tight() {
        for (pops, k) in [(vec![4usize, 2], 3usize), (vec![3, 3], 2), (vec![2, 2, 4], 4)] {
            let city = gen_cities(&pops, k, WeightVector::<f64>::harmonic(k).unwrap()).unwrap();
            assert!(city.clean);
            let lp = solve_instance(&city.instance).unwrap();
            let (_, opt) = exact_solve(&city.instance).unwrap();
            assert!((lp.objective - opt).abs() < 1e-7, "{pops:?}: {} vs {opt}", lp.objective);
        }
    }

    #[test]
    fn failure_model_matches_owa_cost() {
        let w = WeightVector::<BigRational>::failure_model(q(1, 2), 2).unwrap();
        let inst = Instance::new(2, vec![vec![q(1, 1), q(2, 1)]], w, None).unwrap();
        let com = inst.committee(vec![0, 1]).unwrap();
        let direct = geometric_failure_cost(&inst, &com, 0, &q(1, 2)).unwrap();
        assert_eq!(direct, q(1, 1));
        assert_eq!(inst.client_cost(&com, 0).unwrap(), direct);

        let tiny = geometric_failure_cost(&inst, &com, 0, &q(1, 1_000_000)).unwrap();
        assert!((tiny.as_f64() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn failure_model_monte_carlo() {
        let w = WeightVector::<f64>::failure_model(q(3, 10), 3).unwrap();
        let inst = gen_random(5, 2, w, CostMode::NonMetric, 11).unwrap();
        let com = inst.committee(vec![0, 2, 4]).unwrap();
        for j in 0..2 {
            let want = inst.client_cost(&com, j).unwrap();
            let (mean, se) = simulate_failure_cost(&inst, &com, j, 0.3, 100_000, 5).unwrap();
            assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
        }
    }

    fn planted() -> X3c {
        X3c::parse("6\n0 1 2\n3 4 5\n0 3 4\n1 2 5\n").unwrap()
    }

    #[test]
    fn x3c_counts_and_planted_cover() {
        let x = planted();
        let r: X3cInstance<BigRational> = gen_x3c(&x, &q(1, 2), None).unwrap();
        // n = 2, k = 4, p = 2
        assert_eq!((r.k, r.p, r.helpers, r.dummies), (4, 2, 1, 1));
        assert_eq!(r.instance.num_facilities(), 4 + 1 + 1);
        assert_eq!(r.instance.num_clients(), 6 + 1);
        let dummy_row = &r.instance.costs()[6];
        let zeros: Vec<usize> = (0..6).filter(|&i| dummy_row[i].is_zero()).collect();
        assert_eq!(zeros, vec![4, 5]);
        let (_, opt) = exact_solve(&r.instance).unwrap();
        assert!(opt.is_zero());
    }

    #[test]
    fn x3c_without_cover() {
        // Element 5 lies in no triple.
        let x = X3c::parse("6\n0 1 2\n2 3 4\n0 1 3\n").unwrap();
        let r: X3cInstance<BigRational> = gen_x3c(&x, &q(1, 2), None).unwrap();
        let (_, opt) = exact_solve(&r.instance).unwrap();
        assert!(opt >= q(1, 1));
        // Overlapping triples only: a cover of 0..6 needs two disjoint ones.
        let x = X3c::parse("6\n0 1 2\n2 3 4\n1 4 5\n0 3 5\n").unwrap();
        let r: X3cInstance<BigRational> = gen_x3c(&x, &q(1, 3), None).unwrap();
        let (_, opt) = exact_solve(&r.instance).unwrap();
        assert!(opt >= q(1, 1));
    }

    #[test]
    fn x3c_validation() {
        assert!(X3c::parse("5\n0 1 2\n").is_err());
        assert!(X3c::parse("6\n0 1\n").is_err());
        assert!(X3c::parse("6\n0 1 9\n").is_err());
        assert!(X3c::parse("6\n0 0 1\n").is_err());
        assert!(gen_x3c::<f64>(&planted(), &q(3, 2), None).is_err());
        assert!(gen_x3c::<f64>(&planted(), &q(1, 2), Some(3)).is_err());
        for (lam, n) in [(q(1, 2), 2usize), (q(1, 3), 2), (q(2, 3), 2)] {
            let r: X3cInstance<f64> = gen_x3c(&planted(), &lam, None).unwrap();
            let k = (n as f64 / (1.0 - lam.as_f64())).ceil() as usize;
            assert_eq!(r.k, k);
            assert_eq!(r.helpers + r.dummies + n, k);
            assert_eq!(r.instance.num_clients(), 3 * n + r.dummies);
        }
    }
}
