//! Scalar abstraction shared by the cost model, the exact oracles and the
//! rounding machinery.
//!
//! Everything that only needs ordered-field arithmetic is written against
//! [`Scalar`], so the same code evaluates committees in `f64` for speed and in
//! [`BigRational`] when a test or a reduction needs exact equality.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Ordered field element usable as a cost, weight or probability.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic on this type is exact.
    const EXACT: bool;

    /// Nearest representable value of an exact rational.
    fn from_rational(r: &BigRational) -> Self;

    /// Exact rational value, if the number has one (every finite float does).
    fn to_rational(&self) -> Option<BigRational>;

    fn is_finite_value(&self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_f64(*self)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_f32(*self)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn from_usize(n: usize) -> Self {
        n as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Correctly rounded (half to even) conversion for normal-range results.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let (num, den) = (r.numer(), r.denom());
    if num.is_zero() {
        return 0.0;
    }
    let n = num.magnitude();
    let d = den.magnitude();
    let shift = 55 - (n.bits() as i64 - d.bits() as i64);
    let (q, rem) = if shift >= 0 {
        (n << shift as usize).div_rem(d)
    } else {
        n.div_rem(&(d << (-shift) as usize))
    };
    let bits = q.bits() as i64;
    let exponent = bits - 1 - shift;
    if exponent < -1022 {
        return r.to_f64().unwrap_or(0.0);
    }
    if exponent > 1023 {
        return if num.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let extra = (bits - 53) as usize;
    let mut mantissa = (&q >> extra).to_u64().expect("53 bits");
    let round = q.bit(extra as u64 - 1);
    let sticky = !rem.is_zero() || (&q & ((BigUint::one() << (extra - 1)) - 1u32)) != BigUint::zero();
    let mut exponent = exponent;
    if round && (sticky || mantissa & 1 == 1) {
        mantissa += 1;
        if mantissa == 1 << 53 {
            mantissa >>= 1;
            exponent += 1;
        }
    }
    let value = mantissa as f64 * 2f64.powi((exponent - 52) as i32);
    if num.is_negative() {
        -value
    } else {
        value
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.25"` or
/// `"1.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((mantissa, exp)) = text.split_once(['e', 'E']) {
        let base = parse_rational(mantissa)?;
        if mantissa.contains('/') {
            return None;
        }
        let exp: i32 = exp.parse().ok()?;
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), exp.unsigned_abs() as usize));
        return Some(if exp >= 0 { base * scale } else { base / scale });
    }
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let mut num: BigInt = digits.parse().ok()?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        return Some(BigRational::new(num, den));
    }
    let n: BigInt = text.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents plus the best semiconvergent).
pub fn limit_denominator(x: f64, max_den: u64) -> Option<BigRational> {
    let exact = BigRational::from_f64(x)?;
    if *exact.denom() <= BigInt::from(max_den) {
        return Some(exact);
    }
    let max_den = BigInt::from(max_den);
    let zero = BigInt::from(0);
    let one = BigInt::from(1);
    let (mut p0, mut q0, mut p1, mut q1) = (zero.clone(), one.clone(), one.clone(), zero.clone());
    let (mut n, mut d) = (exact.numer().clone(), exact.denom().clone());
    loop {
        let a = num_integer::Integer::div_floor(&n, &d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let rem = &n - &a * &d;
        n = std::mem::replace(&mut d, rem);
        if d == zero {
            break;
        }
    }
    let k = (&max_den - &q0) / &q1;
    let bound1 = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let bound2 = BigRational::new(p1, q1);
    let d1 = (&bound1 - &exact).abs();
    let d2 = (&bound2 - &exact).abs();
    Some(if d2 <= d1 { bound2 } else { bound1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/3"), Some(q(1, 3)));
        assert_eq!(parse_rational(" 4 "), Some(q(4, 1)));
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1.5e-3"), Some(q(3, 2000)));
        assert_eq!(parse_rational("2E2"), Some(q(200, 1)));
    }

    #[test]
    fn decimal_to_f64_is_correctly_rounded() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5000 {
            let x: f64 = rng.gen::<f64>() * 10f64.powi(rng.gen_range(-30..30));
            let text = format!("{x:.20e}");
            let want: f64 = text.parse().unwrap();
            assert_eq!(rational_to_f64(&parse_rational(&text).unwrap()), want, "{text}");
            assert_eq!(f64::from_rational(&x.to_rational().unwrap()), x);
        }
        assert_eq!(rational_to_f64(&q(-1, 3)), -1.0 / 3.0);
        assert_eq!(rational_to_f64(&q(0, 3)), 0.0);
    }

    #[test]
    fn limit_denominator_recovers_simple_fractions() {
        assert_eq!(limit_denominator(1.0 / 3.0, 1_000_000), Some(q(1, 3)));
        assert_eq!(limit_denominator(0.5, 10), Some(q(1, 2)));
        assert_eq!(limit_denominator(std::f64::consts::PI, 1000), Some(q(355, 113)));
        assert_eq!(limit_denominator(2.0 / 7.0 + 1e-12, 1_000_000), Some(q(2, 7)));
    }

    #[test]
    fn float_to_rational_is_exact() {
        assert_eq!(0.375f64.to_rational(), Some(q(3, 8)));
        assert_eq!(<f64 as Scalar>::from_rational(&q(1, 4)), 0.25);
    }
}
