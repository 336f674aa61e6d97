//! Numerical evaluation of the per-interval approximation-ratio bound
//!
//! ```text
//! ratio(l) = 1 + l * sum_{t=1}^{l-1} 1/(t(t+1)) * e^t / t^t * int_{l-1}^{l} e^{-x} x^t dx
//! ```
//!
//! and of the closed-form tail bound `1 + 3 sqrt(2 pi) e^{13/12} / sqrt(l)`
//! used for `l >= 89`.
//!
//! The moment integrals are computed with the integration-by-parts recurrence
//! `I_t = [-e^{-x} x^t]_a^b + t I_{t-1}`, run on the normalised quantity
//! `S_t = e^a b^{-t} I_t`, which stays O(1) and contracts errors by `t/b < 1`
//! per step whenever `t < b`.

use num_traits::Float;

use crate::error::{Error, Result};

/// Largest interval index accepted by [`ratio_upper`].
pub const MAX_ELL: u32 = 200;
/// First interval index covered by the analytic tail bound.
pub const TAIL_START: u32 = 89;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow<F> {
    pub ell: u32,
    pub ratio_upper: F,
    pub tail_bound: Option<F>,
}

fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("representable constant")
}

/// `S_0..=S_t` with `S_s = e^a b^{-s} int_a^b e^{-x} x^s dx`.
fn normalised_moments<F: Float>(t: u32, a: F, b: F) -> Vec<F> {
    let mut out = Vec::with_capacity(t as usize + 1);
    out.push(-(a - b).exp_m1());
    if b == F::zero() {
        out.resize(t as usize + 1, F::zero());
        return out;
    }
    for s in 1..=t {
        let sf = cast::<F>(s as f64);
        let prev = out[s as usize - 1];
        out.push(boundary_term(s, a, b) + sf / b * prev);
    }
    out
}

/// `(a/b)^s - e^{a-b}`, formed as one `expm1` so nearby terms do not cancel.
fn boundary_term<F: Float>(s: u32, a: F, b: F) -> F {
    let gap = b - a;
    let log_ratio = (-gap / b).ln_1p();
    (-gap).exp() * (cast::<F>(s as f64) * log_ratio + gap).exp_m1()
}

fn check_interval<F: Float>(t: u32, a: F, b: F) -> Result<()> {
    if t > MAX_ELL {
        return Err(Error::Domain(format!("moment order {t} exceeds {MAX_ELL}")));
    }
    if !(a >= F::zero() && b >= a && b.is_finite()) {
        return Err(Error::Domain("need 0 <= a <= b < inf".into()));
    }
    Ok(())
}

/// `S_t` alone. Above `t > b` the upward recurrence amplifies rounding error,
/// so it runs downward from a high order instead (contracting by `b/s`).
fn normalised_moment<F: Float>(t: u32, a: F, b: F) -> F {
    let tf = cast::<F>(t as f64);
    if b == F::zero() {
        return F::zero();
    }
    if tf <= b + F::one() {
        return normalised_moments(t, a, b)[t as usize];
    }
    let mut top = t;
    let mut damping = F::one();
    while damping > cast(1e-20) && top < t + 100_000 {
        top += 1;
        damping = damping * b / cast::<F>(top as f64);
    }
    let mut s = F::zero();
    for order in ((t + 1)..=top).rev() {
        let of = cast::<F>(order as f64);
        s = (s - boundary_term(order, a, b)) * b / of;
    }
    s
}

/// `int_a^b e^{-x} x^t dx`. Overflows to infinity for very large `b^t`.
pub fn exp_moment_integral<F: Float>(t: u32, a: F, b: F) -> Result<F> {
    check_interval(t, a, b)?;
    Ok((-a).exp() * b.powi(t as i32) * normalised_moment(t, a, b))
}

/// `e^t / t^t * int_a^b e^{-x} x^t dx` for `t >= 1`, without overflow.
pub fn scaled_exp_moment<F: Float>(t: u32, a: F, b: F) -> Result<F> {
    check_interval(t, a, b)?;
    if t == 0 {
        return Err(Error::Domain("scaled moment needs t >= 1".into()));
    }
    Ok(scaled_from(t, a, b, normalised_moment(t, a, b)))
}

fn scaled_from<F: Float>(t: u32, a: F, b: F, s: F) -> F {
    let tf = cast::<F>(t as f64);
    (tf - a + tf * (b / tf).ln()).exp() * s
}

/// Value of the bound expression for a single interval index `ell`
/// (no outer maximum).
pub fn ratio_upper<F: Float>(ell: u32) -> Result<F> {
    if ell == 0 || ell > MAX_ELL {
        return Err(Error::Domain(format!("ell = {ell} outside 1..={MAX_ELL}")));
    }
    if ell == 1 {
        return Ok(F::one());
    }
    let lf = cast::<F>(ell as f64);
    let (a, b) = (lf - F::one(), lf);
    let moments = normalised_moments(ell - 1, a, b);
    let mut sum = F::zero();
    for t in 1..ell {
        let tf = cast::<F>(t as f64);
        let coef = F::one() / (tf * (tf + F::one()));
        sum = sum + coef * scaled_from(t, a, b, moments[t as usize]);
    }
    Ok(F::one() + lf * sum)
}

/// Rows `1..=l_max`; rows from [`TAIL_START`] on also carry the tail bound.
pub fn bound_table<F: Float>(l_max: u32) -> Result<Vec<BoundRow<F>>> {
    (1..=l_max)
        .map(|ell| {
            Ok(BoundRow {
                ell,
                ratio_upper: ratio_upper(ell)?,
                tail_bound: if ell >= TAIL_START { Some(tail_bound(ell)?) } else { None },
            })
        })
        .collect()
}

/// `(argmax, max)` of [`ratio_upper`] over `1..=l_max`.
pub fn max_ratio<F: Float>(l_max: u32) -> Result<(u32, F)> {
    let table = bound_table::<F>(l_max)?;
    let best = table
        .iter()
        .fold(None, |acc: Option<(u32, F)>, row| match acc {
            Some((_, v)) if v >= row.ratio_upper => acc,
            _ => Some((row.ell, row.ratio_upper)),
        });
    best.ok_or_else(|| Error::Domain("l_max must be >= 1".into()))
}

fn tail_constant<F: Float>() -> F {
    let two_pi = cast::<F>(2.0 * std::f64::consts::PI);
    cast::<F>(3.0) * two_pi.sqrt() * (cast::<F>(13.0) / cast::<F>(12.0)).exp()
}

/// `1 + 3 sqrt(2 pi) e^{13/12} / sqrt(ell)` for `ell >= 89`.
pub fn tail_bound<F: Float>(ell: u32) -> Result<F> {
    if ell < TAIL_START {
        return Err(Error::Domain(format!("tail bound needs ell >= {TAIL_START}")));
    }
    Ok(F::one() + tail_constant::<F>() / cast::<F>(ell as f64).sqrt())
}

/// The successive upper estimates used to derive [`tail_bound`] from
/// [`ratio_upper`]: moment bound, Stirling, regrouping, `sqrt(l/t) <= l/t`,
/// `(t+2)/t <= 3`, and the exponential series. Each entry should dominate
/// the previous one.
pub fn tail_chain<F: Float>(ell: u32) -> Result<[F; 7]> {
    if ell < 2 {
        return Err(Error::Domain("chain needs ell >= 2".into()));
    }
    let lf = cast::<F>(ell as f64);
    let two_pi = cast::<F>(2.0 * std::f64::consts::PI);
    let twelfth = cast::<F>(1.0 / 12.0);
    let (mut e1, mut e2, mut e3, mut e4, mut e5) = (F::zero(), F::zero(), F::zero(), F::zero(), F::zero());
    // ln((t+1)!) accumulated alongside t.
    let mut ln_fact_t = F::zero();
    for t in 1..ell {
        let tf = cast::<F>(t as f64);
        ln_fact_t = ln_fact_t + tf.ln();
        let ln_fact_t1 = ln_fact_t + (tf + F::one()).ln();
        let coef = F::one() / (tf * (tf + F::one()));
        // e^t/t^t * e^{-(l-1)} * l^t
        e1 = e1 + coef * (tf - tf * tf.ln() - (lf - F::one()) + tf * lf.ln()).exp();
        // sqrt(2 pi t) e^{1/(12t)} / t! * e^{-(l-1)} l^t
        e2 = e2 + coef * (two_pi * tf).sqrt() * (twelfth / tf - ln_fact_t - (lf - F::one()) + tf * lf.ln()).exp();
        // l^{t+1}/(t+1)! e^{-l}, the Poisson weight
        let poisson = ((tf + F::one()) * lf.ln() - ln_fact_t1 - lf).exp();
        e3 = e3 + poisson * (lf / tf).sqrt();
        e4 = e4 + poisson * lf / tf;
        e5 = e5 + poisson * lf / (tf + cast(2.0));
    }
    let e = F::one().exp();
    let root = two_pi.sqrt();
    let chain = [
        ratio_upper(ell)?,
        F::one() + lf * e1,
        F::one() + lf * e2,
        F::one() + root * twelfth.exp() * e / lf.sqrt() * e3,
        F::one() + root * (cast::<F>(13.0) / cast(12.0)).exp() / lf.sqrt() * e4,
        F::one() + cast::<F>(3.0) * root * (cast::<F>(13.0) / cast(12.0)).exp() / lf.sqrt() * e5,
        F::one() + tail_constant::<F>() / lf.sqrt(),
    ];
    Ok(chain)
}
