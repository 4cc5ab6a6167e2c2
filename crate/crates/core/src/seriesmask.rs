//! Tier 3: truncated Maclaurin-series masking in exact integer form.
//!
//! A truncated series `p(X)` is scaled by its largest factorial `L` so that
//! `q(X) = L * p(X)` has integer coefficients. The masked value is `q(X)`
//! itself, which keeps the step invertible: decoding solves `q(X) = T` over
//! the non-negative integers.
//!
//! The solver splits the half-line at `B`, the Cauchy root bound of `q'`.
//! Beyond `B` the polynomial is strictly monotone, so a galloping search
//! seeded by an integer root estimate finds the only candidate. Inside
//! `[0, B]` every real root is bracketed by recursing down the derivative
//! chain: between consecutive critical brackets a polynomial is monotone and
//! bisection on integers suffices.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SeriesKind {
    Sin,
    Cos,
    Exp,
}

pub const DEFAULT_SERIES_TERMS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct SeriesSpec {
    pub kind: SeriesKind,
    #[serde(rename = "n")]
    pub n_terms: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    kind: SeriesKind,
    n: u32,
}

impl TryFrom<RawSeries> for SeriesSpec {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<SeriesSpec> {
        SeriesSpec::new(raw.kind, raw.n)
    }
}

impl SeriesSpec {
    pub fn new(kind: SeriesKind, n_terms: u32) -> Result<SeriesSpec> {
        if n_terms == 0 {
            return Err(Error::BadSpec("series needs N >= 1".into()));
        }
        Ok(SeriesSpec { kind, n_terms })
    }
}

/// Integer polynomial `q(X) = L * p(X)`; `coefficients[i]` multiplies `X^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPolynomial {
    pub coefficients: Vec<BigInt>,
    pub scale: BigInt,
}

impl MaskPolynomial {
    pub fn eval(&self, x: &BigInt) -> BigInt {
        horner(&self.coefficients, x)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn mask_coeffs(spec: &SeriesSpec) -> MaskPolynomial {
    let n = spec.n_terms;
    let (degree, scale) = match spec.kind {
        SeriesKind::Sin => (2 * n + 1, factorial(2 * n + 1)),
        SeriesKind::Cos => (2 * n, factorial(2 * n)),
        SeriesKind::Exp => (n, factorial(n)),
    };
    let mut coefficients = vec![BigInt::zero(); degree as usize + 1];
    for k in 0..=n {
        let (power, sign) = match spec.kind {
            SeriesKind::Sin => (2 * k + 1, k % 2 == 1),
            SeriesKind::Cos => (2 * k, k % 2 == 1),
            SeriesKind::Exp => (k, false),
        };
        let c = &scale / factorial(power);
        coefficients[power as usize] = if sign { -c } else { c };
    }
    MaskPolynomial {
        coefficients,
        scale,
    }
}

/// The unscaled truncated series evaluated exactly, term by term.
pub fn series_value(x: &BigInt, spec: &SeriesSpec) -> BigRational {
    let term = |power: u32, negative: bool| {
        let r = BigRational::new(x.pow(power), factorial(power));
        if negative {
            -r
        } else {
            r
        }
    };
    (0..=spec.n_terms)
        .map(|k| match spec.kind {
            SeriesKind::Sin => term(2 * k + 1, k % 2 == 1),
            SeriesKind::Cos => term(2 * k, k % 2 == 1),
            SeriesKind::Exp => term(k, false),
        })
        .fold(BigRational::zero(), |acc, t| acc + t)
}

fn horner(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    coeffs
        .iter()
        .rev()
        .fold(BigInt::zero(), |acc, c| acc * x + c)
}

fn derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    if coeffs.len() <= 1 {
        return vec![BigInt::zero()];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i)
        .collect()
}

fn trim(mut coeffs: Vec<BigInt>) -> Vec<BigInt> {
    while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    coeffs
}

/// Integer `B` with every real root strictly inside `(-B, B)`; zero for
/// non-zero constants.
fn cauchy_bound(coeffs: &[BigInt]) -> BigInt {
    let lead = coeffs.last().expect("non-empty").abs();
    if coeffs.len() == 1 {
        return BigInt::zero();
    }
    let max = coeffs[..coeffs.len() - 1]
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_default();
    BigInt::one() + max.div_ceil(&lead)
}

fn sign(x: &BigInt) -> Sign {
    x.sign()
}

/// Integers `t` in `[lo, hi]` such that every real root of `coeffs` within
/// `[lo, hi]` lies in some `[t, t + 1]`. May over-report.
fn root_brackets(coeffs: &[BigInt], lo: &BigInt, hi: &BigInt) -> Vec<BigInt> {
    if coeffs.len() <= 1 {
        return Vec::new();
    }
    let hi = hi.min(&cauchy_bound(coeffs)).clone();
    if *lo > hi {
        return Vec::new();
    }
    let critical = root_brackets(&trim(derivative(coeffs)), lo, &hi);

    let mut out = critical.clone();
    let mut start = lo.clone();
    let mut segments = Vec::new();
    for t in &critical {
        if start <= *t {
            segments.push((start.clone(), t.clone()));
        }
        start = std::cmp::max(t + BigInt::one(), start);
    }
    if start <= hi {
        segments.push((start, hi));
    }

    for (a, b) in segments {
        let fa = horner(coeffs, &a);
        let fb = horner(coeffs, &b);
        if fa.is_zero() {
            out.push(a.clone());
        }
        if fb.is_zero() {
            out.push(b.clone());
        }
        if fa.is_zero() || fb.is_zero() || sign(&fa) == sign(&fb) {
            continue;
        }
        out.push(bisect(coeffs, a, b, sign(&fa)));
    }
    out.sort();
    out.dedup();
    out
}

/// `f(a)` has sign `sa`, `f(b)` the opposite, `a < b`, `f` monotone between.
/// Returns an integer `t` with the root in `[t, t + 1]`.
fn bisect(coeffs: &[BigInt], mut a: BigInt, mut b: BigInt, sa: Sign) -> BigInt {
    while &b - &a > BigInt::one() {
        let mid: BigInt = (&a + &b) >> 1;
        let fm = horner(coeffs, &mid);
        if fm.is_zero() {
            return mid;
        }
        if sign(&fm) == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// Searches `[start, inf)`, where `coeffs` is strictly monotone, for an
/// integer root.
fn monotone_tail_root(coeffs: &[BigInt], start: &BigInt) -> Option<BigInt> {
    let f = |x: &BigInt| horner(coeffs, x);
    let f_start = f(start);
    if f_start.is_zero() {
        return Some(start.clone());
    }
    let degree = coeffs.len() as u32 - 1;
    let lead = coeffs.last().unwrap();
    // At +inf, f has the sign of its leading coefficient.
    if sign(&f_start) == sign(lead) {
        return None;
    }
    // |f| ~ |lead| x^d, so the d-th root of |f(0)| / |lead| lands close to
    // the crossing for large arguments.
    let estimate = BigInt::from_biguint(
        Sign::Plus,
        (coeffs[0].magnitude() / lead.magnitude()).nth_root(degree),
    )
    .max(start.clone());

    let f_est = f(&estimate);
    if f_est.is_zero() {
        return Some(estimate);
    }
    let (mut a, mut b);
    if sign(&f_est) == sign(&f_start) {
        // Crossing lies to the right.
        a = estimate;
        let mut step = BigInt::one();
        loop {
            b = &a + &step;
            let fb = f(&b);
            if fb.is_zero() {
                return Some(b);
            }
            if sign(&fb) != sign(&f_start) {
                break;
            }
            a = b;
            step <<= 1;
        }
    } else {
        b = estimate;
        let mut step = BigInt::one();
        loop {
            a = (&b - &step).max(start.clone());
            let fa = f(&a);
            if fa.is_zero() {
                return Some(a);
            }
            if sign(&fa) == sign(&f_start) {
                break;
            }
            b = a;
            step <<= 1;
        }
    }
    let t = bisect(coeffs, a, b, sign(&f_start));
    [t.clone(), t + 1].into_iter().find(|x| f(x).is_zero())
}

/// Non-negative integer roots of an integer polynomial, ascending.
fn nonnegative_integer_roots(coeffs: &[BigInt]) -> Vec<BigInt> {
    let coeffs = trim(coeffs.to_vec());
    if coeffs.len() == 1 {
        assert!(!coeffs[0].is_zero(), "zero polynomial has every root");
        return Vec::new();
    }
    let bound = cauchy_bound(&trim(derivative(&coeffs)));
    let zero = BigInt::zero();
    let mut roots: Vec<BigInt> = root_brackets(&coeffs, &zero, &bound)
        .into_iter()
        .flat_map(|b| [b.clone(), b + 1])
        .filter(|x| *x >= zero && *x <= bound && horner(&coeffs, x).is_zero())
        .collect();
    if let Some(r) = monotone_tail_root(&coeffs, &bound) {
        roots.push(r);
    }
    roots.sort();
    roots.dedup();
    roots
}

/// Every non-negative integer `X` with `q(X) = t`, ascending.
pub fn mask_preimages(t: &BigInt, spec: &SeriesSpec) -> Vec<BigUint> {
    let mut shifted = mask_coeffs(spec).coefficients;
    shifted[0] -= t;
    nonnegative_integer_roots(&shifted)
        .into_iter()
        .map(|r| r.to_biguint().expect("non-negative"))
        .collect()
}

fn unique_preimage(mut roots: Vec<BigUint>, t: &BigInt) -> Result<BigUint> {
    match roots.len().cmp(&1) {
        Ordering::Less => Err(Error::NoPreimage(format!(
            "no non-negative integer maps to {t}"
        ))),
        Ordering::Equal => Ok(roots.pop().unwrap()),
        Ordering::Greater => Err(Error::AmbiguousMask(format!(
            "{} preimages of {t}: {:?}",
            roots.len(),
            roots
                .iter()
                .take(4)
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
        ))),
    }
}

pub fn mask_decode(t: &BigInt, spec: &SeriesSpec) -> Result<BigUint> {
    unique_preimage(mask_preimages(t, spec), t)
}

/// Masks `x`, refusing when `x` is not the unique preimage of the result.
pub fn mask_encode(x: &BigUint, spec: &SeriesSpec) -> Result<BigInt> {
    let t = mask_coeffs(spec).eval(&BigInt::from(x.clone()));
    let roots = mask_preimages(&t, spec);
    debug_assert!(roots.contains(x), "solver lost the known preimage");
    if roots.len() == 1 && roots[0] == *x {
        Ok(t)
    } else {
        Err(Error::AmbiguousMask(format!(
            "{x} shares its mask value with {:?}",
            roots
                .iter()
                .filter(|r| *r != x)
                .take(4)
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&c| BigInt::from(c)).collect()
    }

    fn spec(kind: SeriesKind, n: u32) -> SeriesSpec {
        SeriesSpec::new(kind, n).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let sin1 = mask_coeffs(&spec(SeriesKind::Sin, 1));
        assert_eq!(sin1.coefficients, ints(&[0, 6, 0, -1]));
        assert_eq!(sin1.scale, BigInt::from(6));
        let exp2 = mask_coeffs(&spec(SeriesKind::Exp, 2));
        assert_eq!(exp2.coefficients, ints(&[2, 2, 1]));
        assert_eq!(exp2.scale, BigInt::from(2));
        let cos1 = mask_coeffs(&spec(SeriesKind::Cos, 1));
        assert_eq!(cos1.coefficients, ints(&[2, 0, -1]));
        let sin3 = mask_coeffs(&spec(SeriesKind::Sin, 3));
        assert_eq!(sin3.coefficients, ints(&[0, 5040, 0, -840, 0, 42, 0, -1]));
    }

    #[test]
    fn encode_decode_examples() {
        let s = spec(SeriesKind::Sin, 1);
        assert_eq!(mask_encode(&0u32.into(), &s).unwrap(), BigInt::zero());
        assert_eq!(mask_encode(&1u32.into(), &s).unwrap(), BigInt::from(5));
        assert_eq!(mask_decode(&BigInt::zero(), &s).unwrap(), 0u32.into());
        assert_eq!(mask_decode(&BigInt::from(5), &s).unwrap(), 1u32.into());
        assert_eq!(
            mask_decode(&BigInt::from(7), &s).unwrap_err().code(),
            "ERR_NO_PREIMAGE"
        );
    }

    #[test]
    fn ten_million_sine_vector() {
        // Exact value of 5040 * (X - X^3/3! + X^5/5! - X^7/7!) at X = 10205099.
        let expected: BigInt = "-11527113124319957884045838595621726389301909306941"
            .parse()
            .unwrap();
        let s = spec(SeriesKind::Sin, 3);
        let x = BigUint::from(10_205_099u32);
        assert_eq!(mask_encode(&x, &s).unwrap(), expected);
        assert_eq!(mask_decode(&expected, &s).unwrap(), x);
    }

    #[test]
    fn ambiguity_is_reported() {
        // (x - 3)(x - 4)(x - 10) = x^3 - 17x^2 + 82x - 120
        let roots = nonnegative_integer_roots(&ints(&[-120, 82, -17, 1]));
        assert_eq!(roots, ints(&[3, 4, 10]));
        let as_uint = roots.iter().map(|r| r.to_biguint().unwrap()).collect();
        let err = unique_preimage(as_uint, &BigInt::zero()).unwrap_err();
        assert_eq!(err.code(), "ERR_AMBIGUOUS_MASK");
        // Roots past the critical region: (x - 2)(x - 1000).
        assert_eq!(
            nonnegative_integer_roots(&ints(&[2000, -1002, 1])),
            ints(&[2, 1000])
        );
        // Non-integer and negative roots are dropped.
        assert!(nonnegative_integer_roots(&ints(&[-2, 0, 1])).is_empty());
        assert_eq!(nonnegative_integer_roots(&ints(&[-7, -6, 1])), ints(&[7]));
        let s1 = spec(SeriesKind::Sin, 1);
        assert_eq!(
            mask_preimages(&BigInt::from(-9), &s1),
            vec![BigUint::from(3u32)]
        );
    }

    #[test]
    fn root_brackets_cover_known_roots() {
        // (x - 3)(x - 4)(x - 10) = x^3 - 17x^2 + 82x - 120
        let p = ints(&[-120, 82, -17, 1]);
        let b = root_brackets(&p, &BigInt::zero(), &BigInt::from(1000));
        for r in [3, 4, 10] {
            let r = BigInt::from(r);
            assert!(
                b.iter().any(|t| *t == r || t + 1 == r),
                "{r} not bracketed: {b:?}"
            );
        }
        // Double root at 5: (x - 5)^2 = x^2 - 10x + 25.
        let p = ints(&[25, -10, 1]);
        let b = root_brackets(&p, &BigInt::zero(), &BigInt::from(100));
        assert!(b
            .iter()
            .any(|t| *t == BigInt::from(5) || *t == BigInt::from(4)));
    }

    #[test]
    fn exp_spec_json() {
        let s: SeriesSpec = serde_json::from_str(r#"{"kind":"EXP","n":3}"#).unwrap();
        assert_eq!(s, spec(SeriesKind::Exp, 3));
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"kind":"EXP","n":3}"#
        );
        assert!(serde_json::from_str::<SeriesSpec>(r#"{"kind":"TAN","n":3}"#).is_err());
        assert!(serde_json::from_str::<SeriesSpec>(r#"{"kind":"SIN","n":0}"#).is_err());
    }

    #[test]
    fn large_inputs_roundtrip() {
        let x = (BigUint::one() << 4096u32) - 12345u32;
        for kind in [SeriesKind::Sin, SeriesKind::Cos, SeriesKind::Exp] {
            let s = spec(kind, 3);
            let t = mask_encode(&x, &s).unwrap();
            assert_eq!(mask_decode(&t, &s).unwrap(), x);
            assert_eq!(
                mask_decode(&(t + 1), &s).unwrap_err().code(),
                "ERR_NO_PREIMAGE"
            );
        }
    }

    fn any_spec() -> impl Strategy<Value = SeriesSpec> {
        (
            prop::sample::select(vec![SeriesKind::Sin, SeriesKind::Cos, SeriesKind::Exp]),
            1u32..=4,
        )
            .prop_map(|(k, n)| spec(k, n))
    }

    proptest! {
        #[test]
        fn scaled_polynomial_matches_rational_series(x in any::<i64>(), s in any_spec()) {
            let x = BigInt::from(x);
            let q = mask_coeffs(&s);
            let exact = series_value(&x, &s) * BigRational::from_integer(q.scale.clone());
            prop_assert!(exact.is_integer());
            prop_assert_eq!(exact.to_integer(), q.eval(&x));
        }

        #[test]
        fn tail_is_monotone(s in any_spec(), a in 0u64..1_000_000, b in 0u64..1_000_000) {
            let q = mask_coeffs(&s);
            let bound = cauchy_bound(&trim(derivative(&q.coefficients)));
            let x1 = &bound + BigInt::from(a.max(b) + 1);
            let x2 = &bound + BigInt::from(a.min(b));
            let lead_sign = q.coefficients.last().unwrap().sign();
            prop_assert_eq!((q.eval(&x1) - q.eval(&x2)).sign(), lead_sign);
        }

        #[test]
        fn random_large_roundtrip(bytes in proptest::collection::vec(any::<u8>(), 0..64), s in any_spec()) {
            let x = BigUint::from_bytes_be(&bytes);
            if let Ok(t) = mask_encode(&x, &s) {
                prop_assert_eq!(mask_decode(&t, &s).unwrap(), x);
            }
        }
    }
}
