//! Big-integer helpers shared by every tier: modular arithmetic and seeded
//! prime generation.
//!
//! Nothing here is constant-time.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use num_rational::BigRational;

/// Default Miller–Rabin round count used for key generation.
pub const DEFAULT_MR_ROUNDS: u32 = 64;

const SMALL_BITS: u64 = 16;

/// `base^exp mod modulus`.
pub fn mod_pow(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::BadModulus);
    }
    Ok(base.modpow(exp, modulus))
}

/// Inverse of `a` modulo `modulus` by the extended Euclidean algorithm.
pub fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::BadModulus);
    }
    let m = BigInt::from(modulus.clone());
    let (mut old_r, mut r) = (BigInt::from(a % modulus), m.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
    }
    if !old_r.is_one() {
        return Err(Error::NotCoprime(format!(
            "gcd({a}, {modulus}) = {old_r}, no inverse exists"
        )));
    }
    let inv = old_s.mod_floor(&m);
    Ok(inv.to_biguint().expect("mod_floor result is non-negative"))
}

fn trial_division(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

const SMALL_PRIMES: [u32; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller–Rabin with `rounds` bases drawn from a generator seeded by `n`
/// itself, so the verdict for a given `(n, rounds)` is reproducible.
/// Values below 2^16 are decided exactly by trial division.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    if n.bits() <= SMALL_BITS {
        return trial_division(u64::try_from(n).expect("fits in 16 bits"));
    }
    if n.is_even() {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return false;
        }
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let twos = n_minus_one.trailing_zeros().expect("n - 1 is non-zero");
    let odd = &n_minus_one >> twos;

    let mut rng = ChaCha20Rng::from_seed(Sha256::digest(n.to_bytes_be()).into());
    let low = BigUint::from(2u32);
    'witness: for _ in 0..rounds.max(1) {
        let a = rng.gen_biguint_range(&low, &n_minus_one);
        let mut x = a.modpow(&odd, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..twos {
            x = x.modpow(&low, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// Deterministic generator for key material, keyed by an arbitrary seed.
pub fn seeded_rng(seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(Sha256::digest(seed).into())
}

/// Returns a probable prime with exactly `bits` bits and the top two bits
/// set, so a product of two such primes has exactly `2 * bits` bits. The
/// same seed always yields the same prime.
///
/// # Panics
/// If `bits < 8`.
pub fn gen_prime(bits: u64, seed: &[u8]) -> BigUint {
    assert!(bits >= 8, "prime size must be at least 8 bits");
    let mut rng = seeded_rng(seed);
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, DEFAULT_MR_ROUNDS) {
            return candidate;
        }
    }
}

/// Magnitude of a stage value that must be non-negative.
pub(crate) fn to_unsigned(x: &BigInt, what: &str) -> Result<BigUint> {
    match x.sign() {
        Sign::Minus => Err(Error::BadDigit(format!(
            "{what} must be non-negative, got {x}"
        ))),
        _ => Ok(x.magnitude().clone()),
    }
}
