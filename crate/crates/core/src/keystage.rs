//! Tier 1: byte packing and the salted key stage.
//!
//! Two key-stage modes exist. `TextbookRsa` is unpadded RSA over a salted
//! block. `PaperScalar` multiplies by `salt * factor` and nothing else. It
//! is linear and is **not encryption**; it exists only to reproduce the
//! worked reference numbers.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gen_prime, is_probable_prime, mod_inverse, mod_pow, DEFAULT_MR_ROUNDS};

/// Default size of each RSA prime produced by [`generate_keypair`] callers
/// such as the CLI (the modulus is twice this).
pub const DEFAULT_PRIME_BITS: u64 = 2048;

/// Multiplier that reproduces the reference chain for `PaperScalar`.
pub const PAPER_SCALAR_FACTOR: u32 = 40;

/// RSA key material. All values are kept, including the factors, since the
/// same object serves both ends of a trusted-party deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyMaterial {
    pub key_id: String,
    #[serde(with = "crate::serde_dec")]
    pub p: BigUint,
    #[serde(with = "crate::serde_dec")]
    pub q: BigUint,
    #[serde(with = "crate::serde_dec")]
    pub n: BigUint,
    #[serde(with = "crate::serde_dec")]
    pub phi: BigUint,
    #[serde(with = "crate::serde_dec")]
    pub e: BigUint,
    #[serde(with = "crate::serde_dec")]
    pub d: BigUint,
    /// Bit length of the modulus `n`.
    pub bits: u64,
}

impl KeyMaterial {
    /// Re-checks every structural invariant; used when loading keys from disk.
    pub fn validate(&self) -> Result<()> {
        let one = BigUint::one();
        if self.p == self.q {
            return Err(Error::BadKey("p and q must differ".into()));
        }
        if self.n != &self.p * &self.q {
            return Err(Error::BadKey("n != p*q".into()));
        }
        if self.phi != (&self.p - &one) * (&self.q - &one) {
            return Err(Error::BadKey("phi != (p-1)(q-1)".into()));
        }
        if !(&self.e * &self.d % &self.phi).is_one() {
            return Err(Error::BadKey("e*d is not 1 mod phi".into()));
        }
        if self.bits != self.n.bits() {
            return Err(Error::BadKey("bits does not match n".into()));
        }
        Ok(())
    }
}

/// Builds key material from two primes and a private exponent `d`,
/// deriving `e = d^-1 mod phi`.
pub fn make_keypair(key_id: &str, p: &BigUint, q: &BigUint, d: &BigUint) -> Result<KeyMaterial> {
    for (name, v) in [("p", p), ("q", q)] {
        if !is_probable_prime(v, DEFAULT_MR_ROUNDS) {
            return Err(Error::NotPrime(format!("{name} = {v}")));
        }
    }
    if p == q {
        return Err(Error::BadKey("p and q must differ".into()));
    }
    let one = BigUint::one();
    let n = p * q;
    let phi = (p - &one) * (q - &one);
    if *d <= one || *d >= phi {
        return Err(Error::BadKey(format!("d must satisfy 1 < d < phi = {phi}")));
    }
    let e = mod_inverse(d, &phi)?;
    Ok(KeyMaterial {
        key_id: key_id.to_owned(),
        p: p.clone(),
        q: q.clone(),
        bits: n.bits(),
        n,
        phi,
        e,
        d: d.clone(),
    })
}

/// Generates a key with two `prime_bits`-bit primes, deterministic in `seed`.
/// The public exponent is the first of 65537, 257, 17, 5, 3 that is coprime
/// with and smaller than phi.
pub fn generate_keypair(key_id: &str, prime_bits: u64, seed: &[u8]) -> Result<KeyMaterial> {
    let p = gen_prime(prime_bits, &[seed, b"/p"].concat());
    let mut attempt = 0u32;
    loop {
        let q_seed = [seed, b"/q/", &attempt.to_be_bytes()].concat();
        attempt += 1;
        let q = gen_prime(prime_bits, &q_seed);
        if q == p {
            continue;
        }
        let phi = (&p - 1u32) * (&q - 1u32);
        let e = [65537u32, 257, 17, 5, 3]
            .into_iter()
            .map(BigUint::from)
            .find(|e| *e < phi && e.gcd(&phi).is_one());
        let Some(e) = e else { continue };
        let d = mod_inverse(&e, &phi)?;
        if d <= BigUint::one() {
            continue;
        }
        return make_keypair(key_id, &p, &q, &d);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier1Mode {
    TextbookRsa,
    PaperScalar,
}

/// How bytes become a decimal or binary integer before the key stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackMode {
    /// Each byte's decimal value with no padding. Not uniquely decodable.
    PaperVariable,
    /// Each byte as exactly three decimal digits.
    FixedWidth3,
    /// The bytes read as one big-endian integer.
    BigEndian,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier1Params {
    pub mode: Tier1Mode,
    pub salt: BigUint,
    /// Present iff `mode == PaperScalar`.
    pub scalar_factor: Option<BigUint>,
    pub pack_mode: PackMode,
}

impl Tier1Params {
    pub fn textbook(salt: impl Into<BigUint>, pack_mode: PackMode) -> Self {
        Tier1Params {
            mode: Tier1Mode::TextbookRsa,
            salt: salt.into(),
            scalar_factor: None,
            pack_mode,
        }
    }

    pub fn paper_scalar(
        salt: impl Into<BigUint>,
        factor: impl Into<BigUint>,
        pack_mode: PackMode,
    ) -> Self {
        Tier1Params {
            mode: Tier1Mode::PaperScalar,
            salt: salt.into(),
            scalar_factor: Some(factor.into()),
            pack_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.salt.is_zero() {
            return Err(Error::BadSpec("salt must be >= 1".into()));
        }
        match (self.mode, &self.scalar_factor) {
            (Tier1Mode::PaperScalar, Some(f)) if !f.is_zero() => Ok(()),
            (Tier1Mode::PaperScalar, Some(_)) => Err(Error::BadSpec("factor must be >= 1".into())),
            (Tier1Mode::PaperScalar, None) => {
                Err(Error::BadSpec("paper_scalar mode requires a factor".into()))
            }
            (Tier1Mode::TextbookRsa, Some(_)) => {
                Err(Error::BadSpec("textbook_rsa mode takes no factor".into()))
            }
            (Tier1Mode::TextbookRsa, None) => Ok(()),
        }
    }

    fn multiplier(&self) -> BigUint {
        match &self.scalar_factor {
            Some(f) if self.mode == Tier1Mode::PaperScalar => &self.salt * f,
            _ => self.salt.clone(),
        }
    }
}

/// Packs bytes into a decimal digit string.
///
/// # Panics
/// If called with [`PackMode::BigEndian`], which produces an integer rather
/// than a digit string; see [`pack_integer`].
pub fn ascii_pack(text: &[u8], mode: PackMode) -> String {
    match mode {
        PackMode::PaperVariable => text.iter().map(|b| b.to_string()).collect(),
        PackMode::FixedWidth3 => text.iter().map(|b| format!("{b:03}")).collect(),
        PackMode::BigEndian => panic!("big_endian packing has no digit-string form"),
    }
}

/// Bytes to the integer the key stage consumes.
pub fn pack_integer(bytes: &[u8], mode: PackMode) -> BigUint {
    match mode {
        PackMode::BigEndian => BigUint::from_bytes_be(bytes),
        _ => {
            let digits = ascii_pack(bytes, mode);
            if digits.is_empty() {
                BigUint::zero()
            } else {
                digits.parse().expect("ascii_pack emits decimal digits")
            }
        }
    }
}

/// Inverse of [`pack_integer`] given the original byte length. Fails for
/// `PaperVariable`, which is not decodable.
pub fn unpack_integer(value: &BigUint, len: usize, mode: PackMode) -> Result<Vec<u8>> {
    match mode {
        PackMode::BigEndian => {
            let raw = if value.is_zero() {
                Vec::new()
            } else {
                value.to_bytes_be()
            };
            if raw.len() > len {
                return Err(Error::BlockTooLarge(format!(
                    "block value needs {} bytes, envelope says {len}",
                    raw.len()
                )));
            }
            let mut out = vec![0u8; len - raw.len()];
            out.extend_from_slice(&raw);
            Ok(out)
        }
        PackMode::FixedWidth3 => {
            if len == 0 && value.is_zero() {
                return Ok(Vec::new());
            }
            let s = value.to_str_radix(10);
            let width = 3 * len;
            if s.len() > width {
                return Err(Error::BlockTooLarge(format!(
                    "packed value has {} digits, expected at most {width}",
                    s.len()
                )));
            }
            let padded = format!("{s:0>width$}");
            padded
                .as_bytes()
                .chunks(3)
                .map(|c| {
                    let v: u32 = std::str::from_utf8(c).unwrap().parse().unwrap();
                    u8::try_from(v).map_err(|_| Error::BadDigit(format!("byte value {v} > 255")))
                })
                .collect()
        }
        PackMode::PaperVariable => Err(Error::BadSpec(
            "paper_variable packing is not uniquely decodable".into(),
        )),
    }
}

pub fn tier1_encrypt(m: &BigUint, key: &KeyMaterial, params: &Tier1Params) -> Result<BigUint> {
    params.validate()?;
    match params.mode {
        Tier1Mode::PaperScalar => Ok(m * params.multiplier()),
        Tier1Mode::TextbookRsa => {
            let salted = m * &params.salt;
            if salted >= key.n {
                return Err(Error::BlockTooLarge(format!(
                    "m*salt has {} bits, modulus has {}",
                    salted.bits(),
                    key.bits
                )));
            }
            mod_pow(&salted, &key.e, &key.n)
        }
    }
}

pub fn tier1_decrypt(c: &BigUint, key: &KeyMaterial, params: &Tier1Params) -> Result<BigUint> {
    params.validate()?;
    let (salted, divisor) = match params.mode {
        Tier1Mode::PaperScalar => (c.clone(), params.multiplier()),
        Tier1Mode::TextbookRsa => {
            if *c >= key.n {
                return Err(Error::BlockTooLarge(
                    "ciphertext is not below the modulus".into(),
                ));
            }
            (mod_pow(c, &key.d, &key.n)?, params.salt.clone())
        }
    };
    let (m, rem) = salted.div_rem(&divisor);
    if !rem.is_zero() {
        return Err(Error::NotDivisible(format!(
            "{salted} mod {divisor} = {rem}"
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn toy_key() -> KeyMaterial {
        make_keypair("toy", &big(11), &big(13), &big(7)).unwrap()
    }

    #[test]
    fn keypair_from_small_primes() {
        let k = toy_key();
        assert_eq!(k.n, big(143));
        assert_eq!(k.phi, big(120));
        assert_eq!(k.e, big(103));
        assert_eq!(k.bits, 8);
        k.validate().unwrap();
    }

    #[test]
    fn keypair_rejections() {
        // d = 3 shares a factor with phi = 120.
        let err = make_keypair("k", &big(11), &big(13), &big(3)).unwrap_err();
        assert_eq!(err.code(), "ERR_NOT_COPRIME");
        assert!(make_keypair("k", &big(11), &big(11), &big(7)).is_err());
        let err = make_keypair("k", &big(12), &big(13), &big(7)).unwrap_err();
        assert_eq!(err.code(), "ERR_NOT_PRIME");
        assert!(make_keypair("k", &big(11), &big(13), &big(1)).is_err());
        assert!(make_keypair("k", &big(11), &big(13), &big(120)).is_err());
    }

    #[test]
    fn packing() {
        assert_eq!(ascii_pack(b"HELLO", PackMode::PaperVariable), "7269767679");
        assert_eq!(
            ascii_pack(b"HELLO", PackMode::FixedWidth3),
            "072069076076079"
        );
        assert_eq!(ascii_pack(b"", PackMode::FixedWidth3), "");
        // paper_variable collides; fixed_width3 does not.
        assert_eq!(
            ascii_pack(&[7, 27], PackMode::PaperVariable),
            ascii_pack(&[72, 7], PackMode::PaperVariable)
        );
        assert_ne!(
            ascii_pack(&[7, 27], PackMode::FixedWidth3),
            ascii_pack(&[72, 7], PackMode::FixedWidth3)
        );
    }

    #[test]
    fn unpack_restores_leading_zeros() {
        for mode in [PackMode::BigEndian, PackMode::FixedWidth3] {
            let data = [0u8, 0, 7, 255, 0];
            let v = pack_integer(&data, mode);
            assert_eq!(unpack_integer(&v, data.len(), mode).unwrap(), data);
            assert_eq!(
                unpack_integer(&BigUint::zero(), 0, mode).unwrap(),
                Vec::<u8>::new()
            );
        }
        assert!(unpack_integer(&big(256), 1, PackMode::BigEndian).is_err());
        assert!(unpack_integer(&big(256), 1, PackMode::FixedWidth3).is_err());
        assert!(unpack_integer(&big(1), 1, PackMode::PaperVariable).is_err());
    }

    #[test]
    fn paper_scalar_chain() {
        let k = toy_key();
        let params = Tier1Params::paper_scalar(34u32, 40u32, PackMode::PaperVariable);
        let m: BigUint = "7269767679".parse().unwrap();
        assert_eq!(&m * 34u32, "247172101086".parse().unwrap());
        let c = tier1_encrypt(&m, &k, &params).unwrap();
        assert_eq!(c, "9886884043440".parse().unwrap());
        assert_eq!(tier1_decrypt(&c, &k, &params).unwrap(), m);
        let err = tier1_decrypt(&(c + 1u32), &k, &params).unwrap_err();
        assert_eq!(err.code(), "ERR_NOT_DIVISIBLE");

        let identity = Tier1Params::paper_scalar(1u32, 1u32, PackMode::BigEndian);
        assert_eq!(tier1_encrypt(&big(99), &k, &identity).unwrap(), big(99));
        assert_eq!(tier1_decrypt(&big(99), &k, &identity).unwrap(), big(99));
    }

    #[test]
    fn textbook_small_vectors() {
        let k = toy_key();
        let params = Tier1Params::textbook(1u32, PackMode::BigEndian);
        // e = 103 here; 5^103 mod 143 = 125.
        let c = tier1_encrypt(&big(5), &k, &params).unwrap();
        assert_eq!(c, big(125));
        assert_eq!(tier1_decrypt(&c, &k, &params).unwrap(), big(5));

        // Roles swapped: d = 103 gives public exponent 7, and 5^7 mod 143 = 47.
        let swapped = make_keypair("s", &big(11), &big(13), &big(103)).unwrap();
        assert_eq!(swapped.e, big(7));
        assert_eq!(tier1_encrypt(&big(5), &swapped, &params).unwrap(), big(47));

        let salted = Tier1Params::textbook(3u32, PackMode::BigEndian);
        let err = tier1_encrypt(&big(48), &k, &salted).unwrap_err();
        assert_eq!(err.code(), "ERR_BLOCK_TOO_LARGE");
        let c = tier1_encrypt(&big(47), &k, &salted).unwrap();
        assert_eq!(tier1_decrypt(&c, &k, &salted).unwrap(), big(47));
    }

    #[test]
    fn textbook_decrypt_detects_unsalted_value() {
        let k = toy_key();
        let salted = Tier1Params::textbook(2u32, PackMode::BigEndian);
        // Some residue must decrypt to an odd value.
        let bad = (0u64..143)
            .map(big)
            .find(|c| tier1_decrypt(c, &k, &salted).is_err())
            .unwrap();
        assert_eq!(
            tier1_decrypt(&bad, &k, &salted).unwrap_err().code(),
            "ERR_NOT_DIVISIBLE"
        );
    }

    #[test]
    fn params_validation() {
        let mut p = Tier1Params::textbook(0u32, PackMode::BigEndian);
        assert!(p.validate().is_err());
        p.salt = big(1);
        p.scalar_factor = Some(big(2));
        assert!(p.validate().is_err());
        p.mode = Tier1Mode::PaperScalar;
        assert!(p.validate().is_ok());
        p.scalar_factor = None;
        assert!(p.validate().is_err());
    }

    #[test]
    fn generated_keys_hold_invariants() {
        for bits in [8u64, 16, 32, 64] {
            let k = generate_keypair("g", bits, format!("seed{bits}").as_bytes()).unwrap();
            k.validate().unwrap();
            assert_eq!(k.p.bits(), bits);
            assert_eq!(k.q.bits(), bits);
        }
        assert_eq!(
            generate_keypair("g", 64, b"x").unwrap(),
            generate_keypair("g", 64, b"x").unwrap()
        );
    }
}
