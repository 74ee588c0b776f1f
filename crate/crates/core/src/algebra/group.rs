//! Prime-order multiplicative group backend: a subgroup of `Z_p^*` of prime
//! order `q` with generator `g`, acted on by `Z_q` exponents.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Parameters of a prime-order group: modulus `p`, subgroup order `q` with
/// `q | p - 1`, and a generator `g` of the order-`q` subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    /// Fixed byte width of serialized group elements (sized by `p`).
    elem_width: usize,
    /// Fixed byte width of serialized scalars (sized by `q`).
    scalar_width: usize,
}

/// An element of the order-`q` subgroup, kept in `[1, p-1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(BigUint);

/// An exponent in `Z_q`, kept in `[0, q-1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZqScalar(BigUint);

impl GroupParams {
    /// Validates and constructs group parameters: `p`, `q` prime,
    /// `q | p - 1`, `g != 1` and `g^q = 1 (mod p)`.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        let one = BigUint::one();
        if p <= BigUint::from(3u8) || !is_prime(&p) {
            return Err(Error::InvalidParams("p is not an odd prime".into()));
        }
        if !is_prime(&q) {
            return Err(Error::InvalidParams("q is not prime".into()));
        }
        if (&p - &one) % &q != BigUint::zero() {
            return Err(Error::InvalidParams("q does not divide p - 1".into()));
        }
        if g <= one || g >= p {
            return Err(Error::InvalidParams("g out of range".into()));
        }
        if g.modpow(&q, &p) != one {
            return Err(Error::InvalidParams("g^q != 1 mod p".into()));
        }
        let elem_width = ((p.bits() + 7) / 8) as usize;
        let scalar_width = ((q.bits() + 7) / 8) as usize;
        Ok(GroupParams { p, q, g, elem_width, scalar_width })
    }

    /// The tiny test group (p=23, q=11, g=2); every subgroup element is
    /// enumerable, which the distribution tests rely on.
    pub fn tiny_test_group() -> Self {
        GroupParams::new(BigUint::from(23u8), BigUint::from(11u8), BigUint::from(2u8))
            .expect("tiny group constants are valid")
    }

    /// A 2048-bit group with a 256-bit prime-order subgroup. The same values
    /// ship in `params/schnorr-2048.lsp`.
    pub fn schnorr_group_2048() -> Self {
        let p = BigUint::parse_bytes(P_2048_HEX.as_bytes(), 16).unwrap();
        let q = BigUint::parse_bytes(Q_2048_HEX.as_bytes(), 16).unwrap();
        let g = BigUint::parse_bytes(G_2048_HEX.as_bytes(), 16).unwrap();
        GroupParams::new(p, q, g).expect("embedded 2048-bit group constants are valid")
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// The generator as a group element.
    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    pub fn elem_width(&self) -> usize {
        self.elem_width
    }

    pub fn scalar_width(&self) -> usize {
        self.scalar_width
    }

    /// `base^e mod p`. Exponents live in `Z_q`, so the result stays in the
    /// subgroup whenever `base` does.
    pub fn exp(&self, base: &GroupElement, e: &ZqScalar) -> GroupElement {
        GroupElement(base.0.modpow(&e.0, &self.p))
    }

    /// Group operation (multiplication mod p).
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    /// Group inverse via Fermat: `a^(p-2) mod p`.
    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        let e = &self.p - BigUint::from(2u8);
        GroupElement(a.0.modpow(&e, &self.p))
    }

    /// Checks subgroup membership: `v` in `[1, p-1]` and `v^q = 1 mod p`.
    pub fn element(&self, v: BigUint) -> Result<GroupElement> {
        if v.is_zero() || v >= self.p {
            return Err(Error::Malformed("group element out of range"));
        }
        if v.modpow(&self.q, &self.p) != BigUint::one() {
            return Err(Error::Malformed("value is not in the order-q subgroup"));
        }
        Ok(GroupElement(v))
    }

    pub fn scalar(&self, v: BigUint) -> Result<ZqScalar> {
        if v >= self.q {
            return Err(Error::Malformed("scalar not reduced mod q"));
        }
        Ok(ZqScalar(v))
    }

    pub fn scalar_from_u64(&self, v: u64) -> ZqScalar {
        ZqScalar(BigUint::from(v) % &self.q)
    }

    pub fn scalar_zero(&self) -> ZqScalar {
        ZqScalar(BigUint::zero())
    }

    pub fn scalar_add(&self, a: &ZqScalar, b: &ZqScalar) -> ZqScalar {
        ZqScalar((&a.0 + &b.0) % &self.q)
    }

    pub fn scalar_sub(&self, a: &ZqScalar, b: &ZqScalar) -> ZqScalar {
        ZqScalar(((&self.q + &a.0) - &b.0) % &self.q)
    }

    pub fn scalar_mul(&self, a: &ZqScalar, b: &ZqScalar) -> ZqScalar {
        ZqScalar((&a.0 * &b.0) % &self.q)
    }

    pub fn scalar_neg(&self, a: &ZqScalar) -> ZqScalar {
        if a.0.is_zero() {
            a.clone()
        } else {
            ZqScalar(&self.q - &a.0)
        }
    }

    /// Inverse mod q via Fermat; `None` for zero.
    pub fn scalar_inv(&self, a: &ZqScalar) -> Option<ZqScalar> {
        if a.0.is_zero() {
            return None;
        }
        let e = &self.q - BigUint::from(2u8);
        Some(ZqScalar(a.0.modpow(&e, &self.q)))
    }

    /// Uniform scalar by rejection on the top bit-window of `q`.
    pub fn sample_scalar(&self, rng: &mut impl Rng) -> ZqScalar {
        let bits = self.q.bits();
        loop {
            let cand = random_biguint_bits(rng, bits);
            if cand < self.q {
                return ZqScalar(cand);
            }
        }
    }
}

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Fixed-width big-endian encoding sized by `p`.
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        to_fixed_be(&self.0, params.elem_width)
    }

    pub fn from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != params.elem_width {
            return Err(Error::Malformed("group element byte length"));
        }
        params.element(BigUint::from_bytes_be(bytes))
    }
}

impl ZqScalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Fixed-width big-endian encoding sized by `q`.
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        to_fixed_be(&self.0, params.scalar_width)
    }

    pub fn from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != params.scalar_width {
            return Err(Error::Malformed("scalar byte length"));
        }
        params.scalar(BigUint::from_bytes_be(bytes))
    }
}

fn to_fixed_be(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    assert!(raw.len() <= width, "value wider than the fixed encoding");
    let mut out = vec![0u8; width];
    out[width - raw.len()..].copy_from_slice(&raw);
    out
}

fn random_biguint_bits(rng: &mut impl Rng, bits: u64) -> BigUint {
    let nbytes = ((bits + 7) / 8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess = (nbytes as u64) * 8 - bits;
    if excess > 0 {
        buf[0] &= 0xffu8 >> excess;
    }
    BigUint::from_bytes_be(&buf)
}

/// Miller-Rabin primality test. Uses the deterministic base set for inputs
/// below 2^64 and 24 pseudorandom bases (seeded from the candidate itself,
/// so validation is deterministic) for larger inputs.
pub fn is_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u8);
    let three = BigUint::from(3u8);
    if *n < two {
        return false;
    }
    if *n == two || *n == three {
        return true;
    }
    if (n % 2u8).is_zero() {
        return false;
    }

    let n_minus_1 = n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let witnesses: Vec<BigUint> = if n.bits() <= 64 {
        [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
            .iter()
            .map(|&w| BigUint::from(w))
            .collect()
    } else {
        use rand::SeedableRng;
        let mut seed = [0u8; 32];
        for (i, b) in n.to_bytes_le().iter().enumerate().take(32) {
            seed[i] = *b;
        }
        let mut rng = rand_chacha::ChaCha20Rng::from_seed(seed);
        (0..24)
            .map(|_| random_biguint_bits(&mut rng, n.bits() - 1) + &two)
            .collect()
    };

    'next_witness: for a in witnesses {
        let a = a % n;
        if a.is_zero() || a.is_one() || a == n_minus_1 {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'next_witness;
            }
        }
        return false;
    }
    true
}

const P_2048_HEX: &str = "9073588539182F9230CE229963660C19109CD81207AFFE859DA1B460D6CD1DB06471E291C4F5878DC339C63BA4B8AAC740B11AC6E91CE9566B9EA44B23F15828797AFD572CDD9C19DA959C56DF34BEDEEF5C7946D6E6085766E9C816BDD07D56102E177785A0A32C396089E17E57375F483C5FB0D128C993DB13811CBAEAFB17FD40B0811510A5849B1316A22A70FA4514F7855CBB549C518E2E25C962204224A912B7CC325AF598DFCFF539986718D21AFFAE51D0D098E1BAA04D69F697C156FB7C0AF869B6050EE1A7D927175CA680E4A06BE3D02C0E3D7D8353A9EFA9B91D2468051948409616ECB05088B273713DB75EC3856E868A47CBB6A8E200B96E7B";

const Q_2048_HEX: &str = "BCC343C101C2936331FE637D5C7BF49B780CE574A2A04711F02F875AF8535535";

const G_2048_HEX: &str = "3657D512F6365636A5DEB685E0D5009BC9F23EA140A8B2275262F6D5CE6E2EFD052DFF30D8CB269589AFB0C9A219B790060B9E8ABBC3D10015FAED03EB04E8E37FC28C83E2E3193F71F2CB59B300CB07C42F7EE5D899FA6EAF047B4F33F19D8157722A336E7B9A6E55F11D318B80DCB1B9EEE6B7222A1716631DFABF0607E3CB93875C7EFD0F80A5515B44C8E571F8EF0BC0D7A0365D2B688DF9C346790540B4ABB5A55F298111E693B8E80B5E3330C694B0A09FEA867B466E5B7AAE5978FAE8C0AE80E1A7FDE6E983C9F85FF3D506578C30C1694F60BD51110A5EB47B619A29382307294F5E46019C169068E4952FC03DD78C2A200E4598ED66AD0E3070D265";
