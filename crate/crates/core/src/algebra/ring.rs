//! Negacyclic polynomial ring `R_q = Z_q[x]/(x^n + 1)` with `n` a power of
//! two and `q = 3 (mod 8)`, plus the bounded coefficient sets the lattice
//! scheme draws from.
//!
//! Coefficients use the canonical representative in `[-(q-1)/2, (q-1)/2]`.
//! Multiplication is schoolbook `O(n^2)`: with `q = 3 (mod 8)` the ring has
//! no 2n-th root of unity, so a standard NTT does not apply at these moduli.

use rand::Rng;

use super::gaussian::DiscreteGaussian;
use crate::error::{Error, Result};

/// Ring parameters plus every derived bound, fixed at construction time.
///
/// All `log` in the set bounds is `log2` (integral since `n` is a power of
/// two) and all bounds are floored to integers, so membership checks and
/// verification are pure integer comparisons.
#[derive(Clone, Debug)]
pub struct RingParams {
    n: usize,
    q: u64,
    sigma: f64,
    mu: usize,
    log2n: u32,
    /// Challenge set bound: coefficients of `c` lie in `[-log2 n, log2 n]`
    /// and `deg(c) < n/2`.
    challenge_bound: i64,
    /// Mask set bound: `floor(n^1.5 * sigma * log2^3 n)`.
    mask_bound: i64,
    /// Response-slot set bound: `floor((n-1) * sqrt(n) * sigma * log2^3 n)`.
    slot_bound: i64,
    /// Byte width of one serialized coefficient (two's complement, LE).
    coeff_width: usize,
    gaussian: DiscreteGaussian,
}

/// A ring element: exactly `n` canonical coefficients, constant term first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElement {
    coeffs: Vec<i64>,
}

/// A vector of `mu` ring elements (the commitment shape of the lattice
/// scheme).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingVector {
    elems: Vec<RingElement>,
}

impl RingParams {
    pub fn new(n: usize, q: u64, sigma: f64, mu: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParams("n must be a power of two >= 2".into()));
        }
        if q % 8 != 3 {
            return Err(Error::InvalidParams("q must be = 3 (mod 8)".into()));
        }
        if !is_prime_u64(q) {
            return Err(Error::InvalidParams("q must be prime".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams("sigma must be positive".into()));
        }
        let log2n = n.trailing_zeros();
        if mu < (log2n * log2n) as usize {
            return Err(Error::InvalidParams(format!(
                "mu must be >= log2^2 n = {}",
                log2n * log2n
            )));
        }
        let logcube = (log2n as f64).powi(3);
        let nf = n as f64;
        let challenge_bound = log2n as i64;
        let mask_bound = (nf.powf(1.5) * sigma * logcube).floor() as i64;
        let slot_bound = ((nf - 1.0) * nf.sqrt() * sigma * logcube).floor() as i64;
        let half = ((q - 1) / 2) as i64;
        // width such that the signed range [-(q-1)/2, (q-1)/2] fits
        let mut coeff_width = 1;
        while (1i128 << (8 * coeff_width - 1)) <= half as i128 {
            coeff_width += 1;
        }
        Ok(RingParams {
            n,
            q,
            sigma,
            mu,
            log2n,
            challenge_bound,
            mask_bound,
            slot_bound,
            coeff_width,
            gaussian: DiscreteGaussian::new(sigma),
        })
    }

    /// Desk-scale lattice parameters: n=16, sigma=2, mu=16 and q the smallest
    /// prime = 3 (mod 8) above 2^32 (so honest norms never wrap mod q).
    pub fn desk() -> Self {
        RingParams::new(16, DESK_Q, 2.0, 16).expect("desk parameters are valid")
    }

    /// Small parameters for exhaustive-ish unit tests.
    pub fn toy(n: usize) -> Self {
        let log2n = n.trailing_zeros();
        RingParams::new(n, 19, 1.0, (log2n * log2n).max(1) as usize)
            .expect("toy parameters are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn log2n(&self) -> u32 {
        self.log2n
    }

    pub fn challenge_bound(&self) -> i64 {
        self.challenge_bound
    }

    pub fn mask_bound(&self) -> i64 {
        self.mask_bound
    }

    pub fn slot_bound(&self) -> i64 {
        self.slot_bound
    }

    pub fn coeff_width(&self) -> usize {
        self.coeff_width
    }

    pub fn gaussian(&self) -> &DiscreteGaussian {
        &self.gaussian
    }

    /// The t-dependent verification bound `floor(5 sigma n^2 sqrt(t mu) log2^6 n)`.
    pub fn eta(&self, t: u32) -> i64 {
        assert!(t >= 1, "verification parameter t must be positive");
        let nf = self.n as f64;
        let logp6 = (self.log2n as f64).powi(6);
        (5.0 * self.sigma * nf * nf * ((t as f64) * self.mu as f64).sqrt() * logp6).floor() as i64
    }

    fn canonical(&self, v: i128) -> i64 {
        let q = self.q as i128;
        let mut r = v % q;
        let half = (q - 1) / 2;
        if r > half {
            r -= q;
        } else if r < -half {
            r += q;
        }
        r as i64
    }

    /// Builds an element from raw coefficients, validating length and range.
    pub fn element(&self, coeffs: Vec<i64>) -> Result<RingElement> {
        if coeffs.len() != self.n {
            return Err(Error::Malformed("ring element coefficient count"));
        }
        let half = ((self.q - 1) / 2) as i64;
        if coeffs.iter().any(|&c| c < -half || c > half) {
            return Err(Error::Malformed("ring element coefficient out of canonical range"));
        }
        Ok(RingElement { coeffs })
    }

    /// Builds an element reducing arbitrary integer coefficients mod q.
    pub fn element_reduced(&self, coeffs: &[i64]) -> Result<RingElement> {
        if coeffs.len() != self.n {
            return Err(Error::Malformed("ring element coefficient count"));
        }
        Ok(RingElement { coeffs: coeffs.iter().map(|&c| self.canonical(c as i128)).collect() })
    }

    pub fn zero(&self) -> RingElement {
        RingElement { coeffs: vec![0; self.n] }
    }

    pub fn one(&self) -> RingElement {
        self.constant(1)
    }

    pub fn constant(&self, c: i64) -> RingElement {
        let mut coeffs = vec![0; self.n];
        coeffs[0] = self.canonical(c as i128);
        RingElement { coeffs }
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| self.canonical(x as i128 + y as i128))
            .collect();
        RingElement { coeffs }
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| self.canonical(x as i128 - y as i128))
            .collect();
        RingElement { coeffs }
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        RingElement { coeffs: a.coeffs.iter().map(|&x| -x).collect() }
    }

    /// Negacyclic product: coefficient k is the signed convolution
    /// `sum_{i+j = k (mod n)} (+-) a_i b_j`, the sign flipping when
    /// `i + j >= n` (since `x^n = -1`).
    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let n = self.n;
        let mut acc = vec![0i128; n];
        for (i, &ai) in a.coeffs.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let ai = ai as i128;
            for (j, &bj) in b.coeffs.iter().enumerate() {
                let prod = ai * bj as i128;
                let k = i + j;
                if k < n {
                    acc[k] += prod;
                } else {
                    acc[k - n] -= prod;
                }
            }
        }
        RingElement { coeffs: acc.into_iter().map(|v| self.canonical(v)).collect() }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in
    /// `Z_q[x]` against `x^n + 1`. Fails exactly when `u` shares one of the
    /// two CRT factors of `x^n + 1`.
    pub fn invert(&self, u: &RingElement) -> Result<RingElement> {
        let q = self.q;
        // modulus x^n + 1 as a dense poly of degree n
        let mut modulus = vec![0u64; self.n + 1];
        modulus[0] = 1;
        modulus[self.n] = 1;
        let upoly: Vec<u64> =
            u.coeffs.iter().map(|&c| if c < 0 { (c + q as i64) as u64 } else { c as u64 }).collect();

        // invariant: r0 = t0 * u (mod x^n + 1), r1 = t1 * u (mod x^n + 1)
        let mut r0 = modulus;
        let mut r1 = trim(upoly);
        let mut t0: Vec<u64> = vec![];
        let mut t1: Vec<u64> = vec![1];

        while !r1.is_empty() {
            let (quot, rem) = poly_divmod(&r0, &r1, q);
            let t_next = poly_sub(&t0, &poly_mul(&quot, &t1, q), q);
            r0 = r1;
            r1 = rem;
            t0 = t1;
            t1 = t_next;
        }
        if r0.len() != 1 {
            return Err(Error::NotInvertible);
        }
        let scale = mod_inv_u64(r0[0], q);
        let mut coeffs = vec![0i64; self.n];
        for (i, &c) in t0.iter().enumerate() {
            // deg(t0) < n whenever gcd is constant
            coeffs[i] = self.canonical((c as i128) * (scale as i128));
        }
        Ok(RingElement { coeffs })
    }

    /// Uniform element of the challenge set: lower n/2 coefficients uniform
    /// on `[-log2 n, log2 n]`, upper half zero.
    pub fn sample_challenge(&self, rng: &mut impl Rng) -> RingElement {
        let b = self.challenge_bound;
        let mut coeffs = vec![0i64; self.n];
        for c in coeffs.iter_mut().take(self.n / 2) {
            *c = rng.gen_range(-b..=b);
        }
        RingElement { coeffs }
    }

    /// Uniform element of the mask set: all coefficients on `[-B_Y, B_Y]`.
    /// The mask set must sit inside the canonical coefficient range, which
    /// [`crate::id::RlweParams`] checks at construction.
    pub fn sample_mask(&self, rng: &mut impl Rng) -> RingElement {
        let b = self.mask_bound;
        assert!(b <= ((self.q - 1) / 2) as i64, "mask set exceeds the coefficient range");
        RingElement { coeffs: (0..self.n).map(|_| rng.gen_range(-b..=b)).collect() }
    }

    /// Uniform element of the response-slot set: all coefficients on
    /// `[-B_Z, B_Z]` (used by the transcript simulator).
    pub fn sample_slot(&self, rng: &mut impl Rng) -> RingElement {
        let b = self.slot_bound;
        RingElement { coeffs: (0..self.n).map(|_| rng.gen_range(-b..=b)).collect() }
    }

    /// Uniform element of the whole ring.
    pub fn sample_uniform(&self, rng: &mut impl Rng) -> RingElement {
        let half = ((self.q - 1) / 2) as i64;
        RingElement { coeffs: (0..self.n).map(|_| rng.gen_range(-half..=half)).collect() }
    }

    /// Coefficient-wise discrete Gaussian draw.
    pub fn sample_gaussian(&self, rng: &mut impl Rng) -> RingElement {
        RingElement { coeffs: (0..self.n).map(|_| self.gaussian.sample(rng)).collect() }
    }

    /// Challenge-set membership: `deg < n/2` and `inf-norm <= log2 n`.
    pub fn is_challenge(&self, u: &RingElement) -> bool {
        u.coeffs.len() == self.n
            && u.coeffs[self.n / 2..].iter().all(|&c| c == 0)
            && u.coeffs[..self.n / 2].iter().all(|&c| c.abs() <= self.challenge_bound)
    }

    /// Response-slot membership: `inf-norm <= B_Z`.
    pub fn in_slot_set(&self, u: &RingElement) -> bool {
        u.inf_norm() <= self.slot_bound
    }

    /// Gaussian-truncation membership used by the key invariants.
    pub fn in_gaussian_range(&self, u: &RingElement) -> bool {
        u.inf_norm() <= self.gaussian.cutoff()
    }

    pub fn vector(&self, elems: Vec<RingElement>) -> Result<RingVector> {
        if elems.len() != self.mu {
            return Err(Error::Malformed("ring vector slot count"));
        }
        if elems.iter().any(|e| e.coeffs.len() != self.n) {
            return Err(Error::Malformed("ring vector element degree"));
        }
        Ok(RingVector { elems })
    }

    pub fn zero_vector(&self) -> RingVector {
        RingVector { elems: vec![self.zero(); self.mu] }
    }

    /// Serialized width of one ring element.
    pub fn element_width(&self) -> usize {
        self.n * self.coeff_width
    }
}

impl RingElement {
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// `max_i |u_i|` over canonical coefficients.
    pub fn inf_norm(&self) -> i64 {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Fixed-width little-endian two's-complement coefficients.
    pub fn to_bytes(&self, params: &RingParams) -> Vec<u8> {
        let w = params.coeff_width();
        let mut out = Vec::with_capacity(self.coeffs.len() * w);
        for &c in &self.coeffs {
            out.extend_from_slice(&c.to_le_bytes()[..w]);
        }
        out
    }

    pub fn from_bytes(params: &RingParams, bytes: &[u8]) -> Result<Self> {
        let w = params.coeff_width();
        if bytes.len() != params.n() * w {
            return Err(Error::Malformed("ring element byte length"));
        }
        let mut coeffs = Vec::with_capacity(params.n());
        for chunk in bytes.chunks(w) {
            let mut buf = if chunk[w - 1] & 0x80 != 0 { [0xffu8; 8] } else { [0u8; 8] };
            buf[..w].copy_from_slice(chunk);
            coeffs.push(i64::from_le_bytes(buf));
        }
        params.element(coeffs)
    }
}

impl RingVector {
    pub fn elems(&self) -> &[RingElement] {
        &self.elems
    }

    /// Slot-wise sum of all elements.
    pub fn slot_sum(&self, params: &RingParams) -> RingElement {
        self.elems.iter().fold(params.zero(), |acc, e| params.add(&acc, e))
    }

    pub fn to_bytes(&self, params: &RingParams) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.elems.len() * params.element_width());
        for e in &self.elems {
            out.extend_from_slice(&e.to_bytes(params));
        }
        out
    }

    pub fn from_bytes(params: &RingParams, bytes: &[u8]) -> Result<Self> {
        let w = params.element_width();
        if bytes.len() != params.mu() * w {
            return Err(Error::Malformed("ring vector byte length"));
        }
        let elems = bytes
            .chunks(w)
            .map(|chunk| RingElement::from_bytes(params, chunk))
            .collect::<Result<Vec<_>>>()?;
        params.vector(elems)
    }
}

/// Smallest prime `= 3 (mod 8)` exceeding `2^32`; large enough that honest
/// desk-scale intermediate norms never wrap the canonical range.
pub const DESK_Q: u64 = 4_294_967_371;

fn is_prime_u64(n: u64) -> bool {
    crate::algebra::group::is_prime(&num_bigint::BigUint::from(n))
}

fn mod_inv_u64(a: u64, q: u64) -> u64 {
    // Fermat, q prime
    mod_pow_u64(a % q, q - 2, q)
}

fn mod_pow_u64(mut base: u64, mut e: u64, q: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b = base as u128 % q as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q as u128;
        }
        b = b * b % q as u128;
        e >>= 1;
    }
    base = acc as u64;
    base
}

fn trim(mut p: Vec<u64>) -> Vec<u64> {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn poly_sub(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let len = a.len().max(b.len());
    let mut out = vec![0u64; len];
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        out[i] = (x + q - y) % q;
    }
    trim(out)
}

fn poly_mul(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + ai as u128 * bj as u128) % q as u128) as u64;
        }
    }
    trim(out)
}

/// Division with remainder in `Z_q[x]`; `b` must be nonzero.
fn poly_divmod(a: &[u64], b: &[u64], q: u64) -> (Vec<u64>, Vec<u64>) {
    assert!(!b.is_empty());
    let mut rem = a.to_vec();
    if rem.len() < b.len() {
        return (vec![], trim(rem));
    }
    let mut quot = vec![0u64; rem.len() - b.len() + 1];
    let lead_inv = mod_inv_u64(*b.last().unwrap(), q);
    for k in (0..quot.len()).rev() {
        let top = rem[k + b.len() - 1];
        if top == 0 {
            continue;
        }
        let f = ((top as u128 * lead_inv as u128) % q as u128) as u64;
        quot[k] = f;
        for (j, &bj) in b.iter().enumerate() {
            let sub = (f as u128 * bj as u128 % q as u128) as u64;
            rem[k + j] = (rem[k + j] + q - sub) % q;
        }
    }
    (trim(quot), trim(rem))
}
