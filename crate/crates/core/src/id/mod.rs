//! The canonical linear identification scheme contract and the generic
//! aggregation operators both backends implement.
//!
//! Keys, commitments and responses are module elements over the backend's
//! ring; challenges and aggregation weights come from the challenge set
//! Theta (all of `Z_q` for Schnorr, the small-norm half-degree polynomial
//! set for the lattice scheme). Every value carries a scheme tag and mixing
//! backends is rejected before any arithmetic.

pub mod rlwe;
pub mod schnorr;

use rand::Rng;
use sha3::digest::XofReader;

use crate::algebra::{GroupElement, GroupParams, RingElement, RingVector, ZqScalar};
use crate::error::{Error, Result};
pub use rlwe::{RlweCommitState, RlweKeyPair, RlweParams, RlweResponse};
pub use schnorr::{SchnorrCommitState, SchnorrKeyPair};

/// Scheme tag; the discriminants double as the on-disk/wire scheme byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SchemeId {
    Schnorr = 0x01,
    Rlwe = 0x02,
}

impl SchemeId {
    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0x01 => Ok(SchemeId::Schnorr),
            0x02 => Ok(SchemeId::Rlwe),
            other => Err(Error::BadSchemeTag(other)),
        }
    }
}

/// A concrete identification scheme: the tag plus the backend parameters
/// needed to interpret every value produced under it.
#[derive(Clone, Debug)]
pub enum IdScheme {
    Schnorr(GroupParams),
    Rlwe(RlweParams),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PublicKey {
    Schnorr(GroupElement),
    Rlwe(RingElement),
}

#[derive(Clone, Debug)]
pub enum KeyPair {
    Schnorr(SchnorrKeyPair),
    Rlwe(RlweKeyPair),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Commitment {
    Schnorr(GroupElement),
    Rlwe(RingVector),
}

/// Secret per-session commit state. Deliberately not `Clone`: a state is
/// consumed by the response computation, which enforces nonce single-use.
#[derive(Debug)]
pub enum CommitState {
    Schnorr(SchnorrCommitState),
    Rlwe(RlweCommitState),
}

/// An element of the challenge set Theta; also the weight type for key,
/// commitment and response aggregation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Challenge {
    Schnorr(ZqScalar),
    Rlwe(RingElement),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Response {
    Schnorr(ZqScalar),
    Rlwe(RlweResponse),
}

/// One commit/challenge/response exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub cmt: Commitment,
    pub ch: Challenge,
    pub rsp: Response,
}

impl KeyPair {
    pub fn public(&self) -> PublicKey {
        match self {
            KeyPair::Schnorr(kp) => PublicKey::Schnorr(kp.public.clone()),
            KeyPair::Rlwe(kp) => PublicKey::Rlwe(kp.u.clone()),
        }
    }
}

impl IdScheme {
    pub fn id(&self) -> SchemeId {
        match self {
            IdScheme::Schnorr(_) => SchemeId::Schnorr,
            IdScheme::Rlwe(_) => SchemeId::Rlwe,
        }
    }

    pub fn group(&self) -> Result<&GroupParams> {
        match self {
            IdScheme::Schnorr(g) => Ok(g),
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn rlwe(&self) -> Result<&RlweParams> {
        match self {
            IdScheme::Rlwe(r) => Ok(r),
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn keygen(&self, rng: &mut impl Rng) -> KeyPair {
        match self {
            IdScheme::Schnorr(g) => KeyPair::Schnorr(schnorr::keygen(g, rng)),
            IdScheme::Rlwe(r) => KeyPair::Rlwe(rlwe::keygen(r, rng)),
        }
    }

    pub fn commit(&self, rng: &mut impl Rng) -> (CommitState, Commitment) {
        match self {
            IdScheme::Schnorr(g) => {
                let (st, x) = schnorr::commit(g, rng);
                (CommitState::Schnorr(st), Commitment::Schnorr(x))
            }
            IdScheme::Rlwe(r) => {
                let (st, v) = rlwe::commit(r, rng);
                (CommitState::Rlwe(st), Commitment::Rlwe(v))
            }
        }
    }

    /// Computes the response, consuming the commit state.
    pub fn respond(
        &self,
        kp: &KeyPair,
        state: CommitState,
        ch: &Challenge,
        rng: &mut impl Rng,
    ) -> Result<Response> {
        match (self, kp, state, ch) {
            (IdScheme::Schnorr(g), KeyPair::Schnorr(kp), CommitState::Schnorr(st), Challenge::Schnorr(c)) => {
                Ok(Response::Schnorr(schnorr::respond(g, &kp.secret, st, c)))
            }
            (IdScheme::Rlwe(r), KeyPair::Rlwe(kp), CommitState::Rlwe(st), Challenge::Rlwe(c)) => {
                Ok(Response::Rlwe(rlwe::respond(r, kp, st, c, rng)?))
            }
            _ => Err(Error::SchemeMismatch),
        }
    }

    /// Backend verification `V_t`. Malformed or mixed-scheme transcripts
    /// reject rather than error.
    pub fn verify(&self, pk: &PublicKey, t: u32, cmt: &Commitment, ch: &Challenge, rsp: &Response) -> bool {
        match (self, pk, cmt, ch, rsp) {
            (IdScheme::Schnorr(g), PublicKey::Schnorr(pk), Commitment::Schnorr(x), Challenge::Schnorr(c), Response::Schnorr(z)) => {
                schnorr::verify(g, pk, t, x, c, z)
            }
            (IdScheme::Rlwe(r), PublicKey::Rlwe(u), Commitment::Rlwe(v), Challenge::Rlwe(c), Response::Rlwe(z)) => {
                rlwe::verify(r, u, t, v, c, z)
            }
            _ => false,
        }
    }

    /// Transcript simulator for a fixed challenge.
    pub fn simulate(&self, pk: &PublicKey, ch: &Challenge, rng: &mut impl Rng) -> Result<(Commitment, Response)> {
        match (self, pk, ch) {
            (IdScheme::Schnorr(g), PublicKey::Schnorr(pk), Challenge::Schnorr(c)) => {
                let (x, z) = schnorr::simulate(g, pk, c, rng);
                Ok((Commitment::Schnorr(x), Response::Schnorr(z)))
            }
            (IdScheme::Rlwe(r), PublicKey::Rlwe(u), Challenge::Rlwe(c)) => {
                let (v, z) = rlwe::simulate(r, u, c, rng);
                Ok((Commitment::Rlwe(v), Response::Rlwe(z)))
            }
            _ => Err(Error::SchemeMismatch),
        }
    }

    /// Uniform draw from Theta.
    pub fn sample_challenge(&self, rng: &mut impl Rng) -> Challenge {
        match self {
            IdScheme::Schnorr(g) => Challenge::Schnorr(g.sample_scalar(rng)),
            IdScheme::Rlwe(r) => Challenge::Rlwe(r.ring().sample_challenge(rng)),
        }
    }

    /// Uniform element of Theta read off an extendable-output stream by
    /// rejection sampling in fixed-width chunks (unbiased).
    pub fn challenge_from_xof(&self, reader: &mut impl XofReader) -> Challenge {
        match self {
            IdScheme::Schnorr(g) => {
                let width = g.scalar_width();
                let bits = g.q().bits();
                let mask = if bits % 8 == 0 { 0xff } else { 0xffu8 >> (8 - bits % 8) };
                let mut buf = vec![0u8; width];
                loop {
                    reader.read(&mut buf);
                    buf[0] &= mask;
                    let v = num_bigint::BigUint::from_bytes_be(&buf);
                    if &v < g.q() {
                        return Challenge::Schnorr(g.scalar(v).unwrap());
                    }
                }
            }
            IdScheme::Rlwe(r) => {
                let ring = r.ring();
                let b = ring.challenge_bound();
                let alphabet = (2 * b + 1) as u64;
                let bits = 64 - (alphabet - 1).leading_zeros();
                let nbytes = ((bits + 7) / 8) as usize;
                let mask = if bits % 8 == 0 { 0xff } else { 0xffu8 >> (8 - bits % 8) };
                let mut buf = vec![0u8; nbytes];
                let mut coeffs = vec![0i64; ring.n()];
                for c in coeffs.iter_mut().take(ring.n() / 2) {
                    loop {
                        reader.read(&mut buf);
                        buf[0] &= mask;
                        let mut v = 0u64;
                        for &byte in &buf {
                            v = (v << 8) | byte as u64;
                        }
                        if v < alphabet {
                            *c = v as i64 - b;
                            break;
                        }
                    }
                }
                Challenge::Rlwe(ring.element(coeffs).unwrap())
            }
        }
    }

    /// Membership in Theta, checked wherever a challenge enters a response
    /// computation.
    pub fn challenge_in_set(&self, ch: &Challenge) -> bool {
        match (self, ch) {
            (IdScheme::Schnorr(_), Challenge::Schnorr(_)) => true,
            (IdScheme::Rlwe(r), Challenge::Rlwe(c)) => r.ring().is_challenge(c),
            _ => false,
        }
    }

    // --- canonical byte encodings -------------------------------------

    pub fn pk_to_bytes(&self, pk: &PublicKey) -> Result<Vec<u8>> {
        match (self, pk) {
            (IdScheme::Schnorr(g), PublicKey::Schnorr(e)) => Ok(e.to_bytes(g)),
            (IdScheme::Rlwe(r), PublicKey::Rlwe(u)) => Ok(u.to_bytes(r.ring())),
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn pk_from_bytes(&self, bytes: &[u8]) -> Result<PublicKey> {
        match self {
            IdScheme::Schnorr(g) => Ok(PublicKey::Schnorr(GroupElement::from_bytes(g, bytes)?)),
            IdScheme::Rlwe(r) => Ok(PublicKey::Rlwe(RingElement::from_bytes(r.ring(), bytes)?)),
        }
    }

    pub fn cmt_to_bytes(&self, cmt: &Commitment) -> Result<Vec<u8>> {
        match (self, cmt) {
            (IdScheme::Schnorr(g), Commitment::Schnorr(x)) => Ok(x.to_bytes(g)),
            (IdScheme::Rlwe(r), Commitment::Rlwe(v)) => Ok(v.to_bytes(r.ring())),
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn cmt_from_bytes(&self, bytes: &[u8]) -> Result<Commitment> {
        match self {
            IdScheme::Schnorr(g) => Ok(Commitment::Schnorr(GroupElement::from_bytes(g, bytes)?)),
            IdScheme::Rlwe(r) => Ok(Commitment::Rlwe(RingVector::from_bytes(r.ring(), bytes)?)),
        }
    }

    pub fn ch_to_bytes(&self, ch: &Challenge) -> Result<Vec<u8>> {
        match (self, ch) {
            (IdScheme::Schnorr(g), Challenge::Schnorr(c)) => Ok(c.to_bytes(g)),
            (IdScheme::Rlwe(r), Challenge::Rlwe(c)) => Ok(c.to_bytes(r.ring())),
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn ch_from_bytes(&self, bytes: &[u8]) -> Result<Challenge> {
        match self {
            IdScheme::Schnorr(g) => Ok(Challenge::Schnorr(ZqScalar::from_bytes(g, bytes)?)),
            IdScheme::Rlwe(r) => Ok(Challenge::Rlwe(RingElement::from_bytes(r.ring(), bytes)?)),
        }
    }

    pub fn rsp_to_bytes(&self, rsp: &Response) -> Result<Vec<u8>> {
        match (self, rsp) {
            (IdScheme::Schnorr(g), Response::Schnorr(z)) => Ok(z.to_bytes(g)),
            (IdScheme::Rlwe(r), Response::Rlwe(z)) => {
                let mut out = z.z1.to_bytes(r.ring());
                out.extend_from_slice(&z.z2.to_bytes(r.ring()));
                Ok(out)
            }
            _ => Err(Error::SchemeMismatch),
        }
    }

    pub fn rsp_from_bytes(&self, bytes: &[u8]) -> Result<Response> {
        match self {
            IdScheme::Schnorr(g) => Ok(Response::Schnorr(ZqScalar::from_bytes(g, bytes)?)),
            IdScheme::Rlwe(r) => {
                let w = r.ring().element_width();
                if bytes.len() != 2 * w {
                    return Err(Error::Malformed("response byte length"));
                }
                Ok(Response::Rlwe(RlweResponse {
                    z1: RingElement::from_bytes(r.ring(), &bytes[..w])?,
                    z2: RingElement::from_bytes(r.ring(), &bytes[w..])?,
                }))
            }
        }
    }
}

fn check_lengths<A, B>(weights: &[A], values: &[B]) -> Result<()> {
    if weights.is_empty() || weights.len() != values.len() {
        return Err(Error::LengthMismatch(weights.len(), values.len()));
    }
    Ok(())
}

/// Theta-weighted key aggregation: `pkbar = sum_i w_i • pk_i`
/// (`prod pk_i^{w_i}` for Schnorr, `sum w_i u_i` in the ring backend).
pub fn aggregate_keys(scheme: &IdScheme, weights: &[Challenge], pks: &[PublicKey]) -> Result<PublicKey> {
    check_lengths(weights, pks)?;
    match scheme {
        IdScheme::Schnorr(g) => {
            let mut acc = g.identity();
            for (w, pk) in weights.iter().zip(pks) {
                let (Challenge::Schnorr(w), PublicKey::Schnorr(pk)) = (w, pk) else {
                    return Err(Error::SchemeMismatch);
                };
                acc = g.mul(&acc, &g.exp(pk, w));
            }
            Ok(PublicKey::Schnorr(acc))
        }
        IdScheme::Rlwe(r) => {
            let ring = r.ring();
            let mut acc = ring.zero();
            for (w, pk) in weights.iter().zip(pks) {
                let (Challenge::Rlwe(w), PublicKey::Rlwe(u)) = (w, pk) else {
                    return Err(Error::SchemeMismatch);
                };
                acc = ring.add(&acc, &ring.mul(w, u));
            }
            Ok(PublicKey::Rlwe(acc))
        }
    }
}

/// Theta-weighted commitment aggregation. The ring-backend commitment is a
/// mu-slot vector and aggregation is per slot, so slot sums commute with
/// aggregation.
pub fn aggregate_commitments(scheme: &IdScheme, weights: &[Challenge], cmts: &[Commitment]) -> Result<Commitment> {
    check_lengths(weights, cmts)?;
    match scheme {
        IdScheme::Schnorr(g) => {
            let mut acc = g.identity();
            for (w, cmt) in weights.iter().zip(cmts) {
                let (Challenge::Schnorr(w), Commitment::Schnorr(x)) = (w, cmt) else {
                    return Err(Error::SchemeMismatch);
                };
                acc = g.mul(&acc, &g.exp(x, w));
            }
            Ok(Commitment::Schnorr(acc))
        }
        IdScheme::Rlwe(r) => {
            let ring = r.ring();
            let mut acc = vec![ring.zero(); ring.mu()];
            for (w, cmt) in weights.iter().zip(cmts) {
                let (Challenge::Rlwe(w), Commitment::Rlwe(v)) = (w, cmt) else {
                    return Err(Error::SchemeMismatch);
                };
                for (slot, vj) in acc.iter_mut().zip(v.elems()) {
                    *slot = ring.add(slot, &ring.mul(w, vj));
                }
            }
            Ok(Commitment::Rlwe(ring.vector(acc)?))
        }
    }
}

/// Theta-weighted response aggregation.
pub fn aggregate_responses(scheme: &IdScheme, weights: &[Challenge], rsps: &[Response]) -> Result<Response> {
    check_lengths(weights, rsps)?;
    match scheme {
        IdScheme::Schnorr(g) => {
            let mut acc = g.scalar_zero();
            for (w, rsp) in weights.iter().zip(rsps) {
                let (Challenge::Schnorr(w), Response::Schnorr(z)) = (w, rsp) else {
                    return Err(Error::SchemeMismatch);
                };
                acc = g.scalar_add(&acc, &g.scalar_mul(w, z));
            }
            Ok(Response::Schnorr(acc))
        }
        IdScheme::Rlwe(r) => {
            let ring = r.ring();
            let mut z1 = ring.zero();
            let mut z2 = ring.zero();
            for (w, rsp) in weights.iter().zip(rsps) {
                let (Challenge::Rlwe(w), Response::Rlwe(z)) = (w, rsp) else {
                    return Err(Error::SchemeMismatch);
                };
                z1 = ring.add(&z1, &ring.mul(w, &z.z1));
                z2 = ring.add(&z2, &ring.mul(w, &z.z2));
            }
            Ok(Response::Rlwe(RlweResponse { z1, z2 }))
        }
    }
}

/// Dispatches an aggregated transcript to the backend `V_t`.
pub fn verify_aggregated(scheme: &IdScheme, agg_pk: &PublicKey, t: u32, transcript: &Transcript) -> bool {
    scheme.verify(agg_pk, t, &transcript.cmt, &transcript.ch, &transcript.rsp)
}
