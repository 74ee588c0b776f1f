//! The compiler from a linear identification scheme to a key-and-signature
//! compact multi-signature.
//!
//! Key aggregation weighs each key by `H0(pk_i, PK)`; signing runs three
//! rounds per signer (hash-register the commitment, reveal it, respond to
//! the shared challenge `H1(pkbar | cmtbar | M)`) and the output
//! `(cmtbar, rspbar)` verifies against `(pkbar, t)` alone. Sessions are pure
//! reactive state machines; delivery, timeouts and retries belong to the
//! caller. A failed round is terminal: the honest path contains no retry
//! loop.

use std::collections::BTreeMap;

use rand::Rng;
use sha3::digest::{ExtendableOutput, Update};
use sha3::Shake256;

use crate::error::{Error, Result};
use crate::id::{
    aggregate_commitments, aggregate_keys, aggregate_responses, verify_aggregated, Challenge,
    CommitState, Commitment, IdScheme, KeyPair, PublicKey, Response, SchemeId, Transcript,
};

/// Domain byte for the weight/registration oracle `H0(x) = H(0, x)`.
pub const DOMAIN_H0: u8 = 0x00;
/// Domain byte for the challenge oracle `H1(x) = H(1, x)`.
pub const DOMAIN_H1: u8 = 0x01;

/// Hashes `(domain, input)` into the scheme's challenge set Theta by
/// rejection sampling from an extendable-output stream.
pub fn hash_to_theta(scheme: &IdScheme, domain: u8, input: &[u8]) -> Challenge {
    let mut hasher = Shake256::default();
    hasher.update(&[domain]);
    hasher.update(input);
    scheme.challenge_from_xof(&mut hasher.finalize_xof())
}

/// Length-prefixes each field so concatenation is unambiguous.
pub fn frame(fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(fields.iter().map(|f| f.len() + 4).sum());
    for f in fields {
        out.extend_from_slice(&(f.len() as u32).to_be_bytes());
        out.extend_from_slice(f);
    }
    out
}

/// An ordered set of distinct public keys with its canonical byte encoding
/// (keys sorted lexicographically by serialization, each length-prefixed),
/// so every permutation of the same keys hashes identically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignerSet {
    scheme_id: SchemeId,
    pks: Vec<PublicKey>,
    encodings: Vec<Vec<u8>>,
}

impl SignerSet {
    pub fn new(scheme: &IdScheme, pks: Vec<PublicKey>) -> Result<Self> {
        if pks.is_empty() {
            return Err(Error::Malformed("empty signer set"));
        }
        let mut keyed: Vec<(Vec<u8>, PublicKey)> = pks
            .into_iter()
            .map(|pk| Ok((scheme.pk_to_bytes(&pk)?, pk)))
            .collect::<Result<_>>()?;
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        if keyed.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateKey);
        }
        let (encodings, pks) = keyed.into_iter().unzip();
        Ok(SignerSet { scheme_id: scheme.id(), pks, encodings })
    }

    pub fn len(&self) -> usize {
        self.pks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pks.is_empty()
    }

    pub fn pks(&self) -> &[PublicKey] {
        &self.pks
    }

    pub fn pk_bytes(&self, index: usize) -> &[u8] {
        &self.encodings[index]
    }

    pub fn index_of(&self, pk: &PublicKey) -> Option<usize> {
        self.pks.iter().position(|p| p == pk)
    }

    pub fn canonical_encoding(&self) -> Vec<u8> {
        let fields: Vec<&[u8]> = self.encodings.iter().map(|e| e.as_slice()).collect();
        frame(&fields)
    }

    /// The aggregation weight of key `index`: `H0(pk_index, PK)`.
    pub fn weight(&self, scheme: &IdScheme, index: usize) -> Challenge {
        let input = frame(&[&self.encodings[index], &self.canonical_encoding()]);
        hash_to_theta(scheme, DOMAIN_H0, &input)
    }

    pub fn weights(&self, scheme: &IdScheme) -> Vec<Challenge> {
        (0..self.len()).map(|i| self.weight(scheme, i)).collect()
    }
}

/// The compact verification key: `pkbar` plus the signer count `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregatedKey {
    pub pk_bar: PublicKey,
    pub t: u32,
}

/// The compact signature `(cmtbar, rspbar)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSignature {
    pub cmt_bar: Commitment,
    pub rsp_bar: Response,
}

/// `pkbar = sum_i H0(pk_i, PK) • pk_i`, with `t = |PK|`.
pub fn key_aggregate(scheme: &IdScheme, set: &SignerSet) -> Result<AggregatedKey> {
    let weights = set.weights(scheme);
    let pk_bar = aggregate_keys(scheme, &weights, set.pks())?;
    Ok(AggregatedKey { pk_bar, t: set.len() as u32 })
}

/// Aggregate-only verification: recomputes `CH = H1(pkbar | cmtbar | M)` and
/// dispatches to the backend `V_t`. Reads nothing but its three arguments.
pub fn verify(scheme: &IdScheme, agg: &AggregatedKey, message: &[u8], sig: &MultiSignature) -> bool {
    let (Ok(pk_bytes), Ok(cmt_bytes)) =
        (scheme.pk_to_bytes(&agg.pk_bar), scheme.cmt_to_bytes(&sig.cmt_bar))
    else {
        return false;
    };
    let ch = hash_to_theta(scheme, DOMAIN_H1, &frame(&[&pk_bytes, &cmt_bytes, message]));
    let transcript = Transcript { cmt: sig.cmt_bar.clone(), ch, rsp: sig.rsp_bar.clone() };
    verify_aggregated(scheme, &agg.pk_bar, agg.t, &transcript)
}

/// Signing session phases. Transitions run strictly
/// `Init -> SentR1 -> SentCmt -> SentRsp -> Done`; any failure inside a
/// round moves to `Aborted`, which is terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Init,
    SentR1,
    SentCmt,
    SentRsp,
    Done,
    Aborted,
}

/// Per-signer state machine for one 3-round signing session.
pub struct SignSession {
    scheme: IdScheme,
    keypair: KeyPair,
    set: SignerSet,
    my_index: usize,
    message: Vec<u8>,
    weights: Vec<Challenge>,
    agg_key: AggregatedKey,
    phase: Phase,
    commit_state: Option<CommitState>,
    my_cmt: Option<Commitment>,
    registered: BTreeMap<usize, Challenge>,
    cmt_bar: Option<Commitment>,
}

impl SignSession {
    /// Creates a session for one signer. The signer's key must belong to
    /// the set; weights and the aggregated key are computed once here.
    pub fn new(scheme: IdScheme, keypair: KeyPair, set: SignerSet, message: &[u8]) -> Result<Self> {
        let my_index = set.index_of(&keypair.public()).ok_or(Error::KeyNotInSet)?;
        let weights = set.weights(&scheme);
        let pk_bar = aggregate_keys(&scheme, &weights, set.pks())?;
        let agg_key = AggregatedKey { pk_bar, t: set.len() as u32 };
        Ok(SignSession {
            scheme,
            keypair,
            set,
            my_index,
            message: message.to_vec(),
            weights,
            agg_key,
            phase: Phase::Init,
            commit_state: None,
            my_cmt: None,
            registered: BTreeMap::new(),
            cmt_bar: None,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn my_index(&self) -> usize {
        self.my_index
    }

    pub fn signer_count(&self) -> usize {
        self.set.len()
    }

    pub fn agg_key(&self) -> &AggregatedKey {
        &self.agg_key
    }

    fn expect_phase(&self, want: Phase) -> Result<()> {
        if self.phase != want {
            return Err(Error::InvalidPhase(self.phase, want));
        }
        Ok(())
    }

    fn registration_digest(&self, cmt: &Commitment, index: usize) -> Result<Challenge> {
        let cmt_bytes = self.scheme.cmt_to_bytes(cmt)?;
        let input = frame(&[&cmt_bytes, self.set.pk_bytes(index)]);
        Ok(hash_to_theta(&self.scheme, DOMAIN_H0, &input))
    }

    /// Round 1: commit and broadcast the registration digest
    /// `r_i = H0(CMT_i | pk_i)`.
    pub fn round1(&mut self, rng: &mut impl Rng) -> Result<Challenge> {
        self.expect_phase(Phase::Init)?;
        let (state, cmt) = self.scheme.commit(rng);
        let digest = self.registration_digest(&cmt, self.my_index)?;
        self.commit_state = Some(state);
        self.my_cmt = Some(cmt);
        self.phase = Phase::SentR1;
        Ok(digest)
    }

    /// Round 2: once a digest from every signer (our own included) is
    /// present, register them and reveal our commitment. A missing digest
    /// leaves the session in `SentR1`; waiting longer or giving up is the
    /// caller's policy.
    pub fn round2(&mut self, received: &BTreeMap<usize, Challenge>) -> Result<Commitment> {
        self.expect_phase(Phase::SentR1)?;
        for j in 0..self.set.len() {
            if !received.contains_key(&j) {
                return Err(Error::MissingMessage { round: 1, index: j });
            }
        }
        self.registered = received.clone();
        self.phase = Phase::SentCmt;
        Ok(self.my_cmt.clone().expect("commitment exists after round 1"))
    }

    /// Round 3: check every revealed commitment against its registered
    /// digest, derive the shared challenge and respond. A digest mismatch or
    /// a backend abort is terminal.
    pub fn round3(&mut self, received: &BTreeMap<usize, Commitment>, rng: &mut impl Rng) -> Result<Response> {
        self.expect_phase(Phase::SentCmt)?;
        for j in 0..self.set.len() {
            if !received.contains_key(&j) {
                return Err(Error::MissingMessage { round: 2, index: j });
            }
        }
        for (j, cmt) in received {
            let digest = self.registration_digest(cmt, *j)?;
            if Some(&digest) != self.registered.get(j) {
                self.phase = Phase::Aborted;
                return Err(Error::CommitmentMismatch { index: *j });
            }
        }
        let cmts: Vec<Commitment> = (0..self.set.len()).map(|j| received[&j].clone()).collect();
        let cmt_bar = aggregate_commitments(&self.scheme, &self.weights, &cmts)?;
        let ch = self.challenge_for(&cmt_bar)?;
        let state = self.commit_state.take().ok_or(Error::StateReused)?;
        match self.scheme.respond(&self.keypair, state, &ch, rng) {
            Ok(rsp) => {
                self.cmt_bar = Some(cmt_bar);
                self.phase = Phase::SentRsp;
                Ok(rsp)
            }
            Err(e) => {
                self.phase = Phase::Aborted;
                Err(e)
            }
        }
    }

    /// Output: aggregate the responses into the multi-signature. All honest
    /// signers of one session compute identical output.
    pub fn finish(&mut self, received: &BTreeMap<usize, Response>) -> Result<(AggregatedKey, MultiSignature)> {
        self.expect_phase(Phase::SentRsp)?;
        for j in 0..self.set.len() {
            if !received.contains_key(&j) {
                return Err(Error::MissingMessage { round: 3, index: j });
            }
        }
        let rsps: Vec<Response> = (0..self.set.len()).map(|j| received[&j].clone()).collect();
        let rsp_bar = aggregate_responses(&self.scheme, &self.weights, &rsps)?;
        let cmt_bar = self.cmt_bar.clone().expect("aggregate commitment exists after round 3");
        self.phase = Phase::Done;
        Ok((self.agg_key.clone(), MultiSignature { cmt_bar, rsp_bar }))
    }

    fn challenge_for(&self, cmt_bar: &Commitment) -> Result<Challenge> {
        let pk_bytes = self.scheme.pk_to_bytes(&self.agg_key.pk_bar)?;
        let cmt_bytes = self.scheme.cmt_to_bytes(cmt_bar)?;
        Ok(hash_to_theta(
            &self.scheme,
            DOMAIN_H1,
            &frame(&[&pk_bytes, &cmt_bytes, &self.message]),
        ))
    }
}

/// Version byte of the wire envelope.
pub const WIRE_VERSION: u8 = 1;

/// Broadcast message envelope:
/// `[version:1][scheme:1][session-id:16][round:1][sender:4 BE][len:4 BE][payload]`.
/// Payloads are round 1 = Theta digest, round 2 = commitment,
/// round 3 = response, each in its scheme's canonical encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub version: u8,
    pub scheme: SchemeId,
    pub session_id: [u8; 16],
    pub round: u8,
    pub sender: u32,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn new(scheme: SchemeId, session_id: [u8; 16], round: u8, sender: u32, payload: Vec<u8>) -> Self {
        Envelope { version: WIRE_VERSION, scheme, session_id, round, sender, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(27 + self.payload.len());
        out.push(self.version);
        out.push(self.scheme as u8);
        out.extend_from_slice(&self.session_id);
        out.push(self.round);
        out.extend_from_slice(&self.sender.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 27 {
            return Err(Error::Truncated { expected: 27 - bytes.len() });
        }
        let version = bytes[0];
        if version != WIRE_VERSION {
            return Err(Error::BadVersion(version));
        }
        let scheme = SchemeId::from_byte(bytes[1])?;
        let mut session_id = [0u8; 16];
        session_id.copy_from_slice(&bytes[2..18]);
        let round = bytes[18];
        if !(1..=3).contains(&round) {
            return Err(Error::Malformed("wire round"));
        }
        let sender = u32::from_be_bytes(bytes[19..23].try_into().unwrap());
        let len = u32::from_be_bytes(bytes[23..27].try_into().unwrap()) as usize;
        if bytes.len() != 27 + len {
            return Err(Error::Truncated { expected: (27 + len).saturating_sub(bytes.len()) });
        }
        Ok(Envelope { version, scheme, session_id, round, sender, payload: bytes[27..].to_vec() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{GroupParams, RingParams};
    use crate::id::RlweParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn tiny_schnorr() -> IdScheme {
        IdScheme::Schnorr(GroupParams::tiny_test_group())
    }

    fn desk_rlwe(seed: u64) -> IdScheme {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        IdScheme::Rlwe(RlweParams::setup(RingParams::desk(), &mut rng))
    }

    /// Drives t sessions through all rounds by hand, without a bus.
    fn run_protocol(
        scheme: &IdScheme,
        keypairs: &[KeyPair],
        message: &[u8],
        rng: &mut ChaCha20Rng,
    ) -> Result<(AggregatedKey, MultiSignature)> {
        let set = SignerSet::new(scheme, keypairs.iter().map(|k| k.public()).collect())?;
        let mut sessions: Vec<SignSession> = keypairs
            .iter()
            .map(|kp| SignSession::new(scheme.clone(), kp.clone(), set.clone(), message))
            .collect::<Result<_>>()?;
        sessions.sort_by_key(|s| s.my_index());

        let mut digests = BTreeMap::new();
        for s in sessions.iter_mut() {
            digests.insert(s.my_index(), s.round1(rng)?);
        }
        let mut cmts = BTreeMap::new();
        for s in sessions.iter_mut() {
            cmts.insert(s.my_index(), s.round2(&digests)?);
        }
        let mut rsps = BTreeMap::new();
        for s in sessions.iter_mut() {
            rsps.insert(s.my_index(), s.round3(&cmts, rng)?);
        }
        let mut out = None;
        for s in sessions.iter_mut() {
            let produced = s.finish(&rsps)?;
            if let Some(prev) = &out {
                assert_eq!(prev, &produced, "honest signers must agree bit-exactly");
            }
            out = Some(produced);
        }
        Ok(out.unwrap())
    }

    #[test]
    fn hash_to_theta_is_deterministic_and_domain_separated() {
        for scheme in [tiny_schnorr(), desk_rlwe(80)] {
            let a = hash_to_theta(&scheme, DOMAIN_H0, b"input");
            let b = hash_to_theta(&scheme, DOMAIN_H0, b"input");
            assert_eq!(a, b);
            // collisions across domains happen only at the 1/|Theta| rate;
            // over distinct inputs we expect mostly distinct outputs
            let mut collisions = 0;
            let trials = 500;
            for i in 0..trials {
                let input = format!("input-{i}");
                let x = hash_to_theta(&scheme, DOMAIN_H0, input.as_bytes());
                let y = hash_to_theta(&scheme, DOMAIN_H1, input.as_bytes());
                if x == y {
                    collisions += 1;
                }
            }
            // tiny Schnorr Theta has 11 elements: expect about trials/11
            let worst = match scheme {
                IdScheme::Schnorr(_) => trials / 11 * 2 + 10,
                IdScheme::Rlwe(_) => 1,
            };
            assert!(collisions <= worst, "collisions = {collisions}");
        }
    }

    #[test]
    fn schnorr_theta_hash_uniformity() {
        let scheme = tiny_schnorr();
        let mut counts = [0u64; 11];
        let trials = 110_000u64;
        for i in 0..trials {
            let c = hash_to_theta(&scheme, DOMAIN_H0, &i.to_be_bytes());
            let Challenge::Schnorr(s) = c else { panic!() };
            let v: u64 = s.value().try_into().unwrap();
            counts[v as usize] += 1;
        }
        let expected = trials as f64 / 11.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 29.588, "chi2 = {chi2}");
    }

    #[test]
    fn signer_set_is_order_insensitive_and_rejects_duplicates() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(81);
        let pks: Vec<PublicKey> = (0..4).map(|_| scheme.keygen(&mut rng).public()).collect();
        let fwd = SignerSet::new(&scheme, pks.clone()).unwrap();
        let mut rev = pks.clone();
        rev.reverse();
        let bwd = SignerSet::new(&scheme, rev).unwrap();
        assert_eq!(fwd, bwd);
        assert_eq!(fwd.canonical_encoding(), bwd.canonical_encoding());
        assert_eq!(key_aggregate(&scheme, &fwd).unwrap(), key_aggregate(&scheme, &bwd).unwrap());

        let mut dup = pks;
        dup.push(dup[0].clone());
        assert!(matches!(SignerSet::new(&scheme, dup), Err(Error::DuplicateKey)));
    }

    #[test]
    fn key_aggregate_matches_independent_recomputation() {
        let scheme = tiny_schnorr();
        let g = scheme.group().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(82);
        let pks: Vec<PublicKey> = (0..3).map(|_| scheme.keygen(&mut rng).public()).collect();
        let set = SignerSet::new(&scheme, pks).unwrap();
        let agg = key_aggregate(&scheme, &set).unwrap();
        assert_eq!(agg.t, 3);

        // recompute from scratch with explicit hashing
        let mut acc = g.identity();
        for i in 0..3 {
            let input = frame(&[set.pk_bytes(i), &set.canonical_encoding()]);
            let Challenge::Schnorr(w) = hash_to_theta(&scheme, DOMAIN_H0, &input) else { panic!() };
            let PublicKey::Schnorr(pk) = &set.pks()[i] else { panic!() };
            acc = g.mul(&acc, &g.exp(pk, &w));
        }
        assert_eq!(agg.pk_bar, PublicKey::Schnorr(acc));
    }

    #[test]
    fn singleton_aggregation_weighs_the_single_key() {
        let scheme = tiny_schnorr();
        let g = scheme.group().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(83);
        let kp = scheme.keygen(&mut rng);
        let set = SignerSet::new(&scheme, vec![kp.public()]).unwrap();
        let agg = key_aggregate(&scheme, &set).unwrap();
        assert_eq!(agg.t, 1);
        let Challenge::Schnorr(w) = set.weight(&scheme, 0) else { panic!() };
        let PublicKey::Schnorr(pk) = kp.public() else { panic!() };
        assert_eq!(agg.pk_bar, PublicKey::Schnorr(g.exp(&pk, &w)));
    }

    #[test]
    fn end_to_end_schnorr_t3() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(84);
        let kps: Vec<KeyPair> = (0..3).map(|_| scheme.keygen(&mut rng)).collect();
        let (agg, sig) = run_protocol(&scheme, &kps, b"pay alice 3", &mut rng).unwrap();
        assert!(verify(&scheme, &agg, b"pay alice 3", &sig));
        assert!(!verify(&scheme, &agg, b"pay alice 4", &sig));
    }

    #[test]
    fn end_to_end_rlwe_t3() {
        let scheme = desk_rlwe(85);
        let mut rng = ChaCha20Rng::seed_from_u64(86);
        // the lattice respond aborts with noticeable probability at desk
        // parameters; retry the whole protocol in the test driver until one
        // run completes (the sessions themselves never restart)
        for attempt in 0..20 {
            let kps: Vec<KeyPair> = (0..3).map(|_| scheme.keygen(&mut rng)).collect();
            match run_protocol(&scheme, &kps, b"lattice msg", &mut rng) {
                Ok((agg, sig)) => {
                    assert!(verify(&scheme, &agg, b"lattice msg", &sig));
                    assert!(!verify(&scheme, &agg, b"lattice msG", &sig));
                    return;
                }
                Err(Error::Abort) => continue,
                Err(e) => panic!("attempt {attempt}: {e}"),
            }
        }
        panic!("no run completed in 20 attempts");
    }

    #[test]
    fn single_signer_degenerates_to_weighted_plain_signature() {
        let scheme = tiny_schnorr();
        let g = scheme.group().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(87);
        let kp = scheme.keygen(&mut rng);
        let (agg, sig) = run_protocol(&scheme, std::slice::from_ref(&kp), b"solo", &mut rng).unwrap();
        assert!(verify(&scheme, &agg, b"solo", &sig));

        // pkbar = pk^w and the transcript is a plain weighted Schnorr one
        let set = SignerSet::new(&scheme, vec![kp.public()]).unwrap();
        let Challenge::Schnorr(w) = set.weight(&scheme, 0) else { panic!() };
        let PublicKey::Schnorr(pk) = kp.public() else { panic!() };
        assert_eq!(agg.pk_bar, PublicKey::Schnorr(g.exp(&pk, &w)));
        let (Commitment::Schnorr(xbar), Response::Schnorr(zbar)) = (&sig.cmt_bar, &sig.rsp_bar) else {
            panic!()
        };
        let pk_bytes = scheme.pk_to_bytes(&agg.pk_bar).unwrap();
        let cmt_bytes = scheme.cmt_to_bytes(&sig.cmt_bar).unwrap();
        let Challenge::Schnorr(c) =
            hash_to_theta(&scheme, DOMAIN_H1, &frame(&[&pk_bytes, &cmt_bytes, b"solo" as &[u8]]))
        else {
            panic!()
        };
        let PublicKey::Schnorr(pkbar) = &agg.pk_bar else { panic!() };
        assert!(crate::id::schnorr::verify(g, pkbar, 1, xbar, &c, zbar));
    }

    #[test]
    fn session_enforces_phase_order() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(88);
        let kps: Vec<KeyPair> = (0..2).map(|_| scheme.keygen(&mut rng)).collect();
        let set = SignerSet::new(&scheme, kps.iter().map(|k| k.public()).collect()).unwrap();
        let mut s = SignSession::new(scheme.clone(), kps[0].clone(), set, b"m").unwrap();

        // round2 before round1
        assert!(matches!(s.round2(&BTreeMap::new()), Err(Error::InvalidPhase(..))));
        let r = s.round1(&mut rng).unwrap();
        // round1 twice
        assert!(matches!(s.round1(&mut rng), Err(Error::InvalidPhase(..))));
        // round2 with a missing digest stays in SentR1
        let partial: BTreeMap<usize, Challenge> = [(s.my_index(), r)].into_iter().collect();
        let missing = if s.my_index() == 0 { 1 } else { 0 };
        match s.round2(&partial) {
            Err(Error::MissingMessage { round: 1, index }) => assert_eq!(index, missing),
            other => panic!("unexpected: {other:?}"),
        }
        assert_eq!(s.phase(), Phase::SentR1);
    }

    #[test]
    fn session_rejects_key_outside_set() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(89);
        let kps: Vec<KeyPair> = (0..3).map(|_| scheme.keygen(&mut rng)).collect();
        let set = SignerSet::new(&scheme, kps[..2].iter().map(|k| k.public()).collect()).unwrap();
        assert!(matches!(
            SignSession::new(scheme, kps[2].clone(), set, b"m"),
            Err(Error::KeyNotInSet)
        ));
    }

    #[test]
    fn substituted_commitment_aborts_at_round3() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(90);
        let kps: Vec<KeyPair> = (0..3).map(|_| scheme.keygen(&mut rng)).collect();
        let set = SignerSet::new(&scheme, kps.iter().map(|k| k.public()).collect()).unwrap();
        let mut sessions: Vec<SignSession> = kps
            .iter()
            .map(|kp| SignSession::new(scheme.clone(), kp.clone(), set.clone(), b"m").unwrap())
            .collect();
        sessions.sort_by_key(|s| s.my_index());

        let mut digests = BTreeMap::new();
        for s in sessions.iter_mut() {
            digests.insert(s.my_index(), s.round1(&mut rng).unwrap());
        }
        let mut cmts = BTreeMap::new();
        for s in sessions.iter_mut() {
            cmts.insert(s.my_index(), s.round2(&digests).unwrap());
        }
        // substitute signer 1's commitment after registration
        let (_, fresh) = scheme.commit(&mut rng);
        cmts.insert(1, fresh);
        for s in sessions.iter_mut() {
            if s.my_index() == 1 {
                continue; // its own view still holds the original
            }
            assert!(matches!(
                s.round3(&cmts, &mut rng),
                Err(Error::CommitmentMismatch { index: 1 })
            ));
            assert_eq!(s.phase(), Phase::Aborted);
            // aborted sessions accept no further operations
            assert!(matches!(s.finish(&BTreeMap::new()), Err(Error::InvalidPhase(..))));
        }
    }

    #[test]
    fn replayed_digest_is_caught_at_round3() {
        // a digest replayed from a different session registers fine in
        // round 2 but cannot match the commitment revealed in round 3
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(91);
        let kps: Vec<KeyPair> = (0..2).map(|_| scheme.keygen(&mut rng)).collect();
        let set = SignerSet::new(&scheme, kps.iter().map(|k| k.public()).collect()).unwrap();
        let mut sessions: Vec<SignSession> = kps
            .iter()
            .map(|kp| SignSession::new(scheme.clone(), kp.clone(), set.clone(), b"m").unwrap())
            .collect();
        sessions.sort_by_key(|s| s.my_index());

        let mut digests = BTreeMap::new();
        for s in sessions.iter_mut() {
            digests.insert(s.my_index(), s.round1(&mut rng).unwrap());
        }
        // replay: overwrite signer 1's digest with one from another session
        let mut other = SignSession::new(scheme.clone(), kps[1].clone(), set.clone(), b"m").unwrap();
        let replayed = other.round1(&mut rng).unwrap();
        let changed = digests.insert(1, replayed.clone()) != Some(replayed);

        let mut cmts = BTreeMap::new();
        for s in sessions.iter_mut() {
            cmts.insert(s.my_index(), s.round2(&digests).unwrap());
        }
        if changed {
            for s in sessions.iter_mut() {
                assert!(matches!(
                    s.round3(&cmts, &mut rng),
                    Err(Error::CommitmentMismatch { index: 1 })
                ));
            }
        }
    }

    #[test]
    fn registration_digests_have_commitment_entropy() {
        // same signer, same inputs, fresh session randomness: digests differ
        // unless the commitments collide
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(92);
        let kp = scheme.keygen(&mut rng);
        let set = SignerSet::new(&scheme, vec![kp.public()]).unwrap();
        let mut distinct = 0;
        let trials = 200;
        for _ in 0..trials {
            let mut s1 = SignSession::new(scheme.clone(), kp.clone(), set.clone(), b"m").unwrap();
            let mut s2 = SignSession::new(scheme.clone(), kp.clone(), set.clone(), b"m").unwrap();
            if s1.round1(&mut rng).unwrap() != s2.round1(&mut rng).unwrap() {
                distinct += 1;
            }
        }
        // 11 possible commitments on the tiny group, so some collisions are
        // expected but most pairs must differ
        assert!(distinct > trials * 7 / 10, "distinct = {distinct}");
    }

    #[test]
    fn overstated_t_on_rlwe_still_accepts() {
        // eta_t grows with t and the verification equation is t-free, so a
        // verifier given t+1 accepts an honest t-signer signature; recorded
        // as observed behavior.
        let scheme = desk_rlwe(93);
        let mut rng = ChaCha20Rng::seed_from_u64(94);
        loop {
            let kps: Vec<KeyPair> = (0..2).map(|_| scheme.keygen(&mut rng)).collect();
            match run_protocol(&scheme, &kps, b"m", &mut rng) {
                Ok((agg, sig)) => {
                    assert!(verify(&scheme, &agg, b"m", &sig));
                    let overstated = AggregatedKey { pk_bar: agg.pk_bar.clone(), t: agg.t + 1 };
                    assert!(verify(&scheme, &overstated, b"m", &sig));
                    break;
                }
                Err(Error::Abort) => continue,
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn verify_works_from_serialized_state_only() {
        // reconstruct everything a verifier holds from bytes; no signer
        // state is in scope
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(95);
        let kps: Vec<KeyPair> = (0..3).map(|_| scheme.keygen(&mut rng)).collect();
        let (agg, sig) = run_protocol(&scheme, &kps, b"msg", &mut rng).unwrap();
        let pk_bytes = scheme.pk_to_bytes(&agg.pk_bar).unwrap();
        let cmt_bytes = scheme.cmt_to_bytes(&sig.cmt_bar).unwrap();
        let rsp_bytes = scheme.rsp_to_bytes(&sig.rsp_bar).unwrap();
        let t = agg.t;
        drop((kps, agg, sig));

        let agg = AggregatedKey { pk_bar: scheme.pk_from_bytes(&pk_bytes).unwrap(), t };
        let sig = MultiSignature {
            cmt_bar: scheme.cmt_from_bytes(&cmt_bytes).unwrap(),
            rsp_bar: scheme.rsp_from_bytes(&rsp_bytes).unwrap(),
        };
        assert!(verify(&scheme, &agg, b"msg", &sig));
    }

    #[test]
    fn message_perturbation_never_verifies() {
        let scheme = tiny_schnorr();
        let mut rng = ChaCha20Rng::seed_from_u64(96);
        let kps: Vec<KeyPair> = (0..2).map(|_| scheme.keygen(&mut rng)).collect();
        let (agg, sig) = run_protocol(&scheme, &kps, b"the message", &mut rng).unwrap();
        let mut accepts = 0;
        for i in 0..1000u32 {
            let m = format!("the message {i}");
            if verify(&scheme, &agg, m.as_bytes(), &sig) {
                accepts += 1;
            }
        }
        // tiny Theta (11 challenges) makes rare hash collisions possible in
        // principle; a flipped message must still reject in the typical case
        assert!(accepts <= 2, "accepts = {accepts}");
    }

    #[test]
    fn envelope_round_trip_and_validation() {
        let env = Envelope::new(SchemeId::Schnorr, [7u8; 16], 2, 4, vec![1, 2, 3]);
        let bytes = env.to_bytes();
        assert_eq!(Envelope::from_bytes(&bytes).unwrap(), env);

        let mut bad = bytes.clone();
        bad[0] = 9;
        assert!(matches!(Envelope::from_bytes(&bad), Err(Error::BadVersion(9))));
        let mut bad = bytes.clone();
        bad[1] = 0x77;
        assert!(matches!(Envelope::from_bytes(&bad), Err(Error::BadSchemeTag(0x77))));
        let mut bad = bytes.clone();
        bad[18] = 4;
        assert!(Envelope::from_bytes(&bad).is_err());
        assert!(Envelope::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn forced_rlwe_abort_is_terminal() {
        use rand::RngCore;

        /// RNG pinned at the maximum: every mask coefficient lands on +B_Y,
        /// so no slot can enter the response set.
        struct MaxRng;
        impl RngCore for MaxRng {
            fn next_u32(&mut self) -> u32 {
                u32::MAX
            }
            fn next_u64(&mut self) -> u64 {
                u64::MAX
            }
            fn fill_bytes(&mut self, dest: &mut [u8]) {
                dest.fill(0xff);
            }
            fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
                dest.fill(0xff);
                Ok(())
            }
        }

        let scheme = desk_rlwe(97);
        let mut rng = ChaCha20Rng::seed_from_u64(98);
        let kps: Vec<KeyPair> = (0..2).map(|_| scheme.keygen(&mut rng)).collect();
        let set = SignerSet::new(&scheme, kps.iter().map(|k| k.public()).collect()).unwrap();
        let mut sessions: Vec<SignSession> = kps
            .iter()
            .map(|kp| SignSession::new(scheme.clone(), kp.clone(), set.clone(), b"m").unwrap())
            .collect();
        sessions.sort_by_key(|s| s.my_index());

        // signer 0 commits with the rigged rng; all its masks sit at +B_Y
        let mut digests = BTreeMap::new();
        digests.insert(sessions[0].my_index(), sessions[0].round1(&mut MaxRng).unwrap());
        digests.insert(sessions[1].my_index(), sessions[1].round1(&mut rng).unwrap());
        let mut cmts = BTreeMap::new();
        for s in sessions.iter_mut() {
            cmts.insert(s.my_index(), s.round2(&digests).unwrap());
        }
        let r = sessions[0].round3(&cmts, &mut rng);
        assert!(matches!(r, Err(Error::Abort)));
        assert_eq!(sessions[0].phase(), Phase::Aborted);
        assert!(matches!(sessions[0].finish(&BTreeMap::new()), Err(Error::InvalidPhase(..))));
    }
}
