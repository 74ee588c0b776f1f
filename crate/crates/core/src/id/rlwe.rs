//! Lattice identification over `R_q`: mu-slot commitment `v = a y_1 + y_2`,
//! small-norm challenge, slot-selected response and t-parameterized norm
//! verification, plus the transcript simulator.
//!
//! The response aborts (no restart) when no slot lands in the response set;
//! the caller decides what a failed response means.

use rand::Rng;

use crate::algebra::{RingElement, RingParams, RingVector};
use crate::error::{Error, Result};

/// Ring parameters together with the public element `a` (invertible in
/// `R_q`).
#[derive(Clone, Debug)]
pub struct RlweParams {
    ring: RingParams,
    a: RingElement,
}

#[derive(Clone, Debug)]
pub struct RlweKeyPair {
    pub s1: RingElement,
    pub s2: RingElement,
    /// `u = a s1 + s2`.
    pub u: RingElement,
}

/// Secret mask vectors for one commitment; consumed by [`respond`].
#[derive(Debug)]
pub struct RlweCommitState {
    y1: RingVector,
    y2: RingVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RlweResponse {
    pub z1: RingElement,
    pub z2: RingElement,
}

impl RlweParams {
    /// System setup: sample `a` uniformly and resample until invertible.
    /// (How `a` is drawn from the invertible elements is left open by the
    /// construction; uniform-until-invertible keeps the distribution uniform
    /// over them.)
    pub fn setup(ring: RingParams, rng: &mut impl Rng) -> Self {
        let (a, _) = sample_invertible(&ring, rng);
        Self::from_parts(ring, a).expect("setup parameters must admit the mask set")
    }

    /// Wraps explicitly chosen parameters; `a` must be invertible and the
    /// mask set must fit the canonical coefficient range so that norms of
    /// honest values never wrap mod q.
    pub fn from_parts(ring: RingParams, a: RingElement) -> Result<Self> {
        if ring.mask_bound() > ((ring.q() - 1) / 2) as i64 {
            return Err(Error::InvalidParams(
                "mask set exceeds the coefficient range; pick a larger q".into(),
            ));
        }
        ring.invert(&a)?;
        Ok(RlweParams { ring, a })
    }

    pub fn ring(&self) -> &RingParams {
        &self.ring
    }

    pub fn a(&self) -> &RingElement {
        &self.a
    }
}

/// Uniform invertible ring element plus the number of draws it took.
pub fn sample_invertible(ring: &RingParams, rng: &mut impl Rng) -> (RingElement, u32) {
    let mut draws = 0;
    loop {
        draws += 1;
        let cand = ring.sample_uniform(rng);
        if ring.invert(&cand).is_ok() {
            return (cand, draws);
        }
    }
}

pub fn keygen(params: &RlweParams, rng: &mut impl Rng) -> RlweKeyPair {
    let s1 = params.ring.sample_gaussian(rng);
    let s2 = params.ring.sample_gaussian(rng);
    from_secrets(params, s1, s2).expect("gaussian draws satisfy the truncation range")
}

/// Builds a keypair from given secrets, recomputing `u` and checking the
/// truncation-range invariant.
pub fn from_secrets(params: &RlweParams, s1: RingElement, s2: RingElement) -> Result<RlweKeyPair> {
    if !params.ring.in_gaussian_range(&s1) || !params.ring.in_gaussian_range(&s2) {
        return Err(Error::Malformed("secret outside the gaussian truncation range"));
    }
    let u = params.ring.add(&params.ring.mul(&params.a, &s1), &s2);
    Ok(RlweKeyPair { s1, s2, u })
}

pub fn commit(params: &RlweParams, rng: &mut impl Rng) -> (RlweCommitState, RingVector) {
    let ring = &params.ring;
    let y1 = ring.vector((0..ring.mu()).map(|_| ring.sample_mask(rng)).collect()).unwrap();
    let y2 = ring.vector((0..ring.mu()).map(|_| ring.sample_mask(rng)).collect()).unwrap();
    commit_from_masks(params, y1, y2)
}

/// Commitment from explicit mask vectors: `v_j = a y_{1j} + y_{2j}`.
pub fn commit_from_masks(params: &RlweParams, y1: RingVector, y2: RingVector) -> (RlweCommitState, RingVector) {
    let ring = &params.ring;
    let v = ring
        .vector(
            y1.elems()
                .iter()
                .zip(y2.elems())
                .map(|(y1j, y2j)| ring.add(&ring.mul(&params.a, y1j), y2j))
                .collect(),
        )
        .unwrap();
    (RlweCommitState { y1, y2 }, v)
}

/// Response: `z_{bj} = s_b c + y_{bj}`, `A` the slots where both land in the
/// response set. Empty `A` aborts. Otherwise a uniformly chosen `j*` yields
/// `z_b = z_{b j*} + sum_{j != j*} y_{bj}`, which is independent of the
/// choice of `j*` (both forms equal `s_b c + sum_j y_{bj}` exactly).
pub fn respond(
    params: &RlweParams,
    kp: &RlweKeyPair,
    state: RlweCommitState,
    c: &RingElement,
    rng: &mut impl Rng,
) -> Result<RlweResponse> {
    let ring = &params.ring;
    if !ring.is_challenge(c) {
        return Err(Error::ChallengeOutOfSet);
    }
    let s1c = ring.mul(&kp.s1, c);
    let s2c = ring.mul(&kp.s2, c);
    let slots: Vec<usize> = (0..ring.mu())
        .filter(|&j| {
            ring.in_slot_set(&ring.add(&s1c, &state.y1.elems()[j]))
                && ring.in_slot_set(&ring.add(&s2c, &state.y2.elems()[j]))
        })
        .collect();
    if slots.is_empty() {
        return Err(Error::Abort);
    }
    let jstar = slots[rng.gen_range(0..slots.len())];

    let assemble = |sc: &RingElement, y: &RingVector| {
        let mut z = ring.add(sc, &y.elems()[jstar]);
        for (j, yj) in y.elems().iter().enumerate() {
            if j != jstar {
                z = ring.add(&z, yj);
            }
        }
        z
    };
    let z1 = assemble(&s1c, &state.y1);
    let z2 = assemble(&s2c, &state.y2);

    debug_assert_eq!(z1, {
        let mask_sum = state.y1.slot_sum(ring);
        ring.add(&s1c, &mask_sum)
    });

    Ok(RlweResponse { z1, z2 })
}

/// `V_t`: both response norms within `eta_t` and
/// `sum_j v_j = a z1 + z2 - u c`, all exact.
pub fn verify(
    params: &RlweParams,
    u_agg: &RingElement,
    t: u32,
    v: &RingVector,
    c: &RingElement,
    rsp: &RlweResponse,
) -> bool {
    if t < 1 || v.elems().len() != params.ring.mu() {
        return false;
    }
    let ring = &params.ring;
    let eta = ring.eta(t);
    if rsp.z1.inf_norm() > eta || rsp.z2.inf_norm() > eta {
        return false;
    }
    let lhs = v.slot_sum(ring);
    let rhs = ring.sub(
        &ring.add(&ring.mul(&params.a, &rsp.z1), &rsp.z2),
        &ring.mul(u_agg, c),
    );
    lhs == rhs
}

/// Transcript simulator: a uniform slot `j*` carries
/// `v_{j*} = a z_{1j*} + z_{2j*} - u c` for uniform response-set draws, the
/// remaining slots are honest mask commitments, and the output responses sum
/// the slot values with the masks.
pub fn simulate(params: &RlweParams, u: &RingElement, c: &RingElement, rng: &mut impl Rng) -> (RingVector, RlweResponse) {
    let ring = &params.ring;
    let mu = ring.mu();
    let jstar = rng.gen_range(0..mu);
    let z1s = ring.sample_slot(rng);
    let z2s = ring.sample_slot(rng);
    let mut v = Vec::with_capacity(mu);
    let mut z1 = z1s.clone();
    let mut z2 = z2s.clone();
    for j in 0..mu {
        if j == jstar {
            v.push(ring.sub(
                &ring.add(&ring.mul(&params.a, &z1s), &z2s),
                &ring.mul(u, c),
            ));
        } else {
            let y1 = ring.sample_mask(rng);
            let y2 = ring.sample_mask(rng);
            v.push(ring.add(&ring.mul(&params.a, &y1), &y2));
            z1 = ring.add(&z1, &y1);
            z2 = ring.add(&z2, &y2);
        }
    }
    (ring.vector(v).unwrap(), RlweResponse { z1, z2 })
}
