//! Schnorr identification over a prime-order group: commit `X = g^x`,
//! challenge `c` from `Z_q`, response `z = s c + x (mod q)`, accepted when
//! `g^z = A^c X`. The verification parameter `t` is accepted and ignored to
//! honor the uniform `V_t` interface.

use rand::Rng;

use crate::algebra::{GroupElement, GroupParams, ZqScalar};

#[derive(Clone, Debug)]
pub struct SchnorrKeyPair {
    pub secret: ZqScalar,
    pub public: GroupElement,
}

/// Secret commit nonce; consumed by [`respond`], so it cannot back two
/// responses.
#[derive(Debug)]
pub struct SchnorrCommitState {
    nonce: ZqScalar,
}

pub fn keygen(params: &GroupParams, rng: &mut impl Rng) -> SchnorrKeyPair {
    from_secret(params, params.sample_scalar(rng))
}

pub fn from_secret(params: &GroupParams, secret: ZqScalar) -> SchnorrKeyPair {
    let public = params.exp(&params.generator(), &secret);
    SchnorrKeyPair { secret, public }
}

pub fn commit(params: &GroupParams, rng: &mut impl Rng) -> (SchnorrCommitState, GroupElement) {
    commit_from_nonce(params, params.sample_scalar(rng))
}

pub fn commit_from_nonce(params: &GroupParams, nonce: ZqScalar) -> (SchnorrCommitState, GroupElement) {
    let x_cmt = params.exp(&params.generator(), &nonce);
    (SchnorrCommitState { nonce }, x_cmt)
}

/// `z = s c + x mod q`, consuming the nonce.
pub fn respond(params: &GroupParams, secret: &ZqScalar, state: SchnorrCommitState, c: &ZqScalar) -> ZqScalar {
    params.scalar_add(&params.scalar_mul(secret, c), &state.nonce)
}

/// `g^z = pk^c X`; `t` is unused by this backend.
pub fn verify(
    params: &GroupParams,
    pk: &GroupElement,
    _t: u32,
    x_cmt: &GroupElement,
    c: &ZqScalar,
    z: &ZqScalar,
) -> bool {
    let lhs = params.exp(&params.generator(), z);
    let rhs = params.mul(&params.exp(pk, c), x_cmt);
    lhs == rhs
}

/// Simulator: `z` uniform, `X = g^z pk^{-c}`. For each fixed challenge the
/// simulated `(X, z)` has exactly the law of a real transcript.
pub fn simulate(params: &GroupParams, pk: &GroupElement, c: &ZqScalar, rng: &mut impl Rng) -> (GroupElement, ZqScalar) {
    let z = params.sample_scalar(rng);
    let x_cmt = params.mul(
        &params.exp(&params.generator(), &z),
        &params.inv(&params.exp(pk, c)),
    );
    (x_cmt, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::{BTreeMap, BTreeSet};

    fn tiny() -> GroupParams {
        GroupParams::tiny_test_group()
    }

    fn s(params: &GroupParams, v: u64) -> ZqScalar {
        params.scalar_from_u64(v)
    }

    #[test]
    fn keygen_known_values() {
        let g = tiny();
        assert_eq!(from_secret(&g, s(&g, 3)).public.value(), &BigUint::from(8u8));
        assert_eq!(from_secret(&g, s(&g, 0)).public, g.identity());
    }

    #[test]
    fn keygen_stays_in_subgroup() {
        let g = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(50);
        let q = g.q().clone();
        for _ in 0..10_000 {
            let kp = keygen(&g, &mut rng);
            assert_eq!(kp.public.value().modpow(&q, g.p()), BigUint::from(1u8));
        }
    }

    #[test]
    fn commit_known_values() {
        let g = tiny();
        let (_, x) = commit_from_nonce(&g, s(&g, 4));
        assert_eq!(x.value(), &BigUint::from(16u8));
        let (_, x) = commit_from_nonce(&g, s(&g, 0));
        assert_eq!(x, g.identity());
    }

    #[test]
    fn commitment_min_entropy_on_tiny_group() {
        // X must be uniform over the 11 subgroup elements.
        let g = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(51);
        let mut counts: BTreeMap<BigUint, u64> = BTreeMap::new();
        let trials = 110_000;
        for _ in 0..trials {
            let (_, x) = commit(&g, &mut rng);
            *counts.entry(x.value().clone()).or_default() += 1;
        }
        assert_eq!(counts.len(), 11);
        let expected = trials as f64 / 11.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 10 degrees of freedom, significance 0.001
        assert!(chi2 < 29.588, "chi2 = {chi2}");
    }

    #[test]
    fn respond_arithmetic() {
        let g = tiny();
        // z = 3*5 + 4 = 19 = 8 mod 11
        let (st, _) = commit_from_nonce(&g, s(&g, 4));
        assert_eq!(respond(&g, &s(&g, 3), st, &s(&g, 5)), s(&g, 8));
        // c = 0 leaves z = x
        let (st, _) = commit_from_nonce(&g, s(&g, 4));
        assert_eq!(respond(&g, &s(&g, 3), st, &s(&g, 0)), s(&g, 4));
        // s = 0 leaves z = x for every c
        for c in 0..11 {
            let (st, _) = commit_from_nonce(&g, s(&g, 7));
            assert_eq!(respond(&g, &s(&g, 0), st, &s(&g, c)), s(&g, 7));
        }
    }

    #[test]
    fn verify_known_transcripts() {
        let g = tiny();
        let a = g.element(BigUint::from(8u8)).unwrap();
        let x = g.element(BigUint::from(16u8)).unwrap();
        assert!(verify(&g, &a, 1, &x, &s(&g, 5), &s(&g, 8)));
        assert!(!verify(&g, &a, 1, &x, &s(&g, 5), &s(&g, 9)));
        // identity witness
        assert!(verify(&g, &g.identity(), 1, &g.identity(), &s(&g, 6), &s(&g, 0)));
    }

    #[test]
    fn completeness_exhaustive_over_tiny_group() {
        let g = tiny();
        for secret in 0..11 {
            let kp = from_secret(&g, s(&g, secret));
            for nonce in 0..11 {
                for c in 0..11 {
                    let (st, x) = commit_from_nonce(&g, s(&g, nonce));
                    let z = respond(&g, &kp.secret, st, &s(&g, c));
                    assert!(verify(&g, &kp.public, 1, &x, &s(&g, c), &z));
                }
            }
        }
    }

    #[test]
    fn simulate_known_value() {
        // pk = 8, c = 5, forced z = 8: X = 2^8 * 8^{-5} = 3 * 13 = 16 mod 23.
        let g = tiny();
        let pk = g.element(BigUint::from(8u8)).unwrap();
        let z = s(&g, 8);
        let x = g.mul(&g.exp(&g.generator(), &z), &g.inv(&g.exp(&pk, &s(&g, 5))));
        assert_eq!(x.value(), &BigUint::from(16u8));
        assert!(verify(&g, &pk, 1, &x, &s(&g, 5), &z));
    }

    #[test]
    fn simulate_passes_verification() {
        let g = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(52);
        for _ in 0..200 {
            let kp = keygen(&g, &mut rng);
            let c = g.sample_scalar(&mut rng);
            let (x, z) = simulate(&g, &kp.public, &c, &mut rng);
            assert!(verify(&g, &kp.public, 1, &x, &c, &z));
            if c.is_zero() {
                assert_eq!(x, g.exp(&g.generator(), &z));
            }
        }
    }

    #[test]
    fn simulator_law_equals_real_law_by_enumeration() {
        // For each fixed (secret, c): the real transcript ranges over x in
        // Z_11 and the simulated one over z in Z_11; the induced (X, z)
        // multisets must coincide exactly.
        let g = tiny();
        for secret in [0u64, 3, 7] {
            let kp = from_secret(&g, s(&g, secret));
            for c in 0..11 {
                let c = s(&g, c);
                let mut real: BTreeSet<(BigUint, BigUint)> = BTreeSet::new();
                for nonce in 0..11 {
                    let (st, x) = commit_from_nonce(&g, s(&g, nonce));
                    let z = respond(&g, &kp.secret, st, &c);
                    real.insert((x.value().clone(), z.value().clone()));
                }
                let mut simulated = BTreeSet::new();
                for zv in 0..11 {
                    let z = s(&g, zv);
                    let x = g.mul(&g.exp(&g.generator(), &z), &g.inv(&g.exp(&kp.public, &c)));
                    simulated.insert((x.value().clone(), z.value().clone()));
                }
                assert_eq!(real, simulated);
            }
        }
    }

    #[test]
    fn linearity_conditions_hold() {
        // Aggregated z = sum w_i z_i against X = prod X_i^{w_i} verifies
        // under pkbar = prod pk_i^{w_i} for a shared challenge.
        let g = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        for _ in 0..500 {
            let t = rng.gen_range(1..=6usize);
            let kps: Vec<_> = (0..t).map(|_| keygen(&g, &mut rng)).collect();
            let ws: Vec<_> = (0..t).map(|_| g.sample_scalar(&mut rng)).collect();
            let c = g.sample_scalar(&mut rng);

            // linearity ii: skbar is the secret of pkbar
            let mut skbar = g.scalar_zero();
            let mut pkbar = g.identity();
            for (kp, w) in kps.iter().zip(&ws) {
                skbar = g.scalar_add(&skbar, &g.scalar_mul(w, &kp.secret));
                pkbar = g.mul(&pkbar, &g.exp(&kp.public, w));
            }
            assert_eq!(g.exp(&g.generator(), &skbar), pkbar);

            // linearity iii: aggregated transcript verifies
            let mut xbar = g.identity();
            let mut zbar = g.scalar_zero();
            for (kp, w) in kps.iter().zip(&ws) {
                let (st, x) = commit(&g, &mut rng);
                let z = respond(&g, &kp.secret, st, &c);
                xbar = g.mul(&xbar, &g.exp(&x, w));
                zbar = g.scalar_add(&zbar, &g.scalar_mul(w, &z));
            }
            assert!(verify(&g, &pkbar, t as u32, &xbar, &c, &zbar));
        }
    }
}
