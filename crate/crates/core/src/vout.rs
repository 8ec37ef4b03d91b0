//! Verifiable outsourced decryption.
//!
//! Encryption runs the single-branch scheme twice under one policy: branch
//! one hides the message `M`, branch two a fresh random tag `M'`. The
//! commitment `C^ = u^{H1(M)} v^{H2(M')}` binds the pair. A proxy holding
//! the transformation key `TK = SK^{1/z}` reduces both branches to
//! `e(g,g)^{alpha s / z}`; the user raises them to `z`, unblinds, and accepts
//! only if the recovered pair opens the commitment.

use std::collections::BTreeSet;

use ff::Field;
use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::abe::{
    decrypt_basic, encrypt_branch_with_secret, random_key_id, recover_blinded, CipherBranch, KeyComponents,
    KeyId, PrivateKey, PublicParams,
};
use crate::envelope::codec;
use crate::groups::{hash_to_scalar, random_gt, random_nonzero_scalar, random_scalar, Gt, Scalar, G1, G2, H1_TAG, H2_TAG};
use crate::policy::LsssPolicy;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub policy: LsssPolicy,
    pub commitment: G1,
    pub branch1: CipherBranch,
    pub branch2: CipherBranch,
}

/// The constant-size part of a ciphertext the user keeps while the proxy
/// transforms the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextHeader {
    pub commitment: G1,
    pub c1: Gt,
    pub c2: Gt,
    pub policy_digest: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformKey {
    pub key_id: KeyId,
    pub k: G2,
    pub k0: G2,
    pub k_attr: std::collections::BTreeMap<String, G1>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetrieveKey {
    pub key_id: KeyId,
    pub z: Scalar,
}

/// The proxy's output. `key_id` names the transformation key used and is
/// not covered by verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformedCiphertext {
    pub key_id: KeyId,
    pub t_hat: G1,
    pub t1: Gt,
    pub t1_prime: Gt,
    pub t2: Gt,
    pub t2_prime: Gt,
}

/// Ephemeral values of one encryption, for tests and diagnostics.
#[derive(Clone, Debug)]
pub struct EncryptionTrace {
    pub tag: Gt,
    pub s1: Scalar,
    pub s2: Scalar,
}

impl KeyComponents for TransformKey {
    fn k(&self) -> &G2 {
        &self.k
    }
    fn k0(&self) -> &G2 {
        &self.k0
    }
    fn component(&self, attr: &str) -> Option<&G1> {
        self.k_attr.get(attr)
    }
    fn attributes(&self) -> BTreeSet<String> {
        self.k_attr.keys().cloned().collect()
    }
}

impl TransformKey {
    pub fn attributes(&self) -> BTreeSet<String> {
        KeyComponents::attributes(self)
    }
}

pub fn policy_digest(policy: &LsssPolicy) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"VABE-POLICY-v1");
    h.update(codec::encode_policy(policy));
    h.finalize().into()
}

impl Ciphertext {
    pub fn header(&self) -> CiphertextHeader {
        CiphertextHeader {
            commitment: self.commitment,
            c1: self.branch1.c,
            c2: self.branch2.c,
            policy_digest: policy_digest(&self.policy),
        }
    }
}

pub fn commit(pp: &PublicParams, m: &Gt, tag: &Gt) -> G1 {
    pp.u.pow(&hash_to_scalar(H1_TAG, m)) * pp.v.pow(&hash_to_scalar(H2_TAG, tag))
}

pub fn verify_commitment(pp: &PublicParams, commitment: &G1, m: &Gt, tag: &Gt) -> bool {
    commit(pp, m, tag) == *commitment
}

pub fn encrypt<R: RngCore + CryptoRng>(pp: &PublicParams, m: &Gt, lsss: &LsssPolicy, rng: &mut R) -> Ciphertext {
    encrypt_traced(pp, m, lsss, rng).0
}

/// [`encrypt`] that also returns the verification tag and branch exponents.
pub fn encrypt_traced<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    m: &Gt,
    lsss: &LsssPolicy,
    rng: &mut R,
) -> (Ciphertext, EncryptionTrace) {
    let tag = random_gt(rng);
    let s1 = random_scalar(rng);
    let s2 = random_scalar(rng);
    let branch1 = encrypt_branch_with_secret(pp, m, lsss, s1, rng);
    let branch2 = encrypt_branch_with_secret(pp, &tag, lsss, s2, rng);
    let ct = Ciphertext { policy: lsss.clone(), commitment: commit(pp, m, &tag), branch1, branch2 };
    (ct, EncryptionTrace { tag, s1, s2 })
}

fn check_shape(ct: &Ciphertext) -> Result<()> {
    let rows = ct.policy.rows();
    if ct.branch1.rows.len() != rows || ct.branch2.rows.len() != rows {
        return Err(Error::Inconsistent("branch row count differs from the policy"));
    }
    Ok(())
}

/// Local decryption with the full key; the result is verified against the
/// commitment like an outsourced one.
pub fn decrypt(pp: &PublicParams, sk: &PrivateKey, ct: &Ciphertext) -> Result<Gt> {
    check_shape(ct)?;
    let m = decrypt_basic(sk, &ct.policy, &ct.branch1)?;
    let tag = decrypt_basic(sk, &ct.policy, &ct.branch2)?;
    if verify_commitment(pp, &ct.commitment, &m, &tag) {
        Ok(m)
    } else {
        Err(Error::VerificationFailed)
    }
}

pub fn gen_tk<R: RngCore + CryptoRng>(pp: &PublicParams, sk: &PrivateKey, rng: &mut R) -> (TransformKey, RetrieveKey) {
    let z = random_nonzero_scalar(rng);
    let key_id = random_key_id(rng);
    gen_tk_with_z(pp, sk, z, key_id)
}

/// Blinds `sk` with a chosen `z`. Panics if `z` is zero.
pub fn gen_tk_with_z(_pp: &PublicParams, sk: &PrivateKey, z: Scalar, key_id: KeyId) -> (TransformKey, RetrieveKey) {
    let z_inv = Option::<Scalar>::from(z.invert()).expect("z must be non-zero");
    let tk = TransformKey {
        key_id,
        k: sk.k.pow(&z_inv),
        k0: sk.k0.pow(&z_inv),
        k_attr: sk.k_attr.iter().map(|(x, kx)| (x.clone(), kx.pow(&z_inv))).collect(),
    };
    (tk, RetrieveKey { key_id, z })
}

/// The proxy's step: reduces both branches to `e(g,g)^{alpha s_b / z}`.
pub fn transform(_pp: &PublicParams, ct: &Ciphertext, tk: &TransformKey) -> Result<TransformedCiphertext> {
    check_shape(ct)?;
    let coeffs = ct
        .policy
        .recon_coeffs(&tk.attributes())
        .ok_or(Error::NotSatisfied)?;
    let t1_prime = recover_blinded(&ct.branch1, &ct.policy, tk, &coeffs)?;
    let t2_prime = recover_blinded(&ct.branch2, &ct.policy, tk, &coeffs)?;
    Ok(TransformedCiphertext {
        key_id: tk.key_id,
        t_hat: ct.commitment,
        t1: ct.branch1.c,
        t1_prime,
        t2: ct.branch2.c,
        t2_prime,
    })
}

/// The user's step: echo checks, unblinding with `z`, and the commitment
/// check. Uses no pairings.
pub fn outdec(
    pp: &PublicParams,
    header: &CiphertextHeader,
    ct_prime: &TransformedCiphertext,
    rk: &RetrieveKey,
) -> Result<Gt> {
    if ct_prime.t_hat != header.commitment || ct_prime.t1 != header.c1 || ct_prime.t2 != header.c2 {
        return Err(Error::VerificationFailed);
    }
    let m = ct_prime.t1 / ct_prime.t1_prime.pow(&rk.z);
    let tag = ct_prime.t2 / ct_prime.t2_prime.pow(&rk.z);
    if verify_commitment(pp, &header.commitment, &m, &tag) {
        Ok(m)
    } else {
        Err(Error::VerificationFailed)
    }
}
