//! Single-branch ciphertext-policy ABE over a Type-3 pairing.
//!
//! ```text
//! PK  = (g_a = g1^a, e(g1,g2)^alpha, u, v)      MSK = (alpha, a)
//! SK  = (K = g2^{alpha + a t}, K0 = g2^t, K_x = H(x)^t for x in S)
//! CT  = (C = M e(g1,g2)^{alpha s}, C' = g1^s,
//!        C_i = g_a^{lambda_i} H(rho(i))^{-r_i}, D_i = g2^{r_i})
//! ```
//!
//! `H` hashes attributes into G1, so `K_x` and `C_i` sit in G1 while `K`,
//! `K0` and `D_i` sit in G2. Recovery computes
//!
//! ```text
//! e(C', K) / prod_i (e(C_i, K0) e(K_{rho(i)}, D_i))^{w_i} = e(g1,g2)^{alpha s}
//! ```
//!
//! and the same product over a key raised to `1/z` yields `e(g1,g2)^{alpha s / z}`.

use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};

use crate::groups::{
    hash_to_g1, hash_to_g1_with_dst, pairing, random_nonzero_scalar, random_scalar, GroupDescription, Gt,
    Scalar, G1, G2,
};
use crate::policy::{LsssPolicy, ReconCoeffs};
use crate::{Error, Result};

const UV_DST: &[u8] = b"VABE-UV-v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub group: GroupDescription,
    pub g_a: G1,
    pub egg_alpha: Gt,
    pub u: G1,
    pub v: G1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecret {
    pub alpha: Scalar,
    pub a: Scalar,
}

pub type KeyId = [u8; 16];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    pub key_id: KeyId,
    pub k: G2,
    pub k0: G2,
    /// `H(x)^t` per attribute; the key set is the attribute set `S`.
    pub k_attr: BTreeMap<String, G1>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchRow {
    pub c: G1,
    pub d: G2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherBranch {
    pub c: Gt,
    pub c_prime: G1,
    pub rows: Vec<BranchRow>,
}

/// Key material usable for recovery: a private key, or the same key with
/// every component raised to `1/z`.
pub trait KeyComponents {
    fn k(&self) -> &G2;
    fn k0(&self) -> &G2;
    fn component(&self, attr: &str) -> Option<&G1>;
    fn attributes(&self) -> BTreeSet<String>;
}

impl KeyComponents for PrivateKey {
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

impl PrivateKey {
    pub fn attributes(&self) -> BTreeSet<String> {
        KeyComponents::attributes(self)
    }

    /// Publicly checkable well-formedness:
    /// `e(g1, K) = e(g,g)^alpha e(g_a, K0)` and `e(K_x, g2) = e(H(x), K0)`.
    pub fn is_well_formed(&self, pp: &PublicParams) -> bool {
        let g1 = pp.group.g1;
        if pairing(&g1, &self.k) != pp.egg_alpha * pairing(&pp.g_a, &self.k0) {
            return false;
        }
        self.k_attr
            .iter()
            .all(|(x, kx)| pairing(kx, &pp.group.g2) == pairing(&hash_to_g1(x.as_bytes()), &self.k0))
    }
}

pub fn random_key_id<R: RngCore>(rng: &mut R) -> KeyId {
    let mut id = [0u8; 16];
    rng.fill_bytes(&mut id);
    id
}

pub fn setup<R: RngCore + CryptoRng>(rng: &mut R) -> (PublicParams, MasterSecret) {
    let group = GroupDescription::bls12_381();
    let alpha = random_nonzero_scalar(rng);
    let a = random_nonzero_scalar(rng);
    let g_a = group.g1.pow(&a);
    let egg_alpha = group.gt_gen.pow(&alpha);
    // u and v come from hashing fresh seeds, so nobody knows log_u(v).
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let u = hash_to_g1_with_dst(&[b"u".as_slice(), &seed].concat(), UV_DST);
    rng.fill_bytes(&mut seed);
    let v = hash_to_g1_with_dst(&[b"v".as_slice(), &seed].concat(), UV_DST);
    (PublicParams { group, g_a, egg_alpha, u, v }, MasterSecret { alpha, a })
}

impl MasterSecret {
    pub fn is_consistent_with(&self, pp: &PublicParams) -> bool {
        pp.group.gt_gen.pow(&self.alpha) == pp.egg_alpha && pp.group.g1.pow(&self.a) == pp.g_a
    }
}

pub fn keygen<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    msk: &MasterSecret,
    attrs: &BTreeSet<String>,
    rng: &mut R,
) -> Result<PrivateKey> {
    if attrs.is_empty() {
        return Err(Error::EmptyAttributes);
    }
    let t = random_nonzero_scalar(rng);
    let g2 = pp.group.g2;
    let k = g2.pow(&(msk.alpha + msk.a * t));
    let k0 = g2.pow(&t);
    let k_attr = attrs
        .iter()
        .map(|x| (x.clone(), hash_to_g1(x.as_bytes()).pow(&t)))
        .collect();
    Ok(PrivateKey { key_id: random_key_id(rng), k, k0, k_attr })
}

pub fn encrypt_branch<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    m: &Gt,
    lsss: &LsssPolicy,
    rng: &mut R,
) -> CipherBranch {
    let s = random_scalar(rng);
    encrypt_branch_with_secret(pp, m, lsss, s, rng)
}

/// [`encrypt_branch`] with caller-chosen exponent `s`.
pub fn encrypt_branch_with_secret<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    m: &Gt,
    lsss: &LsssPolicy,
    s: Scalar,
    rng: &mut R,
) -> CipherBranch {
    let shares = lsss.share_secret(s, rng);
    let rows = shares
        .shares
        .iter()
        .enumerate()
        .map(|(i, lambda)| {
            let r = random_scalar(rng);
            let h = hash_to_g1(lsss.attribute(i).as_bytes());
            BranchRow { c: pp.g_a.pow(lambda) * h.pow(&(-r)), d: pp.group.g2.pow(&r) }
        })
        .collect();
    CipherBranch { c: *m * pp.egg_alpha.pow(&s), c_prime: pp.group.g1.pow(&s), rows }
}

/// Computes `e(C', K) / prod_i (e(C_i, K0) e(K_{rho(i)}, D_i))^{w_i}`, which
/// is `e(g1,g2)^{alpha s / z}` for a key blinded by `1/z` (`z = 1` for a
/// private key). Costs `2|w| + 1` pairings and `|w|` target-group
/// exponentiations.
pub fn recover_blinded<K: KeyComponents + ?Sized>(
    branch: &CipherBranch,
    lsss: &LsssPolicy,
    key: &K,
    coeffs: &ReconCoeffs,
) -> Result<Gt> {
    if branch.rows.len() != lsss.rows() {
        return Err(Error::Inconsistent("branch row count differs from the policy"));
    }
    let mut denom = Gt::identity();
    for (i, w) in coeffs.iter() {
        let row = branch
            .rows
            .get(*i)
            .ok_or(Error::Inconsistent("coefficient refers to a missing row"))?;
        let k_rho = key
            .component(lsss.attribute(*i))
            .ok_or(Error::Inconsistent("coefficient on a row the key cannot use"))?;
        let term = pairing(&row.c, key.k0()) * pairing(k_rho, &row.d);
        denom = denom * term.pow(w);
    }
    Ok(pairing(&branch.c_prime, key.k()) / denom)
}

/// Plain decryption of one branch.
pub fn decrypt_basic(sk: &PrivateKey, lsss: &LsssPolicy, branch: &CipherBranch) -> Result<Gt> {
    let coeffs = lsss
        .recon_coeffs(&sk.attributes())
        .ok_or(Error::NotSatisfied)?;
    let blinded = recover_blinded(branch, lsss, sk, &coeffs)?;
    Ok(branch.c / blinded)
}

impl CipherBranch {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}
