//! Asymmetric pairing groups over BLS12-381.
//!
//! The scheme is written multiplicatively: `a * b` is the group operation
//! and [`G1::pow`] is exponentiation by a [`Scalar`]. Every pairing,
//! exponentiation and hash invoked through these wrappers is recorded by the
//! innermost active [`counted_scope`] on the calling thread.
//!
//! Element placement follows the ciphertext/key split: ciphertext-side
//! values live in [`G1`], key-side values in [`G2`], and pairings are always
//! taken as `pairing(g1_side, g2_side)`.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Div, Mul};

use blstrs::{Compress, G1Affine, G1Projective, G2Affine, G2Projective};
use ff::{Field, PrimeField};
use group::{Curve, Group};
use hkdf::Hkdf;
use num_bigint::BigUint;
use rand_core::{CryptoRng, RngCore};
use sha2::Sha256;
use thiserror::Error;

pub use blstrs::Scalar;

/// Identifier of BLS12-381 in every serialized artifact.
pub const CURVE_BLS12_381: u8 = 0x01;

/// Domain-separation tag for attribute hashing into [`G1`].
pub const ATTR_DST: &[u8] = b"VABE-ATTR-v1";
/// Domain tag for the commitment hash applied to the message.
pub const H1_TAG: &[u8] = b"VABE-H1-v1";
/// Domain tag for the commitment hash applied to the verification tag.
pub const H2_TAG: &[u8] = b"VABE-H2-v1";

const G1_COMPRESSED: usize = 48;
const G2_COMPRESSED: usize = 96;
const GT_COMPRESSED: usize = 288;

/// One-byte tags prefixed to every encoded group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum GroupTag {
    G1 = 0x01,
    G2 = 0x02,
    Gt = 0x03,
    Scalar = 0x04,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PointError {
    #[error("expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("group tag {found:#04x} does not match expected {expected:#04x}")]
    WrongTag { expected: u8, found: u8 },
    #[error("curve id {0:#04x} is not supported")]
    WrongCurve(u8),
    #[error("encoding is not a valid element of the prime-order subgroup")]
    Invalid,
}

// ---------------------------------------------------------------------------
// operation counting

/// Exact tally of the expensive group operations executed inside a scope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    pub pairings: u64,
    pub exp_g1: u64,
    pub exp_g2: u64,
    pub exp_gt: u64,
    pub hash_to_group: u64,
    pub hash_to_scalar: u64,
}

impl OpCounter {
    pub fn exponentiations(&self) -> u64 {
        self.exp_g1 + self.exp_g2 + self.exp_gt
    }

    pub fn is_zero(&self) -> bool {
        *self == OpCounter::default()
    }
}

impl fmt::Display for OpCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pairings={} exp_g1={} exp_g2={} exp_gt={} hash_to_group={} hash_to_scalar={}",
            self.pairings, self.exp_g1, self.exp_g2, self.exp_gt, self.hash_to_group, self.hash_to_scalar
        )
    }
}

#[derive(Clone, Copy)]
enum Op {
    Pairing,
    ExpG1,
    ExpG2,
    ExpGt,
    HashToGroup,
    HashToScalar,
}

thread_local! {
    static SCOPES: RefCell<Vec<OpCounter>> = const { RefCell::new(Vec::new()) };
}

fn record(op: Op) {
    SCOPES.with(|scopes| {
        for c in scopes.borrow_mut().iter_mut() {
            match op {
                Op::Pairing => c.pairings += 1,
                Op::ExpG1 => c.exp_g1 += 1,
                Op::ExpG2 => c.exp_g2 += 1,
                Op::ExpGt => c.exp_gt += 1,
                Op::HashToGroup => c.hash_to_group += 1,
                Op::HashToScalar => c.hash_to_scalar += 1,
            }
        }
    });
}

struct ScopeGuard;

impl Drop for ScopeGuard {
    fn drop(&mut self) {
        SCOPES.with(|scopes| {
            scopes.borrow_mut().pop();
        });
    }
}

/// Runs `body` and returns its result together with the operations it
/// performed on this thread. Scopes nest: an operation is charged to every
/// enclosing scope.
pub fn counted_scope<R>(body: impl FnOnce() -> R) -> (R, OpCounter) {
    SCOPES.with(|scopes| scopes.borrow_mut().push(OpCounter::default()));
    let guard = ScopeGuard;
    let result = body();
    let counter = SCOPES.with(|scopes| *scopes.borrow().last().expect("scope pushed above"));
    drop(guard);
    (result, counter)
}

// ---------------------------------------------------------------------------
// scalars

pub fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    Scalar::random(rng)
}

/// Uniform element of `Z_p^*`.
pub fn random_nonzero_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::random(&mut *rng);
        if !bool::from(s.is_zero()) {
            return s;
        }
    }
}

pub fn scalar_from_i64(v: i64) -> Scalar {
    let magnitude = Scalar::from(v.unsigned_abs());
    if v < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Reduces a big-endian byte string of any length modulo `p`.
pub fn scalar_from_be_bytes_reduced(bytes: &[u8]) -> Scalar {
    let shift = Scalar::from(256u64);
    bytes
        .iter()
        .fold(Scalar::ZERO, |acc, b| acc * shift + Scalar::from(*b as u64))
}

pub fn scalar_to_biguint(s: &Scalar) -> BigUint {
    BigUint::from_bytes_be(&s.to_bytes_be())
}

/// Tagged canonical encoding: tag, curve id, 32 big-endian bytes.
pub fn encode_scalar(s: &Scalar) -> Vec<u8> {
    let mut out = Vec::with_capacity(34);
    out.push(GroupTag::Scalar as u8);
    out.push(CURVE_BLS12_381);
    out.extend_from_slice(&s.to_bytes_be());
    out
}

pub fn decode_scalar(bytes: &[u8]) -> Result<Scalar, PointError> {
    let body = check_prefix(bytes, GroupTag::Scalar, 32)?;
    let arr: [u8; 32] = body.try_into().expect("length checked");
    Option::from(Scalar::from_bytes_be(&arr)).ok_or(PointError::Invalid)
}

pub const fn encoded_len(tag: GroupTag) -> usize {
    2 + match tag {
        GroupTag::G1 => G1_COMPRESSED,
        GroupTag::G2 => G2_COMPRESSED,
        GroupTag::Gt => GT_COMPRESSED,
        GroupTag::Scalar => 32,
    }
}

fn check_prefix(bytes: &[u8], tag: GroupTag, body_len: usize) -> Result<&[u8], PointError> {
    if bytes.len() != body_len + 2 {
        return Err(PointError::Length { expected: body_len + 2, found: bytes.len() });
    }
    if bytes[0] != tag as u8 {
        return Err(PointError::WrongTag { expected: tag as u8, found: bytes[0] });
    }
    if bytes[1] != CURVE_BLS12_381 {
        return Err(PointError::WrongCurve(bytes[1]));
    }
    Ok(&bytes[2..])
}

fn prefixed(tag: GroupTag, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 2);
    out.push(tag as u8);
    out.push(CURVE_BLS12_381);
    out.extend_from_slice(body);
    out
}

// ---------------------------------------------------------------------------
// source groups

macro_rules! source_group {
    ($name:ident, $proj:ty, $affine:ty, $tag:expr, $len:expr, $op:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq)]
        pub struct $name(pub(crate) $proj);

        impl $name {
            pub fn generator() -> Self {
                $name(<$proj>::generator())
            }

            pub fn identity() -> Self {
                $name(<$proj>::identity())
            }

            pub fn is_identity(&self) -> bool {
                bool::from(self.0.is_identity())
            }

            pub fn random<R: RngCore>(rng: &mut R) -> Self {
                $name(<$proj>::random(rng))
            }

            /// Counted exponentiation.
            pub fn pow(&self, e: &Scalar) -> Self {
                record($op);
                $name(self.0 * e)
            }

            pub fn inverse(&self) -> Self {
                $name(-self.0)
            }

            pub fn to_affine(&self) -> $affine {
                self.0.to_affine()
            }

            pub fn encode(&self) -> Vec<u8> {
                prefixed($tag, &self.0.to_affine().to_compressed())
            }

            /// Decodes a tagged compressed point, rejecting off-curve and
            /// wrong-subgroup encodings.
            pub fn decode(bytes: &[u8]) -> Result<Self, PointError> {
                let body = check_prefix(bytes, $tag, $len)?;
                let arr: [u8; $len] = body.try_into().expect("length checked");
                Option::<$affine>::from(<$affine>::from_compressed(&arr))
                    .map(|p| $name(p.into()))
                    .ok_or(PointError::Invalid)
            }
        }

        // blstrs writes the group additively
        #[allow(clippy::suspicious_arithmetic_impl)]
        impl Mul for $name {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        #[allow(clippy::suspicious_arithmetic_impl)]
        impl Div for $name {
            type Output = $name;
            fn div(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let enc = self.0.to_affine().to_compressed();
                write!(f, "{}({}..)", stringify!($name), hex_prefix(&enc))
            }
        }
    };
}

source_group!(G1, G1Projective, G1Affine, GroupTag::G1, G1_COMPRESSED, Op::ExpG1);
source_group!(G2, G2Projective, G2Affine, GroupTag::G2, G2_COMPRESSED, Op::ExpG2);

fn hex_prefix(bytes: &[u8]) -> String {
    bytes.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Hashes an attribute label into [`G1`] with the standardized SSWU
/// hash-to-curve under [`ATTR_DST`].
pub fn hash_to_g1(label: &[u8]) -> G1 {
    hash_to_g1_with_dst(label, ATTR_DST)
}

pub(crate) fn hash_to_g1_with_dst(label: &[u8], dst: &[u8]) -> G1 {
    record(Op::HashToGroup);
    let mut point = G1Projective::hash_to_curve(label, dst, &[]);
    let mut counter = 0u32;
    while bool::from(point.is_identity()) {
        counter += 1;
        let mut msg = label.to_vec();
        msg.extend_from_slice(&counter.to_be_bytes());
        point = G1Projective::hash_to_curve(&msg, dst, &[]);
    }
    G1(point)
}

// ---------------------------------------------------------------------------
// target group

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Gt(pub(crate) blstrs::Gt);

impl Gt {
    /// `e(g1, g2)`.
    pub fn generator() -> Self {
        Gt(blstrs::Gt::generator())
    }

    pub fn identity() -> Self {
        Gt(blstrs::Gt::identity())
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        Gt(blstrs::Gt::random(rng))
    }

    pub fn pow(&self, e: &Scalar) -> Self {
        record(Op::ExpGt);
        Gt(self.0 * e)
    }

    pub fn inverse(&self) -> Self {
        Gt(-self.0)
    }

    /// Torus-compressed encoding; the identity, which the torus map
    /// excludes, is written as all-zero coordinates.
    pub fn encode(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(GT_COMPRESSED);
        if self.is_identity() {
            body.resize(GT_COMPRESSED, 0);
        } else {
            self.0
                .write_compressed(&mut body)
                .expect("writing into a Vec cannot fail");
        }
        prefixed(GroupTag::Gt, &body)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PointError> {
        let body = check_prefix(bytes, GroupTag::Gt, GT_COMPRESSED)?;
        if body.iter().all(|b| *b == 0) {
            return Ok(Gt::identity());
        }
        blstrs::Gt::read_compressed(body)
            .map(Gt)
            .map_err(|_| PointError::Invalid)
    }
}

// blstrs writes the group additively
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Gt {
    type Output = Gt;
    fn mul(self, rhs: Gt) -> Gt {
        Gt(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Gt {
    type Output = Gt;
    fn div(self, rhs: Gt) -> Gt {
        Gt(self.0 - rhs.0)
    }
}

impl fmt::Debug for Gt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gt({}..)", hex_prefix(&self.encode()[2..]))
    }
}

pub fn pairing(a: &G1, b: &G2) -> Gt {
    record(Op::Pairing);
    Gt(blstrs::pairing(&a.to_affine(), &b.to_affine()))
}

/// Extract-then-expand hash of a target-group element into `Z_p`.
/// 64 bytes of HKDF-SHA256 output are reduced modulo `p`, so the bias is
/// below 2^-256.
pub fn hash_to_scalar(domain_tag: &[u8], m: &Gt) -> Scalar {
    record(Op::HashToScalar);
    let hk = Hkdf::<Sha256>::new(Some(domain_tag), &m.encode());
    let mut okm = [0u8; 64];
    hk.expand(b"VABE-scalar", &mut okm)
        .expect("64 bytes is a valid HKDF-SHA256 output length");
    scalar_from_be_bytes_reduced(&okm)
}

pub fn random_gt<R: RngCore>(rng: &mut R) -> Gt {
    Gt::random(rng)
}

// ---------------------------------------------------------------------------

/// Fixed description of the pairing group in use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupDescription {
    pub curve_id: u8,
    pub name: &'static str,
    pub p: BigUint,
    pub g1: G1,
    pub g2: G2,
    pub gt_gen: Gt,
}

impl GroupDescription {
    pub fn bls12_381() -> Self {
        let modulus = Scalar::MODULUS.trim_start_matches("0x");
        GroupDescription {
            curve_id: CURVE_BLS12_381,
            name: "bls12-381",
            p: BigUint::parse_bytes(modulus.as_bytes(), 16).expect("constant modulus parses"),
            g1: G1::generator(),
            g2: G2::generator(),
            gt_gen: Gt::generator(),
        }
    }

    /// Resolves a curve name as accepted on the command line.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bls12-381" | "bls12_381" | "bls12381" => Some(Self::bls12_381()),
            _ => None,
        }
    }

    pub fn by_id(id: u8) -> Option<Self> {
        (id == CURVE_BLS12_381).then(Self::bls12_381)
    }
}
