//! Canonical binary encodings.
//!
//! Every artifact file starts with a seven byte preamble:
//!
//! | offset | size | field                     |
//! |--------|------|---------------------------|
//! | 0      | 4    | magic `"VABE"`            |
//! | 4      | 1    | format version (`0x01`)   |
//! | 5      | 1    | role, see [`Role`]        |
//! | 6      | 1    | curve id                  |
//!
//! Group elements inside bodies use their tagged fixed-length encodings
//! (tag, curve id, compressed point). Strings and byte blobs carry a 4-byte
//! little-endian length prefix, as do element counts.

use std::collections::BTreeMap;

use ff::Field;

use crate::abe::{BranchRow, CipherBranch, KeyId, MasterSecret, PrivateKey, PublicParams};
use crate::groups::{
    decode_scalar, encode_scalar, encoded_len, GroupDescription, GroupTag, Gt, PointError, Scalar, G1, G2,
    CURVE_BLS12_381,
};
use crate::policy::LsssPolicy;
use crate::vout::{Ciphertext, CiphertextHeader, RetrieveKey, TransformKey, TransformedCiphertext};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VABE";
pub const VERSION: u8 = 0x01;
pub const PREAMBLE_LEN: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    PublicParams = 0x10,
    MasterSecret = 0x11,
    PrivateKey = 0x12,
    TransformKey = 0x13,
    RetrieveKey = 0x14,
    Ciphertext = 0x20,
    Header = 0x21,
    TransformedCiphertext = 0x22,
    Envelope = 0x30,
}

impl Role {
    pub fn from_byte(b: u8) -> Option<Role> {
        use Role::*;
        [PublicParams, MasterSecret, PrivateKey, TransformKey, RetrieveKey, Ciphertext, Header, TransformedCiphertext, Envelope]
            .into_iter()
            .find(|r| *r as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::PublicParams => "PK",
            Role::MasterSecret => "MSK",
            Role::PrivateKey => "SK",
            Role::TransformKey => "TK",
            Role::RetrieveKey => "RK",
            Role::Ciphertext => "CT",
            Role::Header => "HEADER",
            Role::TransformedCiphertext => "CT'",
            Role::Envelope => "ENVELOPE",
        }
    }
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("length fits in u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn blob(&mut self, bytes: &[u8]) {
        self.u32(bytes.len());
        self.raw(bytes);
    }

    pub fn g1(&mut self, p: &G1) {
        self.raw(&p.encode());
    }

    pub fn g2(&mut self, p: &G2) {
        self.raw(&p.encode());
    }

    pub fn gt(&mut self, p: &Gt) {
        self.raw(&p.encode());
    }

    pub fn scalar(&mut self, s: &Scalar) {
        self.raw(&encode_scalar(s));
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize, path: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::malformed(
                path,
                format!("need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, path: &str) -> Result<u8> {
        Ok(self.take(1, path)?[0])
    }

    pub fn u32(&mut self, path: &str) -> Result<usize> {
        let b = self.take(4, path)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    /// A count of items that each occupy at least `min_item` bytes; bounded
    /// by the remaining input so a forged count cannot force a huge
    /// allocation.
    pub fn count(&mut self, min_item: usize, path: &str) -> Result<usize> {
        let n = self.u32(path)?;
        if n.saturating_mul(min_item.max(1)) > self.remaining() {
            return Err(Error::malformed(path, format!("count {n} exceeds remaining input")));
        }
        Ok(n)
    }

    pub fn array<const N: usize>(&mut self, path: &str) -> Result<[u8; N]> {
        Ok(self.take(N, path)?.try_into().unwrap())
    }

    pub fn blob(&mut self, path: &str) -> Result<&'a [u8]> {
        let n = self.u32(path)?;
        self.take(n, path)
    }

    pub fn string(&mut self, path: &str) -> Result<String> {
        let b = self.blob(path)?;
        String::from_utf8(b.to_vec()).map_err(|e| Error::malformed(path, e))
    }

    fn element<T>(
        &mut self,
        tag: GroupTag,
        path: &str,
        decode: impl FnOnce(&[u8]) -> std::result::Result<T, PointError>,
    ) -> Result<T> {
        let b = self.take(encoded_len(tag), path)?;
        decode(b).map_err(|e| Error::from_point(path, e))
    }

    pub fn g1(&mut self, path: &str) -> Result<G1> {
        self.element(GroupTag::G1, path, G1::decode)
    }

    pub fn g2(&mut self, path: &str) -> Result<G2> {
        self.element(GroupTag::G2, path, G2::decode)
    }

    pub fn gt(&mut self, path: &str) -> Result<Gt> {
        self.element(GroupTag::Gt, path, Gt::decode)
    }

    pub fn scalar(&mut self, path: &str) -> Result<Scalar> {
        self.element(GroupTag::Scalar, path, decode_scalar)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(self, path: &str) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::malformed(path, format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

/// A type with a file role and a canonical body encoding.
pub trait Artifact: Sized {
    const ROLE: Role;
    fn write_body(&self, w: &mut Writer);
    fn read_body(r: &mut Reader<'_>) -> Result<Self>;
}

pub fn write_preamble(w: &mut Writer, role: Role) {
    w.raw(MAGIC);
    w.u8(VERSION);
    w.u8(role as u8);
    w.u8(CURVE_BLS12_381);
}

/// Reads and checks the preamble, returning the role found.
pub fn read_preamble(r: &mut Reader<'_>) -> Result<Role> {
    if r.take(4, "preamble.magic")? != MAGIC {
        return Err(Error::malformed("preamble.magic", "not a VABE file"));
    }
    let version = r.u8("preamble.version")?;
    if version != VERSION {
        return Err(Error::malformed("preamble.version", format!("unsupported version {version}")));
    }
    let role_byte = r.u8("preamble.role")?;
    let role = Role::from_byte(role_byte)
        .ok_or_else(|| Error::malformed("preamble.role", format!("unknown role {role_byte:#04x}")))?;
    let curve = r.u8("preamble.curve_id")?;
    if GroupDescription::by_id(curve).is_none() {
        return Err(Error::WrongCurve(curve));
    }
    Ok(role)
}

/// Role of an encoded artifact, read from its preamble.
pub fn peek_role(bytes: &[u8]) -> Result<Role> {
    read_preamble(&mut Reader::new(bytes))
}

pub fn encode<T: Artifact>(value: &T) -> Vec<u8> {
    let mut w = Writer::new();
    write_preamble(&mut w, T::ROLE);
    value.write_body(&mut w);
    w.into_bytes()
}

pub fn decode<T: Artifact>(bytes: &[u8]) -> Result<T> {
    let mut r = Reader::new(bytes);
    let role = read_preamble(&mut r)?;
    if role != T::ROLE {
        return Err(Error::WrongRole { expected: T::ROLE.name(), found: role.name().to_string() });
    }
    let value = T::read_body(&mut r)?;
    r.finish("body")?;
    Ok(value)
}

impl Artifact for PublicParams {
    const ROLE: Role = Role::PublicParams;

    fn write_body(&self, w: &mut Writer) {
        w.g1(&self.g_a);
        w.gt(&self.egg_alpha);
        w.g1(&self.u);
        w.g1(&self.v);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let pp = PublicParams {
            group: GroupDescription::bls12_381(),
            g_a: r.g1("pk.g_a")?,
            egg_alpha: r.gt("pk.egg_alpha")?,
            u: r.g1("pk.u")?,
            v: r.g1("pk.v")?,
        };
        if pp.g_a.is_identity() || pp.egg_alpha.is_identity() || pp.u.is_identity() || pp.v.is_identity() {
            return Err(Error::malformed("pk", "identity component"));
        }
        Ok(pp)
    }
}

impl Artifact for MasterSecret {
    const ROLE: Role = Role::MasterSecret;

    fn write_body(&self, w: &mut Writer) {
        w.scalar(&self.alpha);
        w.scalar(&self.a);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        Ok(MasterSecret { alpha: r.scalar("msk.alpha")?, a: r.scalar("msk.a")? })
    }
}

fn write_key(w: &mut Writer, key_id: &KeyId, k: &G2, k0: &G2, k_attr: &BTreeMap<String, G1>) {
    w.raw(key_id);
    w.g2(k);
    w.g2(k0);
    w.u32(k_attr.len());
    for (x, kx) in k_attr {
        w.blob(x.as_bytes());
        w.g1(kx);
    }
}

type KeyParts = (KeyId, G2, G2, BTreeMap<String, G1>);

fn read_key(r: &mut Reader<'_>, prefix: &str) -> Result<KeyParts> {
    let key_id = r.array::<16>(&format!("{prefix}.key_id"))?;
    let k = r.g2(&format!("{prefix}.k"))?;
    let k0 = r.g2(&format!("{prefix}.k0"))?;
    let n = r.count(4 + encoded_len(GroupTag::G1), &format!("{prefix}.attrs"))?;
    if n == 0 {
        return Err(Error::malformed(format!("{prefix}.attrs"), "empty attribute set"));
    }
    let mut k_attr = BTreeMap::new();
    let mut last: Option<String> = None;
    for i in 0..n {
        let path = format!("{prefix}.attrs[{i}]");
        let x = r.string(&path)?;
        if last.as_ref().is_some_and(|l| *l >= x) {
            return Err(Error::malformed(path, "attributes not strictly ascending"));
        }
        let kx = r.g1(&path)?;
        last = Some(x.clone());
        k_attr.insert(x, kx);
    }
    Ok((key_id, k, k0, k_attr))
}

impl Artifact for PrivateKey {
    const ROLE: Role = Role::PrivateKey;

    fn write_body(&self, w: &mut Writer) {
        write_key(w, &self.key_id, &self.k, &self.k0, &self.k_attr);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let (key_id, k, k0, k_attr) = read_key(r, "sk")?;
        Ok(PrivateKey { key_id, k, k0, k_attr })
    }
}

impl Artifact for TransformKey {
    const ROLE: Role = Role::TransformKey;

    fn write_body(&self, w: &mut Writer) {
        write_key(w, &self.key_id, &self.k, &self.k0, &self.k_attr);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let (key_id, k, k0, k_attr) = read_key(r, "tk")?;
        Ok(TransformKey { key_id, k, k0, k_attr })
    }
}

impl Artifact for RetrieveKey {
    const ROLE: Role = Role::RetrieveKey;

    fn write_body(&self, w: &mut Writer) {
        w.raw(&self.key_id);
        w.scalar(&self.z);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let key_id = r.array::<16>("rk.key_id")?;
        let z = r.scalar("rk.z")?;
        if bool::from(z.is_zero()) {
            return Err(Error::malformed("rk.z", "zero is not invertible"));
        }
        Ok(RetrieveKey { key_id, z })
    }
}

pub fn write_policy(w: &mut Writer, p: &LsssPolicy) {
    w.blob(p.source_text().as_bytes());
    w.u32(p.rows());
    w.u32(p.cols());
    for row in p.matrix() {
        for x in row {
            w.scalar(x);
        }
    }
    for a in p.rho() {
        w.blob(a.as_bytes());
    }
}

pub fn read_policy(r: &mut Reader<'_>, prefix: &str) -> Result<LsssPolicy> {
    let text = r.string(&format!("{prefix}.source_text"))?;
    let rows = r.count(1, &format!("{prefix}.rows"))?;
    let cols = r.count(1, &format!("{prefix}.cols"))?;
    if rows == 0 || cols == 0 {
        return Err(Error::malformed(prefix, "empty matrix"));
    }
    if rows.saturating_mul(cols).saturating_mul(encoded_len(GroupTag::Scalar)) > r.remaining() {
        return Err(Error::malformed(format!("{prefix}.matrix"), "dimensions exceed remaining input"));
    }
    let mut matrix = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = (0..cols)
            .map(|j| r.scalar(&format!("{prefix}.matrix[{i}][{j}]")))
            .collect::<Result<Vec<_>>>()?;
        matrix.push(row);
    }
    let rho = (0..rows)
        .map(|i| r.string(&format!("{prefix}.rho[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    LsssPolicy::from_parts(matrix, rho, text).map_err(|e| Error::malformed(prefix, e))
}

pub fn encode_policy(p: &LsssPolicy) -> Vec<u8> {
    let mut w = Writer::new();
    write_policy(&mut w, p);
    w.into_bytes()
}

fn write_branch(w: &mut Writer, b: &CipherBranch) {
    w.gt(&b.c);
    w.g1(&b.c_prime);
    w.u32(b.rows.len());
    for row in &b.rows {
        w.g1(&row.c);
        w.g2(&row.d);
    }
}

fn read_branch(r: &mut Reader<'_>, prefix: &str) -> Result<CipherBranch> {
    let c = r.gt(&format!("{prefix}.c"))?;
    let c_prime = r.g1(&format!("{prefix}.c_prime"))?;
    let n = r.count(
        encoded_len(GroupTag::G1) + encoded_len(GroupTag::G2),
        &format!("{prefix}.rows"),
    )?;
    let rows = (0..n)
        .map(|i| {
            Ok(BranchRow {
                c: r.g1(&format!("{prefix}.rows[{i}].c"))?,
                d: r.g2(&format!("{prefix}.rows[{i}].d"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CipherBranch { c, c_prime, rows })
}

impl Artifact for Ciphertext {
    const ROLE: Role = Role::Ciphertext;

    fn write_body(&self, w: &mut Writer) {
        write_policy(w, &self.policy);
        w.g1(&self.commitment);
        write_branch(w, &self.branch1);
        write_branch(w, &self.branch2);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let policy = read_policy(r, "ct.policy")?;
        let commitment = r.g1("ct.commitment")?;
        let branch1 = read_branch(r, "ct.branch1")?;
        let branch2 = read_branch(r, "ct.branch2")?;
        for (name, b) in [("ct.branch1.rows", &branch1), ("ct.branch2.rows", &branch2)] {
            if b.rows.len() != policy.rows() {
                return Err(Error::malformed(name, "row count differs from the policy"));
            }
        }
        Ok(Ciphertext { policy, commitment, branch1, branch2 })
    }
}

impl Artifact for CiphertextHeader {
    const ROLE: Role = Role::Header;

    fn write_body(&self, w: &mut Writer) {
        w.g1(&self.commitment);
        w.gt(&self.c1);
        w.gt(&self.c2);
        w.raw(&self.policy_digest);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        Ok(CiphertextHeader {
            commitment: r.g1("header.commitment")?,
            c1: r.gt("header.c1")?,
            c2: r.gt("header.c2")?,
            policy_digest: r.array::<32>("header.policy_digest")?,
        })
    }
}

impl Artifact for TransformedCiphertext {
    const ROLE: Role = Role::TransformedCiphertext;

    fn write_body(&self, w: &mut Writer) {
        w.raw(&self.key_id);
        w.g1(&self.t_hat);
        w.gt(&self.t1);
        w.gt(&self.t1_prime);
        w.gt(&self.t2);
        w.gt(&self.t2_prime);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        Ok(TransformedCiphertext {
            key_id: r.array::<16>("ct_prime.key_id")?,
            t_hat: r.g1("ct_prime.t_hat")?,
            t1: r.gt("ct_prime.t1")?,
            t1_prime: r.gt("ct_prime.t1_prime")?,
            t2: r.gt("ct_prime.t2")?,
            t2_prime: r.gt("ct_prime.t2_prime")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_round_trip() {
        for b in 0..=255u8 {
            if let Some(r) = Role::from_byte(b) {
                assert_eq!(r as u8, b);
            }
        }
        assert_eq!(Role::from_byte(0x22), Some(Role::TransformedCiphertext));
        assert_eq!(Role::from_byte(0x00), None);
    }

    #[test]
    fn forged_count_does_not_allocate() {
        let mut w = Writer::new();
        w.u32(u32::MAX as usize);
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        assert!(r.count(100, "x").is_err());
    }

    #[test]
    fn preamble_checks() {
        let mut w = Writer::new();
        write_preamble(&mut w, Role::Header);
        let good = w.into_bytes();
        assert_eq!(peek_role(&good).unwrap(), Role::Header);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(peek_role(&bad), Err(Error::MalformedEncoding { .. })));
        let mut bad = good.clone();
        bad[6] = 9;
        assert!(matches!(peek_role(&bad), Err(Error::WrongCurve(9))));
        assert!(peek_role(&good[..5]).is_err());
    }
}
