//! Hybrid encryption of byte payloads and the on-disk formats.
//!
//! A random target-group element is encrypted under the policy with
//! [`vout::encrypt`](crate::vout::encrypt); its canonical encoding is fed
//! through HKDF-SHA256 to key AES-256-GCM over the payload. The encoded
//! [`CiphertextHeader`] is the AEAD associated data, so the payload is tied
//! to the exact ciphertext the user later verifies.
//!
//! Envelope body, after the common preamble (see [`codec`]):
//!
//! | field       | encoding                              |
//! |-------------|---------------------------------------|
//! | suite id    | 1 byte (`0x01`: HKDF-SHA256, AES-256-GCM) |
//! | ciphertext  | 4-byte LE length + ciphertext body    |
//! | nonce       | 12 bytes                              |
//! | payload     | 4-byte LE length + AEAD output (ciphertext and 16-byte tag) |

pub mod codec;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use hkdf::Hkdf;
use rand_core::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::abe::{PrivateKey, PublicParams};
use crate::groups::{random_gt, Gt};
use crate::policy::LsssPolicy;
use crate::vout::{self, Ciphertext, CiphertextHeader, RetrieveKey, TransformedCiphertext};
use crate::{Error, Result};

pub use codec::{decode, encode, peek_role, Artifact, Role};

/// HKDF-SHA256 key derivation with AES-256-GCM.
pub const SUITE_HKDF_SHA256_AES256GCM: u8 = 0x01;
pub const KDF_INFO: &[u8] = b"VABE-KDF-v1";
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Largest payload whose sealed form still fits a 4-byte length.
pub const MAX_PAYLOAD: usize = u32::MAX as usize - TAG_LEN;

/// The data-encapsulation half of an envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemPart {
    pub suite_id: u8,
    pub nonce: [u8; NONCE_LEN],
    pub body: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvelopeFile {
    pub ciphertext: Ciphertext,
    pub dem: DemPart,
}

impl EnvelopeFile {
    pub fn header(&self) -> CiphertextHeader {
        self.ciphertext.header()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(self)
    }

    /// Any decoding problem is reported as [`Error::MalformedEnvelope`],
    /// except an unsupported curve.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        decode(bytes).map_err(|e| match e {
            Error::WrongCurve(_) | Error::MalformedEnvelope(_) => e,
            other => Error::MalformedEnvelope(other.to_string()),
        })
    }
}

impl Artifact for EnvelopeFile {
    const ROLE: Role = Role::Envelope;

    fn write_body(&self, w: &mut codec::Writer) {
        w.u8(self.dem.suite_id);
        let mut inner = codec::Writer::new();
        self.ciphertext.write_body(&mut inner);
        w.blob(&inner.into_bytes());
        w.raw(&self.dem.nonce);
        w.blob(&self.dem.body);
    }

    fn read_body(r: &mut codec::Reader<'_>) -> Result<Self> {
        let suite_id = r.u8("envelope.suite_id")?;
        if suite_id != SUITE_HKDF_SHA256_AES256GCM {
            return Err(Error::MalformedEnvelope(format!("unknown suite {suite_id:#04x}")));
        }
        let ct_bytes = r.blob("envelope.ciphertext")?;
        let mut inner = codec::Reader::new(ct_bytes);
        let ciphertext = Ciphertext::read_body(&mut inner)?;
        inner.finish("envelope.ciphertext")?;
        let nonce = r.array::<NONCE_LEN>("envelope.nonce")?;
        let body = r.blob("envelope.payload")?.to_vec();
        if body.len() < TAG_LEN {
            return Err(Error::MalformedEnvelope("payload shorter than the AEAD tag".into()));
        }
        Ok(EnvelopeFile { ciphertext, dem: DemPart { suite_id, nonce, body } })
    }
}

fn derive_key(m: &Gt) -> [u8; 32] {
    let hk = Hkdf::<Sha256>::new(None, &m.encode());
    let mut okm = [0u8; 32];
    hk.expand(KDF_INFO, &mut okm).expect("32 bytes is a valid HKDF-SHA256 length");
    okm
}

pub fn check_payload_len(len: usize) -> Result<()> {
    if len > MAX_PAYLOAD {
        Err(Error::PayloadTooLarge(len))
    } else {
        Ok(())
    }
}

/// Encrypts `payload` under `policy_text`.
pub fn seal<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    policy_text: &str,
    payload: &[u8],
    rng: &mut R,
) -> Result<EnvelopeFile> {
    check_payload_len(payload.len())?;
    let lsss = LsssPolicy::from_text(policy_text)?;
    let m = random_gt(rng);
    let ciphertext = vout::encrypt(pp, &m, &lsss, rng);
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let aad = encode(&ciphertext.header());
    let cipher = Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&derive_key(&m)));
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: payload, aad: &aad })
        .expect("AES-GCM encryption of a bounded payload");
    Ok(EnvelopeFile {
        ciphertext,
        dem: DemPart { suite_id: SUITE_HKDF_SHA256_AES256GCM, nonce, body },
    })
}

fn open_dem(m: &Gt, header: &CiphertextHeader, dem: &DemPart) -> Result<Vec<u8>> {
    if dem.suite_id != SUITE_HKDF_SHA256_AES256GCM {
        return Err(Error::MalformedEnvelope(format!("unknown suite {:#04x}", dem.suite_id)));
    }
    let aad = encode(header);
    let cipher = Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&derive_key(m)));
    cipher
        .decrypt(Nonce::from_slice(&dem.nonce), Payload { msg: &dem.body, aad: &aad })
        .map_err(|_| Error::AeadFailure)
}

/// Opens an envelope with the full private key.
pub fn open_local(pp: &PublicParams, sk: &PrivateKey, env: &EnvelopeFile) -> Result<Vec<u8>> {
    let m = vout::decrypt(pp, sk, &env.ciphertext)?;
    open_dem(&m, &env.header(), &env.dem)
}

/// Opens an envelope from a proxy's transformed ciphertext.
pub fn open_outsourced(
    pp: &PublicParams,
    header: &CiphertextHeader,
    ct_prime: &TransformedCiphertext,
    rk: &RetrieveKey,
    dem: &DemPart,
) -> Result<Vec<u8>> {
    if ct_prime.key_id != rk.key_id {
        return Err(Error::RetrieveKeyMismatch);
    }
    let m = vout::outdec(pp, header, ct_prime, rk)?;
    open_dem(&m, header, dem)
}
