//! Ciphertext-policy attribute-based encryption with verifiable outsourced
//! decryption.
//!
//! A ciphertext carries an access policy and two parallel encryptions: one
//! of the session element `M` and one of a random verification tag `M'`,
//! bound together by the commitment `u^{H1(M)} v^{H2(M')}`. A user may hand a
//! blinded copy of their key (the transformation key) to an untrusted proxy,
//! which turns the policy-sized ciphertext into five group elements. The
//! user then finishes decryption without pairings and rejects any
//! transformation that does not open the commitment.
//!
//! Modules, bottom-up:
//!
//! * [`groups`]: BLS12-381 wrappers with operation counting.
//! * [`policy`]: policy parsing, LSSS compilation, sharing and reconstruction.
//! * [`abe`]: the single-branch scheme (setup, keygen, encrypt, recover).
//! * [`vout`]: dual-branch encryption, transformation and verified decryption.
//! * [`envelope`]: hybrid payload encryption and canonical binary encodings.

pub mod abe;
pub mod envelope;
mod error;
pub mod groups;
pub mod policy;
pub mod vout;

pub use error::{Error, Result};
