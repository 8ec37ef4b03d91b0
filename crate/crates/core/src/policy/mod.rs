//! Access policies: a small boolean formula language compiled to linear
//! secret-sharing matrices `(A, rho)`.
//!
//! ```text
//! expr   := term ("or" term)*
//! term   := factor ("and" factor)*
//! factor := ATTR | "(" expr ")" | INT "of" "(" expr ("," expr)* ")"
//! ```
//!
//! Keywords are case-insensitive; attributes match `[A-Za-z0-9_:.@-]+` and
//! are compared byte for byte.

mod lsss;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use lsss::{LsssPolicy, ReconCoeffs, ShareVector, DEFAULT_SIZE_CAP};
pub use parser::parse_policy;

/// Longest accepted attribute, in bytes.
pub const MAX_ATTRIBUTE_LEN: usize = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy text is empty")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("threshold {k} of {n} at byte {offset} is out of range")]
    ThresholdRange { k: u64, n: usize, offset: usize },
    #[error("reserved word {word:?} used as an attribute at byte {offset}")]
    ReservedWord { word: String, offset: usize },
    #[error("attribute at byte {offset} is longer than {MAX_ATTRIBUTE_LEN} bytes")]
    AttributeTooLong { offset: usize },
    #[error("policy compiles to {rows}x{cols}, above the cap of {cap}")]
    TooLarge { rows: usize, cols: usize, cap: usize },
    #[error("invalid policy tree: {0}")]
    InvalidTree(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolicyAst {
    Leaf(String),
    And(Vec<PolicyAst>),
    Or(Vec<PolicyAst>),
    Threshold(usize, Vec<PolicyAst>),
}

impl PolicyAst {
    pub fn leaf(attr: impl Into<String>) -> Self {
        PolicyAst::Leaf(attr.into())
    }

    /// Checks the structural invariants the parser guarantees, for trees
    /// built by hand.
    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            PolicyAst::Leaf(a) => {
                if a.is_empty() {
                    Err(PolicyError::InvalidTree("empty attribute"))
                } else if a.len() > MAX_ATTRIBUTE_LEN {
                    Err(PolicyError::AttributeTooLong { offset: 0 })
                } else {
                    Ok(())
                }
            }
            PolicyAst::And(c) | PolicyAst::Or(c) => {
                if c.len() < 2 {
                    return Err(PolicyError::InvalidTree("and/or need at least two children"));
                }
                c.iter().try_for_each(PolicyAst::validate)
            }
            PolicyAst::Threshold(k, c) => {
                if *k < 1 || *k > c.len() {
                    return Err(PolicyError::ThresholdRange { k: *k as u64, n: c.len(), offset: 0 });
                }
                c.iter().try_for_each(PolicyAst::validate)
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyAst::Leaf(_) => 1,
            PolicyAst::And(c) | PolicyAst::Or(c) | PolicyAst::Threshold(_, c) => {
                c.iter().map(PolicyAst::leaf_count).sum()
            }
        }
    }

    /// Distinct attributes mentioned anywhere in the tree.
    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_attributes(&mut out);
        out
    }

    fn collect_attributes(&self, out: &mut BTreeSet<String>) {
        match self {
            PolicyAst::Leaf(a) => {
                out.insert(a.clone());
            }
            PolicyAst::And(c) | PolicyAst::Or(c) | PolicyAst::Threshold(_, c) => {
                c.iter().for_each(|n| n.collect_attributes(out))
            }
        }
    }

    /// Plain boolean evaluation of the tree.
    pub fn is_satisfied_by(&self, attrs: &BTreeSet<String>) -> bool {
        match self {
            PolicyAst::Leaf(a) => attrs.contains(a),
            PolicyAst::And(c) => c.iter().all(|n| n.is_satisfied_by(attrs)),
            PolicyAst::Or(c) => c.iter().any(|n| n.is_satisfied_by(attrs)),
            PolicyAst::Threshold(k, c) => c.iter().filter(|n| n.is_satisfied_by(attrs)).count() >= *k,
        }
    }
}

impl fmt::Display for PolicyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn gate(f: &mut fmt::Formatter<'_>, children: &[PolicyAst], op: &str) -> fmt::Result {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                match c {
                    PolicyAst::And(_) | PolicyAst::Or(_) => write!(f, "({c})")?,
                    _ => write!(f, "{c}")?,
                }
            }
            Ok(())
        }
        match self {
            PolicyAst::Leaf(a) => f.write_str(a),
            PolicyAst::And(c) => gate(f, c, "and"),
            PolicyAst::Or(c) => gate(f, c, "or"),
            PolicyAst::Threshold(k, c) => {
                write!(f, "{k} of (")?;
                for (i, child) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Builds an attribute set from string slices.
pub fn attribute_set<I, S>(attrs: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    attrs.into_iter().map(Into::into).collect()
}
