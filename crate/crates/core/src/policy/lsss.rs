use std::collections::BTreeSet;
use std::fmt::Write as _;

use ff::Field;
use num_bigint::BigUint;
use rand_core::{CryptoRng, RngCore};

use super::{parse_policy, PolicyAst, PolicyError};
use crate::groups::{random_scalar, scalar_to_biguint, Scalar};

/// Default bound on both matrix dimensions.
pub const DEFAULT_SIZE_CAP: usize = 512;

/// A monotone span program `(A, rho)` over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsssPolicy {
    matrix: Vec<Vec<Scalar>>,
    rho: Vec<String>,
    source_text: String,
}

/// Shares `lambda_i = <A_i, (s, y_2, .., y_n)>`, one per matrix row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareVector {
    pub secret: Scalar,
    pub shares: Vec<Scalar>,
}

/// Reconstruction coefficients `w_i` with `sum w_i A_i = (1, 0, .., 0)`.
/// Rows whose coefficient is zero are omitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconCoeffs {
    pub coeffs: Vec<(usize, Scalar)>,
}

impl ReconCoeffs {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, Scalar)> {
        self.coeffs.iter()
    }
}

impl ShareVector {
    pub fn reconstruct(&self, coeffs: &ReconCoeffs) -> Scalar {
        coeffs
            .iter()
            .fold(Scalar::ZERO, |acc, (i, w)| acc + *w * self.shares[*i])
    }
}

struct Compiler {
    cols: usize,
    rows: Vec<(Vec<Scalar>, String)>,
}

impl Compiler {
    fn fresh(&mut self, count: usize) -> usize {
        let base = self.cols;
        self.cols += count;
        base
    }

    fn walk(&mut self, node: &PolicyAst, v: Vec<Scalar>) {
        match node {
            PolicyAst::Leaf(attr) => self.rows.push((v, attr.clone())),
            PolicyAst::Or(children) => {
                for c in children {
                    self.walk(c, v.clone());
                }
            }
            PolicyAst::And(children) => {
                // first child: v + e_{base}..e_{base+m-2}; child j: -e_{base+j-1}
                let base = self.fresh(children.len() - 1);
                let mut first = v;
                first.resize(self.cols, Scalar::ZERO);
                for slot in &mut first[base..base + children.len() - 1] {
                    *slot = Scalar::ONE;
                }
                self.walk(&children[0], first);
                for (j, c) in children.iter().enumerate().skip(1) {
                    let mut neg = vec![Scalar::ZERO; base + j];
                    neg[base + j - 1] = -Scalar::ONE;
                    self.walk(c, neg);
                }
            }
            PolicyAst::Threshold(k, children) => {
                // Vandermonde gadget: child j gets v + sum_d j^d e_{base+d-1}.
                let base = self.fresh(k - 1);
                for (j, c) in children.iter().enumerate() {
                    let x = Scalar::from((j + 1) as u64);
                    let mut row = v.clone();
                    row.resize(self.cols, Scalar::ZERO);
                    let mut power = Scalar::ONE;
                    for d in 1..*k {
                        power *= x;
                        row[base + d - 1] = power;
                    }
                    self.walk(c, row);
                }
            }
        }
    }
}

impl LsssPolicy {
    /// Parses and compiles `text` under the default size cap.
    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let ast = parse_policy(text)?;
        Self::compile_with_cap(&ast, text, DEFAULT_SIZE_CAP)
    }

    /// Compiles a tree; the source text is the tree's canonical rendering.
    pub fn from_ast(ast: &PolicyAst) -> Result<Self, PolicyError> {
        Self::compile_with_cap(ast, &ast.to_string(), DEFAULT_SIZE_CAP)
    }

    pub fn compile_with_cap(ast: &PolicyAst, source_text: &str, cap: usize) -> Result<Self, PolicyError> {
        ast.validate()?;
        let mut c = Compiler { cols: 1, rows: Vec::new() };
        c.walk(ast, vec![Scalar::ONE]);
        let (rows, cols) = (c.rows.len(), c.cols);
        if rows > cap || cols > cap {
            return Err(PolicyError::TooLarge { rows, cols, cap });
        }
        let (matrix, rho) = c
            .rows
            .into_iter()
            .map(|(mut r, a)| {
                r.resize(cols, Scalar::ZERO);
                (r, a)
            })
            .unzip();
        Ok(LsssPolicy { matrix, rho, source_text: source_text.to_string() })
    }

    /// Rebuilds a policy from decoded parts, requiring that it is exactly
    /// the compilation of its own source text.
    pub fn from_parts(
        matrix: Vec<Vec<Scalar>>,
        rho: Vec<String>,
        source_text: String,
    ) -> Result<Self, PolicyError> {
        let compiled = Self::from_text(&source_text)?;
        if compiled.matrix != matrix || compiled.rho != rho {
            return Err(PolicyError::InvalidTree("matrix does not match the policy text"));
        }
        Ok(compiled)
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn matrix(&self) -> &[Vec<Scalar>] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.matrix[i]
    }

    pub fn rho(&self) -> &[String] {
        &self.rho
    }

    pub fn attribute(&self, i: usize) -> &str {
        &self.rho[i]
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn satisfies(&self, attrs: &BTreeSet<String>) -> bool {
        self.recon_coeffs(attrs).is_some()
    }

    /// Solves `sum_{i in I} w_i A_i = (1, 0, .., 0)` over the rows labelled
    /// by `attrs`. Unknowns are eliminated in ascending row order and free
    /// unknowns are set to zero, so the answer is deterministic.
    pub fn recon_coeffs(&self, attrs: &BTreeSet<String>) -> Option<ReconCoeffs> {
        let selected: Vec<usize> = (0..self.rows())
            .filter(|i| attrs.contains(&self.rho[*i]))
            .collect();
        if selected.is_empty() {
            return None;
        }
        let n = self.cols();
        let k = selected.len();
        // Augmented system: one equation per column of A, one unknown per
        // selected row, right-hand side e_1.
        let mut sys: Vec<Vec<Scalar>> = (0..n)
            .map(|j| {
                let mut eq: Vec<Scalar> = selected.iter().map(|&i| self.matrix[i][j]).collect();
                eq.push(if j == 0 { Scalar::ONE } else { Scalar::ZERO });
                eq
            })
            .collect();

        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut r = 0;
        for col in 0..k {
            let Some(p) = (r..n).find(|&e| !bool::from(sys[e][col].is_zero())) else {
                continue;
            };
            sys.swap(r, p);
            let inv = sys[r][col].invert().unwrap();
            for x in sys[r].iter_mut() {
                *x *= inv;
            }
            for e in 0..n {
                if e != r && !bool::from(sys[e][col].is_zero()) {
                    let factor = sys[e][col];
                    for c in col..=k {
                        let delta = factor * sys[r][c];
                        sys[e][c] -= delta;
                    }
                }
            }
            pivots.push((r, col));
            r += 1;
            if r == n {
                break;
            }
        }
        if sys[r..].iter().any(|eq| !bool::from(eq[k].is_zero())) {
            return None;
        }
        let coeffs = pivots
            .into_iter()
            .filter(|(row, _)| !bool::from(sys[*row][k].is_zero()))
            .map(|(row, col)| (selected[col], sys[row][k]))
            .collect::<Vec<_>>();
        let mut coeffs = coeffs;
        coeffs.sort_by_key(|(i, _)| *i);
        Some(ReconCoeffs { coeffs })
    }

    /// Splits `secret` into one share per row.
    pub fn share_secret<R: RngCore + CryptoRng>(&self, secret: Scalar, rng: &mut R) -> ShareVector {
        let mut v = Vec::with_capacity(self.cols());
        v.push(secret);
        v.extend((1..self.cols()).map(|_| random_scalar(rng)));
        let shares = self
            .matrix
            .iter()
            .map(|row| row.iter().zip(&v).fold(Scalar::ZERO, |acc, (a, b)| acc + *a * b))
            .collect();
        ShareVector { secret, shares }
    }

    /// Human-readable dump: one line per row with entries in signed decimal.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "policy: {}", self.source_text);
        let _ = writeln!(out, "rows: {}  cols: {}", self.rows(), self.cols());
        for (i, (row, attr)) in self.matrix.iter().zip(&self.rho).enumerate() {
            let entries: Vec<String> = row.iter().map(signed_decimal).collect();
            let _ = writeln!(out, "{i:>4}: [{}] -> {attr}", entries.join(", "));
        }
        out
    }
}

/// Renders `s` as the representative in `(-p/2, p/2]`.
pub(crate) fn signed_decimal(s: &Scalar) -> String {
    let v = scalar_to_biguint(s);
    let neg = scalar_to_biguint(&-*s);
    if neg < v {
        format!("-{}", neg)
    } else {
        BigUint::to_string(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::scalar_from_i64;
    use crate::policy::attribute_set;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ints(m: &[&[i64]]) -> Vec<Vec<Scalar>> {
        m.iter().map(|r| r.iter().map(|&x| scalar_from_i64(x)).collect()).collect()
    }

    #[test]
    fn leaf_and_or_matrices() {
        let l = LsssPolicy::from_text("a").unwrap();
        assert_eq!(l.matrix(), ints(&[&[1]]).as_slice());
        assert_eq!(l.rho(), ["a"]);

        let and = LsssPolicy::from_text("a and b").unwrap();
        assert_eq!(and.matrix(), ints(&[&[1, 1], &[0, -1]]).as_slice());
        assert_eq!(and.rho(), ["a", "b"]);

        let or = LsssPolicy::from_text("a or b").unwrap();
        assert_eq!(or.matrix(), ints(&[&[1], &[1]]).as_slice());
    }

    #[test]
    fn threshold_matrix_is_vandermonde() {
        let t = LsssPolicy::from_text("2 of (a, b, c)").unwrap();
        assert_eq!(t.matrix(), ints(&[&[1, 1], &[1, 2], &[1, 3]]).as_slice());
    }

    #[test]
    fn recon_examples() {
        let or = LsssPolicy::from_text("a or b").unwrap();
        let w = or.recon_coeffs(&attribute_set(["a"])).unwrap();
        assert_eq!(w.coeffs, vec![(0, Scalar::ONE)]);
        // both present: first row pivots, second is free and dropped
        let w = or.recon_coeffs(&attribute_set(["a", "b"])).unwrap();
        assert_eq!(w.coeffs, vec![(0, Scalar::ONE)]);

        let and = LsssPolicy::from_text("a and b").unwrap();
        let w = and.recon_coeffs(&attribute_set(["a", "b"])).unwrap();
        assert_eq!(w.coeffs, vec![(0, Scalar::ONE), (1, Scalar::ONE)]);
        assert!(and.recon_coeffs(&attribute_set(["b"])).is_none());
        assert!(!and.satisfies(&attribute_set(["a"])));

        let t = LsssPolicy::from_text("2 of (a, b, c)").unwrap();
        assert!(t.satisfies(&attribute_set(["a", "c"])));
        // w_a + w_c = 1, w_a + 3 w_c = 0  =>  w_c = -1/2, w_a = 3/2
        let w = t.recon_coeffs(&attribute_set(["a", "c"])).unwrap();
        let half = Scalar::from(2u64).invert().unwrap();
        assert_eq!(w.coeffs, vec![(0, Scalar::from(3u64) * half), (2, -half)]);
    }

    #[test]
    fn shares_of_and_gate() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let and = LsssPolicy::from_text("a and b").unwrap();
        let s = Scalar::from(1234u64);
        let sv = and.share_secret(s, &mut rng);
        // lambda_1 = s + y, lambda_2 = -y
        assert_eq!(sv.shares[0] + sv.shares[1], s);
        assert_ne!(sv.shares[1], Scalar::ZERO);
        let w = and.recon_coeffs(&attribute_set(["a", "b"])).unwrap();
        assert_eq!(sv.reconstruct(&w), s);

        let leaf = LsssPolicy::from_text("a").unwrap();
        assert_eq!(leaf.share_secret(s, &mut rng).shares, vec![s]);
    }

    #[test]
    fn repeated_attributes_are_allowed() {
        let p = LsssPolicy::from_text("(a and b) or (a and c)").unwrap();
        assert_eq!(p.rho(), ["a", "b", "a", "c"]);
        assert!(p.satisfies(&attribute_set(["a", "c"])));
        assert!(!p.satisfies(&attribute_set(["b", "c"])));
    }

    #[test]
    fn size_cap() {
        let text = (0..10).map(|i| format!("x{i}")).collect::<Vec<_>>().join(" and ");
        let ast = parse_policy(&text).unwrap();
        assert_eq!(
            LsssPolicy::compile_with_cap(&ast, &text, 8),
            Err(PolicyError::TooLarge { rows: 10, cols: 10, cap: 8 })
        );
        let big = (0..600).map(|i| format!("x{i}")).collect::<Vec<_>>().join(" or ");
        assert!(matches!(LsssPolicy::from_text(&big), Err(PolicyError::TooLarge { .. })));
    }

    #[test]
    fn dump_uses_signed_decimal() {
        let and = LsssPolicy::from_text("a and b").unwrap();
        let d = and.dump();
        assert!(d.contains("   0: [1, 1] -> a"), "{d}");
        assert!(d.contains("   1: [0, -1] -> b"), "{d}");
    }

    #[test]
    fn from_parts_requires_consistency() {
        let p = LsssPolicy::from_text("a and b").unwrap();
        let ok = LsssPolicy::from_parts(p.matrix.clone(), p.rho.clone(), p.source_text.clone());
        assert_eq!(ok.unwrap(), p);
        let mut m = p.matrix.clone();
        m[1][1] = Scalar::ONE;
        assert!(LsssPolicy::from_parts(m, p.rho.clone(), p.source_text.clone()).is_err());
    }
}
