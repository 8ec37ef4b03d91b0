#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use vabe_core::groups::{GroupDescription, Scalar};
use vabe_core::policy::{LsssPolicy, PolicyAst};

pub const ALPHABET: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Random policy tree with exactly `leaves` leaves over [`ALPHABET`].
pub fn random_ast<R: Rng>(rng: &mut R, leaves: usize) -> PolicyAst {
    if leaves == 1 {
        return PolicyAst::leaf(*ALPHABET.choose(rng).unwrap());
    }
    let arity = rng.gen_range(2..=leaves.min(4));
    // split `leaves` into `arity` positive parts
    let mut parts = vec![1usize; arity];
    for _ in 0..leaves - arity {
        let i = rng.gen_range(0..arity);
        parts[i] += 1;
    }
    let children: Vec<PolicyAst> = parts.into_iter().map(|n| random_ast(rng, n)).collect();
    match rng.gen_range(0..3) {
        0 => PolicyAst::And(children),
        1 => PolicyAst::Or(children),
        _ => {
            let k = rng.gen_range(1..=children.len());
            PolicyAst::Threshold(k, children)
        }
    }
}

pub fn random_policy<R: Rng>(rng: &mut R, max_leaves: usize) -> (PolicyAst, LsssPolicy) {
    let n = rng.gen_range(1..=max_leaves);
    let ast = random_ast(rng, n);
    let lsss = LsssPolicy::from_ast(&ast).unwrap();
    (ast, lsss)
}

/// A random attribute set satisfying `ast`, possibly with extra attributes.
pub fn satisfying_set<R: Rng>(rng: &mut R, ast: &PolicyAst) -> BTreeSet<String> {
    let universe: Vec<String> = ALPHABET.iter().map(|s| s.to_string()).collect();
    for _ in 0..32 {
        let s: BTreeSet<String> = universe.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if ast.is_satisfied_by(&s) {
            return s;
        }
    }
    universe.into_iter().collect()
}

pub fn all_subsets() -> Vec<BTreeSet<String>> {
    (0u32..1 << ALPHABET.len())
        .map(|mask| {
            ALPHABET
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.to_string())
                .collect()
        })
        .collect()
}

/// The representative of `s` in `(-p/2, p/2]` as a signed integer.
pub fn centered(s: &Scalar) -> BigInt {
    let p = BigInt::from_biguint(Sign::Plus, GroupDescription::bls12_381().p);
    let v = BigInt::from_biguint(Sign::Plus, BigUint::from_bytes_be(&s.to_bytes_be()));
    if v.clone() * 2 > p {
        v - p
    } else {
        v
    }
}

fn rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = rows[r][c].clone() / rows[rank][c].clone();
                for j in c..cols {
                    let d = f.clone() * rows[rank][j].clone();
                    rows[r][j] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Independent span test: exact rank over the rationals of the selected
/// rows with and without the target `(1, 0, .., 0)`. The matrices here have
/// tiny integer entries, so the rank over Q equals the rank over Z_p.
pub fn target_in_span(lsss: &LsssPolicy, attrs: &BTreeSet<String>) -> bool {
    let rows: Vec<Vec<BigRational>> = (0..lsss.rows())
        .filter(|i| attrs.contains(lsss.attribute(*i)))
        .map(|i| lsss.row(i).iter().map(|x| BigRational::from_integer(centered(x))).collect())
        .collect();
    if rows.is_empty() {
        return false;
    }
    let mut target = vec![BigRational::zero(); lsss.cols()];
    target[0] = BigRational::one();
    let mut with_target = rows.clone();
    with_target.push(target);
    rank(rows) == rank(with_target)
}
