mod common;

use std::collections::BTreeSet;

use common::{random_policy, satisfying_set};
use ff::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vabe_core::abe::{
    decrypt_basic, encrypt_branch, keygen, recover_blinded, setup, MasterSecret, PrivateKey, PublicParams,
};
use vabe_core::groups::{counted_scope, pairing, Gt, OpCounter, Scalar, G1};
use vabe_core::policy::{attribute_set, LsssPolicy};
use vabe_core::vout::{
    decrypt, encrypt, encrypt_traced, gen_tk, outdec, transform, TransformedCiphertext,
};
use vabe_core::Error;

fn fixture(seed: u64) -> (ChaCha20Rng, PublicParams, MasterSecret) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (pp, msk) = setup(&mut rng);
    (rng, pp, msk)
}

fn chain(n: usize, gate: &str) -> String {
    (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(&format!(" {gate} "))
}

#[test]
fn basic_correctness_on_random_policies() {
    let (mut rng, pp, msk) = fixture(21);
    for _ in 0..200 {
        let (ast, lsss) = random_policy(&mut rng, 6);
        let attrs = satisfying_set(&mut rng, &ast);
        let sk = keygen(&pp, &msk, &attrs, &mut rng).unwrap();
        let m = Gt::random(&mut rng);
        let branch = encrypt_branch(&pp, &m, &lsss, &mut rng);
        assert_eq!(decrypt_basic(&sk, &lsss, &branch).unwrap(), m, "{ast} / {attrs:?}");
    }
}

#[test]
fn outsourced_matches_local_on_random_policies() {
    let (mut rng, pp, msk) = fixture(22);
    for _ in 0..50 {
        let (ast, lsss) = random_policy(&mut rng, 6);
        let attrs = satisfying_set(&mut rng, &ast);
        let sk = keygen(&pp, &msk, &attrs, &mut rng).unwrap();
        let m = Gt::random(&mut rng);
        let ct = encrypt(&pp, &m, &lsss, &mut rng);
        let (tk, rk) = gen_tk(&pp, &sk, &mut rng);
        let ctp = transform(&pp, &ct, &tk).unwrap();
        assert_eq!(outdec(&pp, &ct.header(), &ctp, &rk).unwrap(), m);
        assert_eq!(decrypt(&pp, &sk, &ct).unwrap(), m);
    }
}

#[test]
fn blinding_identity() {
    let (mut rng, pp, msk) = fixture(23);
    let egg = pp.group.gt_gen;
    for _ in 0..20 {
        let (ast, lsss) = random_policy(&mut rng, 6);
        let sk = keygen(&pp, &msk, &satisfying_set(&mut rng, &ast), &mut rng).unwrap();
        let (ct, trace) = encrypt_traced(&pp, &Gt::random(&mut rng), &lsss, &mut rng);
        let (tk, rk) = gen_tk(&pp, &sk, &mut rng);
        let ctp = transform(&pp, &ct, &tk).unwrap();
        let z_inv = rk.z.invert().unwrap();
        assert_eq!(ctp.t1_prime, egg.pow(&(msk.alpha * trace.s1 * z_inv)));
        assert_eq!(ctp.t2_prime, egg.pow(&(msk.alpha * trace.s2 * z_inv)));
        let w = lsss.recon_coeffs(&sk.attributes()).unwrap();
        assert_eq!(ctp.t1_prime.pow(&rk.z), recover_blinded(&ct.branch1, &lsss, &sk, &w).unwrap());
        assert_eq!(ctp.t2_prime.pow(&rk.z), recover_blinded(&ct.branch2, &lsss, &sk, &w).unwrap());
    }
}

fn mixtures(k1: &PrivateKey, k2: &PrivateKey) -> Vec<PrivateKey> {
    // every choice of (K, K0) source plus every per-attribute source
    let attrs: Vec<String> = k1.k_attr.keys().chain(k2.k_attr.keys()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    for base in 0..4u32 {
        for mask in 0u32..1 << attrs.len() {
            let pick = |bit: bool| if bit { k2 } else { k1 };
            let mut k = pick(base & 1 != 0).clone();
            k.k0 = pick(base & 2 != 0).k0;
            k.k_attr.clear();
            for (i, a) in attrs.iter().enumerate() {
                let preferred = pick(mask & (1 << i) != 0);
                let other = pick(mask & (1 << i) == 0);
                let v = preferred.k_attr.get(a).or_else(|| other.k_attr.get(a)).unwrap();
                k.k_attr.insert(a.clone(), *v);
            }
            out.push(k);
        }
    }
    out
}

#[test]
fn colluding_keys_cannot_be_combined() {
    let (mut rng, pp, msk) = fixture(24);
    let lsss = LsssPolicy::from_text("a and b").unwrap();
    let m = Gt::random(&mut rng);
    let branch = encrypt_branch(&pp, &m, &lsss, &mut rng);
    let k1 = keygen(&pp, &msk, &attribute_set(["a"]), &mut rng).unwrap();
    let k2 = keygen(&pp, &msk, &attribute_set(["b"]), &mut rng).unwrap();
    for mixed in mixtures(&k1, &k2) {
        match decrypt_basic(&mixed, &lsss, &branch) {
            Ok(v) => assert_ne!(v, m),
            Err(e) => assert!(matches!(e, Error::NotSatisfied)),
        }
    }
}

#[test]
fn key_sanity_holds_and_detects_replacement() {
    let (mut rng, pp, msk) = fixture(25);
    for _ in 0..10 {
        let attrs = attribute_set(["a", "b", "c"]);
        let sk = keygen(&pp, &msk, &attrs, &mut rng).unwrap();
        assert!(sk.is_well_formed(&pp));
        let victim = ["a", "b", "c"][rng.gen_range(0..3)];
        let mut bad = sk.clone();
        bad.k_attr.insert(victim.into(), G1::random(&mut rng));
        assert!(!bad.is_well_formed(&pp));
    }
    // the well-formedness equation itself
    let sk = keygen(&pp, &msk, &attribute_set(["a"]), &mut rng).unwrap();
    assert_eq!(pairing(&pp.group.g1, &sk.k), pp.egg_alpha * pairing(&pp.g_a, &sk.k0));
}

fn keygen_cost(n: u64) -> OpCounter {
    OpCounter { exp_g1: n, exp_g2: 2, hash_to_group: n, ..Default::default() }
}

fn encrypt_cost(leaves: u64) -> OpCounter {
    // per branch: C, C' and per row two G1 exps, one G2 exp, one hash;
    // plus the commitment
    OpCounter {
        pairings: 0,
        exp_g1: 2 * (1 + 2 * leaves) + 2,
        exp_g2: 2 * leaves,
        exp_gt: 2,
        hash_to_group: 2 * leaves,
        hash_to_scalar: 2,
    }
}

#[test]
fn keygen_and_encrypt_costs_are_affine() {
    let (mut rng, pp, msk) = fixture(26);
    for n in [1usize, 2, 5, 10, 20, 50] {
        let attrs: BTreeSet<String> = (0..n).map(|i| format!("x{i}")).collect();
        let (_, ops) = counted_scope(|| keygen(&pp, &msk, &attrs, &mut rng).unwrap());
        assert_eq!(ops, keygen_cost(n as u64), "keygen n={n}");

        let lsss = LsssPolicy::from_text(&chain(n, "and")).unwrap();
        let m = Gt::random(&mut rng);
        let (_, ops) = counted_scope(|| encrypt(&pp, &m, &lsss, &mut rng));
        assert_eq!(ops, encrypt_cost(n as u64), "encrypt n={n}");
    }
}

#[test]
fn transform_cost_tracks_rows_used() {
    let (mut rng, pp, msk) = fixture(27);
    for n in [1usize, 3, 8] {
        let lsss = LsssPolicy::from_text(&chain(n, "and")).unwrap();
        let attrs: BTreeSet<String> = (0..n).map(|i| format!("x{i}")).collect();
        let sk = keygen(&pp, &msk, &attrs, &mut rng).unwrap();
        let (tk, _) = gen_tk(&pp, &sk, &mut rng);
        let ct = encrypt(&pp, &Gt::random(&mut rng), &lsss, &mut rng);
        let (_, ops) = counted_scope(|| transform(&pp, &ct, &tk).unwrap());
        let n = n as u64;
        assert_eq!(ops, OpCounter { pairings: 2 * (2 * n + 1), exp_gt: 2 * n, ..Default::default() });
    }
}

#[test]
fn user_cost_is_constant() {
    let (mut rng, pp, msk) = fixture(28);
    let mut seen = Vec::new();
    for n in [1usize, 10, 50] {
        let lsss = LsssPolicy::from_text(&chain(n, "and")).unwrap();
        let attrs: BTreeSet<String> = (0..n).map(|i| format!("x{i}")).collect();
        let sk = keygen(&pp, &msk, &attrs, &mut rng).unwrap();
        let (tk, rk) = gen_tk(&pp, &sk, &mut rng);
        let ct = encrypt(&pp, &Gt::random(&mut rng), &lsss, &mut rng);
        let ctp = transform(&pp, &ct, &tk).unwrap();
        let header = ct.header();
        let (res, ops) = counted_scope(|| outdec(&pp, &header, &ctp, &rk));
        res.unwrap();
        seen.push(ops);
    }
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[1], seen[2]);
    assert_eq!(
        seen[0],
        OpCounter { exp_g1: 2, exp_gt: 2, hash_to_scalar: 2, ..Default::default() }
    );
}

fn mutate(ctp: &TransformedCiphertext, field: usize, rng: &mut ChaCha20Rng) -> TransformedCiphertext {
    let mut out = ctp.clone();
    match field {
        0 => out.t_hat = G1::random(rng),
        1 => out.t1 = Gt::random(rng),
        2 => out.t1_prime = Gt::random(rng),
        3 => out.t2 = Gt::random(rng),
        _ => out.t2_prime = Gt::random(rng),
    }
    out
}

#[test]
fn every_single_field_mutation_is_rejected() {
    let (mut rng, pp, msk) = fixture(29);
    let lsss = LsssPolicy::from_text("doctor and 2 of (a, b, c)").unwrap();
    let sk = keygen(&pp, &msk, &attribute_set(["doctor", "a", "c"]), &mut rng).unwrap();
    let (tk, rk) = gen_tk(&pp, &sk, &mut rng);
    let m = Gt::random(&mut rng);
    let ct = encrypt(&pp, &m, &lsss, &mut rng);
    let header = ct.header();
    let honest = transform(&pp, &ct, &tk).unwrap();
    for trial in 0..200 {
        let bad = mutate(&honest, trial % 5, &mut rng);
        assert!(matches!(outdec(&pp, &header, &bad, &rk), Err(Error::VerificationFailed)), "trial {trial}");
    }
    // swapping the two blinded values is also caught
    let mut swapped = honest.clone();
    std::mem::swap(&mut swapped.t1_prime, &mut swapped.t2_prime);
    assert!(outdec(&pp, &header, &swapped, &rk).is_err());
}

#[test]
fn replayed_transformation_is_rejected() {
    let (mut rng, pp, msk) = fixture(30);
    let lsss = LsssPolicy::from_text("a or b").unwrap();
    let sk = keygen(&pp, &msk, &attribute_set(["a"]), &mut rng).unwrap();
    let (tk, rk) = gen_tk(&pp, &sk, &mut rng);
    let ct_a = encrypt(&pp, &Gt::random(&mut rng), &lsss, &mut rng);
    let ct_b = encrypt(&pp, &Gt::random(&mut rng), &lsss, &mut rng);
    let ctp_a = transform(&pp, &ct_a, &tk).unwrap();
    assert!(matches!(outdec(&pp, &ct_b.header(), &ctp_a, &rk), Err(Error::VerificationFailed)));
}

#[test]
fn result_does_not_depend_on_z() {
    let (mut rng, pp, msk) = fixture(31);
    let lsss = LsssPolicy::from_text("a and b").unwrap();
    let sk = keygen(&pp, &msk, &attribute_set(["a", "b"]), &mut rng).unwrap();
    let m = Gt::random(&mut rng);
    let ct = encrypt(&pp, &m, &lsss, &mut rng);
    let (tk1, rk1) = gen_tk(&pp, &sk, &mut rng);
    let (tk2, rk2) = gen_tk(&pp, &sk, &mut rng);
    assert_ne!(rk1.z, rk2.z);
    let a = outdec(&pp, &ct.header(), &transform(&pp, &ct, &tk1).unwrap(), &rk1).unwrap();
    let b = outdec(&pp, &ct.header(), &transform(&pp, &ct, &tk2).unwrap(), &rk2).unwrap();
    assert_eq!(a, m);
    assert_eq!(b, m);
    // and the wrong z never verifies
    let wrong = outdec(&pp, &ct.header(), &transform(&pp, &ct, &tk1).unwrap(), &rk2);
    assert!(matches!(wrong, Err(Error::VerificationFailed)));
}

#[test]
fn commitment_rejects_wrong_openings() {
    let (mut rng, pp, _) = fixture(32);
    let lsss = LsssPolicy::from_text("a").unwrap();
    let m = Gt::random(&mut rng);
    let (ct, trace) = encrypt_traced(&pp, &m, &lsss, &mut rng);
    let mut false_accepts = 0;
    for _ in 0..1000 {
        let r = Gt::random(&mut rng);
        false_accepts += vabe_core::vout::verify_commitment(&pp, &ct.commitment, &m, &r) as u32;
        false_accepts += vabe_core::vout::verify_commitment(&pp, &ct.commitment, &r, &trace.tag) as u32;
    }
    assert_eq!(false_accepts, 0);
    assert!(vabe_core::vout::verify_commitment(&pp, &ct.commitment, &m, &trace.tag));
}

#[test]
fn scalar_zero_is_never_a_retrieve_key() {
    let (mut rng, pp, msk) = fixture(33);
    let sk = keygen(&pp, &msk, &attribute_set(["a"]), &mut rng).unwrap();
    for _ in 0..50 {
        let (_, rk) = gen_tk(&pp, &sk, &mut rng);
        assert_ne!(rk.z, Scalar::ZERO);
    }
}
