use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vabe_core::groups::{
    counted_scope, decode_scalar, encode_scalar, hash_to_g1, hash_to_scalar, pairing, random_scalar,
    scalar_to_biguint, GroupDescription, Gt, OpCounter, PointError, G1, G2, H1_TAG, H2_TAG,
};

fn rng() -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(0x6a09e667)
}

#[test]
fn bilinearity_over_random_exponents() {
    let mut rng = rng();
    let d = GroupDescription::bls12_381();
    for _ in 0..100 {
        let x = random_scalar(&mut rng);
        let y = random_scalar(&mut rng);
        assert_eq!(pairing(&d.g1.pow(&x), &d.g2.pow(&y)), d.gt_gen.pow(&(x * y)));
    }
}

#[test]
fn points_round_trip() {
    let mut rng = rng();
    for _ in 0..100 {
        let a = G1::random(&mut rng);
        let b = G2::random(&mut rng);
        let c = Gt::random(&mut rng);
        let s = random_scalar(&mut rng);
        assert_eq!(G1::decode(&a.encode()).unwrap(), a);
        assert_eq!(G2::decode(&b.encode()).unwrap(), b);
        assert_eq!(Gt::decode(&c.encode()).unwrap(), c);
        assert_eq!(decode_scalar(&encode_scalar(&s)).unwrap(), s);
    }
    assert_eq!(G1::decode(&G1::identity().encode()).unwrap(), G1::identity());
    assert_eq!(G2::decode(&G2::identity().encode()).unwrap(), G2::identity());
}

#[test]
fn encodings_are_tagged() {
    assert_eq!(&G1::generator().encode()[..2], &[0x01, 0x01]);
    assert_eq!(&G2::generator().encode()[..2], &[0x02, 0x01]);
    assert_eq!(&Gt::generator().encode()[..2], &[0x03, 0x01]);
    assert_eq!(G1::generator().encode().len(), 50);
    assert_eq!(G2::generator().encode().len(), 98);
    assert_eq!(Gt::generator().encode().len(), 290);
}

#[test]
fn decode_rejects_random_bytes() {
    let mut rng = rng();
    let mut rejected = [0usize; 3];
    for _ in 0..100 {
        let mut b1 = vec![0x01, 0x01];
        b1.extend((0..48).map(|_| rng.gen::<u8>()));
        // keep the compression flag so the failure is about the point itself
        b1[2] = (b1[2] & 0x1f) | 0x80;
        rejected[0] += G1::decode(&b1).is_err() as usize;

        let mut b2 = vec![0x02, 0x01];
        b2.extend((0..96).map(|_| rng.gen::<u8>()));
        b2[2] = (b2[2] & 0x1f) | 0x80;
        rejected[1] += G2::decode(&b2).is_err() as usize;

        let mut b3 = vec![0x03, 0x01];
        b3.extend((0..288).map(|_| rng.gen::<u8>()));
        rejected[2] += Gt::decode(&b3).is_err() as usize;
    }
    assert_eq!(rejected, [100, 100, 100]);
}

#[test]
fn decode_rejects_off_subgroup_and_off_curve() {
    // x = 0 gives y^2 = 4 on E(Fp): a curve point outside the r-torsion.
    let mut b = vec![0x01, 0x01, 0x80];
    b.extend([0u8; 47]);
    assert_eq!(G1::decode(&b), Err(PointError::Invalid));
    // x = p is not a canonical field element
    let p_hex = "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f6241eabfffeb153ffffb9feffffffffaaab";
    let mut b = vec![0x01, 0x01];
    b.extend(hex::decode(p_hex).unwrap());
    b[2] |= 0x80;
    assert_eq!(G1::decode(&b), Err(PointError::Invalid));
}

#[test]
fn attribute_hash_has_no_collisions_on_a_corpus() {
    let mut seen = HashSet::new();
    for i in 0..10_000 {
        let p = hash_to_g1(format!("attr:{i}").as_bytes());
        assert!(!p.is_identity());
        assert!(seen.insert(p.encode()), "collision at {i}");
    }
}

#[test]
fn scalar_hash_domains_are_independent() {
    let mut rng = rng();
    let p = GroupDescription::bls12_381().p;
    for _ in 0..1_000 {
        let m = Gt::random(&mut rng);
        let h1 = hash_to_scalar(H1_TAG, &m);
        let h2 = hash_to_scalar(H2_TAG, &m);
        assert_ne!(h1, h2);
        assert!(scalar_to_biguint(&h1) < p);
    }
}

#[test]
fn counter_matches_script() {
    let mut rng = rng();
    let x = random_scalar(&mut rng);
    let ((), ops) = counted_scope(|| {
        let a = G1::generator().pow(&x);
        let b = G2::generator().pow(&x).pow(&x);
        let t = pairing(&a, &b);
        let _ = pairing(&a, &G2::generator());
        let _ = t.pow(&x);
        let _ = hash_to_g1(b"x");
        let _ = hash_to_scalar(H1_TAG, &t);
    });
    assert_eq!(
        ops,
        OpCounter { pairings: 2, exp_g1: 1, exp_g2: 2, exp_gt: 1, hash_to_group: 1, hash_to_scalar: 1 }
    );
}

#[test]
fn counters_are_per_thread() {
    let (_, outer) = counted_scope(|| {
        std::thread::spawn(|| {
            pairing(&G1::generator(), &G2::generator());
        })
        .join()
        .unwrap();
    });
    assert!(outer.is_zero());
}
