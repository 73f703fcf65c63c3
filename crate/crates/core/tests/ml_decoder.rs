#[path = "common/oracles.rs"]
mod oracles;

use oracles::{pack, small_code, Exhaustive, SMALL_N};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satqkd::ldpc::{decode, syndrome};
use satqkd::reconcile::llr_of;

const P: f64 = 0.05;

#[test]
fn bp_agrees_with_exhaustive_decoding() {
    let code = small_code();
    assert_eq!((code.n(), code.m()), (SMALL_N, 6));
    let oracle = Exhaustive::new(&code, P);
    let llr = vec![llr_of(P); SMALL_N];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 1000;
    let (mut bitwise, mut block, mut unique) = (0, 0, 0);
    for _ in 0..trials {
        let e: Vec<u8> = (0..SMALL_N).map(|_| rng.random_bool(P) as u8).collect();
        let s = syndrome(&code, &e).unwrap();
        let si = pack(&s);
        let r = decode(&code, &s, &llr, 50).unwrap();
        if r.error == oracle.bitwise_map(si) {
            bitwise += 1;
        }
        let w = r.error.iter().filter(|&&b| b == 1).count() as u32;
        if syndrome(&code, &r.error).unwrap() == s && w == oracle.min_weight[si] {
            block += 1;
        }
        if oracle.leaders[si] == 1 {
            unique += 1;
        }
    }
    println!("bitwise MAP {bitwise}/{trials}, block ML {block}/{trials}, unique ML leader {unique}/{trials}");
    assert!(bitwise * 100 >= trials * 95, "bitwise MAP agreement {bitwise}/{trials}");
    // BP cannot pick among tied coset leaders, so block agreement tracks
    // the unique-leader count.
    assert!(block + 20 >= unique, "block ML agreement {block} vs {unique} unique");
}

#[test]
fn oracle_posterior_is_normalized() {
    let code = small_code();
    let o = Exhaustive::new(&code, P);
    let sum: f64 = o.total.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert_eq!(o.min_weight[0], 0);
    assert_eq!(o.leaders[0], 1);
}
