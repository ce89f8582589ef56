use modaprompt::metrics::{lt_pr_re_f, precision_curve, success_curve};
use modaprompt::prompt::{compose_dual, compose_triple};
use modaprompt::Error;
use modaprompt_oracles::{
    oracle_compose, oracle_lt_f, oracle_precision, oracle_success, random_image, RandomInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn long_term_score_matches_brute_force() {
    let mut checked = 0;
    for seed in 0..150 {
        let inst = RandomInstance::generate(seed, 200);
        match (lt_pr_re_f(&inst.preds, &inst.gts), oracle_lt_f(&inst.preds, &inst.gts)) {
            (Ok((fast, curves)), Ok(slow)) => {
                assert_eq!(fast, slow, "seed {seed}");
                let i = curves.thresholds.iter().position(|&t| t == fast.tau_star).unwrap();
                assert_eq!(curves.f[i], fast.f);
                checked += 1;
            }
            (Err(Error::Protocol(_)), Err(Error::Protocol(_))) => {}
            (a, b) => panic!("seed {seed}: {a:?} vs {b:?}"),
        }
    }
    assert!(checked >= 100);
}

#[test]
fn short_term_curves_match_brute_force() {
    let mut checked = 0;
    for seed in 0..150 {
        let inst = RandomInstance::generate(seed, 200);
        if !inst.gts.iter().any(|g| g.is_present()) {
            assert!(success_curve(&inst.preds, &inst.gts).is_err());
            continue;
        }
        let s = success_curve(&inst.preds, &inst.gts).unwrap();
        let (values, auc) = oracle_success(&inst.preds, &inst.gts);
        assert_eq!(s.values, values, "seed {seed}");
        assert_eq!(s.summary, auc);
        let p = precision_curve(&inst.preds, &inst.gts).unwrap();
        let (values, at20) = oracle_precision(&inst.preds, &inst.gts);
        assert_eq!(p.values, values, "seed {seed}");
        assert_eq!(p.summary, at20);
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn compositor_matches_naive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..200 {
        let v = random_image(&mut rng, 16, 16, 3);
        let a = random_image(&mut rng, 16, 16, 3);
        let lambda = if i == 0 { 0.37 } else { rng.random::<f64>() };
        let fast = compose_dual(&v, &a, lambda).unwrap();
        let slow = oracle_compose(&v, &a, lambda);
        let diff = fast
            .data()
            .iter()
            .zip(slow.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12, "λ = {lambda}: {diff}");
    }
}

#[test]
fn compositor_algebra_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..9), rng.random_range(1..9));
        let v = random_image(&mut rng, w, h, 3);
        let a = random_image(&mut rng, w, h, 3);
        assert_eq!(compose_dual(&v, &a, 0.0).unwrap(), v);
        assert_eq!(compose_dual(&v, &a, 1.0).unwrap(), a);

        let l1: f64 = rng.random();
        let l2: f64 = rng.random();
        let f1 = compose_dual(&v, &a, l1).unwrap();
        let f2 = compose_dual(&v, &a, l2).unwrap();
        let mid = compose_dual(&v, &a, (l1 + l2) / 2.0).unwrap();
        for k in 0..v.data().len() {
            let (vv, aa) = (v.data()[k], a.data()[k]);
            let x = f1.data()[k];
            assert!(vv.min(aa) <= x && x <= vv.max(aa));
            assert!((f1.data()[k] + f2.data()[k] - 2.0 * mid.data()[k]).abs() <= 1e-12);
        }
        assert_eq!(compose_triple(&v, &a, &a, l1, 0.0, 1.0 - l1).unwrap(), f1);
    }
}
