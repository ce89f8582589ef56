use modaprompt::metrics::{f_score, lt_pr_re_f, precision_curve, success_curve};
use modaprompt::track::TrackerOutput;
use modaprompt_oracles::RandomInstance;
use proptest::prelude::*;

proptest! {
    #[test]
    fn curves_are_monotone_and_bounded(seed in 0u64..10_000) {
        let inst = RandomInstance::generate(seed, 120);
        prop_assume!(inst.gts.iter().any(|g| g.is_present()));
        let s = success_curve(&inst.preds, &inst.gts).unwrap();
        let p = precision_curve(&inst.preds, &inst.gts).unwrap();
        prop_assert!(s.values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
        for v in s.values.iter().chain(&p.values).chain([&s.summary, &p.summary]) {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn f_is_symmetric_and_idempotent(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        prop_assert_eq!(f_score(a, b), f_score(b, a));
        prop_assert!((f_score(a, a) - a).abs() <= 1e-15);
    }

    #[test]
    fn lt_score_is_consistent(seed in 0u64..10_000) {
        let inst = RandomInstance::generate(seed, 120);
        prop_assume!(inst.gts.iter().any(|g| g.is_present()));
        let (s, curves) = lt_pr_re_f(&inst.preds, &inst.gts).unwrap();
        prop_assert!((s.f - f_score(s.pr, s.re)).abs() <= 1e-12);
        prop_assert!(curves.f.iter().all(|&f| f <= s.f));
        prop_assert_eq!(*curves.thresholds.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn monotone_confidence_rescaling_keeps_max_f(seed in 0u64..10_000, gain in 0.1..10.0f64, bias in -5.0..5.0f64) {
        let inst = RandomInstance::generate(seed, 120);
        prop_assume!(inst.gts.iter().any(|g| g.is_present()));
        let rescaled: Vec<TrackerOutput> = inst
            .preds
            .iter()
            .map(|p| TrackerOutput { confidence: (gain * p.confidence + bias).exp(), ..*p })
            .collect();
        let (a, _) = lt_pr_re_f(&inst.preds, &inst.gts).unwrap();
        let (b, _) = lt_pr_re_f(&rescaled, &inst.gts).unwrap();
        prop_assert_eq!(a.f, b.f);
    }
}
