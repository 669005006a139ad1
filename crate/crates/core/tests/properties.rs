use proptest::prelude::*;

use dupkit::analysis::PoissonBinomial;
use dupkit::curves::{BidderProfile, RevenueCurve};
use dupkit::duplication::{extend_profile, DuplicatePlan};
use dupkit::examples::ratio_two_triangles;
use dupkit::exante::solve_exante;
use dupkit::simulate::{expected_order_stat, rng};

fn triangle() -> impl Strategy<Value = RevenueCurve> {
    (0.05f64..=1.0, 0.1f64..=1.0).prop_map(|(q, r)| RevenueCurve::triangle(q, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn value_times_quantile_is_revenue(c in triangle(), q in 0.001f64..=1.0) {
        let v = c.value(q).unwrap();
        prop_assert!((v * q - c.rev(q).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn exante_is_feasible_and_beats_every_monopoly(
        curves in prop::collection::vec(triangle(), 1..6),
        k in 1usize..3,
    ) {
        let p = BidderProfile::new(curves.clone()).unwrap();
        let sol = solve_exante(&p, k, 1e-12).unwrap();
        prop_assert!(sol.quantiles.iter().sum::<f64>() <= k as f64 + 1e-9);
        let achieved: f64 = curves.iter().zip(&sol.quantiles).map(|(c, &q)| c.rev(q).unwrap()).sum();
        prop_assert!((achieved - sol.opt).abs() < 1e-9);
        for c in &curves {
            prop_assert!(sol.opt >= c.monopoly().1 - 1e-9);
        }
    }

    #[test]
    fn duplicates_never_lower_the_second_price(curves in prop::collection::vec(triangle(), 2..5)) {
        let p = BidderProfile::new(curves).unwrap();
        let base = expected_order_stat(&p, 2, 1e-9).unwrap();
        let (d, _) = extend_profile(&p, &DuplicatePlan::AllOnce { pair_constrained: false }).unwrap();
        prop_assert!(expected_order_stat(&d, 2, 1e-9).unwrap() >= base - 1e-7);
    }

    #[test]
    fn complementary_ratio_is_at_least_three_quarters(q1 in 0.001f64..0.999, a in 0.0f64..=1.0) {
        let r = ratio_two_triangles(q1, 1.0, 1.0 - q1, a).unwrap();
        prop_assert!((0.75 - 1e-12..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn poisson_binomial_is_a_distribution(probs in prop::collection::vec(0.0f64..=1.0, 0..30)) {
        let pb = PoissonBinomial::new(&probs).unwrap();
        prop_assert!((pb.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((pb.mean() - probs.iter().sum::<f64>()).abs() < 1e-9);
        for m in 0..probs.len() {
            prop_assert!(pb.tail(m) + 1e-15 >= pb.tail(m + 1));
        }
    }

    #[test]
    fn uniforms_are_open_and_addressable(seed: u64, i: u64, s in 0u64..64) {
        let u = rng::uniform(seed, i, s);
        prop_assert!(u > 0.0 && u < 1.0);
        prop_assert_eq!(u, rng::uniform_keyed(rng::key(seed), i, s));
    }
}
