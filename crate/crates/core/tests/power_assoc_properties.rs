mod common;

use common::default_drop;
use mimo_assoc::assoc::qos_report;
use mimo_assoc::lp::{solve, verify};
use mimo_assoc::numeric::Matrix;
use mimo_assoc::se::qos_to_threshold;
use mimo_assoc::{
    association_rule_check, build_lp, solve_max_snr, solve_power_min, ChannelStats, NetworkScenario, Point, QosTargets,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn optimal_solutions_satisfy_every_invariant(seed in any::<u64>(), k in 1usize..12, m in 20usize..200, xi in 0.1f64..2.5) {
        let (s, st) = default_drop(seed, k, m);
        let targets = QosTargets::uniform(&s, xi).unwrap();
        let opt = solve_power_min(&st, &targets, &s).unwrap();
        let snr = solve_max_snr(&st, &targets, &s).unwrap();
        prop_assert!(!(snr.is_feasible() && !opt.is_feasible()));
        if let Some(sol) = opt.solution() {
            let lp = build_lp(&st, &targets, &s).unwrap();
            let raw = solve(&lp).unwrap();
            prop_assert!(verify(&lp, &raw).max() <= 1e-8);

            let rule = association_rule_check(&st, &targets, &s, sol, 1e-6).unwrap();
            prop_assert!(rule.passed(), "{rule:?}");
            let q = qos_report(&st, &targets, &s, &sol.alloc).unwrap();
            prop_assert!(q.min_margin >= -1e-6);
            prop_assert!(q.max_binding_gap <= 1e-8);
            prop_assert!(q.max_power_excess <= 1e-9 * 40.0);
            prop_assert!(sol.lambda.iter().chain(&sol.mu).all(|&v| v >= 0.0));
            for i in 0..s.num_bs() {
                if sol.mu[i] > 1e-12 {
                    prop_assert!((sol.alloc.bs_power(i) - s.pmax[i]).abs() <= 1e-8 * s.pmax[i]);
                }
            }
            if let Some(b) = snr.solution() {
                prop_assert!(sol.objective <= b.objective * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn single_user_closed_form(beta in 1e-3f64..1.0, frac in 0.05f64..1.0, m in 1usize..300, xi in 0.01f64..3.0, noise in 1e-3f64..1.0) {
        // one BS, one user: the QoS row binds and the power row is slack
        let gamma = beta * frac;
        let mut s = NetworkScenario::with_defaults(m, vec![Point::new(0.0, 0.0)], vec![Point::new(0.3, 0.0)]);
        s.noise_dl = noise;
        s.pmax = vec![1e9];
        let st = ChannelStats {
            beta: Matrix::from_rows(&[vec![beta]]).unwrap(),
            gamma: Matrix::from_rows(&[vec![gamma]]).unwrap(),
        };
        let th = qos_to_threshold(xi, s.coherence_length, s.pilot_length).unwrap();
        let b = m as f64 * gamma / th;
        let targets = QosTargets::uniform(&s, xi).unwrap();
        let out = solve_power_min(&st, &targets, &s).unwrap();
        if b <= beta || noise / (b - beta) > 1e9 {
            prop_assert!(!out.is_feasible());
        } else {
            let sol = out.solution().unwrap();
            let rho = noise / (b - beta);
            let lambda = 1.0 / (b - beta);
            prop_assert!((sol.alloc.get(0, 0) - rho).abs() <= 1e-9 * rho);
            prop_assert!((sol.lambda[0] - lambda).abs() <= 1e-9 * lambda);
            prop_assert!(sol.mu[0].abs() <= 1e-12);
        }
    }
}
