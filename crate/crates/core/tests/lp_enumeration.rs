mod common;

use common::{brute_force_min, random_bounded_lp};
use mimo_assoc::lp::{check_certificate, solve, verify};
use mimo_assoc::LpStatus;
use proptest::prelude::*;

fn check(seed: u64, n: usize, m: usize) -> Result<(), TestCaseError> {
    let lp = random_bounded_lp(seed, n, m);
    let sol = solve(&lp).unwrap();
    match brute_force_min(&lp) {
        Some((best, _)) => {
            prop_assert_eq!(sol.status, LpStatus::Optimal);
            prop_assert!((sol.objective - best).abs() <= 1e-9 * best.abs().max(1.0), "{} vs {best}", sol.objective);
            prop_assert!(verify(&lp, &sol).max() <= 1e-8, "{:?}", verify(&lp, &sol));
        }
        None => {
            prop_assert_eq!(sol.status, LpStatus::Infeasible);
            prop_assert!(check_certificate(&lp, sol.certificate.as_ref().unwrap(), 1e-9));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_programs_match_enumeration(seed in any::<u64>(), n in 1usize..7, m in 0usize..6) {
        check(seed, n, m)?;
    }
}

#[test]
fn twelve_variable_programs_match_enumeration() {
    for seed in 0..5 {
        check(1000 + seed, 12, 4).unwrap();
    }
}

#[test]
fn infeasible_programs_get_certificates() {
    let mut infeasible = 0;
    for seed in 0..200 {
        let lp = random_bounded_lp(seed, 3, 5);
        let sol = solve(&lp).unwrap();
        if sol.status == LpStatus::Infeasible {
            infeasible += 1;
            assert!(brute_force_min(&lp).is_none());
            assert!(check_certificate(&lp, sol.certificate.as_ref().unwrap(), 1e-9));
        }
    }
    assert!(infeasible > 0, "generator never produced an infeasible program");
}
