use plastiflow::analysis::{
    exact_overshoot, overshoot_aimd, overshoot_aisd, overshoot_formula, overshoot_mimd, overshoot_misd, two_flow_oracle,
};
use plastiflow::{Horizon, RuleKind, UpdateRule};
use proptest::prelude::*;

const CAPACITIES: [u32; 3] = [50, 100, 1000];

/// Sweep grid: additive steps 1..9, multiplicative factors 0.1..0.9 and 1.1..1.9.
fn grid(kind: RuleKind) -> Vec<UpdateRule> {
    let inc: Vec<f64> =
        (1..=9).map(|i| if kind.multiplicative_increase() { 1.0 + i as f64 / 10.0 } else { i as f64 }).collect();
    let dec: Vec<f64> =
        (1..=9).map(|i| if kind.multiplicative_decrease() { i as f64 / 10.0 } else { i as f64 }).collect();
    inc.iter().flat_map(|&ki| dec.iter().map(move |&kd| UpdateRule::new(kind, ki, kd).unwrap())).collect()
}

fn slack(rule: &UpdateRule) -> f64 {
    2.0 * rule.ki().max(1.0) + 2.0
}

/// Measured overshoot against the closed form at the measured horizon. The
/// subtractive-decrease forms account for the floor at 1 on the smaller flow.
fn check(kind: RuleKind, keep: impl Fn(&UpdateRule) -> bool) {
    for c in CAPACITIES {
        for rule in grid(kind).into_iter().filter(|r| keep(r)) {
            let measured = two_flow_oracle(&rule, c, 100_000).unwrap();
            let Horizon::Steps(n) = measured.horizon else { panic!("{rule:?} at C={c} never re-congests") };
            let analytic = match kind {
                RuleKind::Aimd => overshoot_formula(&rule, c as f64, n).unwrap(),
                _ => exact_overshoot(&rule, c as f64, n, true).unwrap(),
            };
            let err = (analytic - measured.overshoot).abs();
            assert!(err <= slack(&rule), "{rule:?} C={c} n={n}: analytic {analytic} measured {}", measured.overshoot);
        }
    }
}

#[test]
fn aimd_formula_matches_oracle() {
    check(RuleKind::Aimd, |_| true);
}

#[test]
fn aisd_formula_matches_oracle() {
    check(RuleKind::Aisd, |_| true);
}

#[test]
fn misd_formula_matches_oracle() {
    check(RuleKind::Misd, |_| true);
}

#[test]
fn mimd_formula_matches_oracle_on_short_horizons() {
    check(RuleKind::Mimd, |r| r.kd() >= 0.3);
}

/// Per-step rounding moves each flow by at most 1/2 and the error compounds
/// by `ki` every later step, so over `n` steps the gap is bounded by the
/// geometric sum of `ki^k`.
#[test]
fn mimd_rounding_drift_is_bounded() {
    for c in CAPACITIES {
        for rule in grid(RuleKind::Mimd) {
            let measured = two_flow_oracle(&rule, c, 100_000).unwrap();
            let Horizon::Steps(n) = measured.horizon else { panic!() };
            let analytic = exact_overshoot(&rule, c as f64, n, true).unwrap();
            let drift: f64 = (0..n).map(|k| rule.ki().powi(k as i32)).sum();
            let err = (analytic - measured.overshoot).abs();
            assert!(err <= slack(&rule) + drift, "{rule:?} C={c} n={n}: err {err}");
        }
    }
}

proptest! {
    #[test]
    fn aisd_independent_of_capacity(c1 in 1.0f64..1e6, c2 in 1.0f64..1e6, ki in 0.01f64..100.0, kd in 0.01f64..100.0, n in 0u32..1000) {
        prop_assert_eq!(overshoot_aisd(c1, ki, kd, n).unwrap(), overshoot_aisd(c2, ki, kd, n).unwrap());
    }

    #[test]
    fn sign_structure_in_capacity(c in 1.0f64..1e5, dc in 1.0f64..1e5, ki in 1.01f64..2.0, kd in 0.01f64..0.99, n in 1u32..60) {
        let hi = c + dc;
        prop_assert!(overshoot_aimd(hi, ki, kd, n).unwrap() < overshoot_aimd(c, ki, kd, n).unwrap());
        // At a re-congestion horizon kd ki^n > 1; below it MIMD undershoots more at larger C.
        if kd * ki.powi(n as i32) > 1.0 {
            prop_assert!(overshoot_mimd(hi, ki, kd, n).unwrap() > overshoot_mimd(c, ki, kd, n).unwrap());
        }
        prop_assert!(overshoot_misd(hi, ki, kd, n).unwrap() > overshoot_misd(c, ki, kd, n).unwrap());
    }

    #[test]
    fn oja_step_never_exceeds_ki(ki in 0.1f64..10.0, kd in 0.1f64..10.0, cap in 2u32..2000, wf in 0.0f64..1.0, demand in 0u64..5000) {
        let rule = UpdateRule::new(RuleKind::Oja, ki, kd).unwrap();
        let w = 1 + ((cap - 1) as f64 * wf) as u32;
        let raw = rule.raw_update(plastiflow::PlasticityAction::Ltp, w, demand, cap);
        prop_assert!(raw - w as f64 <= ki + 1e-9);
    }
}

#[test]
fn oja_stationary_when_demand_squared_equals_wc() {
    let rule = UpdateRule::new(RuleKind::Oja, 3.0, 2.0).unwrap();
    // 40^2 = 16 * 100
    let raw = rule.raw_update(plastiflow::PlasticityAction::Ltp, 16, 40, 100);
    assert_eq!(raw, 16.0);
}
