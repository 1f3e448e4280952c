//! Transient overshoot of the two-flow scenario.
//!
//! A bottleneck edge of fixed weight `C` carries one flow at full rate when a
//! second flow starts at weight 1. The resulting congestion triggers one LTD
//! on both feeder edges, after which both potentiate every step until their
//! sum exceeds `C` again. The overshoot is that excess, reached after `n` LTP
//! steps.
//!
//! The `overshoot_*` functions are the closed forms (real-valued, no floor at
//! 1). [`two_flow_oracle`] replays the scenario with the engine's integer
//! weights, rounding and `[1, C]` clamping.

use std::fmt;

use crate::plasticity::{PlasticityAction, RuleError, RuleKind, UpdateRule};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("two-flow scenario needs capacity >= 2, got {0}")]
    Capacity(u32),
    #[error("{0} has no closed-form overshoot")]
    NoClosedForm(RuleKind),
}

/// Steps until congestion re-occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Steps(u32),
    Never,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "{n}"),
            Horizon::Never => f.write_str("inf"),
        }
    }
}

/// Excess demand over capacity when congestion re-occurs (negative when the
/// flows settle below capacity) and the number of LTP steps it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvershootResult {
    pub overshoot: f64,
    pub horizon: Horizon,
}

impl OvershootResult {
    /// An optimal controller never overshoots.
    pub const OPTIMAL: OvershootResult = OvershootResult { overshoot: 0.0, horizon: Horizon::Never };
}

/// Approximate closed form `2 n ki + C (kd - 1)`.
pub fn overshoot_aimd(capacity: f64, ki: f64, kd: f64, n: u32) -> Result<f64, AnalysisError> {
    UpdateRule::new(RuleKind::Aimd, ki, kd)?;
    Ok(2.0 * n as f64 * ki + capacity * (kd - 1.0))
}

/// Closed form `2 (n ki - kd)`; independent of capacity.
pub fn overshoot_aisd(_capacity: f64, ki: f64, kd: f64, n: u32) -> Result<f64, AnalysisError> {
    UpdateRule::new(RuleKind::Aisd, ki, kd)?;
    Ok(2.0 * (n as f64 * ki - kd))
}

/// Approximate closed form `C (kd ki^n - 1)`.
pub fn overshoot_mimd(capacity: f64, ki: f64, kd: f64, n: u32) -> Result<f64, AnalysisError> {
    UpdateRule::new(RuleKind::Mimd, ki, kd)?;
    Ok(capacity * (kd * ki.powi(n as i32) - 1.0))
}

/// Approximate closed form `C (ki^n - 1)`; `kd` only enters the exact form.
pub fn overshoot_misd(capacity: f64, ki: f64, kd: f64, n: u32) -> Result<f64, AnalysisError> {
    UpdateRule::new(RuleKind::Misd, ki, kd)?;
    Ok(capacity * (ki.powi(n as i32) - 1.0))
}

/// Closed form for any of the four increase/decrease combinations.
pub fn overshoot_formula(rule: &UpdateRule, capacity: f64, n: u32) -> Result<f64, AnalysisError> {
    let (ki, kd) = (rule.ki(), rule.kd());
    match rule.kind() {
        RuleKind::Aimd => overshoot_aimd(capacity, ki, kd, n),
        RuleKind::Aisd => overshoot_aisd(capacity, ki, kd, n),
        RuleKind::Mimd => overshoot_mimd(capacity, ki, kd, n),
        RuleKind::Misd => overshoot_misd(capacity, ki, kd, n),
        kind => Err(AnalysisError::NoClosedForm(kind)),
    }
}

/// The unapproximated trajectory sum minus capacity: one real-valued LTD
/// from `(C, 1)` followed by `n` real-valued LTP steps. With `floor` the
/// second flow's post-LTD weight is raised to 1.
pub fn exact_overshoot(rule: &UpdateRule, capacity: f64, n: u32, floor: bool) -> Result<f64, AnalysisError> {
    let (ki, kd) = (rule.ki(), rule.kd());
    let kind = rule.kind();
    let ltd = |w: f64| if kind.multiplicative_decrease() { w * kd } else { w - kd };
    let (f1, mut f2) = match kind {
        RuleKind::Aimd | RuleKind::Aisd | RuleKind::Mimd | RuleKind::Misd => (ltd(capacity), ltd(1.0)),
        kind => return Err(AnalysisError::NoClosedForm(kind)),
    };
    if floor {
        f2 = f2.max(1.0);
    }
    let n_f = n as f64;
    let sum = if kind.additive_increase() {
        f1 + f2 + 2.0 * n_f * ki
    } else {
        (f1 + f2) * ki.powi(n as i32)
    };
    Ok(sum - capacity)
}

/// Replays the two-flow scenario on integer weights.
///
/// Both feeder edges see the bottleneck's total demand as their Oja activity
/// term. Each LTP step measures the desired weights, rounded and floored at 1
/// but not yet capped at `C`; the cap cannot bind while the total stays
/// within capacity. The scenario ends at the first step whose total exceeds `C`, when
/// the weights stop changing below `C` ([`Horizon::Never`], reporting the
/// final headroom as a negative overshoot), or after `max_steps` LTP steps.
pub fn two_flow_oracle(rule: &UpdateRule, capacity: u32, max_steps: u32) -> Result<OvershootResult, AnalysisError> {
    if capacity < 2 {
        return Err(AnalysisError::Capacity(capacity));
    }
    let c = capacity as u64;
    let excess = |total: u64| total as f64 - c as f64;

    let (w1, w2) = (capacity, 1u32);
    let demand = w1 as u64 + w2 as u64;
    let mut w1 = rule.apply(PlasticityAction::Ltd, w1, demand, capacity);
    let mut w2 = rule.apply(PlasticityAction::Ltd, w2, demand, capacity);
    let mut total = w1 as u64 + w2 as u64;
    if total > c {
        return Ok(OvershootResult { overshoot: excess(total), horizon: Horizon::Steps(0) });
    }
    let desired = |w: u32, demand: u64| {
        let raw = rule.raw_update(PlasticityAction::Ltp, w, demand, capacity).round();
        raw.max(1.0) as u64
    };
    for n in 1..=max_steps {
        let (n1, n2) = (desired(w1, total), desired(w2, total));
        let next = n1 + n2;
        if next > c {
            return Ok(OvershootResult { overshoot: excess(next), horizon: Horizon::Steps(n) });
        }
        if (n1, n2) == (w1 as u64, w2 as u64) {
            break;
        }
        (w1, w2) = (n1 as u32, n2 as u32);
        total = next;
    }
    Ok(OvershootResult { overshoot: excess(total), horizon: Horizon::Never })
}

/// The three parameter regimes of the overshoot table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamSet {
    Balanced,
    AggressiveIncrease,
    AggressiveDecrease,
}

impl ParamSet {
    pub const ALL: [ParamSet; 3] = [ParamSet::Balanced, ParamSet::AggressiveIncrease, ParamSet::AggressiveDecrease];

    pub fn name(self) -> &'static str {
        match self {
            ParamSet::Balanced => "balanced",
            ParamSet::AggressiveIncrease => "aggressive_increase",
            ParamSet::AggressiveDecrease => "aggressive_decrease",
        }
    }

    /// `(ki, kd)` for a rule. Additive steps and multiplicative factors have
    /// their own values; Oja takes the additive ones.
    pub fn params(self, kind: RuleKind) -> Option<(f64, f64)> {
        let (add_i, add_d, mul_i, mul_d) = match self {
            ParamSet::Balanced => (1.0, 5.0, 1.1, 0.5),
            ParamSet::AggressiveIncrease => (100.0, 5.0, 1.5, 0.5),
            ParamSet::AggressiveDecrease => (1.0, 100.0, 1.1, 0.1),
        };
        let ki = if kind.multiplicative_increase() { mul_i } else { add_i };
        let kd = if kind.multiplicative_decrease() { mul_d } else { add_d };
        kind.parameterised().then_some((ki, kd))
    }

    pub fn rule(self, kind: RuleKind) -> UpdateRule {
        match self.params(kind) {
            Some((ki, kd)) => UpdateRule::new(kind, ki, kd).expect("table parameters are in range"),
            None => UpdateRule::unparameterised(kind),
        }
    }

    /// Published horizon `n` at `C = 1000` for the four closed-form rules.
    pub fn reference_horizon(self, kind: RuleKind) -> Option<u32> {
        let row = match kind {
            RuleKind::Aimd => [250, 3, 450],
            RuleKind::Aisd => [5, 1, 100],
            RuleKind::Mimd => [8, 2, 25],
            RuleKind::Misd => [1, 1, 2],
            _ => return None,
        };
        Some(row[self as usize])
    }
}

/// One row of the overshoot table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    /// Rule name, or `"opt"` for the optimal controller.
    pub rule: &'static str,
    pub set: ParamSet,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    /// Closed form at the simulated horizon, where one exists.
    pub analytic: Option<f64>,
    pub simulated: OvershootResult,
}

/// Closed form and oracle for AIMD, AISD, MIMD, MISD, Oja and the optimum in
/// each parameter regime.
pub fn overshoot_table(capacity: u32, max_steps: u32) -> Result<Vec<TableRow>, AnalysisError> {
    let mut rows = Vec::new();
    for kind in [RuleKind::Aimd, RuleKind::Aisd, RuleKind::Mimd, RuleKind::Misd, RuleKind::Oja] {
        for set in ParamSet::ALL {
            let rule = set.rule(kind);
            let simulated = two_flow_oracle(&rule, capacity, max_steps)?;
            let analytic = match (kind, simulated.horizon) {
                (RuleKind::Oja, _) | (_, Horizon::Never) => None,
                (_, Horizon::Steps(n)) => Some(overshoot_formula(&rule, capacity as f64, n)?),
            };
            rows.push(TableRow {
                rule: kind.name(),
                set,
                ki: Some(rule.ki()),
                kd: Some(rule.kd()),
                analytic,
                simulated,
            });
        }
    }
    for set in ParamSet::ALL {
        rows.push(TableRow {
            rule: "opt",
            set,
            ki: None,
            kd: None,
            analytic: Some(0.0),
            simulated: OvershootResult::OPTIMAL,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rule(kind: RuleKind, ki: f64, kd: f64) -> UpdateRule {
        UpdateRule::new(kind, ki, kd).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(overshoot_aimd(1000.0, 1.0, 0.5, 250), Ok(0.0));
        assert_eq!(overshoot_aimd(1000.0, 100.0, 0.5, 3), Ok(100.0));
        assert_abs_diff_eq!(overshoot_aimd(1000.0, 1.0, 1.0 - 1e-9, 0).unwrap(), 0.0, epsilon = 1e-5);
        assert_eq!(overshoot_aisd(1000.0, 1.0, 5.0, 5), Ok(0.0));
        assert_eq!(overshoot_aisd(1000.0, 1.0, 100.0, 100), Ok(0.0));
        assert_eq!(overshoot_aisd(50.0, 3.0, 2.0, 7), overshoot_aisd(1000.0, 3.0, 2.0, 7));
        assert_abs_diff_eq!(overshoot_mimd(1000.0, 1.1, 0.5, 8).unwrap(), 71.794_405, epsilon = 1e-6);
        assert_abs_diff_eq!(overshoot_mimd(1000.0, 1.5, 0.5, 2).unwrap(), 125.0, epsilon = 1e-9);
        assert_eq!(overshoot_mimd(1000.0, 2.0, 0.25, 2), Ok(0.0));
        assert_abs_diff_eq!(overshoot_misd(1000.0, 1.1, 5.0, 1).unwrap(), 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(overshoot_misd(1000.0, 1.5, 5.0, 1).unwrap(), 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(overshoot_misd(1000.0, 1.0 + 1e-12, 5.0, 1).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn closed_forms_reject_bad_parameters() {
        assert!(matches!(overshoot_aimd(1000.0, 1.0, 1.5, 3), Err(AnalysisError::Rule(_))));
        assert!(matches!(overshoot_mimd(1000.0, 0.9, 0.5, 3), Err(AnalysisError::Rule(_))));
        assert_eq!(
            overshoot_formula(&UpdateRule::unparameterised(RuleKind::MaxSend), 10.0, 1),
            Err(AnalysisError::NoClosedForm(RuleKind::MaxSend))
        );
    }

    #[test]
    fn exact_forms_reduce_to_published_expressions() {
        // MIMD: kd ki^n (C + 1) - C; MISD: ki^n (C - 2 kd + 1) - C.
        let mimd = rule(RuleKind::Mimd, 1.1, 0.1);
        let expect = 0.1 * 1.1f64.powi(25) * 1001.0 - 1000.0;
        assert_abs_diff_eq!(exact_overshoot(&mimd, 1000.0, 25, false).unwrap(), expect, epsilon = 1e-9);
        let misd = rule(RuleKind::Misd, 1.1, 5.0);
        assert_abs_diff_eq!(exact_overshoot(&misd, 1000.0, 1, false).unwrap(), 1.1 * 991.0 - 1000.0, epsilon = 1e-9);
        // With the floor, AISD becomes 2 n ki - kd + 1.
        let aisd = rule(RuleKind::Aisd, 1.0, 100.0);
        assert_abs_diff_eq!(exact_overshoot(&aisd, 1000.0, 50, true).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_overshoot(&aisd, 1000.0, 50, false).unwrap(), -99.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_hand_traces() {
        // (1000, 1) -> (500, 1); +1 each per step: 501 + 2n > 1000 at n = 250.
        let r = two_flow_oracle(&rule(RuleKind::Aimd, 1.0, 0.5), 1000, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: 1.0, horizon: Horizon::Steps(250) });
        // (50, 1) -> (25, 1); 26 + 2n > 50 at n = 13.
        let r = two_flow_oracle(&rule(RuleKind::Aimd, 1.0, 0.5), 50, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: 2.0, horizon: Horizon::Steps(13) });
        // (1000, 1) -> (995, 1); 996 + 2n > 1000 at n = 3.
        let r = two_flow_oracle(&rule(RuleKind::Aisd, 1.0, 5.0), 1000, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: 2.0, horizon: Horizon::Steps(3) });
        // 995 * 1.1 = 1094.5 -> 1095, second flow stuck at 1.
        let r = two_flow_oracle(&rule(RuleKind::Misd, 1.1, 5.0), 1000, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: 96.0, horizon: Horizon::Steps(1) });
        // 500 -> 550 -> 605 -> 666 -> 733 -> 806 -> 887 -> 976 -> 1074.
        let r = two_flow_oracle(&rule(RuleKind::Mimd, 1.1, 0.5), 1000, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: 75.0, horizon: Horizon::Steps(8) });
    }

    #[test]
    fn oracle_oja_settles_below_capacity() {
        // LTD from (1000, 1) at demand 1001 gives (990, 1); the decay term then
        // cancels the increase for both flows.
        let r = two_flow_oracle(&ParamSet::Balanced.rule(RuleKind::Oja), 1000, 10_000).unwrap();
        assert_eq!(r, OvershootResult { overshoot: -9.0, horizon: Horizon::Never });
        for set in ParamSet::ALL {
            let r = two_flow_oracle(&set.rule(RuleKind::Oja), 1000, 10_000).unwrap();
            assert!(r.overshoot < 0.0 && r.horizon == Horizon::Never, "{set:?}: {r:?}");
        }
    }

    #[test]
    fn oracle_extremes() {
        let bb = UpdateRule::unparameterised(RuleKind::BangBang);
        assert_eq!(
            two_flow_oracle(&bb, 100, 10).unwrap(),
            OvershootResult { overshoot: 100.0, horizon: Horizon::Steps(1) }
        );
        let ms = UpdateRule::unparameterised(RuleKind::MaxSend);
        assert_eq!(
            two_flow_oracle(&ms, 100, 10).unwrap(),
            OvershootResult { overshoot: 100.0, horizon: Horizon::Steps(0) }
        );
        assert_eq!(two_flow_oracle(&bb, 1, 10), Err(AnalysisError::Capacity(1)));
        // Runs out of steps before re-congesting.
        let r = two_flow_oracle(&rule(RuleKind::Aimd, 1.0, 0.5), 1000, 10).unwrap();
        assert_eq!(r, OvershootResult { overshoot: -479.0, horizon: Horizon::Never });
    }

    #[test]
    fn table_shape() {
        let rows = overshoot_table(1000, 100_000).unwrap();
        assert_eq!(rows.len(), 18);
        let opt: Vec<_> = rows.iter().filter(|r| r.rule == "opt").collect();
        assert_eq!(opt.len(), 3);
        assert!(opt.iter().all(|r| r.simulated == OvershootResult::OPTIMAL));
        let oja = rows.iter().find(|r| r.rule == "oja").unwrap();
        assert_eq!(oja.analytic, None);
    }

    #[test]
    fn reference_horizons() {
        assert_eq!(ParamSet::Balanced.reference_horizon(RuleKind::Aimd), Some(250));
        assert_eq!(ParamSet::AggressiveDecrease.reference_horizon(RuleKind::Mimd), Some(25));
        assert_eq!(ParamSet::Balanced.reference_horizon(RuleKind::Oja), None);
        assert_eq!(ParamSet::AggressiveIncrease.params(RuleKind::Misd), Some((1.5, 5.0)));
        assert_eq!(ParamSet::AggressiveDecrease.params(RuleKind::Aimd), Some((1.0, 0.1)));
    }
}
