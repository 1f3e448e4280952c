//! Weight-update rules and the LTP/LTD decision.
//!
//! An edge potentiates (LTP) when it is jammed itself or when everything it
//! forwarded went onto clear downstream edges; it depresses (LTD) when it fed
//! a jammed downstream edge. The rule decides by how much.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Aimd,
    Aisd,
    Mimd,
    Misd,
    Oja,
    BangBang,
    MaxSend,
}

impl RuleKind {
    pub const ALL: [RuleKind; 7] = [
        RuleKind::Aimd,
        RuleKind::Aisd,
        RuleKind::Mimd,
        RuleKind::Misd,
        RuleKind::Oja,
        RuleKind::BangBang,
        RuleKind::MaxSend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Aimd => "aimd",
            RuleKind::Aisd => "aisd",
            RuleKind::Mimd => "mimd",
            RuleKind::Misd => "misd",
            RuleKind::Oja => "oja",
            RuleKind::BangBang => "bangbang",
            RuleKind::MaxSend => "maxsend",
        }
    }

    pub fn additive_increase(self) -> bool {
        matches!(self, RuleKind::Aimd | RuleKind::Aisd)
    }

    pub fn multiplicative_increase(self) -> bool {
        matches!(self, RuleKind::Mimd | RuleKind::Misd)
    }

    pub fn subtractive_decrease(self) -> bool {
        matches!(self, RuleKind::Aisd | RuleKind::Misd)
    }

    pub fn multiplicative_decrease(self) -> bool {
        matches!(self, RuleKind::Aimd | RuleKind::Mimd)
    }

    /// Whether `ki`/`kd` mean anything for this rule.
    pub fn parameterised(self) -> bool {
        !matches!(self, RuleKind::BangBang | RuleKind::MaxSend)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RuleError::UnknownRule(s.trim().to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RuleError {
    #[error("unknown rule {0:?} (expected aimd|aisd|mimd|misd|oja|bangbang|maxsend)")]
    UnknownRule(String),
    #[error("{rule}: {param} = {value} outside {range}")]
    OutOfRange { rule: RuleKind, param: &'static str, value: f64, range: &'static str },
    #[error("inconsistent feedback: an edge cannot both feed a jam and see all downstream edges clear")]
    InconsistentFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlasticityAction {
    Ltp,
    Ltd,
    None,
}

/// Rule kind with validated increase (`ki`) and decrease (`kd`) parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRule {
    kind: RuleKind,
    ki: f64,
    kd: f64,
}

impl UpdateRule {
    pub fn new(kind: RuleKind, ki: f64, kd: f64) -> Result<Self, RuleError> {
        let out = |param, value, range| Err(RuleError::OutOfRange { rule: kind, param, value, range });
        if kind.additive_increase() || kind == RuleKind::Oja {
            if !(ki > 0.0 && ki.is_finite()) {
                return out("ki", ki, "(0, inf)");
            }
        } else if kind.multiplicative_increase() && !(ki > 1.0 && ki.is_finite()) {
            return out("ki", ki, "(1, inf)");
        }
        if kind.subtractive_decrease() || kind == RuleKind::Oja {
            if !(kd > 0.0 && kd.is_finite()) {
                return out("kd", kd, "(0, inf)");
            }
        } else if kind.multiplicative_decrease() && !(kd > 0.0 && kd < 1.0) {
            return out("kd", kd, "(0, 1)");
        }
        Ok(Self { kind, ki, kd })
    }

    /// Bang-bang or max-send; the parameters are ignored.
    pub fn unparameterised(kind: RuleKind) -> Self {
        debug_assert!(!kind.parameterised());
        Self { kind, ki: 0.0, kd: 0.0 }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn ki(&self) -> f64 {
        self.ki
    }

    pub fn kd(&self) -> f64 {
        self.kd
    }

    /// Unrounded, unclamped result of one update.
    pub fn raw_update(&self, action: PlasticityAction, weight: u32, demand: u64, capacity: u32) -> f64 {
        let w = weight as f64;
        let c = capacity as f64;
        match (self.kind, action) {
            (_, PlasticityAction::None) => w,
            (RuleKind::MaxSend, _) => c,
            (RuleKind::BangBang, PlasticityAction::Ltp) => c,
            (RuleKind::BangBang, PlasticityAction::Ltd) => 1.0,
            (RuleKind::Oja, action) => {
                let d = demand as f64;
                let decay = d * d / (w * c);
                match action {
                    PlasticityAction::Ltp => w + self.ki * (1.0 - decay),
                    _ => w - self.kd * (1.0 + decay),
                }
            }
            (kind, PlasticityAction::Ltp) if kind.additive_increase() => w + self.ki,
            (_, PlasticityAction::Ltp) => w * self.ki,
            (kind, PlasticityAction::Ltd) if kind.subtractive_decrease() => w - self.kd,
            (_, PlasticityAction::Ltd) => w * self.kd,
        }
    }

    /// New weight after `action`: the raw update rounded half away from zero,
    /// then clamped to `[1, capacity]`. `demand` is only read by Oja.
    pub fn apply(&self, action: PlasticityAction, weight: u32, demand: u64, capacity: u32) -> u32 {
        debug_assert!(weight >= 1 && weight <= capacity);
        let raw = self.raw_update(action, weight, demand, capacity).round();
        raw.clamp(1.0, capacity as f64) as u32
    }
}

/// Algorithm for picking LTP, LTD or nothing for one edge in one step.
///
/// Self-jam wins outright. Otherwise feeding a jammed downstream edge means
/// LTD, and only when every downstream edge that received data was clear does
/// a carrying edge potentiate.
pub fn decide_action(
    jam_on_self: bool,
    contributed_to_downstream_jam: bool,
    all_downstream_clear: bool,
    carried_data: bool,
) -> Result<PlasticityAction, RuleError> {
    if contributed_to_downstream_jam && all_downstream_clear {
        return Err(RuleError::InconsistentFlags);
    }
    Ok(if jam_on_self {
        PlasticityAction::Ltp
    } else if contributed_to_downstream_jam {
        PlasticityAction::Ltd
    } else if all_downstream_clear && carried_data {
        PlasticityAction::Ltp
    } else {
        PlasticityAction::None
    })
}
