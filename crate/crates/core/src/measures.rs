//! Potential-outcome risks and the standard effect measures.
//!
//! `rr_minus` is the usual risk ratio on the event, `rr_plus` the risk ratio
//! on the complement of the event ("counting the living").

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Quantity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("arm total must be positive")]
    EmptyArm,
    #[error("arm has {events} events out of {total}")]
    TooManyEvents { events: u64, total: u64 },
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64, MeasureError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(MeasureError::NotAProbability { name, value })
    }
}

/// Counterfactual risks of one population: `p0 = Pr(Y^{a=0}=1)`,
/// `p1 = Pr(Y^{a=1}=1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskPair {
    pub p0: f64,
    pub p1: f64,
}

impl RiskPair {
    pub fn new(p0: f64, p1: f64) -> Result<Self, MeasureError> {
        Ok(Self {
            p0: check_probability("p0", p0)?,
            p1: check_probability("p1", p1)?,
        })
    }

    /// Swaps the roles of event and non-event.
    pub fn recode_outcome(self) -> Self {
        Self {
            p0: 1.0 - self.p0,
            p1: 1.0 - self.p1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub rd: f64,
    pub rr_minus: Quantity,
    pub rr_plus: Quantity,
    pub odds_ratio: Quantity,
}

/// Computes RD, RR(−), RR(+) and the odds ratio.
///
/// Ratios with a zero denominator are reported as [`Quantity::Undefined`].
/// The odds ratio is undefined whenever either risk sits on the boundary
/// `{0, 1}`.
pub fn measures_from_risks(r: RiskPair) -> EffectSummary {
    let RiskPair { p0, p1 } = r;
    let boundary = |p: f64| p == 0.0 || p == 1.0;
    let odds_ratio = if boundary(p0) || boundary(p1) {
        Quantity::Undefined
    } else {
        Quantity::Value((p1 * (1.0 - p0)) / (p0 * (1.0 - p1)))
    };
    EffectSummary {
        rd: p1 - p0,
        rr_minus: Quantity::ratio(p1, p0),
        rr_plus: Quantity::ratio(1.0 - p1, 1.0 - p0),
        odds_ratio,
    }
}

/// Event counts in one arm of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    pub events: u64,
    pub total: u64,
}

impl ArmCounts {
    pub fn new(events: u64, total: u64) -> Result<Self, MeasureError> {
        if total == 0 {
            return Err(MeasureError::EmptyArm);
        }
        if events > total {
            return Err(MeasureError::TooManyEvents { events, total });
        }
        Ok(Self { events, total })
    }

    pub fn risk(&self) -> Result<f64, MeasureError> {
        Self::new(self.events, self.total).map(|c| c.events as f64 / c.total as f64)
    }
}

/// Point estimates of the counterfactual risks from a randomized trial.
pub fn risks_from_counts(treated: ArmCounts, control: ArmCounts) -> Result<RiskPair, MeasureError> {
    Ok(RiskPair {
        p0: control.risk()?,
        p1: treated.risk()?,
    })
}
