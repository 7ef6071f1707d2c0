//! Response-type distributions and COST parameters.
//!
//! | type         | Y^{a=0} | Y^{a=1} |
//! |--------------|---------|---------|
//! | doomed       | 1       | 1       |
//! | causal       | 0       | 1       |
//! | preventative | 1       | 0       |
//! | immune       | 0       | 0       |
//!
//! `G = Pr(Y^{a=1}=1 | Y^{a=0}=1)`, `H = Pr(Y^{a=1}=0 | Y^{a=0}=0)`,
//! `I = Pr(Y^{a=0}=1 | Y^{a=1}=1)`, `J = Pr(Y^{a=0}=0 | Y^{a=1}=0)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{check_probability, MeasureError};
use crate::transport::Parameter;
use crate::{Quantity, RiskPair, TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("response-type probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("response-type probabilities are all zero")]
    Empty,
    #[error("stratum prevalences sum to {0}, not 1")]
    PrevalenceNotNormalized(f64),
    #[error("no strata given")]
    NoStrata,
    #[error("weighted average for {parameter:?} differs from the marginal by {discrepancy:e}")]
    CollapseMismatch { parameter: Parameter, discrepancy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseTypeDistribution {
    pub doomed: f64,
    pub causal: f64,
    pub preventative: f64,
    pub immune: f64,
}

impl ResponseTypeDistribution {
    /// Validates each probability and that they sum to one within
    /// [`TOLERANCE`].
    pub fn new(doomed: f64, causal: f64, preventative: f64, immune: f64) -> Result<Self, CostError> {
        let d = Self {
            doomed: check_probability("doomed", doomed)?,
            causal: check_probability("causal", causal)?,
            preventative: check_probability("preventative", preventative)?,
            immune: check_probability("immune", immune)?,
        };
        let total = d.total();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(CostError::NotNormalized(total));
        }
        Ok(d)
    }

    /// Accepts nonnegative weights that only approximately sum to one and
    /// rescales them. Used on ingest of rounded user input.
    pub fn renormalized(doomed: f64, causal: f64, preventative: f64, immune: f64) -> Result<Self, CostError> {
        for (name, v) in [
            ("doomed", doomed),
            ("causal", causal),
            ("preventative", preventative),
            ("immune", immune),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MeasureError::NotAProbability { name, value: v }.into());
            }
        }
        let total = doomed + causal + preventative + immune;
        if total == 0.0 {
            return Err(CostError::Empty);
        }
        Ok(Self {
            doomed: doomed / total,
            causal: causal / total,
            preventative: preventative / total,
            immune: immune / total,
        })
    }

    fn total(&self) -> f64 {
        self.doomed + self.causal + self.preventative + self.immune
    }

    pub fn risks(&self) -> RiskPair {
        risks_from_distribution(*self)
    }
}

/// COST parameters for introducing treatment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostIntroduce {
    pub g: Quantity,
    pub h: Quantity,
}

impl CostIntroduce {
    pub fn new(g: f64, h: f64) -> Result<Self, MeasureError> {
        Ok(Self {
            g: Quantity::Value(check_probability("g", g)?),
            h: Quantity::Value(check_probability("h", h)?),
        })
    }
}

/// COST parameters for removing treatment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRemove {
    pub i: Quantity,
    pub j: Quantity,
}

impl CostRemove {
    pub fn new(i: f64, j: f64) -> Result<Self, MeasureError> {
        Ok(Self {
            i: Quantity::Value(check_probability("i", i)?),
            j: Quantity::Value(check_probability("j", j)?),
        })
    }
}

pub fn risks_from_distribution(d: ResponseTypeDistribution) -> RiskPair {
    RiskPair {
        p0: d.doomed + d.preventative,
        p1: d.doomed + d.causal,
    }
}

pub fn cost_introduce(d: ResponseTypeDistribution) -> CostIntroduce {
    CostIntroduce {
        g: Quantity::ratio(d.doomed, d.doomed + d.preventative),
        h: Quantity::ratio(d.immune, d.immune + d.causal),
    }
}

pub fn cost_remove(d: ResponseTypeDistribution) -> CostRemove {
    CostRemove {
        i: Quantity::ratio(d.doomed, d.doomed + d.causal),
        j: Quantity::ratio(d.immune, d.immune + d.preventative),
    }
}

/// Reverses the coding of the outcome: doomed ↔ immune, causal ↔ preventative.
pub fn recode_outcome(d: ResponseTypeDistribution) -> ResponseTypeDistribution {
    ResponseTypeDistribution {
        doomed: d.immune,
        causal: d.preventative,
        preventative: d.causal,
        immune: d.doomed,
    }
}

/// Reverses the coding of the exposure: causal ↔ preventative.
pub fn recode_exposure(d: ResponseTypeDistribution) -> ResponseTypeDistribution {
    ResponseTypeDistribution {
        causal: d.preventative,
        preventative: d.causal,
        ..d
    }
}

/// Level `label` of a baseline covariate with its own response-type mix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsibilityStratum {
    pub label: String,
    pub dist: ResponseTypeDistribution,
    pub prevalence: f64,
}

/// Collapsibility weights of one stratum, `Pr(V=v | conditioning event)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumWeights {
    pub label: String,
    pub g: Quantity,
    pub h: Quantity,
    pub i: Quantity,
    pub j: Quantity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub pooled: ResponseTypeDistribution,
    /// Marginal parameters computed from the pooled mixture.
    pub introduce: CostIntroduce,
    pub remove: CostRemove,
    /// The same parameters as weighted averages of stratum values.
    pub weighted_introduce: CostIntroduce,
    pub weighted_remove: CostRemove,
    pub weights: Vec<StratumWeights>,
    /// Parameters whose marginal conditioning event has probability zero.
    pub uncollapsible: Vec<Parameter>,
    pub max_discrepancy: f64,
}

/// Marginal G, H, I, J two ways: from the pooled mixture and as the weighted
/// average of stratum parameters with weights `Pr(V=v | Y^{a=0}=1)` (G),
/// `Pr(V=v | Y^{a=0}=0)` (H), `Pr(V=v | Y^{a=1}=1)` (I) and
/// `Pr(V=v | Y^{a=1}=0)` (J). Fails if the two disagree by more than
/// [`TOLERANCE`].
pub fn collapse_cost(strata: &[CollapsibilityStratum]) -> Result<CollapseReport, CostError> {
    if strata.is_empty() {
        return Err(CostError::NoStrata);
    }
    for s in strata {
        check_probability("prevalence", s.prevalence)?;
    }
    let total: f64 = strata.iter().map(|s| s.prevalence).sum();
    if (total - 1.0).abs() > TOLERANCE {
        return Err(CostError::PrevalenceNotNormalized(total));
    }

    let mix = |f: fn(&ResponseTypeDistribution) -> f64| -> f64 {
        strata.iter().map(|s| s.prevalence * f(&s.dist)).sum()
    };
    let pooled = ResponseTypeDistribution {
        doomed: mix(|d| d.doomed),
        causal: mix(|d| d.causal),
        preventative: mix(|d| d.preventative),
        immune: mix(|d| d.immune),
    };
    let introduce = cost_introduce(pooled);
    let remove = cost_remove(pooled);

    // Mass of each conditioning event, per stratum.
    let events: [fn(&ResponseTypeDistribution) -> f64; 4] = [
        |d| d.doomed + d.preventative,
        |d| d.immune + d.causal,
        |d| d.doomed + d.causal,
        |d| d.immune + d.preventative,
    ];
    let stratum_param = |k: usize, d: ResponseTypeDistribution| -> Quantity {
        let (ci, cr) = (cost_introduce(d), cost_remove(d));
        [ci.g, ci.h, cr.i, cr.j][k]
    };

    let mut weights: Vec<StratumWeights> = strata
        .iter()
        .map(|s| StratumWeights {
            label: s.label.clone(),
            g: Quantity::Undefined,
            h: Quantity::Undefined,
            i: Quantity::Undefined,
            j: Quantity::Undefined,
        })
        .collect();
    let mut weighted = [Quantity::Undefined; 4];
    let mut uncollapsible = Vec::new();
    for (k, event) in events.iter().enumerate() {
        let marginal_mass: f64 = strata.iter().map(|s| s.prevalence * event(&s.dist)).sum();
        if marginal_mass == 0.0 {
            uncollapsible.push(Parameter::ALL[k]);
            continue;
        }
        let mut acc = 0.0;
        for (s, w) in strata.iter().zip(weights.iter_mut()) {
            let weight = s.prevalence * event(&s.dist) / marginal_mass;
            let slot = match k {
                0 => &mut w.g,
                1 => &mut w.h,
                2 => &mut w.i,
                _ => &mut w.j,
            };
            *slot = Quantity::Value(weight);
            // A stratum whose conditioning event is empty carries zero weight.
            if let Quantity::Value(p) = stratum_param(k, s.dist) {
                acc += weight * p;
            }
        }
        weighted[k] = Quantity::Value(acc);
    }

    let marginal = [introduce.g, introduce.h, remove.i, remove.j];
    let mut max_discrepancy: f64 = 0.0;
    for k in 0..4 {
        if let (Quantity::Value(a), Quantity::Value(b)) = (marginal[k], weighted[k]) {
            let diff = (a - b).abs();
            if diff > TOLERANCE {
                return Err(CostError::CollapseMismatch {
                    parameter: Parameter::ALL[k],
                    discrepancy: diff,
                });
            }
            max_discrepancy = max_discrepancy.max(diff);
        }
    }

    Ok(CollapseReport {
        pooled,
        introduce,
        remove,
        weighted_introduce: CostIntroduce {
            g: weighted[0],
            h: weighted[1],
        },
        weighted_remove: CostRemove {
            i: weighted[2],
            j: weighted[3],
        },
        weights,
        uncollapsible,
        max_discrepancy,
    })
}
