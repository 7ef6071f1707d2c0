//! Identification of COST parameters under monotonicity, prediction of the
//! treated risk in a target population, and the bias of risk-ratio transport
//! when monotonicity does not hold.

use num_bigint::{BigInt, Sign};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{check_probability, measures_from_risks, MeasureError};
use crate::{CostIntroduce, CostRemove, Quantity, RiskPair, TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("{0:?} is undefined because its conditioning event has probability zero")]
    Undefined(Parameter),
    #[error("risks p0 = {p0}, p1 = {p1} contradict the asserted {assumption:?} monotonicity")]
    ContradictsMonotonicity {
        p0: f64,
        p1: f64,
        assumption: MonotonicityAssumption,
    },
    #[error("a monotonicity direction is required; supply explicit parameters otherwise")]
    NoAssumption,
    #[error("study baseline risk must be positive")]
    ZeroStudyBaseline,
    #[error("ratio of baseline risks must be positive and finite, got {0}")]
    BadRatio(f64),
    #[error("target baseline {target} = f * s0 exceeds 1 for f = {f}")]
    TargetOutOfRange { f: f64, target: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    G,
    H,
    I,
    J,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::G, Parameter::H, Parameter::I, Parameter::J];
}

/// User-asserted direction of the individual-level effect. Never inferred
/// from data; data are only checked for contradiction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityAssumption {
    /// Nobody is harmed: no causal type, `H = 1`.
    NonIncreasing,
    /// Nobody is protected: no preventative type, `G = 1`.
    NonDecreasing,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub predicted_risk: f64,
    pub parameters_used: Vec<Parameter>,
    pub assumption: MonotonicityAssumption,
    /// `g * t0 - (1 - h) * (1 - t0)` (introduce) or its mirror (remove).
    pub near_monotonicity_margin: f64,
    /// `g * t0 / ((1 - h) * (1 - t0))`; `None` when the denominator is zero.
    pub near_monotonicity_ratio: Option<f64>,
}

fn reject_if(cond: bool, r: RiskPair, assumption: MonotonicityAssumption) -> Result<(), TransportError> {
    if cond {
        Err(TransportError::ContradictsMonotonicity {
            p0: r.p0,
            p1: r.p1,
            assumption,
        })
    } else {
        Ok(())
    }
}

fn checked(r: RiskPair) -> Result<RiskPair, TransportError> {
    Ok(RiskPair::new(r.p0, r.p1)?)
}

/// Under non-increasing monotonicity `G = RR(−) = p1 / p0`.
pub fn identify_g_under_decrease(r: RiskPair) -> Result<f64, TransportError> {
    let r = checked(r)?;
    if r.p0 == 0.0 {
        return Err(TransportError::Undefined(Parameter::G));
    }
    reject_if(r.p1 > r.p0, r, MonotonicityAssumption::NonIncreasing)?;
    Ok(r.p1 / r.p0)
}

/// Under non-decreasing monotonicity `H = RR(+) = (1 - p1) / (1 - p0)`.
pub fn identify_h_under_increase(r: RiskPair) -> Result<f64, TransportError> {
    let r = checked(r)?;
    if r.p0 == 1.0 {
        return Err(TransportError::Undefined(Parameter::H));
    }
    reject_if(r.p1 < r.p0, r, MonotonicityAssumption::NonDecreasing)?;
    Ok((1.0 - r.p1) / (1.0 - r.p0))
}

/// Under non-decreasing monotonicity `I = 1 / RR(−) = p0 / p1`.
pub fn identify_i_under_increase(r: RiskPair) -> Result<f64, TransportError> {
    let r = checked(r)?;
    if r.p1 == 0.0 {
        return Err(TransportError::Undefined(Parameter::I));
    }
    reject_if(r.p1 < r.p0, r, MonotonicityAssumption::NonDecreasing)?;
    Ok(r.p0 / r.p1)
}

/// Under non-increasing monotonicity `J = 1 / RR(+) = (1 - p0) / (1 - p1)`.
pub fn identify_j_under_decrease(r: RiskPair) -> Result<f64, TransportError> {
    let r = checked(r)?;
    if r.p1 == 1.0 {
        return Err(TransportError::Undefined(Parameter::J));
    }
    reject_if(r.p1 > r.p0, r, MonotonicityAssumption::NonIncreasing)?;
    Ok((1.0 - r.p0) / (1.0 - r.p1))
}

fn defined(q: Quantity, p: Parameter) -> Result<f64, TransportError> {
    let v = q.value().ok_or(TransportError::Undefined(p))?;
    let name = match p {
        Parameter::G => "g",
        Parameter::H => "h",
        Parameter::I => "i",
        Parameter::J => "j",
    };
    Ok(check_probability(name, v)?)
}

/// Shared arithmetic of both directions: `base * stay + (1 - base) * (1 - keep)`.
fn weighted_prediction(
    stay: f64,
    keep: f64,
    base: f64,
    params: (Parameter, Parameter),
) -> TransportResult {
    let predicted_risk = base * stay + (1.0 - base) * (1.0 - keep);
    let (assumption, parameters_used) = if keep == 1.0 {
        (MonotonicityAssumption::NonIncreasing, vec![params.0])
    } else if stay == 1.0 {
        (MonotonicityAssumption::NonDecreasing, vec![params.1])
    } else {
        (MonotonicityAssumption::None, vec![params.0, params.1])
    };
    let leak = (1.0 - keep) * (1.0 - base);
    let main = stay * base;
    TransportResult {
        predicted_risk,
        parameters_used,
        assumption,
        near_monotonicity_margin: main - leak,
        near_monotonicity_ratio: (leak > 0.0).then(|| main / leak),
    }
}

/// Treated risk of a target population with baseline risk `t0`:
/// `t0 * g + (1 - t0) * (1 - h)`, a weighted average of `g` and `1 - h`.
pub fn predict_introduce(params: CostIntroduce, t0: f64) -> Result<TransportResult, TransportError> {
    let g = defined(params.g, Parameter::G)?;
    let h = defined(params.h, Parameter::H)?;
    let t0 = check_probability("t0", t0)?;
    Ok(weighted_prediction(g, h, t0, (Parameter::G, Parameter::H)))
}

/// Untreated risk of a fully treated target population with treated risk
/// `t1`: `t1 * i + (1 - t1) * (1 - j)`.
pub fn predict_remove(params: CostRemove, t1: f64) -> Result<TransportResult, TransportError> {
    let i = defined(params.i, Parameter::I)?;
    let j = defined(params.j, Parameter::J)?;
    let t1 = check_probability("t1", t1)?;
    let mut res = weighted_prediction(i, j, t1, (Parameter::I, Parameter::J));
    // For removal, `j = 1` means nobody is protected by treatment, i.e. the
    // effect of treatment is non-decreasing.
    res.assumption = match res.assumption {
        MonotonicityAssumption::NonIncreasing => MonotonicityAssumption::NonDecreasing,
        MonotonicityAssumption::NonDecreasing => MonotonicityAssumption::NonIncreasing,
        MonotonicityAssumption::None => MonotonicityAssumption::None,
    };
    Ok(res)
}

/// Transports the treated risk to a target population with baseline `t0`
/// through the risk ratio matching the asserted monotonicity: RR(−) when
/// treatment is non-increasing, RR(+) when non-decreasing.
pub fn transport_rr(
    source: RiskPair,
    t0: f64,
    assumption: MonotonicityAssumption,
) -> Result<TransportResult, TransportError> {
    let params = match assumption {
        MonotonicityAssumption::NonIncreasing => {
            CostIntroduce::new(identify_g_under_decrease(source)?, 1.0)?
        }
        MonotonicityAssumption::NonDecreasing => {
            CostIntroduce::new(1.0, identify_h_under_increase(source)?)?
        }
        MonotonicityAssumption::None => return Err(TransportError::NoAssumption),
    };
    let mut res = predict_introduce(params, t0)?;
    res.assumption = assumption;
    res.parameters_used = match assumption {
        MonotonicityAssumption::NonIncreasing => vec![Parameter::G],
        _ => vec![Parameter::H],
    };
    Ok(res)
}

/// One column of the side-by-side comparison of transport rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Prediction clamped into `[0, 1]`; undefined if the measure is.
    pub value: Quantity,
    /// Prediction before clamping.
    pub raw: Quantity,
    pub clamped: bool,
}

impl Prediction {
    fn from_raw(raw: Quantity) -> Self {
        match raw {
            Quantity::Value(x) => {
                let c = x.clamp(0.0, 1.0);
                Prediction {
                    value: Quantity::Value(c),
                    raw,
                    clamped: c != x,
                }
            }
            Quantity::Undefined => Prediction {
                value: raw,
                raw,
                clamped: false,
            },
        }
    }
}

/// Predictions of the target's treated risk under each homogeneity rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rr_minus: Prediction,
    pub rr_plus: Prediction,
    pub rd: Prediction,
    pub odds_ratio: Prediction,
    /// COST prediction; present when a monotonicity direction or explicit
    /// parameters were supplied.
    pub cost: Option<TransportResult>,
}

/// Assumes in turn that RR(−), RR(+), RD and OR are shared between the
/// populations, and (optionally) that the COST parameters are shared.
/// Out-of-range predictions are clamped and flagged.
pub fn compare_measures(
    source: RiskPair,
    t0: f64,
    cost: Option<CostIntroduce>,
    assumption: MonotonicityAssumption,
) -> Result<Comparison, TransportError> {
    let source = checked(source)?;
    let t0 = check_probability("t0", t0)?;
    let m = measures_from_risks(source);
    let rr_minus = m.rr_minus.map(|rr| t0 * rr);
    let rr_plus = m.rr_plus.map(|rr| 1.0 - (1.0 - t0) * rr);
    let rd = Quantity::Value(t0 + m.rd);
    let odds_ratio = match m.odds_ratio {
        Quantity::Value(or) if t0 < 1.0 => {
            let odds = t0 / (1.0 - t0) * or;
            Quantity::Value(odds / (1.0 + odds))
        }
        Quantity::Value(_) => Quantity::Value(1.0),
        Quantity::Undefined => Quantity::Undefined,
    };
    let cost = match (cost, assumption) {
        (Some(params), _) => Some(predict_introduce(params, t0)?),
        (None, MonotonicityAssumption::None) => None,
        (None, a) => Some(transport_rr(source, t0, a)?),
    };
    Ok(Comparison {
        rr_minus: Prediction::from_raw(rr_minus),
        rr_plus: Prediction::from_raw(rr_plus),
        rd: Prediction::from_raw(rd),
        odds_ratio: Prediction::from_raw(odds_ratio),
        cost,
    })
}

/// Direction of the error made by transporting RR(−) when the COST
/// parameters are shared but the effect is not monotone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasDirection {
    /// The naive prediction exceeds the true risk (target baseline higher).
    Over,
    /// The naive prediction falls short (target baseline lower).
    Under,
    Unbiased,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub g: f64,
    pub h: f64,
    pub s0: f64,
    pub t0: f64,
    /// Ratio of baseline risks `t0 / s0`.
    pub f: f64,
    pub study_risk: f64,
    pub study_rr: f64,
    pub target_rr: Quantity,
    /// `t0 * RR(−)_s`.
    pub naive_prediction: f64,
    /// `t0 * g + (1 - t0) * (1 - h)`.
    pub true_risk: f64,
    /// `naive_prediction - true_risk`.
    pub bias: f64,
    /// `(f - 1) * (1 - h)`.
    pub closed_form_bias: f64,
    pub direction: BiasDirection,
}

/// Error of predicting the target treated risk as `t0 * RR(−)_s` when both
/// populations share `(g, h)`.
///
/// Inputs are converted exactly to scaled integers and every reported value
/// is rounded once, so a large naive prediction (tiny `s0`) does not swamp the
/// bias with cancellation error.
pub fn bias_under_nonmonotonicity(g: f64, h: f64, s0: f64, t0: f64) -> Result<BiasReport, TransportError> {
    let g = check_probability("g", g)?;
    let h = check_probability("h", h)?;
    let s0 = check_probability("s0", s0)?;
    let t0 = check_probability("t0", t0)?;
    if s0 == 0.0 {
        return Err(TransportError::ZeroStudyBaseline);
    }
    // Every f64 is m * 2^e; scale all four by a common 2^k to get integers.
    let k = [g, h, s0, t0].iter().map(|&x| -dyadic(x).1).max().unwrap_or(0).max(0);
    let int = |x: f64| {
        let (m, e) = dyadic(x);
        BigInt::from(m) << (e + k) as usize
    };
    let (gi, hi, si, ti) = (int(g), int(h), int(s0), int(t0));
    let unit = BigInt::from(1u8) << k as usize;
    let leak = &unit - &hi;
    // Risks carry a factor 2^(2k).
    let study_risk = &si * &gi + (&unit - &si) * &leak;
    let true_risk = &ti * &gi + (&unit - &ti) * &leak;
    let unit2 = &unit * &unit;
    let closed_num = (&ti - &si) * &leak;
    let direction = match closed_num.sign() {
        Sign::Plus => BiasDirection::Over,
        Sign::Minus => BiasDirection::Under,
        Sign::NoSign => BiasDirection::Unbiased,
    };
    let ratio = |n: BigInt, d: BigInt| Ratio::new_raw(n, d).to_f64().expect("finite ratio");
    let f = ratio(ti.clone(), si.clone());
    let study_rr = ratio(study_risk.clone(), &si * &unit);
    let naive_prediction = ratio(&ti * &study_risk, &si * &unit2);
    let bias = ratio(&ti * &study_risk - &si * &true_risk, &si * &unit2);
    let closed_form_bias = ratio(closed_num, &si * &unit);
    let target_rr = if t0 == 0.0 {
        Quantity::Undefined
    } else {
        Quantity::Value(ratio(true_risk.clone(), &ti * &unit))
    };
    let study_risk = ratio(study_risk, unit2.clone());
    let true_risk = ratio(true_risk, unit2);
    Ok(BiasReport {
        g,
        h,
        s0,
        t0,
        f,
        study_risk,
        study_rr,
        target_rr,
        naive_prediction,
        true_risk,
        bias,
        closed_form_bias,
        direction,
    })
}

/// `(m, e)` with `x = m * 2^e` for finite `x >= 0`.
fn dyadic(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    match (exp, frac) {
        (0, 0) => (0, 0),
        (0, _) => (frac, -1074),
        _ => (frac | (1u64 << 52), exp - 1075),
    }
}

/// Bias over a grid of `h` and baseline ratios `f`, with the study baseline
/// fixed at `s0` so that `t0 = f * s0`. Rows are ordered by `h`, then `f`.
pub fn bias_surface(g: f64, s0: f64, h_grid: &[f64], f_grid: &[f64]) -> Result<Vec<BiasReport>, TransportError> {
    for &f in f_grid {
        if !(f > 0.0 && f.is_finite()) {
            return Err(TransportError::BadRatio(f));
        }
        if f * s0 > 1.0 {
            return Err(TransportError::TargetOutOfRange { f, target: f * s0 });
        }
    }
    let cells: Vec<(f64, f64)> = h_grid
        .iter()
        .flat_map(|&h| f_grid.iter().map(move |&f| (h, f)))
        .collect();
    cells
        .into_par_iter()
        .map(|(h, f)| bias_under_nonmonotonicity(g, h, s0, f * s0))
        .collect()
}

/// `true` when the computed bias agrees with the closed form to [`TOLERANCE`].
pub fn bias_identity_holds(r: &BiasReport) -> bool {
    (r.bias - r.closed_form_bias).abs() <= TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rp(p0: f64, p1: f64) -> RiskPair {
        RiskPair::new(p0, p1).unwrap()
    }

    #[test]
    fn g_under_decrease() {
        assert_abs_diff_eq!(identify_g_under_decrease(rp(0.10, 0.05)).unwrap(), 0.5);
        assert_eq!(identify_g_under_decrease(rp(0.3, 0.3)).unwrap(), 1.0);
        assert_abs_diff_eq!(identify_g_under_decrease(rp(0.05, 0.012)).unwrap(), 0.24, epsilon = 1e-12);
        assert_eq!(
            identify_g_under_decrease(rp(0.0, 0.0)),
            Err(TransportError::Undefined(Parameter::G))
        );
        assert!(matches!(
            identify_g_under_decrease(rp(0.02, 0.03)),
            Err(TransportError::ContradictsMonotonicity { .. })
        ));
    }

    #[test]
    fn h_under_increase() {
        assert_abs_diff_eq!(identify_h_under_increase(rp(0.02, 0.03)).unwrap(), 0.97 / 0.98);
        assert_eq!(identify_h_under_increase(rp(0.5, 0.5)).unwrap(), 1.0);
        assert_abs_diff_eq!(identify_h_under_increase(rp(0.1, 0.55)).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(
            identify_h_under_increase(rp(1.0, 1.0)),
            Err(TransportError::Undefined(Parameter::H))
        );
        assert!(identify_h_under_increase(rp(0.1, 0.05)).is_err());
    }

    #[test]
    fn i_and_j() {
        assert_abs_diff_eq!(identify_i_under_increase(rp(0.02, 0.03)).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(identify_i_under_increase(rp(0.2, 0.2)).unwrap(), 1.0);
        assert_eq!(identify_j_under_decrease(rp(0.2, 0.2)).unwrap(), 1.0);
        assert_abs_diff_eq!(identify_j_under_decrease(rp(0.10, 0.05)).unwrap(), 0.9 / 0.95, epsilon = 1e-15);
        assert_eq!(
            identify_i_under_increase(rp(0.0, 0.0)),
            Err(TransportError::Undefined(Parameter::I))
        );
        assert_eq!(
            identify_j_under_decrease(rp(1.0, 1.0)),
            Err(TransportError::Undefined(Parameter::J))
        );
        assert!(identify_i_under_increase(rp(0.3, 0.2)).is_err());
        assert!(identify_j_under_decrease(rp(0.2, 0.3)).is_err());
    }

    #[test]
    fn predict_introduce_examples() {
        let r = predict_introduce(CostIntroduce::new(1.0, 0.97 / 0.98).unwrap(), 0.10).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.109, epsilon = 5e-4);
        assert_eq!(r.assumption, MonotonicityAssumption::NonDecreasing);
        assert_eq!(r.parameters_used, vec![Parameter::H]);

        let r = predict_introduce(CostIntroduce::new(0.05, 0.99).unwrap(), 0.05).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.012, epsilon = 1e-12);
        assert_eq!(r.assumption, MonotonicityAssumption::None);
        assert_abs_diff_eq!(r.near_monotonicity_margin, 0.05 * 0.05 - 0.01 * 0.95, epsilon = 1e-15);

        for t0 in [0.0, 0.3, 1.0] {
            let r = predict_introduce(CostIntroduce::new(1.0, 1.0).unwrap(), t0).unwrap();
            assert_eq!(r.predicted_risk, t0);
        }
    }

    #[test]
    fn predict_introduce_requires_defined_parameters() {
        let p = CostIntroduce {
            g: Quantity::Undefined,
            h: Quantity::Value(1.0),
        };
        assert_eq!(predict_introduce(p, 0.2), Err(TransportError::Undefined(Parameter::G)));
    }

    #[test]
    fn no_zero_constraint() {
        // Zero baseline risk, yet treatment changes the risk when h < 1.
        let r = predict_introduce(CostIntroduce::new(0.0, 0.8).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.2, epsilon = 1e-15);
        // Nonzero baseline with g != 0 and h = 0.
        let r = predict_introduce(CostIntroduce::new(0.5, 0.0).unwrap(), 0.3).unwrap();
        assert!(r.predicted_risk != 0.3);
    }

    #[test]
    fn predict_remove_examples() {
        let r = predict_remove(CostRemove::new(1.0, 1.0).unwrap(), 0.3).unwrap();
        assert_eq!(r.predicted_risk, 0.3);
        let r = predict_remove(CostRemove::new(2.0 / 3.0, 1.0).unwrap(), 0.15).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.10, epsilon = 1e-12);
        assert_eq!(r.parameters_used, vec![Parameter::I]);
        let r = predict_remove(CostRemove::new(0.24, 1.0).unwrap(), 0.05).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.012, epsilon = 1e-12);
    }

    #[test]
    fn transport_rr_examples() {
        let src = rp(0.02, 0.03);
        let r = transport_rr(src, 0.10, MonotonicityAssumption::NonDecreasing).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.109, epsilon = 5e-4);
        let r = transport_rr(rp(0.10, 0.05), 0.30, MonotonicityAssumption::NonIncreasing).unwrap();
        assert_abs_diff_eq!(r.predicted_risk, 0.15, epsilon = 1e-12);
        assert_eq!(
            transport_rr(src, 0.1, MonotonicityAssumption::None),
            Err(TransportError::NoAssumption)
        );
        assert!(transport_rr(src, 0.1, MonotonicityAssumption::NonIncreasing).is_err());
    }

    #[test]
    fn comparison_mode_matches_table_two() {
        let c = compare_measures(rp(0.02, 0.03), 0.10, None, MonotonicityAssumption::NonDecreasing).unwrap();
        let v = |p: Prediction| p.value.value().unwrap();
        assert_abs_diff_eq!(v(c.rr_minus), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(v(c.rr_plus), 0.109, epsilon = 5e-4);
        assert_abs_diff_eq!(v(c.rd), 0.11, epsilon = 1e-12);
        assert_abs_diff_eq!(v(c.odds_ratio), 0.144, epsilon = 5e-4);
        assert_abs_diff_eq!(c.cost.unwrap().predicted_risk, v(c.rr_plus), epsilon = 1e-15);
        assert!(!c.rr_minus.clamped && !c.rd.clamped);
    }

    #[test]
    fn comparison_flags_invalid_probabilities() {
        // RR(−) = 3 applied to a 50% baseline predicts 150%.
        let c = compare_measures(rp(0.1, 0.3), 0.5, None, MonotonicityAssumption::None).unwrap();
        assert!(c.rr_minus.clamped);
        assert_eq!(c.rr_minus.value, Quantity::Value(1.0));
        assert_abs_diff_eq!(c.rr_minus.raw.value().unwrap(), 1.5, epsilon = 1e-12);
        // RD = -0.2 applied to a 5% baseline predicts -15%.
        let c = compare_measures(rp(0.3, 0.1), 0.05, None, MonotonicityAssumption::None).unwrap();
        assert!(c.rd.clamped);
        assert_eq!(c.rd.value, Quantity::Value(0.0));
        assert!(!c.odds_ratio.clamped);
        assert!(c.cost.is_none());
    }

    #[test]
    fn nonmonotone_scenario() {
        let r = bias_under_nonmonotonicity(0.05, 0.99, 0.005, 0.05).unwrap();
        assert_abs_diff_eq!(r.study_risk, 0.0102, epsilon = 1e-15);
        assert_abs_diff_eq!(r.study_rr, 2.04, epsilon = 1e-12);
        assert_abs_diff_eq!(r.naive_prediction, 0.102, epsilon = 1e-12);
        assert_abs_diff_eq!(r.true_risk, 0.012, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bias, 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(r.target_rr.value().unwrap(), 0.24, epsilon = 1e-12);
        assert_abs_diff_eq!(r.f, 10.0, epsilon = 1e-12);
        assert_eq!(r.direction, BiasDirection::Over);
    }

    #[test]
    fn no_bias_when_monotone_or_equal_baselines() {
        for (g, s0, t0) in [(0.3, 0.1, 0.4), (0.9, 0.5, 0.01)] {
            let r = bias_under_nonmonotonicity(g, 1.0, s0, t0).unwrap();
            assert_abs_diff_eq!(r.bias, 0.0, epsilon = 1e-15);
            assert_eq!(r.direction, BiasDirection::Unbiased);
        }
        let r = bias_under_nonmonotonicity(0.4, 0.7, 0.2, 0.2).unwrap();
        assert_abs_diff_eq!(r.bias, 0.0, epsilon = 1e-15);
        assert_eq!(r.direction, BiasDirection::Unbiased);
        assert_eq!(
            bias_under_nonmonotonicity(0.4, 0.7, 0.0, 0.2),
            Err(TransportError::ZeroStudyBaseline)
        );
    }

    #[test]
    fn surface_cells() {
        let rows = bias_surface(0.05, 0.005, &[0.99, 1.0], &[0.5, 1.0, 10.0]).unwrap();
        assert_eq!(rows.len(), 6);
        assert_abs_diff_eq!(rows[2].bias, 0.09, epsilon = 1e-12);
        assert!(rows[3..].iter().all(|r| r.bias.abs() < 1e-15));
        assert!(rows[0].bias < rows[1].bias && rows[1].bias < rows[2].bias);
        assert!(rows.iter().all(bias_identity_holds));
        assert!(matches!(
            bias_surface(0.05, 0.5, &[0.9], &[3.0]),
            Err(TransportError::TargetOutOfRange { .. })
        ));
        assert!(bias_surface(0.05, 0.5, &[0.9], &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn prediction_is_a_probability(g in 0.0..=1.0f64, h in 0.0..=1.0f64, t0 in 0.0..=1.0f64) {
            let r = predict_introduce(CostIntroduce::new(g, h).unwrap(), t0).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.predicted_risk));
        }

        #[test]
        fn surface_is_increasing_in_f(h in 0.0..0.999f64, f1 in 0.1..5.0f64, df in 0.01..5.0f64) {
            let rows = bias_surface(0.5, 0.1, &[h], &[f1, f1 + df]).unwrap();
            prop_assert!(rows[1].bias > rows[0].bias);
        }
    }
}
