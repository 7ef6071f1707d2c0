//! Deterministic heterogeneity metrics across trial summaries.
//!
//! The switched-outcome metric asks how many individual outcomes must be
//! flipped before a study's estimate reaches a target value. Integer counts
//! rarely hit a real target exactly, so the metric is the smallest number of
//! flips whose reachable estimates *bracket* the target: some reachable
//! estimate is `<= target` and some is `>= target`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{check_probability, MeasureError};
use crate::{measures_from_risks, ArmCounts, Quantity, RiskPair, TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetaError {
    #[error("no studies given")]
    NoStudies,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("{scale:?} is undefined for {what}")]
    Degenerate { scale: Scale, what: String },
    #[error("target {0} is not finite")]
    BadTarget(f64),
    #[error("exhaustive search limited to {limit} per arm, got {total}")]
    TooLarge { total: u64, limit: u64 },
    #[error("populations do not share RR(+): {s} vs {t}")]
    RrPlusMismatch { s: Quantity, t: Quantity },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    RrMinus,
    RrPlus,
    Rd,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::RrMinus, Scale::RrPlus, Scale::Rd];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rr_minus" | "rr" => Some(Scale::RrMinus),
            "rr_plus" => Some(Scale::RrPlus),
            "rd" => Some(Scale::Rd),
            _ => None,
        }
    }

    /// Measure from event counts; `None` where a denominator vanishes.
    fn of_counts(self, a: u64, n1: u64, c: u64, n0: u64) -> Option<f64> {
        let p1 = a as f64 / n1 as f64;
        let p0 = c as f64 / n0 as f64;
        match self {
            Scale::RrMinus => (c > 0).then(|| p1 / p0),
            Scale::RrPlus => (c < n0).then(|| (1.0 - p1) / (1.0 - p0)),
            Scale::Rd => Some(p1 - p0),
        }
    }

    /// True when the measure increases with treated events (and then
    /// decreases with control events).
    fn increasing_in_treated(self) -> bool {
        !matches!(self, Scale::RrPlus)
    }

    /// Admissible control-event range `[lo, hi]` keeping the measure defined.
    fn control_range(self, n0: u64) -> (u64, u64) {
        match self {
            Scale::RrMinus => (1, n0),
            Scale::RrPlus => (0, n0.saturating_sub(1)),
            Scale::Rd => (0, n0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub id: String,
    pub treated: ArmCounts,
    pub control: ArmCounts,
}

impl StudyRecord {
    pub fn new(id: impl Into<String>, treated: ArmCounts, control: ArmCounts) -> Result<Self, MetaError> {
        ArmCounts::new(treated.events, treated.total)?;
        ArmCounts::new(control.events, control.total)?;
        Ok(Self {
            id: id.into(),
            treated,
            control,
        })
    }

    pub fn estimate(&self, scale: Scale) -> Option<f64> {
        scale.of_counts(self.treated.events, self.treated.total, self.control.events, self.control.total)
    }

    pub fn risks(&self) -> Result<RiskPair, MeasureError> {
        crate::risks_from_counts(self.treated, self.control)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    SummedCounts,
    Supplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledValue {
    pub scale: Scale,
    pub value: f64,
    pub pooling: Pooling,
}

/// Pools studies on one scale. By default the measure is computed on counts
/// summed across studies; a supplied value is passed through unchanged.
pub fn pool_studies(studies: &[StudyRecord], scale: Scale, supplied: Option<f64>) -> Result<PooledValue, MetaError> {
    if studies.is_empty() {
        return Err(MetaError::NoStudies);
    }
    if let Some(value) = supplied {
        if !value.is_finite() {
            return Err(MetaError::BadTarget(value));
        }
        return Ok(PooledValue {
            scale,
            value,
            pooling: Pooling::Supplied,
        });
    }
    let sum = |f: fn(&StudyRecord) -> u64| studies.iter().map(f).sum::<u64>();
    let value = scale
        .of_counts(
            sum(|s| s.treated.events),
            sum(|s| s.treated.total),
            sum(|s| s.control.events),
            sum(|s| s.control.total),
        )
        .ok_or(MetaError::Degenerate {
            scale,
            what: "summed counts".into(),
        })?;
    Ok(PooledValue {
        scale,
        value,
        pooling: Pooling::SummedCounts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledScales {
    pub rr_minus: Quantity,
    pub rr_plus: Quantity,
    pub rd: Quantity,
}

impl PooledScales {
    pub fn get(&self, scale: Scale) -> Quantity {
        match scale {
            Scale::RrMinus => self.rr_minus,
            Scale::RrPlus => self.rr_plus,
            Scale::Rd => self.rd,
        }
    }

    /// Summed-count pooling on every scale; degenerate scales are undefined.
    pub fn summed(studies: &[StudyRecord]) -> Result<Self, MetaError> {
        let pool = |scale| match pool_studies(studies, scale, None) {
            Ok(p) => Ok(Quantity::Value(p.value)),
            Err(MetaError::Degenerate { .. }) => Ok(Quantity::Undefined),
            Err(e) => Err(e),
        };
        Ok(Self {
            rr_minus: pool(Scale::RrMinus)?,
            rr_plus: pool(Scale::RrPlus)?,
            rd: pool(Scale::Rd)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyDeviation {
    pub id: String,
    pub rr_minus: Quantity,
    pub rr_plus: Quantity,
    pub rd: Quantity,
    /// Scales skipped because the study's estimate or the pooled value is
    /// undefined there.
    pub skipped: Vec<Scale>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    pub per_study: Vec<StudyDeviation>,
    /// Every defined RR(+) estimate lies in `[1 - 0.02, 1]`.
    pub rr_plus_compressed: bool,
}

pub const COMPRESSION_EPSILON: f64 = 0.02;

/// Absolute deviation of each study's estimate from the pooled value on
/// every scale.
pub fn scale_deviations(studies: &[StudyRecord], pooled: &PooledScales) -> Deviations {
    let per_study = studies
        .iter()
        .map(|s| {
            let mut skipped = Vec::new();
            let mut dev = |scale: Scale| match (s.estimate(scale), pooled.get(scale)) {
                (Some(e), Quantity::Value(p)) => Quantity::Value((e - p).abs()),
                _ => {
                    skipped.push(scale);
                    Quantity::Undefined
                }
            };
            StudyDeviation {
                id: s.id.clone(),
                rr_minus: dev(Scale::RrMinus),
                rr_plus: dev(Scale::RrPlus),
                rd: dev(Scale::Rd),
                skipped,
            }
        })
        .collect();
    let rr_plus: Vec<f64> = studies.iter().filter_map(|s| s.estimate(Scale::RrPlus)).collect();
    Deviations {
        per_study,
        rr_plus_compressed: !rr_plus.is_empty()
            && rr_plus.iter().all(|&v| (1.0 - COMPRESSION_EPSILON..=1.0).contains(&v)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchedResult {
    pub id: String,
    pub scale: Scale,
    pub target: f64,
    /// `None` when no number of flips brackets the target.
    pub flips: Option<u64>,
    pub proportion: Option<f64>,
    pub unreachable: bool,
    /// Treated and control event counts after the flips, chosen as the
    /// reachable estimate closest to the target.
    pub treated_events: Option<u64>,
    pub control_events: Option<u64>,
    pub achieved: Option<f64>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

struct Search<'a> {
    study: &'a StudyRecord,
    scale: Scale,
    target: f64,
}

impl Search<'_> {
    fn counts(&self) -> (u64, u64, u64, u64) {
        let s = self.study;
        (s.treated.events, s.treated.total, s.control.events, s.control.total)
    }

    /// Extreme estimates reachable with at most `k` flips.
    fn range(&self, k: u64) -> Option<(f64, f64)> {
        let (a, n1, c, n0) = self.counts();
        let (clo, chi) = self.scale.control_range(n0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a2 in a.saturating_sub(k)..=(a + k).min(n1) {
            let r = k - a.abs_diff(a2);
            let (cmin, cmax) = (c.saturating_sub(r).max(clo), (c + r).min(chi));
            if cmin > cmax {
                continue;
            }
            // Monotone in control events: the extremes sit at the ends.
            for c2 in [cmin, cmax] {
                if let Some(v) = self.scale.of_counts(a2, n1, c2, n0) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn brackets(&self, k: u64) -> bool {
        self.range(k)
            .is_some_and(|(lo, hi)| (lo <= self.target || close(lo, self.target)) && (hi >= self.target || close(hi, self.target)))
    }

    /// Reachable point with at most `k` flips closest to the target.
    fn closest(&self, k: u64) -> (u64, u64, f64) {
        let (a, n1, c, n0) = self.counts();
        let (clo, chi) = self.scale.control_range(n0);
        let mut best: Option<(f64, u64, u64, f64)> = None;
        for a2 in a.saturating_sub(k)..=(a + k).min(n1) {
            let r = k - a.abs_diff(a2);
            let (cmin, cmax) = (c.saturating_sub(r).max(clo), (c + r).min(chi));
            if cmin > cmax {
                continue;
            }
            // Binary search for the crossing in the monotone control range.
            let val = |c2: u64| self.scale.of_counts(a2, n1, c2, n0).expect("within admissible range");
            let decreasing = self.scale.increasing_in_treated();
            let above = |c2: u64| {
                let v = val(c2);
                if decreasing {
                    v < self.target
                } else {
                    v > self.target
                }
            };
            let (mut l, mut h) = (cmin, cmax + 1);
            while l < h {
                let m = l + (h - l) / 2;
                if above(m) {
                    h = m;
                } else {
                    l = m + 1;
                }
            }
            for c2 in [l.saturating_sub(1).max(cmin), l.min(cmax)] {
                let v = val(c2);
                let d = (v - self.target).abs();
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, a2, c2, v));
                }
            }
        }
        let (_, a2, c2, v) = best.expect("bracketing ball is nonempty");
        (a2, c2, v)
    }
}

/// Minimal number of outcome flips (any mix, either arm) whose reachable
/// estimates bracket `target`.
///
/// Each measure is monotone in each arm's event count, so the extremes over
/// all allocations of `k` flips lie on a frontier of `O(k)` points and the
/// bracketing property is monotone in `k`; the search bisects on `k`.
pub fn switched_proportion(study: &StudyRecord, target: f64, scale: Scale) -> Result<SwitchedResult, MetaError> {
    if !target.is_finite() {
        return Err(MetaError::BadTarget(target));
    }
    let search = Search { study, scale, target };
    let total = study.treated.total + study.control.total;
    let unreachable = || SwitchedResult {
        id: study.id.clone(),
        scale,
        target,
        flips: None,
        proportion: None,
        unreachable: true,
        treated_events: None,
        control_events: None,
        achieved: None,
    };
    if !search.brackets(total) {
        return Ok(unreachable());
    }
    let (mut lo, mut hi) = (0u64, total);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if search.brackets(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (a2, c2, v) = search.closest(lo);
    Ok(SwitchedResult {
        id: study.id.clone(),
        scale,
        target,
        flips: Some(lo),
        proportion: Some(lo as f64 / total as f64),
        unreachable: false,
        treated_events: Some(a2),
        control_events: Some(c2),
        achieved: Some(v),
    })
}

pub const EXHAUSTIVE_LIMIT: u64 = 10_000;

/// The same metric by scanning every `(treated events, control events)`
/// pair: the answer is the larger of the distances to the nearest estimate
/// `>= target` and the nearest estimate `<= target`.
pub fn switched_proportion_exhaustive(
    study: &StudyRecord,
    target: f64,
    scale: Scale,
) -> Result<SwitchedResult, MetaError> {
    if !target.is_finite() {
        return Err(MetaError::BadTarget(target));
    }
    let (a, n1, c, n0) = (study.treated.events, study.treated.total, study.control.events, study.control.total);
    for total in [n1, n0] {
        if total > EXHAUSTIVE_LIMIT {
            return Err(MetaError::TooLarge {
                total,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
    }
    let (d_ge, d_le) = (0..=n1)
        .into_par_iter()
        .map(|a2| {
            let mut ge = u64::MAX;
            let mut le = u64::MAX;
            for c2 in 0..=n0 {
                let Some(v) = scale.of_counts(a2, n1, c2, n0) else {
                    continue;
                };
                let d = a.abs_diff(a2) + c.abs_diff(c2);
                if v >= target || close(v, target) {
                    ge = ge.min(d);
                }
                if v <= target || close(v, target) {
                    le = le.min(d);
                }
            }
            (ge, le)
        })
        .reduce(|| (u64::MAX, u64::MAX), |x, y| (x.0.min(y.0), x.1.min(y.1)));
    let total = n1 + n0;
    if d_ge == u64::MAX || d_le == u64::MAX {
        return Ok(SwitchedResult {
            id: study.id.clone(),
            scale,
            target,
            flips: None,
            proportion: None,
            unreachable: true,
            treated_events: None,
            control_events: None,
            achieved: None,
        });
    }
    let k = d_ge.max(d_le);
    let (a2, c2, v) = Search { study, scale, target }.closest(k);
    Ok(SwitchedResult {
        id: study.id.clone(),
        scale,
        target,
        flips: Some(k),
        proportion: Some(k as f64 / total as f64),
        unreachable: false,
        treated_events: Some(a2),
        control_events: Some(c2),
        achieved: Some(v),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub pooled: PooledScales,
    pub pooling: Pooling,
    pub deviations: Deviations,
    pub switched_scale: Scale,
    pub switched: Vec<SwitchedResult>,
}

/// Pools (or takes `supplied` pooled values), computes deviations on every
/// scale and the switched-outcome metric against the pooled value on
/// `switched_scale`.
pub fn heterogeneity(
    studies: &[StudyRecord],
    supplied: Option<PooledScales>,
    switched_scale: Scale,
) -> Result<HeterogeneityReport, MetaError> {
    if studies.is_empty() {
        return Err(MetaError::NoStudies);
    }
    let (pooled, pooling) = match supplied {
        Some(p) => (p, Pooling::Supplied),
        None => (PooledScales::summed(studies)?, Pooling::SummedCounts),
    };
    let deviations = scale_deviations(studies, &pooled);
    let switched = match pooled.get(switched_scale) {
        Quantity::Value(target) => studies
            .par_iter()
            .map(|s| switched_proportion(s, target, switched_scale))
            .collect::<Result<Vec<_>, _>>()?,
        Quantity::Undefined => {
            return Err(MetaError::Degenerate {
                scale: switched_scale,
                what: "pooled value".into(),
            })
        }
    };
    Ok(HeterogeneityReport {
        pooled,
        pooling,
        deviations,
        switched_scale,
        switched,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdSubstitution {
    pub rd_s: f64,
    pub rd_t: f64,
    pub discrepancy: f64,
    /// `p0_t·p1_s − p0_s·p1_t`, equal to `RD_s − RD_t` when RR(+) is shared.
    pub remainder: f64,
    /// `2·(max risk)²`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Compares risk differences of two populations that share RR(+). For rare
/// outcomes the product-term remainder is second order, so RD is nearly
/// shared as well.
pub fn rd_substitution_check(s: RiskPair, t: RiskPair) -> Result<RdSubstitution, MetaError> {
    for (name, p) in [("s.p0", s.p0), ("s.p1", s.p1), ("t.p0", t.p0), ("t.p1", t.p1)] {
        check_probability(name, p)?;
    }
    let (qs, qt) = (measures_from_risks(s).rr_plus, measures_from_risks(t).rr_plus);
    match (qs, qt) {
        (Quantity::Value(a), Quantity::Value(b)) if (a - b).abs() <= TOLERANCE => {}
        _ => return Err(MetaError::RrPlusMismatch { s: qs, t: qt }),
    }
    let rd_s = s.p1 - s.p0;
    let rd_t = t.p1 - t.p0;
    let discrepancy = (rd_s - rd_t).abs();
    let m = s.p0.max(s.p1).max(t.p0).max(t.p1);
    let bound = 2.0 * m * m;
    Ok(RdSubstitution {
        rd_s,
        rd_t,
        discrepancy,
        remainder: t.p0 * s.p1 - s.p0 * t.p1,
        bound,
        within_bound: discrepancy <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn study(id: &str, a: u64, n1: u64, c: u64, n0: u64) -> StudyRecord {
        StudyRecord::new(id, ArmCounts::new(a, n1).unwrap(), ArmCounts::new(c, n0).unwrap()).unwrap()
    }

    #[test]
    fn pooling_single_and_identical() {
        let a = study("a", 10, 100, 5, 100);
        for scale in Scale::ALL {
            let own = a.estimate(scale).unwrap();
            assert_eq!(pool_studies(std::slice::from_ref(&a), scale, None).unwrap().value, own);
            let twice = [a.clone(), a.clone()];
            assert_abs_diff_eq!(pool_studies(&twice, scale, None).unwrap().value, own, epsilon = 1e-15);
        }
    }

    #[test]
    fn pooling_summed_counts() {
        let s = [study("a", 10, 100, 5, 100), study("b", 20, 200, 10, 200)];
        let p = pool_studies(&s, Scale::RrMinus, None).unwrap();
        assert_abs_diff_eq!(p.value, 2.0, epsilon = 1e-12);
        assert_eq!(p.pooling, Pooling::SummedCounts);
        let p = pool_studies(&s, Scale::RrMinus, Some(1.7)).unwrap();
        assert_eq!((p.value, p.pooling), (1.7, Pooling::Supplied));
    }

    #[test]
    fn pooling_errors() {
        assert_eq!(pool_studies(&[], Scale::Rd, None), Err(MetaError::NoStudies));
        let s = [study("a", 3, 10, 0, 10)];
        assert!(matches!(
            pool_studies(&s, Scale::RrMinus, None),
            Err(MetaError::Degenerate { .. })
        ));
        assert!(StudyRecord::new("x", ArmCounts { events: 3, total: 2 }, ArmCounts::new(1, 2).unwrap()).is_err());
    }

    #[test]
    fn identical_studies_have_zero_deviation() {
        let s = vec![study("a", 7, 90, 4, 80); 3];
        let pooled = PooledScales::summed(&s).unwrap();
        let d = scale_deviations(&s, &pooled);
        for row in d.per_study {
            for q in [row.rr_minus, row.rr_plus, row.rd] {
                assert_abs_diff_eq!(q.value().unwrap(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_study_is_skipped_with_flag() {
        let s = [study("a", 3, 10, 0, 10), study("b", 3, 10, 2, 10)];
        let pooled = PooledScales::summed(&s).unwrap();
        let d = scale_deviations(&s, &pooled);
        assert_eq!(d.per_study[0].skipped, vec![Scale::RrMinus]);
        assert!(d.per_study[1].skipped.is_empty());
    }

    #[test]
    fn compression_flag() {
        let s = [study("a", 3, 1000, 2, 1000), study("b", 30, 1000, 20, 1000)];
        assert!(scale_deviations(&s, &PooledScales::summed(&s).unwrap()).rr_plus_compressed);
        let s = [study("a", 3, 10, 2, 10)];
        assert!(!scale_deviations(&s, &PooledScales::summed(&s).unwrap()).rr_plus_compressed);
    }

    #[test]
    fn switched_worked_example() {
        let s = study("a", 10, 100, 5, 100);
        let r = switched_proportion(&s, 1.5, Scale::RrMinus).unwrap();
        assert_eq!(r.flips, Some(2));
        assert_eq!(r.proportion, Some(0.01));
        assert_abs_diff_eq!(r.achieved.unwrap(), 1.5, epsilon = 1e-12);
        let e = switched_proportion_exhaustive(&s, 1.5, Scale::RrMinus).unwrap();
        assert_eq!(e.flips, Some(2));
        // One flip cannot get there.
        assert!(!Search { study: &s, scale: Scale::RrMinus, target: 1.5 }.brackets(1));
    }

    #[test]
    fn switched_on_target_is_zero() {
        let s = study("a", 10, 100, 5, 100);
        for scale in Scale::ALL {
            let r = switched_proportion(&s, s.estimate(scale).unwrap(), scale).unwrap();
            assert_eq!(r.flips, Some(0));
        }
    }

    #[test]
    fn switched_unreachable() {
        let s = study("a", 1, 5, 1, 5);
        let r = switched_proportion(&s, 1000.0, Scale::RrMinus).unwrap();
        assert!(r.unreachable);
        assert_eq!(r.flips, None);
        assert!(switched_proportion_exhaustive(&s, 1000.0, Scale::RrMinus).unwrap().unreachable);
        assert!(switched_proportion(&s, f64::NAN, Scale::Rd).is_err());
    }

    #[test]
    fn switched_from_degenerate_start() {
        let s = study("a", 4, 10, 0, 10);
        let r = switched_proportion(&s, 2.0, Scale::RrMinus).unwrap();
        let e = switched_proportion_exhaustive(&s, 2.0, Scale::RrMinus).unwrap();
        assert_eq!(r.flips, e.flips);
        // (4,1) gives 4; the first estimate at or below 2 is (4,2).
        assert_eq!(r.flips, Some(2));
    }

    #[test]
    fn heterogeneity_report() {
        let s = [study("a", 10, 100, 5, 100), study("b", 20, 200, 10, 200), study("c", 9, 100, 6, 100)];
        let r = heterogeneity(&s, None, Scale::RrMinus).unwrap();
        assert_eq!(r.switched.len(), 3);
        assert!(r.switched.iter().all(|sw| sw.flips.unwrap() > 0));
        for (sw, st) in r.switched.iter().zip(&s) {
            let k = sw.flips.unwrap();
            assert_eq!(sw.proportion.unwrap(), k as f64 / (st.treated.total + st.control.total) as f64);
        }
        let r = heterogeneity(&s[..2], None, Scale::RrMinus).unwrap();
        assert!(r.switched.iter().all(|sw| sw.flips == Some(0)));
    }

    #[test]
    fn rd_substitution_examples() {
        let s = RiskPair::new(0.001, 0.002).unwrap();
        // t1 chosen so RR(+) is exactly shared.
        let t0 = 0.005;
        let t1 = 1.0 - (1.0 - t0) * (1.0 - s.p1) / (1.0 - s.p0);
        let r = rd_substitution_check(s, RiskPair::new(t0, t1).unwrap()).unwrap();
        assert_abs_diff_eq!(r.discrepancy, 4.004004004e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rd_s - r.rd_t, r.remainder, epsilon = 1e-15);
        assert!(r.within_bound);

        let r = rd_substitution_check(s, s).unwrap();
        assert_eq!(r.discrepancy, 0.0);

        let r = rd_substitution_check(RiskPair::new(0.2, 0.4).unwrap(), RiskPair::new(0.5, 0.625).unwrap()).unwrap();
        assert_abs_diff_eq!(r.discrepancy, 0.075, epsilon = 1e-12);

        assert!(matches!(
            rd_substitution_check(s, RiskPair::new(0.1, 0.3).unwrap()),
            Err(MetaError::RrPlusMismatch { .. })
        ));
    }

    fn small_study() -> impl Strategy<Value = StudyRecord> {
        (1u64..30, 1u64..30)
            .prop_flat_map(|(n1, n0)| (0..=n1, Just(n1), 0..=n0, Just(n0)))
            .prop_map(|(a, n1, c, n0)| study("p", a, n1, c, n0))
    }

    proptest! {
        #[test]
        fn frontier_matches_exhaustive(s in small_study(), target in 0.0..3.0f64, k in 0usize..3) {
            let scale = Scale::ALL[k];
            let target = if scale == Scale::Rd { target - 1.5 } else { target };
            let fast = switched_proportion(&s, target, scale).unwrap();
            let slow = switched_proportion_exhaustive(&s, target, scale).unwrap();
            prop_assert_eq!(fast.flips, slow.flips);
        }

        #[test]
        fn flips_monotone_in_distance(s in small_study(), d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
            let Some(e) = s.estimate(Scale::Rd) else { return Ok(()) };
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let a = switched_proportion(&s, e + near, Scale::Rd).unwrap();
            let b = switched_proportion(&s, e + far, Scale::Rd).unwrap();
            match (a.flips, b.flips) {
                (Some(x), Some(y)) => prop_assert!(x <= y),
                (None, Some(_)) => prop_assert!(false, "nearer target unreachable"),
                _ => {}
            }
        }
    }
}
