//! Python bindings for `cost_core`.
//!
//! Undefined ratios come back as `None`. Composite reports also offer
//! `to_json()` with the same field names as the command-line output.

use cost_core::meta::{self, Scale};
use cost_core::oracle::{self, Proposition, Universe};
use cost_core::MonotonicityAssumption;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json(x: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(x).map_err(err)
}

fn assumption(s: Option<&str>) -> PyResult<MonotonicityAssumption> {
    match s.map(|s| s.to_ascii_lowercase().replace('-', "_")).as_deref() {
        None | Some("none") => Ok(MonotonicityAssumption::None),
        Some("non_increasing") => Ok(MonotonicityAssumption::NonIncreasing),
        Some("non_decreasing") => Ok(MonotonicityAssumption::NonDecreasing),
        Some(other) => Err(err(format!("unknown monotonicity assumption {other:?}"))),
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct RiskPair {
    #[pyo3(get)]
    p0: f64,
    #[pyo3(get)]
    p1: f64,
}

impl RiskPair {
    fn core(&self) -> cost_core::RiskPair {
        cost_core::RiskPair { p0: self.p0, p1: self.p1 }
    }
}

#[pymethods]
impl RiskPair {
    #[new]
    fn new(p0: f64, p1: f64) -> PyResult<Self> {
        cost_core::RiskPair::new(p0, p1).map_err(err)?;
        Ok(Self { p0, p1 })
    }

    #[staticmethod]
    fn from_counts(treated_events: u64, treated_total: u64, control_events: u64, control_total: u64) -> PyResult<Self> {
        let arm = |e, n| cost_core::ArmCounts::new(e, n).map_err(err);
        let r = cost_core::risks_from_counts(arm(treated_events, treated_total)?, arm(control_events, control_total)?)
            .map_err(err)?;
        Ok(Self { p0: r.p0, p1: r.p1 })
    }

    fn measures(&self) -> EffectSummary {
        EffectSummary(cost_core::measures_from_risks(self.core()))
    }

    fn __repr__(&self) -> String {
        format!("RiskPair(p0={}, p1={})", self.p0, self.p1)
    }
}

#[pyclass(frozen)]
struct EffectSummary(cost_core::EffectSummary);

#[pymethods]
impl EffectSummary {
    #[getter]
    fn rd(&self) -> f64 {
        self.0.rd
    }

    #[getter]
    fn rr_minus(&self) -> Option<f64> {
        self.0.rr_minus.value()
    }

    #[getter]
    fn rr_plus(&self) -> Option<f64> {
        self.0.rr_plus.value()
    }

    #[getter]
    fn odds_ratio(&self) -> Option<f64> {
        self.0.odds_ratio.value()
    }

    fn __repr__(&self) -> String {
        format!(
            "EffectSummary(rd={}, rr_minus={}, rr_plus={}, odds_ratio={})",
            self.0.rd, self.0.rr_minus, self.0.rr_plus, self.0.odds_ratio
        )
    }
}

#[pyclass(frozen)]
struct ResponseTypeDistribution(cost_core::ResponseTypeDistribution);

#[pymethods]
impl ResponseTypeDistribution {
    #[new]
    #[pyo3(signature = (doomed, causal, preventative, immune, renormalize = false))]
    fn new(doomed: f64, causal: f64, preventative: f64, immune: f64, renormalize: bool) -> PyResult<Self> {
        let d = if renormalize {
            cost_core::ResponseTypeDistribution::renormalized(doomed, causal, preventative, immune)
        } else {
            cost_core::ResponseTypeDistribution::new(doomed, causal, preventative, immune)
        };
        d.map(Self).map_err(err)
    }

    fn risks(&self) -> RiskPair {
        let r = self.0.risks();
        RiskPair { p0: r.p0, p1: r.p1 }
    }

    /// `(g, h)`, with `None` where undefined.
    fn cost_introduce(&self) -> (Option<f64>, Option<f64>) {
        let c = cost_core::cost_introduce(self.0);
        (c.g.value(), c.h.value())
    }

    /// `(i, j)`, with `None` where undefined.
    fn cost_remove(&self) -> (Option<f64>, Option<f64>) {
        let c = cost_core::cost_remove(self.0);
        (c.i.value(), c.j.value())
    }

    fn recode_outcome(&self) -> Self {
        Self(cost_core::recode_outcome(self.0))
    }

    fn recode_exposure(&self) -> Self {
        Self(cost_core::recode_exposure(self.0))
    }

    fn __repr__(&self) -> String {
        let d = self.0;
        format!(
            "ResponseTypeDistribution(doomed={}, causal={}, preventative={}, immune={})",
            d.doomed, d.causal, d.preventative, d.immune
        )
    }
}

#[pyclass(frozen)]
struct TransportResult(cost_core::TransportResult);

#[pymethods]
impl TransportResult {
    #[getter]
    fn predicted_risk(&self) -> f64 {
        self.0.predicted_risk
    }

    #[getter]
    fn near_monotonicity_margin(&self) -> f64 {
        self.0.near_monotonicity_margin
    }

    #[getter]
    fn near_monotonicity_ratio(&self) -> Option<f64> {
        self.0.near_monotonicity_ratio
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.0)
    }
}

#[pyclass(frozen)]
struct BiasReport(cost_core::BiasReport);

#[pymethods]
impl BiasReport {
    #[getter]
    fn f(&self) -> f64 {
        self.0.f
    }

    #[getter]
    fn study_rr(&self) -> f64 {
        self.0.study_rr
    }

    #[getter]
    fn target_rr(&self) -> Option<f64> {
        self.0.target_rr.value()
    }

    #[getter]
    fn naive_prediction(&self) -> f64 {
        self.0.naive_prediction
    }

    #[getter]
    fn true_risk(&self) -> f64 {
        self.0.true_risk
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.0.bias
    }

    #[getter]
    fn closed_form_bias(&self) -> f64 {
        self.0.closed_form_bias
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.0)
    }
}

/// Treated risk of a target with baseline `t0` given shared `(g, h)`.
#[pyfunction]
fn predict_introduce(g: f64, h: f64, t0: f64) -> PyResult<TransportResult> {
    let p = cost_core::CostIntroduce::new(g, h).map_err(err)?;
    cost_core::predict_introduce(p, t0).map(TransportResult).map_err(err)
}

/// Untreated risk of a fully treated target with treated risk `t1`.
#[pyfunction]
fn predict_remove(i: f64, j: f64, t1: f64) -> PyResult<TransportResult> {
    let p = cost_core::CostRemove::new(i, j).map_err(err)?;
    cost_core::predict_remove(p, t1).map(TransportResult).map_err(err)
}

/// Transports the risk ratio matching `assumption`
/// (`"non_increasing"` or `"non_decreasing"`).
#[pyfunction]
fn transport_rr(source: RiskPair, t0: f64, assumption: &str) -> PyResult<TransportResult> {
    cost_core::transport_rr(source.core(), t0, self::assumption(Some(assumption))?)
        .map(TransportResult)
        .map_err(err)
}

/// Predictions under shared RR(−), RR(+), RD, OR and COST, as JSON.
#[pyfunction]
#[pyo3(signature = (source, t0, g = None, h = None, assumption = None))]
fn compare_measures(
    source: RiskPair,
    t0: f64,
    g: Option<f64>,
    h: Option<f64>,
    assumption: Option<&str>,
) -> PyResult<String> {
    let params = match (g, h) {
        (Some(g), Some(h)) => Some(cost_core::CostIntroduce::new(g, h).map_err(err)?),
        (None, None) => None,
        _ => return Err(err("give both g and h or neither")),
    };
    let c = cost_core::compare_measures(source.core(), t0, params, self::assumption(assumption)?).map_err(err)?;
    json(&c)
}

#[pyfunction]
fn bias_under_nonmonotonicity(g: f64, h: f64, s0: f64, t0: f64) -> PyResult<BiasReport> {
    cost_core::bias_under_nonmonotonicity(g, h, s0, t0).map(BiasReport).map_err(err)
}

#[pyfunction]
fn bias_surface(g: f64, s0: f64, h_grid: Vec<f64>, f_grid: Vec<f64>) -> PyResult<Vec<BiasReport>> {
    let cells = cost_core::bias_surface(g, s0, &h_grid, &f_grid).map_err(err)?;
    Ok(cells.into_iter().map(BiasReport).collect())
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct StudyRecord(meta::StudyRecord);

#[pymethods]
impl StudyRecord {
    #[new]
    fn new(id: String, treated_events: u64, treated_total: u64, control_events: u64, control_total: u64) -> PyResult<Self> {
        let arm = |e, n| cost_core::ArmCounts::new(e, n).map_err(err);
        meta::StudyRecord::new(id, arm(treated_events, treated_total)?, arm(control_events, control_total)?)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id.clone()
    }

    fn estimate(&self, scale: &str) -> PyResult<Option<f64>> {
        Ok(self.0.estimate(parse_scale(scale)?))
    }
}

fn parse_scale(s: &str) -> PyResult<Scale> {
    Scale::parse(s).ok_or_else(|| err(format!("unknown scale {s:?}")))
}

/// `(flips, proportion)` needed to move the study's estimate onto
/// `target`; both `None` when unreachable.
#[pyfunction]
#[pyo3(signature = (study, target, scale = "rr_minus"))]
fn switched_proportion(study: StudyRecord, target: f64, scale: &str) -> PyResult<(Option<u64>, Option<f64>)> {
    let r = meta::switched_proportion(&study.0, target, parse_scale(scale)?).map_err(err)?;
    Ok((r.flips, r.proportion))
}

/// Pooled values, per-study deviations and switched proportions, as JSON.
#[pyfunction]
#[pyo3(signature = (studies, scale = "rr_minus"))]
fn heterogeneity(studies: Vec<StudyRecord>, scale: &str) -> PyResult<String> {
    let studies: Vec<_> = studies.into_iter().map(|s| s.0).collect();
    let r = meta::heterogeneity(&studies, None, parse_scale(scale)?).map_err(err)?;
    json(&r)
}

/// Runs the exhaustive oracle. Returns `(all_passed, manifest_json)`.
#[pyfunction]
#[pyo3(signature = (propositions = None, max_population = None, max_pair_population = None, sampled_pairs = None, seed = 1))]
fn verify(
    propositions: Option<Vec<String>>,
    max_population: Option<u64>,
    max_pair_population: Option<u64>,
    sampled_pairs: Option<u64>,
    seed: u64,
) -> PyResult<(bool, String)> {
    let mut u = Universe {
        seed,
        ..Universe::default()
    };
    if let Some(n) = max_population {
        u.max_population = n;
    }
    if let Some(n) = max_pair_population {
        u.max_pair_population = n;
    }
    if let Some(n) = sampled_pairs {
        u.sampled_pairs = n;
    }
    let props = match propositions {
        None => Proposition::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| Proposition::parse(n).ok_or_else(|| err(format!("unknown proposition {n:?}"))))
            .collect::<PyResult<_>>()?,
    };
    let m = oracle::verify_many(&props, &u);
    Ok((m.all_passed, json(&m)?))
}

#[pymodule]
fn cost_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RiskPair>()?;
    m.add_class::<EffectSummary>()?;
    m.add_class::<ResponseTypeDistribution>()?;
    m.add_class::<TransportResult>()?;
    m.add_class::<BiasReport>()?;
    m.add_class::<StudyRecord>()?;
    m.add_function(wrap_pyfunction!(predict_introduce, m)?)?;
    m.add_function(wrap_pyfunction!(predict_remove, m)?)?;
    m.add_function(wrap_pyfunction!(transport_rr, m)?)?;
    m.add_function(wrap_pyfunction!(compare_measures, m)?)?;
    m.add_function(wrap_pyfunction!(bias_under_nonmonotonicity, m)?)?;
    m.add_function(wrap_pyfunction!(bias_surface, m)?)?;
    m.add_function(wrap_pyfunction!(switched_proportion, m)?)?;
    m.add_function(wrap_pyfunction!(heterogeneity, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
