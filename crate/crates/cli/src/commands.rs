use std::io::Write;
use std::path::PathBuf;

use anyhow::anyhow;
use cost_core::mechanism::{
    assign_u_strata, build_population, check_conditions, cost_from_mechanism, effect_map, Attribute,
    AttributeCondition, BuildMode, CellEffect, MechanismSpec,
};
use cost_core::meta::{heterogeneity, PooledScales, Scale};
use cost_core::oracle::{verify_many, CheckOutcome, Exact, Perturbation, Proposition, Universe};
use cost_core::transport::bias_identity_holds;
use cost_core::{
    bias_surface, bias_under_nonmonotonicity, compare_measures, identify_i_under_increase, identify_j_under_decrease,
    measures_from_risks, predict_introduce, predict_remove, transport_rr, CostIntroduce, CostRemove,
    MonotonicityAssumption, Quantity, RiskPair,
};
use serde::Serialize;
use serde_json::Value;

use crate::args::*;
use crate::config::*;
use crate::data::{self, Data, Population};
use crate::output::{normalize, num, opt, qty, render_csv, render_json, to_value};
use crate::{usage, Failure};

/// A finished subcommand, ready to be rendered in either format.
struct Report {
    command: &'static str,
    config: Value,
    result: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    /// Set when a verification run found a failure.
    failure: Option<String>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let default_format = match cli.command {
        Command::BiasSurface(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.or(file.format).unwrap_or(default_format);
    let report = match cli.command {
        Command::Measures(a) => measures(a, file.measures)?,
        Command::Transport(a) => transport(a, file.transport)?,
        Command::BiasSurface(a) => bias(a, file.bias_surface)?,
        Command::MechanismSim(a) => mechanism(a, file.mechanism, seed)?,
        Command::Meta(a) => meta(a, file.meta)?,
        Command::OracleVerify(a) => oracle(a, file.oracle, seed)?,
    };
    let text = match format {
        Format::Json => render_json(report.command, seed, report.config, report.result)?,
        Format::Csv => render_csv(&report.header, &report.rows, seed)?,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| anyhow!("cannot write {}: {e}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    match report.failure {
        Some(m) => Err(Failure::Verification(m)),
        None => Ok(()),
    }
}

/// Replaces an input path by the data it holds, so the echoed config is
/// self-contained.
fn inline_data(input: &mut Option<PathBuf>, data: &mut Option<Data>) -> Result<(), Failure> {
    if let Some(path) = input.take() {
        *data = Some(data::read(&path)?);
    }
    Ok(())
}

fn required<T: Clone>(x: &Option<T>, what: &str) -> Result<T, Failure> {
    x.clone().ok_or_else(|| usage(format!("missing {what} (flag or config)")))
}

fn measures(args: MeasuresArgs, mut cfg: MeasuresConfig) -> Result<Report, Failure> {
    flag(&mut cfg.input, args.input);
    inline_data(&mut cfg.input, &mut cfg.data)?;
    let cfg = normalize(&cfg)?;
    let pops = data::populations(&required(&cfg.data, "--input")?)?;

    #[derive(Serialize)]
    struct Row<'a> {
        population: &'a str,
        p0: f64,
        p1: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        treated: Option<cost_core::ArmCounts>,
        #[serde(skip_serializing_if = "Option::is_none")]
        control: Option<cost_core::ArmCounts>,
        #[serde(flatten)]
        summary: cost_core::EffectSummary,
    }
    let table: Vec<Row> = pops
        .iter()
        .map(|p| Row {
            population: &p.name,
            p0: p.risks.p0,
            p1: p.risks.p1,
            treated: p.counts.map(|c| c.0),
            control: p.counts.map(|c| c.1),
            summary: measures_from_risks(p.risks),
        })
        .collect();
    let rows = table
        .iter()
        .map(|r| {
            vec![
                r.population.to_string(),
                num(r.p0),
                num(r.p1),
                num(r.summary.rd),
                qty(r.summary.rr_minus),
                qty(r.summary.rr_plus),
                qty(r.summary.odds_ratio),
            ]
        })
        .collect();
    Ok(Report {
        command: "measures",
        config: to_value(&cfg)?,
        result: to_value(&serde_json::json!({ "populations": table }))?,
        header: vec!["population", "p0", "p1", "rd", "rr_minus", "rr_plus", "odds_ratio"],
        rows,
        failure: None,
    })
}

fn assumption_flag(m: &Monotonicity) -> Option<MonotonicityAssumption> {
    if m.non_increasing {
        Some(MonotonicityAssumption::NonIncreasing)
    } else if m.non_decreasing {
        Some(MonotonicityAssumption::NonDecreasing)
    } else if m.no_monotonicity {
        Some(MonotonicityAssumption::None)
    } else {
        None
    }
}

fn pair(a: Option<f64>, b: Option<f64>, names: &str) -> Result<Option<(f64, f64)>, Failure> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => Err(usage(format!("give both {names} or neither"))),
    }
}

#[derive(Serialize)]
struct TransportRow {
    population: String,
    source: RiskPair,
    family: Family,
    target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<cost_core::TransportResult>,
    near_monotonicity_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<cost_core::transport::Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias: Option<cost_core::BiasReport>,
}

fn transport(args: TransportArgs, mut cfg: TransportConfig) -> Result<Report, Failure> {
    flag(&mut cfg.input, args.input);
    flag(&mut cfg.p0, args.p0);
    flag(&mut cfg.p1, args.p1);
    flag(&mut cfg.g, args.g);
    flag(&mut cfg.h, args.h);
    flag(&mut cfg.i, args.i);
    flag(&mut cfg.j, args.j);
    flag(&mut cfg.s0, args.s0);
    flag(&mut cfg.t0, args.t0);
    flag(&mut cfg.t1, args.t1);
    flag(&mut cfg.family, args.family);
    flag(&mut cfg.assumption, assumption_flag(&args.monotonicity));
    flag(&mut cfg.compare, args.compare.then_some(true));
    flag(&mut cfg.near_monotonicity_threshold, args.near_monotonicity_threshold);
    inline_data(&mut cfg.input, &mut cfg.data)?;
    let cfg = normalize(&cfg)?;

    let family = cfg.family.unwrap_or(Family::Introduce);
    let assumption = cfg.assumption.unwrap_or(MonotonicityAssumption::None);
    let compare = cfg.compare.unwrap_or(false);
    let threshold = cfg.near_monotonicity_threshold.unwrap_or(DEFAULT_NEAR_MONOTONICITY_THRESHOLD);
    let gh = pair(cfg.g, cfg.h, "g and h")?;
    let ij = pair(cfg.i, cfg.j, "i and j")?;

    let sources: Vec<Population> = if let Some(d) = &cfg.data {
        data::populations(d)?
    } else if let Some((p0, p1)) = pair(cfg.p0, cfg.p1, "p0 and p1")? {
        vec![Population {
            name: "source".into(),
            risks: RiskPair::new(p0, p1)?,
            counts: None,
        }]
    } else if let (Some((g, h)), Some(s0)) = (gh, cfg.s0) {
        let p1 = predict_introduce(CostIntroduce::new(g, h)?, s0)?.predicted_risk;
        vec![Population {
            name: "source".into(),
            risks: RiskPair::new(s0, p1)?,
            counts: None,
        }]
    } else {
        return Err(usage("transport needs a source: --input, --p0/--p1, or --g/--h with --s0"));
    };
    let targets = match family {
        Family::Introduce => required(&cfg.t0, "--t0")?,
        Family::Remove => required(&cfg.t1, "--t1")?,
    };
    if targets.is_empty() {
        return Err(usage("no target risks given"));
    }
    if compare && family == Family::Remove {
        return Err(usage("comparison mode applies to the introduce family"));
    }

    let mut table = Vec::new();
    for src in &sources {
        for &target in &targets {
            let s = src.risks;
            let (prediction, comparison, bias) = match family {
                Family::Introduce => {
                    let explicit = gh.map(|(g, h)| CostIntroduce::new(g, h)).transpose()?;
                    let prediction = match (explicit, assumption) {
                        (Some(p), _) => Some(predict_introduce(p, target)?),
                        (None, MonotonicityAssumption::None) => None,
                        (None, a) => Some(transport_rr(s, target, a)?),
                    };
                    let comparison = compare.then(|| compare_measures(s, target, explicit, assumption)).transpose()?;
                    let bias = match gh {
                        Some((g, h)) if s.p0 > 0.0 => Some(bias_under_nonmonotonicity(g, h, s.p0, target)?),
                        _ => None,
                    };
                    (prediction, comparison, bias)
                }
                Family::Remove => {
                    let params = match (ij, assumption) {
                        (Some((i, j)), _) => CostRemove::new(i, j)?,
                        (None, MonotonicityAssumption::NonIncreasing) => CostRemove::new(1.0, identify_j_under_decrease(s)?)?,
                        (None, MonotonicityAssumption::NonDecreasing) => CostRemove::new(identify_i_under_increase(s)?, 1.0)?,
                        (None, MonotonicityAssumption::None) => {
                            return Err(usage("removal needs a monotonicity direction or explicit i and j"))
                        }
                    };
                    (Some(predict_remove(params, target)?), None, None)
                }
            };
            if prediction.is_none() && comparison.is_none() {
                return Err(usage(
                    "need a monotonicity direction, explicit parameters, or --compare",
                ));
            }
            let near_monotonicity_warning = prediction
                .as_ref()
                .and_then(|p| p.near_monotonicity_ratio)
                .is_some_and(|r| r < threshold);
            table.push(TransportRow {
                population: src.name.clone(),
                source: s,
                family,
                target,
                prediction,
                near_monotonicity_warning,
                comparison,
                bias,
            });
        }
    }

    let family_name = |f: Family| match f {
        Family::Introduce => "introduce",
        Family::Remove => "remove",
    };
    let mut rows = Vec::new();
    for r in &table {
        let mut push = |rule: &str, value: String, raw: String, clamped: bool| {
            rows.push(vec![
                r.population.clone(),
                family_name(r.family).into(),
                num(r.target),
                rule.into(),
                value,
                raw,
                clamped.to_string(),
                r.near_monotonicity_warning.to_string(),
            ])
        };
        if let Some(p) = &r.prediction {
            push("cost", num(p.predicted_risk), num(p.predicted_risk), false);
        }
        if let Some(c) = &r.comparison {
            for (rule, p) in [
                ("rr_minus", c.rr_minus),
                ("rr_plus", c.rr_plus),
                ("rd", c.rd),
                ("odds_ratio", c.odds_ratio),
            ] {
                push(rule, qty(p.value), qty(p.raw), p.clamped);
            }
        }
        if let Some(b) = &r.bias {
            push("naive_rr_minus", num(b.naive_prediction), num(b.naive_prediction), false);
        }
    }
    Ok(Report {
        command: "transport",
        config: to_value(&cfg)?,
        result: to_value(&serde_json::json!({ "predictions": table }))?,
        header: vec![
            "population",
            "family",
            "target",
            "rule",
            "prediction",
            "raw",
            "clamped",
            "near_monotonicity_warning",
        ],
        rows,
        failure: None,
    })
}

fn bias(args: BiasSurfaceArgs, mut cfg: BiasSurfaceConfig) -> Result<Report, Failure> {
    flag(&mut cfg.g, args.g);
    flag(&mut cfg.s0, args.s0);
    flag(&mut cfg.h_grid, args.h_grid);
    flag(&mut cfg.f_grid, args.f_grid);
    let cfg = normalize(&cfg)?;
    let g = required(&cfg.g, "--g")?;
    let s0 = required(&cfg.s0, "--s0")?;
    let h_grid = required(&cfg.h_grid, "--h-grid")?;
    let f_grid = required(&cfg.f_grid, "--f-grid")?;
    if h_grid.is_empty() || f_grid.is_empty() {
        return Err(usage("grids must not be empty"));
    }
    let cells = bias_surface(g, s0, &h_grid, &f_grid)?;
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                num(c.g),
                num(c.h),
                num(c.s0),
                num(c.f),
                num(c.t0),
                num(c.study_rr),
                qty(c.target_rr),
                num(c.naive_prediction),
                num(c.true_risk),
                num(c.bias),
                num(c.closed_form_bias),
                to_value(&c.direction).map(|v| v.as_str().unwrap_or_default().to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let identity_holds = cells.iter().all(bias_identity_holds);
    Ok(Report {
        command: "bias-surface",
        config: to_value(&cfg)?,
        result: to_value(&serde_json::json!({ "cells": cells, "identity_holds": identity_holds }))?,
        header: vec![
            "g",
            "h",
            "s0",
            "f",
            "t0",
            "study_rr",
            "target_rr",
            "naive",
            "true_risk",
            "bias",
            "closed_form_bias",
            "direction",
        ],
        rows,
        failure: None,
    })
}

fn attribute_of(c: AttributeCondition) -> Attribute {
    match c {
        AttributeCondition::C3 | AttributeCondition::C4 => Attribute::X,
        AttributeCondition::C5 | AttributeCondition::C6 => Attribute::Z,
    }
}

#[derive(Serialize)]
struct SharedCheck {
    condition: AttributeCondition,
    parameter: cost_core::Parameter,
    attribute: Attribute,
    /// Per population: the parameter and `Pr(attribute = 0)`, both exact.
    populations: Vec<SharedValue>,
    equals_prevalence: bool,
    shared: bool,
}

#[derive(Serialize)]
struct SharedValue {
    population: String,
    value: Option<String>,
    prevalence_zero: String,
}

fn mechanism(args: MechanismArgs, mut cfg: MechanismConfig, seed: u64) -> Result<Report, Failure> {
    flag(&mut cfg.mode, args.mode);
    flag(&mut cfg.size, args.size);
    flag(&mut cfg.max_denominator, args.max_denominator);
    let conditions = required(&cfg.conditions, "mechanism conditions")?;
    let populations = required(&cfg.populations, "mechanism populations")?;
    if populations.is_empty() {
        return Err(usage("no mechanism populations given"));
    }
    cfg.joint_effect.get_or_insert(CellEffect::Harmful);
    let mode = *cfg.mode.get_or_insert(ModeKind::Exhaustive);
    let build = match mode {
        ModeKind::Exhaustive => {
            cfg.size = None;
            BuildMode::Exhaustive {
                max_denominator: *cfg.max_denominator.get_or_insert(DEFAULT_MAX_DENOMINATOR),
            }
        }
        ModeKind::MonteCarlo => {
            cfg.max_denominator = None;
            BuildMode::MonteCarlo {
                size: required(&cfg.size, "--size")?,
                seed,
            }
        }
    };
    let cfg = normalize(&cfg)?;
    let joint = cfg.joint_effect.unwrap_or(CellEffect::Harmful);
    let spec = MechanismSpec {
        conditions,
        joint_effect: joint,
        populations: cfg.populations.clone().unwrap_or(populations),
        mode: build,
    };
    let pop = build_population(&spec)?;
    let report = check_conditions(&pop, &conditions);
    let introduce = matches!(
        conditions.x.or(conditions.z),
        Some(AttributeCondition::C3) | Some(AttributeCondition::C5)
    );
    let map = effect_map(&conditions, joint);

    let mut costs = Vec::new();
    let mut strata = Vec::new();
    for id in &pop.population_ids {
        costs.push(cost_from_mechanism(&pop, id)?);
        strata.push(assign_u_strata(&pop, id, &map, introduce)?);
    }
    let mut shared = Vec::new();
    for family in [conditions.x, conditions.z].into_iter().flatten() {
        let parameter = family.shared_parameter();
        let attribute = attribute_of(family);
        let mut values = Vec::new();
        for cost in &costs {
            let prevalence = pop.attribute_prevalence(&cost.population, attribute)?;
            let value = match parameter {
                cost_core::Parameter::G => cost.exact.g.clone(),
                cost_core::Parameter::H => cost.exact.h.clone(),
                cost_core::Parameter::I => cost.exact.i.clone(),
                cost_core::Parameter::J => cost.exact.j.clone(),
            };
            values.push(SharedValue {
                population: cost.population.clone(),
                value,
                prevalence_zero: (Exact::from_integer(1.into()) - prevalence).to_string(),
            });
        }
        shared.push(SharedCheck {
            condition: family,
            parameter,
            attribute,
            equals_prevalence: values.iter().all(|v| v.value.as_deref() == Some(v.prevalence_zero.as_str())),
            shared: values.windows(2).all(|w| w[0].value == w[1].value),
            populations: values,
        });
    }

    let rows = costs
        .iter()
        .zip(&strata)
        .map(|(c, u)| {
            vec![
                c.population.clone(),
                c.types.total().to_string(),
                qty(c.introduce.g),
                qty(c.introduce.h),
                qty(c.remove.i),
                qty(c.remove.j),
                opt(c.exact.g.clone()),
                opt(c.exact.h.clone()),
                opt(c.exact.i.clone()),
                opt(c.exact.j.clone()),
                u.complement_identity_holds.to_string(),
                report.all_passed.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        command: "mechanism-sim",
        config: to_value(&cfg)?,
        result: to_value(&serde_json::json!({
            "conditions": report,
            "populations": costs,
            "u_strata": strata,
            "shared": shared,
        }))?,
        header: vec![
            "population",
            "n",
            "g",
            "h",
            "i",
            "j",
            "g_exact",
            "h_exact",
            "i_exact",
            "j_exact",
            "u_complement_identity",
            "conditions_passed",
        ],
        rows,
        failure: None,
    })
}

fn meta(args: MetaArgs, mut cfg: MetaConfig) -> Result<Report, Failure> {
    flag(&mut cfg.input, args.input);
    flag(&mut cfg.scale, args.scale);
    flag(&mut cfg.pooled_rr_minus, args.pooled_rr_minus);
    flag(&mut cfg.pooled_rr_plus, args.pooled_rr_plus);
    flag(&mut cfg.pooled_rd, args.pooled_rd);
    inline_data(&mut cfg.input, &mut cfg.data)?;
    let cfg = normalize(&cfg)?;
    let scale_name = cfg.scale.clone().unwrap_or_else(|| "rr_minus".into());
    let scale = Scale::parse(&scale_name).ok_or_else(|| usage(format!("unknown scale {scale_name:?}")))?;
    let studies = data::studies(&required(&cfg.data, "--input")?)?;
    let supplied = if cfg.pooled_rr_minus.is_some() || cfg.pooled_rr_plus.is_some() || cfg.pooled_rd.is_some() {
        let mut p = PooledScales::summed(&studies)?;
        let set = |q: &mut Quantity, v: Option<f64>| {
            if let Some(v) = v {
                *q = Quantity::Value(v);
            }
        };
        set(&mut p.rr_minus, cfg.pooled_rr_minus);
        set(&mut p.rr_plus, cfg.pooled_rr_plus);
        set(&mut p.rd, cfg.pooled_rd);
        Some(p)
    } else {
        None
    };
    let report = heterogeneity(&studies, supplied, scale)?;
    let rows = report
        .deviations
        .per_study
        .iter()
        .zip(&report.switched)
        .map(|(d, s)| {
            vec![
                d.id.clone(),
                qty(d.rr_minus),
                qty(d.rr_plus),
                qty(d.rd),
                num(s.target),
                opt(s.flips),
                s.proportion.map(num).unwrap_or_default(),
                s.unreachable.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        command: "meta",
        config: to_value(&cfg)?,
        result: to_value(&report)?,
        header: vec![
            "study",
            "rr_minus_deviation",
            "rr_plus_deviation",
            "rd_deviation",
            "switched_target",
            "flips",
            "switched_proportion",
            "unreachable",
        ],
        rows,
        failure: None,
    })
}

fn oracle(args: OracleArgs, mut cfg: OracleConfig, seed: u64) -> Result<Report, Failure> {
    flag(&mut cfg.propositions, args.propositions);
    let u = cfg.universe.get_or_insert_with(Universe::default);
    let set = |slot: &mut u64, v: Option<u64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut u.max_population, args.max_population);
    set(&mut u.max_pair_population, args.max_pair_population);
    set(&mut u.sampled_pairs, args.sampled_pairs);
    set(&mut u.max_stratum_population, args.max_stratum_population);
    set(&mut u.max_mechanism_population, args.max_mechanism_population);
    if let Some(p) = args.perturb {
        u.perturbation = Some(match p {
            PerturbArg::InjectCausal => Perturbation::InjectCausal,
            PerturbArg::InjectPreventative => Perturbation::InjectPreventative,
        });
    }
    u.seed = seed;
    let props: Vec<Proposition> = match &cfg.propositions {
        None => Proposition::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| Proposition::parse(n).ok_or_else(|| usage(format!("unknown proposition {n:?}"))))
            .collect::<Result<_, _>>()?,
    };
    if props.is_empty() {
        return Err(usage("no propositions selected"));
    }
    cfg.propositions = Some(props.iter().map(|p| p.name().to_string()).collect());
    let universe = cfg.universe.clone().unwrap_or_default();
    let manifest = verify_many(&props, &universe);
    let rows = manifest
        .checks
        .iter()
        .map(|c| {
            let (status, detail) = match &c.outcome {
                CheckOutcome::Pass => ("pass", String::new()),
                CheckOutcome::Fail { witness } => ("fail", witness.detail.clone()),
            };
            vec![
                c.proposition.name().to_string(),
                status.to_string(),
                c.checked.to_string(),
                c.universe.clone(),
                detail,
            ]
        })
        .collect();
    let failed: Vec<&str> = manifest
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.proposition.name())
        .collect();
    Ok(Report {
        command: "oracle-verify",
        config: to_value(&cfg)?,
        result: to_value(&manifest)?,
        header: vec!["proposition", "status", "checked", "universe", "detail"],
        rows,
        failure: (!failed.is_empty()).then(|| failed.join(", ")),
    })
}
