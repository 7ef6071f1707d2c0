//! Attribute-driven joint counterfactual populations.
//!
//! Each individual carries a full table of joint counterfactuals
//! `Y^{a,x,z}` and the realized attributes `X` (protective-type) and/or `Z`
//! (harmful-type). Realized potential outcomes follow by consistency:
//! `Y^{a} = Y^{a,X,Z}`.
//!
//! Conditions on the tables:
//!
//! * C1: the attribute distribution is the same in every population.
//! * C2: treatment has no effect when every attribute is absent.
//! * C3 (X): a) X has no effect untreated, b) X forces `Y=0` under
//!   treatment, c) X independent of `Y^{a=0}` within population.
//! * C4 (X): a) X has no effect treated, b) X forces `Y=1` untreated,
//!   c) X independent of `Y^{a=1}` within population.
//! * C5 (Z): a) Z has no effect untreated, b) Z forces `Y=1` under
//!   treatment, c) Z independent of `Y^{a=0}`.
//! * C6 (Z): a) Z has no effect treated, b) Z forces `Y=0` untreated,
//!   c) Z independent of `Y^{a=1}`.
//!
//! Under {C1, C2, C3} `G = Pr(X=0)` in every population; under C4 `J`,
//! under C5 `H` and under C6 `I` equal `Pr(attribute absent)`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{Exact, FinitePopulation, Witness};
use crate::transport::Parameter;
use crate::{cost_introduce, cost_remove, CostIntroduce, CostRemove, ResponseTypeDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("incoherent conditions: {0}")]
    Incoherent(String),
    #[error("{name} = {value} is not a probability")]
    BadProbability { name: String, value: f64 },
    #[error("{name} = {value} has no rational form with denominator <= {max_denominator}")]
    NotRepresentable {
        name: String,
        value: f64,
        max_denominator: u64,
    },
    #[error("population {id} would have {size} individuals (limit {limit})")]
    TooLarge { id: String, size: u64, limit: u64 },
    #[error("unknown population {0}")]
    UnknownPopulation(String),
    #[error("population {0} is empty")]
    EmptyPopulation(String),
    #[error("cell (x={x}, z={z}) mixes protective and harmful responses")]
    MixedEffect { x: bool, z: bool },
    #[error("individual {index} contradicts the declared {effect:?} effect of cell (x={x}, z={z})")]
    Inconsistent {
        index: usize,
        x: bool,
        z: bool,
        effect: CellEffect,
    },
    #[error("population has no X/Z attributes to stratify on")]
    NoAttributes,
}

/// Joint counterfactual outcomes `Y^{a,x,z}` packed into eight bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YTable(pub u8);

impl YTable {
    fn bit(a: bool, x: bool, z: bool) -> u8 {
        1 << ((a as u8) << 2 | (x as u8) << 1 | z as u8)
    }

    pub fn from_fn(f: impl Fn(bool, bool, bool) -> bool) -> Self {
        let mut t = 0u8;
        for a in [false, true] {
            for x in [false, true] {
                for z in [false, true] {
                    if f(a, x, z) {
                        t |= Self::bit(a, x, z);
                    }
                }
            }
        }
        YTable(t)
    }

    pub fn get(&self, a: bool, x: bool, z: bool) -> bool {
        self.0 & Self::bit(a, x, z) != 0
    }

    pub fn set(&mut self, a: bool, x: bool, z: bool, v: bool) {
        if v {
            self.0 |= Self::bit(a, x, z);
        } else {
            self.0 &= !Self::bit(a, x, z);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismIndividual {
    pub population: String,
    pub x: Option<bool>,
    pub z: Option<bool>,
    pub y: YTable,
}

impl MechanismIndividual {
    /// Realized potential outcome `Y^{a}`.
    pub fn outcome(&self, a: bool) -> bool {
        self.y.get(a, self.x.unwrap_or(false), self.z.unwrap_or(false))
    }

    fn cell(&self) -> (bool, bool) {
        (self.x.unwrap_or(false), self.z.unwrap_or(false))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismPopulation {
    pub population_ids: Vec<String>,
    pub individuals: Vec<MechanismIndividual>,
    /// Seed of the generator for sampled populations.
    pub seed: Option<u64>,
}

impl MechanismPopulation {
    pub fn members<'a>(&'a self, id: &'a str) -> impl Iterator<Item = (usize, &'a MechanismIndividual)> + 'a {
        self.individuals
            .iter()
            .enumerate()
            .filter(move |(_, i)| i.population == id)
    }

    pub fn size(&self, id: &str) -> usize {
        self.members(id).count()
    }

    fn domain(&self) -> Domain {
        Domain {
            has_x: self.individuals.iter().any(|i| i.x.is_some()),
            has_z: self.individuals.iter().any(|i| i.z.is_some()),
        }
    }

    /// Exact `Pr(attribute = 1 | P = id)`.
    pub fn attribute_prevalence(&self, id: &str, attribute: Attribute) -> Result<Exact, MechanismError> {
        let mut n = 0u64;
        let mut k = 0u64;
        for (_, ind) in self.members(id) {
            n += 1;
            let v = match attribute {
                Attribute::X => ind.x,
                Attribute::Z => ind.z,
            };
            k += v.unwrap_or(false) as u64;
        }
        if n == 0 {
            return Err(self.missing(id));
        }
        Ok(Exact::new(k.into(), n.into()))
    }

    fn missing(&self, id: &str) -> MechanismError {
        if self.population_ids.iter().any(|p| p == id) {
            MechanismError::EmptyPopulation(id.to_string())
        } else {
            MechanismError::UnknownPopulation(id.to_string())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attribute {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Domain {
    has_x: bool,
    has_z: bool,
}

impl Domain {
    fn xs(&self) -> &'static [bool] {
        if self.has_x {
            &[false, true]
        } else {
            &[false]
        }
    }

    fn zs(&self) -> &'static [bool] {
        if self.has_z {
            &[false, true]
        } else {
            &[false]
        }
    }
}

/// Condition family satisfied by an attribute: C3/C4 for X, C5/C6 for Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttributeCondition {
    C3,
    C4,
    C5,
    C6,
}

impl AttributeCondition {
    /// The COST parameter the family makes equal to `Pr(attribute = 0)`.
    pub fn shared_parameter(self) -> Parameter {
        match self {
            AttributeCondition::C3 => Parameter::G,
            AttributeCondition::C4 => Parameter::J,
            AttributeCondition::C5 => Parameter::H,
            AttributeCondition::C6 => Parameter::I,
        }
    }

    fn attribute(self) -> Attribute {
        match self {
            AttributeCondition::C3 | AttributeCondition::C4 => Attribute::X,
            AttributeCondition::C5 | AttributeCondition::C6 => Attribute::Z,
        }
    }

    /// Introducing-treatment families keep `Y^{a=0}` at the frailty bit and
    /// let the attribute act under treatment.
    fn is_introduce(self) -> bool {
        matches!(self, AttributeCondition::C3 | AttributeCondition::C5)
    }

    fn parts(self) -> [Condition; 3] {
        match self {
            AttributeCondition::C3 => [Condition::C3a, Condition::C3b, Condition::C3c],
            AttributeCondition::C4 => [Condition::C4a, Condition::C4b, Condition::C4c],
            AttributeCondition::C5 => [Condition::C5a, Condition::C5b, Condition::C5c],
            AttributeCondition::C6 => [Condition::C6a, Condition::C6b, Condition::C6c],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConditionSet {
    pub x: Option<AttributeCondition>,
    pub z: Option<AttributeCondition>,
}

impl ConditionSet {
    pub fn single(c: AttributeCondition) -> Self {
        match c.attribute() {
            Attribute::X => Self { x: Some(c), z: None },
            Attribute::Z => Self { x: None, z: Some(c) },
        }
    }

    /// Rejects conditions attached to the wrong attribute and X/Z pairings
    /// other than C3 with C5 or C4 with C6.
    pub fn validate(&self) -> Result<(), MechanismError> {
        use AttributeCondition::*;
        match self.x {
            Some(C5) | Some(C6) => return Err(MechanismError::Incoherent("X takes C3 or C4".into())),
            _ => {}
        }
        match self.z {
            Some(C3) | Some(C4) => return Err(MechanismError::Incoherent("Z takes C5 or C6".into())),
            _ => {}
        }
        match (self.x, self.z) {
            (None, None) => Err(MechanismError::Incoherent("no attribute conditions given".into())),
            (Some(C3), Some(C6)) | (Some(C4), Some(C5)) => Err(MechanismError::Incoherent(format!(
                "{:?} for X cannot be combined with {:?} for Z",
                self.x.unwrap(),
                self.z.unwrap()
            ))),
            _ => Ok(()),
        }
    }

    fn is_introduce(&self) -> bool {
        self.x.or(self.z).map(AttributeCondition::is_introduce).unwrap_or(true)
    }

    /// C1, C2 and the three parts of each attribute family.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut out = vec![Condition::C1, Condition::C2];
        for c in [self.x, self.z].into_iter().flatten() {
            out.extend(c.parts());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    C1,
    C2,
    C3a,
    C3b,
    C3c,
    C4a,
    C4b,
    C4c,
    C5a,
    C5b,
    C5c,
    C6a,
    C6b,
    C6c,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{self:?}");
        f.write_str(&s[1..])
    }
}

impl Condition {
    /// Conditions that constrain each individual's table on its own.
    fn individual(self) -> bool {
        !matches!(
            self,
            Condition::C1 | Condition::C3c | Condition::C4c | Condition::C5c | Condition::C6c
        )
    }
}

/// Individual-level conditions. When both attributes are present, the `b`
/// parts constrain an attribute's effect with the other attribute absent;
/// the joint cell is governed by the declared joint effect.
fn individual_holds(cond: Condition, y: &YTable, dom: Domain) -> bool {
    let (xs, zs) = (dom.xs(), dom.zs());
    match cond {
        Condition::C2 => y.get(false, false, false) == y.get(true, false, false),
        Condition::C3a => zs.iter().all(|&z| y.get(false, false, z) == y.get(false, true, z)),
        Condition::C3b => !y.get(true, true, false),
        Condition::C4a => zs.iter().all(|&z| y.get(true, false, z) == y.get(true, true, z)),
        Condition::C4b => y.get(false, true, false),
        Condition::C5a => xs.iter().all(|&x| y.get(false, x, false) == y.get(false, x, true)),
        Condition::C5b => y.get(true, false, true),
        Condition::C6a => xs.iter().all(|&x| y.get(true, x, false) == y.get(true, x, true)),
        Condition::C6b => !y.get(false, false, true),
        _ => true,
    }
}

/// Effect of treatment within a joint attribute cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellEffect {
    None,
    /// Treatment can only prevent the outcome in this cell.
    Protective,
    /// Treatment can only cause the outcome in this cell.
    Harmful,
}

/// Effects per `(x, z)` cell, indexed `[x][z]`.
pub type EffectMap = [[CellEffect; 2]; 2];

/// Cell effects implied by a condition set; `joint` fills the `(1, 1)` cell
/// when both attributes are present.
pub fn effect_map(cs: &ConditionSet, joint: CellEffect) -> EffectMap {
    let x_effect = if cs.x.is_some() { CellEffect::Protective } else { CellEffect::None };
    let z_effect = if cs.z.is_some() { CellEffect::Harmful } else { CellEffect::None };
    let both = match (cs.x.is_some(), cs.z.is_some()) {
        (true, true) => joint,
        (true, false) => x_effect,
        (false, true) => z_effect,
        (false, false) => CellEffect::None,
    };
    [[CellEffect::None, z_effect], [x_effect, both]]
}

/// Joint counterfactual table of an individual with frailty bit `frailty`.
///
/// Introducing families (C3/C5) fix `Y^{a=0,x,z} = frailty` and let the cell
/// effect set `Y^{a=1}`; removing families (C4/C6) fix
/// `Y^{a=1,x,z} = frailty` and let the cell effect set `Y^{a=0}`.
pub fn counterfactual_table(cs: &ConditionSet, joint: CellEffect, frailty: bool) -> YTable {
    let map = effect_map(cs, joint);
    let introduce = cs.is_introduce();
    YTable::from_fn(|a, x, z| {
        let effect = map[x as usize][z as usize];
        let acted_on = if introduce { a } else { !a };
        if !acted_on {
            return frailty;
        }
        match (effect, introduce) {
            (CellEffect::None, _) => frailty,
            (CellEffect::Protective, true) => false,
            (CellEffect::Harmful, true) => true,
            (CellEffect::Protective, false) => true,
            (CellEffect::Harmful, false) => false,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub id: String,
    #[serde(default)]
    pub pr_x: Option<f64>,
    #[serde(default)]
    pub pr_z: Option<f64>,
    /// Probability of the frailty bit, i.e. the baseline-risk law.
    pub frailty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuildMode {
    /// Product roster with exact rational marginals.
    Exhaustive { max_denominator: u64 },
    /// `size` individuals per population drawn with a seeded generator.
    MonteCarlo { size: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub conditions: ConditionSet,
    #[serde(default = "default_joint")]
    pub joint_effect: CellEffect,
    pub populations: Vec<PopulationSpec>,
    pub mode: BuildMode,
}

fn default_joint() -> CellEffect {
    CellEffect::Harmful
}

const MAX_ROSTER: u64 = 1_000_000;

/// Smallest-denominator fraction within `1e-9` of `p`.
fn rational_approx(name: &str, p: f64, max_denominator: u64) -> Result<(u64, u64), MechanismError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MechanismError::BadProbability {
            name: name.to_string(),
            value: p,
        });
    }
    (1..=max_denominator)
        .find_map(|d| {
            let k = (p * d as f64).round();
            ((k / d as f64 - p).abs() <= 1e-9).then_some((k as u64, d))
        })
        .ok_or(MechanismError::NotRepresentable {
            name: name.to_string(),
            value: p,
            max_denominator,
        })
}

/// Builds every population of `spec`. Each individual's table satisfies the
/// requested conditions by construction; attributes and the frailty bit are
/// independent (exactly in exhaustive mode, in distribution otherwise).
pub fn build_population(spec: &MechanismSpec) -> Result<MechanismPopulation, MechanismError> {
    spec.conditions.validate()?;
    let cs = spec.conditions;
    let mut individuals = Vec::new();
    let mut rng = match spec.mode {
        BuildMode::MonteCarlo { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        BuildMode::Exhaustive { .. } => None,
    };
    for p in &spec.populations {
        let attr = |given: Option<f64>, wanted: bool, name: &str| -> Result<Option<f64>, MechanismError> {
            match (given, wanted) {
                (Some(v), true) => Ok(Some(v)),
                (None, false) => Ok(None),
                (None, true) => Err(MechanismError::Incoherent(format!(
                    "population {} needs {name} for the requested conditions",
                    p.id
                ))),
                (Some(_), false) => Err(MechanismError::Incoherent(format!(
                    "population {} sets {name} but no condition uses it",
                    p.id
                ))),
            }
        };
        let pr_x = attr(p.pr_x, cs.x.is_some(), "pr_x")?;
        let pr_z = attr(p.pr_z, cs.z.is_some(), "pr_z")?;
        let mut push = |x: Option<bool>, z: Option<bool>, frail: bool| {
            individuals.push(MechanismIndividual {
                population: p.id.clone(),
                x,
                z,
                y: counterfactual_table(&cs, spec.joint_effect, frail),
            });
        };
        match (&spec.mode, rng.as_mut()) {
            (BuildMode::Exhaustive { max_denominator }, _) => {
                let grid = |name: &str, v: Option<f64>| -> Result<Option<(u64, u64)>, MechanismError> {
                    v.map(|v| rational_approx(&format!("{}.{name}", p.id), v, *max_denominator))
                        .transpose()
                };
                let gx = grid("pr_x", pr_x)?;
                let gz = grid("pr_z", pr_z)?;
                let gf = rational_approx(&format!("{}.frailty", p.id), p.frailty, *max_denominator)?;
                let size = gx.map_or(1, |g| g.1) * gz.map_or(1, |g| g.1) * gf.1;
                if size > MAX_ROSTER {
                    return Err(MechanismError::TooLarge {
                        id: p.id.clone(),
                        size,
                        limit: MAX_ROSTER,
                    });
                }
                let slots = |g: Option<(u64, u64)>| -> Vec<Option<bool>> {
                    match g {
                        None => vec![None],
                        Some((k, d)) => (0..d).map(|s| Some(s < k)).collect(),
                    }
                };
                for x in slots(gx) {
                    for z in slots(gz) {
                        for f in 0..gf.1 {
                            push(x, z, f < gf.0);
                        }
                    }
                }
            }
            (BuildMode::MonteCarlo { size, .. }, Some(rng)) => {
                for v in [pr_x, pr_z, Some(p.frailty)].into_iter().flatten() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(MechanismError::BadProbability {
                            name: p.id.clone(),
                            value: v,
                        });
                    }
                }
                for _ in 0..*size {
                    let x = pr_x.map(|q| rng.random_bool(q));
                    let z = pr_z.map(|q| rng.random_bool(q));
                    let f = rng.random_bool(p.frailty);
                    push(x, z, f);
                }
            }
            (BuildMode::MonteCarlo { .. }, None) => unreachable!("generator seeded above"),
        }
    }
    Ok(MechanismPopulation {
        population_ids: spec.populations.iter().map(|p| p.id.clone()).collect(),
        individuals,
        seed: match spec.mode {
            BuildMode::MonteCarlo { seed, .. } => Some(seed),
            BuildMode::Exhaustive { .. } => None,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub passed: bool,
    /// Indices of offending individuals (at most ten).
    pub counterexamples: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub results: Vec<ConditionResult>,
    pub all_passed: bool,
}

impl ConditionReport {
    pub fn failed(&self) -> Vec<Condition> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.condition).collect()
    }

    pub fn passed(&self, c: Condition) -> Option<bool> {
        self.results.iter().find(|r| r.condition == c).map(|r| r.passed)
    }
}

const MAX_COUNTEREXAMPLES: usize = 10;

/// Checks each condition of `cs`. Independence conditions are exact
/// count-level independence within each population.
pub fn check_conditions(pop: &MechanismPopulation, cs: &ConditionSet) -> ConditionReport {
    let dom = pop.domain();
    let mut results = Vec::new();
    for cond in cs.conditions() {
        let result = if cond.individual() {
            let bad: Vec<usize> = pop
                .individuals
                .iter()
                .enumerate()
                .filter(|(_, i)| !individual_holds(cond, &i.y, dom))
                .map(|(k, _)| k)
                .collect();
            ConditionResult {
                condition: cond,
                passed: bad.is_empty(),
                detail: if bad.is_empty() {
                    String::new()
                } else {
                    format!("{} individuals violate {cond}", bad.len())
                },
                counterexamples: bad.into_iter().take(MAX_COUNTEREXAMPLES).collect(),
            }
        } else if cond == Condition::C1 {
            equal_attribute_distribution(pop)
        } else {
            independence(pop, cond)
        };
        results.push(result);
    }
    ConditionReport {
        all_passed: results.iter().all(|r| r.passed),
        results,
    }
}

fn equal_attribute_distribution(pop: &MechanismPopulation) -> ConditionResult {
    // Joint (x, z) cell counts per population.
    let counts: Vec<(String, [u64; 4], u64)> = pop
        .population_ids
        .iter()
        .map(|id| {
            let mut c = [0u64; 4];
            let mut n = 0;
            for (_, i) in pop.members(id) {
                let (x, z) = i.cell();
                c[(x as usize) << 1 | z as usize] += 1;
                n += 1;
            }
            (id.clone(), c, n)
        })
        .filter(|(_, _, n)| *n > 0)
        .collect();
    let mut detail = String::new();
    if let Some((ref_id, ref_c, ref_n)) = counts.first() {
        for (id, c, n) in &counts[1..] {
            if (0..4).any(|k| c[k] as u128 * *ref_n as u128 != ref_c[k] as u128 * *n as u128) {
                detail = format!("attribute distribution differs between {ref_id} and {id}");
                break;
            }
        }
    }
    ConditionResult {
        condition: Condition::C1,
        passed: detail.is_empty(),
        counterexamples: Vec::new(),
        detail,
    }
}

fn independence(pop: &MechanismPopulation, cond: Condition) -> ConditionResult {
    let (attribute, arm) = match cond {
        Condition::C3c => (Attribute::X, false),
        Condition::C4c => (Attribute::X, true),
        Condition::C5c => (Attribute::Z, false),
        Condition::C6c => (Attribute::Z, true),
        _ => unreachable!("not an independence condition"),
    };
    for id in &pop.population_ids {
        let (mut n, mut nw, mut ny, mut nwy) = (0u128, 0u128, 0u128, 0u128);
        for (_, i) in pop.members(id) {
            let w = match attribute {
                Attribute::X => i.x,
                Attribute::Z => i.z,
            }
            .unwrap_or(false);
            let y = i.outcome(arm);
            n += 1;
            nw += w as u128;
            ny += y as u128;
            nwy += (w && y) as u128;
        }
        if n * nwy != nw * ny {
            return ConditionResult {
                condition: cond,
                passed: false,
                counterexamples: Vec::new(),
                detail: format!(
                    "population {id}: {attribute:?} not independent of Y^(a={}) ({nwy} joint of {nw} x {ny} / {n})",
                    arm as u8
                ),
            };
        }
    }
    ConditionResult {
        condition: cond,
        passed: true,
        counterexamples: Vec::new(),
        detail: String::new(),
    }
}

/// Exact parameters rendered as `num/den`, `None` where undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactParameters {
    pub g: Option<String>,
    pub h: Option<String>,
    pub i: Option<String>,
    pub j: Option<String>,
}

impl ExactParameters {
    fn of(p: &FinitePopulation) -> Self {
        let s = |q: Option<Exact>| q.map(|q| q.to_string());
        Self {
            g: s(p.g()),
            h: s(p.h()),
            i: s(p.i()),
            j: s(p.j()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismCost {
    pub population: String,
    pub types: FinitePopulation,
    pub distribution: ResponseTypeDistribution,
    pub introduce: CostIntroduce,
    pub remove: CostRemove,
    pub exact: ExactParameters,
}

/// Counts realized `(Y^{a=0}, Y^{a=1})` pairs of one population.
pub fn cost_from_mechanism(pop: &MechanismPopulation, id: &str) -> Result<MechanismCost, MechanismError> {
    let types = FinitePopulation::from_outcomes(pop.members(id).map(|(_, i)| (i.outcome(false), i.outcome(true))));
    if types.total() == 0 {
        return Err(pop.missing(id));
    }
    let distribution = types.distribution();
    Ok(MechanismCost {
        population: id.to_string(),
        types,
        distribution,
        introduce: cost_introduce(distribution),
        remove: cost_remove(distribution),
        exact: ExactParameters::of(&types),
    })
}

/// Reads the effect of each `(x, z)` cell off the realized responses.
/// Cells with only unaffected individuals are `None`.
pub fn infer_effect_map(pop: &MechanismPopulation) -> Result<EffectMap, MechanismError> {
    let mut seen = [[(false, false); 2]; 2];
    for i in &pop.individuals {
        let (x, z) = i.cell();
        let (y0, y1) = (i.outcome(false), i.outcome(true));
        let slot = &mut seen[x as usize][z as usize];
        slot.0 |= y0 && !y1;
        slot.1 |= !y0 && y1;
    }
    let mut map = [[CellEffect::None; 2]; 2];
    for x in 0..2 {
        for z in 0..2 {
            map[x][z] = match seen[x][z] {
                (true, true) => {
                    return Err(MechanismError::MixedEffect {
                        x: x == 1,
                        z: z == 1,
                    })
                }
                (true, false) => CellEffect::Protective,
                (false, true) => CellEffect::Harmful,
                (false, false) => CellEffect::None,
            };
        }
    }
    Ok(map)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UStrataReport {
    pub population: String,
    /// Individuals with `U = 0` (no effect), `U = 1` (protective cell),
    /// `U = 2` (harmful cell).
    pub counts: [u64; 3],
    pub probabilities: [String; 3],
    pub exact: ExactParameters,
    /// `G = 1 - Pr(U=1)` and `H = 1 - Pr(U=2)`; for removing families
    /// `J = 1 - Pr(U=1)` and `I = 1 - Pr(U=2)`.
    pub complement_identity_holds: bool,
    /// `G = Pr(U=1)` and `H = Pr(U=2)`, checked for comparison.
    pub literal_identity_holds: bool,
}

/// Assigns each individual of population `id` to a `U` stratum by the
/// effect of its `(x, z)` cell and checks the resulting parameter identities
/// by counting.
///
/// In an introducing family a protective cell forces `Y^{a=1}=0` and a
/// harmful cell forces `Y^{a=1}=1`; in a removing family they force
/// `Y^{a=0}=1` and `Y^{a=0}=0`. Every individual must agree with its cell's
/// declared effect.
pub fn assign_u_strata(
    pop: &MechanismPopulation,
    id: &str,
    map: &EffectMap,
    introduce: bool,
) -> Result<UStrataReport, MechanismError> {
    let dom = pop.domain();
    if !dom.has_x && !dom.has_z {
        return Err(MechanismError::NoAttributes);
    }
    // Cells mixing both response directions cannot carry a single effect.
    let mut dirs = [[(false, false); 2]; 2];
    for (_, i) in pop.members(id) {
        let (x, z) = i.cell();
        let (y0, y1) = (i.outcome(false), i.outcome(true));
        let d = &mut dirs[x as usize][z as usize];
        d.0 |= y0 && !y1;
        d.1 |= !y0 && y1;
        if d.0 && d.1 {
            return Err(MechanismError::MixedEffect { x, z });
        }
    }
    let mut counts = [0u64; 3];
    for (index, i) in pop.members(id) {
        let (x, z) = i.cell();
        let effect = map[x as usize][z as usize];
        let (y0, y1) = (i.outcome(false), i.outcome(true));
        let consistent = match (effect, introduce) {
            (CellEffect::None, _) => y0 == y1,
            (CellEffect::Protective, true) => !y1,
            (CellEffect::Harmful, true) => y1,
            (CellEffect::Protective, false) => y0,
            (CellEffect::Harmful, false) => !y0,
        };
        if !consistent {
            return Err(MechanismError::Inconsistent { index, x, z, effect });
        }
        counts[match effect {
            CellEffect::None => 0,
            CellEffect::Protective => 1,
            CellEffect::Harmful => 2,
        }] += 1;
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(pop.missing(id));
    }
    let pr = |k: usize| Exact::new(counts[k].into(), n.into());
    let types = FinitePopulation::from_outcomes(pop.members(id).map(|(_, i)| (i.outcome(false), i.outcome(true))));
    let one = Exact::from_integer(1.into());
    let (first, second) = if introduce {
        (types.g(), types.h())
    } else {
        (types.j(), types.i())
    };
    let matches = |q: Option<Exact>, want: Exact| q.is_none_or(|q| q == want);
    let complement_identity_holds = matches(first.clone(), &one - pr(1)) && matches(second.clone(), &one - pr(2));
    let literal_identity_holds = matches(types.g(), pr(1)) && matches(types.h(), pr(2));
    Ok(UStrataReport {
        population: id.to_string(),
        counts,
        probabilities: [pr(0).to_string(), pr(1).to_string(), pr(2).to_string()],
        exact: ExactParameters::of(&types),
        complement_identity_holds,
        literal_identity_holds,
    })
}

/// Population built from counts over `(attribute, frailty)` cells for one
/// attribute family; `counts[w][f]`.
pub fn roster_population(id: &str, family: AttributeCondition, counts: [[u64; 2]; 2]) -> MechanismPopulation {
    let cs = ConditionSet::single(family);
    let mut individuals = Vec::new();
    for w in [false, true] {
        for f in [false, true] {
            for _ in 0..counts[w as usize][f as usize] {
                let (x, z) = match family.attribute() {
                    Attribute::X => (Some(w), None),
                    Attribute::Z => (None, Some(w)),
                };
                individuals.push(MechanismIndividual {
                    population: id.to_string(),
                    x,
                    z,
                    y: counterfactual_table(&cs, CellEffect::None, f),
                });
            }
        }
    }
    MechanismPopulation {
        population_ids: vec![id.to_string()],
        individuals,
        seed: None,
    }
}

fn exact_parameter(types: &FinitePopulation, p: Parameter) -> Option<Exact> {
    match p {
        Parameter::G => types.g(),
        Parameter::H => types.h(),
        Parameter::I => types.i(),
        Parameter::J => types.j(),
    }
}

/// Compositions of `n` into `k` ordered nonnegative parts.
fn compositions(n: u64, k: usize) -> Vec<Vec<u64>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedParameterReport {
    pub checked: u64,
    /// Pairs of rosters with equal attribute prevalence but different
    /// baseline risk, each of which shares the parameter.
    pub unequal_baseline_pairs: u64,
    pub witness: Option<Witness>,
    pub description: String,
}

/// For each single-attribute family, every roster of at most `max_n`
/// individuals over `(attribute, frailty)` cells that satisfies C2 and the
/// family's three conditions has its shared parameter equal to
/// `Pr(attribute = 0)`, hence equal across any populations satisfying C1.
pub fn verify_shared_parameters(max_n: u64) -> SharedParameterReport {
    let mut checked = 0;
    let mut unequal_baseline_pairs = 0;
    let mut witness = None;
    'families: for family in [
        AttributeCondition::C3,
        AttributeCondition::C4,
        AttributeCondition::C5,
        AttributeCondition::C6,
    ] {
        let cs = ConditionSet::single(family);
        let param = family.shared_parameter();
        // (prevalence of attribute) -> list of (baseline risk, parameter)
        let mut by_prevalence: BTreeMap<Exact, Vec<(Exact, Exact)>> = BTreeMap::new();
        for n in 1..=max_n {
            for c in compositions(n, 4) {
                let pop = roster_population("p", family, [[c[0], c[1]], [c[2], c[3]]]);
                if !check_conditions(&pop, &cs).all_passed {
                    continue;
                }
                let cost = cost_from_mechanism(&pop, "p").expect("nonempty roster");
                let Some(value) = exact_parameter(&cost.types, param) else {
                    continue;
                };
                checked += 1;
                let prevalence = pop.attribute_prevalence("p", family.attribute()).unwrap();
                let absent = Exact::from_integer(1.into()) - &prevalence;
                if value != absent {
                    witness = Some(Witness {
                        s: cost.types,
                        t: None,
                        detail: format!("{family:?}: {param:?} = {value} but Pr(attribute=0) = {absent}"),
                    });
                    break 'families;
                }
                by_prevalence
                    .entry(prevalence)
                    .or_default()
                    .push((cost.types.p0(), value));
            }
        }
        for group in by_prevalence.values() {
            for (k, (b1, v1)) in group.iter().enumerate() {
                for (b2, v2) in &group[k + 1..] {
                    if b1 != b2 && v1 == v2 {
                        unequal_baseline_pairs += 1;
                    }
                }
            }
        }
    }
    SharedParameterReport {
        checked,
        unequal_baseline_pairs,
        witness,
        description: format!(
            "all single-attribute rosters (C3, C4, C5, C6) with N <= {max_n} satisfying C2 and the family conditions"
        ),
    }
}

/// Summary of one population in a negative-control witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterSummary {
    pub types: FinitePopulation,
    pub attribute_prevalence: String,
    pub parameter: String,
    pub baseline_risk: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub family: AttributeCondition,
    pub violated: Condition,
    pub rosters_searched: u64,
    /// A pair satisfying every condition except `violated`, whose shared
    /// parameter differs. `None` if no such pair exists within the bound.
    pub witness: Option<(RosterSummary, RosterSummary)>,
}

/// Single-individual tables of one attribute family, as `(w, table)`.
fn single_attribute_kinds(family: AttributeCondition) -> Vec<(bool, YTable)> {
    // Only the (a, w) entries matter; the other attribute's index is 0.
    let mut out = Vec::new();
    for w in [false, true] {
        for bits in 0u8..16 {
            let t = YTable::from_fn(|a, x, z| {
                let wv = match family.attribute() {
                    Attribute::X => x,
                    Attribute::Z => z,
                };
                let other = match family.attribute() {
                    Attribute::X => z,
                    Attribute::Z => x,
                };
                !other && bits & (1 << ((a as u8) << 1 | wv as u8)) != 0
            });
            out.push((w, t));
        }
    }
    out
}

/// Searches pairs of small populations in which exactly one condition of
/// `{C1, C2}` plus the family's three fails, looking for a pair whose shared
/// parameter differs. Population `s` satisfies everything; the violation
/// sits in `t` (or, for C1, between the two).
///
/// The `a` part of each family never yields a witness: it only constrains
/// table entries that no individual realizes once the `b` part holds, so a
/// population violating it alone has the realized outcomes of one that
/// satisfies it.
pub fn negative_control(family: AttributeCondition, violated: Condition, max_n: u64) -> NegativeControl {
    let cs = ConditionSet::single(family);
    let conditions = cs.conditions();
    assert!(conditions.contains(&violated), "{violated} is not part of {family:?}");
    let dom = Domain {
        has_x: family.attribute() == Attribute::X,
        has_z: family.attribute() == Attribute::Z,
    };
    let individual_ok = |t: &YTable, except: Option<Condition>| {
        conditions
            .iter()
            .filter(|c| c.individual() && Some(**c) != except)
            .all(|c| individual_holds(*c, t, dom))
    };
    let kinds = single_attribute_kinds(family);
    let valid: Vec<(bool, YTable)> = kinds.iter().copied().filter(|(_, t)| individual_ok(t, None)).collect();
    let violators: Vec<(bool, YTable)> = if violated.individual() {
        kinds
            .iter()
            .copied()
            .filter(|(_, t)| !individual_holds(violated, t, dom) && individual_ok(t, Some(violated)))
            .collect()
    } else {
        Vec::new()
    };

    let make = |id: &str, menu: &[(bool, YTable)], counts: &[u64]| -> MechanismPopulation {
        let mut individuals = Vec::new();
        for ((w, t), &c) in menu.iter().zip(counts) {
            for _ in 0..c {
                let (x, z) = match family.attribute() {
                    Attribute::X => (Some(*w), None),
                    Attribute::Z => (None, Some(*w)),
                };
                individuals.push(MechanismIndividual {
                    population: id.to_string(),
                    x,
                    z,
                    y: *t,
                });
            }
        }
        MechanismPopulation {
            population_ids: vec![id.to_string()],
            individuals,
            seed: None,
        }
    };

    struct Entry {
        pop: MechanismPopulation,
        prevalence: Exact,
        param: Exact,
        summary: RosterSummary,
    }
    let param = family.shared_parameter();
    let summarize = |pop: MechanismPopulation| -> Option<Entry> {
        let cost = cost_from_mechanism(&pop, &pop.population_ids[0]).ok()?;
        let value = exact_parameter(&cost.types, param)?;
        let prevalence = pop.attribute_prevalence(&pop.population_ids[0], family.attribute()).ok()?;
        Some(Entry {
            summary: RosterSummary {
                types: cost.types,
                attribute_prevalence: prevalence.to_string(),
                parameter: value.to_string(),
                baseline_risk: cost.types.p0().to_string(),
            },
            pop,
            prevalence,
            param: value,
        })
    };

    let mut searched = 0u64;
    let mut good = Vec::new();
    for n in 1..=max_n {
        for c in compositions(n, valid.len()) {
            searched += 1;
            let pop = make("s", &valid, &c);
            if check_conditions(&pop, &cs).all_passed {
                good.extend(summarize(pop));
            }
        }
    }

    let menu: Vec<(bool, YTable)> = valid.iter().chain(violators.iter()).copied().collect();
    let mut candidates = Vec::new();
    if violated == Condition::C1 {
        candidates = good
            .iter()
            .map(|e| Entry {
                pop: relabel(&e.pop, "t"),
                prevalence: e.prevalence.clone(),
                param: e.param.clone(),
                summary: e.summary.clone(),
            })
            .collect();
    } else {
        for n in 1..=max_n {
            for c in compositions(n, menu.len()) {
                if violated.individual() && c[valid.len()..].iter().all(|&k| k == 0) {
                    continue;
                }
                searched += 1;
                let pop = make("t", &menu, &c);
                let failed = check_conditions(&pop, &cs).failed();
                if failed == [violated] {
                    candidates.extend(summarize(pop));
                }
            }
        }
    }

    let witness = good.iter().find_map(|s| {
        candidates.iter().find_map(|t| {
            let c1_ok = s.prevalence == t.prevalence;
            let wanted = if violated == Condition::C1 { !c1_ok } else { c1_ok };
            if !wanted || s.param == t.param {
                return None;
            }
            // Confirm on the combined two-population roster.
            let mut both = s.pop.clone();
            both.population_ids.push("t".into());
            both.individuals.extend(t.pop.individuals.iter().cloned());
            (check_conditions(&both, &cs).failed() == [violated]).then(|| (s.summary.clone(), t.summary.clone()))
        })
    });

    NegativeControl {
        family,
        violated,
        rosters_searched: searched,
        witness,
    }
}

fn relabel(pop: &MechanismPopulation, id: &str) -> MechanismPopulation {
    MechanismPopulation {
        population_ids: vec![id.to_string()],
        individuals: pop
            .individuals
            .iter()
            .map(|i| MechanismIndividual {
                population: id.to_string(),
                ..i.clone()
            })
            .collect(),
        seed: pop.seed,
    }
}

/// Negative controls for every condition of a family.
pub fn negative_controls(family: AttributeCondition, max_n: u64) -> Vec<NegativeControl> {
    ConditionSet::single(family)
        .conditions()
        .into_iter()
        .map(|c| negative_control(family, c, max_n))
        .collect()
}
