//! Exhaustive finite-population verification in exact rational arithmetic.
//!
//! A [`FinitePopulation`] is an integer count of each response type. Every
//! risk and COST parameter of such a population is an exact rational, so the
//! identities relating them can be checked without any tolerance.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{ResponseTypeDistribution, RiskPair};

pub type Exact = BigRational;

fn exact(num: u64, den: u64) -> Option<Exact> {
    (den != 0).then(|| Exact::new(BigInt::from(num), BigInt::from(den)))
}

fn to_f64(q: &Exact) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Integer counts of the four response types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FinitePopulation {
    pub n_doomed: u64,
    pub n_causal: u64,
    pub n_preventative: u64,
    pub n_immune: u64,
}

impl fmt::Display for FinitePopulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(doomed={}, causal={}, preventative={}, immune={})",
            self.n_doomed, self.n_causal, self.n_preventative, self.n_immune
        )
    }
}

impl FinitePopulation {
    pub fn new(n_doomed: u64, n_causal: u64, n_preventative: u64, n_immune: u64) -> Option<Self> {
        let p = Self {
            n_doomed,
            n_causal,
            n_preventative,
            n_immune,
        };
        (p.total() > 0).then_some(p)
    }

    /// Tallies realized potential-outcome pairs `(Y^{a=0}, Y^{a=1})`.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut p = Self {
            n_doomed: 0,
            n_causal: 0,
            n_preventative: 0,
            n_immune: 0,
        };
        for pair in outcomes {
            match pair {
                (true, true) => p.n_doomed += 1,
                (false, true) => p.n_causal += 1,
                (true, false) => p.n_preventative += 1,
                (false, false) => p.n_immune += 1,
            }
        }
        p
    }

    pub fn total(&self) -> u64 {
        self.n_doomed + self.n_causal + self.n_preventative + self.n_immune
    }

    fn cases0(&self) -> u64 {
        self.n_doomed + self.n_preventative
    }

    fn cases1(&self) -> u64 {
        self.n_doomed + self.n_causal
    }

    pub fn p0(&self) -> Exact {
        exact(self.cases0(), self.total()).expect("nonempty population")
    }

    pub fn p1(&self) -> Exact {
        exact(self.cases1(), self.total()).expect("nonempty population")
    }

    pub fn g(&self) -> Option<Exact> {
        exact(self.n_doomed, self.cases0())
    }

    pub fn h(&self) -> Option<Exact> {
        exact(self.n_immune, self.n_immune + self.n_causal)
    }

    pub fn i(&self) -> Option<Exact> {
        exact(self.n_doomed, self.cases1())
    }

    pub fn j(&self) -> Option<Exact> {
        exact(self.n_immune, self.n_immune + self.n_preventative)
    }

    pub fn rr_minus(&self) -> Option<Exact> {
        exact(self.cases1(), self.cases0())
    }

    pub fn rr_plus(&self) -> Option<Exact> {
        let n = self.total();
        exact(n - self.cases1(), n - self.cases0())
    }

    pub fn rd(&self) -> Exact {
        self.p1() - self.p0()
    }

    pub fn recode_outcome(&self) -> Self {
        Self {
            n_doomed: self.n_immune,
            n_causal: self.n_preventative,
            n_preventative: self.n_causal,
            n_immune: self.n_doomed,
        }
    }

    pub fn recode_exposure(&self) -> Self {
        Self {
            n_causal: self.n_preventative,
            n_preventative: self.n_causal,
            ..*self
        }
    }

    pub fn risks(&self) -> RiskPair {
        RiskPair {
            p0: to_f64(&self.p0()),
            p1: to_f64(&self.p1()),
        }
    }

    pub fn distribution(&self) -> ResponseTypeDistribution {
        let n = self.total() as f64;
        ResponseTypeDistribution {
            doomed: self.n_doomed as f64 / n,
            causal: self.n_causal as f64 / n,
            preventative: self.n_preventative as f64 / n,
            immune: self.n_immune as f64 / n,
        }
    }

    fn add(&self, other: &Self) -> Self {
        Self {
            n_doomed: self.n_doomed + other.n_doomed,
            n_causal: self.n_causal + other.n_causal,
            n_preventative: self.n_preventative + other.n_preventative,
            n_immune: self.n_immune + other.n_immune,
        }
    }
}

/// Every composition of every `N` in `1..=n_max` into four ordered parts,
/// each exactly once. There are `C(N+3, 3)` populations of size `N`.
pub fn enumerate_populations(n_max: u64) -> impl Iterator<Item = FinitePopulation> {
    (1..=n_max).flat_map(populations_of_size)
}

pub fn populations_of_size(n: u64) -> impl Iterator<Item = FinitePopulation> {
    (0..=n).flat_map(move |d| {
        (0..=n - d).flat_map(move |c| {
            (0..=n - d - c).map(move |p| FinitePopulation {
                n_doomed: d,
                n_causal: c,
                n_preventative: p,
                n_immune: n - d - c - p,
            })
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Proposition {
    /// G = RR(−) under non-increasing monotonicity.
    P1,
    /// Shared (G, H) and non-increasing monotonicity give shared RR(−).
    P2,
    /// Shared (G, H) without monotonicity: RR(−) transport bias is (F−1)(1−H).
    P3,
    /// H = RR(+) under non-decreasing monotonicity.
    P4,
    /// Shared (G, H) and non-decreasing monotonicity give shared RR(+).
    P5,
    /// Shared (G, H) without monotonicity: RR(+) transport bias is (1−F')(1−G).
    P6,
    /// Attribute mechanisms make G (or J) equal between populations.
    P7,
    /// Shared RR(+) and a rare outcome give nearly shared RD.
    P8,
    Collapsibility,
    SymmetryOutcome,
    SymmetryExposure,
}

impl Proposition {
    pub const ALL: [Proposition; 11] = [
        Proposition::P1,
        Proposition::P2,
        Proposition::P3,
        Proposition::P4,
        Proposition::P5,
        Proposition::P6,
        Proposition::P7,
        Proposition::P8,
        Proposition::Collapsibility,
        Proposition::SymmetryOutcome,
        Proposition::SymmetryExposure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Proposition::P1 => "P1",
            Proposition::P2 => "P2",
            Proposition::P3 => "P3",
            Proposition::P4 => "P4",
            Proposition::P5 => "P5",
            Proposition::P6 => "P6",
            Proposition::P7 => "P7",
            Proposition::P8 => "P8",
            Proposition::Collapsibility => "collapsibility",
            Proposition::SymmetryOutcome => "symmetry-outcome",
            Proposition::SymmetryExposure => "symmetry-exposure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }
}

/// Deliberate violation of monotonicity used as a negative control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Every population in a non-increasing universe gets one causal individual.
    InjectCausal,
    /// Every population in a non-decreasing universe gets one preventative individual.
    InjectPreventative,
}

/// Enumeration bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Universe {
    /// Largest population size for single-population checks.
    pub max_population: u64,
    /// Pairs are enumerated exhaustively up to this population size.
    pub max_pair_population: u64,
    /// Additional seeded pairs drawn with sizes in
    /// `(max_pair_population, max_population]`.
    pub sampled_pairs: u64,
    /// Population size bound for two-stratum collapsibility checks.
    pub max_stratum_population: u64,
    /// Population size bound for attribute-mechanism rosters.
    pub max_mechanism_population: u64,
    /// Rare-outcome threshold for P8 as `numerator / denominator`.
    pub rare_risk: (u64, u64),
    pub seed: u64,
    pub perturbation: Option<Perturbation>,
}

impl Default for Universe {
    fn default() -> Self {
        Self {
            max_population: 60,
            max_pair_population: 24,
            sampled_pairs: 10_000,
            max_stratum_population: 8,
            max_mechanism_population: 12,
            rare_risk: (1, 5),
            seed: 1,
            perturbation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s: FinitePopulation,
    pub t: Option<FinitePopulation>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail { witness: Witness },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionCheck {
    pub proposition: Proposition,
    pub universe: String,
    /// Number of populations (or pairs) examined.
    pub checked: u64,
    pub outcome: CheckOutcome,
}

impl PropositionCheck {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, CheckOutcome::Pass)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            CheckOutcome::Pass => None,
            CheckOutcome::Fail { witness } => Some(witness),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationManifest {
    pub seed: u64,
    pub universe: Universe,
    pub checks: Vec<PropositionCheck>,
    pub all_passed: bool,
}

pub fn verify_all(universe: &Universe) -> VerificationManifest {
    verify_many(&Proposition::ALL, universe)
}

pub fn verify_many(props: &[Proposition], universe: &Universe) -> VerificationManifest {
    let checks: Vec<_> = props.iter().map(|&p| verify(p, universe)).collect();
    VerificationManifest {
        seed: universe.seed,
        universe: universe.clone(),
        all_passed: checks.iter().all(PropositionCheck::passed),
        checks,
    }
}

pub fn verify(proposition: Proposition, universe: &Universe) -> PropositionCheck {
    let (checked, failure, description) = match proposition {
        Proposition::P1 => identification_check(universe, Direction::Decrease),
        Proposition::P4 => identification_check(universe, Direction::Increase),
        Proposition::P2 => transport_check(universe, Direction::Decrease),
        Proposition::P5 => transport_check(universe, Direction::Increase),
        Proposition::P3 => bias_check(universe, Direction::Decrease),
        Proposition::P6 => bias_check(universe, Direction::Increase),
        Proposition::P7 => {
            let r = crate::mechanism::verify_shared_parameters(universe.max_mechanism_population);
            (r.checked, r.witness, r.description)
        }
        Proposition::P8 => rare_outcome_check(universe),
        Proposition::Collapsibility => collapsibility_check(universe),
        Proposition::SymmetryOutcome => symmetry_check(universe, true),
        Proposition::SymmetryExposure => symmetry_check(universe, false),
    };
    PropositionCheck {
        proposition,
        universe: description,
        checked,
        outcome: match failure {
            None => CheckOutcome::Pass,
            Some(witness) => CheckOutcome::Fail { witness },
        },
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Non-increasing: no causal individuals.
    Decrease,
    /// Non-decreasing: no preventative individuals.
    Increase,
}

/// Number of causal (decrease) or preventative (increase) individuals every
/// population in the universe carries.
fn violators(universe: &Universe, dir: Direction) -> u64 {
    match (universe.perturbation, dir) {
        (Some(Perturbation::InjectCausal), Direction::Decrease) => 1,
        (Some(Perturbation::InjectPreventative), Direction::Increase) => 1,
        _ => 0,
    }
}

/// Populations of size `<= n_max` monotone in `dir`, or carrying exactly one
/// violator under a perturbation.
fn monotone_populations(n_max: u64, dir: Direction, extra: u64) -> Vec<FinitePopulation> {
    enumerate_populations(n_max)
        .filter(|p| match dir {
            Direction::Decrease => p.n_causal == extra,
            Direction::Increase => p.n_preventative == extra,
        })
        .collect()
}

fn perturbation_note(universe: &Universe, dir: Direction) -> &'static str {
    match violators(universe, dir) {
        0 => "",
        _ => ", one violator injected",
    }
}

type CheckResult = (u64, Option<Witness>, String);

fn identification_check(universe: &Universe, dir: Direction) -> CheckResult {
    let extra = violators(universe, dir);
    let pops = monotone_populations(universe.max_population, dir, extra);
    let relevant: Vec<_> = pops
        .into_iter()
        .filter_map(|p| {
            let (identified, counted) = match dir {
                Direction::Decrease => (p.rr_minus()?, p.g()?),
                Direction::Increase => (p.rr_plus()?, p.h()?),
            };
            Some((p, identified, counted))
        })
        .collect();
    let witness = relevant.par_iter().find_map_first(|(p, identified, counted)| {
        (identified != counted).then(|| Witness {
            s: *p,
            t: None,
            detail: match dir {
                Direction::Decrease => format!("RR(-) = {identified} but G = {counted}"),
                Direction::Increase => format!("RR(+) = {identified} but H = {counted}"),
            },
        })
    });
    let kind = match dir {
        Direction::Decrease => "non-increasing",
        Direction::Increase => "non-decreasing",
    };
    (
        relevant.len() as u64,
        witness,
        format!(
            "all {kind} populations with N <= {}{}",
            universe.max_population,
            perturbation_note(universe, dir)
        ),
    )
}

/// Groups populations by exact `(G, H)`.
fn group_by_cost(pops: impl IntoIterator<Item = FinitePopulation>) -> Vec<Vec<FinitePopulation>> {
    let mut groups: HashMap<(Option<Exact>, Option<Exact>), Vec<FinitePopulation>> = HashMap::new();
    for p in pops {
        groups.entry((p.g(), p.h())).or_default().push(p);
    }
    let mut out: Vec<_> = groups.into_values().filter(|g| g.len() > 1).collect();
    for g in &mut out {
        g.sort();
    }
    out.sort();
    out
}

fn transported_ratio(p: &FinitePopulation, dir: Direction) -> Option<Exact> {
    match dir {
        Direction::Decrease => p.rr_minus(),
        Direction::Increase => p.rr_plus(),
    }
}

fn transport_check(universe: &Universe, dir: Direction) -> CheckResult {
    let extra = violators(universe, dir);
    let pops: Vec<_> = monotone_populations(universe.max_pair_population, dir, extra)
        .into_iter()
        .filter(|p| transported_ratio(p, dir).is_some())
        .collect();
    let groups = group_by_cost(pops);
    let compare = |s: &FinitePopulation, t: &FinitePopulation| -> Option<Witness> {
        let (rs, rt) = (transported_ratio(s, dir)?, transported_ratio(t, dir)?);
        (rs != rt).then(|| Witness {
            s: *s,
            t: Some(*t),
            detail: format!(
                "shared (G, H) but {} differs: {rs} vs {rt}",
                if dir == Direction::Decrease { "RR(-)" } else { "RR(+)" }
            ),
        })
    };
    let exhaustive: Vec<(u64, Option<Witness>)> = groups
        .par_iter()
        .map(|grp| {
            let mut n = 0;
            for (k, s) in grp.iter().enumerate() {
                for t in &grp[k + 1..] {
                    n += 1;
                    if let Some(w) = compare(s, t) {
                        return (n, Some(w));
                    }
                }
            }
            (n, None)
        })
        .collect();
    let mut checked: u64 = exhaustive.iter().map(|(n, _)| n).sum();
    let mut witness = exhaustive.into_iter().find_map(|(_, w)| w);

    if witness.is_none() && universe.sampled_pairs > 0 && universe.max_population > universe.max_pair_population {
        let mut rng = ChaCha8Rng::seed_from_u64(universe.seed);
        for _ in 0..universe.sampled_pairs {
            let (s, t) = sample_shared_pair(&mut rng, universe, dir, extra);
            checked += 1;
            if let Some(w) = compare(&s, &t) {
                witness = Some(w);
                break;
            }
        }
    }
    let sampled = if universe.max_population > universe.max_pair_population {
        format!(
            " plus {} seeded pairs up to N = {}",
            universe.sampled_pairs, universe.max_population
        )
    } else {
        String::new()
    };
    (
        checked,
        witness,
        format!(
            "all pairs sharing exact (G, H) with N <= {}{}{}",
            universe.max_pair_population,
            sampled,
            perturbation_note(universe, dir)
        ),
    )
}

/// Draws a monotone population `s` with size above the exhaustive bound and
/// builds `t` with the same exact `(G, H)` by scaling the reduced
/// doomed/preventative (or immune/causal) ratio.
fn sample_shared_pair(
    rng: &mut ChaCha8Rng,
    universe: &Universe,
    dir: Direction,
    extra: u64,
) -> (FinitePopulation, FinitePopulation) {
    use num_integer::Integer;
    let lo = universe.max_pair_population + 1;
    let hi = universe.max_population;
    loop {
        let n = rng.random_range(lo..=hi);
        // Split n - extra among the three free types.
        let free = n - extra;
        let a = rng.random_range(0..=free);
        let b = rng.random_range(0..=free - a);
        let c = free - a - b;
        let s = match dir {
            Direction::Decrease => FinitePopulation::new(a, extra, b, c),
            Direction::Increase => FinitePopulation::new(a, b, extra, c),
        };
        let Some(s) = s else { continue };
        // The ratio that carries the non-monotone parameter must be scaled
        // with `extra` fixed, so only the monotone parameter's pair is scaled.
        let (x, y) = match dir {
            Direction::Decrease => (s.n_doomed, s.n_preventative),
            Direction::Increase => (s.n_immune, s.n_causal),
        };
        if x + y == 0 {
            continue;
        }
        let gcd = x.gcd(&y);
        let (x, y) = (x / gcd, y / gcd);
        let keep = match dir {
            Direction::Decrease => s.n_immune,
            Direction::Increase => s.n_doomed,
        };
        let room = hi.saturating_sub(keep + extra);
        let max_mult = room / (x + y);
        if max_mult == 0 {
            continue;
        }
        let m = rng.random_range(1..=max_mult);
        let t = match dir {
            Direction::Decrease => FinitePopulation::new(m * x, extra, m * y, keep),
            Direction::Increase => FinitePopulation::new(keep, m * y, extra, m * x),
        };
        if let Some(t) = t {
            if transported_ratio(&s, dir).is_some() && transported_ratio(&t, dir).is_some() {
                return (s, t);
            }
        }
    }
}

/// Exact bias of transporting RR(−) (decrease) or RR(+) (increase) between
/// two populations sharing `(G, H)`, and the closed form it must equal.
fn transport_bias(s: &FinitePopulation, t: &FinitePopulation, dir: Direction) -> Option<(Exact, Exact, Exact)> {
    let one = Exact::one();
    let (s0, s1, t0, t1) = (s.p0(), s.p1(), t.p0(), t.p1());
    match dir {
        Direction::Decrease => {
            let h = s.h()?;
            if s0.is_zero() {
                return None;
            }
            let f = &t0 / &s0;
            let naive = &t0 * &s1 / &s0;
            let bias = naive - &t1;
            let closed = (&f - &one) * (&one - h);
            Some((bias, closed, f))
        }
        Direction::Increase => {
            let g = s.g()?;
            let (u0, u1, v0) = (&one - &s0, &one - &s1, &one - &t0);
            if u0.is_zero() {
                return None;
            }
            let f = &v0 / &u0;
            let naive = &one - &v0 * &u1 / &u0;
            let bias = naive - &t1;
            let closed = (&one - &f) * (&one - g);
            Some((bias, closed, f))
        }
    }
}

fn bias_check(universe: &Universe, dir: Direction) -> CheckResult {
    let pops: Vec<_> = enumerate_populations(universe.max_pair_population)
        .filter(|p| p.g().is_some() && p.h().is_some())
        .collect();
    let groups = group_by_cost(pops);
    let one = Exact::one();
    let results: Vec<(u64, Option<Witness>)> = groups
        .par_iter()
        .map(|grp| {
            let mut n = 0;
            for s in grp {
                for t in grp {
                    if s == t {
                        continue;
                    }
                    let Some((bias, closed, f)) = transport_bias(s, t, dir) else {
                        continue;
                    };
                    n += 1;
                    let fail = |detail: String| Witness {
                        s: *s,
                        t: Some(*t),
                        detail,
                    };
                    if bias != closed {
                        return (n, Some(fail(format!("bias {bias} != closed form {closed}"))));
                    }
                    // Sign: with the non-monotone parameter strictly below one,
                    // the bias has the sign of F - 1 (decrease) or 1 - F'
                    // (increase) and vanishes only when F = 1.
                    let slack = match dir {
                        Direction::Decrease => &one - s.h().unwrap(),
                        Direction::Increase => &one - s.g().unwrap(),
                    };
                    let expected_sign = if slack.is_zero() {
                        0
                    } else {
                        let d = match dir {
                            Direction::Decrease => &f - &one,
                            Direction::Increase => &one - &f,
                        };
                        sign(&d)
                    };
                    if sign(&bias) != expected_sign {
                        return (n, Some(fail(format!("bias {bias} has the wrong sign for F = {f}"))));
                    }
                }
            }
            (n, None)
        })
        .collect();
    let checked = results.iter().map(|(n, _)| n).sum();
    let witness = results.into_iter().find_map(|(_, w)| w);
    (
        checked,
        witness,
        format!(
            "all ordered pairs sharing exact (G, H) with N <= {}",
            universe.max_pair_population
        ),
    )
}

fn sign(q: &Exact) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

fn rare_outcome_check(universe: &Universe) -> CheckResult {
    let (rn, rd) = universe.rare_risk;
    let r = exact(rn, rd).expect("nonzero denominator");
    let pops: Vec<_> = enumerate_populations(universe.max_pair_population)
        .filter(|p| p.p0() <= r && p.p1() <= r)
        .collect();
    let mut groups: HashMap<Exact, Vec<FinitePopulation>> = HashMap::new();
    for p in pops {
        if let Some(rr) = p.rr_plus() {
            groups.entry(rr).or_default().push(p);
        }
    }
    let mut groups: Vec<_> = groups.into_values().filter(|g| g.len() > 1).collect();
    for g in &mut groups {
        g.sort();
    }
    groups.sort();
    let two = Exact::from_integer(BigInt::from(2));
    let results: Vec<(u64, Option<Witness>)> = groups
        .par_iter()
        .map(|grp| {
            let mut n = 0;
            for (k, s) in grp.iter().enumerate() {
                for t in &grp[k + 1..] {
                    n += 1;
                    let diff = s.rd() - t.rd();
                    let remainder = t.p0() * s.p1() - s.p0() * t.p1();
                    let max_risk = [s.p0(), s.p1(), t.p0(), t.p1()].into_iter().max().unwrap();
                    let bound = &two * &max_risk * &max_risk;
                    if diff != remainder || diff.abs() > bound {
                        return (
                            n,
                            Some(Witness {
                                s: *s,
                                t: Some(*t),
                                detail: format!("RD_s - RD_t = {diff}, remainder {remainder}, bound {bound}"),
                            }),
                        );
                    }
                }
            }
            (n, None)
        })
        .collect();
    let checked = results.iter().map(|(n, _)| n).sum();
    let witness = results.into_iter().find_map(|(_, w)| w);
    (
        checked,
        witness,
        format!(
            "all pairs sharing exact RR(+) with risks <= {rn}/{rd} and N <= {}",
            universe.max_pair_population
        ),
    )
}

fn collapsibility_check(universe: &Universe) -> CheckResult {
    let pops: Vec<_> = enumerate_populations(universe.max_stratum_population).collect();
    let params: [fn(&FinitePopulation) -> Option<Exact>; 4] =
        [|p| p.g(), |p| p.h(), |p| p.i(), |p| p.j()];
    // Size of each parameter's conditioning event.
    let events: [fn(&FinitePopulation) -> u64; 4] = [
        |p| p.n_doomed + p.n_preventative,
        |p| p.n_immune + p.n_causal,
        |p| p.n_doomed + p.n_causal,
        |p| p.n_immune + p.n_preventative,
    ];
    let names = ["G", "H", "I", "J"];
    let results: Vec<(u64, Option<Witness>)> = pops
        .par_iter()
        .map(|a| {
            let mut n = 0;
            for b in &pops {
                n += 1;
                let pooled = a.add(b);
                for k in 0..4 {
                    let Some(marginal) = params[k](&pooled) else { continue };
                    let mass = events[k](&pooled);
                    let mut weighted = Exact::zero();
                    for v in [a, b] {
                        if let Some(pv) = params[k](v) {
                            weighted += exact(events[k](v), mass).unwrap() * pv;
                        }
                    }
                    if weighted != marginal {
                        return (
                            n,
                            Some(Witness {
                                s: *a,
                                t: Some(*b),
                                detail: format!("{}: weighted {weighted} != marginal {marginal}", names[k]),
                            }),
                        );
                    }
                }
            }
            (n, None)
        })
        .collect();
    let checked = results.iter().map(|(n, _)| n).sum();
    let witness = results.into_iter().find_map(|(_, w)| w);
    (
        checked,
        witness,
        format!(
            "all ordered two-stratum pairs with N <= {}",
            universe.max_stratum_population
        ),
    )
}

fn symmetry_check(universe: &Universe, outcome: bool) -> CheckResult {
    let pops: Vec<_> = enumerate_populations(universe.max_population).collect();
    let witness = pops.par_iter().find_map_first(|p| {
        let ok = if outcome {
            let r = p.recode_outcome();
            r.g() == p.h() && r.h() == p.g() && r.i() == p.j() && r.j() == p.i()
        } else {
            let r = p.recode_exposure();
            r.g() == p.i() && r.h() == p.j() && r.i() == p.g() && r.j() == p.h()
        };
        (!ok).then(|| Witness {
            s: *p,
            t: None,
            detail: "recoding does not permute the COST parameters".into(),
        })
    });
    (
        pops.len() as u64,
        witness,
        format!("all populations with N <= {}", universe.max_population),
    )
}
