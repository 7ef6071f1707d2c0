//! Worked examples recomputed by an independent counting oracle.
//!
//! The oracle here builds explicit lists of individuals `(y0, y1)` and
//! counts; it shares no code with the library's own enumeration engine.

use approx::assert_abs_diff_eq;
use num_rational::Ratio;
use num_traits::Signed;

use cost_core::mechanism::{
    assign_u_strata, build_population, check_conditions, effect_map, AttributeCondition, BuildMode, CellEffect,
    Condition, ConditionSet, MechanismSpec, PopulationSpec,
};
use cost_core::meta::{pool_studies, rd_substitution_check, scale_deviations, switched_proportion, PooledScales, Scale, StudyRecord};
use cost_core::transport::{compare_measures, predict_introduce, predict_remove, transport_rr};
use cost_core::*;

type Q = Ratio<i64>;

/// Individuals as `(y0, y1)` built from integer counts of each type.
struct People(Vec<(bool, bool)>);

impl People {
    fn of(doomed: i64, causal: i64, preventative: i64, immune: i64) -> Self {
        let mut v = Vec::new();
        v.extend(std::iter::repeat_n((true, true), doomed as usize));
        v.extend(std::iter::repeat_n((false, true), causal as usize));
        v.extend(std::iter::repeat_n((true, false), preventative as usize));
        v.extend(std::iter::repeat_n((false, false), immune as usize));
        People(v)
    }

    fn pr(&self, event: impl Fn(&(bool, bool)) -> bool, given: impl Fn(&(bool, bool)) -> bool) -> Option<Q> {
        let den = self.0.iter().filter(|p| given(p)).count() as i64;
        let num = self.0.iter().filter(|p| given(p) && event(p)).count() as i64;
        (den > 0).then(|| Q::new(num, den))
    }

    fn p0(&self) -> Q {
        self.pr(|p| p.0, |_| true).unwrap()
    }
    fn p1(&self) -> Q {
        self.pr(|p| p.1, |_| true).unwrap()
    }
    fn g(&self) -> Option<Q> {
        self.pr(|p| p.1, |p| p.0)
    }
    fn h(&self) -> Option<Q> {
        self.pr(|p| !p.1, |p| !p.0)
    }
    fn i(&self) -> Option<Q> {
        self.pr(|p| p.0, |p| p.1)
    }
    fn j(&self) -> Option<Q> {
        self.pr(|p| !p.0, |p| !p.1)
    }

    /// Counts of (doomed, causal, preventative, immune) after mapping each
    /// individual.
    fn map(&self, f: impl Fn((bool, bool)) -> (bool, bool)) -> Self {
        People(self.0.iter().map(|&p| f(p)).collect())
    }

    fn counts(&self) -> [i64; 4] {
        let mut c = [0; 4];
        for &(y0, y1) in &self.0 {
            c[match (y0, y1) {
                (true, true) => 0,
                (false, true) => 1,
                (true, false) => 2,
                (false, false) => 3,
            }] += 1;
        }
        c
    }
}

fn f(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn dist(d: f64, c: f64, p: f64, i: f64) -> ResponseTypeDistribution {
    ResponseTypeDistribution::new(d, c, p, i).unwrap()
}

fn v(q: Quantity) -> f64 {
    q.value().expect("defined")
}

#[test]
fn counts_to_risks_matches_nonmonotone_population() {
    // 10000 people: 50 untreated events, 102 treated events.
    let pop = People::of(50, 52, 0, 9898);
    let r = risks_from_counts(ArmCounts::new(102, 10_000).unwrap(), ArmCounts::new(50, 10_000).unwrap()).unwrap();
    assert_eq!(r.p0, f(pop.p0()));
    assert_eq!(r.p1, f(pop.p1()));
}

#[test]
fn distribution_to_risks() {
    let pop = People::of(10, 5, 2, 83);
    let r = risks_from_distribution(dist(0.1, 0.05, 0.02, 0.83));
    assert_abs_diff_eq!(r.p0, f(pop.p0()), epsilon = 1e-15);
    assert_abs_diff_eq!(r.p1, f(pop.p1()), epsilon = 1e-15);
    assert_eq!(pop.p0(), Q::new(12, 100));
    assert_eq!(pop.p1(), Q::new(15, 100));

    let pop = People::of(2, 1, 0, 97);
    let r = risks_from_distribution(dist(0.02, 0.01, 0.0, 0.97));
    assert_abs_diff_eq!(r.p0, f(pop.p0()), epsilon = 1e-15);
    assert_abs_diff_eq!(r.p1, f(pop.p1()), epsilon = 1e-15);
}

#[test]
fn cost_parameters_of_worked_distributions() {
    for (counts, d) in [
        ([10, 5, 2, 83], dist(0.1, 0.05, 0.02, 0.83)),
        ([2, 1, 0, 97], dist(0.02, 0.01, 0.0, 0.97)),
    ] {
        let pop = People::of(counts[0], counts[1], counts[2], counts[3]);
        let intro = cost_introduce(d);
        let rem = cost_remove(d);
        assert_abs_diff_eq!(v(intro.g), f(pop.g().unwrap()), epsilon = 1e-12);
        assert_abs_diff_eq!(v(intro.h), f(pop.h().unwrap()), epsilon = 1e-12);
        assert_abs_diff_eq!(v(rem.i), f(pop.i().unwrap()), epsilon = 1e-12);
        assert_abs_diff_eq!(v(rem.j), f(pop.j().unwrap()), epsilon = 1e-12);
    }
    let pop = People::of(10, 5, 2, 83);
    assert_eq!(pop.g(), Some(Q::new(10, 12)));
    assert_eq!(pop.h(), Some(Q::new(83, 88)));
    assert_eq!(pop.i(), Some(Q::new(10, 15)));
    assert_eq!(pop.j(), Some(Q::new(83, 85)));
    assert_abs_diff_eq!(f(pop.h().unwrap()), 0.94318, epsilon = 1e-5);
    assert_abs_diff_eq!(f(pop.j().unwrap()), 0.9765, epsilon = 1e-4);

    let pop = People::of(2, 1, 0, 97);
    assert_eq!(pop.g(), Some(Q::from_integer(1)));
    assert_eq!(pop.h(), Some(Q::new(97, 98)));
    assert_eq!(pop.i(), Some(Q::new(2, 3)));
    assert_eq!(pop.j(), Some(Q::from_integer(1)));
}

#[test]
fn outcome_recoding_swaps_parameters() {
    let pop = People::of(10, 5, 2, 83);
    let flipped = pop.map(|(a, b)| (!a, !b));
    assert_eq!(flipped.counts(), [83, 2, 5, 10]);
    assert_eq!(flipped.g(), pop.h());
    assert_eq!(flipped.h(), pop.g());

    let d = recode_outcome(dist(0.1, 0.05, 0.02, 0.83));
    assert_eq!((d.doomed, d.causal, d.preventative, d.immune), (0.83, 0.02, 0.05, 0.1));
    let c = cost_introduce(d);
    assert_abs_diff_eq!(v(c.g), f(flipped.g().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(v(c.h), f(flipped.h().unwrap()), epsilon = 1e-12);

    let pop = People::of(2, 1, 0, 97);
    let flipped = pop.map(|(a, b)| (!a, !b));
    assert_eq!(flipped.counts(), [97, 0, 1, 2]);
    assert_eq!(flipped.g(), pop.h());
    let d = recode_outcome(dist(0.02, 0.01, 0.0, 0.97));
    assert_eq!((d.doomed, d.causal, d.preventative, d.immune), (0.97, 0.0, 0.01, 0.02));
}

#[test]
fn exposure_recoding_maps_to_removal_parameters() {
    let pop = People::of(10, 5, 2, 83);
    let swapped = pop.map(|(a, b)| (b, a));
    assert_eq!(swapped.counts(), [10, 2, 5, 83]);
    assert_eq!(swapped.g(), pop.i());
    assert_eq!(swapped.h(), pop.j());
    let c = cost_introduce(recode_exposure(dist(0.1, 0.05, 0.02, 0.83)));
    assert_abs_diff_eq!(v(c.g), f(pop.i().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(v(c.h), f(pop.j().unwrap()), epsilon = 1e-12);

    let pop = People::of(2, 1, 0, 97);
    let swapped = pop.map(|(a, b)| (b, a));
    assert_eq!(swapped.counts(), [2, 0, 1, 97]);
    let d = recode_exposure(dist(0.02, 0.01, 0.0, 0.97));
    assert_eq!((d.doomed, d.causal, d.preventative, d.immune), (0.02, 0.0, 0.01, 0.97));
}

#[test]
fn collapsibility_over_pooled_mixture() {
    // 200 people, 100 per stratum.
    let v1 = People::of(10, 5, 2, 83);
    let v2 = People::of(30, 10, 5, 55);
    let mut all = v1.0.clone();
    all.extend(&v2.0);
    let pooled = People(all);
    let strata = [
        CollapsibilityStratum {
            label: "v1".into(),
            dist: dist(0.1, 0.05, 0.02, 0.83),
            prevalence: 0.5,
        },
        CollapsibilityStratum {
            label: "v2".into(),
            dist: dist(0.3, 0.1, 0.05, 0.55),
            prevalence: 0.5,
        },
    ];
    let rep = collapse_cost(&strata).unwrap();
    assert_abs_diff_eq!(v(rep.introduce.g), f(pooled.g().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(v(rep.introduce.h), f(pooled.h().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(v(rep.remove.i), f(pooled.i().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(v(rep.remove.j), f(pooled.j().unwrap()), epsilon = 1e-12);
    let formula = (0.5 * 0.12 * (0.1 / 0.12) + 0.5 * 0.35 * (0.3 / 0.35)) / (0.5 * 0.12 + 0.5 * 0.35);
    assert_abs_diff_eq!(v(rep.introduce.g), formula, epsilon = 1e-12);
    assert_eq!(pooled.g(), Some(Q::new(40, 47)));

    // Equal g = 4/5 in both strata with different baseline risks.
    let a = People::of(4, 10, 1, 85);
    let b = People::of(32, 10, 8, 50);
    let mut all = a.0.clone();
    all.extend(&b.0);
    assert_eq!(a.g(), b.g());
    assert_ne!(a.p0(), b.p0());
    assert_eq!(People(all).g(), Some(Q::new(4, 5)));
}

#[test]
fn identification_examples() {
    // causal = 0 and doomed / (doomed + preventative) = 1/2.
    let pop = People::of(5, 0, 5, 90);
    assert_eq!((pop.p0(), pop.p1()), (Q::new(1, 10), Q::new(1, 20)));
    let r = RiskPair::new(0.10, 0.05).unwrap();
    assert_abs_diff_eq!(identify_g_under_decrease(r).unwrap(), f(pop.g().unwrap()), epsilon = 1e-12);
    assert_abs_diff_eq!(identify_j_under_decrease(r).unwrap(), f(pop.j().unwrap()), epsilon = 1e-12);
    assert_eq!(pop.j(), Some(Q::new(90, 95)));

    // preventative = 0: doomed 0.1, causal 0.45, immune 0.45.
    let pop = People::of(10, 45, 0, 45);
    assert_eq!((pop.p0(), pop.p1()), (Q::new(1, 10), Q::new(55, 100)));
    let r = RiskPair::new(0.1, 0.55).unwrap();
    assert_abs_diff_eq!(identify_h_under_increase(r).unwrap(), f(pop.h().unwrap()), epsilon = 1e-12);
    assert_eq!(pop.h(), Some(Q::new(1, 2)));

    let pop = People::of(2, 1, 0, 97);
    let r = RiskPair::new(0.02, 0.03).unwrap();
    assert_abs_diff_eq!(identify_i_under_increase(r).unwrap(), f(pop.i().unwrap()), epsilon = 1e-12);
}

#[test]
fn removal_prediction_examples() {
    // Target with t0 = 0.10 under non-decreasing effects: i = 2/3.
    let pop = People::of(10, 5, 0, 85);
    assert_eq!(pop.i(), Some(Q::new(2, 3)));
    assert_eq!(pop.p1(), Q::new(15, 100));
    let r = predict_remove(CostRemove::new(2.0 / 3.0, 1.0).unwrap(), 0.15).unwrap();
    assert_abs_diff_eq!(r.predicted_risk, f(pop.p0()), epsilon = 1e-12);

    // Mirror of the nonmonotone scenario arithmetic: i = 0.24, t1 = 0.05.
    let pop = People::of(12, 38, 0, 950);
    assert_eq!(pop.i(), Some(Q::new(24, 100)));
    let r = predict_remove(CostRemove::new(0.24, 1.0).unwrap(), 0.05).unwrap();
    assert_abs_diff_eq!(r.predicted_risk, f(pop.p0()), epsilon = 1e-12);
    assert_abs_diff_eq!(r.predicted_risk, 0.012, epsilon = 1e-12);
}

#[test]
fn transport_under_decrease() {
    // Study: g = 1/2 and no causal type. Target with t0 = 0.30 sharing g.
    let target = People::of(15, 0, 15, 70);
    assert_eq!(target.p0(), Q::new(3, 10));
    let r = transport_rr(RiskPair::new(0.10, 0.05).unwrap(), 0.30, MonotonicityAssumption::NonIncreasing).unwrap();
    assert_abs_diff_eq!(r.predicted_risk, f(target.p1()), epsilon = 1e-12);
    assert_abs_diff_eq!(r.predicted_risk, 0.15, epsilon = 1e-12);
}

#[test]
fn bias_cell() {
    // f = 10, h = 0.99: the closed form gives 9 * 0.01.
    let cells = bias_surface(0.05, 0.005, &[0.99], &[10.0]).unwrap();
    assert_abs_diff_eq!(cells[0].bias, 9.0 * 0.01, epsilon = 1e-12);
    let cells = bias_surface(0.3, 0.01, &[0.9], &[0.5, 1.0, 2.0, 4.0]).unwrap();
    for w in cells.windows(2) {
        assert!(w[1].bias > w[0].bias);
    }
}

fn xspec(pr_x: &[(&str, f64, f64)], family: AttributeCondition) -> MechanismSpec {
    MechanismSpec {
        conditions: ConditionSet::single(family),
        joint_effect: CellEffect::None,
        populations: pr_x
            .iter()
            .map(|&(id, x, fr)| PopulationSpec {
                id: id.into(),
                pr_x: Some(x),
                pr_z: None,
                frailty: fr,
            })
            .collect(),
        mode: BuildMode::Exhaustive { max_denominator: 100 },
    }
}

/// Counts realized outcomes of one population straight from the tables.
fn realized(pop: &cost_core::mechanism::MechanismPopulation, id: &str) -> People {
    People(
        pop.individuals
            .iter()
            .filter(|i| i.population == id)
            .map(|i| {
                let (x, z) = (i.x.unwrap_or(false), i.z.unwrap_or(false));
                (i.y.get(false, x, z), i.y.get(true, x, z))
            })
            .collect(),
    )
}

#[test]
fn mechanism_shared_g_and_j() {
    let pop = build_population(&xspec(&[("s", 0.3, 0.1), ("t", 0.3, 0.6)], AttributeCondition::C3)).unwrap();
    let (s, t) = (realized(&pop, "s"), realized(&pop, "t"));
    assert_ne!(s.p0(), t.p0());
    assert_eq!(s.g(), Some(Q::new(7, 10)));
    assert_eq!(t.g(), Some(Q::new(7, 10)));

    let pop = build_population(&xspec(&[("s", 0.3, 0.2), ("t", 0.3, 0.5)], AttributeCondition::C4)).unwrap();
    let (s, t) = (realized(&pop, "s"), realized(&pop, "t"));
    assert_eq!(s.j(), t.j());
    assert_eq!(s.j(), Some(Q::new(7, 10)));
}

#[test]
fn mechanism_mutations_are_detected() {
    let cs = ConditionSet::single(AttributeCondition::C3);
    let mut pop = build_population(&xspec(&[("s", 0.3, 0.5)], AttributeCondition::C3)).unwrap();
    let k = pop.individuals.iter().position(|i| i.x == Some(true)).unwrap();
    pop.individuals[k].y.set(true, true, false, true);
    let rep = check_conditions(&pop, &cs);
    assert_eq!(rep.failed(), vec![Condition::C3b]);

    // X = 1 exactly for the frail half.
    let mut pop = build_population(&xspec(&[("s", 0.5, 0.5)], AttributeCondition::C3)).unwrap();
    for ind in pop.individuals.iter_mut() {
        ind.x = Some(ind.y.get(false, false, false));
    }
    assert_eq!(check_conditions(&pop, &cs).failed(), vec![Condition::C3c]);
}

#[test]
fn u_strata_examples() {
    // X-only protective model: U = 1 exactly when X = 1.
    let pop = build_population(&xspec(&[("s", 0.3, 0.4)], AttributeCondition::C3)).unwrap();
    let people = realized(&pop, "s");
    let ux = pop.individuals.iter().filter(|i| i.x == Some(true)).count() as i64;
    let pr_u1 = Q::new(ux, pop.individuals.len() as i64);
    assert_eq!(pr_u1, Q::new(3, 10));
    assert_eq!(people.g(), Some(Q::from_integer(1) - pr_u1));
    let cs = ConditionSet::single(AttributeCondition::C3);
    let rep = assign_u_strata(&pop, "s", &effect_map(&cs, CellEffect::None), true).unwrap();
    assert_eq!(rep.probabilities[1], "3/10");
    assert!(rep.complement_identity_holds);

    // Mixed model: Pr(Z=1) = 1/10 gives U = 2; Pr(X=1) = 2/9 among Z = 0
    // gives Pr(U=1) = 9/10 * 2/9 = 1/5.
    let cs = ConditionSet {
        x: Some(AttributeCondition::C3),
        z: Some(AttributeCondition::C5),
    };
    let spec = MechanismSpec {
        conditions: cs,
        joint_effect: CellEffect::Harmful,
        populations: vec![PopulationSpec {
            id: "s".into(),
            pr_x: Some(2.0 / 9.0),
            pr_z: Some(0.1),
            frailty: 0.25,
        }],
        mode: BuildMode::Exhaustive { max_denominator: 100 },
    };
    let pop = build_population(&spec).unwrap();
    let people = realized(&pop, "s");
    let n = pop.individuals.len() as i64;
    let u1 = pop.individuals.iter().filter(|i| i.x == Some(true) && i.z == Some(false)).count() as i64;
    let u2 = pop.individuals.iter().filter(|i| i.z == Some(true)).count() as i64;
    assert_eq!(Q::new(u1, n), Q::new(1, 5));
    assert_eq!(Q::new(u2, n), Q::new(1, 10));
    assert_eq!(people.g(), Some(Q::new(4, 5)));
    assert_eq!(people.h(), Some(Q::new(9, 10)));
    let rep = assign_u_strata(&pop, "s", &effect_map(&cs, CellEffect::Harmful), true).unwrap();
    assert_eq!(rep.exact.g.as_deref(), Some("4/5"));
    assert_eq!(rep.exact.h.as_deref(), Some("9/10"));
}

fn study(id: &str, a: u64, n1: u64, c: u64, n0: u64) -> StudyRecord {
    StudyRecord::new(id, ArmCounts::new(a, n1).unwrap(), ArmCounts::new(c, n0).unwrap()).unwrap()
}

#[test]
fn pooled_rr_from_summed_counts() {
    let s = [study("A", 10, 100, 5, 100), study("B", 20, 200, 10, 200)];
    let p = pool_studies(&s, Scale::RrMinus, None).unwrap();
    assert_abs_diff_eq!(p.value, f(Q::new(30, 300) / Q::new(15, 300)), epsilon = 1e-12);
}

#[test]
fn equal_rr_plus_studies() {
    // Shared (g, h) = (1, 97/98) with baselines 0.02 and 0.10, 10^5 per arm.
    let h = Q::new(97, 98);
    let t1 = Q::from_integer(1) - (Q::from_integer(1) - Q::new(1, 10)) * h;
    let s_pred = predict_introduce(CostIntroduce::new(1.0, f(h)).unwrap(), 0.02).unwrap().predicted_risk;
    assert_abs_diff_eq!(s_pred, 0.03, epsilon = 1e-12);
    let t_pred = predict_introduce(CostIntroduce::new(1.0, f(h)).unwrap(), 0.10).unwrap().predicted_risk;
    assert_abs_diff_eq!(t_pred, f(t1), epsilon = 1e-12);
    // 0.10 -> 0.10918...; counts over 98000 per arm keep t1 integral.
    let n = 98_000i64;
    let t1_events = (t1 * n).to_integer();
    assert_eq!(t1 * n, Q::from_integer(t1_events));
    let studies = [
        study("s", 2_940, n as u64, 1_960, n as u64),
        study("t", t1_events as u64, n as u64, 9_800, n as u64),
    ];
    let pooled = PooledScales::summed(&studies).unwrap();
    let d = scale_deviations(&studies, &pooled);
    for row in &d.per_study {
        assert!(v(row.rr_plus) < 1e-12);
        assert!(v(row.rr_minus) > 0.0);
    }
}

#[test]
fn switched_example_by_brute_force() {
    // Every allocation of k flips over the two arms, smallest k first.
    let (a, n1, c, n0) = (10i64, 100i64, 5i64, 100i64);
    let rr = |a2: i64, c2: i64| (c2 > 0).then(|| (a2 as f64 / n1 as f64) / (c2 as f64 / n0 as f64));
    let brackets = |k: i64| {
        let (mut lo, mut hi) = (false, false);
        for a2 in 0..=n1 {
            for c2 in 0..=n0 {
                if (a2 - a).abs() + (c2 - c).abs() <= k {
                    if let Some(x) = rr(a2, c2) {
                        lo |= x <= 1.5 + 1e-12;
                        hi |= x >= 1.5 - 1e-12;
                    }
                }
            }
        }
        lo && hi
    };
    let k = (0..).find(|&k| brackets(k)).unwrap();
    assert_eq!(k, 2);
    let r = switched_proportion(&study("x", 10, 100, 5, 100), 1.5, Scale::RrMinus).unwrap();
    assert_eq!(r.flips, Some(k as u64));
    assert_eq!(r.proportion, Some(0.01));
}

#[test]
fn rd_substitution_examples() {
    // t1 fixed by equal RR(+): 1 - t1 = (1 - t0)(1 - s1)/(1 - s0).
    let (s0, s1, t0) = (Q::new(1, 1000), Q::new(2, 1000), Q::new(5, 1000));
    let one = Q::from_integer(1);
    let t1 = one - (one - t0) * (one - s1) / (one - s0);
    let exact = ((s1 - s0) - (t1 - t0)).abs();
    assert_abs_diff_eq!(f(t1), 0.005996, epsilon = 1e-6);
    let r = rd_substitution_check(RiskPair::new(f(s0), f(s1)).unwrap(), RiskPair::new(f(t0), f(t1)).unwrap()).unwrap();
    assert_abs_diff_eq!(r.discrepancy, f(exact), epsilon = 1e-15);
    assert_abs_diff_eq!(r.discrepancy, 4.0e-6, epsilon = 1e-8);

    let r = rd_substitution_check(RiskPair::new(0.2, 0.4).unwrap(), RiskPair::new(0.5, 0.625).unwrap()).unwrap();
    assert_abs_diff_eq!(r.discrepancy, f(Q::new(1, 5) - Q::new(1, 8)), epsilon = 1e-12);
}

#[test]
fn comparison_mode_uses_every_measure() {
    let c = compare_measures(RiskPair::new(0.02, 0.03).unwrap(), 0.10, None, MonotonicityAssumption::NonDecreasing).unwrap();
    assert_abs_diff_eq!(v(c.rr_minus.value), 0.15, epsilon = 1e-12);
    assert_abs_diff_eq!(v(c.rd.value), 0.11, epsilon = 1e-12);
    let cost = c.cost.unwrap().predicted_risk;
    assert_abs_diff_eq!(cost, v(c.rr_plus.value), epsilon = 1e-12);
}
