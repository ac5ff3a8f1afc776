use morpho_core::coopt::*;
use morpho_core::optimizers::loss;
use morpho_core::vehicle::*;
use proptest::prelude::*;

fn short_profile() -> SimProfile {
    SimProfile::new(0.1, 1500, DEFAULT_SUCCESS_RADIUS, DEFAULT_SENSOR_FLOOR, DEFAULT_BODY_LENGTH).unwrap()
}

fn objectives_of(g: &Genome, set: &EnvironmentSet, p: &SimProfile) -> Vec<f64> {
    evaluate_all(&g.design, &g.policy, set, p).iter().map(|o| o.min_distance).collect()
}

fn check_record(r: &CooptRunRecord, set: &EnvironmentSet, p: &SimProfile) {
    assert!(r.evals_used <= r.budget);
    for (i, a) in r.archive.iter().enumerate() {
        for (j, b) in r.archive.iter().enumerate() {
            if i != j {
                assert!(!dominates(&a.objectives, &b.objectives));
                assert_ne!(a.objectives, b.objectives);
            }
        }
        assert!(r.admissions.iter().any(|ad| ad.eval_index == a.eval_index && ad.genome == a.genome));
    }
    // Anything admitted and later dropped is beaten by a surviving member.
    for ad in &r.admissions {
        if !r.archive.iter().any(|a| a.eval_index == ad.eval_index) {
            assert!(r.archive.iter().any(|a| dominates(&a.objectives, &ad.objectives)));
        }
        assert!(ad.dtw >= 0.0 && ad.dtw.is_finite());
        assert_eq!(objectives_of(&ad.genome, set, p), ad.objectives);
    }
    assert!(r.admissions.iter().enumerate().all(|(i, a)| a.order == i));
    assert!(r.admissions.windows(2).all(|w| w[0].generation <= w[1].generation && w[0].eval_index < w[1].eval_index));
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let best = sum(&r.best.objectives);
    for a in &r.archive {
        let s = sum(&a.objectives);
        assert!(best < s || (best == s && r.best.eval_index <= a.eval_index));
    }
    assert!(r.curve.windows(2).all(|w| w[0].eval < w[1].eval && w[1].best_loss <= w[0].best_loss && w[1].envs_solved >= w[0].envs_solved));
    let last = r.curve.last().unwrap();
    assert!(last.best_loss <= best);
    match r.evals_to_full_success {
        Some(e) => {
            assert!(e <= r.evals_used);
            assert_eq!(r.curve.iter().find(|c| c.envs_solved == set.len()).unwrap().eval, e);
        }
        None => assert!(r.curve.iter().all(|c| c.envs_solved < set.len())),
    }
    // Genomes are feasible and the reported loss agrees with a fresh evaluation.
    for a in &r.archive {
        assert!(BodyDesign::new(a.genome.design.l1, a.genome.design.l2).is_ok());
        assert!(Policy::new(a.genome.policy.w1, a.genome.policy.w2).is_ok());
    }
    let (l, _) = loss(&r.best.genome.design, &r.best.genome.policy, set, p);
    assert!((l - best).abs() <= 1e-12 * l.max(1.0));
}

#[test]
fn one_generation_when_budget_equals_population() {
    let set = EnvironmentSet::default();
    let p = short_profile();
    let r = co_optimize(&set, &p, POPULATION, 3).unwrap();
    assert_eq!(r.evals_used, POPULATION);
    assert_eq!(r.generations, 1);
    assert!(r.admissions.iter().all(|a| a.generation == 0));
    check_record(&r, &set, &p);
    assert!(matches!(
        co_optimize(&set, &p, POPULATION - 1, 3),
        Err(CooptError::BudgetBelowPopulation { .. })
    ));
}

#[test]
fn coopt_records_are_consistent_and_deterministic() {
    let set = EnvironmentSet::default();
    let p = short_profile();
    let r = co_optimize(&set, &p, POPULATION * 5, 21).unwrap();
    assert_eq!(r.mode, CooptMode::Coopt);
    assert_eq!(r.generations, 5);
    check_record(&r, &set, &p);
    assert_eq!(r, co_optimize(&set, &p, POPULATION * 5, 21).unwrap());
    assert_ne!(r.best, co_optimize(&set, &p, POPULATION * 5, 22).unwrap().best);
}

#[test]
fn baseline_keeps_the_canonical_design() {
    let set = EnvironmentSet::default();
    let p = short_profile();
    let r = baseline_optimize(&set, &p, POPULATION * 3, 21).unwrap();
    assert_eq!(r.mode, CooptMode::Baseline);
    check_record(&r, &set, &p);
    assert!(r.admissions.iter().all(|a| a.genome.design == BodyDesign::canonical()));
    assert!(r.archive.iter().all(|a| a.genome.design == BodyDesign::canonical()));
    assert!(r.archive.iter().all(|a| a.objectives.len() == set.len()));
}

#[test]
fn compare_runs_examples() {
    let set = EnvironmentSet::default();
    let p = short_profile();
    let template = co_optimize(&set, &p, POPULATION, 1).unwrap();
    let with = |e: Option<usize>| CooptRunRecord {
        evals_to_full_success: e,
        ..template.clone()
    };
    let a = vec![with(Some(1)), with(Some(2))];
    let b = vec![with(Some(3)), with(Some(4))];
    let r = compare_runs(&a, &b).unwrap();
    assert_eq!(r.u1, 0.0);
    assert!((r.result.p_value - 1.0 / 3.0).abs() < 1e-15);
    let same = compare_runs(&a, &a).unwrap();
    assert!((same.result.p_value - 1.0).abs() < 1e-12);
    // Censored runs count as budget + 1.
    let censored = vec![with(None), with(None), with(None)];
    let fast = vec![with(Some(10)), with(Some(20)), with(Some(30))];
    let r = compare_runs(&fast, &censored).unwrap();
    assert_eq!(r.u1, 0.0);
    assert_eq!(censored[0].evals_or_censored(), template.budget + 1);
}

fn objective_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..30)
        .prop_map(|v| v.into_iter().map(|o| o.into_iter().map(f64::from).collect()).collect())
}

proptest! {
    #[test]
    fn fronts_partition_and_respect_dominance(objs in objective_set()) {
        let fronts = non_dominated_fronts(&objs);
        let mut seen: Vec<usize> = fronts.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..objs.len()).collect::<Vec<_>>());
        let rank = |i: usize| fronts.iter().position(|f| f.contains(&i)).unwrap();
        for i in 0..objs.len() {
            for j in 0..objs.len() {
                if dominates(&objs[i], &objs[j]) {
                    prop_assert!(rank(i) < rank(j));
                }
            }
        }
        for f in &fronts {
            for &i in f {
                prop_assert!(f.iter().all(|&j| !dominates(&objs[j], &objs[i])));
            }
            let c = crowding_distances(&objs, f);
            prop_assert_eq!(c.len(), f.len());
            prop_assert!(c.iter().all(|&d| d >= 0.0));
        }
    }
}
