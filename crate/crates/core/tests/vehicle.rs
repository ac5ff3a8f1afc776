use approx::assert_relative_eq;
use morpho_core::vehicle::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

fn pose(x: f64, y: f64, a: f64) -> Pose {
    Pose::new(x, y, a).unwrap()
}

fn one_step_profile() -> SimProfile {
    SimProfile::new(0.1, 1, DEFAULT_SUCCESS_RADIUS, DEFAULT_SENSOR_FLOOR, DEFAULT_BODY_LENGTH).unwrap()
}

fn coincident_centre() -> BodyDesign {
    BodyDesign::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)).unwrap()
}

#[test]
fn sensor_position_examples() {
    assert_eq!(sensor_world_position(&pose(3.0, 0.0, 0.0), Vec2::new(0.0, 0.0)), Vec2::new(3.0, 0.0));
    let p = sensor_world_position(&pose(3.0, 0.0, FRAC_PI_2), Vec2::new(0.5, 0.0));
    assert_relative_eq!(p.x, 3.0, epsilon = 1e-15);
    assert_relative_eq!(p.y, 0.5, epsilon = 1e-15);
    let p = sensor_world_position(&pose(0.0, 0.0, PI), Vec2::new(0.5, 0.5));
    assert_relative_eq!(p.x, -0.5, epsilon = 1e-15);
    assert_relative_eq!(p.y, -0.5, epsilon = 1e-15);
}

#[test]
fn sensor_value_examples() {
    let floor = DEFAULT_SENSOR_FLOOR;
    assert_relative_eq!(sensor_value(&pose(3.0, 0.0, 0.0), Vec2::new(0.0, 0.0), floor), 1.0 / 9.0, max_relative = 1e-15);
    assert_eq!(sensor_value(&pose(0.0, 2.0, 0.0), Vec2::new(0.0, 0.0), floor), 0.25);
    assert_relative_eq!(
        sensor_value(&pose(3.0, 0.0, FRAC_PI_2), Vec2::new(0.5, 0.0), floor),
        1.0 / 9.25,
        max_relative = 1e-14
    );
}

#[test]
fn sensor_floor_bounds_intensity() {
    let floor = DEFAULT_SENSOR_FLOOR;
    let v = sensor_value(&pose(0.0, 0.0, 0.3), Vec2::new(0.0, 0.0), floor);
    assert_eq!(v, 1.0 / (floor * floor));
    assert!(v.is_finite());
}

#[test]
fn step_examples() {
    let p = one_step_profile();
    let d = coincident_centre();
    let start = pose(3.0, 0.0, 0.0);
    let forward = step(&start, &d, &Policy::new(1.0, 1.0).unwrap(), &p);
    assert_relative_eq!(forward.x, 3.0 + 0.1 / 9.0, max_relative = 1e-15);
    assert_eq!(forward.y, 0.0);
    assert_eq!(forward.alpha, 0.0);
    let turn = step(&start, &d, &Policy::new(1.0, -1.0).unwrap(), &p);
    assert_eq!((turn.x, turn.y), (3.0, 0.0));
    assert_relative_eq!(turn.alpha, 0.2 / 9.0, max_relative = 1e-15);
}

#[test]
fn step_uses_pre_step_heading_for_position() {
    let p = one_step_profile();
    let start = pose(3.0, 0.0, 0.0);
    let next = step(&start, &coincident_centre(), &Policy::new(1.0, 0.0).unwrap(), &p);
    // Heading changes, but the translation is along the old heading.
    assert!(next.alpha > 0.0);
    assert_eq!(next.y, 0.0);
}

#[test]
fn zero_policy_is_fixed_point() {
    let p = SimProfile::desk();
    let zero = Policy::new(0.0, 0.0).unwrap();
    let start = pose(1.3, -2.2, 0.7);
    assert_eq!(step(&start, &BodyDesign::canonical(), &zero, &p), start);
    let env = EnvironmentSet::default().environments()[0];
    let r = simulate(&BodyDesign::canonical(), &zero, &env, &p);
    assert!(!r.success);
    assert_relative_eq!(r.min_distance, 4.0, max_relative = 1e-15);
    assert_eq!(r.steps_used, p.steps);
    assert_eq!(r.sensor_trace_1.len(), p.steps + 1);
}

#[test]
fn default_environments_are_diagonal() {
    let set = EnvironmentSet::default();
    let d = 4.0 / SQRT_2;
    let expected = [(d, d), (d, -d), (-d, d), (-d, -d)];
    assert_eq!(set.len(), 4);
    for (env, (x, y)) in set.iter().zip(expected) {
        assert_relative_eq!(env.start.x, x, max_relative = 1e-15);
        assert_relative_eq!(env.start.y, y, max_relative = 1e-15);
        assert_eq!(env.start.alpha, 0.0);
        assert_relative_eq!(env.start.distance_to_origin(), 4.0, max_relative = 1e-15);
    }
}

#[test]
fn immediate_success_inside_radius() {
    let env = Environment::unchecked(pose(0.05, 0.0, 0.0));
    let r = simulate(&BodyDesign::canonical(), &Policy::new(1.0, 1.0).unwrap(), &env, &SimProfile::desk());
    assert!(r.success);
    assert_eq!(r.steps_used, 0);
    assert_eq!(r.sensor_trace_1.len(), 1);
    assert!(Environment::new(pose(0.05, 0.0, 0.0), DEFAULT_SUCCESS_RADIUS).is_err());
}

#[test]
fn straight_line_passes_at_offset_distance() {
    // Both sensors at the centre and equal weights: no turning, so the robot
    // runs along y = -d and the closest approach is d.
    let d = 4.0 / SQRT_2;
    let env = Environment::new(pose(-d, -d, 0.0), DEFAULT_SUCCESS_RADIUS).unwrap();
    let r = simulate(&coincident_centre(), &Policy::new(1.0, 1.0).unwrap(), &env, &SimProfile::full());
    assert!(!r.success);
    assert!((r.min_distance - d).abs() < 1e-3, "{}", r.min_distance);
}

#[test]
fn evaluate_all_matches_independent_simulations() {
    let set = EnvironmentSet::default();
    let design = BodyDesign::new(Vec2::new(0.25, -0.5), Vec2::new(-0.5, 0.25)).unwrap();
    let policy = Policy::new(-0.6, 0.9).unwrap();
    let p = SimProfile::desk();
    let all = evaluate_all(&design, &policy, &set, &p);
    for (o, env) in all.iter().zip(set.iter()) {
        assert_eq!(*o, simulate(&design, &policy, env, &p).outcome());
    }
    let zero = evaluate_all(&design, &Policy::new(0.0, 0.0).unwrap(), &set, &p);
    assert!(zero.iter().all(|o| !o.success && (o.min_distance - 4.0).abs() < 1e-12));
    let single = EnvironmentSet::new(vec![set.environments()[2]]).unwrap();
    assert_eq!(evaluate_all(&design, &policy, &single, &p), vec![all[2]]);
}

#[test]
fn min_distance_is_monotone_in_horizon() {
    let env = EnvironmentSet::default().environments()[1];
    let design = BodyDesign::new(Vec2::new(0.5, 0.0), Vec2::new(-0.25, 0.5)).unwrap();
    let policy = Policy::new(0.8, -0.3).unwrap();
    let mut last = f64::INFINITY;
    for steps in (1..3000).step_by(37) {
        let p = SimProfile::new(0.1, steps, DEFAULT_SUCCESS_RADIUS, DEFAULT_SENSOR_FLOOR, DEFAULT_BODY_LENGTH).unwrap();
        let r = simulate_outcome(&design, &policy, &env, &p);
        assert!(r.min_distance <= last);
        assert!(r.steps_used <= steps);
        last = r.min_distance;
    }
}

#[test]
fn segment_distance_reference_cases() {
    let d = segment_distance_to_origin(Vec2::new(-1.0, 2.0), Vec2::new(1.0, 2.0));
    assert_eq!(d, 2.0);
    let d = segment_distance_to_origin(Vec2::new(3.0, 4.0), Vec2::new(6.0, 8.0));
    assert_eq!(d, 5.0);
    let d = segment_distance_to_origin(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0));
    assert_relative_eq!(d, SQRT_2);
}

#[test]
fn profiles_validate() {
    assert!(SimProfile::new(0.0, 10, 0.075, 1e-3, 0.5).is_err());
    assert!(SimProfile::new(0.1, 0, 0.075, 1e-3, 0.5).is_err());
    assert!(SimProfile::new(0.1, 10, 0.075, 0.1, 0.5).is_err());
    assert!(SimProfile::new(0.1, 10, 0.075, 1e-3, 0.0).is_err());
    let full = SimProfile::full();
    assert_eq!((full.dt, full.steps), (0.1, 100_000));
    let desk = SimProfile::desk();
    assert_eq!((desk.dt, desk.steps), (0.1, 20_000));
    let fine = desk.refined();
    assert_eq!((fine.dt, fine.steps), (0.05, 40_000));
}

#[test]
fn types_enforce_boxes() {
    assert!(BodyDesign::new(Vec2::new(0.6, 0.0), Vec2::new(0.0, 0.0)).is_err());
    assert!(Policy::new(1.0, -1.01).is_err());
    assert!(Pose::new(f64::NAN, 0.0, 0.0).is_err());
    assert!(EnvironmentSet::new(vec![]).is_err());
}

fn coord() -> impl Strategy<Value = f64> {
    -0.5f64..=0.5
}

fn weight() -> impl Strategy<Value = f64> {
    -1.0f64..=1.0
}

fn short_profile() -> SimProfile {
    SimProfile::new(0.1, 1500, DEFAULT_SUCCESS_RADIUS, DEFAULT_SENSOR_FLOOR, DEFAULT_BODY_LENGTH).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batch_matches_scalar(
        specs in prop::collection::vec(
            (coord(), coord(), coord(), coord(), weight(), weight(), 0usize..4),
            1..20,
        )
    ) {
        let set = EnvironmentSet::default();
        let p = short_profile();
        let trials: Vec<TrialSpec> = specs
            .iter()
            .map(|&(a, b, c, d, w1, w2, e)| TrialSpec {
                design: BodyDesign::new(Vec2::new(a, b), Vec2::new(c, d)).unwrap(),
                policy: Policy::new(w1, w2).unwrap(),
                start: set.environments()[e].start,
            })
            .collect();
        let batch = simulate_batch(&trials, &p);
        for (t, o) in trials.iter().zip(&batch) {
            let scalar = simulate_outcome(&t.design, &t.policy, &Environment::unchecked(t.start), &p);
            prop_assert_eq!(scalar.min_distance.to_bits(), o.min_distance.to_bits());
            prop_assert_eq!(scalar.end_distance.to_bits(), o.end_distance.to_bits());
            prop_assert_eq!(scalar.steps_used, o.steps_used);
            prop_assert_eq!(scalar.success, o.success);
        }
    }

    #[test]
    fn mirror_trajectories_agree_step_for_step(
        a in coord(), b in coord(), c in coord(), d in coord(),
        w1 in weight(), w2 in weight(), e in 0usize..4,
    ) {
        let design = BodyDesign::new(Vec2::new(a, b), Vec2::new(c, d)).unwrap();
        let mirror = BodyDesign { l1: design.l2.reflect_y(), l2: design.l1.reflect_y() };
        let env = EnvironmentSet::default().environments()[e];
        let p = short_profile();
        let mut x = env.start;
        let mut y = env.reflect_y().start;
        let pol = Policy::new(w1, w2).unwrap();
        let swapped = Policy::new(w2, w1).unwrap();
        for _ in 0..300 {
            x = step(&x, &design, &pol, &p);
            y = step(&y, &mirror, &swapped, &p);
            prop_assert_eq!(x.x.to_bits(), y.x.to_bits());
            prop_assert_eq!(x.y.to_bits(), (-y.y).to_bits());
        }
        let r = simulate_outcome(&design, &pol, &env, &p);
        let m = simulate_outcome(&mirror, &swapped, &env.reflect_y(), &p);
        prop_assert_eq!(r, m);
    }

    #[test]
    fn outputs_are_finite_and_consistent(
        a in coord(), b in coord(), c in coord(), d in coord(),
        w1 in weight(), w2 in weight(), e in 0usize..4,
    ) {
        let design = BodyDesign::new(Vec2::new(a, b), Vec2::new(c, d)).unwrap();
        let env = EnvironmentSet::default().environments()[e];
        let p = short_profile();
        let r = simulate(&design, &Policy::new(w1, w2).unwrap(), &env, &p);
        let cap = 1.0 / (p.sensor_floor * p.sensor_floor);
        prop_assert!(r.min_distance >= 0.0 && r.min_distance.is_finite());
        prop_assert_eq!(r.success, r.min_distance <= p.success_radius);
        prop_assert!(r.steps_used <= p.steps);
        prop_assert_eq!(r.sensor_trace_1.len(), r.steps_used + 1);
        prop_assert!(r.sensor_trace_1.iter().chain(&r.sensor_trace_2).all(|v| v.is_finite() && *v <= cap));
    }
}
