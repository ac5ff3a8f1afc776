use morpho_core::landscape::*;
use morpho_core::vehicle::*;
use proptest::prelude::*;

fn short_profile() -> SimProfile {
    SimProfile::new(0.1, 3000, DEFAULT_SUCCESS_RADIUS, DEFAULT_SENSOR_FLOOR, DEFAULT_BODY_LENGTH).unwrap()
}

/// Counts by scanning every cell, with no histogram shortcut.
fn naive_metrics(cells: &[u8], n: usize, k: usize) -> (f64, f64) {
    let mut full = 0usize;
    let mut any = 0usize;
    for &c in cells {
        if c as usize == k {
            full += 1;
        }
        if c > 0 {
            any += 1;
        }
    }
    let ml = full as f64 / (n * n) as f64;
    let mci = if any == 0 { 0.0 } else { full as f64 / any as f64 };
    (ml, mci)
}

#[test]
fn grids_match_closed_forms() {
    let w = WeightGrid::new(41).unwrap();
    for (j, &v) in w.values().iter().enumerate() {
        assert!((v - (-1.0 + 2.0 * j as f64 / 40.0)).abs() < 1e-15);
    }
    assert_eq!(w.values()[20], 0.0);
    assert_eq!(WeightGrid::new(1).unwrap().values(), &[0.0]);
    assert!(WeightGrid::new(4).is_err());
    let d = DesignGrid::new(5).unwrap();
    assert_eq!(d.positions(), &[-0.5, -0.25, 0.0, 0.25, 0.5]);
    assert_eq!(d.len(), 625);
    assert_eq!(d.design(0).to_array(), [-0.5; 4]);
    assert_eq!(d.design(1).to_array(), [-0.5, -0.5, -0.5, -0.25]);
    assert_eq!(d.design(624).to_array(), [0.5; 4]);
    assert_eq!(DesignGrid::new(1).unwrap().design(0).to_array(), [0.0; 4]);
}

#[test]
fn canonical_design_is_on_the_default_grid() {
    let d = DesignGrid::new(5).unwrap();
    let idx = d.designs().iter().position(|x| *x == BodyDesign::canonical()).unwrap();
    // l1 = (0.5, 0.5) -> (4, 4); l2 = (0.5, -0.5) -> (4, 0).
    assert_eq!(idx, 4 * 125 + 4 * 25 + 4 * 5);
}

#[test]
fn mirror_design_transposes_success_matrices() {
    let grid = WeightGrid::new(11).unwrap();
    let envs = EnvironmentSet::default();
    let p = short_profile();
    let dgrid = DesignGrid::new(5).unwrap();
    for index in [0, 7, 133, 312, 499, 620] {
        let design = dgrid.design(index);
        let mirror = mirror_design(&design);
        for env in envs.iter() {
            let s = success_matrix(&design, env, &grid, &p);
            let m = success_matrix(&mirror, &env.reflect_y(), &grid, &p);
            assert_eq!(m, s.transpose(), "design {index}");
        }
        let o = overlap(&success_matrices(&design, &envs, &grid, &p)).unwrap();
        let om = overlap(&success_matrices(&mirror, &envs, &grid, &p)).unwrap();
        let t: Vec<u8> = (0..11).flat_map(|i| (0..11).map(move |j| (i, j))).map(|(i, j)| o.get(j, i)).collect();
        assert_eq!(om.cells(), &t[..]);
        assert_eq!(DesignMetrics::from_overlap(&o), DesignMetrics::from_overlap(&om));
    }
}

#[test]
fn batched_matrices_match_per_environment_matrices() {
    let grid = WeightGrid::new(9).unwrap();
    let envs = EnvironmentSet::default();
    let p = short_profile();
    let design = BodyDesign::new(Vec2::new(0.5, 0.25), Vec2::new(0.0, -0.5)).unwrap();
    let batched = success_matrices(&design, &envs, &grid, &p);
    for (env, m) in envs.iter().zip(&batched) {
        assert_eq!(*m, success_matrix(&design, env, &grid, &p));
        for (i, &w1) in grid.values().iter().enumerate() {
            for (j, &w2) in grid.values().iter().enumerate() {
                let o = simulate_outcome(&design, &Policy::new(w1, w2).unwrap(), env, &p);
                assert_eq!(m.get(i, j), o.success);
            }
        }
    }
}

#[test]
fn coincident_sensors_have_no_full_solutions() {
    // Equal intensities force either no turning or turning at a constant
    // ratio to speed; neither reaches the light from all four corners.
    let grid = WeightGrid::new(11).unwrap();
    let envs = EnvironmentSet::default();
    let p = short_profile();
    for &(x, y) in &[(0.0, 0.0), (0.5, 0.5), (-0.25, 0.5)] {
        let d = BodyDesign::new(Vec2::new(x, y), Vec2::new(x, y)).unwrap();
        let o = overlap(&success_matrices(&d, &envs, &grid, &p)).unwrap();
        assert_eq!(metric_learnability(&o), 0.0);
    }
}

#[test]
fn sweep_order_and_workers() {
    let dgrid = DesignGrid::new(2).unwrap();
    let grid = WeightGrid::new(5).unwrap();
    let envs = EnvironmentSet::default();
    let p = short_profile();
    let one = sweep_designs(&dgrid, &grid, &envs, &p, 1, true);
    let many = sweep_designs(&dgrid, &grid, &envs, &p, 4, true);
    assert_eq!(one, many);
    assert_eq!(one.len(), 16);
    for (i, r) in one.iter().enumerate() {
        assert_eq!(r.index, i);
        assert_eq!(r.design, dgrid.design(i));
        let s = r.success.as_ref().unwrap();
        assert_eq!(overlap(s).unwrap(), r.overlap);
    }
    let picked = sweep_indices(&dgrid, &[9, 3], &grid, &envs, &p, 2, false);
    assert_eq!(picked[0].index, 9);
    assert_eq!(picked[0].metrics, one[9].metrics);
    assert!(picked[1].success.is_none());
}

#[test]
fn single_cell_sweep() {
    let dgrid = DesignGrid::new(1).unwrap();
    let grid = WeightGrid::new(3).unwrap();
    let rows = sweep_designs(&dgrid, &grid, &EnvironmentSet::default(), &short_profile(), 1, false);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].overlap.n(), 3);
}

fn overlap_strategy() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
    (1usize..12, 1usize..6).prop_flat_map(|(n, k)| (Just(n), Just(k), prop::collection::vec(0..=k as u8, n * n)))
}

proptest! {
    #[test]
    fn metrics_match_naive_counting((n, k, cells) in overlap_strategy()) {
        let o = OverlapMatrix::from_cells(n, k, cells.clone()).unwrap();
        let (ml, mci) = naive_metrics(&cells, n, k);
        prop_assert_eq!(metric_learnability(&o), ml);
        prop_assert_eq!(metric_interference(&o), mci);
        let m = DesignMetrics::from_overlap(&o);
        prop_assert_eq!(m.counts.len(), k);
        prop_assert_eq!(m.counts.iter().sum::<usize>() + o.histogram()[0], n * n);
        prop_assert!((0.0..=1.0).contains(&m.m_l));
        prop_assert!((0.0..=1.0).contains(&m.m_ci));
        prop_assert!(m.m_l <= m.m_ci);
        prop_assert_eq!(o.is_null(), cells.iter().all(|&c| c == 0));
    }

    #[test]
    fn overlap_is_cellwise_sum(
        n in 1usize..8,
        raw in prop::collection::vec(prop::collection::vec(any::<bool>(), 64), 1..6),
    ) {
        let mats: Vec<SuccessMatrix> = raw
            .iter()
            .map(|v| SuccessMatrix::from_cells(n, v[..n * n].to_vec()).unwrap())
            .collect();
        let o = overlap(&mats).unwrap();
        prop_assert_eq!(o.k(), mats.len());
        for i in 0..n {
            for j in 0..n {
                let s = mats.iter().filter(|m| m.get(i, j)).count();
                prop_assert_eq!(o.get(i, j) as usize, s);
            }
        }
    }

    #[test]
    fn mirror_is_an_involution(a in -0.5f64..=0.5, b in -0.5f64..=0.5, c in -0.5f64..=0.5, d in -0.5f64..=0.5) {
        let x = BodyDesign::new(Vec2::new(a, b), Vec2::new(c, d)).unwrap();
        prop_assert_eq!(mirror_design(&mirror_design(&x)), x);
    }
}
