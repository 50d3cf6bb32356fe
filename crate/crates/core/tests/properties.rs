mod common;

use common::*;
use feathom::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn reduction_matches_rank_oracle_on_small_metrics() {
    let mut r = rng(11);
    for _ in 0..40 {
        let n = r.gen_range(3..=8);
        let d = random_metric(&mut r, n);
        let dgm = persistence_diagrams(&rips_filtration(&d, 2).unwrap());
        for p in 0..=1 {
            let oracle = brute_diagram(&d, p);
            assert!(
                same_points(&dgm.dim(p), &oracle, 1e-12),
                "dim {p}: {:?} vs {:?}",
                dgm.dim(p),
                oracle
            );
        }
    }
}

#[test]
fn reduction_matches_rank_oracle_on_series_metrics() {
    let mut r = rng(12);
    let mut checked = 0;
    while checked < 30 {
        let s = random_series(&mut r);
        let g = random_influence(&mut r, s.schema());
        let a = analyze(&s, &g, &PipelineConfig::default()).unwrap();
        if a.distances.len() > 8 {
            continue;
        }
        for p in 0..=1 {
            assert!(same_points(
                &a.diagram.dim(p),
                &brute_diagram(&a.distances, p),
                1e-12
            ));
        }
        checked += 1;
    }
}

#[test]
fn raw_activation_also_satisfies_the_bound() {
    let mut r = rng(13);
    let cfg = PipelineConfig {
        activation: ActivationChoice::Raw,
        ..Default::default()
    };
    for _ in 0..40 {
        let s = random_series(&mut r);
        let g = random_influence(&mut r, s.schema());
        let g2 = random_influence(&mut r, s.schema());
        let rep = stability_check(&s, &g, &g2, &cfg, &[0, 1]).unwrap();
        assert!(rep.satisfied, "{rep:?}");
        assert!(rep.bound_constant <= rep.alt_bound_constant * 2.0);
    }
}

#[test]
fn representatives_are_closed_cycles_born_in_time() {
    let mut r = rng(14);
    for _ in 0..30 {
        let n = r.gen_range(4..=10);
        let d = random_metric(&mut r, n);
        let f = rips_filtration(&d, 2).unwrap();
        for (point, cycle) in representative_cycles(&f) {
            assert!(cycle.is_closed());
            assert!(!cycle.edges.is_empty());
            for &(a, b) in &cycle.edges {
                assert!(d.get(a, b) <= point.birth);
            }
        }
    }
}

#[test]
fn diagram_csv_round_trips() {
    let a = analyze(
        &fixtures::pentagon(),
        &fixtures::pentagon_influence(),
        &PipelineConfig::default(),
    )
    .unwrap();
    let csv = a.diagram.to_csv();
    let back = PersistenceDiagram::from_csv(csv.as_bytes()).unwrap();
    assert_eq!(back.to_csv(), csv);
    assert!(csv.contains("0,0,inf\n"));
}

#[test]
fn one_by_one_grid_is_a_single_run() {
    let s = fixtures::pentagon();
    let cfg = PipelineConfig::default();
    let cells = music_stats_grid(&s, "L", "1", &[2.0], &[0.5], &cfg).unwrap();
    let mut g = InfluenceVector::zeros(s.schema());
    g.set(s.schema(), "L", 2.0).unwrap();
    g.set(s.schema(), "1", 0.5).unwrap();
    assert_eq!(
        cells,
        vec![GridCell {
            x: 2.0,
            y: 0.5,
            result: Some(cell_stats(&s, &g, &cfg).unwrap())
        }]
    );
}

#[test]
fn zero_cell_equals_frequency_analysis() {
    let s = fixtures::pentagon();
    let cfg = PipelineConfig::default();
    let cells = music_stats_grid(&s, "H", "4", &[0.0], &[0.0], &cfg).unwrap();
    let skeleton = build_skeleton(&s).unwrap();
    let d = frequency_distance_matrix(&skeleton).unwrap();
    let dgm = persistence_diagrams(&rips_filtration(&d, 2).unwrap());
    let stats = diagram_stats(&dgm.dim(1));
    assert_eq!(cells[0].result.unwrap().stats, stats);
}

#[test]
fn asc_is_deterministic_across_pool_sizes() {
    let mut r = rng(15);
    let s = random_series(&mut r);
    let g = random_influence(&mut r, s.schema());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| asc_curve(&s, &g, 12, 2, &PipelineConfig::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

fn price_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..500.0, 3..60)
}

fn dated(prices: &[f64]) -> Vec<(chrono::NaiveDate, f64)> {
    let start = chrono::NaiveDate::from_ymd_opt(2023, 3, 6).unwrap();
    prices
        .iter()
        .enumerate()
        .map(|(i, &p)| (start + chrono::Days::new(i as u64), p))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_return_lands_in_one_bin(prices in price_strategy(), bins in 1usize..40, jbins in 1usize..6) {
        let s = stock_preprocess(&dated(&prices), bins, jbins).unwrap();
        prop_assert_eq!(s.len(), prices.len() - 1);
        for v in s.values() {
            let k: usize = v.strip_prefix('I').unwrap().parse().unwrap();
            prop_assert!((1..=bins).contains(&k));
        }
        for (t, f) in s.feat1().iter().enumerate() {
            prop_assert_eq!(f.len(), usize::from(t + 1 < s.len()));
        }
        prop_assert!(s.feat0().iter().all(|f| f.len() <= 1));
    }

    #[test]
    fn scaling_raw_scores_keeps_the_curve(raw in prop::collection::vec(0.0f64..3.0, 1..30), c in 0.01f64..100.0) {
        let n = raw.len();
        let starts: Vec<usize> = (0..n).collect();
        let labels: Vec<String> = starts.iter().map(|s| s.to_string()).collect();
        let a = AnomalyCurve::from_raw(starts.clone(), labels.clone(), raw.clone(), 5, vec![]);
        let b = AnomalyCurve::from_raw(starts, labels, raw.iter().map(|x| x * c).collect(), 5, vec![]);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        if raw.iter().any(|&x| x > 0.0) {
            prop_assert_eq!(a.scores.iter().copied().fold(0.0, f64::max), 1.0);
        }
    }

    #[test]
    fn tasc_vanishes_with_any_factor(curves in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 8), 1..4)) {
        let starts: Vec<usize> = (0..8).collect();
        let labels: Vec<String> = starts.iter().map(|s| s.to_string()).collect();
        let cs: Vec<AnomalyCurve> = curves
            .iter()
            .map(|raw| AnomalyCurve::from_raw(starts.clone(), labels.clone(), raw.clone(), 3, vec![]))
            .collect();
        let t = tasc_curve(&cs).unwrap();
        for i in 0..8 {
            if cs.iter().any(|c| c.scores[i] == 0.0) {
                prop_assert_eq!(t.scores[i], 0.0);
            }
        }
    }
}
