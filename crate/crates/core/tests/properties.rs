use cspin::analysis::ContractionReport;
use cspin::configuration::{dense_distance, dense_norm, dense_positive_part_distance};
use cspin::model::presets::{CbiParams, NearestNeighborParams, Preset};
use cspin::model::subcriticality_margin;
use cspin::simulator::simulate_coupled;
use cspin::{Configuration, Graph, ModelSpec, NoiseFabric, SimParams, Simulator, WeightSpec, Weights};
use proptest::prelude::*;

fn line(radius: usize) -> Graph {
    Graph::zd(1, radius).unwrap()
}

fn exp_weights(graph: &Graph, delta: f64) -> Weights {
    Weights::new(&WeightSpec::Exponential { delta }, graph).unwrap()
}

fn masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..5.0f64], n)
}

fn cbi(graph: &Graph) -> ModelSpec {
    Preset::Cbi(CbiParams::default()).build(graph).unwrap()
}

proptest! {
    #[test]
    fn lattice_distance_is_a_metric(dim in 1usize..4, a in 0usize..200, b in 0usize..200, c in 0usize..200) {
        let g = Graph::zd(dim, 2).unwrap();
        let n = g.site_count();
        let (a, b, c) = (a % n, b % n, c % n);
        let d = |x, y| g.dist(x, y).unwrap();
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert_eq!(d(a, a), 0);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c));
        let l1: i64 = g.coords(a).unwrap().iter().zip(g.coords(b).unwrap()).map(|(p, q)| (p - q).abs()).sum();
        prop_assert_eq!(d(a, b) as i64, l1);
    }

    #[test]
    fn balls_are_bounded(dim in 1usize..4, r in 0usize..4) {
        let g = Graph::zd(dim, 3).unwrap();
        let ball = g.ball(g.origin(), r).unwrap();
        prop_assert!(ball.len() <= (2 * r + 1).pow(dim as u32));
        prop_assert!(ball.iter().all(|&y| g.dist(g.origin(), y).unwrap() <= r));
    }

    #[test]
    fn distance_splits_into_positive_parts(a in masses(9), b in masses(9), delta in 0.1..2.0f64) {
        let w = exp_weights(&line(4), delta);
        let split = dense_positive_part_distance(&a, &b, &w) + dense_positive_part_distance(&b, &a, &w);
        prop_assert!((dense_distance(&a, &b, &w) - split).abs() <= 1e-12 * (1.0 + split));
        prop_assert!(dense_distance(&a, &b, &w) <= dense_norm(&a, &w) + dense_norm(&b, &w) + 1e-12);
    }

    #[test]
    fn meet_is_below_both(a in masses(9), b in masses(9)) {
        let (ca, cb) = (Configuration::from_dense(&a).unwrap(), Configuration::from_dense(&b).unwrap());
        let m = ca.meet(&cb);
        prop_assert!(ca.dominates(&m) && cb.dominates(&m));
        prop_assert!(ca.dominates(&ca));
        if ca.dominates(&cb) && cb.dominates(&ca) {
            prop_assert_eq!(ca, cb);
        }
    }

    #[test]
    fn norm_is_homogeneous(a in masses(9), k in 0.0..10.0f64) {
        let w = exp_weights(&line(4), 0.5);
        let c = Configuration::from_dense(&a).unwrap();
        prop_assert!((c.scaled(k).norm(&w) - k * c.norm(&w)).abs() <= 1e-10 * (1.0 + k * c.norm(&w)));
    }

    #[test]
    fn b0_is_monotone_off_site(base in masses(9), extra in masses(9), x in 0usize..9) {
        let graph = line(4);
        for model in [cbi(&graph), Preset::NearestNeighbor(NearestNeighborParams { m: 2.0, ..Default::default() }).build(&graph).unwrap()] {
            let mut upper: Vec<f64> = base.iter().zip(&extra).map(|(p, q)| p + q).collect();
            upper[x] = base[x];
            prop_assert!(model.b0(x, &base) <= model.b0(x, &upper) + 1e-12);
        }
    }

    #[test]
    fn rho_is_monotone(base in masses(9), extra in masses(9), x in 0usize..9, z in 0.01..3.0f64) {
        let graph = line(4);
        let model = cbi(&graph);
        let upper: Vec<f64> = base.iter().zip(&extra).map(|(p, q)| p + q).collect();
        prop_assert!(model.rho(x, &base, z) <= model.rho(x, &upper, z) + 1e-12);
    }

    #[test]
    fn ordered_pairs_contract_at_the_margin(lower in masses(9), gap in masses(9), m in 2.5..6.0f64, delta in 0.1..1.0f64) {
        let graph = line(4);
        let w = exp_weights(&graph, delta);
        let model = Preset::NearestNeighbor(NearestNeighborParams { m, ..Default::default() }).build(&graph).unwrap();
        let margin = subcriticality_margin(&model, &w).unwrap();
        let upper: Vec<f64> = lower.iter().zip(&gap).map(|(p, q)| p + q).collect();
        let lhs: f64 = graph.sites().map(|x| w.get(x) * (model.effective_drift(x, &upper) - model.effective_drift(x, &lower))).sum();
        let rhs = -margin * dense_distance(&upper, &lower, &w);
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn thresholds_select_nested_prefixes(seed in any::<u64>(), site in 0usize..50, step in 0u64..1000, lo in 0.0..20.0f64, hi in 0.0..20.0f64) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let f = NoiseFabric::new(seed);
        let small = f.branching_events(site, step, 0.05, lo);
        let large = f.branching_events(site, step, 0.05, hi);
        prop_assert!(small.len() <= large.len());
        prop_assert_eq!(&large[..small.len()], &small[..]);
    }

    #[test]
    fn contraction_flag_is_monotone_in_margin(
        decay in prop::collection::vec(0.0..1.5f64, 2..12),
        noise in prop::collection::vec(0.0..0.05f64, 12),
        a in 0.0..3.0f64,
        b in 0.0..3.0f64,
    ) {
        let times: Vec<f64> = (0..decay.len()).map(|k| k as f64 * 0.25).collect();
        let mut series = vec![1.0];
        for &d in &decay[1..] {
            series.push(series.last().unwrap() * (-d * 0.25f64).exp());
        }
        let report = ContractionReport {
            stderr: noise[..times.len()].to_vec(),
            bound: vec![0.0; times.len()],
            times,
            series,
            margin: 0.0,
            fitted_rate: 0.0,
            rate_ci: (0.0, 0.0),
            oracle: None,
            oracle_within: None,
            pass: false,
        };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(!report.passes_with(hi) || report.passes_with(lo));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jump_only_coupling_preserves_order(lower in masses(7), gap in masses(7), seed in any::<u64>()) {
        let graph = line(3);
        let w = exp_weights(&graph, 1.0);
        let model = Preset::NearestNeighbor(NearestNeighborParams { c: 0.0, ..Default::default() }).build(&graph).unwrap();
        let params = SimParams { dt: 1e-2, horizon: 0.3, record_stride: 1, ..Default::default() };
        let sim = Simulator::new(&model, &w, &params).unwrap();
        let upper: Vec<f64> = lower.iter().zip(&gap).map(|(p, q)| p + q).collect();
        let (hi, lo) = simulate_coupled(&sim, &sim, &upper, &lower, &NoiseFabric::new(seed), 0).unwrap();
        for (u, l) in hi.states.iter().zip(&lo.states) {
            prop_assert!(u.iter().zip(l).all(|(p, q)| p >= q), "{u:?} vs {l:?}");
        }
    }
}
