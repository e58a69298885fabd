//! Weighted distance between coupled ordered solutions against `e^{-At}`.

use cspin::analysis::w1_ordered;
use cspin::lattice::{Graph, WeightSpec, Weights};
use cspin::model::presets::{NearestNeighborParams, Preset};
use cspin::model::subcriticality_margin;
use cspin::simulator::coupled_ensemble;
use cspin::{NoiseFabric, SimParams, Simulator};

fn main() {
    let graph = Graph::zd(1, 8).unwrap();
    let w = Weights::new(&WeightSpec::Exponential { delta: 0.5 }, &graph).unwrap();
    let model = Preset::NearestNeighbor(NearestNeighborParams { m: 5.0, c: 0.5, ..Default::default() })
        .build(&graph)
        .unwrap();
    let a = subcriticality_margin(&model, &w).unwrap();
    let params = SimParams { dt: 1e-3, horizon: 2.0, record_stride: 200, ..Default::default() };
    let sim = Simulator::new(&model, &w, &params).unwrap();
    let mut eta0 = vec![0.0; graph.site_count()];
    for x in graph.ball(graph.origin(), 2).unwrap() {
        eta0[x] = 2.0;
    }
    let xi0: Vec<f64> = eta0.iter().map(|v| 0.5 * v).collect();
    let pairs = coupled_ensemble(&sim, &sim, &eta0, &xi0, &NoiseFabric::new(11), 300).unwrap();
    let report = w1_ordered(&pairs, &w, a, None).unwrap();

    println!("A = {a:.4}, fitted rate {:.3}, bound holds: {}", report.fitted_rate, report.pass);
    println!("{:>6} {:>10} {:>10}", "t", "E dist", "bound");
    for ((t, s), b) in report.times.iter().zip(&report.series).zip(&report.bound) {
        println!("{t:>6.2} {s:>10.5} {b:>10.5}");
    }
}
