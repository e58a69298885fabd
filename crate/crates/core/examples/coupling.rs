//! Ordered starts on one noise realization. Without diffusion the order is
//! kept pathwise; with diffusion the Euler step breaks it, less so as `dt` shrinks.

use cspin::analysis::mean_violation;
use cspin::lattice::{Graph, WeightSpec, Weights};
use cspin::model::presets::{NearestNeighborParams, Preset};
use cspin::simulator::coupled_ensemble;
use cspin::{NoiseFabric, SimParams, Simulator};

fn main() {
    let graph = Graph::zd(1, 8).unwrap();
    let w = Weights::new(&WeightSpec::Exponential { delta: 1.0 }, &graph).unwrap();
    let mut upper = vec![0.0; graph.site_count()];
    upper[graph.origin()] = 1.0;
    let lower: Vec<f64> = upper.iter().map(|v| 0.5 * v).collect();

    for c in [0.0, 0.5] {
        let model = Preset::NearestNeighbor(NearestNeighborParams { c, ..Default::default() })
            .build(&graph)
            .unwrap();
        for dt in [4e-3, 1e-3] {
            let params = SimParams { dt, horizon: 1.0, record_stride: 1, ..Default::default() };
            let sim = Simulator::new(&model, &w, &params).unwrap();
            let pairs = coupled_ensemble(&sim, &sim, &upper, &lower, &NoiseFabric::new(3), 300).unwrap();
            let v = mean_violation(&pairs, &w).unwrap();
            println!("c = {c}  dt = {dt:e}  mean violation integral {:.3e}", v.integral);
        }
    }
}
