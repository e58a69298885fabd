//! Monte Carlo site means next to the exact first and second moments.

use cspin::analysis::{mean_oracle, site_means, variance_oracle};
use cspin::lattice::{Graph, WeightSpec, Weights};
use cspin::model::presets::{NearestNeighborParams, Preset};
use cspin::{NoiseFabric, SimParams, Simulator};

fn main() {
    let graph = Graph::zd(1, 6).unwrap();
    let w = Weights::new(&WeightSpec::Exponential { delta: 1.0 }, &graph).unwrap();
    let model = Preset::NearestNeighbor(NearestNeighborParams { c: 0.5, ..Default::default() })
        .build(&graph)
        .unwrap();
    let params = SimParams { dt: 1e-3, horizon: 1.0, record_stride: 500, replicas: 2000, ..Default::default() };
    let mut eta0 = vec![0.0; graph.site_count()];
    eta0[graph.origin()] = 1.0;

    let trajs = Simulator::new(&model, &w, &params)
        .unwrap()
        .run_ensemble(&eta0, &NoiseFabric::new(1), params.replicas)
        .unwrap();
    let (means, _) = site_means(&trajs).unwrap();
    let times = trajs[0].times.clone();
    let exact = mean_oracle(&model, &eta0, &times).unwrap();
    let var = variance_oracle(&model, &eta0, &times).unwrap();

    let n = params.replicas as f64;
    for (k, t) in times.iter().enumerate().skip(1) {
        println!("t = {t}");
        for x in graph.ball(graph.origin(), 3).unwrap() {
            let se = (var[k][x] / n).sqrt();
            let z = (means[k][x] - exact[k][x]) / se;
            println!(
                "  x = {:>2}  mc {:.5}  exact {:.5}  sd {:.5}  z {z:+.2}",
                graph.coords(x).unwrap()[0],
                means[k][x],
                exact[k][x],
                var[k][x].sqrt()
            );
        }
    }
}
