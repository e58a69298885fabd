//! Linear front of a nearest-neighbor system from a unit point mass.

use cspin::lattice::{Graph, WeightSpec, Weights};
use cspin::model::presets::{NearestNeighborParams, Preset};
use cspin::spread::{containment_violations, fit_profile, front_speed, radius, sup_moment_profile};
use cspin::{NoiseFabric, SimParams, Simulator};

fn main() {
    let graph = Graph::zd(1, 40).unwrap();
    let w = Weights::new(&WeightSpec::Exponential { delta: 1.0 }, &graph).unwrap();
    let model = Preset::NearestNeighbor(NearestNeighborParams { m: 1.2, c: 1e-3, g: 2e-3, ..Default::default() })
        .build(&graph)
        .unwrap();
    let params = SimParams { dt: 1e-2, horizon: 20.0, record_stride: 100, ..Default::default() };
    let x0 = graph.origin();
    let mut eta0 = vec![0.0; graph.site_count()];
    eta0[x0] = 1.0;
    let trajs = Simulator::new(&model, &w, &params).unwrap().run_ensemble(&eta0, &NoiseFabric::new(8), 50).unwrap();

    let eps = 0.01;
    let dist = graph.distances_from(x0).unwrap();
    let fit = front_speed(&trajs, &graph, x0, eps, (5.0, 20.0)).unwrap();
    println!("front speed {:.3} (R^2 {:.4})", fit.slope, fit.r2);
    for k in (0..trajs[0].times.len()).step_by(4) {
        let r: Vec<usize> = trajs.iter().map(|t| radius(t, k, eps, &dist)).collect();
        let max = r.iter().max().unwrap();
        println!("  t = {:>4.1}  max radius {max}", trajs[0].times[k]);
    }
    let escapes = containment_violations(&trajs, &graph, x0, eps, 1.5 * fit.slope, &[10.0, 20.0]).unwrap();
    println!("escapes from B(x0, 1.5 v t): {}", escapes.len());

    let profile = sup_moment_profile(&trajs, &graph, x0, 10.0).unwrap();
    if let Some(f) = fit_profile(&profile, 21, 38) {
        println!("sup-moment profile: log slope against d ln d = {:.3}", f.slope);
    }
}
