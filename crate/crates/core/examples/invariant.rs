//! Single-site CBI started empty and started large; both settle at `-b/a`.

use cspin::analysis::invariant_probe;
use cspin::lattice::{Graph, WeightSpec, Weights};
use cspin::model::presets::{CbiParams, Preset};
use cspin::{NoiseFabric, SimParams};

fn main() {
    let graph = Graph::zd(1, 0).unwrap();
    let w = Weights::new(&WeightSpec::Constant, &graph).unwrap();
    let model = Preset::Cbi(CbiParams { a_self: -1.0, psi: 2.0, ..Default::default() }).build(&graph).unwrap();
    let params = SimParams { dt: 1e-3, horizon: 10.0, record_stride: 200, replicas: 400, ..Default::default() };
    let r = invariant_probe(&model, &w, &params, &NoiseFabric::new(5), 4.0, &[5.0]).unwrap();
    println!("stationary mean {:.4}", r.stationary[0]);
    println!("from empty  {:.4} +- {:.4}", r.lower_mean[0], r.lower_se[0]);
    println!("from large  {:.4} +- {:.4}", r.upper_mean[0], r.upper_se[0]);
    println!("gap decay rate {:.3} (margin {:.3})", r.gap_rate, r.margin);
    println!("KS p-value {:.3}", r.ks_p_value);
}
