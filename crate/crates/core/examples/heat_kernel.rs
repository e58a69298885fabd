//! Continuous-time random walk occupation against the Poisson-type upper bound.
//! On the line the walk's total jump rate is 2, so `m = 2`.

use cspin::lattice::Graph;
use cspin::spread::{ctrw_simulate, heat_kernel_bound, interior_sites, kernel_bound_audit};
use cspin::NoiseFabric;

fn main() {
    let graph = Graph::zd(1, 12).unwrap();
    let times = [0.5, 1.0, 2.0];
    let est = ctrw_simulate(&graph, 1.0, graph.origin(), &times, &NoiseFabric::new(2), 50_000);
    let audit = kernel_bound_audit(&est, &graph, 2.0, &interior_sites(&graph)).unwrap();
    println!("{} comparisons, {} vacuous, {} violations", audit.rows.len(), audit.vacuous, audit.violations);
    for row in audit.rows.iter().filter(|r| r.t == 1.0 && r.dhat <= 8) {
        println!("  d = {}  K = {:.2e} +- {:.1e}  bound {:.2e}", row.dhat, row.estimate, row.stderr, row.bound);
    }
    println!("bound at d = 3, t = 1: {:.5}", heat_kernel_bound(2.0, 3, 1.0));
}
