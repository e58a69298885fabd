//! Admissibility constants for every preset on a small box.
//!
//! ```text
//! cargo run --example admissibility
//! ```

use cspin::lattice::{Graph, Weights};
use cspin::model::admissibility_check;
use cspin::model::presets::catalog;

fn main() {
    let graph = Graph::zd(1, 20).expect("valid box");
    for info in catalog() {
        let model = info.defaults.build(&graph).expect("defaults build");
        let w = Weights::new(&info.defaults.default_weight(), &graph).expect("valid weight");
        let report = admissibility_check(&model, &graph, &w).expect("checkable");
        println!("{} ({})", info.name, info.example);
        println!("  C1 = {:.4}  C1 uniform = {:.4}", report.c1, report.c1_uniform);
        println!("  C4 = {:.4}  C5 = {:.4}  C6 = {:.4}", report.c4, report.c5, report.c6);
        println!("  moment constant = {:.4}", report.moment_constant);
        match report.subcriticality_margin {
            Some(a) => println!("  margin A = {a:.4} (subcritical: {})", report.subcritical),
            None => println!("  margin undefined (nonlinear drift)"),
        }
        for c in &report.conditions {
            println!("  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
}
