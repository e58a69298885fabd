//! Counter-based noise: any (replica, stream, site, step) is addressable
//! directly, so replicas and sites can be evaluated in any order.

use cspin::noise::StreamKind;
use cspin::NoiseFabric;

fn main() {
    let master = NoiseFabric::new(42);
    let r3 = master.replica(3);
    println!("replica 3 brownian increment at site 7, step 100: {:+.6}", r3.brownian_increment(7, 100, 1e-3));
    println!("same key again:                                 {:+.6}", r3.brownian_increment(7, 100, 1e-3));
    println!("uniform lane: {:.6}", r3.uniform(StreamKind::Branch, 7, 100, 0));

    let events = r3.branching_events(7, 100, 0.1, 30.0);
    println!("{} branching points with u <= 30 in one step of 0.1", events.len());
    for theta in [5.0, 10.0, 20.0] {
        let accepted = events.iter().take_while(|e| e.u <= theta).count();
        println!("  threshold {theta:>4}: first {accepted} accepted");
    }
}
