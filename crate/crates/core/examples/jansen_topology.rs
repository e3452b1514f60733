//! Check the Jansen linkage topology and count small topologies.
//!
//! Usage: `cargo run --example jansen_topology`

use linkforge::topology::{
    check_topology, enumerate_topologies, flux_feasible, jansen_assignment, structure_set,
};

fn main() {
    let jansen = jansen_assignment();
    match check_topology(&jansen) {
        Ok(()) => println!("Jansen assignment passes the structural checks"),
        Err(v) => println!("Jansen assignment violates {} rows: {:?}", v.len(), v),
    }
    println!("flux feasible: {}", flux_feasible(&jansen).feasible());

    for k in 2..=5 {
        let all: Vec<_> = enumerate_topologies(k).expect("small K").collect();
        println!(
            "K = {k}: {} assignments, {} distinct structures",
            all.len(),
            structure_set(all.iter().cloned()).len()
        );
    }
}
