//! Clustering and path length of the contact network.

use learnsim_core::network::{generate_small_world, random_gnm, NetworkParams};
use learnsim_core::rng::{stream, Stream};

fn main() {
    let n = 500;
    println!("{:>6}{:>10}{:>12}", "beta", "C", "L");
    for beta in [0.0, 0.01, 0.1, 0.5, 1.0] {
        let g = generate_small_world(n, &NetworkParams { k: 4, beta }, 7).unwrap();
        println!("{beta:>6}{:>10.3}{:>12.2}", g.clustering_coefficient(), g.mean_path_length());
    }

    let mut rng = stream(7, Stream::Network, 1);
    let r = random_gnm(n, n * 2, &mut rng).unwrap();
    println!("random{:>10.3}{:>12.2}", r.clustering_coefficient(), r.mean_path_length());
}
