//! k-means with a silhouette sweep and a 2-D PCA projection of three
//! seeded point clouds.
//!
//! ```text
//! cargo run --example clustering
//! ```

use coalshap::cluster::{kmeans, pca2, silhouette, KMeansConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.05)?;
    let centers = [[0.0, 0.1, 0.2, 0.7], [0.5, 0.1, 0.1, 0.3], [0.2, 0.6, 0.1, 0.1]];
    let points: Vec<Vec<f64>> = (0..90)
        .map(|i| centers[i % 3].iter().map(|c| c + noise.sample(&mut rng)).collect())
        .collect();

    for k in 2..=5 {
        let fit = kmeans(&points, &KMeansConfig::new(k, 0))?;
        let sil = silhouette(&points, &fit.labels)?;
        println!("k = {k}: inertia {:.4}, silhouette {sil:.3}, {} iterations", fit.inertia, fit.iterations);
    }

    let proj = pca2(&points)?;
    println!("PCA explains {:.1}% of the variance", 100.0 * proj.explained_share);
    for (i, p) in proj.coords.iter().take(6).enumerate() {
        println!("  point {i}: ({:+.3}, {:+.3})", p[0], p[1]);
    }
    Ok(())
}
