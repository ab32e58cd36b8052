use coalshap::cluster::{kmeans, pca2, KMeansConfig};
use proptest::prelude::*;

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 6..40)
}

/// Orthogonal 4x4 matrix from two Givens rotations.
fn rotation(a: f64, b: f64) -> [[f64; 4]; 4] {
    let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
    let g1 = [[ca, -sa, 0.0, 0.0], [sa, ca, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let g2 = [[1.0, 0.0, 0.0, 0.0], [0.0, cb, 0.0, -sb], [0.0, 0.0, 1.0, 0.0], [0.0, sb, 0.0, cb]];
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| g1[i][k] * g2[k][j]).sum();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inertia_never_increases(pts in cloud(), k in 1usize..5, seed in any::<u64>()) {
        let r = kmeans(&pts, &KMeansConfig::new(k.min(pts.len()), seed)).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.history);
        }
        prop_assert_eq!(*r.history.last().unwrap(), r.inertia);
    }

    #[test]
    fn kmeans_ignores_input_order(pts in cloud(), k in 1usize..5, seed in any::<u64>(), rot in any::<usize>()) {
        let cfg = KMeansConfig::new(k.min(pts.len()), seed);
        let a = kmeans(&pts, &cfg).unwrap();
        let shift = rot % pts.len();
        let mut permuted = pts.clone();
        permuted.rotate_left(shift);
        permuted.reverse();
        let b = kmeans(&permuted, &cfg).unwrap();
        let n = pts.len();
        for i in 0..n {
            // position of original point i in the permuted list
            let j = n - 1 - ((i + n - shift) % n);
            prop_assert_eq!(a.labels[i], b.labels[j]);
        }
        prop_assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn pca_rotation_invariant(
        base in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 8..30),
        a in 0.0f64..6.28,
        b in 0.0f64..6.28,
    ) {
        // anisotropic scaling keeps the top two variances distinct
        let pts: Vec<Vec<f64>> = base.iter().map(|p| vec![p[0] * 10.0, p[1] * 3.0, p[2] * 0.3, p[3] * 0.1]).collect();
        let q = rotation(a, b);
        let rotated: Vec<Vec<f64>> = pts.iter().map(|p| (0..4).map(|i| (0..4).map(|j| q[i][j] * p[j]).sum()).collect()).collect();
        let p1 = pca2(&pts).unwrap();
        let p2 = pca2(&rotated).unwrap();
        prop_assume!(p1.variances[0] > 1.05 * p1.variances[1]);
        prop_assert!((p1.explained_share - p2.explained_share).abs() < 1e-9);
        for axis in 0..2 {
            let dot: f64 = p1.coords.iter().zip(&p2.coords).map(|(u, v)| u[axis] * v[axis]).sum();
            let sign = if dot < 0.0 { -1.0 } else { 1.0 };
            for (u, v) in p1.coords.iter().zip(&p2.coords) {
                prop_assert!((u[axis] - sign * v[axis]).abs() < 1e-6, "axis {axis}: {} vs {}", u[axis], v[axis]);
            }
        }
    }
}
