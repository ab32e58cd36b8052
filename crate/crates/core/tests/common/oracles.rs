//! Brute-force references written independently of the library.

use coalshap::volume::{BinaryMask, Dims, Spacing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random characteristic function over `n` players: one uniform value per
/// coalition, indexed by bitmask.
pub fn random_game(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Shapley values by averaging marginal contributions over all `n!`
/// orderings.
pub fn permutation_shapley(n: usize, game: &[f64]) -> Vec<f64> {
    fn walk(order: &mut Vec<usize>, used: u32, n: usize, game: &[f64], acc: &mut [f64], count: &mut u64) {
        if order.len() == n {
            let mut bits = 0usize;
            for &p in order.iter() {
                let before = game[bits];
                bits |= 1 << p;
                acc[p] += game[bits] - before;
            }
            *count += 1;
            return;
        }
        for p in 0..n {
            if used & (1 << p) == 0 {
                order.push(p);
                walk(order, used | (1 << p), n, game, acc, count);
                order.pop();
            }
        }
    }
    let mut acc = vec![0.0; n];
    let mut count = 0u64;
    walk(&mut Vec::with_capacity(n), 0, n, game, &mut acc, &mut count);
    acc.iter().map(|a| a / count as f64).collect()
}

/// Random mask made of a few axis-aligned boxes plus scattered voxels.
pub fn random_mask(rng: &mut ChaCha8Rng, dims: Dims, spacing: Spacing) -> BinaryMask {
    let [d, h, w] = dims.as_array();
    let mut bits = vec![false; dims.len()];
    for _ in 0..rng.random_range(0..3) {
        let z0 = rng.random_range(0..d);
        let y0 = rng.random_range(0..h);
        let x0 = rng.random_range(0..w);
        let z1 = rng.random_range(z0..d) + 1;
        let y1 = rng.random_range(y0..h) + 1;
        let x1 = rng.random_range(x0..w) + 1;
        for z in z0..z1 {
            for y in y0..y1 {
                for x in x0..x1 {
                    bits[(z * h + y) * w + x] = true;
                }
            }
        }
    }
    let scatter = rng.random_range(0.0..0.05);
    for b in bits.iter_mut() {
        if rng.random::<f64>() < scatter {
            *b = true;
        }
    }
    BinaryMask::new(dims, spacing, bits).unwrap()
}

fn coords(dims: Dims, i: usize) -> [usize; 3] {
    let [_, h, w] = dims.as_array();
    [i / (h * w), (i / w) % h, i % w]
}

fn sq_dist(a: [usize; 3], b: [usize; 3], s: [f64; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let d = (a[k] as f64 - b[k] as f64) * s[k];
            d * d
        })
        .sum()
}

/// Squared distance from every voxel to the nearest foreground voxel, by
/// scanning all foreground voxels.
pub fn brute_sq_edt(mask: &BinaryMask) -> Vec<f64> {
    let dims = mask.dims();
    let s = mask.spacing().as_f64();
    let fg: Vec<[usize; 3]> = (0..dims.len()).filter(|&i| mask.bits()[i]).map(|i| coords(dims, i)).collect();
    (0..dims.len())
        .map(|i| {
            let c = coords(dims, i);
            fg.iter().map(|&f| sq_dist(c, f, s)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Foreground voxels on the domain edge or with a background 6-neighbour.
pub fn brute_surface(mask: &BinaryMask) -> Vec<[usize; 3]> {
    let dims = mask.dims();
    let size = dims.as_array();
    let on = |c: [i64; 3]| -> bool {
        if (0..3).any(|k| c[k] < 0 || c[k] >= size[k] as i64) {
            return false;
        }
        mask.get(c[0] as usize, c[1] as usize, c[2] as usize)
    };
    let mut out = Vec::new();
    for i in 0..dims.len() {
        if !mask.bits()[i] {
            continue;
        }
        let c = coords(dims, i);
        let ci = c.map(|v| v as i64);
        let edge = (0..3).any(|k| c[k] == 0 || c[k] + 1 == size[k]);
        let steps = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
        if edge || steps.iter().any(|s| !on([ci[0] + s[0], ci[1] + s[1], ci[2] + s[2]])) {
            out.push(c);
        }
    }
    out
}

/// Linear-interpolation percentile, the default method of numpy.
pub fn np_percentile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// HD95 from all surface-voxel pairs: the larger of the two directed 95th
/// percentiles. Both empty gives 0; exactly one empty gives `penalty`.
pub fn brute_hd95(a: &BinaryMask, b: &BinaryMask, penalty: f64) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return penalty,
        _ => {}
    }
    let s = a.spacing().as_f64();
    let sa = brute_surface(a);
    let sb = brute_surface(b);
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| -> Vec<f64> {
        from.iter()
            .map(|&p| to.iter().map(|&q| sq_dist(p, q, s)).fold(f64::INFINITY, f64::min).sqrt())
            .collect()
    };
    np_percentile(directed(&sa, &sb), 95.0).max(np_percentile(directed(&sb, &sa), 95.0))
}
