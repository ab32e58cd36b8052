//! Dice, distance transform and HD95 on two offset boxes, including the
//! empty-mask policies.
//!
//! ```text
//! cargo run --example surface_metrics
//! ```

use coalshap::metrics::{dice, hausdorff, hd95, hd95_opt, squared_edt, surface, EmptyPolicy, MetricConfig};
use coalshap::volume::{BinaryMask, Dims, Spacing};

fn boxed(dims: Dims, spacing: Spacing, lo: [usize; 3], hi: [usize; 3]) -> BinaryMask {
    let mut idx = Vec::new();
    for z in lo[0]..hi[0] {
        for y in lo[1]..hi[1] {
            for x in lo[2]..hi[2] {
                idx.push(dims.index(z, y, x));
            }
        }
    }
    BinaryMask::from_indices(dims, spacing, &idx).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = Dims::new(16, 16, 16);
    let spacing = Spacing([1.0, 1.0, 2.5]);
    let gt = boxed(dims, spacing, [4, 4, 4], [10, 10, 10]);
    let pred = boxed(dims, spacing, [5, 4, 4], [12, 10, 9]);
    let cfg = MetricConfig::default();

    println!("gt voxels {}, surface voxels {}", gt.count(), surface(&gt).count());
    let edt = squared_edt(&gt)?;
    let far = edt.values.iter().cloned().fold(0.0f64, f64::max).sqrt();
    println!("farthest voxel from gt: {far:.2} mm");

    println!("dice      {:.4}", dice(&pred, &gt, &cfg)?);
    println!("hd95      {:.4} mm", hd95(&pred, &gt, &cfg)?);
    println!("hausdorff {:.4} mm", hausdorff(&pred, &gt, &cfg)?);

    let empty = BinaryMask::empty(dims, spacing)?;
    println!("hd95(empty, empty)       {:?}", hd95_opt(&empty, &empty, &cfg)?);
    println!("hd95(empty, gt) diagonal {:?}", hd95_opt(&empty, &gt, &cfg)?);
    for policy in [EmptyPolicy::Penalty(Some(50.0)), EmptyPolicy::SkipSubject] {
        let cfg = MetricConfig { hd95_empty_policy: policy, ..cfg.clone() };
        println!("hd95(empty, gt) {policy:?}: {:?}", hd95_opt(&empty, &gt, &cfg)?);
    }
    Ok(())
}
