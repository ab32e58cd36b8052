//! The individual tests behind the consistency battery, on three small
//! groups whose third member is shifted and more spread out.
//!
//! ```text
//! cargo run --example hypothesis_tests
//! ```

use coalshap::stats::{
    dagostino_k2, dunn, kruskal_wallis, levene, paired_mean_ci, Adjustment, Centering, SampleGroup,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a: Vec<f64> = (0..20).map(|i| 0.10 + 0.01 * ((i * 7) % 11) as f64).collect();
    let b: Vec<f64> = (0..20).map(|i| 0.11 + 0.01 * ((i * 5) % 11) as f64).collect();
    let c: Vec<f64> = (0..20).map(|i| 0.25 + 0.03 * ((i * 3) % 11) as f64).collect();
    let groups = [SampleGroup::new("fold1", a.clone()), SampleGroup::new("fold2", b.clone()), SampleGroup::new("fold3", c)];
    let alpha = 0.01;

    for centering in [Centering::Mean, Centering::Median] {
        let r = levene(&groups, centering, alpha)?;
        println!("levene {centering:?}: W = {:.4}, p = {:.3e}, reject = {}", r.statistic, r.p_value, r.reject);
    }
    let kw = kruskal_wallis(&groups, alpha)?;
    println!("kruskal-wallis: H = {:.4}, p = {:.3e}, reject = {}", kw.statistic, kw.p_value, kw.reject);
    for r in dunn(&groups, Adjustment::Holm, alpha)? {
        println!("  dunn {:?}: z = {:.3}, p_raw = {:.2e}, p_holm = {:.2e}, reject = {}", r.groups, r.statistic, r.p_raw, r.p_value, r.reject);
    }

    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let k2 = dagostino_k2(&diff, alpha)?;
    println!("K² of paired differences: {:.3}, p = {:.3}", k2.statistic, k2.p_value);
    let ci = paired_mean_ci(&a, &b, 0.95)?;
    println!("mean difference {:.4}, 95% CI [{:.4}, {:.4}]", ci.mean, ci.lo, ci.hi);
    Ok(())
}
