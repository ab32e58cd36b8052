use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, f_sf, normal_two_sided, t_quantile};
use super::{SampleGroup, StatsError};

/// Outcome of one hypothesis test. `reject` holds exactly when
/// `p_value < alpha`; `p_value` is the adjusted value when a multiple
/// comparison correction applies and equals `p_raw` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    /// Written as `null` in JSON when infinite.
    #[serde(with = "infinite_as_null")]
    pub statistic: f64,
    pub df1: Option<f64>,
    pub df2: Option<f64>,
    pub p_raw: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub groups: Vec<String>,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl TestReport {
    fn new(test_name: &str, statistic: f64, df: (Option<f64>, Option<f64>), p: f64, alpha: f64, groups: Vec<String>) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            test_name: test_name.to_string(),
            statistic,
            df1: df.0,
            df2: df.1,
            p_raw: p,
            p_value: p,
            alpha,
            reject: p < alpha,
            groups,
        }
    }

    fn with_adjusted(mut self, p_adj: f64) -> Self {
        self.p_value = p_adj.clamp(0.0, 1.0);
        self.reject = self.p_value < self.alpha;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    Mean,
    /// Brown–Forsythe variant.
    Median,
}

impl FromStr for Centering {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            _ => Err(format!("unknown centering {s:?} (mean|median)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    Bonferroni,
    #[default]
    Holm,
}

impl FromStr for Adjustment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "bonferroni" => Ok(Self::Bonferroni),
            "holm" => Ok(Self::Holm),
            _ => Err(format!("unknown adjustment {s:?} (none|bonferroni|holm)")),
        }
    }
}

fn check_finite(x: &[f64], what: &str) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite(what.to_string()))
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Central moments m2, m3, m4 (biased, divisor n).
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Adjusted Fisher–Pearson skewness `G1 = g1 * sqrt(n(n-1)) / (n-2)`.
pub fn skewness(x: &[f64]) -> Result<f64, StatsError> {
    if x.len() < 3 {
        return Err(StatsError::SampleTooSmall { needed: 3, got: x.len() });
    }
    check_finite(x, "skewness")?;
    let (m2, m3, _) = central_moments(x);
    if m2 <= f64::EPSILON * f64::EPSILON * mean(x).abs().max(1.0).powi(2) {
        return Err(StatsError::DegenerateSample);
    }
    let n = x.len() as f64;
    let g1 = m3 / m2.powf(1.5);
    Ok(g1 * (n * (n - 1.0)).sqrt() / (n - 2.0))
}

pub const K2_MIN_SAMPLE: usize = 20;

/// D'Agostino–Pearson omnibus normality test: `K² = Z_skew² + Z_kurt²`
/// against χ²(2).
pub fn dagostino_k2(x: &[f64], alpha: f64) -> Result<TestReport, StatsError> {
    let n_us = x.len();
    if n_us < K2_MIN_SAMPLE {
        return Err(StatsError::SampleTooSmall {
            needed: K2_MIN_SAMPLE,
            got: n_us,
        });
    }
    check_finite(x, "dagostino_k2")?;
    let (m2, m3, m4) = central_moments(x);
    if m2 == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let n = n_us as f64;

    let b1 = m3 / m2.powf(1.5);
    let y = b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let a = (2.0 / (w2 - 1.0)).sqrt();
    let z_skew = delta * (y / a + ((y / a).powi(2) + 1.0).sqrt()).ln();

    let b2 = m4 / (m2 * m2);
    let e = 3.0 * (n - 1.0) / (n + 1.0);
    let var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let xk = (b2 - e) / var_b2.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let big_a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * big_a);
    let denom = 1.0 + xk * (2.0 / (big_a - 4.0)).sqrt();
    if denom == 0.0 {
        return Err(StatsError::Domain("kurtosis transform undefined".into()));
    }
    let term2 = denom.signum() * ((1.0 - 2.0 / big_a) / denom.abs()).cbrt();
    let z_kurt = (term1 - term2) / (2.0 / (9.0 * big_a)).sqrt();

    let k2 = z_skew * z_skew + z_kurt * z_kurt;
    let p = chi2_sf(k2, 2.0)?;
    Ok(TestReport::new("dagostino_k2", k2, (Some(2.0), None), p, alpha, vec![]))
}

fn check_groups(groups: &[SampleGroup], min_each: usize) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientGroups(format!("need at least 2 groups, got {}", groups.len())));
    }
    for g in groups {
        if g.values.len() < min_each {
            return Err(StatsError::SampleTooSmall {
                needed: min_each,
                got: g.values.len(),
            });
        }
        check_finite(&g.values, &g.label)?;
    }
    Ok(())
}

fn labels(groups: &[SampleGroup]) -> Vec<String> {
    groups.iter().map(|g| g.label.clone()).collect()
}

pub const MIN_GROUP_SIZE: usize = 3;

/// Levene's test for equal variances (Brown–Forsythe with median centering).
pub fn levene(groups: &[SampleGroup], centering: Centering, alpha: f64) -> Result<TestReport, StatsError> {
    check_groups(groups, MIN_GROUP_SIZE)?;
    let k = groups.len() as f64;
    let z: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match centering {
                Centering::Mean => mean(&g.values),
                Centering::Median => median(&g.values),
            };
            g.values.iter().map(|y| (y - c).abs()).collect()
        })
        .collect();
    let n_total: usize = z.iter().map(Vec::len).sum();
    let n = n_total as f64;
    let zbar_i: Vec<f64> = z.iter().map(|zi| mean(zi)).collect();
    let zbar = z.iter().flatten().sum::<f64>() / n;
    let between: f64 = z.iter().zip(&zbar_i).map(|(zi, m)| zi.len() as f64 * (m - zbar).powi(2)).sum();
    let within: f64 = z.iter().zip(&zbar_i).map(|(zi, m)| zi.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sum();
    let df = (Some(k - 1.0), Some(n - k));
    let name = match centering {
        Centering::Mean => "levene",
        Centering::Median => "brown_forsythe",
    };
    if within == 0.0 {
        // every group has constant absolute deviations
        let (w, p) = if between == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(TestReport::new(name, w, df, p, alpha, labels(groups)));
    }
    let w = (n - k) / (k - 1.0) * between / within;
    let p = f_sf(w, k - 1.0, n - k)?;
    Ok(TestReport::new(name, w, df, p, alpha, labels(groups)))
}

/// Midranks (1-based, ties share the average rank) and the tie sum
/// `Σ (t³ - t)` over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

struct RankSummary {
    mean_ranks: Vec<f64>,
    sizes: Vec<f64>,
    n: f64,
    tie_sum: f64,
}

fn rank_groups(groups: &[SampleGroup]) -> RankSummary {
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let (ranks, tie_sum) = midranks(&pooled);
    let mut offset = 0;
    let mut mean_ranks = Vec::with_capacity(groups.len());
    for g in groups {
        let r = &ranks[offset..offset + g.values.len()];
        mean_ranks.push(mean(r));
        offset += g.values.len();
    }
    RankSummary {
        mean_ranks,
        sizes: groups.iter().map(|g| g.values.len() as f64).collect(),
        n: pooled.len() as f64,
        tie_sum,
    }
}

pub const KW_MIN_TOTAL: usize = 5;

fn check_rank_test(groups: &[SampleGroup]) -> Result<(), StatsError> {
    check_groups(groups, MIN_GROUP_SIZE)?;
    let total: usize = groups.iter().map(|g| g.values.len()).sum();
    if total < KW_MIN_TOTAL {
        return Err(StatsError::SampleTooSmall {
            needed: KW_MIN_TOTAL,
            got: total,
        });
    }
    Ok(())
}

/// Kruskal–Wallis H with midranks and tie correction, against χ²(k-1).
pub fn kruskal_wallis(groups: &[SampleGroup], alpha: f64) -> Result<TestReport, StatsError> {
    check_rank_test(groups)?;
    let r = rank_groups(groups);
    let k = groups.len() as f64;
    let n = r.n;
    let correction = 1.0 - r.tie_sum / (n * n * n - n);
    let df = (Some(k - 1.0), None);
    if correction <= 0.0 {
        return Ok(TestReport::new("kruskal_wallis", 0.0, df, 1.0, alpha, labels(groups)));
    }
    let centre = (n + 1.0) / 2.0;
    let spread: f64 = r.mean_ranks.iter().zip(&r.sizes).map(|(m, s)| s * (m - centre).powi(2)).sum();
    let h = 12.0 * spread / (n * (n + 1.0)) / correction;
    let p = chi2_sf(h, k - 1.0)?;
    Ok(TestReport::new("kruskal_wallis", h, df, p, alpha, labels(groups)))
}

/// Multiple-comparison adjustment; the result preserves input order.
pub fn adjust_p_values(p: &[f64], method: Adjustment) -> Vec<f64> {
    let m = p.len() as f64;
    match method {
        Adjustment::None => p.to_vec(),
        Adjustment::Bonferroni => p.iter().map(|v| (v * m).min(1.0)).collect(),
        Adjustment::Holm => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            let mut out = vec![0.0; p.len()];
            let mut running: f64 = 0.0;
            for (rank, &i) in order.iter().enumerate() {
                let v = ((m - rank as f64) * p[i]).min(1.0);
                running = running.max(v);
                out[i] = running;
            }
            out
        }
    }
}

/// Dunn's pairwise post-hoc test on Kruskal–Wallis ranks, for every pair
/// `(i, j)` with `i < j` in input order. `statistic` is the signed z of
/// group i minus group j.
pub fn dunn(groups: &[SampleGroup], adjustment: Adjustment, alpha: f64) -> Result<Vec<TestReport>, StatsError> {
    check_rank_test(groups)?;
    let r = rank_groups(groups);
    let n = r.n;
    let tie_term = r.tie_sum / (12.0 * (n - 1.0));
    let base = n * (n + 1.0) / 12.0 - tie_term;
    let mut reports = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let se = (base * (1.0 / r.sizes[i] + 1.0 / r.sizes[j])).sqrt();
            let diff = r.mean_ranks[i] - r.mean_ranks[j];
            let (z, p) = if se > 0.0 {
                let z = diff / se;
                (z, normal_two_sided(z))
            } else {
                (0.0, 1.0)
            };
            reports.push(TestReport::new(
                "dunn",
                z,
                (None, None),
                p,
                alpha,
                vec![groups[i].label.clone(), groups[j].label.clone()],
            ));
        }
    }
    let raw: Vec<f64> = reports.iter().map(|r| r.p_raw).collect();
    let adjusted = adjust_p_values(&raw, adjustment);
    Ok(reports.into_iter().zip(adjusted).map(|(r, p)| r.with_adjusted(p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub n: usize,
}

/// Student-t interval for the mean of the paired differences `x - y`.
pub fn paired_mean_ci(x: &[f64], y: &[f64], level: f64) -> Result<MeanInterval, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::SampleTooSmall { needed: 2, got: x.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Domain(format!("confidence level {level}")));
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let var = d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(MeanInterval { mean: m, lo: m, hi: m, level, n: d.len() });
    }
    let t = t_quantile(1.0 - (1.0 - level) / 2.0, n - 1.0)?;
    let half = t * (var / n).sqrt();
    Ok(MeanInterval {
        mean: m,
        lo: m - half,
        hi: m + half,
        level,
        n: d.len(),
    })
}
