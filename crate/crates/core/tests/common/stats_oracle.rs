use coalshap::stats::special::{chi2_sf, f_sf, ln_gamma, normal_cdf, reg_inc_beta, reg_inc_gamma, reg_inc_gamma_upper, t_cdf, t_quantile};
use coalshap::stats::{dagostino_k2, dunn, kruskal_wallis, levene, paired_mean_ci, skewness, Adjustment, Centering, SampleGroup};
use serde::Deserialize;

#[derive(Deserialize)]
pub struct StatP {
    pub statistic: f64,
    pub p: f64,
}

#[derive(Deserialize)]
pub struct DunnRow {
    pub pair: [usize; 2],
    pub z: f64,
    pub p_raw: f64,
    pub p_adj: f64,
}

#[derive(Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Deserialize)]
pub struct Dunns {
    pub none: Vec<DunnRow>,
    pub bonferroni: Vec<DunnRow>,
    pub holm: Vec<DunnRow>,
}

#[derive(Deserialize)]
pub struct Dataset {
    pub name: String,
    pub groups: Vec<Vec<f64>>,
    pub pair_x: Vec<f64>,
    pub pair_y: Vec<f64>,
    pub normality_sample: Vec<f64>,
    pub skewness: f64,
    pub dagostino_k2: StatP,
    pub paired_ci_95: Interval,
    pub paired_ci_99: Interval,
    pub levene_mean: StatP,
    pub levene_median: StatP,
    pub kruskal: StatP,
    pub dunn: Dunns,
}

#[derive(Deserialize)]
pub struct SeededCi {
    pub d: Vec<f64>,
    #[serde(flatten)]
    pub interval: Interval,
}

#[derive(Deserialize)]
pub struct HandCases {
    pub skewness_1_2_3_4_100: f64,
    pub levene_123_102030: StatP,
    pub kruskal_tied: StatP,
    pub kruskal_123_456_789: StatP,
    pub dunn_123_789_456: Vec<DunnRow>,
    pub paired_ci_seeded: SeededCi,
}

#[derive(Deserialize)]
pub struct SpecialGrid {
    pub ln_gamma: Vec<[f64; 2]>,
    pub reg_inc_beta: Vec<[f64; 4]>,
    pub reg_inc_gamma: Vec<[f64; 4]>,
    pub normal_cdf: Vec<[f64; 2]>,
    pub t_cdf: Vec<[f64; 3]>,
    pub f_sf: Vec<[f64; 4]>,
    pub chi2_sf: Vec<[f64; 3]>,
    pub t_quantile: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
pub struct Corpus {
    pub datasets: Vec<Dataset>,
    pub hand_cases: HandCases,
    pub special: SpecialGrid,
}

pub fn load() -> Corpus {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/stats_corpus.json");
    let text = std::fs::read_to_string(path).expect("stats corpus present");
    serde_json::from_str(&text).expect("stats corpus parses")
}

/// Collects every mismatch beyond `tol`, relative for magnitudes above 1.
#[derive(Default)]
pub struct Checker {
    pub tol: f64,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl Checker {
    pub fn new(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn close(&mut self, what: impl AsRef<str>, got: f64, want: f64) {
        self.checked += 1;
        let scale = want.abs().max(1.0);
        if !((got - want).abs() <= self.tol * scale) {
            self.failures.push(format!("{}: got {got:e}, want {want:e}", what.as_ref()));
        }
    }

    pub fn fail(&mut self, what: impl AsRef<str>) {
        self.checked += 1;
        self.failures.push(what.as_ref().to_string());
    }
}

fn groups_of(raw: &[Vec<f64>]) -> Vec<SampleGroup> {
    raw.iter().enumerate().map(|(i, g)| SampleGroup::new(format!("g{i}"), g.clone())).collect()
}

fn check_dunn(c: &mut Checker, tag: &str, groups: &[SampleGroup], adj: Adjustment, want: &[DunnRow]) {
    let got = match dunn(groups, adj, 0.01) {
        Ok(g) => g,
        Err(e) => return c.fail(format!("{tag}: {e}")),
    };
    if got.len() != want.len() {
        return c.fail(format!("{tag}: {} pairs, want {}", got.len(), want.len()));
    }
    for (g, w) in got.iter().zip(want) {
        let label = format!("{tag} pair {:?}", w.pair);
        if g.groups != [format!("g{}", w.pair[0]), format!("g{}", w.pair[1])] {
            c.fail(format!("{label}: pair order {:?}", g.groups));
        }
        c.close(format!("{label} z"), g.statistic, w.z);
        c.close(format!("{label} p_raw"), g.p_raw, w.p_raw);
        c.close(format!("{label} p_adj"), g.p_value, w.p_adj);
    }
}

fn check_interval(c: &mut Checker, tag: &str, x: &[f64], y: &[f64], want: &Interval) {
    match paired_mean_ci(x, y, want.level) {
        Ok(ci) => {
            c.close(format!("{tag} mean"), ci.mean, want.mean);
            c.close(format!("{tag} lo"), ci.lo, want.lo);
            c.close(format!("{tag} hi"), ci.hi, want.hi);
        }
        Err(e) => c.fail(format!("{tag}: {e}")),
    }
}

/// Runs every hypothesis test over the corpus datasets and hand cases.
pub fn check_tests(corpus: &Corpus, c: &mut Checker) {
    for ds in &corpus.datasets {
        let groups = groups_of(&ds.groups);
        let n = &ds.name;
        for (centering, want) in [(Centering::Mean, &ds.levene_mean), (Centering::Median, &ds.levene_median)] {
            match levene(&groups, centering, 0.01) {
                Ok(r) => {
                    c.close(format!("{n} levene {centering:?} W"), r.statistic, want.statistic);
                    c.close(format!("{n} levene {centering:?} p"), r.p_value, want.p);
                }
                Err(e) => c.fail(format!("{n} levene: {e}")),
            }
        }
        match kruskal_wallis(&groups, 0.01) {
            Ok(r) => {
                c.close(format!("{n} kruskal H"), r.statistic, ds.kruskal.statistic);
                c.close(format!("{n} kruskal p"), r.p_value, ds.kruskal.p);
            }
            Err(e) => c.fail(format!("{n} kruskal: {e}")),
        }
        check_dunn(c, &format!("{n} dunn none"), &groups, Adjustment::None, &ds.dunn.none);
        check_dunn(c, &format!("{n} dunn bonferroni"), &groups, Adjustment::Bonferroni, &ds.dunn.bonferroni);
        check_dunn(c, &format!("{n} dunn holm"), &groups, Adjustment::Holm, &ds.dunn.holm);
        match dagostino_k2(&ds.normality_sample, 0.01) {
            Ok(r) => {
                c.close(format!("{n} k2 statistic"), r.statistic, ds.dagostino_k2.statistic);
                c.close(format!("{n} k2 p"), r.p_value, ds.dagostino_k2.p);
            }
            Err(e) => c.fail(format!("{n} k2: {e}")),
        }
        match skewness(&ds.normality_sample) {
            Ok(s) => c.close(format!("{n} skewness"), s, ds.skewness),
            Err(e) => c.fail(format!("{n} skewness: {e}")),
        }
        check_interval(c, &format!("{n} ci95"), &ds.pair_x, &ds.pair_y, &ds.paired_ci_95);
        check_interval(c, &format!("{n} ci99"), &ds.pair_x, &ds.pair_y, &ds.paired_ci_99);
    }

    let h = &corpus.hand_cases;
    c.close("skewness (1,2,3,4,100)", skewness(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), h.skewness_1_2_3_4_100);
    let lev = levene(&groups_of(&[vec![1.0, 2.0, 3.0], vec![10.0, 20.0, 30.0]]), Centering::Mean, 0.01).unwrap();
    c.close("levene (1,2,3),(10,20,30) W", lev.statistic, h.levene_123_102030.statistic);
    c.close("levene (1,2,3),(10,20,30) p", lev.p_value, h.levene_123_102030.p);
    let kw = kruskal_wallis(&groups_of(&[vec![1.0, 1.0, 2.0], vec![2.0, 3.0, 3.0]]), 0.01).unwrap();
    c.close("kruskal tied H", kw.statistic, h.kruskal_tied.statistic);
    c.close("kruskal tied p", kw.p_value, h.kruskal_tied.p);
    let kw = kruskal_wallis(&groups_of(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]), 0.01).unwrap();
    c.close("kruskal (1,2,3),(4,5,6),(7,8,9) p", kw.p_value, h.kruskal_123_456_789.p);
    let dunn_groups = groups_of(&[vec![1.0, 2.0, 3.0], vec![7.0, 8.0, 9.0], vec![4.0, 5.0, 6.0]]);
    check_dunn(c, "dunn (1,2,3),(7,8,9),(4,5,6)", &dunn_groups, Adjustment::None, &h.dunn_123_789_456);
    let zeros = vec![0.0; h.paired_ci_seeded.d.len()];
    check_interval(c, "seeded ci", &h.paired_ci_seeded.d, &zeros, &h.paired_ci_seeded.interval);
}

/// Compares the special functions against the reference grid.
pub fn check_special(corpus: &Corpus, c: &mut Checker) {
    let s = &corpus.special;
    for &[x, want] in &s.ln_gamma {
        c.close(format!("ln_gamma({x})"), ln_gamma(x).unwrap(), want);
    }
    for &[a, b, x, want] in &s.reg_inc_beta {
        c.close(format!("I_{x}({a},{b})"), reg_inc_beta(a, b, x).unwrap(), want);
    }
    for &[a, x, lower, upper] in &s.reg_inc_gamma {
        c.close(format!("P({a},{x})"), reg_inc_gamma(a, x).unwrap(), lower);
        c.close(format!("Q({a},{x})"), reg_inc_gamma_upper(a, x).unwrap(), upper);
    }
    for &[z, want] in &s.normal_cdf {
        c.close(format!("Phi({z})"), normal_cdf(z), want);
    }
    for &[t, nu, want] in &s.t_cdf {
        c.close(format!("t_cdf({t},{nu})"), t_cdf(t, nu).unwrap(), want);
    }
    for &[f, d1, d2, want] in &s.f_sf {
        c.close(format!("f_sf({f},{d1},{d2})"), f_sf(f, d1, d2).unwrap(), want);
    }
    for &[x, k, want] in &s.chi2_sf {
        c.close(format!("chi2_sf({x},{k})"), chi2_sf(x, k).unwrap(), want);
    }
    for &[p, nu, want] in &s.t_quantile {
        c.close(format!("t_quantile({p},{nu})"), t_quantile(p, nu).unwrap(), want);
    }
}
