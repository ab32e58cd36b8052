//! Special functions and the distribution tails built on them.

use super::StatsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64, StatsError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(StatsError::Domain(format!("ln_gamma({x})")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(StatsError::Domain(format!("incomplete beta failed to converge (a={a}, b={b}, x={x})")))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(StatsError::Domain(format!("reg_inc_beta({a}, {b}, {x})")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// `1 - I_x(a, b)` without cancellation in the upper tail.
fn reg_inc_beta_complement(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if x == 0.0 || x == 1.0 {
        return Ok(1.0 - x);
    }
    reg_inc_beta(b, a, 1.0 - x)
}

fn gamma_series(s: f64, x: f64) -> Result<f64, StatsError> {
    let mut ap = s;
    let mut sum = 1.0 / s;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(sum * (-x + s * x.ln() - ln_gamma_pos(s)).exp());
        }
    }
    Err(StatsError::Domain(format!("incomplete gamma series failed (s={s}, x={x})")))
}

fn gamma_cf(s: f64, x: f64) -> Result<f64, StatsError> {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((-x + s * x.ln() - ln_gamma_pos(s)).exp() * h);
        }
    }
    Err(StatsError::Domain(format!("incomplete gamma fraction failed (s={s}, x={x})")))
}

/// Regularized lower incomplete gamma `P(s, x)`.
pub fn reg_inc_gamma(s: f64, x: f64) -> Result<f64, StatsError> {
    if !(s > 0.0) || !(x >= 0.0) {
        return Err(StatsError::Domain(format!("reg_inc_gamma({s}, {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x < s + 1.0 {
        gamma_series(s, x)
    } else {
        Ok(1.0 - gamma_cf(s, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(s, x) = 1 - P(s, x)`.
pub fn reg_inc_gamma_upper(s: f64, x: f64) -> Result<f64, StatsError> {
    if !(s > 0.0) || !(x >= 0.0) {
        return Err(StatsError::Domain(format!("reg_inc_gamma_upper({s}, {x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < s + 1.0 {
        Ok(1.0 - gamma_series(s, x)?)
    } else {
        gamma_cf(s, x)
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let q = reg_inc_gamma_upper(0.5, 0.5 * z * z).expect("valid domain");
    if z < 0.0 {
        0.5 * q
    } else {
        1.0 - 0.5 * q
    }
}

/// Two-sided normal tail `P(|Z| > |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    reg_inc_gamma_upper(0.5, 0.5 * z * z).expect("valid domain")
}

/// Survival function of χ²(k).
pub fn chi2_sf(x: f64, k: f64) -> Result<f64, StatsError> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    reg_inc_gamma_upper(0.5 * k, 0.5 * x)
}

/// Survival function of F(d1, d2).
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64, StatsError> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(StatsError::Domain(format!("F({d1}, {d2})")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64, StatsError> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    reg_inc_beta_complement(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))
}

/// Student-t CDF with `nu` degrees of freedom.
pub fn t_cdf(t: f64, nu: f64) -> Result<f64, StatsError> {
    if !(nu > 0.0) {
        return Err(StatsError::Domain(format!("t with {nu} degrees of freedom")));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let t2 = t * t;
    if t2 < nu {
        // central mass P(|T| < |t|), accurate near zero
        let central = reg_inc_beta(0.5, 0.5 * nu, t2 / (nu + t2))?;
        return Ok(0.5 + 0.5 * central.copysign(t));
    }
    let tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, nu / (nu + t2))?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Bisection on a monotone CDF until the bracket is narrower than `tol`.
fn invert_cdf(p: f64, tol: f64, mut cdf: impl FnMut(f64) -> Result<f64, StatsError>, mut lo: f64, mut hi: f64) -> Result<f64, StatsError> {
    while cdf(lo)? > p {
        lo = if lo < 0.0 { lo * 2.0 } else { lo - 1.0 };
    }
    while cdf(hi)? < p {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(StatsError::Domain(format!("quantile {p} not bracketed")));
        }
    }
    while hi - lo > tol * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub const QUANTILE_TOL: f64 = 1e-12;

/// Student-t quantile by bisection on [`t_cdf`].
pub fn t_quantile(p: f64, nu: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Domain(format!("t quantile at p={p}")));
    }
    invert_cdf(p, QUANTILE_TOL, |t| t_cdf(t, nu), -1.0, 1.0)
}

/// F quantile by bisection on [`f_cdf`].
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Domain(format!("F quantile at p={p}")));
    }
    invert_cdf(p, QUANTILE_TOL, |x| f_cdf(x, d1, d2), 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_identities() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((ln_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5).unwrap() - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn normal_symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for z in [0.3, 1.0, 1.96, 4.0, 9.0] {
            assert!((normal_cdf(z) + normal_cdf(-z) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-14);
    }

    #[test]
    fn inc_beta_integer_polynomial() {
        // I_x(2,3) = sum_{j=2}^{4} C(4,j) x^j (1-x)^(4-j)
        let x: f64 = 0.4;
        let poly = 6.0 * x.powi(2) * (1.0 - x).powi(2) + 4.0 * x.powi(3) * (1.0 - x) + x.powi(4);
        let v = reg_inc_beta(2.0, 3.0, x).unwrap();
        assert!((v - poly).abs() < 1e-14);
        assert_eq!((v * 1e4).round() / 1e4, 0.5248);
        assert!(reg_inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn inc_gamma_closed_forms() {
        // P(1, x) = 1 - e^{-x}
        for x in [0.1, 1.0, 3.0, 20.0] {
            assert!((reg_inc_gamma(1.0, x).unwrap() - (1.0 - (-x as f64).exp())).abs() < 1e-14);
            assert!((reg_inc_gamma_upper(1.0, x).unwrap() - (-x as f64).exp()).abs() < 1e-14);
        }
        // chi2(2) tail is exp(-x/2)
        assert!((chi2_sf(7.2, 2.0).unwrap() - (-3.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn quantiles_invert_cdfs() {
        for nu in [1.0, 4.0, 29.0, 99.0] {
            for p in [0.025, 0.5, 0.975, 0.999] {
                let t = t_quantile(p, nu).unwrap();
                assert!((t_cdf(t, nu).unwrap() - p).abs() < 1e-11, "nu={nu} p={p}");
            }
        }
        let f = f_quantile(0.95, 3.0, 20.0).unwrap();
        assert!((f_sf(f, 3.0, 20.0).unwrap() - 0.05).abs() < 1e-11);
        // t(1) is Cauchy: quantile 0.75 = 1
        assert!((t_quantile(0.75, 1.0).unwrap() - 1.0).abs() < 1e-10);
    }
}
