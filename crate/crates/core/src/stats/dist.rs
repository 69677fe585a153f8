//! Distribution functions for the ANOVA and Tukey p-values.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// Natural log of the gamma function (Lanczos, g = 7, n = 9), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn inc_gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - inc_gamma_upper_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn inc_gamma_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - inc_gamma_lower(a, x)
    } else {
        inc_gamma_upper_cf(a, x)
    }
}

fn inc_gamma_upper_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via `erfc(z) = Q(1/2, z^2)`.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x * FRAC_1_SQRT_2;
    let tail = 0.5 * inc_gamma_upper(0.5, z * z);
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Standard normal upper tail `1 - Φ(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// Inverse standard normal CDF (Acklam's rational approximation plus Newton refinement).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let low = 0.02425;
    let mut x = if p < low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let err = normal_cdf(x) - p;
        let pdf = normal_pdf(x);
        if pdf > 0.0 {
            x -= err / pdf;
        }
    }
    x
}

/// CDF of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let t = d1 * x / (d1 * x + d2);
    inc_beta(t, d1 / 2.0, d2 / 2.0)
}

/// Upper tail `P(F > x)`, computed without cancellation.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let t = d2 / (d2 + d1 * x);
    inc_beta(t, d2 / 2.0, d1 / 2.0)
}

/// Two-sided p-value of a Student t statistic.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    inc_beta(x, df / 2.0, 0.5)
}

// 15-point Kronrod nodes/weights and embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]` split into `pieces` initial panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, tol / 2.0, depth - 1) + recurse(f, m, b, tol / 2.0, depth - 1)
    }
    let pieces = pieces.max(1);
    let step = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + step * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + step };
            recurse(&f, lo, hi, tol / pieces as f64, 30)
        })
        .sum()
}

/// CDF of the range of `k` independent standard normals.
pub fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 || k < 2 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let v = integrate(
        |z| normal_pdf(z) * (normal_cdf(z) - normal_cdf(z - w)).powi(km1),
        -8.5,
        8.5 + w.min(30.0),
        8,
        1e-12,
    );
    (k as f64 * v).clamp(0.0, 1.0)
}

/// CDF of the studentized range `q` for `k` groups and `df` error degrees of
/// freedom (`f64::INFINITY` allowed).
///
/// `P(Q <= q) = ∫ f(s) W(q s) ds` where `W` is the normal-range CDF and `f`
/// the density of `sqrt(χ²_df / df)`.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    if q.is_nan() || df.is_nan() {
        return f64::NAN;
    }
    if q <= 0.0 || k < 2 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df.is_infinite() {
        return normal_range_cdf(q, k);
    }
    let half = df / 2.0;
    let ln_norm = std::f64::consts::LN_2 + half * half.ln() - ln_gamma(half);
    let density = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_norm + (df - 1.0) * s.ln() - half * s * s).exp()
    };
    let spread = 12.0 / df.sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread;
    let v = integrate(|s| density(s) * normal_range_cdf(q * s, k), lo, hi, 16, 1e-10);
    v.clamp(0.0, 1.0)
}

/// Two-sided range check used by tests and docs: `P(|Z1 - Z2| <= w)` for the k = 2 range.
pub fn two_normal_range_cdf(w: f64) -> f64 {
    2.0 * normal_cdf(w / SQRT_2) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power-series form of I_x(a, b): x^a / (a B(a,b)) * Σ (1-b)_n / n! * a / (a+n) * x^n.
    fn inc_beta_series(x: f64, a: f64, b: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..200_000 {
            let n = n as f64;
            term *= (n - b) / n * x;
            let add = term * a / (a + n);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        (a * x.ln() - ln_beta(a, b)).exp() / a * sum
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(100.5) - 361.435_540_467_777_6).abs() < 1e-9);
    }

    #[test]
    fn inc_beta_matches_series() {
        for &(x, a, b) in &[
            (0.3, 1.5, 5.0),
            (0.1, 2.5, 3.5),
            (0.6, 4.0, 2.0),
            (0.45, 0.5, 0.5),
            (0.2, 10.0, 7.0),
            (0.7, 1.0, 3.0),
        ] {
            let cf = inc_beta(x, a, b);
            let series = inc_beta_series(x, a, b);
            assert!(((cf - series) / series).abs() < 1e-10, "I_{x}({a},{b}): {cf} vs {series}");
        }
    }

    #[test]
    fn f_cdf_median_and_limits() {
        for d in [1.0, 2.0, 5.0, 17.0, 60.0] {
            assert!((f_cdf(1.0, d, d) - 0.5).abs() < 1e-12);
        }
        assert_eq!(f_cdf(0.0, 3.0, 10.0), 0.0);
        assert_eq!(f_cdf(f64::INFINITY, 3.0, 10.0), 1.0);
        assert!(f_cdf(1e-12, 3.0, 10.0) < 1e-12);
        assert!(f_cdf(1e12, 3.0, 10.0) > 1.0 - 1e-12);
        assert!((f_cdf(2.5, 3.0, 10.0) + f_sf(2.5, 3.0, 10.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((normal_cdf(-2.0) - 0.022_750_131_948_179_2).abs() < 1e-15);
        assert!((normal_sf(8.0) - 6.220_960_574_271_78e-16).abs() < 1e-25);
        for p in [1e-10, 0.01, 0.3, 0.5, 0.9, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-14 * p.max(1e-3) * 1e3);
        }
    }

    #[test]
    fn gamma_p_q_complement() {
        for &(a, x) in &[(0.5, 0.2), (2.0, 3.0), (7.5, 4.0), (3.0, 30.0)] {
            assert!((inc_gamma_lower(a, x) + inc_gamma_upper(a, x) - 1.0).abs() < 1e-14);
        }
        // P(1, x) = 1 - e^-x
        assert!((inc_gamma_lower(1.0, 2.0) - (1.0 - (-2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn range_k2_infinite_df_closed_form() {
        for x in [1.0, 2.0, 3.0] {
            let got = studentized_range_cdf(x, 2, f64::INFINITY);
            assert!((got - two_normal_range_cdf(x)).abs() < 1e-9, "{x}: {got}");
        }
    }

    #[test]
    fn range_finite_df_matches_t_at_k2() {
        for &(q, df) in &[(1.0, 5.0), (3.0, 10.0), (4.5, 3.0), (2.2, 40.0), (6.0, 1.0)] {
            let t = q / SQRT_2;
            let expect = 1.0 - t_two_sided_p(t, df);
            let got = studentized_range_cdf(q, 2, df);
            assert!((got - expect).abs() < 1e-7, "q={q} df={df}: {got} vs {expect}");
        }
    }

    #[test]
    fn range_table_critical_values() {
        // published upper 5% points q(0.05; k, df)
        for &(q, k, df) in &[(3.877, 3, 10.0), (3.151, 2, 10.0), (4.232, 5, 20.0), (4.654, 5, 10.0), (3.356, 3, 120.0)] {
            let p = studentized_range_cdf(q, k, df);
            assert!((p - 0.95).abs() < 5e-4, "q={q} k={k} df={df}: {p}");
        }
        let p = studentized_range_cdf(3.314, 3, f64::INFINITY);
        assert!((p - 0.95).abs() < 5e-4, "df=inf: {p}");
        assert_eq!(studentized_range_cdf(0.0, 3, 10.0), 0.0);
    }

    #[test]
    fn range_cdf_is_monotone() {
        let mut prev = 0.0;
        for i in 1..60 {
            let p = studentized_range_cdf(i as f64 * 0.1, 4, 12.0);
            assert!(p >= prev - 1e-12);
            prev = p;
        }
        assert!(prev > 0.99);
    }
}
