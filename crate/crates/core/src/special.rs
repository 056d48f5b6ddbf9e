//! Special functions evaluated in log space where overflow is a concern.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln k!`.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "binomial with k > n");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

// ln of the series for P(a, x), valid for x < a + 1
fn ln_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..1_000_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum.ln() + ln_prefactor(a, x)
}

// ln of the continued fraction for Q(a, x), valid for x >= a + 1
fn ln_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1_000_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h.ln() + ln_prefactor(a, x)
}

/// `ln P(a, x)` where `P` is the regularized lower incomplete gamma function.
pub fn ln_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "ln_gamma_p requires a > 0");
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        ln_p_series(a, x)
    } else {
        (-ln_q_fraction(a, x).exp()).ln_1p()
    }
}

/// `ln Q(a, x)` where `Q = 1 - P`.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "ln_gamma_q requires a > 0");
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        (-ln_p_series(a, x).exp()).ln_1p()
    } else {
        ln_q_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    ln_gamma_p(a, x).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    ln_gamma_q(a, x).exp()
}

/// `ln γ(a, x)`, the log of the unregularized lower incomplete gamma.
pub fn ln_lower_gamma(a: f64, x: f64) -> f64 {
    ln_gamma_p(a, x) + ln_gamma(a)
}

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_quantile(dof: f64, p: f64) -> f64 {
    assert!(dof > 0.0 && (0.0..1.0).contains(&p), "chi2_quantile domain");
    if p == 0.0 {
        return 0.0;
    }
    let cdf = |x: f64| gamma_p(dof / 2.0, x / 2.0);
    let mut hi = dof.max(1.0);
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(stat: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, stat / 2.0)
}

/// Bessel function of the first kind of integer order.
///
/// Uses the periodic trapezoid rule on `J_n(x) = (1/2pi) int cos(n t - x sin t) dt`,
/// which converges geometrically once the node count exceeds `|x| + n`.
pub fn bessel_j_int(n: i64, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j_int(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    let m = ((x.abs() + n as f64) * 1.2 + 48.0).ceil() as usize;
    let nf = n as f64;
    let h = 2.0 * PI / m as f64;
    let mut s = 0.0;
    for k in 0..m {
        let t = h * k as f64;
        s += (nf * t - x * t.sin()).cos();
    }
    s / m as f64
}

// Power series of Lambda_nu(z) = Gamma(nu+1) (2/z)^nu J_nu(z).
fn lambda_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > -q.sqrt() {
            break;
        }
    }
    sum
}

fn is_half_integer(nu: f64) -> bool {
    (nu - 0.5).fract() == 0.0 && nu >= 0.5
}

// Spherical Bessel j_m(z) by upward recurrence; stable for z > m.
fn spherical_j(m: usize, z: f64) -> f64 {
    let (s, c) = z.sin_cos();
    let j0 = s / z;
    if m == 0 {
        return j0;
    }
    let mut jm1 = j0;
    let mut j = s / (z * z) - c / z;
    for l in 1..m {
        let next = (2 * l + 1) as f64 / z * j - jm1;
        jm1 = j;
        j = next;
    }
    j
}

/// Bessel function `J_nu(x)` for `x >= 0` and `nu >= 0` an integer or half-integer.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j domain");
    if nu.fract() == 0.0 {
        return bessel_j_int(nu as i64, x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if is_half_integer(nu) && x >= nu + 10.0 {
        let m = (nu - 0.5) as usize;
        return spherical_j(m, x) * (2.0 * x / PI).sqrt();
    }
    lambda_series(nu, x) * (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp()
}

/// `Lambda_nu(z) = Gamma(nu+1) (2/z)^nu J_nu(z)`, with `Lambda_nu(0) = 1`.
pub fn bessel_lambda(nu: f64, z: f64) -> f64 {
    let z = z.abs();
    if z < 6.0 || (!is_half_integer(nu) && nu.fract() != 0.0) {
        return lambda_series(nu, z);
    }
    bessel_j(nu, z) * (ln_gamma(nu + 1.0) - nu * (0.5 * z).ln()).exp()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
