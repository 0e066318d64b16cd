//! Special functions: Gamma, Bessel J and I of real order, Gegenbauer polynomials.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{ensure, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Nonnegative real Bessel order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BesselOrder {
    nu: f64,
}

impl BesselOrder {
    /// Validates `nu ≥ 0`.
    pub fn new(nu: f64) -> Result<Self> {
        ensure(nu.is_finite() && nu >= 0.0, || {
            format!("Bessel order must be finite and nonnegative, got {nu}")
        })?;
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

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

/// Γ(x) for real `x` that is not a nonpositive integer.
pub fn gamma_fn(x: f64) -> Result<f64> {
    ensure(x.is_finite(), || format!("gamma argument must be finite, got {x}"))?;
    ensure(!(x <= 0.0 && x == x.floor()), || {
        format!("gamma has a pole at {x}")
    })?;
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x == x.floor() && (1.0..=171.0).contains(&x) {
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // Split the power so that large arguments do not overflow before the exponential.
    let half_pow = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half_pow * (-t).exp() * half_pow * acc
}

/// ln Γ(x) for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma_complex(Complex64::new(x, 0.0)).re
}

const STIRLING: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// ln Γ(z) for complex `z` away from the poles.
///
/// The imaginary part is determined only modulo 2π, which is all that is
/// needed when the result is exponentiated.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - ln_sin_pi(z) - ln_gamma_complex(1.0 - z);
    }
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut series = Complex64::new(0.0, 0.0);
    let mut zpow = zi;
    for (k, b) in STIRLING.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        series += zpow * (b / (n * (n - 1.0)));
        zpow *= zi2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift
}

/// ln sin(πz), evaluated without overflow for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    let i = Complex64::i();
    if w.im > 1.0 {
        (i * 0.5).ln() - i * w + (1.0 - (2.0 * i * w).exp()).ln()
    } else if w.im < -1.0 {
        (-i * 0.5).ln() + i * w + (1.0 - (-2.0 * i * w).exp()).ln()
    } else {
        w.sin().ln()
    }
}

/// Scaled modified Bessel value: I_ν(x) = `scaled`·e^{`exponent`}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBesselI {
    /// e^{−x}·I_ν(x).
    pub scaled: f64,
    /// The exponent removed from the value, equal to `x`.
    pub exponent: f64,
}

impl ScaledBesselI {
    /// ln I_ν(x); −∞ when the value is zero.
    pub fn ln_value(&self) -> f64 {
        self.scaled.ln() + self.exponent
    }

    /// I_ν(x) itself, which overflows for x beyond about 700.
    pub fn value(&self) -> f64 {
        self.scaled * self.exponent.exp()
    }
}

/// Modified Bessel function I_ν(x) in scaled form.
pub fn bessel_i(order: BesselOrder, x: f64) -> Result<ScaledBesselI> {
    ensure(x >= 0.0 && !x.is_nan(), || {
        format!("Bessel argument must be nonnegative, got {x}")
    })?;
    Ok(ScaledBesselI {
        scaled: bessel_i_scaled(order.nu, x),
        exponent: x,
    })
}

/// e^{−x}·I_ν(x) for ν ≥ 0 and x ≥ 0.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x.is_infinite() {
        return 0.0;
    }
    if nu >= 30.0 {
        i_debye_scaled(nu, x)
    } else if x >= 40.0_f64.max(nu * nu) {
        i_hankel_scaled(nu, x)
    } else {
        i_series_scaled(nu, x)
    }
}

fn i_series_scaled(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut ln_pref = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) - x;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        sum += term;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            ln_pref += 280.0 * std::f64::consts::LN_10;
        }
        if term < 1e-17 * sum && k * (nu + k) > q {
            break;
        }
        k += 1.0;
    }
    (ln_pref + sum.ln()).exp()
}

fn i_hankel_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut sum = 1.0;
    let mut term = 1.0_f64;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

const DEBYE_TERMS: usize = 14;

/// Coefficients of the Debye polynomials u_k(p), lowest power first.
fn debye_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS - 1 {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            // ½p²(1−p²)u′(p)
            for (j, c) in u.iter().enumerate().skip(1) {
                let dc = c * j as f64;
                next[j + 1] += 0.5 * dc;
                next[j + 3] -= 0.5 * dc;
            }
            // ⅛∫₀^p (1−5t²)u(t) dt
            for (j, c) in u.iter().enumerate() {
                next[j + 1] += 0.125 * c / (j + 1) as f64;
                next[j + 3] -= 0.125 * 5.0 * c / (j + 3) as f64;
            }
            polys.push(next);
        }
        polys
    })
}

fn i_debye_scaled(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let sq = (1.0 + z * z).sqrt();
    let p = 1.0 / sq;
    let eta_minus_z = 1.0 / (sq + z) + (z / (1.0 + sq)).ln();
    let mut sum = 0.0;
    let mut nu_pow = 1.0;
    for poly in debye_polys() {
        let u = poly.iter().rev().fold(0.0, |acc, c| acc * p + c);
        sum += u / nu_pow;
        nu_pow *= nu;
    }
    (nu * eta_minus_z).exp() * sum / (2.0 * PI * nu * sq).sqrt()
}

/// Bessel function of the first kind J_ν(x).
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    ensure(x >= 0.0 && x.is_finite(), || {
        format!("Bessel argument must be finite and nonnegative, got {x}")
    })?;
    Ok(bessel_j_raw(order.nu, x))
}

fn bessel_j_raw(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let q = 0.25 * x * x;
    if x < 2.0 || q < 3.0 * (nu + 1.0) {
        j_series(nu, x)
    } else if x > 25.0_f64.max(0.5 * nu * nu) {
        j_hankel(nu, x)
    } else {
        j_steed(nu, x)
    }
}

fn j_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut sum = 1.0;
    let mut term = 1.0_f64;
    let mut k = 1.0;
    loop {
        term *= -q / (k * (nu + k));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k * (nu + k) > q {
            break;
        }
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp() * sum
}

fn j_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut qs = 0.0;
    let mut term = 1.0_f64;
    for k in 1..400 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() > term.abs() && k > 1 {
            break;
        }
        term = next;
        // Terms alternate between Q (odd k) and P (even k) with signs (−1)^{⌊k/2⌋}.
        match k % 4 {
            1 => qs += term,
            2 => p -= term,
            3 => qs -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - qs * chi.sin())
}

/// Steed's continued-fraction method, valid for x ≥ 2.
fn j_steed(nu: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;
    let nl = (nu + 0.5).floor();
    let xmu = nu - nl;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..1_000_000 {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }

    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let mut fact = nu * xi;
    let mut l = nl as i64;
    while l >= 1 {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
        l -= 1;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let mut a = 0.25 - xmu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..1_000_000 {
        a += 2.0 * (i as f64 - 1.0);
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    rjl1 * (rjmu / rjl)
}

/// Gegenbauer polynomial C_ℓ^λ(t) by the three-term recurrence.
pub fn gegenbauer(ell: usize, lambda: f64, t: f64) -> Result<f64> {
    ensure(t.abs() <= 1.0 + 1e-12, || {
        format!("Gegenbauer argument must lie in [-1, 1], got {t}")
    })?;
    ensure(lambda > 0.0, || format!("Gegenbauer index must be positive, got {lambda}"))?;
    let mut seq = GegenbauerSeq::new(lambda, t);
    let mut value = seq.next_value();
    for _ in 0..ell {
        value = seq.next_value();
    }
    Ok(value)
}

/// Successive values C_0^λ(t), C_1^λ(t), … produced by the recurrence.
#[derive(Debug, Clone)]
pub struct GegenbauerSeq {
    lambda: f64,
    t: f64,
    ell: usize,
    prev: f64,
    cur: f64,
}

impl GegenbauerSeq {
    pub fn new(lambda: f64, t: f64) -> Self {
        Self {
            lambda,
            t,
            ell: 0,
            prev: 0.0,
            cur: 1.0,
        }
    }

    /// Returns C_ℓ^λ(t) for the current ℓ and advances ℓ by one.
    pub fn next_value(&mut self) -> f64 {
        let out = self.cur;
        let l = (self.ell + 1) as f64;
        let lam = self.lambda;
        let next = if self.ell == 0 {
            2.0 * lam * self.t
        } else {
            (2.0 * (l + lam - 1.0) * self.t * self.cur - (l + 2.0 * lam - 2.0) * self.prev) / l
        };
        self.prev = self.cur;
        self.cur = next;
        self.ell += 1;
        out
    }
}

/// C_ℓ^λ(1) = Γ(ℓ+2λ)/(ℓ!Γ(2λ)).
pub fn gegenbauer_at_one(ell: usize, lambda: f64) -> f64 {
    (0..ell).fold(1.0, |acc, j| acc * (j as f64 + 2.0 * lambda) / (j as f64 + 1.0))
}

/// Surface area ω_{d−1} = 2π^{d/2}/Γ(d/2) of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// ln of the Mellin multiplier 2^μ Γ((ν+μ+1)/2)/Γ((ν−μ+1)/2).
pub(crate) fn ln_hankel_mellin(nu: f64, mu: Complex64) -> Complex64 {
    mu * LN_2 + ln_gamma_complex((nu + mu + 1.0) * 0.5) - ln_gamma_complex((nu - mu + 1.0) * 0.5)
}
