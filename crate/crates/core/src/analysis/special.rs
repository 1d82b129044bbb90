//! Modified Bessel `K0` and the complementary error function.
//!
//! `K0` uses the ascending series for `x <= 2` and Steed's continued fraction
//! (Temme's form for order zero) above it. `erfc` uses the Maclaurin series of
//! `erf` for `|x| <= 2` and a Lentz-evaluated continued fraction beyond.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-17;
const MAX_TERMS: usize = 10_000;

/// `K0(x)` for `x > 0`; `+inf` at zero and NaN for negative input.
pub fn bessel_k0(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        f64::NAN
    } else if x == 0.0 {
        f64::INFINITY
    } else if x <= 2.0 {
        k0_series(x)
    } else {
        (-x).exp() * k0e_cf(x)
    }
}

/// Exponentially scaled `e^x K0(x)`, finite for all `x > 0`.
pub fn bessel_k0e(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        f64::NAN
    } else if x == 0.0 {
        f64::INFINITY
    } else if x <= 2.0 {
        x.exp() * k0_series(x)
    } else {
        k0e_cf(x)
    }
}

// K0(x) = -(ln(x/2) + gamma) I0(x) + sum_{k>=1} H_k (x^2/4)^k / (k!)^2
fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let lead = -((0.5 * x).ln() + EULER_GAMMA);
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = lead;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let add = term * (lead + harmonic);
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

// Steed's CF2 for nu = 0: K0(x) = sqrt(pi / 2x) e^{-x} / s.
fn k0e_cf(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() / s
}

/// `erfc(x) = (2/sqrt(pi)) int_x^inf e^{-t^2} dt`, relative accuracy about 1e-15.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x == f64::INFINITY {
        0.0
    } else if x < 0.0 {
        2.0 - erfc(-x)
    } else if x <= 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x.is_infinite() {
        x.signum()
    } else if x.abs() <= 2.0 {
        erf_series(x)
    } else {
        x.signum() * (1.0 - erfc_cf(x.abs()))
    }
}

// erf(x) = (2/sqrt(pi)) sum_n (-1)^n x^{2n+1} / (n! (2n+1))
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut power = x;
    let mut sum = x;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        power *= -x2 / nf;
        let add = power / (2.0 * nf + 1.0);
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

// erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..MAX_TERMS {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x * x).exp() / (f * PI.sqrt())
}
