//! Error-function family and Gaussian segment masses.
//!
//! `erf`/`erfc` come from libm; the scaled complement `erfcx` is built on top
//! of them for moderate arguments and switches to a continued fraction in the
//! far tail where `erfc` underflows.

use std::f64::consts::FRAC_1_SQRT_2;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// sqrt(pi/2)
pub const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;
/// sqrt(2 pi)
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// e^{x^2} with the rounding error of x*x folded back in.
fn exp_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * (1.0 + lo)
}

/// Scaled complementary error function e^{x^2} erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.7 {
            return f64::INFINITY;
        }
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < 4.0 {
        return exp_sq(x) * erfc(x);
    }
    if x > 1e8 {
        return FRAC_1_SQRT_PI / x;
    }
    // erfc(x) e^{x^2} sqrt(pi) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
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
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_1,
];

/// ln of the Gaussian mass on a short interval: both ends finite and the
/// integrand's log varies by at most a few units across it.
fn ln_mass_short(a: f64, b: f64) -> f64 {
    let m = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL16_X.iter().zip(GL16_W.iter()) {
        for t in [c - h * x, c + h * x] {
            s += w * (-0.5 * (t * t - m * m)).exp();
        }
    }
    -0.5 * m * m + (h * s).ln()
}

fn is_short(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (b - a) * a.abs().max(b.abs()).max(1.0) < 2.0
}

/// ln of the upper Gaussian tail ∫_a^∞ e^{-t²/2} dt.
pub fn ln_gauss_upper(a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return SQRT_2PI.ln();
    }
    if a == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        SQRT_HALF_PI.ln() - 0.5 * a * a + erfcx(a * FRAC_1_SQRT_2).ln()
    } else {
        (SQRT_HALF_PI * erfc(a * FRAC_1_SQRT_2)).ln()
    }
}

/// ln ∫_a^b e^{-t²/2} dt for a ≤ b, either end possibly infinite.
/// Returns -∞ for an empty interval.
pub fn ln_gauss_mass(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if b <= 0.0 {
        return ln_gauss_mass(-b, -a);
    }
    if is_short(a, b) {
        return ln_mass_short(a, b);
    }
    if a >= 0.5 {
        let ea = erfcx(a * FRAC_1_SQRT_2);
        let eb = if b.is_finite() {
            (-0.5 * (b - a) * (b + a)).exp() * erfcx(b * FRAC_1_SQRT_2)
        } else {
            0.0
        };
        return SQRT_HALF_PI.ln() - 0.5 * a * a + (ea - eb).ln();
    }
    if a == f64::NEG_INFINITY {
        return (SQRT_HALF_PI * erfc(-b * FRAC_1_SQRT_2)).ln();
    }
    if b == f64::INFINITY {
        return ln_gauss_upper(a);
    }
    (SQRT_HALF_PI * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2))).ln()
}

/// ∫_a^b e^{-t²/2} dt.
pub fn gauss_mass(a: f64, b: f64) -> f64 {
    ln_gauss_mass(a, b).exp()
}

/// ln(e^a + e^b) without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{x_i}.
pub fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln(1 - e^{x}) for x ≤ 0.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
