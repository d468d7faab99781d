//! Scalar special functions: complete elliptic integral of the first kind,
//! the Dedekind eta function and displaced Gaussian winding sums.
//!
//! Everything here is a pure map from reals to reals. The functions that feed
//! replica-limit differences also come in a log-space flavour (`ln_*`) so that
//! nomes as small as `exp(-1e4)` never underflow.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Nome of a finite cylinder, `q = exp(-2 pi^2 n / h)`.
///
/// Stored through its logarithm: the small-cross-ratio corner produces nomes
/// far below the smallest positive `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome {
    ln_q: f64,
}

impl Nome {
    /// Nome from its value, `0 <= q < 1`.
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(domain("q", q, "[0, 1)"));
        }
        Ok(Nome { ln_q: q.ln() })
    }

    /// Nome from `ln q`, which must be negative (`-inf` encodes `q = 0`).
    pub fn from_log(ln_q: f64) -> Result<Self> {
        if ln_q.is_nan() || ln_q >= 0.0 {
            return Err(domain("ln q", ln_q, "[-inf, 0)"));
        }
        Ok(Nome { ln_q })
    }

    pub fn q(self) -> f64 {
        self.ln_q.exp()
    }

    pub fn ln(self) -> f64 {
        self.ln_q
    }

    pub fn is_zero(self) -> bool {
        self.ln_q == f64::NEG_INFINITY
    }
}

/// Branch point between the direct and the Poisson-resummed winding series.
pub const Q_SWITCH: f64 = 0.043_213_918_263_772_25; // exp(-pi)

/// Above this nome the eta product is evaluated through the modular transform.
const ETA_MODULAR_SWITCH: f64 = 0.99;

const SERIES_CUTOFF: f64 = 1e-17;

/// Arithmetic-geometric mean of two non-negative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a.max(b) {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind `K(k)` for modulus `0 <= k < 1`,
/// `K(k) = pi / (2 agm(1, sqrt(1 - k^2)))`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(domain("k", k, "[0, 1)"));
    }
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    Ok(PI / (2.0 * agm(1.0, kp)))
}

/// `K(k')` with `k' = sqrt(1 - k^2)`, computed from `k` directly so that tiny
/// moduli keep full relative accuracy. Domain `0 < k <= 1`.
pub fn elliptic_k_complementary(k: f64) -> Result<f64> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(domain("k", k, "(0, 1]"));
    }
    Ok(PI / (2.0 * agm(1.0, k)))
}

/// `ln prod_{s>=1} (1 - q^s)`, the log of the Euler function.
pub fn ln_euler_function(q: Nome) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if q.q() > ETA_MODULAR_SWITCH {
        return ln_dedekind_eta(q) - q.ln() / 24.0;
    }
    euler_product_direct(q.ln())
}

fn euler_product_direct(ln_q: f64) -> f64 {
    let mut acc = 0.0;
    let mut s = 1.0;
    loop {
        let qs = (s * ln_q).exp();
        if qs < SERIES_CUTOFF {
            break;
        }
        acc += (-qs).ln_1p();
        s += 1.0;
    }
    acc
}

/// `ln eta(q)`; `-inf` at `q = 0`.
pub fn ln_dedekind_eta(q: Nome) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    if q.q() <= ETA_MODULAR_SWITCH {
        return q.ln() / 24.0 + euler_product_direct(q.ln());
    }
    // q = exp(-2 pi t), eta(i t) = t^{-1/2} eta(i / t)
    let t = -q.ln() / (2.0 * PI);
    let dual_ln_q = -2.0 * PI / t;
    -0.5 * t.ln() + dual_ln_q / 24.0 + euler_product_direct(dual_ln_q)
}

/// Dedekind eta `q^{1/24} prod_{s>=1} (1 - q^s)`, with `eta(0) = 0`.
pub fn dedekind_eta(q: Nome) -> f64 {
    ln_dedekind_eta(q).exp()
}

fn check_winding_args(g: f64, a: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(domain("g", g, "(0, inf)"));
    }
    if !a.is_finite() {
        return Err(domain("a", a, "finite reals"));
    }
    Ok(())
}

fn reduce_shift(a: f64) -> f64 {
    a - a.round()
}

/// Winding sum `T(q, g, a) = sum_{w in Z} q^{g (w + a)^2}`.
pub fn winding_sum(q: Nome, g: f64, a: f64) -> Result<f64> {
    ln_winding_sum(q, g, a).map(f64::exp)
}

/// `ln T(q, g, a)`, switching to the Poisson-resummed series above [`Q_SWITCH`].
pub fn ln_winding_sum(q: Nome, g: f64, a: f64) -> Result<f64> {
    check_winding_args(g, a)?;
    if q.q() > Q_SWITCH {
        Ok(ln_winding_poisson(q.ln(), g, a))
    } else {
        Ok(ln_winding_direct(q.ln(), g, a))
    }
}

/// Direct-series branch of [`ln_winding_sum`], valid for every nome.
pub fn ln_winding_sum_direct(q: Nome, g: f64, a: f64) -> Result<f64> {
    check_winding_args(g, a)?;
    Ok(ln_winding_direct(q.ln(), g, a))
}

/// Poisson-resummed branch of [`ln_winding_sum`], valid for `q > 0`.
pub fn ln_winding_sum_poisson(q: Nome, g: f64, a: f64) -> Result<f64> {
    check_winding_args(g, a)?;
    if q.is_zero() {
        return Err(domain("q", 0.0, "(0, 1) for the dual series"));
    }
    Ok(ln_winding_poisson(q.ln(), g, a))
}

/// Unchecked `ln T` for callers that validated `g` and `a` once up front.
pub(crate) fn ln_winding_unchecked(ln_q: f64, g: f64, a: f64) -> f64 {
    if ln_q > Q_SWITCH.ln() {
        ln_winding_poisson(ln_q, g, a)
    } else {
        ln_winding_direct(ln_q, g, a)
    }
}

fn ln_winding_direct(ln_q: f64, g: f64, a: f64) -> f64 {
    let a = reduce_shift(a);
    if ln_q == f64::NEG_INFINITY {
        return if a == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lambda = -g * ln_q;
    // factor out the dominant w = 0 term; (w + a)^2 - a^2 = w^2 + 2 w a >= 0
    let mut sum = 1.0;
    let mut w = 1.0_f64;
    loop {
        let plus = (-lambda * (w * w + 2.0 * w * a)).exp();
        let minus = (-lambda * (w * w - 2.0 * w * a)).exp();
        sum += plus + minus;
        if plus.max(minus) < SERIES_CUTOFF * sum || w > 1e6 {
            break;
        }
        w += 1.0;
    }
    -lambda * a * a + sum.ln()
}

fn ln_winding_poisson(ln_q: f64, g: f64, a: f64) -> f64 {
    let lambda = -g * ln_q;
    let a = reduce_shift(a);
    let mut sum = 1.0;
    let mut m = 1.0_f64;
    loop {
        let damp = (-PI * PI * m * m / lambda).exp();
        if damp < SERIES_CUTOFF {
            break;
        }
        sum += 2.0 * damp * (2.0 * PI * m * a).cos();
        m += 1.0;
    }
    0.5 * (PI / lambda).ln() + sum.ln()
}
