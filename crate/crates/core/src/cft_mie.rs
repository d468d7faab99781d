//! Closed-form measurement-induced entanglement of a compact free boson.
//!
//! With `T(q, g, a) = sum_w q^{g (w + a)^2}` and a Gaussian mismatch
//! `delta ~ N(0, h / g)` between the boundary values pinned on `C1` and `C2`:
//!
//! * winding integral `W_{n,k} = sqrt(1 + n k) E[T(q_n, g, delta / 2 pi)^k]`,
//! * replica derivative `W'_n = n / 2 + E[ln T(q_n, g, delta / 2 pi)]`,
//! * `MIE^(n) = [W'_n - n W'_1 - ln(eta(q_n) / eta(q_1)^n)] / (1 - n)`,
//! * forced `MIE_F^(n) = ln(Z_D(q_n) / Z_D(q_1)^n) / (1 - n)` with
//!   `Z_D(q) = T(q, g, 0) / eta(q)`.
//!
//! All entropies are in nats.

use std::f64::consts::PI;

use crate::error::{domain, MieError, Result};
use crate::geometry::CylinderData;
use crate::quadrature::{gaussian_average, TOLERANCE};
use crate::special_fn::{ln_euler_function, ln_winding_unchecked};

/// Luttinger parameter, Renyi index and cross-ratio of one theory evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub g: f64,
    pub n: f64,
    pub zeta: f64,
}

impl TheoryParams {
    pub fn new(g: f64, n: f64, zeta: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(domain("g", g, "(0, inf)"));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain("n", n, "(0, inf)"));
        }
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(domain("zeta", zeta, "(0, 1)"));
        }
        Ok(TheoryParams { g, n, zeta })
    }

    fn cylinder(&self) -> Result<CylinderData> {
        CylinderData::new(self.zeta)
    }

    fn with_n(&self, n: f64) -> Self {
        TheoryParams { n, ..*self }
    }
}

/// A replica limit together with its extrapolation spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

fn mismatch_std(cyl: &CylinderData, g: f64) -> f64 {
    (cyl.h / g).sqrt()
}

/// `E[f(delta)]`, `delta ~ N(0, sigma^2)`, for `2 pi`-periodic `f`.
///
/// Gauss-Hermite first. At small cross-ratio `ln T` develops near-kinks at
/// `delta = +-pi` that stall spectral convergence; the average is then taken
/// over one period against the folded density, where those points sit at the
/// endpoints and double-exponential quadrature handles them.
fn mismatch_average<F: Fn(f64) -> f64>(sigma: f64, f: F) -> Result<f64> {
    match gaussian_average(sigma, &f) {
        Err(MieError::QuadratureNonConvergence { error_estimate }) => {
            let out = quadrature::double_exponential::integrate(
                |d| folded_gaussian(d, sigma) * f(d),
                -PI,
                PI,
                1e-13,
            );
            if out.error_estimate.is_finite() && out.error_estimate <= TOLERANCE {
                Ok(out.integral)
            } else {
                Err(MieError::QuadratureNonConvergence {
                    error_estimate: error_estimate.min(out.error_estimate),
                })
            }
        }
        other => other,
    }
}

/// `E[ln T(q_n, g, delta / 2 pi)]` over the mismatch distribution.
fn mean_log_winding(cyl: &CylinderData, g: f64, n: f64) -> Result<f64> {
    let ln_q = cyl.nome(n)?.ln();
    mismatch_average(mismatch_std(cyl, g), |delta| {
        ln_winding_unchecked(ln_q, g, delta / (2.0 * PI))
    })
}

/// `ln eta(q_n) - n ln eta(q_1)`; the `q^{1/24}` prefactors cancel exactly.
fn ln_eta_ratio(cyl: &CylinderData, n: f64) -> Result<f64> {
    Ok(ln_euler_function(cyl.nome(n)?) - n * ln_euler_function(cyl.nome(1.0)?))
}

/// Winding integral `W_{n,k}(zeta, g)`; equal to one at `k = 0`.
pub fn winding_integral(p: &TheoryParams, k: f64) -> Result<f64> {
    if !k.is_finite() || k < 0.0 {
        return Err(domain("k", k, "[0, inf)"));
    }
    winding_integral_unchecked(p, k)
}

fn winding_integral_unchecked(p: &TheoryParams, k: f64) -> Result<f64> {
    let cyl = p.cylinder()?;
    let ln_q = cyl.nome(p.n)?.ln();
    let g = p.g;
    let mean = mismatch_average(mismatch_std(&cyl, g), |delta| {
        (k * ln_winding_unchecked(ln_q, g, delta / (2.0 * PI))).exp()
    })?;
    Ok((1.0 + p.n * k).sqrt() * mean)
}

/// Central finite difference of `W_{n,k}` in `k` at `k = 0`. Negative `k`
/// is evaluated by analytic continuation of the integrand.
pub fn winding_derivative_fd(p: &TheoryParams, step: f64) -> Result<f64> {
    let up = winding_integral_unchecked(p, step)?;
    let down = winding_integral_unchecked(p, -step)?;
    Ok((up - down) / (2.0 * step))
}

/// Replica derivative `W'_n = lim_{k -> 0} d/dk W_{n,k}`.
pub fn winding_derivative(p: &TheoryParams) -> Result<f64> {
    let cyl = p.cylinder()?;
    Ok(0.5 * p.n + mean_log_winding(&cyl, p.g, p.n)?)
}

/// Numerator of the Renyi formula; vanishes at `n = 1`.
fn born_numerator(p: &TheoryParams) -> Result<f64> {
    let cyl = p.cylinder()?;
    let w_n = winding_derivative(p)?;
    let w_1 = winding_derivative(&p.with_n(1.0))?;
    Ok(w_n - p.n * w_1 - ln_eta_ratio(&cyl, p.n)?)
}

fn forced_numerator(p: &TheoryParams) -> Result<f64> {
    let cyl = p.cylinder()?;
    let ln_t = |n: f64| -> Result<f64> { Ok(ln_winding_unchecked(cyl.nome(n)?.ln(), p.g, 0.0)) };
    Ok(ln_t(p.n)? - p.n * ln_t(1.0)? - ln_eta_ratio(&cyl, p.n)?)
}

fn reject_unit_index(n: f64) -> Result<()> {
    if n == 1.0 {
        return Err(domain("n", n, "n != 1 (use the von Neumann limit)"));
    }
    Ok(())
}

/// Born-averaged Renyi MIE for `n != 1`.
pub fn mie_renyi(p: &TheoryParams) -> Result<f64> {
    reject_unit_index(p.n)?;
    Ok(born_numerator(p)? / (1.0 - p.n))
}

/// Forced (Dirichlet post-selected) Renyi MIE for `n != 1`.
pub fn mie_forced(p: &TheoryParams) -> Result<f64> {
    reject_unit_index(p.n)?;
    Ok(forced_numerator(p)? / (1.0 - p.n))
}

/// Steps of the central differences used for the `n -> 1` limit.
pub const REPLICA_STEPS: [f64; 2] = [1e-2, 5e-3];

/// `-F'(1)` for a numerator `F(n)` with `F(1) = 0`, by Richardson-extrapolated
/// central differences with steps `eps` and `eps / 2`.
fn replica_limit<F>(numerator: F, eps: f64) -> Result<LimitEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let central = |e: f64| -> Result<f64> { Ok((numerator(1.0 + e)? - numerator(1.0 - e)?) / (2.0 * e)) };
    let coarse = central(eps)?;
    let fine = central(0.5 * eps)?;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    Ok(LimitEstimate {
        value: -extrapolated,
        error_estimate: (extrapolated - fine).abs(),
    })
}

/// Von Neumann MIE, `lim_{n -> 1} MIE^(n)`.
pub fn mie_von_neumann(zeta: f64, g: f64) -> Result<LimitEstimate> {
    mie_von_neumann_with_step(zeta, g, REPLICA_STEPS[0])
}

/// [`mie_von_neumann`] with an explicit outer step (the inner one is half).
pub fn mie_von_neumann_with_step(zeta: f64, g: f64, eps: f64) -> Result<LimitEstimate> {
    let base = TheoryParams::new(g, 1.0, zeta)?;
    replica_limit(|n| born_numerator(&base.with_n(n)), eps)
}

/// Von Neumann limit of the forced MIE.
pub fn mie_forced_von_neumann(zeta: f64, g: f64) -> Result<LimitEstimate> {
    let base = TheoryParams::new(g, 1.0, zeta)?;
    replica_limit(|n| forced_numerator(&base.with_n(n)), REPLICA_STEPS[0])
}

/// Born-averaged MIE at any `n`, routing `n = 1` to the von Neumann limit.
pub fn mie(p: &TheoryParams) -> Result<f64> {
    if p.n == 1.0 {
        mie_von_neumann(p.zeta, p.g).map(|l| l.value)
    } else {
        mie_renyi(p)
    }
}

/// Forced MIE at any `n`, routing `n = 1` to the von Neumann limit.
pub fn forced(p: &TheoryParams) -> Result<f64> {
    if p.n == 1.0 {
        mie_forced_von_neumann(p.zeta, p.g).map(|l| l.value)
    } else {
        mie_forced(p)
    }
}

/// Which small-`zeta` law governs the Born-averaged MIE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `n < 1/2`: `zeta^{2 n (1 - n) g}`.
    SubHalf,
    /// `n >= 1/2`: `zeta^{g / 2} / sqrt(ln(1 / zeta))`.
    SuperHalf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    /// Leading form with unit prefactor.
    pub value: f64,
    pub exponent: f64,
    /// Whether the `1 / sqrt(ln(1 / zeta))` factor is part of the law.
    pub log_prefactor: bool,
    pub regime: Regime,
}

/// Largest cross-ratio accepted by [`mie_asymptotic`].
pub const ASYMPTOTIC_ZETA_MAX: f64 = 0.05;

/// Leading small-`zeta` form of the Born-averaged MIE, up to a constant.
pub fn mie_asymptotic(p: &TheoryParams) -> Result<Asymptotic> {
    if p.zeta >= ASYMPTOTIC_ZETA_MAX {
        return Err(domain("zeta", p.zeta, "(0, 0.05) for the asymptotic regime"));
    }
    let log_inv = (1.0 / p.zeta).ln();
    Ok(if p.n < 0.5 {
        let exponent = 2.0 * p.n * (1.0 - p.n) * p.g;
        Asymptotic {
            value: p.zeta.powf(exponent),
            exponent,
            log_prefactor: false,
            regime: Regime::SubHalf,
        }
    } else {
        let exponent = 0.5 * p.g;
        Asymptotic {
            value: p.zeta.powf(exponent) / log_inv.sqrt(),
            exponent,
            log_prefactor: true,
            regime: Regime::SuperHalf,
        }
    })
}

/// Leading small-`zeta` exponent of the forced MIE: `2 n g` below `n = 1`,
/// `2 g` above.
pub fn forced_exponent(g: f64, n: f64) -> f64 {
    2.0 * g * n.min(1.0)
}

/// Gaussian of variance `sigma^2` folded onto `[0, 2 pi)`.
fn folded_gaussian(delta: f64, sigma: f64) -> f64 {
    let two_pi = 2.0 * PI;
    if sigma < two_pi {
        let reach = (12.0 * sigma / two_pi).ceil() as i64 + 1;
        let norm = 1.0 / (sigma * two_pi.sqrt());
        (-reach..=reach)
            .map(|m| {
                let x = delta + two_pi * m as f64;
                norm * (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    } else {
        let mut sum = 1.0;
        let mut k = 1.0_f64;
        loop {
            let damp = (-0.5 * k * k * sigma * sigma).exp();
            if damp < 1e-17 {
                break;
            }
            sum += 2.0 * damp * (k * delta).cos();
            k += 1.0;
        }
        sum / two_pi
    }
}

/// Born weight of a boundary-value mismatch `delta_phi in [0, 2 pi)` between
/// the two measured regions: the folded mismatch Gaussian times the
/// cylinder partition function `T(q_1, g, delta / 2 pi)`, normalized on one
/// period.
pub fn born_weight_density(zeta: f64, g: f64, delta_phi: f64) -> Result<f64> {
    if !(0.0..2.0 * PI).contains(&delta_phi) {
        return Err(domain("delta_phi", delta_phi, "[0, 2 pi)"));
    }
    let p = TheoryParams::new(g, 1.0, zeta)?;
    let cyl = p.cylinder()?;
    let ln_q1 = cyl.nome(1.0)?.ln();
    let sigma = mismatch_std(&cyl, g);
    let norm = mismatch_average(sigma, |d| ln_winding_unchecked(ln_q1, g, d / (2.0 * PI)).exp())?;
    let t = ln_winding_unchecked(ln_q1, g, delta_phi / (2.0 * PI)).exp();
    Ok(folded_gaussian(delta_phi, sigma) * t / norm)
}

/// Mean and Jensen upper bound `(E[ln T], ln E[T])` on one fixed rule.
pub fn jensen_pair(p: &TheoryParams) -> Result<(f64, f64)> {
    let cyl = p.cylinder()?;
    let ln_q = cyl.nome(p.n)?.ln();
    let rule = crate::quadrature::rule(2);
    let sigma = mismatch_std(&cyl, p.g);
    let f = |d: f64| ln_winding_unchecked(ln_q, p.g, d / (2.0 * PI));
    let mean_log = rule.expectation(sigma, f);
    let log_mean = rule.expectation(sigma, |d| f(d).exp()).ln();
    Ok((mean_log, log_mean))
}
