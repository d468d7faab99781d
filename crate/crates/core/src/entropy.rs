//! Renyi and von Neumann entropies from spectra.
//!
//! Two flavours: occupation spectra `nu` of a fermionic correlation block
//! (each mode contributes a two-level distribution) and probability spectra
//! of a density matrix.

use crate::error::{domain, Result};

/// Below this distance from 0 or 1 a mode counts as pure and contributes
/// nothing (`0 ln 0 = 0`). Kept at the round-off floor: for `n < 1` a weight
/// `nu` still contributes `~nu^n`, so a coarser cut biases the entropy.
pub const PURE_EPS: f64 = 1e-15;

pub(crate) fn check_index(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(domain("n", n, "(0, inf)"))
    }
}

/// `S_n` of a free-fermion block from its correlation eigenvalues.
pub fn entropy_from_occupations(nu: &[f64], n: f64) -> Result<f64> {
    check_index(n)?;
    let mixed = nu.iter().copied().filter(|&v| v > PURE_EPS && v < 1.0 - PURE_EPS);
    let s = if n == 1.0 {
        mixed.map(|v| -v * v.ln() - (1.0 - v) * (1.0 - v).ln()).sum()
    } else {
        mixed
            .map(|v| (v.powf(n) + (1.0 - v).powf(n)).ln())
            .sum::<f64>()
            / (1.0 - n)
    };
    Ok(s.max(0.0))
}

/// `S_n` of a density matrix from its eigenvalues. Negative round-off
/// eigenvalues are dropped.
pub fn entropy_from_probabilities(lambda: &[f64], n: f64) -> Result<f64> {
    check_index(n)?;
    let p = lambda.iter().copied().filter(|&v| v > PURE_EPS);
    let s = if n == 1.0 {
        p.map(|v| -v * v.ln()).sum()
    } else {
        p.map(|v| v.powf(n)).sum::<f64>().ln() / (1.0 - n)
    };
    Ok(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_filled_mode_is_ln2_for_every_index() {
        for &n in &[0.25, 0.5, 1.0, 2.0, 7.0] {
            let s = entropy_from_occupations(&[0.5], n).unwrap();
            assert!((s - 2f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_modes_contribute_nothing() {
        assert_eq!(entropy_from_occupations(&[0.0, 1.0, 1e-16], 2.0).unwrap(), 0.0);
        assert_eq!(entropy_from_probabilities(&[1.0, 0.0, -1e-17], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn occupation_and_probability_forms_agree() {
        // product of two modes = four-outcome distribution
        let (a, b) = (0.3_f64, 0.85_f64);
        let probs = [
            a * b,
            a * (1.0 - b),
            (1.0 - a) * b,
            (1.0 - a) * (1.0 - b),
        ];
        for &n in &[0.5, 1.0, 3.0] {
            let x = entropy_from_occupations(&[a, b], n).unwrap();
            let y = entropy_from_probabilities(&probs, n).unwrap();
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn index_domain() {
        assert!(entropy_from_occupations(&[0.5], 0.0).is_err());
        assert!(entropy_from_probabilities(&[1.0], f64::NAN).is_err());
    }
}
