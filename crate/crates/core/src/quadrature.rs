//! Gauss-Hermite rules and an adaptive Gaussian expectation built on them.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{MieError, Result};

/// Orthonormal Hermite value `p_n(z)` (weight `exp(-z^2)`) and the derivative
/// proxy `sqrt(2 n) p_{n-1}(z)`.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^{-1/4}
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    for j in 0..n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Node counts tried by [`gaussian_average`], in order.
pub const NODE_LEVELS: [usize; 4] = [64, 128, 256, 512];

/// Absolute change between successive refinements accepted as converged.
pub const TOLERANCE: f64 = 1e-10;

/// Gauss-Hermite rule for the weight `exp(-x^2)` on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch nodes (eigenvalues of the Jacobi matrix), each polished by
    /// Newton steps on the orthonormal Hermite recurrence, which also yields
    /// the weights. Stable up to ~600 nodes.
    pub fn new(n: usize) -> Self {
        assert!((1..=600).contains(&n), "node count {n} out of range");
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut roots: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut z in roots {
            let mut deriv = hermite_orthonormal(n, z).1;
            for _ in 0..3 {
                let (p, dp) = hermite_orthonormal(n, z);
                deriv = dp;
                let step = p / dp;
                z -= step;
                if step.abs() <= 1e-16 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes.push(z);
            weights.push(2.0 / (deriv * deriv));
        }
        // exact reflection symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussHermite { nodes, weights }
    }

    /// `E[f(X)]` for `X ~ N(0, std_dev^2)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, std_dev: f64, f: F) -> f64 {
        let scale = std::f64::consts::SQRT_2 * std_dev;
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(scale * x))
            .sum();
        sum / std::f64::consts::PI.sqrt()
    }
}

/// Cached rule for one of [`NODE_LEVELS`].
pub fn rule(level: usize) -> &'static GaussHermite {
    static RULES: [OnceLock<GaussHermite>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    RULES[level].get_or_init(|| GaussHermite::new(NODE_LEVELS[level]))
}

/// Adaptive `E[f(X)]`, `X ~ N(0, std_dev^2)`: the node count doubles from 64
/// until two successive rules agree to [`TOLERANCE`] (relative for values
/// above one).
pub fn gaussian_average<F: Fn(f64) -> f64>(std_dev: f64, f: F) -> Result<f64> {
    let mut prev = rule(0).expectation(std_dev, &f);
    let mut change = f64::INFINITY;
    for level in 1..NODE_LEVELS.len() {
        let cur = rule(level).expectation(std_dev, &f);
        change = (cur - prev).abs();
        if change <= TOLERANCE * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(MieError::QuadratureNonConvergence {
        error_estimate: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for &n in &NODE_LEVELS {
            let r = GaussHermite::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-13, "{n}: {s}");
            assert!(r.nodes.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn gaussian_moments() {
        let r = rule(0);
        let sigma = 1.7_f64;
        assert!((r.expectation(sigma, |x| x * x) - sigma.powi(2)).abs() < 1e-12);
        assert!((r.expectation(sigma, |x| x.powi(4)) - 3.0 * sigma.powi(4)).abs() < 1e-10);
        // E[cos X] = exp(-sigma^2 / 2)
        let c = gaussian_average(sigma, f64::cos).unwrap();
        assert!((c - (-sigma * sigma / 2.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = gaussian_average(1.0, |x| (200.0 * x).cos() * 1e3).unwrap_err();
        assert!(matches!(err, MieError::QuadratureNonConvergence { .. }));
    }
}
