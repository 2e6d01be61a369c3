//! Gauss-Hermite quadrature nodes and weights.
//!
//! Physicists' convention: integrates f against the weight exp(-x^2) over
//! the whole real line. Nodes are found by Newton iteration on the
//! orthonormal Hermite recurrence, good to ~1e-14 at the order used here.

use std::sync::OnceLock;

/// Number of nodes used per continuous covariate dimension.
pub const GH_NODES: usize = 64;

const PI_M4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
const NEWTON_EPS: f64 = 1e-14;
const MAX_NEWTON: usize = 64;

/// One quadrature rule: nodes paired with weights, nodes descending.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => {
                    let a = (2 * n + 1) as f64;
                    a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
                }
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..MAX_NEWTON {
                let (p1, deriv) = hermite_orthonormal(n, z);
                pp = deriv;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= NEWTON_EPS * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// Integrate f(x) exp(-x^2) dx over the real line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Expectation of f(E) for E ~ Normal(mean, sd).
    pub fn normal_expectation<F: Fn(f64) -> f64>(&self, mean: f64, sd: f64, f: F) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        self.iter()
            .map(|(x, w)| w * inv_sqrt_pi * f(mean + scale * x))
            .sum()
    }
}

/// Value and derivative of the orthonormal Hermite polynomial of degree n.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let j = j as f64;
        p1 = z * (2.0 / j).sqrt() * p2 - ((j - 1.0) / j).sqrt() * p3;
    }
    ((p1), (2.0 * n as f64).sqrt() * p2)
}

/// Shared 64-node rule; computed once.
pub fn gh64() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(GH_NODES))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn moments_of_weight_function() {
        for n in [8, 20, 64] {
            let q = GaussHermite::new(n);
            let sqrt_pi = PI.sqrt();
            assert!((q.integrate(|_| 1.0) - sqrt_pi).abs() < 1e-12, "n={n}");
            assert!((q.integrate(|x| x * x) - sqrt_pi / 2.0).abs() < 1e-12);
            assert!((q.integrate(|x| x.powi(4)) - 0.75 * sqrt_pi).abs() < 1e-11);
            assert!(q.integrate(|x| x).abs() < 1e-13, "odd moment vanishes");
        }
    }

    #[test]
    fn normal_expectation_is_exact_for_polynomials() {
        let q = gh64();
        let (m, s) = (0.7, 1.3);
        assert!((q.normal_expectation(m, s, |_| 1.0) - 1.0).abs() < 1e-13);
        assert!((q.normal_expectation(m, s, |e| e) - m).abs() < 1e-13);
        let second = q.normal_expectation(m, s, |e| e * e);
        assert!((second - (s * s + m * m)).abs() < 1e-12);
    }

    #[test]
    fn logistic_expectation_frozen_value() {
        // E[expit(-1.1 + 0.9 E)] with E ~ N(0.3, 1.2^2); adaptive
        // quadrature reference 0.3379345912727873.
        let q = gh64();
        let v = q.normal_expectation(0.3, 1.2, |e| crate::num::normal::expit(-1.1 + 0.9 * e));
        assert!(
            (v - 0.337_934_591_272_787_3).abs() < 1e-12,
            "got {v}, expected 0.3379345912727873"
        );
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let q = GaussHermite::new(64);
        let nodes: Vec<f64> = q.iter().map(|(x, _)| x).collect();
        for i in 0..nodes.len() {
            assert!((nodes[i] + nodes[nodes.len() - 1 - i]).abs() < 1e-13);
            if i > 0 {
                assert!(nodes[i] < nodes[i - 1]);
            }
        }
        assert!(q.iter().all(|(_, w)| w.is_finite() && w > 0.0));
    }
}
