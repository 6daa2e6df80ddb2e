//! Gauss–Legendre rules mapped to the unit interval.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::scalar::Scalar;

/// An n-point Gauss–Legendre rule on `[0, 1]`, exact for polynomials of degree `2n − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn gauss_legendre(n: usize) -> Self {
        let n = NonZeroUsize::new(n).expect("quadrature rule needs at least one node");
        let rule = GaussLegendre::new(n);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T: Scalar>(&self, mut f: impl FnMut(f64) -> T) -> T {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(x).scale(w);
        }
        acc
    }

    /// Tensor-product rule on `[0, 1]²`.
    pub fn integrate_2d<T: Scalar>(&self, mut f: impl FnMut(f64, f64) -> T) -> T {
        let mut acc = T::zero();
        for (&s, &ws) in self.nodes.iter().zip(&self.weights) {
            let mut row = T::zero();
            for (&m, &wm) in self.nodes.iter().zip(&self.weights) {
                row += f(s, m).scale(wm);
            }
            acc += row.scale(ws);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 2..12 {
            let rule = UnitRule::gauss_legendre(n);
            let deg = 2 * n - 1;
            let got: f64 = rule.integrate(|x| x.powi(deg as i32));
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
            let weights: f64 = rule.weights.iter().sum();
            assert!((weights - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tensor_rule_separable_integrand() {
        let rule = UnitRule::gauss_legendre(6);
        let got: f64 = rule.integrate_2d(|s, m| (1.0 - s) * m * m);
        assert!((got - 0.5 / 3.0).abs() < 1e-15);
    }
}
