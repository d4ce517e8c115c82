//! Gauss–Legendre rules, single-panel and composite.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of P_n by Newton iteration from the Tricomi initial guess.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Gauss-Legendre rule needs at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let k = i as f64 + 1.0;
            let mut x = (PI * (k - 0.25) / (nf + 0.5)).cos()
                * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite rule: `panels` equal sub-intervals, each with an `order`-point
/// Gauss–Legendre rule. Total node count is `panels * order`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    base: GaussLegendre,
    panels: usize,
}

/// Points per panel used by [`CompositeRule::with_total_nodes`].
pub const PANEL_ORDER: usize = 64;

impl CompositeRule {
    pub fn new(panels: usize, order: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::invalid("composite rule needs at least one panel"));
        }
        Ok(Self { base: GaussLegendre::new(order)?, panels })
    }

    /// Rule with (at least) `n_nodes` points, built from 64-point panels.
    pub fn with_total_nodes(n_nodes: usize) -> Result<Self> {
        if n_nodes < PANEL_ORDER {
            return Err(Error::invalid(format!(
                "need at least {PANEL_ORDER} quadrature nodes per axis, got {n_nodes}"
            )));
        }
        Self::new(n_nodes.div_ceil(PANEL_ORDER), PANEL_ORDER)
    }

    pub fn total_nodes(&self) -> usize {
        self.panels * self.base.len()
    }

    /// Absolute nodes and weights on `[a, b]`, in increasing node order.
    pub fn nodes_weights(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / self.panels as f64;
        let mut xs = Vec::with_capacity(self.total_nodes());
        let mut ws = Vec::with_capacity(self.total_nodes());
        for k in 0..self.panels {
            let lo = a + k as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.base.nodes().iter().zip(self.base.weights()) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (xs, ws) = self.nodes_weights(a, b);
        xs.iter().zip(&ws).map(|(x, w)| w * f(*x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_nodes_match_closed_form() {
        let g = GaussLegendre::new(2).unwrap();
        assert_abs_diff_eq!(g.nodes()[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[0], 1.0, epsilon = 1e-15);
        let g = GaussLegendre::new(3).unwrap();
        assert_abs_diff_eq!(g.nodes()[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(64).unwrap();
        for deg in [0u32, 2, 10, 50, 126] {
            let v = g.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert_abs_diff_eq!(v, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
        let s: f64 = g.weights().iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn composite_gaussian_integral() {
        let r = CompositeRule::with_total_nodes(2048).unwrap();
        assert_eq!(r.total_nodes(), 2048);
        let v = r.integrate(-12.0, 12.0, |x| (-0.5 * x * x).exp());
        assert_abs_diff_eq!(v, (2.0 * PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(CompositeRule::with_total_nodes(32).is_err());
        assert!(GaussLegendre::new(0).is_err());
    }
}
