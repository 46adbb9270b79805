//! Gauss–Legendre quadrature on the reference interval [0, 1].
//!
//! Nodes and weights come from Newton iteration on the Legendre recurrence;
//! a rule with `g` points integrates polynomials of degree ≤ 2g−1 exactly,
//! which makes the element integrals exact for constant state matrices
//! (degree ≤ 6 integrands) whenever g ≥ 4.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadError {
    InvalidPointCount { got: usize },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::InvalidPointCount { got } => {
                write!(f, "quadrature rule needs 1..=64 points, got {got}")
            }
        }
    }
}

impl std::error::Error for QuadError {}

/// Nodes in (0, 1) with positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    /// Gauss–Legendre rule with `points` nodes, mapped to [0, 1].
    pub fn gauss_legendre(points: usize) -> Result<Self, QuadError> {
        if points == 0 || points > 64 {
            return Err(QuadError::InvalidPointCount { got: points });
        }
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            // Tricomi-style initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (_, d) = legendre_with_deriv(n, x);
                    dp = d;
                    break;
                }
            }
            // nodes arrive in descending order of x
            nodes[n - 1 - k] = 0.5 * (x + 1.0);
            weights[n - 1 - k] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Ok(QuadRule { nodes, weights })
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

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let width = b - a;
        self.iter().map(|(x, w)| width * w * f(a + x * width)).sum()
    }
}

/// Legendre polynomial `P_n` and its derivative at `x` via the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}
