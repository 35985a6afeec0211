//! Gauss–Legendre rules, composite integration and Chebyshev interpolation grids.

use std::f64::consts::PI;

use crate::error::{Result, SrlwError};

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(SrlwError::invalid("Gauss-Legendre rule needs at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess, refined by Newton.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
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

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates a scalar function over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(t, w)| w * f(t)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule: `panels` equal sub-intervals of `[a, b]`.
pub fn composite_nodes(rule: &GaussLegendre, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            rule.mapped(lo, hi).collect::<Vec<_>>()
        })
        .collect()
}

/// Chebyshev points of the second kind on `[0, T]`, increasing, with barycentric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    times: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebyshevGrid {
    pub fn new(horizon: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(SrlwError::invalid("Chebyshev grid needs at least two points"));
        }
        if !(horizon > 0.0) {
            return Err(SrlwError::invalid("horizon must be positive"));
        }
        let n = points - 1;
        let times: Vec<f64> = (0..=n)
            .map(|j| {
                let x = -(PI * j as f64 / n as f64).cos();
                0.5 * horizon * (1.0 + x)
            })
            .collect();
        let bary = (0..=n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut times = times;
        times[0] = 0.0;
        times[n] = horizon;
        Ok(Self { times, bary })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Values of the Lagrange cardinal functions at `t`.
    pub fn cardinal(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.times.len()];
        for (j, &tj) in self.times.iter().enumerate() {
            if t == tj {
                out[j] = 1.0;
                return out;
            }
        }
        let mut denom = 0.0;
        for (j, &tj) in self.times.iter().enumerate() {
            let c = self.bary[j] / (t - tj);
            out[j] = c;
            denom += c;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }
}
