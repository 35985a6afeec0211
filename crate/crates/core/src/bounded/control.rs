//! Boundary controls and the lifted forward solve.
//!
//! With `φ = u − x h(t)` the boundary becomes homogeneous and
//! `φ_t − φ_txx − v_x = −x h'`, `v_t − φ_x = h`. Projected on the
//! eigenbasis this gives, for `n ≠ 0`,
//! `w_n' = −iλ_n w_n + i(−1)^{|n|} h' / (|n|π√(1+n²π²))`, and `w_0' = h`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{interval_eigenvalue, weight, BoundedState};
use crate::error::{Result, SrlwError};
use crate::quadrature::{composite_nodes, GaussLegendre};
use crate::spectral::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Time basis of a boundary control on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlBasis {
    /// `sin(jπt/T)`, `j = 1..=D`.
    Sine,
    /// Uniform cubic B-splines on `D + 3` equal knot spans, each supported
    /// inside `[0, T]`.
    CubicBSpline,
    /// `t^j`, `j = 0..D`.
    Monomial,
}

/// Cardinal cubic B-spline on `[0, 4]` and its derivative.
fn cardinal_cubic(s: f64) -> (f64, f64) {
    if !(0.0..4.0).contains(&s) {
        return (0.0, 0.0);
    }
    let piece = s.floor() as usize;
    let r = s - piece as f64;
    let (p, dp) = match piece {
        0 => (r * r * r, 3.0 * r * r),
        1 => (-3.0 * r * r * r + 3.0 * r * r + 3.0 * r + 1.0, -9.0 * r * r + 6.0 * r + 3.0),
        2 => (3.0 * r * r * r - 6.0 * r * r + 4.0, 9.0 * r * r - 12.0 * r),
        _ => ((1.0 - r).powi(3), -3.0 * (1.0 - r).powi(2)),
    };
    (p / 6.0, dp / 6.0)
}

/// Polynomial coefficients (ascending in the local variable `r ∈ [0,1]`) of
/// the four pieces of the cardinal cubic B-spline.
pub(crate) const CUBIC_PIECES: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.0, 1.0 / 6.0],
    [1.0 / 6.0, 0.5, 0.5, -0.5],
    [4.0 / 6.0, 0.0, -1.0, 0.5],
    [1.0 / 6.0, -0.5, 0.5, -1.0 / 6.0],
];

impl ControlBasis {
    /// `(β_j(t), β_j'(t))`, `j` zero-based.
    pub fn value(self, j: usize, t: f64, horizon: f64, dim: usize) -> (f64, f64) {
        match self {
            ControlBasis::Sine => {
                let w = (j + 1) as f64 * PI / horizon;
                ((w * t).sin(), w * (w * t).cos())
            }
            ControlBasis::CubicBSpline => {
                let h = horizon / (dim + 3) as f64;
                let (b, db) = cardinal_cubic(t / h - j as f64);
                (b, db / h)
            }
            ControlBasis::Monomial => {
                if j == 0 {
                    (1.0, 0.0)
                } else {
                    (t.powi(j as i32), j as f64 * t.powi(j as i32 - 1))
                }
            }
        }
    }

    /// Whether every basis function vanishes at `t = 0` and `t = T`.
    pub fn vanishes_at_ends(self) -> bool {
        !matches!(self, ControlBasis::Monomial)
    }
}

/// `h(t) = Σ_j weights[j] β_j(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryControl {
    pub basis: ControlBasis,
    pub horizon: f64,
    pub weights: Vec<f64>,
}

impl BoundaryControl {
    pub fn new(basis: ControlBasis, horizon: f64, weights: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(SrlwError::invalid("horizon must be positive"));
        }
        if weights.is_empty() {
            return Err(SrlwError::invalid("control_dim must be at least 1"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(SrlwError::invalid("non-finite control weight"));
        }
        Ok(Self { basis, horizon, weights })
    }

    pub fn constant(horizon: f64, value: f64) -> Result<Self> {
        Self::new(ControlBasis::Monomial, horizon, vec![value])
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `(h(t), h'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let d = self.dim();
        self.weights.iter().enumerate().fold((0.0, 0.0), |(h, dh), (j, w)| {
            let (b, db) = self.basis.value(j, t, self.horizon, d);
            (h + w * b, dh + w * db)
        })
    }

    /// `‖h‖_{H¹(0,T)}` through the basis Gram matrix.
    pub fn h1_norm(&self) -> f64 {
        let g = h1_gram(self.basis, self.dim(), self.horizon);
        let w = nalgebra::DVector::from_column_slice(&self.weights);
        (w.dot(&(&g * &w))).max(0.0).sqrt()
    }

    /// CSV `t,h,dh` on `samples + 1` uniform points.
    pub fn write_csv<W: Write>(&self, writer: W, samples: usize) -> Result<()> {
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "h", "dh"]).map_err(io)?;
        for t in crate::ivp::uniform_times(self.horizon, samples.max(1)) {
            let (h, dh) = self.eval(t);
            w.write_record(&[t.to_string(), h.to_string(), dh.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// `W_{jk} = ∫₀ᵀ (β_j β_k + β_j' β_k') dt`.
pub fn h1_gram(basis: ControlBasis, dim: usize, horizon: f64) -> DMatrix<f64> {
    match basis {
        ControlBasis::Sine => DMatrix::from_fn(dim, dim, |j, k| {
            if j == k {
                let w = (j + 1) as f64 * PI / horizon;
                0.5 * horizon * (1.0 + w * w)
            } else {
                0.0
            }
        }),
        ControlBasis::CubicBSpline | ControlBasis::Monomial => {
            // exact for the polynomial integrands of either basis
            let (nodes, panels) = match basis {
                ControlBasis::CubicBSpline => (4, dim + 3),
                _ => (dim + 1, 1),
            };
            let rule = GaussLegendre::new(nodes).expect("positive node count");
            let pts = composite_nodes(&rule, 0.0, horizon, panels);
            let vals: Vec<Vec<(f64, f64)>> = pts
                .iter()
                .map(|&(t, _)| (0..dim).map(|j| basis.value(j, t, horizon, dim)).collect())
                .collect();
            DMatrix::from_fn(dim, dim, |j, k| {
                pts.iter()
                    .zip(&vals)
                    .map(|(&(_, w), v)| w * (v[j].0 * v[k].0 + v[j].1 * v[k].1))
                    .sum()
            })
        }
    }
}

/// `i(−1)^{|n|} / (|n|π√(1+n²π²))`, the coupling of `h'` into mode `n ≠ 0`.
pub(crate) fn boundary_coupling(n: i64) -> C64 {
    let m = n.unsigned_abs();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    I * (sign / (m as f64 * PI * weight(n)))
}

/// Solution of the boundary-controlled problem on a time grid, stored as
/// lifted coefficients `w(t)` of `(u − xh, v)` plus the boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<BoundedState>,
    pub boundary: Vec<f64>,
}

impl BoundedTrajectory {
    pub fn final_state(&self) -> &BoundedState {
        self.states.last().expect("trajectory is never empty")
    }

    /// `(u, v)` at sample `i`, position `x`, with the lift undone.
    pub fn eval(&self, i: usize, x: f64) -> (C64, C64) {
        let (phi, _, v) = self.states[i].eval(x);
        (phi + x * self.boundary[i], v)
    }

    /// `u(1, t_i)`.
    pub fn boundary_trace(&self, i: usize) -> C64 {
        self.eval(i, 1.0).0
    }

    /// CSV `t,n,re,im,h`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "n", "re", "im", "h"]).map_err(io)?;
        for ((t, s), h) in self.times.iter().zip(&self.states).zip(&self.boundary) {
            for n in s.indices() {
                let c = s.get(n);
                w.write_record(&[t.to_string(), n.to_string(), c.re.to_string(), c.im.to_string(), h.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// Forward solve by eigenfunction expansion.
///
/// `lifted0` holds the coefficients of `(u0 − x h(0), v0)`. The modal
/// Duhamel integrals `∫ e^{iλ_n τ} h'(τ) dτ` and `∫ h` are evaluated by
/// `quadrature_nodes`-point Gauss–Legendre on every panel of `times`.
pub fn lifting_solve(
    lifted0: &BoundedState,
    h: &BoundaryControl,
    times: &[f64],
    quadrature_nodes: usize,
) -> Result<BoundedTrajectory> {
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SrlwError::invalid("time grid must start at 0 and increase strictly"));
    }
    let rule = GaussLegendre::new(quadrature_nodes)?;
    let m = lifted0.modes() as i64;
    let lambdas: Vec<f64> = (-m..=m).map(interval_eigenvalue).collect();
    let coupling: Vec<C64> = (-m..=m)
        .map(|n| if n == 0 { C64::new(0.0, 0.0) } else { boundary_coupling(n) })
        .collect();
    let mut acc = vec![C64::new(0.0, 0.0); lifted0.coeffs().len()];
    let mut states = vec![lifted0.clone()];
    let mut boundary = vec![h.eval(0.0).0];
    for w in times.windows(2) {
        for (tau, wq) in rule.mapped(w[0], w[1]) {
            let (hv, dh) = h.eval(tau);
            for (i, n) in (-m..=m).enumerate() {
                acc[i] += if n == 0 {
                    C64::new(wq * hv, 0.0)
                } else {
                    C64::from_polar(wq * dh, lambdas[i] * tau)
                };
            }
        }
        let t = w[1];
        let mut s = BoundedState::zeros(lifted0.modes());
        for (i, n) in (-m..=m).enumerate() {
            let v = if n == 0 {
                lifted0.get(0) + acc[i]
            } else {
                C64::from_polar(1.0, -lambdas[i] * t) * (lifted0.get(n) + coupling[i] * acc[i])
            };
            s.set(n, v);
        }
        states.push(s);
        boundary.push(h.eval(t).0);
    }
    Ok(BoundedTrajectory { times: times.to_vec(), states, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounded::evolve_homogeneous;

    #[test]
    fn cardinal_spline_partition_of_unity() {
        for &s in &[0.1, 0.5, 0.99] {
            let total: f64 = (0..4).map(|k| cardinal_cubic(s + k as f64).0).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
        for (k, piece) in CUBIC_PIECES.iter().enumerate() {
            let r: f64 = 0.3;
            let p: f64 = piece.iter().enumerate().map(|(d, c)| c * r.powi(d as i32)).sum();
            assert!((p - cardinal_cubic(k as f64 + r).0).abs() < 1e-15);
        }
    }

    #[test]
    fn splines_and_sines_vanish_at_ends() {
        for basis in [ControlBasis::Sine, ControlBasis::CubicBSpline] {
            let h = BoundaryControl::new(basis, 3.0, vec![1.0, -2.0, 0.5, 0.25]).unwrap();
            assert!(h.eval(0.0).0.abs() < 1e-15);
            assert!(h.eval(3.0).0.abs() < 1e-14);
        }
    }

    #[test]
    fn sine_gram_matches_quadrature() {
        let h = BoundaryControl::new(ControlBasis::Sine, 2.0, vec![0.3, -0.2, 0.1]).unwrap();
        let rule = GaussLegendre::new(20).unwrap();
        let q: f64 = composite_nodes(&rule, 0.0, 2.0, 4)
            .iter()
            .map(|&(t, w)| {
                let (a, b) = h.eval(t);
                w * (a * a + b * b)
            })
            .sum();
        assert!((h.h1_norm() - q.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn zero_control_is_free_evolution() {
        let a = BoundedState::real_from_positive(0.1, &[C64::new(0.3, 0.1), C64::new(0.0, -0.2)]);
        let h = BoundaryControl::new(ControlBasis::Sine, 4.0, vec![0.0; 3]).unwrap();
        let traj = lifting_solve(&a, &h, &crate::ivp::uniform_times(4.0, 8), 6).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!(s.sub(&evolve_homogeneous(&a, *t)).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_boundary_value_gives_ramp_and_linear_mean() {
        let c = 0.7;
        let h = BoundaryControl::constant(2.0, c).unwrap();
        let traj = lifting_solve(&BoundedState::zeros(5), &h, &crate::ivp::uniform_times(2.0, 4), 4).unwrap();
        for (i, t) in traj.times.iter().enumerate() {
            let (u, v) = traj.eval(i, 0.4);
            assert!((u.re - 0.4 * c).abs() < 1e-14 && u.im.abs() < 1e-14);
            assert!((v.re - c * t).abs() < 1e-13);
            assert!((traj.boundary_trace(i).re - c).abs() < 1e-14);
        }
    }
}
