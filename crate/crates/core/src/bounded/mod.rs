//! The linear system on the interval `(0, 1)` with `u(0,t) = 0`,
//! `u(1,t) = h(t)` and no condition on `v`.
//!
//! The generator `A(u, v) = ((1−∂²)^{-1}∂_x v, ∂_x u)` is skew-adjoint for
//! `⟨(ω,η),(φ,ψ)⟩ = ∫(ω_x φ̄_x + ω φ̄) + ∫ η ψ̄` on `H¹₀ × L²`. Its
//! orthonormal eigenbasis is
//!
//! * `U_n = (−i sin(|n|πx)/√(1+n²π²), sgn(n) cos(|n|πx))`, `n ≠ 0`, with
//!   `A U_n = −iλ_n U_n` and `λ_n = nπ/√(1+n²π²)`;
//! * `U_0 = (0, 1)`, the mean of `v`, with `λ_0 = 0`.
//!
//! States are coefficient vectors over `n = −M..=M` and evolve as
//! `a_n e^{−iλ_n t}`. Every real state satisfies `a_{−n} = −conj(a_n)` with
//! `a_0` real.

mod control;
mod moments;

pub use control::{
    lifting_solve, BoundaryControl, BoundedTrajectory, ControlBasis,
};
pub use moments::{
    approx_control_lsq, moment_rhs_bounded, null_control_moments, penalty_sweep, spectral_controllability_probe,
    ApproxControlOptions, ApproxControlResult, ProbeCurve, ProbePoint, SweepPoint,
};

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrlwError};
use crate::quadrature::{composite_nodes, GaussLegendre};
use crate::spectral::C64;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// `λ_n = nπ/√(1+n²π²)`; odd in `n`, `|λ_n| → 1`.
pub fn interval_eigenvalue(n: i64) -> f64 {
    let a = n as f64 * PI;
    a / (1.0 + a * a).sqrt()
}

/// `√(1+n²π²)`.
pub(crate) fn weight(n: i64) -> f64 {
    let a = n as f64 * PI;
    (1.0 + a * a).sqrt()
}

/// One eigenpair of the interval generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEigenpair {
    pub n: i64,
    /// Real frequency `λ_n`; the eigenvalue of `A` is `−iλ_n`.
    pub lambda: f64,
}

impl IntervalEigenpair {
    pub fn new(n: i64) -> Self {
        Self { n, lambda: interval_eigenvalue(n) }
    }

    /// `(u_n, ∂_x u_n, v_n)` at `x`.
    pub fn eval(&self, x: f64) -> (C64, C64, C64) {
        if self.n == 0 {
            return (ZERO, ZERO, C64::new(1.0, 0.0));
        }
        let m = self.n.unsigned_abs() as f64 * PI;
        let w = weight(self.n);
        let s = self.n.signum() as f64;
        (-I * ((m * x).sin() / w), -I * (m * (m * x).cos() / w), C64::new(s * (m * x).cos(), 0.0))
    }

    /// Amplitudes `(α, β)` with `u_n = α sin(|n|πx)` and `v_n = β cos(|n|πx)`.
    pub fn amplitudes(&self) -> (C64, f64) {
        if self.n == 0 {
            return (ZERO, 1.0);
        }
        (-I / weight(self.n), self.n.signum() as f64)
    }
}

/// Eigenpairs for `n = ±1..=±M`, ordered `−M..−1, 1..M`.
pub fn eigenpairs(modes: usize) -> Result<Vec<IntervalEigenpair>> {
    if modes < 1 {
        return Err(SrlwError::invalid("at least one mode is required"));
    }
    let m = modes as i64;
    Ok((-m..=m).filter(|&n| n != 0).map(IntervalEigenpair::new).collect())
}

/// Coefficients of a state in the eigenbasis, `n = −M..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedState {
    modes: usize,
    coeffs: Vec<C64>,
}

impl BoundedState {
    pub fn zeros(modes: usize) -> Self {
        Self { modes, coeffs: vec![ZERO; 2 * modes + 1] }
    }

    pub fn from_coeffs(modes: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * modes + 1 {
            return Err(SrlwError::invalid(format!(
                "expected {} coefficients for M = {modes}, got {}",
                2 * modes + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SrlwError::invalid("non-finite coefficient"));
        }
        Ok(Self { modes, coeffs })
    }

    /// Real state from `a_n`, `n = 1..=M`, and the `v`-mean `a_0`,
    /// completed by `a_{−n} = −conj(a_n)`.
    pub fn real_from_positive(mean: f64, positive: &[C64]) -> Self {
        let m = positive.len();
        let mut s = Self::zeros(m);
        s.set(0, C64::new(mean, 0.0));
        for (i, a) in positive.iter().enumerate() {
            let n = i as i64 + 1;
            s.set(n, *a);
            s.set(-n, -a.conj());
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        let m = self.modes as i64;
        -m..=m
    }

    pub fn get(&self, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.modes {
            return ZERO;
        }
        self.coeffs[(n + self.modes as i64) as usize]
    }

    pub fn set(&mut self, n: i64, value: C64) {
        let m = self.modes as i64;
        self.coeffs[(n + m) as usize] = value;
    }

    /// `‖·‖_{H¹₀×L²}`, the ℓ² norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &BoundedState) -> BoundedState {
        let m = self.modes.max(other.modes);
        let mut out = BoundedState::zeros(m);
        for n in out.indices() {
            out.set(n, self.get(n) - other.get(n));
        }
        out
    }

    pub fn scaled(&self, alpha: C64) -> BoundedState {
        BoundedState { modes: self.modes, coeffs: self.coeffs.iter().map(|c| c * alpha).collect() }
    }

    /// `max_n |a_{−n} + conj(a_n)|` together with `|Im a_0|`.
    pub fn reality_defect(&self) -> f64 {
        let mut d = self.get(0).im.abs();
        for n in 1..=self.modes as i64 {
            d = d.max((self.get(-n) + self.get(n).conj()).norm());
        }
        d
    }

    /// Sine/cosine representation of the state's functions.
    pub fn functions(&self) -> IntervalFunctions {
        let m = self.modes;
        let mut sin = vec![ZERO; m];
        let mut cos = vec![ZERO; m + 1];
        cos[0] = self.get(0);
        for k in 1..=m {
            let kk = k as i64;
            let (p, q) = (self.get(kk), self.get(-kk));
            sin[k - 1] = -I * (p + q) / weight(kk);
            cos[k] = p - q;
        }
        IntervalFunctions { sin, cos }
    }

    /// `(u, ∂_x u, v)` at `x`.
    pub fn eval(&self, x: f64) -> (C64, C64, C64) {
        self.functions().eval(x)
    }

    /// `‖u‖_{L²} ` and `‖v‖_{L²}` combined: the `L² × L²` norm.
    pub fn l2_norm(&self) -> f64 {
        self.functions().l2_norm()
    }
}

/// `u = Σ_{m≥1} sin[m−1] sin(mπx)`, `v = Σ_{m≥0} cos[m] cos(mπx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFunctions {
    pub sin: Vec<C64>,
    pub cos: Vec<C64>,
}

impl IntervalFunctions {
    /// `(u, ∂_x u, v)` at `x`.
    pub fn eval(&self, x: f64) -> (C64, C64, C64) {
        let mut u = ZERO;
        let mut ux = ZERO;
        for (i, s) in self.sin.iter().enumerate() {
            let m = (i + 1) as f64 * PI;
            u += s * (m * x).sin();
            ux += s * (m * (m * x).cos());
        }
        let v = self.cos.iter().enumerate().map(|(m, c)| c * (m as f64 * PI * x).cos()).sum();
        (u, ux, v)
    }

    /// The generator applied to the functions directly:
    /// `((1−∂²)^{-1}∂_x v, ∂_x u)`.
    pub fn apply_generator(&self) -> IntervalFunctions {
        let m = self.sin.len().max(self.cos.len().saturating_sub(1));
        let mut sin = vec![ZERO; m];
        let mut cos = vec![ZERO; m + 1];
        for (k, c) in self.cos.iter().enumerate().skip(1) {
            let mk = k as f64 * PI;
            sin[k - 1] = -c * mk / (1.0 + mk * mk);
        }
        for (i, s) in self.sin.iter().enumerate() {
            cos[i + 1] = s * ((i + 1) as f64 * PI);
        }
        IntervalFunctions { sin, cos }
    }

    pub fn l2_norm(&self) -> f64 {
        let u: f64 = self.sin.iter().map(|c| 0.5 * c.norm_sqr()).sum();
        let v: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(m, c)| if m == 0 { c.norm_sqr() } else { 0.5 * c.norm_sqr() })
            .sum();
        (u + v).sqrt()
    }
}

/// `⟨(ω,η),(φ,ψ)⟩` evaluated by Gauss–Legendre quadrature.
pub fn inner_product_quadrature(a: &IntervalFunctions, b: &IntervalFunctions, nodes: usize) -> Result<C64> {
    let rule = GaussLegendre::new(nodes)?;
    let panels = (a.sin.len().max(a.cos.len()).max(b.sin.len()).max(b.cos.len()) / 4).max(1);
    let mut acc = ZERO;
    for (x, w) in composite_nodes(&rule, 0.0, 1.0, panels) {
        let (u1, ux1, v1) = a.eval(x);
        let (u2, ux2, v2) = b.eval(x);
        acc += w * (ux1 * ux2.conj() + u1 * u2.conj() + v1 * v2.conj());
    }
    Ok(acc)
}

/// Functions of a single eigenvector.
pub fn eigenfunctions(pair: &IntervalEigenpair) -> IntervalFunctions {
    let mut s = BoundedState::zeros(pair.n.unsigned_abs() as usize);
    s.set(pair.n, C64::new(1.0, 0.0));
    s.functions()
}

/// `U(t) = Σ a_n e^{−iλ_n t} U_n`.
pub fn evolve_homogeneous(a: &BoundedState, t: f64) -> BoundedState {
    let mut out = a.clone();
    for n in a.indices() {
        out.set(n, a.get(n) * C64::from_polar(1.0, -interval_eigenvalue(n) * t));
    }
    out
}

/// `∫(|u|² + |u_x|² + |v|²)`, exactly `Σ|a_n|²`.
pub fn energy(a: &BoundedState) -> f64 {
    a.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

/// The energy integrals evaluated by quadrature of the reconstructed functions.
pub fn energy_quadrature(a: &BoundedState, nodes: usize) -> Result<f64> {
    let f = a.functions();
    Ok(inner_product_quadrature(&f, &f, nodes)?.re)
}

/// Eigen-coefficients of `(φ, v)` with `φ(0) = φ(1) = 0`:
/// `a_n = (1+n²π²)∫φ conj(u_n) + ∫v conj(v_n)`.
pub fn project_functions<F, G>(phi: F, v: G, modes: usize, nodes: usize) -> Result<BoundedState>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let rule = GaussLegendre::new(nodes)?;
    let pts = composite_nodes(&rule, 0.0, 1.0, (modes / 2).max(4));
    let mut out = BoundedState::zeros(modes);
    for n in out.indices() {
        let pair = IntervalEigenpair::new(n);
        let w2 = 1.0 + (n as f64 * PI).powi(2);
        let mut acc = ZERO;
        for &(x, wq) in &pts {
            let (un, _, vn) = pair.eval(x);
            acc += wq * (w2 * phi(x) * un.conj() + v(x) * vn.conj());
        }
        out.set(n, acc);
    }
    Ok(out)
}

/// CSV `n,lambda,u_amplitude_im,v_amplitude` of the eigen table.
pub fn write_eigen_table<W: Write>(writer: W, pairs: &[IntervalEigenpair]) -> Result<()> {
    let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "lambda", "u_amplitude_im", "v_amplitude"]).map_err(io)?;
    for p in pairs {
        let (a, b) = p.amplitudes();
        w.write_record(&[p.n.to_string(), p.lambda.to_string(), a.im.to_string(), b.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
}
