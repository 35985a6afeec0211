//! Truncated Fourier representation of `(u, v)` on the torus `R/2πZ`.
//!
//! Coefficients follow `u(x) = Σ û_k e^{ikx}` with `û_k = (1/2π)∫ u e^{-ikx} dx`
//! and are stored in the order `k = -N..=N`.
//!
//! The linear part of the system is diagonal in Fourier: mode `k` evolves by
//! `dû/dt = ik/(1+k²) v̂`, `dv̂/dt = ik û`, whose exact propagator is a 2×2
//! block built from the dispersion `ρ(k) = |k|/√(1+k²)`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SrlwError};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Default bound on intermediate convolution magnitudes in [`nonlinearity_g`].
pub const DEFAULT_OVERFLOW_BOUND: f64 = 1e150;

/// Dispersion relation `ρ(k) = |k|/√(1+k²)`.
#[inline]
pub fn rho(k: i64) -> f64 {
    let k = k as f64;
    k.abs() / (1.0 + k * k).sqrt()
}

/// Sobolev regularity index `s`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(SrlwError::invalid("Sobolev index must be finite"));
        }
        Ok(Self(s))
    }
}

/// Weights of the product norm `‖(u,v)‖² = ‖u‖²_{H^s} + ‖v‖²_{H^{s-shift}}`.
///
/// `v_shift = 1` is the default; `v_shift = 2` reproduces the alternative
/// `H^s × H^{s-2}` pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XsNorm {
    pub s: f64,
    pub v_shift: f64,
}

impl XsNorm {
    pub fn new(s: f64) -> Self {
        Self { s, v_shift: 1.0 }
    }

    pub fn with_v_shift(s: f64, v_shift: f64) -> Self {
        Self { s, v_shift }
    }

    /// Norm of a state.
    pub fn norm(&self, state: &TorusState) -> f64 {
        let a = sobolev_norm(state.u(), SobolevIndex(self.s));
        let b = sobolev_norm(state.v(), SobolevIndex(self.s - self.v_shift));
        (a * a + b * b).sqrt()
    }

    /// Norm of the difference of two states sharing a cutoff.
    pub fn distance(&self, a: &TorusState, b: &TorusState) -> f64 {
        let n = a.cutoff() as i64;
        let mut acc = 0.0;
        for k in -n..=n {
            let w = 1.0 + (k * k) as f64;
            acc += w.powf(self.s) * (a.u_at(k) - b.u_at(k)).norm_sqr();
            acc += w.powf(self.s - self.v_shift) * (a.v_at(k) - b.v_at(k)).norm_sqr();
        }
        acc.sqrt()
    }
}

impl Default for XsNorm {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// Table of `ρ(k)` for `|k| ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    cutoff: usize,
    rho: Vec<f64>,
}

impl DispersionTable {
    pub fn new(cutoff: usize) -> Self {
        let n = cutoff as i64;
        Self {
            cutoff,
            rho: (-n..=n).map(rho).collect(),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn get(&self, k: i64) -> f64 {
        self.rho[(k + self.cutoff as i64) as usize]
    }
}

/// Truncated Fourier coefficient pair `(û_k, v̂_k)`, `|k| ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusState {
    cutoff: usize,
    u: Vec<C64>,
    v: Vec<C64>,
}

impl TorusState {
    pub fn zeros(cutoff: usize) -> Self {
        let len = 2 * cutoff + 1;
        Self {
            cutoff,
            u: vec![C64::new(0.0, 0.0); len],
            v: vec![C64::new(0.0, 0.0); len],
        }
    }

    /// Builds a state from coefficient vectors ordered `k = -N..=N`.
    pub fn from_coeffs(cutoff: usize, u: Vec<C64>, v: Vec<C64>) -> Result<Self> {
        let len = 2 * cutoff + 1;
        if u.len() != len || v.len() != len {
            return Err(SrlwError::invalid(format!(
                "expected {len} coefficients per component, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SrlwError::invalid("non-finite coefficient"));
        }
        Ok(Self { cutoff, u, v })
    }

    /// Builds a state from functions of the wavenumber.
    pub fn from_fn(cutoff: usize, mut u: impl FnMut(i64) -> C64, mut v: impl FnMut(i64) -> C64) -> Self {
        let n = cutoff as i64;
        Self {
            cutoff,
            u: (-n..=n).map(&mut u).collect(),
            v: (-n..=n).map(&mut v).collect(),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn wavenumbers(&self) -> std::ops::RangeInclusive<i64> {
        -(self.cutoff as i64)..=self.cutoff as i64
    }

    #[inline]
    pub fn index(&self, k: i64) -> usize {
        (k + self.cutoff as i64) as usize
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn u_mut(&mut self) -> &mut [C64] {
        &mut self.u
    }

    pub fn v_mut(&mut self) -> &mut [C64] {
        &mut self.v
    }

    #[inline]
    pub fn u_at(&self, k: i64) -> C64 {
        self.u[self.index(k)]
    }

    #[inline]
    pub fn v_at(&self, k: i64) -> C64 {
        self.v[self.index(k)]
    }

    pub fn set(&mut self, k: i64, u: C64, v: C64) {
        let i = self.index(k);
        self.u[i] = u;
        self.v[i] = v;
    }

    /// `self + alpha * other`.
    pub fn axpy(&mut self, alpha: C64, other: &TorusState) {
        debug_assert_eq!(self.cutoff, other.cutoff);
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            *a += alpha * b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: C64) -> TorusState {
        TorusState {
            cutoff: self.cutoff,
            u: self.u.iter().map(|c| alpha * c).collect(),
            v: self.v.iter().map(|c| alpha * c).collect(),
        }
    }

    pub fn add(&self, other: &TorusState) -> TorusState {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &TorusState) -> TorusState {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    /// Largest deviation from `c_{-k} = conj(c_k)` over both components.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        self.wavenumbers()
            .map(|k| {
                let du = (self.u_at(-k) - self.u_at(k).conj()).norm();
                let dv = (self.v_at(-k) - self.v_at(k).conj()).norm();
                du.max(dv)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.conjugate_symmetry_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Restricts or zero-pads to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> TorusState {
        let m = cutoff.min(self.cutoff) as i64;
        let mut out = TorusState::zeros(cutoff);
        for k in -m..=m {
            out.set(k, self.u_at(k), self.v_at(k));
        }
        out
    }

    /// Evaluates `(u, v)` at a point of the torus.
    pub fn eval(&self, x: f64) -> (C64, C64) {
        let mut u = C64::new(0.0, 0.0);
        let mut v = C64::new(0.0, 0.0);
        for k in self.wavenumbers() {
            let e = C64::from_polar(1.0, k as f64 * x);
            u += self.u_at(k) * e;
            v += self.v_at(k) * e;
        }
        (u, v)
    }
}

#[derive(Serialize, Deserialize)]
struct TorusStateJson {
    #[serde(rename = "N")]
    cutoff: usize,
    u: Vec<[f64; 2]>,
    v: Vec<[f64; 2]>,
}

impl Serialize for TorusState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TorusStateJson {
            cutoff: self.cutoff,
            u: self.u.iter().map(|c| [c.re, c.im]).collect(),
            v: self.v.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TorusState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = TorusStateJson::deserialize(deserializer)?;
        let conv = |xs: Vec<[f64; 2]>| xs.into_iter().map(|[a, b]| C64::new(a, b)).collect();
        TorusState::from_coeffs(raw.cutoff, conv(raw.u), conv(raw.v)).map_err(serde::de::Error::custom)
    }
}

/// `(Σ (1+k²)^s |c_k|²)^{1/2}` for coefficients ordered `k = -N..=N`.
pub fn sobolev_norm(coeffs: &[C64], s: SobolevIndex) -> f64 {
    let n = (coeffs.len() / 2) as i64;
    coeffs
        .iter()
        .zip(-n..=n)
        .map(|(c, k)| (1.0 + (k * k) as f64).powf(s.0) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Applies the linear operator: `û' = ik/(1+k²) v̂`, `v̂' = ik û`.
pub fn apply_a(state: &TorusState) -> TorusState {
    let mut out = TorusState::zeros(state.cutoff());
    for k in state.wavenumbers() {
        let kf = k as f64;
        let u = I * kf / (1.0 + kf * kf) * state.v_at(k);
        let v = I * kf * state.u_at(k);
        out.set(k, u, v);
    }
    out
}

/// Exact 2×2 propagator `exp(A_k t)` of mode `k`, row-major.
///
/// The off-diagonal entries carry `sgn(k)`; for `k < 0` this is what keeps
/// real states real and matches [`apply_a`].
#[inline]
pub fn mode_propagator(k: i64, t: f64) -> [[C64; 2]; 2] {
    let kf = k as f64;
    let w = (1.0 + kf * kf).sqrt();
    let (s, c) = (rho(k) * t).sin_cos();
    let s = s * kf.signum();
    [
        [C64::new(c, 0.0), I * (s / w)],
        [I * (w * s), C64::new(c, 0.0)],
    ]
}

#[inline]
pub(crate) fn apply_block(m: &[[C64; 2]; 2], u: C64, v: C64) -> (C64, C64) {
    (m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v)
}

/// The semigroup `S(t)` of the linear system.
pub fn semigroup_apply(state: &TorusState, t: f64) -> TorusState {
    let mut out = TorusState::zeros(state.cutoff());
    for k in state.wavenumbers() {
        let m = mode_propagator(k, t);
        let (u, v) = apply_block(&m, state.u_at(k), state.v_at(k));
        out.set(k, u, v);
    }
    out
}

/// Full linear convolution of two centred coefficient sequences.
pub(crate) fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `u^{power}` truncated back to `|k| ≤ N`, by exact convolution.
pub fn truncated_power(u: &[C64], power: u32, bound: f64) -> Result<Vec<C64>> {
    let n = u.len() / 2;
    if power == 0 {
        let mut out = vec![C64::new(0.0, 0.0); u.len()];
        out[n] = C64::new(1.0, 0.0);
        return Ok(out);
    }
    let mut acc = u.to_vec();
    for _ in 1..power {
        acc = convolve(&acc, u);
        let peak = acc.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(peak <= bound) {
            return Err(SrlwError::Overflow(peak));
        }
    }
    let centre = acc.len() / 2;
    Ok(acc[centre - n..=centre + n].to_vec())
}

/// Nonlinearity `G(U) = ((I-∂²)^{-1}∂_x(u^{p+1}/(p+1)), 0)`.
pub fn nonlinearity_g(state: &TorusState, p: u32) -> Result<TorusState> {
    nonlinearity_g_bounded(state, p, DEFAULT_OVERFLOW_BOUND)
}

/// [`nonlinearity_g`] with an explicit overflow bound.
pub fn nonlinearity_g_bounded(state: &TorusState, p: u32, bound: f64) -> Result<TorusState> {
    if p < 1 {
        return Err(SrlwError::invalid("nonlinearity exponent p must be at least 1"));
    }
    let w = truncated_power(state.u(), p + 1, bound)?;
    let scale = 1.0 / (p as f64 + 1.0);
    let mut out = TorusState::zeros(state.cutoff());
    for k in state.wavenumbers() {
        let kf = k as f64;
        let g = I * (kf / (1.0 + kf * kf)) * scale * w[state.index(k)];
        out.set(k, g, C64::new(0.0, 0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sobolev_norm_single_mode() {
        let mut s = TorusState::zeros(3);
        s.set(1, c(1.0, 0.0), c(0.0, 0.0));
        assert!((sobolev_norm(s.u(), SobolevIndex(0.0)) - 1.0).abs() < 1e-15);
        assert!((sobolev_norm(s.u(), SobolevIndex(1.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn apply_a_examples() {
        let mut s = TorusState::zeros(2);
        s.set(1, c(0.0, 0.0), c(1.0, 0.0));
        let out = apply_a(&s);
        assert!((out.u_at(1) - c(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(out.v_at(1), c(0.0, 0.0));
        assert_eq!(apply_a(&TorusState::zeros(4)), TorusState::zeros(4));
    }

    #[test]
    fn semigroup_identity_cases() {
        let s = TorusState::from_fn(3, |k| c(k as f64, 1.0), |k| c(1.0, -(k as f64)));
        assert_eq!(semigroup_apply(&s, 0.0), s);
        let t = semigroup_apply(&s, 3.7);
        assert_eq!(t.u_at(0), s.u_at(0));
        assert_eq!(t.v_at(0), s.v_at(0));
    }

    #[test]
    fn dispersion_table_properties() {
        let d = DispersionTable::new(20);
        assert_eq!(d.get(0), 0.0);
        for k in 1..=20 {
            assert_eq!(d.get(k), d.get(-k));
            assert!(d.get(k) < 1.0 && d.get(k) > d.get(k - 1));
        }
    }

    #[test]
    fn nonlinearity_of_single_exponential() {
        let mut s = TorusState::zeros(4);
        s.set(1, c(1.0, 0.0), c(0.0, 0.0));
        let g = nonlinearity_g(&s, 1).unwrap();
        assert!((g.u_at(2) - c(0.0, 0.2)).norm() < 1e-15);
        for k in s.wavenumbers().filter(|&k| k != 2) {
            assert_eq!(g.u_at(k), c(0.0, 0.0));
        }
        assert!(g.v().iter().all(|z| *z == c(0.0, 0.0)));
        let zero = nonlinearity_g(&TorusState::zeros(4), 3).unwrap();
        assert_eq!(zero, TorusState::zeros(4));
    }

    #[test]
    fn nonlinearity_rejects_p_zero_and_flags_overflow() {
        let s = TorusState::from_fn(2, |_| c(1e100, 0.0), |_| c(0.0, 0.0));
        assert!(matches!(nonlinearity_g(&s, 0), Err(SrlwError::InvalidArgument(_))));
        assert!(matches!(nonlinearity_g(&s, 2), Err(SrlwError::Overflow(_))));
    }

    #[test]
    fn json_round_trip_and_shape() {
        let s = TorusState::from_fn(1, |k| c(k as f64, 0.5), |k| c(0.0, k as f64));
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"N":1,"u":[[-1.0,0.5],[0.0,0.5],[1.0,0.5]],"v":[[0.0,-1.0],[0.0,0.0],[0.0,1.0]]}"#);
        let back: TorusState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TorusState>(r#"{"N":1,"u":[[0,0]],"v":[]}"#).is_err());
    }
}
