//! Exponential families on `(0, T)`, their Gram matrices and minimum-norm
//! biorthogonal duals.
//!
//! Duals are built against the Hermitian pairing: for a family `e_j(t) =
//! e^{iμ_j t}` the dual `q_m(t) = Σ_j C_{jm} e^{iμ_j t}` satisfies
//! `∫₀ᵀ q_m(t) conj(e_k(t)) dt = δ_{mk}`. Moment problems written with the
//! bilinear pairing `∫ q e^{iμt} dt` are handled by building duals of the
//! negated family (see [`ExponentialFamily::negated`]).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrlwError};
use crate::spectral::{rho, C64};

/// Frequencies closer than this are treated as colliding.
pub const COLLISION_TOL: f64 = 1e-10;

/// Condition number above which an unregularized Gram solve is refused.
pub const MAX_CONDITION: f64 = 1e14;

/// Which branch `ck ± ρ(k)` a frequency belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyLabel {
    pub k: i64,
    pub branch: Branch,
}

/// Real frequencies `μ_j` on `(0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFamily {
    freqs: Vec<f64>,
    horizon: f64,
    labels: Vec<FrequencyLabel>,
}

impl ExponentialFamily {
    /// Builds a labelled family; fails on colliding frequencies.
    pub fn new(freqs: Vec<f64>, horizon: f64, labels: Vec<FrequencyLabel>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(SrlwError::invalid("horizon must be positive"));
        }
        if freqs.len() != labels.len() {
            return Err(SrlwError::invalid("one label per frequency is required"));
        }
        if freqs.iter().any(|f| !f.is_finite()) {
            return Err(SrlwError::invalid("non-finite frequency"));
        }
        let mut sorted = freqs.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[1] - w[0] < COLLISION_TOL {
                return Err(SrlwError::DegenerateFamily(w[0], w[1]));
            }
        }
        Ok(Self { freqs, horizon, labels })
    }

    /// Unlabelled family; frequencies within [`COLLISION_TOL`] of an earlier
    /// one are dropped. Labels are `(index, Plus)`.
    pub fn from_frequencies(freqs: &[f64], horizon: f64) -> Result<Self> {
        let mut kept: Vec<f64> = Vec::with_capacity(freqs.len());
        for &f in freqs {
            if kept.iter().all(|&g| (g - f).abs() >= COLLISION_TOL) {
                kept.push(f);
            }
        }
        let labels = (0..kept.len() as i64)
            .map(|k| FrequencyLabel { k, branch: Branch::Plus })
            .collect();
        Self::new(kept, horizon, labels)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn labels(&self) -> &[FrequencyLabel] {
        &self.labels
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn index_of(&self, k: i64, branch: Branch) -> Option<usize> {
        self.labels.iter().position(|l| l.k == k && l.branch == branch)
    }

    /// The family `{e^{-iμ_j t}}` with the same labels.
    pub fn negated(&self) -> Self {
        Self {
            freqs: self.freqs.iter().map(|f| -f).collect(),
            horizon: self.horizon,
            labels: self.labels.clone(),
        }
    }

    /// Reorders members by `perm` (new position `i` holds old member `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            freqs: perm.iter().map(|&i| self.freqs[i]).collect(),
            horizon: self.horizon,
            labels: perm.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Frequencies `ck ± ρ(k)`, `|k| ≤ N`; `k = 0` contributes the single frequency 0.
pub fn moving_frequencies(speed: f64, cutoff: usize, horizon: f64) -> Result<ExponentialFamily> {
    if cutoff < 1 {
        return Err(SrlwError::invalid("cutoff must be at least 1"));
    }
    if speed.abs() <= 2.0 {
        log::warn!("|c| = {} ≤ 2: the frequency gap is not guaranteed", speed.abs());
    }
    let n = cutoff as i64;
    let mut freqs = Vec::with_capacity(4 * cutoff + 1);
    let mut labels = Vec::with_capacity(4 * cutoff + 1);
    for k in -n..=n {
        let base = speed * k as f64;
        if k == 0 {
            freqs.push(0.0);
            labels.push(FrequencyLabel { k, branch: Branch::Plus });
            continue;
        }
        for branch in [Branch::Plus, Branch::Minus] {
            freqs.push(base + branch.sign() * rho(k));
            labels.push(FrequencyLabel { k, branch });
        }
    }
    ExponentialFamily::new(freqs, horizon, labels)
}

/// Gap diagnostics of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Minimum same-branch difference `μ(k+1) − μ(k)` over `k ≥ tail_from`.
    pub delta_tail: f64,
    /// Minimum consecutive difference of the merged sorted family.
    pub delta_combined: f64,
    #[serde(rename = "K_used")]
    pub k_used: i64,
}

/// Tail and combined gaps; `+∞` when no pair exists.
pub fn gap(family: &ExponentialFamily, tail_from: i64) -> GapReport {
    let mut delta_tail = f64::INFINITY;
    for branch in [Branch::Plus, Branch::Minus] {
        let mut members: Vec<(i64, f64)> = family
            .labels
            .iter()
            .zip(&family.freqs)
            .filter(|(l, _)| l.branch == branch && l.k >= tail_from)
            .map(|(l, &f)| (l.k, f))
            .collect();
        members.sort_by_key(|m| m.0);
        for w in members.windows(2) {
            if w[1].0 == w[0].0 + 1 {
                delta_tail = delta_tail.min(w[1].1 - w[0].1);
            }
        }
    }
    let mut sorted = family.freqs.clone();
    sorted.sort_by(f64::total_cmp);
    let delta_combined = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    GapReport { delta_tail, delta_combined, k_used: tail_from }
}

/// `∫₀ᵀ e^{iδt} dt`, accurate for small `δ`.
#[inline]
pub fn exp_integral(delta: f64, horizon: f64) -> C64 {
    if delta == 0.0 {
        return C64::new(horizon, 0.0);
    }
    let half = 0.5 * delta * horizon;
    C64::from_polar(2.0 * half.sin() / delta, half)
}

/// Closed-form Gram matrix `G_{jk} = ∫₀ᵀ e^{iμ_j t} conj(e^{iμ_k t}) dt`.
pub fn gram_matrix(family: &ExponentialFamily) -> DMatrix<C64> {
    let n = family.len();
    let t = family.horizon;
    DMatrix::from_fn(n, n, |j, k| exp_integral(family.freqs[j] - family.freqs[k], t))
}

/// 2-norm condition number of a Hermitian positive semidefinite matrix
/// from its eigenvalues; `∞` when the smallest is not positive.
pub fn hermitian_condition(m: &DMatrix<C64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimum-norm duals of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalFamily {
    pub family: ExponentialFamily,
    /// `q_m(t) = Σ_j C_{jm} e^{iμ_j t}`.
    pub dual_coeffs: DMatrix<C64>,
    pub regularization: f64,
    pub condition: f64,
    pub residual: f64,
}

impl BiorthogonalFamily {
    /// `q_m(t)`.
    pub fn eval(&self, m: usize, t: f64) -> C64 {
        self.family
            .freqs
            .iter()
            .enumerate()
            .map(|(j, &mu)| self.dual_coeffs[(j, m)] * C64::from_polar(1.0, mu * t))
            .sum()
    }

    /// `‖q_m‖²_{L²(0,T)}`, exactly via the Gram matrix.
    pub fn dual_norm_sq(&self, m: usize) -> f64 {
        let g = gram_matrix(&self.family);
        let c = self.dual_coeffs.column(m);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..c.len() {
            for l in 0..c.len() {
                acc += c[j] * g[(j, l)] * c[l].conj();
            }
        }
        acc.re
    }
}

/// Minimum-L² biorthogonal family, `C = ((G + λI)^{-1})^T`.
pub fn biorthogonal(family: &ExponentialFamily, regularization: f64) -> Result<BiorthogonalFamily> {
    if !(regularization >= 0.0) {
        return Err(SrlwError::invalid("regularization must be non-negative"));
    }
    let n = family.len();
    let mut g = gram_matrix(family);
    let condition = hermitian_condition(&g);
    if regularization == 0.0 && !(condition <= MAX_CONDITION) {
        return Err(SrlwError::IllConditioned { cond: condition });
    }
    for i in 0..n {
        g[(i, i)] += C64::new(regularization, 0.0);
    }
    let inverse = match g.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => g
            .try_inverse()
            .ok_or(SrlwError::IllConditioned { cond: condition })?,
    };
    let mut out = BiorthogonalFamily {
        family: family.clone(),
        dual_coeffs: inverse.transpose(),
        regularization,
        condition,
        residual: 0.0,
    };
    out.residual = verify_biorthogonality(&out);
    Ok(out)
}

/// `max_{m,k} |∫ q_m conj(e_k) − δ_{mk}|`, with the integrals in closed form.
pub fn verify_biorthogonality(b: &BiorthogonalFamily) -> f64 {
    let g = gram_matrix(&b.family);
    let pairing = b.dual_coeffs.transpose() * g;
    let mut worst: f64 = 0.0;
    for m in 0..pairing.nrows() {
        for k in 0..pairing.ncols() {
            let target = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((pairing[(m, k)] - target).norm());
        }
    }
    worst
}

/// JSON record for gap and conditioning sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningRecord {
    pub c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub delta_tail: f64,
    pub delta_combined: f64,
    pub cond: f64,
    pub residual: f64,
}

/// Gap and dual diagnostics of the moving family at `(c, T, N)`.
pub fn conditioning_record(speed: f64, horizon: f64, cutoff: usize, tail_from: i64) -> Result<ConditioningRecord> {
    let family = moving_frequencies(speed, cutoff, horizon)?;
    let gaps = gap(&family, tail_from);
    let (cond, residual) = match biorthogonal(&family.negated(), 0.0) {
        Ok(b) => (b.condition, b.residual),
        Err(SrlwError::IllConditioned { cond }) => (cond, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(ConditioningRecord {
        c: speed,
        horizon,
        cutoff,
        delta_tail: gaps.delta_tail,
        delta_combined: gaps.delta_combined,
        cond,
        residual,
    })
}
