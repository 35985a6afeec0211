//! Moving distributed control `b(x+ct) h(x,t)` for the linear system.
//!
//! Writing `h(x,t) = h̃(x+ct, t)` and `h̃(x,t) = Σ_m h̃_m(t) e^{imx}`, mode `k`
//! of the system is driven by `Σ_m b̂_{k−m} e^{ikct} h̃_m(t)`. Diagonalising
//! each 2×2 block turns terminal conditions into moments of `h̃_k` against
//! `e^{i(ck ± ρ(k))t}`. With duals biorthogonal to that family only the
//! `m = k` term survives, so every gain is the moment divided by `b̂_0`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrlwError};
use crate::ivp::{solve_linear_forced, uniform_times, ForcingSignal, MovingForcing};
use crate::moment::{biorthogonal, gap, moving_frequencies, BiorthogonalFamily, Branch, ExponentialFamily};
use crate::spectral::{rho, semigroup_apply, TorusState, XsNorm, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance on `|v̂_T(0) − v̂_0(0)|` relative to `max(1, |v̂|)`.
pub const MEAN_TOL: f64 = 1e-12;

/// Real support profile `b`, stored by Fourier coefficients `-N_b..=N_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    coeffs: Vec<C64>,
}

impl BumpProfile {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(SrlwError::invalid("bump coefficients must have odd length 2N_b+1"));
        }
        let n = coeffs.len() / 2;
        for i in 0..coeffs.len() {
            let mirror = coeffs[coeffs.len() - 1 - i];
            if (coeffs[i] - mirror.conj()).norm() > 1e-12 * (1.0 + coeffs[i].norm()) {
                return Err(SrlwError::invalid("bump profile must be real-valued"));
            }
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SrlwError::invalid("non-finite bump coefficient"));
        }
        let _ = n;
        Ok(Self { coeffs })
    }

    /// `b(x) = 1 + cos x`.
    pub fn one_plus_cos() -> Self {
        Self {
            coeffs: vec![C64::new(0.5, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0)],
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// `b̂_0`.
    pub fn mean(&self) -> C64 {
        self.coeffs[self.cutoff()]
    }

    /// `∫_T b dx = 2π b̂_0`.
    pub fn integral(&self) -> C64 {
        self.mean() * (2.0 * PI)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.cutoff() as i64;
        self.coeffs
            .iter()
            .zip(-n..=n)
            .map(|(c, k)| c * C64::from_polar(1.0, k as f64 * x))
            .sum::<C64>()
            .re
    }
}

/// Moving frequency family at `(c, T, N)` and the duals of its negation,
/// so that `∫₀ᵀ q_j(t) e^{iμ_l t} dt = δ_{jl}`. Shared by the distributed
/// and point synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingSystem {
    pub speed: f64,
    pub horizon: f64,
    pub cutoff: usize,
    pub family: ExponentialFamily,
    pub duals: BiorthogonalFamily,
}

impl MovingSystem {
    pub fn new(speed: f64, horizon: f64, cutoff: usize) -> Result<Self> {
        Self::with_regularization(speed, horizon, cutoff, 0.0)
    }

    pub fn with_regularization(speed: f64, horizon: f64, cutoff: usize, regularization: f64) -> Result<Self> {
        let family = moving_frequencies(speed, cutoff, horizon)?;
        let gaps = gap(&family, 1);
        if horizon <= 2.0 * PI / gaps.delta_combined {
            log::warn!(
                "T = {horizon} does not exceed 2π/Δ = {:.4}; the moment problem may be badly conditioned",
                2.0 * PI / gaps.delta_combined
            );
        }
        let duals = biorthogonal(&family.negated(), regularization)?;
        Ok(Self { speed, horizon, cutoff, family, duals })
    }

    pub fn dual_residual(&self) -> f64 {
        self.duals.residual
    }

    /// Time frequencies of the dual expansions, `−μ_l`.
    pub fn dual_frequencies(&self) -> Vec<f64> {
        self.duals.family.freqs().to_vec()
    }

    /// Expansion coefficients of `Σ_j gains_j q_j(t)` on `e^{-iμ_l t}`.
    pub(crate) fn combine(&self, gains: impl Fn(usize) -> C64) -> Vec<C64> {
        let c = &self.duals.dual_coeffs;
        (0..self.family.len())
            .map(|l| (0..self.family.len()).map(|j| gains(j) * c[(l, j)]).sum())
            .collect()
    }

    /// `∫₀ᵀ |Σ_l a_l e^{-iμ_l t}|² dt`.
    pub(crate) fn l2_sq(&self, amps: &[C64]) -> f64 {
        let f = self.duals.family.freqs();
        let t = self.horizon;
        let mut acc = ZERO;
        for (j, aj) in amps.iter().enumerate() {
            if *aj == ZERO {
                continue;
            }
            for (l, al) in amps.iter().enumerate() {
                acc += aj * al.conj() * crate::moment::exp_integral(f[j] - f[l], t);
            }
        }
        acc.re.max(0.0)
    }
}

pub(crate) fn check_mean(u0: &TorusState, ut: &TorusState) -> Result<()> {
    let a = u0.v_at(0);
    let b = ut.v_at(0);
    if (a - b).norm() > MEAN_TOL * a.norm().max(b.norm()).max(1.0) {
        return Err(SrlwError::MeanMismatch { initial: a.re, target: b.re });
    }
    Ok(())
}

/// Moment of mode `k` on branch `s`: the value that
/// `∫₀ᵀ ∫_T (forcing) e^{-ikx} e^{isρ(k)t} dx dt` (with the carrier removed)
/// must take, in the `2π`-normalised pairing:
/// `2π e^{isρT}[(1+k²)û_k − s·sgn(k)√(1+k²) v̂_k]`; `k = 0` gives `2π û_0`.
pub fn mode_moment(state: &TorusState, k: i64, branch: Branch, horizon: f64) -> C64 {
    if k == 0 {
        return state.u_at(0) * (2.0 * PI);
    }
    let kf = k as f64;
    let w = 1.0 + kf * kf;
    let s = branch.sign();
    let z = state.u_at(k) * w - state.v_at(k) * (s * kf.signum() * w.sqrt());
    z * C64::from_polar(2.0 * PI, s * rho(k) * horizon)
}

/// Right-hand sides of the moment problem for reaching `target` from rest,
/// one per label of the moving family (same order as [`moving_frequencies`]).
pub fn moment_rhs(target: &TorusState, horizon: f64) -> Vec<((i64, Branch), C64)> {
    let mut out = Vec::new();
    for k in target.wavenumbers() {
        if k == 0 {
            out.push(((0, Branch::Plus), mode_moment(target, 0, Branch::Plus, horizon)));
            continue;
        }
        for b in [Branch::Plus, Branch::Minus] {
            out.push(((k, b), mode_moment(target, k, b, horizon)));
        }
    }
    out
}

/// Synthesized moving control.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingControl {
    pub speed: f64,
    pub horizon: f64,
    pub cutoff: usize,
    /// Gains in family order.
    pub gains: Vec<C64>,
    /// `h̃_m(t) = Σ_l amplitudes[m+N][l] e^{-iμ_l t}`.
    pub amplitudes: Vec<Vec<C64>>,
    pub frequencies: Vec<f64>,
    pub dual_residual: f64,
    /// `‖h‖_{L²(0,T; H^{s-2})}`.
    pub control_norm: f64,
    pub sobolev_s: f64,
}

impl MovingControl {
    fn gain_of(&self, family: &ExponentialFamily, k: i64, b: Branch) -> C64 {
        family.index_of(k, b).map(|i| self.gains[i]).unwrap_or(ZERO)
    }

    /// `h̃_m(t)`, `m = -N..=N`.
    pub fn profile_modes(&self, t: f64) -> Vec<C64> {
        let carriers: Vec<C64> = self.frequencies.iter().map(|&w| C64::from_polar(1.0, w * t)).collect();
        self.amplitudes
            .iter()
            .map(|row| row.iter().zip(&carriers).map(|(a, e)| a * e).sum())
            .collect()
    }

    /// `h(x, t) = h̃(x + ct, t)`.
    pub fn eval(&self, x: f64, t: f64) -> C64 {
        let n = self.cutoff as i64;
        self.profile_modes(t)
            .iter()
            .zip(-n..=n)
            .map(|(h, m)| h * C64::from_polar(1.0, m as f64 * (x + self.speed * t)))
            .sum()
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn export(&self, system: &MovingSystem) -> MovingControlExport {
        let n = self.cutoff as i64;
        let pair = |b: Branch| {
            (-n..=n)
                .map(|k| {
                    let g = self.gain_of(&system.family, k, b);
                    [g.re, g.im]
                })
                .collect()
        };
        MovingControlExport {
            c: self.speed,
            horizon: self.horizon,
            cutoff: self.cutoff,
            f_plus: pair(Branch::Plus),
            f_minus: pair(Branch::Minus),
            dual_residual: self.dual_residual,
            control_norm: self.control_norm,
        }
    }

    /// CSV grid `x,t,re_h,im_h` on `nx × nt` points of `[0,2π) × [0,T]`.
    pub fn write_grid_csv<W: Write>(&self, writer: W, nx: usize, nt: usize) -> Result<()> {
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "t", "re_h", "im_h"]).map_err(io)?;
        for it in 0..nt {
            let t = self.horizon * it as f64 / (nt.max(2) - 1) as f64;
            for ix in 0..nx {
                let x = 2.0 * PI * ix as f64 / nx as f64;
                let h = self.eval(x, t);
                w.write_record(&[x.to_string(), t.to_string(), h.re.to_string(), h.im.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// JSON export of a moving control; gains ordered `k = -N..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingControlExport {
    pub c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub f_plus: Vec<[f64; 2]>,
    pub f_minus: Vec<[f64; 2]>,
    pub dual_residual: f64,
    pub control_norm: f64,
}

impl MovingSystem {
    /// Gains and control steering `u0` to `ut` in time `T`.
    ///
    /// The general problem is reduced to the null-initial one with target
    /// `ut − S(T)u0`. `v̂(0)` cannot be steered, so it must already agree.
    pub fn synthesize(
        &self,
        u0: &TorusState,
        ut: &TorusState,
        bump: &BumpProfile,
        norm: &XsNorm,
    ) -> Result<MovingControl> {
        if bump.mean().norm() == 0.0 {
            return Err(SrlwError::ZeroMeanBump);
        }
        if u0.cutoff() != self.cutoff || ut.cutoff() != self.cutoff {
            return Err(SrlwError::invalid("state cutoffs must match the moving system"));
        }
        check_mean(u0, ut)?;
        let reduced = ut.sub(&semigroup_apply(u0, self.horizon));
        let integral = bump.integral();
        let gains: Vec<C64> = self
            .family
            .labels()
            .iter()
            .map(|l| mode_moment(&reduced, l.k, l.branch, self.horizon) / integral)
            .collect();
        Ok(self.control_from_gains(gains, norm))
    }

    pub(crate) fn control_from_gains(&self, gains: Vec<C64>, norm: &XsNorm) -> MovingControl {
        let n = self.cutoff as i64;
        let labels = self.family.labels();
        let amplitudes: Vec<Vec<C64>> = (-n..=n)
            .map(|m| self.combine(|j| if labels[j].k == m { gains[j] } else { ZERO }))
            .collect();
        let r = norm.s - 2.0;
        let control_norm = amplitudes
            .iter()
            .zip(-n..=n)
            .map(|(a, m)| (1.0 + (m * m) as f64).powf(r) * self.l2_sq(a))
            .sum::<f64>()
            .sqrt();
        MovingControl {
            speed: self.speed,
            horizon: self.horizon,
            cutoff: self.cutoff,
            gains,
            amplitudes,
            frequencies: self.dual_frequencies(),
            dual_residual: self.dual_residual(),
            control_norm,
            sobolev_s: norm.s,
        }
    }
}

/// Builds the moving system for `(c, T, N)` and synthesizes one control.
pub fn synthesize_moving(
    u0: &TorusState,
    ut: &TorusState,
    bump: &BumpProfile,
    speed: f64,
    horizon: f64,
) -> Result<MovingControl> {
    let system = MovingSystem::new(speed, horizon, u0.cutoff())?;
    system.synthesize(u0, ut, bump, &XsNorm::default())
}

/// Exact truncated modal forcing of `b(x+ct) h(x,t)`.
pub fn moving_forcing_modes(control: &MovingControl, bump: &BumpProfile) -> ForcingSignal {
    ForcingSignal::MovingDistributed(MovingForcing {
        speed: control.speed,
        bump: bump.coeffs().to_vec(),
        frequencies: control.frequencies.clone(),
        amplitudes: control.amplitudes.clone(),
    })
}

/// Panels needed to resolve a forcing with the given largest frequency.
pub fn panels_for(max_frequency: f64, horizon: f64, quadrature_nodes: usize) -> usize {
    let per_panel = 0.5 * quadrature_nodes as f64;
    ((max_frequency.abs() * horizon / per_panel).ceil() as usize).max(16)
}

/// Largest time frequency present in the modal forcing of a moving control.
pub fn forcing_bandwidth(control: &MovingControl, bump: &BumpProfile) -> f64 {
    let w = control.frequencies.iter().map(|f| f.abs()).fold(0.0, f64::max);
    w + control.speed.abs() * (control.cutoff + bump.cutoff()) as f64 + 1.0
}

pub(crate) fn relative_distance(norm: XsNorm, reached: &TorusState, target: &TorusState) -> f64 {
    let scale = norm.norm(target);
    let d = norm.distance(reached, target);
    if scale > 0.0 { d / scale } else { d }
}

/// Forward-simulates the controlled system and returns
/// `‖U(T) − U_T‖_{X^s} / ‖U_T‖_{X^s}` (the absolute error when `U_T = 0`).
pub fn verify_terminal(
    u0: &TorusState,
    ut: &TorusState,
    control: &MovingControl,
    bump: &BumpProfile,
    quadrature_nodes: usize,
    norm: &XsNorm,
) -> Result<f64> {
    let forcing = moving_forcing_modes(control, bump);
    let panels = panels_for(forcing_bandwidth(control, bump), control.horizon, quadrature_nodes);
    let times = uniform_times(control.horizon, panels);
    let traj = solve_linear_forced(u0, &forcing, &times, quadrature_nodes)?;
    Ok(relative_distance(*norm, traj.final_state(), ut))
}
