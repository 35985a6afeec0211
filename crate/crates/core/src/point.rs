//! Point control `g(t) δ(x+ct)` for the linear system.
//!
//! The moving Dirac has Fourier coefficients `e^{ikct}/2π`, so the terminal
//! conditions become moments of the scalar `g` itself against the same
//! frequency family `ck ± ρ(k)` used by the distributed control. Initial and
//! final data enter the moments directly.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrlwError};
use crate::ivp::{solve_linear_forced, uniform_times, ForcingSignal, PointForcing};
use crate::moment::Branch;
use crate::moving::{check_mean, mode_moment, panels_for, relative_distance, MovingSystem};
use crate::spectral::{TorusState, XsNorm, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Norm of the `H^{-1} × L²` state space of the point-control problem.
pub fn point_state_norm() -> XsNorm {
    XsNorm::with_v_shift(-1.0, -1.0)
}

/// Synthesized scalar control `g(t) = Σ_j α_j q_j(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointControl {
    pub speed: f64,
    pub horizon: f64,
    pub cutoff: usize,
    /// Moments `α` in family order.
    pub alphas: Vec<C64>,
    /// `g(t) = Σ_l amplitudes[l] e^{i frequencies[l] t}`.
    pub amplitudes: Vec<C64>,
    pub frequencies: Vec<f64>,
    pub dual_residual: f64,
    /// `‖g‖_{L²(0,T)}`.
    pub control_norm: f64,
}

impl PointControl {
    pub fn forcing(&self) -> PointForcing {
        PointForcing {
            speed: self.speed,
            frequencies: self.frequencies.clone(),
            amplitudes: self.amplitudes.clone(),
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&w, a)| a * C64::from_polar(1.0, w * t))
            .sum()
    }

    pub fn export(&self, system: &MovingSystem) -> PointControlExport {
        let n = self.cutoff as i64;
        let pick = |b: Branch| {
            (-n..=n)
                .map(|k| {
                    let a = system.family.index_of(k, b).map(|i| self.alphas[i]).unwrap_or(ZERO);
                    [a.re, a.im]
                })
                .collect()
        };
        PointControlExport {
            c: self.speed,
            horizon: self.horizon,
            cutoff: self.cutoff,
            alpha_plus: pick(Branch::Plus),
            alpha_minus: pick(Branch::Minus),
            control_norm: self.control_norm,
            dual_residual: self.dual_residual,
        }
    }

    /// CSV `t,re_g,im_g` on `samples` uniform points of `[0, T]`.
    pub fn write_csv<W: Write>(&self, writer: W, samples: usize) -> Result<()> {
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re_g", "im_g"]).map_err(io)?;
        for t in uniform_times(self.horizon, samples.max(1)) {
            let g = self.eval(t);
            w.write_record(&[t.to_string(), g.re.to_string(), g.im.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// JSON export of a point control; moments ordered `k = -N..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointControlExport {
    pub c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub alpha_plus: Vec<[f64; 2]>,
    pub alpha_minus: Vec<[f64; 2]>,
    pub control_norm: f64,
    pub dual_residual: f64,
}

/// Modal forcing of `g(t) δ(x+ct)`: `f̂_k(t) = g(t) e^{ikct} / 2π`.
pub fn dirac_forcing_modes(g: &PointControl) -> ForcingSignal {
    ForcingSignal::MovingPoint(g.forcing())
}

impl MovingSystem {
    /// Scalar control steering `u0` to `ut` through the moving Dirac.
    pub fn synthesize_point(&self, u0: &TorusState, ut: &TorusState) -> Result<PointControl> {
        if u0.cutoff() != self.cutoff || ut.cutoff() != self.cutoff {
            return Err(SrlwError::invalid("state cutoffs must match the moving system"));
        }
        if self.horizon <= 2.0 * PI {
            log::warn!("point control horizon T = {} does not exceed 2π", self.horizon);
        }
        check_mean(u0, ut)?;
        let alphas: Vec<C64> = self
            .family
            .labels()
            .iter()
            .map(|l| mode_moment(ut, l.k, l.branch, self.horizon) - mode_moment(u0, l.k, l.branch, 0.0))
            .collect();
        let amplitudes = self.combine(|j| alphas[j]);
        let control_norm = self.l2_sq(&amplitudes).sqrt();
        Ok(PointControl {
            speed: self.speed,
            horizon: self.horizon,
            cutoff: self.cutoff,
            alphas,
            amplitudes,
            frequencies: self.dual_frequencies(),
            dual_residual: self.dual_residual(),
            control_norm,
        })
    }
}

/// Builds the system for `(c, T, N)` and synthesizes a point control.
pub fn synthesize_point(u0: &TorusState, ut: &TorusState, speed: f64, horizon: f64) -> Result<PointControl> {
    MovingSystem::new(speed, horizon, u0.cutoff())?.synthesize_point(u0, ut)
}

/// Forward-simulates the Dirac-forced system; returns the relative
/// `H^{-1} × L²` terminal error `‖U(T) − U_T‖ / ‖U_T‖` (absolute when `U_T = 0`).
pub fn verify_terminal_point(
    u0: &TorusState,
    ut: &TorusState,
    g: &PointControl,
    quadrature_nodes: usize,
) -> Result<f64> {
    let bandwidth = g.frequencies.iter().map(|f| f.abs()).fold(0.0, f64::max)
        + g.speed.abs() * g.cutoff as f64
        + 1.0;
    let times = uniform_times(g.horizon, panels_for(bandwidth, g.horizon, quadrature_nodes));
    let traj = solve_linear_forced(u0, &dirac_forcing_modes(g), &times, quadrature_nodes)?;
    let norm = point_state_norm();
    Ok(relative_distance(norm, traj.final_state(), ut))
}
