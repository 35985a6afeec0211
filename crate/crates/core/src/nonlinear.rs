//! Exact control of the nonlinear system by a fixed point of
//!
//! `Ψ(U)(t) = S(t)U0 − ∫₀ᵗ S(t−τ)G(U) dτ + ∫₀ᵗ S(t−τ) B Φ(U0, U_T + w(U,T)) dτ`,
//!
//! where `Φ` is the linear moving control and `w(U,T) = ∫₀ᵀ S(T−τ)G(U) dτ`
//! is the nonlinear drift it has to cancel. Trajectories live on a shared
//! Chebyshev grid; the Duhamel integrals use Gauss–Legendre on its panels.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrlwError};
use crate::ivp::{
    duhamel, nonlinear_sweep, picard_solve, PanelInterpolator, PicardOptions, TrajectorySample,
};
use crate::moving::{forcing_bandwidth, moving_forcing_modes, BumpProfile, MovingControl, MovingSystem};
use crate::quadrature::{ChebyshevGrid, GaussLegendre};
use crate::spectral::{nonlinearity_g, TorusState, XsNorm, C64};

/// The linear control map `Φ(U0, U_T)` at a frozen `(b, c, T, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOperatorPhi {
    pub system: MovingSystem,
    pub bump: BumpProfile,
    pub norm: XsNorm,
}

impl ControlOperatorPhi {
    pub fn new(bump: BumpProfile, speed: f64, horizon: f64, cutoff: usize) -> Result<Self> {
        Ok(Self {
            system: MovingSystem::new(speed, horizon, cutoff)?,
            bump,
            norm: XsNorm::default(),
        })
    }

    pub fn apply(&self, u0: &TorusState, ut: &TorusState) -> Result<MovingControl> {
        self.system.synthesize(u0, ut, &self.bump, &self.norm)
    }

    /// Largest time frequency of any forcing this operator can produce.
    pub fn bandwidth(&self) -> f64 {
        let probe = self.system.control_from_gains(vec![C64::new(0.0, 0.0); self.system.family.len()], &self.norm);
        forcing_bandwidth(&probe, &self.bump)
    }

    /// Chebyshev points needed to interpolate trajectories driven by this
    /// operator to near machine precision.
    pub fn suggested_grid_points(&self) -> usize {
        (0.6 * self.bandwidth() * self.system.horizon).ceil() as usize + 40
    }
}

/// Discretisation shared by every Ψ evaluation of one problem.
#[derive(Debug)]
pub struct PsiGrid {
    pub grid: ChebyshevGrid,
    rule: GaussLegendre,
    interp: PanelInterpolator,
}

impl PsiGrid {
    pub fn new(horizon: f64, grid_points: usize, quadrature_nodes: usize) -> Result<Self> {
        if quadrature_nodes < 2 {
            return Err(SrlwError::invalid("at least two quadrature nodes are required"));
        }
        let grid = ChebyshevGrid::new(horizon, grid_points)?;
        let rule = GaussLegendre::new(quadrature_nodes)?;
        let interp = PanelInterpolator::new(&grid, &rule);
        Ok(Self { grid, rule, interp })
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    fn check(&self, states: &[TorusState]) -> Result<()> {
        if states.len() != self.grid.len() {
            return Err(SrlwError::invalid("trajectory must be sampled on the shared Chebyshev grid"));
        }
        Ok(())
    }

    /// `∫₀ᵀ S(T−τ) G(U(τ)) dτ`.
    pub fn w_integral(&self, states: &[TorusState], p: u32) -> Result<TorusState> {
        self.check(states)?;
        let zero = TorusState::zeros(states[0].cutoff());
        let mut failure = None;
        let out = duhamel(&zero, self.grid.times(), &self.rule, |_, node, buf| {
            let u = self.interp.state_at(node, states);
            match nonlinearity_g(&u, p) {
                Ok(g) => buf.copy_from_slice(g.u()),
                Err(e) => {
                    failure.get_or_insert(e);
                    buf.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(out.into_iter().last().expect("grid has at least two points")),
        }
    }

    /// One application of Ψ; returns the new trajectory and the control used.
    pub fn psi(
        &self,
        states: &[TorusState],
        u0: &TorusState,
        ut: &TorusState,
        phi: &ControlOperatorPhi,
        p: u32,
    ) -> Result<(Vec<TorusState>, MovingControl)> {
        let w = self.w_integral(states, p)?;
        let control = phi.apply(u0, &ut.add(&w))?;
        let forcing = moving_forcing_modes(&control, &phi.bump);
        let next = nonlinear_sweep(u0, &forcing, p, &self.grid, &self.rule, &self.interp, states)?;
        Ok((next, control))
    }

    /// Controlled linear trajectory `Ψ(0)`.
    pub fn linear_controlled(
        &self,
        u0: &TorusState,
        ut: &TorusState,
        phi: &ControlOperatorPhi,
    ) -> Result<(Vec<TorusState>, MovingControl)> {
        let control = phi.apply(u0, ut)?;
        let forcing = moving_forcing_modes(&control, &phi.bump);
        let traj = crate::ivp::solve_linear_forced(u0, &forcing, self.grid.times(), self.rule.len())?;
        Ok((traj.states, control))
    }
}

/// `w(U, T)` for a trajectory sampled on a Chebyshev grid of `[0, T]`.
pub fn w_integral(traj: &TrajectorySample, p: u32, quadrature_nodes: usize) -> Result<TorusState> {
    let grid = PsiGrid::new(traj.horizon(), traj.times.len(), quadrature_nodes)?;
    if grid.times().iter().zip(&traj.times).any(|(a, b)| (a - b).abs() > 1e-12 * traj.horizon()) {
        return Err(SrlwError::invalid("trajectory must be sampled on a Chebyshev grid of [0, T]"));
    }
    grid.w_integral(&traj.states, p)
}

/// One application of Ψ to a trajectory sampled on a Chebyshev grid.
pub fn psi_map(
    traj: &TrajectorySample,
    u0: &TorusState,
    ut: &TorusState,
    phi: &ControlOperatorPhi,
    p: u32,
    quadrature_nodes: usize,
) -> Result<TrajectorySample> {
    let grid = PsiGrid::new(traj.horizon(), traj.times.len(), quadrature_nodes)?;
    let (states, _) = grid.psi(&traj.states, u0, ut, phi, p)?;
    TrajectorySample::new(grid.times().to_vec(), states)
}

/// Configuration of [`nonlinear_exact_control`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearOptions {
    /// Chebyshev points; `0` selects [`ControlOperatorPhi::suggested_grid_points`].
    pub grid_points: usize,
    pub quadrature_nodes: usize,
    /// Absolute sup-norm increment at which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub norm: XsNorm,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self { grid_points: 0, quadrature_nodes: 8, tol: 1e-14, max_iter: 30, norm: XsNorm::default() }
    }
}

/// Diagnostics of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    pub increments: Vec<f64>,
    /// `increments[j] / increments[j-1]`.
    pub contraction_ratios: Vec<f64>,
    /// `‖U(T) − U_T‖_{X^s}` of the nonlinear closed loop, by [`picard_solve`].
    pub terminal_error: f64,
    /// `terminal_error / ‖U_T‖_{X^s}` (equal to `terminal_error` when `U_T = 0`).
    pub relative_terminal_error: f64,
    pub control_norm: f64,
    pub grid_points: usize,
}

impl FixedPointReport {
    /// CSV `iter,ratio,increment`; the first row has an empty ratio.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "ratio", "increment"]).map_err(io)?;
        for (i, inc) in self.increments.iter().enumerate() {
            let ratio = if i == 0 { String::new() } else { self.contraction_ratios[i - 1].to_string() };
            w.write_record(&[(i + 1).to_string(), ratio, inc.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// Iterates Ψ from the controlled linear trajectory until the sup-norm
/// increment drops below `opts.tol`, then verifies the resulting control on
/// the nonlinear system with [`picard_solve`].
pub fn nonlinear_exact_control(
    u0: &TorusState,
    ut: &TorusState,
    phi: &ControlOperatorPhi,
    p: u32,
    opts: &NonlinearOptions,
) -> Result<(MovingControl, FixedPointReport)> {
    if p < 1 {
        return Err(SrlwError::invalid("nonlinearity exponent p must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(SrlwError::invalid("tolerance must be positive"));
    }
    let grid_points = if opts.grid_points == 0 { phi.suggested_grid_points() } else { opts.grid_points };
    let grid = PsiGrid::new(phi.system.horizon, grid_points, opts.quadrature_nodes)?;
    let (mut current, mut control) = grid.linear_controlled(u0, ut, phi)?;

    let mut increments: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for iter in 1..=opts.max_iter {
        let (next, c) = match grid.psi(&current, u0, ut, phi, p) {
            Ok(v) => v,
            Err(SrlwError::Overflow(_)) => {
                return Err(SrlwError::NonConvergence { iterations: iter, increment: f64::INFINITY })
            }
            Err(e) => return Err(e),
        };
        let inc = next
            .iter()
            .zip(&current)
            .map(|(a, b)| opts.norm.distance(a, b))
            .fold(0.0, f64::max);
        if let Some(&prev) = increments.last() {
            ratios.push(if prev > 0.0 { inc / prev } else { 0.0 });
        }
        increments.push(inc);
        current = next;
        control = c;
        if !inc.is_finite() || (increments.len() > 2 && inc > 1e3 * increments[0].max(f64::MIN_POSITIVE)) {
            return Err(SrlwError::NonConvergence { iterations: iter, increment: inc });
        }
        if inc < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SrlwError::NonConvergence {
            iterations: opts.max_iter,
            increment: increments.last().copied().unwrap_or(f64::NAN),
        });
    }

    let picard = PicardOptions {
        grid_points,
        quadrature_nodes: opts.quadrature_nodes,
        tol: opts.tol,
        max_iter: opts.max_iter.max(50),
        norm: opts.norm,
    };
    let forcing = moving_forcing_modes(&control, &phi.bump);
    let outcome = picard_solve(u0, &forcing, p, phi.system.horizon, &picard)?;
    let terminal_error = opts.norm.distance(outcome.trajectory.final_state(), ut);
    let target = opts.norm.norm(ut);
    let report = FixedPointReport {
        iterations: increments.len(),
        increments,
        contraction_ratios: ratios,
        terminal_error,
        relative_terminal_error: if target > 0.0 { terminal_error / target } else { terminal_error },
        control_norm: control.control_norm,
        grid_points,
    };
    Ok((control, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_of_zero_trajectory_vanishes() {
        let grid = PsiGrid::new(2.0, 12, 4).unwrap();
        let states = vec![TorusState::zeros(3); 12];
        let w = grid.w_integral(&states, 1).unwrap();
        assert_eq!(w, TorusState::zeros(3));
    }

    #[test]
    fn w_rejects_foreign_grid() {
        let traj = TrajectorySample::new(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], vec![TorusState::zeros(1); 4]).unwrap();
        assert!(w_integral(&traj, 1, 4).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let r = FixedPointReport {
            iterations: 2,
            increments: vec![1e-3, 1e-6],
            contraction_ratios: vec![1e-3],
            terminal_error: 0.0,
            relative_terminal_error: 0.0,
            control_norm: 1.0,
            grid_points: 10,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("iter,ratio,increment"));
    }
}
