//! Forward solution of the forced system on the torus.
//!
//! The linear part is propagated exactly through the per-mode blocks of
//! [`mode_propagator`]; only the Duhamel integral of the forcing is
//! approximated, by composite Gauss–Legendre quadrature over the panels of
//! the output time grid. The nonlinear problem is solved by Picard iteration
//! on a Chebyshev grid, with barycentric interpolation supplying the iterate
//! at off-grid quadrature nodes.

use std::io::Write;
use std::path::Path;

use crate::error::{Result, SrlwError};
use crate::quadrature::{ChebyshevGrid, GaussLegendre};
use crate::spectral::{
    apply_block, mode_propagator, nonlinearity_g, semigroup_apply, TorusState, XsNorm, C64,
};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Closed-form modal forcing of `b(x+ct) h(x,t)` where
/// `h(x,t) = Σ_m h̃_m(t) e^{im(x+ct)}` and `h̃_m(t) = Σ_j a_{mj} e^{iω_j t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingForcing {
    pub speed: f64,
    /// Fourier coefficients of the bump, ordered `-N_b..=N_b`.
    pub bump: Vec<C64>,
    /// Time frequencies `ω_j` shared by every `h̃_m`.
    pub frequencies: Vec<f64>,
    /// `amplitudes[m + N_h][j] = a_{mj}`.
    pub amplitudes: Vec<Vec<C64>>,
}

impl MovingForcing {
    pub fn control_cutoff(&self) -> usize {
        self.amplitudes.len() / 2
    }

    /// Values `h̃_m(t)` for `m = -N_h..=N_h`.
    pub fn profile_modes(&self, t: f64) -> Vec<C64> {
        let carriers: Vec<C64> = self.frequencies.iter().map(|&w| C64::from_polar(1.0, w * t)).collect();
        self.amplitudes
            .iter()
            .map(|row| row.iter().zip(&carriers).map(|(a, e)| a * e).sum())
            .collect()
    }

    fn eval_into(&self, t: f64, out: &mut [C64]) {
        let n = (out.len() / 2) as i64;
        let nh = self.control_cutoff() as i64;
        let nb = (self.bump.len() / 2) as i64;
        let h = self.profile_modes(t);
        for (slot, k) in out.iter_mut().zip(-n..=n) {
            let mut acc = ZERO;
            for m in (k - nb).max(-nh)..=(k + nb).min(nh) {
                acc += self.bump[(k - m + nb) as usize] * h[(m + nh) as usize];
            }
            *slot = acc * C64::from_polar(1.0, k as f64 * self.speed * t);
        }
    }
}

/// Modal forcing of the moving Dirac source `g(t) δ(x+ct)` with
/// `g(t) = Σ_j a_j e^{iω_j t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointForcing {
    pub speed: f64,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
}

impl PointForcing {
    pub fn signal(&self, t: f64) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&w, a)| a * C64::from_polar(1.0, w * t))
            .sum()
    }

    fn eval_into(&self, t: f64, out: &mut [C64]) {
        let n = (out.len() / 2) as i64;
        let g = self.signal(t) / (2.0 * std::f64::consts::PI);
        for (slot, k) in out.iter_mut().zip(-n..=n) {
            *slot = g * C64::from_polar(1.0, k as f64 * self.speed * t);
        }
    }
}

/// Modal forcing sampled on a Chebyshev grid and interpolated barycentrically.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSamples {
    pub grid: ChebyshevGrid,
    /// `values[i][k + N]` is `f̂_k(t_i)`.
    pub values: Vec<Vec<C64>>,
}

impl ModalSamples {
    pub fn new(grid: ChebyshevGrid, values: Vec<Vec<C64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SrlwError::invalid("one modal sample per grid point is required"));
        }
        let width = values.first().map(Vec::len).unwrap_or(0);
        if width % 2 == 0 || values.iter().any(|v| v.len() != width) {
            return Err(SrlwError::invalid("modal samples must share an odd length 2N+1"));
        }
        Ok(Self { grid, values })
    }

    fn eval_into(&self, t: f64, out: &mut [C64]) {
        let l = self.grid.cardinal(t);
        let n = (out.len() / 2) as i64;
        let m = (self.values[0].len() / 2) as i64;
        for (slot, k) in out.iter_mut().zip(-n..=n) {
            *slot = if k.abs() > m {
                ZERO
            } else {
                let idx = (k + m) as usize;
                l.iter().zip(&self.values).map(|(w, row)| row[idx] * *w).sum()
            };
        }
    }
}

/// Source term `f` of the first equation, evaluable as modal coefficients `f̂_k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSignal {
    Zero,
    ModalTimeSeries(ModalSamples),
    MovingDistributed(MovingForcing),
    MovingPoint(PointForcing),
}

impl ForcingSignal {
    /// Writes `f̂_k(t)` for `k = -N..=N` into `out` (length `2N+1`).
    pub fn eval_into(&self, t: f64, out: &mut [C64]) {
        match self {
            ForcingSignal::Zero => out.iter_mut().for_each(|c| *c = ZERO),
            ForcingSignal::ModalTimeSeries(s) => s.eval_into(t, out),
            ForcingSignal::MovingDistributed(m) => m.eval_into(t, out),
            ForcingSignal::MovingPoint(p) => p.eval_into(t, out),
        }
    }

    pub fn eval(&self, t: f64, cutoff: usize) -> Vec<C64> {
        let mut out = vec![ZERO; 2 * cutoff + 1];
        self.eval_into(t, &mut out);
        out
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingSignal::Zero)
    }
}

/// States sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    pub states: Vec<TorusState>,
}

impl TrajectorySample {
    pub fn new(times: Vec<f64>, states: Vec<TorusState>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(SrlwError::invalid("trajectory needs one state per time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SrlwError::invalid("trajectory times must be strictly increasing"));
        }
        let n = states[0].cutoff();
        if states.iter().any(|s| s.cutoff() != n) {
            return Err(SrlwError::invalid("trajectory states must share one cutoff"));
        }
        Ok(Self { times, states })
    }

    pub fn final_state(&self) -> &TorusState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// `sup_i ‖a(t_i) − b(t_i)‖` over a shared grid.
    pub fn sup_distance(&self, other: &TrajectorySample, norm: &XsNorm) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| norm.distance(a, b))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self, norm: &XsNorm) -> f64 {
        self.states.iter().map(|s| norm.norm(s)).fold(0.0, f64::max)
    }

    /// CSV with one row per time: `t`, then `re_u[k],im_u[k],re_v[k],im_v[k]`
    /// for `k = -N..=N`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| SrlwError::Io { path: "<csv>".into(), message: e.to_string() };
        let ks = self.states[0].wavenumbers();
        let mut header = vec!["t".to_string()];
        for k in ks.clone() {
            header.extend(["re_u", "im_u", "re_v", "im_v"].iter().map(|c| format!("{c}[{k}]")));
        }
        w.write_record(&header).map_err(io)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            for k in ks.clone() {
                let (u, v) = (s.u_at(k), s.v_at(k));
                row.extend([u.re, u.im, v.re, v.im].iter().map(f64::to_string));
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| SrlwError::Io { path: "<csv>".into(), message: e.to_string() })
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| SrlwError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.write_csv(file)
    }
}

/// Uniform time grid `0, T/n, …, T`.
pub fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| if i == steps { horizon } else { horizon * i as f64 / steps as f64 })
        .collect()
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times[0] != 0.0 {
        return Err(SrlwError::invalid("time grid must start at 0 and contain at least two points"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SrlwError::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Duhamel solution on `times`, given the effective source `s_k(τ)` of the
/// first component (`dû_k/dt = ik/(1+k²) v̂_k + s_k`).
///
/// The panel integrals `∫ S(−τ)(s(τ), 0) dτ` are accumulated in grid order,
/// so results do not depend on any evaluation schedule.
pub(crate) fn duhamel<F>(u0: &TorusState, times: &[f64], rule: &GaussLegendre, mut source: F) -> Vec<TorusState>
where
    F: FnMut(f64, usize, &mut [C64]),
{
    let n = u0.cutoff();
    let len = 2 * n + 1;
    let mut acc_u = vec![ZERO; len];
    let mut acc_v = vec![ZERO; len];
    let mut buf = vec![ZERO; len];
    let mut states = Vec::with_capacity(times.len());
    states.push(u0.clone());
    let mut node_index = 0usize;
    for w in times.windows(2) {
        for (tau, weight) in rule.mapped(w[0], w[1]) {
            source(tau, node_index, &mut buf);
            node_index += 1;
            for (i, k) in u0.wavenumbers().enumerate() {
                if buf[i] == ZERO {
                    continue;
                }
                // S(−τ) applied to (s, 0) is the first column of the block.
                let m = mode_propagator(k, -tau);
                acc_u[i] += weight * m[0][0] * buf[i];
                acc_v[i] += weight * m[1][0] * buf[i];
            }
        }
        let t = w[1];
        let mut state = TorusState::zeros(n);
        for (i, k) in u0.wavenumbers().enumerate() {
            let m = mode_propagator(k, t);
            let (u, v) = apply_block(&m, u0.u()[i] + acc_u[i], u0.v()[i] + acc_v[i]);
            state.set(k, u, v);
        }
        states.push(state);
    }
    states
}

/// Solves the linear forced system exactly in the linear part, with the
/// Duhamel integral evaluated by `quadrature_nodes`-point Gauss–Legendre on
/// each panel of `times`.
pub fn solve_linear_forced(
    u0: &TorusState,
    forcing: &ForcingSignal,
    times: &[f64],
    quadrature_nodes: usize,
) -> Result<TrajectorySample> {
    if quadrature_nodes < 2 {
        return Err(SrlwError::invalid("at least two quadrature nodes are required"));
    }
    check_times(times)?;
    if forcing.is_zero() {
        let states = times.iter().map(|&t| semigroup_apply(u0, t)).collect();
        return TrajectorySample::new(times.to_vec(), states);
    }
    let rule = GaussLegendre::new(quadrature_nodes)?;
    let weights: Vec<f64> = u0.wavenumbers().map(|k| 1.0 / (1.0 + (k * k) as f64)).collect();
    let states = duhamel(u0, times, &rule, |t, _, out| {
        forcing.eval_into(t, out);
        for (o, w) in out.iter_mut().zip(&weights) {
            *o *= *w;
        }
    });
    TrajectorySample::new(times.to_vec(), states)
}

/// Configuration of [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Number of Chebyshev points of the shared time grid.
    pub grid_points: usize,
    /// Gauss–Legendre nodes per grid panel.
    pub quadrature_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub norm: XsNorm,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            grid_points: 64,
            quadrature_nodes: 8,
            tol: 1e-13,
            max_iter: 50,
            norm: XsNorm::default(),
        }
    }
}

/// Result of a converged Picard iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: TrajectorySample,
    pub iterations: usize,
    /// Increment ratio of the last two iterations (0 when fewer than two).
    pub contraction_ratio: f64,
    pub ratios: Vec<f64>,
    pub increments: Vec<f64>,
}

/// Evaluates a trajectory sampled on a Chebyshev grid at the Gauss nodes of
/// every grid panel; returns the interpolated states in node order.
#[derive(Debug, Clone)]
pub(crate) struct PanelInterpolator {
    cardinals: Vec<Vec<f64>>,
}

impl PanelInterpolator {
    pub(crate) fn new(grid: &ChebyshevGrid, rule: &GaussLegendre) -> Self {
        let cardinals = grid
            .times()
            .windows(2)
            .flat_map(|w| rule.mapped(w[0], w[1]).map(|(t, _)| grid.cardinal(t)).collect::<Vec<_>>())
            .collect();
        Self { cardinals }
    }

    pub(crate) fn state_at(&self, node: usize, states: &[TorusState]) -> TorusState {
        let mut out = TorusState::zeros(states[0].cutoff());
        for (w, s) in self.cardinals[node].iter().zip(states) {
            if *w != 0.0 {
                out.axpy(C64::new(*w, 0.0), s);
            }
        }
        out
    }
}

/// One application of the Duhamel map with nonlinear source `−G(U_prev)`.
pub(crate) fn nonlinear_sweep(
    u0: &TorusState,
    forcing: &ForcingSignal,
    p: u32,
    grid: &ChebyshevGrid,
    rule: &GaussLegendre,
    interp: &PanelInterpolator,
    previous: &[TorusState],
) -> Result<Vec<TorusState>> {
    let weights: Vec<f64> = u0.wavenumbers().map(|k| 1.0 / (1.0 + (k * k) as f64)).collect();
    let mut failure = None;
    let states = duhamel(u0, grid.times(), rule, |t, node, out| {
        forcing.eval_into(t, out);
        for (o, w) in out.iter_mut().zip(&weights) {
            *o *= *w;
        }
        let u = interp.state_at(node, previous);
        match nonlinearity_g(&u, p) {
            Ok(g) => {
                for (o, gk) in out.iter_mut().zip(g.u()) {
                    *o -= gk;
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(states),
    }
}

/// Picard iteration for `U = S(t)U0 − ∫S(t−τ)G(U)dτ + ∫S(t−τ)F dτ`.
pub fn picard_solve(
    u0: &TorusState,
    forcing: &ForcingSignal,
    p: u32,
    horizon: f64,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    if !(opts.tol > 0.0) {
        return Err(SrlwError::invalid("tolerance must be positive"));
    }
    if p < 1 {
        return Err(SrlwError::invalid("nonlinearity exponent p must be at least 1"));
    }
    if opts.quadrature_nodes < 2 {
        return Err(SrlwError::invalid("at least two quadrature nodes are required"));
    }
    let grid = ChebyshevGrid::new(horizon, opts.grid_points)?;
    let rule = GaussLegendre::new(opts.quadrature_nodes)?;
    let interp = PanelInterpolator::new(&grid, &rule);

    let mut current = solve_linear_forced(u0, forcing, grid.times(), opts.quadrature_nodes)?.states;
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    for iter in 1..=opts.max_iter {
        let next = match nonlinear_sweep(u0, forcing, p, &grid, &rule, &interp, &current) {
            Ok(s) => s,
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
        if !inc.is_finite() || (increments.len() > 3 && inc > 1e6 * increments[0].max(f64::MIN_POSITIVE)) {
            return Err(SrlwError::NonConvergence { iterations: iter, increment: inc });
        }
        if inc < opts.tol {
            let contraction_ratio = ratios.last().copied().unwrap_or(0.0);
            return Ok(PicardOutcome {
                trajectory: TrajectorySample::new(grid.times().to_vec(), current)?,
                iterations: iter,
                contraction_ratio,
                ratios,
                increments,
            });
        }
    }
    Err(SrlwError::NonConvergence {
        iterations: opts.max_iter,
        increment: increments.last().copied().unwrap_or(f64::NAN),
    })
}

/// Right-hand side of the truncated modal ODE; `p = 0` drops the nonlinearity.
fn modal_rhs(state: &TorusState, forcing: &ForcingSignal, p: u32, t: f64, buf: &mut [C64]) -> Result<TorusState> {
    forcing.eval_into(t, buf);
    let g = if p > 0 { Some(nonlinearity_g(state, p)?) } else { None };
    let mut out = TorusState::zeros(state.cutoff());
    for (i, k) in state.wavenumbers().enumerate() {
        let kf = k as f64;
        let w = 1.0 + kf * kf;
        let mut du = I * (kf / w) * state.v()[i] + buf[i] / w;
        if let Some(g) = &g {
            du -= g.u()[i];
        }
        let dv = I * kf * state.u()[i];
        out.set(k, du, dv);
    }
    Ok(out)
}

/// Classical fourth-order Runge–Kutta on the truncated modal system.
///
/// Used as an independent oracle; returns every step.
pub fn rk4_oracle(
    u0: &TorusState,
    forcing: &ForcingSignal,
    p: u32,
    horizon: f64,
    dt: f64,
) -> Result<TrajectorySample> {
    if !(dt > 0.0) {
        return Err(SrlwError::invalid("time step must be positive"));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut buf = vec![ZERO; 2 * u0.cutoff() + 1];
    let mut state = u0.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state.clone());
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = modal_rhs(&state, forcing, p, t, &mut buf)?;
        let mut s = state.clone();
        s.axpy(half, &k1);
        let k2 = modal_rhs(&s, forcing, p, t + 0.5 * h, &mut buf)?;
        let mut s = state.clone();
        s.axpy(half, &k2);
        let k3 = modal_rhs(&s, forcing, p, t + 0.5 * h, &mut buf)?;
        let mut s = state.clone();
        s.axpy(full, &k3);
        let k4 = modal_rhs(&s, forcing, p, t + h, &mut buf)?;
        let sixth = C64::new(h / 6.0, 0.0);
        state.axpy(sixth, &k1);
        state.axpy(sixth * 2.0, &k2);
        state.axpy(sixth * 2.0, &k3);
        state.axpy(sixth, &k4);
        times.push(if i + 1 == steps { horizon } else { (i + 1) as f64 * h });
        states.push(state.clone());
    }
    TrajectorySample::new(times, states)
}
