use std::f64::consts::PI;

use serde_json::{json, Value};
use srlw_core::bounded::{eigenfunctions, inner_product_quadrature, write_eigen_table};
use srlw_core::moment::hermitian_condition;
use srlw_core::moving::{verify_terminal, BumpProfile, MovingSystem};
use srlw_core::nonlinear::{nonlinear_exact_control, ControlOperatorPhi, NonlinearOptions};
use srlw_core::{
    eigenpairs, energy, evolve_homogeneous, gap, gram_matrix, interval_eigenvalue, moving_frequencies, penalty_sweep,
    picard_solve, rk4_oracle, solve_linear_forced, spectral_controllability_probe, uniform_times,
    verify_terminal_point, ApproxControlOptions, BoundedState, ControlBasis, ForcingSignal, MovingForcing,
    PicardOptions, SrlwError, TorusState, XsNorm, C64,
};

use crate::config::Params;
use crate::{CliError, Experiment, ExperimentConfig, ExperimentReport};

/// Deterministic data shared by the experiments and the acceptance suite.
pub mod profiles {
    use super::*;

    /// `û_k ∝ (1+k²)^{-2}`, `v̂ = 0`, scaled to `‖·‖_{X^s} = norm`.
    pub fn decaying_target(cutoff: usize, norm: f64, xs: &XsNorm) -> TorusState {
        let st = TorusState::from_fn(cutoff, |k| C64::new((1.0 + (k * k) as f64).powi(-2), 0.0), |_| C64::new(0.0, 0.0));
        let n = xs.norm(&st);
        st.scaled(C64::new(norm / n, 0.0))
    }

    /// A real state with both components populated and zero `v` mean.
    pub fn travelling_bump(cutoff: usize, norm: f64, xs: &XsNorm) -> TorusState {
        let st = TorusState::from_fn(
            cutoff,
            |k| C64::new((1.0 + (k * k) as f64).powi(-2), 0.0),
            |k| C64::new(0.0, 0.5 * k as f64 / (1.0 + (k * k) as f64).powi(2)),
        );
        let n = xs.norm(&st);
        st.scaled(C64::new(norm / n, 0.0))
    }

    /// A fixed moving forcing with bump `1 + cos x`, used to exercise the
    /// forced solvers.
    pub fn sample_moving_forcing(speed: f64, cutoff: usize) -> ForcingSignal {
        let n = cutoff as i64 / 2;
        ForcingSignal::MovingDistributed(MovingForcing {
            speed,
            bump: BumpProfile::one_plus_cos().coeffs().to_vec(),
            frequencies: vec![0.9, -1.7],
            amplitudes: (-n..=n)
                .map(|m| vec![C64::new(0.2, 0.1 * m as f64), C64::new(-0.1 * m as f64, 0.3)])
                .collect(),
        })
    }

    /// Four-mode bounded target `a_n = ½(i/2)^{n−1}`, `n = 1..=4`, with the
    /// partners `a_{−n} = −conj(a_n)`.
    pub fn bounded_four_mode_target() -> BoundedState {
        let mut pos = Vec::new();
        let mut c = C64::new(0.5, 0.0);
        for _ in 0..4 {
            pos.push(c);
            c *= C64::new(0.0, 0.5);
        }
        BoundedState::real_from_positive(0.0, &pos)
    }
}

pub(crate) fn dispatch(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let params = config.reader();
    let numerical = |source: SrlwError| CliError::Numerical { experiment: config.experiment, source };
    let mut report = ExperimentReport::new(config);
    match config.experiment {
        Experiment::Simulate => {
            let s = SimulateSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::MovingControl => {
            let s = MovingSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::PointControl => {
            let s = PointSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::NonlinearControl => {
            let s = NonlinearSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::BoundedSpectrum => {
            let s = SpectrumSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::SpectralProbe => {
            let s = ProbeSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::ApproxControl => {
            let s = ApproxSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
        Experiment::GapReport => {
            let s = GapSettings::read(&params)?;
            params.finish()?;
            s.run(&mut report).map_err(numerical)?
        }
    }
    Ok(report)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> srlw_core::Result<()>) -> srlw_core::Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn sobolev(params: &Params) -> Result<XsNorm, CliError> {
    Ok(XsNorm::new(params.f64("s", 1.0)?))
}

struct SimulateSettings {
    cutoff: usize,
    horizon: f64,
    p: u32,
    speed: f64,
    data_norm: f64,
    forcing: bool,
    steps: usize,
    grid_points: usize,
    oracle_dt: f64,
    nodes: usize,
    norm: XsNorm,
}

impl SimulateSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        let forcing = match p.string("forcing", "none")?.as_str() {
            "none" => false,
            "moving" => true,
            other => return Err(CliError::Config(format!("'forcing' must be 'none' or 'moving', got '{other}'"))),
        };
        Ok(Self {
            cutoff: p.usize_at_least("N", 8, 1)?,
            horizon: p.positive("T", 7.0)?,
            p: p.usize("p", 0)? as u32,
            speed: p.f64("c", 3.0)?,
            data_norm: p.non_negative("data_norm", 1e-3)?,
            forcing,
            steps: p.usize_at_least("steps", 64, 1)?,
            grid_points: p.usize_at_least("grid_points", 64, 2)?,
            oracle_dt: p.positive("oracle_dt", 1e-3)?,
            nodes: p.usize_at_least("quadrature_nodes", 12, 2)?,
            norm: sobolev(p)?,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let u0 = profiles::travelling_bump(self.cutoff, self.data_norm, &self.norm);
        let forcing =
            if self.forcing { profiles::sample_moving_forcing(self.speed, self.cutoff) } else { ForcingSignal::Zero };
        let traj = if self.p == 0 {
            solve_linear_forced(&u0, &forcing, &uniform_times(self.horizon, self.steps), self.nodes)?
        } else {
            let opts = PicardOptions {
                grid_points: self.grid_points,
                quadrature_nodes: self.nodes,
                norm: self.norm,
                ..PicardOptions::default()
            };
            let out = picard_solve(&u0, &forcing, self.p, self.horizon, &opts)?;
            report.metric("picard_iterations", out.iterations);
            report.metric("picard_contraction_ratio", out.contraction_ratio);
            out.trajectory
        };
        let oracle = rk4_oracle(&u0, &forcing, self.p, self.horizon, self.oracle_dt)?;
        let scale = self.norm.norm(oracle.final_state());
        let gap = self.norm.distance(traj.final_state(), oracle.final_state());
        report.metric("rk4_relative_disagreement", if scale > 0.0 { gap / scale } else { gap });
        report.metric("initial_norm", self.norm.norm(&u0));
        report.metric("final_norm", self.norm.norm(traj.final_state()));
        if self.p == 0 && !self.forcing {
            let fin = traj.final_state();
            let drift = u0
                .wavenumbers()
                .map(|k| {
                    let e = |s: &TorusState| (1.0 + (k * k) as f64) * s.u_at(k).norm_sqr() + s.v_at(k).norm_sqr();
                    (e(fin) - e(&u0)).abs() / e(&u0).max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max);
            report.metric("max_mode_energy_drift", drift);
        }
        report.metric("time_points", traj.times.len());
        report.plot("trajectory.csv", csv_bytes(|b| traj.write_csv(b))?);
        Ok(())
    }
}

struct MovingSettings {
    cutoff: usize,
    speed: f64,
    horizon: f64,
    regularization: f64,
    target_norm: f64,
    nodes: usize,
    norm: XsNorm,
}

impl MovingSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        Ok(Self {
            cutoff: p.usize_at_least("N", 8, 1)?,
            speed: p.f64("c", 3.0)?,
            horizon: p.positive("T", 7.0)?,
            regularization: p.non_negative("regularization", 0.0)?,
            target_norm: p.non_negative("target_norm", 1.0)?,
            nodes: p.usize_at_least("quadrature_nodes", 12, 2)?,
            norm: sobolev(p)?,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let system = MovingSystem::with_regularization(self.speed, self.horizon, self.cutoff, self.regularization)?;
        let bump = BumpProfile::one_plus_cos();
        let u0 = TorusState::zeros(self.cutoff);
        let ut = profiles::decaying_target(self.cutoff, self.target_norm, &self.norm);
        let control = system.synthesize(&u0, &ut, &bump, &self.norm)?;
        let err = verify_terminal(&u0, &ut, &control, &bump, self.nodes, &self.norm)?;
        report.metric("terminal_relative_error", err);
        report.metric("dual_residual", system.dual_residual());
        report.metric("gram_condition", system.duals.condition);
        report.metric("control_norm", control.control_norm);
        report.metric("control_to_target_ratio", control.control_norm / self.norm.norm(&ut).max(f64::MIN_POSITIVE));
        report.metric("max_gain", control.max_gain());
        let export = serde_json::to_vec_pretty(&control.export(&system)).expect("export is plain data");
        report.plot("control.json", export);
        report.plot("control_grid.csv", csv_bytes(|b| control.write_grid_csv(b, 64, 64))?);
        Ok(())
    }
}

struct PointSettings {
    cutoff: usize,
    speed: f64,
    horizon: f64,
    nodes: usize,
}

impl PointSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        Ok(Self {
            cutoff: p.usize_at_least("N", 6, 1)?,
            speed: p.f64("c", 3.0)?,
            horizon: p.positive("T", 7.0)?,
            nodes: p.usize_at_least("quadrature_nodes", 12, 2)?,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let system = MovingSystem::new(self.speed, self.horizon, self.cutoff)?;
        let u0 = TorusState::zeros(self.cutoff);
        let ut = profiles::decaying_target(self.cutoff, 1.0, &XsNorm::default());
        let g = system.synthesize_point(&u0, &ut)?;
        report.metric("terminal_relative_error", verify_terminal_point(&u0, &ut, &g, self.nodes)?);
        report.metric("dual_residual", g.dual_residual);
        report.metric("control_norm", g.control_norm);
        let export = serde_json::to_vec_pretty(&g.export(&system)).expect("export is plain data");
        report.plot("point_control.json", export);
        report.plot("point_control.csv", csv_bytes(|b| g.write_csv(b, 512))?);
        Ok(())
    }
}

struct NonlinearSettings {
    cutoff: usize,
    speed: f64,
    horizon: f64,
    p: u32,
    data_norm: f64,
    opts: NonlinearOptions,
}

impl NonlinearSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        let exponent = p.usize_at_least("p", 1, 1)? as u32;
        let opts = NonlinearOptions {
            grid_points: p.usize("grid_points", 0)?,
            quadrature_nodes: p.usize_at_least("quadrature_nodes", 8, 2)?,
            tol: p.positive("tol", 1e-14)?,
            max_iter: p.usize_at_least("max_iter", 10, 1)?,
            norm: sobolev(p)?,
        };
        Ok(Self {
            cutoff: p.usize_at_least("N", 8, 1)?,
            speed: p.f64("c", 3.0)?,
            horizon: p.positive("T", 7.0)?,
            p: exponent,
            data_norm: p.non_negative("data_norm", 1e-3)?,
            opts,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let phi = ControlOperatorPhi::new(BumpProfile::one_plus_cos(), self.speed, self.horizon, self.cutoff)?;
        let u0 = TorusState::zeros(self.cutoff);
        let ut = profiles::decaying_target(self.cutoff, self.data_norm, &self.opts.norm);
        let (control, fp) = nonlinear_exact_control(&u0, &ut, &phi, self.p, &self.opts)?;
        report.metric("iterations", fp.iterations);
        report.metric("contraction_ratios", fp.contraction_ratios.clone());
        report.metric("max_contraction_ratio", fp.contraction_ratios.iter().cloned().fold(0.0, f64::max));
        report.metric("final_increment", fp.increments.last().copied().unwrap_or(0.0));
        report.metric("terminal_error", fp.terminal_error);
        report.metric("terminal_relative_error", fp.relative_terminal_error);
        report.metric("control_norm", control.control_norm);
        report.metric("grid_points", fp.grid_points);
        report.plot("fixed_point.csv", csv_bytes(|b| fp.write_csv(b))?);
        Ok(())
    }
}

struct SpectrumSettings {
    modes: usize,
    nodes: usize,
    horizon: f64,
}

impl SpectrumSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        Ok(Self {
            modes: p.usize_at_least("M", 8, 1)?,
            nodes: p.usize_at_least("quadrature_nodes", 24, 2)?,
            horizon: p.positive("T", 50.0)?,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let pairs = eigenpairs(self.modes)?;
        let funcs: Vec<_> = pairs.iter().map(eigenfunctions).collect();
        let mut norm_defect: f64 = 0.0;
        let mut orth_defect: f64 = 0.0;
        for (i, a) in funcs.iter().enumerate() {
            for (j, b) in funcs.iter().enumerate().skip(i) {
                let ip = inner_product_quadrature(a, b, self.nodes)?;
                if i == j {
                    norm_defect = norm_defect.max((ip.norm().sqrt() - 1.0).abs());
                } else {
                    orth_defect = orth_defect.max(ip.norm());
                }
            }
        }
        let mut state = BoundedState::zeros(self.modes);
        for n in state.indices() {
            state.set(n, C64::new(1.0 / (1 + n * n) as f64, 0.3 * n as f64 / (1 + n * n) as f64));
        }
        let e0 = energy(&state);
        let drift = (0..=10)
            .map(|i| (energy(&evolve_homogeneous(&state, self.horizon * i as f64 / 10.0)) - e0).abs() / e0)
            .fold(0.0, f64::max);
        report.metric("lambda_1", interval_eigenvalue(1));
        report.metric("lambda_1_exact", PI / (1.0 + PI * PI).sqrt());
        report.metric("max_norm_defect", norm_defect);
        report.metric("max_orthogonality_defect", orth_defect);
        report.metric("energy_drift", drift);
        report.metric(
            "eigenvalues",
            Value::Array(pairs.iter().map(|p| json!({"n": p.n, "lambda": p.lambda})).collect()),
        );
        report.plot("eigen_table.csv", csv_bytes(|b| write_eigen_table(b, &pairs))?);
        Ok(())
    }
}

struct ProbeSettings {
    max_constraints: usize,
    target: i64,
    horizon: f64,
    bits: usize,
}

impl ProbeSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        let s = Self {
            max_constraints: p.usize_at_least("M", 8, 1)?,
            target: p.usize_at_least("target_mode", 1, 1)? as i64,
            horizon: p.positive("T", 10.0)?,
            bits: p.usize_at_least("precision_bits", 512, 64)?,
        };
        if s.target as usize > s.max_constraints {
            return Err(CliError::Config("'target_mode' must not exceed 'M'".into()));
        }
        Ok(s)
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let curve = spectral_controllability_probe(self.target, self.max_constraints, self.horizon, self.bits)?;
        let conds: Vec<f64> = curve.points.iter().map(|p| p.condition).collect();
        let norms: Vec<f64> = curve.points.iter().map(|p| p.min_norm).collect();
        report.metric("conditions", conds.clone());
        report.metric("min_norms", norms.clone());
        report.metric(
            "min_norms_f64",
            Value::Array(curve.points.iter().map(|p| p.min_norm_f64.map(Value::from).unwrap_or(Value::Null)).collect()),
        );
        report.metric("condition_at_max", *conds.last().expect("at least one point"));
        report.metric("min_norm_monotone", norms.windows(2).all(|w| w[1] > w[0]));
        report.metric("first_constraint_count_beyond_f64", curve.points.iter().find(|p| p.exceeds_f64).map(|p| p.constraints));
        report.plot("cost_curve.csv", csv_bytes(|b| curve.write_csv(b))?);
        Ok(())
    }
}

struct ApproxSettings {
    horizon: f64,
    control_dim: usize,
    penalty: f64,
    sweep: Vec<f64>,
    opts: ApproxControlOptions,
}

impl ApproxSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        let basis = match p.string("basis", "sine")?.as_str() {
            "sine" => ControlBasis::Sine,
            "cubic-bspline" => ControlBasis::CubicBSpline,
            other => {
                return Err(CliError::Config(format!("'basis' must be 'sine' or 'cubic-bspline', got '{other}'")))
            }
        };
        let sweep = p.f64_list("penalties", &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])?;
        if sweep.iter().any(|x| *x < 0.0) {
            return Err(CliError::Config("'penalties' must be non-negative".into()));
        }
        Ok(Self {
            horizon: p.positive("T", 10.0)?,
            control_dim: p.usize_at_least("control_dim", 40, 1)?,
            penalty: p.non_negative("penalty", 0.0)?,
            sweep,
            opts: ApproxControlOptions {
                basis,
                state_modes: p.usize_at_least("state_modes", 16, 4)?,
                precision_bits: p.usize_at_least("precision_bits", 1024, 64)?,
            },
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let a0 = BoundedState::zeros(self.opts.state_modes);
        let target = profiles::bounded_four_mode_target();
        let mut penalties = vec![self.penalty];
        penalties.extend(&self.sweep);
        let mut results = penalty_sweep(&a0, &target, self.horizon, self.control_dim, &penalties, &self.opts)?;
        let main = results.remove(0);
        report.metric("residual", main.residual);
        report.metric("relative_residual", main.relative_residual);
        report.metric("residual_l2", main.residual_l2);
        report.metric("control_norm", main.control_norm);
        report.metric("sweep_penalties", self.sweep.clone());
        report.metric("sweep_residuals", results.iter().map(|r| r.residual).collect::<Vec<_>>());
        report.metric("sweep_control_norms", results.iter().map(|r| r.control_norm).collect::<Vec<_>>());
        report.metric("sweep_monotone", results.windows(2).all(|w| {
            (w[1].penalty < w[0].penalty) == (w[1].residual < w[0].residual)
        }));
        let mut csv = String::from("penalty,residual,relative_residual,residual_l2,control_norm\n");
        for r in &results {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.penalty, r.residual, r.relative_residual, r.residual_l2, r.control_norm
            ));
        }
        report.plot("penalty_sweep.csv", csv.into_bytes());
        report.plot("control.csv", csv_bytes(|b| main.control.write_csv(b, 400))?);
        Ok(())
    }
}

struct GapSettings {
    speed: f64,
    cutoff: usize,
    horizon: f64,
    tail_from: i64,
}

impl GapSettings {
    fn read(p: &Params) -> Result<Self, CliError> {
        Ok(Self {
            speed: p.f64("c", 3.0)?,
            cutoff: p.usize_at_least("N", 50, 1)?,
            horizon: p.positive("T", 7.0)?,
            tail_from: p.usize("tail_from", 1)? as i64,
        })
    }

    fn run(&self, report: &mut ExperimentReport) -> srlw_core::Result<()> {
        let family = moving_frequencies(self.speed, self.cutoff, self.horizon)?;
        let g = gap(&family, self.tail_from);
        report.metric("delta_tail", g.delta_tail);
        report.metric("delta_combined", g.delta_combined);
        report.metric("K_used", g.k_used);
        report.metric("minimal_horizon", 2.0 * PI / g.delta_combined);
        report.metric("horizon_exceeds_minimal", self.horizon > 2.0 * PI / g.delta_combined);
        report.metric("gram_condition", hermitian_condition(&gram_matrix(&family)));
        report.metric("family_size", family.len());
        let mut csv = String::from("k,branch,frequency\n");
        for (label, f) in family.labels().iter().zip(family.freqs()) {
            csv.push_str(&format!("{},{},{}\n", label.k, label.branch.sign(), f));
        }
        report.plot("frequencies.csv", csv.into_bytes());
        Ok(())
    }
}
