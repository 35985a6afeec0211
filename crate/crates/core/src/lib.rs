//! Spectral tools for the regularized long-wave system on the torus and on
//! an interval: linear and nonlinear evolution, non-harmonic moment problems,
//! moving and point controls, and a bounded-domain boundary control model.

pub mod bounded;
pub mod error;
pub mod ivp;
pub mod moment;
pub mod moving;
pub mod nonlinear;
pub mod point;
pub mod precise;
pub mod quadrature;
pub mod spectral;

pub use error::{Result, SrlwError};
pub use ivp::{
    picard_solve, rk4_oracle, solve_linear_forced, uniform_times, ForcingSignal, ModalSamples, MovingForcing,
    PicardOptions, PicardOutcome, PointForcing, TrajectorySample,
};
pub use moment::{
    biorthogonal, conditioning_record, gap, gram_matrix, moving_frequencies, verify_biorthogonality,
    BiorthogonalFamily, Branch, ConditioningRecord, ExponentialFamily, FrequencyLabel, GapReport,
};
pub use moving::{
    moment_rhs, moving_forcing_modes, synthesize_moving, verify_terminal, BumpProfile, MovingControl,
    MovingControlExport, MovingSystem,
};
pub use quadrature::{ChebyshevGrid, GaussLegendre};
pub use spectral::{
    apply_a, mode_propagator, nonlinearity_g, rho, semigroup_apply, sobolev_norm, truncated_power, SobolevIndex,
    TorusState, XsNorm, C64,
};
pub use nonlinear::{
    nonlinear_exact_control, psi_map, w_integral, ControlOperatorPhi, FixedPointReport, NonlinearOptions, PsiGrid,
};
pub use point::{dirac_forcing_modes, synthesize_point, verify_terminal_point, PointControl, PointControlExport};
pub use bounded::{
    approx_control_lsq, eigenpairs, energy, evolve_homogeneous, interval_eigenvalue, lifting_solve,
    moment_rhs_bounded, null_control_moments, penalty_sweep, spectral_controllability_probe, ApproxControlOptions,
    ApproxControlResult, BoundaryControl, BoundedState, BoundedTrajectory, ControlBasis, IntervalEigenpair,
    ProbeCurve, ProbePoint, SweepPoint,
};
