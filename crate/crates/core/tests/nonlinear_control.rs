use srlw_core::moving::BumpProfile;
use srlw_core::nonlinear::{nonlinear_exact_control, ControlOperatorPhi, NonlinearOptions};
use srlw_core::{picard_solve, ForcingSignal, PicardOptions, SrlwError, TorusState, XsNorm, C64};

const SPEED: f64 = 3.0;
const HORIZON: f64 = 7.0;
const CUTOFF: usize = 8;

fn phi() -> ControlOperatorPhi {
    ControlOperatorPhi::new(BumpProfile::one_plus_cos(), SPEED, HORIZON, CUTOFF).unwrap()
}

/// `û_k ∝ (1+k²)^{-2}`, `v̂ = 0`, scaled to the given X^s norm.
fn decaying_target(norm: f64) -> TorusState {
    let st = TorusState::from_fn(CUTOFF, |k| C64::new((1.0 + (k * k) as f64).powi(-2), 0.0), |_| C64::new(0.0, 0.0));
    st.scaled(C64::new(norm / XsNorm::default().norm(&st), 0.0))
}

fn gains_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn gains_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn small_data_contracts_and_reaches_target() {
    let opts = NonlinearOptions { max_iter: 10, ..NonlinearOptions::default() };
    let ut = decaying_target(1e-3);
    let (h, rep) = nonlinear_exact_control(&TorusState::zeros(CUTOFF), &ut, &phi(), 1, &opts).unwrap();
    assert!(rep.iterations <= 10);
    assert!(rep.contraction_ratios.iter().all(|&r| r < 0.5), "{:?}", rep.contraction_ratios);
    assert!(rep.contraction_ratios.windows(2).all(|w| w[1] <= w[0]), "{:?}", rep.contraction_ratios);
    assert!(rep.relative_terminal_error < 1e-6, "{}", rep.relative_terminal_error);
    assert!(h.control_norm.is_finite() && h.control_norm > 0.0);
}

#[test]
fn nonzero_initial_state_is_steered() {
    let u0 = TorusState::from_fn(
        CUTOFF,
        |k| C64::new(0.0, 1e-4 * k as f64 / (1.0 + (k * k) as f64).powi(2)),
        |_| C64::new(0.0, 0.0),
    );
    let ut = decaying_target(0.6e-3);
    let (_, rep) = nonlinear_exact_control(&u0, &ut, &phi(), 2, &NonlinearOptions::default()).unwrap();
    assert!(rep.relative_terminal_error < 1e-6, "{}", rep.relative_terminal_error);
}

#[test]
fn free_nonlinear_evolution_needs_no_control() {
    let u0 = decaying_target(1e-3);
    let picard = PicardOptions { grid_points: phi().suggested_grid_points(), ..PicardOptions::default() };
    let free = picard_solve(&u0, &ForcingSignal::Zero, 1, HORIZON, &picard).unwrap();
    let ut = free.trajectory.final_state().clone();
    let (h, rep) = nonlinear_exact_control(&u0, &ut, &phi(), 1, &NonlinearOptions::default()).unwrap();
    let reference = phi().apply(&TorusState::zeros(CUTOFF), &ut).unwrap();
    assert!(gains_norm(&h.gains) < 1e-8 * gains_norm(&reference.gains), "{}", gains_norm(&h.gains));
    assert!(rep.relative_terminal_error < 1e-8);
}

#[test]
fn nonlinear_control_approaches_linear_control_for_small_data() {
    let phi = phi();
    let zero = TorusState::zeros(CUTOFF);
    let mut rel = Vec::new();
    for norm in [1e-4, 1e-3, 1e-2] {
        let ut = decaying_target(norm);
        let (h, _) = nonlinear_exact_control(&zero, &ut, &phi, 1, &NonlinearOptions::default()).unwrap();
        let lin = phi.apply(&zero, &ut).unwrap();
        rel.push(gains_distance(&h.gains, &lin.gains) / gains_norm(&lin.gains));
    }
    // first order in the data size for p = 1
    for w in rel.windows(2) {
        let slope = (w[1] / w[0]).log10();
        assert!((slope - 1.0).abs() < 0.1, "{rel:?}");
    }
}

#[test]
fn order_one_data_exhausts_iteration_budget() {
    let opts = NonlinearOptions { max_iter: 10, ..NonlinearOptions::default() };
    let ut = decaying_target(1.0);
    let r = nonlinear_exact_control(&TorusState::zeros(CUTOFF), &ut, &phi(), 1, &opts);
    assert!(matches!(r, Err(SrlwError::NonConvergence { .. })), "{:?}", r.map(|x| x.1));
}

#[test]
fn contraction_degrades_with_data_size() {
    let opts = NonlinearOptions { max_iter: 40, ..NonlinearOptions::default() };
    let mut first_ratio = Vec::new();
    for norm in [1e-3, 1e-1, 3e-1] {
        let (_, rep) =
            nonlinear_exact_control(&TorusState::zeros(CUTOFF), &decaying_target(norm), &phi(), 1, &opts).unwrap();
        first_ratio.push(rep.contraction_ratios[0]);
    }
    assert!(first_ratio.windows(2).all(|w| w[1] > w[0]), "{first_ratio:?}");
}
