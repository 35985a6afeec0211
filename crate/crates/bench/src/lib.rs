//! Benchmark fixtures shared by the criterion targets in `benches/`.

use srlw_core::{BoundedState, TorusState, XsNorm, C64};

/// Smooth real torus state with `û_k ∝ (1+k²)^{-1}` and unit `X^1` norm.
pub fn smooth_state(cutoff: usize) -> TorusState {
    let st = TorusState::from_fn(
        cutoff,
        |k| C64::new(1.0 / (1.0 + (k * k) as f64), 0.0),
        |k| C64::new(0.0, 0.3 * k as f64 / (1.0 + (k * k) as f64)),
    );
    let n = XsNorm::default().norm(&st);
    st.scaled(C64::new(1.0 / n, 0.0))
}

/// Real bounded state with two excited modes.
pub fn two_mode_target() -> BoundedState {
    BoundedState::real_from_positive(0.0, &[C64::new(0.5, 0.0), C64::new(0.0, 0.25)])
}
