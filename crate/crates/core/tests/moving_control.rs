use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srlw_core::moving::{verify_terminal, BumpProfile, MovingSystem};
use srlw_core::{moment_rhs, semigroup_apply, TorusState, XsNorm, C64};

fn smooth_target(cutoff: usize, rng: &mut ChaCha8Rng) -> TorusState {
    let n = cutoff as i64;
    let mut st = TorusState::zeros(cutoff);
    for k in 0..=n {
        let decay = (-(k as f64) * 0.6).exp();
        let u = if k == 0 { C64::new(rng.gen_range(-1.0..1.0) * decay, 0.0) } else {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay
        };
        let v = if k == 0 { C64::new(0.0, 0.0) } else {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay
        };
        st.set(k, u, v);
        st.set(-k, u.conj(), v.conj());
    }
    st
}

#[test]
fn moving_control_reaches_smooth_target_from_rest() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sys = MovingSystem::new(3.0, 7.0, 8).unwrap();
    let bump = BumpProfile::one_plus_cos();
    let norm = XsNorm::default();
    let ut = smooth_target(8, &mut rng);
    let u0 = TorusState::zeros(8);
    let h = sys.synthesize(&u0, &ut, &bump, &norm).unwrap();
    let err = verify_terminal(&u0, &ut, &h, &bump, 12, &norm).unwrap();
    assert!(err < 1e-7, "terminal error {err}");
    // real-valued data gives a real control
    let v = h.eval(1.1, 2.3);
    assert!(v.im.abs() < 1e-9 * (1.0 + v.re.abs()), "{v}");
}

#[test]
fn moving_control_from_nonzero_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sys = MovingSystem::new(3.0, 7.0, 6).unwrap();
    let bump = BumpProfile::one_plus_cos();
    let norm = XsNorm::default();
    let mut u0 = smooth_target(6, &mut rng);
    let ut = smooth_target(6, &mut rng);
    u0.set(0, u0.u_at(0), ut.v_at(0));
    let h = sys.synthesize(&u0, &ut, &bump, &norm).unwrap();
    let err = verify_terminal(&u0, &ut, &h, &bump, 12, &norm).unwrap();
    assert!(err < 1e-7, "terminal error {err}");
}

#[test]
fn control_cost_is_stable_across_random_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sys = MovingSystem::new(3.0, 7.0, 8).unwrap();
    let bump = BumpProfile::one_plus_cos();
    let norm = XsNorm::default();
    let u0 = TorusState::zeros(8);
    let ratios: Vec<f64> = (0..20)
        .map(|_| {
            let ut = smooth_target(8, &mut rng);
            sys.synthesize(&u0, &ut, &bump, &norm).unwrap().control_norm / norm.norm(&ut)
        })
        .collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn free_evolution_target_has_zero_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u0 = smooth_target(8, &mut rng);
    let ut = semigroup_apply(&u0, 7.0);
    let a = moment_rhs(&u0, 0.0);
    let b = moment_rhs(&ut, 7.0);
    for ((la, ma), (lb, mb)) in a.iter().zip(&b) {
        assert_eq!(la, lb);
        assert!((ma - mb).norm() < 1e-12 * (1.0 + ma.norm()), "{la:?}");
    }
}
