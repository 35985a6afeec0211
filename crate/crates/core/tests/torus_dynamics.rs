use std::f64::consts::PI;

use proptest::prelude::*;
use srlw_core::{
    apply_a, mode_propagator, nonlinearity_g, rk4_oracle, semigroup_apply, solve_linear_forced, uniform_times,
    ForcingSignal, MovingForcing, PointForcing, TorusState, C64,
};

fn mode_energy(st: &TorusState, k: i64) -> f64 {
    (1.0 + (k * k) as f64) * st.u_at(k).norm_sqr() + st.v_at(k).norm_sqr()
}

fn coeff() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn real_state(cutoff: usize) -> impl Strategy<Value = TorusState> {
    (proptest::collection::vec((coeff(), coeff()), cutoff + 1)).prop_map(move |modes| {
        let mut st = TorusState::zeros(cutoff);
        for (k, (u, v)) in modes.into_iter().enumerate() {
            let k = k as i64;
            if k == 0 {
                st.set(0, C64::new(u.re, 0.0), C64::new(v.re, 0.0));
            } else {
                st.set(k, u, v);
                st.set(-k, u.conj(), v.conj());
            }
        }
        st
    })
}

fn complex_state(cutoff: usize) -> impl Strategy<Value = TorusState> {
    let len = 2 * cutoff + 1;
    (proptest::collection::vec(coeff(), len), proptest::collection::vec(coeff(), len))
        .prop_map(move |(u, v)| TorusState::from_coeffs(cutoff, u, v).unwrap())
}

fn max_diff(a: &TorusState, b: &TorusState) -> f64 {
    a.u().iter().zip(b.u()).chain(a.v().iter().zip(b.v())).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn group_law(st in complex_state(16), t in -20.0f64..20.0, s in -20.0f64..20.0) {
        let lhs = semigroup_apply(&semigroup_apply(&st, s), t);
        let rhs = semigroup_apply(&st, t + s);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn per_mode_energy_is_conserved(st in complex_state(64), t in -50.0f64..50.0) {
        let out = semigroup_apply(&st, t);
        for k in st.wavenumbers() {
            let e0 = mode_energy(&st, k);
            prop_assert!((mode_energy(&out, k) - e0).abs() <= 1e-12 * e0.max(1.0));
        }
    }

    #[test]
    fn real_states_stay_real(st in real_state(12), t in -10.0f64..10.0) {
        prop_assert!(semigroup_apply(&st, t).conjugate_symmetry_defect() < 1e-13);
    }

    #[test]
    fn semigroup_is_linear(a in complex_state(6), b in complex_state(6), alpha in coeff(), t in -5.0f64..5.0) {
        let mut combo = a.clone();
        combo.axpy(alpha, &b);
        let lhs = semigroup_apply(&combo, t);
        let mut rhs = semigroup_apply(&a, t);
        rhs.axpy(alpha, &semigroup_apply(&b, t));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn propagator_derivative_is_generator(k in -40i64..40, t in -8.0f64..8.0) {
        // d/dt exp(A_k t) at t, by a centred difference, equals A_k exp(A_k t)
        let h = 1e-5;
        let (p, m, e) = (mode_propagator(k, t + h), mode_propagator(k, t - h), mode_propagator(k, t));
        let kf = k as f64;
        let a = [[C64::new(0.0, 0.0), C64::new(0.0, kf / (1.0 + kf * kf))], [C64::new(0.0, kf), C64::new(0.0, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                let fd = (p[i][j] - m[i][j]) / (2.0 * h);
                let exact = a[i][0] * e[0][j] + a[i][1] * e[1][j];
                prop_assert!((fd - exact).norm() < 1e-8);
            }
        }
    }
}

#[test]
fn generator_matches_propagator_at_small_time() {
    let st = TorusState::from_fn(5, |k| C64::new(1.0 / (1 + k * k) as f64, 0.3), |k| C64::new(0.1 * k as f64, 1.0));
    let h = 1e-6;
    let fd = semigroup_apply(&st, h).sub(&semigroup_apply(&st, -h)).scaled(C64::new(0.5 / h, 0.0));
    assert!(max_diff(&fd, &apply_a(&st)) < 1e-8);
}

/// Forward DFT on `m` equispaced points: `(1/m) Σ f(x_j) e^{-ikx_j}`.
fn dft(values: &[C64], k: i64) -> C64 {
    let m = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(j, v)| v * C64::from_polar(1.0, -(k as f64) * 2.0 * PI * j as f64 / m))
        .sum::<C64>()
        / m
}

#[test]
fn nonlinearity_matches_physical_space_product() {
    let st = TorusState::from_fn(
        6,
        |k| C64::from_polar(0.7 / (1.0 + (k * k) as f64), 0.4 * k as f64),
        |k| C64::new(0.0, 0.2 * k as f64),
    );
    for p in [1u32, 2, 3] {
        let g = nonlinearity_g(&st, p).unwrap();
        let m = 128;
        let samples: Vec<C64> = (0..m)
            .map(|j| {
                let u = st.eval(2.0 * PI * j as f64 / m as f64).0;
                u.powu(p + 1) / (p as f64 + 1.0)
            })
            .collect();
        for k in st.wavenumbers() {
            let kf = k as f64;
            let expected = dft(&samples, k) * C64::new(0.0, kf / (1.0 + kf * kf));
            assert!((g.u_at(k) - expected).norm() < 1e-13, "p={p} k={k}");
            assert_eq!(g.v_at(k), C64::new(0.0, 0.0));
        }
    }
}

#[test]
fn moving_forcing_matches_grid_product() {
    let bump = vec![C64::new(0.25, 0.0), C64::new(0.5, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.25, 0.0)];
    let amplitudes: Vec<Vec<C64>> =
        (-3..=3).map(|m| vec![C64::new(0.3 * m as f64, 0.1), C64::new(0.2, -0.05 * m as f64)]).collect();
    let mf = MovingForcing { speed: 3.0, bump: bump.clone(), frequencies: vec![0.7, -2.1], amplitudes };
    let signal = ForcingSignal::MovingDistributed(mf.clone());
    let grid = 64;
    for &t in &[0.0, 0.9, 4.3] {
        let hm = mf.profile_modes(t);
        let samples: Vec<C64> = (0..grid)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / grid as f64;
                let y = x + 3.0 * t;
                let b: C64 = (-2..=2).map(|n| bump[(n + 2) as usize] * C64::from_polar(1.0, n as f64 * y)).sum();
                let h: C64 = (-3..=3).map(|m| hm[(m + 3) as usize] * C64::from_polar(1.0, m as f64 * y)).sum();
                b * h
            })
            .collect();
        let modes = signal.eval(t, 8);
        for k in -8..=8i64 {
            assert!((modes[(k + 8) as usize] - dft(&samples, k)).norm() < 1e-13, "t={t} k={k}");
        }
    }
}

#[test]
fn point_forcing_is_delta_spectrum() {
    let pf = PointForcing { speed: 3.0, frequencies: vec![1.3], amplitudes: vec![C64::new(0.0, 2.0)] };
    let t = 0.8;
    let g = pf.signal(t);
    let modes = ForcingSignal::MovingPoint(pf).eval(t, 5);
    for k in -5..=5i64 {
        let expected = g * C64::from_polar(1.0, 3.0 * k as f64 * t) / (2.0 * PI);
        assert!((modes[(k + 5) as usize] - expected).norm() < 1e-15);
    }
}

#[test]
fn forced_linear_solution_matches_runge_kutta() {
    let st = TorusState::from_fn(8, |k| C64::new(1.0 / (1 + k * k) as f64, 0.0), |k| C64::new(0.0, 0.1 * k as f64));
    let mf = MovingForcing {
        speed: 3.0,
        bump: vec![C64::new(0.5, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0)],
        frequencies: vec![0.9, -1.7],
        amplitudes: (-4..=4).map(|m| vec![C64::new(0.2, 0.1 * m as f64), C64::new(-0.1 * m as f64, 0.3)]).collect(),
    };
    let forcing = ForcingSignal::MovingDistributed(mf);
    let horizon = 2.0;
    let exact = solve_linear_forced(&st, &forcing, &uniform_times(horizon, 4), 16).unwrap();
    let rk = rk4_oracle(&st, &forcing, 0, horizon, 1e-3).unwrap();
    let d = max_diff(exact.final_state(), rk.final_state());
    let scale = exact.final_state().u().iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(d / scale < 1e-9, "{}", d / scale);
}
