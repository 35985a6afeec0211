use srlw_core::moment::exp_integral;
use srlw_core::quadrature::composite_nodes;
use srlw_core::{
    biorthogonal, gap, moving_frequencies, rho, semigroup_apply, synthesize_point, verify_terminal_point,
    ExponentialFamily, GaussLegendre, SrlwError, TorusState, C64,
};

#[test]
fn duals_are_biorthogonal_by_quadrature() {
    let fam = moving_frequencies(3.0, 8, 7.0).unwrap();
    let duals = biorthogonal(&fam, 0.0).unwrap();
    assert!(duals.residual < 1e-8, "{}", duals.residual);
    let rule = GaussLegendre::new(16).unwrap();
    let nodes = composite_nodes(&rule, 0.0, 7.0, 64);
    let mut worst: f64 = 0.0;
    for m in 0..fam.len() {
        for (k, &mu) in fam.freqs().iter().enumerate() {
            let pairing: C64 = nodes.iter().map(|&(t, w)| duals.eval(m, t) * C64::from_polar(w, -mu * t)).sum();
            let target = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((pairing - target).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn dual_norms_match_quadrature() {
    let fam = moving_frequencies(3.0, 4, 7.0).unwrap();
    let duals = biorthogonal(&fam, 0.0).unwrap();
    let rule = GaussLegendre::new(16).unwrap();
    let nodes = composite_nodes(&rule, 0.0, 7.0, 32);
    for m in 0..fam.len() {
        let q: f64 = nodes.iter().map(|&(t, w)| w * duals.eval(m, t).norm_sqr()).sum();
        assert!((q - duals.dual_norm_sq(m)).abs() < 1e-10 * q);
    }
}

#[test]
fn regularization_trades_residual_for_norm() {
    let fam = moving_frequencies(3.0, 8, 7.0).unwrap();
    let mut residuals = Vec::new();
    let mut norms = Vec::new();
    for reg in [0.0, 1e-8, 1e-5, 1e-2] {
        let d = biorthogonal(&fam, reg).unwrap();
        residuals.push(d.residual);
        norms.push((0..fam.len()).map(|m| d.dual_norm_sq(m)).sum::<f64>());
    }
    assert!(residuals.windows(2).all(|w| w[1] >= w[0]), "{residuals:?}");
    assert!(norms.windows(2).all(|w| w[1] <= w[0]), "{norms:?}");
}

#[test]
fn nearly_coincident_frequencies_are_ill_conditioned() {
    let fam = ExponentialFamily::from_frequencies(&[0.0, 1e-7, 1.0], 1.0).unwrap();
    assert!(matches!(biorthogonal(&fam, 0.0), Err(SrlwError::IllConditioned { .. })));
    assert!(biorthogonal(&fam, 1e-6).is_ok());
}

#[test]
fn combined_gap_from_dispersion_relation() {
    let fam = moving_frequencies(3.0, 50, 20.0).unwrap();
    let mut freqs = vec![0.0];
    for k in 1..=50i64 {
        for s in [1.0, -1.0] {
            for kk in [k, -k] {
                freqs.push(3.0 * kk as f64 + s * rho(kk));
            }
        }
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let expected = freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let report = gap(&fam, 1);
    assert!((report.delta_combined - expected).abs() < 1e-12);
    assert!(report.delta_combined > 1.0 && report.delta_combined < 1.001);
    // same-branch neighbours differ by c ± (ρ(k+1) − ρ(k)); ρ increments shrink with k
    assert!((report.delta_tail - (3.0 - (rho(2) - rho(1)))).abs() < 1e-12);
}

#[test]
fn exponential_integral_small_argument() {
    let t = 7.0;
    for d in [1e-12, 1e-6, 0.3, -2.0] {
        let rule = GaussLegendre::new(20).unwrap();
        let re = rule.integrate(0.0, t, |s| (d * s).cos());
        let im = rule.integrate(0.0, t, |s| (d * s).sin());
        assert!((exp_integral(d, t) - C64::new(re, im)).norm() < 1e-13);
    }
}

fn point_target(cutoff: usize) -> TorusState {
    TorusState::from_fn(cutoff, |k| C64::new((1.0 + (k * k) as f64).powi(-2), 0.0), |_| C64::new(0.0, 0.0))
}

#[test]
fn point_control_reaches_target_from_rest() {
    let u0 = TorusState::zeros(6);
    let ut = point_target(6);
    let g = synthesize_point(&u0, &ut, 3.0, 7.0).unwrap();
    let relative = verify_terminal_point(&u0, &ut, &g, 12).unwrap();
    assert!(relative < 1e-6, "{relative}");
    // real data: real scalar control
    for t in [0.5, 3.3, 6.1] {
        assert!(g.eval(t).im.abs() < 1e-10 * (1.0 + g.eval(t).re.abs()));
    }
}

#[test]
fn point_control_is_linear_in_data() {
    let a = point_target(4);
    let b = TorusState::from_fn(4, |k| C64::new(0.0, 0.1 * k as f64), |k| C64::new(0.05 * k as f64, 0.0));
    let zero = TorusState::zeros(4);
    let ga = synthesize_point(&zero, &a, 3.0, 7.0).unwrap();
    let gb = synthesize_point(&zero, &b, 3.0, 7.0).unwrap();
    let gab = synthesize_point(&zero, &a.add(&b), 3.0, 7.0).unwrap();
    for t in [0.0, 1.7, 6.9] {
        assert!((gab.eval(t) - ga.eval(t) - gb.eval(t)).norm() < 1e-9 * (1.0 + gab.eval(t).norm()));
    }
}

#[test]
fn point_control_steers_between_states() {
    let u0 = TorusState::from_fn(5, |k| C64::new(0.0, 0.2 * k as f64 / (1 + k * k) as f64), |_| C64::new(0.0, 0.0));
    let ut = semigroup_apply(&point_target(5), 0.4);
    let g = synthesize_point(&u0, &ut, 3.0, 7.0).unwrap();
    assert!(verify_terminal_point(&u0, &ut, &g, 12).unwrap() < 1e-6);
}
