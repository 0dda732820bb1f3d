use std::f64::consts::PI;

use gardner_core::evolve::traveling_speed;
use gardner_core::grid::smooth_cutoff;
use gardner_core::stability::track_phase;
use gardner_core::{
    conserved, free_propagate, ode_residuals, scale_down, scale_up, soliton_profile, xsb_norm,
    Equation, EvolveConfig, Field, Frame, GridSpec, Integrator, ScalingParams, SolitonParams,
    SpaceTimeField, sobolev_norm,
};

// 30-digit quadrature of the closed-form profile at sigma = 0.35, c0 = 0.23
const MEAN: f64 = 1.20133719689512686;
const MASS: f64 = 0.0591151334179775912;
const ENERGY: f64 = -0.0156032526078436724;

#[test]
fn soliton_functionals_match_high_precision_quadrature() {
    let p = SolitonParams::focusing(0.35, 0.23).unwrap();
    let g = GridSpec::new(4096, p.default_half_length()).unwrap();
    let c = conserved(&soliton_profile(&p, &g, 0.0), &Equation::gardner(0.35));
    assert!((c.mean - MEAN).abs() < 1e-12, "{}", c.mean);
    assert!((c.mass - MASS).abs() < 1e-13, "{}", c.mass);
    assert!((c.energy - ENERGY).abs() < 1e-13, "{}", c.energy);
}

#[test]
fn negative_sigma_defocusing_profile_solves_its_ode() {
    let p = SolitonParams::defocusing(-0.5, 0.5).unwrap();
    let g = GridSpec::new(2048, p.default_half_length()).unwrap();
    let res = ode_residuals(&p, &g);
    assert!(res.second_order < 1e-9 && res.first_integral < 1e-10, "{res:?}");
    assert!(p.peak() < 0.0);
}

#[test]
fn gardner_frame_phase_moves_at_c0() {
    let p = SolitonParams::focusing(0.35, 0.23).unwrap();
    let g = GridSpec::new(1024, p.default_half_length()).unwrap();
    let v0 = soliton_profile(&p, &g, 0.0);
    let eq = Equation::for_soliton(&p, Frame::Gardner);
    let mut it = Integrator::new(&v0, eq, &EvolveConfig::new(5e-3, 6.0)).unwrap();
    let trace = track_phase(&mut it, &p, Frame::Gardner, 0.5, 6.0).unwrap();
    assert_eq!(traveling_speed(&p, Frame::Gardner), 0.23);
    for s in &trace.samples {
        assert!((s.r + 0.23 * s.t).abs() < 1e-7, "{s:?}");
        assert!((s.r_prime + 0.23).abs() < 1e-7);
    }
}

#[test]
fn covariance_with_non_dyadic_scaling() {
    let p = SolitonParams::focusing(0.35, 0.23).unwrap();
    let g = GridSpec::new(512, p.default_half_length()).unwrap();
    let v0 = &soliton_profile(&p, &g, 0.0) + &Field::from_fn(g, |x| 0.03 * (-(x - 2.0).powi(2)).exp());
    let eq = Equation::gardner(0.35);
    let mut direct = Integrator::new(&v0, eq, &EvolveConfig::new(4e-3, 1.0)).unwrap();
    direct.run_steps(250).unwrap();

    let sp = ScalingParams::new(1.37, 2.6).unwrap();
    let w0 = scale_down(&v0, &sp).unwrap();
    let cfg = EvolveConfig::new(sp.scaled_time(4e-3), sp.scaled_time(1.0));
    let mut scaled = Integrator::new(&w0, eq.rescaled(&sp), &cfg).unwrap();
    scaled.run_steps(250).unwrap();
    let back = scale_up(&scaled.field(), &sp).unwrap();
    let err = (&back - &direct.field()).l2_norm();
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn wrong_time_factor_breaks_covariance() {
    let p = SolitonParams::focusing(0.35, 0.23).unwrap();
    let g = GridSpec::new(512, p.default_half_length()).unwrap();
    let v0 = soliton_profile(&p, &g, 0.0);
    let eq = Equation::gardner(0.35);
    let mut direct = Integrator::new(&v0, eq, &EvolveConfig::new(4e-3, 1.0)).unwrap();
    direct.run_steps(250).unwrap();
    let sp = ScalingParams::new(2.0, 3.0).unwrap();
    let w0 = scale_down(&v0, &sp).unwrap();
    // lambda^2 instead of lambda^3
    let mut scaled = Integrator::new(&w0, eq.rescaled(&sp), &EvolveConfig::new(4.0 * 4e-3, 4.0)).unwrap();
    scaled.run_steps(250).unwrap();
    let back = scale_up(&scaled.field(), &sp).unwrap();
    assert!((&back - &direct.field()).l2_norm() > 1e-3);
}

fn naive_time_sobolev(values: &[f64], t_half: f64, b: f64) -> f64 {
    let nt = values.len();
    let dt = 2.0 * t_half / nt as f64;
    let mut total = 0.0;
    for m in 0..nt {
        let mode = if m < nt / 2 { m as f64 } else { m as f64 - nt as f64 };
        let tau = PI * mode / t_half;
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let arg = -2.0 * PI * (m * j) as f64 / nt as f64;
            re += v * arg.cos();
            im += v * arg.sin();
        }
        total += (1.0 + tau.abs()).powf(2.0 * b) * (re * re + im * im);
    }
    (total * dt / nt as f64).sqrt()
}

#[test]
fn free_wave_norm_factorises_when_the_curve_hits_the_grid() {
    // integer wavenumbers and integer frequencies: xi^3 lies on the frequency grid
    let g = GridSpec::new(32, PI).unwrap();
    let (nt, t_half) = (1024, PI);
    // |xi| <= 3 keeps xi^3 far from the temporal Nyquist frequency 512
    let data = Field::from_fn(g, |x| 0.4 + x.cos() + 0.5 * (2.0 * x).sin() - 0.2 * (3.0 * x).cos());
    let f = SpaceTimeField::from_rows(g, nt, t_half, |t| free_propagate(&data, t).scale(smooth_cutoff(t))).unwrap();
    let cutoff: Vec<f64> = (0..nt).map(|m| smooth_cutoff(-t_half + m as f64 * 2.0 * t_half / nt as f64)).collect();
    for (s, b) in [(0.5, 0.51), (1.0, 0.75), (0.3, -0.49)] {
        let expected = naive_time_sobolev(&cutoff, t_half, b) * sobolev_norm(&data, s);
        let got = xsb_norm(&f, s, b);
        assert!(((got - expected) / expected).abs() < 1e-11, "s={s} b={b}: {got} vs {expected}");
    }
}
