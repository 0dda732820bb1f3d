//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use gardner_core::evolve::{evolve, traveling_speed};
use gardner_core::stability::{
    d_second, PerturbationShape, StabilityExperiment, StabilityReport,
};
use gardner_core::xsb::{
    cutoff_scaling_fit, sample_bilinear_ratio, sample_trilinear_ratio, EnsembleKind, EnsembleSpec,
};
use gardner_core::{
    build_linearized_operator, local_time_estimate, ode_residuals, scale_down, scale_up,
    soliton_profile, spectral_derivative, Equation, EvolveConfig, Field, Frame, GridSpec,
    Integrator, ScalingParams, SolitonParams,
};

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    checks: Vec<Check>,
    elapsed: Duration,
}

fn figure_params() -> SolitonParams {
    SolitonParams::focusing(0.35, 0.23).unwrap()
}

fn fine_grid(p: &SolitonParams) -> GridSpec {
    GridSpec::new(4096, p.default_half_length()).unwrap()
}

fn soliton_exactness() -> Vec<Check> {
    let p = figure_params();
    let g = fine_grid(&p);
    let res = ode_residuals(&p, &g);
    let peak = p.profile_at(0.0);
    let sech = SolitonParams::focusing(0.0, 0.23).unwrap();
    let k = 0.23f64.sqrt();
    let sech_err = g
        .points()
        .iter()
        .map(|&x| ((sech.profile_at(x) - k / (k * x).cosh()) / (k / (k * x).cosh())).abs())
        .fold(0.0, f64::max);
    vec![
        Check::new(
            "second-order residual <= 1e-9",
            res.second_order <= 1e-9,
            format!("{:.3e}", res.second_order),
        ),
        Check::new(
            "first-integral residual <= 1e-9",
            res.first_integral <= 1e-9,
            format!("{:.3e}", res.first_integral),
        ),
        Check::new("peak 0.148528 +- 1e-6", (peak - 0.148528).abs() <= 1e-6, format!("{peak:.9}")),
        Check::new("sigma = 0 is sqrt(c0) sech", sech_err <= 1e-15, format!("max rel err {sech_err:.1e}")),
    ]
}

fn propagation_error(dt: f64) -> f64 {
    let p = figure_params();
    let g = fine_grid(&p);
    let v0 = soliton_profile(&p, &g, 0.0);
    let eq = Equation::for_soliton(&p, Frame::Background);
    let mut it = Integrator::new(&v0, eq, &EvolveConfig::new(dt, 10.0)).unwrap();
    it.advance_to(10.0).unwrap();
    let exact = soliton_profile(&p, &g, traveling_speed(&p, Frame::Background) * 10.0);
    (&it.field() - &exact).l2_norm()
}

fn traveling_wave() -> Vec<Check> {
    let p = figure_params();
    let speed = traveling_speed(&p, Frame::Background);
    let err = propagation_error(1e-3);
    vec![
        Check::new("speed 0.965", (speed - 0.965).abs() < 1e-15, format!("{speed}")),
        Check::new("L2 error at t = 10 <= 1e-6", err <= 1e-6, format!("{err:.3e}")),
    ]
}

fn conservation() -> Vec<Check> {
    let p = figure_params();
    let g = GridSpec::new(2048, p.default_half_length()).unwrap();
    let bump = Field::from_fn(g, |x| 0.01 * (-(x - 4.0).powi(2) / 2.0).exp());
    let v0 = &soliton_profile(&p, &g, 0.0) + &bump;
    let eq = Equation::for_soliton(&p, Frame::Background);
    let mut cfg = EvolveConfig::new(5e-3, 50.0);
    cfg.log_every = 200;
    let (_, log) = evolve(&v0, &eq, &cfg).map_err(|(e, _)| e).unwrap();
    let reference = log[0].conserved;
    let mut worst = [0.0f64; 3];
    for entry in &log {
        for (w, d) in worst.iter_mut().zip(entry.conserved.relative_drift(&reference)) {
            *w = w.max(d);
        }
    }
    ["mean", "mass", "energy"]
        .iter()
        .zip(worst)
        .map(|(name, w)| Check::new(format!("{name} drift <= 1e-8"), w <= 1e-8, format!("{w:.3e}")))
        .collect()
}

fn convexity() -> Vec<Check> {
    let p = figure_params();
    let d = d_second(&p, 1e-4 * p.c0()).unwrap();
    let mut checks = vec![
        Check::new(
            "d'' second difference within 1e-4 of closed form",
            d.abs_err() <= 1e-4,
            format!("{:.9} vs {:.9}", d.second_difference, d.closed_form),
        ),
        Check::new(
            "d'' quadrature within 1e-4 of closed form",
            (d.quadrature - d.closed_form).abs() <= 1e-4,
            format!("{:.9}", d.quadrature),
        ),
    ];
    let mut min = f64::INFINITY;
    for i in 0..=16 {
        let c0 = 10f64.powf(-2.0 + 0.25 * i as f64);
        let q = SolitonParams::focusing(0.35, c0).unwrap();
        min = min.min(d_second(&q, 1e-4 * c0).unwrap().second_difference);
    }
    checks.push(Check::new("d'' > 0 on c0 in [1e-2, 1e2]", min > 0.0, format!("min {min:.3e}")));
    checks
}

fn linearized_operator() -> Vec<Check> {
    let p = figure_params();
    let g = fine_grid(&p);
    let op = build_linearized_operator(&p, &g);
    let dphi = spectral_derivative(&soliton_profile(&p, &g, 0.0), 1).unwrap();
    let ratio = op.apply(&dphi).l2_norm() / dphi.l2_norm();
    let coarse = GridSpec::new(1024, p.default_half_length()).unwrap();
    let eig = build_linearized_operator(&p, &coarse).eigenvalues().unwrap();
    vec![
        Check::new("|L phi'| / |phi'| <= 1e-8", ratio <= 1e-8, format!("{ratio:.3e}")),
        Check::new(
            "lowest eigenvalue < 0",
            eig[0] < 0.0,
            format!("{:.6e} (next {:.3e}, {:.3e})", eig[0], eig[1], eig[2]),
        ),
    ]
}

fn stability_run(p: SolitonParams, shape: PerturbationShape, delta: f64) -> StabilityReport {
    let exp = StabilityExperiment {
        params: p,
        frame: Frame::Background,
        grid: GridSpec::new(2048, p.default_half_length()).unwrap(),
        shape,
        delta,
        seed: 2024,
        dt: 5e-3,
        t_end: 50.0,
        sample_dt: 0.1,
        k_bound: 50.0,
    };
    exp.run().unwrap().report
}

fn orbital_stability() -> Vec<Check> {
    let mut checks = Vec::new();
    let branches = [
        ("focusing", figure_params(), 0.965),
        ("defocusing", SolitonParams::defocusing(0.5, 0.5).unwrap(), -1.0),
    ];
    for (label, p, expected_speed) in branches {
        let jobs: Vec<(PerturbationShape, f64)> = PerturbationShape::ALL
            .iter()
            .flat_map(|&s| [(s, 1e-3), (s, 1e-2)])
            .collect();
        let reports: Vec<StabilityReport> =
            jobs.par_iter().map(|&(shape, delta)| stability_run(p, shape, delta)).collect();
        checks.push(Check::new(
            format!("{label}: tracked speed {expected_speed}"),
            (reports[0].speed - expected_speed).abs() < 1e-14,
            format!("{}", reports[0].speed),
        ));
        for pair in reports.chunks(2) {
            let (small, large) = (&pair[0], &pair[1]);
            let name = format!("{label}/{}", small.shape.name());
            for r in pair {
                checks.push(Check::new(
                    format!("{name} delta={:.0e}: no lost root, eps <= 50 delta, |r'+c| <= 50 delta", r.delta),
                    r.failure.is_none() && r.epsilon_observed.is_finite() && r.pass,
                    format!(
                        "eps {:.3e} (K {:.2}), speed dev {:.3e} (K {:.2})",
                        r.epsilon_observed, r.measured_k, r.speed_deviation, r.measured_k_speed
                    ),
                ));
            }
            checks.push(Check::new(
                format!("{name}: eps monotone in delta"),
                small.epsilon_observed <= large.epsilon_observed,
                format!("{:.3e} <= {:.3e}", small.epsilon_observed, large.epsilon_observed),
            ));
        }
    }
    checks
}

fn scaling_covariance() -> Vec<Check> {
    let p = figure_params();
    let g = GridSpec::new(1024, p.default_half_length()).unwrap();
    let bump = Field::from_fn(g, |x| 0.02 * (-(x + 3.0).powi(2)).exp());
    let v0 = &soliton_profile(&p, &g, 0.0) + &bump;
    let eq = Equation::gardner(p.sigma());
    let (t_end, dt) = (2.0, 2e-3);
    let (direct, _) = evolve(&v0, &eq, &EvolveConfig::new(dt, t_end)).map_err(|(e, _)| e).unwrap();

    let sp = ScalingParams::new(2.0, 3.0).unwrap();
    let w0 = scale_down(&v0, &sp).unwrap();
    let cfg = EvolveConfig::new(sp.scaled_time(dt), sp.scaled_time(t_end));
    let (w, _) = evolve(&w0, &eq.rescaled(&sp), &cfg).map_err(|(e, _)| e).unwrap();
    let back = scale_up(&w, &sp).unwrap();
    let err = (&back - &direct).l2_norm();
    vec![Check::new("round trip vs direct, L2 <= 1e-6", err <= 1e-6, format!("{err:.3e}"))]
}

fn local_time() -> Vec<Check> {
    let at_one = local_time_estimate(1.0, 1.0, 1.0, 3.0).unwrap().time;
    let norms: Vec<f64> = (0..=40).map(|i| 10f64.powf(-4.0 + 0.2 * i as f64)).collect();
    let times: Vec<f64> =
        norms.iter().map(|&n| local_time_estimate(n, 1.0, 1.0, 3.0).unwrap().time).collect();
    let decreasing = times.windows(2).all(|w| w[1] < w[0]);
    let tiny = local_time_estimate(1e-12, 1.0, 1.0, 3.0).unwrap().time;
    let zero = local_time_estimate(0.0, 1.0, 1.0, 3.0).unwrap().time;
    vec![
        Check::new("T(1) = 0.015625", (at_one - 0.015625).abs() <= 1e-15, format!("{at_one}")),
        Check::new("T strictly decreasing in |v0|", decreasing, format!("{} norms", norms.len())),
        Check::new(
            "T -> infinity as |v0| -> 0",
            tiny > 1e6 && zero.is_infinite(),
            format!("T(1e-12) = {tiny:.3e}, T(0) = {zero}"),
        ),
    ]
}

fn xsb_sampler() -> Vec<Check> {
    let mut checks = Vec::new();
    for kind in EnsembleKind::ALL {
        let spec = EnsembleSpec::new(kind, 99, 0.5);
        let a = sample_trilinear_ratio(&spec).unwrap();
        let b = sample_trilinear_ratio(&spec).unwrap();
        let scaled = sample_trilinear_ratio(&EnsembleSpec { amplitude: 7.0, ..spec }).unwrap();
        let homog = a
            .ratios
            .iter()
            .zip(&scaled.ratios)
            .map(|(x, y)| ((x - y) / x).abs())
            .fold(0.0, f64::max);
        let finite = a.ratios.iter().all(|r| r.is_finite());
        checks.push(Check::new(
            format!("{}: trilinear deterministic, finite", kind.name()),
            a == b && finite,
            format!("max {:.3e}, p95 {:.3e}", a.stats.max, a.stats.p95),
        ));
        checks.push(Check::new(
            format!("{}: trilinear homogeneity <= 1e-12", kind.name()),
            homog <= 1e-12,
            format!("{homog:.1e}"),
        ));
        let bl = sample_bilinear_ratio(&spec).unwrap();
        let bl2 = sample_bilinear_ratio(&spec).unwrap();
        let bls = sample_bilinear_ratio(&EnsembleSpec { amplitude: 7.0, ..spec }).unwrap();
        let homog = bl
            .l2
            .ratios
            .iter()
            .zip(&bls.l2.ratios)
            .chain(bl.derivative.ratios.iter().zip(&bls.derivative.ratios))
            .map(|(x, y)| ((x - y) / x).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("{}: bilinear deterministic, homogeneity <= 1e-12", kind.name()),
            bl == bl2 && homog <= 1e-12,
            format!("R_a max {:.3e}, R_b max {:.3e}, {homog:.1e}", bl.l2.stats.max, bl.derivative.stats.max),
        ));
    }
    let g = GridSpec::new(256, 8.0 * PI).unwrap();
    let v0 = Field::from_fn(g, |x| (-x * x / 8.0).exp() * (1.5 * x).cos());
    let fit = cutoff_scaling_fit(&v0, 256, 2.0, 0.5, 0.51, &[1.0, 0.5, 0.25]).unwrap();
    checks.push(Check::new(
        "cutoff scaling exponent within 0.1 of (1-2b)/2",
        (fit.exponent - fit.expected).abs() <= 0.1,
        format!("fitted {:.4}, expected {:.4}, ratios {:?}", fit.exponent, fit.expected, fit.ratios),
    ));
    checks
}

fn order_of_accuracy() -> Vec<Check> {
    let (coarse, fine) = (propagation_error(1e-2), propagation_error(5e-3));
    let ratio = coarse / fine;
    vec![Check::new(
        "error ratio for dt 1e-2 -> 5e-3 is 16 +- 3",
        (ratio - 16.0).abs() <= 3.0,
        format!("{coarse:.3e} / {fine:.3e} = {ratio:.3}"),
    )]
}

fn run(id: u32, title: &'static str, budget_secs: u64, f: fn() -> Vec<Check>) -> Criterion {
    let start = Instant::now();
    let checks = f();
    Criterion { id, title, budget: Duration::from_secs(budget_secs), checks, elapsed: start.elapsed() }
}

fn main() {
    let criteria = vec![
        run(1, "soliton exactness", 1, soliton_exactness),
        run(2, "traveling-wave propagation", 120, traveling_wave),
        run(3, "conservation", 600, conservation),
        run(4, "convexity", 60, convexity),
        run(5, "linearized operator", 30, linearized_operator),
        run(6, "orbital stability", 3600, orbital_stability),
        run(7, "scaling covariance", 300, scaling_covariance),
        run(8, "local-time arithmetic", 1, local_time),
        run(9, "X^{s,b} sampler", 600, xsb_sampler),
        run(10, "order of accuracy", 120, order_of_accuracy),
    ];
    let mut failed = 0;
    for c in &criteria {
        let in_budget = c.elapsed <= c.budget;
        let pass = in_budget && c.checks.iter().all(|k| k.pass);
        println!(
            "criterion {:>2} {:<28} {} ({:.2}s, budget {}s)",
            c.id,
            c.title,
            if pass { "PASS" } else { "FAIL" },
            c.elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        for k in &c.checks {
            println!("    [{}] {}: {}", if k.pass { "ok" } else { "FAIL" }, k.name, k.detail);
        }
        if !in_budget {
            println!("    [FAIL] runtime over budget");
        }
        if !pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
