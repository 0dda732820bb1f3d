use std::f64::consts::PI;

use anyhow::{bail, Result};
use rayon::prelude::*;

use gardner_core::evolve::traveling_speed;
use gardner_core::stability::{d_second, perturbation, PerturbationShape, StabilityExperiment};
use gardner_core::xsb::{
    cutoff_scaling_fit, sample_bilinear_ratio, sample_trilinear_ratio, EnsembleKind, EnsembleSpec,
    RatioSet,
};
use gardner_core::{
    build_linearized_operator, local_time_estimate, ode_residuals, scale_down, scale_up,
    soliton_profile, spectral_derivative, Branch, Equation, Error, EvolveConfig, Field, Frame,
    GridSpec, Integrator, ScalingParams, SolitonParams,
};

use crate::config::Config;
use crate::output::{field_csv, num, Csv, OutDir, Report};

/// Result of a subcommand whose inputs were valid.
#[derive(Debug)]
pub enum Status {
    Success,
    /// The run stopped early; outputs up to the failure were written.
    Failed(Error),
}

fn soliton(cfg: &mut Config) -> Result<(SolitonParams, Frame)> {
    let sigma = cfg.get("sigma", 0.35)?;
    let c0 = cfg.get("c0", 0.23)?;
    let branch: Branch = cfg.get("branch", Branch::Focusing)?;
    let frame: Frame = cfg.get::<String>("frame", "background".into())?.parse()?;
    Ok((SolitonParams::new(sigma, c0, branch)?, frame))
}

fn grid(cfg: &mut Config, p: &SolitonParams, default_n: usize) -> Result<GridSpec> {
    let n = cfg.get("grid.n", default_n)?;
    let l = cfg.get("grid.L", p.default_half_length())?;
    Ok(GridSpec::new(n, l)?)
}

/// `s * phi` plus the configured perturbation (none by default).
fn initial_data(cfg: &mut Config, p: &SolitonParams, grid: &GridSpec, seed: u64) -> Result<Field> {
    let base = soliton_profile(p, grid, 0.0).scale(p.branch().sign());
    let shape = cfg.get::<String>("perturbation.shape", "none".into())?;
    let delta = cfg.get("perturbation.delta", 0.0)?;
    if shape == "none" {
        if delta != 0.0 {
            bail!("perturbation.delta set without perturbation.shape");
        }
        return Ok(base);
    }
    let shape: PerturbationShape = shape.parse()?;
    Ok(&base + &perturbation(shape, p, grid, delta, seed)?)
}

fn finish_report(report: &mut Report, cfg: &Config, out: &OutDir, failure: Option<&Error>) -> Result<()> {
    report.embed_config(cfg.resolved());
    match failure {
        Some(e) => {
            report.put("status", "failed");
            report.put("failure", e.to_string());
        }
        None => report.put("status", "ok"),
    }
    report.write(&out.file("report.json"))
}

pub fn soliton_check(cfg: &mut Config, out: &OutDir) -> Result<Status> {
    let (p, frame) = soliton(cfg)?;
    let g = grid(cfg, &p, 4096)?;
    let eigen_n = cfg.get("eigen.n", 512usize)?;
    cfg.finish()?;

    let phi = soliton_profile(&p, &g, 0.0);
    let res = ode_residuals(&p, &g);
    let op = build_linearized_operator(&p, &g);
    let dphi = spectral_derivative(&phi, 1)?;
    let kernel_ratio = op.apply(&dphi).l2_norm() / dphi.l2_norm();
    let eig_grid = GridSpec::new(eigen_n, g.half_length())?;
    let eigenvalues = build_linearized_operator(&p, &eig_grid).eigenvalues()?;

    field_csv(&phi).write(&out.file("profile.csv"))?;
    let mut spectrum = Csv::new(&["index", "eigenvalue"]);
    for (i, e) in eigenvalues.iter().enumerate() {
        spectrum.row(&[i.to_string(), num(*e)]);
    }
    spectrum.write(&out.file("spectrum.csv"))?;

    let mut report = Report::new("soliton-check");
    report.put_f64("peak", p.peak());
    report.put_f64("residual_second_order", res.second_order);
    report.put_f64("residual_first_integral", res.first_integral);
    report.put_f64("kernel_ratio", kernel_ratio);
    report.put_f64("lowest_eigenvalue", eigenvalues[0]);
    report.put("negative_eigenvalues", eigenvalues.iter().filter(|&&e| e < 0.0).count());
    report.put_f64("speed", traveling_speed(&p, frame));
    finish_report(&mut report, cfg, out, None)?;
    Ok(Status::Success)
}

pub fn evolve(cfg: &mut Config, out: &OutDir, seed: u64) -> Result<Status> {
    let (p, frame) = soliton(cfg)?;
    let g = grid(cfg, &p, 2048)?;
    let mut ecfg = EvolveConfig::new(cfg.get("dt", 1e-3)?, cfg.get("t_end", 10.0)?);
    ecfg.dealias = cfg.get("dealias", true)?;
    ecfg.log_every = cfg.get("log_every", 100usize)?;
    let snapshots: Vec<f64> = cfg.list("snapshots", "")?;
    let v0 = initial_data(cfg, &p, &g, seed)?;
    cfg.finish()?;

    let eq = Equation::for_soliton(&p, frame);
    let speed = traveling_speed(&p, frame);
    let s = p.branch().sign();
    let mut it = Integrator::new(&v0, eq, &ecfg)?;
    let total = ecfg.steps();
    let dt = ecfg.dt.abs();
    let snapshot_steps: Vec<u64> = snapshots.iter().map(|t| (t / dt).round() as u64).collect();
    if let Some(t) = snapshots.iter().find(|&&t| !(t >= 0.0 && (t / dt).round() as u64 <= total)) {
        bail!("snapshot time {t} outside [0, t_end]");
    }

    let mut log = Csv::new(&["t", "mean", "mass", "energy", "l2_error_vs_oracle"]);
    let reference = it.conserved();
    let mut worst_drift = [0.0f64; 3];
    let mut failure = None;
    let mut written = 0;
    let mut step = 0u64;
    loop {
        if step % ecfg.log_every as u64 == 0 || step == total {
            let t = it.time();
            let c = it.conserved();
            let oracle = soliton_profile(&p, &g, speed * t).scale(s);
            let err = (&it.field() - &oracle).l2_norm();
            log.row(&[num(t), num(c.mean), num(c.mass), num(c.energy), num(err)]);
            for (w, d) in worst_drift.iter_mut().zip(c.relative_drift(&reference)) {
                *w = w.max(d);
            }
        }
        for (i, _) in snapshot_steps.iter().enumerate().filter(|(_, &k)| k == step) {
            field_csv(&it.field()).write(&out.file(&format!("snapshot_{i:03}.csv")))?;
            written += 1;
        }
        if step == total {
            break;
        }
        if let Err(e) = it.step() {
            failure = Some(e);
            break;
        }
        step += 1;
    }
    log.write(&out.file("run_log.csv"))?;
    field_csv(&it.field()).write(&out.file("final.csv"))?;

    let mut report = Report::new("evolve");
    report.put_f64("t_reached", it.time());
    report.put("steps", it.steps_taken());
    report.put_f64("speed", speed);
    report.put_f64("max_drift_mean", worst_drift[0]);
    report.put_f64("max_drift_mass", worst_drift[1]);
    report.put_f64("max_drift_energy", worst_drift[2]);
    report.put("snapshots_written", written);
    finish_report(&mut report, cfg, out, failure.as_ref())?;
    Ok(failure.map_or(Status::Success, Status::Failed))
}

pub fn stability(cfg: &mut Config, out: &OutDir, seed: u64) -> Result<Status> {
    let (p, frame) = soliton(cfg)?;
    let g = grid(cfg, &p, 2048)?;
    let shape: PerturbationShape = cfg.get::<String>("perturbation.shape", "bump".into())?.parse()?;
    let exp = StabilityExperiment {
        params: p,
        frame,
        grid: g,
        shape,
        delta: cfg.get("perturbation.delta", 1e-3)?,
        seed,
        dt: cfg.get("dt", 5e-3)?,
        t_end: cfg.get("t_end", 50.0)?,
        sample_dt: cfg.get("track.sample_dt", 0.1)?,
        k_bound: cfg.get("stability.k", 50.0)?,
    };
    cfg.finish()?;
    let outcome = exp.run()?;

    let mut trace = Csv::new(&["t", "r", "r_prime", "h1_distance", "mean", "mass", "energy"]);
    for s in &outcome.trace.samples {
        trace.row(&[
            num(s.t),
            num(s.r),
            num(s.r_prime),
            num(s.h1_distance),
            num(s.conserved.mean),
            num(s.conserved.mass),
            num(s.conserved.energy),
        ]);
    }
    trace.write(&out.file("trace.csv"))?;

    let r = &outcome.report;
    let mut report = Report::new("stability");
    report.put_f64("sigma", r.params.sigma());
    report.put_f64("c0", r.params.c0());
    report.put("branch", r.params.branch().name());
    report.put("frame", r.frame.name());
    report.put("shape", r.shape.name());
    report.put_f64("delta", r.delta);
    report.put_f64("initial_distance", r.initial_distance);
    report.put_f64("epsilon_observed", r.epsilon_observed);
    report.put_f64("speed", r.speed);
    report.put_f64("speed_deviation", r.speed_deviation);
    report.put_f64("measured_k", r.measured_k);
    report.put_f64("measured_k_speed", r.measured_k_speed);
    report.put_f64("k_bound", r.k_bound);
    report.put("pass", r.pass);
    report.put("samples", r.samples);
    if let Some(t) = r.failure_time {
        report.put_f64("failure_time", t);
    }
    finish_report(&mut report, cfg, out, r.failure.as_ref())?;
    Ok(r.failure.clone().map_or(Status::Success, Status::Failed))
}

pub fn convexity(cfg: &mut Config, out: &OutDir) -> Result<Status> {
    let (p, _) = soliton(cfg)?;
    let lo: f64 = cfg.get("convexity.c0_min", 1e-2)?;
    let hi: f64 = cfg.get("convexity.c0_max", 1e2)?;
    let points = cfg.get("convexity.points", 17usize)?;
    let h_rel = cfg.get("convexity.h_rel", 1e-4)?;
    cfg.finish()?;
    if !(lo > 0.0 && hi >= lo) || points == 0 || (points == 1 && hi != lo) {
        bail!("convexity sweep needs 0 < c0_min <= c0_max and points >= 1 (points = 1 only when c0_min = c0_max)");
    }
    let c0s: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                lo
            } else {
                lo * (hi / lo).powf(i as f64 / (points - 1) as f64)
            }
        })
        .collect();
    let rows = c0s
        .par_iter()
        .map(|&c0| d_second(&p.with_c0(c0)?, h_rel * c0))
        .collect::<gardner_core::Result<Vec<_>>>()?;
    let at_c0 = d_second(&p, h_rel * p.c0())?;

    let mut csv = Csv::new(&["c0", "d2_numeric", "d2_closed_form", "abs_err", "d2_quadrature"]);
    for (c0, d) in c0s.iter().zip(&rows) {
        csv.row(&[num(*c0), num(d.second_difference), num(d.closed_form), num(d.abs_err()), num(d.quadrature)]);
    }
    csv.write(&out.file("convexity.csv"))?;

    let mut report = Report::new("convexity");
    report.put_f64("max_abs_err", rows.iter().map(|d| d.abs_err()).fold(0.0, f64::max));
    report.put_f64("min_d2_numeric", rows.iter().map(|d| d.second_difference).fold(f64::INFINITY, f64::min));
    report.put_f64("d2_numeric", at_c0.second_difference);
    report.put_f64("d2_quadrature", at_c0.quadrature);
    report.put_f64("d2_closed_form", at_c0.closed_form);
    finish_report(&mut report, cfg, out, None)?;
    Ok(Status::Success)
}

pub fn scaling_check(cfg: &mut Config, out: &OutDir, seed: u64) -> Result<Status> {
    let (p, frame) = soliton(cfg)?;
    let g = grid(cfg, &p, 1024)?;
    let dt = cfg.get("dt", 2e-3)?;
    let t_end = cfg.get("t_end", 2.0)?;
    let sp = ScalingParams::new(cfg.get("scaling.lambda", 2.0)?, cfg.get("scaling.alpha", 3.0)?)?;
    let v0 = initial_data(cfg, &p, &g, seed)?;
    cfg.finish()?;

    let eq = Equation::for_soliton(&p, frame);
    let mut direct = Integrator::new(&v0, eq, &EvolveConfig::new(dt, t_end))?;
    let scaled_cfg = EvolveConfig::new(sp.scaled_time(dt), sp.scaled_time(t_end));
    let mut scaled = Integrator::new(&scale_down(&v0, &sp)?, eq.rescaled(&sp), &scaled_cfg)?;
    let steps = EvolveConfig::new(dt, t_end).steps();
    let failure = direct.run_steps(steps).and_then(|_| scaled.run_steps(steps)).err();
    let back = scale_up(&scaled.field(), &sp)?;
    let diff = (&back - &direct.field()).l2_norm();

    field_csv(&direct.field()).write(&out.file("direct.csv"))?;
    field_csv(&back).write(&out.file("round_trip.csv"))?;
    let mut report = Report::new("scaling-check");
    report.put_f64("l2_difference", diff);
    report.put_f64("scaled_dt", scaled_cfg.dt);
    report.put_f64("scaled_t_end", scaled_cfg.t_end);
    report.put_f64("scaled_half_length", g.half_length() * sp.lambda());
    finish_report(&mut report, cfg, out, failure.as_ref())?;
    Ok(failure.map_or(Status::Success, Status::Failed))
}

pub fn local_time(cfg: &mut Config, out: &OutDir) -> Result<Status> {
    let norms: Vec<f64> = cfg.list("local.norm", "1")?;
    let s = cfg.get("local.s", 1.0)?;
    let constant = cfg.get("local.c0", 1.0)?;
    let alpha = cfg.get("local.alpha", 3.0)?;
    cfg.finish()?;
    if norms.is_empty() {
        bail!("local.norm is empty");
    }
    let rows = norms
        .iter()
        .map(|&n| local_time_estimate(n, s, constant, alpha))
        .collect::<gardner_core::Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["norm", "time", "lambda0", "d1", "d2"]);
    for (n, lt) in norms.iter().zip(&rows) {
        csv.row(&[num(*n), num(lt.time), num(lt.lambda0), num(lt.d1), num(lt.d2)]);
    }
    csv.write(&out.file("local_time.csv"))?;
    let mut report = Report::new("local-time");
    report.put_f64("norm", norms[0]);
    report.put_f64("time", rows[0].time);
    report.put_f64("lambda0", rows[0].lambda0);
    report.put_f64("d1", rows[0].d1);
    report.put_f64("d2", rows[0].d2);
    report.put("rows", rows.len());
    finish_report(&mut report, cfg, out, None)?;
    Ok(Status::Success)
}

fn ratio_rows(csv: &mut Csv, set: &RatioSet, kind: EnsembleKind, s: f64, b: f64) {
    for (i, r) in set.ratios.iter().enumerate() {
        csv.row(&[i.to_string(), kind.name().to_string(), num(s), num(b), num(*r)]);
    }
}

fn summary_row(csv: &mut Csv, set: &RatioSet, kind: EnsembleKind, s: f64, b: f64) {
    let st = &set.stats;
    csv.row(&[num(s), num(b), kind.name().to_string(), num(st.max), num(st.mean), num(st.p50), num(st.p95)]);
}

pub fn xsb_sample(cfg: &mut Config, out: &OutDir, seed: u64) -> Result<Status> {
    let kinds = cfg.get::<String>("xsb.kind", "all".into())?;
    let kinds: Vec<EnsembleKind> = if kinds == "all" {
        EnsembleKind::ALL.to_vec()
    } else {
        kinds.split(',').map(|k| k.parse()).collect::<gardner_core::Result<_>>()?
    };
    let indices: Vec<f64> = cfg.list("xsb.s", "0.26,0.3,0.5,1.0")?;
    let b = cfg.get("xsb.b", 0.51)?;
    let count = cfg.get("xsb.count", 64usize)?;
    let grid = GridSpec::new(cfg.get("xsb.n", 256usize)?, cfg.get("xsb.L", 8.0 * PI)?)?;
    let nt = cfg.get("xsb.nt", 256usize)?;
    let t_half = cfg.get("xsb.t_half", 2.0)?;
    let estimate = cfg.get::<String>("xsb.estimate", "both".into())?;
    let deltas: Vec<f64> = cfg.list("xsb.fit_deltas", "1,0.5,0.25")?;
    cfg.finish()?;
    let (tri, bi) = match estimate.as_str() {
        "trilinear" => (true, false),
        "bilinear" => (false, true),
        "both" => (true, true),
        other => bail!("xsb.estimate must be trilinear, bilinear or both, got `{other}`"),
    };

    let header = ["sample_id", "kind", "s", "b", "ratio"];
    let summary_header = ["s", "b", "kind", "max", "mean", "p50", "p95"];
    let mut tri_csv = Csv::new(&header);
    let mut tri_sum = Csv::new(&summary_header);
    let mut l2_csv = Csv::new(&header);
    let mut l2_sum = Csv::new(&summary_header);
    let mut dx_csv = Csv::new(&header);
    let mut dx_sum = Csv::new(&summary_header);
    let mut report = Report::new("xsb-sample");
    for &s in &indices {
        for &kind in &kinds {
            let spec = EnsembleSpec { count, kind, seed, s, b, grid, nt, t_half, amplitude: 1.0 };
            if tri {
                let set = sample_trilinear_ratio(&spec)?;
                ratio_rows(&mut tri_csv, &set, kind, s, b);
                summary_row(&mut tri_sum, &set, kind, s, b);
                report.put_f64(&format!("trilinear.{}.s{s}.max", kind.name()), set.stats.max);
            }
            if bi {
                let pair = sample_bilinear_ratio(&spec)?;
                ratio_rows(&mut l2_csv, &pair.l2, kind, s, b);
                summary_row(&mut l2_sum, &pair.l2, kind, s, b);
                ratio_rows(&mut dx_csv, &pair.derivative, kind, s, b);
                summary_row(&mut dx_sum, &pair.derivative, kind, s, b);
                report.put_f64(&format!("bilinear_l2.{}.s{s}.max", kind.name()), pair.l2.stats.max);
                report.put_f64(&format!("bilinear_derivative.{}.s{s}.max", kind.name()), pair.derivative.stats.max);
            }
        }
    }
    if tri {
        tri_csv.write(&out.file("xsb_trilinear.csv"))?;
        tri_sum.write(&out.file("xsb_trilinear_summary.csv"))?;
    }
    if bi {
        l2_csv.write(&out.file("xsb_bilinear_l2.csv"))?;
        l2_sum.write(&out.file("xsb_bilinear_l2_summary.csv"))?;
        dx_csv.write(&out.file("xsb_bilinear_derivative.csv"))?;
        dx_sum.write(&out.file("xsb_bilinear_derivative_summary.csv"))?;
    }

    let packet = Field::from_fn(grid, |x| (-x * x / 8.0).exp() * (1.5 * x).cos());
    let fit = cutoff_scaling_fit(&packet, nt, t_half, indices[0].max(0.25), b, &deltas)?;
    let mut fit_csv = Csv::new(&["delta", "ratio"]);
    for (d, r) in fit.deltas.iter().zip(&fit.ratios) {
        fit_csv.row(&[num(*d), num(*r)]);
    }
    fit_csv.write(&out.file("cutoff_fit.csv"))?;
    report.put_f64("fit_exponent", fit.exponent);
    report.put_f64("fit_expected", fit.expected);
    finish_report(&mut report, cfg, out, None)?;
    Ok(Status::Success)
}
