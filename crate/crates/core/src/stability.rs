//! Orbital stability: modulation tracking, the phase ODE and the convexity
//! functional `d(c0)`.
//!
//! Fields passed to the modulation functions are the full mKdV field
//! `u = sigma + v`. The template is `sigma + s phi(x + r)` with `s = +1` on the
//! focusing branch and `s = -1` on the defocusing branch, so a soliton moving
//! right at speed `c` is tracked by `r(t) = -c t`.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::evolve::{traveling_speed, ConservedTriple, Equation, EvolveConfig, Frame, Integrator};
use crate::grid::{sobolev_norm, Field, Fourier, GridSpec};
use crate::solitons::{soliton_profile, soliton_profile_derivative, Branch, SolitonParams};

fn template(p: &SolitonParams, grid: &GridSpec, r: f64) -> Field {
    let s = p.branch().sign();
    soliton_profile(p, grid, -r).map(|f| p.sigma() + s * f)
}

/// `F(r) = 1/2 int (u - sigma - s phi(x + r))^2 dx`.
pub fn modulation_f(u: &Field, p: &SolitonParams, r: f64) -> f64 {
    let t = template(p, u.grid(), r);
    let diff = u - &t;
    0.5 * diff.inner(&diff)
}

/// `G(r) = dF/dr = -s int (u - sigma) phi'(x + r) dx`.
pub fn modulation_g(u: &Field, p: &SolitonParams, r: f64) -> f64 {
    let grid = u.grid();
    let (sigma, s) = (p.sigma(), p.branch().sign());
    let mut acc = 0.0;
    for (j, &uj) in u.values().iter().enumerate() {
        acc += (uj - sigma) * p.profile_derivative_at(grid.wrap(grid.x(j) + r));
    }
    -s * acc * grid.dx()
}

/// `dG/dr = -s int (u - sigma) phi''(x + r) dx`.
pub fn modulation_g_slope(u: &Field, p: &SolitonParams, r: f64) -> f64 {
    let grid = u.grid();
    let (sigma, s) = (p.sigma(), p.branch().sign());
    let mut acc = 0.0;
    for (j, &uj) in u.values().iter().enumerate() {
        acc += (uj - sigma) * p.profile_second_derivative_at(grid.wrap(grid.x(j) + r));
    }
    -s * acc * grid.dx()
}

/// Root of `G` with `dG/dr > 0` nearest to `predicted`, searched in
/// `predicted +- 2 / sqrt(c0)`. `time` is only used in the error.
pub fn locate_phase(u: &Field, p: &SolitonParams, predicted: f64, time: f64) -> Result<f64> {
    let g = |r: f64| modulation_g(u, p, r);
    let half_window = 2.0 / p.decay_rate();
    let lost = Error::RootLost { time, predicted };

    // cheap bracket first, then a full scan of the window
    let h = 0.01 * half_window;
    let (ga, gb) = (g(predicted - h), g(predicted + h));
    let bracket = if ga <= 0.0 && gb > 0.0 {
        Some((predicted - h, predicted + h, ga, gb))
    } else {
        const SCAN: i32 = 64;
        let step = half_window / SCAN as f64;
        let values: Vec<(f64, f64)> = (-SCAN..=SCAN)
            .map(|k| {
                let r = predicted + k as f64 * step;
                (r, g(r))
            })
            .collect();
        values
            .windows(2)
            .filter(|w| w[0].1 <= 0.0 && w[1].1 > 0.0)
            .min_by(|a, b| {
                let da = (0.5 * (a[0].0 + a[1].0) - predicted).abs();
                let db = (0.5 * (b[0].0 + b[1].0) - predicted).abs();
                da.total_cmp(&db)
            })
            .map(|w| (w[0].0, w[1].0, w[0].1, w[1].1))
    };
    let (mut a, mut b, mut fa, mut fb) = bracket.ok_or(lost)?;
    if fa == 0.0 {
        return Ok(a);
    }

    // Illinois regula falsi, falling back to bisection when it stalls
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let secant = (a * fb - b * fa) / (fb - fa);
        let c = if secant > a && secant < b { secant } else { 0.5 * (a + b) };
        let fc = g(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Right-hand side of the phase ODE
/// `r' = -(c0 + drift) - s N / D` with
/// `N = int h (-12 v v'^2 + 6 h v v'' + 2 h^2 v'')`, `D = int (-(v')^2 + h v'')`,
/// `v = sigma + s phi(x + r)`, `h = u - v`.
pub fn phase_ode_rhs(u: &Field, p: &SolitonParams, frame: Frame, r: f64) -> Result<f64> {
    let grid = u.grid();
    let (sigma, s) = (p.sigma(), p.branch().sign());
    let mut num = 0.0;
    let mut den = 0.0;
    let mut vx_sq = 0.0;
    for (j, &uj) in u.values().iter().enumerate() {
        let y = grid.wrap(grid.x(j) + r);
        let v = sigma + s * p.profile_at(y);
        let v1 = s * p.profile_derivative_at(y);
        let v2 = s * p.profile_second_derivative_at(y);
        let h = uj - v;
        num += h * (-12.0 * v * v1 * v1 + 6.0 * h * v * v2 + 2.0 * h * h * v2);
        den += -v1 * v1 + h * v2;
        vx_sq += v1 * v1;
    }
    if den.abs() < 1e-10 * vx_sq {
        return Err(Error::DegenerateDenominator { value: den * grid.dx() });
    }
    Ok(-traveling_speed(p, frame) - s * num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationSample {
    pub t: f64,
    pub r: f64,
    /// Finite-difference derivative of `r`; filled in once the trace is complete.
    pub r_prime: f64,
    /// H^1 norm of `u - sigma - s phi(. + r)`.
    pub h1_distance: f64,
    pub conserved: ConservedTriple,
    /// `dG/dr` at the root.
    pub g_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModulationTrace {
    pub samples: Vec<ModulationSample>,
    /// Set when tracking stopped early.
    pub failure: Option<Error>,
}

impl ModulationTrace {
    pub fn sup_distance(&self) -> f64 {
        self.samples.iter().map(|s| s.h1_distance).fold(0.0, f64::max)
    }

    /// `sup |r' + speed|`.
    pub fn sup_speed_deviation(&self, speed: f64) -> f64 {
        self.samples.iter().map(|s| (s.r_prime + speed).abs()).fold(0.0, f64::max)
    }

    pub fn failure_time(&self) -> Option<f64> {
        match &self.failure {
            Some(Error::RootLost { time, .. }) => Some(*time),
            Some(Error::NonFinite { time }) => *time,
            Some(_) => self.samples.last().map(|s| s.t),
            None => None,
        }
    }

    fn fill_derivatives(&mut self) {
        let n = self.samples.len();
        if n < 2 {
            return;
        }
        let t: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let r: Vec<f64> = self.samples.iter().map(|s| s.r).collect();
        for i in 0..n {
            self.samples[i].r_prime = if n == 2 {
                (r[1] - r[0]) / (t[1] - t[0])
            } else if i == 0 {
                let h = t[1] - t[0];
                (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h)
            } else if i == n - 1 {
                let h = t[n - 1] - t[n - 2];
                (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h)
            } else {
                (r[i + 1] - r[i - 1]) / (t[i + 1] - t[i - 1])
            };
        }
    }
}

/// Runs `integrator` to `t_end`, locating the phase every `sample_dt`.
/// The integrator state is `v = u - sigma`. Runtime failures (lost root,
/// non-finite state) end the trace and are stored in `failure`.
pub fn track_phase(
    integrator: &mut Integrator,
    p: &SolitonParams,
    frame: Frame,
    sample_dt: f64,
    t_end: f64,
) -> Result<ModulationTrace> {
    let dt = integrator.dt();
    if !(sample_dt.is_finite() && sample_dt > 0.0) {
        return Err(Error::invalid(format!("sample_dt must be positive, got {sample_dt}")));
    }
    let per_sample = (sample_dt / dt).round();
    if per_sample < 1.0 || ((per_sample * dt - sample_dt) / sample_dt).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "sample_dt = {sample_dt} is not a multiple of dt = {dt}"
        )));
    }
    let per_sample = per_sample as u64;
    let total = (t_end / dt).round() as u64;
    let speed = traveling_speed(p, frame);
    let sigma = p.sigma();

    let mut trace = ModulationTrace::default();
    let mut predicted = -speed * integrator.time();
    let mut velocity = -speed;
    loop {
        let t = integrator.time();
        let v = integrator.field();
        let u = v.map(|x| x + sigma);
        match locate_phase(&u, p, predicted, t) {
            Ok(r) => {
                let diff = &u - &template(p, u.grid(), r);
                trace.samples.push(ModulationSample {
                    t,
                    r,
                    r_prime: f64::NAN,
                    h1_distance: sobolev_norm(&diff, 1.0),
                    conserved: integrator.conserved(),
                    g_slope: modulation_g_slope(&u, p, r),
                });
                if let [.., a, b] = trace.samples.as_slice() {
                    velocity = (b.r - a.r) / (b.t - a.t);
                }
                predicted = r + velocity * per_sample as f64 * dt;
            }
            Err(e) => {
                trace.failure = Some(e);
                break;
            }
        }
        let done = integrator.steps_taken();
        if done >= total {
            break;
        }
        if let Err(e) = integrator.run_steps(per_sample.min(total - done)) {
            if e.is_runtime() {
                trace.failure = Some(e);
                break;
            }
            return Err(e);
        }
    }
    trace.fill_derivatives();
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationShape {
    /// `s (phi_{c0 (1 + 1/100)} - phi_{c0})`: a move along the soliton family.
    FamilyMismatch,
    /// Gaussian of unit width centered `2 / sqrt(c0)` right of the peak.
    GaussianBump,
    /// Seeded random Fourier modes with `|xi| <= sqrt(c0)`, windowed by a
    /// Gaussian of width `5 / sqrt(c0)`.
    BandLimitedNoise,
}

impl PerturbationShape {
    pub const ALL: [PerturbationShape; 3] = [
        PerturbationShape::FamilyMismatch,
        PerturbationShape::GaussianBump,
        PerturbationShape::BandLimitedNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationShape::FamilyMismatch => "family",
            PerturbationShape::GaussianBump => "bump",
            PerturbationShape::BandLimitedNoise => "noise",
        }
    }
}

impl std::str::FromStr for PerturbationShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "family" => Ok(PerturbationShape::FamilyMismatch),
            "bump" => Ok(PerturbationShape::GaussianBump),
            "noise" => Ok(PerturbationShape::BandLimitedNoise),
            other => Err(Error::invalid(format!("unknown perturbation shape `{other}`"))),
        }
    }
}

/// A perturbation of H^1 norm `delta` (zero when `delta = 0`).
pub fn perturbation(
    shape: PerturbationShape,
    p: &SolitonParams,
    grid: &GridSpec,
    delta: f64,
    seed: u64,
) -> Result<Field> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    let k = p.decay_rate();
    let raw = match shape {
        PerturbationShape::FamilyMismatch => {
            let s = p.branch().sign();
            let other = p.with_c0(p.c0() * 1.01)?;
            (&soliton_profile(&other, grid, 0.0) - &soliton_profile(p, grid, 0.0)).scale(s)
        }
        PerturbationShape::GaussianBump => {
            let center = 2.0 / k;
            Field::from_fn(*grid, |x| (-(x - center).powi(2)).exp())
        }
        PerturbationShape::BandLimitedNoise => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fourier = Fourier::new(*grid);
            let mut coeffs: Vec<num_complex::Complex64> =
                vec![num_complex::Complex64::new(0.0, 0.0); grid.n()];
            let nyq = grid.nyquist_index();
            for m in 1..nyq {
                if grid.wavenumber(m) > k {
                    break;
                }
                let c = num_complex::Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                coeffs[m] = c;
                coeffs[grid.n() - m] = c.conj();
            }
            fourier.inverse_in_place(&mut coeffs);
            let width = 5.0 / k;
            let window = Field::from_fn(*grid, |x| (-(x / width).powi(2)).exp());
            let noise = Field::from_vec_unchecked(*grid, coeffs.iter().map(|c| c.re).collect());
            noise.zip_map(&window, |a, b| a * b)
        }
    };
    let norm = sobolev_norm(&raw, 1.0);
    if norm == 0.0 {
        return Err(Error::invalid("perturbation shape vanishes on this grid"));
    }
    Ok(raw.scale(delta / norm))
}

/// One orbital-stability run: soliton plus perturbation, tracked in time.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityExperiment {
    pub params: SolitonParams,
    pub frame: Frame,
    pub grid: GridSpec,
    pub shape: PerturbationShape,
    pub delta: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Pass bound: distance and speed deviation must stay below `k_bound * delta`.
    pub k_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub params: SolitonParams,
    pub frame: Frame,
    pub shape: PerturbationShape,
    pub delta: f64,
    /// H^1 norm of the initial perturbation.
    pub initial_distance: f64,
    /// `sup_t` of the modulated H^1 distance.
    pub epsilon_observed: f64,
    /// `sup_t |r'(t) + speed|`.
    pub speed_deviation: f64,
    pub speed: f64,
    pub measured_k: f64,
    pub measured_k_speed: f64,
    pub k_bound: f64,
    pub pass: bool,
    pub failure: Option<Error>,
    pub failure_time: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOutcome {
    pub report: StabilityReport,
    pub trace: ModulationTrace,
}

impl StabilityExperiment {
    pub fn run(&self) -> Result<StabilityOutcome> {
        let p = &self.params;
        let bump = perturbation(self.shape, p, &self.grid, self.delta, self.seed)?;
        let v0 = &soliton_profile(p, &self.grid, 0.0).scale(p.branch().sign()) + &bump;
        let eq = Equation::for_soliton(p, self.frame);
        let cfg = EvolveConfig::new(self.dt, self.t_end);
        let mut integrator = Integrator::new(&v0, eq, &cfg)?;
        let trace = track_phase(&mut integrator, p, self.frame, self.sample_dt, self.t_end)?;
        let speed = traveling_speed(p, self.frame);
        let epsilon_observed = trace.sup_distance();
        let speed_deviation = trace.sup_speed_deviation(speed);
        let scale = if self.delta > 0.0 { self.delta } else { 1.0 };
        let measured_k = epsilon_observed / scale;
        let measured_k_speed = speed_deviation / scale;
        let pass = trace.failure.is_none()
            && epsilon_observed.is_finite()
            && measured_k <= self.k_bound
            && measured_k_speed <= self.k_bound;
        let report = StabilityReport {
            params: *p,
            frame: self.frame,
            shape: self.shape,
            delta: self.delta,
            initial_distance: sobolev_norm(&bump, 1.0),
            epsilon_observed,
            speed_deviation,
            speed,
            measured_k,
            measured_k_speed,
            k_bound: self.k_bound,
            pass,
            failure_time: trace.failure_time(),
            failure: trace.failure.clone(),
            samples: trace.samples.len(),
        };
        Ok(StabilityOutcome { report, trace })
    }
}

/// Grid used for `d(c0)`: 4096 points on `[-50/sqrt(c0), 50/sqrt(c0))`.
pub fn d_functional_grid(p: &SolitonParams) -> GridSpec {
    GridSpec::new(4096, p.default_half_length()).expect("valid default grid")
}

/// `d(c0) = int (phi_x^2 - s phi^4 - 4 sigma phi^3 + c0 phi^2) dx` on `grid`.
pub fn d_functional_on(p: &SolitonParams, grid: &GridSpec) -> f64 {
    let (s, sigma, c0) = (p.branch().sign(), p.sigma(), p.c0());
    let phi = soliton_profile(p, grid, 0.0);
    let dphi = soliton_profile_derivative(p, grid, 0.0);
    let sum: f64 = phi
        .values()
        .iter()
        .zip(dphi.values())
        .map(|(&f, &fx)| {
            let f2 = f * f;
            fx * fx - s * f2 * f2 - 4.0 * sigma * f2 * f + c0 * f2
        })
        .sum();
    sum * grid.dx()
}

pub fn d_functional(p: &SolitonParams) -> f64 {
    d_functional_on(p, &d_functional_grid(p))
}

/// `sqrt(c0) / (4 sigma^2 + c0)` (focusing) or `sqrt(c0) / (4 sigma^2 - c0)` (defocusing).
pub fn d_second_closed_form(p: &SolitonParams) -> f64 {
    let four_sigma2 = 4.0 * p.sigma() * p.sigma();
    p.c0().sqrt() / (four_sigma2 + p.branch().sign() * p.c0())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DSecond {
    /// `(d(c0 + h) - 2 d(c0) + d(c0 - h)) / h^2`
    pub second_difference: f64,
    /// `2 int phi (phi_{c0+h} - phi_{c0-h}) / (2h)`
    pub quadrature: f64,
    pub closed_form: f64,
}

impl DSecond {
    pub fn abs_err(&self) -> f64 {
        (self.second_difference - self.closed_form).abs()
    }
}

/// Two numerical estimates of `d''(c0)` and the closed form.
pub fn d_second(p: &SolitonParams, h_c0: f64) -> Result<DSecond> {
    if !(h_c0.is_finite() && h_c0 > 0.0) {
        return Err(Error::invalid(format!("h_c0 must be positive, got {h_c0}")));
    }
    let c0 = p.c0();
    if c0 - h_c0 <= 0.0 {
        return Err(Error::invalid(format!("c0 - h_c0 = {} must be positive", c0 - h_c0)));
    }
    if p.branch() == Branch::Defocusing && c0 + h_c0 >= 4.0 * p.sigma() * p.sigma() {
        return Err(Error::invalid("c0 + h_c0 must stay below 4 sigma^2 on the defocusing branch"));
    }
    let grid = d_functional_grid(p);
    let plus = p.with_c0(c0 + h_c0)?;
    let minus = p.with_c0(c0 - h_c0)?;
    let second_difference = (d_functional_on(&plus, &grid) - 2.0 * d_functional_on(p, &grid)
        + d_functional_on(&minus, &grid))
        / (h_c0 * h_c0);
    let phi = soliton_profile(p, &grid, 0.0);
    let dphi = (&soliton_profile(&plus, &grid, 0.0) - &soliton_profile(&minus, &grid, 0.0))
        .scale(0.5 / h_c0);
    let quadrature = 2.0 * phi.inner(&dphi);
    Ok(DSecond { second_difference, quadrature, closed_form: d_second_closed_form(p) })
}
