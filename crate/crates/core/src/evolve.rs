//! Time integration on the periodic grid.
//!
//! Equations are written as
//!
//! ```text
//! v_t + v_xxx + drift v_x + quadratic (v^2)_x + cubic (v^3)_x = 0
//! ```
//!
//! The linear part is integrated exactly (for `drift = 0` it is the Airy group
//! `W(t)`, the Fourier multiplier `e^{i xi^3 t}`); the nonlinear part is
//! advanced with the integrating-factor (Lawson) RK4 scheme. Products are
//! formed in physical space on a grid padded by a factor two, which removes
//! aliasing for both the quadratic and the cubic term.
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Fourier, GridSpec, SpectralField};
use crate::solitons::{Branch, SolitonParams};

/// Safety factor in the nonlinear step-size guard.
pub const GUARD_SAFETY: f64 = 2.0;

/// Reference frame for soliton experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// `v = u - sigma` where `u` solves mKdV: the Gardner equation plus the
    /// linear drift `+-6 sigma^2 v_x`. Solitons move at `+-c_sigma`.
    Background,
    /// The Gardner equation itself (no drift). Solitons move at `c0`.
    Gardner,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Background => "background",
            Frame::Gardner => "gardner",
        }
    }
}

impl std::str::FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "background" | "mkdv" => Ok(Frame::Background),
            "gardner" => Ok(Frame::Gardner),
            other => Err(Error::invalid(format!("unknown frame `{other}`"))),
        }
    }
}

/// Coefficients of `v_t + v_xxx + drift v_x + quadratic (v^2)_x + cubic (v^3)_x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equation {
    pub drift: f64,
    pub quadratic: f64,
    pub cubic: f64,
}

impl Equation {
    /// `v_t + v_xxx + 6 sigma (v^2)_x + 2 (v^3)_x = 0`.
    pub fn gardner(sigma: f64) -> Self {
        Equation { drift: 0.0, quadratic: 6.0 * sigma, cubic: 2.0 }
    }

    /// Focusing mKdV `u_t + u_xxx + 2 (u^3)_x = 0`.
    pub fn mkdv() -> Self {
        Equation { drift: 0.0, quadratic: 0.0, cubic: 2.0 }
    }

    /// Equation for `v = u - sigma` when `u` solves the mKdV equation of the
    /// given branch (`Frame::Background`), or the corresponding Gardner
    /// equation without drift (`Frame::Gardner`).
    pub fn for_branch(sigma: f64, branch: Branch, frame: Frame) -> Self {
        let s = branch.sign();
        let drift = match frame {
            Frame::Background => s * 6.0 * sigma * sigma,
            Frame::Gardner => 0.0,
        };
        Equation { drift, quadratic: s * 6.0 * sigma, cubic: s * 2.0 }
    }

    pub fn for_soliton(p: &SolitonParams, frame: Frame) -> Self {
        Self::for_branch(p.sigma(), p.branch(), frame)
    }

    /// Equation satisfied by `w(y, s) = lambda^{-alpha} v(y / lambda, s / lambda^3)`.
    pub fn rescaled(&self, p: &ScalingParams) -> Self {
        let (lambda, alpha) = (p.lambda(), p.alpha());
        Equation {
            drift: self.drift * lambda.powi(-2),
            quadratic: self.quadratic * lambda.powf(alpha - 2.0),
            cubic: self.cubic * lambda.powf(2.0 * (alpha - 1.0)),
        }
    }

    /// Linear symbol `i (xi^3 - drift xi)`.
    fn linear_symbol(&self, xi: f64) -> Complex64 {
        Complex64::new(0.0, xi * xi * xi - self.drift * xi)
    }
}

/// Translation speed of the soliton of `p` under `Equation::for_soliton(p, frame)`.
pub fn traveling_speed(p: &SolitonParams, frame: Frame) -> f64 {
    p.c0() + Equation::for_soliton(p, frame).drift
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Steps between conserved-quantity samples.
    pub log_every: usize,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        EvolveConfig { dt, t_end, dealias: true, log_every: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::invalid(format!("dt must be nonzero and finite, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.log_every == 0 {
            return Err(Error::invalid("log_every must be positive"));
        }
        Ok(())
    }

    /// Number of steps of size |dt| that reach t_end.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt.abs()).round() as u64
    }
}

/// `W(t) f`: multiplies the Fourier coefficients by `e^{i xi^3 t}`, the exact
/// solution operator of `v_t + v_xxx = 0`.
pub fn free_propagate(f: &Field, t: f64) -> Field {
    let fourier = Fourier::new(*f.grid());
    let mut s = fourier.forward(f);
    apply_free_group(&fourier, &mut s, t);
    fourier.inverse(&s)
}

pub(crate) fn apply_free_group(fourier: &Fourier, s: &mut SpectralField, t: f64) {
    for (c, &xi) in s.coeffs_mut().iter_mut().zip(fourier.wavenumbers()) {
        *c *= Complex64::from_polar(1.0, xi * xi * xi * t);
    }
}

/// Mean, mass and energy of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedTriple {
    /// `int v dx`
    pub mean: f64,
    /// `1/2 int v^2 dx`
    pub mass: f64,
    /// `int (v_x^2 - (2a/3) v^3 - (b/2) v^4) dx`; for the Gardner equation
    /// this is `int (v_x^2 - 4 sigma v^3 - v^4) dx`.
    pub energy: f64,
}

impl ConservedTriple {
    /// Largest relative change of each component with respect to `reference`.
    pub fn relative_drift(&self, reference: &ConservedTriple) -> [f64; 3] {
        fn rel(a: f64, b: f64) -> f64 {
            if b == 0.0 {
                a.abs()
            } else {
                ((a - b) / b).abs()
            }
        }
        [
            rel(self.mean, reference.mean),
            rel(self.mass, reference.mass),
            rel(self.energy, reference.energy),
        ]
    }
}

/// Conserved functionals of `eq` evaluated at `v` by spectral quadrature.
pub fn conserved(v: &Field, eq: &Equation) -> ConservedTriple {
    let fourier = Fourier::new(*v.grid());
    conserved_with(&fourier, v, eq)
}

pub(crate) fn conserved_with(fourier: &Fourier, v: &Field, eq: &Equation) -> ConservedTriple {
    let vx = fourier.derivative(v, 1);
    let dx = v.grid().dx();
    let (a3, b2) = (2.0 * eq.quadratic / 3.0, eq.cubic / 2.0);
    let mut mean = 0.0;
    let mut mass = 0.0;
    let mut energy = 0.0;
    for (&u, &ux) in v.values().iter().zip(vx.values()) {
        let u2 = u * u;
        mean += u;
        mass += u2;
        energy += ux * ux - a3 * u2 * u - b2 * u2 * u2;
    }
    ConservedTriple { mean: dx * mean, mass: 0.5 * dx * mass, energy: dx * energy }
}

/// Integrating-factor RK4 integrator holding the spectral state.
pub struct Integrator {
    grid: GridSpec,
    eq: Equation,
    dt: f64,
    dealias: bool,
    fourier: Fourier,
    padded_forward: Arc<dyn Fft<f64>>,
    padded_inverse: Arc<dyn Fft<f64>>,
    e_full: Vec<Complex64>,
    e_half: Vec<Complex64>,
    state: Vec<Complex64>,
    steps: u64,
    work: Vec<Complex64>,
    padded: Vec<Complex64>,
}

impl std::fmt::Debug for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator")
            .field("grid", &self.grid)
            .field("eq", &self.eq)
            .field("dt", &self.dt)
            .field("dealias", &self.dealias)
            .field("time", &self.time())
            .finish()
    }
}

impl Integrator {
    pub fn new(initial: &Field, eq: Equation, cfg: &EvolveConfig) -> Result<Self> {
        cfg.validate()?;
        if !initial.is_finite() {
            return Err(Error::NonFinite { time: Some(0.0) });
        }
        let grid = *initial.grid();
        let fourier = Fourier::new(grid);
        let padded_n = if cfg.dealias { 2 * grid.n() } else { grid.n() };
        let mut planner = FftPlanner::new();
        let padded_forward = planner.plan_fft_forward(padded_n);
        let padded_inverse = planner.plan_fft_inverse(padded_n);
        let (e_full, e_half) = fourier
            .wavenumbers()
            .iter()
            .map(|&xi| {
                let l = eq.linear_symbol(xi);
                ((l * cfg.dt).exp(), (l * (0.5 * cfg.dt)).exp())
            })
            .unzip();
        let state = fourier.forward(initial).coeffs().to_vec();
        let integrator = Integrator {
            grid,
            eq,
            dt: cfg.dt,
            dealias: cfg.dealias,
            fourier,
            padded_forward,
            padded_inverse,
            e_full,
            e_half,
            state,
            steps: 0,
            work: vec![Complex64::new(0.0, 0.0); grid.n()],
            padded: vec![Complex64::new(0.0, 0.0); padded_n],
        };
        integrator.check_guard(initial.max_abs())?;
        Ok(integrator)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn equation(&self) -> &Equation {
        &self.eq
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn field(&self) -> Field {
        let mut buf = self.state.clone();
        self.fourier.inverse_in_place(&mut buf);
        Field::from_vec_unchecked(self.grid, buf.iter().map(|c| c.re).collect())
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn conserved(&self) -> ConservedTriple {
        conserved_with(&self.fourier, &self.field(), &self.eq)
    }

    fn guard_value(&self, max_v: f64) -> f64 {
        self.dt.abs()
            * self.grid.max_wavenumber()
            * (self.eq.quadratic.abs() * max_v + self.eq.cubic.abs() * max_v * max_v)
            * GUARD_SAFETY
    }

    fn check_guard(&self, max_v: f64) -> Result<()> {
        let guard = self.guard_value(max_v);
        if guard > 1.0 {
            return Err(Error::StepTooLarge { dt: self.dt, guard });
        }
        Ok(())
    }

    /// Writes `-i xi (a v^2 + b v^3)^` into `out`; returns max|v|.
    fn nonlinear(&mut self, input: &[Complex64], out: &mut [Complex64]) -> f64 {
        let n = self.grid.n();
        let m = self.padded.len();
        let nyq = self.grid.nyquist_index();
        let padded = &mut self.padded;
        padded.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        if self.dealias {
            padded[..nyq].copy_from_slice(&input[..nyq]);
            padded[m - nyq + 1..].copy_from_slice(&input[nyq + 1..]);
        } else {
            padded.copy_from_slice(input);
        }
        self.padded_inverse.process(padded);
        let inv_n = 1.0 / n as f64;
        let (a, b) = (self.eq.quadratic, self.eq.cubic);
        let mut max_v = 0.0f64;
        for c in padded.iter_mut() {
            let v = c.re * inv_n;
            max_v = max_v.max(v.abs());
            *c = Complex64::new(v * v * (a + b * v), 0.0);
        }
        self.padded_forward.process(padded);
        let back = n as f64 / m as f64;
        let xi = self.fourier.wavenumbers();
        for k in 0..n {
            if k == nyq {
                out[k] = Complex64::new(0.0, 0.0);
                continue;
            }
            let src = if k < nyq { k } else { m - (n - k) };
            out[k] = Complex64::new(0.0, -xi[k]) * padded[src] * back;
        }
        max_v
    }

    /// Advances one step. On failure the state is left unchanged.
    pub fn step(&mut self) -> Result<()> {
        let n = self.grid.n();
        let dt = self.dt;
        let zero = Complex64::new(0.0, 0.0);
        let u = self.state.clone();
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut stage = vec![zero; n];

        let max_v = self.nonlinear(&u, &mut k1);
        self.check_guard(max_v)?;
        for k in 0..n {
            stage[k] = self.e_half[k] * (u[k] + 0.5 * dt * k1[k]);
        }
        self.nonlinear(&stage, &mut k2);
        for k in 0..n {
            stage[k] = self.e_half[k] * u[k] + 0.5 * dt * k2[k];
        }
        self.nonlinear(&stage, &mut k3);
        for k in 0..n {
            stage[k] = self.e_full[k] * u[k] + dt * self.e_half[k] * k3[k];
        }
        self.nonlinear(&stage, &mut k4);

        let work = &mut self.work;
        for k in 0..n {
            work[k] = self.e_full[k] * u[k]
                + dt / 6.0
                    * (self.e_full[k] * k1[k] + 2.0 * self.e_half[k] * (k2[k] + k3[k]) + k4[k]);
        }
        if work.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { time: Some(self.time() + dt) });
        }
        std::mem::swap(&mut self.state, &mut self.work);
        self.steps += 1;
        Ok(())
    }

    pub fn run_steps(&mut self, count: u64) -> Result<()> {
        for _ in 0..count {
            self.step()?;
        }
        Ok(())
    }

    /// Steps until `time()` is the closest multiple of `dt` to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = (t / self.dt).round() as i64;
        let remaining = target - self.steps as i64;
        if remaining < 0 {
            return Err(Error::invalid(format!(
                "cannot advance backwards from t = {} to t = {t}",
                self.time()
            )));
        }
        self.run_steps(remaining as u64)
    }
}

/// One integrating-factor RK4 step of `eq` from `v`.
pub fn step(v: &Field, eq: &Equation, cfg: &EvolveConfig) -> Result<Field> {
    let mut integrator = Integrator::new(v, *eq, cfg)?;
    integrator.step()?;
    Ok(integrator.field())
}

/// One row of a run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub t: f64,
    pub conserved: ConservedTriple,
}

/// Evolves `v0` to `cfg.t_end`, sampling the conserved triple every
/// `cfg.log_every` steps (and at the final step). Returns the final field and
/// the log. If a step fails, the error is returned together with the last
/// valid state.
pub fn evolve(
    v0: &Field,
    eq: &Equation,
    cfg: &EvolveConfig,
) -> std::result::Result<(Field, Vec<LogEntry>), (Error, Option<Field>)> {
    let mut integrator = Integrator::new(v0, *eq, cfg).map_err(|e| (e, None))?;
    let total = cfg.steps();
    let mut log = vec![LogEntry { t: 0.0, conserved: integrator.conserved() }];
    let mut done = 0;
    while done < total {
        let chunk = (cfg.log_every as u64).min(total - done);
        if let Err(e) = integrator.run_steps(chunk) {
            return Err((e, Some(integrator.field())));
        }
        done += chunk;
        log.push(LogEntry { t: integrator.time(), conserved: integrator.conserved() });
    }
    Ok((integrator.field(), log))
}

/// `(lambda, alpha)` of the scaling `v(x, t) = lambda^alpha w(lambda x, lambda^3 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    lambda: f64,
    alpha: f64,
}

impl ScalingParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !(alpha.is_finite() && alpha > 2.0) {
            return Err(Error::invalid(format!("alpha must exceed 2, got {alpha}")));
        }
        Ok(ScalingParams { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Time in the `w` variables corresponding to time `t` for `v`.
    pub fn scaled_time(&self, t: f64) -> f64 {
        self.lambda.powi(3) * t
    }
}

/// `w(y) = lambda^{-alpha} v(y / lambda)` on the grid of half length `lambda L`.
pub fn scale_down(v0: &Field, p: &ScalingParams) -> Result<Field> {
    let grid = v0.grid().scaled(p.lambda)?;
    let factor = p.lambda.powf(-p.alpha);
    Ok(Field::from_vec_unchecked(grid, v0.values().iter().map(|v| v * factor).collect()))
}

/// Inverse of [`scale_down`].
pub fn scale_up(w: &Field, p: &ScalingParams) -> Result<Field> {
    let grid = GridSpec::new(w.grid().n(), w.grid().half_length() / p.lambda)?;
    let factor = p.lambda.powf(p.alpha);
    Ok(Field::from_vec_unchecked(grid, w.values().iter().map(|v| v * factor).collect()))
}

/// Output of [`local_time_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTime {
    /// `(1 / (4 c0))^{1/(alpha-2)}`
    pub d1: f64,
    /// `(1 / (4 c0^2))^{1/(2(alpha-1))}`
    pub d2: f64,
    /// Scaling parameter at which the local time is attained, `T = lambda0^{-3}`.
    pub lambda0: f64,
    /// Local existence time.
    pub time: f64,
}

/// Local existence time for data of H^s norm `v0_norm`, with abstract
/// estimate constant `c0_const`:
/// `T = (1 / (4 c0^2 |v0|^2))^3` for `|v0| >= 1`,
/// `T = (1 / (4 c0 |v0|))^{6/(3+2s)}` for `|v0| <= 1` (minimum of both at 1).
pub fn local_time_estimate(v0_norm: f64, s: f64, c0_const: f64, alpha: f64) -> Result<LocalTime> {
    if !(alpha.is_finite() && alpha > 2.0) {
        return Err(Error::invalid(format!("alpha must exceed 2, got {alpha}")));
    }
    if !(s.is_finite() && s > 0.25) {
        return Err(Error::invalid(format!("s must exceed 1/4, got {s}")));
    }
    if !(c0_const.is_finite() && c0_const > 0.0) {
        return Err(Error::invalid(format!("estimate constant must be positive, got {c0_const}")));
    }
    if !(v0_norm.is_finite() && v0_norm >= 0.0) {
        return Err(Error::invalid(format!("norm must be nonnegative, got {v0_norm}")));
    }
    let d1 = (1.0 / (4.0 * c0_const)).powf(1.0 / (alpha - 2.0));
    let d2 = (1.0 / (4.0 * c0_const * c0_const)).powf(1.0 / (2.0 * (alpha - 1.0)));
    let large = || (1.0 / (4.0 * c0_const * c0_const * v0_norm * v0_norm)).powi(3);
    let small = || (1.0 / (4.0 * c0_const * v0_norm)).powf(6.0 / (3.0 + 2.0 * s));
    let time = if v0_norm > 1.0 {
        large()
    } else if v0_norm < 1.0 {
        small()
    } else {
        large().min(small())
    };
    Ok(LocalTime { d1, d2, lambda0: time.powf(-1.0 / 3.0), time })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Picard iteration of the Duhamel formula
/// `v(t) = W_eq(t) v0 - int_0^t W_eq(t - t') N(v(t')) dt'`
/// on Gauss-Legendre collocation nodes in `[0, t_end]`. Intended as a
/// cross-check of the time stepper for small `t_end`.
pub fn picard_duhamel(v0: &Field, eq: &Equation, t_end: f64, iterations: usize) -> Result<Field> {
    const NODES: usize = 8;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("Picard horizon must be positive"));
    }
    let grid = *v0.grid();
    let fourier = Fourier::new(grid);
    let n = grid.n();
    let (gl_x, gl_w) = gauss_legendre(NODES);
    let times: Vec<f64> = gl_x.iter().map(|x| 0.5 * t_end * (x + 1.0)).collect();
    // integral of the j-th Lagrange basis polynomial over [0, upper]
    let lagrange = |j: usize, t: f64| -> f64 {
        let mut p = 1.0;
        for (m, &tm) in times.iter().enumerate() {
            if m != j {
                p *= (t - tm) / (times[j] - tm);
            }
        }
        p
    };
    let integrate_basis = |j: usize, upper: f64| -> f64 {
        gl_x.iter()
            .zip(&gl_w)
            .map(|(x, w)| 0.5 * upper * w * lagrange(j, 0.5 * upper * (x + 1.0)))
            .sum()
    };
    let mut uppers = times.clone();
    uppers.push(t_end);
    let weights: Vec<Vec<f64>> = uppers
        .iter()
        .map(|&up| (0..NODES).map(|j| integrate_basis(j, up)).collect())
        .collect();

    let symbols: Vec<Complex64> = fourier.wavenumbers().iter().map(|&xi| eq.linear_symbol(xi)).collect();
    let nyq = grid.nyquist_index();
    let v0_hat = fourier.forward(v0).coeffs().to_vec();
    // interaction picture: z(t) = e^{-L t} v^(t), z' = e^{-L t} N(e^{L t} z)
    let mut z: Vec<Vec<Complex64>> = vec![v0_hat.clone(); NODES];
    let nonlinear_at = |z: &[Complex64], t: f64| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = z.iter().zip(&symbols).map(|(c, l)| c * (l * t).exp()).collect();
        fourier.inverse_in_place(&mut buf);
        let (a, b) = (eq.quadratic, eq.cubic);
        for c in buf.iter_mut() {
            let v = c.re;
            *c = Complex64::new(v * v * (a + b * v), 0.0);
        }
        fourier.forward_in_place(&mut buf);
        buf.iter()
            .enumerate()
            .map(|(k, c)| {
                if k == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -fourier.wavenumbers()[k]) * c * (-symbols[k] * t).exp()
                }
            })
            .collect()
    };
    let mut end = v0_hat.clone();
    for _ in 0..iterations.max(1) {
        let rhs: Vec<Vec<Complex64>> = (0..NODES).map(|j| nonlinear_at(&z[j], times[j])).collect();
        let mut next = Vec::with_capacity(NODES);
        for (row, w) in weights.iter().enumerate() {
            let mut acc = v0_hat.clone();
            for j in 0..NODES {
                for k in 0..n {
                    acc[k] += w[j] * rhs[j][k];
                }
            }
            if row < NODES {
                next.push(acc);
            } else {
                end = acc;
            }
        }
        z = next;
    }
    let mut out: Vec<Complex64> = end.iter().zip(&symbols).map(|(c, l)| c * (l * t_end).exp()).collect();
    fourier.inverse_in_place(&mut out);
    Field::new(grid, out.iter().map(|c| c.re).collect())
}
