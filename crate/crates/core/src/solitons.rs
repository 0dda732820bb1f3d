//! Closed-form traveling waves on a nonzero background.
//!
//! For the focusing branch, `u = sigma + phi(x - c_sigma t)` solves the focusing
//! mKdV equation `u_t + u_xxx + 2 (u^3)_x = 0` with
//!
//! ```text
//! phi(x) = c0 / (2 sigma + sqrt(4 sigma^2 + c0) cosh(sqrt(c0) x)),  c_sigma = 6 sigma^2 + c0.
//! ```
//!
//! For the defocusing branch `u = sigma - phi(x + c_sigma t)` solves
//! `u_t + u_xxx - 2 (u^3)_x = 0` with `sqrt(4 sigma^2 - c0)` in place of
//! `sqrt(4 sigma^2 + c0)` and `c_sigma = 6 sigma^2 - c0`, for `0 < c0 < 4 sigma^2`.
//! When `sigma < 0` the square root takes the sign of `sigma`, which keeps the
//! denominator away from zero (the profile is then negative).
//!
//! Both profiles satisfy `phi'' = c0 phi - 6 sigma phi^2 - 2 s phi^3` and the
//! first integral `(phi')^2 = c0 phi^2 - 4 sigma phi^3 - s phi^4`, where `s = +1`
//! (focusing) or `-1` (defocusing).
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{Field, Fourier, GridSpec};

/// Sign of the cubic nonlinearity of the parent mKdV equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Focusing,
    Defocusing,
}

impl Branch {
    /// `+1` for focusing, `-1` for defocusing.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Focusing => 1.0,
            Branch::Defocusing => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Focusing => "focusing",
            Branch::Defocusing => "defocusing",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "focusing" => Ok(Branch::Focusing),
            "defocusing" => Ok(Branch::Defocusing),
            other => Err(Error::invalid(format!("unknown branch `{other}`"))),
        }
    }
}

/// `(sigma, c0, branch)` identifying one traveling wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    sigma: f64,
    c0: f64,
    branch: Branch,
    /// `+-sqrt(4 sigma^2 +- c0)`, the coefficient of cosh.
    cosh_coeff: f64,
}

impl SolitonParams {
    pub fn new(sigma: f64, c0: f64, branch: Branch) -> Result<Self> {
        if !sigma.is_finite() || !c0.is_finite() {
            return Err(Error::invalid("sigma and c0 must be finite"));
        }
        if c0 <= 0.0 {
            return Err(Error::invalid(format!("c0 must be positive, got {c0}")));
        }
        let cosh_coeff = match branch {
            Branch::Focusing => {
                let a = (4.0 * sigma * sigma + c0).sqrt();
                // sqrt(4 sigma^2 + c0) > 2|sigma|
                assert!(2.0 * sigma + a > 0.0);
                a
            }
            Branch::Defocusing => {
                let bound = 4.0 * sigma * sigma;
                if c0 >= bound {
                    return Err(Error::invalid(format!(
                        "defocusing solitons need 0 < c0 < 4 sigma^2 = {bound}, got c0 = {c0}"
                    )));
                }
                sigma.signum() * (bound - c0).sqrt()
            }
        };
        Ok(SolitonParams { sigma, c0, branch, cosh_coeff })
    }

    pub fn focusing(sigma: f64, c0: f64) -> Result<Self> {
        Self::new(sigma, c0, Branch::Focusing)
    }

    pub fn defocusing(sigma: f64, c0: f64) -> Result<Self> {
        Self::new(sigma, c0, Branch::Defocusing)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Same sigma and branch, different shape parameter.
    pub fn with_c0(&self, c0: f64) -> Result<Self> {
        Self::new(self.sigma, c0, self.branch)
    }

    /// Exponential decay rate `sqrt(c0)`.
    pub fn decay_rate(&self) -> f64 {
        self.c0.sqrt()
    }

    /// `c_sigma`: `6 sigma^2 + c0` (focusing) or `6 sigma^2 - c0` (defocusing).
    pub fn speed(&self) -> f64 {
        6.0 * self.sigma * self.sigma + self.branch.sign() * self.c0
    }

    /// `phi(0) = c0 / (2 sigma + cosh_coeff)`.
    pub fn peak(&self) -> f64 {
        self.c0 / (2.0 * self.sigma + self.cosh_coeff)
    }

    /// Half length for which the tail at the boundary is negligible: `50 / sqrt(c0)`.
    pub fn default_half_length(&self) -> f64 {
        50.0 / self.decay_rate()
    }

    /// Profile at offset `x` from the center.
    pub fn profile_at(&self, x: f64) -> f64 {
        let k = self.decay_rate();
        self.c0 / (2.0 * self.sigma + self.cosh_coeff * (k * x).cosh())
    }

    pub fn profile_derivative_at(&self, x: f64) -> f64 {
        let k = self.decay_rate();
        let denom = 2.0 * self.sigma + self.cosh_coeff * (k * x).cosh();
        -self.c0 * self.cosh_coeff * k * (k * x).sinh() / (denom * denom)
    }

    /// `phi'' = c0 phi - 6 sigma phi^2 - 2 s phi^3`.
    pub fn profile_second_derivative_at(&self, x: f64) -> f64 {
        let p = self.profile_at(x);
        self.c0 * p - 6.0 * self.sigma * p * p - 2.0 * self.branch.sign() * p * p * p
    }
}

/// The traveling-wave profile sampled on `grid`, centered at `center`
/// (positions are wrapped periodically).
pub fn soliton_profile(p: &SolitonParams, grid: &GridSpec, center: f64) -> Field {
    Field::from_fn(*grid, |x| p.profile_at(grid.wrap(x - center)))
}

/// `phi'` sampled on the grid from the closed form.
pub fn soliton_profile_derivative(p: &SolitonParams, grid: &GridSpec, center: f64) -> Field {
    Field::from_fn(*grid, |x| p.profile_derivative_at(grid.wrap(x - center)))
}

/// `c_sigma` of the parent mKdV equation.
pub fn soliton_speed(p: &SolitonParams) -> f64 {
    p.speed()
}

/// Max-norm residuals of the profile ODEs, with derivatives taken spectrally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeResiduals {
    /// `phi'' + 2 s phi^3 + 6 sigma phi^2 - c0 phi`
    pub second_order: f64,
    /// `(phi')^2 + s phi^4 + 4 sigma phi^3 - c0 phi^2`
    pub first_integral: f64,
}

pub fn ode_residuals(p: &SolitonParams, grid: &GridSpec) -> OdeResiduals {
    let fourier = Fourier::new(*grid);
    let phi = soliton_profile(p, grid, 0.0);
    let d1 = fourier.derivative(&phi, 1);
    let d2 = fourier.derivative(&phi, 2);
    let (s, sigma, c0) = (p.branch().sign(), p.sigma(), p.c0());
    let mut second_order = 0.0f64;
    let mut first_integral = 0.0f64;
    for ((&f, &f1), &f2) in phi.values().iter().zip(d1.values()).zip(d2.values()) {
        let f2_res = f2 + 2.0 * s * f * f * f + 6.0 * sigma * f * f - c0 * f;
        let f1_res = f1 * f1 + s * f * f * f * f + 4.0 * sigma * f * f * f - c0 * f * f;
        second_order = second_order.max(f2_res.abs());
        first_integral = first_integral.max(f1_res.abs());
    }
    OdeResiduals { second_order, first_integral }
}

/// Largest grid size for which a dense eigensolve is attempted.
pub const MAX_DENSE_EIGEN_N: usize = 2048;

/// `L f = -f'' + V f` with `V = c0 - 12 sigma phi - 6 s phi^2`, which for the
/// focusing branch is `c_sigma - 6 (sigma + phi)^2`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: GridSpec,
    params: SolitonParams,
    potential: Field,
    fourier: Fourier,
}

pub fn build_linearized_operator(p: &SolitonParams, grid: &GridSpec) -> LinearizedOperator {
    let phi = soliton_profile(p, grid, 0.0);
    let (s, sigma, c0) = (p.branch().sign(), p.sigma(), p.c0());
    let potential = phi.map(|f| c0 - 12.0 * sigma * f - 6.0 * s * f * f);
    LinearizedOperator { grid: *grid, params: *p, potential, fourier: Fourier::new(*grid) }
}

impl LinearizedOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn apply(&self, f: &Field) -> Field {
        let d2 = self.fourier.derivative(f, 2);
        let vf = f.zip_map(&self.potential, |a, v| a * v);
        &vf - &d2
    }

    /// Dense matrix of the operator in the grid-point basis, symmetrised.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.grid.n();
        if n > MAX_DENSE_EIGEN_N {
            return Err(Error::invalid(format!(
                "dense operator limited to n <= {MAX_DENSE_EIGEN_N}, got {n}"
            )));
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = self.apply(&Field::from_vec_unchecked(self.grid, unit.clone()));
            for (i, v) in col.values().iter().enumerate() {
                m[(i, j)] = *v;
            }
            unit[j] = 0.0;
        }
        Ok((&m + m.transpose()) * 0.5)
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::new(self.matrix()?);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(values)
    }

    pub fn lowest_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }
}
