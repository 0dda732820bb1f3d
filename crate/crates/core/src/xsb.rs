//! Empirical sampling of the bilinear and trilinear X^{s,b} estimates.
//!
//! Every sample is a tuple of space-time fields `phi_i`, already multiplied by
//! the cutoff `psi(t)` so that they are supported in `|t| < 1` and periodic on
//! the sampling window. The estimates are evaluated with `u_i = psi(t) phi_i`.
//! Ratios are lower bounds for the constants of the estimates, nothing more.
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::free_propagate;
use crate::grid::{smooth_cutoff, sobolev_norm, xsb_norm, Field, GridSpec, SpaceTimeField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    /// Wave packets with random position, width, carrier, drift and temporal frequency.
    GenericRandom,
    /// `psi(t) W(t) g` for random packets `g`: energy sits on `tau = xi^3`.
    AiryConcentrated,
    /// Free packets with opposite carriers `+-xi0`.
    NearResonantPair,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] =
        [EnsembleKind::GenericRandom, EnsembleKind::AiryConcentrated, EnsembleKind::NearResonantPair];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::GenericRandom => "generic",
            EnsembleKind::AiryConcentrated => "airy",
            EnsembleKind::NearResonantPair => "resonant",
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "generic" => Ok(EnsembleKind::GenericRandom),
            "airy" => Ok(EnsembleKind::AiryConcentrated),
            "resonant" => Ok(EnsembleKind::NearResonantPair),
            other => Err(Error::invalid(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub count: usize,
    pub kind: EnsembleKind,
    pub seed: u64,
    pub s: f64,
    pub b: f64,
    pub grid: GridSpec,
    pub nt: usize,
    /// The time window is `[-t_half, t_half)`; must be at least 1.
    pub t_half: f64,
    /// Common amplitude factor applied to every input.
    pub amplitude: f64,
}

impl EnsembleSpec {
    /// 64 samples on `n = nt = 256`, `x in [-8 pi, 8 pi)`, `t in [-2, 2)`, `b = 0.51`.
    pub fn new(kind: EnsembleKind, seed: u64, s: f64) -> Self {
        EnsembleSpec {
            count: 64,
            kind,
            seed,
            s,
            b: 0.51,
            grid: GridSpec::new(256, 8.0 * PI).expect("valid grid"),
            nt: 256,
            t_half: 2.0,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("ensemble count must be positive"));
        }
        if !(self.s.is_finite() && self.s >= 0.25) {
            return Err(Error::invalid(format!("s must be >= 1/4, got {}", self.s)));
        }
        if !(self.b > 0.5 && self.b < 1.0) {
            return Err(Error::invalid(format!("b must lie in (1/2, 1), got {}", self.b)));
        }
        if !(self.t_half.is_finite() && self.t_half >= 1.0) {
            return Err(Error::invalid(format!("t_half must be >= 1, got {}", self.t_half)));
        }
        if !(self.amplitude.is_finite() && self.amplitude != 0.0) {
            return Err(Error::invalid("amplitude must be nonzero and finite"));
        }
        if self.nt < 8 || !self.nt.is_power_of_two() {
            return Err(Error::invalid(format!("nt must be a power of two >= 8, got {}", self.nt)));
        }
        Ok(())
    }
}

/// Summary of a set of ratios; quantiles use linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

impl RatioStats {
    pub fn from_ratios(ratios: &[f64]) -> Self {
        assert!(!ratios.is_empty(), "no ratios to summarise");
        let mut sorted = ratios.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        };
        RatioStats {
            count: sorted.len(),
            max: *sorted.last().unwrap(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p50: quantile(0.5),
            p95: quantile(0.95),
        }
    }
}

/// Per-sample ratios plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSet {
    pub ratios: Vec<f64>,
    pub stats: RatioStats,
}

impl RatioSet {
    fn new(ratios: Vec<f64>) -> Self {
        let stats = RatioStats::from_ratios(&ratios);
        RatioSet { ratios, stats }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilinearRatios {
    /// `|u1 u2|_{L^2} / (|phi1|_{X^{s,b}} |phi2|_{X^{-1/2,1-b}})`
    pub l2: RatioSet,
    /// `|d_x(u1 u2)|_{X^{s,b-1}} / (|phi1|_{X^{s,b}} |phi2|_{X^{s,b}})`
    pub derivative: RatioSet,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    center: f64,
    width: f64,
    carrier: f64,
    phase: f64,
}

impl Packet {
    fn random(rng: &mut ChaCha8Rng, grid: &GridSpec) -> Self {
        let l = grid.half_length();
        Packet {
            center: rng.random_range(-0.25 * l..0.25 * l),
            width: rng.random_range(1.5..2.5),
            carrier: rng.random_range(-2.0..2.0),
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    fn field(&self, grid: &GridSpec) -> Field {
        Field::from_fn(*grid, |x| {
            let y = grid.wrap(x - self.center) / self.width;
            (-0.5 * y * y).exp() * (self.carrier * x + self.phase).cos()
        })
    }
}

fn airy_field(g: &Field, nt: usize, t_half: f64) -> Result<SpaceTimeField> {
    SpaceTimeField::from_rows(*g.grid(), nt, t_half, |t| {
        let w = smooth_cutoff(t);
        if w == 0.0 {
            Field::zeros(*g.grid())
        } else {
            free_propagate(g, t).scale(w)
        }
    })
}

/// The `id`-th member of the ensemble: three inputs `phi_1, phi_2, phi_3`
/// (bilinear sampling uses the first two). Each sample has its own RNG stream.
pub fn ensemble_member(spec: &EnsembleSpec, id: u64) -> Result<[SpaceTimeField; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(id);
    let grid = spec.grid;
    let a = spec.amplitude;
    let make = |rng: &mut ChaCha8Rng, index: usize| -> Result<SpaceTimeField> {
        match spec.kind {
            EnsembleKind::GenericRandom => {
                let packet = Packet::random(rng, &grid);
                let drift = rng.random_range(-1.0..1.0);
                let omega = rng.random_range(-3.0..3.0);
                let grid_ = grid;
                SpaceTimeField::from_fn(grid, spec.nt, spec.t_half, move |x, t| {
                    let y = grid_.wrap(x - drift * t - packet.center) / packet.width;
                    let carrier = (packet.carrier * x + omega * t + packet.phase).cos();
                    a * smooth_cutoff(t) * (-0.5 * y * y).exp() * carrier
                })
            }
            EnsembleKind::AiryConcentrated => {
                let g = Packet::random(rng, &grid).field(&grid).scale(a);
                airy_field(&g, spec.nt, spec.t_half)
            }
            EnsembleKind::NearResonantPair => {
                let mut packet = Packet::random(rng, &grid);
                let xi0 = rng.random_range(1.0..2.0);
                packet.carrier = if index == 1 { -xi0 } else { xi0 };
                let g = packet.field(&grid).scale(a);
                airy_field(&g, spec.nt, spec.t_half)
            }
        }
    };
    Ok([make(&mut rng, 0)?, make(&mut rng, 1)?, make(&mut rng, 2)?])
}

fn checked_ratio(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::invalid(format!("sample has degenerate denominator {den}")));
    }
    Ok(num / den)
}

/// `|d_x(u1 u2 u3)|_{X^{s,b-1}} / prod |phi_i|_{X^{s,b}}` with `u_i = psi(t) phi_i`.
pub fn trilinear_ratio(phi: [&SpaceTimeField; 3], s: f64, b: f64) -> Result<f64> {
    let u: Vec<SpaceTimeField> = phi.iter().map(|f| f.mul_time(smooth_cutoff)).collect();
    let product = u[0].mul(&u[1]).mul(&u[2]).dx();
    let num = xsb_norm(&product, s, b - 1.0);
    let den: f64 = phi.iter().map(|f| xsb_norm(f, s, b)).product();
    checked_ratio(num, den)
}

/// The two bilinear ratios `(R_a, R_b)` for a pair of inputs.
pub fn bilinear_ratios(phi1: &SpaceTimeField, phi2: &SpaceTimeField, s: f64, b: f64) -> Result<(f64, f64)> {
    let u1 = phi1.mul_time(smooth_cutoff);
    let u2 = phi2.mul_time(smooth_cutoff);
    let product = u1.mul(&u2);
    let n1 = xsb_norm(phi1, s, b);
    let ra = checked_ratio(product.l2_norm(), n1 * xsb_norm(phi2, -0.5, 1.0 - b))?;
    let rb = checked_ratio(xsb_norm(&product.dx(), s, b - 1.0), n1 * xsb_norm(phi2, s, b))?;
    Ok((ra, rb))
}

pub fn sample_trilinear_ratio(spec: &EnsembleSpec) -> Result<RatioSet> {
    spec.validate()?;
    let ratios = (0..spec.count as u64)
        .into_par_iter()
        .map(|id| {
            let [a, b, c] = ensemble_member(spec, id)?;
            trilinear_ratio([&a, &b, &c], spec.s, spec.b)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RatioSet::new(ratios))
}

pub fn sample_bilinear_ratio(spec: &EnsembleSpec) -> Result<BilinearRatios> {
    spec.validate()?;
    if spec.s <= 0.0 {
        return Err(Error::invalid("bilinear derivative estimate needs s > 0"));
    }
    let pairs = (0..spec.count as u64)
        .into_par_iter()
        .map(|id| {
            let [a, b, _] = ensemble_member(spec, id)?;
            bilinear_ratios(&a, &b, spec.s, spec.b)
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (l2, derivative): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(BilinearRatios { l2: RatioSet::new(l2), derivative: RatioSet::new(derivative) })
}

/// Least-squares fit of `|psi(t/delta) W(t) v0|_{X^{s,b}} ~ delta^p |v0|_{H^s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffScalingFit {
    pub deltas: Vec<f64>,
    /// `|psi(t/delta) W(t) v0|_{X^{s,b}} / |v0|_{H^s}`
    pub ratios: Vec<f64>,
    pub exponent: f64,
    /// `(1 - 2b) / 2`
    pub expected: f64,
}

pub fn cutoff_scaling_fit(
    v0: &Field,
    nt: usize,
    t_half: f64,
    s: f64,
    b: f64,
    deltas: &[f64],
) -> Result<CutoffScalingFit> {
    if deltas.len() < 2 {
        return Err(Error::invalid("need at least two values of delta"));
    }
    if deltas.iter().any(|&d| !(d > 0.0 && d <= t_half)) {
        return Err(Error::invalid("deltas must lie in (0, t_half]"));
    }
    let hs = sobolev_norm(v0, s);
    let ratios = deltas
        .iter()
        .map(|&delta| {
            let f = SpaceTimeField::from_rows(*v0.grid(), nt, t_half, |t| {
                let w = smooth_cutoff(t / delta);
                if w == 0.0 {
                    Field::zeros(*v0.grid())
                } else {
                    free_propagate(v0, t).scale(w)
                }
            })?;
            checked_ratio(xsb_norm(&f, s, b), hs)
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(CutoffScalingFit {
        deltas: deltas.to_vec(),
        ratios,
        exponent: sxy / sxx,
        expected: (1.0 - 2.0 * b) / 2.0,
    })
}
