//! Model catalogs: spectrally negative Lévy processes and one-dimensional
//! diffusions given by their SDE coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaleError};
use crate::numerics::quad::cumulative_simpson;
use crate::numerics::roots::largest_convex_root;

/// Magnitude law of the downward jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Exponentially distributed magnitudes with the given mean.
    Exponential { mean: f64 },
    /// Every jump has the same magnitude.
    Fixed { size: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(ScaleError::InvalidModel(format!("exponential jump mean must be positive, got {mean}")))
            }
            JumpLaw::Fixed { size } if !(size > 0.0 && size.is_finite()) => {
                Err(ScaleError::InvalidModel(format!("fixed jump size must be positive, got {size}")))
            }
            _ => Ok(()),
        }
    }

    /// `E[exp(-z ξ)]` for the jump magnitude ξ.
    pub fn transform(&self, z: Complex64) -> Complex64 {
        match *self {
            JumpLaw::Exponential { mean } => {
                let rate = 1.0 / mean;
                rate / (rate + z)
            }
            JumpLaw::Fixed { size } => (-z * size).exp(),
        }
    }

    fn transform_derivative(&self, lam: f64) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => {
                let rate = 1.0 / mean;
                -rate / ((rate + lam) * (rate + lam))
            }
            JumpLaw::Fixed { size } => -size * (-lam * size).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => mean,
            JumpLaw::Fixed { size } => size,
        }
    }
}

/// Spectrally negative Lévy process: linear drift, Brownian component and
/// compound-Poisson downward jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnlpModel {
    pub drift: f64,
    #[serde(default)]
    pub gaussian: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default = "default_jump_law")]
    pub jump_law: JumpLaw,
}

fn default_jump_law() -> JumpLaw {
    JumpLaw::Exponential { mean: 1.0 }
}

impl SnlpModel {
    pub fn brownian(drift: f64, gaussian: f64) -> Self {
        SnlpModel { drift, gaussian, jump_rate: 0.0, jump_law: default_jump_law() }
    }

    /// Cramér–Lundberg surplus: premium rate `drift`, exponential claims.
    pub fn cramer_lundberg(drift: f64, jump_rate: f64, mean_jump: f64) -> Self {
        SnlpModel { drift, gaussian: 0.0, jump_rate, jump_law: JumpLaw::Exponential { mean: mean_jump } }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.drift.is_finite() && self.gaussian.is_finite() && self.jump_rate.is_finite();
        if !finite {
            return Err(ScaleError::InvalidModel("non-finite parameter".into()));
        }
        if self.gaussian < 0.0 {
            return Err(ScaleError::InvalidModel(format!("gaussian coefficient must be >= 0, got {}", self.gaussian)));
        }
        if self.jump_rate < 0.0 {
            return Err(ScaleError::InvalidModel(format!("jump rate must be >= 0, got {}", self.jump_rate)));
        }
        if self.has_jumps() {
            self.jump_law.validate()?;
        }
        if !(self.gaussian > 0.0 || self.drift > 0.0) {
            return Err(ScaleError::InvalidModel("paths are non-increasing: need gaussian > 0 or drift > 0".into()));
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        self.jump_rate > 0.0
    }

    /// Paths of bounded variation (no Brownian component).
    pub fn bounded_variation(&self) -> bool {
        self.gaussian == 0.0
    }

    /// Laplace exponent on the complex plane (right half plane).
    pub fn psi_complex(&self, z: Complex64) -> Complex64 {
        let mut v = self.drift * z + 0.5 * self.gaussian * self.gaussian * z * z;
        if self.has_jumps() {
            v += self.jump_rate * (self.jump_law.transform(z) - 1.0);
        }
        v
    }

    fn psi_unchecked(&self, lam: f64) -> f64 {
        if lam == 0.0 {
            return 0.0;
        }
        self.psi_complex(Complex64::new(lam, 0.0)).re
    }

    fn psi_prime_unchecked(&self, lam: f64) -> f64 {
        let mut d = self.drift + self.gaussian * self.gaussian * lam;
        if self.has_jumps() {
            d += self.jump_rate * self.jump_law.transform_derivative(lam);
        }
        d
    }

    /// Laplace exponent `Ψ(λ) = log E[exp(λ X_1)]` for `λ >= 0`.
    pub fn psi(&self, lam: f64) -> Result<f64> {
        self.validate()?;
        if !(lam >= 0.0) {
            return Err(ScaleError::Domain(format!("psi needs lambda >= 0, got {lam}")));
        }
        Ok(self.psi_unchecked(lam))
    }

    /// Derivative `Ψ'(λ)`; at `λ = 0` this is the right derivative.
    pub fn psi_prime(&self, lam: f64) -> Result<f64> {
        self.validate()?;
        if !(lam >= 0.0) {
            return Err(ScaleError::Domain(format!("psi' needs lambda >= 0, got {lam}")));
        }
        Ok(self.psi_prime_unchecked(lam))
    }

    /// Right inverse `Φ(q)`: the largest root of `Ψ(λ) = q`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        self.validate()?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(ScaleError::Domain(format!("phi needs q >= 0, got {q}")));
        }
        if q == 0.0 && self.psi_prime_unchecked(0.0) >= 0.0 {
            return Ok(0.0);
        }
        largest_convex_root(|l| self.psi_unchecked(l) - q, |l| self.psi_prime_unchecked(l))
    }
}

/// Drift or volatility coefficient of a diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `intercept + slope · x`.
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// Piecewise-linear interpolation of `(x, y)` nodes with strictly
    /// increasing `x`; constant beyond the end nodes.
    Table {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Linear { intercept, slope } => intercept + slope * t,
            Coefficient::Table { x, y } => {
                let n = x.len();
                if t <= x[0] {
                    return y[0];
                }
                if t >= x[n - 1] {
                    return y[n - 1];
                }
                let i = x.partition_point(|v| *v <= t) - 1;
                let w = (t - x[i]) / (x[i + 1] - x[i]);
                y[i] + w * (y[i + 1] - y[i])
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Coefficient::Constant { value } if !value.is_finite() => {
                Err(ScaleError::InvalidModel(format!("{name}: non-finite constant")))
            }
            Coefficient::Linear { intercept, slope } if !(intercept.is_finite() && slope.is_finite()) => {
                Err(ScaleError::InvalidModel(format!("{name}: non-finite linear coefficients")))
            }
            Coefficient::Table { x, y } => {
                if x.len() < 2 || x.len() != y.len() {
                    return Err(ScaleError::InvalidModel(format!(
                        "{name}: table needs >= 2 nodes and matching lengths"
                    )));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(ScaleError::InvalidModel(format!(
                        "{name}: table abscissae must be strictly increasing"
                    )));
                }
                if x.iter().chain(y).any(|v| !v.is_finite()) {
                    return Err(ScaleError::InvalidModel(format!("{name}: non-finite table entry")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The coefficient seen through `u ↦ -u`, optionally with its sign flipped.
    fn reflected(&self, negate: bool) -> Coefficient {
        let sign = if negate { -1.0 } else { 1.0 };
        match self {
            Coefficient::Constant { value } => Coefficient::Constant { value: sign * value },
            Coefficient::Linear { intercept, slope } => {
                Coefficient::Linear { intercept: sign * intercept, slope: -sign * slope }
            }
            Coefficient::Table { x, y } => Coefficient::Table {
                x: x.iter().rev().map(|v| -v).collect(),
                y: y.iter().rev().map(|v| sign * v).collect(),
            },
        }
    }
}

/// One-dimensional diffusion `dX = μ(X)dt + σ(X)dB` on an open interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    pub left: f64,
    pub right: f64,
    pub mu: Coefficient,
    pub sigma: Coefficient,
    /// Point where the scale function is pinned to zero; every table derived
    /// from this model shares it so that scale functions at different base
    /// points are normalized consistently.
    #[serde(default)]
    pub scale_anchor: f64,
    /// Informational only.
    #[serde(default)]
    pub boundary_behavior: Option<String>,
}

impl DiffusionModel {
    /// Brownian motion with constant drift and volatility on the whole line.
    pub fn brownian(mu: f64, sigma: f64) -> Self {
        DiffusionModel {
            left: f64::NEG_INFINITY,
            right: f64::INFINITY,
            mu: Coefficient::constant(mu),
            sigma: Coefficient::constant(sigma),
            scale_anchor: 0.0,
            boundary_behavior: None,
        }
    }

    /// Ornstein–Uhlenbeck: `μ(x) = rate·(level - x)`, constant σ.
    pub fn ornstein_uhlenbeck(rate: f64, level: f64, sigma: f64) -> Self {
        DiffusionModel {
            mu: Coefficient::Linear { intercept: rate * level, slope: -rate },
            ..Self::brownian(0.0, sigma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.left < self.right) || self.left.is_nan() || self.right.is_nan() {
            return Err(ScaleError::InvalidModel(format!("interval ({}, {}) is empty", self.left, self.right)));
        }
        self.mu.validate("mu")?;
        self.sigma.validate("sigma")?;
        if !self.in_interior(self.scale_anchor) {
            return Err(ScaleError::InvalidModel(format!("scale anchor {} outside the interval", self.scale_anchor)));
        }
        Ok(())
    }

    pub fn in_interior(&self, x: f64) -> bool {
        x > self.left && x < self.right
    }

    pub fn mu_at(&self, x: f64) -> f64 {
        self.mu.eval(x)
    }

    pub fn sigma_at(&self, x: f64) -> f64 {
        self.sigma.eval(x)
    }

    /// Law of `-X`: reflected interval, `μ̂(u) = -μ(-u)`, `σ̂(u) = σ(-u)`.
    pub fn reflected(&self) -> DiffusionModel {
        DiffusionModel {
            left: -self.right,
            right: -self.left,
            mu: self.mu.reflected(true),
            sigma: self.sigma.reflected(false),
            scale_anchor: -self.scale_anchor,
            boundary_behavior: self.boundary_behavior.clone(),
        }
    }

    fn log_scale_integrand(&self, u: f64) -> Result<f64> {
        let sig = self.sigma_at(u);
        if !(sig > 0.0) {
            return Err(ScaleError::InvalidModel(format!("sigma({u}) = {sig} is not positive")));
        }
        let v = 2.0 * self.mu_at(u) / (sig * sig);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ScaleError::NonFiniteQuadrature { x: u })
        }
    }

    /// Mass `m((lo, hi])` of the speed measure.
    pub fn speed_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        const PIECES: usize = 64;
        let grid: Vec<f64> = (0..=PIECES).map(|i| lo + (hi - lo) * i as f64 / PIECES as f64).collect();
        let t = derive_scale_speed(self, self.scale_anchor, &grid)?;
        let h = (hi - lo) / PIECES as f64;
        Ok(*cumulative_simpson(&t.speed_density, h).last().unwrap())
    }
}

/// Either catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Levy(SnlpModel),
    Diffusion(DiffusionModel),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Levy(m) => m.validate(),
            Model::Diffusion(m) => m.validate(),
        }
    }

    /// Mass of `(lo, hi]` under the reference measure: Lebesgue for Lévy
    /// models, the speed measure for diffusions.
    pub fn reference_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        match self {
            Model::Levy(_) => Ok(hi - lo),
            Model::Diffusion(m) => m.speed_mass(lo, hi),
        }
    }

    /// `true` when `x` lies in the open state space.
    pub fn in_state_space(&self, x: f64) -> bool {
        match self {
            Model::Levy(_) => x.is_finite(),
            Model::Diffusion(m) => m.in_interior(x),
        }
    }
}

impl From<SnlpModel> for Model {
    fn from(m: SnlpModel) -> Self {
        Model::Levy(m)
    }
}

impl From<DiffusionModel> for Model {
    fn from(m: DiffusionModel) -> Self {
        Model::Diffusion(m)
    }
}

/// Scale function `s`, its density `s'` and the speed density `m'` tabulated
/// on a grid.
#[derive(Debug, Clone)]
pub struct ScaleSpeedTable {
    pub x: Vec<f64>,
    pub scale: Vec<f64>,
    pub scale_density: Vec<f64>,
    pub speed_density: Vec<f64>,
}

// Sub-intervals per grid interval for the scale density; the log-scale
// integrand is sampled twice as finely so both integrals are Simpson.
const REFINE: usize = 4;

/// Derives `s`, `s'` and `m'` on `grid` with `s(anchor) = 0`.
///
/// `s'(x) = exp(-∫_anchor^x 2μ/σ²)`, `s = ∫ s'` and `m' = 2/(σ² s')`; both
/// integrals use composite Simpson on the grid refined four-fold.
pub fn derive_scale_speed(model: &DiffusionModel, anchor: f64, grid: &[f64]) -> Result<ScaleSpeedTable> {
    model.validate()?;
    if grid.is_empty() {
        return Err(ScaleError::Grid("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScaleError::Grid("grid must be strictly increasing".into()));
    }
    if let Some(bad) = grid.iter().chain(std::iter::once(&anchor)).find(|v| !model.in_interior(**v)) {
        return Err(ScaleError::Grid(format!(
            "point {bad} outside the interval interior ({}, {})",
            model.left, model.right
        )));
    }

    // Merge the anchor into the node set and march outwards from it.
    let mut nodes = grid.to_vec();
    let anchor_idx = match nodes.binary_search_by(|v| v.partial_cmp(&anchor).unwrap()) {
        Ok(i) => i,
        Err(i) => {
            nodes.insert(i, anchor);
            i
        }
    };
    let n = nodes.len();
    let mut log_s = vec![0.0; n]; // ∫_anchor^x 2μ/σ²
    let mut s = vec![0.0; n];

    for i in anchor_idx..n - 1 {
        let (d_log, d_s) = interval_increments(model, nodes[i], nodes[i + 1], log_s[i])?;
        log_s[i + 1] = log_s[i] + d_log;
        s[i + 1] = s[i] + d_s;
    }
    for i in (0..anchor_idx).rev() {
        // Integrate over [x_i, x_{i+1}] with the log-scale known at the right end.
        let (d_log, _) = interval_increments(model, nodes[i], nodes[i + 1], 0.0)?;
        log_s[i] = log_s[i + 1] - d_log;
        let (_, d_s) = interval_increments(model, nodes[i], nodes[i + 1], log_s[i])?;
        s[i] = s[i + 1] - d_s;
    }

    let mut out = ScaleSpeedTable {
        x: Vec::with_capacity(grid.len()),
        scale: Vec::with_capacity(grid.len()),
        scale_density: Vec::with_capacity(grid.len()),
        speed_density: Vec::with_capacity(grid.len()),
    };
    let inserted = grid.len() != n;
    for i in 0..n {
        if inserted && i == anchor_idx {
            continue;
        }
        let x = nodes[i];
        let ds = (-log_s[i]).exp();
        let sig = model.sigma_at(x);
        let dm = 2.0 / (sig * sig * ds);
        if !(ds.is_finite() && ds > 0.0 && dm.is_finite() && dm > 0.0 && s[i].is_finite()) {
            return Err(ScaleError::NonFiniteQuadrature { x });
        }
        out.x.push(x);
        out.scale.push(s[i]);
        out.scale_density.push(ds);
        out.speed_density.push(dm);
    }
    Ok(out)
}

/// Increments of the log-scale integral and of `s` over `[lo, hi]`, given the
/// log-scale integral at `lo`.
fn interval_increments(model: &DiffusionModel, lo: f64, hi: f64, log_at_lo: f64) -> Result<(f64, f64)> {
    let fine = 2 * REFINE;
    let h = (hi - lo) / fine as f64;
    let g: Vec<f64> = (0..=fine).map(|k| model.log_scale_integrand(lo + h * k as f64)).collect::<Result<_>>()?;
    let cum_log = cumulative_simpson(&g, h);
    let dens: Vec<f64> = cum_log.iter().map(|c| (-(log_at_lo + c)).exp()).collect();
    if let Some(k) = dens.iter().position(|d| !d.is_finite()) {
        return Err(ScaleError::NonFiniteQuadrature { x: lo + 2.0 * h * k as f64 });
    }
    let cum_s = cumulative_simpson(&dens, 2.0 * h);
    let d_s = *cum_s.last().unwrap();
    if !d_s.is_finite() {
        return Err(ScaleError::NonFiniteQuadrature { x: hi });
    }
    Ok((*cum_log.last().unwrap(), d_s))
}
