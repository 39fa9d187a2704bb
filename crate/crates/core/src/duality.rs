//! Dual pairs and the two duality checks.
//!
//! A spectrally negative Lévy process `X` is in duality with `X̂ = -X`
//! relative to Lebesgue measure, so the reflected dual `-X̂` is `X` itself.
//! A diffusion is self-dual relative to its speed measure, so `-X̂` is the
//! reflected diffusion `μ̂(u) = -μ(-u)`, `σ̂(u) = σ(-u)`.
//!
//! The symmetry `W_X(x, y) = W_{-X̂}(-y, -x)` is checked with two independent
//! solver runs. The local-time duality
//! `E_x[∫e^{-qt} dL^{X,y}] = E_y[∫e^{-qt} dL^{X̂,x}]` is checked with two
//! independent Monte Carlo runs, the second one simulating `-X̂` from `-y` on
//! `(-a, -b)` with its band at `-x`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaleError};
use crate::exit::{provider_for, ExitSpec};
use crate::mc::{derive_seed, estimate_green_density, McConfig};
use crate::model::{DiffusionModel, Model};
use crate::report::VerificationRow;
use crate::verify::{band_bias, step_bias, DUALITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMeasure {
    Lebesgue,
    Speed,
}

impl ReferenceMeasure {
    pub fn of(model: &Model) -> Self {
        match model {
            Model::Levy(_) => ReferenceMeasure::Lebesgue,
            Model::Diffusion(_) => ReferenceMeasure::Speed,
        }
    }
}

/// A forward model together with the reflection `-X̂` of its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    forward: Model,
    reflected: Model,
    measure: ReferenceMeasure,
}

impl DualPair {
    /// The known dual of `model`.
    pub fn new(model: Model) -> Result<Self> {
        model.validate()?;
        let reflected = match &model {
            Model::Levy(m) => Model::Levy(*m),
            Model::Diffusion(m) => Model::Diffusion(reflect_model(m)?),
        };
        Ok(DualPair { measure: ReferenceMeasure::of(&model), forward: model, reflected })
    }

    /// A pair from explicit parts. Both must live in the same catalog so that
    /// they share one reference measure.
    pub fn from_parts(forward: Model, reflected: Model) -> Result<Self> {
        forward.validate()?;
        reflected.validate()?;
        let measure = ReferenceMeasure::of(&forward);
        if measure != ReferenceMeasure::of(&reflected) {
            return Err(ScaleError::InvalidModel("dual pair mixes Lebesgue and speed reference measures".into()));
        }
        Ok(DualPair { forward, reflected, measure })
    }

    pub fn forward(&self) -> &Model {
        &self.forward
    }

    pub fn reflected(&self) -> &Model {
        &self.reflected
    }

    pub fn measure(&self) -> ReferenceMeasure {
        self.measure
    }
}

/// Law of `-X` for a diffusion `X`.
pub fn reflect_model(model: &DiffusionModel) -> Result<DiffusionModel> {
    model.validate()?;
    Ok(model.reflected())
}

/// `max |W_X(x, y) - W_{-X̂}(-y, -x)|` over `points` (each with `y < x`).
///
/// Each side comes from its own provider; for diffusions each evaluation is
/// a separate Volterra solve with step `step`.
pub fn check_scale_symmetry(pair: &DualPair, q: f64, points: &[(f64, f64)], step: f64) -> Result<f64> {
    let fwd = provider_for(&pair.forward, q, step)?;
    let bwd = provider_for(&pair.reflected, q, step)?;
    let mut worst = 0.0f64;
    for &(x, y) in points {
        if !(y < x) {
            return Err(ScaleError::Domain(format!("symmetry points need y < x, got ({x}, {y})")));
        }
        let lhs = fwd.w(x, y)?;
        let rhs = bwd.w(-y, -x)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// An `n × n` set of test points on the window `(b, a)` with every `y`
/// below every `x`: `x` runs over the upper half, `y` over the lower half.
pub fn symmetry_grid(b: f64, a: f64, n: usize) -> Vec<(f64, f64)> {
    let w = a - b;
    let n = n.max(1);
    let h = 0.5 / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push((b + w * (0.5 + h * i as f64), b + w * h * j as f64));
        }
    }
    pts
}

/// Both discounted local-time expectations by Monte Carlo.
///
/// The row's `analytic` field holds the forward estimate and `oracle` the
/// reflected-dual estimate. The budget is three combined standard errors
/// plus each side's band-smoothing and step bias allowances.
pub fn check_local_time_duality(
    pair: &DualPair,
    spec: &ExitSpec,
    y: f64,
    cfg: &McConfig,
    step: f64,
) -> Result<VerificationRow> {
    spec.validate()?;
    let eps = cfg.band();
    let back_spec = ExitSpec::new(-spec.a, -spec.b, -y, spec.q)?;
    let fwd = estimate_green_density(&pair.forward, spec, y, cfg)?;
    // The backward run gets its own seed so the two estimates are independent.
    let back_cfg = McConfig { seed: derive_seed(cfg.seed, 1), ..*cfg };
    let bwd = estimate_green_density(&pair.reflected, &back_spec, -spec.x, &back_cfg)?;

    let fwd_sp = provider_for(&pair.forward, spec.q, step)?;
    let bwd_sp = provider_for(&pair.reflected, spec.q, step)?;
    let bias = band_bias(fwd_sp.as_ref(), spec, y, eps)?
        + band_bias(bwd_sp.as_ref(), &back_spec, -spec.x, eps)?
        + 2.0 * step_bias(cfg)
        + fwd.truncation_bias
        + bwd.truncation_bias;
    let combined = fwd.std_error.hypot(bwd.std_error);
    Ok(VerificationRow::new(
        format!("local-time duality (b={}, a={}, x={}, y={y}, q={})", spec.b, spec.a, spec.x, spec.q),
        DUALITY,
        fwd.mean,
        bwd.mean,
        3.0 * combined + bias,
    ))
}
