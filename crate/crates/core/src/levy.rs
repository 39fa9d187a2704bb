//! q-scale functions `W^{(q)}`, `Z^{(q)}` and the potential density
//! `r^{(q)}` of a spectrally negative Lévy process.
//!
//! `W^{(q)}` is zero on the negative half line and on `[0, ∞)` is the
//! function whose Laplace transform is `1/(Ψ(β) - q)` for `β > Φ(q)`. Two
//! evaluation routes exist:
//!
//! * closed form: partial fractions when the transform is rational (no
//!   jumps, or exponentially distributed jumps), and a finite series for
//!   fixed-size jumps without a Brownian part;
//! * numerical inversion of the tilted function `e^{-Φ(q)x} W^{(q)}(x)`, whose
//!   transform `1/(Ψ(β + Φ(q)) - q)` has abscissa of convergence zero.
//!
//! Both routes return the right-continuous version: for bounded-variation
//! models `W^{(q)}(0) = 1/drift`, otherwise `W^{(q)}(0) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaleError};
use crate::laplace::{invert, EulerParams};
use crate::model::{JumpLaw, SnlpModel};
use crate::numerics::poly::{Poly, RationalInverse};
use crate::numerics::quad::adaptive_gk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    ClosedForm,
    LaplaceInversion,
}

#[derive(Debug, Clone)]
enum ClosedForm {
    Rational { w: RationalInverse, z: RationalInverse },
    // Fixed jump size d, no Brownian part:
    // W(x) = Σ_k (-λ)^k (x - kd)_+^k e^{a(x - kd)} / (c^{k+1} k!), a = (λ + q)/c.
    FixedSeries { c: f64, lambda: f64, d: f64, a: f64 },
}

// The series alternates; beyond this ratio of absolute to signed sum the
// cancellation costs more than about six digits and inversion takes over.
const SERIES_CANCELLATION_LIMIT: f64 = 1e6;

impl ClosedForm {
    fn w(&self, x: f64) -> Option<f64> {
        match *self {
            ClosedForm::Rational { ref w, .. } => Some(w.eval(x)),
            ClosedForm::FixedSeries { c, lambda, d, a } => {
                let mut sum = 0.0;
                let mut abs_sum = 0.0;
                let mut k = 0usize;
                // Running factor (λ/c)^k / (c k!) without the power of (x - kd).
                let mut coef = 1.0 / c;
                while (k as f64) * d < x {
                    let u = x - k as f64 * d;
                    let term = coef * u.powi(k as i32) * (a * u).exp();
                    sum += if k.is_multiple_of(2) { term } else { -term };
                    abs_sum += term;
                    k += 1;
                    coef *= lambda / (c * k as f64);
                }
                (abs_sum <= SERIES_CANCELLATION_LIMIT * sum.abs() && sum.is_finite()).then_some(sum)
            }
        }
    }

    fn w_tilted(&self, x: f64, phi: f64) -> Option<f64> {
        match self {
            ClosedForm::Rational { w, .. } => Some(w.eval_shifted(x, phi)),
            ClosedForm::FixedSeries { .. } => self.w(x).map(|v| (-phi * x).exp() * v),
        }
    }
}

/// Scale functions of one model at one discount rate `q`.
#[derive(Debug, Clone)]
pub struct LevyScale {
    model: SnlpModel,
    q: f64,
    phi_q: f64,
    method: ScaleMethod,
    inversion: EulerParams,
    closed: Option<ClosedForm>,
}

// Relative distance below which computed poles are merged into one
// multiple pole.
const POLE_CLUSTER_TOL: f64 = 1e-6;

impl LevyScale {
    /// Uses the closed form when the model admits one, inversion otherwise.
    pub fn new(model: SnlpModel, q: f64) -> Result<Self> {
        let method =
            if closed_form_available(&model) { ScaleMethod::ClosedForm } else { ScaleMethod::LaplaceInversion };
        Self::with_method(model, q, method, EulerParams::default())
    }

    pub fn with_method(model: SnlpModel, q: f64, method: ScaleMethod, inversion: EulerParams) -> Result<Self> {
        model.validate()?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(ScaleError::Domain(format!("q must be >= 0, got {q}")));
        }
        let phi_q = model.phi(q)?;
        let closed = match method {
            ScaleMethod::ClosedForm => Some(build_closed_form(&model, q).ok_or_else(|| {
                ScaleError::InvalidModel(
                    "closed form needs no jumps, exponential jumps, or fixed jumps without a Brownian part".into(),
                )
            })?),
            ScaleMethod::LaplaceInversion => None,
        };
        Ok(LevyScale { model, q, phi_q, method, inversion, closed })
    }

    pub fn model(&self) -> &SnlpModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn method(&self) -> ScaleMethod {
        self.method
    }

    /// `W^{(q)}(0)`: `1/drift` for bounded variation, zero otherwise.
    pub fn w_at_zero(&self) -> f64 {
        if self.model.bounded_variation() {
            1.0 / self.model.drift
        } else {
            0.0
        }
    }

    /// `e^{-Φ(q)x} W^{(q)}(x)`; finite for all `x` where `W` itself may
    /// overflow.
    pub fn w_tilted(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.w_at_zero());
        }
        if let Some(v) = self.closed.as_ref().and_then(|c| c.w_tilted(x, self.phi_q)) {
            return Ok(v);
        }
        let (model, phi, q) = (self.model, self.phi_q, self.q);
        let transform = move |b: Complex64| 1.0 / (model.psi_complex(b + phi) - q);
        Ok(invert(transform, x, &self.inversion)?.value)
    }

    /// `W^{(q)}(x)`.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.w_at_zero());
        }
        if let Some(v) = self.closed.as_ref().and_then(|c| c.w(x)) {
            return Ok(v);
        }
        Ok((self.phi_q * x).exp() * self.w_tilted(x)?)
    }

    /// `Z^{(q)}(x) = 1 + q ∫_0^x W^{(q)}(u) du`, and 1 for `x <= 0`.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x <= 0.0 || self.q == 0.0 {
            return Ok(1.0);
        }
        if let Some(ClosedForm::Rational { z, .. }) = &self.closed {
            return Ok(z.eval(x));
        }
        let tol = 1e-11 * (1.0 + self.w(x)? * x);
        let breaks = self.kinks(x);
        let pieces = (breaks.len() - 1) as f64;
        let mut integral = 0.0;
        for w in breaks.windows(2) {
            integral += adaptive_gk(|u| self.w(u), w[0], w[1], tol / pieces, 40)?;
        }
        Ok(1.0 + self.q * integral)
    }

    /// `Φ'(q)` by central differences with step `1e-5·max(1, q)`.
    pub fn phi_prime_central(&self) -> Result<f64> {
        if !(self.q > 0.0) {
            return Err(ScaleError::Domain("Φ'(q) needs q > 0".into()));
        }
        let h = (1e-5 * self.q.max(1.0)).min(0.5 * self.q);
        let up = self.model.phi(self.q + h)?;
        let down = self.model.phi(self.q - h)?;
        Ok((up - down) / (2.0 * h))
    }

    /// `Φ'(q) = 1/Ψ'(Φ(q))`. At `q = 0` this is finite unless `Ψ'(Φ(0)) = 0`.
    pub fn phi_prime_implicit(&self) -> Result<f64> {
        let slope = self.model.psi_prime(self.phi_q)?;
        if !(slope > 0.0) {
            return Err(ScaleError::Domain(format!("Φ'({}) is infinite", self.q)));
        }
        Ok(1.0 / slope)
    }

    /// Right-continuous potential density `r^{(q)}(x)` of the process
    /// started at 0, normalized by `r^{(q)}(0+) = Φ'(q)`.
    ///
    /// `x = 0.0` returns the right limit and `x = -0.0` the left one, which
    /// differ by `W(0)` for bounded-variation models. At `q = 0` the central
    /// difference is unavailable and `r(0+)` comes from `1/Ψ'(Φ(0))`.
    pub fn resolvent_density(&self, x: f64) -> Result<f64> {
        let r0 = if self.q > 0.0 { self.phi_prime_central()? } else { self.phi_prime_implicit()? };
        if x > 0.0 || (x == 0.0 && x.is_sign_positive()) {
            Ok((-self.phi_q * x).exp() * r0)
        } else {
            let y = -x;
            Ok((self.phi_q * y).exp() * r0 - self.w(y)?)
        }
    }

    /// Both sides of `∫_0^∞ e^{-βx} W^{(q)}(x) dx = 1/(Ψ(β) - q)`.
    ///
    /// The integral is truncated at the first `M` (doubling from
    /// `1/(β - Φ(q))`) where the tail bound `2·e^{-(β-Φ)M} w̃(M)/(β-Φ)`
    /// drops below `1e-10`, with `w̃` the tilted scale function.
    pub fn laplace_check(&self, beta: f64) -> Result<(f64, f64)> {
        let gap = beta - self.phi_q;
        if !(gap > 0.0) || !beta.is_finite() {
            return Err(ScaleError::Domain(format!("beta = {beta} must exceed Φ(q) = {}", self.phi_q)));
        }
        let rhs = 1.0 / (self.model.psi(beta)? - self.q);

        let mut upper = 1.0 / gap;
        loop {
            let tail = 2.0 * (-gap * upper).exp() * self.w_tilted(upper)? / gap;
            if tail < 1e-10 * rhs.min(1.0) || upper > 1e6 {
                break;
            }
            upper *= 2.0;
        }

        let integrand = |x: f64| -> Result<f64> { Ok((-gap * x).exp() * self.w_tilted(x)?) };
        let tol = 1e-10 * rhs;
        let breaks = self.kinks(upper);
        let pieces = (breaks.len() - 1) as f64;
        let mut lhs = 0.0;
        for w in breaks.windows(2) {
            lhs += adaptive_gk(integrand, w[0], w[1], tol / pieces, 40)?;
        }
        Ok((lhs, rhs))
    }

    // Breakpoints 0, d, 2d, ... , upper: W has a kink at every multiple of a
    // fixed jump size, and quadrature panels should not straddle one.
    fn kinks(&self, upper: f64) -> Vec<f64> {
        let mut breaks = vec![0.0];
        if let (true, JumpLaw::Fixed { size }) = (self.model.has_jumps(), self.model.jump_law) {
            let mut k = size;
            while k < upper && breaks.len() < 200 {
                breaks.push(k);
                k += size;
            }
        }
        breaks.push(upper);
        breaks
    }
}

fn closed_form_available(model: &SnlpModel) -> bool {
    !model.has_jumps()
        || matches!(model.jump_law, JumpLaw::Exponential { .. })
        || (model.gaussian == 0.0 && matches!(model.jump_law, JumpLaw::Fixed { .. }))
}

// Rational transforms of W and Z:
//   no jumps:         W ↦ 1/(Ψ - q),   Z ↦ (c + σ²β/2)/(Ψ - q)
//   exponential jumps (rate ρ): multiply through by (ρ + β), using
//   Ψ(β)(ρ + β) = β[(c + σ²β/2)(ρ + β) - λ].
fn build_closed_form(model: &SnlpModel, q: f64) -> Option<ClosedForm> {
    if !closed_form_available(model) {
        return None;
    }
    if let (true, JumpLaw::Fixed { size }) = (model.has_jumps(), model.jump_law) {
        let (c, lambda) = (model.drift, model.jump_rate);
        return Some(ClosedForm::FixedSeries { c, lambda, d: size, a: (lambda + q) / c });
    }
    let c = model.drift;
    let half_var = 0.5 * model.gaussian * model.gaussian;
    let diffusive = Poly::new(vec![-q, c, half_var]);
    let slope = Poly::new(vec![c, half_var]);
    let (w_num, z_num, den) = if model.has_jumps() {
        let rho = 1.0 / model.jump_law.mean();
        let lin = Poly::new(vec![rho, 1.0]);
        let den = diffusive.mul(&lin).add(&Poly::new(vec![0.0, -model.jump_rate]));
        let z_num = slope.mul(&lin).add(&Poly::new(vec![-model.jump_rate]));
        (lin, z_num, den)
    } else {
        (Poly::new(vec![1.0]), slope, diffusive)
    };
    Some(ClosedForm::Rational {
        w: RationalInverse::new(&w_num, &den, POLE_CLUSTER_TOL),
        z: RationalInverse::new(&z_num, &den, POLE_CLUSTER_TOL),
    })
}
