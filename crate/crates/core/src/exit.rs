//! Two-sided exit functionals expressed through scale functions.
//!
//! For `b < x < a`, with `T_a^+` the first passage above `a` and `T_b^-` the
//! first passage below `b`:
//!
//! * `E_x[e^{-qT_a^+}; T_a^+ < T_b^-] = W(x, b) / W(a, b)`
//! * `E_x[e^{-qT_b^-}; T_b^- < T_a^+] = Z(x, b) - W(x, b) Z(a, b) / W(a, b)`
//! * the discounted local time at `y` accumulated before exit has mean
//!   `W(x, b) W(a, y) / W(a, b) - W(x, y)`, the density of the killed
//!   resolvent with respect to the reference measure `m`.
//!
//! Everything here is written against [`ScaleProvider`], so the Lévy and the
//! diffusion backends share one implementation.

use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionScale;
use crate::error::{Result, ScaleError};
use crate::levy::LevyScale;
use crate::model::{derive_scale_speed, DiffusionModel, Model};
use crate::numerics::quad::simpson_nonuniform;

/// Window `(b, a)`, starting point `x` and discount rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSpec {
    pub b: f64,
    pub a: f64,
    pub x: f64,
    pub q: f64,
}

impl ExitSpec {
    pub fn new(b: f64, a: f64, x: f64, q: f64) -> Result<Self> {
        let spec = ExitSpec { b, a, x, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b < self.x && self.x < self.a) {
            return Err(ScaleError::Domain(format!("need b < x < a, got b={}, x={}, a={}", self.b, self.x, self.a)));
        }
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return Err(ScaleError::Domain(format!("q must be >= 0, got {}", self.q)));
        }
        Ok(())
    }

    /// Same window and discount with another starting point.
    pub fn with_x(&self, x: f64) -> Result<Self> {
        ExitSpec::new(self.b, self.a, x, self.q)
    }
}

/// Uniform access to `W^{(q)}(x, y)` and `Z^{(q)}(x, y)` for one `q`.
pub trait ScaleProvider: Sync {
    fn q(&self) -> f64;

    /// `W^{(q)}(x, y)`, zero for `x < y`.
    fn w(&self, x: f64, y: f64) -> Result<f64>;

    /// `Z^{(q)}(x, y)`, one for `x <= y`.
    fn z(&self, x: f64, y: f64) -> Result<f64>;

    /// Density of the reference measure `m` with respect to Lebesgue measure.
    fn reference_density(&self, y: f64) -> Result<f64>;
}

impl ScaleProvider for LevyScale {
    fn q(&self) -> f64 {
        LevyScale::q(self)
    }

    fn w(&self, x: f64, y: f64) -> Result<f64> {
        LevyScale::w(self, x - y)
    }

    fn z(&self, x: f64, y: f64) -> Result<f64> {
        LevyScale::z(self, x - y)
    }

    fn reference_density(&self, _y: f64) -> Result<f64> {
        Ok(1.0)
    }
}

/// Diffusion backend: solves `ψ_y` on demand on the grid `y, y + step, ...`
/// far enough to cover the requested `x`.
#[derive(Debug, Clone)]
pub struct DiffusionProvider {
    model: DiffusionModel,
    q: f64,
    step: f64,
}

impl DiffusionProvider {
    pub fn new(model: DiffusionModel, q: f64, step: f64) -> Result<Self> {
        model.validate()?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(ScaleError::Domain(format!("q must be >= 0, got {q}")));
        }
        if !(step > 0.0) {
            return Err(ScaleError::Grid(format!("step must be positive, got {step}")));
        }
        Ok(DiffusionProvider { model, q, step })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Scale functions from base `y`, solved at least up to `x`.
    pub fn scale_from(&self, y: f64, x: f64) -> Result<DiffusionScale> {
        let span = (x - y).max(self.step);
        let nodes = (span / self.step - 1e-9).ceil().max(1.0) as usize;
        let mut grid: Vec<f64> = (0..=nodes).map(|k| y + self.step * k as f64).collect();
        // Round-off may leave the last node a hair short of x.
        grid[nodes] = grid[nodes].max(x);
        if !self.model.in_interior(grid[nodes]) {
            grid[nodes] = x;
            if grid[nodes] <= grid[nodes - 1] {
                grid.remove(nodes - 1);
            }
        }
        DiffusionScale::solve(&self.model, self.q, y, &grid)
    }
}

impl ScaleProvider for DiffusionProvider {
    fn q(&self) -> f64 {
        self.q
    }

    fn w(&self, x: f64, y: f64) -> Result<f64> {
        if x <= y {
            return Ok(0.0);
        }
        self.scale_from(y, x)?.w(x, y)
    }

    fn z(&self, x: f64, y: f64) -> Result<f64> {
        if x <= y || self.q == 0.0 {
            return Ok(1.0);
        }
        self.scale_from(y, x)?.z(x, y)
    }

    fn reference_density(&self, y: f64) -> Result<f64> {
        Ok(derive_scale_speed(&self.model, self.model.scale_anchor, &[y])?.speed_density[0])
    }
}

/// Provider for either catalog; `step` is the Volterra grid step used for
/// diffusions and ignored for Lévy models.
pub fn provider_for(model: &Model, q: f64, step: f64) -> Result<Box<dyn ScaleProvider>> {
    Ok(match model {
        Model::Levy(m) => Box::new(LevyScale::new(*m, q)?),
        Model::Diffusion(m) => Box::new(DiffusionProvider::new(m.clone(), q, step)?),
    })
}

fn check(sp: &dyn ScaleProvider, spec: &ExitSpec) -> Result<f64> {
    spec.validate()?;
    if spec.q != sp.q() {
        return Err(ScaleError::Domain(format!(
            "exit spec has q = {} but the scale functions were built for q = {}",
            spec.q,
            sp.q()
        )));
    }
    let wab = sp.w(spec.a, spec.b)?;
    if !(wab > 0.0) || !wab.is_finite() {
        return Err(ScaleError::DegenerateWindow(wab));
    }
    Ok(wab)
}

/// `E_x[e^{-qT_a^+}; T_a^+ < T_b^-] = W(x, b) / W(a, b)`.
pub fn up_exit(sp: &dyn ScaleProvider, spec: &ExitSpec) -> Result<f64> {
    let wab = check(sp, spec)?;
    Ok(sp.w(spec.x, spec.b)? / wab)
}

/// `E_x[e^{-qT_b^-}; T_b^- < T_a^+] = Z(x, b) - W(x, b) Z(a, b) / W(a, b)`.
pub fn down_exit(sp: &dyn ScaleProvider, spec: &ExitSpec) -> Result<f64> {
    let wab = check(sp, spec)?;
    let ratio = sp.w(spec.x, spec.b)? / wab;
    Ok(sp.z(spec.x, spec.b)? - ratio * sp.z(spec.a, spec.b)?)
}

/// Discounted local time at `y` before exit, `W(x,b) W(a,y)/W(a,b) - W(x,y)`,
/// for `y` in `(b, a)`.
///
/// At `y = x` this uses `W(x, x)`, which is zero at regular points and the
/// constant `W(0) = 1/drift` for bounded-variation Lévy models; the result is
/// then the local time accumulated strictly after time zero.
pub fn green_density(sp: &dyn ScaleProvider, spec: &ExitSpec, y: f64) -> Result<f64> {
    if !(y > spec.b && y < spec.a) {
        return Err(ScaleError::Domain(format!("y = {y} outside the window ({}, {})", spec.b, spec.a)));
    }
    green_closed(sp, spec, y)
}

// Green density on the closed window [b, a] with the y-independent ratio
// W(x, b)/W(a, b) evaluated once.
struct Green<'a> {
    sp: &'a dyn ScaleProvider,
    spec: ExitSpec,
    ratio: f64,
}

impl<'a> Green<'a> {
    fn new(sp: &'a dyn ScaleProvider, spec: &ExitSpec) -> Result<Self> {
        let wab = check(sp, spec)?;
        Ok(Green { sp, spec: *spec, ratio: sp.w(spec.x, spec.b)? / wab })
    }

    fn at(&self, y: f64) -> Result<f64> {
        Ok(self.ratio * self.sp.w(self.spec.a, y)? - self.sp.w(self.spec.x, y)?)
    }

    // Limit as y decreases to x.
    fn right_limit_at_x(&self) -> Result<f64> {
        Ok(self.ratio * self.sp.w(self.spec.a, self.spec.x)?)
    }
}

fn green_closed(sp: &dyn ScaleProvider, spec: &ExitSpec, y: f64) -> Result<f64> {
    Green::new(sp, spec)?.at(y)
}

/// `E_x[∫_0^{exit} e^{-qt} f(X_t) dt] = ∫ f(y) G(x, y) m'(y) dy`.
///
/// `grid` spans `[b, a]`; `f` and `m_density` are sampled on it. When `x` is
/// a grid node the quadrature is split there, so the jump or kink of the
/// Green density at `y = x` does not degrade the composite Simpson rule.
pub fn killed_resolvent(
    sp: &dyn ScaleProvider,
    spec: &ExitSpec,
    grid: &[f64],
    f: &[f64],
    m_density: &[f64],
) -> Result<f64> {
    let green = Green::new(sp, spec)?;
    if grid.len() != f.len() || grid.len() != m_density.len() || grid.len() < 2 {
        return Err(ScaleError::Grid("grid, f and m_density must have equal length >= 2".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScaleError::Grid("grid must be strictly increasing".into()));
    }
    if grid[0] < spec.b || *grid.last().unwrap() > spec.a {
        return Err(ScaleError::Grid("grid must lie inside [b, a]".into()));
    }
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0)) {
        return Err(ScaleError::Domain(format!("f must be non-negative, found {v}")));
    }

    let integrand: Vec<f64> = grid
        .iter()
        .zip(f.iter().zip(m_density))
        .map(|(&y, (&fv, &mv))| if fv == 0.0 { Ok(0.0) } else { Ok(fv * green.at(y)? * mv) })
        .collect::<Result<_>>()?;

    match grid.iter().position(|&y| y == spec.x) {
        Some(k) if k > 0 && k + 1 < grid.len() => {
            let left = simpson_nonuniform(&grid[..=k], &integrand[..=k]);
            let mut right_vals = integrand[k..].to_vec();
            right_vals[0] = if f[k] == 0.0 { 0.0 } else { f[k] * green.right_limit_at_x()? * m_density[k] };
            Ok(left + simpson_nonuniform(&grid[k..], &right_vals))
        }
        _ => Ok(simpson_nonuniform(grid, &integrand)),
    }
}

/// `killed_resolvent` with `f ≡ 1` on a uniform grid of about `nodes`
/// intervals that contains `x`; the mean discounted time to exit.
pub fn mean_discounted_occupation(sp: &dyn ScaleProvider, spec: &ExitSpec, nodes: usize) -> Result<f64> {
    check(sp, spec)?;
    let nodes = nodes.max(4);
    let width = spec.a - spec.b;
    let left_n = (((spec.x - spec.b) / width * nodes as f64).round() as usize).max(2);
    let right_n = (nodes.saturating_sub(left_n)).max(2);
    let mut grid: Vec<f64> = (0..left_n).map(|i| spec.b + (spec.x - spec.b) * i as f64 / left_n as f64).collect();
    grid.extend((0..=right_n).map(|i| spec.x + (spec.a - spec.x) * i as f64 / right_n as f64));
    *grid.last_mut().unwrap() = spec.a;
    let f = vec![1.0; grid.len()];
    let m: Vec<f64> = grid.iter().map(|&y| sp.reference_density(y)).collect::<Result<_>>()?;
    killed_resolvent(sp, spec, &grid, &f, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SnlpModel;

    fn natural_bm(q: f64) -> DiffusionProvider {
        DiffusionProvider::new(DiffusionModel::brownian(0.0, 1.0), q, 1e-3).unwrap()
    }

    #[test]
    fn gamblers_ruin() {
        let sp = natural_bm(0.0);
        let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
        assert!((up_exit(&sp, &spec).unwrap() - 0.3).abs() < 1e-12);
        assert!((down_exit(&sp, &spec).unwrap() - 0.7).abs() < 1e-12);
        let near_top = spec.with_x(1.0 - 1e-12).unwrap();
        assert!((up_exit(&sp, &near_top).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sinh_ratio_for_brownian_motion() {
        let lv = LevyScale::new(SnlpModel::brownian(0.0, 1.0), 1.0).unwrap();
        let spec = ExitSpec::new(0.0, 1.0, 0.5, 1.0).unwrap();
        let r2 = 2f64.sqrt();
        let exact = (r2 * 0.5).sinh() / r2.sinh();
        assert!((up_exit(&lv, &spec).unwrap() - exact).abs() < 1e-12);
        assert!((exact - 0.396_64).abs() < 1e-5);
        let down = ((r2 * 0.5).sinh()) / r2.sinh();
        assert!((down_exit(&lv, &spec).unwrap() - down).abs() < 1e-12);
        let dp = natural_bm(1.0);
        assert!((up_exit(&dp, &spec).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn green_density_examples() {
        let sp = natural_bm(0.0);
        let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
        assert!((green_density(&sp, &spec, 0.7).unwrap() - 0.09).abs() < 1e-12);
        // Diagonal: W(x, x) = 0.
        assert!((green_density(&sp, &spec, 0.3).unwrap() - 0.21).abs() < 1e-12);
        assert!(green_density(&sp, &spec, 1.0).is_err());
        assert!(green_density(&sp, &spec, -0.1).is_err());
    }

    #[test]
    fn expected_exit_time() {
        let sp = natural_bm(0.0);
        let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.0).unwrap();
        let t = mean_discounted_occupation(&sp, &spec, 200).unwrap();
        assert!((t - 0.25).abs() < 1e-9, "{t}");
    }

    #[test]
    fn killed_resolvent_trivial_and_errors() {
        let sp = natural_bm(0.5);
        let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.5).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let m = vec![2.0; 11];
        assert_eq!(killed_resolvent(&sp, &spec, &grid, &[0.0; 11], &m).unwrap(), 0.0);
        let mut neg = vec![1.0; 11];
        neg[3] = -1.0;
        assert!(killed_resolvent(&sp, &spec, &grid, &neg, &m).is_err());
        assert!(killed_resolvent(&sp, &spec, &grid[..5], &[1.0; 11], &m).is_err());
    }

    #[test]
    fn chain_identity_on_cramer_lundberg() {
        // Bounded variation: the Green density jumps at y = x.
        let lv = LevyScale::new(SnlpModel::cramer_lundberg(1.5, 1.0, 1.0), 0.5).unwrap();
        let spec = ExitSpec::new(-2.0, 1.0, 0.0, 0.5).unwrap();
        let up = up_exit(&lv, &spec).unwrap();
        let down = down_exit(&lv, &spec).unwrap();
        let occ = mean_discounted_occupation(&lv, &spec, 3000).unwrap();
        assert!((up + down + 0.5 * occ - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mismatched_q_rejected() {
        let sp = natural_bm(0.5);
        let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.0).unwrap();
        assert!(up_exit(&sp, &spec).is_err());
        assert!(ExitSpec::new(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn degenerate_window_reported() {
        struct Zero;
        impl ScaleProvider for Zero {
            fn q(&self) -> f64 {
                0.0
            }
            fn w(&self, _: f64, _: f64) -> Result<f64> {
                Ok(0.0)
            }
            fn z(&self, _: f64, _: f64) -> Result<f64> {
                Ok(1.0)
            }
            fn reference_density(&self, _: f64) -> Result<f64> {
                Ok(1.0)
            }
        }
        let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.0).unwrap();
        assert!(matches!(up_exit(&Zero, &spec), Err(ScaleError::DegenerateWindow(_))));
    }
}
