//! Two-argument scale functions `W^{(q)}(x, y)` and `Z^{(q)}(x, y)` of a
//! one-dimensional diffusion.
//!
//! For a base point `y`, `x ↦ W^{(q)}(x, y)` is the increasing solution `ψ_y`
//! of `(d/dm)(d/ds) ψ = q ψ` with `ψ_y(y) = 0` and `dψ_y/ds(y) = 1`, i.e. the
//! solution of the Volterra equation
//!
//! ```text
//! ψ_y(x) = s(x) - s(y) + q ∫_y^x (s(x) - s(u)) ψ_y(u) m'(u) du.
//! ```
//!
//! `Z^{(q)}(x, y) = 1 + q ∫_y^x W^{(q)}(x, z) m(dz)` solves the same equation
//! with forcing term 1 (the solution with value 1 and zero `s`-slope at `y`),
//! so both come out of one marching solver. Every base point shares the
//! model's scale anchor, which keeps `W(·, y)` for different `y` on one
//! normalization.

use crate::error::{Result, ScaleError};
use crate::model::{derive_scale_speed, DiffusionModel};
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::quad::simpson_nonuniform;

/// Solved scale functions of a diffusion from one base point.
#[derive(Debug, Clone)]
pub struct DiffusionScale {
    model: DiffusionModel,
    q: f64,
    base: f64,
    grid: Vec<f64>,
    psi_values: Vec<f64>,
    z_values: Vec<f64>,
    s_values: Vec<f64>,
    m_density: Vec<f64>,
    psi_interp: MonotoneCubic,
    z_interp: MonotoneCubic,
    min_step: f64,
}

/// Marches `u_k = forcing_k + q ∫_{x_0}^{x_k} (s_k - s(v)) u(v) m'(v) dv`
/// with the trapezoid rule. The kernel vanishes on the diagonal, so every
/// step is explicit; the separable kernel lets two running sums carry the
/// history.
fn march(grid: &[f64], s: &[f64], dm: &[f64], q: f64, forcing: impl Fn(usize) -> f64) -> Vec<f64> {
    let n = grid.len();
    let mut u = Vec::with_capacity(n);
    u.push(forcing(0));
    // Σ ω_j f_j and Σ ω_j s_j f_j over nodes strictly left of the current
    // one, with the trapezoid weights of [x_0, x_k].
    let mut sum_f = 0.0;
    let mut sum_sf = 0.0;
    for k in 1..n {
        let j = k - 1;
        let weight = if j == 0 { 0.5 * (grid[1] - grid[0]) } else { 0.5 * (grid[j + 1] - grid[j - 1]) };
        let f = u[j] * dm[j];
        sum_f += weight * f;
        sum_sf += weight * s[j] * f;
        u.push(forcing(k) + q * (s[k] * sum_f - sum_sf));
    }
    u
}

impl DiffusionScale {
    /// Solves for `ψ_base` and `Z(·, base)` on `grid` (`grid[0] == base`).
    pub fn solve(model: &DiffusionModel, q: f64, base: f64, grid: &[f64]) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(ScaleError::Domain(format!("q must be >= 0, got {q}")));
        }
        if grid.len() < 2 {
            return Err(ScaleError::Grid("need at least two nodes".into()));
        }
        if grid[0] != base {
            return Err(ScaleError::Grid(format!("grid starts at {} but the base point is {base}", grid[0])));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ScaleError::Grid("grid must be strictly increasing".into()));
        }
        let table = derive_scale_speed(model, model.scale_anchor, grid)?;
        let s0 = table.scale[0];
        let s: Vec<f64> = table.scale.iter().map(|v| v - s0).collect();
        let dm = table.speed_density;

        let psi = march(grid, &s, &dm, q, |k| s[k]);
        let z = march(grid, &s, &dm, q, |_| 1.0);
        if let Some(k) = psi.iter().chain(&z).position(|v| !v.is_finite()) {
            return Err(ScaleError::NonFiniteQuadrature { x: grid[k % grid.len()] });
        }

        let min_step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        Ok(DiffusionScale {
            model: model.clone(),
            q,
            base,
            psi_interp: MonotoneCubic::new(grid.to_vec(), psi.clone()),
            z_interp: MonotoneCubic::new(grid.to_vec(), z.clone()),
            grid: grid.to_vec(),
            psi_values: psi,
            z_values: z,
            s_values: s,
            m_density: dm,
            min_step,
        })
    }

    /// Solves on the uniform grid `base, base + step, ...` ending exactly at
    /// `right`.
    pub fn solve_uniform(model: &DiffusionModel, q: f64, base: f64, right: f64, step: f64) -> Result<Self> {
        Self::solve(model, q, base, &uniform_grid(base, right, step)?)
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn psi_values(&self) -> &[f64] {
        &self.psi_values
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    /// `s - s(base)` on the grid.
    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn m_density(&self) -> &[f64] {
        &self.m_density
    }

    pub fn right_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn check_args(&self, x: f64, y: f64) -> Result<Option<f64>> {
        if y != self.base {
            return Err(ScaleError::Domain(format!("scale solved from base {} cannot evaluate at y = {y}", self.base)));
        }
        if x - y <= self.min_step * 1e-9 {
            return Ok(None);
        }
        if x > self.right_end() {
            return Err(ScaleError::BeyondGrid { x, end: self.right_end() });
        }
        Ok(Some(x))
    }

    /// `W^{(q)}(x, y)`; `y` must be the base point.
    pub fn w(&self, x: f64, y: f64) -> Result<f64> {
        Ok(match self.check_args(x, y)? {
            None => 0.0,
            Some(x) => self.psi_interp.eval(x),
        })
    }

    /// `Z^{(q)}(x, y)`; `y` must be the base point.
    pub fn z(&self, x: f64, y: f64) -> Result<f64> {
        if self.q == 0.0 {
            return Ok(1.0);
        }
        Ok(match self.check_args(x, y)? {
            None => 1.0,
            Some(x) => self.z_interp.eval(x),
        })
    }
}

/// Uniform grid from `lo` to `hi` whose step is at most `step`.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(hi > lo) || !(step > 0.0) {
        return Err(ScaleError::Grid(format!("cannot grid [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    g[n] = hi;
    Ok(g)
}

/// Solves for `ψ_y` on the uniform grid from `y` to `right`.
pub fn solve_psi(model: &DiffusionModel, q: f64, base: f64, grid: &[f64]) -> Result<DiffusionScale> {
    DiffusionScale::solve(model, q, base, grid)
}

/// `W^{(q)}(x, y)` from a scale solved at base `y`.
pub fn w_diff(scale: &DiffusionScale, x: f64, y: f64) -> Result<f64> {
    scale.w(x, y)
}

/// `Z^{(q)}(x, y)` from a scale solved at base `y`.
pub fn z_diff(scale: &DiffusionScale, x: f64, y: f64) -> Result<f64> {
    scale.z(x, y)
}

/// `Z^{(q)}(x, y)` straight from its definition `1 + q ∫_y^x W(x, z) m(dz)`,
/// re-solving `ψ_z` from every quadrature node `z` of a uniform grid.
///
/// Quadratic in the node count; kept as an independent check on the forcing-1
/// route used by [`DiffusionScale::z`].
pub fn z_by_definition(model: &DiffusionModel, q: f64, x: f64, y: f64, step: f64) -> Result<f64> {
    if x <= y || q == 0.0 {
        return Ok(1.0);
    }
    let nodes = uniform_grid(y, x, step)?;
    let table = derive_scale_speed(model, model.scale_anchor, &nodes)?;
    let mut integrand = Vec::with_capacity(nodes.len());
    for (k, &z) in nodes.iter().enumerate() {
        let w = if k + 1 == nodes.len() {
            0.0
        } else {
            let sub = &nodes[k..];
            let scale = DiffusionScale::solve(model, q, z, sub)?;
            *scale.psi_values().last().unwrap()
        };
        integrand.push(w * table.speed_density[k]);
    }
    Ok(1.0 + q * simpson_nonuniform(&nodes, &integrand))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> DiffusionModel {
        DiffusionModel::brownian(0.0, 1.0)
    }

    #[test]
    fn q_zero_gives_scale_function() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.3, 0.7);
        let sc = DiffusionScale::solve_uniform(&m, 0.0, -0.5, 1.0, 0.01).unwrap();
        let table = derive_scale_speed(&m, m.scale_anchor, sc.grid()).unwrap();
        for (k, v) in sc.psi_values().iter().enumerate() {
            assert_eq!(*v, table.scale[k] - table.scale[0]);
        }
        assert_eq!(sc.psi_values()[0], 0.0);
        assert_eq!(sc.z(0.5, -0.5).unwrap(), 1.0);
    }

    #[test]
    fn sinh_and_cosh_for_brownian_motion() {
        let sc = DiffusionScale::solve_uniform(&bm(), 0.5, 0.0, 1.5, 1e-3).unwrap();
        assert!((sc.w(1.0, 0.0).unwrap() - 1f64.sinh()).abs() < 1e-6);
        assert!((sc.z(1.0, 0.0).unwrap() - 1f64.cosh()).abs() < 1e-6);
        assert_eq!(sc.w(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(sc.w(-0.3, 0.0).unwrap(), 0.0);
        assert_eq!(sc.z(-0.3, 0.0).unwrap(), 1.0);
        // Between nodes.
        assert!((sc.w(0.70005, 0.0).unwrap() - 0.70005f64.sinh()).abs() < 1e-6);
    }

    #[test]
    fn evaluation_errors() {
        let sc = DiffusionScale::solve_uniform(&bm(), 0.5, 0.0, 1.0, 0.01).unwrap();
        assert!(matches!(sc.w(1.5, 0.0), Err(ScaleError::BeyondGrid { .. })));
        assert!(matches!(sc.w(0.5, 0.1), Err(ScaleError::Domain(_))));
        // Round-off below the base is treated as the base itself.
        assert_eq!(sc.w(-1e-15, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn solve_rejects_bad_grids() {
        let bounded = DiffusionModel { left: -1.0, right: 1.0, ..bm() };
        assert!(DiffusionScale::solve(&bounded, 0.5, 0.0, &[0.0, 0.5, 1.0]).is_err());
        assert!(DiffusionScale::solve(&bm(), 0.5, 0.0, &[0.0, 0.5, 0.4]).is_err());
        assert!(DiffusionScale::solve(&bm(), 0.5, 0.1, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn second_order_convergence() {
        let err = |h: f64| {
            let sc = DiffusionScale::solve_uniform(&bm(), 0.5, 0.0, 1.0, h).unwrap();
            (sc.psi_values().last().unwrap() - 1f64.sinh()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn translation_covariance_for_constant_coefficients() {
        let m = DiffusionModel::brownian(-0.7, 1.3);
        let a = DiffusionScale::solve_uniform(&m, 0.8, -0.4, 0.6, 1e-3).unwrap();
        let b = DiffusionScale::solve_uniform(&m, 0.8, 0.3, 1.3, 1e-3).unwrap();
        // Translation changes s' by a constant factor e^{2μ Δ/σ²}; W is
        // proportional to it.
        let factor = (2.0 * 0.7 * 0.7 / (1.3f64 * 1.3)).exp();
        for d in [0.1, 0.37, 0.9] {
            let wa = a.w(-0.4 + d, -0.4).unwrap();
            let wb = b.w(0.3 + d, 0.3).unwrap();
            assert!((wa * factor - wb).abs() <= 1e-9 * wb, "{wa} {wb}");
        }
    }

    #[test]
    fn z_matches_definition() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 0.9);
        let sc = DiffusionScale::solve_uniform(&m, 0.7, -0.5, 0.8, 2e-3).unwrap();
        let direct = z_by_definition(&m, 0.7, 0.8, -0.5, 1e-2).unwrap();
        let via_forcing = sc.z(0.8, -0.5).unwrap();
        assert!((direct - via_forcing).abs() < 1e-4, "{direct} vs {via_forcing}");
    }

    #[test]
    fn psi_strictly_increasing() {
        let m = DiffusionModel::ornstein_uhlenbeck(2.0, -0.3, 0.5);
        let sc = DiffusionScale::solve_uniform(&m, 1.2, -1.0, 1.0, 5e-3).unwrap();
        assert!(sc.psi_values().windows(2).all(|w| w[1] > w[0]));
        assert!(sc.z_values().windows(2).all(|w| w[1] >= w[0]));
    }
}
