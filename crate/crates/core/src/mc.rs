//! Monte Carlo path simulation: an oracle for the exit functionals that is
//! independent of every scale-function computation.
//!
//! Lévy paths are simulated as Brownian motion with drift between the
//! exponential jump epochs of the compound-Poisson part; without a Brownian
//! component the path is piecewise linear and is simulated exactly, crossing
//! times included. Diffusions use Euler–Maruyama. With `bridge_correction`
//! set, a Brownian-bridge draw between grid nodes detects barrier crossings
//! that the nodes miss, using the local volatility.
//!
//! Each path draws from its own ChaCha stream keyed by `(seed, path_index)`,
//! path results are collected in index order and reduced sequentially, so
//! estimates are bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaleError};
use crate::exit::ExitSpec;
use crate::model::{DiffusionModel, JumpLaw, Model, SnlpModel};

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    /// Time step Δt.
    pub step: f64,
    /// Hard time cap per path.
    pub horizon: f64,
    pub seed: u64,
    /// Half-width ε of the local-time band; `None` means `2·√Δt`.
    #[serde(default)]
    pub band_halfwidth: Option<f64>,
    #[serde(default = "yes")]
    pub bridge_correction: bool,
    /// Worker threads; 0 uses the ambient rayon pool.
    #[serde(default)]
    pub workers: usize,
}

fn yes() -> bool {
    true
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            step: 1e-4,
            horizon: 100.0,
            seed: 0x5ca1e,
            band_halfwidth: None,
            bridge_correction: true,
            workers: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(ScaleError::MonteCarlo("paths must be >= 1".into()));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(ScaleError::MonteCarlo(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon > 0.0) {
            return Err(ScaleError::MonteCarlo(format!("horizon must be positive, got {}", self.horizon)));
        }
        if let Some(eps) = self.band_halfwidth {
            if !(eps > 0.0) {
                return Err(ScaleError::MonteCarlo(format!("band half-width must be positive, got {eps}")));
            }
        }
        Ok(())
    }

    pub fn band(&self) -> f64 {
        self.band_halfwidth.unwrap_or(2.0 * self.step.sqrt())
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths_used: u64,
    /// Paths that reached the horizon before exiting; they contribute zero.
    pub truncated_paths: u64,
    pub seed: u64,
    /// One-sided bound on the bias from truncated paths: their share times
    /// the largest value a truncated path could have contributed.
    pub truncation_bias: f64,
}

impl McEstimate {
    /// Whether at least 99.9% of paths exited before the horizon.
    pub fn horizon_adequate(&self) -> bool {
        self.truncated_paths as f64 <= 1e-3 * self.paths_used as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitSide {
    Up,
    Down,
    Truncated,
}

/// Band `(lo, hi]` whose discounted occupation time is accumulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationBand {
    pub lo: f64,
    pub hi: f64,
    pub q: f64,
}

impl OccupationBand {
    fn contains(&self, x: f64) -> bool {
        x > self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    /// Exit time, or the horizon for truncated paths.
    pub exit_time: f64,
    pub side: ExitSide,
    /// `∫_0^{exit} e^{-qt} 1{X_t ∈ band} dt`, zero without a band.
    pub discounted_occupation: f64,
}

/// Per-path generator: a ChaCha stream selected by the path index.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// A seed for an independent sub-experiment, mixed from `seed` and `tag`
/// with the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Exponents beyond this give crossing probabilities below 1e-16.
const BRIDGE_CUTOFF: f64 = 37.0;

/// Brownian-bridge probability of touching `barrier` between two nodes
/// on the same side of it.
fn bridge_cross(rng: &mut ChaCha8Rng, from: f64, to: f64, barrier: f64, var: f64) -> bool {
    let expo = 2.0 * (barrier - from) * (barrier - to) / var;
    if expo > BRIDGE_CUTOFF {
        return false;
    }
    rng.gen::<f64>() < (-expo).exp()
}

fn draw_jump(law: &JumpLaw, rng: &mut ChaCha8Rng) -> f64 {
    match *law {
        JumpLaw::Exponential { mean } => mean * rng.sample::<f64, _>(Exp1),
        JumpLaw::Fixed { size } => size,
    }
}

// ∫ e^{-q s} ds over [t0, t1].
fn discounted_length(q: f64, t0: f64, t1: f64) -> f64 {
    if t1 <= t0 {
        return 0.0;
    }
    if q == 0.0 {
        t1 - t0
    } else {
        (-q * t0).exp() * -(-(q * (t1 - t0))).exp_m1() / q
    }
}

/// Simulates one path from `x0` until it leaves `(b, a)` or hits the horizon.
pub fn simulate_to_exit(
    model: &Model,
    x0: f64,
    b: f64,
    a: f64,
    cfg: &McConfig,
    path_index: u64,
    band: Option<&OccupationBand>,
) -> Result<PathOutcome> {
    cfg.validate()?;
    if !(b < x0 && x0 < a) {
        return Err(ScaleError::Domain(format!("need b < x0 < a, got {b} < {x0} < {a}")));
    }
    let mut rng = path_rng(cfg.seed, path_index);
    match model {
        Model::Levy(m) if m.gaussian == 0.0 => Ok(levy_exact(m, x0, b, a, cfg, &mut rng, band)),
        Model::Levy(m) => levy_stepped(m, x0, b, a, cfg, &mut rng, band),
        Model::Diffusion(m) => diffusion_stepped(m, x0, b, a, cfg, &mut rng, band),
    }
}

// Bounded variation, positive drift: linear pieces between jump epochs.
fn levy_exact(
    m: &SnlpModel,
    x0: f64,
    b: f64,
    a: f64,
    cfg: &McConfig,
    rng: &mut ChaCha8Rng,
    band: Option<&OccupationBand>,
) -> PathOutcome {
    let c = m.drift;
    let mut t = 0.0;
    let mut x = x0;
    let mut occ = 0.0;
    let segment = |occ: &mut f64, t0: f64, x_start: f64, dur: f64| {
        if let Some(bd) = band {
            // Times in [t0, t0 + dur] with x_start + c s ∈ (lo, hi].
            let s_lo = ((bd.lo - x_start) / c).max(0.0);
            let s_hi = ((bd.hi - x_start) / c).min(dur);
            *occ += discounted_length(bd.q, t0 + s_lo, t0 + s_hi);
        }
    };
    loop {
        let wait = if m.has_jumps() { rng.sample::<f64, _>(Exp1) / m.jump_rate } else { f64::INFINITY };
        let to_top = (a - x) / c;
        if to_top <= wait && t + to_top <= cfg.horizon {
            segment(&mut occ, t, x, to_top);
            return PathOutcome { exit_time: t + to_top, side: ExitSide::Up, discounted_occupation: occ };
        }
        if t + wait > cfg.horizon {
            segment(&mut occ, t, x, cfg.horizon - t);
            return PathOutcome { exit_time: cfg.horizon, side: ExitSide::Truncated, discounted_occupation: occ };
        }
        segment(&mut occ, t, x, wait);
        t += wait;
        x += c * wait - draw_jump(&m.jump_law, rng);
        if x <= b {
            return PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ };
        }
    }
}

fn levy_stepped(
    m: &SnlpModel,
    x0: f64,
    b: f64,
    a: f64,
    cfg: &McConfig,
    rng: &mut ChaCha8Rng,
    band: Option<&OccupationBand>,
) -> Result<PathOutcome> {
    let (c, sig) = (m.drift, m.gaussian);
    let mut t = 0.0;
    let mut x = x0;
    let mut occ = 0.0;
    let mut next_jump = if m.has_jumps() { rng.sample::<f64, _>(Exp1) / m.jump_rate } else { f64::INFINITY };
    loop {
        if t >= cfg.horizon {
            return Ok(PathOutcome { exit_time: cfg.horizon, side: ExitSide::Truncated, discounted_occupation: occ });
        }
        let mut dt = cfg.step.min(cfg.horizon - t);
        let jump_now = next_jump - t <= dt;
        if jump_now {
            dt = next_jump - t;
        }
        if let Some(bd) = band {
            if bd.contains(x) {
                occ += (-bd.q * t).exp() * dt;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        let next = x + c * dt + sig * dt.sqrt() * z;
        if !next.is_finite() {
            return Err(ScaleError::NonFiniteState { t });
        }
        t += dt;
        if next >= a {
            return Ok(PathOutcome { exit_time: t, side: ExitSide::Up, discounted_occupation: occ });
        }
        if next <= b {
            return Ok(PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ });
        }
        if cfg.bridge_correction && dt > 0.0 {
            let var = sig * sig * dt;
            if bridge_cross(rng, x, next, a, var) {
                return Ok(PathOutcome { exit_time: t, side: ExitSide::Up, discounted_occupation: occ });
            }
            if bridge_cross(rng, x, next, b, var) {
                return Ok(PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ });
            }
        }
        x = next;
        if jump_now {
            x -= draw_jump(&m.jump_law, rng);
            next_jump = t + rng.sample::<f64, _>(Exp1) / m.jump_rate;
            if x <= b {
                return Ok(PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ });
            }
        }
    }
}

fn diffusion_stepped(
    m: &DiffusionModel,
    x0: f64,
    b: f64,
    a: f64,
    cfg: &McConfig,
    rng: &mut ChaCha8Rng,
    band: Option<&OccupationBand>,
) -> Result<PathOutcome> {
    let mut t = 0.0;
    let mut x = x0;
    let mut occ = 0.0;
    loop {
        if t >= cfg.horizon {
            return Ok(PathOutcome { exit_time: cfg.horizon, side: ExitSide::Truncated, discounted_occupation: occ });
        }
        let dt = cfg.step.min(cfg.horizon - t);
        if let Some(bd) = band {
            if bd.contains(x) {
                occ += (-bd.q * t).exp() * dt;
            }
        }
        let sig = m.sigma_at(x);
        let z: f64 = rng.sample(StandardNormal);
        let next = x + m.mu_at(x) * dt + sig * dt.sqrt() * z;
        if !next.is_finite() {
            return Err(ScaleError::NonFiniteState { t });
        }
        t += dt;
        if next >= a {
            return Ok(PathOutcome { exit_time: t, side: ExitSide::Up, discounted_occupation: occ });
        }
        if next <= b {
            return Ok(PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ });
        }
        if cfg.bridge_correction {
            let var = sig * sig * dt;
            if bridge_cross(rng, x, next, a, var) {
                return Ok(PathOutcome { exit_time: t, side: ExitSide::Up, discounted_occupation: occ });
            }
            if bridge_cross(rng, x, next, b, var) {
                return Ok(PathOutcome { exit_time: t, side: ExitSide::Down, discounted_occupation: occ });
            }
        }
        x = next;
    }
}

/// Simulates `cfg.paths` paths in parallel; results are in path order.
pub fn simulate_paths(
    model: &Model,
    spec: &ExitSpec,
    cfg: &McConfig,
    band: Option<&OccupationBand>,
) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    model.validate()?;
    spec.validate()?;
    if !(model.in_state_space(spec.b) && model.in_state_space(spec.a)) {
        return Err(ScaleError::Domain("window must lie inside the state space".into()));
    }
    let run = || {
        (0..cfg.paths)
            .into_par_iter()
            .map(|i| simulate_to_exit(model, spec.x, spec.b, spec.a, cfg, i, band))
            .collect::<Result<Vec<_>>>()
    };
    if cfg.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| ScaleError::MonteCarlo(format!("thread pool: {e}")))?
            .install(run)
    }
}

/// Mean and standard error of per-path values, summed in path order.
pub fn summarize(values: impl Iterator<Item = f64>, truncated: u64, max_truncated_value: f64, seed: u64) -> McEstimate {
    let mut n = 0u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for v in values {
        n += 1;
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    McEstimate {
        mean,
        std_error: (var / nf).sqrt(),
        paths_used: n,
        truncated_paths: truncated,
        seed,
        truncation_bias: truncated as f64 / nf * max_truncated_value,
    }
}

fn exit_estimate(outcomes: &[PathOutcome], side: ExitSide, q: f64, cfg: &McConfig) -> McEstimate {
    let truncated = outcomes.iter().filter(|o| o.side == ExitSide::Truncated).count() as u64;
    summarize(
        outcomes.iter().map(|o| if o.side == side { (-q * o.exit_time).exp() } else { 0.0 }),
        truncated,
        (-q * cfg.horizon).exp(),
        cfg.seed,
    )
}

/// Estimates `E_x[e^{-qT_a^+}; T_a^+ < T_b^-]`.
pub fn estimate_up_exit(model: &Model, spec: &ExitSpec, cfg: &McConfig) -> Result<McEstimate> {
    let outcomes = simulate_paths(model, spec, cfg, None)?;
    Ok(exit_estimate(&outcomes, ExitSide::Up, spec.q, cfg))
}

/// Estimates `E_x[e^{-qT_b^-}; T_b^- < T_a^+]`.
pub fn estimate_down_exit(model: &Model, spec: &ExitSpec, cfg: &McConfig) -> Result<McEstimate> {
    let outcomes = simulate_paths(model, spec, cfg, None)?;
    Ok(exit_estimate(&outcomes, ExitSide::Down, spec.q, cfg))
}

/// Both exit estimates from one set of paths.
pub fn estimate_exits(model: &Model, spec: &ExitSpec, cfg: &McConfig) -> Result<(McEstimate, McEstimate)> {
    let outcomes = simulate_paths(model, spec, cfg, None)?;
    Ok((exit_estimate(&outcomes, ExitSide::Up, spec.q, cfg), exit_estimate(&outcomes, ExitSide::Down, spec.q, cfg)))
}

/// Estimates the discounted local time at `y` before exit, normalized by the
/// reference measure: discounted occupation of `(y - ε, y + ε]` divided by
/// its `m`-mass.
pub fn estimate_green_density(model: &Model, spec: &ExitSpec, y: f64, cfg: &McConfig) -> Result<McEstimate> {
    let eps = cfg.band();
    if !(y - eps > spec.b && y + eps < spec.a) {
        return Err(ScaleError::Domain(format!(
            "band ({}, {}] not inside the window ({}, {})",
            y - eps,
            y + eps,
            spec.b,
            spec.a
        )));
    }
    let mass = model.reference_mass(y - eps, y + eps)?;
    let band = OccupationBand { lo: y - eps, hi: y + eps, q: spec.q };
    let outcomes = simulate_paths(model, spec, cfg, Some(&band))?;
    let truncated = outcomes.iter().filter(|o| o.side == ExitSide::Truncated).count() as u64;
    // A truncated path could have added at most ∫_H^∞ e^{-qt} dt of occupation.
    let max_missing = if spec.q > 0.0 { (-spec.q * cfg.horizon).exp() / spec.q / mass } else { f64::INFINITY };
    let est = summarize(outcomes.iter().map(|o| o.discounted_occupation / mass), truncated, max_missing, cfg.seed);
    Ok(McEstimate { truncation_bias: if truncated == 0 { 0.0 } else { est.truncation_bias }, ..est })
}
