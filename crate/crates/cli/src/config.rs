//! TOML run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scalekit::mc::McConfig;
use scalekit::model::Model;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Monte Carlo worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// Grid step of the diffusion Volterra solver.
    #[serde(default = "default_volterra_step")]
    pub volterra_step: f64,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_volterra_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default = "default_dt")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub band_halfwidth: Option<f64>,
    #[serde(default = "yes")]
    pub bridge_correction: bool,
}

fn default_paths() -> u64 {
    100_000
}
fn default_dt() -> f64 {
    1e-4
}
fn default_horizon() -> f64 {
    100.0
}
fn yes() -> bool {
    true
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            paths: default_paths(),
            step: default_dt(),
            horizon: default_horizon(),
            band_halfwidth: None,
            bridge_correction: true,
        }
    }
}

/// Points given either as an explicit list or as `{ from, to, step }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Points {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Points {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            Points::List(ref v) => Ok(v.clone()),
            Points::Range { from, to, step } => {
                if !(step > 0.0) || !(to >= from) {
                    bail!("range needs from <= to and step > 0, got from={from}, to={to}, step={step}");
                }
                let n = ((to - from) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|i| from + step * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    PsiTable {
        name: Option<String>,
        lambda: Points,
    },
    ScaleTable {
        name: Option<String>,
        q: Vec<f64>,
        x: Points,
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    Exit {
        name: Option<String>,
        q: Vec<f64>,
        windows: Vec<[f64; 2]>,
        x: Vec<f64>,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Resolvent {
        name: Option<String>,
        q: Vec<f64>,
        windows: Vec<[f64; 2]>,
        x: Vec<f64>,
        y: Points,
    },
    VerifyIdentities {
        name: Option<String>,
        q: Vec<f64>,
        windows: Vec<[f64; 2]>,
        x: Vec<f64>,
        #[serde(default)]
        y: Vec<f64>,
        #[serde(default = "default_nodes")]
        nodes: usize,
        chain_tolerance: Option<f64>,
    },
    VerifyDuality {
        name: Option<String>,
        q: Vec<f64>,
        windows: Vec<[f64; 2]>,
        /// `(x, y)` pairs for the local-time check.
        #[serde(default)]
        pairs: Vec<[f64; 2]>,
        #[serde(default = "default_symmetry_points")]
        symmetry_points: usize,
        #[serde(default = "default_symmetry_tolerance")]
        symmetry_tolerance: f64,
    },
    LaplaceCheck {
        name: Option<String>,
        q: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default = "default_laplace_tolerance")]
        tolerance: f64,
    },
}

fn default_nodes() -> usize {
    2000
}
fn default_symmetry_points() -> usize {
    10
}
fn default_symmetry_tolerance() -> f64 {
    1e-5
}
fn default_laplace_tolerance() -> f64 {
    1e-6
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::PsiTable { .. } => "psi-table",
            Task::ScaleTable { .. } => "scale-table",
            Task::Exit { .. } => "exit",
            Task::Resolvent { .. } => "resolvent",
            Task::VerifyIdentities { .. } => "verify-identities",
            Task::VerifyDuality { .. } => "verify-duality",
            Task::LaplaceCheck { .. } => "laplace-check",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Task::PsiTable { name, .. }
            | Task::ScaleTable { name, .. }
            | Task::Exit { name, .. }
            | Task::Resolvent { name, .. }
            | Task::VerifyIdentities { name, .. }
            | Task::VerifyDuality { name, .. }
            | Task::LaplaceCheck { name, .. } => name.as_deref(),
        }
    }

    /// Tasks whose results are verdicts rather than tables.
    pub fn is_verification(&self) -> bool {
        matches!(self, Task::VerifyIdentities { .. } | Task::VerifyDuality { .. } | Task::LaplaceCheck { .. })
    }

    fn qs(&self) -> &[f64] {
        match self {
            Task::PsiTable { .. } => &[],
            Task::ScaleTable { q, .. }
            | Task::Exit { q, .. }
            | Task::Resolvent { q, .. }
            | Task::VerifyIdentities { q, .. }
            | Task::VerifyDuality { q, .. }
            | Task::LaplaceCheck { q, .. } => q,
        }
    }

    fn windows(&self) -> &[[f64; 2]] {
        match self {
            Task::Exit { windows, .. }
            | Task::Resolvent { windows, .. }
            | Task::VerifyIdentities { windows, .. }
            | Task::VerifyDuality { windows, .. } => windows,
            _ => &[],
        }
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self, Task::PsiTable { .. }) && self.qs().is_empty() {
            bail!("q must list at least one value");
        }
        if let Some(q) = self.qs().iter().find(|q| !(**q >= 0.0) || !q.is_finite()) {
            bail!("q must be >= 0, got {q}");
        }
        let needs_window = matches!(
            self,
            Task::Exit { .. } | Task::Resolvent { .. } | Task::VerifyIdentities { .. } | Task::VerifyDuality { .. }
        );
        if needs_window && self.windows().is_empty() {
            bail!("windows must list at least one [b, a]");
        }
        if let Some([b, a]) = self.windows().iter().find(|[b, a]| !(b < a)) {
            bail!("window needs b < a, got [{b}, {a}]");
        }
        match self {
            Task::PsiTable { lambda, .. } => {
                lambda.values()?;
            }
            Task::ScaleTable { x, .. } => {
                x.values()?;
            }
            Task::Resolvent { y, .. } => {
                y.values()?;
            }
            Task::LaplaceCheck { beta, .. } if beta.is_empty() => bail!("beta must list at least one value"),
            _ => {}
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().context("model block")?;
        if !(self.volterra_step > 0.0) {
            bail!("volterra_step must be positive, got {}", self.volterra_step);
        }
        self.mc_config().validate().context("mc block")?;
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate().with_context(|| format!("task {} ({})", i + 1, t.kind()))?;
        }
        Ok(())
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            paths: self.mc.paths,
            step: self.mc.step,
            horizon: self.mc.horizon,
            seed: self.seed,
            band_halfwidth: self.mc.band_halfwidth,
            bridge_correction: self.mc.bridge_correction,
            workers: self.workers,
        }
    }
}
