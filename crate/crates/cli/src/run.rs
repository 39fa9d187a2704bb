//! Task execution and output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scalekit::duality::{check_local_time_duality, check_scale_symmetry, symmetry_grid, DualPair};
use scalekit::exit::{down_exit, green_density, mean_discounted_occupation, provider_for, up_exit, ExitSpec};
use scalekit::levy::LevyScale;
use scalekit::mc::derive_seed;
use scalekit::model::Model;
use scalekit::report::{VerificationReport, VerificationRow};
use scalekit::verify::{self, verify_exit_chain, verify_exits, verify_green_density, verify_laplace};
use serde::Serialize;

use crate::config::{RunConfig, Task};

/// Which tasks to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    All,
    VerifyOnly,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub report: VerificationReport,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    /// Exit status: 0 iff every verdict passed.
    pub fn status(&self) -> i32 {
        if self.report.all_pass() {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct PsiRecord {
    lambda: f64,
    psi: f64,
}

#[derive(Serialize)]
struct ScaleRecord {
    x: f64,
    y: f64,
    q: f64,
    #[serde(rename = "W")]
    w: f64,
    #[serde(rename = "Z")]
    z: f64,
}

#[derive(Serialize)]
struct ExitRecord {
    b: f64,
    a: f64,
    x: f64,
    q: f64,
    up_exit: f64,
    down_exit: f64,
    mean_discounted_occupation: f64,
}

#[derive(Serialize)]
struct ResolventRecord {
    b: f64,
    a: f64,
    x: f64,
    y: f64,
    q: f64,
    green_density: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows_csv(path: &Path, rows: &[VerificationRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["identity", "anchor", "analytic", "oracle", "budget", "verdict"])?;
    for r in rows {
        w.write_record([
            r.identity.clone(),
            r.anchor.clone(),
            r.analytic.to_string(),
            r.oracle.to_string(),
            r.budget.to_string(),
            if r.passed() { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the tasks of `cfg` in order, writing into `cfg.out_dir`.
pub fn run(cfg: &RunConfig, mode: Mode) -> Result<Outcome> {
    let mut out = Outcome::default();
    let selected: Vec<(usize, &Task)> =
        cfg.tasks.iter().enumerate().filter(|(_, t)| mode == Mode::All || t.is_verification()).collect();
    if selected.is_empty() {
        return Ok(out);
    }
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    for (index, task) in selected {
        let file = cfg.out_dir.join(format!(
            "{}.csv",
            task.name().map(str::to_owned).unwrap_or_else(|| format!("{}-{}", task.kind(), index + 1))
        ));
        eprintln!("task {}: {}", index + 1, task.kind());
        let result = if task.is_verification() {
            verification_task(cfg, index, task).and_then(|rows| {
                write_rows_csv(&file, &rows)?;
                out.report.extend(rows);
                Ok(())
            })
        } else {
            table_task(cfg, task, &file)
        };
        match result {
            Ok(()) => out.files.push(file),
            Err(e) => out
                .report
                .push(VerificationRow::failed(format!("task {} ({})", index + 1, task.kind()), format!("{e:#}"))),
        }
    }

    if out.report.summary.total > 0 {
        let path = cfg.out_dir.join("report.json");
        let mut json = out.report.to_json()?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        out.files.push(path);
    }
    Ok(out)
}

fn levy_only<'a>(model: &'a Model, kind: &str) -> Result<&'a scalekit::model::SnlpModel> {
    match model {
        Model::Levy(m) => Ok(m),
        Model::Diffusion(_) => bail!("{kind} needs a levy model"),
    }
}

fn table_task(cfg: &RunConfig, task: &Task, file: &Path) -> Result<()> {
    let model = &cfg.model;
    let step = cfg.volterra_step;
    match task {
        Task::PsiTable { lambda, .. } => {
            let m = levy_only(model, "psi-table")?;
            let rows = lambda
                .values()?
                .into_iter()
                .map(|l| Ok(PsiRecord { lambda: l, psi: m.psi(l)? }))
                .collect::<Result<Vec<_>>>()?;
            write_csv(file, &rows)
        }
        Task::ScaleTable { q, x, y, .. } => {
            let xs = x.values()?;
            let ys = y.clone().unwrap_or_else(|| vec![0.0]);
            let mut rows = Vec::new();
            for &q in q {
                let sp = provider_for(model, q, step)?;
                for &y in &ys {
                    for &x in &xs {
                        rows.push(ScaleRecord { x, y, q, w: sp.w(x, y)?, z: sp.z(x, y)? });
                    }
                }
            }
            write_csv(file, &rows)
        }
        Task::Exit { q, windows, x, nodes, .. } => {
            let mut rows = Vec::new();
            for &q in q {
                let sp = provider_for(model, q, step)?;
                for &[b, a] in windows {
                    for &x in x {
                        let spec = ExitSpec::new(b, a, x, q)?;
                        rows.push(ExitRecord {
                            b,
                            a,
                            x,
                            q,
                            up_exit: up_exit(sp.as_ref(), &spec)?,
                            down_exit: down_exit(sp.as_ref(), &spec)?,
                            mean_discounted_occupation: mean_discounted_occupation(sp.as_ref(), &spec, *nodes)?,
                        });
                    }
                }
            }
            write_csv(file, &rows)
        }
        Task::Resolvent { q, windows, x, y, .. } => {
            let ys = y.values()?;
            let mut rows = Vec::new();
            for &q in q {
                let sp = provider_for(model, q, step)?;
                for &[b, a] in windows {
                    for &x in x {
                        let spec = ExitSpec::new(b, a, x, q)?;
                        for &y in ys.iter().filter(|&&y| y > b && y < a) {
                            rows.push(ResolventRecord {
                                b,
                                a,
                                x,
                                y,
                                q,
                                green_density: green_density(sp.as_ref(), &spec, y)?,
                            });
                        }
                    }
                }
            }
            write_csv(file, &rows)
        }
        _ => unreachable!("verification tasks are dispatched separately"),
    }
}

// Runs one check, turning an error into a failed row so the remaining
// checks still execute.
fn row_or_fail(identity: impl FnOnce() -> String, r: scalekit::Result<VerificationRow>) -> VerificationRow {
    r.unwrap_or_else(|e| VerificationRow::failed(identity(), e))
}

fn verification_task(cfg: &RunConfig, index: usize, task: &Task) -> Result<Vec<VerificationRow>> {
    let model = &cfg.model;
    let step = cfg.volterra_step;
    let mut rows = Vec::new();
    // Every Monte Carlo experiment gets its own seed derived from the run
    // seed, the task index and a running counter.
    let mut counter = 0u64;
    let mut next_mc = || {
        counter += 1;
        let mut mc = cfg.mc_config();
        mc.seed = derive_seed(cfg.seed, ((index as u64) << 32) | counter);
        mc
    };
    match task {
        Task::VerifyIdentities { q, windows, x, y, nodes, chain_tolerance, .. } => {
            let chain_tol = chain_tolerance.unwrap_or(match model {
                Model::Levy(_) => 1e-8,
                Model::Diffusion(_) => 1e-6,
            });
            for &q in q {
                let sp = provider_for(model, q, step)?;
                for &[b, a] in windows {
                    for &x in x {
                        let spec = ExitSpec::new(b, a, x, q)?;
                        let label = || format!("exits (b={b}, a={a}, x={x}, q={q})");
                        match verify_exits(model, &spec, &next_mc(), step) {
                            Ok(pair) => rows.extend(pair),
                            Err(e) => rows.push(VerificationRow::failed(label(), e)),
                        }
                        for &y in y {
                            let mc = next_mc();
                            rows.push(row_or_fail(
                                || format!("green_density (b={b}, a={a}, x={x}, q={q}, y={y})"),
                                verify_green_density(model, &spec, y, &mc, step),
                            ));
                        }
                        rows.push(row_or_fail(
                            || format!("exit chain (b={b}, a={a}, x={x}, q={q})"),
                            verify_exit_chain(sp.as_ref(), &spec, *nodes, chain_tol),
                        ));
                    }
                }
            }
        }
        Task::VerifyDuality { q, windows, pairs, symmetry_points, symmetry_tolerance, .. } => {
            let pair = DualPair::new(model.clone())?;
            let budget = match model {
                Model::Levy(_) => 0.0,
                Model::Diffusion(_) => *symmetry_tolerance,
            };
            for &q in q {
                for &[b, a] in windows {
                    let pts = symmetry_grid(b, a, *symmetry_points);
                    let identity = format!("scale symmetry (b={b}, a={a}, q={q}, {} points)", pts.len());
                    rows.push(match check_scale_symmetry(&pair, q, &pts, step) {
                        Ok(residual) => VerificationRow::new(identity, verify::SYMMETRY, residual, 0.0, budget),
                        Err(e) => VerificationRow::failed(identity, e),
                    });
                    for &[x, y] in pairs {
                        let mc = next_mc();
                        rows.push(row_or_fail(
                            || format!("local-time duality (b={b}, a={a}, x={x}, y={y}, q={q})"),
                            ExitSpec::new(b, a, x, q)
                                .and_then(|spec| check_local_time_duality(&pair, &spec, y, &mc, step)),
                        ));
                    }
                }
            }
        }
        Task::LaplaceCheck { q, beta, tolerance, .. } => {
            let m = levy_only(model, "laplace-check")?;
            for &q in q {
                let scale = LevyScale::new(*m, q)?;
                for &beta in beta {
                    rows.push(row_or_fail(
                        || format!("laplace identity (q={q}, beta={beta})"),
                        verify_laplace(&scale, beta, *tolerance),
                    ));
                }
            }
        }
        _ => unreachable!("table tasks are dispatched separately"),
    }
    Ok(rows)
}
