//! Parameter grids, the γ_opt search and the per-cycle convergence study.
//!
//! Sweep specs are TOML:
//!
//! ```toml
//! name = "fig3"
//! model = "both"            # full | reduced | both
//! figure = "fig3"           # optional; fig3 writes fig3b.csv and fig3c.csv
//! output = "fig3.csv"       # used when no figure is given
//!
//! [fixed]                   # SystemParams overrides
//! temp_h = 3000.0
//!
//! [[axis]]
//! name = "gamma"
//! values = [0.5, 2.0, 10.0, 30.0]
//!
//! [[axis]]
//! name = "T"
//! grid = "default"          # or values = [...] or range = { start, stop, step }
//! ```
//!
//! Axis names are [`SystemParams`] fields or the aliases `T`, `T_C`, `T_H`,
//! `tau_CZ`, `tau_Y`, `gamma_D`, `omega_C`, `omega_H`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::liouville::PropagatorCache;
use crate::model::{DemonModel, ModelKind};
use crate::observables::{cycle_result, cycle_series, validation_window, CycleResult};
use crate::params::SystemParams;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "DEMONLAB_WORKERS";

const ALIASES: &[(&str, &str)] = &[
    ("T", "period"),
    ("J", "j"),
    ("omega_D", "omega_d"),
    ("T_C", "temp_c"),
    ("T_H", "temp_h"),
    ("tau_CZ", "tau_cz"),
    ("tau_Y", "tau_y"),
    ("gamma_D", "gamma_d"),
    ("omega_C", "omega_c"),
    ("omega_H", "omega_h"),
];

/// Field name for a user-facing parameter name.
pub fn canonical_name(name: &str) -> Result<&'static str> {
    if let Some((_, f)) = ALIASES.iter().find(|(a, _)| *a == name) {
        return Ok(f);
    }
    crate::params::PARAM_FIELDS
        .iter()
        .map(|(f, _)| *f)
        .find(|f| *f == name)
        .ok_or_else(|| Error::SweepSpec(format!("unknown parameter {name:?}")))
}

/// Column name used in output tables.
pub fn display_name(field: &str) -> &str {
    ALIASES
        .iter()
        .find(|(_, f)| *f == field)
        .map(|(a, _)| *a)
        .unwrap_or(field)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelector {
    #[default]
    Full,
    Reduced,
    Both,
}

impl ModelSelector {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelSelector::Full => vec![ModelKind::Full],
            ModelSelector::Reduced => vec![ModelKind::Reduced],
            ModelSelector::Both => vec![ModelKind::Full, ModelKind::Reduced],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<AxisRange>,
    /// `"default"` selects [`default_period_grid`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

/// Rounds away the drift of repeated float additions.
fn tidy(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// `start, start + step, …` up to and including `stop`.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| tidy(start + step * i as f64)).collect()
}

/// T from 0.3 to 6 in steps of 0.05, then to 20 in steps of 0.5 (units of 1/J).
pub fn default_period_grid() -> Vec<f64> {
    let mut g = linspace_step(0.3, 6.0, 0.05);
    g.extend(linspace_step(6.5, 20.0, 0.5));
    g
}

impl Axis {
    pub fn resolve(&self) -> Result<(&'static str, Vec<f64>)> {
        let field = canonical_name(&self.name)?;
        let given = [self.values.is_some(), self.range.is_some(), self.grid.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::SweepSpec(format!(
                "axis {:?} needs exactly one of values, range, grid",
                self.name
            )));
        }
        let values = if let Some(v) = &self.values {
            v.clone()
        } else if let Some(r) = &self.range {
            if !(r.step > 0.0) || !(r.stop >= r.start) {
                return Err(Error::SweepSpec(format!("axis {:?}: bad range {r:?}", self.name)));
            }
            linspace_step(r.start, r.stop, r.step)
        } else {
            match self.grid.as_deref() {
                Some("default") if field == "period" => default_period_grid(),
                other => {
                    return Err(Error::SweepSpec(format!(
                        "axis {:?}: unknown grid {other:?}",
                        self.name
                    )))
                }
            }
        };
        if values.is_empty() {
            return Err(Error::SweepSpec(format!("axis {:?} is empty", self.name)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SweepSpec(format!("axis {:?} has non-finite values", self.name)));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::SweepSpec(format!(
                "axis {:?} must be strictly increasing",
                self.name
            )));
        }
        Ok((field, values))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: ModelSelector,
    #[serde(default)]
    pub figure: Option<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default, rename = "axis")]
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::SweepSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for a in &self.axes {
            let (f, _) = a.resolve()?;
            if seen.contains(&f) {
                return Err(Error::SweepSpec(format!("axis {:?} given twice", a.name)));
            }
            seen.push(f);
        }
        for k in self.fixed.keys() {
            canonical_name(k)?;
        }
        if self.axes.is_empty() {
            return Err(Error::SweepSpec("no axes".into()));
        }
        Ok(())
    }

    /// Base parameters with the fixed overrides applied.
    pub fn base_params(&self, base: &SystemParams) -> Result<SystemParams> {
        let mut p = *base;
        for (k, v) in &self.fixed {
            p.set(canonical_name(k)?, *v)?;
        }
        Ok(p)
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Result<Vec<Vec<(&'static str, f64)>>> {
        let axes: Vec<_> = self.axes.iter().map(Axis::resolve).collect::<Result<_>>()?;
        let mut out: Vec<Vec<(&'static str, f64)>> = vec![vec![]];
        for (field, values) in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((*field, *v));
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// One evaluated grid point for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: Vec<(String, f64)>,
    pub params: SystemParams,
    pub model: ModelKind,
    pub result: Option<CycleResult>,
    /// Empty when the point converged; otherwise the reason.
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| !r.flag.is_empty()).count()
    }

    /// Rows of one model, in grid order.
    pub fn model_rows(&self, kind: ModelKind) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.model == kind)
    }

    /// Generic CSV: swept axes, then model and the cycle record columns.
    pub fn to_table(&self) -> crate::output::Table {
        let mut header: Vec<&str> = self.axes.iter().map(|a| display_name(a)).collect();
        header.extend([
            "model",
            "X",
            "J_av",
            "X_C",
            "X_H",
            "X_brute",
            "X_Cn_spread",
            "discrepancy",
            "flag",
        ]);
        let mut t = crate::output::Table::new(&header);
        for r in &self.rows {
            let mut rec: Vec<String> = r.point.iter().map(|(_, v)| format!("{v}")).collect();
            rec.push(r.model.label().into());
            match &r.result {
                Some(c) => rec.extend(
                    [c.x, c.j_av, c.x_c, c.x_h, c.x_brute, c.x_cn_spread, c.discrepancy]
                        .iter()
                        .map(|x| format!("{x}")),
                ),
                None => rec.extend(std::iter::repeat_n(String::from("NaN"), 7)),
            }
            rec.push(r.flag.clone());
            t.push(rec);
        }
        t
    }

    /// Long-format rows (gamma, T, model, X, J_av, flag).
    pub fn fig3_rows(&self, models: &[ModelKind]) -> Vec<crate::output::Fig3Row> {
        self.rows
            .iter()
            .filter(|r| models.contains(&r.model))
            .map(|r| crate::output::Fig3Row {
                gamma: r.params.gamma,
                period: r.params.period,
                model: r.model.label().into(),
                x: r.result.as_ref().map_or(f64::NAN, |c| c.x),
                j_av: r.result.as_ref().map_or(f64::NAN, |c| c.j_av),
                flag: r.flag.clone(),
            })
            .collect()
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn evaluate(p: &SystemParams, kind: ModelKind, cache: &Arc<PropagatorCache>) -> (Option<CycleResult>, String) {
    let run = || -> Result<CycleResult> {
        p.validate()?;
        let sim = Simulator::with_cache(DemonModel::new(kind, p)?, cache.clone());
        cycle_result(&sim)
    };
    match run() {
        Ok(r) if r.converged => (Some(r), String::new()),
        Ok(r) => (Some(r), "nonconverged".into()),
        Err(e) => (None, format!("error:{}", e.kind())),
    }
}

/// Evaluates every grid point; failures are flagged, never dropped.
pub fn run_sweep(spec: &SweepSpec, base: &SystemParams, workers: usize) -> Result<SweepTable> {
    spec.validate()?;
    let base = spec.base_params(base)?;
    let points = spec.points()?;
    let kinds = spec.model.kinds();
    let cache = Arc::new(PropagatorCache::default());
    let tasks: Vec<(usize, usize, ModelKind)> = (0..points.len())
        .flat_map(|i| kinds.iter().enumerate().map(move |(k, m)| (i, k, *m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::SweepSpec(format!("thread pool: {e}")))?;
    let mut rows: Vec<(usize, usize, SweepRow)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, k, kind)| -> Result<_> {
                let mut p = base;
                for (f, v) in &points[i] {
                    p.set(f, *v)?;
                }
                let (result, flag) = evaluate(&p, kind, &cache);
                Ok((
                    i,
                    k,
                    SweepRow {
                        index: i,
                        point: points[i].iter().map(|(f, v)| (f.to_string(), *v)).collect(),
                        params: p,
                        model: kind,
                        result,
                        flag,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|(i, k, _)| (*i, *k));
    Ok(SweepTable {
        axes: spec
            .axes
            .iter()
            .map(|a| canonical_name(&a.name).map(str::to_string))
            .collect::<Result<_>>()?,
        rows: rows.into_iter().map(|(_, _, r)| r).collect(),
    })
}

/// X over a list of periods for one model, in parallel.
pub fn period_scan(p: &SystemParams, kind: ModelKind, periods: &[f64], workers: usize) -> Result<Vec<(Option<CycleResult>, String)>> {
    let cache = Arc::new(PropagatorCache::default());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::SweepSpec(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        periods
            .par_iter()
            .map(|&t| evaluate(&SystemParams { period: t, ..*p }, kind, &cache))
            .collect()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptOptions {
    /// Search interval for γ, units of J.
    pub bounds: (f64, f64),
    /// Upper end of the inner T search, units of 1/J.
    pub t_max: f64,
    /// Coarse T spacing before refinement, units of 1/J.
    pub t_step: f64,
    /// Stop when the γ bracket is this narrow in ln γ.
    pub log_gamma_tol: f64,
}

impl Default for GammaOptOptions {
    fn default() -> Self {
        GammaOptOptions {
            bounds: (0.2, 10.0),
            t_max: 10.0,
            t_step: 0.1,
            log_gamma_tol: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptResult {
    pub gamma_opt: f64,
    /// max over T of J_av at γ_opt, units of J.
    pub j_av_max: f64,
    pub period_at_max: f64,
    /// γ_opt (n_C + ½), units of J.
    pub product: f64,
    /// Maximum found at (or next to) a search bound.
    pub at_boundary: bool,
    /// J_av hardly varies with γ.
    pub flat: bool,
    /// Every evaluated (γ, best T, J_av).
    pub trace: Vec<(f64, f64, f64)>,
}

fn golden_max(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// max over T ∈ [t₂ + 0.01, t_max] of J_av, on a grid and then by golden section.
pub fn max_current_over_period(p: &SystemParams, opts: &GammaOptOptions, cache: &Arc<PropagatorCache>) -> Result<(f64, f64)> {
    let lo = p.step2_end() + 0.01;
    let j_av = |t: f64| -> Result<f64> {
        let q = SystemParams { period: t, ..*p };
        let sim = Simulator::with_cache(DemonModel::full(&q)?, cache.clone());
        Ok(cycle_result(&sim)?.j_av)
    };
    let grid = linspace_step(lo, opts.t_max, opts.t_step);
    let values = grid.iter().map(|&t| j_av(t)).collect::<Result<Vec<_>>>()?;
    let k = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(grid.len() - 1)];
    if b - a <= 1e-9 {
        return Ok((grid[k], values[k]));
    }
    let (t, v) = golden_max(a, b, 1e-3, j_av)?;
    Ok(if v >= values[k] { (t, v) } else { (grid[k], values[k]) })
}

/// γ maximizing max_T J_av, by golden section in ln γ.
pub fn gamma_opt(p: &SystemParams, opts: &GammaOptOptions) -> Result<GammaOptResult> {
    p.validate_physics()?;
    let (lo, hi) = opts.bounds;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::SweepSpec(format!("bad gamma bounds ({lo}, {hi})")));
    }
    let cache = Arc::new(PropagatorCache::default());
    let mut trace = Vec::new();
    let mut inner = |ln_g: f64| -> Result<f64> {
        let g = ln_g.exp();
        // Vanishing coupling leaves the cycle map without a unique fixed
        // point; such a γ contributes no current.
        let (t, j) = match max_current_over_period(&SystemParams { gamma: g, ..*p }, opts, &cache) {
            Err(Error::DegenerateFixedPoint { .. }) => (f64::NAN, 0.0),
            r => r?,
        };
        trace.push((g, t, j));
        Ok(j)
    };
    let (la, lb) = (lo.ln(), hi.ln());
    inner(la)?;
    inner(lb)?;
    golden_max(la, lb, opts.log_gamma_tol, &mut inner)?;
    let &(gamma_opt, period_at_max, j_av_max) = trace
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("trace is non-empty");
    let edge = (gamma_opt.ln() - la).min(lb - gamma_opt.ln());
    let values: Vec<f64> = trace.iter().map(|x| x.2).collect();
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let flat = vmax.abs() < 1e-12 || (vmax - vmin) <= 1e-6 * vmax.abs();
    let n_c = p.derive()?.n_c;
    Ok(GammaOptResult {
        gamma_opt,
        j_av_max,
        period_at_max,
        product: gamma_opt * (n_c + 0.5),
        at_boundary: edge <= 2.0 * opts.log_gamma_tol || flat,
        flat,
        trace,
    })
}

/// X_{C,n} and X_{H,n} from ρ_ss through the end of the validation window.
pub fn convergence_study(p: &SystemParams, gammas: &[f64], periods: &[f64]) -> Result<Vec<crate::output::ConvergenceRow>> {
    let cache = Arc::new(PropagatorCache::default());
    let mut out = Vec::new();
    for &g in gammas {
        for &t in periods {
            let q = SystemParams {
                gamma: g,
                period: t,
                ..*p
            };
            q.validate()?;
            let sim = Simulator::with_cache(DemonModel::full(&q)?, cache.clone());
            let n = validation_window(&q).1;
            for (k, x) in cycle_series(&sim, n)?.into_iter().enumerate() {
                out.push(crate::output::ConvergenceRow {
                    gamma: g,
                    period: t,
                    n: k,
                    x_cn: x[0],
                    x_hn: x[1],
                });
            }
        }
    }
    Ok(out)
}
