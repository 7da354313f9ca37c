//! Run configuration and the error type that maps failures to exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::Deserialize;

use demonlab::sweep::canonical_name;
use demonlab::{NumericalPolicy, SystemParams};

use crate::{Common, Display};

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Parameter overrides by name, e.g. `gamma = 2.0`, `tau_CZ = 0.2`.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub policy: Option<NumericalPolicy>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }
}

/// Parameters and settings after layering defaults, config file, `--set`
/// and the dedicated flags, in that order.
pub struct Resolved {
    pub params: SystemParams,
    pub out: PathBuf,
    pub workers: Option<usize>,
    unit_j_mhz: Option<f64>,
}

fn apply(p: &mut SystemParams, name: &str, value: f64) -> Result<(), CliError> {
    let field = canonical_name(name)?;
    p.set(field, value)?;
    Ok(())
}

impl Resolved {
    pub fn load(c: &Common) -> Result<Self, CliError> {
        let cfg = match &c.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut params = SystemParams::default();
        for (k, v) in &cfg.params {
            apply(&mut params, k, *v)?;
        }
        for s in &c.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects NAME=VALUE, got {s:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--set {k}: {v:?} is not a number")))?;
            apply(&mut params, k.trim(), v)?;
        }
        if let Some(g) = c.gamma {
            params.gamma = g;
        }
        if let Some(t) = c.period {
            params.period = t;
        }
        if let Some(policy) = cfg.policy {
            NumericalPolicy::install(policy);
        }
        if let Some(j) = c.unit_j_mhz {
            if !(j.is_finite() && j > 0.0) {
                return Err(CliError::Config(format!("--unit-J-MHz must be positive, got {j}")));
            }
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let out = c.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(demonlab::Error::from)?;
        Ok(Resolved {
            params,
            out,
            workers: cfg.workers,
            unit_j_mhz: c.unit_j_mhz,
        })
    }

    pub fn display(&self) -> Display {
        Display { j_mhz: self.unit_j_mhz }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(demonlab::Error),
    Config(String),
    Usage(String),
    NotConverged(String),
}

impl From<demonlab::Error> for CliError {
    fn from(e: demonlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::NotConverged(_) => "convergence",
        }
    }

    /// 2 for bad input, 3 for numerical non-convergence, 1 otherwise.
    pub fn code(&self) -> u8 {
        match self.kind() {
            "config" | "usage" => 2,
            "convergence" => 3,
            _ => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(m) | CliError::NotConverged(m) => m.clone(),
            CliError::Usage(m) => {
                let line = m.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
                line.strip_prefix("error: ").unwrap_or(line).to_string()
            }
        }
    }

    pub fn report(&self) -> ExitCode {
        let msg = serde_json::to_string(&self.message()).unwrap_or_default();
        eprintln!("error: kind={} code={} message={msg}", self.kind(), self.code());
        ExitCode::from(self.code())
    }
}
