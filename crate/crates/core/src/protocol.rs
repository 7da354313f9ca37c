//! Pulse segments and schedules of the three-step demon protocol.
//!
//! Step 1 copies "qutrit in |2_M⟩" into the memory (CNOT with M level 2 as
//! control), step 2 moves |2_M⟩ to |1_M⟩ conditioned on the memory, and
//! step 3 dumps the memory into its reservoir for the rest of the period.
//! Each CNOT is Y(−π/2) · CZ · Y(+π/2) on the target; it agrees with CNOT up
//! to diagonal phases on the control.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Controls;
use crate::params::SystemParams;
use crate::tensor::Subsystem;

/// A stretch of constant controls. Cold and hot baths are always on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub label: String,
    /// Duration in units of 1/J.
    pub duration: f64,
    pub controls: Controls,
    /// Demon memory coupled to its reservoir during this segment.
    pub demon_reset: bool,
}

impl PulseSegment {
    pub fn new(label: impl Into<String>, duration: f64, controls: Controls, demon_reset: bool) -> Result<Self> {
        let seg = PulseSegment {
            label: label.into(),
            duration,
            controls,
            demon_reset,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidSegment(format!(
                "{}: duration {} must be positive",
                self.label, self.duration
            )));
        }
        if !self.controls.is_finite() {
            return Err(Error::InvalidSegment(format!("{}: non-finite amplitude", self.label)));
        }
        if self.controls.active_count() > 1 {
            return Err(Error::InvalidSegment(format!(
                "{}: more than one control active",
                self.label
            )));
        }
        Ok(())
    }

    /// Free evolution under the couplings and baths.
    pub fn free(duration: f64) -> Result<Self> {
        Self::new("free", duration, Controls::NONE, false)
    }

    /// Free evolution with the memory reset on.
    pub fn reset(duration: f64) -> Result<Self> {
        Self::new("reset", duration, Controls::NONE, true)
    }
}

/// Y rotation by `angle` on the demon or on the qutrit 1↔2 transition.
///
/// The drive A(i|↑⟩⟨↓| − i|↓⟩⟨↑|) held for τ rotates by θ = 2Aτ.
pub fn y_rotation_segment(target: Subsystem, angle: f64, tau_y: f64) -> Result<PulseSegment> {
    let amp = angle / (2.0 * tau_y);
    let (label, controls) = match target {
        Subsystem::Demon => (
            "Y_D",
            Controls {
                a_yd: amp,
                ..Controls::NONE
            },
        ),
        Subsystem::Qutrit => (
            "Y_M",
            Controls {
                a_ym: amp,
                ..Controls::NONE
            },
        ),
        other => return Err(Error::UnsupportedTarget(other)),
    };
    PulseSegment::new(format!("{label}({angle:+.4})"), tau_y, controls, false)
}

/// Controlled phase π on |2_M 1_D⟩.
pub fn cz_segment(tau_cz: f64) -> Result<PulseSegment> {
    PulseSegment::new(
        "CZ",
        tau_cz,
        Controls {
            a_cz: std::f64::consts::PI / tau_cz,
            ..Controls::NONE
        },
        false,
    )
}

/// Ordered segments with the step boundaries marked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub segments: Vec<PulseSegment>,
    /// End of step 1.
    pub t1: f64,
    /// End of step 2.
    pub t2: f64,
}

impl Schedule {
    pub fn new(segments: Vec<PulseSegment>, t1: f64, t2: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptySchedule);
        }
        for s in &segments {
            s.validate()?;
        }
        Ok(Schedule { segments, t1, t2 })
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Start time of every segment followed by the total duration.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = vec![0.0];
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn cnot(target: Subsystem, p: &SystemParams) -> Result<[PulseSegment; 3]> {
    Ok([
        y_rotation_segment(target, -FRAC_PI_2, p.tau_y)?,
        cz_segment(p.tau_cz)?,
        y_rotation_segment(target, FRAC_PI_2, p.tau_y)?,
    ])
}

/// Steps 1 and 2 without the reset.
pub fn gate_sequence(p: &SystemParams) -> Result<Schedule> {
    p.validate_physics()?;
    let mut segments = Vec::with_capacity(6);
    segments.extend(cnot(Subsystem::Demon, p)?);
    segments.extend(cnot(Subsystem::Qutrit, p)?);
    Schedule::new(segments, p.step1_end(), p.step2_end())
}

/// One demon period: steps 1 and 2, then the reset for T − t₂.
pub fn build_cycle(p: &SystemParams) -> Result<Schedule> {
    p.validate()?;
    let mut s = gate_sequence(p)?;
    let rest = p.period - p.step2_end();
    // T = t₂ exactly leaves no room for a reset segment
    if rest > 0.0 {
        s.segments.push(PulseSegment::reset(rest)?);
    }
    Ok(s)
}

/// Run description written next to every output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub params: SystemParams,
    pub policy: crate::policy::NumericalPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub elapsed_seconds: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, params: &SystemParams) -> Self {
        RunManifest {
            command: command.into(),
            version: crate::VERSION.to_string(),
            params: *params,
            policy: crate::policy::NumericalPolicy::current(),
            schedule: None,
            extra: Default::default(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn with_schedule(mut self, s: &Schedule) -> Self {
        self.schedule = Some(s.clone());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.extra.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
