//! Physical parameters, all in units of the qubit–qutrit coupling J.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cold-qubit splitting (7 GHz at J = 2 MHz).
pub const DEFAULT_OMEGA_C: f64 = 3500.0;
pub const DEFAULT_OMEGA_H: f64 = 2000.0;
pub const DEFAULT_TEMP_C: f64 = 2000.0;
pub const DEFAULT_TEMP_H: f64 = 3000.0;
/// Memory-dump rate while the reset is on (16 MHz).
pub const DEFAULT_GAMMA_D: f64 = 8.0;
pub const DEFAULT_TAU_Y: f64 = 0.02;
pub const DEFAULT_TAU_CZ: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Qubit–qutrit coupling; sets the unit of energy.
    pub j: f64,
    pub omega_c: f64,
    pub omega_h: f64,
    /// Demon-memory splitting. Drops out of the rotating frame.
    pub omega_d: f64,
    pub temp_c: f64,
    pub temp_h: f64,
    /// Coupling of the cold and hot qubits to their Markovian reservoirs.
    pub gamma: f64,
    /// Reset rate of the demon memory during step 3.
    pub gamma_d: f64,
    pub tau_y: f64,
    pub tau_cz: f64,
    /// Full demon period T.
    pub period: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            j: 1.0,
            omega_c: DEFAULT_OMEGA_C,
            omega_h: DEFAULT_OMEGA_H,
            omega_d: 0.0,
            temp_c: DEFAULT_TEMP_C,
            temp_h: DEFAULT_TEMP_H,
            gamma: 2.0,
            gamma_d: DEFAULT_GAMMA_D,
            tau_y: DEFAULT_TAU_Y,
            tau_cz: DEFAULT_TAU_CZ,
            period: 1.0,
        }
    }
}

/// Names accepted by [`SystemParams::set`] and [`SystemParams::get`], with
/// their unit annotation.
pub const PARAM_FIELDS: &[(&str, &str)] = &[
    ("j", "J"),
    ("omega_c", "J"),
    ("omega_h", "J"),
    ("omega_d", "J"),
    ("temp_c", "J"),
    ("temp_h", "J"),
    ("gamma", "J"),
    ("gamma_d", "J"),
    ("tau_y", "1/J"),
    ("tau_cz", "1/J"),
    ("period", "1/J"),
];

impl SystemParams {
    /// End of step 1: two Y rotations and one controlled phase.
    pub fn step1_end(&self) -> f64 {
        2.0 * self.tau_y + self.tau_cz
    }

    /// End of step 2.
    pub fn step2_end(&self) -> f64 {
        2.0 * self.step1_end()
    }

    /// Checks everything except the cycle length.
    pub fn validate_physics(&self) -> Result<()> {
        let finite = [
            ("j", self.j),
            ("omega_c", self.omega_c),
            ("omega_h", self.omega_h),
            ("omega_d", self.omega_d),
            ("temp_c", self.temp_c),
            ("temp_h", self.temp_h),
            ("gamma", self.gamma),
            ("gamma_d", self.gamma_d),
            ("tau_y", self.tau_y),
            ("tau_cz", self.tau_cz),
            ("period", self.period),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if self.j < 0.0 {
            return Err(Error::InvalidParams(format!("j = {} < 0", self.j)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma = {} < 0", self.gamma)));
        }
        if self.gamma_d < 0.0 {
            return Err(Error::InvalidParams(format!("gamma_d = {} < 0", self.gamma_d)));
        }
        if self.tau_y <= 0.0 || self.tau_cz <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gate times must be positive (tau_y = {}, tau_cz = {})",
                self.tau_y, self.tau_cz
            )));
        }
        if self.temp_c <= 0.0 || self.temp_h <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "temperatures must be positive (temp_c = {}, temp_h = {})",
                self.temp_c, self.temp_h
            )));
        }
        if self.omega_c <= 0.0 || self.omega_h <= 0.0 {
            return Err(Error::InvalidParams("qubit splittings must be positive".into()));
        }
        Ok(())
    }

    /// Full validation including T ≥ t₂.
    pub fn validate(&self) -> Result<()> {
        self.validate_physics()?;
        let t2 = self.step2_end();
        if self.period < t2 {
            return Err(Error::CycleTooShort {
                period: self.period,
                required: t2,
            });
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive_params(self)
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "j" => self.j,
            "omega_c" => self.omega_c,
            "omega_h" => self.omega_h,
            "omega_d" => self.omega_d,
            "temp_c" => self.temp_c,
            "temp_h" => self.temp_h,
            "gamma" => self.gamma,
            "gamma_d" => self.gamma_d,
            "tau_y" => self.tau_y,
            "tau_cz" => self.tau_cz,
            "period" => self.period,
            _ => return Err(Error::InvalidParams(format!("unknown parameter {name:?}"))),
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "j" => &mut self.j,
            "omega_c" => &mut self.omega_c,
            "omega_h" => &mut self.omega_h,
            "omega_d" => &mut self.omega_d,
            "temp_c" => &mut self.temp_c,
            "temp_h" => &mut self.temp_h,
            "gamma" => &mut self.gamma,
            "gamma_d" => &mut self.gamma_d,
            "tau_y" => &mut self.tau_y,
            "tau_cz" => &mut self.tau_cz,
            "period" => &mut self.period,
            _ => return Err(Error::InvalidParams(format!("unknown parameter {name:?}"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }
}

/// Thermal occupations of the two bath modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub n_c: f64,
    pub n_h: f64,
    /// Thermal excited-state population of the cold qubit, n/(2n+1).
    pub lambda_c: f64,
    pub lambda_h: f64,
}

/// Bose occupation 1/(e^{ω/T} − 1).
pub fn bose_occupation(omega: f64, temp: f64) -> f64 {
    1.0 / (omega / temp).exp_m1()
}

/// Excited population of a two-level system in equilibrium, 1/(1 + e^{ω/T}).
pub fn thermal_excitation(omega: f64, temp: f64) -> f64 {
    let x = omega / temp;
    // e^{-x}/(1+e^{-x}) avoids overflow for cold baths
    let e = (-x).exp();
    e / (1.0 + e)
}

pub fn derive_params(p: &SystemParams) -> Result<DerivedParams> {
    if !(p.temp_c > 0.0) || !(p.temp_h > 0.0) {
        return Err(Error::InvalidParams(format!(
            "temperatures must be positive (temp_c = {}, temp_h = {})",
            p.temp_c, p.temp_h
        )));
    }
    Ok(DerivedParams {
        n_c: bose_occupation(p.omega_c, p.temp_c),
        n_h: bose_occupation(p.omega_h, p.temp_h),
        lambda_c: thermal_excitation(p.omega_c, p.temp_c),
        lambda_h: thermal_excitation(p.omega_h, p.temp_h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_occupations() {
        let d = derive_params(&SystemParams::default()).unwrap();
        // 1/(e^{1.75} − 1) and 1/(e^{2/3} − 1)
        assert_abs_diff_eq!(d.n_c, 0.2103, epsilon = 1e-4);
        assert_abs_diff_eq!(d.n_h, 1.0551, epsilon = 1e-4);
        assert_abs_diff_eq!(d.lambda_c, d.n_c / (2.0 * d.n_c + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(d.lambda_h, d.n_h / (2.0 * d.n_h + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn hot_limit() {
        let d = derive_params(&SystemParams {
            temp_c: 1e12,
            ..Default::default()
        })
        .unwrap();
        assert!(d.n_c > 1e8);
        assert_abs_diff_eq!(d.lambda_c, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn non_positive_temperature_rejected() {
        let p = SystemParams {
            temp_h: 0.0,
            ..Default::default()
        };
        assert!(derive_params(&p).is_err());
        assert!(p.validate().is_err());
    }

    #[test]
    fn short_cycle_rejected() {
        let p = SystemParams {
            period: 0.2,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::CycleTooShort { .. })));
        assert_abs_diff_eq!(SystemParams::default().step2_end(), 0.28, epsilon = 1e-15);
    }

    #[test]
    fn named_access() {
        let mut p = SystemParams::default();
        for (name, _) in PARAM_FIELDS {
            let v = p.get(name).unwrap();
            p.set(name, v).unwrap();
        }
        assert_eq!(p, SystemParams::default());
        assert!(p.set("T_cycle", 1.0).is_err());
    }

    #[test]
    fn unknown_keys_rejected_in_toml() {
        let ok: SystemParams = toml::from_str("gamma = 30.0\nperiod = 2.0").unwrap();
        assert_eq!(ok.gamma, 30.0);
        assert_eq!(ok.temp_c, DEFAULT_TEMP_C);
        assert!(toml::from_str::<SystemParams>("gama = 30.0").is_err());
    }
}
