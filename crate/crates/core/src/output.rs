//! CSV tables and their fixed column layouts.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! table can be re-read bit-for-bit. Units: times in 1/J, rates and currents
//! in J, entropies in nats, populations and excitations dimensionless.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Bumped whenever a header below changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const FIG2_HEADER: [&str; 8] = ["t", "P_1C", "P_2M", "P_1H", "P_1D", "S_CMH", "S_D", "S_tot"];
pub const FIG3_HEADER: [&str; 6] = ["gamma", "T", "model", "X", "J_av", "flag"];
pub const CYCLE_HEADER: [&str; 11] = [
    "T",
    "gamma",
    "X",
    "J_av",
    "X_Cn_spread",
    "model",
    "X_C",
    "X_H",
    "X_brute",
    "discrepancy",
    "flag",
];
pub const S5C_HEADER: [&str; 5] = ["n_C", "T_H", "tau_CZ", "gamma_opt", "product"];
pub const CONVERGENCE_HEADER: [&str; 5] = ["gamma", "T", "n", "X_Cn", "X_Hn"];
pub const DOUBLE_SHOT_HEADER: [&str; 5] = ["t_tilde", "X_total", "X_until_second", "removed_1", "removed_2"];

/// Units per column name, recorded in manifests.
pub fn column_units() -> serde_json::Value {
    serde_json::json!({
        "t": "1/J", "T": "1/J", "tau_CZ": "1/J", "tau_Y": "1/J",
        "gamma": "J", "gamma_D": "J", "gamma_opt": "J", "product": "J", "J_av": "J",
        "T_C": "J", "T_H": "J", "omega_C": "J", "omega_H": "J",
        "S_CMH": "nats", "S_D": "nats", "S_tot": "nats",
        "P_1C": "1", "P_2M": "1", "P_1H": "1", "P_1D": "1", "n_C": "1", "n": "cycles",
        "X": "excitations", "X_C": "excitations", "X_H": "excitations", "X_brute": "excitations",
        "X_Cn": "excitations", "X_Hn": "excitations", "X_Cn_spread": "excitations",
        "discrepancy": "excitations", "t_tilde": "1/J", "X_total": "excitations",
        "X_until_second": "excitations", "removed_1": "1", "removed_2": "1"
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub t: f64,
    pub p_1c: f64,
    pub p_2m: f64,
    pub p_1h: f64,
    pub p_1d: f64,
    pub s_cmh: f64,
    pub s_d: f64,
    pub s_tot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub gamma: f64,
    pub period: f64,
    pub model: String,
    pub x: f64,
    pub j_av: f64,
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub period: f64,
    pub gamma: f64,
    pub x: f64,
    pub j_av: f64,
    pub x_cn_spread: f64,
    pub model: String,
    pub x_c: f64,
    pub x_h: f64,
    pub x_brute: f64,
    pub discrepancy: f64,
    pub flag: String,
}

impl CycleRecord {
    pub fn from_result(r: &crate::observables::CycleResult) -> Self {
        CycleRecord {
            period: r.period,
            gamma: r.gamma,
            x: r.x,
            j_av: r.j_av,
            x_cn_spread: r.x_cn_spread,
            model: r.model.label().to_string(),
            x_c: r.x_c,
            x_h: r.x_h,
            x_brute: r.x_brute,
            discrepancy: r.discrepancy,
            flag: if r.converged { String::new() } else { "nonconverged".into() },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S5cRow {
    pub n_c: f64,
    pub temp_h: f64,
    pub tau_cz: f64,
    pub gamma_opt: f64,
    pub product: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub gamma: f64,
    pub period: f64,
    pub n: usize,
    pub x_cn: f64,
    pub x_hn: f64,
}

/// A header plus string records, written as RFC-4180 CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Rows carrying a non-empty `flag` column.
    pub fn flagged(&self) -> usize {
        match self.header.iter().position(|h| h == "flag") {
            Some(k) => self.rows.iter().filter(|r| !r[k].is_empty()).count(),
            None => 0,
        }
    }
}

pub fn fig2_table(rows: &[Fig2Row]) -> Table {
    let mut t = Table::new(&FIG2_HEADER);
    for r in rows {
        t.push(
            [r.t, r.p_1c, r.p_2m, r.p_1h, r.p_1d, r.s_cmh, r.s_d, r.s_tot]
                .iter()
                .map(|x| num(*x))
                .collect(),
        );
    }
    t
}

pub fn fig3_table(rows: &[Fig3Row]) -> Table {
    let mut t = Table::new(&FIG3_HEADER);
    for r in rows {
        t.push(vec![
            num(r.gamma),
            num(r.period),
            r.model.clone(),
            num(r.x),
            num(r.j_av),
            r.flag.clone(),
        ]);
    }
    t
}

pub fn cycle_table(rows: &[CycleRecord]) -> Table {
    let mut t = Table::new(&CYCLE_HEADER);
    for r in rows {
        t.push(vec![
            num(r.period),
            num(r.gamma),
            num(r.x),
            num(r.j_av),
            num(r.x_cn_spread),
            r.model.clone(),
            num(r.x_c),
            num(r.x_h),
            num(r.x_brute),
            num(r.discrepancy),
            r.flag.clone(),
        ]);
    }
    t
}

pub fn s5c_table(rows: &[S5cRow]) -> Table {
    let mut t = Table::new(&S5C_HEADER);
    for r in rows {
        t.push(
            [r.n_c, r.temp_h, r.tau_cz, r.gamma_opt, r.product]
                .iter()
                .map(|x| num(*x))
                .collect(),
        );
    }
    t
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new(&CONVERGENCE_HEADER);
    for r in rows {
        t.push(vec![num(r.gamma), num(r.period), r.n.to_string(), num(r.x_cn), num(r.x_hn)]);
    }
    t
}

pub fn double_shot_table(rows: &[crate::shots::DoubleShot]) -> Table {
    let mut t = Table::new(&DOUBLE_SHOT_HEADER);
    for r in rows {
        t.push(
            [r.t_tilde, r.x_total, r.x_until_second, r.removed[0], r.removed[1]]
                .iter()
                .map(|x| num(*x))
                .collect(),
        );
    }
    t
}
