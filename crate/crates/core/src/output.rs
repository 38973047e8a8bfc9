//! CSV and JSON artifacts.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::moments::ProfileTable;
use crate::pde::MacroFields;
use crate::sim::EstimateTable;

pub const PROFILE_COLUMNS: [&str; 9] = [
    "x", "u", "mean_r", "mean_p", "pp", "rr", "energy", "phi", "current",
];
pub const PDE_COLUMNS: [&str; 6] = ["t", "u", "r", "e", "e_mech", "e_th"];

/// Build identification embedded at compile time.
pub fn git_describe() -> &'static str {
    env!("NESS_GIT_DESCRIBE")
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn profile_row(p: &ProfileTable, x: usize) -> Vec<String> {
    vec![
        x.to_string(),
        fmt(x as f64 / p.n as f64),
        fmt(p.mean_r[x]),
        fmt(p.mean_p[x]),
        fmt(p.pp[x]),
        fmt(p.rr[x]),
        fmt(p.energy[x]),
        p.phi[x].map(fmt).unwrap_or_default(),
        fmt(p.current[x]),
    ]
}

pub fn write_profile_csv<W: Write>(w: W, p: &ProfileTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_COLUMNS)?;
    for x in 0..=p.n {
        out.write_record(profile_row(p, x))?;
    }
    out.flush()?;
    Ok(())
}

/// Profile columns followed by `est_se_<column>` for every estimated column.
pub fn estimate_columns() -> Vec<String> {
    let mut cols: Vec<String> = PROFILE_COLUMNS.iter().map(|c| c.to_string()).collect();
    cols.extend(PROFILE_COLUMNS[2..].iter().map(|c| format!("est_se_{c}")));
    cols
}

pub fn write_estimate_csv<W: Write>(w: W, est: &EstimateTable) -> Result<()> {
    let p = est.to_profile();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(estimate_columns())?;
    for x in 0..=est.n {
        let mut row = profile_row(&p, x);
        let se = [
            &est.mean_r,
            &est.mean_p,
            &est.pp,
            &est.rr,
            &est.energy,
            &est.phi,
            &est.current,
        ];
        for (k, col) in se.iter().enumerate() {
            let undefined = x == 0 && matches!(k, 0 | 3 | 5);
            row.push(if undefined { String::new() } else { fmt(col[x].std_err) });
        }
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_fields_csv<W: Write>(w: W, fields: &[MacroFields]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PDE_COLUMNS)?;
    for f in fields {
        let (mech, th) = (f.e_mech(), f.e_th());
        for i in 0..=f.m {
            out.write_record([
                fmt(f.t),
                fmt(f.u(i)),
                fmt(f.r[i]),
                fmt(f.e[i]),
                fmt(mech[i]),
                fmt(th[i]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}
