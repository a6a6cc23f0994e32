//! CSV and JSON export. CSV files carry a header row with a fixed column
//! order; JSON documents carry a `schema` field.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ProfileChart, RadialProfile};
use crate::integrate::Trajectory;
use crate::orbits::{DiagramRow, OrbitRecord};
use crate::spectral::{EnergyBreakdown, NehariResiduals, PeriodicField};

pub const SCHEMA: &str = "cde-lab/1";

/// Shortest decimal that round-trips, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_rows<W: Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `t,u,v,a,b,H`.
pub fn write_trajectory_csv<W: Write>(w: W, tr: &Trajectory) -> Result<()> {
    write_rows(
        w,
        &["t", "u", "v", "a", "b", "H"],
        tr.times
            .iter()
            .zip(&tr.states)
            .zip(&tr.energy_series)
            .map(|((t, s), h)| vec![*t, s.u, s.v, s.a, s.b, *h]),
    )
}

/// Columns `t,u,a,b` on `n` uniform samples of one period `t ∈ [0, 2T)`.
pub fn write_field_csv<W: Write>(w: W, f: &PeriodicField, n: usize) -> Result<()> {
    let (times, states) = f.orbit_samples(n)?;
    write_rows(
        w,
        &["t", "u", "a", "b"],
        times.iter().zip(&states).map(|(t, s)| vec![*t, s.u, s.a, s.b]),
    )
}

fn profile_header(chart: ProfileChart) -> [&'static str; 4] {
    match chart {
        ProfileChart::Cylinder => ["t", "u", "a", "b"],
        ProfileChart::Euclidean => ["r", "u", "f1", "f2"],
        ProfileChart::Sphere => ["theta", "u", "f1", "f2"],
    }
}

pub fn write_profile_csv<W: Write>(w: W, p: &RadialProfile) -> Result<()> {
    write_rows(
        w,
        &profile_header(p.chart),
        (0..p.len()).map(|j| vec![p.grid[j], p.u[j], p.f1[j], p.f2[j]]),
    )
}

/// Read a profile written by [`write_profile_csv`]; the chart comes from the header.
pub fn read_profile_csv<R: Read>(r: R) -> Result<RadialProfile> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let chart = [ProfileChart::Cylinder, ProfileChart::Euclidean, ProfileChart::Sphere]
        .into_iter()
        .find(|c| profile_header(*c).iter().zip(&header).all(|(a, b)| a == b) && header.len() == 4)
        .ok_or_else(|| Error::InvalidInput(format!("unrecognized profile header {header:?}")))?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for rec in rd.records() {
        let rec = rec?;
        for (k, col) in cols.iter_mut().enumerate() {
            let field = rec.get(k).ok_or_else(|| Error::InvalidInput("short row".into()))?;
            col.push(
                field
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("not a number: {field}")))?,
            );
        }
    }
    let [grid, u, f1, f2] = cols;
    RadialProfile::new(chart, grid, u, f1, f2)
}

/// Columns `epsilon,T,delta_eps,gap,converged`.
pub fn write_diagram_csv<W: Write>(w: W, rows: &[DiagramRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epsilon", "T", "delta_eps", "gap", "converged"])?;
    for r in rows {
        out.write_record([
            fmt_f64(r.epsilon),
            fmt_f64(r.half_period),
            fmt_f64(r.delta_eps),
            fmt_f64(r.gap),
            r.converged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// JSON form of a spectral field with its energy and Nehari defects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub schema: String,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub modes: usize,
    pub u_coeffs: Vec<[f64; 2]>,
    pub z_plus_coeffs: Vec<[f64; 2]>,
    pub z_minus_coeffs: Vec<[f64; 2]>,
    pub energy: EnergyBreakdown,
    pub residuals: NehariResiduals,
}

impl FieldRecord {
    pub fn new(f: &PeriodicField, energy: EnergyBreakdown, residuals: NehariResiduals) -> Self {
        let doc = f.to_document();
        Self {
            schema: SCHEMA.into(),
            epsilon: doc.epsilon,
            modes: doc.modes,
            u_coeffs: doc.u_coeffs,
            z_plus_coeffs: doc.z_plus_coeffs,
            z_minus_coeffs: doc.z_minus_coeffs,
            energy,
            residuals,
        }
    }

    pub fn field(&self) -> Result<PeriodicField> {
        PeriodicField::from_document(&crate::spectral::FieldDocument {
            epsilon: self.epsilon,
            modes: self.modes,
            u_coeffs: self.u_coeffs.clone(),
            z_plus_coeffs: self.z_plus_coeffs.clone(),
            z_minus_coeffs: self.z_minus_coeffs.clone(),
        })
    }
}

/// An orbit record tagged with the schema, optionally carrying the field it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDocument {
    pub schema: String,
    #[serde(flatten)]
    pub record: OrbitRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<FieldRecord>,
}

impl OrbitDocument {
    pub fn new(record: OrbitRecord, field: Option<FieldRecord>) -> Self {
        Self {
            schema: SCHEMA.into(),
            record,
            field,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
