//! Field snapshots as JSON and tabular outputs as CSV.
//!
//! A snapshot stores its grid alongside the samples; complex numbers are
//! `[re, im]` pairs. Loading re-checks the grid and every sample.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::AuditRow;
use crate::solver::Record;
use crate::spectral::{LineField, LineGrid, PeriodicField, TorusGrid, C64, SPATIAL_SCALE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSnapshot {
    /// Fourier coefficients `w_n` for `n = -modes..=modes`.
    Periodic {
        modes: usize,
        samples: usize,
        spatial_scale: f64,
        coeffs: Vec<[f64; 2]>,
    },
    /// Samples at `s_j = -L/2 + j L/P`.
    Line {
        box_length: u32,
        points: usize,
        spatial_scale: f64,
        values: Vec<[f64; 2]>,
    },
}

fn pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|c| [c.re, c.im]).collect()
}

fn complex(pairs: &[[f64; 2]]) -> Result<Vec<C64>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &[re, im])| {
            if re.is_finite() && im.is_finite() {
                Ok(C64::new(re, im))
            } else {
                Err(Error::InvalidConfig(format!("sample {i} is not finite")))
            }
        })
        .collect()
}

fn check_scale(scale: f64) -> Result<()> {
    if (scale - SPATIAL_SCALE).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "snapshot uses spatial scale {scale}, expected {SPATIAL_SCALE}"
        )));
    }
    Ok(())
}

impl FieldSnapshot {
    pub fn from_periodic(w: &PeriodicField) -> Self {
        Self::Periodic {
            modes: w.grid().modes(),
            samples: w.grid().samples(),
            spatial_scale: SPATIAL_SCALE,
            coeffs: pairs(w.coeffs()),
        }
    }

    pub fn from_line(v: &LineField) -> Self {
        Self::Line {
            box_length: v.grid().box_length(),
            points: v.grid().points(),
            spatial_scale: SPATIAL_SCALE,
            values: pairs(v.values()),
        }
    }

    pub fn into_periodic(self) -> Result<PeriodicField> {
        match self {
            Self::Periodic {
                modes,
                samples,
                spatial_scale,
                coeffs,
            } => {
                check_scale(spatial_scale)?;
                PeriodicField::new(TorusGrid::with_samples(modes, samples)?, complex(&coeffs)?)
            }
            Self::Line { .. } => Err(Error::GridMismatch("expected a periodic field, found a line field".into())),
        }
    }

    pub fn into_line(self) -> Result<LineField> {
        match self {
            Self::Line {
                box_length,
                points,
                spatial_scale,
                values,
            } => {
                check_scale(spatial_scale)?;
                LineField::new(LineGrid::new(box_length, points)?, complex(&values)?)
            }
            Self::Periodic { .. } => Err(Error::GridMismatch("expected a line field, found a periodic field".into())),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}

/// Columns `t, w_mass, v_l2, v_hs, E_slot_<j>...`.
pub fn write_trajectory_csv<W: Write>(out: W, records: &[Record], slots: &[i64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "w_mass".into(), "v_l2".into(), "v_hs".into()];
    header.extend(slots.iter().map(|j| format!("E_slot_{j}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            format!("{:.9e}", r.t),
            format!("{:.15e}", r.w_mass),
            format!("{:.15e}", r.v_l2),
            format!("{:.15e}", r.v_sobolev),
        ];
        row.extend(r.slot_energy.iter().map(|e| format!("{e:.15e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `kind, n, n1, n2, n3, ratio`.
pub fn write_audit_csv<W: Write>(out: W, rows: &[AuditRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "n", "n1", "n2", "n3", "ratio"])?;
    for r in rows {
        w.write_record([
            r.kind.label().to_string(),
            r.n.to_string(),
            r.n1.to_string(),
            r.n2.to_string(),
            r.n3.to_string(),
            format!("{:.12e}", r.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}
