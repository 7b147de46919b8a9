//! CSV snapshots of measures and plans.
//!
//! Measures are written as `w,x1,...,xd`, velocity measures as
//! `w,x1,...,xd,v1,...,vd`, plans as `i,j,mass`. Reals use 17 significant
//! digits so a save/load round trip is exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, VelocityMeasure};
use crate::transport::PlanEntry;

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}{k}")).collect()
}

pub fn write_measure<W: Write>(out: W, mu: &DiscreteMeasure) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["w".to_string()];
    head.extend(header("x", mu.dim()));
    w.write_record(&head)?;
    for (x, wt) in mu.atoms() {
        let mut rec = vec![fmt_real(wt)];
        rec.extend(x.iter().map(|c| fmt_real(*c)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_velocity_measure<W: Write>(out: W, phi: &VelocityMeasure) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["w".to_string()];
    head.extend(header("x", phi.dim()));
    head.extend(header("v", phi.dim()));
    w.write_record(&head)?;
    for (x, v, wt) in phi.atoms() {
        let mut rec = vec![fmt_real(wt)];
        rec.extend(x.iter().chain(v).map(|c| fmt_real(*c)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plan<W: Write>(out: W, entries: &[PlanEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "mass"])?;
    for e in entries {
        w.write_record([e.i.to_string(), e.j.to_string(), fmt_real(e.mass)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let head: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != head.len() {
            return Err(Error::Parse(format!("row has {} fields, header has {}", row.len(), head.len())));
        }
        rows.push(row);
    }
    Ok((head, rows))
}

pub fn read_measure<R: Read>(input: R) -> Result<DiscreteMeasure> {
    let (head, rows) = read_rows(input)?;
    if head.first().map(String::as_str) != Some("w") || head.len() < 2 {
        return Err(Error::Parse("expected header w,x1,...,xd".into()));
    }
    let d = head.len() - 1;
    let mut coords = Vec::with_capacity(rows.len() * d);
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        weights.push(row[0]);
        coords.extend_from_slice(&row[1..]);
    }
    DiscreteMeasure::from_flat(d, coords, weights)
}

pub fn read_velocity_measure<R: Read>(input: R) -> Result<VelocityMeasure> {
    let (head, rows) = read_rows(input)?;
    if head.first().map(String::as_str) != Some("w") || head.len() < 3 || head.len() % 2 == 0 {
        return Err(Error::Parse("expected header w,x1..xd,v1..vd".into()));
    }
    let d = (head.len() - 1) / 2;
    let mut data = Vec::with_capacity(rows.len() * 2 * d);
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        weights.push(row[0]);
        data.extend_from_slice(&row[1..]);
    }
    VelocityMeasure::from_rows(d, data, weights)
}

pub fn save_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    write_measure(fs::File::create(path)?, mu)
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    read_measure(fs::File::open(path)?)
}

pub fn save_velocity_measure(path: &Path, phi: &VelocityMeasure) -> Result<()> {
    write_velocity_measure(fs::File::create(path)?, phi)
}

pub fn load_velocity_measure(path: &Path) -> Result<VelocityMeasure> {
    read_velocity_measure(fs::File::open(path)?)
}

/// Serde representation of a measure as rows `[w, x1, ..., xd]`.
pub mod atom_rows {
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::measure::DiscreteMeasure;

    /// Borrowing wrapper that serializes as rows.
    pub struct Rows<'a>(pub &'a DiscreteMeasure);

    impl Serialize for Rows<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            serialize(self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(mu: &DiscreteMeasure, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(mu.len()))?;
        for (x, w) in mu.atoms() {
            let mut row = Vec::with_capacity(x.len() + 1);
            row.push(w);
            row.extend_from_slice(x);
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DiscreteMeasure, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> crate::Result<DiscreteMeasure> {
        let dim = rows.first().map(|r| r.len().saturating_sub(1)).unwrap_or(0);
        if dim == 0 {
            return Err(crate::Error::InvalidMeasure("atoms need a weight and coordinates".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        let mut weights = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != dim + 1 {
                return Err(crate::Error::DimensionMismatch { left: dim, right: r.len().saturating_sub(1) });
            }
            weights.push(r[0]);
            coords.extend_from_slice(&r[1..]);
        }
        DiscreteMeasure::from_flat(dim, coords, weights)
    }
}
