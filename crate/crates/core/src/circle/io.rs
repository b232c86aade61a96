//! CSV (`angle,value`) and JSON (`{"kind", "angles", "values"}`) layouts for
//! measures and potentials.
//!
//! Measures store masses in the value column. A CSV file whose angles are
//! exactly the uniform grid 2πj/n is read back as a grid object.

use super::{grid_angle, Atom, CircleMeasure, Potential};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Grid,
    Atomic,
}

/// Serialized form shared by measures and potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub kind: RecordKind,
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
}

impl Record {
    fn grid(values: Vec<f64>) -> Self {
        let n = values.len();
        Record {
            kind: RecordKind::Grid,
            angles: (0..n).map(|j| grid_angle(j, n)).collect(),
            values,
        }
    }

    fn check(&self) -> Result<()> {
        if self.angles.len() != self.values.len() {
            return Err(Error::Dimension(self.angles.len(), self.values.len()));
        }
        if self.kind == RecordKind::Grid {
            let n = self.angles.len();
            for (j, a) in self.angles.iter().enumerate() {
                if (a - grid_angle(j, n)).abs() > 1e-9 {
                    return Err(Error::InvalidMeasure(format!(
                        "angle {a} at row {j} is not on the {n}-point grid"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["angle", "value"])?;
        for (a, v) in self.angles.iter().zip(&self.values) {
            wtr.write_record([a.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut angles = Vec::new();
        let mut values = Vec::new();
        for row in rdr.deserialize() {
            let (a, v): (f64, f64) = row?;
            angles.push(a);
            values.push(v);
        }
        let n = angles.len();
        let on_grid = angles
            .iter()
            .enumerate()
            .all(|(j, a)| (a - grid_angle(j, n)).abs() <= 1e-12);
        Ok(Record {
            kind: if on_grid {
                RecordKind::Grid
            } else {
                RecordKind::Atomic
            },
            angles,
            values,
        })
    }
}

impl CircleMeasure {
    pub fn to_record(&self) -> Record {
        match self {
            CircleMeasure::Grid(g) => Record::grid(g.weights().to_vec()),
            CircleMeasure::Atomic(a) => Record {
                kind: RecordKind::Atomic,
                angles: a.atoms().iter().map(|x| x.angle).collect(),
                values: a.atoms().iter().map(|x| x.mass).collect(),
            },
        }
    }

    pub fn from_record(r: Record) -> Result<Self> {
        r.check()?;
        match r.kind {
            RecordKind::Grid => CircleMeasure::grid(r.values),
            RecordKind::Atomic => CircleMeasure::atomic(
                r.angles
                    .into_iter()
                    .zip(r.values)
                    .map(|(angle, mass)| Atom { angle, mass })
                    .collect(),
            ),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }
}

impl Potential {
    pub fn to_record(&self) -> Record {
        Record::grid(self.grid_values().to_vec())
    }

    pub fn from_record(r: Record) -> Result<Self> {
        if r.kind != RecordKind::Grid {
            return Err(Error::InvalidPotential(
                "potentials must be given on the grid".into(),
            ));
        }
        r.check()?;
        Potential::from_grid(r.values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }
}

impl From<CircleMeasure> for Record {
    fn from(m: CircleMeasure) -> Self {
        m.to_record()
    }
}

impl TryFrom<Record> for CircleMeasure {
    type Error = Error;
    fn try_from(r: Record) -> Result<Self> {
        CircleMeasure::from_record(r)
    }
}

impl From<Potential> for Record {
    fn from(q: Potential) -> Self {
        q.to_record()
    }
}

impl TryFrom<Record> for Potential {
    type Error = Error;
    fn try_from(r: Record) -> Result<Self> {
        Potential::from_record(r)
    }
}
