use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::epidemic::{EpidemicParams, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::network::Threshold;

/// How a network is reduced for a given `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    /// Remove classes larger than `phi`.
    Threshold,
    /// Remove uniformly random enrollments down to the count thresholding
    /// at `phi` would keep.
    Thin,
}

impl ReductionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionMode::Threshold => "threshold",
            ReductionMode::Thin => "thin",
        }
    }
}

impl fmt::Display for ReductionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReductionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(ReductionMode::Threshold),
            "thin" => Ok(ReductionMode::Thin),
            _ => Err(format!("unknown mode `{s}` (expected `threshold` or `thin`)")),
        }
    }
}

/// One simulated run reduced to its summaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub combo_index: usize,
    pub params: EpidemicParams,
    pub phi: Threshold,
    pub mode: ReductionMode,
    pub replicate: usize,
    pub seed: u64,
    /// Population of the reduced network's largest component.
    pub n: usize,
    pub cii: f64,
    pub peak: f64,
    pub final_day_active: u32,
}

pub const SWEEP_HEADER: [&str; 17] = [
    "combo_index",
    "theta_I2",
    "rho_A",
    "rho_I1",
    "q_E",
    "q_A",
    "q_I1",
    "q_I2",
    "q_EA",
    "phi",
    "mode",
    "replicate",
    "seed",
    "N",
    "cii",
    "peak",
    "final_day_active",
];

impl SweepRecord {
    fn fields(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(SWEEP_HEADER.len());
        out.push(self.combo_index.to_string());
        out.extend(self.params.to_array().iter().map(f64::to_string));
        out.push(self.phi.to_string());
        out.push(self.mode.to_string());
        out.push(self.replicate.to_string());
        out.push(self.seed.to_string());
        out.push(self.n.to_string());
        out.push(self.cii.to_string());
        out.push(self.peak.to_string());
        out.push(self.final_day_active.to_string());
        out
    }
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}

/// Read a sweep CSV by column name; column order and extra columns are free.
pub fn read_sweep_csv<R: Read>(source: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let mut cols = [0usize; SWEEP_HEADER.len()];
    for (slot, name) in cols.iter_mut().zip(SWEEP_HEADER) {
        *slot = *position
            .get(name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let field = |k: usize| row.get(cols[k]).unwrap_or("").trim();
        fn parse<T: FromStr>(v: &str, name: &str, line: u64) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e| Error::Parse {
                line,
                msg: format!("column `{name}`: `{v}`: {e}"),
            })
        }
        let mut params = [0.0; 8];
        for (k, p) in params.iter_mut().enumerate() {
            *p = parse(field(1 + k), PARAM_NAMES[k], line)?;
        }
        records.push(SweepRecord {
            combo_index: parse(field(0), SWEEP_HEADER[0], line)?,
            params: EpidemicParams::from_array(params),
            phi: parse(field(9), "phi", line)?,
            mode: parse(field(10), "mode", line)?,
            replicate: parse(field(11), "replicate", line)?,
            seed: parse(field(12), "seed", line)?,
            n: parse(field(13), "N", line)?,
            cii: parse(field(14), "cii", line)?,
            peak: parse(field(15), "peak", line)?,
            final_day_active: parse(field(16), "final_day_active", line)?,
        });
    }
    Ok(records)
}
