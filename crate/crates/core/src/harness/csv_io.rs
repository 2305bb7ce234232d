//! Trajectory CSV files.

use std::io::{Read, Write};

use crate::integrator::{Sample, Trajectory};
use crate::model::{FluxBreakdown, State4};

pub const COLUMNS: [&str; 18] = [
    "t", "b_env", "b_stor", "c", "e", "b_total", "z", "g_z", "g_kz", "v_ratio", "y_lyap", "q", "h",
    "f", "db_env", "db_stor", "dc", "de",
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    BadValue {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("trajectory file has no rows")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(s: &Sample) -> [String; 18] {
    let f = fmt_f64;
    [
        f(s.t),
        f(s.state.b_env),
        f(s.state.b_stor),
        f(s.state.c),
        f(s.state.e),
        f(s.b_total()),
        f(s.flux.z),
        f(s.flux.g_z),
        f(s.flux.g_kz),
        s.v_ratio.map(f).unwrap_or_default(),
        f(s.y_lyap),
        f(s.flux.q),
        f(s.flux.h),
        f(s.flux.f),
        f(s.rhs.b_env),
        f(s.rhs.b_stor),
        f(s.rhs.c),
        f(s.rhs.e),
    ]
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for s in &traj.samples {
        w.write_record(row(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_to_string(traj: &Trajectory) -> Result<String, CsvError> {
    let mut buf = Vec::new();
    write_trajectory(traj, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// Reads a trajectory written by [`write_trajectory`]. Extra columns are
/// ignored; missing ones are an error.
pub fn read_trajectory<R: Read>(input: R, positivity_floor: f64) -> Result<Trajectory, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let index: Vec<Option<usize>> = COLUMNS
        .iter()
        .map(|c| headers.iter().position(|h| h.trim() == *c))
        .collect();
    let missing: Vec<String> = COLUMNS
        .iter()
        .zip(&index)
        .filter(|(_, i)| i.is_none())
        .map(|(c, _)| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CsvError::MissingColumns(missing));
    }
    let index: Vec<usize> = index.into_iter().flatten().collect();

    let mut samples = Vec::new();
    for (n, record) in r.records().enumerate() {
        let record = record?;
        let get = |k: usize| -> Result<Option<f64>, CsvError> {
            let raw = record.get(index[k]).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse().map(Some).map_err(|_| CsvError::BadValue {
                row: n + 1,
                column: COLUMNS[k],
                value: raw.to_string(),
            })
        };
        let need = |k: usize| -> Result<f64, CsvError> {
            get(k)?.ok_or(CsvError::BadValue {
                row: n + 1,
                column: COLUMNS[k],
                value: String::new(),
            })
        };
        samples.push(Sample {
            t: need(0)?,
            state: State4::new(need(1)?, need(2)?, need(3)?, need(4)?),
            flux: FluxBreakdown {
                z: need(6)?,
                g_z: need(7)?,
                g_kz: need(8)?,
                q: need(11)?,
                h: need(12)?,
                f: need(13)?,
            },
            v_ratio: get(9)?,
            y_lyap: need(10)?,
            rhs: State4::new(need(14)?, need(15)?, need(16)?, need(17)?),
        });
    }
    if samples.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(Trajectory::from_samples(samples, positivity_floor))
}
