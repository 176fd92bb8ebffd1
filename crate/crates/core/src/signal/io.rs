use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexSequence, Dataset, RealSequence};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"IMD2";
const CSV_HEADER: &str = "tx_i,tx_q,rx";

/// On-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `tx_i,tx_q,rx` header, one sample per row.
    Csv,
    /// `IMD2` magic, u32 LE sample count, then `(tx_i, tx_q, rx)` f64 LE triples.
    Binary,
}

impl DatasetFormat {
    /// `.bin` selects the binary encoding; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Self::Binary,
            _ => Self::Csv,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Loads a dataset. File formats carry no sample rate, so the result uses a
/// normalized rate of 1 Hz; see [`Dataset::with_sample_rate`].
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    let (tx, rx) = match format {
        DatasetFormat::Csv => read_csv(path)?,
        DatasetFormat::Binary => read_binary(path)?,
    };
    let tx = ComplexSequence::new(tx, 1.0)?;
    let rx = RealSequence::new(rx, 1.0)?;
    Dataset::new(tx, rx)
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: DatasetFormat) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let tx = dataset.tx().samples();
    let rx = dataset.rx().samples();
    match format {
        DatasetFormat::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            for (z, y) in tx.iter().zip(rx) {
                writeln!(w, "{},{},{}", z.re, z.im, y)?;
            }
        }
        DatasetFormat::Binary => {
            let len = u32::try_from(tx.len())
                .map_err(|_| Error::InvalidArgument("dataset too long for binary format".into()))?;
            w.write_all(MAGIC)?;
            w.write_all(&len.to_le_bytes())?;
            for (z, y) in tx.iter().zip(rx) {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
                w.write_all(&y.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(header) => {
            let header = header?;
            if header.trim_end_matches('\r').trim() != CSV_HEADER {
                return Err(parse_err(1, format!("expected header `{CSV_HEADER}`")));
            }
        }
        None => return Err(parse_err(1, "empty file")),
    }
    let mut tx = Vec::new();
    let mut rx = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let mut vals = [0.0; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("`{f}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value `{f}`")));
            }
        }
        tx.push(Complex64::new(vals[0], vals[1]));
        rx.push(vals[2]);
    }
    if tx.is_empty() {
        return Err(parse_err(2, "no samples"));
    }
    Ok((tx, rx))
}

fn read_binary(path: &Path) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(parse_err(0, "missing IMD2 magic header"));
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = &bytes[8..];
    if body.len() != len * 24 {
        return Err(parse_err(
            0,
            format!(
                "header declares {len} samples but payload holds {} bytes",
                body.len()
            ),
        ));
    }
    let mut tx = Vec::with_capacity(len);
    let mut rx = Vec::with_capacity(len);
    for (i, rec) in body.chunks_exact(24).enumerate() {
        let f = |o: usize| f64::from_le_bytes(rec[o..o + 8].try_into().expect("8 bytes"));
        let (re, im, y) = (f(0), f(8), f(16));
        if !(re.is_finite() && im.is_finite() && y.is_finite()) {
            // records are numbered from 1 in place of text lines
            return Err(parse_err(i + 1, "non-finite value"));
        }
        tx.push(Complex64::new(re, im));
        rx.push(y);
    }
    Ok((tx, rx))
}
