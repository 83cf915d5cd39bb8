//! Matrix files: plain CSV (one row per line) and a little-endian binary
//! layout `"CRUTVMAT" | rows: u64 | cols: u64 | row-major f64 data`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::Matrix;

pub const MAGIC: &[u8; 8] = b"CRUTVMAT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Binary => "bin",
        }
    }

    /// Guesses from the file extension; anything but `.bin` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Format::Binary,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" | "binary" => Ok(Format::Binary),
            other => Err(Error::Parse(format!("unknown matrix format {other:?}"))),
        }
    }
}

/// Writes comma-separated values using the shortest round-trip formatting.
pub fn write_csv<W: Write>(a: &Matrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads CSV; blank lines are skipped and every row must have the same width.
pub fn read_csv<R: Read>(r: R) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number {field:?}", lineno + 1)))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse(format!(
                    "line {}: expected {c} fields, found {width}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    Matrix::new(rows, cols, data)
}

pub fn write_binary<W: Write>(a: &Matrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(MAGIC)?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(r: R) -> Result<Matrix> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::Parse("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Parse("bad magic, not a CRUTVMAT file".into()));
    }
    let rows = read_u64(&mut r)?;
    let cols = read_u64(&mut r)?;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse(format!("invalid dimensions {rows}x{cols}")));
    }
    let len = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::Parse(format!("dimensions {rows}x{cols} overflow")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Parse(format!("expected {} data bytes, found {}", len * 8, bytes.len())));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Matrix::new(rows as usize, cols as usize, data)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|_| Error::Parse("truncated header".into()))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_matrix(a: &Matrix, path: &Path, format: Format) -> Result<()> {
    let f = File::create(path)?;
    match format {
        Format::Csv => write_csv(a, f),
        Format::Binary => write_binary(a, f),
    }
}

pub fn read_matrix(path: &Path, format: Format) -> Result<Matrix> {
    let f = File::open(path)?;
    match format {
        Format::Csv => read_csv(f),
        Format::Binary => read_binary(f),
    }
}
