//! Artifact formats: self-describing binary arrays and annotated CSV tables.
//!
//! A binary array file holds the magic `NLSXARR1`, the rank as a little-endian `u32`, the
//! dimensions as little-endian `u64`, then the row-major data as little-endian `f64`.

use crate::error::{Error, Result};
use crate::sph::{ChannelSet, SphField};
use crate::radial::RadialGrid;
use num_complex::Complex64 as C64;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"NLSXARR1";

/// Row-major array of `f64` with its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Array {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::Config(format!("array of {} values does not have shape {dims:?}", data.len())));
        }
        Ok(Array { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * (self.dims.len() + self.data.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("malformed array file: {m}"));
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic"));
        }
        let rank = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let head = 12 + 8 * rank;
        if bytes.len() < head {
            return Err(bad("truncated header"));
        }
        let dims: Vec<usize> = (0..rank).map(|k| u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().unwrap()) as usize).collect();
        let n: usize = dims.iter().product();
        if bytes.len() != head + 8 * n {
            return Err(bad("payload size does not match the dimensions"));
        }
        let data = bytes[head..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Array { dims, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Array::from_bytes(&fs::read(path)?)
    }
}

/// A field on the full channel set as an `[n, channels, 2]` array of real and imaginary parts.
pub fn field_to_array(f: &SphField) -> Array {
    let (n, nc) = (f.grid.n_inner(), f.channels.len());
    let mut data = Vec::with_capacity(2 * n * nc);
    for i in 0..n {
        for c in 0..nc {
            let z = f.at(i, c);
            data.push(z.re);
            data.push(z.im);
        }
    }
    Array { dims: vec![n, nc, 2], data }
}

/// Inverse of [`field_to_array`]; the channel count must be `(ℓ_max + 1)²`.
pub fn array_to_field(a: &Array, grid: RadialGrid) -> Result<SphField> {
    if a.dims.len() != 3 || a.dims[2] != 2 || a.dims[0] != grid.n_inner() {
        return Err(Error::Config(format!("array of shape {:?} is not a field on {} nodes", a.dims, grid.n_inner())));
    }
    let nc = a.dims[1];
    let lmax = (nc as f64).sqrt().round() as usize;
    if lmax == 0 || (lmax * lmax != nc) {
        return Err(Error::Config(format!("{nc} channels do not form a full set")));
    }
    let mut f = SphField::zeros(grid, ChannelSet::full(lmax - 1));
    for i in 0..a.dims[0] {
        for c in 0..nc {
            let k = 2 * (i * nc + c);
            f.set(i, c, C64::new(a.data[k], a.data[k + 1]));
        }
    }
    Ok(f)
}

/// CSV table preceded by `# key = value` metadata lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { meta: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push<I: IntoIterator<Item = S>, S: ToString>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Numeric rows of a CSV file, skipping `#` comment lines and a non-numeric header.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.trim_start().starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(body.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
        match row {
            Ok(r) => out.push(r),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(Error::Config(format!("{}: row {}: {e}", path.display(), k + 1))),
        }
    }
    Ok(out)
}

/// Shortest round-trip rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrays_round_trip_through_bytes() {
        let a = Array::new(vec![2, 3], vec![1.0, -2.5, 3.0, f64::MIN_POSITIVE, 0.0, 1e300]).unwrap();
        let b = a.to_bytes();
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(b.len(), 12 + 16 + 48);
        assert_eq!(Array::from_bytes(&b).unwrap(), a);
        assert!(Array::from_bytes(&b[..b.len() - 1]).is_err());
        assert!(Array::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn fields_round_trip_through_arrays() {
        let grid = RadialGrid::new(5.0, 64).unwrap();
        let mut f = SphField::zeros(grid, ChannelSet::full(2));
        for i in 0..grid.n_inner() {
            for c in 0..9 {
                f.set(i, c, C64::new(i as f64, c as f64 - 0.5));
            }
        }
        let g = array_to_field(&field_to_array(&f), grid).unwrap();
        let mut d = g.clone();
        d.axpy(C64::new(-1.0, 0.0), &f);
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn tables_carry_metadata_and_parse_back() {
        let mut t = Table::new(&["x", "y"]);
        t.meta("units", "dimensionless");
        t.push([num(1.5), num(-2.0)]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "# units = dimensionless\nx,y\n1.5e0,-2e0\n");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, s).unwrap();
        assert_eq!(read_numeric_csv(&p).unwrap(), vec![vec![1.5, -2.0]]);
    }
}
