//! File formats: p-value lists, JSON documents, binary f64 matrices with a
//! JSON sidecar header, and TSV emission helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in &rows {
            if r.len() != ncols {
                return Err(Error::Schema("ragged rows in matrix".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Sidecar header stored next to a binary matrix as `<file>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Write `m` as little-endian f64 rows plus a JSON sidecar header.
pub fn write_matrix(path: &Path, m: &Matrix, meta: serde_json::Value) -> Result<()> {
    let header = MatrixHeader {
        rows: m.rows,
        cols: m.cols,
        dtype: "f64le".into(),
        meta,
    };
    write_json(&sidecar_path(path), &header)?;
    let mut w = BufWriter::new(File::create(path)?);
    for v in &m.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let header: MatrixHeader = read_json(&sidecar_path(path))?;
    if header.dtype != "f64le" {
        return Err(Error::Schema(format!(
            "unsupported matrix dtype {:?}",
            header.dtype
        )));
    }
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    let expect = header.rows * header.cols * 8;
    if raw.len() != expect {
        return Err(Error::Schema(format!(
            "matrix payload is {} bytes, header implies {}",
            raw.len(),
            expect
        )));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Matrix {
        rows: header.rows,
        cols: header.cols,
        data,
    })
}

/// Read a p-value file: one decimal per line, or a single-column CSV whose
/// header is `p`.
pub fn read_pvalues(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let path_str = path.display().to_string();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if lineno == 0 && t.eq_ignore_ascii_case("p") {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| Error::Parse {
            path: path_str.clone(),
            line: lineno + 1,
            msg: format!("{e}"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::EmptyPValues);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let m = Matrix::from_rows(vec![vec![1.0, 2.5], vec![-3.0, 4.0e-9]]).unwrap();
        write_matrix(&path, &m, serde_json::json!({"kind": "test"})).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn pvalue_file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("plain.txt");
        std::fs::write(&plain, "0.5\n0.25\n\n1.0\n").unwrap();
        assert_eq!(read_pvalues(&plain).unwrap(), vec![0.5, 0.25, 1.0]);

        let csv = dir.path().join("col.csv");
        std::fs::write(&csv, "p\n0.1\n0.9\n").unwrap();
        assert_eq!(read_pvalues(&csv).unwrap(), vec![0.1, 0.9]);

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "0.1\nnope\n").unwrap();
        assert!(matches!(
            read_pvalues(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
