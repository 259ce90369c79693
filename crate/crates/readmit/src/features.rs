//! Feature matrices keyed by HADM_ID: sparse, dense and embedding CSVs.

use std::io::{Read, Write};
use std::path::Path;

use readmit_core::features::{DocumentEmbedding, SparseVector, DOC_DIM};
use readmit_core::linalg::Matrix;

use crate::error::{Error, Result};
use crate::tables::{csv_reader, csv_writer};

/// Rows of features in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<u64>,
    pub matrix: Matrix,
}

impl FeatureTable {
    pub fn new(ids: Vec<u64>, matrix: Matrix) -> Result<Self> {
        if ids.len() != matrix.rows() {
            return Err(Error::Invalid(format!("{} ids for {} feature rows", ids.len(), matrix.rows())));
        }
        Ok(Self { ids, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Rows for `wanted`, in that order; unknown ids are an error.
    pub fn select(&self, wanted: &[u64]) -> Result<Matrix> {
        let index: std::collections::HashMap<u64, usize> = self.ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let rows = wanted
            .iter()
            .map(|id| index.get(id).copied().ok_or_else(|| Error::Invalid(format!("no features for HADM_ID {id}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.matrix.select_rows(&rows))
    }
}

fn err(origin: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::from_csv(origin, e)
}

fn parse_value(raw: &str, line: u64, origin: &Path) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::row(origin, line, format!("{raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::row(origin, line, format!("non-finite value {raw}")));
    }
    Ok(v)
}

pub fn write_sparse<W: Write>(writer: W, ids: &[u64], rows: &[SparseVector], origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["HADM_ID", "DIM", "ENTRIES"]).map_err(err(origin))?;
    for (id, v) in ids.iter().zip(rows) {
        let entries: Vec<String> = v.entries.iter().map(|(i, x)| format!("{i}:{x}")).collect();
        w.write_record([id.to_string(), v.dimension.to_string(), entries.join(" ")]).map_err(err(origin))?;
    }
    w.flush().map_err(|e| Error::io(origin, e))
}

pub fn write_dense<W: Write>(writer: W, table: &FeatureTable, prefix: &str, origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let mut header = vec!["HADM_ID".to_string()];
    header.extend((0..table.dim()).map(|j| format!("{prefix}{j:04}")));
    w.write_record(&header).map_err(err(origin))?;
    let mut rec = Vec::with_capacity(table.dim() + 1);
    for (id, row) in table.ids.iter().zip(table.matrix.iter_rows()) {
        rec.clear();
        rec.push(id.to_string());
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(err(origin))?;
    }
    w.flush().map_err(|e| Error::io(origin, e))
}

/// Reads either layout: `HADM_ID,DIM,ENTRIES` or `HADM_ID` followed by
/// value columns.
pub fn parse_features<R: Read>(reader: R, origin: &Path) -> Result<FeatureTable> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(err(origin))?.clone();
    if headers.get(0).map(str::trim) != Some("HADM_ID") {
        return Err(Error::format(origin, "first column must be HADM_ID"));
    }
    let sparse = headers.len() == 3 && &headers[1] == "DIM" && &headers[2] == "ENTRIES";
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut dim: Option<usize> = if sparse { None } else { Some(headers.len() - 1) };
    for (row, r) in rdr.records().enumerate() {
        let rec = r.map_err(err(origin))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: u64 = rec[0].trim().parse().map_err(|_| Error::row(origin, line, format!("bad HADM_ID {:?}", &rec[0])))?;
        ids.push(id);
        if sparse {
            if rec.len() != 3 {
                return Err(Error::row(origin, line, format!("row {} has {} fields, expected 3", row + 1, rec.len())));
            }
            let d: usize = rec[1].trim().parse().map_err(|_| Error::row(origin, line, "bad DIM"))?;
            if *dim.get_or_insert(d) != d {
                return Err(Error::row(origin, line, format!("DIM {d} differs from earlier rows")));
            }
            let mut entries = Vec::new();
            for pair in rec[2].split_ascii_whitespace() {
                let (i, v) = pair.split_once(':').ok_or_else(|| Error::row(origin, line, format!("bad entry {pair:?}")))?;
                let i: usize = i.parse().map_err(|_| Error::row(origin, line, format!("bad index {i:?}")))?;
                entries.push((i, parse_value(v, line, origin)?));
            }
            let v = SparseVector::new(d, entries).map_err(|e| Error::row(origin, line, e.to_string()))?;
            data.extend(v.to_dense());
        } else {
            let d = dim.unwrap_or(0);
            if rec.len() != d + 1 {
                return Err(Error::row(
                    origin,
                    line,
                    format!("dimension error in row {}: {} value columns, expected {d}", row + 1, rec.len() - 1),
                ));
            }
            for raw in rec.iter().skip(1) {
                data.push(parse_value(raw, line, origin)?);
            }
        }
    }
    let n = ids.len();
    let matrix = Matrix::from_vec(n, dim.unwrap_or(0), data)?;
    check_unique(&ids, origin)?;
    FeatureTable::new(ids, matrix)
}

fn check_unique(ids: &[u64], origin: &Path) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    match ids.iter().find(|id| !seen.insert(**id)) {
        Some(id) => Err(Error::format(origin, format!("duplicate HADM_ID {id}"))),
        None => Ok(()),
    }
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    parse_features(crate::tables::open(path)?, path)
}

pub const EMBEDDING_PREFIX: &str = "E";

pub fn write_embeddings<W: Write>(writer: W, rows: &[DocumentEmbedding], origin: &Path) -> Result<()> {
    if let Some(bad) = rows.iter().find(|r| r.vector.len() != DOC_DIM) {
        return Err(Error::Invalid(format!("embedding for HADM_ID {} has {} values", bad.hadm_id, bad.vector.len())));
    }
    let ids = rows.iter().map(|r| r.hadm_id).collect();
    let data = rows.iter().flat_map(|r| r.vector.iter().copied()).collect();
    let table = FeatureTable::new(ids, Matrix::from_vec(rows.len(), DOC_DIM, data)?)?;
    write_dense(writer, &table, EMBEDDING_PREFIX, origin)
}

/// Reads an embedding CSV, requiring the `HADM_ID,E0000..E3071` layout.
pub fn parse_embeddings<R: Read>(reader: R, origin: &Path) -> Result<FeatureTable> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(err(origin))?.clone();
    let expected = std::iter::once("HADM_ID".to_string()).chain((0..DOC_DIM).map(|j| format!("{EMBEDDING_PREFIX}{j:04}")));
    if headers.len() != DOC_DIM + 1 || !headers.iter().zip(expected).all(|(h, e)| h.trim() == e) {
        return Err(Error::format(origin, format!("embedding header must be HADM_ID,E0000..E{:04}", DOC_DIM - 1)));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (row, r) in rdr.records().enumerate() {
        let rec = r.map_err(err(origin))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != DOC_DIM + 1 {
            return Err(Error::row(
                origin,
                line,
                format!("dimension error in row {}: {} value columns, expected {DOC_DIM}", row + 1, rec.len() - 1),
            ));
        }
        ids.push(rec[0].trim().parse().map_err(|_| Error::row(origin, line, format!("bad HADM_ID {:?}", &rec[0])))?);
        for raw in rec.iter().skip(1) {
            data.push(parse_value(raw, line, origin)?);
        }
    }
    check_unique(&ids, origin)?;
    let n = ids.len();
    FeatureTable::new(ids, Matrix::from_vec(n, DOC_DIM, data)?)
}

pub fn read_embeddings(path: &Path) -> Result<FeatureTable> {
    parse_embeddings(crate::tables::open(path)?, path)
}
