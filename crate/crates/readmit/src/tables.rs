//! Admission, note, cohort and split tables as CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use readmit_core::cohort::{AdmissionRecord, AdmissionType, CohortRow, NoteRecord, Split};
use readmit_core::time::Timestamp;
use serde::Serialize;

use crate::error::{Error, Result};

pub const ADMISSION_COLUMNS: [&str; 6] = ["SUBJECT_ID", "HADM_ID", "ADMITTIME", "DISCHTIME", "DEATHTIME", "ADMISSION_TYPE"];
pub const NOTE_COLUMNS: [&str; 5] = ["SUBJECT_ID", "HADM_ID", "CATEGORY", "CHARTDATE", "TEXT"];
pub const COHORT_COLUMNS: [&str; 10] = [
    "SUBJECT_ID",
    "HADM_ID",
    "ADMITTIME",
    "DISCHTIME",
    "ADMISSION_TYPE",
    "NEXT_ADMITTIME",
    "NEXT_ADMISSION_TYPE",
    "DAYS_NEXT_ADMIT",
    "LABEL",
    "TEXT",
];
pub const CLEAN_TEXT: &str = "CLEAN_TEXT";

/// A row that could not be used, with the 1-based line it started on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub source: String,
    pub line_number: u64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    /// Source line of each record.
    pub lines: Vec<u64>,
    pub rejects: Vec<Reject>,
    /// Well-formed rows left out on purpose (other note categories, empty text).
    pub excluded: usize,
}

impl<T> Default for Ingested<T> {
    fn default() -> Self {
        Self { records: Vec::new(), lines: Vec::new(), rejects: Vec::new(), excluded: 0 }
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(reader)
}

pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer)
}

/// Column positions for `wanted`, failing on the first one that is missing.
pub(crate) fn header_index<const N: usize>(
    headers: &csv::StringRecord,
    wanted: &[&str; N],
    origin: &Path,
) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(wanted) {
        *slot = headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::format(origin, format!("missing column {name}")))?;
    }
    Ok(out)
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, name: &str) -> Result<&'a str, String> {
    record.get(idx).ok_or_else(|| format!("row has {} fields, {name} is missing", record.len()))
}

fn parse_id(record: &csv::StringRecord, idx: usize, name: &str) -> Result<u64, String> {
    let raw = field(record, idx, name)?.trim();
    raw.parse().map_err(|_| format!("{name} {raw:?} is not a non-negative integer"))
}

fn parse_time(record: &csv::StringRecord, idx: usize, name: &str) -> Result<Option<Timestamp>, String> {
    let raw = field(record, idx, name)?.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    Timestamp::parse(raw).map(Some).map_err(|e| format!("{name}: {e}"))
}

fn required_time(record: &csv::StringRecord, idx: usize, name: &str) -> Result<Timestamp, String> {
    parse_time(record, idx, name)?.ok_or_else(|| format!("{name} is empty"))
}

fn records<'a, R: Read>(
    reader: &'a mut csv::Reader<R>,
    origin: &Path,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'a {
    let origin = origin.to_path_buf();
    reader.records().map(move |r| {
        let record = r.map_err(|e| Error::from_csv(&origin, e))?;
        let line = record.position().map_or(0, |p| p.line());
        Ok((line, record))
    })
}

/// Parses an admissions table. Malformed rows, reversed stays and repeated
/// HADM_IDs become rejects; a missing column is fatal.
pub fn parse_admissions<R: Read>(reader: R, origin: &Path) -> Result<Ingested<AdmissionRecord>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::from_csv(origin, e))?.clone();
    let [subject, hadm, admit, disch, death, kind] = header_index(&headers, &ADMISSION_COLUMNS, origin)?;
    let mut out = Ingested::default();
    let mut seen = BTreeSet::new();
    for item in records(&mut rdr, origin) {
        let (line, rec) = item?;
        let parsed = (|| {
            let r = AdmissionRecord {
                subject_id: parse_id(&rec, subject, "SUBJECT_ID")?,
                hadm_id: parse_id(&rec, hadm, "HADM_ID")?,
                admit_time: required_time(&rec, admit, "ADMITTIME")?,
                discharge_time: required_time(&rec, disch, "DISCHTIME")?,
                death_time: parse_time(&rec, death, "DEATHTIME")?,
                admission_type: field(&rec, kind, "ADMISSION_TYPE")?.parse::<AdmissionType>().map_err(|e| e.to_string())?,
            };
            if r.admit_time > r.discharge_time {
                return Err(format!("DISCHTIME {} precedes ADMITTIME {}", r.discharge_time, r.admit_time));
            }
            if !seen.insert(r.hadm_id) {
                return Err(format!("duplicate HADM_ID {}", r.hadm_id));
            }
            Ok(r)
        })();
        match parsed {
            Ok(r) => {
                out.records.push(r);
                out.lines.push(line);
            }
            Err(reason) => out.rejects.push(Reject { source: "admissions".into(), line_number: line, reason }),
        }
    }
    Ok(out)
}

/// Parses a notes table, keeping only non-empty discharge summaries.
pub fn parse_notes<R: Read>(reader: R, origin: &Path) -> Result<Ingested<NoteRecord>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::from_csv(origin, e))?.clone();
    let [subject, hadm, category, chart, text] = header_index(&headers, &NOTE_COLUMNS, origin)?;
    let mut out = Ingested::default();
    for item in records(&mut rdr, origin) {
        let (line, rec) = item?;
        let parsed = (|| {
            let category = field(&rec, category, "CATEGORY")?.trim();
            if category.is_empty() {
                return Err("CATEGORY is empty".to_string());
            }
            let note = NoteRecord {
                subject_id: parse_id(&rec, subject, "SUBJECT_ID")?,
                hadm_id: parse_id(&rec, hadm, "HADM_ID")?,
                category: category.to_string(),
                chart_time: parse_time(&rec, chart, "CHARTDATE")?,
                text: field(&rec, text, "TEXT")?.to_string(),
            };
            Ok(note)
        })();
        match parsed {
            Ok(n) if n.is_usable_discharge_summary() => {
                out.records.push(n);
                out.lines.push(line);
            }
            Ok(_) => out.excluded += 1,
            Err(reason) => out.rejects.push(Reject { source: "notes".into(), line_number: line, reason }),
        }
    }
    Ok(out)
}

pub fn read_admissions(path: &Path) -> Result<Ingested<AdmissionRecord>> {
    parse_admissions(open(path)?, path)
}

pub fn read_notes(path: &Path) -> Result<Ingested<NoteRecord>> {
    parse_notes(open(path)?, path)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn finish<W: Write>(mut w: csv::Writer<W>, origin: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(origin, e))
}

pub fn write_admissions<W: Write>(writer: W, rows: &[AdmissionRecord], origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let err = |e| Error::from_csv(origin, e);
    w.write_record(ADMISSION_COLUMNS).map_err(err)?;
    for r in rows {
        w.write_record([
            r.subject_id.to_string(),
            r.hadm_id.to_string(),
            r.admit_time.to_string(),
            r.discharge_time.to_string(),
            opt(&r.death_time),
            r.admission_type.to_string(),
        ])
        .map_err(err)?;
    }
    finish(w, origin)
}

pub fn write_notes<W: Write>(writer: W, rows: &[NoteRecord], origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let err = |e| Error::from_csv(origin, e);
    w.write_record(NOTE_COLUMNS).map_err(err)?;
    for n in rows {
        let chart = n.chart_time.map(|t| t.to_string()[..10].to_string()).unwrap_or_default();
        w.write_record([n.subject_id.to_string(), n.hadm_id.to_string(), n.category.clone(), chart, n.text.clone()])
            .map_err(err)?;
    }
    finish(w, origin)
}

pub fn write_rejects<W: Write>(writer: W, rejects: &[Reject], origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let err = |e| Error::from_csv(origin, e);
    w.write_record(["source", "line_number", "reason"]).map_err(err)?;
    for r in rejects {
        w.serialize(r).map_err(err)?;
    }
    finish(w, origin)
}

/// A cohort table row, optionally with its cleaned text.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortEntry {
    pub row: CohortRow,
    pub clean_text: Option<String>,
}

pub fn write_cohort<W: Write>(writer: W, rows: &[CohortEntry], origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let err = |e| Error::from_csv(origin, e);
    let cleaned = rows.first().is_some_and(|r| r.clean_text.is_some());
    if rows.iter().any(|r| r.clean_text.is_some() != cleaned) {
        return Err(Error::Invalid("cohort rows mix cleaned and raw entries".into()));
    }
    let mut header: Vec<&str> = COHORT_COLUMNS.to_vec();
    if cleaned {
        header.push(CLEAN_TEXT);
    }
    w.write_record(&header).map_err(err)?;
    for e in rows {
        let r = &e.row;
        let mut rec = vec![
            r.subject_id.to_string(),
            r.hadm_id.to_string(),
            r.admit_time.to_string(),
            r.discharge_time.to_string(),
            r.admission_type.to_string(),
            opt(&r.next_admit_time),
            opt(&r.next_admission_type),
            opt(&r.days_to_next),
            r.label.to_string(),
            r.text.clone(),
        ];
        rec.extend(e.clean_text.clone());
        w.write_record(&rec).map_err(err)?;
    }
    finish(w, origin)
}

pub fn parse_cohort<R: Read>(reader: R, origin: &Path) -> Result<Vec<CohortEntry>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::from_csv(origin, e))?.clone();
    let idx = header_index(&headers, &COHORT_COLUMNS, origin)?;
    let clean = headers.iter().position(|h| h.eq_ignore_ascii_case(CLEAN_TEXT));
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for item in records(&mut rdr, origin) {
        let (line, rec) = item?;
        let parsed = (|| {
            let kind = |i: usize, name: &str| -> Result<Option<AdmissionType>, String> {
                let raw = field(&rec, i, name)?.trim();
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse().map(Some).map_err(|e: readmit_core::Error| e.to_string())
            };
            let days = field(&rec, idx[7], "DAYS_NEXT_ADMIT")?.trim();
            let days_to_next = if days.is_empty() {
                None
            } else {
                Some(days.parse::<f64>().map_err(|_| format!("DAYS_NEXT_ADMIT {days:?} is not a number"))?)
            };
            let label = match field(&rec, idx[8], "LABEL")?.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(format!("LABEL {other:?} is not 0 or 1")),
            };
            let row = CohortRow {
                subject_id: parse_id(&rec, idx[0], "SUBJECT_ID")?,
                hadm_id: parse_id(&rec, idx[1], "HADM_ID")?,
                admit_time: required_time(&rec, idx[2], "ADMITTIME")?,
                discharge_time: required_time(&rec, idx[3], "DISCHTIME")?,
                admission_type: kind(idx[4], "ADMISSION_TYPE")?.ok_or("ADMISSION_TYPE is empty")?,
                next_admit_time: parse_time(&rec, idx[5], "NEXT_ADMITTIME")?,
                next_admission_type: kind(idx[6], "NEXT_ADMISSION_TYPE")?,
                days_to_next,
                label,
                text: field(&rec, idx[9], "TEXT")?.to_string(),
            };
            if !seen.insert(row.hadm_id) {
                return Err(format!("duplicate HADM_ID {}", row.hadm_id));
            }
            let clean_text = clean.map(|c| field(&rec, c, CLEAN_TEXT).map(str::to_string)).transpose()?;
            Ok(CohortEntry { row, clean_text })
        })();
        out.push(parsed.map_err(|m| Error::row(origin, line, m))?);
    }
    Ok(out)
}

pub fn read_cohort(path: &Path) -> Result<Vec<CohortEntry>> {
    parse_cohort(open(path)?, path)
}

pub fn write_splits<W: Write>(writer: W, assignment: &BTreeMap<u64, Split>, origin: &Path) -> Result<()> {
    let mut w = csv_writer(writer);
    let err = |e| Error::from_csv(origin, e);
    w.write_record(["HADM_ID", "SPLIT"]).map_err(err)?;
    for (id, s) in assignment {
        w.write_record([id.to_string(), s.to_string()]).map_err(err)?;
    }
    finish(w, origin)
}

pub fn parse_splits<R: Read>(reader: R, origin: &Path) -> Result<BTreeMap<u64, Split>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::from_csv(origin, e))?.clone();
    let [hadm, split] = header_index(&headers, &["HADM_ID", "SPLIT"], origin)?;
    let mut out = BTreeMap::new();
    for item in records(&mut rdr, origin) {
        let (line, rec) = item?;
        let id = parse_id(&rec, hadm, "HADM_ID").map_err(|m| Error::row(origin, line, m))?;
        let s: Split = field(&rec, split, "SPLIT")
            .map_err(|m| Error::row(origin, line, m))?
            .parse()
            .map_err(|e: readmit_core::Error| Error::row(origin, line, e.to_string()))?;
        if out.insert(id, s).is_some() {
            return Err(Error::row(origin, line, format!("duplicate HADM_ID {id}")));
        }
    }
    Ok(out)
}

pub fn read_splits(path: &Path) -> Result<BTreeMap<u64, Split>> {
    parse_splits(open(path)?, path)
}

/// Writes `bytes` to `path`, mapping failures to an I/O error on that path.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::io(path, io::Error::new(io::ErrorKind::InvalidInput, "empty output path")));
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes through a CSV/JSON producer into `path`.
pub fn write_file(path: &Path, produce: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::io(path, io::Error::new(io::ErrorKind::InvalidInput, "empty output path")));
    }
    let mut w = create(path)?;
    produce(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
