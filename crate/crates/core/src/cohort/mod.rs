//! Cohort construction: admission filters, next-admission derivation, the
//! 30-day readmission label, the note merge and the stratified split.

mod split;

pub use split::{stratified_split, Split, SplitAssignment, SplitRatios};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;
use crate::{Error, Result, Warning};

/// Readmission window in days; a gap must be strictly below it.
pub const READMISSION_WINDOW_DAYS: f64 = 30.0;

/// Note category kept by ingestion (compared case-insensitively after trimming).
pub const DISCHARGE_SUMMARY: &str = "Discharge summary";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdmissionType {
    Elective,
    Emergency,
    Urgent,
    Newborn,
}

impl AdmissionType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Elective => "ELECTIVE",
            Self::Emergency => "EMERGENCY",
            Self::Urgent => "URGENT",
            Self::Newborn => "NEWBORN",
        }
    }
}

impl FromStr for AdmissionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        [Self::Elective, Self::Emergency, Self::Urgent, Self::Newborn]
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::AdmissionType(t.into()))
    }
}

impl fmt::Display for AdmissionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub subject_id: u64,
    pub hadm_id: u64,
    pub admit_time: Timestamp,
    pub discharge_time: Timestamp,
    pub death_time: Option<Timestamp>,
    pub admission_type: AdmissionType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub subject_id: u64,
    pub hadm_id: u64,
    pub category: String,
    pub chart_time: Option<Timestamp>,
    pub text: String,
}

impl NoteRecord {
    /// True for non-empty discharge summaries, the only notes the cohort uses.
    pub fn is_usable_discharge_summary(&self) -> bool {
        self.category.trim().eq_ignore_ascii_case(DISCHARGE_SUMMARY) && !self.text.trim().is_empty()
    }
}

/// An admission annotated with the admission that counts as its successor.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedAdmission {
    pub record: AdmissionRecord,
    pub next_admit_time: Option<Timestamp>,
    pub next_admission_type: Option<AdmissionType>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub subject_id: u64,
    pub hadm_id: u64,
    pub admit_time: Timestamp,
    pub discharge_time: Timestamp,
    pub admission_type: AdmissionType,
    pub next_admit_time: Option<Timestamp>,
    pub next_admission_type: Option<AdmissionType>,
    pub days_to_next: Option<f64>,
    pub label: u8,
    pub text: String,
}

/// How ELECTIVE admissions enter the cohort.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElectivePolicy {
    /// Keep every current admission; an ELECTIVE successor is skipped in
    /// favour of the following non-elective admission.
    #[default]
    SkipNextElective,
    /// Keep only ELECTIVE current admissions; the successor is the
    /// immediately following admission of any type.
    KeepCurrentElectiveOnly,
}

impl ElectivePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SkipNextElective => "skip-next-elective",
            Self::KeepCurrentElectiveOnly => "keep-current-elective-only",
        }
    }
}

impl FromStr for ElectivePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip-next-elective" => Ok(Self::SkipNextElective),
            "keep-current-elective-only" => Ok(Self::KeepCurrentElectiveOnly),
            other => Err(Error::InvalidArgument(format!("unknown elective policy {other:?}"))),
        }
    }
}

/// Drops newborn admissions and admissions that ended in death.
pub fn filter_admissions(records: &[AdmissionRecord]) -> Vec<AdmissionRecord> {
    records
        .iter()
        .filter(|r| r.admission_type != AdmissionType::Newborn && r.death_time.is_none())
        .cloned()
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct Derived {
    pub rows: Vec<AnnotatedAdmission>,
    pub warnings: Vec<Warning>,
}

/// Annotates each admission with its successor admission.
///
/// Output is ordered by `(subject_id, admit_time, hadm_id)`. Admissions
/// sharing an admit time with the current one are never its successor, so
/// a successor always starts strictly later.
pub fn derive_next_admission(records: &[AdmissionRecord], policy: ElectivePolicy) -> Derived {
    let mut by_subject: BTreeMap<u64, Vec<&AdmissionRecord>> = BTreeMap::new();
    for r in records {
        by_subject.entry(r.subject_id).or_default().push(r);
    }

    let mut out = Derived::default();
    for (subject, mut stays) in by_subject {
        stays.sort_by_key(|r| (r.admit_time, r.hadm_id));
        for pair in stays.windows(2) {
            if pair[0].admit_time == pair[1].admit_time {
                out.warnings.push(Warning::new(
                    "derive_next_admission",
                    format!(
                        "subject {subject}: admissions {} and {} share admit time {}; ordered by HADM_ID",
                        pair[0].hadm_id, pair[1].hadm_id, pair[0].admit_time
                    ),
                ));
            }
        }
        for (i, current) in stays.iter().enumerate() {
            let mut later = stays[i + 1..]
                .iter()
                .filter(|r| r.admit_time > current.admit_time);
            let next = match policy {
                ElectivePolicy::SkipNextElective => later.find(|r| r.admission_type != AdmissionType::Elective),
                ElectivePolicy::KeepCurrentElectiveOnly => {
                    if current.admission_type != AdmissionType::Elective {
                        continue;
                    }
                    later.next()
                }
            };
            out.rows.push(AnnotatedAdmission {
                record: (*current).clone(),
                next_admit_time: next.map(|r| r.admit_time),
                next_admission_type: next.map(|r| r.admission_type),
            });
        }
    }
    out
}

/// Days from discharge to the next admission and the `< 30` day label.
///
/// A next admission starting before this discharge is clamped to a
/// zero-day gap (label 1) and reported through the returned warning.
pub fn compute_label(row: &AnnotatedAdmission) -> (Option<f64>, u8, Option<Warning>) {
    let Some(next) = row.next_admit_time else {
        return (None, 0, None);
    };
    let gap = next.days_since(row.record.discharge_time);
    if gap <= 0.0 {
        let warning = Warning::new(
            "compute_label",
            format!(
                "admission {}: next admission at {next} does not start after discharge at {}; gap clamped to 0",
                row.record.hadm_id, row.record.discharge_time
            ),
        );
        return (Some(0.0), 1, Some(warning));
    }
    let label = u8::from(gap < READMISSION_WINDOW_DAYS);
    (Some(gap), label, None)
}

#[derive(Clone, Debug, Default)]
pub struct Merged {
    pub rows: Vec<CohortRow>,
    /// Indices into the note list whose HADM_ID matched no admission.
    pub orphan_notes: Vec<usize>,
    pub warnings: Vec<Warning>,
}

/// Inner join of annotated admissions with discharge summaries on HADM_ID.
///
/// Several summaries for one admission are joined with a newline in
/// chart-time order; notes without a chart time go last, then input order.
pub fn merge_notes(admissions: &[AnnotatedAdmission], notes: &[NoteRecord]) -> Merged {
    let admitted: BTreeMap<u64, ()> = admissions.iter().map(|a| (a.record.hadm_id, ())).collect();
    let mut grouped: BTreeMap<u64, Vec<(usize, &NoteRecord)>> = BTreeMap::new();
    let mut out = Merged::default();
    for (i, note) in notes.iter().enumerate() {
        if admitted.contains_key(&note.hadm_id) {
            grouped.entry(note.hadm_id).or_default().push((i, note));
        } else {
            out.orphan_notes.push(i);
        }
    }

    for adm in admissions {
        let Some(group) = grouped.get_mut(&adm.record.hadm_id) else {
            continue;
        };
        group.sort_by_key(|(i, n)| (n.chart_time.is_none(), n.chart_time, *i));
        let mut text = String::new();
        for (k, (_, note)) in group.iter().enumerate() {
            if k > 0 {
                text.push('\n');
            }
            text.push_str(&note.text);
        }
        if text.trim().is_empty() {
            continue;
        }
        let (days_to_next, label, warning) = compute_label(adm);
        out.warnings.extend(warning);
        let r = &adm.record;
        out.rows.push(CohortRow {
            subject_id: r.subject_id,
            hadm_id: r.hadm_id,
            admit_time: r.admit_time,
            discharge_time: r.discharge_time,
            admission_type: r.admission_type,
            next_admit_time: adm.next_admit_time,
            next_admission_type: adm.next_admission_type,
            days_to_next,
            label,
            text,
        });
    }
    out
}

/// Filters, derives successors and merges notes in one pass.
pub fn build_cohort(
    admissions: &[AdmissionRecord],
    notes: &[NoteRecord],
    policy: ElectivePolicy,
) -> Merged {
    let kept = filter_admissions(admissions);
    let derived = derive_next_admission(&kept, policy);
    let mut merged = merge_notes(&derived.rows, notes);
    let mut warnings = derived.warnings;
    warnings.append(&mut merged.warnings);
    merged.warnings = warnings;
    merged
}

/// Checks that HADM_IDs are unique and stays are not reversed in time.
pub fn validate_admissions(records: &[AdmissionRecord]) -> Result<()> {
    let mut seen = BTreeMap::new();
    for r in records {
        if seen.insert(r.hadm_id, ()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate HADM_ID {}", r.hadm_id)));
        }
        if r.admit_time > r.discharge_time {
            return Err(Error::InvalidArgument(format!(
                "admission {} discharged before it was admitted",
                r.hadm_id
            )));
        }
    }
    Ok(())
}
