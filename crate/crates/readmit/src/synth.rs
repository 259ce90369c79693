//! Synthetic admissions and discharge summaries with a planted signal.
//!
//! Every generated cohort admission is EMERGENCY or URGENT, so the elective
//! rule never changes a label. A few extra rows exist only to be filtered
//! out: newborn and in-hospital-death admissions, nursing notes and
//! discharge-summary addenda.

use rand::seq::SliceRandom;
use rand::Rng;
use readmit_core::cohort::{AdmissionRecord, AdmissionType, NoteRecord, DISCHARGE_SUMMARY};
use readmit_core::rng::seeded;
use readmit_core::time::Timestamp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLANTED_TOKENS: [&str; 3] = ["dialysis", "relapse", "chronic"];

const DAY: i64 = 86_400;

const FILLER: &[&str] = &[
    "patient", "presented", "with", "shortness", "of", "breath", "and", "fever", "the", "was", "admitted", "to",
    "medicine", "service", "for", "further", "management", "history", "hypertension", "hyperlipidemia", "diabetes",
    "mellitus", "coronary", "artery", "disease", "atrial", "fibrillation", "on", "warfarin", "exam", "notable", "for",
    "bilateral", "crackles", "lower", "extremity", "edema", "labs", "showed", "elevated", "creatinine", "white",
    "count", "chest", "film", "demonstrated", "small", "effusion", "started", "on", "antibiotics", "vancomycin",
    "cefepime", "blood", "cultures", "grew", "gram", "positive", "cocci", "echocardiogram", "preserved", "ejection",
    "fraction", "she", "he", "tolerated", "diet", "ambulating", "independently", "pain", "controlled", "oral",
    "medications", "follow", "up", "with", "primary", "care", "physician", "in", "weeks", "return", "if",
    "worsening", "symptoms", "discharged", "home", "stable", "condition", "alert", "oriented", "afebrile",
    "heart", "rate", "regular", "rhythm", "murmur", "abdomen", "soft", "nontender", "nondistended", "bowel",
    "sounds", "present", "extremities", "warm", "well", "perfused", "pulses", "palpable", "neuro", "intact",
    "sodium", "potassium", "chloride", "bicarbonate", "glucose", "hemoglobin", "platelets", "lactate",
    "urinalysis", "culture", "pending", "at", "time", "this", "summary", "by", "team", "consulted", "cardiology",
    "recommended", "diuresis", "furosemide", "intravenous", "transitioned", "metoprolol", "lisinopril",
    "aspirin", "atorvastatin", "insulin", "sliding", "scale", "pneumonia", "cellulitis", "sepsis", "anemia",
    "transfusion", "units", "packed", "red", "cells", "gastrointestinal", "bleed", "endoscopy", "ulcer",
    "pantoprazole", "hospital", "course", "complicated", "delirium", "resolved", "physical", "therapy",
    "evaluated", "rehab", "facility", "saturation", "room", "air", "oxygen", "nasal", "cannula", "weaned",
    "imaging", "negative", "acute", "process", "tomography", "abdominal", "appendix", "gallbladder",
    "cholecystitis", "surgery", "laparoscopic", "uncomplicated", "wound", "clean", "dry", "staples", "removed",
    "clinic", "appointment", "scheduled", "instructions", "given", "family", "meeting", "goals", "discussed",
    "code", "status", "full", "allergies", "penicillin", "sulfa", "social", "tobacco", "alcohol", "denies",
    "lives", "alone", "daughter", "nearby", "no", "not", "without", "normal", "transferred", "unit", "floor",
];

const DRUGS: &[&str] = &["aspirin", "metoprolol", "lisinopril", "atorvastatin", "furosemide", "pantoprazole", "warfarin"];
const DOSES: &[&str] = &["81", "25", "12.5", "40", "20", "5", "2.5", "1,000", "0.5"];
const SERVICES: &[&str] = &["MEDICINE", "SURGERY", "CARDIOLOGY", "NEUROLOGY"];
const NAMES: &[&str] = &["Last Name (NamePattern1) 1234", "First Name8 (NamePattern2) 77", "Name (STitle) 4321"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Cohort rows to produce.
    pub n: usize,
    pub prevalence: f64,
    /// Probability that a planted token appears in a positive document (and
    /// one minus the probability for a negative one).
    pub signal: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Synthetic {
    pub admissions: Vec<AdmissionRecord>,
    pub notes: Vec<NoteRecord>,
    /// HADM_IDs of admissions followed by a readmission within 30 days.
    pub positives: Vec<u64>,
}

pub fn generate(p: &SynthParams) -> Result<Synthetic> {
    if !(p.prevalence > 0.0 && p.prevalence < 1.0) {
        return Err(Error::Invalid(format!("prevalence must lie in (0, 1), got {}", p.prevalence)));
    }
    if !(0.0..=1.0).contains(&p.signal) {
        return Err(Error::Invalid(format!("signal must lie in [0, 1], got {}", p.signal)));
    }
    let n_pos = (p.prevalence * p.n as f64).round() as usize;
    if n_pos == 0 || n_pos >= p.n {
        return Err(Error::Invalid(format!(
            "prevalence {} over {} rows gives {n_pos} positives; both classes are needed",
            p.prevalence, p.n
        )));
    }

    let mut rng = seeded(p.seed, 0);
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < p.n {
        let s = rng.gen_range(1..=3).min(p.n - total);
        sizes.push(s);
        total += s;
    }
    let mut slots: Vec<(usize, usize)> =
        sizes.iter().enumerate().flat_map(|(s, &k)| (0..k.saturating_sub(1)).map(move |j| (s, j))).collect();
    if n_pos > slots.len() {
        return Err(Error::Invalid(format!(
            "{n_pos} positives requested but only {} admissions have a successor",
            slots.len()
        )));
    }
    slots.shuffle(&mut rng);
    let positive: std::collections::BTreeSet<(usize, usize)> = slots[..n_pos].iter().copied().collect();

    let mut out = Synthetic::default();
    let mut text_rng = seeded(p.seed, 1);
    let mut next_hadm = 100_000u64;
    let epoch = Timestamp::parse("2100-01-01 00:00:00").map_err(Error::from)?;
    for (s, &k) in sizes.iter().enumerate() {
        let subject_id = 10_000 + s as u64;
        let mut admit = epoch.add_seconds(rng.gen_range(0..80 * 365) * DAY + rng.gen_range(0..DAY));
        for j in 0..k {
            let discharge = admit.add_seconds(rng.gen_range(DAY..15 * DAY));
            let kind = if rng.gen_bool(0.8) { AdmissionType::Emergency } else { AdmissionType::Urgent };
            let hadm_id = next_hadm;
            next_hadm += 1;
            let is_pos = positive.contains(&(s, j));
            out.admissions.push(AdmissionRecord {
                subject_id,
                hadm_id,
                admit_time: admit,
                discharge_time: discharge,
                death_time: None,
                admission_type: kind,
            });
            out.notes.push(NoteRecord {
                subject_id,
                hadm_id,
                category: DISCHARGE_SUMMARY.into(),
                chart_time: Some(discharge),
                text: document(&mut text_rng, admit, discharge, is_pos, p.signal),
            });
            if text_rng.gen_bool(0.05) {
                out.notes.push(NoteRecord {
                    subject_id,
                    hadm_id,
                    category: "Nursing".into(),
                    chart_time: Some(admit),
                    text: "Pt resting comfortably, vitals stable overnight.".into(),
                });
            }
            if is_pos {
                out.positives.push(hadm_id);
            }
            let gap = if is_pos { rng.gen_range(DAY..29 * DAY) } else { rng.gen_range(31 * DAY..400 * DAY) };
            admit = discharge.add_seconds(gap);
        }
    }

    // Rows the cohort filters must drop.
    let extras = (p.n / 50).max(1);
    for e in 0..extras {
        let subject_id = 900_000 + e as u64;
        let admit = epoch.add_seconds(rng.gen_range(0..80 * 365) * DAY);
        let discharge = admit.add_seconds(rng.gen_range(DAY..10 * DAY));
        let newborn = e % 2 == 0;
        let hadm_id = next_hadm;
        next_hadm += 1;
        out.admissions.push(AdmissionRecord {
            subject_id,
            hadm_id,
            admit_time: admit,
            discharge_time: discharge,
            death_time: (!newborn).then_some(discharge),
            admission_type: if newborn { AdmissionType::Newborn } else { AdmissionType::Emergency },
        });
        out.notes.push(NoteRecord {
            subject_id,
            hadm_id,
            category: DISCHARGE_SUMMARY.into(),
            chart_time: Some(discharge),
            text: document(&mut text_rng, admit, discharge, false, p.signal),
        });
    }
    Ok(out)
}

fn date(t: Timestamp) -> String {
    t.to_string()[..10].to_string()
}

fn document(rng: &mut impl Rng, admit: Timestamp, discharge: Timestamp, positive: bool, signal: f64) -> String {
    let len = rng.gen_range(40..=160);
    let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(rng).expect("filler")).collect();
    let p = if positive { signal } else { 1.0 - signal };
    for token in PLANTED_TOKENS {
        if rng.gen_bool(p) {
            for _ in 0..rng.gen_range(2..=4) {
                let at = rng.gen_range(0..=words.len());
                words.insert(at, token);
            }
        }
    }
    let mut body = String::new();
    let mut i = 0;
    while i < words.len() {
        let end = (i + rng.gen_range(6..=14)).min(words.len());
        let sentence = words[i..end].join(" ");
        let mut chars = sentence.chars();
        if let Some(first) = chars.next() {
            body.extend(first.to_uppercase());
            body.push_str(chars.as_str());
        }
        body.push_str(". ");
        i = end;
    }
    let drug = DRUGS.choose(rng).expect("drug");
    let dose = DOSES.choose(rng).expect("dose");
    let name = NAMES.choose(rng).expect("name");
    format!(
        "Admission Date:  [**{}**]              Discharge Date:   [**{}**]\n\n\
         Service: {}\n\n{}\n\nDischarge Medications:\n1. {drug} {dose} mg PO daily\n\n\
         Dr. [**{name}**], M.D.\n",
        date(admit),
        date(discharge),
        SERVICES.choose(rng).expect("service"),
        body.trim_end(),
    )
}
