//! One function per pipeline stage. Each takes a fully resolved config and
//! writes its outputs; the caller records the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use readmit_core::cohort::{build_cohort, stratified_split, validate_admissions, ElectivePolicy, Split, SplitRatios};
use readmit_core::eval::{Averaging, EvalReport, RocCurve};
use readmit_core::features::{pca_fit, tfidf_fit, PcaModel, TfidfModel, DEFAULT_MAX_FEATURES};
use readmit_core::models::{logreg_top_features, train, Dataset, Hyperparameters, ModelKind, TrainedModel};
use readmit_core::textprep::{parse_term_list, token_frequency_report, CleanConfig, Lemmatizer};
use readmit_core::Warning;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{overlay, read_json, sibling, write_json};
use crate::error::{Error, Result};
use crate::features::{read_features, write_dense, write_sparse, FeatureTable, EMBEDDING_PREFIX};
use crate::provider::{embed_documents, Provider};
use crate::synth::{generate, SynthParams};
use crate::tables::{
    read_admissions, read_cohort, read_notes, read_splits, write_admissions, write_cohort, write_file, write_notes,
    write_rejects, write_splits, CohortEntry, Reject,
};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

fn log_warnings(ws: &[Warning]) {
    for w in ws {
        log::warn!("{w}");
    }
}

fn default_seed() -> u64 {
    0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub prevalence: f64,
    pub signal: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub admissions: PathBuf,
    pub notes: PathBuf,
}

pub fn run_synth(c: &SynthConfig) -> Result<()> {
    let s = generate(&SynthParams { n: c.n, prevalence: c.prevalence, signal: c.signal, seed: c.seed })?;
    write_file(&c.admissions, |w| write_admissions(w, &s.admissions, &c.admissions))?;
    write_file(&c.notes, |w| write_notes(w, &s.notes, &c.notes))?;
    log::info!("wrote {} admissions and {} notes", s.admissions.len(), s.notes.len());
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    pub admissions: PathBuf,
    pub notes: PathBuf,
    pub out: PathBuf,
    pub rejects: PathBuf,
    pub splits: PathBuf,
    #[serde(default)]
    pub elective_policy: ElectivePolicy,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub ratios: SplitRatios,
}

/// Summary printed by the cohort stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohortSummary {
    pub rows: usize,
    pub positives: usize,
    pub rejects: usize,
    pub split_sizes: BTreeMap<Split, (usize, usize)>,
}

pub fn run_cohort(c: &CohortConfig) -> Result<CohortSummary> {
    let adm = read_admissions(&c.admissions)?;
    let notes = read_notes(&c.notes)?;
    validate_admissions(&adm.records)?;
    let merged = build_cohort(&adm.records, &notes.records, c.elective_policy);
    log_warnings(&merged.warnings);
    let mut rejects: Vec<Reject> = adm.rejects;
    rejects.extend(notes.rejects);
    for &i in &merged.orphan_notes {
        rejects.push(Reject {
            source: "notes".into(),
            line_number: notes.lines[i],
            reason: format!("HADM_ID {} has no retained admission", notes.records[i].hadm_id),
        });
    }
    let entries: Vec<CohortEntry> = merged.rows.into_iter().map(|row| CohortEntry { row, clean_text: None }).collect();
    let items: Vec<(u64, u8)> = entries.iter().map(|e| (e.row.hadm_id, e.row.label)).collect();
    let (assignment, warnings) = stratified_split(&items, c.ratios, c.seed)?;
    log_warnings(&warnings);
    write_file(&c.out, |w| write_cohort(w, &entries, &c.out))?;
    write_file(&c.rejects, |w| write_rejects(w, &rejects, &c.rejects))?;
    write_file(&c.splits, |w| write_splits(w, &assignment.assignment, &c.splits))?;
    let mut split_sizes = BTreeMap::new();
    for (id, label) in &items {
        let s = assignment.assignment[id];
        let slot: &mut (usize, usize) = split_sizes.entry(s).or_default();
        slot.0 += 1;
        slot.1 += usize::from(*label);
    }
    Ok(CohortSummary {
        rows: entries.len(),
        positives: items.iter().filter(|(_, l)| *l == 1).count(),
        rejects: rejects.len(),
        split_sizes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    pub cohort: PathBuf,
    pub out: PathBuf,
    pub token_report: PathBuf,
    #[serde(default = "yes")]
    pub lowercase: bool,
    #[serde(default = "yes")]
    pub lemmatize: bool,
    #[serde(default = "yes")]
    pub keep_negations: bool,
    /// Stop-word file; the bundled list when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Lemma dictionary file; the bundled one when absent.
    #[serde(default)]
    pub lemmas: Option<PathBuf>,
    #[serde(default)]
    pub patterns: Option<Vec<String>>,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
}

fn default_top_n() -> usize {
    50
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn clean_config(c: &PrepConfig) -> Result<CleanConfig> {
    let mut cfg = CleanConfig::default();
    cfg.lowercase = c.lowercase;
    cfg.lemmatize = c.lemmatize;
    cfg.keep_negations = c.keep_negations;
    if let Some(p) = &c.stopwords {
        cfg = cfg.with_stopwords(parse_term_list(&read_text(p)?));
    }
    if let Some(p) = &c.lemmas {
        cfg = cfg.with_lemmatizer(Lemmatizer::parse(&read_text(p)?).map_err(|e| Error::format(p, e.to_string()))?);
    }
    if let Some(ps) = &c.patterns {
        cfg = cfg.with_special_patterns(ps)?;
    }
    Ok(cfg)
}

pub fn run_prep(c: &PrepConfig) -> Result<()> {
    let cfg = clean_config(c)?;
    let mut rows = read_cohort(&c.cohort)?;
    let mut docs = Vec::with_capacity(rows.len());
    for e in &mut rows {
        let (doc, text) = cfg.clean_document(e.row.hadm_id, &e.row.text);
        e.clean_text = Some(text);
        docs.push(doc);
    }
    let report = token_frequency_report(docs.iter().map(|d| d.tokens.as_slice()), c.top_n)?;
    write_file(&c.out, |w| write_cohort(w, &rows, &c.out))?;
    write_file(&c.token_report, |w| {
        let mut csv = crate::tables::csv_writer(w);
        let err = |e| Error::from_csv(&c.token_report, e);
        csv.write_record(["TERM", "COUNT"]).map_err(err)?;
        for (t, n) in &report {
            csv.write_record([t.as_str(), &n.to_string()]).map_err(err)?;
        }
        csv.flush().map_err(|e| Error::io(&c.token_report, e))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Tfidf,
    Embedding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturizeConfig {
    pub cleaned: PathBuf,
    pub splits: PathBuf,
    pub out: PathBuf,
    pub representation: Representation,
    #[serde(default = "mock")]
    pub provider: Provider,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    /// Seed of the mock embedder.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Where the fitted TF-IDF model goes.
    pub tfidf_model: PathBuf,
}

fn mock() -> Provider {
    Provider::Mock
}

fn default_max_features() -> usize {
    DEFAULT_MAX_FEATURES
}

/// A serialized fitted model with its format version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub format_version: u32,
    #[serde(flatten)]
    pub inner: T,
}

impl<T> Versioned<T> {
    pub fn new(inner: T) -> Self {
        Self { format_version: ARTIFACT_FORMAT_VERSION, inner }
    }
}

fn train_ids(splits: &BTreeMap<u64, Split>, ids: &[u64]) -> Vec<usize> {
    ids.iter().enumerate().filter(|(_, id)| splits.get(id) == Some(&Split::Train)).map(|(i, _)| i).collect()
}

fn check_covered(splits: &BTreeMap<u64, Split>, ids: &[u64], origin: &Path) -> Result<()> {
    match ids.iter().find(|id| !splits.contains_key(id)) {
        Some(id) => Err(Error::format(origin, format!("HADM_ID {id} has no split assignment"))),
        None => Ok(()),
    }
}

/// TF-IDF is fitted on TRAIN documents only and applied to every row.
pub fn run_featurize(c: &FeaturizeConfig) -> Result<()> {
    let rows = read_cohort(&c.cleaned)?;
    let splits = read_splits(&c.splits)?;
    let ids: Vec<u64> = rows.iter().map(|e| e.row.hadm_id).collect();
    check_covered(&splits, &ids, &c.splits)?;
    let texts: Vec<&str> = rows
        .iter()
        .map(|e| e.clean_text.as_deref().ok_or_else(|| Error::format(&c.cleaned, "missing CLEAN_TEXT column; run prep first")))
        .collect::<Result<_>>()?;
    match c.representation {
        Representation::Tfidf => {
            let tokens: Vec<Vec<String>> = texts.iter().map(|t| t.split_whitespace().map(str::to_string).collect()).collect();
            let train = train_ids(&splits, &ids);
            let model = tfidf_fit(train.iter().map(|&i| tokens[i].as_slice()), Some(c.max_features))?;
            let vectors: Vec<_> = tokens.iter().map(|t| model.transform(t)).collect();
            write_json(&c.tfidf_model, &Versioned::new(model))?;
            write_file(&c.out, |w| write_sparse(w, &ids, &vectors, &c.out))
        }
        Representation::Embedding => {
            let docs: Vec<(u64, &str)> = ids.iter().copied().zip(texts.iter().copied()).collect();
            let table = embed_documents(&c.provider, &docs, c.seed)?;
            write_file(&c.out, |w| write_dense(w, &table, EMBEDDING_PREFIX, &c.out))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaConfig {
    pub features: PathBuf,
    pub splits: PathBuf,
    pub out: PathBuf,
    #[serde(default = "default_k")]
    pub k: usize,
    pub pca_model: PathBuf,
}

fn default_k() -> usize {
    50
}

/// Fits on TRAIN rows, projects every row.
pub fn run_pca(c: &PcaConfig) -> Result<()> {
    let table = read_features(&c.features)?;
    let splits = read_splits(&c.splits)?;
    check_covered(&splits, &table.ids, &c.splits)?;
    let train = table.matrix.select_rows(&train_ids(&splits, &table.ids));
    let fit = pca_fit(&train, c.k)?;
    log_warnings(&fit.warnings);
    let projected = fit.model.transform_rows(&table.matrix)?;
    write_json(&c.pca_model, &Versioned::new(fit.model))?;
    let out = FeatureTable::new(table.ids, projected)?;
    write_file(&c.out, |w| write_dense(w, &out, "PC", &c.out))
}

pub fn read_pca_model(path: &Path) -> Result<PcaModel> {
    Ok(read_json::<Versioned<PcaModel>>(path)?.inner)
}

pub fn read_tfidf_model(path: &Path) -> Result<TfidfModel> {
    Ok(read_json::<Versioned<TfidfModel>>(path)?.inner)
}

/// Rows of one split with their labels, in HADM_ID order.
pub fn split_dataset(features: &FeatureTable, cohort: &[CohortEntry], splits: &BTreeMap<u64, Split>, which: Split) -> Result<(Vec<u64>, Dataset)> {
    let labels: BTreeMap<u64, u8> = cohort.iter().map(|e| (e.row.hadm_id, e.row.label)).collect();
    let ids: Vec<u64> = splits.iter().filter(|(_, s)| **s == which).map(|(id, _)| *id).collect();
    if ids.is_empty() {
        return Err(Error::Invalid(format!("split {which} is empty")));
    }
    let y = ids
        .iter()
        .map(|id| labels.get(id).copied().ok_or_else(|| Error::Invalid(format!("HADM_ID {id} is not in the cohort"))))
        .collect::<Result<Vec<_>>>()?;
    let x = features.select(&ids)?;
    Ok((ids, Dataset::new(x, y)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub features: PathBuf,
    pub cohort: PathBuf,
    pub splits: PathBuf,
    pub out: PathBuf,
    pub model: ModelKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Full hyperparameter record once resolved; partial overrides before.
    #[serde(default)]
    pub hyperparameters: Map<String, Value>,
    /// Fitted TF-IDF model; with a LOGREG model, top-weighted terms are reported.
    #[serde(default)]
    pub vocabulary: Option<PathBuf>,
    #[serde(default)]
    pub top_features: Option<PathBuf>,
    #[serde(default = "default_top_terms")]
    pub top_n: usize,
}

fn default_top_terms() -> usize {
    10
}

/// Defaults for `kind` overlaid with `overrides`.
pub fn resolve_hyperparameters(kind: ModelKind, overrides: &Map<String, Value>) -> Result<Hyperparameters> {
    let mut base = serde_json::to_value(Hyperparameters::default_for(kind)).map_err(|e| Error::Invalid(e.to_string()))?;
    if let Some(k) = overrides.get("kind") {
        if k.as_str().map(|s| s.eq_ignore_ascii_case(kind.as_str())) != Some(true) {
            return Err(Error::Invalid(format!("hyperparameters are for {k}, model is {kind}")));
        }
    }
    if let Value::Object(known) = &base {
        if let Some(k) = overrides.keys().find(|k| *k != "kind" && !known.contains_key(*k)) {
            let accepted: Vec<&str> = known.keys().filter(|k| *k != "kind").map(String::as_str).collect();
            return Err(Error::Invalid(format!("{kind} has no hyperparameter {k:?}; expected one of {}", accepted.join(", "))));
        }
    }
    overlay(&mut base, overrides);
    if let Value::Object(o) = &mut base {
        o.insert("kind".into(), Value::String(kind.as_str().into()));
    }
    let h: Hyperparameters =
        serde_json::from_value(base).map_err(|e| Error::Invalid(format!("{kind} hyperparameters: {e}")))?;
    Ok(h)
}

impl TrainConfig {
    /// Replaces partial overrides with the complete record.
    pub fn materialize(mut self) -> Result<Self> {
        let h = resolve_hyperparameters(self.model, &self.hyperparameters)?;
        let Value::Object(full) = serde_json::to_value(&h).map_err(|e| Error::Invalid(e.to_string()))? else {
            unreachable!("hyperparameters serialize to an object")
        };
        self.hyperparameters = full;
        if self.vocabulary.is_some() && self.top_features.is_none() {
            self.top_features = Some(sibling(&self.out, "top_features.csv"));
        }
        Ok(self)
    }
}

pub fn run_train(c: &TrainConfig) -> Result<TrainedModel> {
    let h = resolve_hyperparameters(c.model, &c.hyperparameters)?;
    let features = read_features(&c.features)?;
    let cohort = read_cohort(&c.cohort)?;
    let splits = read_splits(&c.splits)?;
    let (_, data) = split_dataset(&features, &cohort, &splits, Split::Train)?;
    let model = train(&data, &h, c.seed)?;
    write_json(&c.out, &model)?;
    if let (Some(vocab), Some(dest)) = (&c.vocabulary, &c.top_features) {
        let tfidf = read_tfidf_model(vocab)?;
        let top = logreg_top_features(&model, tfidf.terms(), c.top_n)?;
        write_file(dest, |w| {
            let mut csv = crate::tables::csv_writer(w);
            let err = |e| Error::from_csv(dest, e);
            csv.write_record(["RANK", "POSITIVE_TERM", "POSITIVE_WEIGHT", "NEGATIVE_TERM", "NEGATIVE_WEIGHT"]).map_err(err)?;
            for (i, (p, n)) in top.positive.iter().zip(&top.negative).enumerate() {
                csv.write_record([(i + 1).to_string(), p.0.clone(), p.1.to_string(), n.0.clone(), n.1.to_string()])
                    .map_err(err)?;
            }
            csv.flush().map_err(|e| Error::io(dest, e))
        })?;
    }
    Ok(model)
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    let m: TrainedModel = read_json(path)?;
    if m.format_version != readmit_core::models::MODEL_FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported model format_version {}", m.format_version)));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub model: PathBuf,
    pub features: PathBuf,
    pub cohort: PathBuf,
    pub splits: PathBuf,
    #[serde(default = "test_split")]
    pub split: Split,
    #[serde(default)]
    pub average: Averaging,
    /// Score cut-off for label metrics; the model kind's default when absent.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub out: PathBuf,
    pub roc: PathBuf,
}

fn test_split() -> Split {
    Split::Test
}

pub fn write_roc(path: &Path, roc: &RocCurve) -> Result<()> {
    write_file(path, |w| {
        let mut csv = crate::tables::csv_writer(w);
        let err = |e| Error::from_csv(path, e);
        csv.write_record(["THRESHOLD", "FPR", "TPR"]).map_err(err)?;
        for p in &roc.points {
            csv.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()]).map_err(err)?;
        }
        csv.flush().map_err(|e| Error::io(path, e))
    })
}

pub fn run_evaluate(c: &EvaluateConfig) -> Result<EvalReport> {
    let model = read_model(&c.model)?;
    let features = read_features(&c.features)?;
    let cohort = read_cohort(&c.cohort)?;
    let splits = read_splits(&c.splits)?;
    let (_, data) = split_dataset(&features, &cohort, &splits, c.split)?;
    let scores = model.predict_scores(&data.features)?;
    let threshold = c.threshold.unwrap_or(model.kind().decision_threshold());
    let (report, roc) =
        EvalReport::evaluate(model.kind().as_str(), model.train_seed, c.split.as_str(), c.average, &data.labels, &scores, threshold)?;
    write_json(&c.out, &report)?;
    write_roc(&c.roc, &roc)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub reports: Vec<PathBuf>,
    pub out: PathBuf,
}

/// One row per report, highest AUC first.
pub fn run_report(c: &ReportConfig) -> Result<Vec<EvalReport>> {
    if c.reports.is_empty() {
        return Err(Error::Invalid("report needs at least one evaluation report".into()));
    }
    let mut reports = Vec::new();
    for p in &c.reports {
        reports.push(read_json::<EvalReport>(p)?);
    }
    let mode = reports[0].average;
    if let Some((p, r)) = c.reports.iter().zip(&reports).find(|(_, r)| r.average != mode) {
        return Err(Error::Invalid(format!(
            "{} uses {} averaging but {} uses {mode}; reports must share one mode",
            p.display(),
            r.average,
            c.reports[0].display()
        )));
    }
    reports.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.model_kind.cmp(&b.model_kind)));
    write_file(&c.out, |w| {
        let mut csv = crate::tables::csv_writer(w);
        let err = |e| Error::from_csv(&c.out, e);
        csv.write_record(["MODEL", "ACCURACY", "PRECISION", "RECALL", "F1", "AUC"]).map_err(err)?;
        for r in &reports {
            let s = r.selected();
            csv.write_record([
                r.model_kind.clone(),
                s.accuracy.to_string(),
                s.precision.to_string(),
                s.recall.to_string(),
                s.f1.to_string(),
                r.auc.to_string(),
            ])
            .map_err(err)?;
        }
        csv.flush().map_err(|e| Error::io(&c.out, e))
    })?;
    Ok(reports)
}
