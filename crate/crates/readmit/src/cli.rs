//! Command-line front end. Exit codes: 0 success, 1 invalid input or
//! usage, 2 filesystem or network failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};
use readmit_core::cohort::ElectivePolicy;
use readmit_core::eval::Averaging;
use readmit_core::models::ModelKind;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_assignments, resolve, write_manifest};
use crate::error::{Error, Result};
use crate::stages::{self, Representation};

// Plain println! panics when stdout is a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "readmit", version, about = "30-day readmission prediction from discharge summaries")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic admissions and notes tables.
    Synth(SynthArgs),
    /// Build the labelled cohort, rejects report and stratified split.
    Cohort(CohortArgs),
    /// Clean discharge-summary text.
    Prep(PrepArgs),
    /// Turn cleaned text into TF-IDF vectors or document embeddings.
    Featurize(FeaturizeArgs),
    /// Reduce features with PCA fitted on the training split.
    Pca(PcaArgs),
    /// Train a classifier on the training split.
    Train(TrainArgs),
    /// Score a split and write metrics and ROC points.
    Evaluate(EvaluateArgs),
    /// Combine evaluation reports into one comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// JSON config or an earlier run manifest; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of cohort rows.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Probability a planted token marks the true class.
    #[arg(long)]
    pub signal: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output admissions CSV.
    #[arg(long)]
    pub admissions: Option<PathBuf>,
    /// Output notes CSV.
    #[arg(long)]
    pub notes: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CohortArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub admissions: Option<PathBuf>,
    #[arg(long)]
    pub notes: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rejects CSV [default: <out>.rejects.csv]
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    /// Split assignment CSV [default: <out>.splits.csv]
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long, value_parser = parse_policy)]
    pub elective_policy: Option<ElectivePolicy>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train, validation and test fractions, e.g. 0.7,0.15,0.15.
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<Value>,
}

fn parse_policy(s: &str) -> Result<ElectivePolicy, String> {
    s.parse().map_err(|e: readmit_core::Error| e.to_string())
}

fn parse_ratios(s: &str) -> Result<Value, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [train, validation, test] => Ok(json!({"train": train, "validation": validation, "test": test})),
        _ => Err("expected three comma-separated fractions".into()),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PrepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Cohort CSV from the cohort stage.
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Token frequency CSV [default: <out>.tokens.csv]
    #[arg(long)]
    pub token_report: Option<PathBuf>,
    #[arg(long)]
    pub lowercase: Option<bool>,
    #[arg(long)]
    pub lemmatize: Option<bool>,
    #[arg(long)]
    pub keep_negations: Option<bool>,
    /// Stop-word list, one term per line [default: bundled list]
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Lemma dictionary, form<TAB>lemma per line [default: bundled]
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    /// Removal pattern; repeat to give the full ordered list.
    #[arg(long = "pattern")]
    #[serde(rename = "patterns", skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<String>,
    #[arg(long)]
    pub top_n: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Cleaned cohort CSV from the prep stage.
    #[arg(long)]
    pub cleaned: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub representation: Option<Representation>,
    /// mock, file=<embeddings.csv> or service=<url> (bare `service` reads READMIT_EMBED_URL).
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Mock embedder seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fitted TF-IDF model [default: <out>.tfidf.json]
    #[arg(long)]
    pub tfidf_model: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PcaArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Fitted PCA model [default: <out>.pca.json]
    #[arg(long)]
    pub pca_model: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Cohort CSV supplying labels.
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// LOGREG, KNN, GNB, RF, SVM or MLP.
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hyperparameter override as key=value (JSON values), repeatable.
    #[arg(long = "param")]
    #[serde(skip)]
    pub params: Vec<String>,
    /// Fitted TF-IDF model; reports the top LOGREG terms.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    /// Top terms CSV [default: <out>.top_features.csv]
    #[arg(long)]
    pub top_features: Option<PathBuf>,
    #[arg(long)]
    pub top_n: Option<usize>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: readmit_core::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Trained model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// TRAIN, VAL or TEST [default: TEST]
    #[arg(long)]
    pub split: Option<String>,
    /// binary, macro or weighted [default: weighted]
    #[arg(long, value_parser = parse_average)]
    pub average: Option<Averaging>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ROC points CSV [default: <out>.roc.csv]
    #[arg(long)]
    pub roc: Option<PathBuf>,
}

fn parse_average(s: &str) -> Result<Averaging, String> {
    s.parse().map_err(|e: readmit_core::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Evaluation report JSON files.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<PathBuf>,
    /// Output comparison CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn flags<T: Serialize>(args: &T) -> Result<Value> {
    let mut v = serde_json::to_value(args).map_err(|e| Error::Invalid(e.to_string()))?;
    if let Value::Object(o) = &mut v {
        o.retain(|_, v| !v.is_null());
    }
    Ok(v)
}

enum Failure {
    Usage(&'static str, Error),
    Run(Error),
}

fn settle<T: DeserializeOwned>(
    stage: &'static str,
    config: Option<&PathBuf>,
    flags: Value,
    derived: &[(&str, &str)],
) -> Result<T, Failure> {
    resolve(stage, config.map(PathBuf::as_path), flags, derived).map_err(|e| match e {
        Error::Invalid(_) => Failure::Usage(stage, e),
        other => Failure::Run(other),
    })
}

fn run_command(command: Command) -> Result<(), Failure> {
    let run = Failure::Run;
    match command {
        Command::Synth(a) => {
            let c: stages::SynthConfig = settle("synth", a.config.as_ref(), flags(&a).map_err(run)?, &[])?;
            stages::run_synth(&c).map_err(run)?;
            write_manifest(&c.admissions, "synth", &c).map_err(run)?;
            say!("wrote {} and {}", c.admissions.display(), c.notes.display());
        }
        Command::Cohort(a) => {
            let derived = [("rejects", "rejects.csv"), ("splits", "splits.csv")];
            let c: stages::CohortConfig = settle("cohort", a.config.as_ref(), flags(&a).map_err(run)?, &derived)?;
            c.ratios.validate().map_err(|e| Failure::Usage("cohort", e.into()))?;
            let s = stages::run_cohort(&c).map_err(run)?;
            write_manifest(&c.out, "cohort", &c).map_err(run)?;
            let splits: Vec<String> =
                s.split_sizes.iter().map(|(k, (n, p))| format!("{k} {n} ({p} positive)")).collect();
            say!("cohort: {} rows, {} positive, {} rejects; {}", s.rows, s.positives, s.rejects, splits.join(", "));
        }
        Command::Prep(a) => {
            let c: stages::PrepConfig =
                settle("prep", a.config.as_ref(), flags(&a).map_err(run)?, &[("token_report", "tokens.csv")])?;
            stages::run_prep(&c).map_err(run)?;
            write_manifest(&c.out, "prep", &c).map_err(run)?;
            say!("wrote {}", c.out.display());
        }
        Command::Featurize(a) => {
            let c: stages::FeaturizeConfig =
                settle("featurize", a.config.as_ref(), flags(&a).map_err(run)?, &[("tfidf_model", "tfidf.json")])?;
            stages::run_featurize(&c).map_err(run)?;
            write_manifest(&c.out, "featurize", &c).map_err(run)?;
            say!("wrote {}", c.out.display());
        }
        Command::Pca(a) => {
            let c: stages::PcaConfig = settle("pca", a.config.as_ref(), flags(&a).map_err(run)?, &[("pca_model", "pca.json")])?;
            stages::run_pca(&c).map_err(run)?;
            write_manifest(&c.out, "pca", &c).map_err(run)?;
            say!("wrote {}", c.out.display());
        }
        Command::Train(a) => {
            let mut f = flags(&a).map_err(run)?;
            let overrides = parse_assignments(&a.params).map_err(|e| Failure::Usage("train", e))?;
            if !overrides.is_empty() {
                f["hyperparameters"] = Value::Object(overrides);
            }
            let c: stages::TrainConfig = settle("train", a.config.as_ref(), f, &[])?;
            let c = c.materialize().map_err(|e| Failure::Usage("train", e))?;
            let m = stages::run_train(&c).map_err(run)?;
            write_manifest(&c.out, "train", &c).map_err(run)?;
            say!("trained {}; wrote {}", m.describe(), c.out.display());
        }
        Command::Evaluate(a) => {
            let c: stages::EvaluateConfig =
                settle("evaluate", a.config.as_ref(), flags(&a).map_err(run)?, &[("roc", "roc.csv")])?;
            let r = stages::run_evaluate(&c).map_err(run)?;
            write_manifest(&c.out, "evaluate", &c).map_err(run)?;
            let s = r.selected();
            say!(
                "{} on {}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} auc {:.4} ({})",
                r.model_kind, r.split, s.accuracy, s.precision, s.recall, s.f1, r.auc, r.average
            );
            for flag in &r.flags {
                say!("undefined: {flag}");
            }
        }
        Command::Report(a) => {
            let c: stages::ReportConfig = settle("report", a.config.as_ref(), flags(&a).map_err(run)?, &[])?;
            let rows = stages::run_report(&c).map_err(run)?;
            write_manifest(&c.out, "report", &c).map_err(run)?;
            say!("wrote {} ({} rows)", c.out.display(), rows.len());
        }
    }
    Ok(())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the stage, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    0
                }
                _ => 1,
            };
        }
    };
    init_logging(cli.verbose);
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(stage, e)) => {
            eprintln!("error: {e}\n");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(stage) {
                eprintln!("{}", sub.render_usage());
            }
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["readmit", "frobnicate"]), 1);
        assert_eq!(run(["readmit", "cohort", "--bogus"]), 1);
        assert_eq!(run(["readmit", "evaluate"]), 1);
        assert_eq!(run(["readmit", "--help"]), 0);
    }

    #[test]
    fn missing_input_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("c.csv");
        let code = run([
            "readmit",
            "cohort",
            "--admissions",
            "/nonexistent/a.csv",
            "--notes",
            "/nonexistent/n.csv",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
    }
}
