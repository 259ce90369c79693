//! Discharge-summary cleaning: special-pattern removal, tokenization,
//! lemmatization and stop-word removal, applied in that order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use regex_automata::meta::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bundled stop-word list (150 terms).
pub const BUNDLED_STOPWORDS: &str = include_str!("../fixtures/stopwords.txt");
/// Bundled lemma dictionary, `form<TAB>lemma` per line.
pub const BUNDLED_LEMMAS: &str = include_str!("../fixtures/lemmas.tsv");

/// Terms that survive stop-word removal while negations are kept.
pub const PROTECTED_TERMS: [&str; 6] = ["without", "no", "not", "negative", "normal", "family"];

/// Default removal patterns, applied in order.
pub const DEFAULT_SPECIAL_PATTERNS: [&str; 4] = [
    // section-header boilerplate lines
    r"(?im)^[ \t]*(?:admission date|discharge date|service)[ \t]*:[^\n]*",
    // de-identification placeholders
    r"(?s)\[\*\*.*?\*\*\]",
    // honorific titles
    r"(?i-u)\b(?:dr|mr|mrs|ms)\.|\bm\.d\.|\bph\.?d\b\.?",
    // numeric values (doses, dates, vitals), unit words are left alone
    r"(?-u)[0-9]+(?:[.,][0-9]+)*",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub hadm_id: u64,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CleanedDoc {
    pub tokens: Vec<String>,
    /// Tokens joined by single spaces.
    pub text: String,
}

/// Parses a one-term-per-line list; `#` starts a comment.
pub fn parse_term_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(strip_comment)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_ascii_lowercase())
        .collect()
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Dictionary lookups backed by conservative suffix rules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lemmatizer {
    dictionary: BTreeMap<String, String>,
}

impl Lemmatizer {
    /// Parses `form<TAB>lemma` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dictionary = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let (form, lemma) = line
                .split_once('\t')
                .map(|(f, l)| (f.trim(), l.trim()))
                .filter(|(f, l)| !f.is_empty() && !l.is_empty())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("lemma dictionary line {}: expected form<TAB>lemma", no + 1))
                })?;
            dictionary.insert(form.to_ascii_lowercase(), lemma.to_ascii_lowercase());
        }
        Ok(Self { dictionary })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEMMAS).expect("bundled lemma dictionary is well formed")
    }

    pub fn len(&self) -> usize {
        self.dictionary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dictionary.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.dictionary.iter().map(|(f, l)| (f.as_str(), l.as_str()))
    }

    pub fn lemma(&self, token: &str) -> String {
        if let Some(l) = self.dictionary.get(token) {
            return l.clone();
        }
        let stripped = strip_suffix(token);
        match self.dictionary.get(stripped.as_str()) {
            Some(l) => l.clone(),
            None => stripped,
        }
    }

    pub fn lemmatize(&self, tokens: &[String]) -> Vec<String> {
        tokens.iter().map(|t| self.lemma(t)).collect()
    }
}

fn strip_suffix(token: &str) -> String {
    let n = token.len();
    if n > 4 && token.ends_with("ies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n > 4
        && (token.ends_with("sses")
            || token.ends_with("xes")
            || token.ends_with("ches")
            || token.ends_with("shes")
            || token.ends_with("zzes"))
    {
        return token[..n - 2].to_string();
    }
    if n > 3
        && token.ends_with('s')
        && !(token.ends_with("ss") || token.ends_with("us") || token.ends_with("is"))
    {
        return token[..n - 1].to_string();
    }
    token.to_string()
}

#[derive(Clone, Debug)]
struct SpecialPattern {
    source: String,
    regex: Regex,
}

fn compile(source: &str) -> Result<SpecialPattern> {
    let regex = Regex::new(source).map_err(|e| Error::Pattern {
        pattern: source.to_string(),
        reason: e.to_string(),
    })?;
    Ok(SpecialPattern {
        source: source.to_string(),
        regex,
    })
}

#[derive(Clone, Debug)]
pub struct CleanConfig {
    pub lowercase: bool,
    pub lemmatize: bool,
    pub keep_negations: bool,
    stopwords: BTreeSet<String>,
    lemmatizer: Lemmatizer,
    patterns: Vec<SpecialPattern>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            lemmatize: true,
            keep_negations: true,
            stopwords: parse_term_list(BUNDLED_STOPWORDS),
            lemmatizer: Lemmatizer::bundled(),
            patterns: DEFAULT_SPECIAL_PATTERNS
                .iter()
                .map(|p| compile(p).expect("default patterns compile"))
                .collect(),
        }
    }
}

impl CleanConfig {
    pub fn with_stopwords<I, S>(mut self, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = terms.into_iter().map(|t| t.as_ref().to_ascii_lowercase()).collect();
        self
    }

    pub fn with_lemmatizer(mut self, lemmatizer: Lemmatizer) -> Self {
        self.lemmatizer = lemmatizer;
        self
    }

    /// Replaces the removal patterns; each match becomes a single space.
    pub fn with_special_patterns<S: AsRef<str>>(mut self, patterns: &[S]) -> Result<Self> {
        self.patterns = patterns.iter().map(|p| compile(p.as_ref())).collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn special_patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|p| p.source.as_str())
    }

    /// The stop words actually removed: protected terms are carved out while
    /// `keep_negations` is on.
    pub fn stopwords(&self) -> BTreeSet<&str> {
        self.stopwords
            .iter()
            .map(String::as_str)
            .filter(|t| !(self.keep_negations && PROTECTED_TERMS.contains(t)))
            .collect()
    }

    pub fn lemmatizer(&self) -> &Lemmatizer {
        &self.lemmatizer
    }

    pub fn remove_special(&self, text: &str) -> String {
        let mut current = text.to_string();
        for p in &self.patterns {
            current = replace_matches(&p.regex, &current);
        }
        collapse_whitespace(&current)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        split_alpha(text, self.lowercase)
    }

    pub fn remove_stopwords(&self, tokens: Vec<String>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| {
                (self.keep_negations && PROTECTED_TERMS.contains(&t.as_str())) || !self.stopwords.contains(t)
            })
            .collect()
    }

    /// remove_special, tokenize, lemmatize (when enabled), remove stop words.
    pub fn clean(&self, text: &str) -> CleanedDoc {
        let stripped = self.remove_special(text);
        let mut tokens = self.tokenize(&stripped);
        if self.lemmatize {
            tokens = self.lemmatizer.lemmatize(&tokens);
        }
        let tokens = self.remove_stopwords(tokens);
        let text = tokens.join(" ");
        CleanedDoc { tokens, text }
    }

    pub fn clean_document(&self, hadm_id: u64, text: &str) -> (TokenizedDoc, String) {
        let CleanedDoc { tokens, text } = self.clean(text);
        (TokenizedDoc { hadm_id, tokens }, text)
    }
}

fn replace_matches(regex: &Regex, text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in regex.find_iter(text) {
        if m.is_empty() {
            continue;
        }
        out.push_str(&text[last..m.start()]);
        out.push(' ');
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(c);
            in_space = false;
        }
    }
    out
}

fn split_alpha(text: &str, lowercase: bool) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphabetic())
        .filter(|t| t.len() >= 2)
        .map(|t| if lowercase { t.to_ascii_lowercase() } else { t.to_string() })
        .collect()
}

/// Removes de-identification spans, titles, numbers and header lines using
/// the default patterns. Prefer [`CleanConfig::remove_special`] in loops; this
/// compiles the patterns on every call.
pub fn remove_special(text: &str) -> String {
    CleanConfig::default().remove_special(text)
}

/// Lowercases and splits on runs of non-letters, dropping one-letter tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    split_alpha(text, true)
}

/// Corpus term counts, most frequent first, ties by term.
pub fn token_frequency_report<'a, I>(docs: I, top_n: usize) -> Result<Vec<(String, usize)>>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn removes_deid_spans_and_titles() {
        assert_eq!(remove_special("[**2151-7-16**] Dr. [**Last Name**]"), " ");
        assert_eq!(remove_special(""), "");
        assert_eq!(remove_special("seen by Mrs. Smith, M.D. and Ms. Jones PhD"), "seen by Smith, and Jones ");
    }

    #[test]
    fn strips_doses_keeps_units() {
        assert_eq!(remove_special("aspirin 81 mg daily"), "aspirin mg daily");
        assert_eq!(remove_special("lasix 2.5 mg, 1,000 ml"), "lasix mg, ml");
    }

    #[test]
    fn drops_header_lines() {
        let text = "Admission Date:  [**2151-7-16**]   Discharge Date: [**2151-8-4**]\nService: MEDICINE\nHistory of chronic pain";
        assert_eq!(remove_special(text), " History of chronic pain");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Patient was stable."), strings(&["patient", "was", "stable"]));
        assert_eq!(tokenize("CHF/COPD"), strings(&["chf", "copd"]));
        assert!(tokenize("a b").is_empty());
        assert_eq!(tokenize("café x-ray"), strings(&["caf", "ray"]));
    }

    #[test]
    fn lemma_examples() {
        let l = Lemmatizer::bundled();
        assert_eq!(l.lemma("admissions"), "admission");
        assert_eq!(l.lemma("studies"), "study");
        assert_eq!(l.lemma("chronic"), "chronic");
        assert_eq!(l.lemma("dialysis"), "dialysis");
        assert_eq!(l.lemma("relapse"), "relapse");
        assert_eq!(l.lemma("relapses"), "relapse");
        assert_eq!(l.lemma("classes"), "class");
        assert_eq!(l.lemma("boxes"), "box");
        assert_eq!(l.lemma("saw"), "see");
        assert_eq!(l.lemma("saws"), "see");
        assert_eq!(l.lemma("ml"), "milliliter");
    }

    #[test]
    fn dictionary_lemmas_are_fixed_points() {
        let l = Lemmatizer::bundled();
        assert!(l.len() > 50);
        for (form, lemma) in l.entries() {
            assert_eq!(l.lemma(lemma), lemma, "{form} -> {lemma}");
        }
    }

    #[test]
    fn bad_dictionary_line() {
        assert!(Lemmatizer::parse("ok\tfine\nbroken line\n").is_err());
        assert_eq!(Lemmatizer::parse("# comment\n\nA\tB # trailing\n").unwrap().lemma("a"), "b");
    }

    #[test]
    fn stopword_examples() {
        let cfg = CleanConfig::default();
        assert_eq!(cfg.remove_stopwords(strings(&["the", "patient", "in", "pain"])), strings(&["patient", "pain"]));
        assert_eq!(cfg.remove_stopwords(strings(&["without", "edema"])), strings(&["without", "edema"]));
        assert!(cfg.remove_stopwords(vec![]).is_empty());
    }

    #[test]
    fn protected_terms_survive_any_list() {
        let cfg = CleanConfig::default().with_stopwords(PROTECTED_TERMS);
        let all = strings(&PROTECTED_TERMS);
        assert_eq!(cfg.remove_stopwords(all.clone()), all);
        assert!(cfg.stopwords().is_empty());
        let mut off = cfg;
        off.keep_negations = false;
        assert!(off.remove_stopwords(all).is_empty());
    }

    #[test]
    fn bundled_list_size() {
        assert_eq!(parse_term_list(BUNDLED_STOPWORDS).len(), 150);
        let effective = CleanConfig::default();
        for t in PROTECTED_TERMS {
            assert!(!effective.stopwords().contains(t));
        }
    }

    #[test]
    fn pipeline_example() {
        let cfg = CleanConfig::default();
        let out = cfg.clean("Dr. [**Name**] saw the patient");
        assert_eq!(out.tokens, strings(&["see", "patient"]));
        assert_eq!(out.text, "see patient");
        assert!(cfg.clean("").tokens.is_empty());
        let mut raw = cfg.clone();
        raw.lemmatize = false;
        assert_eq!(raw.clean("Dr. [**Name**] saw the patient").tokens, strings(&["saw", "patient"]));
    }

    #[test]
    fn custom_patterns() {
        let cfg = CleanConfig::default().with_special_patterns(&["(?i)secret"]).unwrap();
        assert_eq!(cfg.remove_special("a SECRET b 12"), "a b 12");
        assert!(CleanConfig::default().with_special_patterns(&["("]).is_err());
    }

    #[test]
    fn frequency_report() {
        let docs = [strings(&["a-term", "a-term", "b"]), strings(&["b"])];
        let r = token_frequency_report(docs.iter().map(|d| d.as_slice()), 2).unwrap();
        assert_eq!(r, vec![("a-term".to_string(), 2), ("b".to_string(), 2)]);
        assert!(token_frequency_report(core::iter::empty(), 3).unwrap().is_empty());
        assert_eq!(token_frequency_report(docs.iter().map(|d| d.as_slice()), 50).unwrap().len(), 2);
        assert!(token_frequency_report(docs.iter().map(|d| d.as_slice()), 0).is_err());
    }

    fn clinical_text() -> impl Strategy<Value = String> {
        let words = prop::sample::select(vec![
            "Patient", "was", "admitted", "with", "[**Hospital 123**]", "Dr.", "aspirin", "81", "mg", "studies",
            "classes", "without", "no", "the", "CHF/COPD", "2.5", "Admission Date:", "\n", "saw", "relapses",
            "dialysis", "M.D.", "café", "a", "x", "ml", "boxes", "ies", "sss", "diabetes", "Service:", "...",
        ]);
        prop::collection::vec(words, 0..60).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(text in clinical_text()) {
            let cfg = CleanConfig::default();
            let once = cfg.clean(&text);
            let twice = cfg.clean(&once.text);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn cleaned_tokens_are_lowercase_letters_and_not_stopwords(text in clinical_text()) {
            let cfg = CleanConfig::default();
            let stop = cfg.stopwords();
            for t in cfg.clean(&text).tokens {
                prop_assert!(t.len() >= 2 && t.bytes().all(|b| b.is_ascii_lowercase()));
                prop_assert!(!stop.contains(t.as_str()));
            }
        }

        #[test]
        fn remove_special_never_grows(text in ".{0,200}") {
            prop_assert!(remove_special(&text).len() <= text.len());
        }

        #[test]
        fn lemma_is_idempotent(token in "[a-z]{2,12}") {
            let l = Lemmatizer::bundled();
            let once = l.lemma(&token);
            prop_assert_eq!(l.lemma(&once), once);
        }
    }
}
