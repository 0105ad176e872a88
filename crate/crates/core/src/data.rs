//! COPA instances, datasets, JSONL reading/writing and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

/// Canonical key order used when serializing an instance.
pub const CANONICAL_KEYS: [&str; 6] = ["premise", "choice1", "choice2", "question", "label", "idx"];

/// Language and dialect codes of the shared-task release.
pub const KNOWN_LANGUAGES: [&str; 11] = [
    "en", "sl", "sl-cer", "hr", "hr-ckm", "sr", "sr-trans", "sr-tor", "sr-tor-trans", "mk", "mk-trans",
];

/// Suffix tokens allowed after a known code in a derived language tag.
const DERIVED_TOKENS: [&str; 7] = ["trans", "claude", "gpt4", "reverse", "nllb", "rules", "train"];

/// Tags that name multilingual outputs rather than a single variety.
const MULTILINGUAL_TAGS: [&str; 2] = ["mix", "multi"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("field `{field}` (idx {}): {message}", fmt_idx(*.idx))]
    Field { field: &'static str, idx: Option<u64>, message: String },
    #[error("line {line}: {error}")]
    Line { line: usize, error: Box<DataError> },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid language tag `{0}`")]
    LanguageTag(String),
    #[error("invalid dataset id `{0}`")]
    DatasetId(String),
    #[error("unknown split `{0}`")]
    Split(String),
}

fn fmt_idx(idx: Option<u64>) -> String {
    idx.map_or_else(|| "unknown".to_string(), |i| i.to_string())
}

impl DataError {
    fn field(field: &'static str, idx: Option<u64>, message: impl Into<String>) -> Self {
        DataError::Field { field, idx, message: message.into() }
    }

    fn at_line(self, line: usize) -> Self {
        DataError::Line { line, error: Box::new(self) }
    }

    /// Line number for errors raised while reading a file.
    pub fn line(&self) -> Option<usize> {
        match self {
            DataError::Line { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Question {
    Cause,
    Effect,
}

impl Question {
    pub fn as_str(self) -> &'static str {
        match self {
            Question::Cause => "cause",
            Question::Effect => "effect",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Question::Cause => Question::Effect,
            Question::Effect => Question::Cause,
        }
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Question {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "cause" => Ok(Question::Cause),
            "effect" => Ok(Question::Effect),
            _ => Err(()),
        }
    }
}

/// Index of the correct choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Choice1,
    Choice2,
}

impl Label {
    pub fn index(self) -> u8 {
        match self {
            Label::Choice1 => 0,
            Label::Choice2 => 1,
        }
    }

    pub fn from_index(i: u64) -> Option<Self> {
        match i {
            0 => Some(Label::Choice1),
            1 => Some(Label::Choice2),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::Choice1 => Label::Choice2,
            Label::Choice2 => Label::Choice1,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(DataError::Split(s.to_string())),
        }
    }
}

/// A language or dialect code, optionally extended with provenance tokens
/// (`hr-ckm-claude`, `sr-nllb`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(code: &str) -> Result<Self, DataError> {
        code.parse()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Known code this tag is built on (`sr` for `sr-nllb`), if any.
    pub fn base_code(&self) -> Option<&'static str> {
        KNOWN_LANGUAGES
            .iter()
            .copied()
            .filter(|code| self.0 == *code || self.0.starts_with(&format!("{code}-")))
            .max_by_key(|code| code.len())
    }

    /// Same tag with `-trans` appended, unless it already ends in it.
    pub fn transliterated(&self) -> LanguageTag {
        if self.0.ends_with("-trans") {
            self.clone()
        } else {
            LanguageTag(format!("{}-trans", self.0))
        }
    }

    /// Tag for datasets that mix several languages per instance.
    pub fn mix() -> Self {
        LanguageTag("mix".to_string())
    }

    /// Tag for concatenations of blocks in different languages.
    pub fn multi() -> Self {
        LanguageTag("multi".to_string())
    }
}

impl FromStr for LanguageTag {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        let bad = || DataError::LanguageTag(s.to_string());
        if MULTILINGUAL_TAGS.contains(&s) {
            return Ok(LanguageTag(s.to_string()));
        }
        let tag = LanguageTag(s.to_string());
        let base = tag.base_code().ok_or_else(bad)?;
        let rest = &s[base.len()..];
        if rest.is_empty() {
            return Ok(tag);
        }
        let extension = rest.strip_prefix('-').ok_or_else(bad)?;
        if extension.split('-').all(|token| DERIVED_TOKENS.contains(&token)) {
            Ok(tag)
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How a training block was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetKind {
    Train,
    Trans,
    Claude,
    Gpt4,
    Reverse,
    Nllb,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 6] = [
        DatasetKind::Train,
        DatasetKind::Trans,
        DatasetKind::Claude,
        DatasetKind::Gpt4,
        DatasetKind::Reverse,
        DatasetKind::Nllb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Train => "train",
            DatasetKind::Trans => "trans",
            DatasetKind::Claude => "claude",
            DatasetKind::Gpt4 => "gpt4",
            DatasetKind::Reverse => "reverse",
            DatasetKind::Nllb => "nllb",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Identifier of a dataset block, written `<lang>-<kind>` (`hr-train`,
/// `mk-trans-reverse`, `sr-nllb-trans`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DatasetId {
    pub base_lang: LanguageTag,
    pub kind: DatasetKind,
}

impl DatasetId {
    pub fn new(base_lang: LanguageTag, kind: DatasetKind) -> Self {
        DatasetId { base_lang, kind }
    }

    /// Language of the text in this block: provenance tokens are dropped and
    /// a trailing `trans` kind marks the Latin-script variant.
    pub fn language(&self) -> LanguageTag {
        let base = self.base_lang.as_str();
        let code = self.base_lang.base_code().unwrap_or(base);
        let rest = &base[code.len()..];
        let mut lang = code.to_string();
        let trans = rest.split('-').any(|t| t == "trans") || self.kind == DatasetKind::Trans;
        if trans && !lang.ends_with("-trans") {
            lang.push_str("-trans");
        }
        LanguageTag(lang)
    }

    /// Id of the transliterated copy (`mk-train` becomes `mk-trans`,
    /// `sr-nllb` becomes `sr-nllb-trans`).
    pub fn transliterated(&self) -> DatasetId {
        match self.kind {
            DatasetKind::Train => DatasetId::new(self.base_lang.clone(), DatasetKind::Trans),
            DatasetKind::Trans => self.clone(),
            _ => DatasetId::new(LanguageTag(self.to_string()), DatasetKind::Trans),
        }
    }

    /// Id of the reverse-augmented copy (`hr-train` becomes `hr-reverse`,
    /// `mk-trans` becomes `mk-trans-reverse`).
    pub fn reversed(&self) -> DatasetId {
        match self.kind {
            DatasetKind::Train => DatasetId::new(self.base_lang.clone(), DatasetKind::Reverse),
            _ => DatasetId::new(LanguageTag(self.to_string()), DatasetKind::Reverse),
        }
    }
}

impl FromStr for DatasetId {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        let bad = || DataError::DatasetId(s.to_string());
        let (lang, kind) = s.rsplit_once('-').ok_or_else(bad)?;
        let kind = DatasetKind::parse(kind).ok_or_else(bad)?;
        let base_lang = lang.parse().map_err(|_| bad())?;
        Ok(DatasetId { base_lang, kind })
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.base_lang, self.kind.as_str())
    }
}

/// One premise with two candidate causes or effects.
///
/// `label` is absent only for unlabeled test records. Keys outside the
/// canonical six are kept in `extra` and written back after them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopaInstance {
    pub premise: String,
    pub choice1: String,
    pub choice2: String,
    pub question: Question,
    pub label: Option<Label>,
    pub idx: u64,
    pub extra: Map<String, Value>,
}

impl CopaInstance {
    pub fn new(
        premise: impl Into<String>,
        choice1: impl Into<String>,
        choice2: impl Into<String>,
        question: Question,
        label: Label,
        idx: u64,
    ) -> Self {
        CopaInstance {
            premise: premise.into(),
            choice1: choice1.into(),
            choice2: choice2.into(),
            question,
            label: Some(label),
            idx,
            extra: Map::new(),
        }
    }

    pub fn choice(&self, which: Label) -> &str {
        match which {
            Label::Choice1 => &self.choice1,
            Label::Choice2 => &self.choice2,
        }
    }

    pub fn choice_mut(&mut self, which: Label) -> &mut String {
        match which {
            Label::Choice1 => &mut self.choice1,
            Label::Choice2 => &mut self.choice2,
        }
    }

    pub fn correct_choice(&self) -> Option<&str> {
        self.label.map(|l| self.choice(l))
    }

    /// The three text fields in canonical order.
    pub fn texts(&self) -> [&str; 3] {
        [&self.premise, &self.choice1, &self.choice2]
    }

    /// Applies `f` to every text field, keeping everything else.
    pub fn map_texts(&self, mut f: impl FnMut(&str) -> String) -> CopaInstance {
        CopaInstance {
            premise: f(&self.premise),
            choice1: f(&self.choice1),
            choice2: f(&self.choice2),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::with_capacity(6 + self.extra.len());
        map.insert("premise".into(), Value::from(self.premise.as_str()));
        map.insert("choice1".into(), Value::from(self.choice1.as_str()));
        map.insert("choice2".into(), Value::from(self.choice2.as_str()));
        map.insert("question".into(), Value::from(self.question.as_str()));
        if let Some(label) = self.label {
            map.insert("label".into(), Value::from(label.index()));
        }
        map.insert("idx".into(), Value::from(self.idx));
        for (k, v) in &self.extra {
            map.insert(k.clone(), v.clone());
        }
        Value::Object(map)
    }

    /// Single-line canonical JSON, without trailing newline.
    pub fn to_json_line(&self) -> String {
        self.to_json().to_string()
    }
}

/// Parses a labeled record.
pub fn parse_instance(record: &Value) -> Result<CopaInstance, DataError> {
    parse_record(record, false)
}

/// Parses a record from `split`; only test records may omit `label`.
pub fn parse_instance_for(record: &Value, split: Split) -> Result<CopaInstance, DataError> {
    parse_record(record, split == Split::Test)
}

fn parse_record(record: &Value, label_optional: bool) -> Result<CopaInstance, DataError> {
    let obj = record
        .as_object()
        .ok_or_else(|| DataError::field("record", None, "expected a JSON object"))?;

    let idx = match obj.get("idx") {
        None => return Err(DataError::field("idx", None, "missing")),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| DataError::field("idx", None, format!("expected a non-negative integer, got {v}")))?,
    };
    let text = |field: &'static str| -> Result<String, DataError> {
        match obj.get(field) {
            None => Err(DataError::field(field, Some(idx), "missing")),
            Some(Value::String(s)) if s.trim().is_empty() => Err(DataError::field(field, Some(idx), "empty text")),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(DataError::field(field, Some(idx), format!("expected a string, got {v}"))),
        }
    };
    let premise = text("premise")?;
    let choice1 = text("choice1")?;
    let choice2 = text("choice2")?;

    let question = match obj.get("question") {
        None => return Err(DataError::field("question", Some(idx), "missing")),
        Some(v) => v
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DataError::field("question", Some(idx), format!("question out of domain: {v}")))?,
    };
    let label = match obj.get("label") {
        None if label_optional => None,
        None => return Err(DataError::field("label", Some(idx), "missing")),
        Some(v) => Some(
            v.as_u64()
                .and_then(Label::from_index)
                .ok_or_else(|| DataError::field("label", Some(idx), format!("label out of domain: {v}")))?,
        ),
    };

    let extra = obj
        .iter()
        .filter(|(k, _)| !CANONICAL_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    Ok(CopaInstance { premise, choice1, choice2, question, label, idx, extra })
}

/// An ordered block of instances in one language and split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub lang: LanguageTag,
    pub split: Split,
    pub source_id: Option<DatasetId>,
    pub instances: Vec<CopaInstance>,
}

impl Dataset {
    pub fn new(lang: LanguageTag, split: Split, instances: Vec<CopaInstance>) -> Self {
        Dataset { lang, split, source_id: None, instances }
    }

    pub fn with_source(mut self, id: DatasetId) -> Self {
        self.source_id = Some(id);
        self
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Largest idx, or `None` for an empty dataset.
    pub fn max_idx(&self) -> Option<u64> {
        self.instances.iter().map(|x| x.idx).max()
    }

    /// Human-readable name: the source id if known, else `<lang>-<split>`.
    pub fn name(&self) -> String {
        match &self.source_id {
            Some(id) => id.to_string(),
            None => format!("{}-{}", self.lang, self.split),
        }
    }

    /// Parses JSONL text; blank lines are skipped and errors carry the
    /// 1-based line number.
    pub fn from_jsonl(text: &str, lang: LanguageTag, split: Split) -> Result<Self, DataError> {
        let mut instances = Vec::new();
        for (i, line) in text.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(line).map_err(|e| DataError::Json(e).at_line(i + 1))?;
            instances.push(parse_instance_for(&value, split).map_err(|e| e.at_line(i + 1))?);
        }
        Ok(Dataset::new(lang, split, instances))
    }

    /// Canonical JSONL: one object per line, LF terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for x in &self.instances {
            out.push_str(&x.to_json_line());
            out.push('\n');
        }
        out
    }
}

pub fn load_dataset(path: &Path, lang: LanguageTag, split: Split) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    Dataset::from_jsonl(&text, lang, split)
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for x in &ds.instances {
        w.write_all(x.to_json_line().as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Expected instance counts per (language, split).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpectedCounts(BTreeMap<(String, Split), usize>);

impl ExpectedCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, lang: &str, split: Split, count: usize) {
        self.0.insert((lang.to_string(), split), count);
    }

    pub fn get(&self, lang: &str, split: Split) -> Option<usize> {
        self.0.get(&(lang.to_string(), split)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((&str, Split), usize)> {
        self.0.iter().map(|((l, s), n)| ((l.as_str(), *s), *n))
    }

    /// Counts of the shared-task release.
    pub fn shared_task() -> Self {
        let mut t = ExpectedCounts::new();
        for lang in ["en", "sl", "sl-cer", "hr", "sr", "sr-trans", "sr-tor", "sr-tor-trans", "mk", "mk-trans"] {
            t.set(lang, Split::Train, 400);
            t.set(lang, Split::Validation, 100);
        }
        for lang in ["sl-cer", "hr-ckm", "sr-tor-trans"] {
            t.set(lang, Split::Test, 500);
        }
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitStats {
    pub instances: usize,
    pub cause: usize,
    pub effect: usize,
    pub label0: usize,
    pub label1: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub dataset: String,
    pub field: String,
    pub idx: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Keyed by `(lang, split)`.
    #[serde(serialize_with = "serialize_counts")]
    pub counts: BTreeMap<(String, Split), SplitStats>,
    pub violations: Vec<Violation>,
    /// Non-fatal findings such as text that is not in NFC.
    pub warnings: Vec<Violation>,
}

fn serialize_counts<S: serde::Serializer>(
    counts: &BTreeMap<(String, Split), SplitStats>,
    s: S,
) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Row<'a> {
        lang: &'a str,
        split: &'static str,
        #[serde(flatten)]
        stats: &'a SplitStats,
    }
    s.collect_seq(counts.iter().map(|((lang, split), stats)| Row { lang, split: split.as_str(), stats }))
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push_violation(&mut self, dataset: &str, field: &str, idx: Option<u64>, message: impl Into<String>) {
        self.violations.push(Violation {
            dataset: dataset.to_string(),
            field: field.to_string(),
            idx,
            message: message.into(),
        });
    }

    /// Plain-text rendering: one count row per (lang, split), then findings.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:<10} {:>9} {:>7} {:>7} {:>7} {:>7}\n",
            "lang", "split", "instances", "cause", "effect", "label0", "label1"
        );
        for ((lang, split), s) in &self.counts {
            out.push_str(&format!(
                "{:<16} {:<10} {:>9} {:>7} {:>7} {:>7} {:>7}\n",
                lang,
                split.as_str(),
                s.instances,
                s.cause,
                s.effect,
                s.label0,
                s.label1
            ));
        }
        for (kind, list) in [("violation", &self.violations), ("warning", &self.warnings)] {
            for v in list {
                out.push_str(&format!(
                    "{kind}: {} field `{}` idx {}: {}\n",
                    v.dataset,
                    v.field,
                    fmt_idx(v.idx),
                    v.message
                ));
            }
        }
        out
    }
}

/// Checks every instance invariant and, when `expected` is given, the
/// per-language per-split counts of the languages present.
pub fn validate(datasets: &[Dataset], expected: Option<&ExpectedCounts>) -> ValidationReport {
    let mut report = ValidationReport::default();

    for ds in datasets {
        let name = ds.name();
        let stats = report.counts.entry((ds.lang.to_string(), ds.split)).or_default();
        let mut seen: BTreeMap<u64, usize> = BTreeMap::new();

        for (pos, x) in ds.instances.iter().enumerate() {
            stats.instances += 1;
            match x.question {
                Question::Cause => stats.cause += 1,
                Question::Effect => stats.effect += 1,
            }
            match x.label {
                Some(Label::Choice1) => stats.label0 += 1,
                Some(Label::Choice2) => stats.label1 += 1,
                None => stats.unlabeled += 1,
            }

            for (field, text) in [("premise", &x.premise), ("choice1", &x.choice1), ("choice2", &x.choice2)] {
                if text.trim().is_empty() {
                    report.violations.push(Violation {
                        dataset: name.clone(),
                        field: field.into(),
                        idx: Some(x.idx),
                        message: "empty text".into(),
                    });
                } else if !is_nfc(text) {
                    report.warnings.push(Violation {
                        dataset: name.clone(),
                        field: field.into(),
                        idx: Some(x.idx),
                        message: "text is not in Unicode NFC".into(),
                    });
                }
            }
            if x.label.is_none() && ds.split != Split::Test {
                report.violations.push(Violation {
                    dataset: name.clone(),
                    field: "label".into(),
                    idx: Some(x.idx),
                    message: format!("missing label in {} split", ds.split),
                });
            }
            if let Some(first) = seen.insert(x.idx, pos + 1) {
                report.violations.push(Violation {
                    dataset: name.clone(),
                    field: "idx".into(),
                    idx: Some(x.idx),
                    message: format!("duplicate idx at records {first} and {}", pos + 1),
                });
                seen.insert(x.idx, first);
            }
        }
    }

    if let Some(expected) = expected {
        let mut mismatches = Vec::new();
        for ((lang, split), stats) in &report.counts {
            if let Some(want) = expected.get(lang, *split) {
                if want != stats.instances {
                    mismatches.push(Violation {
                        dataset: format!("{lang}-{split}"),
                        field: "count".into(),
                        idx: None,
                        message: format!("expected {want} instances, found {}", stats.instances),
                    });
                }
            }
        }
        report.violations.extend(mismatches);
    }
    report
}

fn is_nfc(text: &str) -> bool {
    match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => true,
        IsNormalized::No => false,
        IsNormalized::Maybe => text.nfc().eq(text.chars()),
    }
}
