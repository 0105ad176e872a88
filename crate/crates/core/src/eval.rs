//! Prediction scoring, baselines and the external predictor adapter.
//!
//! Accuracies are exact rationals; only rendering rounds, half to even,
//! to three decimals.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::data::{Dataset, Label};
use crate::exec::Execution;
use crate::prompt::{prompts_to_jsonl, PromptRecord};
use crate::seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prediction for idx {0}")]
    Missing(u64),
    #[error("duplicate prediction for idx {0}")]
    Duplicate(u64),
    #[error("prediction for unknown idx {0}")]
    Unknown(u64),
    #[error("prediction line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("predictor exited with {0}")]
    Exit(ExitStatus),
    #[error("predictor: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty predictor command")]
    EmptyCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub idx: u64,
    pub predicted: u8,
}

impl PredictionRecord {
    pub fn new(idx: u64, predicted: Label) -> Self {
        PredictionRecord { idx, predicted: predicted.index() }
    }
}

/// Parses `{idx, predicted}` lines; blank lines are skipped.
pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_prediction_line(line).map_err(|message| EvalError::Malformed { line: i + 1, message })?);
    }
    Ok(out)
}

fn parse_prediction_line(line: &str) -> Result<PredictionRecord, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let idx = v.get("idx").and_then(Value::as_u64).ok_or("`idx` must be a non-negative integer")?;
    match v.get("predicted").and_then(Value::as_u64) {
        Some(p @ (0 | 1)) => Ok(PredictionRecord { idx, predicted: p as u8 }),
        _ => Err("`predicted` must be 0 or 1".into()),
    }
}

pub fn predictions_to_jsonl(preds: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for p in preds {
        out.push_str(&serde_json::to_string(p).expect("predictions serialize"));
        out.push('\n');
    }
    out
}

/// Checks that `preds` holds exactly one record per idx of `expected`.
/// Errors name the smallest offending idx.
pub fn check_coverage(expected: &HashSet<u64>, preds: &[PredictionRecord]) -> Result<(), EvalError> {
    let mut seen = HashSet::with_capacity(preds.len());
    let mut duplicate = None::<u64>;
    let mut unknown = None::<u64>;
    for p in preds {
        if !expected.contains(&p.idx) {
            unknown = Some(unknown.map_or(p.idx, |u| u.min(p.idx)));
        } else if !seen.insert(p.idx) {
            duplicate = Some(duplicate.map_or(p.idx, |d| d.min(p.idx)));
        }
    }
    if let Some(i) = unknown {
        return Err(EvalError::Unknown(i));
    }
    if let Some(i) = duplicate {
        return Err(EvalError::Duplicate(i));
    }
    if let Some(i) = expected.iter().filter(|i| !seen.contains(i)).min() {
        return Err(EvalError::Missing(*i));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageAccuracy {
    pub language: String,
    pub correct: u64,
    pub total: u64,
}

impl LanguageAccuracy {
    /// `None` when nothing was scored.
    pub fn accuracy(&self) -> Option<Ratio<u64>> {
        (self.total > 0).then(|| Ratio::new(self.correct, self.total))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccuracyReport {
    pub entries: Vec<LanguageAccuracy>,
    pub warnings: Vec<String>,
}

impl AccuracyReport {
    pub fn merge(reports: impl IntoIterator<Item = AccuracyReport>) -> Self {
        let mut out = AccuracyReport::default();
        for r in reports {
            out.entries.extend(r.entries);
            out.warnings.extend(r.warnings);
        }
        out
    }

    /// Mean of the per-language accuracies; entries with nothing scored
    /// are left out.
    pub fn macro_average(&self) -> Option<Ratio<u128>> {
        let accs: Vec<Ratio<u128>> = self
            .entries
            .iter()
            .filter_map(|e| e.accuracy())
            .map(|a| Ratio::new(*a.numer() as u128, *a.denom() as u128))
            .collect();
        if accs.is_empty() {
            return None;
        }
        let n = accs.len() as u128;
        Some(accs.into_iter().fold(Ratio::from_integer(0), |s, a| s + a) / n)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let w = self.entries.iter().map(|e| e.language.len()).chain([8]).max().unwrap_or(8);
        let _ = writeln!(out, "{:<w$}  {:>8}  {:>7}  {:>7}", "language", "accuracy", "correct", "total");
        for e in &self.entries {
            let acc = e.accuracy().map_or_else(|| "-".to_string(), |a| round3(*a.numer() as u128, *a.denom() as u128));
            let _ = writeln!(out, "{:<w$}  {:>8}  {:>7}  {:>7}", e.language, acc, e.correct, e.total);
        }
        let avg = self.macro_average().map_or_else(|| "-".to_string(), |a| round3(*a.numer(), *a.denom()));
        let _ = writeln!(out, "{:<w$}  {:>8}", "avg", avg);
        for warning in &self.warnings {
            let _ = writeln!(out, "warning: {warning}");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                json!({
                    "language": e.language,
                    "accuracy": e.accuracy().map(|a| round3(*a.numer() as u128, *a.denom() as u128)),
                    "correct": e.correct,
                    "total": e.total,
                })
            })
            .collect();
        json!({
            "languages": entries,
            "average": self.macro_average().map(|a| round3(*a.numer(), *a.denom())),
            "warnings": self.warnings,
        })
    }
}

/// `n / d` with three decimals, ties rounded to even.
pub fn round3(n: u128, d: u128) -> String {
    assert!(d > 0, "zero denominator");
    let scaled = n * 1000;
    let (mut q, r) = (scaled / d, scaled % d);
    if 2 * r > d || (2 * r == d && q % 2 == 1) {
        q += 1;
    }
    format!("{}.{:03}", q / 1000, q % 1000)
}

/// Scores `preds` against one gold dataset. Gold records without a label
/// still need a prediction but are not counted.
pub fn score(gold: &Dataset, preds: &[PredictionRecord]) -> Result<AccuracyReport, EvalError> {
    let expected: HashSet<u64> = gold.instances.iter().map(|x| x.idx).collect();
    check_coverage(&expected, preds)?;
    let predicted: HashMap<u64, u8> = preds.iter().map(|p| (p.idx, p.predicted)).collect();
    let mut correct = 0;
    let mut total = 0;
    let mut unlabeled = 0;
    for x in &gold.instances {
        match x.label {
            Some(l) => {
                total += 1;
                if predicted[&x.idx] == l.index() {
                    correct += 1;
                }
            }
            None => unlabeled += 1,
        }
    }
    let language = gold.lang.as_str().to_string();
    let mut warnings = Vec::new();
    if unlabeled > 0 {
        warnings.push(format!("{language}: {unlabeled} unlabeled records excluded from scoring"));
    }
    Ok(AccuracyReport { entries: vec![LanguageAccuracy { language, correct, total }], warnings })
}

pub fn random_baseline(gold: &Dataset, seed: u64) -> Vec<PredictionRecord> {
    random_baseline_with(gold, seed, Execution::default())
}

/// A fair coin per idx, keyed by `(seed, idx)`.
pub fn random_baseline_with(gold: &Dataset, seed: u64, exec: Execution) -> Vec<PredictionRecord> {
    exec.map(&gold.instances, |_, x| PredictionRecord { idx: x.idx, predicted: (seed::keyed(seed, x.idx) >> 63) as u8 })
}

fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().flat_map(char::to_lowercase).collect())
        .collect()
}

/// Picks the choice sharing more case-folded word tokens with the
/// premise; ties go to choice1.
pub fn overlap_baseline(gold: &Dataset) -> Vec<PredictionRecord> {
    gold.instances
        .iter()
        .map(|x| {
            let p = tokens(&x.premise);
            let o1 = tokens(&x.choice1).intersection(&p).count();
            let o2 = tokens(&x.choice2).intersection(&p).count();
            PredictionRecord { idx: x.idx, predicted: u8::from(o2 > o1) }
        })
        .collect()
}

/// Runs `command` (program then arguments) with the prompt JSONL on stdin
/// and reads `{idx, predicted}` JSONL from stdout. Stderr is inherited.
pub fn run_external(command: &[String], prompts: &[PromptRecord]) -> Result<Vec<PredictionRecord>, EvalError> {
    let (program, args) = command.split_first().ok_or(EvalError::EmptyCommand)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input = prompts_to_jsonl(prompts);
    // Writing from a separate thread keeps a predictor that streams its
    // output from blocking on a full pipe.
    let writer = thread::spawn(move || {
        let r = stdin.write_all(input.as_bytes());
        drop(stdin);
        r
    });
    let mut preds = Vec::new();
    let mut malformed = None;
    let stdout = child.stdout.take().expect("stdout is piped");
    for (i, line) in BufReader::new(stdout).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || malformed.is_some() {
            continue;
        }
        match parse_prediction_line(&line) {
            Ok(p) => preds.push(p),
            Err(message) => malformed = Some(EvalError::Malformed { line: i + 1, message }),
        }
    }
    let status = child.wait()?;
    let written = writer.join().expect("writer thread panicked");
    if !status.success() {
        return Err(EvalError::Exit(status));
    }
    if let Some(e) = malformed {
        return Err(e);
    }
    // A predictor may legitimately exit without reading all input.
    if let Err(e) = written {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    let expected: HashSet<u64> = prompts.iter().map(|p| p.idx).collect();
    check_coverage(&expected, &preds)?;
    Ok(preds)
}
