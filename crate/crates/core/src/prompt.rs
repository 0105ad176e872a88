//! k-shot prompts built from a line template.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CopaInstance, Dataset, Question};
use crate::exec::Execution;
use crate::seed;

pub const PLACEHOLDERS: [&str; 6] = ["premise", "question", "before/after", "choice1", "choice2", "correct_answer"];

pub const DEFAULT_TEMPLATE: &str = "Instruction: Given the premise, {premise}, What is the correct {question} {before/after} this?
A: {choice1}
B: {choice2}
Correct {question}: {correct_answer}";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template: {0}")]
    Template(String),
    #[error("pool has {available} {question} exemplars, {needed} needed")]
    InsufficientPool { question: Question, needed: usize, available: usize },
    #[error("exemplar {idx} is a {found} question, target {target} is {expected}")]
    MixedQuestions { target: u64, idx: u64, expected: Question, found: Question },
    #[error("exemplar {0} has no label")]
    UnlabeledExemplar(u64),
    #[error("{0}")]
    Io(String),
    #[error("prompt file line {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(usize),
}

/// Parsed template; `{name}` marks one of [`PLACEHOLDERS`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pieces: Vec<Piece>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::parse(DEFAULT_TEMPLATE).expect("default template is valid")
    }
}

impl PromptTemplate {
    /// Every placeholder must appear at least once and no other `{...}`
    /// may occur. A trailing newline is dropped.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let text = text.strip_suffix('\n').unwrap_or(text);
        let mut pieces = Vec::new();
        let mut seen = [false; 6];
        let mut rest = text;
        while let Some(open) = rest.find(['{', '}']) {
            if rest.as_bytes()[open] == b'}' {
                return Err(PromptError::Template("unmatched `}`".into()));
            }
            let close = rest[open..]
                .find('}')
                .map(|c| open + c)
                .ok_or_else(|| PromptError::Template("unclosed `{`".into()))?;
            let name = &rest[open + 1..close];
            let slot = PLACEHOLDERS
                .iter()
                .position(|p| *p == name)
                .ok_or_else(|| PromptError::Template(format!("unknown placeholder `{{{name}}}`")))?;
            seen[slot] = true;
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            pieces.push(Piece::Slot(slot));
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(PromptError::Template(format!("missing placeholder `{{{}}}`", PLACEHOLDERS[missing])));
        }
        Ok(PromptTemplate { pieces })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders one block. With `answer = None` the answer slot is left
    /// empty and trailing whitespace is trimmed.
    pub fn render_block(&self, x: &CopaInstance, answer: Option<&str>) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(0) => out.push_str(&x.premise),
                Piece::Slot(1) => out.push_str(x.question.as_str()),
                Piece::Slot(2) => out.push_str(direction(x.question)),
                Piece::Slot(3) => out.push_str(&x.choice1),
                Piece::Slot(4) => out.push_str(&x.choice2),
                Piece::Slot(_) => out.push_str(answer.unwrap_or("")),
            }
        }
        if answer.is_none() {
            out.truncate(out.trim_end().len());
        }
        out
    }
}

/// A cause happens before the premise, an effect after it.
pub fn direction(q: Question) -> &'static str {
    match q {
        Question::Cause => "before",
        Question::Effect => "after",
    }
}

fn candidates(pool: &Dataset, question: Question, exclude_idx: Option<u64>) -> Vec<&CopaInstance> {
    pool.instances
        .iter()
        .filter(|x| x.question == question && x.label.is_some() && Some(x.idx) != exclude_idx)
        .collect()
}

fn sample(mut cands: Vec<&CopaInstance>, question: Question, k: usize, seed: u64) -> Result<Vec<CopaInstance>, PromptError> {
    if cands.len() < k {
        return Err(PromptError::InsufficientPool { question, needed: k, available: cands.len() });
    }
    let (picked, _) = cands.partial_shuffle(&mut seed::rng(seed), k);
    Ok(picked.iter().map(|&x| x.clone()).collect())
}

/// `k` labeled instances of type `question`, sampled without replacement.
pub fn select_exemplars(
    pool: &Dataset,
    question: Question,
    k: usize,
    seed: u64,
    exclude_idx: Option<u64>,
) -> Result<Vec<CopaInstance>, PromptError> {
    sample(candidates(pool, question, exclude_idx), question, k, seed)
}

/// Cause and effect exemplars interleaved, cause first; an odd `k` gets
/// the extra cause.
pub fn select_mixed_exemplars(
    pool: &Dataset,
    k: usize,
    seed: u64,
    exclude_idx: Option<u64>,
) -> Result<Vec<CopaInstance>, PromptError> {
    let causes = sample(candidates(pool, Question::Cause, exclude_idx), Question::Cause, k.div_ceil(2), seed::keyed(seed, 0))?;
    let effects = sample(candidates(pool, Question::Effect, exclude_idx), Question::Effect, k / 2, seed::keyed(seed, 1))?;
    let mut out = Vec::with_capacity(k);
    let mut e = effects.into_iter();
    for c in causes {
        out.push(c);
        out.extend(e.next());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    pub target_idx: u64,
    pub exemplar_idxs: Vec<u64>,
}

/// Same-class prompt: every exemplar must share the target's question.
pub fn render_prompt(
    target: &CopaInstance,
    exemplars: &[CopaInstance],
    template: &PromptTemplate,
) -> Result<RenderedPrompt, PromptError> {
    if let Some(x) = exemplars.iter().find(|x| x.question != target.question) {
        return Err(PromptError::MixedQuestions {
            target: target.idx,
            idx: x.idx,
            expected: target.question,
            found: x.question,
        });
    }
    render_any(target, exemplars, template)
}

/// Like [`render_prompt`] without the same-class check.
pub fn render_prompt_mixed(
    target: &CopaInstance,
    exemplars: &[CopaInstance],
    template: &PromptTemplate,
) -> Result<RenderedPrompt, PromptError> {
    render_any(target, exemplars, template)
}

fn render_any(
    target: &CopaInstance,
    exemplars: &[CopaInstance],
    template: &PromptTemplate,
) -> Result<RenderedPrompt, PromptError> {
    let mut blocks = Vec::with_capacity(exemplars.len() + 1);
    for x in exemplars {
        let answer = x.correct_choice().ok_or(PromptError::UnlabeledExemplar(x.idx))?;
        blocks.push(template.render_block(x, Some(answer)));
    }
    blocks.push(template.render_block(target, None));
    Ok(RenderedPrompt {
        text: blocks.join("\n\n"),
        target_idx: target.idx,
        exemplar_idxs: exemplars.iter().map(|x| x.idx).collect(),
    })
}

/// One line of a prompt file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub idx: u64,
    pub prompt: String,
    pub gold_label: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptOptions {
    pub k: usize,
    pub seed: u64,
    /// Interleave cause and effect exemplars instead of matching the target.
    pub mixed_class: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions { k: 4, seed: 0, mixed_class: false }
    }
}

pub fn render_dataset(
    ds: &Dataset,
    pool: &Dataset,
    opts: &PromptOptions,
    template: &PromptTemplate,
) -> Result<Vec<PromptRecord>, PromptError> {
    render_dataset_with(ds, pool, opts, template, Execution::default())
}

/// One record per instance of `ds`, in order. Exemplars for target idx `i`
/// are drawn from `pool` (never idx `i` itself) with a stream keyed by
/// `(opts.seed, i)`.
pub fn render_dataset_with(
    ds: &Dataset,
    pool: &Dataset,
    opts: &PromptOptions,
    template: &PromptTemplate,
    exec: Execution,
) -> Result<Vec<PromptRecord>, PromptError> {
    exec.try_map(&ds.instances, |_, target| {
        let s = seed::keyed(opts.seed, target.idx);
        let rendered = if opts.mixed_class {
            let ex = select_mixed_exemplars(pool, opts.k, s, Some(target.idx))?;
            render_prompt_mixed(target, &ex, template)?
        } else {
            let ex = select_exemplars(pool, target.question, opts.k, s, Some(target.idx))?;
            render_prompt(target, &ex, template)?
        };
        Ok(PromptRecord {
            idx: target.idx,
            prompt: rendered.text,
            gold_label: target.label.map(|l| l.index()),
        })
    })
}

pub fn prompts_to_jsonl(records: &[PromptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("prompt records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_prompts(records: &[PromptRecord], path: &Path) -> Result<(), PromptError> {
    let io = |e: std::io::Error| PromptError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    w.write_all(prompts_to_jsonl(records).as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn parse_prompts(text: &str) -> Result<Vec<PromptRecord>, PromptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PromptError::Record { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn read_prompts(path: &Path) -> Result<Vec<PromptRecord>, PromptError> {
    let text = fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
    parse_prompts(&text)
}
