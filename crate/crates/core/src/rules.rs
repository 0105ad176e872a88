//! Ordered word-rewriting rules for dialect conversion.
//!
//! Text is split into words (maximal runs of letters and combining marks);
//! everything between words passes through untouched. Each word goes through
//! four phases:
//!
//! 1. `lexicon`: whole-word replacement. At most one fires, and a word that
//!    matched (or that already equals a lexicon output) skips phases 2 and 3.
//! 2. `suffix`: the first rule whose pattern ends the word rewrites that
//!    ending. The pattern must be shorter than the word.
//! 3. `final`: same as `suffix` for single-letter endings.
//! 4. `substring`: every occurrence is rewritten, leftmost first, and the
//!    phase repeats until no pattern is left.
//!
//! When a rule rewrites uppercase letters the replacement takes their case:
//! an all-caps word stays all-caps, a capitalized segment is capitalized.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;

use crate::data::{Dataset, DatasetId, DatasetKind, LanguageTag};
use crate::exec::Execution;

const HR_CKM: &str = include_str!("../data/rules/hr-ckm.rules");
const HR_CKM_FINAL_T: &str = include_str!("../data/rules/hr-ckm-final-t.rules");
const HR_CKM_ALT_ENDINGS: &str = include_str!("../data/rules/hr-ckm-alt-endings.rules");
const HR_CKM_VECTORS: &str = include_str!("../data/rules/hr-ckm.vectors");
const HR_CKM_FINAL_T_VECTORS: &str = include_str!("../data/rules/hr-ckm-final-t.vectors");
const HR_CKM_ALT_ENDINGS_VECTORS: &str = include_str!("../data/rules/hr-ckm-alt-endings.vectors");

/// Language tag given to rule-converted Chakavian data.
pub const DEFAULT_TAG: &str = "hr-ckm-rules";

/// Upper bound on substring-phase passes over one word.
const MAX_SUBSTRING_PASSES: usize = 32;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate lexicon pattern `{pattern}` (first on line {first})")]
    DuplicateLexicon { line: usize, first: usize, pattern: String },
    #[error("unknown built-in ruleset `{0}`")]
    UnknownRuleset(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn syntax(line: usize, message: impl Into<String>) -> RuleError {
    RuleError::Syntax { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Lexicon,
    Suffix,
    FinalChar,
    Substring,
}

impl RuleKind {
    pub const PHASES: [RuleKind; 4] = [RuleKind::Lexicon, RuleKind::Suffix, RuleKind::FinalChar, RuleKind::Substring];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Lexicon => "lexicon",
            RuleKind::Suffix => "suffix",
            RuleKind::FinalChar => "final",
            RuleKind::Substring => "substring",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "lexicon" => Some(RuleKind::Lexicon),
            "suffix" => Some(RuleKind::Suffix),
            "final" | "final_char" => Some(RuleKind::FinalChar),
            "substring" => Some(RuleKind::Substring),
            _ => None,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub kind: RuleKind,
    pub pattern: String,
    pub replacement: String,
    pub case_insensitive: bool,
    /// Source line, 0 for rules built in code.
    pub line: usize,
}

impl Rule {
    pub fn new(kind: RuleKind, pattern: &str, replacement: &str) -> Self {
        Rule {
            kind,
            pattern: pattern.to_string(),
            replacement: replacement.to_string(),
            case_insensitive: true,
            line: 0,
        }
    }

    fn key(&self) -> Vec<char> {
        if self.case_insensitive {
            fold(&self.pattern)
        } else {
            self.pattern.chars().collect()
        }
    }

    fn check(&self) -> Result<(), RuleError> {
        if self.pattern.is_empty() {
            return Err(syntax(self.line, "empty pattern"));
        }
        if !self.pattern.chars().all(is_word_char) {
            return Err(syntax(self.line, format!("pattern `{}` must consist of letters", self.pattern)));
        }
        if self.kind == RuleKind::FinalChar && self.pattern.chars().count() != 1 {
            return Err(syntax(self.line, format!("final pattern `{}` must be a single letter", self.pattern)));
        }
        if self.replacement.chars().any(char::is_whitespace) {
            return Err(syntax(self.line, "replacement must not contain whitespace"));
        }
        Ok(())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn fold(s: &str) -> Vec<char> {
    s.chars().map(fold_char).collect()
}

fn matches_at(word: &[char], at: usize, rule: &Rule, key: &[char]) -> bool {
    if at + key.len() > word.len() {
        return false;
    }
    let seg = &word[at..at + key.len()];
    if rule.case_insensitive {
        seg.iter().zip(key).all(|(&a, &b)| fold_char(a) == b)
    } else {
        seg == key
    }
}

/// Replacement text in the case of the segment it replaces.
fn recase(rule: &Rule, segment: &[char], word_all_caps: bool) -> Vec<char> {
    let plain: Vec<char> = rule.replacement.chars().collect();
    if !rule.case_insensitive || !segment.iter().any(|c| c.is_uppercase()) {
        return plain;
    }
    let seg_all_caps = segment.len() >= 2 && segment.iter().all(|c| !c.is_lowercase());
    if word_all_caps || seg_all_caps {
        plain.iter().flat_map(|c| c.to_uppercase()).collect()
    } else if segment[0].is_uppercase() {
        let mut out: Vec<char> = plain.first().map(|c| c.to_uppercase().collect()).unwrap_or_default();
        out.extend(plain.iter().skip(1));
        out
    } else {
        plain
    }
}

/// One rewrite of one word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    /// Ordinal of the word in the input, counting from 0.
    pub word: usize,
    pub kind: RuleKind,
    pub pattern: String,
    pub replacement: String,
    pub line: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace step {step}: word {word} is `{found}`, trace expects `{expected}`")]
pub struct ReplayError {
    pub step: usize,
    pub word: usize,
    pub found: String,
    pub expected: String,
}

impl RuleTrace {
    /// Rebuilds the output from `input` using only the recorded rewrites.
    pub fn replay(&self, input: &str) -> Result<String, ReplayError> {
        let mut segs: Vec<(bool, String)> = segments(input).map(|(w, s)| (w, s.to_string())).collect();
        let word_pos: Vec<usize> = segs.iter().enumerate().filter(|(_, (w, _))| *w).map(|(i, _)| i).collect();
        for (n, step) in self.steps.iter().enumerate() {
            let slot = word_pos.get(step.word).map(|&i| &mut segs[i].1);
            match slot {
                Some(current) if *current == step.before => *current = step.after.clone(),
                other => {
                    return Err(ReplayError {
                        step: n,
                        word: step.word,
                        found: other.map(|s| s.clone()).unwrap_or_default(),
                        expected: step.before.clone(),
                    })
                }
            }
        }
        Ok(segs.into_iter().map(|(_, s)| s).collect())
    }

    /// Steps that rewrote word `word`.
    pub fn for_word(&self, word: usize) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().filter(move |s| s.word == word)
    }
}

/// Splits text into alternating non-word and word segments.
fn segments(text: &str) -> impl Iterator<Item = (bool, &str)> {
    let mut rest = text;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let is_word = is_word_char(first);
        let end = rest.char_indices().find(|&(_, c)| is_word_char(c) != is_word).map_or(rest.len(), |(i, _)| i);
        let (seg, tail) = rest.split_at(end);
        rest = tail;
        Some((is_word, seg))
    })
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    name: String,
    rules: Vec<Rule>,
    lexicon: HashMap<Vec<char>, usize>,
    lexicon_outputs: HashSet<Vec<char>>,
    keys: Vec<Vec<char>>,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.rules == other.rules
    }
}

impl RuleSet {
    pub fn new(name: &str, rules: Vec<Rule>) -> Result<Self, RuleError> {
        let mut set = RuleSet {
            name: name.to_string(),
            rules: Vec::new(),
            lexicon: HashMap::new(),
            lexicon_outputs: HashSet::new(),
            keys: Vec::new(),
        };
        for rule in rules {
            set.push(rule)?;
        }
        Ok(set)
    }

    fn push(&mut self, rule: Rule) -> Result<(), RuleError> {
        rule.check()?;
        let key = rule.key();
        match rule.kind {
            RuleKind::Lexicon => {
                if let Some(&first) = self.lexicon.get(&key) {
                    return Err(RuleError::DuplicateLexicon {
                        line: rule.line,
                        first: self.rules[first].line,
                        pattern: rule.pattern,
                    });
                }
                self.lexicon.insert(key.clone(), self.rules.len());
                self.lexicon_outputs.insert(fold(&rule.replacement));
            }
            RuleKind::Substring => {
                let repl = fold(&rule.replacement);
                for other in self.substring_rules().map(|(_, r)| r).chain(std::iter::once(&rule)) {
                    let k = other.key();
                    if repl.windows(k.len()).any(|w| w == k.as_slice()) {
                        return Err(syntax(
                            rule.line,
                            format!("replacement `{}` re-creates pattern `{}`", rule.replacement, other.pattern),
                        ));
                    }
                }
            }
            _ => {}
        }
        self.keys.push(key);
        self.rules.push(rule);
        Ok(())
    }

    /// Parses `phase<TAB>pattern<TAB>replacement[<TAB>cs]` lines.
    pub fn parse(name: &str, text: &str) -> Result<Self, RuleError> {
        let mut set = RuleSet::new(name, Vec::new())?;
        set.extend_from_text(text)?;
        Ok(set)
    }

    fn extend_from_text(&mut self, text: &str) -> Result<(), RuleError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(syntax(line, "expected `phase<TAB>pattern<TAB>replacement[<TAB>cs]`"));
            }
            let kind = RuleKind::parse(cols[0]).ok_or_else(|| syntax(line, format!("unknown phase `{}`", cols[0])))?;
            let case_insensitive = match cols.get(3) {
                None | Some(&"") | Some(&"ci") => true,
                Some(&"cs") => false,
                Some(flag) => return Err(syntax(line, format!("unknown flag `{flag}`"))),
            };
            self.push(Rule {
                kind,
                pattern: cols[1].to_string(),
                replacement: cols[2].to_string(),
                case_insensitive,
                line,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        let text =
            fs::read_to_string(path).map_err(|source| RuleError::Io { path: path.display().to_string(), source })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rules");
        Self::parse(name, &text)
    }

    /// Shipped rulesets: `hr-ckm` and the overlays `hr-ckm-final-t` and
    /// `hr-ckm-alt-endings` (which hold only their extra rules).
    pub fn builtin(name: &str) -> Result<Self, RuleError> {
        let text = builtin_text(name).ok_or_else(|| RuleError::UnknownRuleset(name.to_string()))?;
        Self::parse(name, text)
    }

    /// A built-in name, or else a path to a rule file.
    pub fn resolve(name_or_path: &str) -> Result<Self, RuleError> {
        match Self::builtin(name_or_path) {
            Err(RuleError::UnknownRuleset(_)) => Self::load(Path::new(name_or_path)),
            other => other,
        }
    }

    /// Appends the rules of `overlay`; each keeps its phase.
    pub fn extend(&mut self, overlay: &RuleSet) -> Result<(), RuleError> {
        for rule in &overlay.rules {
            self.push(rule.clone())?;
        }
        self.name = format!("{}+{}", self.name, overlay.name);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn phase(&self, kind: RuleKind) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.kind == kind)
    }

    fn phase_keyed(&self, kind: RuleKind) -> impl Iterator<Item = (&[char], &Rule)> {
        self.rules.iter().zip(&self.keys).filter(move |(r, _)| r.kind == kind).map(|(r, k)| (k.as_slice(), r))
    }

    fn substring_rules(&self) -> impl Iterator<Item = (&[char], &Rule)> {
        self.phase_keyed(RuleKind::Substring)
    }

    pub fn apply(&self, text: &str) -> String {
        self.run(text, None)
    }

    pub fn apply_traced(&self, text: &str) -> (String, RuleTrace) {
        let mut trace = RuleTrace::default();
        let out = self.run(text, Some(&mut trace));
        (out, trace)
    }

    fn run(&self, text: &str, mut trace: Option<&mut RuleTrace>) -> String {
        let mut out = String::with_capacity(text.len() + 8);
        let mut word_no = 0;
        for (is_word, seg) in segments(text) {
            if is_word {
                out.push_str(&self.rewrite_word(seg, word_no, trace.as_deref_mut()));
                word_no += 1;
            } else {
                out.push_str(seg);
            }
        }
        out
    }

    fn rewrite_word(&self, word: &str, word_no: usize, mut trace: Option<&mut RuleTrace>) -> String {
        let mut cur: Vec<char> = word.chars().collect();
        let all_caps = cur.iter().filter(|c| c.is_alphabetic()).count() >= 2
            && cur.iter().filter(|c| c.is_alphabetic()).all(|c| c.is_uppercase());
        let mut record = |rule: &Rule, before: &[char], after: &[char]| {
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(TraceStep {
                    word: word_no,
                    kind: rule.kind,
                    pattern: rule.pattern.clone(),
                    replacement: rule.replacement.clone(),
                    line: rule.line,
                    before: before.iter().collect(),
                    after: after.iter().collect(),
                });
            }
        };

        let folded: Vec<char> = cur.iter().map(|&c| fold_char(c)).collect();
        let lexicon_hit = self
            .lexicon
            .get(&folded)
            .map(|&i| &self.rules[i])
            .filter(|r| r.case_insensitive || r.pattern.chars().eq(cur.iter().copied()))
            .or_else(|| {
                // Case-sensitive entries are keyed by their exact spelling.
                let exact: Vec<char> = cur.clone();
                self.lexicon.get(&exact).map(|&i| &self.rules[i]).filter(|r| !r.case_insensitive)
            });

        if let Some(rule) = lexicon_hit {
            let next = recase(rule, &cur, all_caps);
            record(rule, &cur, &next);
            cur = next;
        } else if !self.lexicon_outputs.contains(&folded) {
            for kind in [RuleKind::Suffix, RuleKind::FinalChar] {
                let hit = self.phase_keyed(kind).find(|(key, rule)| {
                    cur.len() > key.len() && matches_at(&cur, cur.len() - key.len(), rule, key)
                });
                if let Some((key, rule)) = hit {
                    let at = cur.len() - key.len();
                    let mut next = cur[..at].to_vec();
                    next.extend(recase(rule, &cur[at..], all_caps));
                    record(rule, &cur, &next);
                    cur = next;
                }
            }
        }

        for _ in 0..MAX_SUBSTRING_PASSES {
            let mut changed = false;
            for (key, rule) in self.substring_rules() {
                let mut next = Vec::with_capacity(cur.len());
                let mut i = 0;
                let mut hit = false;
                while i < cur.len() {
                    if matches_at(&cur, i, rule, key) {
                        next.extend(recase(rule, &cur[i..i + key.len()], all_caps));
                        i += key.len();
                        hit = true;
                    } else {
                        next.push(cur[i]);
                        i += 1;
                    }
                }
                if hit {
                    record(rule, &cur, &next);
                    cur = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        cur.into_iter().collect()
    }
}

fn builtin_text(name: &str) -> Option<&'static str> {
    match name {
        "hr-ckm" => Some(HR_CKM),
        "hr-ckm-final-t" => Some(HR_CKM_FINAL_T),
        "hr-ckm-alt-endings" => Some(HR_CKM_ALT_ENDINGS),
        _ => None,
    }
}

/// Rewrites `text`, returning the trace when `trace` is set.
pub fn apply_rules(text: &str, rs: &RuleSet, trace: bool) -> (String, Option<RuleTrace>) {
    if trace {
        let (out, t) = rs.apply_traced(text);
        (out, Some(t))
    } else {
        (rs.apply(text), None)
    }
}

pub fn convert_dataset(ds: &Dataset, rs: &RuleSet) -> Dataset {
    let tag = DEFAULT_TAG.parse().expect("default tag is valid");
    convert_dataset_with(ds, rs, &tag, Execution::default())
}

/// Rewrites every text field and relabels the dataset with `tag`. The result
/// takes the synthetic-dialect slot of the catalog, e.g. `hr-ckm-claude`
/// for any `hr-ckm*` tag.
pub fn convert_dataset_with(ds: &Dataset, rs: &RuleSet, tag: &LanguageTag, exec: Execution) -> Dataset {
    let instances = exec.map(&ds.instances, |_, x| x.map_texts(|t| rs.apply(t)));
    let source_id = tag
        .base_code()
        .and_then(|code| code.parse().ok())
        .map(|base| DatasetId::new(base, DatasetKind::Claude));
    Dataset { lang: tag.clone(), split: ds.split, source_id, instances }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVector {
    pub line: usize,
    pub input: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorFailure {
    pub vector: TestVector,
    pub actual: String,
}

/// Parses `input<TAB>expected` lines.
pub fn parse_vectors(text: &str) -> Result<Vec<TestVector>, RuleError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (input, expected) =
            raw.split_once('\t').ok_or_else(|| syntax(i + 1, "expected `input<TAB>expected`"))?;
        out.push(TestVector { line: i + 1, input: input.to_string(), expected: expected.to_string() });
    }
    Ok(out)
}

/// Vectors shipped for a built-in ruleset or overlay.
pub fn builtin_vectors(name: &str) -> Result<Vec<TestVector>, RuleError> {
    let text = match name {
        "hr-ckm" => HR_CKM_VECTORS,
        "hr-ckm-final-t" => HR_CKM_FINAL_T_VECTORS,
        "hr-ckm-alt-endings" => HR_CKM_ALT_ENDINGS_VECTORS,
        other => return Err(RuleError::UnknownRuleset(other.to_string())),
    };
    parse_vectors(text)
}

pub fn check_vectors(rs: &RuleSet, vectors: &[TestVector]) -> Vec<VectorFailure> {
    vectors
        .iter()
        .filter_map(|v| {
            let actual = rs.apply(&v.input);
            (actual != v.expected).then(|| VectorFailure { vector: v.clone(), actual })
        })
        .collect()
}

/// Runs every shipped vector file against its ruleset (base plus overlay).
pub fn self_test() -> Result<Vec<(String, usize, Vec<VectorFailure>)>, RuleError> {
    let base = RuleSet::builtin("hr-ckm")?;
    let mut results = Vec::new();
    for name in ["hr-ckm", "hr-ckm-final-t", "hr-ckm-alt-endings"] {
        let mut rs = base.clone();
        if name != "hr-ckm" {
            rs.extend(&RuleSet::builtin(name)?)?;
        }
        let vectors = builtin_vectors(name)?;
        let failures = check_vectors(&rs, &vectors);
        results.push((name.to_string(), vectors.len(), failures));
    }
    Ok(results)
}

const GENERATION_PROMPT: &str = "{conversion_file}

This file contains Croatian to Chakavian dialect conversion grammar rules with examples.

Now here are some Croatian sentences and it's parallel Chakavian sentences:

{croatian_lyrics}
{chakavian_lyrics}.

Given these resources, I want you to translate the following Croatian sentences to Chakavian dialect.

{sentences}";

/// Fills the generation prompt for an external dialect generator.
/// Resource texts lose trailing newlines; sentences go one per line.
pub fn render_generation_prompt(
    conversion_rules: &str,
    croatian_lyrics: &str,
    chakavian_lyrics: &str,
    sentences: &[String],
) -> String {
    let mut out = String::new();
    let mut rest = GENERATION_PROMPT;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("template braces are balanced");
        match &rest[start + 1..end] {
            "conversion_file" => out.push_str(conversion_rules.trim_end_matches(['\n', '\r'])),
            "croatian_lyrics" => out.push_str(croatian_lyrics.trim_end_matches(['\n', '\r'])),
            "chakavian_lyrics" => out.push_str(chakavian_lyrics.trim_end_matches(['\n', '\r'])),
            "sentences" => out.push_str(&sentences.join("\n")),
            other => unreachable!("unknown slot {other}"),
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out.push('\n');
    out
}

/// File-reading wrapper around [`render_generation_prompt`].
pub fn emit_generation_prompt(
    rules_path: &Path,
    lyrics_src: &Path,
    lyrics_tgt: &Path,
    sentences: &[String],
) -> Result<String, RuleError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|source| RuleError::Io { path: p.display().to_string(), source });
    Ok(render_generation_prompt(&read(rules_path)?, &read(lyrics_src)?, &read(lyrics_tgt)?, sentences))
}
