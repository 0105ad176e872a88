//! Cyrillic to Latin transliteration driven by plain-text tables.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;
use unicode_normalization::char::decompose_canonical;

use crate::data::Dataset;
use crate::exec::Execution;

/// Serbian Cyrillic alphabet, lowercase.
pub const SERBIAN_ALPHABET: &str = "абвгдђежзијклљмнњопрстћуфхцчџш";
/// Macedonian Cyrillic alphabet, lowercase.
pub const MACEDONIAN_ALPHABET: &str = "абвгдѓежзѕијклљмнњопрстќуфхцчџш";

const SERBIAN_TABLE: &str = include_str!("../data/tables/serbian.tsv");
const MACEDONIAN_TABLE: &str = include_str!("../data/tables/macedonian.tsv");

/// Substituted for Cyrillic codepoints the table cannot map.
pub const UNMAPPED: char = '\u{FFFD}';

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// True for codepoints in any of the Cyrillic Unicode blocks.
pub fn is_cyrillic(c: char) -> bool {
    matches!(c as u32,
        0x0400..=0x04FF | 0x0500..=0x052F | 0x1C80..=0x1C8F | 0x2DE0..=0x2DFF | 0xA640..=0xA69F)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransliterationTable {
    name: String,
    entries: Vec<(String, String)>,
    index: HashMap<String, String>,
    longest_source: usize,
}

impl TransliterationTable {
    /// Builds a table from `(source, target)` pairs. Sources must be one or
    /// two Cyrillic codepoints and unique; targets one or two non-Cyrillic
    /// codepoints.
    pub fn new(name: &str, entries: Vec<(String, String)>) -> Result<Self, TableError> {
        Self::build(name, entries.into_iter().map(|e| (0, e)).collect())
    }

    fn build(name: &str, numbered: Vec<(usize, (String, String))>) -> Result<Self, TableError> {
        let mut index = HashMap::new();
        let mut entries = Vec::with_capacity(numbered.len());
        for (line, (source, target)) in numbered {
            let err = |message: String| TableError::Syntax { line, message };
            let n = source.chars().count();
            if n == 0 || n > 2 || !source.chars().all(is_cyrillic) {
                return Err(err(format!("source `{source}` must be one or two Cyrillic codepoints")));
            }
            let m = target.chars().count();
            if m == 0 || m > 2 || target.chars().any(is_cyrillic) {
                return Err(err(format!("target `{target}` must be one or two non-Cyrillic codepoints")));
            }
            if index.insert(source.clone(), target.clone()).is_some() {
                return Err(err(format!("duplicate source `{source}`")));
            }
            entries.push((source, target));
        }
        // Longer sources are tried first.
        entries.sort_by_key(|(s, _)| std::cmp::Reverse(s.chars().count()));
        let longest_source = entries.iter().map(|(s, _)| s.chars().count()).max().unwrap_or(1);
        Ok(TransliterationTable { name: name.to_string(), entries, index, longest_source })
    }

    /// Parses `source<TAB>target` lines; `#` starts a comment line.
    pub fn parse(name: &str, text: &str) -> Result<Self, TableError> {
        let mut numbered = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (source, target) = line.split_once('\t').ok_or_else(|| TableError::Syntax {
                line: i + 1,
                message: "expected `source<TAB>target`".into(),
            })?;
            if target.contains('\t') {
                return Err(TableError::Syntax { line: i + 1, message: "too many columns".into() });
            }
            numbered.push((i + 1, (source.to_string(), target.to_string())));
        }
        Self::build(name, numbered)
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = fs::read_to_string(path)
            .map_err(|source| TableError::Io { path: path.display().to_string(), source })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        Self::parse(name, &text)
    }

    /// Shipped tables: `serbian` (`sr`) and `macedonian` (`mk`).
    pub fn builtin(name: &str) -> Result<Self, TableError> {
        match name {
            "serbian" | "sr" => Self::parse("serbian", SERBIAN_TABLE),
            "macedonian" | "mk" => Self::parse("macedonian", MACEDONIAN_TABLE),
            other => Err(TableError::UnknownTable(other.to_string())),
        }
    }

    /// A built-in table name, or else a path to a table file.
    pub fn resolve(name_or_path: &str) -> Result<Self, TableError> {
        match Self::builtin(name_or_path) {
            Err(TableError::UnknownTable(_)) => Self::load(Path::new(name_or_path)),
            other => other,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Letters of `alphabet` that have no entry.
    pub fn missing_letters(&self, alphabet: &str) -> Vec<char> {
        alphabet.chars().filter(|c| !self.index.contains_key(&c.to_string())).collect()
    }

    /// Looks up `source`, falling back to its lowercase form. Returns the
    /// target and whether the source was uppercase.
    fn lookup(&self, source: &str) -> Option<(&str, bool)> {
        if let Some(t) = self.index.get(source) {
            return Some((t, false));
        }
        let lower: String = source.chars().flat_map(char::to_lowercase).collect();
        if lower == source {
            return None;
        }
        let upper = source.chars().next().is_some_and(char::is_uppercase);
        self.index.get(&lower).map(|t| (t.as_str(), upper))
    }

    pub fn transliterate(&self, text: &str) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while i < chars.len() {
            if !is_cyrillic(chars[i]) {
                out.push(chars[i]);
                i += 1;
                continue;
            }
            let mut matched = false;
            for len in (1..=self.longest_source.min(chars.len() - i)).rev() {
                let source: String = chars[i..i + len].iter().collect();
                if let Some((target, upper)) = self.lookup(&source) {
                    let next = chars.get(i + len).copied();
                    push_cased(&mut out, target, upper, next);
                    i += len;
                    matched = true;
                    break;
                }
            }
            if !matched {
                self.push_fallback(&mut out, chars[i], chars.get(i + 1).copied());
                i += 1;
            }
        }
        out
    }

    /// Precomposed letters outside the table (ѐ, ѝ, ӂ) are decomposed and
    /// their base letter mapped; combining marks outside the Cyrillic
    /// blocks are kept. Anything else becomes [`UNMAPPED`].
    fn push_fallback(&self, out: &mut String, c: char, next: Option<char>) {
        let mut parts = Vec::with_capacity(3);
        decompose_canonical(c, |p| parts.push(p));
        if parts.len() > 1 {
            if let Some((target, upper)) = self.lookup(&parts[0].to_string()) {
                push_cased(out, target, upper, next);
                out.extend(parts[1..].iter().filter(|p| !is_cyrillic(**p)));
                return;
            }
        }
        if !(0x0483..=0x0489).contains(&(c as u32)) && !(0x2DE0..=0x2DFF).contains(&(c as u32)) {
            out.push(UNMAPPED);
        }
    }
}

/// Writes `target` in the case of its source. A digraph from an uppercase
/// letter is fully uppercase only when the next source letter is uppercase.
fn push_cased(out: &mut String, target: &str, upper: bool, next: Option<char>) {
    if !upper {
        out.push_str(target);
        return;
    }
    if target.chars().count() == 1 || next.is_some_and(char::is_uppercase) {
        out.extend(target.chars().flat_map(char::to_uppercase));
    } else {
        let mut cs = target.chars();
        if let Some(first) = cs.next() {
            out.extend(first.to_uppercase());
            out.extend(cs);
        }
    }
}

pub fn transliterate_text(text: &str, table: &TransliterationTable) -> String {
    table.transliterate(text)
}

pub fn transliterate_dataset(ds: &Dataset, table: &TransliterationTable) -> Dataset {
    transliterate_dataset_with(ds, table, Execution::default())
}

/// Transliterates every text field; the language tag and source id gain
/// the `-trans` marker.
pub fn transliterate_dataset_with(ds: &Dataset, table: &TransliterationTable, exec: Execution) -> Dataset {
    let instances = exec.map(&ds.instances, |_, x| x.map_texts(|t| table.transliterate(t)));
    Dataset {
        lang: ds.lang.transliterated(),
        split: ds.split,
        source_id: ds.source_id.as_ref().map(|id| id.transliterated()),
        instances,
    }
}
