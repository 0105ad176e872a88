//! Test predictor: answers every prompt with its gold label.
//!
//! Reads prompt JSONL on stdin and writes `{idx, predicted}` JSONL on
//! stdout. Prompts without a gold label get 0.

use std::io::{self, BufRead, BufWriter, Write};

use anyhow::{Context, Result};
use serde_json::{json, Value};

fn main() -> Result<()> {
    let stdin = io::stdin();
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).with_context(|| format!("prompt line {}", i + 1))?;
        let idx = v["idx"].as_u64().with_context(|| format!("prompt line {}: no idx", i + 1))?;
        let predicted = v["gold_label"].as_u64().unwrap_or(0);
        writeln!(out, "{}", json!({"idx": idx, "predicted": predicted}))?;
    }
    out.flush()?;
    Ok(())
}
