//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines appear in `cargo test` output; the process fails
//! if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use copa_dialect::augment::{reverse_dataset, reverse_instance};
use copa_dialect::combine::{builtin_recipe, resolve};
use copa_dialect::data::{CopaInstance, Dataset, Label, LanguageTag, Question, Split};
use copa_dialect::eval::{random_baseline, run_external, score, PredictionRecord};
use copa_dialect::prompt::{render_dataset, render_prompt, PromptOptions, PromptRecord, PromptTemplate};
use copa_dialect::rules::{builtin_vectors, RuleSet};
use copa_dialect::synthetic::{fixture_catalog, generate};
use copa_dialect::translit::{is_cyrillic, TransliterationTable};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Fixed-seed runner, so every run checks the same cases.
fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Croatian/Chakavian pairs written in the source rule listing, in the
/// separators it uses: `a = b`, `a=>b`, `a -> b -> c`, `a-b`.
fn listed_pairs(doc: &str) -> Result<HashSet<(String, String)>, String> {
    let start = doc.find("\\paragraph{Conversion rules}").ok_or("conversion rules paragraph not found")?;
    let body = &doc[start..];
    let begin = body.find("\\begin{verbatim}").ok_or("verbatim block not found")?;
    let end = body.find("\\end{verbatim}").ok_or("verbatim end not found")?;
    let mut pairs = HashSet::new();
    for line in body[begin..end].lines().skip(1) {
        let line = line.trim();
        if line.is_empty() || line.starts_with("Rule") {
            continue;
        }
        let line = line.strip_prefix("Examples:").unwrap_or(line);
        for piece in line.split(',') {
            let normalized = piece.replace("=>", "\u{1}").replace("->", "\u{1}").replace(['=', '-'], "\u{1}");
            let parts: Vec<&str> = normalized.split('\u{1}').map(str::trim).collect();
            for w in parts.windows(2) {
                if !w[0].is_empty() && !w[1].is_empty() {
                    pairs.insert((w[0].to_string(), w[1].to_string()));
                }
            }
        }
    }
    Ok(pairs)
}

fn criterion_1() -> Outcome {
    // The source document is not part of published checkouts; without it
    // only the vector files themselves are checked.
    let pairs = match fs::read_to_string(workspace().join("paper.md")) {
        Ok(doc) => Some(listed_pairs(&doc)?),
        Err(_) => None,
    };
    let base = RuleSet::builtin("hr-ckm").map_err(|e| e.to_string())?;
    let mut checked = 0;
    for name in ["hr-ckm", "hr-ckm-final-t", "hr-ckm-alt-endings"] {
        let mut rs = base.clone();
        if name != "hr-ckm" {
            rs.extend(&RuleSet::builtin(name).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        }
        for v in builtin_vectors(name).map_err(|e| e.to_string())? {
            let actual = rs.apply(&v.input);
            ensure(actual == v.expected, || format!("{name}: `{}` -> `{actual}`, expected `{}`", v.input, v.expected))?;
            if pairs.as_ref().is_none_or(|p| p.contains(&(v.input.clone(), v.expected.clone()))) {
                checked += 1;
            }
        }
    }
    ensure(checked >= 20, || format!("only {checked} vectors are verbatim listing pairs"))?;
    Ok(match pairs {
        Some(_) => format!("{checked} listed pairs bit-exact, each found in the source listing"),
        None => format!("{checked} vector pairs bit-exact (source listing not available for cross-check)"),
    })
}

fn criterion_2() -> Outcome {
    let x = CopaInstance::new(
        "I poured water on my sleeping friend.",
        "My friend awoke.",
        "My friend snored.",
        Question::Effect,
        Label::Choice1,
        0,
    );
    let r = reverse_instance(&x, 1).map_err(|e| e.to_string())?;
    let want = CopaInstance::new(
        "My friend awoke.",
        "I poured water on my sleeping friend.",
        "My friend snored.",
        Question::Cause,
        Label::Choice1,
        1,
    );
    ensure(r == want, || format!("got {}", r.to_json_line()))?;
    Ok("boxed example reproduced".into())
}

fn random_dataset(n: usize) -> impl Strategy<Value = Dataset> {
    let inst = ("[a-zA-Zčšž ]{1,20}", "[a-zA-Zčšž ]{1,20}", "[a-zA-Zčšž ]{1,20}", any::<bool>(), any::<bool>());
    prop::collection::vec(inst, n).prop_map(|xs| {
        let instances = xs
            .into_iter()
            .enumerate()
            .map(|(i, (p, a, b, cause, second))| {
                let q = if cause { Question::Cause } else { Question::Effect };
                let l = if second { Label::Choice2 } else { Label::Choice1 };
                CopaInstance::new(format!("p{p}"), format!("a{a}"), format!("b{b}"), q, l, i as u64)
            })
            .collect();
        Dataset::new(LanguageTag::new("sl").unwrap(), Split::Train, instances)
    })
}

fn criterion_3() -> Outcome {
    let mut total = 0usize;
    for n in [0usize, 1, 400] {
        let seen = std::cell::Cell::new(0usize);
        runner(4)
            .run(&random_dataset(n), |ds| {
                seen.set(seen.get() + ds.len());
                let rev = reverse_dataset(&ds).map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert_eq!(ds.len() + rev.len(), 2 * n);
                for (x, r) in ds.instances.iter().zip(&rev.instances) {
                    let back = reverse_instance(r, x.idx).map_err(|e| TestCaseError::fail(e.to_string()))?;
                    prop_assert_eq!(&back, x);
                }
                Ok(())
            })
            .map_err(|e| format!("N={n}: {e}"))?;
        total += seen.get();
    }
    ensure(total >= 1000, || format!("only {total} random instances"))?;
    Ok(format!("{total} random instances, N in {{0, 1, 400}}"))
}

fn criterion_4() -> Outcome {
    let sr = TransliterationTable::builtin("serbian").map_err(|e| e.to_string())?;
    let mk = TransliterationTable::builtin("macedonian").map_err(|e| e.to_string())?;
    let strategy = "[a-zA-Z0-9 .,;!?čćžšđČĆŽŠĐ\u{0400}-\u{045F}\u{0460}-\u{04FF}\u{0500}-\u{052F}\u{2DE0}-\u{2DFF}\u{A640}-\u{A69F}\u{1C80}-\u{1C88}ǵḱ]{0,40}";
    let mut r = runner(10_000);
    let counter = std::cell::Cell::new(0u32);
    r
        .run(&strategy, |s| {
            for table in [&sr, &mk] {
                let once = table.transliterate(&s);
                prop_assert!(!once.chars().any(is_cyrillic), "Cyrillic left in {:?}", once);
                prop_assert_eq!(table.transliterate(&once), once.clone());
                if !s.chars().any(is_cyrillic) {
                    prop_assert_eq!(&once, &s);
                }
            }
            if !s.chars().any(is_cyrillic) {
                counter.set(counter.get() + 1);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let latin_only = counter.get();
    // The mixed-script generator rarely yields Latin-only strings; check a
    // dedicated Latin corpus as well.
    let mut latin = runner(1000);
    latin
        .run(&"[a-zA-Z0-9 .,čćžšđǵḱ]{0,40}", |s| {
            prop_assert_eq!(sr.transliterate(&s), s.clone());
            prop_assert_eq!(mk.transliterate(&s), s);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("10000 mixed-script strings ({latin_only} Latin-only) plus 1000 Latin strings"))
}

fn criterion_5() -> Outcome {
    let cat = fixture_catalog(400, 5);
    let count = |name: &str| -> Result<usize, String> {
        let r = builtin_recipe(name).ok_or(format!("no recipe {name}"))?;
        resolve(&r, &cat).map(|d| d.len()).map_err(|e| e.to_string())
    };
    let o = count("o")?;
    ensure(o == 3600, || format!("o resolved to {o}"))?;
    let (otrsl, otrslc) = (count("otrsl")?, count("otrslc")?);
    ensure(otrslc > otrsl, || format!("otrslc {otrslc} <= otrsl {otrsl}"))?;
    Ok(format!("o = {o}, otrsl = {otrsl}, otrslc = {otrslc}"))
}

fn criterion_6() -> Outcome {
    let dir = workspace().join("crates/core/tests/golden");
    for name in ["cause", "effect"] {
        let input = fs::read_to_string(dir.join(format!("{name}.input.jsonl"))).map_err(|e| e.to_string())?;
        let expected = fs::read_to_string(dir.join(format!("{name}.txt"))).map_err(|e| e.to_string())?;
        let ds = Dataset::from_jsonl(&input, LanguageTag::new("en").unwrap(), Split::Validation).map_err(|e| e.to_string())?;
        let (target, exemplars) = ds.instances.split_last().ok_or("empty golden input")?;
        let got = render_prompt(target, exemplars, &PromptTemplate::default()).map_err(|e| e.to_string())?;
        ensure(got.text == expected, || format!("{name} golden differs:\n{}", got.text))?;
    }
    let ds = generate("en", "validation", Split::Validation, 500, 0, 6);
    let opts = PromptOptions { k: 4, seed: 6, mixed_class: false };
    let records = render_dataset(&ds, &ds, &opts, &PromptTemplate::default()).map_err(|e| e.to_string())?;
    ensure(records.len() == 500, || format!("{} prompts", records.len()))?;
    for (r, x) in records.iter().zip(&ds.instances) {
        let marker = format!("What is the correct {} ", x.question);
        let blocks: Vec<&str> = r.prompt.split("\n\n").collect();
        ensure(blocks.len() == 5, || format!("idx {}: {} blocks", r.idx, blocks.len()))?;
        for b in &blocks {
            ensure(b.contains(&marker), || format!("idx {}: exemplar of another class:\n{b}", r.idx))?;
        }
    }
    Ok("2 golden files byte-exact, 500 prompts same-class".into())
}

fn criterion_7() -> Outcome {
    let mut r = runner(100);
    let pair = prop::collection::vec((any::<bool>(), any::<bool>()), 1..300);
    r
        .run(&pair, |rows| {
            let gold = Dataset::new(
                LanguageTag::new("hr").unwrap(),
                Split::Validation,
                rows.iter()
                    .enumerate()
                    .map(|(i, (l, _))| {
                        let label = if *l { Label::Choice2 } else { Label::Choice1 };
                        CopaInstance::new("p", "a", "b", Question::Effect, label, i as u64)
                    })
                    .collect(),
            );
            let preds: Vec<PredictionRecord> =
                rows.iter().enumerate().map(|(i, (_, p))| PredictionRecord { idx: i as u64, predicted: u8::from(*p) }).collect();
            let report = score(&gold, &preds).map_err(|e| TestCaseError::fail(e.to_string()))?;
            // Brute-force count, independent of the scorer.
            let mut correct = 0u64;
            for (l, p) in &rows {
                if l == p {
                    correct += 1;
                }
            }
            let total = rows.len() as u64;
            let e = &report.entries[0];
            prop_assert_eq!((e.correct, e.total), (correct, total));
            let acc = e.accuracy().unwrap();
            prop_assert_eq!(*acc.numer() * total, correct * *acc.denom());
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let gold = Dataset::new(
        LanguageTag::new("hr").unwrap(),
        Split::Validation,
        (0..10_000u64)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Choice1 } else { Label::Choice2 };
                CopaInstance::new("p", "a", "b", Question::Cause, label, i)
            })
            .collect(),
    );
    let mut accs = Vec::new();
    for seed in [1u64, 2, 3, 4, 5] {
        let preds = random_baseline(&gold, seed);
        let e = score(&gold, &preds).map_err(|e| e.to_string())?.entries[0].clone();
        let acc = e.correct as f64 / e.total as f64;
        ensure((0.45..=0.55).contains(&acc), || format!("seed {seed}: random baseline {acc}"))?;
        accs.push(format!("{acc:.3}"));
    }
    Ok(format!("100 oracle pairs agree; random baseline {}", accs.join(" ")))
}

fn copa(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_copa")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("copa {} failed ({}):\n{}", args.join(" "), out.status, String::from_utf8_lossy(&out.stderr))
    })
}

fn pipeline(root: &Path) -> Result<(), String> {
    let p = |rel: &str| root.join(rel).to_string_lossy().into_owned();
    let cat = p("catalog");
    let eval = p("eval");
    copa(&["--seed", "42", "fixtures", "--kind", "sources", "-o", &cat])?;
    copa(&["--seed", "42", "fixtures", "--kind", "shared-task", "-o", &eval])?;
    let mut eval_files: Vec<String> = fs::read_dir(&eval)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path().to_string_lossy().into_owned())
        .collect();
    eval_files.sort();
    let mut args = vec!["--seed", "42", "validate"];
    args.extend(eval_files.iter().map(String::as_str));
    copa(&args)?;
    let block = |id: &str| format!("{cat}/{id}.jsonl");
    let cyrillic: Vec<String> = ["sr-train", "sr-tor-train", "mk-train", "sr-nllb", "mk-nllb"].iter().map(|i| block(i)).collect();
    let mut args = vec!["--seed", "42", "transliterate", "-o", &cat];
    args.extend(cyrillic.iter().map(String::as_str));
    copa(&args)?;
    copa(&["--seed", "42", "dialect-convert", "-o", &cat, &block("hr-train")])?;
    let to_reverse: Vec<String> = [
        "en-train", "hr-train", "sl-train", "sl-cer-train", "sr-train", "sr-tor-train", "mk-train", "sr-trans",
        "sr-tor-trans", "mk-trans", "hr-ckm-claude",
    ]
    .iter()
    .map(|i| block(i))
    .collect();
    let mut args = vec!["--seed", "42", "reverse", "-o", &cat];
    args.extend(to_reverse.iter().map(String::as_str));
    copa(&args)?;
    let mut args = vec!["--seed", "42", "validate", "--no-counts"];
    let mut blocks: Vec<String> =
        fs::read_dir(&cat).map_err(|e| e.to_string())?.map(|e| e.unwrap().path().to_string_lossy().into_owned()).collect();
    blocks.sort();
    args.extend(blocks.iter().map(String::as_str));
    copa(&args)?;
    for recipe in ["otrsl", "otrsl_mix"] {
        copa(&["--seed", "42", "combine", "--recipe", recipe, "--catalog", &cat, "-o", &p("combined")])?;
    }
    let test = format!("{eval}/hr-ckm.test.jsonl");
    copa(&["--seed", "42", "prompt", &test, "--pool", &format!("{eval}/hr.validation.jsonl"), "--k", "4", "-o", &p("prompts")])?;
    copa(&["--seed", "42", "score", &test, "--baseline", "overlap", "-o", &p("predictions"), "--report", &p("reports/overlap.json")])?;
    copa(&[
        "--seed",
        "42",
        "run-external",
        &p("prompts/hr-ckm.test.prompts.jsonl"),
        "--out",
        &p("predictions/echo.jsonl"),
        "--gold",
        &test,
        "--",
        env!("CARGO_BIN_EXE_copa-echo-predictor"),
    ])?;
    Ok(())
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a)?;
    pipeline(&b)?;
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    ensure(sa.keys().eq(sb.keys()), || "different file sets".into())?;
    for (path, bytes) in &sa {
        ensure(&sb[path] == bytes, || format!("{} differs between runs", path.display()))?;
    }
    let combined = fs::read_to_string(a.join("combined/otrsl.jsonl")).map_err(|e| e.to_string())?;
    Ok(format!("{} files identical; otrsl has {} instances", sa.len(), combined.lines().count()))
}

fn criterion_9() -> Outcome {
    let ds = generate("hr", "test", Split::Test, 500, 0, 9);
    let records: Vec<PromptRecord> = ds
        .instances
        .iter()
        .map(|x| PromptRecord { idx: x.idx, prompt: x.premise.clone(), gold_label: x.label.map(|l| l.index()) })
        .collect();
    let cmd = vec![env!("CARGO_BIN_EXE_copa-echo-predictor").to_string()];
    let preds = run_external(&cmd, &records).map_err(|e| e.to_string())?;
    let report = score(&ds, &preds).map_err(|e| e.to_string())?;
    let e = &report.entries[0];
    ensure(e.correct == e.total && e.total == 500, || format!("echo predictor {}/{}", e.correct, e.total))?;
    Ok("echo predictor scores 1.000; LLM accuracies of the model tables are out of scope at desk scale".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "rule-listing fidelity", Duration::from_secs(1), criterion_1),
        (2, "reverse-augmentation fidelity", Duration::from_secs(1), criterion_2),
        (3, "doubling law", Duration::from_secs(10), criterion_3),
        (4, "transliteration safety", Duration::from_secs(10), criterion_4),
        (5, "recipe arithmetic", Duration::from_secs(5), criterion_5),
        (6, "prompt golden files", Duration::from_secs(5), criterion_6),
        (7, "scoring oracle", Duration::from_secs(10), criterion_7),
        (8, "end-to-end determinism", Duration::from_secs(30), criterion_8),
        (9, "external predictor contract", Duration::from_secs(10), criterion_9),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) if elapsed <= limit => {
                println!("criterion {n} {name}: PASS ({secs:.2}s, limit {}s) {detail}", limit.as_secs());
            }
            Ok(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({secs:.2}s exceeds {}s) {detail}", limit.as_secs());
            }
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({secs:.2}s) {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
