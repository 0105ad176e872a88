use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use copa_dialect::combine::{builtin_recipe, Catalog, Step};

fn copa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copa")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = copa(args);
    assert!(out.status.success(), "copa {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("st");
    ok(&["fixtures", "--kind", "shared-task", "-o", path(&dir)]);
    let hr = dir.join("hr.train.jsonl");
    assert_eq!(copa(&["validate", path(&hr)]).status.code(), Some(0));

    let text = fs::read_to_string(&hr).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[3] = lines[3].replacen("\"label\":0", "\"label\":7", 1).replacen("\"label\":1", "\"label\":7", 1);
    fs::write(&hr, lines.join("\n") + "\n").unwrap();
    let out = copa(&["validate", path(&hr)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    // A count mismatch against the release table is a violation.
    let short = dir.join("sl.validation.jsonl");
    let text = fs::read_to_string(&short).unwrap();
    fs::write(&short, text.lines().take(99).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let out = copa(&["--format", "json", "validate", path(&short)]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 1);
    assert_eq!(copa(&["validate", "--no-counts", path(&short)]).status.code(), Some(0));

    assert_eq!(copa(&["validate"]).status.code(), Some(2));
    assert_eq!(copa(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn self_test_and_text() {
    ok(&["dialect-convert", "--self-test"]);
    let out = ok(&["dialect-convert", "--text", "Rekao sam da je kruh suh."]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "Reka san da je kruv suv.\n");
    assert_eq!(copa(&["dialect-convert"]).status.code(), Some(2));
}

#[test]
fn combine_matches_recipe_sum() {
    let tmp = tempfile::tempdir().unwrap();
    let cat = tmp.path().join("cat");
    ok(&["fixtures", "--kind", "catalog", "--n", "40", "-o", path(&cat)]);
    let out_dir = tmp.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_copa"))
        .args(["combine", "--recipe", "otrsl", "-o", path(&out_dir)])
        .env("COPA_CATALOG", &cat)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let catalog = Catalog::from_dir(&cat).unwrap();
    let expected: usize = builtin_recipe("otrsl")
        .unwrap()
        .steps
        .iter()
        .map(|s| match s {
            Step::Include { id, repeat } => repeat * catalog.get(id).unwrap().len(),
            Step::Mix { .. } => 40,
        })
        .sum();
    let merged = fs::read_to_string(out_dir.join("otrsl.jsonl")).unwrap();
    assert_eq!(merged.lines().count(), expected);

    let missing = tmp.path().join("empty");
    fs::create_dir_all(&missing).unwrap();
    assert_eq!(copa(&["combine", "--recipe", "o", "--catalog", path(&missing), "-o", path(&out_dir)]).status.code(), Some(1));
}

#[test]
fn prompt_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("st");
    ok(&["fixtures", "--kind", "shared-task", "-o", path(&dir)]);
    let input = dir.join("en.validation.jsonl");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["prompt", path(&input), "--k", "4", "--seed", "1", "-o", path(&a)]);
    ok(&["prompt", path(&input), "--k", "4", "--seed", "1", "-o", path(&b)]);
    let name = "en.validation.prompts.jsonl";
    let first = fs::read(a.join(name)).unwrap();
    assert_eq!(first, fs::read(b.join(name)).unwrap());
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 100);

    let c = tmp.path().join("c");
    ok(&["prompt", path(&input), "--k", "4", "--seed", "2", "-o", path(&c)]);
    assert_ne!(first, fs::read(c.join(name)).unwrap());
}

#[test]
fn mix_writes_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    ok(&["fixtures", "--n", "30", "-o", path(&src)]);
    let out = tmp.path().join("mix");
    let files: Vec<String> = ["en-train", "hr-train", "sl-train"].iter().map(|i| path(&src.join(format!("{i}.jsonl"))).to_string()).collect();
    let mut args = vec!["--seed", "3", "mix", "-o", path(&out)];
    args.extend(files.iter().map(String::as_str));
    ok(&args);
    assert_eq!(fs::read_to_string(out.join("mix.jsonl")).unwrap().lines().count(), 30);
    let prov = fs::read_to_string(out.join("mix.provenance.jsonl")).unwrap();
    for line in prov.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let langs = [&v["premise_lang"], &v["choice1_lang"], &v["choice2_lang"]];
        assert!(langs[0] != langs[1] && langs[1] != langs[2] && langs[0] != langs[2], "{line}");
    }
    assert_eq!(copa(&["mix", "-o", path(&out), &files[0], &files[1]]).status.code(), Some(2));
}

#[test]
fn score_and_external_predictors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("st");
    ok(&["fixtures", "--kind", "shared-task", "-o", path(&dir)]);
    let gold = dir.join("hr.validation.jsonl");
    let prompts = tmp.path().join("prompts");
    ok(&["prompt", path(&gold), "-o", path(&prompts)]);
    let prompt_file = prompts.join("hr.validation.prompts.jsonl");
    let preds = tmp.path().join("echo.jsonl");
    let out = ok(&[
        "--format",
        "json",
        "run-external",
        path(&prompt_file),
        "--out",
        path(&preds),
        "--gold",
        path(&gold),
        "--",
        env!("CARGO_BIN_EXE_copa-echo-predictor"),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["average"], "1.000");

    let out = ok(&["--format", "json", "score", path(&gold), "--predictions", path(&preds)]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["languages"][0]["correct"], 100);

    ok(&["score", path(&gold), "--baseline", "random", "--seed", "4"]);
    ok(&["score", path(&gold), "--baseline", "overlap"]);

    let crash = copa(&["run-external", path(&prompt_file), "--out", path(&preds), "--", "sh", "-c", "exit 5"]);
    assert_eq!(crash.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&crash.stderr).contains('5'));
}
