//! `copa`: command-line front end for the dialect COPA pipeline.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use copa_dialect::augment::{mix_crosslingual_with, reverse_dataset, upsample, AlignedCorpus};
use copa_dialect::combine::{builtin_recipes, resolve_recipe, resolve_with, Catalog};
use copa_dialect::data::{
    load_dataset, validate, write_dataset, Dataset, DatasetId, ExpectedCounts, LanguageTag, Split,
};
use copa_dialect::eval::{
    overlap_baseline, parse_predictions, predictions_to_jsonl, random_baseline_with, run_external, score,
    AccuracyReport,
};
use copa_dialect::exec::Execution;
use copa_dialect::prompt::{read_prompts, render_dataset_with, write_prompts, PromptOptions, PromptTemplate};
use copa_dialect::rules::{apply_rules, convert_dataset_with, emit_generation_prompt, self_test, RuleSet, DEFAULT_TAG};
use copa_dialect::seed;
use copa_dialect::synthetic::{fixture_catalog, shared_task_fixture, source_blocks};
use copa_dialect::translit::{transliterate_dataset_with, TransliterationTable};

#[derive(Parser)]
#[command(name = "copa", version, about = "Build, augment, prompt and score dialectal COPA data")]
struct Cli {
    /// Global seed; each subcommand derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Clone)]
struct InputOpts {
    /// Language tag of the inputs; inferred from file names by default.
    #[arg(long)]
    lang: Option<String>,
    /// Split of the inputs; inferred from file names by default.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check JSONL files against the instance schema and release counts.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Skip the per-(language, split) count check.
        #[arg(long)]
        no_counts: bool,
    },
    /// Cyrillic to Latin transliteration.
    Transliterate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Built-in table (`serbian`, `macedonian`) or table file; chosen by language by default.
        #[arg(long)]
        table: Option<String>,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Rule-based Croatian to Chakavian conversion.
    DialectConvert {
        paths: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Built-in ruleset name or rules file.
        #[arg(long, default_value = "hr-ckm")]
        rules: String,
        /// Extra rule files layered on top, in order.
        #[arg(long)]
        overlay: Vec<String>,
        #[arg(long, default_value = DEFAULT_TAG)]
        tag: String,
        /// Also write `<name>.trace.jsonl` with every rewrite.
        #[arg(long)]
        trace: bool,
        /// Check the shipped test vectors and exit.
        #[arg(long)]
        self_test: bool,
        /// Convert this text and print the result.
        #[arg(long)]
        text: Option<String>,
        #[arg(long, short)]
        out_dir: Option<PathBuf>,
    },
    /// Reverse-augmentation: premise and correct choice swap, question flips.
    Reverse {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Cross-lingual mixing over three or more aligned files.
    Mix {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Output base name.
        #[arg(long, default_value = "mix")]
        name: String,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Repeat a block `factor` times.
    Upsample {
        path: PathBuf,
        #[command(flatten)]
        input: InputOpts,
        #[arg(long)]
        factor: usize,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Assemble a training set from a recipe and a catalog directory.
    Combine {
        /// Built-in recipe name or recipe file.
        #[arg(long, required_unless_present = "list")]
        recipe: Option<String>,
        /// Directory of `<id>.jsonl` blocks.
        #[arg(long, env = "COPA_CATALOG", required_unless_present = "list")]
        catalog: Option<PathBuf>,
        #[arg(long, short, required_unless_present = "list")]
        out_dir: Option<PathBuf>,
        /// List the built-in recipes.
        #[arg(long)]
        list: bool,
    },
    /// Render k-shot prompts for every instance of a file.
    Prompt {
        path: PathBuf,
        #[command(flatten)]
        input: InputOpts,
        /// Exemplar pool; defaults to the input itself.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Interleave cause and effect exemplars.
        #[arg(long)]
        mixed_class: bool,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Score predictions, or a baseline, against gold files.
    Score {
        #[arg(required = true)]
        gold: Vec<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Prediction files, one per gold file.
        #[arg(long, num_args = 1.., conflicts_with = "baseline")]
        predictions: Vec<PathBuf>,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Write baseline predictions here.
        #[arg(long, short)]
        out_dir: Option<PathBuf>,
        /// Write the JSON report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Send a prompt file through an external predictor.
    RunExternal {
        prompts: PathBuf,
        /// Predictions file to write.
        #[arg(long)]
        out: PathBuf,
        /// Score the predictions against this gold file.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[command(flatten)]
        input: InputOpts,
        /// Predictor program and arguments.
        #[arg(last = true, required = true)]
        command: Vec<String>,
    },
    /// Print the generation prompt for an external dialect generator.
    EmitPrompt {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        lyrics_src: PathBuf,
        #[arg(long)]
        lyrics_tgt: PathBuf,
        /// Sentences to convert, one per line.
        #[arg(long)]
        sentences: PathBuf,
    },
    /// Write deterministic fixture data.
    Fixtures {
        #[arg(long, value_enum, default_value_t = FixtureKind::Sources)]
        kind: FixtureKind,
        /// Instances per training block.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Random,
    Overlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// Raw blocks: `<lang>-train`, `en-gpt4` and the `-nllb` blocks.
    Sources,
    /// Every block the built-in recipes reference.
    Catalog,
    /// One file per (language, split) of the release, sized to its counts.
    SharedTask,
}

/// Invalid combinations of arguments that clap cannot express.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Outcome of a subcommand that ran to completion.
enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

struct Ctx {
    seed: Option<u64>,
    format: Format,
    exec: Execution,
}

impl Ctx {
    fn seed(&self, label: &str) -> u64 {
        seed::derive(self.seed.unwrap_or(0), label)
    }
}

fn run(cli: Cli) -> Result<Status> {
    let ctx = Ctx {
        seed: cli.seed,
        format: cli.format,
        exec: if cli.sequential { Execution::Sequential } else { Execution::default() },
    };
    match cli.command {
        Command::Validate { paths, input, no_counts } => cmd_validate(&ctx, &paths, &input, no_counts),
        Command::Transliterate { paths, input, table, out_dir } => {
            cmd_transliterate(&ctx, &paths, &input, table.as_deref(), &out_dir)
        }
        Command::DialectConvert { paths, input, rules, overlay, tag, trace, self_test, text, out_dir } => {
            cmd_convert(&ctx, &paths, &input, &rules, &overlay, &tag, trace, self_test, text, out_dir)
        }
        Command::Reverse { paths, input, out_dir } => {
            for p in &paths {
                let ds = load_input(p, &input)?;
                let rev = reverse_dataset(&ds).with_context(|| p.display().to_string())?;
                let name = match &rev.source_id {
                    Some(_) if rev.split == Split::Train => file_name(&rev),
                    _ => format!("{}-reverse.{}.jsonl", rev.lang, rev.split),
                };
                save(&rev, &out_dir, &name)?;
            }
            Ok(Status::Ok)
        }
        Command::Mix { paths, input, name, out_dir } => {
            if paths.len() < 3 {
                return Err(usage("mix needs at least three aligned files"));
            }
            let sets = paths.iter().map(|p| load_input(p, &input)).collect::<Result<Vec<_>>>()?;
            let corpus = AlignedCorpus::new(sets)?;
            let out = mix_crosslingual_with(&corpus, ctx.seed("mix"), ctx.exec);
            save(&out.dataset, &out_dir, &format!("{name}.jsonl"))?;
            let mut sidecar = String::new();
            for p in &out.provenance {
                sidecar.push_str(&serde_json::to_string(p)?);
                sidecar.push('\n');
            }
            write_text(&out_dir.join(format!("{name}.provenance.jsonl")), &sidecar)?;
            Ok(Status::Ok)
        }
        Command::Upsample { path, input, factor, out_dir } => {
            if factor == 0 {
                return Err(usage("--factor must be at least 1"));
            }
            let ds = load_input(&path, &input)?;
            let up = upsample(&ds, factor)?;
            let stem = file_name(&ds);
            let stem = stem.trim_end_matches(".jsonl");
            save(&up, &out_dir, &format!("{stem}.x{factor}.jsonl"))?;
            Ok(Status::Ok)
        }
        Command::Combine { recipe, catalog, out_dir, list } => {
            if list {
                for r in builtin_recipes() {
                    println!("{:<24} {} steps", r.name, r.steps.len());
                }
                return Ok(Status::Ok);
            }
            let (recipe, catalog, out_dir) = (recipe.unwrap(), catalog.unwrap(), out_dir.unwrap());
            let mut r = resolve_recipe(&recipe)?;
            if ctx.seed.is_some() {
                r = r.reseeded(ctx.seed("combine"));
            }
            let cat = Catalog::from_dir(&catalog)?;
            let ds = resolve_with(&r, &cat, ctx.exec)?;
            save(&ds, &out_dir, &format!("{}.jsonl", r.name))?;
            Ok(Status::Ok)
        }
        Command::Prompt { path, input, pool, k, mixed_class, template, out_dir } => {
            let ds = load_input(&path, &input)?;
            let pool_ds = match &pool {
                Some(p) => load_input(p, &InputOpts { lang: None, split: None })?,
                None => ds.clone(),
            };
            let template = match &template {
                Some(t) => PromptTemplate::load(t)?,
                None => PromptTemplate::default(),
            };
            let opts = PromptOptions { k, seed: ctx.seed("prompt"), mixed_class };
            let records = render_dataset_with(&ds, &pool_ds, &opts, &template, ctx.exec)?;
            fs::create_dir_all(&out_dir)?;
            let stem = file_name(&ds);
            let out = out_dir.join(format!("{}.prompts.jsonl", stem.trim_end_matches(".jsonl")));
            write_prompts(&records, &out)?;
            eprintln!("wrote {} ({} prompts)", out.display(), records.len());
            Ok(Status::Ok)
        }
        Command::Score { gold, input, predictions, baseline, out_dir, report } => {
            cmd_score(&ctx, &gold, &input, &predictions, baseline, out_dir.as_deref(), report.as_deref())
        }
        Command::RunExternal { prompts, out, gold, input, command } => {
            let records = read_prompts(&prompts)?;
            let preds = run_external(&command, &records)?;
            write_text(&out, &predictions_to_jsonl(&preds))?;
            if let Some(g) = gold {
                let ds = load_input(&g, &input)?;
                print_report(&ctx, &score(&ds, &preds)?)?;
            }
            Ok(Status::Ok)
        }
        Command::EmitPrompt { rules, lyrics_src, lyrics_tgt, sentences } => {
            let text = fs::read_to_string(&sentences).with_context(|| sentences.display().to_string())?;
            let lines: Vec<String> = text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
            print!("{}", emit_generation_prompt(&rules, &lyrics_src, &lyrics_tgt, &lines)?);
            Ok(Status::Ok)
        }
        Command::Fixtures { kind, n, out_dir } => {
            let s = ctx.seed("fixtures");
            let sets = match kind {
                FixtureKind::Sources => source_blocks(n, s),
                FixtureKind::Catalog => {
                    let cat = fixture_catalog(n, s);
                    cat.ids().map(|id| cat.get(id).expect("listed id").clone()).collect()
                }
                FixtureKind::SharedTask => shared_task_fixture(s),
            };
            for ds in &sets {
                save(ds, &out_dir, &file_name(ds))?;
            }
            Ok(Status::Ok)
        }
    }
}

fn cmd_validate(ctx: &Ctx, paths: &[PathBuf], input: &InputOpts, no_counts: bool) -> Result<Status> {
    let mut sets = Vec::new();
    let mut load_failed = false;
    for p in paths {
        match load_input(p, input) {
            Ok(ds) => sets.push(ds),
            Err(e) if e.is::<Usage>() => return Err(e),
            Err(e) => {
                eprintln!("{}: {e:#}", p.display());
                load_failed = true;
            }
        }
    }
    let expected = ExpectedCounts::shared_task();
    let report = validate(&sets, (!no_counts).then_some(&expected));
    match ctx.format {
        Format::Table => print!("{}", report.to_table()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(if report.is_clean() && !load_failed { Status::Ok } else { Status::Failed })
}

fn cmd_transliterate(
    ctx: &Ctx,
    paths: &[PathBuf],
    input: &InputOpts,
    table: Option<&str>,
    out_dir: &Path,
) -> Result<Status> {
    let fixed = table.map(TransliterationTable::resolve).transpose()?;
    for p in paths {
        let ds = load_input(p, input)?;
        let table = match &fixed {
            Some(t) => t.clone(),
            None => match ds.lang.base_code() {
                Some(c) if c.starts_with("sr") => TransliterationTable::builtin("serbian")?,
                Some(c) if c.starts_with("mk") => TransliterationTable::builtin("macedonian")?,
                _ => return Err(usage(format!("{}: no default table for `{}`; pass --table", p.display(), ds.lang))),
            },
        };
        let out = transliterate_dataset_with(&ds, &table, ctx.exec);
        save(&out, out_dir, &file_name(&out))?;
    }
    Ok(Status::Ok)
}

#[allow(clippy::too_many_arguments)]
fn cmd_convert(
    ctx: &Ctx,
    paths: &[PathBuf],
    input: &InputOpts,
    rules: &str,
    overlays: &[String],
    tag: &str,
    trace: bool,
    self_test_only: bool,
    text: Option<String>,
    out_dir: Option<PathBuf>,
) -> Result<Status> {
    if self_test_only {
        let mut ok = true;
        for (name, total, failures) in self_test()? {
            println!("{name}: {}/{total} vectors pass", total - failures.len());
            for f in &failures {
                println!("  line {}: `{}` -> `{}`, expected `{}`", f.vector.line, f.vector.input, f.actual, f.vector.expected);
            }
            ok &= failures.is_empty();
        }
        return Ok(if ok { Status::Ok } else { Status::Failed });
    }
    let mut rs = RuleSet::resolve(rules)?;
    for o in overlays {
        rs.extend(&RuleSet::resolve(o)?)?;
    }
    if let Some(t) = text {
        let (out, steps) = apply_rules(&t, &rs, trace);
        println!("{out}");
        if let Some(steps) = steps {
            for s in steps.steps {
                println!("  word {} {} `{}` -> `{}` (line {}): {} -> {}", s.word, s.kind, s.pattern, s.replacement, s.line, s.before, s.after);
            }
        }
        return Ok(Status::Ok);
    }
    if paths.is_empty() {
        return Err(usage("dialect-convert needs input files, --text or --self-test"));
    }
    let out_dir = out_dir.ok_or_else(|| usage("dialect-convert needs --out-dir"))?;
    let tag: LanguageTag = tag.parse().map_err(|e| usage(format!("--tag: {e}")))?;
    for p in paths {
        let ds = load_input(p, input)?;
        let out = convert_dataset_with(&ds, &rs, &tag, ctx.exec);
        let name = file_name(&out);
        save(&out, &out_dir, &name)?;
        if trace {
            let mut lines = String::new();
            for x in &ds.instances {
                for (field, t) in ["premise", "choice1", "choice2"].iter().zip(x.texts()) {
                    let (_, tr) = rs.apply_traced(t);
                    if !tr.steps.is_empty() {
                        lines.push_str(&serde_json::to_string(&json!({"idx": x.idx, "field": field, "steps": tr.steps}))?);
                        lines.push('\n');
                    }
                }
            }
            write_text(&out_dir.join(format!("{}.trace.jsonl", name.trim_end_matches(".jsonl"))), &lines)?;
        }
    }
    Ok(Status::Ok)
}

fn cmd_score(
    ctx: &Ctx,
    gold: &[PathBuf],
    input: &InputOpts,
    predictions: &[PathBuf],
    baseline: Option<Baseline>,
    out_dir: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<Status> {
    if baseline.is_none() && predictions.len() != gold.len() {
        return Err(usage(format!("{} gold files but {} prediction files", gold.len(), predictions.len())));
    }
    let mut reports = Vec::new();
    for (i, g) in gold.iter().enumerate() {
        let ds = load_input(g, input)?;
        let preds = match baseline {
            Some(Baseline::Random) => random_baseline_with(&ds, seed::keyed(ctx.seed("score"), i as u64), ctx.exec),
            Some(Baseline::Overlap) => overlap_baseline(&ds),
            None => {
                let p = &predictions[i];
                let text = fs::read_to_string(p).with_context(|| p.display().to_string())?;
                parse_predictions(&text).with_context(|| p.display().to_string())?
            }
        };
        if let (Some(dir), Some(b)) = (out_dir, baseline) {
            let kind = match b {
                Baseline::Random => "random",
                Baseline::Overlap => "overlap",
            };
            let stem = file_name(&ds);
            let name = format!("{}.{kind}.predictions.jsonl", stem.trim_end_matches(".jsonl"));
            fs::create_dir_all(dir)?;
            write_text(&dir.join(name), &predictions_to_jsonl(&preds))?;
        }
        reports.push(score(&ds, &preds).with_context(|| g.display().to_string())?);
    }
    let report = AccuracyReport::merge(reports);
    if let Some(p) = report_path {
        write_text(p, &format!("{}\n", serde_json::to_string_pretty(&report.to_json())?))?;
    }
    print_report(ctx, &report)?;
    Ok(Status::Ok)
}

fn print_report(ctx: &Ctx, report: &AccuracyReport) -> Result<()> {
    match ctx.format {
        Format::Table => print!("{}", report.to_table()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report.to_json())?),
    }
    Ok(())
}

/// Language, split and id from a file name: `<lang>.<split>.jsonl`,
/// `<id>.jsonl` (a training block) or `<lang>-<split>.jsonl`.
fn infer(path: &Path) -> Option<(LanguageTag, Split, Option<DatasetId>)> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".jsonl").unwrap_or(name);
    if let Some((lang, split)) = stem.rsplit_once('.') {
        return Some((lang.parse().ok()?, split.parse().ok()?, None));
    }
    if let Ok(id) = stem.parse::<DatasetId>() {
        return Some((id.language(), Split::Train, Some(id)));
    }
    let (lang, split) = stem.rsplit_once('-')?;
    Some((lang.parse().ok()?, split.parse().ok()?, None))
}

fn load_input(path: &Path, opts: &InputOpts) -> Result<Dataset> {
    let inferred = infer(path);
    let lang = match (&opts.lang, &inferred) {
        (Some(l), _) => l.parse::<LanguageTag>().map_err(|e| usage(format!("--lang: {e}")))?,
        (None, Some((l, _, _))) => l.clone(),
        (None, None) => return Err(usage(format!("{}: cannot infer the language; pass --lang", path.display()))),
    };
    let split = match (&opts.split, &inferred) {
        (Some(s), _) => s.parse::<Split>().map_err(|e| usage(format!("--split: {e}")))?,
        (None, Some((_, s, _))) => *s,
        (None, None) => return Err(usage(format!("{}: cannot infer the split; pass --split", path.display()))),
    };
    let ds = load_dataset(path, lang, split)?;
    Ok(match inferred.and_then(|(_, _, id)| id) {
        Some(id) if opts.lang.is_none() => ds.with_source(id),
        _ => ds,
    })
}

/// `<id>.jsonl` for training blocks with an id, else `<lang>.<split>.jsonl`.
fn file_name(ds: &Dataset) -> String {
    match &ds.source_id {
        Some(id) if ds.split == Split::Train => format!("{id}.jsonl"),
        _ => format!("{}.{}.jsonl", ds.lang, ds.split),
    }
}

fn save(ds: &Dataset, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    let path = dir.join(name);
    write_dataset(ds, &path)?;
    eprintln!("wrote {} ({} instances)", path.display(), ds.len());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path).with_context(|| path.display().to_string())?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
