//! Declarative recipes that merge catalog blocks into one training set.
//!
//! A recipe is a JSON document:
//!
//! ```json
//! {"name": "o", "steps": [{"include": "hr-train", "repeat": 2},
//!                         {"mix": ["en-train", "hr-train", "sl-train"], "seed": 1}],
//!  "shuffle_seed": null}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde_json::{json, Value};
use thiserror::Error;

use crate::augment::{self, AlignedCorpus, AugmentError};
use crate::data::{load_dataset, DataError, Dataset, DatasetId, LanguageTag, Split};
use crate::exec::Execution;
use crate::seed;

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../data/recipes/", $name, ".recipe")))),*]
    };
}

const BUILTIN_RECIPES: &[(&str, &str)] = builtin![
    "o",
    "otrsl",
    "otrslc",
    "otrsl_mk-hr-ckm",
    "otrsl_hr-ckm",
    "otrsl_sl-cer",
    "otrsl_sr-tor",
    "otrslc_sr-tor",
    "otrsl_mix",
    "otrsl_mix-mk-hr-ckm",
    "otrsl_mix-hr-ckm",
    "otrslc_mix-testset",
];

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("invalid recipe JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("recipe: {0}")]
    Shape(String),
    #[error("step {step}: unknown step kind (expected `include` or `mix`)")]
    UnknownStep { step: usize },
    #[error("step {step}: malformed dataset id `{id}`")]
    MalformedId { step: usize, id: String },
    #[error("step {step}: repeat must be at least 1")]
    ZeroRepeat { step: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("dataset `{0}` is not in the catalog")]
    Unresolved(DatasetId),
    #[error("step {step}: {source}")]
    Step { step: usize, source: AugmentError },
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Include { id: DatasetId, repeat: usize },
    Mix { ids: Vec<DatasetId>, seed: u64 },
}

impl Step {
    pub fn ids(&self) -> Vec<&DatasetId> {
        match self {
            Step::Include { id, .. } => vec![id],
            Step::Mix { ids, .. } => ids.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub name: String,
    pub steps: Vec<Step>,
    pub shuffle_seed: Option<u64>,
}

impl Recipe {
    pub fn from_json_str(text: &str) -> Result<Self, RecipeError> {
        Self::from_value(&serde_json::from_str(text)?)
    }

    pub fn from_value(doc: &Value) -> Result<Self, RecipeError> {
        let shape = |m: &str| RecipeError::Shape(m.to_string());
        let obj = doc.as_object().ok_or_else(|| shape("expected a JSON object"))?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| shape("`name` must be a string"))?
            .to_string();
        let shuffle_seed = match obj.get("shuffle_seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| shape("`shuffle_seed` must be a non-negative integer"))?),
        };
        let raw_steps = match obj.get("steps") {
            None => Vec::new(),
            Some(Value::Array(a)) => a.clone(),
            Some(_) => return Err(shape("`steps` must be an array")),
        };

        let mut steps = Vec::with_capacity(raw_steps.len());
        for (i, s) in raw_steps.iter().enumerate() {
            let parse_id = |v: &Value| -> Result<DatasetId, RecipeError> {
                let text = v.as_str().unwrap_or_default();
                text.parse().map_err(|_| RecipeError::MalformedId { step: i, id: v.to_string() })
            };
            let step = s.as_object().ok_or(RecipeError::UnknownStep { step: i })?;
            if let Some(id) = step.get("include") {
                let repeat = match step.get("repeat") {
                    None => 1,
                    Some(v) => v.as_u64().ok_or_else(|| shape(&format!("step {i}: `repeat` must be an integer")))?,
                };
                if repeat == 0 {
                    return Err(RecipeError::ZeroRepeat { step: i });
                }
                steps.push(Step::Include { id: parse_id(id)?, repeat: repeat as usize });
            } else if let Some(ids) = step.get("mix") {
                let ids = ids
                    .as_array()
                    .ok_or_else(|| shape(&format!("step {i}: `mix` must be an array of ids")))?
                    .iter()
                    .map(parse_id)
                    .collect::<Result<_, _>>()?;
                let seed = match step.get("seed") {
                    None => 0,
                    Some(v) => v.as_u64().ok_or_else(|| shape(&format!("step {i}: `seed` must be an integer")))?,
                };
                steps.push(Step::Mix { ids, seed });
            } else {
                return Err(RecipeError::UnknownStep { step: i });
            }
        }
        Ok(Recipe { name, steps, shuffle_seed })
    }

    pub fn to_value(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| match s {
                Step::Include { id, repeat } => json!({"include": id.to_string(), "repeat": repeat}),
                Step::Mix { ids, seed } => {
                    json!({"mix": ids.iter().map(ToString::to_string).collect::<Vec<_>>(), "seed": seed})
                }
            })
            .collect();
        json!({"name": self.name, "steps": steps, "shuffle_seed": self.shuffle_seed})
    }

    /// Every id the recipe reads, in first-use order.
    pub fn referenced_ids(&self) -> Vec<&DatasetId> {
        let mut seen = Vec::new();
        for id in self.steps.iter().flat_map(Step::ids) {
            if !seen.contains(&id) {
                seen.push(id);
            }
        }
        seen
    }

    /// Copy whose mix and shuffle seeds are derived from `global`, one
    /// stream per step position.
    pub fn reseeded(&self, global: u64) -> Recipe {
        let mut out = self.clone();
        for (i, step) in out.steps.iter_mut().enumerate() {
            if let Step::Mix { seed: s, .. } = step {
                *s = seed::keyed(global, i as u64);
            }
        }
        out.shuffle_seed = self.shuffle_seed.map(|_| seed::derive(global, "shuffle"));
        out
    }
}

pub fn parse_recipe(path: &Path) -> Result<Recipe, RecipeError> {
    let text =
        fs::read_to_string(path).map_err(|source| RecipeError::Io { path: path.display().to_string(), source })?;
    Recipe::from_json_str(&text)
}

/// The twelve shipped settings, parsed from their recipe files.
pub fn builtin_recipes() -> Vec<Recipe> {
    BUILTIN_RECIPES
        .iter()
        .map(|(name, text)| Recipe::from_json_str(text).unwrap_or_else(|e| panic!("built-in recipe {name}: {e}")))
        .collect()
}

pub fn builtin_recipe(name: &str) -> Option<Recipe> {
    BUILTIN_RECIPES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Recipe::from_json_str(text).expect("built-in recipes parse"))
}

/// A built-in recipe name, or else a path to a recipe file.
pub fn resolve_recipe(name_or_path: &str) -> Result<Recipe, RecipeError> {
    match builtin_recipe(name_or_path) {
        Some(r) => Ok(r),
        None => parse_recipe(Path::new(name_or_path)),
    }
}

/// Named training blocks.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    blocks: BTreeMap<DatasetId, Dataset>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a block under its source id. Ids are unique.
    pub fn insert(&mut self, id: DatasetId, ds: Dataset) -> Result<(), CombineError> {
        if self.blocks.contains_key(&id) {
            return Err(CombineError::Catalog(format!("duplicate id `{id}`")));
        }
        self.blocks.insert(id, ds);
        Ok(())
    }

    /// Adds a dataset that carries its own source id.
    pub fn add(&mut self, ds: Dataset) -> Result<(), CombineError> {
        let id = ds
            .source_id
            .clone()
            .ok_or_else(|| CombineError::Catalog(format!("dataset {} has no source id", ds.name())))?;
        self.insert(id, ds)
    }

    /// Loads every `<id>.jsonl` file in `dir` as a training block.
    pub fn from_dir(dir: &Path) -> Result<Self, CombineError> {
        let entries = fs::read_dir(dir).map_err(|e| CombineError::Catalog(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut cat = Catalog::new();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let id: DatasetId = stem
                .parse()
                .map_err(|_| CombineError::Catalog(format!("{}: file name is not a dataset id", path.display())))?;
            let ds = load_dataset(&path, id.language(), Split::Train)?.with_source(id.clone());
            cat.insert(id, ds)?;
        }
        Ok(cat)
    }

    pub fn get(&self, id: &DatasetId) -> Option<&Dataset> {
        self.blocks.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &DatasetId> {
        self.blocks.keys()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

pub fn resolve(r: &Recipe, cat: &Catalog) -> Result<Dataset, CombineError> {
    resolve_with(r, cat, Execution::default())
}

/// Concatenates step outputs in recipe order, applies the optional seeded
/// shuffle, then renumbers idx from 0.
pub fn resolve_with(r: &Recipe, cat: &Catalog, exec: Execution) -> Result<Dataset, CombineError> {
    for id in r.referenced_ids() {
        if cat.get(id).is_none() {
            return Err(CombineError::Unresolved(id.clone()));
        }
    }
    let parts = exec.try_map(&r.steps, |i, step| run_step(i, step, cat, exec))?;

    let mut instances: Vec<_> = parts.into_iter().flatten().collect();
    if let Some(s) = r.shuffle_seed {
        instances.shuffle(&mut seed::rng(s));
    }
    for (i, x) in instances.iter_mut().enumerate() {
        x.idx = i as u64;
    }
    Ok(Dataset::new(LanguageTag::multi(), Split::Train, instances))
}

fn run_step(
    i: usize,
    step: &Step,
    cat: &Catalog,
    exec: Execution,
) -> Result<Vec<crate::data::CopaInstance>, CombineError> {
    let step_err = |source| CombineError::Step { step: i, source };
    let block = |id: &DatasetId| cat.get(id).cloned().ok_or_else(|| CombineError::Unresolved(id.clone()));
    match step {
        Step::Include { id, repeat } => {
            let ds = block(id)?;
            Ok(augment::upsample(&ds, *repeat).map_err(step_err)?.instances)
        }
        Step::Mix { ids, seed } => {
            let sets = ids.iter().map(block).collect::<Result<Vec<_>, _>>()?;
            let corpus = AlignedCorpus::new(sets).map_err(step_err)?;
            Ok(augment::mix_crosslingual_with(&corpus, *seed, exec).dataset.instances)
        }
    }
}
