//! Tools for building dialectal COPA training and evaluation data.
//!
//! Modules follow the pipeline order: [`data`] reads and validates
//! instances, [`translit`] and [`rules`] produce script and dialect
//! variants, [`augment`] reverses and mixes them, [`combine`] assembles
//! training sets from recipes, [`prompt`] renders k-shot prompts and
//! [`eval`] scores predictions.
//!
//! Per-instance work runs through [`exec::Execution`]; the `parallel`
//! feature (on by default) backs it with rayon.

pub mod augment;
pub mod combine;
pub mod data;
pub mod eval;
pub mod exec;
pub mod prompt;
pub mod rules;
pub mod seed;
pub mod synthetic;
pub mod translit;

pub use augment::{mix_crosslingual, reverse_dataset, reverse_instance, upsample, AlignedCorpus};
pub use combine::{resolve, Catalog, Recipe};
pub use data::{CopaInstance, Dataset, DatasetId, Label, LanguageTag, Question, Split};
pub use eval::{score, AccuracyReport, PredictionRecord};
pub use exec::Execution;
pub use prompt::{render_prompt, PromptTemplate};
pub use rules::RuleSet;
pub use translit::TransliterationTable;
