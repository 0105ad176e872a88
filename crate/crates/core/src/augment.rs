//! Reverse-augmentation, cross-lingual mixing and upsampling.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::data::{CopaInstance, Dataset, LanguageTag};
use crate::exec::Execution;
use crate::seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugmentError {
    #[error("instance {0} has no label and cannot be reversed")]
    Unlabeled(u64),
    #[error("cross-lingual mixing needs at least 3 aligned datasets, got {0}")]
    TooFewLanguages(usize),
    #[error("language `{0}` appears twice in the aligned corpus")]
    DuplicateLanguage(String),
    #[error("{dataset} is not aligned with {reference}: {message}")]
    Misaligned { dataset: String, reference: String, message: String },
    #[error("upsampling factor must be at least 1")]
    ZeroFactor,
    #[error("idx overflow while renumbering")]
    IdxOverflow,
}

/// Swaps the premise with the correct choice and flips cause/effect. The
/// wrong choice keeps its slot, so the label is unchanged.
pub fn reverse_instance(x: &CopaInstance, new_idx: u64) -> Result<CopaInstance, AugmentError> {
    let label = x.label.ok_or(AugmentError::Unlabeled(x.idx))?;
    let mut out = x.clone();
    out.premise = x.choice(label).to_string();
    *out.choice_mut(label) = x.premise.clone();
    out.question = x.question.flipped();
    out.idx = new_idx;
    Ok(out)
}

/// Reversed copy of every instance. The i-th output gets idx
/// `max_idx + 1 + i`, so the block can be concatenated with its source.
pub fn reverse_dataset(ds: &Dataset) -> Result<Dataset, AugmentError> {
    let base = match ds.max_idx() {
        None => 0,
        Some(m) => m.checked_add(1).ok_or(AugmentError::IdxOverflow)?,
    };
    let instances = ds
        .instances
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let idx = base.checked_add(i as u64).ok_or(AugmentError::IdxOverflow)?;
            reverse_instance(x, idx)
        })
        .collect::<Result<_, _>>()?;
    Ok(Dataset {
        lang: ds.lang.clone(),
        split: ds.split,
        source_id: ds.source_id.as_ref().map(|id| id.reversed()),
        instances,
    })
}

/// Parallel translations of one set of instances.
#[derive(Debug, Clone)]
pub struct AlignedCorpus {
    datasets: Vec<Dataset>,
}

impl AlignedCorpus {
    /// Checks that there are at least three datasets in distinct languages,
    /// all with the same idx sequence and the same question and label per idx.
    pub fn new(datasets: Vec<Dataset>) -> Result<Self, AugmentError> {
        if datasets.len() < 3 {
            return Err(AugmentError::TooFewLanguages(datasets.len()));
        }
        let mut langs = BTreeSet::new();
        for ds in &datasets {
            if !langs.insert(ds.lang.clone()) {
                return Err(AugmentError::DuplicateLanguage(ds.lang.to_string()));
            }
        }
        let reference = &datasets[0];
        let mut ref_sorted: Vec<&CopaInstance> = reference.instances.iter().collect();
        ref_sorted.sort_by_key(|x| x.idx);

        for ds in &datasets[1..] {
            let misaligned = |message: String| AugmentError::Misaligned {
                dataset: ds.name(),
                reference: reference.name(),
                message,
            };
            if ds.len() != reference.len() {
                return Err(misaligned(format!("{} instances vs {}", ds.len(), reference.len())));
            }
            let mut sorted: Vec<&CopaInstance> = ds.instances.iter().collect();
            sorted.sort_by_key(|x| x.idx);
            for (a, b) in ref_sorted.iter().zip(&sorted) {
                if a.idx != b.idx {
                    return Err(misaligned(format!("idx {} has no counterpart", a.idx.min(b.idx))));
                }
                if a.question != b.question || a.label != b.label {
                    return Err(misaligned(format!("question or label differs at idx {}", a.idx)));
                }
            }
        }
        Ok(AlignedCorpus { datasets })
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn languages(&self) -> Vec<&LanguageTag> {
        self.datasets.iter().map(|d| &d.lang).collect()
    }
}

/// Source languages of one mixed instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixProvenance {
    pub idx: u64,
    pub premise_lang: String,
    pub choice1_lang: String,
    pub choice2_lang: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixOutput {
    pub dataset: Dataset,
    pub provenance: Vec<MixProvenance>,
}

pub fn mix_crosslingual(corpus: &AlignedCorpus, seed: u64) -> MixOutput {
    mix_crosslingual_with(corpus, seed, Execution::default())
}

/// One instance per idx whose premise and choices come from three distinct
/// languages. The assignment is drawn uniformly from a stream keyed by
/// `(seed, idx)`, so it does not depend on evaluation order. Output follows
/// the idx order of the first dataset.
pub fn mix_crosslingual_with(corpus: &AlignedCorpus, seed: u64, exec: Execution) -> MixOutput {
    let sets = corpus.datasets();
    let lookups: Vec<std::collections::HashMap<u64, &CopaInstance>> =
        sets.iter().map(|d| d.instances.iter().map(|x| (x.idx, x)).collect()).collect();

    let mixed = exec.map(&sets[0].instances, |_, anchor| {
        let mut rng = seed::keyed_rng(seed, anchor.idx);
        let mut order: Vec<usize> = (0..sets.len()).collect();
        let (picked, _) = order.partial_shuffle(&mut rng, 3);
        let [p, c1, c2] = [picked[0], picked[1], picked[2]];
        let inst = CopaInstance {
            premise: lookups[p][&anchor.idx].premise.clone(),
            choice1: lookups[c1][&anchor.idx].choice1.clone(),
            choice2: lookups[c2][&anchor.idx].choice2.clone(),
            question: anchor.question,
            label: anchor.label,
            idx: anchor.idx,
            extra: Default::default(),
        };
        let prov = MixProvenance {
            idx: anchor.idx,
            premise_lang: sets[p].lang.to_string(),
            choice1_lang: sets[c1].lang.to_string(),
            choice2_lang: sets[c2].lang.to_string(),
        };
        (inst, prov)
    });

    let (instances, provenance) = mixed.into_iter().unzip();
    MixOutput {
        dataset: Dataset::new(LanguageTag::mix(), sets[0].split, instances),
        provenance,
    }
}

/// Repeats the block `factor` times. Copy `k` shifts every idx by
/// `k * (max_idx + 1)`, so idx values stay unique.
pub fn upsample(ds: &Dataset, factor: usize) -> Result<Dataset, AugmentError> {
    if factor == 0 {
        return Err(AugmentError::ZeroFactor);
    }
    let stride = match ds.max_idx() {
        None => 0,
        Some(m) => m.checked_add(1).ok_or(AugmentError::IdxOverflow)?,
    };
    let mut instances = Vec::with_capacity(ds.len() * factor);
    for k in 0..factor as u64 {
        let shift = stride.checked_mul(k).ok_or(AugmentError::IdxOverflow)?;
        for x in &ds.instances {
            let mut y = x.clone();
            y.idx = x.idx.checked_add(shift).ok_or(AugmentError::IdxOverflow)?;
            instances.push(y);
        }
    }
    Ok(Dataset { instances, ..ds.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, Question, Split};

    fn friend() -> CopaInstance {
        CopaInstance::new(
            "I poured water on my sleeping friend.",
            "My friend awoke.",
            "My friend snored.",
            Question::Effect,
            Label::Choice1,
            0,
        )
    }

    #[test]
    fn reverses_boxed_example() {
        let r = reverse_instance(&friend(), 7).unwrap();
        assert_eq!(r.premise, "My friend awoke.");
        assert_eq!(r.choice1, "I poured water on my sleeping friend.");
        assert_eq!(r.choice2, "My friend snored.");
        assert_eq!(r.question, Question::Cause);
        assert_eq!(r.label, Some(Label::Choice1));
        assert_eq!(r.idx, 7);
    }

    #[test]
    fn label_one_moves_premise_into_choice2() {
        let x = CopaInstance::new("P", "wrong", "right", Question::Cause, Label::Choice2, 3);
        let r = reverse_instance(&x, 10).unwrap();
        assert_eq!((r.premise.as_str(), r.choice1.as_str(), r.choice2.as_str()), ("right", "wrong", "P"));
        assert_eq!(r.question, Question::Effect);
        assert_eq!(r.label, Some(Label::Choice2));
    }

    #[test]
    fn unlabeled_cannot_be_reversed() {
        let mut x = friend();
        x.label = None;
        assert_eq!(reverse_instance(&x, 1), Err(AugmentError::Unlabeled(0)));
    }

    #[test]
    fn reverse_dataset_mirrors_question_histogram() {
        let xs: Vec<CopaInstance> = (0..9)
            .map(|i| {
                let q = if i % 3 == 0 { Question::Cause } else { Question::Effect };
                CopaInstance::new(format!("p{i}"), "a", "b", q, Label::Choice1, i * 2)
            })
            .collect();
        let ds = Dataset::new("hr".parse().unwrap(), Split::Train, xs)
            .with_source("hr-train".parse().unwrap());
        let out = reverse_dataset(&ds).unwrap();
        assert_eq!(out.len(), 9);
        assert_eq!(out.source_id.unwrap().to_string(), "hr-reverse");
        let count = |d: &[CopaInstance], q| d.iter().filter(|x| x.question == q).count();
        assert_eq!(count(&out.instances, Question::Cause), count(&ds.instances, Question::Effect));
        assert_eq!(count(&out.instances, Question::Effect), count(&ds.instances, Question::Cause));
        let idxs: Vec<u64> = out.instances.iter().map(|x| x.idx).collect();
        assert_eq!(idxs, (17..26).collect::<Vec<_>>());

        let empty = Dataset::new("hr".parse().unwrap(), Split::Train, vec![]);
        assert!(reverse_dataset(&empty).unwrap().is_empty());
    }

    fn aligned(lang: &str, n: u64) -> Dataset {
        let xs = (0..n)
            .map(|i| {
                let q = if i % 2 == 0 { Question::Cause } else { Question::Effect };
                let l = if i % 3 == 0 { Label::Choice2 } else { Label::Choice1 };
                CopaInstance::new(format!("{lang} p{i}"), format!("{lang} a{i}"), format!("{lang} b{i}"), q, l, i)
            })
            .collect();
        Dataset::new(lang.parse().unwrap(), Split::Train, xs)
    }

    #[test]
    fn mix_uses_three_distinct_sources() {
        let corpus = AlignedCorpus::new(vec![aligned("en", 50), aligned("hr", 50), aligned("sl", 50)]).unwrap();
        let out = mix_crosslingual(&corpus, 7);
        assert_eq!(out.dataset.len(), 50);
        assert_eq!(out.dataset.lang.as_str(), "mix");
        for (x, p) in out.dataset.instances.iter().zip(&out.provenance) {
            assert_eq!(x.idx, p.idx);
            let langs: BTreeSet<&str> = [&p.premise_lang, &p.choice1_lang, &p.choice2_lang].into_iter().map(String::as_str).collect();
            assert_eq!(langs.len(), 3);
            assert!(x.premise.starts_with(&p.premise_lang));
            assert!(x.choice1.starts_with(&p.choice1_lang));
            assert!(x.choice2.starts_with(&p.choice2_lang));
        }
        assert_eq!(out, mix_crosslingual(&corpus, 7));
        assert_ne!(out.provenance, mix_crosslingual(&corpus, 8).provenance);
        assert_eq!(out, mix_crosslingual_with(&corpus, 7, Execution::Sequential));
    }

    #[test]
    fn mix_preconditions() {
        assert_eq!(
            AlignedCorpus::new(vec![aligned("en", 3), aligned("hr", 3)]).unwrap_err(),
            AugmentError::TooFewLanguages(2)
        );
        assert!(matches!(
            AlignedCorpus::new(vec![aligned("en", 3), aligned("hr", 3), aligned("sl", 4)]),
            Err(AugmentError::Misaligned { .. })
        ));
        let mut off = aligned("sl", 3);
        off.instances[1].label = Some(Label::Choice2);
        assert!(matches!(
            AlignedCorpus::new(vec![aligned("en", 3), aligned("hr", 3), off]),
            Err(AugmentError::Misaligned { .. })
        ));
        let mut shifted = aligned("sl", 3);
        shifted.instances[2].idx = 9;
        assert!(AlignedCorpus::new(vec![aligned("en", 3), aligned("hr", 3), shifted]).is_err());
        assert!(matches!(
            AlignedCorpus::new(vec![aligned("en", 3), aligned("hr", 3), aligned("en", 3)]),
            Err(AugmentError::DuplicateLanguage(_))
        ));
    }

    #[test]
    fn upsample_counts_and_idx() {
        let ds = aligned("hr", 100);
        let up = upsample(&ds, 3).unwrap();
        assert_eq!(up.len(), 300);
        let idxs: BTreeSet<u64> = up.instances.iter().map(|x| x.idx).collect();
        assert_eq!(idxs.len(), 300);
        assert_eq!(upsample(&ds, 1).unwrap(), ds);
        assert_eq!(upsample(&ds, 0), Err(AugmentError::ZeroFactor));
    }

    #[test]
    fn upsample_text_multiset() {
        let ds = aligned("hr", 5);
        let up = upsample(&ds, 4).unwrap();
        let mut want: Vec<[&str; 3]> = Vec::new();
        for _ in 0..4 {
            want.extend(ds.instances.iter().map(|x| x.texts()));
        }
        let mut got: Vec<[&str; 3]> = up.instances.iter().map(|x| x.texts()).collect();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }
}
