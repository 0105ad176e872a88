//! Deterministic fixture data shaped like the shared-task release.
//!
//! Texts are short subject + predicate sentences drawn from small per-language
//! word lists. Blocks of one family share the question and label of every
//! idx, so they align for cross-lingual mixing.

use rand::Rng;

use crate::augment::reverse_dataset;
use crate::combine::Catalog;
use crate::data::{CopaInstance, Dataset, DatasetId, DatasetKind, ExpectedCounts, Label, LanguageTag, Question, Split};
use crate::rules::{convert_dataset, RuleSet};
use crate::seed;
use crate::translit::{transliterate_dataset, TransliterationTable};

struct Lexicon {
    subjects: &'static [&'static str],
    predicates: &'static [&'static str],
}

const EN: Lexicon = Lexicon {
    subjects: &["My friend", "The woman", "The boy", "The teacher", "Our neighbour", "The man", "My sister", "The child"],
    predicates: &[
        "awoke", "went to the store", "cooked dinner", "lost the key", "read a book", "saw the sea", "wrote a letter",
        "stayed at home", "snored", "fell in love",
    ],
};

const HR: Lexicon = Lexicon {
    subjects: &["Ja sam", "Moj prijatelj", "Žena", "Dječak", "Učitelj", "Susjed", "Moja sestra", "Dijete"],
    predicates: &[
        "rekao nešto", "kupio kruh", "htio kuhati", "vidio nekoga", "ostao kod sela", "čitao knjigu", "napisao pismo",
        "zaljubio se u ljubav", "gledao ljude", "našao suh kruh",
    ],
};

const SL: Lexicon = Lexicon {
    subjects: &["Moj prijatelj", "Žena", "Deček", "Učitelj", "Sosed", "Mož", "Moja sestra", "Otrok"],
    predicates: &[
        "se je zbudil", "je šel v trgovino", "je skuhal večerjo", "je izgubil ključ", "je bral knjigo",
        "je videl morje", "je napisal pismo", "je ostal doma", "je smrčal", "se je zaljubil",
    ],
};

const SL_CER: Lexicon = Lexicon {
    subjects: &["Mu parjatu", "Žjena", "Fant", "Učitu", "Sasiet", "Mož", "Mja sestra", "Utrok"],
    predicates: &[
        "s j' zbudu", "j' šu u štacuno", "j' skuhu večerjo", "j' zgubu kjuč", "j' brou bukve", "j' vidu murje",
        "j' napisu pismo", "j' astu duoma", "j' smrču", "s j' zajubu",
    ],
};

const SR: Lexicon = Lexicon {
    subjects: &["Мој пријатељ", "Жена", "Дечак", "Учитељ", "Комшија", "Човек", "Моја сестра", "Дете"],
    predicates: &[
        "се пробудио", "је отишао у продавницу", "је скувао вечеру", "је изгубио кључ", "је читао књигу",
        "је видео море", "је написао писмо", "је остао код куће", "је хркао", "се заљубио",
    ],
};

const SR_TOR: Lexicon = Lexicon {
    subjects: &["Мој другар", "Жена", "Дете", "Учитељ", "Комшија", "Човек", "Моја сестра", "Детенце"],
    predicates: &[
        "се разбуди", "отиде у дућан", "свари вечеру", "изгуби кључ", "читаше књигу", "виде море", "напиша писмо",
        "остаде дома", "хрчеше", "се залуби",
    ],
};

const MK: Lexicon = Lexicon {
    subjects: &["Мојот пријател", "Жената", "Момчето", "Учителот", "Ѓорѓе", "Човекот", "Мојата сестра", "Детето"],
    predicates: &[
        "се разбуди", "отиде во продавница", "зготви вечера", "го изгуби клучот", "читаше книга", "го виде морето",
        "напиша писмо", "остана дома", "ќе ѕвони", "се вљуби",
    ],
};

fn lexicon(lang: &str) -> Option<&'static Lexicon> {
    Some(match lang {
        "en" => &EN,
        "hr" => &HR,
        "sl" => &SL,
        "sl-cer" => &SL_CER,
        "sr" => &SR,
        "sr-tor" => &SR_TOR,
        "mk" => &MK,
        _ => return None,
    })
}

/// Languages with their own word lists; `sr`, `sr-tor` and `mk` are Cyrillic.
pub const SOURCE_LANGUAGES: [&str; 7] = ["en", "hr", "sl", "sl-cer", "sr", "sr-tor", "mk"];

fn sentence(lex: &Lexicon, rng: &mut impl Rng) -> String {
    let s = lex.subjects[rng.random_range(0..lex.subjects.len())];
    let p = lex.predicates[rng.random_range(0..lex.predicates.len())];
    format!("{s} {p}.")
}

/// `n` instances with idx `offset..offset + n`. Question and label depend
/// only on `(seed, family, idx)`; texts also on `lang`.
///
/// # Panics
/// If `lang` is not one of [`SOURCE_LANGUAGES`].
pub fn generate(lang: &str, family: &str, split: Split, n: usize, offset: u64, seed: u64) -> Dataset {
    let lex = lexicon(lang).unwrap_or_else(|| panic!("no word list for `{lang}`"));
    let shape_seed = seed::derive(seed, family);
    let text_seed = seed::derive(shape_seed, lang);
    let instances = (offset..offset + n as u64)
        .map(|idx| {
            let shape = seed::keyed(shape_seed, idx);
            let question = if shape & 1 == 0 { Question::Cause } else { Question::Effect };
            let label = if shape & 2 == 0 { Label::Choice1 } else { Label::Choice2 };
            let mut rng = seed::keyed_rng(text_seed, idx);
            let premise = sentence(lex, &mut rng);
            let choice1 = sentence(lex, &mut rng);
            let mut choice2 = sentence(lex, &mut rng);
            while choice2 == choice1 {
                choice2 = sentence(lex, &mut rng);
            }
            CopaInstance::new(premise, choice1, choice2, question, label, idx)
        })
        .collect();
    Dataset::new(LanguageTag::new(lang).expect("source languages are known"), split, instances)
}

fn id(s: &str) -> DatasetId {
    s.parse().expect("fixture ids are well formed")
}

/// Raw blocks before any processing: `<lang>-train` for every source
/// language, `en-gpt4`, and `hr|sl|sr|mk-nllb` aligned with `en-gpt4`.
pub fn source_blocks(n: usize, seed: u64) -> Vec<Dataset> {
    let mut out: Vec<Dataset> = SOURCE_LANGUAGES
        .iter()
        .map(|l| generate(l, "train", Split::Train, n, 0, seed).with_source(id(&format!("{l}-train"))))
        .collect();
    out.push(generate("en", "gpt4", Split::Train, n, 0, seed).with_source(id("en-gpt4")));
    for l in ["hr", "sl", "sr", "mk"] {
        let ds = generate(l, "gpt4", Split::Train, n, 0, seed);
        let lang = LanguageTag::new(&format!("{l}-nllb")).expect("nllb tags are valid");
        out.push(Dataset { lang, ..ds }.with_source(id(&format!("{l}-nllb"))));
    }
    out
}

/// Every block the shipped recipes reference, built from [`source_blocks`]
/// with the real transliteration, rule and reversal code.
pub fn fixture_catalog(n: usize, seed: u64) -> Catalog {
    let sr = TransliterationTable::builtin("serbian").expect("shipped table");
    let mk = TransliterationTable::builtin("macedonian").expect("shipped table");
    let rules = RuleSet::builtin("hr-ckm").expect("shipped ruleset");
    let mut blocks = source_blocks(n, seed);
    let mut derived = Vec::new();
    for ds in &blocks {
        let sid = ds.source_id.as_ref().expect("fixtures carry ids").to_string();
        match sid.as_str() {
            "sr-train" | "sr-tor-train" | "sr-nllb" => derived.push(transliterate_dataset(ds, &sr)),
            "mk-train" | "mk-nllb" => derived.push(transliterate_dataset(ds, &mk)),
            "hr-train" => derived.push(convert_dataset(ds, &rules)),
            _ => {}
        }
    }
    blocks.extend(derived);
    let reversed: Vec<Dataset> = blocks
        .iter()
        .filter(|ds| {
            let kind = ds.source_id.as_ref().map(|i| i.kind);
            matches!(kind, Some(DatasetKind::Train | DatasetKind::Trans | DatasetKind::Claude))
        })
        .map(|ds| reverse_dataset(ds).expect("fixtures are labeled"))
        .collect();
    blocks.extend(reversed);
    let mut cat = Catalog::new();
    for ds in blocks {
        cat.add(ds).expect("fixture ids are unique");
    }
    cat
}

/// One dataset per `(language, split)` of [`ExpectedCounts::shared_task`],
/// sized to match.
pub fn shared_task_fixture(seed: u64) -> Vec<Dataset> {
    let sr = TransliterationTable::builtin("serbian").expect("shipped table");
    let mk = TransliterationTable::builtin("macedonian").expect("shipped table");
    let rules = RuleSet::builtin("hr-ckm").expect("shipped ruleset");
    let expected = ExpectedCounts::shared_task();
    let mut out = Vec::new();
    for ((lang, split), count) in expected.iter() {
        let family = split.as_str();
        let make = |l: &str| generate(l, family, split, count, 0, seed);
        let ds = match lang {
            "sr-trans" => transliterate_dataset(&make("sr"), &sr),
            "sr-tor-trans" => transliterate_dataset(&make("sr-tor"), &sr),
            "mk-trans" => transliterate_dataset(&make("mk"), &mk),
            "hr-ckm" => {
                let converted = convert_dataset(&make("hr"), &rules);
                Dataset { lang: LanguageTag::new("hr-ckm").expect("known"), source_id: None, ..converted }
            }
            l => make(l),
        };
        out.push(ds);
    }
    out
}
