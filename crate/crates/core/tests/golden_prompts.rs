use std::fs;
use std::path::Path;

use copa_dialect::data::{Dataset, LanguageTag, Split};
use copa_dialect::prompt::{render_prompt, PromptTemplate};

fn check(name: &str) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let input = fs::read_to_string(dir.join(format!("{name}.input.jsonl"))).unwrap();
    let expected = fs::read_to_string(dir.join(format!("{name}.txt"))).unwrap();
    let ds = Dataset::from_jsonl(&input, LanguageTag::new("en").unwrap(), Split::Validation).unwrap();
    let (target, exemplars) = ds.instances.split_last().unwrap();
    let rendered = render_prompt(target, exemplars, &PromptTemplate::default()).unwrap();
    assert_eq!(rendered.text, expected);
    assert_eq!(rendered.target_idx, target.idx);
}

#[test]
fn cause_golden() {
    check("cause");
}

#[test]
fn effect_golden() {
    check("effect");
}
