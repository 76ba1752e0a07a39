use alexis::lexicon::{LexicalCategory, Lexicon};
use alexis::lexicon_builder::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMARY_XML: &str = include_str!("fixtures/builder_primary.xml");
const EXPANSION_XML: &str = include_str!("fixtures/builder_expansion.xml");
const ORACLE: &str = include_str!("fixtures/builder_oracle.tsv");

fn inputs() -> (Vec<SourceRecord>, Vec<SourceRecord>, AllowlistOracle) {
    (
        read_records(PRIMARY_XML, PRIMARY).unwrap(),
        read_records(EXPANSION_XML, EXPANSION).unwrap(),
        AllowlistOracle::parse(ORACLE).unwrap(),
    )
}

/// Every query a caller can make, flattened for comparison.
fn answers(lex: &Lexicon) -> Vec<String> {
    let mut out = Vec::new();
    for e in lex.entries() {
        for c in LexicalCategory::ALL {
            out.push(format!(
                "{}/{c:?}: {:?}",
                e.lemma,
                lex.lookup_lemma(&e.lemma, Some(c))
            ));
        }
        for f in &e.forms {
            let hits: Vec<_> = lex
                .lookup_form(&f.surface)
                .iter()
                .map(|(e, f)| (e.key(), (*f).clone()))
                .collect();
            out.push(format!("{}: {hits:?}", f.surface));
        }
    }
    out
}

#[test]
fn expansion_follows_related_lemmas() {
    let (p, e, _) = inputs();
    let ex = extract_and_map(&p, &e, DEFAULT_EXPANSION_CAP);
    // interjection, numeral and proper name
    assert_eq!(ex.dropped_by_category, 3);
    let lemmas: Vec<&str> = ex.expansion.iter().map(|r| r.lemma()).collect();
    assert!(lemmas.contains(&"aposentar"));
    // zurriburri and correr have no expansion record; alojar is linked but absent.
    assert_eq!(ex.expansion_misses, 3);
    assert!(!ex.truncated);
    let capped = extract_and_map(&p, &e, 1);
    assert!(capped.truncated);
    assert!(!capped.expansion.iter().any(|r| r.lemma() == "aposentar"));
}

#[test]
fn verification_rejects_unknown_lemmas_and_categories() {
    let (p, e, o) = inputs();
    let ex = extract_and_map(&p, &e, DEFAULT_EXPANSION_CAP);
    let kept = verify(&ex.primary, &o);
    let lemmas: Vec<&str> = kept.iter().map(|r| r.lemma()).collect();
    assert_eq!(lemmas, vec!["aposento", "mar", "casa"]);
    assert_eq!(verify(&kept, &o), kept);
}

#[test]
fn merged_fixture() {
    let (p, e, o) = inputs();
    let (lex, report) = build(&p, &e, &o, DEFAULT_EXPANSION_CAP);
    let keys: Vec<_> = lex.entries().iter().map(|e| e.key()).collect();
    assert_eq!(
        keys,
        vec![
            ("aposentar".to_string(), LexicalCategory::Verb),
            ("aposento".to_string(), LexicalCategory::Noun),
            ("casa".to_string(), LexicalCategory::Noun),
        ]
    );
    let aposento = lex.lookup_lemma("aposento", Some(LexicalCategory::Noun))[0];
    assert_eq!(aposento.forms.len(), 2);
    assert_eq!(lex.lookup_form("aposento").len(), 2);
    // casa gains its plural from the expansion source.
    assert_eq!(lex.lookup_lemma("casa", None)[0].forms.len(), 2);
    // mar disagrees on gender in every form; nothing survives.
    assert!(lex.lookup_lemma("mar", None).is_empty());
    assert_eq!(report.conflicts.len(), 4);
    assert_eq!(report.invalid.len(), 1);

    let flat = report.to_flat_json();
    assert_eq!(flat["primary_extracted_lemmas"], 5);
    assert_eq!(flat["primary_rejected_lemmas"], 2);
    assert_eq!(flat["expansion_verified_lemmas"], 4);
    assert_eq!(flat["expansion_merged_unique"], 1);
    assert_eq!(flat["entries"], 3);
    assert!(flat.values().all(|v| !v.is_object()));
}

#[test]
fn merge_is_order_invariant() {
    let (p, e, o) = inputs();
    let ex = extract_and_map(&p, &e, DEFAULT_EXPANSION_CAP);
    let a = verify(&ex.primary, &o);
    let b = verify(&ex.expansion, &o);
    let (base, base_report) = merge(&[a.clone(), b.clone()]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.shuffle(&mut rng);
        b2.shuffle(&mut rng);
        for sets in [vec![a2.clone(), b2.clone()], vec![b2, a2]] {
            let (lex, report) = merge(&sets);
            assert_eq!(answers(&lex), answers(&base));
            assert_eq!(report, base_report);
        }
    }
}

#[test]
fn merge_is_idempotent_on_its_output() {
    let (p, e, o) = inputs();
    let (lex, _) = build(&p, &e, &o, DEFAULT_EXPANSION_CAP);
    let again: Vec<SourceRecord> = lex
        .entries()
        .iter()
        .map(|e| SourceRecord::new(PRIMARY, e.clone()))
        .collect();
    let (lex2, report) = merge(&[again.clone(), again]);
    assert_eq!(lex2.entries(), lex.entries());
    assert!(report.conflicts.is_empty());
}

#[test]
fn merged_lexicon_round_trips() {
    let (p, e, o) = inputs();
    let (lex, _) = build(&p, &e, &o, DEFAULT_EXPANSION_CAP);
    let back = Lexicon::from_xml_str(&lex.to_xml()).unwrap();
    assert_eq!(answers(&back), answers(&lex));
    assert_eq!(back.to_xml(), lex.to_xml());
}
