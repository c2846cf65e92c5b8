use proptest::prelude::*;
use sepredict::corpus::{
    parse_corpus, parse_ontology, Attribution, Corpus, DrugOntology, Item, Label, Prescription,
};

fn token() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

fn attribution() -> impl Strategy<Value = Attribution> {
    prop_oneof![
        Just(Attribution::Hot),
        Just(Attribution::Cold),
        Just(Attribution::Neutral)
    ]
}

proptest! {
    #[test]
    fn ontology_round_trip(entries in prop::collection::btree_map(token(), attribution(), 0..40),
                           version in "[a-z0-9.-]{0,12}") {
        let mut ont = DrugOntology::new(version);
        for (d, a) in &entries {
            ont.insert(d, *a).unwrap();
        }
        prop_assert_eq!(parse_ontology(&ont.to_tsv()).unwrap(), ont);
    }

    #[test]
    fn corpus_round_trip(rows in prop::collection::btree_map(
        token(),
        (any::<bool>(), prop::collection::btree_map(token(), 0.0f64..1e6, 1..8)),
        0..30,
    )) {
        let mut corpus = Corpus::new("v1");
        for (id, (safe, items)) in rows {
            let items = items.into_iter().map(|(drug, dosage)| Item { drug, dosage }).collect();
            let label = if safe { Label::Safe } else { Label::Unsafe };
            corpus.push(Prescription::new(&id, label, items).unwrap()).unwrap();
        }
        let text = corpus.to_tsv();
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(back.to_tsv(), text);
    }
}

#[test]
fn errors_carry_file_and_line() {
    let text = "# header\np1\tsafe\ta:1\n\np2\tsafe\ta:1,b:x\n";
    let err = sepredict::corpus::parse_corpus_from("demo.rx.tsv", text).unwrap_err();
    assert_eq!(err.line, 4);
    assert_eq!(err.source_name, "demo.rx.tsv");
    assert!(err.to_string().starts_with("demo.rx.tsv:4: malformed line"));
}

#[test]
fn load_from_disk_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ont.tsv");
    std::fs::write(&path, "a\thot\nb\tlukewarm\n").unwrap();
    let err = DrugOntology::load(&path).unwrap_err().to_string();
    assert!(err.contains("bad.ont.tsv:2:"), "{err}");
    assert!(err.contains("lukewarm"));
    assert!(DrugOntology::load(&dir.path().join("missing.tsv")).is_err());
}
