use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn core_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn alexis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alexis"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_plain() {
    let o = alexis(&["generate", "dibujar", "animales"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("Yo dibujo animales."));
    let o = alexis(&["generate", "pájaros", "poder", "volar", "?"]);
    assert_eq!(
        stdout(&o).lines().next(),
        Some("¿Los pájaros pueden volar?")
    );
    let o = alexis(&[
        "--max-candidates",
        "1",
        "generate",
        "niñas",
        "tomar",
        "batido",
        "chocolate",
    ]);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn impossible_input_echoes_with_status_two() {
    let o = alexis(&["generate", "caer", "sal", "a", "mantel"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).trim(), "caer sal a mantel");
    let o = alexis(&["--format", "json", "generate", "niña", "pan"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["echo"], "niña pan");
}

#[test]
fn json_is_canonical() {
    let o = alexis(&["--format", "json", "generate", "lobo", "comer", "niñas"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap(), text.trim_end());
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["candidates", "input", "mode"]);
    let best = &v["candidates"][0];
    assert_eq!(best["text"], "El lobo come niñas.");
    assert_eq!(best["insertions"][0]["word"], "el");
    assert!(best["tree"].as_str().unwrap().starts_with("[S "));
    assert_eq!(v["mode"], "affirmative");
}

#[test]
fn bad_configuration_is_status_one() {
    assert_eq!(
        alexis(&["--lexicon", "/nonexistent.xml", "generate", "x"])
            .status
            .code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.grammar");
    std::fs::write(&bad, "S -> NP verb\n").unwrap();
    let o = alexis(&["--grammar", bad.to_str().unwrap(), "generate", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(alexis(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(alexis(&["--help"]).status.code(), Some(0));
}

#[test]
fn repl_session() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_alexis"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all("lobo comer niñas\n\ncaer sal a mantel\nexit\ndibujar animales\n".as_bytes())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("El lobo come niñas."));
    assert!(out.contains("caer sal a mantel"));
    // nothing after `exit` is processed
    assert!(!out.contains("Yo dibujo"));
}

#[test]
fn evaluate_exact_match_block() {
    let corpus = fixture("exact_match.tsv");
    let o = alexis(&["evaluate", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("exact match 9/9 rate 1.0000"),
        "{}",
        stdout(&o)
    );
    let o = alexis(&[
        "--format",
        "json",
        "evaluate",
        "--corpus",
        fixture("non_svo.tsv").to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rate"], 0.0);
    assert_eq!(v["outcomes"][0]["echo"], "caer sal a mantel");
}

#[test]
fn agreement_on_fixtures() {
    let o = alexis(&[
        "agreement",
        "--annotations",
        fixture("annotations_perfect.xml").to_str().unwrap(),
    ]);
    assert!(
        stdout(&o).starts_with("alpha 1.0000\naccuracy 1.0000\n"),
        "{}",
        stdout(&o)
    );
    let o = alexis(&[
        "--format",
        "json",
        "agreement",
        "--annotations",
        fixture("annotations_random.xml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let got: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want: Value = serde_json::from_str(
        &std::fs::read_to_string(fixture("annotations_random.oracle.json")).unwrap(),
    )
    .unwrap();
    let close = |a: &Value, b: &Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-9;
    assert!(close(&got["alpha"], &want["alpha"]));
    assert!(close(&got["accuracy"], &want["accuracy"]));
    for i in 0..5 {
        for j in i + 1..5 {
            let key = format!("{}-{}", i + 1, j + 1);
            assert!(
                close(&got["pairwise_alpha"][i][j], &want["pairwise_alpha"][&key]),
                "{key}"
            );
            assert!(
                close(
                    &got["pairwise_accuracy"][i][j],
                    &want["pairwise_accuracy"][&key]
                ),
                "{key}"
            );
        }
    }
    assert_eq!(got["consensus"].as_array().unwrap().len(), 30);
}

#[test]
fn build_lexicon_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("merged.xml");
    let report = dir.path().join("report.json");
    let o = alexis(&[
        "build-lexicon",
        "--primary",
        fixture("builder_primary.xml").to_str().unwrap(),
        "--expansion",
        fixture("builder_expansion.xml").to_str().unwrap(),
        "--oracle",
        fixture("builder_oracle.tsv").to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("3 entries"));
    let lex =
        alexis::lexicon::Lexicon::from_xml_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(lex.len(), 3);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["primary_extracted_lemmas"], 5);
    // the merged lexicon is usable by the generator
    let o = alexis(&[
        "--lexicon",
        out.to_str().unwrap(),
        "generate",
        "casa",
        "aposentar",
    ]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2));
}

#[test]
fn train_lm_reproduces_shipped_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.lm");
    let o = alexis(&[
        "train-lm",
        "--corpus",
        core_data("toy_corpus.txt").to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        std::fs::read_to_string(core_data("toy.lm")).unwrap()
    );
    let o = alexis(&[
        "--lm",
        out.to_str().unwrap(),
        "generate",
        "Ana",
        "ir",
        "colegio",
        "no",
    ]);
    assert_eq!(stdout(&o).lines().next(), Some("Ana no va al colegio."));
}
