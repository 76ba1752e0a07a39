use alexis::evaluation::{exact_match_rate, load_corpus, GeneratorFailure};
use alexis::lexicon::Tense;
use alexis::pipeline::Generator;
use alexis::planner::{PlanError, SentenceMode};

fn texts(g: &Generator, input: &str) -> Vec<String> {
    let words: Vec<&str> = input.split_whitespace().collect();
    match g.generate(&words) {
        Ok(r) => r.texts().into_iter().map(String::from).collect(),
        Err(e) => panic!("{input}: {e}"),
    }
}

fn top(g: &Generator, input: &str) -> String {
    texts(g, input).remove(0)
}

#[test]
fn functionality_examples() {
    let g = Generator::bundled();
    assert_eq!(top(&g, "dibujar animales"), "Yo dibujo animales.");
    assert_eq!(top(&g, "Ana ir colegio no"), "Ana no va al colegio.");
    assert_eq!(
        top(&g, "pájaros poder volar ?"),
        "¿Los pájaros pueden volar?"
    );
    let milkshake = texts(&g, "niñas tomar batido chocolate");
    assert!(
        milkshake.contains(&"Las niñas toman el batido del chocolate.".to_string()),
        "{milkshake:?}"
    );
    assert!(
        milkshake.contains(&"Las niñas toman el batido y el chocolate.".to_string()),
        "{milkshake:?}"
    );
    assert_eq!(
        top(&g, "profesor escribir letras números en pizarra"),
        "El profesor escribe las letras y los números en la pizarra."
    );
    assert_eq!(
        top(&g, "abejas volar alrededor de flor amarillo"),
        "Las abejas vuelan alrededor de la flor amarilla."
    );
}

#[test]
fn wolf_walkthrough_trace() {
    let g = Generator::bundled();
    let r = g.generate(&["lobo", "comer", "niñas"]).unwrap();
    assert_eq!(r.mode, SentenceMode::Affirmative);
    let best = &r.candidates[0];
    assert_eq!(best.text, "El lobo come niñas.");
    assert_eq!(best.trace[0], "mode: affirmative");
    assert!(
        best.trace
            .iter()
            .any(|l| l.starts_with("insert determiner: `el`")),
        "{:?}",
        best.trace
    );
}

#[test]
fn exact_match_block() {
    let g = Generator::bundled();
    let corpus = load_corpus(include_str!("fixtures/exact_match.tsv")).unwrap();
    assert_eq!(corpus.len(), 9);
    let report = exact_match_rate(&corpus, |kw| run(&g, kw));
    let misses: Vec<_> = report.outcomes.iter().filter(|o| !o.matched).collect();
    assert_eq!(report.rate, 1.0, "{misses:#?}");
}

fn run(g: &Generator, kw: &[String]) -> Result<Vec<String>, GeneratorFailure> {
    g.generate(kw)
        .map(|r| r.texts().into_iter().map(String::from).collect())
        .map_err(|e| GeneratorFailure {
            message: e.to_string(),
            echo: e.echo().map(String::from),
        })
}

#[test]
fn non_svo_input_is_echoed() {
    let g = Generator::bundled();
    let corpus = load_corpus(include_str!("fixtures/non_svo.tsv")).unwrap();
    let report = exact_match_rate(&corpus, |kw| run(&g, kw));
    assert_eq!(report.matched, 0);
    assert_eq!(
        report.outcomes[0].echo.as_deref(),
        Some("caer sal a mantel")
    );
    let err = g.generate(&["caer", "sal", "a", "mantel"]).unwrap_err();
    assert!(matches!(err, PlanError::NoStructure { .. }));
}

#[test]
fn empty_and_verbless_inputs() {
    let g = Generator::bundled();
    assert!(matches!(
        g.generate::<&str>(&[]),
        Err(PlanError::EmptyInput)
    ));
    assert!(matches!(
        g.generate(&["no", "?"]),
        Err(PlanError::EmptyInput)
    ));
    let err = g.generate(&["niña", "pan"]).unwrap_err();
    assert!(matches!(err, PlanError::NoVerb { .. }));
    assert_eq!(err.echo(), Some("niña pan"));
}

#[test]
fn compound_subject_takes_first_plural() {
    let g = Generator::bundled();
    assert_eq!(
        top(&g, "cuidadora nosotros comer manzanas"),
        "La cuidadora y nosotros comemos manzanas."
    );
}

#[test]
fn double_negation() {
    let g = Generator::bundled();
    assert_eq!(
        top(&g, "yo ir siempre a teatro no"),
        "Yo no voy nunca al teatro."
    );
}

#[test]
fn contraction_with_pronoun() {
    let g = Generator::bundled();
    assert!(texts(&g, "él comer con yo").contains(&"Él come conmigo.".to_string()));
}

#[test]
fn time_adverbs_set_tense() {
    let g = Generator::bundled();
    let r = g.generate(&["ayer", "niña", "comer", "pan"]).unwrap();
    assert_eq!(r.candidates[0].tense, Tense::Past);
    assert_eq!(r.candidates[0].text, "Ayer la niña comió el pan.");
    assert_eq!(top(&g, "mañana yo ir a parque"), "Mañana yo iré al parque.");
    assert_eq!(top(&g, "niña comer pan"), "La niña come el pan.");
}

#[test]
fn candidates_are_distinct_and_capped() {
    let mut g = Generator::bundled();
    for input in [
        "niñas tomar batido chocolate",
        "dibujar animales",
        "lobo comer niñas",
    ] {
        let t = texts(&g, input);
        assert!(t.len() <= 3);
        let mut d = t.clone();
        d.dedup();
        assert_eq!(d.len(), t.len());
    }
    g.max_candidates = 1;
    assert_eq!(texts(&g, "niñas tomar batido chocolate").len(), 1);
}

#[test]
fn generation_serializes() {
    let g = Generator::bundled();
    let r = g.generate(&["lobo", "comer", "niñas"]).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("El lobo come niñas."));
}
