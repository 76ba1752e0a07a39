//! `alexis`: Spanish sentences from content words.
//!
//! Exit status: 0 on success, 1 on configuration or parse failures, 2 when no
//! sentence can be generated (the input is echoed).

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alexis::evaluation::{
    agreement_report, consensus, error_type_matrix, exact_match_rate, load_annotations,
    load_corpus, GeneratorFailure,
};
use alexis::grammar::Grammar;
use alexis::lexicon::Lexicon;
use alexis::lexicon_builder::{
    build, read_records, AllowlistOracle, DEFAULT_EXPANSION_CAP, EXPANSION, PRIMARY,
};
use alexis::lm::{NGramModel, TrainConfig};
use alexis::pipeline::{
    Generation, Generator, DEFAULT_MAX_CANDIDATES, SAMPLE_GRAMMAR, SAMPLE_LEXICON, TOY_LM,
};
use alexis::planner::PlanError;
use anyhow::{bail, Context, Result};
use clap::builder::TypedValueParser;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const EXIT_CONFIG: u8 = 1;
const EXIT_NO_SENTENCE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "alexis",
    version,
    about = "Generate Spanish sentences from content words"
)]
struct Cli {
    /// Lexicon XML; the bundled sample lexicon when omitted.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Grammar file; the bundled grammar when omitted.
    #[arg(long, global = true)]
    grammar: Option<PathBuf>,
    /// Verb model file; the bundled toy model when omitted.
    #[arg(long, global = true)]
    lm: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_CANDIDATES, value_parser = clap::value_parser!(u16).range(1..).map(usize::from))]
    max_candidates: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Realize one keyword list. Quote `?` in shells that glob it.
    Generate {
        #[arg(required = true, num_args = 1.., allow_hyphen_values = true)]
        words: Vec<String>,
    },
    /// Read one keyword line per prompt; `exit` quits.
    Repl,
    /// Extract, verify and merge two source lexica.
    BuildLexicon {
        #[arg(long)]
        primary: PathBuf,
        #[arg(long)]
        expansion: PathBuf,
        /// `lemma<TAB>cat1,cat2` allowlist used for verification.
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_CAP)]
        cap: usize,
        #[arg(long)]
        output: PathBuf,
        /// Flat JSON report with per-source counts.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Count verb/preposition and reflexive statistics from a tagged corpus.
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = TrainConfig::default().trigram_weight)]
        trigram_weight: f64,
        #[arg(long, default_value_t = TrainConfig::default().smoothing_k)]
        smoothing: f64,
    },
    /// Exact-match rate over a `target<TAB>keywords` corpus.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Krippendorff's alpha and accuracy over error-type annotations.
    Agreement {
        #[arg(long)]
        annotations: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Generate { words } => {
            let g = generator(cli)?;
            let mut out = io::stdout().lock();
            Ok(generate_one(&g, words, cli.format, &mut out)?)
        }
        Command::Repl => {
            let g = generator(cli)?;
            repl(&g, cli.format, io::stdin().lock(), &mut io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildLexicon {
            primary,
            expansion,
            oracle,
            cap,
            output,
            report,
        } => {
            let p = read_records(&read(primary)?, PRIMARY)
                .with_context(|| format!("parsing {}", primary.display()))?;
            let e = read_records(&read(expansion)?, EXPANSION)
                .with_context(|| format!("parsing {}", expansion.display()))?;
            let o = AllowlistOracle::parse(&read(oracle)?)
                .with_context(|| format!("parsing {}", oracle.display()))?;
            let (lex, rep) = build(&p, &e, &o, *cap);
            write_atomic(output, &lex.to_xml())?;
            let flat = Value::Object(rep.to_flat_json());
            if let Some(path) = report {
                write_atomic(path, &(serde_json::to_string_pretty(&flat)? + "\n"))?;
            }
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&flat)?),
                Format::Plain => {
                    println!("{} entries, {} forms", rep.entries, rep.forms);
                    for line in rep.conflicts.iter().chain(&rep.invalid) {
                        println!("excluded: {line}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::TrainLm {
            corpus,
            output,
            trigram_weight,
            smoothing,
        } => {
            let cfg = TrainConfig {
                trigram_weight: *trigram_weight,
                smoothing_k: *smoothing,
            };
            let (model, report) = NGramModel::train_text(&read(corpus)?, &cfg);
            write_atomic(output, &model.to_text())?;
            for line in &report.skipped_lines {
                eprintln!("skipped malformed line {line}");
            }
            println!(
                "{} sentences, {} verbs",
                report.sentences,
                model.verbs.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { corpus } => {
            let g = generator(cli)?;
            let items = load_corpus(&read(corpus)?)
                .with_context(|| format!("parsing {}", corpus.display()))?;
            let report = exact_match_rate(&items, |kw| {
                g.generate(kw)
                    .map(|r| r.texts().into_iter().map(String::from).collect())
                    .map_err(|e| GeneratorFailure {
                        message: e.to_string(),
                        echo: e.echo().map(String::from),
                    })
            });
            match cli.format {
                Format::Json => println!("{}", canonical(serde_json::to_value(&report)?)?),
                Format::Plain => {
                    for o in &report.outcomes {
                        let status = if o.matched {
                            "MATCH"
                        } else if o.echo.is_some() {
                            "ECHO "
                        } else {
                            "MISS "
                        };
                        let got = o.echo.clone().unwrap_or_else(|| o.candidates.join(" | "));
                        println!("{status} {} => {got}", o.target);
                    }
                    println!(
                        "exact match {}/{} rate {:.4}",
                        report.matched, report.total, report.rate
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Agreement { annotations } => {
            let recs = load_annotations(&read(annotations)?)
                .with_context(|| format!("parsing {}", annotations.display()))?;
            let report = agreement_report(&error_type_matrix(&recs))?;
            match cli.format {
                Format::Json => {
                    let mut v = serde_json::to_value(&report)?;
                    v["consensus"] = serde_json::to_value(consensus(&recs))?;
                    println!("{}", canonical(v)?);
                }
                Format::Plain => {
                    println!(
                        "alpha {:.4}{}",
                        report.alpha,
                        if report.degenerate {
                            " (single category)"
                        } else {
                            ""
                        }
                    );
                    println!("accuracy {:.4}", report.accuracy);
                    for (name, table) in [
                        ("alpha", &report.pairwise_alpha),
                        ("accuracy", &report.pairwise_accuracy),
                    ] {
                        for (i, row) in table.iter().enumerate() {
                            for (j, cell) in row.iter().enumerate() {
                                if let Some(x) = cell {
                                    println!("{name} {}-{} {x:.4}", i + 1, j + 1);
                                }
                            }
                        }
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn generator(cli: &Cli) -> Result<Generator> {
    let lexicon = match &cli.lexicon {
        Some(p) => {
            Lexicon::from_xml_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Lexicon::from_xml_str(SAMPLE_LEXICON)?,
    };
    let grammar = match &cli.grammar {
        Some(p) => Grammar::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => Grammar::parse(SAMPLE_GRAMMAR)?,
    };
    let lm = match &cli.lm {
        Some(p) => {
            NGramModel::from_text(&read(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => NGramModel::from_text(TOY_LM)?,
    };
    if lexicon.is_empty() {
        bail!("the lexicon has no entries");
    }
    let mut g = Generator::new(lexicon, grammar, lm);
    g.max_candidates = cli.max_candidates;
    Ok(g)
}

/// Sorted keys, so parsing and re-serializing gives the same bytes.
fn canonical(value: impl Into<Value>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&value.into())?)
}

fn generation_json(g: &Generation) -> Value {
    let candidates: Vec<Value> = g
        .candidates
        .iter()
        .map(|c| {
            json!({
                "text": c.text,
                "tree": c.plan.tree.bracketed(),
                "insertions": c.plan.inserted,
                "trace": c.trace,
            })
        })
        .collect();
    json!({ "input": g.input, "mode": g.mode, "candidates": candidates })
}

fn failure_json(words: &[String], e: &PlanError) -> Value {
    json!({ "input": words, "error": e.to_string(), "echo": e.echo() })
}

fn generate_one<W: Write>(
    g: &Generator,
    words: &[String],
    format: Format,
    out: &mut W,
) -> Result<ExitCode> {
    match g.generate(words) {
        Ok(r) => {
            match format {
                Format::Json => writeln!(out, "{}", canonical(generation_json(&r))?)?,
                Format::Plain => {
                    for t in r.texts() {
                        writeln!(out, "{t}")?;
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            match format {
                Format::Json => writeln!(out, "{}", canonical(failure_json(words, &e))?)?,
                Format::Plain => writeln!(
                    out,
                    "{}",
                    e.echo().map_or_else(|| words.join(" "), String::from)
                )?,
            }
            eprintln!("{e}");
            Ok(ExitCode::from(EXIT_NO_SENTENCE))
        }
    }
}

fn repl<R: BufRead, W: Write>(g: &Generator, format: Format, input: R, out: &mut W) -> Result<()> {
    let mut lines = input.lines();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next() else {
            writeln!(out)?;
            return Ok(());
        };
        let line = line?;
        let words: Vec<String> = line.split_whitespace().map(String::from).collect();
        match words.as_slice() {
            [] => continue,
            [w] if w == "exit" => return Ok(()),
            _ => {
                generate_one(g, &words, format, out)?;
            }
        }
    }
}
