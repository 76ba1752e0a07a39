use std::collections::{BTreeMap, HashMap};

use alexis::grammar::{dfs_paths, Grammar, SymbolKind, SyntaxTree};
use alexis::lexicon::LexicalCategory::*;
use alexis::pipeline::SAMPLE_GRAMMAR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pinned so that edits to the bundled grammar are deliberate.
const BUNDLED_TREE_COUNT: u128 = 37_554_165;
const FULL_ENUMERATION_LIMIT: u128 = 200_000;

fn bundled() -> Grammar {
    Grammar::parse(SAMPLE_GRAMMAR).unwrap()
}

/// Independent count: expand by name, tracking how often each nonterminal is
/// open on the current path.
fn oracle_count(
    g: &Grammar,
    nt: &str,
    open: &mut BTreeMap<String, usize>,
    memo: &mut HashMap<String, u128>,
) -> u128 {
    if open.get(nt).copied().unwrap_or(0) >= g.depth_limit {
        return 0;
    }
    let key = format!("{nt}|{open:?}");
    if let Some(&c) = memo.get(&key) {
        return c;
    }
    *open.entry(nt.to_string()).or_default() += 1;
    let mut total = 0;
    for rule in g.rules.iter().filter(|r| r.head.name == nt) {
        let mut prod = 1u128;
        for s in &rule.body {
            if s.kind == SymbolKind::Nonterminal {
                prod *= oracle_count(g, &s.name, open, memo);
            }
        }
        total += prod;
    }
    *open.get_mut(nt).unwrap() -= 1;
    memo.insert(key, total);
    total
}

#[test]
fn branching_graph_dfs_order() {
    let graph: BTreeMap<u32, Vec<u32>> = [(1, vec![2, 3, 4]), (2, vec![5, 6]), (4, vec![7])].into();
    let paths = dfs_paths(1, |v| graph.get(v).cloned().unwrap_or_default()).unwrap();
    assert_eq!(
        paths,
        vec![vec![1, 2, 5], vec![1, 2, 6], vec![1, 3], vec![1, 4, 7]]
    );
}

#[test]
fn bundled_count_is_pinned_and_stable() {
    let g = bundled();
    assert_eq!(g.count_trees(), BUNDLED_TREE_COUNT);
    assert_eq!(bundled().count_trees(), g.count_trees());
    assert_eq!(
        oracle_count(&g, &g.start, &mut BTreeMap::new(), &mut HashMap::new()),
        BUNDLED_TREE_COUNT
    );
}

#[test]
fn small_nonterminals_enumerate_within_bound() {
    let g = bundled();
    for nt in g.nonterminals() {
        let sub = g.with_start(nt).unwrap();
        let count = sub.count_trees();
        assert_eq!(
            count,
            oracle_count(&g, nt, &mut BTreeMap::new(), &mut HashMap::new()),
            "{nt}"
        );
        if count > FULL_ENUMERATION_LIMIT {
            continue;
        }
        let mut n = 0u128;
        for t in sub.enumerate_trees() {
            assert!(t.max_reentry() <= 2, "{nt}: {}", t.bracketed());
            assert!(sub.derives(&t), "{nt}: {}", t.bracketed());
            n += 1;
        }
        assert_eq!(n, count, "{nt}");
    }
}

#[test]
fn sampled_sentence_trees_respect_bound() {
    let g = bundled();
    let total = g.count_trees();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let i = rng.gen_range(0..total);
        let t = g.nth_tree(i).unwrap();
        assert!(t.max_reentry() <= 2, "{}", t.bracketed());
        assert!(g.derives(&t));
    }
    assert!(g.nth_tree(total).is_none());
    let head: Vec<SyntaxTree> = g.enumerate_trees().take(3000).collect();
    for (i, t) in head.iter().enumerate() {
        assert_eq!(g.nth_tree(i as u128).as_ref(), Some(t));
    }
}

#[test]
fn nested_prepositional_phrases_stop_at_two() {
    let g = bundled();
    // SN inside SP inside SN is allowed; one more level is not.
    let two = [Noun, Verb, Noun, Preposition, Noun];
    assert!(!g.match_leaf_sequence(&two).is_empty());
    let three = [
        Noun,
        Verb,
        Noun,
        Preposition,
        Noun,
        Preposition,
        Noun,
        Preposition,
        Noun,
    ];
    for t in g.match_leaf_sequence(&three) {
        assert!(t.max_reentry() <= 2);
    }
}

#[test]
fn match_returns_trees_with_requested_leaves() {
    let g = bundled();
    let cats = [Determiner, Noun, Verb, Determiner, Noun];
    let found = g.match_leaf_sequence(&cats);
    assert!(!found.is_empty());
    assert!(found.iter().all(|t| t.leaves() == cats && g.derives(t)));
    assert_eq!(g.first_match(&cats).as_ref(), found.first());
    assert!(g
        .match_leaf_sequence(&[Conjunction, Conjunction])
        .is_empty());
}
