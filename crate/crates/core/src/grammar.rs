//! Feature-annotated context-free grammar with bounded recursion.
//!
//! Text format, one rule per line:
//!
//! ```text
//! # comment
//! S(p,n) -> SN(p,n) PRED(p,n)
//! SN(p,n) -> determiner(n) noun(p,n)
//! ```
//!
//! Bare lowercase category names are terminals; the head of the first rule is
//! the start symbol. A variable's axis is given by its first letter
//! (`p` person, `n` number, `g` gender). Arguments of a nonterminal occurrence
//! are linked positionally to the head arguments of the rule that expands it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::LexicalCategory;

pub const DEFAULT_DEPTH_LIMIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Nonterminal,
    TerminalCategory(LexicalCategory),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrammarSymbol {
    pub name: String,
    pub kind: SymbolKind,
    pub feature_vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarRule {
    pub head: GrammarSymbol,
    pub body: Vec<GrammarSymbol>,
    pub line: usize,
}

impl GrammarRule {
    /// Variables occurring more than once across head and body, with their
    /// `(position, argument)` occurrences; position 0 is the head.
    pub fn feature_equations(&self) -> BTreeMap<String, Vec<(usize, usize)>> {
        let mut occ: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for (pos, sym) in std::iter::once(&self.head).chain(&self.body).enumerate() {
            for (i, v) in sym.feature_vars.iter().enumerate() {
                occ.entry(v.clone()).or_default().push((pos, i));
            }
        }
        occ.retain(|_, o| o.len() > 1);
        occ
    }
}

impl fmt::Display for GrammarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = |s: &GrammarSymbol| {
            if s.feature_vars.is_empty() {
                s.name.clone()
            } else {
                format!("{}({})", s.name, s.feature_vars.join(","))
            }
        };
        let body: Vec<String> = self.body.iter().map(sym).collect();
        write!(f, "{} -> {}", sym(&self.head), body.join(" "))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undefined symbol `{symbol}`")]
    Undefined { line: usize, symbol: String },
    #[error("grammar has no rules")]
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cycle through vertex {vertex}")]
pub struct CycleError {
    pub vertex: String,
}

/// A derivation tree. Leaves carry a terminal category; internal nodes record
/// the rule that expanded them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub symbol: String,
    pub rule: Option<usize>,
    pub category: Option<LexicalCategory>,
    pub vars: Vec<String>,
    pub children: Vec<SyntaxTree>,
}

impl SyntaxTree {
    pub fn leaves(&self) -> Vec<LexicalCategory> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<LexicalCategory>) {
        match self.category {
            Some(c) => out.push(c),
            None => self.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Largest number of occurrences of one nonterminal on a root-to-leaf path.
    pub fn max_reentry(&self) -> usize {
        fn walk<'a>(t: &'a SyntaxTree, path: &mut HashMap<&'a str, usize>, best: &mut usize) {
            if t.category.is_some() {
                return;
            }
            let c = path.entry(t.symbol.as_str()).or_insert(0);
            *c += 1;
            *best = (*best).max(*c);
            for ch in &t.children {
                walk(ch, path, best);
            }
            *path.get_mut(t.symbol.as_str()).unwrap() -= 1;
        }
        let mut best = 0;
        walk(self, &mut HashMap::new(), &mut best);
        best
    }

    /// Leaf-to-root chains of node symbols, one per leaf, root first.
    pub fn leaf_paths(&self) -> Vec<Vec<&str>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        fn walk<'a>(t: &'a SyntaxTree, path: &mut Vec<&'a str>, out: &mut Vec<Vec<&'a str>>) {
            path.push(&t.symbol);
            if t.children.is_empty() {
                out.push(path.clone());
            }
            for c in &t.children {
                walk(c, path, out);
            }
            path.pop();
        }
        walk(self, &mut path, &mut out);
        out
    }

    /// Parent symbol of each leaf, in leaf order.
    pub fn leaf_parents(&self) -> Vec<&str> {
        self.leaf_paths()
            .into_iter()
            .map(|p| if p.len() >= 2 { p[p.len() - 2] } else { p[0] })
            .collect()
    }

    pub fn bracketed(&self) -> String {
        match self.category {
            Some(c) => c.as_str().to_string(),
            None => {
                let inner: Vec<String> = self.children.iter().map(|c| c.bracketed()).collect();
                format!("[{} {}]", self.symbol, inner.join(" "))
            }
        }
    }

    /// Pushes a valuation of the root's variables down the tree. Each node gets
    /// the values of its own arguments (`None` where nothing forces a value).
    pub fn propagate(&self, grammar: &Grammar, root_values: &[Option<String>]) -> BoundTree {
        self.bind_in(grammar, root_values.to_vec())
    }

    fn bind_in(&self, grammar: &Grammar, own: Vec<Option<String>>) -> BoundTree {
        let Some(r) = self.rule else {
            return BoundTree {
                symbol: self.symbol.clone(),
                values: own,
                children: Vec::new(),
            };
        };
        let rule = &grammar.rules[r];
        let mut scope: HashMap<&str, Option<String>> = HashMap::new();
        for (i, v) in rule.head.feature_vars.iter().enumerate() {
            scope.insert(v, own.get(i).cloned().flatten());
        }
        let children = self
            .children
            .iter()
            .zip(&rule.body)
            .map(|(child, occ)| {
                let vals: Vec<Option<String>> = occ
                    .feature_vars
                    .iter()
                    .map(|v| scope.get(v.as_str()).cloned().flatten())
                    .collect();
                child.bind_in(grammar, vals)
            })
            .collect();
        BoundTree {
            symbol: self.symbol.clone(),
            values: own,
            children,
        }
    }
}

/// A tree with concrete values attached to each node's arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTree {
    pub symbol: String,
    pub values: Vec<Option<String>>,
    pub children: Vec<BoundTree>,
}

#[derive(Debug, Clone)]
pub struct Grammar {
    pub rules: Vec<GrammarRule>,
    pub start: String,
    pub depth_limit: usize,
    nt_ids: HashMap<String, usize>,
    nt_names: Vec<String>,
    rules_by_head: Vec<Vec<usize>>,
    first: Vec<BTreeSet<LexicalCategory>>,
    min_len: Vec<usize>,
}

fn parse_symbol(tok: &str, line: usize) -> Result<(String, Vec<String>), GrammarError> {
    let err = |m: String| GrammarError::Syntax { line, message: m };
    let (name, vars) = match tok.find('(') {
        Some(i) => {
            if !tok.ends_with(')') {
                return Err(err(format!("unbalanced parentheses in `{tok}`")));
            }
            let inner = &tok[i + 1..tok.len() - 1];
            let vars: Vec<String> = inner.split(',').map(|v| v.trim().to_string()).collect();
            if vars.iter().any(|v| v.is_empty()) && !inner.trim().is_empty() {
                return Err(err(format!("empty variable in `{tok}`")));
            }
            let vars = if inner.trim().is_empty() {
                Vec::new()
            } else {
                vars
            };
            (&tok[..i], vars)
        }
        None => (tok, Vec::new()),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(err(format!("bad symbol name `{name}`")));
    }
    for v in &vars {
        if !v.starts_with(['p', 'n', 'g']) || !v.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(err(format!("variable `{v}` must start with p, n or g")));
        }
    }
    Ok((name.to_string(), vars))
}

/// Splits on whitespace outside parentheses so `A(p, n)` stays one token.
fn split_symbols(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch)
            }
            ')' => {
                depth -= 1;
                cur.push(ch)
            }
            c if c.is_whitespace() && depth <= 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c if c.is_whitespace() => {}
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl Grammar {
    pub fn parse(source: &str) -> Result<Grammar, GrammarError> {
        let mut raw = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let Some((lhs, rhs)) = text.split_once("->") else {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    message: "expected `->`".into(),
                });
            };
            let lhs_syms = split_symbols(lhs);
            if lhs_syms.len() != 1 {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    message: "rule head must be one symbol".into(),
                });
            }
            let head = parse_symbol(&lhs_syms[0], line_no)?;
            let body: Vec<(String, Vec<String>)> = split_symbols(rhs)
                .iter()
                .map(|t| parse_symbol(t, line_no))
                .collect::<Result<_, _>>()?;
            if body.is_empty() {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    message: "empty rule body".into(),
                });
            }
            raw.push((line_no, head, body));
        }
        if raw.is_empty() {
            return Err(GrammarError::Empty);
        }
        let heads: BTreeSet<String> = raw.iter().map(|(_, h, _)| h.0.clone()).collect();
        for (line, h, _) in &raw {
            if h.0.parse::<LexicalCategory>().is_ok() {
                return Err(GrammarError::Syntax {
                    line: *line,
                    message: format!("terminal `{}` used as a rule head", h.0),
                });
            }
        }
        let mut rules = Vec::new();
        for (line, (hname, hvars), body) in raw {
            let mut syms = Vec::new();
            for (name, vars) in body {
                let kind = if heads.contains(&name) {
                    SymbolKind::Nonterminal
                } else if let Ok(c) = name.parse::<LexicalCategory>() {
                    SymbolKind::TerminalCategory(c)
                } else {
                    return Err(GrammarError::Undefined { line, symbol: name });
                };
                syms.push(GrammarSymbol {
                    name,
                    kind,
                    feature_vars: vars,
                });
            }
            let head = GrammarSymbol {
                name: hname,
                kind: SymbolKind::Nonterminal,
                feature_vars: hvars,
            };
            rules.push(GrammarRule {
                head,
                body: syms,
                line,
            });
        }
        Self::from_rules(rules, DEFAULT_DEPTH_LIMIT)
    }

    pub fn from_rules(
        rules: Vec<GrammarRule>,
        depth_limit: usize,
    ) -> Result<Grammar, GrammarError> {
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        let mut nt_ids = HashMap::new();
        let mut nt_names = Vec::new();
        for r in &rules {
            if !nt_ids.contains_key(&r.head.name) {
                nt_ids.insert(r.head.name.clone(), nt_names.len());
                nt_names.push(r.head.name.clone());
            }
        }
        let mut arity: HashMap<&str, (usize, usize)> = HashMap::new();
        for r in &rules {
            for s in std::iter::once(&r.head).chain(r.body.iter()) {
                if s.kind != SymbolKind::Nonterminal {
                    continue;
                }
                if !nt_ids.contains_key(&s.name) {
                    return Err(GrammarError::Undefined {
                        line: r.line,
                        symbol: s.name.clone(),
                    });
                }
                match arity.get(s.name.as_str()) {
                    Some(&(a, _)) if a != s.feature_vars.len() => {
                        return Err(GrammarError::Syntax {
                            line: r.line,
                            message: format!(
                                "`{}` used with {} arguments, elsewhere {}",
                                s.name,
                                s.feature_vars.len(),
                                a
                            ),
                        })
                    }
                    _ => {
                        arity.insert(&s.name, (s.feature_vars.len(), r.line));
                    }
                }
            }
        }
        let mut rules_by_head = vec![Vec::new(); nt_names.len()];
        for (i, r) in rules.iter().enumerate() {
            rules_by_head[nt_ids[&r.head.name]].push(i);
        }
        let start = rules[0].head.name.clone();
        let mut g = Grammar {
            rules,
            start,
            depth_limit: depth_limit.max(1),
            nt_ids,
            nt_names,
            rules_by_head,
            first: Vec::new(),
            min_len: Vec::new(),
        };
        g.compute_tables();
        Ok(g)
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Grammar {
        self.depth_limit = limit.max(1);
        self
    }

    fn compute_tables(&mut self) {
        let n = self.nt_names.len();
        let mut first = vec![BTreeSet::new(); n];
        let mut min_len = vec![usize::MAX; n];
        loop {
            let mut changed = false;
            for r in &self.rules {
                let h = self.nt_ids[&r.head.name];
                let add: BTreeSet<LexicalCategory> = match r.body[0].kind {
                    SymbolKind::TerminalCategory(c) => [c].into(),
                    SymbolKind::Nonterminal => first[self.nt_ids[&r.body[0].name]].clone(),
                };
                let before = first[h].len();
                first[h].extend(add);
                changed |= first[h].len() != before;
                let len = r.body.iter().try_fold(0usize, |acc, s| match s.kind {
                    SymbolKind::TerminalCategory(_) => Some(acc + 1),
                    SymbolKind::Nonterminal => {
                        let m = min_len[self.nt_ids[&s.name]];
                        (m != usize::MAX).then(|| acc + m)
                    }
                });
                if let Some(len) = len {
                    if len < min_len[h] {
                        min_len[h] = len;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.first = first;
        self.min_len = min_len;
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nt_names
    }

    fn start_id(&self) -> usize {
        self.nt_ids[&self.start]
    }

    fn leaf(sym: &GrammarSymbol, c: LexicalCategory) -> SyntaxTree {
        SyntaxTree {
            symbol: sym.name.clone(),
            rule: None,
            category: Some(c),
            vars: sym.feature_vars.clone(),
            children: Vec::new(),
        }
    }

    /// Number of trees `enumerate_trees` yields, computed without building them.
    pub fn count_trees(&self) -> u128 {
        let mut memo = HashMap::new();
        self.count_nt(self.start_id(), &vec![0u8; self.nt_names.len()], &mut memo)
    }

    fn count_nt(&self, nt: usize, ctx: &[u8], memo: &mut HashMap<(usize, Vec<u8>), u128>) -> u128 {
        if ctx[nt] as usize >= self.depth_limit {
            return 0;
        }
        let key = (nt, ctx.to_vec());
        if let Some(&c) = memo.get(&key) {
            return c;
        }
        let mut inner = ctx.to_vec();
        inner[nt] += 1;
        let mut total = 0u128;
        for &r in &self.rules_by_head[nt] {
            let mut prod = 1u128;
            for s in &self.rules[r].body {
                if s.kind == SymbolKind::Nonterminal {
                    prod = prod.saturating_mul(self.count_nt(self.nt_ids[&s.name], &inner, memo));
                    if prod == 0 {
                        break;
                    }
                }
            }
            total = total.saturating_add(prod);
        }
        memo.insert(key, total);
        total
    }

    fn trees_nt(
        &self,
        nt: usize,
        ctx: &[u8],
        memo: &mut HashMap<(usize, Vec<u8>), Rc<Vec<SyntaxTree>>>,
    ) -> Rc<Vec<SyntaxTree>> {
        if ctx[nt] as usize >= self.depth_limit {
            return Rc::new(Vec::new());
        }
        let key = (nt, ctx.to_vec());
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let mut inner = ctx.to_vec();
        inner[nt] += 1;
        let mut out = Vec::new();
        for &r in &self.rules_by_head[nt] {
            let parts = self.body_options(r, &inner, memo);
            for combo in CartesianProduct::new(&parts) {
                out.push(self.node(r, combo));
            }
        }
        let out = Rc::new(out);
        memo.insert(key, out.clone());
        out
    }

    fn body_options(
        &self,
        r: usize,
        inner: &[u8],
        memo: &mut HashMap<(usize, Vec<u8>), Rc<Vec<SyntaxTree>>>,
    ) -> Vec<Rc<Vec<SyntaxTree>>> {
        self.rules[r]
            .body
            .iter()
            .map(|s| match s.kind {
                SymbolKind::TerminalCategory(c) => Rc::new(vec![Self::leaf(s, c)]),
                SymbolKind::Nonterminal => self.trees_nt(self.nt_ids[&s.name], inner, memo),
            })
            .collect()
    }

    fn node(&self, r: usize, children: Vec<SyntaxTree>) -> SyntaxTree {
        let rule = &self.rules[r];
        SyntaxTree {
            symbol: rule.head.name.clone(),
            rule: Some(r),
            category: None,
            vars: rule.head.feature_vars.clone(),
            children,
        }
    }

    /// The same rules with a different start symbol.
    pub fn with_start(&self, start: &str) -> Option<Grammar> {
        self.nt_ids.contains_key(start).then(|| Grammar {
            start: start.to_string(),
            ..self.clone()
        })
    }

    /// The `index`-th tree of `enumerate_trees`, without enumerating the ones before it.
    pub fn nth_tree(&self, index: u128) -> Option<SyntaxTree> {
        let mut memo = HashMap::new();
        let ctx = vec![0u8; self.nt_names.len()];
        let start = self.start_id();
        (index < self.count_nt(start, &ctx, &mut memo))
            .then(|| self.unrank(start, &ctx, index, &mut memo))
    }

    fn unrank(
        &self,
        nt: usize,
        ctx: &[u8],
        mut index: u128,
        memo: &mut HashMap<(usize, Vec<u8>), u128>,
    ) -> SyntaxTree {
        let mut inner = ctx.to_vec();
        inner[nt] += 1;
        for &r in &self.rules_by_head[nt] {
            let body = &self.rules[r].body;
            let counts: Vec<u128> = body
                .iter()
                .map(|s| match s.kind {
                    SymbolKind::TerminalCategory(_) => 1,
                    SymbolKind::Nonterminal => self.count_nt(self.nt_ids[&s.name], &inner, memo),
                })
                .collect();
            let total = counts.iter().product::<u128>();
            if index >= total {
                index -= total;
                continue;
            }
            let mut children = Vec::with_capacity(body.len());
            for (i, s) in body.iter().enumerate() {
                let later: u128 = counts[i + 1..].iter().product();
                let own = index / later;
                index %= later;
                children.push(match s.kind {
                    SymbolKind::TerminalCategory(c) => Self::leaf(s, c),
                    SymbolKind::Nonterminal => self.unrank(self.nt_ids[&s.name], &inner, own, memo),
                });
            }
            return self.node(r, children);
        }
        unreachable!("index checked against the tree count")
    }

    /// Every tree derivable from the start symbol within the depth limit, in
    /// rule-file order with the leftmost child varying slowest.
    pub fn enumerate_trees(&self) -> impl Iterator<Item = SyntaxTree> + '_ {
        let start = self.start_id();
        let mut memo = HashMap::new();
        let mut inner = vec![0u8; self.nt_names.len()];
        inner[start] = 1;
        let per_rule: Vec<(usize, Vec<Rc<Vec<SyntaxTree>>>)> = if self.depth_limit == 0 {
            Vec::new()
        } else {
            self.rules_by_head[start]
                .iter()
                .map(|&r| (r, self.body_options(r, &inner, &mut memo)))
                .collect()
        };
        per_rule.into_iter().flat_map(move |(r, parts)| {
            let owned: Vec<Vec<SyntaxTree>> = parts.iter().map(|p| p.as_ref().clone()).collect();
            OwnedProduct::new(owned).map(move |combo| self.node(r, combo))
        })
    }

    /// All trees whose leaf categories equal `cats`, in depth-first discovery
    /// order. Panics on an empty sequence.
    pub fn match_leaf_sequence(&self, cats: &[LexicalCategory]) -> Vec<SyntaxTree> {
        self.matches_up_to(cats, usize::MAX)
    }

    /// The first tree [`Grammar::match_leaf_sequence`] would return, found without exploring the rest.
    pub fn first_match(&self, cats: &[LexicalCategory]) -> Option<SyntaxTree> {
        self.matches_up_to(cats, 1).pop()
    }

    fn matches_up_to(&self, cats: &[LexicalCategory], limit: usize) -> Vec<SyntaxTree> {
        assert!(
            !cats.is_empty(),
            "match_leaf_sequence needs at least one category"
        );
        let mut out = Vec::new();
        let start = self.start_id();
        let mut pending = vec![Pending::Nt(start, Rc::new(vec![0u8; self.nt_names.len()]))];
        let mut choices = Vec::new();
        self.dfs(cats, 0, &mut pending, &mut choices, &mut (limit, &mut out));
        out
    }

    fn dfs(
        &self,
        cats: &[LexicalCategory],
        pos: usize,
        pending: &mut Vec<Pending>,
        choices: &mut Vec<usize>,
        sink: &mut (usize, &mut Vec<SyntaxTree>),
    ) {
        if sink.1.len() >= sink.0 {
            return;
        }
        let Some(top) = pending.pop() else {
            if pos == cats.len() {
                let mut it = choices.iter().copied();
                sink.1.push(self.build(self.start_id(), &mut it));
            }
            return;
        };
        let remaining = cats.len() - pos;
        let needed: usize = pending
            .iter()
            .chain(std::iter::once(&top))
            .map(|p| self.pending_min(p))
            .sum();
        if needed <= remaining && remaining > 0 {
            match &top {
                Pending::T(c) => {
                    if cats[pos] == *c {
                        self.dfs(cats, pos + 1, pending, choices, sink);
                    }
                }
                Pending::Nt(nt, ctx) => {
                    if (ctx[*nt] as usize) < self.depth_limit
                        && self.first[*nt].contains(&cats[pos])
                    {
                        let mut inner = ctx.as_ref().clone();
                        inner[*nt] += 1;
                        let inner = Rc::new(inner);
                        for &r in &self.rules_by_head[*nt] {
                            let body = &self.rules[r].body;
                            let depth = pending.len();
                            for s in body.iter().rev() {
                                pending.push(match s.kind {
                                    SymbolKind::TerminalCategory(c) => Pending::T(c),
                                    SymbolKind::Nonterminal => {
                                        Pending::Nt(self.nt_ids[&s.name], inner.clone())
                                    }
                                });
                            }
                            choices.push(r);
                            self.dfs(cats, pos, pending, choices, sink);
                            choices.pop();
                            pending.truncate(depth);
                        }
                    }
                }
            }
        }
        pending.push(top);
    }

    fn pending_min(&self, p: &Pending) -> usize {
        match p {
            Pending::T(_) => 1,
            Pending::Nt(nt, _) => self.min_len[*nt],
        }
    }

    /// Rebuilds a tree from a leftmost-derivation rule sequence.
    fn build(&self, nt: usize, choices: &mut impl Iterator<Item = usize>) -> SyntaxTree {
        let r = choices.next().expect("derivation sequence too short");
        debug_assert_eq!(self.nt_ids[&self.rules[r].head.name], nt);
        let children = self.rules[r]
            .body
            .iter()
            .map(|s| match s.kind {
                SymbolKind::TerminalCategory(c) => Self::leaf(s, c),
                SymbolKind::Nonterminal => self.build(self.nt_ids[&s.name], choices),
            })
            .collect();
        self.node(r, children)
    }

    /// True when `tree` is a derivation of this grammar from its root symbol
    /// within the depth limit.
    pub fn derives(&self, tree: &SyntaxTree) -> bool {
        fn ok(g: &Grammar, t: &SyntaxTree) -> bool {
            let Some(r) = t.rule else { return false };
            let Some(rule) = g.rules.get(r) else {
                return false;
            };
            rule.head.name == t.symbol
                && rule.body.len() == t.children.len()
                && rule
                    .body
                    .iter()
                    .zip(&t.children)
                    .all(|(s, c)| match s.kind {
                        SymbolKind::TerminalCategory(cat) => {
                            c.category == Some(cat) && c.children.is_empty()
                        }
                        SymbolKind::Nonterminal => c.symbol == s.name && ok(g, c),
                    })
        }
        ok(self, tree) && tree.max_reentry() <= self.depth_limit
    }
}

enum Pending {
    T(LexicalCategory),
    Nt(usize, Rc<Vec<u8>>),
}

/// Cartesian product over shared option lists, leftmost slowest.
struct CartesianProduct<'a> {
    parts: &'a [Rc<Vec<SyntaxTree>>],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> CartesianProduct<'a> {
    fn new(parts: &'a [Rc<Vec<SyntaxTree>>]) -> Self {
        let done = parts.iter().any(|p| p.is_empty());
        CartesianProduct {
            parts,
            idx: vec![0; parts.len()],
            done,
        }
    }
}

impl Iterator for CartesianProduct<'_> {
    type Item = Vec<SyntaxTree>;
    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self
            .idx
            .iter()
            .zip(self.parts)
            .map(|(&i, p)| p[i].clone())
            .collect();
        self.done = !advance(&mut self.idx, |k| self.parts[k].len());
        Some(item)
    }
}

struct OwnedProduct {
    parts: Vec<Vec<SyntaxTree>>,
    idx: Vec<usize>,
    done: bool,
}

impl OwnedProduct {
    fn new(parts: Vec<Vec<SyntaxTree>>) -> Self {
        let done = parts.iter().any(|p| p.is_empty());
        let idx = vec![0; parts.len()];
        OwnedProduct { parts, idx, done }
    }
}

impl Iterator for OwnedProduct {
    type Item = Vec<SyntaxTree>;
    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self
            .idx
            .iter()
            .zip(&self.parts)
            .map(|(&i, p)| p[i].clone())
            .collect();
        let lens: Vec<usize> = self.parts.iter().map(Vec::len).collect();
        self.done = !advance(&mut self.idx, |k| lens[k]);
        Some(item)
    }
}

/// Odometer step with the last position fastest; false when exhausted.
fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < len(k) {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Root-to-leaf paths of a rooted DAG in depth-first order. Each vertex is
/// expanded once; reaching a vertex already on the current path is a cycle.
pub fn dfs_paths<V, F>(root: V, children: F) -> Result<Vec<Vec<V>>, CycleError>
where
    V: Clone + Eq + Hash + fmt::Debug,
    F: Fn(&V) -> Vec<V>,
{
    let mut paths = Vec::new();
    let mut visited: HashSet<V> = HashSet::new();
    // Each stack frame: vertex and the index of its next child to try.
    let mut stack: Vec<(V, Vec<V>, usize)> = Vec::new();
    visited.insert(root.clone());
    let kids = children(&root);
    stack.push((root, kids, 0));
    while let Some((_, kids, next)) = stack.last_mut() {
        if kids.is_empty() && *next == 0 {
            *next = 1;
            paths.push(stack.iter().map(|f| f.0.clone()).collect());
            continue;
        }
        if *next >= kids.len() {
            stack.pop();
            continue;
        }
        let child = kids[*next].clone();
        *next += 1;
        if stack.iter().any(|f| f.0 == child) {
            return Err(CycleError {
                vertex: format!("{child:?}"),
            });
        }
        if visited.insert(child.clone()) {
            let ck = children(&child);
            stack.push((child, ck, 0));
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LexicalCategory::*;

    #[test]
    fn single_rule_grammar() {
        let g = Grammar::parse("S -> noun").unwrap();
        let trees: Vec<_> = g.enumerate_trees().collect();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].leaves(), vec![Noun]);
        assert_eq!(g.count_trees(), 1);
    }

    #[test]
    fn annotated_sentence_rule() {
        let g =
            Grammar::parse("S(p,n) -> SN(p,n) SV(p,n)\nSN(p,n) -> noun(p,n)\nSV(p,n) -> verb(p,n)")
                .unwrap();
        assert_eq!(g.rules.len(), 3);
        let eq = g.rules[0].feature_equations();
        assert_eq!(
            eq.keys().cloned().collect::<Vec<_>>(),
            vec!["n".to_string(), "p".to_string()]
        );
    }

    #[test]
    fn load_errors() {
        assert_eq!(
            Grammar::parse("# nothing\n").unwrap_err(),
            GrammarError::Empty
        );
        assert!(matches!(
            Grammar::parse("S -> NP verb"),
            Err(GrammarError::Undefined { line: 1, .. })
        ));
        assert!(matches!(
            Grammar::parse("S -> noun\nS noun"),
            Err(GrammarError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn nested_pp_bound() {
        let src = "SN -> determiner noun\nSN -> noun\nSN -> determiner noun PP\nSN -> noun PP\nPP -> preposition SN\n";
        let g = Grammar::parse(src).unwrap();
        let trees: Vec<_> = g.enumerate_trees().collect();
        assert!(trees.iter().all(|t| t.max_reentry() <= 2));
        assert!(trees.iter().any(|t| t.max_reentry() == 2));
        // 2 flat + 2 * (2 flat inner) = 6
        assert_eq!(trees.len(), 6);
        assert_eq!(g.count_trees(), 6);
    }

    #[test]
    fn match_agrees_with_enumeration() {
        let src = "S -> SN V\nSN -> noun\nSN -> determiner noun\nSN -> noun PP\nPP -> preposition SN\nV -> verb\nV -> verb SN\n";
        let g = Grammar::parse(src).unwrap();
        let all: Vec<_> = g.enumerate_trees().collect();
        let seqs: BTreeSet<Vec<LexicalCategory>> = all.iter().map(|t| t.leaves()).collect();
        for s in seqs {
            let expect: Vec<_> = all.iter().filter(|t| t.leaves() == s).cloned().collect();
            assert_eq!(g.match_leaf_sequence(&s), expect);
        }
        assert!(g.match_leaf_sequence(&[Conjunction]).is_empty());
        for (i, t) in all.iter().enumerate() {
            assert_eq!(g.nth_tree(i as u128).as_ref(), Some(t));
        }
        assert_eq!(g.nth_tree(all.len() as u128), None);
    }

    #[test]
    fn branching_graph_paths() {
        let adj: BTreeMap<u32, Vec<u32>> =
            [(1, vec![2, 3, 4]), (2, vec![5, 6]), (4, vec![7])].into();
        let paths = dfs_paths(1, |v| adj.get(v).cloned().unwrap_or_default()).unwrap();
        assert_eq!(
            paths,
            vec![vec![1, 2, 5], vec![1, 2, 6], vec![1, 3], vec![1, 4, 7]]
        );
        assert_eq!(dfs_paths(9, |_| vec![]).unwrap(), vec![vec![9]]);
        let cyc: BTreeMap<u32, Vec<u32>> = [(1, vec![2]), (2, vec![1])].into();
        assert!(dfs_paths(1, |v| cyc.get(v).cloned().unwrap_or_default()).is_err());
    }
}
