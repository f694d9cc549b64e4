//! GF(2)-grammar representation, text format, well-formedness validation,
//! and parity-preserving conversion to Chomsky normal form.
//!
//! A grammar's rule set is kept XOR-canonical: a rule is either present or
//! absent, and adding a rule that is already present cancels it. All
//! transformations here preserve, for every word, the parity of its parse
//! tree count in the underlying ordinary grammar.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

/// A terminal letter or a nonterminal name inside a rule body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Terminal(char),
    Nonterminal(String),
}

impl Symbol {
    pub fn nt(name: &str) -> Self {
        Symbol::Nonterminal(name.to_string())
    }

    pub fn as_nonterminal(&self) -> Option<&str> {
        match self {
            Symbol::Nonterminal(n) => Some(n),
            Symbol::Terminal(_) => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(t) => write!(f, "{t}"),
            Symbol::Nonterminal(n) => write!(f, "{n}"),
        }
    }
}

/// One rule `lhs -> body`; an empty body is the eps rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub lhs: String,
    pub body: Vec<Symbol>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, body_to_string(&self.body))
    }
}

fn body_to_string(body: &[Symbol]) -> String {
    if body.is_empty() {
        "eps".to_string()
    } else {
        body.iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undefined nonterminal {name} at line {line}, column {col}")]
    UndefinedNonterminal { name: String, line: usize, col: usize },
    #[error("empty grammar file")]
    EmptyFile,
    #[error("missing start directive")]
    NoStart,
    #[error("duplicate start directive at line {line}")]
    DuplicateStart { line: usize },
    #[error("grammar is not well-formed: {0}")]
    IllFormed(String),
    #[error("internal normalization invariant failed: {0}")]
    Internal(String),
}

/// A GF(2)-grammar with an XOR-canonical rule set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Grammar {
    pub alphabet: BTreeSet<char>,
    pub nonterminals: BTreeSet<String>,
    pub rules: BTreeSet<Rule>,
    pub start: String,
}

impl Gf2Grammar {
    /// Builds a grammar from parts, deriving bookkeeping sets from the rules.
    pub fn from_rules(start: &str, rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut g = Gf2Grammar {
            alphabet: BTreeSet::new(),
            nonterminals: BTreeSet::new(),
            rules: BTreeSet::new(),
            start: start.to_string(),
        };
        g.nonterminals.insert(start.to_string());
        for r in rules {
            g.nonterminals.insert(r.lhs.clone());
            for s in &r.body {
                match s {
                    Symbol::Terminal(t) => {
                        g.alphabet.insert(*t);
                    }
                    Symbol::Nonterminal(n) => {
                        g.nonterminals.insert(n.clone());
                    }
                }
            }
            g.toggle_rule(r);
        }
        g
    }

    /// XOR-adds a rule: inserts it, or removes it if already present.
    /// Returns true when the call cancelled an existing rule.
    pub fn toggle_rule(&mut self, rule: Rule) -> bool {
        if self.rules.contains(&rule) {
            self.rules.remove(&rule);
            true
        } else {
            self.rules.insert(rule);
            false
        }
    }

    /// Inserts a rule if absent (definition semantics; never cancels).
    pub fn ensure_rule(&mut self, rule: Rule) {
        self.rules.insert(rule);
    }

    pub fn rules_of<'a>(&'a self, nt: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.lhs == nt)
    }

    pub(crate) fn fresh_name(&self, base: &str) -> String {
        if !self.nonterminals.contains(base) {
            return base.to_string();
        }
        let mut i = 1usize;
        loop {
            let cand = format!("{base}_{i}");
            if !self.nonterminals.contains(&cand) {
                return cand;
            }
            i += 1;
        }
    }
}

impl fmt::Display for Gf2Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_grammar(self))
    }
}

/// Parses the grammar text format. See `parse_grammar_with_warnings` for the
/// variant that also reports rule cancellations.
pub fn parse_grammar(text: &str) -> Result<Gf2Grammar, GrammarError> {
    parse_grammar_with_warnings(text).map(|(g, _)| g)
}

/// Parses the grammar text format:
/// `#` starts a comment, `start <NT>` names the start symbol, and each rule
/// line is `A -> body ( (+) body )*` where a body is a whitespace-separated
/// symbol sequence or the keyword `eps`. Terminals are single lowercase
/// letters; nonterminal names match `[A-Z][A-Za-z0-9_]*`. Rule lines for the
/// same nonterminal XOR-merge; each pairwise cancellation yields a warning.
pub fn parse_grammar_with_warnings(
    text: &str,
) -> Result<(Gf2Grammar, Vec<String>), GrammarError> {
    let mut start: Option<(String, usize)> = None;
    let mut rules: BTreeSet<Rule> = BTreeSet::new();
    let mut lhs_set: BTreeSet<String> = BTreeSet::new();
    // body occurrences of nonterminals, for the undefined-nonterminal check
    let mut body_nts: Vec<(String, usize, usize)> = Vec::new();
    let mut alphabet: BTreeSet<char> = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut saw_content = false;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        saw_content = true;
        let (first, first_col) = &tokens[0];

        if first == "start" {
            if tokens.len() != 2 {
                return Err(GrammarError::Syntax {
                    line: lineno,
                    col: *first_col,
                    msg: "start directive takes exactly one nonterminal".into(),
                });
            }
            let (name, col) = &tokens[1];
            if !is_nonterminal_name(name) {
                return Err(GrammarError::Syntax {
                    line: lineno,
                    col: *col,
                    msg: format!("invalid nonterminal name {name}"),
                });
            }
            if start.is_some() {
                return Err(GrammarError::DuplicateStart { line: lineno });
            }
            start = Some((name.clone(), lineno));
            continue;
        }

        // rule line: NT -> alt ( (+) alt )*
        if !is_nonterminal_name(first) {
            return Err(GrammarError::Syntax {
                line: lineno,
                col: *first_col,
                msg: format!("expected nonterminal or start directive, found {first}"),
            });
        }
        if tokens.len() < 2 || tokens[1].0 != "->" {
            let col = tokens.get(1).map(|t| t.1).unwrap_or(*first_col);
            return Err(GrammarError::Syntax {
                line: lineno,
                col,
                msg: "expected -> after rule head".into(),
            });
        }
        let lhs = first.clone();
        lhs_set.insert(lhs.clone());

        let mut alts: Vec<Vec<(String, usize)>> = vec![Vec::new()];
        for tok in &tokens[2..] {
            if tok.0 == "(+)" {
                alts.push(Vec::new());
            } else {
                alts.last_mut().unwrap().push(tok.clone());
            }
        }
        for alt in alts {
            if alt.is_empty() {
                return Err(GrammarError::Syntax {
                    line: lineno,
                    col: *first_col,
                    msg: "empty alternative".into(),
                });
            }
            let body = if alt.len() == 1 && alt[0].0 == "eps" {
                Vec::new()
            } else {
                let mut body = Vec::with_capacity(alt.len());
                for (tok, col) in &alt {
                    if tok == "eps" {
                        return Err(GrammarError::Syntax {
                            line: lineno,
                            col: *col,
                            msg: "eps must stand alone in an alternative".into(),
                        });
                    } else if tok.len() == 1
                        && tok.chars().next().unwrap().is_ascii_lowercase()
                    {
                        let t = tok.chars().next().unwrap();
                        alphabet.insert(t);
                        body.push(Symbol::Terminal(t));
                    } else if is_nonterminal_name(tok) {
                        body_nts.push((tok.clone(), lineno, *col));
                        body.push(Symbol::Nonterminal(tok.clone()));
                    } else {
                        return Err(GrammarError::Syntax {
                            line: lineno,
                            col: *col,
                            msg: format!("invalid symbol {tok}"),
                        });
                    }
                }
                body
            };
            let rule = Rule { lhs: lhs.clone(), body };
            if rules.contains(&rule) {
                rules.remove(&rule);
                warnings.push(format!(
                    "line {lineno}: rule {rule} cancels an identical earlier rule"
                ));
            } else {
                rules.insert(rule);
            }
        }
    }

    if !saw_content {
        return Err(GrammarError::EmptyFile);
    }
    let (start, _) = start.ok_or(GrammarError::NoStart)?;

    for (name, line, col) in &body_nts {
        if !lhs_set.contains(name) && *name != start {
            return Err(GrammarError::UndefinedNonterminal {
                name: name.clone(),
                line: *line,
                col: *col,
            });
        }
    }

    let mut nonterminals = lhs_set;
    nonterminals.insert(start.clone());
    Ok((
        Gf2Grammar {
            alphabet,
            nonterminals,
            rules,
            start,
        },
        warnings,
    ))
}

fn tokenize(line: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_col = 0usize;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push((std::mem::take(&mut cur), cur_col + 1));
            }
        } else {
            if cur.is_empty() {
                cur_col = i;
            }
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push((cur, cur_col + 1));
    }
    out
}

fn is_nonterminal_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Renders a grammar in the text format: the start directive, then one line
/// per nonterminal with its alternatives joined by `(+)`. Nonterminals with
/// no rules print nothing, so they survive a round-trip only if referenced.
pub fn format_grammar(g: &Gf2Grammar) -> String {
    let mut out = format!("start {}\n", g.start);
    for nt in &g.nonterminals {
        let bodies: Vec<String> = g.rules_of(nt).map(|r| body_to_string(&r.body)).collect();
        if !bodies.is_empty() {
            out.push_str(&format!("{nt} -> {}\n", bodies.join(" (+) ")));
        }
    }
    out
}

/// Well-formedness evidence: the parse-tree count of every word is finite
/// iff both derivation graphs below are acyclic.
#[derive(Debug, Clone)]
pub struct WellformednessReport {
    pub accepted: bool,
    pub nullable: BTreeSet<String>,
    pub reachable: BTreeSet<String>,
    pub productive: BTreeSet<String>,
    /// Cycle in the graph with an edge A -> X_i for each rule A -> X_1..X_n
    /// where X_i is a nonterminal and every other X_j is nullable,
    /// restricted to reachable productive nonterminals.
    pub derivation_cycle: Option<Vec<String>>,
    /// Cycle among nullable symbols through all-nullable rule bodies
    /// (infinitely many parse trees of the empty word).
    pub nullable_cycle: Option<Vec<String>>,
}

/// Decides whether every word has finitely many parse trees in the
/// underlying ordinary grammar, reporting an offending cycle if not.
pub fn validate_wellformed(g: &Gf2Grammar) -> WellformednessReport {
    let nullable = nullable_set(g);
    let productive = productive_set(g);
    let reachable = reachable_set(g, &productive);
    let live: BTreeSet<String> = reachable.intersection(&productive).cloned().collect();

    // edge A -> X_i when every other body symbol can derive eps
    let mut deriv_edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut null_edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &g.rules {
        if !live.contains(&r.lhs) {
            continue;
        }
        let all_null = r.body.iter().all(|s| match s {
            Symbol::Terminal(_) => false,
            Symbol::Nonterminal(n) => nullable.contains(n),
        });
        for (i, s) in r.body.iter().enumerate() {
            let Symbol::Nonterminal(n) = s else { continue };
            if !live.contains(n) {
                continue;
            }
            let others_null = r.body.iter().enumerate().all(|(j, s2)| {
                j == i
                    || match s2 {
                        Symbol::Terminal(_) => false,
                        Symbol::Nonterminal(m) => nullable.contains(m),
                    }
            });
            if others_null {
                deriv_edges.entry(r.lhs.clone()).or_default().insert(n.clone());
            }
            if all_null {
                null_edges.entry(r.lhs.clone()).or_default().insert(n.clone());
            }
        }
    }

    let derivation_cycle = find_cycle(&live, &deriv_edges);
    let nullable_cycle = find_cycle(&live, &null_edges);
    WellformednessReport {
        accepted: derivation_cycle.is_none() && nullable_cycle.is_none(),
        nullable,
        reachable,
        productive,
        derivation_cycle,
        nullable_cycle,
    }
}

/// Nonterminals that derive the empty word at least once.
pub(crate) fn nullable_set(g: &Gf2Grammar) -> BTreeSet<String> {
    let mut nullable: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in &g.rules {
            if nullable.contains(&r.lhs) {
                continue;
            }
            let ok = r.body.iter().all(|s| match s {
                Symbol::Terminal(_) => false,
                Symbol::Nonterminal(n) => nullable.contains(n),
            });
            if ok {
                nullable.insert(r.lhs.clone());
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// Nonterminals that derive at least one string (possibly empty).
fn productive_set(g: &Gf2Grammar) -> BTreeSet<String> {
    let mut prod: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in &g.rules {
            if prod.contains(&r.lhs) {
                continue;
            }
            let ok = r.body.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(n) => prod.contains(n),
            });
            if ok {
                prod.insert(r.lhs.clone());
                changed = true;
            }
        }
        if !changed {
            return prod;
        }
    }
}

/// Nonterminals reachable from the start through rules whose symbols are all
/// productive (a rule mentioning a dead symbol never completes a tree).
fn reachable_set(g: &Gf2Grammar, productive: &BTreeSet<String>) -> BTreeSet<String> {
    let mut reach: BTreeSet<String> = BTreeSet::new();
    reach.insert(g.start.clone());
    let mut queue: VecDeque<String> = VecDeque::new();
    queue.push_back(g.start.clone());
    while let Some(nt) = queue.pop_front() {
        for r in g.rules_of(&nt) {
            let usable = r.body.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(n) => productive.contains(n),
            });
            if !usable {
                continue;
            }
            for s in &r.body {
                if let Symbol::Nonterminal(n) = s {
                    if reach.insert(n.clone()) {
                        queue.push_back(n.clone());
                    }
                }
            }
        }
    }
    reach
}

fn find_cycle(
    vertices: &BTreeSet<String>,
    edges: &BTreeMap<String, BTreeSet<String>>,
) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark: BTreeMap<&String, Mark> =
        vertices.iter().map(|v| (v, Mark::White)).collect();
    let mut stack_path: Vec<String> = Vec::new();

    fn dfs<'a>(
        v: &'a String,
        vertices: &'a BTreeSet<String>,
        edges: &'a BTreeMap<String, BTreeSet<String>>,
        mark: &mut BTreeMap<&'a String, Mark>,
        path: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        mark.insert(v, Mark::Grey);
        path.push(v.clone());
        if let Some(succs) = edges.get(v) {
            for w in succs {
                if !vertices.contains(w) {
                    continue;
                }
                let w_ref = vertices.get(w).unwrap();
                match mark.get(w_ref).copied().unwrap_or(Mark::White) {
                    Mark::Grey => {
                        let pos = path.iter().position(|x| x == w).unwrap();
                        let mut cyc = path[pos..].to_vec();
                        cyc.push(w.clone());
                        return Some(cyc);
                    }
                    Mark::White => {
                        if let Some(c) = dfs(w_ref, vertices, edges, mark, path) {
                            return Some(c);
                        }
                    }
                    Mark::Black => {}
                }
            }
        }
        path.pop();
        mark.insert(v, Mark::Black);
        None
    }

    for v in vertices {
        if mark[v] == Mark::White {
            if let Some(c) = dfs(v, vertices, edges, &mut mark, &mut stack_path) {
                return Some(c);
            }
        }
    }
    None
}

/// Parity of the number of parse trees of the empty word, per nonterminal.
/// Requires the nullable-closure graph to be acyclic (well-formed input).
pub(crate) fn eps_parity_map(g: &Gf2Grammar) -> Result<BTreeMap<String, bool>, GrammarError> {
    let nullable = nullable_set(g);
    // dependency edges: A needs e(X) for every X in an all-nullable body
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &g.rules {
        let all_null = r.body.iter().all(|s| match s {
            Symbol::Terminal(_) => false,
            Symbol::Nonterminal(n) => nullable.contains(n),
        });
        if !all_null {
            continue;
        }
        for s in &r.body {
            if let Symbol::Nonterminal(n) = s {
                edges.entry(r.lhs.clone()).or_default().insert(n.clone());
            }
        }
    }
    let order = topo_order(&g.nonterminals, &edges).ok_or_else(|| {
        GrammarError::Internal("eps-parity requested on a grammar with a nullable cycle".into())
    })?;
    let mut e: BTreeMap<String, bool> = BTreeMap::new();
    // sinks first: order is reverse-topological
    for nt in order {
        let mut parity = false;
        for r in g.rules_of(&nt) {
            let all_null = r.body.iter().all(|s| match s {
                Symbol::Terminal(_) => false,
                Symbol::Nonterminal(n) => nullable.contains(n),
            });
            if !all_null {
                continue;
            }
            let mut prod = true;
            for s in &r.body {
                if let Symbol::Nonterminal(n) = s {
                    prod &= e.get(n).copied().unwrap_or(false);
                }
            }
            parity ^= prod;
        }
        e.insert(nt, parity);
    }
    Ok(e)
}

/// Reverse-topological order (dependencies first); None on a cycle.
fn topo_order(
    vertices: &BTreeSet<String>,
    edges: &BTreeMap<String, BTreeSet<String>>,
) -> Option<Vec<String>> {
    let mut state: BTreeMap<&String, u8> = vertices.iter().map(|v| (v, 0u8)).collect();
    let mut out: Vec<String> = Vec::new();

    fn visit<'a>(
        v: &'a String,
        vertices: &'a BTreeSet<String>,
        edges: &'a BTreeMap<String, BTreeSet<String>>,
        state: &mut BTreeMap<&'a String, u8>,
        out: &mut Vec<String>,
    ) -> bool {
        match state.get(v).copied().unwrap_or(0) {
            1 => return false,
            2 => return true,
            _ => {}
        }
        state.insert(v, 1);
        if let Some(succs) = edges.get(v) {
            for w in succs {
                if let Some(w_ref) = vertices.get(w) {
                    if !visit(w_ref, vertices, edges, state, out) {
                        return false;
                    }
                }
            }
        }
        state.insert(v, 2);
        out.push(v.clone());
        true
    }

    for v in vertices {
        if !visit(v, vertices, edges, &mut state, &mut out) {
            return None;
        }
    }
    Some(out)
}

/// Drops nonterminals that are unreachable or unproductive, and every rule
/// touching one. Complete parse trees never use such symbols, so the parity
/// of every word from the start is unchanged.
pub(crate) fn prune(g: &Gf2Grammar) -> Gf2Grammar {
    let productive = productive_set(g);
    let reachable = reachable_set(g, &productive);
    let keep: BTreeSet<String> = reachable
        .intersection(&productive)
        .cloned()
        .chain(std::iter::once(g.start.clone()))
        .collect();
    let rules: BTreeSet<Rule> = g
        .rules
        .iter()
        .filter(|r| {
            keep.contains(&r.lhs)
                && r.body.iter().all(|s| match s {
                    Symbol::Terminal(_) => true,
                    Symbol::Nonterminal(n) => keep.contains(n),
                })
        })
        .cloned()
        .collect();
    Gf2Grammar {
        alphabet: g.alphabet.clone(),
        nonterminals: keep,
        rules,
        start: g.start.clone(),
    }
}

/// Chomsky-normal-form grammar: every body is a single terminal or a pair of
/// nonterminals; whether the language contains the empty word is carried in
/// `eps_parity`. The parity language on nonempty words equals the source
/// grammar's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfGrammar {
    base: Gf2Grammar,
    pub eps_parity: bool,
}

impl CnfGrammar {
    /// Wraps a grammar, checking the CNF shape restriction.
    pub fn wrap(base: Gf2Grammar, eps_parity: bool) -> Result<Self, GrammarError> {
        for r in &base.rules {
            let ok = matches!(
                r.body.as_slice(),
                [Symbol::Terminal(_)] | [Symbol::Nonterminal(_), Symbol::Nonterminal(_)]
            );
            if !ok {
                return Err(GrammarError::Internal(format!(
                    "rule {r} violates normal form"
                )));
            }
        }
        Ok(CnfGrammar { base, eps_parity })
    }

    pub fn grammar(&self) -> &Gf2Grammar {
        &self.base
    }

    pub fn start(&self) -> &str {
        &self.base.start
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.base.alphabet
    }

    pub fn nonterminals(&self) -> &BTreeSet<String> {
        &self.base.nonterminals
    }

    /// Rules `A -> t`.
    pub fn terminal_rules(&self) -> impl Iterator<Item = (&str, char)> + '_ {
        self.base.rules.iter().filter_map(|r| match r.body.as_slice() {
            [Symbol::Terminal(t)] => Some((r.lhs.as_str(), *t)),
            _ => None,
        })
    }

    /// Rules `A -> B C`.
    pub fn binary_rules(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.base.rules.iter().filter_map(|r| match r.body.as_slice() {
            [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => {
                Some((r.lhs.as_str(), b.as_str(), c.as_str()))
            }
            _ => None,
        })
    }

    /// Same grammar restarted at another nonterminal; the empty word is never
    /// in a restarted parity language (no eps rules below CNF nonterminals).
    pub fn restarted(&self, nt: &str) -> Result<CnfGrammar, GrammarError> {
        if !self.base.nonterminals.contains(nt) {
            return Err(GrammarError::Internal(format!("unknown nonterminal {nt}")));
        }
        let mut base = self.base.clone();
        base.start = nt.to_string();
        Ok(CnfGrammar {
            base: prune(&base),
            eps_parity: false,
        })
    }
}

impl fmt::Display for CnfGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", format_grammar(&self.base).trim_end())?;
        writeln!(f, "# eps_parity {}", if self.eps_parity { 1 } else { 0 })
    }
}

/// Converts to Chomsky normal form, preserving the parse-tree parity of
/// every nonempty word. Pipeline: lift terminals out of long bodies, then
/// binarize, then eliminate eps rules (each erasure weighted by the mod-2
/// count of the erased symbol's eps parses, duplicates cancelling), then
/// inline unit rules along the acyclic unit graph. Unreachable and
/// unproductive nonterminals are dropped.
pub fn to_cnf(g: &Gf2Grammar) -> Result<CnfGrammar, GrammarError> {
    let report = validate_wellformed(g);
    if !report.accepted {
        let cyc = report
            .derivation_cycle
            .or(report.nullable_cycle)
            .unwrap_or_default();
        return Err(GrammarError::IllFormed(format!(
            "derivation cycle {}",
            cyc.join(" -> ")
        )));
    }

    let mut g = prune(g);
    let eps_parity = eps_parity_map(&g)?
        .get(&g.start)
        .copied()
        .unwrap_or(false);

    // lift terminals out of bodies of length >= 2
    let mut term_helper: HashMap<char, String> = HashMap::new();
    let rules: Vec<Rule> = g.rules.iter().cloned().collect();
    let mut new_rules: BTreeSet<Rule> = BTreeSet::new();
    let mut defs: Vec<Rule> = Vec::new();
    for mut r in rules {
        if r.body.len() >= 2 {
            for s in r.body.iter_mut() {
                if let Symbol::Terminal(t) = *s {
                    let name = term_helper.entry(t).or_insert_with(|| {
                        let name = g.fresh_name(&format!("T_{t}"));
                        g.nonterminals.insert(name.clone());
                        defs.push(Rule {
                            lhs: name.clone(),
                            body: vec![Symbol::Terminal(t)],
                        });
                        name
                    });
                    *s = Symbol::Nonterminal(name.clone());
                }
            }
        }
        new_rules.insert(r);
    }
    new_rules.extend(defs);
    g.rules = new_rules;

    // binarize long bodies, sharing suffix chains; a helper is defined once,
    // so shared suffixes cannot cancel each other
    let mut suffix_helper: HashMap<Vec<Symbol>, String> = HashMap::new();
    let mut new_rules: BTreeSet<Rule> = BTreeSet::new();
    let mut work: Vec<Rule> = Vec::new();
    for r in g.rules.iter().cloned() {
        if r.body.len() <= 2 {
            new_rules.insert(r);
        } else {
            work.push(r);
        }
    }
    work.reverse();
    let mut counter = 0usize;
    while let Some(r) = work.pop() {
        let head = r.body[0].clone();
        let suffix = r.body[1..].to_vec();
        let name = match suffix_helper.get(&suffix) {
            Some(n) => n.clone(),
            None => {
                counter += 1;
                let n = g.fresh_name(&format!("Bin_{counter}"));
                g.nonterminals.insert(n.clone());
                suffix_helper.insert(suffix.clone(), n.clone());
                let def = Rule {
                    lhs: n.clone(),
                    body: suffix,
                };
                if def.body.len() <= 2 {
                    new_rules.insert(def);
                } else {
                    work.push(def);
                }
                n
            }
        };
        new_rules.insert(Rule {
            lhs: r.lhs,
            body: vec![head, Symbol::Nonterminal(name)],
        });
    }
    g.rules = new_rules;

    // eliminate eps rules: toggle in each variant that erases a subset of
    // odd-eps positions (even-parity erasures cancel and emit nothing)
    let e = eps_parity_map(&g)?;
    let mut del_rules: BTreeSet<Rule> = BTreeSet::new();
    for r in &g.rules {
        let odd_positions: Vec<usize> = r
            .body
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Symbol::Nonterminal(n) if e.get(n).copied().unwrap_or(false) => Some(i),
                _ => None,
            })
            .collect();
        let subsets = 1usize << odd_positions.len();
        for mask in 0..subsets {
            let erased: BTreeSet<usize> = odd_positions
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &pos)| pos)
                .collect();
            let body: Vec<Symbol> = r
                .body
                .iter()
                .enumerate()
                .filter(|(i, _)| !erased.contains(i))
                .map(|(_, s)| s.clone())
                .collect();
            if body.is_empty() {
                continue;
            }
            let rule = Rule {
                lhs: r.lhs.clone(),
                body,
            };
            if !del_rules.remove(&rule) {
                del_rules.insert(rule);
            }
        }
    }
    g.rules = del_rules;
    g = prune(&g);

    // inline unit rules in reverse topological order of the unit graph
    let mut unit_edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &g.rules {
        if let [Symbol::Nonterminal(b)] = r.body.as_slice() {
            unit_edges
                .entry(r.lhs.clone())
                .or_default()
                .insert(b.clone());
        }
    }
    let order = topo_order(&g.nonterminals, &unit_edges).ok_or_else(|| {
        GrammarError::Internal("unit-rule cycle survived normalization".into())
    })?;
    for nt in order {
        let units: Vec<Rule> = g
            .rules_of(&nt)
            .filter(|r| matches!(r.body.as_slice(), [Symbol::Nonterminal(_)]))
            .cloned()
            .collect();
        for u in units {
            g.rules.remove(&u);
            let Symbol::Nonterminal(target) = &u.body[0] else {
                unreachable!()
            };
            let copied: Vec<Vec<Symbol>> =
                g.rules_of(target).map(|r| r.body.clone()).collect();
            for body in copied {
                debug_assert!(!matches!(body.as_slice(), [Symbol::Nonterminal(_)]));
                let rule = Rule {
                    lhs: nt.clone(),
                    body,
                };
                g.toggle_rule(rule);
            }
        }
    }
    g = prune(&g);
    CnfGrammar::wrap(g, eps_parity)
}
