//! Deterministic finite automata (possibly partial) and their GF(2)-product
//! with a grammar. Determinism gives each parse tree at most one consistent
//! annotation with state pairs, so the product preserves parse-tree parity:
//! the parity of w from the triple (p, A, q) equals the parity of w from A
//! when w drives p to q, and is zero otherwise.

use crate::grammar::{prune, CnfGrammar, Gf2Grammar, GrammarError, Rule, Symbol};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomataError {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("duplicate transition from {state} on {letter}")]
    DuplicateTransition { state: String, letter: char },
    #[error("missing start state")]
    NoStart,
    #[error("grammar alphabet is not contained in the automaton alphabet")]
    AlphabetMismatch,
    #[error("chain letters must be distinct")]
    RepeatedChainLetter,
    #[error("automaton is not a chain")]
    NotAChain,
    #[error("digit automaton must use only letters 0 and 1")]
    NotBinary,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// A DFA, possibly partial: a missing transition rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<char>,
    pub delta: BTreeMap<(String, char), String>,
    pub start: String,
    pub accepting: BTreeSet<String>,
}

impl Dfa {
    pub fn step(&self, state: &str, letter: char) -> Option<&str> {
        self.delta
            .get(&(state.to_string(), letter))
            .map(|s| s.as_str())
    }

    pub fn run(&self, w: &str) -> Option<&str> {
        let mut cur = self.start.as_str();
        for c in w.chars() {
            cur = self.step(cur, c)?;
        }
        Some(cur)
    }

    pub fn accepts(&self, w: &str) -> bool {
        self.run(w).is_some_and(|q| self.accepting.contains(q))
    }

    /// Recognizes a chain automaton: states q_1..q_k, all accepting, start
    /// q_1, transitions exactly delta(q_i, a_j) = q_j for j >= i. Returns the
    /// ordered (state, letter) pairs.
    pub fn as_chain(&self) -> Option<Vec<(String, char)>> {
        let k = self.states.len();
        if k == 0 || self.accepting != self.states {
            return None;
        }
        // position i has outdegree k - i and loops on its own letter
        let mut order: Vec<(String, char)> = Vec::with_capacity(k);
        for i in 0..k {
            let at_deg: Vec<&String> = self
                .states
                .iter()
                .filter(|s| self.delta.keys().filter(|(a, _)| a == *s).count() == k - i)
                .collect();
            let [s] = at_deg[..] else { return None };
            let loops: Vec<char> = self
                .delta
                .iter()
                .filter(|((a, _), t)| a == s && t == &s)
                .map(|((_, c), _)| *c)
                .collect();
            let [letter] = loops[..] else { return None };
            order.push((s.clone(), letter));
        }
        if order[0].0 == self.start && chain_delta(&order) == self.delta {
            Some(order)
        } else {
            None
        }
    }
}

fn chain_delta(order: &[(String, char)]) -> BTreeMap<(String, char), String> {
    let mut delta = BTreeMap::new();
    for (i, (s, _)) in order.iter().enumerate() {
        for (t, c) in order.iter().skip(i) {
            delta.insert((s.clone(), *c), t.clone());
        }
    }
    delta
}

impl fmt::Display for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_dfa(self))
    }
}

/// Builds the chain DFA for letters a_1..a_k: states q_{a_i}, all accepting,
/// delta(q_i, a_j) = q_j exactly when j >= i. Its language is a_1*..a_k*.
pub fn build_chain_dfa(letters: &[char]) -> Result<Dfa, AutomataError> {
    let set: BTreeSet<char> = letters.iter().copied().collect();
    if set.len() != letters.len() || letters.is_empty() {
        return Err(AutomataError::RepeatedChainLetter);
    }
    let order: Vec<(String, char)> = letters
        .iter()
        .map(|&c| (format!("q_{c}"), c))
        .collect();
    let states: BTreeSet<String> = order.iter().map(|(s, _)| s.clone()).collect();
    Ok(Dfa {
        delta: chain_delta(&order),
        start: order[0].0.clone(),
        accepting: states.clone(),
        states,
        alphabet: set,
    })
}

/// Chain DFA completed with a rejecting-side sink that is the only accepting
/// state: recognizes the complement of a_1*..a_k* over the same alphabet.
pub(crate) fn chain_complement_dfa(letters: &[char]) -> Result<Dfa, AutomataError> {
    let mut d = build_chain_dfa(letters)?;
    let sink = "q_out".to_string();
    d.states.insert(sink.clone());
    let states: Vec<String> = d.states.iter().cloned().collect();
    for s in &states {
        for &c in letters {
            d.delta.entry((s.clone(), c)).or_insert_with(|| sink.clone());
        }
    }
    d.accepting = [sink].into_iter().collect();
    Ok(d)
}

/// Parses the DFA text format: `state <name> [accept]`, `start <name>`,
/// `edge <src> <letter> <dst>`, with `#` comments.
pub fn parse_dfa(text: &str) -> Result<Dfa, AutomataError> {
    let mut states = BTreeSet::new();
    let mut accepting = BTreeSet::new();
    let mut start = None;
    let mut edges: Vec<(String, char, String, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "state" => match toks.len() {
                2 => {
                    states.insert(toks[1].to_string());
                }
                3 if toks[2] == "accept" => {
                    states.insert(toks[1].to_string());
                    accepting.insert(toks[1].to_string());
                }
                _ => {
                    return Err(AutomataError::Syntax {
                        line: lineno,
                        msg: "state <name> [accept]".into(),
                    })
                }
            },
            "start" => {
                if toks.len() != 2 {
                    return Err(AutomataError::Syntax {
                        line: lineno,
                        msg: "start <name>".into(),
                    });
                }
                start = Some(toks[1].to_string());
            }
            "edge" => {
                if toks.len() != 4 || toks[2].chars().count() != 1 {
                    return Err(AutomataError::Syntax {
                        line: lineno,
                        msg: "edge <src> <letter> <dst>".into(),
                    });
                }
                edges.push((
                    toks[1].to_string(),
                    toks[2].chars().next().unwrap(),
                    toks[3].to_string(),
                    lineno,
                ));
            }
            other => {
                return Err(AutomataError::Syntax {
                    line: lineno,
                    msg: format!("unknown directive {other}"),
                })
            }
        }
    }
    let start = start.ok_or(AutomataError::NoStart)?;
    if !states.contains(&start) {
        return Err(AutomataError::UnknownState(start));
    }
    let mut delta = BTreeMap::new();
    let mut alphabet = BTreeSet::new();
    for (src, c, dst, _line) in edges {
        if !states.contains(&src) {
            return Err(AutomataError::UnknownState(src));
        }
        if !states.contains(&dst) {
            return Err(AutomataError::UnknownState(dst));
        }
        alphabet.insert(c);
        if delta.insert((src.clone(), c), dst).is_some() {
            return Err(AutomataError::DuplicateTransition { state: src, letter: c });
        }
    }
    Ok(Dfa {
        states,
        alphabet,
        delta,
        start,
        accepting,
    })
}

pub fn format_dfa(d: &Dfa) -> String {
    let mut out = String::new();
    for s in &d.states {
        if d.accepting.contains(s) {
            out.push_str(&format!("state {s} accept\n"));
        } else {
            out.push_str(&format!("state {s}\n"));
        }
    }
    out.push_str(&format!("start {}\n", d.start));
    for ((src, c), dst) in &d.delta {
        out.push_str(&format!("edge {src} {c} {dst}\n"));
    }
    out
}

/// A nonterminal of the product grammar: `orig` between states `from`, `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub from: String,
    pub orig: String,
    pub to: String,
}

/// The product grammar with its triple bookkeeping.
#[derive(Debug, Clone)]
pub struct IntersectedGrammar {
    pub cnf: CnfGrammar,
    /// Surviving triple nonterminals, keyed by their `p.A.q` name.
    pub triples: BTreeMap<String, Triple>,
    pub dfa: Dfa,
}

pub(crate) fn triple_name(p: &str, a: &str, q: &str) -> String {
    format!("{p}.{a}.{q}")
}

/// GF(2)-preserving product of a normal-form grammar with a DFA. The result
/// accepts w with parity equal to (parity of w in g) AND (w in L(m)); its
/// eps_parity is g's when the start state accepts. Unreachable and
/// unproductive triples are pruned; the fresh start inlines the rules of
/// every (start, S, f) with f accepting, which cannot collide because the
/// triple names embed f and a deterministic automaton sends no word to two
/// accepting states.
pub fn intersect_gf2(g: &CnfGrammar, m: &Dfa) -> Result<IntersectedGrammar, AutomataError> {
    let raw = intersect_gf2_raw(g, m)?;
    let pruned = prune(raw.cnf.grammar());
    let eps = raw.cnf.eps_parity;
    let triples = raw
        .triples
        .into_iter()
        .filter(|(name, _)| pruned.nonterminals.contains(name))
        .collect();
    Ok(IntersectedGrammar {
        cnf: CnfGrammar::wrap(pruned, eps)?,
        triples,
        dfa: raw.dfa,
    })
}

/// The unpruned product; exposed so tests can confirm pruning changes
/// nothing about the parity language.
pub fn intersect_gf2_raw(g: &CnfGrammar, m: &Dfa) -> Result<IntersectedGrammar, AutomataError> {
    if !g.alphabet().is_subset(&m.alphabet) {
        return Err(AutomataError::AlphabetMismatch);
    }
    let states: Vec<&String> = m.states.iter().collect();
    let mut rules: BTreeSet<Rule> = BTreeSet::new();
    let mut triples: BTreeMap<String, Triple> = BTreeMap::new();
    let mut note = |p: &str, a: &str, q: &str| -> String {
        let name = triple_name(p, a, q);
        triples.entry(name.clone()).or_insert_with(|| Triple {
            from: p.to_string(),
            orig: a.to_string(),
            to: q.to_string(),
        });
        name
    };
    for (a, b, c) in g.binary_rules() {
        for &p in &states {
            for &r in &states {
                for &q in &states {
                    rules.insert(Rule {
                        lhs: note(p, a, q),
                        body: vec![
                            Symbol::Nonterminal(note(p, b, r)),
                            Symbol::Nonterminal(note(r, c, q)),
                        ],
                    });
                }
            }
        }
    }
    for (a, t) in g.terminal_rules() {
        for &p in &states {
            if let Some(q) = m.step(p, t) {
                rules.insert(Rule {
                    lhs: note(p, a, q),
                    body: vec![Symbol::Terminal(t)],
                });
            }
        }
    }
    // fresh start: inline the rules of every accepting start triple
    let start_name = "S'".to_string();
    let mut start_rules: BTreeSet<Rule> = BTreeSet::new();
    for f in &m.accepting {
        let src = triple_name(&m.start, g.start(), f);
        for r in rules.iter().filter(|r| r.lhs == src) {
            let rule = Rule {
                lhs: start_name.clone(),
                body: r.body.clone(),
            };
            debug_assert!(!start_rules.contains(&rule));
            start_rules.insert(rule);
        }
    }
    rules.extend(start_rules);
    let mut nonterminals: BTreeSet<String> = triples.keys().cloned().collect();
    nonterminals.insert(start_name.clone());
    let base = Gf2Grammar {
        alphabet: g.alphabet().clone(),
        nonterminals,
        rules,
        start: start_name,
    };
    let eps_parity = g.eps_parity && m.accepting.contains(&m.start);
    Ok(IntersectedGrammar {
        cnf: CnfGrammar::wrap(base, eps_parity)?,
        triples,
        dfa: m.clone(),
    })
}

/// View of the product triples of a chain DFA, organized by span (i, j) of
/// 0-based chain positions. Members of a span (i, j) nonterminal lie in
/// a_i* .. a_{j-1}* a_j+ (and in a_i+ when i = j).
#[derive(Debug, Clone)]
pub struct TypedView {
    /// Chain order: state name and letter per position.
    pub chain: Vec<(String, char)>,
    /// (i, j) -> triple names with that span.
    pub classes: BTreeMap<(usize, usize), Vec<String>>,
    /// (original nonterminal, (i, j)) -> triple name.
    pub by_orig: BTreeMap<(String, (usize, usize)), String>,
}

impl TypedView {
    pub fn triple_of(&self, orig: &str, span: (usize, usize)) -> Option<&str> {
        self.by_orig
            .get(&(orig.to_string(), span))
            .map(|s| s.as_str())
    }
}

/// Classifies the triples of a chain-DFA product by state span.
pub fn split_types(ig: &IntersectedGrammar) -> Result<TypedView, AutomataError> {
    let chain = ig.dfa.as_chain().ok_or(AutomataError::NotAChain)?;
    let pos: BTreeMap<&str, usize> = chain
        .iter()
        .enumerate()
        .map(|(i, (s, _))| (s.as_str(), i))
        .collect();
    let mut classes: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    let mut by_orig = BTreeMap::new();
    for (name, t) in &ig.triples {
        let span = (pos[t.from.as_str()], pos[t.to.as_str()]);
        classes.entry(span).or_default().push(name.clone());
        by_orig.insert((t.orig.clone(), span), name.clone());
    }
    Ok(TypedView {
        chain,
        classes,
        by_orig,
    })
}

/// A DFA over {0, 1} reading most-significant-bit-first binary; represents a
/// set of natural numbers. Zero is the empty string, and queries never carry
/// a leading zero by construction of the digit expansion.
#[derive(Debug, Clone)]
pub struct DigitDfa(pub Dfa);

impl DigitDfa {
    pub fn new(d: Dfa) -> Result<Self, AutomataError> {
        if !d.alphabet.is_subset(&['0', '1'].into_iter().collect()) {
            return Err(AutomataError::NotBinary);
        }
        Ok(DigitDfa(d))
    }

    /// Fixture automaton for the powers of two: accepts 1 0*.
    pub fn powers_of_two() -> Self {
        let text = "\
state first
state rest accept
start first
edge first 1 rest
edge rest 0 rest
";
        DigitDfa(parse_dfa(text).expect("fixture parses"))
    }
}

/// Membership of n in the set represented by a digit automaton.
pub fn automatic_member(d: &DigitDfa, n: u64) -> bool {
    let digits = if n == 0 {
        String::new()
    } else {
        format!("{n:b}")
    };
    d.0.accepts(&digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, to_cnf};
    use crate::lang::{enumerate, ParityCyk};

    #[test]
    fn chain_dfa_accepts_sorted_words() {
        let d = build_chain_dfa(&['a', 'b', 'c']).unwrap();
        assert!(d.accepts(""));
        assert!(d.accepts("abbc"));
        assert!(d.accepts("ac"));
        assert!(!d.accepts("aba"));
        assert!(!d.accepts("ca"));
    }

    #[test]
    fn chain_dfa_round_trips_and_is_recognized() {
        for letters in [vec!['a'], vec!['a', 'b'], vec!['a', 'b', 'c']] {
            let d = build_chain_dfa(&letters).unwrap();
            let parsed = parse_dfa(&format_dfa(&d)).unwrap();
            assert_eq!(parsed, d);
            let chain = parsed.as_chain().unwrap();
            let got: Vec<char> = chain.iter().map(|(_, c)| *c).collect();
            assert_eq!(got, letters);
        }
    }

    #[test]
    fn non_chain_is_rejected() {
        let mut d = build_chain_dfa(&['a', 'b']).unwrap();
        d.accepting.remove("q_a");
        assert!(d.as_chain().is_none());
        let d2 = DigitDfa::powers_of_two().0;
        assert!(d2.as_chain().is_none());
    }

    #[test]
    fn complement_dfa_is_the_set_difference() {
        let d = build_chain_dfa(&['a', 'b']).unwrap();
        let c = chain_complement_dfa(&['a', 'b']).unwrap();
        for w in ["", "a", "b", "ab", "ba", "aab", "bab", "abab"] {
            assert_eq!(c.accepts(w), !d.accepts(w), "word {w:?}");
        }
    }

    #[test]
    fn one_state_intersection_is_identity() {
        let g = to_cnf(&parse_grammar("start S\nS -> S S (+) a\n").unwrap()).unwrap();
        let m = build_chain_dfa(&['a']).unwrap();
        let ig = intersect_gf2(&g, &m).unwrap();
        let before = enumerate(&g, 16);
        let after = enumerate(&ig.cnf, 16);
        assert_eq!(before.words, after.words);
    }

    #[test]
    fn intersection_filters_to_the_chain() {
        let g = to_cnf(&parse_grammar("start S\nS -> a S b (+) eps (+) b a\n").unwrap()).unwrap();
        let m = build_chain_dfa(&['a', 'b']).unwrap();
        let ig = intersect_gf2(&g, &m).unwrap();
        assert!(ig.cnf.eps_parity);
        let s = enumerate(&ig.cnf, 8);
        let got: Vec<String> = s.words.iter().map(|w| w.0.clone()).collect();
        assert_eq!(got, vec!["", "ab", "aabb", "aaabbb", "aaaabbbb"]);
    }

    #[test]
    fn intersection_parity_identity_on_words() {
        let g = to_cnf(&parse_grammar(
            "start S\nS -> A (+) C\nA -> a A (+) B\nB -> b B c (+) eps\nC -> C c (+) D\nD -> a D b (+) eps\n",
        )
        .unwrap())
        .unwrap();
        let m = build_chain_dfa(&['a', 'b', 'c']).unwrap();
        let ig = intersect_gf2(&g, &m).unwrap();
        let gk = ParityCyk::new(&g);
        let ik = ParityCyk::new(&ig.cnf);
        let mut stack = vec![String::new()];
        while let Some(w) = stack.pop() {
            if !w.is_empty() {
                let expected = gk.parity(&w).unwrap() && m.accepts(&w);
                assert_eq!(ik.parity(&w).unwrap(), expected, "word {w:?}");
            }
            if w.len() < 6 {
                for c in ['a', 'b', 'c'] {
                    stack.push(format!("{w}{c}"));
                }
            }
        }
    }

    #[test]
    fn pruning_preserves_the_parity_language() {
        let g = to_cnf(&parse_grammar("start S\nS -> a S b (+) a b\n").unwrap()).unwrap();
        let m = build_chain_dfa(&['a', 'b']).unwrap();
        let pruned = intersect_gf2(&g, &m).unwrap();
        let raw = intersect_gf2_raw(&g, &m).unwrap();
        assert_eq!(
            enumerate(&pruned.cnf, 10).words,
            enumerate(&raw.cnf, 10).words
        );
        assert!(pruned.triples.len() < raw.triples.len());
    }

    #[test]
    fn split_types_has_expected_spans() {
        let g = to_cnf(&parse_grammar("start S\nS -> a S b (+) a b\n").unwrap()).unwrap();
        let m = build_chain_dfa(&['a', 'b']).unwrap();
        let ig = intersect_gf2(&g, &m).unwrap();
        let view = split_types(&ig).unwrap();
        // spans observed among surviving triples of a 2-chain
        for span in view.classes.keys() {
            assert!(span.0 <= span.1 && span.1 <= 1);
        }
        // members of each class match the span pattern
        let slices = crate::lang::enumerate_all(&ig.cnf, 10);
        for (span, names) in &view.classes {
            for name in names {
                for w in &slices[name].words {
                    let (i, j) = *span;
                    assert!(span_pattern_matches(&view, *span, &w.0), "span {i}..{j} word {w}");
                }
            }
        }
    }

    fn span_pattern_matches(view: &TypedView, (i, j): (usize, usize), w: &str) -> bool {
        // a_i* .. a_{j-1}* a_j+ ; for i == j this is a_i+
        let letters: Vec<char> = view.chain[i..=j].iter().map(|(_, c)| *c).collect();
        let mut pos = 0usize;
        let chars: Vec<char> = w.chars().collect();
        for &l in &letters {
            while pos < chars.len() && chars[pos] == l {
                pos += 1;
            }
        }
        pos == chars.len() && w.ends_with(*letters.last().unwrap())
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let g = to_cnf(&parse_grammar("start S\nS -> a S b (+) a b\n").unwrap()).unwrap();
        let m = build_chain_dfa(&['a']).unwrap();
        assert_eq!(
            intersect_gf2(&g, &m).unwrap_err(),
            AutomataError::AlphabetMismatch
        );
    }

    #[test]
    fn digit_dfa_powers_of_two() {
        let d = DigitDfa::powers_of_two();
        assert!(automatic_member(&d, 8));
        assert!(automatic_member(&d, 1));
        assert!(!automatic_member(&d, 6));
        assert!(!automatic_member(&d, 0));
        let members: Vec<u64> = (0..=64).filter(|&n| automatic_member(&d, n)).collect();
        assert_eq!(members, vec![1, 2, 4, 8, 16, 32, 64]);
    }

    #[test]
    fn digit_dfa_agrees_with_the_doubling_grammar() {
        let d = DigitDfa::powers_of_two();
        let g = to_cnf(&parse_grammar("start S\nS -> S S (+) a\n").unwrap()).unwrap();
        let s = enumerate(&g, 64);
        for n in 0..=64u64 {
            assert_eq!(
                automatic_member(&d, n),
                s.contains(&"a".repeat(n as usize)),
                "n = {n}"
            );
        }
    }
}
