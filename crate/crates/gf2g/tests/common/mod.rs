#![allow(dead_code)]

use gf2g::grammar::{parse_grammar, to_cnf, CnfGrammar, Gf2Grammar, Symbol};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load_fixture_grammar(name: &str) -> Gf2Grammar {
    let path = fixtures_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_grammar(&text).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

pub fn load_fixture_cnf(name: &str) -> CnfGrammar {
    to_cnf(&load_fixture_grammar(name)).unwrap_or_else(|e| panic!("normalizing {name}: {e}"))
}

/// Brute-force parse-tree counter on the original (non-normalized) grammar,
/// independent of the CYK path: counts derivation trees of height at most
/// `h`, saturating. With `h` past any possible tree height of a well-formed
/// grammar this is the exact tree count.
struct TreeCounter<'a> {
    g: &'a Gf2Grammar,
    word: Vec<char>,
    nts: Vec<&'a str>,
    memo: HashMap<(usize, usize, usize, usize), u64>,
}

impl<'a> TreeCounter<'a> {
    fn count(&mut self, h: usize, nt: usize, i: usize, j: usize) -> u64 {
        if h == 0 {
            return 0;
        }
        if let Some(&c) = self.memo.get(&(h, nt, i, j)) {
            return c;
        }
        let name = self.nts[nt];
        let bodies: Vec<Vec<Symbol>> = self
            .g
            .rules_of(name)
            .map(|r| r.body.clone())
            .collect();
        let mut total = 0u64;
        for body in &bodies {
            total = total.saturating_add(self.ways(h - 1, body, i, j));
        }
        self.memo.insert((h, nt, i, j), total);
        total
    }

    /// Number of ways the symbol sequence derives word[i..j] with every
    /// nonterminal subtree of height at most h.
    fn ways(&mut self, h: usize, symbols: &[Symbol], i: usize, j: usize) -> u64 {
        match symbols.split_first() {
            None => u64::from(i == j),
            Some((Symbol::Terminal(c), rest)) => {
                if i < j && self.word[i] == *c {
                    self.ways(h, rest, i + 1, j)
                } else {
                    0
                }
            }
            Some((Symbol::Nonterminal(b), rest)) => {
                let bi = self
                    .nts
                    .iter()
                    .position(|n| n == b)
                    .expect("nonterminal is declared");
                let mut total = 0u64;
                for m in i..=j {
                    let left = self.count(h, bi, i, m);
                    if left == 0 {
                        continue;
                    }
                    total = total.saturating_add(left.saturating_mul(self.ways(h, rest, m, j)));
                }
                total
            }
        }
    }
}

/// Exact parse-tree count of `w` from the start symbol (saturating u64).
pub fn tree_count(g: &Gf2Grammar, w: &str) -> u64 {
    let word: Vec<char> = w.chars().collect();
    let nts: Vec<&str> = g.nonterminals.iter().map(|s| s.as_str()).collect();
    let cap = (nts.len() + 2) * (word.len() + 3);
    let start = nts
        .iter()
        .position(|n| *n == g.start.as_str())
        .expect("start symbol is declared");
    let len = word.len();
    let mut counter = TreeCounter {
        g,
        word,
        nts,
        memo: HashMap::new(),
    };
    counter.count(cap, start, 0, len)
}

/// The GF(2) membership oracle: odd parse-tree count.
pub fn parity_oracle(g: &Gf2Grammar, w: &str) -> bool {
    tree_count(g, w) & 1 == 1
}
