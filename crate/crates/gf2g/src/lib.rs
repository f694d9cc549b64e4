//! Toolkit for GF(2)-grammars: context-free-style grammars whose semantics
//! count parse trees modulo 2. A word belongs to the described language iff
//! its number of parse trees in the underlying ordinary grammar is odd, so
//! alternatives act as symmetric difference and concatenation counts
//! factorizations mod 2.
//!
//! The crate provides grammar parsing and parity-preserving normalization
//! ([`grammar`]), finite language slices and parity membership ([`lang`]),
//! DFA intersection respecting parity ([`automata`]), truncated formal power
//! series over F2 ([`series`]), the split linear system relating a
//! chain-bounded language to its multivariate series ([`solver`]), and
//! analyses built on top: recurrence search, trace/block structure,
//! irreducibility search, and quotient grammars ([`analysis`]). The `gf2g`
//! binary exposes all of it ([`cli`]).

pub mod analysis;
pub mod automata;
mod bitmat;
pub mod cli;
pub mod grammar;
pub mod lang;
pub mod series;
pub mod solver;

/// Search-space cap for exhaustive searches (factor search, divisibility),
/// read from `GF2G_MAX_MONOMIALS`; the default allows 2^20 candidates.
pub fn search_cap() -> u64 {
    std::env::var("GF2G_MAX_MONOMIALS")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(1 << 20)
}
