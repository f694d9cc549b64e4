//! Analyses of extracted series and bounded languages: coefficient windows
//! and linear recurrences over GF(2)[y], trace supports with their diagonal
//! band and block structure, brute-force irreducibility, quotient grammars,
//! and the slice identities behind the inherent-ambiguity corollaries.

use crate::bitmat::BitMatrix;
use crate::grammar::{
    parse_grammar, to_cnf, validate_wellformed, Gf2Grammar, GrammarError, Rule, Symbol,
};
use crate::lang::{enumerate, sym_diff, LangError, LangSlice, Word};
use crate::search_cap;
use crate::series::{Poly, SeriesError, TruncSeries};
use crate::solver::{check_chain_containment, extract_dual, SolverError};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected a series in {expected} variables, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("window start {n0} must exceed the maximum order {d_max}")]
    WindowStartTooEarly { n0: usize, d_max: usize },
    #[error("trusted window too short: have {have} rows past the start, need {need}")]
    WindowTooShort { have: usize, need: usize },
    #[error("no trusted window rows at or past the start")]
    WindowEmpty,
    #[error("search needs {needed} candidate pairs, over the cap {cap}")]
    SearchCapExceeded { needed: u128, cap: u64 },
    #[error("{0}")]
    BadInput(String),
    #[error("quotient polynomial must have constant term 1 and monomials in a, b only: {0}")]
    BadQuotientPoly(String),
    #[error("numerator language leaves a*b*: witness {0:?}")]
    NumeratorNotChain(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A two-variable series read as a sequence of polynomials: entry n collects
/// the inner-variable bits at outer exponent n. An entry is trusted when its
/// polynomial visibly fits the box (zero, or degree strictly below the inner
/// bound); an entry touching the boundary may have been clipped.
#[derive(Debug, Clone)]
pub struct CoeffWindow {
    pub outer: char,
    pub inner: char,
    pub entries: Vec<Poly>,
    pub trusted: Vec<bool>,
    pub source_box: (u32, u32),
}

impl CoeffWindow {
    /// Last index N such that entries 0..=N are all trusted.
    pub fn last_trusted(&self) -> Option<usize> {
        match self.trusted.iter().position(|t| !t) {
            Some(first_bad) => first_bad.checked_sub(1),
            None => self.trusted.len().checked_sub(1),
        }
    }
}

/// Splits a two-variable series along its first variable: entry n is the
/// polynomial in the second variable with the bits of outer exponent n.
pub fn coeff_window(f: &TruncSeries) -> Result<CoeffWindow, AnalysisError> {
    let vars = f.vars();
    if vars.len() != 2 {
        return Err(AnalysisError::WrongArity {
            expected: 2,
            got: vars.len(),
        });
    }
    let (outer, inner) = (vars[0], vars[1]);
    let (outer_bound, inner_bound) = (f.bounds()[0], f.bounds()[1]);
    let mut rows: Vec<Vec<Vec<u32>>> = vec![Vec::new(); outer_bound as usize + 1];
    for e in f.support() {
        rows[e[0] as usize].push(vec![e[1]]);
    }
    let entries: Vec<Poly> = rows
        .into_iter()
        .map(|sup| Poly::from_support(&[inner], sup.iter().map(|e| &e[..])))
        .collect();
    let trusted = entries
        .iter()
        .map(|p| p.is_zero() || p.var_degree(0) < inner_bound)
        .collect();
    Ok(CoeffWindow {
        outer,
        inner,
        entries,
        trusted,
        source_box: (outer_bound, inner_bound),
    })
}

/// A linear recurrence with polynomial coefficients over GF(2):
/// sum of polys[t] * entry(n - t) = 0 for all n in
/// [window_start, verified_through], with polys[d] nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceWitness {
    pub d: usize,
    pub polys: Vec<Poly>,
    pub window_start: usize,
    pub verified_through: usize,
}

fn poly_coeff_at(p: &Poly, j: u32) -> bool {
    p.support().any(|e| e[0] == j)
}

/// Searches for the lowest-order recurrence annihilating the trusted window
/// rows from n0 on: orders d = 0..=d_max in turn, coefficients of degree at
/// most deg_max, unknowns solved as an F2 nullspace with one constraint per
/// (row, inner power). A candidate must put something nonzero in the leading
/// block, and is re-verified by direct polynomial substitution before being
/// returned. `None` is evidence within these bounds, never a proof.
pub fn find_recurrence(
    w: &CoeffWindow,
    d_max: usize,
    deg_max: u32,
    n0: usize,
) -> Result<Option<RecurrenceWitness>, AnalysisError> {
    if n0 <= d_max {
        return Err(AnalysisError::WindowStartTooEarly { n0, d_max });
    }
    let last = w.last_trusted().ok_or(AnalysisError::WindowEmpty)?;
    if last < n0 {
        return Err(AnalysisError::WindowEmpty);
    }
    let need = (d_max + 1) * (deg_max as usize + 1);
    if last - n0 < need {
        return Err(AnalysisError::WindowTooShort {
            have: last - n0,
            need,
        });
    }
    let width = deg_max as usize + 1;
    let max_row_deg: u32 = w.entries[..=last]
        .iter()
        .map(|p| p.var_degree(0))
        .max()
        .unwrap_or(0);
    let m_max = deg_max + max_row_deg;
    for d in 0..=d_max {
        let cols = (d + 1) * width;
        let rows = (last - n0 + 1) * (m_max as usize + 1);
        let mut matrix = BitMatrix::new(rows, cols);
        let mut row = 0;
        for n in n0..=last {
            for m in 0..=m_max {
                for t in 0..=d {
                    let entry = &w.entries[n - t];
                    for e in 0..=deg_max.min(m) {
                        if poly_coeff_at(entry, m - e) {
                            matrix.set(row, t * width + e as usize, true);
                        }
                    }
                }
                row += 1;
            }
        }
        for v in matrix.nullspace() {
            if !v[d * width..].iter().any(|&b| b) {
                continue;
            }
            let polys: Vec<Poly> = (0..=d)
                .map(|t| {
                    let sup: Vec<Vec<u32>> = (0..width)
                        .filter(|&e| v[t * width + e])
                        .map(|e| vec![e as u32])
                        .collect();
                    Poly::from_support(&[w.inner], sup.iter().map(|e| &e[..]))
                })
                .collect();
            let witness = RecurrenceWitness {
                d,
                polys,
                window_start: n0,
                verified_through: last,
            };
            verify_recurrence(w, &witness)?;
            return Ok(Some(witness));
        }
    }
    Ok(None)
}

/// Direct substitution check of a recurrence over its stated window,
/// independent of the nullspace path.
pub fn verify_recurrence(w: &CoeffWindow, r: &RecurrenceWitness) -> Result<(), AnalysisError> {
    for n in r.window_start..=r.verified_through {
        let mut acc = Poly::zero(&[w.inner]);
        for (t, p) in r.polys.iter().enumerate() {
            acc = acc.add(&p.mul(&w.entries[n - t]));
        }
        if !acc.is_zero() {
            return Err(AnalysisError::Internal(format!(
                "recurrence fails substitution at row {n}"
            )));
        }
    }
    Ok(())
}

/// Diagonal band of a support set: the largest pairwise coordinate gap. A
/// band reaching the largest box bound is reported as exceeding the box —
/// truncation can no longer distinguish it from an unbounded one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Band {
    Bounded(u32),
    ExceedsBox { observed: u32 },
}

/// Exponent classes sharing a membership pattern across summands.
pub type TypeClasses = BTreeMap<Vec<bool>, Vec<u32>>;

#[derive(Debug, Clone)]
pub struct TraceReport {
    pub support: Vec<Vec<u32>>,
    pub band: Band,
    pub band_witness: Option<Vec<u32>>,
    /// For block analyses: the a-, b-, c-exponent classes by summand
    /// membership pattern, and whether trace membership was constant on
    /// class triples.
    pub classes: Option<[TypeClasses; 3]>,
    pub blocks_consistent: Option<bool>,
}

fn band_of(e: &[u32]) -> u32 {
    let max = *e.iter().max().expect("nonempty exponent vector");
    let min = *e.iter().min().expect("nonempty exponent vector");
    max - min
}

fn band_report(support: &[Vec<u32>], bounds: &[u32]) -> (Band, Option<Vec<u32>>) {
    let widest = support.iter().max_by_key(|e| band_of(e));
    match widest {
        None => (Band::Bounded(0), None),
        Some(e) => {
            let observed = band_of(e);
            let limit = *bounds.iter().max().expect("nonempty box");
            if observed >= limit {
                (Band::ExceedsBox { observed }, Some(e.clone()))
            } else {
                (Band::Bounded(observed), Some(e.clone()))
            }
        }
    }
}

/// Support and diagonal band of a three-variable series.
pub fn trace_support(f: &TruncSeries) -> Result<TraceReport, AnalysisError> {
    if f.vars().len() != 3 {
        return Err(AnalysisError::WrongArity {
            expected: 3,
            got: f.vars().len(),
        });
    }
    let support = f.support();
    let (band, band_witness) = band_report(&support, f.bounds());
    Ok(TraceReport {
        support,
        band,
        band_witness,
        classes: None,
        blocks_consistent: None,
    })
}

/// Trace of a sum of products A_i * B_i * C_i of unary series in a, b, c.
/// The coefficient at (x, y, z) is the parity of the summands containing x,
/// y and z at once, so it depends only on the three membership patterns.
/// The trace is built twice — once by expanding the products term by term,
/// once predicted from the patterns — and `blocks_consistent` records that
/// the two agree at every point of the common box.
pub fn block_check(
    summands: &[(TruncSeries, TruncSeries, TruncSeries)],
) -> Result<TraceReport, AnalysisError> {
    for (i, (a, b, c)) in summands.iter().enumerate() {
        for (s, letter) in [(a, 'a'), (b, 'b'), (c, 'c')] {
            if s.vars() != [letter] {
                return Err(AnalysisError::BadInput(format!(
                    "summand {i}: expected a unary series in {letter}, got variables {:?}",
                    s.vars()
                )));
            }
        }
    }
    type Summand = (TruncSeries, TruncSeries, TruncSeries);
    let picks: [fn(&Summand) -> &TruncSeries; 3] = [|t| &t.0, |t| &t.1, |t| &t.2];
    let bounds: Vec<u32> = picks
        .iter()
        .map(|pick| {
            summands
                .iter()
                .map(|t| pick(t).bounds()[0])
                .min()
                .unwrap_or(0)
        })
        .collect();
    // path one: expand each product A_i x B_i x C_i into toggles
    let mut trace = TruncSeries::zero(&['a', 'b', 'c'], &bounds)?;
    for (a, b, c) in summands {
        for ea in a.support().iter().filter(|e| e[0] <= bounds[0]) {
            for eb in b.support().iter().filter(|e| e[0] <= bounds[1]) {
                for ec in c.support().iter().filter(|e| e[0] <= bounds[2]) {
                    trace.toggle(&[ea[0], eb[0], ec[0]])?;
                }
            }
        }
    }
    // path two: membership patterns per axis
    let pattern = |pick: fn(&Summand) -> &TruncSeries, e: u32| -> Vec<bool> {
        summands
            .iter()
            .map(|t| pick(t).coeff(&[e]).expect("within the component box"))
            .collect()
    };
    let mut classes: [TypeClasses; 3] = [BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
    for (axis, pick) in picks.iter().enumerate() {
        for e in 0..=bounds[axis] {
            classes[axis].entry(pattern(*pick, e)).or_default().push(e);
        }
    }
    let k = summands.len();
    let mut consistent = true;
    for x in 0..=bounds[0] {
        let tx = pattern(picks[0], x);
        for y in 0..=bounds[1] {
            let ty = pattern(picks[1], y);
            for z in 0..=bounds[2] {
                let tz = pattern(picks[2], z);
                let predicted = (0..k).filter(|&i| tx[i] && ty[i] && tz[i]).count() % 2 == 1;
                if trace.coeff(&[x, y, z])? != predicted {
                    consistent = false;
                }
            }
        }
    }
    let support = trace.support();
    let (band, band_witness) = band_report(&support, &bounds);
    Ok(TraceReport {
        support,
        band,
        band_witness,
        classes: Some(classes),
        blocks_consistent: Some(consistent),
    })
}

/// Outcome of an exhaustive two-factor search.
#[derive(Debug, Clone)]
pub struct FactorizationReport {
    pub input: Poly,
    pub factors: Option<(Poly, Poly)>,
    /// True when every possible degree split was covered, making a
    /// no-factorization answer exact rather than bounded.
    pub complete: bool,
    pub pairs_tested: u64,
    pub max_total_deg: u32,
}

impl FactorizationReport {
    pub fn irreducible(&self) -> bool {
        self.factors.is_none() && self.complete
    }
}

fn monomials_within(vars_deg: &[u32], total_cap: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; vars_deg.len()];
    'walk: loop {
        if cur.iter().sum::<u32>() <= total_cap {
            out.push(cur.clone());
        }
        let mut i = vars_deg.len();
        while i > 0 {
            i -= 1;
            if cur[i] < vars_deg[i] {
                cur[i] += 1;
                continue 'walk;
            }
            cur[i] = 0;
        }
        break;
    }
    out
}

fn subset_poly(vars: &[char], monos: &[Vec<u32>], mask: u64) -> Poly {
    let chosen: Vec<&[u32]> = monos
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, e)| &e[..])
        .collect();
    Poly::from_support(vars, chosen)
}

/// Exhaustive factorization search: tries every pair of non-unit
/// polynomials over the input's variables whose total degrees sum to the
/// input's (degrees are additive over GF(2)[x..]), supports capped per
/// factor by max_total_deg and by the input's per-variable degrees. The
/// answer is complete — irreducibility, not just absence within bounds —
/// when max_total_deg covers every split, i.e. is at least deg - 1.
pub fn factor_search(p: &Poly, max_total_deg: u32) -> Result<FactorizationReport, AnalysisError> {
    if p.is_zero() {
        return Err(AnalysisError::BadInput("zero polynomial".into()));
    }
    let vars = p.vars().to_vec();
    let per_var: Vec<u32> = (0..vars.len()).map(|i| p.var_degree(i)).collect();
    let dp = p.total_degree();
    let cap = search_cap();
    let mut pairs_tested = 0u64;
    let mut complete = true;
    let mut factors = None;
    'splits: for dg in 1..=dp.saturating_sub(1) {
        let dh = dp - dg;
        if dg > dh {
            break;
        }
        if dg > max_total_deg || dh > max_total_deg {
            complete = false;
            continue;
        }
        let monos_g = monomials_within(&per_var, dg);
        let monos_h = monomials_within(&per_var, dh);
        let shift = (monos_g.len() + monos_h.len()) as u32;
        let needed = 1u128.checked_shl(shift).unwrap_or(u128::MAX);
        if needed > cap as u128 {
            // cap fits in u64, so a passing split leaves both masks below 64 bits
            return Err(AnalysisError::SearchCapExceeded { needed, cap });
        }
        for gm in 1..(1u64 << monos_g.len()) {
            let g = subset_poly(&vars, &monos_g, gm);
            if g.total_degree() != dg {
                continue;
            }
            for hm in 1..(1u64 << monos_h.len()) {
                let h = subset_poly(&vars, &monos_h, hm);
                if h.total_degree() != dh {
                    continue;
                }
                if (g.constant_term() && h.constant_term()) != p.constant_term() {
                    continue;
                }
                pairs_tested += 1;
                if g.mul(&h) == *p {
                    factors = Some((g, h));
                    break 'splits;
                }
            }
        }
    }
    Ok(FactorizationReport {
        input: p.clone(),
        factors,
        complete,
        pairs_tested,
        max_total_deg,
    })
}

/// Inputs of the quotient-grammar construction: a numerator grammar whose
/// language sits in a*b*, and a polynomial with constant term 1 whose other
/// monomials a^k b^l all have k + l > 0.
#[derive(Debug, Clone)]
pub struct QuotientWitness {
    pub numerator: Gf2Grammar,
    pub p: Poly,
}

impl QuotientWitness {
    pub fn new(numerator: Gf2Grammar, p: Poly) -> Result<Self, AnalysisError> {
        if !p.constant_term() {
            return Err(AnalysisError::BadQuotientPoly(p.to_string()));
        }
        if !p.vars().iter().all(|v| *v == 'a' || *v == 'b') {
            return Err(AnalysisError::BadQuotientPoly(p.to_string()));
        }
        let report = validate_wellformed(&numerator);
        if !report.accepted {
            return Err(AnalysisError::BadInput(
                "numerator grammar is not well-formed".into(),
            ));
        }
        Ok(QuotientWitness { numerator, p })
    }
}

/// Extends the numerator grammar with a fresh start S_new and the single
/// rule S_new -> (sum over non-constant monomials a^k b^l of
/// a^k S_new b^l) + S. Every non-constant monomial consumes at least one
/// letter around the recursion, so the result stays well-formed, and its
/// dual satisfies Dual(new) * p = Dual(numerator). Containment of the
/// numerator in a*b* is checked up to `containment_scan` (exactly, when the
/// underlying parse forest never leaves the pattern).
pub fn build_quotient_grammar(
    w: &QuotientWitness,
    containment_scan: usize,
) -> Result<Gf2Grammar, AnalysisError> {
    let cnf = to_cnf(&w.numerator)?;
    if let Some(witness) = check_chain_containment(&cnf, &['a', 'b'], containment_scan)? {
        return Err(AnalysisError::NumeratorNotChain(witness));
    }
    let mut g = w.numerator.clone();
    let s_new = g.fresh_name("S_new");
    g.nonterminals.insert(s_new.clone());
    let old_start = g.start.clone();
    g.start = s_new.clone();
    g.ensure_rule(Rule {
        lhs: s_new.clone(),
        body: vec![Symbol::Nonterminal(old_start)],
    });
    let a_pos = w.p.vars().iter().position(|&v| v == 'a');
    let b_pos = w.p.vars().iter().position(|&v| v == 'b');
    for mono in w.p.support() {
        let k = a_pos.map_or(0, |i| mono[i]);
        let l = b_pos.map_or(0, |i| mono[i]);
        if k + l == 0 {
            continue; // the constant term 1
        }
        if k > 0 {
            g.alphabet.insert('a');
        }
        if l > 0 {
            g.alphabet.insert('b');
        }
        let mut body = Vec::with_capacity(k as usize + l as usize + 1);
        body.extend(std::iter::repeat_n(Symbol::Terminal('a'), k as usize));
        body.push(Symbol::Nonterminal(s_new.clone()));
        body.extend(std::iter::repeat_n(Symbol::Terminal('b'), l as usize));
        g.ensure_rule(Rule {
            lhs: s_new.clone(),
            body,
        });
    }
    let report = validate_wellformed(&g);
    if !report.accepted {
        return Err(AnalysisError::Internal(
            "quotient grammar failed well-formedness".into(),
        ));
    }
    Ok(g)
}

/// Confirms Dual(quotient) * p = Dual(numerator) on the given box.
pub fn verify_quotient(
    w: &QuotientWitness,
    quotient: &Gf2Grammar,
    bounds: &[u32; 2],
) -> Result<bool, AnalysisError> {
    let vars = ['a', 'b'];
    let q = extract_dual(&to_cnf(quotient)?, &vars, bounds)?;
    let num = extract_dual(&to_cnf(&w.numerator)?, &vars, bounds)?;
    let p_series = w.p.embed(&vars)?.to_series(bounds)?;
    Ok(q.mul(&p_series) == num)
}

const ONE_EQUALITY_GRAMMAR: &str = "\
start S
S -> A (+) C
A -> a A (+) B
B -> b B c (+) eps
C -> C c (+) D
D -> a D b (+) eps
";

/// The grammar whose parity language is
/// { a^l b^m c^n : exactly one of l = m, m = n }.
pub fn one_equality_grammar() -> Gf2Grammar {
    parse_grammar(ONE_EQUALITY_GRAMMAR).expect("embedded grammar parses")
}

fn abc_alphabet() -> BTreeSet<char> {
    ['a', 'b', 'c'].into_iter().collect()
}

fn sorted_triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=n).flat_map(move |l| {
        (0..=n - l).flat_map(move |m| (0..=n - l - m).map(move |r| (l, m, r)))
    })
}

fn triple_word(l: usize, m: usize, r: usize) -> Word {
    Word(format!(
        "{}{}{}",
        "a".repeat(l),
        "b".repeat(m),
        "c".repeat(r)
    ))
}

fn slice_from_triples(
    n: usize,
    keep: impl Fn(usize, usize, usize) -> bool,
) -> LangSlice {
    LangSlice::new(
        abc_alphabet(),
        n,
        sorted_triples(n).filter(|&(l, m, r)| keep(l, m, r)).map(|(l, m, r)| triple_word(l, m, r)),
    )
    .expect("sorted words fit the bound")
}

/// { a^l b^m c^n : l = m or m = n }, up to length n.
pub fn union_equalities_slice(n: usize) -> LangSlice {
    slice_from_triples(n, |l, m, r| l == m || m == r)
}

/// { a^l b^m c^n : l != m or m != n }, up to length n.
pub fn off_diagonal_slice(n: usize) -> LangSlice {
    slice_from_triples(n, |l, m, r| l != m || m != r)
}

/// All of a*b*c* up to length n.
pub fn sorted_words_slice(n: usize) -> LangSlice {
    slice_from_triples(n, |_, _, _| true)
}

/// { a^t b^t c^t }, up to length n.
pub fn diagonal_slice(n: usize) -> LangSlice {
    slice_from_triples(n, |l, m, r| l == m && m == r)
}

#[derive(Debug, Clone)]
pub struct AmbiguityReport {
    pub bound: usize,
    /// (l=m or m=n) minus the exactly-one-equality language is the diagonal.
    pub union_identity_holds: bool,
    /// a*b*c* minus the some-inequality language is the diagonal.
    pub complement_identity_holds: bool,
    pub words_checked: usize,
    pub union_failure: Option<Word>,
    pub complement_failure: Option<Word>,
}

impl AmbiguityReport {
    pub fn all_hold(&self) -> bool {
        self.union_identity_holds && self.complement_identity_holds
    }
}

/// Checks, on slices of length at most n, the two identities that present
/// { a^t b^t c^t } as a symmetric difference of context-free languages:
/// once against the union-of-equalities language, once against the
/// complement-style some-inequality language.
pub fn inherent_ambiguity_report(n: usize) -> Result<AmbiguityReport, AnalysisError> {
    let xor_slice = enumerate(&to_cnf(&one_equality_grammar())?, n);
    let diag = diagonal_slice(n);
    let union_diff = sym_diff(&union_equalities_slice(n), &xor_slice)?;
    let complement_diff = sym_diff(&sorted_words_slice(n), &off_diagonal_slice(n))?;
    let first_mismatch = |got: &LangSlice| -> Result<Option<Word>, AnalysisError> {
        let delta = sym_diff(got, &diag)?;
        Ok(delta.words.iter().next().cloned())
    };
    let union_failure = first_mismatch(&union_diff)?;
    let complement_failure = first_mismatch(&complement_diff)?;
    Ok(AmbiguityReport {
        bound: n,
        union_identity_holds: union_failure.is_none(),
        complement_identity_holds: complement_failure.is_none(),
        words_checked: sorted_words_slice(n).words.len(),
        union_failure,
        complement_failure,
    })
}

/// The series sum over n of a^(2^n) b^(2^n), truncated to a square box.
pub fn power_pair_series(bound: u32) -> Result<TruncSeries, SeriesError> {
    let mut s = TruncSeries::zero(&['a', 'b'], &[bound, bound])?;
    let mut p = 1u32;
    while p <= bound {
        s.toggle(&[p, p])?;
        p *= 2;
    }
    Ok(s)
}

/// The series sum over n, m of a^n b^m c^n d^m, truncated to a cube box:
/// two independently matched letter pairs.
pub fn cross_pair_series(bound: u32) -> Result<TruncSeries, SeriesError> {
    let mut s = TruncSeries::zero(&['a', 'b', 'c', 'd'], &[bound; 4])?;
    for n in 0..=bound {
        for m in 0..=bound {
            s.toggle(&[n, m, n, m])?;
        }
    }
    Ok(s)
}

/// The diagonal sum over n of a^n b^n c^n, truncated to a cube box.
pub fn diagonal_series(bound: u32) -> Result<TruncSeries, SeriesError> {
    let mut s = TruncSeries::zero(&['a', 'b', 'c'], &[bound; 3])?;
    for n in 0..=bound {
        s.toggle(&[n, n, n])?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_poly;

    fn pairs_series(bound: u32) -> TruncSeries {
        // sum of a^n b^n
        let mut s = TruncSeries::zero(&['a', 'b'], &[bound, bound]).unwrap();
        for n in 0..=bound {
            s.toggle(&[n, n]).unwrap();
        }
        s
    }

    #[test]
    fn window_reads_rows_and_marks_trust() {
        let w = coeff_window(&pairs_series(8)).unwrap();
        assert_eq!(w.outer, 'a');
        assert_eq!(w.inner, 'b');
        assert_eq!(w.entries.len(), 9);
        for n in 0..=8usize {
            assert_eq!(w.entries[n], parse_poly(&format!("b^{n}")).unwrap());
        }
        // the boundary row b^8 may be clipped; everything below is safe
        assert!(w.trusted[..8].iter().all(|&t| t));
        assert!(!w.trusted[8]);
        assert_eq!(w.last_trusted(), Some(7));
    }

    #[test]
    fn window_requires_two_variables() {
        let s = TruncSeries::zero(&['a'], &[3]).unwrap();
        assert!(matches!(
            coeff_window(&s).unwrap_err(),
            AnalysisError::WrongArity { expected: 2, got: 1 }
        ));
    }

    #[test]
    fn window_of_power_pairs_has_sparse_rows() {
        let w = coeff_window(&power_pair_series(64).unwrap()).unwrap();
        assert_eq!(w.entries[4], parse_poly("b^4").unwrap());
        assert!(w.entries[3].is_zero());
        assert!(w.entries[0].is_zero());
        assert!(w.trusted[32]);
        assert!(!w.trusted[64]);
        assert_eq!(w.last_trusted(), Some(63));
    }

    #[test]
    fn matched_pairs_satisfy_a_first_order_recurrence() {
        let w = coeff_window(&pairs_series(32)).unwrap();
        let witness = find_recurrence(&w, 2, 4, 8).unwrap().unwrap();
        assert_eq!(witness.d, 1);
        // the recurrence says entry(n) = b * entry(n-1), up to a common
        // polynomial factor: p1 must equal b * p0 exactly
        let b = parse_poly("b").unwrap();
        assert_eq!(witness.polys[1], witness.polys[0].mul(&b));
        assert!(!witness.polys[1].is_zero());
        verify_recurrence(&w, &witness).unwrap();
    }

    #[test]
    fn power_pairs_admit_no_short_recurrence() {
        let w = coeff_window(&power_pair_series(64).unwrap()).unwrap();
        assert!(find_recurrence(&w, 4, 8, 16).unwrap().is_none());
    }

    #[test]
    fn zero_window_is_annihilated_trivially() {
        let s = TruncSeries::zero(&['a', 'b'], &[6, 6]).unwrap();
        let w = coeff_window(&s).unwrap();
        let witness = find_recurrence(&w, 1, 1, 2).unwrap().unwrap();
        assert_eq!(witness.d, 0);
        assert!(witness.polys[0].is_one());
    }

    #[test]
    fn window_guards_reject_bad_parameters() {
        let w = coeff_window(&pairs_series(8)).unwrap();
        assert!(matches!(
            find_recurrence(&w, 4, 2, 3).unwrap_err(),
            AnalysisError::WindowStartTooEarly { .. }
        ));
        assert!(matches!(
            find_recurrence(&w, 2, 4, 4).unwrap_err(),
            AnalysisError::WindowTooShort { .. }
        ));
    }

    #[test]
    fn recurrence_is_monotone_in_bounds() {
        let w = coeff_window(&pairs_series(32)).unwrap();
        let base = find_recurrence(&w, 2, 4, 8).unwrap().unwrap();
        let wider = find_recurrence(&w, 3, 4, 8).unwrap().unwrap();
        // a witness stays available at looser bounds, and the lowest order
        // does not increase
        assert!(wider.d <= base.d);
        verify_recurrence(&w, &wider).unwrap();
    }

    #[test]
    fn diagonal_trace_has_zero_band() {
        let r = trace_support(&diagonal_series(8).unwrap()).unwrap();
        assert_eq!(r.band, Band::Bounded(0));
        assert_eq!(r.support.len(), 9);
    }

    #[test]
    fn shifted_diagonal_has_unit_band() {
        let g = parse_poly("1 + a").unwrap().embed(&['a', 'b', 'c']).unwrap();
        let prod = g.to_series(&[8; 3]).unwrap().mul(&diagonal_series(8).unwrap());
        let r = trace_support(&prod).unwrap();
        assert_eq!(r.band, Band::Bounded(1));
        // support is the diagonal plus its a-shift (boundary row absorbed)
        assert!(r.support.contains(&vec![3, 3, 3]));
        assert!(r.support.contains(&vec![4, 3, 3]));
        assert!(!r.support.contains(&vec![3, 4, 3]));
    }

    #[test]
    fn independent_components_exceed_the_box_band() {
        // powers of two in a, everything in b, only 0 in c
        let mut a = TruncSeries::zero(&['a'], &[8]).unwrap();
        for p in [1u32, 2, 4, 8] {
            a.toggle(&[p]).unwrap();
        }
        let mut b = TruncSeries::zero(&['b'], &[8]).unwrap();
        for m in 0..=8 {
            b.toggle(&[m]).unwrap();
        }
        let c = TruncSeries::one(&['c'], &[8]).unwrap();
        let r = block_check(&[(a, b, c)]).unwrap();
        assert!(matches!(r.band, Band::ExceedsBox { observed: 8 }));
        assert_eq!(r.blocks_consistent, Some(true));
        // single summand: the trace is exactly the product of supports
        assert_eq!(r.support.len(), 4 * 9);
    }

    #[test]
    fn block_membership_is_constant_on_classes() {
        // three summands over box (10,10,10) with assorted supports
        let unary = |letter: char, picks: &[u32]| {
            let mut s = TruncSeries::zero(&[letter], &[10]).unwrap();
            for &e in picks {
                s.toggle(&[e]).unwrap();
            }
            s
        };
        let summands = vec![
            (
                unary('a', &[0, 2, 4, 6, 8, 10]),
                unary('b', &[1, 2, 3, 5, 7]),
                unary('c', &[0, 1, 4, 9]),
            ),
            (
                unary('a', &[1, 2, 3, 4]),
                unary('b', &[2, 4, 6, 8, 10]),
                unary('c', &[0, 3, 6, 9]),
            ),
            (
                unary('a', &[0, 2, 4, 6, 8, 10]),
                unary('b', &[0, 10]),
                unary('c', &[5]),
            ),
        ];
        let r = block_check(&summands).unwrap();
        assert_eq!(r.blocks_consistent, Some(true));
        let classes = r.classes.unwrap();
        // summands 1 and 3 share their a-component, so at most 2^2 a-classes
        assert!(classes[0].len() <= 4);
        // every exponent lands in exactly one class
        let covered: usize = classes[0].values().map(|v| v.len()).sum();
        assert_eq!(covered, 11);
    }

    #[test]
    fn block_check_rejects_wrong_components() {
        let a = TruncSeries::zero(&['a'], &[4]).unwrap();
        let wrong = TruncSeries::zero(&['c'], &[4]).unwrap();
        let c = TruncSeries::zero(&['c'], &[4]).unwrap();
        assert!(matches!(
            block_check(&[(a, wrong, c)]).unwrap_err(),
            AnalysisError::BadInput(_)
        ));
    }

    #[test]
    fn three_letter_unit_shift_is_irreducible() {
        let p = parse_poly("1+abc").unwrap();
        let r = factor_search(&p, 2).unwrap();
        assert!(r.irreducible());
        assert!(r.pairs_tested > 0);
    }

    #[test]
    fn factorable_input_yields_checked_factors() {
        let p = parse_poly("1 + a + b + ab").unwrap();
        let r = factor_search(&p, 1).unwrap();
        let (g, h) = r.factors.expect("splits as (1+a)(1+b)");
        assert_eq!(g.mul(&h), p);
        assert!(g.total_degree() >= 1 && h.total_degree() >= 1);
    }

    #[test]
    fn pair_shift_is_irreducible() {
        let p = parse_poly("1 + ab").unwrap();
        let r = factor_search(&p, 1).unwrap();
        assert!(r.irreducible());
    }

    #[test]
    fn factor_search_refuses_zero_and_huge_inputs() {
        assert!(matches!(
            factor_search(&Poly::zero(&['a']), 2).unwrap_err(),
            AnalysisError::BadInput(_)
        ));
        let p = parse_poly("1 + abcdef").unwrap();
        assert!(matches!(
            factor_search(&p, 5).unwrap_err(),
            AnalysisError::SearchCapExceeded { .. }
        ));
    }

    #[test]
    fn incomplete_search_is_reported_as_such() {
        // deg 4 input, max_total_deg 1 covers no split fully
        let p = parse_poly("1 + a^2 b^2").unwrap();
        let r = factor_search(&p, 1).unwrap();
        assert!(!r.complete);
        assert!(!r.irreducible());
    }

    #[test]
    fn quotient_of_the_empty_word_language() {
        let numerator = parse_grammar("start S\nS -> eps\n").unwrap();
        let w = QuotientWitness::new(numerator, parse_poly("1 + ab").unwrap()).unwrap();
        let q = build_quotient_grammar(&w, 24).unwrap();
        let slice = enumerate(&to_cnf(&q).unwrap(), 8);
        let words: Vec<String> = slice.words.iter().map(|w| w.0.clone()).collect();
        assert_eq!(words, vec!["", "ab", "aabb", "aaabbb", "aaaabbbb"]);
        assert!(verify_quotient(&w, &q, &[12, 12]).unwrap());
    }

    #[test]
    fn unit_quotient_preserves_the_language() {
        let numerator = parse_grammar("start S\nS -> a S b (+) eps\n").unwrap();
        let w = QuotientWitness::new(numerator.clone(), parse_poly("1").unwrap()).unwrap();
        let q = build_quotient_grammar(&w, 16).unwrap();
        assert_eq!(
            enumerate(&to_cnf(&q).unwrap(), 8).words,
            enumerate(&to_cnf(&numerator).unwrap(), 8).words
        );
        assert!(verify_quotient(&w, &q, &[8, 8]).unwrap());
    }

    #[test]
    fn quotient_witness_rejects_bad_polynomials() {
        let numerator = parse_grammar("start S\nS -> eps\n").unwrap();
        assert!(matches!(
            QuotientWitness::new(numerator.clone(), parse_poly("a + ab").unwrap()).unwrap_err(),
            AnalysisError::BadQuotientPoly(_)
        ));
        assert!(matches!(
            QuotientWitness::new(numerator, parse_poly("1 + ac").unwrap()).unwrap_err(),
            AnalysisError::BadQuotientPoly(_)
        ));
    }

    #[test]
    fn quotient_rejects_numerators_off_the_chain() {
        let numerator = parse_grammar("start S\nS -> b a\n").unwrap();
        let w = QuotientWitness::new(numerator, parse_poly("1 + ab").unwrap()).unwrap();
        assert!(matches!(
            build_quotient_grammar(&w, 8).unwrap_err(),
            AnalysisError::NumeratorNotChain(witness) if witness == "ba"
        ));
    }

    #[test]
    fn ambiguity_identities_hold_on_small_slices() {
        for n in [0, 3, 9] {
            let r = inherent_ambiguity_report(n).unwrap();
            assert!(r.all_hold(), "bound {n}: {r:?}");
        }
    }

    #[test]
    fn perturbed_slice_breaks_the_identity() {
        let n = 6;
        let mut l1 = union_equalities_slice(n);
        let unexpected = Word("abbc".into()); // l=1, m=2, n=1: neither equality
        assert!(!l1.contains("abbc"));
        l1.words.insert(unexpected.clone());
        let xor_slice = enumerate(&to_cnf(&one_equality_grammar()).unwrap(), n);
        let diff = sym_diff(&l1, &xor_slice).unwrap();
        let delta = sym_diff(&diff, &diagonal_slice(n)).unwrap();
        assert_eq!(delta.words.into_iter().collect::<Vec<_>>(), vec![unexpected]);
    }

    #[test]
    fn fixture_series_have_expected_supports() {
        let p = power_pair_series(16).unwrap();
        assert_eq!(
            p.support(),
            vec![vec![1, 1], vec![2, 2], vec![4, 4], vec![8, 8], vec![16, 16]]
        );
        let c = cross_pair_series(2).unwrap();
        assert_eq!(c.support().len(), 9);
        assert!(c.coeff(&[2, 1, 2, 1]).unwrap());
        assert!(!c.coeff(&[2, 1, 1, 2]).unwrap());
    }
}
