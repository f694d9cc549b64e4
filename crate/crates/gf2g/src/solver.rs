//! Extraction of the truncated power series of a grammar whose parity
//! language lies in a fixed product of letter stars a_1*..a_k*. The grammar
//! is crossed with the chain automaton of that pattern; the surviving triple
//! nonterminals split by state span, and duals are computed span by span in
//! order of width. Width-zero spans are unary languages read off a CYK
//! table; a wider span yields a linear system over the truncated series
//! ring whose matrix has zero constant term, so fixed-point iteration from
//! zero reaches the unique solution in at most 1 + (sum of the box bounds)
//! rounds.

use crate::automata::{
    build_chain_dfa, chain_complement_dfa, intersect_gf2, split_types, AutomataError,
    IntersectedGrammar, TypedView,
};
use crate::grammar::{CnfGrammar, GrammarError};
use crate::lang::{enumerate_all, first_member, LangError, ParityCyk};
use crate::series::{dual_of_slice_truncated, SeriesError, TruncSeries};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("language leaves the chain pattern {pattern}: witness {witness:?}")]
    NotChainContained { pattern: String, witness: String },
    #[error("need one bound per chain letter ({letters}), got {given}")]
    BoundsMismatch { letters: usize, given: usize },
    #[error("fixed-point iteration failed to settle after {iterations} rounds on span {span:?}")]
    NoConvergence {
        span: (usize, usize),
        iterations: usize,
    },
    #[error("cofactor determinants are limited to 6x6, got {0}x{0}")]
    MatrixTooLarge(usize),
    #[error("determinant of an empty or ragged matrix")]
    BadMatrix,
    #[error("triple {0} has no solution recorded")]
    MissingSolution(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// One span's equations: for each unknown triple T of the span,
///   T = constant_T + sum_E left[T][E] * E + sum_E right[T][E] * E,
/// where the left coefficients collect duals of width-zero left factors and
/// the right coefficients duals of width-zero right factors. All series
/// share the full variable list and box.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub span: (usize, usize),
    pub letters: Vec<char>,
    pub unknowns: Vec<String>,
    pub left_coeffs: Vec<Vec<TruncSeries>>,
    pub right_coeffs: Vec<Vec<TruncSeries>>,
    pub constants: Vec<TruncSeries>,
}

impl LinearSystem {
    /// The combined coefficient matrix (the ring is commutative, so left and
    /// right multipliers add).
    pub fn matrix(&self) -> Vec<Vec<TruncSeries>> {
        self.left_coeffs
            .iter()
            .zip(&self.right_coeffs)
            .map(|(l, r)| l.iter().zip(r).map(|(a, b)| a.add(b)).collect())
            .collect()
    }

    /// I + M: the matrix whose inverse solves the system (over GF(2),
    /// x = f + Mx is (I + M) x = f).
    pub fn identity_plus_matrix(&self) -> Vec<Vec<TruncSeries>> {
        let mut m = self.matrix();
        for (i, row) in m.iter_mut().enumerate() {
            let one = TruncSeries::one(row[i].vars(), row[i].bounds()).expect("existing box");
            row[i] = row[i].add(&one);
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub values: Vec<TruncSeries>,
}

/// Solves x = f + Mx by iterating from x = 0. Every matrix entry has zero
/// constant term, so M is nilpotent in the truncated ring and the iteration
/// is stationary after at most 1 + sum(bounds) rounds; running past
/// 2 + sum(bounds) without settling is reported as an error.
pub fn solve_fixed_point(sys: &LinearSystem) -> Result<SolveReport, SolverError> {
    let n = sys.unknowns.len();
    if n == 0 {
        return Ok(SolveReport {
            iterations: 0,
            values: Vec::new(),
        });
    }
    let m = sys.matrix();
    let budget: usize = sys.constants[0]
        .bounds()
        .iter()
        .map(|&b| b as usize)
        .sum::<usize>()
        + 2;
    let mut x: Vec<TruncSeries> = sys
        .constants
        .iter()
        .map(|f| TruncSeries::zero(f.vars(), f.bounds()).expect("existing box"))
        .collect();
    for iteration in 1..=budget {
        let next: Vec<TruncSeries> = (0..n)
            .map(|i| {
                let mut acc = sys.constants[i].clone();
                for j in 0..n {
                    if !m[i][j].is_zero() && !x[j].is_zero() {
                        acc = acc.add(&m[i][j].mul(&x[j]));
                    }
                }
                acc
            })
            .collect();
        if next == x {
            return Ok(SolveReport {
                iterations: iteration,
                values: x,
            });
        }
        x = next;
    }
    Err(SolverError::NoConvergence {
        span: sys.span,
        iterations: budget,
    })
}

/// Determinant by cofactor expansion along the first row (no signs over
/// GF(2)). Intended for the small systems the span decomposition produces;
/// refuses matrices beyond 6x6.
pub fn det_cofactor(m: &[Vec<TruncSeries>]) -> Result<TruncSeries, SolverError> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(SolverError::BadMatrix);
    }
    if n > 6 {
        return Err(SolverError::MatrixTooLarge(n));
    }
    Ok(det_rec(m))
}

fn det_rec(m: &[Vec<TruncSeries>]) -> TruncSeries {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = TruncSeries::zero(m[0][0].vars(), m[0][0].bounds()).expect("existing box");
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<TruncSeries>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != c)
                    .map(|(_, s)| s.clone())
                    .collect()
            })
            .collect();
        acc = acc.add(&m[0][c].mul(&det_rec(&minor)));
    }
    acc
}

/// Cramer cross-check: for (I + M) x = f, every unknown must satisfy
/// x_i * det(I + M) = det of (I + M) with column i replaced by f.
pub fn cramer_check(sys: &LinearSystem, values: &[TruncSeries]) -> Result<bool, SolverError> {
    let a = sys.identity_plus_matrix();
    let det = det_cofactor(&a)?;
    for (idx, value) in values.iter().enumerate() {
        let mut replaced = a.clone();
        for (r, row) in replaced.iter_mut().enumerate() {
            row[idx] = sys.constants[r].clone();
        }
        if det_cofactor(&replaced)? != det.mul(value) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Span-by-span dual computation over a chain product.
#[derive(Debug)]
pub struct SpanSolver {
    ig: IntersectedGrammar,
    view: TypedView,
    vars: Vec<char>,
    bounds: Vec<u32>,
    span_of: BTreeMap<String, (usize, usize)>,
    solutions: BTreeMap<String, TruncSeries>,
    systems: Vec<(LinearSystem, SolveReport)>,
}

impl SpanSolver {
    pub fn new(ig: IntersectedGrammar, bounds: &[u32]) -> Result<Self, SolverError> {
        let view = split_types(&ig)?;
        let vars: Vec<char> = view.chain.iter().map(|(_, c)| *c).collect();
        if bounds.len() != vars.len() {
            return Err(SolverError::BoundsMismatch {
                letters: vars.len(),
                given: bounds.len(),
            });
        }
        let mut span_of = BTreeMap::new();
        for (span, names) in &view.classes {
            debug_assert!(span.0 <= span.1, "pruning keeps only forward spans");
            for name in names {
                span_of.insert(name.clone(), *span);
            }
        }
        Ok(SpanSolver {
            ig,
            view,
            vars,
            bounds: bounds.to_vec(),
            span_of,
            solutions: BTreeMap::new(),
            systems: Vec::new(),
        })
    }

    pub fn vars(&self) -> &[char] {
        &self.vars
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    pub fn grammar(&self) -> &CnfGrammar {
        &self.ig.cnf
    }

    pub fn solution(&self, triple: &str) -> Option<&TruncSeries> {
        self.solutions.get(triple)
    }

    pub fn solutions(&self) -> &BTreeMap<String, TruncSeries> {
        &self.solutions
    }

    /// The systems solved so far, one per span of positive width, in
    /// increasing width order.
    pub fn systems(&self) -> &[(LinearSystem, SolveReport)] {
        &self.systems
    }

    pub fn solve_all(&mut self) -> Result<(), SolverError> {
        let k = self.vars.len();
        let cyk = ParityCyk::new(&self.ig.cnf);
        let nts = cyk.nonterminals().to_vec();
        for i in 0..k {
            let Some(names) = self.view.classes.get(&(i, i)) else {
                continue;
            };
            let profile = cyk.unary_profile(self.vars[i], self.bounds[i] as usize);
            for name in names {
                let idx = nts
                    .iter()
                    .position(|n| n == name)
                    .expect("triples are grammar nonterminals");
                let mut s = TruncSeries::zero(&self.vars, &self.bounds)?;
                let mut exps = vec![0u32; k];
                for m in 1..=self.bounds[i] as usize {
                    if profile[m - 1][idx] {
                        exps[i] = m as u32;
                        s.toggle(&exps)?;
                    }
                }
                self.solutions.insert(name.clone(), s);
            }
        }
        for width in 1..k {
            for i in 0..k - width {
                let j = i + width;
                if !self.view.classes.contains_key(&(i, j)) {
                    continue;
                }
                let sys = self.build_split_system((i, j))?;
                let report = solve_fixed_point(&sys)?;
                for (name, value) in sys.unknowns.iter().zip(&report.values) {
                    self.solutions.insert(name.clone(), value.clone());
                }
                self.systems.push((sys, report));
            }
        }
        Ok(())
    }

    /// Builds the equations of a positive-width span from the product rules.
    /// A binary rule T -> B C splits the span at the middle state of B, C:
    /// at the left end it contributes the (already solved) dual of B as a
    /// left coefficient on C; at the right end, the dual of C as a right
    /// coefficient on B; strictly inside, both factors are solved and the
    /// product joins the constant term. A terminal rule contributes the
    /// single letter monomial of the span's last letter.
    pub fn build_split_system(&self, (i, j): (usize, usize)) -> Result<LinearSystem, SolverError> {
        let unknowns: Vec<String> = self
            .view
            .classes
            .get(&(i, j))
            .cloned()
            .unwrap_or_default();
        let pos: BTreeMap<&str, usize> = unknowns
            .iter()
            .enumerate()
            .map(|(p, n)| (n.as_str(), p))
            .collect();
        let n = unknowns.len();
        let k = self.vars.len();
        let zero = TruncSeries::zero(&self.vars, &self.bounds)?;
        let mut left = vec![vec![zero.clone(); n]; n];
        let mut right = vec![vec![zero.clone(); n]; n];
        let mut constants = vec![zero; n];
        for (lhs, t) in self.ig.cnf.terminal_rules() {
            let Some(&ti) = pos.get(lhs) else { continue };
            debug_assert_eq!(t, self.vars[j], "span terminals are its last letter");
            let mut e = vec![0u32; k];
            e[j] = 1;
            constants[ti].toggle(&e)?;
        }
        for (lhs, b, c) in self.ig.cnf.binary_rules() {
            let Some(&ti) = pos.get(lhs) else { continue };
            let (bi, bj) = self.span_of[b];
            let (ci, cj) = self.span_of[c];
            debug_assert!(bi == i && cj == j && bj == ci, "spans compose");
            let mid = bj;
            if mid == i {
                let sol = self.solved(b)?;
                let slot = pos[c];
                left[ti][slot] = left[ti][slot].add(sol);
            } else if mid == j {
                let sol = self.solved(c)?;
                let slot = pos[b];
                right[ti][slot] = right[ti][slot].add(sol);
            } else {
                let prod = self.solved(b)?.mul(self.solved(c)?);
                constants[ti] = constants[ti].add(&prod);
            }
        }
        Ok(LinearSystem {
            span: (i, j),
            letters: self.vars[i..=j].to_vec(),
            unknowns,
            left_coeffs: left,
            right_coeffs: right,
            constants,
        })
    }

    fn solved(&self, triple: &str) -> Result<&TruncSeries, SolverError> {
        self.solutions
            .get(triple)
            .ok_or_else(|| SolverError::MissingSolution(triple.to_string()))
    }

    /// The dual of the whole product language: the empty-word coefficient,
    /// plus one term per start rule (start rules never mention the start
    /// symbol, so their factors are all solved triples).
    pub fn assemble_start(&self) -> Result<TruncSeries, SolverError> {
        let mut acc = TruncSeries::zero(&self.vars, &self.bounds)?;
        if self.ig.cnf.eps_parity {
            acc.toggle(&vec![0; self.vars.len()])?;
        }
        let start = self.ig.cnf.start().to_string();
        for (lhs, t) in self.ig.cnf.terminal_rules() {
            if lhs == start {
                let mut e = vec![0u32; self.vars.len()];
                let p = self
                    .vars
                    .iter()
                    .position(|&v| v == t)
                    .expect("product terminals are chain letters");
                e[p] = 1;
                acc.toggle(&e)?;
            }
        }
        for (lhs, b, c) in self.ig.cnf.binary_rules() {
            if lhs == start {
                let prod = self.solved(b)?.mul(self.solved(c)?);
                acc = acc.add(&prod);
            }
        }
        Ok(acc)
    }

    /// Brute-force audit: every solved triple must match the dual of its
    /// enumerated slice. Returns the first offending triple, if any.
    pub fn verify_against_enumeration(&self) -> Result<Option<String>, SolverError> {
        let total: usize = self.bounds.iter().map(|&b| b as usize).sum();
        let slices = enumerate_all(&self.ig.cnf, total);
        for (name, sol) in &self.solutions {
            let expected = dual_of_slice_truncated(&slices[name], &self.vars, &self.bounds)?;
            if expected != *sol {
                return Ok(Some(name.clone()));
            }
        }
        Ok(None)
    }
}

/// Scans the part of the parity language outside a_1*..a_k* for a witness.
/// When the underlying grammar has no parse tree at all over a non-chain
/// word, the product with the pattern complement prunes to nothing and
/// containment is settled for every length. Otherwise non-chain words have
/// trees in even numbers or odd ones, and only a bounded scan (up to the
/// given length) separates the two; emptiness of the full difference is not
/// decided, so callers pick the bound that matches how far the data will be
/// read.
pub fn check_chain_containment(
    g: &CnfGrammar,
    vars: &[char],
    upto: usize,
) -> Result<Option<String>, SolverError> {
    let complement = chain_complement_dfa(vars)?;
    let product = intersect_gf2(g, &complement)?;
    if product.cnf.grammar().rules.is_empty() && !product.cnf.eps_parity {
        return Ok(None);
    }
    Ok(first_member(&product.cnf, upto).map(|w| w.0))
}

/// Computes the truncated series of the parity language of `g` over the
/// chain pattern a_1*..a_k*: coefficient of x^(e_1..e_k) is membership of
/// a_1^{e_1}..a_k^{e_k}. Errors with a witness if a word up to the total box
/// size falls outside the pattern.
pub fn extract_dual(
    g: &CnfGrammar,
    vars: &[char],
    bounds: &[u32],
) -> Result<TruncSeries, SolverError> {
    Ok(extract_dual_with(g, vars, bounds)?.0)
}

/// Like [`extract_dual`], also returning the solver with its per-span
/// systems for inspection.
pub fn extract_dual_with(
    g: &CnfGrammar,
    vars: &[char],
    bounds: &[u32],
) -> Result<(TruncSeries, SpanSolver), SolverError> {
    let total: usize = bounds.iter().map(|&b| b as usize).sum();
    if let Some(witness) = check_chain_containment(g, vars, total)? {
        return Err(SolverError::NotChainContained {
            pattern: vars.iter().map(|v| format!("{v}*")).collect(),
            witness,
        });
    }
    let chain = build_chain_dfa(vars)?;
    let ig = intersect_gf2(g, &chain)?;
    let mut solver = SpanSolver::new(ig, bounds)?;
    solver.solve_all()?;
    let series = solver.assemble_start()?;
    Ok((series, solver))
}
