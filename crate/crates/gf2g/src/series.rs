//! Formal power series over GF(2) in commuting variables, truncated to a
//! rectangular exponent box, together with exact polynomials. Truncation to
//! the box `e_i <= b_i` is a quotient of the power-series ring by the ideal
//! (x_i^{b_i + 1}), so addition, multiplication and inversion of units are
//! exact in the quotient: coefficients inside the box never depend on
//! coefficients outside it.

use crate::lang::LangSlice;
use crate::search_cap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("variable lists differ: {0:?} vs {1:?}")]
    VarsMismatch(Vec<char>, Vec<char>),
    #[error("exponent box too large ({0} cells)")]
    BoxTooLarge(u128),
    #[error("constant term is 0, not a unit")]
    NotAUnit,
    #[error("slice member {0:?} is not of the form {1}")]
    WordOutOfChainOrder(String, String),
    #[error("slice member {0:?} has an exponent outside the box")]
    UnfaithfulBox(String),
    #[error("slice bound {bound} does not cover the box (need at least {need})")]
    SliceTooShort { bound: usize, need: usize },
    #[error("exponent {0:?} lies outside the box")]
    ExponentOutOfBox(Vec<u32>),
    #[error("search needs {needed} candidates, over the cap {cap}")]
    SearchCapExceeded { needed: u128, cap: u64 },
    #[error("polynomial syntax error: {0}")]
    Syntax(String),
}

fn radices(bounds: &[u32]) -> Vec<usize> {
    bounds.iter().map(|&b| b as usize + 1).collect()
}

fn cell_count(bounds: &[u32]) -> Result<usize, SeriesError> {
    let mut total: u128 = 1;
    for r in radices(bounds) {
        total = total.saturating_mul(r as u128);
        if total > (1 << 28) {
            return Err(SeriesError::BoxTooLarge(total));
        }
    }
    Ok(total as usize)
}

/// A GF(2) power series truncated to the box `0 <= e_i <= bounds[i]`.
/// Coefficients live in a dense bitset addressed by the mixed-radix value of
/// the exponent vector (first variable most significant), so iteration order
/// is lexicographic in the exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncSeries {
    vars: Vec<char>,
    bounds: Vec<u32>,
    bits: Vec<u64>,
}

impl TruncSeries {
    pub fn zero(vars: &[char], bounds: &[u32]) -> Result<Self, SeriesError> {
        assert_eq!(vars.len(), bounds.len(), "one bound per variable");
        let cells = cell_count(bounds)?;
        Ok(TruncSeries {
            vars: vars.to_vec(),
            bounds: bounds.to_vec(),
            bits: vec![0; cells.div_ceil(64)],
        })
    }

    pub fn one(vars: &[char], bounds: &[u32]) -> Result<Self, SeriesError> {
        let mut s = Self::zero(vars, bounds)?;
        s.bits[0] = 1;
        Ok(s)
    }

    pub fn monomial(vars: &[char], bounds: &[u32], exps: &[u32]) -> Result<Self, SeriesError> {
        let mut s = Self::zero(vars, bounds)?;
        s.toggle(exps)?;
        Ok(s)
    }

    pub fn from_support<'a, I>(
        vars: &[char],
        bounds: &[u32],
        support: I,
    ) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        let mut s = Self::zero(vars, bounds)?;
        for e in support {
            s.toggle(e)?;
        }
        Ok(s)
    }

    pub fn vars(&self) -> &[char] {
        &self.vars
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    fn index_of(&self, exps: &[u32]) -> Result<usize, SeriesError> {
        if exps.len() != self.bounds.len()
            || exps.iter().zip(&self.bounds).any(|(e, b)| e > b)
        {
            return Err(SeriesError::ExponentOutOfBox(exps.to_vec()));
        }
        let mut idx = 0usize;
        for (e, r) in exps.iter().zip(radices(&self.bounds)) {
            idx = idx * r + *e as usize;
        }
        Ok(idx)
    }

    fn exps_of(&self, mut idx: usize) -> Vec<u32> {
        let rad = radices(&self.bounds);
        let mut exps = vec![0u32; rad.len()];
        for i in (0..rad.len()).rev() {
            exps[i] = (idx % rad[i]) as u32;
            idx /= rad[i];
        }
        exps
    }

    pub fn coeff(&self, exps: &[u32]) -> Result<bool, SeriesError> {
        let idx = self.index_of(exps)?;
        Ok(self.bits[idx / 64] >> (idx % 64) & 1 == 1)
    }

    pub fn toggle(&mut self, exps: &[u32]) -> Result<(), SeriesError> {
        let idx = self.index_of(exps)?;
        self.bits[idx / 64] ^= 1 << (idx % 64);
        Ok(())
    }

    pub fn constant_term(&self) -> bool {
        self.bits[0] & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_one(&self) -> bool {
        self.bits[0] & 1 == 1 && self.bits[0] == 1 && self.bits[1..].iter().all(|&w| w == 0)
    }

    /// Exponent vectors with coefficient 1, in lexicographic order.
    pub fn support(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for (w, &word) in self.bits.iter().enumerate() {
            let mut rem = word;
            while rem != 0 {
                let bit = rem.trailing_zeros() as usize;
                out.push(self.exps_of(w * 64 + bit));
                rem &= rem - 1;
            }
        }
        out
    }

    /// Copies the coefficients inside a smaller box.
    pub fn restrict_to(&self, bounds: &[u32]) -> Result<Self, SeriesError> {
        if bounds.len() != self.bounds.len()
            || bounds.iter().zip(&self.bounds).any(|(n, o)| n > o)
        {
            return Err(SeriesError::ExponentOutOfBox(bounds.to_vec()));
        }
        let mut s = Self::zero(&self.vars, bounds)?;
        for e in self.support() {
            if e.iter().zip(bounds).all(|(e, b)| e <= b) {
                s.toggle(&e).expect("within the new box");
            }
        }
        Ok(s)
    }

    fn min_box(&self, other: &Self) -> Vec<u32> {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .map(|(a, b)| *a.min(b))
            .collect()
    }

    /// Sum in GF(2): the symmetric difference of supports, on the pointwise
    /// minimum of the two boxes. The variable lists must agree.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "series over different variables");
        if self.bounds == other.bounds {
            let mut s = self.clone();
            for (w, o) in s.bits.iter_mut().zip(&other.bits) {
                *w ^= o;
            }
            return s;
        }
        let bounds = self.min_box(other);
        let mut s = self
            .restrict_to(&bounds)
            .expect("min box fits inside both");
        for (w, o) in s
            .bits
            .iter_mut()
            .zip(&other.restrict_to(&bounds).expect("min box").bits)
        {
            *w ^= o;
        }
        s
    }

    /// Truncated product: toggles e + u for every support pair whose sum
    /// stays in the box. Exact in the quotient ring, since a contribution
    /// with either factor outside the box lands outside the box.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "series over different variables");
        let bounds = self.min_box(other);
        let mut s = Self::zero(&self.vars, &bounds).expect("sub-box of a valid box");
        let left = self.support();
        let right = other.support();
        let mut sum = vec![0u32; bounds.len()];
        for e in &left {
            'pairs: for u in &right {
                for i in 0..sum.len() {
                    let t = e[i] + u[i];
                    if t > bounds[i] {
                        continue 'pairs;
                    }
                    sum[i] = t;
                }
                s.toggle(&sum).expect("checked against the box");
            }
        }
        s
    }

    /// Multiplicative inverse in the quotient ring; the constant term must
    /// be 1. Coefficients are filled in lexicographic order, which refines
    /// the componentwise order, so g_e = sum over 0 < u <= e of f_u * g_{e-u}
    /// reads only finished entries.
    pub fn invert_unit(&self) -> Result<Self, SeriesError> {
        if !self.constant_term() {
            return Err(SeriesError::NotAUnit);
        }
        let mut g = Self::one(&self.vars, &self.bounds)?;
        let fsup: Vec<Vec<u32>> = self
            .support()
            .into_iter()
            .filter(|e| e.iter().any(|&x| x > 0))
            .collect();
        let cells = cell_count(&self.bounds)?;
        let mut diff = vec![0u32; self.bounds.len()];
        for idx in 1..cells {
            let e = g.exps_of(idx);
            let mut acc = false;
            'terms: for u in &fsup {
                for i in 0..diff.len() {
                    let Some(d) = e[i].checked_sub(u[i]) else {
                        continue 'terms;
                    };
                    diff[i] = d;
                }
                acc ^= g.coeff(&diff).expect("inside the box");
            }
            if acc {
                g.toggle(&e).expect("inside the box");
            }
        }
        Ok(g)
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_terms(&self.vars, self.support().iter()))?;
        let box_desc: Vec<String> = self
            .vars
            .iter()
            .zip(&self.bounds)
            .map(|(v, b)| format!("{v}<={b}"))
            .collect();
        write!(f, " (box: {})", box_desc.join(", "))
    }
}

fn format_terms<'a>(vars: &[char], support: impl Iterator<Item = &'a Vec<u32>>) -> String {
    let mut terms = Vec::new();
    for e in support {
        let mut t = String::new();
        for (v, &x) in vars.iter().zip(e) {
            match x {
                0 => {}
                1 => {
                    if !t.is_empty() {
                        t.push(' ');
                    }
                    t.push(*v);
                }
                _ => {
                    if !t.is_empty() {
                        t.push(' ');
                    }
                    t.push_str(&format!("{v}^{x}"));
                }
            }
        }
        terms.push(if t.is_empty() { "1".into() } else { t });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Serialization form of a truncated series.
#[derive(Debug, Serialize, Deserialize)]
pub struct SeriesDto {
    pub vars: Vec<char>,
    #[serde(rename = "box")]
    pub bounds: Vec<u32>,
    pub support: Vec<Vec<u32>>,
}

impl TruncSeries {
    pub fn to_dto(&self) -> SeriesDto {
        SeriesDto {
            vars: self.vars.clone(),
            bounds: self.bounds.clone(),
            support: self.support(),
        }
    }

    pub fn from_dto(dto: &SeriesDto) -> Result<Self, SeriesError> {
        Self::from_support(&dto.vars, &dto.bounds, dto.support.iter().map(|e| &e[..]))
    }
}

/// Reads the exponent vector of a word of the form a_1^{e_1}..a_k^{e_k};
/// None if the word uses other letters or breaks the order.
fn chain_exponents(w: &str, vars: &[char]) -> Option<Vec<u32>> {
    let mut exps = vec![0u32; vars.len()];
    let mut pos = 0usize;
    for c in w.chars() {
        while pos < vars.len() && vars[pos] != c {
            pos += 1;
        }
        if pos == vars.len() {
            return None;
        }
        exps[pos] += 1;
    }
    Some(exps)
}

fn chain_pattern(vars: &[char]) -> String {
    vars.iter().map(|v| format!("{v}*")).collect()
}

/// Embeds a finite language slice as a truncated series: word
/// a_1^{e_1}..a_k^{e_k} becomes the monomial with exponents (e_1, .., e_k).
/// Every member must have that sorted form and fit in the box.
pub fn dual_of_slice(
    slice: &LangSlice,
    vars: &[char],
    bounds: &[u32],
) -> Result<TruncSeries, SeriesError> {
    let mut s = TruncSeries::zero(vars, bounds)?;
    for w in &slice.words {
        let exps = chain_exponents(&w.0, vars)
            .ok_or_else(|| SeriesError::WordOutOfChainOrder(w.0.clone(), chain_pattern(vars)))?;
        s.toggle(&exps)
            .map_err(|_| SeriesError::UnfaithfulBox(w.0.clone()))?;
    }
    Ok(s)
}

/// Like [`dual_of_slice`], but silently drops members outside the box. To
/// guarantee the result is the truncation of the whole language, the slice
/// must cover every word that could land in the box, i.e. its length bound
/// must be at least the sum of the box bounds.
pub fn dual_of_slice_truncated(
    slice: &LangSlice,
    vars: &[char],
    bounds: &[u32],
) -> Result<TruncSeries, SeriesError> {
    let need: usize = bounds.iter().map(|&b| b as usize).sum();
    if slice.bound < need {
        return Err(SeriesError::SliceTooShort {
            bound: slice.bound,
            need,
        });
    }
    let mut s = TruncSeries::zero(vars, bounds)?;
    for w in &slice.words {
        let exps = chain_exponents(&w.0, vars)
            .ok_or_else(|| SeriesError::WordOutOfChainOrder(w.0.clone(), chain_pattern(vars)))?;
        if exps.iter().zip(bounds).all(|(e, b)| e <= b) {
            s.toggle(&exps).expect("checked against the box");
        }
    }
    Ok(s)
}

/// An exact multivariate polynomial over GF(2), kept as its support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    vars: Vec<char>,
    support: BTreeSet<Vec<u32>>,
}

impl Poly {
    pub fn zero(vars: &[char]) -> Self {
        Poly {
            vars: vars.to_vec(),
            support: BTreeSet::new(),
        }
    }

    pub fn one(vars: &[char]) -> Self {
        let mut p = Self::zero(vars);
        p.support.insert(vec![0; vars.len()]);
        p
    }

    pub fn from_support<'a, I>(vars: &[char], support: I) -> Self
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        let mut p = Self::zero(vars);
        for e in support {
            assert_eq!(e.len(), vars.len(), "one exponent per variable");
            p.toggle(e.to_vec());
        }
        p
    }

    fn toggle(&mut self, e: Vec<u32>) {
        if !self.support.remove(&e) {
            self.support.insert(e);
        }
    }

    pub fn vars(&self) -> &[char] {
        &self.vars
    }

    pub fn support(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.support.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.support.len() == 1 && self.support.iter().next().unwrap().iter().all(|&e| e == 0)
    }

    pub fn constant_term(&self) -> bool {
        self.support.contains(&vec![0; self.vars.len()])
    }

    pub fn num_terms(&self) -> usize {
        self.support.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.support
            .iter()
            .map(|e| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn var_degree(&self, i: usize) -> u32 {
        self.support.iter().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "polynomials over different variables");
        let mut p = self.clone();
        for e in &other.support {
            p.toggle(e.clone());
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "polynomials over different variables");
        let mut p = Self::zero(&self.vars);
        for e in &self.support {
            for u in &other.support {
                p.toggle(e.iter().zip(u).map(|(a, b)| a + b).collect());
            }
        }
        p
    }

    /// Renames the support into a larger (or reordered) variable list; every
    /// old variable must appear in the new list.
    pub fn embed(&self, vars: &[char]) -> Result<Self, SeriesError> {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|u| u == v)
                    .ok_or_else(|| SeriesError::VarsMismatch(self.vars.clone(), vars.to_vec()))
            })
            .collect::<Result<_, _>>()?;
        let mut p = Self::zero(vars);
        for e in &self.support {
            let mut ne = vec![0u32; vars.len()];
            for (i, &x) in e.iter().enumerate() {
                ne[map[i]] = x;
            }
            p.toggle(ne);
        }
        Ok(p)
    }

    /// The truncation of the polynomial to a box; every term must fit.
    pub fn to_series(&self, bounds: &[u32]) -> Result<TruncSeries, SeriesError> {
        TruncSeries::from_support(&self.vars, bounds, self.support.iter().map(|e| &e[..]))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_terms(&self.vars, self.support.iter()))
    }
}

/// Parses a GF(2) polynomial: terms joined by `+`, each term a product of
/// variable factors written by juxtaposition (`a b`, `abc`, `a^2b^3`), or
/// the constants `0` and `1`. Repeated terms cancel. The variable list is
/// the set of letters that occur, in alphabetical order.
pub fn parse_poly(text: &str) -> Result<Poly, SeriesError> {
    let mut vars: BTreeSet<char> = BTreeSet::new();
    for c in text.chars() {
        if c.is_ascii_lowercase() {
            vars.insert(c);
        } else if !c.is_ascii_digit() && !c.is_whitespace() && c != '+' && c != '^' {
            return Err(SeriesError::Syntax(format!("unexpected character {c:?}")));
        }
    }
    let vars: Vec<char> = vars.into_iter().collect();
    let mut p = Poly::zero(&vars);
    for term in text.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(SeriesError::Syntax("empty term".into()));
        }
        let mut exps = vec![0u32; vars.len()];
        let mut seen_factor = false;
        let mut chars = term.chars().peekable();
        let mut constant_zero = false;
        while let Some(c) = chars.next() {
            if c.is_whitespace() {
                continue;
            }
            if c == '0' || c == '1' {
                if seen_factor {
                    return Err(SeriesError::Syntax(format!(
                        "constant {c} inside a product in {term:?}"
                    )));
                }
                seen_factor = true;
                if c == '0' {
                    constant_zero = true;
                }
                continue;
            }
            if !c.is_ascii_lowercase() {
                return Err(SeriesError::Syntax(format!(
                    "expected a variable in {term:?}, found {c:?}"
                )));
            }
            let vi = vars.iter().position(|&v| v == c).expect("collected above");
            let mut exp = 1u32;
            if chars.peek() == Some(&'^') {
                chars.next();
                let mut digits = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                    digits.push(chars.next().unwrap());
                }
                exp = digits
                    .parse()
                    .map_err(|_| SeriesError::Syntax(format!("bad exponent in {term:?}")))?;
            }
            exps[vi] += exp;
            seen_factor = true;
        }
        if !seen_factor {
            return Err(SeriesError::Syntax(format!("empty term {term:?}")));
        }
        if !constant_zero {
            p.toggle(exps);
        }
    }
    Ok(p)
}

/// Exact division test over GF(2)[x_1..x_k]: returns the quotient when
/// `q` divides `p`, trying every subset of the monomials that fit under the
/// per-variable degree gap (degrees are additive in this integral domain).
/// The subset count is capped by [`search_cap`].
pub fn poly_divides(p: &Poly, q: &Poly) -> Result<Option<Poly>, SeriesError> {
    assert_eq!(p.vars, q.vars, "polynomials over different variables");
    if q.is_zero() {
        return Ok(if p.is_zero() { Some(Poly::zero(&p.vars)) } else { None });
    }
    if p.is_zero() {
        return Ok(Some(Poly::zero(&p.vars)));
    }
    let k = p.vars.len();
    let mut gaps = Vec::with_capacity(k);
    for i in 0..k {
        let Some(d) = p.var_degree(i).checked_sub(q.var_degree(i)) else {
            return Ok(None);
        };
        gaps.push(d);
    }
    let mut monos: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; k];
    'enumerate: loop {
        monos.push(cur.clone());
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < gaps[i] {
                cur[i] += 1;
                continue 'enumerate;
            }
            cur[i] = 0;
        }
        break;
    }
    let needed = (1u128).checked_shl(monos.len() as u32).unwrap_or(u128::MAX);
    let cap = search_cap();
    if needed > cap as u128 {
        return Err(SeriesError::SearchCapExceeded { needed, cap });
    }
    for mask in 1..(1u64 << monos.len()) {
        let chosen: Vec<&[u32]> = monos
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| &e[..])
            .collect();
        let r = Poly::from_support(&p.vars, chosen);
        if q.mul(&r) == *p {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{LangSlice, Word};
    use std::collections::BTreeSet;

    fn slice_of(words: &[&str], alphabet: &[char], bound: usize) -> LangSlice {
        LangSlice::new(
            alphabet.iter().copied().collect(),
            bound,
            words.iter().map(|w| Word(w.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn monomial_coeff_round_trip() {
        let s = TruncSeries::monomial(&['a', 'b'], &[3, 3], &[2, 1]).unwrap();
        assert!(s.coeff(&[2, 1]).unwrap());
        assert!(!s.coeff(&[1, 2]).unwrap());
        assert_eq!(s.support(), vec![vec![2, 1]]);
        assert_eq!(
            s.coeff(&[4, 0]).unwrap_err(),
            SeriesError::ExponentOutOfBox(vec![4, 0])
        );
    }

    #[test]
    fn addition_is_symmetric_difference() {
        let a = TruncSeries::from_support(&['a'], &[4], [[1u32], [2]].iter().map(|e| &e[..]))
            .unwrap();
        let b = TruncSeries::from_support(&['a'], &[4], [[2u32], [3]].iter().map(|e| &e[..]))
            .unwrap();
        let sum = a.add(&b);
        assert_eq!(sum.support(), vec![vec![1], vec![3]]);
        assert!(a.add(&a).is_zero());
    }

    #[test]
    fn squaring_doubles_exponents() {
        // over GF(2), (1 + a)^2 = 1 + a^2
        let p = TruncSeries::from_support(&['a'], &[4], [[0u32], [1]].iter().map(|e| &e[..]))
            .unwrap();
        let sq = p.mul(&p);
        assert_eq!(sq.support(), vec![vec![0], vec![2]]);
    }

    #[test]
    fn geometric_series_inverts_one_plus_a() {
        let p = TruncSeries::from_support(&['a'], &[6], [[0u32], [1]].iter().map(|e| &e[..]))
            .unwrap();
        let inv = p.invert_unit().unwrap();
        assert_eq!(
            inv.support(),
            (0..=6).map(|e| vec![e]).collect::<Vec<_>>()
        );
        assert!(p.mul(&inv).is_one());
    }

    #[test]
    fn two_variable_inverse_of_one_plus_ab() {
        let p = parse_poly("1 + a b").unwrap().to_series(&[5, 5]).unwrap();
        let inv = p.invert_unit().unwrap();
        assert_eq!(
            inv.support(),
            (0..=5).map(|e| vec![e, e]).collect::<Vec<_>>()
        );
        assert!(p.mul(&inv).is_one());
    }

    #[test]
    fn inversion_requires_a_unit() {
        let p = TruncSeries::monomial(&['a'], &[3], &[1]).unwrap();
        assert_eq!(p.invert_unit().unwrap_err(), SeriesError::NotAUnit);
    }

    #[test]
    fn mul_truncates_to_the_min_box() {
        let a = TruncSeries::monomial(&['a'], &[8], &[5]).unwrap();
        let b = TruncSeries::monomial(&['a'], &[6], &[4]).unwrap();
        // 5 + 4 = 9 escapes the min box a<=6
        assert!(a.mul(&b).is_zero());
        let c = TruncSeries::monomial(&['a'], &[6], &[1]).unwrap();
        assert_eq!(a.mul(&c).support(), vec![vec![6]]);
    }

    #[test]
    fn restriction_drops_outer_coefficients() {
        let s = TruncSeries::from_support(
            &['a', 'b'],
            &[4, 4],
            [[0u32, 0], [3, 3], [4, 1]].iter().map(|e| &e[..]),
        )
        .unwrap();
        let r = s.restrict_to(&[3, 3]).unwrap();
        assert_eq!(r.support(), vec![vec![0, 0], vec![3, 3]]);
    }

    #[test]
    fn dual_embeds_sorted_words() {
        let slice = slice_of(&["", "ab", "aabb"], &['a', 'b'], 4);
        let s = dual_of_slice(&slice, &['a', 'b'], &[3, 3]).unwrap();
        assert_eq!(s.support(), vec![vec![0, 0], vec![1, 1], vec![2, 2]]);
    }

    #[test]
    fn dual_rejects_unsorted_members() {
        let slice = slice_of(&["ba"], &['a', 'b'], 2);
        assert!(matches!(
            dual_of_slice(&slice, &['a', 'b'], &[3, 3]).unwrap_err(),
            SeriesError::WordOutOfChainOrder(w, _) if w == "ba"
        ));
    }

    #[test]
    fn dual_rejects_out_of_box_members_strictly() {
        let slice = slice_of(&["aaaa"], &['a'], 4);
        assert_eq!(
            dual_of_slice(&slice, &['a'], &[3]).unwrap_err(),
            SeriesError::UnfaithfulBox("aaaa".into())
        );
    }

    #[test]
    fn truncated_dual_drops_but_demands_coverage() {
        let slice = slice_of(&["a", "aaaa"], &['a'], 4);
        let s = dual_of_slice_truncated(&slice, &['a'], &[3]).unwrap();
        assert_eq!(s.support(), vec![vec![1]]);
        let short = slice_of(&["a"], &['a'], 2);
        assert_eq!(
            dual_of_slice_truncated(&short, &['a'], &[3]).unwrap_err(),
            SeriesError::SliceTooShort { bound: 2, need: 3 }
        );
    }

    #[test]
    fn poly_parsing_handles_juxtaposition_and_powers() {
        let p = parse_poly("1 + a b + a^2b^3").unwrap();
        assert_eq!(p.vars(), &['a', 'b']);
        let support: Vec<Vec<u32>> = p.support().cloned().collect();
        assert_eq!(support, vec![vec![0, 0], vec![1, 1], vec![2, 3]]);
        assert_eq!(parse_poly("aa").unwrap(), parse_poly("a^2").unwrap());
        assert!(parse_poly("1 + 1").unwrap().is_zero());
        assert!(parse_poly("0").unwrap().is_zero());
        assert_eq!(parse_poly("1+abc").unwrap().num_terms(), 2);
        assert!(parse_poly("a + ").is_err());
        assert!(parse_poly("a^").is_err());
        assert!(parse_poly("A").is_err());
    }

    #[test]
    fn poly_display_round_trips() {
        for text in ["0", "1", "1 + a b", "a^2 + b^3", "1 + a b + a^2 b^3"] {
            let p = parse_poly(text).unwrap();
            assert_eq!(parse_poly(&p.to_string()).unwrap(), p);
        }
        assert_eq!(parse_poly("1 + ab").unwrap().to_string(), "1 + a b");
    }

    #[test]
    fn series_display_shows_the_box() {
        let s = parse_poly("1 + a b").unwrap().to_series(&[8, 8]).unwrap();
        assert_eq!(s.to_string(), "1 + a b (box: a<=8, b<=8)");
        let z = TruncSeries::zero(&['a'], &[2]).unwrap();
        assert_eq!(z.to_string(), "0 (box: a<=2)");
    }

    #[test]
    fn dto_round_trips_through_json() {
        let s = parse_poly("1 + a^2 b").unwrap().to_series(&[4, 4]).unwrap();
        let json = serde_json::to_string(&s.to_dto()).unwrap();
        assert!(json.contains("\"box\":[4,4]"));
        let dto: SeriesDto = serde_json::from_str(&json).unwrap();
        assert_eq!(TruncSeries::from_dto(&dto).unwrap(), s);
    }

    #[test]
    fn division_finds_exact_quotients() {
        let p = parse_poly("1 + a + b + ab").unwrap(); // (1+a)(1+b)
        let q = parse_poly("1 + a").unwrap().embed(&['a', 'b']).unwrap();
        let r = poly_divides(&p, &q).unwrap().unwrap();
        assert_eq!(r, parse_poly("1 + b").unwrap().embed(&['a', 'b']).unwrap());
        assert_eq!(q.mul(&r), p);
    }

    #[test]
    fn division_detects_squares() {
        let p = parse_poly("1 + a^2 b^2").unwrap();
        let q = parse_poly("1 + a b").unwrap();
        assert_eq!(poly_divides(&p, &q).unwrap(), Some(q.clone()));
    }

    #[test]
    fn division_rejects_non_factors() {
        let p = parse_poly("1 + abc").unwrap();
        let q = parse_poly("1 + a").unwrap().embed(&['a', 'b', 'c']).unwrap();
        assert_eq!(poly_divides(&p, &q).unwrap(), None);
    }

    #[test]
    fn embedding_reindexes_support() {
        let p = parse_poly("1 + a").unwrap();
        let e = p.embed(&['a', 'b', 'c']).unwrap();
        let support: BTreeSet<Vec<u32>> = e.support().cloned().collect();
        assert!(support.contains(&vec![1, 0, 0]));
        assert!(p.embed(&['b', 'c']).is_err());
    }

    #[test]
    fn to_series_is_strict_about_the_box() {
        let p = parse_poly("1 + a^5").unwrap();
        assert!(matches!(
            p.to_series(&[3]).unwrap_err(),
            SeriesError::ExponentOutOfBox(_)
        ));
    }
}
