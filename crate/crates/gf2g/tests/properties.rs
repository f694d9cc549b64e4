//! Randomized invariants that cut across modules: truncation coherence,
//! the slice/series duality, pruning invariance of the product construction,
//! recurrence-search monotonicity, and trace band bounds.

mod common;

use common::load_fixture_cnf;
use gf2g::analysis::{coeff_window, diagonal_series, find_recurrence, trace_support, Band};
use gf2g::automata::{build_chain_dfa, intersect_gf2, intersect_gf2_raw};
use gf2g::lang::{enumerate, LangSlice, ParityCyk, Word};
use gf2g::series::{dual_of_slice, TruncSeries};
use gf2g::solver::extract_dual;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn series_on(bounds: [u32; 2]) -> impl Strategy<Value = TruncSeries> {
    prop::collection::vec((0..=bounds[0], 0..=bounds[1]), 0..=16).prop_map(move |points| {
        let mut s = TruncSeries::zero(&['a', 'b'], &bounds).unwrap();
        for (x, y) in points {
            s.toggle(&[x, y]).unwrap();
        }
        s
    })
}

proptest! {
    /// Restricting to a sub-box commutes with the ring operations: every
    /// product term that lands inside the sub-box is built from factors that
    /// are themselves inside it.
    #[test]
    fn truncation_commutes_with_ring_ops(
        f in series_on([8, 8]),
        g in series_on([8, 8]),
        bx in 0u32..=8,
        by in 0u32..=8,
    ) {
        let sub = [bx, by];
        prop_assert_eq!(
            f.add(&g).restrict_to(&sub).unwrap(),
            f.restrict_to(&sub).unwrap().add(&g.restrict_to(&sub).unwrap())
        );
        prop_assert_eq!(
            f.mul(&g).restrict_to(&sub).unwrap(),
            f.restrict_to(&sub).unwrap().mul(&g.restrict_to(&sub).unwrap())
        );
        prop_assert_eq!(f.restrict_to(&[8, 8]).unwrap(), f.clone());
    }

    /// dual_of_slice is a bijection between chain slices inside the box and
    /// series supports: the support comes back as exactly the exponent pairs
    /// of the words, and rebuilding the slice from the support is lossless.
    #[test]
    fn slice_series_duality_round_trips(
        points in prop::collection::btree_set((0u32..=5, 0u32..=5), 0..=20),
    ) {
        let alphabet: BTreeSet<char> = ['a', 'b'].into_iter().collect();
        let words = points
            .iter()
            .map(|&(i, j)| Word(format!("{}{}", "a".repeat(i as usize), "b".repeat(j as usize))));
        let slice = LangSlice::new(alphabet.clone(), 10, words).unwrap();
        let dual = dual_of_slice(&slice, &['a', 'b'], &[5, 5]).unwrap();
        let support: BTreeSet<(u32, u32)> =
            dual.support().into_iter().map(|e| (e[0], e[1])).collect();
        prop_assert_eq!(&support, &points);
        let rebuilt = LangSlice::new(
            alphabet,
            10,
            support
                .iter()
                .map(|&(i, j)| Word(format!("{}{}", "a".repeat(i as usize), "b".repeat(j as usize)))),
        )
        .unwrap();
        prop_assert_eq!(rebuilt, slice);
    }
}

/// Pruning unreachable and unproductive triples changes neither parities nor
/// the enumerated language of the product grammar.
#[test]
fn pruning_preserves_product_semantics() {
    for (name, letters) in [
        ("one_equality.g2", &['a', 'b', 'c'][..]),
        ("anbn_eps.g2", &['a', 'b'][..]),
        ("astar_bstar.g2", &['a', 'b'][..]),
    ] {
        let cnf = load_fixture_cnf(name);
        let dfa = build_chain_dfa(letters).unwrap();
        let pruned = intersect_gf2(&cnf, &dfa).unwrap();
        let raw = intersect_gf2_raw(&cnf, &dfa).unwrap();
        assert_eq!(pruned.cnf.eps_parity, raw.cnf.eps_parity, "{name}: eps");
        let a = enumerate(&pruned.cnf, 8);
        let b = enumerate(&raw.cnf, 8);
        assert_eq!(a.words, b.words, "{name}: enumerated slices differ");
        let pruned_cyk = ParityCyk::new(&pruned.cnf);
        let raw_cyk = ParityCyk::new(&raw.cnf);
        let mut queue: Vec<String> = vec![String::new()];
        let mut checked = 0usize;
        while let Some(w) = queue.pop() {
            if w.len() >= 6 {
                continue;
            }
            for &c in letters {
                let mut x = w.clone();
                x.push(c);
                assert_eq!(
                    pruned_cyk.parity(&x).unwrap(),
                    raw_cyk.parity(&x).unwrap(),
                    "{name}: parity differs on {x:?}"
                );
                checked += 1;
                queue.push(x);
            }
        }
        assert!(checked > 100);
    }
}

/// Widening the recurrence search space never loses a witness, and the order
/// found stays minimal because candidate orders are tried smallest first.
#[test]
fn recurrence_search_is_monotone() {
    let cnf = load_fixture_cnf("anbn.g2");
    let f = extract_dual(&cnf, &['a', 'b'], &[32, 32]).unwrap();
    let w = coeff_window(&f).unwrap();
    let narrow = find_recurrence(&w, 2, 4, 8).unwrap().expect("narrow search");
    let wide = find_recurrence(&w, 3, 5, 7).unwrap().expect("wide search");
    assert_eq!(narrow.d, 1);
    assert_eq!(wide.d, 1);
    // any exact order-1 witness for this window satisfies p1 = p0 * b
    let b = gf2g::series::parse_poly("b").unwrap();
    for r in [&narrow, &wide] {
        assert_eq!(r.polys[1], r.polys[0].mul(&b));
    }
}

proptest! {
    /// Multiplying the diagonal by a polynomial of total degree d moves each
    /// support point at most d away from the diagonal, so the band of the
    /// product never exceeds d.
    #[test]
    fn diagonal_products_have_bounded_band(
        terms in prop::collection::btree_set(
            (0u32..=4, 0u32..=4, 0u32..=4).prop_filter("total degree <= 4", |(i, j, k)| i + j + k <= 4),
            1..=6,
        ),
    ) {
        let mut g = TruncSeries::zero(&['a', 'b', 'c'], &[12, 12, 12]).unwrap();
        for &(i, j, k) in &terms {
            g.toggle(&[i, j, k]).unwrap();
        }
        let deg = terms.iter().map(|(i, j, k)| i + j + k).max().unwrap();
        let product = diagonal_series(12).unwrap().mul(&g);
        let report = trace_support(&product).unwrap();
        match report.band {
            Band::Bounded(b) => prop_assert!(b <= deg, "band {b} > degree {deg}"),
            Band::ExceedsBox { observed } => {
                prop_assert!(false, "band {observed} escaped the box for degree {deg}")
            }
        }
    }
}
