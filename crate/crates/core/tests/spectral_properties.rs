use cardy_core::brane::BraneLabel;
use cardy_core::family::SpectralCoverGraph;
use cardy_core::linalg::random_invertible;
use cardy_core::spectral::{brane_to_twisted, lift_label, phi_classify, realize, sheet_nerve, SpectralBrane};
use cardy_core::twisted::{solve_iso, twist_line, verify_iso, IsoWitness, TwistedBundle};
use cardy_core::{CechNerve, Error, Permutation, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

/// Three charts in a cycle; the sheets swap across one edge when `twisted`.
fn double_cover(twisted: bool) -> SpectralCoverGraph {
    let nerve = CechNerve::anonymous(3, vec![(0, 1), (1, 2), (2, 0)], vec![], vec![]).unwrap();
    let swap = Permutation::new(vec![1, 0]).unwrap();
    let id = Permutation::identity(2);
    let last = if twisted { swap } else { id.clone() };
    SpectralCoverGraph::from_transitions(nerve, 2, vec![id.clone(), id, last]).unwrap()
}

fn single_cover() -> SpectralCoverGraph {
    SpectralCoverGraph::from_transitions(CechNerve::complete(3), 1, vec![Permutation::identity(1); 3]).unwrap()
}

#[test]
fn sheet_nerve_of_a_connected_double_cover_is_one_hexagon() {
    let s = sheet_nerve(&double_cover(true));
    assert_eq!(s.chart_count(), 6);
    assert_eq!(s.edges().len(), 6);
    assert_eq!(s.component_count(), 1);
    assert_eq!(sheet_nerve(&double_cover(false)).component_count(), 2);
}

#[test]
fn connected_cover_forces_equal_sheet_ranks() {
    let cover = double_cover(true);
    for (a, b) in [(2, 3), (0, 1), (1, 0)] {
        let r = lift_label(&[BraneLabel::new(vec![a, b])], &cover);
        assert!(matches!(r, Err(Error::InconsistentDims { .. })), "({a}, {b})");
    }
    for d in 0..=3 {
        let l = lift_label(&[BraneLabel::new(vec![d, d])], &cover).unwrap();
        assert!(l.is_connected());
        assert_eq!(l.component_ranks, vec![d]);
    }
    let split = double_cover(false);
    let l = lift_label(&[BraneLabel::new(vec![2, 3])], &split).unwrap();
    assert_eq!(l.component_ranks, vec![2, 3]);
    assert!(matches!(
        brane_to_twisted(&l, None, &tol(), 0),
        Err(Error::Disconnected(2))
    ));
}

fn all_branes(cover: &SpectralCoverGraph, max_dim: usize) -> Vec<SpectralBrane> {
    let n = cover.sheets();
    let mut out = Vec::new();
    let mut dims = vec![0; n];
    loop {
        if let Ok(l) = lift_label(&[BraneLabel::new(dims.clone())], cover) {
            out.push(realize(&l, &[], &tol(), 0).unwrap());
        }
        let mut k = 0;
        while k < n && dims[k] == max_dim {
            dims[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
        dims[k] += 1;
    }
}

#[test]
fn phi_separates_block_multisets_exhaustively() {
    for cover in [single_cover(), double_cover(true), double_cover(false)] {
        let branes = all_branes(&cover, 2);
        let expected = if sheet_nerve(&cover).component_count() == 1 {
            3
        } else {
            9
        };
        assert_eq!(branes.len(), expected);
        let c = phi_classify(&branes, &tol(), 0);
        assert!(c.well_defined && c.injective && c.multiset_separated, "{c:?}");
        // identity gluing: bundle classes are exactly the rank functions
        assert_eq!(c.bundle_classes, c.label_classes);
    }
}

#[test]
fn twisted_gluing_is_recovered_up_to_a_line() {
    let cover = double_cover(true);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for d in 1..=2 {
        let l = lift_label(&[BraneLabel::new(vec![d, d])], &cover).unwrap();
        // non-scalar holonomy around the hexagon; a projective coboundary would be invisible to END
        let mut e = TwistedBundle::trivial(&l.sheet_nerve, d);
        let edge = l.sheet_nerve.edges()[0];
        let m = random_invertible(&mut rng, d);
        e.insert(edge.0, edge.1, m).unwrap();
        let out = brane_to_twisted(&l, Some(&e.end()), &tol(), 5).unwrap();
        assert!(out.report.passed(), "{:?}", out.report.first_failure());
        let w = IsoWitness::identity(l.sheet_nerve.chart_count(), d);
        let line = twist_line(&out.bundle, &e, &w).unwrap();
        assert!(verify_iso(&e.tensor(&line).unwrap(), &out.bundle, &w, &tol()).passed());
        // the gluing is seen by the class when d > 1
        let plain = realize(&l, &[], &tol(), 0).unwrap();
        let glued = realize(&l, &[Some(e.end())], &tol(), 0).unwrap();
        let same = solve_iso(
            &plain.bundles[0].as_ref().unwrap().end(),
            &glued.bundles[0].as_ref().unwrap().end(),
            &tol(),
            0,
        )
        .is_ok();
        assert_eq!(same, d == 1);
    }
}
