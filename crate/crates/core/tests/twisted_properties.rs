use cardy_core::scalar::{CMat, C64, ONE};
use cardy_core::twisted::{
    azumaya_extract, psi, solve_iso, twist_line, verify_iso, IsoWitness, TwistRepresentatives, TwistedBundle,
};
use cardy_core::{CechNerve, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn tol() -> Tolerance {
    Tolerance::default()
}

const FOURTH_ROOTS: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

fn scalar(z: C64) -> CMat {
    CMat::from_element(1, 1, z)
}

/// Rank-1 bundle on the given edges with twist `g01 g12 g20` on the triangle, if any.
fn line_bundle(nerve: &CechNerve, g: [C64; 3]) -> TwistedBundle {
    let edges = BTreeMap::from([((0, 1), scalar(g[0])), ((1, 2), scalar(g[1])), ((0, 2), scalar(g[2]))]);
    let lambda = if nerve.triangles().is_empty() {
        BTreeMap::new()
    } else {
        BTreeMap::from([([0, 1, 2], g[0] * g[1] / g[2])])
    };
    TwistedBundle::new(nerve.clone(), 1, edges, lambda).unwrap()
}

fn cycle_nerve() -> CechNerve {
    CechNerve::anonymous(3, vec![(0, 1), (1, 2), (0, 2)], vec![], vec![]).unwrap()
}

fn representatives(nerve: &CechNerve) -> TwistRepresentatives {
    if nerve.triangles().is_empty() {
        return TwistRepresentatives::new(vec![TwistedBundle::trivial(nerve, 1)]).unwrap();
    }
    TwistRepresentatives::new(
        FOURTH_ROOTS
            .iter()
            .map(|&l| line_bundle(nerve, [l, ONE, ONE]))
            .collect(),
    )
    .unwrap()
}

fn holonomy(x: &[C64; 3]) -> C64 {
    x[0] * x[1] / x[2]
}

/// Oracle for rank-1 classes of equal twist: on the filled triangle the
/// nerve is contractible, so they always agree; on the bare cycle the
/// holonomy `g01 g12 g20` decides.
fn same_line_class(nerve: &CechNerve, g: &[C64; 3], h: &[C64; 3]) -> bool {
    !nerve.triangles().is_empty() || (holonomy(g) - holonomy(h)).norm() < 1e-12
}

fn all_lines() -> Vec<[C64; 3]> {
    let mut out = Vec::new();
    for a in FOURTH_ROOTS {
        for b in FOURTH_ROOTS {
            for c in FOURTH_ROOTS {
                out.push([a, b, c]);
            }
        }
    }
    out
}

#[test]
fn psi_is_injective_on_enumerated_lines() {
    for nerve in [CechNerve::complete(3), cycle_nerve()] {
        let reps = representatives(&nerve);
        assert!(reps.closed_under_dual(&tol()));
        let data = all_lines();
        let images: Vec<TwistedBundle> = data
            .iter()
            .map(|g| psi(&line_bundle(&nerve, *g), &reps, &tol()).unwrap())
            .collect();
        for img in &images {
            assert!(img.twist().is_trivial(&tol()));
        }
        let twisted = !nerve.triangles().is_empty();
        let mut compared = 0;
        for (p, g) in data.iter().enumerate() {
            for (q, h) in data.iter().enumerate() {
                // Ψ is a bijection for each fixed twist
                if twisted && (holonomy(g) - holonomy(h)).norm() > 1e-12 {
                    continue;
                }
                compared += 1;
                let iso = solve_iso(&images[p], &images[q], &tol(), 0).is_ok();
                assert_eq!(iso, same_line_class(&nerve, g, h), "{g:?} vs {h:?}");
            }
        }
        assert!(compared >= 64 * 16);
    }
}

#[test]
fn psi_undoes_a_representative_twist() {
    let nerve = CechNerve::complete(3);
    let reps = representatives(&nerve);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for rank in 1..=2 {
        let x = TwistedBundle::random(&mut rng, &nerve, rank);
        let ordinary = x.tensor(&x.dual()).unwrap();
        for rep in reps.reps() {
            let out = psi(&ordinary.tensor(rep).unwrap(), &reps, &tol()).unwrap();
            let w = solve_iso(&ordinary, &out, &tol(), 1).unwrap();
            assert!(verify_iso(&ordinary, &out, &w, &tol()).passed());
        }
    }
}

#[test]
fn twist_is_multiplicative_and_hom_cancels_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for charts in 3..=4 {
        let nerve = CechNerve::complete(charts);
        for _ in 0..20 {
            let (r, s) = (rng.random_range(1..=3), rng.random_range(1..=3));
            let e = TwistedBundle::random(&mut rng, &nerve, r);
            let f = TwistedBundle::random(&mut rng, &nerve, s);
            let ef = e.tensor(&f).unwrap();
            assert!(ef.twist().gap(&e.twist().mul(f.twist())) < 1e-12);
            assert!(ef.measured_twist().gap(ef.twist()) < 1e-9);
            assert!(ef.validate(&tol()).passed());
            assert!(e.dual().twist().gap(&e.twist().inv()) < 1e-12);
            let (conj, _) = e.random_conjugate(&mut rng);
            let h = e.hom(&conj).unwrap();
            assert!(h.twist().values().values().all(|z| (z - ONE).norm() < 1e-12));
            assert!(h.validate(&tol()).passed());
        }
    }
}

#[test]
fn conjugates_are_recognised_and_witnesses_preserve_twist() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let nerve = CechNerve::complete(4);
    for rank in 1..=3 {
        let e = TwistedBundle::random(&mut rng, &nerve, rank);
        let (f, w) = e.random_conjugate(&mut rng);
        assert!(verify_iso(&e, &f, &w, &tol()).passed());
        assert_eq!(e.twist(), f.twist());
        let found = solve_iso(&e, &f, &tol(), 2).unwrap();
        assert!(verify_iso(&e, &f, &found, &tol()).passed());
        let other = TwistedBundle::random(&mut rng, &nerve, rank);
        assert!(solve_iso(&e, &other, &tol(), 2).is_err());
    }
}

#[test]
fn azumaya_round_trip_recovers_bundle_up_to_a_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for charts in 3..=4 {
        let nerve = CechNerve::complete(charts);
        for rank in 1..=3 {
            let e = TwistedBundle::random(&mut rng, &nerve, rank);
            let out = azumaya_extract(&e.end(), &tol(), 3).unwrap();
            assert!(out.report.passed());
            let w = IsoWitness::identity(charts, rank);
            let l = twist_line(&out.bundle, &e, &w).unwrap();
            assert!(verify_iso(&e.tensor(&l).unwrap(), &out.bundle, &w, &tol()).passed());
        }
    }
}
