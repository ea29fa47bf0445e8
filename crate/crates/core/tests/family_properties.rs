use cardy_core::family::{
    check_cocycle, check_sheet_measure, from_potential, idempotent_frames, monodromy_indices, pointwise_algebra,
    random_potential, sheet_measure, transition_permutations, Chart, Nerve, Polynomial, PotentialFamily,
};
use cardy_core::linalg::{random_matrix, random_scalar};
use cardy_core::scalar::{c, CMat, C64, ONE, ZERO};
use cardy_core::{Error, Tensor3, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn random_chart<R: Rng>(rng: &mut R, n: usize, samples: usize) -> Nerve {
    let pts = (0..samples)
        .map(|_| (0..n).map(|_| random_scalar(rng) * 2.0).collect())
        .collect();
    Nerve::new(
        vec![Chart {
            id: "u".into(),
            samples: pts,
        }],
        vec![],
        vec![],
        vec![],
    )
    .unwrap()
}

#[test]
fn low_dimensional_potentials_always_satisfy_wdvv() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..100 {
        for n in 1..=2 {
            let fam = random_potential(&mut rng, n, 6, &tol());
            let nerve = random_chart(&mut rng, n, 10);
            let f = from_potential(&fam, nerve, &tol());
            assert!(f.is_ok(), "trial {trial}, n = {n}: {:?}", f.err());
        }
    }
}

#[test]
fn random_three_tensors_violate_wdvv() {
    // independent construction: c_0ab = g_ab fixes the unit, the rest is random and symmetric
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    for _ in 0..100 {
        let a = random_matrix(&mut rng, 3, 3);
        let g = (&a + a.transpose()) * c(0.5, 0.0) + CMat::identity(3, 3) * c(3.0, 0.0);
        let mut free = Tensor3::zeros(3);
        for i in 1..3 {
            for j in i..3 {
                for k in j..3 {
                    free.set(i, j, k, random_scalar(&mut rng));
                }
            }
        }
        let t = Tensor3::from_fn(3, |i, j, k| {
            let mut s = [i, j, k];
            s.sort_unstable();
            if s[0] == 0 {
                g[(s[1], s[2])]
            } else {
                free.get(s[0], s[1], s[2])
            }
        });
        if let Err(Error::WdvvViolation { .. }) = pointwise_algebra(&t, &g, 0, &tol()) {
            violations += 1;
        }
    }
    assert!(violations >= 95, "only {violations} of 100 random tensors were flagged");
}

/// `Φ = ½ t₀² t₁ + h(t₁)` with `h''' = s (t − z₀)(t − z₁)`: the algebra `ℂ[x]/(x² − h''')`.
fn two_root_family(s: C64, z0: C64, z1: C64) -> PotentialFamily {
    let p = Polynomial::from_terms(
        2,
        [
            (vec![2, 1], c(0.5, 0.0)),
            (vec![0, 5], s / 60.0),
            (vec![0, 4], -s * (z0 + z1) / 24.0),
            (vec![0, 3], s * z0 * z1 / 6.0),
        ],
    )
    .unwrap();
    let g = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    PotentialFamily::new(p, g, 0, &tol()).unwrap()
}

#[test]
fn sheet_permutations_form_a_cocycle_over_random_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for trial in 0..60 {
        let center = random_scalar(&mut rng) * 3.0;
        let away = |rng: &mut ChaCha8Rng| {
            center + C64::from_polar(rng.random_range(2.0..4.0), rng.random_range(0.0..std::f64::consts::TAU))
        };
        let (z0, z1) = (away(&mut rng), away(&mut rng));
        let s = random_scalar(&mut rng) + c(1.5, 0.0);
        let fam = two_root_family(s, z0, z1);
        let charts = rng.random_range(3..=5);
        let nerve = Nerve::fan(center, 1.0, charts, 6, 2, 1).unwrap();
        let f = from_potential(&fam, nerve, &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), trial).unwrap();
        let cover = transition_permutations(&frames, f.nerve()).unwrap();
        let report = check_cocycle(&cover);
        assert!(report.passed(), "trial {trial}: {:?}", report.first_failure());
        let m = sheet_measure(&f, &cover).unwrap();
        assert!(check_sheet_measure(&f, &cover, &m, &tol()).passed(), "trial {trial}");
        assert!(m.values.iter().all(|sheets| sheets.len() == 2));
        checked += 1;
    }
    assert!(checked >= 50);
}

#[test]
fn monodromy_counts_enclosed_branch_points() {
    // √((t − z₀)(t − z₁)) changes sign once per enclosed simple root
    let fam = two_root_family(ONE, c(0.5, 0.0), c(-0.5, 0.0));
    let one_root = Nerve::circle(c(0.5, 0.0), 0.5, 8, 5, 2, 1).unwrap();
    let both = Nerve::circle(ZERO, 2.0, 8, 9, 2, 1).unwrap();
    let neither = Nerve::circle(c(3.0, 0.0), 1.0, 6, 5, 2, 1).unwrap();
    let loop8: Vec<usize> = (0..8).collect();
    for (nerve, expected, lp) in [
        (one_root, "(1 2)", loop8.clone()),
        (both, "()", loop8),
        (neither, "()", (0..6).collect()),
    ] {
        let f = from_potential(&fam, nerve, &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), 0).unwrap();
        let cover = transition_permutations(&frames, f.nerve()).unwrap();
        assert_eq!(monodromy_indices(&cover, &lp).unwrap().to_string(), expected);
    }
}

#[test]
fn monodromy_is_stable_under_refinement() {
    let fam = cardy_core::family::square_root_family(&tol());
    let loop8: Vec<usize> = (0..8).collect();
    for samples in [3, 5, 9, 17] {
        let f = from_potential(&fam, Nerve::circle(ZERO, 1.0, 8, samples, 2, 1).unwrap(), &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), 0).unwrap();
        let cover = transition_permutations(&frames, f.nerve()).unwrap();
        assert_eq!(
            monodromy_indices(&cover, &loop8).unwrap().to_string(),
            "(1 2)",
            "{samples} samples"
        );
    }
}
