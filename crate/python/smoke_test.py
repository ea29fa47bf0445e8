"""Smoke test for the `cardy` Python module.

Build it first, e.g. `maturin develop -m crates/py/Cargo.toml`, or
`cargo build -p cardy-py --release --features extension-module` and put
`target/release/libcardy.so` on the path as `cardy.so`.
"""

import cmath
import pathlib

import cardy

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "crates" / "cli" / "fixtures"


def close(x, y, eps=1e-9):
    return abs(x - y) < eps


def algebra():
    a = cardy.FrobeniusAlgebra.quadratic(1, (2, 0))
    assert a.dim == 2 and a.validate()["records"]
    idem, weights = a.idempotent_basis()
    for e in idem:
        sq = a.multiply(e, e)
        assert all(close(u, v) for u, v in zip(sq, e))
    assert all(close(w, 1) for w in weights)
    dual = cardy.FrobeniusAlgebra.quadratic(0, (0, 1))
    assert not dual.is_semisimple()

    w = [2, 1j, -0.5]
    p = [[1, 2, 0], [0, 1, 1j], [1, 0, 3]]
    conj = cardy.FrobeniusAlgebra.diagonal(w).conjugate(p)
    idem, weights = conj.idempotent_basis()
    cols = [[p[r][k] for r in range(3)] for k in range(3)]
    for e in idem:
        assert any(all(close(u, v, 1e-8) for u, v in zip(e, c)) for c in cols)


def branes():
    sec = cardy.ClosedSector([1.5, -2, 0.5j])
    a, b, c = cardy.BraneLabel([1, 2, 0]), cardy.BraneLabel([2, 1, 1]), cardy.BraneLabel([0, 1, 3])
    assert a.hom_dim(b) == 4
    for rep in (
        sec.check_cardy(a, b),
        sec.check_sewing(a, b),
        sec.check_centrality(a, b),
        sec.check_adjoint(a),
        sec.check_additivity(a, b, c),
    ):
        assert all(r["status"] == "pass" for r in rep["records"]), rep
    assert [l.dims for l in sec.generator_labels()] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert all(close(r * r, w) for r, w in zip(sec.roots, sec.weights))


def covers():
    assert str(cardy.square_root_monodromy()) == "(1 2)"
    assert cardy.square_root_monodromy(turns=2).is_identity()
    swap = cardy.Permutation([1, 0])
    assert swap.then(swap).is_identity() and str(swap) == "(1 2)"
    assert cardy.DimMatrix([[0, 1], [1, 0]]).is_equivalence()["equivalence"]
    bad = cardy.DimMatrix([[1, 1], [0, 1]]).is_equivalence()
    assert bad["obstruction"]["kind"] == "negative_inverse_entry"


def bundles():
    omega = cardy.TwistedBundle.load(str(FIXTURES / "line_omega.json"))
    trivial = cardy.TwistedBundle.load(str(FIXTURES / "line_trivial.json"))
    inverse = cardy.TwistedBundle.load(str(FIXTURES / "line_omega_inv.json"))
    (lam,) = omega.twist().values()
    assert close(lam, cmath.exp(2j * cmath.pi / 3))
    assert not omega.is_isomorphic(trivial)
    assert omega.tensor(inverse).is_isomorphic(trivial)
    end = omega.end()
    assert all(close(v, 1) for v in end.twist().values())
    assert cardy.psi(omega, [trivial, omega, inverse]).is_isomorphic(trivial)

    rank2 = cardy.TwistedBundle.load(str(FIXTURES / "bundle_rank2_omega.json"))
    recovered, report = cardy.azumaya(rank2.end())
    assert all(r["status"] == "pass" for r in report["records"])
    assert recovered.rank == 2


def reports():
    r = cardy.run("family", str(FIXTURES / "family_sqrt_circle.json"))
    assert r["status"] == "pass"
    assert r["results"]["monodromy"][0]["permutation"] == "(1 2)"
    r = cardy.run("bdr", str(FIXTURES / "bdr_corrupt.json"))
    assert r["status"] == "fail" and r["results"]["suspect_edges"] == ["1->2"]
    assert cardy.run("pipeline", str(FIXTURES / "pipeline_fan.json"), seed=3)["seed"] == 3
    try:
        cardy.run("branes", str(FIXTURES / "branes_zero_weight.json"))
    except ValueError as e:
        assert "degenerate trace" in str(e)
    else:
        raise AssertionError("zero weight accepted")


if __name__ == "__main__":
    for test in (algebra, branes, covers, bundles, reports):
        test()
        print(f"ok  {test.__name__}")
    print(f"cardy {cardy.__version__}: smoke test passed")
