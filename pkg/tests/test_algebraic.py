from __future__ import annotations

import warnings
from pathlib import Path

import pytest

from prymkp.algebraic import (
    StabilizerAlgebra,
    compute_invariants,
    compute_stabilizer_heisenberg,
    compute_stabilizer_scalar,
    conjugate_to_ode,
    default_level,
    genus_heisenberg,
    genus_scalar,
    generated_table,
    prym_dimension,
    raw_genus_heisenberg,
    raw_genus_scalar,
    spectral_cover,
    traceless_dimension,
    verify_triple,
)
from prymkp.bundle import example_names, load_example
from prymkp.errors import NotStabilized, ValidationError
from prymkp.grassmann import Frame, base_point
from prymkp.loop import TypeVector
from prymkp.pdo import commutator, is_differential
from prymkp.rational import ONE
from prymkp.series import TruncSeries, ps_mul

from helpers import Y, heis, ser

GOLDEN = Path(__file__).parent / "golden"
z = ser({1: 1})
T1 = TypeVector.of(1)


def semigroup_table(gens, top=14):
    members = {0}
    for m in range(1, top + 1):
        if any(m - g in members for g in gens if m >= g):
            members.add(m)
    return StabilizerAlgebra("scalar", T1, z, {m: int(m in members) for m in range(top + 1)})


def test_scalar_stabilizer_of_base_point():
    A = compute_stabilizer_scalar(base_point(1, 0, 12), z, 10)
    assert A.orders == list(range(11)) and A.gaps() == []


def test_heisenberg_stabilizer_of_base_point():
    tv = TypeVector.of(1, 1)
    A = compute_stabilizer_heisenberg(base_point(2, 0, 12), tv, z, 8)
    assert all(A.table[L] == 2 for L in A.levels)


def test_cusp_prym_table_stabilizes_at_one():
    ex = load_example("cusp-prym")
    A = compute_stabilizer_heisenberg(ex.W, ex.tv, ex.y, default_level(ex.W, ex.tv))
    assert A.stabilized and A.full == 1
    assert A.gaps() == [1]


@pytest.mark.parametrize("gens,g", [((1,), 0), ((2, 3), 1), ((2, 5), 2), ((3, 4, 5), 2), ((3, 5), 4)])
def test_gap_count(gens, g):
    assert genus_scalar(semigroup_table(gens)) == g


def test_gap_count_on_monomial_frame():
    # W = span{z^2, 1, z^-2, z^-3, ...} is stabilized by k[y^-2, y^-5]
    basis = {(0, e): {(0, e): ONE} for e in (2, 0, -2, -3)}
    W = Frame(1, 3, 12, basis, True)
    A = compute_stabilizer_scalar(W, z, 14)
    assert A.gaps() == [1, 3] and genus_scalar(A) == 2


def test_unstabilized_table_raises():
    A = StabilizerAlgebra("scalar", T1, z, {0: 1, 1: 0, 2: 1, 3: 0})
    with pytest.raises(NotStabilized):
        genus_scalar(A)


def test_cusp_genus_both_paths():
    ex = load_example("cusp-kdv")
    L = default_level(ex.W, ex.tv)
    assert genus_scalar(compute_stabilizer_scalar(ex.W, ex.y, L)) == 1
    assert raw_genus_scalar(ex.W, ex.y, L) == 1
    assert genus_heisenberg(compute_stabilizer_heisenberg(ex.W, ex.tv, ex.y, L)) == 1


def test_cusp_prym_dimensions():
    ex = load_example("cusp-prym")
    inv, _, _ = compute_invariants(ex.W, ex.tv, ex.y)
    assert (inv.g0, inv.gn, inv.prym) == (0, 1, 1)
    Yb = 5
    assert traceless_dimension(ex.W, ex.tv, ex.y, Yb) == 1
    assert raw_genus_heisenberg(ex.W, ex.tv, ex.y, Yb) == 1
    # Jacobian as a Prym: g0 = 0 so the Prym dimension is gn
    assert prym_dimension(inv, ex.W, ex.y, Yb) == inv.gn


def test_product_of_cusps_has_gn_two():
    ex = load_example("cusp-pair")
    inv, _, _ = compute_invariants(ex.W, ex.tv, ex.y)
    assert inv.gn == 2


def test_base_point_invariants():
    ex = load_example("basepoint-n2")
    inv, _, _ = compute_invariants(ex.W, ex.tv, ex.y)
    assert (inv.g0, inv.gn, inv.prym) == (0, 0, 0)


@pytest.mark.parametrize("name", example_names())
def test_invariants_match_golden(name):
    ex = load_example(name)
    inv, _, _ = compute_invariants(ex.W, ex.tv, ex.y)
    assert inv.line() == (GOLDEN / f"{name}.invariants").read_text().strip()


@pytest.mark.parametrize("name", example_names())
def test_triples_pass(name):
    ex = load_example(name)
    rep = verify_triple(ex.A0, ex.An, ex.W, ex.tv, ex.y)
    assert rep.passed, rep.text()


def test_generated_table_of_cusp():
    tab = generated_table([Y(-2), Y(-3)], T1, 8)
    assert [m for m in sorted(tab) if tab[m]] == [0, 2, 3, 4, 5, 6, 7, 8]


def test_broken_triple_reports_first_uncovered_order():
    ex = load_example("cusp-kdv")
    rep = verify_triple(ex.A0[:1], ex.An[:1], ex.W, ex.tv, ex.y)
    assert not rep.passed
    failed = {c.name: c.detail for c in rep.checks if not c.passed}
    assert failed["(5) A_n cofinite"] == "first uncovered order 3"


def test_ode_for_base_point():
    cp = conjugate_to_ode([Y(-1)], [heis((1,), [Y(-1)])], base_point(1, 0, 12), T1, z)
    assert cp.report.passed
    (B,) = cp.B0
    assert set(B.terms) == {(1, 0)}


def test_ode_for_cusp():
    ex = load_example("cusp-kdv")
    cp = conjugate_to_ode(ex.A0, ex.An, ex.W, ex.tv, ex.y, -4)
    assert cp.report.passed, cp.report.text()
    assert [B.top() for B in cp.B0] == [2, 3]
    assert all(B.coeff(B.top(), 0) == [[1]] for B in cp.B0)
    B2, B3 = cp.B0
    assert commutator(B2, B3, -4).is_zero()
    # B2 = d^2 - 2/(1+x)^2
    assert [B2.coeff(0, p)[0][0] for p in range(4)] == [-2, 4, -6, 8]
    assert all(is_differential(B).agree and is_differential(B).structural for B in cp.B0)


def test_ode_for_cusp_prym_is_matrix_valued():
    ex = load_example("cusp-prym")
    cp = conjugate_to_ode(ex.A0, ex.An, ex.W, ex.tv, ex.y, -4)
    assert cp.report.passed, cp.report.text()
    assert all(B.n == 2 for B in cp.B)
    for i, P in enumerate(cp.B):
        for Q in cp.B[i + 1:]:
            assert commutator(P, Q, -4).is_zero()


# -- spectral covers --------------------------------------------------------


def _evaluate(coeffs, x):
    acc = TruncSeries("y", {0: ONE})
    for s in coeffs:
        acc = ps_mul(acc, x) + s
    return acc


def test_spectral_pure_root():
    h, tv = spectral_cover([ser({}, "y"), ser({1: -1}, "y")], 6)
    assert tv == TypeVector.of(2)
    assert h.comps[0].equal_within(ser({"1/2": 1}, "y"))


def test_spectral_ramified_series():
    coeffs = [ser({}, "y"), ser({1: -1, 2: -1}, "y")]
    h, tv = spectral_cover(coeffs, 6)
    x = h.comps[0]
    assert x.equal_within(ser({"1/2": 1, "3/2": "1/2", "5/2": "-1/8", "7/2": "1/16"}, "y"), 4)
    assert _evaluate(coeffs, x).is_zero()


def test_spectral_two_branches():
    coeffs = [ser({1: -1, 3: -1}, "y"), ser({3: 1}, "y")]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h, tv = spectral_cover(coeffs, 6)
    assert tv == TypeVector.of(1, 1)
    assert caught and "2 branches" in str(caught[0].message)
    orders = sorted(int(c.lowest_exponent()) for c in h.comps)
    assert orders == [1, 2]
    for x in h.comps:
        assert _evaluate(coeffs, x).is_zero()


def test_spectral_rejects_irrational_roots():
    with pytest.raises(ValidationError):
        spectral_cover([ser({}, "y"), ser({0: -2}, "y")], 4)
