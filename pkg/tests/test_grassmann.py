from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from prymkp.errors import ParseError
from prymkp.grassmann import (
    Frame,
    act_loop,
    base_point,
    echelonize,
    finite_point,
    format_frame,
    fredholm_index,
    gamma_equivalent,
    is_big_cell,
    loop_inverse,
    parse_frame,
    stabilizes,
    vec_eq,
)
from prymkp.loop import LoopMatrix, TypeVector, gamma_element
from prymkp.rational import ONE
from prymkp.sato import random_monic, sigma

from helpers import diag, heis, q, ser

z = ser({1: 1})
one = ser({0: 1})
y = z


def sample_point():
    return finite_point(2, 1, 8, {(1, 0): {(1, 1): q(1), (2, 2): q(3)}, (2, 1): {(1, 1): q(-2)}})


def test_fredholm_index_examples():
    assert fredholm_index(base_point(3, 2, 5)) == 0
    missing_one = Frame(1, 0, 6, {}, True)
    assert fredholm_index(missing_one) == -1
    extra_z = Frame(1, 0, 6, {(0, 0): {(0, 0): ONE}, (0, 1): {(0, 1): ONE}}, True)
    assert fredholm_index(extra_z) == 1


def test_big_cell_examples():
    assert is_big_cell(base_point(2, 1, 4))
    assert not is_big_cell(Frame(1, 0, 6, {}, True))
    S = random_monic(random.Random(3), 2, -3, 3)
    assert is_big_cell(sigma(S, 6, 5))


def test_act_identity_and_shift():
    W = sample_point()
    assert act_loop(LoopMatrix.identity(2, "z"), W).same_point(W)
    # z e_1 joins the base point: the index goes up by one
    shifted = act_loop(diag(z, one), base_point(2, 0, 6))
    assert fredholm_index(shifted) == 1
    assert fredholm_index(act_loop(diag(ser({-1: 1}), one), base_point(2, 0, 6))) == -1


def test_gamma_on_base_point_moves_it():
    b = base_point(1, 0, 8)
    assert act_loop(gamma_element(heis((1,), [ser({}, "y")])), b, y).same_point(b)
    moved = act_loop(gamma_element(heis((1,), [ser({1: 1}, "y")])), b, y)
    assert not moved.same_point(b)
    assert any(moved.tail_table().values())


def test_stabilizes_examples():
    b = base_point(2, 0, 6)
    assert stabilizes(LoopMatrix.scalar(2, one), sample_point())
    assert stabilizes(diag(ser({-1: 1}), ser({-1: 1})), b)
    assert not stabilizes(LoopMatrix.scalar(2, z), b)


def test_stabilizers_closed_under_products():
    W = finite_point(1, 0, 12, {(1, 0): {(1, 1): q(1)}})
    a, b = LoopMatrix([[ser({-2: 1})]]), LoopMatrix([[ser({-3: 1})]])
    assert stabilizes(a, W) and stabilizes(b, W)
    assert stabilizes(a * b, W) and stabilizes(a * a * b, W)
    assert not stabilizes(LoopMatrix([[ser({-1: 1})]]), W)


def test_gamma_equivalent_examples():
    tv = TypeVector.of(2)
    W1 = sample_point()
    assert gamma_equivalent(W1, W1, tv, y).equal_within(LoopMatrix.identity(2))
    g = gamma_element(heis((2,), [ser({q(1, 2): 2, 1: -1, q(3, 2): q(1, 3)}, "y")]))
    W2 = act_loop(g, W1, y)
    assert fredholm_index(W2) == fredholm_index(W1)
    assert gamma_equivalent(W1, W2, tv, y).equal_within(g, 4)
    b = base_point(2, 0, 8)
    W3 = act_loop(diag(ser({0: 1, 1: 1}), one), b)
    assert gamma_equivalent(b, W3, tv, y) is None


def test_gamma_equivalent_is_symmetric_and_transitive():
    tv = TypeVector.of(1, 1)
    W1 = sample_point()
    g = gamma_element(heis((1, 1), [ser({1: 1, 2: q(1, 2)}, "y"), ser({1: -3}, "y")]))
    h = gamma_element(heis((1, 1), [ser({2: 5}, "y"), ser({1: 1, 3: 1}, "y")]))
    W2 = act_loop(g, W1, y)
    W3 = act_loop(h, W2, y)
    back = gamma_equivalent(W2, W1, tv, y)
    assert back is not None and (back * g).equal_within(LoopMatrix.identity(2), 4)
    assert gamma_equivalent(W1, W3, tv, y).equal_within(h * g, 4)


def test_frame_literal_roundtrip():
    W = sample_point()
    text = format_frame(W)
    assert text.splitlines()[0] == "n=2 M=1 N=8 index=0"
    assert parse_frame(text).same_point(W)
    assert format_frame(parse_frame(text)) == text
    with pytest.raises(ParseError):
        parse_frame("n=2 M=1 index=0\n")


coef = st.integers(-3, 3).map(q)


@settings(max_examples=25, deadline=None)
@given(st.lists(coef, min_size=6, max_size=6), st.lists(coef, min_size=3, max_size=3))
def test_echelon_basis_independent(tails, mix):
    W = finite_point(2, 1, 5, {(1, 0): {(1, 1): tails[0], (2, 3): tails[1]}, (2, 0): {(1, 2): tails[2]},
                               (1, 1): {(2, 1): tails[3]}, (2, 1): {(1, 4): tails[4], (2, 2): tails[5]}})
    vecs = W.vectors()
    # unitriangular recombination spans the same space
    new = []
    for i, v in enumerate(vecs):
        w = dict(v)
        for c, u in zip(mix, vecs[i + 1:]):
            for k, x in u.items():
                w[k] = w.get(k, 0) + c * x
        new.append(w)
    W2 = echelonize(2, reversed(new), W.M, W.T)
    assert W2.same_point(W)
    assert format_frame(W2) == format_frame(W)
    assert echelonize(2, W2.vectors(), W2.M, W2.T).same_point(W2)


@settings(max_examples=15, deadline=None)
@given(st.lists(coef, min_size=3, max_size=3), st.lists(coef, min_size=2, max_size=2))
def test_gamma_preserves_index(tails, hs):
    W = finite_point(2, 0, 6, {(1, 0): {(1, 1): tails[0], (2, 2): tails[1]}, (2, 0): {(2, 1): tails[2]}})
    g = gamma_element(heis((2,), [ser({q(1, 2): hs[0], 1: hs[1], 2: 1}, "y")]))
    W2 = act_loop(g, W, y)
    assert fredholm_index(W2) == fredholm_index(W) == 0
    back = act_loop(loop_inverse(g.substitute(y)), W2)
    # the inverse image is an open frame; compare spans on the common window
    T = min(back.T, W.T)
    a, b = back.truncated(T), W.truncated(T)
    assert set(a.basis) == set(b.basis)
    assert all(vec_eq(a.basis[k], b.basis[k]) for k in a.basis)
