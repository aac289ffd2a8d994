from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from prymkp.errors import DepthTooShallow, NotBigCell
from prymkp.grassmann import Frame, act_loop, base_point, is_big_cell
from prymkp.pdo import MatrixPDO, pdo_act, pdo_invert_monic, pdo_mul
from prymkp.sato import injectivity_witness, random_monic, sigma, sigma_direct, sigma_inverse

from helpers import diag, op1, opn, same_op, same_span, ser

seeds = st.integers(0, 10**6)


def test_sigma_of_identity_is_base_point():
    for n in (1, 2, 3):
        assert sigma(MatrixPDO.identity(n), 2, 5).same_point(base_point(n, 2, 5))


def test_sigma_of_one_plus_x_dinv():
    # w^0 = rho(S^-1) = 1 - z^2 + 3 z^4 - 15 z^6 + 105 z^8 - ...
    S = op1({(0, 0): 1, (-1, 1): 1})
    W = sigma(S, 1, 8)
    w0 = W.basis[(0, 0)]
    assert w0 == {(0, 0): 1, (0, 2): -1, (0, 4): 3, (0, 6): -15, (0, 8): 105}
    oracle = pdo_act(pdo_invert_monic(S, -10), [ser({0: 1})])[0]
    assert all(oracle.coeff(e) == w0.get((0, e), 0) for e in range(0, 9))


def test_sigma_inverse_of_base_point():
    for n in (1, 2):
        S = sigma_inverse(base_point(n, 11, 10), 5, -6)
        assert same_op(S, MatrixPDO.identity(n))


def test_sigma_inverse_rejects_bad_input():
    with pytest.raises(NotBigCell):
        sigma_inverse(Frame(1, 11, 11, {}, True), 5, -6)
    with pytest.raises(DepthTooShallow):
        sigma_inverse(base_point(1, 3, 10), 5, -6)
    with pytest.raises(DepthTooShallow):
        sigma(random_monic(random.Random(0), 1, -4, 2), 2, 6)


def test_injectivity_witness():
    rng = random.Random(11)
    S1, S2 = random_monic(rng, 2, -3, 3), random_monic(rng, 2, -3, 3)
    W1, W2 = sigma(S1, 6, 5), sigma(S2, 6, 5)
    assert injectivity_witness(W1, W1) is None
    j, mu, i, nu = injectivity_witness(W1, W2)
    assert W1.tail_table()[(j, mu)].get((i, nu), 0) != W2.tail_table()[(j, mu)].get((i, nu), 0)


def test_gauge_compatibility_diagonal():
    # sigma(S h) = h^{-1} sigma(S) for constant diagonal h = I + c d^{-1}
    S = random_monic(random.Random(1), 2, -2, 2)
    h = opn(2, {(0, 0): [[1, 0], [0, 1]], (-1, 0): [[2, 0], [0, -1]]})
    W1, W0 = sigma(pdo_mul(S, h), 6, 8), sigma(S, 6, 8)
    hz = diag(ser({0: 1, 1: 2}), ser({0: 1, 1: -1}))
    assert same_span(act_loop(hz, W1), W0)


@settings(max_examples=12, deadline=None)
@given(seeds, st.integers(1, 3))
def test_roundtrip_operator_first(seed, n):
    S = random_monic(random.Random(seed), n, -6, 5)
    W = sigma(S, 11, 10)
    assert is_big_cell(W)
    assert W.same_point(sigma_direct(S, 11, 10))
    assert same_op(sigma_inverse(W, 5, -6), S)


@settings(max_examples=12, deadline=None)
@given(seeds, st.integers(1, 3))
def test_roundtrip_frame_first(seed, n):
    W = sigma(random_monic(random.Random(seed), n, -4, 3, density=0.5), 7, 6)
    assert sigma(sigma_inverse(W, 3, -4), 7, 6).same_point(W)

