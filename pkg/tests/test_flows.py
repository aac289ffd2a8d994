from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from prymkp.errors import ValidationError
from prymkp.flows import (
    FlowDirection,
    birkhoff_factor,
    birkhoff_residual,
    flow_exponent,
    flow_point,
    kp_rhs,
    lax_check,
    parse_dirs,
)
from prymkp.grassmann import base_point
from prymkp.jets import JetRing
from prymkp.loop import LoopMatrix, TypeVector, embed_heisenberg
from prymkp.pdo import MatrixPDO
from prymkp.sato import random_monic, sigma

from helpers import op1, q, same_op

T1, T2, T11 = TypeVector.of(1), TypeVector.of(2), TypeVector.of(1, 1)
seeds = st.integers(0, 10**6)


def test_parse_dirs():
    assert parse_dirs("1:1, 1:2,2:1") == [FlowDirection(1, 1), FlowDirection(1, 2), FlowDirection(2, 1)]
    with pytest.raises(ValueError):
        parse_dirs("1-2")


def test_flow_exponent_examples():
    e = flow_exponent([], 2, T11)
    assert e.loop().equal_within(LoopMatrix.identity(2))
    e = flow_exponent([FlowDirection(1, 2)], 1, T1)
    t = e.ring.var("t1_2")
    assert e.exp.comps[0].coeffs == {0: 1, -2: t}
    with pytest.raises(ValidationError):
        flow_exponent([FlowDirection(1, 0)], 1, T1)


def test_traceless_trace_vanishes():
    for tv in (T2, T11, TypeVector.of(2, 1)):
        dirs = [FlowDirection(j, i) for j in range(1, tv.ell + 1) for i in (1, 2)]
        assert flow_exponent(dirs, 2, tv, traceless=True).trace.is_zero()
        assert not flow_exponent(dirs, 2, tv).trace.is_zero() or tv == T2


def test_flow_of_identity_exponent_is_trivial():
    W = sigma(random_monic(random.Random(2), 2, -2, 2), 4, 6)
    assert flow_point(flow_exponent([], 2, T11), W).same_point(W)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_base_point_fixed(i):
    # z^{-iK} enters at jet degree K, so the tail must reach past it
    W = base_point(1, 0, 3 * i + 4)
    e = flow_exponent([FlowDirection(1, i)], 3, T1)
    Wt = flow_point(e, W)
    assert Wt.same_point(W)


def test_birkhoff_trivial_cases():
    S0 = random_monic(random.Random(3), 2, -3, 3)
    e = flow_exponent([FlowDirection(1, 1)], 2, T11)
    B = birkhoff_factor(S0, flow_exponent([], 2, T11), floor=-3)
    assert B.S.constant().equal_within(S0, -3) and list(B.S.monomials()) == [B.S.ring.zero_mono]
    assert same_op(B.Y.constant(), MatrixPDO.identity(2))
    B = birkhoff_factor(MatrixPDO.identity(1), flow_exponent([FlowDirection(1, 1)], 2, T1), floor=-3)
    assert list(B.S.monomials()) == [(0,)]
    assert B.Y.coeff((1,)).equal_within(op1({(1, 0): 1}), -3)
    assert B.Y.coeff((2,)).equal_within(op1({(2, 0): q(1, 2)}), -3)
    assert birkhoff_residual(birkhoff_factor(S0, e, floor=-3)).is_zero()


def test_kp_rhs_examples():
    assert kp_rhs(MatrixPDO.identity(2), FlowDirection(1, 1), T11).is_zero()
    S = random_monic(random.Random(3), 1, -3, 3)
    r = kp_rhs(S, FlowDirection(1, 2), T1)
    assert r.top() <= -1
    assert kp_rhs(S, FlowDirection(1, 0), T1).is_zero()


@pytest.mark.parametrize("tv,d", [(T1, FlowDirection(1, 2)), (T2, FlowDirection(1, 1)), (T11, FlowDirection(2, 1))])
def test_kp_rhs_is_first_jet_of_birkhoff(tv, d):
    S = random_monic(random.Random(7), tv.n, -3, 2)
    B = birkhoff_factor(S, flow_exponent([d], 1, tv), floor=-3)
    assert B.S.coeff((1,)).equal_within(kp_rhs(S, d, tv, floor=-3), -3)


def test_lax_examples():
    assert lax_check(MatrixPDO.identity(1), FlowDirection(1, 1), T1).is_zero()
    S = random_monic(random.Random(9), 1, -3, 3)
    assert lax_check(S, FlowDirection(1, 1), T1, floor=-4).is_zero()
    S2 = random_monic(random.Random(9), 2, -2, 2)
    assert lax_check(S2, FlowDirection(1, 1), T2, floor=-3).is_zero()


@settings(max_examples=8, deadline=None)
@given(seeds, st.sampled_from([T1, T2, T11]))
def test_birkhoff_random(seed, tv):
    rng = random.Random(seed)
    S0 = random_monic(rng, tv.n, -2, 2)
    dirs = [FlowDirection(rng.randint(1, tv.ell), rng.randint(1, 2))]
    B = birkhoff_factor(S0, flow_exponent(dirs, 2, tv), floor=-3)
    assert birkhoff_residual(B).is_zero()
    assert all(m >= 0 for P in B.Y.comps.values() for m, _ in P.terms)


def test_flows_commute():
    W = sigma(random_monic(random.Random(5), 2, -2, 2), 4, 6)
    ring = JetRing(["t1_1", "t2_1"], 2)
    e1 = flow_exponent([FlowDirection(1, 1)], 2, T11, ring=ring)
    e2 = flow_exponent([FlowDirection(2, 1)], 2, T11, ring=ring)
    a = flow_point(e1, flow_point(e2, W))
    b = flow_point(e2, flow_point(e1, W))
    assert a.same_point(b)
    both = flow_exponent([FlowDirection(1, 1), FlowDirection(2, 1)], 2, T11, ring=ring)
    assert flow_point(both, W).same_point(a)


def test_flow_exponent_is_heisenberg_exponential():
    e = flow_exponent([FlowDirection(1, 1)], 2, T2)
    prod = e.loop() * e.loop_inverse()
    assert prod.equal_within(LoopMatrix.identity(2))
    assert embed_heisenberg(e.gen).n == 2
