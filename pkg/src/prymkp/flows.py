"""Heisenberg flows with flow times as nilpotent jets.

A direction (j, i) is the flow generated by y_j^{-i}, i.e. y^{-i/n_j} in
block j.  Exponentials are finite jet sums, so every flow identity below is
an exact polynomial identity in the times.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Dict, List, Optional, Sequence

from gmpy2 import mpq

from .errors import ValidationError, WindowUnderflow
from .grassmann import Frame, act_loop
from .jets import JetRing, jet_coefficients
from .loop import HeisenbergElement, LoopMatrix, TypeVector, embed_heisenberg, heisenberg_trace
from .pdo import (
    JetPDO,
    MatrixPDO,
    is_monic_zeroth,
    loop_to_pdo,
    pdo_add,
    pdo_invert_monic,
    pdo_mul,
    pdo_split,
)
from .rational import ONE
from .series import TruncSeries


@dataclass(frozen=True)
class FlowDirection:
    j: int  # block, 1-based
    i: int  # exponent of y_j^{-1}

    @property
    def name(self) -> str:
        return f"t{self.j}_{self.i}"

    def element(self, tv: TypeVector, coeff=ONE) -> HeisenbergElement:
        """coeff * y_j^{-i} as a Heisenberg element."""
        if not 1 <= self.j <= tv.ell:
            raise ValidationError(f"block {self.j} outside 1..{tv.ell}")
        comps = []
        for b, nj in enumerate(tv.parts, start=1):
            if b == self.j:
                comps.append(TruncSeries("y", {-self.i: coeff}, None, nj))
            else:
                comps.append(TruncSeries("y", {}))
        return HeisenbergElement(tv, comps)


def parse_dirs(text: str) -> List[FlowDirection]:
    """'1:1,1:2,2:1' -> directions (block:exponent)."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        a, sep, b = tok.partition(":")
        if not sep:
            raise ValueError(f"direction {tok!r} is not of the form block:exponent")
        out.append(FlowDirection(int(a), int(b)))
    return out


class FlowExponent:
    """e(t) = exp(sum t_d y_{j_d}^{-i_d}) as a jet-valued Heisenberg element."""

    __slots__ = ("tv", "dirs", "ring", "gen", "exp", "exp_inv", "trace")

    def __init__(self, tv, dirs, ring, gen, exp, exp_inv, trace):
        self.tv = tv
        self.dirs = dirs
        self.ring = ring
        self.gen = gen
        self.exp = exp
        self.exp_inv = exp_inv
        self.trace = trace

    def loop(self) -> LoopMatrix:
        return embed_heisenberg(self.exp)

    def loop_inverse(self) -> LoopMatrix:
        return embed_heisenberg(self.exp_inv)


def _jet_exp(X: HeisenbergElement, tv: TypeVector, K: int) -> HeisenbergElement:
    one = HeisenbergElement.scalar(tv, TruncSeries("y", {0: ONE}))
    acc = one
    term = one
    for d in range(1, K + 1):
        term = term * X
        acc = acc + term * mpq(1, factorial(d))
    return acc


def flow_exponent(
    dirs: Sequence[FlowDirection],
    K: int,
    tv: TypeVector,
    traceless: bool = False,
    ring: Optional[JetRing] = None,
) -> FlowExponent:
    if K < 1:
        raise ValidationError("jet degree K must be >= 1")
    for d in dirs:
        if d.i < 1:
            raise ValidationError("flow exponents must be >= 1")
    names = []
    for d in dirs:
        if d.name not in names:
            names.append(d.name)
    if ring is None:
        ring = JetRing(names or ["t"], K)
    gen = HeisenbergElement.zero(tv)
    for d in dirs:
        h = d.element(tv, ring.var(d.name))
        if traceless:
            s = heisenberg_trace(h).scale(mpq(1, tv.n))
            h = h - HeisenbergElement.scalar(tv, s.rename("y"))
        gen = gen + h
    exp = _jet_exp(gen, tv, K)
    exp_inv = _jet_exp(-gen, tv, K)
    return FlowExponent(tv, list(dirs), ring, gen, exp, exp_inv, heisenberg_trace(gen))


def _with_ring(W: Frame, ring: JetRing) -> Frame:
    if W.ring is not None and W.ring != ring:
        raise ValidationError("frame already carries a different jet ring")
    return Frame(W.n, W.M, W.T, W.basis, W.tail, ring)


def flow_point(e: FlowExponent, W: Frame, y: Optional[TruncSeries] = None) -> Frame:
    """W(t) = e(t) W, re-echelonized over the jet ring."""
    if y is None:
        y = TruncSeries("z", {1: ONE})
    Wj = _with_ring(W, e.ring)
    return act_loop(e.loop(), Wj, y, inverse=e.loop_inverse())


def gauge_exponent(tv: TypeVector, j: int, k: int, ring: JetRing, name: str) -> LoopMatrix:
    """exp(s y_j^k) for k >= 1: a jet-valued element of the gauge group."""
    if k < 1:
        raise ValidationError("gauge exponent must be positive")
    X = FlowDirection(j, -k).element(tv, ring.var(name))
    return embed_heisenberg(_jet_exp(X, tv, ring.K))


# -- operators --------------------------------------------------------------


def _split_loop(m: LoopMatrix, ring: Optional[JetRing]) -> Dict[tuple, LoopMatrix]:
    """Rational loop matrices per jet monomial."""
    zero_mono = ring.zero_mono if ring is not None else ()
    parts: Dict[tuple, List[List[Dict]]] = {}
    Ts = [[s.T for s in r] for r in m.rows]
    for i, r in enumerate(m.rows):
        for k, s in enumerate(r):
            for e, c in s.coeffs.items():
                for mono, v in jet_coefficients(c).items():
                    mono = zero_mono if mono is None else mono
                    parts.setdefault(mono, [[{} for _ in range(m.n)] for _ in range(m.n)])[i][k][e] = v
    if not parts:
        parts[zero_mono] = [[{} for _ in range(m.n)] for _ in range(m.n)]
    out = {}
    for mono, rows in parts.items():
        out[mono] = LoopMatrix(
            [[TruncSeries(m.var, rows[i][k], Ts[i][k], m.rows[i][k].d) for k in range(m.n)] for i in range(m.n)],
            m.var,
        )
    return out


def _in_z(m: LoopMatrix, y: Optional[TruncSeries], floor: int) -> LoopMatrix:
    if m.var == "z":
        return m
    if y is None:
        y = TruncSeries("z", {1: ONE})
    return m.substitute(y, T=1 - floor)


def heisenberg_pdo(h: HeisenbergElement, y: Optional[TruncSeries] = None, floor: int = -8) -> MatrixPDO:
    """Constant-coefficient operator of h with z = d^{-1}."""
    m = _in_z(embed_heisenberg(h), y, floor)
    return loop_to_pdo(m, floor)


def heisenberg_jet_pdo(h: HeisenbergElement, ring: JetRing, y: Optional[TruncSeries], floor: int) -> JetPDO:
    m = _in_z(embed_heisenberg(h), y, floor)
    parts = _split_loop(m, ring)
    return JetPDO(ring, m.n, {mono: loop_to_pdo(lm, floor) for mono, lm in parts.items()})


def y_inverse_pdo(n: int, y: Optional[TruncSeries], floor: int) -> MatrixPDO:
    """y^{-1} I_n as an operator (leading term d^r)."""
    from .series import ps_inv

    if y is None:
        y = TruncSeries("z", {1: ONE})
    yi = ps_inv(y, T=1 - floor)
    return loop_to_pdo(LoopMatrix.scalar(n, yi), floor)


def _top(P) -> int:
    if isinstance(P, JetPDO):
        return max([_top(Q) for Q in P.comps.values()] + [0])
    t = P.top()
    return 0 if t is None else max(t, 0)


def _covers(P, floor: int) -> bool:
    if isinstance(P, JetPDO):
        return all(_covers(Q, floor) for Q in P.comps.values())
    return P.floor is None or P.floor <= floor


@dataclass
class Birkhoff:
    S: JetPDO  # S(t), monic zeroth order at every jet degree
    Y: JetPDO  # differential operator
    U: JetPDO  # S(t)^{-1}
    E: JetPDO  # e(t) as an operator
    S0inv: MatrixPDO
    floor: int


def birkhoff_factor(
    S0: MatrixPDO,
    e: FlowExponent,
    y: Optional[TruncSeries] = None,
    floor: int = -4,
) -> Birkhoff:
    """e(t) S0^{-1} = S(t)^{-1} Y(t), one total t-degree at a time.

    At degree a: S0^{-1} Y_a + U_a = G_a - R_a with G_a = E_a S0^{-1} and R_a
    the products of lower pieces; multiplying by S0 and splitting gives
    Y_a = X^+ and U_a = S0^{-1} X^-.
    """
    if not is_monic_zeroth(S0):
        raise ValidationError("S0 must be monic of order zero")
    ring = e.ring
    n = S0.n
    E = heisenberg_jet_pdo(e.exp, ring, y, floor - 2 * ring.K)
    topE = _top(E)
    # products of pieces of total degree a reach K * topE above the floor
    F0 = floor - ring.K * topE - 1
    E = heisenberg_jet_pdo(e.exp, ring, y, F0 - 1)
    S0inv = pdo_invert_monic(S0, F0)
    zero = ring.zero_mono
    U: Dict[tuple, MatrixPDO] = {zero: S0inv}
    Y: Dict[tuple, MatrixPDO] = {zero: MatrixPDO.identity(n)}
    for a in ring.monomials():
        if a == zero:
            continue
        G = pdo_mul(E.coeff(a), S0inv, F0)
        R = MatrixPDO.zero(n)
        for b, Ub in U.items():
            if b == zero:
                continue
            c = tuple(x - z for x, z in zip(a, b))
            if min(c) < 0 or c == zero or c not in Y:
                continue
            R = pdo_add(R, pdo_mul(Ub, Y[c], F0))
        X = pdo_mul(S0, pdo_add(G, R, -ONE), F0)
        Xp, Xm = pdo_split(X)
        Y[a] = Xp
        U[a] = pdo_mul(S0inv, Xm, F0)
    Uj = JetPDO(ring, n, U)
    Yj = JetPDO(ring, n, Y)
    # S(t) = (I + S0 N)^{-1} S0 with N the t-dependent part of U
    N = JetPDO(ring, n, {a: P for a, P in U.items() if a != zero})
    X = JetPDO.const(ring, S0).mul(N, F0)
    I = JetPDO.const(ring, MatrixPDO.identity(n))
    acc, term = I, I
    for _ in range(ring.K):
        term = (-X).mul(term, F0)
        if term.is_zero():
            break
        acc = acc + term
    S = acc.mul(JetPDO.const(ring, S0), F0)
    return Birkhoff(S, Yj, Uj, E, S0inv, floor)


def birkhoff_residual(B: Birkhoff) -> JetPDO:
    """e(t) S0^{-1} - S(t)^{-1} Y(t), restricted to the guaranteed floor."""
    ring = B.E.ring
    lhs = B.E.mul(JetPDO.const(ring, B.S0inv), B.floor)
    rhs = B.U.mul(B.Y, B.floor)
    res = lhs - rhs
    if not _covers(res, B.floor):
        raise WindowUnderflow("Birkhoff residual not determined down to the floor")
    return res.with_window(B.floor)


def kp_rhs(S: MatrixPDO, d: FlowDirection, tv: TypeVector, y: Optional[TruncSeries] = None, floor: int = -4) -> MatrixPDO:
    """-(S h S^{-1})^- S with h = y_j^{-i}: the t-derivative of S."""
    if not is_monic_zeroth(S):
        raise ValidationError("S must be monic of order zero")
    if d.i == 0:
        return MatrixPDO.zero(S.n, floor)
    H = heisenberg_pdo(d.element(tv), y, floor - 2)
    F0 = floor - _top(H) - 1
    H = heisenberg_pdo(d.element(tv), y, F0)
    Sinv = pdo_invert_monic(S, F0)
    B = pdo_mul(pdo_mul(S, H, F0), Sinv, F0)
    _, Bm = pdo_split(B)
    out = -pdo_mul(Bm, S, F0)
    if not _covers(out, floor):
        raise WindowUnderflow("kp_rhs not determined down to the floor")
    return out.with_window(floor)


def lax_check(
    S: MatrixPDO,
    d: FlowDirection,
    tv: TypeVector,
    y: Optional[TruncSeries] = None,
    K: int = 1,
    floor: int = -4,
) -> JetPDO:
    """dP/dt - [(S h S^{-1})^+, P] for P = S(t) y^{-1} S(t)^{-1}; must vanish."""
    e = flow_exponent([d], K, tv)
    ring = e.ring
    n = S.n
    r = 1 if y is None else int(y.lowest_exponent())
    H = heisenberg_pdo(d.element(tv), y, floor - 2)
    hi = _top(H)
    work = floor - 2 * (r + hi) - K * hi - 2
    B = birkhoff_factor(S, e, y, work)
    Yi = JetPDO.const(ring, y_inverse_pdo(n, y, work))
    Hj = JetPDO.const(ring, heisenberg_pdo(d.element(tv), y, work))
    St, Ut = B.S, B.U
    P = St.mul(Yi, work).mul(Ut, work)
    dP = P.derivative(d.name).truncate(K - 1)
    Bt = St.mul(Hj, work).mul(Ut, work)
    Bp, _ = Bt.split()
    comm = (Bp.mul(P, work) - P.mul(Bp, work)).truncate(K - 1)
    res = dP - comm
    if not _covers(res, floor):
        raise WindowUnderflow("Lax residual not determined down to the floor")
    return res.with_window(floor)
