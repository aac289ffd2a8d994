"""Stabilizer algebras of a point, curve invariants and commuting operators.

Orders are measured in the filtration where y_j^{-1} has order 1 in every
block j (so a scalar y^{-1} has order n_j in block j).  At level L the
graded piece of A_n sits inside k^ell, one slot per block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import gmpy2
from gmpy2 import mpq

from .errors import (
    MismatchError,
    NotDifferential,
    NotStabilized,
    NotTotallyRamified,
    ValidationError,
    WindowUnderflow,
)
from .grassmann import (
    Frame,
    Loop,
    fredholm_index,
    heisenberg_basis_loop,
    is_big_cell,
    membership_equations,
    stabilizes,
    y_powers,
)
from .linalg import RHS, Echelon, dense_rank
from .loop import (
    HeisenbergElement,
    LoopMatrix,
    TypeVector,
    embed_heisenberg,
    filtration_order,
)
from .pdo import (
    MatrixPDO,
    commutator,
    is_differential,
    mat_eye,
    pdo_add,
    pdo_invert_monic,
    pdo_mul,
)
from .rational import ONE, ZERO
from .series import TruncSeries, ps_mul

Col = Tuple[int, int]  # (block, key) for the coefficient of y_j^{key}


def _ceil(x) -> int:
    x = mpq(x)
    return -((-x.numerator) // x.denominator)


def _y_order(y: TruncSeries) -> int:
    if y.var != "z":
        raise ValidationError("y must be a series in z")
    r = y.lowest_exponent()
    if r is None or mpq(r).denominator != 1 or r < 1:
        raise ValidationError("y must have positive integral order in z")
    if y.leading_coefficient() != 1:
        raise ValidationError("y must be monic")
    return int(r)


# -- linear systems for membership --------------------------------------------


class _System:
    """Equations for sum_{(j,k)} c_{j,k} y_j^k stabilizing W.

    Unknowns run over lo[j] <= k <= hi[j]; ``hi`` is chosen so that every
    coefficient contributing inside the window of W is present.
    """

    def __init__(self, W: Frame, tv: TypeVector, y: TruncSeries, lo: Sequence[int]):
        r = _y_order(y)
        self.tv = tv
        self.scalar = False
        pole_z = max(_ceil(mpq(-l * r, nj)) for l, nj in zip(lo, tv.parts))
        mu_cap = W.M + max(pole_z, 0) + r
        reach = W.T + mu_cap
        self.lo = list(lo)
        self.hi = [_ceil(mpq(reach * nj, r)) for nj in tv.parts]
        q_lo = min(l // nj for l, nj in zip(lo, tv.parts)) - 1
        q_hi = max(_ceil(mpq(h, nj)) for h, nj in zip(self.hi, tv.parts)) + 1
        yz = y_powers(y, q_lo, q_hi, W.T + mu_cap + 1)
        self.cols: List[Col] = []
        cands = []
        for j, nj in enumerate(tv.parts):
            for k in range(self.lo[j], self.hi[j] + 1):
                cands.append(((j, k), heisenberg_basis_loop(tv, j, k, yz)))
                self.cols.append((j, k))
        self.rows = membership_equations(W, W, cands, None, mu_cap)

    def echelon(self, extra: Sequence[Dict] = ()) -> Echelon:
        ech = Echelon(order=lambda c: (c[1], c[0]))
        for row in self.rows:
            ech.add(row)
        for row in extra:
            ech.add(row)
        return ech

    def element(self, sol: Dict[Col, mpq]):
        comps = []
        for j, nj in enumerate(self.tv.parts):
            coeffs = {k: c for (jj, k), c in sol.items() if jj == j and c}
            comps.append(TruncSeries("y", coeffs, mpq(self.hi[j] + 1, nj), nj))
        if self.scalar:
            return comps[0]
        return HeisenbergElement(self.tv, comps)


# -- stabilizer algebras ------------------------------------------------------


@dataclass
class StabilizerAlgebra:
    kind: str  # "scalar" or "heisenberg"
    tv: TypeVector
    y: TruncSeries
    table: Dict[int, int]  # level -> dim of the graded piece
    generators: List[Tuple[int, object]] = field(default_factory=list)
    R: int = 2

    @property
    def levels(self) -> List[int]:
        return sorted(self.table)

    @property
    def full(self) -> int:
        return 1 if self.kind == "scalar" else self.tv.ell

    @property
    def orders(self) -> List[int]:
        return [m for m in self.levels if self.table[m] > 0]

    @property
    def stabilized(self) -> bool:
        """The last max(R, smallest positive order) levels are full."""
        pos = [m for m in self.orders if m > 0]
        if not pos:
            return False
        need = max(self.R, min(pos))
        top = max(self.levels)
        if top - need + 1 < 1:
            return False
        return all(self.table.get(m, 0) == self.full for m in range(top - need + 1, top + 1))

    def gaps(self) -> List[int]:
        return [m for m in self.levels if m >= 1 and self.table[m] < self.full]


def _default_R(tv: TypeVector) -> int:
    return 2 * max(tv.parts)


def compute_stabilizer_scalar(
    W: Frame, y: TruncSeries, m_max: int, R: Optional[int] = None, tv: Optional[TypeVector] = None
) -> StabilizerAlgebra:
    """A_0 = {a in k((y)) : a W in W} level by level (level m = pole order in y)."""
    one = TypeVector.of(1)
    table: Dict[int, int] = {}
    gens = []
    for m in range(m_max + 1):
        sysm = _scalar_system(W, y, m)
        ech = sysm.echelon([{(0, -m): ONE, RHS: ONE}])
        if ech.inconsistent:
            table[m] = 0
            continue
        table[m] = 1
        gens.append((m, sysm.element(ech.solution())))
    R = R if R is not None else _default_R(tv or one)
    return StabilizerAlgebra("scalar", one, y, table, _minimal(gens, table), R)


def _scalar_system(W: Frame, y: TruncSeries, m: int) -> _System:
    s = _System.__new__(_System)
    tv = TypeVector.of(1)
    r = _y_order(y)
    mu_cap = W.M + m * r + r
    reach = W.T + mu_cap
    s.tv = tv
    s.scalar = True
    s.lo = [-m]
    s.hi = [_ceil(mpq(reach, r))]
    yz = y_powers(y, -m - 1, s.hi[0] + 1, W.T + mu_cap + 1)
    s.cols = [(0, k) for k in range(-m, s.hi[0] + 1)]
    cands = [((0, k), Loop(LoopMatrix.scalar(W.n, yz[k]))) for k in range(-m, s.hi[0] + 1)]
    s.rows = membership_equations(W, W, cands, None, mu_cap)
    return s


def _minimal(gens, table) -> List[Tuple[int, object]]:
    """Keep generators whose order is not a sum of smaller present orders."""
    out = []
    reach = {0}
    for m, g in sorted(gens, key=lambda t: t[0]):
        if m == 0:
            continue
        if m in reach:
            continue
        out.append((m, g))
        reach = _semigroup(reach | {m}, max(table))
    return out


def _semigroup(gens, top: int):
    s = {0}
    changed = True
    while changed:
        changed = False
        for a in list(s):
            for g in gens:
                if g and a + g <= top and a + g not in s:
                    s.add(a + g)
                    changed = True
    return s


def compute_stabilizer_heisenberg(
    W: Frame, tv: TypeVector, y: TruncSeries, m_max: int, R: Optional[int] = None, generators: bool = False
) -> StabilizerAlgebra:
    """A_n = {h in H_n(y) : h W in W}; table[L] = dim of level L modulo level L-1."""
    if tv.n != W.n:
        raise ValidationError("type does not match the frame size")
    table: Dict[int, int] = {}
    gens = []
    for L in range(m_max + 1):
        sysL = _System(W, tv, y, [-L] * tv.ell)
        ech = sysL.echelon()
        lead = [(j, -L) for j in range(tv.ell)]
        null = ech.nullspace(sysL.cols)
        proj = Echelon()
        pivots = []
        for v in null:
            p = proj.add({c: v.get(c, ZERO) for c in lead if v.get(c)})
            if p is not None:
                pivots.append(p)
        table[L] = len(pivots)
        if not generators:
            continue
        for p in sorted(pivots):
            extra = [{c: ONE, RHS: ONE if c == p else ZERO} for c in sorted(pivots)]
            e2 = sysL.echelon(extra)
            if e2.inconsistent:
                raise MismatchError("normalized generator unexpectedly inconsistent")
            gens.append((L, sysL.element(e2.solution())))
    R = R if R is not None else _default_R(tv)
    return StabilizerAlgebra("heisenberg", tv, y, table, gens, R)


# -- genera ---------------------------------------------------------------------


def genus_scalar(A0: StabilizerAlgebra) -> int:
    if not A0.stabilized:
        raise NotStabilized("order table of A_0 has not stabilized; raise the level bound")
    return len(A0.gaps())


def genus_heisenberg(An: StabilizerAlgebra) -> int:
    """sum over levels L >= 1 of (ell - dim gr_L A_n)."""
    if not An.stabilized:
        raise NotStabilized("dimension table of A_n has not stabilized; raise the level bound")
    return sum(An.full - An.table[L] for L in An.levels if L >= 1)


def _polar_rank(W: Frame, tv: TypeVector, y: TruncSeries, Y: int, add_scalars: bool = False) -> Tuple[int, int]:
    """(number of polar slots, rank of polar parts) for elements of y-order <= Y.

    One homogeneous system with per-block caps -Y n_j; the polar parts of its
    null space are counted with dense elimination.
    """
    lo = [-Y * nj for nj in tv.parts]
    sysY = _System(W, tv, y, lo)
    ech = sysY.echelon()
    null = ech.nullspace(sysY.cols)
    slots = [(j, k) for j, nj in enumerate(tv.parts) for k in range(-Y * nj, 0)]
    mat = [[v.get(c, ZERO) for c in slots] for v in null]
    if add_scalars:
        for s in range(1, Y + 1):
            mat.append([ONE if k == -s * tv.parts[j] else ZERO for (j, k) in slots])
    return len(slots), dense_rank(mat) if mat else 0


def raw_genus_scalar(W: Frame, y: TruncSeries, Y: int) -> int:
    """dim k((y)) / (A_0 + k[[y]]) truncated at pole order Y, by elimination."""
    return Y - _scalar_polar_rank(W, y, Y)


def raw_genus_heisenberg(W: Frame, tv: TypeVector, y: TruncSeries, Y: int) -> int:
    """dim H_n(y) / (A_n + sum_j k[[y_j]]) with y-order cap Y, by elimination."""
    slots, rk = _polar_rank(W, tv, y, Y)
    return slots - rk


def traceless_dimension(W: Frame, tv: TypeVector, y: TruncSeries, Y: int) -> int:
    """dim H_n(y) / (A_n + sum_j k[[y_j]] + k((y))) with cap Y."""
    slots, rk = _polar_rank(W, tv, y, Y, add_scalars=True)
    return slots - rk


@dataclass
class GeometricInvariants:
    g0: int
    gn: int
    prym: int
    ell: int
    tv: TypeVector
    rank: int
    index: int
    stabilized: bool

    def line(self) -> str:
        return (
            f"g0={self.g0} gn={self.gn} prym={self.prym} type={self.tv} rank={self.rank} "
            f"index={self.index} stabilized={'yes' if self.stabilized else 'no'}"
        )


def prym_dimension(inv: GeometricInvariants, W: Optional[Frame] = None, y: Optional[TruncSeries] = None, Y: Optional[int] = None) -> int:
    """gn - g0, checked against the traceless tangent dimension when W is given."""
    if not inv.stabilized:
        raise NotStabilized("invariants are not stabilized")
    p = inv.gn - inv.g0
    if W is not None:
        t = traceless_dimension(W, inv.tv, y, Y)
        if t != p:
            raise MismatchError(f"gn - g0 = {p} but the traceless tangent space has dimension {t}")
    return p


def default_level(W: Frame, tv: TypeVector) -> int:
    return max(8, 2 * W.M + 4 * max(tv.parts) + 2)


def compute_invariants(
    W: Frame, tv: TypeVector, y: TruncSeries, m_max: Optional[int] = None, R: Optional[int] = None
) -> Tuple[GeometricInvariants, StabilizerAlgebra, StabilizerAlgebra]:
    L = m_max if m_max is not None else default_level(W, tv)
    A0 = compute_stabilizer_scalar(W, y, max(L // max(tv.parts), 2), R, tv)
    An = compute_stabilizer_heisenberg(W, tv, y, L, R)
    stab = A0.stabilized and An.stabilized
    g0 = len(A0.gaps())
    gn = sum(An.full - An.table[l] for l in An.levels if l >= 1)
    inv = GeometricInvariants(g0, gn, gn - g0, tv.ell, tv, _y_order(y), fredholm_index(W), stab)
    if stab:
        Y = _ceil(mpq(L, max(tv.parts)))
        prym_dimension(inv, W, y, Y)
        raw0 = raw_genus_scalar(W, y, Y)
        rawn = raw_genus_heisenberg(W, tv, y, Y)
        if raw0 != g0 or rawn != gn:
            raise MismatchError(f"gap counts ({g0}, {gn}) disagree with elimination ({raw0}, {rawn})")
    return inv, A0, An


# -- generated algebras and the triple check --------------------------------


def _as_heis(a, tv: TypeVector) -> HeisenbergElement:
    if isinstance(a, HeisenbergElement):
        return a
    return HeisenbergElement.scalar(tv, a)


def _products(gens: Sequence[HeisenbergElement], L: int) -> List[HeisenbergElement]:
    """Monomials in the generators of filtration order <= L (identity included)."""
    orders = [filtration_order(g) for g in gens]
    # order-zero generators are taken once; their powers add nothing new graded
    out = [g for g, o in zip(gens, orders) if o <= 0]
    gens = [g for g, o in zip(gens, orders) if o > 0]
    orders = [o for o in orders if o > 0]
    frontier = [((), None)]
    seen = set()
    while frontier:
        idx, el = frontier.pop()
        out.append(el)
        for k, (g, o) in enumerate(zip(gens, orders)):
            if idx and k < idx[-1]:
                continue
            key = idx + (k,)
            if sum(orders[i] for i in key) > L or key in seen:
                continue
            seen.add(key)
            frontier.append((key, g if el is None else el * g))
    return out


def generated_table(gens: Sequence, tv: TypeVector, L: int) -> Dict[int, int]:
    """dim of level l in the algebra generated by gens (constants included)."""
    hs = [_as_heis(g, tv) for g in gens]
    one = HeisenbergElement.scalar(tv, TruncSeries("y", {0: ONE}))
    elems = [one] + [e for e in _products(hs, L) if e is not None]
    ech = Echelon(order=lambda c: (-c[0], c[1]))
    table = {l: 0 for l in range(L + 1)}
    for e in elems:
        row = {}
        for j, (nj, a) in enumerate(zip(tv.parts, e.comps)):
            for lev in range(L + 1):
                c = a.coeff(mpq(-lev, nj))
                if c:
                    row[(lev, j)] = c
        p = ech.add(row)
        if p is not None:
            table[p[0]] += 1
    return table


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{self.name}: {'pass' if self.passed else 'FAIL'}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class Report:
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks) + "\n"


def _rank_over_A0(W: Frame, tv: TypeVector, y: TruncSeries, Y: int) -> Tuple[int, int]:
    """Growth of polar ranks per unit of y-order for A_n and A_0."""
    _, rn1 = _polar_rank(W, tv, y, Y)
    _, rn0 = _polar_rank(W, tv, y, Y - 1)
    s1 = _scalar_polar_rank(W, y, Y)
    s0 = _scalar_polar_rank(W, y, Y - 1)
    return rn1 - rn0, s1 - s0


def _scalar_polar_rank(W: Frame, y: TruncSeries, Y: int) -> int:
    s = _scalar_system(W, y, Y)
    null = s.echelon().nullspace(s.cols)
    slots = [(0, k) for k in range(-Y, 0)]
    mat = [[v.get(c, ZERO) for c in slots] for v in null]
    return dense_rank(mat) if mat else 0


def verify_triple(
    A0_gens: Sequence[TruncSeries],
    An_gens: Sequence[HeisenbergElement],
    W: Frame,
    tv: TypeVector,
    y: TruncSeries,
    L: Optional[int] = None,
    index: int = 0,
) -> Report:
    """Conditions (1)-(7) of algebraic data at truncation, with witnesses."""
    checks: List[Check] = []
    L = L if L is not None else default_level(W, tv)
    idx = fredholm_index(W)
    checks.append(Check("(1) index", idx == index, f"index={idx}"))
    ok2 = tv.n == W.n and all(p >= 1 for p in tv.parts)
    checks.append(Check("(2) type", ok2, f"type={tv} n={W.n}"))
    try:
        r = _y_order(y)
        checks.append(Check("(3) y monic", True, f"order -{r} in z^-1"))
    except ValidationError as exc:
        checks.append(Check("(3) y monic", False, str(exc)))
        return Report(checks)
    Lmax = max(tv.parts)
    A0 = compute_stabilizer_scalar(W, y, max(L // Lmax, 2), tv=tv)
    An = compute_stabilizer_heisenberg(W, tv, y, L)
    gen0 = generated_table([_as_heis(a, TypeVector.of(1)) for a in A0_gens], TypeVector.of(1), max(A0.levels))
    bad0 = [m for m in A0.levels if gen0.get(m, 0) != A0.table[m]]
    checks.append(
        Check(
            "(4) A_0 cofinite",
            A0.stabilized and not bad0,
            f"first uncovered order {bad0[0]}" if bad0 else f"gaps={A0.gaps()}",
        )
    )
    genn = generated_table(An_gens, tv, L)
    badn = [m for m in An.levels if genn.get(m, 0) != An.table[m]]
    checks.append(
        Check(
            "(5) A_n cofinite",
            An.stabilized and not badn,
            f"first uncovered order {badn[0]}" if badn else "table stabilized" if An.stabilized else "not stabilized",
        )
    )
    in_an = all(stabilizes(embed_heisenberg(HeisenbergElement.scalar(tv, a.rename("y"))), W, y) for a in A0_gens)
    Y = _ceil(mpq(L, Lmax))
    dn, d0 = _rank_over_A0(W, tv, y, Y)
    ok6 = in_an and d0 > 0 and dn == tv.n * d0
    checks.append(Check("(6) A_0 in A_n, rank n", ok6, f"growth {dn}/{d0}"))
    bad7 = [i for i, h in enumerate(An_gens, start=1) if not stabilizes(embed_heisenberg(h), W, y)]
    bad7 += [f"A0:{i}" for i, a in enumerate(A0_gens, start=1) if not stabilizes(LoopMatrix.scalar(W.n, a.rename("y")), W, y)]
    checks.append(Check("(7) A_n W in W", not bad7, f"failing generators {bad7}" if bad7 else ""))
    return Report(checks)


# -- commuting differential operators ------------------------------------------


@dataclass
class CommutingPair:
    B0: List[MatrixPDO]
    B: List[MatrixPDO]
    S: MatrixPDO
    P: MatrixPDO
    report: Report
    floor: int
    note: str = "commutative; maximality holds under smoothness hypotheses and is not certified here"


def _series_pdo(a: TruncSeries, n: int, y: TruncSeries, floor: int) -> MatrixPDO:
    from .flows import heisenberg_pdo

    return heisenberg_pdo(HeisenbergElement.scalar(TypeVector.of(n), a.rename("y")), y, floor)


def _heis_pdo(h: HeisenbergElement, y: TruncSeries, floor: int) -> MatrixPDO:
    from .flows import heisenberg_pdo

    return heisenberg_pdo(h, y, floor)


def _pdo_order(P: MatrixPDO) -> Optional[int]:
    return P.top()


def conjugate_to_ode(
    A0_gens: Sequence[TruncSeries],
    An_gens: Sequence[HeisenbergElement],
    W: Frame,
    tv: TypeVector,
    y: TruncSeries,
    floor: int = -4,
) -> CommutingPair:
    """B = S A S^{-1} for S = sigma^{-1}(W), with the pair conditions checked."""
    from .sato import sigma_inverse_window

    if not is_big_cell(W) or fredholm_index(W) != 0:
        raise ValidationError("conjugation needs a big-cell point of index 0")
    r = _y_order(y)
    n = W.n
    gens_n = [_heis_pdo(h, y, floor - 1) for h in An_gens]
    gens_0 = [_series_pdo(a, n, y, floor - 1) for a in A0_gens]
    top = max([_pdo_order(g) or 0 for g in gens_n + gens_0] + [r])
    F = floor - top - 1
    wt = W.N + 1
    Wd = W.extended(max(W.M, wt))
    S = sigma_inverse_window(Wd, wt, F)
    Sinv = pdo_invert_monic(S, F)

    def conj(A: MatrixPDO) -> MatrixPDO:
        A = A.with_window(F)
        return pdo_mul(pdo_mul(S, A, F), Sinv, F)

    B = [conj(g) for g in gens_n]
    B0 = [conj(g) for g in gens_0]
    for Q in B + B0:
        if Q.floor is not None and Q.floor > floor:
            raise WindowUnderflow("conjugated operator not determined down to the floor")
    checks: List[Check] = []
    # (1) constants, B_0 inside B, everything differential
    diffs = [is_differential(Q, depth=2) for Q in B0 + B]
    agree = all(d.agree for d in diffs)
    if not agree:
        raise NotDifferential("structural and base-point differential tests disagree")
    ok1 = all(d.structural for d in diffs)
    in_an = all(stabilizes(LoopMatrix.scalar(n, a.rename("y")), W, y) for a in A0_gens)
    checks.append(Check("(1) k in B0 in B in gl(n,D)", ok1 and in_an, "all images differential" if ok1 else "negative orders present"))
    if not ok1:
        raise NotDifferential("a conjugated generator has negative orders within the window")
    # (2) commutativity
    allg = B0 + B
    bad = []
    for i in range(len(allg)):
        for j in range(i + 1, len(allg)):
            Cm = commutator(allg[i], allg[j], floor)
            if not Cm.is_zero():
                bad.append((i + 1, j + 1))
    checks.append(Check("(2) commutative", not bad, f"noncommuting pairs {bad}" if bad else f"{len(allg)} generators"))
    # (3) P = S y^{-1} S^{-1} has leading term I d^r and B0 lies in k((P^{-1}))
    from .flows import y_inverse_pdo

    Yi = y_inverse_pdo(n, y, F)
    P = conj(Yi)
    lead = P.terms.get((r, 0))
    ok3 = P.top() == r and lead == mat_eye(n) and all(p == 0 for (m, p) in P.terms if m == r)
    Pinv = conj(_series_pdo(y, n, y, F))
    bad3 = []
    for idx, (a, Bq) in enumerate(zip(A0_gens, B0), start=1):
        aP = _poly_in(a, P, Pinv, F)
        if not aP.equal_within(Bq, floor):
            bad3.append(idx)
    checks.append(Check("(3) B0 in k((P^-1))", ok3 and not bad3, f"P has order {P.top()}" + (f"; failing {bad3}" if bad3 else "")))
    # (4) Fredholm projection of B0, by order bookkeeping on A_0
    Lmax = max(tv.parts)
    L = default_level(W, tv)
    A0 = compute_stabilizer_scalar(W, y, max(L // Lmax, 2), tv=tv)
    checks.append(Check("(4) B0 Fredholm", A0.stabilized, f"cokernel of A_0 has dimension {len(A0.gaps())}"))
    # (5) rank n over B0
    Y = _ceil(mpq(L, Lmax))
    dn, d0 = _rank_over_A0(W, tv, y, Y)
    checks.append(Check("(5) rank n over B0", d0 > 0 and dn == n * d0, f"growth {dn}/{d0}"))
    return CommutingPair(B0, B, S, P, Report(checks), floor)


def _poly_in(a: TruncSeries, P: MatrixPDO, Pinv: MatrixPDO, floor: int) -> MatrixPDO:
    """a(P^{-1}) for a series in y (y -> P^{-1})."""
    n = P.n
    acc = MatrixPDO.zero(n)
    if a.d != 1:
        raise ValidationError("scalar generators have integral exponents")
    powers = {0: MatrixPDO.identity(n)}
    for k in sorted(a.coeffs):
        base, step = (P, -1) if k < 0 else (Pinv, 1)
        e = 0
        cur = powers[0]
        while e != k:
            e += step
            if e not in powers:
                powers[e] = pdo_mul(powers[e - step], base, floor)
            cur = powers[e]
        acc = pdo_add(acc, cur * a.coeffs[k])
    if a.T is not None:
        acc = acc.with_window(1 - _ceil(a.T))
    return acc


# -- spectral covers --------------------------------------------------------


def _rational_root(q: mpq, m: int) -> Optional[mpq]:
    q = mpq(q)
    if q < 0 and m % 2 == 0:
        return None
    s = -1 if q < 0 else 1
    num, exact1 = gmpy2.iroot(abs(q.numerator), m)
    den, exact2 = gmpy2.iroot(q.denominator, m)
    if not (exact1 and exact2):
        return None
    return s * mpq(int(num), int(den))


def _newton_edges(vals: Dict[int, mpq]) -> List[Tuple[int, int]]:
    """Lower convex hull of (degree, valuation) points, as index pairs."""
    pts = sorted(vals.items())
    hull: List[Tuple[int, mpq]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return [(hull[i][0], hull[i + 1][0]) for i in range(len(hull) - 1)]


def _eval_poly(coeffs: List[TruncSeries], x: TruncSeries) -> TruncSeries:
    acc = coeffs[0]
    for c in coeffs[1:]:
        acc = ps_mul(acc, x) + c
    return acc


def spectral_cover(s: Sequence[TruncSeries], prec: int = 8):
    """Puiseux branches of x^m + s_1 x^{m-1} + ... + s_m = 0 at y = 0.

    Returns (HeisenbergElement, TypeVector): one component per branch.  A
    single totally ramified branch gives type (m); several branches raise
    a NotTotallyRamified warning and give a multi-block type.  Only edges
    with rational leading coefficients and simple edge roots are handled.
    """
    m = len(s)
    if m < 1:
        raise ValidationError("need at least one coefficient")
    coeffs = [TruncSeries("y", {0: ONE})] + [c.rename("y") for c in s]
    for c in coeffs:
        if c.d != 1 or any(k < 0 for k in c.coeffs):
            raise ValidationError("coefficients must be power series in y")
    vals = {}
    for i, c in enumerate(coeffs):
        lo = c.low_key()
        if lo is not None:
            vals[m - i] = mpq(lo)
    if 0 not in vals:
        raise ValidationError("x = 0 is a branch (s_m vanishes); factor it out first")
    branches = []
    parts = []
    for lo_i, hi_i in _newton_edges(vals):
        length = hi_i - lo_i
        slope = (vals[lo_i] - vals[hi_i]) / length  # leading exponent gamma of x
        q = int(slope.denominator)
        p = int(slope.numerator)
        # edge polynomial sum over points on the edge: a_i c^i with w = c^q
        edge = {}
        for i in range(lo_i, hi_i + 1):
            if i in vals and vals[i] + i * slope == vals[lo_i] + lo_i * slope:
                edge[i] = coeffs[m - i].coeff(vals[i])
        wdeg = length // q
        wpoly = {(i - lo_i) // q: c for i, c in edge.items()}
        roots = _rational_roots(wpoly, wdeg)
        if len(roots) != wdeg:
            raise ValidationError("edge polynomial has repeated or irrational roots; not supported")
        for w in roots:
            c = _rational_root(w, q) if q > 1 else w
            if c is None:
                raise ValidationError(f"leading coefficient {w}^(1/{q}) is irrational; not supported")
            x = _lift_branch(coeffs, p, q, c, prec)
            branches.append(x)
            parts.append(q)
    tv = TypeVector.of(*parts)
    if len(branches) > 1:
        warnings.warn(
            f"spectral polynomial has {len(branches)} branches at the marked point; emitting type {tv}",
            NotTotallyRamified,
        )
    return HeisenbergElement(tv, branches), tv


def _rational_roots(poly: Dict[int, mpq], deg: int) -> List[mpq]:
    """Distinct rational roots of a polynomial {power: coeff} (at most deg)."""
    import sympy

    w = sympy.Symbol("w")
    expr = sum(sympy.Rational(int(c.numerator), int(c.denominator)) * w ** k for k, c in poly.items())
    roots = sympy.roots(sympy.Poly(expr, w), filter="Q")
    out = []
    for rt, mult in roots.items():
        if mult != 1:
            return []
        out.append(mpq(int(rt.p), int(rt.q)))
    return sorted(out)


def _lift_branch(coeffs: List[TruncSeries], p: int, q: int, c: mpq, prec: int) -> TruncSeries:
    """x = u^p (c + x1(u)), u = y^{1/q}, solved by Newton steps in u."""
    m = len(coeffs) - 1
    cu = [TruncSeries("u", {k * q: v for k, v in a.coeffs.items()}) for a in coeffs]
    # F(u^p (c + t)) as polynomial in t with series coefficients, divided by u^v
    T = prec * q + 1
    x = TruncSeries("u", {p: c}, T=T + p)
    for _ in range(4 * (T + abs(p)) + 4):
        F = _eval_poly(cu, x)
        dF = _eval_poly([a.scale(m - i) for i, a in enumerate(cu[:-1])], x)
        lo_F = F.low_key()
        if lo_F is None or lo_F >= T + p + (dF.low_key() or 0):
            break
        # Newton correction with the leading term of dF
        lo_d = dF.low_key()
        corr = {k - lo_d: -v / dF.coeffs[lo_d] for k, v in F.coeffs.items() if k - lo_d < T + p}
        step = TruncSeries("u", {min(corr): corr[min(corr)]}) if corr else None
        if step is None:
            break
        x = x + step
    out = {k: v for k, v in x.coeffs.items() if k < prec * q + p}
    return TruncSeries("y", out, mpq(prec * q + p, q), q)
