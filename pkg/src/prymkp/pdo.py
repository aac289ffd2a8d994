"""Matrix pseudodifferential operators over k[[x]] with exact windows.

An operator is stored in right-normal form as {(m, p): A} meaning
``A x^p d^m`` with A an n x n rational matrix.  Two truncations are tracked:

* ``floor``: orders m < floor are unknown (None: nothing below is unknown);
* ``xwin``: monomials of weight p - m >= xwin are unknown (None: exact).

Leibniz products preserve weight, so both windows propagate like series
truncations.  An operator with both set to None is exact.
"""

from __future__ import annotations

import re
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import NotMonic, ParseError, ValidationError, WindowUnderflow
from .rational import ONE, ZERO, binom, falling, fmt_rational, parse_rational
from .series import TruncSeries

Mat = List[List[mpq]]


# -- small matrices -----------------------------------------------------------


def mat_zero(n: int) -> Mat:
    return [[ZERO] * n for _ in range(n)]


def mat_eye(n: int) -> Mat:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def mat_is_zero(a: Mat) -> bool:
    return not any(c for r in a for c in r)


def mat_add(a: Mat, b: Mat, f=ONE) -> Mat:
    return [[x + f * y for x, y in zip(r, s)] for r, s in zip(a, b)]


def mat_scale(a: Mat, f) -> Mat:
    return [[x * f for x in r] for r in a]


def mat_mul(a: Mat, b: Mat) -> Mat:
    n = len(a)
    out = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for k in range(n):
            c = ai[k]
            if not c:
                continue
            bk = b[k]
            for j in range(n):
                if bk[j]:
                    oi[j] += c * bk[j]
    return out


def _tmin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# -- operators ------------------------------------------------------------------


class MatrixPDO:
    __slots__ = ("n", "terms", "floor", "xwin")

    def __init__(self, n: int, terms: Dict[Tuple[int, int], Mat], floor: Optional[int] = None, xwin: Optional[int] = None):
        self.n = n
        self.floor = floor
        self.xwin = xwin
        self.terms = {
            k: a
            for k, a in terms.items()
            if not mat_is_zero(a) and self.known(*k)
        }

    def known(self, m: int, p: int) -> bool:
        if p < 0:
            return False
        if self.floor is not None and m < self.floor:
            return False
        if self.xwin is not None and p - m >= self.xwin:
            return False
        return True

    @property
    def exact(self) -> bool:
        return self.floor is None and self.xwin is None

    @classmethod
    def identity(cls, n: int, floor=None, xwin=None) -> "MatrixPDO":
        return cls(n, {(0, 0): mat_eye(n)}, floor, xwin)

    @classmethod
    def zero(cls, n: int, floor=None, xwin=None) -> "MatrixPDO":
        return cls(n, {}, floor, xwin)

    @classmethod
    def monomial(cls, n: int, m: int, p: int = 0, A: Optional[Mat] = None, floor=None, xwin=None) -> "MatrixPDO":
        return cls(n, {(m, p): A if A is not None else mat_eye(n)}, floor, xwin)

    @classmethod
    def scalar(cls, poly: Dict[Tuple[int, int], object], n: int = 1, floor=None, xwin=None) -> "MatrixPDO":
        """From {(m, p): c} times the identity matrix."""
        return cls(n, {k: mat_scale(mat_eye(n), mpq(c)) for k, c in poly.items()}, floor, xwin)

    def top(self) -> Optional[int]:
        return max((m for m, _ in self.terms), default=None)

    def bottom(self) -> Optional[int]:
        return min((m for m, _ in self.terms), default=None)

    def lowx(self) -> Optional[int]:
        """Lowest weight p - m among stored monomials."""
        return min((p - m for m, p in self.terms), default=None)

    def orders(self) -> List[int]:
        return sorted({m for m, _ in self.terms}, reverse=True)

    def coeff(self, m: int, p: int) -> Mat:
        if not self.known(m, p):
            raise WindowUnderflow(f"x^{p} d^{m} lies outside the known window")
        return self.terms.get((m, p), mat_zero(self.n))

    def poly(self, m: int, i: int, j: int) -> Dict[int, mpq]:
        """Coefficient polynomial of d^m at entry (i, j) as {degree: c}."""
        return {p: a[i][j] for (mm, p), a in self.terms.items() if mm == m and a[i][j]}

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "MatrixPDO") -> "MatrixPDO":
        return pdo_add(self, other)

    def __sub__(self, other: "MatrixPDO") -> "MatrixPDO":
        return pdo_add(self, other, -ONE)

    def __neg__(self):
        return MatrixPDO(self.n, {k: mat_scale(a, -ONE) for k, a in self.terms.items()}, self.floor, self.xwin)

    def __mul__(self, other):
        if isinstance(other, MatrixPDO):
            return pdo_mul(self, other)
        return MatrixPDO(self.n, {k: mat_scale(a, other) for k, a in self.terms.items()}, self.floor, self.xwin)

    def __rmul__(self, other):
        return MatrixPDO(self.n, {k: mat_scale(a, other) for k, a in self.terms.items()}, self.floor, self.xwin)

    def with_window(self, floor=None, xwin=None) -> "MatrixPDO":
        """Shrink the window (never enlarges it)."""
        f = self.floor if floor is None else (floor if self.floor is None else max(floor, self.floor))
        w = self.xwin if xwin is None else (xwin if self.xwin is None else min(xwin, self.xwin))
        return MatrixPDO(self.n, self.terms, f, w)

    def covers(self, floor: int, Dx: int) -> bool:
        """Is every monomial x^p d^m with m >= floor, p < Dx known?"""
        if self.xwin is not None and Dx - 1 - floor >= self.xwin:
            return False
        if self.floor is not None and floor < self.floor:
            return False
        return True

    def restrict(self, floor: int, Dx: int) -> "MatrixPDO":
        """Exact view of the rectangle m >= floor, p < Dx."""
        if not self.covers(floor, Dx):
            raise WindowUnderflow(f"window does not cover floor={floor}, Dx={Dx}")
        return MatrixPDO(self.n, {k: a for k, a in self.terms.items() if k[0] >= floor and k[1] < Dx}, floor, Dx - floor)

    def equal_within(self, other: "MatrixPDO", floor=None, xwin=None) -> bool:
        f = _maxn(self.floor, other.floor, floor)
        w = _tmin(_tmin(self.xwin, other.xwin), xwin)
        diff = pdo_add(self, other, -ONE)
        return MatrixPDO(self.n, diff.terms, f, w).is_zero()

    def __repr__(self):
        return f"MatrixPDO(n={self.n}, floor={self.floor}, xwin={self.xwin}, terms={len(self.terms)})"


def _maxn(*xs):
    vals = [x for x in xs if x is not None]
    return max(vals) if vals else None


def pdo_add(P: MatrixPDO, Q: MatrixPDO, f=ONE) -> MatrixPDO:
    if P.n != Q.n:
        raise ValueError("size mismatch")
    out = dict(P.terms)
    for k, a in Q.terms.items():
        out[k] = mat_add(out[k], a, f) if k in out else mat_scale(a, f)
    return MatrixPDO(P.n, out, _maxn(P.floor, Q.floor), _tmin(P.xwin, Q.xwin))


def pdo_mul(P: MatrixPDO, Q: MatrixPDO, floor: Optional[int] = None) -> MatrixPDO:
    """Right-normal product; ``floor`` optionally cuts the output lower."""
    if P.n != Q.n:
        raise ValueError("size mismatch")
    n = P.n
    if (P.is_zero() and P.exact) or (Q.is_zero() and Q.exact):
        return MatrixPDO.zero(n)
    tP, tQ = P.top(), Q.top()
    lP, lQ = P.lowx(), Q.lowx()
    # unknown orders of either factor spoil everything below their reach
    f_out = None
    if P.floor is not None:
        f_out = _maxn(f_out, P.floor + (tQ if tQ is not None else (Q.floor - 1 if Q.floor is not None else 0)))
    if Q.floor is not None and tP is not None:
        f_out = _maxn(f_out, Q.floor + tP)
    w_out = None
    if P.xwin is not None:
        w_out = _tmin(w_out, P.xwin + (lQ if lQ is not None else (Q.xwin if Q.xwin is not None else 0)))
    if Q.xwin is not None and lP is not None:
        w_out = _tmin(w_out, Q.xwin + lP)
    if floor is not None:
        f_out = floor if f_out is None else max(f_out, floor)
    out: Dict[Tuple[int, int], Mat] = {}
    qterms = list(Q.terms.items())
    for (k, p), a in P.terms.items():
        for (l, q), b in qterms:
            w = (p - k) + (q - l)
            if w_out is not None and w >= w_out:
                continue
            imax = q if k < 0 else min(k, q)
            if f_out is not None:
                imax = min(imax, k + l - f_out)
            if imax < 0:
                continue
            ab = mat_mul(a, b)
            if mat_is_zero(ab):
                continue
            for i in range(imax + 1):
                c = binom(k, i) * falling(q, i)
                if not c:
                    continue
                key = (k + l - i, p + q - i)
                cur = out.get(key)
                out[key] = mat_scale(ab, c) if cur is None else mat_add(cur, ab, c)
    return MatrixPDO(n, out, f_out, w_out)


def commutator(P: MatrixPDO, Q: MatrixPDO, floor: Optional[int] = None) -> MatrixPDO:
    return pdo_add(pdo_mul(P, Q, floor), pdo_mul(Q, P, floor), -ONE)


def pdo_split(P: MatrixPDO) -> Tuple[MatrixPDO, MatrixPDO]:
    plus = {k: a for k, a in P.terms.items() if k[0] >= 0}
    minus = {k: a for k, a in P.terms.items() if k[0] < 0}
    # the differential part is exact in order (nothing unknown at m >= 0 from the floor)
    f_plus = None if P.floor is None or P.floor <= 0 else P.floor
    return MatrixPDO(P.n, plus, f_plus, P.xwin), MatrixPDO(P.n, minus, P.floor, P.xwin)


def to_left_normal(P: MatrixPDO) -> MatrixPDO:
    """Left-normal coefficients: {(m, p): A} meaning d^m A x^p.

    Uses a x^p d^k = sum_i (-1)^i C(k, i) d^{k-i} (x^p)^{(i)}; the window is
    unchanged because the rewriting preserves weight and lowers order.
    """
    out: Dict[Tuple[int, int], Mat] = {}
    for (k, p), a in P.terms.items():
        for i in range(p + 1):
            m = k - i
            if P.floor is not None and m < P.floor:
                break
            c = (-1) ** i * binom(k, i) * falling(p, i)
            if not c:
                continue
            key = (m, p - i)
            out[key] = mat_scale(a, c) if key not in out else mat_add(out[key], a, c)
    return MatrixPDO(P.n, out, P.floor, P.xwin)


def from_left_normal(L: MatrixPDO) -> MatrixPDO:
    """Inverse of to_left_normal: d^k A x^p = sum_i C(k, i) A (x^p)^{(i)} d^{k-i}."""
    out: Dict[Tuple[int, int], Mat] = {}
    for (k, p), a in L.terms.items():
        for i in range(p + 1):
            m = k - i
            if L.floor is not None and m < L.floor:
                break
            c = binom(k, i) * falling(p, i)
            if not c:
                continue
            key = (m, p - i)
            out[key] = mat_scale(a, c) if key not in out else mat_add(out[key], a, c)
    return MatrixPDO(L.n, out, L.floor, L.xwin)


def _rho_bound(P: MatrixPDO) -> Optional[int]:
    """Exponents of rho(P d^{-e}) at or beyond e + this bound are unknown."""
    b = None
    if P.floor is not None:
        b = 1 - P.floor
    if P.xwin is not None:
        b = _tmin(b, P.xwin)
    return b


def pdo_act(P: MatrixPDO, v: Sequence[TruncSeries]) -> List[TruncSeries]:
    """P . v = rho(P Q) for the x-free lift Q of v."""
    n = P.n
    if len(v) != n:
        raise ValueError("vector length mismatch")
    var = v[0].var if v else "z"
    T_v = None
    low_v = None
    for s in v:
        if s.d != 1:
            raise ValueError("vectors must have integral exponents")
        T_v = _tmin(T_v, s.T)
        lo = s.low_key()
        if lo is not None:
            low_v = lo if low_v is None else min(low_v, lo)
    if low_v is None:
        low_v = T_v
    T_out = None
    top = P.top()
    if T_v is not None and top is not None:
        T_out = T_v - top
    if T_v is not None and top is None and not P.exact:
        T_out = T_v
    b = _rho_bound(P)
    if b is not None and low_v is not None:
        T_out = _tmin(T_out, b + low_v)
    out: List[Dict[int, mpq]] = [dict() for _ in range(n)]
    for j, s in enumerate(v):
        for e, c in s.coeffs.items():
            for (m, p), a in P.terms.items():
                k = m - e
                f = falling(k, p)
                if not f:
                    continue
                ex = p - k
                if T_out is not None and ex >= T_out:
                    continue
                f = f * c * (-1 if p & 1 else 1)
                for i in range(n):
                    if a[i][j]:
                        out[i][ex] = out[i].get(ex, ZERO) + f * a[i][j]
    return [TruncSeries(var, o, T_out) for o in out]


def pdo_rho(P: MatrixPDO):
    """rho(P): n x n rows of series (a single series when n == 1)."""
    cols = []
    for j in range(P.n):
        e = [TruncSeries("z", {0: ONE} if i == j else {}) for i in range(P.n)]
        cols.append(pdo_act(P, e))
    rows = [[cols[j][i] for j in range(P.n)] for i in range(P.n)]
    return rows[0][0] if P.n == 1 else rows


def rho_left_normal(P: MatrixPDO):
    """Second route for rho: convert to left-normal form, evaluate at x = 0."""
    L = to_left_normal(P)
    T = _rho_bound(P)
    rows = [[dict() for _ in range(P.n)] for _ in range(P.n)]
    for (m, p), a in L.terms.items():
        if p != 0:
            continue
        for i in range(P.n):
            for j in range(P.n):
                if a[i][j]:
                    rows[i][j][-m] = rows[i][j].get(-m, ZERO) + a[i][j]
    out = [[TruncSeries("z", r, T) for r in row] for row in rows]
    return out[0][0] if P.n == 1 else out


def is_monic_zeroth(S: MatrixPDO) -> bool:
    if any(m > 0 for m, _ in S.terms):
        return False
    zero = {p: a for (m, p), a in S.terms.items() if m == 0}
    return set(zero) == {0} and zero[0] == mat_eye(S.n)


def pdo_invert_monic(S: MatrixPDO, floor: Optional[int] = None) -> MatrixPDO:
    """Inverse of I + (negative orders) by Neumann series, cut at the floor."""
    if not is_monic_zeroth(S):
        raise NotMonic("operator is not of the form I + sum s_m d^{-m}")
    f = S.floor if floor is None else (floor if S.floor is None else max(floor, S.floor))
    if f is None:
        raise WindowUnderflow("an exact operator needs an explicit floor to invert")
    n = S.n
    N = MatrixPDO(n, {k: a for k, a in S.terms.items() if k[0] < 0}, f, S.xwin)
    I = MatrixPDO.identity(n, f, S.xwin)
    U = I
    for _ in range(-f):
        U = pdo_add(I, pdo_mul(N, U, f), -ONE)
    return MatrixPDO(n, U.terms, f, U.xwin)


class DifferentialCheck:
    """Result of is_differential: structural verdict plus base-point witness."""

    __slots__ = ("structural", "witness", "depth")

    def __init__(self, structural: bool, witness, depth: int):
        self.structural = structural
        self.witness = witness
        self.depth = depth

    @property
    def agree(self) -> bool:
        return self.structural == (self.witness is None)

    def __bool__(self):
        return self.structural

    def __repr__(self):
        return f"DifferentialCheck(structural={self.structural}, witness={self.witness})"


def is_differential(P: MatrixPDO, depth: int = 4) -> DifferentialCheck:
    """P has no negative orders; independently, P k[z^-1]^n stays polynomial."""
    structural = not any(m < 0 for m, _ in P.terms)
    witness = None
    for mu in range(depth + 1):
        for j in range(P.n):
            v = [TruncSeries("z", {-mu: ONE} if i == j else {}) for i in range(P.n)]
            img = pdo_act(P, v)
            for i, s in enumerate(img):
                bad = [e for e in s.coeffs if e > 0]
                if bad:
                    witness = (j + 1, mu, i + 1, mpq(min(bad)))
                    break
            if witness:
                break
        if witness:
            break
    return DifferentialCheck(structural, witness, depth)


def series_to_pdo(s: TruncSeries, n: int = 1, floor: Optional[int] = None) -> MatrixPDO:
    """Substitute z = d^{-1} (constant coefficients), times I_n."""
    if s.d != 1:
        raise ValueError("only integral exponents map to operators")
    f = None
    if s.T is not None:
        f = 1 - _ceil(s.T)
    if floor is not None:
        f = floor if f is None else max(f, floor)
    return MatrixPDO(n, {(-e, 0): mat_scale(mat_eye(n), c) for e, c in s.coeffs.items()}, f)


def _ceil(x) -> int:
    x = mpq(x)
    return -((-x.numerator) // x.denominator)


def y_to_pdo(y: TruncSeries, n: int = 1, floor: Optional[int] = None) -> MatrixPDO:
    return series_to_pdo(y, n, floor)


def loop_to_pdo(m, floor: Optional[int] = None) -> MatrixPDO:
    """Constant-coefficient operator of a loop matrix in z (z = d^{-1})."""
    n = m.n
    terms: Dict[Tuple[int, int], Mat] = {}
    f = None
    for i in range(n):
        for j in range(n):
            s = m.rows[i][j]
            if s.d != 1:
                raise ValueError("only integral exponents map to operators")
            if s.T is not None:
                f = _maxn(f, 1 - _ceil(s.T))
            for e, c in s.coeffs.items():
                a = terms.setdefault((-e, 0), mat_zero(n))
                a[i][j] += c
    if floor is not None:
        f = floor if f is None else max(f, floor)
    return MatrixPDO(n, terms, f)


def pdo_derivative_x(P: MatrixPDO) -> MatrixPDO:
    out = {}
    for (m, p), a in P.terms.items():
        if p:
            out[(m, p - 1)] = mat_scale(a, p)
    w = None if P.xwin is None else P.xwin - 1
    return MatrixPDO(P.n, out, P.floor, w)


# -- literal format ---------------------------------------------------------


def format_pdo(P: MatrixPDO, floor: Optional[int] = None, Dx: Optional[int] = None) -> str:
    """Operator literal; with floor/Dx the rectangle view is emitted."""
    if floor is not None and Dx is not None:
        P = P.restrict(floor, Dx)
        head = f"n={P.n} floor={floor} Dx={Dx}"
    elif P.exact:
        head = f"n={P.n} floor=-inf Dx=inf"
    else:
        f = P.floor if P.floor is not None else "-inf"
        head = f"n={P.n} floor={f} xwin={P.xwin if P.xwin is not None else 'inf'}"
    segs = [head]
    for m in P.orders():
        for i in range(P.n):
            for j in range(P.n):
                poly = P.poly(m, i, j)
                if not poly:
                    continue
                body = " ".join(f"{p}:{fmt_rational(c)}" for p, c in sorted(poly.items()))
                segs.append(f"m={m} : (i,j)=({i + 1},{j + 1}) : {body}")
    return " ; ".join(segs)


_SEG = re.compile(r"^\s*m\s*=\s*(-?\d+)\s*:\s*\(\s*i\s*,\s*j\s*\)\s*=\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*:(.*)$")


def parse_pdo(text: str, line: int = 1) -> MatrixPDO:
    """Parse an operator literal.

    ``floor``/``Dx`` describe the exact data (orders >= floor, degrees < Dx);
    the parsed operator is exact.  ``xwin=`` marks a windowed operator.
    """
    segs = text.split(";")
    head = {}
    for tok in segs[0].split():
        k, sep, v = tok.partition("=")
        if not sep:
            raise ParseError(f"bad header token {tok!r}", line, text.find(tok) + 1)
        head[k] = v
    if "n" not in head:
        raise ParseError("missing n=", line, 1)
    try:
        n = int(head["n"])
    except ValueError:
        raise ParseError("n must be an integer", line, 1)
    if n < 1:
        raise ValidationError("n must be positive")

    def _intish(key):
        v = head.get(key)
        if v is None or v in ("inf", "-inf"):
            return None
        try:
            return int(v)
        except ValueError:
            raise ParseError(f"bad {key}={v}", line, text.find(f"{key}=") + 1)

    floor = _intish("floor")
    Dx = _intish("Dx")
    xwin = _intish("xwin")
    terms: Dict[Tuple[int, int], Mat] = {}
    offset = len(segs[0]) + 1
    for seg in segs[1:]:
        col = offset + 1
        offset += len(seg) + 1
        if not seg.strip():
            continue
        m = _SEG.match(seg)
        if not m:
            raise ParseError("expected 'm=<order> : (i,j)=(a,b) : p:c ...'", line, col)
        order, i, j = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValidationError(f"entry ({i},{j}) outside a {n}x{n} operator")
        for tok in m.group(4).split():
            p_txt, sep, c_txt = tok.partition(":")
            if not sep:
                raise ParseError(f"expected degree:coefficient, got {tok!r}", line, col)
            try:
                p = int(p_txt)
                c = parse_rational(c_txt)
            except ValueError as exc:
                raise ParseError(str(exc), line, col)
            if p < 0:
                raise ValidationError("negative x-degree")
            if Dx is not None and p >= Dx:
                raise ValidationError(f"degree {p} not below Dx={Dx}")
            if floor is not None and order < floor:
                raise ValidationError(f"order {order} below floor={floor}")
            a = terms.setdefault((order, p), mat_zero(n))
            a[i - 1][j - 1] += c
    if xwin is not None:
        return MatrixPDO(n, terms, floor, xwin)
    return MatrixPDO(n, terms)


# -- jet-valued operators --------------------------------------------------


class JetPDO:
    """Operator whose coefficients are jets: sum over monomials t^a of P_a."""

    __slots__ = ("ring", "n", "comps")

    def __init__(self, ring, n: int, comps: Dict[tuple, MatrixPDO]):
        self.ring = ring
        self.n = n
        self.comps = {
            a: P for a, P in comps.items() if sum(a) <= ring.K and not (P.is_zero() and P.exact)
        }

    @classmethod
    def const(cls, ring, P: MatrixPDO) -> "JetPDO":
        return cls(ring, P.n, {ring.zero_mono: P})

    def coeff(self, mono) -> MatrixPDO:
        return self.comps.get(tuple(mono), MatrixPDO.zero(self.n))

    def constant(self) -> MatrixPDO:
        return self.coeff(self.ring.zero_mono)

    def monomials(self):
        return sorted(self.comps, key=lambda a: (sum(a), tuple(-x for x in a)))

    def is_zero(self) -> bool:
        return all(P.is_zero() for P in self.comps.values())

    def _combine(self, other: "JetPDO", f) -> "JetPDO":
        out = dict(self.comps)
        for a, P in other.comps.items():
            out[a] = pdo_add(out[a], P, f) if a in out else P * f
        return JetPDO(self.ring, self.n, out)

    def __add__(self, other):
        return self._combine(other, ONE)

    def __sub__(self, other):
        return self._combine(other, -ONE)

    def __neg__(self):
        return JetPDO(self.ring, self.n, {a: -P for a, P in self.comps.items()})

    def scale(self, c) -> "JetPDO":
        return JetPDO(self.ring, self.n, {a: P * c for a, P in self.comps.items()})

    def mul(self, other: "JetPDO", floor: Optional[int] = None) -> "JetPDO":
        out: Dict[tuple, MatrixPDO] = {}
        K = self.ring.K
        for a, P in self.comps.items():
            for b, Q in other.comps.items():
                c = tuple(x + y for x, y in zip(a, b))
                if sum(c) > K:
                    continue
                R = pdo_mul(P, Q, floor)
                out[c] = pdo_add(out[c], R) if c in out else R
        return JetPDO(self.ring, self.n, out)

    __mul__ = mul

    def split(self) -> Tuple["JetPDO", "JetPDO"]:
        plus, minus = {}, {}
        for a, P in self.comps.items():
            plus[a], minus[a] = pdo_split(P)
        return JetPDO(self.ring, self.n, plus), JetPDO(self.ring, self.n, minus)

    def derivative(self, name: str) -> "JetPDO":
        k = self.ring.names.index(name)
        out = {}
        for a, P in self.comps.items():
            if a[k]:
                b = tuple(x - 1 if i == k else x for i, x in enumerate(a))
                out[b] = P * a[k]
        return JetPDO(self.ring, self.n, out)

    def truncate(self, K: int) -> "JetPDO":
        return JetPDO(self.ring, self.n, {a: P for a, P in self.comps.items() if sum(a) <= K})

    def floor(self) -> Optional[int]:
        return _maxn(*(P.floor for P in self.comps.values()))

    def with_window(self, floor=None, xwin=None) -> "JetPDO":
        return JetPDO(self.ring, self.n, {a: P.with_window(floor, xwin) for a, P in self.comps.items()})

    def equal_within(self, other: "JetPDO", floor=None) -> bool:
        keys = set(self.comps) | set(other.comps)
        return all(self.coeff(a).equal_within(other.coeff(a), floor) for a in keys)

    def __repr__(self):
        return f"JetPDO(n={self.n}, K={self.ring.K}, comps={len(self.comps)})"


def jet_invert_monic(S: "JetPDO", floor: int) -> "JetPDO":
    """Inverse of a jet operator whose constant part is monic zeroth order."""
    S0inv = pdo_invert_monic(S.constant(), floor)
    ring = S.ring
    A = JetPDO.const(ring, S0inv)
    # S = S0 (I + S0^{-1} N) with N nilpotent in t
    N = JetPDO(ring, S.n, {a: P for a, P in S.comps.items() if any(a)})
    X = A.mul(N, floor)
    I = JetPDO.const(ring, MatrixPDO.identity(S.n))
    acc = I
    term = I
    for _ in range(ring.K):
        term = (-X).mul(term, floor)
        if term.is_zero():
            break
        acc = acc + term
    return acc.mul(A, floor)


def random_pdo(rng, n: int, top: int, floor: int, Dx: int, height: int = 3) -> MatrixPDO:
    """Random exact operator with orders floor..top and x-degree < Dx."""
    terms: Dict[Tuple[int, int], Mat] = {}
    for m in range(floor, top + 1):
        for p in range(Dx):
            terms[(m, p)] = [[mpq(rng.randint(-height, height), rng.randint(1, 3)) for _ in range(n)] for _ in range(n)]
    return MatrixPDO(n, terms)


def random_vector(rng, n: int, lo: int = -4, hi: int = 4, height: int = 3) -> List[TruncSeries]:
    """Random exact Laurent polynomial vector in z."""
    return [
        TruncSeries("z", {e: mpq(rng.randint(-height, height), rng.randint(1, 3)) for e in range(lo, hi + 1)})
        for _ in range(n)
    ]
