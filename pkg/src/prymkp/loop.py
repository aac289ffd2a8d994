"""Loop matrices gl(n, k((y))) and the commutative subalgebras H_n(y)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import NotInHeisenberg, NotNegative, ParseError, RamificationMismatch
from .rational import ONE
from .series import (
    NEG_INF,
    TruncSeries,
    _min_T,
    format_series,
    ord_,
    parse_series,
    ps_compose,
    ps_inv,
    ps_mul,
)


@dataclass(frozen=True)
class TypeVector:
    parts: Tuple[int, ...]

    def __post_init__(self):
        if not self.parts or any(p < 1 for p in self.parts):
            raise ValueError("type vector entries must be >= 1")

    @classmethod
    def of(cls, *parts) -> "TypeVector":
        if len(parts) == 1 and not isinstance(parts[0], int):
            parts = tuple(parts[0])
        return cls(tuple(int(p) for p in parts))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def ell(self) -> int:
        return len(self.parts)

    def offsets(self) -> List[int]:
        out, acc = [], 0
        for p in self.parts:
            out.append(acc)
            acc += p
        return out

    def __str__(self):
        return "(" + ",".join(str(p) for p in self.parts) + ")"


def parse_type(text: str) -> TypeVector:
    body = text.strip().strip("()")
    try:
        parts = [int(x) for x in body.split(",") if x.strip()]
        return TypeVector.of(parts)
    except ValueError as exc:
        raise ValueError(f"bad type vector {text!r}") from exc


def _zero(var: str) -> TruncSeries:
    return TruncSeries(var, {})


def _one(var: str) -> TruncSeries:
    return TruncSeries(var, {0: ONE})


class LoopMatrix:
    __slots__ = ("n", "var", "rows")

    def __init__(self, rows: Sequence[Sequence[TruncSeries]], var: Optional[str] = None):
        self.rows = [list(r) for r in rows]
        self.n = len(self.rows)
        if any(len(r) != self.n for r in self.rows):
            raise ValueError("loop matrix must be square")
        if var is None:
            var = self.rows[0][0].var if self.n else "z"
        self.var = var
        for r in self.rows:
            for s in r:
                if s.var != var:
                    raise ValueError("entries must share one variable")

    @classmethod
    def identity(cls, n: int, var: str = "y") -> "LoopMatrix":
        return cls([[_one(var) if i == j else _zero(var) for j in range(n)] for i in range(n)], var)

    @classmethod
    def zero(cls, n: int, var: str = "y") -> "LoopMatrix":
        return cls([[_zero(var) for _ in range(n)] for _ in range(n)], var)

    @classmethod
    def scalar(cls, n: int, s: TruncSeries) -> "LoopMatrix":
        return cls([[s if i == j else _zero(s.var) for j in range(n)] for i in range(n)], s.var)

    @classmethod
    def diag(cls, entries: Sequence[TruncSeries]) -> "LoopMatrix":
        n = len(entries)
        var = entries[0].var
        return cls([[entries[i] if i == j else _zero(var) for j in range(n)] for i in range(n)], var)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __add__(self, other: "LoopMatrix") -> "LoopMatrix":
        return LoopMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.var)

    def __sub__(self, other: "LoopMatrix") -> "LoopMatrix":
        return LoopMatrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.var)

    def __neg__(self):
        return LoopMatrix([[-a for a in r] for r in self.rows], self.var)

    def scale(self, c) -> "LoopMatrix":
        return LoopMatrix([[a.scale(c) for a in r] for r in self.rows], self.var)

    def __mul__(self, other):
        if not isinstance(other, LoopMatrix):
            return self.scale(other)
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = _zero(self.var)
                for k in range(n):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if (a.is_zero() and a.exact) or (b.is_zero() and b.exact):
                        continue
                    acc = acc + ps_mul(a, b)
                row.append(acc)
            out.append(row)
        return LoopMatrix(out, self.var)

    def __pow__(self, k: int) -> "LoopMatrix":
        if k < 0:
            raise ValueError("use a Heisenberg inverse for negative powers")
        out = LoopMatrix.identity(self.n, self.var)
        for _ in range(k):
            out = out * self
        return out

    def trace(self) -> TruncSeries:
        acc = _zero(self.var)
        for i in range(self.n):
            acc = acc + self.rows[i][i]
        return acc

    def map(self, f) -> "LoopMatrix":
        rows = [[f(a) for a in r] for r in self.rows]
        return LoopMatrix(rows, rows[0][0].var if rows else self.var)

    def substitute(self, inner: TruncSeries, T=None) -> "LoopMatrix":
        """Evaluate every entry at ``var = inner`` (e.g. y = y(z))."""

        def sub(s):
            if s.is_zero() and s.exact:
                return _zero(inner.var)
            return ps_compose(s, inner, T=T)

        return self.map(sub)

    def equal_within(self, other: "LoopMatrix", T=None) -> bool:
        return all(
            a.equal_within(b, T) for r1, r2 in zip(self.rows, other.rows) for a, b in zip(r1, r2)
        )

    def is_zero_within(self, T=None) -> bool:
        return self.equal_within(LoopMatrix.zero(self.n, self.var), T)

    def min_T(self):
        t = None
        for r in self.rows:
            for a in r:
                t = _min_T(t, a.T)
        return t

    def pole_order(self) -> int:
        """Largest pole order among entries (0 if none has a pole)."""
        p = mpq(0)
        for r in self.rows:
            for a in r:
                o = ord_(a)
                if o != NEG_INF and o > p:
                    p = mpq(o)
        return int(-(-p.numerator // p.denominator))

    def __repr__(self):
        return f"LoopMatrix(n={self.n}, var={self.var})"


def h_block(m: int, y: TruncSeries) -> LoopMatrix:
    """m x m block with ones on the subdiagonal and y in the top-right corner."""
    if m < 1:
        raise ValueError("block size must be positive")
    var = y.var
    rows = [[_zero(var) for _ in range(m)] for _ in range(m)]
    if m == 1:
        rows[0][0] = y
    else:
        for a in range(1, m):
            rows[a][a - 1] = _one(var)
        rows[0][m - 1] = y
    return LoopMatrix(rows, var)


class HeisenbergElement:
    """An element of the direct sum of k((y^{1/n_j})).

    Components are series in the common variable ``y`` with exponents in
    (1/n_j)Z; the component var tag is informational.
    """

    __slots__ = ("tv", "comps")

    def __init__(self, tv: TypeVector, comps: Sequence[TruncSeries]):
        if len(comps) != tv.ell:
            raise ValueError("need one component per block")
        self.tv = tv
        self.comps = list(comps)

    @classmethod
    def scalar(cls, tv: TypeVector, a: TruncSeries) -> "HeisenbergElement":
        return cls(tv, [a] * tv.ell)

    @classmethod
    def zero(cls, tv: TypeVector, var: str = "y") -> "HeisenbergElement":
        return cls(tv, [_zero(var) for _ in tv.parts])

    def __add__(self, other):
        return HeisenbergElement(self.tv, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        return HeisenbergElement(self.tv, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return HeisenbergElement(self.tv, [-a for a in self.comps])

    def __mul__(self, other):
        if isinstance(other, HeisenbergElement):
            return HeisenbergElement(self.tv, [ps_mul(a, b) for a, b in zip(self.comps, other.comps)])
        return HeisenbergElement(self.tv, [a.scale(other) for a in self.comps])

    def __pow__(self, k: int):
        return HeisenbergElement(self.tv, [a ** k for a in self.comps])

    def inverse(self, T=None) -> "HeisenbergElement":
        return HeisenbergElement(self.tv, [ps_inv(a, T=T) for a in self.comps])

    def equal_within(self, other, T=None) -> bool:
        return all(a.equal_within(b, T) for a, b in zip(self.comps, other.comps))

    def __repr__(self):
        return f"HeisenbergElement({format_heisenberg(self)!r})"


def _component_blocks(a: TruncSeries, nj: int):
    """Split a(y^{1/nj}) into alpha_s(y), s = 0..nj-1."""
    if nj % a.d:
        raise RamificationMismatch(f"exponent denominator {a.d} does not divide {nj}")
    keys = a.with_d(nj)
    alphas = []
    for s in range(nj):
        coeffs = {(k - s) // nj: c for k, c in keys.items() if k % nj == s}
        T = None if a.T is None else a.T - mpq(s, nj)
        alphas.append(TruncSeries(a.var, coeffs, T))
    return alphas


def embed_heisenberg(h: HeisenbergElement, y: Optional[TruncSeries] = None) -> LoopMatrix:
    """Block-diagonal matrix of h; entries are series in y.

    ``y`` only supplies the variable tag: each block is a polynomial in
    h_block(n_j, y) with coefficients in k((y)).
    """
    var = y.var if y is not None else (h.comps[0].var if h.comps else "y")
    n = h.tv.n
    rows = [[_zero(var) for _ in range(n)] for _ in range(n)]
    for off, nj, a in zip(h.tv.offsets(), h.tv.parts, h.comps):
        alphas = _component_blocks(a.rename(var), nj)
        for p in range(nj):
            for q in range(nj):
                e = alphas[(p - q) % nj]
                rows[off + p][off + q] = e.shift(1) if p < q else e
    return LoopMatrix(rows, var)


def _infer_type(m: LoopMatrix) -> TypeVector:
    """Finest interval partition with no nonzero entries across blocks."""
    n = m.n
    parts = []
    start = reach = 0
    for i in range(n):
        reach = max(reach, i)
        for j in range(i + 1, n):
            if not m.rows[i][j].is_zero() or not m.rows[j][i].is_zero():
                reach = max(reach, j)
        if i == reach:
            parts.append(i - start + 1)
            start = i + 1
    return TypeVector.of(parts)


def extract_heisenberg(m: LoopMatrix, tv: Optional[TypeVector] = None) -> HeisenbergElement:
    """Inverse of embed_heisenberg; raises NotInHeisenberg on failure."""
    if tv is None:
        tv = _infer_type(m)
    if tv.n != m.n:
        raise NotInHeisenberg("type does not match matrix size")
    comps = []
    for bi, (off, nj) in enumerate(zip(tv.offsets(), tv.parts)):
        for p in range(off, off + nj):
            for q in range(m.n):
                if off <= q < off + nj:
                    continue
                if not m.rows[p][q].is_zero() or not m.rows[q][p].is_zero():
                    raise NotInHeisenberg(f"entry ({p + 1},{q + 1}) couples different blocks")
        alphas = [m.rows[off + s][off] for s in range(nj)]
        for p in range(nj):
            for q in range(nj):
                s = (p - q) % nj
                want = alphas[s].shift(1) if p < q else alphas[s]
                if not m.rows[off + p][off + q].equal_within(want):
                    raise NotInHeisenberg(f"block {bi + 1} is not a polynomial in h_block at ({p + 1},{q + 1})")
        coeffs = {}
        T = None
        for s, al in enumerate(alphas):
            for k, c in al.coeffs.items():
                coeffs[k * nj + s] = c
            if al.T is not None:
                T = _min_T(T, al.T + mpq(s, nj))
        comps.append(TruncSeries(m.var, coeffs, T, nj))
    return HeisenbergElement(tv, comps)


def trace_split(m: LoopMatrix, tv: Optional[TypeVector] = None):
    """(tr(m)/n, m - tr(m)/n I) after checking m lies in H_n(y)."""
    extract_heisenberg(m, tv)
    scalar = m.trace().scale(mpq(1, m.n))
    return scalar, m - LoopMatrix.scalar(m.n, scalar)


def heisenberg_trace(h: HeisenbergElement) -> TruncSeries:
    """Matrix trace of embed(h), computed on components."""
    acc = None
    for nj, a in zip(h.tv.parts, h.comps):
        alpha0 = _component_blocks(a, nj)[0].scale(nj)
        acc = alpha0 if acc is None else acc + alpha0.rename(acc.var)
    return acc


def heisenberg_order(a: TruncSeries, nj: int):
    """ord_{y_j}(a) = n_j * ord_y(a)."""
    o = ord_(a)
    if o == NEG_INF:
        return NEG_INF
    return o * nj


def filtration_order(h: HeisenbergElement):
    best = NEG_INF
    for nj, a in zip(h.tv.parts, h.comps):
        o = heisenberg_order(a, nj)
        if o != NEG_INF and (best == NEG_INF or o > best):
            best = o
    if best == NEG_INF:
        return best
    best = mpq(best)
    return int(-(-best.numerator // best.denominator))


def gamma_element(hminus: HeisenbergElement, y: Optional[TruncSeries] = None) -> LoopMatrix:
    """I_n + embed(hminus) for hminus with only positive exponents."""
    for j, a in enumerate(hminus.comps):
        if any(e <= 0 for e, _ in a.terms()):
            raise NotNegative(f"component {j + 1} has a term of nonpositive exponent")
    m = embed_heisenberg(hminus, y)
    return LoopMatrix.identity(m.n, m.var) + m


# -- literal format ---------------------------------------------------------


def format_heisenberg(h: HeisenbergElement) -> str:
    parts = [f"type={h.tv}"]
    for j, a in enumerate(h.comps, start=1):
        parts.append(f"j={j} : {format_series(a)}")
    return " ; ".join(parts)


_J = re.compile(r";\s*j\s*=\s*(\d+)\s*:")


def parse_heisenberg(text: str, line: int = 1) -> HeisenbergElement:
    m = re.match(r"^\s*type\s*=\s*(\([^)]*\))", text)
    if not m:
        raise ParseError("expected type=(...)", line, 1)
    try:
        tv = parse_type(m.group(1))
    except ValueError as exc:
        raise ParseError(str(exc), line, m.start(1) + 1)
    pieces = list(_J.finditer(text))
    comps: List[Optional[TruncSeries]] = [None] * tv.ell
    for idx, pm in enumerate(pieces):
        j = int(pm.group(1))
        end = pieces[idx + 1].start() if idx + 1 < len(pieces) else len(text)
        if not 1 <= j <= tv.ell:
            raise ParseError(f"component index {j} out of range", line, pm.start(1) + 1)
        s = parse_series(text[pm.end():end].strip(), line)
        if tv.parts[j - 1] % s.d:
            raise ParseError(
                f"component {j} has denominator {s.d} not dividing {tv.parts[j - 1]}", line, pm.end() + 1
            )
        comps[j - 1] = s
    for j, c in enumerate(comps):
        if c is None:
            raise ParseError(f"missing component j={j + 1}", line, len(text))
    return HeisenbergElement(tv, comps)
