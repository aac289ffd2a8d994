"""Sparse exact Gaussian elimination over the rationals."""

from __future__ import annotations

from typing import Dict, Hashable, Iterable, List, Optional

from gmpy2 import mpq

Row = Dict[Hashable, mpq]

RHS = "__rhs__"


class Echelon:
    """Incrementally maintained row echelon form.

    Columns are arbitrary hashable keys ordered by ``order`` (a sort key).
    Every stored row is normalized so its pivot coefficient is 1 and every
    entry lies at a column >= its pivot.
    """

    def __init__(self, order=None):
        self.order = order or (lambda c: c)
        self.pivots: Dict[Hashable, Row] = {}
        self.inconsistent = False

    def reduce(self, row: Row) -> Row:
        row = {c: v for c, v in row.items() if v}
        while True:
            cands = [c for c in row if c in self.pivots]
            if not cands:
                return row
            c = min(cands, key=self.order)
            f = row[c]
            for cc, vv in self.pivots[c].items():
                nv = row.get(cc, 0) - f * vv
                if nv:
                    row[cc] = nv
                else:
                    row.pop(cc, None)

    def add(self, row: Row) -> Optional[Hashable]:
        row = self.reduce(row)
        cols = [c for c in row if c != RHS]
        if not cols:
            if row.get(RHS):
                self.inconsistent = True
            return None
        p = min(cols, key=self.order)
        inv = 1 / row[p]
        self.pivots[p] = {c: v * inv for c, v in row.items()}
        return p

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def solution(self, free_value=0) -> Dict[Hashable, mpq]:
        """Particular solution with free variables set to zero."""
        x: Dict[Hashable, mpq] = {}
        for p in sorted(self.pivots, key=self.order, reverse=True):
            row = self.pivots[p]
            acc = row.get(RHS, mpq(0))
            for c, v in row.items():
                if c == p or c == RHS:
                    continue
                acc -= v * x.get(c, 0)
            x[p] = acc
        return {c: v for c, v in x.items() if v}

    def nullspace(self, columns: Iterable[Hashable]) -> List[Dict[Hashable, mpq]]:
        cols = [c for c in columns if c not in self.pivots]
        out = []
        order = sorted(self.pivots, key=self.order, reverse=True)
        for f in cols:
            x = {f: mpq(1)}
            for p in order:
                row = self.pivots[p]
                acc = mpq(0)
                for c, v in row.items():
                    if c == p or c == RHS:
                        continue
                    xc = x.get(c)
                    if xc:
                        acc -= v * xc
                if acc:
                    x[p] = acc
            out.append(x)
        return out


def solve(rows: Iterable[Row], columns: Optional[Iterable[Hashable]] = None, order=None):
    """Solve sum_c row[c] x_c = row[RHS]; returns (solution or None, nullity)."""
    ech = Echelon(order)
    for r in rows:
        ech.add(r)
        if ech.inconsistent:
            return None, 0
    nullity = 0
    if columns is not None:
        nullity = len([c for c in columns if c not in ech.pivots])
    return ech.solution(), nullity


def rank(rows: Iterable[Row], order=None) -> int:
    ech = Echelon(order)
    for r in rows:
        ech.add({c: v for c, v in r.items() if c != RHS})
    return ech.rank


def nullspace(rows: Iterable[Row], columns: Iterable[Hashable], order=None):
    ech = Echelon(order)
    for r in rows:
        ech.add({c: v for c, v in r.items() if c != RHS})
    return ech.nullspace(columns)


def dense_rank(matrix: List[List[mpq]]) -> int:
    """Rank of a dense matrix by plain elimination (an independent path)."""
    m = [list(map(mpq, r)) for r in matrix]
    if not m:
        return 0
    rows, cols = len(m), len(m[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c] * inv
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == rows:
            break
    return r


def flatten_equations(row_by_key: Dict[Hashable, Dict[Hashable, object]]) -> List[Row]:
    """Turn equations with jet-valued coefficients into rational ones.

    ``row_by_key`` maps an equation label to {column: coefficient}; each
    coefficient is a rational or a JetScalar.  One rational equation per
    (label, jet monomial) is produced.
    """
    from .jets import jet_coefficients

    out: List[Row] = []
    for _, row in row_by_key.items():
        split: Dict[Hashable, Row] = {}
        for col, c in row.items():
            for mono, v in jet_coefficients(c).items():
                split.setdefault(mono, {})[col] = v
        out.extend(r for r in split.values() if any(r.values()))
    return out

