"""Small constructors shared by the test modules."""

from __future__ import annotations

from gmpy2 import mpq

from prymkp.loop import HeisenbergElement, LoopMatrix, TypeVector
from prymkp.pdo import MatrixPDO
from prymkp.series import TruncSeries


def q(a, b=1):
    return mpq(a) if b == 1 else mpq(a, b)


def ser(terms, var="z", T=None):
    """Series from {exponent: coefficient}; exponents may be rational."""
    return TruncSeries.from_exponents(var, {q(e): q(c) for e, c in terms.items()}, T)


def Y(e=1, c=1):
    return ser({e: c}, "y")


def op1(terms, **kw):
    """Scalar operator from {(order, xdeg): coefficient}."""
    return MatrixPDO(1, {k: [[q(c)]] for k, c in terms.items()}, **kw)


def opn(n, terms, **kw):
    return MatrixPDO(n, {k: [[q(c) for c in row] for row in m] for k, m in terms.items()}, **kw)


def diag(*entries):
    n = len(entries)
    var = entries[0].var
    zero = TruncSeries(var, {})
    return LoopMatrix([[entries[i] if i == j else zero for j in range(n)] for i in range(n)])


def heis(parts, comps):
    return HeisenbergElement(TypeVector.of(*parts), comps)


def same_op(P, Q) -> bool:
    return P.terms.keys() == Q.terms.keys() and all(P.terms[k] == Q.terms[k] for k in P.terms)


def same_span(A, B) -> bool:
    """Frames agree on their common window (ignores the tail flag)."""
    from prymkp.grassmann import vec_eq

    M = max(A.M, B.M)
    if A.tail:
        A = A.extended(M)
    if B.tail:
        B = B.extended(M)
    T = min(A.T, B.T)
    A, B = A.truncated(T), B.truncated(T)
    lo = -min(A.M, B.M)
    ka = {k for k in A.basis if k[1] >= lo}
    kb = {k for k in B.basis if k[1] >= lo}
    if ka != kb:
        return False
    cut = lambda v: {k: c for k, c in v.items() if k[1] >= lo}
    return all(vec_eq(cut(A.basis[k]), cut(B.basis[k])) for k in ka)
