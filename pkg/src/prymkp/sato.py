"""The correspondence between monic zeroth-order operators and the big cell.

``sigma(S)`` is the frame of ``S^{-1} k[z^{-1}]^n``; ``sigma_inverse``
recovers S from a frame by solving for the Taylor coefficients of the
left-normal ``S^{-1}`` one power of x at a time.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from gmpy2 import mpq

from .errors import DepthTooShallow, NotBigCell, NotMonic, ValidationError, WindowUnderflow
from .grassmann import Frame, Vec, echelonize, fredholm_index, is_big_cell
from .pdo import (
    JetPDO,
    MatrixPDO,
    Mat,
    from_left_normal,
    is_monic_zeroth,
    mat_scale,
    mat_zero,
    pdo_invert_monic,
)
from .rational import ONE, ZERO, binom, factorial, falling


def _check_monic(S: MatrixPDO) -> None:
    if not is_monic_zeroth(S):
        raise NotMonic("expected I + sum s_m(x) d^{-m}")
    if not S.exact:
        raise WindowUnderflow("sigma needs S as an exact finite operator")


def required_depth(S) -> int:
    """Smallest frame depth past which S^{-1} k[z^{-1}]^n is standard."""
    comps = S.comps.values() if isinstance(S, JetPDO) else [S]
    low = min((P.bottom() or 0 for P in comps), default=0)
    return max(0, -low)


def _apply(S: MatrixPDO, w: Dict[int, Dict[int, object]], T: int, skip_identity: bool):
    """S acting on {exponent: {component: c}}, exponents below T, by the rho formula."""
    out: Dict[int, Dict[int, object]] = {}
    for e, comp in w.items():
        for (m, p), a in S.terms.items():
            if skip_identity and (m, p) == (0, 0):
                continue
            f = falling(m - e, p)
            if not f:
                continue
            ex = e + p - m
            if ex >= T:
                continue
            if p & 1:
                f = -f
            slot = out.setdefault(ex, {})
            for i, c in comp.items():
                fc = f * c
                for k in range(S.n):
                    if a[k][i]:
                        slot[k] = slot.get(k, ZERO) + fc * a[k][i]
    return out


def _solve_monic(S: MatrixPDO, rhs: Dict[int, Dict[int, object]], T: int) -> Dict[int, Dict[int, object]]:
    """w with S w = rhs on exponents < T (S is unipotent in the z-order)."""
    n = S.n
    nonid = [((m, p), a) for (m, p), a in S.terms.items() if (m, p) != (0, 0)]
    res = {e: dict(c) for e, c in rhs.items()}
    w: Dict[int, Dict[int, object]] = {}
    while res:
        e = min(res)
        comp = {i: c for i, c in res.pop(e).items() if c}
        if e >= T:
            break
        if not comp:
            continue
        w[e] = comp
        for (m, p), a in nonid:
            f = falling(m - e, p)
            if not f:
                continue
            ex = e + p - m
            if ex >= T:
                continue
            if p & 1:
                f = -f
            slot = res.setdefault(ex, {})
            for i, c in comp.items():
                fc = f * c
                for k in range(n):
                    if a[k][i]:
                        slot[k] = slot.get(k, ZERO) - fc * a[k][i]
    return w


def _to_vec(w: Dict[int, Dict[int, object]]) -> Vec:
    return {(i, e): c for e, comp in w.items() for i, c in comp.items() if c}


def sigma(S, M: int, N: int) -> Frame:
    """Frame of S^{-1} k[z^{-1}]^n with depth M and tails up to z^N.

    Accepts an exact MatrixPDO or a JetPDO (jet-valued point).
    """
    if isinstance(S, JetPDO):
        return _sigma_jet(S, M, N)
    _check_monic(S)
    need = required_depth(S)
    if M < need:
        raise DepthTooShallow(f"depth M={M} below the d-floor {need} of S")
    if N < 1:
        raise ValidationError("tail N must be >= 1")
    T = N + 1
    vecs = []
    for j in range(S.n):
        for mu in range(M + 1):
            w = _solve_monic(S, {-mu: {j: ONE}}, T)
            vecs.append(_to_vec(w))
    W = echelonize(S.n, vecs, M, T, True)
    return W


def _sigma_jet(S: JetPDO, M: int, N: int) -> Frame:
    S0 = S.constant()
    _check_monic(S0)
    for P in S.comps.values():
        if not P.exact:
            raise WindowUnderflow("sigma needs exact jet coefficients")
    need = required_depth(S)
    if M < need:
        raise DepthTooShallow(f"depth M={M} below the d-floor {need} of S")
    ring = S.ring
    T = N + 1
    monos = ring.monomials()
    others = [(a, P) for a, P in S.comps.items() if any(a)]
    vecs = []
    for j in range(S.n):
        for mu in range(M + 1):
            parts: Dict[tuple, Dict[int, Dict[int, object]]] = {}
            for a in monos:
                rhs: Dict[int, Dict[int, object]] = {-mu: {j: ONE}} if not any(a) else {}
                for b, P in others:
                    c = tuple(x - y for x, y in zip(a, b))
                    if min(c) < 0 or c not in parts:
                        continue
                    img = _apply(P, parts[c], T, False)
                    for e, comp in img.items():
                        slot = rhs.setdefault(e, {})
                        for i, v in comp.items():
                            slot[i] = slot.get(i, ZERO) - v
                w = _solve_monic(S0, rhs, T)
                if w:
                    parts[a] = w
            vec: Vec = {}
            for a, w in parts.items():
                for key, c in _to_vec(w).items():
                    term = _jet_monomial(ring, a, c)
                    vec[key] = vec[key] + term if key in vec else term
            vecs.append({k: c for k, c in vec.items() if c})
    return echelonize(S.n, vecs, M, T, True, ring)


def _jet_monomial(ring, a, c):
    from .jets import JetScalar

    return JetScalar(ring, {tuple(a): mpq(c)})


def sigma_direct(S: MatrixPDO, M: int, N: int) -> Frame:
    """Second route: reduced tails from S w in k[z^{-1}]^n, no S^{-1} involved.

    The reduced vector w = e_j z^{-mu} + sum_{nu>=1} t_nu z^nu is determined
    by killing the positive part of S w one exponent at a time.
    """
    _check_monic(S)
    if M < required_depth(S):
        raise DepthTooShallow("depth below the d-floor of S")
    n = S.n
    basis = {}
    for j in range(n):
        for mu in range(M + 1):
            w: Dict[int, Dict[int, object]] = {-mu: {j: ONE}}
            for beta in range(1, N + 1):
                img = _apply(S, w, beta + 1, False)
                slot = img.get(beta, {})
                if any(slot.values()):
                    w[beta] = {i: -c for i, c in slot.items() if c}
            basis[(j, -mu)] = _to_vec(w)
    return Frame(n, M, N + 1, basis, True)


# -- inverse direction --------------------------------------------------------


def sigma_inverse(W: Frame, Dx: int, floor: int) -> MatrixPDO:
    """S with orders >= floor and x-degree < Dx such that sigma(S) = W.

    Writes S^{-1} = I + sum_nu d^{-nu} s_nu(x) (left normal).  The frame
    vector with lead e_j z^{-mu} equals S^{-1} e_j z^{-mu} minus its
    components along lower frame vectors; comparing the coefficient of
    e_i z^beta determines the mu-th Taylor coefficient of s_beta, which
    enters with the factor (-1)^mu.
    """
    if W.ring is not None:
        raise ValidationError("sigma_inverse expects a rational frame")
    if not is_big_cell(W) or not W.tail:
        raise NotBigCell("frame is not in the big cell")
    if fredholm_index(W) != 0:
        raise NotBigCell("frame index is not zero")
    if floor > 0 or Dx < 1:
        raise ValidationError("need floor <= 0 and Dx >= 1")
    wt = Dx - floor  # weight bound of the output rectangle
    if W.M < Dx - floor:
        raise DepthTooShallow(f"frame depth {W.M} below Dx + |floor| = {Dx - floor}")
    S = sigma_inverse_window(W, wt, floor)
    R = S.restrict(floor, Dx)
    return MatrixPDO(W.n, R.terms)


def sigma_inverse_window(W: Frame, wt: int, floor: int) -> MatrixPDO:
    """S known on orders >= floor and monomials x^p d^m of weight p - m < wt."""
    if W.ring is not None:
        raise ValidationError("sigma_inverse expects a rational frame")
    if not is_big_cell(W) or not W.tail:
        raise NotBigCell("frame is not in the big cell")
    if fredholm_index(W) != 0:
        raise NotBigCell("frame index is not zero")
    if W.M < wt - 2:
        raise DepthTooShallow(f"frame depth {W.M} below {wt - 2}")
    if W.N < wt - 1:
        raise DepthTooShallow(f"frame tail {W.N} below {wt - 1}")
    n = W.n
    # tails[(j, mu)][(i, beta)] for beta >= 1
    tails: Dict[Tuple[int, int], Dict[Tuple[int, int], mpq]] = {}
    for (j, e), v in W.basis.items():
        tails[(j, -e)] = {k: c for k, c in v.items() if k[1] >= 1}
    # s[(m, nu)] = n x n matrix of m-th derivatives at 0 of s_nu
    s: Dict[Tuple[int, int], Mat] = {}
    pivots = []
    for mu in range(wt - 1):
        sign = -ONE if mu & 1 else ONE
        pivots.append(sign)
        for j in range(n):
            # components of S^{-1} e_j z^{-mu} along lower frame vectors
            lower: Dict[Tuple[int, int], mpq] = {}
            for m in range(mu):
                cm = binom(mu, m) * (-1 if m & 1 else 1)
                for nu in range(1, mu - m + 1):
                    a = s.get((m, nu))
                    if a is None:
                        continue
                    E = -mu + m + nu
                    for i in range(n):
                        if a[i][j]:
                            lower[(i, E)] = lower.get((i, E), ZERO) + cm * a[i][j]
            for beta in range(1, wt - mu):
                rhs = [ZERO] * n
                for (i, b), c in tails[(j, mu)].items():
                    if b == beta:
                        rhs[i] += c
                for (k, E), c in lower.items():
                    if not c:
                        continue
                    for (i, b), t in tails[(k, -E)].items():
                        if b == beta:
                            rhs[i] += c * t
                for m in range(mu):
                    a = s.get((m, beta + mu - m))
                    if a is None:
                        continue
                    cm = binom(mu, m) * (-1 if m & 1 else 1)
                    for i in range(n):
                        rhs[i] -= cm * a[i][j]
                col = [r / sign for r in rhs]
                if any(col):
                    a = s.setdefault((mu, beta), mat_zero(n))
                    for i in range(n):
                        a[i][j] = col[i]
    # left-normal S^{-1}, weight < wt and orders >= floor
    terms: Dict[Tuple[int, int], Mat] = {(0, 0): [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]}
    for (m, nu), a in s.items():
        if -nu >= floor and m + nu < wt:
            terms[(-nu, m)] = mat_scale(a, 1 / factorial(m))
    L = MatrixPDO(n, terms, floor, wt)
    Sinv = from_left_normal(L)
    return pdo_invert_monic(Sinv, floor)


def injectivity_witness(W1: Frame, W2: Frame) -> Optional[Tuple[int, int, int, int]]:
    """First (j, mu, i, nu) where two big-cell frames differ, 1-based."""
    t1, t2 = W1.tail_table(), W2.tail_table()
    for key in sorted(set(t1) | set(t2)):
        a, b = t1.get(key, {}), t2.get(key, {})
        for k in sorted(set(a) | set(b), key=lambda t: (t[1], t[0])):
            if a.get(k, 0) != b.get(k, 0):
                return key + k
    return None


def random_monic(rng, n: int, floor: int, Dx: int, density: float = 1.0, height: int = 3) -> MatrixPDO:
    """Random I + sum_{m=1}^{|floor|} s_m(x) d^{-m} with deg s_m < Dx."""
    terms: Dict[Tuple[int, int], Mat] = {(0, 0): [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]}
    for m in range(floor, 0):
        for p in range(Dx):
            a = mat_zero(n)
            for i in range(n):
                for j in range(n):
                    if rng.random() < density:
                        a[i][j] = mpq(rng.randint(-height, height), rng.randint(1, 2))
            terms[(m, p)] = a
    return MatrixPDO(n, terms)
