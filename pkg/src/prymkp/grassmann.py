"""Finite-type points of the Grassmannian of k((z))^n and the loop action.

A frame stores the image of ``W ∩ z^{-M} k[[z]]^n`` in
``z^{-M} k[[z]]^n / z^T k[[z]]^n`` as a fully reduced echelon basis.  Keys
are ``(i, e)`` for the basis vector ``e_i z^e`` (``i`` is 0-based) and are
ordered by exponent first, then component.  With ``tail`` set, ``W`` also
contains every ``e_i z^{-mu}`` with ``mu > M`` (eventually standard).
"""

from __future__ import annotations

import re
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import InsufficientTruncation, ParseError, ValidationError
from .jets import JetRing, format_jet, is_unit, inverse as coeff_inverse, parse_jet
from .linalg import RHS, Echelon, flatten_equations
from .loop import HeisenbergElement, LoopMatrix, TypeVector, embed_heisenberg
from .rational import ONE, ZERO, parse_rational
from .series import TruncSeries, _ceil_key

Key = Tuple[int, int]
Vec = Dict[Key, object]


def key_order(k: Key):
    return (k[1], k[0])


# -- vectors ------------------------------------------------------------------


def vec_add(a: Vec, b: Vec, f=ONE) -> Vec:
    out = dict(a)
    for k, c in b.items():
        v = out.get(k, ZERO) + f * c
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def vec_truncate(v: Vec, T: Optional[int], low: Optional[int] = None) -> Vec:
    return {
        k: c
        for k, c in v.items()
        if c and (T is None or k[1] < T) and (low is None or k[1] >= low)
    }


def lead_key(v: Vec) -> Optional[Key]:
    keys = [k for k, c in v.items() if is_unit(c)]
    return min(keys, key=key_order) if keys else None


def vec_low(v: Vec) -> Optional[int]:
    return min((k[1] for k in v), default=None)


class Loop:
    """Sparse view of a loop matrix in z used for applying it to vectors."""

    __slots__ = ("n", "entries", "pole", "top")

    def __init__(self, m: LoopMatrix):
        if m.var != "z":
            raise ValueError("loop matrix must be expressed in z (substitute y = y(z) first)")
        self.n = m.n
        self.entries = []
        self.pole = 0
        top = None
        for i in range(m.n):
            for k in range(m.n):
                s = m.rows[i][k]
                if s.is_zero() and s.exact:
                    continue
                if s.d != 1:
                    raise ValueError("entries must be Laurent series in z")
                self.entries.append((i, k, s))
                lo = s.low_key()
                if lo is not None:
                    self.pole = max(self.pole, -lo)
                hi = s.key_limit() - 1 if s.T is not None else (max(s.coeffs) if s.coeffs else None)
                if hi is not None:
                    top = hi if top is None else max(top, hi)
        self.top = top  # highest exponent that may be nonzero, None if m == 0

    def apply(self, v: Vec, T_v: Optional[int]) -> Tuple[Vec, Optional[int]]:
        """(m v, guaranteed bound) for v known below T_v (None = exact)."""
        comps: Dict[int, Dict[int, object]] = {}
        for (i, e), c in v.items():
            comps.setdefault(i, {})[e] = c
        out: Vec = {}
        T_out = None
        for i, k, s in self.entries:
            vk = comps.get(k, {})
            lo_v = min(vk) if vk else T_v
            lo_s = s.low_key()
            if lo_s is None:
                lo_s = s.key_limit()
            if s.T is not None and lo_v is not None:
                T_out = _tmin(T_out, s.key_limit() + lo_v)
            if T_v is not None and lo_s is not None:
                T_out = _tmin(T_out, T_v + lo_s)
            for a, ca in s.coeffs.items():
                for e, ce in vk.items():
                    key = (i, a + e)
                    if T_out is not None and a + e >= T_out:
                        continue
                    val = out.get(key, ZERO) + ca * ce
                    if val:
                        out[key] = val
                    else:
                        out.pop(key, None)
        if T_out is not None:
            out = vec_truncate(out, T_out)
        return out, T_out


def _tmin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# -- frames -------------------------------------------------------------------


class Frame:
    __slots__ = ("n", "M", "T", "basis", "tail", "ring")

    def __init__(self, n: int, M: int, T: int, basis: Dict[Key, Vec], tail: bool = True, ring: Optional[JetRing] = None):
        self.n = n
        self.M = M
        self.T = T
        self.basis = basis
        self.tail = tail
        self.ring = ring

    @property
    def N(self) -> int:
        return self.T - 1

    def leads(self) -> List[Key]:
        return sorted(self.basis, key=key_order)

    def vectors(self) -> List[Vec]:
        return [self.basis[k] for k in self.leads()]

    def reduce(self, v: Vec, T: Optional[int] = None) -> Vec:
        """Remainder of v modulo W on the window [-M, min(T, self.T))."""
        bound = self.T if T is None else min(T, self.T)
        low = -self.M if self.tail else None
        v = vec_truncate(v, bound, low)
        hits = [k for k in v if k in self.basis]
        for k in hits:
            c = v.get(k)
            if c:
                v = vec_add(v, self.basis[k], -c)
        return vec_truncate(v, bound, low)

    def contains(self, v: Vec, T: Optional[int] = None) -> bool:
        if not self.tail and any(k[1] < -self.M for k, c in v.items() if c):
            raise InsufficientTruncation("vector leaves the window of an open frame")
        return not self.reduce(v, T)

    def extended(self, D: int) -> "Frame":
        """Same point with frame depth D >= M (requires the standard tail)."""
        if D <= self.M:
            return self
        if not self.tail:
            raise InsufficientTruncation("cannot deepen a frame without standard tail")
        basis = dict(self.basis)
        for mu in range(self.M + 1, D + 1):
            for i in range(self.n):
                basis[(i, -mu)] = {(i, -mu): ONE}
        return Frame(self.n, D, self.T, basis, True, self.ring)

    def truncated(self, T: int) -> "Frame":
        if T >= self.T:
            return self
        return echelonize(self.n, self.vectors(), self.M, T, self.tail, self.ring)

    def same_point(self, other: "Frame") -> bool:
        if self.n != other.n or self.tail != other.tail:
            return False
        M = max(self.M, other.M)
        a, b = self, other
        if self.tail:
            a, b = self.extended(M), other.extended(M)
        elif self.M != other.M:
            return False
        T = min(a.T, b.T)
        a, b = a.truncated(T), b.truncated(T)
        if set(a.basis) != set(b.basis):
            return False
        return all(vec_eq(a.basis[k], b.basis[k]) for k in a.basis)

    def tail_table(self) -> Dict[Tuple[int, int], Dict[Tuple[int, int], object]]:
        """{(j, mu): {(i, nu): c}} with 1-based components, lead omitted."""
        out = {}
        for (i, e), v in self.basis.items():
            out[(i + 1, -e)] = {(k[0] + 1, k[1]): c for k, c in v.items() if k != (i, e)}
        return out

    def __repr__(self):
        return f"Frame(n={self.n}, M={self.M}, T={self.T}, tail={self.tail}, leads={len(self.basis)})"


def vec_eq(a: Vec, b: Vec) -> bool:
    return not vec_add(a, b, -ONE)


def echelonize(
    n: int,
    vectors: Iterable[Vec],
    M: int,
    T: int,
    tail: bool = True,
    ring: Optional[JetRing] = None,
) -> Frame:
    """Fully reduced echelon basis of span(vectors) on the window.

    Over jets the pivot of a vector is its lowest key with a unit
    coefficient.  If elimination leaves vectors with only nilpotent
    coefficients the window is shrunk below them and elimination repeats.
    """
    vectors = list(vectors)
    low = -M if tail else None
    while True:
        basis: Dict[Key, Vec] = {}
        leftovers: List[Vec] = []
        for v in vectors:
            v = vec_truncate(v, T, low)
            for k in [k for k in v if k in basis]:
                c = v.get(k)
                if c:
                    v = vec_add(v, basis[k], -c)
            if not v:
                continue
            L = lead_key(v)
            if L is None:
                leftovers.append(v)
                continue
            inv = coeff_inverse(v[L])
            v = {k: c * inv for k, c in v.items()}
            for k, b in basis.items():
                c = b.get(L)
                if c:
                    basis[k] = vec_add(b, v, -c)
            basis[L] = v
        # leftovers may still reduce against later pivots
        bad = None
        for v in leftovers:
            for k in [k for k in v if k in basis]:
                c = v.get(k)
                if c:
                    v = vec_add(v, basis[k], -c)
            if v:
                lo = vec_low(v)
                bad = lo if bad is None else min(bad, lo)
        if bad is None:
            break
        T = bad
    if not tail:
        basis = {k: v for k, v in basis.items() if k[1] >= -M}
    return Frame(n, M, T, basis, tail, ring)


def base_point(n: int, M: int = 0, N: int = 1) -> Frame:
    basis = {(i, -mu): {(i, -mu): ONE} for i in range(n) for mu in range(M + 1)}
    return Frame(n, M, N + 1, basis, True)


def finite_point(n: int, M: int, N: int, tails: Dict, ring: Optional[JetRing] = None) -> Frame:
    """Big-cell point from {(j, mu): {(i, nu): c}} with 1-based j, i and 1 <= nu <= N."""
    vecs = []
    for j in range(1, n + 1):
        for mu in range(M + 1):
            v: Vec = {(j - 1, -mu): ONE}
            for (i, nu), c in tails.get((j, mu), {}).items():
                if not 1 <= i <= n or not 1 <= nu <= N:
                    raise ValidationError(f"tail entry ({i},{nu}) outside 1..{n} x 1..{N}")
                if c:
                    v[(i - 1, nu)] = c
            vecs.append(v)
    return echelonize(n, vecs, M, N + 1, True, ring)


# -- invariants -----------------------------------------------------------


def fredholm_index(W: Frame) -> int:
    leads = set(W.basis)
    kernel = sum(1 for k in leads if k[1] >= 1)
    coker = sum(1 for i in range(W.n) for mu in range(W.M + 1) if (i, -mu) not in leads)
    return kernel - coker


def is_big_cell(W: Frame) -> bool:
    leads = set(W.basis)
    want = {(i, -mu) for i in range(W.n) for mu in range(W.M + 1)}
    return leads == want


# -- loop action ---------------------------------------------------------


def _as_z(m: LoopMatrix, y: Optional[TruncSeries], T=None) -> LoopMatrix:
    if m.var == "z":
        return m
    if y is None:
        raise ValueError(f"loop matrix in {m.var} needs y(z) to act on V")
    return m.substitute(y, T=T)


def _laurent_top(m: LoopMatrix) -> Optional[int]:
    """Highest z-exponent if every entry is an exact Laurent polynomial."""
    top = -(10 ** 9)
    for r in m.rows:
        for s in r:
            if s.T is not None:
                return None
            if s.coeffs:
                top = max(top, max(s.coeffs))
    return top


def loop_inverse(m: LoopMatrix, T=None) -> LoopMatrix:
    """Inverse in gl(n, k((z))) by Gauss-Jordan with lowest-order pivots."""
    from .series import ord_, ps_inv, ps_mul

    n = m.n
    A = [list(r) for r in m.rows]
    B = [[TruncSeries(m.var, {0: ONE}) if i == j else TruncSeries(m.var, {}) for j in range(n)] for i in range(n)]
    for c in range(n):
        best, best_ord = None, None
        for r in range(c, n):
            s = A[r][c]
            if s.is_zero():
                continue
            o = ord_(s)
            if best is None or o > best_ord:
                best, best_ord = r, o
        if best is None:
            raise ZeroDivisionError("loop matrix is singular within truncation")
        A[c], A[best] = A[best], A[c]
        B[c], B[best] = B[best], B[c]
        inv = ps_inv(A[c][c], T=T)
        A[c] = [ps_mul(inv, s) if not (s.is_zero() and s.exact) else s for s in A[c]]
        B[c] = [ps_mul(inv, s) if not (s.is_zero() and s.exact) else s for s in B[c]]
        for r in range(n):
            if r == c or (A[r][c].is_zero() and A[r][c].exact):
                continue
            f = A[r][c]
            A[r] = [a - ps_mul(f, b) if not (b.is_zero() and b.exact) else a for a, b in zip(A[r], A[c])]
            B[r] = [a - ps_mul(f, b) if not (b.is_zero() and b.exact) else a for a, b in zip(B[r], B[c])]
    return LoopMatrix(B, m.var)


def act_loop(
    m: LoopMatrix,
    W: Frame,
    y: Optional[TruncSeries] = None,
    inverse: Optional[LoopMatrix] = None,
    M_out: Optional[int] = None,
) -> Frame:
    """Frame of m.W.

    With a standard tail the input is deepened by the pole order of m^{-1}
    so that every vector of m.W inside the output window is produced.  The
    output keeps the standard tail only when m and m^{-1} are exact Laurent
    polynomials.
    """
    mz = _as_z(m, y)
    if m.n != W.n:
        raise ValueError("size mismatch")
    inv = inverse
    if inv is None:
        inv = loop_inverse(mz, T=W.T + W.M + 1)
    inv = _as_z(inv, y)
    p_inv = inv.pole_order()
    top_inv = _laurent_top(inv)
    exact_m = _laurent_top(mz) is not None
    tail_out = W.tail and exact_m and top_inv is not None
    if W.tail:
        if M_out is None:
            M_out = W.M + (max(top_inv, 0) if tail_out else 0)
        src = W.extended(M_out + p_inv)
    else:
        if M_out is None:
            M_out = W.M - p_inv
        if M_out + p_inv > W.M:
            raise InsufficientTruncation("open frame is too shallow for this loop element")
        src = W
    if M_out < 0:
        raise InsufficientTruncation("output depth would be negative")
    L = Loop(mz)
    images = []
    T_out = src.T - L.pole
    for v in src.vectors():
        T_v = None if _is_monomial_std(v, src, W) else src.T
        img, T_img = L.apply(v, T_v)
        T_out = _tmin(T_out, T_img)
        images.append(img)
    if T_out is None or T_out <= -M_out:
        raise InsufficientTruncation("loop element truncation does not cover the frame window")
    # vectors with leads below -M_out are dropped after elimination
    out = echelonize(W.n, images, M_out + L.pole + p_inv, T_out, False, W.ring)
    basis = {k: v for k, v in out.basis.items() if k[1] >= -M_out}
    if tail_out:
        basis = {k: {kk: c for kk, c in v.items() if kk[1] >= -M_out} for k, v in basis.items()}
    return Frame(W.n, M_out, out.T, basis, tail_out, W.ring)


def _is_monomial_std(v: Vec, src: Frame, W: Frame) -> bool:
    if len(v) != 1:
        return False
    (k,) = v
    return k[1] < -W.M


def test_vectors(W: Frame, mu_max: int) -> List[Tuple[Vec, Optional[int]]]:
    """Frame vectors (known below T) plus standard tail monomials (exact)."""
    out = [(v, W.T) for v in W.vectors()]
    if W.tail:
        for mu in range(W.M + 1, mu_max + 1):
            for i in range(W.n):
                out.append(({(i, -mu): ONE}, None))
    return out


def stabilizes(m: LoopMatrix, W: Frame, y: Optional[TruncSeries] = None) -> bool:
    """Does m W ⊂ W hold on every window where it can be decided?"""
    mz = _as_z(m, y, T=W.T + W.M + 1)
    L = Loop(mz)
    if L.top is None:
        return True
    mu_max = W.M + max(L.top, 0)
    tests = test_vectors(W, mu_max)
    checked = 0
    for v, T_v in tests:
        lo = vec_low(v)
        if not W.tail and lo is not None and lo - L.pole < -W.M:
            continue
        img, T_img = L.apply(v, T_v)
        bound = _tmin(T_img, W.T)
        if T_v is not None and bound is not None and bound <= -W.M:
            raise InsufficientTruncation("loop element truncation does not cover the frame")
        if W.reduce(img, bound):
            return False
        checked += 1
    return True


def heisenberg_basis_loop(tv: TypeVector, j: int, k: int, y_z: Dict[int, TruncSeries]) -> Loop:
    """Loop view of y^{k/n_j} placed in block j, evaluated at y = y(z).

    ``y_z`` maps integer q to the series y(z)^q.
    """
    nj = tv.parts[j]
    off = tv.offsets()[j]
    q, s = divmod(k, nj)
    n = tv.n
    zero = TruncSeries("z", {})
    rows = [[zero] * n for _ in range(n)]
    for p in range(nj):
        col = p - s
        if col >= 0:
            rows[off + p][off + col] = y_z[q]
        else:
            rows[off + p][off + col + nj] = y_z[q + 1]
    return Loop(LoopMatrix(rows, "z"))


def y_powers(y: TruncSeries, lo: int, hi: int, prec) -> Dict[int, TruncSeries]:
    """y(z)^q for lo <= q <= hi, each known at least below prec when possible."""
    from .series import ps_inv, ps_mul

    out: Dict[int, TruncSeries] = {0: TruncSeries(y.var, {0: ONE})}
    order = y.lowest_exponent()
    if hi >= 1:
        p = y
        out[1] = p
        for q in range(2, hi + 1):
            p = ps_mul(p, y)
            out[q] = p
    if lo <= -1:
        m = -lo
        yinv = ps_inv(y, T=prec + (m - 1) * order)
        p = yinv
        out[-1] = p
        for q in range(2, m + 1):
            p = ps_mul(p, yinv)
            out[-q] = p
    return out


def gamma_equivalent(
    W1: Frame,
    W2: Frame,
    tv: TypeVector,
    y: TruncSeries,
) -> Optional[LoopMatrix]:
    """g in Gamma_n(y) with g W1 = W2 at truncation, or None."""
    if W1.n != W2.n or W1.n != tv.n:
        raise ValueError("size mismatch")
    if fredholm_index(W1) != fredholm_index(W2):
        return None
    if y.var != "z":
        raise ValueError("y must be given as a series in z")
    r = y.lowest_exponent()
    D = W1.M
    T = min(W1.T, W2.T)
    # y(z)^q only matters while r q - D < T
    qmax = _ceil_key(mpq(T + D) / r, 1)
    mu_max = W1.M + _ceil_key(r * (qmax + 1), 1) if W1.tail else W1.M
    yz = y_powers(y, 0, qmax + 1, T + mu_max + 1)
    cands = []
    for j, nj in enumerate(tv.parts):
        for k in range(1, nj * (qmax + 1)):
            cands.append(((j, k), heisenberg_basis_loop(tv, j, k, yz)))
    ident = Loop(LoopMatrix.identity(tv.n, "z"))
    rows = membership_equations(W1, W2, cands, ident, mu_max)
    ech = Echelon()
    for row in rows:
        ech.add(row)
        if ech.inconsistent:
            return None
    sol = ech.solution()
    comps = []
    for j, nj in enumerate(tv.parts):
        coeffs = {k: c for (jj, k), c in sol.items() if jj == j}
        comps.append(TruncSeries("y", coeffs, None, nj))
    g = embed_heisenberg(HeisenbergElement(tv, comps))
    return LoopMatrix.identity(tv.n, "y") + g


def membership_equations(
    W_src: Frame,
    W_tgt: Frame,
    candidates: Sequence[Tuple[object, Loop]],
    base: Optional[Loop],
    mu_max: int,
):
    """Rational equations for (base + sum_u x_u X_u) W_src ⊂ W_tgt.

    Each candidate X_u is applied to the test vectors of W_src and reduced
    modulo W_tgt; the unknown labels become columns and the base image
    goes to the right-hand side.  Jet coefficients are split per monomial.
    """
    eqs: Dict = {}
    pole = max([L.pole for _, L in candidates] + ([base.pole] if base else [0]))
    for t_idx, (v, T_v) in enumerate(test_vectors(W_src, mu_max)):
        lo = vec_low(v)
        if not W_tgt.tail and lo is not None and lo - pole < -W_tgt.M:
            continue
        pieces = []
        bound = W_tgt.T
        for label, L in candidates:
            img, T_img = L.apply(v, T_v)
            bound = _tmin(bound, T_img)
            pieces.append((label, img))
        if base is not None:
            img, T_img = base.apply(v, T_v)
            bound = _tmin(bound, T_img)
            pieces.append((RHS, img))
        for label, img in pieces:
            rem = W_tgt.reduce(img, bound)
            sign = -1 if label == RHS else 1
            for key, c in rem.items():
                row = eqs.setdefault((t_idx, key), {})
                row[label] = row.get(label, ZERO) + sign * c
    return flatten_equations(eqs)


# -- frame file format ------------------------------------------------------

_HEAD = re.compile(r"(\w+)\s*=\s*(\S+)")


def format_frame(W: Frame) -> str:
    idx = fredholm_index(W)
    head = f"n={W.n} M={W.M} N={W.N} index={idx}"
    if not W.tail:
        head += " tail=open"
    if W.ring is not None:
        head += f" jets={','.join(W.ring.names)} K={W.ring.K}"
    big = is_big_cell(W)
    if not big:
        leads = sorted(((i + 1, -e) for i, e in W.basis), key=lambda t: (t[0], t[1]))
        head += " leads=" + ",".join(f"{j}:{mu}" for j, mu in leads)
    lines = [head]
    table = W.tail_table()
    for (j, mu) in sorted(table):
        for (i, nu), c in sorted(table[(j, mu)].items(), key=lambda t: (t[0][1], t[0][0])):
            lines.append(f"{j},{mu} : {i},{nu} : {format_jet(c)}")
    return "\n".join(lines) + "\n"


def parse_frame(text: str) -> Frame:
    lines = [ln for ln in text.splitlines()]
    first = None
    for idx, ln in enumerate(lines):
        if ln.strip() and not ln.lstrip().startswith("#"):
            first = idx
            break
    if first is None:
        raise ParseError("empty frame file", 1, 1)
    head = {}
    for m in _HEAD.finditer(lines[first]):
        head[m.group(1)] = (m.group(2), m.start() + 1)
    for key in ("n", "M", "N"):
        if key not in head:
            raise ParseError(f"missing {key}= in header", first + 1, 1)
    try:
        n, M, N = (int(head[k][0]) for k in ("n", "M", "N"))
    except ValueError:
        raise ParseError("n, M, N must be integers", first + 1, 1)
    if n < 1 or M < 0 or N < 1:
        raise ValidationError("need n >= 1, M >= 0, N >= 1")
    tail = head.get("tail", ("standard", 0))[0] != "open"
    ring = None
    if "jets" in head:
        ring = JetRing(head["jets"][0].split(","), int(head.get("K", ("1", 0))[0]))
    leads = None
    if "leads" in head:
        leads = []
        for tok in head["leads"][0].split(","):
            a, _, b = tok.partition(":")
            leads.append((int(a), int(b)))
    entries: Dict[Tuple[int, int], Dict[Tuple[int, int], object]] = {}
    for ln_no in range(first + 1, len(lines)):
        raw = lines[ln_no]
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split(":")
        if len(parts) < 3:
            raise ParseError("expected 'j,mu : i,nu : rational'", ln_no + 1, 1)
        coeff_txt = ":".join(parts[2:])
        try:
            j, mu = (int(x) for x in parts[0].split(","))
            i, nu = (int(x) for x in parts[1].split(","))
        except ValueError:
            raise ParseError("bad index pair", ln_no + 1, 1)
        try:
            c = parse_jet(coeff_txt, ring) if ring is not None else parse_rational(coeff_txt)
        except ValueError as exc:
            raise ParseError(str(exc), ln_no + 1, len(parts[0]) + len(parts[1]) + 3)
        if not 1 <= j <= n or not 1 <= i <= n:
            raise ValidationError(f"line {ln_no + 1}: component index outside 1..{n}")
        entries.setdefault((j, mu), {})[(i, nu)] = c
    if leads is None:
        for (j, mu) in entries:
            if not 0 <= mu <= M:
                raise ValidationError(f"frame level {mu} outside 0..{M}")
        W = finite_point(n, M, N, entries, ring)
    else:
        vecs = []
        for j, mu in leads:
            v = {(j - 1, -mu): ONE}
            for (i, nu), c in entries.get((j, mu), {}).items():
                v[(i - 1, nu)] = c
            vecs.append(v)
        W = echelonize(n, vecs, M, N + 1, tail, ring)
    W.tail = tail
    if "index" in head and int(head["index"][0]) != fredholm_index(W):
        raise ValidationError("declared index disagrees with the frame")
    return W
