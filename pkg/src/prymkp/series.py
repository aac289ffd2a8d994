"""Truncated Laurent/Puiseux series with an explicit guaranteed window.

A series in ``var`` stores coefficients of ``var**(k/d)`` keyed by the
integer ``k``.  ``T`` is the guaranteed bound: every exponent below ``T`` is
known exactly, anything at or above is unknown.  ``T is None`` means the
series is exact (a Laurent polynomial).
"""

from __future__ import annotations

import math
import re
from typing import Dict, Iterable, Optional, Tuple

from gmpy2 import mpq

from .errors import (
    IncompatibleVariable,
    InsufficientTruncation,
    NonPositiveValuation,
    NotMonic,
    ParseError,
    ZeroLeadingTerm,
)
from .jets import is_unit, inverse as coeff_inverse
from .rational import ONE, ZERO, fmt_exponent, parse_rational

NEG_INF = float("-inf")
INF = float("inf")

# relative precision used when an exact, non-monomial input must be expanded
DEFAULT_PREC = 16


def _ceil_key(T, d: int) -> int:
    """Smallest integer k with k/d >= T."""
    x = mpq(T) * d
    return -((-x.numerator) // x.denominator)


class TruncSeries:
    __slots__ = ("var", "d", "coeffs", "T")

    def __init__(self, var: str, coeffs: Dict[int, object], T=None, d: int = 1):
        if d < 1:
            raise ValueError("ramification denominator must be >= 1")
        self.var = var
        self.d = d
        self.T = None if T is None else mpq(T)
        lim = None if self.T is None else _ceil_key(self.T, d)
        self.coeffs = {k: c for k, c in coeffs.items() if c and (lim is None or k < lim)}
        self._reduce()

    def _reduce(self):
        # smallest d compatible with the stored keys
        if self.d == 1:
            return
        g = self.d
        for k in self.coeffs:
            g = math.gcd(g, k)
            if g == 1:
                return
        if g > 1:
            self.coeffs = {k // g: c for k, c in self.coeffs.items()}
            self.d //= g

    # -- constructors
    @classmethod
    def from_exponents(cls, var: str, terms: Dict, T=None) -> "TruncSeries":
        exps = {mpq(e): c for e, c in terms.items()}
        d = 1
        for e in exps:
            d = d * e.denominator // math.gcd(d, e.denominator)
        return cls(var, {int(e * d): c for e, c in exps.items()}, T, d)

    @classmethod
    def monomial(cls, var: str, e=0, c=ONE, T=None) -> "TruncSeries":
        return cls.from_exponents(var, {mpq(e): c}, T)

    @classmethod
    def zero(cls, var: str, T=None) -> "TruncSeries":
        return cls(var, {}, T)

    # -- inspection
    @property
    def exact(self) -> bool:
        return self.T is None

    def key_limit(self) -> Optional[int]:
        return None if self.T is None else _ceil_key(self.T, self.d)

    def low_key(self) -> Optional[int]:
        return min(self.coeffs) if self.coeffs else None

    def lowest_exponent(self):
        k = self.low_key()
        return None if k is None else mpq(k, self.d)

    def low_bound(self):
        """Lowest exponent, or T when nothing is stored (for window arithmetic)."""
        k = self.low_key()
        if k is not None:
            return mpq(k, self.d)
        return self.T

    def leading_coefficient(self):
        k = self.low_key()
        return None if k is None else self.coeffs[k]

    def coeff(self, e):
        e = mpq(e)
        if self.T is not None and e >= self.T:
            raise InsufficientTruncation(f"coefficient of exponent {e} is beyond T={self.T}")
        x = e * self.d
        if x.denominator != 1:
            return ZERO
        return self.coeffs.get(int(x), ZERO)

    def terms(self) -> Iterable[Tuple[mpq, object]]:
        for k in sorted(self.coeffs):
            yield mpq(k, self.d), self.coeffs[k]

    def is_zero(self) -> bool:
        return not self.coeffs

    def with_d(self, d: int) -> Dict[int, object]:
        if d % self.d:
            raise ValueError("denominator must be a multiple")
        f = d // self.d
        return {k * f: c for k, c in self.coeffs.items()}

    def truncate(self, T) -> "TruncSeries":
        if T is None:
            return self
        T = mpq(T)
        if self.T is not None and T > self.T:
            T = self.T
        return TruncSeries(self.var, self.coeffs, T, self.d)

    def map(self, f) -> "TruncSeries":
        return TruncSeries(self.var, {k: f(c) for k, c in self.coeffs.items()}, self.T, self.d)

    def rename(self, var: str) -> "TruncSeries":
        return TruncSeries(var, self.coeffs, self.T, self.d)

    # -- arithmetic
    def _check(self, other: "TruncSeries"):
        if self.var != other.var:
            raise IncompatibleVariable(f"{self.var} vs {other.var}")

    def __add__(self, other):
        if not isinstance(other, TruncSeries):
            other = TruncSeries(self.var, {0: other} if other else {})
        self._check(other)
        d = _lcm(self.d, other.d)
        out = self.with_d(d)
        for k, c in other.with_d(d).items():
            out[k] = out.get(k, ZERO) + c
        return TruncSeries(self.var, out, _min_T(self.T, other.T), d)

    __radd__ = __add__

    def __neg__(self):
        return self.map(lambda c: -c)

    def __sub__(self, other):
        if not isinstance(other, TruncSeries):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncSeries":
        return self.map(lambda x: x * c)

    def shift(self, e) -> "TruncSeries":
        """Multiply by var**e."""
        e = mpq(e)
        d = _lcm(self.d, e.denominator)
        s = int(e * d)
        coeffs = {k + s: c for k, c in self.with_d(d).items()}
        return TruncSeries(self.var, coeffs, None if self.T is None else self.T + e, d)

    def __mul__(self, other):
        if isinstance(other, TruncSeries):
            return ps_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if k < 0:
            return ps_inv(self) ** (-k)
        out = TruncSeries(self.var, {0: ONE})
        base = self
        while k:
            if k & 1:
                out = ps_mul(out, base)
            k >>= 1
            if k:
                base = ps_mul(base, base)
        return out

    def equal_within(self, other: "TruncSeries", T=None) -> bool:
        """Equality on the common guaranteed window (optionally cut at T)."""
        self._check(other)
        bound = _min_T(self.T, other.T)
        bound = _min_T(bound, None if T is None else mpq(T))
        diff = (self - other)
        if bound is not None:
            diff = TruncSeries(diff.var, diff.coeffs, bound, diff.d)
        return diff.is_zero()

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return (
            self.var == other.var
            and self.d == other.d
            and self.T == other.T
            and self.coeffs == other.coeffs
        )

    __hash__ = None

    def __repr__(self):
        return f"TruncSeries({format_series(self)!r})"


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _min_T(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def ord_(s: TruncSeries):
    """Pole order: minus the lowest exponent; -inf if zero within truncation."""
    e = s.lowest_exponent()
    if e is None:
        return NEG_INF
    return -e


def ps_mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    a._check(b)
    d = _lcm(a.d, b.d)
    la, lb = a.low_bound(), b.low_bound()
    T = None
    if a.T is not None and lb is not None:
        T = a.T + lb
    if b.T is not None and la is not None:
        T = _min_T(T, b.T + la)
    if (la is None and a.T is None) or (lb is None and b.T is None):
        return TruncSeries(a.var, {}, None, 1)
    lim = None if T is None else _ceil_key(T, d)
    ca, cb = a.with_d(d), b.with_d(d)
    out: Dict[int, object] = {}
    for i, x in ca.items():
        for j, y in cb.items():
            k = i + j
            if lim is not None and k >= lim:
                continue
            out[k] = out.get(k, ZERO) + x * y
    return TruncSeries(a.var, out, T, d)


def ps_inv(a: TruncSeries, T=None) -> TruncSeries:
    """Multiplicative inverse; ``T`` bounds the output when ``a`` is exact."""
    k0 = a.low_key()
    if k0 is None:
        raise ZeroLeadingTerm("no nonzero coefficient within truncation")
    c0 = a.coeffs[k0]
    if not is_unit(c0):
        raise ZeroLeadingTerm("leading coefficient is not invertible")
    v = mpq(k0, a.d)
    if len(a.coeffs) == 1 and a.T is None:
        return TruncSeries(a.var, {-k0: coeff_inverse(c0)}, None, a.d)
    if a.T is not None:
        T_out = a.T - 2 * v
        if T is not None:
            T_out = min(T_out, mpq(T))
    else:
        T_out = mpq(T) if T is not None else -v + DEFAULT_PREC
    d = a.d
    R = _ceil_key(T_out + v, d)  # relative keys 0..R-1
    inv0 = coeff_inverse(c0)
    g = {k - k0: c for k, c in a.coeffs.items()}
    b = [None] * max(R, 0)
    for r in range(R):
        if r == 0:
            b[0] = inv0
            continue
        acc = ZERO
        for j in range(1, r + 1):
            gj = g.get(j)
            if gj is not None and b[r - j]:
                acc = acc + gj * b[r - j]
        b[r] = -(acc * inv0) if acc else ZERO
    coeffs = {r - k0: b[r] for r in range(R) if b[r]}
    return TruncSeries(a.var, coeffs, T_out, d)


def _power_series_pow(g: Dict[int, object], alpha: mpq, R: int):
    """(1 + sum_{j>=1} g_j t^j)^alpha to t-degree R-1 (g_0 == 1)."""
    f = [ZERO] * max(R, 0)
    if R <= 0:
        return f
    f[0] = ONE
    for k in range(1, R):
        acc = ZERO
        for j in range(1, k + 1):
            gj = g.get(j)
            if gj is None or not f[k - j]:
                continue
            w = (alpha + 1) * j - k
            if w:
                acc = acc + gj * f[k - j] * w
        f[k] = acc * (ONE / k) if acc else ZERO
    return f


def puiseux_root(a: TruncSeries, n: int, T=None) -> TruncSeries:
    """The monic n-th root of a monic series."""
    if n < 1:
        raise ValueError("n must be positive")
    k0 = a.low_key()
    if k0 is None:
        raise ZeroLeadingTerm("no nonzero coefficient within truncation")
    if a.coeffs[k0] != 1:
        raise NotMonic("leading coefficient must be 1")
    if n == 1:
        return a
    e = mpq(k0, a.d)
    e_out = e / n
    if a.T is None and len(a.coeffs) == 1:
        return TruncSeries.monomial(a.var, e_out)
    rel = (a.T - e) if a.T is not None else None
    if rel is None:
        rel = mpq(T) - e_out if T is not None else mpq(DEFAULT_PREC)
    elif T is not None:
        rel = min(rel, mpq(T) - e_out)
    R = _ceil_key(rel, a.d)
    g = {k - k0: c for k, c in a.coeffs.items()}
    f = _power_series_pow(g, mpq(1, n), R)
    d = _lcm(a.d, e_out.denominator)
    f_mul = d // a.d
    s = int(e_out * d)
    coeffs = {s + r * f_mul: f[r] for r in range(R) if f[r]}
    return TruncSeries(a.var, coeffs, e_out + rel, d)


def ps_pow_rational(a: TruncSeries, alpha, T=None) -> TruncSeries:
    """a**alpha for monic a and rational alpha (root then integer power)."""
    alpha = mpq(alpha)
    r = puiseux_root(a, alpha.denominator, T=T) if alpha.denominator > 1 else a
    return r ** alpha.numerator


def ps_compose(outer: TruncSeries, inner: TruncSeries, T=None) -> TruncSeries:
    """Substitute ``inner`` for the variable of ``outer``."""
    low = inner.lowest_exponent()
    if low is None or low <= 0:
        raise NonPositiveValuation("inner series must have positive valuation")
    if not outer.coeffs:
        T_out = None if outer.T is None else outer.T * low
        return TruncSeries(inner.var, {}, T_out)
    root = inner
    if outer.d > 1:
        lead = inner.leading_coefficient()
        if lead != 1:
            raise NotMonic("ramified substitution needs a monic inner series")
    low_r = low / outer.d
    kmin, kmax = min(outer.coeffs), max(outer.coeffs)
    # target window
    tgt = None if outer.T is None else outer.T * low
    if T is not None:
        tgt = _min_T(tgt, mpq(T))
    monomial_inner = inner.T is None and len(inner.coeffs) == 1
    needs_bound = not monomial_inner and (kmin < 0 or (inner.T is None and outer.d > 1))
    if tgt is None and needs_bound:
        tgt = kmin * low_r + DEFAULT_PREC
    if outer.d > 1:
        root = puiseux_root(inner, outer.d, T=None if tgt is None else tgt + (kmax if kmax > 0 else 0) * low_r)
    powers: Dict[int, TruncSeries] = {}
    if kmax > 0:
        p = root
        powers[1] = p
        for k in range(2, kmax + 1):
            p = ps_mul(p, root)
            powers[k] = p
    if kmin < 0:
        m = -kmin
        t_inv = None if tgt is None else tgt + (m - 1) * low_r
        rinv = ps_inv(root, T=t_inv)
        p = rinv
        powers[-1] = p
        for k in range(2, m + 1):
            p = ps_mul(p, rinv)
            powers[-k] = p
    total = TruncSeries(inner.var, {}, tgt)
    for k, c in outer.coeffs.items():
        term = TruncSeries(inner.var, {0: c}) if k == 0 else powers[k].scale(c)
        total = total + term
    return total


# -- literal format ---------------------------------------------------------

_HEADER = re.compile(r"^(\w+)\s*=\s*(\S+)$")


def format_series(s: TruncSeries) -> str:
    T = "inf" if s.T is None else fmt_exponent(s.T)
    body = " ".join(f"{fmt_exponent(e)}:{_fmt_coeff(c)}" for e, c in s.terms())
    return f"var={s.var} d={s.d} T={T} ; {body}".rstrip()


def _fmt_coeff(c) -> str:
    from .jets import format_jet

    return format_jet(c)


def parse_series(text: str, line: int = 1, ring=None) -> TruncSeries:
    if ";" not in text:
        raise ParseError("series literal needs ';' after the header", line, 1)
    head, body = text.split(";", 1)
    fields = {}
    col = 1
    for tok in head.split():
        m = _HEADER.match(tok)
        if not m:
            raise ParseError(f"bad header token {tok!r}", line, text.find(tok) + 1)
        fields[m.group(1)] = (m.group(2), text.find(tok) + 1)
    for key in ("var",):
        if key not in fields:
            raise ParseError(f"missing {key}=", line, col)
    var = fields["var"][0]
    try:
        d = int(fields.get("d", ("1", 1))[0])
        if d < 1:
            raise ValueError
    except ValueError:
        raise ParseError("d must be a positive integer", line, fields.get("d", ("", 1))[1])
    Ttxt, Tcol = fields.get("T", ("inf", 1))
    try:
        T = None if Ttxt == "inf" else parse_rational(Ttxt)
    except ValueError:
        raise ParseError(f"bad truncation {Ttxt!r}", line, Tcol)
    terms: Dict[mpq, object] = {}
    offset = len(head) + 1
    for tok in _split_terms(body):
        pos = text.find(tok, offset) + 1
        e_txt, sep, c_txt = tok.partition(":")
        if not sep:
            raise ParseError(f"expected exponent:coefficient, got {tok!r}", line, pos)
        try:
            e = parse_rational(e_txt)
            if ring is not None:
                from .jets import parse_jet

                c = parse_jet(c_txt, ring)
            else:
                c = parse_rational(c_txt)
        except ValueError as exc:
            raise ParseError(str(exc), line, pos)
        if (e * d).denominator != 1:
            raise ParseError(f"exponent {e_txt} is not a multiple of 1/{d}", line, pos)
        if e in terms:
            terms[e] = terms[e] + c
        else:
            terms[e] = c
    coeffs = {int(e * d): c for e, c in terms.items()}
    if T is not None and any(e >= T for e, c in terms.items() if c):
        raise ParseError("coefficient at or beyond truncation bound", line, Tcol)
    s = TruncSeries(var, coeffs, T, d)
    return s


def _split_terms(body: str):
    """Split on whitespace, keeping bracketed jet literals together."""
    out, buf, depth = [], "", 0
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch.isspace() and depth == 0:
            if buf:
                out.append(buf)
            buf = ""
        else:
            buf += ch
    if buf:
        out.append(buf)
    return out
