"""Polynomials in flow times truncated at a total degree (nilpotent jets)."""

from __future__ import annotations

import re
from itertools import product as _product
from typing import Dict, Iterable, Tuple

from gmpy2 import mpq

from .rational import ONE, ZERO, fmt_rational, parse_rational

Monomial = Tuple[int, ...]


class JetRing:
    """Q[t_1..t_s] / (monomials of total degree > K)."""

    def __init__(self, names: Iterable[str], K: int):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate jet variable")
        if K < 0:
            raise ValueError("jet degree must be >= 0")
        self.K = K
        self.zero_mono = (0,) * len(self.names)

    def __eq__(self, other):
        return isinstance(other, JetRing) and self.names == other.names and self.K == other.K

    def __hash__(self):
        return hash((self.names, self.K))

    def __repr__(self):
        return f"JetRing({self.names}, K={self.K})"

    def const(self, c) -> "JetScalar":
        c = mpq(c)
        return JetScalar(self, {self.zero_mono: c} if c else {})

    def var(self, name: str) -> "JetScalar":
        i = self.names.index(name)
        mono = tuple(1 if k == i else 0 for k in range(len(self.names)))
        if self.K < 1:
            return JetScalar(self, {})
        return JetScalar(self, {mono: ONE})

    def monomials(self):
        """All monomials of degree <= K, graded then lexicographic."""
        out = [m for m in _product(range(self.K + 1), repeat=len(self.names)) if sum(m) <= self.K]
        out.sort(key=lambda m: (sum(m), tuple(-x for x in m)))
        return out

    def mono_str(self, mono: Monomial) -> str:
        parts = []
        for name, p in zip(self.names, mono):
            if p == 1:
                parts.append(name)
            elif p > 1:
                parts.append(f"{name}^{p}")
        return "*".join(parts)


def _mono_add(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


class JetScalar:
    __slots__ = ("ring", "terms")

    def __init__(self, ring: JetRing, terms: Dict[Monomial, mpq]):
        self.ring = ring
        self.terms = terms

    # -- helpers
    def _coerce(self, other):
        if isinstance(other, JetScalar):
            if other.ring != self.ring:
                raise ValueError("jets from different rings")
            return other
        return self.ring.const(other)

    def const(self) -> mpq:
        return self.terms.get(self.ring.zero_mono, ZERO)

    def is_unit(self) -> bool:
        return self.const() != 0

    def coeff(self, mono: Monomial) -> mpq:
        return self.terms.get(tuple(mono), ZERO)

    # -- arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, ZERO) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return JetScalar(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return JetScalar(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, JetScalar):
            other = mpq(other)
            if not other:
                return JetScalar(self.ring, {})
            return JetScalar(self.ring, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        K = self.ring.K
        out: Dict[Monomial, mpq] = {}
        for m1, c1 in self.terms.items():
            d1 = sum(m1)
            for m2, c2 in other.terms.items():
                if d1 + sum(m2) > K:
                    continue
                m = _mono_add(m1, m2)
                v = out.get(m, ZERO) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return JetScalar(self.ring, out)

    __rmul__ = __mul__

    def inverse(self) -> "JetScalar":
        c0 = self.const()
        if not c0:
            raise ZeroDivisionError("jet with zero constant term is not invertible")
        inv0 = 1 / c0
        nil = self * inv0 - 1
        out = self.ring.const(1)
        power = self.ring.const(1)
        for _ in range(self.ring.K):
            power = power * (-nil)
            out = out + power
        return out * inv0

    def __truediv__(self, other):
        if isinstance(other, JetScalar):
            return self * other.inverse()
        return self * (1 / mpq(other))

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.ring.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, JetScalar):
            if other.ring != self.ring:
                return False
            return self.terms == other.terms
        try:
            other = mpq(other)
        except TypeError:
            return NotImplemented
        if not other:
            return not self.terms
        return self.terms == {self.ring.zero_mono: other}

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __bool__(self):
        return bool(self.terms)

    __hash__ = None

    def derivative(self, name: str) -> "JetScalar":
        i = self.ring.names.index(name)
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = c * m[i]
        return JetScalar(self.ring, out)

    def truncate(self, K: int) -> "JetScalar":
        return JetScalar(self.ring, {m: c for m, c in self.terms.items() if sum(m) <= K})

    def substitute_zero(self) -> mpq:
        return self.const()

    def __repr__(self):
        return f"JetScalar({format_jet(self)})"


def format_jet(j) -> str:
    if not isinstance(j, JetScalar):
        return fmt_rational(j)
    if not j.terms:
        return "0/1"
    monos = [m for m in j.ring.monomials() if m in j.terms]
    parts = []
    for m in monos:
        c = fmt_rational(j.terms[m])
        s = j.ring.mono_str(m)
        parts.append(f"{c}*{s}" if s else c)
    return "[" + " + ".join(parts) + "]"


_TERM = re.compile(r"^\s*([+-]?\d+(?:/\d+)?)\s*(?:\*\s*(.+))?$")


def parse_jet(text: str, ring: JetRing):
    """Parse ``[c + c*t1_1^2*t2_1 + ...]`` or a plain rational."""
    text = text.strip()
    if not text.startswith("["):
        return parse_rational(text)
    if not text.endswith("]"):
        raise ValueError("unterminated jet literal")
    body = text[1:-1]
    out: Dict[Monomial, mpq] = {}
    for piece in body.split(" + "):
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"bad jet term {piece!r}")
        c = parse_rational(m.group(1))
        mono = [0] * len(ring.names)
        if m.group(2):
            for fac in m.group(2).split("*"):
                fac = fac.strip()
                name, _, p = fac.partition("^")
                if name not in ring.names:
                    raise ValueError(f"unknown jet variable {name!r}")
                mono[ring.names.index(name)] += int(p) if p else 1
        key = tuple(mono)
        if sum(key) > ring.K:
            continue
        v = out.get(key, ZERO) + c
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return JetScalar(ring, out)


def is_zero(c) -> bool:
    return not c


def is_unit(c) -> bool:
    if isinstance(c, JetScalar):
        return c.is_unit()
    return c != 0


def inverse(c):
    if isinstance(c, JetScalar):
        return c.inverse()
    return 1 / mpq(c)


def const_part(c) -> mpq:
    if isinstance(c, JetScalar):
        return c.const()
    return mpq(c)


def jet_coefficients(c):
    """Flatten a coefficient into {monomial-or-None: rational}."""
    if isinstance(c, JetScalar):
        return dict(c.terms)
    return {None: mpq(c)} if c else {}
