"""Property suites behind ``prymkp verify``; deterministic given the seed."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from .algebraic import (
    compute_invariants,
    compute_stabilizer_heisenberg,
    compute_stabilizer_scalar,
    conjugate_to_ode,
    default_level,
)
from .bundle import emit_bundle, example_names, example_text, load_example, parse_bundle_text
from .errors import PrymKPError
from .flows import FlowDirection, birkhoff_factor, birkhoff_residual, flow_exponent, flow_point, lax_check
from .grassmann import base_point, format_frame
from .loop import TypeVector
from .pdo import format_pdo, pdo_act, pdo_mul, random_pdo, random_vector
from .sato import random_monic, sigma, sigma_direct, sigma_inverse

SUITES = ("roundtrip", "flows", "invariants", "commute", "all")


@dataclass
class Outcome:
    name: str
    passed: bool
    dump: str = ""


@dataclass
class SuiteReport:
    suite: str
    seed: int
    outcomes: List[Outcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def add(self, name: str, passed: bool, dump: str = "") -> None:
        self.outcomes.append(Outcome(name, passed, dump))

    def text(self) -> str:
        lines = [f"suite={self.suite} seed={self.seed}"]
        for o in self.outcomes:
            lines.append(f"{'pass' if o.passed else 'FAIL'} {o.name}")
            if not o.passed and o.dump:
                lines += ["  " + ln for ln in o.dump.rstrip("\n").splitlines()]
        n_fail = sum(not o.passed for o in self.outcomes)
        lines.append(f"{len(self.outcomes) - n_fail} passed, {n_fail} failed")
        return "\n".join(lines) + "\n"


def _guard(rep: SuiteReport, name: str, fn: Callable[[], Optional[str]]) -> None:
    """fn returns None on success or a counterexample dump."""
    try:
        dump = fn()
    except PrymKPError as exc:
        dump = f"{type(exc).__name__}: {exc}"
    rep.add(name, dump is None, dump or "")


def _same_terms(P, Q) -> bool:
    return P.terms.keys() == Q.terms.keys() and all(P.terms[k] == Q.terms[k] for k in P.terms)


def suite_roundtrip(rep: SuiteReport, rng: random.Random, sizes: Dict) -> None:
    ns = sizes.get("n") or [1, 2, 3]
    count = sizes.get("count", 6)
    floor, Dx = sizes.get("floor", -6), sizes.get("dx", 5)
    M = Dx - floor
    N = M - 1
    for k in range(count):
        n = ns[k % len(ns)]
        S = random_monic(rng, n, floor, Dx)

        def op_first(S=S, n=n):
            W = sigma(S, M, N)
            if not W.same_point(sigma_direct(S, M, N)):
                return "two sigma routes disagree\n" + format_pdo(S)
            S2 = sigma_inverse(W, Dx, floor)
            if not _same_terms(S, S2):
                return "S:\n" + format_pdo(S) + "\nsigma_inverse(sigma(S)):\n" + format_pdo(S2) + "\n"
            return None

        _guard(rep, f"sigma_inverse(sigma(S)) = S  #{k + 1} n={n}", op_first)
        S3 = random_monic(rng, n, floor, Dx)

        def frame_first(S3=S3, n=n):
            W = sigma(S3, M, N)
            W2 = sigma(sigma_inverse(W, Dx, floor), M, N)
            if not W.same_point(W2):
                return "W:\n" + format_frame(W) + "sigma(sigma_inverse(W)):\n" + format_frame(W2)
            return None

        _guard(rep, f"sigma(sigma_inverse(W)) = W  #{k + 1} n={n}", frame_first)
    for k in range(count):
        n = ns[k % len(ns)]
        P = random_pdo(rng, n, 2, -2, 3)
        Q = random_pdo(rng, n, 2, -2, 3)
        v = random_vector(rng, n)

        def module_law(P=P, Q=Q, v=v):
            lhs = pdo_act(P, pdo_act(Q, v))
            rhs = pdo_act(pdo_mul(P, Q), v)
            bad = [i for i, (a, b) in enumerate(zip(lhs, rhs)) if not a.equal_within(b)]
            return None if not bad else f"components {bad} differ\nP: {format_pdo(P)}\nQ: {format_pdo(Q)}\n"

        _guard(rep, f"rho module law #{k + 1} n={n}", module_law)
    for name in example_names():
        def emit_parse(name=name):
            txt = example_text(name)
            return None if emit_bundle(parse_bundle_text(txt, name)) == txt else "emitted text differs"

        _guard(rep, f"bundle emit(parse) = id  {name}", emit_parse)


def suite_flows(rep: SuiteReport, rng: random.Random, sizes: Dict) -> None:
    count = sizes.get("count", 4)
    K = sizes.get("jet", 2)
    cases = [(TypeVector.of(1), -3, 3), (TypeVector.of(2), -2, 2), (TypeVector.of(1, 1), -2, 2)]
    for k in range(count):
        tv, fl, dx = cases[k % len(cases)]
        S = random_monic(rng, tv.n, fl, dx)
        d = FlowDirection(rng.randint(1, tv.ell), rng.randint(1, 2 if tv.n == 1 else 1))

        def lax(S=S, d=d, tv=tv):
            res = lax_check(S, d, tv, K=1, floor=-3)
            return None if res.is_zero() else f"residual nonzero for {d.name}\n" + format_pdo(S)

        _guard(rep, f"Lax residual = 0  #{k + 1} type={tv} {d.name}", lax)

        def birk(S=S, d=d, tv=tv):
            B = birkhoff_factor(S, flow_exponent([d], K, tv), floor=-3)
            if not birkhoff_residual(B).is_zero():
                return "e S0^-1 - S(t)^-1 Y(t) nonzero\n" + format_pdo(S)
            for P in B.Y.comps.values():
                if any(m < 0 for m, _ in P.terms):
                    return "Y(t) has negative orders\n" + format_pdo(S)
            return None

        _guard(rep, f"Birkhoff factorization  #{k + 1} type={tv} {d.name}", birk)
    tv = TypeVector.of(1)
    W0 = base_point(1, 0, 8)
    for i in (1, 2, 3):
        def fixed(i=i):
            e = flow_exponent([FlowDirection(1, i)], K, tv)
            Wt = flow_point(e, W0)
            return None if Wt.same_point(W0) else format_frame(Wt)

        _guard(rep, f"base point fixed by t1_{i}", fixed)


def _rigidity(ex) -> Optional[str]:
    dirs = [FlowDirection(j + 1, i) for j in range(ex.tv.ell) for i in (1, 2)]
    Wt = flow_point(flow_exponent(dirs, 2, ex.tv), ex.W, ex.y)
    L = default_level(ex.W, ex.tv)
    L0 = max(L // max(ex.tv.parts), 2)
    a, b = (compute_stabilizer_heisenberg(X, ex.tv, ex.y, L).table for X in (ex.W, Wt))
    a0, b0 = (compute_stabilizer_scalar(X, ex.y, L0).table for X in (ex.W, Wt))
    if a != b:
        return f"A_n tables differ: {a} vs {b}"
    if a0 != b0:
        return f"A_0 tables differ: {a0} vs {b0}"
    return None


def suite_invariants(rep: SuiteReport, rng: random.Random, sizes: Dict) -> None:
    for name in example_names():
        ex = load_example(name)

        def inv(ex=ex):
            got, _, _ = compute_invariants(ex.W, ex.tv, ex.y)
            want = " ".join(f"{k}={v}" for k, v in ex.expected.items() if k != "origin")
            return None if got.line() == want else f"expected {want}\ngot      {got.line()}"

        _guard(rep, f"invariants match expected  {name}", inv)
        _guard(rep, f"stabilizers rigid under flows  {name}", lambda ex=ex: _rigidity(ex))


def suite_commute(rep: SuiteReport, rng: random.Random, sizes: Dict) -> None:
    floor = sizes.get("floor", -4)
    for name in example_names():
        ex = load_example(name)
        if not ex.An:
            continue

        def comm(ex=ex):
            cp = conjugate_to_ode(ex.A0, ex.An, ex.W, ex.tv, ex.y, floor)
            return None if cp.report.passed else cp.report.text()

        _guard(rep, f"commuting operators  {name}", comm)


_RUNNERS = {
    "roundtrip": suite_roundtrip,
    "flows": suite_flows,
    "invariants": suite_invariants,
    "commute": suite_commute,
}


def run_suite(name: str, seed: int = 1, sizes: Optional[Dict] = None) -> SuiteReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    sizes = dict(sizes or {})
    rep = SuiteReport(name, seed)
    names: Sequence[str] = list(_RUNNERS) if name == "all" else [name]
    for nm in names:
        # one generator per suite so a suite's output is independent of the others
        _RUNNERS[nm](rep, random.Random(f"{seed}:{nm}"), sizes)
    return rep
