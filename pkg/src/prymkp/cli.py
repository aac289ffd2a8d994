"""Batch command-line driver.  Exit codes: 0 pass, 1 property failure, 2 usage or input error."""

from __future__ import annotations

import argparse
import random
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from .errors import ParseError, PrymKPError, ValidationError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
    g.add_argument("--floor", type=int, default=None, help="lowest operator order kept")
    g.add_argument("--dx", type=int, default=None, help="x-degree bound for recovered operators")
    g.add_argument("--depth", type=int, default=None, help="frame depth M")
    g.add_argument("--jet", type=int, default=2, help="jet degree K for flows (default 2)")
    g.add_argument("--format", choices=["text"], default="text", help="output format")
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


# -- subcommands ------------------------------------------------------------


def cmd_sato(args, out) -> int:
    from .grassmann import format_frame, parse_frame
    from .pdo import format_pdo, parse_pdo
    from .sato import random_monic, sigma, sigma_inverse

    floor = args.floor if args.floor is not None else -6
    Dx = args.dx if args.dx is not None else 5
    if args.action == "to-operator":
        W = parse_frame(_read(args.input))
        S = sigma_inverse(W, Dx, floor)
        out.write(format_pdo(S, floor, Dx) + "\n")
        return EXIT_OK
    if args.action == "to-frame":
        S = parse_pdo(_read(args.input).strip())
        M = args.depth if args.depth is not None else max(0, -(S.bottom() or 0))
        out.write(format_frame(sigma(S, M, args.tail)))
        return EXIT_OK
    rng = random.Random(args.seed)
    M = Dx - floor
    ok = True
    for k in range(args.count):
        S = random_monic(rng, args.n, floor, Dx)
        S2 = sigma_inverse(sigma(S, M, M - 1), Dx, floor)
        same = S.terms.keys() == S2.terms.keys() and all(S.terms[key] == S2.terms[key] for key in S.terms)
        out.write(f"{'pass' if same else 'FAIL'} roundtrip #{k + 1} n={args.n} floor={floor} dx={Dx}\n")
        if not same:
            out.write(format_pdo(S) + "\n")
        ok &= same
    return EXIT_OK if ok else EXIT_FAIL


def cmd_flow(args, out) -> int:
    from .bundle import resolve
    from .flows import flow_exponent, flow_point, parse_dirs
    from .grassmann import format_frame, parse_frame
    from .loop import TypeVector, parse_type
    from .series import TruncSeries, parse_series

    if args.bundle:
        ex = resolve(args.bundle)
        W, tv, y = ex.W, ex.tv, ex.y
    elif args.frame:
        W = parse_frame(_read(args.frame))
        try:
            tv = parse_type(args.type) if args.type else TypeVector.of(*([1] * W.n))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        y = parse_series(_read(args.y).strip()) if args.y else TruncSeries("z", {1: 1})
        if tv.n != W.n:
            raise ValidationError(f"type {tv} does not match frame size n={W.n}")
    else:
        raise ValidationError("flow needs a bundle or --frame")
    try:
        dirs = parse_dirs(args.dirs)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    e = flow_exponent(dirs, args.jet, tv, traceless=args.traceless)
    text = format_frame(flow_point(e, W, y))
    if args.emit:
        Path(args.emit).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_invariants(args, out) -> int:
    from .algebraic import compute_invariants
    from .bundle import resolve

    ex = resolve(args.bundle)
    inv, _, _ = compute_invariants(ex.W, ex.tv, ex.y, args.levels)
    out.write(inv.line() + "\n")
    if args.check and ex.expected:
        want = " ".join(f"{k}={v}" for k, v in ex.expected.items() if k != "origin")
        if want != inv.line():
            out.write(f"expected {want}\n")
            return EXIT_FAIL
    return EXIT_OK if inv.stabilized else EXIT_FAIL


def cmd_commute(args, out) -> int:
    from .algebraic import conjugate_to_ode
    from .bundle import resolve
    from .pdo import format_pdo

    ex = resolve(args.bundle)
    if not ex.An:
        raise ValidationError("bundle has no [An-generators]")
    floor = args.floor if args.floor is not None else -4
    Dx = args.dx if args.dx is not None else 4
    cp = conjugate_to_ode(ex.A0, ex.An, ex.W, ex.tv, ex.y, floor)
    out.write(cp.report.text())
    out.write(f"# {cp.note}\n")
    for i, B in enumerate(cp.B0, start=1):
        out.write(f"B0[{i}] {format_pdo(B.restrict(0, Dx))}\n")
    for i, B in enumerate(cp.B, start=1):
        out.write(f"B[{i}] {format_pdo(B.restrict(0, Dx))}\n")
    return EXIT_OK if cp.report.passed else EXIT_FAIL


def cmd_spectral(args, out) -> int:
    from .algebraic import spectral_cover
    from .loop import format_heisenberg
    from .series import parse_series

    coeffs = []
    for no, ln in enumerate(_read(args.input).splitlines(), start=1):
        if ln.strip() and not ln.lstrip().startswith("#"):
            coeffs.append(parse_series(ln.strip(), no))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h, tv = spectral_cover(coeffs, args.prec)
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    out.write(f"type={tv}\n{format_heisenberg(h)}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .suites import run_suite

    sizes = {"count": args.count, "jet": args.jet}
    if args.n is not None:
        sizes["n"] = [args.n]
    if args.floor is not None:
        sizes["floor"] = args.floor
    if args.dx is not None:
        sizes["dx"] = args.dx
    rep = run_suite(args.suite, args.seed, sizes)
    out.write(rep.text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_example(args, out) -> int:
    from .bundle import example_names, example_text

    if args.action == "list":
        for name in example_names():
            out.write(name + "\n")
        return EXIT_OK
    if not args.name:
        raise ValidationError("example emit needs a name")
    out.write(example_text(args.name))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = _Parser(prog="prymkp", description="Exact multicomponent KP, Sato correspondence and Prym data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sato", parents=[common], help="operator <-> frame correspondence")
    s.add_argument("action", choices=["to-operator", "to-frame", "roundtrip"])
    s.add_argument("input", nargs="?", help="frame file (to-operator) or operator file (to-frame)")
    s.add_argument("--tail", type=int, default=10, help="tail length N for to-frame")
    s.add_argument("--n", type=int, default=2, help="matrix size for roundtrip")
    s.add_argument("--count", type=int, default=5, help="instances for roundtrip")
    s.set_defaults(func=cmd_sato)

    f = sub.add_parser("flow", parents=[common], help="flow a bundle's point to jet order K")
    f.add_argument("bundle", nargs="?", help="bundle file or shipped example name")
    f.add_argument("--frame", help="frame file (instead of a bundle)")
    f.add_argument("--type", help="type vector for --frame, e.g. 2,1")
    f.add_argument("--y", help="file holding y as a series literal in z (default y = z)")
    f.add_argument("--emit", help="write the flowed frame here instead of stdout")
    f.add_argument("--dirs", default="1:1", help="directions block:exponent, comma separated")
    f.add_argument("--traceless", action="store_true", help="project onto traceless directions")
    f.set_defaults(func=cmd_flow)

    i = sub.add_parser("invariants", parents=[common], help="genera, Prym dimension, type, rank, index")
    i.add_argument("bundle", help="bundle file or shipped example name")
    i.add_argument("--levels", type=int, default=None, help="filtration levels to solve")
    i.add_argument("--check", action="store_true", help="compare with the bundle's [expected] line")
    i.set_defaults(func=cmd_invariants)

    c = sub.add_parser("commute", parents=[common], help="commuting matrix differential operators")
    c.add_argument("bundle", help="bundle file or shipped example name")
    c.set_defaults(func=cmd_commute)

    sp = sub.add_parser("spectral", parents=[common], help="Puiseux branches of a spectral polynomial")
    sp.add_argument("input", help="file with s_1 .. s_m, one series literal in y per line")
    sp.add_argument("--prec", type=int, default=6, help="precision in powers of y")
    sp.set_defaults(func=cmd_spectral)

    v = sub.add_parser("verify", parents=[common], help="run a property suite")
    v.add_argument("suite", choices=["roundtrip", "flows", "invariants", "commute", "all"])
    v.add_argument("--n", type=int, default=None, help="restrict random instances to this size")
    v.add_argument("--count", type=int, default=4, help="random instances per property")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("example", parents=[common], help="shipped example bundles")
    e.add_argument("action", choices=["list", "emit"])
    e.add_argument("name", nargs="?")
    e.set_defaults(func=cmd_example)
    return p


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "sato" and args.action != "roundtrip" and not args.input:
        sys.stderr.write(f"prymkp: error: sato {args.action} needs an input file\n")
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except (ParseError, ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except PrymKPError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
