"""Algebraic-data bundle files and the shipped example library.

A bundle is a sequence of ``[section]`` headers, each followed by lines in
the literal formats of the series, loop and frame modules::

    [name]          one token
    [y]             series literal in z
    [type]          type vector, e.g. (2) or (1,1)
    [A0-generators] one series literal in y per line
    [An-generators] one Heisenberg literal per line
    [frame]         frame file body
    [expected]      key=value tokens (invariants line plus origin)

Blank lines and lines starting with '#' are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, ValidationError
from .grassmann import Frame, format_frame, parse_frame
from .loop import HeisenbergElement, TypeVector, format_heisenberg, parse_heisenberg, parse_type
from .series import TruncSeries, format_series, parse_series

SECTIONS = ("name", "y", "type", "A0-generators", "An-generators", "frame", "expected")


@dataclass
class ExampleDescriptor:
    name: str
    tv: TypeVector
    y: TruncSeries
    W: Frame
    A0: List[TruncSeries] = field(default_factory=list)
    An: List[HeisenbergElement] = field(default_factory=list)
    expected: Dict[str, str] = field(default_factory=dict)

    def expected_ints(self) -> Dict[str, int]:
        return {k: int(v) for k, v in self.expected.items() if k in ("g0", "gn", "prym", "rank", "index")}


def _split_sections(text: str) -> Dict[str, Tuple[int, List[Tuple[int, str]]]]:
    out: Dict[str, Tuple[int, List[Tuple[int, str]]]] = {}
    cur: Optional[str] = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {line!r}", no, 1)
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", no, 2)
            if name in out:
                raise ParseError(f"duplicate section [{name}]", no, 2)
            out[name] = (no, [])
            cur = name
            continue
        if cur is None:
            raise ParseError("content before the first section header", no, 1)
        out[cur][1].append((no, raw.rstrip()))
    return out


def parse_bundle_text(text: str, default_name: str = "bundle") -> ExampleDescriptor:
    secs = _split_sections(text)
    if "frame" not in secs:
        raise ValidationError("bundle needs a [frame] section")
    name = default_name
    if "name" in secs:
        lines = secs["name"][1]
        if len(lines) != 1 or len(lines[0][1].split()) != 1:
            raise ParseError("[name] takes a single token", secs["name"][0], 1)
        name = lines[0][1].strip()
    fno, flines = secs["frame"]
    try:
        W = parse_frame("\n".join(ln for _, ln in flines))
    except ParseError as exc:
        # map the line inside the section back to the file
        line = flines[exc.line - 1][0] if 1 <= exc.line <= len(flines) else fno
        raise ParseError(exc.reason, line, exc.column) from None
    if "y" in secs:
        ylines = secs["y"][1]
        if len(ylines) != 1:
            raise ParseError("[y] takes one series literal", secs["y"][0], 1)
        y = parse_series(ylines[0][1].strip(), ylines[0][0])
    else:
        y = TruncSeries("z", {1: 1})
    if y.var != "z":
        raise ValidationError("[y] must be a series in z")
    o = y.lowest_exponent()
    if o is None or o < 1 or o.denominator != 1 or y.leading_coefficient() != 1:
        raise ValidationError("[y] must be monic of positive integral order in z")
    if "type" in secs:
        tlines = secs["type"][1]
        if len(tlines) != 1:
            raise ParseError("[type] takes one type vector", secs["type"][0], 1)
        try:
            tv = parse_type(tlines[0][1])
        except ValueError as exc:
            raise ParseError(str(exc), tlines[0][0], 1)
    else:
        tv = TypeVector.of(*([1] * W.n))
    if tv.n != W.n:
        raise ValidationError(f"type {tv} has size {tv.n} but the frame has n={W.n}")
    A0 = []
    for no, ln in secs.get("A0-generators", (0, []))[1]:
        a = parse_series(ln.strip(), no)
        if a.var != "y" or a.d != 1:
            raise ValidationError(f"line {no}: A0 generators are series in y with integral exponents")
        A0.append(a)
    An = []
    for no, ln in secs.get("An-generators", (0, []))[1]:
        h = parse_heisenberg(ln.strip(), no)
        if h.tv != tv:
            raise ValidationError(f"line {no}: generator type {h.tv} differs from [type] {tv}")
        An.append(h)
    expected: Dict[str, str] = {}
    for no, ln in secs.get("expected", (0, []))[1]:
        for tok in ln.split():
            k, sep, v = tok.partition("=")
            if not sep or not k:
                raise ParseError(f"expected key=value, got {tok!r}", no, ln.find(tok) + 1)
            expected[k] = v
    return ExampleDescriptor(name, tv, y, W, A0, An, expected)


def parse_bundle(path) -> ExampleDescriptor:
    p = Path(path)
    return parse_bundle_text(p.read_text(), p.name.split(".")[0])


def emit_bundle(ex: ExampleDescriptor) -> str:
    out = ["[name]", ex.name, "[y]", format_series(ex.y), "[type]", str(ex.tv)]
    if ex.A0:
        out.append("[A0-generators]")
        out += [format_series(a) for a in ex.A0]
    if ex.An:
        out.append("[An-generators]")
        out += [format_heisenberg(h) for h in ex.An]
    out.append("[frame]")
    out.append(format_frame(ex.W).rstrip("\n"))
    if ex.expected:
        out.append("[expected]")
        out.append(" ".join(f"{k}={v}" for k, v in ex.expected.items()))
    return "\n".join(out) + "\n"


# -- shipped examples ----------------------------------------------------------


def _data_dir():
    return resources.files("prymkp") / "data"


def example_names() -> List[str]:
    names = []
    for p in _data_dir().iterdir():
        if p.name.endswith(".bundle"):
            names.append(p.name[: -len(".bundle")])
    return sorted(names)


def example_text(name: str) -> str:
    p = _data_dir() / f"{name}.bundle"
    if not p.is_file():
        raise ValidationError(f"no shipped example named {name!r}")
    return p.read_text()


def load_example(name: str) -> ExampleDescriptor:
    return parse_bundle_text(example_text(name), name)


def resolve(source: str) -> ExampleDescriptor:
    """A path to a bundle file or the name of a shipped example."""
    p = Path(source)
    if p.is_file():
        return parse_bundle(p)
    return load_example(source)
