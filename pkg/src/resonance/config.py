"""Reading and writing problem specs in a sectioned key-value text format.

Example::

    [problem]
    family = periodic_LL
    domain = circle
    modes = 16
    n = 1

    [nonlinearity.g]
    name = arctan          ; amp, slope, shift scale the registry map
    limits = -1.5707963267948966, 1.5707963267948966

    [forcing.f]
    cos1 = 1.0             ; raw amplitude of cos t

Forcing keys are mode labels: ``k`` on the interval, ``j,l`` on the square
and ``const``, ``cosN``, ``sinN`` on the circle.  Two-argument
nonlinearities (systems) take ``arg`` (u or v), an optional ``coupling``
map with ``coupling_amp``, ``coupling_slope``, ``coupling_shift``, and
``threshold_arg``.
"""

from __future__ import annotations

import configparser
import re
from pathlib import Path

import numpy as np

from .errors import SpecificationError
from .nonlinearity import Nonlinearity, lift, make_nonlinearity
from .problem import SYSTEM_FAMILIES, ForcingSpec, ProblemSpec

PROBLEM_KEYS = ("family", "domain", "modes", "grid", "k", "m", "n", "mu", "matrix", "thresholds_frame", "name")
NONLINEARITY_KEYS = (
    "name", "amp", "slope", "shift", "bound", "limits", "thresholds", "antiderivative_limits",
    "sign_property", "arg", "coupling", "coupling_amp", "coupling_slope", "coupling_shift", "threshold_arg",
)
_TRIG_KEY = re.compile(r"^(cos|sin)(\d+)$")
_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_OPTION = re.compile(r"^\s*([^=;#\s][^=]*?)\s*=")


class _Lines:
    """Line numbers of sections and keys, found by scanning the raw text."""

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = None
        for no, line in enumerate(text.splitlines(), start=1):
            m = _SECTION.match(line)
            if m:
                current = m.group(1).strip()
                self.sections.setdefault(current, no)
                continue
            m = _OPTION.match(line)
            if m and current is not None:
                self.keys.setdefault((current, m.group(1).strip().lower()), no)

    def find(self, section: str, key: str | None = None):
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def _floats(text: str, count: int | None, key: str) -> tuple:
    try:
        vals = tuple(float(t) for t in text.replace("[", " ").replace("]", " ").replace(",", " ").split())
    except ValueError:
        raise SpecificationError(f"{key} must be a list of numbers", key=key) from None
    if count is not None and len(vals) != count:
        raise SpecificationError(f"{key} needs {count} numbers, got {len(vals)}", key=key)
    return vals


def _number(text: str, key: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise SpecificationError(f"{key} must be a number, got {text!r}", key=key) from None


def _bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise SpecificationError(f"{key} must be true or false", key=key)


def _index(text: str, key: str):
    if "," in text:
        parts = _floats(text, 2, key)
        if any(p != int(p) for p in parts):
            raise SpecificationError(f"{key} must be integers", key=key)
        return tuple(int(p) for p in parts)
    return _number(text, key, int)


def _forcing_label(key: str, domain: str):
    if domain == "circle":
        if key == "const":
            return ("const", 0)
        m = _TRIG_KEY.match(key)
        if not m:
            raise SpecificationError(f"circle forcing keys are const, cosN, sinN; got {key!r}", key=key)
        return (m.group(1), int(m.group(2)))
    return _index(key, key)


def _nonlinearity(sec, arity: int) -> Nonlinearity:
    unknown = [k for k in sec if k not in NONLINEARITY_KEYS]
    if unknown:
        raise SpecificationError(f"unknown key {unknown[0]!r}", key=unknown[0])
    if "name" not in sec:
        raise SpecificationError("nonlinearity needs a name", key="name")
    scale = {k: _number(sec[k], k) for k in ("amp", "slope", "shift") if k in sec}
    meta = {}
    if "bound" in sec:
        meta["bound"] = _number(sec["bound"], "bound")
    for key, n in (("limits", 2), ("thresholds", 4), ("antiderivative_limits", 2)):
        if key in sec:
            meta[key] = _floats(sec[key], n, key)
    if "sign_property" in sec:
        meta["sign_property"] = _bool(sec["sign_property"], "sign_property")
    if arity == 1:
        for key in ("arg", "coupling", "coupling_amp", "coupling_slope", "coupling_shift", "threshold_arg"):
            if key in sec:
                raise SpecificationError(f"{key} only applies to two-argument nonlinearities", key=key)
        return make_nonlinearity(sec["name"].strip(), **scale, **meta)
    for key in ("limits", "antiderivative_limits", "sign_property"):
        if key in meta:
            raise SpecificationError(f"{key} only applies to one-argument nonlinearities", key=key)
    base = make_nonlinearity(sec["name"].strip(), **scale)
    coupling = None
    if "coupling" in sec:
        cscale = {
            k: _number(sec[f"coupling_{k}"], f"coupling_{k}")
            for k in ("amp", "slope", "shift")
            if f"coupling_{k}" in sec
        }
        coupling = make_nonlinearity(sec["coupling"].strip(), **cscale)
    return lift(
        base,
        arg=sec.get("arg", "u").strip(),
        coupling=coupling,
        thresholds=meta.get("thresholds"),
        threshold_arg=sec["threshold_arg"].strip() if "threshold_arg" in sec else None,
        bound=meta.get("bound"),
    )


def parse_spec(text: str, source: str = "<string>") -> ProblemSpec:
    """Parse and validate a spec; errors carry the offending key and line."""
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=(";", "#"), inline_comment_prefixes=(";", "#"),
        interpolation=None, default_section="__defaults__",
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise SpecificationError(f"{source} must start with a [section] header", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise SpecificationError(f"cannot parse {source}", line=line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise SpecificationError(
            f"duplicate entry in {source}", key=getattr(exc, "option", None) or exc.section, line=exc.lineno
        ) from None
    lines = _Lines(text)

    section = "problem"
    key = None
    try:
        if "problem" not in parser:
            raise SpecificationError("missing [problem] section")
        p = parser["problem"]
        for key in p:
            if key not in PROBLEM_KEYS:
                raise SpecificationError(f"unknown key {key!r}", key=key)
        for key in ("family", "domain", "modes"):
            if key not in p:
                raise SpecificationError(f"missing required key {key!r}", key=key)
        key = None
        family = p["family"].strip()
        domain = p["domain"].strip()
        kw = dict(family=family, domain=domain)
        for key, conv in (
            ("modes", lambda s, k: _number(s, k, int)),
            ("grid", lambda s, k: _number(s, k, int)),
            ("n", lambda s, k: _number(s, k, int)),
            ("mu", _number),
            ("k", _index),
            ("m", _index),
        ):
            if key in p:
                kw["n_modes" if key == "modes" else "grid_size" if key == "grid" else key] = conv(p[key], key)
        key = "matrix"
        if "matrix" in p:
            kw["matrix"] = _floats(p["matrix"], 4, "matrix")
        key = None
        if "thresholds_frame" in p:
            kw["thresholds_frame"] = p["thresholds_frame"].strip()
        if "name" in p:
            kw["name"] = p["name"].strip()

        arity = 2 if family in SYSTEM_FAMILIES else 1
        nonlinearities, forcings = {}, {}
        for section in parser.sections():
            if section == "problem":
                continue
            kind, _, name = section.partition(".")
            key = None
            if kind == "nonlinearity" and name:
                nonlinearities[name] = _nonlinearity(parser[section], arity)
            elif kind == "forcing" and name:
                values = {}
                for key, raw in parser[section].items():
                    values[_forcing_label(key, domain)] = _number(raw, key)
                key = None
                forcings[name] = ForcingSpec.from_dict(values, trig=domain == "circle")
            else:
                raise SpecificationError(f"unknown section [{section}]")
        section = "problem"
        spec = ProblemSpec(nonlinearities=nonlinearities, forcings=forcings, **kw)
        return spec.validate()
    except SpecificationError as exc:
        k = exc.key if exc.key is not None else key
        raise SpecificationError(exc.message, key=k, line=_locate(lines, section, k) or exc.line) from None


def _locate(lines: _Lines, section: str, key):
    """Best line for an error raised while handling ``section``/``key``."""
    if key is None:
        return lines.find(section)
    key = str(key)
    if "." in key and lines.find(key) is not None:  # e.g. nonlinearity.g, forcing.f
        return lines.find(key)
    for sec in (section, "problem"):
        line = lines.keys.get((sec, key.lower()))
        if line is not None:
            return line
    return lines.find(section)


def load_spec(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecificationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(text, source=str(path))


# writing ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_list(vals) -> str:
    return ", ".join(_fmt(v) for v in vals)


def _fmt_index(idx) -> str:
    return ",".join(str(int(i)) for i in idx) if isinstance(idx, tuple) else str(int(idx))


def _forcing_lines(spec: ForcingSpec, domain: str) -> list[str]:
    if domain == "circle" and not spec.trig:
        # normalized circle coefficients become raw amplitudes
        spec = ForcingSpec.from_dict(
            {lab: v / _scale(lab) for lab, v in spec.coeffs}, spec.description, trig=True
        )
    out = []
    for label, value in spec.coeffs:
        if domain == "circle":
            key = "const" if label[0] == "const" else f"{label[0]}{label[1]}"
        else:
            key = _fmt_index(label)
        out.append(f"{key} = {_fmt(value)}")
    return out


def _scale(label):
    from .problem import _TRIG_SCALE

    return _TRIG_SCALE[label[0]]


def _nonlinearity_lines(nl: Nonlinearity) -> list[str]:
    p = nl.params
    out = [f"name = {p['name']}", f"amp = {_fmt(p['amp'])}", f"slope = {_fmt(p['slope'])}", f"shift = {_fmt(p['shift'])}"]
    out.append(f"bound = {_fmt(nl.bound)}")
    if nl.arity == 1:
        if nl.limits is not None:
            out.append(f"limits = {_fmt_list(nl.limits)}")
        if nl.antiderivative_limits is not None:
            out.append(f"antiderivative_limits = {_fmt_list(nl.antiderivative_limits)}")
        out.append(f"sign_property = {str(nl.sign_property).lower()}")
    else:
        out.append(f"arg = {p['arg']}")
        c = p.get("coupling")
        if c:
            out += [
                f"coupling = {c['name']}",
                f"coupling_amp = {_fmt(c['amp'])}",
                f"coupling_slope = {_fmt(c['slope'])}",
                f"coupling_shift = {_fmt(c['shift'])}",
            ]
        out.append(f"threshold_arg = {nl.threshold_arg}")
    if nl.thresholds is not None:
        out.append(f"thresholds = {_fmt_list(nl.thresholds)}")
    return out


def dump_spec(spec: ProblemSpec) -> str:
    """Text that :func:`parse_spec` reads back to an equal spec."""
    lines = ["[problem]", f"family = {spec.family}", f"domain = {spec.domain}", f"modes = {int(spec.n_modes)}"]
    if spec.grid_size:
        lines.append(f"grid = {int(spec.grid_size)}")
    for key in ("k", "m"):
        val = getattr(spec, key)
        if val is not None:
            lines.append(f"{key} = {_fmt_index(val)}")
    if spec.n is not None:
        lines.append(f"n = {int(spec.n)}")
    if spec.mu is not None:
        lines.append(f"mu = {_fmt(spec.mu)}")
    if spec.matrix is not None:
        lines.append(f"matrix = {_fmt_list(np.ravel(spec.matrix))}")
    if spec.thresholds_frame != "original":
        lines.append(f"thresholds_frame = {spec.thresholds_frame}")
    if spec.name:
        lines.append(f"name = {spec.name}")
    for name in sorted(spec.nonlinearities):
        lines += ["", f"[nonlinearity.{name}]"] + _nonlinearity_lines(spec.nonlinearities[name])
    for name in sorted(spec.forcings):
        lines += ["", f"[forcing.{name}]"] + _forcing_lines(spec.forcings[name], spec.domain)
    return "\n".join(lines) + "\n"
