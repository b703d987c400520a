"""Plain-text model files and bundled presets.

A file holds one section::

    [markov]
    p = 2
    s = 1
    Q = 2/3,1/3; 1/3,2/3

    [quasi]
    p = 2
    hidden = 1/2,1/2,0; 0,0,1; 1/2,1/2,0
    psi = 0,1,1
    left = 0
    right = 0

    [irdi]
    alpha = 0.8
    nmax = 24

    [bernoulli]
    p = 2
    probs = 1/2,1/2

One ``key = value`` per line; ``#`` starts a comment.  Matrices list rows
separated by ``;`` and entries by ``,``.  Entries may be decimals or
fractions.  ``pi`` is optional in ``[markov]`` and ``[quasi]``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

import numpy as np

from .irdi import IrdiMeasure
from .markov import (
    MarkovChain,
    MarkovMeasure,
    QuasiMarkovMeasure,
    bernoulli,
    even_shift,
    markov,
    point_mass_zero,
)

_SECTION = re.compile(r"^\s*\[(\w+)\]\s*$")
_PAIR = re.compile(r"^(\w+)\s*=\s*(.+)$")

KEYS = {
    "markov": {"p", "s", "Q", "pi", "name"},
    "quasi": {"p", "s", "hidden", "pi", "psi", "left", "right", "name", "cap"},
    "irdi": {"alpha", "nmax", "name"},
    "bernoulli": {"p", "s", "probs"},
}


class ModelFormatError(ValueError):
    pass


def _number(tok: str) -> float:
    try:
        return float(Fraction(tok.strip()))
    except (ValueError, ZeroDivisionError):
        raise ModelFormatError(f"not a number: {tok!r}") from None


def _vector(text: str) -> list[float]:
    return [_number(t) for t in text.split(",") if t.strip()]


def _matrix(text: str) -> list[list[float]]:
    return [_vector(row) for row in text.split(";") if row.strip()]


def _int(fields: dict[str, str], key: str, default: int) -> int:
    if key not in fields:
        return default
    try:
        return int(fields[key])
    except ValueError:
        raise ModelFormatError(f"{key} must be an integer, got {fields[key]!r}") from None


def parse_model(text: str):
    section = None
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            if section is not None:
                raise ModelFormatError(f"line {lineno}: only one section per model file")
            section = m.group(1).lower()
            if section not in KEYS:
                raise ModelFormatError(f"line {lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise ModelFormatError(f"line {lineno}: key outside a section")
        pm = _PAIR.match(line)
        if pm is None:
            raise ModelFormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        key = pm.group(1)
        if key not in KEYS[section]:
            raise ModelFormatError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if key in fields:
            raise ModelFormatError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = pm.group(2).strip()
    if section is None:
        raise ModelFormatError("no [section] header found")
    try:
        return _build(section, fields)
    except ModelFormatError:
        raise
    except (ValueError, KeyError) as exc:
        raise ModelFormatError(f"[{section}]: {exc}") from None


def _build(section: str, f: dict[str, str]):
    if section == "irdi":
        return IrdiMeasure(_number(f.get("alpha", "0.8")), _int(f, "nmax", 24), f.get("name", "irdi"))
    p, s = _int(f, "p", 2), _int(f, "s", 1)
    if section == "bernoulli":
        return bernoulli(_vector(f["probs"]) if "probs" in f else None, p, s)
    pi = _vector(f["pi"]) if "pi" in f else None
    if section == "markov":
        if "Q" not in f:
            raise ModelFormatError("[markov] needs Q")
        return markov(_matrix(f["Q"]), p, s, pi, f.get("name", "markov"))
    if "hidden" not in f or "psi" not in f:
        raise ModelFormatError("[quasi] needs hidden and psi")
    psi = tuple(int(x) for x in f["psi"].split(",") if x.strip())
    return QuasiMarkovMeasure(
        p,
        s,
        MarkovChain.build(_matrix(f["hidden"]), pi),
        psi,
        _int(f, "left", 0),
        _int(f, "right", 0),
        f.get("name", "quasi"),
        _int(f, "cap", 200_000),
    )


def _fmt_vec(v) -> str:
    return ",".join(repr(float(x)) for x in v)


def _fmt_mat(M) -> str:
    return ";".join(_fmt_vec(r) for r in np.asarray(M))


def format_model(mu) -> str:
    """Text that :func:`parse_model` reads back to an equal model."""
    if isinstance(mu, IrdiMeasure):
        return f"[irdi]\nalpha = {mu.alpha!r}\nnmax = {mu.n_max}\nname = {mu.name}\n"
    if isinstance(mu, MarkovMeasure):
        return (
            f"[markov]\np = {mu.p}\ns = {mu.s}\nQ = {_fmt_mat(mu.Q)}\n"
            f"pi = {_fmt_vec(mu.pi)}\nname = {mu.name}\n"
        )
    if isinstance(mu, QuasiMarkovMeasure):
        return (
            f"[quasi]\np = {mu.p}\ns = {mu.s}\nhidden = {_fmt_mat(mu.hidden.Q)}\n"
            f"pi = {_fmt_vec(mu.hidden.pi)}\npsi = {','.join(map(str, mu.psi))}\n"
            f"left = {mu.left}\nright = {mu.right}\nname = {mu.name}\ncap = {mu.state_cap}\n"
        )
    raise TypeError(f"cannot format {type(mu).__name__}")


def mrf_demo_chain() -> MarkovMeasure:
    """Symmetric two-state chain with flip probability 1/3 (locally free)."""
    return markov([[2 / 3, 1 / 3], [1 / 3, 2 / 3]], 2, 1, name="mrf-demo")


PRESETS = ("even-shift", "bernoulli", "point-mass", "mrf-demo", "irdi")


def preset(name: str, p: int = 2, s: int = 1, alpha: float = 0.8, n_max: int = 24):
    if name == "even-shift":
        return even_shift()
    if name == "bernoulli":
        return bernoulli(None, p, s)
    if name == "point-mass":
        return point_mass_zero(p, s)
    if name == "mrf-demo":
        return mrf_demo_chain()
    if name == "irdi":
        return IrdiMeasure(alpha, n_max)
    raise ModelFormatError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def load_model(ref: str, p: int = 2, s: int = 1):
    """A preset name, ``preset:<name>``, or a path to a model file."""
    name = ref[len("preset:") :] if ref.startswith("preset:") else ref
    if name in PRESETS:
        return preset(name, p, s)
    path = Path(ref)
    if not path.is_file():
        raise ModelFormatError(f"{ref!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    return parse_model(path.read_text())
