"""Characters of ((Z/p)^s)^Z with finite support.

A character is stored as a map ``site -> u`` with ``u`` a nonzero vector in
``(Z/p)^s`` and evaluates to ``exp(2 pi i sum_k u_k . a_k / p)``.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .lca import LcaPolynomial, Window, s_rank as _s_rank
from .lucas import check_prime, lucas_binomial, lucas_set


class TrivialCharacterError(ValueError):
    """Raised when a quantity is undefined for the trivial character."""


Vector = tuple[int, ...]


@dataclass(frozen=True)
class Character:
    p: int
    s: int
    freqs: tuple[tuple[int, Vector], ...]

    @classmethod
    def from_map(cls, freqs: Mapping[int, Iterable[int] | int], p: int, s: int = 1) -> Character:
        check_prime(p)
        if s < 1:
            raise ValueError("s must be positive")
        out = []
        for site, u in freqs.items():
            vec = (u,) if isinstance(u, (int, np.integer)) else tuple(u)
            if len(vec) != s:
                raise ValueError(f"frequency at site {site} has length {len(vec)}, expected {s}")
            vec = tuple(int(x) % p for x in vec)
            if any(vec):
                out.append((int(site), vec))
        return cls(p, s, tuple(sorted(out)))

    @classmethod
    def trivial(cls, p: int, s: int = 1) -> Character:
        return cls(p, s, ())

    @classmethod
    def parity(cls, sites: Iterable[int], p: int = 2) -> Character:
        """All-ones frequency on the given sites (``s = 1``)."""
        return cls.from_map({k: 1 for k in sites}, p, 1)

    def as_dict(self) -> dict[int, Vector]:
        return dict(self.freqs)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.freqs)

    @property
    def is_trivial(self) -> bool:
        return not self.freqs

    @property
    def rank(self) -> int:
        return len(self.freqs)

    def _need_nontrivial(self) -> None:
        if self.is_trivial:
            raise TrivialCharacterError("undefined for the trivial character")

    @property
    def diam(self) -> int:
        self._need_nontrivial()
        return self.freqs[-1][0] - self.freqs[0][0]

    @property
    def span(self) -> int:
        return 0 if self.is_trivial else self.diam + 1

    def s_rank(self, S: int) -> int:
        self._need_nontrivial()
        return _s_rank(self.sites, S)

    def shifted(self, k: int) -> Character:
        return Character(self.p, self.s, tuple((site + k, u) for site, u in self.freqs))

    def scaled(self, c: int) -> Character:
        return Character.from_map({k: tuple(c * x for x in u) for k, u in self.freqs}, self.p, self.s)

    def angle_index(self, window: Window) -> int:
        """``sum_k u_k . a_k mod p`` for a window covering the support."""
        if window.p != self.p or window.s != self.s:
            raise ValueError("window alphabet does not match the character")
        if self.is_trivial:
            return 0
        lo, hi = self.freqs[0][0], self.freqs[-1][0]
        if lo < window.offset or hi >= window.stop:
            raise ValueError(
                f"window [{window.offset}, {window.stop}) does not cover sites [{lo}, {hi}]"
            )
        acc = 0
        for k, u in self.freqs:
            row = window.values[k - window.offset]
            acc += sum(int(a) * b for a, b in zip(row, u))
        return acc % self.p

    def __call__(self, window: Window) -> complex:
        return evaluate(self, window)

    def __str__(self) -> str:
        return format_character(self)


def root_of_unity(index: int, p: int) -> complex:
    index %= p
    if index == 0:
        return 1.0 + 0.0j
    if 2 * index == p:
        return -1.0 + 0.0j
    return cmath.exp(2j * cmath.pi * index / p)


def evaluate(chi: Character, window: Window) -> complex:
    return root_of_unity(chi.angle_index(window), chi.p)


def rank(chi: Character) -> int:
    return chi.rank


def diam(chi: Character) -> int:
    return chi.diam


def s_rank(chi: Character, S: int) -> int:
    return chi.s_rank(S)


def pullback(chi: Character, phi: LcaPolynomial) -> Character:
    """The character ``a -> chi(Phi(a))``: ``v_m = sum_f phi_f u_{m-f}``."""
    if chi.p != phi.p:
        raise ValueError(f"mismatched moduli {chi.p} and {phi.p}")
    p, s = chi.p, chi.s
    acc: dict[int, list[int]] = {}
    for k, u in chi.freqs:
        for f, c in phi.terms:
            v = acc.setdefault(k + f, [0] * s)
            for i in range(s):
                v[i] = (v[i] + c * u[i]) % p
    return Character.from_map(acc, p, s)


def ldm(chi: Character) -> int:
    """Least power of ``p`` strictly above ``diam(chi)``."""
    d = chi.diam
    q = 1
    while q <= d:
        q *= chi.p
    return q


def dilate(chi: Character, h: int) -> Character:
    """``chi^[h]``: translates of ``chi`` by ``ldm*l`` for ``l`` in the Lucas set of ``h``."""
    if h < 0:
        raise ValueError("h must be non-negative")
    step = ldm(chi)
    p = chi.p
    out: dict[int, Vector] = {}
    for ell in lucas_set(h, p):
        c = lucas_binomial(h, ell, p)
        for k, u in chi.freqs:
            out[k + step * ell] = tuple(c * x % p for x in u)
    return Character.from_map(out, p, chi.s)


# ----------------------------------------------------------------- text form

_VEC = re.compile(r"\(([^)]*)\)|([+-]?\d+)")


def parse_character(text: str, p: int, s: int | None = None) -> Character:
    """Parse ``sites=0,5,6 freqs=1,1,1`` or ``sites=0,1 freqs=(1|0),(2|1)``.

    ``freqs`` may be omitted, in which case every site gets frequency 1
    (``s = 1``).  ``trivial`` or an empty string gives the trivial character.
    """
    body = text.strip()
    if body in ("", "trivial"):
        return Character.trivial(p, s or 1)
    fields: dict[str, str] = {}
    for tok in body.split():
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        if key not in ("sites", "freqs"):
            raise ValueError(f"unknown character field {key!r}")
        fields[key] = val
    if "sites" not in fields:
        raise ValueError("character text needs sites=...")
    try:
        sites = [int(x) for x in fields["sites"].split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"bad site list {fields['sites']!r}") from None
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate sites in character")
    if "freqs" in fields:
        vecs = []
        for m in _VEC.finditer(fields["freqs"]):
            if m.group(1) is not None:
                vecs.append(tuple(int(x) for x in m.group(1).split("|")))
            else:
                vecs.append((int(m.group(2)),))
        leftover = _VEC.sub("", fields["freqs"]).replace(",", "").strip()
        if leftover:
            raise ValueError(f"bad frequency list {fields['freqs']!r}")
    else:
        vecs = [(1,) * (s or 1)] * len(sites)
    if len(vecs) != len(sites):
        raise ValueError(f"{len(sites)} sites but {len(vecs)} frequencies")
    dims = {len(v) for v in vecs}
    if len(dims) > 1:
        raise ValueError("frequency vectors have different lengths")
    got = dims.pop() if dims else (s or 1)
    if s is not None and got != s:
        raise ValueError(f"frequency vectors have length {got}, expected s={s}")
    return Character.from_map(dict(zip(sites, vecs)), p, got)


def format_character(chi: Character) -> str:
    if chi.is_trivial:
        return "trivial"
    sites = ",".join(str(k) for k in chi.sites)
    if chi.s == 1:
        freqs = ",".join(str(u[0]) for _, u in chi.freqs)
    else:
        freqs = ",".join("(" + "|".join(str(x) for x in u) + ")" for _, u in chi.freqs)
    return f"sites={sites} freqs={freqs}"
