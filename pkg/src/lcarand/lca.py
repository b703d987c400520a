"""Linear cellular automata over Z/p as sparse Laurent polynomials in the shift.

``Phi = sum_f phi_f * x**f`` acts on a configuration by
``Phi(a)_m = sum_f phi_f * a_{m+f}``.  Composition of automata is
multiplication of polynomials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .lucas import (
    PreconditionError,
    check_prime,
    lucas_binomial,
    lucas_set,
    lucas_split_point,
    p_ary_digits,
)


@dataclass(frozen=True)
class LcaPolynomial:
    """Sparse polynomial ``{exponent: coefficient}`` with coefficients in ``[1, p)``.

    Build instances with :meth:`from_terms` (or :func:`parse_lca`); the
    dataclass constructor expects already canonical ``terms``.
    """

    p: int
    terms: tuple[tuple[int, int], ...]

    @classmethod
    def from_terms(cls, terms: Mapping[int, int] | Iterable[tuple[int, int]], p: int) -> LcaPolynomial:
        check_prime(p)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, int] = {}
        for e, c in items:
            acc[int(e)] = (acc.get(int(e), 0) + int(c)) % p
        canon = tuple(sorted((e, c) for e, c in acc.items() if c))
        if not canon:
            raise ValueError("an LCA polynomial needs at least one nonzero term")
        return cls(p, canon)

    @classmethod
    def one(cls, p: int) -> LcaPolynomial:
        return cls.from_terms({0: 1}, p)

    @classmethod
    def monomial(cls, exponent: int, p: int, coeff: int = 1) -> LcaPolynomial:
        return cls.from_terms({exponent: coeff}, p)

    def as_dict(self) -> dict[int, int]:
        return dict(self.terms)

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.terms)

    def coefficient(self, e: int) -> int:
        return self.as_dict().get(e, 0)

    def __len__(self) -> int:
        return len(self.terms)

    def __mul__(self, other: LcaPolynomial) -> LcaPolynomial:
        return multiply(self, other)

    def __pow__(self, n: int) -> LcaPolynomial:
        return power_fast(self, n)

    def shifted(self, k: int) -> LcaPolynomial:
        return LcaPolynomial(self.p, tuple((e + k, c) for e, c in self.terms))

    def frobenius(self, r: int) -> LcaPolynomial:
        """``Phi**(p**r)``, which over F_p just rescales exponents."""
        q = self.p**r
        return LcaPolynomial(self.p, tuple((e * q, c) for e, c in self.terms))

    def scaled(self, c: int) -> LcaPolynomial:
        return LcaPolynomial.from_terms({e: v * c for e, v in self.terms}, self.p)

    @property
    def diam(self) -> int:
        return self.terms[-1][0] - self.terms[0][0]

    @property
    def centre(self) -> Fraction:
        return Fraction(sum(self.exponents), len(self.terms))

    def __str__(self) -> str:
        return format_lca(self)


def _check_same_p(a: LcaPolynomial, b: LcaPolynomial) -> None:
    if a.p != b.p:
        raise ValueError(f"mismatched moduli {a.p} and {b.p}")


def multiply(a: LcaPolynomial, b: LcaPolynomial) -> LcaPolynomial:
    _check_same_p(a, b)
    p = a.p
    out: dict[int, int] = {}
    for e1, c1 in a.terms:
        for e2, c2 in b.terms:
            out[e1 + e2] = (out.get(e1 + e2, 0) + c1 * c2) % p
    return LcaPolynomial.from_terms(out, p)


def power_naive(phi: LcaPolynomial, N: int) -> LcaPolynomial:
    if N < 0:
        raise ValueError("exponent must be non-negative")
    out = LcaPolynomial.one(phi.p)
    for _ in range(N):
        out = multiply(out, phi)
    return out


def power_fast(phi: LcaPolynomial, N: int) -> LcaPolynomial:
    """``Phi**N`` via Lucas's theorem.

    When ``Phi - 1`` is a single term ``g*x**f`` the result is the binomial sum
    over the digit-dominated set of ``N``.  Otherwise ``Phi**N`` is assembled
    from the digits of ``N`` as ``prod_i (Phi**N_i)(x**(p**i))``, which is the
    same identity read through the Frobenius map.
    """
    if N < 0:
        raise ValueError("exponent must be non-negative")
    p = phi.p
    d = phi.as_dict()
    if d.get(0) == 1 and len(d) == 2:
        ((f, g),) = [(e, c) for e, c in d.items() if e != 0]
        terms = {}
        for n in lucas_set(N, p):
            terms[f * n] = lucas_binomial(N, n, p) * pow(g, n, p)
        return LcaPolynomial.from_terms(terms, p)
    out = LcaPolynomial.one(p)
    small = [LcaPolynomial.one(p)]
    for i, digit in enumerate(p_ary_digits(N, p).digits):
        while len(small) <= digit:
            small.append(multiply(small[-1], phi))
        if digit:
            out = multiply(out, small[digit].frobenius(i))
    return out


def diam(phi: LcaPolynomial) -> int:
    return phi.diam


def centre(phi: LcaPolynomial) -> Fraction:
    return phi.centre


def K_p(p: int) -> Fraction:
    check_prime(p)
    return min(Fraction(1, 2), Fraction(4 * p - 7, 4 * p + 4))


@dataclass(frozen=True)
class BipartiteForm:
    """``Phi = 1 + gamma * x**f``."""

    gamma: LcaPolynomial
    f: int
    p: int

    def expand(self) -> LcaPolynomial:
        d = {e + self.f: c for e, c in self.gamma.terms}
        d[0] = (d.get(0, 0) + 1) % self.p
        return LcaPolynomial.from_terms(d, self.p)


def classify_bipartite(phi: LcaPolynomial, p: int | None = None) -> BipartiteForm | None:
    """Find ``f`` with ``Phi = 1 + Gamma x**f``, ``Gamma`` centred and narrow.

    Candidates ``f`` are scanned in increasing order, so ties resolve to the
    smallest admissible shift.  ``p`` overrides the polynomial's modulus for
    the width constant only when the coefficients are the same integers.
    """
    if p is not None and p != phi.p:
        phi = LcaPolynomial.from_terms(phi.terms, p)
    p = phi.p
    d = phi.as_dict()
    if d.get(0) != 1:
        return None
    rest = {e: c for e, c in d.items() if e != 0}
    if not rest:
        return None
    lo, hi = min(rest), max(rest)
    width = hi - lo
    mean = Fraction(sum(rest), len(rest))
    kp = K_p(p)
    for f in range(lo, hi + 1):
        if f == 0:
            continue
        if abs(mean - f) < 1 and width <= kp * abs(f):
            gamma = LcaPolynomial.from_terms({e - f: c for e, c in rest.items()}, p)
            return BipartiteForm(gamma, f, p)
    return None


def s_rank(support, S: int) -> int:
    """Number of groups left after splitting the sorted support at gaps ``>= S``."""
    if S < 1:
        raise ValueError("S must be at least 1")
    if isinstance(support, LcaPolynomial):
        pts = list(support.exponents)
    elif hasattr(support, "sites"):
        pts = list(support.sites)
    else:
        pts = sorted(set(support))
    if not pts:
        raise ValueError("s_rank of an empty support is undefined")
    return 1 + sum(1 for a, b in zip(pts, pts[1:]) if b - a >= S)


def lucas_power_split(phi, N: int, S0: int):
    """Split ``Phi**N = Phi**M * Theta**H`` with ``Theta = Phi**(p**r)``.

    Returns ``(M, r, H, assembled)``.  Raises :class:`PreconditionError` when
    ``N`` admits no such split past ``S0``.
    """
    if isinstance(phi, BipartiteForm):
        phi = phi.expand()
    p = phi.p
    M, r, H = lucas_split_point(N, S0, p)
    theta = phi.frobenius(r)
    assembled = multiply(power_fast(phi, M), power_fast(theta, H))
    if assembled != power_fast(phi, N):
        raise RuntimeError("Lucas split failed to reassemble; this is a bug")
    return M, r, H, assembled


# ----------------------------------------------------------------- windows


@dataclass(frozen=True)
class Window:
    """Finite piece of a configuration: ``values[i]`` sits at site ``offset + i``.

    ``values`` has shape ``(L, s)`` with entries in ``[0, p)``.
    """

    values: np.ndarray
    offset: int
    p: int

    @classmethod
    def from_symbols(cls, symbols, offset: int = 0, p: int = 2) -> Window:
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("window values must be 1-D or 2-D")
        return cls(arr % p, offset, p)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def s(self) -> int:
        return self.values.shape[1]

    @property
    def stop(self) -> int:
        return self.offset + len(self)

    def symbols(self) -> list:
        if self.s == 1:
            return self.values[:, 0].tolist()
        return [tuple(v) for v in self.values.tolist()]


def apply_array(phi: LcaPolynomial, values: np.ndarray, axis: int = -2) -> tuple[np.ndarray, int]:
    """Apply ``phi`` along ``axis`` of an integer array.

    Returns the output array and the shift of its first site relative to the
    input's first site (``-min exponent``).
    """
    values = np.asarray(values)
    L = values.shape[axis]
    lo = phi.terms[0][0]
    out_len = L - phi.diam
    if out_len <= 0:
        raise ValueError(f"window of length {L} is too short for an LCA of diameter {phi.diam}")
    v = np.moveaxis(values, axis, 0)
    out = np.zeros((out_len,) + v.shape[1:], dtype=np.int64)
    for e, c in phi.terms:
        start = e - lo
        out += c * v[start : start + out_len]
    out %= phi.p
    return np.moveaxis(out, 0, axis), -lo


def apply(phi: LcaPolynomial, window: Window) -> Window:
    """``Phi(a)_m = sum_f phi_f a_{m+f}`` on the sites where every input is known."""
    if window.p != phi.p:
        raise ValueError(f"mismatched moduli {window.p} and {phi.p}")
    out, shift = apply_array(phi, window.values, axis=0)
    return Window(out, window.offset + shift, phi.p)


# ----------------------------------------------------------------- text form

_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?:(?P<coef>\d+)\s*\*?\s*)?(?:(?P<x>[xX])(?:\s*\^\s*(?P<exp>[+-]?\s*\d+))?)?"
)


class LcaSyntaxError(ValueError):
    def __init__(self, text: str, pos: int, msg: str):
        self.text = text
        self.pos = pos
        super().__init__(f"{msg} at position {pos}: {text!r}\n{' ' * (pos + 1)}^")


def parse_lca(text: str, p: int, require_lca: bool = True) -> LcaPolynomial:
    """Parse ``1+x^5+2*x^-2`` style text.

    With ``require_lca`` the result must keep at least two terms.
    """
    check_prime(p)
    pos = 0
    n = len(text)
    acc: dict[int, int] = {}
    first = True
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            if first:
                raise LcaSyntaxError(text, pos, "empty expression")
            break
        m = _TERM.match(text, pos)
        start = pos
        if m is None or m.end() == pos:
            raise LcaSyntaxError(text, pos, f"unexpected character {text[pos]!r}")
        if not first and m.group("sign") is None:
            raise LcaSyntaxError(text, pos, "expected '+' or '-' between terms")
        if m.group("coef") is None and m.group("x") is None:
            raise LcaSyntaxError(text, m.end(), "expected a coefficient or 'x'")
        coef = int(m.group("coef")) if m.group("coef") is not None else 1
        if m.group("sign") == "-":
            coef = -coef
        if m.group("x") is None:
            e = 0
        elif m.group("exp") is None:
            if text[m.end("x") : m.end("x") + 1].strip() == "^":
                raise LcaSyntaxError(text, m.end("x") + 1, "missing exponent")
            e = 1
        else:
            e = int(m.group("exp").replace(" ", ""))
        acc[e] = acc.get(e, 0) + coef
        pos = m.end()
        if pos == start:
            raise LcaSyntaxError(text, pos, "no progress")
        first = False
    try:
        poly = LcaPolynomial.from_terms(acc, p)
    except ValueError:
        raise LcaSyntaxError(text, 0, f"all coefficients vanish mod {p}") from None
    if require_lca and len(poly) < 2:
        raise LcaSyntaxError(text, 0, "an automaton needs at least two terms")
    return poly


def format_lca(phi: LcaPolynomial) -> str:
    parts = []
    for e, c in phi.terms:
        if e == 0:
            body = str(c)
        else:
            x = "x" if e == 1 else f"x^{e}"
            body = x if c == 1 else f"{c}*{x}"
        parts.append(body)
    return "+".join(parts)


__all__ = [
    "BipartiteForm",
    "LcaPolynomial",
    "LcaSyntaxError",
    "PreconditionError",
    "Window",
    "K_p",
    "apply",
    "apply_array",
    "centre",
    "classify_bipartite",
    "diam",
    "format_lca",
    "lucas_power_split",
    "multiply",
    "parse_lca",
    "power_fast",
    "power_naive",
    "s_rank",
]
