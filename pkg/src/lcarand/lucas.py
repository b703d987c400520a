"""Base-p digit arithmetic: Lucas binomials, digit-dominated sets, zero blocks.

All digit vectors are little-endian, so ``digits[i]`` is the coefficient of
``p**i``.  Zero has the empty expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def check_prime(p: int) -> int:
    if not isinstance(p, int) or isinstance(p, bool) or not is_prime(p):
        raise ValueError(f"modulus must be a prime, got {p!r}")
    return p


def _check_natural(N: int, name: str = "N") -> int:
    if not isinstance(N, int) or isinstance(N, bool) or N < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {N!r}")
    return N


@dataclass(frozen=True)
class PAryExpansion:
    """Little-endian base-p expansion of a natural number."""

    p: int
    digits: tuple[int, ...]

    @property
    def value(self) -> int:
        v = 0
        for d in reversed(self.digits):
            v = v * self.p + d
        return v

    def __getitem__(self, i: int) -> int:
        # digits beyond the top are zero
        return self.digits[i] if 0 <= i < len(self.digits) else 0

    def __len__(self) -> int:
        return len(self.digits)


def p_ary_digits(N: int, p: int) -> PAryExpansion:
    check_prime(p)
    _check_natural(N)
    out = []
    while N:
        N, d = divmod(N, p)
        out.append(d)
    return PAryExpansion(p, tuple(out))


def lucas_binomial(N: int, n: int, p: int) -> int:
    """``C(N, n) mod p`` computed digit by digit.

    Returns 0 whenever some digit of ``n`` exceeds the matching digit of ``N``
    (in particular whenever ``n > N``).
    """
    check_prime(p)
    _check_natural(N)
    _check_natural(n, "n")
    r = 1
    while n:
        N, a = divmod(N, p)
        n, b = divmod(n, p)
        if b > a:
            return 0
        r = r * math.comb(a, b) % p
    return r


@dataclass(frozen=True)
class LucasSet:
    """The digit-dominated set of ``N``: all ``n`` whose digits never exceed ``N``'s."""

    N: int
    p: int
    elements: tuple[int, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def __contains__(self, n: object) -> bool:
        if not isinstance(n, int) or n < 0 or n > self.N:
            return False
        return lucas_binomial(self.N, n, self.p) != 0


def lucas_set(N: int, p: int) -> LucasSet:
    digits = p_ary_digits(N, p).digits
    ranges = [range(0, (d + 1) * p**i, p**i) for i, d in enumerate(digits)]
    elems = sorted(sum(t) for t in product(*ranges))
    return LucasSet(N, p, tuple(elems))


def lucas_set_size(N: int, p: int) -> int:
    return math.prod(d + 1 for d in p_ary_digits(N, p).digits)


def lucas_decompose(N: int, r: int, p: int) -> tuple[int, int]:
    """Split ``N = M + p**r * H`` with ``M < p**r``."""
    check_prime(p)
    _check_natural(N)
    _check_natural(r, "r")
    H, M = divmod(N, p**r)
    return M, H


def zero_blocks(H: int, p: int) -> list[tuple[int, int]]:
    """Internal zero runs of the digits of ``H``.

    A pair ``(i, k)`` with ``0 < i < k`` is returned when digits
    ``i .. k-1`` are zero and digits ``i-1`` and ``k`` are not.
    """
    d = p_ary_digits(H, p).digits
    out = []
    i = 1
    while i < len(d):
        if d[i] == 0 and d[i - 1] != 0:
            k = i
            while d[k] == 0:
                k += 1  # top digit is nonzero, so this stops
            out.append((i, k))
            i = k
        else:
            i += 1
    return out


def zero_block_count(H: int, p: int) -> int:
    return len(zero_blocks(H, p))


def gaps_in_lucas_set(H: int, p: int) -> list[tuple[int, int]]:
    """Consecutive elements ``h0 < h1`` of the digit-dominated set with ``h1 > p*h0``.

    ``h0 = 0`` is excluded since the ratio condition is vacuous there.  Each
    internal zero block of ``H`` produces exactly one such pair, so the list is
    never shorter than :func:`zero_blocks`.
    """
    el = lucas_set(H, p).elements
    return [(a, b) for a, b in zip(el, el[1:]) if a >= 1 and b > p * a]


def _free_digit(N: int, S0: int, p: int) -> int | None:
    # largest r with S0 < p**r, N^(r) == 0 and r below the top digit
    if N < p * S0:
        return None
    d = p_ary_digits(N, p).digits
    r = 0
    while p**r <= S0:
        r += 1
    for j in range(len(d) - 2, r - 1, -1):
        if d[j] == 0:
            return j
    return None


def in_J(N: int, S0: int, p: int) -> bool:
    """Membership in the set of exponents admitting a Lucas split past ``S0``.

    True iff ``N = M + p**R * H`` with ``H > 0``, ``R > 0`` and
    ``M, S0 < p**(R-1)``.  Equivalently some digit ``N^(r)`` with
    ``log_p S0 < r < log_p N`` vanishes.
    """
    check_prime(p)
    _check_natural(N)
    _check_natural(S0, "S0")
    return _free_digit(N, S0, p) is not None


def lucas_split_point(N: int, S0: int, p: int) -> tuple[int, int, int]:
    """Return ``(M, R, H)`` with ``N = M + p**R * H`` and the largest valid ``R``.

    Taking ``R`` as large as possible keeps ``H`` small; a pure power
    ``N = p**R`` splits as ``(0, R, 1)``.
    """
    check_prime(p)
    j = _free_digit(N, S0, p)
    if j is None:
        if N < p * S0:
            raise PreconditionError(f"N={N} is below p*S0={p * S0}")
        raise PreconditionError(
            f"no zero digit of N={N} (base {p}) strictly between log_p S0 and log_p N"
        )
    R = j + 1
    M, H = lucas_decompose(N, R, p)
    return M, R, H


@dataclass(frozen=True)
class DensityReport:
    """Counting record for a set of naturals below ``horizon``.

    ``checkpoints`` holds ``(n, count of hits below n)`` at powers of two and at
    the horizon itself.
    """

    horizon: int
    checkpoints: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return self.checkpoints[-1][1] if self.checkpoints else 0

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.horizon) if self.horizon else Fraction(0)

    def densities(self) -> list[tuple[int, float]]:
        return [(n, c / n) for n, c in self.checkpoints]

    def density_at(self, n: int) -> float:
        for m, c in self.checkpoints:
            if m == n:
                return c / n
        raise KeyError(n)

    def is_nondecreasing(self, tol: float = 0.0) -> bool:
        d = [v for _, v in self.densities()]
        return all(b >= a - tol for a, b in zip(d, d[1:]))


def density_report(hits: Iterable[bool]) -> DensityReport:
    """Build a report from a boolean sequence indexed from 0."""
    cps = []
    count = 0
    n = 0
    nxt = 1
    for n, h in enumerate(hits, start=1):
        count += bool(h)
        if n == nxt:
            cps.append((n, count))
            nxt *= 2
    if n and (not cps or cps[-1][0] != n):
        cps.append((n, count))
    return DensityReport(n, tuple(cps))


def cesaro_density(indicator: Callable[[int], bool], horizon: int) -> DensityReport:
    """Density of ``{n < horizon : indicator(n)}`` with power-of-two checkpoints."""
    _check_natural(horizon, "horizon")
    return density_report(indicator(n) for n in range(horizon))


def relative_density(
    in_set: Callable[[int], bool], within: Callable[[int], bool], horizon: int
) -> Fraction:
    """Density of one set inside another, counted below ``horizon``."""
    inside = hits = 0
    for n in range(horizon):
        if within(n):
            inside += 1
            hits += bool(in_set(n))
    if inside == 0:
        raise ValueError("reference set is empty below the horizon")
    return Fraction(hits, inside)
