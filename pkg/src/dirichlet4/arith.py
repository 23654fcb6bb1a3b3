"""Elementary arithmetic: factorization, divisor sums, Ramanujan and
Kloosterman sums, and the primitive-character count.

Everything here is exact integer arithmetic except the exponential sums,
which are evaluated in float64. Inputs are assumed to fit comfortably in
64 bits; trial division is fast enough for every modulus this package
touches (q up to a few thousand, Kloosterman moduli up to ~10^5).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache


TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------------------
# factorization and divisors


@lru_cache(maxsize=None)
def _factor_pairs(n: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError(f"factorization needs n >= 1, got {n}")
    pairs = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            pairs.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        pairs.append((m, 1))
    return tuple(pairs)


@dataclass(frozen=True)
class Factorization:
    """Prime factorization of a positive integer, with divisor iteration."""

    n: int
    pairs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", _factor_pairs(self.n))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.pairs)

    @property
    def radical(self) -> int:
        r = 1
        for p in self.primes:
            r *= p
        return r

    def divisors(self) -> list[int]:
        divs = [1]
        for p, e in self.pairs:
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)


def factorize(n: int) -> Factorization:
    return Factorization(n)


def divisors(n: int) -> list[int]:
    return Factorization(n).divisors()


def radical(n: int) -> int:
    return Factorization(n).radical


def euler_phi(n: int) -> int:
    phi = 1
    for p, e in _factor_pairs(n):
        phi *= p ** (e - 1) * (p - 1)
    return phi


def moebius(n: int) -> int:
    mu = 1
    for _, e in _factor_pairs(n):
        if e > 1:
            return 0
        mu = -mu
    return mu


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i in range(2, n + 1) if sieve[i]]


# ----------------------------------------------------------------------
# divisor sums


def divisor_sigma(n: int, lam: complex) -> complex:
    """sigma_lam(n) = sum over d | n of d^lam. Exact int for integer lam >= 0."""
    if n < 1:
        raise ValueError(f"divisor_sigma needs n >= 1, got {n}")
    if isinstance(lam, int) and lam >= 0:
        out = 0
        for d in divisors(n):
            out += d**lam
        return out
    out = 0.0 + 0.0j
    for d in divisors(n):
        out += complex(d) ** lam
    return out


def shifted_sigma(n: int, a: complex, b: complex) -> complex:
    """Two-shift divisor sum sigma_{a,b}(n) = sum_{d1 d2 = n} d1^a d2^b.

    Positive-exponent convention, so sigma_{a,b}(n) = n^b sigma_{a-b}(n).
    """
    if n < 1:
        raise ValueError(f"shifted_sigma needs n >= 1, got {n}")
    out = 0.0 + 0.0j
    for d in divisors(n):
        out += complex(d) ** a * complex(n // d) ** b
    return out


def ramanujan_sum(l: int, n: int) -> int:
    """Ramanujan sum c_l(n) via the closed form mu(l/g) phi(l)/phi(l/g), g = (n, l)."""
    if l < 1:
        raise ValueError(f"ramanujan_sum needs l >= 1, got {l}")
    g = math.gcd(n, l)
    m = l // g
    mu = moebius(m)
    if mu == 0:
        return 0
    # phi(l) is divisible by phi(l/g) here, the quotient is exact
    return mu * (euler_phi(l) // euler_phi(m))


# ----------------------------------------------------------------------
# exponential sums


def kloosterman(a: int, b: int, c: int) -> complex:
    """Full Kloosterman sum S(a,b;c) = sum_{d mod c, (d,c)=1} e((ad + b d^-1)/c).

    Direct O(c) loop; modular inverses by pow(d, -1, c).
    """
    if c < 1:
        raise ValueError(f"kloosterman needs c >= 1, got {c}")
    if c == 1:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for d in range(1, c):
        if math.gcd(d, c) != 1:
            continue
        dbar = pow(d, -1, c)
        total += cmath.exp(1j * TWO_PI * ((a * d + b * dbar) % c) / c)
    return total


def kl2(a: int, c: int) -> float:
    """Normalized sum Kl_2(a;c) = S(a,1;c)/sqrt(c). Real by d -> d^-1 symmetry."""
    s = kloosterman(a, 1, c)
    if abs(s.imag) > 1e-9 * max(1.0, abs(s.real)):
        raise ArithmeticError(f"Kloosterman sum S({a},1;{c}) lost realness: {s}")
    return s.real / math.sqrt(c)


# ----------------------------------------------------------------------
# character-family counts


def phi_star(q: int) -> int:
    """Number of primitive Dirichlet characters mod q.

    Multiplicative; p^(m-2)(p-1)^2 at p^m for m >= 2, p-2 at p, and 1 at q=1.
    Vanishes exactly when q = 2 mod 4.
    """
    if q < 1:
        raise ValueError(f"phi_star needs q >= 1, got {q}")
    out = 1
    for p, e in _factor_pairs(q):
        if e == 1:
            out *= p - 2
        else:
            out *= p ** (e - 2) * (p - 1) ** 2
    return out


def q0_of(q: int) -> int:
    """Largest divisor of rad(q) that is < sqrt(rad(q))."""
    if q < 1:
        raise ValueError(f"q0_of needs q >= 1, got {q}")
    r = radical(q)
    best = 0
    for d in Factorization(r).divisors():
        if d * d < r and d > best:
            best = d
    if best == 0:
        # r = 1: the only divisor is 1 and 1 < sqrt(1) fails; keep 1 by convention
        return 1
    return best


# ----------------------------------------------------------------------
# shift bookkeeping for the moment formulas


@dataclass(frozen=True)
class ShiftTuple:
    """Four small complex shifts (alpha, beta, gamma, delta).

    The moment formulas keep every shifted zeta argument away from the pole,
    which needs all eight combinations alpha +- beta, gamma +- delta and the
    four cross sums alpha+gamma, ..., beta+delta bounded away from zero.
    separation() reports the worst one.
    """

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    max_modulus: float = 0.25

    def __post_init__(self):
        worst = max(abs(z) for z in self.as_tuple())
        if worst > self.max_modulus + 1e-15:
            raise ValueError(
                f"shift modulus {worst:.4g} exceeds the allowed {self.max_modulus}"
            )

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (
            complex(self.alpha),
            complex(self.beta),
            complex(self.gamma),
            complex(self.delta),
        )

    def separation(self) -> float:
        a, b, c, d = self.as_tuple()
        combos = (
            a + b, a - b, c + d, c - d,
            a + c, a + d, b + c, b + d,
        )
        return min(abs(z) for z in combos)

    def swapped_negated(self) -> "ShiftTuple":
        """(-gamma, -delta, -alpha, -beta): the tuple driving the mirror side
        of the approximate functional equation."""
        a, b, c, d = self.as_tuple()
        return ShiftTuple(-c, -d, -a, -b, max_modulus=self.max_modulus)

    def scaled(self, eps: float) -> "ShiftTuple":
        a, b, c, d = self.as_tuple()
        return ShiftTuple(eps * a, eps * b, eps * c, eps * d,
                          max_modulus=self.max_modulus)
