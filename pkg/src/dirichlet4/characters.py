"""Dirichlet character groups: CRT enumeration, parity, conductors,
Gauss sums, and the exact orthogonality identities over primitive
characters.

The group mod q is assembled from its prime-power components. Odd prime
powers are cyclic and indexed by a primitive root; 2^k splits as
{+-1} x <5> for k >= 3. Every character is materialized as a full value
table (complex roots of unity, zero off the units), and the canonical
index is the lexicographic position of the CRT exponent tuple, with
components ordered by ascending prime. That index is frozen: cached
L-values refer to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith import _factor_pairs, euler_phi, moebius, phi_star

__all__ = [
    "DirichletCharacter",
    "CharacterGroup",
    "OrthogonalityReport",
    "character_group",
    "conductor",
    "gauss_sum",
    "orthogonality_residual",
    "group_to_payload",
    "group_from_payload",
]


# ----------------------------------------------------------------------
# prime-power components


def _primitive_root(p: int, e: int) -> int:
    """Smallest primitive root mod p^e for odd p, lifted from mod p."""
    phi_p = p - 1
    prime_factors = {f for f, _ in _factor_pairs(phi_p)}
    g = 2
    while True:
        if all(pow(g, phi_p // f, p) != 1 for f in prime_factors):
            break
        g += 1
    if e == 1:
        return g
    # g generates mod p^e iff g^(p-1) != 1 mod p^2
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


@dataclass(frozen=True)
class _Component:
    """One cyclic factor of (Z/q)^*: exponent order and a dlog table over
    residues mod its prime power."""

    prime: int
    exponent: int
    order: int
    dlog: np.ndarray  # index by a mod p^e; -1 off units

    @property
    def modulus(self) -> int:
        return self.prime**self.exponent


def _components_of(q: int) -> list[_Component]:
    comps: list[_Component] = []
    for p, e in _factor_pairs(q):
        pe = p**e
        if p == 2:
            if e == 1:
                dlog = -np.ones(2, dtype=np.int64)
                dlog[1] = 0
                comps.append(_Component(2, 1, 1, dlog))
            elif e == 2:
                dlog = -np.ones(4, dtype=np.int64)
                dlog[1] = 0
                dlog[3] = 1
                comps.append(_Component(2, 2, 2, dlog))
            else:
                half = pe // 4  # order of 5 mod 2^e
                dsign = -np.ones(pe, dtype=np.int64)
                dfive = -np.ones(pe, dtype=np.int64)
                a = 1
                for m in range(half):
                    dsign[a] = 0
                    dfive[a] = m
                    dsign[pe - a] = 1
                    dfive[pe - a] = m
                    a = (a * 5) % pe
                comps.append(_Component(2, e, 2, dsign))
                comps.append(_Component(2, e, half, dfive))
        else:
            phi = pe // p * (p - 1)
            g = _primitive_root(p, e)
            dlog = -np.ones(pe, dtype=np.int64)
            a = 1
            for m in range(phi):
                dlog[a] = m
                a = (a * g) % pe
            comps.append(_Component(p, e, phi, dlog))
    return comps


def _component_conductors(comps: list[_Component], exps: tuple[int, ...]) -> int:
    """Conductor of the character with CRT exponents `exps`."""
    cond = 1
    i = 0
    while i < len(comps):
        c = comps[i]
        if c.prime == 2 and c.exponent >= 3:
            j0, j1 = exps[i], exps[i + 1]
            if j1 == 0:
                cond *= 4 if j0 == 1 else 1
            else:
                v = 0
                while j1 % 2 == 0:
                    j1 //= 2
                    v += 1
                cond *= 2 ** (c.exponent - v)
            i += 2
            continue
        j = exps[i]
        if j != 0:
            p = c.prime
            v = 0
            while j % p == 0:
                j //= p
                v += 1
            cond *= p ** (c.exponent - min(v, c.exponent - 1))
        i += 1
    return cond


def _component_parity(comps: list[_Component], exps: tuple[int, ...]) -> int:
    """0 for chi(-1) = +1, 1 for chi(-1) = -1, from exponents alone."""
    sign = 0
    i = 0
    while i < len(comps):
        c = comps[i]
        if c.prime == 2 and c.exponent >= 3:
            sign ^= exps[i] & 1  # the {+-1} part detects -1
            i += 2
            continue
        if c.prime == 2 and c.exponent == 1:
            i += 1
            continue
        # -1 is the element of exponent order/2, so chi(-1) = (-1)^j
        sign ^= exps[i] & 1
        i += 1
    return sign


# ----------------------------------------------------------------------
# characters and the group


@dataclass(frozen=True)
class DirichletCharacter:
    q: int
    index: int
    values: np.ndarray
    parity: int
    conductor: int

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.q

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.values.imag) < 1e-12))

    def __call__(self, n: int) -> complex:
        return complex(self.values[n % self.q])


class CharacterGroup:
    """All phi(q) characters mod q in canonical index order."""

    def __init__(self, q: int, characters: list[DirichletCharacter],
                 exponents: list[tuple[int, ...]], orders: tuple[int, ...]):
        self.q = q
        self.characters = characters
        self.primitive_indices = [c.index for c in characters if c.is_primitive]
        self._exponents = exponents
        self._orders = orders

    def __len__(self) -> int:
        return len(self.characters)

    def __iter__(self):
        return iter(self.characters)

    def character(self, index: int) -> DirichletCharacter:
        return self.characters[index]

    def primitive(self) -> list[DirichletCharacter]:
        return [self.characters[i] for i in self.primitive_indices]

    def conjugate_index(self, index: int) -> int:
        exps = self._exponents[index]
        conj = tuple((-e) % r for e, r in zip(exps, self._orders))
        return self._index_of(conj)

    def product_index(self, i: int, j: int) -> int:
        a, b = self._exponents[i], self._exponents[j]
        prod = tuple((x + y) % r for x, y, r in zip(a, b, self._orders))
        return self._index_of(prod)

    def _index_of(self, exps: tuple[int, ...]) -> int:
        idx = 0
        for e, r in zip(exps, self._orders):
            idx = idx * r + e
        return idx

    def value_matrix(self, indices=None) -> np.ndarray:
        """Stacked value tables, one row per character index."""
        if indices is None:
            indices = range(len(self.characters))
        return np.vstack([self.characters[i].values for i in indices])


@lru_cache(maxsize=64)
def character_group(q: int) -> CharacterGroup:
    """Build the full character group mod q via CRT over prime powers."""
    if q < 1:
        raise ValueError(f"character_group needs q >= 1, got {q}")
    if q == 1:
        values = np.ones(1, dtype=complex)
        values.flags.writeable = False
        chi = DirichletCharacter(1, 0, values, 0, 1)
        return CharacterGroup(1, [chi], [()], ())

    comps = _components_of(q)
    orders = tuple(c.order for c in comps)
    phi = euler_phi(q)

    # dlog of every unit a mod q in every component
    a_all = np.arange(q, dtype=np.int64)
    unit_mask = np.array([math.gcd(int(a), q) == 1 for a in a_all])
    units = a_all[unit_mask]
    dlogs = np.empty((len(comps), units.size), dtype=np.int64)
    for i, c in enumerate(comps):
        dlogs[i] = c.dlog[units % c.modulus]
    assert np.all(dlogs >= 0)

    # phases as exact rationals over a common denominator
    lcm = 1
    for r in orders:
        lcm = lcm * r // math.gcd(lcm, r)
    mult = np.array([lcm // r for r in orders], dtype=np.int64)

    exponents = []
    radix = list(orders)
    for idx in range(phi):
        rem = idx
        exps = [0] * len(orders)
        for i in range(len(orders) - 1, -1, -1):
            exps[i] = rem % radix[i]
            rem //= radix[i]
        exponents.append(tuple(exps))
    assert len({e for e in exponents}) == phi

    jmat = np.array(exponents, dtype=np.int64) * mult[None, :]
    phases = (jmat @ dlogs) % lcm
    unit_values = np.exp(2j * np.pi * phases / lcm)

    characters = []
    for idx in range(phi):
        values = np.zeros(q, dtype=complex)
        values[units] = unit_values[idx]
        values.flags.writeable = False
        characters.append(
            DirichletCharacter(
                q=q,
                index=idx,
                values=values,
                parity=_component_parity(comps, exponents[idx]),
                conductor=_component_conductors(comps, exponents[idx]),
            )
        )
    group = CharacterGroup(q, characters, exponents, orders)
    assert len(group.primitive_indices) == phi_star(q)
    return group


# ----------------------------------------------------------------------
# derived quantities


def conductor(chi: DirichletCharacter) -> int:
    return chi.conductor


def gauss_sum(chi: DirichletCharacter) -> complex:
    """tau(chi) = sum_n chi(n) e(n/q)."""
    q = chi.q
    e = np.exp(2j * np.pi * np.arange(q) / q)
    return complex(np.dot(chi.values, e))


@dataclass(frozen=True)
class OrthogonalityReport:
    residual_sum: float
    residual_parity: float


def _divisor_weight(q: int, k: int) -> int:
    # sum over d | gcd(q, k) of phi(d) mu(q/d); gcd(q, 0) = q
    g = math.gcd(q, k)
    total = 0
    for d in range(1, g + 1):
        if g % d == 0:
            total += euler_phi(d) * moebius(q // d)
    return total


def orthogonality_residual(q: int, m: int, n: int) -> OrthogonalityReport:
    """Residuals of the primitive-character orthogonality identities.

    Unrestricted:   sum*_chi chi(m) conj(chi(n)) = sum_{d|(q,m-n)} phi(d) mu(q/d)
    Parity 𝔞 part:  half the unrestricted right side plus (-1)^𝔞/2 times the
                    same weight at m+n.
    """
    if math.gcd(m * n, q) != 1:
        raise ValueError(f"orthogonality needs (mn, q) = 1, got m={m}, n={n}, q={q}")
    group = character_group(q)
    prim = group.primitive()

    lhs = sum(chi(m) * np.conj(chi(n)) for chi in prim)
    rhs = _divisor_weight(q, m - n)
    residual_sum = abs(lhs - rhs)

    residual_parity = 0.0
    w_minus = _divisor_weight(q, m - n)
    w_plus = _divisor_weight(q, m + n)
    for parity in (0, 1):
        lhs_p = sum(chi(m) * np.conj(chi(n)) for chi in prim if chi.parity == parity)
        rhs_p = 0.5 * w_minus + 0.5 * (-1) ** parity * w_plus
        residual_parity = max(residual_parity, abs(lhs_p - rhs_p))
    return OrthogonalityReport(float(residual_sum), float(residual_parity))


# ----------------------------------------------------------------------
# cache serialization


def group_to_payload(group: CharacterGroup) -> dict:
    return {
        "q": group.q,
        "orders": list(group._orders),
        "characters": [
            {
                "index": c.index,
                "parity": c.parity,
                "conductor": c.conductor,
                "exponents": list(group._exponents[c.index]),
                "values": [[float(v.real), float(v.imag)] for v in c.values],
            }
            for c in group.characters
        ],
    }


def group_from_payload(payload: dict) -> CharacterGroup:
    q = payload["q"]
    characters = []
    exponents = []
    for rec in payload["characters"]:
        values = np.array([complex(re, im) for re, im in rec["values"]])
        values.flags.writeable = False
        characters.append(
            DirichletCharacter(
                q=q,
                index=rec["index"],
                values=values,
                parity=rec["parity"],
                conductor=rec["conductor"],
            )
        )
        exponents.append(tuple(rec["exponents"]))
    return CharacterGroup(q, characters, exponents, tuple(payload["orders"]))
