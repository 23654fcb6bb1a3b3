"""Character group construction, conductors, Gauss sums, orthogonality."""

import math

import numpy as np
import pytest

from dirichlet4.arith import euler_phi, phi_star
from dirichlet4.characters import (
    character_group,
    gauss_sum,
    group_from_payload,
    group_to_payload,
    orthogonality_residual,
)


def units_of(q):
    return [a for a in range(q) if math.gcd(a, q) == 1]


# ----------------------------------------------------------------------
# construction


def test_trivial_modulus():
    g = character_group(1)
    assert len(g) == 1
    assert g.primitive_indices == [0]
    chi = g.character(0)
    assert chi(0) == 1  # every integer is a unit mod 1
    assert chi(17) == 1
    assert chi.parity == 0
    assert chi.conductor == 1


def test_group_sizes_small():
    g5 = character_group(5)
    assert len(g5) == 4
    assert len(g5.primitive_indices) == 3
    assert sum(1 for c in g5 if c.parity == 1) == 2

    g8 = character_group(8)
    assert len(g8) == 4
    assert len(g8.primitive_indices) == 2


@pytest.mark.parametrize("q", list(range(1, 61)))
def test_group_order_and_primitive_count(q):
    g = character_group(q)
    assert len(g) == euler_phi(q)
    assert len(g.primitive_indices) == phi_star(q)
    assert g.primitive_indices == sorted(g.primitive_indices)


def test_index_zero_is_principal():
    for q in (2, 3, 8, 12, 45, 56):
        chi = character_group(q).character(0)
        for a in units_of(q):
            assert chi(a) == 1


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9, 12, 16, 24, 36, 45, 60])
def test_value_tables_are_unit_circle(q):
    for chi in character_group(q):
        for a in range(q):
            if math.gcd(a, q) == 1:
                assert abs(abs(chi(a)) - 1) < 1e-12
            else:
                assert chi(a) == 0


@pytest.mark.parametrize("q", [3, 4, 5, 7, 8, 9, 15, 16, 21, 24, 40, 54, 60])
def test_multiplicativity(q):
    us = units_of(q)
    for chi in character_group(q):
        for a in us[:6]:
            for b in us[:6]:
                assert abs(chi(a) * chi(b) - chi(a * b)) < 1e-12


@pytest.mark.parametrize("q", list(range(3, 61)))
def test_parity_matches_value_at_minus_one(q):
    for chi in character_group(q):
        assert abs(chi(q - 1) - (-1) ** chi.parity) < 1e-12


@pytest.mark.parametrize("q", [q for q in range(3, 61)])
def test_parity_partition(q):
    g = character_group(q)
    odd = sum(1 for c in g if c.parity == 1)
    if q == 4 or q > 4:
        # phi(q) even, exactly half odd
        assert odd == euler_phi(q) // 2
    else:
        assert odd == euler_phi(q) // 2  # q=3: phi=2, one odd


@pytest.mark.parametrize("q", list(range(2, 61)))
def test_tables_pairwise_distinct(q):
    g = character_group(q)
    tables = [tuple(np.round(c.values, 9)) for c in g]
    assert len(set(tables)) == len(g)


@pytest.mark.parametrize("q", [5, 8, 9, 12, 16, 21, 24, 45, 60])
def test_group_closure(q):
    g = character_group(q)
    n = len(g)
    for i in range(n):
        for j in range(n):
            k = g.product_index(i, j)
            prod = g.character(i).values * g.character(j).values
            assert np.allclose(prod, g.character(k).values, atol=1e-10)


@pytest.mark.parametrize("q", [5, 7, 8, 9, 13, 16, 40, 60])
def test_conjugate_index(q):
    g = character_group(q)
    for i in range(len(g)):
        j = g.conjugate_index(i)
        assert np.allclose(np.conj(g.character(i).values), g.character(j).values,
                           atol=1e-12)


# ----------------------------------------------------------------------
# conductors


def brute_conductor(chi):
    """Smallest f | q such that chi is f-periodic on residues coprime to q."""
    q = chi.q
    us = units_of(q)
    for f in sorted(d for d in range(1, q + 1) if q % d == 0):
        ok = True
        for a in us:
            for b in us:
                if (a - b) % f == 0 and abs(chi(a) - chi(b)) > 1e-9:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return f
    return q


@pytest.mark.parametrize("q", list(range(1, 49)))
def test_conductor_matches_periodicity(q):
    for chi in character_group(q):
        assert chi.conductor == brute_conductor(chi)
        assert q % chi.conductor == 0


def test_conductor_examples():
    # principal always has conductor 1
    for q in (2, 6, 9, 40):
        assert character_group(q).character(0).conductor == 1
    # prime modulus: every nonprincipal character is primitive
    g7 = character_group(7)
    assert all(c.conductor == 7 for c in g7 if c.index != 0)
    # mod 9 characters induced from mod 3 have conductor 3
    g9 = character_group(9)
    conds = sorted(c.conductor for c in g9)
    assert conds == [1, 3, 9, 9, 9, 9]


# ----------------------------------------------------------------------
# Gauss sums


def test_gauss_sum_trivial():
    assert gauss_sum(character_group(1).character(0)) == 1


def test_gauss_sum_moduli_five():
    g = character_group(5)
    for i in g.primitive_indices:
        assert abs(abs(gauss_sum(g.character(i))) - math.sqrt(5)) < 1e-10
    # the quadratic character: real, nonprincipal; tau = +sqrt(5)
    quad = [c for c in g if c.index != 0 and c.is_real]
    assert len(quad) == 1
    tau = gauss_sum(quad[0])
    assert abs(tau - math.sqrt(5)) < 1e-10


@pytest.mark.parametrize("q", list(range(2, 61)))
def test_gauss_sum_conjugation_identity(q):
    g = character_group(q)
    for i in g.primitive_indices:
        chi = g.character(i)
        chibar = g.character(g.conjugate_index(i))
        lhs = gauss_sum(chibar)
        rhs = chi(q - 1) * np.conj(gauss_sum(chi))
        assert abs(lhs - rhs) < 1e-10


@pytest.mark.parametrize("q", [3, 4, 5, 7, 8, 11, 13])
def test_gauss_sum_modulus_primitive(q):
    # |tau(chi)| = sqrt(q) for primitive chi
    g = character_group(q)
    for i in g.primitive_indices:
        assert abs(abs(gauss_sum(g.character(i))) - math.sqrt(q)) < 1e-10


# ----------------------------------------------------------------------
# orthogonality over primitive characters


def test_orthogonality_examples():
    r = orthogonality_residual(7, 1, 1)
    assert r.residual_sum < 1e-12
    assert r.residual_parity < 1e-12
    # the identity value itself: sum of phi(d) mu(7/d) over d | 7 = -1 + 6 = 5
    g = character_group(7)
    val = sum(c(1) * np.conj(c(1)) for c in g.primitive())
    assert abs(val - 5) < 1e-12
    assert phi_star(7) == 5

    g5 = character_group(5)
    val = sum(c(2) * np.conj(c(3)) for c in g5.primitive())
    assert abs(val - (-1)) < 1e-12


@pytest.mark.parametrize("q", list(range(1, 61)))
def test_orthogonality_sweep(q):
    rng = np.random.default_rng(q)
    us = units_of(q)
    for _ in range(6):
        m = int(rng.choice(us)) + q * int(rng.integers(0, 3))
        n = int(rng.choice(us)) + q * int(rng.integers(0, 3))
        r = orthogonality_residual(q, m, n)
        assert r.residual_sum < 1e-9
        assert r.residual_parity < 1e-9


def test_orthogonality_diagonal_is_phi_star():
    for q in (3, 8, 15, 36, 49):
        g = character_group(q)
        val = sum(abs(c(2 if q % 2 else 1)) ** 2 for c in g.primitive())
        assert abs(val - phi_star(q)) < 1e-12


def test_orthogonality_rejects_nonunits():
    with pytest.raises(ValueError):
        orthogonality_residual(6, 2, 1)


@pytest.mark.parametrize("q", list(range(2, 41)))
def test_full_group_orthogonality(q):
    g = character_group(q)
    us = units_of(q)
    for m in us[:4]:
        for n in us[:4]:
            s = sum(c(m) * np.conj(c(n)) for c in g)
            expect = euler_phi(q) if (m - n) % q == 0 else 0
            assert abs(s - expect) < 1e-10


# ----------------------------------------------------------------------
# serialization


@pytest.mark.parametrize("q", [1, 5, 8, 12, 45])
def test_payload_roundtrip(q):
    g = character_group(q)
    h = group_from_payload(group_to_payload(g))
    assert h.q == g.q
    assert h.primitive_indices == g.primitive_indices
    for c, d in zip(g, h):
        assert c.index == d.index
        assert c.parity == d.parity
        assert c.conductor == d.conductor
        assert np.array_equal(c.values, d.values)
    # conjugation structure survives the roundtrip
    for i in range(len(g)):
        assert h.conjugate_index(i) == g.conjugate_index(i)
