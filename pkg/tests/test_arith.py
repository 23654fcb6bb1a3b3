import cmath
import math
import random

import pytest

from dirichlet4.arith import (
    Factorization,
    ShiftTuple,
    divisor_sigma,
    divisors,
    euler_phi,
    factorize,
    kl2,
    kloosterman,
    moebius,
    phi_star,
    primes_up_to,
    q0_of,
    radical,
    ramanujan_sum,
    shifted_sigma,
)


# ---------------------------------------------------------------- oracles


def sigma_bruteforce(n, lam):
    return sum(complex(d) ** lam for d in range(1, n + 1) if n % d == 0)


def ramanujan_bruteforce(l, n):
    # define c_l(n) by the exponential sum over reduced residues
    total = 0j
    for h in range(1, l + 1):
        if math.gcd(h, l) == 1:
            total += cmath.exp(2j * cmath.pi * h * n / l)
    assert abs(total.imag) < 1e-9
    return total.real


def kloosterman_bruteforce(a, b, c):
    total = 0j
    for d in range(1, c + 1):
        if math.gcd(d, c) == 1:
            dbar = pow(d, -1, c)
            total += cmath.exp(2j * cmath.pi * (a * d + b * dbar) / c)
    return total


# ---------------------------------------------------------------- factorization


def test_factorization_roundtrip():
    for n in range(1, 400):
        f = factorize(n)
        prod = 1
        for p, e in f.pairs:
            prod *= p**e
        assert prod == n
        ds = f.divisors()
        assert ds == sorted(d for d in range(1, n + 1) if n % d == 0)


def test_radical_and_phi():
    assert radical(12) == 6
    assert radical(1) == 1
    assert euler_phi(1) == 1
    for n in range(1, 200):
        assert euler_phi(n) == sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)


def test_moebius_vs_dirichlet_inverse():
    # sum_{d|n} mu(d) = [n == 1]
    for n in range(1, 300):
        s = sum(moebius(d) for d in divisors(n))
        assert s == (1 if n == 1 else 0)


def test_primes_up_to():
    assert primes_up_to(20) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert primes_up_to(1) == []


# ---------------------------------------------------------------- divisor sums


def test_divisor_sigma_small_values():
    assert divisor_sigma(12, 1) == 28
    assert divisor_sigma(12, 0) == 6
    assert divisor_sigma(1, 3.7 + 2j) == 1


@pytest.mark.parametrize("n", [1, 2, 6, 12, 30, 64, 97, 360])
def test_divisor_sigma_complex_vs_bruteforce(n):
    lam = 0.3 - 0.7j
    assert abs(divisor_sigma(n, lam) - sigma_bruteforce(n, lam)) < 1e-12


def test_divisor_sigma_multiplicative():
    rng = random.Random(7)
    lam = -0.4 + 0.2j
    for _ in range(40):
        m = rng.randrange(1, 60)
        n = rng.randrange(1, 60)
        if math.gcd(m, n) != 1:
            continue
        lhs = divisor_sigma(m * n, lam)
        rhs = divisor_sigma(m, lam) * divisor_sigma(n, lam)
        assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(rhs))


def test_shifted_sigma_values_and_identity():
    assert shifted_sigma(4, 1, 0) == pytest.approx(7)
    rng = random.Random(3)
    for _ in range(60):
        n = rng.randrange(1, 300)
        a = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        b = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        lhs = shifted_sigma(n, a, b)
        rhs = complex(n) ** b * divisor_sigma(n, a - b)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))
        # symmetric in the two exponents
        assert abs(lhs - shifted_sigma(n, b, a)) < 1e-10 * max(1.0, abs(lhs))


# ---------------------------------------------------------------- Ramanujan sums


def test_ramanujan_against_exponential_sum():
    for l in range(1, 40):
        for n in range(0, 40):
            assert ramanujan_sum(l, n) == pytest.approx(
                ramanujan_bruteforce(l, n), abs=1e-8
            )


def test_ramanujan_special_cases():
    for l in range(1, 60):
        assert ramanujan_sum(l, 1) == moebius(l)
        assert ramanujan_sum(l, 0) == euler_phi(l)
    # c_l(n) at l | n is phi(l)
    for l in range(1, 30):
        assert ramanujan_sum(l, 7 * l) == euler_phi(l)


def test_ramanujan_multiplicative_in_l():
    rng = random.Random(11)
    for _ in range(60):
        l1 = rng.randrange(1, 30)
        l2 = rng.randrange(1, 30)
        if math.gcd(l1, l2) != 1:
            continue
        n = rng.randrange(1, 100)
        assert ramanujan_sum(l1 * l2, n) == ramanujan_sum(l1, n) * ramanujan_sum(l2, n)


# ---------------------------------------------------------------- Kloosterman


def test_kloosterman_hand_value():
    # S(1,1;3): d=1 gives e(2/3), d=2 is self-inverse giving e(4/3); sum = -1
    assert kloosterman(1, 1, 3) == pytest.approx(-1.0 + 0j, abs=1e-12)


def test_kloosterman_vs_bruteforce_and_symmetry():
    rng = random.Random(5)
    for _ in range(50):
        c = rng.randrange(1, 60)
        a = rng.randrange(0, c + 3)
        b = rng.randrange(0, c + 3)
        s = kloosterman(a, b, c)
        assert abs(s - kloosterman_bruteforce(a, b, c)) < 1e-9
        assert abs(s - kloosterman(b, a, c)) < 1e-9
        assert abs(s.imag) < 1e-9


def test_kl2_weil_bound_sample():
    for p in [3, 5, 7, 11, 13]:
        for a in range(1, p):
            assert abs(kl2(a, p)) <= 2.0 + 1e-9


def test_kloosterman_ramanujan_degeneration():
    # b = 0 reduces S(a,0;c) to the Ramanujan sum c_c(a)
    for c in range(1, 25):
        for a in range(0, 10):
            assert kloosterman(a, 0, c).real == pytest.approx(
                float(ramanujan_sum(c, a)), abs=1e-9
            )


# ---------------------------------------------------------------- phi_star, q0


def test_phi_star_small_table():
    # number of primitive characters: 1, 0, 1, 1, 3, 0, 5, 2, 3, 0 ...
    expected = {1: 1, 2: 0, 3: 1, 4: 1, 5: 3, 6: 0, 7: 5, 8: 2, 9: 4, 10: 0, 12: 1}
    for q, v in expected.items():
        assert phi_star(q) == v


def test_phi_star_is_moebius_phi_convolution():
    for q in range(1, 400):
        conv = sum(moebius(q // d) * euler_phi(d) for d in divisors(q))
        assert phi_star(q) == conv


def test_phi_star_sums_to_phi():
    # every character mod q has a unique conductor d | q
    for q in range(1, 300):
        assert sum(phi_star(d) for d in divisors(q)) == euler_phi(q)


def test_phi_star_vanishes_iff_2_mod_4():
    for q in range(1, 500):
        assert (phi_star(q) == 0) == (q % 4 == 2)


def test_q0():
    assert q0_of(12) == 2
    assert q0_of(1) == 1
    for p in [2, 3, 5, 7, 97]:
        assert q0_of(p) == 1
    # radical 30: divisors below sqrt(30) are 1,2,3,5
    assert q0_of(30) == 5
    assert q0_of(900) == 5


# ---------------------------------------------------------------- ShiftTuple


def test_shift_tuple_validation():
    with pytest.raises(ValueError):
        ShiftTuple(0.3, 0.0, 0.0, 0.0)
    st = ShiftTuple(0.01 + 0.002j, -0.013, 0.007j, 0.11)
    assert st.separation() > 0


def test_shift_tuple_swapped_negated_involution():
    st = ShiftTuple(0.01, 0.02j, -0.015, 0.004 - 0.003j)
    back = st.swapped_negated().swapped_negated()
    assert back.as_tuple() == st.as_tuple()
    mirrored = st.swapped_negated()
    assert mirrored.alpha == -st.gamma
    assert mirrored.delta == -st.beta
    assert mirrored.separation() == pytest.approx(st.separation())


def test_shift_tuple_scaled():
    st = ShiftTuple(0.2, -0.2, 0.1j, -0.1j)
    small = st.scaled(0.05)
    assert abs(small.alpha - 0.01) < 1e-15
    assert small.separation() == pytest.approx(0.05 * st.separation())
