import cmath
import math

import numpy as np
import pytest

from dirichlet4.arith import divisor_sigma, kl2
from dirichlet4.divisorlab import (
    QdpInstance,
    RationalPoint,
    SmoothWindow,
    _bessel_transform,
    _divisor_counts,
    _kl2_table,
    _varpi_spline,
    bilinear_kl_sum,
    divisor_afe_residual,
    estermann_fe_residual,
    estermann_hurwitz,
    estermann_series,
    estermann_series_tail,
    lemma31_residual,
    lemma53_residual,
    qdp_bruteforce,
    qdp_error_bound,
    qdp_mainterm,
    ramanujan_expansion_residual,
    varpi,
    voronoi_residual,
)
from dirichlet4.specfun import zeta


# ----------------------------------------------------------------------
# type layer


class TestRationalPoint:
    def test_normalizes_numerator(self):
        assert RationalPoint(7, 5) == RationalPoint(2, 5)
        assert RationalPoint(-1, 4).h == 3

    def test_rejects_unreduced_and_bad_denominator(self):
        with pytest.raises(ValueError):
            RationalPoint(2, 4)
        with pytest.raises(ValueError):
            RationalPoint(1, 0)

    def test_unit_denominator(self):
        pt = RationalPoint(6, 1)
        assert pt.h == 0 and pt.l == 1
        assert pt.inverse_point() == pt
        assert pt.conjugate_point() == pt

    def test_conjugate_negates_mod_l(self):
        pt = RationalPoint(3, 7)
        assert pt.conjugate_point() == RationalPoint(4, 7)
        assert pt.conjugate_point().conjugate_point() == pt

    def test_inverse_point(self):
        for h, l in ((1, 2), (2, 5), (5, 12), (10, 13)):
            hb = RationalPoint(h, l).inverse_point().h
            assert (h * hb) % l == 1


class TestSmoothWindow:
    def test_support_and_boundary(self):
        w = SmoothWindow(scale=3.0)
        assert w.support() == (3.0, 6.0)
        assert w.unit(1.0) == 0.0 and w.unit(2.0) == 0.0
        assert w.unit(0.5) == 0.0 and w.unit(2.5) == 0.0
        # all derivatives vanish at the endpoints: the value is already
        # below double underflow a hair inside the support
        assert w.unit(1.0001) == 0.0
        assert w.unit(1.999) < 1e-100

    def test_peak_and_amplitude(self):
        w = SmoothWindow(scale=2.0, amplitude=2.5)
        assert w(3.0) == 2.5
        assert w.unit(1.5) == 2.5
        assert SmoothWindow(amplitude=0.0)(np.linspace(0, 3, 50)).max() == 0.0

    def test_plateau_at_large_q(self):
        w = SmoothWindow(Q=4.0)
        # rise width 1/8, so [1.125, 1.875] sits exactly on the peak
        assert np.all(w.unit(np.linspace(1.2, 1.8, 31)) == 1.0)
        assert w.unit(1.05) < 1.0

    def test_derivative_scales_linearly_in_q(self):
        u = np.linspace(1.0, 2.0, 200001)
        du = u[1] - u[0]

        def max_slope(Q):
            vals = SmoothWindow(Q=Q).unit(u)
            return np.max(np.abs(np.diff(vals))) / du

        s1, s4 = max_slope(1.0), max_slope(4.0)
        assert s4 / s1 == pytest.approx(4.0, rel=5e-3)

    def test_validations(self):
        with pytest.raises(ValueError):
            SmoothWindow(scale=0.0)
        with pytest.raises(ValueError):
            SmoothWindow(Q=0.5)


class TestQdpInstance:
    def _ok(self, **kw):
        base = dict(H=1.5, M1=3.9, M2=3.9, N1=3.9, N2=3.9, d=1, q=11,
                    sign=1, window=SmoothWindow())
        base.update(kw)
        return QdpInstance(**base)

    def test_valid_instance_builds(self):
        inst = self._ok()
        assert inst.H == 1.5 and inst.sign == 1

    def test_rejects_small_scales(self):
        with pytest.raises(ValueError):
            self._ok(M2=0.5)

    def test_rejects_d_not_dividing_q(self):
        with pytest.raises(ValueError):
            self._ok(d=2)

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            self._ok(sign=0)

    def test_rejects_unbalanced_pair(self):
        with pytest.raises(ValueError):
            self._ok(M1=9.0, M2=3.9)

    def test_rejects_oversized_h(self):
        with pytest.raises(ValueError):
            self._ok(H=2.0)

    def test_rejects_scaled_window(self):
        with pytest.raises(ValueError):
            self._ok(window=SmoothWindow(scale=2.0))


# ----------------------------------------------------------------------
# twisted divisor series


def _series_brute(s, lam, pt, n):
    roots = np.exp(2j * math.pi * np.arange(pt.l) / pt.l)
    return sum(divisor_sigma(k, lam) * k ** (-s) * roots[(k * pt.h) % pt.l]
               for k in range(1, n + 1))


class TestEstermannSeries:
    def test_matches_direct_summation(self):
        s, lam = 2.0 + 0.7j, 0.4 + 0.1j
        for h, l in ((0, 1), (1, 3), (2, 5)):
            pt = RationalPoint(h, l)
            fast = estermann_series(s, lam, pt, n_terms=1000)
            slow = _series_brute(s, lam, pt, 1000)
            assert abs(fast - slow) <= 1e-13 * (1.0 + abs(slow))

    def test_untwisted_is_zeta_square(self):
        # sigma_0(n) = d(n), so the l = 1 series is zeta(s)^2; the
        # auto-ladder tops out at 2^23 terms here and the certified tail
        # envelope is what bounds the actual defect
        val = estermann_series(2.5, 0.0, RationalPoint(0, 1))
        diff = abs(val - zeta(2.5) ** 2)
        assert diff <= estermann_series_tail(2.5, 0.0, 1 << 23)
        assert diff <= 1e-9

    def test_shifted_is_zeta_product(self):
        val = estermann_series(2.5, 0.3, RationalPoint(0, 1), n_terms=1 << 22)
        diff = abs(val - zeta(2.5) * zeta(2.2))
        assert diff <= estermann_series_tail(2.5, 0.3, 1 << 22)

    def test_rejects_slow_regimes(self):
        with pytest.raises(ValueError):
            estermann_series(1.2, 0.0, RationalPoint(0, 1), n_terms=100)
        with pytest.raises(ValueError):
            estermann_series(1.6, 0.4, RationalPoint(0, 1), n_terms=100)

    def test_tail_certificate(self):
        t20 = estermann_series_tail(2.5, 0.0, 1 << 20)
        t22 = estermann_series_tail(2.5, 0.0, 1 << 22)
        assert 0.0 < t22 < t20
        with pytest.raises(ValueError):
            estermann_series_tail(1.3, 0.4, 100)


class TestEstermannHurwitz:
    def test_unit_denominator_is_zeta_product(self):
        s, lam = 3.5 + 1.0j, 0.25
        val = estermann_hurwitz(s, lam, RationalPoint(0, 1))
        assert abs(val - zeta(s) * zeta(s - lam)) <= 1e-12

    def test_overlaps_series_within_certificate(self):
        # in the common half-plane the continued value and the partial
        # sum must differ by no more than the certified truncation tail
        s, lam, n = 2.5, 0.35, 1 << 20
        cert = estermann_series_tail(s, lam, n)
        for l in range(1, 9):
            for h in range(l):
                if math.gcd(h, l) != 1:
                    continue
                pt = RationalPoint(h, l)
                diff = abs(estermann_series(s, lam, pt, n_terms=n)
                           - estermann_hurwitz(s, lam, pt))
                assert diff <= cert

    def test_overlap_tight_in_fast_regime(self):
        # deeper in the half-plane the tail is ~1e-11, so the two routes
        # must agree to solver accuracy
        s, lam, n = 3.5, 0.3, 1 << 18
        for l in range(1, 9):
            for h in range(l):
                if math.gcd(h, l) != 1:
                    continue
                pt = RationalPoint(h, l)
                diff = abs(estermann_series(s, lam, pt, n_terms=n)
                           - estermann_hurwitz(s, lam, pt))
                assert diff <= 1e-9

    def test_conjugate_symmetry(self):
        s, lam = 1.3 + 2.0j, 0.3 + 0.4j
        for h, l in ((1, 3), (2, 7), (5, 8)):
            pt = RationalPoint(h, l)
            lhs = estermann_hurwitz(s.conjugate(), lam.conjugate(),
                                    pt.conjugate_point())
            rhs = estermann_hurwitz(s, lam, pt).conjugate()
            assert abs(lhs - rhs) <= 1e-9 * (1.0 + abs(rhs))

    def test_pole_guard(self):
        with pytest.raises(ValueError):
            estermann_hurwitz(1.0, 0.3, RationalPoint(1, 3))
        with pytest.raises(ValueError):
            estermann_hurwitz(1.3, 0.3, RationalPoint(1, 3))

    def test_residues_at_both_poles(self):
        lam, eps = 0.3, 1e-6
        for h, l in ((1, 3), (2, 5), (3, 7)):
            pt = RationalPoint(h, l)
            r1 = eps * estermann_hurwitz(1.0 + eps, lam, pt)
            assert abs(r1 - l ** (lam - 1.0) * zeta(1.0 - lam)) <= 1e-4
            r2 = eps * estermann_hurwitz(1.0 + lam + eps, lam, pt)
            assert abs(r2 - l ** (-lam - 1.0) * zeta(1.0 + lam)) <= 1e-4


class TestEstermannFE:
    def test_residual_small_at_l3(self):
        assert estermann_fe_residual(0.2 + 1.5j, 0.3, RationalPoint(1, 3)) <= 1e-10

    def test_residual_small_at_l1(self):
        assert estermann_fe_residual(0.2 + 1.5j, 0.3, RationalPoint(0, 1)) <= 1e-10

    def test_residual_random_sweep(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            l = int(rng.integers(2, 13))
            units = [x for x in range(1, l + 1) if math.gcd(x, l) == 1]
            h = units[int(rng.integers(0, len(units)))]
            lam = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3))
            s = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.5, 4.0))
            pt = RationalPoint(h % l, l)
            lhs = estermann_hurwitz(0.5 + s, lam, pt)
            assert estermann_fe_residual(s, lam, pt) <= 1e-7 * (1.0 + abs(lhs))

    def test_gamma_pole_guard(self):
        with pytest.raises(ValueError):
            estermann_fe_residual(0.5, 0.3, RationalPoint(1, 3))


# ----------------------------------------------------------------------
# Mellin window of the divisor approximate functional equation


class TestVarpi:
    def test_small_x_composition(self):
        # as x -> 0 the contour closes left over the poles at w = 0 and
        # w = lam; the leftover shifted integral is O(x^A) for every A
        for lam in (0.3, 0.3 + 0.2j, -0.4):
            x = 1e-6
            want = (zeta(1.0 - lam)
                    + x ** (-lam) * cmath.exp(lam * lam) / lam)
            got = varpi(lam, x, 1.0)
            assert abs(got - want) <= 5e-5 * (1.0 + abs(want))

    def test_decay_for_large_x(self):
        assert abs(varpi(0.3, 1e3, 0.5 * math.log(1e3))) <= 1e-6
        assert abs(varpi(0.3, 1e4, 0.5 * math.log(1e4))) <= 1e-8

    def test_contour_independence(self):
        for a in (0.5, 1.0, 2.0, 3.5):
            assert abs(varpi(0.3, 2.0, a) - varpi(0.3, 2.0, 1.0)) <= 1e-8

    def test_error_report(self):
        val, err = varpi(0.3, 2.0, 1.0, with_err=True)
        assert err >= 0.0
        assert val == varpi(0.3, 2.0, 1.0)

    def test_validations(self):
        with pytest.raises(ValueError):
            varpi(0.3, -1.0, 1.0)
        with pytest.raises(ValueError):
            varpi(0.6, 2.0, 0.5)

    def test_spline_table_matches_pointwise(self):
        lam = 0.3 + 0.2j
        sp = _varpi_spline(lam, -3.0, 3.0)
        for lnx in np.linspace(-2.8, 2.8, 9):
            direct = varpi(lam, math.exp(lnx), max(0.75, 0.5 * lnx))
            tabled = complex(sp(lnx))
            assert abs(tabled - direct) <= 1e-9 * (1.0 + abs(direct))


class TestDivisorAfe:
    def test_smallest_n(self):
        assert divisor_afe_residual(1, 0.3) <= 1e-7

    def test_composite_and_prime_n(self):
        assert divisor_afe_residual(12, 0.3) <= 1e-6 * abs(divisor_sigma(12, 0.3))
        assert divisor_afe_residual(97, 0.3) <= 1e-6 * abs(divisor_sigma(97, 0.3))

    def test_shift_variants(self):
        for lam in (0.3 + 0.2j, -0.4):
            resid = divisor_afe_residual(30, lam)
            assert resid <= 1e-6 * abs(divisor_sigma(30, lam))

    def test_default_cutoff_beats_floor(self):
        n = 97
        floor_l = int(math.ceil(20.0 * math.sqrt(n)))
        at_floor = divisor_afe_residual(n, 0.3, l_max=floor_l)
        assert divisor_afe_residual(n, 0.3) <= at_floor / 100.0

    def test_validations(self):
        with pytest.raises(ValueError):
            divisor_afe_residual(0, 0.3)
        with pytest.raises(ValueError):
            divisor_afe_residual(5, 0.01)
        with pytest.raises(ValueError):
            divisor_afe_residual(5, 0.6)
        with pytest.raises(ValueError):
            divisor_afe_residual(97, 0.3, l_max=50)


class TestRamanujanExpansion:
    def test_small_n(self):
        assert ramanujan_expansion_residual(1, -0.7) <= 1e-4
        assert ramanujan_expansion_residual(6, -0.9) <= 1e-3

    def test_classical_point(self):
        # alpha = -1 is sigma_{-1}(n) = (pi^2/6) sum c_l(n)/l^2, the
        # textbook instance; convergence is fastest here
        assert ramanujan_expansion_residual(2, -1.0) <= 1e-4

    def test_shallow_alpha_warns(self):
        with pytest.warns(UserWarning):
            ramanujan_expansion_residual(2, -0.1)

    def test_validations(self):
        with pytest.raises(ValueError):
            ramanujan_expansion_residual(0, -0.7)
        with pytest.raises(ValueError):
            ramanujan_expansion_residual(2, 0.2)
        with pytest.raises(ValueError):
            ramanujan_expansion_residual(2, -0.7, l_max=5000)


class TestLemma53:
    def test_unit_modulus(self):
        assert lemma53_residual(2.0, 0.0, 1) <= 1e-4

    def test_prime_moduli_fast_regime(self):
        assert lemma53_residual(2.5, 0.3, 3) <= 1e-6
        assert lemma53_residual(2.5, 0.3, 5) <= 1e-6

    def test_slow_regime_still_converges(self):
        # near the abscissa the cutoff error decays like f_max^(1-s);
        # the identity still verifies, only coarsely
        assert lemma53_residual(1.5, -0.2, 5) <= 2e-3

    def test_residual_shrinks_with_cutoffs(self):
        halved = lemma53_residual(2.0, 0.0, 1, l_max=15000, f_max=150000)
        assert lemma53_residual(2.0, 0.0, 1) < halved

    def test_validations(self):
        with pytest.raises(ValueError):
            lemma53_residual(1.2, 0.0, 1)
        with pytest.raises(ValueError):
            lemma53_residual(2.0, -0.6, 1)
        with pytest.raises(ValueError):
            lemma53_residual(2.0, 0.0, 4)
        with pytest.raises(ValueError):
            lemma53_residual(2.0, 0.0, 6)


class TestLemma31:
    def test_prime_moduli(self):
        for q in (2, 3, 7, 13, 47):
            for s in (0.5, 1.7, 0.5 + 3.2j):
                assert lemma31_residual(q, s) <= 1e-10

    def test_prime_powers(self):
        for q in (4, 8, 9, 27, 25, 49):
            assert lemma31_residual(q, 0.5 + 1.0j) <= 1e-10

    def test_composite_moduli(self):
        for q in (12, 45, 60, 210):
            assert lemma31_residual(q, 0.8 - 0.5j) <= 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            lemma31_residual(1, 0.5)


# ----------------------------------------------------------------------
# quadratic divisor count


def _hand_instance(sign=1):
    return QdpInstance(H=1.5, M1=3.9, M2=3.9, N1=3.9, N2=3.9, d=1, q=11,
                       sign=sign, window=SmoothWindow())


class TestQdp:
    def test_zero_window_counts_zero(self):
        inst = QdpInstance(H=1.5, M1=3.9, M2=3.9, N1=3.9, N2=3.9, d=1, q=11,
                           sign=1, window=SmoothWindow(amplitude=0.0))
        assert qdp_bruteforce(inst) == 0.0
        assert qdp_mainterm(inst) == 0.0

    def test_hand_enumeration(self):
        # support boxes admit h = 2 only and the single product split
        # 30 - 28 = 2 with 30 = 5*6 and 28 = 4*7 (each in both orders),
        # all factors coprime to 11: four tuples total
        inst = _hand_instance()
        w = inst.window
        wm = 2.0 * float(w(5 / 3.9) * w(6 / 3.9))
        wn = 2.0 * float(w(4 / 3.9) * w(7 / 3.9))
        hand = float(w(2 / 1.5)) * wm * wn
        for method in ("fft", "naive"):
            got = qdp_bruteforce(inst, method)
            assert got == pytest.approx(hand, rel=1e-12)
        assert hand == pytest.approx(1.99622791e-4, rel=1e-7)

    def test_fft_matches_naive(self):
        inst = QdpInstance(H=2.3, M1=9.5, M2=9.5, N1=9.5, N2=9.5, d=1, q=7,
                           sign=1, window=SmoothWindow())
        bf = qdp_bruteforce(inst, "fft")
        bn = qdp_bruteforce(inst, "naive")
        assert abs(bf - bn) <= 1e-12 * (1.0 + abs(bn))

    def test_sign_swap_bijection(self):
        # swapping the m and n axes turns every +h solution into a -h one
        w = SmoothWindow()
        plus = QdpInstance(H=2.5, M1=8, M2=12, N1=6, N2=13, d=1, q=7,
                           sign=1, window=w)
        minus = QdpInstance(H=2.5, M1=6, M2=13, N1=8, N2=12, d=1, q=7,
                            sign=-1, window=w)
        bp, bm = qdp_bruteforce(plus), qdp_bruteforce(minus)
        assert abs(bp - bm) <= 1e-13 * (1.0 + abs(bp))

    def test_mainterm_tracks_bruteforce(self):
        inst = QdpInstance(H=122.5, M1=35, M2=35, N1=35, N2=35, d=1, q=5,
                           sign=1, window=SmoothWindow())
        b, m = qdp_bruteforce(inst), qdp_mainterm(inst)
        assert b / m == pytest.approx(1.0, abs=0.01)
        assert abs(b - m) <= 0.01 * qdp_error_bound(inst)

    def test_mainterm_full_modulus_divisibility(self):
        # d = q thins h to multiples of q; relative accuracy at this desk
        # scale is coarser but well inside the reference envelope
        inst = QdpInstance(H=122.5, M1=35, M2=35, N1=35, N2=35, d=5, q=5,
                           sign=-1, window=SmoothWindow())
        b, m = qdp_bruteforce(inst), qdp_mainterm(inst)
        assert b / m == pytest.approx(1.0, abs=0.15)
        assert abs(b - m) <= 0.5 * qdp_error_bound(inst)

    def test_minus_forms_agree(self):
        inst = QdpInstance(H=2.5, M1=6, M2=13, N1=8, N2=12, d=1, q=7,
                           sign=-1, window=SmoothWindow())
        md = qdp_mainterm(inst, minus_form="direct")
        ms = qdp_mainterm(inst, minus_form="shifted")
        assert abs(md - ms) <= 1e-12 * (1.0 + abs(md))

    def test_shifted_form_needs_minus_sign(self):
        with pytest.raises(ValueError):
            qdp_mainterm(_hand_instance(sign=1), minus_form="shifted")
        with pytest.raises(ValueError):
            qdp_mainterm(_hand_instance(sign=1), minus_form="other")

    def test_bruteforce_guards(self):
        big = QdpInstance(H=10.0, M1=4000, M2=4000, N1=3.9, N2=3.9, d=1,
                          q=11, sign=1, window=SmoothWindow())
        with pytest.raises(ValueError):
            qdp_bruteforce(big)
        with pytest.raises(ValueError):
            qdp_bruteforce(_hand_instance(), method="exact")


# ----------------------------------------------------------------------
# Voronoi summation


class TestVoronoi:
    def test_untwisted(self):
        bump = SmoothWindow(scale=500.0)
        resid, parts = voronoi_residual(0, 1, bump, with_parts=True)
        assert resid <= 1e-7 * (1.0 + abs(parts["lhs"]))

    def test_twisted_c3(self):
        bump = SmoothWindow(scale=1000.0)
        resid, parts = voronoi_residual(1, 3, bump, with_parts=True)
        assert resid <= 1e-6 * (1.0 + abs(parts["lhs"]))

    def test_larger_modulus(self):
        bump = SmoothWindow(scale=10000.0)
        resid, parts = voronoi_residual(7, 10, bump, with_parts=True)
        assert resid <= 1e-6 * (1.0 + abs(parts["lhs"]))

    def test_parts_report(self):
        bump = SmoothWindow(scale=500.0)
        resid, parts = voronoi_residual(3, 4, bump, with_parts=True)
        assert set(parts) == {"lhs", "main", "dual", "trunc_err",
                              "quad_err", "n_dual"}
        assert resid == abs(parts["lhs"] - parts["main"] - parts["dual"])
        assert parts["n_dual"] % 8 == 0

    def test_truncation_tail_is_negligible(self):
        # sum the 50 dual terms beyond the adaptive stopping point; they
        # must be far below the achieved residual scale
        bump = SmoothWindow(scale=1000.0)
        c = 3
        _, parts = voronoi_residual(1, c, bump, with_parts=True)
        nd = parts["n_dual"]
        assert nd < 512  # stopped by quietness, not the cap
        dc = _divisor_counts(nd + 51)
        tail = 0.0
        for n in range(nd + 1, nd + 51):
            y = n / c ** 2
            tail += dc[n] * (2.0 * math.pi * abs(_bessel_transform(bump, y, "Y"))
                             + 4.0 * abs(_bessel_transform(bump, y, "K"))) / c
        assert tail <= 1e-7 * (1.0 + abs(parts["lhs"]))

    def test_transform_size_bound(self):
        # |r~(y)| <= C * N with a modest constant across the dual range
        N = 500.0
        bump = SmoothWindow(scale=N)
        for y in np.geomspace(0.02 / N, 100.0 / N, 25):
            ty = 2.0 * math.pi * abs(_bessel_transform(bump, y, "Y"))
            tk = 4.0 * abs(_bessel_transform(bump, y, "K"))
            assert max(ty, tk) <= 10.0 * N

    def test_validations(self):
        bump = SmoothWindow(scale=500.0)
        with pytest.raises(ValueError):
            voronoi_residual(1, 13, bump)
        with pytest.raises(ValueError):
            voronoi_residual(2, 4, bump)
        with pytest.raises(ValueError):
            voronoi_residual(1, 3, SmoothWindow(scale=8.0))
        with pytest.raises(ValueError):
            voronoi_residual(1, 3, SmoothWindow(scale=3e4))


# ----------------------------------------------------------------------
# bilinear Kloosterman sums


class TestBilinearKl:
    def test_value_inside_reference_envelope(self):
        v = bilinear_kl_sum(101, 50.0, 50.0, 1, SmoothWindow())
        bound = math.sqrt(101) + 2500.0 / math.sqrt(101)
        assert abs(v) <= 20.0 * bound
        assert v == pytest.approx(-121.649601 + 0.0j, rel=1e-6)

    def test_value_is_real(self):
        v = bilinear_kl_sum(101, 50.0, 50.0, 3, SmoothWindow())
        assert v.imag == 0.0

    def test_zero_window(self):
        assert bilinear_kl_sum(101, 50.0, 50.0, 1,
                               SmoothWindow(amplitude=0.0)) == 0.0

    def test_table_matches_scalar_kloosterman(self):
        table = _kl2_table(13)
        for k in range(13):
            assert abs(table[k] - kl2(k, 13)) <= 1e-12

    def test_validations(self):
        w = SmoothWindow()
        with pytest.raises(ValueError):
            bilinear_kl_sum(100, 50.0, 50.0, 1, w)
        with pytest.raises(ValueError):
            bilinear_kl_sum(503, 50.0, 50.0, 1, w)
        with pytest.raises(ValueError):
            bilinear_kl_sum(101, 50.0, 50.0, 0, w)
        with pytest.raises(ValueError):
            bilinear_kl_sum(101, 4000.0, 4000.0, 1, w)
        with pytest.raises(ValueError):
            bilinear_kl_sum(101, 50.0, 50.0, 1, SmoothWindow(scale=2.0))
