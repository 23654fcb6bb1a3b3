"""Dirichlet L-values and the shifted approximate functional equation.

The pieces, in the order they stack:

  * l_value: L(s, chi) through the Hurwitz decomposition
    L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q), with an in-memory
    cache and conjugation shortcuts.
  * completed_lambda / fe_residual: the completed form
    (q/pi)^{s/2} Gamma((s+a)/2) L(s, chi) and the functional-equation
    defect, the basic correctness oracle for the L-value route.
  * GammaKernelSpec: the even entire kernel G(s) = P(s) exp(s^2) used
    to open the product of four shifted L-values into two Dirichlet
    series. P is a product over a prescribed zero set: empty ("plain"),
    the half-sums of cross shifts ("halfsum"), or those together with
    the strip points 1/2 +- shift +- it ("strip").
  * g_factor / v_weight / x_factor: the Gamma-ratio weight, the contour
    integral V(x) = (1/2 pi i) int G(s)/s g(s) x^{-s} ds, and the root
    factors X that relate the two halves of the expansion.
  * afe_residual: both halves of the expansion summed against an
    independent L-value product; the module's strongest oracle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import ShiftTuple
from .characters import DirichletCharacter, character_group
from .specfun import (
    QuadratureSpec,
    digamma,
    hurwitz_zeta,
    line_nodes,
    log_gamma,
    vertical_line_integral,
)

__all__ = [
    "GammaKernelSpec",
    "LValueRecord",
    "l_value",
    "l_values_vector",
    "l_value_cache_clear",
    "l_value_cache_stats",
    "completed_lambda",
    "fe_residual",
    "g_factor",
    "v_weight",
    "v_weight_grid",
    "tilde_v_weight",
    "x_factor",
    "x_factor4",
    "afe_residual",
    "afe_parts",
]

_LOG_PI = math.log(math.pi)

KERNEL_VARIANTS = ("plain", "halfsum", "strip")


# ----------------------------------------------------------------------
# the even kernel G


def _dedup(points, tol=1e-12):
    kept: list[complex] = []
    for z in points:
        if all(abs(z - w) > tol for w in kept):
            kept.append(z)
    return kept


@dataclass(frozen=True)
class GammaKernelSpec:
    """Shift tuple, spectral parameter t, parity, and the zero pattern of
    the polynomial part P of G(s) = P(s) exp(s^2).

    variant "plain" keeps P = 1. "halfsum" zeros P at the half-sums
    +-(a+c)/2, +-(a+d)/2, +-(b+c)/2, +-(b+d)/2 so that the expansion's
    residue terms at those points drop. "strip" additionally zeros P at
    1/2 +- shift +- it and the negatives, for the t-averaged analysis.
    Zeros closer than 1e-12 are merged; every zero must stay at least
    1e-6 from the origin, so genuinely zero shifts are out of scope and
    are reached by extrapolation instead.
    """

    shifts: ShiftTuple
    t: float
    parity: int
    variant: str = "plain"
    zero_set: tuple = field(init=False)

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError(f"parity must be 0 or 1, got {self.parity}")
        if self.variant not in KERNEL_VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        a, b, c, d = self.shifts.as_tuple()
        pts: list[complex] = []
        if self.variant in ("halfsum", "strip"):
            half = [(a + c) / 2, (a + d) / 2, (b + c) / 2, (b + d) / 2]
            for z in half:
                pts.extend([z, -z])
        if self.variant == "strip":
            it = 1j * self.t
            for sh in (a, b, c, d):
                for u in (0.5 + sh, 0.5 - sh):
                    for z in (u + it, u - it):
                        pts.extend([z, -z])
        pts = _dedup(pts)
        for z in pts:
            if abs(z) < 1e-6:
                raise ValueError(
                    f"kernel zero {z} too close to the origin; "
                    "shift the parameters or extrapolate"
                )
        object.__setattr__(self, "zero_set", tuple(pts))

    def _half_zeros(self):
        # one representative per +-z pair, for the even product
        kept: list[complex] = []
        for z in self.zero_set:
            if all(abs(z + w) > 1e-12 for w in kept):
                kept.append(z)
        return kept

    def polynomial(self, s):
        """P(s) = prod (1 - s^2 / z^2) over the deduplicated zero pairs."""
        s = np.asarray(s, dtype=complex)
        out = np.ones_like(s)
        for z in self._half_zeros():
            out = out * (1 - s * s / (z * z))
        return out if out.shape else complex(out)

    def kernel(self, s):
        """G(s) = P(s) exp(s^2); even, G(0) = 1, vanishing on zero_set."""
        s = np.asarray(s, dtype=complex)
        out = self.polynomial(s) * np.exp(s * s)
        return out if out.shape else complex(out)

    def swapped_negated(self) -> "GammaKernelSpec":
        return GammaKernelSpec(self.shifts.swapped_negated(), self.t,
                               self.parity, self.variant)


# ----------------------------------------------------------------------
# L-values


@dataclass(frozen=True)
class LValueRecord:
    q: int
    index: int
    s: complex
    value: complex
    method: str
    err_estimate: float


_LCACHE: dict[tuple, LValueRecord] = {}


def _skey(s: complex) -> tuple:
    return (round(s.real, 12), round(s.imag, 12))


def l_value_cache_clear() -> None:
    _LCACHE.clear()


def l_value_cache_stats() -> dict:
    return {"entries": len(_LCACHE)}


def _store(q, index, s, value, err):
    rec = LValueRecord(q, index, complex(s), complex(value), "hurwitz", err)
    _LCACHE[(q, index) + _skey(s)] = rec
    return rec


def l_value(s: complex, chi: DirichletCharacter) -> complex:
    """L(s, chi) = q^{-s} sum_{a=1..q} chi(a) zeta(s, a/q).

    Cached by (q, index, s rounded to 1e-12); a miss first tries the
    conjugate key, since L(conj s, conj chi) = conj L(s, chi).
    """
    s = complex(s)
    q = chi.q
    key = (q, chi.index) + _skey(s)
    rec = _LCACHE.get(key)
    if rec is not None:
        return rec.value

    group = character_group(q)
    jbar = group.conjugate_index(chi.index)
    conj_key = (q, jbar) + _skey(s.conjugate())
    rec = _LCACHE.get(conj_key)
    if rec is not None:
        value = rec.value.conjugate()
        _store(q, chi.index, s, value, rec.err_estimate)
        return value

    if q == 1:
        value = complex(hurwitz_zeta(s, 1.0))
    elif abs(s - 1) < 1e-13:
        if chi.index == 0:
            raise ValueError("L(s, chi) has a pole at s = 1 for principal chi")
        # each zeta(s, a/q) = 1/(s-1) - digamma(a/q) + O(s-1); the poles
        # cancel against sum chi(a) = 0
        vals = np.array([-digamma(a / q) for a in range(1, q + 1)])
        value = complex(np.dot(chi.values[np.r_[1:q, 0]], vals)) / q
    else:
        avec = np.arange(1, q + 1) / q
        zvec = hurwitz_zeta(s, avec)
        value = q ** (-s) * complex(np.dot(chi.values[np.r_[1:q, 0]], zvec))
    err = 1e-12 * (1 + math.sqrt(q))
    _store(q, chi.index, s, value, err)
    return value


def l_values_vector(s: complex, q: int, indices=None) -> np.ndarray:
    """All L(s, chi) mod q in one Hurwitz sweep; one zeta vector feeds
    every character through the value-table matvec."""
    s = complex(s)
    group = character_group(q)
    if indices is None:
        indices = list(range(len(group)))
    if q == 1:
        z = complex(hurwitz_zeta(s, 1.0))
        out = np.array([z])
    else:
        avec = np.arange(1, q + 1) / q
        zvec = hurwitz_zeta(s, avec)
        table = group.value_matrix(indices)[:, np.r_[1:q, 0]]
        out = q ** (-s) * (table @ zvec)
    err = 1e-12 * (1 + math.sqrt(q))
    for row, idx in enumerate(indices):
        _store(q, idx, s, out[row], err)
    return out


# ----------------------------------------------------------------------
# completed form and functional equation


def _require_primitive(chi: DirichletCharacter):
    if not chi.is_primitive:
        raise ValueError(
            f"character index {chi.index} mod {chi.q} has conductor "
            f"{chi.conductor}; a primitive character is required"
        )


def completed_lambda(s: complex, chi: DirichletCharacter) -> complex:
    """(q/pi)^{s/2} Gamma((s + parity)/2) L(s, chi), primitive chi only."""
    _require_primitive(chi)
    s = complex(s)
    log_pref = 0.5 * s * (math.log(chi.q) - _LOG_PI)
    return cmath.exp(log_pref + log_gamma((s + chi.parity) / 2)) * l_value(s, chi)


def fe_residual(s: complex, chi: DirichletCharacter) -> float:
    """|Lambda(s, chi) - i^{-a} q^{-1/2} tau(chi) Lambda(1-s, conj chi)|."""
    from .characters import gauss_sum

    _require_primitive(chi)
    group = character_group(chi.q)
    chibar = group.character(group.conjugate_index(chi.index))
    root = (-1j) ** chi.parity * gauss_sum(chi) / math.sqrt(chi.q)
    lhs = completed_lambda(s, chi)
    rhs = root * completed_lambda(1 - s, chibar)
    return abs(lhs - rhs)


# ----------------------------------------------------------------------
# the Gamma-ratio weight g and the contour weight V


def _gamma_args(spec: GammaKernelSpec, s):
    a, b, c, d = spec.shifts.as_tuple()
    it = 1j * spec.t
    pa = spec.parity
    return (
        (0.5 + a + s + it + pa) / 2,
        (0.5 + b + s + it + pa) / 2,
        (0.5 + c + s - it + pa) / 2,
        (0.5 + d + s - it + pa) / 2,
    )


def _check_poles(args):
    for z in np.atleast_1d(np.asarray(args, dtype=complex)).ravel():
        n = round(z.real)
        if n <= 0 and abs(z - n) < 1e-12:
            raise ValueError(f"gamma argument {z} is at a pole")


def g_factor(s, spec: GammaKernelSpec):
    """pi^{-2s} times the ratio of the four shifted Gamma factors at s
    to the same factors at 0. Vectorized over s."""
    s_arr = np.asarray(s, dtype=complex)
    num_args = _gamma_args(spec, s_arr)
    den_args = _gamma_args(spec, 0.0)
    _check_poles(num_args)
    _check_poles(den_args)
    lg = np.vectorize(log_gamma, otypes=[complex])
    expo = -2 * s_arr * _LOG_PI
    # paired differences keep the exponent exactly zero at s = 0
    for na, da in zip(num_args, den_args):
        expo = expo + (lg(na) - log_gamma(da))
    out = np.exp(expo)
    return out if out.shape else complex(out)


def _auto_abscissa(x: float) -> float:
    # keep the pole at s = 0 at least a panel away from the contour,
    # and keep x^{-abscissa} from inflating the integrand scale
    if x < 1e-2:
        return 0.3
    if x > 10.0:
        return min(3.0, 0.5 + 0.25 * math.log(x))
    return 1.0


def _default_quad(abscissa: float) -> QuadratureSpec:
    return QuadratureSpec(abscissa=abscissa, height_cut=7.0, panel=0.5,
                          nodes_per_panel=16, tol=1e-11)


def v_weight(x: float, spec: GammaKernelSpec, quad: QuadratureSpec | None = None,
             with_err: bool = False):
    """V(x) = (1/2 pi i) int_(c) G(s)/s g(s) x^{-s} ds.

    The integrand is entire in Re s > 0 apart from nothing at all, so
    any abscissa c > 0 gives the same value; by default c is chosen
    from x to keep the integrand scale small. As x -> 0 the value tends
    to G(0) g(0) = 1; for x >> t^2 it decays faster than any power.
    """
    if x <= 0:
        raise ValueError(f"v_weight needs x > 0, got {x}")
    if spec.shifts.separation() < 1e-6:
        raise ValueError("shift tuple too degenerate for the contour weight")
    if quad is None:
        quad = _default_quad(_auto_abscissa(x))

    def integrand(s):
        return spec.kernel(s) / s * g_factor(s, spec) * np.exp(-s * math.log(x))

    val, err = vertical_line_integral(integrand, quad)
    return (val, err) if with_err else val


def v_weight_grid(xs, spec: GammaKernelSpec,
                  quad: QuadratureSpec | None = None) -> np.ndarray:
    """V(x) on a batch of x > 0, sharing one set of contour nodes.

    The node factor w(s) G(s)/s g(s) is computed once; each x costs one
    exponential per node, chunked to keep memory flat.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("v_weight_grid needs x > 0")
    if spec.shifts.separation() < 1e-6:
        raise ValueError("shift tuple too degenerate for the contour weight")
    if quad is None:
        quad = _default_quad(1.0)
    nodes, wts = line_nodes(quad)
    base = wts * spec.kernel(nodes) / nodes * g_factor(nodes, spec)
    lnx = np.log(xs)
    out = np.empty(xs.shape, dtype=complex)
    chunk = max(1, int(4e6) // nodes.size)
    for lo in range(0, xs.size, chunk):
        hi = min(lo + chunk, xs.size)
        out[lo:hi] = np.exp(-np.multiply.outer(lnx[lo:hi], nodes)) @ base
    return out


def x_factor(q: int, t: float, parity: int, a: complex, c: complex) -> complex:
    """(q/pi)^{-a-c} times the Gamma ratio pair sending (a, c) across the
    functional equation. Equal to 1 exactly when a = c = 0."""
    it = 1j * t
    args = [
        (0.5 - a - it + parity) / 2,
        (0.5 + a + it + parity) / 2,
        (0.5 - c + it + parity) / 2,
        (0.5 + c - it + parity) / 2,
    ]
    _check_poles(args)
    expo = (-a - c) * (math.log(q) - _LOG_PI)
    expo += log_gamma(args[0]) - log_gamma(args[1])
    expo += log_gamma(args[2]) - log_gamma(args[3])
    return cmath.exp(expo)


def x_factor4(q: int, t: float, parity: int, shifts: ShiftTuple) -> complex:
    a, b, c, d = shifts.as_tuple()
    return x_factor(q, t, parity, a, c) * x_factor(q, t, parity, b, d)


def tilde_v_weight(x: float, q: int, spec: GammaKernelSpec,
                   quad: QuadratureSpec | None = None) -> complex:
    """The reflected weight: X at the negated-swapped shifts times V."""
    return x_factor4(q, spec.t, spec.parity,
                     spec.shifts.swapped_negated()) * v_weight(x, spec, quad)


# ----------------------------------------------------------------------
# the approximate functional equation for the four-fold product


def _power_array(K: int, expo: complex) -> np.ndarray:
    """n^{expo} for n = 0..K (index 0 unused, set to 0)."""
    out = np.zeros(K + 1, dtype=complex)
    n = np.arange(1, K + 1)
    out[1:] = np.exp(expo * np.log(n))
    return out


def _sigma_sieve(K: int, a: complex, b: complex) -> np.ndarray:
    """sum_{de=m} d^{-a} e^{-b} for m = 0..K by a divisor sieve."""
    pa = _power_array(K, -a)
    pb = _power_array(K, -b)
    sig = np.zeros(K + 1, dtype=complex)
    for d in range(1, K + 1):
        sig[d::d] += pa[d] * pb[1:K // d + 1]
    return sig


def _dirichlet_convolve(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    K = u.size - 1
    out = np.zeros(K + 1, dtype=complex)
    for m in range(1, K + 1):
        if u[m] != 0:
            out[m::m] += u[m] * v[1:K // m + 1]
    return out


def default_afe_cutoff(q: int, t: float, tol: float = 1e-6) -> int:
    return int(max(40.0, 20.0 * (1 + t * t)) * q * q * math.log(1.0 / tol))


def afe_parts(chi: DirichletCharacter, t: float, spec: GammaKernelSpec,
              cutoff: int | None = None, tol: float = 1e-6):
    """Both halves of the expansion of the shifted four-fold product,
    plus the independently computed product itself.

    Returns (first, second, product). The first half sums
    sigma(m) sigma(n) chi(m) conj chi(n) (mn)^{-1/2} (m/n)^{-it} V(mn/q^2)
    with the exponents of the direct series; the second half carries the
    reflected exponents and the X weight. Terms are grouped by k = mn
    through Dirichlet convolution so the V grid is hit once per k.
    """
    _require_primitive(chi)
    if chi.parity != spec.parity:
        raise ValueError(
            f"character parity {chi.parity} does not match kernel parity "
            f"{spec.parity}"
        )
    q = chi.q
    if cutoff is None:
        cutoff = default_afe_cutoff(q, t, tol)
    K = int(cutoff)
    al, be, ga, de = spec.shifts.as_tuple()

    n = np.arange(K + 1)
    chivals = chi.values[n % q]

    mphase = _power_array(K, -0.5 - 1j * t)       # m^{-1/2 - it}
    nphase = _power_array(K, -0.5 + 1j * t)       # n^{-1/2 + it}

    # direct half: sum_{de=m} d^{-alpha} e^{-beta} against the chi series
    a1 = _sigma_sieve(K, al, be) * chivals * mphase
    b1 = _sigma_sieve(K, ga, de) * np.conj(chivals) * nphase
    c1 = _dirichlet_convolve(a1, b1)

    # reflected half: exponents swap and negate, X_{alpha..delta} in front
    a2 = _sigma_sieve(K, -ga, -de) * chivals * mphase
    b2 = _sigma_sieve(K, -al, -be) * np.conj(chivals) * nphase
    c2 = _dirichlet_convolve(a2, b2)

    xs = np.arange(1, K + 1) / (q * q)
    v1 = v_weight_grid(xs, spec)
    v2 = v_weight_grid(xs, spec.swapped_negated())

    # tail certificate: the contour weight must have decayed below tol by
    # the cutoff edge; past it V keeps falling superpolynomially while the
    # coefficient signs cancel, so the edge level bounds the discarded mass
    edge = max(np.max(np.abs(v1[-max(2, K // 50):])),
               np.max(np.abs(v2[-max(2, K // 50):])))
    if edge > tol:
        raise ValueError(
            f"cutoff {K} stops while the weight is still {edge:.2e} > {tol:.1e}"
        )

    first = complex(np.dot(c1[1:], v1))
    x4 = x_factor4(q, t, spec.parity, spec.shifts)
    second = x4 * complex(np.dot(c2[1:], v2))

    s0 = 0.5 + 1j * t
    product = (
        l_value(s0 + al, chi)
        * l_value(s0 + be, chi)
        * l_value(s0.conjugate() + ga, _conj_char(chi))
        * l_value(s0.conjugate() + de, _conj_char(chi))
    )
    return first, second, product


def _conj_char(chi: DirichletCharacter) -> DirichletCharacter:
    group = character_group(chi.q)
    return group.character(group.conjugate_index(chi.index))


def afe_residual(chi: DirichletCharacter, t: float, spec: GammaKernelSpec,
                 cutoff: int | None = None, tol: float = 1e-6) -> float:
    """|first + second - product|: the expansion against the Hurwitz route."""
    first, second, product = afe_parts(chi, t, spec, cutoff, tol)
    return abs(first + second - product)
