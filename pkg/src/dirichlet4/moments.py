"""Fourth-moment averages over primitive characters and their
arithmetic main terms.

The empirical side averages products of four shifted L-values over the
primitive characters mod q, pointwise in t or integrated against a
smooth window. The arithmetic side is a six-term sum of Z ratios
weighted by the X root factors (pointwise) or by windowed power
integrals (averaged). Zero-shift values are never obtained by plugging
in zero: every Z factor poles there, and the holomorphic limit is
reached by antipodal epsilon-extrapolation along a fixed generic
direction. The digamma-bracket polynomial form and its coefficient
extraction live here too.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .arith import ShiftTuple, _factor_pairs, phi_star
from .characters import character_group
from .lfunc import l_values_vector, x_factor, x_factor4
from .specfun import digamma, gauss_legendre_panels, polygamma, zeta_q

__all__ = [
    "WeightSpec",
    "SharpCutoff",
    "MomentReport",
    "CjFit",
    "z_q",
    "euler_prefactor",
    "bracket",
    "empirical_moment",
    "empirical_moment_integral",
    "main_term_terms",
    "main_term_pointwise",
    "main_term_integrand",
    "main_term_weighted_terms",
    "main_term_weighted",
    "zero_shift_main_term",
    "zero_shift_terms",
    "extract_cj",
    "moment_report",
]

ZERO_SHIFTS = ShiftTuple(0.0, 0.0, 0.0, 0.0)

# fixed generic direction for the shift-to-zero limit: unit length, all
# eight pair sums/differences at least 0.37 in modulus
_GENERIC_DIRECTION = (0.73992299, 0.26425821, 0.58136806, 0.21140657)


# ----------------------------------------------------------------------
# weights


def _smoothstep(u):
    """C-infinity ramp: 0 below 0, 1 above 1, exp-glued between."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[u >= 1] = 1.0
    mid = (u > 0) & (u < 1)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class WeightSpec:
    """Smooth window supported on [T/2, 4T] with ramps of width T0.

    T0 controls the derivative scale: the j-th derivative is bounded by
    a constant times T0^{-j}.
    """

    T: float
    T0: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not (math.sqrt(self.T) <= self.T0 <= self.T):
            raise ValueError(
                f"T0 must lie in [sqrt(T), T], got T0={self.T0} for T={self.T}"
            )

    def support(self) -> tuple[float, float]:
        return (self.T / 2, 4 * self.T)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.support()
        rise = _smoothstep((t - lo) / self.T0)
        fall = _smoothstep((hi - t) / self.T0)
        return rise * fall


@dataclass(frozen=True)
class SharpCutoff:
    """Indicator window of [0, T]."""

    T: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")

    def support(self) -> tuple[float, float]:
        return (0.0, self.T)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= 0) & (t <= self.T)).astype(float)


# ----------------------------------------------------------------------
# the Z object and the Euler prefactor


def z_q(shifts: ShiftTuple, q: int) -> complex:
    """zeta_q(1+a+c) zeta_q(1+a+d) zeta_q(1+b+c) zeta_q(1+b+d)
    over zeta_q(2+a+b+c+d)."""
    a, b, c, d = shifts.as_tuple()
    args = (1 + a + c, 1 + a + d, 1 + b + c, 1 + b + d)
    for arg in args:
        if abs(arg - 1) < 1e-12:
            raise ValueError(f"Z argument {arg} hits the zeta pole")
    num = 1.0 + 0.0j
    for arg in args:
        num *= zeta_q(arg, q)
    return num / zeta_q(2 + a + b + c + d, q)


def euler_prefactor(q: int) -> float:
    """prod over p | q of (1 - 1/p)^3 / (1 + 1/p)."""
    out = 1.0
    for p, _ in _factor_pairs(q):
        out *= (1 - 1 / p) ** 3 / (1 + 1 / p)
    return out


def bracket(q: int, t: float, parity: int) -> float:
    """log(q/pi) + Re digamma((1/2 + it + parity)/2); the conjugate
    pair of digamma values makes this exactly real."""
    z = (0.5 + 1j * t + parity) / 2
    val = math.log(q / math.pi) + 0.5 * (digamma(z) + digamma(np.conj(z))).real
    return val


# ----------------------------------------------------------------------
# empirical averages


def _require_moment_modulus(q: int):
    if q < 3:
        raise ValueError(f"moment average needs q >= 3, got {q}")
    if phi_star(q) == 0:
        raise ValueError(f"q = {q} has no primitive characters (q = 2 mod 4)")


def empirical_moment(q: int, t: float, shifts: ShiftTuple = ZERO_SHIFTS) -> complex:
    """Average over primitive chi mod q of
    L(1/2+it+a, chi) L(1/2+it+b, chi) L(1/2-it+c, conj chi)
    L(1/2-it+d, conj chi)."""
    _require_moment_modulus(q)
    a, b, c, d = shifts.as_tuple()
    group = character_group(q)
    prim = group.primitive_indices
    s0 = 0.5 + 1j * t

    # the conj-chi factors come from the identity
    # L(s, conj chi) = conj(L(conj s, chi)) applied at conj s = 1/2+it+conj(c)
    needed = {}
    for s in (s0 + a, s0 + b, s0 + np.conj(c), s0 + np.conj(d)):
        key = complex(s)
        if key not in needed:
            needed[key] = l_values_vector(key, q, prim)
    va = needed[complex(s0 + a)]
    vb = needed[complex(s0 + b)]
    vc = needed[complex(s0 + np.conj(c))]
    vd = needed[complex(s0 + np.conj(d))]
    return complex(np.mean(va * vb * np.conj(vc) * np.conj(vd)))


def _weight_nodes(weight, panel: float | None = None, per_unit: int = 64):
    lo, hi = weight.support()
    if panel is None:
        panel = min(1.0, (hi - lo) / 32)
    order = max(8, int(round(per_unit * panel)))
    return gauss_legendre_panels(lo, hi, panel, order)


def empirical_moment_integral(q: int, T: float, weight=None,
                              shifts: ShiftTuple = ZERO_SHIFTS,
                              with_err: bool = False):
    """Integral of the empirical moment against the window.

    weight None means the indicator of [0, T]. Gauss-Legendre panels,
    64 nodes per unit length; the error estimate compares against the
    half-order rule on the same panels.
    """
    _require_moment_modulus(q)
    if weight is None:
        weight = SharpCutoff(T)
    elif abs(weight.T - T) > 1e-9:
        raise ValueError(f"window T={weight.T} does not match T={T}")

    nodes, wts = _weight_nodes(weight)
    phis = weight.phi(nodes)
    live = phis > 0
    vals = np.zeros(nodes.size, dtype=complex)
    for i in np.nonzero(live)[0]:
        vals[i] = empirical_moment(q, float(nodes[i]), shifts)
    total = complex(np.dot(wts * phis, vals))

    if not with_err:
        return total
    half_nodes, half_wts = _weight_nodes(weight, per_unit=32)
    half_phis = weight.phi(half_nodes)
    half_vals = np.zeros(half_nodes.size, dtype=complex)
    for i in np.nonzero(half_phis > 0)[0]:
        half_vals[i] = empirical_moment(q, float(half_nodes[i]), shifts)
    err = abs(total - complex(np.dot(half_wts * half_phis, half_vals)))
    return total, err


# ----------------------------------------------------------------------
# six-term main terms


def _csum(terms) -> complex:
    """Exactly rounded sum of complex terms via fsum on each part."""
    return complex(math.fsum(t.real for t in terms),
                   math.fsum(t.imag for t in terms))


def _term_patterns(shifts: ShiftTuple):
    a, b, c, d = shifts.as_tuple()
    return [
        (ShiftTuple(a, b, c, d), None),
        (ShiftTuple(-c, -d, -a, -b), "all"),
        (ShiftTuple(b, -c, d, -a), (a, c)),
        (ShiftTuple(a, -c, d, -b), (b, c)),
        (ShiftTuple(b, -d, c, -a), (a, d)),
        (ShiftTuple(a, -d, c, -b), (b, d)),
    ]


def main_term_terms(q: int, t: float, shifts: ShiftTuple,
                    parity_avg: bool = True, zeta_modulus: int | None = None):
    """The six Z-times-X terms of the pointwise main term, unsummed.

    parity_avg True averages each X over both parities; False evaluates
    at even parity only. zeta_modulus overrides the modulus used inside
    the Z factors (the X factors always carry q), which isolates the
    Euler-product prefactor.
    """
    zq = q if zeta_modulus is None else zeta_modulus
    parities = (0, 1) if parity_avg else (0,)
    out = []
    for pattern, xkind in _term_patterns(shifts):
        zval = z_q(pattern, zq)
        if xkind is None:
            xval = 1.0 + 0.0j
        elif xkind == "all":
            xval = sum(x_factor4(q, t, pa, shifts) for pa in parities)
            xval /= len(parities)
        else:
            u, v = xkind
            xval = sum(x_factor(q, t, pa, u, v) for pa in parities)
            xval /= len(parities)
        out.append(zval * xval)
    return out


def main_term_pointwise(q: int, t: float, shifts: ShiftTuple,
                        parity_avg: bool = True) -> complex:
    """Six-term pointwise main term; compensated summation."""
    return _csum(main_term_terms(q, t, shifts, parity_avg))


def _shift_exponents(shifts: ShiftTuple):
    a, b, c, d = shifts.as_tuple()
    return [0.0, a + b + c + d, a + c, b + c, a + d, b + d]


def main_term_integrand(q: int, t: float, shifts: ShiftTuple) -> complex:
    """Pointwise main term with every X replaced by its large-t power
    form (tq/2pi)^{-shift sum}; the integrand of the weighted theorem."""
    if t <= 0:
        raise ValueError(f"the power form needs t > 0, got {t}")
    base = t * q / (2 * math.pi)
    terms = []
    for (pattern, _), expo in zip(_term_patterns(shifts),
                                  _shift_exponents(shifts)):
        terms.append(z_q(pattern, q) * base ** complex(-expo))
    return _csum(terms)


def _power_integral(weight, expo: complex, q: int) -> complex:
    """integral of phi(t) (tq/2pi)^{-expo} dt over the support."""
    lo, hi = weight.support()
    if lo <= 0 and expo.real >= 0.9:
        raise ValueError(
            f"power integral with exponent {expo} diverges at t = 0"
        )
    nodes, wts = _weight_nodes(weight)
    keep = nodes > 0
    nodes, wts = nodes[keep], wts[keep]
    phis = weight.phi(nodes)
    vals = np.exp(-expo * np.log(nodes * q / (2 * math.pi)))
    return complex(np.dot(wts * phis, vals))


def main_term_weighted_terms(q: int, weight, shifts: ShiftTuple,
                             zeta_modulus: int | None = None):
    """Six Z coefficients times windowed power integrals."""
    zq = q if zeta_modulus is None else zeta_modulus
    out = []
    for (pattern, _), expo in zip(_term_patterns(shifts),
                                  _shift_exponents(shifts)):
        zval = z_q(pattern, zq)
        out.append(zval * _power_integral(weight, complex(expo), q))
    return out


def main_term_weighted(q: int, weight, shifts: ShiftTuple) -> complex:
    """Windowed six-term main term; compensated summation."""
    return _csum(main_term_weighted_terms(q, weight, shifts))


# ----------------------------------------------------------------------
# the shift-to-zero limit


def _terms_at(q: int, t_or_weight, shifts: ShiftTuple, zeta_modulus):
    if isinstance(t_or_weight, (int, float)):
        return main_term_terms(q, float(t_or_weight), shifts,
                               zeta_modulus=zeta_modulus)
    return main_term_weighted_terms(q, t_or_weight, shifts,
                                    zeta_modulus=zeta_modulus)


def zero_shift_terms(q: int, t_or_weight, direction=None,
                     zeta_modulus: int | None = None):
    """Per-term shift-to-zero limits by antipodal epsilon-extrapolation.

    Each term is averaged over +-eps*v (killing odd orders in eps) and
    Richardson-extrapolated in eps^2 over eps in {0.02, 0.01}. The six
    extrapolated terms are individually huge with alternating signs;
    only their compensated sum is meaningful. Linearity makes the sum
    of these terms equal the extrapolated total exactly.
    """
    _require_moment_modulus(q)
    v = _GENERIC_DIRECTION if direction is None else direction
    levels = {}
    for eps in (0.02, 0.01, 0.005):
        plus = _terms_at(q, t_or_weight, ShiftTuple(*(eps * x for x in v)),
                         zeta_modulus)
        minus = _terms_at(q, t_or_weight, ShiftTuple(*(-eps * x for x in v)),
                          zeta_modulus)
        levels[eps] = [(p + m) / 2 for p, m in zip(plus, minus)]
    extrap = [(4 * g1 - g2) / 3 for g1, g2 in zip(levels[0.01], levels[0.02])]

    # a second extrapolant from the finer pair checks that the levels are
    # tracking the smooth eps^2 trend rather than cancellation noise
    total = _csum(extrap)
    check = _csum((4 * g1 - g2) / 3
                  for g1, g2 in zip(levels[0.005], levels[0.01]))
    drift = abs(total - check)
    scale = max(abs(check), 1e-300)
    if drift > 1e-4 * scale:
        raise ArithmeticError(
            f"epsilon levels disagree by {drift / scale:.2e} relative; "
            "six-term cancellation lost too many digits"
        )
    return extrap


def zero_shift_main_term(q: int, t_or_weight, direction=None,
                         zeta_modulus: int | None = None) -> complex:
    return _csum(zero_shift_terms(q, t_or_weight, direction, zeta_modulus))


# ----------------------------------------------------------------------
# bracket polynomial and coefficient extraction


@dataclass(frozen=True)
class CjFit:
    coeffs: tuple
    residual: float
    condition: float

    def __iter__(self):
        return iter(self.coeffs)


# extra abscissas mixed into the c_j fit so the polygamma correction
# columns are determined even when the caller's grid is short
_CJ_LADDER = (0.3, 0.7, 1.2, 3.0, 4.5, 6.5, 9.0, 13.0, 18.0,
              25.0, 34.0, 46.0, 60.0, 80.0)


def _cj_row(q: int, t: float) -> np.ndarray:
    """Exact basis of the shift-to-zero limit at one spectral point.

    The limit is a quartic in the bracket B plus polygamma corrections:
    the second, third and fourth shift-derivatives of log X contribute
    Im psi', Re psi'' and Im psi''' at (1/2+it+parity)/2, paired against
    the Laurent coefficients of the Z factors. Fitting the bracket
    powers alone on a low-t grid pushes those corrections into the
    coefficients (they only decay like 1/t^2); with the correction
    columns present the fit reproduces the data to ~1e-9 and the
    bracket coefficients are the asymptotic constants.
    """
    row = np.zeros(12)
    for parity in (0, 1):
        b = bracket(q, t, parity)
        z = (0.5 + 1j * t + parity) / 2
        t2 = polygamma(1, z).imag
        t3 = polygamma(2, z).real
        t4 = polygamma(3, z).imag
        row += 0.5 * np.array([
            1.0, b, b**2, b**3, b**4,
            t2, b * t2, b * b * t2, t2 * t2, t3, b * t3, t4,
        ])
    return row


def extract_cj(q: int, t_grid) -> CjFit:
    """Bracket-polynomial coefficients of the shift-to-zero main term.

    Solves zero_shift_main_term(q, t) = prefactor(q) * [sum_j c_j *
    (1/2) sum_parity B(q,t,parity)^j + polygamma corrections] by least
    squares and returns c_0..c_4. The reported residual is the worst
    relative misfit over the caller's grid; the condition number is
    that of the bracket Vandermonde on the caller's grid.
    """
    t_grid = [float(t) for t in t_grid]
    if len(t_grid) < 6:
        raise ValueError(f"need at least 6 grid points, got {len(t_grid)}")
    pref = euler_prefactor(q)

    vandermonde = np.array(
        [[_cj_row(q, t)[j] for j in range(5)] for t in t_grid])
    condition = float(np.linalg.cond(vandermonde))
    if condition > 1e10:
        raise ArithmeticError(
            f"bracket design matrix condition {condition:.2e} exceeds 1e10; "
            "spread the t grid"
        )

    full = list(t_grid)
    for t in _CJ_LADDER:
        if all(abs(t - u) > 1e-9 for u in full):
            full.append(t)
    mat = np.array([_cj_row(q, t) for t in full])
    vec = np.array([zero_shift_main_term(q, t).real / pref for t in full])
    coeffs, *_ = np.linalg.lstsq(mat, vec, rcond=None)

    n_user = len(t_grid)
    pred = mat[:n_user] @ coeffs
    residual = float(np.max(np.abs(pred - vec[:n_user]) /
                            np.abs(vec[:n_user])))
    return CjFit(tuple(float(c) for c in coeffs[:5]), residual, condition)


# ----------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class MomentReport:
    """Empirical moment next to its main term, with provenance fields.

    component_breakdown holds the six per-term extrapolated limits;
    they are individually huge with alternating signs, and reproduce
    main_term only under compensated summation (math.fsum), not a
    naive left-to-right sum.
    """

    q: int
    t_or_range: object
    shifts: tuple
    empirical: complex
    main_term: complex
    abs_err: float
    rel_err: float
    n_characters: int
    wall_time: float
    component_breakdown: tuple

    def to_payload(self) -> dict:
        def c2p(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            "q": self.q,
            "t_or_range": self.t_or_range,
            "shifts": [c2p(s) for s in self.shifts],
            "empirical": c2p(self.empirical),
            "main_term": c2p(self.main_term),
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "n_characters": self.n_characters,
            "wall_time": self.wall_time,
            "component_breakdown": [c2p(t) for t in self.component_breakdown],
        }


def _is_odd_prime(q: int) -> bool:
    if q < 3 or q % 2 == 0:
        return False
    return all(q % p for p in range(3, int(math.isqrt(q)) + 1, 2))


def moment_report(q: int, t: float | None = None, weight=None) -> MomentReport:
    """Empirical zero-shift moment against its extrapolated main term,
    pointwise at t or integrated against a window."""
    if t is None and weight is None:
        raise ValueError("pass a spectral point t or a window")
    if t is not None and weight is not None:
        raise ValueError("pass only one of t and window")
    if not _is_odd_prime(q):
        raise ValueError(f"the pointwise regime needs an odd prime q, got {q}")

    start = time.perf_counter()
    if t is not None:
        empirical = empirical_moment(q, t)
        breakdown = tuple(zero_shift_terms(q, t))
        label: object = t
    else:
        empirical = empirical_moment_integral(q, weight.T, weight)
        breakdown = tuple(zero_shift_terms(q, weight))
        label = ("window", weight.support()[0], weight.support()[1])
    main = _csum(breakdown)
    abs_err = abs(empirical - main)
    rel_err = abs_err / abs(main) if main != 0 else math.inf
    wall = time.perf_counter() - start
    return MomentReport(
        q=q,
        t_or_range=label,
        shifts=(0.0, 0.0, 0.0, 0.0),
        empirical=complex(empirical),
        main_term=main,
        abs_err=abs_err,
        rel_err=rel_err,
        n_characters=phi_star(q),
        wall_time=wall,
        component_breakdown=breakdown,
    )
