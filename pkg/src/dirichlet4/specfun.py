"""Complex special functions and vertical-line quadrature.

Numerical backbone of the package:

* log_gamma / digamma: 15-term Lanczos series plus reflection, principal
  branch, uniform ~1e-14 relative accuracy for |z| <= a few hundred.
* hurwitz_zeta: Euler-Maclaurin continuation of sum (n+a)^(-s), vectorized
  over the second argument because L-values need a whole residue grid at
  one s. Reliable for |Im s| up to a few hundred.
* zeta, zeta_q: the Riemann zeta specialization and the variant with the
  Euler factors at primes dividing q removed.
* bessel_y0 / bessel_k0: delegated to scipy's ufuncs; they sit well inside
  the 1e-10 relative contract on (1e-6, 1e4) and vectorize for free.
* vertical_line_integral: composite Gauss-Legendre on a segment of the
  line Re s = c, with a convergence estimate and a tail-dominance guard.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import k0 as _scipy_k0, y0 as _scipy_y0

from .arith import _factor_pairs

__all__ = [
    "QuadratureSpec",
    "TailDominanceError",
    "ConvergenceError",
    "log_gamma",
    "digamma",
    "polygamma",
    "hurwitz_zeta",
    "zeta",
    "zeta_q",
    "bessel_y0",
    "bessel_k0",
    "vertical_line_integral",
    "line_nodes",
    "gauss_legendre_panels",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.5772156649015328606

# 15-term Lanczos table (Godfrey), g = 607/128. The series form is
#   Gamma(z) = sqrt(2 pi) * t^(z-1/2) * e^(-t) * A(z),  t = z + g - 1/2,
#   A(z) = c0 + sum_k c_k / (z - 1 + k),
# accurate to ~2e-16 relative for Re z >= 1/2.
_LANCZOS_G = 4.7421875
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)

# B_2, B_4, ..., B_30
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
)


class TailDominanceError(ArithmeticError):
    """Contour truncated where the integrand still matters."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to reach the requested tolerance."""


# ----------------------------------------------------------------------
# gamma and friends


def _lanczos_log_gamma(z: complex) -> complex:
    # Re z >= 0.5 only
    acc = _LANCZOS_C[0]
    for k in range(1, 15):
        acc += _LANCZOS_C[k] / (z - 1.0 + k)
    t = z + (_LANCZOS_G - 0.5)
    return (
        0.5 * math.log(2.0 * math.pi)
        + (z - 0.5) * cmath.log(t)
        - t
        + cmath.log(acc)
    )


def _log_sin_pi(z: complex) -> complex:
    """log sin(pi z), branch chosen so the reflection formula below yields
    the principal log_gamma. Needs Im z >= 0; callers conjugate."""
    # sin(pi z) = (1/2) exp(-i pi z + i pi/2) (1 - exp(2 pi i z)); the last
    # factor stays in the unit disk around 1 for Im z > 0, so its principal
    # log is branch-safe.
    return (
        -math.log(2.0)
        - 1j * math.pi * z
        + 1j * math.pi / 2.0
        + cmath.log(1.0 - cmath.exp(2j * math.pi * z))
    )


def log_gamma(z: complex) -> complex:
    """Principal-branch log Gamma(z), cut along the negative real axis."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise ValueError(f"log_gamma pole at z = {z}")
    if z.imag < 0.0:
        return log_gamma(z.conjugate()).conjugate()
    if z.real >= 0.5:
        return _lanczos_log_gamma(z)
    # reflection: log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
    return math.log(math.pi) - _log_sin_pi(z) - _lanczos_log_gamma(1.0 - z)


def digamma(z: complex) -> complex:
    """psi(z) = Gamma'(z)/Gamma(z), principal values, poles rejected."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise ValueError(f"digamma pole at z = {z}")
    if z.real < 0.5:
        # psi(z) = psi(1-z) - pi cot(pi z)
        return digamma(1.0 - z) - math.pi / cmath.tan(math.pi * z)
    shift = 0.0 + 0.0j
    while z.real < 10.0:
        shift -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    acc = 0.0 + 0.0j
    power = inv2
    for k in range(1, 8):
        acc += _BERNOULLI[k - 1] / (2 * k) * power
        power *= inv2
    return shift + cmath.log(z) - 0.5 / z - acc


def polygamma(n: int, z: complex) -> complex:
    """psi^(n)(z) for n >= 1 via (-1)^(n+1) n! zeta(n+1, z); Re z > 0."""
    if n < 1:
        raise ValueError(f"polygamma order must be >= 1, got {n}")
    z = complex(z)
    if z.real <= 0:
        raise ValueError(f"polygamma needs Re z > 0, got {z}")
    sign = 1.0 if n % 2 else -1.0
    return sign * math.factorial(n) * hurwitz_zeta(n + 1, z)


# ----------------------------------------------------------------------
# Hurwitz zeta via Euler-Maclaurin


def hurwitz_zeta(s: complex, a, tol: float = 1e-12):
    """zeta(s, a) = sum_{n>=0} (n+a)^(-s), continued to s != 1.

    `a` may be a positive scalar or a numpy array (one Euler-Maclaurin pass
    is shared across the whole array, which is what makes the L-value grid
    evaluations cheap), or complex with positive real part (the shifted
    bases n + a then stay in the right half plane, so the principal-branch
    logs never cross the cut). Relative accuracy ~1e-11 for |Im s| <= 200.
    """
    s = complex(s)
    if s == 1.0:
        raise ValueError("hurwitz_zeta pole at s = 1")
    scalar = np.isscalar(a)
    avec = np.atleast_1d(np.asarray(a))
    if np.iscomplexobj(avec):
        avec = avec.astype(complex)
        if np.any(avec.real <= 0.0):
            raise ValueError("hurwitz_zeta needs Re a > 0")
    else:
        avec = avec.astype(float)
        if np.any(avec <= 0.0):
            raise ValueError("hurwitz_zeta needs a > 0")

    n_shift = max(15, math.ceil(abs(s.imag)) + 10)
    for _ in range(4):
        value, rem = _euler_maclaurin(s, avec, n_shift)
        scale = np.maximum(1.0, np.abs(value))
        if np.all(rem <= tol * scale):
            break
        n_shift *= 2
    else:
        raise ConvergenceError(
            f"hurwitz_zeta: remainder {rem.max():.2e} above tol at s = {s}"
        )
    return complex(value[0]) if scalar else value


def _euler_maclaurin(s: complex, avec: np.ndarray, n_shift: int):
    n = np.arange(n_shift, dtype=float)[:, None]
    base = n + avec[None, :]
    direct = np.exp(-s * np.log(base)).sum(axis=0)

    top = n_shift + avec
    log_top = np.log(top)
    tail = np.exp((1.0 - s) * log_top) / (s - 1.0)
    tail += 0.5 * np.exp(-s * log_top)

    # correction terms B_2k/(2k)! * s(s+1)...(s+2k-2) * top^(-s-2k+1)
    poch = s
    fact = 1.0
    power = np.exp((-s - 1.0) * log_top)
    inv2 = np.exp(-2.0 * log_top)
    corr = np.zeros_like(tail)
    for k in range(1, 16):
        fact *= (2 * k - 1) * (2 * k)
        corr += (_BERNOULLI[k - 1] / fact) * poch * power
        if k < 15:
            poch *= (s + 2 * k - 1) * (s + 2 * k)
            power = power * inv2
    # remainder estimate: magnitude of the next term
    fact *= 31 * 32
    poch_next = poch * (s + 29) * (s + 30)
    rem = np.abs(-7709321041217.0 / 510.0 / fact * poch_next * power * inv2)
    return direct + tail + corr, rem


def zeta(s: complex, tol: float = 1e-12) -> complex:
    """Riemann zeta via the Hurwitz specialization a = 1."""
    return hurwitz_zeta(s, 1.0, tol=tol)


def zeta_q(s: complex, q: int, tol: float = 1e-12) -> complex:
    """zeta with the Euler factors at primes dividing q removed:
    zeta_q(s) = zeta(s) * prod_{p | q} (1 - p^(-s))."""
    if q < 1:
        raise ValueError(f"zeta_q needs q >= 1, got {q}")
    s = complex(s)
    out = zeta(s, tol=tol)
    for p, _ in _factor_pairs(q):
        out *= 1.0 - complex(p) ** (-s)
    return out


# ----------------------------------------------------------------------
# Bessel kernels for the divisor-sum transforms


def bessel_y0(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("bessel_y0 needs x > 0")
    return _scipy_y0(x)


def bessel_k0(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("bessel_k0 needs x > 0")
    return _scipy_k0(x)


# ----------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre layout for a vertical-line integral.

    abscissa: Re of the line. height_cut: integrate |Im s| <= height_cut.
    panel: sub-interval length. nodes_per_panel: Gauss-Legendre order.
    tol: target for the reported error estimate and the tail guard.
    """

    abscissa: float
    height_cut: float
    panel: float = 0.5
    nodes_per_panel: int = 16
    tol: float = 1e-10

    def __post_init__(self):
        if self.height_cut <= 0 or self.panel <= 0:
            raise ValueError("height_cut and panel must be positive")
        if self.height_cut < self.panel:
            raise ValueError("height_cut must be >= panel")
        if self.nodes_per_panel < 4:
            raise ValueError("nodes_per_panel must be >= 4")
        if not (1e-15 < self.tol < 1e-3):
            raise ValueError("tol must lie in (1e-15, 1e-3)")


@lru_cache(maxsize=64)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_edges(height: float, panel: float) -> np.ndarray:
    n_panels = max(1, math.ceil(2.0 * height / panel))
    return np.linspace(-height, height, n_panels + 1)


def line_nodes(spec: QuadratureSpec):
    """All quadrature nodes s = c + iy and weights for (1/2pi) * sum w f(s),
    flattened across panels. The weights already include the 1/(2 pi i) of
    the contour integral (the i cancels against ds = i dy)."""
    x, w = _gl_nodes(spec.nodes_per_panel)
    edges = _panel_edges(spec.height_cut, spec.panel)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    y = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel() / (2.0 * math.pi)
    return spec.abscissa + 1j * y, wts


def vertical_line_integral(f, spec: QuadratureSpec):
    """(1/2 pi i) * integral of f over the segment |Im s| <= height_cut of
    the line Re s = abscissa.

    f must accept a numpy array of complex points. Returns (value, err)
    where err combines a half-order convergence estimate with the size of
    the outermost panels. Raises TailDominanceError when the outermost
    panels contribute more than 10% of tol, i.e. when the truncation height
    was chosen too low for this integrand.
    """
    s, w = line_nodes(spec)
    fv = np.asarray(f(s), dtype=complex)
    if fv.shape != s.shape:
        raise ValueError("integrand must return one value per node")
    per_node = w * fv
    value = per_node.sum()

    n_panels = s.size // spec.nodes_per_panel
    per_panel = per_node.reshape(n_panels, spec.nodes_per_panel).sum(axis=1)
    tail = abs(per_panel[0]) + abs(per_panel[-1])
    if tail > 0.1 * spec.tol:
        raise TailDominanceError(
            f"outer panels contribute {tail:.2e} > 10% of tol={spec.tol:.2e}; "
            "raise height_cut"
        )

    half_order = max(4, spec.nodes_per_panel // 2)
    xs, ws = _gl_nodes(half_order)
    edges = _panel_edges(spec.height_cut, spec.panel)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    y2 = (mid[:, None] + half[:, None] * xs[None, :]).ravel()
    w2 = (half[:, None] * ws[None, :]).ravel() / (2.0 * math.pi)
    coarse = (w2 * np.asarray(f(spec.abscissa + 1j * y2), dtype=complex)).sum()

    err = abs(value - coarse) + tail
    return value, err


def gauss_legendre_panels(lo: float, hi: float, panel: float, order: int):
    """Nodes and weights for a composite Gauss-Legendre rule on [lo, hi]."""
    if hi <= lo:
        raise ValueError("need hi > lo")
    x, w = _gl_nodes(order)
    n_panels = max(1, math.ceil((hi - lo) / panel))
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return nodes, wts
