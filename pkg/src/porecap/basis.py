"""Zernike test functions and singular flux basis on a circular pore.

Modes are labelled (m, j) with m >= 0, |j| <= m and m - |j| even.  Positive j
carries sin(j t), negative j carries cos(|j| t), j = 0 is axisymmetric.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np
from scipy.special import eval_jacobi

from ._quadrature import gauss_legendre
from .errors import DomainError, InvalidInputError


@dataclass(frozen=True, order=True)
class ModeIndex:
    m: int
    j: int

    def __post_init__(self):
        _check_mode(self.m, self.j)


def _check_mode(m, j):
    if m < 0 or abs(j) > m or (m - abs(j)) % 2:
        raise InvalidInputError(f"invalid Zernike mode (m={m}, j={j})")


@lru_cache(maxsize=None)
def mode_list(M: int) -> tuple[ModeIndex, ...]:
    """All modes of degree <= M, m ascending then j ascending."""
    if M < 0:
        raise InvalidInputError("truncation degree must be non-negative")
    return tuple(ModeIndex(m, j) for m in range(M + 1) for j in range(-m, m + 1, 2))


def mode_count(M: int) -> int:
    return (M + 1) * (M + 2) // 2


def zernike_norm(m: int, j: int) -> float:
    return sqrt((m + 1) / pi) if j == 0 else sqrt(2 * (m + 1) / pi)


@lru_cache(maxsize=None)
def zernike_radial_coefficients(m: int, j: int) -> tuple[tuple[int, int], ...]:
    """Exact integer coefficients (power, c) of the unnormalised radial polynomial."""
    j = abs(j)
    _check_mode(m, j)
    out = []
    for k in range((m - j) // 2 + 1):
        c = (-1) ** k * factorial(m - k) // (
            factorial(k) * factorial((m + j) // 2 - k) * factorial((m - j) // 2 - k))
        out.append((m - 2 * k, c))
    return tuple(out)


def zernike_radial(m: int, j: int, r):
    """Normalised radial factor of Z_{mj}.

    The explicit coefficient sum cancels badly near r = 1 once m is in the
    teens, so this goes through the Jacobi form
    R_m^j(r) = (-1)^n r^j P_n^{(j,0)}(1 - 2 r^2), n = (m - j)/2.
    """
    j = abs(j)
    _check_mode(m, j)
    r = np.asarray(r, dtype=float)
    n = (m - j) // 2
    val = (-1) ** n * r ** j * eval_jacobi(n, j, 0.0, 1.0 - 2.0 * r * r)
    val = zernike_norm(m, j) * val
    return float(val) if val.ndim == 0 else val


def angular_factor(j: int, t):
    t = np.asarray(t, dtype=float)
    if j > 0:
        return np.sin(j * t)
    if j < 0:
        return np.cos(-j * t)
    return np.ones_like(t)


def zernike_eval(mode: ModeIndex, r, t):
    val = zernike_radial(mode.m, abs(mode.j), r) * angular_factor(mode.j, t)
    return float(val) if np.ndim(val) == 0 else val


def flux_basis_eval(mode: ModeIndex, xi, t, alpha: float):
    """q_{mj} = (alpha^2 - xi^2)^(-1/2) (xi/alpha)^m times the angular factor."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(xi >= alpha):
        raise DomainError("flux basis is defined only for 0 <= xi < alpha")
    val = (xi / alpha) ** mode.m / np.sqrt((alpha - xi) * (alpha + xi)) * angular_factor(mode.j, t)
    return float(val) if val.ndim == 0 else val


def wallis(n: int) -> float:
    """W_n = integral of sin^n over [0, pi/2]."""
    if n < 0:
        raise InvalidInputError("Wallis index must be non-negative")
    w0, w1 = pi / 2, 1.0
    if n == 0:
        return w0
    for k in range(2, n + 1):
        w0, w1 = w1, w0 * (k - 1) / k
    return w1


def flux_basis_total_flux(mode: ModeIndex, alpha: float) -> float:
    if mode.j != 0:
        return 0.0
    return 2 * pi * alpha * wallis(mode.m + 1)


@lru_cache(maxsize=None)
def _zernike_flux_unit(m: int) -> float:
    # 2 pi * int_0^{pi/2} R_m^0(sin s) sin s ds, smooth integrand
    x, w = gauss_legendre(max(32, m + 24))
    s = 0.5 * pi * x
    return 2 * pi * 0.5 * pi * float(np.sum(w * zernike_radial(m, 0, np.sin(s)) * np.sin(s)))


def zernike_flux_total(mode: ModeIndex, alpha: float) -> float:
    """Net flux of (alpha^2 - xi^2)^(-1/2) Z_{mj}(xi/alpha, t) over the pore."""
    if mode.j != 0:
        return 0.0
    return alpha * _zernike_flux_unit(mode.m)


@lru_cache(maxsize=None)
def zernike_to_monomial(M: int) -> np.ndarray:
    """Matrix T with b_monomial = T @ b_zernike, both in mode_list(M) order.

    The Zernike-weighted flux functions span the same space as the monomial
    ones, mode by mode in j, so T is block upper-triangular in m.
    """
    modes = mode_list(M)
    index = {mode: i for i, mode in enumerate(modes)}
    T = np.zeros((len(modes), len(modes)))
    for col, mode in enumerate(modes):
        scale = zernike_norm(mode.m, mode.j)
        for power, c in zernike_radial_coefficients(mode.m, abs(mode.j)):
            T[index[ModeIndex(power, mode.j)], col] = scale * c
    T.setflags(write=False)
    return T
