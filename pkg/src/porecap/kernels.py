"""Surface Green's functions and their angular moments.

With g the surface kernel and d(tau) the distance between two points at radii
eta, xi about a pore center and azimuthal offset tau, the angular moments are

    I_j(eta, xi) = int_0^{2 pi} cos(j tau) g(d(tau)) dtau.

The plane uses g = 1/mu and d^2 = xi^2 + eta^2 - 2 xi eta cos(tau), so that
I_j = H_j(xi/eta)/eta.  The sphere uses chord radii and
g_s(mu) = 1/mu + log(mu / (2 + mu))/2 with d^2 = A^2 + B^2 - 2AB cos(tau),
A = xi sqrt(1 - eta^2/4), B = eta sqrt(1 - xi^2/4).
"""

import json
import os
from dataclasses import dataclass, field
from math import cos, log, pi, sin, sqrt
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, RectBivariateSpline

from ._quadrature import angular_rule
from .errors import (ConvergenceError, DomainError, InvalidInputError,
                     SingularInputError, TableBuildError)
from .geometry import Surface

EPS = np.finfo(float).eps
QUAD_ABS_TOL = 1e-15
QUAD_REL_TOL = 1e-8
# the direct H evaluations serve as oracles, so they ask for more than the default
H_REL_TOL = 1e-13
TABLE_FORMAT_VERSION = 1
CACHE_ENV = "PORECAP_CACHE_DIR"


def g_planar(mu):
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise DomainError("g_planar needs mu > 0")
    val = 1.0 / mu
    return float(val) if np.ndim(val) == 0 else val


def g_sphere(mu):
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or np.any(mu > 2):
        raise DomainError("g_sphere needs 0 < mu <= 2")
    val = 1.0 / mu + 0.5 * np.log(mu / (2.0 + mu))
    return float(val) if np.ndim(val) == 0 else val


def agm(a, b):
    """Arithmetic-geometric mean, elementwise."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(64):
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        if np.all(np.abs(a - b) <= 2 * EPS * a):
            break
    val = 0.5 * (a + b)
    return float(val) if np.ndim(val) == 0 else val


def elliptic_k(k):
    """Complete elliptic integral of the first kind, K(k) with modulus k."""
    k = np.asarray(k, dtype=float)
    if np.any(np.abs(k) >= 1):
        raise DomainError("elliptic_k needs |k| < 1")
    kp = np.sqrt((1.0 - k) * (1.0 + k))
    val = 0.5 * pi / agm(1.0, kp)
    return float(val) if np.ndim(val) == 0 else val


def elliptic_ring_integral(beta):
    """int_0^{2 pi} dtau / sqrt(beta^2 + 1 - 2 beta cos tau) = 4 K(k) / (1 + beta).

    With k^2 = 4 beta / (1 + beta)^2 the complementary modulus is
    |1 - beta| / (1 + beta), which gives the AGM form 2 pi / AGM(1 + beta, |1 - beta|).
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise DomainError("elliptic_ring_integral needs beta >= 0")
    if np.any(beta == 1):
        raise SingularInputError("ring integral diverges at beta = 1")
    val = 2 * pi / agm(1.0 + beta, np.abs(1.0 - beta))
    return float(val) if np.ndim(val) == 0 else val


def singular_quad(f, a: float, b: float, singular_ends=(False, False),
                  abs_tol: float = QUAD_ABS_TOL, rel_tol: float = QUAD_REL_TOL,
                  limit: int = 200, points=None) -> float:
    """Adaptive Gauss-Kronrod quadrature for integrands singular at flagged ends.

    A sample landing exactly on a flagged endpoint is moved one ulp inward.
    ``points`` are interior breakpoints passed on to QUADPACK.
    Raises ConvergenceError when QUADPACK reports failure and the error bound
    misses both tolerances.
    """
    a = float(a)
    b = float(b)
    lo_flag, hi_flag = singular_ends
    a_in = np.nextafter(a, b)
    b_in = np.nextafter(b, a)

    def guarded(x):
        if lo_flag and x == a:
            x = a_in
        elif hi_flag and x == b:
            x = b_in
        return f(x)

    if a == b:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b] or None
    val, err, _info, *message = integrate.quad(guarded, a, b, epsabs=abs_tol, epsrel=rel_tol,
                                               limit=limit, full_output=1, points=points)
    # a trailing message means QUADPACK flagged a problem
    if message and not err <= max(abs_tol, rel_tol * abs(val)):
        raise ConvergenceError(f"singular_quad did not converge on [{a}, {b}]", val, err)
    return val


def _peak_points(width):
    """Breakpoints resolving a feature of the given width at tau = 0."""
    return [width * 10.0 ** k for k in range(4) if width * 10.0 ** k < 0.5 * pi]


def H_planar(j: int, beta: float) -> float:
    """H_j(beta) = int_0^{2 pi} cos(j tau) / sqrt(beta^2 + 1 - 2 beta cos tau) dtau."""
    if j < 0 or int(j) != j:
        raise InvalidInputError("H_planar needs an integer j >= 0")
    beta = float(beta)
    if beta < 0:
        raise DomainError("H_planar needs beta >= 0")
    if beta == 1:
        raise SingularInputError("H_planar is singular at beta = 1")
    if beta > 1:
        return H_planar(j, 1.0 / beta) / beta
    if beta == 0:
        return 2 * pi if j == 0 else 0.0
    gap2 = (1 - beta) ** 2

    def bounded(tau):
        s = sin(0.5 * tau)
        return -2 * sin(0.5 * j * tau) ** 2 / sqrt(gap2 + 4 * beta * s * s)

    part = 0.0
    if j:
        part = 2 * singular_quad(bounded, 0.0, pi, abs_tol=QUAD_ABS_TOL, rel_tol=H_REL_TOL,
                                 points=_peak_points(1 - beta))
    return part + elliptic_ring_integral(beta)


def _sphere_ab(eta, xi):
    A = xi * sqrt(1 - 0.25 * eta * eta)
    B = eta * sqrt(1 - 0.25 * xi * xi)
    return A, B


def H_sphere(j: int, eta: float, xi: float) -> float:
    """(1/2 pi) int_0^{2 pi} cos(j tau) g_s(d(tau)) dtau for chord radii eta, xi.

    Split as in the module docstring: the bounded part
    (cos j tau - 1)(1/d + log(d)/2) - cos(j tau) log(2 + d)/2 by quadrature,
    the 1/d ring integral through the AGM, and the full-period log(d)/2 term
    from int_0^pi log(a + b cos x) dx = pi log((a + sqrt(a^2 - b^2))/2).
    """
    if j < 0 or int(j) != j:
        raise InvalidInputError("H_sphere needs an integer j >= 0")
    eta = float(eta)
    xi = float(xi)
    if not (0 <= eta <= 2 and 0 <= xi <= 2):
        raise DomainError("H_sphere needs chord radii in [0, 2]")
    A, B = _sphere_ab(eta, xi)
    if A == B:
        raise SingularInputError("H_sphere is singular when both radii coincide")
    amb = (xi * xi - eta * eta) / (A + B)
    big = max(A, B)
    # a = A^2 + B^2, b = 2AB, so a^2 - b^2 = (A^2 - B^2)^2
    a_coef = A * A + B * B
    half_log = 0.5 * pi * log(0.5 * (a_coef + abs(amb) * (A + B)))
    ring = elliptic_ring_integral(min(A, B) / big) / big

    def bounded(tau):
        s = sin(0.5 * tau)
        d = sqrt(amb * amb + 4 * A * B * s * s)
        c = cos(j * tau)
        val = -0.5 * c * log(2 + d)
        if j:
            val += (c - 1) * (1 / d + 0.5 * log(d))
        return val

    part = 2 * singular_quad(bounded, 0.0, pi, abs_tol=QUAD_ABS_TOL, rel_tol=H_REL_TOL,
                             points=_peak_points(abs(amb) / big))
    return (part + ring + half_log) / (2 * pi)


def angular_moments(A, B, AmB, jmax: int, sphere: bool, include_ring: bool = True) -> np.ndarray:
    """Vectorised I_j for j = 0..jmax.

    A, B are the factors with d^2 = (A - B)^2 + 4AB sin^2(tau/2); AmB is A - B
    supplied by the caller so that it carries no cancellation error.  Returns
    an array of shape (len(A), jmax + 1).  With include_ring=False the
    log-singular term 2 pi / AGM(A + B, |A - B|) is left out.
    """
    tau, w = angular_rule(jmax)
    j = np.arange(jmax + 1)
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    AmB = np.atleast_1d(np.asarray(AmB, dtype=float))
    half = np.sin(0.5 * tau) ** 2
    d = np.sqrt(AmB[:, None] ** 2 + 4 * (A * B)[:, None] * half)
    # cos(j tau) - 1 = -2 sin^2(j tau / 2); factor 2 for the half period
    cb = -4 * w[:, None] * np.sin(0.5 * np.outer(tau, j)) ** 2
    out = (1.0 / d) @ cb
    if include_ring:
        out += (2 * pi / agm(A + B, np.abs(AmB)))[:, None]
    if sphere:
        big = np.maximum(A, B)
        r = np.minimum(A, B) / big
        out[:, 0] += pi * np.log(big)
        if jmax:
            jj = j[1:]
            out[:, 1:] -= pi * r[:, None] ** jj / (2 * jj)
        cc = w[:, None] * np.cos(np.outer(tau, j))
        out -= np.log(2 + d) @ cc
    return out


def planar_moments(beta, jmax: int) -> np.ndarray:
    """H_j(beta) for beta in [0, 1) and j = 0..jmax, vectorised."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    return angular_moments(np.ones_like(beta), beta, 1.0 - beta, jmax, sphere=False)


def sphere_moments(eta, xi, jmax: int) -> np.ndarray:
    """H_sphere for j = 0..jmax at paired chord radii, vectorised."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    A = xi * np.sqrt(1 - 0.25 * eta ** 2)
    B = eta * np.sqrt(1 - 0.25 * xi ** 2)
    amb = (xi - eta) * (xi + eta) / (A + B)
    return angular_moments(A, B, amb, jmax, sphere=True) / (2 * pi)


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "porecap"


@dataclass(frozen=True)
class KernelTable:
    """Tabulated H_j values with cubic interpolation.

    The plane stores H_j(beta) on beta in [0, 1]; the beta = 1 column is
    singular and flagged.  The sphere stores H_sphere on a square grid of
    chord radii with the diagonal flagged.  Both store the smooth remainder
    after removing the ring term, which is added back exactly on lookup.
    """

    geometry: Surface
    max_j: int
    axis: np.ndarray
    remainder: np.ndarray
    singular: np.ndarray
    resolution: int
    order: int = 3
    _interp: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.axis, self.remainder, self.singular):
            arr.setflags(write=False)
        if self.geometry is Surface.PLANE:
            interp = [CubicSpline(self.axis, self.remainder[:, j]) for j in range(self.max_j + 1)]
        else:
            interp = [RectBivariateSpline(self.axis, self.axis, self.remainder[:, :, j],
                                          kx=self.order, ky=self.order)
                      for j in range(self.max_j + 1)]
        object.__setattr__(self, "_interp", interp)

    def values(self, j: int) -> np.ndarray:
        """Grid values of H_j (inf on the singular set)."""
        rem = self.remainder[..., j]
        ring = _table_ring(self.geometry, self.axis)
        return np.where(self.singular, np.inf, rem + ring)

    def __call__(self, j: int, *coords):
        if not 0 <= j <= self.max_j:
            raise InvalidInputError(f"table covers j <= {self.max_j}")
        if self.geometry is Surface.PLANE:
            (beta,) = coords
            beta = np.asarray(beta, dtype=float)
            if np.any(beta < 0):
                raise DomainError("beta must be non-negative")
            flip = beta > 1
            b = np.where(flip, 1.0 / np.where(flip, beta, 1.0), beta)
            with np.errstate(divide="ignore"):
                val = self._interp[j](b) + np.where(b == 1, np.inf, _ring_planar(b))
            val = np.where(flip, val / np.where(flip, beta, 1.0), val)
        else:
            eta, xi = (np.asarray(c, dtype=float) for c in coords)
            rem = self._interp[j](eta, xi, grid=False)
            val = rem + _ring_sphere(eta, xi)
        return float(val) if np.ndim(val) == 0 else val

    def header(self) -> dict:
        return {"format_version": TABLE_FORMAT_VERSION, "kind": "kernel",
                "geometry": self.geometry.value, "max_j": self.max_j,
                "resolution": self.resolution, "order": self.order,
                "axis_min": float(self.axis[0]), "axis_max": float(self.axis[-1])}


def _ring_planar(beta):
    beta = np.asarray(beta, dtype=float)
    safe = np.where(beta == 1, 0.0, beta)
    return np.where(beta == 1, np.inf, 2 * pi / agm(1 + safe, np.abs(1 - safe)))


def _ring_sphere(eta, xi):
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    A = xi * np.sqrt(1 - 0.25 * eta ** 2)
    B = eta * np.sqrt(1 - 0.25 * xi ** 2)
    amb = np.abs((xi - eta) * (xi + eta)) / np.where(A + B > 0, A + B, 1.0)
    with np.errstate(divide="ignore"):
        return np.where(amb == 0, np.inf, 1.0 / agm(A + B, amb))


def _table_ring(geometry, axis):
    if geometry is Surface.PLANE:
        return _ring_planar(axis)
    eta, xi = np.meshgrid(axis, axis, indexing="ij")
    return _ring_sphere(eta, xi)


def _kernel_cache_path(cache_dir, geometry, max_j, resolution) -> Path:
    name = f"kernel-{geometry.value}-j{max_j}-n{resolution}-v{TABLE_FORMAT_VERSION}.npz"
    return Path(cache_dir) / name


def build_kernel_table(geometry, max_j: int, resolution: int = 801, cache_dir=None) -> KernelTable:
    """Tabulate H_j for j <= max_j on ``resolution`` nodes per axis.

    With ``cache_dir`` set the table is stored as an npz file keyed by
    (geometry, max_j, resolution) and reloaded bit-for-bit on later calls.
    """
    geometry = Surface.parse(geometry)
    if int(max_j) != max_j or max_j < 0:
        raise InvalidInputError("max_j must be a non-negative integer")
    if int(resolution) != resolution or resolution < 8:
        raise InvalidInputError("kernel table resolution must be an integer >= 8")
    if cache_dir is not None:
        path = _kernel_cache_path(cache_dir, geometry, max_j, resolution)
        if path.exists():
            return load_kernel_table(path)
    if geometry is Surface.PLANE:
        axis = np.linspace(0.0, 1.0, resolution)
        singular = axis == 1.0
        rem = np.empty((resolution, max_j + 1))
        inner = axis[~singular]
        rem[~singular] = angular_moments(np.ones_like(inner), inner, 1.0 - inner, max_j,
                                         sphere=False, include_ring=False)
        # remainder is continuous at beta = 1; take its limit there
        rem[singular] = angular_moments(np.ones(1), np.ones(1), np.zeros(1), max_j,
                                        sphere=False, include_ring=False)
    else:
        axis = np.linspace(0.0, 2.0, resolution)
        eta, xi = np.meshgrid(axis, axis, indexing="ij")
        eta, xi = eta.ravel(), xi.ravel()
        A = xi * np.sqrt(1 - 0.25 * eta ** 2)
        B = eta * np.sqrt(1 - 0.25 * xi ** 2)
        amb = (xi - eta) * (xi + eta) / np.where(A + B > 0, A + B, 1.0)
        singular = (amb == 0).reshape(resolution, resolution)
        rem = np.empty((eta.size, max_j + 1))
        both_zero = (A == 0) & (B == 0)
        ok = ~both_zero
        for chunk in np.array_split(np.flatnonzero(ok), max(1, ok.sum() // 4096)):
            rem[chunk] = angular_moments(A[chunk], B[chunk], amb[chunk], max_j, sphere=True,
                                         include_ring=False) / (2 * pi)
        # at the shared pole the log(max) term diverges; fill from the neighbour
        rem[both_zero] = rem[1]
        rem = rem.reshape(resolution, resolution, max_j + 1)
    if not np.all(np.isfinite(rem)):
        raise TableBuildError("non-finite kernel table entries")
    table = KernelTable(geometry, int(max_j), axis, rem, singular, int(resolution))
    if cache_dir is not None:
        save_kernel_table(table, path)
    return table


def save_kernel_table(table: KernelTable, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, header=np.array(json.dumps(table.header(), sort_keys=True)),
             axis=table.axis, remainder=table.remainder, singular=table.singular)
    os.replace(tmp, path)


def load_kernel_table(path) -> KernelTable:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != TABLE_FORMAT_VERSION or header.get("kind") != "kernel":
            raise TableBuildError(f"incompatible kernel table file {path}")
        return KernelTable(Surface.parse(header["geometry"]), int(header["max_j"]),
                           data["axis"].copy(), data["remainder"].copy(),
                           data["singular"].copy(), int(header["resolution"]),
                           int(header["order"]))
