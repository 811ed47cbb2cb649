"""Surface potential induced by the singular flux basis of one pore.

For a source pore of radius alpha and a flux density
w(rho/alpha) (alpha^2 - rho^2)^(-1/2) times the angular factor of mode j, the
potential (1/2 pi) int g(|x - y|) q(y) dS at local polar coordinates (xi, t)
is P(xi) times the same angular factor, where with rho = alpha sin s

    P(xi) = alpha/(2 pi) int_0^{pi/2} w(sin s) sin s I_j(alpha sin s, xi) ds.

I_j is the angular moment from ``kernels``.  When xi < alpha the integrand
has a logarithmic singularity at s* = arcsin(xi/alpha); the s-interval is
split there and graded toward s* from both sides.  On the sphere xi and rho
are chord distances from the pore center, for which dS = rho drho dt.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import asin, pi, sin

import numpy as np
from numpy.polynomial import chebyshev as C

from ._quadrature import graded_unit
from .basis import wallis, zernike_radial
from .errors import DomainError, InvalidInputError, TableBuildError
from .geometry import Surface
from .kernels import (H_planar, H_sphere, QUAD_ABS_TOL, QUAD_REL_TOL, angular_moments,
                      singular_quad)

GRADE_RATIO = 0.3


def profile_pairs(M: int) -> tuple[tuple[int, int], ...]:
    """(m, |j|) pairs of degree <= M, the distinct radial profiles."""
    return tuple((m, j) for m in range(M + 1) for j in range(m % 2, m + 1, 2))


def _weights(kind, pairs, u):
    if kind == "zernike":
        return np.column_stack([zernike_radial(m, j, u) for m, j in pairs])
    if kind == "monomial":
        return np.column_stack([u ** m for m, _ in pairs])
    raise InvalidInputError(f"unknown source weight {kind!r}")


def _nodes(alpha, gap, sstar, n):
    """Quadrature in s plus the exact differences xi - alpha sin s."""
    gx, gw = graded_unit(n, GRADE_RATIO)
    if gap < 0:
        left, right = sstar, 0.5 * pi - sstar
        o_l, o_r = left * gx, right * gx
        s = np.concatenate([sstar - o_l, sstar + o_r])
        w = np.concatenate([left * gw, right * gw])
        diff = np.concatenate([2 * alpha * np.cos(sstar - 0.5 * o_l) * np.sin(0.5 * o_l),
                               -2 * alpha * np.cos(sstar + 0.5 * o_r) * np.sin(0.5 * o_r)])
    else:
        o = 0.5 * pi * gx
        s = 0.5 * pi - o
        w = 0.5 * pi * gw
        diff = gap + 2 * alpha * np.sin(0.5 * o) ** 2
    # nodes whose squared offset underflows sit on s* with negligible weight
    keep = (s > 0) & (diff * diff > 0)
    return s[keep], w[keep], diff[keep]


def _profile_point(alpha, xi, gap, sstar, sphere, pairs, jmax, weight, n):
    s, w, diff = _nodes(alpha, gap, sstar, n)
    u = np.sin(s)
    eta = alpha * u
    if sphere:
        A = xi * np.sqrt(1 - 0.25 * eta ** 2)
        B = eta * np.sqrt(1 - 0.25 * xi ** 2)
        amb = diff * (xi + eta) / (A + B)
    else:
        A, B, amb = np.full_like(eta, xi), eta, diff
    moments = angular_moments(A, B, amb, jmax, sphere)
    jcol = np.array([j for _, j in pairs])
    W = (w * u)[:, None] * _weights(weight, pairs, u)
    return alpha / (2 * pi) * np.einsum("np,np->p", W, moments[:, jcol])


@dataclass(frozen=True)
class RadialPoints:
    """Target radii described so that edge-sensitive quantities stay exact.

    xi: chord (sphere) or Euclidean (plane) distance from the source center;
    gap: xi - alpha; sstar: arcsin(xi/alpha), used only where gap < 0.
    """

    xi: np.ndarray
    gap: np.ndarray
    sstar: np.ndarray

    @classmethod
    def inside(cls, alpha, phi):
        phi = np.asarray(phi, dtype=float)
        gap = -2 * alpha * np.sin(0.5 * (0.5 * pi - phi)) ** 2
        return cls(alpha * np.sin(phi), gap, phi)

    @classmethod
    def outside_plane(cls, alpha, gap):
        gap = np.asarray(gap, dtype=float)
        return cls(alpha + gap, gap, np.full_like(gap, 0.5 * pi))

    @classmethod
    def outside_sphere(cls, nu, theta, dtheta=None):
        """Exterior points at angular distance theta; dtheta = theta - nu if known."""
        theta = np.asarray(theta, dtype=float)
        dtheta = theta - nu if dtheta is None else np.asarray(dtheta, dtype=float)
        gap = 4 * np.cos(0.25 * (theta + nu)) * np.sin(0.25 * dtheta)
        return cls(2 * np.sin(0.5 * theta), gap, np.full_like(theta, 0.5 * pi))

    @classmethod
    def from_xi(cls, alpha, xi):
        xi = np.asarray(xi, dtype=float)
        inside = xi < alpha
        sstar = np.where(inside, np.arcsin(np.minimum(xi / alpha, 1.0)), 0.5 * pi)
        return cls(xi, xi - alpha, sstar)


def radial_profiles(alpha: float, M: int, points: RadialPoints, sphere: bool,
                    weight: str = "zernike", n: int | None = None, threads: int = 1) -> np.ndarray:
    """Radial factors of all (m, |j|) profiles of degree <= M at the given points.

    ``weight`` selects the source radial factor: "zernike" for the normalised
    Zernike radial polynomial, "monomial" for (rho/alpha)^m.  Returns an
    array (n_points, n_pairs) in profile_pairs(M) order.
    """
    pairs = profile_pairs(M)
    if n is None:
        n = max(16, M + 6)
    xi, gap, sstar = (np.atleast_1d(a) for a in (points.xi, points.gap, points.sstar))
    if sphere and np.any(xi > 2):
        raise DomainError("chord distance on the unit sphere cannot exceed 2")

    def one(i):
        return _profile_point(alpha, xi[i], gap[i], sstar[i], sphere, pairs, M, weight, n)

    if threads > 1 and xi.size > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, range(xi.size)))
    else:
        rows = [one(i) for i in range(xi.size)]
    return np.array(rows).reshape(xi.size, len(pairs))


def _check_mj(m, j):
    if j < 0 or m < j or (m - j) % 2:
        raise InvalidInputError(f"invalid mode (m={m}, j={j})")


def induced_potential_planar(m: int, j: int, xi: float, alpha: float) -> float:
    """(1/2 pi) int_0^{pi/2} sin^m(s) H_j(xi / (alpha sin s)) ds, monomial flux basis.

    Slow reference path: adaptive quadrature over s around direct H_j.
    """
    _check_mj(m, j)
    if xi < 0:
        raise DomainError("xi must be non-negative")

    def f(s):
        u = sin(s)
        if u == 0:
            return 0.0
        return u ** m * H_planar(j, xi / (alpha * u))

    if xi == 0:
        # H_j(0) = 2 pi delta_j0
        return wallis(m) if j == 0 else 0.0
    if xi < alpha:
        ss = asin(xi / alpha)
        val = (singular_quad(f, 0.0, ss, (False, True), 1e-14, QUAD_REL_TOL)
               + singular_quad(f, ss, 0.5 * pi, (True, False), 1e-14, QUAD_REL_TOL))
    else:
        val = singular_quad(f, 0.0, 0.5 * pi, (False, xi == alpha), 1e-14, QUAD_REL_TOL)
    return val / (2 * pi)


def induced_potential_sphere(m: int, j: int, xi: float, alpha: float) -> float:
    """alpha int_0^{pi/2} sin^{m+1}(s) H_sphere(j, alpha sin s, xi) ds, monomial flux basis."""
    _check_mj(m, j)
    if not 0 <= xi <= 2:
        raise DomainError("chord distance must lie in [0, 2]")

    def f(s):
        u = sin(s)
        if u == 0:
            return 0.0
        return u ** (m + 1) * H_sphere(j, alpha * u, xi)

    if xi == 0 and j > 0:
        return 0.0
    if 0 < xi < alpha:
        ss = asin(xi / alpha)
        val = (singular_quad(f, 0.0, ss, (False, True), QUAD_ABS_TOL, QUAD_REL_TOL)
               + singular_quad(f, ss, 0.5 * pi, (True, False), QUAD_ABS_TOL, QUAD_REL_TOL))
    else:
        val = singular_quad(f, 0.0, 0.5 * pi, (True, xi == alpha), QUAD_ABS_TOL, QUAD_REL_TOL)
    return alpha * val


@dataclass(frozen=True)
class ChebPanels:
    """Piecewise Chebyshev interpolant of several functions of one variable."""

    breaks: np.ndarray
    coeffs: np.ndarray  # (n_panels, deg + 1, n_functions)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        lo, hi = self.breaks[0], self.breaks[-1]
        if flat.size and (flat.min() < lo - 1e-12 * max(1.0, abs(lo))
                          or flat.max() > hi + 1e-12 * max(1.0, abs(hi))):
            raise DomainError(f"table query outside [{lo}, {hi}]")
        idx = np.clip(np.searchsorted(self.breaks, flat, side="right") - 1, 0, len(self.breaks) - 2)
        out = np.empty((flat.size, self.coeffs.shape[2]))
        order = np.argsort(idx, kind="stable")
        sorted_idx = idx[order]
        starts = np.searchsorted(sorted_idx, np.arange(len(self.breaks) - 1), side="left")
        ends = np.searchsorted(sorted_idx, np.arange(len(self.breaks) - 1), side="right")
        deg = self.coeffs.shape[1] - 1
        for p in np.flatnonzero(ends > starts):
            sel = order[starts[p]:ends[p]]
            a, b = self.breaks[p], self.breaks[p + 1]
            x = np.clip((2 * flat[sel] - a - b) / (b - a), -1.0, 1.0)
            out[sel] = C.chebvander(x, deg) @ self.coeffs[p]
        return out.reshape(u.shape + (self.coeffs.shape[2],))


def fit_cheb_panels(f, a: float, b: float, deg: int = 20, tol: float = 1e-13,
                    initial: int = 1, max_panels: int = 4096) -> ChebPanels:
    """Adaptive bisection until the trailing Chebyshev coefficients fall below tol.

    The threshold is relative to the largest coefficient mass seen over all
    panels, so modes with tiny profiles are resolved in absolute terms.
    """
    edges = np.linspace(a, b, initial + 1)
    work = list(zip(edges[:-1], edges[1:]))
    accepted = {}
    scale = 0.0
    min_width = 1e-6 * (b - a)

    def converged(c, width):
        return width <= min_width or float(np.abs(c[-3:]).max()) <= tol * scale

    while work:
        while work:
            if len(accepted) + len(work) > max_panels:
                raise TableBuildError("Chebyshev table needs too many panels")
            lo, hi = work.pop()
            c = C.chebinterpolate(lambda x: f(0.5 * (hi - lo) * x + 0.5 * (hi + lo)), deg)
            c = c.reshape(deg + 1, -1)
            scale = max(scale, float(np.abs(c).sum(axis=0).max()))
            if converged(c, hi - lo):
                accepted[(lo, hi)] = c
            else:
                mid = 0.5 * (lo + hi)
                work += [(lo, mid), (mid, hi)]
        # the scale may have grown after some panels were accepted
        for key in [k for k, c in accepted.items() if not converged(c, k[1] - k[0])]:
            del accepted[key]
            mid = 0.5 * (key[0] + key[1])
            work += [(key[0], mid), (mid, key[1])]
    keys = sorted(accepted)
    breaks = np.array([k[0] for k in keys] + [keys[-1][1]])
    coeffs = np.array([accepted[k] for k in keys])
    return ChebPanels(breaks, coeffs)


@dataclass(frozen=True)
class PotentialTable:
    """Tabulated radial profiles of one source pore, for all (m, |j|) with m <= M.

    Inside the pore the profiles are tabulated in phi = arcsin(xi/alpha),
    outside in z = log(r - r_edge) where r is the in-plane distance (plane)
    or the angular distance from the pore center (sphere).
    """

    geometry: Surface
    alpha: float
    M: int
    r_max: float
    inner: ChebPanels | None
    outer: ChebPanels | None
    weight: str = "zernike"
    z_min: float = float("nan")
    pairs: tuple = field(default=(), repr=False)

    @property
    def r_edge(self) -> float:
        if self.geometry is Surface.PLANE:
            return self.alpha
        return 2 * asin(self.alpha / 2)

    def column(self, m: int, j: int) -> int:
        try:
            return self.pairs.index((m, abs(j)))
        except ValueError:
            raise InvalidInputError(f"mode ({m}, {j}) not in table") from None

    def evaluate(self, r) -> np.ndarray:
        """Profiles at radial coordinate r (plane: distance, sphere: angle)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(r.shape + (len(self.pairs),))
        edge = self.r_edge
        inside = r <= edge
        if np.any(inside):
            if self.inner is None:
                raise DomainError("table has no interior part")
            phi = self._phi(r[inside])
            out[inside] = self.inner(phi)
        if np.any(~inside):
            if self.outer is None:
                raise DomainError("table has no exterior part")
            out[~inside] = self.outer_from_gap(self._gap(r[~inside]))
        return out

    def outer_from_gap(self, gap) -> np.ndarray:
        """Exterior profiles at r - r_edge = gap > 0, without forming r."""
        z = np.log(np.maximum(gap, np.exp(self.z_min)))
        return self.outer(z)

    def _phi(self, r):
        if self.geometry is Surface.PLANE:
            return np.arcsin(np.minimum(r / self.alpha, 1.0))
        return np.arcsin(np.minimum(2 * np.sin(0.5 * r) / self.alpha, 1.0))

    def _gap(self, r):
        return r - self.r_edge

    def profile(self, m: int, j: int, r) -> np.ndarray:
        return self.evaluate(r)[..., self.column(m, j)]


def build_potential_table(geometry, alpha: float, M: int, kernel_table=None,
                          r_max: float | None = None, gap_min: float | None = None,
                          deg: int = 20, tol: float = 1e-13, weight: str = "zernike",
                          threads: int = 1, inner: bool = True) -> PotentialTable:
    """Tabulate the source profiles of a pore of radius alpha.

    The profiles are evaluated directly from the angular moments, so the
    kernel table is only checked for coverage.  ``r_max`` bounds the
    exterior part (plane: in-plane distance, default 100 alpha; sphere: pi);
    ``gap_min`` is the smallest exterior distance from the pore edge needed.
    inner=False skips the interior part, which interaction blocks never use.
    """
    geometry = Surface.parse(geometry)
    if M < 0:
        raise InvalidInputError("M must be non-negative")
    if kernel_table is not None and kernel_table.max_j < M:
        raise InvalidInputError("kernel table does not cover j <= M")
    if deg < 4 or tol <= 0:
        raise InvalidInputError("table resolution too coarse")
    sphere = geometry is Surface.UNIT_SPHERE
    pairs = profile_pairs(M)
    if sphere:
        if not 0 < alpha < 2:
            raise InvalidInputError("sphere chord radius must be in (0, 2)")
        nu = 2 * asin(alpha / 2)
        edge, top = nu, np.pi if r_max is None else min(float(r_max), np.pi)
    else:
        edge, top = alpha, 100 * alpha if r_max is None else float(r_max)
    if gap_min is None:
        gap_min = 1e-3 * alpha
    span = top - edge
    if span <= 0:
        raise InvalidInputError("r_max must exceed the pore radius")
    gap_min = min(gap_min, 0.5 * span)

    def inner_f(phi):
        return radial_profiles(alpha, M, RadialPoints.inside(alpha, phi), sphere, weight,
                               threads=threads)

    def outer_f(z):
        gap = np.exp(z)
        pts = (RadialPoints.outside_sphere(nu, edge + gap, gap) if sphere
               else RadialPoints.outside_plane(alpha, gap))
        return radial_profiles(alpha, M, pts, sphere, weight, threads=threads)

    inner_panels = fit_cheb_panels(inner_f, 0.0, 0.5 * pi, deg, tol) if inner else None
    z_lo, z_hi = np.log(gap_min), np.log(span)
    outer = fit_cheb_panels(outer_f, z_lo, z_hi, deg, tol,
                            initial=max(1, int(np.ceil(z_hi - z_lo))))
    return PotentialTable(geometry, float(alpha), int(M), float(top), inner_panels, outer, weight,
                          float(z_lo), pairs)
