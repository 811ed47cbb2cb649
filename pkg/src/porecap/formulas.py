"""Closed-form and asymptotic reference results for pore capture."""

from dataclasses import dataclass
from math import e, isfinite, log, pi, sqrt

import mpmath
import numpy as np

from .errors import DomainError, InvalidInputError
from .kernels import g_sphere


@dataclass(frozen=True)
class AsymptoticEstimate:
    """A formula value with its term breakdown.

    With composition "sum" the terms are flux contributions and ``value`` is
    their sum.  With "reciprocal" the terms are the bracket entries of
    prefactor / [1 + ...] and ``value`` is prefactor over their sum.
    """

    value: float
    terms: tuple[tuple[str, float], ...]
    neglected_order: str
    composition: str = "sum"
    prefactor: float = 1.0

    def partial(self, n_terms: int) -> float:
        """Value kept to the first ``n_terms`` terms."""
        if not 1 <= n_terms <= len(self.terms):
            raise InvalidInputError(f"estimate has {len(self.terms)} terms")
        total = sum(v for _, v in self.terms[:n_terms])
        if self.composition == "sum":
            return total
        return self.prefactor / total

    def term(self, label: str) -> float:
        for name, v in self.terms:
            if name == label:
                return v
        raise KeyError(label)


@dataclass(frozen=True)
class BergPurcell:
    flux: float
    capacitance: float


def berg_purcell(N: int, a0: float, R0: float = 1.0, D: float = 1.0) -> BergPurcell:
    if N < 0 or a0 <= 0 or R0 <= 0 or D <= 0:
        raise InvalidInputError("berg_purcell needs N >= 0 and positive a0, R0, D")
    if not isfinite(N):
        return BergPurcell(4 * pi * D * R0, R0)
    C = N * a0 * R0 / (N * a0 + pi * R0)
    return BergPurcell(4 * pi * D * C, C)


def leakage_bp(sigma: float, a: float, D: float = 1.0) -> float:
    """Leakage parameter 4 D sigma / (pi a)."""
    if not 0 <= sigma < 1 or a <= 0:
        raise DomainError("leakage_bp needs 0 <= sigma < 1 and a > 0")
    return 4 * D * sigma / (pi * a)


def leakage_be(sigma: float, a: float, D: float, alpha_param: float, beta_param: float) -> float:
    """Leakage parameter with f(sigma) = (1 + alpha sqrt(sigma) - beta sigma^2)/(1 - sigma)^2.

    alpha_param and beta_param are lattice-dependent fit constants and must
    be supplied by the caller.
    """
    if not 0 <= sigma < 1:
        raise DomainError("leakage_be needs 0 <= sigma < 1")
    f = (1 + alpha_param * sqrt(sigma) - beta_param * sigma ** 2) / (1 - sigma) ** 2
    return leakage_bp(sigma, a, D) * f


def _planar_distances(centers):
    x = np.asarray(centers, dtype=float)
    if x.ndim != 2 or x.shape[1] not in (2, 3):
        raise InvalidInputError("centers must be an (N, 2) or (N, 3) array")
    diff = x[:, None, :2] - x[None, :, :2]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    off = ~np.eye(len(x), dtype=bool)
    if np.any(dist[off] == 0):
        raise DomainError("coincident pore centers")
    return dist, off


def planar_sums(centers, a=None) -> tuple[float, float]:
    """Pair sum sum_{j!=k} a_j a_k / d_jk and triplet sum, the latter in O(N^2).

    The triplet sum over j != k, i != j of a_i a_j a_k / (d_jk d_ji) equals
    sum_j a_j (sum_{k != j} a_k / d_jk)^2.
    """
    dist, off = _planar_distances(centers)
    n = dist.shape[0]
    a = np.ones(n) if a is None else np.asarray(a, dtype=float)
    inv = np.zeros_like(dist)
    inv[off] = 1.0 / dist[off]
    row = inv @ a
    return float(a @ row), float(a @ row ** 2)


def planar_sums_naive(centers, a=None) -> tuple[float, float]:
    """Direct O(N^3) evaluation of the same sums, for cross-checking."""
    dist, _ = _planar_distances(centers)
    n = dist.shape[0]
    a = np.ones(n) if a is None else np.asarray(a, dtype=float)
    pair = 0.0
    trip = 0.0
    for j in range(n):
        for k in range(n):
            if k == j:
                continue
            pair += a[j] * a[k] / dist[j, k]
            for i in range(n):
                if i != j:
                    trip += a[i] * a[j] * a[k] / (dist[j, k] * dist[j, i])
    return pair, trip


def planar_asymptotic_flux(centers, a=None, eps: float = 1.0, D: float = 1.0) -> AsymptoticEstimate:
    """J = 4DN eps abar [1 - (2 eps/(N pi abar)) S2 + (4 eps^2/(N pi^2 abar)) S3]."""
    n = len(centers)
    a = np.ones(n) if a is None else np.asarray(a, dtype=float)
    if n == 0 or np.any(a <= 0) or eps <= 0:
        raise InvalidInputError("need N >= 1, positive radius factors and eps > 0")
    abar = float(a.mean())
    s2, s3 = planar_sums(centers, a)
    lead = 4 * D * n * eps * abar
    pair = -lead * 2 * eps / (n * pi * abar) * s2
    trip = lead * 4 * eps ** 2 / (n * pi ** 2 * abar) * s3
    terms = (("leading", lead), ("pairwise", pair), ("triplet", trip))
    return AsymptoticEstimate(lead + pair + trip, terms, "O(eps^3)")


def _sphere_pair_sum(centers):
    x = np.asarray(centers, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3:
        raise InvalidInputError("centers must be an (N, 3) array")
    diff = x[:, None, :] - x[None, :, :]
    dist = np.minimum(np.linalg.norm(diff, axis=-1), 2.0)
    off = ~np.eye(len(x), dtype=bool)
    if np.any(dist[off] == 0):
        raise DomainError("coincident pore centers")
    return float(g_sphere(dist[off]).sum()) if off.any() else 0.0


def sphere_asymptotic_flux(centers, eps: float, D: float = 1.0) -> AsymptoticEstimate:
    """J = 4 eps D N [1 - (eps/pi) log 2eps + (eps/pi)(3/2 - (2/N) sum g_s)]."""
    n = len(centers)
    if n == 0 or not 0 < eps < 1:
        raise InvalidInputError("need N >= 1 and 0 < eps < 1")
    gsum = _sphere_pair_sum(centers)
    lead = 4 * eps * D * n
    terms = (("leading", lead),
             ("log", -lead * eps / pi * log(2 * eps)),
             ("self", lead * eps / pi * 1.5),
             ("interaction", -lead * eps / pi * 2 / n * gsum))
    return AsymptoticEstimate(sum(v for _, v in terms), terms, "O(eps^2 log eps)")


def sphere_single_pore_flux(eps: float, D: float = 1.0) -> AsymptoticEstimate:
    """J = 4 D eps / [1 + (eps/pi)(log 2eps - 3/2) - (eps^2/pi^2)(pi^2 + 21)/36].

    partial(2) gives the variant without the eps^2 term.
    """
    if not 0 < eps < 1:
        raise DomainError("sphere_single_pore_flux needs 0 < eps < 1")
    terms = (("leading", 1.0),
             ("log", eps / pi * (log(2 * eps) - 1.5)),
             ("quadratic", -eps ** 2 / pi ** 2 * (pi ** 2 + 21) / 36))
    pre = 4 * D * eps
    return AsymptoticEstimate(pre / sum(v for _, v in terms), terms, "O(eps^3 log eps)",
                              "reciprocal", pre)


def strieder_coefficients(dps: int = 40) -> list:
    """Series coefficients c_n of 8D sum c_n d^{-n}, n = 0..5, in high precision."""
    with mpmath.workdps(dps):
        p = mpmath.pi
        return [mpmath.mpf(1), -2 / p, 4 / p ** 2, -2 * (12 + p ** 2) / (3 * p ** 3),
                16 * (3 + p ** 2) / (3 * p ** 4),
                -4 * (120 + 70 * p ** 2 + 3 * p ** 4) / (15 * p ** 5)]


@dataclass(frozen=True)
class SeriesValue:
    value: float
    neglected_order: str
    terms: tuple[float, ...]


def strieder_two_pore_flux(d: float, D: float = 1.0) -> SeriesValue:
    """Six-term large-separation series for two unit pores a distance d apart."""
    if not d > 2:
        raise DomainError("two unit pores need separation d > 2")
    with mpmath.workdps(40):
        dm = mpmath.mpf(d)
        parts = [8 * D * c / dm ** n for n, c in enumerate(strieder_coefficients(40))]
        total = mpmath.fsum(parts)
        return SeriesValue(float(total), "O(d^-6)", tuple(float(x) for x in parts))


def homogenized_flux(sigma: float, eps: float, D: float = 1.0) -> float:
    """J_h = 4 pi D / [1 + (pi eps/(4 sigma))(1 - (4/pi) sqrt(sigma)
    + (sigma/pi) log(4 e^{-1} sqrt(sigma)) + eps^2/(2 pi sqrt(sigma)))]."""
    if not 0 < sigma < 1 or eps <= 0:
        raise DomainError("homogenized_flux needs 0 < sigma < 1 and eps > 0")
    rs = sqrt(sigma)
    inner = 1 - 4 / pi * rs + sigma / pi * log(4 / e * rs) + eps ** 2 / (2 * pi * rs)
    return 4 * pi * D / (1 + pi * eps / (4 * sigma) * inner)


def electrified_disk(s1, s2, eta, a: float = 1.0):
    """Potential (2/pi) arcsin(a/L) of a unit-potential disc of radius a on a reflecting plane."""
    s1, s2, eta = (np.asarray(v, dtype=float) for v in (s1, s2, eta))
    if np.any(eta < 0):
        raise DomainError("electrified_disk needs eta >= 0")
    r = np.hypot(s1, s2)
    L = 0.5 * (np.hypot(r + a, eta) + np.hypot(r - a, eta))
    val = 2 / pi * np.arcsin(np.minimum(a / L, 1.0))
    # arcsin near 1 amplifies rounding in L; the disc face is exactly 1
    val = np.where((eta == 0) & (r <= a), 1.0, val)
    return float(val) if val.ndim == 0 else val


def relative_error(j_num: float, j_ref: float) -> float:
    """|J_num - J_ref| / |J_num|."""
    return abs((j_num - j_ref) / j_num)
