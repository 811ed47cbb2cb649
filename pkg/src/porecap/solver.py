"""Galerkin system for the pore fluxes and its solution.

Unknowns are the coefficients of the flux density on every pore.  Internally
the flux is expanded in (alpha^2 - xi^2)^(-1/2) Z_{mj}(xi/alpha, t), which
spans the same space as the monomial basis (alpha^2 - xi^2)^(-1/2) (xi/alpha)^m
but gives a far better conditioned matrix; coefficients are converted to the
monomial basis for output.  Rows are Zernike projections of the induced
surface potential over each pore, divided by alpha^2, and the right-hand side
is the projection of p = 1.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import asin, pi

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from ._quadrature import gauss_legendre, newton_cotes_panels
from .basis import (angular_factor, flux_basis_total_flux, mode_count, mode_list,
                    zernike_flux_total, zernike_radial, zernike_to_monomial)
from .errors import (AssemblyError, GeometryError, InvalidInputError, SolverError,
                     UnsupportedConfigurationError)
from .geometry import PoreConfiguration, Surface, angular_separation, local_frame, validate_nonoverlap
from .potential import PotentialTable, RadialPoints, build_potential_table, profile_pairs, radial_profiles

NC_POINTS = 10


@dataclass(frozen=True)
class SpectralParams:
    """Discretisation settings.

    n_t angular and n_r radial collocation points per target pore for the
    interaction blocks.  radial_rule "gauss" puts n_r Gauss points in r;
    "newton-cotes" uses n_r / 10 ten-point closed panels in r^2 with shared
    ends merged, which only integrates the odd-m test functions to a few
    digits.  n_self Gauss points resolve the self blocks.
    """

    M: int = 10
    n_t: int | None = None
    n_r: int = 40
    n_self: int | None = None
    table_deg: int = 20
    table_tol: float = 1e-13
    abs_tol: float = 1e-15
    rel_tol: float = 1e-8
    threads: int = 1
    radial_rule: str = "gauss"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 0:
            raise InvalidInputError("M must be a non-negative integer")
        if self.n_t is None:
            object.__setattr__(self, "n_t", max(64, 8 * self.M))
        if self.n_self is None:
            object.__setattr__(self, "n_self", max(24, self.M + 12))
        if self.n_t < 4 * self.M + 8:
            raise InvalidInputError("n_t must be at least 4M + 8")
        if self.radial_rule not in ("gauss", "newton-cotes"):
            raise InvalidInputError("radial_rule must be 'gauss' or 'newton-cotes'")
        if self.radial_rule == "newton-cotes" and (self.n_r < NC_POINTS or self.n_r % NC_POINTS):
            raise InvalidInputError("n_r must be a positive multiple of 10")
        if self.n_r < self.M // 2 + 2:
            raise InvalidInputError("n_r too small for M")
        if self.n_self < self.M + 2:
            raise InvalidInputError("n_self must exceed M + 1")
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")

    def with_M(self, M: int) -> "SpectralParams":
        """Same settings at another degree, with n_t and n_self re-derived."""
        return replace(self, M=M, n_t=None, n_self=None)


@dataclass
class FluxSolution:
    """Result of a solve.  ``coefficients`` are the monomial flux weights b_{mjk}
    flattened pore-major, then in mode order."""

    surface: Surface
    M: int
    coefficients: np.ndarray
    pore_fluxes: np.ndarray
    total_flux: float
    capacitance: float
    diffusivity: float = 1.0
    residual: float | None = None
    condition: float | None = None
    zernike_coefficients: np.ndarray | None = None
    timings: dict = field(default_factory=dict)

    @property
    def J(self) -> float:
        return self.total_flux

    @property
    def C(self) -> float:
        return self.capacitance

    def coefficient_matrix(self) -> np.ndarray:
        return self.coefficients.reshape(len(self.pore_fluxes), mode_count(self.M))


def _capacitance(surface, J, D):
    return J / (2 * pi * D) if surface is Surface.PLANE else J / (4 * pi * D)


def _common_radius(config: PoreConfiguration) -> float:
    alpha = config.common_radius()
    if alpha is None:
        raise UnsupportedConfigurationError("the solver needs a common pore radius")
    return alpha


def project_boundary_data(config: PoreConfiguration, M: int) -> np.ndarray:
    """Coefficients of p = 1 in the scaled Zernike basis: sqrt(pi) on every (0, 0) mode."""
    _common_radius(config)
    nm = mode_count(M)
    c = np.zeros(config.n_pores * nm)
    c[::nm] = np.sqrt(pi)
    return c


def _self_block(alpha, M, sphere, n_self, threads=1):
    """Self-interaction block in the Zernike flux basis (diagonal in j)."""
    x, w = gauss_legendre(n_self)
    phi = 0.5 * pi * x
    w = 0.5 * pi * w
    prof = radial_profiles(alpha, M, RadialPoints.inside(alpha, phi), sphere, threads=threads)
    pairs = profile_pairs(M)
    col = {p: i for i, p in enumerate(pairs)}
    u = np.sin(phi)
    jac = w * u * np.cos(phi)
    modes = mode_list(M)
    radial = {p: zernike_radial(p[0], p[1], u) for p in pairs}
    S = np.zeros((len(modes), len(modes)))
    for a, mp in enumerate(modes):
        for b, m in enumerate(modes):
            if mp.j != m.j:
                continue
            ang = 2 * pi if m.j == 0 else pi
            S[a, b] = ang * np.sum(jac * radial[(mp.m, abs(mp.j))] * prof[:, col[(m.m, abs(m.j))]])
    return S


def _target_rule(alpha, params):
    """Collocation nodes on a pore: local chord radius, angle and weight."""
    if params.radial_rule == "gauss":
        r, wr = gauss_legendre(params.n_r)
        wr = wr * r
    else:
        u, wu = newton_cotes_panels(params.n_r // NC_POINTS, NC_POINTS - 1)
        r, wr = np.sqrt(u), 0.5 * wu
    t = 2 * pi * np.arange(params.n_t) / params.n_t
    rr, tt = np.meshgrid(r, t, indexing="ij")
    w = wr[:, None] * np.full(params.n_t, 2 * pi / params.n_t)[None, :]
    return rr.ravel(), tt.ravel(), w.ravel()


def _test_matrix(M, r, t, w):
    modes = mode_list(M)
    return np.column_stack([w * zernike_radial(m.m, abs(m.j), r) * angular_factor(m.j, t)
                            for m in modes])


def _trig_columns(M, t):
    """angular_factor(j, t) for j = -M..M as columns (index j + M)."""
    js = np.arange(-M, M + 1)
    out = np.empty(t.shape + (js.size,))
    for idx, j in enumerate(js):
        out[..., idx] = angular_factor(int(j), t)
    return out


class _Geometry:
    """Target collocation points and source-frame coordinates for one configuration."""

    def __init__(self, config, alpha, params):
        self.config = config
        self.alpha = alpha
        self.sphere = config.surface is Surface.UNIT_SPHERE
        self.centers = config.centers
        r, t, w = _target_rule(alpha, params)
        self.r, self.t, self.w = r, t, w
        if self.sphere:
            self.nu = 2 * asin(alpha / 2)
            self.frames = np.array([local_frame(c) for c in self.centers])
            # the chord radius from the pore center is alpha r
            theta = 2 * np.arcsin(0.5 * alpha * r)
            self.local = np.column_stack([np.sin(theta) * np.cos(t), np.sin(theta) * np.sin(t),
                                          np.cos(theta)])
        else:
            self.nu = alpha

    def points(self, k):
        if self.sphere:
            return self.local @ self.frames[k]
        x = self.centers[k]
        rr = self.alpha * self.r
        return np.column_stack([x[0] + rr * np.cos(self.t), x[1] + rr * np.sin(self.t),
                                np.zeros_like(rr)])

    def source_coords(self, X, k):
        """(radial coordinate, gap to the pore edge, azimuth) of points X about pore k."""
        if self.sphere:
            L = X @ self.frames[k].T
            rho = np.hypot(L[..., 0], L[..., 1])
            theta = np.arctan2(rho, L[..., 2])
            return theta, theta - self.nu, np.arctan2(L[..., 1], L[..., 0])
        d = X[..., :2] - self.centers[k][:2]
        r = np.hypot(d[..., 0], d[..., 1])
        return r, r - self.alpha, np.arctan2(d[..., 1], d[..., 0])

    def separations(self):
        n = len(self.centers)
        out = []
        for a in range(n):
            for b in range(a + 1, n):
                if self.sphere:
                    out.append(angular_separation(self.centers[a], self.centers[b]))
                else:
                    out.append(float(np.hypot(*(self.centers[a][:2] - self.centers[b][:2]))))
        return np.array(out)


def _interaction_table(geo: _Geometry, params, M, table=None):
    seps = geo.separations()
    if seps.size == 0:
        return None
    edge = geo.nu
    gap_min = float(seps.min()) - 2 * edge
    if gap_min <= 0:
        raise GeometryError("pores overlap")
    r_max = np.pi if geo.sphere else float(seps.max()) + edge * 1.001
    if table is not None:
        ok = (table.M >= M and table.geometry is geo.config.surface
              and abs(table.alpha - geo.alpha) <= 1e-15 * geo.alpha
              and table.weight == "zernike" and table.outer is not None
              and np.exp(table.z_min) <= 0.999 * gap_min and table.r_max >= r_max * (1 - 1e-12))
        if not ok:
            raise AssemblyError("potential table does not cover this configuration")
        return table
    return build_potential_table(geo.config.surface, geo.alpha, M, r_max=r_max,
                                 gap_min=0.5 * gap_min, deg=params.table_deg,
                                 tol=params.table_tol, threads=params.threads, inner=False)


def _mode_columns(M, table_pairs):
    modes = mode_list(M)
    col = {p: i for i, p in enumerate(table_pairs)}
    prof_idx = np.array([col[(m.m, abs(m.j))] for m in modes])
    trig_idx = np.array([m.j + M for m in modes])
    return prof_idx, trig_idx


def _row_blocks(kp, geo, table, T, M, prof_idx, trig_idx):
    """All interaction blocks with target pore kp, shape (N, nm, nm); slot kp is zero."""
    n = len(geo.centers)
    nm = len(prof_idx)
    X = geo.points(kp)
    out = np.zeros((n, nm, nm))
    for k in range(n):
        if k == kp:
            continue
        _, gap, t = geo.source_coords(X, k)
        P = table.outer_from_gap(gap)
        S = P[:, prof_idx] * _trig_columns(M, t)[:, trig_idx]
        out[k] = T.T @ S
    return out


def _assemble_zernike(config, params, potential_table=None):
    alpha = _common_radius(config)
    report = validate_nonoverlap(config)
    if not report.ok:
        raise GeometryError(f"overlapping pores: {report.violations[:5]}")
    M = params.M
    nm = mode_count(M)
    N = config.n_pores
    sphere = config.surface is Surface.UNIT_SPHERE
    timings = {}
    t0 = time.perf_counter()
    S = _self_block(alpha, M, sphere, params.n_self, params.threads)
    timings["self_block"] = time.perf_counter() - t0
    A = np.zeros((N * nm, N * nm))
    for k in range(N):
        A[k * nm:(k + 1) * nm, k * nm:(k + 1) * nm] = S
    if N > 1:
        geo = _Geometry(config, alpha, params)
        t0 = time.perf_counter()
        table = _interaction_table(geo, params, M, potential_table)
        timings["table"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        T = _test_matrix(M, geo.r, geo.t, geo.w)
        prof_idx, trig_idx = _mode_columns(M, table.pairs)

        def row(kp):
            blocks = _row_blocks(kp, geo, table, T, M, prof_idx, trig_idx)
            for k in range(N):
                if k != kp:
                    A[kp * nm:(kp + 1) * nm, k * nm:(k + 1) * nm] = blocks[k]

        if params.threads > 1:
            with ThreadPoolExecutor(params.threads) as pool:
                list(pool.map(row, range(N)))
        else:
            for kp in range(N):
                row(kp)
        timings["interaction"] = time.perf_counter() - t0
    else:
        table = None
    return A, table, timings


def assemble_matrix(config: PoreConfiguration, params: SpectralParams, kernel_table=None,
                    potential_table: PotentialTable | None = None, basis: str = "monomial") -> np.ndarray:
    """Galerkin matrix of size N (M+1)(M+2)/2.

    basis="monomial" returns the matrix acting on the monomial flux weights
    b_{mjk}; basis="zernike" the better conditioned one used by ``solve``.
    The kernel table is accepted for interface symmetry and only checked for
    coverage, since the profiles are evaluated from the moments directly.
    """
    if kernel_table is not None and kernel_table.max_j < params.M:
        raise AssemblyError("kernel table does not cover j <= M")
    A, _, _ = _assemble_zernike(config, params, potential_table)
    if basis == "zernike":
        return A
    if basis != "monomial":
        raise InvalidInputError(f"unknown basis {basis!r}")
    T = zernike_to_monomial(params.M)
    N = config.n_pores
    nm = T.shape[0]
    out = np.empty_like(A)
    for k in range(N):
        cols = slice(k * nm, (k + 1) * nm)
        # A_mono = A_zern T^{-1}, i.e. solve X T = A_zern
        out[:, cols] = linalg.solve_triangular(T, A[:, cols].T, trans="T", lower=False).T
    return out


@dataclass(frozen=True)
class LinearSolveInfo:
    condition: float
    residual: float


def solve_coefficients(A, c, return_info: bool = False):
    """Dense LU solve of A b = c with a 1-norm condition estimate."""
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != c.shape[0]:
        raise InvalidInputError("A must be square and match c")
    if not np.all(np.isfinite(A)):
        raise SolverError("matrix has non-finite entries")
    anorm = np.abs(A).sum(axis=0).max()
    lu, piv, info = lapack.dgetrf(A)
    if info > 0:
        raise SolverError("matrix is exactly singular", rcond=0.0)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if not rcond > np.finfo(float).eps:
        raise SolverError(f"matrix is numerically singular (rcond = {rcond:.3e})", rcond=rcond)
    b, _ = lapack.dgetrs(lu, piv, c)
    cn = np.abs(c).max()
    residual = float(np.abs(A @ b - c).max() / cn) if cn > 0 else float(np.abs(A @ b).max())
    if return_info:
        return b, LinearSolveInfo(1.0 / rcond, residual)
    return b


def compute_flux(b, config: PoreConfiguration, M: int | None = None) -> FluxSolution:
    """Fluxes from monomial flux weights; only axisymmetric modes carry net flux."""
    alpha = _common_radius(config)
    b = np.asarray(b, dtype=float)
    N = config.n_pores
    if M is None:
        nm = b.size // N
        M = int(round((np.sqrt(8 * nm + 1) - 3) / 2))
    nm = mode_count(M)
    if b.size != N * nm:
        raise InvalidInputError("coefficient vector does not match the configuration")
    weights = np.array([flux_basis_total_flux(m, alpha) for m in mode_list(M)])
    fluxes = config.diffusivity * b.reshape(N, nm) @ weights
    J = float(fluxes.sum())
    return FluxSolution(config.surface, M, b, fluxes, J,
                        _capacitance(config.surface, J, config.diffusivity), config.diffusivity)


def _check_points(alpha):
    """Radii (in units of alpha) and angles of the residual check points."""
    r = np.array([0.0] + [0.5] * 4 + [0.9] * 4)
    t = np.array([0.0] + list(np.pi / 2 * np.arange(4) + 0.3) + list(np.pi / 2 * np.arange(4) + 1.1))
    return r, t


def surface_potential_residual(config, params, bz, table=None) -> float:
    """max |p - 1| over check points inside every pore, p rebuilt from the solution."""
    alpha = _common_radius(config)
    M = params.M
    modes = mode_list(M)
    nm = len(modes)
    N = config.n_pores
    sphere = config.surface is Surface.UNIT_SPHERE
    bz = bz.reshape(N, nm)
    r, t = _check_points(alpha)
    own = radial_profiles(alpha, M, RadialPoints.inside(alpha, np.arcsin(r)), sphere)
    pairs = profile_pairs(M)
    col = {p: i for i, p in enumerate(pairs)}
    prof_idx = np.array([col[(m.m, abs(m.j))] for m in modes])
    trig_idx = np.array([m.j + M for m in modes])
    base = own[:, prof_idx] * _trig_columns(M, t)[:, trig_idx]
    p = bz @ base.T  # (N, n_check) self contribution
    if N > 1:
        check = params
        geo = _Geometry(config, alpha, check)
        # reuse the geometry helper with the check points as targets
        geo.r, geo.t = r, t
        if sphere:
            theta = 2 * np.arcsin(0.5 * alpha * r)
            geo.local = np.column_stack([np.sin(theta) * np.cos(t), np.sin(theta) * np.sin(t),
                                         np.cos(theta)])
        for kp in range(N):
            X = geo.points(kp)
            for k in range(N):
                if k == kp:
                    continue
                _, gap, tt = geo.source_coords(X, k)
                P = table.outer_from_gap(gap)
                p[kp] += (P[:, prof_idx] * _trig_columns(M, tt)[:, trig_idx]) @ bz[k]
    return float(np.abs(p - 1.0).max())


def solve(config: PoreConfiguration, params: SpectralParams | None = None,
          potential_table: PotentialTable | None = None, residual: bool = True) -> FluxSolution:
    """Tables, boundary projection, assembly, dense solve and flux extraction."""
    params = SpectralParams() if params is None else params
    t_start = time.perf_counter()
    alpha = _common_radius(config)
    A, table, timings = _assemble_zernike(config, params, potential_table)
    c = project_boundary_data(config, params.M)
    t0 = time.perf_counter()
    bz, info = solve_coefficients(A, c, return_info=True)
    timings["solve"] = time.perf_counter() - t0
    modes = mode_list(params.M)
    nm = len(modes)
    N = config.n_pores
    Tm = zernike_to_monomial(params.M)
    b = (bz.reshape(N, nm) @ Tm.T).ravel()
    weights = np.array([zernike_flux_total(m, alpha) for m in modes])
    fluxes = config.diffusivity * bz.reshape(N, nm) @ weights
    J = float(fluxes.sum())
    sol = FluxSolution(config.surface, params.M, b, fluxes, J,
                       _capacitance(config.surface, J, config.diffusivity), config.diffusivity,
                       condition=info.condition, zernike_coefficients=bz)
    if residual:
        t0 = time.perf_counter()
        sol.residual = surface_potential_residual(config, params, bz, table)
        timings["residual"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start
    sol.timings = timings
    return sol
