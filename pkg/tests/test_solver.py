from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from porecap.basis import ModeIndex, mode_count, mode_list, zernike_eval
from porecap.errors import (AssemblyError, GeometryError, InvalidInputError, SolverError,
                            UnsupportedConfigurationError)
from porecap.formulas import sphere_single_pore_flux, strieder_two_pore_flux
from porecap.geometry import Pore, PoreConfiguration, Surface
from porecap.potential import build_potential_table
from porecap.solver import (SpectralParams, assemble_matrix, compute_flux, project_boundary_data,
                            solve, solve_coefficients)


def plane(centers, a=1.0, D=1.0):
    return PoreConfiguration.from_centers("plane", centers, a, D)


def caps(centers, nu, D=1.0):
    return PoreConfiguration("sphere", [Pore.cap(tuple(c), nu) for c in centers], D)


def test_params_validation():
    p = SpectralParams(12)
    assert p.n_t == 96 and p.n_self == 24
    assert p.with_M(20).n_t == 160
    for kw in ({"M": -1}, {"M": 4, "n_t": 10}, {"M": 2, "n_r": 15, "radial_rule": "newton-cotes"},
               {"M": 2, "radial_rule": "simpson"}, {"M": 4, "n_self": 3}, {"M": 2, "threads": 0}):
        with pytest.raises(InvalidInputError):
            SpectralParams(**kw)


def test_boundary_projection():
    c = project_boundary_data(plane([(0, 0, 0)]), 2)
    assert c.shape == (6,) and c[0] == pytest.approx(sqrt(pi)) and np.count_nonzero(c) == 1
    c = project_boundary_data(plane([(0, 0, 0), (5, 0, 0), (0, 5, 0)]), 0)
    assert np.allclose(c, sqrt(pi))
    rng = np.random.default_rng(3)
    r, t = np.sqrt(rng.uniform(0, 1, 50)), rng.uniform(0, 2 * pi, 50)
    c = project_boundary_data(plane([(0, 0, 0)]), 3)
    recon = sum(ci * zernike_eval(m, r, t) for ci, m in zip(c, mode_list(3)))
    assert np.abs(recon - 1).max() < 1e-14


@given(st.floats(0.05, 5.0))
def test_single_pore_matrix_entry(alpha):
    A = assemble_matrix(plane([(0, 0, 0)], alpha), SpectralParams(0))
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(pi ** 1.5 / 2, rel=1e-13)
    b = solve_coefficients(A, project_boundary_data(plane([(0, 0, 0)], alpha), 0))
    assert b[0] == pytest.approx(2 / pi, rel=1e-13)


def test_self_block_angular_orthogonality():
    for sphere in (False, True):
        config = caps([(0, 0, 1)], 0.3) if sphere else plane([(0, 0, 0)])
        A = assemble_matrix(config, SpectralParams(6), basis="zernike")
        modes = mode_list(6)
        for a, ma in enumerate(modes):
            for b, mb in enumerate(modes):
                if ma.j != mb.j:
                    assert abs(A[a, b]) < 1e-12


def test_distant_pores_cross_block_monopole():
    d = 1000.0
    A = assemble_matrix(plane([(0, 0, 0), (d, 0, 0)]), SpectralParams(2), basis="zernike")
    nm = mode_count(2)
    cross = A[:nm, nm:]
    assert np.abs(cross).max() < 5 / d * np.abs(np.diag(A)).max()
    assert np.abs(cross).max() > 0.1 / d * np.abs(np.diag(A)).max()


def test_solve_coefficients_basics():
    c = np.arange(1.0, 5.0)
    assert np.array_equal(solve_coefficients(np.eye(4), c), c)
    b, info = solve_coefficients(np.diag([1.0, 2.0]), np.ones(2), return_info=True)
    assert info.condition == pytest.approx(2.0) and info.residual == 0
    with pytest.raises(SolverError):
        solve_coefficients(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))
    with pytest.raises(InvalidInputError):
        solve_coefficients(np.eye(3), np.ones(2))


def test_permuting_pores_permutes_blocks():
    x = [(0, 0, 0), (3, 0, 0), (0, 4, 0)]
    p = SpectralParams(3)
    s1 = solve(plane(x), p, residual=False)
    s2 = solve(plane([x[2], x[0], x[1]]), p, residual=False)
    B1, B2 = s1.coefficient_matrix(), s2.coefficient_matrix()
    assert np.allclose(B2, B1[[2, 0, 1]], rtol=1e-10, atol=1e-12)


def test_compute_flux_examples():
    config = plane([(0, 0, 0)], 1.5, D=2.0)
    sol = compute_flux(np.array([2 / pi]), config)
    assert sol.J == pytest.approx(4 * 2.0 * 1.5)
    b = np.zeros(mode_count(3))
    b[[1, 2, 6]] = [1.0, -2.0, 0.5]  # only j != 0 modes
    assert compute_flux(b, plane([(0, 0, 0)]), 3).J == 0.0


def test_symmetric_pair_fluxes_equal():
    sol = solve(plane([(-2.5, 0, 0), (2.5, 0, 0)]), SpectralParams(6))
    assert sol.pore_fluxes[0] == pytest.approx(sol.pore_fluxes[1], rel=1e-10)
    assert sol.J == pytest.approx(sol.pore_fluxes.sum(), rel=1e-15)


def test_single_planar_pore_exact():
    sol = solve(plane([(0, 0, 0)]), SpectralParams(4))
    assert abs(sol.J - 4) / 4 < 1e-8
    assert sol.C == pytest.approx(4 / (2 * pi))
    assert sol.residual < 1e-12


def test_two_pores_against_series():
    sol = solve(plane([(-4, 0, 0), (4, 0, 0)]), SpectralParams(20), residual=False)
    ref = strieder_two_pore_flux(8).value
    assert abs(sol.J - ref) / sol.J < 10 * 8.0 ** -6


def test_sphere_single_cap_against_expansion():
    eps = 0.05
    sol = solve(caps([(0, 0, 1)], eps), SpectralParams(10), residual=False)
    ref = sphere_single_pore_flux(eps).value
    assert abs(sol.J - ref) / sol.J < eps ** 3 * abs(np.log(eps))
    assert sol.C == pytest.approx(sol.J / (4 * pi))


@given(st.floats(0.1, 10))
@settings(max_examples=8)
def test_linearity_in_D(D):
    base = solve(plane([(0, 0, 0), (3, 0, 0)]), SpectralParams(3), residual=False)
    scaled = solve(plane([(0, 0, 0), (3, 0, 0)], D=D), SpectralParams(3), residual=False)
    assert scaled.J == pytest.approx(D * base.J, rel=1e-13)
    assert scaled.C == pytest.approx(base.C, rel=1e-13)


@given(st.floats(0, 2 * pi), st.floats(-20, 20), st.floats(-20, 20))
@settings(max_examples=8)
def test_planar_rigid_motion(angle, tx, ty):
    x = np.array([(0, 0, 0), (3, 0.5, 0), (-1, 2.6, 0)], dtype=float)
    R = Rotation.from_euler("z", angle).as_matrix()
    y = x @ R.T + np.array([tx, ty, 0])
    y[:, 2] = 0
    p = SpectralParams(4)
    J0 = solve(plane(x), p, residual=False).J
    J1 = solve(plane(y), p, residual=False).J
    assert abs(J1 - J0) / J0 < 1e-10


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=8)
def test_sphere_rotation(seed):
    x = np.array([(0, 0, 1), (1, 0, 0), (0, -0.6, 0.8)])
    R = Rotation.random(random_state=seed).as_matrix()
    p = SpectralParams(4)
    J0 = solve(caps(x, 0.1), p, residual=False).J
    J1 = solve(caps(x @ R.T, 0.1), p, residual=False).J
    assert abs(J1 - J0) / J0 < 1e-10


def test_adding_pore_increases_flux():
    p = SpectralParams(4)
    J2 = solve(plane([(0, 0, 0), (4, 0, 0)]), p, residual=False).J
    J3 = solve(plane([(0, 0, 0), (4, 0, 0), (0, 4, 0)]), p, residual=False).J
    assert J3 > J2


def test_residual_decreases_with_M():
    res = [solve(caps([(0, 0, 1), (0, 0, -1)], 0.4), SpectralParams(M)).residual for M in (2, 6, 10)]
    assert res[0] > res[1] > res[2]


def test_mode_convergence_monotone():
    config = plane([(-1.6, 0, 0), (1.6, 0, 0)])
    Js = {M: solve(config, SpectralParams(M), residual=False).J for M in (2, 4, 6, 8, 10, 14)}
    errs = [abs(Js[M] - Js[14]) / Js[14] for M in (2, 4, 6, 8, 10)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_assembly_thread_determinism():
    config = plane([(0, 0, 0), (3, 0, 0), (0, 3.5, 0), (-2.5, -2.5, 0)])
    a = assemble_matrix(config, SpectralParams(6, threads=1))
    b = assemble_matrix(config, SpectralParams(6, threads=4))
    assert np.array_equal(a, b)
    s = caps([(0, 0, 1), (1, 0, 0), (0, 1, 0)], 0.2)
    assert np.array_equal(assemble_matrix(s, SpectralParams(5, threads=1)),
                          assemble_matrix(s, SpectralParams(5, threads=3)))


def test_monomial_and_zernike_systems_agree():
    config = plane([(0, 0, 0), (3, 0, 0)])
    p = SpectralParams(5)
    A = assemble_matrix(config, p)
    b = solve_coefficients(A, project_boundary_data(config, 5))
    sol = solve(config, p, residual=False)
    assert np.allclose(b, sol.coefficients, rtol=1e-8, atol=1e-10)
    assert compute_flux(b, config, 5).J == pytest.approx(sol.J, rel=1e-10)


def test_supplied_potential_table():
    config = plane([(0, 0, 0), (3, 0, 0)])
    table = build_potential_table("plane", 1.0, 4, r_max=10.0, gap_min=0.1)
    a = solve(config, SpectralParams(4), potential_table=table, residual=False).J
    b = solve(config, SpectralParams(4), residual=False).J
    assert a == pytest.approx(b, rel=1e-11)
    small = build_potential_table("plane", 1.0, 4, r_max=2.5, gap_min=0.1)
    with pytest.raises(AssemblyError):
        solve(config, SpectralParams(4), potential_table=small)


def test_rejected_configurations():
    mixed = PoreConfiguration("plane", [Pore((0, 0, 0), 1.0), Pore((5, 0, 0), 0.5)])
    with pytest.raises(UnsupportedConfigurationError):
        solve(mixed)
    with pytest.raises(GeometryError):
        solve(plane([(0, 0, 0), (1.5, 0, 0)]))
