from math import e, log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from porecap.errors import DomainError, InvalidInputError
from porecap.formulas import (AsymptoticEstimate, berg_purcell, electrified_disk, homogenized_flux,
                              leakage_be, leakage_bp, planar_asymptotic_flux, planar_sums,
                              planar_sums_naive, relative_error, sphere_asymptotic_flux,
                              sphere_single_pore_flux, strieder_two_pore_flux)
from porecap.geometry import fibonacci_sphere, pattern_planar, platonic_vertices
from porecap.kernels import g_sphere

points2d = st.lists(st.tuples(st.floats(-30, 30), st.floats(-30, 30)), min_size=2, max_size=12,
                    unique=True).map(lambda p: np.array([(x, y, 0.0) for x, y in p])).filter(
    lambda x: np.min(np.linalg.norm(x[:, None] - x[None], axis=-1)
                     + 1e9 * np.eye(len(x))) > 0.5)


def test_berg_purcell_examples():
    r = berg_purcell(3, 1e-6, 1.0, 2.0)
    assert r.flux == pytest.approx(4 * 2.0 * 3 * 1e-6, rel=1e-5)
    assert berg_purcell(10, pi / 10, 1.0).capacitance == pytest.approx(0.5)
    big = berg_purcell(10 ** 12, 0.1, 2.0, 1.0)
    assert big.capacitance == pytest.approx(2.0, rel=1e-9)
    assert big.flux == pytest.approx(4 * pi * 2.0, rel=1e-9)


def test_leakage_examples():
    assert leakage_bp(pi * 0.3 / 4, 0.3, 1.0) == pytest.approx(1.0)
    assert leakage_bp(0.0, 0.3) == 0.0
    assert leakage_bp(0.1, 1.0, 2.0) == pytest.approx(2 * leakage_bp(0.1, 1.0, 1.0))
    assert leakage_be(0.3, 0.5, 1.0, 0, 0) == pytest.approx(leakage_bp(0.3, 0.5) / 0.49)
    assert leakage_be(1e-12, 0.5, 1.0, 2, 3) == pytest.approx(leakage_bp(1e-12, 0.5), rel=1e-5)
    assert leakage_be(0.25, 2.0, 1.0, 1, 0) == pytest.approx(4 * 0.25 / (2 * pi) * 1.5 / 0.5625)
    with pytest.raises(DomainError):
        leakage_be(1.0, 1.0, 1.0, 0, 0)


def test_planar_asymptotic_examples():
    single = planar_asymptotic_flux([(3, 4, 0)], [1.7], 0.2, 1.5)
    assert single.value == pytest.approx(4 * 1.5 * 0.2 * 1.7)
    assert single.term("pairwise") == 0 and single.term("triplet") == 0
    d, eps = 7.0, 0.3
    two = planar_asymptotic_flux([(0, 0, 0), (d, 0, 0)], None, eps)
    assert two.value == pytest.approx(8 * eps * (1 - 2 * eps / (pi * d) + 4 * eps ** 2 / (pi ** 2 * d ** 2)))
    sq = pattern_planar("square")
    est = planar_asymptotic_flux(sq, None, 0.05)
    s2, s3 = planar_sums_naive(sq)
    ref = 4 * 4 * 0.05 * (1 - 2 * 0.05 / (4 * pi) * s2 + 4 * 0.05 ** 2 / (4 * pi ** 2) * s3)
    assert est.value == pytest.approx(ref, rel=1e-14)
    assert est.partial(3) == pytest.approx(est.value) and est.partial(1) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        planar_asymptotic_flux([(0, 0, 0), (0, 0, 0)], None, 0.1)


@given(points2d, st.data())
def test_planar_sums_factorised_vs_naive(x, data):
    a = np.array(data.draw(st.lists(st.floats(0.2, 3), min_size=len(x), max_size=len(x))))
    f, n = planar_sums(x, a), planar_sums_naive(x, a)
    assert f[0] == pytest.approx(n[0], rel=1e-12)
    assert f[1] == pytest.approx(n[1], rel=1e-12)


@given(points2d, st.floats(0, 2 * pi), st.floats(-50, 50), st.floats(-50, 50), st.randoms())
def test_planar_asymptotic_invariances(x, angle, tx, ty, rnd):
    R = Rotation.from_euler("z", angle).as_matrix()
    y = x @ R.T + np.array([tx, ty, 0])
    perm = list(range(len(x)))
    rnd.shuffle(perm)
    base = planar_asymptotic_flux(x, None, 0.1)
    for other in (planar_asymptotic_flux(y, None, 0.1), planar_asymptotic_flux(x[perm], None, 0.1)):
        assert other.value == pytest.approx(base.value, rel=1e-12)
    assert base.term("pairwise") < 0 < base.term("triplet")


def test_sphere_asymptotic_examples():
    eps = 0.05
    one = sphere_asymptotic_flux([(0, 0, 1)], eps)
    assert one.value == pytest.approx(4 * eps * (1 - eps / pi * log(2 * eps) + 3 * eps / (2 * pi)))
    two = sphere_asymptotic_flux([(0, 0, 1), (0, 0, -1)], eps)
    gs2 = (1 - log(2)) / 2
    assert g_sphere(2.0) == pytest.approx(gs2)
    assert two.term("interaction") == pytest.approx(-8 * eps * eps / pi * (2 / 2) * 2 * gs2)


@given(st.sampled_from(["octa", "icosa", "dodeca", "fib"]))
def test_sphere_asymptotic_small_eps_limit(kind):
    x = fibonacci_sphere(7) if kind == "fib" else platonic_vertices(kind)
    vals = [sphere_asymptotic_flux(x, eps).value / (4 * eps) for eps in (1e-3, 1e-5, 1e-7)]
    assert abs(vals[2] - len(x)) < abs(vals[0] - len(x))
    assert vals[2] == pytest.approx(len(x), rel=1e-5)


def test_sphere_single_pore_variants():
    est = sphere_single_pore_flux(0.1, 1.0)
    two, three = est.partial(2), est.partial(3)
    assert three == est.value
    rel = abs(three - two) / three
    assert rel == pytest.approx(0.1 ** 2 * (pi ** 2 + 21) / (36 * pi ** 2) * three / 0.4, rel=0.05)
    assert sphere_single_pore_flux(1e-9).value == pytest.approx(4e-9, rel=1e-7)
    with pytest.raises(DomainError):
        sphere_single_pore_flux(1.0)


def test_strieder_examples():
    assert strieder_two_pore_flux(1e9).value == pytest.approx(8.0, rel=1e-8)
    import mpmath
    with mpmath.workdps(50):
        d = mpmath.mpf(8)
        p = mpmath.pi
        ref = 8 * (1 - 2 / (p * d) + 4 / (p * d) ** 2 - 2 * (12 + p ** 2) / (3 * p ** 3 * d ** 3)
                   + 16 * (3 + p ** 2) / (3 * p ** 4 * d ** 4)
                   - 4 * (120 + 70 * p ** 2 + 3 * p ** 4) / (15 * p ** 5 * d ** 5))
    s = strieder_two_pore_flux(8.0)
    assert s.value == pytest.approx(float(ref), rel=1e-15)
    assert s.neglected_order == "O(d^-6)"
    with pytest.raises(DomainError):
        strieder_two_pore_flux(2.0)


@given(st.floats(4, 64))
def test_strieder_three_terms_match_asymptotics(d):
    s = strieder_two_pore_flux(d)
    a = planar_asymptotic_flux([(0, 0, 0), (d, 0, 0)], None, 1.0, 1.0)
    assert sum(s.terms[:3]) == pytest.approx(a.value, rel=1e-14)
    # the remainder starts at d^-3
    assert abs(s.value - a.value) * d ** 3 < 8 * 2 * (12 + pi ** 2) / (3 * pi ** 3) * 1.5


def test_homogenized_examples():
    assert homogenized_flux(0.2, 1e-10) == pytest.approx(4 * pi, rel=1e-8)
    sigma, eps = 0.05, 0.01
    rs = sqrt(sigma)
    inner = 1 - 4 / pi * rs + sigma / pi * log(4 / e * rs) + eps ** 2 / (2 * pi * rs)
    assert homogenized_flux(sigma, eps) == pytest.approx(4 * pi / (1 + pi * eps / (4 * sigma) * inner))


def test_electrified_disk_examples():
    assert electrified_disk(0.3, 0.2, 0.0, 1.0) == 1.0
    assert electrified_disk(2.0, 0.0, 0.0, 1.0) == pytest.approx(1 / 3, rel=1e-15)
    a = 0.7
    rho = 100 * a
    w = electrified_disk(rho / sqrt(3), rho / sqrt(3), rho / sqrt(3), a)
    assert w == pytest.approx(2 * a / pi / rho, rel=1e-3)


@given(st.floats(0, 0.999), st.floats(0, 2 * pi), st.floats(1.05, 10), st.floats(0.1, 5))
def test_electrified_disk_boundary_data(r_in, t, r_out, a):
    assert electrified_disk(a * r_in * np.cos(t), a * r_in * np.sin(t), 0.0, a) == 1.0
    h = 1e-6 * a
    s1, s2 = a * r_out * np.cos(t), a * r_out * np.sin(t)
    up = electrified_disk(s1, s2, h, a)
    assert abs(up - electrified_disk(s1, s2, 0.0, a)) * a / h < 1e-4


def test_estimate_partials_and_relative_error():
    est = AsymptoticEstimate(6.0, (("a", 1.0), ("b", 2.0), ("c", 3.0)), "O(x)")
    assert [est.partial(n) for n in (1, 2, 3)] == [1.0, 3.0, 6.0]
    with pytest.raises(InvalidInputError):
        est.partial(4)
    assert relative_error(2.0, 1.0) == 0.5
