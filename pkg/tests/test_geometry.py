import itertools
from math import pi

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from porecap.errors import InvalidInputError
from porecap.geometry import (GOLDEN_RATIO, Pore, PoreConfiguration, Surface, angular_separation,
                              chord_distance, fibonacci_sphere, local_frame, pattern_planar,
                              platonic_vertices, validate_nonoverlap)

unit = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: tuple(np.asarray(v) / np.linalg.norm(v)))
planar = st.tuples(st.floats(-50, 50), st.floats(-50, 50)).map(lambda v: (v[0], v[1], 0.0))


def test_chord_examples():
    assert chord_distance((0, 0, 0), (3, 4, 0), "plane") == 5.0
    assert chord_distance((0, 0, 1), (0, 0, -1), Surface.UNIT_SPHERE) == 2.0
    assert chord_distance((0, 0, 1), (0, 0, 1), "sphere") == 0.0
    with pytest.raises(InvalidInputError):
        chord_distance((0, 0, 2), (0, 0, 1), "sphere")


@given(unit, unit, unit)
def test_sphere_chord_metric(x, y, z):
    dxy = chord_distance(x, y, "sphere")
    assert dxy == pytest.approx(chord_distance(y, x, "sphere"), abs=1e-15)
    assert 0 <= dxy <= 2
    assert dxy <= chord_distance(x, z, "sphere") + chord_distance(z, y, "sphere") + 1e-12
    assert dxy == pytest.approx(2 * np.sin(angular_separation(x, y) / 2), abs=1e-12)


@given(planar, planar, planar)
def test_plane_chord_metric(x, y, z):
    dxy = chord_distance(x, y, "plane")
    assert dxy <= chord_distance(x, z, "plane") + chord_distance(z, y, "plane") + 1e-9


def test_overlap_examples():
    ok = PoreConfiguration.from_centers("plane", [(-2, 0, 0), (2, 0, 0)], 1.0)
    assert validate_nonoverlap(ok).ok
    bad = PoreConfiguration.from_centers("plane", [(-0.9, 0, 0), (0.9, 0, 0)], 1.0)
    assert validate_nonoverlap(bad).violations == ((1, 2),)
    caps = PoreConfiguration("sphere", [Pore.cap((0, 0, 1), pi / 4), Pore.cap((0, 0, -1), pi / 4)])
    assert validate_nonoverlap(caps)


def test_configuration_validation():
    with pytest.raises(InvalidInputError):
        PoreConfiguration("plane", [])
    with pytest.raises(InvalidInputError):
        PoreConfiguration.from_centers("plane", [(0, 0, 1e-6)], 1.0)
    with pytest.raises(InvalidInputError):
        PoreConfiguration.from_centers("sphere", [(0, 0, 1)], 2.0)
    with pytest.raises(InvalidInputError):
        Pore((0, 0, 0), -1.0)


def test_fibonacci_examples():
    p = fibonacci_sphere(1)
    assert p.shape == (3, 3)
    assert p[1, 2] == 0.0
    p = fibonacci_sphere(25)
    assert len(p) == 51
    d = np.linalg.norm(p[:, None] - p[None], axis=-1)
    assert d[~np.eye(51, dtype=bool)].min() > 0
    assert GOLDEN_RATIO == (1 + 5 ** 0.5) / 2


@given(st.integers(1, 200))
def test_fibonacci_properties(k):
    p = fibonacci_sphere(k)
    assert len(p) == 2 * k + 1
    assert np.allclose(np.linalg.norm(p, axis=1), 1, atol=1e-14)
    assert np.allclose(p[:, 2], 2 * np.arange(-k, k + 1) / (2 * k + 1))
    assert np.array_equal(p, fibonacci_sphere(k))
    # approximately equal-area: centroid near the origin
    assert np.linalg.norm(p.mean(axis=0)) < 1.0 / k ** 0.5


def _chords(p):
    return [np.linalg.norm(a - b) for a, b in itertools.combinations(p, 2)]


def test_platonic_examples():
    octa = platonic_vertices("octa")
    assert sorted(map(tuple, octa)) == sorted(map(tuple, np.vstack([np.eye(3), -np.eye(3)])))
    tetra = platonic_vertices("tetra")
    dots = [a @ b for a, b in itertools.combinations(tetra, 2)]
    assert np.allclose(dots, -1 / 3)
    icosa = platonic_vertices("icosa")
    assert len(icosa) == 12
    assert len(np.unique(np.round(_chords(icosa), 10))) == 3
    assert len(platonic_vertices("cube")) == 8
    dodeca = platonic_vertices("dodeca")
    assert len(dodeca) == 20
    assert np.allclose(np.linalg.norm(dodeca, axis=1), 1)
    assert np.isclose(min(_chords(dodeca)), np.min(_chords(dodeca)))
    with pytest.raises(InvalidInputError):
        platonic_vertices("sphere")


def test_planar_patterns():
    sq = pattern_planar("square", scale=2)
    assert sorted(map(tuple, sq)) == sorted((sx * 2.0, sy * 2.0, 0.0) for sx in (1, -1) for sy in (1, -1))
    hexa = pattern_planar("ring", 6, 2)
    assert np.allclose(np.hypot(hexa[:, 0], hexa[:, 1]), 2)
    assert np.allclose(_chords(hexa)[0], 2)
    two = pattern_planar("ring", 2, 3.5)
    assert np.linalg.norm(two[0] - two[1]) == pytest.approx(7.0)


@given(st.sampled_from(["tetra", "octa", "cube", "icosa", "dodeca", "fib5", "fib20", "square", "ring7"]))
def test_generators_nonoverlap_at_half_separation(kind):
    if kind.startswith("fib"):
        centers = fibonacci_sphere(int(kind[3:]))
    elif kind == "square":
        centers = pattern_planar("square")
    elif kind == "ring7":
        centers = pattern_planar("ring", 7, 2)
    else:
        centers = platonic_vertices(kind)
    surface = "plane" if kind in ("square", "ring7") else "sphere"
    if surface == "plane":
        sep = min(_chords(centers))
        config = PoreConfiguration.from_centers(surface, centers, 0.49 * sep)
    else:
        sep = min(angular_separation(a, b) for a, b in itertools.combinations(centers, 2))
        config = PoreConfiguration(surface, [Pore.cap(tuple(c), 0.49 * sep) for c in centers])
    assert validate_nonoverlap(config).ok


@given(unit)
def test_local_frame_orthonormal(c):
    assume(np.hypot(c[0], c[1]) > 1e-6)
    F = local_frame(c)
    assert np.allclose(F @ F.T, np.eye(3), atol=1e-13)
    assert np.allclose(F[2], c, atol=1e-13)


def test_cap_half_angle_round_trip():
    p = Pore.cap((0, 0, 1), 0.3)
    assert p.half_angle == pytest.approx(0.3, rel=1e-15)
    assert p.radius == pytest.approx(2 * np.sin(0.15))
