"""Fixed-node quadrature rules used by the vectorised kernel and potential paths."""

from functools import lru_cache

import numpy as np
from scipy.integrate import newton_cotes


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_gauss(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre with ``n`` nodes on each panel between consecutive edges."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = lo + (hi - lo) * x
    weights = (hi - lo) * w
    return nodes.ravel(), weights.ravel()


@lru_cache(maxsize=None)
def graded_unit(n: int = 12, ratio: float = 0.2, floor: float = 1e-18) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on (0, 1] graded geometrically toward 0.

    Panels are [ratio**(k+1), ratio**k] down to ``floor``, then [0, floor].
    The nodes are distances from the singular end, so callers can recover
    differences like ``s - s*`` without cancellation.
    """
    levels = int(np.ceil(np.log(floor) / np.log(ratio)))
    edges = np.concatenate([[0.0], ratio ** np.arange(levels, -1, -1, dtype=float)])
    nodes, weights = composite_gauss(edges, n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def angular_rule(jmax: int, n: int = 16, ratio: float = 0.3, split: float = 0.5,
                  floor: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Rule on (0, pi] for even periodic integrands with a near-singularity at 0.

    Uniform panels cover [split, pi] with enough nodes to resolve cos(j*tau)
    for j <= jmax; below ``split`` the panels are graded toward 0.  The
    integrands it serves vanish linearly at 0, so grading stops at ``floor``.
    """
    gx, gw = graded_unit(n, ratio, floor)
    n_uniform = max(3, int(np.ceil((np.pi - split) / 0.6)))
    per_panel = max(16, int(np.ceil(0.6 * jmax / 2)) + 12)
    ux, uw = composite_gauss(np.linspace(split, np.pi, n_uniform + 1), per_panel)
    nodes = np.concatenate([split * gx, ux])
    weights = np.concatenate([split * gw, uw])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def newton_cotes_panels(panels: int, order: int = 9) -> tuple[np.ndarray, np.ndarray]:
    """Composite closed Newton-Cotes rule on [0, 1].

    ``order`` is the number of intervals per panel (9 gives the 10-point rule).
    Returns ``panels * order + 1`` equally spaced nodes.
    """
    an, _ = newton_cotes(order, 1)
    n_int = panels * order
    h = 1.0 / n_int
    weights = np.zeros(n_int + 1)
    for p in range(panels):
        weights[p * order : (p + 1) * order + 1] += an * h
    nodes = np.linspace(0.0, 1.0, n_int + 1)
    return nodes, weights
