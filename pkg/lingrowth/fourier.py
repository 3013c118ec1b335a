"""Fourier integrals of symmetric lattice walks.

The discrete Green function of a symmetric walk ``p`` on Z^d (d >= 3) is

    G_p(x) = (2 pi)^{-d} int_{[-pi, pi]^d} cos(x . theta) / (1 - p_hat(theta)) dtheta.

The integrand blows up like ``|theta|^{-2}`` at the origin. The cube is cut
into ``2d`` pyramids with apex at the origin (one per signed axis); in the
coordinates ``theta = pi t (s e_i + u)`` with ``t in [0, 1]`` and
``u_j in [-1, 1]`` the Jacobian ``pi^d t^{d-1}`` cancels the singularity and
tensor Gauss-Legendre nodes converge quickly. ``1 - p_hat`` is evaluated as
``2 sum_x p(x) sin^2(x . theta / 2)`` to avoid cancellation near the apex.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .config import numerics_setting
from .errors import DivergentGreenFunctionError, InvalidParameterError
from .lattice import Site, SparseField

logger = logging.getLogger(__name__)

_CHUNK = 4_000_000


def _walk_arrays(p: SparseField) -> tuple[np.ndarray, np.ndarray]:
    sites = np.asarray(list(p.entries), dtype=float).reshape(-1, p.d)
    probs = np.asarray(list(p.entries.values()), dtype=float)
    return sites, probs


def walk_symbol(p: SparseField, theta: np.ndarray) -> np.ndarray:
    """Return ``p_hat(theta) = sum_x p(x) cos(x . theta)`` for rows of ``theta``."""

    sites, probs = _walk_arrays(p)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    return np.cos(theta @ sites.T) @ probs


def symbol_gap(p: SparseField, theta: np.ndarray) -> np.ndarray:
    """Return ``1 - p_hat(theta)`` without cancellation near ``theta = 0``."""

    sites, probs = _walk_arrays(p)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    half = np.sin(0.5 * (theta @ sites.T))
    return 2.0 * (half * half) @ probs


def symbol_grid(p: SparseField, points_per_axis: int) -> np.ndarray:
    """Return ``p_hat`` on a uniform grid of ``[-pi, pi]^d``."""

    axis = np.linspace(-math.pi, math.pi, points_per_axis)
    mesh = np.stack(np.meshgrid(*([axis] * p.d), indexing="ij"), axis=-1)
    return walk_symbol(p, mesh.reshape(-1, p.d))


def lattice_index(p: SparseField) -> int:
    """Return the index in Z^d of the group generated by the support of ``p``.

    The index is the gcd of the ``d x d`` minors of the support vectors; zero
    means the support does not span R^d.
    """

    vectors = [site for site in p.entries if any(site)]
    content = 0
    for rows in combinations(vectors, p.d):
        minor = int(round(np.linalg.det(np.asarray(rows, dtype=float))))
        content = math.gcd(content, abs(minor))
        if content == 1:
            break
    return content


def generates_lattice(p: SparseField) -> bool:
    """Return True when the support of ``p`` generates Z^d as a group.

    Otherwise ``p_hat`` equals one at points of the torus other than the
    origin and the pyramid rule does not apply.
    """

    return lattice_index(p) == 1


@lru_cache(maxsize=32)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = legendre.leggauss(n)
    return nodes, weights


@lru_cache(maxsize=16)
def pyramid_rule(d: int, n: int, axis: int, sign: int) -> tuple[np.ndarray, np.ndarray]:
    """Return nodes and weights of one pyramid ``{s theta_axis >= |theta_j|}``."""

    nodes, weights = _gauss(n)
    t = 0.5 * (nodes + 1.0)
    wt = 0.5 * weights * np.pi**d * t ** (d - 1)
    grids = np.meshgrid(t, *([nodes] * (d - 1)), indexing="ij")
    wgrids = np.meshgrid(wt, *([weights] * (d - 1)), indexing="ij")
    tt = grids[0].ravel()
    theta = np.empty((tt.size, d))
    others = [g.ravel() for g in grids[1:]]
    j = 0
    for col in range(d):
        if col == axis:
            theta[:, col] = sign * np.pi * tt
        else:
            theta[:, col] = np.pi * tt * others[j]
            j += 1
    weight = np.prod([w.ravel() for w in wgrids], axis=0)
    theta.setflags(write=False)
    weight.setflags(write=False)
    return theta, weight


def _integrate(p: SparseField, sites: np.ndarray, n: int) -> np.ndarray:
    d = p.d
    acc = np.zeros(len(sites))
    for axis in range(d):
        for sign in (1, -1):
            theta, weight = pyramid_rule(d, n, axis, sign)
            base = weight / symbol_gap(p, theta)
            step = max(1, _CHUNK // max(1, len(theta)))
            for start in range(0, len(sites), step):
                block = sites[start : start + step]
                acc[start : start + step] += np.cos(block @ theta.T) @ base
    return acc / (2.0 * np.pi) ** d


def lattice_green_integral(
    p: SparseField,
    sites: Sequence[Site],
    *,
    initial_nodes: int | None = None,
    growth: float | None = None,
    max_nodes: int | None = None,
    tolerance: float | None = None,
) -> np.ndarray:
    """Return ``G_p(x)`` for every ``x`` in ``sites`` by refined pyramid quadrature.

    The node count per axis starts at ``initial_nodes`` and grows by
    ``growth`` until two successive values differ by less than ``tolerance``
    at every site.
    """

    if p.d <= 2:
        raise DivergentGreenFunctionError(
            f"the Green function of a walk on Z^{p.d} is infinite"
        )
    if not generates_lattice(p):
        raise InvalidParameterError(
            "walk support does not generate the lattice; use the series method"
        )
    n = int(initial_nodes or numerics_setting("quadrature", "initial_nodes"))
    growth = float(growth or numerics_setting("quadrature", "growth"))
    max_nodes = int(max_nodes or numerics_setting("quadrature", "max_nodes"))
    tolerance = float(tolerance or numerics_setting("quadrature", "tolerance"))
    points = np.asarray([list(s) for s in sites], dtype=float).reshape(-1, p.d)
    previous = _integrate(p, points, n)
    while True:
        n_next = max(n + 1, int(math.ceil(n * growth)))
        if n_next > max_nodes:
            logger.warning(
                "pyramid quadrature stopped at %d nodes per axis before reaching %g",
                n,
                tolerance,
            )
            return previous
        current = _integrate(p, points, n_next)
        change = float(np.max(np.abs(current - previous))) if len(points) else 0.0
        logger.debug("pyramid quadrature n=%d change=%.3g", n_next, change)
        if change < tolerance:
            return current
        previous, n = current, n_next


__all__ = [
    "walk_symbol",
    "symbol_gap",
    "symbol_grid",
    "generates_lattice",
    "lattice_index",
    "pyramid_rule",
    "lattice_green_integral",
]
