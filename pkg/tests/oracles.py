"""Independent oracles used by the test suite.

Kept out of the package on purpose: moment computations go through explicit
non-crossing-partition enumeration, densities through direct quadrature, so
they share no code path with the transforms they check.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import quad


@lru_cache(maxsize=None)
def nc_block_sizes(n: int) -> tuple[tuple[int, ...], ...]:
    """All non-crossing partitions of an n-point line, as block-size tuples.

    The block containing the first point splits the remaining points into
    independent gaps, which is exactly the non-crossing condition.
    """
    if n == 0:
        return ((),)
    acc: list[tuple[int, ...]] = []

    def extend(remaining: int, gaps: list[int]):
        # close the first block here: gaps between its members, then the tail
        combos: list[tuple[int, ...]] = [()]
        for g in gaps + [remaining]:
            combos = [c + o for c in combos for o in nc_block_sizes(g)]
        size = len(gaps) + 1
        for c in combos:
            acc.append((size,) + c)
        # or put one more member into the first block after a gap of g points
        for g in range(remaining):
            extend(remaining - g - 1, gaps + [g])

    extend(n - 1, [])
    return tuple(acc)


def moments_from_free_cumulants(kappa: dict[int, float], order: int) -> list[float]:
    """m_n = sum over non-crossing partitions of products of block cumulants."""
    out = []
    for n in range(1, order + 1):
        total = 0.0
        for sizes in nc_block_sizes(n):
            prod = 1.0
            for b in sizes:
                prod *= kappa.get(b, 0.0)
            total += prod
        out.append(total)
    return out


def free_cumulants_from_moments(moments: list[float]) -> dict[int, float]:
    """Invert the moment relation order by order."""
    kappa: dict[int, float] = {}
    for n in range(1, len(moments) + 1):
        rest = 0.0
        for sizes in nc_block_sizes(n):
            if sizes == (n,):
                continue
            prod = 1.0
            for b in sizes:
                prod *= kappa.get(b, 0.0)
            rest += prod
        kappa[n] = moments[n - 1] - rest
    return kappa


def atomic_moments(points, weights, order: int) -> list[float]:
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return [float((weights * points**n).sum()) for n in range(1, order + 1)]


def cauchy_kernel(x: np.ndarray, eps: float) -> np.ndarray:
    return eps / (np.pi * (x * x + eps * eps))


def smoothed_arcsine(s: float, eps: float) -> float:
    """Cauchy-smoothed arcsine law on [-2, 2], by direct quadrature.

    Substituting x = 2 sin(theta) removes the edge singularities.
    """
    val, _ = quad(
        lambda th: cauchy_kernel(np.array(s - 2.0 * np.sin(th)), eps)[()] / np.pi,
        -np.pi / 2.0,
        np.pi / 2.0,
        epsabs=1e-12,
        epsrel=1e-11,
        limit=200,
    )
    return val


def smoothed_atoms_1d(points, weights, axis: np.ndarray, eps: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    out = np.zeros_like(axis)
    for p, w in zip(points, weights):
        out += w * cauchy_kernel(axis - p, eps)
    return out


def smoothed_atoms_2d(atoms, s_axis: np.ndarray, t_axis: np.ndarray, eps: float) -> np.ndarray:
    """Closed-form planar smoothing: product Cauchy kernel per atom."""
    s_axis = np.asarray(s_axis, dtype=float)
    t_axis = np.asarray(t_axis, dtype=float)
    out = np.zeros((len(s_axis), len(t_axis)))
    for (s0, t0), w in atoms:
        out += w * np.outer(cauchy_kernel(s_axis - s0, eps), cauchy_kernel(t_axis - t0, eps))
    return out


def richardson_limit(values, steps) -> complex:
    """Neville extrapolation of values(h) to h = 0."""
    xs = [float(h) for h in steps]
    p = list(values)
    k = len(p)
    for j in range(1, k):
        for i in range(k - j):
            p[i] = (xs[i + j] * p[i] - xs[i] * p[i + 1]) / (xs[i + j] - xs[i])
    return p[0]
