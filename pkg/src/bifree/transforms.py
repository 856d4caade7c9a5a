"""Analytic transforms of atomic laws.

Cauchy transforms in one and two variables, reciprocal F-transforms and
their functional inverses on truncated cones, the free and bi-free
phi-transforms, and Stieltjes inversion onto grids.

The functional inverse of F is computed by damped Newton iteration with the
identity initial guess, which is justified by the non-tangential asymptotics
F^{-1}(xi) = (1 + o(1)) xi on the cone returned by :func:`cone_for`.  The
8x-support-radius cone height is a heuristic (no constructive bound is
available); outside the cone the iteration may legitimately fail, which is
reported as :class:`NoConvergence`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measure import Measure1D, PlanarMeasure

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 100
DEGENERATE_TOL = 1e-14


class NoConvergence(ArithmeticError):
    """Newton iteration failed; the target is outside the reliable domain."""


class DegenerateDenominator(ArithmeticError):
    """|z w G| fell below tolerance; the working cone is too small."""


@dataclass(frozen=True)
class TruncatedCone:
    """Gamma_{theta,M} = { x+iy : |x| <= theta |y|, |y| >= M }."""

    theta: float
    M: float

    def __post_init__(self):
        if self.theta <= 0.0 or self.M <= 0.0:
            raise ValueError("cone parameters must be positive")

    def contains(self, z: complex) -> bool:
        return abs(z.real) <= self.theta * abs(z.imag) and abs(z.imag) >= self.M

    def intersect(self, other: "TruncatedCone") -> "TruncatedCone":
        return TruncatedCone(min(self.theta, other.theta), max(self.M, other.M))


def _require_nonreal(z: np.ndarray | complex, name: str = "z") -> None:
    if np.any(np.imag(z) == 0.0):
        raise ValueError(f"{name} must be non-real")


def cauchy1d(nu: Measure1D, z) -> complex | np.ndarray:
    """G_nu(z) = sum w_k / (z - p_k)."""
    z = np.asarray(z, dtype=complex)
    _require_nonreal(z)
    g = (nu.weights / (z[..., None] - nu.points)).sum(axis=-1)
    return complex(g) if g.ndim == 0 else g


def f_transform(nu: Measure1D, z) -> complex | np.ndarray:
    """F_nu = 1 / G_nu."""
    return 1.0 / cauchy1d(nu, z)


def cauchy2d(mu: PlanarMeasure, z, w) -> complex | np.ndarray:
    """G_mu(z, w) = sum w_k / ((z - s_k)(w - t_k)); z, w broadcast elementwise."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _require_nonreal(z, "z")
    _require_nonreal(w, "w")
    g = (mu.weights / ((z[..., None] - mu.points[:, 0]) * (w[..., None] - mu.points[:, 1]))).sum(axis=-1)
    return complex(g) if g.ndim == 0 else g


def _f_and_deriv(points: np.ndarray, weights: np.ndarray, x: np.ndarray):
    d = x[..., None] - points
    g = (weights / d).sum(axis=-1)
    gp = -(weights / (d * d)).sum(axis=-1)
    f = 1.0 / g
    fp = -gp / (g * g)
    return f, fp


def newton_f_inverse(
    points: np.ndarray,
    weights: np.ndarray,
    target: np.ndarray,
    guess: np.ndarray,
    tol: float = NEWTON_TOL,
    maxiter: int = NEWTON_MAXITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve F(x) = target elementwise; returns (roots, converged mask).

    Damped Newton: steps are halved while the proposal leaves the half-plane
    of its target or is not finite.
    """
    x = np.array(guess, dtype=complex)
    target = np.asarray(target, dtype=complex)
    sign = np.sign(target.imag)
    goal = tol * (1.0 + np.abs(target))
    f, fp = _f_and_deriv(points, weights, x)
    resid = f - target
    done = np.abs(resid) <= goal
    for _ in range(maxiter):
        if done.all():
            break
        act = ~done
        step = np.zeros_like(x)
        safe_fp = np.where(np.abs(fp[act]) > 1e-300, fp[act], 1.0)
        step[act] = -resid[act] / safe_fp
        prop = x + step
        for _ in range(60):
            bad = act & (~np.isfinite(prop) | (np.sign(prop.imag) != sign))
            if not bad.any():
                break
            step[bad] *= 0.5
            prop = x + step
        x = np.where(act, prop, x)
        f, fp = _f_and_deriv(points, weights, x)
        resid = f - target
        done |= np.abs(resid) <= goal
    return x, done


def invert_f(nu: Measure1D, target, cone: TruncatedCone | None = None, guess=None):
    """zeta with F_nu(zeta) = target, to 1e-12 relative residual.

    The initial guess defaults to the target itself.  Raises
    :class:`NoConvergence` when the iteration does not settle, which signals
    a target outside the reliable inversion domain.
    """
    target_arr = np.asarray(target, dtype=complex)
    _require_nonreal(target_arr, "target")
    g = target_arr if guess is None else np.asarray(guess, dtype=complex)
    roots, ok = newton_f_inverse(nu.points, nu.weights, target_arr, g)
    if not ok.all():
        raise NoConvergence(f"invert_f failed at {target_arr[~ok].ravel()[:3]}")
    return complex(roots) if roots.ndim == 0 else roots


def free_phi(nu: Measure1D, z, cone: TruncatedCone | None = None):
    """Voiculescu transform phi_nu(z) = F_nu^{-1}(z) - z."""
    return invert_f(nu, z, cone) - np.asarray(z, dtype=complex)


def bi_free_phi(mu: PlanarMeasure, z, w, cone: TruncatedCone | None = None):
    """Two-variable phi-transform evaluated elementwise at (z, w).

    phi(z,w) = phi_1(z)/z + phi_2(w)/w + 1 - 1/(z w G(F_1^{-1}(z), F_2^{-1}(w))).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    i1 = invert_f(mu.marginal(1), z, cone)
    i2 = invert_f(mu.marginal(2), w, cone)
    den = z * w * cauchy2d(mu, i1, i2)
    if np.any(np.abs(den) < DEGENERATE_TOL):
        raise DegenerateDenominator("z w G(F1^-1, F2^-1) vanished; enlarge the cone height")
    val = (i1 - z) / z + (i2 - w) / w + 1.0 - 1.0 / den
    return complex(val) if val.ndim == 0 else val


def bi_free_phi_grid(
    mu: PlanarMeasure,
    zs: np.ndarray,
    ws: np.ndarray,
    guess1=None,
    guess2=None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi matrix over the grid zs x ws; also returns the marginal inverses.

    The two functional inversions are one-dimensional and shared across grid
    rows/columns, which keeps the cost linear in the axis lengths.
    """
    zs = np.asarray(zs, dtype=complex)
    ws = np.asarray(ws, dtype=complex)
    i1 = invert_f(mu.marginal(1), zs, guess=guess1)
    i2 = invert_f(mu.marginal(2), ws, guess=guess2)
    A = 1.0 / (i1[:, None] - mu.points[:, 0])
    B = 1.0 / (i2[:, None] - mu.points[:, 1])
    G = A @ (mu.weights[None, :] * B).T
    den = zs[:, None] * ws[None, :] * G
    if np.any(np.abs(den) < DEGENERATE_TOL):
        raise DegenerateDenominator("z w G(F1^-1, F2^-1) vanished on the grid")
    phi = ((i1 - zs) / zs)[:, None] + ((i2 - ws) / ws)[None, :] + 1.0 - 1.0 / den
    return phi, i1, i2


@dataclass(frozen=True)
class GridDensity:
    """Epsilon-smoothed density on a rectangular grid (row-major over s)."""

    s_axis: np.ndarray
    t_axis: np.ndarray
    values: np.ndarray
    epsilon: float

    def spacing(self) -> tuple[float, float]:
        ds = float(np.diff(self.s_axis).mean()) if len(self.s_axis) > 1 else 1.0
        dt = float(np.diff(self.t_axis).mean()) if len(self.t_axis) > 1 else 1.0
        return ds, dt

    def riemann_mass(self) -> float:
        ds, dt = self.spacing()
        return float(self.values.sum() * ds * dt)

    def marginal(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Axis values and row/column sums times the grid step."""
        ds, dt = self.spacing()
        if axis == 1:
            return self.s_axis, self.values.sum(axis=1) * dt
        if axis == 2:
            return self.t_axis, self.values.sum(axis=0) * ds
        raise ValueError("axis must be 1 or 2")


def stieltjes1d(geval: Callable, axis, eps: float) -> np.ndarray:
    """Density of the eps-smoothed law: -Im G(s + i eps) / pi."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    axis = np.asarray(axis, dtype=float)
    g = np.asarray(geval(axis + 1j * eps), dtype=complex)
    return -g.imag / np.pi


def inversion_values(g_plus: np.ndarray, g_minus: np.ndarray) -> np.ndarray:
    """-Re[G(s+ie, t+ie) - G(s+ie, t-ie)] / (2 pi^2), the planar inversion."""
    return -0.5 * np.real(g_plus - g_minus) / np.pi**2


def stieltjes2d(geval: Callable, s_axis, t_axis, eps: float) -> GridDensity:
    """Planar Stieltjes inversion of a Cauchy-transform evaluator.

    ``geval(zmat, wmat)`` must broadcast over numpy arrays.  The result is
    the eps-smoothed measure itself; no extrapolation toward eps -> 0 is
    attempted.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    s_axis = np.asarray(s_axis, dtype=float)
    t_axis = np.asarray(t_axis, dtype=float)
    Z = (s_axis + 1j * eps)[:, None] * np.ones_like(t_axis)[None, :]
    Wp = np.ones_like(s_axis)[:, None] * (t_axis + 1j * eps)[None, :]
    gp = np.asarray(geval(Z, Wp), dtype=complex)
    gm = np.asarray(geval(Z, np.conj(Wp)), dtype=complex)
    if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gm))):
        raise ArithmeticError("transform evaluation failed at a grid node")
    vals = inversion_values(gp, gm)
    return GridDensity(s_axis, t_axis, vals, eps)


def cone_for(m: PlanarMeasure | Measure1D) -> TruncatedCone:
    """Working cone: theta = 1, M = max(1, 8 * support radius)."""
    return TruncatedCone(1.0, max(1.0, 8.0 * m.support_radius()))


def tightness_probe(mu: PlanarMeasure, radii) -> list[float]:
    """|(ir)(ir) G(ir, ir) - 1| per radius; decay toward 0 certifies tightness."""
    radii = list(radii)
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    out = []
    for r in radii:
        val = (1j * r) * (1j * r) * cauchy2d(mu, 1j * r, 1j * r) - 1.0
        out.append(float(abs(val)))
    return out
