"""Finitely-atomic measures on the line and the plane.

Atoms closer than ``MERGE_TOL`` (Euclidean) are merged at construction time,
weights adding up.  Probability measures must carry total mass 1 within
``MASS_TOL``.  All containers are immutable after construction and safe for
concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12
MASS_TOL = 1e-12

Vec2 = tuple[float, float]


@dataclass(frozen=True)
class Matrix2:
    """Symmetric 2x2 matrix [[a, c], [c, b]]."""

    a: float
    c: float
    b: float

    def is_psd(self, tol: float = 1e-12) -> bool:
        return self.a >= -tol and self.b >= -tol and self.a * self.b - self.c**2 >= -tol

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.c], [self.c, self.b]], dtype=float)

    def quad_form(self, u: Vec2) -> float:
        u1, u2 = u
        return self.a * u1 * u1 + 2.0 * self.c * u1 * u2 + self.b * u2 * u2

    def eigenvalues(self) -> tuple[float, float]:
        """Eigenvalues, smallest first."""
        half = 0.5 * (self.a + self.b)
        disc = math.hypot(0.5 * (self.a - self.b), self.c)
        return half - disc, half + disc

    def kernel_vector(self, rel_tol: float = 1e-8) -> Vec2 | None:
        """Unit vector spanning the kernel, or None if nonsingular.

        Returns (nan, nan) sentinel-free: the zero matrix reports (1.0, 0.0)
        since every direction is in the kernel.
        """
        lo, hi = self.eigenvalues()
        if abs(lo) > rel_tol * max(abs(hi), 1.0):
            return None
        if abs(hi) <= rel_tol:
            return (1.0, 0.0)
        # eigenvector for the small eigenvalue of [[a,c],[c,b]]
        if abs(self.c) > abs(self.a - lo):
            vec = (self.c, lo - self.a)
        else:
            vec = (lo - self.b, self.c)
        n = math.hypot(*vec)
        if n == 0.0:
            return (1.0, 0.0)
        return (vec[0] / n, vec[1] / n)

    def __add__(self, other: "Matrix2") -> "Matrix2":
        return Matrix2(self.a + other.a, self.c + other.c, self.b + other.b)

    def scaled(self, f: float) -> "Matrix2":
        return Matrix2(f * self.a, f * self.c, f * self.b)


ZERO_MATRIX = Matrix2(0.0, 0.0, 0.0)
IDENTITY_MATRIX = Matrix2(1.0, 0.0, 1.0)


def _merge_sorted(points: np.ndarray, weights: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge consecutive rows of lexicographically sorted points within tol."""
    if len(points) == 0:
        return points, weights
    keep_pts = [points[0]]
    keep_w = [weights[0]]
    for p, w in zip(points[1:], weights[1:]):
        if np.linalg.norm(p - keep_pts[-1]) <= tol:
            keep_w[-1] += w
        else:
            keep_pts.append(p)
            keep_w.append(w)
    return np.array(keep_pts), np.array(keep_w)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class PlanarMeasure:
    """Borel probability measure on R^2 with finitely many atoms."""

    __slots__ = ("points", "weights")

    def __init__(self, atoms: Iterable[tuple[Sequence[float], float]]):
        items = list(atoms)
        if not items:
            raise ValueError("measure needs at least one atom")
        pts = np.array([[float(p[0]), float(p[1])] for p, _ in items], dtype=float)
        wts = np.array([float(w) for _, w in items], dtype=float)
        if not np.all(np.isfinite(pts)):
            raise ValueError("atom coordinates must be finite")
        if np.any(wts <= 0.0):
            raise ValueError("atom weights must be positive")
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        pts, wts = _merge_sorted(pts[order], wts[order], MERGE_TOL)
        if abs(wts.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {wts.sum()!r}, not 1")
        self.points = _freeze(pts)
        self.weights = _freeze(wts)

    def __len__(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        return f"PlanarMeasure({len(self)} atoms)"

    def atoms(self) -> list[tuple[Vec2, float]]:
        return [((p[0], p[1]), w) for p, w in zip(self.points, self.weights)]

    def marginal(self, axis: int) -> "Measure1D":
        """Pushforward under the coordinate projection, axis in {1, 2}."""
        if axis not in (1, 2):
            raise ValueError("axis must be 1 or 2")
        return Measure1D(zip(self.points[:, axis - 1], self.weights))

    def dilated(self, lam: float) -> "PlanarMeasure":
        """Image under x -> lam*x (lam > 0); weights untouched."""
        if lam <= 0.0:
            raise ValueError("dilation factor must be positive")
        out = object.__new__(PlanarMeasure)
        out.points = _freeze(lam * self.points)
        out.weights = self.weights
        return out

    def shifted_by(self, v: Sequence[float]) -> "PlanarMeasure":
        """Recentring by v: atoms move from x to x - v."""
        out = object.__new__(PlanarMeasure)
        out.points = _freeze(self.points - np.asarray(v, dtype=float))
        out.weights = self.weights
        return out

    def truncated_mean(self, L: float) -> Vec2:
        """Mean over the open ball ||x|| < L."""
        if L <= 0.0:
            raise ValueError("truncation radius must be positive")
        inside = np.hypot(self.points[:, 0], self.points[:, 1]) < L
        m = (self.weights[inside, None] * self.points[inside]).sum(axis=0)
        return (float(m[0]), float(m[1])) if inside.any() else (0.0, 0.0)

    def integrate(self, f: Callable[[float, float], complex]) -> complex:
        """Sum of w_k * f(s_k, t_k); rejects non-finite values."""
        total = 0.0
        for (s, t), w in zip(self.points, self.weights):
            val = f(s, t)
            if not np.all(np.isfinite([np.real(val), np.imag(val)])):
                raise ValueError(f"integrand not finite at atom ({s}, {t})")
            total = total + w * val
        return total

    def tail_mass(self, eps: float) -> float:
        """Mass of { ||x|| >= eps }."""
        norms = np.hypot(self.points[:, 0], self.points[:, 1])
        return float(self.weights[norms >= eps].sum())

    def support_radius(self) -> float:
        return float(np.hypot(self.points[:, 0], self.points[:, 1]).max())

    def char_fun(self, u: Sequence[float]) -> complex:
        """Classical characteristic function at u."""
        phase = self.points @ np.asarray(u, dtype=float)
        return complex(np.sum(self.weights * np.exp(1j * phase)))

    def close_to(self, other: "PlanarMeasure", tol: float = 1e-12) -> bool:
        if len(self) != len(other):
            return False
        return bool(
            np.allclose(self.points, other.points, atol=tol)
            and np.allclose(self.weights, other.weights, atol=tol)
        )


class Measure1D:
    """Borel probability measure on R with finitely many atoms."""

    __slots__ = ("points", "weights")

    def __init__(self, atoms: Iterable[tuple[float, float]]):
        items = list(atoms)
        if not items:
            raise ValueError("measure needs at least one atom")
        pts = np.array([float(p) for p, _ in items], dtype=float)
        wts = np.array([float(w) for _, w in items], dtype=float)
        if not np.all(np.isfinite(pts)):
            raise ValueError("atom coordinates must be finite")
        if np.any(wts <= 0.0):
            raise ValueError("atom weights must be positive")
        order = np.argsort(pts, kind="stable")
        pts2d, wts = _merge_sorted(pts[order, None], wts[order], MERGE_TOL)
        if abs(wts.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {wts.sum()!r}, not 1")
        self.points = _freeze(pts2d[:, 0])
        self.weights = _freeze(wts)

    def __len__(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        return f"Measure1D({len(self)} atoms)"

    def dilated(self, lam: float) -> "Measure1D":
        if lam <= 0.0:
            raise ValueError("dilation factor must be positive")
        out = object.__new__(Measure1D)
        out.points = _freeze(lam * self.points)
        out.weights = self.weights
        return out

    def shifted_by(self, a: float) -> "Measure1D":
        out = object.__new__(Measure1D)
        out.points = _freeze(self.points - float(a))
        out.weights = self.weights
        return out

    def integrate(self, f: Callable[[float], complex]) -> complex:
        total = 0.0
        for p, w in zip(self.points, self.weights):
            val = f(p)
            if not np.all(np.isfinite([np.real(val), np.imag(val)])):
                raise ValueError(f"integrand not finite at atom {p}")
            total = total + w * val
        return total

    def support_radius(self) -> float:
        return float(np.abs(self.points).max())

    def close_to(self, other: "Measure1D", tol: float = 1e-12) -> bool:
        if len(self) != len(other):
            return False
        return bool(
            np.allclose(self.points, other.points, atol=tol)
            and np.allclose(self.weights, other.weights, atol=tol)
        )


class AtomicMeasure2D:
    """Finite atomic measure on R^2, not normalized; masses may be signed.

    Used for row accumulators, Levy measures and the sigma-form components.
    Zero-mass atoms are dropped.
    """

    __slots__ = ("points", "masses")

    def __init__(self, atoms: Iterable[tuple[Sequence[float], float]] = ()):
        items = list(atoms)
        if items:
            pts = np.array([[float(p[0]), float(p[1])] for p, _ in items], dtype=float)
            wts = np.array([float(w) for _, w in items], dtype=float)
            order = np.lexsort((pts[:, 1], pts[:, 0]))
            pts, wts = _merge_sorted(pts[order], wts[order], MERGE_TOL)
            keep = wts != 0.0
            pts, wts = pts[keep], wts[keep]
        else:
            pts = np.zeros((0, 2))
            wts = np.zeros(0)
        self.points = _freeze(pts)
        self.masses = _freeze(wts)

    def __len__(self) -> int:
        return len(self.masses)

    def __repr__(self) -> str:
        return f"AtomicMeasure2D({len(self)} atoms, mass {self.total_mass():.6g})"

    def atoms(self) -> list[tuple[Vec2, float]]:
        return [((p[0], p[1]), w) for p, w in zip(self.points, self.masses)]

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def mass_at(self, point: Sequence[float], tol: float = MERGE_TOL) -> float:
        if len(self) == 0:
            return 0.0
        d = np.linalg.norm(self.points - np.asarray(point, dtype=float), axis=1)
        return float(self.masses[d <= tol].sum())

    def mass_where(self, pred: Callable[[np.ndarray], np.ndarray]) -> float:
        """Mass of the set {pred}; pred maps an (n,2) array to a bool mask."""
        if len(self) == 0:
            return 0.0
        return float(self.masses[pred(self.points)].sum())

    def restricted(self, pred: Callable[[np.ndarray], np.ndarray]) -> "AtomicMeasure2D":
        if len(self) == 0:
            return self
        mask = pred(self.points)
        return AtomicMeasure2D(
            [((p[0], p[1]), w) for p, w in zip(self.points[mask], self.masses[mask])]
        )

    def integrate(self, f: Callable[[float, float], complex]) -> complex:
        total = 0.0
        for (s, t), w in zip(self.points, self.masses):
            total = total + w * f(s, t)
        return total

    def weighted(self, f: Callable[[float, float], float]) -> "AtomicMeasure2D":
        """New measure with masses multiplied by f(s, t) pointwise."""
        return AtomicMeasure2D(
            [((s, t), w * f(s, t)) for (s, t), w in zip(self.points, self.masses)]
        )

    def scaled(self, c: float) -> "AtomicMeasure2D":
        return AtomicMeasure2D([((s, t), c * w) for (s, t), w in self.atoms()])

    def __add__(self, other: "AtomicMeasure2D") -> "AtomicMeasure2D":
        return AtomicMeasure2D(self.atoms() + other.atoms())

    def marginal_points(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Projected atom positions and masses (not merged)."""
        if axis not in (1, 2):
            raise ValueError("axis must be 1 or 2")
        return self.points[:, axis - 1], self.masses

    def close_to(self, other: "AtomicMeasure2D", tol: float = 1e-9) -> bool:
        """Atomwise comparison after the canonical ordering."""
        if len(self) != len(other):
            return False
        if len(self) == 0:
            return True
        return bool(
            np.allclose(self.points, other.points, atol=tol)
            and np.allclose(self.masses, other.masses, atol=tol)
        )


def dirac(v: Sequence[float]) -> PlanarMeasure:
    """Point mass at v."""
    return PlanarMeasure([((float(v[0]), float(v[1])), 1.0)])


def dirac1d(a: float) -> Measure1D:
    return Measure1D([(float(a), 1.0)])


def row_tail_mass(row: Sequence[PlanarMeasure], eps: float) -> float:
    """max_k mu_k({||x|| >= eps}); small values certify an infinitesimal row."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if not row:
        raise ValueError("empty row")
    return max(m.tail_mass(eps) for m in row)
