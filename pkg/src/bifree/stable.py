"""Stable laws: construction from circle measures, stability checks, and
domain-of-attraction experiments.

A stable law of index alpha < 2 has Levy measure r^{-1-alpha} dr dTheta on
rays; alpha = 2 is the Gaussian branch (no Levy part).  The defining
dilation identity is verified through the covariance phi_{D_lam}(z, w) =
phi(z/lam, w/lam), with the unknown recentring vector always solved by
least squares over probe points rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .idlaw import CharTriplet, LevyMeasure, RadialPart, make_gaussian
from .measure import AtomicMeasure2D, Matrix2, PlanarMeasure, Vec2
from .transforms import bi_free_phi

Probe = tuple[complex, complex]


@dataclass(frozen=True)
class StableSpec:
    """Index, circle measure, shift and (for alpha = 2) the Gaussian matrix."""

    alpha: float
    theta: tuple[tuple[float, float], ...] = ()
    v: Vec2 = (0.0, 0.0)
    gaussian_a: Matrix2 | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError("stability index must lie in (0, 2]")
        if self.alpha == 2.0:
            if self.theta:
                raise ValueError("alpha = 2 admits no circle measure")
            if self.gaussian_a is None or not self.gaussian_a.is_psd():
                raise ValueError("alpha = 2 requires a psd Gaussian matrix")
        else:
            if not self.theta:
                raise ValueError("alpha < 2 requires a nonempty circle measure")
            if self.gaussian_a is not None:
                raise ValueError("Gaussian matrix only allowed at alpha = 2")


def stable_triplet(spec: StableSpec) -> CharTriplet:
    """Characteristic triplet of the stable law described by the spec."""
    if spec.alpha == 2.0:
        return make_gaussian(spec.v, spec.gaussian_a)
    radial = RadialPart(spec.alpha, tuple(spec.theta))
    return CharTriplet(spec.v, Matrix2(0.0, 0.0, 0.0), LevyMeasure(AtomicMeasure2D(), radial))


def default_probes(scale: float = 1.0) -> list[Probe]:
    """Tensor grid of z, w in {+-2i, +-4i, +-8i} scaled; deep in every cone."""
    vals = [2j, 4j, 8j, -2j, -4j, -8j]
    return [(scale * z, scale * w) for z in vals for w in vals]


def fit_point_mass_shift(
    probes: Sequence[Probe], residuals: Sequence[complex]
) -> tuple[Vec2, float]:
    """Least-squares u with residual ~ u1/z + u2/w; returns (u, max leftover)."""
    rows = []
    rhs = []
    for (z, w), r in zip(probes, residuals):
        rows.append([(1.0 / z).real, (1.0 / w).real])
        rows.append([(1.0 / z).imag, (1.0 / w).imag])
        rhs.append(r.real)
        rhs.append(r.imag)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    u = (float(sol[0]), float(sol[1]))
    leftover = max(
        abs(r - u[0] / z - u[1] / w) for (z, w), r in zip(probes, residuals)
    )
    return u, float(leftover)


@dataclass
class StabilityReport:
    alpha: float
    a: float
    b: float
    c: float
    shift: Vec2
    max_residual: float
    is_stable: bool
    probe_residuals: list[dict] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "alpha": self.alpha,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "shift": list(self.shift),
            "max_residual": self.max_residual,
            "is_stable": self.is_stable,
            "probe_residuals": self.probe_residuals,
        }


def check_stability(
    spec: StableSpec,
    a: float,
    b: float,
    probes: Sequence[Probe] | None = None,
    threshold: float = 1e-6,
) -> StabilityReport:
    """Verify (D_a mu) ++ (D_b mu) = (D_c mu) ++ delta_u at the phi level.

    c is forced to (a^alpha + b^alpha)^{1/alpha}; u comes out of the drift
    fit.  A large residual flags that the tested index does not match the
    law (the negative-control path).
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("dilation factors must be positive")
    if probes is None:
        probes = default_probes()
    c = (a**spec.alpha + b**spec.alpha) ** (1.0 / spec.alpha)
    trip = stable_triplet(spec)
    resid = []
    for z, w in probes:
        val = (
            trip.bi_free_phi(z / a, w / a)
            + trip.bi_free_phi(z / b, w / b)
            - trip.bi_free_phi(z / c, w / c)
        )
        resid.append(val)
    u, leftover = fit_point_mass_shift(probes, resid)
    table = [
        {"z": [z.real, z.imag], "w": [w.real, w.imag],
         "residual": abs(r - u[0] / z - u[1] / w)}
        for (z, w), r in zip(probes, resid)
    ]
    return StabilityReport(
        alpha=spec.alpha, a=a, b=b, c=c, shift=u,
        max_residual=leftover, is_stable=bool(leftover <= threshold),
        probe_residuals=table,
    )


def scan_best_index_scale(
    spec: StableSpec, a: float, b: float, probes: Sequence[Probe] | None = None,
    c_grid: Sequence[float] | None = None,
) -> float:
    """c minimizing the drift-fitted residual over a 1-d scan."""
    if probes is None:
        probes = default_probes()
    trip = stable_triplet(spec)
    base = [
        trip.bi_free_phi(z / a, w / a) + trip.bi_free_phi(z / b, w / b)
        for z, w in probes
    ]
    c_star = (a**spec.alpha + b**spec.alpha) ** (1.0 / spec.alpha)
    if c_grid is None:
        c_grid = np.linspace(0.7 * c_star, 1.3 * c_star, 61)
    best_c, best_r = None, math.inf
    for c in c_grid:
        resid = [
            v - trip.bi_free_phi(z / c, w / c) for v, (z, w) in zip(base, probes)
        ]
        _, leftover = fit_point_mass_shift(probes, resid)
        if leftover < best_r:
            best_c, best_r = float(c), leftover
    return best_c


@dataclass
class ConvergenceReport:
    ns: list[int]
    bifree_residuals: list[float]
    classical_residuals: list[float]
    bifree_converged: bool
    classical_converged: bool

    @property
    def agree(self) -> bool:
        return self.bifree_converged == self.classical_converged

    def to_jsonable(self) -> dict:
        return {
            "ns": self.ns,
            "bifree_residuals": self.bifree_residuals,
            "classical_residuals": self.classical_residuals,
            "bifree_converged": self.bifree_converged,
            "classical_converged": self.classical_converged,
            "agree": self.agree,
        }


def residuals_converge(resids: Sequence[float], ratio: float = 0.6) -> bool:
    """Heuristic: successive residuals must keep shrinking geometrically.

    Assumes the sample sizes grow by a fixed factor; an O(1/n) rate then
    shows up as a stable ratio well below 1, while a non-matching target
    leaves the residuals flat.
    """
    rs = list(resids)
    if len(rs) < 2:
        return False
    floor = 1e-13
    checks = []
    for prev, cur in zip(rs[:-1], rs[1:]):
        if prev <= floor and cur <= floor:
            checks.append(True)
        else:
            checks.append(cur <= ratio * prev + floor)
    return all(checks[-2:]) if len(checks) >= 2 else checks[-1]


def default_u_probes() -> list[Vec2]:
    return [(0.4, 0.0), (0.0, 0.4), (0.4, 0.4), (-0.3, 0.5), (0.8, 0.0), (0.0, 0.8), (0.6, -0.6), (1.0, 1.0)]


def fit_cf_shift(u_probes: Sequence[Vec2], ratios: Sequence[complex]) -> Vec2:
    """Least-squares c with log-ratio ~ i<u, c> (principal branch)."""
    rows = [[u1, u2] for u1, u2 in u_probes]
    rhs = [np.angle(r) for r in ratios]
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return (float(sol[0]), float(sol[1]))


def domain_of_attraction_run(
    nu: PlanarMeasure,
    spec: StableSpec,
    ns: Sequence[int],
    probes: Sequence[Probe] | None = None,
    u_probes: Sequence[Vec2] | None = None,
) -> ConvergenceReport:
    """Scaled n-fold convolutions of nu against the stable target.

    Per n, the bi-free side compares n * phi of the dilated law (plus a
    fitted recentring) to the target phi; the classical side compares the
    n-th CF power (plus a fitted phase) to the target CF.
    """
    ns = list(ns)
    if any(n2 <= n1 for n1, n2 in zip(ns[:-1], ns[1:])):
        raise ValueError("sample sizes must increase")
    if probes is None:
        probes = default_probes()
    if u_probes is None:
        u_probes = default_u_probes()
    trip = stable_triplet(spec)
    target_phi = [trip.bi_free_phi(z, w) for z, w in probes]
    target_cf = [trip.classical_cf(u) for u in u_probes]
    bif, cls = [], []
    for n in ns:
        bn = float(n) ** (1.0 / spec.alpha)
        dil = nu.dilated(1.0 / bn)
        phi_n = [n * bi_free_phi(dil, z, w) for z, w in probes]
        resid = [p - t for p, t in zip(phi_n, target_phi)]
        _, leftover = fit_point_mass_shift(probes, resid)
        bif.append(float(leftover))
        cf_n = [dil.char_fun(u) ** n for u in u_probes]
        ratios = [t / c if c != 0 else 1.0 for t, c in zip(target_cf, cf_n)]
        shift = fit_cf_shift(u_probes, ratios)
        leftover_cf = max(
            abs(c * np.exp(1j * (u[0] * shift[0] + u[1] * shift[1])) - t)
            for c, t, u in zip(cf_n, target_cf, u_probes)
        )
        cls.append(float(leftover_cf))
    return ConvergenceReport(
        ns=ns,
        bifree_residuals=bif,
        classical_residuals=cls,
        bifree_converged=residuals_converge(bif),
        classical_converged=residuals_converge(cls),
    )
