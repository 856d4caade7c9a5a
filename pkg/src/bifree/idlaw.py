"""Infinitely divisible laws in the classical and bi-free worlds.

A characteristic triplet (v, A, tau) parameterizes both the classical
characteristic function and the two-variable phi-transform of an ID law.
Levy measures are atomic lists plus an optional radial-stable part: rays
r^{-1-alpha} dr carried by unit-circle directions, optionally truncated to
[r_min, r_max].

Radial integrals are computed by adaptive quadrature on substituted
variables that remove the endpoint singularities exactly: r = v^{1/(2-a)}
near zero and u = r^{-a} toward infinity.  Both the classical compensator
and the planar one divide by the same 1 + ||x||^2; only the sigma-form
components weight the coordinates separately.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .measure import AtomicMeasure2D, Matrix2, PlanarMeasure, Vec2

QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-11, limit=200)
QUAD_ERR_TOL = 1e-7


class QuadratureError(ArithmeticError):
    """Adaptive quadrature of a radial Levy integral failed."""


class InconsistentSigmaForm(ValueError):
    """The sigma-form relations are violated beyond tolerance."""


def _quad1(f: Callable[[float], float], a: float, b: float, **kw) -> float:
    val, err = quad(f, a, b, **{**QUAD_OPTS, **kw})
    if err > QUAD_ERR_TOL * (1.0 + abs(val)):
        raise QuadratureError(f"integral error estimate {err:.2e} too large on [{a}, {b}]")
    return val


def _quad_c(f: Callable[[float], complex], a: float, b: float, **kw) -> complex:
    re = _quad1(lambda r: f(r).real, a, b, **kw)
    im = _quad1(lambda r: f(r).imag, a, b, **kw)
    return re + 1j * im


def _radial_integral(g, h, alpha: float, r_min: float, r_max: float, scale: float) -> complex:
    """integral of g(r) r^{-1-alpha} dr over [r_min, r_max].

    ``h(r) = g(r) / r^2`` must be supplied in a cancellation-free form
    (g vanishes to second order at 0); g must stay bounded as r -> inf.
    """
    lo, hi = r_min, r_max
    if hi <= lo:
        return 0.0
    r0 = min(1.0, scale, hi)
    big = max(10.0 * scale, 10.0)
    total = 0.0 + 0.0j
    if lo < r0:
        if lo == 0.0:
            # r = v^{1/(2-alpha)} turns r^{1-alpha} h(r) dr into a constant-weight integrand
            p = 2.0 - alpha
            total += _quad_c(lambda v: h(v ** (1.0 / p)) / p, 0.0, r0**p)
        else:
            total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), lo, r0)
        lo = r0
    mid_hi = min(big, hi)
    if mid_hi > lo:
        total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), lo, mid_hi)
    if hi > mid_hi:
        if math.isinf(hi):
            # u = r^{-alpha}; g bounded makes this a proper integral
            total += _quad_c(lambda u: g(u ** (-1.0 / alpha)) / alpha, 0.0, big**-alpha)
        else:
            total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), mid_hi, hi)
    return total


@dataclass(frozen=True)
class RadialPart:
    """Radial-stable component: sum over rays of mass * r^{-1-alpha} dr."""

    alpha: float
    rays: tuple[tuple[float, float], ...]  # (angle, mass)
    r_min: float = 0.0
    r_max: float = math.inf

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("radial index must lie in (0, 2)")
        if any(m <= 0.0 for _, m in self.rays):
            raise ValueError("ray masses must be positive")
        if not (0.0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")

    def directions(self) -> list[tuple[float, float, float]]:
        """(omega1, omega2, mass) per ray."""
        return [(math.cos(a), math.sin(a), m) for a, m in self.rays]

    def total_theta_mass(self) -> float:
        return sum(m for _, m in self.rays)

    def min_one_norm_sq(self) -> float:
        """integral of 1 ^ r^2 against r^{-1-alpha} dr, summed over rays."""
        a = self.alpha
        lo, hi = self.r_min, self.r_max
        total = 0.0
        cut = min(max(lo, 1.0), hi)
        if cut > lo:  # r^2 part on [lo, cut); exact antiderivative
            total += (cut ** (2.0 - a) - lo ** (2.0 - a)) / (2.0 - a)
        if hi > cut:
            hi_term = 0.0 if math.isinf(hi) else hi**-a
            total += (cut**-a - hi_term) / a
        return total * self.total_theta_mass()

    def scaled(self, c: float) -> "RadialPart":
        return RadialPart(self.alpha, tuple((a, c * m) for a, m in self.rays), self.r_min, self.r_max)


@dataclass(frozen=True)
class LevyMeasure:
    """Positive measure with no mass at 0 and 1 ^ ||x||^2 integrable."""

    atoms: AtomicMeasure2D
    radial: RadialPart | None = None

    def __post_init__(self):
        if len(self.atoms) and np.any(self.atoms.masses <= 0.0):
            raise ValueError("Levy atoms must carry positive mass")
        if self.atoms.mass_at((0.0, 0.0)) != 0.0:
            raise ValueError("Levy measure cannot charge the origin")

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[Sequence[float], float]]) -> "LevyMeasure":
        return cls(AtomicMeasure2D(atoms))

    @classmethod
    def zero(cls) -> "LevyMeasure":
        return cls(AtomicMeasure2D())

    def is_zero(self) -> bool:
        return len(self.atoms) == 0 and self.radial is None

    def is_atomic(self) -> bool:
        return self.radial is None

    def min_one_norm_sq(self) -> float:
        total = self.atoms.integrate(lambda s, t: min(1.0, s * s + t * t)).real
        if self.radial is not None:
            total += self.radial.min_one_norm_sq()
        return total

    def scaled(self, c: float) -> "LevyMeasure":
        if c <= 0.0:
            raise ValueError("scale must be positive")
        return LevyMeasure(
            self.atoms.scaled(c), None if self.radial is None else self.radial.scaled(c)
        )

    def __add__(self, other: "LevyMeasure") -> "LevyMeasure":
        if self.radial is not None and other.radial is not None:
            if (
                self.radial.alpha != other.radial.alpha
                or self.radial.r_min != other.radial.r_min
                or self.radial.r_max != other.radial.r_max
            ):
                raise ValueError("cannot add radial parts with different shapes")
            radial = RadialPart(
                self.radial.alpha,
                self.radial.rays + other.radial.rays,
                self.radial.r_min,
                self.radial.r_max,
            )
        else:
            radial = self.radial or other.radial
        return LevyMeasure(self.atoms + other.atoms, radial)

    def discretized(self, cells_per_decade: int = 200, r_lo: float = 1e-4, r_hi: float = 1e4) -> "LevyMeasure":
        """Atomic approximation of the radial part on a log grid.

        Each cell carries its exact mass, placed at the cell's mass centroid;
        mass outside [r_lo, r_hi] is dropped (tails are O(r_lo^{2-alpha}) and
        O(r_hi^{-alpha}) relative to the full ray).
        """
        if self.radial is None:
            return self
        rp = self.radial
        a = rp.alpha
        lo = max(rp.r_min, r_lo)
        hi = min(rp.r_max, r_hi)
        n = max(1, int(round(cells_per_decade * math.log10(hi / lo))))
        edges = np.geomspace(lo, hi, n + 1)
        el, er = edges[:-1], edges[1:]
        cell_mass = (el**-a - er**-a) / a
        if a == 1.0:
            centroid = np.log(er / el) / cell_mass
        else:
            centroid = (el ** (1.0 - a) - er ** (1.0 - a)) / ((a - 1.0) * cell_mass)
        new_atoms = list(self.atoms.atoms())
        for w1, w2, m in rp.directions():
            for r, cm in zip(centroid, cell_mass):
                new_atoms.append(((r * w1, r * w2), m * cm))
        return LevyMeasure(AtomicMeasure2D(new_atoms))


def _e1(x: complex) -> complex:
    """exp(x) - 1 - x, stable for small |x|."""
    if abs(x) < 1e-4:
        return x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    return cmath.exp(x) - 1.0 - x


def _ray_cf_integral(k: float, alpha: float, r_min: float, r_max: float) -> complex:
    """integral of (e^{ikr} - 1 - ikr/(1+r^2)) r^{-1-alpha} dr over the ray."""
    if k == 0.0:
        return 0.0

    def g(r: float) -> complex:
        return _e1(1j * k * r) + 1j * k * r**3 / (1.0 + r * r)

    def h(r: float) -> complex:
        return _e1(1j * k * r) / (r * r) + 1j * k * r / (1.0 + r * r)

    lo, hi = r_min, r_max
    scale = 1.0 / abs(k)
    r0 = min(1.0, scale, hi)
    big = max(10.0, 20.0 * scale)
    total = 0.0 + 0.0j
    if lo < r0:
        if lo == 0.0:
            p = 2.0 - alpha
            total += _quad_c(lambda v: h(v ** (1.0 / p)) / p, 0.0, r0**p)
        else:
            total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), lo, r0)
        lo = r0
    mid_hi = min(big, hi)
    if mid_hi > lo:
        total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), lo, mid_hi)
    if hi > mid_hi:
        if math.isinf(hi):
            # oscillatory tail via Fourier-weighted quadrature
            dens = lambda r: r ** (-1.0 - alpha)
            re = quad(dens, big, np.inf, weight="cos", wvar=k, limit=200)[0]
            im = quad(dens, big, np.inf, weight="sin", wvar=k, limit=200)[0]
            total += re + 1j * im
            total += -(big**-alpha) / alpha  # -1 term, exactly
            # -ik r^{-alpha}/(1+r^2): substitute u = 1/r
            total += -1j * k * _quad1(lambda u: u**alpha / (1.0 + u * u), 0.0, 1.0 / big)
        else:
            total += _quad_c(lambda r: g(r) * r ** (-1.0 - alpha), mid_hi, hi)
    return total


def _ray_drift_integral(alpha: float, r_min: float, r_max: float) -> float | None:
    """integral of r^{-alpha} / (1 + r^2) dr over the ray, None if divergent."""
    if r_min == 0.0 and alpha >= 1.0:
        return None
    if r_min == 0.0 and math.isinf(r_max):
        return 0.5 * math.pi / math.cos(0.5 * math.pi * alpha)
    lo, hi = r_min, r_max
    total = 0.0
    if lo == 0.0:
        p = 1.0 - alpha  # r^{-alpha} = d/dr [r^p / p]; substitute v = r^p
        total += _quad1(lambda v: 1.0 / (p * (1.0 + v ** (2.0 / p))), 0.0, min(1.0, hi) ** p)
        lo = min(1.0, hi)
    if hi > lo:
        # u = 1/r maps the rest onto the bounded integrand u^alpha/(1+u^2)
        a_u = 0.0 if math.isinf(hi) else 1.0 / hi
        b_u = 1.0 / lo
        cut = min(max(a_u, 1.0), b_u)
        total += _quad1(lambda u: u**alpha / (1.0 + u * u), a_u, cut)
        if b_u > cut:
            total += _quad1(lambda u: u**alpha / (1.0 + u * u), cut, b_u)
    return total


@dataclass(frozen=True)
class CharTriplet:
    """Characteristic triplet (v, A, tau); A = [[a, c], [c, b]] must be psd."""

    v: Vec2
    A: Matrix2
    tau: LevyMeasure

    def __post_init__(self):
        if not self.A.is_psd(tol=1e-12):
            raise ValueError("matrix part must be positive semi-definite")

    # -- bi-free side ------------------------------------------------------

    def bi_free_phi(self, z, w):
        """phi-transform of the ID law; defined on all of (C\\R)^2."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        v1, v2 = self.v
        A = self.A
        val = v1 / z + v2 / w + A.a / z**2 + A.c / (z * w) + A.b / w**2
        val = val + self._poisson_part(z, w)
        return complex(val) if np.ndim(val) == 0 else val

    def _poisson_part(self, z, w):
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        if len(self.tau.atoms):
            s = self.tau.atoms.points[:, 0]
            t = self.tau.atoms.points[:, 1]
            m = self.tau.atoms.masses
            zz = z[..., None]
            ww = w[..., None]
            kern = zz * ww / ((zz - s) * (ww - t)) - 1.0 - (s / zz + t / ww) / (1.0 + s * s + t * t)
            out = out + (m * kern).sum(axis=-1)
        if self.tau.radial is not None:
            rp = self.tau.radial
            flat = out.reshape(-1)
            zf = np.broadcast_to(z, out.shape).reshape(-1)
            wf = np.broadcast_to(w, out.shape).reshape(-1)
            for i in range(flat.size):
                flat[i] += _radial_poisson(zf[i], wf[i], rp)
            out = flat.reshape(out.shape)
        return out

    # -- classical side ----------------------------------------------------

    def classical_cf(self, u: Sequence[float]) -> complex:
        """Characteristic function exp[i<u,v> - <Au,u>/2 + integral part]."""
        u1, u2 = float(u[0]), float(u[1])
        expo = 1j * (u1 * self.v[0] + u2 * self.v[1]) - 0.5 * self.A.quad_form((u1, u2))
        if len(self.tau.atoms):
            s = self.tau.atoms.points[:, 0]
            t = self.tau.atoms.points[:, 1]
            m = self.tau.atoms.masses
            dot = u1 * s + u2 * t
            expo += (m * (np.exp(1j * dot) - 1.0 - 1j * dot / (1.0 + s * s + t * t))).sum()
        if self.tau.radial is not None:
            rp = self.tau.radial
            for w1, w2, mass in rp.directions():
                k = u1 * w1 + u2 * w2
                expo += mass * _ray_cf_integral(k, rp.alpha, rp.r_min, rp.r_max)
        return cmath.exp(expo)

    # -- marginals ---------------------------------------------------------

    def marginal_phi(self, axis: int, z):
        """Free phi-transform of the marginal law on the chosen axis."""
        z = np.asarray(z, dtype=complex)
        vj = self.v[axis - 1]
        diag = self.A.a if axis == 1 else self.A.b
        val = vj + diag / z
        if len(self.tau.atoms):
            pts = self.tau.atoms.points
            m = self.tau.atoms.masses
            s = pts[:, axis - 1]
            nrm = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
            zz = z[..., None]
            val = val + (m * (zz * s / (zz - s) - s / nrm)).sum(axis=-1)
        if self.tau.radial is not None:
            rp = self.tau.radial
            flat = np.broadcast_to(val, np.shape(val)).astype(complex).reshape(-1)
            zf = np.broadcast_to(z, np.shape(val)).reshape(-1)
            for i in range(flat.size):
                flat[i] += _radial_marginal_phi(zf[i], rp, axis)
            val = flat.reshape(np.shape(val))
        return complex(val) if np.ndim(val) == 0 else val

    def marginal_dphi(self, axis: int, z):
        """d/dz of the marginal phi-transform."""
        z = np.asarray(z, dtype=complex)
        diag = self.A.a if axis == 1 else self.A.b
        val = -diag / z**2
        if len(self.tau.atoms):
            s = self.tau.atoms.points[:, axis - 1]
            m = self.tau.atoms.masses
            zz = z[..., None]
            val = val - (m * s * s / (zz - s) ** 2).sum(axis=-1)
        if self.tau.radial is not None:
            rp = self.tau.radial
            flat = np.broadcast_to(val, np.shape(val)).astype(complex).reshape(-1)
            zf = np.broadcast_to(z, np.shape(val)).reshape(-1)
            for i in range(flat.size):
                flat[i] += _radial_marginal_dphi(zf[i], rp, axis)
            val = flat.reshape(np.shape(val))
        return complex(val) if np.ndim(val) == 0 else val

    def marginal_phi_term(self, axis: int):
        return TripletMarginalPhi(self, axis)

    # -- structure ---------------------------------------------------------

    def drift(self) -> Vec2 | None:
        """Drift vector when ||x||/(1+||x||^2) is tau-integrable, else None.

        With the drift u the phi-transform reads u1/z + u2/w + quadratic
        + integral of [zw/((z-s)(w-t)) - 1].
        """
        u1, u2 = self.v
        if len(self.tau.atoms):
            pts = self.tau.atoms.points
            m = self.tau.atoms.masses
            nrm = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
            u1 -= float((m * pts[:, 0] / nrm).sum())
            u2 -= float((m * pts[:, 1] / nrm).sum())
        if self.tau.radial is not None:
            rp = self.tau.radial
            base = _ray_drift_integral(rp.alpha, rp.r_min, rp.r_max)
            if base is None:
                return None
            for w1, w2, mass in rp.directions():
                u1 -= mass * w1 * base
                u2 -= mass * w2 * base
        return (u1, u2)

    def scaled(self, f: float) -> "CharTriplet":
        """Triplet of the f-th convolution power (f > 0); affine in all parts."""
        return CharTriplet(
            (f * self.v[0], f * self.v[1]), self.A.scaled(f), self.tau.scaled(f)
        )


class TripletMarginalPhi:
    """Free phi-evaluator of a triplet marginal, pluggable into FreeConvRep."""

    __slots__ = ("triplet", "axis")

    def __init__(self, triplet: CharTriplet, axis: int):
        self.triplet = triplet
        self.axis = axis

    def cone(self):
        from .transforms import TruncatedCone

        return TruncatedCone(1.0, 1.0)

    def phi_dphi(self, z, guess=None):
        return (
            self.triplet.marginal_phi(self.axis, z),
            self.triplet.marginal_dphi(self.axis, z),
            np.asarray(z, dtype=complex),
        )


def _radial_poisson(z: complex, w: complex, rp: RadialPart) -> complex:
    total = 0.0 + 0.0j
    scale = max(1.0, abs(z), abs(w))
    for w1, w2, mass in rp.directions():

        def g(r: float) -> complex:
            s, t = r * w1, r * w2
            one = 1.0 + r * r
            term1 = (s * s + s * z * r * r) / (z * one * (z - s)) if w1 != 0.0 else 0.0
            term2 = (t * t + t * w * r * r) / (w * one * (w - t)) if w2 != 0.0 else 0.0
            term3 = s * t / ((z - s) * (w - t))
            return term1 + term2 + term3

        def h(r: float) -> complex:
            one = 1.0 + r * r
            term1 = (w1 * w1 + r * w1 * z) / (z * one * (z - r * w1))
            term2 = (w2 * w2 + r * w2 * w) / (w * one * (w - r * w2))
            term3 = w1 * w2 / ((z - r * w1) * (w - r * w2))
            return term1 + term2 + term3

        total += mass * _radial_integral(g, h, rp.alpha, rp.r_min, rp.r_max, scale)
    return total


def _radial_marginal_phi(z: complex, rp: RadialPart, axis: int) -> complex:
    total = 0.0 + 0.0j
    scale = max(1.0, abs(z))
    for w1, w2, mass in rp.directions():
        om = w1 if axis == 1 else w2
        if om == 0.0:
            continue

        def g(r: float) -> complex:
            s = r * om
            return s * (z * r * r + s) / ((z - s) * (1.0 + r * r))

        def h(r: float) -> complex:
            return om * (z * r + om) / ((z - r * om) * (1.0 + r * r))

        total += mass * _radial_integral(g, h, rp.alpha, rp.r_min, rp.r_max, scale)
    return total


def _radial_marginal_dphi(z: complex, rp: RadialPart, axis: int) -> complex:
    total = 0.0 + 0.0j
    scale = max(1.0, abs(z))
    for w1, w2, mass in rp.directions():
        om = w1 if axis == 1 else w2
        if om == 0.0:
            continue

        def g(r: float) -> complex:
            s = r * om
            return -s * s / (z - s) ** 2

        def h(r: float) -> complex:
            return -om * om / (z - r * om) ** 2

        total += mass * _radial_integral(g, h, rp.alpha, rp.r_min, rp.r_max, scale)
    return total


# -- named constructors ------------------------------------------------------


def make_gaussian(v: Sequence[float], A: Matrix2) -> CharTriplet:
    """Triplet (v, A, 0)."""
    return CharTriplet((float(v[0]), float(v[1])), A, LevyMeasure.zero())


def make_compound_poisson(lam: float, jump: PlanarMeasure) -> CharTriplet:
    """Rate-lam compound law with the given jump distribution.

    The drift compensator integral fixes v = lam * E[x / (1 + ||x||^2)].
    """
    if lam <= 0.0:
        raise ValueError("rate must be positive")
    if jump.tail_mass(1e-300) < 1.0 - 1e-12:
        raise ValueError("jump distribution cannot charge the origin")
    pts, wts = jump.points, jump.weights
    nrm = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
    v = (
        lam * float((wts * pts[:, 0] / nrm).sum()),
        lam * float((wts * pts[:, 1] / nrm).sum()),
    )
    tau = LevyMeasure.from_atoms([(p, lam * w) for p, w in jump.atoms()])
    return CharTriplet(v, Matrix2(0.0, 0.0, 0.0), tau)


def convolve_triplets(t1: CharTriplet, t2: CharTriplet) -> CharTriplet:
    """Triplet of the convolution: components add."""
    return CharTriplet(
        (t1.v[0] + t2.v[0], t1.v[1] + t2.v[1]), t1.A + t2.A, t1.tau + t2.tau
    )


def lambda_bijection(direction: str, t: CharTriplet) -> CharTriplet:
    """Identity on triplets; tags which representation a pipeline evaluates.

    ``direction`` is "classical-to-bifree" or "bifree-to-classical".
    """
    if direction not in ("classical-to-bifree", "bifree-to-classical"):
        raise ValueError(f"unknown direction {direction!r}")
    return t


# -- sigma-form --------------------------------------------------------------


@dataclass(frozen=True)
class SigmaForm:
    """Finite-measure representation (gamma1, gamma2, sigma1, sigma2, sigma~)."""

    gamma1: float
    gamma2: float
    sigma1: AtomicMeasure2D
    sigma2: AtomicMeasure2D
    sigma_tilde: AtomicMeasure2D

    def verify(self, tol: float = 1e-12) -> None:
        """Check the defining relations atomwise; raises on violation."""
        locs = {tuple(p) for p in self.sigma1.points}
        locs |= {tuple(p) for p in self.sigma2.points}
        locs |= {tuple(p) for p in self.sigma_tilde.points}
        for s, t in sorted(locs):
            m1 = self.sigma1.mass_at((s, t))
            m2 = self.sigma2.mass_at((s, t))
            mt = self.sigma_tilde.mass_at((s, t))
            if (s, t) == (0.0, 0.0):
                if mt * mt > m1 * m2 + tol:
                    raise InconsistentSigmaForm("origin masses violate Cauchy-Schwarz")
                continue
            lhs1 = t / math.sqrt(1.0 + t * t) * m1
            rhs1 = s / math.sqrt(1.0 + s * s) * mt
            lhs2 = s / math.sqrt(1.0 + s * s) * m2
            rhs2 = t / math.sqrt(1.0 + t * t) * mt
            if abs(lhs1 - rhs1) > tol or abs(lhs2 - rhs2) > tol:
                raise InconsistentSigmaForm(f"relations fail at atom ({s}, {t})")


def triplet_to_sigma_form(t: CharTriplet) -> SigmaForm:
    """Finite-measure form of an atomic triplet.

    Radial Levy parts must be discretized first (see
    :meth:`LevyMeasure.discretized`).
    """
    if not t.tau.is_atomic():
        raise ValueError("sigma-form requires an atomic Levy measure; discretize first")
    s1 = [((0.0, 0.0), t.A.a)] if t.A.a != 0.0 else []
    s2 = [((0.0, 0.0), t.A.b)] if t.A.b != 0.0 else []
    st = [((0.0, 0.0), t.A.c)] if t.A.c != 0.0 else []
    g1 = t.v[0]
    g2 = t.v[1]
    for (s, tt), m in t.tau.atoms.atoms():
        den1 = 1.0 + s * s
        den2 = 1.0 + tt * tt
        nrm = 1.0 + s * s + tt * tt
        if s != 0.0:
            s1.append(((s, tt), m * s * s / den1))
        if tt != 0.0:
            s2.append(((s, tt), m * tt * tt / den2))
        if s != 0.0 and tt != 0.0:
            st.append(((s, tt), m * s * tt / math.sqrt(den1 * den2)))
        g1 += m * s * tt * tt / (den1 * nrm)
        g2 += m * tt * s * s / (den2 * nrm)
    return SigmaForm(g1, g2, AtomicMeasure2D(s1), AtomicMeasure2D(s2), AtomicMeasure2D(st))


def sigma_form_to_triplet(sf: SigmaForm, tol: float = 1e-9) -> CharTriplet:
    """Inverse of :func:`triplet_to_sigma_form`; validates the relations."""
    sf.verify(tol=tol)
    a = sf.sigma1.mass_at((0.0, 0.0))
    b = sf.sigma2.mass_at((0.0, 0.0))
    c = sf.sigma_tilde.mass_at((0.0, 0.0))
    if c * c > a * b + tol:
        raise InconsistentSigmaForm("origin masses violate Cauchy-Schwarz")
    tau_atoms: list[tuple[tuple[float, float], float]] = []
    for (s, t), m in sf.sigma1.atoms():
        if (s, t) == (0.0, 0.0):
            continue
        if s == 0.0:
            raise InconsistentSigmaForm("sigma1 charges a point with s = 0 off the origin")
        tau_atoms.append(((s, t), m * (1.0 + s * s) / (s * s)))
    seen = {pt for pt, _ in tau_atoms}
    for (s, t), m in sf.sigma2.atoms():
        if (s, t) == (0.0, 0.0):
            continue
        if t == 0.0:
            raise InconsistentSigmaForm("sigma2 charges a point with t = 0 off the origin")
        mass = m * (1.0 + t * t) / (t * t)
        if (s, t) in seen:
            ref = next(mm for pp, mm in tau_atoms if pp == (s, t))
            if abs(mass - ref) > tol * (1.0 + abs(ref)):
                raise InconsistentSigmaForm(f"sigma1/sigma2 disagree at ({s}, {t})")
        else:
            tau_atoms.append(((s, t), mass))
    tau = LevyMeasure.from_atoms(tau_atoms)
    g1 = sf.gamma1
    g2 = sf.gamma2
    v1 = g1 - sum(
        m * s * t * t / ((1.0 + s * s) * (1.0 + s * s + t * t)) for (s, t), m in tau_atoms
    )
    v2 = g2 - sum(
        m * t * s * s / ((1.0 + t * t) * (1.0 + s * s + t * t)) for (s, t), m in tau_atoms
    )
    return CharTriplet((v1, v2), Matrix2(a, c, b), tau)
