"""Bi-free additive convolution of planar laws, by phi-addition.

Terms of a :class:`BiConvRep` are atomic planar measures or characteristic
triplets; the representation is never materialized as atoms.  Recovery of
the planar Cauchy transform solves the two marginal inversions separately
(they are independent 1-d problems) and divides through the defining
relation of the two-variable phi-transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .freeconv import AtomicPhiTerm, FreeConvRep, free_convolve_many
from .measure import PlanarMeasure, Vec2
from .transforms import (
    DEGENERATE_TOL,
    DegenerateDenominator,
    GridDensity,
    TruncatedCone,
    bi_free_phi_grid,
    cone_for,
    inversion_values,
)


def _is_triplet(obj) -> bool:
    return hasattr(obj, "tau") and hasattr(obj, "bi_free_phi")


def _term_cone(term) -> TruncatedCone:
    if isinstance(term, PlanarMeasure):
        return cone_for(term)
    return TruncatedCone(1.0, 1.0)  # triplet transforms live on all of (C\R)^2


@dataclass(frozen=True)
class BiConvRep:
    """Lazy bi-free convolution: phi = sum of term phis + point-mass shift."""

    terms: tuple
    shift: Vec2
    cone: TruncatedCone

    def _marginal_with_map(self, axis: int) -> tuple[FreeConvRep, list[int]]:
        """Marginal rep plus the rep-term -> planar-term index map.

        Terms whose marginal collapses to a point are folded into the shift
        here so the map stays aligned with the solver's warm-start slots.
        """
        parts: list = []
        src: list[int] = []
        shift = float(self.shift[axis - 1])
        for idx, t in enumerate(self.terms):
            if isinstance(t, PlanarMeasure):
                m = t.marginal(axis)
                if len(m) == 1:
                    shift += float(m.points[0])
                else:
                    parts.append(AtomicPhiTerm(m))
                    src.append(idx)
            else:
                parts.append(t.marginal_phi_term(axis))
                src.append(idx)
        return free_convolve_many(parts, shift=shift), src

    def marginal(self, axis: int) -> FreeConvRep:
        """Free-convolution representation of the marginal law."""
        return self._marginal_with_map(axis)[0]

    def phi_grid(self, zs: np.ndarray, ws: np.ndarray, guesses=None) -> np.ndarray:
        """phi on the product grid zs x ws.

        ``guesses`` optionally carries per-term warm starts for the two
        marginal inversions, as produced by the density solver.
        """
        zs = np.asarray(zs, dtype=complex)
        ws = np.asarray(ws, dtype=complex)
        total = np.zeros((len(zs), len(ws)), dtype=complex)
        for k, t in enumerate(self.terms):
            if isinstance(t, PlanarMeasure):
                g1 = g2 = None
                if guesses is not None:
                    g1, g2 = guesses[k]
                p, _, _ = bi_free_phi_grid(t, zs, ws, guess1=g1, guess2=g2)
            else:
                p = t.bi_free_phi(zs[:, None], ws[None, :])
            total += p
        total += (self.shift[0] / zs)[:, None] + (self.shift[1] / ws)[None, :]
        return total

    def phi(self, z, w):
        """phi at elementwise points (z, w) inside the working bicone."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if z.ndim == 0 and w.ndim == 0:
            return complex(self.phi_grid(z[None], w[None])[0, 0])
        z, w = np.broadcast_arrays(z, w)
        out = np.empty(z.shape, dtype=complex)
        for idx in np.ndindex(z.shape):
            out[idx] = self.phi_grid(z[idx][None], w[idx][None])[0, 0]
        return out

    def _recover(self, z1, w2, Phi1, Phi2, guesses) -> np.ndarray:
        phi = self.phi_grid(z1, w2, guesses=guesses)
        D = (Phi1 / z1)[:, None] + (Phi2 / w2)[None, :] + 1.0 - phi
        if np.any(np.abs(D) < DEGENERATE_TOL):
            raise DegenerateDenominator("phi-relation denominator vanished during recovery")
        return 1.0 / (z1[:, None] * w2[None, :] * D)

    def _marginal_solves(self, Z, W):
        mr1, src1 = self._marginal_with_map(1)
        mr2, src2 = self._marginal_with_map(2)
        z1, aux1 = mr1.f_value(Z, return_aux=True)
        w2, aux2 = mr2.f_value(W, return_aux=True)
        guesses = self._guesses(aux1, src1, aux2, src2)
        return z1, w2, guesses

    def _guesses(self, aux1, src1, aux2, src2):
        """Warm starts per planar term; folded marginals need none (their
        inversions are linear and converge in one step)."""
        g1 = dict(zip(src1, aux1))
        g2 = dict(zip(src2, aux2))
        out = []
        for idx, t in enumerate(self.terms):
            if isinstance(t, PlanarMeasure):
                out.append((g1.get(idx), g2.get(idx)))
            else:
                out.append((None, None))
        return out

    def _direct_atomic(self):
        """The translated atomic law, when the rep is one up to a shift."""
        if len(self.terms) == 0:
            from .measure import dirac

            return dirac(self.shift)
        if len(self.terms) == 1 and isinstance(self.terms[0], PlanarMeasure):
            if self.shift == (0.0, 0.0):
                return self.terms[0]
            return self.terms[0].shifted_by((-self.shift[0], -self.shift[1]))
        return None

    def cauchy(self, Z, W):
        """G of the convolution at elementwise (Z, W).

        Representations that are a single atomic law up to translation are
        evaluated in closed form; genuine convolutions go through the
        marginal solves.
        """
        direct = self._direct_atomic()
        if direct is not None:
            from .transforms import cauchy2d

            return cauchy2d(direct, Z, W)
        scalar = np.ndim(Z) == 0 and np.ndim(W) == 0
        Z = np.atleast_1d(np.asarray(Z, dtype=complex))
        W = np.atleast_1d(np.asarray(W, dtype=complex))
        if Z.shape != W.shape:
            Z, W = np.broadcast_arrays(Z, W)
        flatZ, flatW = Z.ravel(), W.ravel()
        z1, w2, guesses = self._marginal_solves(flatZ, flatW)
        out = np.empty_like(flatZ)
        for i in range(len(flatZ)):
            g_i = [
                (None if a is None else a[i : i + 1], None if b is None else b[i : i + 1])
                for a, b in guesses
            ]
            out[i] = self._recover(
                z1[i : i + 1], w2[i : i + 1], flatZ[i : i + 1] - z1[i : i + 1],
                flatW[i : i + 1] - w2[i : i + 1], g_i,
            )[0, 0]
        return complex(out[0]) if scalar else out.reshape(Z.shape)

    def density(self, s_axis, t_axis, eps: float) -> GridDensity:
        """eps-smoothed joint density grid of the convolution."""
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        direct = self._direct_atomic()
        if direct is not None:
            from .transforms import cauchy2d, stieltjes2d

            return stieltjes2d(lambda z, w: cauchy2d(direct, z, w), s_axis, t_axis, eps)
        s_axis = np.asarray(s_axis, dtype=float)
        t_axis = np.asarray(t_axis, dtype=float)
        Z = s_axis + 1j * eps
        W = t_axis + 1j * eps
        z1, w2, guesses = self._marginal_solves(Z, W)
        Phi1 = Z - z1
        Phi2 = W - w2
        g_plus = self._recover(z1, w2, Phi1, Phi2, guesses)
        # lower w-half-plane values by reflection: F and phi commute with conj
        conj_guesses = [(a, None if b is None else np.conj(b)) for a, b in guesses]
        g_minus = self._recover(z1, np.conj(w2), Phi1, np.conj(Phi2), conj_guesses)
        return GridDensity(s_axis, t_axis, inversion_values(g_plus, g_minus), eps)


def bi_free_convolve(items: Sequence, shift: Vec2 = (0.0, 0.0)) -> BiConvRep:
    """Representation of the bi-free convolution of the items, plus a shift.

    Items are :class:`PlanarMeasure` or characteristic triplets; the working
    cone is the intersection (max height) of the per-item cones.  Point
    masses are the units of the operation up to translation and are folded
    into the shift, which keeps single-measure representations on the exact
    closed-form recovery path.
    """
    items = tuple(items)
    if not items:
        raise ValueError("need at least one item to convolve")
    s1, s2 = float(shift[0]), float(shift[1])
    terms = []
    for it in items:
        if isinstance(it, PlanarMeasure):
            if len(it) == 1:
                s1 += float(it.points[0, 0])
                s2 += float(it.points[0, 1])
            else:
                terms.append(it)
        elif _is_triplet(it):
            terms.append(it)
        else:
            raise TypeError(f"cannot convolve object of type {type(it).__name__}")
    cone = TruncatedCone(1.0, 1.0)
    for it in terms:
        cone = cone.intersect(_term_cone(it))
    return BiConvRep(tuple(terms), (s1, s2), cone)
