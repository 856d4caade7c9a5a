import numpy as np
import pytest

from bifree.measure import (
    Matrix2,
    Measure1D,
    PlanarMeasure,
    dirac,
    row_tail_mass,
)


def two_atom():
    return PlanarMeasure([((1.0, 1.0), 0.5), ((-1.0, -1.0), 0.5)])


class TestDirac:
    def test_origin(self):
        m = dirac((0.0, 0.0))
        assert len(m) == 1
        assert m.atoms() == [((0.0, 0.0), 1.0)]

    def test_generic_point(self):
        m = dirac((1.0, -2.0))
        assert m.atoms() == [((1.0, -2.0), 1.0)]

    def test_marginal_of_point(self):
        m = dirac((1.0, -2.0))
        assert m.marginal(1).points[0] == 1.0
        assert m.marginal(2).points[0] == -2.0


class TestMarginal:
    def test_two_atom(self):
        got = two_atom().marginal(1)
        assert got.close_to(Measure1D([(1.0, 0.5), (-1.0, 0.5)]))

    def test_point(self):
        assert dirac((3.0, 7.0)).marginal(2).close_to(Measure1D([(7.0, 1.0)]))

    def test_merging_on_projection(self):
        m = PlanarMeasure([((1, 1), 0.25), ((1, -1), 0.25), ((-1, 1), 0.25), ((-1, -1), 0.25)])
        got = m.marginal(1)
        assert got.close_to(Measure1D([(1.0, 0.5), (-1.0, 0.5)]))

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            two_atom().marginal(3)


class TestDilate:
    def test_point(self):
        assert dirac((1.0, 1.0)).dilated(2.0).close_to(dirac((2.0, 2.0)))

    def test_identity(self):
        m = two_atom()
        assert m.dilated(1.0).close_to(m)

    def test_composition(self):
        m = PlanarMeasure([((1, 0), 0.2), ((0, 1), 0.3), ((2, -1), 0.5)])
        assert m.dilated(2.0).dilated(3.0).close_to(m.dilated(6.0))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            two_atom().dilated(0.0)

    def test_preserves_weights_bit_exact(self):
        m = PlanarMeasure([((0.1, 0.2), 1 / 3), ((0.3, 0.4), 2 / 3)])
        d = m.dilated(7.0)
        assert d.weights is m.weights


class TestShiftBy:
    def test_point_to_origin(self):
        assert dirac((1.0, 1.0)).shifted_by((1.0, 1.0)).close_to(dirac((0.0, 0.0)))

    def test_zero_shift(self):
        m = two_atom()
        assert m.shifted_by((0.0, 0.0)).close_to(m)

    def test_inverse(self):
        m = two_atom()
        assert m.shifted_by((0.3, -0.7)).shifted_by((-0.3, 0.7)).close_to(m)

    def test_shifts_mean(self):
        m = two_atom()
        shifted = m.shifted_by((0.25, -0.5))
        L = 100.0  # larger than any atom norm: plain mean
        assert shifted.truncated_mean(L) == pytest.approx((-0.25, 0.5), abs=1e-15)


class TestTruncatedMean:
    def test_inside(self):
        assert dirac((0.1, 0.2)).truncated_mean(1.0) == pytest.approx((0.1, 0.2))

    def test_outside(self):
        assert dirac((5.0, 5.0)).truncated_mean(1.0) == (0.0, 0.0)

    def test_symmetric(self):
        m = PlanarMeasure([((0.5, 0.0), 0.5), ((-0.5, 0.0), 0.5)])
        assert m.truncated_mean(1.0) == pytest.approx((0.0, 0.0), abs=0)

    def test_boundary_is_open(self):
        # the atom exactly on the sphere does not count
        assert dirac((1.0, 0.0)).truncated_mean(1.0) == (0.0, 0.0)


class TestIntegrate:
    def test_product(self):
        assert dirac((1.0, 2.0)).integrate(lambda s, t: s * t) == pytest.approx(2.0)

    def test_normalization(self):
        m = PlanarMeasure([((1, 1), 0.25), ((2, 2), 0.75)])
        assert m.integrate(lambda s, t: 1.0) == pytest.approx(1.0)

    def test_rational_kernel(self):
        got = two_atom().integrate(lambda s, t: s * t / ((1 + s * s) * (1 + t * t)))
        assert got == pytest.approx(0.25, abs=1e-15)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            dirac((1.0, 0.0)).integrate(lambda s, t: float("inf"))


class TestInfinitesimalRow:
    def test_point_at_origin(self):
        assert row_tail_mass([dirac((0.0, 0.0))], 0.1) == 0.0

    def test_point_outside(self):
        assert row_tail_mass([dirac((1.0, 0.0))], 0.5) == 1.0

    def test_mixture(self):
        n = 100
        m = PlanarMeasure([((0.0, 0.0), 1 - 1 / n), ((1.0, 1.0), 1 / n)])
        assert row_tail_mass([m], 0.5) == pytest.approx(0.01)

    def test_empty_row(self):
        with pytest.raises(ValueError):
            row_tail_mass([], 0.1)


class TestInvariants:
    def test_weight_normalization_enforced(self):
        with pytest.raises(ValueError):
            PlanarMeasure([((0, 0), 0.5), ((1, 1), 0.4)])
        with pytest.raises(ValueError):
            PlanarMeasure([((0, 0), 1.0), ((1, 1), -0.1)])

    def test_dedup_on_construction(self):
        m = PlanarMeasure([((1.0, 1.0), 0.5), ((1.0, 1.0 + 1e-14), 0.5)])
        assert len(m) == 1
        assert m.weights[0] == 1.0

    def test_marginal_commutes_with_dilate(self):
        m = PlanarMeasure([((1, 2), 0.2), ((-0.5, 0.1), 0.5), ((3, -3), 0.3)])
        lam = 2.5
        a = m.dilated(lam).marginal(1)
        b = m.marginal(1).dilated(lam)
        assert a.close_to(b)

    def test_shift_then_mean(self):
        m = PlanarMeasure([((1, 2), 0.25), ((-2, 0.5), 0.75)])
        v = (0.4, -1.1)
        L = 50.0
        base = np.array(m.truncated_mean(L))
        moved = np.array(m.shifted_by(v).truncated_mean(L))
        assert np.allclose(moved, base - np.array(v), atol=1e-15)


class TestMatrix2:
    def test_psd(self):
        assert Matrix2(1.0, 1.0, 1.0).is_psd()
        assert not Matrix2(1.0, 1.5, 1.0).is_psd()

    def test_kernel_vector(self):
        u = Matrix2(1.0, 1.0, 1.0).kernel_vector()
        assert abs(u[0] + u[1]) < 1e-12  # direction (1, -1)/sqrt(2)
        assert Matrix2(1.0, 0.0, 1.0).kernel_vector() is None
        assert Matrix2(0.0, 0.0, 0.0).kernel_vector() == (1.0, 0.0)

    def test_quad_form(self):
        A = Matrix2(1.0, 1.0, 1.0)
        assert A.quad_form((1.0, 1.0)) == pytest.approx(4.0)
