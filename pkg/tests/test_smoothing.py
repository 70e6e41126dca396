import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semitrans.backfit import (
    AdditiveFit,
    Bandwidths,
    backfit_direct,
    make_design,
    predict,
    smooth_backfit,
)
from semitrans.errors import ConvergenceWarning, EmptyData, SingularDensity
from semitrans.kernels import GAUSSIAN, QUARTIC, KernelSpec, nw_1d
from semitrans.simulation import BOXCOX, DgpSpec, generate


def additive_truth(X):
    m1 = 5 * X[:, 0] ** 2
    m2 = 2 * np.sin(np.pi * X[:, 1])
    return m1, m2


def centered_truth(grid, X, a):
    f = (lambda t: 5 * t**2) if a == 0 else (lambda t: 2 * np.sin(np.pi * t))
    return f(grid) - f(X[:, a]).mean()


def interior_sup_error(fit, X):
    errs = []
    for a in range(2):
        g = fit.grids[a]
        lo, hi = np.quantile(g, [0.1, 0.9])
        inner = (g >= lo) & (g <= hi)
        errs.append(np.max(np.abs(fit.values[a][inner] - centered_truth(g, X, a)[inner])))
    return errs


class TestKernel:
    @pytest.mark.parametrize("kernel", [QUARTIC, GAUSSIAN], ids=["quartic", "gaussian"])
    def test_integrates_to_one(self, kernel):
        u = np.linspace(-12, 12, 480001)
        assert np.trapezoid(kernel(u), u) == pytest.approx(1.0, abs=1e-8)

    @given(st.floats(-3, 3))
    def test_symmetric_nonnegative(self, u):
        for k in (QUARTIC, GAUSSIAN):
            assert k(u) >= 0
            assert k(u) == k(-u)

    def test_quartic_values(self):
        assert QUARTIC(0.0) == 15 / 16
        assert QUARTIC(1.0) == 0.0
        assert QUARTIC(0.5) == pytest.approx(15 / 16 * 0.75**2)

    def test_tokens(self):
        assert KernelSpec.from_token("Quartic") is not None
        assert KernelSpec.from_token("gaussian") == GAUSSIAN
        with pytest.raises(ValueError):
            KernelSpec.from_token("epanechnikov")


class TestNadarayaWatson:
    def test_single_point(self):
        assert nw_1d([0.0], [3.0], 1.0, 0.0) == 3.0

    def test_three_point_oracle(self):
        xs, zs, h = np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 2.0]), 1.5
        k = lambda u: 15 / 16 * (1 - u * u) ** 2 if abs(u) < 1 else 0.0
        w = [k((0 - x) / h) for x in xs]
        expected = sum(wi * zi for wi, zi in zip(w, zs)) / sum(w)
        assert nw_1d(xs, zs, h, 0.0) == pytest.approx(expected, rel=1e-15)
        # an off-centre point exercises unequal weights
        w = [k((0.3 - x) / h) for x in xs]
        expected = sum(wi * zi for wi, zi in zip(w, zs)) / sum(w)
        assert nw_1d(xs, zs, h, 0.3) == pytest.approx(expected, rel=1e-15)

    def test_empty_window_uses_nearest(self):
        assert nw_1d([0.0, 1.0], [5.0, 7.0], 0.1, 0.8) == 7.0

    def test_no_data(self):
        with pytest.raises(EmptyData):
            nw_1d([], [], 1.0, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(-100, 100), x0=st.floats(-0.4, 0.4), seed=st.integers(0, 2**16))
    def test_constant_reproduced(self, c, x0, seed):
        xs = np.random.default_rng(seed).uniform(-0.5, 0.5, 30)
        assert nw_1d(xs, np.full(30, c), 0.5, x0) == pytest.approx(c, rel=1e-12, abs=1e-12)


class TestBandwidths:
    def test_scaling(self):
        h = Bandwidths.from_h0(0.3, 100, 2)
        assert h.h == pytest.approx((0.3 * 100 ** -0.2,) * 2)
        assert h.h0 == (0.3, 0.3)

    def test_positive(self):
        with pytest.raises(ValueError):
            Bandwidths((0.1, 0.0))


class TestBackfit:
    def test_constant_response(self, rng):
        X = rng.uniform(-0.5, 0.5, (80, 2))
        fit = smooth_backfit(X, np.full(80, 2.5), Bandwidths.from_h0(0.4, 80, 2))
        assert fit.c0 == pytest.approx(2.5)
        assert np.max(np.abs(fit.values)) < 1e-8
        assert np.allclose(fit.predict(X), 2.5, atol=1e-8)

    def test_one_dimension_is_nadaraya_watson(self, rng):
        x = rng.uniform(-0.5, 0.5, 60)
        z = np.sin(3 * x) + 0.1 * rng.standard_normal(60)
        h = Bandwidths((0.25,))
        fit = smooth_backfit(x[:, None], z, h, tol=1e-12)
        g = fit.grids[0]
        nw = np.array([nw_1d(x, z, 0.25, t) for t in g])
        nw -= np.mean(np.interp(x, g, nw))
        assert np.max(np.abs(fit.values[0] - nw)) < 1e-10

    def test_empirical_centering(self, model1_data):
        z = BOXCOX.forward(0.5, model1_data.y)
        fit = smooth_backfit(model1_data.x, z, Bandwidths.from_h0(0.3, 100, 2))
        for a in range(2):
            assert abs(np.mean(fit.component(a, model1_data.x[:, a]))) < 1e-8

    def test_converges_on_simulation_design(self):
        for n in (100, 400, 1000):
            data = generate(DgpSpec(1, 0.5, n, seed=n))
            z = BOXCOX.forward(0.5, data.y)
            with warnings.catch_warnings():
                warnings.simplefilter("error", ConvergenceWarning)
                fit = smooth_backfit(data.x, z, Bandwidths.from_h0(0.3, n, 2))
            assert fit.converged and fit.iterations <= 50
            assert np.isfinite(fit.update_norm)

    def test_direct_solution_matches_iteration(self, model1_data):
        z = BOXCOX.forward(0.5, model1_data.y)
        design = make_design(model1_data.x, Bandwidths.from_h0(0.3, 100, 2))
        fit = smooth_backfit(model1_data.x, z, design.bandwidths, tol=1e-12, max_iter=500)
        c0, m = backfit_direct(design, z)
        assert c0[0] == pytest.approx(fit.c0)
        assert np.max(np.abs(m[:, :, 0] - fit.values)) < 1e-9

    def test_max_iter_warning(self, model1_data):
        z = BOXCOX.forward(0.5, model1_data.y)
        with pytest.warns(ConvergenceWarning):
            fit = smooth_backfit(model1_data.x, z, Bandwidths.from_h0(0.3, 100, 2), max_iter=1)
        assert not fit.converged
        assert fit.diagnostics()["iterations"] == 1

    def test_singular_density_warning(self):
        # a gap wider than the kernel window leaves grid points without mass
        x1 = np.concatenate([np.linspace(-0.5, -0.3, 20), np.linspace(0.3, 0.5, 20)])
        x2 = np.linspace(-0.5, 0.5, 40)
        X = np.column_stack([x1, x2])
        with pytest.warns(SingularDensity):
            fit = smooth_backfit(X, x1 + x2, Bandwidths((0.05, 0.2)), max_iter=500)
        assert fit.singular_points > 0
        assert np.all(np.isfinite(fit.values))

    def test_additive_recovery(self):
        errs = {}
        for n in (500, 2000):
            X = np.random.default_rng(5).uniform(-0.5, 0.5, (n, 2))
            z = sum(additive_truth(X))
            fit = smooth_backfit(X, z, Bandwidths.from_h0(0.3, n, 2))
            errs[n] = interior_sup_error(fit, X)
        assert max(errs[500]) <= 0.15
        assert all(e2 < e1 for e1, e2 in zip(errs[500], errs[2000]))


class TestPredict:
    def make_fit(self):
        grids = np.array([[0.0, 1.0, 2.0], [0.0, 0.5, 1.0]])
        values = np.array([[1.0, 3.0, -1.0], [0.5, 0.0, 2.0]])
        return AdditiveFit(0.25, grids, values)

    def test_grid_points(self):
        fit = self.make_fit()
        assert predict(fit, [1.0, 1.0]) == pytest.approx(0.25 + 3.0 + 2.0)

    def test_midpoint(self):
        fit = self.make_fit()
        assert predict(fit, [0.5, 0.25]) == pytest.approx(0.25 + 2.0 + 0.25)

    def test_clamped(self):
        fit = self.make_fit()
        assert predict(fit, [-5.0, 9.0]) == pytest.approx(0.25 + 1.0 + 2.0)

    def test_zero_components(self):
        fit = AdditiveFit(4.0, np.array([[0.0, 1.0]]), np.zeros((1, 2)))
        assert np.all(fit.predict(np.array([[0.2], [3.0]])) == 4.0)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            self.make_fit().predict([1.0, 2.0, 3.0])
