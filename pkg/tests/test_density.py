import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semitrans.backfit import AdditiveFit, Bandwidths, smooth_backfit
from semitrans.dataset import Dataset
from semitrans.density import DENSITY_FLOOR, kde, residuals, silverman_g
from semitrans.errors import DegenerateData
from semitrans.kernels import GAUSSIAN, QUARTIC
from semitrans.simulation import BOXCOX, DgpSpec, generate


def kde_loop(eps, g, e, kernel=QUARTIC):
    out = []
    for ej in e:
        s = 0.0
        for ei in eps:
            s += float(kernel((ej - ei) / g))
        out.append(s / (len(eps) * g))
    return np.array(out)


class TestResiduals:
    def test_interpolating_fit(self):
        x = np.array([0.1, 0.4, 0.2, 0.9])
        y = np.array([1.5, 2.0, 3.0, 0.7])
        z = BOXCOX.forward(0.5, y)
        order = np.argsort(x)
        fit = AdditiveFit(0.0, x[order][None, :], z[order][None, :])
        res = residuals(Dataset(y, x[:, None]), "boxcox", 0.5, fit)
        assert np.all(res.eps == 0.0)
        assert len(res) == 4

    def test_constant_fit(self):
        e = np.array([0.3, -0.2, 0.1])
        c0 = 2.0
        y = BOXCOX.inverse(1.0, c0 + e)
        fit = AdditiveFit(c0, np.array([[0.0, 1.0]]), np.zeros((1, 2)))
        res = residuals(Dataset(y, np.array([[0.1], [0.5], [0.9]])), "boxcox", 1.0, fit)
        assert np.allclose(res.eps, e, atol=1e-14)

    def test_independent_of_covariates_at_truth(self):
        data = generate(DgpSpec(1, 0.5, 400, seed=9))
        z = BOXCOX.forward(0.5, data.y)
        fit = smooth_backfit(data.x, z, Bandwidths.from_h0(0.3, 400, 2))
        eps = residuals(data, "boxcox", 0.5, fit).eps
        for a in range(2):
            assert abs(np.corrcoef(eps, data.x[:, a])[0, 1]) <= 0.1


class TestSilverman:
    def test_standard_normal(self):
        eps = np.random.default_rng(0).standard_normal(1000)
        assert 0.15 <= silverman_g(eps) <= 0.35

    def test_scale_equivariance(self):
        eps = np.random.default_rng(1).standard_normal(50)
        assert silverman_g(4.0 * eps) == 4.0 * silverman_g(eps)
        assert silverman_g(3.7 * eps) == pytest.approx(3.7 * silverman_g(eps), rel=1e-14)

    def test_two_points(self):
        expected = 1.06 * min(np.sqrt(0.5), 0.5 / 1.34) * 2 ** (-0.2)
        assert silverman_g([0.0, 1.0]) == pytest.approx(expected, rel=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateData):
            silverman_g([1.0, 1.0, 1.0])
        with pytest.raises(DegenerateData):
            silverman_g([2.0])

    def test_zero_iqr_falls_back_to_sd(self):
        eps = np.array([0.0] * 9 + [5.0])
        expected = 1.06 * np.std(eps, ddof=1) * 10 ** (-0.2)
        assert silverman_g(eps) == pytest.approx(expected)


class TestKde:
    def test_examples(self):
        assert kde([0.0, 0.0], 1.0, 0.0) == 15 / 16
        assert kde([-1.0, 1.0], 1.0, 0.0) == 0.0

    @pytest.mark.parametrize("kernel", [QUARTIC, GAUSSIAN], ids=["quartic", "gaussian"])
    def test_double_loop(self, kernel):
        r = np.random.default_rng(5)
        eps = r.standard_normal(5)
        e = np.linspace(-2, 2, 7)
        assert np.max(np.abs(kde(eps, 0.7, e, kernel) - kde_loop(eps, 0.7, e, kernel))) <= 1e-12

    def test_floor(self):
        f = kde([0.0, 0.1], 0.5, np.array([5.0, 0.0]), floor_for_log=True)
        assert f[0] == DENSITY_FLOOR
        assert f[1] > DENSITY_FLOOR

    def test_leave_one_out(self):
        eps = np.array([0.0, 0.3, 1.0, 1.2])
        f = kde(eps, 0.5, eps, leave_one_out=True)
        for i in range(4):
            others = np.delete(eps, i)
            assert f[i] == pytest.approx(kde_loop(others, 0.5, [eps[i]])[0], rel=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**31), e=st.floats(-5, 5))
    def test_nonnegative(self, seed, e):
        eps = np.random.default_rng(seed).standard_normal(20)
        assert kde(eps, 0.4, e) >= 0.0

    @settings(max_examples=50, deadline=None)
    @given(k=st.lists(st.integers(-4096, 4096), min_size=3, max_size=30),
           c=st.integers(-4096, 4096), j=st.integers(-4096, 4096))
    def test_location_equivariance(self, k, c, j):
        # dyadic values keep every shift exact in floating point
        eps = np.array(k) / 1024.0
        shift, e = c / 1024.0, j / 1024.0
        assert kde(eps + shift, 0.5, e + shift) == kde(eps, 0.5, e)

    @pytest.mark.parametrize("seed", range(5))
    def test_normalization(self, seed):
        eps = np.random.default_rng(seed).standard_normal(100)
        g = silverman_g(eps)
        grid = np.linspace(eps.min() - g, eps.max() + g, 20001)
        assert np.trapezoid(kde(eps, g, grid), grid) == pytest.approx(1.0, abs=1e-3)
