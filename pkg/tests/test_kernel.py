import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_lab import _backend
from fbm_lab.errors import DomainError
from fbm_lab.kernel import (
    HurstParameter,
    KernelSpec,
    Regime,
    cell_weight_matrix,
    eval_kernel,
    eval_kernel_time_derivative,
    kernel_variance,
)

mp.mp.dps = 30
hursts = st.floats(0.05, 0.95).filter(lambda h: abs(h - 0.5) > 1e-3)


def gamma_constant(h):
    return math.sqrt(2 * h * math.gamma(1.5 - h) / (math.gamma(h + 0.5) * math.gamma(2 - 2 * h)))


def kernel_mp(h, c, t, s):
    """Direct high-precision evaluation of the Volterra kernel."""
    h, t, s = mp.mpf(h), mp.mpf(t), mp.mpf(s)
    b = h - mp.mpf(1) / 2
    integral = mp.quad(lambda w: (w + s) ** (b - 1) * w**b, [0, min(s, t - s), t - s])
    return c * ((t / s) ** b * (t - s) ** b - b * s ** (-b) * integral)


@pytest.mark.parametrize("h", [0.1, 0.3, 0.45, 0.55, 0.7, 0.9])
def test_constant_matches_gamma_formula(h):
    assert KernelSpec.volterra(h).c_h == pytest.approx(gamma_constant(h), rel=1e-12)


def test_brownian_kernel_is_one():
    spec = KernelSpec.volterra(0.5)
    assert spec.c_h == 1.0
    t = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(eval_kernel(spec, t, t / 3), 1.0, rtol=0, atol=1e-15)


@pytest.mark.parametrize("h", [0.2, 0.3, 0.7, 0.85])
@pytest.mark.parametrize("t,s", [(1.0, 1e-6), (1.0, 0.2), (1.0, 0.7), (2.0, 1.999), (3.5, 0.01)])
def test_kernel_against_high_precision(h, t, s):
    spec = KernelSpec.volterra(h)
    ref = float(kernel_mp(h, spec.c_h, t, s))
    assert eval_kernel(spec, t, s) == pytest.approx(ref, rel=1e-11)


@given(h=hursts, t=st.floats(0.1, 10.0), x=st.floats(0.01, 0.99), lam=st.floats(0.1, 10.0))
def test_homogeneity(h, t, x, lam):
    spec = KernelSpec.volterra(h)
    lhs = eval_kernel(spec, lam * t, lam * x * t)
    rhs = lam ** (h - 0.5) * eval_kernel(spec, t, x * t)
    assert lhs == pytest.approx(rhs, rel=1e-11)


@given(h=hursts, t=st.floats(0.05, 20.0))
def test_variance_normalization(h, t):
    spec = KernelSpec.volterra(h)
    assert kernel_variance(spec, t) == pytest.approx(t ** (2 * h), rel=1e-8)


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_variance_liouville(h):
    spec = KernelSpec.liouville(h)
    assert kernel_variance(spec, 2.0) == pytest.approx(2.0 ** (2 * h) / (2 * h), rel=1e-8)


@pytest.mark.parametrize("h", [0.25, 0.4, 0.6, 0.8])
@pytest.mark.parametrize("u,s", [(1.0, 0.3), (2.0, 0.5), (1.0, 0.9)])
def test_time_derivative_finite_difference(h, u, s):
    spec = KernelSpec.volterra(h)
    e = 1e-5 * (u - s)
    fd = (eval_kernel(spec, u + e, s) - eval_kernel(spec, u - e, s)) / (2 * e)
    assert eval_kernel_time_derivative(spec, u, s) == pytest.approx(fd, rel=1e-7)


def test_time_derivative_sign_and_brownian_case():
    assert eval_kernel_time_derivative(KernelSpec.volterra(0.5), 1.0, 0.5) == 0.0
    assert eval_kernel_time_derivative(KernelSpec.volterra(0.3), 1.0, 0.5) < 0
    assert eval_kernel_time_derivative(KernelSpec.volterra(0.7), 1.0, 0.5) > 0


@pytest.mark.parametrize("t,s", [(1.0, 1.0), (1.0, 2.0), (1.0, 0.0), (1.0, -0.5), (1.0, 1.0 - 1e-13)])
def test_domain_errors(t, s):
    with pytest.raises(DomainError):
        eval_kernel(KernelSpec.volterra(0.3), t, s)


@pytest.mark.parametrize("h", [0.0, 1.0, -0.2, float("nan")])
def test_hurst_range(h):
    with pytest.raises(DomainError):
        HurstParameter(h)


def test_regimes():
    assert HurstParameter(0.3).regime is Regime.ROUGH
    assert HurstParameter(0.5).regime is Regime.BROWNIAN
    assert HurstParameter(0.7).regime is Regime.SMOOTH


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_cell_weights_against_high_precision(h):
    spec = KernelSpec.volterra(h)
    n, dt = 12, 0.25
    w = cell_weight_matrix(spec, n, dt)
    for j, i in [(1, 0), (5, 0), (5, 4), (12, 0), (12, 6), (12, 11)]:
        t = mp.mpf(j) * dt
        f = lambda s: kernel_mp(h, spec.c_h, t, s)
        ref = mp.quad(f, [i * dt, (i + 1) * dt]) / dt
        assert w[j - 1, i] == pytest.approx(float(ref), rel=1e-11)
    assert np.all(np.triu(w, 1) == 0)


def test_cell_weights_read_only_and_brownian():
    w = cell_weight_matrix(KernelSpec.volterra(0.5), 8, 0.1)
    assert not w.flags.writeable
    np.testing.assert_allclose(w, np.tril(np.ones((8, 8))), atol=1e-14)


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_liouville_cells_exact(h):
    w = cell_weight_matrix(KernelSpec.liouville(h), 4, 0.5)
    a = h + 0.5
    expected = ((2.0 - 1.0) ** a - 0.0) / a * 0.5**a / 0.5  # j=2, i=1: int_{0.5}^{1} (1-s)^(h-1/2) ds / dt
    assert w[1, 1] == pytest.approx(expected, rel=1e-14)


@pytest.mark.skipif(_backend.NAME != "cython", reason="compiled core not built")
@pytest.mark.parametrize("h", [0.2, 0.7])
def test_backends_agree(h):
    spec = KernelSpec.volterra(h)
    a = cell_weight_matrix(spec, 40, 0.1, backend="cython")
    b = cell_weight_matrix(spec, 40, 0.1, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


def test_backend_selection(monkeypatch):
    from fbm_lab import _fallback

    assert _backend.get_backend("python") is _fallback
    monkeypatch.setenv("FBM_LAB_BACKEND", "python")
    assert _backend.get_backend() is _fallback
