"""Cross-module invariants checked by simulation or on grids."""

import math

import numpy as np
import pytest
from scipy import special

from fbm_lab.bounds import (
    concentration_envelope,
    moment_to_expmoment_bound,
    occupation_envelope,
    psi_big,
    psi_discrete,
)
from fbm_lab.diagnostics import GProcessSpec, simulate_g_paths, sup_bm_moment, sup_bm_samples, sup_bm_tail
from fbm_lab.kernel import KernelSpec
from fbm_lab.sampler import RngStream, TimeGrid, sample_batch
from fbm_lab.sde import DriftModel, SdeSpec, integrate_batch


def _gauss_abs_moment(p, var=1.0):
    return var ** (p / 2) * 2 ** (p / 2) * special.gamma((p + 1) / 2) / math.sqrt(math.pi)


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_self_similarity_and_stationary_increments(h):
    grid = TimeGrid.from_step(1 / 16, 32)
    paths = sample_batch("cholesky", KernelSpec.volterra(h), grid, 1, 5, range(20000))[:, :, 0]
    t = grid.times
    # Var(B_t) / t^{2H} is flat in t
    for j in (4, 16, 32):
        ratio = paths[:, j].var() / t[j] ** (2 * h)
        assert abs(ratio - 1) < 4 * math.sqrt(2 / len(paths))
    # Var(B_t - B_s) depends on t - s only
    lag = 8
    for s in (0, 8, 24):
        v = (paths[:, s + lag] - paths[:, s]).var()
        assert abs(v / (lag / 16) ** (2 * h) - 1) < 4 * math.sqrt(2 / len(paths))


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_synchronous_coupling_contracts(eps):
    alpha0, dt, n = 1.0, 1 / 64, 256
    grid = TimeGrid.from_step(dt, n)
    noise = sample_batch("cholesky", KernelSpec.volterra(0.3), grid, 1, 9, range(4))
    drift = DriftModel.perturbed_linear(alpha0, eps)
    alpha = alpha0 - eps
    t = grid.times
    y1 = integrate_batch(SdeSpec(drift, 0.7, 2.0, KernelSpec.volterra(0.3)), dt, noise)
    y2 = integrate_batch(SdeSpec(drift, 0.7, -1.0, KernelSpec.volterra(0.3)), dt, noise)
    gap = np.abs(y1 - y2)[:, :, 0]
    # one Euler step multiplies the gap by at most 1 - alpha dt
    bound = 3.0 * (1 - alpha * dt) ** np.arange(n + 1)
    assert np.all(gap <= bound * (1 + 1e-12))
    assert np.all(bound <= 3.0 * np.exp(-alpha * t))


def test_psi_big_is_continuous_from_below_at_half():
    u = np.array([0.5, 1.0, 3.0, 10.0])
    assert np.array_equal(psi_big(0.5, u, 4), u**-2.0)
    # the rough branch is the documented convention; the smooth side tends to 2 u^-2
    np.testing.assert_allclose(psi_big(0.5 + 1e-12, u, 4), 2 * u**-2.0, rtol=1e-9)
    np.testing.assert_allclose(psi_big(0.5 - 1e-12, u, 4), u**-2.0, rtol=1e-9)


@pytest.mark.parametrize("h", [0.3, 0.7])
@pytest.mark.parametrize("n", [8, 64, 256])
def test_psi_discrete_non_increasing_in_k(h, n):
    vals = np.array([psi_discrete(h, n, k) for k in range(1, n + 1)])
    assert np.all(np.diff(vals) <= 1e-15 * vals[:-1])


@pytest.mark.parametrize("zeta", [0.25, 1.0, 3.0])
def test_expmoment_bound_dominates_gaussian(zeta):
    # E|X|^p <= C zeta^{p/2} p Gamma(p/2) holds for N(0, zeta) with the smallest such C
    c = max(_gauss_abs_moment(p) / (p * special.gamma(p / 2)) for p in range(2, 13))
    for lam in np.linspace(0.0, 3.0, 31):
        truth = math.exp(zeta * lam**2 / 2)
        assert truth <= moment_to_expmoment_bound(c, zeta, lam) * (1 + 1e-12)


def test_gaussian_moment_hypothesis_by_simulation():
    zeta = 2.0
    x = RngStream(11, 0).normals(200000) * math.sqrt(zeta)
    ratios, exact_ratios = [], []
    for p in range(2, 13):
        m = np.abs(x) ** p
        exact = _gauss_abs_moment(p, zeta)
        assert abs(m.mean() - exact) < 5 * m.std() / math.sqrt(len(x))
        scale = zeta ** (p / 2) * p * special.gamma(p / 2)
        ratios.append(m.mean() / scale)
        exact_ratios.append(exact / scale)
    # a fixed C works on p <= 12, but the ratio keeps growing with p
    assert np.all(np.diff(exact_ratios) > 0)
    assert max(ratios) < max(exact_ratios) * 1.1


@pytest.mark.parametrize("r", [0.0, 0.5, 2.0])
def test_envelopes_at_zero_and_in_range(r):
    for env in (concentration_envelope, occupation_envelope):
        e = env(0.3, 64, 1.0, 0.5, r)
        assert 0 < e <= 1
        if r == 0:
            assert e == 1.0


def test_sup_tail_monotone_on_fixed_samples():
    rng = RngStream(3, 0)
    samples = sup_bm_samples(2, 4000, 128, rng)
    xs = np.linspace(0, 3, 25)
    tails = sup_bm_tail(xs, 2, 4000, 128, rng, samples=samples)
    for key in ("norm", "one_sided"):
        vals = [getattr(t, key).value for t in tails]
        assert np.all(np.diff(vals) <= 0)


def test_sup_second_moment_stable_across_seeds():
    a = sup_bm_moment(2, 1, 20000, 256, RngStream(1, 0)).estimate.value
    b = sup_bm_moment(2, 1, 20000, 256, RngStream(2, 0)).estimate.value
    assert abs(a - b) / b < 0.02


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_g_moments_scale_like_sqrt_p(h):
    spec = GProcessSpec(KernelSpec.volterra(h), 2, v_grid=(0.0, 0.5, 1.0, 1.5))
    g = simulate_g_paths(spec, 6000, RngStream(21, 0), n_cells=64)
    consts = []
    for a in range(len(spec.v_grid)):
        for b in range(a + 1, len(spec.v_grid)):
            d = g[:, b] - g[:, a]
            sd = math.sqrt(np.mean(d**2))
            for p in range(2, 13):
                consts.append(np.mean(np.abs(d) ** p) ** (1 / p) / (math.sqrt(p) * sd))
    # for a centred Gaussian the constant is at most 1 for every p
    assert max(consts) < 1.1
