import numpy as np
import pytest

from fbm_lab.errors import DomainError, IntegrationError
from fbm_lab.kernel import KernelSpec
from fbm_lab.sampler import RngStream, SamplePath, TimeGrid, sample_batch, sample_fbm_cholesky
from fbm_lab.sde import DriftModel, SdeSpec, integrate, integrate_batch, ode_reference, validate_drift


def test_zero_drift_is_shifted_noise():
    g = TimeGrid(1.0, 32)
    b = sample_fbm_cholesky(KernelSpec.volterra(0.3), g, 2, RngStream(1, 0))
    sigma = np.array([[1.0, 0.5], [0.0, 2.0]])
    spec = SdeSpec(DriftModel.linear(np.zeros((2, 2)), strict=False), sigma, np.array([1.0, -1.0]),
                   KernelSpec.volterra(0.3))
    y = integrate(spec, b)
    np.testing.assert_allclose(y.values, np.array([1.0, -1.0]) + b.values @ sigma.T, atol=1e-14)


def test_euler_recursion_by_hand():
    g = TimeGrid(1.0, 8)
    b = SamplePath(g, np.linspace(0, 1, 9) ** 2)
    drift = DriftModel.perturbed_linear(1.0, 0.3)
    spec = SdeSpec(drift, 0.7, 0.5, KernelSpec.volterra(0.5))
    y = [0.5]
    for j in range(8):
        y.append(y[-1] + g.dt * drift(np.array([y[-1]]))[0] + 0.7 * (b.values[j + 1, 0] - b.values[j, 0]))
    np.testing.assert_allclose(integrate(spec, b).values[:, 0], y, rtol=1e-13)


def test_linear_euler_by_hand():
    a = np.array([[1.0, 0.2], [-0.1, 0.5]])
    c = np.array([0.3, -0.2])
    drift = DriftModel.linear(a, c)
    g = TimeGrid(2.0, 20)
    fbm = sample_batch("bm", None, g, 2, 3, [0, 1])
    spec = SdeSpec(drift, 1.0, np.zeros(2), KernelSpec.volterra(0.5))
    out = integrate_batch(spec, g.dt, fbm)
    for r in range(2):
        y = np.zeros(2)
        for j in range(20):
            y = y + g.dt * (-a @ y + c) + fbm[r, j + 1] - fbm[r, j]
        np.testing.assert_allclose(out[r, -1], y, rtol=1e-12)


def test_noise_free_matches_ode():
    g = TimeGrid(3.0, 3000)
    drift = DriftModel.linear(np.array([[0.8]]))
    spec = SdeSpec(drift, 0.0, 2.0, KernelSpec.volterra(0.3))
    y = integrate(spec, SamplePath(g, np.zeros(3001)))
    np.testing.assert_allclose(y.values[-1, 0], 2.0 * np.exp(-2.4), rtol=2e-3)
    ref = ode_reference(drift, [2.0], TimeGrid(3.0, 30), refine=100)
    np.testing.assert_allclose(y.values[::100, 0], ref[:, 0], rtol=1e-12)


def test_ou_stationary_variance():
    # Brownian OU with Euler in drift has stationary variance dt/(1-(1-a dt)^2)
    a, dt = 1.0, 0.05
    g = TimeGrid.from_step(dt, 400)
    spec = SdeSpec(DriftModel.linear([[a]]), 1.0, 0.0, KernelSpec.volterra(0.5))
    y = integrate_batch(spec, dt, sample_batch("bm", None, g, 1, 11, range(4000)))
    target = dt / (1 - (1 - a * dt) ** 2)
    assert y[:, -1, 0].var() == pytest.approx(target, rel=0.1)


def test_blow_up_reports_step():
    drift = DriftModel.custom(lambda y: y**3, alpha=1.0, lip=1.0)
    spec = SdeSpec(drift, 0.0, 10.0, KernelSpec.volterra(0.5))
    g = TimeGrid(10.0, 50)
    with pytest.raises(IntegrationError) as info:
        integrate(spec, SamplePath(g, np.zeros(51)))
    assert 0 < info.value.step <= 50


def test_spec_validation():
    drift = DriftModel.linear(np.eye(2))
    with pytest.raises(DomainError):
        SdeSpec(drift, np.eye(3), np.zeros(2), KernelSpec.volterra(0.3))
    with pytest.raises(DomainError):
        SdeSpec(drift, np.eye(2), np.zeros(3), KernelSpec.volterra(0.3))
    with pytest.raises(DomainError):
        DriftModel.linear(-np.eye(2))
    with pytest.raises(DomainError):
        DriftModel.perturbed_linear(1.0, 1.0)
    with pytest.raises(DomainError):
        DriftModel.custom(np.negative, alpha=0.0, lip=1.0)
    spec = SdeSpec(drift, np.eye(2), np.zeros(2), KernelSpec.volterra(0.3))
    with pytest.raises(DomainError):
        integrate(spec, SamplePath(TimeGrid(1.0, 2), np.zeros(3)))


def test_linear_constants():
    a = np.array([[2.0, 1.0], [0.0, 1.0]])
    m = DriftModel.linear(a)
    assert m.alpha == pytest.approx(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
    assert m.lip == pytest.approx(np.linalg.norm(a, 2))


def test_validate_drift():
    rng = RngStream(0, 0)
    good = validate_drift(DriftModel.perturbed_linear(1.0, 0.4, dim=2), 2000, 5.0, rng)
    assert good.passed
    assert good.one_sided_max <= -0.6 + 1e-9
    liar = DriftModel.custom(lambda y: -0.5 * y, alpha=1.0, lip=1.0)
    report = validate_drift(liar, 200, 1.0, rng)
    assert not report.one_sided_ok and report.lipschitz_ok
