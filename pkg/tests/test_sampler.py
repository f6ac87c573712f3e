import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbm_lab.errors import DomainError
from fbm_lab.kernel import KernelSpec
from fbm_lab.sampler import (
    CHOLESKY_MAX_STEPS,
    RngStream,
    SamplePath,
    TimeGrid,
    cholesky_factor,
    fbm_covariance,
    sample_batch,
    sample_bm,
    sample_fbm_cholesky,
    sample_fbm_volterra,
)


def test_grid_basics():
    g = TimeGrid(2.0, 8)
    assert g.dt == 0.25
    np.testing.assert_allclose(g.times, np.arange(9) * 0.25)
    assert TimeGrid.from_step(0.1, 10).t_max == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, 2.5), (float("inf"), 3)])
def test_grid_rejects(args):
    with pytest.raises(DomainError):
        TimeGrid(*args)


def test_streams_reproducible_and_distinct():
    a = RngStream(7, 3).normals(100)
    np.testing.assert_array_equal(a, RngStream(7, 3).normals(100))
    assert not np.array_equal(a, RngStream(7, 4).normals(100))
    assert not np.array_equal(a, RngStream(8, 3).normals(100))


def test_stream_prefix_stable():
    # a longer draw starts with the shorter one
    a = RngStream(1, 2).normals(10)
    b = RngStream(1, 2).normals(50)
    np.testing.assert_array_equal(a, b[:10])


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_stream_rejects(seed):
    with pytest.raises(DomainError):
        RngStream(seed, 0)


def test_path_validation(tmp_path):
    g = TimeGrid(1.0, 4)
    with pytest.raises(DomainError):
        SamplePath(g, np.zeros(4))
    with pytest.raises(DomainError):
        SamplePath(g, np.array([0, 1, np.nan, 0, 0.0]))
    p = SamplePath(g, np.arange(10.0).reshape(5, 2) / 3)
    assert not p.values.flags.writeable
    f = tmp_path / "p.csv"
    p.to_csv(f)
    q = SamplePath.from_csv(f)
    np.testing.assert_array_equal(q.values, p.values)
    assert q.grid == g
    assert f.read_text().splitlines()[0] == "t,comp_0,comp_1"


def test_batch_rows_match_single_paths():
    g = TimeGrid(1.0, 16)
    spec = KernelSpec.volterra(0.3)
    batch = sample_batch("cholesky", spec, g, 2, 5, [10, 11])
    np.testing.assert_array_equal(batch[1], sample_fbm_cholesky(spec, g, 2, RngStream(5, 11)).values)
    batch = sample_batch("volterra", spec, g, 1, 5, [3])
    np.testing.assert_array_equal(batch[0], sample_fbm_volterra(spec, g, 1, RngStream(5, 3))[1].values)
    batch = sample_batch("bm", None, g, 1, 5, [3])
    np.testing.assert_array_equal(batch[0], sample_bm(g, 1, RngStream(5, 3)).values)
    with pytest.raises(DomainError):
        sample_batch("spectral", spec, g, 1, 5, [0])


def test_volterra_driver_coupling():
    g = TimeGrid(1.0, 32)
    w, b = sample_fbm_volterra(KernelSpec.volterra(0.5), g, 1, RngStream(0, 0))
    np.testing.assert_allclose(w.values, b.values, atol=1e-14)
    np.testing.assert_array_equal(w.values, sample_bm(g, 1, RngStream(0, 0)).values)


@given(h=st.floats(0.05, 0.95), n=st.integers(1, 64))
def test_cholesky_reproduces_covariance(h, n):
    g = TimeGrid(1.0, n)
    fac = cholesky_factor(h, g)
    cov = fbm_covariance(h, g.times[1:])
    np.testing.assert_allclose(fac @ fac.T, cov, atol=1e-10)


def test_cholesky_step_limit():
    with pytest.raises(DomainError):
        cholesky_factor(0.3, TimeGrid(1.0, CHOLESKY_MAX_STEPS + 1))
    with pytest.raises(DomainError):
        sample_fbm_cholesky(KernelSpec.liouville(0.3), TimeGrid(1.0, 4), 1, RngStream(0, 0))


@pytest.mark.parametrize("h", [0.25, 0.75])
def test_volterra_variance(h):
    # exact covariance of the discretization, from the cell weights
    from fbm_lab.kernel import cell_weight_matrix

    g = TimeGrid(1.0, 64)
    w = cell_weight_matrix(KernelSpec.volterra(h), g.n_steps, g.dt)
    disc = (w**2).sum(axis=1) * g.dt
    np.testing.assert_allclose(disc[-1], 1.0, rtol=0.03)
    paths = sample_batch("volterra", KernelSpec.volterra(h), g, 1, 1, range(4000))
    emp = paths[:, -1, 0].var()
    assert abs(emp - disc[-1]) < 5 * disc[-1] * np.sqrt(2 / 4000)
