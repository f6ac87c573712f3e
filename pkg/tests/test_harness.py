import math

import numpy as np
import pytest

from fbm_lab.bounds import occupation_envelope
from fbm_lab.config import build_config
from fbm_lab.errors import CalibrationError, ConfigError, DomainError
from fbm_lab.harness import (
    TailRow,
    calibrate_constant,
    check_envelope_domination,
    choose_method,
    fit_scaling_exponent,
    gaussian_oracle_variance,
    mgf_quadratic_coefficient,
    run_occupation,
    run_occupation_discrete,
    simulate_occupation,
    stream_blocks,
)
from fbm_lab.parallel import set_threads
from fbm_lab.stats import McEstimate


def small(**kw):
    raw = {"hurst": 0.3, "dt": 0.25, "delta": 1.0, "n_list": [4, 16], "t_list": [4.0],
           "replicas": 600, "chunk": 100, "r_list": [0.0, 0.5, 1.0, 2.0]}
    raw.update(kw)
    return build_config(raw)


def test_choose_method():
    assert choose_method(small(), 100) == "cholesky"
    assert choose_method(small(), 10_000) == "volterra"
    assert choose_method(small(hurst=0.5), 100) == "bm"
    assert choose_method(small(kernel={"family": "liouville"}), 100) == "volterra"
    with pytest.raises(ConfigError):
        choose_method(small(sampler="bm"), 100)
    with pytest.raises(ConfigError):
        choose_method(small(sampler="cholesky", kernel={"family": "liouville"}), 100)


def test_blocks_are_disjoint():
    b = stream_blocks(small(stream_base=10))
    assert b == {"tail": (10, 610), "centering": (610, 1210)}


def test_chunking_changes_rounding_only():
    a = simulate_occupation(small(chunk=7), 0, 50)
    b = simulate_occupation(small(chunk=256), 0, 50)
    np.testing.assert_allclose(a.discrete, b.discrete, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.continuous, b.continuous, rtol=1e-12, atol=1e-14)


def test_threads_give_identical_bits():
    try:
        set_threads(1)
        a = simulate_occupation(small(chunk=16), 0, 80)
        set_threads(3)
        b = simulate_occupation(small(chunk=16), 0, 80)
    finally:
        set_threads(None)
    assert a.discrete.tobytes() == b.discrete.tobytes()
    assert a.continuous.tobytes() == b.continuous.tobytes()


def test_occupation_tables():
    out = run_occupation(small())
    assert set(out) == {"discrete", "continuous"}
    disc = out["discrete"]
    assert disc.tail_streams == (0, 600) and disc.centering_streams == (600, 1200)
    for hz in disc.horizons:
        rows = [r for r in disc.rows if r.horizon == hz]
        est = [r.estimate.value for r in rows]
        assert est == sorted(est, reverse=True)
        # r is given in oracle standard deviations
        assert rows[2].r == pytest.approx(rows[2].oracle_sd)
    # centered statistics have the oracle variance
    for i, n in enumerate(disc.horizons):
        var = gaussian_oracle_variance(small(), n=int(n))
        emp = disc.values[:, i].var(ddof=1)
        assert abs(emp / var - 1) < 5 * math.sqrt(2 / 600)


def test_absolute_units_without_oracle():
    cfg = small(drift={"kind": "perturbed_linear", "alpha0": 1.0, "eps": 0.5}, r_units="absolute", t_list=[])
    tab = run_occupation_discrete(cfg.replace(replicas=100))
    assert all(r.oracle_sd is None for r in tab.rows)
    with pytest.raises(ConfigError):
        run_occupation(cfg.replace(r_units="oracle_sd", replicas=10))


def _row(r, n, p, censored=False):
    est = McEstimate(p, 0.0, 1000, 0, (0, 1000), censored, 0.003 if censored else None)
    return TailRow(0.3, "discrete", float(n), 1.0, r, r, est, 1.0)


def test_calibrate_constant_is_tight():
    rows = [_row(0.0, 16, 0.5), _row(0.2, 16, 0.3), _row(0.5, 16, 0.01), _row(0.8, 16, 0.0, censored=True)]
    c = calibrate_constant(rows, 0.3, 1.0)
    env = [occupation_envelope(0.3, 16, 1.0, c, r.r) for r in rows[1:]]
    probs = [0.3, 0.01, 0.003]
    assert all(e >= p * (1 - 1e-12) for e, p in zip(env, probs))
    assert any(math.isclose(e, p, rel_tol=1e-12) for e, p in zip(env, probs))
    with pytest.raises(CalibrationError):
        calibrate_constant([_row(0.0, 16, 0.5)], 0.3, 1.0)
    with pytest.raises(CalibrationError):
        calibrate_constant([_row(0.5, 16, 1.0)], 0.3, 1.0)


def test_mgf_coefficient_gaussian():
    x = np.random.default_rng(0).normal(size=200_000)
    c, ess = mgf_quadratic_coefficient(x / 10, 10, 0.5)
    # log E exp(l X) / l^2 = sd^2 / 2 for a centered Gaussian
    assert c == pytest.approx(0.5, rel=0.02)
    assert ess > 1000


def test_exponent_report_oracle_only():
    cfg = small(hurst=0.7, n_list=[64, 256, 1024, 4096], t_list=[], lambda_list=[], drift={"matrix": [[1.0]]})
    rep = fit_scaling_exponent(cfg)
    (row,) = rep.rows
    assert row.quantity == "oracle_variance_discrete"
    assert row.slope == pytest.approx(row.target, abs=0.05)
    with pytest.raises(ConfigError):
        fit_scaling_exponent(cfg.replace(n_list=[4, 8]))


def test_envelope_blocks_must_not_overlap():
    cfg = small(envelope={"calibration_n": 4, "evaluation_n": [16], "calibration_replicas": 100})
    with pytest.raises(DomainError):
        check_envelope_domination(cfg, (500, 600))
    with pytest.raises(DomainError):
        check_envelope_domination(cfg, (5000, 5000))


def test_envelope_check_small():
    cfg = small(replicas=400, n_list=[4], t_list=[], r_list=[0.0, 0.5, 1.0],
                envelope={"calibration_n": 4, "evaluation_n": [16], "calibration_replicas": 400})
    rep = check_envelope_domination(cfg, (10_000, 10_400))
    assert rep.c_const > 0
    assert rep.streams["calibration_centering"] == (10_400, 10_800)
    for row in rep.calibration:
        if row.r > 0 and not row.censored:
            assert row.envelope >= row.estimate.value * (1 - 1e-12)
    assert len(rep.evaluation) == 3
