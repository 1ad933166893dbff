import math

import numpy as np
import pytest
from scipy.special import iv

import tnlab


def test_version_and_ids():
    assert tnlab.__version__
    assert "acw" in tnlab.experiment_ids()
    assert tnlab.criterion_ids() == [f"A{i}" for i in range(1, 10)]


def test_quadrature_matches_bessel_ratio():
    a, b, K = 1.0, -2.0, 1.5
    c = (a - b) / (4 * K * K)
    expected = 0.5 * (a + b) + 0.5 * (a - b) * iv(1, c) / iv(0, c)
    assert tnlab.acw_fk_quadrature(a, b, K) == pytest.approx(expected, abs=1e-12)


def test_acw_monte_carlo_is_reproducible():
    r1 = tnlab.acw_simulate(1.0, -2.0, 2.0, T=20, ensemble=4, seed=3, workers=1)
    r2 = tnlab.acw_simulate(1.0, -2.0, 2.0, T=20, ensemble=4, seed=3, workers=2)
    assert r1["members"] == r2["members"]
    assert abs(r1["value"] - tnlab.acw_fk_quadrature(1.0, -2.0, 2.0)) < 0.2


def test_sobolev_norm_against_numpy_fft():
    M = 24
    rng = np.random.default_rng(0)
    coeffs = np.zeros((M, M), complex)
    for k1 in range(-4, 5):
        for k2 in range(-4, 5):
            if (k1, k2) != (0, 0):
                coeffs[k1 % M, k2 % M] = rng.normal() + 1j * rng.normal()
    u = np.real(np.fft.ifft2(coeffs)) * M * M
    uhat = np.fft.fft2(u) / (M * M)
    k = np.fft.fftfreq(M, 1.0 / M)
    k2 = (2 * np.pi) ** 2 * (k[:, None] ** 2 + k[None, :] ** 2)
    for s in (0.0, -1.0, 1.0):
        w = np.where(k2 > 0, np.power(np.where(k2 > 0, k2, 1.0), s), 0.0)
        expected = math.sqrt(np.sum(w * np.abs(uhat) ** 2))
        assert tnlab.sobolev_norm(u, s) == pytest.approx(expected, rel=1e-10)


def test_single_mode_threshold():
    N = tnlab.normalization_constant("single_mode", [1, 1])
    assert N == pytest.approx(2.0)
    assert tnlab.steady_state(0.6)["order_parameter"] < 1e-6
    assert tnlab.steady_state(0.3)["order_parameter"] > 0.05
    report = tnlab.stability_report(0.3)
    assert report["max_eigenvalue"] == pytest.approx(8 * math.pi**2 * 0.2, rel=1e-12)
    assert math.isfinite(report["K_crit"]) and report["K_crit"] > 0


def test_config_round_trip_and_errors():
    resolved = tnlab.resolve_config("acw")
    assert resolved["acw"]["K"] == [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
    assert tnlab.resolve_config("acw", resolved) == resolved
    with pytest.raises(tnlab.InputError, match="acw.bogus"):
        tnlab.resolve_config("acw", {"acw": {"bogus": 1}})


def test_run_and_check(tmp_path):
    cfg = {"acw": {"K": [0, 1], "T": 5, "ensemble": 2}}
    m = tnlab.run_experiment("acw", cfg, seed=5, workers=1, out_dir=tmp_path)
    assert m["config"]["seed"] == 5
    assert (tmp_path / "acw.csv").exists()
    report = {c["id"]: c["status"] for c in tnlab.check_acceptance([m])}
    assert report["A1"] == "fail"
    assert report["A2"] == "missing"
    assert all(c["status"] == "missing" for c in tnlab.check_acceptance([]))
