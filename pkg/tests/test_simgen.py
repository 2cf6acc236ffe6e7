import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pskmeans.errors import ConfigError, InvalidClassError
from pskmeans.simgen import (CLASS_NAMES, DEFAULT_CLASS_SIZES, SimConfig, _missing_count,
                             ar1_noise, generate_dataset, signal)


def test_signal_examples():
    assert signal(0, 3.7, 1.25, 0.0) == 1.25
    assert signal(1, 4.0, 0.0, 0.27) == pytest.approx(4.0, rel=1e-14)
    assert signal(2, 4.0, 1.0, 0.5) == pytest.approx(5.0, rel=1e-14)
    assert signal(5, 2.9, -0.4, 0.5) == -0.4
    assert signal(3, 2.0, 0.0, 0.0) == 2.0
    assert signal(4, 1.0, 0.0, 0.0) == 1.0


def test_signal_invalid_class():
    for bad in (-1, 6, 1.5):
        with pytest.raises(InvalidClassError):
            signal(bad, 1.0, 0.0, 0.5)


def test_default_dataset_shape():
    ds = generate_dataset(SimConfig(seed=5))
    assert ds.Y.shape == (100, 360)
    np.testing.assert_array_equal(np.bincount(ds.true_labels), DEFAULT_CLASS_SIZES)
    assert DEFAULT_CLASS_SIZES == (90, 50, 100, 25, 60, 35)
    assert not ds.mask.any()
    np.testing.assert_array_equal(ds.x, np.linspace(0, 1, 100))
    assert len(set(ds.series_ids)) == 360


def test_draw_distributions():
    ds = generate_dataset(SimConfig(seed=2, class_sizes=(2000,) * 6))
    assert np.unique(ds.sigma_alpha).size == 1 and np.unique(ds.sigma_beta).size == 1
    sa, sb = ds.sigma_alpha[0], ds.sigma_beta[0]
    assert 0.3 <= sa <= 1 and 0.3 <= sb <= 1
    assert ds.alphas.mean() == pytest.approx(4.0, abs=4 * sa / np.sqrt(12000))
    assert ds.alphas.std() == pytest.approx(sa, rel=0.05)
    assert ds.betas.std() == pytest.approx(sb, rel=0.05)
    assert ds.noise_sds.min() >= 0 and ds.noise_sds.max() <= 0.5
    per = generate_dataset(SimConfig(seed=2, per_series_scales=True))
    assert np.unique(per.sigma_alpha).size == 360


@pytest.mark.parametrize("scenario", ["iid", "ar_05", "ar_09"])
def test_missing_fraction_bounds(scenario):
    ds = generate_dataset(SimConfig(scenario=scenario, missing=(0.10, 0.50), seed=1))
    frac = ds.missing_fractions()
    assert frac.min() >= 0.10 and frac.max() <= 0.50
    assert np.array_equal(np.isnan(ds.Y), ds.mask)
    # fractions actually spread over the range
    assert frac.min() < 0.2 and frac.max() > 0.4


def test_missing_clamp_keeps_enough_points():
    ds = generate_dataset(SimConfig(n_points=6, class_sizes=(3,) * 6, missing=(0.9, 0.95), seed=0))
    assert (~ds.mask).sum(axis=0).min() >= 4
    rng = np.random.default_rng(0)
    assert _missing_count(10, 0.9, 0.95, 4, rng) == 6


@pytest.mark.parametrize("scenario,rho", [("ar_05", 0.5), ("ar_09", 0.9)])
def test_ar_probe_autocorrelation_and_variance(scenario, rho):
    cfg = SimConfig(n_points=100_000, class_sizes=(1,) * 6, scenario=scenario, seed=17)
    ds = generate_dataset(cfg)
    for i in range(6):
        e = ds.Y[:, i] - ds.signals[:, i]
        e0 = e - e.mean()
        r1 = (e0[1:] @ e0[:-1]) / (e0 @ e0)
        assert r1 == pytest.approx(rho, abs=0.02)
        assert e.var() == pytest.approx(ds.noise_sds[i] ** 2, rel=0.05)


def test_ar1_noise_marginal_sd():
    rng = np.random.default_rng(0)
    paths = np.array([ar1_noise(50, 0.9, 0.3, rng) for _ in range(4000)])
    # stationary from the first sample onward
    np.testing.assert_allclose(paths.std(axis=0)[[0, 10, 49]], 0.3, rtol=0.06)


def test_iid_noise_uncorrelated():
    ds = generate_dataset(SimConfig(n_points=100_000, class_sizes=(1,) * 6, seed=4))
    e = ds.Y[:, 0] - ds.signals[:, 0]
    e0 = e - e.mean()
    assert abs((e0[1:] @ e0[:-1]) / (e0 @ e0)) < 0.02


def test_seed_determinism():
    cfg = SimConfig(scenario="ar_05", missing=(0.1, 0.5), seed=123)
    a, b = generate_dataset(cfg), generate_dataset(cfg)
    assert a.Y.tobytes() == b.Y.tobytes()
    assert a.mask.tobytes() == b.mask.tobytes()
    assert a.alphas.tobytes() == b.alphas.tobytes()
    c = generate_dataset(SimConfig(scenario="ar_05", missing=(0.1, 0.5), seed=124))
    assert a.Y.tobytes() != c.Y.tobytes()


def test_invalid_config():
    for kw in ({"scenario": "ar_07"}, {"class_sizes": (1, 2, 3)}, {"class_sizes": (0, 1, 1, 1, 1, 1)},
               {"missing": (0.5, 0.1)}, {"missing": (0.1, 1.0)}, {"n_points": 1}):
        with pytest.raises(ConfigError):
            generate_dataset(SimConfig(**kw))


def test_config_dict_roundtrip():
    cfg = SimConfig(scenario="ar_09", missing=(0.1, 0.5), seed=9)
    d = cfg.to_dict()
    assert d["scenario"] == "ar_09" and d["seed"] == 9
    assert list(d["missing"]) == [0.1, 0.5]
    assert len(CLASS_NAMES) == 6


@settings(max_examples=40, deadline=None)
@given(n=st.integers(5, 200), lo=st.floats(0, 0.9), width=st.floats(0, 0.09), seed=st.integers(0, 10**6))
def test_missing_count_property(n, lo, width, seed):
    hi = lo + width
    count = _missing_count(n, lo, hi, 4, np.random.default_rng(seed))
    assert 0 <= count <= n - 4
    feasible = np.ceil(lo * n - 1e-9) <= np.floor(hi * n + 1e-9)
    if feasible and n - int(np.floor(hi * n)) >= 4:
        assert lo * n - 1e-9 <= count <= hi * n + 1e-9
