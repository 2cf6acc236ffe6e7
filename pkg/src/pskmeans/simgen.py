"""Synthetic clustered time series: six signal shapes, three noise models, gaps.

Series of class ``c`` follow ``alpha_i * shape_c(x) + beta_i + noise`` on an
equispaced grid in [0, 1], with ``alpha_i ~ N(4, s_alpha^2)``,
``beta_i ~ N(0, s_beta^2)`` and ``s_alpha, s_beta ~ U(0.3, 1)``. The noise sd
of each series is ``U(0, 0.5)``; correlated scenarios use a stationary AR(1)
process whose *marginal* sd is that value.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, InvalidClassError

log = logging.getLogger(__name__)

CLASS_NAMES = ("sin", "cubic", "neg_pow", "cos", "exp", "lin")
DEFAULT_CLASS_SIZES = (90, 50, 100, 25, 60, 35)
SCENARIOS = {"iid": 0.0, "ar_05": 0.5, "ar_09": 0.9}


def _shape(cls: int, x):
    if cls == 0:
        return np.sin(4 * np.pi * x)
    if cls == 1:
        return (x + 0.73) ** 3
    if cls == 2:
        return (x + 0.5) ** -1.5
    if cls == 3:
        return np.cos(2 * np.pi * x)
    if cls == 4:
        return np.exp(-6 * x)
    if cls == 5:
        return -(x - 0.5)
    raise InvalidClassError(f"class must be in 0..5, got {cls}")


def signal(cls: int, alpha: float, beta: float, x):
    """Noise-free value of class ``cls`` (0 sin, 1 cubic, 2 neg-pow, 3 cos, 4 exp, 5 lin)."""
    if int(cls) != cls:
        raise InvalidClassError(f"class must be an integer, got {cls}")
    x = np.asarray(x, dtype=np.float64)
    out = alpha * _shape(int(cls), x) + beta
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SimConfig:
    n_points: int = 100
    class_sizes: tuple = DEFAULT_CLASS_SIZES
    scenario: str = "iid"
    missing: tuple | None = None
    seed: int = 0
    min_observed: int = 4
    per_series_scales: bool = False

    def __post_init__(self):
        object.__setattr__(self, "class_sizes", tuple(int(c) for c in self.class_sizes))
        if self.missing is not None:
            object.__setattr__(self, "missing", tuple(float(m) for m in self.missing))
        self.validate()

    def validate(self):
        if self.n_points < 2:
            raise ConfigError(f"n_points must be >= 2, got {self.n_points}")
        if len(self.class_sizes) != len(CLASS_NAMES) or min(self.class_sizes) < 1:
            raise ConfigError(f"need six class sizes >= 1, got {self.class_sizes}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {sorted(SCENARIOS)}, got {self.scenario!r}")
        if self.missing is not None:
            if len(self.missing) != 2:
                raise ConfigError("missing must be a (min_frac, max_frac) pair")
            lo, hi = self.missing
            if not 0 <= lo <= hi < 1:
                raise ConfigError(f"need 0 <= min_frac <= max_frac < 1, got {self.missing}")

    @property
    def rho(self) -> float:
        return SCENARIOS[self.scenario]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_sizes"] = list(self.class_sizes)
        d["missing"] = None if self.missing is None else list(self.missing)
        return d


@dataclass(frozen=True)
class SimDataset:
    x: np.ndarray
    Y: np.ndarray
    mask: np.ndarray
    true_labels: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    noise_sds: np.ndarray
    sigma_alpha: np.ndarray
    sigma_beta: np.ndarray
    signals: np.ndarray = field(repr=False)
    config: SimConfig = None

    @property
    def n_series(self) -> int:
        return self.Y.shape[1]

    @property
    def series_ids(self) -> list[str]:
        width = len(str(self.n_series - 1))
        return [f"{CLASS_NAMES[c]}_{i:0{width}d}" for i, c in enumerate(self.true_labels)]

    def missing_fractions(self) -> np.ndarray:
        return self.mask.mean(axis=0)


def ar1_noise(n: int, rho: float, sd: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary AR(1) path with lag-one correlation ``rho`` and marginal sd ``sd``."""
    z = rng.standard_normal(n)
    if rho == 0.0:
        return sd * z
    innov = sd * math.sqrt(1.0 - rho * rho) * z
    innov[0] = sd * z[0]  # start in the stationary distribution
    return lfilter([1.0], [1.0, -rho], innov)


def _missing_count(n: int, lo: float, hi: float, min_observed: int, rng) -> int:
    frac = rng.uniform(lo, hi)
    count = int(round(frac * n))
    count = min(max(count, math.ceil(lo * n - 1e-9)), math.floor(hi * n + 1e-9))
    if n - count < min_observed:
        clamped = max(n - min_observed, 0)
        log.info("missing count %d leaves fewer than %d observed points; clamped to %d",
                 count, min_observed, clamped)
        count = clamped
    return count


def generate_dataset(config: SimConfig) -> SimDataset:
    """Draw one dataset; identical configs give bit-identical output."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_points
    x = np.linspace(0.0, 1.0, n)
    labels = np.repeat(np.arange(len(CLASS_NAMES)), config.class_sizes)
    n_series = labels.size

    if config.per_series_scales:
        s_alpha = rng.uniform(0.3, 1.0, n_series)
        s_beta = rng.uniform(0.3, 1.0, n_series)
    else:
        s_alpha = np.full(n_series, rng.uniform(0.3, 1.0))
        s_beta = np.full(n_series, rng.uniform(0.3, 1.0))
    alphas = rng.normal(4.0, s_alpha)
    betas = rng.normal(0.0, s_beta)
    noise_sds = rng.uniform(0.0, 0.5, n_series)

    signals = np.empty((n, n_series))
    Y = np.empty((n, n_series))
    mask = np.zeros((n, n_series), dtype=bool)
    for i in range(n_series):
        signals[:, i] = signal(labels[i], alphas[i], betas[i], x)
        Y[:, i] = signals[:, i] + ar1_noise(n, config.rho, noise_sds[i], rng)
        if config.missing is not None:
            count = _missing_count(n, *config.missing, config.min_observed, rng)
            mask[rng.choice(n, size=count, replace=False), i] = True
    Y[mask] = np.nan
    return SimDataset(x, Y, mask, labels, alphas, betas, noise_sds, s_alpha, s_beta,
                      signals, config)
