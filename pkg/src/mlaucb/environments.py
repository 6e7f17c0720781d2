"""Reward-generating processes and offline surrogate pools.

Two environments are provided:

* :class:`GaussianEnvironment` - each arm emits jointly Gaussian
  (reward, surrogate) pairs.
* :class:`FeatureEnvironment` - each arm's reward is
  ``sin(w1 x1^2 + w2 x2^2) + eps`` for x ~ N(0, I2), and the surrogate is a
  fitted predictor applied to x. Features never leave the environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import predictors
from .errors import ConfigurationError, ProtocolError
from .stats_core import RandomStream, sample_bivariate, sample_bivariate_many


@dataclass(frozen=True)
class GaussianArmSpec:
    mu: float
    mu_tilde: float
    sigma: float = 1.0
    sigma_tilde: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}", "sigma")
        if not self.sigma_tilde > 0:
            raise ConfigurationError(f"sigma_tilde must be positive, got {self.sigma_tilde}", "sigma_tilde")
        if not abs(self.rho) <= 1:
            raise ConfigurationError(f"|rho| must be at most 1, got {self.rho}", "rho")


@dataclass(frozen=True)
class FeatureArmSpec:
    w: tuple[float, float]
    noise_sigma: float
    predictor: Optional[object] = None


@dataclass(frozen=True)
class OfflinePool:
    pools: tuple[np.ndarray, ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(p.size) for p in self.pools)

    def __len__(self):
        return len(self.pools)

    def __getitem__(self, k):
        return self.pools[k]


def gaussian_pull(spec: GaussianArmSpec, stream: RandomStream) -> tuple[float, float]:
    return sample_bivariate(spec, stream)


def feature_reward(w, x, eps=0.0):
    """sin(w1 * x1^2 + w2 * x2^2) + eps; ``x`` may be a (2,) vector or (m, 2) batch."""
    x = np.asarray(x, dtype=float)
    out = np.sin(w[0] * x[..., 0] ** 2 + w[1] * x[..., 1] ** 2) + eps
    return float(out) if np.ndim(out) == 0 else out


def feature_mean(w) -> float:
    """E[sin(w1 x1^2 + w2 x2^2)] for x ~ N(0, I2).

    Uses E[exp(i a x^2)] = (1 - 2 i a)^(-1/2) for standard normal x.
    """
    phi = (1 - 2j * w[0]) ** -0.5 * (1 - 2j * w[1]) ** -0.5
    return float(phi.imag)


def _feature_draws(spec: FeatureArmSpec, stream: RandomStream, size: int):
    if spec.predictor is None:
        raise ProtocolError("the arm's predictor must be fitted before pulling")
    draws = stream.normal((size, 3))
    x = draws[:, :2]
    eps = spec.noise_sigma * draws[:, 2]
    reward = feature_reward(spec.w, x, eps)
    return np.atleast_1d(reward), np.atleast_1d(spec.predictor.predict(x))


def feature_pull(spec: FeatureArmSpec, stream: RandomStream) -> tuple[float, float]:
    r, rhat = _feature_draws(spec, stream, 1)
    return float(r[0]), float(rhat[0])


class GaussianEnvironment:
    def __init__(self, arms: Sequence[GaussianArmSpec]):
        if not arms:
            raise ConfigurationError("at least one arm is required", "gaussian.mu")
        self.arms = tuple(arms)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def true_means(self) -> np.ndarray:
        return np.array([a.mu for a in self.arms])

    def pull(self, arm: int, stream: RandomStream) -> tuple[float, float]:
        return gaussian_pull(self.arms[arm], stream)

    def draw_online(self, arm: int, stream: RandomStream, size: int):
        return sample_bivariate_many(self.arms[arm], stream, size)

    def draw_surrogates(self, arm: int, stream: RandomStream, size: int) -> np.ndarray:
        # same marginal as the online surrogate
        spec = self.arms[arm]
        return spec.mu_tilde + spec.sigma_tilde * stream.normal(size)


class FeatureEnvironment:
    def __init__(self, arms: Sequence[FeatureArmSpec]):
        if not arms:
            raise ConfigurationError("at least one arm is required", "feature.n_arms")
        self.arms = tuple(arms)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def true_means(self) -> np.ndarray:
        return np.array([feature_mean(a.w) for a in self.arms])

    def pull(self, arm: int, stream: RandomStream) -> tuple[float, float]:
        return feature_pull(self.arms[arm], stream)

    def draw_online(self, arm: int, stream: RandomStream, size: int):
        return _feature_draws(self.arms[arm], stream, size)

    def draw_surrogates(self, arm: int, stream: RandomStream, size: int) -> np.ndarray:
        # identical pipeline to online pulls; the rewards are discarded
        return _feature_draws(self.arms[arm], stream, size)[1]


def build_offline_pool(env, sizes: Sequence[int], streams: Sequence[RandomStream]) -> OfflinePool:
    """Draw ``sizes[k]`` offline surrogates for every arm from ``streams[k]``."""
    if len(sizes) != env.n_arms or len(streams) != env.n_arms:
        raise ConfigurationError("one offline size and stream per arm is required", "run.offline_size")
    pools = []
    for k, (size, stream) in enumerate(zip(sizes, streams)):
        if size < 0:
            raise ConfigurationError(f"offline size must be >= 0, got {size}", "run.offline_size")
        pools.append(env.draw_surrogates(k, stream, int(size)) if size else np.empty(0))
    return OfflinePool(tuple(pools))


def make_training_set(w, noise_sigma: float, size: int, stream: RandomStream) -> predictors.TrainingSet:
    draws = stream.normal((size, 3))
    x = draws[:, :2]
    return predictors.TrainingSet(x, feature_reward(w, x, noise_sigma * draws[:, 2]))


def build_feature_environment(
    n_arms: int = 5,
    noise_sigma: float = 0.2,
    predictor: str = "tree",
    train_size: int = 2000,
    weight_low: float = 0.5,
    weight_high: float = 1.5,
    weight_seed: int = 0,
    base_seed: int = 0,
    predictor_options: Optional[dict] = None,
) -> FeatureEnvironment:
    """Draw arm weights once and fit one predictor per arm.

    Weights come from their own seed; training data and predictor
    initialization use streams disjoint from any episode stream.
    """
    if n_arms < 1:
        raise ConfigurationError("n_arms must be >= 1", "feature.n_arms")
    if noise_sigma < 0:
        raise ConfigurationError("noise_sigma must be >= 0", "feature.noise_sigma")
    if train_size < 2:
        raise ConfigurationError("train_size must be >= 2", "feature.train_size")
    if not weight_low <= weight_high:
        raise ConfigurationError("weight_low must not exceed weight_high", "feature.weight_low")
    options = predictor_options or {}
    weights = RandomStream.for_role(weight_seed, "weights").uniform(weight_low, weight_high, (n_arms, 2))
    arms = []
    for k in range(n_arms):
        w = (float(weights[k, 0]), float(weights[k, 1]))
        train = make_training_set(w, noise_sigma, train_size,
                                  RandomStream.for_role(base_seed, "predictor_train", k))
        model = predictors.fit(predictor, train, RandomStream.for_role(base_seed, "predictor_init", k),
                               **options)
        arms.append(FeatureArmSpec(w, noise_sigma, model))
    return FeatureEnvironment(arms)


def average_rho2(env: FeatureEnvironment, size: int, stream: RandomStream) -> float:
    """Average over arms of the held-out squared correlation between surrogate and reward."""
    vals = []
    for k in range(env.n_arms):
        r, rhat = env.draw_online(k, stream, size)
        vals.append(predictors.empirical_rho2(rhat, r))
    return float(np.mean(vals))
