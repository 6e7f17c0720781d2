"""Per-arm sufficient statistics and the ML-assisted mean estimator.

The estimator combines the online rewards R with surrogate predictions R_hat
observed alongside them and an offline pool of surrogate-only predictions:

    mu_mla = mean(R) - lambda_hat * (mean(R_hat) - mean_off(R_hat))
    lambda_hat = N / (n + N) * cov(R, R_hat) / var(R_hat)

which equals the intercept of regressing R on R_hat centered at the pooled
online+offline surrogate mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateRegressorError, DomainError, InsufficientDataError
from .stats_core import significance_level, t_quantile


@dataclass
class ArmStatistics:
    """Running statistics of one arm's (R, R_hat) stream plus its offline pool.

    Second moments are kept centered (Welford updates) so that large reward
    offsets do not cancel catastrophically; the raw sums are exposed as
    derived properties.
    """

    n: int = 0
    mean_r: float = 0.0
    mean_rhat: float = 0.0
    m2_r: float = 0.0
    m2_rhat: float = 0.0
    c_r_rhat: float = 0.0
    n_off: int = 0
    sum_rhat_off: float = 0.0

    def observe(self, r: float, rhat: float) -> "ArmStatistics":
        self.n += 1
        dr = r - self.mean_r
        dh = rhat - self.mean_rhat
        self.mean_r += dr / self.n
        self.mean_rhat += dh / self.n
        self.m2_r += dr * (r - self.mean_r)
        self.m2_rhat += dh * (rhat - self.mean_rhat)
        self.c_r_rhat += dr * (rhat - self.mean_rhat)
        return self

    def ingest_offline(self, surrogates: Iterable[float]) -> "ArmStatistics":
        if not isinstance(surrogates, (np.ndarray, Sequence)):
            surrogates = list(surrogates)
        values = np.asarray(surrogates, dtype=float).ravel()
        if values.size:
            self.n_off += int(values.size)
            self.sum_rhat_off = math.fsum([self.sum_rhat_off, *values.tolist()])
        return self

    @classmethod
    def from_samples(cls, rewards, surrogates, offline=()) -> "ArmStatistics":
        """Build statistics in one pass over stored arrays (two-pass moments)."""
        r = np.asarray(rewards, dtype=float).ravel()
        h = np.asarray(surrogates, dtype=float).ravel()
        if r.shape != h.shape:
            raise ValueError("rewards and surrogates must have equal length")
        stats = cls()
        if r.size:
            mr, mh = r.mean(), h.mean()
            dr, dh = r - mr, h - mh
            stats.n = int(r.size)
            stats.mean_r, stats.mean_rhat = float(mr), float(mh)
            stats.m2_r = float(dr @ dr)
            stats.m2_rhat = float(dh @ dh)
            stats.c_r_rhat = float(dr @ dh)
        off = np.asarray(offline, dtype=float).ravel()
        if off.size:
            stats.n_off = int(off.size)
            stats.sum_rhat_off = float(off.sum())
        return stats

    def copy(self) -> "ArmStatistics":
        return ArmStatistics(**self.__dict__)

    @property
    def sum_r(self) -> float:
        return self.n * self.mean_r

    @property
    def sum_rhat(self) -> float:
        return self.n * self.mean_rhat

    @property
    def sum_r2(self) -> float:
        return self.m2_r + self.n * self.mean_r ** 2

    @property
    def sum_rhat2(self) -> float:
        return self.m2_rhat + self.n * self.mean_rhat ** 2

    @property
    def sum_r_rhat(self) -> float:
        return self.c_r_rhat + self.n * self.mean_r * self.mean_rhat


@dataclass(frozen=True)
class MlaEstimate:
    lambda_hat: float
    mla_mean: float
    pooled_mean: float
    z: float
    sigma_r2: float
    sigma_eps2: float
    slope: float
    n: int
    n_off: int


def estimate(stats: ArmStatistics) -> MlaEstimate:
    """Compute the ML-assisted mean and its variance components.

    Raises InsufficientDataError for n < 3 and DegenerateRegressorError
    when every online surrogate is identical.
    """
    n, big_n = stats.n, stats.n_off
    if n < 3:
        raise InsufficientDataError(f"estimate needs at least 3 online pulls, got {n}")
    sxx = stats.m2_rhat
    if not sxx > 0:
        raise DegenerateRegressorError("online surrogate rewards have zero sample variance")
    sxr = stats.c_r_rhat
    srr = max(stats.m2_r, 0.0)
    slope = sxr / sxx

    if big_n > 0:
        mean_off = stats.sum_rhat_off / big_n
        lam = big_n / (n + big_n) * slope
        mla = stats.mean_r - lam * (stats.mean_rhat - mean_off)
        pooled = (stats.sum_rhat + stats.sum_rhat_off) / (n + big_n)
    else:
        lam, mla, pooled = 0.0, stats.mean_r, stats.mean_rhat

    z = 1.0 + n * (stats.mean_rhat - pooled) ** 2 / sxx
    rss = max(srr - sxr * sxr / sxx, 0.0)
    return MlaEstimate(
        lambda_hat=lam,
        mla_mean=mla,
        pooled_mean=pooled,
        z=z,
        sigma_r2=srr / (n - 1),
        sigma_eps2=rss / (n - 2),
        slope=slope,
        n=n,
        n_off=big_n,
    )


def estimate_with_fallback(stats: ArmStatistics) -> MlaEstimate:
    """``estimate`` that degrades to the plain sample mean on a constant regressor.

    With all online surrogates equal the regression slope is undefined; the
    arm is then scored as if lambda_hat = 0, Z = 1 and the residual variance
    is the total variance rescaled to n - 2 degrees of freedom.
    """
    try:
        return estimate(stats)
    except DegenerateRegressorError:
        n = stats.n
        sigma_r2 = max(stats.m2_r, 0.0) / (n - 1)
        return MlaEstimate(
            lambda_hat=0.0,
            mla_mean=stats.mean_r,
            pooled_mean=stats.mean_rhat,
            z=1.0,
            sigma_r2=sigma_r2,
            sigma_eps2=sigma_r2 * (n - 1) / (n - 2),
            slope=0.0,
            n=n,
            n_off=stats.n_off,
        )


def confidence_width(est: MlaEstimate) -> float:
    """sqrt(sigma_R^2 / (n + N)) + sqrt(Z sigma_eps^2 / n), before quantile scaling."""
    return math.sqrt(est.sigma_r2 / (est.n + est.n_off)) + math.sqrt(est.z * est.sigma_eps2 / est.n)


def upper_confidence_bound(est: MlaEstimate, delta: float) -> float:
    """Upper bound on the true mean holding with probability at least 1 - 2 delta."""
    if not 0 < delta < 0.5:
        raise DomainError(f"delta must lie in (0, 1/2), got {delta}")
    return est.mla_mean + t_quantile(est.n - 2, delta) * confidence_width(est)


def index_from_estimate(est: MlaEstimate, t: int) -> float:
    if est.n < 4:
        raise InsufficientDataError(f"the index needs n >= 4 pulls, got {est.n}")
    return upper_confidence_bound(est, significance_level(t))


def mla_ucb_index(stats: ArmStatistics, t: int) -> float:
    """MLA-UCB index of one arm at time step ``t`` (t >= 2, n >= 4)."""
    return index_from_estimate(estimate(stats), t)


def ols_intercept_oracle(online_pairs: Sequence[tuple[float, float]],
                         offline_surrogates: Sequence[float]) -> float:
    """Intercept of R ~ 1 + (R_hat - pooled surrogate mean), via normal equations.

    Independent check on :func:`estimate`; stores the samples explicitly.
    """
    pairs = np.asarray(online_pairs, dtype=float).reshape(-1, 2)
    off = np.asarray(offline_surrogates, dtype=float).ravel()
    if pairs.shape[0] < 3:
        raise InsufficientDataError("the oracle needs at least 3 online pairs")
    r, h = pairs[:, 0], pairs[:, 1]
    pooled = (h.sum() + off.sum()) / (h.size + off.size)
    x = np.column_stack([np.ones_like(h), h - pooled])
    gram = x.T @ x
    # gram is singular exactly when the centered regressor is constant
    if np.ptp(h) == 0:
        raise DegenerateRegressorError("singular normal equations")
    coef = np.linalg.solve(gram, x.T @ r)
    return float(coef[0])
