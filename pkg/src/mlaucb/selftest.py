"""Built-in property checks run by ``mlaucb selftest``.

Each check returns ``(passed, detail)``; :func:`run_all` prints one line per
check.
"""

from __future__ import annotations

import math

import numpy as np

from .environments import GaussianArmSpec, GaussianEnvironment
from .estimator import ArmStatistics, estimate, ols_intercept_oracle
from .stats_core import RandomStream, chk_quantile_bound, significance_level, t_quantile


def check_intercept_equivalence(seed: int, instances: int = 300):
    """ML-assisted mean equals the OLS intercept on the centered surrogate."""
    stream = RandomStream.for_role(seed, "selftest", "intercept")
    worst = 0.0
    for _ in range(instances):
        n = 3 + int(stream.uniform(0, 48))
        big_n = int(stream.uniform(0, 201))
        pairs = stream.normal((n, 2)) * stream.uniform(0.1, 5.0, 2) + stream.uniform(-5, 5, 2)
        off = stream.normal(big_n) * stream.uniform(0.1, 5.0) + stream.uniform(-5, 5)
        stats = ArmStatistics()
        for r, h in pairs.tolist():
            stats.observe(r, h)
        stats.ingest_offline(off)
        oracle = ols_intercept_oracle(pairs, off)
        worst = max(worst, abs(estimate(stats).mla_mean - oracle) / (1 + abs(oracle)))
    return worst <= 1e-8, f"max relative deviation {worst:.2e} over {instances} instances"


def check_moments(seed: int, datasets: int = 20_000, n: int = 20, big_n: int = 100, rho: float = 0.8):
    """Mean and variance of the estimator against their exact values."""
    spec = GaussianArmSpec(mu=1.0, mu_tilde=-2.0, sigma=1.0, sigma_tilde=2.0, rho=rho)
    env = GaussianEnvironment([spec])
    stream = RandomStream.for_role(seed, "selftest", "moments")
    r, h = env.draw_online(0, stream, datasets * n)
    off = env.draw_surrogates(0, stream, datasets * big_n).reshape(datasets, big_n)
    r, h = r.reshape(datasets, n), h.reshape(datasets, n)
    vals = np.array([estimate(ArmStatistics.from_samples(r[i], h[i], off[i])).mla_mean
                     for i in range(datasets)])
    mean, var = vals.mean(), vals.var(ddof=1)
    se_mean = math.sqrt(var / datasets)
    centered = vals - mean
    se_var = math.sqrt(max(np.mean(centered ** 4) - var ** 2, 0.0) / datasets)
    ez = 1 + big_n / ((n + big_n) * (n - 3))
    expected_var = rho ** 2 / (n + big_n) + ez * (1 - rho ** 2) / n
    ok = abs(mean - spec.mu) <= 4 * se_mean and abs(var - expected_var) <= 5 * se_var
    return ok, (f"mean {mean:.5f} (target {spec.mu}, se {se_mean:.5f}); "
                f"var {var:.6f} (target {expected_var:.6f}, se {se_var:.6f})")


def check_quantile_bound():
    """t quantile at level 1/(2 s sqrt(log s)) never exceeds the closed-form bound."""
    worst = math.inf
    for e in range(1, 7):
        s = 10.0 ** e
        for d in sorted({*range(2, 21), max(2, math.floor(math.log(s)))}):
            gap = chk_quantile_bound(d, s) - t_quantile(d, significance_level(s))
            worst = min(worst, gap)
    return worst >= 0, f"smallest gap {worst:.4f}"


def run_all(seed: int = 0) -> bool:
    checks = [
        ("intercept equivalence", lambda: check_intercept_equivalence(seed)),
        ("estimator moments", lambda: check_moments(seed)),
        ("quantile bound", check_quantile_bound),
    ]
    ok = True
    for name, fn in checks:
        passed, detail = fn()
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
